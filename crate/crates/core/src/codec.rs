//! Binary caches: a 5-byte magic, sections each prefixed by a little-endian
//! u32 length, and a trailing CRC32 of everything before it. Section 0 is
//! the caller's key (a config hash, say); a key mismatch or any corruption
//! makes the decoder refuse the file.
//!
//! `IVLK1` holds a complexity profile and optionally its kernel tables.
//! `IVLW1` holds labelled verdicts with their full certificates or
//! refutations, so they can be replayed after loading.

use fixedbitset::FixedBitSet;
use num_bigint::{BigInt, Sign};

use crate::classify::{Certificate, Escape, EscapeKind, Evidence, GrowthLevel, Horizon, Notion, Refutation, Verdict, Witness};
use crate::dynamics::{ControlSchedule, Scalar, StatePoint, SymbolicPoint, Q};
use crate::error::{IvlError, Result};
use crate::spanning::{ComplexityProfile, KernelRow, KernelTable, Mode, Optimality, ProfileEntry, Resolution};

pub const PROFILE_MAGIC: &[u8; 5] = b"IVLK1";
pub const WITNESS_MAGIC: &[u8; 5] = b"IVLW1";

fn bad(msg: &str) -> IvlError {
    IvlError::Codec(msg.to_string())
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u128(&mut self, v: u128) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.0.extend_from_slice(b);
    }
    fn str(&mut self, s: &str) {
        self.bytes(s.as_bytes());
    }
    fn int(&mut self, v: &BigInt) {
        let (sign, mag) = v.to_bytes_le();
        self.u8(match sign {
            Sign::Minus => 2,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        });
        self.bytes(&mag);
    }
    fn q(&mut self, r: &Q) {
        self.int(r.numer());
        self.int(r.denom());
    }
    fn scalar(&mut self, s: &Scalar) {
        match s {
            Scalar::Exact(r) => {
                self.u8(0);
                self.q(r);
            }
            Scalar::Approx { lo, hi } => {
                self.u8(1);
                self.int(lo);
                self.int(hi);
            }
        }
    }
    fn point(&mut self, p: &StatePoint) {
        match p {
            StatePoint::Real(s) => {
                self.u8(0);
                self.scalar(s);
            }
            StatePoint::Symbolic(sp) => {
                self.u8(1);
                self.bytes(sp.prefix());
                self.bytes(sp.cycle());
            }
        }
    }
    fn points(&mut self, ps: &[StatePoint]) {
        self.u32(ps.len() as u32);
        ps.iter().for_each(|p| self.point(p));
    }
    fn schedule(&mut self, s: &ControlSchedule) {
        self.bytes(s.prefix());
        self.bytes(s.cycle());
    }
    fn resolution(&mut self, r: &Resolution) {
        match r {
            Resolution::Step(h) => {
                self.u8(0);
                self.q(h);
            }
            Resolution::Depth(d) => {
                self.u8(1);
                self.usize(*d);
            }
        }
    }
    fn mode(&mut self, m: Mode) {
        self.u8(m as u8);
    }
    fn notion(&mut self, n: Notion) {
        self.u8(Notion::ALL.iter().position(|&x| x == n).unwrap() as u8);
    }
    fn escapes(&mut self, es: &[Escape]) {
        self.u32(es.len() as u32);
        for e in es {
            self.bytes(&e.prefix);
            self.point(&e.point);
            self.usize(e.index);
            self.scalar(&e.value);
            match &e.kind {
                EscapeKind::Sup => self.u8(0),
                EscapeKind::Mean => self.u8(1),
                EscapeKind::Trap { lo, hi, gap } => {
                    self.u8(2);
                    self.q(lo);
                    self.q(hi);
                    self.q(gap);
                }
            }
        }
    }
    fn verdict(&mut self, v: &Verdict) {
        match v {
            Verdict::Certified(c) => {
                self.u8(0);
                self.notion(c.notion);
                self.point(&c.point);
                self.q(&c.epsilon);
                self.q(&c.delta);
                self.u32(c.family.len() as u32);
                c.family.iter().for_each(|s| self.schedule(s));
                match &c.horizon {
                    Horizon::Steps(n) => {
                        self.u8(0);
                        self.usize(*n);
                    }
                    Horizon::Tail { burn_in, window } => {
                        self.u8(1);
                        self.usize(*burn_in);
                        self.usize(*window);
                    }
                }
                self.resolution(&c.resolution);
                self.u32(c.witnesses.len() as u32);
                for w in &c.witnesses {
                    self.point(&w.point);
                    self.usize(w.schedule);
                    self.scalar(&w.value);
                }
            }
            Verdict::Refuted(r) => {
                self.u8(1);
                self.notion(r.notion);
                self.point(&r.point);
                self.q(&r.epsilon);
                self.q(&r.delta);
                self.usize(r.horizon);
                self.resolution(&r.resolution);
                match &r.evidence {
                    Evidence::EveryWord(es) => {
                        self.u8(0);
                        self.escapes(es);
                    }
                    Evidence::UncoverablePoint { point, escapes } => {
                        self.u8(1);
                        self.point(point);
                        self.escapes(escapes);
                    }
                    Evidence::LocalGrowth(levels) => {
                        self.u8(2);
                        self.u32(levels.len() as u32);
                        for l in levels {
                            self.resolution(&l.resolution);
                            self.points(&l.witnesses);
                        }
                    }
                }
            }
            Verdict::Inconclusive(why) => {
                self.u8(2);
                self.str(why);
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| bad("truncated section"))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn done(&self) -> Result<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(bad("trailing bytes in section"))
        }
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| bad("length overflow"))
    }
    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }
    fn str(&mut self) -> Result<String> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| bad("invalid utf-8"))
    }
    fn count(&mut self) -> Result<usize> {
        let n = self.u32()? as usize;
        // Every element takes at least one byte.
        if n > self.buf.len() - self.pos {
            return Err(bad("element count exceeds section"));
        }
        Ok(n)
    }
    fn int(&mut self) -> Result<BigInt> {
        let sign = match self.u8()? {
            0 => Sign::NoSign,
            1 => Sign::Plus,
            2 => Sign::Minus,
            _ => return Err(bad("bad sign byte")),
        };
        Ok(BigInt::from_bytes_le(sign, self.bytes()?))
    }
    fn q(&mut self) -> Result<Q> {
        let n = self.int()?;
        let d = self.int()?;
        if d == BigInt::from(0) {
            return Err(bad("zero denominator"));
        }
        Ok(Q::new(n, d))
    }
    fn scalar(&mut self) -> Result<Scalar> {
        match self.u8()? {
            0 => Ok(Scalar::Exact(self.q()?)),
            1 => Ok(Scalar::Approx { lo: self.int()?, hi: self.int()? }),
            _ => Err(bad("bad scalar tag")),
        }
    }
    fn point(&mut self) -> Result<StatePoint> {
        match self.u8()? {
            0 => Ok(StatePoint::Real(self.scalar()?)),
            1 => {
                let prefix = self.bytes()?;
                let cycle = self.bytes()?;
                Ok(StatePoint::Symbolic(SymbolicPoint::new(prefix, cycle).map_err(|_| bad("bad symbolic point"))?))
            }
            _ => Err(bad("bad point tag")),
        }
    }
    fn points(&mut self) -> Result<Vec<StatePoint>> {
        (0..self.count()?).map(|_| self.point()).collect()
    }
    fn schedule(&mut self) -> Result<ControlSchedule> {
        let prefix = self.bytes()?;
        let cycle = self.bytes()?;
        Ok(if cycle.is_empty() { ControlSchedule::finite(prefix) } else { ControlSchedule::periodic(prefix, cycle) })
    }
    fn resolution(&mut self) -> Result<Resolution> {
        match self.u8()? {
            0 => Ok(Resolution::Step(self.q()?)),
            1 => Ok(Resolution::Depth(self.usize()?)),
            _ => Err(bad("bad resolution tag")),
        }
    }
    fn mode(&mut self) -> Result<Mode> {
        match self.u8()? {
            0 => Ok(Mode::Plain),
            1 => Ok(Mode::Mean),
            _ => Err(bad("bad mode tag")),
        }
    }
    fn notion(&mut self) -> Result<Notion> {
        Notion::ALL.get(self.u8()? as usize).copied().ok_or_else(|| bad("bad notion tag"))
    }
    fn escapes(&mut self) -> Result<Vec<Escape>> {
        (0..self.count()?)
            .map(|_| {
                let prefix = self.bytes()?.to_vec();
                let point = self.point()?;
                let index = self.usize()?;
                let value = self.scalar()?;
                let kind = match self.u8()? {
                    0 => EscapeKind::Sup,
                    1 => EscapeKind::Mean,
                    2 => EscapeKind::Trap { lo: self.q()?, hi: self.q()?, gap: self.q()? },
                    _ => return Err(bad("bad escape tag")),
                };
                Ok(Escape { prefix, point, index, value, kind })
            })
            .collect()
    }
    fn verdict(&mut self) -> Result<Verdict> {
        match self.u8()? {
            0 => {
                let notion = self.notion()?;
                let point = self.point()?;
                let epsilon = self.q()?;
                let delta = self.q()?;
                let family = (0..self.count()?).map(|_| self.schedule()).collect::<Result<_>>()?;
                let horizon = match self.u8()? {
                    0 => Horizon::Steps(self.usize()?),
                    1 => Horizon::Tail { burn_in: self.usize()?, window: self.usize()? },
                    _ => return Err(bad("bad horizon tag")),
                };
                let resolution = self.resolution()?;
                let witnesses = (0..self.count()?)
                    .map(|_| Ok(Witness { point: self.point()?, schedule: self.usize()?, value: self.scalar()? }))
                    .collect::<Result<_>>()?;
                Ok(Verdict::Certified(Certificate { notion, point, epsilon, delta, family, horizon, resolution, witnesses }))
            }
            1 => {
                let notion = self.notion()?;
                let point = self.point()?;
                let epsilon = self.q()?;
                let delta = self.q()?;
                let horizon = self.usize()?;
                let resolution = self.resolution()?;
                let evidence = match self.u8()? {
                    0 => Evidence::EveryWord(self.escapes()?),
                    1 => Evidence::UncoverablePoint { point: self.point()?, escapes: self.escapes()? },
                    2 => Evidence::LocalGrowth(
                        (0..self.count()?).map(|_| Ok(GrowthLevel { resolution: self.resolution()?, witnesses: self.points()? })).collect::<Result<_>>()?,
                    ),
                    _ => return Err(bad("bad evidence tag")),
                };
                Ok(Verdict::Refuted(Refutation { notion, point, epsilon, delta, horizon, resolution, evidence }))
            }
            2 => Ok(Verdict::Inconclusive(self.str()?)),
            _ => Err(bad("bad verdict tag")),
        }
    }
}

fn frame(magic: &[u8; 5], sections: &[Vec<u8>]) -> Vec<u8> {
    let mut out = magic.to_vec();
    for s in sections {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s);
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn unframe<'a>(magic: &[u8; 5], bytes: &'a [u8], key: &str) -> Result<Vec<&'a [u8]>> {
    if bytes.len() < magic.len() + 4 || &bytes[..magic.len()] != magic {
        return Err(bad("bad magic"));
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
        return Err(bad("checksum mismatch"));
    }
    let mut r = Reader { buf: body, pos: magic.len() };
    let mut sections = Vec::new();
    while r.pos < body.len() {
        sections.push(r.bytes()?);
    }
    match sections.first() {
        Some(k) if *k == key.as_bytes() => Ok(sections.split_off(1)),
        Some(_) => Err(bad("cache key mismatch")),
        None => Err(bad("missing key section")),
    }
}

fn opt_tag(o: Optimality) -> u8 {
    match o {
        Optimality::Exact => 0,
        Optimality::GreedyUpper => 1,
        Optimality::LowerBound => 2,
    }
}

fn encode_table(t: &KernelTable) -> Vec<u8> {
    let mut w = Writer::default();
    w.usize(t.horizon);
    w.q(&t.epsilon);
    w.mode(t.mode);
    w.usize(t.grid_len);
    w.u32(t.rows.len() as u32);
    for r in &t.rows {
        w.bytes(&r.word);
        w.u32(r.bits.as_slice().len() as u32);
        r.bits.as_slice().iter().for_each(|b| w.u64(*b as u64));
        w.u128(r.multiplicity);
    }
    w.u128(t.pruned);
    w.usize(t.indeterminate);
    w.u8(t.complete as u8);
    w.0
}

fn decode_table(buf: &[u8]) -> Result<KernelTable> {
    let mut r = Reader { buf, pos: 0 };
    let horizon = r.usize()?;
    let epsilon = r.q()?;
    let mode = r.mode()?;
    let grid_len = r.usize()?;
    let rows = (0..r.count()?)
        .map(|_| {
            let word = r.bytes()?.to_vec();
            let blocks = (0..r.count()?).map(|_| Ok(r.u64()? as usize)).collect::<Result<Vec<usize>>>()?;
            let mut bits = FixedBitSet::with_capacity_and_blocks(grid_len, blocks);
            bits.grow(grid_len);
            Ok(KernelRow { word, bits, multiplicity: r.u128()? })
        })
        .collect::<Result<_>>()?;
    let t = KernelTable { horizon, epsilon, mode, grid_len, rows, pruned: r.u128()?, indeterminate: r.usize()?, complete: r.u8()? != 0 };
    r.done()?;
    Ok(t)
}

/// `IVLK1` file for a profile plus any kernel tables worth keeping.
pub fn encode_profile(key: &str, profile: &ComplexityProfile, tables: &[KernelTable]) -> Vec<u8> {
    let mut w = Writer::default();
    w.q(&profile.epsilon);
    w.mode(profile.mode);
    w.resolution(&profile.resolution);
    w.usize(profile.grid_len);
    w.u32(profile.entries.len() as u32);
    for e in &profile.entries {
        w.usize(e.n);
        w.usize(e.r);
        w.u8(opt_tag(e.tag));
        w.usize(e.lower_bound);
        w.u8(match e.refinement {
            None => 0,
            Some(false) => 1,
            Some(true) => 2,
        });
        w.u32(e.words.len() as u32);
        e.words.iter().for_each(|x| w.bytes(x));
    }
    let mut sections = vec![key.as_bytes().to_vec(), w.0];
    sections.extend(tables.iter().map(encode_table));
    frame(PROFILE_MAGIC, &sections)
}

pub fn decode_profile(bytes: &[u8], key: &str) -> Result<(ComplexityProfile, Vec<KernelTable>)> {
    let sections = unframe(PROFILE_MAGIC, bytes, key)?;
    let (head, tables) = sections.split_first().ok_or_else(|| bad("missing profile section"))?;
    let mut r = Reader { buf: head, pos: 0 };
    let epsilon = r.q()?;
    let mode = r.mode()?;
    let resolution = r.resolution()?;
    let grid_len = r.usize()?;
    let entries = (0..r.count()?)
        .map(|_| {
            let n = r.usize()?;
            let rr = r.usize()?;
            let tag = match r.u8()? {
                0 => Optimality::Exact,
                1 => Optimality::GreedyUpper,
                2 => Optimality::LowerBound,
                _ => return Err(bad("bad optimality tag")),
            };
            let lower_bound = r.usize()?;
            let refinement = match r.u8()? {
                0 => None,
                1 => Some(false),
                2 => Some(true),
                _ => return Err(bad("bad refinement tag")),
            };
            let words = (0..r.count()?).map(|_| Ok(r.bytes()?.to_vec())).collect::<Result<_>>()?;
            Ok(ProfileEntry { n, r: rr, tag, lower_bound, refinement, words })
        })
        .collect::<Result<_>>()?;
    r.done()?;
    let tables = tables.iter().map(|t| decode_table(t)).collect::<Result<_>>()?;
    Ok((ComplexityProfile { epsilon, mode, resolution, grid_len, entries }, tables))
}

/// `IVLW1` file of labelled verdicts.
pub fn encode_witnesses(key: &str, verdicts: &[(String, Verdict)]) -> Vec<u8> {
    let mut sections = vec![key.as_bytes().to_vec()];
    for (label, v) in verdicts {
        let mut w = Writer::default();
        w.str(label);
        w.verdict(v);
        sections.push(w.0);
    }
    frame(WITNESS_MAGIC, &sections)
}

pub fn decode_witnesses(bytes: &[u8], key: &str) -> Result<Vec<(String, Verdict)>> {
    unframe(WITNESS_MAGIC, bytes, key)?
        .into_iter()
        .map(|s| {
            let mut r = Reader { buf: s, pos: 0 };
            let out = (r.str()?, r.verdict()?);
            r.done()?;
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::q;

    fn profile() -> ComplexityProfile {
        ComplexityProfile {
            epsilon: q(1, 10),
            mode: Mode::Mean,
            resolution: Resolution::Step(q(1, 512)),
            grid_len: 129,
            entries: vec![ProfileEntry { n: 3, r: 2, tag: Optimality::Exact, lower_bound: 2, refinement: Some(true), words: vec![vec![0, 0, 0], vec![1, 1, 0]] }],
        }
    }

    #[test]
    fn profile_round_trip_and_key() {
        let mut bits = FixedBitSet::with_capacity(70);
        bits.insert(3);
        bits.insert(69);
        let t = KernelTable { horizon: 3, epsilon: q(1, 10), mode: Mode::Mean, grid_len: 70, rows: vec![KernelRow { word: vec![0, 1, 1], bits, multiplicity: 5 }], pruned: 3, indeterminate: 0, complete: true };
        let bytes = encode_profile("k", &profile(), std::slice::from_ref(&t));
        let (p, ts) = decode_profile(&bytes, "k").unwrap();
        assert_eq!(p, profile());
        assert_eq!(ts, vec![t]);
        assert!(decode_profile(&bytes, "other").is_err());
    }

    #[test]
    fn every_flipped_byte_is_caught() {
        let bytes = encode_profile("key", &profile(), &[]);
        for i in 0..bytes.len() {
            let mut b = bytes.clone();
            b[i] ^= 0x5a;
            assert!(decode_profile(&b, "key").is_err(), "byte {i}");
        }
        assert!(decode_profile(&bytes[..bytes.len() - 1], "key").is_err());
    }

    #[test]
    fn witness_round_trip() {
        let v = Verdict::Refuted(Refutation {
            notion: Notion::MEI,
            point: StatePoint::real(q(3, 8)),
            epsilon: q(1, 32),
            delta: q(1, 128),
            horizon: 24,
            resolution: Resolution::Step(q(1, 1024)),
            evidence: Evidence::EveryWord(vec![Escape {
                prefix: vec![1],
                point: StatePoint::real(q(3, 8)),
                index: 1,
                value: Scalar::Approx { lo: BigInt::from(-3), hi: BigInt::from(7) },
                kind: EscapeKind::Trap { lo: q(0, 1), hi: q(1, 8), gap: q(1, 8) },
            }]),
        });
        let items = vec![("A5 MEI 3/8".to_string(), v), ("x".to_string(), Verdict::Inconclusive("budget".into()))];
        assert_eq!(decode_witnesses(&encode_witnesses("w", &items), "w").unwrap(), items);
    }
}
