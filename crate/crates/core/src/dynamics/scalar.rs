//! Exact rationals with a fallback to outward-rounded fixed-point intervals.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{IvlError, Result};

/// Fractional bits of the approximate representation.
pub const APPROX_BITS: u32 = 128;

/// Exact values whose numerator and denominator together exceed this many
/// bits are demoted to intervals. Quadratic branches double the size each step.
pub const EXACT_BIT_LIMIT: u64 = 512;

pub type Q = BigRational;

/// A real number, either exact or enclosed by `[lo, hi] / 2^APPROX_BITS`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Exact(Q),
    Approx { lo: BigInt, hi: BigInt },
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn unit() -> BigInt {
    BigInt::one() << APPROX_BITS
}

fn floor_fixed(r: &Q) -> BigInt {
    (r.numer() << APPROX_BITS).div_floor(r.denom())
}

fn ceil_fixed(r: &Q) -> BigInt {
    -((-(r.numer() << APPROX_BITS)).div_floor(r.denom()))
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

fn shr_floor(a: &BigInt) -> BigInt {
    a.div_floor(&unit())
}

fn shr_ceil(a: &BigInt) -> BigInt {
    ceil_div(a, &unit())
}

fn floor_cbrt(n: &BigInt) -> BigInt {
    if n.sign() == Sign::Minus {
        -ceil_cbrt(&-n)
    } else {
        n.cbrt()
    }
}

fn ceil_cbrt(n: &BigInt) -> BigInt {
    if n.sign() == Sign::Minus {
        return -floor_cbrt(&-n);
    }
    let t = n.cbrt();
    if &(&t * &t * &t) < n {
        t + 1
    } else {
        t
    }
}

fn exact_cbrt(n: &BigInt) -> Option<BigInt> {
    let t = floor_cbrt(n);
    (&t * &t * &t == *n).then_some(t)
}

fn bits(r: &Q) -> u64 {
    r.numer().bits() + r.denom().bits()
}

impl Scalar {
    pub fn exact(r: Q) -> Self {
        Scalar::Exact(r)
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Scalar::Exact(q(n, d))
    }

    pub fn zero() -> Self {
        Scalar::Exact(Q::zero())
    }

    /// Interval enclosure of a rational range, rounded outward.
    pub fn enclosure(a: &Q, b: &Q) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Scalar::Approx {
            lo: floor_fixed(a),
            hi: ceil_fixed(b),
        }
    }

    fn settle(r: Q) -> Self {
        if bits(&r) > EXACT_BIT_LIMIT {
            Scalar::enclosure(&r, &r)
        } else {
            Scalar::Exact(r)
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Q> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Approx { .. } => None,
        }
    }

    fn fixed(&self) -> (BigInt, BigInt) {
        match self {
            Scalar::Exact(r) => (floor_fixed(r), ceil_fixed(r)),
            Scalar::Approx { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    pub fn lower(&self) -> Q {
        match self {
            Scalar::Exact(r) => r.clone(),
            Scalar::Approx { lo, .. } => Q::new(lo.clone(), unit()),
        }
    }

    pub fn upper(&self) -> Q {
        match self {
            Scalar::Exact(r) => r.clone(),
            Scalar::Approx { hi, .. } => Q::new(hi.clone(), unit()),
        }
    }

    /// Half-width of the enclosing interval; zero for exact values.
    pub fn error_bound(&self) -> Q {
        match self {
            Scalar::Exact(_) => Q::zero(),
            Scalar::Approx { lo, hi } => Q::new(hi - lo, unit() * 2),
        }
    }

    pub fn midpoint(&self) -> Q {
        match self {
            Scalar::Exact(r) => r.clone(),
            Scalar::Approx { lo, hi } => Q::new(lo + hi, unit() * 2),
        }
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.midpoint();
        m.numer().to_f64().unwrap_or(f64::NAN) / m.denom().to_f64().unwrap_or(f64::NAN)
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::settle(a + b),
            _ => {
                let (a, b) = self.fixed();
                let (c, d) = other.fixed();
                Scalar::Approx { lo: a + c, hi: b + d }
            }
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(-a),
            Scalar::Approx { lo, hi } => Scalar::Approx { lo: -hi, hi: -lo },
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn add_q(&self, r: &Q) -> Scalar {
        self.add(&Scalar::Exact(r.clone()))
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::settle(a * b),
            (Scalar::Exact(r), s) | (s, Scalar::Exact(r)) => s.mul_q(r),
            _ => {
                let (a, b) = self.fixed();
                let (c, d) = other.fixed();
                let p = [&a * &c, &a * &d, &b * &c, &b * &d];
                let mn = p.iter().min().unwrap();
                let mx = p.iter().max().unwrap();
                Scalar::Approx {
                    lo: shr_floor(mn),
                    hi: shr_ceil(mx),
                }
            }
        }
    }

    pub fn mul_q(&self, r: &Q) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::settle(a * r),
            Scalar::Approx { lo, hi } => {
                let (n, d) = (r.numer(), r.denom());
                let (a, b) = if n.is_negative() { (hi, lo) } else { (lo, hi) };
                Scalar::Approx {
                    lo: (a * n).div_floor(d),
                    hi: ceil_div(&(b * n), d),
                }
            }
        }
    }

    pub fn square(&self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::settle(a * a),
            Scalar::Approx { lo, hi } => {
                let (l2, h2) = (lo * lo, hi * hi);
                if !lo.is_negative() {
                    Scalar::Approx { lo: shr_floor(&l2), hi: shr_ceil(&h2) }
                } else if !hi.is_positive() {
                    Scalar::Approx { lo: shr_floor(&h2), hi: shr_ceil(&l2) }
                } else {
                    Scalar::Approx { lo: BigInt::zero(), hi: shr_ceil(&l2.max(h2)) }
                }
            }
        }
    }

    /// Real cube root. Stays exact when numerator and denominator are cubes.
    pub fn cbrt(&self) -> Scalar {
        if let Scalar::Exact(r) = self {
            if let (Some(n), Some(d)) = (exact_cbrt(r.numer()), exact_cbrt(r.denom())) {
                return Scalar::Exact(Q::new(n, d));
            }
        }
        let (lo, hi) = self.fixed();
        let scale = BigInt::one() << (2 * APPROX_BITS);
        Scalar::Approx {
            lo: floor_cbrt(&(lo * &scale)),
            hi: ceil_cbrt(&(hi * &scale)),
        }
    }

    /// Interval hull of two enclosures.
    pub fn hull(&self, other: &Scalar) -> Scalar {
        if self == other {
            return self.clone();
        }
        let (a, b) = self.fixed();
        let (c, d) = other.fixed();
        Scalar::Approx { lo: a.min(c), hi: b.max(d) }
    }

    /// Pointwise max of two enclosures (exact when both are exact).
    pub fn max(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.max(b).clone()),
            _ => {
                let (a, b) = self.fixed();
                let (c, d) = other.fixed();
                Scalar::Approx { lo: a.max(c), hi: b.max(d) }
            }
        }
    }

    pub fn min(&self, other: &Scalar) -> Scalar {
        self.neg().max(&other.neg()).neg()
    }

    /// Three-way comparison; overlapping enclosures are ambiguous.
    pub fn try_cmp(&self, other: &Scalar) -> Result<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(a.cmp(b)),
            _ => {
                if self.upper() < other.lower() {
                    Ok(Ordering::Less)
                } else if self.lower() > other.upper() {
                    Ok(Ordering::Greater)
                } else if self.lower() == self.upper()
                    && other.lower() == other.upper()
                    && self.lower() == other.lower()
                {
                    Ok(Ordering::Equal)
                } else {
                    Err(IvlError::Ambiguous(format!("cannot order {self} and {other}")))
                }
            }
        }
    }

    pub fn try_cmp_q(&self, r: &Q) -> Result<Ordering> {
        match self {
            Scalar::Exact(a) => Ok(a.cmp(r)),
            _ => self.try_cmp(&Scalar::Exact(r.clone())),
        }
    }

    /// `self < r`, certain or ambiguous.
    pub fn lt_q(&self, r: &Q) -> Result<bool> {
        Ok(self.try_cmp_q(r)? == Ordering::Less)
    }

    /// True when the whole enclosure lies in `[a, b]`.
    pub fn within(&self, a: &Q, b: &Q) -> bool {
        &self.lower() >= a && &self.upper() <= b
    }

    /// Parses `p/q`, an integer, or a finite decimal like `0.375`.
    pub fn parse_q(s: &str) -> Result<Q> {
        let s = s.trim();
        let bad = || IvlError::InvalidInput(format!("not a rational: {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Q::new(n, d));
        }
        if let Some((w, f)) = s.split_once('.') {
            let neg = w.starts_with('-');
            let w: BigInt = if w.is_empty() || w == "-" { BigInt::zero() } else { w.parse().map_err(|_| bad())? };
            if f.is_empty() || !f.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let den = num_traits::pow(BigInt::from(10), f.len());
            let frac = Q::new(f.parse::<BigInt>().map_err(|_| bad())?, den);
            let w = Q::from_integer(w);
            return Ok(if neg { w - frac } else { w + frac });
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Q::from_integer(n))
    }
}

pub fn fmt_q(r: &Q) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Fixed 24-digit decimal rendering, truncated toward zero.
pub fn fmt_decimal(r: &Q, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let v = (r.numer() * &scale) / r.denom();
    let neg = v.is_negative() || (v.is_zero() && r.is_negative());
    let v = v.abs();
    let s = format!("{:0>width$}", v.to_string(), width = digits + 1);
    let (w, f) = s.split_at(s.len() - digits);
    format!("{}{}.{}", if neg { "-" } else { "" }, w, f)
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => f.write_str(&fmt_q(r)),
            Scalar::Approx { .. } => f.write_str(&fmt_decimal(&self.midpoint(), 24)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_roots_of_cubes_stay_exact() {
        assert_eq!(Scalar::exact(q(1, 8)).cbrt(), Scalar::exact(q(1, 2)));
        assert_eq!(Scalar::exact(q(-27, 64)).cbrt(), Scalar::exact(q(-3, 4)));
        let c = Scalar::exact(q(1, 3)).cbrt();
        assert!(!c.is_exact());
        assert!(c.error_bound() < q(1, 1 << 48));
        let cube = c.mul(&c).mul(&c);
        assert!(cube.lower() <= q(1, 3) && cube.upper() >= q(1, 3));
    }

    #[test]
    fn bit_explosion_demotes() {
        let mut x = Scalar::exact(q(1, 3));
        for _ in 0..12 {
            x = x.square();
        }
        assert!(!x.is_exact());
        assert!(x.upper() > Q::zero());
    }

    #[test]
    fn overlap_is_ambiguous() {
        let a = Scalar::enclosure(&q(1, 4), &q(1, 2));
        assert!(a.try_cmp_q(&q(3, 8)).is_err());
        assert_eq!(a.try_cmp_q(&q(1, 1)).unwrap(), Ordering::Less);
    }

    #[test]
    fn parses() {
        assert_eq!(Scalar::parse_q("3/8").unwrap(), q(3, 8));
        assert_eq!(Scalar::parse_q("0.375").unwrap(), q(3, 8));
        assert_eq!(Scalar::parse_q("-1.5").unwrap(), q(-3, 2));
        assert_eq!(Scalar::parse_q("2").unwrap(), qi(2));
        assert!(Scalar::parse_q("1/0").is_err());
        assert!(Scalar::parse_q("x").is_err());
    }

    #[test]
    fn decimal_format() {
        assert_eq!(fmt_decimal(&q(1, 8), 4), "0.1250");
        assert_eq!(fmt_decimal(&q(-3, 2), 2), "-1.50");
    }
}
