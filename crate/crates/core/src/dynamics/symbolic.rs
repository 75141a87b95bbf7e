//! Eventually periodic sequences `prefix · cycle^∞` in canonical form.

use std::fmt;
use std::str::FromStr;

use crate::error::{IvlError, Result};

use super::scalar::Q;

/// Shortest period of `cycle` that divides its length.
fn primitive(cycle: &[u8]) -> Vec<u8> {
    let n = cycle.len();
    for p in 1..=n {
        if n.is_multiple_of(p) && (0..n).all(|i| cycle[i] == cycle[i % p]) {
            return cycle[..p].to_vec();
        }
    }
    cycle.to_vec()
}

/// Primitive cycle, and a prefix that does not end in the cycle's last symbol.
pub(crate) fn canonical(mut prefix: Vec<u8>, cycle: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let mut cycle = primitive(cycle);
    while !cycle.is_empty() && prefix.last() == cycle.last() {
        prefix.pop();
        cycle.rotate_right(1);
    }
    (prefix, cycle)
}

/// An eventually periodic point of a one-sided shift.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicPoint {
    prefix: Vec<u8>,
    cycle: Vec<u8>,
}

impl SymbolicPoint {
    pub fn new(prefix: &[u8], cycle: &[u8]) -> Result<Self> {
        if cycle.is_empty() {
            return Err(IvlError::InvalidInput("symbolic point needs a nonempty cycle".into()));
        }
        let (prefix, cycle) = canonical(prefix.to_vec(), cycle);
        Ok(SymbolicPoint { prefix, cycle })
    }

    pub fn periodic(cycle: &[u8]) -> Result<Self> {
        Self::new(&[], cycle)
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[u8] {
        &self.cycle
    }

    pub fn at(&self, k: usize) -> u8 {
        if k < self.prefix.len() {
            self.prefix[k]
        } else {
            self.cycle[(k - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// First `n` symbols.
    pub fn head(&self, n: usize) -> Vec<u8> {
        (0..n).map(|k| self.at(k)).collect()
    }

    /// σ^p.
    pub fn shift(&self, p: usize) -> SymbolicPoint {
        if p <= self.prefix.len() {
            return SymbolicPoint { prefix: self.prefix[p..].to_vec(), cycle: self.cycle.clone() };
        }
        let mut cycle = self.cycle.clone();
        let r = (p - self.prefix.len()) % cycle.len();
        cycle.rotate_left(r);
        SymbolicPoint { prefix: Vec::new(), cycle }
    }

    /// Index of the first differing symbol, `None` for equal sequences.
    pub fn first_difference(&self, other: &SymbolicPoint) -> Option<usize> {
        if self == other {
            return None;
        }
        let a = self.cycle.len();
        let b = other.cycle.len();
        let lcm = a / gcd(a, b) * b;
        let bound = self.prefix.len().max(other.prefix.len()) + lcm;
        (0..bound).find(|&k| self.at(k) != other.at(k))
    }

    /// Metric `1/(i+1)` at the first differing index.
    pub fn rho(&self, other: &SymbolicPoint) -> Q {
        match self.first_difference(other) {
            None => Q::from_integer(0.into()),
            Some(i) => Q::new(1.into(), (i as i64 + 1).into()),
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = u8> + '_ {
        self.prefix.iter().chain(self.cycle.iter()).copied()
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({})^inf",
            String::from_utf8_lossy(&self.prefix),
            String::from_utf8_lossy(&self.cycle)
        )
    }
}

impl FromStr for SymbolicPoint {
    type Err = IvlError;

    /// `abcde(ab)^inf`; the `^inf` suffix may be omitted.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = s.strip_suffix("^inf").unwrap_or(s);
        let bad = || IvlError::InvalidInput(format!("bad symbolic point {s:?}, expected like ab(cde)^inf"));
        let open = s.find('(').ok_or_else(bad)?;
        let body = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let prefix = &s[..open];
        let ok = |w: &str| w.bytes().all(|c| c.is_ascii_alphabetic());
        if !ok(prefix) || !ok(body) {
            return Err(bad());
        }
        SymbolicPoint::new(prefix.as_bytes(), body.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> SymbolicPoint {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_forms_agree() {
        assert_eq!(p("ab(abab)"), p("(ab)"));
        assert_eq!(p("a(ba)"), p("(ab)"));
        assert_eq!(p("abcde(ab)").prefix(), b"abcde");
        assert_eq!(p("(ab)").shift(1), p("b(ab)"));
        assert_eq!(p("(ab)").shift(1).to_string(), "(ba)^inf");
    }

    #[test]
    fn shifts() {
        assert_eq!(p("abcde(ab)").shift(2), p("cde(ab)"));
        assert_eq!(p("abcde(ab)").shift(0), p("abcde(ab)"));
        assert_eq!(p("c(ab)").shift(4), p("(ba)"));
    }

    #[test]
    fn metric() {
        assert_eq!(p("ab(b)").rho(&p("(ab)")), Q::new(1.into(), 3.into()));
        assert_eq!(p("(ab)").rho(&p("ab(ab)")), Q::from_integer(0.into()));
        assert_eq!(p("(b)").rho(&p("(ab)")), Q::from_integer(1.into()));
        assert_eq!(p("(aab)").first_difference(&p("(aabaab)")), None);
        assert_eq!(p("(ab)").first_difference(&p("(abb)")), Some(2));
    }

    #[test]
    fn rejects_junk() {
        assert!("ab".parse::<SymbolicPoint>().is_err());
        assert!("a()".parse::<SymbolicPoint>().is_err());
        assert!("a1(b)".parse::<SymbolicPoint>().is_err());
    }
}
