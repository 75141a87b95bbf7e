//! Control words and eventually periodic control schedules.

use std::fmt;
use std::str::FromStr;

use crate::error::{IvlError, Result};

use super::symbolic::canonical;

/// A finite control word; symbols are control indices.
pub type Word = Vec<u8>;

pub fn word_str(w: &[u8]) -> String {
    w.iter().map(|&u| char::from(b'0' + u)).collect()
}

pub fn parse_word(s: &str) -> Result<Word> {
    s.bytes()
        .map(|c| {
            if c.is_ascii_digit() {
                Ok(c - b'0')
            } else {
                Err(IvlError::InvalidInput(format!("bad control symbol {:?}", c as char)))
            }
        })
        .collect()
}

/// `prefix · cycle^∞`, or just `prefix` when the cycle is empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ControlSchedule {
    prefix: Word,
    cycle: Word,
}

impl ControlSchedule {
    pub fn finite(word: &[u8]) -> Self {
        ControlSchedule { prefix: word.to_vec(), cycle: Vec::new() }
    }

    pub fn periodic(prefix: &[u8], cycle: &[u8]) -> Self {
        let (prefix, cycle) = canonical(prefix.to_vec(), cycle);
        ControlSchedule { prefix, cycle }
    }

    pub fn constant(u: u8) -> Self {
        Self::periodic(&[], &[u])
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[u8] {
        &self.cycle
    }

    pub fn is_finite(&self) -> bool {
        self.cycle.is_empty()
    }

    /// ω_k, or `None` past the end of a finite word.
    pub fn at(&self, k: usize) -> Option<u8> {
        if k < self.prefix.len() {
            Some(self.prefix[k])
        } else if self.cycle.is_empty() {
            None
        } else {
            Some(self.cycle[(k - self.prefix.len()) % self.cycle.len()])
        }
    }

    /// The first `n` symbols.
    pub fn head(&self, n: usize) -> Result<Word> {
        (0..n)
            .map(|k| {
                self.at(k).ok_or_else(|| {
                    IvlError::InvalidInput(format!("schedule {self} has no symbol at index {k}"))
                })
            })
            .collect()
    }

    /// ω′·ω.
    pub fn splice(front: &[u8], rest: &ControlSchedule) -> ControlSchedule {
        let mut prefix = front.to_vec();
        prefix.extend_from_slice(&rest.prefix);
        if rest.cycle.is_empty() {
            ControlSchedule::finite(&prefix)
        } else {
            ControlSchedule::periodic(&prefix, &rest.cycle)
        }
    }

    pub fn max_symbol(&self) -> Option<u8> {
        self.prefix.iter().chain(self.cycle.iter()).copied().max()
    }
}

fn runs(w: &[u8]) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < w.len() {
        let j = (i..w.len()).find(|&j| w[j] != w[i]).unwrap_or(w.len());
        let c = char::from(b'0' + w[i]);
        out.push(if j - i == 1 { c.to_string() } else { format!("{c}^{}", j - i) });
        i = j;
    }
    out
}

impl fmt::Display for ControlSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = runs(&self.prefix);
        if !self.cycle.is_empty() {
            parts.push(format!("({})^inf", word_str(&self.cycle)));
        }
        if parts.is_empty() {
            return f.write_str("()");
        }
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for ControlSchedule {
    type Err = IvlError;

    /// Space-separated tokens `w`, `w^k`, and a final `w^inf` or `(w)^inf`.
    fn from_str(s: &str) -> Result<Self> {
        let mut prefix = Vec::new();
        let tokens: Vec<&str> = s.split_whitespace().collect();
        for (i, tok) in tokens.iter().enumerate() {
            if *tok == "()" {
                continue;
            }
            let (body, power) = match tok.split_once('^') {
                Some((b, p)) => (b, Some(p)),
                None => (*tok, None),
            };
            let body = body.strip_prefix('(').and_then(|b| b.strip_suffix(')')).unwrap_or(body);
            let w = parse_word(body)?;
            if w.is_empty() {
                return Err(IvlError::InvalidInput(format!("empty token in schedule {s:?}")));
            }
            match power {
                None => prefix.extend_from_slice(&w),
                Some("inf") => {
                    if i + 1 != tokens.len() {
                        return Err(IvlError::InvalidInput(format!("cycle must come last in {s:?}")));
                    }
                    return Ok(ControlSchedule::periodic(&prefix, &w));
                }
                Some(p) => {
                    let k: usize = p
                        .parse()
                        .map_err(|_| IvlError::InvalidInput(format!("bad power {p:?} in {s:?}")))?;
                    for _ in 0..k {
                        prefix.extend_from_slice(&w);
                    }
                }
            }
        }
        Ok(ControlSchedule::finite(&prefix))
    }
}
