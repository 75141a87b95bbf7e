//! Breadth-first word enumeration with prefix pruning.
//!
//! Prefixes that leave every surviving grid point in the same configuration
//! (same states, same running sums) have identical futures, so they are merged
//! into one class represented by the lexicographically least prefix.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::dynamics::{ControlSystem, Scalar, Word, Q};
use crate::error::{IvlError, Result};
use crate::metrics::TargetSet;
use crate::par::Exec;

use super::{admit, Check, Mode, TargetGrid, Track};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanBudget {
    /// Max prefix classes kept per level before the search gives up.
    pub max_classes: usize,
    /// Rows (after reduction) above which covers fall back to greedy.
    pub exact_threshold: usize,
    /// Branch-and-bound node limit per cover.
    pub node_budget: u64,
}

impl Default for SpanBudget {
    fn default() -> Self {
        SpanBudget { max_classes: 200_000, exact_threshold: 10_000, node_budget: 2_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelRow {
    /// Least word of length `horizon` with this kernel.
    pub word: Word,
    pub bits: FixedBitSet,
    /// Number of words of length `horizon` sharing this kernel.
    pub multiplicity: u128,
}

/// All distinct nonempty kernels at one horizon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelTable {
    pub horizon: usize,
    pub epsilon: Q,
    pub mode: Mode,
    pub grid_len: usize,
    /// Sorted by word; bitsets pairwise distinct.
    pub rows: Vec<KernelRow>,
    /// Words of length `horizon` whose kernel is empty.
    pub pruned: u128,
    /// Point drops caused by ambiguous comparisons at this level.
    pub indeterminate: usize,
    pub complete: bool,
}

struct Class {
    rep: Word,
    mult: u128,
    tracks: Vec<(u32, Track)>,
}

fn expand(sys: &ControlSystem, target: &TargetSet, eps: &Q, mode: Mode, c: &Class, u: u8, k: usize) -> (Vec<(u32, Track)>, usize) {
    let mut out = Vec::with_capacity(c.tracks.len());
    let mut indeterminate = 0;
    for (i, t) in &c.tracks {
        let next = match sys.step(&t.state, u) {
            Ok(s) => s,
            Err(_) => {
                indeterminate += 1;
                continue;
            }
        };
        match admit(target, eps, mode, next, &t.sum, k) {
            Check::Keep(t) => out.push((*i, t)),
            Check::Drop => {}
            Check::Indeterminate => indeterminate += 1,
        }
    }
    (out, indeterminate)
}

#[allow(clippy::too_many_arguments)]
fn table_from(classes: &[Class], n: usize, eps: &Q, mode: Mode, grid_len: usize, alphabet: usize, pruned: u128, indeterminate: usize) -> KernelTable {
    let mut index: HashMap<FixedBitSet, usize> = HashMap::new();
    let mut rows: Vec<KernelRow> = Vec::new();
    for c in classes {
        let mut bits = FixedBitSet::with_capacity(grid_len);
        for (i, _) in &c.tracks {
            bits.insert(*i as usize);
        }
        // The last symbol of a length-n word never affects the kernel.
        let mult = c.mult.saturating_mul(alphabet as u128);
        match index.get(&bits) {
            Some(&r) => rows[r].multiplicity = rows[r].multiplicity.saturating_add(mult),
            None => {
                index.insert(bits.clone(), rows.len());
                let mut word = c.rep.clone();
                word.push(0);
                rows.push(KernelRow { word, bits, multiplicity: mult });
            }
        }
    }
    KernelTable {
        horizon: n,
        epsilon: eps.clone(),
        mode,
        grid_len,
        rows,
        pruned: pruned.saturating_mul(alphabet as u128),
        indeterminate,
        complete: true,
    }
}

/// Kernel tables for horizons `1..=n_max`. Once the class budget is exceeded
/// the remaining tables are returned empty and flagged incomplete.
#[allow(clippy::too_many_arguments)]
pub fn enumerate_words(
    sys: &ControlSystem,
    target: &TargetSet,
    grid: &TargetGrid,
    eps: &Q,
    n_max: usize,
    mode: Mode,
    budget: &SpanBudget,
    exec: Exec,
) -> Result<Vec<KernelTable>> {
    if n_max == 0 || *eps <= Q::from_integer(0.into()) {
        return Err(IvlError::InvalidInput("enumeration needs n_max >= 1 and eps > 0".into()));
    }
    let alphabet = sys.alphabet_size();
    let mut indeterminate = 0;
    let mut start = Vec::new();
    for (i, x) in grid.points.iter().enumerate() {
        match admit(target, eps, mode, x.clone(), &Scalar::zero(), 0) {
            Check::Keep(t) => start.push((i as u32, t)),
            Check::Drop => {}
            Check::Indeterminate => indeterminate += 1,
        }
    }
    let mut classes = if start.is_empty() { Vec::new() } else { vec![Class { rep: Vec::new(), mult: 1, tracks: start }] };
    let mut pruned: u128 = u128::from(classes.is_empty());
    let mut tables = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        tables.push(table_from(&classes, n, eps, mode, grid.len(), alphabet, pruned, indeterminate));
        if n == n_max {
            break;
        }
        // Prefixes of length n-1 become prefixes of length n; the new state index is n.
        let children = exec.map(&classes, |c| {
            (0..alphabet as u8).map(|u| expand(sys, target, eps, mode, c, u, n)).collect::<Vec<_>>()
        });
        let mut next: Vec<Class> = Vec::new();
        let mut seen: HashMap<Vec<(u32, Track)>, usize> = HashMap::new();
        pruned = pruned.saturating_mul(alphabet as u128);
        indeterminate = 0;
        for (parent, kids) in classes.iter().zip(children) {
            for (u, (tracks, ind)) in kids.into_iter().enumerate() {
                indeterminate += ind;
                if tracks.is_empty() {
                    pruned = pruned.saturating_add(parent.mult);
                    continue;
                }
                match seen.get(&tracks) {
                    Some(&j) => next[j].mult = next[j].mult.saturating_add(parent.mult),
                    None => {
                        let mut rep = parent.rep.clone();
                        rep.push(u as u8);
                        seen.insert(tracks.clone(), next.len());
                        next.push(Class { rep, mult: parent.mult, tracks });
                    }
                }
            }
        }
        if next.len() > budget.max_classes {
            for m in n + 1..=n_max {
                tables.push(KernelTable {
                    horizon: m,
                    epsilon: eps.clone(),
                    mode,
                    grid_len: grid.len(),
                    rows: Vec::new(),
                    pruned: 0,
                    indeterminate: 0,
                    complete: false,
                });
            }
            return Ok(tables);
        }
        classes = next;
    }
    Ok(tables)
}
