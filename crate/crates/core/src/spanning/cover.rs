//! Minimum set cover of a kernel table: exact branch and bound with a greedy
//! incumbent, or greedy with a certified lower bound on large instances.

use std::fmt;

use fixedbitset::FixedBitSet;

use crate::dynamics::Word;
use crate::error::{IvlError, Result};

use super::{KernelTable, SpanBudget, TargetGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Optimality {
    /// Proven minimum.
    Exact,
    /// Greedy size; `lower_bound` brackets the minimum.
    GreedyUpper,
    /// Only a lower bound is known.
    LowerBound,
}

impl fmt::Display for Optimality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimality::Exact => "exact",
            Optimality::GreedyUpper => "greedy-upper",
            Optimality::LowerBound => "lower-bound",
        })
    }
}

impl std::str::FromStr for Optimality {
    type Err = IvlError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Optimality::Exact),
            "greedy-upper" => Ok(Optimality::GreedyUpper),
            "lower-bound" => Ok(Optimality::LowerBound),
            _ => Err(IvlError::InvalidInput(format!("unknown optimality tag {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverSolution {
    pub words: Vec<Word>,
    /// Indices into the table rows.
    pub rows: Vec<usize>,
    pub size: usize,
    pub tag: Optimality,
    pub lower_bound: usize,
}

struct Instance<'a> {
    rows: Vec<&'a FixedBitSet>,
    /// Rows covering each element.
    covering: Vec<Vec<usize>>,
    universe: usize,
}

impl<'a> Instance<'a> {
    fn new(rows: Vec<&'a FixedBitSet>, universe: usize) -> Self {
        let mut covering = vec![Vec::new(); universe];
        for (r, bits) in rows.iter().enumerate() {
            for e in bits.ones() {
                covering[e].push(r);
            }
        }
        Instance { rows, covering, universe }
    }

    fn gain(&self, r: usize, uncovered: &FixedBitSet) -> usize {
        self.rows[r].intersection_count(uncovered)
    }

    fn lower_bound(&self, uncovered: &FixedBitSet) -> usize {
        let left = uncovered.count_ones(..);
        if left == 0 {
            return 0;
        }
        let best = (0..self.rows.len()).map(|r| self.gain(r, uncovered)).max().unwrap_or(0).max(1);
        left.div_ceil(best).max(self.disjoint_witnesses(uncovered))
    }

    /// Elements no two of which share a row; each needs its own row.
    fn disjoint_witnesses(&self, uncovered: &FixedBitSet) -> usize {
        let mut elems: Vec<usize> = uncovered.ones().collect();
        elems.sort_by_key(|&e| (self.covering[e].len(), e));
        let mut used = vec![false; self.rows.len()];
        let mut count = 0;
        for e in elems {
            if self.covering[e].iter().all(|&r| !used[r]) {
                count += 1;
                for &r in &self.covering[e] {
                    used[r] = true;
                }
            }
        }
        count
    }

    fn greedy(&self) -> Vec<usize> {
        let mut uncovered = FixedBitSet::with_capacity(self.universe);
        uncovered.insert_range(..);
        let mut chosen = Vec::new();
        while !uncovered.is_clear() {
            let (r, g) = (0..self.rows.len())
                .map(|r| (r, self.gain(r, &uncovered)))
                .max_by_key(|&(r, g)| (g, std::cmp::Reverse(r)))
                .unwrap();
            debug_assert!(g > 0);
            chosen.push(r);
            uncovered.difference_with(self.rows[r]);
        }
        chosen
    }

    fn search(&self, uncovered: &FixedBitSet, chosen: &mut Vec<usize>, best: &mut Vec<usize>, nodes: &mut u64, limit: u64) -> bool {
        if uncovered.is_clear() {
            if chosen.len() < best.len() {
                *best = chosen.clone();
            }
            return true;
        }
        *nodes += 1;
        if *nodes > limit {
            return false;
        }
        if chosen.len() + self.lower_bound(uncovered) >= best.len() {
            return true;
        }
        let e = uncovered.ones().min_by_key(|&e| (self.covering[e].len(), e)).unwrap();
        let mut cands = self.covering[e].clone();
        cands.sort_by_key(|&r| (std::cmp::Reverse(self.gain(r, uncovered)), r));
        for r in cands {
            let mut next = uncovered.clone();
            next.difference_with(self.rows[r]);
            chosen.push(r);
            let ok = self.search(&next, chosen, best, nodes, limit);
            chosen.pop();
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Keeps one copy of each distinct row and drops rows contained in another.
fn reduce(rows: &[&FixedBitSet]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(rows[i].count_ones(..)), i));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if rows[i].is_clear() || kept.iter().any(|&k| rows[i].is_subset(rows[k])) {
            continue;
        }
        kept.push(i);
    }
    kept.sort_unstable();
    kept
}

/// Minimum cover of `0..universe` by `rows`. Returns chosen row indices, the
/// tag and a lower bound, or the first uncoverable element.
pub fn solve_cover(rows: &[&FixedBitSet], universe: usize, budget: &SpanBudget) -> std::result::Result<(Vec<usize>, Optimality, usize), usize> {
    let mut all = FixedBitSet::with_capacity(universe);
    for r in rows {
        all.union_with(r);
    }
    if let Some(e) = (0..universe).find(|&e| !all.contains(e)) {
        return Err(e);
    }
    if universe == 0 {
        return Ok((Vec::new(), Optimality::Exact, 0));
    }
    let kept = reduce(rows);
    let inst = Instance::new(kept.iter().map(|&i| rows[i]).collect(), universe);
    let mut full = FixedBitSet::with_capacity(universe);
    full.insert_range(..);
    let root_lb = inst.lower_bound(&full);
    let mut best = inst.greedy();
    let mut tag = Optimality::GreedyUpper;
    if best.len() == root_lb {
        tag = Optimality::Exact;
    } else if inst.rows.len() <= budget.exact_threshold {
        let mut nodes = 0;
        if inst.search(&full, &mut Vec::new(), &mut best, &mut nodes, budget.node_budget) {
            tag = Optimality::Exact;
        }
    }
    let mut chosen: Vec<usize> = best.iter().map(|&r| kept[r]).collect();
    chosen.sort_unstable();
    let lb = if tag == Optimality::Exact { chosen.len() } else { root_lb };
    Ok((chosen, tag, lb))
}

/// Minimal spanning set of the table's words over the grid.
pub fn min_cover(table: &KernelTable, grid: &TargetGrid, budget: &SpanBudget) -> Result<CoverSolution> {
    if !table.complete {
        return Err(IvlError::IncompleteTable);
    }
    let rows: Vec<&FixedBitSet> = table.rows.iter().map(|r| &r.bits).collect();
    match solve_cover(&rows, table.grid_len, budget) {
        Err(e) => Err(IvlError::NoSpanningSet { point: grid.points[e].to_string() }),
        Ok((chosen, tag, lower_bound)) => Ok(CoverSolution {
            words: chosen.iter().map(|&r| table.rows[r].word.clone()).collect(),
            size: chosen.len(),
            rows: chosen,
            tag,
            lower_bound,
        }),
    }
}

/// Greedy cover only, for comparison against the exact solver.
pub fn greedy_cover(rows: &[&FixedBitSet], universe: usize) -> Option<Vec<usize>> {
    let mut all = FixedBitSet::with_capacity(universe);
    for r in rows {
        all.union_with(r);
    }
    if all.count_ones(..) < universe {
        return None;
    }
    let kept = reduce(rows);
    let inst = Instance::new(kept.iter().map(|&i| rows[i]).collect(), universe);
    Some(inst.greedy().into_iter().map(|r| kept[r]).collect())
}

/// Root lower bound used by the solver.
pub fn cover_lower_bound(rows: &[&FixedBitSet], universe: usize) -> usize {
    let inst = Instance::new(rows.to_vec(), universe);
    let mut full = FixedBitSet::with_capacity(universe);
    full.insert_range(..);
    inst.lower_bound(&full)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(n: usize, ones: &[usize]) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(n);
        for &i in ones {
            b.insert(i);
        }
        b
    }

    #[test]
    fn greedy_is_not_optimal_here_but_exact_is() {
        // Classic trap: greedy takes the big middle row first.
        let rows = [bits(6, &[0, 1, 2]), bits(6, &[3, 4, 5]), bits(6, &[1, 2, 3, 4])];
        let refs: Vec<&FixedBitSet> = rows.iter().collect();
        let (chosen, tag, lb) = solve_cover(&refs, 6, &SpanBudget::default()).unwrap();
        assert_eq!(chosen, vec![0, 1]);
        assert_eq!(tag, Optimality::Exact);
        assert_eq!(lb, 2);
    }

    #[test]
    fn uncoverable_element_reported() {
        let rows = [bits(3, &[0, 1])];
        let refs: Vec<&FixedBitSet> = rows.iter().collect();
        assert_eq!(solve_cover(&refs, 3, &SpanBudget::default()), Err(2));
    }

    #[test]
    fn single_full_row() {
        let rows = [bits(4, &[0, 1]), bits(4, &[0, 1, 2, 3])];
        let refs: Vec<&FixedBitSet> = rows.iter().collect();
        let (chosen, tag, _) = solve_cover(&refs, 4, &SpanBudget::default()).unwrap();
        assert_eq!((chosen, tag), (vec![1], Optimality::Exact));
    }
}
