use fixedbitset::FixedBitSet;
use num_traits::Zero;

use crate::dynamics::{fmt_q, q, word_str, Scalar, StatePoint, Word, Q};
use crate::error::{IvlError, Result};
use crate::spanning::{enumerate_words, Mode, SpanBudget, TargetGrid};

use super::certify::ball;
use super::{ClassifyBudget, Criterion, Escape, EscapeKind, Evidence, GrowthLevel, Notion, Problem, Refutation, Verdict};

#[derive(Clone)]
struct Probe {
    point: usize,
    state: StatePoint,
    sum: Scalar,
}

enum Status {
    Escaped(EscapeKind, Scalar),
    Alive(Scalar),
    Unknown,
}

fn status(prob: &Problem, c: Criterion, eps: &Q, state: &StatePoint, prior: &Scalar, k: usize) -> Status {
    if let StatePoint::Real(s) = state {
        let applies = |gap: &Q| if c == Criterion::AllMean { gap > eps } else { gap >= eps };
        if let Some(t) = prob.traps.iter().find(|t| applies(&t.gap) && t.contains(s)) {
            return Status::Escaped(EscapeKind::Trap { lo: t.lo.clone(), hi: t.hi.clone(), gap: t.gap.clone() }, Scalar::exact(t.gap.clone()));
        }
    }
    let Ok(d) = prob.target.dist(state) else { return Status::Unknown };
    let sum = prior.add(&d);
    let (kind, v) = match c {
        Criterion::Sup => (EscapeKind::Sup, d),
        Criterion::AllMean => (EscapeKind::Mean, sum.mul_q(&q(1, k as i64 + 1))),
        _ => return Status::Alive(sum),
    };
    match v.lt_q(eps) {
        Ok(true) => Status::Alive(sum),
        Ok(false) => Status::Escaped(kind, v),
        Err(_) => Status::Unknown,
    }
}

struct Node {
    prefix: Word,
    probes: Vec<Probe>,
}

enum Tree {
    Complete(Vec<Escape>),
    Open(String),
}

#[allow(clippy::large_enum_variant)]
enum Child {
    Leaf(Escape),
    Inner(Node),
    Dead,
}

/// First probe (in point order) that escapes at index `k`; survivors
/// otherwise. Probes with unknown status are dropped: they cannot witness.
#[allow(clippy::too_many_arguments)]
fn settle(prob: &Problem, c: Criterion, eps: &Q, pts: &[StatePoint], prefix: Word, probes: Vec<Probe>, k: usize, unknown: &mut bool) -> Child {
    let mut alive = Vec::with_capacity(probes.len());
    for p in probes {
        match status(prob, c, eps, &p.state, &p.sum, k) {
            Status::Escaped(kind, value) => {
                return Child::Leaf(Escape { prefix, point: pts[p.point].clone(), index: k, value, kind });
            }
            Status::Alive(sum) => alive.push(Probe { sum, ..p }),
            Status::Unknown => *unknown = true,
        }
    }
    if alive.is_empty() {
        Child::Dead
    } else {
        Child::Inner(Node { prefix, probes: alive })
    }
}

/// Prefix-tree search for escapes of the points `pts` covering every word of
/// length `n`.
fn escape_tree(prob: &Problem, c: Criterion, eps: &Q, pts: &[StatePoint], n: usize, node_budget: usize) -> Tree {
    let alphabet = prob.sys.alphabet_size();
    let mut unknown = false;
    let start: Vec<Probe> = pts.iter().enumerate().map(|(i, y)| Probe { point: i, state: y.clone(), sum: Scalar::zero() }).collect();
    let mut frontier = match settle(prob, c, eps, pts, Vec::new(), start, 0, &mut unknown) {
        Child::Leaf(e) => return Tree::Complete(vec![e]),
        Child::Inner(node) => vec![node],
        Child::Dead => return Tree::Open("every neighbourhood point is indeterminate at index 0".into()),
    };
    let mut escapes = Vec::new();
    let mut nodes = 1usize;
    for k in 1..n {
        if frontier.is_empty() {
            break;
        }
        let expanded: Vec<(Vec<Child>, bool)> = prob.exec.map(&frontier, |node| {
            let mut unknown = false;
            let kids = (0..alphabet as u8)
                .map(|u| {
                    let mut prefix = node.prefix.clone();
                    prefix.push(u);
                    let mut probes = Vec::with_capacity(node.probes.len());
                    for p in &node.probes {
                        match prob.sys.step(&p.state, u) {
                            Ok(s) => probes.push(Probe { state: s, ..p.clone() }),
                            Err(_) => unknown = true,
                        }
                    }
                    settle(prob, c, eps, pts, prefix, probes, k, &mut unknown)
                })
                .collect();
            (kids, unknown)
        });
        let mut next = Vec::new();
        for (kids, u) in expanded {
            unknown |= u;
            for kid in kids {
                match kid {
                    Child::Leaf(e) => escapes.push(e),
                    Child::Inner(node) => next.push(node),
                    Child::Dead => return Tree::Open("a word left only indeterminate points".into()),
                }
            }
        }
        nodes += next.len();
        if nodes > node_budget {
            return Tree::Open(format!("prefix-tree budget of {node_budget} nodes exhausted at index {k}"));
        }
        frontier = next;
    }
    if frontier.is_empty() {
        Tree::Complete(escapes)
    } else {
        let shown: Vec<String> = frontier.iter().take(4).map(|nd| word_str(&nd.prefix)).collect();
        let why = if unknown { ", some comparisons ambiguous" } else { "" };
        Tree::Open(format!("{} prefixes of length {} have no escape (e.g. {}){why}", frontier.len(), n - 1, shown.join(", ")))
    }
}

/// Greedy set of points no two of which are kept by a common row.
fn separated(rows: &[&FixedBitSet], universe: usize) -> Vec<usize> {
    let mut covering = vec![Vec::new(); universe];
    for (r, bits) in rows.iter().enumerate() {
        for e in bits.ones() {
            covering[e].push(r);
        }
    }
    let mut order: Vec<usize> = (0..universe).collect();
    order.sort_by_key(|&e| (covering[e].len(), e));
    let mut used = vec![false; rows.len()];
    let mut out = Vec::new();
    for e in order {
        if covering[e].iter().all(|&r| !used[r]) {
            for &r in &covering[e] {
                used[r] = true;
            }
            out.push(e);
        }
    }
    out.sort_unstable();
    out
}

fn local_growth(prob: &Problem, x: &StatePoint, mode: Mode, eps: &Q, delta0: &Q, n: usize, levels: usize) -> Result<std::result::Result<Vec<GrowthLevel>, String>> {
    let mut grid = prob.grid.clone();
    let mut out: Vec<GrowthLevel> = Vec::new();
    for l in 0..levels.max(2) {
        if l > 0 {
            grid = grid.refine(&prob.target)?;
        }
        let mut pts = Vec::new();
        for y in &grid.points {
            if prob.sys.space.distance(x, y)?.lt_q(delta0).unwrap_or(false) {
                pts.push(y.clone());
            }
        }
        let local = TargetGrid { points: pts, resolution: grid.resolution.clone() };
        let tables = enumerate_words(&prob.sys, &prob.target, &local, eps, n, mode, &SpanBudget::default(), prob.exec)?;
        let Some(t) = tables.last().filter(|t| t.complete) else {
            return Ok(Err(format!("word enumeration budget exhausted at {}", grid.resolution)));
        };
        let rows: Vec<&FixedBitSet> = t.rows.iter().map(|r| &r.bits).collect();
        let sep = separated(&rows, local.len());
        let witnesses: Vec<StatePoint> = sep.iter().map(|&i| local.points[i].clone()).collect();
        if let Some(prev) = out.last() {
            if witnesses.len() <= prev.witnesses.len() {
                return Ok(Err(format!("separated witnesses stop growing at {} ({})", grid.resolution, witnesses.len())));
            }
        } else if witnesses.len() < 2 {
            return Ok(Err("at most one separated witness".into()));
        }
        out.push(GrowthLevel { resolution: grid.resolution.clone(), witnesses });
    }
    Ok(Ok(out))
}

pub(crate) fn refute_with(prob: &Problem, x: &StatePoint, notion: Notion, eps: &Q, delta0: &Q, n: usize, budget: &ClassifyBudget) -> Result<Verdict> {
    let c = notion.criterion();
    let pts = ball(prob, x, delta0, 0)?;
    let refutation = |evidence| {
        Verdict::Refuted(Refutation {
            notion,
            point: x.clone(),
            epsilon: eps.clone(),
            delta: delta0.clone(),
            horizon: n,
            resolution: prob.grid.resolution.clone(),
            evidence,
        })
    };
    if notion.single() {
        return Ok(match escape_tree(prob, c, eps, &pts, n, budget.node_budget) {
            Tree::Complete(es) => refutation(Evidence::EveryWord(es)),
            Tree::Open(why) => Verdict::Inconclusive(why),
        });
    }
    // A finite family fails when one point is failed by every word.
    let mut last = String::new();
    for y in &pts {
        match escape_tree(prob, c, eps, std::slice::from_ref(y), n, budget.node_budget) {
            Tree::Complete(escapes) => return Ok(refutation(Evidence::UncoverablePoint { point: y.clone(), escapes })),
            Tree::Open(why) => last = why,
        }
    }
    let mode = match c {
        Criterion::Sup => Mode::Plain,
        Criterion::AllMean => Mode::Mean,
        _ => return Ok(Verdict::Inconclusive(format!("no uncoverable point within delta0={} ({last})", fmt_q(delta0)))),
    };
    Ok(match local_growth(prob, x, mode, eps, delta0, n, budget.growth_levels)? {
        Ok(levels) => refutation(Evidence::LocalGrowth(levels)),
        Err(why) => Verdict::Inconclusive(format!("no uncoverable point and no local growth: {why}")),
    })
}

/// Searches for escape witnesses defeating every word of length `n` on the
/// δ₀-ball. Refutations are relative to `n` and the grids used.
pub fn refute_point(prob: &Problem, x: &StatePoint, notion: Notion, eps: &Q, delta0: &Q, n: usize, budget: &ClassifyBudget) -> Result<Verdict> {
    if *eps <= Q::zero() || *delta0 <= Q::zero() || n == 0 {
        return Err(IvlError::InvalidInput("refutation needs eps > 0, delta0 > 0 and N >= 1".into()));
    }
    if !prob.target.contains(x)? {
        return Err(IvlError::InvalidInput(format!("{x} is not in the target set")));
    }
    refute_with(prob, x, notion, eps, delta0, n, budget)
}
