//! Reference solvers over a materialized window: the classic greedy
//! recomputation, exhaustive enumeration for tiny windows, and the
//! Max-k-Coverage reduction used as a correctness harness.

use std::collections::{BTreeSet, HashMap};

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::influence::{InfluenceFunction, MaterializedViews};
use crate::stream::{AncestorChain, Ordinal, PropagationIndex, Stream, UserId};

/// Default cap on the number of subsets [`exact`] may enumerate.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

/// Ancestor chains of every action of `stream`, in stream order.
pub fn chains(stream: &Stream) -> Result<Vec<AncestorChain>> {
    let mut index = PropagationIndex::new();
    stream.actions.iter().map(|a| index.ingest(a)).collect()
}

/// Views over the actions at ordinals `lo..=hi` (1-based positions in
/// `stream`), given the chains from [`chains`].
pub fn range_views(stream: &Stream, chains: &[AncestorChain], lo: Ordinal, hi: Ordinal) -> MaterializedViews {
    let (lo, hi) = (lo.max(1) as usize, (hi as usize).min(stream.actions.len()));
    if lo > hi {
        return MaterializedViews::default();
    }
    MaterializedViews::build((lo - 1..hi).map(|i| (stream.actions[i].user, &chains[i][..])))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyResult {
    pub seeds: Vec<UserId>,
    pub value: f64,
}

/// `k` rounds of best marginal gain, lowest user id on ties, stopping early
/// once no user adds anything.
pub fn greedy(views: &MaterializedViews, f: &InfluenceFunction, k: usize) -> GreedyResult {
    let candidates = views.owners();
    let mut covered: FxHashSet<UserId> = FxHashSet::default();
    let mut seeds = Vec::new();
    let mut value = 0.0;
    for _ in 0..k {
        let mut best: Option<(UserId, f64)> = None;
        for &u in &candidates {
            if seeds.contains(&u) {
                continue;
            }
            let gain: f64 = views
                .view(u)
                .into_iter()
                .flatten()
                .filter(|v| !covered.contains(v))
                .map(|&v| f.weight(v))
                .sum();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((u, gain));
            }
        }
        match best {
            Some((u, gain)) if gain > 0.0 => {
                seeds.push(u);
                covered.extend(views.view(u).into_iter().flatten().copied());
                value += gain;
            }
            _ => break,
        }
    }
    GreedyResult { seeds, value }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub seeds: Vec<UserId>,
    pub value: f64,
    /// Number of subsets evaluated.
    pub enumerated: u128,
}

fn binomial(n: usize, r: usize) -> u128 {
    let r = r.min(n - r.min(n));
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exhaustive maximum of `f` over all seed sets of size `<= k`. Because `f`
/// is monotone only sets of size `min(k, |owners|)` are enumerated; among
/// equal values the lexicographically smallest seed list wins.
pub fn exact(views: &MaterializedViews, f: &InfluenceFunction, k: usize, budget: u128) -> Result<ExactResult> {
    let owners = views.owners();
    let r = k.min(owners.len());
    if r == 0 {
        return Ok(ExactResult { seeds: Vec::new(), value: 0.0, enumerated: 1 });
    }
    let required = binomial(owners.len(), r);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }

    // Dense bitsets over the influenced users.
    let mut slot: HashMap<UserId, usize> = HashMap::new();
    let mut weights = Vec::new();
    for &u in &owners {
        for &v in views.view(u).into_iter().flatten() {
            slot.entry(v).or_insert_with(|| {
                weights.push(f.weight(v));
                weights.len() - 1
            });
        }
    }
    let words = weights.len().div_ceil(64);
    let bits: Vec<Vec<u64>> = owners
        .iter()
        .map(|u| {
            let mut b = vec![0u64; words];
            for v in views.view(*u).into_iter().flatten() {
                let s = slot[v];
                b[s / 64] |= 1 << (s % 64);
            }
            b
        })
        .collect();
    let uniform = matches!(f, InfluenceFunction::Cardinality);
    let value_of = |b: &[u64]| -> f64 {
        if uniform {
            return b.iter().map(|w| w.count_ones() as f64).sum();
        }
        let mut total = 0.0;
        for (wi, &word) in b.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let t = w.trailing_zeros() as usize;
                total += weights[wi * 64 + t];
                w &= w - 1;
            }
        }
        total
    };

    struct Search<'a> {
        bits: &'a [Vec<u64>],
        r: usize,
        chosen: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
        count: u128,
    }
    fn dfs(s: &mut Search<'_>, from: usize, union: &[u64], value_of: &dyn Fn(&[u64]) -> f64) {
        if s.chosen.len() == s.r {
            s.count += 1;
            let v = value_of(union);
            if s.best.as_ref().is_none_or(|(b, _)| v > *b) {
                s.best = Some((v, s.chosen.clone()));
            }
            return;
        }
        let remaining = s.r - s.chosen.len();
        for i in from..=s.bits.len() - remaining {
            let next: Vec<u64> = union.iter().zip(&s.bits[i]).map(|(a, b)| a | b).collect();
            s.chosen.push(i);
            dfs(s, i + 1, &next, value_of);
            s.chosen.pop();
        }
    }

    let mut search = Search { bits: &bits, r, chosen: Vec::with_capacity(r), best: None, count: 0 };
    dfs(&mut search, 0, &vec![0u64; words], &value_of);
    let (value, picked) = search.best.expect("at least one subset");
    Ok(ExactResult { seeds: picked.into_iter().map(|i| owners[i]).collect(), value, enumerated: search.count })
}

/// A Max-k-Coverage instance rewritten as an action stream.
#[derive(Debug, Clone)]
pub struct CoverageReduction {
    pub stream: Stream,
    /// The set owner of each input set, in input order.
    pub owners: Vec<UserId>,
    pub elements: BTreeSet<UserId>,
}

impl CoverageReduction {
    /// Number of element users in the seeds' joint influence set.
    pub fn element_coverage(&self, views: &MaterializedViews, seeds: &[UserId]) -> usize {
        views.covered(seeds).iter().filter(|u| self.elements.contains(u)).count()
    }
}

/// One root action per set owner, followed by one reply per element of that
/// set. Owners are named `s<i>`, elements `e<x>`, so the two never collide.
pub fn reduce_max_k_coverage(sets: &[Vec<u32>]) -> Result<CoverageReduction> {
    let mut stream = Stream::new();
    let mut owners = Vec::with_capacity(sets.len());
    let mut elements = BTreeSet::new();
    for (i, set) in sets.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::Config(format!("set {i} is empty")));
        }
        let root = stream.push(&format!("s{i}"), None);
        owners.push(stream.actions.last().expect("just pushed").user);
        for e in set {
            stream.push(&format!("e{e}"), Some(root));
            elements.insert(stream.actions.last().expect("just pushed").user);
        }
    }
    Ok(CoverageReduction { stream, owners, elements })
}

/// Brute-force optimum of Max-k-Coverage: the largest union of at most `k`
/// of the sets.
pub fn max_coverage(sets: &[Vec<u32>], k: usize) -> usize {
    let m = sets.len();
    let mut best = 0;
    for mask in 0u64..(1u64 << m) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let union: BTreeSet<u32> = (0..m).filter(|i| mask >> i & 1 == 1).flat_map(|i| sets[i].iter().copied()).collect();
        best = best.max(union.len());
    }
    best
}
