//! SieveStreaming as a checkpoint oracle.
//!
//! The oracle keeps one candidate set per guess `T = (1+β)^j` of the optimum,
//! for every `j` with `m <= T <= 2km`, where `m` is the largest value of a
//! single view seen so far. An incoming view of user `u` joins the candidate
//! set `CX` of guess `T` when `|CX| < k` and
//!
//! ```text
//! f(CX ∪ {u}) − f(CX) >= (T/2 − f(CX)) / (k − |CX|)
//! ```
//!
//! Users already in `CX` are never re-tested; when their view grows, the
//! instance's covered set absorbs the new member. Members are never evicted,
//! so every instance's value only grows.
//!
//! Raising `m` drops the guesses that fell below it. The best of the dropped
//! instances is kept aside (refresh-only, it admits nobody) so that the
//! checkpoint's reported value never decreases.

use std::collections::VecDeque;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::influence::{InfluenceFunction, InfluenceLog, SuffixViews};
use crate::oracle::{ActionUpdate, CheckpointOracle, OracleConfig, Solution};
use crate::stream::{Ordinal, UserId};

/// Smallest `j` with `base^j >= x`.
pub fn ceil_exponent(x: f64, base: f64) -> i32 {
    let mut j = (x.ln() / base.ln()).ceil() as i32;
    while base.powi(j - 1) >= x {
        j -= 1;
    }
    while base.powi(j) < x {
        j += 1;
    }
    j
}

/// Largest `j` with `base^j <= x`.
pub fn floor_exponent(x: f64, base: f64) -> i32 {
    let mut j = (x.ln() / base.ln()).floor() as i32;
    while base.powi(j + 1) <= x {
        j += 1;
    }
    while base.powi(j) > x {
        j -= 1;
    }
    j
}

/// Guards the cached-gain skip against rounding in the weight sums.
const BOUND_SLACK: f64 = 1e-9;

/// One guess of the optimum and its candidate set.
#[derive(Debug, Clone)]
pub struct SieveInstance {
    j: i32,
    threshold: f64,
    seeds: Vec<UserId>,
    covered: FxHashSet<UserId>,
    value: f64,
    /// Upper bounds on the gain of rejected owners. Coverage only grows, so
    /// a bound stays valid if it is raised by every uncovered member the
    /// owner gains afterwards.
    rejected: FxHashMap<UserId, f64>,
}

impl SieveInstance {
    fn new(j: i32, base: f64) -> Self {
        Self {
            j,
            threshold: base.powi(j),
            seeds: Vec::new(),
            covered: FxHashSet::default(),
            value: 0.0,
            rejected: FxHashMap::default(),
        }
    }

    pub fn exponent(&self) -> i32 {
        self.j
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn seeds(&self) -> &[UserId] {
        &self.seeds
    }

    pub fn covered(&self) -> &FxHashSet<UserId> {
        &self.covered
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    fn absorb(&mut self, f: &InfluenceFunction, v: UserId) -> bool {
        let fresh = self.covered.insert(v);
        if fresh {
            self.value += f.weight(v);
        }
        fresh
    }

    /// Admission test for `owner`, whose view just gained `influenced`.
    #[allow(clippy::too_many_arguments)]
    fn try_admit(
        &mut self,
        k: usize,
        owner: UserId,
        owner_value: f64,
        influenced: UserId,
        start: Ordinal,
        log: &InfluenceLog,
        f: &InfluenceFunction,
    ) -> bool {
        if self.seeds.len() >= k {
            return false;
        }
        let bound = self.rejected.get_mut(&owner).map(|g| {
            if !self.covered.contains(&influenced) {
                *g += f.weight(influenced);
            }
            *g
        });
        let need = (self.threshold / 2.0 - self.value) / (k - self.seeds.len()) as f64;
        // The gain can never exceed the owner's own value.
        if owner_value < need || bound.is_some_and(|g| g < need - BOUND_SLACK) {
            return false;
        }
        let gain: f64 = log
            .members(owner, start)
            .filter(|v| !self.covered.contains(v))
            .map(|v| f.weight(v))
            .sum();
        if gain < need {
            self.rejected.insert(owner, gain);
            return false;
        }
        self.rejected.remove(&owner);
        self.seeds.push(owner);
        for v in log.members(owner, start) {
            self.absorb(f, v);
        }
        if self.seeds.len() >= k {
            self.rejected = FxHashMap::default();
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Best {
    None,
    Lattice(usize),
    Retained,
}

/// A SieveStreaming checkpoint over the suffix starting at `start`.
#[derive(Debug, Clone)]
pub struct SieveCheckpoint {
    id: u64,
    start: Ordinal,
    k: usize,
    base: f64,
    views: SuffixViews,
    max_single: f64,
    instances: VecDeque<SieveInstance>,
    retained: Option<SieveInstance>,
    membership: FxHashMap<UserId, Vec<i32>>,
    best: Best,
    gains: Vec<(UserId, bool)>,
}

impl SieveCheckpoint {
    pub fn new(id: u64, start: Ordinal, cfg: OracleConfig) -> Self {
        Self {
            id,
            start,
            k: cfg.k,
            base: 1.0 + cfg.beta,
            views: SuffixViews::new(start),
            max_single: 0.0,
            instances: VecDeque::new(),
            retained: None,
            membership: FxHashMap::default(),
            best: Best::None,
            gains: Vec::new(),
        }
    }

    /// Largest single-view value `m` seen so far.
    pub fn max_single(&self) -> f64 {
        self.max_single
    }

    /// Threshold exponents currently instantiated, ascending.
    pub fn exponents(&self) -> Vec<i32> {
        self.instances.iter().map(|i| i.j).collect()
    }

    pub fn instances(&self) -> impl Iterator<Item = &SieveInstance> {
        self.instances.iter()
    }

    /// The best instance dropped by a raise of `m`, if kept.
    pub fn retained(&self) -> Option<&SieveInstance> {
        self.retained.as_ref()
    }

    pub fn views(&self) -> &SuffixViews {
        &self.views
    }

    fn lowest_j(&self) -> Option<i32> {
        self.instances.front().map(|i| i.j)
    }

    /// Raises `m` to `single_value` if larger and re-tiles the lattice to
    /// `[m, 2km]`.
    pub fn raise_m(&mut self, single_value: f64) {
        if single_value <= self.max_single {
            return;
        }
        self.max_single = single_value;
        let lo = ceil_exponent(single_value, self.base);
        let hi = floor_exponent(2.0 * self.k as f64 * single_value, self.base);

        let mut dropped: Option<SieveInstance> = None;
        while self.instances.front().is_some_and(|i| i.j < lo) {
            let inst = self.instances.pop_front().expect("front exists");
            if dropped.as_ref().is_none_or(|d| inst.value > d.value) {
                dropped = Some(inst);
            }
        }
        if let Some(d) = dropped {
            if d.value > 0.0 && self.retained.as_ref().is_none_or(|r| d.value > r.value) {
                self.retained = Some(d);
            }
        }

        let next = self.instances.back().map_or(lo, |i| i.j + 1);
        for j in next..=hi {
            self.instances.push_back(SieveInstance::new(j, self.base));
        }
        self.update_best();
    }

    /// Offers the grown view of `owner`; `influenced` is the member it gained.
    pub fn offer(&mut self, owner: UserId, influenced: UserId, log: &InfluenceLog, f: &InfluenceFunction) {
        let owner_value = self.views.value(owner);
        if owner_value <= 0.0 {
            return;
        }
        let lowest = self.lowest_j();
        let retained_j = self.retained.as_ref().map(|r| r.j);
        let mut changed = false;

        // Instances holding `owner` take the new member directly.
        let mut held = self.membership.get_mut(&owner);
        if let Some(js) = held.as_deref_mut() {
            js.retain(|&j| lowest.is_some_and(|lo| j >= lo) || Some(j) == retained_j);
            for &j in js.iter() {
                let inst = match lowest {
                    Some(lo) if j >= lo => Some(&mut self.instances[(j - lo) as usize]),
                    _ => self.retained.as_mut(),
                };
                if let Some(inst) = inst {
                    changed |= inst.absorb(f, influenced);
                }
            }
        }

        let mut admitted = Vec::new();
        for inst in self.instances.iter_mut() {
            if held.as_deref().is_some_and(|js| js.contains(&inst.j)) {
                continue;
            }
            if inst.try_admit(self.k, owner, owner_value, influenced, self.start, log, f) {
                admitted.push(inst.j);
            }
        }
        if !admitted.is_empty() {
            changed = true;
            match held {
                Some(js) => js.extend(admitted),
                None => {
                    self.membership.insert(owner, admitted);
                }
            }
        }
        if changed {
            self.update_best();
        }
    }

    fn update_best(&mut self) {
        let mut best = Best::None;
        let mut best_value = f64::NEG_INFINITY;
        for (idx, inst) in self.instances.iter().enumerate() {
            if inst.value > best_value {
                best_value = inst.value;
                best = Best::Lattice(idx);
            }
        }
        if let Some(r) = &self.retained {
            if r.value > best_value {
                best = Best::Retained;
            }
        }
        self.best = best;
    }

    fn best_instance(&self) -> Option<&SieveInstance> {
        match self.best {
            Best::None => None,
            Best::Lattice(idx) => self.instances.get(idx),
            Best::Retained => self.retained.as_ref(),
        }
    }
}

impl CheckpointOracle for SieveCheckpoint {
    fn create(id: u64, start: Ordinal, cfg: OracleConfig) -> Self {
        Self::new(id, start, cfg)
    }

    fn id(&self) -> u64 {
        self.id
    }

    fn start(&self) -> Ordinal {
        self.start
    }

    fn process(&mut self, update: &ActionUpdate<'_>) {
        let mut gains = std::mem::take(&mut self.gains);
        self.views.apply(update.function, update.influenced, update.evidence, &mut gains);
        for &(owner, gained) in &gains {
            if gained {
                self.raise_m(self.views.value(owner));
                self.offer(owner, update.influenced, update.log, update.function);
            }
        }
        self.gains = gains;
    }

    fn value(&self) -> f64 {
        self.best_instance().map_or(0.0, |i| i.value)
    }

    fn solution(&self) -> Solution {
        match self.best_instance() {
            Some(inst) => Solution { seeds: inst.seeds.clone(), value: inst.value, instance: Some(inst.j) },
            None => Solution::default(),
        }
    }
}
