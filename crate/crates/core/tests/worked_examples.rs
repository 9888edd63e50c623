//! The ten-action running example replayed through every layer.

mod common;

use common::{ten_actions, id, names, set};
use simstream::baselines::{self, chains, range_views, DEFAULT_BUDGET};
use simstream::influence::{InfluenceLog, MaterializedViews};
use simstream::stream::PropagationIndex;
use simstream::{CheckpointOracle, Engine, IcEngine, InfluenceFunction, SicEngine, SieveCheckpoint, WindowConfig};

const F: InfluenceFunction = InfluenceFunction::Cardinality;

fn cfg() -> WindowConfig {
    WindowConfig::new(8, 1, 2, 0.3).unwrap()
}

fn views(lo: u64, hi: u64) -> MaterializedViews {
    let s = ten_actions();
    range_views(&s, &chains(&s).unwrap(), lo, hi)
}

#[test]
fn a4_chain_reaches_u1() {
    let s = ten_actions();
    let mut index = PropagationIndex::new();
    let chains: Vec<_> = s.actions.iter().map(|a| index.ingest(a).unwrap()).collect();
    assert_eq!(chains[0], vec![id(&s, "u1")]);
    assert_eq!(chains[3], vec![id(&s, "u3"), id(&s, "u1")]);
    // a10 -> a9 -> a8: u6 twice, deduplicated.
    assert_eq!(chains[9], vec![id(&s, "u6"), id(&s, "u2")]);
}

#[test]
fn influence_sets_at_8_and_10() {
    let s = ten_actions();
    let w8 = views(1, 8);
    let w10 = views(3, 10);
    let view = |v: &MaterializedViews, u: &str| names(&s, &v.view(id(&s, u)).unwrap().iter().copied().collect::<Vec<_>>());
    assert_eq!(view(&w8, "u1"), set(&["u1", "u2", "u3"]));
    assert_eq!(view(&w10, "u1"), set(&["u1", "u3"]));
    assert_eq!(view(&w8, "u3"), set(&["u1", "u3", "u4", "u5"]));

    // The shared log answers the same questions for any suffix start.
    let mut log = InfluenceLog::new();
    let mut evidence = Vec::new();
    let ch = chains(&s).unwrap();
    for (i, a) in s.actions.iter().enumerate().take(8) {
        log.record(i as u64 + 1, a.user, &ch[i], &mut evidence);
    }
    let members = |log: &InfluenceLog, start| names(&s, &log.members(id(&s, "u1"), start).collect::<Vec<_>>());
    assert_eq!(members(&log, 1), set(&["u1", "u2", "u3"]));
    for (i, a) in s.actions.iter().enumerate().skip(8) {
        log.record(i as u64 + 1, a.user, &ch[i], &mut evidence);
    }
    assert_eq!(members(&log, 3), set(&["u1", "u3"]));
}

#[test]
fn optimal_values_at_8_and_10() {
    let s = ten_actions();
    let opt8 = baselines::exact(&views(1, 8), &F, 2, DEFAULT_BUDGET).unwrap();
    assert_eq!(opt8.value, 5.0);
    assert_eq!(names(&s, &opt8.seeds), set(&["u1", "u3"]));
    let opt10 = baselines::exact(&views(3, 10), &F, 2, DEFAULT_BUDGET).unwrap();
    assert_eq!(opt10.value, 6.0);
    assert_eq!(names(&s, &opt10.seeds), set(&["u2", "u3"]));

    // Independent brute force agrees on the values.
    assert_eq!(common::opt(&s, 1, 8, 2), 5.0);
    assert_eq!(common::opt(&s, 3, 10, 2), 6.0);
    assert_eq!(views(1, 8).value_of(&F, &[id(&s, "u1"), id(&s, "u3")]), 5.0);
    assert_eq!(views(3, 10).value_of(&F, &[id(&s, "u2"), id(&s, "u3")]), 6.0);
    assert_eq!(views(1, 8).value_of(&F, &[]), 0.0);
}

#[test]
fn marginal_of_u3_over_u1() {
    let s = ten_actions();
    let w8 = views(1, 8);
    let base = w8.view(id(&s, "u1")).unwrap();
    let cand = w8.view(id(&s, "u3")).unwrap();
    assert_eq!(F.marginal([base], cand), 2.0);
    assert_eq!(F.marginal([base], base), 0.0);
    assert_eq!(F.marginal(std::iter::empty(), cand), F.eval([cand]));
}

#[test]
fn greedy_attains_the_optimum_at_8() {
    let g = baselines::greedy(&views(1, 8), &F, 2);
    assert_eq!(g.value, 5.0);
}

#[test]
fn lattice_at_first_action_and_at_8() {
    let s = ten_actions();
    let mut ic: IcEngine = IcEngine::new(cfg(), F).unwrap();
    ic.slide(&s.actions[..1]).unwrap();
    let front: &SieveCheckpoint = ic.checkpoints().next().unwrap();
    assert_eq!(front.max_single(), 1.0);
    assert_eq!(front.exponents(), (0..=5).collect::<Vec<_>>());

    for a in &s.actions[1..8] {
        ic.slide(std::slice::from_ref(a)).unwrap();
    }
    let front = ic.checkpoints().next().unwrap();
    assert_eq!(front.start(), 1);
    assert_eq!(front.max_single(), 4.0);
    assert_eq!(front.exponents(), (6..=10).collect::<Vec<_>>());
    for inst in front.instances() {
        assert!(4.0 <= inst.threshold() && inst.threshold() <= 16.0);
    }
    let sol = front.solution();
    assert_eq!(names(&s, &sol.seeds), set(&["u1", "u3"]));
    assert_eq!(sol.value, 5.0);
    assert_eq!(sol.instance, Some(6));
}

#[test]
fn ic_answers_at_8_and_10() {
    let s = ten_actions();
    let mut ic: IcEngine = IcEngine::new(cfg(), F).unwrap();
    let mut answers = Vec::new();
    common::replay(&mut ic, &s, 1, |e, t| {
        let q = e.query().unwrap();
        let starts: Vec<_> = e.checkpoints().map(|c| c.start()).collect();
        answers.push((t, q, starts, e.checkpoint_count()));
    });
    let (_, q8, starts8, n8) = &answers[7];
    assert_eq!(q8.value, 5.0);
    assert!(q8.value >= (0.5 - 0.3) * 5.0);
    assert_eq!(starts8, &(1..=8).collect::<Vec<_>>());
    assert_eq!(*n8, 8);

    let (_, q10, starts10, n10) = &answers[9];
    assert_eq!(names(&s, &q10.seeds), set(&["u2", "u3"]));
    assert_eq!(q10.value, 6.0);
    assert_eq!(q10.checkpoint.unwrap().start, 3);
    assert_eq!(starts10, &(3..=10).collect::<Vec<_>>());
    assert_eq!(*n10, 8);

    // Warm-up: one checkpoint after the first slide.
    assert_eq!(answers[0].3, 1);
}

#[test]
fn ic_with_four_action_slides_keeps_two_checkpoints() {
    let s = ten_actions();
    let mut ic: IcEngine = IcEngine::new(WindowConfig::new(8, 4, 2, 0.3).unwrap(), F).unwrap();
    let mut counts = Vec::new();
    common::replay(&mut ic, &s, 4, |e, _| counts.push(e.checkpoint_count()));
    // Actions 9 and 10 form a partial slide and are never ingested.
    assert_eq!(counts, vec![1, 2]);
}

#[test]
fn sic_maintenance_at_8_9_10() {
    let s = ten_actions();
    let mut sic: SicEngine = SicEngine::new(cfg(), F).unwrap();
    let mut seen = Vec::new();
    common::replay(&mut sic, &s, 1, |e, t| {
        let q = e.query().unwrap();
        let positions: Vec<i64> = e.checkpoints().iter().map(|c| e.position(c)).collect();
        let answered = e.checkpoints().iter().find(|c| c.start() == q.checkpoint.unwrap().start).unwrap();
        seen.push((t, positions, e.position(answered), q));
        assert!(e.neighbor_violations(None, 0.5 - 0.3).is_empty(), "at {t}");
    });
    let (_, _, pos8, q8) = &seen[7];
    assert_eq!(*pos8, 1);
    assert_eq!(q8.value, 5.0);

    // At 9 the checkpoint that started at 1 has expired but is kept.
    let (_, positions9, _, _) = &seen[8];
    assert_eq!(positions9[0], 0);
    assert!(positions9[1] > 0);

    // At 10 the answer comes from the checkpoint that started at 6.
    let (_, positions10, pos10, q10) = &seen[9];
    assert_eq!(*pos10, 4);
    assert_eq!(q10.checkpoint.unwrap().start, 6);
    assert_eq!(names(&s, &q10.seeds), set(&["u2", "u3"]));
    assert_eq!(q10.value, 4.0);
    assert!(positions10.iter().filter(|&&p| p <= 0).count() <= 1);
}

#[test]
fn reduction_example() {
    // {a,b}, {b,c}, {c} with k = 1: the owner plus two elements.
    let r = baselines::reduce_max_k_coverage(&[vec![0, 1], vec![1, 2], vec![2]]).unwrap();
    let v = range_views(&r.stream, &chains(&r.stream).unwrap(), 1, r.stream.actions.len() as u64);
    let best = baselines::exact(&v, &F, 1, DEFAULT_BUDGET).unwrap();
    assert_eq!(best.value, 3.0);
    assert_eq!(r.element_coverage(&v, &best.seeds), baselines::max_coverage(&[vec![0, 1], vec![1, 2], vec![2]], 1));
}
