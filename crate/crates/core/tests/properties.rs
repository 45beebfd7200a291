mod common;

use aapp_core::analysis::{
    cooccur_linear, goal_search, reach_linear, simplify, Decision, SearchOptions,
};
use aapp_core::encoder::{encode, to_script};
use aapp_core::parser::{parse_script, print_script};
use aapp_core::semantics::{
    enabled_labels, replay, schedule, schedule_candidates, step, ScheduleOutcome, SeededChooser,
};
use aapp_core::{GoalConstraint, GoalSpec, Label, Trace, WorkerSet};
use common::{fid, instance, oracle, satisfies, wid, Fragment, Instance};
use proptest::prelude::*;

/// Follows `picks` through the enabled labels (fail included), returning the
/// trace taken.
fn walk(inst: &Instance, picks: &[usize]) -> Trace {
    let mut c = inst.conf.clone();
    let mut labels = Vec::new();
    for &k in picks {
        let enabled = enabled_labels(&c, &inst.policy, &inst.reg, true).unwrap();
        if enabled.is_empty() {
            break;
        }
        let l = enabled[k % enabled.len()].clone();
        c = step(&c, &l, &inst.policy, &inst.reg).unwrap();
        labels.push(l);
    }
    Trace::new(labels)
}

fn goal_from(inst: &Instance, picks: &[(usize, usize, u32)]) -> GoalSpec {
    let ws = inst.workers();
    let fs = inst.functions();
    let mut constraints: Vec<GoalConstraint> = Vec::new();
    for &(w, f, n) in picks {
        let c = GoalConstraint {
            worker: ws[w % ws.len()].clone(),
            function: fs[f % fs.len()].clone(),
            min_count: n,
        };
        if !constraints
            .iter()
            .any(|d| d.worker == c.worker && d.function == c.function)
        {
            constraints.push(c);
        }
    }
    GoalSpec::new(constraints).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_scripts_parse_back(inst in instance(Fragment::Any, false)) {
        let text = print_script(&inst.ast);
        prop_assert_eq!(parse_script(&text).unwrap(), inst.ast);
    }

    #[test]
    fn encoding_is_stable_through_script_form(inst in instance(Fragment::Any, false)) {
        let text = print_script(&to_script(&inst.policy));
        prop_assert_eq!(encode(&parse_script(&text).unwrap()), inst.policy);
    }

    #[test]
    fn transitions_conserve_capacity(
        inst in instance(Fragment::Any, true),
        picks in prop::collection::vec(any::<usize>(), 0..40),
    ) {
        let trace = walk(&inst, &picks);
        let mut c = inst.conf.clone();
        for l in &trace.labels {
            c = step(&c, l, &inst.policy, &inst.reg).unwrap();
            prop_assert!(c.check_invariants(&inst.reg).is_ok(), "{:?}", c.check_invariants(&inst.reg));
        }
        prop_assert_eq!(replay(&inst.conf, &trace, &inst.policy, &inst.reg, true).unwrap(), c);
    }

    #[test]
    fn canonical_form_identifies_configurations(
        inst in instance(Fragment::Any, false),
        a in prop::collection::vec(any::<usize>(), 0..12),
        b in prop::collection::vec(any::<usize>(), 0..12),
    ) {
        let ca = replay(&inst.conf, &walk(&inst, &a), &inst.policy, &inst.reg, true).unwrap();
        let cb = replay(&inst.conf, &walk(&inst, &b), &inst.policy, &inst.reg, true).unwrap();
        prop_assert_eq!(ca.canonicalize() == cb.canonicalize(), ca == cb);
    }

    #[test]
    fn simplify_is_idempotent(inst in instance(Fragment::Any, false), w in 0usize..3) {
        let w = wid(w % inst.conf.len());
        let once = simplify(&inst.policy, &w);
        prop_assert_eq!(simplify(&once, &w), once.clone());
        for b in once.all_blocks() {
            prop_assert_eq!(&b.workers, &WorkerSet::List(vec![w.clone()]));
        }
    }

    #[test]
    fn schedule_picks_a_selectable_worker(
        inst in instance(Fragment::Any, true),
        f in 0usize..4,
        seed in any::<u64>(),
    ) {
        let f = fid(f % inst.reg.len());
        let mut chooser = SeededChooser::new(seed);
        let out = schedule(&f, &inst.conf, &inst.policy, &inst.reg, &mut chooser).unwrap();
        let cands = schedule_candidates(&f, &inst.conf, &inst.policy, &inst.reg).unwrap();
        if let ScheduleOutcome::Chosen { worker, .. } = &out {
            prop_assert!(cands.selectable().contains(worker));
        }
        prop_assert!(step(&inst.conf, &out.label(&f), &inst.policy, &inst.reg).is_ok());
    }

    #[test]
    fn search_matches_reference_oracle(
        inst in instance(Fragment::Any, true),
        picks in prop::collection::vec((0usize..3, 0usize..4, 1u32..=2), 1..=2),
    ) {
        let goal = goal_from(&inst, &picks);
        let reference = oracle(&inst, &goal, false, 200);
        prop_assume!(!reference.truncated);
        let (d, stats) = goal_search(&inst.policy, &inst.reg, &inst.conf, &goal, &SearchOptions::default()).unwrap();
        match (&d, reference.distance) {
            (Decision::Holds { witness: Some(tr) }, Some(n)) => {
                // shortest: no trace shorter than the oracle's distance exists
                prop_assert_eq!(tr.len(), n);
                prop_assert_eq!(stats.witness_length, Some(n as u64));
                let end = replay(&inst.conf, tr, &inst.policy, &inst.reg, true).unwrap();
                prop_assert!(satisfies(&end, &goal, false));
                prop_assert!(!tr.labels.iter().any(|l| matches!(l, Label::Fail(_))));
            }
            (Decision::DoesNotHold, None) => {
                prop_assert_eq!(stats.states_visited as usize, reference.states);
            }
            (d, n) => prop_assert!(false, "search {:?} vs oracle {:?}", d, n),
        }
    }

    #[test]
    fn thread_count_does_not_change_results(
        inst in instance(Fragment::Any, false),
        picks in prop::collection::vec((0usize..3, 0usize..4, 1u32..=3), 1..=3),
    ) {
        let goal = goal_from(&inst, &picks);
        let run = |threads| goal_search(
            &inst.policy, &inst.reg, &inst.conf, &goal,
            &SearchOptions { threads, max_states: Some(20_000), ..Default::default() },
        ).unwrap();
        prop_assert_eq!(run(1), run(3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn linear_reach_agrees_with_search(
        inst in instance(Fragment::NegOnly, true),
        f in 0usize..4,
        w in 0usize..3,
    ) {
        let f = fid(f % inst.reg.len());
        let w = wid(w % inst.conf.len());
        prop_assume!(inst.conf.worker(&w).unwrap().count(&f) == 0);
        let linear = reach_linear(&inst.policy, &inst.reg, &inst.conf, &f, &w).unwrap();
        let (d, _) = goal_search(&inst.policy, &inst.reg, &inst.conf, &GoalSpec::reach(f, w), &SearchOptions::default()).unwrap();
        prop_assert_eq!(linear, d.holds());
    }

    #[test]
    fn linear_cooccur_agrees_with_search(
        inst in instance(Fragment::Plain, true),
        f in 0usize..4,
        g in 0usize..4,
        w in 0usize..3,
    ) {
        let (f, g) = (fid(f % inst.reg.len()), fid(g % inst.reg.len()));
        let w = wid(w % inst.conf.len());
        prop_assume!(f != g);
        let s = inst.conf.worker(&w).unwrap();
        prop_assume!(s.count(&f) == 0 && s.count(&g) == 0);
        let linear = cooccur_linear(&inst.policy, &inst.reg, &inst.conf, &f, &g, &w).unwrap();
        let goal = GoalSpec::cooccur(f, g, w).unwrap();
        let (d, _) = goal_search(&inst.policy, &inst.reg, &inst.conf, &goal, &SearchOptions::default()).unwrap();
        prop_assert_eq!(linear, d.holds());
    }
}
