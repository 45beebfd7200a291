//! Random small instances and a reference reachability oracle.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use aapp_core::analysis::classify;
use aapp_core::encoder::encode;
use aapp_core::parser::{AffinityOpt, Followup, RawBlock, ScriptAst, TagDecl};
use aapp_core::semantics::{enabled_labels, step};
use aapp_core::{
    CanonicalState, Configuration, EncodedPolicy, FunctionId, GoalSpec, InvalidateOpt, Polarity,
    Registry, Strategy as Strat, Tag, WorkerId, WorkerSet,
};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fragment {
    Plain,
    NegOnly,
    Any,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub ast: ScriptAst,
    pub policy: EncodedPolicy,
    pub reg: Registry,
    pub conf: Configuration,
}

impl Instance {
    pub fn workers(&self) -> Vec<WorkerId> {
        self.conf.worker_ids().cloned().collect()
    }
    pub fn functions(&self) -> Vec<FunctionId> {
        self.reg.functions().cloned().collect()
    }
}

pub fn wid(i: usize) -> WorkerId {
    WorkerId::new(format!("w{i}")).unwrap()
}
pub fn fid(i: usize) -> FunctionId {
    FunctionId::new(format!("f{i}")).unwrap()
}
pub fn tid(i: usize) -> Tag {
    Tag::new(format!("t{i}")).unwrap()
}

type BlockSeed = (
    Option<Vec<usize>>,
    Option<bool>,
    Option<u8>,
    Option<u32>,
    Vec<usize>,
    Vec<usize>,
);

fn block(nw: usize, nt: usize, fragment: Fragment) -> impl Strategy<Value = BlockSeed> {
    let pos = if fragment == Fragment::Any { 2 } else { 0 };
    let neg = if fragment == Fragment::Plain { 0 } else { 2 };
    (
        prop::option::weighted(0.6, prop::collection::vec(0..nw, 1..=nw)),
        prop::option::of(any::<bool>()),
        prop::option::of(1u8..=100),
        prop::option::of(1u32..=4),
        prop::collection::vec(0..nt, 0..=pos),
        prop::collection::vec(0..nt, 0..=neg),
    )
}

fn make_block(seed: BlockSeed) -> RawBlock {
    let (ws, strategy, cap, conc, pos, neg) = seed;
    let mut invalidate = Vec::new();
    invalidate.extend(cap.map(InvalidateOpt::CapacityUsed));
    invalidate.extend(conc.map(InvalidateOpt::MaxConcurrent));
    let mut affinity = Vec::new();
    for t in dedup(pos) {
        affinity.push(AffinityOpt::Affine(tid(t)));
    }
    for t in dedup(neg) {
        affinity.push(AffinityOpt::AntiAffine(tid(t)));
    }
    RawBlock {
        workers: match ws {
            None => WorkerSet::Star,
            Some(ws) => WorkerSet::List(dedup(ws).into_iter().map(wid).collect()),
        },
        strategy: strategy.map(|b| if b { Strat::BestFirst } else { Strat::Any }),
        invalidate: (!invalidate.is_empty()).then_some(invalidate),
        affinity: (!affinity.is_empty()).then_some(affinity),
    }
}

fn dedup(xs: Vec<usize>) -> Vec<usize> {
    let mut out = Vec::new();
    for x in xs {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Up to 3 workers (max 1–8), 4 functions (occupancy 1–4), 3 tags and
/// 3 blocks per tag, plus some initial allocations.
pub fn instance(fragment: Fragment, with_initial: bool) -> impl Strategy<Value = Instance> {
    (1..=3usize, 1..=4usize, 1..=3usize)
        .prop_flat_map(move |(nw, nf, nt)| {
            (
                prop::collection::vec(1u64..=8, nw),
                prop::collection::vec((1u64..=4, 0..nt), nf),
                prop::collection::vec(
                    (
                        any::<bool>(),
                        prop::collection::vec(block(nw, nt, fragment), 1..=3),
                    ),
                    nt,
                ),
                prop::collection::vec(0u32..=2, nw * nf),
            )
        })
        .prop_map(move |(maxes, funcs, tags, init)| {
            let ast = ScriptAst {
                tags: tags
                    .into_iter()
                    .enumerate()
                    .map(|(i, (fail, blocks))| TagDecl {
                        tag: tid(i),
                        blocks: blocks.into_iter().map(make_block).collect(),
                        followup: fail.then_some(Followup::Fail),
                    })
                    .collect(),
            };
            let policy = encode(&ast);
            let reg =
                Registry::from_entries(funcs.iter().enumerate().map(|(i, &(occ, t))| (fid(i), occ, tid(t))))
                    .unwrap();
            let mut conf =
                Configuration::with_workers(maxes.iter().enumerate().map(|(i, &m)| (wid(i), m))).unwrap();
            if with_initial {
                let nf = funcs.len();
                for (k, n) in init.into_iter().enumerate() {
                    for _ in 0..n {
                        if let Ok(next) = conf.apply_start(&fid(k % nf), &wid(k / nf), &reg) {
                            conf = next;
                        }
                    }
                }
            }
            Instance {
                ast,
                policy,
                reg,
                conf,
            }
        })
        .prop_filter("fragment", move |i| match fragment {
            Fragment::Plain => classify(&i.policy) == Polarity::PlainApp,
            Fragment::NegOnly => classify(&i.policy) == Polarity::NegOnly,
            Fragment::Any => true,
        })
}

pub fn satisfies(c: &Configuration, g: &GoalSpec, exact: bool) -> bool {
    g.constraints().iter().all(|k| {
        let n = c.worker(&k.worker).map_or(0, |s| s.count(&k.function));
        if exact {
            n == k.min_count
        } else {
            n >= k.min_count
        }
    })
}

pub struct OracleResult {
    /// Length of a shortest trace to the goal, if any.
    pub distance: Option<usize>,
    pub states: usize,
    pub truncated: bool,
}

/// Breadth-first search over `Configuration` values driven only by
/// [`step`]. Stops at `limit` states.
pub fn oracle(inst: &Instance, g: &GoalSpec, exact: bool, limit: usize) -> OracleResult {
    let mut seen: HashSet<CanonicalState> = HashSet::new();
    let mut queue = VecDeque::from([(inst.conf.clone(), 0usize)]);
    seen.insert(inst.conf.canonicalize());
    while let Some((c, d)) = queue.pop_front() {
        if satisfies(&c, g, exact) {
            return OracleResult {
                distance: Some(d),
                states: seen.len(),
                truncated: false,
            };
        }
        for l in enabled_labels(&c, &inst.policy, &inst.reg, false).unwrap() {
            let next = step(&c, &l, &inst.policy, &inst.reg).unwrap();
            if seen.insert(next.canonicalize()) {
                if seen.len() > limit {
                    return OracleResult {
                        distance: None,
                        states: seen.len(),
                        truncated: true,
                    };
                }
                queue.push_back((next, d + 1));
            }
        }
    }
    OracleResult {
        distance: None,
        states: seen.len(),
        truncated: false,
    }
}
