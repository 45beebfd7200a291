//! Breadth-first exploration of the configuration graph.
//!
//! The policy, registry and configuration are compiled into index form so a
//! state is just a dense `workers × functions` count matrix. States are
//! expanded level by level; within a level, successors are merged in
//! frontier order, which keeps the first-found witness independent of how
//! many threads produced them.

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::Serialize;

use super::{AnalysisError, Decision};
use crate::model::{
    Configuration, EncodedPolicy, FunctionId, GoalSpec, Label, ModelError, Registry, Strategy,
    Trace, WorkerId,
};
use crate::semantics::{policy_for, SemanticsError};

/// How goal counts compare against the required count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalMode {
    #[default]
    AtLeast,
    Exactly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Stop with `BoundExhausted` once this many distinct states are stored.
    pub max_states: Option<u64>,
    pub mode: GoalMode,
    /// Worker threads for frontier expansion; 0 and 1 both mean sequential.
    pub threads: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_states: None,
            mode: GoalMode::AtLeast,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SearchStats {
    pub states_visited: u64,
    pub frontier_peak: u64,
    pub witness_length: Option<u64>,
}

type Counts = Box<[u32]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Start(u32, u32),
    Done(u32, u32),
}

#[derive(Debug)]
struct CBlock {
    workers: Vec<usize>,
    best_first: bool,
    cap: Option<u64>,
    max_conc: Option<u64>,
    // `None` stands for a tag no registered function carries
    affine: Vec<Option<usize>>,
    anti: Vec<Option<usize>>,
}

#[derive(Debug)]
struct Compiled {
    workers: Vec<WorkerId>,
    functions: Vec<FunctionId>,
    occ: Vec<u64>,
    max: Vec<u64>,
    ftag: Vec<usize>,
    ntags: usize,
    blocks: Vec<Vec<CBlock>>,
    goal: Vec<(usize, usize, u32)>,
    mode: GoalMode,
}

impl Compiled {
    fn new(
        p: &EncodedPolicy,
        reg: &Registry,
        conf: &Configuration,
        goal: &GoalSpec,
        mode: GoalMode,
    ) -> Result<Self, AnalysisError> {
        let workers: Vec<WorkerId> = conf.worker_ids().cloned().collect();
        let functions: Vec<FunctionId> = reg.functions().cloned().collect();
        let widx = |w: &WorkerId| workers.binary_search(w).ok();
        let fidx = |f: &FunctionId| functions.binary_search(f).ok();

        let mut tags = Vec::new();
        let mut ftag = Vec::with_capacity(functions.len());
        for f in &functions {
            let t = reg.tag(f)?;
            let i = match tags.iter().position(|x| x == t) {
                Some(i) => i,
                None => {
                    tags.push(t.clone());
                    tags.len() - 1
                }
            };
            ftag.push(i);
        }
        let tag_ref = |t| tags.iter().position(|x| x == t);

        let mut blocks = Vec::with_capacity(functions.len());
        for f in &functions {
            let bs = policy_for(f, p, reg)?;
            blocks.push(
                bs.iter()
                    .map(|b| CBlock {
                        workers: b.workers.expand(conf).iter().filter_map(widx).collect(),
                        best_first: b.strategy == Strategy::BestFirst,
                        cap: b.capacity_threshold().map(u64::from),
                        max_conc: b.max_concurrent().map(u64::from),
                        affine: b.affine.iter().map(tag_ref).collect(),
                        anti: b.anti_affine.iter().map(tag_ref).collect(),
                    })
                    .collect(),
            );
        }

        let mut compiled_goal = Vec::new();
        for c in goal.constraints() {
            let w = widx(&c.worker).ok_or_else(|| ModelError::UnknownWorker(c.worker.clone()))?;
            let f =
                fidx(&c.function).ok_or_else(|| ModelError::UnknownFunction(c.function.clone()))?;
            compiled_goal.push((w, f, c.min_count));
        }

        Ok(Compiled {
            occ: functions
                .iter()
                .map(|f| reg.occupancy(f))
                .collect::<Result<_, _>>()?,
            max: workers
                .iter()
                .map(|w| conf.state(w).map(|s| s.max()))
                .collect::<Result<_, _>>()?,
            ntags: tags.len(),
            workers,
            functions,
            ftag,
            blocks,
            goal: compiled_goal,
            mode,
        })
    }

    fn nf(&self) -> usize {
        self.functions.len()
    }

    fn initial(&self, conf: &Configuration) -> Counts {
        let nf = self.nf();
        let mut counts = vec![0u32; self.workers.len() * nf];
        for (wi, w) in self.workers.iter().enumerate() {
            if let Some(state) = conf.worker(w) {
                for (fi, f) in self.functions.iter().enumerate() {
                    counts[wi * nf + fi] = state.count(f);
                }
            }
        }
        counts.into_boxed_slice()
    }

    fn is_goal(&self, s: &[u32]) -> bool {
        let nf = self.nf();
        self.goal.iter().all(|&(w, f, n)| {
            let have = s[w * nf + f];
            match self.mode {
                GoalMode::AtLeast => have >= n,
                GoalMode::Exactly => have == n,
            }
        })
    }

    fn successors(&self, s: &[u32]) -> Vec<(Counts, Step)> {
        let nf = self.nf();
        let nw = self.workers.len();
        let mut used = vec![0u64; nw];
        let mut inst = vec![0u64; nw];
        let mut present = vec![false; nw * self.ntags];
        for w in 0..nw {
            for f in 0..nf {
                let n = s[w * nf + f];
                if n > 0 {
                    used[w] += self.occ[f] * u64::from(n);
                    inst[w] += u64::from(n);
                    present[w * self.ntags + self.ftag[f]] = true;
                }
            }
        }
        let valid = |f: usize, w: usize, b: &CBlock| {
            let hosts = |t: &Option<usize>| t.is_some_and(|t| present[w * self.ntags + t]);
            used[w] + self.occ[f] <= self.max[w]
                && b.cap.map_or(true, |n| used[w] * 100 < n * self.max[w])
                && b.max_conc.map_or(true, |n| inst[w] < n)
                && b.affine.iter().all(hosts)
                && !b.anti.iter().any(hosts)
        };

        let mut out = Vec::new();
        let mut push = |s: &[u32], w: usize, f: usize, delta: i64, step: Step| {
            let mut next: Counts = s.into();
            let cell = &mut next[w * nf + f];
            *cell = (i64::from(*cell) + delta) as u32;
            out.push((next, step));
        };
        for f in 0..nf {
            for b in &self.blocks[f] {
                let mut any = false;
                for &w in &b.workers {
                    if valid(f, w, b) {
                        any = true;
                        push(s, w, f, 1, Step::Start(f as u32, w as u32));
                        if b.best_first {
                            break;
                        }
                    }
                }
                if any {
                    break;
                }
            }
            for w in 0..nw {
                if s[w * nf + f] > 0 {
                    push(s, w, f, -1, Step::Done(f as u32, w as u32));
                }
            }
        }
        out
    }

    fn label(&self, step: Step) -> Label {
        match step {
            Step::Start(f, w) => Label::Start(
                self.functions[f as usize].clone(),
                self.workers[w as usize].clone(),
            ),
            Step::Done(f, w) => Label::Done(
                self.functions[f as usize].clone(),
                self.workers[w as usize].clone(),
            ),
        }
    }
}

struct Node {
    state: Counts,
    parent: usize,
    step: Option<Step>,
}

/// Searches for a shortest trace from `conf` to a configuration meeting
/// `goal`. `fail` transitions are never explored since they do not change
/// the configuration.
pub fn goal_search(
    p: &EncodedPolicy,
    reg: &Registry,
    conf: &Configuration,
    goal: &GoalSpec,
    opts: &SearchOptions,
) -> Result<(Decision, SearchStats), AnalysisError> {
    let model = Compiled::new(p, reg, conf, goal, opts.mode)?;
    let pool = if opts.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.threads)
                .build()
                .map_err(|e| AnalysisError::ThreadPool(e.to_string()))?,
        )
    } else {
        None
    };

    let root = model.initial(conf);
    let mut stats = SearchStats {
        states_visited: 1,
        frontier_peak: 1,
        witness_length: None,
    };
    if model.is_goal(&root) {
        stats.witness_length = Some(0);
        return Ok((
            Decision::Holds {
                witness: Some(Trace::default()),
            },
            stats,
        ));
    }

    let mut nodes = vec![Node {
        state: root.clone(),
        parent: usize::MAX,
        step: None,
    }];
    let mut index: FxHashSet<Counts> = FxHashSet::default();
    index.insert(root);
    let mut frontier = vec![0usize];

    while !frontier.is_empty() {
        let expand = |&i: &usize| model.successors(&nodes[i].state);
        let expanded: Vec<Vec<(Counts, Step)>> = match &pool {
            Some(pool) if frontier.len() > 64 => {
                pool.install(|| frontier.par_iter().map(expand).collect())
            }
            _ => frontier.iter().map(expand).collect(),
        };

        let mut next = Vec::new();
        for (&parent, succs) in frontier.iter().zip(expanded) {
            for (state, step) in succs {
                if index.contains(&state) {
                    continue;
                }
                if model.is_goal(&state) {
                    stats.states_visited = index.len() as u64 + 1;
                    let trace = witness(&model, &nodes, parent, step);
                    stats.witness_length = Some(trace.len() as u64);
                    return Ok((
                        Decision::Holds {
                            witness: Some(trace),
                        },
                        stats,
                    ));
                }
                if opts
                    .max_states
                    .is_some_and(|bound| index.len() as u64 >= bound)
                {
                    stats.states_visited = index.len() as u64;
                    return Ok((
                        Decision::BoundExhausted {
                            states_visited: stats.states_visited,
                        },
                        stats,
                    ));
                }
                index.insert(state.clone());
                next.push(nodes.len());
                nodes.push(Node {
                    state,
                    parent,
                    step: Some(step),
                });
            }
        }
        stats.frontier_peak = stats.frontier_peak.max(next.len() as u64);
        frontier = next;
    }
    stats.states_visited = index.len() as u64;
    Ok((Decision::DoesNotHold, stats))
}

fn witness(model: &Compiled, nodes: &[Node], mut at: usize, last: Step) -> Trace {
    let mut steps = vec![last];
    while let Some(step) = nodes[at].step {
        steps.push(step);
        at = nodes[at].parent;
    }
    steps.reverse();
    Trace::new(steps.into_iter().map(|s| model.label(s)).collect())
}

impl From<SemanticsError> for AnalysisError {
    fn from(e: SemanticsError) -> Self {
        AnalysisError::Semantics(e)
    }
}
