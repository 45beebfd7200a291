//! The scheduling transition system.
//!
//! `schedule` walks the blocks of a function's policy in order and stops at
//! the first block with at least one valid worker; `best_first` then takes
//! the first valid worker in block order while `any` may take any of them.
//! Transitions are `start` (allocate through the scheduler), `done`
//! (deallocate any running instance) and `fail` (scheduling is impossible;
//! the configuration is unchanged).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{
    Block, Configuration, EncodedPolicy, FunctionId, Label, ModelError, Registry, Strategy, Tag,
    Trace, WorkerId,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("unknown function `{0}`")]
    UnknownFunction(FunctionId),
    #[error("function `{function}` has tag `{tag}`, which has no policy")]
    UntaggedFunction { function: FunctionId, tag: Tag },
    #[error("transition {index} {label} is illegal under rule {}: {reason}", reason.rule())]
    IllegalTransition {
        index: usize,
        label: Label,
        reason: Violation,
    },
}

/// Why a label cannot fire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `start` requested but no block has a valid worker.
    NotSchedulable,
    /// `start` on a worker the scheduler would not pick.
    NotSelected { allowed: Vec<WorkerId> },
    /// `fail` requested while the function is schedulable.
    Schedulable,
    /// The configuration update itself is impossible.
    Model(ModelError),
}

impl Violation {
    pub fn rule(&self) -> &'static str {
        match self {
            Violation::NotSchedulable | Violation::NotSelected { .. } => "C_start",
            Violation::Schedulable => "C_fail",
            Violation::Model(ModelError::FunctionNotAllocated { .. }) => "C_done",
            Violation::Model(_) => "C_start",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotSchedulable => f.write_str("no block has a valid worker"),
            Violation::NotSelected { allowed } => {
                let names: Vec<&str> = allowed.iter().map(|w| w.as_str()).collect();
                write!(f, "the scheduler can only pick [{}]", names.join(", "))
            }
            Violation::Schedulable => f.write_str("the function is schedulable"),
            Violation::Model(e) => write!(f, "{e}"),
        }
    }
}

/// Whether `w` may host one more instance of `f` under block `b`.
///
/// Capacity and invalidation thresholds are read on the load before `f` is
/// added. Affinity checks look at the set of tags present on `w`.
pub fn valid(
    f: &FunctionId,
    w: &WorkerId,
    conf: &Configuration,
    reg: &Registry,
    b: &Block,
) -> Result<bool, SemanticsError> {
    let occ = reg
        .occupancy(f)
        .map_err(|_| SemanticsError::UnknownFunction(f.clone()))?;
    let Some(state) = conf.worker(w) else {
        return Ok(false);
    };
    if state.used() + occ > state.max() {
        return Ok(false);
    }
    if let Some(n) = b.capacity_threshold() {
        if state.used() * 100 >= u64::from(n) * state.max() {
            return Ok(false);
        }
    }
    if let Some(n) = b.max_concurrent() {
        if state.instance_count() >= n {
            return Ok(false);
        }
    }
    if !b.affine.iter().all(|t| state.hosts_tag(t, reg)) {
        return Ok(false);
    }
    if b.anti_affine.iter().any(|t| state.hosts_tag(t, reg)) {
        return Ok(false);
    }
    Ok(true)
}

/// Result of the block walk: the first block with valid workers, or none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Candidates {
    Found {
        block_index: usize,
        strategy: Strategy,
        workers: Vec<WorkerId>,
    },
    Empty,
}

impl Candidates {
    /// Workers a `start` transition may target: the first valid worker
    /// under `best_first`, every valid worker under `any`.
    pub fn selectable(&self) -> &[WorkerId] {
        match self {
            Candidates::Found {
                strategy: Strategy::BestFirst,
                workers,
                ..
            } => &workers[..1],
            Candidates::Found { workers, .. } => workers,
            Candidates::Empty => &[],
        }
    }
}

/// The encoded blocks governing `f`.
pub fn policy_for<'p>(
    f: &FunctionId,
    p: &'p EncodedPolicy,
    reg: &Registry,
) -> Result<&'p [Block], SemanticsError> {
    let tag = reg
        .tag(f)
        .map_err(|_| SemanticsError::UnknownFunction(f.clone()))?;
    p.blocks(tag).ok_or_else(|| SemanticsError::UntaggedFunction {
        function: f.clone(),
        tag: tag.clone(),
    })
}

pub fn schedule_candidates(
    f: &FunctionId,
    conf: &Configuration,
    p: &EncodedPolicy,
    reg: &Registry,
) -> Result<Candidates, SemanticsError> {
    for (i, b) in policy_for(f, p, reg)?.iter().enumerate() {
        let mut workers = Vec::new();
        for w in b.workers.expand(conf) {
            if valid(f, &w, conf, reg, b)? {
                workers.push(w);
            }
        }
        if !workers.is_empty() {
            return Ok(Candidates::Found {
                block_index: i,
                strategy: b.strategy,
                workers,
            });
        }
    }
    Ok(Candidates::Empty)
}

/// Source of the choices `any` makes.
pub trait Chooser {
    /// Returns an index in `0..n`; `n` is at least 1.
    fn choose(&mut self, n: usize) -> usize;
}

/// Reproducible chooser backed by a seeded ChaCha stream.
#[derive(Debug, Clone)]
pub struct SeededChooser(ChaCha8Rng);

impl SeededChooser {
    pub fn new(seed: u64) -> Self {
        SeededChooser(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Chooser for SeededChooser {
    fn choose(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleOutcome {
    Chosen { block_index: usize, worker: WorkerId },
    Failed,
}

impl ScheduleOutcome {
    /// The transition label this outcome corresponds to.
    pub fn label(&self, f: &FunctionId) -> Label {
        match self {
            ScheduleOutcome::Chosen { worker, .. } => Label::Start(f.clone(), worker.clone()),
            ScheduleOutcome::Failed => Label::Fail(f.clone()),
        }
    }
}

pub fn schedule(
    f: &FunctionId,
    conf: &Configuration,
    p: &EncodedPolicy,
    reg: &Registry,
    chooser: &mut dyn Chooser,
) -> Result<ScheduleOutcome, SemanticsError> {
    Ok(match schedule_candidates(f, conf, p, reg)? {
        Candidates::Found {
            block_index,
            strategy,
            workers,
        } => {
            let worker = match strategy {
                Strategy::BestFirst => workers[0].clone(),
                Strategy::Any => workers[chooser.choose(workers.len())].clone(),
            };
            ScheduleOutcome::Chosen {
                block_index,
                worker,
            }
        }
        Candidates::Empty => ScheduleOutcome::Failed,
    })
}

fn illegal(index: usize, label: &Label, reason: Violation) -> SemanticsError {
    SemanticsError::IllegalTransition {
        index,
        label: label.clone(),
        reason,
    }
}

fn step_at(
    conf: &Configuration,
    label: &Label,
    p: &EncodedPolicy,
    reg: &Registry,
    strict: bool,
    index: usize,
) -> Result<Configuration, SemanticsError> {
    match label {
        Label::Start(f, w) => {
            if strict {
                let cands = schedule_candidates(f, conf, p, reg)?;
                if cands == Candidates::Empty {
                    return Err(illegal(index, label, Violation::NotSchedulable));
                }
                if !cands.selectable().contains(w) {
                    return Err(illegal(
                        index,
                        label,
                        Violation::NotSelected {
                            allowed: cands.selectable().to_vec(),
                        },
                    ));
                }
            } else if !reg.contains(f) {
                return Err(SemanticsError::UnknownFunction(f.clone()));
            }
            conf.apply_start(f, w, reg)
                .map_err(|e| illegal(index, label, Violation::Model(e)))
        }
        Label::Done(f, w) => {
            if !reg.contains(f) {
                return Err(SemanticsError::UnknownFunction(f.clone()));
            }
            conf.apply_done(f, w, reg)
                .map_err(|e| illegal(index, label, Violation::Model(e)))
        }
        Label::Fail(f) => match schedule_candidates(f, conf, p, reg)? {
            Candidates::Empty => Ok(conf.clone()),
            Candidates::Found { .. } => Err(illegal(index, label, Violation::Schedulable)),
        },
    }
}

/// Fires one transition, checking that the scheduler could have produced it.
pub fn step(
    conf: &Configuration,
    label: &Label,
    p: &EncodedPolicy,
    reg: &Registry,
) -> Result<Configuration, SemanticsError> {
    step_at(conf, label, p, reg, true, 0)
}

/// Folds [`step`] over a trace. With `strict == false`, `start` labels only
/// need capacity on the target worker, which suits plans produced by other
/// tools.
pub fn replay(
    conf: &Configuration,
    trace: &Trace,
    p: &EncodedPolicy,
    reg: &Registry,
    strict: bool,
) -> Result<Configuration, SemanticsError> {
    let mut current = conf.clone();
    for (i, label) in trace.labels.iter().enumerate() {
        current = step_at(&current, label, p, reg, strict, i)?;
    }
    Ok(current)
}

/// Every label that can fire from `conf`, in a fixed order: for each
/// function, its `start` labels, then its `done` labels, then `fail` when
/// requested and applicable.
pub fn enabled_labels(
    conf: &Configuration,
    p: &EncodedPolicy,
    reg: &Registry,
    include_fail: bool,
) -> Result<Vec<Label>, SemanticsError> {
    let mut out = Vec::new();
    for f in reg.functions() {
        let cands = schedule_candidates(f, conf, p, reg)?;
        out.extend(
            cands
                .selectable()
                .iter()
                .map(|w| Label::Start(f.clone(), w.clone())),
        );
        for (w, state) in conf.iter() {
            if state.count(f) > 0 {
                out.push(Label::Done(f.clone(), w.clone()));
            }
        }
        if include_fail && cands == Candidates::Empty {
            out.push(Label::Fail(f.clone()));
        }
    }
    Ok(out)
}
