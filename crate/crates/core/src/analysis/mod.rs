//! Reachability and co-occurrence queries.
//!
//! Policies without affinity clauses, or with anti-affinity only, are
//! anti-monotone: removing functions from a worker never invalidates a
//! block. Queries on those fragments are answered by checking blocks on the
//! emptied configuration. Everything else goes through [`goal_search`].

mod search;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    Configuration, EncodedPolicy, FunctionId, GoalSpec, ModelError, Polarity, Registry, Trace,
    WorkerId, WorkerSet,
};
use crate::semantics::{policy_for, valid, SemanticsError};

pub use search::{goal_search, GoalMode, SearchOptions, SearchStats};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("linear procedure needs an anti-monotone policy, got {0}")]
    WrongFragment(Polarity),
    #[error("`{function}` already runs on `{worker}`")]
    AlreadyPresent {
        function: FunctionId,
        worker: WorkerId,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Semantics(SemanticsError),
    #[error("cannot start search threads: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Decision {
    /// The goal is reachable. The witness is absent only when a linear
    /// procedure answered and no trace was requested.
    Holds { witness: Option<Trace> },
    DoesNotHold,
    BoundExhausted { states_visited: u64 },
}

impl Decision {
    pub fn holds(&self) -> bool {
        matches!(self, Decision::Holds { .. })
    }

    pub fn witness(&self) -> Option<&Trace> {
        match self {
            Decision::Holds { witness } => witness.as_ref(),
            _ => None,
        }
    }
}

pub fn classify(p: &EncodedPolicy) -> Polarity {
    let pos = p.all_blocks().any(|b| !b.affine.is_empty());
    let neg = p.all_blocks().any(|b| !b.anti_affine.is_empty());
    match (pos, neg) {
        (false, false) => Polarity::PlainApp,
        (false, true) => Polarity::NegOnly,
        (true, false) => Polarity::PosOnly,
        (true, true) => Polarity::Full,
    }
}

/// Keeps the blocks that may place functions on `w`, narrowed to `w` alone.
pub fn simplify(p: &EncodedPolicy, w: &WorkerId) -> EncodedPolicy {
    p.map_blocks(|blocks| {
        blocks
            .iter()
            .filter(|b| b.workers.mentions(w))
            .map(|b| {
                let mut b = b.clone();
                b.workers = WorkerSet::List(vec![w.clone()]);
                b
            })
            .collect()
    })
}

fn linear_setup(
    p: &EncodedPolicy,
    reg: &Registry,
    conf: &Configuration,
    fs: &[&FunctionId],
    w: &WorkerId,
) -> Result<(EncodedPolicy, Configuration), AnalysisError> {
    let polarity = classify(p);
    if !polarity.is_anti_monotone() {
        return Err(AnalysisError::WrongFragment(polarity));
    }
    let state = conf.state(w)?;
    for f in fs {
        reg.info(f)?;
        if state.count(f) > 0 {
            return Err(AnalysisError::AlreadyPresent {
                function: (*f).clone(),
                worker: w.clone(),
            });
        }
    }
    Ok((simplify(p, w), conf.emptied()))
}

fn some_block_valid(
    f: &FunctionId,
    w: &WorkerId,
    conf: &Configuration,
    simple: &EncodedPolicy,
    reg: &Registry,
) -> Result<bool, AnalysisError> {
    for b in policy_for(f, simple, reg)? {
        if valid(f, w, conf, reg, b)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Linear reachability for anti-monotone policies.
pub fn reach_linear(
    p: &EncodedPolicy,
    reg: &Registry,
    conf: &Configuration,
    f: &FunctionId,
    w: &WorkerId,
) -> Result<bool, AnalysisError> {
    let (simple, empty) = linear_setup(p, reg, conf, &[f], w)?;
    some_block_valid(f, w, &empty, &simple, reg)
}

/// Linear co-occurrence for anti-monotone policies: one function must fit on
/// the empty worker and the other must still fit next to it.
pub fn cooccur_linear(
    p: &EncodedPolicy,
    reg: &Registry,
    conf: &Configuration,
    f: &FunctionId,
    g: &FunctionId,
    w: &WorkerId,
) -> Result<bool, AnalysisError> {
    if f == g {
        return Err(ModelError::Duplicate(f.to_string()).into());
    }
    let (simple, empty) = linear_setup(p, reg, conf, &[f, g], w)?;
    for (first, second) in [(f, g), (g, f)] {
        if some_block_valid(first, w, &empty, &simple, reg)? {
            let placed = empty.apply_start(first, w, reg)?;
            if some_block_valid(second, w, &placed, &simple, reg)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Every queried function already runs on the worker.
    Trivial,
    Linear,
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueryOptions {
    pub search: SearchOptions,
    /// Run a follow-up search when a linear procedure answers `Holds`.
    pub want_witness: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryReport {
    pub decision: Decision,
    pub polarity: Polarity,
    pub backend: Backend,
    pub stats: Option<SearchStats>,
    pub notes: Vec<String>,
}

fn dispatch(
    p: &EncodedPolicy,
    reg: &Registry,
    conf: &Configuration,
    fs: &[&FunctionId],
    w: &WorkerId,
    goal: &GoalSpec,
    opts: &QueryOptions,
    linear: impl FnOnce() -> Result<bool, AnalysisError>,
) -> Result<QueryReport, AnalysisError> {
    let polarity = classify(p);
    let state = conf.state(w)?;
    for f in fs {
        policy_for(f, p, reg)?;
    }
    let present: Vec<&FunctionId> = fs.iter().copied().filter(|f| state.count(f) > 0).collect();
    let search_opts = SearchOptions {
        mode: GoalMode::AtLeast,
        ..opts.search
    };
    let run_search = |notes| -> Result<QueryReport, AnalysisError> {
        let (decision, stats) = goal_search(p, reg, conf, goal, &search_opts)?;
        Ok(QueryReport {
            decision,
            polarity,
            backend: Backend::Search,
            stats: Some(stats),
            notes,
        })
    };

    if present.len() == fs.len() {
        return Ok(QueryReport {
            decision: Decision::Holds {
                witness: Some(Trace::default()),
            },
            polarity,
            backend: Backend::Trivial,
            stats: None,
            notes: vec![format!("already satisfied by the initial configuration on `{w}`")],
        });
    }
    if !present.is_empty() {
        let names: Vec<&str> = present.iter().map(|f| f.as_str()).collect();
        return run_search(vec![format!(
            "{} already on `{w}`; answered by search",
            names.join(", ")
        )]);
    }
    if !polarity.is_anti_monotone() {
        return run_search(Vec::new());
    }

    if !linear()? {
        return Ok(QueryReport {
            decision: Decision::DoesNotHold,
            polarity,
            backend: Backend::Linear,
            stats: None,
            notes: Vec::new(),
        });
    }
    if !opts.want_witness {
        return Ok(QueryReport {
            decision: Decision::Holds { witness: None },
            polarity,
            backend: Backend::Linear,
            stats: None,
            notes: Vec::new(),
        });
    }
    let (found, stats) = goal_search(p, reg, conf, goal, &search_opts)?;
    let mut notes = Vec::new();
    let witness = match found {
        Decision::Holds { witness } => witness,
        Decision::BoundExhausted { states_visited } => {
            notes.push(format!(
                "witness search stopped after {states_visited} states"
            ));
            None
        }
        Decision::DoesNotHold => {
            // would mean the linear procedure is wrong; surface it loudly
            notes.push("witness search disagrees with the linear procedure".into());
            None
        }
    };
    Ok(QueryReport {
        decision: Decision::Holds { witness },
        polarity,
        backend: Backend::Linear,
        stats: Some(stats),
        notes,
    })
}

/// Can `f` ever run on `w`?
pub fn reach(
    p: &EncodedPolicy,
    reg: &Registry,
    conf: &Configuration,
    f: &FunctionId,
    w: &WorkerId,
    opts: &QueryOptions,
) -> Result<QueryReport, AnalysisError> {
    let goal = GoalSpec::reach(f.clone(), w.clone());
    dispatch(p, reg, conf, &[f], w, &goal, opts, || {
        reach_linear(p, reg, conf, f, w)
    })
}

/// Can `f` and `g` ever run together on `w`?
pub fn cooccur(
    p: &EncodedPolicy,
    reg: &Registry,
    conf: &Configuration,
    f: &FunctionId,
    g: &FunctionId,
    w: &WorkerId,
    opts: &QueryOptions,
) -> Result<QueryReport, AnalysisError> {
    let goal = GoalSpec::cooccur(f.clone(), g.clone(), w.clone())?;
    dispatch(p, reg, conf, &[f, g], w, &goal, opts, || {
        cooccur_linear(p, reg, conf, f, g, w)
    })
}
