//! Domain types shared by every stage of the pipeline: identifiers, the
//! function registry, platform configurations, policy blocks, transition
//! labels and goal specifications.
//!
//! Configurations have value semantics. [`Configuration::apply_start`] and
//! [`Configuration::apply_done`] return a fresh configuration and leave the
//! receiver untouched.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Returns true when `text` matches `[A-Za-z_][A-Za-z0-9_-]*`.
pub fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid identifier {0:?}")]
pub struct InvalidIdentifier(pub String);

macro_rules! identifier_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(text: impl Into<String>) -> Result<Self, InvalidIdentifier> {
                let text = text.into();
                if is_identifier(&text) {
                    Ok(Self(text))
                } else {
                    Err(InvalidIdentifier(text))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = InvalidIdentifier;

            fn try_from(text: String) -> Result<Self, Self::Error> {
                Self::new(text)
            }
        }

        impl TryFrom<&str> for $name {
            type Error = InvalidIdentifier;

            fn try_from(text: &str) -> Result<Self, Self::Error> {
                Self::new(text)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

identifier_type!(
    /// Name of a worker node.
    WorkerId
);
identifier_type!(
    /// Name of a deployable function.
    FunctionId
);
identifier_type!(
    /// Name of a scheduling policy; functions are linked to policies by tag.
    Tag
);

impl Tag {
    pub const DEFAULT: &'static str = "default";

    pub fn default_tag() -> Tag {
        Tag(Self::DEFAULT.to_string())
    }

    pub fn is_default(&self) -> bool {
        self.0 == Self::DEFAULT
    }
}

/// Errors raised by the elementary configuration and registry operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown worker `{0}`")]
    UnknownWorker(WorkerId),
    #[error("unknown function `{0}`")]
    UnknownFunction(FunctionId),
    #[error("allocating `{function}` on `{worker}` needs {needed} units but only {free} are free")]
    CapacityExceeded {
        function: FunctionId,
        worker: WorkerId,
        needed: u64,
        free: u64,
    },
    #[error("function `{function}` is not allocated on `{worker}`")]
    FunctionNotAllocated {
        function: FunctionId,
        worker: WorkerId,
    },
    #[error("function `{0}` has occupancy 0; occupancies must be at least 1")]
    ZeroOccupancy(FunctionId),
    #[error("duplicate entry `{0}`")]
    Duplicate(String),
    #[error("a configuration needs at least one worker")]
    NoWorkers,
    #[error("goal must contain at least one constraint")]
    EmptyGoal,
    #[error("goal constraint on ({worker}, {function}) needs a count of at least 1")]
    ZeroGoalCount {
        worker: WorkerId,
        function: FunctionId,
    },
}

/// Occupancy and tag of a registered function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionInfo {
    pub occupancy: u64,
    pub tag: Tag,
}

/// Maps every known function to its occupancy and tag.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Registry {
    entries: BTreeMap<FunctionId, FunctionInfo>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I>(entries: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (FunctionId, u64, Tag)>,
    {
        let mut reg = Registry::new();
        for (f, occ, tag) in entries {
            reg.insert(f, occ, tag)?;
        }
        Ok(reg)
    }

    /// Registers a function. Occupancy 0 is rejected so that every reachable
    /// state space stays finite.
    pub fn insert(&mut self, f: FunctionId, occupancy: u64, tag: Tag) -> Result<(), ModelError> {
        if occupancy == 0 {
            return Err(ModelError::ZeroOccupancy(f));
        }
        if self.entries.contains_key(&f) {
            return Err(ModelError::Duplicate(f.to_string()));
        }
        self.entries.insert(f, FunctionInfo { occupancy, tag });
        Ok(())
    }

    pub fn get(&self, f: &FunctionId) -> Option<&FunctionInfo> {
        self.entries.get(f)
    }

    pub fn info(&self, f: &FunctionId) -> Result<&FunctionInfo, ModelError> {
        self.entries
            .get(f)
            .ok_or_else(|| ModelError::UnknownFunction(f.clone()))
    }

    pub fn occupancy(&self, f: &FunctionId) -> Result<u64, ModelError> {
        self.info(f).map(|i| i.occupancy)
    }

    pub fn tag(&self, f: &FunctionId) -> Result<&Tag, ModelError> {
        self.info(f).map(|i| &i.tag)
    }

    pub fn contains(&self, f: &FunctionId) -> bool {
        self.entries.contains_key(f)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FunctionId, &FunctionInfo)> {
        self.entries.iter()
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionId> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Allocation state of one worker: a multiset of function instances, the
/// units they use and the worker's maximum capacity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorkerState {
    allocated: BTreeMap<FunctionId, u32>,
    used: u64,
    max: u64,
}

impl WorkerState {
    pub fn empty(max: u64) -> Self {
        WorkerState {
            allocated: BTreeMap::new(),
            used: 0,
            max,
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn max(&self) -> u64 {
        self.max
    }

    pub fn free(&self) -> u64 {
        self.max - self.used
    }

    /// Number of instances of `f` on this worker.
    pub fn count(&self, f: &FunctionId) -> u32 {
        self.allocated.get(f).copied().unwrap_or(0)
    }

    /// Total number of function instances, regardless of function or tag.
    pub fn instance_count(&self) -> u32 {
        self.allocated.values().sum()
    }

    /// Distinct functions with their multiplicities, in identifier order.
    pub fn allocations(&self) -> impl Iterator<Item = (&FunctionId, u32)> {
        self.allocated.iter().map(|(f, n)| (f, *n))
    }

    pub fn is_empty(&self) -> bool {
        self.allocated.is_empty()
    }

    /// Whether some allocated function carries `tag`.
    pub fn hosts_tag(&self, tag: &Tag, reg: &Registry) -> bool {
        self.allocated
            .keys()
            .any(|f| reg.get(f).is_some_and(|info| &info.tag == tag))
    }
}

/// Snapshot of the platform: every worker with its allocation state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Configuration {
    workers: BTreeMap<WorkerId, WorkerState>,
}

impl Configuration {
    /// Builds a configuration with the given workers, all empty.
    pub fn with_workers<I>(workers: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (WorkerId, u64)>,
    {
        let mut map = BTreeMap::new();
        for (w, max) in workers {
            if map.insert(w.clone(), WorkerState::empty(max)).is_some() {
                return Err(ModelError::Duplicate(w.to_string()));
            }
        }
        if map.is_empty() {
            return Err(ModelError::NoWorkers);
        }
        Ok(Configuration { workers: map })
    }

    pub fn worker(&self, w: &WorkerId) -> Option<&WorkerState> {
        self.workers.get(w)
    }

    pub fn state(&self, w: &WorkerId) -> Result<&WorkerState, ModelError> {
        self.workers
            .get(w)
            .ok_or_else(|| ModelError::UnknownWorker(w.clone()))
    }

    pub fn contains(&self, w: &WorkerId) -> bool {
        self.workers.contains_key(w)
    }

    /// Worker identifiers in ascending order. This is the fixed ordering used
    /// to expand `*` in policy blocks.
    pub fn worker_ids(&self) -> impl Iterator<Item = &WorkerId> {
        self.workers.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&WorkerId, &WorkerState)> {
        self.workers.iter()
    }

    pub fn len(&self) -> usize {
        self.workers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workers.is_empty()
    }

    /// Same workers and maxima, no allocations.
    pub fn emptied(&self) -> Configuration {
        Configuration {
            workers: self
                .workers
                .iter()
                .map(|(w, s)| (w.clone(), WorkerState::empty(s.max)))
                .collect(),
        }
    }

    /// Allocates one instance of `f` on `w`.
    pub fn apply_start(
        &self,
        f: &FunctionId,
        w: &WorkerId,
        reg: &Registry,
    ) -> Result<Configuration, ModelError> {
        let occ = reg.occupancy(f)?;
        let state = self.state(w)?;
        if state.used + occ > state.max {
            return Err(ModelError::CapacityExceeded {
                function: f.clone(),
                worker: w.clone(),
                needed: occ,
                free: state.free(),
            });
        }
        let mut next = self.clone();
        let slot = next.workers.get_mut(w).expect("worker checked above");
        *slot.allocated.entry(f.clone()).or_insert(0) += 1;
        slot.used += occ;
        Ok(next)
    }

    /// Removes one instance of `f` from `w`.
    pub fn apply_done(
        &self,
        f: &FunctionId,
        w: &WorkerId,
        reg: &Registry,
    ) -> Result<Configuration, ModelError> {
        let occ = reg.occupancy(f)?;
        let state = self.state(w)?;
        if state.count(f) == 0 {
            return Err(ModelError::FunctionNotAllocated {
                function: f.clone(),
                worker: w.clone(),
            });
        }
        let mut next = self.clone();
        let slot = next.workers.get_mut(w).expect("worker checked above");
        let count = slot.allocated.get_mut(f).expect("count checked above");
        *count -= 1;
        if *count == 0 {
            slot.allocated.remove(f);
        }
        slot.used -= occ;
        Ok(next)
    }

    /// Sorted `(worker, function, count)` triples with positive counts.
    pub fn canonicalize(&self) -> CanonicalState {
        let triples = self
            .workers
            .iter()
            .flat_map(|(w, s)| s.allocated.iter().map(move |(f, n)| (w.clone(), f.clone(), *n)))
            .collect();
        CanonicalState { triples }
    }

    /// Recomputes every worker's `used` from its multiset and checks it
    /// matches the stored value and stays within capacity.
    pub fn check_invariants(&self, reg: &Registry) -> Result<(), String> {
        for (w, s) in &self.workers {
            let mut total = 0u64;
            for (f, n) in &s.allocated {
                if *n == 0 {
                    return Err(format!("zero multiplicity for `{f}` on `{w}`"));
                }
                let occ = reg.occupancy(f).map_err(|e| e.to_string())?;
                total += occ * u64::from(*n);
            }
            if total != s.used {
                return Err(format!("worker `{w}`: used {} but allocations sum to {total}", s.used));
            }
            if s.used > s.max {
                return Err(format!("worker `{w}`: used {} exceeds max {}", s.used, s.max));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (w, s)) in self.workers.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{w}: ({{")?;
            let mut first = true;
            for (func, n) in &s.allocated {
                for _ in 0..*n {
                    if !first {
                        f.write_str(", ")?;
                    }
                    first = false;
                    write!(f, "{func}")?;
                }
            }
            write!(f, "}}, {}, {})", s.used, s.max)?;
        }
        f.write_str("}")
    }
}

/// Order-independent representation of a configuration's allocations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalState {
    pub triples: Vec<(WorkerId, FunctionId, u32)>,
}

impl CanonicalState {
    /// Units used on `w`, recomputed from the triples.
    pub fn used(&self, w: &WorkerId, reg: &Registry) -> Result<u64, ModelError> {
        let mut total = 0;
        for (worker, f, n) in &self.triples {
            if worker == w {
                total += reg.occupancy(f)? * u64::from(*n);
            }
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Any,
    BestFirst,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Any => "any",
            Strategy::BestFirst => "best_first",
        })
    }
}

/// Per-block condition that excludes a worker from selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidateOpt {
    /// Invalid once `used * 100 >= percent * max`. Percent is at most 100.
    CapacityUsed(u8),
    /// Invalid once the worker hosts `count` or more instances.
    MaxConcurrent(u32),
}

impl InvalidateOpt {
    pub fn same_kind(&self, other: &InvalidateOpt) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

impl fmt::Display for InvalidateOpt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidateOpt::CapacityUsed(n) => write!(f, "capacity_used {n}%"),
            InvalidateOpt::MaxConcurrent(n) => write!(f, "max_concurrent_invocations {n}"),
        }
    }
}

/// Worker selector of a block: the universal `*` or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerSet {
    Star,
    List(Vec<WorkerId>),
}

impl WorkerSet {
    /// Workers this selector names that exist in `conf`, in selection order.
    /// `*` expands to every worker in ascending identifier order.
    pub fn expand(&self, conf: &Configuration) -> Vec<WorkerId> {
        match self {
            WorkerSet::Star => conf.worker_ids().cloned().collect(),
            WorkerSet::List(ws) => ws.iter().filter(|w| conf.contains(w)).cloned().collect(),
        }
    }

    pub fn mentions(&self, w: &WorkerId) -> bool {
        match self {
            WorkerSet::Star => true,
            WorkerSet::List(ws) => ws.contains(w),
        }
    }
}

/// One priority level of an encoded policy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub workers: WorkerSet,
    pub strategy: Strategy,
    pub invalidate: Vec<InvalidateOpt>,
    pub affine: Vec<Tag>,
    pub anti_affine: Vec<Tag>,
}

impl Block {
    /// The block synthesized for a missing `default` policy:
    /// every worker, `any`, up to full capacity.
    pub fn catch_all() -> Block {
        Block {
            workers: WorkerSet::Star,
            strategy: Strategy::Any,
            invalidate: vec![InvalidateOpt::CapacityUsed(100)],
            affine: Vec::new(),
            anti_affine: Vec::new(),
        }
    }

    pub fn capacity_threshold(&self) -> Option<u8> {
        self.invalidate.iter().find_map(|o| match o {
            InvalidateOpt::CapacityUsed(n) => Some(*n),
            _ => None,
        })
    }

    pub fn max_concurrent(&self) -> Option<u32> {
        self.invalidate.iter().find_map(|o| match o {
            InvalidateOpt::MaxConcurrent(n) => Some(*n),
            _ => None,
        })
    }

    pub fn has_affinity(&self) -> bool {
        !self.affine.is_empty() || !self.anti_affine.is_empty()
    }
}

/// Resolved policy: every tag mapped to its ordered blocks, followups
/// unfolded and defaults filled in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EncodedPolicy {
    policies: BTreeMap<Tag, Vec<Block>>,
}

impl EncodedPolicy {
    /// Builds a policy, requiring a `default` entry and non-empty block lists.
    pub fn new(policies: BTreeMap<Tag, Vec<Block>>) -> Result<Self, String> {
        if !policies.contains_key(Tag::DEFAULT) {
            return Err("policy has no `default` tag".into());
        }
        if let Some((t, _)) = policies.iter().find(|(_, bs)| bs.is_empty()) {
            return Err(format!("tag `{t}` has no blocks"));
        }
        Ok(EncodedPolicy { policies })
    }

    pub fn blocks(&self, tag: &Tag) -> Option<&[Block]> {
        self.policies.get(tag).map(Vec::as_slice)
    }

    pub fn tags(&self) -> impl Iterator<Item = &Tag> {
        self.policies.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Tag, &[Block])> {
        self.policies.iter().map(|(t, bs)| (t, bs.as_slice()))
    }

    pub fn all_blocks(&self) -> impl Iterator<Item = &Block> {
        self.policies.values().flatten()
    }

    /// Rewrites every tag's block list. The result may hold empty lists.
    pub(crate) fn map_blocks<F>(&self, mut f: F) -> EncodedPolicy
    where
        F: FnMut(&[Block]) -> Vec<Block>,
    {
        let policies = self
            .policies
            .iter()
            .map(|(t, bs)| (t.clone(), f(bs)))
            .collect();
        EncodedPolicy { policies }
    }
}

/// Transition label of the scheduling LTS.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    Start(FunctionId, WorkerId),
    Done(FunctionId, WorkerId),
    Fail(FunctionId),
}

impl Label {
    pub fn function(&self) -> &FunctionId {
        match self {
            Label::Start(f, _) | Label::Done(f, _) | Label::Fail(f) => f,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Start(func, w) => write!(f, "(start, {func}, {w})"),
            Label::Done(func, w) => write!(f, "(done, {func}, {w})"),
            Label::Fail(func) => write!(f, "(fail, {func})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Action {
    Start,
    Done,
    Fail,
}

/// Wire form of a label: `{action, function, worker}` with a null worker
/// for `fail`.
#[derive(Serialize, Deserialize)]
struct LabelRecord {
    action: Action,
    function: FunctionId,
    worker: Option<WorkerId>,
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let record = match self {
            Label::Start(f, w) => LabelRecord {
                action: Action::Start,
                function: f.clone(),
                worker: Some(w.clone()),
            },
            Label::Done(f, w) => LabelRecord {
                action: Action::Done,
                function: f.clone(),
                worker: Some(w.clone()),
            },
            Label::Fail(f) => LabelRecord {
                action: Action::Fail,
                function: f.clone(),
                worker: None,
            },
        };
        record.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = LabelRecord::deserialize(d)?;
        match (r.action, r.worker) {
            (Action::Start, Some(w)) => Ok(Label::Start(r.function, w)),
            (Action::Done, Some(w)) => Ok(Label::Done(r.function, w)),
            (Action::Fail, None) => Ok(Label::Fail(r.function)),
            (Action::Fail, Some(_)) => Err(D::Error::custom("`fail` records take a null worker")),
            (_, None) => Err(D::Error::custom("`start`/`done` records need a worker")),
        }
    }
}

/// Sequence of labels; witnesses are traces.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace {
    pub labels: Vec<Label>,
}

impl Trace {
    pub fn new(labels: Vec<Label>) -> Self {
        Trace { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                f.write_str(" :: ")?;
            }
            write!(f, "{l}")?;
        }
        if self.labels.is_empty() {
            f.write_str("ε")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoalConstraint {
    pub worker: WorkerId,
    pub function: FunctionId,
    pub min_count: u32,
}

/// Conjunction of per-(worker, function) instance-count requirements.
/// Reach and CoOccur are the one- and two-constraint special cases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    constraints: Vec<GoalConstraint>,
}

impl GoalSpec {
    pub fn new(constraints: Vec<GoalConstraint>) -> Result<Self, ModelError> {
        if constraints.is_empty() {
            return Err(ModelError::EmptyGoal);
        }
        for (i, c) in constraints.iter().enumerate() {
            if c.min_count == 0 {
                return Err(ModelError::ZeroGoalCount {
                    worker: c.worker.clone(),
                    function: c.function.clone(),
                });
            }
            if constraints[..i]
                .iter()
                .any(|d| d.worker == c.worker && d.function == c.function)
            {
                return Err(ModelError::Duplicate(format!("{}:{}", c.worker, c.function)));
            }
        }
        Ok(GoalSpec { constraints })
    }

    pub fn reach(f: FunctionId, w: WorkerId) -> Self {
        GoalSpec {
            constraints: vec![GoalConstraint {
                worker: w,
                function: f,
                min_count: 1,
            }],
        }
    }

    pub fn cooccur(f: FunctionId, g: FunctionId, w: WorkerId) -> Result<Self, ModelError> {
        GoalSpec::new(vec![
            GoalConstraint {
                worker: w.clone(),
                function: f,
                min_count: 1,
            },
            GoalConstraint {
                worker: w,
                function: g,
                min_count: 1,
            },
        ])
    }

    pub fn constraints(&self) -> &[GoalConstraint] {
        &self.constraints
    }
}

/// Fragment of the language a policy falls in, by the polarity of its
/// affinity clauses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    PlainApp,
    NegOnly,
    PosOnly,
    Full,
}

impl Polarity {
    /// Whether reachability questions are decidable by the linear procedures.
    pub fn is_anti_monotone(self) -> bool {
        matches!(self, Polarity::PlainApp | Polarity::NegOnly)
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::PlainApp => "PlainApp",
            Polarity::NegOnly => "NegOnly",
            Polarity::PosOnly => "PosOnly",
            Polarity::Full => "Full",
        })
    }
}
