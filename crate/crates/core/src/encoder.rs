//! Resolution of a parsed script into an [`EncodedPolicy`], plus static
//! validation of a policy against a registry and configuration.
//!
//! Encoding fills in omitted options (`any`, `capacity_used 100%`),
//! synthesizes a catch-all `default` policy when the script has none,
//! unfolds `followup: default` by appending the default blocks, and splits
//! affinity options into affine and anti-affine tag lists.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::model::{
    Block, Configuration, EncodedPolicy, FunctionId, InvalidateOpt, Registry, Strategy, Tag,
    WorkerId, WorkerSet,
};
use crate::parser::{AffinityOpt, Followup, RawBlock, ScriptAst, TagDecl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// A block names a worker absent from the configuration.
    UnknownWorkerInBlock { tag: Tag, block: usize, worker: WorkerId },
    /// A registered function's tag has no policy.
    UntaggedFunction { function: FunctionId, tag: Tag },
    /// An affinity clause refers to a tag no registered function carries.
    UnknownAffinityTag { tag: Tag, block: usize, affinity_tag: Tag },
    /// A block is both affine and anti-affine to the same tag.
    UnsatisfiableBlock { tag: Tag, block: usize, conflict: Tag },
    /// A function is larger than every worker.
    FunctionFitsNowhere { function: FunctionId, occupancy: u64 },
    /// `default` declared `followup: default`; it was treated as `fail`.
    DefaultFollowupRewritten,
}

impl Diagnostic {
    pub fn severity(&self) -> Severity {
        match self {
            Diagnostic::UnknownWorkerInBlock { .. } | Diagnostic::UntaggedFunction { .. } => {
                Severity::Error
            }
            _ => Severity::Warning,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity() == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity() {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: ")?;
        match self {
            Diagnostic::UnknownWorkerInBlock { tag, block, worker } => {
                write!(f, "block {block} of `{tag}` names unknown worker `{worker}`")
            }
            Diagnostic::UntaggedFunction { function, tag } => {
                write!(f, "function `{function}` has tag `{tag}`, which has no policy")
            }
            Diagnostic::UnknownAffinityTag {
                tag,
                block,
                affinity_tag,
            } => write!(
                f,
                "block {block} of `{tag}` refers to tag `{affinity_tag}`, which no function carries"
            ),
            Diagnostic::UnsatisfiableBlock { tag, block, conflict } => write!(
                f,
                "block {block} of `{tag}` is both affine and anti-affine to `{conflict}` and can never be used"
            ),
            Diagnostic::FunctionFitsNowhere { function, occupancy } => write!(
                f,
                "function `{function}` needs {occupancy} units, more than any worker offers"
            ),
            Diagnostic::DefaultFollowupRewritten => {
                write!(f, "`default` cannot fall back to itself; `followup: default` treated as `fail`")
            }
        }
    }
}

fn encode_block(raw: &RawBlock) -> Block {
    let mut affine = Vec::new();
    let mut anti_affine = Vec::new();
    for opt in raw.affinity.iter().flatten() {
        match opt {
            AffinityOpt::Affine(t) => affine.push(t.clone()),
            AffinityOpt::AntiAffine(t) => anti_affine.push(t.clone()),
        }
    }
    Block {
        workers: raw.workers.clone(),
        strategy: raw.strategy.unwrap_or(Strategy::Any),
        invalidate: raw
            .invalidate
            .clone()
            .unwrap_or_else(|| vec![InvalidateOpt::CapacityUsed(100)]),
        affine,
        anti_affine,
    }
}

/// Encodes a script, also returning encoding-time warnings.
pub fn encode_with_diagnostics(ast: &ScriptAst) -> (EncodedPolicy, Vec<Diagnostic>) {
    let mut warnings = Vec::new();
    let default_decl = ast.tags.iter().find(|d| d.tag.is_default());
    let default_blocks: Vec<Block> = match default_decl {
        Some(decl) => {
            if decl.followup == Some(Followup::Default) {
                warnings.push(Diagnostic::DefaultFollowupRewritten);
            }
            decl.blocks.iter().map(encode_block).collect()
        }
        None => vec![Block::catch_all()],
    };

    let mut policies = BTreeMap::new();
    for decl in ast.tags.iter().filter(|d| !d.tag.is_default()) {
        let mut blocks: Vec<Block> = decl.blocks.iter().map(encode_block).collect();
        if decl.followup != Some(Followup::Fail) {
            blocks.extend(default_blocks.iter().cloned());
        }
        policies.insert(decl.tag.clone(), blocks);
    }
    policies.insert(Tag::default_tag(), default_blocks);
    let policy = EncodedPolicy::new(policies).expect("default present and block lists non-empty");
    (policy, warnings)
}

pub fn encode(ast: &ScriptAst) -> EncodedPolicy {
    encode_with_diagnostics(ast).0
}

/// Writes an encoded policy back as a script whose encoding is the same
/// policy: every option explicit, every tag `followup: fail`.
pub fn to_script(p: &EncodedPolicy) -> ScriptAst {
    let mut tags: Vec<TagDecl> = p
        .iter()
        .filter(|(t, _)| !t.is_default())
        .chain(p.iter().filter(|(t, _)| t.is_default()))
        .map(|(tag, blocks)| TagDecl {
            tag: tag.clone(),
            blocks: blocks
                .iter()
                .map(|b| RawBlock {
                    workers: b.workers.clone(),
                    strategy: Some(b.strategy),
                    invalidate: Some(b.invalidate.clone()),
                    affinity: if b.has_affinity() {
                        Some(
                            b.affine
                                .iter()
                                .cloned()
                                .map(AffinityOpt::Affine)
                                .chain(b.anti_affine.iter().cloned().map(AffinityOpt::AntiAffine))
                                .collect(),
                        )
                    } else {
                        None
                    },
                })
                .collect(),
            followup: Some(Followup::Fail),
        })
        .collect();
    // An empty invalidate list has no script form; it only arises from
    // policies built in code.
    for d in &mut tags {
        for b in &mut d.blocks {
            if b.invalidate.as_ref().is_some_and(Vec::is_empty) {
                b.invalidate = None;
            }
        }
    }
    ScriptAst { tags }
}

/// Checks a policy against the registry and configuration it will run with.
pub fn validate(p: &EncodedPolicy, reg: &Registry, conf: &Configuration) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let registry_tags: BTreeSet<&Tag> = reg.iter().map(|(_, i)| &i.tag).collect();
    for (tag, blocks) in p.iter() {
        for (i, b) in blocks.iter().enumerate() {
            if let WorkerSet::List(ws) = &b.workers {
                for w in ws.iter().filter(|w| !conf.contains(w)) {
                    let d = Diagnostic::UnknownWorkerInBlock {
                        tag: tag.clone(),
                        block: i,
                        worker: w.clone(),
                    };
                    if !out.contains(&d) {
                        out.push(d);
                    }
                }
            }
            for t in b.affine.iter().chain(&b.anti_affine) {
                if !registry_tags.contains(t) {
                    out.push(Diagnostic::UnknownAffinityTag {
                        tag: tag.clone(),
                        block: i,
                        affinity_tag: t.clone(),
                    });
                }
            }
            for t in b.affine.iter().filter(|t| b.anti_affine.contains(t)) {
                out.push(Diagnostic::UnsatisfiableBlock {
                    tag: tag.clone(),
                    block: i,
                    conflict: t.clone(),
                });
            }
        }
    }
    let largest = conf.iter().map(|(_, s)| s.max()).max().unwrap_or(0);
    for (f, info) in reg.iter() {
        if p.blocks(&info.tag).is_none() {
            out.push(Diagnostic::UntaggedFunction {
                function: f.clone(),
                tag: info.tag.clone(),
            });
        }
        if info.occupancy > largest {
            out.push(Diagnostic::FunctionFitsNowhere {
                function: f.clone(),
                occupancy: info.occupancy,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_config, parse_script, print_script};

    fn t(s: &str) -> Tag {
        Tag::new(s).unwrap()
    }
    fn w(s: &str) -> WorkerId {
        WorkerId::new(s).unwrap()
    }

    fn cap(n: u8) -> Vec<InvalidateOpt> {
        vec![InvalidateOpt::CapacityUsed(n)]
    }

    #[test]
    fn followup_default_appends_synthesized_default() {
        let p = encode(&parse_script("- t:\n  - workers:\n      - w1\n").unwrap());
        let blocks = p.blocks(&t("t")).unwrap();
        assert_eq!(
            blocks,
            &[
                Block {
                    workers: WorkerSet::List(vec![w("w1")]),
                    strategy: Strategy::Any,
                    invalidate: cap(100),
                    affine: vec![],
                    anti_affine: vec![],
                },
                Block::catch_all(),
            ]
        );
        assert_eq!(p.blocks(&Tag::default_tag()).unwrap(), &[Block::catch_all()]);
    }

    #[test]
    fn followup_fail_keeps_own_blocks() {
        let p = encode(&parse_script(crate::fixtures::EXAMPLE_APP).unwrap());
        assert_eq!(
            p.blocks(&t("f_tag")).unwrap(),
            &[Block {
                workers: WorkerSet::List(vec![w("w1"), w("w2")]),
                strategy: Strategy::BestFirst,
                invalidate: cap(80),
                affine: vec![],
                anti_affine: vec![],
            }]
        );
    }

    #[test]
    fn affinity_split() {
        let p = encode(&parse_script(crate::fixtures::AFFINITY_APP).unwrap());
        let b = &p.blocks(&t("f_tag")).unwrap()[0];
        assert_eq!(b.affine, vec![t("g_tag")]);
        assert_eq!(b.anti_affine, vec![t("h_tag")]);
        let b2 = &p.blocks(&t("f_tag")).unwrap()[1];
        assert!(b2.affine.is_empty() && b2.anti_affine.is_empty());
        assert_eq!(b2.invalidate, cap(100));
    }

    #[test]
    fn custom_default_is_used_and_forced_to_fail() {
        let script = "- a:\n  - workers:\n      - w1\n- default:\n  - workers:\n      - w2\n    strategy: best_first\n  followup: default\n";
        let (p, warnings) = encode_with_diagnostics(&parse_script(script).unwrap());
        assert_eq!(warnings, vec![Diagnostic::DefaultFollowupRewritten]);
        let default_blocks = p.blocks(&Tag::default_tag()).unwrap();
        assert_eq!(default_blocks.len(), 1);
        assert_eq!(default_blocks[0].strategy, Strategy::BestFirst);
        let a = p.blocks(&t("a")).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(&a[1], &default_blocks[0]);
    }

    #[test]
    fn explicit_invalidate_without_capacity_is_kept() {
        let script = "- a:\n  - workers: *\n    invalidate:\n      - max_concurrent_invocations 2\n  followup: fail\n";
        let p = encode(&parse_script(script).unwrap());
        assert_eq!(
            p.blocks(&t("a")).unwrap()[0].invalidate,
            vec![InvalidateOpt::MaxConcurrent(2)]
        );
    }

    #[test]
    fn encoded_policy_is_a_fixed_point() {
        for text in [crate::fixtures::AFFINITY_APP, crate::fixtures::EXAMPLE_APP, "- t:\n  - workers: *\n"] {
            let p = encode(&parse_script(text).unwrap());
            let again = encode(&parse_script(&print_script(&to_script(&p))).unwrap());
            assert_eq!(again, p);
        }
    }

    fn config() -> (Configuration, Registry) {
        parse_config(
            "workers: [{name: w1, max_memory: 10}, {name: w2, max_memory: 20}]\nfunctions: [{name: f, memory: 8, tag: f_tag}, {name: big, memory: 30, tag: f_tag}, {name: q, memory: 1, tag: q_tag}]\n",
        )
        .unwrap()
    }

    #[test]
    fn validate_reports_unknown_worker() {
        let (conf, reg) = config();
        let p = encode(&parse_script("- f_tag:\n  - workers:\n      - w9\n- q_tag:\n  - workers: *\n").unwrap());
        let d = validate(&p, &reg, &conf);
        assert!(d.contains(&Diagnostic::UnknownWorkerInBlock {
            tag: t("f_tag"),
            block: 0,
            worker: w("w9")
        }));
        assert!(d.iter().filter(|d| d.is_error()).count() == 1);
    }

    #[test]
    fn validate_reports_untagged_function() {
        let (conf, reg) = config();
        let p = encode(&parse_script("- f_tag:\n  - workers: *\n").unwrap());
        let d = validate(&p, &reg, &conf);
        assert!(d.contains(&Diagnostic::UntaggedFunction {
            function: FunctionId::new("q").unwrap(),
            tag: t("q_tag")
        }));
    }

    #[test]
    fn validate_warnings() {
        let (conf, reg) = config();
        let p = encode(
            &parse_script("- f_tag:\n  - workers: *\n    affinity: q_tag,!q_tag,!zzz\n- q_tag:\n  - workers: *\n").unwrap(),
        );
        let d = validate(&p, &reg, &conf);
        assert!(d.contains(&Diagnostic::UnsatisfiableBlock {
            tag: t("f_tag"),
            block: 0,
            conflict: t("q_tag")
        }));
        assert!(d.contains(&Diagnostic::UnknownAffinityTag {
            tag: t("f_tag"),
            block: 0,
            affinity_tag: t("zzz")
        }));
        assert!(d.contains(&Diagnostic::FunctionFitsNowhere {
            function: FunctionId::new("big").unwrap(),
            occupancy: 30
        }));
        assert!(d.iter().all(|d| !d.is_error()));
    }
}
