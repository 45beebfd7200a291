//! PDDL encoding of a policy, registry and configuration.
//!
//! Actions are fully grounded: one `start_<f>_b<i>_<w>` per function, block
//! index and block worker, and one `done_<f>_<w>` per function and worker.
//! Block order and `best_first` order are positional, so each start action
//! also requires every earlier candidate to be invalid. There is no `fail`
//! action; it would not change the state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::analysis::GoalMode;
use crate::encoder::{validate, Diagnostic};
use crate::model::{
    Block, Configuration, EncodedPolicy, FunctionId, GoalSpec, ModelError, Registry, Strategy,
    Tag, WorkerId,
};

pub const DOMAIN_NAME: &str = "aapp";
pub const PROBLEM_NAME: &str = "aapp-query";
pub const REQUIREMENTS: &str = ":typing :fluents :disjunctive-preconditions :negative-preconditions";

const RESERVED: &[&str] = &[
    "and", "or", "not", "imply", "exists", "forall", "when", "either", "increase", "decrease",
    "assign", "object", "number", "define", "domain", "problem", "worker", "func", "tag",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("policy does not validate against the configuration: {}", join(.0))]
    ValidationFailed(Vec<Diagnostic>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("`{name}` names both a {first} and a {second}; PDDL names are case-insensitive")]
    NameClash {
        name: String,
        first: &'static str,
        second: &'static str,
    },
    #[error("`{0}` is not a usable PDDL name")]
    BadName(String),
    #[error("two grounded actions would both be called `{0}`")]
    ActionClash(String),
    #[error("s-expression error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

fn join(ds: &[Diagnostic]) -> String {
    ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

/// Goal of a problem file.
#[derive(Debug, Clone, Copy)]
pub enum PddlGoal<'a> {
    Spec(&'a GoalSpec),
    /// A `(:goal …)` body written by the user, copied verbatim.
    Raw(&'a str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PddlBundle {
    pub domain: String,
    pub problem: String,
}

/// Names declared in the encoding, grouped by kind.
struct Objects {
    workers: Vec<WorkerId>,
    functions: Vec<FunctionId>,
    tags: Vec<Tag>,
}

impl Objects {
    fn collect(p: &EncodedPolicy, reg: &Registry, conf: &Configuration) -> Result<Self, PddlError> {
        let mut tags: BTreeSet<Tag> = reg.iter().map(|(_, i)| i.tag.clone()).collect();
        for b in p.all_blocks() {
            tags.extend(b.affine.iter().chain(&b.anti_affine).cloned());
        }
        let objects = Objects {
            workers: conf.worker_ids().cloned().collect(),
            functions: reg.functions().cloned().collect(),
            tags: tags.into_iter().collect(),
        };
        let mut seen: BTreeMap<String, &'static str> = BTreeMap::new();
        let all = objects
            .workers
            .iter()
            .map(|w| (w.as_str(), "worker"))
            .chain(objects.functions.iter().map(|f| (f.as_str(), "function")))
            .chain(objects.tags.iter().map(|t| (t.as_str(), "tag")));
        for (name, kind) in all {
            let key = name.to_ascii_lowercase();
            if !name.starts_with(|c: char| c.is_ascii_alphabetic()) || RESERVED.contains(&key.as_str())
            {
                return Err(PddlError::BadName(name.to_string()));
            }
            if let Some(first) = seen.insert(key, kind) {
                return Err(PddlError::NameClash {
                    name: name.to_string(),
                    first,
                    second: kind,
                });
            }
        }
        Ok(objects)
    }
}

fn count(f: &FunctionId, w: &WorkerId) -> String {
    format!("(number_of_f_in_W {f} {w})")
}

/// The conditions of `valid` for `f` on `w` under `b`, each paired with its
/// negation.
fn conditions(f: &FunctionId, w: &WorkerId, b: &Block, reg: &Registry) -> Vec<(String, String)> {
    let mut out = vec![(
        format!("(<= (+ (used {w}) (occ {f})) (max_cap {w}))"),
        format!("(> (+ (used {w}) (occ {f})) (max_cap {w}))"),
    )];
    if let Some(n) = b.capacity_threshold() {
        out.push((
            format!("(< (* (used {w}) 100) (* {n} (max_cap {w})))"),
            format!("(>= (* (used {w}) 100) (* {n} (max_cap {w})))"),
        ));
    }
    if let Some(n) = b.max_concurrent() {
        let terms: Vec<String> = reg.functions().map(|g| count(g, w)).collect();
        let sum = if terms.len() == 1 {
            terms[0].clone()
        } else {
            format!("(+ {})", terms.join(" "))
        };
        out.push((format!("(< {sum} {n})"), format!("(>= {sum} {n})")));
    }
    for t in &b.affine {
        out.push((
            format!("(> (tag_count {t} {w}) 0)"),
            format!("(= (tag_count {t} {w}) 0)"),
        ));
    }
    for t in &b.anti_affine {
        out.push((
            format!("(= (tag_count {t} {w}) 0)"),
            format!("(> (tag_count {t} {w}) 0)"),
        ));
    }
    out
}

fn invalid(f: &FunctionId, w: &WorkerId, b: &Block, reg: &Registry) -> String {
    let negs: Vec<String> = conditions(f, w, b, reg).into_iter().map(|(_, n)| n).collect();
    if negs.len() == 1 {
        negs.into_iter().next().unwrap_or_default()
    } else {
        format!("(or {})", negs.join(" "))
    }
}

fn block_workers(b: &Block, conf: &Configuration) -> Vec<WorkerId> {
    let mut out: Vec<WorkerId> = Vec::new();
    for w in b.workers.expand(conf) {
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

fn write_action(out: &mut String, name: &str, pre: &[String], eff: &[String]) {
    let _ = writeln!(out, "  (:action {name}");
    let _ = writeln!(out, "    :parameters ()");
    let _ = writeln!(out, "    :precondition (and");
    for c in pre {
        let _ = writeln!(out, "      {c}");
    }
    let _ = writeln!(out, "    )");
    let _ = writeln!(out, "    :effect (and");
    for e in eff {
        let _ = writeln!(out, "      {e}");
    }
    let _ = writeln!(out, "    )");
    let _ = writeln!(out, "  )");
}

pub fn emit_domain(
    p: &EncodedPolicy,
    reg: &Registry,
    conf: &Configuration,
) -> Result<String, PddlError> {
    let errors: Vec<Diagnostic> = validate(p, reg, conf)
        .into_iter()
        .filter(Diagnostic::is_error)
        .collect();
    if !errors.is_empty() {
        return Err(PddlError::ValidationFailed(errors));
    }
    let objects = Objects::collect(p, reg, conf)?;

    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {DOMAIN_NAME})");
    let _ = writeln!(out, "  (:requirements {REQUIREMENTS})");
    let _ = writeln!(out, "  (:types worker func tag)");
    let _ = writeln!(out, "  (:constants");
    let groups = [
        (objects.workers.iter().map(|w| w.as_str()).collect::<Vec<_>>(), "worker"),
        (objects.functions.iter().map(|f| f.as_str()).collect(), "func"),
        (objects.tags.iter().map(|t| t.as_str()).collect(), "tag"),
    ];
    for (names, kind) in groups.iter().filter(|(names, _)| !names.is_empty()) {
        let _ = writeln!(out, "    {} - {kind}", names.join(" "));
    }
    let _ = writeln!(out, "  )");
    let _ = writeln!(out, "  (:functions");
    let _ = writeln!(out, "    (number_of_f_in_W ?f - func ?w - worker)");
    let _ = writeln!(out, "    (used ?w - worker)");
    let _ = writeln!(out, "    (max_cap ?w - worker)");
    let _ = writeln!(out, "    (occ ?f - func)");
    let _ = writeln!(out, "    (tag_count ?t - tag ?w - worker)");
    let _ = writeln!(out, "  )");

    let mut action_names = BTreeSet::new();
    let mut claim = |name: String| {
        if action_names.insert(name.to_ascii_lowercase()) {
            Ok(name)
        } else {
            Err(PddlError::ActionClash(name))
        }
    };

    for (f, info) in reg.iter() {
        let blocks = p.blocks(&info.tag).unwrap_or_default();
        let tag = &info.tag;
        for (i, b) in blocks.iter().enumerate() {
            let workers = block_workers(b, conf);
            for (k, w) in workers.iter().enumerate() {
                let mut pre: Vec<String> =
                    conditions(f, w, b, reg).into_iter().map(|(c, _)| c).collect();
                for earlier in &blocks[..i] {
                    for u in block_workers(earlier, conf) {
                        pre.push(invalid(f, &u, earlier, reg));
                    }
                }
                if b.strategy == Strategy::BestFirst {
                    for u in &workers[..k] {
                        pre.push(invalid(f, u, b, reg));
                    }
                }
                let eff = vec![
                    format!("(increase {} 1)", count(f, w)),
                    format!("(increase (used {w}) (occ {f}))"),
                    format!("(increase (tag_count {tag} {w}) 1)"),
                ];
                let name = claim(format!("start_{f}_b{i}_{w}"))?;
                write_action(&mut out, &name, &pre, &eff);
            }
        }
        for w in &objects.workers {
            let pre = vec![format!("(> {} 0)", count(f, w))];
            let eff = vec![
                format!("(decrease {} 1)", count(f, w)),
                format!("(decrease (used {w}) (occ {f}))"),
                format!("(decrease (tag_count {tag} {w}) 1)"),
            ];
            let name = claim(format!("done_{f}_{w}"))?;
            write_action(&mut out, &name, &pre, &eff);
        }
    }
    out.push_str(")\n");
    Ok(out)
}

/// The `(:goal …)` section for a goal specification.
pub fn goal_text(goal: &GoalSpec, mode: GoalMode) -> String {
    let op = match mode {
        GoalMode::Exactly => "=",
        GoalMode::AtLeast => ">=",
    };
    let atoms: Vec<String> = goal
        .constraints()
        .iter()
        .map(|c| format!("({op} {} {})", count(&c.function, &c.worker), c.min_count))
        .collect();
    if atoms.len() == 1 {
        format!("(:goal\n  {}\n)", atoms[0])
    } else {
        format!("(:goal\n  (and {}\n))", atoms.join("\n       "))
    }
}

/// Emits the problem. The initial state mirrors the allocations of `conf`,
/// so an empty configuration starts every count at zero.
pub fn emit_problem(
    p: &EncodedPolicy,
    reg: &Registry,
    conf: &Configuration,
    goal: PddlGoal<'_>,
    mode: GoalMode,
) -> Result<String, PddlError> {
    let objects = Objects::collect(p, reg, conf)?;
    let goal = match goal {
        PddlGoal::Spec(g) => {
            for c in g.constraints() {
                conf.state(&c.worker)?;
                reg.info(&c.function)?;
            }
            goal_text(g, mode)
        }
        PddlGoal::Raw(text) => {
            parse_sexprs(text)?;
            text.trim_end().to_string()
        }
    };

    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {PROBLEM_NAME})");
    let _ = writeln!(out, "  (:domain {DOMAIN_NAME})");
    let _ = writeln!(out, "  (:init");
    for w in &objects.workers {
        let state = conf.state(w)?;
        for f in &objects.functions {
            let _ = writeln!(out, "    (= {} {})", count(f, w), state.count(f));
        }
        let _ = writeln!(out, "    (= (used {w}) {})", state.used());
        let _ = writeln!(out, "    (= (max_cap {w}) {})", state.max());
        for t in &objects.tags {
            let n: u32 = state
                .allocations()
                .filter(|(f, _)| reg.tag(f).is_ok_and(|ft| ft == t))
                .map(|(_, n)| n)
                .sum();
            let _ = writeln!(out, "    (= (tag_count {t} {w}) {n})");
        }
    }
    for (f, info) in reg.iter() {
        let _ = writeln!(out, "    (= (occ {f}) {})", info.occupancy);
    }
    let _ = writeln!(out, "  )");
    for line in goal.lines() {
        let _ = writeln!(out, "  {line}");
    }
    out.push_str(")\n");
    Ok(out)
}

pub fn emit(
    p: &EncodedPolicy,
    reg: &Registry,
    conf: &Configuration,
    goal: PddlGoal<'_>,
    mode: GoalMode,
) -> Result<PddlBundle, PddlError> {
    Ok(PddlBundle {
        domain: emit_domain(p, reg, conf)?,
        problem: emit_problem(p, reg, conf, goal, mode)?,
    })
}

/// Minimal s-expression tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            SExpr::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(xs) => Some(xs),
            SExpr::Atom(_) => None,
        }
    }
}

/// Reads every top-level s-expression in `text`. `;` starts a comment.
pub fn parse_sexprs(text: &str) -> Result<Vec<SExpr>, PddlError> {
    let mut stack: Vec<(usize, Vec<SExpr>)> = vec![(0, Vec::new())];
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            ';' => {
                while chars.next_if(|&(_, c)| c != '\n').is_some() {}
            }
            '(' => stack.push((i, Vec::new())),
            ')' => {
                if stack.len() == 1 {
                    return Err(PddlError::Syntax {
                        offset: i,
                        message: "unbalanced `)`".into(),
                    });
                }
                let (_, items) = stack.pop().unwrap_or_default();
                if let Some((_, parent)) = stack.last_mut() {
                    parent.push(SExpr::List(items));
                }
            }
            c if c.is_whitespace() => {}
            _ => {
                let mut atom = String::from(c);
                while let Some((_, c)) =
                    chars.next_if(|&(_, c)| !c.is_whitespace() && !matches!(c, '(' | ')' | ';'))
                {
                    atom.push(c);
                }
                if let Some((_, top)) = stack.last_mut() {
                    top.push(SExpr::Atom(atom));
                }
            }
        }
    }
    if stack.len() > 1 {
        return Err(PddlError::Syntax {
            offset: stack[stack.len() - 1].0,
            message: "unclosed `(`".into(),
        });
    }
    Ok(stack.pop().map(|(_, items)| items).unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::encode;
    use crate::fixtures::{EXAMPLE_APP, EXAMPLE_CONFIG};
    use crate::parser::{parse_config, parse_script};

    fn w(s: &str) -> WorkerId {
        WorkerId::new(s).unwrap()
    }
    fn f(s: &str) -> FunctionId {
        FunctionId::new(s).unwrap()
    }

    fn squash(s: &str) -> String {
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }

    fn example() -> (EncodedPolicy, Registry, Configuration) {
        let p = encode(&parse_script(EXAMPLE_APP).unwrap());
        let (c, reg) = parse_config(EXAMPLE_CONFIG).unwrap();
        (p, reg, c)
    }

    fn action<'a>(domain: &'a str, name: &str) -> &'a str {
        let start = domain.find(&format!("(:action {name}\n")).unwrap();
        let rest = &domain[start..];
        &rest[..rest.find("\n  )\n").unwrap()]
    }

    #[test]
    fn reach_goal_text_uses_equality() {
        let g = GoalSpec::reach(f("f"), w("w"));
        assert_eq!(
            squash(&goal_text(&g, GoalMode::Exactly)),
            squash("(:goal\n  (= (number_of_f_in_W f w) 1)\n)")
        );
        assert_eq!(
            squash(&goal_text(&g, GoalMode::AtLeast)),
            "(:goal (>= (number_of_f_in_W f w) 1) )"
        );
    }

    #[test]
    fn cooccur_goal_text_is_a_conjunction() {
        let g = GoalSpec::cooccur(f("f1"), f("f2"), w("w")).unwrap();
        assert_eq!(
            squash(&goal_text(&g, GoalMode::Exactly)),
            squash("(:goal\n  (and (= (number_of_f_in_W f1 w) 1)\n       (= (number_of_f_in_W f2 w) 1)\n))")
        );
    }

    #[test]
    fn smallest_domain_has_two_actions() {
        let p = encode(&parse_script("- t:\n  - workers:\n      - w\n  followup: fail\n").unwrap());
        let c = Configuration::with_workers([(w("w"), 4)]).unwrap();
        let reg = Registry::from_entries([(f("f"), 1, Tag::new("t").unwrap())]).unwrap();
        let d = emit_domain(&p, &reg, &c).unwrap();
        assert_eq!(d.matches("(:action ").count(), 2);
        assert!(d.contains("(:action start_f_b0_w\n"));
        assert!(d.contains("(:action done_f_w\n"));
        assert!(d.contains(REQUIREMENTS));
    }

    #[test]
    fn best_first_predecessor_is_invalid() {
        let (p, reg, c) = example();
        let d = emit_domain(&p, &reg, &c).unwrap();
        let a = action(&d, "start_f_b0_w2");
        assert!(a.contains(
            "(or (> (+ (used w1) (occ f)) (max_cap w1)) (>= (* (used w1) 100) (* 80 (max_cap w1))))"
        ));
        assert!(!action(&d, "start_f_b0_w1").contains("(or"));
    }

    #[test]
    fn anti_affinity_precondition() {
        let p = encode(
            &parse_script("- t:\n  - workers: *\n    affinity: '!h_tag'\n  followup: fail\n").unwrap(),
        );
        let c = Configuration::with_workers([(w("w"), 4)]).unwrap();
        let reg = Registry::from_entries([(f("f"), 1, Tag::new("t").unwrap())]).unwrap();
        let d = emit_domain(&p, &reg, &c).unwrap();
        assert!(action(&d, "start_f_b0_w").contains("(= (tag_count h_tag w) 0)"));
        let prob = emit_problem(&p, &reg, &c, PddlGoal::Spec(&GoalSpec::reach(f("f"), w("w"))), GoalMode::Exactly)
            .unwrap();
        assert!(prob.contains("(= (tag_count h_tag w) 0)"));
    }

    #[test]
    fn problem_initial_state() {
        let (p, reg, c) = example();
        let prob = emit_problem(
            &p,
            &reg,
            &c,
            PddlGoal::Spec(&GoalSpec::reach(f("f"), w("w1"))),
            GoalMode::Exactly,
        )
        .unwrap();
        for needle in [
            "(:domain aapp)",
            "(= (number_of_f_in_W f w1) 0)",
            "(= (used w2) 0)",
            "(= (max_cap w1) 10)",
            "(= (max_cap w2) 20)",
            "(= (occ f) 8)",
            "(= (tag_count f_tag w1) 0)",
        ] {
            assert!(prob.contains(needle), "{needle}");
        }
        let loaded = c.apply_start(&f("f"), &w("w2"), &reg).unwrap();
        let prob = emit_problem(&p, &reg, &loaded, PddlGoal::Spec(&GoalSpec::reach(f("f"), w("w1"))), GoalMode::Exactly)
            .unwrap();
        assert!(prob.contains("(= (used w2) 8)"));
        assert!(prob.contains("(= (tag_count f_tag w2) 1)"));
    }

    #[test]
    fn raw_goal_is_verbatim() {
        let (p, reg, c) = example();
        let raw = "(:goal (exists (?w - worker) (> (number_of_f_in_W f ?w) 1)))";
        let prob = emit_problem(&p, &reg, &c, PddlGoal::Raw(raw), GoalMode::Exactly).unwrap();
        assert!(prob.contains(raw));
        assert!(emit_problem(&p, &reg, &c, PddlGoal::Raw("(:goal"), GoalMode::Exactly).is_err());
    }

    #[test]
    fn bundle_parses_and_is_deterministic() {
        let (p, reg, c) = example();
        let g = GoalSpec::reach(f("f"), w("w2"));
        let a = emit(&p, &reg, &c, PddlGoal::Spec(&g), GoalMode::Exactly).unwrap();
        let b = emit(&p, &reg, &c, PddlGoal::Spec(&g), GoalMode::Exactly).unwrap();
        assert_eq!(a, b);
        let dom = parse_sexprs(&a.domain).unwrap();
        let prob = parse_sexprs(&a.problem).unwrap();
        assert_eq!(dom.len(), 1);
        let domain_decl = dom[0].list().unwrap()[1].list().unwrap();
        assert_eq!(domain_decl[1].atom(), Some(DOMAIN_NAME));
        let prob_domain = prob[0].list().unwrap()[2].list().unwrap();
        assert_eq!(prob_domain[0].atom(), Some(":domain"));
        assert_eq!(prob_domain[1].atom(), Some(DOMAIN_NAME));
    }

    #[test]
    fn name_clashes_rejected() {
        let p = encode(&parse_script("- t:\n  - workers: *\n").unwrap());
        let c = Configuration::with_workers([(w("x"), 4)]).unwrap();
        let reg = Registry::from_entries([(f("X"), 1, Tag::new("t").unwrap())]).unwrap();
        assert!(matches!(emit_domain(&p, &reg, &c), Err(PddlError::NameClash { .. })));
        let reg = Registry::from_entries([(f("t"), 1, Tag::new("t").unwrap())]).unwrap();
        assert!(matches!(emit_domain(&p, &reg, &c), Err(PddlError::NameClash { .. })));
        let reg = Registry::from_entries([(f("and"), 1, Tag::new("t").unwrap())]).unwrap();
        assert!(matches!(emit_domain(&p, &reg, &c), Err(PddlError::BadName(_))));
    }

    #[test]
    fn validation_errors_block_emission() {
        let p = encode(&parse_script("- t:\n  - workers:\n      - ghost\n").unwrap());
        let c = Configuration::with_workers([(w("x"), 4)]).unwrap();
        let reg = Registry::from_entries([(f("f"), 1, Tag::new("t").unwrap())]).unwrap();
        assert!(matches!(emit_domain(&p, &reg, &c), Err(PddlError::ValidationFailed(_))));
    }

    #[test]
    fn sexpr_reader() {
        let xs = parse_sexprs("; hi\n(a (b c) d) e").unwrap();
        assert_eq!(xs.len(), 2);
        assert_eq!(xs[1], SExpr::Atom("e".into()));
        assert!(parse_sexprs("(a").is_err());
        assert!(parse_sexprs("a)").is_err());
    }
}
