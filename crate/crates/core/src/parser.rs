//! Parsing of policy scripts and platform configuration files.
//!
//! A script is a list of tags; each tag holds an ordered list of blocks and
//! an optional `followup`:
//!
//! ```text
//! - f_tag:
//!   - workers:
//!       - w1
//!       - w2
//!     strategy: best_first
//!     invalidate:
//!       - capacity_used 80%
//!     affinity: g_tag,!h_tag
//!   followup: fail
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    Configuration, FunctionId, GoalConstraint, GoalSpec, InvalidateOpt, Registry,
    Strategy, Tag, WorkerId, WorkerSet,
};
use crate::yaml::{self, Node, YamlError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate tag `{tag}`")]
    DuplicateTag { line: usize, tag: String },
    #[error("line {line}: unknown option `{option}`")]
    UnknownOption { line: usize, option: String },
    #[error("line {line}: tag `{tag}` has no blocks")]
    EmptyBlockList { line: usize, tag: String },
    #[error("line {line}: capacity_used {value}% is above 100%")]
    PercentOutOfRange { line: usize, value: u64 },
    #[error("line {line}: more than one `{kind}` option in the same block")]
    DuplicateInvalidate { line: usize, kind: &'static str },
    #[error("line {line}: duplicate name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: function `{name}` has memory 0")]
    ZeroMemory { line: usize, name: String },
    #[error("line {line}: initial allocation on `{worker}` needs {needed} units, worker has {max}")]
    InitialOverCapacity {
        line: usize,
        worker: String,
        needed: u64,
        max: u64,
    },
    #[error("line {line}: unknown {what} `{name}`")]
    UnknownName {
        line: usize,
        what: &'static str,
        name: String,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::DuplicateTag { line, .. }
            | ParseError::UnknownOption { line, .. }
            | ParseError::EmptyBlockList { line, .. }
            | ParseError::PercentOutOfRange { line, .. }
            | ParseError::DuplicateInvalidate { line, .. }
            | ParseError::DuplicateName { line, .. }
            | ParseError::ZeroMemory { line, .. }
            | ParseError::InitialOverCapacity { line, .. }
            | ParseError::UnknownName { line, .. } => *line,
        }
    }
}

impl From<YamlError> for ParseError {
    fn from(e: YamlError) -> Self {
        ParseError::Syntax {
            line: e.line,
            message: e.message,
        }
    }
}

fn syntax<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Syntax {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Followup {
    Default,
    Fail,
}

/// `id` (affine) or `!id` (anti-affine).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AffinityOpt {
    Affine(Tag),
    AntiAffine(Tag),
}

/// A block as written, before defaults are filled in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RawBlock {
    pub workers: WorkerSet,
    pub strategy: Option<Strategy>,
    pub invalidate: Option<Vec<InvalidateOpt>>,
    pub affinity: Option<Vec<AffinityOpt>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagDecl {
    pub tag: Tag,
    pub blocks: Vec<RawBlock>,
    pub followup: Option<Followup>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScriptAst {
    pub tags: Vec<TagDecl>,
}

impl ScriptAst {
    pub fn get(&self, tag: &str) -> Option<&TagDecl> {
        self.tags.iter().find(|t| t.tag.as_str() == tag)
    }
}

fn scalar_text(node: &Node, what: &str) -> Result<String, ParseError> {
    match node {
        Node::Scalar { value, .. } => Ok(value.clone()),
        other => syntax(other.line(), format!("expected {what}, found {}", other.kind())),
    }
}

fn ident<T>(text: &str, line: usize, make: fn(String) -> Result<T, crate::model::InvalidIdentifier>) -> Result<T, ParseError> {
    make(text.trim().to_string()).or_else(|e| syntax(line, format!("{} is not a valid identifier", e.0.trim())))
}

fn tag_id(text: &str, line: usize) -> Result<Tag, ParseError> {
    ident(text, line, Tag::new)
}

fn worker_id(text: &str, line: usize) -> Result<WorkerId, ParseError> {
    ident(text, line, WorkerId::new)
}

fn function_id(text: &str, line: usize) -> Result<FunctionId, ParseError> {
    ident(text, line, FunctionId::new)
}

/// Parses a policy script.
pub fn parse_script(text: &str) -> Result<ScriptAst, ParseError> {
    let root = yaml::parse(text)?;
    let items = match root {
        Node::Null { .. } => return Ok(ScriptAst::default()),
        Node::Seq { items, .. } => items,
        other => return syntax(other.line(), "a script is a list of `- tag:` entries"),
    };
    let mut tags: Vec<TagDecl> = Vec::new();
    for item in items {
        let decl = parse_tag(&item)?;
        if tags.iter().any(|t| t.tag == decl.tag) {
            return Err(ParseError::DuplicateTag {
                line: item.line(),
                tag: decl.tag.to_string(),
            });
        }
        tags.push(decl);
    }
    Ok(ScriptAst { tags })
}

fn parse_tag(item: &Node) -> Result<TagDecl, ParseError> {
    let Node::Map { entries, line } = item else {
        return syntax(item.line(), format!("expected `tag:` entry, found {}", item.kind()));
    };
    let mut followup = None;
    let mut policy: Option<(&String, &Node)> = None;
    for (key, value) in entries {
        if key == "followup" && matches!(value, Node::Scalar { .. }) {
            let text = scalar_text(value, "followup option")?;
            followup = Some(match text.as_str() {
                "default" => Followup::Default,
                "fail" => Followup::Fail,
                _ => {
                    return Err(ParseError::UnknownOption {
                        line: value.line(),
                        option: text,
                    })
                }
            });
        } else if policy.is_some() {
            return syntax(value.line(), format!("unexpected key `{key}`; each entry declares one tag"));
        } else {
            policy = Some((key, value));
        }
    }
    let Some((name, body)) = policy else {
        return syntax(*line, "entry has no tag");
    };
    let tag = tag_id(name, *line)?;
    let blocks = match body {
        Node::Null { .. } => Vec::new(),
        Node::Seq { items, .. } => items.iter().map(parse_block).collect::<Result<_, _>>()?,
        other => {
            return syntax(
                other.line(),
                format!("tag `{tag}` must hold a list of `- workers:` blocks"),
            )
        }
    };
    if blocks.is_empty() {
        return Err(ParseError::EmptyBlockList {
            line: body.line(),
            tag: tag.to_string(),
        });
    }
    Ok(TagDecl {
        tag,
        blocks,
        followup,
    })
}

fn parse_block(node: &Node) -> Result<RawBlock, ParseError> {
    let Node::Map { entries, line } = node else {
        return syntax(node.line(), format!("expected a block, found {}", node.kind()));
    };
    let mut workers = None;
    let mut strategy = None;
    let mut invalidate = None;
    let mut affinity = None;
    for (key, value) in entries {
        match key.as_str() {
            "workers" => workers = Some(parse_workers(value)?),
            "strategy" => {
                let text = scalar_text(value, "a strategy")?;
                strategy = Some(match text.as_str() {
                    "any" => Strategy::Any,
                    "best_first" => Strategy::BestFirst,
                    _ => {
                        return Err(ParseError::UnknownOption {
                            line: value.line(),
                            option: text,
                        })
                    }
                });
            }
            "invalidate" => invalidate = Some(parse_invalidate(value)?),
            "affinity" => affinity = Some(parse_affinity(value)?),
            _ => {
                return Err(ParseError::UnknownOption {
                    line: value.line(),
                    option: key.clone(),
                })
            }
        }
    }
    let Some(workers) = workers else {
        return syntax(*line, "block is missing `workers`");
    };
    Ok(RawBlock {
        workers,
        strategy,
        invalidate,
        affinity,
    })
}

fn parse_workers(node: &Node) -> Result<WorkerSet, ParseError> {
    match node {
        Node::Scalar { value, line, .. } => {
            if value == "*" {
                Ok(WorkerSet::Star)
            } else {
                syntax(*line, format!("`workers` takes `*` or a list of worker ids, found `{value}`"))
            }
        }
        Node::Seq { items, line } => {
            if items.is_empty() {
                return syntax(*line, "empty worker list");
            }
            let mut ws: Vec<WorkerId> = Vec::new();
            for item in items {
                let w = worker_id(&scalar_text(item, "a worker id")?, item.line())?;
                if ws.contains(&w) {
                    return syntax(item.line(), format!("worker `{w}` listed twice"));
                }
                ws.push(w);
            }
            Ok(WorkerSet::List(ws))
        }
        other => syntax(other.line(), "`workers` takes `*` or a list of worker ids"),
    }
}

fn parse_invalidate(node: &Node) -> Result<Vec<InvalidateOpt>, ParseError> {
    let Node::Seq { items, line } = node else {
        return syntax(node.line(), "`invalidate` takes a list of options");
    };
    if items.is_empty() {
        return syntax(*line, "empty invalidate list");
    }
    let mut out: Vec<InvalidateOpt> = Vec::new();
    for item in items {
        let opt = parse_invalidate_opt(&scalar_text(item, "an invalidate option")?, item.line())?;
        if out.iter().any(|o| o.same_kind(&opt)) {
            return Err(ParseError::DuplicateInvalidate {
                line: item.line(),
                kind: match opt {
                    InvalidateOpt::CapacityUsed(_) => "capacity_used",
                    InvalidateOpt::MaxConcurrent(_) => "max_concurrent_invocations",
                },
            });
        }
        out.push(opt);
    }
    Ok(out)
}

fn parse_invalidate_opt(text: &str, line: usize) -> Result<InvalidateOpt, ParseError> {
    let mut parts = text.split_whitespace();
    let keyword = parts.next().unwrap_or_default();
    let arg: String = parts.collect();
    let number = |digits: &str| -> Result<u64, ParseError> {
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return syntax(line, format!("`{keyword}` needs a natural number, found `{digits}`"));
        }
        digits
            .parse::<u64>()
            .or_else(|_| syntax(line, format!("number `{digits}` is too large")))
    };
    match keyword {
        "capacity_used" => {
            let Some(digits) = arg.strip_suffix('%') else {
                return syntax(line, "`capacity_used` takes a percentage such as `80%`");
            };
            let n = number(digits)?;
            if n > 100 {
                return Err(ParseError::PercentOutOfRange { line, value: n });
            }
            Ok(InvalidateOpt::CapacityUsed(n as u8))
        }
        "max_concurrent_invocations" => {
            let n = number(&arg)?;
            let n = u32::try_from(n).or_else(|_| syntax(line, "invocation limit is too large"))?;
            Ok(InvalidateOpt::MaxConcurrent(n))
        }
        _ => Err(ParseError::UnknownOption {
            line,
            option: text.to_string(),
        }),
    }
}

fn parse_affinity(node: &Node) -> Result<Vec<AffinityOpt>, ParseError> {
    let raw: Vec<(String, usize)> = match node {
        Node::Scalar { value, line, .. } => value.split(',').map(|s| (s.trim().to_string(), *line)).collect(),
        Node::Seq { items, .. } => items
            .iter()
            .map(|i| scalar_text(i, "an affinity option").map(|s| (s, i.line())))
            .collect::<Result<_, _>>()?,
        other => return syntax(other.line(), "`affinity` takes a list of tags"),
    };
    if raw.is_empty() {
        return syntax(node.line(), "empty affinity list");
    }
    let mut out: Vec<AffinityOpt> = Vec::new();
    for (text, line) in raw {
        let opt = match text.strip_prefix('!') {
            Some(rest) => AffinityOpt::AntiAffine(tag_id(rest, line)?),
            None => AffinityOpt::Affine(tag_id(&text, line)?),
        };
        if out.contains(&opt) {
            return syntax(line, format!("affinity option `{text}` listed twice"));
        }
        out.push(opt);
    }
    Ok(out)
}

/// Renders a script in the block style the parser reads back.
pub fn print_script(ast: &ScriptAst) -> String {
    let mut out = String::new();
    for decl in &ast.tags {
        let _ = writeln!(out, "- {}:", decl.tag);
        for b in &decl.blocks {
            match &b.workers {
                WorkerSet::Star => out.push_str("  - workers: *\n"),
                WorkerSet::List(ws) => {
                    out.push_str("  - workers:\n");
                    for w in ws {
                        let _ = writeln!(out, "      - {w}");
                    }
                }
            }
            if let Some(s) = b.strategy {
                let _ = writeln!(out, "    strategy: {s}");
            }
            if let Some(opts) = &b.invalidate {
                out.push_str("    invalidate:\n");
                for o in opts {
                    let _ = writeln!(out, "      - {o}");
                }
            }
            if let Some(opts) = &b.affinity {
                out.push_str("    affinity:\n");
                for o in opts {
                    match o {
                        AffinityOpt::Affine(t) => {
                            let _ = writeln!(out, "      - {t}");
                        }
                        AffinityOpt::AntiAffine(t) => {
                            let _ = writeln!(out, "      - !{t}");
                        }
                    }
                }
            }
        }
        match decl.followup {
            Some(Followup::Default) => out.push_str("  followup: default\n"),
            Some(Followup::Fail) => out.push_str("  followup: fail\n"),
            None => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorkerDecl {
    pub name: WorkerId,
    pub max_memory: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionDecl {
    pub name: FunctionId,
    pub memory: u64,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InitialAlloc {
    pub worker: WorkerId,
    pub function: FunctionId,
    pub count: u32,
    #[serde(skip)]
    line: usize,
}

/// Contents of a platform configuration file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlatformSpec {
    pub workers: Vec<WorkerDecl>,
    pub functions: Vec<FunctionDecl>,
    pub initial: Vec<InitialAlloc>,
}

fn fields<'a>(
    node: &'a Node,
    what: &str,
    required: &[&'static str],
) -> Result<Vec<&'a Node>, ParseError> {
    let Node::Map { entries, line } = node else {
        return syntax(node.line(), format!("expected a {what} mapping, found {}", node.kind()));
    };
    if let Some((k, v)) = entries.iter().find(|(k, _)| !required.contains(&k.as_str())) {
        return syntax(v.line(), format!("unknown {what} field `{k}`"));
    }
    required
        .iter()
        .map(|name| {
            entries
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v)
                .ok_or_else(|| ParseError::Syntax {
                    line: *line,
                    message: format!("{what} is missing `{name}`"),
                })
        })
        .collect()
}

fn natural(node: &Node) -> Result<u64, ParseError> {
    let text = scalar_text(node, "a natural number")?;
    text.parse::<u64>()
        .or_else(|_| syntax(node.line(), format!("expected a natural number, found `{text}`")))
}

fn list<'a>(node: Option<&'a Node>) -> Result<&'a [Node], ParseError> {
    match node {
        None | Some(Node::Null { .. }) => Ok(&[]),
        Some(Node::Seq { items, .. }) => Ok(items),
        Some(other) => syntax(other.line(), format!("expected a list, found {}", other.kind())),
    }
}

/// Parses the platform configuration schema (`workers`, `functions`,
/// optional `initial`) without building the runtime structures.
pub fn parse_platform(text: &str) -> Result<PlatformSpec, ParseError> {
    let root = yaml::parse(text)?;
    let Node::Map { entries, line } = &root else {
        return syntax(root.line(), "configuration must be a mapping with `workers` and `functions`");
    };
    for (k, v) in entries {
        if !matches!(k.as_str(), "workers" | "functions" | "initial") {
            return syntax(v.line(), format!("unknown configuration key `{k}`"));
        }
    }
    let get = |k: &str| entries.iter().find(|(key, _)| key == k).map(|(_, v)| v);

    let mut workers: Vec<WorkerDecl> = Vec::new();
    for item in list(get("workers"))? {
        let f = fields(item, "worker", &["name", "max_memory"])?;
        let name = worker_id(&scalar_text(f[0], "a worker name")?, f[0].line())?;
        if workers.iter().any(|w| w.name == name) {
            return Err(ParseError::DuplicateName {
                line: item.line(),
                name: name.to_string(),
            });
        }
        workers.push(WorkerDecl {
            name,
            max_memory: natural(f[1])?,
        });
    }
    if workers.is_empty() {
        return syntax(*line, "configuration declares no workers");
    }

    let mut functions: Vec<FunctionDecl> = Vec::new();
    for item in list(get("functions"))? {
        let f = fields(item, "function", &["name", "memory", "tag"])?;
        let name = function_id(&scalar_text(f[0], "a function name")?, f[0].line())?;
        if functions.iter().any(|g| g.name == name) {
            return Err(ParseError::DuplicateName {
                line: item.line(),
                name: name.to_string(),
            });
        }
        let memory = natural(f[1])?;
        if memory == 0 {
            return Err(ParseError::ZeroMemory {
                line: f[1].line(),
                name: name.to_string(),
            });
        }
        let tag = tag_id(&scalar_text(f[2], "a tag")?, f[2].line())?;
        functions.push(FunctionDecl { name, memory, tag });
    }

    let mut initial: Vec<InitialAlloc> = Vec::new();
    for item in list(get("initial"))? {
        let f = fields(item, "initial allocation", &["worker", "function", "count"])?;
        let worker = worker_id(&scalar_text(f[0], "a worker name")?, f[0].line())?;
        let function = function_id(&scalar_text(f[1], "a function name")?, f[1].line())?;
        let count = u32::try_from(natural(f[2])?)
            .or_else(|_| syntax(f[2].line(), "count is too large"))?;
        if initial.iter().any(|a| a.worker == worker && a.function == function) {
            return Err(ParseError::DuplicateName {
                line: item.line(),
                name: format!("{worker}:{function}"),
            });
        }
        initial.push(InitialAlloc {
            worker,
            function,
            count,
            line: item.line(),
        });
    }
    let spec = PlatformSpec {
        workers,
        functions,
        initial,
    };
    spec.build()?;
    Ok(spec)
}

impl PlatformSpec {
    /// Builds the configuration (empty workers plus any `initial`
    /// allocations) and the registry.
    pub fn build(&self) -> Result<(Configuration, Registry), ParseError> {
        let conf = Configuration::with_workers(self.workers.iter().map(|w| (w.name.clone(), w.max_memory)))
            .map_err(|e| ParseError::Syntax {
                line: 1,
                message: e.to_string(),
            })?;
        let reg = Registry::from_entries(
            self.functions
                .iter()
                .map(|f| (f.name.clone(), f.memory, f.tag.clone())),
        )
        .map_err(|e| ParseError::Syntax {
            line: 1,
            message: e.to_string(),
        })?;
        let mut conf = conf;
        for a in &self.initial {
            if !conf.contains(&a.worker) {
                return Err(ParseError::UnknownName {
                    line: a.line,
                    what: "worker",
                    name: a.worker.to_string(),
                });
            }
            let occ = reg.occupancy(&a.function).map_err(|_| ParseError::UnknownName {
                line: a.line,
                what: "function",
                name: a.function.to_string(),
            })?;
            let state = conf.state(&a.worker).expect("worker checked above");
            let needed = state.used() + occ * u64::from(a.count);
            if needed > state.max() {
                return Err(ParseError::InitialOverCapacity {
                    line: a.line,
                    worker: a.worker.to_string(),
                    needed,
                    max: state.max(),
                });
            }
            for _ in 0..a.count {
                conf = conf
                    .apply_start(&a.function, &a.worker, &reg)
                    .expect("capacity checked above");
            }
        }
        Ok((conf, reg))
    }
}

/// Parses a configuration file into its configuration and registry.
pub fn parse_config(text: &str) -> Result<(Configuration, Registry), ParseError> {
    parse_platform(text)?.build()
}

/// Parses the comma-joined `worker:function:count` goal micro-format.
pub fn parse_goal_string(text: &str) -> Result<GoalSpec, ParseError> {
    let mut constraints = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let pieces: Vec<&str> = part.split(':').collect();
        let [w, f, n] = pieces.as_slice() else {
            return syntax(1, format!("goal item `{part}` is not `worker:function:count`"));
        };
        let min_count = n
            .parse::<u32>()
            .or_else(|_| syntax(1, format!("goal count `{n}` is not a natural number")))?;
        constraints.push(GoalConstraint {
            worker: worker_id(w, 1)?,
            function: function_id(f, 1)?,
            min_count,
        });
    }
    GoalSpec::new(constraints).map_err(|e| ParseError::Syntax {
        line: 1,
        message: e.to_string(),
    })
}

/// Parses a goal file: `goal: [{worker: w, function: f, count: n}, ...]`.
pub fn parse_goal_file(text: &str) -> Result<GoalSpec, ParseError> {
    let root = yaml::parse(text)?;
    let f = fields(&root, "goal file", &["goal"])?;
    let mut constraints = Vec::new();
    for item in list(Some(f[0]))? {
        let g = fields(item, "goal", &["worker", "function", "count"])?;
        constraints.push(GoalConstraint {
            worker: worker_id(&scalar_text(g[0], "a worker name")?, g[0].line())?,
            function: function_id(&scalar_text(g[1], "a function name")?, g[1].line())?,
            min_count: u32::try_from(natural(g[2])?).or_else(|_| syntax(g[2].line(), "count is too large"))?,
        });
    }
    GoalSpec::new(constraints).map_err(|e| ParseError::Syntax {
        line: root.line(),
        message: e.to_string(),
    })
}

/// Names of every tag an `affinity` clause refers to, for diagnostics.
pub fn affinity_tags(ast: &ScriptAst) -> BTreeSet<Tag> {
    ast.tags
        .iter()
        .flat_map(|d| &d.blocks)
        .flat_map(|b| b.affinity.iter().flatten())
        .map(|o| match o {
            AffinityOpt::Affine(t) | AffinityOpt::AntiAffine(t) => t.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::fixtures::{EXAMPLE_APP, AFFINITY_APP};

    fn t(s: &str) -> Tag {
        Tag::new(s).unwrap()
    }

    #[test]
    fn parses_affinity_example() {
        let ast = parse_script(AFFINITY_APP).unwrap();
        assert_eq!(ast.tags.len(), 1);
        let d = &ast.tags[0];
        assert_eq!(d.tag.as_str(), "f_tag");
        assert_eq!(d.followup, Some(Followup::Fail));
        assert_eq!(d.blocks.len(), 2);
        assert_eq!(
            d.blocks[0].affinity,
            Some(vec![AffinityOpt::Affine(t("g_tag")), AffinityOpt::AntiAffine(t("h_tag"))])
        );
        assert_eq!(d.blocks[1].strategy, None);
        assert_eq!(
            d.blocks[1].workers,
            WorkerSet::List(vec![WorkerId::new("public_w1").unwrap()])
        );
    }

    #[test]
    fn parses_example_app() {
        let ast = parse_script(EXAMPLE_APP).unwrap();
        let b = &ast.tags[0].blocks[0];
        assert_eq!(b.strategy, Some(Strategy::BestFirst));
        assert_eq!(b.invalidate, Some(vec![InvalidateOpt::CapacityUsed(80)]));
        assert_eq!(b.affinity, None);
        assert_eq!(ast.tags[0].followup, Some(Followup::Fail));
    }

    #[test]
    fn parses_minimal_script() {
        let ast = parse_script("- t:\n  - workers: *\n").unwrap();
        assert_eq!(
            ast.tags,
            vec![TagDecl {
                tag: t("t"),
                blocks: vec![RawBlock {
                    workers: WorkerSet::Star,
                    strategy: None,
                    invalidate: None,
                    affinity: None,
                }],
                followup: None,
            }]
        );
        let quoted = parse_script("- t:\n  - workers: \"*\"\n").unwrap();
        assert_eq!(quoted, ast);
    }

    #[test]
    fn affinity_list_and_inline_forms_agree() {
        let inline = parse_script("- t:\n  - workers: *\n    affinity: a, !b\n").unwrap();
        let listed = parse_script("- t:\n  - workers: *\n    affinity:\n      - a\n      - \"!b\"\n").unwrap();
        let flow = parse_script("- t:\n  - workers: *\n    affinity: [a, \"!b\"]\n").unwrap();
        assert_eq!(inline, listed);
        assert_eq!(inline, flow);
    }

    #[test]
    fn script_errors() {
        let dup = "- a:\n  - workers: *\n- a:\n  - workers: *\n";
        assert!(matches!(parse_script(dup), Err(ParseError::DuplicateTag { line: 3, .. })));
        assert!(matches!(
            parse_script("- a:\n  - workers: *\n    strategy: platform\n"),
            Err(ParseError::UnknownOption { line: 3, .. })
        ));
        assert!(matches!(
            parse_script("- a:\n  - workers: *\n    invalidate:\n      - overload\n"),
            Err(ParseError::UnknownOption { line: 4, .. })
        ));
        assert!(matches!(parse_script("- a:\n"), Err(ParseError::EmptyBlockList { .. })));
        assert!(matches!(
            parse_script("- a:\n  - workers: *\n    invalidate:\n      - capacity_used 120%\n"),
            Err(ParseError::PercentOutOfRange { line: 4, value: 120 })
        ));
        assert!(matches!(
            parse_script("- a:\n  - workers: *\n    invalidate:\n      - capacity_used 50%\n      - capacity_used 60%\n"),
            Err(ParseError::DuplicateInvalidate { line: 5, .. })
        ));
        assert!(matches!(
            parse_script("- a:\n  - strategy: any\n"),
            Err(ParseError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_script("- a:\n  - workers: *\n  followup: maybe\n"),
            Err(ParseError::UnknownOption { line: 3, .. })
        ));
        assert!(matches!(
            parse_script("- a:\n  - workers: w1\n"),
            Err(ParseError::Syntax { line: 2, .. })
        ));
        assert!(parse_script("a: 1\n").is_err());
    }

    #[test]
    fn max_concurrent_option() {
        let ast = parse_script(
            "- a:\n  - workers: *\n    invalidate:\n      - max_concurrent_invocations 3\n      - capacity_used 100%\n",
        )
        .unwrap();
        assert_eq!(
            ast.tags[0].blocks[0].invalidate,
            Some(vec![InvalidateOpt::MaxConcurrent(3), InvalidateOpt::CapacityUsed(100)])
        );
    }

    #[test]
    fn print_then_parse_round_trip() {
        for text in [AFFINITY_APP, EXAMPLE_APP, "- t:\n  - workers: *\n  followup: default\n"] {
            let ast = parse_script(text).unwrap();
            assert_eq!(parse_script(&print_script(&ast)).unwrap(), ast);
        }
    }

    const CONFIG: &str = "\
workers:
  - name: w1
    max_memory: 10
  - name: w2
    max_memory: 20
functions:
  - name: f
    memory: 8
    tag: f_tag
";

    #[test]
    fn parses_config() {
        let (conf, reg) = parse_config(CONFIG).unwrap();
        assert_eq!(conf.to_string(), "{w1: ({}, 0, 10), w2: ({}, 0, 20)}");
        assert_eq!(reg.occupancy(&FunctionId::new("f").unwrap()).unwrap(), 8);
        assert_eq!(reg.tag(&FunctionId::new("f").unwrap()).unwrap().as_str(), "f_tag");

        let flow = "workers: [{name: w1, max_memory: 10}, {name: w2, max_memory: 20}]\nfunctions: [{name: f, memory: 8, tag: f_tag}]\ninitial: []\n";
        assert_eq!(parse_config(flow).unwrap(), (conf, reg));
    }

    #[test]
    fn config_initial_allocations() {
        let ok = format!("{CONFIG}initial:\n  - worker: w2\n    function: f\n    count: 2\n");
        let (conf, _) = parse_config(&ok).unwrap();
        assert_eq!(conf.to_string(), "{w1: ({}, 0, 10), w2: ({f, f}, 16, 20)}");

        let over = format!("{CONFIG}initial:\n  - worker: w1\n    function: f\n    count: 2\n");
        assert!(matches!(
            parse_config(&over),
            Err(ParseError::InitialOverCapacity { line: 11, needed: 16, max: 10, .. })
        ));
        let unknown = format!("{CONFIG}initial:\n  - worker: w9\n    function: f\n    count: 1\n");
        assert!(matches!(parse_config(&unknown), Err(ParseError::UnknownName { what: "worker", .. })));
    }

    #[test]
    fn config_errors() {
        let zero = "workers: [{name: w1, max_memory: 10}]\nfunctions: [{name: f, memory: 0, tag: t}]\n";
        assert!(matches!(parse_config(zero), Err(ParseError::ZeroMemory { .. })));
        let dup = "workers: [{name: w1, max_memory: 10}, {name: w1, max_memory: 3}]\nfunctions: []\n";
        assert!(matches!(parse_config(dup), Err(ParseError::DuplicateName { .. })));
        let missing = "workers:\n  - name: w1\nfunctions: []\n";
        assert!(matches!(parse_config(missing), Err(ParseError::Syntax { line: 2, .. })));
        assert!(parse_config("functions: []\n").is_err());
        assert!(parse_config("workers: [{name: w1, max_memory: -3}]\n").is_err());
    }

    #[test]
    fn goal_formats() {
        let g = parse_goal_string("local:f:1, local:g:2").unwrap();
        assert_eq!(g.constraints().len(), 2);
        assert_eq!(g.constraints()[1].min_count, 2);
        assert!(parse_goal_string("local:f").is_err());
        assert!(parse_goal_string("local:f:0").is_err());
        assert!(parse_goal_string("").is_err());
        let g2 = parse_goal_file("goal:\n  - worker: local\n    function: f\n    count: 1\n  - {worker: local, function: g, count: 2}\n").unwrap();
        assert_eq!(g, g2);
    }
}
