//! A small YAML subset reader.
//!
//! Policy scripts use bare `*` and `!tag` scalars, which a conforming YAML
//! parser reads as an alias and a type tag. This reader keeps every plain
//! scalar as text and supports the constructs scripts and configuration
//! files need: block mappings and sequences (including a sequence written at
//! the same indentation as its parent key), compact `- key: value` items,
//! single-line or bracket-balanced multi-line flow collections, quoted
//! scalars and `#` comments. Anchors, multi-document streams and block
//! scalars are not supported.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct YamlError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, YamlError> {
    Err(YamlError {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Null { line: usize },
    Scalar { value: String, quoted: bool, line: usize },
    Seq { items: Vec<Node>, line: usize },
    Map { entries: Vec<(String, Node)>, line: usize },
}

impl Node {
    pub fn line(&self) -> usize {
        match self {
            Node::Null { line }
            | Node::Scalar { line, .. }
            | Node::Seq { line, .. }
            | Node::Map { line, .. } => *line,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Node::Null { .. } => "empty value",
            Node::Scalar { .. } => "scalar",
            Node::Seq { .. } => "list",
            Node::Map { .. } => "mapping",
        }
    }
}

#[derive(Debug, Clone)]
struct Line {
    no: usize,
    indent: usize,
    text: String,
}

/// Parses `text` into a single document node. An empty document is `Null`.
pub fn parse(text: &str) -> Result<Node, YamlError> {
    let lines = split_lines(text)?;
    if lines.is_empty() {
        return Ok(Node::Null { line: 1 });
    }
    let mut p = Parser { lines, pos: 0 };
    let indent = p.lines[0].indent;
    let node = p.block(indent)?;
    if let Some(l) = p.lines.get(p.pos) {
        return err(l.no, format!("unexpected content `{}`", l.text));
    }
    Ok(node)
}

fn split_lines(text: &str) -> Result<Vec<Line>, YamlError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let body = strip_comment(raw);
        let trimmed = body.trim_end();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = trimmed.len() - trimmed.trim_start().len();
        if trimmed[..indent].contains('\t') {
            return err(no, "tabs are not allowed in indentation");
        }
        let content = trimmed.trim_start();
        if out.is_empty() && content == "---" {
            continue;
        }
        if content == "---" || content == "..." {
            return err(no, "multi-document streams are not supported");
        }
        out.push(Line {
            no,
            indent,
            text: content.to_string(),
        });
    }
    Ok(out)
}

/// Drops a trailing `# comment` that is outside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    let mut prev_space = true;
    for (i, c) in line.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None => match c {
                '"' | '\'' if prev_space || i == 0 => quote = Some(c),
                '#' if prev_space => return &line[..i],
                _ => {}
            },
        }
        prev_space = c == ' ' || c == '\t' || (quote.is_none() && matches!(c, '[' | '{' | ','));
    }
    line
}

/// Index of the `:` separating a mapping key from its value, if the text
/// starts with a key.
fn key_split(text: &str) -> Option<usize> {
    if text.starts_with('[') || text.starts_with('{') || is_seq_item(text) {
        return None;
    }
    let mut quote: Option<char> = None;
    for (i, c) in text.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None => match c {
                '"' | '\'' if i == 0 => quote = Some(c),
                ':' => {
                    let rest = &text[i + 1..];
                    if rest.is_empty() || rest.starts_with(' ') {
                        return Some(i);
                    }
                }
                _ => {}
            },
        }
    }
    None
}

fn is_seq_item(text: &str) -> bool {
    text == "-" || text.starts_with("- ")
}

fn unquote_key(key: &str, line: usize) -> Result<String, YamlError> {
    let key = key.trim();
    if key.starts_with('"') || key.starts_with('\'') {
        match scalar(key, line)? {
            Node::Scalar { value, .. } => Ok(value),
            _ => err(line, "invalid key"),
        }
    } else if key.is_empty() {
        err(line, "empty mapping key")
    } else {
        Ok(key.to_string())
    }
}

struct Parser {
    lines: Vec<Line>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Line> {
        self.lines.get(self.pos)
    }

    /// Parses the block node starting at the current line, which must sit at
    /// column `indent`.
    fn block(&mut self, indent: usize) -> Result<Node, YamlError> {
        let line = self.peek().expect("caller checked").clone();
        if is_seq_item(&line.text) {
            self.seq(indent)
        } else if key_split(&line.text).is_some() {
            self.map(indent)
        } else {
            self.pos += 1;
            let text = self.flow_continuation(line.text.clone(), line.no)?;
            inline(&text, line.no)
        }
    }

    /// Joins following lines while brackets of a flow collection are open.
    fn flow_continuation(&mut self, mut text: String, no: usize) -> Result<String, YamlError> {
        if !(text.starts_with('[') || text.starts_with('{')) {
            return Ok(text);
        }
        while bracket_depth(&text) > 0 {
            match self.peek() {
                Some(next) => {
                    text.push(' ');
                    text.push_str(&next.text);
                    self.pos += 1;
                }
                None => return err(no, "unterminated flow collection"),
            }
        }
        Ok(text)
    }

    fn seq(&mut self, indent: usize) -> Result<Node, YamlError> {
        let start = self.peek().expect("caller checked").no;
        let mut items = Vec::new();
        while let Some(line) = self.peek() {
            if line.indent < indent {
                break;
            }
            if line.indent > indent {
                return err(line.no, "bad indentation");
            }
            if !is_seq_item(&line.text) {
                break;
            }
            let line = line.clone();
            let rest = line.text[1..].trim_start();
            if rest.is_empty() {
                self.pos += 1;
                match self.peek() {
                    Some(next) if next.indent > indent => {
                        let ind = next.indent;
                        items.push(self.block(ind)?);
                    }
                    _ => items.push(Node::Null { line: line.no }),
                }
            } else {
                // Re-read the item body as if it started its own line.
                let col = line.indent + (line.text.len() - rest.len());
                self.lines[self.pos] = Line {
                    no: line.no,
                    indent: col,
                    text: rest.to_string(),
                };
                items.push(self.block(col)?);
            }
        }
        Ok(Node::Seq { items, line: start })
    }

    fn map(&mut self, indent: usize) -> Result<Node, YamlError> {
        let start = self.peek().expect("caller checked").no;
        let mut entries: Vec<(String, Node)> = Vec::new();
        while let Some(line) = self.peek() {
            if line.indent < indent {
                break;
            }
            if line.indent > indent {
                return err(line.no, format!("bad indentation before `{}`", line.text));
            }
            let line = line.clone();
            let Some(colon) = key_split(&line.text) else {
                if is_seq_item(&line.text) {
                    break;
                }
                return err(line.no, format!("expected `key: value`, found `{}`", line.text));
            };
            let key = unquote_key(&line.text[..colon], line.no)?;
            if entries.iter().any(|(k, _)| *k == key) {
                return err(line.no, format!("duplicate key `{key}`"));
            }
            let rest = line.text[colon + 1..].trim();
            self.pos += 1;
            let value = if rest.is_empty() {
                match self.peek() {
                    Some(next) if next.indent > indent => {
                        let ind = next.indent;
                        self.block(ind)?
                    }
                    Some(next) if next.indent == indent && is_seq_item(&next.text) => {
                        self.seq(indent)?
                    }
                    _ => Node::Null { line: line.no },
                }
            } else {
                let text = self.flow_continuation(rest.to_string(), line.no)?;
                inline(&text, line.no)?
            };
            entries.push((key, value));
        }
        Ok(Node::Map { entries, line: start })
    }
}

fn bracket_depth(text: &str) -> i32 {
    let mut depth = 0;
    let mut quote: Option<char> = None;
    for c in text.chars() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None => match c {
                '"' | '\'' => quote = Some(c),
                '[' | '{' => depth += 1,
                ']' | '}' => depth -= 1,
                _ => {}
            },
        }
    }
    depth
}

/// Parses a value written on a single (possibly joined) line.
fn inline(text: &str, line: usize) -> Result<Node, YamlError> {
    let text = text.trim();
    if text.starts_with('[') || text.starts_with('{') {
        let chars: Vec<char> = text.chars().collect();
        let mut fp = Flow { chars, pos: 0, line };
        let node = fp.value()?;
        fp.skip_ws();
        if fp.pos != fp.chars.len() {
            return err(line, "trailing characters after flow collection");
        }
        return Ok(node);
    }
    scalar(text, line)
}

fn scalar(text: &str, line: usize) -> Result<Node, YamlError> {
    let text = text.trim();
    if let Some(body) = text.strip_prefix('"') {
        let Some(inner) = body.strip_suffix('"') else {
            return err(line, "unterminated double-quoted string");
        };
        let mut value = String::new();
        let mut chars = inner.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                match chars.next() {
                    Some('n') => value.push('\n'),
                    Some('t') => value.push('\t'),
                    Some(c @ ('"' | '\\')) => value.push(c),
                    _ => return err(line, "unsupported escape sequence"),
                }
            } else if c == '"' {
                return err(line, "unexpected quote inside string");
            } else {
                value.push(c);
            }
        }
        return Ok(Node::Scalar { value, quoted: true, line });
    }
    if let Some(body) = text.strip_prefix('\'') {
        let Some(inner) = body.strip_suffix('\'') else {
            return err(line, "unterminated single-quoted string");
        };
        return Ok(Node::Scalar {
            value: inner.replace("''", "'"),
            quoted: true,
            line,
        });
    }
    if matches!(text, "~" | "null") {
        return Ok(Node::Null { line });
    }
    Ok(Node::Scalar {
        value: text.to_string(),
        quoted: false,
        line,
    })
}

struct Flow {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Flow {
    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.chars.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn value(&mut self) -> Result<Node, YamlError> {
        self.skip_ws();
        match self.chars.get(self.pos) {
            Some('[') => {
                self.pos += 1;
                let mut items = Vec::new();
                if self.eat(']') {
                    return Ok(Node::Seq { items, line: self.line });
                }
                loop {
                    items.push(self.value()?);
                    if self.eat(',') {
                        if self.eat(']') {
                            break;
                        }
                        continue;
                    }
                    if self.eat(']') {
                        break;
                    }
                    return err(self.line, "expected `,` or `]` in flow list");
                }
                Ok(Node::Seq { items, line: self.line })
            }
            Some('{') => {
                self.pos += 1;
                let mut entries: Vec<(String, Node)> = Vec::new();
                if self.eat('}') {
                    return Ok(Node::Map { entries, line: self.line });
                }
                loop {
                    let key = match self.atom(true)? {
                        Node::Scalar { value, .. } => value,
                        _ => return err(self.line, "flow mapping keys must be scalars"),
                    };
                    if !self.eat(':') {
                        return err(self.line, format!("expected `:` after key `{key}`"));
                    }
                    let value = self.value()?;
                    if entries.iter().any(|(k, _)| *k == key) {
                        return err(self.line, format!("duplicate key `{key}`"));
                    }
                    entries.push((key, value));
                    if self.eat(',') {
                        if self.eat('}') {
                            break;
                        }
                        continue;
                    }
                    if self.eat('}') {
                        break;
                    }
                    return err(self.line, "expected `,` or `}` in flow mapping");
                }
                Ok(Node::Map { entries, line: self.line })
            }
            Some(_) => self.atom(false),
            None => err(self.line, "unexpected end of flow collection"),
        }
    }

    /// A scalar inside a flow collection; stops at `,`, `]`, `}` and, for
    /// keys, at `:`.
    fn atom(&mut self, key: bool) -> Result<Node, YamlError> {
        self.skip_ws();
        let start = self.pos;
        if let Some(&q) = self.chars.get(self.pos).filter(|c| **c == '"' || **c == '\'') {
            self.pos += 1;
            while let Some(&c) = self.chars.get(self.pos) {
                self.pos += 1;
                if c == '\\' && q == '"' {
                    self.pos += 1;
                } else if c == q {
                    let text: String = self.chars[start..self.pos].iter().collect();
                    return scalar(&text, self.line);
                }
            }
            return err(self.line, "unterminated string in flow collection");
        }
        while let Some(&c) = self.chars.get(self.pos) {
            if matches!(c, ',' | ']' | '}' | '[' | '{') || (key && c == ':') {
                break;
            }
            if c == ':' && self.chars.get(self.pos + 1).map_or(true, |n| n.is_whitespace()) {
                break;
            }
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if text.trim().is_empty() {
            return err(self.line, "empty value in flow collection");
        }
        scalar(&text, self.line)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &str) -> Node {
        Node::Scalar {
            value: v.into(),
            quoted: false,
            line: 0,
        }
    }

    /// Structural view ignoring line numbers.
    fn shape(n: &Node) -> String {
        match n {
            Node::Null { .. } => "~".into(),
            Node::Scalar { value, .. } => value.clone(),
            Node::Seq { items, .. } => {
                format!("[{}]", items.iter().map(shape).collect::<Vec<_>>().join(", "))
            }
            Node::Map { entries, .. } => format!(
                "{{{}}}",
                entries
                    .iter()
                    .map(|(k, v)| format!("{k}: {}", shape(v)))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }

    #[test]
    fn sequence_at_key_indentation() {
        let doc = "- f_tag:\n  - workers:\n      - local_w1\n      - local_w2\n    strategy: best_first\n  - workers:\n      - public_w1\n  followup: fail\n";
        let n = parse(doc).unwrap();
        assert_eq!(
            shape(&n),
            "[{f_tag: [{workers: [local_w1, local_w2], strategy: best_first}, {workers: [public_w1]}], followup: fail}]"
        );
    }

    #[test]
    fn bare_star_and_bang_scalars() {
        let n = parse("- t:\n  - workers: *\n    affinity: g_tag,!h_tag\n").unwrap();
        assert_eq!(shape(&n), "[{t: [{workers: *, affinity: g_tag,!h_tag}]}]");
        let _ = s("");
    }

    #[test]
    fn flow_collections() {
        let n = parse("workers: [{name: w1, max_memory: 10}, {name: w2, max_memory: 20}]\ninitial: []\n").unwrap();
        assert_eq!(
            shape(&n),
            "{workers: [{name: w1, max_memory: 10}, {name: w2, max_memory: 20}], initial: []}"
        );
        let n = parse("a: [x,\n   \"!y\",\n   '*']\n").unwrap();
        assert_eq!(shape(&n), "{a: [x, !y, *]}");
    }

    #[test]
    fn comments_and_quotes() {
        let n = parse("# header\na: \"b # not a comment\" # comment\nc: 'it''s'\n").unwrap();
        assert_eq!(shape(&n), "{a: b # not a comment, c: it's}");
    }

    #[test]
    fn empty_values() {
        let n = parse("a:\nb: 1\n").unwrap();
        assert_eq!(shape(&n), "{a: ~, b: 1}");
        assert_eq!(parse("").unwrap(), Node::Null { line: 1 });
    }

    #[test]
    fn errors_carry_lines() {
        assert_eq!(parse("a: 1\na: 2\n").unwrap_err().line, 2);
        assert_eq!(parse("a:\n  - x\n    y: 1\n").unwrap_err().line, 3);
        assert_eq!(parse("a: [1, 2\n").unwrap_err().line, 1);
        assert_eq!(parse("a: 1\n\tb: 2\n").unwrap_err().line, 2);
        assert!(parse("a: \"open\n").is_err());
    }

    #[test]
    fn line_numbers_recorded() {
        let n = parse("\n\nx:\n  - a\n  - b\n").unwrap();
        let Node::Map { entries, line } = n else { panic!() };
        assert_eq!(line, 3);
        let Node::Seq { items, .. } = &entries[0].1 else { panic!() };
        assert_eq!(items[1].line(), 5);
    }
}
