//! The symbolic element language emitted by the semantic parser.
//!
//! ```text
//! 1. [Drawer]1 includes the following:
//! [Text Button]1
//! [Text Button]2
//!
//! 2. [List Item]1 contains the following:
//! [List Item]1->[Image]1
//! [List Item]1->[Text]1->"Puzzle"
//! ```
//!
//! Each numbered header opens a top-level block; the lines below it are
//! `->`-joined paths of `[Class]index` segments relative to the block head,
//! optionally ending in a quoted text value.

mod inventory;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use serde_json::Value;

use crate::layout::{extract_json, JsonError, ParseWarning, PathSegment, WidgetClass};

pub use inventory::{
    element_inventory, element_tree, node_child_lines, page_to_symbolic, ElementNode, ElementTree, Inventory,
    InventoryEntry,
};

/// Largest sibling index the parser accepts.
pub const MAX_INDEX: u32 = 999;

/// A child line: a path below the block head and an optional text value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChildRef {
    pub path: Vec<PathSegment>,
    pub value: Option<String>,
}

impl ChildRef {
    pub fn new(path: Vec<PathSegment>) -> Self {
        ChildRef { path, value: None }
    }

    pub fn with_value(mut self, value: impl Into<String>) -> Self {
        self.value = Some(value.into());
        self
    }

    pub fn terminal(&self) -> Option<&PathSegment> {
        self.path.last()
    }
}

/// One numbered block: a first-layer element and the elements inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopLevelBlock {
    pub ordinal: u32,
    pub head: PathSegment,
    /// Text of a first-layer Text element, written `N. [Text]1->"..."`.
    pub value: Option<String>,
    pub children: Vec<ChildRef>,
}

/// The parsed description of a page: its blocks plus the free-text spatial
/// constraint sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SymbolicPage {
    pub blocks: Vec<TopLevelBlock>,
    pub constraint: String,
}

impl SymbolicPage {
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DslWarning {
    ClassAlias { line: usize, from: String, to: WidgetClass },
    UnclosedQuote { line: usize },
    NonDenseIndices { scope: String, class: WidgetClass },
    MissingConstraint,
    Envelope { detail: String },
}

impl fmt::Display for DslWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DslWarning::ClassAlias { line, from, to } => {
                write!(f, "line {line}: label {from:?} read as {:?}", to.label())
            }
            DslWarning::UnclosedQuote { line } => write!(f, "line {line}: text value has no closing quote"),
            DslWarning::NonDenseIndices { scope, class } => {
                write!(f, "{scope}: {class} indices are not 1..k")
            }
            DslWarning::MissingConstraint => write!(f, "envelope has no constraint"),
            DslWarning::Envelope { detail } => write!(f, "envelope: {detail}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DslError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown widget class {label:?}")]
    UnknownClass { line: usize, label: String },
    #[error("the request is not about a page layout")]
    NotALayoutRequest,
    #[error("parser envelope: {0}")]
    Envelope(String),
}

impl DslError {
    fn syntax(line: usize, message: impl Into<String>) -> Self {
        DslError::Syntax { line, message: message.into() }
    }
}

impl From<JsonError> for DslError {
    fn from(e: JsonError) -> Self {
        DslError::Envelope(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSymbolic {
    pub page: SymbolicPage,
    pub warnings: Vec<DslWarning>,
}

/// Parses the block text. The constraint of the returned page is empty.
pub fn parse_symbolic(text: &str) -> Result<ParsedSymbolic, DslError> {
    let mut blocks: Vec<TopLevelBlock> = Vec::new();
    let mut warnings = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with(|c: char| c.is_ascii_digit()) {
            let block = parse_header(line, line_no, &mut warnings)?;
            let expected = blocks.len() as u32 + 1;
            if block.ordinal != expected {
                return Err(DslError::syntax(
                    line_no,
                    format!("block number {} out of sequence, expected {expected}", block.ordinal),
                ));
            }
            blocks.push(block);
        } else {
            let Some(block) = blocks.last_mut() else {
                return Err(DslError::syntax(line_no, "element line before the first numbered block"));
            };
            let (path, value) = parse_path(line, line_no, &mut warnings)?;
            block.children.push(ChildRef { path, value });
        }
    }
    let page = SymbolicPage { blocks, constraint: String::new() };
    warnings.extend(index_density_warnings(&page));
    Ok(ParsedSymbolic { page, warnings })
}

fn parse_header(line: &str, line_no: usize, warnings: &mut Vec<DslWarning>) -> Result<TopLevelBlock, DslError> {
    let digits_end = line.find(|c: char| !c.is_ascii_digit()).unwrap_or(line.len());
    let ordinal: u32 = line[..digits_end]
        .parse()
        .map_err(|_| DslError::syntax(line_no, "bad block number"))?;
    let rest = line[digits_end..]
        .strip_prefix('.')
        .ok_or_else(|| DslError::syntax(line_no, "block number must be followed by '.'"))?
        .trim_start();
    if ordinal == 0 {
        return Err(DslError::syntax(line_no, "block numbers start at 1"));
    }
    let mut cursor = Cursor { s: rest, pos: 0, line: line_no };
    let head = cursor.segment(warnings)?;
    cursor.skip_ws();
    let tail = cursor.rest().trim();
    let mut value = None;
    if let Some(after) = tail.strip_prefix("->") {
        let after = after.trim_start();
        if !after.starts_with('"') {
            return Err(DslError::syntax(line_no, "a block header may only be followed by a quoted value"));
        }
        value = Some(quoted_value(after, line_no, warnings)?);
    } else if !tail.is_empty() {
        let verb: String = tail
            .chars()
            .take_while(|c| c.is_alphabetic())
            .flat_map(char::to_lowercase)
            .collect();
        if !matches!(verb.as_str(), "contains" | "includes" | "contain" | "include") {
            return Err(DslError::syntax(line_no, format!("unknown header verb {verb:?}")));
        }
    }
    if value.is_some() && head.class != WidgetClass::Text {
        return Err(DslError::syntax(line_no, "only Text elements carry a value"));
    }
    Ok(TopLevelBlock { ordinal, head, value, children: Vec::new() })
}

fn parse_path(
    line: &str,
    line_no: usize,
    warnings: &mut Vec<DslWarning>,
) -> Result<(Vec<PathSegment>, Option<String>), DslError> {
    let mut cursor = Cursor { s: line, pos: 0, line: line_no };
    let mut path = vec![cursor.segment(warnings)?];
    let mut value = None;
    loop {
        cursor.skip_ws();
        if cursor.at_end() {
            break;
        }
        if !cursor.eat("->") {
            return Err(DslError::syntax(line_no, format!("expected '->' at column {}", cursor.pos + 1)));
        }
        cursor.skip_ws();
        if cursor.peek() == Some('"') {
            value = Some(quoted_value(cursor.rest(), line_no, warnings)?);
            break;
        }
        path.push(cursor.segment(warnings)?);
    }
    if value.is_some() && path.last().map(|s| s.class) != Some(WidgetClass::Text) {
        return Err(DslError::syntax(line_no, "only Text elements carry a value"));
    }
    Ok((path, value))
}

/// `s` starts at the opening quote. The value runs to the last quote on the
/// line; a missing closing quote takes the rest of the line.
fn quoted_value(s: &str, line_no: usize, warnings: &mut Vec<DslWarning>) -> Result<String, DslError> {
    let body = &s[1..];
    match body.rfind('"') {
        Some(end) => {
            if !body[end + 1..].trim().is_empty() {
                return Err(DslError::syntax(line_no, "text after the closing quote"));
            }
            Ok(body[..end].to_string())
        }
        None => {
            warnings.push(DslWarning::UnclosedQuote { line: line_no });
            Ok(body.trim_end().to_string())
        }
    }
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.s.len() - trimmed.len();
    }

    /// `[Label]index`
    fn segment(&mut self, warnings: &mut Vec<DslWarning>) -> Result<PathSegment, DslError> {
        self.skip_ws();
        if !self.eat("[") {
            return Err(DslError::syntax(self.line, format!("expected '[' at column {}", self.pos + 1)));
        }
        let close = self
            .rest()
            .find(']')
            .ok_or_else(|| DslError::syntax(self.line, "unclosed '['"))?;
        let label = self.rest()[..close].to_string();
        if label.contains('[') {
            return Err(DslError::syntax(self.line, "unclosed '['"));
        }
        self.pos += close + 1;
        self.skip_ws();
        let digits = self.rest().chars().take_while(char::is_ascii_digit).count();
        if digits == 0 {
            return Err(DslError::syntax(self.line, format!("missing index after [{label}]")));
        }
        let index: u32 = self.rest()[..digits]
            .parse()
            .map_err(|_| DslError::syntax(self.line, "index out of range"))?;
        self.pos += digits;
        if index == 0 || index > MAX_INDEX {
            return Err(DslError::syntax(self.line, format!("index {index} outside 1..={MAX_INDEX}")));
        }
        let resolved = WidgetClass::resolve(&label).ok_or_else(|| DslError::UnknownClass {
            line: self.line,
            label: label.clone(),
        })?;
        if resolved.class == WidgetClass::Artboard {
            return Err(DslError::syntax(self.line, "artboard cannot appear inside a page"));
        }
        if resolved.substituted {
            warnings.push(DslWarning::ClassAlias { line: self.line, from: label, to: resolved.class });
        }
        Ok(PathSegment::new(resolved.class, index))
    }
}

/// Canonical text form; blocks are separated by one blank line.
pub fn serialize_symbolic(page: &SymbolicPage) -> String {
    let blocks: Vec<String> = page
        .blocks
        .iter()
        .map(|block| {
            let mut lines = Vec::with_capacity(block.children.len() + 1);
            let head = format_segment(&block.head);
            lines.push(match &block.value {
                Some(v) => format!("{}. {head}->\"{v}\"", block.ordinal),
                None => format!("{}. {head} contains the following:", block.ordinal),
            });
            lines.extend(block.children.iter().map(format_child));
            lines.join("\n")
        })
        .collect();
    blocks.join("\n\n")
}

pub fn format_segment(seg: &PathSegment) -> String {
    format!("[{}]{}", seg.class.label(), seg.index)
}

pub fn format_child(child: &ChildRef) -> String {
    let mut out = child.path.iter().map(format_segment).collect::<Vec<_>>().join("->");
    if let Some(v) = &child.value {
        out.push_str(&format!("->\"{v}\""));
    }
    out
}

/// Reads the parser agent's `{"nl_input": ..., "constraint": ...}` reply.
pub fn parse_parser_envelope(text: &str) -> Result<ParsedSymbolic, DslError> {
    let trimmed = text.trim().trim_matches('`').trim();
    if trimmed.eq_ignore_ascii_case("none") || trimmed.eq_ignore_ascii_case("null") {
        return Err(DslError::NotALayoutRequest);
    }
    let mut warnings = Vec::new();
    let extracted = match extract_json(text) {
        Ok(e) => e,
        Err(JsonError::MalformedJson { .. }) => {
            // Models often put literal newlines inside the nl_input string.
            let repaired = escape_raw_newlines(text);
            let e = extract_json(&repaired)?;
            warnings.push(DslWarning::Envelope { detail: "escaped raw newlines inside strings".into() });
            e
        }
        Err(e) => return Err(e.into()),
    };
    warnings.extend(
        extracted
            .warnings
            .iter()
            .filter(|w| !matches!(w, ParseWarning::ExtraKey { .. }))
            .map(|w| DslWarning::Envelope { detail: w.to_string() }),
    );
    let obj = match &extracted.value {
        Value::Object(m) => m,
        Value::Null => return Err(DslError::NotALayoutRequest),
        other => return Err(DslError::Envelope(format!("expected an object, found {other}"))),
    };
    let nl_input = match obj.get("nl_input") {
        None => return Err(DslError::Envelope("missing nl_input".into())),
        Some(Value::Null) => return Err(DslError::NotALayoutRequest),
        Some(Value::String(s)) if s.trim().is_empty() || s.trim().eq_ignore_ascii_case("none") => {
            return Err(DslError::NotALayoutRequest)
        }
        Some(Value::String(s)) => s.clone(),
        Some(other) => return Err(DslError::Envelope(format!("nl_input must be text, found {other}"))),
    };
    let constraint = match obj.get("constraint") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => {
            warnings.push(DslWarning::MissingConstraint);
            String::new()
        }
        Some(other) => other.to_string(),
    };
    let mut parsed = parse_symbolic(&nl_input)?;
    parsed.page.constraint = constraint;
    warnings.append(&mut parsed.warnings);
    parsed.warnings = warnings;
    Ok(parsed)
}

fn escape_raw_newlines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for c in text.chars() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                '\n' => {
                    out.push_str("\\n");
                    continue;
                }
                '\r' => continue,
                _ => {}
            }
        } else if c == '"' {
            in_string = true;
        }
        out.push(c);
    }
    out
}

fn index_density_warnings(page: &SymbolicPage) -> Vec<DslWarning> {
    // scope label -> class -> indices seen
    let mut scopes: BTreeMap<String, HashMap<WidgetClass, BTreeSet<u32>>> = BTreeMap::new();
    for block in &page.blocks {
        scopes
            .entry("artboard".into())
            .or_default()
            .entry(block.head.class)
            .or_default()
            .insert(block.head.index);
        for child in &block.children {
            let mut scope = format_segment(&block.head);
            for seg in &child.path {
                scopes.entry(scope.clone()).or_default().entry(seg.class).or_default().insert(seg.index);
                scope.push_str("->");
                scope.push_str(&format_segment(seg));
            }
        }
    }
    let mut out = Vec::new();
    for (scope, classes) in scopes {
        let mut sorted: Vec<_> = classes.into_iter().collect();
        sorted.sort_by_key(|(c, _)| *c);
        for (class, indices) in sorted {
            let dense = indices.iter().copied().eq(1..=indices.len() as u32);
            if !dense {
                out.push(DslWarning::NonDenseIndices { scope: scope.clone(), class });
            }
        }
    }
    out
}
