//! Reading page JSON out of model responses and writing it back in the
//! canonical key order.
//!
//! Model output is treated as untrusted text: the JSON may sit inside a
//! ```` ```json ```` fence surrounded by prose, carry `//` comments, use
//! `w`/`h` instead of `width`/`height`, or be cut off mid-object.

use std::fmt;

use serde::Serialize;
use serde_json::Value;

use super::document::{DocumentError, Frame, LayoutNode, PageDocument};
use super::validate::{
    into_layout, validate_node, validate_page, RawNode, ValidationReport, Violation, ViolationKind,
};
use super::widget::WidgetClass;

/// A recoverable oddity noticed while reading model output.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseWarning {
    MultipleFencedBlocks { count: usize },
    UnterminatedFence,
    CommentsStripped { count: usize },
    TrailingContent,
    ExtraKey { location: String, key: String },
    CoercedNumber { location: String, field: String },
    ClassSubstituted { location: String, from: String, to: WidgetClass },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::MultipleFencedBlocks { count } => {
                write!(f, "{count} fenced blocks found; using the first")
            }
            ParseWarning::UnterminatedFence => write!(f, "code fence is never closed"),
            ParseWarning::CommentsStripped { count } => write!(f, "stripped {count} // comment(s)"),
            ParseWarning::TrailingContent => write!(f, "ignored text after the JSON value"),
            ParseWarning::ExtraKey { location, key } => write!(f, "{location}: ignored unknown key {key:?}"),
            ParseWarning::CoercedNumber { location, field } => {
                write!(f, "{location}: frame.{field} given as text, coerced to a number")
            }
            ParseWarning::ClassSubstituted { location, from, to } => {
                write!(f, "{location}: class {from:?} read as {to:?}", to = to.label())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JsonError {
    #[error("no JSON object found in the text")]
    NoJsonFound,
    #[error("malformed JSON at byte {offset}: {message}")]
    MalformedJson { offset: usize, message: String },
    #[error("layout does not match the page schema: {0}")]
    SchemaViolation(ValidationReport),
}

/// A page read from text, with whatever warnings the read produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPage {
    pub document: PageDocument,
    pub warnings: Vec<ParseWarning>,
}

/// A bare element subtree read from text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedNode {
    pub node: LayoutNode,
    pub warnings: Vec<ParseWarning>,
}

/// A JSON value pulled out of free text.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedJson {
    pub value: Value,
    pub warnings: Vec<ParseWarning>,
}

/// Finds the first JSON object or array in `text` (inside the first fenced
/// block if there is one), strips `//` line comments and parses it.
pub fn extract_json(text: &str) -> Result<ExtractedJson, JsonError> {
    let mut warnings = Vec::new();
    let (start, end) = locate_payload(text, &mut warnings)?;
    let (region, stripped) = strip_line_comments(&text[start..end]);
    if stripped > 0 {
        warnings.push(ParseWarning::CommentsStripped { count: stripped });
    }
    let Some(rel) = region.find(['{', '[']) else {
        return Err(JsonError::NoJsonFound);
    };
    let body_start = start + rel;
    let cleaned = &region[rel..];

    let mut stream = serde_json::Deserializer::from_str(cleaned).into_iter::<Value>();
    let value = match stream.next() {
        Some(Ok(v)) => v,
        Some(Err(e)) => {
            return Err(JsonError::MalformedJson {
                offset: body_start + line_col_to_offset(cleaned, e.line(), e.column()),
                message: e.to_string(),
            })
        }
        None => return Err(JsonError::NoJsonFound),
    };
    let consumed = stream.byte_offset();
    let rest = cleaned[consumed..].trim();
    if !rest.is_empty() && rest != "```" {
        warnings.push(ParseWarning::TrailingContent);
    }
    Ok(ExtractedJson { value, warnings })
}

/// Parses a whole page (artboard root) from model output or a file.
pub fn parse_page_json(text: &str) -> Result<ParsedPage, JsonError> {
    let ExtractedJson { value, mut warnings } = extract_json(text)?;
    let raw = RawNode::from_value(&value, "artboard:1", &mut warnings);
    let report = validate_page(&raw, false);
    if !report.is_empty() {
        return Err(JsonError::SchemaViolation(report));
    }
    let root = into_layout(&raw, &mut warnings, "artboard:1").ok_or_else(|| {
        JsonError::SchemaViolation(validate_page(&raw, false))
    })?;
    let document = PageDocument::new(root).map_err(|e| {
        let mut report = ValidationReport::default();
        report.violations.push(Violation {
            location: "artboard:1".into(),
            kind: match e {
                DocumentError::RootNotArtboard(_) => ViolationKind::RootNotArtboard,
                DocumentError::NestedArtboard(_) => ViolationKind::NestedArtboard,
            },
        });
        JsonError::SchemaViolation(report)
    })?;
    Ok(ParsedPage { document, warnings })
}

/// Parses a single element subtree (any class at the root). `parent_frame`
/// is only used for reporting.
pub fn parse_node_json(text: &str, parent_frame: &Frame) -> Result<ParsedNode, JsonError> {
    let ExtractedJson { value, mut warnings } = extract_json(text)?;
    let label = value.get("_class").and_then(Value::as_str).unwrap_or("?").to_string();
    let location = format!("{label}:1");
    let raw = RawNode::from_value(&value, &location, &mut warnings);
    let report = validate_node(&raw, parent_frame, false);
    if !report.is_empty() {
        return Err(JsonError::SchemaViolation(report));
    }
    let node = into_layout(&raw, &mut warnings, &location)
        .ok_or_else(|| JsonError::SchemaViolation(validate_node(&raw, parent_frame, false)))?;
    Ok(ParsedNode { node, warnings })
}

/// Canonical text form: two-space indented JSON, keys in the order
/// `_class, name, frame, string, layers, style`, style keys sorted.
pub fn serialize_page(doc: &PageDocument) -> String {
    serialize_node(doc.root())
}

pub fn serialize_node(node: &LayoutNode) -> String {
    serde_json::to_string_pretty(node).expect("layout nodes always serialize")
}

/// Wraps canonical JSON in a ```json fence.
pub fn fenced(json: &str) -> String {
    format!("```json\n{json}\n```")
}

fn locate_payload(text: &str, warnings: &mut Vec<ParseWarning>) -> Result<(usize, usize), JsonError> {
    let blocks = fenced_blocks(text);
    if blocks.is_empty() {
        return text.find(['{', '[']).map(|s| (s, text.len())).ok_or(JsonError::NoJsonFound);
    }
    if blocks.len() > 1 {
        warnings.push(ParseWarning::MultipleFencedBlocks { count: blocks.len() });
    }
    let chosen = blocks
        .iter()
        .find(|b| b.lang.is_empty() || b.lang.eq_ignore_ascii_case("json"))
        .unwrap_or(&blocks[0]);
    if !chosen.closed {
        warnings.push(ParseWarning::UnterminatedFence);
    }
    Ok((chosen.start, chosen.end))
}

struct FencedBlock<'a> {
    lang: &'a str,
    start: usize,
    end: usize,
    closed: bool,
}

fn fenced_blocks(text: &str) -> Vec<FencedBlock<'_>> {
    const FENCE: &str = "```";
    let mut blocks = Vec::new();
    let mut pos = 0;
    while let Some(rel) = text[pos..].find(FENCE) {
        let open = pos + rel + FENCE.len();
        let lang_len = text[open..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            .unwrap_or(text.len() - open);
        let lang = &text[open..open + lang_len];
        let start = open + lang_len;
        match text[start..].find(FENCE) {
            Some(close_rel) => {
                let end = start + close_rel;
                blocks.push(FencedBlock { lang, start, end, closed: true });
                pos = end + FENCE.len();
            }
            None => {
                blocks.push(FencedBlock { lang, start, end: text.len(), closed: false });
                break;
            }
        }
    }
    blocks
}

/// Blanks out `//` comments that sit outside string literals. Byte length is
/// preserved so error offsets still point into the original text.
fn strip_line_comments(src: &str) -> (String, usize) {
    let bytes = src.as_bytes();
    let mut out = bytes.to_vec();
    let mut in_string = false;
    let mut escaped = false;
    let mut count = 0;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            i += 1;
            continue;
        }
        if b == b'"' {
            in_string = true;
            i += 1;
        } else if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            count += 1;
            while i < bytes.len() && bytes[i] != b'\n' {
                out[i] = b' ';
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    // Only whole comment spans (ASCII `//` up to a newline) were replaced.
    (String::from_utf8(out).expect("comment blanking keeps UTF-8 valid"), count)
}

fn line_col_to_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}
