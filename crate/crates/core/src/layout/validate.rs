use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use serde_json::{Map, Value};

use super::document::{Frame, LayoutNode, StyleMap, CANVAS_HEIGHT, CANVAS_WIDTH};
use super::json::ParseWarning;
use super::widget::WidgetClass;

/// Slack, in pixels, allowed when checking that a frame sits inside its
/// parent.
pub const BOUNDS_TOLERANCE: f64 = 0.5;

/// A node as read from untrusted JSON: every field optional, problems kept
/// for the validator instead of failing the read.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawNode {
    pub class: Option<String>,
    pub name: Option<String>,
    pub frame: Option<RawFrame>,
    pub string: Option<String>,
    pub layers: Vec<RawNode>,
    pub style: StyleMap,
    /// Fields present with an unusable type, as `(field, problem)`.
    pub invalid_fields: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RawFrame {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub w: Option<f64>,
    pub h: Option<f64>,
}

const KNOWN_KEYS: [&str; 6] = ["_class", "name", "frame", "string", "layers", "style"];

impl RawNode {
    /// Reads a JSON value. Unknown keys and coerced numbers are reported
    /// through `warnings`; `location` is the human-readable path of `value`.
    pub fn from_value(value: &Value, location: &str, warnings: &mut Vec<ParseWarning>) -> RawNode {
        let Some(obj) = value.as_object() else {
            return RawNode {
                invalid_fields: vec![("<node>".into(), format!("expected an object, found {}", kind_of(value)))],
                ..RawNode::default()
            };
        };
        let mut node = RawNode::default();
        for key in obj.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) && key != "class" {
                warnings.push(ParseWarning::ExtraKey { location: location.to_string(), key: key.clone() });
            }
        }
        match obj.get("_class").or_else(|| obj.get("class")) {
            Some(Value::String(s)) => node.class = Some(s.clone()),
            Some(other) => node.invalid_fields.push(("_class".into(), format!("expected a string, found {}", kind_of(other)))),
            None => {}
        }
        match obj.get("name") {
            Some(Value::String(s)) => node.name = Some(s.clone()),
            Some(Value::Null) | None => {}
            Some(other) => node.name = Some(scalar_text(other)),
        }
        match obj.get("string") {
            Some(Value::String(s)) => node.string = Some(s.clone()),
            Some(Value::Null) | None => {}
            Some(v @ (Value::Number(_) | Value::Bool(_))) => node.string = Some(scalar_text(v)),
            Some(other) => node.invalid_fields.push(("string".into(), format!("expected text, found {}", kind_of(other)))),
        }
        match obj.get("frame") {
            Some(Value::Object(f)) => node.frame = Some(read_frame(f, location, &mut node, warnings)),
            Some(Value::Null) | None => {}
            Some(other) => node.invalid_fields.push(("frame".into(), format!("expected an object, found {}", kind_of(other)))),
        }
        match obj.get("style") {
            Some(Value::Object(m)) => node.style = m.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            Some(Value::Null) | None => {}
            Some(other) => node.invalid_fields.push(("style".into(), format!("expected an object, found {}", kind_of(other)))),
        }
        match obj.get("layers") {
            Some(Value::Array(items)) => {
                let mut counters: HashMap<String, u32> = HashMap::new();
                for item in items {
                    let label = item
                        .get("_class")
                        .or_else(|| item.get("class"))
                        .and_then(Value::as_str)
                        .unwrap_or("?")
                        .to_string();
                    let n = counters.entry(label.clone()).or_insert(0);
                    *n += 1;
                    let child_loc = format!("{location}->{label}:{n}");
                    node.layers.push(RawNode::from_value(item, &child_loc, warnings));
                }
            }
            Some(Value::Null) | None => {}
            Some(other) => node.invalid_fields.push(("layers".into(), format!("expected an array, found {}", kind_of(other)))),
        }
        node
    }
}

fn read_frame(
    f: &Map<String, Value>,
    location: &str,
    node: &mut RawNode,
    warnings: &mut Vec<ParseWarning>,
) -> RawFrame {
    let mut read = |names: &[&str]| -> Option<f64> {
        let (name, v) = names.iter().find_map(|n| f.get(*n).map(|v| (*n, v)))?;
        match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => {
                let cleaned = s.trim().trim_end_matches("px").trim();
                match cleaned.parse::<f64>() {
                    Ok(x) => {
                        warnings.push(ParseWarning::CoercedNumber {
                            location: location.to_string(),
                            field: name.to_string(),
                        });
                        Some(x)
                    }
                    Err(_) => {
                        node.invalid_fields.push((format!("frame.{name}"), format!("not a number: {s:?}")));
                        None
                    }
                }
            }
            other => {
                node.invalid_fields.push((format!("frame.{name}"), format!("not a number: {}", kind_of(other))));
                None
            }
        }
    };
    RawFrame {
        x: read(&["x"]),
        y: read(&["y"]),
        w: read(&["width", "w"]),
        h: read(&["height", "h"]),
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl From<&LayoutNode> for RawNode {
    fn from(node: &LayoutNode) -> Self {
        RawNode {
            class: Some(node.class.label().to_string()),
            name: Some(node.name.clone()),
            frame: Some(RawFrame {
                x: Some(node.frame.x),
                y: Some(node.frame.y),
                w: Some(node.frame.w),
                h: Some(node.frame.h),
            }),
            string: node.string.clone(),
            layers: node.layers.iter().map(RawNode::from).collect(),
            style: node.style.clone(),
            invalid_fields: Vec::new(),
        }
    }
}

/// What is wrong with a node.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    MissingClass,
    UnknownClass { label: String },
    MissingFrame,
    MissingFrameField { field: String },
    NegativeDimension { field: String, value: f64 },
    NonFiniteCoordinate,
    MissingString,
    InvalidField { field: String, problem: String },
    OutOfParentBounds,
    RootNotArtboard,
    NestedArtboard,
    CanvasMismatch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::MissingClass => write!(f, "missing _class"),
            ViolationKind::UnknownClass { label } => write!(f, "unknown class {label:?}"),
            ViolationKind::MissingFrame => write!(f, "missing frame"),
            ViolationKind::MissingFrameField { field } => write!(f, "missing frame field {field}"),
            ViolationKind::NegativeDimension { field, value } => write!(f, "negative {field} ({value})"),
            ViolationKind::NonFiniteCoordinate => write!(f, "non-finite coordinate"),
            ViolationKind::MissingString => write!(f, "Text element without string"),
            ViolationKind::InvalidField { field, problem } => write!(f, "invalid {field}: {problem}"),
            ViolationKind::OutOfParentBounds => write!(f, "frame extends beyond its parent"),
            ViolationKind::RootNotArtboard => write!(f, "root element is not an artboard"),
            ViolationKind::NestedArtboard => write!(f, "artboard below the root"),
            ViolationKind::CanvasMismatch => {
                write!(f, "artboard frame is not {CANVAS_WIDTH}x{CANVAS_HEIGHT}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub location: String,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    fn push(&mut self, location: &str, kind: ViolationKind) {
        self.violations.push(Violation { location: location.to_string(), kind });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks one node and its subtree. In strict mode a frame reaching outside
/// `parent_frame` is a violation too.
pub fn validate_node(node: &RawNode, parent_frame: &Frame, strict: bool) -> ValidationReport {
    let mut report = ValidationReport::default();
    let label = node.class.as_deref().unwrap_or("?");
    let location = format!("{label}:1");
    check(node, parent_frame, strict, &location, false, &mut report);
    report
}

/// Checks a page root: as [`validate_node`] plus the artboard rules.
pub fn validate_page(root: &RawNode, strict: bool) -> ValidationReport {
    let canvas = Frame::canvas();
    let mut report = ValidationReport::default();
    let label = root.class.as_deref().unwrap_or("?");
    let location = format!("{label}:1");
    let is_artboard = root
        .class
        .as_deref()
        .and_then(WidgetClass::resolve)
        .map(|r| r.class == WidgetClass::Artboard)
        .unwrap_or(false);
    if root.class.is_some() && !is_artboard {
        report.push(&location, ViolationKind::RootNotArtboard);
    }
    if strict {
        if let Some(frame) = root.frame.and_then(complete_frame) {
            let close = |a: f64, b: f64| (a - b).abs() <= BOUNDS_TOLERANCE;
            if !(close(frame.w, CANVAS_WIDTH) && close(frame.h, CANVAS_HEIGHT)) {
                report.push(&location, ViolationKind::CanvasMismatch);
            }
        }
    }
    check(root, &canvas, strict, &location, false, &mut report);
    report
}

/// Validates an already-typed tree (e.g. to apply the strict bounds rule).
pub fn validate_layout(node: &LayoutNode, parent_frame: &Frame, strict: bool) -> ValidationReport {
    validate_node(&RawNode::from(node), parent_frame, strict)
}

fn complete_frame(f: RawFrame) -> Option<Frame> {
    Some(Frame::new(f.x?, f.y?, f.w?, f.h?))
}

fn check(
    node: &RawNode,
    parent_frame: &Frame,
    strict: bool,
    location: &str,
    below_root: bool,
    report: &mut ValidationReport,
) {
    for (field, problem) in &node.invalid_fields {
        report.push(location, ViolationKind::InvalidField { field: field.clone(), problem: problem.clone() });
    }
    let class = match node.class.as_deref() {
        None => {
            if !node.invalid_fields.iter().any(|(f, _)| f == "_class" || f == "<node>") {
                report.push(location, ViolationKind::MissingClass);
            }
            None
        }
        Some(label) => match WidgetClass::resolve(label) {
            Some(r) => Some(r.class),
            None => {
                report.push(location, ViolationKind::UnknownClass { label: label.to_string() });
                None
            }
        },
    };
    if below_root && class == Some(WidgetClass::Artboard) {
        report.push(location, ViolationKind::NestedArtboard);
    }
    if class == Some(WidgetClass::Text) && node.string.is_none() {
        report.push(location, ViolationKind::MissingString);
    }

    let mut own_frame = None;
    match node.frame {
        None => {
            if !node.invalid_fields.iter().any(|(f, _)| f == "frame") {
                report.push(location, ViolationKind::MissingFrame);
            }
        }
        Some(frame) => {
            let fields = [("x", frame.x), ("y", frame.y), ("width", frame.w), ("height", frame.h)];
            let mut complete = true;
            for (name, value) in fields {
                if value.is_none() {
                    complete = false;
                    let already = node.invalid_fields.iter().any(|(f, _)| f.starts_with("frame."));
                    if !already {
                        report.push(location, ViolationKind::MissingFrameField { field: name.to_string() });
                    }
                }
            }
            if complete {
                let f = Frame::new(frame.x.unwrap(), frame.y.unwrap(), frame.w.unwrap(), frame.h.unwrap());
                if !f.is_finite() {
                    report.push(location, ViolationKind::NonFiniteCoordinate);
                } else {
                    if f.w < 0.0 {
                        report.push(location, ViolationKind::NegativeDimension { field: "width".into(), value: f.w });
                    }
                    if f.h < 0.0 {
                        report.push(location, ViolationKind::NegativeDimension { field: "height".into(), value: f.h });
                    }
                    if strict && below_root && !f.within(parent_frame, BOUNDS_TOLERANCE) {
                        report.push(location, ViolationKind::OutOfParentBounds);
                    }
                    own_frame = Some(f);
                }
            }
        }
    }

    let frame_for_children = own_frame.unwrap_or(*parent_frame);
    let mut counters: HashMap<&str, u32> = HashMap::new();
    for child in &node.layers {
        let label = child.class.as_deref().unwrap_or("?");
        let n = counters.entry(label).or_insert(0);
        *n += 1;
        let child_loc = format!("{location}->{label}:{n}");
        check(child, &frame_for_children, strict, &child_loc, true, report);
    }
}

/// Converts a raw tree that has passed validation. Returns `None` if any
/// required field is unusable.
pub(crate) fn into_layout(node: &RawNode, warnings: &mut Vec<ParseWarning>, location: &str) -> Option<LayoutNode> {
    let label = node.class.as_deref()?;
    let resolved = WidgetClass::resolve(label)?;
    if resolved.substituted {
        warnings.push(ParseWarning::ClassSubstituted {
            location: location.to_string(),
            from: label.to_string(),
            to: resolved.class,
        });
    }
    let frame = complete_frame(node.frame?)?;
    let mut layers = Vec::with_capacity(node.layers.len());
    let mut counters: HashMap<&str, u32> = HashMap::new();
    for child in &node.layers {
        let child_label = child.class.as_deref().unwrap_or("?");
        let n = counters.entry(child_label).or_insert(0);
        *n += 1;
        layers.push(into_layout(child, warnings, &format!("{location}->{child_label}:{n}"))?);
    }
    Some(LayoutNode {
        class: resolved.class,
        name: node.name.clone().unwrap_or_default(),
        frame,
        string: node.string.clone(),
        layers,
        style: node.style.clone(),
    })
}
