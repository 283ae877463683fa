//! Hierarchical page model: element classes, frames, the node tree, paths,
//! schema validation and the JSON exchange format.

mod document;
mod json;
mod validate;
mod widget;

pub use document::{
    child_paths, flatten, flatten_node, DocumentError, Frame, HierarchicalPath, LayoutNode,
    PageDocument, PathParseError, PathSegment, StyleMap, CANVAS_HEIGHT, CANVAS_WIDTH,
};
pub use json::{
    extract_json, fenced, parse_node_json, parse_page_json, serialize_node, serialize_page,
    ExtractedJson, JsonError, ParseWarning, ParsedNode, ParsedPage,
};
pub use validate::{
    validate_layout, validate_node, validate_page, RawFrame, RawNode, ValidationReport, Violation,
    ViolationKind, BOUNDS_TOLERANCE,
};
pub use widget::{Resolved, UnknownClass, WidgetClass};
