use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::widget::WidgetClass;

/// Page width in pixels.
pub const CANVAS_WIDTH: f64 = 1440.0;
/// Page height in pixels.
pub const CANVAS_HEIGHT: f64 = 2560.0;

/// Axis-aligned bounding box; `x`/`y` are the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "width", alias = "w")]
    pub w: f64,
    #[serde(rename = "height", alias = "h")]
    pub h: f64,
}

impl Frame {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Frame { x, y, w, h }
    }

    /// The full page canvas.
    pub const fn canvas() -> Self {
        Frame::new(0.0, 0.0, CANVAS_WIDTH, CANVAS_HEIGHT)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    /// True when `self` lies inside `outer`, with `tol` pixels of slack.
    pub fn within(&self, outer: &Frame, tol: f64) -> bool {
        self.x >= outer.x - tol
            && self.y >= outer.y - tol
            && self.right() <= outer.right() + tol
            && self.bottom() <= outer.bottom() + tol
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Frame {
        Frame::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

/// Free-form style attributes (color, font, appearance), sorted by key.
pub type StyleMap = BTreeMap<String, Value>;

/// One element of a page and its sub-elements.
///
/// Serializes with the exchange key order `_class, name, frame, string,
/// layers, style`; `string`, `layers` and `style` are omitted when empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutNode {
    #[serde(rename = "_class")]
    pub class: WidgetClass,
    #[serde(default)]
    pub name: String,
    pub frame: Frame,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub string: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<LayoutNode>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub style: StyleMap,
}

impl LayoutNode {
    pub fn new(class: WidgetClass, frame: Frame) -> Self {
        LayoutNode {
            class,
            name: class.label().to_string(),
            frame,
            string: None,
            layers: Vec::new(),
            style: StyleMap::new(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_string(mut self, text: impl Into<String>) -> Self {
        self.string = Some(text.into());
        self
    }

    pub fn with_style(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.style.insert(key.into(), value.into());
        self
    }

    pub fn with_child(mut self, child: LayoutNode) -> Self {
        self.layers.push(child);
        self
    }

    /// The element's value: its text for Text nodes, its name for Image and
    /// Icon nodes.
    pub fn value(&self) -> Option<&str> {
        match self.class {
            WidgetClass::Text => self.string.as_deref(),
            WidgetClass::Image | WidgetClass::Icon if !self.name.is_empty() => Some(&self.name),
            _ => None,
        }
    }

    /// Shifts this node and every descendant.
    pub fn translate(&mut self, dx: f64, dy: f64) {
        self.frame = self.frame.translated(dx, dy);
        for child in &mut self.layers {
            child.translate(dx, dy);
        }
    }

    /// Number of nodes in this subtree, including `self`.
    pub fn node_count(&self) -> usize {
        1 + self.layers.iter().map(LayoutNode::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.layers.iter().map(LayoutNode::depth).max().unwrap_or(0)
    }

    /// Copy of this subtree cut below `levels` levels (1 keeps only `self`).
    pub fn truncated(&self, levels: usize) -> LayoutNode {
        let mut out = self.clone();
        if levels <= 1 {
            out.layers.clear();
        } else {
            out.layers = self.layers.iter().map(|c| c.truncated(levels - 1)).collect();
        }
        out
    }
}

/// A whole page: an artboard root on the fixed 1440x2560 canvas.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PageDocument {
    root: LayoutNode,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DocumentError {
    #[error("root element must be an artboard, found {0}")]
    RootNotArtboard(WidgetClass),
    #[error("nested artboard at {0}")]
    NestedArtboard(String),
}

impl PageDocument {
    pub fn new(root: LayoutNode) -> Result<Self, DocumentError> {
        if root.class != WidgetClass::Artboard {
            return Err(DocumentError::RootNotArtboard(root.class));
        }
        if let Some(path) = find_nested_artboard(&root) {
            return Err(DocumentError::NestedArtboard(path));
        }
        Ok(PageDocument { root })
    }

    /// Empty artboard covering the canvas.
    pub fn blank() -> Self {
        PageDocument { root: LayoutNode::new(WidgetClass::Artboard, Frame::canvas()) }
    }

    pub fn canvas(&self) -> Frame {
        Frame::canvas()
    }

    pub fn root(&self) -> &LayoutNode {
        &self.root
    }

    /// Mutable access to the root's children. The root itself stays an
    /// artboard.
    pub fn layers_mut(&mut self) -> &mut Vec<LayoutNode> {
        &mut self.root.layers
    }

    pub fn into_root(self) -> LayoutNode {
        self.root
    }

    /// Number of elements excluding the artboard.
    pub fn element_count(&self) -> usize {
        self.root.node_count() - 1
    }

    /// Node at `path`, if present.
    pub fn node_at(&self, path: &HierarchicalPath) -> Option<&LayoutNode> {
        let mut segments = path.segments().iter();
        let first = segments.next()?;
        if first.class != WidgetClass::Artboard || first.index != 1 {
            return None;
        }
        let mut node = &self.root;
        for seg in segments {
            node = child_by_segment(&node.layers, seg)?;
        }
        Some(node)
    }

    pub fn node_at_mut(&mut self, path: &HierarchicalPath) -> Option<&mut LayoutNode> {
        let mut segments = path.segments().iter();
        let first = segments.next()?;
        if first.class != WidgetClass::Artboard || first.index != 1 {
            return None;
        }
        let mut node = &mut self.root;
        for seg in segments {
            let pos = segment_position(&node.layers, seg)?;
            node = &mut node.layers[pos];
        }
        Some(node)
    }

    /// Copy keeping only the first `levels` levels below the artboard.
    pub fn truncated(&self, levels: usize) -> PageDocument {
        PageDocument { root: self.root.truncated(levels + 1) }
    }
}

impl<'de> Deserialize<'de> for PageDocument {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let root = LayoutNode::deserialize(deserializer)?;
        PageDocument::new(root).map_err(serde::de::Error::custom)
    }
}

fn find_nested_artboard(node: &LayoutNode) -> Option<String> {
    flatten_node(node)
        .into_iter()
        .skip(1)
        .find(|(_, n)| n.class == WidgetClass::Artboard)
        .map(|(p, _)| p.to_string())
}

fn segment_position(layers: &[LayoutNode], seg: &PathSegment) -> Option<usize> {
    let mut seen = 0;
    for (pos, child) in layers.iter().enumerate() {
        if child.class == seg.class {
            seen += 1;
            if seen == seg.index {
                return Some(pos);
            }
        }
    }
    None
}

fn child_by_segment<'a>(layers: &'a [LayoutNode], seg: &PathSegment) -> Option<&'a LayoutNode> {
    segment_position(layers, seg).map(|pos| &layers[pos])
}

/// One step of a hierarchical path: a class and its 1-based per-class
/// sibling index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathSegment {
    pub class: WidgetClass,
    pub index: u32,
}

impl PathSegment {
    pub fn new(class: WidgetClass, index: u32) -> Self {
        PathSegment { class, index }
    }
}

impl fmt::Display for PathSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.class, self.index)
    }
}

/// Location of an element in the tree, starting at `artboard:1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HierarchicalPath(Vec<PathSegment>);

impl HierarchicalPath {
    pub fn root() -> Self {
        HierarchicalPath(vec![PathSegment::new(WidgetClass::Artboard, 1)])
    }

    pub fn empty() -> Self {
        HierarchicalPath(Vec::new())
    }

    pub fn from_segments(segments: Vec<PathSegment>) -> Self {
        HierarchicalPath(segments)
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, class: WidgetClass, index: u32) -> Self {
        let mut segments = self.0.clone();
        segments.push(PathSegment::new(class, index));
        HierarchicalPath(segments)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            return None;
        }
        Some(HierarchicalPath(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn last(&self) -> Option<&PathSegment> {
        self.0.last()
    }

    /// Depth below the artboard: 0 for the root, 1 for its children.
    pub fn level(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn starts_with(&self, prefix: &HierarchicalPath) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// Class labels joined by `->`, without indices.
    pub fn render_classes(&self) -> String {
        self.0.iter().map(|s| s.class.label()).collect::<Vec<_>>().join("->")
    }
}

impl fmt::Display for HierarchicalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("->")?;
            }
            write!(f, "{seg}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed hierarchical path {0:?}")]
pub struct PathParseError(pub String);

impl FromStr for HierarchicalPath {
    type Err = PathParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Ok(HierarchicalPath::empty());
        }
        let err = || PathParseError(s.to_string());
        s.split("->")
            .map(|part| {
                let (label, index) = part.rsplit_once(':').ok_or_else(err)?;
                let class = WidgetClass::from_label(label.trim()).ok_or_else(err)?;
                let index: u32 = index.trim().parse().map_err(|_| err())?;
                Ok(PathSegment::new(class, index))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(HierarchicalPath)
    }
}

impl Serialize for HierarchicalPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HierarchicalPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Depth-first pre-order listing of every node with its path. Sibling
/// indices count per class within each parent, starting at 1.
pub fn flatten(doc: &PageDocument) -> Vec<(HierarchicalPath, &LayoutNode)> {
    flatten_node(doc.root())
}

/// [`flatten`] for a bare subtree; `node` is given the path `<class>:1`.
pub fn flatten_node(node: &LayoutNode) -> Vec<(HierarchicalPath, &LayoutNode)> {
    let mut out = Vec::with_capacity(node.node_count());
    let path = HierarchicalPath::from_segments(vec![PathSegment::new(node.class, 1)]);
    walk(node, path, &mut out);
    out
}

fn walk<'a>(
    node: &'a LayoutNode,
    path: HierarchicalPath,
    out: &mut Vec<(HierarchicalPath, &'a LayoutNode)>,
) {
    let child_paths = child_paths(&path, &node.layers);
    out.push((path, node));
    for (child, child_path) in node.layers.iter().zip(child_paths) {
        walk(child, child_path, out);
    }
}

/// Paths of `layers` under `parent`, with per-class indexing.
pub fn child_paths(parent: &HierarchicalPath, layers: &[LayoutNode]) -> Vec<HierarchicalPath> {
    let mut counters: HashMap<WidgetClass, u32> = HashMap::new();
    layers
        .iter()
        .map(|child| {
            let n = counters.entry(child.class).or_insert(0);
            *n += 1;
            parent.child(child.class, *n)
        })
        .collect()
}
