use serde::Serialize;

use super::{format_child, format_segment, ChildRef, SymbolicPage, TopLevelBlock};
use crate::layout::{child_paths, HierarchicalPath, LayoutNode, PageDocument, PathSegment, WidgetClass};

/// An element required by a description, with the elements required inside
/// it. Paths repeated across lines (`[List Item]1->[Image]1`,
/// `[List Item]1->[Text]1`) name the same element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElementNode {
    pub segment: PathSegment,
    pub path: HierarchicalPath,
    pub value: Option<String>,
    pub children: Vec<ElementNode>,
}

impl ElementNode {
    fn new(segment: PathSegment, parent: &HierarchicalPath) -> Self {
        ElementNode {
            segment,
            path: parent.child(segment.class, segment.index),
            value: None,
            children: Vec::new(),
        }
    }

    pub fn class(&self) -> WidgetClass {
        self.segment.class
    }

    fn child_mut(&mut self, segment: PathSegment) -> &mut ElementNode {
        match self.children.iter().position(|c| c.segment == segment) {
            Some(pos) => &mut self.children[pos],
            None => {
                let node = ElementNode::new(segment, &self.path);
                self.children.push(node);
                self.children.last_mut().expect("just pushed")
            }
        }
    }

    /// Number of elements in this subtree, including `self`.
    pub fn count(&self) -> usize {
        1 + self.children.iter().map(ElementNode::count).sum::<usize>()
    }

    /// Child lines relative to this element, one per leaf, in the block
    /// syntax (`[List Item]1->[Text]1->"Puzzle"`).
    pub fn child_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for child in &self.children {
            collect_leaf_lines(child, Vec::new(), &mut out);
        }
        out.iter().map(format_child).collect()
    }

    /// The element itself as a one-line reference, e.g. `[Text]1->"Explore"`.
    pub fn reference(&self) -> String {
        let mut out = format_segment(&self.segment);
        if let Some(v) = &self.value {
            out.push_str(&format!("->\"{v}\""));
        }
        out
    }

    fn preorder<'a>(&'a self, out: &mut Vec<&'a ElementNode>) {
        out.push(self);
        for child in &self.children {
            child.preorder(out);
        }
    }

    /// Finds a descendant (or `self`) by full path.
    pub fn find(&self, path: &HierarchicalPath) -> Option<&ElementNode> {
        if &self.path == path {
            return Some(self);
        }
        if !path.starts_with(&self.path) {
            return None;
        }
        self.children.iter().find_map(|c| c.find(path))
    }
}

fn collect_leaf_lines(node: &ElementNode, mut prefix: Vec<PathSegment>, out: &mut Vec<ChildRef>) {
    prefix.push(node.segment);
    if node.children.is_empty() {
        out.push(ChildRef { path: prefix, value: node.value.clone() });
        return;
    }
    if node.value.is_some() {
        out.push(ChildRef { path: prefix.clone(), value: node.value.clone() });
    }
    for child in &node.children {
        collect_leaf_lines(child, prefix.clone(), out);
    }
}

/// Required elements of a page, rooted at the artboard.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElementTree {
    pub roots: Vec<ElementNode>,
}

impl ElementTree {
    pub fn count(&self) -> usize {
        self.roots.iter().map(ElementNode::count).sum()
    }

    pub fn preorder(&self) -> Vec<&ElementNode> {
        let mut out = Vec::new();
        for root in &self.roots {
            root.preorder(&mut out);
        }
        out
    }

    pub fn find(&self, path: &HierarchicalPath) -> Option<&ElementNode> {
        self.roots.iter().find_map(|r| r.find(path))
    }

    /// First-layer references, e.g. `[Drawer]1, [Toolbar]1`.
    pub fn first_layer_list(&self) -> String {
        self.roots.iter().map(ElementNode::reference).collect::<Vec<_>>().join(", ")
    }
}

/// Builds the element tree, merging repeated path prefixes. When two lines
/// give the same element different values, the first wins.
pub fn element_tree(page: &SymbolicPage) -> ElementTree {
    let root_path = HierarchicalPath::root();
    let mut roots: Vec<ElementNode> = Vec::new();
    for block in &page.blocks {
        let pos = match roots.iter().position(|r| r.segment == block.head) {
            Some(pos) => pos,
            None => {
                roots.push(ElementNode::new(block.head, &root_path));
                roots.len() - 1
            }
        };
        let head = &mut roots[pos];
        if head.value.is_none() {
            head.value = block.value.clone();
        }
        for child in &block.children {
            let mut node = &mut *head;
            for seg in &child.path {
                node = node.child_mut(*seg);
            }
            if node.value.is_none() {
                node.value = child.value.clone();
            }
        }
    }
    ElementTree { roots }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InventoryEntry {
    pub path: HierarchicalPath,
    pub class: WidgetClass,
    pub value: Option<String>,
}

/// Every element a description requires, in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Inventory {
    pub entries: Vec<InventoryEntry>,
}

impl Inventory {
    pub fn count(&self) -> usize {
        self.entries.len()
    }

    /// Entries missing from `doc`, matched by path and class. Returns the
    /// indices of missing entries.
    pub fn missing_in(&self, doc: &PageDocument) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| doc.node_at(&e.path).map(|n| n.class != e.class).unwrap_or(true))
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn element_inventory(page: &SymbolicPage) -> Inventory {
    let tree = element_tree(page);
    let entries = tree
        .preorder()
        .into_iter()
        .map(|n| InventoryEntry { path: n.path.clone(), class: n.class(), value: n.value.clone() })
        .collect();
    Inventory { entries }
}

/// Describes an existing page in block form: one block per first-layer
/// element, one line per leaf below it. Text values with line breaks are
/// flattened to spaces.
pub fn page_to_symbolic(doc: &PageDocument) -> SymbolicPage {
    let root_path = HierarchicalPath::root();
    let first = doc.root().layers.as_slice();
    let paths = child_paths(&root_path, first);
    let blocks = first
        .iter()
        .zip(paths)
        .enumerate()
        .map(|(i, (node, path))| {
            let head = *path.last().expect("child path has a segment");
            let mut children = Vec::new();
            let sub_paths = child_paths(&path, &node.layers);
            for (child, child_path) in node.layers.iter().zip(sub_paths) {
                leaf_refs(child, vec![*child_path.last().expect("segment")], &mut children);
            }
            TopLevelBlock {
                ordinal: i as u32 + 1,
                head,
                value: text_value(node),
                children,
            }
        })
        .collect();
    SymbolicPage { blocks, constraint: String::new() }
}

/// Leaf lines below `node`, relative to it, in the block syntax.
pub fn node_child_lines(node: &LayoutNode) -> Vec<String> {
    let mut refs = Vec::new();
    for (child, path) in node.layers.iter().zip(child_paths(&HierarchicalPath::empty(), &node.layers)) {
        leaf_refs(child, vec![*path.last().expect("segment")], &mut refs);
    }
    refs.iter().map(format_child).collect()
}

fn leaf_refs(node: &LayoutNode, prefix: Vec<PathSegment>, out: &mut Vec<ChildRef>) {
    if node.layers.is_empty() || text_value(node).is_some() {
        out.push(ChildRef { path: prefix.clone(), value: text_value(node) });
    }
    let parent = HierarchicalPath::from_segments(prefix.clone());
    for (child, child_path) in node.layers.iter().zip(child_paths(&parent, &node.layers)) {
        let mut p = prefix.clone();
        p.push(*child_path.last().expect("segment"));
        leaf_refs(child, p, out);
    }
}

fn text_value(node: &LayoutNode) -> Option<String> {
    if node.class != WidgetClass::Text {
        return None;
    }
    node.string.as_ref().map(|s| s.replace(['\n', '\r'], " "))
}
