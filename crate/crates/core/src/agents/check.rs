use std::fmt;

use serde::Serialize;

use crate::dsl::{ElementNode, ElementTree};
use crate::layout::{child_paths, Frame, HierarchicalPath, LayoutNode, PathSegment, WidgetClass, BOUNDS_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Frame has positive, finite area.
    Size,
    /// Frame lies inside the parent frame.
    Position,
    /// Layers cover every required child.
    Structure,
    /// Text nodes carry their string.
    Text,
    /// Style present where exemplars of the class carry one.
    Style,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Size => "size",
            Criterion::Position => "position",
            Criterion::Structure => "structure",
            Criterion::Text => "text",
            Criterion::Style => "style",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CheckResult {
    pub failed: Vec<Criterion>,
}

impl CheckResult {
    pub fn is_pass(&self) -> bool {
        self.failed.is_empty()
    }

    pub fn fails(&self, c: Criterion) -> bool {
        self.failed.contains(&c)
    }
}

/// Checks one node against the rules, without looking below its direct
/// children. `required` is the inventory element at the node's path, if
/// any; `style_expected` comes from the exemplars of the node's class.
pub fn completeness_check(
    node: &LayoutNode,
    required: Option<&ElementNode>,
    parent: Option<&Frame>,
    style_expected: bool,
) -> CheckResult {
    let mut failed = Vec::new();
    if !(node.frame.is_finite() && node.frame.w > 0.0 && node.frame.h > 0.0) {
        failed.push(Criterion::Size);
    }
    if let Some(p) = parent {
        if !node.frame.within(p, BOUNDS_TOLERANCE) {
            failed.push(Criterion::Position);
        }
    }
    if let Some(req) = required {
        let present = present_segments(node);
        if req.children.iter().any(|c| !present.contains(&c.segment)) {
            failed.push(Criterion::Structure);
        }
    }
    if node.class == WidgetClass::Text {
        let ok = match (node.string.as_deref(), required.and_then(|r| r.value.as_deref())) {
            (None, _) => false,
            (Some(s), Some(want)) => s.trim() == want.trim(),
            (Some(s), None) => !s.trim().is_empty(),
        };
        if !ok {
            failed.push(Criterion::Text);
        }
    }
    if style_expected && node.style.is_empty() {
        failed.push(Criterion::Style);
    }
    CheckResult { failed }
}

/// Segments of a node's children under per-class indexing.
pub fn present_segments(node: &LayoutNode) -> Vec<PathSegment> {
    child_paths(&HierarchicalPath::empty(), &node.layers)
        .iter()
        .map(|p| *p.last().expect("child path has a segment"))
        .collect()
}

/// The inventory as a single element rooted at the artboard.
pub fn root_requirement(tree: &ElementTree) -> ElementNode {
    ElementNode {
        segment: PathSegment::new(WidgetClass::Artboard, 1),
        path: HierarchicalPath::root(),
        value: None,
        children: tree.roots.clone(),
    }
}

/// Whether `node` and everything below it pass.
pub fn subtree_complete(
    node: &LayoutNode,
    required: Option<&ElementNode>,
    parent: Option<&Frame>,
    style_expected: &dyn Fn(WidgetClass) -> bool,
) -> bool {
    if !completeness_check(node, required, parent, style_expected(node.class)).is_pass() {
        return false;
    }
    node.layers.iter().zip(present_segments(node)).all(|(child, seg)| {
        let req = required.and_then(|r| r.children.iter().find(|c| c.segment == seg));
        subtree_complete(child, req, Some(&node.frame), style_expected)
    })
}

/// Number of nodes anywhere in the tree that fail a check.
pub fn failing_nodes(
    node: &LayoutNode,
    required: Option<&ElementNode>,
    parent: Option<&Frame>,
    style_expected: &dyn Fn(WidgetClass) -> bool,
) -> usize {
    let own = usize::from(!completeness_check(node, required, parent, style_expected(node.class)).is_pass());
    own + node
        .layers
        .iter()
        .zip(present_segments(node))
        .map(|(child, seg)| {
            let req = required.and_then(|r| r.children.iter().find(|c| c.segment == seg));
            failing_nodes(child, req, Some(&node.frame), style_expected)
        })
        .sum::<usize>()
}

/// Fixed split of element classes into leaves and containers.
pub fn is_basic(class: WidgetClass) -> bool {
    use WidgetClass::*;
    matches!(
        class,
        Text | Image
            | Icon
            | PagerIndicator
            | Checkbox
            | RadioButton
            | OnOffSwitch
            | Slider
            | NumberStepper
            | Input
            | Video
            | MapView
            | WebView
            | BackgroundImage
            | Advertisement
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{element_tree, parse_symbolic};

    fn toolbar_requirement() -> ElementNode {
        let page = parse_symbolic("1. [Toolbar]1 contains:\n[Text Button]1\n[Text]1->\"Explore\"").unwrap().page;
        element_tree(&page).roots.remove(0)
    }

    #[test]
    fn empty_toolbar_fails_structure() {
        let node = LayoutNode::new(WidgetClass::Toolbar, Frame::new(0.0, 0.0, 1440.0, 200.0));
        let r = completeness_check(&node, Some(&toolbar_requirement()), Some(&Frame::canvas()), false);
        assert_eq!(r.failed, vec![Criterion::Structure]);
    }

    #[test]
    fn text_with_string_passes() {
        let node = LayoutNode::new(WidgetClass::Text, Frame::new(0.0, 0.0, 100.0, 40.0)).with_string("Hi");
        assert!(completeness_check(&node, None, None, false).is_pass());
        let bare = LayoutNode::new(WidgetClass::Text, Frame::new(0.0, 0.0, 100.0, 40.0));
        assert_eq!(completeness_check(&bare, None, None, false).failed, vec![Criterion::Text]);
    }

    #[test]
    fn zero_area_fails_size() {
        let node = LayoutNode::new(WidgetClass::Image, Frame::new(0.0, 0.0, 0.0, 40.0));
        assert_eq!(completeness_check(&node, None, None, false).failed, vec![Criterion::Size]);
    }

    #[test]
    fn out_of_parent_and_style() {
        let node = LayoutNode::new(WidgetClass::Icon, Frame::new(1400.0, 0.0, 100.0, 40.0));
        let r = completeness_check(&node, None, Some(&Frame::canvas()), true);
        assert_eq!(r.failed, vec![Criterion::Position, Criterion::Style]);
    }

    #[test]
    fn subtree_walk() {
        let req = toolbar_requirement();
        let full = LayoutNode::new(WidgetClass::Toolbar, Frame::new(0.0, 0.0, 1440.0, 200.0))
            .with_child(LayoutNode::new(WidgetClass::TextButton, Frame::new(10.0, 10.0, 100.0, 50.0)))
            .with_child(LayoutNode::new(WidgetClass::Text, Frame::new(200.0, 10.0, 100.0, 50.0)).with_string("Explore"));
        let none = |_| false;
        assert!(subtree_complete(&full, Some(&req), None, &none));
        let mut wrong = full.clone();
        wrong.layers[1].string = Some("Other".into());
        assert!(!subtree_complete(&wrong, Some(&req), None, &none));
        assert_eq!(failing_nodes(&wrong, Some(&req), None, &none), 1);
    }

    #[test]
    fn partition_is_total() {
        let basic = WidgetClass::elements().filter(|c| is_basic(*c)).count();
        let composite = WidgetClass::elements().filter(|c| !is_basic(*c)).count();
        assert_eq!((basic, composite), (15, 10));
        assert!(is_basic(WidgetClass::Text));
        assert!(!is_basic(WidgetClass::Toolbar));
    }
}
