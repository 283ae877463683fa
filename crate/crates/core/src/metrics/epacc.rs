use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::layout::{child_paths, HierarchicalPath, LayoutNode, PageDocument, PathSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    /// Counterpart present, property value differs.
    Value,
    /// No counterpart for a ground-truth node.
    ClassOmission,
    /// Counterpart present, property missing.
    KeyOmission,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Property {
    Class,
    Style,
    String,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Class => "Class",
            Property::Style => "Style",
            Property::String => "String",
        })
    }
}

/// One mismatch, located by the ground-truth path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub kind: ViolationKind,
    pub property: Property,
    pub path: HierarchicalPath,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpAcc {
    /// Percentage of ground-truth properties matched.
    pub score: f64,
    pub matched: usize,
    pub total: usize,
    pub violations: Vec<ViolationRecord>,
}

fn property_count(node: &LayoutNode) -> usize {
    1 + usize::from(node.string.is_some()) + node.style.len()
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        _ => a == b,
    }
}

struct Tally {
    matched: usize,
    total: usize,
    violations: Vec<ViolationRecord>,
}

impl Tally {
    fn omit(&mut self, truth: &LayoutNode, path: HierarchicalPath) {
        self.total += property_count(truth);
        let paths = child_paths(&path, &truth.layers);
        self.violations.push(ViolationRecord { kind: ViolationKind::ClassOmission, property: Property::Class, path, key: None });
        for (child, child_path) in truth.layers.iter().zip(paths) {
            self.omit(child, child_path);
        }
    }

    fn check(&mut self, ok: bool, kind: ViolationKind, property: Property, path: &HierarchicalPath, key: Option<&str>) {
        self.total += 1;
        if ok {
            self.matched += 1;
        } else {
            self.violations.push(ViolationRecord { kind, property, path: path.clone(), key: key.map(str::to_string) });
        }
    }

    fn compare(&mut self, generated: &LayoutNode, truth: &LayoutNode, path: &HierarchicalPath) {
        self.check(generated.class == truth.class, ViolationKind::Value, Property::Class, path, None);
        if let Some(want) = &truth.string {
            match &generated.string {
                None => self.check(false, ViolationKind::KeyOmission, Property::String, path, None),
                Some(got) => self.check(got == want, ViolationKind::Value, Property::String, path, None),
            }
        }
        for (key, want) in &truth.style {
            match generated.style.get(key) {
                None => self.check(false, ViolationKind::KeyOmission, Property::Style, path, Some(key)),
                Some(got) => self.check(values_equal(got, want), ViolationKind::Value, Property::Style, path, Some(key)),
            }
        }
        let paths = child_paths(path, &truth.layers);
        for (i, (child, child_path)) in truth.layers.iter().zip(paths).enumerate() {
            match generated.layers.get(i) {
                Some(counterpart) => self.compare(counterpart, child, &child_path),
                None => self.omit(child, child_path),
            }
        }
    }
}

/// Element property accuracy of `generated` against `truth`. Children are
/// paired by position within each layers list; every ground-truth node,
/// the artboard included, contributes its class, its string when present
/// and each of its style keys. Omitted nodes produce one record each.
pub fn ep_acc(generated: &PageDocument, truth: &PageDocument) -> EpAcc {
    let mut tally = Tally { matched: 0, total: 0, violations: Vec::new() };
    let root = HierarchicalPath::from_segments(vec![PathSegment::new(truth.root().class, 1)]);
    tally.compare(generated.root(), truth.root(), &root);
    let score = if tally.total == 0 { 100.0 } else { 100.0 * tally.matched as f64 / tally.total as f64 };
    EpAcc { score, matched: tally.matched, total: tally.total, violations: tally.violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{Frame, WidgetClass};

    fn page() -> PageDocument {
        let bar = LayoutNode::new(WidgetClass::Toolbar, Frame::new(0.0, 0.0, 1440.0, 200.0))
            .with_style("backgroundColor", "#3F51B5")
            .with_child(LayoutNode::new(WidgetClass::Icon, Frame::new(20.0, 50.0, 100.0, 100.0)))
            .with_child(
                LayoutNode::new(WidgetClass::Text, Frame::new(140.0, 50.0, 400.0, 100.0))
                    .with_string("Inbox")
                    .with_style("color", "#212121")
                    .with_style("fontSize", 32),
            );
        PageDocument::new(LayoutNode::new(WidgetClass::Artboard, Frame::canvas()).with_child(bar)).unwrap()
    }

    #[test]
    fn identity_is_perfect() {
        let p = page();
        let r = ep_acc(&p, &p);
        // artboard 1, toolbar 2, icon 1, text 4
        assert_eq!((r.score, r.matched, r.total), (100.0, 8, 8));
        assert!(r.violations.is_empty());
    }

    #[test]
    fn missing_text_is_one_class_omission() {
        let truth = page();
        let mut generated = truth.clone();
        generated.layers_mut()[0].layers.pop();
        let r = ep_acc(&generated, &truth);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].kind, ViolationKind::ClassOmission);
        assert_eq!(r.violations[0].property, Property::Class);
        assert_eq!(r.violations[0].path.to_string(), "artboard:1->Toolbar:1->Text:1");
        assert!((r.score - 100.0 * 4.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn string_and_style_mismatches() {
        let truth = page();
        let mut generated = truth.clone();
        let text = &mut generated.layers_mut()[0].layers[1];
        text.string = Some("Outbox".into());
        text.style.remove("color");
        text.style.insert("fontSize".into(), serde_json::json!(32.0));
        let r = ep_acc(&generated, &truth);
        let kinds: Vec<(ViolationKind, Property)> = r.violations.iter().map(|v| (v.kind, v.property)).collect();
        assert_eq!(kinds, [(ViolationKind::Value, Property::String), (ViolationKind::KeyOmission, Property::Style)]);
        assert_eq!(r.violations[1].key.as_deref(), Some("color"));
        assert_eq!((r.matched, r.total), (6, 8));
    }

    #[test]
    fn omitted_subtree_counts_every_node() {
        let truth = page();
        let mut generated = truth.clone();
        generated.layers_mut().clear();
        let r = ep_acc(&generated, &truth);
        assert_eq!(r.violations.len(), 3);
        assert!(r.violations.iter().all(|v| v.kind == ViolationKind::ClassOmission));
        assert_eq!((r.matched, r.total), (1, 8));
    }
}
