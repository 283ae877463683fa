//! Layout quality metrics: maximum IoU, alignment, overlap and element
//! property accuracy, plus corpus aggregation and report tables.
//!
//! Geometric metrics work on [`NormBox`]es, frames divided by the canvas
//! size, taken from every node except the artboard.

mod assign;
mod epacc;
mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use assign::max_weight_assignment;
pub use epacc::{ep_acc, EpAcc, Property, ViolationKind, ViolationRecord};
pub use report::{
    evaluate_corpus, evaluate_pair, format_comparison, ComparisonRow, MetricsError, MetricsReport, PageMetrics,
    PagePair, ViolationTable,
};

use crate::layout::{flatten, PageDocument, WidgetClass};

/// Published scores of real pages against themselves as a point of
/// comparison for corpus reports. Not asserted anywhere.
pub mod reference {
    pub const REAL_DATA_MIOU: f64 = 0.680;
    pub const REAL_DATA_ALI: f64 = 0.259;
    pub const REAL_DATA_OVP: f64 = 0.506;
}

/// A box in canvas-relative units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBox {
    pub class: WidgetClass,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl NormBox {
    pub fn new(class: WidgetClass, x: f64, y: f64, w: f64, h: f64) -> Self {
        NormBox { class, x, y, w: w.max(0.0), h: h.max(0.0) }
    }

    pub fn left(&self) -> f64 {
        self.x
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn top(&self) -> f64 {
        self.y
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn xc(&self) -> f64 {
        self.x + self.w / 2.0
    }

    pub fn yc(&self) -> f64 {
        self.y + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn translated(&self, dx: f64, dy: f64) -> NormBox {
        NormBox { x: self.x + dx, y: self.y + dy, ..*self }
    }

    fn intersection(&self, other: &NormBox) -> f64 {
        let w = self.right().min(other.right()) - self.left().max(other.left());
        let h = self.bottom().min(other.bottom()) - self.top().max(other.top());
        w.max(0.0) * h.max(0.0)
    }
}

/// Boxes of every element below the artboard, in pre-order.
pub fn page_boxes(doc: &PageDocument) -> Vec<NormBox> {
    let canvas = doc.canvas();
    flatten(doc)
        .into_iter()
        .skip(1)
        .map(|(_, node)| {
            let f = node.frame;
            NormBox::new(node.class, (f.x - canvas.x) / canvas.w, (f.y - canvas.y) / canvas.h, f.w / canvas.w, f.h / canvas.h)
        })
        .collect()
}

pub fn iou(a: &NormBox, b: &NormBox) -> f64 {
    let inter = a.intersection(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn group_by_class(boxes: &[NormBox]) -> BTreeMap<WidgetClass, Vec<&NormBox>> {
    let mut groups: BTreeMap<WidgetClass, Vec<&NormBox>> = BTreeMap::new();
    for b in boxes {
        groups.entry(b.class).or_default().push(b);
    }
    groups
}

/// Matched IoU summed over the best within-class assignment, divided by
/// the larger of the two box counts.
pub fn max_iou(generated: &[NormBox], truth: &[NormBox]) -> f64 {
    if generated.is_empty() && truth.is_empty() {
        return 1.0;
    }
    if generated.is_empty() || truth.is_empty() {
        return 0.0;
    }
    let gen_groups = group_by_class(generated);
    let truth_groups = group_by_class(truth);
    let mut matched = 0.0;
    for (class, gens) in &gen_groups {
        let Some(gts) = truth_groups.get(class) else { continue };
        let weights: Vec<Vec<f64>> = gens.iter().map(|g| gts.iter().map(|t| iou(g, t)).collect()).collect();
        matched += max_weight_assignment(&weights)
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| weights[i][j]))
            .sum::<f64>();
    }
    matched / generated.len().max(truth.len()) as f64
}

fn edge_distance(a: &NormBox, b: &NormBox) -> f64 {
    [
        (a.left() - b.left()).abs(),
        (a.right() - b.right()).abs(),
        (a.xc() - b.xc()).abs(),
        (a.top() - b.top()).abs(),
        (a.bottom() - b.bottom()).abs(),
        (a.yc() - b.yc()).abs(),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// For each element, index of the element it is best aligned with.
pub fn alignment_partners(boxes: &[NormBox]) -> Vec<usize> {
    (0..boxes.len())
        .map(|i| {
            (0..boxes.len())
                .filter(|&j| j != i)
                .map(|j| (j, edge_distance(&boxes[i], &boxes[j])))
                .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
                .0
        })
        .collect()
}

/// Mean over elements of the smallest edge distance to any other element.
pub fn alignment(boxes: &[NormBox]) -> f64 {
    if boxes.len() < 2 {
        return 0.0;
    }
    let partners = alignment_partners(boxes);
    partners.iter().enumerate().map(|(i, &j)| edge_distance(&boxes[i], &boxes[j])).sum::<f64>() / boxes.len() as f64
}

/// Mean over same-class pairs of intersection over the smaller area.
pub fn overlap(boxes: &[NormBox]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for group in group_by_class(boxes).values() {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                let min_area = a.area().min(b.area());
                if min_area > 0.0 {
                    sum += a.intersection(b) / min_area;
                }
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use WidgetClass::{Icon, Image, Text};

    fn b(class: WidgetClass, x: f64, y: f64, w: f64, h: f64) -> NormBox {
        NormBox::new(class, x, y, w, h)
    }

    #[test]
    fn iou_cases() {
        let a = b(Text, 0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &b(Text, 5.0, 5.0, 1.0, 1.0)), 0.0);
        assert!((iou(&a, &b(Text, 1.0, 1.0, 2.0, 2.0)) - 1.0 / 7.0).abs() < 1e-12);
        let flat = b(Text, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(iou(&flat, &flat), 0.0);
    }

    #[test]
    fn max_iou_counts_unmatched() {
        let gt = vec![b(Text, 0.0, 0.0, 0.5, 0.1), b(Image, 0.0, 0.2, 0.5, 0.5)];
        assert_eq!(max_iou(&gt, &gt), 1.0);
        assert_eq!(max_iou(&gt[..1], &gt), 0.5);
        assert_eq!(max_iou(&gt, &gt[..1]), 0.5);
        let swapped = vec![gt[1], gt[0]];
        assert_eq!(max_iou(&swapped, &gt), 1.0);
        assert_eq!(max_iou(&[], &[]), 1.0);
        assert_eq!(max_iou(&[], &gt), 0.0);
        let wrong_class = vec![b(Icon, 0.0, 0.0, 0.5, 0.1)];
        assert_eq!(max_iou(&wrong_class, &gt[..1]), 0.0);
    }

    #[test]
    fn alignment_by_hand() {
        assert_eq!(alignment(&[b(Text, 0.1, 0.1, 0.2, 0.1), b(Icon, 0.1, 0.5, 0.4, 0.2)]), 0.0);
        assert_eq!(alignment(&[b(Text, 0.1, 0.1, 0.2, 0.1)]), 0.0);
        // Pairwise minima: A-B 0.05 (left), A-C 0.1 (top), B-C 0.02 (x-center).
        let boxes = [
            b(Text, 0.10, 0.10, 0.20, 0.10),
            b(Text, 0.15, 0.40, 0.30, 0.20),
            b(Text, 0.22, 0.20, 0.20, 0.30),
        ];
        let want = (0.05 + 0.02 + 0.02) / 3.0;
        assert!((alignment(&boxes) - want).abs() < 1e-12, "{}", alignment(&boxes));
        assert_eq!(alignment_partners(&boxes), vec![1, 2, 1]);
    }

    #[test]
    fn overlap_cases() {
        assert_eq!(overlap(&[b(Text, 0.0, 0.0, 0.1, 0.1), b(Text, 0.5, 0.5, 0.1, 0.1)]), 0.0);
        assert_eq!(overlap(&[b(Text, 0.0, 0.0, 0.5, 0.5), b(Text, 0.1, 0.1, 0.1, 0.1)]), 1.0);
        assert_eq!(overlap(&[b(Text, 0.0, 0.0, 0.5, 0.5), b(Image, 0.1, 0.1, 0.1, 0.1)]), 0.0);
        let half = [b(Image, 0.0, 0.0, 0.2, 0.2), b(Image, 0.1, 0.0, 0.2, 0.2), b(Image, 0.8, 0.8, 0.1, 0.1)];
        assert!((overlap(&half) - 0.5 / 3.0).abs() < 1e-12);
    }
}
