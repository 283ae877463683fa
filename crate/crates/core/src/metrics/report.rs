use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::epacc::{ep_acc, Property, ViolationKind, ViolationRecord};
use super::{alignment, max_iou, overlap, page_boxes};
use crate::layout::PageDocument;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no page pairs to evaluate")]
    NoPairs,
}

/// A generated page and its ground truth.
#[derive(Debug, Clone)]
pub struct PagePair {
    pub id: String,
    pub generated: PageDocument,
    pub truth: PageDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageMetrics {
    pub id: String,
    pub miou: f64,
    /// Alignment of the generated page.
    pub ali: f64,
    /// Overlap of the generated page.
    pub ovp: f64,
    pub epacc: f64,
    pub matched_properties: usize,
    pub total_properties: usize,
    pub violations: Vec<ViolationRecord>,
}

/// Violation counts by kind (rows) and property (columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ViolationTable {
    pub pages: usize,
    /// Rows `Value, ClassOmission, KeyOmission`; columns `Class, Style, String`.
    pub counts: [[usize; 3]; 3],
}

const KINDS: [ViolationKind; 3] = [ViolationKind::Value, ViolationKind::ClassOmission, ViolationKind::KeyOmission];
const PROPERTIES: [Property; 3] = [Property::Class, Property::Style, Property::String];

impl ViolationTable {
    pub fn add(&mut self, v: &ViolationRecord) {
        let row = KINDS.iter().position(|k| *k == v.kind).expect("kind listed");
        let col = PROPERTIES.iter().position(|p| *p == v.property).expect("property listed");
        self.counts[row][col] += 1;
    }

    pub fn count(&self, kind: ViolationKind, property: Property) -> usize {
        let row = KINDS.iter().position(|k| *k == kind).expect("kind listed");
        let col = PROPERTIES.iter().position(|p| *p == property).expect("property listed");
        self.counts[row][col]
    }

    pub fn total(&self, kind: ViolationKind) -> usize {
        PROPERTIES.iter().map(|p| self.count(kind, *p)).sum()
    }

    /// Violations of `kind` per page.
    pub fn average(&self, kind: ViolationKind) -> f64 {
        if self.pages == 0 {
            0.0
        } else {
            self.total(kind) as f64 / self.pages as f64
        }
    }

    pub fn merge(&mut self, other: &ViolationTable) {
        self.pages += other.pages;
        for (row, theirs) in self.counts.iter_mut().zip(other.counts) {
            for (cell, n) in row.iter_mut().zip(theirs) {
                *cell += n;
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:<7}{:>8}{:>8}{:>8}{:>8}{:>9}\n", "", "Class", "Style", "String", "Total", "Average");
        for (kind, label) in KINDS.iter().zip(["Value", "Class", "Key"]) {
            let cell = |p: Property| {
                if *kind == ViolationKind::ClassOmission && p != Property::Class {
                    "-".to_string()
                } else {
                    self.count(*kind, p).to_string()
                }
            };
            let _ = writeln!(
                out,
                "{label:<7}{:>8}{:>8}{:>8}{:>8}{:>9.2}",
                cell(Property::Class),
                cell(Property::Style),
                cell(Property::String),
                self.total(*kind),
                self.average(*kind)
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pages: usize,
    pub miou: f64,
    pub ali: f64,
    pub ovp: f64,
    pub epacc: f64,
    pub violations: ViolationTable,
    pub per_page: Vec<PageMetrics>,
}

impl MetricsReport {
    /// Every violation record with the id of its page.
    pub fn violation_records(&self) -> impl Iterator<Item = (&str, &ViolationRecord)> {
        self.per_page.iter().flat_map(|p| p.violations.iter().map(move |v| (p.id.as_str(), v)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Summary row followed by the violation table.
    pub fn render_table(&self) -> String {
        let row = ComparisonRow::from_report("All pages", self, 0);
        let mut out = format_comparison(&[row]);
        out.push('\n');
        out.push_str(&self.violations.render());
        out
    }
}

pub fn evaluate_pair(pair: &PagePair) -> PageMetrics {
    let gen_boxes = page_boxes(&pair.generated);
    let truth_boxes = page_boxes(&pair.truth);
    let acc = ep_acc(&pair.generated, &pair.truth);
    PageMetrics {
        id: pair.id.clone(),
        miou: max_iou(&gen_boxes, &truth_boxes),
        ali: alignment(&gen_boxes),
        ovp: overlap(&gen_boxes),
        epacc: acc.score,
        matched_properties: acc.matched,
        total_properties: acc.total,
        violations: acc.violations,
    }
}

/// Scores every pair in parallel; means are unweighted over pages and
/// per-page entries keep the input order.
pub fn evaluate_corpus(pairs: &[PagePair]) -> Result<MetricsReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let per_page: Vec<PageMetrics> = pairs.par_iter().map(evaluate_pair).collect();
    let n = per_page.len() as f64;
    let mean = |f: fn(&PageMetrics) -> f64| per_page.iter().map(f).sum::<f64>() / n;
    let mut violations = ViolationTable { pages: per_page.len(), ..Default::default() };
    for v in per_page.iter().flat_map(|p| &p.violations) {
        violations.add(v);
    }
    Ok(MetricsReport {
        pages: per_page.len(),
        miou: mean(|p| p.miou),
        ali: mean(|p| p.ali),
        ovp: mean(|p| p.ovp),
        epacc: mean(|p| p.epacc),
        violations,
        per_page,
    })
}

/// One arm of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub pages: usize,
    pub failures: usize,
    pub miou: f64,
    pub ali: f64,
    pub ovp: f64,
    pub epacc: f64,
}

impl ComparisonRow {
    pub fn from_report(label: &str, report: &MetricsReport, failures: usize) -> Self {
        ComparisonRow {
            label: label.to_string(),
            pages: report.pages,
            failures,
            miou: report.miou,
            ali: report.ali,
            ovp: report.ovp,
            epacc: report.epacc,
        }
    }
}

/// Aligned plain-text table: one row per arm, metric columns mIoU, Ali,
/// Ovp and EPAcc, then page and failure counts.
pub fn format_comparison(rows: &[ComparisonRow]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(6) + 2;
    let mut out = format!(
        "{:<width$}{:>8}{:>8}{:>8}{:>9}{:>7}{:>10}\n",
        "", "mIoU", "Ali", "Ovp", "EPAcc", "Pages", "Failures"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}{:>8.3}{:>8.3}{:>8.3}{:>8.2}%{:>7}{:>10}",
            r.label, r.miou, r.ali, r.ovp, r.epacc, r.pages, r.failures
        );
    }
    out
}
