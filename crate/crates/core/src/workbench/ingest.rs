use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::WorkbenchError;
use crate::layout::{parse_page_json, serialize_page, Frame, LayoutNode, PageDocument, WidgetClass};

/// A page file that could not be read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub pages: usize,
    /// Element templates before de-duplication.
    pub templates: usize,
    pub dedup_removed: usize,
    pub page_exemplars: usize,
    pub skipped: Vec<Skipped>,
    pub warnings: usize,
}

/// Source formats `ingest` understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    /// The exchange schema: `_class`, `frame`, `layers`.
    Canonical,
    /// Semantic annotations with `bounds: [x1, y1, x2, y2]`,
    /// `componentLabel` and `children`.
    Rico,
}

pub fn detect_format(value: &Value) -> Option<SourceFormat> {
    let obj = value.as_object()?;
    if obj.contains_key("_class") || obj.contains_key("frame") {
        Some(SourceFormat::Canonical)
    } else if obj.contains_key("bounds") {
        Some(SourceFormat::Rico)
    } else {
        None
    }
}

fn rico_frame(value: &Value) -> Option<Frame> {
    let b = value.get("bounds")?.as_array()?;
    let n: Vec<f64> = b.iter().filter_map(Value::as_f64).collect();
    match n[..] {
        [x1, y1, x2, y2] if x2 >= x1 && y2 >= y1 => Some(Frame::new(x1, y1, x2 - x1, y2 - y1)),
        _ => None,
    }
}

/// Converts labelled nodes; unlabelled ones are dropped and their children
/// lifted to the nearest labelled ancestor.
fn rico_children(value: &Value, warnings: &mut usize) -> Vec<LayoutNode> {
    let Some(children) = value.get("children").and_then(Value::as_array) else { return Vec::new() };
    let mut out = Vec::new();
    for child in children {
        let label = child.get("componentLabel").and_then(Value::as_str);
        match (label.and_then(WidgetClass::resolve), rico_frame(child)) {
            (Some(resolved), Some(frame)) if resolved.class != WidgetClass::Artboard => {
                *warnings += usize::from(resolved.substituted);
                let mut node = LayoutNode::new(resolved.class, frame);
                if resolved.class == WidgetClass::Text {
                    node.string = child.get("text").and_then(Value::as_str).map(str::to_string);
                }
                node.layers = rico_children(child, warnings);
                out.push(node);
            }
            (None, _) if label.is_some() => {
                *warnings += 1;
                out.extend(rico_children(child, warnings));
            }
            _ => out.extend(rico_children(child, warnings)),
        }
    }
    out
}

/// Converts one semantic-annotation screen. Coordinates are kept as given;
/// the root frame becomes the artboard.
pub fn rico_to_page(value: &Value) -> Result<(PageDocument, usize), String> {
    let frame = rico_frame(value).ok_or("root has no usable bounds")?;
    let mut warnings = 0;
    let mut root = LayoutNode::new(WidgetClass::Artboard, Frame::new(0.0, 0.0, frame.right(), frame.bottom()));
    root.name = "artboard".into();
    root.layers = rico_children(value, &mut warnings);
    let doc = PageDocument::new(root).map_err(|e| e.to_string())?;
    Ok((doc, warnings))
}

/// Reads one page file in either format.
pub fn read_page_file(path: &Path) -> Result<(PageDocument, usize), String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let value: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    match detect_format(&value) {
        Some(SourceFormat::Canonical) => {
            let parsed = parse_page_json(&text).map_err(|e| e.to_string())?;
            Ok((parsed.document, parsed.warnings.len()))
        }
        Some(SourceFormat::Rico) => rico_to_page(&value),
        None => Err("neither the canonical schema nor semantic annotations".into()),
    }
}

/// `*.json` files directly inside `dir`, sorted by name.
pub fn json_files(dir: &Path) -> Result<Vec<PathBuf>, WorkbenchError> {
    let entries = fs::read_dir(dir).map_err(|e| WorkbenchError::Data(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn page_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Reads every page under `dir`, skipping unreadable files.
pub fn read_pages(dir: &Path) -> Result<(Vec<(String, PageDocument)>, Vec<Skipped>, usize), WorkbenchError> {
    let mut pages = Vec::new();
    let mut skipped = Vec::new();
    let mut warnings = 0;
    for file in json_files(dir)? {
        match read_page_file(&file) {
            Ok((doc, w)) => {
                warnings += w;
                pages.push((page_id(&file), doc));
            }
            Err(reason) => skipped.push(Skipped { file: file.display().to_string(), reason }),
        }
    }
    Ok((pages, skipped, warnings))
}

pub fn write_pages(dir: &Path, pages: &[(String, PageDocument)]) -> Result<(), WorkbenchError> {
    fs::create_dir_all(dir)?;
    for (id, doc) in pages {
        fs::write(dir.join(format!("{id}.json")), serialize_page(doc))?;
    }
    Ok(())
}
