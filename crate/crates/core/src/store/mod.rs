//! Retrieval corpus of element templates and page exemplars.
//!
//! Every element of every reference page becomes an [`ElementTemplate`]
//! whose layout is stored in its own coordinate system (the element's
//! top-left corner at the origin). Each reference page also yields one
//! page exemplar: an artboard template holding the whole page, indexed by
//! its first layer.
//! Templates are embedded once and ranked by cosine similarity.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::{element_tree, node_child_lines, page_to_symbolic, serialize_symbolic};
use crate::layout::{flatten, HierarchicalPath, LayoutNode, PageDocument, WidgetClass};
use crate::llm::{Embedder, LlmError};

/// Texts sent to the embedder per call.
const EMBED_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("vector dimension {found} does not match {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero-length vector")]
    ZeroVector,
    #[error("vector contains a non-finite component")]
    NonFinite,
    #[error(transparent)]
    Embedding(#[from] LlmError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

fn io_error(path: &Path, err: impl std::fmt::Display) -> StoreError {
    StoreError::Io { path: path.to_path_buf(), message: err.to_string() }
}

/// Position, size and value of a template's element in page coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateAttributes {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementTemplate {
    pub id: String,
    pub class: WidgetClass,
    /// Path of the parent element; empty for page exemplars.
    pub parent_path: HierarchicalPath,
    pub attributes: TemplateAttributes,
    /// Subtree JSON with the element's top-left corner at (0, 0).
    pub layout_json: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedding: Vec<f64>,
    /// Depth below the artboard (1 for first-layer elements, 0 for pages).
    pub level: usize,
    pub source_page: String,
    /// Lines describing what the element contains. For page exemplars,
    /// the whole page in block form.
    #[serde(default)]
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_code: Option<String>,
}

impl ElementTemplate {
    pub fn is_page(&self) -> bool {
        self.class == WidgetClass::Artboard
    }

    pub fn layout(&self) -> Result<LayoutNode, serde_json::Error> {
        serde_json::from_str(&self.layout_json)
    }

    pub fn embedding_text(&self) -> String {
        embedding_text(&self.parent_path, self.class, self.attributes.value.as_deref())
    }
}

/// `"<parent path> | <class> | <value>"`, leaving out an empty path or a
/// missing value.
pub fn embedding_text(parent_path: &HierarchicalPath, class: WidgetClass, value: Option<&str>) -> String {
    let mut parts = Vec::with_capacity(3);
    if !parent_path.is_empty() {
        parts.push(parent_path.render_classes());
    }
    parts.push(class.label().to_string());
    if let Some(v) = value {
        parts.push(v.to_string());
    }
    parts.join(" | ")
}

fn local_json(node: &LayoutNode) -> String {
    let mut local = node.clone();
    local.translate(-node.frame.x, -node.frame.y);
    serde_json::to_string(&local).expect("layout nodes serialize")
}

/// One template per element (artboards excluded), in page order then
/// pre-order. Ids are `e` plus a zero-padded running number.
pub fn ingest_pages(pages: &[(String, PageDocument)]) -> Vec<ElementTemplate> {
    let mut out = Vec::new();
    for (page_id, doc) in pages {
        for (path, node) in flatten(doc).into_iter().skip(1) {
            out.push(ElementTemplate {
                id: format!("e{:07}", out.len() + 1),
                class: node.class,
                parent_path: path.parent().expect("non-root path has a parent"),
                attributes: TemplateAttributes {
                    x: node.frame.x,
                    y: node.frame.y,
                    width: node.frame.w,
                    height: node.frame.h,
                    value: node.value().map(str::to_string),
                },
                layout_json: local_json(node),
                embedding: Vec::new(),
                level: path.level(),
                source_page: page_id.clone(),
                content: node_child_lines(node).join("\n"),
                design_code: None,
            });
        }
    }
    out
}

/// One artboard template per page. Its value, and so its embedding, is
/// the list of first-layer elements.
pub fn page_exemplars(pages: &[(String, PageDocument)]) -> Vec<ElementTemplate> {
    pages
        .iter()
        .enumerate()
        .map(|(i, (page_id, doc))| {
            let symbolic = page_to_symbolic(doc);
            ElementTemplate {
                id: format!("p{:07}", i + 1),
                class: WidgetClass::Artboard,
                parent_path: HierarchicalPath::empty(),
                attributes: TemplateAttributes {
                    x: 0.0,
                    y: 0.0,
                    width: doc.root().frame.w,
                    height: doc.root().frame.h,
                    value: Some(element_tree(&symbolic).first_layer_list()),
                },
                layout_json: local_json(doc.root()),
                embedding: Vec::new(),
                level: 0,
                source_page: page_id.clone(),
                content: serialize_symbolic(&symbolic),
                design_code: None,
            }
        })
        .collect()
}

/// Keeps the first template for each (parent path, class). Page exemplars
/// pass through untouched.
pub fn dedup(templates: Vec<ElementTemplate>) -> Vec<ElementTemplate> {
    let mut seen = HashSet::new();
    templates
        .into_iter()
        .filter(|t| t.is_page() || seen.insert((t.parent_path.clone(), t.class)))
        .collect()
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, StoreError> {
    if a.len() != b.len() {
        return Err(StoreError::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(dot.is_finite() && na.is_finite() && nb.is_finite()) {
        return Err(StoreError::NonFinite);
    }
    if na == 0.0 || nb == 0.0 {
        return Err(StoreError::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn check_vector(v: &[f64], dimension: usize) -> Result<(), StoreError> {
    if v.len() != dimension {
        return Err(StoreError::DimensionMismatch { expected: dimension, found: v.len() });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(StoreError::NonFinite);
    }
    if v.iter().all(|x| *x == 0.0) {
        return Err(StoreError::ZeroVector);
    }
    Ok(())
}

/// Where an index came from, written next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub source: String,
    pub embedder: String,
    pub dimension: usize,
    pub page_count: usize,
    pub element_count: usize,
}

/// Embedded templates, immutable once built and safe to share across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateIndex {
    elements: Vec<ElementTemplate>,
    pages: Vec<ElementTemplate>,
    dimension: usize,
    provenance: Provenance,
    style_rates: HashMap<WidgetClass, f64>,
    source_pages: Vec<String>,
}

/// Which half of the index a query searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Elements,
    Pages,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalQuery {
    pub text: String,
    /// Prefer templates of this class, falling back to all classes when
    /// none exist.
    pub class: Option<WidgetClass>,
    pub scope: Scope,
    /// Only templates whose source page is in this set.
    pub pool: Option<Arc<HashSet<String>>>,
}

impl RetrievalQuery {
    pub fn element(parent_path: &HierarchicalPath, class: WidgetClass, value: Option<&str>) -> Self {
        RetrievalQuery {
            text: embedding_text(parent_path, class, value),
            class: Some(class),
            scope: Scope::Elements,
            pool: None,
        }
    }

    /// Query for page exemplars from a first-layer list.
    pub fn page(first_layer: &str) -> Self {
        RetrievalQuery {
            text: embedding_text(&HierarchicalPath::empty(), WidgetClass::Artboard, Some(first_layer)),
            class: None,
            scope: Scope::Pages,
            pool: None,
        }
    }

    pub fn within(mut self, pool: Arc<HashSet<String>>) -> Self {
        self.pool = Some(pool);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored<'a> {
    pub template: &'a ElementTemplate,
    pub similarity: f64,
}

impl TemplateIndex {
    /// Embeds every template lacking a vector and checks the rest.
    pub fn build(
        mut elements: Vec<ElementTemplate>,
        mut pages: Vec<ElementTemplate>,
        embedder: &dyn Embedder,
        mut provenance: Provenance,
    ) -> Result<Self, StoreError> {
        let dimension = embedder.dimension();
        for set in [&mut elements, &mut pages] {
            let missing: Vec<usize> = (0..set.len()).filter(|&i| set[i].embedding.is_empty()).collect();
            for chunk in missing.chunks(EMBED_BATCH) {
                let texts: Vec<String> = chunk.iter().map(|&i| set[i].embedding_text()).collect();
                let vectors = embedder.embed(&texts)?;
                if vectors.len() != texts.len() {
                    return Err(LlmError::EmbeddingCount { expected: texts.len(), found: vectors.len() }.into());
                }
                for (&i, v) in chunk.iter().zip(vectors) {
                    set[i].embedding = v;
                }
            }
        }
        provenance.dimension = dimension;
        provenance.page_count = pages.len();
        provenance.element_count = elements.len();
        Self::from_embedded(elements, pages, provenance)
    }

    /// Wraps templates that already carry vectors.
    pub fn from_embedded(
        elements: Vec<ElementTemplate>,
        pages: Vec<ElementTemplate>,
        provenance: Provenance,
    ) -> Result<Self, StoreError> {
        let dimension = elements.iter().chain(&pages).next().map(|t| t.embedding.len()).unwrap_or(provenance.dimension);
        for t in elements.iter().chain(&pages) {
            check_vector(&t.embedding, dimension)?;
        }
        let mut counts: HashMap<WidgetClass, (usize, usize)> = HashMap::new();
        for t in &elements {
            let styled = t.layout().map(|n| !n.style.is_empty()).unwrap_or(false);
            let entry = counts.entry(t.class).or_default();
            entry.0 += 1;
            entry.1 += usize::from(styled);
        }
        let style_rates = counts.into_iter().map(|(c, (n, s))| (c, s as f64 / n as f64)).collect();
        let mut seen = HashSet::new();
        let source_pages = elements
            .iter()
            .chain(&pages)
            .filter(|t| seen.insert(t.source_page.as_str()))
            .map(|t| t.source_page.clone())
            .collect();
        Ok(TemplateIndex { elements, pages, dimension, provenance, style_rates, source_pages })
    }

    pub fn elements(&self) -> &[ElementTemplate] {
        &self.elements
    }

    pub fn pages(&self) -> &[ElementTemplate] {
        &self.pages
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn get(&self, id: &str) -> Option<&ElementTemplate> {
        self.elements.iter().chain(&self.pages).find(|t| t.id == id)
    }

    /// Share of `class` templates whose layout carries a style.
    pub fn style_rate(&self, class: WidgetClass) -> Option<f64> {
        self.style_rates.get(&class).copied()
    }

    /// Distinct source pages, in index order.
    pub fn source_pages(&self) -> &[String] {
        &self.source_pages
    }

    /// Top `k` by similarity to `vector`, ties broken by ascending id.
    pub fn rank(
        &self,
        vector: &[f64],
        class: Option<WidgetClass>,
        scope: Scope,
        pool: Option<&HashSet<String>>,
        k: usize,
    ) -> Result<Vec<Scored<'_>>, StoreError> {
        check_vector(vector, self.dimension)?;
        let set = match scope {
            Scope::Elements => &self.elements,
            Scope::Pages => &self.pages,
        };
        let in_pool: Vec<&ElementTemplate> =
            set.iter().filter(|t| pool.is_none_or(|p| p.contains(&t.source_page))).collect();
        let mut candidates: Vec<&ElementTemplate> = match class {
            Some(c) if in_pool.iter().any(|t| t.class == c) => in_pool.into_iter().filter(|t| t.class == c).collect(),
            _ => in_pool,
        };
        let mut scored = Vec::with_capacity(candidates.len());
        for t in candidates.drain(..) {
            scored.push(Scored { template: t, similarity: cosine_similarity(vector, &t.embedding)? });
        }
        scored.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then_with(|| a.template.id.cmp(&b.template.id)));
        scored.truncate(k);
        Ok(scored)
    }

    /// Writes one template per line, elements first, plus a
    /// `<name>.meta.json` provenance file beside it.
    pub fn write_jsonl(&self, path: &Path) -> Result<(), StoreError> {
        let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
        let mut w = BufWriter::new(file);
        for t in self.elements.iter().chain(&self.pages) {
            let line = serde_json::to_string(t).expect("templates serialize");
            writeln!(w, "{line}").map_err(|e| io_error(path, e))?;
        }
        w.flush().map_err(|e| io_error(path, e))?;
        let meta = meta_path(path);
        let text = serde_json::to_string_pretty(&self.provenance).expect("provenance serializes");
        fs::write(&meta, text).map_err(|e| io_error(&meta, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self, StoreError> {
        let templates = read_templates(path)?;
        let meta = meta_path(path);
        let provenance = match fs::read_to_string(&meta) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| io_error(&meta, e))?,
            Err(_) => Provenance::default(),
        };
        let (pages, elements) = templates.into_iter().partition(ElementTemplate::is_page);
        Self::from_embedded(elements, pages, provenance)
    }
}

/// Reads templates from a JSONL file, checking each layout against its
/// declared class.
pub fn read_templates(path: &Path) -> Result<Vec<ElementTemplate>, StoreError> {
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let format = |message: String| StoreError::Format { line: i + 1, message };
        let t: ElementTemplate = serde_json::from_str(&line).map_err(|e| format(e.to_string()))?;
        let node = t.layout().map_err(|e| format(format!("template {}: bad layout_json: {e}", t.id)))?;
        if node.class != t.class {
            return Err(format(format!("template {}: layout is {} but class is {}", t.id, node.class, t.class)));
        }
        out.push(t);
    }
    Ok(out)
}

pub fn write_templates(path: &Path, templates: &[ElementTemplate]) -> Result<(), StoreError> {
    let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    for t in templates {
        writeln!(w, "{}", serde_json::to_string(t).expect("templates serialize")).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn meta_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

/// Embeds the query and ranks the index against it.
pub fn retrieve_top_k<'a>(
    index: &'a TemplateIndex,
    query: &RetrievalQuery,
    k: usize,
    embedder: &dyn Embedder,
) -> Result<Vec<Scored<'a>>, StoreError> {
    let vector = embedder.embed_one(&query.text)?;
    index.rank(&vector, query.class, query.scope, query.pool.as_deref(), k)
}

/// `n` items drawn without replacement, kept in corpus order. The same
/// seed always gives the same draw.
pub fn sample_retrieval_pool<T: Clone>(corpus: &[T], n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, corpus.len(), n.min(corpus.len())).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| corpus[i].clone()).collect()
}

/// Templates grouped by class, for quick per-class statistics.
pub fn by_class(templates: &[ElementTemplate]) -> HashMap<WidgetClass, Vec<&ElementTemplate>> {
    let mut map: HashMap<WidgetClass, Vec<&ElementTemplate>> = HashMap::new();
    for t in templates {
        map.entry(t.class).or_default().push(t);
    }
    map
}
