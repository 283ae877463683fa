//! Command implementations behind the `pagesmith` binary: ingestion,
//! splitting, index building, generation, evaluation, ablation and
//! rendering. Every command writes into one output directory and, where
//! it produces a run, a `manifest.json` listing its artifacts.

mod cli;
mod ingest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cli::{main_with_args, Cli};
pub use ingest::{detect_format, read_page_file, read_pages, rico_to_page, IngestSummary, Skipped, SourceFormat};

use crate::agents::{AgentError, GenerationConfig, Mode, PageRequest, Pipeline, RunFailure, RunOutput};
use crate::dsl::{page_to_symbolic, parse_symbolic};
use crate::layout::{serialize_page, PageDocument};
use crate::llm::http::{BackendConfig, HttpBackend, HttpEmbedder};
use crate::llm::mock::{HashEmbedder, ScriptedBackend};
use crate::llm::{CompletionBackend, Embedder, Gateway};
use crate::metrics::{evaluate_corpus, format_comparison, ComparisonRow, MetricsReport, PagePair};
use crate::render::render_svg;
use crate::store::{
    dedup, ingest_pages, page_exemplars, sample_retrieval_pool, write_templates, Provenance, StoreError, TemplateIndex,
};
use crate::synthetic::SyntheticDesigner;

/// Default number of test pages an ablation samples.
pub const DEFAULT_ABLATION_SAMPLE: usize = 600;
pub const DEFAULT_SPLIT_RATIO: f64 = 0.9;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl WorkbenchError {
    /// Process exit status: 1 usage, 2 data, 3 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkbenchError::Usage(_) => 1,
            WorkbenchError::Data(_) | WorkbenchError::Io(_) => 2,
            WorkbenchError::Backend(_) => 3,
        }
    }
}

impl From<StoreError> for WorkbenchError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Embedding(inner) => WorkbenchError::Backend(inner.to_string()),
            other => WorkbenchError::Data(other.to_string()),
        }
    }
}

impl From<AgentError> for WorkbenchError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::Llm(inner) => WorkbenchError::Backend(inner.to_string()),
            AgentError::InvalidConfig(m) => WorkbenchError::Usage(m),
            other => WorkbenchError::Data(other.to_string()),
        }
    }
}

/// Where completions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendChoice {
    Http(BackendConfig),
    /// A JSON array of `{"match", "response"}` entries.
    Scripted(PathBuf),
    /// The rule-based offline designer.
    Synthetic,
}

impl BackendChoice {
    pub fn name(&self) -> &'static str {
        match self {
            BackendChoice::Http(_) => "http",
            BackendChoice::Scripted(_) => "scripted",
            BackendChoice::Synthetic => "synthetic",
        }
    }

    pub fn build(&self) -> Result<Arc<dyn CompletionBackend>, WorkbenchError> {
        Ok(match self {
            BackendChoice::Http(config) => Arc::new(HttpBackend::new(config.clone())),
            BackendChoice::Scripted(path) => Arc::new(ScriptedBackend::from_file(path).map_err(WorkbenchError::Data)?),
            BackendChoice::Synthetic => Arc::new(SyntheticDesigner),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedderChoice {
    Hash(usize),
    Http(BackendConfig, usize),
}

impl EmbedderChoice {
    pub fn build(&self) -> Box<dyn Embedder> {
        match self {
            EmbedderChoice::Hash(dim) => Box::new(HashEmbedder::new(*dim)),
            EmbedderChoice::Http(config, dim) => Box::new(HttpEmbedder::new(config.clone(), *dim)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            EmbedderChoice::Hash(dim) => format!("hash/{dim}"),
            EmbedderChoice::Http(config, dim) => format!("http:{}/{dim}", config.model),
        }
    }
}

/// A gateway and embedder shared by every page of a command.
pub struct Backends {
    pub gateway: Gateway,
    pub embedder: Box<dyn Embedder>,
    pub label: String,
}

impl Backends {
    pub fn new(backend: &BackendChoice, embedder: &EmbedderChoice, max_in_flight: usize) -> Result<Self, WorkbenchError> {
        let gateway = Gateway::new(backend.build()?).with_max_in_flight(max_in_flight.max(1));
        Ok(Backends { gateway, embedder: embedder.build(), label: backend.name().to_string() })
    }
}

/// One file a command wrote.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub seed: Option<u64>,
    pub backend: Option<String>,
    #[serde(default)]
    pub settings: BTreeMap<String, serde_json::Value>,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn new(command: &str, arguments: &[String]) -> Self {
        Manifest {
            command: command.to_string(),
            arguments: arguments.to_vec(),
            seed: None,
            backend: None,
            settings: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn setting(mut self, key: &str, value: impl Serialize) -> Self {
        self.settings.insert(key.to_string(), serde_json::to_value(value).expect("settings serialize"));
        self
    }

    /// Lists every file under `dir` and writes the manifest there.
    pub fn write(mut self, dir: &Path) -> Result<PathBuf, WorkbenchError> {
        let mut files = Vec::new();
        collect_files(dir, &mut files)?;
        files.sort();
        self.artifacts = files
            .iter()
            .filter(|f| **f != dir.join(MANIFEST_FILE))
            .map(|f| {
                let bytes = fs::read(f)?;
                Ok(Artifact {
                    path: f.strip_prefix(dir).unwrap_or(f).to_string_lossy().replace('\\', "/"),
                    bytes: bytes.len() as u64,
                    sha256: format!("{:x}", Sha256::digest(&bytes)),
                })
            })
            .collect::<Result<_, std::io::Error>>()?;
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&self).expect("manifest serializes"))?;
        Ok(path)
    }
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), WorkbenchError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_string_pretty(value).expect("values serialize"))?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, WorkbenchError> {
    let text = fs::read_to_string(path).map_err(|e| WorkbenchError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| WorkbenchError::Data(format!("{}: {e}", path.display())))
}

/// Files inside a store directory.
pub mod store_files {
    pub const PAGES: &str = "pages";
    pub const TEMPLATES: &str = "templates.jsonl";
    pub const EXEMPLARS: &str = "exemplars.jsonl";
    pub const SUMMARY: &str = "ingest.json";
    pub const SPLIT: &str = "split.json";
    pub const INDEX: &str = "index.jsonl";
}

/// Converts every page under `src` and writes a store to `store`.
pub fn cmd_ingest(src: &Path, store: &Path) -> Result<IngestSummary, WorkbenchError> {
    let (pages, skipped, warnings) = read_pages(src)?;
    if pages.is_empty() {
        return Err(WorkbenchError::Data(format!(
            "no pages ingested from {} ({} files skipped)",
            src.display(),
            skipped.len()
        )));
    }
    let templates = ingest_pages(&pages);
    let total = templates.len();
    let kept = dedup(templates);
    let exemplars = page_exemplars(&pages);
    ingest::write_pages(&store.join(store_files::PAGES), &pages)?;
    write_templates(&store.join(store_files::TEMPLATES), &kept)?;
    write_templates(&store.join(store_files::EXEMPLARS), &exemplars)?;
    let summary = IngestSummary {
        pages: pages.len(),
        templates: total,
        dedup_removed: total - kept.len(),
        page_exemplars: exemplars.len(),
        skipped,
        warnings,
    };
    write_json(&store.join(store_files::SUMMARY), &summary)?;
    Ok(summary)
}

/// Reference and test page ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub ratio: f64,
    pub reference: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded page-level split. The test side gets `max(1, floor((1 - ratio) * n))`
/// pages.
pub fn split_ids(ids: &[String], ratio: f64, seed: u64) -> Result<Split, WorkbenchError> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(WorkbenchError::Usage(format!("split ratio {ratio} is outside [0, 1)")));
    }
    if ids.len() < 2 {
        return Err(WorkbenchError::Data(format!("cannot split {} pages", ids.len())));
    }
    let mut sorted = ids.to_vec();
    sorted.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);
    let n = sorted.len() as f64;
    let test_len = (((1.0 - ratio) * n + 1e-9).floor() as usize).max(1).min(sorted.len() - 1);
    let mut test = sorted[..test_len].to_vec();
    let mut reference = sorted[test_len..].to_vec();
    test.sort();
    reference.sort();
    Ok(Split { seed, ratio, reference, test })
}

fn store_ids(store: &Path) -> Result<Vec<String>, WorkbenchError> {
    let dir = store.join(store_files::PAGES);
    Ok(ingest::json_files(&dir)?.iter().map(|p| ingest::page_id(p)).collect())
}

pub fn cmd_split(store: &Path, ratio: f64, seed: u64) -> Result<Split, WorkbenchError> {
    let ids = store_ids(store)?;
    if ids.is_empty() {
        return Err(WorkbenchError::Data(format!("store {} holds no pages", store.display())));
    }
    let split = split_ids(&ids, ratio, seed)?;
    write_json(&store.join(store_files::SPLIT), &split)?;
    Ok(split)
}

pub fn read_split(store: &Path) -> Result<Option<Split>, WorkbenchError> {
    let path = store.join(store_files::SPLIT);
    if path.exists() {
        read_json(&path).map(Some)
    } else {
        Ok(None)
    }
}

/// Loads pages by id from a store.
pub fn load_pages(store: &Path, ids: &[String]) -> Result<Vec<(String, PageDocument)>, WorkbenchError> {
    ids.iter()
        .map(|id| {
            let path = store.join(store_files::PAGES).join(format!("{id}.json"));
            read_page_file(&path)
                .map(|(doc, _)| (id.clone(), doc))
                .map_err(|e| WorkbenchError::Data(format!("{}: {e}", path.display())))
        })
        .collect()
}

/// Embeds the reference pages (all pages when the store is unsplit) and
/// writes the index to `out`.
pub fn cmd_build_index(store: &Path, out: &Path, embedder: &EmbedderChoice) -> Result<Provenance, WorkbenchError> {
    let ids = match read_split(store)? {
        Some(split) => split.reference,
        None => store_ids(store)?,
    };
    if ids.is_empty() {
        return Err(WorkbenchError::Data(format!("store {} holds no reference pages", store.display())));
    }
    let pages = load_pages(store, &ids)?;
    let provenance = Provenance {
        source: store.display().to_string(),
        embedder: embedder.describe(),
        ..Default::default()
    };
    let built = embedder.build();
    let index = TemplateIndex::build(dedup(ingest_pages(&pages)), page_exemplars(&pages), built.as_ref(), provenance)?;
    if let Some(parent) = out.parent() {
        fs::create_dir_all(parent)?;
    }
    index.write_jsonl(out)?;
    Ok(index.provenance().clone())
}

/// What `generate` builds pages from.
#[derive(Debug, Clone, PartialEq)]
pub enum GenerateInput {
    /// Free text for the semantic parser.
    Description(String),
    /// A file holding an element inventory in the symbolic language.
    Inventory(PathBuf),
    /// Store pages, described by their own inventories.
    Pages(Vec<String>),
    /// Every page on the test side of the store split.
    TestSet,
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub index: PathBuf,
    pub store: Option<PathBuf>,
    pub input: GenerateInput,
    pub run_dir: PathBuf,
    pub config: GenerationConfig,
    pub jobs: usize,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageOutcome {
    pub id: String,
    pub ok: bool,
    pub trace: Vec<i32>,
    pub generation_calls: usize,
    pub failed_step: Option<i32>,
    pub failure: Option<String>,
    /// Whether the failure came from the model backend.
    #[serde(default)]
    pub backend_failure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub pages: Vec<PageOutcome>,
}

impl GenerateSummary {
    pub fn failures(&self) -> usize {
        self.pages.iter().filter(|p| !p.ok).count()
    }

    /// Exit status for the whole command.
    pub fn exit_code(&self) -> i32 {
        if self.pages.iter().any(|p| p.backend_failure) {
            3
        } else if self.failures() > 0 {
            2
        } else {
            0
        }
    }
}

/// Mixes the run seed with a page id so each page samples its own pool.
pub fn page_seed(seed: u64, id: &str) -> u64 {
    let digest = Sha256::digest(id.as_bytes());
    seed ^ u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn run_pool(jobs: usize) -> Result<rayon::ThreadPool, WorkbenchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| WorkbenchError::Usage(e.to_string()))
}

/// Runs the pipeline once per request, in parallel up to `jobs`, and
/// returns results in input order.
pub fn run_requests(
    backends: &Backends,
    index: &TemplateIndex,
    base: &GenerationConfig,
    requests: Vec<(String, PageRequest)>,
    run_dir: Option<&Path>,
    jobs: usize,
) -> Result<Vec<(String, Result<RunOutput, RunFailure>)>, WorkbenchError> {
    let pool = run_pool(jobs)?;
    pool.install(|| {
        requests
            .into_par_iter()
            .map(|(id, request)| {
                let config = GenerationConfig {
                    seed: page_seed(base.seed, &id),
                    run_dir: run_dir.map(|d| d.join("runs").join(&id)),
                    ..base.clone()
                };
                let pipeline = Pipeline::new(&backends.gateway, backends.embedder.as_ref(), index, config)?;
                Ok((id, pipeline.orchestrate(request)))
            })
            .collect::<Result<Vec<_>, AgentError>>()
    })
    .map_err(WorkbenchError::from)
}

fn outcome(id: &str, result: &Result<RunOutput, RunFailure>) -> PageOutcome {
    match result {
        Ok(out) => PageOutcome {
            id: id.to_string(),
            ok: true,
            trace: out.record.trace.clone(),
            generation_calls: out.record.generation_calls(),
            failed_step: None,
            failure: None,
            backend_failure: false,
        },
        Err(f) => PageOutcome {
            id: id.to_string(),
            ok: false,
            trace: f.record.trace.clone(),
            generation_calls: f.record.generation_calls(),
            failed_step: Some(f.step),
            failure: Some(f.error.to_string()),
            backend_failure: matches!(f.error, AgentError::Llm(_)),
        },
    }
}

fn check_index(index: &TemplateIndex, embedder: &dyn Embedder) -> Result<(), WorkbenchError> {
    if index.dimension() != embedder.dimension() {
        return Err(WorkbenchError::Usage(format!(
            "index vectors have {} dimensions but the embedder produces {}",
            index.dimension(),
            embedder.dimension()
        )));
    }
    Ok(())
}

fn generate_requests(opts: &GenerateOptions) -> Result<Vec<(String, PageRequest)>, WorkbenchError> {
    let store = || opts.store.as_deref().ok_or_else(|| WorkbenchError::Usage("--store is required for store pages".into()));
    Ok(match &opts.input {
        GenerateInput::Description(text) => vec![("description".to_string(), PageRequest::Text(text.clone()))],
        GenerateInput::Inventory(path) => {
            let text = fs::read_to_string(path).map_err(|e| WorkbenchError::Data(format!("{}: {e}", path.display())))?;
            let page = parse_symbolic(&text).map_err(|e| WorkbenchError::Data(format!("{}: {e}", path.display())))?.page;
            vec![(ingest::page_id(path), PageRequest::Symbolic(page))]
        }
        GenerateInput::Pages(ids) => load_pages(store()?, ids)?
            .into_iter()
            .map(|(id, doc)| (id, PageRequest::Symbolic(page_to_symbolic(&doc))))
            .collect(),
        GenerateInput::TestSet => {
            let store = store()?;
            let split = read_split(store)?.ok_or_else(|| WorkbenchError::Data("store has no split; run split first".into()))?;
            load_pages(store, &split.test)?
                .into_iter()
                .map(|(id, doc)| (id, PageRequest::Symbolic(page_to_symbolic(&doc))))
                .collect()
        }
    })
}

/// Generates pages into `run_dir`: per-page artifacts under `runs/<id>/`,
/// final layouts under `generated/<id>.json`, plus `summary.json` and the
/// gateway audit log.
pub fn cmd_generate(backends: &Backends, opts: &GenerateOptions) -> Result<GenerateSummary, WorkbenchError> {
    let index = TemplateIndex::read_jsonl(&opts.index)?;
    check_index(&index, backends.embedder.as_ref())?;
    let requests = generate_requests(opts)?;
    fs::create_dir_all(&opts.run_dir)?;
    let results = run_requests(backends, &index, &opts.config, requests, Some(&opts.run_dir), opts.jobs)?;
    let generated = opts.run_dir.join("generated");
    fs::create_dir_all(&generated)?;
    let mut pages = Vec::new();
    for (id, result) in &results {
        if let Ok(out) = result {
            fs::write(generated.join(format!("{id}.json")), serialize_page(&out.document))?;
            if opts.svg {
                fs::write(opts.run_dir.join("runs").join(id).join("layout.svg"), render_svg(&out.document))?;
            }
        }
        pages.push(outcome(id, result));
    }
    let summary = GenerateSummary { pages };
    write_json(&opts.run_dir.join("summary.json"), &summary)?;
    backends.gateway.write_audit_jsonl(&opts.run_dir.join("audit.jsonl"))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOutcome {
    pub report: MetricsReport,
    /// Generated pages with no ground truth.
    pub unmatched: Vec<String>,
    /// Ground-truth pages nothing was generated for.
    pub truth_only: usize,
}

fn pages_by_id(dir: &Path) -> Result<BTreeMap<String, PageDocument>, WorkbenchError> {
    let (pages, skipped, _) = read_pages(dir)?;
    if let Some(s) = skipped.first() {
        return Err(WorkbenchError::Data(format!("{}: {}", s.file, s.reason)));
    }
    Ok(pages.into_iter().collect())
}

/// Pairs pages by file name and scores them. With `first_layer`, only
/// the artboard and its direct children are compared.
pub fn evaluate_dirs(generated: &Path, truth: &Path, first_layer: bool) -> Result<EvaluateOutcome, WorkbenchError> {
    let gen = pages_by_id(generated)?;
    let gt = pages_by_id(truth)?;
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for (id, g) in &gen {
        match gt.get(id) {
            Some(t) => pairs.push(pair(id, g, t, first_layer)),
            None => unmatched.push(id.clone()),
        }
    }
    let truth_only = gt.len() - pairs.len();
    if pairs.is_empty() {
        return Err(WorkbenchError::Data(format!(
            "no page ids in common between {} and {}",
            generated.display(),
            truth.display()
        )));
    }
    let report = evaluate_corpus(&pairs).map_err(|e| WorkbenchError::Data(e.to_string()))?;
    Ok(EvaluateOutcome { report, unmatched, truth_only })
}

fn pair(id: &str, generated: &PageDocument, truth: &PageDocument, first_layer: bool) -> PagePair {
    let cut = |d: &PageDocument| if first_layer { d.truncated(2) } else { d.clone() };
    PagePair { id: id.to_string(), generated: cut(generated), truth: cut(truth) }
}

/// Writes `metrics.json` and `metrics.txt` into `out`.
pub fn cmd_evaluate(generated: &Path, truth: &Path, out: &Path, first_layer: bool) -> Result<EvaluateOutcome, WorkbenchError> {
    let outcome = evaluate_dirs(generated, truth, first_layer)?;
    write_json(&out.join("metrics.json"), &outcome)?;
    let mut text = outcome.report.render_table();
    if !outcome.unmatched.is_empty() {
        text.push_str(&format!("\nNo ground truth for: {}\n", outcome.unmatched.join(", ")));
    }
    fs::write(out.join("metrics.txt"), text)?;
    Ok(outcome)
}

/// The two comparisons an ablation can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationAxis {
    /// Coarse-to-fine against one-go, scored on full trees.
    Mode,
    /// Design specifications off and on, scored on the first layer.
    Specs,
}

impl AblationAxis {
    pub fn title(self) -> &'static str {
        match self {
            AblationAxis::Mode => "Coarse-to-fine generation",
            AblationAxis::Specs => "Design specifications (first layer)",
        }
    }

    fn arms(self, base: &GenerationConfig) -> [(&'static str, GenerationConfig); 2] {
        match self {
            AblationAxis::Mode => [
                ("One-go", GenerationConfig { mode: Mode::OneGo, ..base.clone() }),
                ("Coarse-to-fine", GenerationConfig { mode: Mode::CoarseToFine, ..base.clone() }),
            ],
            AblationAxis::Specs => [
                ("w/o specifications", GenerationConfig { mode: Mode::CoarseToFine, use_design_specs: false, ..base.clone() }),
                ("w specifications", GenerationConfig { mode: Mode::CoarseToFine, use_design_specs: true, ..base.clone() }),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub row: ComparisonRow,
    /// Ids of pages whose run failed.
    pub failed_pages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisResult {
    pub axis: AblationAxis,
    pub arms: Vec<ArmResult>,
}

impl AxisResult {
    pub fn render(&self) -> String {
        let rows: Vec<ComparisonRow> = self.arms.iter().map(|a| a.row.clone()).collect();
        format!("{}\n{}", self.axis.title(), format_comparison(&rows))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub sampled: Vec<String>,
    pub axes: Vec<AxisResult>,
}

impl AblationReport {
    pub fn render(&self) -> String {
        self.axes.iter().map(AxisResult::render).collect::<Vec<_>>().join("\n")
    }
}

#[derive(Debug, Clone)]
pub struct AblationOptions {
    pub axes: Vec<AblationAxis>,
    pub sample: usize,
    pub config: GenerationConfig,
    pub jobs: usize,
    pub run_dir: Option<PathBuf>,
}

/// Runs both arms of every axis over a seeded sample of `test_pages`.
/// Pages whose run fails count against their arm and are left out of its
/// metrics.
pub fn run_ablation(
    backends: &Backends,
    index: &TemplateIndex,
    test_pages: &[(String, PageDocument)],
    opts: &AblationOptions,
) -> Result<AblationReport, WorkbenchError> {
    if test_pages.is_empty() {
        return Err(WorkbenchError::Data("no test pages to ablate".into()));
    }
    let mut sample = if test_pages.len() > opts.sample {
        sample_retrieval_pool(test_pages, opts.sample, opts.config.seed)
    } else {
        test_pages.to_vec()
    };
    sample.sort_by(|a, b| a.0.cmp(&b.0));
    let mut axes = Vec::new();
    for axis in &opts.axes {
        let mut arms = Vec::new();
        for (label, config) in axis.arms(&opts.config) {
            let requests = sample.iter().map(|(id, doc)| (id.clone(), PageRequest::Symbolic(page_to_symbolic(doc)))).collect();
            let dir = opts.run_dir.as_ref().map(|d| d.join(arm_dir(*axis, label)));
            let results = run_requests(backends, index, &config, requests, dir.as_deref(), opts.jobs)?;
            let mut pairs = Vec::new();
            let mut failed_pages = Vec::new();
            for ((id, result), (_, truth)) in results.into_iter().zip(&sample) {
                match result {
                    Ok(out) => pairs.push(pair(&id, &out.document, truth, *axis == AblationAxis::Specs)),
                    Err(_) => failed_pages.push(id),
                }
            }
            let row = match evaluate_corpus(&pairs) {
                Ok(report) => ComparisonRow::from_report(label, &report, failed_pages.len()),
                Err(_) => ComparisonRow {
                    label: label.to_string(),
                    pages: 0,
                    failures: failed_pages.len(),
                    miou: f64::NAN,
                    ali: f64::NAN,
                    ovp: f64::NAN,
                    epacc: f64::NAN,
                },
            };
            arms.push(ArmResult { row, failed_pages });
        }
        axes.push(AxisResult { axis: *axis, arms });
    }
    Ok(AblationReport { sampled: sample.into_iter().map(|(id, _)| id).collect(), axes })
}

fn arm_dir(axis: AblationAxis, label: &str) -> String {
    let slug: String = label.chars().map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { '-' }).collect();
    format!("{}-{}", serde_json::to_value(axis).expect("axis serializes").as_str().unwrap_or("axis"), slug)
}

/// Ablation over the test side of a store split, with `ablation.json` and
/// `ablation.txt` written to `opts.run_dir`.
pub fn cmd_ablate(
    backends: &Backends,
    store: &Path,
    index_path: &Path,
    opts: &AblationOptions,
) -> Result<AblationReport, WorkbenchError> {
    let index = TemplateIndex::read_jsonl(index_path)?;
    check_index(&index, backends.embedder.as_ref())?;
    let ids = match read_split(store)? {
        Some(split) => split.test,
        None => return Err(WorkbenchError::Data("store has no split; run split first".into())),
    };
    let pages = load_pages(store, &ids)?;
    let report = run_ablation(backends, &index, &pages, opts)?;
    if let Some(dir) = &opts.run_dir {
        write_json(&dir.join("ablation.json"), &report)?;
        fs::write(dir.join("ablation.txt"), report.render())?;
    }
    Ok(report)
}

pub fn cmd_render(page: &Path, out: &Path) -> Result<(), WorkbenchError> {
    let (doc, _) = read_page_file(page).map_err(|e| WorkbenchError::Data(format!("{}: {e}", page.display())))?;
    if let Some(parent) = out.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(out, render_svg(&doc))?;
    Ok(())
}
