//! The generation pipeline.
//!
//! A run moves through numbered steps: 1 parses the request into block
//! form, 2 lays out the first layer, and every step from 3 on is one
//! refinement round that walks the tree depth-first and regenerates the
//! nodes that fail [`completeness_check`]. When the whole tree passes the
//! step becomes -1 and the run ends. The counter is owned here; models
//! never see it.

mod check;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use check::{
    completeness_check, failing_nodes, is_basic, present_segments, root_requirement, subtree_complete, CheckResult,
    Criterion,
};

use crate::dsl::{
    element_inventory, element_tree, format_segment, parse_parser_envelope, serialize_symbolic, DslError, ElementNode,
    Inventory, SymbolicPage,
};
use crate::layout::{
    parse_node_json, parse_page_json, serialize_page, validate_layout, Frame, HierarchicalPath, LayoutNode,
    PageDocument, WidgetClass,
};
use crate::llm::{
    short_hash, CompletionRequest, Embedder, Gateway, LlmError, TokenUsage, DEFAULT_MAX_RETRIES, DEFAULT_TIMEOUT,
};
use crate::prompt::{
    bindings, build_design_spec_prompt, build_reference_blocks, element_content_line, fmt_num, parse_design_spec,
    render, shallow_json, valid_components, Granularity, PromptError, TemplateName, DEFAULT_K,
};
use crate::store::{retrieve_top_k, sample_retrieval_pool, ElementTemplate, RetrievalQuery, StoreError, TemplateIndex};

/// Step value that ends a run.
pub const TERMINATE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    CoarseToFine,
    OneGo,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coarse-to-fine" => Ok(Mode::CoarseToFine),
            "one-go" => Ok(Mode::OneGo),
            other => Err(format!("unknown mode {other:?} (expected coarse-to-fine or one-go)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::CoarseToFine => "coarse-to-fine",
            Mode::OneGo => "one-go",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationConfig {
    pub mode: Mode,
    pub few_shot_k: usize,
    pub use_design_specs: bool,
    /// Refinement rounds allowed before giving up.
    pub recursion_cap: u32,
    /// Reference pages sampled per run.
    pub pool_size: usize,
    pub seed: u64,
    /// Extra attempts after malformed model output.
    pub generation_retries: u32,
    #[serde(skip)]
    pub timeout: Duration,
    pub max_retries: u32,
    /// Longest prompt sent; references are dropped from the end to fit.
    pub max_prompt_chars: Option<usize>,
    /// Where step files go. Nothing is written when unset.
    pub run_dir: Option<PathBuf>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            mode: Mode::CoarseToFine,
            few_shot_k: DEFAULT_K,
            use_design_specs: true,
            recursion_cap: 8,
            pool_size: 500,
            seed: 0,
            generation_retries: 3,
            timeout: DEFAULT_TIMEOUT,
            max_retries: DEFAULT_MAX_RETRIES,
            max_prompt_chars: None,
            run_dir: None,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.recursion_cap < 1 {
            return Err(AgentError::InvalidConfig("recursion_cap must be at least 1".into()));
        }
        if self.pool_size < 1 {
            return Err(AgentError::InvalidConfig("pool_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agent {
    SemanticParser,
    TemplateRetrieval,
    DesignSpec,
    PrimaryLayout,
    RecursiveComponent,
    OneGo,
}

impl Agent {
    /// Agents whose calls produce layout.
    pub fn generates_layout(self) -> bool {
        matches!(self, Agent::PrimaryLayout | Agent::RecursiveComponent | Agent::OneGo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLog {
    pub step: i32,
    pub agent: Agent,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub attempt: u32,
    pub prompt_hash: String,
    pub response_hash: Option<String>,
    pub duration_ms: u64,
    pub usage: Option<TokenUsage>,
    pub outcome: String,
}

/// Templates handed to a prompt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalLog {
    pub step: i32,
    pub target: String,
    pub template_ids: Vec<String>,
    pub similarities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundStat {
    pub step: i32,
    /// Inventory entries absent from the document after the round.
    pub missing: usize,
    pub failing_nodes: usize,
    pub calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub mode: Mode,
    pub trace: Vec<i32>,
    pub entries: Vec<StepLog>,
    pub retrievals: Vec<RetrievalLog>,
    pub rounds: Vec<RoundStat>,
    pub warnings: Vec<String>,
    pub final_document: Option<PathBuf>,
    pub failed: bool,
    pub failure: Option<String>,
    pub failed_step: Option<i32>,
}

impl RunRecord {
    pub fn new(mode: Mode) -> Self {
        RunRecord {
            mode,
            trace: Vec::new(),
            entries: Vec::new(),
            retrievals: Vec::new(),
            rounds: Vec::new(),
            warnings: Vec::new(),
            final_document: None,
            failed: false,
            failure: None,
            failed_step: None,
        }
    }

    pub fn calls_by(&self, agent: Agent) -> usize {
        self.entries.iter().filter(|e| e.agent == agent).count()
    }

    /// Model calls that produced (or tried to produce) layout.
    pub fn generation_calls(&self) -> usize {
        self.entries.iter().filter(|e| e.agent.generates_layout()).count()
    }

    /// One line per log entry, then a summary line.
    pub fn write_jsonl(&self, path: &Path) -> std::io::Result<()> {
        let mut file = fs::File::create(path)?;
        for e in &self.entries {
            writeln!(file, "{}", serde_json::to_string(e).expect("log entries serialize"))?;
        }
        let summary = serde_json::json!({
            "summary": true,
            "mode": self.mode,
            "trace": self.trace,
            "rounds": self.rounds,
            "warnings": self.warnings,
            "final_document": self.final_document,
            "failed": self.failed,
            "failure": self.failure,
            "failed_step": self.failed_step,
        });
        writeln!(file, "{summary}")
    }
}

/// What the orchestrator passes between agents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepState {
    pub step: i32,
    pub desc_dsl_path: Option<PathBuf>,
    pub widget_temp_templates_path: Option<PathBuf>,
    pub file_save_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("parse failed: {0}")]
    ParseFailed(DslError),
    #[error("generation failed for {target}: {reason}")]
    GenerationFailed { target: String, reason: String },
    #[error("layout still incomplete after {rounds} refinement rounds")]
    RecursionCapExceeded { rounds: u32 },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("run directory: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// A failed run with everything logged up to the failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("step {step}: {error}")]
pub struct RunFailure {
    pub step: i32,
    pub error: AgentError,
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PageRequest {
    /// Free text for the parser.
    Text(String),
    /// An already parsed description; step 1 makes no model call.
    Symbolic(SymbolicPage),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub document: PageDocument,
    pub page: SymbolicPage,
    pub record: RunRecord,
}

enum Attempt {
    Retry(AgentError),
    Fatal(AgentError),
}

type Pool = Option<Arc<HashSet<String>>>;

/// Everything a run needs. Cheap to build; share the gateway and index.
pub struct Pipeline<'a> {
    gateway: &'a Gateway,
    embedder: &'a dyn Embedder,
    index: &'a TemplateIndex,
    config: GenerationConfig,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        gateway: &'a Gateway,
        embedder: &'a dyn Embedder,
        index: &'a TemplateIndex,
        config: GenerationConfig,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        Ok(Pipeline { gateway, embedder, index, config })
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }

    /// Runs every step for one page.
    pub fn orchestrate(&self, request: PageRequest) -> Result<RunOutput, RunFailure> {
        let mut record = RunRecord::new(self.config.mode);
        let mut state = StepState {
            step: 1,
            desc_dsl_path: None,
            widget_temp_templates_path: None,
            file_save_dir: self.config.run_dir.clone(),
        };
        let result = self.run(request, &mut record, &mut state);
        let result = result.and_then(|(document, page)| {
            if let Some(dir) = &self.config.run_dir {
                let path = dir.join("layout.json");
                fs::write(&path, serialize_page(&document)).map_err(|e| AgentError::Io(e.to_string()))?;
                record.final_document = Some(path);
            }
            Ok((document, page))
        });
        if let Err(e) = &result {
            record.failed = true;
            record.failure = Some(e.to_string());
            record.failed_step = Some(state.step);
        }
        if let Some(dir) = &self.config.run_dir {
            let _ = record.write_jsonl(&dir.join("run_record.jsonl"));
            let _ = self.save_retrievals(&record, &mut state);
        }
        match result {
            Ok((document, page)) => Ok(RunOutput { document, page, record }),
            Err(error) => Err(RunFailure { step: state.step, error, record }),
        }
    }

    fn run(
        &self,
        request: PageRequest,
        record: &mut RunRecord,
        state: &mut StepState,
    ) -> Result<(PageDocument, SymbolicPage), AgentError> {
        if let Some(dir) = &self.config.run_dir {
            fs::create_dir_all(dir).map_err(|e| AgentError::Io(format!("{}: {e}", dir.display())))?;
        }
        state.step = 1;
        record.trace.push(1);
        let page = match request {
            PageRequest::Text(text) => self.parse_with(&text, record)?,
            PageRequest::Symbolic(page) => {
                record.entries.push(StepLog {
                    step: 1,
                    agent: Agent::SemanticParser,
                    target: Some("inventory_input".into()),
                    attempt: 0,
                    prompt_hash: short_hash(&serialize_symbolic(&page)),
                    response_hash: None,
                    duration_ms: 0,
                    usage: None,
                    outcome: "given".into(),
                });
                page
            }
        };
        if page.is_empty() {
            return Err(AgentError::ParseFailed(DslError::NotALayoutRequest));
        }
        state.desc_dsl_path = self.save_desc(&page)?;
        let pool = self.pool();
        state.step = 2;
        record.trace.push(2);
        let document = match self.config.mode {
            Mode::OneGo => {
                let doc = self.one_go_with(&page, &pool, record)?;
                self.save_step(2, &doc)?;
                doc
            }
            Mode::CoarseToFine => {
                let doc = self.primary_with(&page, &pool, record)?;
                self.save_step(2, &doc)?;
                self.refine_with(doc, &page, &pool, record, state)?
            }
        };
        if self.config.mode == Mode::OneGo {
            record.trace.push(TERMINATE);
        }
        state.step = TERMINATE;
        Ok((document, page))
    }

    /// Reference pages for this run.
    fn pool(&self) -> Pool {
        let pages = self.index.source_pages();
        if pages.len() <= self.config.pool_size {
            return None;
        }
        let picked = sample_retrieval_pool(pages, self.config.pool_size, self.config.seed);
        Some(Arc::new(picked.into_iter().collect()))
    }

    fn style_expected(&self, class: WidgetClass) -> bool {
        self.index.style_rate(class).is_some_and(|r| r > 0.5)
    }

    fn request(&self, system: &str, user: String) -> CompletionRequest {
        CompletionRequest::new(system, user)
            .with_timeout(self.config.timeout)
            .with_max_retries(self.config.max_retries)
    }

    /// Sends a prompt, re-asking with the problem appended when the reply
    /// cannot be used.
    fn call<T>(
        &self,
        record: &mut RunRecord,
        step: i32,
        agent: Agent,
        target: Option<&str>,
        system: &str,
        user: &str,
        mut parse: impl FnMut(&str) -> Result<T, Attempt>,
    ) -> Result<T, AgentError> {
        let mut last: Option<AgentError> = None;
        for attempt in 1..=self.config.generation_retries + 1 {
            let prompt = match &last {
                None => user.to_string(),
                Some(e) => format!(
                    "{user}\n\n## Previous attempt:\n    The previous output could not be used: {e}\n    Follow the output rules exactly."
                ),
            };
            let req = self.request(system, prompt);
            let started = Instant::now();
            let outcome = self.gateway.complete(&req);
            let mut entry = StepLog {
                step,
                agent,
                target: target.map(str::to_string),
                attempt,
                prompt_hash: req.hash(),
                response_hash: None,
                duration_ms: started.elapsed().as_millis() as u64,
                usage: None,
                outcome: String::new(),
            };
            let completion = match outcome {
                Ok(c) => c,
                Err(e) => {
                    entry.outcome = format!("error:{}", e.kind());
                    record.entries.push(entry);
                    return Err(e.into());
                }
            };
            entry.response_hash = Some(short_hash(&completion.text));
            entry.usage = completion.usage;
            match parse(&completion.text) {
                Ok(v) => {
                    entry.outcome = "ok".into();
                    record.entries.push(entry);
                    return Ok(v);
                }
                Err(Attempt::Retry(e)) => {
                    entry.outcome = format!("unusable: {e}");
                    record.entries.push(entry);
                    last = Some(e);
                }
                Err(Attempt::Fatal(e)) => {
                    entry.outcome = format!("fatal: {e}");
                    record.entries.push(entry);
                    return Err(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }

    /// Step 1: free text to block form.
    pub fn run_semantic_parser(&self, text: &str, record: &mut RunRecord) -> Result<SymbolicPage, AgentError> {
        self.parse_with(text, record)
    }

    fn parse_with(&self, text: &str, record: &mut RunRecord) -> Result<SymbolicPage, AgentError> {
        if text.trim().is_empty() {
            return Err(AgentError::ParseFailed(DslError::NotALayoutRequest));
        }
        let system = render(TemplateName::Parser, &Default::default())?.text;
        let parsed = self.call(record, 1, Agent::SemanticParser, None, &system, text, |reply| {
            match parse_parser_envelope(reply) {
                Ok(p) if p.page.is_empty() => {
                    Err(Attempt::Retry(AgentError::ParseFailed(DslError::Envelope("no blocks in nl_input".into()))))
                }
                Ok(p) => Ok(p),
                Err(DslError::NotALayoutRequest) => {
                    Err(Attempt::Fatal(AgentError::ParseFailed(DslError::NotALayoutRequest)))
                }
                Err(e) => Err(Attempt::Retry(AgentError::ParseFailed(e))),
            }
        })?;
        record.warnings.extend(parsed.warnings.iter().map(|w| format!("parser: {w}")));
        Ok(parsed.page)
    }

    fn retrieve(
        &self,
        query: RetrievalQuery,
        step: i32,
        target: &str,
        pool: &Pool,
        record: &mut RunRecord,
    ) -> Result<Vec<&'a ElementTemplate>, AgentError> {
        let query = match pool {
            Some(p) => query.within(Arc::clone(p)),
            None => query,
        };
        let started = Instant::now();
        let scored = retrieve_top_k(self.index, &query, self.config.few_shot_k, self.embedder)?;
        let ids: Vec<String> = scored.iter().map(|s| s.template.id.clone()).collect();
        record.entries.push(StepLog {
            step,
            agent: Agent::TemplateRetrieval,
            target: Some(target.to_string()),
            attempt: 1,
            prompt_hash: short_hash(&query.text),
            response_hash: Some(short_hash(&ids.join(","))),
            duration_ms: started.elapsed().as_millis() as u64,
            usage: None,
            outcome: format!("ok:{}", ids.len()),
        });
        record.retrievals.push(RetrievalLog {
            step,
            target: target.to_string(),
            template_ids: ids,
            similarities: scored.iter().map(|s| s.similarity).collect(),
        });
        Ok(scored.into_iter().map(|s| s.template).collect())
    }

    /// Renders with as many references as fit the prompt budget.
    fn fit(
        &self,
        refs: &[&ElementTemplate],
        record: &mut RunRecord,
        build: impl Fn(&[&ElementTemplate]) -> Result<String, PromptError>,
    ) -> Result<String, AgentError> {
        let mut n = refs.len();
        loop {
            let text = build(&refs[..n])?;
            let fits = self.config.max_prompt_chars.is_none_or(|m| text.chars().count() <= m);
            if fits || n == 0 {
                if n < refs.len() {
                    record.warnings.push(format!(
                        "prompt budget: kept {n} of {} references",
                        refs.len()
                    ));
                }
                return Ok(text);
            }
            n -= 1;
        }
    }

    /// Summarises the references as question/answer design notes. A reply
    /// without any pairs only warns.
    fn design_spec(&self, refs: &[&ElementTemplate], step: i32, record: &mut RunRecord) -> Result<Option<String>, AgentError> {
        if !self.config.use_design_specs || refs.is_empty() {
            return Ok(None);
        }
        let prompt = build_design_spec_prompt(refs)?.text;
        let result = self.call(record, step, Agent::DesignSpec, None, "", &prompt, |reply| {
            parse_design_spec(reply).map_err(|e| Attempt::Retry(e.into()))
        });
        match result {
            Ok(spec) => Ok(Some(spec.render())),
            Err(AgentError::Prompt(e)) => {
                record.warnings.push(format!("design specification skipped: {e}"));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn constraint_with_spec(page: &SymbolicPage, spec: Option<String>) -> String {
        match spec {
            None => page.constraint.clone(),
            Some(spec) => {
                let indented = spec.lines().map(|l| format!("        {l}")).collect::<Vec<_>>().join("\n");
                format!("{}\n    # Design specifications:\n{indented}", page.constraint)
            }
        }
    }

    /// Step 2: the first layer.
    pub fn run_primary_layout(&self, page: &SymbolicPage, record: &mut RunRecord) -> Result<PageDocument, AgentError> {
        self.primary_with(page, &self.pool(), record)
    }

    fn primary_with(&self, page: &SymbolicPage, pool: &Pool, record: &mut RunRecord) -> Result<PageDocument, AgentError> {
        let tree = element_tree(page);
        let first = tree.first_layer_list();
        let refs = self.retrieve(RetrievalQuery::page(&first), 2, "artboard", pool, record)?;
        let spec = self.design_spec(&refs, 2, record)?;
        let constraint = Self::constraint_with_spec(page, spec);
        let content = serialize_symbolic(page);
        let count = tree.roots.len().to_string();
        let user = self.fit(&refs, record, |rs| {
            Ok(render(
                TemplateName::Layout,
                &bindings([
                    ("valid_components", valid_components()),
                    ("ref_layouts", build_reference_blocks(rs, Granularity::FirstLayer)?),
                    ("page_content", content.clone()),
                    ("input_elements", first.clone()),
                    ("input_elements_num", count.clone()),
                    ("layout_constraint", constraint.clone()),
                ]),
            )?
            .text)
        })?;
        let parsed = self.call(record, 2, Agent::PrimaryLayout, Some("artboard"), "", &user, |reply| {
            parse_page_json(reply).map_err(|e| {
                Attempt::Retry(AgentError::GenerationFailed { target: "artboard".into(), reason: e.to_string() })
            })
        })?;
        record.warnings.extend(parsed.warnings.iter().map(|w| format!("step 2: {w}")));
        let doc = parsed.document;
        let got = doc.root().layers.len();
        if got != tree.roots.len() {
            record.warnings.push(format!("step 2: first layer has {got} elements, expected {}", tree.roots.len()));
        }
        let strict = validate_layout(doc.root(), &Frame::canvas(), true);
        record.warnings.extend(strict.violations.iter().map(|v| format!("step 2: {v}")));
        Ok(doc)
    }

    /// Steps 3 and on: refinement rounds until the tree passes.
    pub fn run_recursive_refinement(
        &self,
        doc: PageDocument,
        page: &SymbolicPage,
        record: &mut RunRecord,
    ) -> Result<PageDocument, AgentError> {
        let mut state = StepState {
            step: 3,
            desc_dsl_path: None,
            widget_temp_templates_path: None,
            file_save_dir: self.config.run_dir.clone(),
        };
        self.refine_with(doc, page, &self.pool(), record, &mut state)
    }

    fn refine_with(
        &self,
        mut doc: PageDocument,
        page: &SymbolicPage,
        pool: &Pool,
        record: &mut RunRecord,
        state: &mut StepState,
    ) -> Result<PageDocument, AgentError> {
        let tree = element_tree(page);
        let root_req = root_requirement(&tree);
        let inventory = element_inventory(page);
        let style = |c: WidgetClass| self.style_expected(c);
        let mut frozen: HashSet<HierarchicalPath> = HashSet::new();
        let mut step = 3;
        for _ in 0..self.config.recursion_cap {
            state.step = step;
            record.trace.push(step);
            let calls_before = record.generation_calls();
            let mut root = doc.into_root();
            let mut round = Round { step, pool, record: &mut *record, frozen: &mut frozen };
            self.refine_node(&mut root, &HierarchicalPath::root(), None, Some(&root_req), &mut round)?;
            doc = PageDocument::new(root).map_err(|e| AgentError::GenerationFailed {
                target: "artboard".into(),
                reason: e.to_string(),
            })?;
            self.save_step(step, &doc)?;
            let complete = subtree_complete(doc.root(), Some(&root_req), None, &style);
            record.rounds.push(RoundStat {
                step,
                missing: missing_count(&inventory, &doc),
                failing_nodes: failing_nodes(doc.root(), Some(&root_req), None, &style),
                calls: record.generation_calls() - calls_before,
            });
            if complete {
                record.trace.push(TERMINATE);
                state.step = TERMINATE;
                return Ok(doc);
            }
            step += 1;
        }
        Err(AgentError::RecursionCapExceeded { rounds: self.config.recursion_cap })
    }

    fn refine_node(
        &self,
        node: &mut LayoutNode,
        path: &HierarchicalPath,
        parent: Option<Frame>,
        required: Option<&ElementNode>,
        round: &mut Round<'_, '_>,
    ) -> Result<(), AgentError> {
        let style = |c: WidgetClass| self.style_expected(c);
        if subtree_complete(node, required, parent.as_ref(), &style) {
            return Ok(());
        }
        let check = completeness_check(node, required, parent.as_ref(), style(node.class));
        if !check.is_pass() && !round.frozen.contains(path) {
            if check.failed != [Criterion::Position] {
                match self.regenerate(node, path, parent, required, &check, round) {
                    Ok(()) => {}
                    Err(e @ AgentError::GenerationFailed { .. }) => {
                        round.record.warnings.push(format!("step {}: {e}; node frozen", round.step));
                        round.frozen.insert(path.clone());
                    }
                    Err(e) => return Err(e),
                }
            }
            if check.fails(Criterion::Position) {
                if let Some(p) = parent {
                    clamp_into(node, &p);
                }
            }
            return Ok(());
        }
        let frame = node.frame;
        let segments = present_segments(node);
        for (child, seg) in node.layers.iter_mut().zip(segments) {
            let req = required.and_then(|r| r.children.iter().find(|c| c.segment == seg));
            self.refine_node(child, &path.child(seg.class, seg.index), Some(frame), req, round)?;
        }
        Ok(())
    }

    /// Asks for the node's content in its own coordinates and splices the
    /// reply in.
    fn regenerate(
        &self,
        node: &mut LayoutNode,
        path: &HierarchicalPath,
        parent: Option<Frame>,
        required: Option<&ElementNode>,
        check: &CheckResult,
        round: &mut Round<'_, '_>,
    ) -> Result<(), AgentError> {
        let class = node.class;
        let target = path.to_string();
        let parent_path = path.parent().unwrap_or_else(HierarchicalPath::empty);
        let value = required.and_then(|r| r.value.clone()).or_else(|| node.value().map(str::to_string));
        let query = RetrievalQuery::element(&parent_path, class, value.as_deref());
        let refs = self.retrieve(query, round.step, &target, round.pool, round.record)?;
        let (w, h) = if check.fails(Criterion::Size) {
            refs.iter()
                .map(|t| (t.attributes.width, t.attributes.height))
                .find(|(w, h)| *w > 0.0 && *h > 0.0)
                .or_else(|| parent.map(|p| (p.w, p.h)))
                .unwrap_or((Frame::canvas().w, Frame::canvas().h))
        } else {
            (node.frame.w, node.frame.h)
        };
        let mut local = node.truncated(1);
        local.frame = Frame::new(0.0, 0.0, w, h);
        let children = required.map(|r| r.child_lines().join("\n")).unwrap_or_default();
        let content = element_content_line(class, value.as_deref(), &children);
        let user = self.fit(&refs, round.record, |rs| {
            Ok(render(
                TemplateName::Element,
                &bindings([
                    ("_class", class.label().to_string()),
                    ("width", fmt_num(w)),
                    ("height", fmt_num(h)),
                    ("element_layout", shallow_json(&local)),
                    ("element_content", content.clone()),
                    ("ref_elements", build_reference_blocks(rs, Granularity::Element)?),
                    ("valid_components", valid_components()),
                ]),
            )?
            .text)
        })?;
        let local_frame = Frame::new(0.0, 0.0, w, h);
        let parsed = self.call(round.record, round.step, Agent::RecursiveComponent, Some(&target), "", &user, |reply| {
            parse_node_json(reply, &local_frame).map_err(|e| {
                Attempt::Retry(AgentError::GenerationFailed { target: target.clone(), reason: e.to_string() })
            })
        })?;
        round.record.warnings.extend(parsed.warnings.iter().map(|w| format!("step {} {target}: {w}", round.step)));
        splice(node, parsed.node, check, (w, h), value);
        Ok(())
    }

    /// The whole tree from one prompt.
    pub fn one_go_generate(&self, page: &SymbolicPage, record: &mut RunRecord) -> Result<PageDocument, AgentError> {
        self.one_go_with(page, &self.pool(), record)
    }

    fn one_go_with(&self, page: &SymbolicPage, pool: &Pool, record: &mut RunRecord) -> Result<PageDocument, AgentError> {
        let tree = element_tree(page);
        let inventory = element_inventory(page);
        let refs = self.retrieve(RetrievalQuery::page(&tree.first_layer_list()), 2, "artboard", pool, record)?;
        let spec = self.design_spec(&refs, 2, record)?;
        let constraint = Self::constraint_with_spec(page, spec);
        let content = serialize_symbolic(page);
        let lines = inventory_lines(&inventory);
        let count = inventory.count().to_string();
        let user = self.fit(&refs, record, |rs| {
            Ok(render(
                TemplateName::OneGo,
                &bindings([
                    ("valid_components", valid_components()),
                    ("ref_layouts", build_reference_blocks(rs, Granularity::FullPage)?),
                    ("page_content", content.clone()),
                    ("input_elements", lines.clone()),
                    ("input_elements_num", count.clone()),
                    ("layout_constraint", constraint.clone()),
                ]),
            )?
            .text)
        })?;
        let failed = |reason: String| Attempt::Retry(AgentError::GenerationFailed { target: "artboard".into(), reason });
        let parsed = self.call(record, 2, Agent::OneGo, Some("artboard"), "", &user, |reply| {
            let parsed = parse_page_json(reply).map_err(|e| failed(e.to_string()))?;
            let missing = inventory.missing_in(&parsed.document);
            if let Some(first) = missing.first() {
                return Err(failed(format!(
                    "{} required elements missing, starting with {}",
                    missing.len(),
                    inventory.entries[*first].path
                )));
            }
            Ok(parsed)
        })?;
        record.warnings.extend(parsed.warnings.iter().map(|w| format!("step 2: {w}")));
        Ok(parsed.document)
    }

    fn save_desc(&self, page: &SymbolicPage) -> Result<Option<PathBuf>, AgentError> {
        let inventory = element_inventory(page);
        let value = serde_json::json!({
            "dsl": serialize_symbolic(page),
            "constraint": page.constraint,
            "inventory": inventory.entries,
        });
        self.save("desc_dsl.json", &serde_json::to_string_pretty(&value).expect("json values serialize"))
    }

    fn save_step(&self, step: i32, doc: &PageDocument) -> Result<Option<PathBuf>, AgentError> {
        self.save(&format!("layout_step_{step}.json"), &serialize_page(doc))
    }

    fn save_retrievals(&self, record: &RunRecord, state: &mut StepState) -> Result<(), AgentError> {
        let text = serde_json::to_string_pretty(&record.retrievals).expect("retrieval logs serialize");
        state.widget_temp_templates_path = self.save("widget_temp_templates.json", &text)?;
        Ok(())
    }

    fn save(&self, name: &str, text: &str) -> Result<Option<PathBuf>, AgentError> {
        let Some(dir) = &self.config.run_dir else { return Ok(None) };
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| AgentError::Io(format!("{}: {e}", path.display())))?;
        Ok(Some(path))
    }
}

struct Round<'r, 'p> {
    step: i32,
    pool: &'p Pool,
    record: &'r mut RunRecord,
    frozen: &'r mut HashSet<HierarchicalPath>,
}

fn missing_count(inventory: &Inventory, doc: &PageDocument) -> usize {
    inventory.missing_in(doc).len()
}

/// Every inventory entry as a full path line, e.g.
/// `[Toolbar]1->[Text]1->"Explore"`.
pub fn inventory_lines(inventory: &Inventory) -> String {
    inventory
        .entries
        .iter()
        .map(|e| {
            let mut line =
                e.path.segments().iter().skip(1).map(format_segment).collect::<Vec<_>>().join("->");
            if let Some(v) = &e.value {
                line.push_str(&format!("->\"{v}\""));
            }
            line
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Splits required elements into leaves and containers.
pub fn classify_elements(page: &SymbolicPage) -> (Vec<HierarchicalPath>, Vec<HierarchicalPath>) {
    element_inventory(page).entries.into_iter().map(|e| e.path).partition(|p| {
        p.last().is_some_and(|s| is_basic(s.class))
    })
}

/// Moves (and if needed shrinks) a node so it sits inside `parent`,
/// carrying its subtree along.
fn clamp_into(node: &mut LayoutNode, parent: &Frame) {
    let w = node.frame.w.min(parent.w);
    let h = node.frame.h.min(parent.h);
    let x = node.frame.x.clamp(parent.x, parent.right() - w);
    let y = node.frame.y.clamp(parent.y, parent.bottom() - h);
    let (dx, dy) = (x - node.frame.x, y - node.frame.y);
    node.translate(dx, dy);
    node.frame.w = w;
    node.frame.h = h;
}

fn strip_artboards(node: &mut LayoutNode) {
    node.layers.retain(|c| c.class != WidgetClass::Artboard);
    for c in &mut node.layers {
        strip_artboards(c);
    }
}

/// Applies a generated sub-layout (in the node's local frame) to `node`.
fn splice(node: &mut LayoutNode, generated: LayoutNode, check: &CheckResult, size: (f64, f64), value: Option<String>) {
    let same = generated.class == node.class;
    let (gen_frame, gen_string, gen_style, mut gen_children) = if same {
        (Some(generated.frame), generated.string, generated.style, generated.layers)
    } else {
        (None, None, Default::default(), vec![generated])
    };
    if check.fails(Criterion::Size) {
        let (w, h) = gen_frame.filter(|f| f.w > 0.0 && f.h > 0.0).map_or(size, |f| (f.w, f.h));
        node.frame.w = w;
        node.frame.h = h;
    }
    if check.fails(Criterion::Text) {
        node.string = gen_string.filter(|s| !s.trim().is_empty()).or(value).or(node.string.take());
    }
    if check.fails(Criterion::Style) && !gen_style.is_empty() {
        node.style = gen_style;
    }
    if check.fails(Criterion::Structure) {
        let (ox, oy) = gen_frame.map_or((0.0, 0.0), |f| (f.x, f.y));
        let (dx, dy) = (node.frame.x - ox, node.frame.y - oy);
        let present = present_segments(node);
        gen_children.retain(|c| c.class != WidgetClass::Artboard);
        let probe = LayoutNode { layers: gen_children, ..LayoutNode::new(node.class, node.frame) };
        let segments = present_segments(&probe);
        for (mut child, seg) in probe.layers.into_iter().zip(segments) {
            if present.contains(&seg) {
                continue;
            }
            strip_artboards(&mut child);
            child.translate(dx, dy);
            node.layers.push(child);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_keeps_subtree_relative() {
        let mut n = LayoutNode::new(WidgetClass::Card, Frame::new(1400.0, 10.0, 100.0, 50.0))
            .with_child(LayoutNode::new(WidgetClass::Text, Frame::new(1410.0, 20.0, 10.0, 10.0)));
        clamp_into(&mut n, &Frame::canvas());
        assert_eq!(n.frame, Frame::new(1340.0, 10.0, 100.0, 50.0));
        assert_eq!(n.layers[0].frame.x, 1350.0);
    }

    #[test]
    fn splice_translates_local_children() {
        let mut toolbar = LayoutNode::new(WidgetClass::Toolbar, Frame::new(0.0, 300.0, 1440.0, 200.0));
        let generated = LayoutNode::new(WidgetClass::Toolbar, Frame::new(0.0, 0.0, 1440.0, 200.0))
            .with_child(LayoutNode::new(WidgetClass::TextButton, Frame::new(20.0, 50.0, 100.0, 60.0)));
        let check = CheckResult { failed: vec![Criterion::Structure] };
        splice(&mut toolbar, generated, &check, (1440.0, 200.0), None);
        assert_eq!(toolbar.layers[0].frame, Frame::new(20.0, 350.0, 100.0, 60.0));
    }

    #[test]
    fn splice_keeps_existing_children() {
        let mut card = LayoutNode::new(WidgetClass::Card, Frame::new(0.0, 0.0, 500.0, 500.0))
            .with_child(LayoutNode::new(WidgetClass::Image, Frame::new(1.0, 1.0, 10.0, 10.0)));
        let generated = LayoutNode::new(WidgetClass::Card, Frame::new(0.0, 0.0, 500.0, 500.0))
            .with_child(LayoutNode::new(WidgetClass::Image, Frame::new(5.0, 5.0, 10.0, 10.0)))
            .with_child(LayoutNode::new(WidgetClass::Text, Frame::new(5.0, 50.0, 10.0, 10.0)).with_string("t"));
        splice(&mut card, generated, &CheckResult { failed: vec![Criterion::Structure] }, (500.0, 500.0), None);
        assert_eq!(card.layers.len(), 2);
        assert_eq!(card.layers[0].frame.x, 1.0);
        assert_eq!(card.layers[1].class, WidgetClass::Text);
    }

    #[test]
    fn classify_splits_by_class() {
        let page = crate::dsl::parse_symbolic("1. [Toolbar]1 contains:\n[Text]1->\"A\"\n[Icon]1").unwrap().page;
        let (basic, composite) = classify_elements(&page);
        assert_eq!(basic.len(), 2);
        assert_eq!(composite.len(), 1);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("one-go".parse::<Mode>().unwrap(), Mode::OneGo);
        assert!("fast".parse::<Mode>().is_err());
    }
}
