use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::*;
use crate::llm::mock::HashEmbedder;

#[derive(Debug, Parser)]
#[command(name = "pagesmith", version, about = "Retrieval-augmented page layout generation and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a directory of page JSON files into a template store.
    Ingest {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        store: PathBuf,
    },
    /// Split store pages into reference and test sets.
    Split {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SPLIT_RATIO)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Embed the reference pages into a retrieval index.
    BuildIndex {
        #[arg(long)]
        store: PathBuf,
        /// Defaults to `<store>/index.jsonl`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        embedder: EmbedderArgs,
    },
    /// Generate one or more pages.
    Generate {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        store: Option<PathBuf>,
        /// Free-text page description.
        #[arg(long, group = "input")]
        description: Option<String>,
        /// File holding an element inventory in the symbolic language.
        #[arg(long, group = "input")]
        from_inventory: Option<PathBuf>,
        /// Store page id; repeatable.
        #[arg(long = "page", group = "input")]
        pages: Vec<String>,
        /// Every page on the test side of the split.
        #[arg(long, group = "input")]
        test_set: bool,
        #[arg(long)]
        run_dir: PathBuf,
        /// Also render each page as SVG.
        #[arg(long)]
        svg: bool,
        #[command(flatten)]
        gen: GenerationArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        embedder: EmbedderArgs,
    },
    /// Score generated pages against ground truth.
    Evaluate {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Compare only the artboard and its direct children.
        #[arg(long)]
        first_layer: bool,
    },
    /// Compare generation modes and the design-specification toggle.
    Ablate {
        #[arg(long)]
        store: PathBuf,
        /// Defaults to `<store>/index.jsonl`.
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = AxisArg::Both)]
        axis: AxisArg,
        #[arg(long, default_value_t = DEFAULT_ABLATION_SAMPLE)]
        sample: usize,
        #[command(flatten)]
        gen: GenerationArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        embedder: EmbedderArgs,
    },
    /// Draw a page as an SVG wireframe.
    Render {
        #[arg(long)]
        page: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Mode,
    Specs,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    CoarseToFine,
    OneGo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Http,
    Scripted,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedderKind {
    Hash,
    Http,
}

#[derive(Debug, Clone, Args)]
pub struct GenerationArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::CoarseToFine)]
    mode: ModeArg,
    #[arg(long)]
    no_design_specs: bool,
    /// Few-shot exemplars per prompt.
    #[arg(long, default_value_t = crate::prompt::DEFAULT_K)]
    k: usize,
    /// Reference pages sampled per generated page.
    #[arg(long, default_value_t = 500)]
    pool_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    recursion_cap: u32,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    /// Pages generated in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl GenerationArgs {
    fn config(&self) -> GenerationConfig {
        GenerationConfig {
            mode: match self.mode {
                ModeArg::CoarseToFine => Mode::CoarseToFine,
                ModeArg::OneGo => Mode::OneGo,
            },
            few_shot_k: self.k,
            use_design_specs: !self.no_design_specs,
            recursion_cap: self.recursion_cap,
            pool_size: self.pool_size,
            seed: self.seed,
            timeout: Duration::from_secs(self.timeout),
            max_retries: self.max_retries,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendKind::Http)]
    backend: BackendKind,
    /// Response fixture for the scripted backend.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Chat-completions base URL.
    #[arg(long, env = "PAGESMITH_ENDPOINT")]
    endpoint: Option<String>,
    #[arg(long, env = "PAGESMITH_MODEL", default_value = "gpt-4o")]
    model: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "PAGESMITH_API_KEY")]
    api_key_env: String,
}

impl BackendArgs {
    fn http_config(&self) -> Result<BackendConfig, WorkbenchError> {
        let endpoint = self
            .endpoint
            .clone()
            .ok_or_else(|| WorkbenchError::Usage("the http backend needs --endpoint or PAGESMITH_ENDPOINT".into()))?;
        Ok(BackendConfig::new(endpoint, self.model.clone()).with_api_key_env(self.api_key_env.clone()))
    }

    fn choice(&self) -> Result<BackendChoice, WorkbenchError> {
        match self.backend {
            BackendKind::Http => Ok(BackendChoice::Http(self.http_config()?)),
            BackendKind::Scripted => self
                .script
                .clone()
                .map(BackendChoice::Scripted)
                .ok_or_else(|| WorkbenchError::Usage("--backend scripted needs --script <fixture>".into())),
            BackendKind::Synthetic => Ok(BackendChoice::Synthetic),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EmbedderArgs {
    #[arg(long, value_enum, default_value_t = EmbedderKind::Hash)]
    embedder: EmbedderKind,
    #[arg(long, default_value_t = HashEmbedder::DEFAULT_DIMENSION)]
    embed_dim: usize,
    #[arg(long, env = "PAGESMITH_EMBED_ENDPOINT")]
    embed_endpoint: Option<String>,
    #[arg(long, default_value = "text-embedding-3-small")]
    embed_model: String,
    #[arg(long, default_value = "PAGESMITH_API_KEY")]
    embed_api_key_env: String,
}

impl EmbedderArgs {
    fn choice(&self) -> Result<EmbedderChoice, WorkbenchError> {
        if self.embed_dim == 0 {
            return Err(WorkbenchError::Usage("--embed-dim must be positive".into()));
        }
        match self.embedder {
            EmbedderKind::Hash => Ok(EmbedderChoice::Hash(self.embed_dim)),
            EmbedderKind::Http => {
                let endpoint = self.embed_endpoint.clone().ok_or_else(|| {
                    WorkbenchError::Usage("--embedder http needs --embed-endpoint or PAGESMITH_EMBED_ENDPOINT".into())
                })?;
                let config = BackendConfig::new(endpoint, self.embed_model.clone()).with_api_key_env(self.embed_api_key_env.clone());
                Ok(EmbedderChoice::Http(config, self.embed_dim))
            }
        }
    }
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("values serialize"));
}

fn manifest(command: &str, args: &[String], seed: Option<u64>, backend: Option<&BackendChoice>) -> Manifest {
    let mut m = Manifest::new(command, args);
    m.seed = seed;
    if let Some(b) = backend {
        m.backend = Some(b.name().to_string());
        if let BackendChoice::Http(config) = b {
            m = m.setting("endpoint", &config.endpoint).setting("model", &config.model);
        }
    }
    m
}

fn run(cli: Cli, args: &[String]) -> Result<i32, WorkbenchError> {
    match cli.command {
        Command::Ingest { src, store } => {
            let summary = cmd_ingest(&src, &store)?;
            manifest("ingest", args, None, None).write(&store)?;
            print_json(&summary);
            Ok(0)
        }
        Command::Split { store, ratio, seed } => {
            let split = cmd_split(&store, ratio, seed)?;
            println!("reference {} test {}", split.reference.len(), split.test.len());
            Ok(0)
        }
        Command::BuildIndex { store, out, embedder } => {
            let out = out.unwrap_or_else(|| store.join(store_files::INDEX));
            let provenance = cmd_build_index(&store, &out, &embedder.choice()?)?;
            print_json(&provenance);
            Ok(0)
        }
        Command::Generate { index, store, description, from_inventory, pages, test_set, run_dir, svg, gen, backend, embedder } => {
            let input = match (description, from_inventory, pages.is_empty(), test_set) {
                (Some(d), None, true, false) => GenerateInput::Description(d),
                (None, Some(p), true, false) => GenerateInput::Inventory(p),
                (None, None, false, false) => GenerateInput::Pages(pages),
                (None, None, true, true) => GenerateInput::TestSet,
                _ => {
                    return Err(WorkbenchError::Usage(
                        "give exactly one of --description, --from-inventory, --page or --test-set".into(),
                    ))
                }
            };
            let choice = backend.choice()?;
            let backends = Backends::new(&choice, &embedder.choice()?, gen.jobs.max(1) * 4)?;
            let config = gen.config();
            let opts = GenerateOptions { index, store, input, run_dir: run_dir.clone(), config: config.clone(), jobs: gen.jobs, svg };
            let summary = cmd_generate(&backends, &opts)?;
            manifest("generate", args, Some(config.seed), Some(&choice))
                .setting("mode", config.mode.to_string())
                .setting("design_specs", config.use_design_specs)
                .setting("k", config.few_shot_k)
                .setting("pool_size", config.pool_size)
                .write(&run_dir)?;
            print_json(&summary);
            Ok(summary.exit_code())
        }
        Command::Evaluate { generated, truth, out, first_layer } => {
            let outcome = cmd_evaluate(&generated, &truth, &out, first_layer)?;
            manifest("evaluate", args, None, None).write(&out)?;
            print!("{}", outcome.report.render_table());
            if !outcome.unmatched.is_empty() {
                eprintln!("no ground truth for: {}", outcome.unmatched.join(", "));
            }
            Ok(0)
        }
        Command::Ablate { store, index, run_dir, axis, sample, gen, backend, embedder } => {
            let choice = backend.choice()?;
            let backends = Backends::new(&choice, &embedder.choice()?, gen.jobs.max(1) * 4)?;
            let axes = match axis {
                AxisArg::Mode => vec![AblationAxis::Mode],
                AxisArg::Specs => vec![AblationAxis::Specs],
                AxisArg::Both => vec![AblationAxis::Mode, AblationAxis::Specs],
            };
            let config = gen.config();
            let opts = AblationOptions { axes, sample, config: config.clone(), jobs: gen.jobs, run_dir: Some(run_dir.clone()) };
            let index = index.unwrap_or_else(|| store.join(store_files::INDEX));
            let report = cmd_ablate(&backends, &store, &index, &opts)?;
            manifest("ablate", args, Some(config.seed), Some(&choice)).setting("sample", sample).write(&run_dir)?;
            print!("{}", report.render());
            Ok(0)
        }
        Command::Render { page, out } => {
            cmd_render(&page, &out)?;
            Ok(0)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let printable: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, &printable) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
