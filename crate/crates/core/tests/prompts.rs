//! Golden copies of the prompts the pipeline sends for a fixed page.
//! Set `PAGESMITH_UPDATE_SNAPSHOTS=1` to rewrite them.

mod common;

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use pagesmith::agents::{GenerationConfig, Mode, PageRequest, Pipeline};
use pagesmith::dsl::page_to_symbolic;
use pagesmith::llm::{CompletionBackend, CompletionRequest};
use pagesmith::prompt::{render, Bindings, PromptError, TemplateName};
use pagesmith::synthetic::{describe_request, PromptKind, SyntheticDesigner};

fn snapshot_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots")
}

fn assert_snapshot(name: &str, actual: &str) {
    let path = snapshot_dir().join(name);
    if std::env::var_os("PAGESMITH_UPDATE_SNAPSHOTS").is_some() {
        std::fs::create_dir_all(snapshot_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing snapshot {}; rerun with PAGESMITH_UPDATE_SNAPSHOTS=1", path.display()));
    if expected != actual {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).unwrap_or(0);
        panic!(
            "{name} differs at line {}:\n  expected: {:?}\n  actual:   {:?}",
            line + 1,
            expected.lines().nth(line),
            actual.lines().nth(line)
        );
    }
}

fn recorded_prompts(config: GenerationConfig) -> Vec<CompletionRequest> {
    let (index, embedder, tests) = common::synthetic_setup(20, 1, 21);
    let log = Arc::new(Mutex::new(Vec::new()));
    let sink = Arc::clone(&log);
    let gw = common::gateway(move |r: &CompletionRequest| {
        sink.lock().unwrap().push(r.clone());
        SyntheticDesigner.complete(r)
    });
    let pipeline = Pipeline::new(&gw, &embedder, &index, config).unwrap();
    pipeline.orchestrate(PageRequest::Symbolic(page_to_symbolic(&tests[0].1))).unwrap();
    let prompts = log.lock().unwrap().clone();
    prompts
}

fn first_of(prompts: &[CompletionRequest], kind: PromptKind) -> &CompletionRequest {
    prompts.iter().find(|r| describe_request(r) == Some(kind)).unwrap_or_else(|| panic!("no {kind:?} prompt sent"))
}

#[test]
fn coarse_to_fine_prompts() {
    let prompts = recorded_prompts(GenerationConfig::default());
    assert_snapshot("design_spec.txt", &first_of(&prompts, PromptKind::DesignSpec).user_message);
    assert_snapshot("layout.txt", &first_of(&prompts, PromptKind::Layout).user_message);
    assert_snapshot("element.txt", &first_of(&prompts, PromptKind::Element).user_message);
    for r in &prompts {
        assert!(r.system_message.is_empty(), "worker prompts carry no system message");
    }
}

#[test]
fn one_go_prompt() {
    let config = GenerationConfig { mode: Mode::OneGo, use_design_specs: false, ..Default::default() };
    let prompts = recorded_prompts(config);
    assert_eq!(prompts.len(), 1);
    assert_snapshot("one_go.txt", &prompts[0].user_message);
}

#[test]
fn prompts_are_reproducible() {
    let a = recorded_prompts(GenerationConfig::default());
    let b = recorded_prompts(GenerationConfig::default());
    assert_eq!(a, b);
}

#[test]
fn rendering_leaves_no_declared_placeholder() {
    for t in TemplateName::ALL {
        let values: Bindings = t.placeholders().iter().map(|p| (p.to_string(), format!("<{p}>"))).collect();
        let r = render(t, &values).unwrap();
        for p in t.placeholders() {
            assert!(!r.text.contains(&format!("[{p}]")), "{t} still has [{p}]");
            assert!(r.text.contains(&format!("<{p}>")), "{t} dropped {p}");
        }
        assert!(r.warnings.is_empty(), "{t}: {:?}", r.warnings);
    }
}

#[test]
fn missing_binding_is_reported() {
    let err = render(TemplateName::Layout, &Bindings::new()).unwrap_err();
    match err {
        PromptError::MissingBinding { template, names } => {
            assert_eq!(template, TemplateName::Layout);
            assert_eq!(names.len(), TemplateName::Layout.placeholders().len());
        }
        other => panic!("unexpected {other:?}"),
    }
}
