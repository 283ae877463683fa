//! The command-line workflow end to end in a temporary directory:
//! ingest, split, build-index, generate, evaluate and render.

use pagesmith::layout::serialize_page;
use pagesmith::synthetic::synthetic_corpus;
use pagesmith::workbench::main_with_args;

fn step(args: &[&str]) {
    println!("\n$ pagesmith {}", args.join(" "));
    let code = main_with_args(std::iter::once("pagesmith").chain(args.iter().copied()));
    assert_eq!(code, 0, "step failed");
}

fn main() {
    let root = std::env::temp_dir().join(format!("pagesmith-workbench-{}", std::process::id()));
    let src = root.join("src");
    std::fs::create_dir_all(&src).expect("temp dir");
    for (id, doc) in synthetic_corpus(40, 6) {
        std::fs::write(src.join(format!("{id}.json")), serialize_page(&doc)).expect("write page");
    }
    let p = |rel: &str| root.join(rel).to_string_lossy().into_owned();

    step(&["ingest", "--src", &p("src"), "--store", &p("store")]);
    step(&["split", "--store", &p("store"), "--seed", "1"]);
    step(&["build-index", "--store", &p("store")]);
    step(&[
        "generate", "--index", &p("store/index.jsonl"), "--store", &p("store"), "--test-set", "--run-dir", &p("run"),
        "--backend", "synthetic", "--jobs", "2", "--svg",
    ]);
    step(&["evaluate", "--generated", &p("run/generated"), "--truth", &p("store/pages"), "--out", &p("eval")]);
    step(&["render", "--page", &p("store/pages/page-00001.json"), "--out", &p("page-00001.svg")]);
    println!("\nartifacts under {}", root.display());
}
