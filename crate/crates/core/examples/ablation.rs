//! Compare one-go against coarse-to-fine generation, and layouts with and
//! without design specifications, on a small synthetic test set.

use pagesmith::agents::GenerationConfig;
use pagesmith::llm::mock::HashEmbedder;
use pagesmith::llm::Gateway;
use pagesmith::store::{dedup, ingest_pages, page_exemplars, Provenance, TemplateIndex};
use pagesmith::synthetic::{synthetic_corpus, SyntheticDesigner};
use pagesmith::workbench::{run_ablation, AblationAxis, AblationOptions, Backends};

fn main() {
    let corpus = synthetic_corpus(60, 8);
    let (refs, tests) = corpus.split_at(48);
    let embedder = HashEmbedder::default();
    let index = TemplateIndex::build(dedup(ingest_pages(refs)), page_exemplars(refs), &embedder, Provenance::default())
        .expect("index");
    let backends = Backends {
        gateway: Gateway::new(std::sync::Arc::new(SyntheticDesigner)),
        embedder: Box::new(embedder),
        label: "synthetic".into(),
    };
    let opts = AblationOptions {
        axes: vec![AblationAxis::Mode, AblationAxis::Specs],
        sample: 600,
        config: GenerationConfig::default(),
        jobs: 4,
        run_dir: None,
    };
    let report = run_ablation(&backends, &index, tests, &opts).expect("ablation");
    println!("{}", report.render());
}
