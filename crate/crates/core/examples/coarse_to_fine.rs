//! Generate a page offline: the rule-based designer stands in for the
//! model, so the whole step protocol runs without a network.

use std::sync::Arc;

use pagesmith::agents::{GenerationConfig, Mode, PageRequest, Pipeline};
use pagesmith::llm::mock::HashEmbedder;
use pagesmith::llm::Gateway;
use pagesmith::render::render_svg;
use pagesmith::store::{dedup, ingest_pages, page_exemplars, Provenance, TemplateIndex};
use pagesmith::synthetic::{synthetic_corpus, SyntheticDesigner};

fn main() {
    let pages = synthetic_corpus(50, 4);
    let embedder = HashEmbedder::default();
    let index = TemplateIndex::build(dedup(ingest_pages(&pages)), page_exemplars(&pages), &embedder, Provenance::default())
        .expect("index");
    let gateway = Gateway::new(Arc::new(SyntheticDesigner));
    let request = "A music app: a toolbar titled \"Top Charts\", a list item, another list item and a bottom navigation";

    for mode in [Mode::CoarseToFine, Mode::OneGo] {
        let config = GenerationConfig { mode, ..Default::default() };
        let pipeline = Pipeline::new(&gateway, &embedder, &index, config).expect("config");
        match pipeline.orchestrate(PageRequest::Text(request.into())) {
            Ok(out) => {
                println!("{mode:?}: trace {:?}, {} nodes, depth {}", out.record.trace, out.document.root().node_count(), out.document.root().depth());
                for r in &out.record.rounds {
                    println!("  {r:?}");
                }
                if mode == Mode::CoarseToFine {
                    let path = std::env::temp_dir().join("pagesmith-coarse-to-fine.svg");
                    std::fs::write(&path, render_svg(&out.document)).expect("write svg");
                    println!("  wireframe written to {}", path.display());
                }
            }
            Err(f) => println!("{mode:?}: failed at step {}: {}", f.step, f.error),
        }
    }
}
