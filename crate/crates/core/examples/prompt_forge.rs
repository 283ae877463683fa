//! Render the shipped prompt templates with retrieved references.

use pagesmith::layout::{HierarchicalPath, WidgetClass};
use pagesmith::llm::mock::HashEmbedder;
use pagesmith::prompt::{bindings, build_design_spec_prompt, build_reference_blocks, parse_design_spec, render, Granularity, TemplateName};
use pagesmith::store::{dedup, ingest_pages, page_exemplars, retrieve_top_k, Provenance, RetrievalQuery, TemplateIndex};
use pagesmith::synthetic::synthetic_corpus;

fn main() {
    for t in TemplateName::ALL {
        println!("{:<22} {:>6} chars, placeholders {:?}", t.to_string(), t.text().len(), t.placeholders());
    }

    let pages = synthetic_corpus(30, 2);
    let embedder = HashEmbedder::default();
    let index = TemplateIndex::build(dedup(ingest_pages(&pages)), page_exemplars(&pages), &embedder, Provenance::default())
        .expect("index");
    let hits = retrieve_top_k(&index, &RetrievalQuery::page("1. [Toolbar]1\n2. [List Item]1"), 2, &embedder).expect("retrieval");
    let refs: Vec<_> = hits.iter().map(|h| h.template).collect();

    let blocks = build_reference_blocks(&refs, Granularity::FirstLayer).expect("reference blocks");
    println!("\nreference blocks: {} lines", blocks.lines().count());

    let spec_prompt = build_design_spec_prompt(&refs).expect("design spec prompt");
    println!("design-spec prompt: {} chars", spec_prompt.text.len());

    let spec = parse_design_spec("Q1: What is the size of each element?\nA1: The toolbar spans the page width.\nQ2: Groups?\nA2: The list items.")
        .expect("two answers");
    println!("parsed design spec:\n{}", spec.render());

    let toolbar = retrieve_top_k(&index, &RetrievalQuery::element(&HierarchicalPath::root(), WidgetClass::Toolbar, None), 1, &embedder)
        .expect("retrieval");
    println!("\nnearest toolbar template: {}", toolbar[0].template.id);

    let missing = render(TemplateName::DesignSpec, &bindings([("nl_input", "x")])).unwrap_err();
    println!("rendering with a missing binding: {missing}");
}
