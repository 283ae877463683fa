//! Turn pages into element templates, embed them, and retrieve the
//! nearest references for a query.

use pagesmith::layout::{HierarchicalPath, WidgetClass};
use pagesmith::llm::mock::HashEmbedder;
use pagesmith::store::{dedup, ingest_pages, page_exemplars, retrieve_top_k, Provenance, RetrievalQuery, TemplateIndex};
use pagesmith::synthetic::synthetic_corpus;

fn main() {
    let pages = synthetic_corpus(60, 1);
    let templates = ingest_pages(&pages);
    let unique = dedup(templates.clone());
    println!("{} pages -> {} templates, {} after dedup", pages.len(), templates.len(), unique.len());

    let embedder = HashEmbedder::default();
    let index = TemplateIndex::build(unique, page_exemplars(&pages), &embedder, Provenance::default()).expect("index");
    println!("index: {} elements, {} page exemplars, dimension {}", index.elements().len(), index.pages().len(), index.dimension());

    let query = RetrievalQuery::element(&HierarchicalPath::root(), WidgetClass::Toolbar, None);
    println!("\nquery: {:?}", query.text);
    for hit in retrieve_top_k(&index, &query, 5, &embedder).expect("retrieval") {
        println!("  {:.4}  {} ({} from {})", hit.similarity, hit.template.id, hit.template.class.label(), hit.template.source_page);
    }

    let page_query = RetrievalQuery::page("1. [Toolbar]1\n2. [Card]1\n3. [Card]2");
    println!("\nclosest pages:");
    for hit in retrieve_top_k(&index, &page_query, 3, &embedder).expect("retrieval") {
        println!("  {:.4}  {}", hit.similarity, hit.template.source_page);
    }
}
