#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use pagesmith::dsl::{parse_symbolic, ChildRef, SymbolicPage, TopLevelBlock};
use pagesmith::layout::{fenced, serialize_node, Frame, LayoutNode, PageDocument, PathSegment, WidgetClass};
use pagesmith::llm::mock::HashEmbedder;
use pagesmith::llm::{CompletionBackend, Gateway, RetryPolicy};
use pagesmith::store::{dedup, ingest_pages, page_exemplars, Provenance, TemplateIndex};
use pagesmith::synthetic::{synthetic_corpus, synthetic_style};

pub type Pages = Vec<(String, PageDocument)>;

/// Index over the first `refs` pages of a seeded synthetic corpus; the
/// remaining `tests` pages are returned for generation.
pub fn synthetic_setup(refs: usize, tests: usize, seed: u64) -> (TemplateIndex, HashEmbedder, Pages) {
    let corpus = synthetic_corpus(refs + tests, seed);
    let (r, t) = corpus.split_at(refs);
    let embedder = HashEmbedder::default();
    let index =
        TemplateIndex::build(dedup(ingest_pages(r)), page_exemplars(r), &embedder, Provenance::default()).unwrap();
    (index, embedder, t.to_vec())
}

pub fn gateway(backend: impl CompletionBackend + 'static) -> Gateway {
    Gateway::new(Arc::new(backend)).with_retry_policy(RetryPolicy::immediate())
}

fn styled(class: WidgetClass, x: f64, y: f64, w: f64, h: f64) -> LayoutNode {
    let mut n = LayoutNode::new(class, Frame::new(x, y, w, h));
    n.style = synthetic_style(class);
    n
}

/// Toolbar plus a Card holding a List Item with an Image and a Text:
/// three levels below the artboard.
pub const THREE_LEVEL_PAGE: &str = "1. [Toolbar]1 contains the following:\n[Icon]1\n[Text]1->\"Inbox\"\n\n2. [Card]1 contains the following:\n[List Item]1->[Image]1\n[List Item]1->[Text]1->\"Song\"";

pub fn three_level_page() -> SymbolicPage {
    parse_symbolic(THREE_LEVEL_PAGE).unwrap().page
}

pub fn layout_reply() -> String {
    let root = LayoutNode::new(WidgetClass::Artboard, Frame::canvas())
        .with_child(styled(WidgetClass::Toolbar, 0.0, 0.0, 1440.0, 200.0))
        .with_child(styled(WidgetClass::Card, 40.0, 600.0, 1360.0, 800.0));
    format!("Design notes first.\n{}", fenced(&serialize_node(&root)))
}

/// Local coordinates; the Icon sits at (20, 50) inside the Toolbar.
pub fn toolbar_reply() -> String {
    let node = styled(WidgetClass::Toolbar, 0.0, 0.0, 1440.0, 200.0)
        .with_child(styled(WidgetClass::Icon, 20.0, 50.0, 100.0, 100.0))
        .with_child(styled(WidgetClass::Text, 140.0, 50.0, 400.0, 100.0).with_string("Inbox"));
    fenced(&serialize_node(&node))
}

/// The Card comes back with an empty List Item, so another round is needed.
pub fn card_reply() -> String {
    let node = styled(WidgetClass::Card, 0.0, 0.0, 1360.0, 800.0)
        .with_child(styled(WidgetClass::ListItem, 20.0, 50.0, 1320.0, 300.0));
    fenced(&serialize_node(&node))
}

pub fn list_item_reply() -> String {
    let node = styled(WidgetClass::ListItem, 0.0, 0.0, 1320.0, 300.0)
        .with_child(styled(WidgetClass::Image, 20.0, 50.0, 200.0, 200.0))
        .with_child(styled(WidgetClass::Text, 240.0, 50.0, 600.0, 80.0).with_string("Song"));
    fenced(&serialize_node(&node))
}

/// Replies in call order for the three-level page with design
/// specifications off.
pub fn three_level_script() -> Vec<String> {
    vec![layout_reply(), toolbar_reply(), card_reply(), list_item_reply()]
}

/// A Toolbar reply that never contains the required children.
pub fn empty_toolbar_reply() -> String {
    fenced(&serialize_node(&styled(WidgetClass::Toolbar, 0.0, 0.0, 1440.0, 200.0)))
}

const WORDS: &[&str] = &["Inbox", "Top Charts", "Zayn", "Settings", "a b c", "Martin Garrix", "x", "Weather 24"];

fn class(rng: &mut ChaCha8Rng) -> WidgetClass {
    let all: Vec<WidgetClass> = WidgetClass::elements().collect();
    *all.choose(rng).unwrap()
}

/// A random page in canonical form: dense per-class indices, values on
/// Text terminals only.
pub fn random_symbolic_page(rng: &mut ChaCha8Rng) -> SymbolicPage {
    let mut head_counts = std::collections::HashMap::new();
    let blocks = (0..rng.gen_range(1..=5))
        .map(|i| {
            let head_class = class(rng);
            let n = head_counts.entry(head_class).or_insert(0u32);
            *n += 1;
            let head = PathSegment::new(head_class, *n);
            let value = (head_class == WidgetClass::Text && rng.gen_bool(0.7))
                .then(|| WORDS.choose(rng).unwrap().to_string());
            let mut child_counts = std::collections::HashMap::new();
            let children = if value.is_some() {
                Vec::new()
            } else {
                (0..rng.gen_range(0..=6))
                    .map(|_| {
                        let depth = rng.gen_range(1..=3);
                        let mut path = Vec::new();
                        for d in 0..depth {
                            let c = class(rng);
                            let idx = if d == 0 {
                                let n = child_counts.entry(c).or_insert(0u32);
                                *n += 1;
                                *n
                            } else {
                                1
                            };
                            path.push(PathSegment::new(c, idx));
                        }
                        let mut child = ChildRef::new(path.clone());
                        if path.last().unwrap().class == WidgetClass::Text && rng.gen_bool(0.6) {
                            child = child.with_value(*WORDS.choose(rng).unwrap());
                        }
                        child
                    })
                    .collect()
            };
            TopLevelBlock { ordinal: i + 1, head, value, children }
        })
        .collect();
    SymbolicPage { blocks, constraint: String::new() }
}
