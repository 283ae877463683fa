//! Seeded synthetic pages and a rule-based stand-in for the model.
//!
//! The pages look like simple mobile screens: a toolbar, a body of list
//! items, cards or form fields, and sometimes a bottom navigation bar.
//! [`SyntheticDesigner`] answers every prompt the pipeline sends with a
//! well-formed reply built from the same layout rules, so whole runs can be
//! exercised offline.

mod designer;

pub use designer::{describe_request, lay_out, PromptKind, SyntheticDesigner};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::layout::{Frame, LayoutNode, PageDocument, StyleMap, WidgetClass, CANVAS_HEIGHT, CANVAS_WIDTH};

const WORDS: &[&str] = &[
    "Explore", "Spotlight", "Top Charts", "Settings", "Profile", "Music", "News", "Weather", "Puzzle", "Travel",
    "Recipes", "Photos", "Library", "Friends", "Inbox", "Trending", "Podcasts", "Offers", "Events", "Sports",
];

/// Style every synthetic element of `class` carries, if any.
pub fn synthetic_style(class: WidgetClass) -> StyleMap {
    let mut style = StyleMap::new();
    match class {
        WidgetClass::Toolbar => {
            style.insert("backgroundColor".into(), json!("#3F51B5"));
        }
        WidgetClass::TextButton => {
            style.insert("backgroundColor".into(), json!("#FF4081"));
            style.insert("borderRadius".into(), json!(8));
        }
        WidgetClass::Text => {
            style.insert("color".into(), json!("#212121"));
        }
        WidgetClass::BottomNavigation => {
            style.insert("backgroundColor".into(), json!("#FAFAFA"));
        }
        _ => {}
    }
    style
}

fn node(class: WidgetClass, x: f64, y: f64, w: f64, h: f64) -> LayoutNode {
    let mut n = LayoutNode::new(class, Frame::new(x, y, w, h)).with_name(class.label());
    n.style = synthetic_style(class);
    n
}

fn text(rng: &mut ChaCha8Rng, x: f64, y: f64, w: f64, h: f64) -> LayoutNode {
    let word = *WORDS.choose(rng).expect("word list is not empty");
    node(WidgetClass::Text, x, y, w, h).with_string(word)
}

fn toolbar(rng: &mut ChaCha8Rng) -> LayoutNode {
    let h = f64::from(rng.gen_range(16..=22)) * 10.0;
    let icon = h * 0.5;
    let pad = (h - icon) / 2.0;
    let mut bar = node(WidgetClass::Toolbar, 0.0, 0.0, CANVAS_WIDTH, h)
        .with_child(node(WidgetClass::Icon, 40.0, pad, icon, icon))
        .with_child(text(rng, 80.0 + icon, pad, 600.0, icon));
    if rng.gen_bool(0.6) {
        bar = bar.with_child(node(WidgetClass::Icon, CANVAS_WIDTH - 40.0 - icon, pad, icon, icon));
    }
    bar
}

fn list_item(rng: &mut ChaCha8Rng, y: f64, h: f64) -> LayoutNode {
    let img = h - 40.0;
    let mut item = node(WidgetClass::ListItem, 0.0, y, CANVAS_WIDTH, h)
        .with_child(node(WidgetClass::Image, 40.0, y + 20.0, img, img))
        .with_child(text(rng, 80.0 + img, y + 30.0, 800.0, 60.0));
    if rng.gen_bool(0.5) {
        item = item.with_child(text(rng, 80.0 + img, y + 110.0, 600.0, 50.0));
    }
    item
}

fn card(rng: &mut ChaCha8Rng, x: f64, y: f64, w: f64, h: f64) -> LayoutNode {
    node(WidgetClass::Card, x, y, w, h)
        .with_child(node(WidgetClass::Image, x + 20.0, y + 20.0, w - 40.0, h * 0.6))
        .with_child(text(rng, x + 20.0, y + h * 0.6 + 40.0, w - 40.0, 60.0))
}

fn body(rng: &mut ChaCha8Rng, top: f64, bottom: f64) -> Vec<LayoutNode> {
    let space = bottom - top;
    match rng.gen_range(0..3) {
        0 => {
            let n = rng.gen_range(3..=6);
            let h = (space / n as f64).min(300.0).floor();
            (0..n).map(|i| list_item(rng, top + i as f64 * h, h)).collect()
        }
        1 => {
            let rows = rng.gen_range(1..=3);
            let h = (space / rows as f64).min(700.0).floor() - 40.0;
            let w = (CANVAS_WIDTH - 120.0) / 2.0;
            let mut out = Vec::new();
            for r in 0..rows {
                let y = top + 20.0 + r as f64 * (h + 40.0);
                out.push(card(rng, 40.0, y, w, h));
                out.push(card(rng, 80.0 + w, y, w, h));
            }
            out
        }
        _ => {
            let fields = rng.gen_range(2..=4);
            let mut out = vec![text(rng, 80.0, top + 40.0, 800.0, 80.0)];
            for i in 0..fields {
                out.push(node(WidgetClass::Input, 80.0, top + 180.0 + i as f64 * 160.0, CANVAS_WIDTH - 160.0, 120.0));
            }
            let y = top + 180.0 + fields as f64 * 160.0 + 40.0;
            let label = *WORDS.choose(rng).expect("word list is not empty");
            out.push(
                node(WidgetClass::TextButton, 80.0, y, CANVAS_WIDTH - 160.0, 140.0)
                    .with_child(node(WidgetClass::Text, 120.0, y + 40.0, 400.0, 60.0).with_string(label)),
            );
            out
        }
    }
}

fn bottom_navigation(rng: &mut ChaCha8Rng) -> LayoutNode {
    let h = 200.0;
    let y = CANVAS_HEIGHT - h;
    let n = rng.gen_range(3..=5);
    let slot = CANVAS_WIDTH / n as f64;
    let mut nav = node(WidgetClass::BottomNavigation, 0.0, y, CANVAS_WIDTH, h);
    for i in 0..n {
        nav = nav.with_child(node(WidgetClass::Icon, i as f64 * slot + (slot - 80.0) / 2.0, y + 60.0, 80.0, 80.0));
    }
    nav
}

/// One page drawn from `rng`.
pub fn synthetic_page(rng: &mut ChaCha8Rng) -> PageDocument {
    let mut root = LayoutNode::new(WidgetClass::Artboard, Frame::canvas()).with_name("artboard");
    let bar = toolbar(rng);
    let top = bar.frame.bottom();
    root = root.with_child(bar);
    let with_nav = rng.gen_bool(0.5);
    let bottom = if with_nav { CANVAS_HEIGHT - 200.0 } else { CANVAS_HEIGHT };
    for n in body(rng, top, bottom) {
        root = root.with_child(n);
    }
    if with_nav {
        root = root.with_child(bottom_navigation(rng));
    }
    PageDocument::new(root).expect("synthetic pages have an artboard root")
}

/// `n` pages named `page-00001`, `page-00002`, ... The same seed always
/// gives the same pages.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<(String, PageDocument)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=n).map(|i| (format!("page-{i:05}"), synthetic_page(&mut rng))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::validate_layout;

    #[test]
    fn corpus_is_seeded_and_valid() {
        let a = synthetic_corpus(20, 3);
        assert_eq!(a, synthetic_corpus(20, 3));
        assert_ne!(a, synthetic_corpus(20, 4));
        for (id, doc) in &a {
            let report = validate_layout(doc.root(), &Frame::canvas(), true);
            assert!(report.is_empty(), "{id}: {report:?}");
            assert!(doc.root().depth() >= 3);
        }
    }
}
