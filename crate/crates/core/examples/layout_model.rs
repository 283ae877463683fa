//! Build a page tree by hand, validate it, and walk its hierarchical paths.

use pagesmith::layout::{flatten, parse_page_json, serialize_page, validate_layout, Frame, LayoutNode, PageDocument, WidgetClass};

fn main() {
    let root = LayoutNode::new(WidgetClass::Artboard, Frame::canvas())
        .with_child(
            LayoutNode::new(WidgetClass::Toolbar, Frame::new(0.0, 0.0, 1440.0, 200.0))
                .with_style("backgroundColor", "#3F51B5")
                .with_child(LayoutNode::new(WidgetClass::Icon, Frame::new(40.0, 50.0, 100.0, 100.0)))
                .with_child(LayoutNode::new(WidgetClass::Text, Frame::new(180.0, 60.0, 500.0, 80.0)).with_string("Inbox")),
        )
        .with_child(LayoutNode::new(WidgetClass::Image, Frame::new(1500.0, 300.0, 200.0, 200.0)));
    let doc = PageDocument::new(root).expect("artboard root");

    for (path, node) in flatten(&doc) {
        println!("{path:<40} {:?}", node.frame);
    }

    let report = validate_layout(doc.root(), &Frame::canvas(), true);
    println!("\n{} validation finding(s):", report.len());
    println!("{report:#?}");

    let json = serialize_page(&doc);
    let back = parse_page_json(&json).expect("serialized page parses");
    assert_eq!(back.document, doc);
    println!("\nround trip through JSON: ok ({} bytes)", json.len());

    let lenient = parse_page_json(
        "Here is the layout:\n```json\n{\"_class\": \"artboard\", \"frame\": {\"x\": 0, \"y\": 0, \"width\": \"1440\", \"height\": 2560}, \
         \"layers\": [{\"_class\": \"toolbar\", \"frame\": {\"x\": 0, \"y\": 0, \"width\": 1440, \"height\": 200}}]}\n```",
    )
    .expect("recoverable reply");
    println!("\nmodel-style reply parsed with warnings:");
    for w in &lenient.warnings {
        println!("  {w:?}");
    }
}
