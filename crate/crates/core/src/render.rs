//! Wireframe SVG rendering of page documents.

use std::fmt::Write as _;

use crate::layout::{flatten, LayoutNode, PageDocument, WidgetClass};

const PALETTE: [&str; 13] = [
    "#4E79A7", "#F28E2B", "#E15759", "#76B7B2", "#59A14F", "#EDC948", "#B07AA1", "#FF9DA7", "#9C755F", "#BAB0AC",
    "#1F77B4", "#8C564B", "#17BECF",
];

/// Fill color for `class`. Fixed per class across runs.
pub fn class_color(class: WidgetClass) -> &'static str {
    if class == WidgetClass::Artboard {
        "#FFFFFF"
    } else {
        PALETTE[class.ordinal() % PALETTE.len()]
    }
}

pub fn escape_xml(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => {}
            c => out.push(c),
        }
    }
    out
}

fn num(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == r.trunc() {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

fn rect(out: &mut String, node: &LayoutNode) {
    let f = node.frame;
    let (fill, opacity) = if node.class == WidgetClass::Artboard { ("#FFFFFF", "1") } else { (class_color(node.class), "0.25") };
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" fill-opacity="{opacity}" stroke="{}" stroke-width="2"/>"#,
        num(f.x),
        num(f.y),
        num(f.w.max(0.0)),
        num(f.h.max(0.0)),
        if node.class == WidgetClass::Artboard { "#333333" } else { class_color(node.class) },
    );
}

/// One rectangle per node, artboard included, drawn in pre-order so
/// children sit on top of parents. Each element carries its class label;
/// Text nodes also show their string.
pub fn render_svg(doc: &PageDocument) -> String {
    let canvas = doc.canvas();
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"{x} {y} {w} {h}\">\n",
        x = num(canvas.x),
        y = num(canvas.y),
        w = num(canvas.w),
        h = num(canvas.h),
    );
    for (path, node) in flatten(doc) {
        let _ = writeln!(out, "<g data-path=\"{}\">", escape_xml(&path.to_string()));
        rect(&mut out, node);
        if node.class != WidgetClass::Artboard {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="22" fill="{}">{}</text>"#,
                num(node.frame.x + 6.0),
                num(node.frame.y + 24.0),
                class_color(node.class),
                escape_xml(node.class.label()),
            );
        }
        if let Some(s) = node.string.as_deref().filter(|_| node.class == WidgetClass::Text) {
            let _ = writeln!(
                out,
                r##"<text x="{}" y="{}" font-family="sans-serif" font-size="32" fill="#111111">{}</text>"##,
                num(node.frame.x + 6.0),
                num(node.frame.y + node.frame.h / 2.0 + 12.0),
                escape_xml(s),
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::Frame;

    fn page() -> PageDocument {
        let bar = LayoutNode::new(WidgetClass::Toolbar, Frame::new(0.0, 0.0, 1440.0, 200.0))
            .with_child(LayoutNode::new(WidgetClass::Text, Frame::new(20.0, 50.0, 400.0, 100.0)).with_string("Tom & <Jerry>"));
        PageDocument::new(LayoutNode::new(WidgetClass::Artboard, Frame::canvas()).with_child(bar)).unwrap()
    }

    #[test]
    fn one_rect_per_node() {
        let single = PageDocument::new(
            LayoutNode::new(WidgetClass::Artboard, Frame::canvas())
                .with_child(LayoutNode::new(WidgetClass::Toolbar, Frame::new(0.0, 0.0, 1440.0, 200.0))),
        )
        .unwrap();
        let svg = render_svg(&single);
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(svg.contains(r#"viewBox="0 0 1440 2560""#));
    }

    #[test]
    fn text_is_escaped_and_output_is_stable() {
        let svg = render_svg(&page());
        assert!(svg.contains(">Tom &amp; &lt;Jerry&gt;</text>"));
        assert_eq!(svg, render_svg(&page()));
    }

    #[test]
    fn colors_are_fixed() {
        assert_eq!(class_color(WidgetClass::Text), class_color(WidgetClass::Text));
        assert_eq!(escape_xml("a\"b'\u{1}"), "a&quot;b&apos;");
    }
}
