//! Draw a page as an SVG wireframe.

use pagesmith::render::render_svg;
use pagesmith::synthetic::synthetic_corpus;

fn main() {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pagesmith-page.svg"));
    let (id, doc) = synthetic_corpus(1, 12).remove(0);
    let svg = render_svg(&doc);
    std::fs::write(&out, &svg).expect("write svg");
    println!("{id}: {} elements, {} bytes of SVG -> {}", doc.element_count(), svg.len(), out.display());
}
