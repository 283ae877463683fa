//! Score generated pages against ground truth.

use pagesmith::layout::PageDocument;
use pagesmith::metrics::{alignment, ep_acc, evaluate_corpus, max_iou, overlap, page_boxes, PagePair};
use pagesmith::synthetic::synthetic_corpus;

fn jitter(doc: &PageDocument) -> PageDocument {
    let mut d = doc.clone();
    for layer in d.layers_mut().iter_mut().skip(1) {
        layer.translate(30.0, 12.0);
    }
    d.layers_mut().pop();
    d
}

fn main() {
    let truth = synthetic_corpus(8, 3);
    let (id, gt) = &truth[0];
    let gen = jitter(gt);
    let (g, t) = (page_boxes(&gen), page_boxes(gt));
    println!("{id}: mIoU {:.3}  Ali {:.4}  Ovp {:.4}", max_iou(&g, &t), alignment(&g), overlap(&g));

    let acc = ep_acc(&gen, gt);
    println!("EPAcc {:.2}% ({} of {} properties)", acc.score, acc.matched, acc.total);
    for v in acc.violations.iter().take(5) {
        println!("  {:?} {:?} at {}", v.kind, v.property, v.path);
    }

    let pairs: Vec<PagePair> = truth
        .iter()
        .map(|(id, doc)| PagePair { id: id.clone(), generated: jitter(doc), truth: doc.clone() })
        .collect();
    let report = evaluate_corpus(&pairs).expect("pairs");
    println!("\n{}", report.render_table());
}
