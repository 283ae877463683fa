//! Parse a symbolic page description, list its element inventory, and
//! describe an existing page back in the same language.

use pagesmith::dsl::{element_inventory, page_to_symbolic, parse_parser_envelope, parse_symbolic, serialize_symbolic};
use pagesmith::synthetic::synthetic_corpus;

const DESCRIPTION: &str = "\
1. [Toolbar]1 contains the following:
[Icon]1
[Text]1->\"Top Charts\"

2. [List Item]1 contains the following:
[Image]1
[Text]1->\"Song of the day\"

3. [Bottom Navigation]1 contains the following:
[Icon]1
[Icon]2
[Icon]3";

fn main() {
    let parsed = parse_symbolic(DESCRIPTION).expect("valid description");
    let inventory = element_inventory(&parsed.page);
    println!("{} blocks, {} required elements:", parsed.page.blocks.len(), inventory.count());
    for e in &inventory.entries {
        println!("  {}{}", e.path, e.value.as_deref().map(|v| format!(" = {v:?}")).unwrap_or_default());
    }

    let envelope = format!(
        "```json\n{}\n```",
        serde_json::json!({ "nl_input": DESCRIPTION, "constraint": "Keep the toolbar at the top." })
    );
    let from_parser = parse_parser_envelope(&envelope).expect("envelope");
    println!("\nparser envelope constraint: {:?}", from_parser.page.constraint);

    let (id, doc) = &synthetic_corpus(1, 7)[0];
    println!("\n{id} described symbolically:\n{}", serialize_symbolic(&page_to_symbolic(doc)));
}
