use serde_json::json;

use super::synthetic_style;
use crate::dsl::{element_tree, parse_symbolic, serialize_symbolic, ElementNode, SymbolicPage, TopLevelBlock};
use crate::layout::{fenced, serialize_node, Frame, LayoutNode, PathSegment, WidgetClass};
use crate::llm::{Completion, CompletionBackend, CompletionRequest, LlmError};

/// Answers pipeline prompts without a model. Layouts follow fixed rules:
/// row containers place children side by side, everything else stacks
/// them, and each child's share of space grows with its subtree.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticDesigner;

/// Which pipeline prompt a request carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptKind {
    Parser,
    DesignSpec,
    Element,
    OneGo,
    Layout,
}

/// Recognises the prompt by text only its template contains.
pub fn describe_request(request: &CompletionRequest) -> Option<PromptKind> {
    let user = &request.user_message;
    if request.system_message.contains("symbolic language description") {
        Some(PromptKind::Parser)
    } else if user.contains("## Design Specifications:") {
        Some(PromptKind::DesignSpec)
    } else if user.contains("## Reference element template:") {
        Some(PromptKind::Element)
    } else if user.contains("including every nested element") {
        Some(PromptKind::OneGo)
    } else if user.contains("regenerate the page layout design results") {
        Some(PromptKind::Layout)
    } else {
        None
    }
}

impl CompletionBackend for SyntheticDesigner {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        let text = match describe_request(request).ok_or(LlmError::NoMatch)? {
            PromptKind::Parser => parser_reply(&request.user_message),
            PromptKind::DesignSpec => design_reply(&request.user_message),
            PromptKind::Element => element_reply(&request.user_message)?,
            PromptKind::OneGo => page_reply(&request.user_message, usize::MAX)?,
            PromptKind::Layout => page_reply(&request.user_message, 1)?,
        };
        Ok(Completion::text(text))
    }
}

fn section<'t>(text: &'t str, start: &str, end: &str) -> Option<&'t str> {
    let from = text.rfind(start)? + start.len();
    let rest = &text[from..];
    Some(rest.find(end).map_or(rest, |e| &rest[..e]))
}

fn unindent(block: &str) -> String {
    block.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join("\n")
}

fn parser_reply(user: &str) -> String {
    let page = match parse_symbolic(user) {
        Ok(p) if !p.page.is_empty() => p.page,
        _ => keyword_page(user),
    };
    if page.is_empty() {
        return "None".into();
    }
    let envelope = json!({
        "nl_input": serialize_symbolic(&page),
        "constraint": "Elements are stacked from top to bottom in the order listed.",
    });
    fenced(&serde_json::to_string_pretty(&envelope).expect("json values serialize"))
}

/// One block per widget word in the text, in order of mention. Quoted
/// phrases become Text children of the latest block.
fn keyword_page(text: &str) -> SymbolicPage {
    let mut blocks: Vec<TopLevelBlock> = Vec::new();
    let mut counts = std::collections::HashMap::new();
    let mut parts = text.split('"');
    let mut quoted = false;
    for part in parts.by_ref() {
        if quoted {
            if let Some(block) = blocks.last_mut() {
                let k = block.children.iter().filter(|c| c.path[0].class == WidgetClass::Text).count() as u32 + 1;
                block.children.push(crate::dsl::ChildRef {
                    path: vec![PathSegment::new(WidgetClass::Text, k)],
                    value: Some(part.to_string()),
                });
            }
        } else {
            let words: Vec<String> = part
                .split(|c: char| !c.is_alphanumeric() && c != '/')
                .filter(|w| !w.is_empty())
                .map(str::to_lowercase)
                .collect();
            let mut i = 0;
            while i < words.len() {
                let pair = words.get(i + 1).map(|n| format!("{} {n}", words[i]));
                let (class, used) = match pair.as_deref().and_then(resolve_word) {
                    Some(c) => (Some(c), 2),
                    None => (resolve_word(&words[i]), 1),
                };
                if let Some(class) = class {
                    let n = counts.entry(class).or_insert(0u32);
                    *n += 1;
                    blocks.push(TopLevelBlock {
                        ordinal: blocks.len() as u32 + 1,
                        head: PathSegment::new(class, *n),
                        value: None,
                        children: Vec::new(),
                    });
                }
                i += used;
            }
        }
        quoted = !quoted;
    }
    SymbolicPage { blocks, constraint: String::new() }
}

fn resolve_word(word: &str) -> Option<WidgetClass> {
    // Short function words would otherwise match aliases by accident.
    if word.len() < 3 {
        return None;
    }
    WidgetClass::resolve(word).map(|r| r.class).filter(|c| *c != WidgetClass::Artboard)
}

fn design_reply(user: &str) -> String {
    let refs = user.matches("Reference ").count() / 2;
    format!(
        "Q1: What is the size of each element?\n\
         A1: First-level elements span the full 1440 pixel page width; their heights follow their content.\n\
         Q2: Which first-level elements types and contents are similar and can be grouped together?\n\
         A2: Repeated elements of the same type across the {refs} references share one size and are grouped.\n\
         Q3: How are all the elements laid out?\n\
         A3: Elements are stacked in a single column from top to bottom; toolbars and navigation bars lay their children out in one row."
    )
}

/// Children of the element described by an element-content section.
fn content_children(content: &str) -> (Option<String>, Vec<ElementNode>) {
    let mut lines = content.lines();
    let head = lines.next().unwrap_or_default();
    let value = head.split_once("->").map(|(_, v)| v.trim().trim_matches('"').to_string());
    let body: Vec<&str> = lines.collect();
    if body.is_empty() {
        return (value, Vec::new());
    }
    let wrapped = format!("1. [Card]1 contains the following:\n{}", body.join("\n"));
    let children = parse_symbolic(&wrapped)
        .map(|p| element_tree(&p.page).roots.into_iter().next().map(|r| r.children).unwrap_or_default())
        .unwrap_or_default();
    (value, children)
}

fn element_reply(user: &str) -> Result<String, LlmError> {
    let current = section(user, "## Current Requirements:", "\u{0}").ok_or(LlmError::NoMatch)?;
    let class_label = unindent(section(current, "## Element type:", "##").ok_or(LlmError::NoMatch)?);
    let class = WidgetClass::from_label(&class_label).ok_or(LlmError::NoMatch)?;
    let size = section(current, "The width and height of this element are:", "\n").ok_or(LlmError::NoMatch)?;
    let mut nums = size.split(',').filter_map(|s| s.trim().parse::<f64>().ok());
    let (w, h) = (nums.next().unwrap_or(400.0), nums.next().unwrap_or(200.0));
    let content = unindent(section(current, "## Element content:", "## Output:").ok_or(LlmError::NoMatch)?);
    let (value, children) = content_children(&content);
    let mut node = lay_out(class, Frame::new(0.0, 0.0, w, h), &children, 1);
    if class == WidgetClass::Text {
        node.string = Some(value.unwrap_or_else(|| "Text".into()));
    }
    Ok(format!("Design specifications: children follow the container's main axis.\n{}", fenced(&serialize_node(&node))))
}

fn page_reply(user: &str, depth: usize) -> Result<String, LlmError> {
    let content = section(user, "# Page Content - Current requirements:", "# Thinking - Current requirements:")
        .ok_or(LlmError::NoMatch)?;
    let page = parse_symbolic(&unindent(content)).map_err(|_| LlmError::NoMatch)?.page;
    let tree = element_tree(&page);
    let root = lay_out(WidgetClass::Artboard, Frame::canvas(), &tree.roots, depth);
    Ok(format!("Design specifications: one column, top to bottom.\n{}", fenced(&serialize_node(&root))))
}

fn is_row(class: WidgetClass) -> bool {
    matches!(
        class,
        WidgetClass::Toolbar | WidgetClass::BottomNavigation | WidgetClass::ButtonBar | WidgetClass::MultiTab
    )
}

/// Places `children` inside `frame`, `depth` levels deep.
pub fn lay_out(class: WidgetClass, frame: Frame, children: &[ElementNode], depth: usize) -> LayoutNode {
    let mut node = LayoutNode::new(class, frame).with_name(class.label());
    node.style = synthetic_style(class);
    if class == WidgetClass::Text {
        node.string = Some("Text".into());
    }
    if depth == 0 || children.is_empty() {
        return node;
    }
    let pad = (frame.w.min(frame.h) * 0.05).min(20.0).floor();
    let weights: Vec<f64> = children.iter().map(|c| if is_row(class) { 1.0 } else { c.count() as f64 }).collect();
    let total: f64 = weights.iter().sum();
    let n = children.len() as f64;
    let (main, cross) = if is_row(class) { (frame.w, frame.h) } else { (frame.h, frame.w) };
    let free = (main - pad * (n + 1.0)).max(n);
    let mut cursor = pad;
    for (child, weight) in children.iter().zip(weights) {
        let len = (free * weight / total).floor().max(1.0);
        let cross_len = (cross - 2.0 * pad).max(1.0);
        let f = if is_row(class) {
            Frame::new(frame.x + cursor, frame.y + pad, len, cross_len)
        } else {
            Frame::new(frame.x + pad, frame.y + cursor, cross_len, len)
        };
        cursor += len + pad;
        let mut c = lay_out(child.class(), f, &child.children, depth - 1);
        if child.class() == WidgetClass::Text {
            c.string = Some(child.value.clone().unwrap_or_else(|| "Text".into()));
        }
        node.layers.push(c);
    }
    node
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_parser_envelope;

    #[test]
    fn parser_echoes_block_text() {
        let req = CompletionRequest::new(
            crate::prompt::TemplateName::Parser.text(),
            "1. [Toolbar]1 contains the following:\n[Text]1->\"Explore\"",
        );
        let reply = SyntheticDesigner.complete(&req).unwrap().text;
        let parsed = parse_parser_envelope(&reply).unwrap();
        assert_eq!(parsed.page.blocks.len(), 1);
    }

    #[test]
    fn parser_reads_keywords() {
        let req = CompletionRequest::new(
            crate::prompt::TemplateName::Parser.text(),
            "A toolbar titled \"Inbox\" above a list item and a bottom navigation",
        );
        let parsed = parse_parser_envelope(&SyntheticDesigner.complete(&req).unwrap().text).unwrap();
        let heads: Vec<WidgetClass> = parsed.page.blocks.iter().map(|b| b.head.class).collect();
        assert_eq!(heads, [WidgetClass::Toolbar, WidgetClass::ListItem, WidgetClass::BottomNavigation]);
        assert_eq!(parsed.page.blocks[0].children[0].value.as_deref(), Some("Inbox"));
        let none = CompletionRequest::new(crate::prompt::TemplateName::Parser.text(), "what's the weather today?");
        assert_eq!(SyntheticDesigner.complete(&none).unwrap().text, "None");
    }

    #[test]
    fn layout_stays_inside_parent() {
        let page = parse_symbolic("1. [Toolbar]1 contains:\n[Icon]1\n[Text]1->\"A\"\n\n2. [List Item]1 contains:\n[Image]1")
            .unwrap()
            .page;
        let tree = element_tree(&page);
        let root = lay_out(WidgetClass::Artboard, Frame::canvas(), &tree.roots, usize::MAX);
        let report = crate::layout::validate_layout(&root, &Frame::canvas(), true);
        assert!(report.is_empty(), "{report:?}");
        assert_eq!(root.node_count(), 6);
        assert_eq!(root.layers[0].layers[1].string.as_deref(), Some("A"));
    }
}
