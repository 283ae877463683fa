//! Prompt templates and their rendering.
//!
//! Templates are plain text with `[name]` placeholders. Each template
//! declares its placeholder set; rendering substitutes exactly those
//! tokens in a single pass, so bracketed text inside a binding (or an
//! undeclared `[index]` in the template itself) is left alone.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::layout::{LayoutNode, WidgetClass};
use crate::store::ElementTemplate;

/// Number of references per prompt.
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    OrchestratorSystem,
    Parser,
    ReferenceExample,
    Layout,
    OneGo,
    ElementReference,
    Element,
    DesignSpec,
}

impl TemplateName {
    pub const ALL: [TemplateName; 8] = [
        TemplateName::OrchestratorSystem,
        TemplateName::Parser,
        TemplateName::ReferenceExample,
        TemplateName::Layout,
        TemplateName::OneGo,
        TemplateName::ElementReference,
        TemplateName::Element,
        TemplateName::DesignSpec,
    ];

    pub fn text(self) -> &'static str {
        match self {
            TemplateName::OrchestratorSystem => include_str!("../../assets/prompts/orchestrator_system.txt"),
            TemplateName::Parser => include_str!("../../assets/prompts/parser.txt"),
            TemplateName::ReferenceExample => include_str!("../../assets/prompts/reference_example.txt"),
            TemplateName::Layout => include_str!("../../assets/prompts/layout.txt"),
            TemplateName::OneGo => include_str!("../../assets/prompts/one_go.txt"),
            TemplateName::ElementReference => include_str!("../../assets/prompts/element_reference.txt"),
            TemplateName::Element => include_str!("../../assets/prompts/element.txt"),
            TemplateName::DesignSpec => include_str!("../../assets/prompts/design_spec.txt"),
        }
    }

    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            TemplateName::OrchestratorSystem | TemplateName::Parser => &[],
            TemplateName::ReferenceExample => &["idx", "ref_content", "ref_input_elements", "design_code", "ref_output"],
            TemplateName::Layout | TemplateName::OneGo => &[
                "valid_components",
                "ref_layouts",
                "page_content",
                "input_elements",
                "input_elements_num",
                "layout_constraint",
            ],
            TemplateName::ElementReference => &[
                "idx",
                "_class",
                "ref_width",
                "ref_height",
                "ref_layout_input",
                "ref_content",
                "required_element_list",
                "design_code",
                "ref_output",
            ],
            TemplateName::Element => {
                &["_class", "width", "height", "element_layout", "element_content", "ref_elements", "valid_components"]
            }
            TemplateName::DesignSpec => &["nl_input", "dsl_output"],
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            TemplateName::OrchestratorSystem => "orchestrator_system.txt",
            TemplateName::Parser => "parser.txt",
            TemplateName::ReferenceExample => "reference_example.txt",
            TemplateName::Layout => "layout.txt",
            TemplateName::OneGo => "one_go.txt",
            TemplateName::ElementReference => "element_reference.txt",
            TemplateName::Element => "element.txt",
            TemplateName::DesignSpec => "design_spec.txt",
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_name().trim_end_matches(".txt"))
    }
}

pub type Bindings = BTreeMap<String, String>;

/// Builds bindings from `(name, value)` pairs.
pub fn bindings<I, K, V>(pairs: I) -> Bindings
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<String>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PromptWarning {
    UnusedBinding { template: TemplateName, name: String },
    ReferencesTruncated { kept: usize, dropped: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("{template}: missing bindings {}", names.join(", "))]
    MissingBinding { template: TemplateName, names: Vec<String> },
    #[error("no question/answer pairs found in design specification")]
    UnparseableSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub text: String,
    pub warnings: Vec<PromptWarning>,
}

/// Substitutes the template's declared placeholders. Every declared
/// placeholder needs a binding; unknown bindings only warn.
pub fn render(template: TemplateName, values: &Bindings) -> Result<Rendered, PromptError> {
    let declared = template.placeholders();
    let missing: Vec<String> =
        declared.iter().filter(|n| !values.contains_key(**n)).map(|n| n.to_string()).collect();
    if !missing.is_empty() {
        return Err(PromptError::MissingBinding { template, names: missing });
    }
    let warnings = values
        .keys()
        .filter(|k| !declared.contains(&k.as_str()))
        .map(|k| PromptWarning::UnusedBinding { template, name: k.clone() })
        .collect();
    Ok(Rendered { text: substitute(template.text(), declared, values), warnings })
}

fn substitute(text: &str, declared: &[&str], values: &Bindings) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find(']').map(|close| &after[..close]).filter(|name| declared.contains(name));
        match hit {
            Some(name) => {
                out.push_str(&values[name]);
                rest = &after[name.len() + 1..];
            }
            None => {
                out.push('[');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Which reference format a few-shot block uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// Page exemplars cut to their first layer.
    FirstLayer,
    /// Page exemplars with every nested element.
    FullPage,
    Element,
}

/// The class vocabulary, comma-separated.
pub fn valid_components() -> String {
    WidgetClass::ALL.iter().map(|c| c.label()).collect::<Vec<_>>().join(", ")
}

fn pretty(json: &str) -> String {
    serde_json::from_str::<serde_json::Value>(json)
        .and_then(|v| serde_json::to_string_pretty(&v))
        .unwrap_or_else(|_| json.to_string())
}

/// Layout JSON of a node with its children dropped.
pub fn shallow_json(node: &LayoutNode) -> String {
    serde_json::to_string_pretty(&node.truncated(1)).expect("layout nodes serialize")
}

fn shallow_template_layout(t: &ElementTemplate) -> String {
    t.layout().map(|n| shallow_json(&n)).unwrap_or_else(|_| t.layout_json.clone())
}

/// Renders one reference block per template, numbered from 1.
pub fn build_reference_blocks(templates: &[&ElementTemplate], granularity: Granularity) -> Result<String, PromptError> {
    let mut blocks = Vec::with_capacity(templates.len());
    for (i, t) in templates.iter().enumerate() {
        let idx = (i + 1).to_string();
        let design_code = t.design_code.clone().unwrap_or_default();
        let rendered = match granularity {
            Granularity::FirstLayer | Granularity::FullPage => {
                let output = match (granularity, t.layout()) {
                    (Granularity::FirstLayer, Ok(node)) => {
                        serde_json::to_string_pretty(&node.truncated(2)).expect("layout nodes serialize")
                    }
                    _ => pretty(&t.layout_json),
                };
                render(
                    TemplateName::ReferenceExample,
                    &bindings([
                        ("idx", idx),
                        ("ref_content", t.content.clone()),
                        ("ref_input_elements", t.attributes.value.clone().unwrap_or_default()),
                        ("design_code", design_code),
                        ("ref_output", output),
                    ]),
                )?
            }
            Granularity::Element => render(
                TemplateName::ElementReference,
                &bindings([
                    ("idx", idx),
                    ("_class", t.class.label().to_string()),
                    ("ref_width", fmt_num(t.attributes.width)),
                    ("ref_height", fmt_num(t.attributes.height)),
                    ("ref_layout_input", shallow_template_layout(t)),
                    ("ref_content", element_content_line(t.class, t.attributes.value.as_deref(), &t.content)),
                    ("required_element_list", t.content.clone()),
                    ("design_code", design_code),
                    ("ref_output", pretty(&t.layout_json)),
                ]),
            )?,
        };
        blocks.push(rendered.text);
    }
    Ok(blocks.join("\n"))
}

/// An element's own reference line followed by its child lines.
pub fn element_content_line(class: WidgetClass, value: Option<&str>, children: &str) -> String {
    let mut head = format!("[{}]", class.label());
    if let Some(v) = value {
        head.push_str(&format!("->\"{v}\""));
    }
    if children.is_empty() {
        head
    } else {
        format!("{head}\n{children}")
    }
}

/// Integral values print without a fractional part.
pub fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Prompt asking for a design summary of a set of references.
pub fn build_design_spec_prompt(references: &[&ElementTemplate]) -> Result<Rendered, PromptError> {
    let nl_input = references
        .iter()
        .enumerate()
        .map(|(i, t)| format!("Reference {}:\n{}", i + 1, t.content))
        .collect::<Vec<_>>()
        .join("\n\n");
    let dsl_output = references
        .iter()
        .enumerate()
        .map(|(i, t)| format!("Reference {}:\n{}", i + 1, pretty(&t.layout_json)))
        .collect::<Vec<_>>()
        .join("\n\n");
    render(TemplateName::DesignSpec, &bindings([("nl_input", nl_input), ("dsl_output", dsl_output)]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QaPair {
    pub question: String,
    pub answer: String,
}

/// Question/answer design summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DesignSpec {
    pub items: Vec<QaPair>,
}

impl DesignSpec {
    pub fn render(&self) -> String {
        self.items
            .iter()
            .enumerate()
            .map(|(i, qa)| format!("Q{n}: {}\nA{n}: {}", qa.question, qa.answer, n = i + 1))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn qa_marker(line: &str) -> Option<(char, &str)> {
    let t = line.trim_start().trim_start_matches(['-', '*', '#', ' ']);
    let kind = t.chars().next().filter(|c| matches!(c, 'Q' | 'A'))?;
    let rest = &t[1..];
    let digits = rest.len() - rest.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let body = rest[digits..].trim_start();
    let body = body.strip_prefix([':', '：', '.', ')'])?;
    Some((kind, body.trim()))
}

/// Reads `Qn:` / `An:` lines. Answers may continue over several lines.
pub fn parse_design_spec(text: &str) -> Result<DesignSpec, PromptError> {
    let mut items: Vec<QaPair> = Vec::new();
    let mut pending_q: Option<String> = None;
    let mut in_answer = false;
    for line in text.lines() {
        match qa_marker(line) {
            Some(('Q', body)) => {
                pending_q = Some(body.to_string());
                in_answer = false;
            }
            Some((_, body)) => {
                items.push(QaPair { question: pending_q.take().unwrap_or_default(), answer: body.to_string() });
                in_answer = true;
            }
            None if in_answer && !line.trim().is_empty() && !line.trim_start().starts_with("```") => {
                let last = items.last_mut().expect("answer started");
                last.answer.push('\n');
                last.answer.push_str(line.trim());
            }
            None => {}
        }
    }
    if items.is_empty() {
        return Err(PromptError::UnparseableSpec);
    }
    Ok(DesignSpec { items })
}
