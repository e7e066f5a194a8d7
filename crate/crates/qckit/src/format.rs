//! The three tagged output grammars and their parser, serializer, prompt
//! templates, and the reasoning-answer → sandwich restructurer.
//!
//! Wire contract: `<answer>`/`</answer>` wrap corrections and
//! `<reasoning>`/`</reasoning>` wraps the reasoning trace. Tags are ASCII
//! and case-sensitive. A strict parse requires exactly the format's tag
//! sequence with nothing but whitespace outside tag content; inner content
//! is trimmed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";
pub const REASONING_OPEN: &str = "<reasoning>";
pub const REASONING_CLOSE: &str = "</reasoning>";

/// Output structure the model is asked to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    /// Reasoning first, answer last (standard chain-of-thought).
    ReaAns,
    /// Answer first, reasoning after.
    AnsRea,
    /// Answer, reasoning, answer again.
    Sandwich,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [OutputFormat::ReaAns, OutputFormat::AnsRea, OutputFormat::Sandwich];

    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::ReaAns => "rea-ans",
            OutputFormat::AnsRea => "ans-rea",
            OutputFormat::Sandwich => "sandwich",
        }
    }
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rea-ans" => Ok(OutputFormat::ReaAns),
            "ans-rea" => Ok(OutputFormat::AnsRea),
            "sandwich" => Ok(OutputFormat::Sandwich),
            _ => Err(FormatError::UnknownFormat(s.to_string())),
        }
    }
}

/// A strict sandwich output: initial correction, reasoning, final
/// correction, all tag-stripped and trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichOutput {
    pub c_init: String,
    pub reasoning: String,
    pub c_final: String,
}

/// Fields recovered by a strict parse, per format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParsedFields {
    Sandwich(SandwichOutput),
    ReaAns { reasoning: String, answer: String },
    AnsRea { answer: String, reasoning: String },
}

impl ParsedFields {
    /// The correction a deployment would surface first.
    pub fn initial_answer(&self) -> &str {
        match self {
            ParsedFields::Sandwich(s) => &s.c_init,
            ParsedFields::ReaAns { answer, .. } => answer,
            ParsedFields::AnsRea { answer, .. } => answer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseOutcome {
    /// The full grammar for the requested format matched.
    StrictOk(ParsedFields),
    /// At least one complete answer span exists but the strict parse failed;
    /// carries the earliest answer, trimmed.
    PartialAnswer(String),
    /// No complete answer span at all.
    NoAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseResult {
    pub outcome: ParseOutcome,
    pub raw: String,
}

impl ParseResult {
    pub fn is_strict(&self) -> bool {
        matches!(self.outcome, ParseOutcome::StrictOk(_))
    }

    /// The first extractable answer, if any: the strict initial answer, or
    /// the partial answer.
    pub fn first_answer(&self) -> Option<&str> {
        match &self.outcome {
            ParseOutcome::StrictOk(fields) => Some(fields.initial_answer()),
            ParseOutcome::PartialAnswer(a) => Some(a),
            ParseOutcome::NoAnswer => None,
        }
    }

    pub fn sandwich(&self) -> Option<&SandwichOutput> {
        match &self.outcome {
            ParseOutcome::StrictOk(ParsedFields::Sandwich(s)) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("unknown output format {0:?} (expected rea-ans, ans-rea, or sandwich)")]
    UnknownFormat(String),
    #[error("restructuring requires a strict reasoning-answer parse, got {0}")]
    NotStrictReaAns(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag {
    AnswerOpen,
    AnswerClose,
    ReasoningOpen,
    ReasoningClose,
}

impl Tag {
    const LITERALS: [(&'static str, Tag); 4] = [
        (ANSWER_OPEN, Tag::AnswerOpen),
        (ANSWER_CLOSE, Tag::AnswerClose),
        (REASONING_OPEN, Tag::ReasoningOpen),
        (REASONING_CLOSE, Tag::ReasoningClose),
    ];
}

/// Left-to-right, non-overlapping scan into tag tokens and the text runs
/// between them (empty runs included so the shape is always
/// `text (tag text)*`).
fn lex(text: &str) -> (Vec<&str>, Vec<Tag>) {
    let mut texts = Vec::new();
    let mut tags = Vec::new();
    let mut rest = text;
    loop {
        let found = Tag::LITERALS
            .iter()
            .filter_map(|(lit, tag)| rest.find(lit).map(|p| (p, *lit, *tag)))
            .min_by_key(|(p, _, _)| *p);
        match found {
            Some((pos, lit, tag)) => {
                texts.push(&rest[..pos]);
                tags.push(tag);
                rest = &rest[pos + lit.len()..];
            }
            None => {
                texts.push(rest);
                return (texts, tags);
            }
        }
    }
}

fn strict_sequence(fmt: OutputFormat) -> &'static [Tag] {
    match fmt {
        OutputFormat::Sandwich => &[
            Tag::AnswerOpen,
            Tag::AnswerClose,
            Tag::ReasoningOpen,
            Tag::ReasoningClose,
            Tag::AnswerOpen,
            Tag::AnswerClose,
        ],
        OutputFormat::ReaAns => &[
            Tag::ReasoningOpen,
            Tag::ReasoningClose,
            Tag::AnswerOpen,
            Tag::AnswerClose,
        ],
        OutputFormat::AnsRea => &[
            Tag::AnswerOpen,
            Tag::AnswerClose,
            Tag::ReasoningOpen,
            Tag::ReasoningClose,
        ],
    }
}

/// Parse `text` against the grammar for `fmt`. Total: failures are encoded
/// in the outcome, never as errors or panics.
pub fn parse(text: &str, fmt: OutputFormat) -> ParseResult {
    let outcome = match strict_fields(text, fmt) {
        Some(fields) => ParseOutcome::StrictOk(fields),
        None => match first_answer(text) {
            Some(ans) => ParseOutcome::PartialAnswer(ans),
            None => ParseOutcome::NoAnswer,
        },
    };
    ParseResult { outcome, raw: text.to_string() }
}

fn strict_fields(text: &str, fmt: OutputFormat) -> Option<ParsedFields> {
    let (texts, tags) = lex(text);
    let expected = strict_sequence(fmt);
    if tags != expected {
        return None;
    }
    // texts = [outer, content, outer, content, outer, content, outer];
    // every even index is outside tags and must be whitespace-only.
    let mut contents = Vec::with_capacity(tags.len() / 2);
    for (k, run) in texts.iter().enumerate() {
        if k % 2 == 0 {
            if !run.trim().is_empty() {
                return None;
            }
        } else {
            contents.push(run.trim().to_string());
        }
    }
    let mut it = contents.into_iter();
    Some(match fmt {
        OutputFormat::Sandwich => {
            let (c_init, reasoning, c_final) =
                (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
            ParsedFields::Sandwich(SandwichOutput { c_init, reasoning, c_final })
        }
        OutputFormat::ReaAns => {
            let (reasoning, answer) = (it.next().unwrap(), it.next().unwrap());
            ParsedFields::ReaAns { reasoning, answer }
        }
        OutputFormat::AnsRea => {
            let (answer, reasoning) = (it.next().unwrap(), it.next().unwrap());
            ParsedFields::AnsRea { answer, reasoning }
        }
    })
}

/// Content of the earliest complete `<answer>…</answer>` span, trimmed.
///
/// Any closing tag after the first opening tag also follows every earlier
/// opening tag, so scanning from the first open is enough.
pub fn first_answer(text: &str) -> Option<String> {
    let open = text.find(ANSWER_OPEN)?;
    let body = &text[open + ANSWER_OPEN.len()..];
    let close = body.find(ANSWER_CLOSE)?;
    Some(body[..close].trim().to_string())
}

/// Render a sandwich output in canonical strict form.
pub fn serialize_sandwich(out: &SandwichOutput) -> String {
    format!(
        "{ANSWER_OPEN}{}{ANSWER_CLOSE}\n{REASONING_OPEN}{}{REASONING_CLOSE}\n{ANSWER_OPEN}{}{ANSWER_CLOSE}",
        out.c_init, out.reasoning, out.c_final
    )
}

/// Rebuild a strict reasoning-answer trace as sandwich-format text with the
/// answer duplicated as both corrections and the reasoning kept verbatim.
pub fn restructure_to_sandwich(parsed: &ParseResult) -> Result<String, FormatError> {
    match &parsed.outcome {
        ParseOutcome::StrictOk(ParsedFields::ReaAns { reasoning, answer }) => {
            Ok(serialize_sandwich(&SandwichOutput {
                c_init: answer.clone(),
                reasoning: reasoning.clone(),
                c_final: answer.clone(),
            }))
        }
        ParseOutcome::StrictOk(_) => Err(FormatError::NotStrictReaAns("a different strict format")),
        ParseOutcome::PartialAnswer(_) => Err(FormatError::NotStrictReaAns("a partial answer")),
        ParseOutcome::NoAnswer => Err(FormatError::NotStrictReaAns("no answer")),
    }
}

const PLACEHOLDER: &str = "[original query]";

const REA_ANS_TEMPLATE: &str = "You are a Chinese text error correction tool that can detect and correct errors in the text. Please check the errors in the following text, correct them, modify only the erroneous parts while keeping the original sentence structure as much as possible, provide your reasoning process, and output the corrected version. Please strictly use the following format for your reply: <reasoning> (briefly analyze the location, type, and basis of the error) </reasoning>\n<answer> (output the corrected full text) </answer>. [original query]";

const ANS_REA_TEMPLATE: &str = "You are a Chinese text error correction tool that can detect and correct errors in the text. Please check the errors in the following text, correct them, modify only the erroneous parts while keeping the original sentence structure as much as possible, first output the corrected version, and then provide your reasoning process. Please strictly use the following format for your reply: <answer> (output the corrected full text) </answer>\n<reasoning> (briefly analyze the location, type, and basis of the error) </reasoning>. [original query]";

const SANDWICH_TEMPLATE: &str = "You are a Chinese text error correction tool that can detect and correct errors in the text. Please check the errors in the following text, correct them, modify only the erroneous parts while keeping the original sentence structure as much as possible, first output the corrected version, then provide your reasoning process, and finally output the corrected version again. Please strictly use the following format for your reply: <answer> (first output the corrected full text) </answer>\n<reasoning> (briefly analyze the location, type, and basis of the error) </reasoning>\n<answer> (output the corrected full text again) </answer>. [original query]";

/// Prompt templates per format; override via config when the deployment
/// language or instructions differ. Each template must contain the
/// `[original query]` placeholder exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub rea_ans: String,
    pub ans_rea: String,
    pub sandwich: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            rea_ans: REA_ANS_TEMPLATE.to_string(),
            ans_rea: ANS_REA_TEMPLATE.to_string(),
            sandwich: SANDWICH_TEMPLATE.to_string(),
        }
    }
}

impl PromptTemplates {
    pub fn render(&self, q_noise: &str, fmt: OutputFormat) -> String {
        let template = match fmt {
            OutputFormat::ReaAns => &self.rea_ans,
            OutputFormat::AnsRea => &self.ans_rea,
            OutputFormat::Sandwich => &self.sandwich,
        };
        template.replacen(PLACEHOLDER, q_noise, 1)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, t) in [
            ("rea_ans", &self.rea_ans),
            ("ans_rea", &self.ans_rea),
            ("sandwich", &self.sandwich),
        ] {
            if t.matches(PLACEHOLDER).count() != 1 {
                return Err(format!(
                    "template {name:?} must contain {PLACEHOLDER:?} exactly once"
                ));
            }
        }
        Ok(())
    }
}

/// Render the default prompt for `fmt` with the noisy query substituted.
pub fn render_prompt(q_noise: &str, fmt: OutputFormat) -> String {
    PromptTemplates::default().render(q_noise, fmt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sandwich(c_init: &str, reasoning: &str, c_final: &str) -> SandwichOutput {
        SandwichOutput {
            c_init: c_init.into(),
            reasoning: reasoning.into(),
            c_final: c_final.into(),
        }
    }

    #[test]
    fn strict_sandwich() {
        let text = "<answer>ab</answer>\n<reasoning>r</reasoning>\n<answer>ab</answer>";
        let p = parse(text, OutputFormat::Sandwich);
        assert_eq!(
            p.outcome,
            ParseOutcome::StrictOk(ParsedFields::Sandwich(sandwich("ab", "r", "ab")))
        );
    }

    #[test]
    fn strict_rea_ans_and_ans_rea() {
        let p = parse("<reasoning>r</reasoning> <answer>ab</answer>", OutputFormat::ReaAns);
        assert_eq!(
            p.outcome,
            ParseOutcome::StrictOk(ParsedFields::ReaAns { reasoning: "r".into(), answer: "ab".into() })
        );
        let p = parse("<answer>ab</answer><reasoning>r</reasoning>", OutputFormat::AnsRea);
        assert_eq!(
            p.outcome,
            ParseOutcome::StrictOk(ParsedFields::AnsRea { answer: "ab".into(), reasoning: "r".into() })
        );
    }

    #[test]
    fn unclosed_answer_is_no_answer() {
        let p = parse("<reasoning>r</reasoning><answer>ab", OutputFormat::ReaAns);
        assert_eq!(p.outcome, ParseOutcome::NoAnswer);
    }

    #[test]
    fn truncated_sandwich_is_partial() {
        let p = parse("<answer>ab</answer><reasoning>r</reas", OutputFormat::Sandwich);
        assert_eq!(p.outcome, ParseOutcome::PartialAnswer("ab".into()));
    }

    #[test]
    fn wrong_order_fails_strict() {
        let p = parse("<answer>ab</answer><reasoning>r</reasoning>", OutputFormat::Sandwich);
        assert_eq!(p.outcome, ParseOutcome::PartialAnswer("ab".into()));
    }

    #[test]
    fn extra_text_outside_tags_fails_strict() {
        let text = "ok <answer>ab</answer>\n<reasoning>r</reasoning>\n<answer>ab</answer>";
        assert!(!parse(text, OutputFormat::Sandwich).is_strict());
        let text = "<answer>ab</answer>\n<reasoning>r</reasoning>\n<answer>ab</answer> done";
        assert!(!parse(text, OutputFormat::Sandwich).is_strict());
    }

    #[test]
    fn repeated_tags_fail_strict() {
        let text = "<answer>a</answer><answer>b</answer><reasoning>r</reasoning><answer>a</answer>";
        assert!(!parse(text, OutputFormat::Sandwich).is_strict());
    }

    #[test]
    fn nested_tags_fail_strict() {
        let text = "<answer>a<answer>b</answer></answer>\n<reasoning>r</reasoning>\n<answer>a</answer>";
        assert!(!parse(text, OutputFormat::Sandwich).is_strict());
    }

    #[test]
    fn inner_whitespace_is_trimmed() {
        let text = "<answer> ab </answer><reasoning>\nr\n</reasoning><answer>ab\t</answer>";
        let p = parse(text, OutputFormat::Sandwich);
        assert_eq!(p.sandwich(), Some(&sandwich("ab", "r", "ab")));
    }

    #[test]
    fn first_answer_takes_earliest() {
        assert_eq!(first_answer("<answer>a</answer>…<answer>b</answer>"), Some("a".into()));
        assert_eq!(first_answer("no tags here"), None);
        assert_eq!(first_answer("<reasoning>thinking about it"), None);
        assert_eq!(first_answer("<answer>cut off"), None);
    }

    #[test]
    fn strict_sandwich_first_answer_is_c_init() {
        let text = "<answer>x</answer><reasoning>r</reasoning><answer>y</answer>";
        let p = parse(text, OutputFormat::Sandwich);
        assert_eq!(p.first_answer(), Some("x"));
        assert_eq!(first_answer(text).as_deref(), Some("x"));
    }

    #[test]
    fn restructure_duplicates_answer() {
        let p = parse("<reasoning>r</reasoning>\n<answer>ab</answer>", OutputFormat::ReaAns);
        let text = restructure_to_sandwich(&p).unwrap();
        assert_eq!(text, "<answer>ab</answer>\n<reasoning>r</reasoning>\n<answer>ab</answer>");
        let back = parse(&text, OutputFormat::Sandwich);
        let s = back.sandwich().unwrap();
        assert_eq!(s.c_init, s.c_final);
        assert_eq!(s.reasoning, "r");
    }

    #[test]
    fn restructure_rejects_non_strict() {
        let p = parse("<answer>ab</answer>", OutputFormat::ReaAns);
        assert!(restructure_to_sandwich(&p).is_err());
        let p = parse("<answer>a</answer><reasoning>r</reasoning>", OutputFormat::AnsRea);
        assert!(restructure_to_sandwich(&p).is_err());
    }

    #[test]
    fn serialize_parse_identity() {
        let out = sandwich("红酒杯", "the second unit was confused", "红酒杯");
        let text = serialize_sandwich(&out);
        assert_eq!(parse(&text, OutputFormat::Sandwich).sandwich(), Some(&out));
    }

    #[test]
    fn prompts_embed_query_once() {
        for fmt in OutputFormat::ALL {
            let p = render_prompt("qz17", fmt);
            assert_eq!(p.matches("qz17").count(), 1, "{fmt}");
            assert!(!p.contains(PLACEHOLDER));
        }
        // Reasoning tag comes first only in the rea-ans template.
        let p = render_prompt("abc", OutputFormat::ReaAns);
        assert!(p.find(REASONING_OPEN).unwrap() < p.find(ANSWER_OPEN).unwrap());
        let p = render_prompt("abc", OutputFormat::Sandwich);
        assert!(p.find(ANSWER_OPEN).unwrap() < p.find(REASONING_OPEN).unwrap());
        // Empty slot is allowed; the caller validates queries.
        let p = render_prompt("", OutputFormat::AnsRea);
        assert!(!p.contains(PLACEHOLDER));
    }

    #[test]
    fn template_validation() {
        assert!(PromptTemplates::default().validate().is_ok());
        let broken = PromptTemplates {
            rea_ans: "no placeholder".into(),
            ..PromptTemplates::default()
        };
        assert!(broken.validate().is_err());
    }
}
