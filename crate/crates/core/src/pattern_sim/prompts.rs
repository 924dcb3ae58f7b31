//! The five in-context prompt templates used to simulate NLI and STS
//! similarity patterns, rendered with three examples each.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::source::{ExamplePair, GenerationKind, PatternKind, EXAMPLES_PER_PROMPT};
use crate::error::{Error, Result};

struct Template {
    instruction: &'static str,
    examples_intro: &'static str,
    input_label: &'static str,
    output_label: &'static str,
    /// Extra text after the third example's label.
    third_example_note: Option<&'static str>,
    closing: &'static str,
}

const NLI_POSITIVE: Template = Template {
    instruction: "When the user enters a premise text, please generate a hypothesis text that stands in an entailment relationship to the given premise.",
    examples_intro: "In the following illustrative examples, the Hypothesis is a logical entailment of the Premise:",
    input_label: "Premise",
    output_label: "Hypothesis",
    third_example_note: None,
    closing: "Generate the hypothesis directly without any other interpretation. The generated hypothesis should be a logical inference from the information available in the premise. In other words, if the premise is true, the hypothesis must also be true.",
};

const NLI_NEGATIVE: Template = Template {
    instruction: "When the user enters a premise text, please generate a hypothesis text that presents a contradiction to the information provided in the given premise.",
    examples_intro: "In the following illustrative examples, The hypothesis logically contradicts the Premise:",
    input_label: "Premise",
    output_label: "Hypothesis",
    third_example_note: None,
    closing: "Generate the hypothesis directly without any other interpretation. The hypothesis should contradict the information given in the premise. This means the premise and hypothesis cannot both be true at the same time.",
};

const STS_POSITIVE: Template = Template {
    instruction: "Your task is to generate a new sentence that is semantically similar to the user's input sentence.",
    examples_intro: "In the following illustrative examples, Sentence 1 and Sentence 2 are semantically similar:",
    input_label: "Sentence 1",
    output_label: "Sentence 2",
    third_example_note: Some("Sentence 2 is generated based on Sentence 1."),
    closing: "Generate the new sentence directly without any other interpretation, and make sure it maintains the same information as the original input sentence.",
};

const STS_INTERMEDIATE: Template = Template {
    instruction: "Your task is to generate a revised sentence by omitting certain details in the user's input sentence.",
    examples_intro: "In the following illustrative examples, Sentence 2 is created by omitting details from Sentence 1:",
    input_label: "Sentence 1",
    output_label: "Sentence 2",
    third_example_note: None,
    closing: "Generate the revised sentence directly without any other interpretation, and make sure that it contains significantly fewer details than the original input sentence.",
};

const STS_NEGATIVE: Template = Template {
    instruction: "Your task is to generate a new sentence that conveys a distinct or even contradictory meaning compared to the user's input sentence.",
    examples_intro: "In the following illustrative examples, Sentence 2 is generated to convey distinct or contradictory meaning compared to Sentence 1:",
    input_label: "Sentence 1",
    output_label: "Sentence 2",
    third_example_note: None,
    closing: "Generate the new sentence directly without any other interpretation.",
};

fn template_for(kind: GenerationKind, pattern: PatternKind) -> Result<&'static Template> {
    match (pattern, kind) {
        (PatternKind::Nli, GenerationKind::Positive) => Ok(&NLI_POSITIVE),
        (PatternKind::Nli, GenerationKind::Negative) => Ok(&NLI_NEGATIVE),
        (PatternKind::Nli, GenerationKind::Intermediate) => Err(Error::Unsupported(
            "there is no intermediate-sentence prompt for NLI patterns".into(),
        )),
        (PatternKind::Sts, GenerationKind::Positive) => Ok(&STS_POSITIVE),
        (PatternKind::Sts, GenerationKind::Intermediate) => Ok(&STS_INTERMEDIATE),
        (PatternKind::Sts, GenerationKind::Negative) => Ok(&STS_NEGATIVE),
    }
}

/// Renders the prompt for `(kind, pattern)` with `examples` spliced in order.
pub fn build_prompt(
    kind: GenerationKind,
    pattern: PatternKind,
    examples: &[ExamplePair],
) -> Result<String> {
    let t = template_for(kind, pattern)?;
    if examples.len() != EXAMPLES_PER_PROMPT {
        return Err(Error::Argument(format!(
            "a prompt takes exactly {EXAMPLES_PER_PROMPT} examples, got {}",
            examples.len()
        )));
    }
    let mut out = format!("{}\n\n{}\n", t.instruction, t.examples_intro);
    for (i, ex) in examples.iter().enumerate() {
        out.push_str(&format!("- Example {}:", i + 1));
        if let (2, Some(note)) = (i, t.third_example_note) {
            out.push(' ');
            out.push_str(note);
        }
        out.push_str(&format!(
            "\n  - {}: {}\n  - {}: {}\n",
            t.input_label, ex.input, t.output_label, ex.output
        ));
    }
    out.push('\n');
    out.push_str(t.closing);
    Ok(out)
}

/// A rendered prompt together with the examples it embeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub role_instructions: String,
    pub examples: [ExamplePair; EXAMPLES_PER_PROMPT],
    pub generation_kind: GenerationKind,
    pub pattern: PatternKind,
}

impl PromptBundle {
    pub fn new(
        kind: GenerationKind,
        pattern: PatternKind,
        examples: [ExamplePair; EXAMPLES_PER_PROMPT],
    ) -> Result<Self> {
        Ok(PromptBundle {
            role_instructions: build_prompt(kind, pattern, &examples)?,
            examples,
            generation_kind: kind,
            pattern,
        })
    }

    /// Hex SHA-256 of the rendered prompt.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.role_instructions.as_bytes()))
    }
}

/// The bundles used for one simulation run; fixed for every anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSet {
    pub pattern: PatternKind,
    pub positive: PromptBundle,
    pub intermediate: Option<PromptBundle>,
    pub negative: PromptBundle,
}

impl PromptSet {
    pub fn bundles(&self) -> impl Iterator<Item = &PromptBundle> {
        [
            Some(&self.positive),
            self.intermediate.as_ref(),
            Some(&self.negative),
        ]
        .into_iter()
        .flatten()
    }
}
