//! LLM-driven generation of positives, intermediates and hard negatives.

pub mod client;
pub mod dataset;
pub mod generate;
pub mod mock;
pub mod prompts;
pub mod source;

pub use client::{ChatRequest, ClientError, HttpChatClient, LlmClient, RetryPolicy};
pub use dataset::{
    assemble_hybrid, read_corpus, DataDomain, HybridDataset, Origin, Provenance, QuadrupleExample,
};
pub use generate::{
    build_prompt_set, generate_dataset, generate_quadruple, sanitize_output, GenerationConfig,
    GenerationOutput, GenerationReport, QuadrupleOutcome,
};
pub use mock::{mock_generate, MockClient};
pub use prompts::{build_prompt, PromptBundle, PromptSet};
pub use source::{
    sample_pattern_examples, ExamplePair, GenerationKind, NliRecord, PatternKind, PatternSource,
    StsRecord,
};
