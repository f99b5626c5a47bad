//! Post-lesson summaries: sentence embedding, similarity search and
//! mastery classification.

pub mod classify;
pub mod embed;
pub mod extract;
pub mod segment;
pub mod compose;

pub use classify::{classify, classify_concepts, concept_of, Classification, ConceptClass, ConceptStats};
pub use compose::{compose_summary, transcript_from_bank, LearnerProfile, SummaryConfig, SummaryReport, Synthesizer, TemplateSynthesizer};
pub use embed::{cosine, Embedder, EmbeddingVector, HashedBagEmbedder};
pub use extract::{ExcerptSpan, SemanticMap};
