//! Transcript → question bank compilation.
//!
//! parse → sentences → candidate points → generator → rater → canonical
//! bank file.

pub mod bank;
pub mod candidates;
pub mod generate;
pub mod rate;
pub mod transcript;

pub use bank::{assemble_bank, validate_bank, AnswerKey, BankError, BankFile, QuestionRecord, Violation, BANK_SCHEMA};
pub use candidates::{find_candidate_points, CandidatePoint, PipelineConfig, Trigger};
pub use generate::{ClozeGenerator, QuestionGenerator};
pub use rate::rate_difficulty;
pub use transcript::{parse_transcript, Sentence, Transcript, TranscriptError, TranscriptFormat, TranscriptSegment};

/// Runs the generator over every candidate point, in transcript order.
pub fn compile_records(transcript: &Transcript, config: &PipelineConfig, generator: &dyn QuestionGenerator) -> Vec<QuestionRecord> {
    let sentences = transcript.sentences(config.min_sentence_tokens);
    let mut bank = Vec::new();
    for point in find_candidate_points(&sentences, config) {
        if let Some(record) = generator.generate(&point, &sentences, &bank) {
            let repeat = bank.iter().any(|r: &QuestionRecord| r.t == record.t && r.q == record.q);
            if !repeat {
                bank.push(record);
            }
        }
    }
    bank
}

/// Compiles a transcript into canonical bank bytes with the default cloze
/// backend.
pub fn compile_bank(transcript: &Transcript, config: &PipelineConfig) -> Result<Vec<u8>, BankError> {
    let records = compile_records(transcript, config, &ClozeGenerator);
    assemble_bank(&records, &transcript.source_id)
}
