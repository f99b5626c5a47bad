//! The canonical question bank file.
//!
//! ```json
//! {
//!   "schema": "pal-bank/1",
//!   "source_id": "lecture-01",
//!   "questions": [
//!     {
//!       "q": "What is entropy?",
//!       "a": {"options": ["...", "..."], "correct_index": 1},
//!       "d": "easy",
//!       "t": 12.500,
//!       "c": "..."
//!     }
//!   ]
//! }
//! ```
//!
//! Questions are sorted by `t`, keys appear in the order above and `t` is
//! written with exactly three decimals, so equal inputs serialize to equal
//! bytes.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::level::Difficulty;
use crate::model::QuestionId;

pub const BANK_SCHEMA: &str = "pal-bank/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerKey {
    pub options: Vec<String>,
    pub correct_index: usize,
}

/// One `(q, a, d, t, c)` tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub q: String,
    pub a: AnswerKey,
    pub d: Difficulty,
    /// Lecture timestamp in seconds.
    pub t: f64,
    pub c: String,
}

impl QuestionRecord {
    /// Invariant violations, with paths relative to the record.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if self.q.trim().is_empty() {
            out.push(("q".into(), "stem must not be empty".into()));
        }
        if self.a.options.len() < 2 {
            out.push(("a.options".into(), "need at least two options".into()));
        }
        let mut seen = HashSet::new();
        for (i, o) in self.a.options.iter().enumerate() {
            if !seen.insert(o.as_str()) {
                out.push((format!("a.options[{i}]"), "duplicate option".into()));
            }
        }
        if self.a.correct_index >= self.a.options.len() {
            out.push((
                "a.correct_index".into(),
                format!("{} is out of range for {} options", self.a.correct_index, self.a.options.len()),
            ));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            out.push(("t".into(), "timestamp must be finite and >= 0".into()));
        }
        out
    }

    pub fn correct_option(&self) -> Option<&str> {
        self.a.options.get(self.a.correct_index).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankFile {
    pub schema: String,
    pub source_id: String,
    pub questions: Vec<QuestionRecord>,
}

impl BankFile {
    pub fn get(&self, id: QuestionId) -> Option<&QuestionRecord> {
        self.questions.get(id.0 as usize)
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    /// Canonical bytes of this bank.
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        write_canonical(&self.source_id, &self.questions).into_bytes()
    }

    /// All invariant violations of an already-typed bank.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.schema != BANK_SCHEMA {
            out.push(Violation::new("schema", format!("unsupported schema {:?}", self.schema)));
            return out;
        }
        check_records(&self.questions, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

impl Violation {
    fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BankError {
    #[error("duplicate question {q:?} at t = {t:.3}")]
    DuplicateQuestion { t: f64, q: String },
    #[error("invalid question record: {0}")]
    InvalidRecord(Violation),
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// Serializes `records` as a canonical bank file.
pub fn assemble_bank(records: &[QuestionRecord], source_id: &str) -> Result<Vec<u8>, BankError> {
    let mut sorted: Vec<QuestionRecord> = records.to_vec();
    for (i, r) in sorted.iter_mut().enumerate() {
        r.t = round_ms(r.t);
        if let Some((path, reason)) = r.violations().into_iter().next() {
            return Err(BankError::InvalidRecord(Violation::new(format!("records[{i}].{path}"), reason)));
        }
    }
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut seen = HashSet::new();
    for r in &sorted {
        if !seen.insert((r.t.to_bits(), r.q.as_str())) {
            return Err(BankError::DuplicateQuestion { t: r.t, q: r.q.clone() });
        }
    }
    Ok(write_canonical(source_id, &sorted).into_bytes())
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn write_canonical(source_id: &str, questions: &[QuestionRecord]) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"schema\": {},", json_str(BANK_SCHEMA));
    let _ = writeln!(out, "  \"source_id\": {},", json_str(source_id));
    if questions.is_empty() {
        out.push_str("  \"questions\": []\n}\n");
        return out;
    }
    out.push_str("  \"questions\": [\n");
    for (i, r) in questions.iter().enumerate() {
        let options: Vec<String> = r.a.options.iter().map(|o| json_str(o)).collect();
        out.push_str("    {\n");
        let _ = writeln!(out, "      \"q\": {},", json_str(&r.q));
        let _ = writeln!(
            out,
            "      \"a\": {{\"options\": [{}], \"correct_index\": {}}},",
            options.join(", "),
            r.a.correct_index
        );
        let _ = writeln!(out, "      \"d\": \"{}\",", r.d);
        let _ = writeln!(out, "      \"t\": {:.3},", r.t);
        let _ = writeln!(out, "      \"c\": {}", json_str(&r.c));
        out.push_str(if i + 1 == questions.len() { "    }\n" } else { "    },\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

fn check_records(records: &[QuestionRecord], out: &mut Vec<Violation>) {
    let mut previous_t: Option<f64> = None;
    let mut seen = HashSet::new();
    for (i, r) in records.iter().enumerate() {
        for (path, reason) in r.violations() {
            out.push(Violation::new(format!("questions[{i}].{path}"), reason));
        }
        if let Some(p) = previous_t {
            if r.t < p {
                out.push(Violation::new(format!("questions[{i}].t"), "timestamps must be non-decreasing"));
            }
        }
        previous_t = Some(r.t);
        if !seen.insert((r.t.to_bits(), r.q.as_str())) {
            out.push(Violation::new(format!("questions[{i}]"), "duplicate (t, q) pair"));
        }
    }
}

/// Parses and checks a bank file, collecting every violation.
///
/// An unknown schema version short-circuits: field checks are only
/// meaningful for a known layout.
pub fn validate_bank(bytes: &[u8]) -> Result<BankFile, Vec<Violation>> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| vec![Violation::new("$", format!("invalid JSON: {e}"))])?;
    let Some(obj) = root.as_object() else {
        return Err(vec![Violation::new("$", "bank must be a JSON object")]);
    };
    match obj.get("schema").and_then(Value::as_str) {
        Some(BANK_SCHEMA) => {}
        Some(other) => return Err(vec![Violation::new("schema", format!("unsupported schema {other:?}"))]),
        None => return Err(vec![Violation::new("schema", "missing schema version")]),
    }

    let mut errors = Vec::new();
    let source_id = match obj.get("source_id").and_then(Value::as_str) {
        Some(s) => s.to_string(),
        None => {
            errors.push(Violation::new("source_id", "expected a string"));
            String::new()
        }
    };
    let mut questions = Vec::new();
    match obj.get("questions").and_then(Value::as_array) {
        None => errors.push(Violation::new("questions", "expected an array")),
        Some(items) => {
            for (i, item) in items.iter().enumerate() {
                if let Some(r) = parse_record(item, &format!("questions[{i}]"), &mut errors) {
                    questions.push(r);
                }
            }
        }
    }
    if errors.is_empty() {
        check_records(&questions, &mut errors);
    }
    if errors.is_empty() {
        Ok(BankFile {
            schema: BANK_SCHEMA.to_string(),
            source_id,
            questions,
        })
    } else {
        Err(errors)
    }
}

fn parse_record(v: &Value, path: &str, errors: &mut Vec<Violation>) -> Option<QuestionRecord> {
    let before = errors.len();
    let Some(obj) = v.as_object() else {
        errors.push(Violation::new(path, "expected an object"));
        return None;
    };
    let mut string_field = |key: &str| -> String {
        match obj.get(key).and_then(Value::as_str) {
            Some(s) => s.to_string(),
            None => {
                errors.push(Violation::new(format!("{path}.{key}"), "expected a string"));
                String::new()
            }
        }
    };
    let q = string_field("q");
    let c = string_field("c");

    let d = match obj.get("d").and_then(Value::as_str).map(str::parse::<Difficulty>) {
        Some(Ok(d)) if obj["d"].as_str() == Some(d.as_str()) => Some(d),
        _ => {
            errors.push(Violation::new(format!("{path}.d"), "expected \"easy\", \"medium\" or \"hard\""));
            None
        }
    };
    let t = match obj.get("t").and_then(Value::as_f64) {
        Some(t) => Some(t),
        None => {
            errors.push(Violation::new(format!("{path}.t"), "expected a number"));
            None
        }
    };

    let mut options = Vec::new();
    let mut correct_index = None;
    match obj.get("a").and_then(Value::as_object) {
        None => errors.push(Violation::new(format!("{path}.a"), "expected an object")),
        Some(a) => {
            match a.get("options").and_then(Value::as_array) {
                None => errors.push(Violation::new(format!("{path}.a.options"), "expected an array")),
                Some(opts) => {
                    for (j, o) in opts.iter().enumerate() {
                        match o.as_str() {
                            Some(s) => options.push(s.to_string()),
                            None => errors.push(Violation::new(format!("{path}.a.options[{j}]"), "expected a string")),
                        }
                    }
                }
            }
            match a.get("correct_index").and_then(Value::as_u64) {
                Some(k) => correct_index = Some(k as usize),
                None => errors.push(Violation::new(
                    format!("{path}.a.correct_index"),
                    "expected a non-negative integer",
                )),
            }
        }
    }

    let record = QuestionRecord {
        q,
        a: AnswerKey {
            options,
            correct_index: correct_index.unwrap_or(0),
        },
        d: d.unwrap_or(Difficulty::Medium),
        t: t.unwrap_or(0.0),
        c,
    };
    if errors.len() > before {
        // still surface invariant breaches on the fields that did parse
        for (p, reason) in record.violations() {
            let typed_ok = match p.as_str() {
                "a.correct_index" => correct_index.is_some(),
                "t" => t.is_some(),
                _ => true,
            };
            if typed_ok {
                errors.push(Violation::new(format!("{path}.{p}"), reason));
            }
        }
        return None;
    }
    Some(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(q: &str, t: f64, correct: usize) -> QuestionRecord {
        QuestionRecord {
            q: q.to_string(),
            a: AnswerKey {
                options: vec!["alpha".into(), "beta \"quoted\"".into(), "gamma".into(), "delta".into()],
                correct_index: correct,
            },
            d: Difficulty::Easy,
            t,
            c: "context\nwith newline".into(),
        }
    }

    #[test]
    fn empty_bank() {
        let bytes = assemble_bank(&[], "lec").unwrap();
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "{\n  \"schema\": \"pal-bank/1\",\n  \"source_id\": \"lec\",\n  \"questions\": []\n}\n"
        );
        assert!(validate_bank(&bytes).unwrap().questions.is_empty());
    }

    #[test]
    fn sorted_and_byte_stable() {
        let recs = vec![record("Second?", 40.0, 1), record("First?", 12.5, 0)];
        let a = assemble_bank(&recs, "lec").unwrap();
        let b = assemble_bank(&recs, "lec").unwrap();
        assert_eq!(a, b);
        let bank = validate_bank(&a).unwrap();
        assert_eq!(bank.questions[0].q, "First?");
        assert!(String::from_utf8(a.clone()).unwrap().contains("\"t\": 12.500,"));
        assert_eq!(bank.to_canonical_bytes(), a);
    }

    #[test]
    fn golden_layout() {
        let bytes = assemble_bank(&[record("What is X?", 3.0, 2)], "s").unwrap();
        let expected = r#"{
  "schema": "pal-bank/1",
  "source_id": "s",
  "questions": [
    {
      "q": "What is X?",
      "a": {"options": ["alpha", "beta \"quoted\"", "gamma", "delta"], "correct_index": 2},
      "d": "easy",
      "t": 3.000,
      "c": "context\nwith newline"
    }
  ]
}
"#;
        assert_eq!(String::from_utf8(bytes).unwrap(), expected);
    }

    #[test]
    fn duplicates_rejected() {
        let recs = vec![record("Same?", 1.0, 0), record("Same?", 1.0, 1)];
        assert!(matches!(assemble_bank(&recs, "x"), Err(BankError::DuplicateQuestion { .. })));
    }

    #[test]
    fn violations_are_collected_with_paths() {
        let bytes = assemble_bank(&[record("A?", 1.0, 0), record("B?", 2.0, 0)], "x").unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let broken = text.replacen("\"correct_index\": 0", "\"correct_index\": 5", 1).replacen("\"d\": \"easy\"", "\"d\": \"brutal\"", 2);
        let errs = validate_bank(broken.as_bytes()).unwrap_err();
        let paths: Vec<&str> = errs.iter().map(|v| v.path.as_str()).collect();
        assert!(paths.contains(&"questions[0].a.correct_index"), "{paths:?}");
        assert!(paths.contains(&"questions[0].d"));
        assert!(paths.contains(&"questions[1].d"));
    }

    #[test]
    fn unknown_schema_is_the_only_error() {
        let errs = validate_bank(br#"{"schema": "pal-bank/9", "questions": 7}"#).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "schema");
        assert_eq!(validate_bank(b"not json").unwrap_err()[0].path, "$");
    }

    #[test]
    fn monotone_time_checked() {
        let json = r#"{"schema":"pal-bank/1","source_id":"x","questions":[
            {"q":"A?","a":{"options":["1","2"],"correct_index":0},"d":"easy","t":5.0,"c":""},
            {"q":"B?","a":{"options":["1","1"],"correct_index":0},"d":"hard","t":4.0,"c":""}]}"#;
        let errs = validate_bank(json.as_bytes()).unwrap_err();
        let paths: Vec<&str> = errs.iter().map(|v| v.path.as_str()).collect();
        assert_eq!(paths, vec!["questions[1].a.options[1]", "questions[1].t"]);
    }

    fn arb_record() -> impl Strategy<Value = QuestionRecord> {
        (
            "[A-Za-z ?\"\\\\é]{1,20}",
            proptest::collection::hash_set("[a-z]{1,6}", 2..5),
            0usize..3,
            0u64..10_000_000,
            ".{0,30}",
        )
            .prop_map(|(q, opts, d, ms, c)| {
                let options: Vec<String> = opts.into_iter().collect();
                QuestionRecord {
                    q: format!("{q}?"),
                    a: AnswerKey { correct_index: ms as usize % options.len(), options },
                    d: Difficulty::from_index(d).unwrap(),
                    t: ms as f64 / 1000.0,
                    c,
                }
            })
    }

    proptest! {
        #[test]
        fn assemble_validate_round_trip(mut recs in proptest::collection::vec(arb_record(), 0..12)) {
            recs.sort_by(|a, b| a.t.total_cmp(&b.t));
            recs.dedup_by(|a, b| a.t == b.t && a.q == b.q);
            let bytes = assemble_bank(&recs, "src").unwrap();
            let bank = validate_bank(&bytes).unwrap();
            prop_assert_eq!(&bank.questions, &recs);
            prop_assert_eq!(bank.to_canonical_bytes(), bytes);
        }
    }
}
