//! Transcript ingestion: SubRip, WebVTT and plain JSON.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::summary::segment::segment_sentences;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    /// Start time in seconds.
    pub t: f64,
    pub u: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub source_id: String,
    pub segments: Vec<TranscriptSegment>,
}

/// A sentence located in a transcript. Sentences never span segments, so
/// `t` is the start time of the containing segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub index: usize,
    pub segment: usize,
    pub t: f64,
    pub text: String,
}

impl Transcript {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn sentences(&self, min_tokens: usize) -> Vec<Sentence> {
        let mut out = Vec::new();
        for seg in &self.segments {
            for span in segment_sentences(&seg.u, min_tokens) {
                out.push(Sentence {
                    index: out.len(),
                    segment: seg.index,
                    t: seg.t,
                    text: span.text,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranscriptFormat {
    Srt,
    Vtt,
    #[serde(rename = "json")]
    PlainJson,
}

impl FromStr for TranscriptFormat {
    type Err = TranscriptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "srt" => Ok(Self::Srt),
            "vtt" | "webvtt" => Ok(Self::Vtt),
            "json" | "plain_json" => Ok(Self::PlainJson),
            other => Err(TranscriptError::UnknownFormat(other.to_string())),
        }
    }
}

impl TranscriptFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranscriptError {
    #[error("transcript is not valid UTF-8")]
    Encoding,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: cue starting at {start:.3}s begins before the previous cue ends ({previous_end:.3}s)")]
    Ordering { line: usize, start: f64, previous_end: f64 },
    #[error("invalid JSON transcript: {0}")]
    Json(String),
    #[error("unknown transcript format {0:?}")]
    UnknownFormat(String),
}

/// Parses a transcript. Cue timing is converted exactly (integer
/// milliseconds), multi-line cue text is joined with single spaces and
/// empty cues are dropped.
pub fn parse_transcript(bytes: &[u8], format: TranscriptFormat, source_id: &str) -> Result<Transcript, TranscriptError> {
    let text = std::str::from_utf8(bytes).map_err(|_| TranscriptError::Encoding)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let cues = match format {
        TranscriptFormat::Srt => parse_cues(text, false)?,
        TranscriptFormat::Vtt => parse_cues(text, true)?,
        TranscriptFormat::PlainJson => parse_json(text)?,
    };

    let mut segments = Vec::with_capacity(cues.len());
    let mut previous: Option<(f64, f64)> = None;
    for cue in cues {
        if let Some((prev_start, prev_end)) = previous {
            if cue.start < prev_start || cue.start < prev_end {
                return Err(TranscriptError::Ordering {
                    line: cue.line,
                    start: cue.start,
                    previous_end: prev_end.max(prev_start),
                });
            }
        }
        previous = Some((cue.start, cue.end.unwrap_or(cue.start)));
        let u = cue.text.split_whitespace().collect::<Vec<_>>().join(" ");
        if u.is_empty() {
            continue;
        }
        segments.push(TranscriptSegment {
            t: cue.start,
            u,
            index: segments.len(),
        });
    }
    Ok(Transcript {
        source_id: source_id.to_string(),
        segments,
    })
}

struct Cue {
    line: usize,
    start: f64,
    end: Option<f64>,
    text: String,
}

fn parse_cues(text: &str, webvtt: bool) -> Result<Vec<Cue>, TranscriptError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    if webvtt {
        let first = lines.first().map(|l| l.trim()).unwrap_or("");
        if !first.starts_with("WEBVTT") {
            return Err(TranscriptError::Parse {
                line: 1,
                reason: "missing WEBVTT header".into(),
            });
        }
        // header block runs to the first blank line
        while i < lines.len() && !lines[i].trim().is_empty() {
            i += 1;
        }
    }

    let mut cues = Vec::new();
    while i < lines.len() {
        while i < lines.len() && lines[i].trim().is_empty() {
            i += 1;
        }
        if i >= lines.len() {
            break;
        }
        let block_start = i;
        let mut block_end = i;
        while block_end < lines.len() && !lines[block_end].trim().is_empty() {
            block_end += 1;
        }
        let block = &lines[block_start..block_end];
        i = block_end;

        if webvtt {
            let head = block[0].trim_start();
            if head.starts_with("NOTE") || head == "STYLE" || head == "REGION" {
                continue;
            }
        }
        let Some(timing_at) = block.iter().position(|l| l.contains("-->")) else {
            return Err(TranscriptError::Parse {
                line: block_start + 1,
                reason: "cue without a timing line".into(),
            });
        };
        if timing_at > 1 {
            return Err(TranscriptError::Parse {
                line: block_start + timing_at + 1,
                reason: "timing line must be the first or second line of a cue".into(),
            });
        }
        let line_no = block_start + timing_at + 1;
        let (start, end) = parse_timing(block[timing_at], line_no, webvtt)?;
        let body: Vec<String> = block[timing_at + 1..]
            .iter()
            .map(|l| if webvtt { strip_tags(l) } else { l.to_string() })
            .collect();
        cues.push(Cue {
            line: line_no,
            start,
            end: Some(end),
            text: body.join(" "),
        });
    }
    Ok(cues)
}

fn parse_timing(line: &str, line_no: usize, webvtt: bool) -> Result<(f64, f64), TranscriptError> {
    let (lhs, rhs) = line.split_once("-->").expect("caller checked for the arrow");
    let rhs = rhs.split_whitespace().next().unwrap_or("");
    let start = parse_timestamp(lhs.trim(), webvtt).ok_or_else(|| bad_timestamp(line_no, lhs.trim()))?;
    let end = parse_timestamp(rhs, webvtt).ok_or_else(|| bad_timestamp(line_no, rhs))?;
    if end < start {
        return Err(TranscriptError::Parse {
            line: line_no,
            reason: "cue ends before it starts".into(),
        });
    }
    Ok((start, end))
}

fn bad_timestamp(line: usize, raw: &str) -> TranscriptError {
    TranscriptError::Parse {
        line,
        reason: format!("malformed timestamp {raw:?}"),
    }
}

/// `HH:MM:SS,mmm` (SubRip) or `[HH:]MM:SS.mmm` (WebVTT) to seconds.
fn parse_timestamp(raw: &str, webvtt: bool) -> Option<f64> {
    let sep = if webvtt { '.' } else { ',' };
    let (clock, millis) = raw.split_once(sep)?;
    if millis.len() != 3 || !millis.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let parts: Vec<&str> = clock.split(':').collect();
    let (h, m, s) = match parts.as_slice() {
        [h, m, s] => (*h, *m, *s),
        [m, s] if webvtt => ("0", *m, *s),
        _ => return None,
    };
    let num = |v: &str, width: Option<usize>| -> Option<u64> {
        if v.is_empty() || !v.bytes().all(|b| b.is_ascii_digit()) || width.is_some_and(|w| v.len() != w) {
            return None;
        }
        v.parse().ok()
    };
    let h = num(h, None)?;
    let m = num(m, Some(2))?;
    let s = num(s, Some(2))?;
    if m >= 60 || s >= 60 {
        return None;
    }
    let ms = ((h * 60 + m) * 60 + s) * 1000 + millis.parse::<u64>().ok()?;
    Some(ms as f64 / 1000.0)
}

fn strip_tags(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut depth = false;
    for c in line.chars() {
        match c {
            '<' => depth = true,
            '>' if depth => depth = false,
            _ if !depth => out.push(c),
            _ => {}
        }
    }
    out
}

#[derive(Deserialize)]
struct JsonSegment {
    t: f64,
    u: String,
}

fn parse_json(text: &str) -> Result<Vec<Cue>, TranscriptError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let rows: Vec<JsonSegment> = serde_json::from_str(text).map_err(|e| TranscriptError::Json(e.to_string()))?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            if !(r.t.is_finite() && r.t >= 0.0) {
                return Err(TranscriptError::Parse {
                    line: i + 1,
                    reason: format!("segment {i}: t must be finite and >= 0"),
                });
            }
            Ok(Cue {
                line: i + 1,
                start: r.t,
                end: None,
                text: r.u,
            })
        })
        .collect()
}
