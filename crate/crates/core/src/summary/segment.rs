//! Sentence segmentation.

use serde::{Deserialize, Serialize};

pub const DEFAULT_MIN_SENTENCE_TOKENS: usize = 3;

/// A sentence and its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Splits `text` after `.`, `!` or `?` when followed by whitespace and an
/// uppercase letter, or by the end of the text. Sentences with fewer than
/// `min_tokens` whitespace tokens are folded into the previous sentence.
pub fn segment_sentences(text: &str, min_tokens: usize) -> Vec<SentenceSpan> {
    let mut raw: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (i, &(pos, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = pos + c.len_utf8();
        let rest = &chars[i + 1..];
        let ws = rest.iter().take_while(|(_, c)| c.is_whitespace()).count();
        let boundary = match rest.get(ws) {
            None => true,
            Some((_, next)) => ws > 0 && next.is_uppercase(),
        };
        if boundary {
            raw.push((start, end));
            start = rest.get(ws).map_or(text.len(), |(p, _)| *p);
        }
    }
    if start < text.len() {
        raw.push((start, text.len()));
    }

    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in raw {
        let slice = text[s..e].trim();
        if slice.is_empty() {
            continue;
        }
        let tokens = slice.split_whitespace().count();
        match merged.last_mut() {
            Some(last) if tokens < min_tokens => last.1 = e,
            _ => merged.push((s, e)),
        }
    }

    merged
        .into_iter()
        .map(|(s, e)| {
            let slice = &text[s..e];
            let lead = slice.len() - slice.trim_start().len();
            let trimmed = slice.trim();
            SentenceSpan {
                start: s + lead,
                end: s + lead + trimmed.len(),
                text: trimmed.to_string(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<String> {
        segment_sentences(s, DEFAULT_MIN_SENTENCE_TOKENS)
            .into_iter()
            .map(|s| s.text)
            .collect()
    }

    #[test]
    fn splits_on_terminal_punctuation() {
        assert_eq!(texts("A is B. C is D."), vec!["A is B.", "C is D."]);
        assert_eq!(texts("Is it hot? Yes it is! Then go."), vec!["Is it hot?", "Yes it is! Then go."]);
        assert!(texts("").is_empty());
        assert!(texts("   ").is_empty());
    }

    #[test]
    fn decimals_and_lowercase_continuations_do_not_split() {
        assert_eq!(texts("Pi is 3.14 approximately."), vec!["Pi is 3.14 approximately."]);
        assert_eq!(texts("See e.g. the next slide."), vec!["See e.g. the next slide."]);
    }

    #[test]
    fn short_sentences_merge_backwards() {
        assert_eq!(texts("Entropy grows over time. Right. Next we go on."), vec![
            "Entropy grows over time. Right.",
            "Next we go on."
        ]);
        // nothing to merge into
        assert_eq!(texts("Okay. Entropy grows over time."), vec!["Okay.", "Entropy grows over time."]);
    }

    #[test]
    fn offsets_point_into_source() {
        let src = "  First one here.  Second one here";
        for s in segment_sentences(src, 3) {
            assert_eq!(&src[s.start..s.end], s.text);
        }
    }
}
