//! Request payloads to [`Document`]s. All offsets count Unicode scalar values.

use thiserror::Error;

pub const OPEN_TAG: &str = "<entity>";
pub const CLOSE_TAG: &str = "</entity>";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    /// `position` is a character offset into the raw input.
    #[error("unbalanced <entity> tag at character {position}")]
    UnbalancedTag { position: usize },
    #[error("empty <entity> annotation at character {position}")]
    EmptyMention { position: usize },
    #[error("span ({start}, {length}) is outside the text of {text_len} characters")]
    SpanOutOfBounds {
        start: usize,
        length: usize,
        text_len: usize,
    },
    #[error("spans ({0}, {1}) and ({2}, {3}) overlap")]
    OverlappingSpans(usize, usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub start: usize,
    pub length: usize,
    pub surface: String,
}

impl Mention {
    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub text: String,
    pub mentions: Vec<Mention>,
}

impl Document {
    /// Wraps every mention in `<entity>` tags again.
    pub fn to_tagged(&self) -> String {
        let mut out = String::with_capacity(self.text.len() + self.mentions.len() * 17);
        let mut next = self.mentions.iter().peekable();
        for (i, c) in self.text.chars().enumerate() {
            if let Some(m) = next.peek() {
                if m.start == i {
                    out.push_str(OPEN_TAG);
                }
            }
            out.push(c);
            if let Some(m) = next.peek() {
                if m.end() == i + 1 {
                    out.push_str(CLOSE_TAG);
                    next.next();
                }
            }
        }
        out
    }
}

/// Strips flat `<entity>...</entity>` annotations, recording each as a mention.
pub fn parse_entity_tagged_text(raw: &str) -> Result<Document, TextError> {
    let mut text = String::with_capacity(raw.len());
    let mut mentions = Vec::new();
    // (char offset in raw, char offset in stripped text) of the open tag
    let mut open: Option<(usize, usize)> = None;
    let mut text_chars = 0usize;
    let mut raw_chars = 0usize;
    let mut rest = raw;

    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix(OPEN_TAG) {
            if open.is_some() {
                return Err(TextError::UnbalancedTag { position: raw_chars });
            }
            open = Some((raw_chars, text_chars));
            raw_chars += OPEN_TAG.len();
            rest = after;
        } else if let Some(after) = rest.strip_prefix(CLOSE_TAG) {
            let Some((open_at, start)) = open.take() else {
                return Err(TextError::UnbalancedTag { position: raw_chars });
            };
            if text_chars == start {
                return Err(TextError::EmptyMention { position: open_at });
            }
            let surface: String = text.chars().skip(start).collect();
            mentions.push(Mention {
                start,
                length: text_chars - start,
                surface,
            });
            raw_chars += CLOSE_TAG.len();
            rest = after;
        } else {
            let c = rest.chars().next().unwrap();
            text.push(c);
            text_chars += 1;
            raw_chars += 1;
            rest = &rest[c.len_utf8()..];
        }
    }
    if let Some((position, _)) = open {
        return Err(TextError::UnbalancedTag { position });
    }
    Ok(Document { text, mentions })
}

/// Builds a document from plain text and explicit (start, length) spans.
/// Spans may come in any order; the result is sorted by start.
pub fn parse_spans_payload(text: &str, spans: &[(usize, usize)]) -> Result<Document, TextError> {
    let chars: Vec<char> = text.chars().collect();
    let mut sorted = spans.to_vec();
    sorted.sort();
    for &(start, length) in &sorted {
        if length == 0 || start.checked_add(length).is_none_or(|end| end > chars.len()) {
            return Err(TextError::SpanOutOfBounds {
                start,
                length,
                text_len: chars.len(),
            });
        }
    }
    for pair in sorted.windows(2) {
        let ((s1, l1), (s2, l2)) = (pair[0], pair[1]);
        if s1 + l1 > s2 {
            return Err(TextError::OverlappingSpans(s1, l1, s2, l2));
        }
    }
    let mentions = sorted
        .into_iter()
        .map(|(start, length)| Mention {
            start,
            length,
            surface: chars[start..start + length].iter().collect(),
        })
        .collect();
    Ok(Document {
        text: text.to_string(),
        mentions,
    })
}
