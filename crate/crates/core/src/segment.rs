//! Rule-based step segmentation for trace and gold texts.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Trace,
    Gold,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Trace, Role::Gold];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Trace => "trace",
            Role::Gold => "gold",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One JSONL row of segmented steps, as consumed by the embedder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSequence {
    #[serde(rename = "id")]
    pub source_id: String,
    pub role: Role,
    pub steps: Vec<String>,
}

impl StepSequence {
    pub fn from_text(source_id: impl Into<String>, role: Role, text: &str) -> Self {
        Self {
            source_id: source_id.into(),
            role,
            steps: segment(text),
        }
    }
}

/// Removes inline-math delimiters, `$`, every backslash and `<think>` tags.
pub fn strip_markers(text: &str) -> String {
    let mut s = text
        .replace("\\(", "")
        .replace("\\)", "")
        .replace("\\[", "")
        .replace("\\]", "")
        .replace('$', "")
        .replace('\\', "");
    // Deleting one tag can splice a new one together, so repeat to a fixed point.
    while s.contains("<think>") {
        s = s.replace("<think>", "");
    }
    s
}

/// Line terminators recognised by Python's `str.splitlines`.
fn is_line_break(c: char) -> bool {
    matches!(
        c,
        '\n' | '\r'
            | '\x0b'
            | '\x0c'
            | '\x1c'
            | '\x1d'
            | '\x1e'
            | '\u{85}'
            | '\u{2028}'
            | '\u{2029}'
    )
}

fn split_lines(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = s.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if is_line_break(c) {
            out.push(&s[start..i]);
            let mut end = i + c.len_utf8();
            if c == '\r' {
                if let Some(&(j, '\n')) = chars.peek() {
                    chars.next();
                    end = j + 1;
                }
            }
            start = end;
        }
    }
    if start < s.len() {
        out.push(&s[start..]);
    }
    out
}

/// Splits wherever a run of whitespace directly follows a `.`; the period
/// stays with the left piece.
fn split_sentences(line: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut prev = None;
    let mut iter = line.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if c.is_whitespace() && prev == Some('.') {
            out.push(&line[start..i]);
            let mut end = i + c.len_utf8();
            while let Some(&(j, w)) = iter.peek() {
                if !w.is_whitespace() {
                    break;
                }
                end = j + w.len_utf8();
                iter.next();
            }
            start = end;
            prev = None;
            continue;
        }
        prev = Some(c);
    }
    out.push(&line[start..]);
    out
}

/// Splits `text` into trimmed, non-empty steps in reading order.
pub fn segment(text: &str) -> Vec<String> {
    if text.is_empty() {
        return Vec::new();
    }
    let clean = strip_markers(text);
    let mut steps = Vec::new();
    for line in split_lines(&clean) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        for piece in split_sentences(line) {
            let piece = piece.trim();
            if !piece.is_empty() {
                steps.push(piece.to_string());
            }
        }
    }
    steps
}
