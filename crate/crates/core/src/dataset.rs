//! Problem corpus parsing, prompt construction, trace generation against an
//! Ollama-style HTTP endpoint, and final-answer extraction.

use std::collections::HashSet;
use std::sync::OnceLock;
use std::thread;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Answer-blind system prompt sent ahead of every problem statement.
pub const SYSTEM_PROMPT: &str = "You are an expert competition mathematician. \
Solve the problem carefully and present a clear, rigorous step-by-step solution. \
Ensure each step is justified and consistent. \
End with the final line formatted exactly as 'Final Answer: <number>'.";

pub const DEFAULT_ENDPOINT: &str = "http://localhost:11434";
pub const ENDPOINT_ENV: &str = "TRACE_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub id: String,
    pub year: i32,
    pub statement: String,
    pub answer: u32,
    pub solutions: Vec<String>,
}

impl ProblemRecord {
    /// Reference solutions joined by a single newline, in corpus order.
    pub fn gold_text(&self) -> String {
        self.solutions.join("\n")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("malformed corpus JSON at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("corpus entry {index}: {message}")]
    Schema { index: usize, message: String },
}

/// Parses a corpus: a top-level JSON array of problem objects.
pub fn parse_corpus(bytes: &[u8]) -> Result<Vec<ProblemRecord>, CorpusError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| CorpusError::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let Value::Array(entries) = value else {
        return Err(CorpusError::Schema {
            index: 0,
            message: "corpus must be a JSON array".into(),
        });
    };
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(entries.len());
    for (index, entry) in entries.iter().enumerate() {
        let schema = |message: String| CorpusError::Schema { index, message };
        let obj = entry
            .as_object()
            .ok_or_else(|| schema("entry is not an object".into()))?;
        let field = |name: &str| {
            obj.get(name)
                .ok_or_else(|| schema(format!("missing required field \"{name}\"")))
        };
        let id = field("id")?
            .as_str()
            .ok_or_else(|| schema("field \"id\" must be a string".into()))?
            .to_string();
        if id.is_empty() {
            return Err(schema("field \"id\" must be non-empty".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(schema(format!("duplicate id \"{id}\"")));
        }
        let year = field("year")?
            .as_i64()
            .and_then(|y| i32::try_from(y).ok())
            .ok_or_else(|| schema("field \"year\" must be an integer".into()))?;
        let statement = field("statement")?
            .as_str()
            .ok_or_else(|| schema("field \"statement\" must be a string".into()))?
            .to_string();
        let answer = field("answer")?
            .as_i64()
            .ok_or_else(|| schema("field \"answer\" must be an integer".into()))?;
        if !(0..=999).contains(&answer) {
            return Err(schema(format!("answer out of range: {answer}")));
        }
        let solutions = field("solutions")?
            .as_array()
            .ok_or_else(|| schema("field \"solutions\" must be an array".into()))?
            .iter()
            .map(|s| {
                s.as_str()
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .ok_or_else(|| schema("solutions must be non-empty strings".into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if solutions.is_empty() {
            return Err(schema(
                "field \"solutions\" must have at least one entry".into(),
            ));
        }
        out.push(ProblemRecord {
            id,
            year,
            statement,
            answer: answer as u32,
            solutions,
        });
    }
    Ok(out)
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = bytes
        .split(|&b| b == b'\n')
        .take(line - 1)
        .map(|l| l.len() + 1)
        .sum();
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

/// System prompt, a blank line, then the statement. With
/// `include_final_answer` a trailing `Reference answer: <n>` line is added.
pub fn build_prompt(record: &ProblemRecord, include_final_answer: bool) -> String {
    let mut prompt = format!("{SYSTEM_PROMPT}\n\n{}", record.statement);
    if include_final_answer {
        prompt.push_str(&format!("\nReference answer: {}", record.answer));
    }
    prompt
}

fn answer_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"Final Answer:\s*([+-]?[0-9]+)").expect("valid regex"))
}

/// Integer following the last `Final Answer:` marker, if any.
pub fn extract_final_answer(response: &str) -> Option<i64> {
    let caps = answer_pattern().captures_iter(response).last()?;
    caps[1].parse().ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub problem_id: String,
    #[serde(rename = "model")]
    pub model_name: String,
    pub prompt: String,
    #[serde(rename = "response")]
    pub raw_response: String,
    #[serde(rename = "answer")]
    pub extracted_answer: Option<i64>,
    #[serde(rename = "gold")]
    pub gold_text: String,
    /// RFC 3339.
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_ENDPOINT.into(),
            model_name: String::new(),
            temperature: 0.0,
            max_tokens: 4096,
            timeout_secs: 600,
            retries: 2,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GenerateError::Config("temperature must be >= 0".into()));
        }
        if self.max_tokens < 1 {
            return Err(GenerateError::Config("max_tokens must be >= 1".into()));
        }
        if self.model_name.is_empty() {
            return Err(GenerateError::Config("model name is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned status {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("protocol error: {0}")]
    Protocol(String),
}

const BACKOFF_BASE: Duration = Duration::from_secs(1);

/// POSTs `prompt` to `<base_url>/api/generate` and returns the `response`
/// field. Transport failures are retried `cfg.retries` times with
/// exponential backoff (1 s, 2 s, 4 s, ...).
pub fn generate_trace(prompt: &str, cfg: &EndpointConfig) -> Result<String, GenerateError> {
    cfg.validate()?;
    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_secs(cfg.timeout_secs.max(1)))
        .build();
    let url = format!("{}/api/generate", cfg.base_url.trim_end_matches('/'));
    let body = serde_json::json!({
        "model": cfg.model_name,
        "prompt": prompt,
        "stream": false,
        "options": {"temperature": cfg.temperature, "num_predict": cfg.max_tokens},
    });

    let mut attempt = 0;
    loop {
        attempt += 1;
        match agent.post(&url).send_json(body.clone()) {
            Ok(resp) => {
                let json: Value = resp
                    .into_json()
                    .map_err(|e| GenerateError::Protocol(format!("invalid JSON body: {e}")))?;
                return json
                    .get("response")
                    .and_then(Value::as_str)
                    .map(str::to_string)
                    .ok_or_else(|| {
                        GenerateError::Protocol("response JSON has no string \"response\"".into())
                    });
            }
            Err(ureq::Error::Status(status, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                return Err(GenerateError::Endpoint { status, body });
            }
            Err(ureq::Error::Transport(t)) => {
                if attempt > cfg.retries {
                    return Err(GenerateError::Transport {
                        attempts: attempt,
                        message: t.to_string(),
                    });
                }
                thread::sleep(BACKOFF_BASE * 2u32.pow(attempt - 1));
            }
        }
    }
}
