use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::http::{JsonClient, DEFAULT_TIMEOUT};

pub const DEFAULT_PROMPT_TEMPLATE: &str = "Paraphrase the content of [X].";
pub const DEFAULT_MAX_TOKENS: u32 = 256;
pub const PLACEHOLDER: &str = "[X]";

#[derive(Serialize)]
struct DecodeRequest<'a> {
    vector: &'a [f32],
    prompt_template: &'a str,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct DecodeResponse {
    text: String,
}

/// Client for a generation service speaking `POST /v1/decode`. The service
/// inserts the vector at the `[X]` position of the prompt.
#[derive(Debug, Clone)]
pub struct RemoteDecoder {
    client: JsonClient,
    prompt_template: String,
    max_tokens: u32,
    retries: u32,
    backoff: Duration,
}

impl RemoteDecoder {
    pub fn new(endpoint: &str, prompt_template: &str, max_tokens: u32) -> Result<Self> {
        Self::with_timeout(endpoint, prompt_template, max_tokens, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(endpoint: &str, prompt_template: &str, max_tokens: u32, timeout: Duration) -> Result<Self> {
        let placeholders = prompt_template.matches(PLACEHOLDER).count();
        if placeholders != 1 {
            return Err(Error::Config(format!(
                "prompt template must contain {PLACEHOLDER} exactly once, found {placeholders}"
            )));
        }
        Ok(Self {
            client: JsonClient::new(endpoint, timeout)?,
            prompt_template: prompt_template.to_string(),
            max_tokens,
            retries: 2,
            backoff: Duration::from_millis(200),
        })
    }

    /// Overrides the retry count and the base delay (doubled per attempt).
    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    pub fn prompt_template(&self) -> &str {
        &self.prompt_template
    }

    pub fn decode(&self, h: &EmbeddingVector) -> Result<String> {
        let req = DecodeRequest {
            vector: h.as_slice(),
            prompt_template: &self.prompt_template,
            max_tokens: self.max_tokens,
        };
        let resp: DecodeResponse = self
            .client
            .post_with_retry("/v1/decode", &req, self.retries, self.backoff)?;
        if resp.text.trim().is_empty() {
            return Err(Error::Backend("decoder returned empty text".into()));
        }
        Ok(resp.text)
    }
}
