use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::EmbeddingVector;
use crate::error::{Error, Result};
use crate::http::{JsonClient, DEFAULT_TIMEOUT};

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f32>>,
}

/// Client for an embedding service speaking `POST /v1/embed`.
#[derive(Debug, Clone)]
pub struct RemoteEncoder {
    client: JsonClient,
}

impl RemoteEncoder {
    pub fn new(endpoint: &str) -> Result<Self> {
        Self::with_timeout(endpoint, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(endpoint: &str, timeout: Duration) -> Result<Self> {
        Ok(Self {
            client: JsonClient::new(endpoint, timeout)?,
        })
    }

    pub fn endpoint(&self) -> &str {
        self.client.base()
    }

    /// Embeds one request's worth of texts. The response must hold one
    /// vector per text, each of the advertised `dim`.
    pub fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let resp: EmbedResponse = self.client.post("/v1/embed", &EmbedRequest { texts })?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::Backend(format!(
                "encoder returned {} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        resp.vectors
            .into_iter()
            .map(|values| {
                if values.len() != resp.dim {
                    return Err(Error::DimensionMismatch {
                        expected: resp.dim,
                        actual: values.len(),
                    });
                }
                EmbeddingVector::new(values).map_err(|e| match e {
                    Error::NonFinite(msg) => {
                        Error::Backend(format!("encoder returned non-finite values: {msg}"))
                    }
                    other => other,
                })
            })
            .collect()
    }
}
