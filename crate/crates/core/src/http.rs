//! Minimal blocking JSON-over-HTTP helper shared by the remote backends.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug)]
pub(crate) struct HttpFailure {
    pub transient: bool,
    pub message: String,
}

impl From<HttpFailure> for Error {
    fn from(f: HttpFailure) -> Self {
        Error::Backend(f.message)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct JsonClient {
    client: reqwest::blocking::Client,
    base: String,
}

impl JsonClient {
    pub fn new(base: &str, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Backend(format!("cannot build HTTP client: {e}")))?;
        Ok(Self {
            client,
            base: base.trim_end_matches('/').to_string(),
        })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        body: &Req,
    ) -> std::result::Result<Resp, HttpFailure> {
        let url = format!("{}{}", self.base, path);
        let resp = self.client.post(&url).json(body).send().map_err(|e| HttpFailure {
            transient: e.is_timeout() || e.is_connect() || e.is_request(),
            message: format!("POST {url}: {e}"),
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(HttpFailure {
                transient: status.is_server_error() || status.as_u16() == 429,
                message: format!("POST {url}: HTTP {status}"),
            });
        }
        resp.json::<Resp>().map_err(|e| HttpFailure {
            transient: false,
            message: format!("POST {url}: invalid response body: {e}"),
        })
    }

    /// Retries transient failures `retries` times with exponential backoff.
    pub fn post_with_retry<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        body: &Req,
        retries: u32,
        backoff: Duration,
    ) -> std::result::Result<Resp, HttpFailure> {
        let mut attempt = 0;
        loop {
            match self.post(path, body) {
                Err(f) if f.transient && attempt < retries => {
                    std::thread::sleep(backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}
