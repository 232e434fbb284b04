//! HTTP client for a ledger source (the simulator or anything serving the
//! same range protocol).

use std::time::Duration;

use credsearch_core::ledger::{parse_txn, LedgerError, TxnEnvelope};
use credsearch_core::merkle::RootHash;
use reqwest::StatusCode;
use serde::Deserialize;
use thiserror::Error;

use crate::LEDGER_SIZE_HEADER;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("source unavailable after {attempts} attempts: {last}")]
    Unavailable { attempts: u32, last: String },
    #[error("source answered {status}: {body}")]
    Status { status: u16, body: String },
    #[error("gap in source range: expected seqNo {expected}, got {found}")]
    GapDetected { expected: u64, found: u64 },
    #[error("malformed source response: {0}")]
    Malformed(String),
    #[error("malformed transaction from source: {0}")]
    Transaction(#[from] LedgerError),
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub factor: u32,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            base_delay: Duration::from_millis(250),
            factor: 2,
            max_attempts: 5,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * self.factor.saturating_pow(attempt.saturating_sub(1))
    }
}

/// Envelopes of a range request plus the source's size at the time.
#[derive(Debug, Clone, PartialEq)]
pub struct Fetched {
    pub txns: Vec<TxnEnvelope>,
    pub head: u64,
}

#[derive(Debug, Deserialize)]
struct RootResponse {
    size: u64,
    root: RootHash,
}

#[derive(Debug, Clone)]
pub struct SourceClient {
    http: reqwest::Client,
    base: String,
    retry: RetryPolicy,
}

enum Attempt<T> {
    Done(T),
    Retry(String),
}

impl SourceClient {
    pub fn new(base_url: &str) -> Self {
        Self::with_retry(base_url, RetryPolicy::default())
    }

    pub fn with_retry(base_url: &str, retry: RetryPolicy) -> Self {
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .expect("static client configuration");
        Self {
            http,
            base: base_url.trim_end_matches('/').to_string(),
            retry,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    /// Sends a GET, retrying transport errors and 5xx answers with
    /// exponential backoff.
    async fn get(&self, path: &str) -> Result<reqwest::Response, SourceError> {
        let url = format!("{}{}", self.base, path);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = match self.http.get(&url).send().await {
                Ok(resp) if resp.status().is_server_error() => Attempt::Retry(format!("{} from {url}", resp.status())),
                Ok(resp) => Attempt::Done(resp),
                Err(e) => Attempt::Retry(e.to_string()),
            };
            match outcome {
                Attempt::Done(resp) => return Ok(resp),
                Attempt::Retry(last) if attempt >= self.retry.max_attempts => {
                    return Err(SourceError::Unavailable {
                        attempts: attempt,
                        last,
                    })
                }
                Attempt::Retry(last) => {
                    tracing::debug!(attempt, error = %last, "retrying source request");
                    tokio::time::sleep(self.retry.delay(attempt)).await;
                }
            }
        }
    }

    async fn fail(resp: reqwest::Response) -> SourceError {
        let status = resp.status().as_u16();
        let body = resp.text().await.unwrap_or_default();
        SourceError::Status { status, body }
    }

    fn head_of(resp: &reqwest::Response) -> Result<u64, SourceError> {
        resp.headers()
            .get(LEDGER_SIZE_HEADER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| SourceError::Malformed(format!("missing {LEDGER_SIZE_HEADER} header")))
    }

    pub async fn size(&self) -> Result<u64, SourceError> {
        let resp = self.get("/size").await?;
        if !resp.status().is_success() {
            return Err(Self::fail(resp).await);
        }
        #[derive(Deserialize)]
        struct Size {
            size: u64,
        }
        let s: Size = resp.json().await.map_err(|e| SourceError::Malformed(e.to_string()))?;
        Ok(s.size)
    }

    /// Inclusive range read. A range past the head yields what exists (possibly
    /// nothing) together with the head.
    pub async fn fetch_range(&self, from: u64, to: u64) -> Result<Fetched, SourceError> {
        let resp = self.get(&format!("/txns?from={from}&to={to}")).await?;
        let status = resp.status();
        if status == StatusCode::RANGE_NOT_SATISFIABLE {
            return Ok(Fetched {
                txns: Vec::new(),
                head: Self::head_of(&resp)?,
            });
        }
        if !status.is_success() {
            return Err(Self::fail(resp).await);
        }
        let head = Self::head_of(&resp)?;
        let body = resp.text().await.map_err(|e| SourceError::Malformed(e.to_string()))?;
        let txns = parse_ndjson(&body)?;
        for (i, env) in txns.iter().enumerate() {
            let expected = from + i as u64;
            if env.seq_no().get() != expected {
                return Err(SourceError::GapDetected {
                    expected,
                    found: env.seq_no().get(),
                });
            }
        }
        Ok(Fetched { txns, head })
    }

    /// The source's Merkle root over its first `size` transactions, or `None`
    /// if the source does not publish roots.
    pub async fn root_at(&self, size: u64) -> Result<Option<RootHash>, SourceError> {
        let resp = self.get(&format!("/root?size={size}")).await?;
        match resp.status() {
            StatusCode::NOT_FOUND | StatusCode::METHOD_NOT_ALLOWED => return Ok(None),
            s if !s.is_success() => return Err(Self::fail(resp).await),
            _ => {}
        }
        let r: RootResponse = resp.json().await.map_err(|e| SourceError::Malformed(e.to_string()))?;
        if r.size != size {
            return Err(SourceError::Malformed(format!(
                "asked for root at {size}, got {}",
                r.size
            )));
        }
        Ok(Some(r.root))
    }
}

/// Parses newline-delimited transaction documents; blank lines are skipped.
pub fn parse_ndjson(body: &str) -> Result<Vec<TxnEnvelope>, SourceError> {
    body.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| parse_txn(l).map_err(SourceError::from))
        .collect()
}
