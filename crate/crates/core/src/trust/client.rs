//! Blocking client for the trust authority with a validated-list cache.

use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::{validate_trust_list, TrustList, TrustListError};
use crate::canon::Record;
use crate::crypto::{Fingerprint, PublicKey};

pub const DEFAULT_CACHE_TTL: Duration = Duration::from_secs(300);

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("service answered {status}: {error} ({detail})")]
    Service {
        status: u16,
        error: String,
        detail: String,
    },
    #[error("trust list rejected: {0}")]
    Rejected(#[from] TrustListError),
    #[error("unexpected response: {0}")]
    Protocol(String),
}

impl From<ureq::Error> for ClientError {
    fn from(e: ureq::Error) -> Self {
        ClientError::Transport(e.to_string())
    }
}

pub struct TrustClient {
    base_url: String,
    ca_root: PublicKey,
    ttl: Duration,
    agent: ureq::Agent,
    cache: RwLock<Option<(Instant, Arc<TrustList>)>>,
    refresh: Mutex<()>,
}

impl TrustClient {
    pub fn new(base_url: impl Into<String>, ca_root: PublicKey) -> Self {
        Self::with_ttl(base_url, ca_root, DEFAULT_CACHE_TTL)
    }

    pub fn with_ttl(base_url: impl Into<String>, ca_root: PublicKey, ttl: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            ca_root,
            ttl,
            agent,
            cache: RwLock::new(None),
            refresh: Mutex::new(()),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url, path)
    }

    fn read(resp: &mut ureq::http::Response<ureq::Body>) -> Result<(u16, Vec<u8>), ClientError> {
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_vec()?;
        Ok((status, body))
    }

    fn expect(status: u16, body: &[u8], ok: u16) -> Result<Record, ClientError> {
        let text = String::from_utf8_lossy(body);
        let record = Record::parse_lenient(&text).unwrap_or_default();
        if status != ok {
            return Err(ClientError::Service {
                status,
                error: record.get("error").unwrap_or("unknown").to_string(),
                detail: record.get("detail").unwrap_or(text.trim()).to_string(),
            });
        }
        Ok(record)
    }

    pub fn healthz(&self) -> Result<bool, ClientError> {
        let mut resp = self.agent.get(&self.url("/v1/healthz")).call()?;
        let (status, body) = Self::read(&mut resp)?;
        Ok(status == 200 && body == b"ok")
    }

    pub fn register(&self, name: &str, public_key: &PublicKey) -> Result<Fingerprint, ClientError> {
        let body = Record::new()
            .with("name", name)
            .with("public_key", public_key.to_hex())
            .to_canonical_string();
        let mut resp = self.agent.post(&self.url("/v1/manufacturers")).send(body)?;
        let (status, body) = Self::read(&mut resp)?;
        let record = Self::expect(status, &body, 201)?;
        record
            .require("fingerprint")
            .map_err(|e| ClientError::Protocol(e.to_string()))?
            .parse()
            .map_err(|e: crate::crypto::CryptoError| ClientError::Protocol(e.to_string()))
    }

    fn mutate(
        &self,
        fp: &Fingerprint,
        action: &str,
        token: &str,
        body: String,
    ) -> Result<u64, ClientError> {
        let url = self.url(&format!("/v1/manufacturers/{fp}/{action}"));
        let mut resp = self
            .agent
            .post(&url)
            .header("X-Admin-Token", token)
            .send(body)?;
        let (status, body) = Self::read(&mut resp)?;
        let record = Self::expect(status, &body, 200)?;
        self.invalidate();
        record
            .parse_field("list_version")
            .map_err(|e| ClientError::Protocol(e.to_string()))
    }

    pub fn approve(&self, fp: &Fingerprint, admin_token: &str) -> Result<u64, ClientError> {
        self.mutate(fp, "approve", admin_token, String::new())
    }

    pub fn revoke(
        &self,
        fp: &Fingerprint,
        admin_token: &str,
        reason: &str,
    ) -> Result<u64, ClientError> {
        let body = Record::new().with("reason", reason).to_canonical_string();
        self.mutate(fp, "revoke", admin_token, body)
    }

    /// Raw served bytes, unvalidated.
    pub fn fetch_wire(&self) -> Result<Vec<u8>, ClientError> {
        let mut resp = self.agent.get(&self.url("/v1/trustlist")).call()?;
        let (status, body) = Self::read(&mut resp)?;
        if status != 200 {
            Self::expect(status, &body, 200)?;
        }
        Ok(body)
    }

    /// Fetches and validates, bypassing the cache.
    pub fn fetch(&self) -> Result<TrustList, ClientError> {
        let wire = self.fetch_wire()?;
        Ok(validate_trust_list(&wire, &self.ca_root)?)
    }

    /// The cached list if younger than the TTL, otherwise a fresh validated one.
    pub fn trust_list(&self) -> Result<Arc<TrustList>, ClientError> {
        if let Some(list) = self.cached() {
            return Ok(list);
        }
        let _guard = self.refresh.lock().unwrap();
        if let Some(list) = self.cached() {
            return Ok(list);
        }
        let list = Arc::new(self.fetch()?);
        *self.cache.write().unwrap() = Some((Instant::now(), list.clone()));
        Ok(list)
    }

    fn cached(&self) -> Option<Arc<TrustList>> {
        let cache = self.cache.read().unwrap();
        cache
            .as_ref()
            .filter(|(at, _)| at.elapsed() < self.ttl)
            .map(|(_, list)| list.clone())
    }

    pub fn invalidate(&self) {
        *self.cache.write().unwrap() = None;
    }
}
