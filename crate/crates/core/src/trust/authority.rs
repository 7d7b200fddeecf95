//! In-process state of the trust authority.
//!
//! Mutations are serialized behind a mutex and recorded in an append-only
//! operation log before they take effect. Readers load the last published
//! signed list through an atomic pointer swap and never block on writers.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use arc_swap::ArcSwap;
use chrono::{DateTime, SubsecRound, TimeZone, Utc};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use super::{SignerRecord, SignerStatus, TrustList, MAX_MANUFACTURER_NAME_BYTES};
use crate::canon::Record;
use crate::crypto::{Fingerprint, KeyPair, PublicKey};
use crate::manifest::{format_time, parse_time};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthorityError {
    #[error("fingerprint {0} is already registered")]
    AlreadyRegistered(Fingerprint),
    #[error("fingerprint {0} is not registered")]
    NotFound(Fingerprint),
    #[error("admin credential rejected")]
    Unauthorized,
    #[error("cannot move from {from} to {to}")]
    InvalidTransition {
        from: SignerStatus,
        to: SignerStatus,
    },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("operation log: {0}")]
    Log(String),
}

/// One entry of the operation log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operation {
    Register {
        at: DateTime<Utc>,
        name: String,
        public_key: PublicKey,
    },
    Approve {
        at: DateTime<Utc>,
        fingerprint: Fingerprint,
    },
    Revoke {
        at: DateTime<Utc>,
        fingerprint: Fingerprint,
        reason: String,
    },
}

impl Operation {
    fn to_record(&self) -> Record {
        match self {
            Operation::Register {
                at,
                name,
                public_key,
            } => Record::new()
                .with("op", "register")
                .with("at", format_time(at))
                .with("name", name)
                .with("public_key", public_key.to_hex()),
            Operation::Approve { at, fingerprint } => Record::new()
                .with("op", "approve")
                .with("at", format_time(at))
                .with("fingerprint", fingerprint),
            Operation::Revoke {
                at,
                fingerprint,
                reason,
            } => Record::new()
                .with("op", "revoke")
                .with("at", format_time(at))
                .with("fingerprint", fingerprint)
                .with("reason", reason),
        }
    }

    fn from_record(r: &Record) -> Result<Self, String> {
        let at = parse_time(r.require("at").map_err(|e| e.to_string())?)?;
        let fp = || -> Result<Fingerprint, String> {
            r.require("fingerprint")
                .map_err(|e| e.to_string())?
                .parse()
                .map_err(|e: crate::crypto::CryptoError| e.to_string())
        };
        match r.require("op").map_err(|e| e.to_string())? {
            "register" => Ok(Operation::Register {
                at,
                name: r.require("name").map_err(|e| e.to_string())?.to_string(),
                public_key: r
                    .require("public_key")
                    .map_err(|e| e.to_string())?
                    .parse()
                    .map_err(|e: crate::crypto::CryptoError| e.to_string())?,
            }),
            "approve" => Ok(Operation::Approve {
                at,
                fingerprint: fp()?,
            }),
            "revoke" => Ok(Operation::Revoke {
                at,
                fingerprint: fp()?,
                reason: r.require("reason").map_err(|e| e.to_string())?.to_string(),
            }),
            other => Err(format!("unknown op `{other}`")),
        }
    }
}

/// Append-only file of canonical records separated by blank lines.
#[derive(Debug)]
pub struct OperationLog {
    path: PathBuf,
    file: File,
}

impl OperationLog {
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<Operation>), AuthorityError> {
        let path = path.as_ref().to_path_buf();
        let ops = match std::fs::read(&path) {
            Ok(bytes) => Self::parse(&bytes)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(AuthorityError::Log(e.to_string())),
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| AuthorityError::Log(e.to_string()))?;
        Ok((Self { path, file }, ops))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn parse(bytes: &[u8]) -> Result<Vec<Operation>, AuthorityError> {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| AuthorityError::Log("log is not UTF-8".into()))?;
        let mut ops = Vec::new();
        for (i, chunk) in text.split("\n\n").enumerate() {
            if chunk.is_empty() {
                continue;
            }
            let block = format!("{chunk}\n");
            let record = Record::parse_canonical(block.as_bytes())
                .map_err(|e| AuthorityError::Log(format!("entry {i}: {e}")))?;
            ops.push(
                Operation::from_record(&record)
                    .map_err(|e| AuthorityError::Log(format!("entry {i}: {e}")))?,
            );
        }
        Ok(ops)
    }

    fn append(&mut self, op: &Operation) -> Result<(), AuthorityError> {
        let mut block = op.to_record().to_canonical_bytes();
        block.push(b'\n');
        self.file
            .write_all(&block)
            .and_then(|_| self.file.sync_data())
            .map_err(|e| AuthorityError::Log(e.to_string()))
    }
}

struct State {
    records: BTreeMap<Fingerprint, SignerRecord>,
    list_version: u64,
    last_mutation: DateTime<Utc>,
    log: Option<OperationLog>,
    history: Vec<Operation>,
}

/// Serves registration, vetting and revocation, and publishes the signed list.
pub struct TrustAuthority {
    ca: KeyPair,
    admin_token_digest: [u8; 32],
    clock: Clock,
    state: Mutex<State>,
    published: ArcSwap<Published>,
}

/// A signed list and its exact wire bytes.
#[derive(Debug)]
pub struct Published {
    pub list: TrustList,
    pub wire: Vec<u8>,
}

fn system_clock() -> Clock {
    Arc::new(|| Utc::now().trunc_subsecs(0))
}

impl TrustAuthority {
    pub fn in_memory(ca: KeyPair, admin_token: &str) -> Self {
        Self::build(ca, admin_token, system_clock(), None, Vec::new())
            .expect("empty history always replays")
    }

    /// Opens (or creates) the log at `log_path` and replays it.
    pub fn open(
        ca: KeyPair,
        admin_token: &str,
        log_path: impl AsRef<Path>,
    ) -> Result<Self, AuthorityError> {
        Self::open_with_clock(ca, admin_token, log_path, system_clock())
    }

    pub fn open_with_clock(
        ca: KeyPair,
        admin_token: &str,
        log_path: impl AsRef<Path>,
        clock: Clock,
    ) -> Result<Self, AuthorityError> {
        let (log, ops) = OperationLog::open(log_path)?;
        Self::build(ca, admin_token, clock, Some(log), ops)
    }

    pub fn with_clock(ca: KeyPair, admin_token: &str, clock: Clock) -> Self {
        Self::build(ca, admin_token, clock, None, Vec::new()).expect("empty history always replays")
    }

    fn build(
        ca: KeyPair,
        admin_token: &str,
        clock: Clock,
        log: Option<OperationLog>,
        ops: Vec<Operation>,
    ) -> Result<Self, AuthorityError> {
        let mut state = State {
            records: BTreeMap::new(),
            list_version: 0,
            last_mutation: Utc.timestamp_opt(0, 0).unwrap(),
            log: None,
            history: Vec::new(),
        };
        for (i, op) in ops.into_iter().enumerate() {
            apply(&mut state, op)
                .map_err(|e| AuthorityError::Log(format!("replay of entry {i} failed: {e}")))?;
        }
        state.log = log;
        let published = ArcSwap::from_pointee(publish(&state, &ca));
        Ok(Self {
            ca,
            admin_token_digest: Sha256::digest(admin_token.as_bytes()).into(),
            clock,
            state: Mutex::new(state),
            published,
        })
    }

    pub fn ca_public_key(&self) -> PublicKey {
        self.ca.public_key()
    }

    fn check_token(&self, token: &str) -> Result<(), AuthorityError> {
        let digest: [u8; 32] = Sha256::digest(token.as_bytes()).into();
        if digest == self.admin_token_digest {
            Ok(())
        } else {
            Err(AuthorityError::Unauthorized)
        }
    }

    fn now(&self, state: &State) -> DateTime<Utc> {
        (self.clock)().trunc_subsecs(0).max(state.last_mutation)
    }

    fn commit(&self, state: &mut State, op: Operation) -> Result<(), AuthorityError> {
        check(&state.records, &op)?;
        if let Some(log) = state.log.as_mut() {
            log.append(&op)?;
        }
        let mutates = !matches!(op, Operation::Register { .. });
        apply(state, op).expect("operation already validated");
        if mutates {
            self.published.store(Arc::new(publish(state, &self.ca)));
        }
        Ok(())
    }

    pub fn register_manufacturer(
        &self,
        name: &str,
        public_key: PublicKey,
    ) -> Result<SignerRecord, AuthorityError> {
        let mut state = self.state.lock().unwrap();
        let at = self.now(&state);
        let fp = public_key.fingerprint();
        self.commit(
            &mut state,
            Operation::Register {
                at,
                name: name.to_string(),
                public_key,
            },
        )?;
        Ok(state.records[&fp].clone())
    }

    pub fn approve(
        &self,
        fingerprint: &Fingerprint,
        admin_token: &str,
    ) -> Result<TrustList, AuthorityError> {
        self.check_token(admin_token)?;
        let mut state = self.state.lock().unwrap();
        let at = self.now(&state);
        self.commit(
            &mut state,
            Operation::Approve {
                at,
                fingerprint: *fingerprint,
            },
        )?;
        Ok(self.get_trust_list())
    }

    pub fn revoke(
        &self,
        fingerprint: &Fingerprint,
        admin_token: &str,
        reason: &str,
    ) -> Result<TrustList, AuthorityError> {
        self.check_token(admin_token)?;
        let mut state = self.state.lock().unwrap();
        let at = self.now(&state);
        self.commit(
            &mut state,
            Operation::Revoke {
                at,
                fingerprint: *fingerprint,
                reason: reason.to_string(),
            },
        )?;
        Ok(self.get_trust_list())
    }

    pub fn get_trust_list(&self) -> TrustList {
        self.published.load().list.clone()
    }

    /// The current signed list as served on the wire.
    pub fn published(&self) -> Arc<Published> {
        self.published.load_full()
    }

    pub fn record(&self, fingerprint: &Fingerprint) -> Option<SignerRecord> {
        self.state.lock().unwrap().records.get(fingerprint).cloned()
    }

    /// Every operation applied since the log was created, in order.
    pub fn history(&self) -> Vec<Operation> {
        self.state.lock().unwrap().history.clone()
    }
}

fn check(
    records: &BTreeMap<Fingerprint, SignerRecord>,
    op: &Operation,
) -> Result<(), AuthorityError> {
    match op {
        Operation::Register {
            name, public_key, ..
        } => {
            if name.is_empty() || name.len() > MAX_MANUFACTURER_NAME_BYTES {
                return Err(AuthorityError::InvalidRequest(format!(
                    "manufacturer name must be 1..={MAX_MANUFACTURER_NAME_BYTES} bytes"
                )));
            }
            if ed25519_dalek::VerifyingKey::from_bytes(public_key.as_bytes()).is_err() {
                return Err(AuthorityError::InvalidRequest(
                    "public key is not a valid curve point".into(),
                ));
            }
            let fp = public_key.fingerprint();
            if records.contains_key(&fp) {
                return Err(AuthorityError::AlreadyRegistered(fp));
            }
        }
        Operation::Approve { fingerprint, .. } => {
            transition(records, fingerprint, SignerStatus::Active)?
        }
        Operation::Revoke { fingerprint, .. } => {
            transition(records, fingerprint, SignerStatus::Revoked)?
        }
    }
    Ok(())
}

fn transition(
    records: &BTreeMap<Fingerprint, SignerRecord>,
    fp: &Fingerprint,
    to: SignerStatus,
) -> Result<(), AuthorityError> {
    let rec = records.get(fp).ok_or(AuthorityError::NotFound(*fp))?;
    if !rec.status.can_transition_to(to) {
        return Err(AuthorityError::InvalidTransition {
            from: rec.status,
            to,
        });
    }
    Ok(())
}

fn apply(state: &mut State, op: Operation) -> Result<(), AuthorityError> {
    check(&state.records, &op)?;
    match &op {
        Operation::Register {
            at,
            name,
            public_key,
        } => {
            let fp = public_key.fingerprint();
            state.records.insert(
                fp,
                SignerRecord {
                    fingerprint: fp,
                    public_key: *public_key,
                    manufacturer_name: name.clone(),
                    status: SignerStatus::Pending,
                    registered_at: *at,
                    status_changed_at: *at,
                },
            );
        }
        Operation::Approve { at, fingerprint }
        | Operation::Revoke {
            at, fingerprint, ..
        } => {
            let rec = state.records.get_mut(fingerprint).expect("checked");
            rec.status = if matches!(op, Operation::Approve { .. }) {
                SignerStatus::Active
            } else {
                SignerStatus::Revoked
            };
            rec.status_changed_at = (*at).max(rec.status_changed_at);
            state.list_version += 1;
            state.last_mutation = (*at).max(state.last_mutation);
        }
    }
    state.history.push(op);
    Ok(())
}

fn publish(state: &State, ca: &KeyPair) -> Published {
    let list = TrustList::issue(
        state.list_version,
        state.last_mutation,
        state.records.values().cloned(),
        ca,
    );
    let wire = list.to_wire();
    Published { list, wire }
}
