//! The signed manufacturer trust list, its wire format, and the service and
//! client that publish and consume it.
//!
//! Wire format: the `ca_signature=<hex>` line followed by the canonical body
//! record. Because `ca_signature` sorts before every body key, the whole
//! document is itself a canonical record. The signature covers the body
//! bytes exactly as transmitted.

mod authority;
mod client;
mod server;

pub use authority::{AuthorityError, Clock, Operation, OperationLog, Published, TrustAuthority};
pub use client::{ClientError, TrustClient, DEFAULT_CACHE_TTL};
pub use server::{router, serve, spawn_local, LocalServer, ADMIN_TOKEN_HEADER};

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::canon::Record;
use crate::crypto::{verify_signature, Fingerprint, PublicKey, Signature, Signer};
use crate::manifest::{format_time, parse_time};

pub const MAX_MANUFACTURER_NAME_BYTES: usize = 128;

const SIGNATURE_PREFIX: &[u8] = b"ca_signature=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignerStatus {
    Pending,
    Active,
    Revoked,
}

impl SignerStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SignerStatus::Pending => "pending",
            SignerStatus::Active => "active",
            SignerStatus::Revoked => "revoked",
        }
    }

    /// Pending→Active and Active→Revoked are the only legal moves.
    pub fn can_transition_to(self, next: SignerStatus) -> bool {
        matches!(
            (self, next),
            (SignerStatus::Pending, SignerStatus::Active)
                | (SignerStatus::Active, SignerStatus::Revoked)
        )
    }
}

impl fmt::Display for SignerStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignerStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pending" => Ok(SignerStatus::Pending),
            "active" => Ok(SignerStatus::Active),
            "revoked" => Ok(SignerStatus::Revoked),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignerRecord {
    pub fingerprint: Fingerprint,
    pub public_key: PublicKey,
    pub manufacturer_name: String,
    pub status: SignerStatus,
    pub registered_at: DateTime<Utc>,
    pub status_changed_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrustStatus {
    Active(PublicKey),
    Revoked,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrustListError {
    #[error("trust list signature rejected")]
    RejectedSignature,
    #[error("malformed trust list: {0}")]
    RejectedFormat(String),
}

/// A CA-signed snapshot of every approved or revoked manufacturer key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustList {
    pub list_version: u64,
    pub issued_at: DateTime<Utc>,
    /// Sorted by fingerprint; never contains Pending records.
    pub entries: Vec<SignerRecord>,
    pub ca_signature: Signature,
}

impl TrustList {
    fn body_record(
        list_version: u64,
        issued_at: &DateTime<Utc>,
        entries: &[SignerRecord],
    ) -> Record {
        let mut r = Record::new()
            .with("list_version", list_version)
            .with("issued_at", format_time(issued_at))
            .with("entry_count", entries.len());
        for (i, e) in entries.iter().enumerate() {
            let p = format!("entry.{i}.");
            r.insert(format!("{p}fingerprint"), e.fingerprint);
            r.insert(format!("{p}public_key"), e.public_key.to_hex());
            r.insert(format!("{p}manufacturer_name"), &e.manufacturer_name);
            r.insert(format!("{p}status"), e.status);
            r.insert(format!("{p}registered_at"), format_time(&e.registered_at));
            r.insert(
                format!("{p}status_changed_at"),
                format_time(&e.status_changed_at),
            );
        }
        r
    }

    /// Builds and signs a list. Pending records are dropped and the rest sorted.
    pub fn issue<S: Signer + ?Sized>(
        list_version: u64,
        issued_at: DateTime<Utc>,
        records: impl IntoIterator<Item = SignerRecord>,
        ca: &S,
    ) -> Self {
        let mut entries: Vec<_> = records
            .into_iter()
            .filter(|r| r.status != SignerStatus::Pending)
            .collect();
        entries.sort_by_key(|r| r.fingerprint);
        let body = Self::body_record(list_version, &issued_at, &entries).to_canonical_bytes();
        let ca_signature = ca.sign(&body);
        TrustList {
            list_version,
            issued_at,
            entries,
            ca_signature,
        }
    }

    pub fn body_bytes(&self) -> Vec<u8> {
        Self::body_record(self.list_version, &self.issued_at, &self.entries).to_canonical_bytes()
    }

    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(SIGNATURE_PREFIX);
        out.extend_from_slice(self.ca_signature.to_hex().as_bytes());
        out.push(b'\n');
        out.extend_from_slice(&self.body_bytes());
        out
    }

    pub fn entry(&self, fp: &Fingerprint) -> Option<&SignerRecord> {
        self.entries
            .binary_search_by_key(fp, |e| e.fingerprint)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn is_trusted(&self, fp: &Fingerprint) -> TrustStatus {
        match self.entry(fp) {
            Some(e) if e.status == SignerStatus::Active => TrustStatus::Active(e.public_key),
            Some(_) => TrustStatus::Revoked,
            None => TrustStatus::Unknown,
        }
    }
}

/// Free-function form of [`TrustList::is_trusted`].
pub fn is_trusted(fp: &Fingerprint, list: &TrustList) -> TrustStatus {
    list.is_trusted(fp)
}

/// Checks the CA signature first, then the body's structure.
pub fn validate_trust_list(bytes: &[u8], ca_root: &PublicKey) -> Result<TrustList, TrustListError> {
    let fmt_err = |m: String| TrustListError::RejectedFormat(m);
    let rest = bytes
        .strip_prefix(SIGNATURE_PREFIX)
        .ok_or_else(|| fmt_err("missing ca_signature line".into()))?;
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| fmt_err("unterminated ca_signature line".into()))?;
    let sig_hex =
        std::str::from_utf8(&rest[..nl]).map_err(|_| fmt_err("signature not UTF-8".into()))?;
    let ca_signature: Signature = sig_hex
        .parse()
        .map_err(|e: crate::crypto::CryptoError| fmt_err(format!("ca_signature: {e}")))?;
    let body = &rest[nl + 1..];
    if !verify_signature(body, &ca_signature, ca_root).is_accepted() {
        return Err(TrustListError::RejectedSignature);
    }
    let record = Record::parse_canonical(body).map_err(|e| fmt_err(e.to_string()))?;
    let list = parse_body(&record, ca_signature).map_err(fmt_err)?;
    if list.body_bytes() != body {
        return Err(fmt_err("body is not in canonical form".into()));
    }
    Ok(list)
}

fn parse_body(record: &Record, ca_signature: Signature) -> Result<TrustList, String> {
    let field = |k: &str| record.require(k).map_err(|e| e.to_string());
    let list_version: u64 = field("list_version")?
        .parse()
        .map_err(|e| format!("list_version: {e}"))?;
    if list_version == 0 {
        return Err("list_version must be positive".into());
    }
    let issued_at = parse_time(field("issued_at")?)?;
    let count: usize = field("entry_count")?
        .parse()
        .map_err(|e| format!("entry_count: {e}"))?;
    let expected_keys = 3 + 6 * count;
    if record.len() != expected_keys {
        return Err(format!(
            "expected {expected_keys} keys, found {}",
            record.len()
        ));
    }
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let k = |name: &str| format!("entry.{i}.{name}");
        let fingerprint: Fingerprint = field(&k("fingerprint"))?
            .parse()
            .map_err(|e| format!("{e}"))?;
        let public_key: PublicKey = field(&k("public_key"))?
            .parse()
            .map_err(|e| format!("{e}"))?;
        if public_key.fingerprint() != fingerprint {
            return Err(format!("entry {i}: fingerprint does not match public key"));
        }
        let status: SignerStatus = field(&k("status"))?.parse()?;
        if status == SignerStatus::Pending {
            return Err(format!("entry {i}: pending records are never listed"));
        }
        let registered_at = parse_time(field(&k("registered_at"))?)?;
        let status_changed_at = parse_time(field(&k("status_changed_at"))?)?;
        if status_changed_at < registered_at {
            return Err(format!("entry {i}: timestamps decrease"));
        }
        let manufacturer_name = field(&k("manufacturer_name"))?.to_string();
        if manufacturer_name.is_empty() || manufacturer_name.len() > MAX_MANUFACTURER_NAME_BYTES {
            return Err(format!("entry {i}: bad manufacturer_name length"));
        }
        entries.push(SignerRecord {
            fingerprint,
            public_key,
            manufacturer_name,
            status,
            registered_at,
            status_changed_at,
        });
    }
    if !entries
        .windows(2)
        .all(|w| w[0].fingerprint < w[1].fingerprint)
    {
        return Err("entries are not sorted by fingerprint".into());
    }
    Ok(TrustList {
        list_version,
        issued_at,
        entries,
        ca_signature,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::crypto::KeyPair;
    use chrono::TimeZone;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn record(seed: u8, status: SignerStatus) -> SignerRecord {
        let kp = KeyPair::from_seed(&[seed; 32]).unwrap();
        let t = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        SignerRecord {
            fingerprint: kp.fingerprint(),
            public_key: kp.public_key(),
            manufacturer_name: format!("maker-{seed}"),
            status,
            registered_at: t,
            status_changed_at: t,
        }
    }

    fn sample_list(ca: &KeyPair) -> TrustList {
        let t = Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap();
        TrustList::issue(
            3,
            t,
            vec![
                record(1, SignerStatus::Active),
                record(2, SignerStatus::Revoked),
                record(3, SignerStatus::Pending),
                record(4, SignerStatus::Active),
            ],
            ca,
        )
    }

    #[test]
    fn issue_sorts_and_drops_pending() {
        let ca = KeyPair::from_seed(&[9; 32]).unwrap();
        let list = sample_list(&ca);
        assert_eq!(list.entries.len(), 3);
        assert!(list
            .entries
            .windows(2)
            .all(|w| w[0].fingerprint < w[1].fingerprint));
        let wire = list.to_wire();
        assert!(wire.starts_with(b"ca_signature="));
        let back = validate_trust_list(&wire, &ca.public_key()).unwrap();
        assert_eq!(back, list);
        // The whole wire document is itself canonical.
        assert!(Record::parse_canonical(&wire).is_ok());
    }

    #[test]
    fn lookup() {
        let ca = KeyPair::from_seed(&[9; 32]).unwrap();
        let list = sample_list(&ca);
        let active = record(1, SignerStatus::Active);
        assert_eq!(
            list.is_trusted(&active.fingerprint),
            TrustStatus::Active(active.public_key)
        );
        assert_eq!(
            list.is_trusted(&record(2, SignerStatus::Active).fingerprint),
            TrustStatus::Revoked
        );
        assert_eq!(
            list.is_trusted(&record(3, SignerStatus::Active).fingerprint),
            TrustStatus::Unknown
        );
        assert_eq!(
            is_trusted(&record(77, SignerStatus::Active).fingerprint, &list),
            TrustStatus::Unknown
        );
    }

    #[test]
    fn wrong_root_is_rejected() {
        let ca = KeyPair::from_seed(&[9; 32]).unwrap();
        let other = KeyPair::from_seed(&[8; 32]).unwrap();
        assert_eq!(
            validate_trust_list(&sample_list(&ca).to_wire(), &other.public_key()),
            Err(TrustListError::RejectedSignature)
        );
    }

    #[test]
    fn flipped_entry_bytes_fail_signature() {
        let ca = KeyPair::from_seed(&[9; 32]).unwrap();
        let wire = sample_list(&ca).to_wire();
        let body_start = wire.iter().position(|&b| b == b'\n').unwrap() + 1;
        let text = std::str::from_utf8(&wire).unwrap();
        let entry_start = text.find("entry.0").unwrap();
        let entry_end = text.find("issued_at").unwrap();
        assert!(entry_start >= body_start);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let pos = rng.random_range(entry_start..entry_end);
            let mut m = wire.clone();
            m[pos] ^= 1 << rng.random_range(0..8);
            assert_eq!(
                validate_trust_list(&m, &ca.public_key()),
                Err(TrustListError::RejectedSignature)
            );
        }
    }

    #[test]
    fn every_single_byte_mutation_is_rejected() {
        let ca = KeyPair::from_seed(&[9; 32]).unwrap();
        let wire = sample_list(&ca).to_wire();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for pos in 0..wire.len() {
            let mut m = wire.clone();
            m[pos] = m[pos].wrapping_add(rng.random_range(1..=255));
            assert!(
                validate_trust_list(&m, &ca.public_key()).is_err(),
                "pos {pos}"
            );
        }
    }

    #[test]
    fn unsorted_entries_are_a_format_error() {
        let ca = KeyPair::from_seed(&[9; 32]).unwrap();
        let mut list = sample_list(&ca);
        list.entries.swap(0, 1);
        let body = list.body_bytes();
        let sig = ca.sign(&body);
        let mut wire = format!("ca_signature={}\n", sig.to_hex()).into_bytes();
        wire.extend_from_slice(&body);
        assert!(matches!(
            validate_trust_list(&wire, &ca.public_key()),
            Err(TrustListError::RejectedFormat(m)) if m.contains("sorted")
        ));
    }

    #[test]
    fn version_zero_is_a_format_error() {
        let ca = KeyPair::from_seed(&[9; 32]).unwrap();
        let list = TrustList::issue(0, Utc.timestamp_opt(0, 0).unwrap(), vec![], &ca);
        assert!(matches!(
            validate_trust_list(&list.to_wire(), &ca.public_key()),
            Err(TrustListError::RejectedFormat(_))
        ));
    }

    #[test]
    fn transitions() {
        use SignerStatus::*;
        assert!(Pending.can_transition_to(Active));
        assert!(Active.can_transition_to(Revoked));
        assert!(!Pending.can_transition_to(Revoked));
        assert!(!Revoked.can_transition_to(Active));
        assert!(!Active.can_transition_to(Active));
    }
}
