//! The signed provenance claim bound to every capture.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, SubsecRound, Utc};
use thiserror::Error;

use crate::canon::{CanonError, Record};
use crate::crypto::{
    verify_signature, Digest, Fingerprint, PublicKey, Signature, SignatureCheck, Signer,
};

pub const CLAIM_VERSION: u8 = 1;
pub const MAX_DEVICE_ID_BYTES: usize = 64;
pub const MAX_INNER_FORMAT_LEN: usize = 16;

const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("invalid key: {0}")]
    InvalidKey(String),
}

impl From<CanonError> for ManifestError {
    fn from(e: CanonError) -> Self {
        ManifestError::InvalidManifest(e.to_string())
    }
}

/// Whether the content depicts a planar (2D) or volumetric (3D) scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SceneLabel {
    Label2D,
    Label3D,
}

impl SceneLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SceneLabel::Label2D => "2D",
            SceneLabel::Label3D => "3D",
        }
    }

    /// Header byte used by the `.real` container.
    pub fn to_byte(self) -> u8 {
        match self {
            SceneLabel::Label2D => 0x02,
            SceneLabel::Label3D => 0x03,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x02 => Some(SceneLabel::Label2D),
            0x03 => Some(SceneLabel::Label3D),
            _ => None,
        }
    }
}

impl fmt::Display for SceneLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SceneLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2D" => Ok(SceneLabel::Label2D),
            "3D" => Ok(SceneLabel::Label3D),
            other => Err(format!("unknown scene label `{other}`")),
        }
    }
}

pub fn is_valid_inner_format(ext: &str) -> bool {
    (1..=MAX_INNER_FORMAT_LEN).contains(&ext.len())
        && ext
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
}

pub fn format_time(t: &DateTime<Utc>) -> String {
    t.format(TIME_FORMAT).to_string()
}

pub fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    let naive = NaiveDateTime::parse_from_str(s, TIME_FORMAT).map_err(|e| e.to_string())?;
    let t = naive.and_utc();
    // Reject anything that does not re-render identically (e.g. `+` years).
    if format_time(&t) != s {
        return Err(format!("non-canonical timestamp `{s}`"));
    }
    Ok(t)
}

/// Every field is mandatory; there is no partially-filled manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvenanceManifest {
    pub claim_version: u8,
    pub signer_fingerprint: Fingerprint,
    pub content_hash: Digest,
    pub inner_format: String,
    pub scene_label: SceneLabel,
    /// Second resolution; sub-second parts are rejected by [`validate`](Self::validate).
    pub capture_time: DateTime<Utc>,
    pub device_id: String,
}

impl ProvenanceManifest {
    pub fn validate(&self) -> Result<(), ManifestError> {
        let invalid = |m: String| Err(ManifestError::InvalidManifest(m));
        if self.claim_version != CLAIM_VERSION {
            return invalid(format!("unsupported claim_version {}", self.claim_version));
        }
        if !is_valid_inner_format(&self.inner_format) {
            return invalid(format!(
                "inner_format `{}` must match [a-z0-9]{{1,16}}",
                self.inner_format
            ));
        }
        if self.device_id.is_empty() || self.device_id.len() > MAX_DEVICE_ID_BYTES {
            return invalid(format!(
                "device_id must be 1..={MAX_DEVICE_ID_BYTES} bytes, got {}",
                self.device_id.len()
            ));
        }
        if self.capture_time != self.capture_time.trunc_subsecs(0) {
            return invalid("capture_time must have second resolution".into());
        }
        Ok(())
    }

    pub fn to_record(&self) -> Record {
        Record::new()
            .with("claim_version", self.claim_version)
            .with("capture_time", format_time(&self.capture_time))
            .with("content_hash", self.content_hash)
            .with("device_id", &self.device_id)
            .with("inner_format", &self.inner_format)
            .with("scene_label", self.scene_label)
            .with("signer_fingerprint", self.signer_fingerprint)
    }

    /// The exact bytes that get signed.
    pub fn canonicalize(&self) -> Result<Vec<u8>, ManifestError> {
        self.validate()?;
        Ok(self.to_record().to_canonical_bytes())
    }

    /// Strict inverse of [`canonicalize`](Self::canonicalize): the input must be
    /// canonical and contain exactly the manifest keys.
    pub fn parse(bytes: &[u8]) -> Result<Self, ManifestError> {
        let record = Record::parse_canonical(bytes)?;
        const KEYS: [&str; 7] = [
            "capture_time",
            "claim_version",
            "content_hash",
            "device_id",
            "inner_format",
            "scene_label",
            "signer_fingerprint",
        ];
        if let Some(extra) = record.keys().find(|k| !KEYS.contains(k)) {
            return Err(ManifestError::InvalidManifest(format!(
                "unexpected key `{extra}`"
            )));
        }
        let bad = |key: &str, e: String| ManifestError::InvalidManifest(format!("{key}: {e}"));
        let claim_version: u8 = record.parse_field("claim_version")?;
        if claim_version.to_string() != record.require("claim_version")? {
            return Err(bad("claim_version", "non-canonical integer".into()));
        }
        let manifest = ProvenanceManifest {
            claim_version,
            signer_fingerprint: record.require("signer_fingerprint")?.parse().map_err(
                |e: crate::crypto::CryptoError| bad("signer_fingerprint", e.to_string()),
            )?,
            content_hash: record
                .require("content_hash")?
                .parse()
                .map_err(|e: crate::crypto::CryptoError| bad("content_hash", e.to_string()))?,
            inner_format: record.require("inner_format")?.to_string(),
            scene_label: record
                .require("scene_label")?
                .parse()
                .map_err(|e| bad("scene_label", e))?,
            capture_time: parse_time(record.require("capture_time")?)
                .map_err(|e| bad("capture_time", e))?,
            device_id: record.require("device_id")?.to_string(),
        };
        manifest.validate()?;
        Ok(manifest)
    }
}

/// Signs the canonical manifest bytes.
pub fn sign_manifest<S: Signer + ?Sized>(
    manifest: &ProvenanceManifest,
    signer: &S,
) -> Result<Signature, ManifestError> {
    let bytes = manifest.canonicalize()?;
    Ok(signer.sign(&bytes))
}

/// Signs with raw private key bytes.
pub fn sign_manifest_with_key(
    manifest: &ProvenanceManifest,
    private_key: &[u8],
) -> Result<Signature, ManifestError> {
    let kp = crate::crypto::KeyPair::from_seed(private_key)
        .map_err(|e| ManifestError::InvalidKey(e.to_string()))?;
    sign_manifest(manifest, &kp)
}

pub fn verify_manifest(
    manifest: &ProvenanceManifest,
    signature: &Signature,
    public_key: &PublicKey,
) -> SignatureCheck {
    match manifest.canonicalize() {
        Ok(bytes) => verify_signature(&bytes, signature, public_key),
        Err(_) => SignatureCheck::Rejected,
    }
}
