//! The `.real` container: original media bytes plus the mandatory signed
//! provenance manifest.
//!
//! Byte layout, multi-byte integers little-endian:
//!
//! ```text
//! magic "REAL"         4
//! version 0x01         1
//! scene label          1   0x02 = 2D, 0x03 = 3D
//! inner_ext_len        1
//! inner_ext            inner_ext_len ASCII bytes
//! payload_len          8
//! payload              payload_len bytes
//! manifest_len         4
//! manifest             manifest_len bytes (canonical manifest)
//! signature_len        2
//! signature            signature_len bytes
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::canon::Record;
use crate::crypto::{
    content_hash, verify_signature, Fingerprint, PublicKey, Signature, SIGNATURE_LEN,
};
use crate::manifest::{is_valid_inner_format, ProvenanceManifest, SceneLabel};
use crate::trust::{SignerStatus, TrustList};

pub const MAGIC: [u8; 4] = *b"REAL";
pub const FORMAT_VERSION: u8 = 0x01;
pub const REAL_EXTENSION: &str = "real";

/// Fixed framing bytes around a container with an inner extension of `ext_len` bytes.
pub const fn header_overhead(ext_len: usize) -> usize {
    4 + 1 + 1 + 1 + ext_len + 8 + 4 + 2
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContainerError {
    #[error("refused: manifest and payload disagree ({0})")]
    RefusedInconsistent(String),
    #[error("refused: mandatory field missing or invalid ({0})")]
    RefusedMandatoryField(String),
    #[error("malformed container: {reason}")]
    Malformed {
        reason: &'static str,
        detail: String,
    },
    #[error("refused: container did not verify; pass the override to extract anyway")]
    RefusedUnverified,
    #[error("i/o: {0}")]
    Io(String),
}

impl ContainerError {
    fn malformed(reason: &'static str, detail: impl Into<String>) -> Self {
        ContainerError::Malformed {
            reason,
            detail: detail.into(),
        }
    }

    /// Short machine tag for a malformed container (`magic`, `truncated`, ...).
    pub fn malformed_reason(&self) -> Option<&'static str> {
        match self {
            ContainerError::Malformed { reason, .. } => Some(reason),
            _ => None,
        }
    }
}

/// A structurally valid container. Signatures and trust are not checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealContainer {
    pub version: u8,
    pub scene_label: SceneLabel,
    pub inner_format: String,
    pub payload: Vec<u8>,
    pub manifest_bytes: Vec<u8>,
    pub manifest: ProvenanceManifest,
    pub signature: Signature,
}

/// Serializes a container, refusing inconsistent or incomplete inputs.
pub fn write_container(
    payload: &[u8],
    inner_format: &str,
    manifest: &ProvenanceManifest,
    signature: &Signature,
) -> Result<Vec<u8>, ContainerError> {
    if !is_valid_inner_format(inner_format) {
        return Err(ContainerError::RefusedMandatoryField(format!(
            "inner_format `{inner_format}` must match [a-z0-9]{{1,16}}"
        )));
    }
    let manifest_bytes = manifest
        .canonicalize()
        .map_err(|e| ContainerError::RefusedMandatoryField(e.to_string()))?;
    if manifest.inner_format != inner_format {
        return Err(ContainerError::RefusedInconsistent(format!(
            "header inner_format `{inner_format}` but manifest says `{}`",
            manifest.inner_format
        )));
    }
    if manifest.content_hash != content_hash(payload) {
        return Err(ContainerError::RefusedInconsistent(
            "manifest content_hash does not match the payload".into(),
        ));
    }
    let manifest_len = u32::try_from(manifest_bytes.len())
        .map_err(|_| ContainerError::RefusedMandatoryField("manifest too large".into()))?;

    let mut out = Vec::with_capacity(
        header_overhead(inner_format.len()) + payload.len() + manifest_bytes.len() + SIGNATURE_LEN,
    );
    out.extend_from_slice(&MAGIC);
    out.push(FORMAT_VERSION);
    out.push(manifest.scene_label.to_byte());
    out.push(inner_format.len() as u8);
    out.extend_from_slice(inner_format.as_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&manifest_len.to_le_bytes());
    out.extend_from_slice(&manifest_bytes);
    out.extend_from_slice(&(SIGNATURE_LEN as u16).to_le_bytes());
    out.extend_from_slice(signature.as_bytes());
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| {
                ContainerError::malformed(
                    "truncated",
                    format!(
                        "need {n} bytes at offset {}, have {}",
                        self.pos,
                        self.bytes.len() - self.pos
                    ),
                )
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, ContainerError> {
        Ok(self.take(1)?[0])
    }

    fn le<const N: usize>(&mut self) -> Result<[u8; N], ContainerError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

/// Structural parse only.
pub fn read_container(bytes: &[u8]) -> Result<RealContainer, ContainerError> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)
        .map_err(|_| ContainerError::malformed("magic", "file shorter than magic"))?
        != MAGIC
    {
        return Err(ContainerError::malformed("magic", "missing REAL magic"));
    }
    let version = c.u8()?;
    if version != FORMAT_VERSION {
        return Err(ContainerError::malformed(
            "version",
            format!("unsupported version {version}"),
        ));
    }
    let label_byte = c.u8()?;
    let scene_label = SceneLabel::from_byte(label_byte).ok_or_else(|| {
        ContainerError::malformed(
            "label",
            format!("unknown scene label byte {label_byte:#04x}"),
        )
    })?;
    let ext_len = c.u8()? as usize;
    let ext = c.take(ext_len)?;
    let inner_format = std::str::from_utf8(ext)
        .ok()
        .filter(|e| is_valid_inner_format(e))
        .ok_or_else(|| {
            ContainerError::malformed("inner-format", "inner extension is not [a-z0-9]{1,16}")
        })?
        .to_string();
    let payload_len = u64::from_le_bytes(c.le::<8>()?);
    let payload_len = usize::try_from(payload_len).map_err(|_| {
        ContainerError::malformed("truncated", "payload length exceeds address space")
    })?;
    let payload = c.take(payload_len)?.to_vec();
    let manifest_len = u32::from_le_bytes(c.le::<4>()?) as usize;
    let manifest_bytes = c.take(manifest_len)?.to_vec();
    let sig_len = u16::from_le_bytes(c.le::<2>()?) as usize;
    let sig = c.take(sig_len)?;
    if c.pos != bytes.len() {
        return Err(ContainerError::malformed(
            "trailing",
            format!("{} bytes after signature", bytes.len() - c.pos),
        ));
    }
    let signature = Signature::from_slice(sig).ok_or_else(|| {
        ContainerError::malformed(
            "signature-length",
            format!("signature has {sig_len} bytes, expected {SIGNATURE_LEN}"),
        )
    })?;
    let manifest = ProvenanceManifest::parse(&manifest_bytes)
        .map_err(|e| ContainerError::malformed("manifest", e.to_string()))?;
    if manifest.scene_label != scene_label {
        return Err(ContainerError::malformed(
            "label-mismatch",
            format!(
                "header says {scene_label}, manifest says {}",
                manifest.scene_label
            ),
        ));
    }
    if manifest.inner_format != inner_format {
        return Err(ContainerError::malformed(
            "format-mismatch",
            format!(
                "header says {inner_format}, manifest says {}",
                manifest.inner_format
            ),
        ));
    }
    Ok(RealContainer {
        version,
        scene_label,
        inner_format,
        payload,
        manifest_bytes,
        manifest,
        signature,
    })
}

impl RealContainer {
    pub fn to_bytes(&self) -> Result<Vec<u8>, ContainerError> {
        write_container(
            &self.payload,
            &self.inner_format,
            &self.manifest,
            &self.signature,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Verified,
    Malformed,
    Tampered,
    UntrustedSigner,
    RevokedSigner,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Verified => "verified",
            Verdict::Malformed => "malformed",
            Verdict::Tampered => "tampered",
            Verdict::UntrustedSigner => "untrusted-signer",
            Verdict::RevokedSigner => "revoked-signer",
        }
    }

    /// Process exit status used by the command-line verifier.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Verified => 0,
            Verdict::Malformed => 2,
            Verdict::UntrustedSigner => 3,
            Verdict::Tampered => 4,
            Verdict::RevokedSigner => 5,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub verdict: Verdict,
    /// Always set when `verdict` is `Verified`.
    pub signer_fingerprint: Option<Fingerprint>,
    pub scene_label: Option<SceneLabel>,
    pub detail: String,
}

impl VerificationReport {
    fn new(verdict: Verdict, c: Option<&RealContainer>, detail: impl Into<String>) -> Self {
        Self {
            verdict,
            signer_fingerprint: c.map(|c| c.manifest.signer_fingerprint),
            scene_label: c.map(|c| c.scene_label),
            detail: detail.into(),
        }
    }

    pub fn is_verified(&self) -> bool {
        self.verdict == Verdict::Verified
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new()
            .with("verdict", self.verdict)
            .with("detail", &self.detail);
        if let Some(fp) = self.signer_fingerprint {
            r.insert("signer_fingerprint", fp);
        }
        if let Some(l) = self.scene_label {
            r.insert("scene_label", l);
        }
        r
    }
}

/// Runs the consumer-side checks in a fixed order; the first failure wins:
/// structure, payload hash, manifest signature, signer presence, signer status.
/// A manifest naming a fingerprint that is not listed cannot have its
/// signature checked and reports `UntrustedSigner`.
pub fn verify_container(
    container: &RealContainer,
    trust_list: &TrustList,
    ca_root: &PublicKey,
) -> VerificationReport {
    let c = Some(container);
    if !verify_signature(&trust_list.body_bytes(), &trust_list.ca_signature, ca_root).is_accepted()
    {
        return VerificationReport::new(
            Verdict::UntrustedSigner,
            c,
            "trust list is not signed by the CA root; no signer can be trusted",
        );
    }

    // (1) structure
    if container.version != FORMAT_VERSION
        || container.manifest.scene_label != container.scene_label
        || container.manifest.inner_format != container.inner_format
        || container.manifest.canonicalize().as_deref() != Ok(&container.manifest_bytes[..])
    {
        return VerificationReport::new(Verdict::Malformed, c, "container fields are inconsistent");
    }

    // (2) integrity of the payload
    if content_hash(&container.payload) != container.manifest.content_hash {
        return VerificationReport::new(
            Verdict::Tampered,
            c,
            "payload does not match the signed content hash",
        );
    }

    // (3) signature under the listed key, (4) presence
    let fp = container.manifest.signer_fingerprint;
    let Some(entry) = trust_list.entry(&fp) else {
        return VerificationReport::new(
            Verdict::UntrustedSigner,
            c,
            format!("signer {fp} is not on the trust list"),
        );
    };
    if !verify_signature(
        &container.manifest_bytes,
        &container.signature,
        &entry.public_key,
    )
    .is_accepted()
    {
        return VerificationReport::new(Verdict::Tampered, c, "manifest signature does not verify");
    }

    // (5) status at verification time
    if entry.status == SignerStatus::Revoked {
        return VerificationReport::new(
            Verdict::RevokedSigner,
            c,
            format!("signer {fp} ({}) has been revoked", entry.manufacturer_name),
        );
    }
    VerificationReport::new(
        Verdict::Verified,
        c,
        format!(
            "captured by a device of {}; content is a {} scene",
            entry.manufacturer_name, container.scene_label
        ),
    )
}

/// Parses and verifies raw bytes; parse failures become `Malformed` reports.
pub fn verify_bytes(
    bytes: &[u8],
    trust_list: &TrustList,
    ca_root: &PublicKey,
) -> VerificationReport {
    match read_container(bytes) {
        Ok(c) => verify_container(&c, trust_list, ca_root),
        Err(e) => VerificationReport::new(Verdict::Malformed, None, e.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnwrapOutcome {
    pub path: PathBuf,
    pub bytes_written: usize,
    /// Set when the payload was extracted despite a failed verification.
    pub warning: Option<String>,
}

/// Path of the extracted payload: `destination` with the inner extension.
pub fn unwrap_path(destination: &Path, inner_format: &str) -> PathBuf {
    if destination.extension().and_then(|e| e.to_str()) == Some(inner_format) {
        destination.to_path_buf()
    } else {
        let mut name = destination.as_os_str().to_owned();
        name.push(".");
        name.push(inner_format);
        PathBuf::from(name)
    }
}

/// Writes the payload verbatim. Refuses unverified containers unless
/// `force` is set, in which case a warning is attached to the outcome.
pub fn unwrap(
    container: &RealContainer,
    destination: &Path,
    report: &VerificationReport,
    force: bool,
) -> Result<UnwrapOutcome, ContainerError> {
    let warning = match (report.is_verified(), force) {
        (true, _) => None,
        (false, false) => return Err(ContainerError::RefusedUnverified),
        (false, true) => Some(format!(
            "extracted without verification (verdict {}): {}",
            report.verdict, report.detail
        )),
    };
    let path = unwrap_path(destination, &container.inner_format);
    std::fs::write(&path, &container.payload).map_err(|e| ContainerError::Io(e.to_string()))?;
    Ok(UnwrapOutcome {
        path,
        bytes_written: container.payload.len(),
        warning,
    })
}

/// True for names of the form `<name>.<ext>.real`.
pub fn has_real_suffix(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some(REAL_EXTENSION)
}

/// Inner extension claimed by a `<name>.<ext>.real` file name.
pub fn inner_extension_of(path: &Path) -> Option<String> {
    if !has_real_suffix(path) {
        return None;
    }
    let stem = Path::new(path.file_stem()?);
    stem.extension()
        .and_then(|e| e.to_str())
        .map(str::to_string)
}
