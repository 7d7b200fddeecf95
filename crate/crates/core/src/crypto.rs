//! Key material, hashing, signatures and signer fingerprints.
//!
//! Signatures are Ed25519 (deterministic, 32-byte keys, 64-byte signatures);
//! every digest is SHA-256. The rest of the crate only sees the
//! [`Signer`]/[`verify_signature`] surface, so the scheme can be swapped.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer as _, SigningKey, Verifier as _, VerifyingKey};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

pub const KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;
pub const DIGEST_LEN: usize = 32;
pub const FINGERPRINT_LEN: usize = 16;

const KEY_ENVELOPE_TAG: &str = "realseal-key-v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("seed must be exactly {KEY_LEN} bytes, got {0}")]
    InvalidSeed(usize),
    #[error("invalid key material: {0}")]
    InvalidKey(String),
    #[error("invalid hex: {0}")]
    InvalidHex(String),
    #[error("operating system entropy unavailable: {0}")]
    Entropy(String),
    #[error("key file: {0}")]
    KeyFile(String),
}

fn decode_fixed<const N: usize>(s: &str) -> Result<[u8; N], CryptoError> {
    // Only lowercase hex is canonical.
    if s.len() != 2 * N || s.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(CryptoError::InvalidHex(format!(
            "expected {} lowercase hex characters",
            2 * N
        )));
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(s, &mut out).map_err(|e| CryptoError::InvalidHex(e.to_string()))?;
    Ok(out)
}

/// A SHA-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    pub fn from_bytes(bytes: [u8; DIGEST_LEN]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Digest {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        decode_fixed(s).map(Self)
    }
}

/// SHA-256 of exactly `payload`.
pub fn content_hash(payload: &[u8]) -> Digest {
    Digest(Sha256::digest(payload).into())
}

/// Compact signer identifier: the first 16 bytes of the public key's digest.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint([u8; FINGERPRINT_LEN]);

impl Fingerprint {
    pub fn from_bytes(bytes: [u8; FINGERPRINT_LEN]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; FINGERPRINT_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", self.to_hex())
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Fingerprint {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        decode_fixed(s).map(Self)
    }
}

pub fn fingerprint(public_key: &PublicKey) -> Fingerprint {
    let digest = content_hash(public_key.as_bytes());
    let mut out = [0u8; FINGERPRINT_LEN];
    out.copy_from_slice(&digest.as_bytes()[..FINGERPRINT_LEN]);
    Fingerprint(out)
}

/// A 32-byte verification key. Not validated as a curve point until used.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PublicKey([u8; KEY_LEN]);

impl PublicKey {
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        Self(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; KEY_LEN] = bytes.try_into().map_err(|_| {
            CryptoError::InvalidKey(format!("public key has {} bytes", bytes.len()))
        })?;
        Ok(Self(arr))
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn fingerprint(&self) -> Fingerprint {
        fingerprint(self)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", self.to_hex())
    }
}

impl FromStr for PublicKey {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        decode_fixed(s).map(Self)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature([u8; SIGNATURE_LEN]);

impl Signature {
    pub fn from_bytes(bytes: [u8; SIGNATURE_LEN]) -> Self {
        Self(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        bytes.try_into().ok().map(Self)
    }

    pub fn as_bytes(&self) -> &[u8; SIGNATURE_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", self.to_hex())
    }
}

impl FromStr for Signature {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        decode_fixed(s).map(Self)
    }
}

/// Anything that can produce a signature over a message.
pub trait Signer {
    fn public_key(&self) -> PublicKey;
    fn sign(&self, message: &[u8]) -> Signature;
}

/// A private seed together with its derived public key.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl KeyPair {
    /// Deterministic derivation from a 32-byte seed.
    pub fn from_seed(seed: &[u8]) -> Result<Self, CryptoError> {
        let seed: [u8; KEY_LEN] = seed
            .try_into()
            .map_err(|_| CryptoError::InvalidSeed(seed.len()))?;
        Ok(Self {
            signing: SigningKey::from_bytes(&seed),
        })
    }

    pub fn generate() -> Result<Self, CryptoError> {
        let mut seed = [0u8; KEY_LEN];
        getrandom::fill(&mut seed).map_err(|e| CryptoError::Entropy(e.to_string()))?;
        Self::from_seed(&seed)
    }

    pub fn private_key_bytes(&self) -> [u8; KEY_LEN] {
        self.signing.to_bytes()
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.signing.verifying_key().to_bytes())
    }

    pub fn fingerprint(&self) -> Fingerprint {
        fingerprint(&self.public_key())
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public_key", &self.public_key())
            .finish_non_exhaustive()
    }
}

impl Signer for KeyPair {
    fn public_key(&self) -> PublicKey {
        KeyPair::public_key(self)
    }

    fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.signing.sign(message).to_bytes())
    }
}

/// `seed` of `None` draws from OS entropy.
pub fn generate_keypair(seed: Option<&[u8]>) -> Result<KeyPair, CryptoError> {
    match seed {
        Some(seed) => KeyPair::from_seed(seed),
        None => KeyPair::generate(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignatureCheck {
    Accepted,
    Rejected,
}

impl SignatureCheck {
    pub fn is_accepted(self) -> bool {
        self == SignatureCheck::Accepted
    }
}

/// Strict Ed25519 verification. Keys that are not valid points are rejected.
pub fn verify_signature(
    message: &[u8],
    signature: &Signature,
    public_key: &PublicKey,
) -> SignatureCheck {
    let Ok(key) = VerifyingKey::from_bytes(&public_key.0) else {
        return SignatureCheck::Rejected;
    };
    let sig = ed25519_dalek::Signature::from_bytes(&signature.0);
    match key.verify(message, &sig) {
        Ok(()) => SignatureCheck::Accepted,
        Err(_) => SignatureCheck::Rejected,
    }
}

/// Slice-level variant that never panics on malformed lengths.
pub fn verify_signature_bytes(
    message: &[u8],
    signature: &[u8],
    public_key: &[u8],
) -> SignatureCheck {
    match (
        Signature::from_slice(signature),
        PublicKey::from_slice(public_key),
    ) {
        (Some(sig), Ok(pk)) => verify_signature(message, &sig, &pk),
        _ => SignatureCheck::Rejected,
    }
}

/// Which half of a keypair a key file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyRole {
    Private,
    Public,
}

impl KeyRole {
    fn as_str(self) -> &'static str {
        match self {
            KeyRole::Private => "private",
            KeyRole::Public => "public",
        }
    }
}

/// Two-line text envelope: `realseal-key-v1:<role>` then lowercase hex.
pub fn encode_key_file(role: KeyRole, key: &[u8; KEY_LEN]) -> String {
    format!(
        "{KEY_ENVELOPE_TAG}:{}\n{}\n",
        role.as_str(),
        hex::encode(key)
    )
}

pub fn decode_key_file(text: &str, role: KeyRole) -> Result<[u8; KEY_LEN], CryptoError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CryptoError::KeyFile("empty key file".into()))?;
    let expected = format!("{KEY_ENVELOPE_TAG}:{}", role.as_str());
    if header.trim_end() != expected {
        return Err(CryptoError::KeyFile(format!(
            "expected header `{expected}`, found `{header}`"
        )));
    }
    let body = lines
        .next()
        .ok_or_else(|| CryptoError::KeyFile("missing key line".into()))?;
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(CryptoError::KeyFile("trailing content after key".into()));
    }
    decode_fixed(body.trim_end())
}

pub fn encode_private_key_file(kp: &KeyPair) -> String {
    encode_key_file(KeyRole::Private, &kp.private_key_bytes())
}

pub fn encode_public_key_file(pk: &PublicKey) -> String {
    encode_key_file(KeyRole::Public, pk.as_bytes())
}

pub fn decode_private_key_file(text: &str) -> Result<KeyPair, CryptoError> {
    KeyPair::from_seed(&decode_key_file(text, KeyRole::Private)?)
}

pub fn decode_public_key_file(text: &str) -> Result<PublicKey, CryptoError> {
    decode_key_file(text, KeyRole::Public).map(PublicKey)
}
