//! Finding provenance containers in a directory tree.
//!
//! An extension scan only looks at names. A full scan also opens every
//! file, sniffs for the container magic, and verifies each `.real` file.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::canon::Record;
use crate::capture::DeviceIdentity;
use crate::container::{has_real_suffix, verify_bytes, write_container, Verdict, MAGIC};
use crate::crypto::{content_hash, PublicKey};
use crate::manifest::{sign_manifest, ProvenanceManifest, SceneLabel, CLAIM_VERSION};
use crate::trust::TrustList;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    Extension,
    Full,
}

impl std::str::FromStr for ScanMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "extension" => Ok(ScanMode::Extension),
            "full" => Ok(ScanMode::Full),
            other => Err(format!("unknown scan mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanReport {
    pub total_files: usize,
    pub real_extension_files: usize,
    pub verified: usize,
    pub tampered: usize,
    pub untrusted: usize,
    pub revoked: usize,
    /// Includes `.real` files that could not be read.
    pub malformed: usize,
    /// Entries the walk or a read failed on.
    pub unreadable: usize,
    /// Containers found by content under some other name.
    pub unlabelled_containers: usize,
    pub extension_scan_duration: Duration,
    /// Absent for extension-only scans.
    pub full_scan_duration: Option<Duration>,
}

impl ScanReport {
    pub fn verdict_total(&self) -> usize {
        self.verified + self.tampered + self.untrusted + self.revoked + self.malformed
    }

    fn count(&mut self, verdict: Verdict) {
        match verdict {
            Verdict::Verified => self.verified += 1,
            Verdict::Tampered => self.tampered += 1,
            Verdict::UntrustedSigner => self.untrusted += 1,
            Verdict::RevokedSigner => self.revoked += 1,
            Verdict::Malformed => self.malformed += 1,
        }
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new()
            .with("total_files", self.total_files)
            .with("real_extension_files", self.real_extension_files)
            .with("unreadable", self.unreadable)
            .with(
                "extension_scan_seconds",
                self.extension_scan_duration.as_secs_f64(),
            );
        if let Some(full) = self.full_scan_duration {
            r.insert("full_scan_seconds", full.as_secs_f64());
            r.insert("verified", self.verified);
            r.insert("tampered", self.tampered);
            r.insert("untrusted", self.untrusted);
            r.insert("revoked", self.revoked);
            r.insert("malformed", self.malformed);
            r.insert("unlabelled_containers", self.unlabelled_containers);
        }
        r
    }
}

/// Walks `root`, returning sorted file paths and the number of entries that
/// could not be read.
fn walk(root: &Path) -> (Vec<PathBuf>, usize) {
    let mut files = Vec::new();
    let mut errors = 0;
    for entry in WalkDir::new(root).sort_by_file_name() {
        match entry {
            Ok(e) if e.file_type().is_file() => files.push(e.into_path()),
            Ok(_) => {}
            Err(_) => errors += 1,
        }
    }
    (files, errors)
}

enum FileOutcome {
    Verdict(Verdict),
    Unreadable { real: bool },
    Plain { has_magic: bool },
}

fn examine(path: &Path, trust: &TrustList, ca_root: &PublicKey) -> FileOutcome {
    let real = has_real_suffix(path);
    if real {
        return match fs::read(path) {
            Ok(bytes) => FileOutcome::Verdict(verify_bytes(&bytes, trust, ca_root).verdict),
            Err(_) => FileOutcome::Unreadable { real },
        };
    }
    let mut head = [0u8; 4];
    match fs::File::open(path).and_then(|mut f| f.read_exact(&mut head)) {
        Ok(()) => FileOutcome::Plain {
            has_magic: head == MAGIC,
        },
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            FileOutcome::Plain { has_magic: false }
        }
        Err(_) => FileOutcome::Unreadable { real },
    }
}

pub fn scan_extension(root: &Path) -> ScanReport {
    let start = Instant::now();
    let (files, errors) = walk(root);
    let real = files.iter().filter(|p| has_real_suffix(p)).count();
    ScanReport {
        total_files: files.len(),
        real_extension_files: real,
        unreadable: errors,
        extension_scan_duration: start.elapsed(),
        ..ScanReport::default()
    }
}

/// Runs the extension scan, then the full scan, timing each separately.
/// Per-file work fans out over threads; results are merged in path order.
pub fn scan_full(root: &Path, trust: &TrustList, ca_root: &PublicKey) -> ScanReport {
    let extension_scan_duration = scan_extension(root).extension_scan_duration;
    let start = Instant::now();
    let (files, errors) = walk(root);
    let outcomes: Vec<FileOutcome> = files
        .par_iter()
        .map(|p| examine(p, trust, ca_root))
        .collect();
    let mut full = ScanReport {
        total_files: files.len(),
        unreadable: errors,
        extension_scan_duration,
        ..ScanReport::default()
    };
    for outcome in outcomes {
        match outcome {
            FileOutcome::Verdict(v) => {
                full.real_extension_files += 1;
                full.count(v);
            }
            FileOutcome::Unreadable { real } => {
                full.unreadable += 1;
                if real {
                    full.real_extension_files += 1;
                    full.malformed += 1;
                }
            }
            FileOutcome::Plain { has_magic } => {
                full.unlabelled_containers += usize::from(has_magic)
            }
        }
    }
    full.full_scan_duration = Some(start.elapsed());
    full
}

pub fn scan(
    root: &Path,
    mode: ScanMode,
    trust: Option<(&TrustList, &PublicKey)>,
) -> Result<ScanReport, String> {
    match (mode, trust) {
        (ScanMode::Extension, _) => Ok(scan_extension(root)),
        (ScanMode::Full, Some((list, root_key))) => Ok(scan_full(root, list, root_key)),
        (ScanMode::Full, None) => Err("a full scan needs a trust source".into()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSummary {
    pub total_files: usize,
    pub real_files: usize,
    /// `.real` files whose content is not a container.
    pub renamed_non_containers: usize,
}

const PLAIN_EXTENSIONS: [&str; 5] = ["jpg", "png", "txt", "pdf", "heic"];
const FILES_PER_DIR: usize = 500;

/// Writes `n` files under `root`: every tenth is a container signed by
/// `device`, except that one `.real` file holds ordinary bytes.
pub fn generate_corpus(
    root: &Path,
    n: usize,
    device: &DeviceIdentity,
    seed: u64,
) -> std::io::Result<CorpusSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = CorpusSummary {
        total_files: n,
        real_files: 0,
        renamed_non_containers: 0,
    };
    for i in 0..n {
        let dir = root.join(format!("d{:03}", i / FILES_PER_DIR));
        if i % FILES_PER_DIR == 0 {
            fs::create_dir_all(&dir)?;
        }
        let mut body = vec![0u8; rng.random_range(256..2048)];
        rng.fill_bytes(&mut body);
        if i % 10 == 9 {
            summary.real_files += 1;
            let path = dir.join(format!("img{i:05}.png.real"));
            if summary.renamed_non_containers == 0 {
                summary.renamed_non_containers = 1;
                fs::write(path, &body)?;
            } else {
                fs::write(path, seal_bytes(&body, device, i)?)?;
            }
        } else {
            let ext = PLAIN_EXTENSIONS[i % PLAIN_EXTENSIONS.len()];
            fs::write(dir.join(format!("file{i:05}.{ext}")), &body)?;
        }
    }
    Ok(summary)
}

fn seal_bytes(payload: &[u8], device: &DeviceIdentity, i: usize) -> std::io::Result<Vec<u8>> {
    use chrono::TimeZone;
    let manifest = ProvenanceManifest {
        claim_version: CLAIM_VERSION,
        signer_fingerprint: device.fingerprint,
        content_hash: content_hash(payload),
        inner_format: "png".into(),
        scene_label: if i % 20 == 9 {
            SceneLabel::Label2D
        } else {
            SceneLabel::Label3D
        },
        capture_time: chrono::Utc
            .timestamp_opt(1_700_000_000 + i as i64, 0)
            .unwrap(),
        device_id: device.device_id.clone(),
    };
    let io = |e: String| std::io::Error::new(std::io::ErrorKind::InvalidData, e);
    let sig = sign_manifest(&manifest, &device.keypair).map_err(|e| io(e.to_string()))?;
    write_container(payload, "png", &manifest, &sig).map_err(|e| io(e.to_string()))
}
