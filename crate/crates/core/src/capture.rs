//! A simulated signing camera, and the screen recapture that fools it.

use std::sync::Arc;

use chrono::{DateTime, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::canon::Record;
use crate::container::{
    read_container, verify_container, write_container, ContainerError, Verdict, VerificationReport,
};
use crate::crypto::{content_hash, CryptoError, Fingerprint, KeyPair, PublicKey};
use crate::geometry::{classify_scene, CameraRig, GeometryError, DEFAULT_PLANARITY_THRESHOLD};
use crate::manifest::{
    sign_manifest, ManifestError, ProvenanceManifest, SceneLabel, CLAIM_VERSION,
};
use crate::sensing::{sample_scene, synthesize_correspondences, Scene, ScenePopulation};
use crate::trust::{TrustAuthority, TrustClient, TrustList};
use crate::{Correspondences, Planarity, Point3, Rig};

/// Inner format of every payload the simulator renders.
pub const PAYLOAD_FORMAT: &str = "pgm";
const IMAGE_WIDTH: usize = 96;
const IMAGE_HEIGHT: usize = 72;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

#[derive(Debug, Clone)]
pub struct DeviceIdentity {
    pub device_id: String,
    pub keypair: KeyPair,
    pub fingerprint: Fingerprint,
}

impl DeviceIdentity {
    pub fn new(device_id: impl Into<String>, keypair: KeyPair) -> Self {
        let fingerprint = keypair.fingerprint();
        Self {
            device_id: device_id.into(),
            keypair,
            fingerprint,
        }
    }

    /// Device with a key derived from a 32-byte seed.
    pub fn from_seed(device_id: impl Into<String>, seed: [u8; 32]) -> Result<Self, CryptoError> {
        Ok(Self::new(device_id, KeyPair::from_seed(&seed)?))
    }

    pub fn public_key(&self) -> PublicKey {
        self.keypair.public_key()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelPolicy {
    /// Computed from the rig's view of the scene.
    Auto,
    Fixed(SceneLabel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureOptions {
    pub capture_time: DateTime<Utc>,
    pub policy: LabelPolicy,
    pub pixel_noise_sigma: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for CaptureOptions {
    fn default() -> Self {
        Self {
            capture_time: Utc.with_ymd_and_hms(2024, 1, 1, 12, 0, 0).unwrap(),
            policy: LabelPolicy::Auto,
            pixel_noise_sigma: 0.0,
            threshold: DEFAULT_PLANARITY_THRESHOLD,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Capture {
    pub container: Vec<u8>,
    pub correspondences: Correspondences,
    pub scene_label: SceneLabel,
    /// Present when the label came from the geometry.
    pub planarity: Option<Planarity>,
}

/// Point-splat rendering of the scene as seen by `cam_a`, as a binary PGM.
/// Nearer points are brighter.
pub fn render_payload(points: &[Point3], rig: &Rig) -> Vec<u8> {
    let mut img = vec![0u8; IMAGE_WIDTH * IMAGE_HEIGHT];
    let cam = &rig.cam_a;
    let depths: Vec<f64> = points.iter().map(|p| cam.depth_of(p)).collect();
    let (near, far) = depths
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    let span = (far - near).max(1e-9);
    // field of view of about 0.9 scene units per unit depth
    let scale = IMAGE_WIDTH as f64 / (0.9 * cam.focal_px);
    for (p, &d) in points.iter().zip(&depths) {
        let Ok(px) = cam.project(p) else { continue };
        let x = IMAGE_WIDTH as f64 / 2.0 + (px.u - cam.principal_point.0) * scale;
        let y = IMAGE_HEIGHT as f64 / 2.0 + (px.v - cam.principal_point.1) * scale;
        let shade = (255.0 - 160.0 * (d - near) / span).round() as u8;
        for (dx, dy) in [(0i64, 0i64), (1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (xi, yi) = (x.floor() as i64 + dx, y.floor() as i64 + dy);
            if (0..IMAGE_WIDTH as i64).contains(&xi) && (0..IMAGE_HEIGHT as i64).contains(&yi) {
                let cell = &mut img[yi as usize * IMAGE_WIDTH + xi as usize];
                *cell = (*cell).max(shade);
            }
        }
    }
    encode_pgm(IMAGE_WIDTH, IMAGE_HEIGHT, &img)
}

fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

fn decode_pgm(bytes: &[u8]) -> Option<(usize, usize, &[u8])> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return None;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return None;
    }
    let (w, h): (usize, usize) = (fields[1].parse().ok()?, fields[2].parse().ok()?);
    let body = bytes.get(pos + 1..)?;
    (body.len() == w * h).then_some((w, h, body))
}

/// What the camera records when pointed at a screen showing `payload`:
/// the same picture, slightly washed out. Non-PGM payloads are shown as
/// raw grey levels.
pub fn screen_rendition(payload: &[u8]) -> Vec<u8> {
    let (w, h, pixels): (usize, usize, Vec<u8>) = match decode_pgm(payload) {
        Some((w, h, px)) => (w, h, px.to_vec()),
        None => {
            let w = 64;
            let h = payload.len().div_ceil(w).max(1);
            let mut px = payload.to_vec();
            px.resize(w * h, 0);
            (w, h, px)
        }
    };
    let washed: Vec<u8> = pixels
        .iter()
        .map(|&v| (16 + (v as u16 * 7) / 8) as u8)
        .collect();
    encode_pgm(w, h, &washed)
}

fn seal(
    payload: Vec<u8>,
    device: &DeviceIdentity,
    label: SceneLabel,
    capture_time: DateTime<Utc>,
) -> Result<Vec<u8>, CaptureError> {
    let manifest = ProvenanceManifest {
        claim_version: CLAIM_VERSION,
        signer_fingerprint: device.fingerprint,
        content_hash: content_hash(&payload),
        inner_format: PAYLOAD_FORMAT.into(),
        scene_label: label,
        capture_time,
        device_id: device.device_id.clone(),
    };
    let signature = sign_manifest(&manifest, &device.keypair)?;
    Ok(write_container(
        &payload,
        PAYLOAD_FORMAT,
        &manifest,
        &signature,
    )?)
}

/// Photographs a scene: renders the payload, observes the scene with both
/// cameras, picks the label and signs. Registration is not checked here.
pub fn capture(
    scene: &Scene,
    rig: &Rig,
    device: &DeviceIdentity,
    options: &CaptureOptions,
) -> Result<Capture, CaptureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let correspondences =
        synthesize_correspondences(&scene.points, rig, options.pixel_noise_sigma, &mut rng)?;
    let (scene_label, planarity) = match options.policy {
        LabelPolicy::Fixed(label) => (label, None),
        LabelPolicy::Auto => {
            let report = classify_scene(&correspondences, rig, options.threshold)?;
            (report.label, Some(report))
        }
    };
    let payload = render_payload(&scene.points, rig);
    Ok(Capture {
        container: seal(payload, device, scene_label, options.capture_time)?,
        correspondences,
        scene_label,
        planarity,
    })
}

/// Physical set-up of the attack: a flat screen facing the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenSetup {
    pub depth: f64,
    pub half_width: f64,
    pub half_height: f64,
    /// Grid resolution of sampled points per side.
    pub grid: usize,
    pub pixel_noise_sigma: f64,
    pub seed: u64,
    pub capture_time: DateTime<Utc>,
}

impl Default for ScreenSetup {
    fn default() -> Self {
        Self {
            depth: 5.0,
            half_width: 2.0,
            half_height: 1.5,
            grid: 8,
            pixel_noise_sigma: 0.0,
            seed: 0,
            capture_time: CaptureOptions::default().capture_time,
        }
    }
}

impl ScreenSetup {
    pub fn points(&self) -> Vec<Point3> {
        let n = self.grid.max(2);
        let step = |i: usize, half: f64| -half + 2.0 * half * i as f64 / (n - 1) as f64;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                Point3::new(
                    step(i, self.half_width),
                    step(j, self.half_height),
                    self.depth,
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Recapture {
    pub container: Vec<u8>,
    pub correspondences: Correspondences,
}

/// Re-photographs `payload` shown on a screen with a trusted device and
/// claims the result is a 3D scene.
pub fn recapture_attack(
    payload: &[u8],
    rig: &Rig,
    device: &DeviceIdentity,
    setup: &ScreenSetup,
) -> Result<Recapture, CaptureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let correspondences =
        synthesize_correspondences(&setup.points(), rig, setup.pixel_noise_sigma, &mut rng)?;
    let container = seal(
        screen_rendition(payload),
        device,
        SceneLabel::Label3D,
        setup.capture_time,
    )?;
    Ok(Recapture {
        container,
        correspondences,
    })
}

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("demo setup failed: {0}")]
    Setup(String),
    #[error(transparent)]
    Capture(#[from] CaptureError),
}

/// Where the demo's trust list comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DemoTrust {
    /// A throwaway authority inside this process.
    InProcess,
    /// A running service; the demo registers and approves its own device.
    Remote {
        url: String,
        admin_token: String,
        ca_root: PublicKey,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub focal_px: f64,
    pub baseline: f64,
    pub screen_depth: f64,
    pub pixel_noise_sigma: f64,
    pub threshold: f64,
    pub seed: u64,
    /// Sign with a key the authority has never seen.
    pub unregistered_attacker: bool,
    pub trust: DemoTrust,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            focal_px: 500.0,
            baseline: 1.0,
            screen_depth: 5.0,
            pixel_noise_sigma: 0.1,
            threshold: DEFAULT_PLANARITY_THRESHOLD,
            seed: 1,
            unregistered_attacker: false,
            trust: DemoTrust::InProcess,
        }
    }
}

impl DemoConfig {
    /// Reads the keys `focal_px`, `baseline`, `screen_depth`, `pixel_noise`,
    /// `threshold`, `seed`, `unregistered_attacker`, and optionally
    /// `ca_url`, `admin_token`, `ca_public_key`.
    pub fn from_record(r: &Record) -> Result<Self, DemoError> {
        let d = Self::default();
        let e = |e: crate::canon::CanonError| DemoError::Setup(e.to_string());
        let trust = match r.get("ca_url") {
            None => DemoTrust::InProcess,
            Some(url) => DemoTrust::Remote {
                url: url.to_string(),
                admin_token: r.require("admin_token").map_err(e)?.to_string(),
                ca_root: r.parse_field("ca_public_key").map_err(e)?,
            },
        };
        Ok(Self {
            focal_px: r.parse_or("focal_px", d.focal_px).map_err(e)?,
            baseline: r.parse_or("baseline", d.baseline).map_err(e)?,
            screen_depth: r.parse_or("screen_depth", d.screen_depth).map_err(e)?,
            pixel_noise_sigma: r.parse_or("pixel_noise", d.pixel_noise_sigma).map_err(e)?,
            threshold: r.parse_or("threshold", d.threshold).map_err(e)?,
            seed: r.parse_or("seed", d.seed).map_err(e)?,
            unregistered_attacker: r
                .parse_or("unregistered_attacker", d.unregistered_attacker)
                .map_err(e)?,
            trust,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub pki_verdict: Verdict,
    pub verification: VerificationReport,
    /// Label written in the manifest by the camera.
    pub claimed_label: SceneLabel,
    pub planarity: Planarity,
    pub deceived: bool,
}

impl DemoReport {
    fn new(
        verification: VerificationReport,
        claimed_label: SceneLabel,
        planarity: Planarity,
    ) -> Self {
        let deceived =
            verification.verdict == Verdict::Verified && planarity.label == SceneLabel::Label2D;
        Self {
            pki_verdict: verification.verdict,
            verification,
            claimed_label,
            planarity,
            deceived,
        }
    }

    /// The cross-check that catches the attack: the signed label says 3D
    /// but the geometry says the camera was looking at a plane.
    pub fn label_mismatch(&self) -> bool {
        self.claimed_label != self.planarity.label
    }

    pub fn to_record(&self, prefix: &str, r: &mut Record) {
        r.insert(format!("{prefix}pki_verdict"), self.pki_verdict);
        r.insert(format!("{prefix}claimed_label"), self.claimed_label);
        r.insert(format!("{prefix}planarity_label"), self.planarity.label);
        r.insert(
            format!("{prefix}normalized_score"),
            self.planarity.normalized_score,
        );
        r.insert(format!("{prefix}threshold"), self.planarity.threshold_used);
        r.insert(format!("{prefix}deceived"), self.deceived);
        r.insert(format!("{prefix}label_mismatch"), self.label_mismatch());
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub attack: DemoReport,
    /// A genuine photograph of a 3D scene by the same device.
    pub control: DemoReport,
    pub mitigation: &'static str,
}

pub const MITIGATION: &str = "compare the signed 2D/3D label against the stereo planarity check";

impl DemoOutcome {
    pub fn to_record(&self) -> Record {
        let mut r = Record::new().with("mitigation", self.mitigation);
        self.attack.to_record("attack.", &mut r);
        self.control.to_record("control.", &mut r);
        r
    }
}

fn demo_clock() -> crate::trust::Clock {
    Arc::new(|| Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap())
}

fn trust_setup(
    config: &DemoConfig,
    device: &DeviceIdentity,
) -> Result<(TrustList, PublicKey), DemoError> {
    let setup = |e: String| DemoError::Setup(e);
    match &config.trust {
        DemoTrust::InProcess => {
            let ca = KeyPair::from_seed(&[0xCA; 32]).map_err(|e| setup(e.to_string()))?;
            let token = "demo-admin";
            let authority = TrustAuthority::with_clock(ca, token, demo_clock());
            let record = authority
                .register_manufacturer("Demo Optics", device.public_key())
                .map_err(|e| setup(e.to_string()))?;
            authority
                .approve(&record.fingerprint, token)
                .map_err(|e| setup(e.to_string()))?;
            Ok((authority.get_trust_list(), authority.ca_public_key()))
        }
        DemoTrust::Remote {
            url,
            admin_token,
            ca_root,
        } => {
            let client = TrustClient::new(url.clone(), *ca_root);
            let fp = client
                .register("Demo Optics", &device.public_key())
                .or_else(|e| match e {
                    // already registered by an earlier run
                    crate::trust::ClientError::Service { status: 409, .. } => {
                        Ok(device.fingerprint)
                    }
                    e => Err(e),
                })
                .map_err(|e| setup(e.to_string()))?;
            match client.approve(&fp, admin_token) {
                Ok(_) | Err(crate::trust::ClientError::Service { status: 409, .. }) => {}
                Err(e) => return Err(setup(e.to_string())),
            }
            let list = client.fetch().map_err(|e| setup(e.to_string()))?;
            Ok((list, *ca_root))
        }
    }
}

/// Runs the recapture attack through both the PKI check and the geometric
/// check, next to a genuine capture of a real scene.
pub fn run_spoof_demo(config: &DemoConfig) -> Result<DemoOutcome, DemoError> {
    let rig = CameraRig::rectified(config.focal_px, config.baseline)
        .map_err(|e| DemoError::Setup(e.to_string()))?;
    let device = DeviceIdentity::from_seed("demo-cam-01", [0x5A; 32])
        .map_err(|e| DemoError::Setup(e.to_string()))?;
    let (trust_list, ca_root) = trust_setup(config, &device)?;
    let attacker = if config.unregistered_attacker {
        DeviceIdentity::from_seed("rogue-cam", [0x66; 32])
            .map_err(|e| DemoError::Setup(e.to_string()))?
    } else {
        device.clone()
    };

    // The synthetic image shown on the screen: a rendered 3D scene.
    let real = ScenePopulation::real(config.screen_depth, 1.0);
    let synthetic = sample_scene(&real, config.seed);
    let fake_image = render_payload(&synthetic.points, &rig);

    let setup = ScreenSetup {
        depth: config.screen_depth,
        pixel_noise_sigma: config.pixel_noise_sigma,
        seed: config.seed,
        ..ScreenSetup::default()
    };
    let attack = recapture_attack(&fake_image, &rig, &attacker, &setup)?;
    let attack_report = check(
        &attack.container,
        &attack.correspondences,
        &rig,
        config.threshold,
        &trust_list,
        &ca_root,
    )?;

    let genuine = sample_scene(&real, config.seed.wrapping_add(1));
    let options = CaptureOptions {
        pixel_noise_sigma: config.pixel_noise_sigma,
        threshold: config.threshold,
        seed: config.seed,
        ..CaptureOptions::default()
    };
    let control = capture(&genuine, &rig, &device, &options)?;
    let control_report = check(
        &control.container,
        &control.correspondences,
        &rig,
        config.threshold,
        &trust_list,
        &ca_root,
    )?;

    Ok(DemoOutcome {
        attack: attack_report,
        control: control_report,
        mitigation: MITIGATION,
    })
}

fn check(
    bytes: &[u8],
    correspondences: &Correspondences,
    rig: &Rig,
    threshold: f64,
    trust_list: &TrustList,
    ca_root: &PublicKey,
) -> Result<DemoReport, DemoError> {
    let container = read_container(bytes).map_err(CaptureError::from)?;
    let verification = verify_container(&container, trust_list, ca_root);
    let planarity = classify_scene(correspondences, rig, threshold).map_err(CaptureError::from)?;
    Ok(DemoReport::new(
        verification,
        container.manifest.scene_label,
        planarity,
    ))
}
