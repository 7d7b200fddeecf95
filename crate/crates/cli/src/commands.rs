use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{SubsecRound, Utc};
use realseal::canon::Record;
use realseal::capture::{
    run_spoof_demo, DemoConfig, DemoOutcome, DemoReport, DemoTrust, DeviceIdentity,
};
use realseal::container::{
    has_real_suffix, inner_extension_of, read_container, unwrap as unwrap_container, verify_bytes,
    write_container, ContainerError, Verdict, VerificationReport,
};
use realseal::crypto::{
    content_hash, decode_private_key_file, decode_public_key_file, encode_private_key_file,
    encode_public_key_file, generate_keypair, Fingerprint, KeyPair, PublicKey,
};
use realseal::geometry::{classify_scene, io::parse_geometry};
use realseal::manifest::{
    is_valid_inner_format, parse_time, sign_manifest, ProvenanceManifest, SceneLabel, CLAIM_VERSION,
};
use realseal::scan::{generate_corpus, scan as scan_tree, ScanMode, ScanReport};
use realseal::sensing::{parse_list, sweep_beta, ExperimentConfig, Selection};
use realseal::trust::{validate_trust_list, TrustAuthority, TrustClient, TrustList};

use crate::exit::Failure;
use crate::{Format, LabelArg, ModeArg, TrustArgs};

pub struct Output {
    format: Format,
}

impl Output {
    pub fn new(format: Format) -> Self {
        Self { format }
    }

    /// Prints `record` in machine mode, or whatever `human` renders.
    fn emit(&self, record: &Record, human: impl FnOnce() -> String) {
        let mut stdout = std::io::stdout().lock();
        let text = match self.format {
            Format::Machine => record.to_canonical_string(),
            Format::Human => {
                let mut s = human();
                if !s.ends_with('\n') {
                    s.push('\n');
                }
                s
            }
        };
        let _ = stdout.write_all(text.as_bytes());
        let _ = stdout.flush();
    }

    fn warn(&self, msg: &str) {
        eprintln!("realseal: warning: {msg}");
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::NoInput(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read_file(path)?)
        .map_err(|_| Failure::Data(format!("{}: not UTF-8", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::CantCreate(format!("{}: {e}", path.display())))
}

fn load_private_key(path: &Path) -> Result<KeyPair, Failure> {
    decode_private_key_file(&read_text(path)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load_public_key(path: &Path) -> Result<PublicKey, Failure> {
    decode_public_key_file(&read_text(path)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn parse_fingerprint(s: &str) -> Result<Fingerprint, Failure> {
    s.parse()
        .map_err(|e| Failure::Usage(format!("--fingerprint: {e}")))
}

fn public_path(private: &Path) -> PathBuf {
    let mut s = private.as_os_str().to_owned();
    s.push(".pub");
    PathBuf::from(s)
}

pub fn keygen(out: &Output, path: &Path, seed: Option<&str>, force: bool) -> Result<i32, Failure> {
    let seed_bytes = seed
        .map(|s| hex::decode(s).map_err(|e| Failure::Usage(format!("--seed: {e}"))))
        .transpose()?;
    let kp = generate_keypair(seed_bytes.as_deref())
        .map_err(|e| Failure::Usage(format!("--seed: {e}")))?;
    let pub_path = public_path(path);
    if !force && (path.exists() || pub_path.exists()) {
        return Err(Failure::CantCreate(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    write_file(path, encode_private_key_file(&kp).as_bytes())?;
    write_file(
        &pub_path,
        encode_public_key_file(&kp.public_key()).as_bytes(),
    )?;
    let record = Record::new()
        .with("fingerprint", kp.fingerprint())
        .with("public_key", kp.public_key().to_hex())
        .with("private_key_path", path.display())
        .with("public_key_path", pub_path.display());
    out.emit(&record, || {
        format!(
            "fingerprint {}\nprivate key {}\npublic key  {}",
            kp.fingerprint(),
            path.display(),
            pub_path.display()
        )
    });
    Ok(0)
}

pub fn ca_serve(
    out: &Output,
    key: &Path,
    token: &str,
    listen: &str,
    log: Option<&Path>,
) -> Result<i32, Failure> {
    let ca = load_private_key(key)?;
    if token.is_empty() {
        return Err(Failure::Usage("--admin-token must not be empty".into()));
    }
    let ca_fp = ca.fingerprint();
    let authority = match log {
        Some(p) => TrustAuthority::open(ca, token, p).map_err(|e| Failure::Data(e.to_string()))?,
        None => TrustAuthority::in_memory(ca, token),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Software(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .map_err(|e| Failure::Unavailable(format!("cannot listen on {listen}: {e}")))?;
        let addr = listener
            .local_addr()
            .map_err(|e| Failure::Software(e.to_string()))?;
        let record = Record::new()
            .with("listen", format!("http://{addr}"))
            .with("ca_fingerprint", ca_fp);
        out.emit(&record, || {
            format!("trust authority {ca_fp} listening on http://{addr}")
        });
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        realseal::trust::serve(listener, Arc::new(authority), shutdown)
            .await
            .map_err(|e| Failure::Unavailable(e.to_string()))
    })?;
    Ok(0)
}

pub fn ca_register(
    out: &Output,
    url: &str,
    ca_key: &Path,
    name: &str,
    public_key: &Path,
) -> Result<i32, Failure> {
    let client = TrustClient::new(url, load_public_key(ca_key)?);
    let pk = load_public_key(public_key)?;
    let fp = client.register(name, &pk)?;
    let record = Record::new()
        .with("fingerprint", fp)
        .with("status", "pending");
    out.emit(&record, || {
        format!("registered {name} as {fp} (pending approval)")
    });
    Ok(0)
}

pub fn ca_mutate(
    out: &Output,
    url: &str,
    ca_key: &Path,
    fingerprint: &str,
    token: &str,
    revoke_reason: Option<&str>,
) -> Result<i32, Failure> {
    let client = TrustClient::new(url, load_public_key(ca_key)?);
    let fp = parse_fingerprint(fingerprint)?;
    let version = match revoke_reason {
        Some(reason) => client.revoke(&fp, token, reason)?,
        None => client.approve(&fp, token)?,
    };
    // Read the result back through a validated list.
    let list = client.fetch()?;
    let status = list
        .entry(&fp)
        .map(|e| e.status.to_string())
        .ok_or_else(|| {
            Failure::Software(format!(
                "{fp} missing from list version {}",
                list.list_version
            ))
        })?;
    let record = Record::new()
        .with("fingerprint", fp)
        .with("status", &status)
        .with("list_version", version);
    out.emit(&record, || {
        format!("{fp} is now {status} (trust list version {version})")
    });
    Ok(0)
}

pub fn ca_fetch(
    out: &Output,
    url: &str,
    ca_key: &Path,
    dest: Option<&Path>,
) -> Result<i32, Failure> {
    let root = load_public_key(ca_key)?;
    let client = TrustClient::new(url, root);
    let wire = client.fetch_wire()?;
    let list = validate_trust_list(&wire, &root)
        .map_err(|e| Failure::Data(format!("trust list rejected: {e}")))?;
    if let Some(p) = dest {
        write_file(p, &wire)?;
    }
    let mut record = Record::new()
        .with("list_version", list.list_version)
        .with("entry_count", list.entries.len());
    for (i, e) in list.entries.iter().enumerate() {
        record.insert(format!("entry.{i}.fingerprint"), e.fingerprint);
        record.insert(format!("entry.{i}.manufacturer_name"), &e.manufacturer_name);
        record.insert(format!("entry.{i}.status"), e.status);
    }
    out.emit(&record, || {
        let mut s = format!(
            "trust list version {} ({} entries)\n",
            list.list_version,
            list.entries.len()
        );
        for e in &list.entries {
            s.push_str(&format!(
                "  {}  {:<8} {}\n",
                e.fingerprint,
                e.status.to_string(),
                e.manufacturer_name
            ));
        }
        s
    });
    Ok(0)
}

/// Loads the trust list named by the flags. `--trustlist` wins over a URL
/// (which may come from the environment).
pub fn resolve_trust(args: &TrustArgs) -> Result<(TrustList, PublicKey), Failure> {
    if args.trustlist.is_none() && args.ca_url.is_none() {
        return Err(Failure::Usage(
            "no trust source: pass --trustlist or --ca-url, or set REALSEAL_CA_URL".into(),
        ));
    }
    let Some(key_path) = &args.ca_key else {
        return Err(Failure::Usage(
            "--ca-key (the CA root public key) is required to check a trust list".into(),
        ));
    };
    let root = load_public_key(key_path)?;
    let list = match (&args.trustlist, &args.ca_url) {
        (Some(path), _) => validate_trust_list(&read_file(path)?, &root)
            .map_err(|e| Failure::Data(format!("{}: trust list rejected: {e}", path.display())))?,
        (None, Some(url)) => TrustClient::new(url.clone(), root).fetch()?,
        (None, None) => unreachable!(),
    };
    Ok((list, root))
}

pub struct SignArgs {
    pub key: PathBuf,
    pub payload: PathBuf,
    pub out: PathBuf,
    pub scene_label: LabelArg,
    pub geometry: Option<PathBuf>,
    pub threshold: f64,
    pub device_id: String,
    pub capture_time: Option<String>,
}

pub fn sign(out: &Output, args: SignArgs) -> Result<i32, Failure> {
    if !has_real_suffix(&args.out) {
        return Err(Failure::Usage(format!(
            "--out {} must end in .<ext>.real",
            args.out.display()
        )));
    }
    let inner = inner_extension_of(&args.out)
        .filter(|e| is_valid_inner_format(e))
        .ok_or_else(|| {
            Failure::Usage(format!(
                "--out {}: no valid inner extension before .real",
                args.out.display()
            ))
        })?;
    if let Some(ext) = args.payload.extension().and_then(|e| e.to_str()) {
        if ext.to_ascii_lowercase() != inner {
            return Err(Failure::Usage(format!(
                "payload is .{ext} but --out says .{inner}"
            )));
        }
    }
    let kp = load_private_key(&args.key)?;
    let payload = read_file(&args.payload)?;
    let mut score = None;
    let scene_label = match args.scene_label {
        LabelArg::TwoD => SceneLabel::Label2D,
        LabelArg::ThreeD => SceneLabel::Label3D,
        LabelArg::Auto => {
            let Some(geo) = &args.geometry else {
                return Err(Failure::Usage(
                    "--scene-label auto needs --geometry; a single camera cannot tell 2D from 3D"
                        .into(),
                ));
            };
            let (rig, pairs) = parse_geometry::<f64>(&read_text(geo)?)?;
            let report = classify_scene(&pairs, &rig, args.threshold)?;
            score = Some(report.normalized_score);
            report.label
        }
    };
    let capture_time = match &args.capture_time {
        Some(t) => parse_time(t).map_err(|e| Failure::Usage(format!("--capture-time: {e}")))?,
        None => Utc::now().trunc_subsecs(0),
    };
    let manifest = ProvenanceManifest {
        claim_version: CLAIM_VERSION,
        signer_fingerprint: kp.fingerprint(),
        content_hash: content_hash(&payload),
        inner_format: inner.clone(),
        scene_label,
        capture_time,
        device_id: args.device_id,
    };
    let signature = sign_manifest(&manifest, &kp).map_err(|e| Failure::Usage(e.to_string()))?;
    let bytes = write_container(&payload, &inner, &manifest, &signature)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    write_file(&args.out, &bytes)?;
    let mut record = Record::new()
        .with("path", args.out.display())
        .with("signer_fingerprint", kp.fingerprint())
        .with("scene_label", scene_label)
        .with("content_hash", manifest.content_hash)
        .with("bytes", bytes.len());
    if let Some(s) = score {
        record.insert("normalized_score", s);
    }
    out.emit(&record, || {
        format!(
            "signed {} ({} bytes, {} scene) with {}",
            args.out.display(),
            bytes.len(),
            scene_label,
            kp.fingerprint()
        )
    });
    Ok(0)
}

fn render_report(path: &Path, report: &VerificationReport) -> (Record, String) {
    let mut record = report.to_record();
    record.insert("path", path.display());
    record.insert("exit_code", report.verdict.exit_code());
    let mut human = format!(
        "{}: {}\n  {}",
        path.display(),
        report.verdict,
        report.detail
    );
    if let Some(label) = report.scene_label {
        let nature = match label {
            SceneLabel::Label2D => "a flat (2D) subject such as a print or a screen",
            SceneLabel::Label3D => "a three-dimensional scene",
        };
        human.push_str(&format!(
            "\n  scene_label={label}: the camera recorded {nature}"
        ));
    }
    (record, human)
}

pub fn verify(out: &Output, path: &Path, trust: &TrustArgs) -> Result<i32, Failure> {
    let (list, root) = resolve_trust(trust)?;
    let bytes = read_file(path)?;
    let report = verify_bytes(&bytes, &list, &root);
    let (record, human) = render_report(path, &report);
    out.emit(&record, || human);
    Ok(report.verdict.exit_code())
}

pub fn inspect(out: &Output, path: &Path) -> Result<i32, Failure> {
    let bytes = read_file(path)?;
    let c = match read_container(&bytes) {
        Ok(c) => c,
        Err(e) => {
            let record = Record::new()
                .with("verdict", Verdict::Malformed)
                .with("detail", e.to_string())
                .with("path", path.display());
            out.emit(&record, || {
                format!("{}: not a valid container: {e}", path.display())
            });
            return Ok(Verdict::Malformed.exit_code());
        }
    };
    let m = &c.manifest;
    let mut record = Record::new()
        .with("path", path.display())
        .with("version", c.version)
        .with("payload_bytes", c.payload.len())
        .with("signature", c.signature.to_hex());
    for (k, v) in m.to_record().iter() {
        record.insert(format!("manifest.{k}"), v);
    }
    out.emit(&record, || {
        format!(
            "{}\n  format version {}\n  scene label    {}\n  inner format   {} ({} bytes)\n  signer         {}\n  device         {}\n  captured       {}\n  content hash   {}\n  (signature not checked; use `verify`)",
            path.display(),
            c.version,
            c.scene_label,
            c.inner_format,
            c.payload.len(),
            m.signer_fingerprint,
            m.device_id,
            realseal::manifest::format_time(&m.capture_time),
            m.content_hash
        )
    });
    Ok(0)
}

pub fn unwrap(
    out: &Output,
    path: &Path,
    dest: &Path,
    force: bool,
    trust: &TrustArgs,
) -> Result<i32, Failure> {
    let (list, root) = resolve_trust(trust)?;
    let bytes = read_file(path)?;
    let container =
        read_container(&bytes).map_err(|e| Failure::Verdict(Verdict::Malformed, e.to_string()))?;
    let report = realseal::container::verify_container(&container, &list, &root);
    let outcome = match unwrap_container(&container, dest, &report, force) {
        Ok(o) => o,
        Err(ContainerError::RefusedUnverified) => {
            return Err(Failure::Verdict(
                report.verdict,
                format!(
                    "{}; refusing to extract (use --force to override)",
                    report.detail
                ),
            ))
        }
        Err(e) => return Err(Failure::CantCreate(e.to_string())),
    };
    if let Some(w) = &outcome.warning {
        out.warn(w);
    }
    let mut record = report.to_record();
    record.insert("path", outcome.path.display());
    record.insert("bytes_written", outcome.bytes_written);
    out.emit(&record, || {
        format!(
            "wrote {} ({} bytes, verdict {})",
            outcome.path.display(),
            outcome.bytes_written,
            report.verdict
        )
    });
    Ok(0)
}

fn sibling(root: &Path, suffix: &str) -> PathBuf {
    let mut s = root.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes a corpus plus `<root>.trustlist` and `<root>.ca.pub` next to it,
/// returning the trust material for an immediate full scan.
fn generate(
    out: &Output,
    root: &Path,
    n: usize,
    seed: u64,
) -> Result<(TrustList, PublicKey), Failure> {
    if root.exists()
        && fs::read_dir(root)
            .map(|mut d| d.next().is_some())
            .unwrap_or(true)
    {
        return Err(Failure::CantCreate(format!(
            "{} exists and is not empty",
            root.display()
        )));
    }
    fs::create_dir_all(root)
        .map_err(|e| Failure::CantCreate(format!("{}: {e}", root.display())))?;
    let mut device_seed = [0u8; 32];
    device_seed[..8].copy_from_slice(&seed.to_le_bytes());
    let device = DeviceIdentity::from_seed("corpus-cam", device_seed)
        .map_err(|e| Failure::Software(e.to_string()))?;
    let summary = generate_corpus(root, n, &device, seed)
        .map_err(|e| Failure::CantCreate(format!("{}: {e}", root.display())))?;

    let ca = KeyPair::from_seed(&[0xC0; 32]).map_err(|e| Failure::Software(e.to_string()))?;
    let authority = TrustAuthority::in_memory(ca, "corpus");
    authority
        .register_manufacturer("Corpus Cameras", device.public_key())
        .and_then(|r| authority.approve(&r.fingerprint, "corpus"))
        .map_err(|e| Failure::Software(e.to_string()))?;
    let published = authority.published();
    let list_path = sibling(root, ".trustlist");
    let key_path = sibling(root, ".ca.pub");
    write_file(&list_path, &published.wire)?;
    write_file(
        &key_path,
        encode_public_key_file(&authority.ca_public_key()).as_bytes(),
    )?;
    if out.format == Format::Human {
        eprintln!(
            "generated {} files ({} .real) in {}; trust list {}, CA key {}",
            summary.total_files,
            summary.real_files,
            root.display(),
            list_path.display(),
            key_path.display()
        );
    }
    Ok((published.list.clone(), authority.ca_public_key()))
}

pub fn scan(
    out: &Output,
    root: &Path,
    mode: ModeArg,
    generate_n: Option<usize>,
    seed: u64,
    trust: &TrustArgs,
) -> Result<i32, Failure> {
    let generated = generate_n
        .map(|n| generate(out, root, n, seed))
        .transpose()?;
    if !root.is_dir() {
        return Err(Failure::NoInput(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let mode = match mode {
        ModeArg::Extension => ScanMode::Extension,
        ModeArg::Full => ScanMode::Full,
    };
    let trust_material = match (mode, generated) {
        (ScanMode::Extension, _) => None,
        (ScanMode::Full, Some(g)) if trust.trustlist.is_none() && trust.ca_url.is_none() => Some(g),
        (ScanMode::Full, _) => Some(resolve_trust(trust)?),
    };
    let report = scan_tree(root, mode, trust_material.as_ref().map(|(l, k)| (l, k)))
        .map_err(Failure::Usage)?;
    out.emit(&report.to_record(), || render_scan(&report));
    Ok(0)
}

fn render_scan(r: &ScanReport) -> String {
    let mut s = format!(
        "{} files, {} with a .real suffix\nextension scan {:.3} s\n",
        r.total_files,
        r.real_extension_files,
        r.extension_scan_duration.as_secs_f64()
    );
    if let Some(full) = r.full_scan_duration {
        s.push_str(&format!(
            "full scan      {:.3} s\n  verified {}  tampered {}  untrusted {}  revoked {}  malformed {}\n",
            full.as_secs_f64(),
            r.verified,
            r.tampered,
            r.untrusted,
            r.revoked,
            r.malformed
        ));
        if r.unlabelled_containers > 0 {
            s.push_str(&format!(
                "  {} containers found under other names\n",
                r.unlabelled_containers
            ));
        }
    }
    if r.unreadable > 0 {
        s.push_str(&format!("{} entries could not be read\n", r.unreadable));
    }
    s
}

pub fn spoof_check(
    out: &Output,
    geometry: &Path,
    threshold: f64,
    container: Option<&Path>,
) -> Result<i32, Failure> {
    if !(threshold >= 0.0) {
        return Err(Failure::Usage("--threshold must be nonnegative".into()));
    }
    let (rig, pairs) = parse_geometry::<f64>(&read_text(geometry)?)?;
    let report = classify_scene(&pairs, &rig, threshold)?;
    let claimed = container
        .map(|p| {
            read_container(&read_file(p)?)
                .map(|c| c.scene_label)
                .map_err(|e| Failure::Verdict(Verdict::Malformed, e.to_string()))
        })
        .transpose()?;
    let mut record = Record::new()
        .with("label", report.label)
        .with("normalized_score", report.normalized_score)
        .with("rms_residual", report.rms_residual)
        .with("threshold", report.threshold_used)
        .with("points", report.points_3d.len())
        .with(
            "plane_normal",
            format!(
                "{},{},{}",
                report.plane_normal.x(),
                report.plane_normal.y(),
                report.plane_normal.z()
            ),
        )
        .with("plane_offset", report.plane_offset);
    if let Some(c) = claimed {
        record.insert("claimed_label", c);
        record.insert("label_mismatch", c != report.label);
    }
    out.emit(&record, || {
        let mut s = format!(
            "{} scene: normalized planarity {:.6} ({} {}) over {} points",
            report.label,
            report.normalized_score,
            if report.label == SceneLabel::Label2D {
                "<="
            } else {
                ">"
            },
            threshold,
            report.points_3d.len()
        );
        if let Some(c) = claimed {
            if c != report.label {
                s.push_str(&format!(
                    "\nWARNING: container claims {c} but the cameras saw a {} scene",
                    report.label
                ));
            } else {
                s.push_str(&format!("\ncontainer label {c} agrees"));
            }
        }
        s
    });
    Ok(0)
}

pub fn design_eval(
    out: &Output,
    config: Option<&Path>,
    beta: Option<&str>,
    designs: Option<&str>,
    samples: Option<usize>,
    seed: Option<u64>,
) -> Result<i32, Failure> {
    let mut cfg = match config {
        Some(p) => {
            let record = Record::parse_lenient(&read_text(p)?)
                .map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_record(&record)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(b) = beta {
        cfg.betas = parse_list(b)
            .ok_or_else(|| Failure::Usage("--beta: expected comma-separated numbers".into()))?;
    }
    if let Some(names) = designs {
        let mut menu = Vec::new();
        for name in names.split(',').map(str::trim) {
            let d = cfg
                .menu
                .iter()
                .find(|d| d.name == name || d.kind.as_str() == name)
                .ok_or_else(|| Failure::Usage(format!("--designs: no design named `{name}`")))?;
            menu.push(d.clone());
        }
        cfg.menu = menu;
    }
    if let Some(n) = samples {
        cfg.experiment.train_per_class = n;
        cfg.experiment.eval_per_class = n;
    }
    if let Some(s) = seed {
        cfg.experiment.seed = s;
    }
    let sweep = sweep_beta(&cfg.menu, &cfg.experiment, &cfg.betas)?;
    let mut record = Record::new()
        .with("beta_count", sweep.len())
        .with("seed", cfg.experiment.seed);
    for (i, (b, sel)) in sweep.iter().enumerate() {
        record.insert(format!("beta.{i}.value"), b);
        record.insert(format!("beta.{i}.selected"), &sel.best.name);
        for (j, r) in sel.reports.iter().enumerate() {
            r.to_record(&format!("beta.{i}.design.{j}."), &mut record);
        }
    }
    out.emit(&record, || render_sweep(&sweep));
    Ok(0)
}

fn render_sweep(sweep: &[(f64, Selection)]) -> String {
    let mut s = String::new();
    for (beta, sel) in sweep {
        s.push_str(&format!("beta = {beta}\n"));
        s.push_str(&format!(
            "  {:<14} {:>5} {:>9} {:>9} {:>9} {:>10} {:>6}\n",
            "design", "cost", "j_real", "j_spoof", "cost_term", "objective", "auc"
        ));
        for r in &sel.reports {
            let mark = if r.design == sel.best { "*" } else { " " };
            s.push_str(&format!(
                "{mark} {:<14} {:>5} {:>9.4} {:>9.4} {:>9.4} {:>10.4} {:>6.3}\n",
                r.design.name, r.design.cost, r.j_real, r.j_spoof, r.cost_term, r.objective, r.auc
            ));
        }
        s.push_str(&format!("  selected: {}\n", sel.best.name));
    }
    s
}

pub struct DemoArgs {
    pub config: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    pub ca_url: Option<String>,
    pub ca_key: Option<PathBuf>,
    pub admin_token: Option<String>,
    pub unregistered: bool,
}

pub fn demo_spoof(out: &Output, args: DemoArgs) -> Result<i32, Failure> {
    let mut cfg = match &args.config {
        Some(p) => {
            let record = Record::parse_lenient(&read_text(p)?)
                .map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
            DemoConfig::from_record(&record).map_err(|e| Failure::Data(e.to_string()))?
        }
        None => DemoConfig::default(),
    };
    if let Some(t) = args.threshold {
        cfg.threshold = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.unregistered_attacker |= args.unregistered;
    if let Some(url) = args.ca_url {
        let (Some(key), Some(token)) = (&args.ca_key, &args.admin_token) else {
            return Err(Failure::Usage(
                "--ca-url needs --ca-key and --admin-token".into(),
            ));
        };
        cfg.trust = DemoTrust::Remote {
            url,
            admin_token: token.clone(),
            ca_root: load_public_key(key)?,
        };
    }
    let outcome = run_spoof_demo(&cfg)?;
    out.emit(&outcome.to_record(), || render_demo(&outcome));
    Ok(0)
}

fn render_demo(o: &DemoOutcome) -> String {
    fn block(title: &str, r: &DemoReport) -> String {
        format!(
            "{title}\n  PKI verdict        {}\n  signed label       {}\n  cameras saw        {} (planarity {:.5}, threshold {})\n  viewer deceived    {}\n",
            r.pki_verdict,
            r.claimed_label,
            r.planarity.label,
            r.planarity.normalized_score,
            r.planarity.threshold_used,
            if r.deceived { "yes" } else { "no" }
        )
    }
    let mut s = block("Recapture of a screen by a trusted camera", &o.attack);
    if o.attack.deceived {
        s.push_str("  The signature checks out, yet the picture is of a flat display.\n");
    }
    s.push('\n');
    s.push_str(&block("Genuine capture (control)", &o.control));
    s.push_str(&format!("\nmitigation: {}", o.mitigation));
    if o.attack.label_mismatch() {
        s.push_str(&format!(
            "\n  here it flags the recapture: signed {} vs observed {}",
            o.attack.claimed_label, o.attack.planarity.label
        ));
    }
    s
}
