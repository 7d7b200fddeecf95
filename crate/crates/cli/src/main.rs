mod commands;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::exit::Failure;

#[derive(Parser)]
#[command(
    name = "realseal",
    version,
    about = "Sign, verify and inspect .real provenance containers"
)]
struct Cli {
    /// Output style; `machine` prints canonical key=value lines.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelArg {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
    Auto,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Extension,
    Full,
}

/// Where verification gets its trust list from.
#[derive(Args, Clone, Default)]
pub struct TrustArgs {
    /// Trust list file as served by the CA.
    #[arg(long)]
    pub trustlist: Option<PathBuf>,
    /// CA service to fetch the trust list from.
    #[arg(long, env = "REALSEAL_CA_URL")]
    pub ca_url: Option<String>,
    /// CA root public key file; trust lists not signed by it are rejected.
    #[arg(long)]
    pub ca_key: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an Ed25519 key pair.
    Keygen {
        /// Private key path; the public key goes to `<out>.pub`.
        #[arg(long)]
        out: PathBuf,
        /// 64 hex digits for a deterministic key.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        force: bool,
    },
    /// Run or talk to the certificate authority.
    Ca {
        #[command(subcommand)]
        action: CaCommand,
    },
    /// Wrap a payload in a signed container.
    Sign {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        payload: PathBuf,
        /// Output path of the form `<name>.<ext>.real`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = LabelArg::Auto)]
        scene_label: LabelArg,
        /// Rig and correspondences the `auto` label is computed from.
        #[arg(long)]
        geometry: Option<PathBuf>,
        #[arg(long, default_value_t = realseal::geometry::DEFAULT_PLANARITY_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value = "realseal-cli")]
        device_id: String,
        /// `YYYY-MM-DDTHH:MM:SSZ`; defaults to now.
        #[arg(long)]
        capture_time: Option<String>,
    },
    /// Check a container against a trust list.
    Verify {
        path: PathBuf,
        #[command(flatten)]
        trust: TrustArgs,
    },
    /// Show a container's header and manifest without verifying it.
    Inspect { path: PathBuf },
    /// Extract the payload of a verified container.
    Unwrap {
        path: PathBuf,
        /// Destination; the inner extension is appended if missing.
        #[arg(long)]
        out: PathBuf,
        /// Extract even if verification fails.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        trust: TrustArgs,
    },
    /// Count and optionally verify containers under a directory.
    Scan {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Extension)]
        mode: ModeArg,
        /// First write a synthetic corpus of N files into the root.
        #[arg(long)]
        generate: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        trust: TrustArgs,
    },
    /// Decide whether a stereo rig was looking at a flat surface.
    SpoofCheck {
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long, default_value_t = realseal::geometry::DEFAULT_PLANARITY_THRESHOLD)]
        threshold: f64,
        /// Compare against the label signed into this container.
        #[arg(long)]
        container: Option<PathBuf>,
    },
    /// Score sensing designs and pick the best for each cost weight.
    DesignEval {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated cost weights.
        #[arg(long)]
        beta: Option<String>,
        /// Comma-separated design names from the menu.
        #[arg(long)]
        designs: Option<String>,
        /// Scenes per class for training and for evaluation.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Photograph a screen with a trusted camera and see who notices.
    DemoSpoof {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Use a running CA instead of an in-process one.
        #[arg(long)]
        ca_url: Option<String>,
        #[arg(long)]
        ca_key: Option<PathBuf>,
        #[arg(long, env = "REALSEAL_ADMIN_TOKEN")]
        admin_token: Option<String>,
        /// Sign the recapture with a key the CA has never seen.
        #[arg(long)]
        unregistered: bool,
    },
}

#[derive(Subcommand)]
enum CaCommand {
    /// Serve the trust authority over HTTP until interrupted.
    Serve {
        /// CA private key file.
        #[arg(long)]
        key: PathBuf,
        #[arg(long, env = "REALSEAL_ADMIN_TOKEN")]
        admin_token: String,
        #[arg(long, default_value = "127.0.0.1:8700")]
        listen: String,
        /// Operation log; state is kept in memory only when absent.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Submit a manufacturer key for approval.
    Register {
        #[arg(long, env = "REALSEAL_CA_URL")]
        ca_url: String,
        #[arg(long)]
        ca_key: PathBuf,
        #[arg(long)]
        name: String,
        /// Manufacturer public key file.
        #[arg(long)]
        public_key: PathBuf,
    },
    Approve {
        #[arg(long, env = "REALSEAL_CA_URL")]
        ca_url: String,
        #[arg(long)]
        ca_key: PathBuf,
        #[arg(long)]
        fingerprint: String,
        #[arg(long, env = "REALSEAL_ADMIN_TOKEN")]
        admin_token: String,
    },
    Revoke {
        #[arg(long, env = "REALSEAL_CA_URL")]
        ca_url: String,
        #[arg(long)]
        ca_key: PathBuf,
        #[arg(long)]
        fingerprint: String,
        #[arg(long, env = "REALSEAL_ADMIN_TOKEN")]
        admin_token: String,
        #[arg(long, default_value = "")]
        reason: String,
    },
    /// Download and validate the current trust list.
    Fetch {
        #[arg(long, env = "REALSEAL_CA_URL")]
        ca_url: String,
        #[arg(long)]
        ca_key: PathBuf,
        /// Save the validated list here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let out = commands::Output::new(cli.format);
    match cli.command {
        Command::Keygen {
            out: path,
            seed,
            force,
        } => commands::keygen(&out, &path, seed.as_deref(), force),
        Command::Ca { action } => match action {
            CaCommand::Serve {
                key,
                admin_token,
                listen,
                log,
            } => commands::ca_serve(&out, &key, &admin_token, &listen, log.as_deref()),
            CaCommand::Register {
                ca_url,
                ca_key,
                name,
                public_key,
            } => commands::ca_register(&out, &ca_url, &ca_key, &name, &public_key),
            CaCommand::Approve {
                ca_url,
                ca_key,
                fingerprint,
                admin_token,
            } => commands::ca_mutate(&out, &ca_url, &ca_key, &fingerprint, &admin_token, None),
            CaCommand::Revoke {
                ca_url,
                ca_key,
                fingerprint,
                admin_token,
                reason,
            } => commands::ca_mutate(
                &out,
                &ca_url,
                &ca_key,
                &fingerprint,
                &admin_token,
                Some(&reason),
            ),
            CaCommand::Fetch {
                ca_url,
                ca_key,
                out: dest,
            } => commands::ca_fetch(&out, &ca_url, &ca_key, dest.as_deref()),
        },
        Command::Sign {
            key,
            payload,
            out: dest,
            scene_label,
            geometry,
            threshold,
            device_id,
            capture_time,
        } => commands::sign(
            &out,
            commands::SignArgs {
                key,
                payload,
                out: dest,
                scene_label,
                geometry,
                threshold,
                device_id,
                capture_time,
            },
        ),
        Command::Verify { path, trust } => commands::verify(&out, &path, &trust),
        Command::Inspect { path } => commands::inspect(&out, &path),
        Command::Unwrap {
            path,
            out: dest,
            force,
            trust,
        } => commands::unwrap(&out, &path, &dest, force, &trust),
        Command::Scan {
            root,
            mode,
            generate,
            seed,
            trust,
        } => commands::scan(&out, &root, mode, generate, seed, &trust),
        Command::SpoofCheck {
            geometry,
            threshold,
            container,
        } => commands::spoof_check(&out, &geometry, threshold, container.as_deref()),
        Command::DesignEval {
            config,
            beta,
            designs,
            samples,
            seed,
        } => commands::design_eval(
            &out,
            config.as_deref(),
            beta.as_deref(),
            designs.as_deref(),
            samples,
            seed,
        ),
        Command::DemoSpoof {
            config,
            threshold,
            seed,
            ca_url,
            ca_key,
            admin_token,
            unregistered,
        } => commands::demo_spoof(
            &out,
            commands::DemoArgs {
                config,
                threshold,
                seed,
                ca_url,
                ca_key,
                admin_token,
                unregistered,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let format = cli.format;
    let code = match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            match format {
                Format::Machine => print!("{}", failure.to_record().to_canonical_string()),
                Format::Human => eprintln!("realseal: {failure}"),
            }
            failure.code()
        }
    };
    ExitCode::from(code as u8)
}
