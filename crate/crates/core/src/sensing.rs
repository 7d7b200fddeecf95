//! Comparing sensing designs by how well a learned discriminator can tell
//! real scenes from flat spoofs, minus what the sensor costs.
//!
//! Each design reduces a scene to one number, the normalized planarity
//! score. A one-dimensional logistic model is trained on those numbers and
//! the design is scored by the adversarial log-likelihood objective
//! `mean ln D(real) + mean ln(1 - D(spoof)) - beta * cost`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::canon::{CanonError, Record};
use crate::geometry::{
    classify_scene, fit_plane, CameraRig, Correspondence, CorrespondenceSet, GeometryError, Pixel,
};
use crate::Point3;

pub const DEFAULT_FOCAL_PX: f64 = 500.0;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const TRAIN_ITERATIONS: usize = 500;
pub const TRAIN_STEP: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("training set needs both real and spoof examples")]
    DegenerateTraining,
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("invalid population: {0}")]
    InvalidPopulation(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("config: {0}")]
    Config(String),
}

impl From<CanonError> for SensingError {
    fn from(e: CanonError) -> Self {
        SensingError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignKind {
    Mono,
    Stereo,
    StereoWide,
    DepthSensor,
}

impl DesignKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignKind::Mono => "mono",
            DesignKind::Stereo => "stereo",
            DesignKind::StereoWide => "stereo-wide",
            DesignKind::DepthSensor => "depth",
        }
    }

    pub fn is_stereo(self) -> bool {
        matches!(self, DesignKind::Stereo | DesignKind::StereoWide)
    }

    pub fn default_cost(self) -> f64 {
        match self {
            DesignKind::Mono => 1.0,
            DesignKind::Stereo => 2.0,
            DesignKind::StereoWide => 2.5,
            DesignKind::DepthSensor => 4.0,
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DesignKind {
    type Err = SensingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "mono" => DesignKind::Mono,
            "stereo" => DesignKind::Stereo,
            "stereo-wide" | "stereowide" | "stereo_wide" => DesignKind::StereoWide,
            "depth" | "depthsensor" | "depth-sensor" => DesignKind::DepthSensor,
            other => {
                return Err(SensingError::InvalidDesign(format!(
                    "unknown kind `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingDesign {
    pub name: String,
    pub kind: DesignKind,
    pub baseline: f64,
    pub focal_px: f64,
    pub pixel_noise_sigma: f64,
    pub depth_noise_sigma: f64,
    pub cost: f64,
}

impl SensingDesign {
    pub fn mono() -> Self {
        Self {
            name: "mono".into(),
            kind: DesignKind::Mono,
            baseline: 0.0,
            focal_px: DEFAULT_FOCAL_PX,
            pixel_noise_sigma: 0.0,
            depth_noise_sigma: 0.0,
            cost: DesignKind::Mono.default_cost(),
        }
    }

    pub fn stereo(baseline: f64, pixel_noise_sigma: f64) -> Self {
        Self {
            name: "stereo".into(),
            kind: DesignKind::Stereo,
            baseline,
            pixel_noise_sigma,
            cost: DesignKind::Stereo.default_cost(),
            ..Self::mono()
        }
    }

    pub fn stereo_wide(baseline: f64, pixel_noise_sigma: f64) -> Self {
        Self {
            name: "stereo-wide".into(),
            kind: DesignKind::StereoWide,
            cost: DesignKind::StereoWide.default_cost(),
            ..Self::stereo(baseline, pixel_noise_sigma)
        }
    }

    pub fn depth_sensor(depth_noise_sigma: f64) -> Self {
        Self {
            name: "depth".into(),
            kind: DesignKind::DepthSensor,
            depth_noise_sigma,
            cost: DesignKind::DepthSensor.default_cost(),
            ..Self::mono()
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = cost;
        self
    }

    /// The four-entry menu used when no configuration is given.
    pub fn default_menu() -> Vec<Self> {
        vec![
            Self::mono(),
            Self::stereo(1.0, 0.5),
            Self::stereo_wide(2.0, 0.5),
            Self::depth_sensor(0.01),
        ]
    }

    pub fn validate(&self) -> Result<(), SensingError> {
        let bad = |m: &str| Err(SensingError::InvalidDesign(format!("{}: {m}", self.name)));
        if self.name.is_empty() {
            return Err(SensingError::InvalidDesign("empty name".into()));
        }
        if !(self.cost >= 0.0 && self.cost.is_finite()) {
            return bad("cost must be a nonnegative number");
        }
        if self.kind.is_stereo() && !(self.baseline > 0.0 && self.baseline.is_finite()) {
            return bad("stereo designs need a positive baseline");
        }
        if !(self.focal_px > 0.0) {
            return bad("focal length must be positive");
        }
        if !(self.pixel_noise_sigma >= 0.0) || !(self.depth_noise_sigma >= 0.0) {
            return bad("noise levels must be nonnegative");
        }
        Ok(())
    }

    pub fn rig(&self) -> Result<CameraRig<f64>, GeometryError> {
        CameraRig::rectified(self.focal_px, self.baseline)
    }

    fn to_record(&self, prefix: &str, r: &mut Record) {
        r.insert(format!("{prefix}name"), &self.name);
        r.insert(format!("{prefix}kind"), self.kind);
        r.insert(format!("{prefix}baseline"), self.baseline);
        r.insert(format!("{prefix}cost"), self.cost);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationKind {
    Real,
    Spoof,
}

/// Distribution over scenes. Real scenes fill a depth slab; spoofs lie on a
/// fronto-parallel plane, optionally perturbed in depth.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePopulation {
    pub kind: PopulationKind,
    pub depth_center: f64,
    pub depth_halfwidth: f64,
    pub plane_depth: f64,
    pub perturbation_sigma: f64,
    pub points_per_scene: usize,
    /// Points are spread over `[-w, w]` in x and y.
    pub lateral_halfwidth: f64,
}

impl ScenePopulation {
    pub fn real(depth_center: f64, depth_halfwidth: f64) -> Self {
        Self {
            kind: PopulationKind::Real,
            depth_center,
            depth_halfwidth,
            plane_depth: depth_center,
            perturbation_sigma: 0.0,
            points_per_scene: 64,
            lateral_halfwidth: 2.0,
        }
    }

    pub fn spoof(plane_depth: f64, perturbation_sigma: f64) -> Self {
        Self {
            kind: PopulationKind::Spoof,
            plane_depth,
            perturbation_sigma,
            ..Self::real(plane_depth, 1.0)
        }
    }

    pub fn validate(&self) -> Result<(), SensingError> {
        let bad = |m: &str| Err(SensingError::InvalidPopulation(m.into()));
        if self.points_per_scene < 4 {
            return bad("need at least 4 points per scene");
        }
        if !(self.lateral_halfwidth > 0.0) {
            return bad("lateral halfwidth must be positive");
        }
        match self.kind {
            PopulationKind::Real => {
                if !(self.depth_halfwidth > 0.0) {
                    return bad("depth halfwidth must be positive");
                }
                if !(self.depth_center - self.depth_halfwidth > 0.0) {
                    return bad("scene must lie in front of the cameras");
                }
            }
            PopulationKind::Spoof => {
                if !(self.perturbation_sigma >= 0.0) {
                    return bad("perturbation sigma must be nonnegative");
                }
                if !(self.plane_depth > 0.0) {
                    return bad("plane must lie in front of the cameras");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub points: Vec<Point3>,
}

/// Deterministic per-purpose generator: one ChaCha stream per `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sample_scene(population: &ScenePopulation, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = population.lateral_halfwidth;
    let noise = Normal::new(0.0, population.perturbation_sigma).expect("validated sigma");
    let points = (0..population.points_per_scene)
        .map(|_| {
            let x = rng.random_range(-w..=w);
            let y = rng.random_range(-w..=w);
            let z = match population.kind {
                PopulationKind::Real => {
                    let h = population.depth_halfwidth;
                    rng.random_range(population.depth_center - h..=population.depth_center + h)
                }
                PopulationKind::Spoof if population.perturbation_sigma == 0.0 => {
                    population.plane_depth
                }
                PopulationKind::Spoof => population.plane_depth + noise.sample(&mut rng),
            };
            Point3::new(x, y, z)
        })
        .collect();
    Scene { points }
}

/// Projects points through a rig, adding isotropic Gaussian pixel noise.
pub fn synthesize_correspondences(
    points: &[Point3],
    rig: &CameraRig<f64>,
    pixel_noise_sigma: f64,
    rng: &mut impl Rng,
) -> Result<CorrespondenceSet<f64>, GeometryError> {
    let noise =
        Normal::new(0.0, pixel_noise_sigma).map_err(|e| GeometryError::Format(e.to_string()))?;
    let mut jitter = |p: Pixel<f64>| {
        if pixel_noise_sigma == 0.0 {
            p
        } else {
            Pixel::new(p.u + noise.sample(rng), p.v + noise.sample(rng))
        }
    };
    let pairs = points
        .iter()
        .map(|p| {
            let c = rig.project(p)?;
            Ok(Correspondence {
                a: jitter(c.a),
                b: jitter(c.b),
            })
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    CorrespondenceSet::new(pairs)
}

/// The design's measurement of a scene: its normalized planarity score.
pub fn observe(scene: &Scene, design: &SensingDesign, seed: u64) -> Result<f64, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match design.kind {
        DesignKind::Mono => Ok(0.0),
        DesignKind::Stereo | DesignKind::StereoWide => {
            let rig = design.rig()?;
            let set = synthesize_correspondences(
                &scene.points,
                &rig,
                design.pixel_noise_sigma,
                &mut rng,
            )?;
            Ok(classify_scene(&set, &rig, 0.0)?.normalized_score)
        }
        DesignKind::DepthSensor => {
            let noise = Normal::new(0.0, design.depth_noise_sigma)
                .map_err(|e| GeometryError::Format(e.to_string()))?;
            let measured: Vec<Point3> = scene
                .points
                .iter()
                .map(|p| {
                    let dz = if design.depth_noise_sigma == 0.0 {
                        0.0
                    } else {
                        noise.sample(&mut rng)
                    };
                    Point3::new(p.x(), p.y(), p.z() + dz)
                })
                .collect();
            let fit = fit_plane(&measured)?;
            let mean_depth = measured.iter().map(|p| p.z()).sum::<f64>() / measured.len() as f64;
            Ok(fit.rms_residual / mean_depth)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example {
    pub feature: f64,
    pub is_real: bool,
}

/// One-dimensional logistic model `D(x) = sigmoid(weight * (x - shift) / scale + bias)`,
/// clamped to `[epsilon, 1 - epsilon]`.
///
/// Features are standardized with the training mean and spread so that the
/// fixed step size behaves the same for every design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discriminator {
    pub weight: f64,
    pub bias: f64,
    pub shift: f64,
    pub scale: f64,
    pub epsilon_clamp: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Discriminator {
    pub fn constant(p: f64) -> Self {
        Self {
            weight: 0.0,
            bias: (p / (1.0 - p)).ln(),
            shift: 0.0,
            scale: 1.0,
            epsilon_clamp: DEFAULT_EPSILON,
        }
    }

    pub fn standardize(&self, feature: f64) -> f64 {
        (feature - self.shift) / self.scale
    }

    /// Pre-sigmoid score; monotone in the probability.
    pub fn logit(&self, feature: f64) -> f64 {
        self.weight * self.standardize(feature) + self.bias
    }

    pub fn probability(&self, feature: f64) -> f64 {
        sigmoid(self.logit(feature)).clamp(self.epsilon_clamp, 1.0 - self.epsilon_clamp)
    }
}

/// Mean log-likelihood of labelled standardized features under `(w, b)`.
pub fn log_likelihood(w: f64, b: f64, data: &[(f64, bool)]) -> f64 {
    let sum: f64 = data
        .iter()
        .map(|&(z, y)| {
            let s = w * z + b;
            if y {
                -softplus(-s)
            } else {
                -softplus(s)
            }
        })
        .sum();
    sum / data.len() as f64
}

/// Analytic gradient of [`log_likelihood`] with respect to `(w, b)`.
pub fn gradient(w: f64, b: f64, data: &[(f64, bool)]) -> (f64, f64) {
    let n = data.len() as f64;
    let (gw, gb) = data.iter().fold((0.0, 0.0), |(gw, gb), &(z, y)| {
        let r = if y { 1.0 } else { 0.0 } - sigmoid(w * z + b);
        (gw + r * z, gb + r)
    });
    (gw / n, gb / n)
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub discriminator: Discriminator,
    /// Negative mean log-likelihood before each step and after the last.
    pub loss_history: Vec<f64>,
}

pub fn standardized(examples: &[Example]) -> (f64, f64, Vec<(f64, bool)>) {
    let n = examples.len() as f64;
    let mean = examples.iter().map(|e| e.feature).sum::<f64>() / n;
    let var = examples
        .iter()
        .map(|e| (e.feature - mean).powi(2))
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    let scale = if std > 0.0 && std.is_finite() {
        std
    } else {
        1.0
    };
    let data = examples
        .iter()
        .map(|e| ((e.feature - mean) / scale, e.is_real))
        .collect();
    (mean, scale, data)
}

pub fn train_discriminator(examples: &[Example]) -> Result<TrainingRun, SensingError> {
    let reals = examples.iter().filter(|e| e.is_real).count();
    if reals == 0 || reals == examples.len() {
        return Err(SensingError::DegenerateTraining);
    }
    let (shift, scale, data) = standardized(examples);
    let (mut w, mut b) = (0.0, 0.0);
    let mut loss_history = Vec::with_capacity(TRAIN_ITERATIONS + 1);
    for _ in 0..TRAIN_ITERATIONS {
        loss_history.push(-log_likelihood(w, b, &data));
        let (gw, gb) = gradient(w, b, &data);
        w += TRAIN_STEP * gw;
        b += TRAIN_STEP * gb;
    }
    loss_history.push(-log_likelihood(w, b, &data));
    Ok(TrainingRun {
        discriminator: Discriminator {
            weight: w,
            bias: b,
            shift,
            scale,
            epsilon_clamp: DEFAULT_EPSILON,
        },
        loss_history,
    })
}

pub fn fit_discriminator(examples: &[Example]) -> Result<Discriminator, SensingError> {
    Ok(train_discriminator(examples)?.discriminator)
}

/// Probability that a random real example outranks a random spoof, ties
/// counting one half.
pub fn auc(real_scores: &[f64], spoof_scores: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = real_scores
        .iter()
        .map(|&s| (s, true))
        .chain(spoof_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // rank-sum with midranks for ties
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j + 1) as f64 / 2.0;
        rank_sum += all[i..j].iter().filter(|e| e.1).count() as f64 * mid;
        i = j;
    }
    let (nr, ns) = (real_scores.len() as f64, spoof_scores.len() as f64);
    (rank_sum - nr * (nr + 1.0) / 2.0) / (nr * ns)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveReport {
    pub design: SensingDesign,
    pub j_real: f64,
    pub j_spoof: f64,
    pub cost_term: f64,
    pub objective: f64,
    pub auc: f64,
}

impl ObjectiveReport {
    pub fn to_record(&self, prefix: &str, r: &mut Record) {
        self.design.to_record(prefix, r);
        r.insert(format!("{prefix}j_real"), self.j_real);
        r.insert(format!("{prefix}j_spoof"), self.j_spoof);
        r.insert(format!("{prefix}cost_term"), self.cost_term);
        r.insert(format!("{prefix}objective"), self.objective);
        r.insert(format!("{prefix}auc"), self.auc);
    }

    /// Same design and likelihood terms, re-scored under another beta.
    pub fn with_beta(&self, beta: f64) -> Self {
        let cost_term = beta * self.design.cost;
        Self {
            cost_term,
            objective: self.j_real + self.j_spoof - cost_term,
            ..self.clone()
        }
    }
}

pub fn evaluate_objective(
    design: &SensingDesign,
    discriminator: &Discriminator,
    eval_real: &[f64],
    eval_spoof: &[f64],
    beta: f64,
) -> Result<ObjectiveReport, SensingError> {
    if eval_real.is_empty() || eval_spoof.is_empty() {
        return Err(SensingError::Empty("evaluation set"));
    }
    if !(beta >= 0.0) {
        return Err(SensingError::Config("beta must be nonnegative".into()));
    }
    let j_real = eval_real
        .iter()
        .map(|&x| discriminator.probability(x).ln())
        .sum::<f64>()
        / eval_real.len() as f64;
    let j_spoof = eval_spoof
        .iter()
        .map(|&x| (1.0 - discriminator.probability(x)).ln())
        .sum::<f64>()
        / eval_spoof.len() as f64;
    let real_logits: Vec<f64> = eval_real.iter().map(|&x| discriminator.logit(x)).collect();
    let spoof_logits: Vec<f64> = eval_spoof.iter().map(|&x| discriminator.logit(x)).collect();
    let cost_term = beta * design.cost;
    Ok(ObjectiveReport {
        design: design.clone(),
        j_real,
        j_spoof,
        cost_term,
        objective: j_real + j_spoof - cost_term,
        auc: auc(&real_logits, &spoof_logits),
    })
}

/// Everything `select_design` needs besides the menu and beta.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub real: ScenePopulation,
    pub spoof: ScenePopulation,
    pub train_per_class: usize,
    pub eval_per_class: usize,
    pub seed: u64,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            real: ScenePopulation::real(5.0, 1.0),
            spoof: ScenePopulation::spoof(5.0, 0.0),
            train_per_class: 100,
            eval_per_class: 200,
            seed: 7,
        }
    }
}

// Stream tags keep scene sampling and sensor noise independent.
const TRAIN_REAL: u64 = 0;
const TRAIN_SPOOF: u64 = 1;
const EVAL_REAL: u64 = 2;
const EVAL_SPOOF: u64 = 3;

impl Experiment {
    /// Features for `count` scenes; scenes depend only on the seed, so every
    /// design sees the same ones.
    fn features(
        &self,
        design: &SensingDesign,
        tag: u64,
        count: usize,
    ) -> Result<Vec<f64>, SensingError> {
        let population = if tag % 2 == 0 {
            &self.real
        } else {
            &self.spoof
        };
        let mut seeds = stream_rng(self.seed, tag);
        (0..count)
            .map(|_| {
                let scene_seed: u64 = seeds.random();
                let noise_seed: u64 = seeds.random();
                Ok(observe(
                    &sample_scene(population, scene_seed),
                    design,
                    noise_seed,
                )?)
            })
            .collect()
    }

    pub fn evaluate(
        &self,
        design: &SensingDesign,
        beta: f64,
    ) -> Result<ObjectiveReport, SensingError> {
        design.validate()?;
        self.real.validate()?;
        self.spoof.validate()?;
        if self.train_per_class == 0 || self.eval_per_class == 0 {
            return Err(SensingError::Empty("sample count"));
        }
        let train: Vec<Example> = self
            .features(design, TRAIN_REAL, self.train_per_class)?
            .into_iter()
            .map(|feature| Example {
                feature,
                is_real: true,
            })
            .chain(
                self.features(design, TRAIN_SPOOF, self.train_per_class)?
                    .into_iter()
                    .map(|feature| Example {
                        feature,
                        is_real: false,
                    }),
            )
            .collect();
        let d = fit_discriminator(&train)?;
        let eval_real = self.features(design, EVAL_REAL, self.eval_per_class)?;
        let eval_spoof = self.features(design, EVAL_SPOOF, self.eval_per_class)?;
        evaluate_objective(design, &d, &eval_real, &eval_spoof, beta)
    }
}

/// Orders reports best first: higher objective, then lower cost, then name.
pub fn rank(reports: &mut [ObjectiveReport]) {
    reports.sort_by(|a, b| {
        b.objective
            .total_cmp(&a.objective)
            .then(a.design.cost.total_cmp(&b.design.cost))
            .then_with(|| a.design.name.cmp(&b.design.name))
    });
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub best: SensingDesign,
    /// In menu order.
    pub reports: Vec<ObjectiveReport>,
}

/// Evaluates each design independently (in parallel) and returns the best.
pub fn select_design(
    menu: &[SensingDesign],
    experiment: &Experiment,
    beta: f64,
) -> Result<Selection, SensingError> {
    if menu.is_empty() {
        return Err(SensingError::Empty("design menu"));
    }
    let reports = menu
        .par_iter()
        .map(|d| experiment.evaluate(d, beta))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Selection {
        best: best_of(&reports),
        reports,
    })
}

pub fn best_of(reports: &[ObjectiveReport]) -> SensingDesign {
    let mut sorted = reports.to_vec();
    rank(&mut sorted);
    sorted[0].design.clone()
}

/// Best design for each beta, evaluating every design only once.
pub fn sweep_beta(
    menu: &[SensingDesign],
    experiment: &Experiment,
    betas: &[f64],
) -> Result<Vec<(f64, Selection)>, SensingError> {
    let base = select_design(menu, experiment, 0.0)?;
    betas
        .iter()
        .map(|&beta| {
            if !(beta >= 0.0) {
                return Err(SensingError::Config("beta must be nonnegative".into()));
            }
            let reports: Vec<_> = base.reports.iter().map(|r| r.with_beta(beta)).collect();
            Ok((
                beta,
                Selection {
                    best: best_of(&reports),
                    reports,
                },
            ))
        })
        .collect()
}

/// Experiment configuration file.
///
/// ```text
/// beta=0,0.1,1
/// design.0.kind=mono
/// design.1.kind=stereo
/// design.1.baseline=1
/// design.1.pixel_noise=0.5
/// eval_per_class=200
/// real.depth_center=5
/// real.depth_halfwidth=1
/// seed=7
/// spoof.plane_depth=5
/// spoof.perturbation_sigma=0
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub menu: Vec<SensingDesign>,
    pub experiment: Experiment,
    pub betas: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            menu: SensingDesign::default_menu(),
            experiment: Experiment::default(),
            betas: vec![0.0],
        }
    }
}

impl ExperimentConfig {
    pub fn from_record(r: &Record) -> Result<Self, SensingError> {
        let mut cfg = Self::default();
        let e = &mut cfg.experiment;
        e.seed = r.parse_or("seed", e.seed)?;
        e.train_per_class = r.parse_or("train_per_class", e.train_per_class)?;
        e.eval_per_class = r.parse_or("eval_per_class", e.eval_per_class)?;
        let points = r.parse_or("points_per_scene", e.real.points_per_scene)?;
        let lateral = r.parse_or("lateral_halfwidth", e.real.lateral_halfwidth)?;
        e.real = ScenePopulation {
            points_per_scene: points,
            lateral_halfwidth: lateral,
            ..ScenePopulation::real(
                r.parse_or("real.depth_center", e.real.depth_center)?,
                r.parse_or("real.depth_halfwidth", e.real.depth_halfwidth)?,
            )
        };
        e.spoof = ScenePopulation {
            points_per_scene: points,
            lateral_halfwidth: lateral,
            ..ScenePopulation::spoof(
                r.parse_or("spoof.plane_depth", e.spoof.plane_depth)?,
                r.parse_or("spoof.perturbation_sigma", e.spoof.perturbation_sigma)?,
            )
        };
        if let Some(raw) = r.get("beta") {
            cfg.betas = parse_list(raw)
                .ok_or_else(|| SensingError::Config("beta: expected numbers".into()))?;
        }
        let mut menu = Vec::new();
        for i in 0.. {
            let p = format!("design.{i}.");
            if r.with_prefix(&p).next().is_none() {
                break;
            }
            let kind: DesignKind = r.require(&format!("{p}kind"))?.parse()?;
            let design = SensingDesign {
                name: r.parse_or(&format!("{p}name"), kind.as_str().to_string())?,
                kind,
                baseline: r.parse_or(
                    &format!("{p}baseline"),
                    if kind.is_stereo() { 1.0 } else { 0.0 },
                )?,
                focal_px: r.parse_or(&format!("{p}focal_px"), DEFAULT_FOCAL_PX)?,
                pixel_noise_sigma: r.parse_or(&format!("{p}pixel_noise"), 0.0)?,
                depth_noise_sigma: r.parse_or(&format!("{p}depth_noise"), 0.0)?,
                cost: r.parse_or(&format!("{p}cost"), kind.default_cost())?,
            };
            design.validate()?;
            menu.push(design);
        }
        if !menu.is_empty() {
            cfg.menu = menu;
        }
        Ok(cfg)
    }
}

pub fn parse_list(raw: &str) -> Option<Vec<f64>> {
    raw.split(',').map(|s| s.trim().parse().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> Vec<Example> {
        (0..50)
            .map(|i| Example {
                feature: 1.0,
                is_real: i % 2 == 0,
            })
            .map(|mut e| {
                if !e.is_real {
                    e.feature = 0.0;
                }
                e
            })
            .collect()
    }

    #[test]
    fn flat_spoof_sampling_and_determinism() {
        let spoof = ScenePopulation::spoof(5.0, 0.0);
        assert!(sample_scene(&spoof, 3).points.iter().all(|p| p.z() == 5.0));
        let real = ScenePopulation {
            points_per_scene: 10_000,
            ..ScenePopulation::real(5.0, 1.0)
        };
        let s = sample_scene(&real, 1);
        assert!(s.points.iter().all(|p| (4.0..=6.0).contains(&p.z())));
        assert_eq!(s, sample_scene(&real, 1));
        assert_ne!(s, sample_scene(&real, 2));
    }

    #[test]
    fn observation_examples() {
        let flat = sample_scene(&ScenePopulation::spoof(5.0, 0.0), 9);
        let stereo = SensingDesign::stereo(1.0, 0.0);
        assert!(observe(&flat, &stereo, 0).unwrap() <= 1e-9);
        assert_eq!(observe(&flat, &SensingDesign::mono(), 0).unwrap(), 0.0);
        let real = sample_scene(&ScenePopulation::real(5.0, 1.0), 9);
        let score = observe(&real, &stereo, 0).unwrap();
        assert!((0.08..0.14).contains(&score), "{score}");
        let depth = observe(&real, &SensingDesign::depth_sensor(0.0), 0).unwrap();
        assert!((depth - score).abs() < 1e-9);
    }

    #[test]
    fn separable_training_is_perfect() {
        let ex = separable();
        let run = train_discriminator(&ex).unwrap();
        let d = run.discriminator;
        let correct = ex
            .iter()
            .filter(|e| (d.probability(e.feature) > 0.5) == e.is_real)
            .count();
        assert_eq!(correct, ex.len());
        assert!(run.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_is_rejected() {
        let ex = vec![
            Example {
                feature: 1.0,
                is_real: true
            };
            4
        ];
        assert!(matches!(
            fit_discriminator(&ex),
            Err(SensingError::DegenerateTraining)
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ex: Vec<Example> = (0..40)
            .map(|i| Example {
                feature: (i as f64 * 0.37).sin() + if i % 3 == 0 { 0.5 } else { 0.0 },
                is_real: i % 3 == 0,
            })
            .collect();
        let (_, _, data) = standardized(&ex);
        for (w, b) in [(0.0, 0.0), (0.7, -0.3), (-2.0, 1.5)] {
            let (gw, gb) = gradient(w, b, &data);
            let h = 1e-5;
            let nw =
                (log_likelihood(w + h, b, &data) - log_likelihood(w - h, b, &data)) / (2.0 * h);
            let nb =
                (log_likelihood(w, b + h, &data) - log_likelihood(w, b - h, &data)) / (2.0 * h);
            let rel = ((gw - nw).powi(2) + (gb - nb).powi(2)).sqrt() / (gw * gw + gb * gb).sqrt();
            assert!(rel <= 1e-6, "{rel:e}");
        }
    }

    #[test]
    fn objective_examples() {
        let design = SensingDesign::stereo(1.0, 0.0);
        let half = Discriminator::constant(0.5);
        let r = evaluate_objective(&design, &half, &[0.1, 0.2], &[0.0], 0.0).unwrap();
        assert!((r.objective - 2.0 * 0.5f64.ln()).abs() < 1e-12);

        let perfect = Discriminator {
            weight: 1e6,
            bias: 0.0,
            shift: 0.5,
            scale: 1.0,
            epsilon_clamp: DEFAULT_EPSILON,
        };
        let r = evaluate_objective(&design, &perfect, &[1.0], &[0.0], 0.0).unwrap();
        let eps = DEFAULT_EPSILON;
        assert!((r.objective - 2.0 * (1.0 - eps).ln()).abs() < 1e-15);
        assert!(r.objective.abs() <= 2.0 * eps * (1.0 + eps));
        assert_eq!(r.auc, 1.0);

        let r = evaluate_objective(&design, &perfect, &[1.0], &[0.0], 0.5).unwrap();
        assert!((r.objective + 1.0).abs() < 1e-5);
        assert!(r.j_real <= 0.0 && r.j_spoof <= 0.0);
    }

    #[test]
    fn objective_ignores_evaluation_order() {
        let d = Discriminator {
            weight: 2.0,
            bias: -0.1,
            shift: 0.05,
            scale: 0.04,
            epsilon_clamp: DEFAULT_EPSILON,
        };
        let design = SensingDesign::stereo(1.0, 0.0);
        let real = [0.11, 0.09, 0.13, 0.1];
        let spoof = [0.001, 0.02, 0.0];
        let mut rr = real;
        rr.reverse();
        let mut ss = spoof;
        ss.rotate_left(1);
        let a = evaluate_objective(&design, &d, &real, &spoof, 0.3).unwrap();
        let b = evaluate_objective(&design, &d, &rr, &ss, 0.3).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-15);
    }

    #[test]
    fn auc_with_ties() {
        assert_eq!(auc(&[1.0, 2.0], &[0.0]), 1.0);
        assert_eq!(auc(&[0.0, 0.0], &[0.0, 0.0]), 0.5);
        assert_eq!(auc(&[1.0, 0.0], &[0.5]), 0.5);
    }

    fn small_experiment() -> Experiment {
        Experiment {
            train_per_class: 40,
            eval_per_class: 60,
            ..Experiment::default()
        }
    }

    #[test]
    fn stereo_beats_mono_without_cost_and_loses_with_it() {
        let menu = [SensingDesign::mono(), SensingDesign::stereo(1.0, 0.0)];
        let sel = select_design(&menu, &small_experiment(), 0.0).unwrap();
        assert_eq!(sel.best.kind, DesignKind::Stereo);
        let mono = &sel.reports[0];
        assert!((mono.objective - 2.0 * 0.5f64.ln()).abs() < 1e-9);
        assert!(sel.reports[1].objective - mono.objective >= 1.0);
        let sel = select_design(&menu, &small_experiment(), 10.0).unwrap();
        assert_eq!(sel.best.kind, DesignKind::Mono);
        let one = select_design(&menu[1..], &small_experiment(), 3.0).unwrap();
        assert_eq!(one.best, menu[1]);
    }

    #[test]
    fn ties_prefer_cheaper_then_name() {
        let mk = |name: &str, cost: f64| ObjectiveReport {
            design: SensingDesign::mono().named(name).with_cost(cost),
            j_real: -0.5,
            j_spoof: -0.5,
            cost_term: 0.0,
            objective: -1.0,
            auc: 0.5,
        };
        assert_eq!(
            best_of(&[mk("b", 2.0), mk("a", 3.0), mk("c", 1.0)]).name,
            "c"
        );
        assert_eq!(best_of(&[mk("b", 1.0), mk("a", 1.0)]).name, "a");
    }

    #[test]
    fn config_parsing() {
        let text = "beta=0,0.5\ndesign.0.kind=mono\ndesign.1.kind=stereo-wide\ndesign.1.baseline=2\ndesign.1.cost=3\nseed=11\n";
        let cfg = ExperimentConfig::from_record(&Record::parse_lenient(text).unwrap()).unwrap();
        assert_eq!(cfg.betas, vec![0.0, 0.5]);
        assert_eq!(cfg.menu.len(), 2);
        assert_eq!(cfg.menu[1].cost, 3.0);
        assert_eq!(cfg.menu[1].kind, DesignKind::StereoWide);
        assert_eq!(cfg.experiment.seed, 11);
        let bad = Record::parse_lenient("design.0.kind=stereo\ndesign.0.baseline=0\n").unwrap();
        assert!(ExperimentConfig::from_record(&bad).is_err());
    }
}
