//! Experiment configuration: schema, defaults and validation.

use std::fmt;

use lmc_core::imaging::{McNorm, ModelId, PAPER_GAMMA_TV, PAPER_SIGMA, PAPER_TAU, TV_INNER_ITERS, MAP_ITERS};
use lmc_core::{GridSpec, Matrix, SpdMatrix};
use serde::{Deserialize, Serialize};

/// `‖D‖²` bound used for primal-dual step checks.
pub const DIFF_NORM_SQ: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    GaussianMixture,
    LaplacianMixture,
    GaussianLaplacian,
    Deconvolve,
    SgDemo,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::GaussianMixture => "gaussian-mixture",
            Family::LaplacianMixture => "laplacian-mixture",
            Family::GaussianLaplacian => "gaussian-laplacian",
            Family::Deconvolve => "deconvolve",
            Family::SgDemo => "sg-demo",
        }
    }

    pub fn allowed_samplers(self) -> &'static [SamplerKind] {
        use SamplerKind::*;
        match self {
            Family::GaussianMixture => &[Ula, Mala, Pula, Ihpula, Mla],
            Family::LaplacianMixture => &[Ula, Mala, Pula, Mla],
            Family::GaussianLaplacian => &[Pgld, Myula, Mymala, Ppula, Fbula, Bmumla, BmumlaRight],
            Family::Deconvolve => &[Myula, Ulpda],
            Family::SgDemo => &[Sgld, Spgld, Ssgld],
        }
    }

    fn default_grid(self) -> GridSpec {
        match self {
            Family::LaplacianMixture => GridSpec::square(-12.0, 12.0, 121),
            Family::SgDemo => GridSpec::square(-3.0, 3.0, 121),
            _ => GridSpec::square(-7.0, 7.0, 141),
        }
    }

    /// Step sizes (and smoothing parameters) used in the reference experiments.
    fn reference_grid(self) -> (&'static [f64], &'static [f64]) {
        match self {
            Family::GaussianMixture => (&[0.01, 0.05, 0.1], &[]),
            Family::LaplacianMixture => (&[0.05, 0.1, 0.15], &[0.1, 0.5, 1.0]),
            Family::GaussianLaplacian => (&[0.05, 0.15, 0.25], &[0.25, 0.5, 1.0]),
            Family::Deconvolve | Family::SgDemo => (&[], &[]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Ula,
    Mala,
    Pula,
    Ihpula,
    Mla,
    Myula,
    Pgld,
    Mymala,
    Ppula,
    Fbula,
    /// BMUMLA with the left Bregman–Moreau envelope.
    Bmumla,
    BmumlaRight,
    Ulpda,
    Sgld,
    Spgld,
    Ssgld,
}

impl SamplerKind {
    pub fn as_str(self) -> &'static str {
        use SamplerKind::*;
        match self {
            Ula => "ula",
            Mala => "mala",
            Pula => "pula",
            Ihpula => "ihpula",
            Mla => "mla",
            Myula => "myula",
            Pgld => "pgld",
            Mymala => "mymala",
            Ppula => "ppula",
            Fbula => "fbula",
            Bmumla => "bmumla",
            BmumlaRight => "bmumla-right",
            Ulpda => "ulpda",
            Sgld => "sgld",
            Spgld => "spgld",
            Ssgld => "ssgld",
        }
    }

    /// Whether the kernel itself takes a smoothing parameter.
    pub fn uses_smoothing(self) -> bool {
        use SamplerKind::*;
        matches!(self, Myula | Pgld | Mymala | Fbula | Bmumla | BmumlaRight | Spgld)
    }

    pub fn is_metropolis(self) -> bool {
        matches!(self, SamplerKind::Mala | SamplerKind::Mymala)
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Two-dimensional mixture target, optionally with an ℓ1 prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub weights: Vec<f64>,
    pub means: Vec<[f64; 2]>,
    /// Gaussian components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariances: Option<Vec<[[f64; 2]; 2]>>,
    /// Laplacian scale `α`, shared by all components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// `α‖x − μ‖₁` prior of the composite family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<L1Prior>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct L1Prior {
    pub center: [f64; 2],
    pub scale: f64,
}

fn d_pula_metric() -> [[f64; 2]; 2] {
    [[1.0, 0.1], [0.1, 0.5]]
}
fn d_ihpula_eps() -> f64 {
    0.05
}
fn d_mirror_beta() -> [f64; 2] {
    [0.7, 0.3]
}
fn d_envelope_beta() -> [f64; 2] {
    [0.8, 0.2]
}
fn d_ppula_q() -> [[f64; 2]; 2] {
    [[1.0, 0.1], [0.1, 1.5]]
}

/// Hyperparameters of the two-dimensional samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerParams {
    #[serde(default = "d_pula_metric")]
    pub pula_metric: [[f64; 2]; 2],
    #[serde(default = "d_ihpula_eps")]
    pub ihpula_eps: f64,
    /// Hyperbolic entropy mirror map of MLA and BMUMLA.
    #[serde(default = "d_mirror_beta")]
    pub mirror_beta: [f64; 2],
    /// Hyperbolic entropy of the BMUMLA envelope.
    #[serde(default = "d_envelope_beta")]
    pub envelope_beta: [f64; 2],
    #[serde(default = "d_ppula_q")]
    pub ppula_q: [[f64; 2]; 2],
    /// Lipschitz constant of `∇f` for the FBULA `λ < 1/L` advisory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fbula_lipschitz: Option<f64>,
}

impl Default for SamplerParams {
    fn default() -> Self {
        Self {
            pula_metric: d_pula_metric(),
            ihpula_eps: d_ihpula_eps(),
            mirror_beta: d_mirror_beta(),
            envelope_beta: d_envelope_beta(),
            ppula_q: d_ppula_q(),
            fbula_lipschitz: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImagingInit {
    #[default]
    Observation,
    Map,
}

/// Deconvolution experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagingConfig {
    /// `builtin:camera` or a PGM path.
    pub image: String,
    /// Centered crop `[height, width]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<[usize; 2]>,
    pub model: ModelId,
    /// Uniform blur that generates the observation.
    pub observation_blur: usize,
    pub sigma: f64,
    pub tau: f64,
    pub gamma_tv: f64,
    #[serde(default)]
    pub mc_norm: McNorm,
    pub tv_inner_iters: usize,
    pub map_iters: usize,
    pub map_gamma: f64,
    pub map_dual_step: f64,
    pub myula_gamma: f64,
    pub myula_lambda: f64,
    pub ulpda_gamma: f64,
    pub ulpda_dual_step: f64,
    pub ulpda_relaxation: f64,
    #[serde(default)]
    pub init: ImagingInit,
}

impl ImagingConfig {
    /// Reference hyperparameters for model `model` on the built-in image.
    pub fn reference(model: ModelId) -> Self {
        let s2 = PAPER_SIGMA * PAPER_SIGMA;
        let g = 0.95 * s2;
        Self {
            image: "builtin:camera".into(),
            crop: Some([128, 128]),
            model,
            observation_blur: 5,
            sigma: PAPER_SIGMA,
            tau: PAPER_TAU,
            gamma_tv: PAPER_GAMMA_TV,
            mc_norm: McNorm::Global,
            tv_inner_iters: TV_INNER_ITERS,
            map_iters: MAP_ITERS,
            map_gamma: g,
            map_dual_step: 0.99 / (DIFF_NORM_SQ * g),
            myula_gamma: 0.2 * s2,
            myula_lambda: s2,
            ulpda_gamma: g,
            ulpda_dual_step: 0.99 / (DIFF_NORM_SQ * g),
            ulpda_relaxation: 1.0,
            init: ImagingInit::Observation,
        }
    }
}

fn d_n_data() -> usize {
    100
}
fn d_batch() -> usize {
    10
}
fn d_prior_scale() -> f64 {
    0.15
}

/// Stochastic-gradient demo: Bayesian linear regression on synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgConfig {
    #[serde(default = "d_n_data")]
    pub n_data: usize,
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    /// ℓ1 prior weight for the proximal and subgradient samplers.
    #[serde(default = "d_prior_scale")]
    pub prior_scale: f64,
}

impl Default for SgConfig {
    fn default() -> Self {
        Self { n_data: d_n_data(), data_seed: 0, batch_size: d_batch(), prior_scale: d_prior_scale() }
    }
}

fn one() -> u64 {
    1
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub family: Family,
    pub samplers: Vec<SamplerKind>,
    /// Number of mixture components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    /// Retained samples per run.
    pub n_samples: u64,
    #[serde(default)]
    pub burn_in: u64,
    #[serde(default = "one")]
    pub thinning: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub params: SamplerParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imaging: Option<ImagingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sg: Option<SgConfig>,
}

/// One offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem{}):", self.0.len(), if self.0.len() == 1 { "" } else { "s" })?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Parses and validates a JSON configuration.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let cfg: ExperimentConfig = serde_json::from_str(raw).map_err(|e| {
        ConfigErrors(vec![FieldError { field: "<document>".into(), message: e.to_string() }])
    })?;
    let errs = cfg.check();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errs))
    }
}

fn spd2(m: &[[f64; 2]; 2]) -> Result<SpdMatrix, String> {
    let mat = Matrix::from_rows(&[m[0].to_vec(), m[1].to_vec()]).map_err(|e| e.to_string())?;
    SpdMatrix::new(mat).map_err(|e| e.to_string())
}

impl ExperimentConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    pub fn grid_or_default(&self) -> GridSpec {
        self.grid.unwrap_or_else(|| self.family.default_grid())
    }

    pub fn n_steps(&self) -> u64 {
        self.burn_in + self.n_samples * self.thinning
    }

    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let e = self.check();
        if e.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(e))
        }
    }

    /// Non-fatal remarks: step sizes outside the reference grids and
    /// advisory step conditions.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let (gs, ls) = self.family.reference_grid();
        let on = |v: f64, set: &[f64]| set.iter().any(|s| (s - v).abs() <= 1e-12 * s.abs().max(1.0));
        if !gs.is_empty() {
            for &g in &self.gamma {
                if !on(g, gs) {
                    w.push(format!("gamma {g} is outside the reference values {gs:?}"));
                }
            }
        }
        if !ls.is_empty() {
            for &l in &self.lambda {
                if !on(l, ls) {
                    w.push(format!("lambda {l} is outside the reference values {ls:?}"));
                }
            }
        }
        if let (Some(l), true) = (self.params.fbula_lipschitz, self.samplers.contains(&SamplerKind::Fbula)) {
            for &lam in &self.lambda {
                if lam * l >= 1.0 {
                    w.push(format!("fbula smoothing {lam} is not below 1/L = {}", 1.0 / l));
                }
            }
        }
        w
    }

    /// Every problem with the configuration, empty when valid.
    pub fn check(&self) -> Vec<FieldError> {
        let mut e = Errs::default();
        let fam = self.family;

        if self.name.trim().is_empty() {
            e.add("name", "must not be empty".into());
        }
        if self.samplers.is_empty() {
            e.add("samplers", "at least one sampler is required".into());
        }
        for (i, s) in self.samplers.iter().enumerate() {
            if !fam.allowed_samplers().contains(s) {
                let names: Vec<&str> = fam.allowed_samplers().iter().map(|s| s.as_str()).collect();
                e.add(&format!("samplers[{i}]"), format!("{s} is not available for {}; choose from {names:?}", fam.as_str()));
            }
            if self.samplers[..i].contains(s) {
                e.add(&format!("samplers[{i}]"), format!("{s} is listed twice"));
            }
        }
        if self.thinning == 0 {
            e.add("thinning", "must be at least 1".into());
        }
        if self.n_samples.checked_mul(self.thinning).and_then(|v| v.checked_add(self.burn_in)).is_none() {
            e.add("n_samples", "burn_in + n_samples·thinning overflows".into());
        }

        e.positive_list("gamma", &self.gamma);
        e.positive_list("lambda", &self.lambda);

        let needs_lambda = match fam {
            Family::LaplacianMixture => true,
            _ => self.samplers.iter().any(|s| s.uses_smoothing()),
        } && fam != Family::Deconvolve;
        match fam {
            Family::Deconvolve => {
                if !self.gamma.is_empty() || !self.lambda.is_empty() {
                    e.add("gamma", "deconvolution step sizes live in the imaging section; leave gamma and lambda empty".into());
                }
            }
            _ => {
                if self.gamma.is_empty() {
                    e.add("gamma", "at least one step size is required".into());
                }
                if needs_lambda && self.lambda.is_empty() {
                    e.add("lambda", "the selected samplers need at least one smoothing parameter".into());
                }
                if !needs_lambda && !self.lambda.is_empty() {
                    e.add("lambda", "no selected sampler uses a smoothing parameter".into());
                }
            }
        }

        if let Some(x0) = &self.init {
            let d = if fam == Family::Deconvolve { None } else { Some(2) };
            if fam == Family::Deconvolve {
                e.add("init", "deconvolution chains start from the imaging.init choice".into());
            } else if Some(x0.len()) != d {
                e.add("init", format!("expected 2 coordinates, got {}", x0.len()));
            }
            if x0.iter().any(|v| !v.is_finite()) {
                e.add("init", "must be finite".into());
            }
        }
        if let Some(g) = &self.grid {
            if let Err(msg) = g.validate() {
                e.add("grid", msg.to_string());
            }
        }

        let mixture = matches!(fam, Family::GaussianMixture | Family::LaplacianMixture | Family::GaussianLaplacian);
        match (&self.target, mixture) {
            (None, true) => e.add("target", format!("{} needs a target section", fam.as_str())),
            (Some(_), false) => e.add("target", format!("{} does not take a target section", fam.as_str())),
            (Some(t), true) => {
                let n = t.weights.len();
                if n == 0 {
                    e.add("target.weights", "at least one component is required".into());
                }
                if self.k != Some(n) {
                    e.add("k", format!("must equal the number of components ({n}), got {:?}", self.k));
                }
                if t.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    e.add("target.weights", "weights must be positive".into());
                }
                let s: f64 = t.weights.iter().sum();
                if n > 0 && (s - 1.0).abs() > 1e-12 {
                    e.add("target.weights", format!("weights sum to {s}, not 1"));
                }
                if t.means.len() != n {
                    e.add("target.means", format!("expected {n} means, got {}", t.means.len()));
                }
                if t.means.iter().flatten().any(|v| !v.is_finite()) {
                    e.add("target.means", "must be finite".into());
                }
                let gaussian = matches!(fam, Family::GaussianMixture | Family::GaussianLaplacian);
                match (&t.covariances, gaussian) {
                    (Some(c), true) => {
                        if c.len() != n {
                            e.add("target.covariances", format!("expected {n} covariances, got {}", c.len()));
                        }
                        for (i, m) in c.iter().enumerate() {
                            if let Err(msg) = spd2(m) {
                                e.add(&format!("target.covariances[{i}]"), msg);
                            }
                        }
                    }
                    (None, true) => e.add("target.covariances", "Gaussian components need covariances".into()),
                    (Some(_), false) => e.add("target.covariances", "Laplacian components take a scale, not covariances".into()),
                    (None, false) => {}
                }
                match (t.scale, fam == Family::LaplacianMixture) {
                    (Some(a), true) if !(a > 0.0 && a.is_finite()) => e.add("target.scale", format!("must be positive, got {a}")),
                    (None, true) => e.add("target.scale", "Laplacian components need a scale".into()),
                    (Some(_), false) => e.add("target.scale", "only Laplacian mixtures take a scale".into()),
                    _ => {}
                }
                match (&t.prior, fam == Family::GaussianLaplacian) {
                    (Some(p), true) => {
                        if !(p.scale > 0.0 && p.scale.is_finite()) {
                            e.add("target.prior.scale", format!("must be positive, got {}", p.scale));
                        }
                        if p.center.iter().any(|v| !v.is_finite()) {
                            e.add("target.prior.center", "must be finite".into());
                        }
                    }
                    (None, true) => e.add("target.prior", "the composite family needs an l1 prior".into()),
                    (Some(_), false) => e.add("target.prior", "only the composite family takes a prior".into()),
                    (None, false) => {}
                }
            }
            (None, false) => {
                if self.k.is_some() {
                    e.add("k", format!("{} has no mixture components", fam.as_str()));
                }
            }
        }

        let p = &self.params;
        if self.samplers.iter().any(|s| *s == SamplerKind::Pula) {
            if let Err(msg) = spd2(&p.pula_metric) {
                e.add("params.pula_metric", msg);
            }
        }
        if self.samplers.contains(&SamplerKind::Ppula) {
            if let Err(msg) = spd2(&p.ppula_q) {
                e.add("params.ppula_q", msg);
            }
        }
        if !(p.ihpula_eps > 0.0 && p.ihpula_eps.is_finite()) {
            e.add("params.ihpula_eps", format!("must be positive, got {}", p.ihpula_eps));
        }
        for (name, b) in [("params.mirror_beta", p.mirror_beta), ("params.envelope_beta", p.envelope_beta)] {
            if b.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                e.add(name, format!("entries must be positive, got {b:?}"));
            }
        }
        if let Some(l) = p.fbula_lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                e.add("params.fbula_lipschitz", format!("must be positive, got {l}"));
            }
        }

        match (&self.imaging, fam == Family::Deconvolve) {
            (None, true) => e.add("imaging", "deconvolve needs an imaging section".into()),
            (Some(_), false) => e.add("imaging", format!("{} does not take an imaging section", fam.as_str())),
            (Some(im), true) => check_imaging(im, &mut e),
            (None, false) => {}
        }
        match (&self.sg, fam == Family::SgDemo) {
            (None, true) => e.add("sg", "sg-demo needs an sg section".into()),
            (Some(_), false) => e.add("sg", format!("{} does not take an sg section", fam.as_str())),
            (Some(sg), true) => {
                if sg.n_data == 0 {
                    e.add("sg.n_data", "must be at least 1".into());
                }
                if sg.batch_size == 0 || sg.batch_size > sg.n_data {
                    e.add("sg.batch_size", format!("must lie in 1..={}, got {}", sg.n_data, sg.batch_size));
                }
                if !(sg.prior_scale > 0.0 && sg.prior_scale.is_finite()) {
                    e.add("sg.prior_scale", format!("must be positive, got {}", sg.prior_scale));
                }
            }
            (None, false) => {}
        }
        e.0
    }
}

fn check_imaging(im: &ImagingConfig, e: &mut Errs) {
    if let Some(path) = im.image.strip_prefix("builtin:") {
        if path != "camera" {
            e.add("imaging.image", format!("unknown built-in image {path:?}; only builtin:camera exists"));
        }
    } else if !std::path::Path::new(&im.image).is_file() {
        e.add("imaging.image", format!("no such file {:?}", im.image));
    }
    if let Some([h, w]) = im.crop {
        if h < 8 || w < 8 {
            e.add("imaging.crop", format!("crops must be at least 8×8, got {h}×{w}"));
        }
        let (k, _) = im.model.spec();
        if k.max(im.observation_blur) > h.min(w) {
            e.add("imaging.crop", format!("a {h}×{w} crop is smaller than the blur kernels"));
        }
    }
    if im.observation_blur == 0 {
        e.add("imaging.observation_blur", "must be at least 1".into());
    }
    let positive = [
        ("imaging.sigma", im.sigma),
        ("imaging.gamma_tv", im.gamma_tv),
        ("imaging.map_gamma", im.map_gamma),
        ("imaging.map_dual_step", im.map_dual_step),
        ("imaging.myula_gamma", im.myula_gamma),
        ("imaging.myula_lambda", im.myula_lambda),
        ("imaging.ulpda_gamma", im.ulpda_gamma),
        ("imaging.ulpda_dual_step", im.ulpda_dual_step),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            e.add(name, format!("must be positive and finite, got {v}"));
        }
    }
    if !(im.tau >= 0.0 && im.tau.is_finite()) {
        e.add("imaging.tau", format!("must be nonnegative, got {}", im.tau));
    }
    if im.tv_inner_iters == 0 {
        e.add("imaging.tv_inner_iters", "must be at least 1".into());
    }
    if im.map_iters == 0 {
        e.add("imaging.map_iters", "must be at least 1".into());
    }
    for (name, g, l) in [
        ("imaging.ulpda_dual_step", im.ulpda_gamma, im.ulpda_dual_step),
        ("imaging.map_dual_step", im.map_gamma, im.map_dual_step),
    ] {
        let prod = g * l * DIFF_NORM_SQ;
        if prod > 1.0 + 1e-12 {
            e.add(name, format!("step sizes violate γλ‖D‖² ≤ 1 (‖D‖² = {DIFF_NORM_SQ}): {g} · {l} · {DIFF_NORM_SQ} = {prod}"));
        }
    }
    if !(0.0..=1.0).contains(&im.ulpda_relaxation) {
        e.add("imaging.ulpda_relaxation", format!("must lie in [0, 1], got {}", im.ulpda_relaxation));
    }
}

#[derive(Default)]
struct Errs(Vec<FieldError>);

impl Errs {
    fn add(&mut self, field: &str, message: String) {
        self.0.push(FieldError { field: field.into(), message });
    }

    fn positive_list(&mut self, name: &str, v: &[f64]) {
        for (i, x) in v.iter().enumerate() {
            if !(*x > 0.0 && x.is_finite()) {
                self.add(&format!("{name}[{i}]"), format!("must be positive and finite, got {x}"));
            }
            if v[..i].contains(x) {
                self.add(&format!("{name}[{i}]"), format!("{x} is listed twice"));
            }
        }
    }
}
