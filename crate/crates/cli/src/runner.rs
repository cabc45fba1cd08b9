//! Executes validated experiments and writes their output bundles.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use lmc_core::diagnostics::{density_grid, image_metrics, kde2d, METRICS_DEFINITIONS_VERSION};
use lmc_core::imaging::{
    adapdhg_map, synthesize_observation, ApproxDataProx, BlurOperator, DeconvolutionModel, Image, TvPriorSpec,
};
use lmc_core::potentials::{BayesianLinearRegression, FullData, GaussianMixture, LaplacianMixture, SmoothedComposite};
use lmc_core::prox::{
    fb_envelope_value, left_bregman_env_value, right_bregman_env_value, BallIndicator, Difference2d,
    HyperbolicEntropy, LegendreMap, ProxFriendly, ShiftedL1,
};
use lmc_core::samplers::{Bmumla, EnvelopeSide, Fbula, Mala, Metric, Mla, Mymala, Myula, Pgld, Ppula, Pula, Sgld, Spgld, Ssgld, Ula, Ulpda};
use lmc_core::{
    run_chain, Chain, CompositePotential, GridSpec, Kernel, LmcError, Matrix, Potential, Prng, RunConfig, SpdMatrix,
};
use serde_json::{json, Value};

use crate::config::{ConfigErrors, ExperimentConfig, Family, ImagingConfig, ImagingInit, SamplerKind, TargetConfig};

/// Noise stream of the synthetic observation in deconvolution runs.
pub const OBSERVATION_STREAM: u64 = u64::MAX;

#[derive(Debug)]
pub enum RunError {
    Invalid(ConfigErrors),
    Io { path: PathBuf, source: std::io::Error },
    Core(LmcError),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Invalid(e) => write!(f, "{e}"),
            RunError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            RunError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<LmcError> for RunError {
    fn from(e: LmcError) -> Self {
        RunError::Core(e)
    }
}

/// One chain of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub index: usize,
    pub label: String,
    pub sampler: SamplerKind,
    pub gamma: f64,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub plan: RunPlan,
    pub steps_run: u64,
    pub n_retained: u64,
    pub acceptance_rate: Option<f64>,
    /// Why the chain stopped early.
    pub failure: Option<String>,
    pub mean: Vec<f64>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub name: String,
    pub runs: Vec<RunRecord>,
    pub warnings: Vec<String>,
    /// Image quality report of deconvolution runs.
    pub metrics: Option<Value>,
}

impl ExperimentSummary {
    pub fn diverged(&self) -> bool {
        self.runs.iter().any(|r| r.failure.is_some())
    }
}

/// The chains an experiment consists of, in stream order.
pub fn plan_runs(cfg: &ExperimentConfig) -> Vec<RunPlan> {
    let mut out = Vec::new();
    if let (Family::Deconvolve, Some(im)) = (cfg.family, &cfg.imaging) {
        for s in &cfg.samplers {
            let (gamma, lambda) = match s {
                SamplerKind::Ulpda => (im.ulpda_gamma, Some(im.ulpda_dual_step)),
                _ => (im.myula_gamma, Some(im.myula_lambda)),
            };
            out.push(RunPlan { index: out.len(), label: s.to_string(), sampler: *s, gamma, lambda });
        }
        return out;
    }
    for s in &cfg.samplers {
        for &gamma in &cfg.gamma {
            let smooth = cfg.family == Family::LaplacianMixture || s.uses_smoothing();
            let lambdas: Vec<Option<f64>> = if smooth { cfg.lambda.iter().map(|l| Some(*l)).collect() } else { vec![None] };
            for lambda in lambdas {
                let mut label = format!("{s}_g{gamma}");
                if let Some(l) = lambda {
                    let _ = write!(label, "_l{l}");
                }
                out.push(RunPlan { index: out.len(), label, sampler: *s, gamma, lambda });
            }
        }
    }
    out
}

/// Identifiers of the modelling conventions an experiment relies on.
pub fn design_decisions(cfg: &ExperimentConfig) -> Vec<String> {
    let mut d: Vec<String> = vec![
        "divergence-nonfinite-or-norm-above-1e8".into(),
        "constant-step-size".into(),
        "rng-chacha20-one-stream-per-run".into(),
    ];
    let has = |s: SamplerKind| cfg.samplers.contains(&s);
    match cfg.family {
        Family::GaussianMixture | Family::LaplacianMixture | Family::GaussianLaplacian => {
            d.push("mixture-components-first-for-k1-last-k-otherwise".into());
            d.push("mixture-log-sum-exp".into());
            d.push("kde-scott-bandwidth-truncated-8h".into());
            d.push("samples-csv-step-x0-x1".into());
        }
        Family::SgDemo => {
            d.push("sg-batches-without-replacement-sum-scaling".into());
            d.push("ssgld-minimal-norm-subgradient".into());
            d.push("kde-scott-bandwidth-truncated-8h".into());
            d.push("samples-csv-step-x0-x1".into());
        }
        Family::Deconvolve => {}
    }
    if cfg.family == Family::LaplacianMixture {
        d.push("laplacian-surrogate-componentwise-moreau".into());
        d.push("surrogate-density-normalized-on-grid".into());
    }
    if has(SamplerKind::Mala) || has(SamplerKind::Mymala) {
        d.push("mh-log-space-acceptance".into());
    }
    if has(SamplerKind::Mymala) {
        d.push("mymala-targets-surrogate".into());
    }
    if has(SamplerKind::Ihpula) {
        d.push("ihpula-shifted-inverse-hessian".into());
    }
    if has(SamplerKind::Ppula) {
        d.push("ppula-lambda-equals-gamma-metric-equals-q".into());
    }
    if has(SamplerKind::Fbula) {
        d.push("fbula-lipschitz-advisory-only".into());
    }
    if has(SamplerKind::Bmumla) {
        d.push("bmumla-left-envelope".into());
    }
    if has(SamplerKind::BmumlaRight) {
        d.push("bmumla-right-envelope-scan-bisection".into());
    }
    if let Some(im) = &cfg.imaging {
        d.push("circulant-blur-periodic-boundary".into());
        d.push("even-kernel-extra-tap-positive-offset".into());
        d.push("diff-norm-squared-bound-8".into());
        d.push("tv-prox-fast-gradient-projection".into());
        d.push(format!("mc-tv-norm-{}", match im.mc_norm {
            lmc_core::imaging::McNorm::Global => "global",
            lmc_core::imaging::McNorm::Pixelwise => "pixelwise",
        }));
        d.push("me-tv-concave-gradient-via-tv-prox".into());
        d.push("adapdhg-residual-balancing".into());
        d.push("deconvolution-stores-posterior-mean-only".into());
        d.push(METRICS_DEFINITIONS_VERSION.into());
    }
    d
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), RunError> {
    std::fs::write(path, bytes).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

fn create_dir(path: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Runs `cfg` and writes its bundle below `out`.
///
/// Chains run concurrently, each with stream equal to its run index, and
/// write into their own directory. A diverged chain leaves its partial
/// outputs plus a failure record and does not stop the others.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentSummary, RunError> {
    cfg.validate().map_err(RunError::Invalid)?;
    create_dir(out)?;
    write_file(&out.join("config.json"), cfg.to_json() + "\n")?;
    let plans = plan_runs(cfg);
    let (records, metrics) = match cfg.family {
        Family::Deconvolve => run_deconvolution(cfg, &plans, out)?,
        _ => (run_parallel(&plans, |p| run_point_chain(cfg, p, out))?, None),
    };
    let warnings = cfg.warnings();
    let runs: Vec<Value> = records
        .iter()
        .map(|r| {
            json!({
                "label": r.plan.label,
                "sampler": r.plan.sampler.as_str(),
                "stream": r.plan.index,
                "status": if r.failure.is_some() { "diverged" } else { "completed" },
            })
        })
        .collect();
    let experiment = json!({
        "name": cfg.name,
        "family": cfg.family.as_str(),
        "seed": cfg.seed,
        "rng": Prng::ALGORITHM,
        "design_decisions": design_decisions(cfg),
        "warnings": warnings,
        "runs": runs,
    });
    write_file(&out.join("experiment.json"), pretty(&experiment))?;
    Ok(ExperimentSummary { name: cfg.name.clone(), runs: records, warnings, metrics })
}

fn run_parallel<F>(plans: &[RunPlan], job: F) -> Result<Vec<RunRecord>, RunError>
where
    F: Fn(&RunPlan) -> Result<RunRecord, RunError> + Sync,
{
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(plans.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunRecord, RunError>>>> = plans.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= plans.len() {
                    break;
                }
                let r = job(&plans[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every run executes")).collect()
}

fn chain_outcome(r: Result<Chain, lmc_core::ChainFailure>) -> (Chain, Option<LmcError>) {
    match r {
        Ok(c) => (c, None),
        Err(f) => (f.chain, Some(f.error)),
    }
}

fn failure_json(e: &Option<LmcError>) -> Value {
    match e {
        None => Value::Null,
        Some(LmcError::Divergence { step, reason }) => json!({ "kind": "divergence", "step": step, "reason": reason }),
        Some(other) => json!({ "kind": "error", "reason": other.to_string() }),
    }
}

fn run_metadata(cfg: &ExperimentConfig, plan: &RunPlan, chain: &Chain, err: &Option<LmcError>, extra: Value) -> Value {
    let mut m = json!({
        "name": cfg.name,
        "family": cfg.family.as_str(),
        "label": plan.label,
        "sampler": plan.sampler.as_str(),
        "gamma": plan.gamma,
        "lambda": plan.lambda,
        "seed": cfg.seed,
        "stream": plan.index,
        "rng": Prng::ALGORITHM,
        "n_steps": cfg.n_steps(),
        "burn_in": cfg.burn_in,
        "thinning": cfg.thinning,
        "steps_run": chain.steps_run,
        "n_retained": chain.n_retained,
        "mh_steps": chain.mh_steps,
        "acceptance_rate": chain.acceptance_rate(),
        "nonfinite_proposals": chain.nonfinite_proposals,
        "inner_not_converged": chain.inner_not_converged,
        "status": if err.is_some() { "diverged" } else { "completed" },
        "failure": failure_json(err),
        "design_decisions": design_decisions(cfg),
        "warnings": cfg.warnings(),
    });
    if cfg.family != Family::Deconvolve {
        m["sample_mean"] = json!(chain.mean);
    }
    if let (Value::Object(dst), Value::Object(src)) = (&mut m, extra) {
        dst.extend(src);
    }
    m
}

fn record(plan: &RunPlan, chain: &Chain, err: &Option<LmcError>) -> RunRecord {
    RunRecord {
        plan: plan.clone(),
        steps_run: chain.steps_run,
        n_retained: chain.n_retained,
        acceptance_rate: chain.acceptance_rate(),
        failure: err.as_ref().map(|e| e.to_string()),
        mean: chain.mean.clone(),
        wall_time: chain.wall_time,
    }
}

fn spd(m: &[[f64; 2]; 2]) -> lmc_core::Result<SpdMatrix> {
    SpdMatrix::new(Matrix::from_rows(&[m[0].to_vec(), m[1].to_vec()])?)
}

fn gaussian_mixture(t: &TargetConfig) -> lmc_core::Result<GaussianMixture> {
    let covs = t.covariances.as_ref().expect("validated").iter().map(spd).collect::<lmc_core::Result<Vec<_>>>()?;
    GaussianMixture::new(t.weights.clone(), t.means.iter().map(|m| m.to_vec()).collect(), covs)
}

fn laplacian_mixture(t: &TargetConfig, smoothing: f64) -> lmc_core::Result<LaplacianMixture> {
    let a = t.scale.expect("validated");
    LaplacianMixture::new(t.weights.clone(), t.means.iter().map(|m| m.to_vec()).collect(), vec![a; t.weights.len()], smoothing)
}

fn l1_prior(t: &TargetConfig) -> lmc_core::Result<ShiftedL1> {
    let p = t.prior.as_ref().expect("validated");
    ShiftedL1::new(p.center.to_vec(), p.scale)
}

/// A potential known only through its values; gradients by central
/// differences. Used for grid evaluation.
struct ValueOnly<F>(F);

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Potential for ValueOnly<F> {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..2)
            .map(|i| {
                let (mut a, mut b) = (x.to_vec(), x.to_vec());
                a[i] += h;
                b[i] -= h;
                (self.value(&a) - self.value(&b)) / (2.0 * h)
            })
            .collect()
    }
}

struct PointSetup {
    kernel: Box<dyn Kernel>,
    truth: Box<dyn Potential>,
    surrogate: Option<Box<dyn Potential>>,
}

fn point_setup(cfg: &ExperimentConfig, plan: &RunPlan) -> lmc_core::Result<PointSetup> {
    let gamma = plan.gamma;
    let lam = plan.lambda.unwrap_or(0.0);
    let p = &cfg.params;
    let mirror = || -> lmc_core::Result<Arc<dyn LegendreMap>> { Ok(Arc::new(HyperbolicEntropy::new(p.mirror_beta.to_vec())?)) };
    let smooth_kernel = |u: Arc<dyn Potential>| -> lmc_core::Result<Box<dyn Kernel>> {
        Ok(match plan.sampler {
            SamplerKind::Ula => Box::new(Ula::new(u, gamma)?),
            SamplerKind::Mala => Box::new(Mala::new(u, gamma)?),
            SamplerKind::Pula => Box::new(Pula::new(u, Metric::constant(spd(&p.pula_metric)?)?, gamma)?),
            SamplerKind::Ihpula => Box::new(Pula::new(u, Metric::ShiftedInverseHessian { eps: p.ihpula_eps }, gamma)?),
            SamplerKind::Mla => Box::new(Mla::new(u, mirror()?, gamma)?),
            other => return Err(LmcError::Config(format!("{other} is not a smooth-target sampler"))),
        })
    };
    match cfg.family {
        Family::GaussianMixture => {
            let gm = gaussian_mixture(cfg.target.as_ref().expect("validated"))?;
            Ok(PointSetup { kernel: smooth_kernel(Arc::new(gm.clone()))?, truth: Box::new(gm), surrogate: None })
        }
        Family::LaplacianMixture => {
            let t = cfg.target.as_ref().expect("validated");
            let sm = laplacian_mixture(t, lam)?;
            Ok(PointSetup {
                kernel: smooth_kernel(Arc::new(sm.clone()))?,
                truth: Box::new(laplacian_mixture(t, 0.0)?),
                surrogate: Some(Box::new(sm)),
            })
        }
        Family::GaussianLaplacian => {
            let t = cfg.target.as_ref().expect("validated");
            let gm: Arc<dyn Potential> = Arc::new(gaussian_mixture(t)?);
            let g = l1_prior(t)?;
            let cp = CompositePotential::new(gm.clone(), Arc::new(g.clone()))?;
            let envelope = || -> lmc_core::Result<Arc<dyn LegendreMap>> { Ok(Arc::new(HyperbolicEntropy::new(p.envelope_beta.to_vec())?)) };
            let kernel: Box<dyn Kernel> = match plan.sampler {
                SamplerKind::Pgld => Box::new(Pgld::new(cp.clone(), gamma, lam)?),
                SamplerKind::Myula => Box::new(Myula::new(cp.clone(), gamma, lam)?),
                SamplerKind::Mymala => Box::new(Mymala::new(cp.clone(), gamma, lam)?),
                SamplerKind::Ppula => Box::new(Ppula::new(cp.clone(), spd(&p.ppula_q)?, gamma)?),
                SamplerKind::Fbula => Box::new(Fbula::new(cp.clone(), gamma, lam, p.fbula_lipschitz)?),
                SamplerKind::Bmumla => {
                    Box::new(Bmumla::new(gm.clone(), g.clone(), mirror()?, envelope()?, EnvelopeSide::Left, gamma, lam)?)
                }
                SamplerKind::BmumlaRight => {
                    Box::new(Bmumla::new(gm.clone(), g.clone(), mirror()?, envelope()?, EnvelopeSide::Right, gamma, lam)?)
                }
                other => return Err(LmcError::Config(format!("{other} is not a composite-target sampler"))),
            };
            let surrogate: Option<Box<dyn Potential>> = match plan.sampler {
                SamplerKind::Myula | SamplerKind::Mymala => Some(Box::new(SmoothedComposite::new(cp.clone(), lam)?)),
                SamplerKind::Fbula => {
                    let c = cp.clone();
                    Some(Box::new(ValueOnly(move |x: &[f64]| fb_envelope_value(&c, lam, x))))
                }
                SamplerKind::Bmumla | SamplerKind::BmumlaRight => {
                    let (f, g, psi) = (gm.clone(), g.clone(), envelope()?);
                    let left = plan.sampler == SamplerKind::Bmumla;
                    Some(Box::new(ValueOnly(move |x: &[f64]| {
                        let env = if left {
                            left_bregman_env_value(psi.as_ref(), lam, x, &g)
                        } else {
                            right_bregman_env_value(psi.as_ref(), lam, x, &g).unwrap_or(f64::INFINITY)
                        };
                        f.value(x) + env
                    })))
                }
                _ => None,
            };
            let c = cp.clone();
            Ok(PointSetup { kernel, truth: Box::new(ValueOnly(move |x: &[f64]| c.value(x))), surrogate })
        }
        Family::SgDemo => {
            let sg = cfg.sg.as_ref().expect("validated");
            let blr = BayesianLinearRegression::synthetic(sg.n_data, sg.data_seed)?;
            let data = Arc::new(blr.clone());
            let l1 = ShiftedL1::centered(2, sg.prior_scale)?;
            let kernel: Box<dyn Kernel> = match plan.sampler {
                SamplerKind::Sgld => Box::new(Sgld::new(data, sg.batch_size, gamma)?),
                SamplerKind::Spgld => Box::new(Spgld::new(data, Arc::new(l1.clone()), sg.batch_size, gamma, lam)?),
                SamplerKind::Ssgld => Box::new(Ssgld::new(data, Arc::new(l1.clone()), sg.batch_size, gamma)?),
                other => return Err(LmcError::Config(format!("{other} is not a stochastic-gradient sampler"))),
            };
            let full = FullData(blr);
            let truth: Box<dyn Potential> = if plan.sampler == SamplerKind::Sgld {
                Box::new(full)
            } else {
                Box::new(ValueOnly(move |x: &[f64]| full.value(x) + l1.value(x)))
            };
            Ok(PointSetup { kernel, truth, surrogate: None })
        }
        Family::Deconvolve => Err(LmcError::Config("deconvolution runs are not point chains".into())),
    }
}

fn samples_csv(chain: &Chain) -> String {
    let d = chain.mean.len();
    let mut s = String::from("step");
    for i in 0..d {
        let _ = write!(s, ",x{i}");
    }
    s.push('\n');
    for (step, x) in chain.sample_steps.iter().zip(&chain.samples) {
        let _ = write!(s, "{step}");
        for v in x {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// Writes a density grid unless some value is non-finite; returns the
/// reason when skipped.
fn write_grid(path: &Path, grid: lmc_core::Result<lmc_core::DensityGrid>) -> Result<Option<String>, RunError> {
    match grid {
        Ok(g) if g.values.iter().all(|v| v.is_finite()) => write_file(path, g.to_csv()).map(|_| None),
        Ok(_) => Ok(Some("non-finite values on the grid".into())),
        Err(e) => Ok(Some(e.to_string())),
    }
}

fn run_point_chain(cfg: &ExperimentConfig, plan: &RunPlan, out: &Path) -> Result<RunRecord, RunError> {
    let dir = out.join(&plan.label);
    create_dir(&dir)?;
    let setup = point_setup(cfg, plan)?;
    let x0 = cfg.init.clone().unwrap_or_else(|| vec![0.0; 2]);
    let rc = RunConfig::new(cfg.n_steps(), cfg.burn_in, cfg.thinning);
    let mut rng = Prng::new(cfg.seed, plan.index as u64);
    let (chain, err) = chain_outcome(run_chain(setup.kernel.as_ref(), setup.kernel.init_state(x0), &rc, &mut rng));
    write_file(&dir.join("samples.csv"), samples_csv(&chain))?;

    let grid: GridSpec = cfg.grid_or_default();
    let mut skipped = serde_json::Map::new();
    let kde = if chain.samples.len() >= 2 { kde2d(&chain.samples, &grid, None) } else {
        Err(LmcError::Config(format!("KDE needs at least two samples, got {}", chain.samples.len())))
    };
    if let Some(why) = write_grid(&dir.join("kde.csv"), kde)? {
        skipped.insert("kde.csv".into(), json!(why));
    }
    if let Some(why) = write_grid(&dir.join("density.csv"), density_grid(setup.truth.as_ref(), &grid))? {
        skipped.insert("density.csv".into(), json!(why));
    }
    if let Some(s) = &setup.surrogate {
        if let Some(why) = write_grid(&dir.join("surrogate_density.csv"), density_grid(s.as_ref(), &grid))? {
            skipped.insert("surrogate_density.csv".into(), json!(why));
        }
    }
    let mut extra = json!({ "grid": grid, "skipped_outputs": skipped });
    if let Some(t) = &cfg.target {
        extra["k"] = json!(t.weights.len());
    }
    let meta = run_metadata(cfg, plan, &chain, &err, extra);
    write_file(&dir.join("metadata.json"), pretty(&meta))?;
    Ok(record(plan, &chain, &err))
}

fn load_truth(im: &ImagingConfig) -> Result<Image, RunError> {
    let img = match im.image.strip_prefix("builtin:") {
        Some(_) => Image::builtin_camera(),
        None => Image::read_pgm(Path::new(&im.image))?,
    };
    Ok(match im.crop {
        Some([h, w]) => img.center_crop(h, w)?,
        None => img,
    })
}

fn write_image(path: &Path, h: usize, w: usize, px: &[f64]) -> Result<(), RunError> {
    let img = Image { height: h, width: w, pixels: px.to_vec() };
    write_file(path, img.to_pgm_bytes())
}

fn run_deconvolution(
    cfg: &ExperimentConfig,
    plans: &[RunPlan],
    out: &Path,
) -> Result<(Vec<RunRecord>, Option<Value>), RunError> {
    let im = cfg.imaging.as_ref().expect("validated");
    let truth = load_truth(im)?;
    let (h, w) = (truth.height, truth.width);
    let obs_blur = BlurOperator::uniform(im.observation_blur, h, w)?;
    let y = synthesize_observation(&truth, &obs_blur, im.sigma, &mut Prng::new(cfg.seed, OBSERVATION_STREAM));
    let (k, variant) = im.model.spec();
    let model_blur = BlurOperator::uniform_with(k, obs_blur.fft().clone())?;
    let prior = TvPriorSpec { variant, tau: im.tau, gamma_tv: im.gamma_tv, mc_norm: im.mc_norm, inner_iters: im.tv_inner_iters };
    let sigma2 = im.sigma * im.sigma;
    let model = Arc::new(DeconvolutionModel::new(model_blur, &y, sigma2, prior)?);
    let map = adapdhg_map(&model, im.map_iters, im.map_gamma, im.map_dual_step)?;

    write_image(&out.join("truth.pgm"), h, w, &truth.pixels)?;
    write_image(&out.join("observation.pgm"), h, w, &y.pixels)?;
    write_image(&out.join("map.pgm"), h, w, &map.image)?;
    let mut trace = String::from("iteration,objective,residual\n");
    for (i, (o, r)) in map.objective.iter().zip(&map.residual).enumerate() {
        let _ = writeln!(trace, "{},{o},{r}", i + 1);
    }
    write_file(&out.join("map_trace.csv"), trace)?;

    let x0 = match im.init {
        ImagingInit::Observation => y.pixels.clone(),
        ImagingInit::Map => map.image.clone(),
    };
    let metrics_of = |x: &[f64]| image_metrics(&truth.pixels, x, 255.0).map(|m| m.to_json());
    let records = run_parallel(plans, |plan| {
        let dir = out.join(&plan.label);
        create_dir(&dir)?;
        let kernel: Box<dyn Kernel> = match plan.sampler {
            SamplerKind::Ulpda => Box::new(Ulpda::new(
                Arc::new(ApproxDataProx(model.clone())),
                Arc::new(BallIndicator { radius: im.tau }),
                Arc::new(Difference2d::new(h, w)),
                im.ulpda_gamma,
                im.ulpda_dual_step,
                im.ulpda_relaxation,
            )?),
            _ => Box::new(Myula::new(model.composite()?, im.myula_gamma, im.myula_lambda)?),
        };
        let rc = RunConfig { store_samples: false, ..RunConfig::new(cfg.n_steps(), cfg.burn_in, cfg.thinning) };
        let mut rng = Prng::new(cfg.seed, plan.index as u64);
        let (chain, err) = chain_outcome(run_chain(kernel.as_ref(), kernel.init_state(x0.clone()), &rc, &mut rng));
        let mut extra = json!({ "model": im.model.label(), "image_size": [h, w] });
        if chain.n_retained > 0 {
            write_image(&dir.join("posterior_mean.pgm"), h, w, &chain.mean)?;
            extra["posterior_mean_metrics"] = metrics_of(&chain.mean)?;
        }
        write_file(&dir.join("metadata.json"), pretty(&run_metadata(cfg, plan, &chain, &err, extra)))?;
        Ok(record(plan, &chain, &err))
    })?;

    let mut posterior = serde_json::Map::new();
    for r in &records {
        if r.n_retained > 0 {
            posterior.insert(r.plan.label.clone(), metrics_of(&r.mean)?);
        }
    }
    let metrics = json!({
        "definitions_version": METRICS_DEFINITIONS_VERSION,
        "peak": 255.0,
        "model": im.model.label(),
        "observation": metrics_of(&y.pixels)?,
        "map": metrics_of(&map.image)?,
        "map_final_objective": map.objective.last(),
        "posterior_mean": posterior,
    });
    write_file(&out.join("metrics.json"), pretty(&metrics))?;
    Ok((records, Some(metrics)))
}
