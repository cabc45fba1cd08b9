//! Named configurations reproducing the reference experiments.

use std::collections::BTreeMap;

use lmc_core::imaging::ModelId;
use lmc_core::potentials::{paper_component_indices, PAPER_COVARIANCES, PAPER_MEANS};
use lmc_core::GridSpec;

use crate::config::{
    ExperimentConfig, Family, ImagingConfig, L1Prior, SamplerKind, SamplerParams, SgConfig, TargetConfig,
};

use SamplerKind::*;

fn target(k: usize, gaussian: bool) -> TargetConfig {
    let idx = paper_component_indices(k).expect("k in 1..=5");
    let n = idx.len() as f64;
    TargetConfig {
        weights: vec![1.0 / n; idx.len()],
        means: idx.iter().map(|&i| PAPER_MEANS[i]).collect(),
        covariances: gaussian.then(|| {
            idx.iter()
                .map(|&i| {
                    let [a, b, c] = PAPER_COVARIANCES[i];
                    [[a, b], [b, c]]
                })
                .collect()
        }),
        scale: None,
        prior: None,
    }
}

fn base(name: String, family: Family, samplers: Vec<SamplerKind>) -> ExperimentConfig {
    ExperimentConfig {
        name,
        family,
        samplers,
        k: None,
        gamma: Vec::new(),
        lambda: Vec::new(),
        n_samples: 0,
        burn_in: 0,
        thinning: 1,
        seed: 0,
        init: None,
        grid: None,
        target: None,
        params: SamplerParams::default(),
        imaging: None,
        sg: None,
    }
}

pub fn gaussians(k: usize, gamma: f64) -> ExperimentConfig {
    let mut c = base(format!("fig-gaussians-K{k}-g{gamma}"), Family::GaussianMixture, vec![Ula, Mala, Pula, Ihpula, Mla]);
    c.k = Some(k);
    c.gamma = vec![gamma];
    c.n_samples = 10_000;
    c.burn_in = 1_000;
    c.init = Some(vec![0.0, 0.0]);
    c.grid = Some(GridSpec::square(-7.0, 7.0, 141));
    c.target = Some(target(k, true));
    c
}

pub fn laplacians(name: String, k: usize) -> ExperimentConfig {
    let mut c = base(name, Family::LaplacianMixture, vec![Ula, Mala, Pula, Mla]);
    c.k = Some(k);
    c.gamma = vec![0.05, 0.1, 0.15];
    c.lambda = vec![0.1, 0.5, 1.0];
    c.n_samples = 50_000;
    c.burn_in = 1_000;
    c.init = Some(vec![0.0, 0.0]);
    c.grid = Some(GridSpec::square(-12.0, 12.0, 121));
    let mut t = target(k, false);
    t.scale = Some(0.5);
    c.target = Some(t);
    c
}

pub fn gaussian_laplacian(name: String, k: usize) -> ExperimentConfig {
    let mut c = base(name, Family::GaussianLaplacian, vec![Pgld, Myula, Mymala, Ppula, Fbula, Bmumla]);
    c.k = Some(k);
    c.gamma = vec![0.05, 0.15, 0.25];
    c.lambda = vec![0.25, 0.5, 1.0];
    c.n_samples = 50_000;
    c.burn_in = 1_000;
    c.init = Some(vec![0.0, 0.0]);
    c.grid = Some(GridSpec::square(-7.0, 7.0, 141));
    let mut t = target(k, true);
    t.prior = Some(L1Prior { center: [0.0, 0.0], scale: 0.15 });
    c.target = Some(t);
    c
}

pub fn deconvolution(model: ModelId) -> ExperimentConfig {
    let mut c = base(format!("deconv-{}", model.label()), Family::Deconvolve, vec![Myula, Ulpda]);
    c.n_samples = 1_000;
    c.imaging = Some(ImagingConfig::reference(model));
    c
}

pub fn sg_demo() -> ExperimentConfig {
    let mut c = base("sg-demo".into(), Family::SgDemo, vec![Sgld, Spgld, Ssgld]);
    c.gamma = vec![1e-3];
    c.lambda = vec![1e-3];
    c.n_samples = 100_000;
    c.burn_in = 1_000;
    c.init = Some(vec![0.0, 0.0]);
    c.grid = Some(GridSpec { x_min: 0.2, x_max: 1.8, nx: 81, y_min: -1.3, y_max: 0.3, ny: 81 });
    c.sg = Some(SgConfig::default());
    c
}

/// Every built-in configuration, by name.
pub fn builtin_configs() -> BTreeMap<String, ExperimentConfig> {
    let mut out = BTreeMap::new();
    let mut put = |c: ExperimentConfig| {
        out.insert(c.name.clone(), c);
    };
    for k in 1..=5 {
        for g in [0.01, 0.05, 0.1] {
            put(gaussians(k, g));
        }
        put(laplacians(format!("fig-laplacians-K{k}"), k));
        put(gaussian_laplacian(format!("fig-gaussian-laplacian-K{k}"), k));
    }
    put(laplacians("fig-laplacians".into(), 5));
    put(gaussian_laplacian("fig-gaussian-laplacian".into(), 5));
    for m in ModelId::ALL {
        put(deconvolution(m));
    }
    put(sg_demo());
    out
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    builtin_configs().remove(name)
}
