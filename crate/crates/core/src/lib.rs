//! Langevin Monte Carlo samplers for smooth, composite and Bregman-proximal
//! targets, with imaging models and diagnostics.
//!
//! Kernels implement [`samplers::Kernel`] and are driven by
//! [`samplers::run_chain`] with any [`numerics::NoiseSource`]; a seeded
//! [`Prng`] gives reproducible chains.

pub mod diagnostics;
pub mod error;
pub mod imaging;
pub mod numerics;
pub mod potentials;
pub mod prox;
pub mod samplers;

pub use diagnostics::{DensityGrid, GridSpec, MetricsReport};
pub use error::{LmcError, Result};
pub use imaging::{BlurOperator, Image, ModelId, TvPriorSpec, TvVariant};
pub use numerics::{ForcedNoise, Matrix, NoiseSource, Prng, SpdMatrix};
pub use potentials::{CompositePotential, FiniteSumPotential, Potential};
pub use prox::{LegendreMap, LinOp, ProxFriendly, ProxMap};
pub use samplers::{run_chain, Chain, ChainFailure, ChainState, Kernel, RunConfig, StepMeta, StepSchedule};
