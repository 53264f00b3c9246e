//! Gaussian mixture models fitted by minimizing the sliced `p`-Wasserstein
//! distance to the data, with a standard EM baseline.
//!
//! The pieces, bottom up:
//!
//! - [`gmm`]: the model, densities, likelihood, sampling, and the PSD and
//!   simplex projections.
//! - [`slicing`]: random directions and 1-D marginals of data and models.
//! - [`ot1d`]: quantile functions, transport maps, `W_p` on the line and the
//!   sliced distance.
//! - [`swm`]: the sliced-Wasserstein objective, its gradients with frozen
//!   transport maps, momentum RMSProp and [`fit_swm`].
//! - [`em`]: [`fit_em`].
//! - [`datasets`], [`io`]: generators, CSV data and JSON models.
//! - [`experiments`]: energy landscapes and the EM vs SWM robustness study.
//!
//! ```
//! use swgmm::{datasets, fit_swm, nll, SwmConfig};
//!
//! let data = datasets::gen_ring_square_line(300, 1, 0.05).unwrap();
//! let config = SwmConfig { iters: 50, ..SwmConfig::default() };
//! let (model, trace) = fit_swm(&data, 3, &config, None).unwrap();
//! assert!(nll(&model, &data).unwrap().is_finite());
//! assert_eq!(trace.last().unwrap().iteration, 50);
//! ```

pub mod datasets;
pub mod em;
mod error;
pub mod experiments;
pub mod gmm;
pub mod io;
pub mod ot1d;
pub mod rng;
pub mod slicing;
pub mod swm;
mod trace;

pub use em::{fit_em, EmConfig};
pub use error::{Error, Result};
pub use gmm::{
    density, init_from_data, nll, project_psd, project_simplex, sample, Dataset, GmmModel, GmmParams,
    DEFAULT_EPS_VAR,
};
pub use ot1d::{
    empirical_quantile, model_cdf, sliced_wasserstein, transport_map, wasserstein_1d, Distribution, Marginal,
    QuantileGrid,
};
pub use slicing::{sample_directions, slice_data, slice_model, Direction, SliceData, SliceModel};
pub use swm::{
    fit_swm, rmsprop_step, swm_gradients, swm_objective, FrozenMaps, GradientRule, OptimizerState, SwmConfig,
};
pub use trace::{FitTrace, TraceRecord};
