//! Expectation maximization for Gaussian mixtures, the likelihood baseline.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use crate::error::{check_dim, Error, Result};
use crate::gmm::{
    init_from_data, log_sum_exp, nll_with_floor, project_psd_report, Dataset, GmmModel, PreparedMixture,
    DEFAULT_EPS_VAR,
};
use crate::rng::{derive_seed, rng_from_seed};
use crate::trace::FitTrace;

/// Total responsibility below which a component counts as empty.
const EMPTY_COMPONENT: f64 = 1e-12;

const INIT_STREAM: u64 = u64::MAX;
const REINIT_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub iters: usize,
    /// Stop once the relative NLL improvement falls below this.
    pub tol: f64,
    pub eps_var: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { iters: 500, tol: 1e-7, eps_var: DEFAULT_EPS_VAR, seed: 0 }
    }
}

/// Posterior component probabilities, `N x K` row-major. Rows sum to one.
pub fn responsibilities(model: &GmmModel, data: &Dataset, eps_var: f64) -> Result<Vec<f64>> {
    check_dim(model.dim(), data.dim())?;
    let prep = PreparedMixture::new(model, eps_var)?;
    let k = model.k();
    let mut out = vec![0.0; data.len() * k];
    let mut scratch = vec![0.0; model.dim()];
    for (row, resp) in data.rows().zip(out.chunks_exact_mut(k)) {
        prep.log_joint(row, resp, &mut scratch);
        let lse = log_sum_exp(resp);
        for r in resp.iter_mut() {
            *r = (*r - lse).exp();
        }
    }
    Ok(out)
}

/// Classic EM. The trace holds the NLL in both value columns; record 0 is
/// the initial model. Records flag iterations where a covariance hit the
/// floor or an empty component was re-seeded at a random data point.
pub fn fit_em(
    data: &Dataset,
    k: usize,
    config: &EmConfig,
    init: Option<&GmmModel>,
) -> Result<(GmmModel, FitTrace)> {
    if config.iters == 0 {
        return Err(Error::arg("iters must be positive"));
    }
    if !(config.eps_var > 0.0) || !(config.tol >= 0.0) {
        return Err(Error::arg("eps_var must be positive and tol non-negative"));
    }
    let mut model = match init {
        Some(m) => {
            check_dim(data.dim(), m.dim())?;
            if m.k() != k {
                return Err(Error::arg(format!("init has {} components, expected {k}", m.k())));
            }
            m.clone()
        }
        None => init_from_data(data, k, config.eps_var, derive_seed(config.seed, INIT_STREAM))?,
    };
    let d = data.dim();
    let n = data.len();
    let reset_scale = (data.covariance().trace() / d as f64).max(config.eps_var);
    let mut rng = rng_from_seed(derive_seed(config.seed, REINIT_STREAM));

    let mut trace = FitTrace::default();
    let mut prev = nll_with_floor(&model, data, config.eps_var)?;
    trace.push(0, prev, prev);

    for it in 1..=config.iters {
        let resp = responsibilities(&model, data, config.eps_var)?;
        let mut weights = Vec::with_capacity(k);
        let mut means = Vec::with_capacity(k);
        let mut covs = Vec::with_capacity(k);
        let mut floored = false;
        let mut reinit = false;
        for j in 0..k {
            // sums in sample order so the result does not depend on scheduling
            let nk: f64 = (0..n).map(|i| resp[i * k + j]).sum();
            if nk < EMPTY_COMPONENT {
                reinit = true;
                let pick = rng.random_range(0..n);
                weights.push(1.0 / k as f64);
                means.push(DVector::from_column_slice(data.row(pick)));
                covs.push(DMatrix::identity(d, d) * reset_scale);
                continue;
            }
            let mut mu = DVector::zeros(d);
            for (i, row) in data.rows().enumerate() {
                let r = resp[i * k + j];
                for c in 0..d {
                    mu[c] += r * row[c];
                }
            }
            mu /= nk;
            let mut cov = DMatrix::zeros(d, d);
            for (i, row) in data.rows().enumerate() {
                let r = resp[i * k + j];
                for a in 0..d {
                    let da = row[a] - mu[a];
                    for b in a..d {
                        cov[(a, b)] += r * da * (row[b] - mu[b]);
                    }
                }
            }
            for a in 0..d {
                for b in 0..a {
                    cov[(a, b)] = cov[(b, a)];
                }
            }
            cov /= nk;
            let (cov, clipped) = project_psd_report(&cov, config.eps_var)?;
            floored |= clipped;
            weights.push(nk / n as f64);
            means.push(mu);
            covs.push(cov);
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        model = GmmModel::new(weights, means, covs)?;
        let cur = nll_with_floor(&model, data, config.eps_var)?;
        if !cur.is_finite() {
            return Err(Error::Diverged { iteration: it, trace: Box::new(trace) });
        }
        trace.push(it, cur, cur);
        if let Some(r) = trace.records.last_mut() {
            r.floored = floored;
            r.reinitialized = reinit;
        }
        let improvement = (prev - cur) / prev.abs().max(f64::MIN_POSITIVE);
        prev = cur;
        if !reinit && improvement < config.tol {
            break;
        }
    }
    Ok((model, trace))
}
