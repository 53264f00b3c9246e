//! Sliced-Wasserstein fitting of Gaussian mixtures.
//!
//! Each iteration draws fresh random directions and computes the monotone
//! transport map `f_l` between every model slice and the matching data slice.
//! With the transport held fixed, the parameters then take a momentum RMSProp
//! step on
//!
//! ```text
//! (1/L) sum_l  ∫ |f_l(t) - t|^p  p_x(t; theta_l) dt
//! ```
//!
//! and are projected back onto the feasible set (simplex weights, floored
//! covariance eigenvalues). Weights are also kept at or above
//! [`SwmConfig::weight_floor`].
//!
//! Two readings of "held fixed" are available through [`GradientRule`]:
//!
//! - [`GradientRule::Density`] keeps `f_l` fixed as a function of `t` and
//!   differentiates only the model density. This is [`swm_gradients`] and the
//!   exact gradient of [`FrozenMaps::objective`].
//! - [`GradientRule::Transport`] keeps the coupling fixed: the point at `t`
//!   stays matched with `f_l(t)` and moves with the parameters. For means and
//!   covariances this is the exact derivative of the sliced `W_p^p`.
//!
//! The density rule vanishes for a pure shift of a slice (the cost is then
//! constant in `t`) and, once a slice is narrower than its data, pushes the
//! variance further down and the mean away from the data. Fits with it tend to
//! collapse, so the transport rule is the default.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::gmm::{
    init_from_data, nll_with_floor, project_psd_report, project_simplex, Dataset, GmmModel, GmmParams,
    DEFAULT_EPS_VAR,
};
use crate::ot1d::{abs_pow, empirical_quantile, model_cdf, plotting_position_quantile, std_normal_cdf};
use crate::rng::derive_seed;
use crate::slicing::{sample_directions, slice_data, Direction, SliceData, SliceModel};
use crate::trace::FitTrace;

/// Width of the quadrature support around each component, in standard deviations.
const QUAD_SIGMAS: f64 = 6.0;

const INIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct SwmConfig {
    /// Wasserstein order.
    pub p: f64,
    /// Directions per iteration.
    pub l: usize,
    pub iters: usize,
    /// Quadrature nodes over `t` per direction.
    pub quad_points: usize,
    pub lr: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub eps: f64,
    pub eps_var: f64,
    pub seed: u64,
    /// Record the NLL every `log_every` iterations (the final model is always recorded).
    pub log_every: usize,
    /// Gaussian kernel bandwidth for the data slices; `None` uses point masses.
    pub data_bandwidth: Option<f64>,
    /// How the parameters are differentiated with the transport held fixed.
    pub gradient: GradientRule,
    /// Remove the mean of the weight gradient before the step, so the
    /// update moves along the simplex.
    pub center_weight_gradient: bool,
    /// Lower bound on every weight after the simplex projection (0 disables).
    /// A component clipped to weight 0 has zero mean and covariance
    /// gradients and can never move again; a small positive weight keeps it
    /// live, and the normalized step still moves it.
    pub weight_floor: f64,
}

/// What is held fixed while differentiating the sliced objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientRule {
    /// The optimal coupling: matched pairs `(t, f(t))` stay matched and the
    /// model points move with the parameters. See [`FrozenMaps::transport_gradients`].
    #[default]
    Transport,
    /// The map `f` as a function of location, differentiating only the model
    /// density. See [`FrozenMaps::gradients`].
    Density,
}

impl Default for SwmConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            l: 20,
            iters: 2000,
            quad_points: 256,
            lr: 0.01,
            gamma: 0.9,
            kappa: 0.9,
            eps: 1e-8,
            eps_var: DEFAULT_EPS_VAR,
            seed: 0,
            log_every: 10,
            data_bandwidth: None,
            gradient: GradientRule::Transport,
            center_weight_gradient: true,
            weight_floor: 1e-3,
        }
    }
}

impl SwmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::arg(m.to_string()));
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return bad("p must be >= 1");
        }
        if self.l == 0 || self.iters == 0 || self.log_every == 0 {
            return bad("projections, iterations and log interval must be positive");
        }
        if self.quad_points < 2 {
            return bad("at least two quadrature points are required");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.kappa) {
            return bad("kappa must lie in [0, 1)");
        }
        if !(self.eps > 0.0) || !(self.eps_var > 0.0) {
            return bad("eps and eps_var must be positive");
        }
        if !(0.0..1.0).contains(&self.weight_floor) {
            return bad("weight floor must lie in [0, 1)");
        }
        if let Some(h) = self.data_bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return bad("data bandwidth must be positive");
            }
        }
        Ok(())
    }
}

/// One direction with its transport map tabulated on the quadrature grid.
#[derive(Debug, Clone)]
pub struct FrozenSlice {
    pub theta: Direction,
    /// Quadrature nodes.
    pub nodes: Vec<f64>,
    /// Trapezoid weights for `nodes`.
    pub quad_weights: Vec<f64>,
    /// `|f(t) - t|^p` at each node.
    pub cost: Vec<f64>,
    /// `f(t)` at each node.
    pub targets: Vec<f64>,
}

/// Transport maps for a set of directions, fixed for one parameter update.
#[derive(Debug, Clone)]
pub struct FrozenMaps {
    pub slices: Vec<FrozenSlice>,
    pub p: f64,
    pub eps_var: f64,
}

fn slice_raw(params: &GmmParams, theta: &[f64], eps_var: f64) -> SliceModel {
    let d = theta.len();
    let means = params.means.iter().map(|mu| mu.iter().zip(theta).map(|(a, b)| a * b).sum()).collect();
    let vars = params
        .covariances
        .iter()
        .map(|cov| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += theta[i] * cov[(i, j)] * theta[j];
                }
            }
            s.max(eps_var)
        })
        .collect();
    SliceModel { weights: params.weights.clone(), means, vars }
}

fn freeze_one(
    model: &GmmParams,
    data: &Dataset,
    theta: &Direction,
    p: f64,
    quad_points: usize,
    eps_var: f64,
    bandwidth: Option<f64>,
) -> Result<FrozenSlice> {
    let mut y = slice_data(data, theta)?;
    if let Some(h) = bandwidth {
        y = y.with_bandwidth(h)?;
    }
    let x = slice_raw(model, theta.as_slice(), eps_var);
    let (nodes, quad_weights) = quadrature_grid(&x, &y, quad_points);
    let targets: Vec<f64> = nodes.iter().map(|&t| map_value(&x, &y, t)).collect();
    let cost = nodes.iter().zip(&targets).map(|(&t, &f)| abs_pow((f - t).abs(), p)).collect();
    Ok(FrozenSlice { theta: theta.clone(), nodes, quad_weights, cost, targets })
}

fn map_value(x: &SliceModel, y: &SliceData, t: f64) -> f64 {
    let z = model_cdf(x, t);
    match y.bandwidth() {
        None => plotting_position_quantile(y.points(), z),
        Some(_) => empirical_quantile(y, z).unwrap_or(f64::NAN),
    }
}

/// Uniform trapezoid grid covering every component's `±6σ` range and the data.
fn quadrature_grid(x: &SliceModel, y: &SliceData, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = y.min();
    let mut hi = y.max();
    for k in 0..x.k() {
        let s = QUAD_SIGMAS * x.vars[k].sqrt();
        lo = lo.min(x.means[k] - s);
        hi = hi.max(x.means[k] + s);
    }
    let h = (hi - lo) / (n - 1) as f64;
    let nodes = (0..n).map(|j| lo + h * j as f64).collect();
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    (nodes, w)
}

impl FrozenMaps {
    /// Computes the transport map of every direction for the current model.
    pub fn new(
        model: &GmmModel,
        data: &Dataset,
        dirs: &[Direction],
        p: f64,
        quad_points: usize,
        eps_var: f64,
    ) -> Result<Self> {
        Self::with_bandwidth(model, data, dirs, p, quad_points, eps_var, None)
    }

    pub fn with_bandwidth(
        model: &GmmModel,
        data: &Dataset,
        dirs: &[Direction],
        p: f64,
        quad_points: usize,
        eps_var: f64,
        bandwidth: Option<f64>,
    ) -> Result<Self> {
        check_dim(model.dim(), data.dim())?;
        if dirs.is_empty() {
            return Err(Error::arg("at least one direction is required"));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::arg("p must be >= 1"));
        }
        if quad_points < 2 {
            return Err(Error::arg("at least two quadrature points are required"));
        }
        for th in dirs {
            check_dim(model.dim(), th.dim())?;
        }
        let params = model.params();
        let slices = dirs
            .par_iter()
            .map(|th| freeze_one(&params, data, th, p, quad_points, eps_var, bandwidth))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { slices, p, eps_var })
    }

    /// Objective with these maps held fixed, at arbitrary (unconstrained) parameters.
    pub fn objective(&self, params: &GmmParams) -> f64 {
        let total: f64 = self
            .slices
            .iter()
            .map(|s| {
                let x = slice_raw(params, s.theta.as_slice(), self.eps_var);
                s.nodes
                    .iter()
                    .zip(&s.quad_weights)
                    .zip(&s.cost)
                    .map(|((&t, &w), &c)| w * c * x.density(t))
                    .sum::<f64>()
            })
            .sum();
        total / self.slices.len() as f64
    }

    /// Gradient of [`FrozenMaps::objective`] in weights, means and covariances.
    ///
    /// The covariance gradient of each direction is a multiple of
    /// `theta theta^T`; slice variances below the floor use the floored value.
    pub fn gradients(&self, params: &GmmParams) -> GmmParams {
        self.accumulate(params, |x, s, j| {
            let (mean, var, alpha) = (x.means[j], x.vars[j], x.weights[j]);
            let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for ((&t, &w), &cost) in s.nodes.iter().zip(&s.quad_weights).zip(&s.cost) {
                let r = t - mean;
                let g = w * cost * norm * (-0.5 * r * r / var).exp();
                a += g;
                b += g * r;
                c += g * (r * r / var - 1.0);
            }
            (a, alpha * b / var, alpha * c / (2.0 * var))
        })
    }

    /// Gradient with the transport coupling held fixed instead of the map.
    ///
    /// Each model point `t` stays paired with its target `f(t)` and moves with
    /// the parameters: a shift of the slice mean moves the points of that
    /// component rigidly, a change of slice variance scales them about the
    /// component mean, and a weight change moves the quantiles by
    /// `-F_k(t) / rho(t)`. For means and covariances this is the exact
    /// derivative of the slice `W_p^p` at the current model.
    ///
    /// The weight gradient is returned along the simplex (its mean removed):
    /// off the simplex `F` is not a CDF, and the raw values carry a term shared
    /// by all components that grows with the quadrature range where the data
    /// quantile is clamped.
    pub fn transport_gradients(&self, params: &GmmParams) -> GmmParams {
        let mut grad = self.accumulate(params, |x, s, j| {
            let (mean, var, alpha) = (x.means[j], x.vars[j], x.weights[j]);
            let sd = var.sqrt();
            let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for (((&t, &w), &cost), &f) in s.nodes.iter().zip(&s.quad_weights).zip(&s.cost).zip(&s.targets) {
                if t == f {
                    continue;
                }
                // d/dt |t - f|^p
                let dc = w * self.p * cost / (t - f);
                let r = t - mean;
                let phi = norm * (-0.5 * r * r / var).exp();
                a -= dc * std_normal_cdf(r / sd);
                b += dc * phi;
                c += dc * phi * r;
            }
            (a, alpha * b, alpha * c / (2.0 * var))
        });
        center(&mut grad.weights);
        grad
    }

    /// Gradient under the given rule.
    pub fn gradients_by(&self, rule: GradientRule, params: &GmmParams) -> GmmParams {
        match rule {
            GradientRule::Transport => self.transport_gradients(params),
            GradientRule::Density => self.gradients(params),
        }
    }

    /// Sums per-direction slice derivatives `(d/dalpha, d/dmean, d/dvar)` of
    /// each component into parameter space and averages over directions.
    fn accumulate<F>(&self, params: &GmmParams, slice_grad: F) -> GmmParams
    where
        F: Fn(&SliceModel, &FrozenSlice, usize) -> (f64, f64, f64) + Sync,
    {
        let k = params.k();
        let d = params.dim();
        let l = self.slices.len() as f64;
        let per_dir: Vec<Vec<(f64, f64, f64)>> = self
            .slices
            .par_iter()
            .map(|s| {
                let x = slice_raw(params, s.theta.as_slice(), self.eps_var);
                (0..k).map(|j| slice_grad(&x, s, j)).collect()
            })
            .collect();
        let mut grad = GmmParams::zeros(k, d);
        for (s, parts) in self.slices.iter().zip(per_dir) {
            let th = DVector::from_column_slice(s.theta.as_slice());
            let outer = &th * th.transpose();
            for (j, (da, dm, dv)) in parts.into_iter().enumerate() {
                grad.weights[j] += da / l;
                grad.means[j] += &th * (dm / l);
                grad.covariances[j] += &outer * (dv / l);
            }
        }
        grad
    }
}

/// Sliced-Wasserstein objective estimate over the given directions.
pub fn swm_objective(
    model: &GmmModel,
    data: &Dataset,
    dirs: &[Direction],
    p: f64,
    quad_points: usize,
) -> Result<f64> {
    let maps = FrozenMaps::new(model, data, dirs, p, quad_points, DEFAULT_EPS_VAR)?;
    Ok(maps.objective(&model.params()))
}

/// Gradient of the objective with the transport maps held fixed.
pub fn swm_gradients(
    model: &GmmModel,
    data: &Dataset,
    dirs: &[Direction],
    p: f64,
    quad_points: usize,
) -> Result<GmmParams> {
    let maps = FrozenMaps::new(model, data, dirs, p, quad_points, DEFAULT_EPS_VAR)?;
    Ok(maps.gradients(&model.params()))
}

/// Momentum RMSProp accumulators, one entry per scalar parameter in the
/// [`GmmParams::to_flat`] layout.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// Running mean of the gradient.
    pub m: Vec<f64>,
    /// Running mean of the squared gradient.
    pub g: Vec<f64>,
    /// Velocity.
    pub v: Vec<f64>,
    pub iter: usize,
}

impl OptimizerState {
    pub fn new(model: &GmmModel) -> Self {
        let n = model.params().to_flat().len();
        Self { m: vec![0.0; n], g: vec![0.0; n], v: vec![0.0; n], iter: 0 }
    }
}

/// One RMSProp update of every parameter followed by the feasibility
/// projections. Returns the new model and state, and whether any covariance
/// eigenvalue was clipped.
pub fn rmsprop_step_report(
    state: &OptimizerState,
    grads: &GmmParams,
    config: &SwmConfig,
    model: &GmmModel,
) -> Result<(GmmModel, OptimizerState, bool)> {
    let (k, d) = (model.k(), model.dim());
    let grad = grads.to_flat();
    let theta = model.params().to_flat();
    if grad.len() != theta.len() || state.m.len() != theta.len() {
        return Err(Error::arg("optimizer state or gradient shape does not match the model"));
    }
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { iteration: state.iter, direction_seed: config.seed });
    }
    let (gamma, kappa) = (config.gamma, config.kappa);
    let mut next = state.clone();
    next.iter += 1;
    let mut updated = theta;
    for i in 0..updated.len() {
        let gi = grad[i];
        next.m[i] = gamma * state.m[i] + (1.0 - gamma) * gi;
        next.g[i] = gamma * state.g[i] + (1.0 - gamma) * gi * gi;
        // g - m^2 is a variance and can only dip below zero through rounding
        let var = (next.g[i] - next.m[i] * next.m[i]).max(0.0);
        next.v[i] = kappa * state.v[i] - config.lr / (var + config.eps).sqrt() * gi;
        updated[i] += next.v[i];
    }
    let raw = GmmParams::from_flat(&updated, k, d)?;
    if config.weight_floor * k as f64 >= 1.0 {
        return Err(Error::arg(format!("weight floor {} is infeasible for {k} components", config.weight_floor)));
    }
    let weights = floor_weights(project_simplex(&raw.weights)?, config.weight_floor);
    let mut floored = false;
    let mut covs = Vec::with_capacity(k);
    for c in &raw.covariances {
        let (pc, clipped) = project_psd_report(c, config.eps_var)?;
        floored |= clipped;
        covs.push(pc);
    }
    let model = GmmModel::new(weights, raw.means, covs)?;
    Ok((model, next, floored))
}

pub fn rmsprop_step(
    state: &OptimizerState,
    grads: &GmmParams,
    config: &SwmConfig,
    model: &GmmModel,
) -> Result<(GmmModel, OptimizerState)> {
    rmsprop_step_report(state, grads, config, model).map(|(m, s, _)| (m, s))
}

/// Seed of the direction draw at iteration `iter` of a fit with `seed`.
pub fn direction_seed(seed: u64, iter: usize) -> u64 {
    derive_seed(seed, iter as u64)
}

/// Fits a `k`-component mixture by stochastic sliced-Wasserstein descent.
///
/// Without `init` the model starts from [`init_from_data`] seeded by
/// `config.seed`. Runs exactly `config.iters` steps.
pub fn fit_swm(
    data: &Dataset,
    k: usize,
    config: &SwmConfig,
    init: Option<&GmmModel>,
) -> Result<(GmmModel, FitTrace)> {
    config.validate()?;
    let mut model = match init {
        Some(m) => {
            check_dim(data.dim(), m.dim())?;
            if m.k() != k {
                return Err(Error::arg(format!("init has {} components, expected {k}", m.k())));
            }
            floor_model(m, config.eps_var)?
        }
        None => init_from_data(data, k, config.eps_var, derive_seed(config.seed, INIT_STREAM))?,
    };
    let d = data.dim();
    let mut state = OptimizerState::new(&model);
    let mut trace = FitTrace::default();
    for it in 0..=config.iters {
        let dseed = direction_seed(config.seed, it);
        let dirs = sample_directions(d, config.l, dseed)?;
        let maps = FrozenMaps::with_bandwidth(
            &model,
            data,
            &dirs,
            config.p,
            config.quad_points,
            config.eps_var,
            config.data_bandwidth,
        )?;
        let params = model.params();
        let objective = maps.objective(&params);
        if !objective.is_finite() {
            return Err(Error::Diverged { iteration: it, trace: Box::new(trace) });
        }
        if it % config.log_every == 0 || it == config.iters {
            let nll = nll_with_floor(&model, data, config.eps_var)?;
            trace.push(it, objective, nll);
        }
        if it == config.iters {
            break;
        }
        let mut grads = maps.gradients_by(config.gradient, &params);
        if config.center_weight_gradient {
            center(&mut grads.weights);
        }
        if !grads.is_finite() {
            return Err(Error::NonFiniteGradient { iteration: it, direction_seed: dseed });
        }
        let (next, next_state, floored) = rmsprop_step_report(&state, &grads, config, &model)?;
        if floored {
            if let Some(r) = trace.records.last_mut().filter(|r| r.iteration == it) {
                r.floored = true;
            }
        }
        model = next;
        state = next_state;
    }
    Ok((model, trace))
}

/// Raises every weight to at least `floor`, taking the excess proportionally
/// from the weights above it. Requires `floor * len < 1`.
fn floor_weights(w: Vec<f64>, floor: f64) -> Vec<f64> {
    let mut pinned: Vec<bool> = w.iter().map(|&x| x < floor).collect();
    loop {
        let low = pinned.iter().filter(|&&p| p).count() as f64;
        if low == 0.0 {
            return w;
        }
        let high: f64 = w.iter().zip(&pinned).filter(|(_, &p)| !p).map(|(x, _)| x).sum();
        let scale = (1.0 - floor * low) / high;
        let out: Vec<f64> = w.iter().zip(&pinned).map(|(&x, &p)| if p { floor } else { x * scale }).collect();
        let mut grew = false;
        for (p, &x) in pinned.iter_mut().zip(&out) {
            if !*p && x < floor {
                *p = true;
                grew = true;
            }
        }
        if !grew {
            return out;
        }
    }
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

fn floor_model(m: &GmmModel, eps_var: f64) -> Result<GmmModel> {
    let covs = m
        .covariances()
        .iter()
        .map(|c| crate::gmm::project_psd(c, eps_var))
        .collect::<Result<Vec<DMatrix<f64>>>>()?;
    GmmModel::new(m.weights().to_vec(), m.means().to_vec(), covs)
}
