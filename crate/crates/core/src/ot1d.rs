//! Closed-form optimal transport on the line.
//!
//! Every 1-D marginal is handled through its quantile function: empirical
//! samples use plotting positions `(i - 0.5)/N` with linear interpolation,
//! mixture slices are inverted by bisection, and precomputed grids are
//! interpolated. The `p`-Wasserstein distance is then the `L_p` norm of the
//! quantile difference, discretized by the midpoint rule.

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::gmm::{Dataset, GmmModel, DEFAULT_EPS_VAR};
use crate::slicing::{sample_directions, slice_data, slice_model_with_floor, SliceData, SliceModel};

/// Default number of midpoint quantile levels.
pub const DEFAULT_GRID: usize = 512;

const BISECTION_TOL: f64 = 1e-10;
const BRACKET_SIGMAS: f64 = 10.0;
const KERNEL_WINDOW: f64 = 10.0;

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Midpoint levels `(i - 0.5)/m` for `i = 1..=m`.
pub fn midpoint_levels(m: usize) -> Vec<f64> {
    (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect()
}

/// Samples of a quantile function at increasing levels in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrid {
    zs: Vec<f64>,
    values: Vec<f64>,
}

impl QuantileGrid {
    pub fn new(zs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if zs.is_empty() || zs.len() != values.len() {
            return Err(Error::arg("quantile grid needs equal-length non-empty vectors"));
        }
        if zs.iter().any(|&z| !(z > 0.0 && z < 1.0)) {
            return Err(Error::arg("quantile levels must lie in (0, 1)"));
        }
        if zs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("quantile levels must be strictly increasing"));
        }
        if values.windows(2).any(|w| w[0] > w[1]) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("quantile values must be finite and nondecreasing"));
        }
        Ok(Self { zs, values })
    }

    /// Tabulates a marginal's quantile function at `m` midpoint levels.
    pub fn from_marginal(marginal: Marginal<'_>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::arg("grid size must be positive"));
        }
        let zs = midpoint_levels(m);
        let values = marginal.quantiles(&zs);
        Self::new(zs, values)
    }

    pub fn zs(&self) -> &[f64] {
        &self.zs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn interpolate(&self, z: f64) -> f64 {
        let n = self.zs.len();
        if z <= self.zs[0] {
            return self.values[0];
        }
        if z >= self.zs[n - 1] {
            return self.values[n - 1];
        }
        let hi = self.zs.partition_point(|&x| x < z);
        if self.zs[hi] == z {
            return self.values[hi];
        }
        let lo = hi - 1;
        let frac = (z - self.zs[lo]) / (self.zs[hi] - self.zs[lo]);
        self.values[lo] + frac * (self.values[hi] - self.values[lo])
    }
}

/// Anything with a quantile function on the line.
#[derive(Debug, Clone, Copy)]
pub enum Marginal<'a> {
    Samples(&'a SliceData),
    Model(&'a SliceModel),
    Grid(&'a QuantileGrid),
}

impl Marginal<'_> {
    /// Quantiles at ascending levels.
    pub fn quantiles(&self, zs: &[f64]) -> Vec<f64> {
        match self {
            Marginal::Model(m) => model_quantiles_sorted(m, zs),
            _ => zs.iter().map(|&z| self.quantile(z)).collect(),
        }
    }

    /// Quantile at level `z`, clamped to `[0, 1]`.
    pub fn quantile(&self, z: f64) -> f64 {
        let z = z.clamp(0.0, 1.0);
        match self {
            Marginal::Samples(s) => slice_quantile(s, z),
            Marginal::Model(m) => model_quantile(m, z),
            Marginal::Grid(g) => g.interpolate(z),
        }
    }
}

impl<'a> From<&'a SliceData> for Marginal<'a> {
    fn from(s: &'a SliceData) -> Self {
        Marginal::Samples(s)
    }
}

impl<'a> From<&'a SliceModel> for Marginal<'a> {
    fn from(s: &'a SliceModel) -> Self {
        Marginal::Model(s)
    }
}

impl<'a> From<&'a QuantileGrid> for Marginal<'a> {
    fn from(g: &'a QuantileGrid) -> Self {
        Marginal::Grid(g)
    }
}

/// Inverse empirical CDF at level `z`.
///
/// Order statistic `i` sits at level `(i - 0.5)/N`; values in between are
/// linearly interpolated and levels outside `[0.5/N, 1 - 0.5/N]` clamp to the
/// sample extremes. For a kernel-smoothed slice the smoothed CDF is inverted
/// instead.
pub fn empirical_quantile(slice: &SliceData, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::arg(format!("quantile level {z} outside [0, 1]")));
    }
    Ok(slice_quantile(slice, z))
}

fn slice_quantile(slice: &SliceData, z: f64) -> f64 {
    match slice.bandwidth() {
        None => plotting_position_quantile(slice.points(), z),
        Some(h) => kernel_quantile(slice.points(), h, z),
    }
}

pub(crate) fn plotting_position_quantile(sorted: &[f64], z: f64) -> f64 {
    let n = sorted.len();
    let pos = z * n as f64 + 0.5; // 1-based fractional rank
    if pos <= 1.0 {
        return sorted[0];
    }
    if pos >= n as f64 {
        return sorted[n - 1];
    }
    let i = pos.floor();
    let frac = pos - i;
    let i = i as usize - 1;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// CDF of the Gaussian kernel density estimate on sorted points.
pub fn kernel_cdf(sorted: &[f64], h: f64, t: f64) -> f64 {
    let lo = sorted.partition_point(|&y| y < t - KERNEL_WINDOW * h);
    let hi = sorted.partition_point(|&y| y <= t + KERNEL_WINDOW * h);
    // points left of the window contribute 1, right of it 0
    let inner: f64 = sorted[lo..hi].iter().map(|&y| std_normal_cdf((t - y) / h)).sum();
    (lo as f64 + inner) / sorted.len() as f64
}

fn kernel_quantile(sorted: &[f64], h: f64, z: f64) -> f64 {
    let lo = sorted[0] - BRACKET_SIGMAS * h;
    let hi = sorted[sorted.len() - 1] + BRACKET_SIGMAS * h;
    bisect(|t| kernel_cdf(sorted, h, t), z, lo, hi)
}

/// CDF of a 1-D mixture slice.
pub fn model_cdf(slice: &SliceModel, t: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..slice.k() {
        acc += slice.weights[k] * std_normal_cdf((t - slice.means[k]) / slice.vars[k].sqrt());
    }
    acc.clamp(0.0, 1.0)
}

/// Inverse of [`model_cdf`] by bisection to `1e-10` on a 10-sigma bracket.
pub fn model_quantile(slice: &SliceModel, z: f64) -> f64 {
    let (lo, hi) = slice.bracket(BRACKET_SIGMAS);
    bisect(|t| model_cdf(slice, t), z, lo, hi)
}

/// Quantiles of a mixture slice at ascending levels `zs`.
///
/// Each root is bracketed by the previous one and found with safeguarded
/// Newton steps (falling back to bisection), to the same tolerance as
/// [`model_quantile`].
pub fn model_quantiles_sorted(slice: &SliceModel, zs: &[f64]) -> Vec<f64> {
    let (lo0, hi0) = slice.bracket(BRACKET_SIGMAS);
    let mut out = Vec::with_capacity(zs.len());
    let mut lo_prev = lo0;
    for &z in zs {
        let r = if z <= 0.0 {
            lo0
        } else if z >= 1.0 {
            hi0
        } else {
            newton_root(slice, z, lo_prev, hi0)
        };
        lo_prev = lo_prev.max(r.min(hi0));
        out.push(r);
    }
    out
}

fn newton_root(slice: &SliceModel, z: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut x = lo;
    for _ in 0..200 {
        let f = model_cdf(slice, x) - z;
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let tol = BISECTION_TOL * (1.0 + lo.abs().max(hi.abs()));
        if hi - lo <= tol {
            break;
        }
        let dens = slice.density(x);
        let mut next = x - f / dens;
        if !(dens > 0.0) || !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= tol {
            x = next;
            break;
        }
        x = next;
    }
    x
}

fn bisect(cdf: impl Fn(f64) -> f64, z: f64, mut lo: f64, mut hi: f64) -> f64 {
    if z <= 0.0 {
        return lo;
    }
    if z >= 1.0 {
        return hi;
    }
    while hi - lo > BISECTION_TOL * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Monotone transport map from a mixture slice to a data slice:
/// `f(t) = Q_y(F_x(t))`.
pub fn transport_map(x_slice: &SliceModel, y_slice: &SliceData, t: f64) -> f64 {
    slice_quantile(y_slice, model_cdf(x_slice, t))
}

/// `W_p(a, b)` via `m` midpoint quantile levels. Two unsmoothed sample sets
/// of equal size are compared exactly through their sorted values.
pub fn wasserstein_1d(a: Marginal<'_>, b: Marginal<'_>, p: f64, m: usize) -> Result<f64> {
    Ok(wasserstein_1d_pow(a, b, p, m)?.powf(1.0 / p))
}

/// `W_p^p(a, b)`; see [`wasserstein_1d`].
pub fn wasserstein_1d_pow(a: Marginal<'_>, b: Marginal<'_>, p: f64, m: usize) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::arg(format!("Wasserstein order p = {p} must be >= 1")));
    }
    if m == 0 {
        return Err(Error::arg("grid size must be positive"));
    }
    if let (Marginal::Samples(x), Marginal::Samples(y)) = (a, b) {
        if x.len() == y.len() && x.bandwidth().is_none() && y.bandwidth().is_none() {
            return Ok(mean_abs_pow(x.points(), y.points(), p));
        }
    }
    let zs = midpoint_levels(m);
    let qa = a.quantiles(&zs);
    let qb = b.quantiles(&zs);
    Ok(mean_abs_pow(&qa, &qb, p))
}

fn mean_abs_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| abs_pow((x - y).abs(), p)).sum();
    s / a.len() as f64
}

pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 1.0 {
        x
    } else {
        x.powf(p)
    }
}

/// A d-dimensional distribution that can be sliced.
#[derive(Debug, Clone, Copy)]
pub enum Distribution<'a> {
    Model(&'a GmmModel),
    Data(&'a Dataset),
}

impl Distribution<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Distribution::Model(m) => m.dim(),
            Distribution::Data(d) => d.dim(),
        }
    }
}

impl<'a> From<&'a GmmModel> for Distribution<'a> {
    fn from(m: &'a GmmModel) -> Self {
        Distribution::Model(m)
    }
}

impl<'a> From<&'a Dataset> for Distribution<'a> {
    fn from(d: &'a Dataset) -> Self {
        Distribution::Data(d)
    }
}

enum Sliced {
    Model(SliceModel),
    Data(SliceData),
}

impl Sliced {
    fn of(dist: Distribution<'_>, theta: &crate::slicing::Direction) -> Result<Self> {
        Ok(match dist {
            Distribution::Model(m) => Sliced::Model(slice_model_with_floor(m, theta, DEFAULT_EPS_VAR)?),
            Distribution::Data(d) => Sliced::Data(slice_data(d, theta)?),
        })
    }

    fn marginal(&self) -> Marginal<'_> {
        match self {
            Sliced::Model(m) => Marginal::Model(m),
            Sliced::Data(d) => Marginal::Samples(d),
        }
    }
}

/// Monte-Carlo sliced `p`-Wasserstein distance over `l` uniform directions:
/// `(mean_l W_p^p(slice_l(a), slice_l(b)))^(1/p)`.
pub fn sliced_wasserstein(
    a: Distribution<'_>,
    b: Distribution<'_>,
    p: f64,
    l: usize,
    m: usize,
    seed: u64,
) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::arg(format!("Wasserstein order p = {p} must be >= 1")));
    }
    let dirs = sample_directions(a.dim(), l, seed)?;
    let per_dir: Vec<f64> = dirs
        .par_iter()
        .map(|th| {
            let sa = Sliced::of(a, th)?;
            let sb = Sliced::of(b, th)?;
            wasserstein_1d_pow(sa.marginal(), sb.marginal(), p, m)
        })
        .collect::<Result<_>>()?;
    // fixed-order reduction keeps the result schedule-independent
    let mean = per_dir.iter().sum::<f64>() / l as f64;
    Ok(mean.powf(1.0 / p))
}
