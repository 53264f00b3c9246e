//! One-dimensional marginals along unit directions: projected samples and the
//! closed-form slice of a Gaussian mixture.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::gmm::{Dataset, GmmModel, DEFAULT_EPS_VAR};
use crate::rng::rng_from_seed;

/// A unit vector on the sphere `S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `v`; errors on a zero or non-finite vector.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::arg("direction must have positive dimension"));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::arg("direction must be a finite non-zero vector"));
        }
        Ok(Self(v.into_iter().map(|x| x / norm).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// `l` directions drawn uniformly from `S^{d-1}` (normalized Gaussian vectors).
pub fn sample_directions(d: usize, l: usize, seed: u64) -> Result<Vec<Direction>> {
    if d == 0 || l == 0 {
        return Err(Error::arg("sample_directions needs d >= 1 and l >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(l);
    while out.len() < l {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        // a zero draw has probability zero but would not normalize
        if let Ok(dir) = Direction::new(v) {
            out.push(dir);
        }
    }
    Ok(out)
}

/// Projected samples `{y_n . theta}`, sorted ascending.
///
/// With `bandwidth = Some(h)` the marginal is the Gaussian kernel density
/// estimate with bandwidth `h` instead of the point-mass empirical measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceData {
    points: Vec<f64>,
    bandwidth: Option<f64>,
}

impl SliceData {
    /// Builds a slice from raw values (sorted here).
    pub fn from_values(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("slice needs at least one point"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("slice points must be finite"));
        }
        points.sort_unstable_by(f64::total_cmp);
        Ok(Self { points, bandwidth: None })
    }

    pub fn with_bandwidth(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::arg("kernel bandwidth must be positive"));
        }
        self.bandwidth = Some(h);
        Ok(self)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bandwidth(&self) -> Option<f64> {
        self.bandwidth
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

pub fn slice_data(data: &Dataset, theta: &Direction) -> Result<SliceData> {
    check_dim(data.dim(), theta.dim())?;
    let pts = data.rows().map(|r| theta.dot(r)).collect();
    SliceData::from_values(pts)
}

/// The slice of a mixture along a direction: itself a 1-D mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceModel {
    pub(crate) weights: Vec<f64>,
    pub(crate) means: Vec<f64>,
    pub(crate) vars: Vec<f64>,
}

impl SliceModel {
    /// A 1-D mixture given directly by its parameters.
    pub fn new(weights: Vec<f64>, means: Vec<f64>, vars: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || vars.len() != k {
            return Err(Error::arg("slice model needs matching non-empty parameter vectors"));
        }
        if weights.iter().chain(&means).chain(&vars).any(|v| !v.is_finite()) {
            return Err(Error::arg("slice model parameters must be finite"));
        }
        if vars.iter().any(|&v| v <= 0.0) || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::arg("slice variances must be positive and weights non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("slice weights sum to {total}")));
        }
        Ok(Self { weights, means, vars })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn vars(&self) -> &[f64] {
        &self.vars
    }

    /// `N_1(t; mean_k, var_k)` without the mixture weight.
    pub fn component_density(&self, k: usize, t: f64) -> f64 {
        let v = self.vars[k];
        let r = t - self.means[k];
        (-0.5 * r * r / v).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }

    pub fn density(&self, t: f64) -> f64 {
        (0..self.k()).map(|k| self.weights[k] * self.component_density(k, t)).sum()
    }

    /// `[min(mean) - s*sigma_max, max(mean) + s*sigma_max]`.
    pub fn bracket(&self, spread: f64) -> (f64, f64) {
        let sig = self.vars.iter().copied().fold(0.0, f64::max).sqrt();
        let lo = self.means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - spread * sig, hi + spread * sig)
    }
}

pub fn slice_model(model: &GmmModel, theta: &Direction) -> Result<SliceModel> {
    slice_model_with_floor(model, theta, DEFAULT_EPS_VAR)
}

/// Slice with variances `theta^T Sigma_k theta` floored at `eps_var`.
pub fn slice_model_with_floor(model: &GmmModel, theta: &Direction, eps_var: f64) -> Result<SliceModel> {
    check_dim(model.dim(), theta.dim())?;
    let th = theta.as_slice();
    let d = th.len();
    let means = model.means().iter().map(|mu| theta.dot(mu.as_slice())).collect();
    let vars = model
        .covariances()
        .iter()
        .map(|cov| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += th[i] * cov[(i, j)] * th[j];
                }
            }
            s.max(eps_var)
        })
        .collect();
    Ok(SliceModel { weights: model.weights().to_vec(), means, vars })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::sample;
    use crate::ot1d::model_cdf;
    use nalgebra::{dmatrix, dvector, DMatrix, DVector};
    use rand::Rng;

    #[test]
    fn one_dimensional_directions_are_signs() {
        for d in sample_directions(1, 50, 4).unwrap() {
            assert!(d.as_slice()[0] == 1.0 || d.as_slice()[0] == -1.0);
        }
    }

    #[test]
    fn directions_have_unit_norm() {
        for d in sample_directions(7, 200, 1).unwrap() {
            let n: f64 = d.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert!(sample_directions(0, 3, 1).is_err());
        assert!(sample_directions(3, 0, 1).is_err());
    }

    #[test]
    fn directions_are_centered() {
        let dirs = sample_directions(3, 10_000, 8).unwrap();
        let mut m = [0.0; 3];
        for d in &dirs {
            for i in 0..3 {
                m[i] += d.as_slice()[i] / dirs.len() as f64;
            }
        }
        let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm < 0.05, "{norm}");
    }

    #[test]
    fn axis_and_oblique_projection() {
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], None).unwrap();
        let s = slice_data(&data, &Direction::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(s.points(), &[0.0, 1.0]);
        let one = Dataset::from_rows(&[vec![5.0, 5.0]], None).unwrap();
        let s = slice_data(&one, &Direction::new(vec![0.6, 0.8]).unwrap()).unwrap();
        assert!((s.points()[0] - 7.0).abs() < 1e-12);
        let wrong = Direction::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(slice_data(&data, &wrong).is_err());
    }

    #[test]
    fn permuted_rows_give_same_slice() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![(i * 7 % 13) as f64, (i * 3) as f64 * 0.5]).collect();
        let mut rev = rows.clone();
        rev.reverse();
        let th = Direction::new(vec![0.3, -0.7]).unwrap();
        let a = slice_data(&Dataset::from_rows(&rows, None).unwrap(), &th).unwrap();
        let b = slice_data(&Dataset::from_rows(&rev, None).unwrap(), &th).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_slices() {
        let m = GmmModel::gaussian(dvector![1.0, 2.0], DMatrix::identity(2, 2)).unwrap();
        let s = slice_model(&m, &Direction::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!((s.means()[0], s.vars()[0]), (1.0, 1.0));
        let m = GmmModel::gaussian(dvector![1.0, 2.0], dmatrix![4.0, 0.0; 0.0, 9.0]).unwrap();
        let s = slice_model(&m, &Direction::new(vec![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!((s.means()[0], s.vars()[0]), (2.0, 9.0));
    }

    fn random_model(rng: &mut impl Rng, k: usize, d: usize) -> GmmModel {
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let means = (0..k).map(|_| DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0))).collect();
        let covs = (0..k)
            .map(|_| {
                let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
                &a * a.transpose() + DMatrix::identity(d, d) * 0.1
            })
            .collect();
        GmmModel::new(raw.iter().map(|w| w / total).collect(), means, covs).unwrap()
    }

    #[test]
    fn reflection_and_linearity() {
        let mut rng = crate::rng::rng_from_seed(2);
        let model = random_model(&mut rng, 3, 4);
        let th = sample_directions(4, 1, 5).unwrap().remove(0);
        let a = slice_model(&model, &th).unwrap();
        let b = slice_model(&model, &th.negated()).unwrap();
        for k in 0..3 {
            assert_eq!(a.means()[k], -b.means()[k]);
            assert!((a.vars()[k] - b.vars()[k]).abs() < 1e-12);
        }
        for i in -40..=40 {
            let t = i as f64 * 0.25;
            let direct: f64 = (0..3)
                .map(|k| {
                    let v = a.vars()[k];
                    model.weights()[k] * (-(t - a.means()[k]).powi(2) / (2.0 * v)).exp()
                        / (2.0 * std::f64::consts::PI * v).sqrt()
                })
                .sum();
            assert!((a.density(t) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn projected_samples_follow_slice_cdf() {
        let mut rng = crate::rng::rng_from_seed(17);
        let model = random_model(&mut rng, 2, 3);
        let th = sample_directions(3, 1, 2).unwrap().remove(0);
        let data = sample(&model, 100_000, 4).unwrap();
        let s = slice_data(&data, &th).unwrap();
        let sm = slice_model(&model, &th).unwrap();
        let n = s.len() as f64;
        let ks = s
            .points()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let f = model_cdf(&sm, t);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "ks = {ks}");
    }
}
