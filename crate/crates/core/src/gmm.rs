//! Gaussian mixture parameterization, density evaluation, sampling and the
//! feasibility projections used after every optimizer step.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::rng::rng_from_seed;

/// Default lower bound on covariance eigenvalues and slice variances.
pub const DEFAULT_EPS_VAR: f64 = 1e-6;

const WEIGHT_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-9;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// A `d`-dimensional Gaussian mixture with `k` components.
///
/// Construction checks shapes, finiteness, the weight simplex and covariance
/// symmetry. The covariance eigenvalue floor depends on the caller's
/// `eps_var` and is checked by [`GmmModel::check_floor`] (density and
/// likelihood evaluation enforce [`DEFAULT_EPS_VAR`]).
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    dim: usize,
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covariances: Vec<DMatrix<f64>>,
}

impl GmmModel {
    pub fn new(
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covariances: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::InvalidModel("model needs at least one component".into()));
        }
        if means.len() != k || covariances.len() != k {
            return Err(Error::InvalidModel(format!(
                "component count mismatch: {} weights, {} means, {} covariances",
                k,
                means.len(),
                covariances.len()
            )));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        for (j, (mu, cov)) in means.iter().zip(&covariances).enumerate() {
            if mu.len() != dim || cov.nrows() != dim || cov.ncols() != dim {
                return Err(Error::InvalidModel(format!(
                    "component {j} does not have dimension {dim}"
                )));
            }
            if mu.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!("component {j} has non-finite entries")));
            }
            let asym = (cov - cov.transpose()).amax();
            if asym > SYMMETRY_TOL {
                return Err(Error::InvalidModel(format!(
                    "covariance {j} is not symmetric (max asymmetry {asym:e})"
                )));
            }
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidModel("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidModel(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { dim, weights, means, covariances })
    }

    /// Single Gaussian component.
    pub fn gaussian(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], vec![cov])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    /// Errors unless every covariance eigenvalue is at least `eps_var`.
    pub fn check_floor(&self, eps_var: f64) -> Result<()> {
        for (j, cov) in self.covariances.iter().enumerate() {
            let eig = SymmetricEigen::new(symmetrize(cov));
            let lo = eig.eigenvalues.min();
            if !floor_ok(lo, eps_var, eig.eigenvalues.amax()) {
                return Err(Error::InvalidModel(format!(
                    "covariance {j} has eigenvalue {lo:e} below the floor {eps_var:e}"
                )));
            }
        }
        Ok(())
    }

    /// Unconstrained copy of the parameters.
    pub fn params(&self) -> GmmParams {
        GmmParams {
            weights: self.weights.clone(),
            means: self.means.clone(),
            covariances: self.covariances.clone(),
        }
    }

    /// Returns a copy with component order permuted: new component `i` is old `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k() {
            return Err(Error::arg("permutation length must equal k"));
        }
        Self::new(
            perm.iter().map(|&i| self.weights[i]).collect(),
            perm.iter().map(|&i| self.means[i].clone()).collect(),
            perm.iter().map(|&i| self.covariances[i].clone()).collect(),
        )
    }
}

/// Mixture parameters without invariants: gradients, optimizer moments and
/// perturbed models for finite differences all use this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

impl GmmParams {
    pub fn zeros(k: usize, d: usize) -> Self {
        Self {
            weights: vec![0.0; k],
            means: vec![DVector::zeros(d); k],
            covariances: vec![DMatrix::zeros(d, d); k],
        }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, |m| m.len())
    }

    /// Flat layout `[weights | means | covariances (row-major)]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.k() * (1 + d + d * d));
        out.extend_from_slice(&self.weights);
        for mu in &self.means {
            out.extend(mu.iter());
        }
        for cov in &self.covariances {
            for r in 0..d {
                for c in 0..d {
                    out.push(cov[(r, c)]);
                }
            }
        }
        out
    }

    pub fn from_flat(flat: &[f64], k: usize, d: usize) -> Result<Self> {
        if flat.len() != k * (1 + d + d * d) {
            return Err(Error::arg("flat parameter vector has the wrong length"));
        }
        let weights = flat[..k].to_vec();
        let means = (0..k)
            .map(|j| DVector::from_column_slice(&flat[k + j * d..k + (j + 1) * d]))
            .collect();
        let base = k + k * d;
        let covariances = (0..k)
            .map(|j| DMatrix::from_row_slice(d, d, &flat[base + j * d * d..base + (j + 1) * d * d]))
            .collect();
        Ok(Self { weights, means, covariances })
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.means.iter().flat_map(|m| m.iter()))
            .chain(self.covariances.iter().flat_map(|c| c.iter()))
            .all(|v| v.is_finite())
    }

    /// Euclidean norm over all entries.
    pub fn norm(&self) -> f64 {
        self.to_flat().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<GmmParams> for GmmModel {
    type Error = Error;

    fn try_from(p: GmmParams) -> Result<Self> {
        GmmModel::new(p.weights, p.means, p.covariances)
    }
}

/// `n` samples in `d` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
    label: Option<String>,
}

impl Dataset {
    pub fn new(dim: usize, values: Vec<f64>, label: Option<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("dataset dimension must be positive"));
        }
        if values.is_empty() {
            return Err(Error::arg("dataset must contain at least one sample"));
        }
        if values.len() % dim != 0 {
            return Err(Error::arg(format!(
                "{} values do not form rows of length {dim}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite value in row {}", i / dim)));
        }
        Ok(Self { dim, values, label })
    }

    pub fn from_rows(rows: &[Vec<f64>], label: Option<String>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or_else(|| Error::arg("no rows"))?;
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::arg(format!("row {i} has {} entries, expected {dim}", r.len())));
            }
            values.extend_from_slice(r);
        }
        Self::new(dim, values, label)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m / self.len() as f64
    }

    /// Maximum-likelihood (1/N) sample covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let d = self.dim;
        let mut c = DMatrix::zeros(d, d);
        for r in self.rows() {
            for i in 0..d {
                let di = r[i] - mean[i];
                for j in i..d {
                    c[(i, j)] += di * (r[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                c[(i, j)] = c[(j, i)];
            }
        }
        c / self.len() as f64
    }

    /// Copy with every row shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        check_dim(self.dim, offset.len())?;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v + offset[i % self.dim])
            .collect();
        Self::new(self.dim, values, self.label.clone())
    }
}

/// Per-component Cholesky factors and log normalizers, computed once per call
/// so that density and likelihood loops do no factorization work.
pub(crate) struct PreparedMixture {
    dim: usize,
    log_weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    chol: Vec<DMatrix<f64>>,
}

impl PreparedMixture {
    pub(crate) fn new(model: &GmmModel, eps_var: f64) -> Result<Self> {
        model.check_floor(eps_var)?;
        let d = model.dim;
        let mut chol = Vec::with_capacity(model.k());
        let mut log_weights = Vec::with_capacity(model.k());
        for (w, cov) in model.weights.iter().zip(&model.covariances) {
            let l = match symmetrize(cov).cholesky() {
                Some(c) => c.unpack(),
                None => project_psd(cov, eps_var)?
                    .cholesky()
                    .ok_or_else(|| Error::InvalidModel("covariance not factorizable".into()))?
                    .unpack(),
            };
            let log_det_half: f64 = (0..d).map(|i| l[(i, i)].ln()).sum();
            log_weights.push(w.ln() - 0.5 * d as f64 * LN_2PI - log_det_half);
            chol.push(l);
        }
        Ok(Self { dim: d, log_weights, means: model.means.clone(), chol })
    }

    /// `log(alpha_k N(x; mu_k, Sigma_k))` for every component.
    pub(crate) fn log_joint(&self, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let d = self.dim;
        for (j, o) in out.iter_mut().enumerate() {
            let l = &self.chol[j];
            let mu = &self.means[j];
            // forward substitution: L z = x - mu
            let mut quad = 0.0;
            for r in 0..d {
                let mut s = x[r] - mu[r];
                for c in 0..r {
                    s -= l[(r, c)] * scratch[c];
                }
                let z = s / l[(r, r)];
                scratch[r] = z;
                quad += z * z;
            }
            *o = self.log_weights[j] - 0.5 * quad;
        }
    }

    pub(crate) fn k(&self) -> usize {
        self.log_weights.len()
    }

    pub(crate) fn log_density(&self, x: &[f64], buf: &mut [f64], scratch: &mut [f64]) -> f64 {
        self.log_joint(x, buf, scratch);
        log_sum_exp(buf)
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Mixture density at `x`.
pub fn density(model: &GmmModel, x: &[f64]) -> Result<f64> {
    check_dim(model.dim, x.len())?;
    let prep = PreparedMixture::new(model, DEFAULT_EPS_VAR)?;
    let mut buf = vec![0.0; prep.k()];
    let mut scratch = vec![0.0; model.dim];
    Ok(prep.log_density(x, &mut buf, &mut scratch).exp())
}

/// Average negative log-likelihood `-(1/N) sum_n log p(y_n)`.
pub fn nll(model: &GmmModel, data: &Dataset) -> Result<f64> {
    nll_with_floor(model, data, DEFAULT_EPS_VAR)
}

pub fn nll_with_floor(model: &GmmModel, data: &Dataset, eps_var: f64) -> Result<f64> {
    check_dim(model.dim, data.dim())?;
    let prep = PreparedMixture::new(model, eps_var)?;
    let mut buf = vec![0.0; prep.k()];
    let mut scratch = vec![0.0; model.dim];
    let total: f64 = data.rows().map(|r| prep.log_density(r, &mut buf, &mut scratch)).sum();
    Ok(-total / data.len() as f64)
}

/// Draws `n` samples; also returns the component index of each row.
pub fn sample_with_labels(model: &GmmModel, n: usize, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    if n == 0 {
        return Err(Error::arg("sample count must be positive"));
    }
    let d = model.dim;
    let factors: Vec<DMatrix<f64>> = model.covariances.iter().map(sqrt_factor).collect();
    let mut cumulative = Vec::with_capacity(model.k());
    let mut acc = 0.0;
    for w in &model.weights {
        acc += w;
        cumulative.push(acc);
    }
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut z = DVector::zeros(d);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let j = cumulative.iter().position(|&c| u < c).unwrap_or(model.k() - 1);
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let x = &model.means[j] + &factors[j] * &z;
        values.extend(x.iter());
        labels.push(j);
    }
    let data = Dataset::new(d, values, Some(format!("gmm-sample(seed={seed})")))?;
    Ok((data, labels))
}

/// Draws `n` samples from the mixture, deterministic in `seed`.
pub fn sample(model: &GmmModel, n: usize, seed: u64) -> Result<Dataset> {
    sample_with_labels(model, n, seed).map(|(d, _)| d)
}

/// Lower-triangular square root for sampling; falls back to an eigen square
/// root when the matrix is only semidefinite.
fn sqrt_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = symmetrize(cov);
    if let Some(c) = sym.clone().cholesky() {
        return c.unpack();
    }
    let eig = SymmetricEigen::new(sym);
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn floor_ok(lambda_min: f64, eps_var: f64, scale: f64) -> bool {
    lambda_min >= eps_var - 1e-12 * scale.max(1.0)
}

/// Projects a symmetric matrix onto `{S : S = S^T, eig(S) >= eps_var}` in
/// Frobenius norm. Also reports whether any eigenvalue had to be clipped.
pub fn project_psd_report(m: &DMatrix<f64>, eps_var: f64) -> Result<(DMatrix<f64>, bool)> {
    if !m.is_square() {
        return Err(Error::arg("matrix must be square"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    if !(eps_var > 0.0) {
        return Err(Error::arg("eps_var must be positive"));
    }
    let sym = symmetrize(m);
    let eig = SymmetricEigen::new(sym.clone());
    if floor_ok(eig.eigenvalues.min(), eps_var, eig.eigenvalues.amax()) {
        return Ok((sym, false));
    }
    let clipped = eig.eigenvalues.map(|l| l.max(eps_var));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    Ok((symmetrize(&out), true))
}

/// Nearest matrix (Frobenius) with eigenvalues at least `eps_var`.
pub fn project_psd(m: &DMatrix<f64>, eps_var: f64) -> Result<DMatrix<f64>> {
    project_psd_report(m, eps_var).map(|(p, _)| p)
}

/// Clips negative entries to zero and rescales to sum one.
///
/// This is not the Euclidean projection onto the simplex (which subtracts a
/// common threshold before clipping); it only guarantees feasibility.
pub fn project_simplex(w: &[f64]) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::arg("weight vector is empty"));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("weights must be finite"));
    }
    let clipped: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    Ok(clipped.into_iter().map(|v| v / total).collect())
}

/// Random initialization shared by both fitting methods: `k` distinct data
/// points as means, `(tr(Cov)/d) I` covariances, uniform weights.
pub fn init_from_data(data: &Dataset, k: usize, eps_var: f64, seed: u64) -> Result<GmmModel> {
    if k == 0 {
        return Err(Error::arg("k must be positive"));
    }
    if k > data.len() {
        return Err(Error::arg(format!("k = {k} exceeds the number of samples {}", data.len())));
    }
    let d = data.dim();
    let mut rng = rng_from_seed(seed);
    let picks = rand::seq::index::sample(&mut rng, data.len(), k);
    let scale = (data.covariance().trace() / d as f64).max(eps_var);
    let means = picks.iter().map(|i| DVector::from_column_slice(data.row(i))).collect();
    let covs = vec![DMatrix::identity(d, d) * scale; k];
    GmmModel::new(vec![1.0 / k as f64; k], means, covs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn std_normal_2d() -> GmmModel {
        GmmModel::gaussian(dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap()
    }

    #[test]
    fn density_at_mode_of_standard_normal() {
        let p = density(&std_normal_2d(), &[0.0, 0.0]).unwrap();
        assert_relative_eq!(p, 1.0 / (2.0 * std::f64::consts::PI), epsilon = 1e-12);
    }

    #[test]
    fn identical_components_match_single() {
        let one = std_normal_2d();
        let two = GmmModel::new(
            vec![0.5, 0.5],
            vec![dvector![0.0, 0.0]; 2],
            vec![DMatrix::identity(2, 2); 2],
        )
        .unwrap();
        for x in [[0.0, 0.0], [1.0, -2.0], [3.5, 0.25]] {
            assert_relative_eq!(density(&one, &x).unwrap(), density(&two, &x).unwrap(), epsilon = 1e-15);
        }
    }

    #[test]
    fn one_dimensional_mixture_matches_scalar_sum() {
        let model = GmmModel::new(
            vec![0.3, 0.7],
            vec![dvector![-1.0], dvector![2.0]],
            vec![dmatrix![1.0], dmatrix![4.0]],
        )
        .unwrap();
        let scalar = |x: f64, m: f64, v: f64| {
            (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
        };
        let expected = 0.3 * scalar(0.0, -1.0, 1.0) + 0.7 * scalar(0.0, 2.0, 4.0);
        assert_relative_eq!(density(&model, &[0.0]).unwrap(), expected, max_relative = 1e-13);
    }

    #[test]
    fn density_rejects_bad_input() {
        assert!(matches!(
            density(&std_normal_2d(), &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let tiny = GmmModel::gaussian(dvector![0.0], dmatrix![1e-9]).unwrap();
        assert!(matches!(density(&tiny, &[0.0]), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn nll_of_standard_normal_at_zero() {
        let model = GmmModel::gaussian(dvector![0.0], dmatrix![1.0]).unwrap();
        let data = Dataset::new(1, vec![0.0], None).unwrap();
        assert_relative_eq!(nll(&model, &data).unwrap(), 0.918_938_533_204_672_7, epsilon = 1e-12);
    }

    #[test]
    fn nll_of_self_sample_approaches_entropy() {
        let cov = dmatrix![2.0, 0.5; 0.5, 1.0];
        let model = GmmModel::gaussian(dvector![1.0, -1.0], cov.clone()).unwrap();
        let n = 200_000;
        let data = sample(&model, n, 3).unwrap();
        let d = 2.0;
        let entropy = 0.5 * (d * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + cov.determinant().ln());
        // -log p(y) has variance d/2 for a Gaussian; allow 4 standard errors.
        let tol = 4.0 * (d / 2.0 / n as f64).sqrt();
        assert!((nll(&model, &data).unwrap() - entropy).abs() < tol);
    }

    #[test]
    fn sample_with_vanishing_variance() {
        let model = GmmModel::gaussian(dvector![5.0, 5.0], DMatrix::identity(2, 2) * 1e-12).unwrap();
        let data = sample(&model, 3, 11).unwrap();
        for r in data.rows() {
            assert!((r[0] - 5.0).abs() < 1e-4 && (r[1] - 5.0).abs() < 1e-4);
        }
        assert!(sample(&model, 0, 1).is_err());
    }

    #[test]
    fn sample_component_frequencies() {
        let model = GmmModel::new(
            vec![0.9, 0.1],
            vec![dvector![0.0], dvector![10.0]],
            vec![dmatrix![1.0]; 2],
        )
        .unwrap();
        let n = 10_000;
        let (_, labels) = sample_with_labels(&model, n, 5).unwrap();
        let frac = labels.iter().filter(|&&l| l == 0).count() as f64 / n as f64;
        let se = (0.9 * 0.1 / n as f64).sqrt();
        assert!((frac - 0.9).abs() < 3.0 * se, "frac = {frac}");
    }

    #[test]
    fn psd_projection_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(project_psd(&id, 1e-6).unwrap(), id);
        let m = dmatrix![1.0, 0.0; 0.0, -0.1];
        let p = project_psd(&m, 1e-6).unwrap();
        assert_relative_eq!(p, dmatrix![1.0, 0.0; 0.0, 1e-6], epsilon = 1e-15);
        assert!(project_psd(&dmatrix![f64::NAN], 1e-6).is_err());
    }

    #[test]
    fn simplex_projection_examples() {
        assert_eq!(project_simplex(&[0.2, 0.2]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        let p = project_simplex(&[0.5, -0.1, 0.6]).unwrap();
        assert_relative_eq!(p[0], 0.5 / 1.1, epsilon = 1e-15);
        assert_eq!(p[1], 0.0);
        assert_relative_eq!(p[2], 0.6 / 1.1, epsilon = 1e-15);
        assert!(matches!(project_simplex(&[-1.0, 0.0]), Err(Error::DegenerateWeights)));
    }

    #[test]
    fn model_validation() {
        let bad_w = GmmModel::new(vec![0.5, 0.6], vec![dvector![0.0]; 2], vec![dmatrix![1.0]; 2]);
        assert!(bad_w.is_err());
        let asym = GmmModel::gaussian(dvector![0.0, 0.0], dmatrix![1.0, 0.1; 0.0, 1.0]);
        assert!(asym.is_err());
        let ragged = GmmModel::new(vec![1.0], vec![dvector![0.0, 0.0]], vec![dmatrix![1.0]]);
        assert!(ragged.is_err());
    }

    #[test]
    fn init_uses_distinct_points() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], None).unwrap();
        let m = init_from_data(&data, 4, 1e-6, 9).unwrap();
        let mut mus: Vec<f64> = m.means().iter().map(|v| v[0]).collect();
        mus.sort_by(f64::total_cmp);
        assert_eq!(mus, vec![0.0, 1.0, 2.0, 3.0]);
        assert_relative_eq!(m.covariances()[0][(0, 0)], 1.25, epsilon = 1e-15);
        assert!(init_from_data(&data, 5, 1e-6, 9).is_err());
    }

    #[test]
    fn flat_roundtrip() {
        let m = GmmModel::new(
            vec![0.25, 0.75],
            vec![dvector![1.0, 2.0], dvector![3.0, 4.0]],
            vec![dmatrix![1.0, 0.2; 0.2, 2.0], dmatrix![3.0, 0.0; 0.0, 4.0]],
        )
        .unwrap();
        let p = GmmParams::from_flat(&m.params().to_flat(), 2, 2).unwrap();
        assert_eq!(GmmModel::try_from(p).unwrap(), m);
    }
}
