//! Energy-landscape scans and the shared-initialization robustness comparison.

use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::em::{fit_em, EmConfig};
use crate::error::{Error, Result};
use crate::gmm::{init_from_data, nll, sample, Dataset, GmmModel};
use crate::ot1d::{sliced_wasserstein, wasserstein_1d_pow, Distribution, Marginal, DEFAULT_GRID};
use crate::rng::derive_seed;
use crate::slicing::{SliceData, SliceModel};
use crate::swm::{fit_swm, SwmConfig};

/// Sweep range for every landscape coordinate.
pub const LANDSCAPE_RANGE: (f64, f64) = (-10.0, 10.0);
/// True component means of the two-component landscape data.
pub const SCENARIO2_MEANS: (f64, f64) = (-4.0, 4.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// One Gaussian with unknown mean.
    SingleGaussian,
    /// Two equal-weight unit-variance components with unknown means.
    TwoComponents,
}

impl TryFrom<u8> for Scenario {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Scenario::SingleGaussian),
            2 => Ok(Scenario::TwoComponents),
            _ => Err(Error::arg(format!("unknown scenario {v}; expected 1 or 2"))),
        }
    }
}

/// Grid evaluation of NLL and the 1-D Wasserstein-means energy `W_p^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub scenario: Scenario,
    pub grid: usize,
    /// Grid coordinates per axis.
    pub axis: Vec<f64>,
    /// For scenario 2, row-major over `(mu1, mu2)`.
    pub nll: Vec<f64>,
    pub wm: Vec<f64>,
}

fn landscape_data(scenario: Scenario, n: usize, seed: u64) -> Result<Dataset> {
    let truth = match scenario {
        Scenario::SingleGaussian => GmmModel::gaussian(dvector![0.0], dmatrix![1.0])?,
        Scenario::TwoComponents => GmmModel::new(
            vec![0.5, 0.5],
            vec![dvector![SCENARIO2_MEANS.0], dvector![SCENARIO2_MEANS.1]],
            vec![dmatrix![1.0], dmatrix![1.0]],
        )?,
    };
    sample(&truth, n, seed)
}

/// Scans the landscape of the chosen scenario on a `grid`-point axis over
/// [`LANDSCAPE_RANGE`] (a `grid x grid` lattice for scenario 2). The `wm`
/// column is `W_p^p` between the candidate model and the empirical data,
/// integrated over `n` midpoint quantile levels so that every data quantile
/// is an exact order statistic.
pub fn landscape(scenario: Scenario, n: usize, grid: usize, seed: u64, p: f64) -> Result<Landscape> {
    if grid < 2 {
        return Err(Error::arg("grid must have at least 2 points"));
    }
    if n == 0 {
        return Err(Error::arg("n must be positive"));
    }
    let data = landscape_data(scenario, n, seed)?;
    let slice = SliceData::from_values(data.values().to_vec())?;
    let (lo, hi) = LANDSCAPE_RANGE;
    let axis: Vec<f64> = (0..grid).map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64).collect();
    let points: Vec<Vec<f64>> = match scenario {
        Scenario::SingleGaussian => axis.iter().map(|&m| vec![m]).collect(),
        Scenario::TwoComponents => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
            .collect(),
    };
    let evals: Vec<(f64, f64)> = points
        .par_iter()
        .map(|mus| {
            let k = mus.len();
            let w = vec![1.0 / k as f64; k];
            let model = GmmModel::new(
                w.clone(),
                mus.iter().map(|&m| DVector::from_element(1, m)).collect(),
                vec![DMatrix::from_element(1, 1, 1.0); k],
            )?;
            let sm = SliceModel::new(w, mus.clone(), vec![1.0; k])?;
            let wm = wasserstein_1d_pow(Marginal::Model(&sm), Marginal::Samples(&slice), p, n)?;
            Ok((nll(&model, &data)?, wm))
        })
        .collect::<Result<_>>()?;
    let (nll, wm) = evals.into_iter().unzip();
    Ok(Landscape { scenario, grid, axis, nll, wm })
}

impl Landscape {
    /// CSV with header `mu,nll,wm` (scenario 1) or `mu1,mu2,nll,wm` (scenario 2).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.scenario {
            Scenario::SingleGaussian => {
                out.push_str("mu,nll,wm\n");
                for (i, m) in self.axis.iter().enumerate() {
                    out.push_str(&format!("{m},{},{}\n", self.nll[i], self.wm[i]));
                }
            }
            Scenario::TwoComponents => {
                out.push_str("mu1,mu2,nll,wm\n");
                for (a, m1) in self.axis.iter().enumerate() {
                    for (b, m2) in self.axis.iter().enumerate() {
                        let i = a * self.grid + b;
                        out.push_str(&format!("{m1},{m2},{},{}\n", self.nll[i], self.wm[i]));
                    }
                }
            }
        }
        out
    }

    /// Grid coordinates of the minimum of `values`.
    pub fn argmin(&self, values: &[f64]) -> Vec<f64> {
        let i = argmin(values);
        match self.scenario {
            Scenario::SingleGaussian => vec![self.axis[i]],
            Scenario::TwoComponents => vec![self.axis[i / self.grid], self.axis[i % self.grid]],
        }
    }

    pub fn cell_width(&self) -> f64 {
        self.axis[1] - self.axis[0]
    }

    /// Interior grid points strictly below all axis neighbours.
    pub fn strict_local_minima(&self, values: &[f64]) -> usize {
        let g = self.grid;
        match self.scenario {
            Scenario::SingleGaussian => (1..g - 1)
                .filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1])
                .count(),
            Scenario::TwoComponents => {
                let mut count = 0;
                for a in 1..g - 1 {
                    for b in 1..g - 1 {
                        let v = values[a * g + b];
                        if v < values[(a - 1) * g + b]
                            && v < values[(a + 1) * g + b]
                            && v < values[a * g + b - 1]
                            && v < values[a * g + b + 1]
                        {
                            count += 1;
                        }
                    }
                }
                count
            }
        }
    }
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub k: usize,
    pub runs: usize,
    pub seed: u64,
    /// Relative NLL gap to the best observed value that still counts as a success.
    pub delta: f64,
    pub swm: SwmConfig,
    pub em: EmConfig,
    /// Directions used to evaluate the final sliced-Wasserstein distance.
    pub eval_projections: usize,
    pub eval_grid: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            k: 10,
            runs: 20,
            seed: 0,
            delta: 0.02,
            swm: SwmConfig::default(),
            em: EmConfig::default(),
            eval_projections: 500,
            eval_grid: DEFAULT_GRID,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub nll: Option<f64>,
    pub sw: Option<f64>,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CompareSummary {
    pub best_nll: f64,
    pub delta: f64,
    pub em_success_fraction: f64,
    pub swm_success_fraction: f64,
    pub em_median_nll: Option<f64>,
    pub swm_median_nll: Option<f64>,
    pub em_median_sw: Option<f64>,
    pub swm_median_sw: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CompareReport {
    pub k: usize,
    pub runs: usize,
    pub seed: u64,
    pub em: Vec<RunRecord>,
    pub swm: Vec<RunRecord>,
    pub summary: CompareSummary,
}

struct RawRun {
    em: std::result::Result<(f64, f64), String>,
    swm: std::result::Result<(f64, f64), String>,
}

/// For each run, draws one random initialization and fits both EM and SWM
/// from it; records final NLL and sliced-Wasserstein distance to the data.
/// Run `r` uses seed `derive_seed(seed, r)`, so results do not depend on
/// the order in which runs execute.
pub fn compare(data: &Dataset, config: &CompareConfig) -> Result<CompareReport> {
    if config.runs == 0 {
        return Err(Error::arg("runs must be at least 1"));
    }
    if !(config.delta >= 0.0) {
        return Err(Error::arg("delta must be non-negative"));
    }
    config.swm.validate()?;
    if config.k > data.len() {
        return Err(Error::arg(format!("k = {} exceeds the number of samples {}", config.k, data.len())));
    }
    let eval_seed = derive_seed(config.seed, u64::MAX);
    let evaluate = |m: &GmmModel| -> Result<(f64, f64)> {
        let sw = sliced_wasserstein(
            Distribution::Model(m),
            Distribution::Data(data),
            config.swm.p,
            config.eval_projections,
            config.eval_grid,
            eval_seed,
        )?;
        Ok((nll(m, data)?, sw))
    };
    let raw: Vec<RawRun> = (0..config.runs)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(config.seed, r as u64);
            let init = init_from_data(data, config.k, config.swm.eps_var, seed)?;
            let em_cfg = EmConfig { seed, ..config.em.clone() };
            let swm_cfg = SwmConfig { seed, ..config.swm.clone() };
            let em = fit_em(data, config.k, &em_cfg, Some(&init))
                .and_then(|(m, _)| evaluate(&m))
                .map_err(|e| e.to_string());
            let swm = fit_swm(data, config.k, &swm_cfg, Some(&init))
                .and_then(|(m, _)| evaluate(&m))
                .map_err(|e| e.to_string());
            Ok(RawRun { em, swm })
        })
        .collect::<Result<_>>()?;

    let best_nll = raw
        .iter()
        .flat_map(|r| [r.em.as_ref().ok(), r.swm.as_ref().ok()])
        .flatten()
        .map(|(n, _)| *n)
        .fold(f64::INFINITY, f64::min);
    let threshold = best_nll + config.delta * best_nll.abs();
    let records = |pick: fn(&RawRun) -> &std::result::Result<(f64, f64), String>| -> Vec<RunRecord> {
        raw.iter()
            .enumerate()
            .map(|(r, run)| {
                let seed = derive_seed(config.seed, r as u64);
                match pick(run) {
                    Ok((n, sw)) => RunRecord {
                        run: r,
                        seed,
                        nll: Some(*n),
                        sw: Some(*sw),
                        success: *n <= threshold,
                        error: None,
                    },
                    Err(e) => RunRecord { run: r, seed, nll: None, sw: None, success: false, error: Some(e.clone()) },
                }
            })
            .collect()
    };
    let em = records(|r| &r.em);
    let swm = records(|r| &r.swm);
    let frac = |v: &[RunRecord]| v.iter().filter(|r| r.success).count() as f64 / v.len() as f64;
    let summary = CompareSummary {
        best_nll,
        delta: config.delta,
        em_success_fraction: frac(&em),
        swm_success_fraction: frac(&swm),
        em_median_nll: median(em.iter().filter_map(|r| r.nll)),
        swm_median_nll: median(swm.iter().filter_map(|r| r.nll)),
        em_median_sw: median(em.iter().filter_map(|r| r.sw)),
        swm_median_sw: median(swm.iter().filter_map(|r| r.sw)),
    };
    Ok(CompareReport { k: config.k, runs: config.runs, seed: config.seed, em, swm, summary })
}

pub fn median(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median([3.0, 1.0, 2.0].into_iter()), Some(2.0));
        assert_eq!(median([4.0, 1.0, 2.0, 3.0].into_iter()), Some(2.5));
        assert_eq!(median(std::iter::empty()), None);
    }

    #[test]
    fn landscape_rejects_small_grid() {
        assert!(landscape(Scenario::SingleGaussian, 10, 1, 0, 2.0).is_err());
        assert!(Scenario::try_from(3).is_err());
    }

    #[test]
    fn local_minima_counting() {
        let l = Landscape {
            scenario: Scenario::TwoComponents,
            grid: 3,
            axis: vec![0.0, 1.0, 2.0],
            nll: vec![],
            wm: vec![],
        };
        let bowl = [5.0, 4.0, 5.0, 4.0, 1.0, 4.0, 5.0, 4.0, 5.0];
        assert_eq!(l.strict_local_minima(&bowl), 1);
        let flat = [1.0; 9];
        assert_eq!(l.strict_local_minima(&flat), 0);
        assert_eq!(l.argmin(&bowl), vec![1.0, 1.0]);
    }
}
