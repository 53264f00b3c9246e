use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// One logged iteration of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Sliced-Wasserstein objective estimate (SWM) or NLL (EM).
    pub objective: f64,
    pub nll: f64,
    /// A covariance eigenvalue was clipped to the floor in this iteration.
    pub floored: bool,
    /// A component was reinitialized in this iteration (EM only).
    pub reinitialized: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitTrace {
    pub records: Vec<TraceRecord>,
}

impl FitTrace {
    pub fn push(&mut self, iteration: usize, objective: f64, nll: f64) {
        self.records.push(TraceRecord {
            iteration,
            objective,
            nll,
            floored: false,
            reinitialized: false,
        });
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV with header `iteration,objective,nll`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,nll\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{}\n", r.iteration, r.objective, r.nll));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}
