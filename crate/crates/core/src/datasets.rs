//! Synthetic generators and headerless CSV ingestion.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution as _, Normal};

use crate::error::{Error, Result};
use crate::gmm::{sample, Dataset, GmmModel};
use crate::rng::rng_from_seed;

pub const RING_CENTER: (f64, f64) = (-2.0, 0.0);
pub const RING_RADIUS: f64 = 1.0;
pub const SQUARE_CENTER: (f64, f64) = (2.0, 0.0);
pub const SQUARE_SIDE: f64 = 2.0;
pub const LINE_ENDS: ((f64, f64), (f64, f64)) = ((-1.0, 0.0), (1.0, 0.0));
pub const DEFAULT_NOISE: f64 = 0.05;

/// Ring (left), square outline (right) and the segment joining them.
///
/// Each shape gets `n / 3` points with the remainder going to the ring; rows
/// are ordered ring, square, line. Every coordinate receives Gaussian noise
/// with standard deviation `noise`.
pub fn gen_ring_square_line(n: usize, seed: u64, noise: f64) -> Result<Dataset> {
    if n < 3 {
        return Err(Error::arg(format!("ring-square-line needs n >= 3, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::arg("noise must be a non-negative number"));
    }
    let per = n / 3;
    let n_ring = n - 2 * per;
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(2 * n);

    for _ in 0..n_ring {
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        values.push(RING_CENTER.0 + RING_RADIUS * a.cos());
        values.push(RING_CENTER.1 + RING_RADIUS * a.sin());
    }
    let half = SQUARE_SIDE / 2.0;
    for _ in 0..per {
        let u = rng.random_range(0.0..4.0 * SQUARE_SIDE);
        let side = (u / SQUARE_SIDE).floor().min(3.0) as u8;
        let s = u - side as f64 * SQUARE_SIDE - half;
        let (x, y) = match side {
            0 => (s, -half),
            1 => (half, s),
            2 => (-s, half),
            _ => (-half, -s),
        };
        values.push(SQUARE_CENTER.0 + x);
        values.push(SQUARE_CENTER.1 + y);
    }
    let ((x0, y0), (x1, y1)) = LINE_ENDS;
    for _ in 0..per {
        let u: f64 = rng.random();
        values.push(x0 + u * (x1 - x0));
        values.push(y0 + u * (y1 - y0));
    }
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).map_err(|e| Error::arg(e.to_string()))?;
        for v in values.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Dataset::new(2, values, Some(format!("ring-square-line(n={n},seed={seed},noise={noise})")))
}

/// Samples from a mixture; see [`crate::gmm::sample`].
pub fn gen_gmm_samples(model: &GmmModel, n: usize, seed: u64) -> Result<Dataset> {
    sample(model, n, seed)
}

/// Parses headerless CSV: one sample per line, comma-separated floats.
/// Blank lines are skipped.
pub fn parse_csv(text: &str, label: Option<String>) -> Result<Dataset> {
    let mut dim = None;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for cell in line.split(',') {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: line_no, message: format!("non-finite value '{cell}'") });
            }
            values.push(v);
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("row has {count} fields, expected {d}"),
                })
            }
            _ => {}
        }
    }
    let dim = dim.ok_or(Error::Parse { line: 0, message: "file contains no samples".into() })?;
    Dataset::new(dim, values, label)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, Some(path.display().to_string()))
}

pub fn to_csv(data: &Dataset) -> String {
    let mut out = String::with_capacity(data.values().len() * 20);
    for row in data.rows() {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            // shortest representation that parses back to the same f64
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_csv(data))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_geometry_without_noise() {
        let data = gen_ring_square_line(3001, 4, 0.0).unwrap();
        assert_eq!(data.len(), 3001);
        let per = 1000;
        let n_ring = 1001;
        for (i, r) in data.rows().enumerate() {
            let (x, y) = (r[0], r[1]);
            if i < n_ring {
                let dist = ((x - RING_CENTER.0).powi(2) + (y - RING_CENTER.1).powi(2)).sqrt();
                assert!((dist - RING_RADIUS).abs() < 1e-12);
            } else if i < n_ring + per {
                let (dx, dy) = ((x - SQUARE_CENTER.0).abs(), (y - SQUARE_CENTER.1).abs());
                let on_edge = ((dx - 1.0).abs() < 1e-12 && dy <= 1.0 + 1e-12)
                    || ((dy - 1.0).abs() < 1e-12 && dx <= 1.0 + 1e-12);
                assert!(on_edge, "({x}, {y}) not on square");
            } else {
                assert_eq!(y, 0.0);
                assert!((-1.0..=1.0).contains(&x));
            }
        }
    }

    #[test]
    fn bounding_box() {
        let data = gen_ring_square_line(30_000, 1, 0.0).unwrap();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for r in data.rows() {
            for c in 0..2 {
                lo[c] = lo[c].min(r[c]);
                hi[c] = hi[c].max(r[c]);
            }
        }
        assert!(lo[0] >= -3.0 - 1e-12 && hi[0] <= 3.0 + 1e-12);
        assert!(lo[1] >= -1.0 - 1e-12 && hi[1] <= 1.0 + 1e-12);
        // the square's edges are hit exactly and the ring comes within 1e-3
        assert!(hi[0] == 3.0 && lo[1] == -1.0 && hi[1] == 1.0);
        assert!(lo[0] < -3.0 + 1e-3);
    }

    #[test]
    fn generator_validation_and_seeds() {
        assert!(gen_ring_square_line(2, 0, 0.05).is_err());
        assert!(gen_ring_square_line(10, 0, -1.0).is_err());
        let a = gen_ring_square_line(99, 5, 0.05).unwrap();
        assert_eq!(a, gen_ring_square_line(99, 5, 0.05).unwrap());
        for s in 0..10u64 {
            let x = gen_ring_square_line(30, s, 0.05).unwrap();
            let y = gen_ring_square_line(30, s + 100, 0.05).unwrap();
            assert_ne!(x.row(0), y.row(0));
        }
    }

    #[test]
    fn csv_errors() {
        match parse_csv("1,2,3\n4,5\n", None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_csv("1,2\n3,abc\n", None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_csv("", None).is_err());
        assert!(parse_csv("\n\n", None).is_err());
    }

    #[test]
    fn csv_roundtrip_5x3() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![i as f64 * 0.1, -1.0 / (i as f64 + 3.0), 1e-17 * i as f64 + 12345.678])
            .collect();
        let data = Dataset::from_rows(&rows, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_csv(&data, &path).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(back.values(), data.values());
    }
}
