//! Dense CSV datasets, column normalization and synthetic ridge problems.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::oracles::DesignMatrix;
use crate::sampling::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    /// Row-major `n × d`.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub name: String,
}

impl RawDataset {
    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn d(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

/// Reads a comma-separated file whose last column is the label.
///
/// A first line that does not parse as numbers is treated as a header.
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&text, &name)
}

pub fn parse_csv(text: &str, name: &str) -> Result<RawDataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        let cells = match cells {
            Ok(c) => c,
            Err(_) if width.is_none() && idx == 0 => {
                width = Some(line.split(',').count());
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-numeric cell ({e})"),
                })
            }
        };
        if let Some(bad) = cells.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("non-finite value in column {}", bad + 1),
            });
        }
        match width {
            Some(w) if w != cells.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {w} columns, found {}", cells.len()),
                })
            }
            _ => width = Some(cells.len()),
        }
        if cells.len() < 2 {
            return Err(Error::Parse {
                line: lineno,
                message: "need at least one feature column and a label".into(),
            });
        }
        let (x, y) = cells.split_at(cells.len() - 1);
        features.push(x.to_vec());
        labels.push(y[0]);
    }
    if features.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "no data rows".into(),
        });
    }
    if features.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "need at least two observations".into(),
        });
    }
    Ok(RawDataset {
        features,
        labels,
        name: name.to_string(),
    })
}

/// Writes `features…,label` rows using shortest round-trip float formatting.
pub fn write_csv(raw: &RawDataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_csv(raw))?;
    Ok(())
}

pub fn format_csv(raw: &RawDataset) -> String {
    let mut out = String::new();
    for (row, y) in raw.features.iter().zip(&raw.labels) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{y}");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessReport {
    /// Column means of the retained raw columns.
    pub means: Vec<f64>,
    /// Population standard deviations of the retained raw columns.
    pub scales: Vec<f64>,
    /// Index of the appended column of ones.
    pub constant_column_index: usize,
    pub dropped_columns: Vec<usize>,
}

/// Centers each column, scales it to unit population standard deviation,
/// drops zero-variance columns and appends a column of ones.
pub fn preprocess(raw: &RawDataset) -> Result<(DesignMatrix, PreprocessReport)> {
    let n = raw.n();
    let d = raw.d();
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let nf = n as f64;
    let mut means = Vec::new();
    let mut scales = Vec::new();
    let mut kept = Vec::new();
    let mut dropped_columns = Vec::new();
    for j in 0..d {
        let mean = raw.features.iter().map(|r| r[j]).sum::<f64>() / nf;
        let var = raw
            .features
            .iter()
            .map(|r| (r[j] - mean).powi(2))
            .sum::<f64>()
            / nf;
        let std = var.sqrt();
        // relative test so that float noise in a constant column counts as zero
        if std == 0.0 || std <= 1e-12 * mean.abs() {
            dropped_columns.push(j);
        } else {
            kept.push(j);
            means.push(mean);
            scales.push(std);
        }
    }
    if kept.is_empty() {
        return Err(Error::InvalidArgument(
            "every feature column has zero variance".into(),
        ));
    }
    let width = kept.len() + 1;
    let mut values = Vec::with_capacity(n * width);
    for row in &raw.features {
        for ((&j, mean), scale) in kept.iter().zip(&means).zip(&scales) {
            values.push((row[j] - mean) / scale);
        }
        values.push(1.0);
    }
    let design = DesignMatrix::new(n, width, values)?;
    Ok((
        design,
        PreprocessReport {
            means,
            scales,
            constant_column_index: width - 1,
            dropped_columns,
        },
    ))
}

/// `λ = s·L̄/n` for `s ∈ {1, 0.1, 0.01}`.
pub fn lambda_grid(design: &DesignMatrix) -> [f64; 3] {
    let base = design.lbar() / design.n() as f64;
    [base, 0.1 * base, 0.01 * base]
}

/// A point set `X = U Σ Vᵀ` with orthonormal `U` (n × d), orthogonal `V` and
/// singular values spaced so that `XᵀX` has condition number `kappa`;
/// scaled so that `L̄ = 1`. `Y = Xθ† + 0.1 ε` with Gaussian `θ†` and `ε`.
pub fn synthetic_problem(
    n: usize,
    d: usize,
    kappa: f64,
    seed: u64,
) -> Result<(DesignMatrix, Vec<f64>)> {
    if d == 0 || n < d {
        return Err(Error::InvalidArgument(format!(
            "synthetic problem needs n >= d >= 1, got n = {n}, d = {d}"
        )));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "condition number must be >= 1, got {kappa}"
        )));
    }
    let mut rng = RngStream::new(seed, 0x5e7_d474);
    let mut gauss = |rows: usize, cols: usize| {
        DMatrix::<f64>::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    };
    let u = gauss(n, d).qr().q();
    let v = gauss(d, d).qr().q();
    let sigma: Vec<f64> = (0..d)
        .map(|j| {
            if d == 1 {
                1.0
            } else {
                kappa.powf(j as f64 / (2.0 * (d - 1) as f64))
            }
        })
        .collect();
    let sum_sq: f64 = sigma.iter().map(|s| s * s).sum();
    let norm = (n as f64 / sum_sq).sqrt();
    let mut us = u;
    for (j, s) in sigma.iter().enumerate() {
        us.column_mut(j).scale_mut(s * norm);
    }
    let x = us * v.transpose();

    let theta: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut values = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = (0..d).map(|j| x[(i, j)]).collect();
        let noise: f64 = StandardNormal.sample(&mut rng);
        y.push(crate::linalg::dot(&row, &theta) + 0.1 * noise);
        values.extend(row);
    }
    Ok((DesignMatrix::new(n, d, values)?, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::least_squares_oracle;
    use crate::quadratic::materialize_hessian;

    #[test]
    fn parse_two_lines() {
        let raw = parse_csv("1.0,2.0,1\n3.0,4.0,-1", "t").unwrap();
        assert_eq!((raw.n(), raw.d()), (2, 2));
        assert_eq!(raw.labels, vec![1.0, -1.0]);
    }

    #[test]
    fn header_is_skipped() {
        let raw = parse_csv("a,b,label\n1,2,1\n3,4,-1\n", "t").unwrap();
        assert_eq!(raw.features, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let ragged = parse_csv("1,2,1\n3,1\n", "t").unwrap_err();
        assert!(matches!(ragged, Error::Parse { line: 2, .. }), "{ragged}");
        let bad = parse_csv("1,2,1\n3,x,1\n", "t").unwrap_err();
        assert!(matches!(bad, Error::Parse { line: 2, .. }));
        let header_ragged = parse_csv("a,b,c\n1,2\n", "t").unwrap_err();
        assert!(matches!(header_ragged, Error::Parse { line: 2, .. }));
        assert!(matches!(parse_csv("", "t"), Err(Error::Parse { .. })));
        assert!(matches!(parse_csv("1,nan,1\n2,2,2", "t"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn csv_round_trip() {
        let raw = parse_csv("0.1,-2.5e-7,1\n3.14159,4,-1\n1e300,0,1\n", "t").unwrap();
        let again = parse_csv(&format_csv(&raw), "t").unwrap();
        assert_eq!(raw, again);
    }

    #[test]
    fn preprocess_examples() {
        let raw = RawDataset {
            features: vec![vec![1.0, 5.0], vec![3.0, 5.0]],
            labels: vec![1.0, -1.0],
            name: "t".into(),
        };
        let (x, report) = preprocess(&raw).unwrap();
        assert_eq!(x.d(), 2);
        assert_eq!(x.row(0), &[-1.0, 1.0]);
        assert_eq!(x.row(1), &[1.0, 1.0]);
        assert_eq!(report.dropped_columns, vec![1]);
        assert_eq!(report.constant_column_index, 1);
        assert_eq!(report.means, vec![2.0]);
        assert_eq!(report.scales, vec![1.0]);

        let all_const = RawDataset {
            features: vec![vec![2.0], vec![2.0]],
            labels: vec![0.0, 1.0],
            name: "t".into(),
        };
        assert!(preprocess(&all_const).is_err());
    }

    #[test]
    fn synthetic_conditioning() {
        let (x, _) = synthetic_problem(30, 3, 1.0, 4).unwrap();
        let o = least_squares_oracle(x, vec![0.0; 30]).unwrap();
        let h = materialize_hessian(&o).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!((h.get(i, j) - want).abs() < 1e-2 / 3.0);
            }
        }
        for kappa in [1.0, 10.0, 100.0] {
            let (x, y) = synthetic_problem(200, 10, kappa, 1).unwrap();
            assert!((x.lbar() - 1.0).abs() < 1e-12);
            let o = least_squares_oracle(x, y).unwrap();
            let ev = materialize_hessian(&o).unwrap().symmetric_eigenvalues();
            let measured = ev[9] / ev[0];
            assert!((measured / kappa - 1.0).abs() < 0.01, "{measured} vs {kappa}");
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = synthetic_problem(50, 5, 20.0, 0).unwrap();
        let b = synthetic_problem(50, 5, 20.0, 0).unwrap();
        let c = synthetic_problem(50, 5, 20.0, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn lambda_grid_scales() {
        let (x, _) = synthetic_problem(100, 4, 5.0, 2).unwrap();
        let g = lambda_grid(&x);
        assert!((g[0] - 0.01).abs() < 1e-14);
        assert!((g[1] - 0.1 * g[0]).abs() < 1e-18 && (g[2] - 0.01 * g[0]).abs() < 1e-18);
    }
}
