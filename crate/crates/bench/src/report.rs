//! Side-by-side comparison of traces at a shared set of pass counts.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::trace::TraceRecord;
use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub passes: f64,
    pub values: Vec<Option<f64>>,
    /// Column label with the smallest suboptimality at this checkpoint.
    pub winner: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub g_star: f64,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

/// Suboptimality at `x`, interpolated linearly in `log(value)` between the
/// neighbouring recorded points (linearly if either is non-positive).
/// `None` outside the recorded range.
pub fn interpolate(points: &[(f64, f64)], x: f64) -> Option<f64> {
    let first = points.first()?;
    let last = points.last()?;
    if x < first.0 || x > last.0 {
        return None;
    }
    let hi = points.partition_point(|p| p.0 < x);
    let (x1, y1) = points[hi];
    if x1 == x || hi == 0 {
        return Some(y1);
    }
    let (x0, y0) = points[hi - 1];
    let t = (x - x0) / (x1 - x0);
    Some(if y0 > 0.0 && y1 > 0.0 {
        (y0.ln() + t * (y1.ln() - y0.ln())).exp()
    } else {
        y0 + t * (y1 - y0)
    })
}

fn label(r: &TraceRecord) -> String {
    format!("{}:{}", r.method, r.seed)
}

pub fn build_report(traces: &[TraceRecord]) -> Result<Report, BenchError> {
    let first = traces
        .first()
        .ok_or_else(|| BenchError::Config("report needs at least one trace".into()))?;
    let g_star = first.g_star;
    for t in traces {
        let tol = 1e-12 * g_star.abs().max(1e-300);
        if (t.g_star - g_star).abs() > tol || t.dataset != first.dataset || t.problem != first.problem {
            return Err(BenchError::Config(format!(
                "traces describe different problems: {} on {} (g* = {:e}) vs {} on {} (g* = {:e})",
                first.problem, first.dataset, g_star, t.problem, t.dataset, t.g_star
            )));
        }
    }
    let mut grid: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.points.iter().map(|p| p.0))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let columns: Vec<String> = traces.iter().map(label).collect();
    let rows = grid
        .into_iter()
        .map(|x| {
            let values: Vec<Option<f64>> =
                traces.iter().map(|t| interpolate(&t.points, x)).collect();
            let winner = values
                .iter()
                .enumerate()
                .filter_map(|(i, v)| v.filter(|v| v.is_finite()).map(|v| (i, v)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| columns[i].clone());
            ReportRow {
                passes: x,
                values,
                winner,
            }
        })
        .collect();
    Ok(Report {
        g_star,
        columns,
        rows,
    })
}

impl Report {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("passes");
        for c in &self.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push_str("\twinner\n");
        for row in &self.rows {
            let _ = write!(out, "{}", row.passes);
            for v in &row.values {
                out.push('\t');
                if let Some(v) = v {
                    let _ = write!(out, "{v:e}");
                }
            }
            out.push('\t');
            out.push_str(row.winner.as_deref().unwrap_or(""));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "g_star": self.g_star,
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| json!({
                "passes": r.passes,
                "values": r.values,
                "winner": r.winner,
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(method: &str, points: Vec<(f64, f64)>) -> TraceRecord {
        TraceRecord {
            dataset: "synthetic:10,2,1,0".into(),
            n: 10,
            d: 2,
            problem: "ridge(lambda_scale=1)".into(),
            lambda: 0.1,
            method: method.into(),
            seed: 0,
            alpha: 1.0,
            l: None,
            m: None,
            g_star: 0.5,
            residual: 0.0,
            budget: 4.0,
            points,
            stream: 0,
        }
    }

    #[test]
    fn single_trace_table_is_its_points() {
        let pts = vec![(0.0, 1.0), (1.0, 0.1), (2.5, 1e-3), (4.0, 1e-6)];
        let r = build_report(&[trace("qsvrg", pts.clone())]).unwrap();
        let got: Vec<(f64, f64)> = r.rows.iter().map(|row| (row.passes, row.values[0].unwrap())).collect();
        assert_eq!(got, pts);
        assert!(r.rows.iter().all(|row| row.winner.as_deref() == Some("qsvrg:0")));
    }

    #[test]
    fn dominating_trace_wins_everywhere() {
        let a = trace("qsvrg", vec![(0.0, 1.0), (2.0, 1e-4), (4.0, 1e-8)]);
        let b = trace("sgd_uniform", vec![(0.0, 2.0), (1.0, 0.5), (3.0, 0.1), (4.0, 0.05)]);
        let r = build_report(&[a, b]).unwrap();
        assert_eq!(r.rows.len(), 5);
        assert!(r.rows.iter().all(|row| row.winner.as_deref() == Some("qsvrg:0")));
        // geometric interpolation at x = 1 between (0, 1) and (2, 1e-4)
        assert!((r.rows[1].values[0].unwrap() - 1e-2).abs() < 1e-15);
        let tsv = r.to_tsv();
        assert!(tsv.starts_with("passes\tqsvrg:0\tsgd_uniform:0\twinner\n"));
        assert_eq!(r.to_json()["rows"].as_array().unwrap().len(), 5);
    }

    #[test]
    fn different_problems_are_rejected() {
        let a = trace("qsvrg", vec![(0.0, 1.0)]);
        let mut b = trace("qsvrg", vec![(0.0, 1.0)]);
        b.g_star = 0.6;
        assert!(build_report(&[a, b]).is_err());
        assert!(build_report(&[]).is_err());
    }

    #[test]
    fn interpolation_edges() {
        let pts = [(1.0, 4.0), (3.0, 0.0)];
        assert_eq!(interpolate(&pts, 0.5), None);
        assert_eq!(interpolate(&pts, 3.5), None);
        assert_eq!(interpolate(&pts, 2.0), Some(2.0));
        assert_eq!(interpolate(&pts, 1.0), Some(4.0));
    }
}
