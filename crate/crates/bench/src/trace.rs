//! Line-delimited JSON convergence traces with a fixed field order.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::BenchError;

pub const SCHEMA_VERSION: u64 = 1;

/// One (method, seed) run with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub dataset: String,
    pub n: usize,
    pub d: usize,
    pub problem: String,
    pub lambda: f64,
    pub method: String,
    pub seed: u64,
    pub alpha: f64,
    pub l: Option<u64>,
    pub m: Option<u64>,
    pub g_star: f64,
    pub residual: f64,
    /// `(effective passes, suboptimality)`
    pub points: Vec<(f64, f64)>,
    pub budget: f64,
    pub stream: u64,
}

/// 17 significant digits, enough to round-trip any f64.
fn float(out: &mut String, v: f64) {
    if v.is_finite() {
        let _ = write!(out, "{v:.16e}");
    } else {
        out.push_str("null");
    }
}

fn string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

fn opt_int(out: &mut String, v: Option<u64>) {
    match v {
        Some(v) => {
            let _ = write!(out, "{v}");
        }
        None => out.push_str("null"),
    }
}

impl TraceRecord {
    pub fn to_json_line(&self) -> String {
        let mut o = String::with_capacity(256 + 48 * self.points.len());
        let _ = write!(o, "{{\"v\":{SCHEMA_VERSION},\"dataset\":");
        string(&mut o, &self.dataset);
        let _ = write!(o, ",\"n\":{},\"d\":{},\"problem\":", self.n, self.d);
        string(&mut o, &self.problem);
        o.push_str(",\"lambda\":");
        float(&mut o, self.lambda);
        o.push_str(",\"method\":");
        string(&mut o, &self.method);
        let _ = write!(o, ",\"seed\":{},\"alpha\":", self.seed);
        float(&mut o, self.alpha);
        o.push_str(",\"l\":");
        opt_int(&mut o, self.l);
        o.push_str(",\"m\":");
        opt_int(&mut o, self.m);
        o.push_str(",\"g_star\":");
        float(&mut o, self.g_star);
        o.push_str(",\"residual\":");
        float(&mut o, self.residual);
        o.push_str(",\"points\":[");
        for (i, (p, s)) in self.points.iter().enumerate() {
            if i > 0 {
                o.push(',');
            }
            o.push('[');
            float(&mut o, *p);
            o.push(',');
            float(&mut o, *s);
            o.push(']');
        }
        o.push_str("],\"budget\":");
        float(&mut o, self.budget);
        let _ = write!(o, ",\"stream\":{}}}", self.stream);
        o
    }

    pub fn from_json_line(line: &str) -> Result<Self, BenchError> {
        let v: Value = serde_json::from_str(line)
            .map_err(|e| BenchError::Trace(format!("invalid JSON: {e}")))?;
        let obj = v
            .as_object()
            .ok_or_else(|| BenchError::Trace("trace line is not an object".into()))?;
        let field = |k: &str| {
            obj.get(k)
                .ok_or_else(|| BenchError::Trace(format!("missing field '{k}'")))
        };
        let bad = |k: &str| BenchError::Trace(format!("field '{k}' has the wrong type"));
        let get_str = |k: &str| -> Result<String, BenchError> {
            field(k)?.as_str().map(str::to_string).ok_or_else(|| bad(k))
        };
        let get_u64 = |k: &str| -> Result<u64, BenchError> { field(k)?.as_u64().ok_or_else(|| bad(k)) };
        let get_f64 = |k: &str| -> Result<f64, BenchError> {
            let v = field(k)?;
            if v.is_null() {
                return Ok(f64::NAN);
            }
            v.as_f64().ok_or_else(|| bad(k))
        };
        let get_opt = |k: &str| -> Result<Option<u64>, BenchError> {
            let v = field(k)?;
            if v.is_null() {
                Ok(None)
            } else {
                v.as_u64().map(Some).ok_or_else(|| bad(k))
            }
        };

        let version = get_u64("v")?;
        if version != SCHEMA_VERSION {
            return Err(BenchError::Trace(format!(
                "unsupported trace version {version}"
            )));
        }
        let points = field("points")?
            .as_array()
            .ok_or_else(|| bad("points"))?
            .iter()
            .map(|p| {
                let pair = p.as_array().filter(|a| a.len() == 2).ok_or_else(|| bad("points"))?;
                let x = pair[0].as_f64().ok_or_else(|| bad("points"))?;
                let y = if pair[1].is_null() {
                    f64::NAN
                } else {
                    pair[1].as_f64().ok_or_else(|| bad("points"))?
                };
                Ok((x, y))
            })
            .collect::<Result<Vec<_>, BenchError>>()?;
        Ok(TraceRecord {
            dataset: get_str("dataset")?,
            n: get_u64("n")? as usize,
            d: get_u64("d")? as usize,
            problem: get_str("problem")?,
            lambda: get_f64("lambda")?,
            method: get_str("method")?,
            seed: get_u64("seed")?,
            alpha: get_f64("alpha")?,
            l: get_opt("l")?,
            m: get_opt("m")?,
            g_star: get_f64("g_star")?,
            residual: get_f64("residual")?,
            points,
            budget: get_f64("budget")?,
            stream: get_u64("stream")?,
        })
    }
}

pub fn format_traces(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    out
}

pub fn parse_traces(text: &str) -> Result<Vec<TraceRecord>, BenchError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            TraceRecord::from_json_line(l).map_err(|e| BenchError::Trace(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn read_traces(path: &Path) -> Result<Vec<TraceRecord>, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    parse_traces(&text).map_err(|e| BenchError::Trace(format!("{}: {e}", path.display())))
}

pub fn write_traces(path: &Path, records: &[TraceRecord]) -> Result<(), BenchError> {
    std::fs::write(path, format_traces(records))
        .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}
