//! Dataset and problem specifications, and problem construction.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qsvrg_core::datasets::{load_csv, preprocess, synthetic_problem};
use qsvrg_core::oracles::{least_squares_oracle, ridge_oracle, DesignMatrix, LdaModel};
use qsvrg_core::quadratic::reference_minimizer;
use qsvrg_core::{ReferenceSolution, StochasticOracle};

use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Csv(PathBuf),
    Synthetic {
        n: usize,
        d: usize,
        kappa: f64,
        seed: u64,
    },
}

impl DatasetSpec {
    /// Parses `n,d,kappa` or `n,d,kappa,seed`.
    pub fn synthetic(spec: &str) -> Result<Self, BenchError> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        let err = || {
            BenchError::Config(format!(
                "synthetic spec must be 'n,d,kappa' or 'n,d,kappa,seed', got '{spec}'"
            ))
        };
        if !(3..=4).contains(&parts.len()) {
            return Err(err());
        }
        let n = parts[0].parse().map_err(|_| err())?;
        let d = parts[1].parse().map_err(|_| err())?;
        let kappa = parts[2].parse().map_err(|_| err())?;
        let seed = match parts.get(3) {
            Some(s) => s.parse().map_err(|_| err())?,
            None => 0,
        };
        Ok(DatasetSpec::Synthetic { n, d, kappa, seed })
    }
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSpec::Csv(p) => write!(f, "{}", p.display()),
            DatasetSpec::Synthetic { n, d, kappa, seed } => {
                write!(f, "synthetic:{n},{d},{kappa},{seed}")
            }
        }
    }
}

impl FromStr for DatasetSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.strip_prefix("synthetic:") {
            Some(rest) => DatasetSpec::synthetic(rest),
            None if s.is_empty() => Err(BenchError::Config("empty dataset path".into())),
            None => Ok(DatasetSpec::Csv(PathBuf::from(s))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    LeastSquares,
    /// `λ = lambda_scale · L̄/n`
    Ridge { lambda_scale: f64 },
    /// Discriminant direction for `class`; `λ = lambda_scale · tr(Σ̂)/n`.
    Lda { class: usize, lambda_scale: f64 },
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::LeastSquares => f.write_str("least_squares"),
            ProblemSpec::Ridge { lambda_scale } => write!(f, "ridge(lambda_scale={lambda_scale})"),
            ProblemSpec::Lda {
                class,
                lambda_scale,
            } if *lambda_scale == 0.0 => write!(f, "lda(class={class})"),
            ProblemSpec::Lda {
                class,
                lambda_scale,
            } => write!(f, "lda(class={class},lambda_scale={lambda_scale})"),
        }
    }
}

impl FromStr for ProblemSpec {
    type Err = BenchError;

    /// Accepts `least_squares`, `ridge`, `lda` and the parameterized forms
    /// `ridge(lambda_scale=s)` and `lda(class=k[,lambda_scale=s])`.
    fn from_str(s: &str) -> Result<Self, BenchError> {
        let err = |msg: String| BenchError::Config(format!("problem '{s}': {msg}"));
        let (name, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], &s[i + 1..s.len() - 1]),
            Some(_) => return Err(err("unbalanced parentheses".into())),
            None => (s, ""),
        };
        let mut lambda_scale = None;
        let mut class = None;
        for kv in args.split(',').map(str::trim).filter(|a| !a.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got '{kv}'")))?;
            match k.trim() {
                "lambda_scale" => {
                    lambda_scale = Some(
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| err(format!("bad lambda_scale '{v}'")))?,
                    )
                }
                "class" => {
                    class = Some(
                        v.trim()
                            .parse::<usize>()
                            .map_err(|_| err(format!("bad class '{v}'")))?,
                    )
                }
                other => return Err(err(format!("unknown parameter '{other}'"))),
            }
        }
        match name.trim() {
            "least_squares" | "ls" if lambda_scale.is_none() && class.is_none() => {
                Ok(ProblemSpec::LeastSquares)
            }
            "ridge" if class.is_none() => Ok(ProblemSpec::Ridge {
                lambda_scale: lambda_scale.unwrap_or(1.0),
            }),
            "lda" => Ok(ProblemSpec::Lda {
                class: class.unwrap_or(1),
                lambda_scale: lambda_scale.unwrap_or(0.0),
            }),
            "least_squares" | "ls" | "ridge" => Err(err("unexpected parameter".into())),
            other => Err(err(format!(
                "unknown problem '{other}' (expected least_squares, ridge or lda)"
            ))),
        }
    }
}

/// A constructed problem with its shared reference solution.
#[derive(Debug, Clone)]
pub struct Problem {
    pub dataset: DatasetSpec,
    pub spec: ProblemSpec,
    pub oracle: StochasticOracle,
    pub reference: ReferenceSolution,
}

fn core(context: &str) -> impl FnOnce(qsvrg_core::Error) -> BenchError + '_ {
    move |e| BenchError::Core {
        context: context.to_string(),
        source: e,
    }
}

/// Features and response: CSV files are preprocessed, synthetic sets are used as is.
/// The second design omits the appended constant column.
fn load(dataset: &DatasetSpec) -> Result<(DesignMatrix, Option<DesignMatrix>, Vec<f64>), BenchError> {
    match dataset {
        DatasetSpec::Csv(path) => {
            let ctx = format!("loading {}", path.display());
            let raw = load_csv(path).map_err(core(&ctx))?;
            let (x, report) = preprocess(&raw).map_err(core(&ctx))?;
            let keep = report.constant_column_index;
            let rows: Vec<Vec<f64>> = x.rows().map(|r| r[..keep].to_vec()).collect();
            let without = DesignMatrix::from_rows(&rows).map_err(core(&ctx))?;
            Ok((x, Some(without), raw.labels))
        }
        DatasetSpec::Synthetic { n, d, kappa, seed } => {
            let (x, y) =
                synthetic_problem(*n, *d, *kappa, *seed).map_err(core("generating synthetic data"))?;
            Ok((x, None, y))
        }
    }
}

/// Maps distinct label values, in increasing order, to classes `1..=K`.
/// A continuous response is split at zero.
fn class_labels(y: &[f64]) -> Vec<usize> {
    let mut distinct: Vec<f64> = y.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() * 2 > y.len() {
        return y.iter().map(|v| if *v > 0.0 { 2 } else { 1 }).collect();
    }
    y.iter()
        .map(|v| distinct.iter().position(|d| d == v).unwrap() + 1)
        .collect()
}

pub fn build_problem(dataset: &DatasetSpec, spec: &ProblemSpec) -> Result<Problem, BenchError> {
    let (x, without_const, y) = load(dataset)?;
    let n = x.n() as f64;
    let oracle = match spec {
        ProblemSpec::LeastSquares => least_squares_oracle(x, y).map_err(core("least squares"))?,
        ProblemSpec::Ridge { lambda_scale } => {
            let lambda = lambda_scale * x.lbar() / n;
            ridge_oracle(x, y, lambda).map_err(core("ridge"))?
        }
        ProblemSpec::Lda {
            class,
            lambda_scale,
        } => {
            let pts_design = without_const.unwrap_or(x);
            let pts: Vec<Vec<f64>> = pts_design.rows().map(<[f64]>::to_vec).collect();
            let model = LdaModel::fit(&pts, &class_labels(&y)).map_err(core("LDA fit"))?;
            let lambda = lambda_scale * model.trace_sigma() / n;
            model.oracle(*class, lambda).map_err(core("LDA"))?
        }
    };
    let reference = reference_minimizer(&oracle).map_err(core("reference solve"))?;
    Ok(Problem {
        dataset: dataset.clone(),
        spec: spec.clone(),
        oracle,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_specs() {
        let s: DatasetSpec = "synthetic:100,10,5".parse().unwrap();
        assert_eq!(
            s,
            DatasetSpec::Synthetic {
                n: 100,
                d: 10,
                kappa: 5.0,
                seed: 0
            }
        );
        assert_eq!(s.to_string().parse::<DatasetSpec>().unwrap(), s);
        assert!("synthetic:1,2".parse::<DatasetSpec>().is_err());
        assert_eq!(
            "data/sonar.csv".parse::<DatasetSpec>().unwrap(),
            DatasetSpec::Csv("data/sonar.csv".into())
        );
    }

    #[test]
    fn problem_specs_round_trip() {
        for s in [
            "least_squares",
            "ridge(lambda_scale=1)",
            "ridge(lambda_scale=0.01)",
            "lda(class=2)",
            "lda(class=1,lambda_scale=0.5)",
        ] {
            let p: ProblemSpec = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert_eq!(
            "ridge".parse::<ProblemSpec>().unwrap(),
            ProblemSpec::Ridge { lambda_scale: 1.0 }
        );
        for bad in ["lasso", "ridge(alpha=1)", "ridge(lambda_scale=x)", "ridge(", "least_squares(class=1)"] {
            assert!(bad.parse::<ProblemSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn labels_to_classes() {
        assert_eq!(class_labels(&[1.0, -1.0, -1.0, 1.0]), vec![2, 1, 1, 2]);
        assert_eq!(class_labels(&[0.3, -0.2, 1.5]), vec![2, 1, 2]);
    }

    #[test]
    fn ridge_lambda_uses_lbar_over_n() {
        let ds = DatasetSpec::Synthetic {
            n: 50,
            d: 4,
            kappa: 3.0,
            seed: 1,
        };
        let p = build_problem(&ds, &ProblemSpec::Ridge { lambda_scale: 0.1 }).unwrap();
        let want = 0.1 * p.oracle.lbar() / 50.0;
        assert!((p.oracle.lambda() - want).abs() < 1e-18);
    }
}
