//! Problem and report files: a versioned JSON schema carrying the matrix
//! set, optional per-row constraints, the initial interval, and the time
//! horizon with either a step count or a target radius.
//!
//! Reports echo the full problem so they are self-contained: re-running
//! the tool on a report's recorded inputs reproduces it byte for byte.
//! Reports carry no timestamps and store numbers at full precision; the
//! human-readable tables are the CLI's job.

use crate::bounds::BoundParams;
use crate::ctmc::{GeneratorInterval, RowSpec};
use crate::error::{Error, Result};
use crate::interval::{IntervalMatrix, IntervalVector, RowPolytope};
use crate::linalg::DenseVector;
use crate::oracle::FuzzReport;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Eq,
    Le,
}

/// One extra linear constraint on a single row of the matrix set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowConstraint {
    pub row: usize,
    pub kind: ConstraintKind,
    pub coefficients: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub dimension: usize,
    /// Row-major lower bounds, dimension^2 entries.
    pub q_lower: Vec<f64>,
    /// Row-major upper bounds, dimension^2 entries.
    pub q_upper: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub row_constraints: Vec<RowConstraint>,
    /// Intersect every row with the zero-sum hyperplane (Markov
    /// generators).
    #[serde(default)]
    pub zero_row_sums: bool,
    /// Declare that off-diagonal lower bounds are nonnegative; validation
    /// fails if the matrices disagree.
    #[serde(default)]
    pub metzler_expected: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_upper: Option<Vec<f64>>,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ProblemFile {
    /// Structural validation; every computation path calls this first.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "schema_version {} unsupported (expected {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        let n = self.dimension;
        if n == 0 {
            return Err(Error::Schema("dimension must be at least 1".into()));
        }
        if self.q_lower.len() != n * n || self.q_upper.len() != n * n {
            return Err(Error::Schema(format!(
                "q_lower/q_upper must each hold dimension^2 = {} entries (got {}, {})",
                n * n,
                self.q_lower.len(),
                self.q_upper.len()
            )));
        }
        match (self.steps, self.tolerance) {
            (Some(_), Some(_)) => {
                return Err(Error::Schema(
                    "exactly one of steps and tolerance may be set, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Schema(
                    "exactly one of steps and tolerance must be set".into(),
                ))
            }
            (Some(0), None) => return Err(Error::Schema("steps must be at least 1".into())),
            (None, Some(t)) if !t.is_finite() || t <= 0.0 => {
                return Err(Error::Schema(format!(
                    "tolerance must be a positive finite number (got {t})"
                )))
            }
            _ => {}
        }
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(Error::Schema(format!(
                "horizon must be a finite nonnegative number (got {})",
                self.horizon
            )));
        }
        match (&self.x0_lower, &self.x0_upper) {
            (Some(lo), Some(hi)) => {
                if lo.len() != n || hi.len() != n {
                    return Err(Error::Schema(format!(
                        "x0_lower/x0_upper must hold {n} entries"
                    )));
                }
            }
            (None, None) => {}
            _ => {
                return Err(Error::Schema(
                    "x0_lower and x0_upper must be given together".into(),
                ))
            }
        }
        for (k, c) in self.row_constraints.iter().enumerate() {
            if c.row >= n {
                return Err(Error::Schema(format!(
                    "row_constraints[{k}]: row {} out of range (dimension {n})",
                    c.row
                )));
            }
            if c.coefficients.len() != n {
                return Err(Error::Schema(format!(
                    "row_constraints[{k}]: expected {n} coefficients, got {}",
                    c.coefficients.len()
                )));
            }
        }
        if self.metzler_expected {
            for i in 0..n {
                for j in 0..n {
                    if i != j && self.q_lower[i * n + j] < 0.0 {
                        return Err(Error::Schema(format!(
                            "metzler_expected, but q_lower[{i}][{j}] = {} is negative",
                            self.q_lower[i * n + j]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn row_specs(&self) -> Vec<RowSpec> {
        let n = self.dimension;
        (0..n)
            .map(|i| {
                let mut eq = Vec::new();
                let mut le = Vec::new();
                for c in self.row_constraints.iter().filter(|c| c.row == i) {
                    match c.kind {
                        ConstraintKind::Eq => eq.push((c.coefficients.clone(), c.rhs)),
                        ConstraintKind::Le => le.push((c.coefficients.clone(), c.rhs)),
                    }
                }
                RowSpec {
                    lo: self.q_lower[i * n..(i + 1) * n].to_vec(),
                    hi: self.q_upper[i * n..(i + 1) * n].to_vec(),
                    eq,
                    le,
                }
            })
            .collect()
    }

    /// The matrix set this file describes, zero-row-sum equality included
    /// when flagged.
    pub fn interval_matrix(&self) -> Result<IntervalMatrix> {
        let specs = self.row_specs();
        if self.zero_row_sums {
            return Ok(GeneratorInterval::from_rows(specs)?.matrix().clone());
        }
        let rows = specs
            .into_iter()
            .enumerate()
            .map(|(i, s)| RowPolytope::new(i, s.lo, s.hi, s.eq, s.le))
            .collect::<Result<Vec<_>>>()?;
        IntervalMatrix::new(rows)
    }

    /// Generator view; requires the zero_row_sums flag.
    pub fn generator(&self) -> Result<GeneratorInterval> {
        if !self.zero_row_sums {
            return Err(Error::Schema(
                "a Markov generator problem needs zero_row_sums = true".into(),
            ));
        }
        GeneratorInterval::from_rows(self.row_specs())
    }

    /// Initial interval, if the file carries one.
    pub fn initial_interval(&self) -> Result<Option<IntervalVector>> {
        match (&self.x0_lower, &self.x0_upper) {
            (Some(lo), Some(hi)) => Ok(Some(IntervalVector::new(
                DenseVector::new(lo.clone())?,
                DenseVector::new(hi.clone())?,
            )?)),
            _ => Ok(None),
        }
    }

    /// Initial interval or a named-parameter error for commands that
    /// cannot run without one.
    pub fn required_initial_interval(&self) -> Result<IntervalVector> {
        self.initial_interval()?.ok_or(Error::MissingParameter {
            kind: "problem file",
            name: "x0_lower/x0_upper",
        })
    }
}

pub fn load_problem(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let problem: ProblemFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })?;
    problem.validate()?;
    Ok(problem)
}

/// Extremal matrices of one step, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessPair {
    pub step: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Machine-readable result of an enclosure run on one initial interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnclosureReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub norm: String,
    pub scheme: String,
    pub sound: bool,
    pub horizon: f64,
    pub steps: u64,
    pub radius: f64,
    pub params: BoundParams,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<Vec<WitnessPair>>,
    pub problem: ProblemFile,
}

/// Machine-readable transition matrix bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionReportFile {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub norm: String,
    pub sound: bool,
    pub horizon: f64,
    pub steps: u64,
    pub radius: f64,
    pub params: BoundParams,
    /// Row-major componentwise bounds on the transition matrix.
    pub p_lower: Vec<f64>,
    pub p_upper: Vec<f64>,
    /// Diagnostics: with zero row sums these bracket one.
    pub row_sums_lower: Vec<f64>,
    pub row_sums_upper: Vec<f64>,
    pub problem: ProblemFile,
}

/// Domination statistics for one verified target vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyTarget {
    /// "x0" or "e<j>" for basis columns.
    pub target: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub radius: f64,
    /// Componentwise extremes over all sampled endpoints.
    pub observed_lower: Vec<f64>,
    pub observed_upper: Vec<f64>,
    pub violations: usize,
    /// Max over components and sides of
    /// distance(observed extreme, inflated bound) / radius; near one when
    /// samples reach the computed bound, greater when the bound is loose.
    pub max_tightness: f64,
}

/// Machine-readable oracle domination check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReportFile {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub samples: usize,
    pub seed: u64,
    pub max_pieces: usize,
    pub sound: bool,
    pub violations: usize,
    pub max_tightness: f64,
    pub targets: Vec<VerifyTarget>,
    pub problem: ProblemFile,
}

/// Machine-readable self-test battery outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SelftestReportFile {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub trials_per_kind: usize,
    pub fuzz: Vec<FuzzReport>,
    pub envelope_checks: usize,
    pub envelope_max_gap: f64,
    pub passed: bool,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_enclosure_report(path: &Path) -> Result<EnclosureReport> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let report: EnclosureReport = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })?;
    report.problem.validate()?;
    Ok(report)
}
