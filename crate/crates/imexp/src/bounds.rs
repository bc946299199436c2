//! A-priori distance bounds for exponential and linear-factor products
//! over an interval matrix set.
//!
//! All bounds are stated for the operator norm induced by the vector
//! infinity norm and take the set norm M, a grid described by its step
//! count N and largest gap D (normalized to the unit interval), or the
//! parameters of the individual factor inequalities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-count cap for tolerance-driven grid selection.
pub const STEP_CAP: u64 = 1 << 30;

fn check_domain(steps: u64, max_gap: f64, set_norm: f64) {
    assert!(steps >= 1, "at least one step required");
    assert!(
        max_gap.is_finite() && max_gap >= 0.0,
        "max_gap must be finite and nonnegative"
    );
    assert!(
        set_norm.is_finite() && set_norm >= 0.0,
        "set_norm must be finite and nonnegative"
    );
}

/// Distance bound between the product over a grid with `steps` gaps of
/// length at most `max_gap` and the product over any refinement of it:
/// N (D M)^2 e^((1+D) M) (1.5 + 3 e^(D M)). Zero exactly when D M = 0.
pub fn refinement_distance_bound(steps: u64, max_gap: f64, set_norm: f64) -> f64 {
    check_domain(steps, max_gap, set_norm);
    let dm = max_gap * set_norm;
    (steps as f64) * dm * dm * ((1.0 + max_gap) * set_norm).exp() * (1.5 + 3.0 * dm.exp())
}

/// Distance bound between the full exponential set and its grid
/// approximation: twice the refinement bound.
pub fn exp_set_distance_bound(steps: u64, max_gap: f64, set_norm: f64) -> f64 {
    2.0 * refinement_distance_bound(steps, max_gap, set_norm)
}

/// Distance bound between members of the exponential set and extremal
/// products of linear factors (I + h Q) on the same grid:
/// N (D M)^2 (2 e^((1+D) M) (1.5 + 3 e^(D M)) + 0.5 e^M).
pub fn linear_product_bound(steps: u64, max_gap: f64, set_norm: f64) -> f64 {
    check_domain(steps, max_gap, set_norm);
    let dm = max_gap * set_norm;
    let refinement = 2.0 * ((1.0 + max_gap) * set_norm).exp() * (1.5 + 3.0 * dm.exp());
    (steps as f64) * dm * dm * (refinement + 0.5 * set_norm.exp())
}

/// Smallest uniform step count N with
/// linear_product_bound(N, 1/N, set_norm) <= tol.
pub fn choose_steps(set_norm: f64, tol: f64) -> Result<u64> {
    if !set_norm.is_finite() || set_norm < 0.0 {
        return Err(Error::InvalidParameter {
            name: "set_norm",
            value: set_norm,
        });
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "tolerance",
            value: tol,
        });
    }
    if set_norm == 0.0 {
        return Ok(1);
    }
    let fits = |n: u64| linear_product_bound(n, 1.0 / n as f64, set_norm) <= tol;
    // The bound is strictly decreasing in N, so double to bracket and
    // bisect for the smallest admissible step count.
    let mut hi = 1u64;
    while !fits(hi) {
        if hi >= STEP_CAP {
            return Err(Error::ToleranceUnreachable {
                tol,
                norm: set_norm,
                cap: STEP_CAP,
            });
        }
        hi = (hi * 2).min(STEP_CAP);
    }
    let mut lo = hi / 2; // bound(lo) known to fail (or lo = 0)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Parameters of the factor inequalities. Each bound kind reads the
/// subset it needs and rejects absent ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Grid step count N.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// Largest gap D of the (unit-interval) grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gap: Option<f64>,
    /// Smallest gap of the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<f64>,
    /// Norm bound M on the matrix set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set_norm: Option<f64>,
    /// Number of factors n.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor_count: Option<u64>,
    /// Gap bound q of a refining split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sub_gap: Option<f64>,
    /// Pairwise distance d between compared factors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    /// Sum of factor norms in a chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_norms: Option<f64>,
}

/// The distance inequalities underpinning the product bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    /// Compositions of n maps, each pair at distance d, factors bounded
    /// by M: n d M^(n-1).
    Composition,
    /// Powers of two matrices at distance d: n M^(n-1) d.
    MatrixPower,
    /// Scalar remainder e^x - 1 - x for x >= 0: 0.5 M^2 e^M.
    ScalarExp,
    /// Norm growth of the exponential: e^M.
    ExpNorm,
    /// Matrix remainder e^Q - I - Q: 0.5 M^2 e^M.
    LinearOne,
    /// Two-factor remainder e^Q1 e^Q2 - I - Q1 - Q2: M^2 e^M (1.5 + e^M).
    LinearTwo,
    /// Product versus sum: e^Q1 e^Q2 - e^(Q1+Q2): M^2 e^M (1.5 + 3 e^M).
    PairwiseExp,
    /// Exponential chain versus linear chain: (n/2) M^2 e^(sum of norms).
    LinearChain,
    /// Splitting every factor of an n-term chain in two, gaps bounded by
    /// q: n (q M)^2 e^((q+1) M) (1.5 + 3 e^(q M)).
    Refining,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 9] = [
        InequalityKind::Composition,
        InequalityKind::MatrixPower,
        InequalityKind::ScalarExp,
        InequalityKind::ExpNorm,
        InequalityKind::LinearOne,
        InequalityKind::LinearTwo,
        InequalityKind::PairwiseExp,
        InequalityKind::LinearChain,
        InequalityKind::Refining,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InequalityKind::Composition => "composition",
            InequalityKind::MatrixPower => "matrix_power",
            InequalityKind::ScalarExp => "scalar_exp",
            InequalityKind::ExpNorm => "exp_norm",
            InequalityKind::LinearOne => "linear_one",
            InequalityKind::LinearTwo => "linear_two",
            InequalityKind::PairwiseExp => "pairwise_exp",
            InequalityKind::LinearChain => "linear_chain",
            InequalityKind::Refining => "refining",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }
}

fn need_f64(kind: InequalityKind, value: Option<f64>, name: &'static str) -> Result<f64> {
    let v = value.ok_or(Error::MissingParameter {
        kind: kind.name(),
        name,
    })?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidParameter { name, value: v });
    }
    Ok(v)
}

fn need_count(kind: InequalityKind, value: Option<u64>) -> Result<u64> {
    let v = value.ok_or(Error::MissingParameter {
        kind: kind.name(),
        name: "factor_count",
    })?;
    if v == 0 {
        return Err(Error::InvalidParameter {
            name: "factor_count",
            value: 0.0,
        });
    }
    Ok(v)
}

/// Evaluates the right-hand side of one factor inequality.
pub fn inequality_bound(kind: InequalityKind, params: &BoundParams) -> Result<f64> {
    use InequalityKind::*;
    let p = params;
    Ok(match kind {
        Composition | MatrixPower => {
            let n = need_count(kind, p.factor_count)?;
            let d = need_f64(kind, p.distance, "distance")?;
            let m = need_f64(kind, p.set_norm, "set_norm")?;
            (n as f64) * d * m.powi(n as i32 - 1)
        }
        ScalarExp | LinearOne => {
            let m = need_f64(kind, p.set_norm, "set_norm")?;
            0.5 * m * m * m.exp()
        }
        ExpNorm => need_f64(kind, p.set_norm, "set_norm")?.exp(),
        LinearTwo => {
            let m = need_f64(kind, p.set_norm, "set_norm")?;
            m * m * m.exp() * (1.5 + m.exp())
        }
        PairwiseExp => {
            let m = need_f64(kind, p.set_norm, "set_norm")?;
            m * m * m.exp() * (1.5 + 3.0 * m.exp())
        }
        LinearChain => {
            let n = need_count(kind, p.factor_count)?;
            let m = need_f64(kind, p.set_norm, "set_norm")?;
            let s = need_f64(kind, p.sum_norms, "sum_norms")?;
            0.5 * (n as f64) * m * m * s.exp()
        }
        Refining => {
            let n = need_count(kind, p.factor_count)?;
            let q = need_f64(kind, p.sub_gap, "sub_gap")?;
            let m = need_f64(kind, p.set_norm, "set_norm")?;
            let qm = q * m;
            (n as f64) * qm * qm * ((q + 1.0) * m).exp() * (1.5 + 3.0 * qm.exp())
        }
    })
}
