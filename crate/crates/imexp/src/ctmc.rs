//! Continuous-time Markov chains with set-valued transition rates.
//!
//! A generator set is a box of rate matrices intersected with the
//! zero-row-sum hyperplane in every row (plus any extra per-row linear
//! constraints). Transition matrix bounds come from propagating each basis
//! vector through the extremal linear factors: component i of the
//! propagated e_j brackets entry (i, j) of e^{t Q} over all admissible Q.
//! With zero row sums the factors fix the all-ones vector, so the lower
//! bounds have row sums at most one and the upper bounds at least one.

use crate::bounds::BoundParams;
use crate::error::{Error, Result};
use crate::interval::{IntervalMatrix, IntervalVector, RowPolytope};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::partition::Partition;
use crate::propagation::{propagate, BoundReport, PropagationOptions, NORM_NAME};

/// Bounds and extra constraints for one generator row, before the
/// zero-row-sum equality is appended.
#[derive(Debug, Clone)]
pub struct RowSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
}

/// A set of Markov generators: every member has zero row sums, and the
/// `metzler` flag records whether the box forces nonnegative off-diagonal
/// rates (the condition for every member to be a true jump-rate matrix and
/// for the propagation step condition to hold at small gaps).
#[derive(Debug, Clone)]
pub struct GeneratorInterval {
    matrix: IntervalMatrix,
    metzler: bool,
}

/// How the number of propagation steps is determined.
#[derive(Debug, Clone, Copy)]
pub enum Resolution {
    Steps(u64),
    Tolerance(f64),
}

/// Componentwise transition matrix bounds at one time point.
#[derive(Debug, Clone)]
pub struct TransitionReport {
    pub p_lower: DenseMatrix,
    pub p_upper: DenseMatrix,
    pub radius: f64,
    pub params: BoundParams,
    pub sound: bool,
    pub horizon: f64,
    pub norm: &'static str,
}

impl GeneratorInterval {
    /// Builds the set from row bounds and extra constraints, appending the
    /// zero-row-sum equality to every row. Rows whose constraints admit no
    /// zero-sum point are rejected.
    pub fn from_rows(specs: Vec<RowSpec>) -> Result<Self> {
        let n = specs.len();
        let mut rows = Vec::with_capacity(n);
        for (i, spec) in specs.into_iter().enumerate() {
            let mut eq = spec.eq;
            eq.push((vec![1.0; n], 0.0));
            rows.push(RowPolytope::new(i, spec.lo, spec.hi, eq, spec.le)?);
        }
        let matrix = IntervalMatrix::new(rows)?;
        let metzler = box_metzler(&matrix);
        Ok(GeneratorInterval { matrix, metzler })
    }

    /// Box-only generator set.
    pub fn from_bounds(lo: &DenseMatrix, hi: &DenseMatrix) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch {
                expected: lo.dim(),
                got: hi.dim(),
            });
        }
        let n = lo.dim();
        let specs = (0..n)
            .map(|i| RowSpec {
                lo: lo.row(i).to_vec(),
                hi: hi.row(i).to_vec(),
                eq: vec![],
                le: vec![],
            })
            .collect();
        Self::from_rows(specs)
    }

    pub fn matrix(&self) -> &IntervalMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_metzler(&self) -> bool {
        self.metzler
    }
}

fn box_metzler(matrix: &IntervalMatrix) -> bool {
    let n = matrix.dim();
    (0..n).all(|i| {
        let lo = matrix.row(i).lo();
        (0..n).all(|j| i == j || lo[j] >= 0.0)
    })
}

/// Checks that the box describes a nonempty generator set and returns it.
pub fn validate_generator(lo: &DenseMatrix, hi: &DenseMatrix) -> Result<GeneratorInterval> {
    GeneratorInterval::from_bounds(lo, hi)
}

fn resolve_grid(g: &GeneratorInterval, horizon: f64, how: Resolution) -> Result<Partition> {
    let steps = match how {
        Resolution::Steps(0) => {
            return Err(Error::InvalidParameter {
                name: "steps",
                value: 0.0,
            })
        }
        Resolution::Steps(n) => n,
        Resolution::Tolerance(tol) => {
            if !tol.is_finite() || tol <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: "tolerance",
                    value: tol,
                });
            }
            crate::bounds::choose_steps(horizon * g.matrix.set_norm(), tol)?
        }
    };
    Partition::uniform(steps as usize, 0.0, horizon)
}

/// Componentwise bounds on the transition matrix e^{t Q} over the set.
///
/// Time zero returns the identity exactly. Otherwise each basis vector is
/// propagated along a uniform grid; the shared radius bounds how far every
/// entry can sit from its true extremum.
pub fn transition_bounds(
    g: &GeneratorInterval,
    horizon: f64,
    how: Resolution,
) -> Result<TransitionReport> {
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(Error::BadHorizon(horizon));
    }
    let n = g.dim();
    if horizon == 0.0 {
        return Ok(TransitionReport {
            p_lower: DenseMatrix::identity(n),
            p_upper: DenseMatrix::identity(n),
            radius: 0.0,
            params: BoundParams {
                steps: Some(0),
                set_norm: Some(0.0),
                ..BoundParams::default()
            },
            sound: true,
            horizon,
            norm: NORM_NAME,
        });
    }

    let grid = resolve_grid(g, horizon, how)?;
    let options = PropagationOptions::default();
    let mut p_lower = DenseMatrix::zeros(n);
    let mut p_upper = DenseMatrix::zeros(n);
    let mut shared: Option<(f64, BoundParams, bool)> = None;
    for j in 0..n {
        let e_j = IntervalVector::degenerate(DenseVector::basis(n, j));
        let report = propagate(&g.matrix, &e_j, horizon, &grid, &options)?;
        p_lower.set_column(j, report.result.lower());
        p_upper.set_column(j, report.result.upper());
        shared.get_or_insert((report.radius, report.params.clone(), report.sound));
    }
    let (radius, params, sound) = shared.expect("at least one state");
    Ok(TransitionReport {
        p_lower,
        p_upper,
        radius,
        params,
        sound,
        horizon,
        norm: NORM_NAME,
    })
}

/// Bounds on E[f(X_t) | X_0 = i] for a payoff vector set: propagates the
/// observable through the backward dynamics x' = Q x.
pub fn observable_bounds(
    g: &GeneratorInterval,
    horizon: f64,
    how: Resolution,
    payoff: &IntervalVector,
) -> Result<BoundReport> {
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(Error::BadHorizon(horizon));
    }
    if payoff.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: payoff.dim(),
        });
    }
    if horizon == 0.0 {
        return Ok(BoundReport {
            result: payoff.clone(),
            radius: 0.0,
            params: BoundParams {
                steps: Some(0),
                set_norm: Some(0.0),
                ..BoundParams::default()
            },
            sound: true,
            witnesses: None,
            norm: NORM_NAME,
            scheme: crate::propagation::SCHEME_NAME,
        });
    }
    let grid = resolve_grid(g, horizon, how)?;
    propagate(
        &g.matrix,
        payoff,
        horizon,
        &grid,
        &PropagationOptions::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_state() -> GeneratorInterval {
        let lo = DenseMatrix::from_rows(vec![
            vec![-7.0, 4.0, 0.0],
            vec![2.0, -4.0, 1.0],
            vec![0.0, 3.0, -6.0],
        ])
        .unwrap();
        let hi = DenseMatrix::from_rows(vec![
            vec![-5.0, 5.0, 2.0],
            vec![3.0, -3.0, 2.0],
            vec![1.0, 4.0, -4.0],
        ])
        .unwrap();
        validate_generator(&lo, &hi).unwrap()
    }

    #[test]
    fn three_state_transition_tables() {
        let g = three_state();
        assert!(g.is_metzler());
        let report = transition_bounds(&g, 0.2, Resolution::Steps(80)).unwrap();
        assert!(report.sound);
        let want_lower = [
            [0.3164, 0.3839, 0.0421],
            [0.1545, 0.5826, 0.0927],
            [0.0635, 0.3340, 0.4019],
        ];
        let want_upper = [
            [0.4945, 0.4984, 0.2338],
            [0.2864, 0.6921, 0.2338],
            [0.1853, 0.4432, 0.5323],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (report.p_lower.get(i, j) - want_lower[i][j]).abs() < 5e-4,
                    "lower ({i},{j}) = {}",
                    report.p_lower.get(i, j)
                );
                assert!(
                    (report.p_upper.get(i, j) - want_upper[i][j]).abs() < 5e-4,
                    "upper ({i},{j}) = {}",
                    report.p_upper.get(i, j)
                );
            }
        }
    }

    #[test]
    fn bounds_are_ordered_and_row_sums_bracket_one() {
        let g = three_state();
        let report = transition_bounds(&g, 0.2, Resolution::Steps(80)).unwrap();
        for i in 0..3 {
            let mut lo_sum = 0.0;
            let mut hi_sum = 0.0;
            for j in 0..3 {
                assert!(report.p_lower.get(i, j) <= report.p_upper.get(i, j));
                assert!(report.p_lower.get(i, j) >= 0.0);
                lo_sum += report.p_lower.get(i, j);
                hi_sum += report.p_upper.get(i, j);
            }
            assert!(lo_sum <= 1.0 + 1e-12, "row {i} lower sum {lo_sum}");
            assert!(hi_sum >= 1.0 - 1e-12, "row {i} upper sum {hi_sum}");
        }
    }

    #[test]
    fn degenerate_generator_recovers_matrix_exponential() {
        let q = DenseMatrix::from_rows(vec![
            vec![-2.0, 1.5, 0.5],
            vec![0.4, -1.0, 0.6],
            vec![0.0, 3.0, -3.0],
        ])
        .unwrap();
        let g = validate_generator(&q, &q).unwrap();
        let report = transition_bounds(&g, 0.4, Resolution::Tolerance(1e-4)).unwrap();
        assert!(report.radius <= 1e-4);
        let truth = q.scaled(0.4).exp().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let t = truth.get(i, j);
                assert!((report.p_lower.get(i, j) - t).abs() <= report.radius + 1e-12);
                assert!((report.p_upper.get(i, j) - t).abs() <= report.radius + 1e-12);
            }
        }
    }

    #[test]
    fn time_zero_is_identity() {
        let g = three_state();
        let report = transition_bounds(&g, 0.0, Resolution::Steps(10)).unwrap();
        assert_eq!(report.radius, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(report.p_lower.get(i, j), want);
                assert_eq!(report.p_upper.get(i, j), want);
            }
        }
    }

    #[test]
    fn constant_payoff_is_preserved_exactly() {
        // Zero row sums fix the all-ones vector at every step, including
        // the extremal selections: the equality constraint pins each row
        // image of the ones vector to zero.
        let g = three_state();
        let ones = IntervalVector::degenerate(DenseVector::new(vec![1.0; 3]).unwrap());
        let report = observable_bounds(&g, 0.2, Resolution::Steps(40), &ones).unwrap();
        for i in 0..3 {
            assert!((report.result.lower().get(i) - 1.0).abs() < 1e-12);
            assert!((report.result.upper().get(i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_metzler_box_is_flagged_and_unsound() {
        let lo = DenseMatrix::from_rows(vec![vec![-1.0, -0.5], vec![0.5, -1.0]]).unwrap();
        let hi = DenseMatrix::from_rows(vec![vec![-0.5, 1.0], vec![1.0, -0.5]]).unwrap();
        let g = validate_generator(&lo, &hi).unwrap();
        assert!(!g.is_metzler());
        let report = transition_bounds(&g, 0.1, Resolution::Steps(50)).unwrap();
        assert!(!report.sound);
    }

    #[test]
    fn infeasible_zero_sum_row_is_rejected() {
        // Second row forces strictly positive sums: no generator exists.
        let lo = DenseMatrix::from_rows(vec![vec![-2.0, 1.0], vec![0.5, -0.2]]).unwrap();
        let hi = DenseMatrix::from_rows(vec![vec![-1.0, 2.0], vec![0.8, -0.1]]).unwrap();
        assert!(matches!(
            validate_generator(&lo, &hi),
            Err(Error::EmptyRow { row: 1 })
        ));
    }

    #[test]
    fn extra_row_constraints_tighten_the_bounds() {
        let base = three_state();
        let lo = [
            vec![-7.0, 4.0, 0.0],
            vec![2.0, -4.0, 1.0],
            vec![0.0, 3.0, -6.0],
        ];
        let hi = [
            vec![-5.0, 5.0, 2.0],
            vec![3.0, -3.0, 2.0],
            vec![1.0, 4.0, -4.0],
        ];
        // Pin the first row's rate into state 2 at its midpoint.
        let specs = (0..3)
            .map(|i| RowSpec {
                lo: lo[i].clone(),
                hi: hi[i].clone(),
                eq: if i == 0 {
                    vec![(vec![0.0, 1.0, 0.0], 4.5)]
                } else {
                    vec![]
                },
                le: vec![],
            })
            .collect();
        let tight = GeneratorInterval::from_rows(specs).unwrap();
        let loose = transition_bounds(&base, 0.2, Resolution::Steps(80)).unwrap();
        let narrow = transition_bounds(&tight, 0.2, Resolution::Steps(80)).unwrap();
        let mut strictly = false;
        for i in 0..3 {
            for j in 0..3 {
                assert!(narrow.p_lower.get(i, j) >= loose.p_lower.get(i, j) - 1e-12);
                assert!(narrow.p_upper.get(i, j) <= loose.p_upper.get(i, j) + 1e-12);
                let gap = (narrow.p_lower.get(i, j) - loose.p_lower.get(i, j))
                    + (loose.p_upper.get(i, j) - narrow.p_upper.get(i, j));
                strictly |= gap > 1e-6;
            }
        }
        assert!(strictly, "pinning a rate should shrink some bound");
    }

    #[test]
    fn negative_horizon_rejected() {
        let g = three_state();
        assert!(matches!(
            transition_bounds(&g, -0.1, Resolution::Steps(10)),
            Err(Error::BadHorizon(_))
        ));
    }
}
