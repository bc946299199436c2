//! Extremal propagation of linear factors (I + h Q) over a time grid.
//!
//! Each step advances the lower trajectory by the componentwise minimum of
//! Q x over the matrix set and the upper trajectory by the maximum, both
//! obtained from per-row linear programs. When every factor I + h Q is
//! entrywise nonnegative (the step condition), this per-step greedy choice
//! attains the exact componentwise extrema over all factor products, and
//! the reported radius bounds the distance to the true reachable interval
//! of x' = Q(t) x. When the condition fails the endpoints are still
//! computed but flagged unsound.

use crate::bounds::{choose_steps, linear_product_bound, BoundParams};
use crate::error::{Error, Result};
use crate::interval::{IntervalMatrix, IntervalVector};
use crate::linalg::DenseMatrix;
use crate::partition::Partition;

/// Name of the norm all bounds are stated in.
pub const NORM_NAME: &str = "linf-operator";
/// Name of the production propagation scheme.
pub const SCHEME_NAME: &str = "linear-factor";

#[derive(Debug, Clone, Copy, Default)]
pub struct PropagationOptions {
    /// Keep the per-step extremal matrices in the report.
    pub record_witnesses: bool,
}

/// Extremal matrices selected at one step.
#[derive(Debug, Clone)]
pub struct StepWitness {
    pub step: usize,
    pub lower: DenseMatrix,
    pub upper: DenseMatrix,
}

/// Result of a propagation run: the endpoint interval, the a-priori
/// distance bound to the true reachable interval, and the parameters the
/// bound was evaluated at (grid stats rescaled to the unit interval, set
/// norm scaled by the horizon).
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub result: IntervalVector,
    pub radius: f64,
    pub params: BoundParams,
    pub sound: bool,
    pub witnesses: Option<Vec<StepWitness>>,
    pub norm: &'static str,
    pub scheme: &'static str,
}

/// True when every factor I + h Q over the set is entrywise nonnegative,
/// judged from the box hull: off-diagonal lower bounds nonnegative and
/// h max_i |lower_ii| at most one.
pub fn step_condition(q: &IntervalMatrix, h: f64) -> bool {
    let n = q.dim();
    let mut max_diag: f64 = 0.0;
    for i in 0..n {
        let lo = q.row(i).lo();
        for j in 0..n {
            if i == j {
                max_diag = max_diag.max(lo[j].abs());
            } else if lo[j] < 0.0 {
                return false;
            }
        }
    }
    h * max_diag <= 1.0
}

/// Propagates the initial interval along `grid` (spanning [0, horizon])
/// with extremal linear factors and attaches the distance bound.
///
/// A non-degenerate initial interval under a failing step condition is
/// rejected: the endpoint recursion is only meaningful for ordered
/// endpoints, which the failing condition cannot guarantee. A degenerate
/// start is propagated anyway and flagged `sound: false`.
pub fn propagate(
    q: &IntervalMatrix,
    x0: &IntervalVector,
    horizon: f64,
    grid: &Partition,
    options: &PropagationOptions,
) -> Result<BoundReport> {
    if q.dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: x0.dim(),
        });
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::BadHorizon(horizon));
    }
    let span_tol = 1e-12 * horizon.max(1.0);
    if grid.first().abs() > span_tol || (grid.last() - horizon).abs() > span_tol {
        return Err(Error::SpanMismatch {
            first: grid.first(),
            last: grid.last(),
            horizon,
        });
    }

    let stats = grid.stats();
    let sound = step_condition(q, stats.max_gap);
    if !sound && !x0.is_degenerate() {
        return Err(Error::MonotonicityViolation {
            reason: format!(
                "step condition fails at gap {:.6e}: a non-degenerate initial interval \
                 cannot be propagated",
                stats.max_gap
            ),
        });
    }

    let set_norm_scaled = horizon * q.set_norm();
    let params = BoundParams {
        steps: Some(stats.pieces as u64),
        max_gap: Some(stats.max_gap / horizon),
        min_gap: Some(stats.min_gap / horizon),
        set_norm: Some(set_norm_scaled),
        ..BoundParams::default()
    };
    let radius = linear_product_bound(
        stats.pieces as u64,
        stats.max_gap / horizon,
        set_norm_scaled,
    ) * x0.magnitude();

    // A single-matrix set on a uniform grid is a plain matrix power;
    // repeated squaring replaces the step loop. Synthesized uniform grids
    // carry rounding that grows linearly with the point count, so the gap
    // tolerance scales with it; the induced factor perturbation is
    // O(eps * pieces * gap * norm), orders below the reported radius.
    let uniform_tol = 1e-12f64.max(8.0 * f64::EPSILON * stats.pieces as f64);
    if q.is_point() && grid.is_uniform(uniform_tol) && !options.record_witnesses {
        let h = (grid.last() - grid.first()) / stats.pieces as f64;
        let power = q.box_lower().linear_factor(h).pow(stats.pieces as u64);
        let lo = power.mul_vec(x0.lower());
        let hi = power.mul_vec(x0.upper());
        let result = IntervalVector::new(lo.component_min(&hi), lo.component_max(&hi))
            .expect("hulled endpoints are ordered");
        return Ok(BoundReport {
            result,
            radius,
            params,
            sound,
            witnesses: None,
            norm: NORM_NAME,
            scheme: SCHEME_NAME,
        });
    }

    let mut x_lo = x0.lower().clone();
    let mut x_hi = x0.upper().clone();
    let mut witnesses = options.record_witnesses.then(Vec::new);
    for (step, gap) in grid.gaps().enumerate() {
        let (v_lo, w_lo) = q.lower_image(&x_lo)?;
        let (v_hi, w_hi) = q.upper_image(&x_hi)?;
        x_lo = x_lo.add_scaled(gap, &v_lo);
        x_hi = x_hi.add_scaled(gap, &v_hi);
        if let Some(ws) = witnesses.as_mut() {
            ws.push(StepWitness {
                step,
                lower: w_lo,
                upper: w_hi,
            });
        }
    }

    // Under the step condition the endpoints stay ordered; the hull only
    // matters for flagged-unsound runs, where the raw pair may cross.
    let result = IntervalVector::new(x_lo.component_min(&x_hi), x_lo.component_max(&x_hi))
        .expect("hulled endpoints are ordered");
    Ok(BoundReport {
        result,
        radius,
        params,
        sound,
        witnesses,
        norm: NORM_NAME,
        scheme: SCHEME_NAME,
    })
}

/// Smallest uniform step count whose reported radius for this start
/// interval is at most `tol`.
pub fn steps_for_tolerance(
    q: &IntervalMatrix,
    x0: &IntervalVector,
    horizon: f64,
    tol: f64,
) -> Result<u64> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "tolerance",
            value: tol,
        });
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::BadHorizon(horizon));
    }
    let magnitude = x0.magnitude();
    if magnitude == 0.0 {
        return Ok(1);
    }
    choose_steps(horizon * q.set_norm(), tol / magnitude)
}

/// Uniform-grid propagation with the step count chosen so the reported
/// radius is at most `tol`.
pub fn refine_until(
    q: &IntervalMatrix,
    x0: &IntervalVector,
    horizon: f64,
    tol: f64,
) -> Result<BoundReport> {
    let steps = steps_for_tolerance(q, x0, horizon, tol)?;
    let grid = Partition::uniform(steps as usize, 0.0, horizon)?;
    let report = propagate(q, x0, horizon, &grid, &PropagationOptions::default())?;
    debug_assert!(report.radius <= tol * (1.0 + 1e-12));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::RowPolytope;
    use crate::linalg::DenseVector;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn three_state() -> IntervalMatrix {
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
        let rows = (0..3)
            .map(|i| {
                RowPolytope::new(
                    i,
                    lo[i].clone(),
                    hi[i].clone(),
                    vec![(vec![1.0, 1.0, 1.0], 0.0)],
                    vec![],
                )
                .unwrap()
            })
            .collect();
        IntervalMatrix::new(rows).unwrap()
    }

    fn basis_interval(n: usize, i: usize) -> IntervalVector {
        IntervalVector::degenerate(DenseVector::basis(n, i))
    }

    #[test]
    fn step_condition_examples() {
        let q = three_state();
        assert!(!step_condition(&q, 1.0));
        assert!(step_condition(&q, 0.0025));
        let zero = IntervalMatrix::point(&DenseMatrix::zeros(2)).unwrap();
        assert!(step_condition(&zero, 1.0));
        // Negative off-diagonal lower bound fails at any gap.
        let lo = DenseMatrix::from_rows(vec![vec![0.0, -0.1], vec![0.0, 0.0]]).unwrap();
        let hi = DenseMatrix::from_rows(vec![vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let q = IntervalMatrix::from_bounds(&lo, &hi).unwrap();
        assert!(!step_condition(&q, 1e-9));
    }

    #[test]
    fn three_state_first_column_bounds() {
        let q = three_state();
        let grid = Partition::uniform(80, 0.0, 0.2).unwrap();
        let report = propagate(
            &q,
            &basis_interval(3, 0),
            0.2,
            &grid,
            &PropagationOptions::default(),
        )
        .unwrap();
        assert!(report.sound);
        let lo = report.result.lower();
        let hi = report.result.upper();
        for (i, want) in [0.3164, 0.1545, 0.0635].iter().enumerate() {
            assert!(
                (lo.get(i) - want).abs() < 5e-4,
                "lower[{i}] = {} vs {want}",
                lo.get(i)
            );
        }
        for (i, want) in [0.4945, 0.2864, 0.1853].iter().enumerate() {
            assert!(
                (hi.get(i) - want).abs() < 5e-4,
                "upper[{i}] = {} vs {want}",
                hi.get(i)
            );
        }
    }

    #[test]
    fn point_set_matches_matrix_exponential() {
        let q_mat = DenseMatrix::from_rows(vec![vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let q = IntervalMatrix::point(&q_mat).unwrap();
        let x0 = basis_interval(2, 0);
        let report = refine_until(&q, &x0, 1.0, 1e-3).unwrap();
        let truth = q_mat.exp().unwrap().mul_vec(&DenseVector::basis(2, 0));
        for i in 0..2 {
            assert!((report.result.lower().get(i) - truth.get(i)).abs() <= report.radius);
            assert!((report.result.upper().get(i) - truth.get(i)).abs() <= report.radius);
        }
        assert!(report.radius <= 1e-3);
    }

    #[test]
    fn fast_and_slow_paths_agree_on_point_sets() {
        let q_mat = DenseMatrix::from_rows(vec![
            vec![-2.0, 1.5, 0.5],
            vec![0.3, -1.0, 0.7],
            vec![0.2, 0.8, -1.0],
        ])
        .unwrap();
        let q = IntervalMatrix::point(&q_mat).unwrap();
        let grid = Partition::uniform(64, 0.0, 0.5).unwrap();
        let x0 = basis_interval(3, 1);
        let fast = propagate(&q, &x0, 0.5, &grid, &PropagationOptions::default()).unwrap();
        let slow = propagate(
            &q,
            &x0,
            0.5,
            &grid,
            &PropagationOptions {
                record_witnesses: true,
            },
        )
        .unwrap();
        for i in 0..3 {
            assert!(
                (fast.result.lower().get(i) - slow.result.lower().get(i)).abs() < 1e-12,
                "fast/slow disagree at {i}"
            );
        }
        assert_eq!(slow.witnesses.as_ref().unwrap().len(), 64);
    }

    #[test]
    fn witnesses_replay_the_trajectory() {
        let q = three_state();
        let grid = Partition::uniform(10, 0.0, 0.2).unwrap();
        let report = propagate(
            &q,
            &basis_interval(3, 0),
            0.2,
            &grid,
            &PropagationOptions {
                record_witnesses: true,
            },
        )
        .unwrap();
        let witnesses = report.witnesses.as_ref().unwrap();
        assert_eq!(witnesses.len(), 10);
        let mut x = DenseVector::basis(3, 0);
        let h = 0.2 / 10.0;
        for w in witnesses {
            assert!(q.contains(&w.lower, 1e-9), "witness escaped the set");
            assert!(q.contains(&w.upper, 1e-9));
            x = w.lower.linear_factor(h).mul_vec(&x);
        }
        for i in 0..3 {
            assert!((x.get(i) - report.result.lower().get(i)).abs() < 1e-9);
        }
    }

    #[test]
    fn unsound_gap_rejected_for_true_intervals() {
        let q = three_state();
        let grid = Partition::uniform(1, 0.0, 1.0).unwrap();
        let x0 = IntervalVector::new(
            DenseVector::new(vec![0.9, 0.0, 0.0]).unwrap(),
            DenseVector::new(vec![1.0, 0.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            propagate(&q, &x0, 1.0, &grid, &PropagationOptions::default()),
            Err(Error::MonotonicityViolation { .. })
        ));
        // Degenerate start: runs, but flagged.
        let report = propagate(
            &q,
            &basis_interval(3, 0),
            1.0,
            &grid,
            &PropagationOptions::default(),
        )
        .unwrap();
        assert!(!report.sound);
    }

    #[test]
    fn radius_shrinks_geometrically_under_dyadic_refinement() {
        let q = three_state();
        let grid = Partition::uniform(10, 0.0, 0.2).unwrap();
        let x0 = basis_interval(3, 0);
        let base = propagate(&q, &x0, 0.2, &grid, &PropagationOptions::default()).unwrap();
        for depth in 1..=3u32 {
            let fine = grid.dyadic_refine(depth).unwrap();
            let refined = propagate(&q, &x0, 0.2, &fine, &PropagationOptions::default()).unwrap();
            let budget = base.radius / (1u64 << depth) as f64;
            assert!(
                refined.radius <= budget * (1.0 + 1e-12),
                "depth {depth}: {} > {budget}",
                refined.radius
            );
        }
    }

    #[test]
    fn chaining_stays_within_summed_radii() {
        let q = three_state();
        let first = Partition::uniform(40, 0.0, 0.1).unwrap();
        let x0 = basis_interval(3, 0);
        let leg1 = propagate(&q, &x0, 0.1, &first, &PropagationOptions::default()).unwrap();
        let leg2 = propagate(
            &q,
            &leg1.result,
            0.1,
            &first,
            &PropagationOptions::default(),
        )
        .unwrap();

        let direct_grid = Partition::uniform(80, 0.0, 0.2).unwrap();
        let direct = propagate(&q, &x0, 0.2, &direct_grid, &PropagationOptions::default()).unwrap();

        let slack = leg1.radius + leg2.radius + 1e-12;
        for i in 0..3 {
            let chained = leg2.result.lower().get(i);
            let straight = direct.result.lower().get(i);
            assert!(
                straight >= chained - slack,
                "component {i}: direct {straight} below chained {chained} - slack"
            );
            assert!(
                direct.result.upper().get(i) <= leg2.result.upper().get(i) + slack,
                "component {i} upper"
            );
        }
    }

    #[test]
    fn zero_initial_vector_has_zero_radius() {
        let q = three_state();
        let x0 = IntervalVector::degenerate(DenseVector::zeros(3));
        let report = refine_until(&q, &x0, 0.2, 1e-6).unwrap();
        assert_eq!(report.radius, 0.0);
        assert_eq!(report.result.lower().inf_norm(), 0.0);
    }

    #[test]
    fn grid_and_dimension_validation() {
        let q = three_state();
        let x0 = basis_interval(3, 0);
        let grid = Partition::uniform(10, 0.0, 0.3).unwrap();
        assert!(matches!(
            propagate(&q, &x0, 0.2, &grid, &PropagationOptions::default()),
            Err(Error::SpanMismatch { .. })
        ));
        let bad_x = basis_interval(2, 0);
        let grid = Partition::uniform(10, 0.0, 0.2).unwrap();
        assert!(matches!(
            propagate(&q, &bad_x, 0.2, &grid, &PropagationOptions::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            propagate(&q, &x0, -1.0, &grid, &PropagationOptions::default()),
            Err(Error::BadHorizon(_))
        ));
        assert!(refine_until(&q, &x0, 0.2, 0.0).is_err());
    }

    #[test]
    fn soundness_on_random_metzler_sets() {
        // Random Metzler interval sets, short horizons, verified against
        // constant-matrix trajectories e^{t Q} x0 for sampled members.
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..25 {
            let n = rng.gen_range(2..=4);
            let mut rows = Vec::new();
            for i in 0..n {
                let mut lo = vec![0.0; n];
                let mut hi = vec![0.0; n];
                for j in 0..n {
                    if i == j {
                        let a: f64 = rng.gen_range(-3.0..-0.5);
                        let b: f64 = rng.gen_range(-3.0..-0.5);
                        lo[j] = a.min(b);
                        hi[j] = a.max(b);
                    } else {
                        let a: f64 = rng.gen_range(0.0..2.0);
                        let b: f64 = rng.gen_range(0.0..2.0);
                        lo[j] = a.min(b);
                        hi[j] = a.max(b);
                    }
                }
                rows.push(RowPolytope::new(i, lo, hi, vec![], vec![]).unwrap());
            }
            let q = IntervalMatrix::new(rows).unwrap();
            let horizon = rng.gen_range(0.1..0.5);
            let x0 = basis_interval(n, rng.gen_range(0..n));
            let report = refine_until(&q, &x0, horizon, 1e-3).unwrap();
            assert!(report.sound);
            for _ in 0..10 {
                let member = q.sample_member(&mut rng).unwrap();
                let endpoint = member.scaled(horizon).exp().unwrap().mul_vec(x0.lower());
                for i in 0..n {
                    assert!(
                        endpoint.get(i) >= report.result.lower().get(i) - report.radius - 1e-9,
                        "lower violation"
                    );
                    assert!(
                        endpoint.get(i) <= report.result.upper().get(i) + report.radius + 1e-9,
                        "upper violation"
                    );
                }
            }
        }
    }
}
