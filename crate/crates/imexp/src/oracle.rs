//! Independent cross-checks for the propagation engine and the bound
//! calculus: sampled piecewise-constant trajectories, exhaustive
//! vertex-product envelopes on small instances, and randomized soundness
//! trials for every inequality the bound functions encode.
//!
//! Nothing here shares code with the extremal propagation path beyond the
//! basic matrix routines; agreement between the two is evidence, not
//! circularity.

use crate::bounds::{inequality_bound, BoundParams, InequalityKind};
use crate::error::{Error, Result};
use crate::interval::{IntervalMatrix, IntervalVector, RowPolytope};
use crate::linalg::{solve_vec, DenseMatrix, DenseVector};
use crate::partition::Partition;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Largest dimension the exhaustive envelope will attempt.
pub const BRUTE_FORCE_DIM_CAP: usize = 3;
/// Largest grid piece count the exhaustive envelope will attempt.
pub const BRUTE_FORCE_PIECE_CAP: usize = 4;
/// Largest vertex count per row the exhaustive envelope will attempt.
pub const BRUTE_FORCE_VERTEX_CAP: usize = 6;
/// Largest number of end states the exhaustive envelope will enumerate.
pub const BRUTE_FORCE_STATE_CAP: usize = 1_000_000;

/// One sampled piecewise-constant member trajectory of x' = Q(t) x.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    /// Switching grid of the sampled member, spanning [0, horizon].
    pub switch_times: Partition,
    /// The member matrix held on each piece.
    pub matrices: Vec<DenseMatrix>,
    /// Exact endpoint: the product of piecewise matrix exponentials
    /// applied to the start vector.
    pub endpoint: DenseVector,
    pub seed: u64,
}

/// Stateless per-sample seed derivation (splitmix64 finalizer over the
/// base seed and sample index), so sample k is reproducible without
/// drawing the k-1 samples before it.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws one piecewise-constant trajectory: random piece lengths (each
/// between a fifth and a whole normalized share), one sampled member
/// matrix per piece, and the exactly integrated endpoint.
pub fn sample_trajectory(
    q: &IntervalMatrix,
    x0: &DenseVector,
    horizon: f64,
    pieces: usize,
    seed: u64,
) -> Result<TrajectorySample> {
    if q.dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: x0.dim(),
        });
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::BadHorizon(horizon));
    }
    if pieces == 0 {
        return Err(Error::InvalidParameter {
            name: "pieces",
            value: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut points = Vec::with_capacity(pieces + 1);
    points.push(0.0);
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        points.push(if k + 1 == pieces {
            horizon
        } else {
            horizon * acc / total
        });
    }
    let switch_times = Partition::new(points)?;

    let mut matrices = Vec::with_capacity(pieces);
    let mut endpoint = x0.clone();
    for gap in switch_times.gaps() {
        let member = q.sample_member(&mut rng)?;
        endpoint = member.scaled(gap).exp()?.mul_vec(&endpoint);
        matrices.push(member);
    }
    Ok(TrajectorySample {
        switch_times,
        matrices,
        endpoint,
        seed,
    })
}

/// Enumerates the vertices of one row polytope: every feasible basic
/// point from an n-subset of active constraints (equalities always in,
/// the rest drawn from the inequality rows and coordinate bounds).
fn row_vertices(row: &RowPolytope) -> Result<Vec<Vec<f64>>> {
    let n = row.dim();
    let eqs = row.eq_constraints();
    if eqs.len() > n {
        return Err(Error::CapExceeded {
            what: "equality constraints per row",
            got: eqs.len(),
            cap: n,
        });
    }
    // Optional active sets: inequality rows, then each coordinate pinned
    // at its lower or upper bound.
    let mut optional: Vec<(Vec<f64>, f64)> = row.le_constraints().to_vec();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        optional.push((e.clone(), row.lo()[j]));
        optional.push((e, row.hi()[j]));
    }

    let need = n - eqs.len();
    let scale = 1.0 + row.abs_row_sum();
    let tol = 1e-9 * scale;
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut keys: Vec<Vec<i64>> = Vec::new();
    let mut pick = vec![0usize; need];
    let enumerate = |picked: &[usize], out: &mut Vec<Vec<f64>>, seen: &mut Vec<Vec<i64>>| {
        let mut a = DenseMatrix::zeros(n);
        let mut b = vec![0.0; n];
        for (r, (coeffs, rhs)) in eqs.iter().enumerate() {
            a.set_row(r, coeffs);
            b[r] = *rhs;
        }
        for (k, &idx) in picked.iter().enumerate() {
            let (coeffs, rhs) = &optional[idx];
            a.set_row(eqs.len() + k, coeffs);
            b[eqs.len() + k] = *rhs;
        }
        let rhs = DenseVector::new(b).expect("finite rhs");
        let Ok(point) = solve_vec(&a, &rhs, "vertex enumeration") else {
            return;
        };
        if !row.contains(point.as_slice(), tol) {
            return;
        }
        // Snap-key dedupe: coincident basic points from different active
        // sets differ only by rounding.
        let key: Vec<i64> = point
            .as_slice()
            .iter()
            .map(|v| (v / (scale * 1e-12)).round() as i64)
            .collect();
        if !seen.contains(&key) {
            seen.push(key);
            out.push(point.as_slice().to_vec());
        }
    };

    if need == 0 {
        enumerate(&[], &mut vertices, &mut keys);
    } else {
        // Lexicographic subset odometer over the optional pool.
        for (slot, p) in pick.iter_mut().enumerate() {
            *p = slot;
        }
        loop {
            enumerate(&pick, &mut vertices, &mut keys);
            let mut slot = need;
            loop {
                if slot == 0 {
                    break;
                }
                slot -= 1;
                if pick[slot] + (need - slot) < optional.len() {
                    pick[slot] += 1;
                    for s in slot + 1..need {
                        pick[s] = pick[s - 1] + 1;
                    }
                    break;
                }
                if slot == 0 {
                    return finish_vertices(vertices, row);
                }
            }
            if pick[0] + need > optional.len() {
                break;
            }
        }
    }
    finish_vertices(vertices, row)
}

fn finish_vertices(vertices: Vec<Vec<f64>>, _row: &RowPolytope) -> Result<Vec<Vec<f64>>> {
    if vertices.is_empty() {
        return Err(Error::Lp("row polytope has no basic feasible point"));
    }
    Ok(vertices)
}

/// Componentwise envelope of every product of per-piece vertex matrices
/// applied to `x0` along `grid`. Exhaustive and exponential: guarded by
/// dimension, per-row vertex, and total state caps.
///
/// The extremal value of any end component over the full matrix set is
/// attained at such a vertex selection (the map is multilinear in the
/// rows of each factor), so this envelope is exact for the discrete
/// products.
pub fn brute_force_envelope(
    q: &IntervalMatrix,
    x0: &DenseVector,
    grid: &Partition,
) -> Result<IntervalVector> {
    let n = q.dim();
    if n != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.dim(),
        });
    }
    if n > BRUTE_FORCE_DIM_CAP {
        return Err(Error::CapExceeded {
            what: "dimension",
            got: n,
            cap: BRUTE_FORCE_DIM_CAP,
        });
    }
    if grid.pieces() > BRUTE_FORCE_PIECE_CAP {
        return Err(Error::CapExceeded {
            what: "grid pieces",
            got: grid.pieces(),
            cap: BRUTE_FORCE_PIECE_CAP,
        });
    }
    let per_row: Vec<Vec<Vec<f64>>> = q.rows().iter().map(row_vertices).collect::<Result<_>>()?;
    for (i, verts) in per_row.iter().enumerate() {
        if verts.len() > BRUTE_FORCE_VERTEX_CAP {
            return Err(Error::CapExceeded {
                what: "vertices in a row",
                got: verts.len(),
                cap: BRUTE_FORCE_VERTEX_CAP,
            });
        }
        debug_assert!(!verts.is_empty(), "row {i} enumerated no vertices");
    }

    let matrix_count: usize = per_row.iter().map(Vec::len).product();
    let states_end = (matrix_count as f64).powi(grid.pieces() as i32);
    if !(states_end <= BRUTE_FORCE_STATE_CAP as f64) {
        return Err(Error::CapExceeded {
            what: "vertex product states",
            got: states_end.min(usize::MAX as f64) as usize,
            cap: BRUTE_FORCE_STATE_CAP,
        });
    }

    // All vertex matrices, as an odometer over per-row choices.
    let mut vertex_matrices = Vec::with_capacity(matrix_count);
    let mut choice = vec![0usize; n];
    loop {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| per_row[i][choice[i]].clone()).collect();
        vertex_matrices.push(DenseMatrix::from_rows(rows)?);
        let mut i = 0;
        loop {
            if i == n {
                break;
            }
            choice[i] += 1;
            if choice[i] < per_row[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }

    let mut states = vec![x0.clone()];
    for gap in grid.gaps() {
        let mut next = Vec::with_capacity(states.len() * vertex_matrices.len());
        let mut seen: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
        for x in &states {
            for v in &vertex_matrices {
                let y = x.add_scaled(gap, &v.mul_vec(x));
                let key: Vec<u64> = y.as_slice().iter().map(|c| c.to_bits()).collect();
                if seen.insert(key) {
                    next.push(y);
                }
            }
        }
        states = next;
    }

    let mut lo = states[0].clone();
    let mut hi = states[0].clone();
    for x in &states[1..] {
        lo = lo.component_min(x);
        hi = hi.component_max(x);
    }
    IntervalVector::new(lo, hi)
}

/// A random instance inside the exhaustive-envelope caps whose factors
/// all satisfy the step condition: a 2x2 box set, or a 3x3 zero-row-sum
/// rate set (whose row polytopes have at most six vertices), plus a point
/// start vector and a short irregular grid.
pub fn random_monotone_instance(seed: u64) -> Result<(IntervalMatrix, DenseVector, Partition)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if rng.gen_bool(0.5) { 2 } else { 3 };
    let matrix = if n == 2 {
        let mut rows = Vec::new();
        for i in 0..2 {
            let mut lo = vec![0.0; 2];
            let mut hi = vec![0.0; 2];
            for j in 0..2 {
                let (a, b): (f64, f64) = if i == j {
                    (rng.gen_range(-2.5..-0.2), rng.gen_range(-2.5..-0.2))
                } else {
                    (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0))
                };
                lo[j] = a.min(b);
                hi[j] = a.max(b);
            }
            rows.push(RowPolytope::from_box(i, lo, hi)?);
        }
        IntervalMatrix::new(rows)?
    } else {
        // Off-diagonal boxes first; the diagonal range is the negated
        // row-sum range, so the zero-sum plane always cuts the box.
        let mut rows = Vec::new();
        for i in 0..3 {
            let mut lo = vec![0.0; 3];
            let mut hi = vec![0.0; 3];
            let mut sum_lo = 0.0;
            let mut sum_hi = 0.0;
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let a: f64 = rng.gen_range(0.0..1.5);
                let b: f64 = rng.gen_range(0.0..1.5);
                lo[j] = a.min(b);
                hi[j] = a.max(b);
                sum_lo += lo[j];
                sum_hi += hi[j];
            }
            lo[i] = -sum_hi;
            hi[i] = -sum_lo;
            rows.push(RowPolytope::new(
                i,
                lo,
                hi,
                vec![(vec![1.0; 3], 0.0)],
                vec![],
            )?);
        }
        IntervalMatrix::new(rows)?
    };

    let x0 = DenseVector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    // Up to 6^3 vertex matrices in three dimensions: two gaps is the most
    // the state budget allows there.
    let pieces = if n == 2 { rng.gen_range(2..=4usize) } else { 2 };
    let mut points = vec![0.0];
    for _ in 0..pieces {
        let last = *points.last().expect("nonempty");
        points.push(last + rng.gen_range(0.05..0.2));
    }
    let grid = Partition::new(points)?;
    debug_assert!(crate::propagation::step_condition(
        &matrix,
        grid.stats().max_gap
    ));
    Ok((matrix, x0, grid))
}

/// Outcome of randomized soundness trials for one inequality bound.
#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub kind: String,
    pub trials: usize,
    pub violations: usize,
    /// Largest observed lhs / bound ratio; at most one when sound.
    pub max_ratio: f64,
    /// Largest left-hand side seen, for scale.
    pub max_lhs: f64,
}

fn random_matrix<R: Rng>(rng: &mut R, dim: usize, target_norm: f64) -> DenseMatrix {
    let mut rows = vec![vec![0.0; dim]; dim];
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.gen_range(-2.0..2.0);
        }
    }
    let m = DenseMatrix::from_rows(rows).expect("finite entries");
    let norm = m.inf_norm();
    if norm == 0.0 {
        m
    } else {
        m.scaled(target_norm / norm)
    }
}

fn slack(rhs: f64) -> f64 {
    1e-9 * rhs.abs().max(1.0)
}

/// Runs `trials` random instances of the named inequality and counts
/// violations of lhs <= bound (with a relative rounding allowance).
/// Zero violations across all kinds is the empirical soundness check for
/// the bound calculus.
pub fn inequality_fuzz(kind: InequalityKind, trials: usize, seed: u64) -> Result<FuzzReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut max_ratio = 0.0f64;
    let mut max_lhs = 0.0f64;
    for _ in 0..trials {
        let dim = rng.gen_range(2..=4);
        let (lhs, params) = match kind {
            InequalityKind::Composition => {
                let n = rng.gen_range(1..=6);
                let base_norm = rng.gen_range(0.1..2.0);
                let mut prod_a = DenseMatrix::identity(dim);
                let mut prod_b = DenseMatrix::identity(dim);
                let mut m: f64 = 0.0;
                let mut d: f64 = 0.0;
                for _ in 0..n {
                    let a = random_matrix(&mut rng, dim, base_norm);
                    let noise = rng.gen_range(0.0..0.3);
                    let b = a.add(&random_matrix(&mut rng, dim, noise));
                    m = m.max(a.inf_norm()).max(b.inf_norm());
                    d = d.max(a.sub(&b).inf_norm());
                    prod_a = prod_a.mul_mat(&a);
                    prod_b = prod_b.mul_mat(&b);
                }
                let lhs = prod_a.sub(&prod_b).inf_norm();
                let params = BoundParams {
                    factor_count: Some(n as u64),
                    distance: Some(d),
                    set_norm: Some(m),
                    ..BoundParams::default()
                };
                (lhs, params)
            }
            InequalityKind::MatrixPower => {
                let n = rng.gen_range(1..=6);
                let first_norm = rng.gen_range(0.1..2.0);
                let a = random_matrix(&mut rng, dim, first_norm);
                let noise = rng.gen_range(0.0..0.3);
                let b = a.add(&random_matrix(&mut rng, dim, noise));
                let m = a.inf_norm().max(b.inf_norm());
                let d = a.sub(&b).inf_norm();
                let lhs = a.pow(n).sub(&b.pow(n)).inf_norm();
                let params = BoundParams {
                    factor_count: Some(n),
                    distance: Some(d),
                    set_norm: Some(m),
                    ..BoundParams::default()
                };
                (lhs, params)
            }
            InequalityKind::ScalarExp => {
                let x: f64 = rng.gen_range(0.0..4.0);
                let lhs = x.exp() - 1.0 - x;
                let params = BoundParams {
                    set_norm: Some(x),
                    ..BoundParams::default()
                };
                (lhs, params)
            }
            InequalityKind::ExpNorm => {
                let target = rng.gen_range(0.0..4.0);
                let a = random_matrix(&mut rng, dim, target);
                let lhs = a.exp()?.inf_norm();
                let params = BoundParams {
                    set_norm: Some(a.inf_norm()),
                    ..BoundParams::default()
                };
                (lhs, params)
            }
            InequalityKind::LinearOne => {
                let target = rng.gen_range(0.0..4.0);
                let a = random_matrix(&mut rng, dim, target);
                let lhs = a.exp()?.sub(&DenseMatrix::identity(dim)).sub(&a).inf_norm();
                let params = BoundParams {
                    set_norm: Some(a.inf_norm()),
                    ..BoundParams::default()
                };
                (lhs, params)
            }
            InequalityKind::LinearTwo => {
                let na = rng.gen_range(0.1..2.0);
                let nb = rng.gen_range(0.1..2.0);
                let a = random_matrix(&mut rng, dim, na);
                let b = random_matrix(&mut rng, dim, nb);
                let sum = DenseMatrix::identity(dim).add(&a).add(&b);
                let lhs = a.exp()?.mul_mat(&b.exp()?).sub(&sum).inf_norm();
                let params = BoundParams {
                    set_norm: Some(a.inf_norm().max(b.inf_norm())),
                    ..BoundParams::default()
                };
                (lhs, params)
            }
            InequalityKind::PairwiseExp => {
                let na = rng.gen_range(0.1..2.0);
                let nb = rng.gen_range(0.1..2.0);
                let a = random_matrix(&mut rng, dim, na);
                let b = random_matrix(&mut rng, dim, nb);
                let lhs = a
                    .exp()?
                    .mul_mat(&b.exp()?)
                    .sub(&a.add(&b).exp()?)
                    .inf_norm();
                let params = BoundParams {
                    set_norm: Some(a.inf_norm().max(b.inf_norm())),
                    ..BoundParams::default()
                };
                (lhs, params)
            }
            InequalityKind::LinearChain => {
                let n = rng.gen_range(1..=6);
                let mut exp_prod = DenseMatrix::identity(dim);
                let mut lin_prod = DenseMatrix::identity(dim);
                let mut m: f64 = 0.0;
                let mut sum = 0.0;
                for _ in 0..n {
                    let target = rng.gen_range(0.05..1.0);
                    let a = random_matrix(&mut rng, dim, target);
                    m = m.max(a.inf_norm());
                    sum += a.inf_norm();
                    exp_prod = exp_prod.mul_mat(&a.exp()?);
                    lin_prod = lin_prod.mul_mat(&a.linear_factor(1.0));
                }
                let lhs = exp_prod.sub(&lin_prod).inf_norm();
                let params = BoundParams {
                    factor_count: Some(n),
                    set_norm: Some(m),
                    sum_norms: Some(sum),
                    ..BoundParams::default()
                };
                (lhs, params)
            }
            InequalityKind::Refining => {
                // Random convex split of the unit interval into n pieces,
                // each piece split again; the merged matrices are the
                // length-weighted averages of the split pair.
                let n = rng.gen_range(1..=5);
                let weights: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0.2..1.0)).collect();
                let total: f64 = weights.iter().sum();
                let norm_target = rng.gen_range(0.1..2.0);
                let mut split_prod = DenseMatrix::identity(dim);
                let mut merged_prod = DenseMatrix::identity(dim);
                let mut q_gap = 0.0f64;
                let mut m = 0.0f64;
                for i in 0..n {
                    let t1 = weights[2 * i] / total;
                    let t2 = weights[2 * i + 1] / total;
                    q_gap = q_gap.max(t1).max(t2);
                    let n1 = rng.gen_range(0.05..norm_target);
                    let n2 = rng.gen_range(0.05..norm_target);
                    let q1 = random_matrix(&mut rng, dim, n1);
                    let q2 = random_matrix(&mut rng, dim, n2);
                    m = m.max(q1.inf_norm()).max(q2.inf_norm());
                    split_prod = split_prod
                        .mul_mat(&q1.scaled(t1).exp()?)
                        .mul_mat(&q2.scaled(t2).exp()?);
                    let merged = q1.scaled(t1 / (t1 + t2)).add(&q2.scaled(t2 / (t1 + t2)));
                    merged_prod = merged_prod.mul_mat(&merged.scaled(t1 + t2).exp()?);
                }
                let lhs = split_prod.sub(&merged_prod).inf_norm();
                let params = BoundParams {
                    factor_count: Some(n as u64),
                    set_norm: Some(m),
                    sub_gap: Some(q_gap),
                    ..BoundParams::default()
                };
                (lhs, params)
            }
        };
        let rhs = inequality_bound(kind, &params)?;
        max_lhs = max_lhs.max(lhs);
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
        if lhs > rhs + slack(rhs) {
            violations += 1;
        }
    }
    Ok(FuzzReport {
        kind: kind.name().to_string(),
        trials,
        violations,
        max_ratio,
        max_lhs,
    })
}
