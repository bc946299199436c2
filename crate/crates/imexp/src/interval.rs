//! Interval vectors and interval matrices with separately specified rows.
//!
//! An interval matrix here is a compact convex set of square matrices: each
//! row ranges over its own polytope given by entrywise bounds plus optional
//! linear equality and inequality constraints, independently of the other
//! rows. That row independence is what makes componentwise extremization
//! exact: min/max of (Q x)_i over the whole set is a linear program over
//! row i alone.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::simplex::{LpError, LpProblem, Sense};

/// Componentwise interval [lower, upper] of real vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalVector {
    lower: DenseVector,
    upper: DenseVector,
}

impl IntervalVector {
    pub fn new(lower: DenseVector, upper: DenseVector) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch {
                expected: lower.dim(),
                got: upper.dim(),
            });
        }
        for i in 0..lower.dim() {
            if lower.get(i) > upper.get(i) {
                return Err(Error::BoundOrder {
                    index: i,
                    lower: lower.get(i),
                    upper: upper.get(i),
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The interval [x, x].
    pub fn degenerate(x: DenseVector) -> Self {
        Self {
            lower: x.clone(),
            upper: x,
        }
    }

    pub fn lower(&self) -> &DenseVector {
        &self.lower
    }

    pub fn upper(&self) -> &DenseVector {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, x: &DenseVector, tol: f64) -> bool {
        x.dim() == self.dim()
            && (0..self.dim())
                .all(|i| x.get(i) >= self.lower.get(i) - tol && x.get(i) <= self.upper.get(i) + tol)
    }

    /// Largest of max(lower norm, upper norm); the scale the a-priori
    /// distance bound is multiplied by.
    pub fn magnitude(&self) -> f64 {
        self.lower.inf_norm().max(self.upper.inf_norm())
    }
}

/// Feasible set of a single matrix row: an entrywise box intersected with
/// optional equality rows (a, b): a . q = b and inequality rows: a . q <= b.
/// Construction performs a feasibility solve, so a held value is never
/// empty.
#[derive(Debug, Clone)]
pub struct RowPolytope {
    lo: Vec<f64>,
    hi: Vec<f64>,
    eq: Vec<(Vec<f64>, f64)>,
    le: Vec<(Vec<f64>, f64)>,
    witness: Vec<f64>,
}

impl RowPolytope {
    /// `row` only labels errors; the contract is: finite bounds in
    /// order, constraint widths matching, non-empty intersection.
    pub fn new(
        row: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
        eq: Vec<(Vec<f64>, f64)>,
        le: Vec<(Vec<f64>, f64)>,
    ) -> Result<Self> {
        let n = lo.len();
        if n == 0 || hi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: hi.len(),
            });
        }
        for j in 0..n {
            for v in [lo[j], hi[j]] {
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry {
                        row,
                        col: j,
                        value: v,
                    });
                }
            }
            if lo[j] > hi[j] {
                return Err(Error::BoundOrder {
                    index: j,
                    lower: lo[j],
                    upper: hi[j],
                });
            }
        }
        for (coeffs, rhs) in eq.iter().chain(le.iter()) {
            if coeffs.len() != n {
                return Err(Error::BadConstraint {
                    row,
                    expected: n,
                    got: coeffs.len(),
                });
            }
            for (j, c) in coeffs.iter().enumerate() {
                if !c.is_finite() || !rhs.is_finite() {
                    return Err(Error::NonFiniteEntry {
                        row,
                        col: j,
                        value: if c.is_finite() { *rhs } else { *c },
                    });
                }
            }
        }
        let lp = LpProblem {
            lower: lo.clone(),
            upper: hi.clone(),
            eq: eq.clone(),
            le: le.clone(),
        };
        let witness = match lp.feasible_point() {
            Ok(p) => p,
            Err(LpError::Infeasible) => return Err(Error::EmptyRow { row }),
            Err(e) => return Err(Error::Lp(lp_static(e))),
        };
        Ok(Self {
            lo,
            hi,
            eq,
            le,
            witness,
        })
    }

    pub fn from_box(row: usize, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::new(row, lo, hi, vec![], vec![])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn eq_constraints(&self) -> &[(Vec<f64>, f64)] {
        &self.eq
    }

    pub fn le_constraints(&self) -> &[(Vec<f64>, f64)] {
        &self.le
    }

    /// A point found feasible at construction time.
    pub fn witness(&self) -> &[f64] {
        &self.witness
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    fn lp(&self) -> LpProblem {
        LpProblem {
            lower: self.lo.clone(),
            upper: self.hi.clone(),
            eq: self.eq.clone(),
            le: self.le.clone(),
        }
    }

    /// min or max of q . x over the row set, together with an attaining
    /// row (a vertex; deterministic for a fixed input).
    pub fn extremal(&self, x: &DenseVector, sense: Sense) -> Result<(f64, Vec<f64>)> {
        assert_eq!(x.dim(), self.dim(), "extremal: dimension mismatch");
        if self.is_point() {
            let v = self.lo.iter().zip(x.as_slice()).map(|(q, xi)| q * xi).sum();
            return Ok((v, self.lo.clone()));
        }
        let sol = self
            .lp()
            .solve(x.as_slice(), sense)
            .map_err(|e| Error::Lp(lp_static(e)))?;
        Ok((sol.value, sol.point))
    }

    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        if q.len() != self.dim() {
            return false;
        }
        for j in 0..q.len() {
            if q[j] < self.lo[j] - tol || q[j] > self.hi[j] + tol {
                return false;
            }
        }
        for (coeffs, rhs) in &self.eq {
            let v: f64 = coeffs.iter().zip(q).map(|(a, b)| a * b).sum();
            if (v - rhs).abs() > tol {
                return false;
            }
        }
        for (coeffs, rhs) in &self.le {
            let v: f64 = coeffs.iter().zip(q).map(|(a, b)| a * b).sum();
            if v > rhs + tol {
                return false;
            }
        }
        true
    }

    /// Entrywise minimum of q_j over the row set (a linear program per
    /// entry; exact, unlike the box bound `lo`).
    pub fn entry_min(&self, j: usize) -> Result<f64> {
        if self.is_point() {
            return Ok(self.lo[j]);
        }
        let mut c = vec![0.0; self.dim()];
        c[j] = 1.0;
        let sol = self
            .lp()
            .solve(&c, Sense::Min)
            .map_err(|e| Error::Lp(lp_static(e)))?;
        Ok(sol.value)
    }

    /// Sum over entries of max(|lo|, |hi|); the row's contribution to the
    /// set norm. A box relaxation: constraints can only shrink the true
    /// supremum.
    pub fn abs_row_sum(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| a.abs().max(b.abs()))
            .sum()
    }

    /// A random vertex: minimizer of a uniformly random objective.
    pub fn sample_vertex<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let c: Vec<f64> = (0..self.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, point) =
            self.extremal(&DenseVector::new(c).expect("finite objective"), Sense::Min)?;
        Ok(point)
    }

    /// A random interior-ish point: uniform draw from the box projected
    /// onto the feasible set by minimizing the Chebyshev distance.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let n = self.dim();
        let p: Vec<f64> = (0..n)
            .map(|j| {
                if self.hi[j] > self.lo[j] {
                    rng.gen_range(self.lo[j]..self.hi[j])
                } else {
                    self.lo[j]
                }
            })
            .collect();
        if self.contains(&p, 1e-12) {
            return Ok(p);
        }
        // Aux variable t >= |q_j - p_j| for all j; minimize t.
        let span: f64 = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max);
        let mut lower = self.lo.clone();
        let mut upper = self.hi.clone();
        lower.push(0.0);
        upper.push(span.max(1.0) * (n as f64 + 1.0));
        let extend = |rows: &[(Vec<f64>, f64)]| -> Vec<(Vec<f64>, f64)> {
            rows.iter()
                .map(|(c, b)| {
                    let mut c = c.clone();
                    c.push(0.0);
                    (c, *b)
                })
                .collect()
        };
        let eq = extend(&self.eq);
        let mut le = extend(&self.le);
        for j in 0..n {
            let mut c = vec![0.0; n + 1];
            c[j] = 1.0;
            c[n] = -1.0;
            le.push((c.clone(), p[j])); // q_j - t <= p_j
            c[j] = -1.0;
            le.push((c, -p[j])); // -q_j - t <= -p_j
        }
        let mut objective = vec![0.0; n + 1];
        objective[n] = 1.0;
        let sol = LpProblem {
            lower,
            upper,
            eq,
            le,
        }
        .solve(&objective, Sense::Min)
        .map_err(|e| Error::Lp(lp_static(e)))?;
        Ok(sol.point[..n].to_vec())
    }
}

fn lp_static(e: LpError) -> &'static str {
    match e {
        LpError::Infeasible => "row polytope reported infeasible after construction",
        LpError::Unbounded => "unbounded row program over a bounded box",
        LpError::IterationLimit => "simplex iteration limit",
        LpError::Numeric => "singular simplex basis",
    }
}

/// Interval matrix: one independent `RowPolytope` per row.
#[derive(Debug, Clone)]
pub struct IntervalMatrix {
    rows: Vec<RowPolytope>,
}

impl IntervalMatrix {
    pub fn new(rows: Vec<RowPolytope>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for r in &rows {
            if r.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.dim(),
                });
            }
        }
        Ok(Self { rows })
    }

    /// Box interval matrix lo <= Q <= hi, entrywise, no row constraints.
    pub fn from_bounds(lo: &DenseMatrix, hi: &DenseMatrix) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch {
                expected: lo.dim(),
                got: hi.dim(),
            });
        }
        let rows = (0..lo.dim())
            .map(|i| RowPolytope::from_box(i, lo.row(i).to_vec(), hi.row(i).to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    /// The single matrix {Q}.
    pub fn point(q: &DenseMatrix) -> Result<Self> {
        Self::from_bounds(q, q)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &RowPolytope {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[RowPolytope] {
        &self.rows
    }

    pub fn is_point(&self) -> bool {
        self.rows.iter().all(|r| r.is_point())
    }

    /// Entrywise box lower bound as a matrix.
    pub fn box_lower(&self) -> DenseMatrix {
        let rows = self.rows.iter().map(|r| r.lo().to_vec()).collect();
        DenseMatrix::from_rows(rows).expect("validated rows")
    }

    pub fn box_upper(&self) -> DenseMatrix {
        let rows = self.rows.iter().map(|r| r.hi().to_vec()).collect();
        DenseMatrix::from_rows(rows).expect("validated rows")
    }

    /// Supremum of the operator norm over the set, computed from the box
    /// hull: max over rows of sum_j max(|lo_ij|, |hi_ij|).
    pub fn set_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.abs_row_sum())
            .fold(0.0, f64::max)
    }

    /// Componentwise minimum of Q x over the set, with an attaining matrix
    /// assembled from the per-row minimizers.
    pub fn lower_image(&self, x: &DenseVector) -> Result<(DenseVector, DenseMatrix)> {
        self.image(x, Sense::Min)
    }

    /// Componentwise maximum of Q x over the set.
    pub fn upper_image(&self, x: &DenseVector) -> Result<(DenseVector, DenseMatrix)> {
        self.image(x, Sense::Max)
    }

    fn image(&self, x: &DenseVector, sense: Sense) -> Result<(DenseVector, DenseMatrix)> {
        assert_eq!(x.dim(), self.dim(), "image: dimension mismatch");
        let n = self.dim();
        let mut values = DenseVector::zeros(n);
        let mut arg = DenseMatrix::zeros(n);
        for i in 0..n {
            let (v, row) = self.rows[i].extremal(x, sense)?;
            values.set(i, v);
            arg.set_row(i, &row);
        }
        Ok((values, arg))
    }

    /// True when every member of the set is entrywise nonnegative,
    /// established by an exact per-entry minimization.
    pub fn entrywise_nonnegative(&self) -> Result<bool> {
        for row in &self.rows {
            for j in 0..self.dim() {
                if row.entry_min(j)? < -1e-12 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Exact image interval {Q x : Q in set, x in [lower, upper]}.
    ///
    /// For a degenerate input this is [min Q x, max Q x] with no further
    /// assumptions. For a genuine interval the endpoint formula
    /// [min Q lower, max Q upper] requires every member to be entrywise
    /// nonnegative, otherwise the map is not monotone and the formula is
    /// wrong; that case is rejected.
    pub fn interval_image(&self, x: &IntervalVector) -> Result<IntervalVector> {
        if x.is_degenerate() {
            let (lo, _) = self.lower_image(x.lower())?;
            let (hi, _) = self.upper_image(x.lower())?;
            return IntervalVector::new(lo, hi);
        }
        if !self.entrywise_nonnegative()? {
            return Err(Error::MonotonicityViolation {
                reason: "interval image of a non-degenerate interval needs an entrywise \
                         nonnegative matrix set"
                    .into(),
            });
        }
        let (lo, _) = self.lower_image(x.lower())?;
        let (hi, _) = self.upper_image(x.upper())?;
        IntervalVector::new(lo, hi)
    }

    /// Membership of a full matrix: every row in its row set.
    pub fn contains(&self, q: &DenseMatrix, tol: f64) -> bool {
        q.dim() == self.dim()
            && self
                .rows
                .iter()
                .enumerate()
                .all(|(i, r)| r.contains(q.row(i), tol))
    }

    /// Random member with rows drawn 50/50 from vertices (via a random
    /// objective) and box points projected onto the feasible set.
    pub fn sample_member<R: Rng>(&self, rng: &mut R) -> Result<DenseMatrix> {
        let n = self.dim();
        let mut q = DenseMatrix::zeros(n);
        for i in 0..n {
            let row = if rng.gen_bool(0.5) {
                self.rows[i].sample_vertex(rng)?
            } else {
                self.rows[i].sample_point(rng)?
            };
            q.set_row(i, &row);
        }
        Ok(q)
    }
}
