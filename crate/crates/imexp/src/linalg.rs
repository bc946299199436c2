//! Dense vectors and square matrices with the norms and the matrix
//! exponential used throughout the crate.
//!
//! Everything is `Vec<f64>`-backed and row-major. Problem sizes are tiny
//! (a handful of states), so no attempt is made at blocking or BLAS; the
//! value here is exact control over the infinity-norm semantics and the
//! exponential's accuracy.

use crate::error::{Error, Result};

/// Column vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for (i, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: i,
                    col: 0,
                    value: v,
                });
            }
        }
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![0.0; dim],
        }
    }

    /// Standard basis vector e_i.
    pub fn basis(dim: usize, i: usize) -> Self {
        assert!(i < dim, "basis index {i} out of range for dimension {dim}");
        let mut data = vec![0.0; dim];
        data[i] = 1.0;
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.data[i] = v;
    }

    /// Maximum absolute entry. Pairs with the operator norm on matrices.
    pub fn inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// self + c * other.
    pub fn add_scaled(&self, c: f64, other: &DenseVector) -> DenseVector {
        assert_eq!(self.dim(), other.dim(), "add_scaled: dimension mismatch");
        DenseVector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &DenseVector) -> DenseVector {
        self.add_scaled(-1.0, other)
    }

    pub fn component_min(&self, other: &DenseVector) -> DenseVector {
        assert_eq!(self.dim(), other.dim(), "component_min: dimension mismatch");
        DenseVector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.min(*b))
                .collect(),
        }
    }

    pub fn component_max(&self, other: &DenseVector) -> DenseVector {
        assert_eq!(self.dim(), other.dim(), "component_max: dimension mismatch");
        DenseVector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }
}

/// Square real matrix, row-major, finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::NotSquare { rows: 0, cols: 0 });
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                data.push(v);
            }
        }
        Ok(Self { n, data })
    }

    /// Builds from a flat row-major slice of length n*n.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::NotSquare {
                rows: n,
                cols: if n == 0 { 0 } else { data.len() / n },
            });
        }
        for (k, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: k / n,
                    col: k % n,
                    value: v,
                });
            }
        }
        Ok(Self { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "zero-dimensional matrix");
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn set_row(&mut self, i: usize, row: &[f64]) {
        assert_eq!(row.len(), self.n, "set_row: dimension mismatch");
        self.data[i * self.n..(i + 1) * self.n].copy_from_slice(row);
    }

    pub fn column(&self, j: usize) -> DenseVector {
        DenseVector {
            data: (0..self.n).map(|i| self.get(i, j)).collect(),
        }
    }

    pub fn set_column(&mut self, j: usize, col: &DenseVector) {
        assert_eq!(col.dim(), self.n, "set_column: dimension mismatch");
        for i in 0..self.n {
            self.set(i, j, col.get(i));
        }
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    /// Operator norm induced by the vector infinity norm: the maximum
    /// absolute row sum. Zero exactly when the matrix is zero.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(self.n, x.dim(), "mul_vec: dimension mismatch");
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            out[i] = self
                .row(i)
                .iter()
                .zip(x.as_slice())
                .map(|(a, b)| a * b)
                .sum();
        }
        DenseVector { data: out }
    }

    pub fn mul_mat(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n, "mul_mat: dimension mismatch");
        let n = self.n;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n, "add: dimension mismatch");
        DenseMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n, "sub: dimension mismatch");
        DenseMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// I + c * self. The single-step propagation factor.
    pub fn linear_factor(&self, c: f64) -> DenseMatrix {
        let mut out = self.scaled(c);
        for i in 0..self.n {
            out.data[i * self.n + i] += 1.0;
        }
        out
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut k: u64) -> DenseMatrix {
        let mut base = self.clone();
        let mut acc = DenseMatrix::identity(self.n);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_mat(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul_mat(&base);
            }
        }
        acc
    }

    /// Matrix exponential by scaling and squaring with a degree-13 Pade
    /// approximant. The matrix is scaled down to norm at most 1 before the
    /// approximant is applied, which keeps the truncation error far below
    /// roundoff; relative accuracy is around 1e-14 for norms up to 16.
    pub fn exp(&self) -> Result<DenseMatrix> {
        let norm = self.inf_norm();
        // 2^60 leaves the squaring chain numerically meaningful; anything
        // needing more is outside the supported regime.
        let s = if norm <= 1.0 {
            0
        } else {
            let s = norm.log2().ceil() as i64;
            if s > 60 {
                return Err(Error::ScalingCapExceeded { norm });
            }
            s as u32
        };
        let scaled = self.scaled(0.5f64.powi(s as i32));
        let mut result = pade13(&scaled)?;
        for _ in 0..s {
            result = result.mul_mat(&result);
        }
        Ok(result)
    }
}

/// Degree-13 Pade coefficients for the exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade13(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.dim();
    let b = &PADE13;
    let id = DenseMatrix::identity(n);
    let a2 = a.mul_mat(a);
    let a4 = a2.mul_mat(&a2);
    let a6 = a2.mul_mat(&a4);

    // U = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let mut u_inner = a6
        .scaled(b[13])
        .add(&a4.scaled(b[11]))
        .add(&a2.scaled(b[9]));
    u_inner = a6.mul_mat(&u_inner);
    u_inner = u_inner
        .add(&a6.scaled(b[7]))
        .add(&a4.scaled(b[5]))
        .add(&a2.scaled(b[3]))
        .add(&id.scaled(b[1]));
    let u = a.mul_mat(&u_inner);

    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let mut v = a6
        .scaled(b[12])
        .add(&a4.scaled(b[10]))
        .add(&a2.scaled(b[8]));
    v = a6.mul_mat(&v);
    v = v
        .add(&a6.scaled(b[6]))
        .add(&a4.scaled(b[4]))
        .add(&a2.scaled(b[2]))
        .add(&id.scaled(b[0]));

    // exp(A) ~= (V - U)^-1 (V + U)
    solve_matrix(&v.sub(&u), &v.add(&u), "pade denominator")
}

/// Solves A X = B by Gaussian elimination with partial pivoting.
pub fn solve_matrix(
    a: &DenseMatrix,
    b: &DenseMatrix,
    context: &'static str,
) -> Result<DenseMatrix> {
    assert_eq!(a.dim(), b.dim(), "solve_matrix: dimension mismatch");
    let n = a.dim();
    let mut lhs = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut pivot = col;
        let mut best = lhs.get(col, col).abs();
        for r in col + 1..n {
            let v = lhs.get(r, col).abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::SingularSystem { context });
        }
        if pivot != col {
            for j in 0..n {
                let t = lhs.get(col, j);
                lhs.set(col, j, lhs.get(pivot, j));
                lhs.set(pivot, j, t);
                let t = rhs.get(col, j);
                rhs.set(col, j, rhs.get(pivot, j));
                rhs.set(pivot, j, t);
            }
        }
        let d = lhs.get(col, col);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = lhs.get(r, col) / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                let v = lhs.get(r, j) - f * lhs.get(col, j);
                lhs.set(r, j, v);
            }
            for j in 0..n {
                let v = rhs.get(r, j) - f * rhs.get(col, j);
                rhs.set(r, j, v);
            }
        }
    }
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        let d = lhs.get(i, i);
        for j in 0..n {
            out.set(i, j, rhs.get(i, j) / d);
        }
    }
    Ok(out)
}

/// Solves A x = b for a single right-hand side.
pub fn solve_vec(a: &DenseMatrix, b: &DenseVector, context: &'static str) -> Result<DenseVector> {
    assert_eq!(a.dim(), b.dim(), "solve_vec: dimension mismatch");
    let n = a.dim();
    let mut lhs = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut pivot = col;
        let mut best = lhs.get(col, col).abs();
        for r in col + 1..n {
            let v = lhs.get(r, col).abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::SingularSystem { context });
        }
        if pivot != col {
            for j in 0..n {
                let t = lhs.get(col, j);
                lhs.set(col, j, lhs.get(pivot, j));
                lhs.set(pivot, j, t);
            }
            let t = rhs.get(col);
            rhs.set(col, rhs.get(pivot));
            rhs.set(pivot, t);
        }
        let d = lhs.get(col, col);
        for r in col + 1..n {
            let f = lhs.get(r, col) / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                let v = lhs.get(r, j) - f * lhs.get(col, j);
                lhs.set(r, j, v);
            }
            rhs.set(r, rhs.get(r) - f * rhs.get(col));
        }
    }
    let mut out = DenseVector::zeros(n);
    for i in (0..n).rev() {
        let mut acc = rhs.get(i);
        for j in i + 1..n {
            acc -= lhs.get(i, j) * out.get(j);
        }
        out.set(i, acc / lhs.get(i, i));
    }
    Ok(out)
}
