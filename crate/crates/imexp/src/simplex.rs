//! Dense two-phase simplex for small linear programs with bounded
//! variables, equality rows and inequality rows.
//!
//! The polytopes this crate optimizes over have a handful of variables and
//! constraints, so the solver favors robustness over speed: the basis
//! system is re-solved from scratch every iteration instead of updating a
//! factorization, and Bland's rule (lowest eligible index) picks entering
//! and leaving variables. Bland's rule rules out cycling and, just as
//! important here, makes the returned vertex deterministic.

use crate::linalg::{solve_vec, DenseMatrix, DenseVector};

const RC_TOL: f64 = 1e-10;
const RATIO_TOL: f64 = 1e-11;
const TIE_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;
const MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpError {
    Infeasible,
    /// Cannot happen for box-bounded objectives; kept for completeness.
    Unbounded,
    IterationLimit,
    /// Basis system became numerically singular.
    Numeric,
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::Infeasible => write!(f, "infeasible"),
            LpError::Unbounded => write!(f, "unbounded"),
            LpError::IterationLimit => write!(f, "iteration limit"),
            LpError::Numeric => write!(f, "singular basis"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub point: Vec<f64>,
}

/// min / max of a linear objective over
/// { x : lower <= x <= upper, eq rows hold exactly, le rows hold as <= }.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    q: usize,
    n_struct: usize,
    a: Vec<f64>, // m x q row-major
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
}

impl Tableau {
    fn col(&self, j: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.a[i * self.q + j]).collect()
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
            VarState::Basic(_) => unreachable!("basic variable has no bound value"),
        }
    }

    fn basis_matrix(&self) -> DenseMatrix {
        let mut bm = DenseMatrix::zeros(self.m);
        for (i, &v) in self.basis.iter().enumerate() {
            for r in 0..self.m {
                bm.set(r, i, self.a[r * self.q + v]);
            }
        }
        bm
    }

    fn basic_values(&self) -> Result<Vec<f64>, LpError> {
        if self.m == 0 {
            return Ok(vec![]);
        }
        let mut rhs = self.b.clone();
        for j in 0..self.q {
            if let VarState::Basic(_) = self.state[j] {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                for i in 0..self.m {
                    rhs[i] -= self.a[i * self.q + j] * v;
                }
            }
        }
        let rhs = DenseVector::new(rhs).map_err(|_| LpError::Numeric)?;
        let sol =
            solve_vec(&self.basis_matrix(), &rhs, "simplex basis").map_err(|_| LpError::Numeric)?;
        Ok(sol.as_slice().to_vec())
    }

    fn duals(&self, costs: &[f64]) -> Result<Vec<f64>, LpError> {
        if self.m == 0 {
            return Ok(vec![]);
        }
        let mut bt = DenseMatrix::zeros(self.m);
        for (i, &v) in self.basis.iter().enumerate() {
            for r in 0..self.m {
                bt.set(i, r, self.a[r * self.q + v]);
            }
        }
        let cb = DenseVector::new(self.basis.iter().map(|&v| costs[v]).collect())
            .map_err(|_| LpError::Numeric)?;
        let y = solve_vec(&bt, &cb, "simplex duals").map_err(|_| LpError::Numeric)?;
        Ok(y.as_slice().to_vec())
    }

    /// Runs the simplex loop for the given costs until optimality.
    fn optimize(&mut self, costs: &[f64]) -> Result<(), LpError> {
        for _ in 0..MAX_ITER {
            let xb = self.basic_values()?;
            let y = self.duals(costs)?;

            // Entering variable: lowest index with an improving reduced cost.
            let mut entering = None;
            for j in 0..self.q {
                match self.state[j] {
                    VarState::Basic(_) => continue,
                    _ => {}
                }
                if self.upper[j] - self.lower[j] <= 0.0 {
                    continue; // fixed variable, cannot move
                }
                let col = self.col(j);
                let rc = costs[j] - y.iter().zip(&col).map(|(a, b)| a * b).sum::<f64>();
                let improving = match self.state[j] {
                    VarState::AtLower => rc < -RC_TOL,
                    VarState::AtUpper => rc > RC_TOL,
                    VarState::Basic(_) => false,
                };
                if improving {
                    entering = Some(j);
                    break;
                }
            }
            let e = match entering {
                None => return Ok(()),
                Some(e) => e,
            };
            // dir = +1 when the entering variable moves up from its lower
            // bound, -1 when it moves down from its upper bound.
            let dir: f64 = match self.state[e] {
                VarState::AtLower => 1.0,
                VarState::AtUpper => -1.0,
                VarState::Basic(_) => unreachable!(),
            };

            let d: Vec<f64> = if self.m == 0 {
                vec![]
            } else {
                let col_e = DenseVector::new(self.col(e)).map_err(|_| LpError::Numeric)?;
                solve_vec(&self.basis_matrix(), &col_e, "simplex direction")
                    .map_err(|_| LpError::Numeric)?
                    .as_slice()
                    .to_vec()
            };

            // Ratio test: how far can the entering variable move before a
            // basic variable hits a bound, or it reaches its own other bound.
            let mut best = self.upper[e] - self.lower[e];
            let mut blocker: Option<(usize, bool)> = None; // (row, leaves at upper)
            for i in 0..self.m {
                let rate = -dir * d[i];
                let vi = self.basis[i];
                let candidate = if rate < -RATIO_TOL {
                    Some((((xb[i] - self.lower[vi]) / -rate).max(0.0), false))
                } else if rate > RATIO_TOL && self.upper[vi].is_finite() {
                    Some((((self.upper[vi] - xb[i]) / rate).max(0.0), true))
                } else {
                    None
                };
                let (allowed, at_upper) = match candidate {
                    None => continue,
                    Some(c) => c,
                };
                // Strictly better limits always win; on ties Bland's rule
                // keeps the blocking variable with the lowest index.
                let take = if allowed < best - TIE_TOL {
                    true
                } else if allowed <= best + TIE_TOL {
                    match blocker {
                        None => allowed < best,
                        Some((r, _)) => vi < self.basis[r],
                    }
                } else {
                    false
                };
                if take {
                    best = best.min(allowed);
                    blocker = Some((i, at_upper));
                }
            }

            if best.is_infinite() && blocker.is_none() {
                return Err(LpError::Unbounded);
            }

            match blocker {
                None => {
                    // Bound flip: the entering variable crosses to its other
                    // bound without any basis change.
                    self.state[e] = match self.state[e] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        VarState::Basic(_) => unreachable!(),
                    };
                }
                Some((row, at_upper)) => {
                    let leaving = self.basis[row];
                    self.state[leaving] = if at_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.basis[row] = e;
                    self.state[e] = VarState::Basic(row);
                }
            }
        }
        Err(LpError::IterationLimit)
    }

    /// Current value of every variable.
    fn values(&self) -> Result<Vec<f64>, LpError> {
        let xb = self.basic_values()?;
        let mut out = vec![0.0; self.q];
        for j in 0..self.q {
            out[j] = match self.state[j] {
                VarState::Basic(row) => xb[row],
                _ => self.nonbasic_value(j),
            };
        }
        Ok(out)
    }
}

impl LpProblem {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn build(&self) -> Tableau {
        let n = self.dim();
        assert_eq!(self.upper.len(), n, "bound length mismatch");
        for j in 0..n {
            assert!(
                self.lower[j] <= self.upper[j],
                "variable {j} has crossed bounds"
            );
        }
        let m = self.eq.len() + self.le.len();
        let n_slack = self.le.len();
        let q = n + n_slack + m;
        let mut a = vec![0.0; m * q];
        let mut b = vec![0.0; m];
        for (i, (coeffs, rhs)) in self.eq.iter().chain(self.le.iter()).enumerate() {
            assert_eq!(coeffs.len(), n, "constraint {i} length mismatch");
            a[i * q..i * q + n].copy_from_slice(coeffs);
            b[i] = *rhs;
        }
        for k in 0..n_slack {
            let i = self.eq.len() + k;
            a[i * q + n + k] = 1.0;
        }

        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        lower.extend(std::iter::repeat(0.0).take(n_slack + m));
        upper.extend(std::iter::repeat(f64::INFINITY).take(n_slack + m));

        // Start with every structural variable at its lower bound, slacks at
        // zero, and one basic artificial per row soaking up the residual.
        let mut state = vec![VarState::AtLower; q];
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let mut resid = b[i];
            for j in 0..n {
                resid -= a[i * q + j] * lower[j];
            }
            let art = n + n_slack + i;
            a[i * q + art] = if resid < 0.0 { -1.0 } else { 1.0 };
            state[art] = VarState::Basic(i);
            basis.push(art);
        }

        Tableau {
            m,
            q,
            n_struct: n,
            a,
            b,
            lower,
            upper,
            state,
            basis,
        }
    }

    fn phase1(&self) -> Result<Tableau, LpError> {
        let mut tab = self.build();
        if tab.m == 0 {
            return Ok(tab);
        }
        let mut costs = vec![0.0; tab.q];
        for j in tab.n_struct + self.le.len()..tab.q {
            costs[j] = 1.0;
        }
        tab.optimize(&costs)?;
        let values = tab.values()?;
        let art_sum: f64 = (tab.n_struct + self.le.len()..tab.q)
            .map(|j| values[j])
            .sum();
        if art_sum > FEAS_TOL {
            return Err(LpError::Infeasible);
        }
        // Pin artificials at zero for the second phase.
        for j in tab.n_struct + self.le.len()..tab.q {
            tab.lower[j] = 0.0;
            tab.upper[j] = 0.0;
        }
        Ok(tab)
    }

    /// Any point of the feasible set, or `Infeasible`.
    pub fn feasible_point(&self) -> Result<Vec<f64>, LpError> {
        let tab = self.phase1()?;
        let values = tab.values()?;
        Ok(values[..self.dim()].to_vec())
    }

    pub fn solve(&self, objective: &[f64], sense: Sense) -> Result<LpSolution, LpError> {
        assert_eq!(objective.len(), self.dim(), "objective length mismatch");
        let mut tab = self.phase1()?;
        let mut costs = vec![0.0; tab.q];
        for (j, &c) in objective.iter().enumerate() {
            costs[j] = match sense {
                Sense::Min => c,
                Sense::Max => -c,
            };
        }
        tab.optimize(&costs)?;
        let values = tab.values()?;
        let point = values[..self.dim()].to_vec();
        let value = objective.iter().zip(&point).map(|(c, x)| c * x).sum();
        Ok(LpSolution { value, point })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn box_problem(lower: Vec<f64>, upper: Vec<f64>) -> LpProblem {
        LpProblem {
            lower,
            upper,
            eq: vec![],
            le: vec![],
        }
    }

    #[test]
    fn box_only_extremes() {
        let p = box_problem(vec![-1.0, 2.0], vec![3.0, 5.0]);
        let min = p.solve(&[1.0, 0.0], Sense::Min).unwrap();
        assert_eq!(min.value, -1.0);
        let max = p.solve(&[1.0, -2.0], Sense::Max).unwrap();
        assert_eq!(max.value, 3.0 - 4.0);
        assert_eq!(max.point, vec![3.0, 2.0]);
    }

    #[test]
    fn equality_row_restricts_box() {
        // q in [-7,-5] x [4,5] x [0,2], sum q = 0.
        let p = LpProblem {
            lower: vec![-7.0, 4.0, 0.0],
            upper: vec![-5.0, 5.0, 2.0],
            eq: vec![(vec![1.0, 1.0, 1.0], 0.0)],
            le: vec![],
        };
        let min = p.solve(&[1.0, 0.0, 0.0], Sense::Min).unwrap();
        assert!((min.value + 7.0).abs() < 1e-12);
        assert!((min.point[0] + 7.0).abs() < 1e-12);
        assert!((min.point[1] - 5.0).abs() < 1e-12);
        assert!((min.point[2] - 2.0).abs() < 1e-12);

        let max = p.solve(&[1.0, 0.0, 0.0], Sense::Max).unwrap();
        assert!((max.value + 5.0).abs() < 1e-12);
        let s: f64 = max.point.iter().sum();
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn inequality_rows() {
        // min x + y over [0,1]^2 with x + y >= 1, i.e. -x - y <= -1.
        let p = LpProblem {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            eq: vec![],
            le: vec![(vec![-1.0, -1.0], -1.0)],
        };
        let min = p.solve(&[1.0, 1.0], Sense::Min).unwrap();
        assert!((min.value - 1.0).abs() < 1e-12);
        let max = p.solve(&[1.0, 1.0], Sense::Max).unwrap();
        assert!((max.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let p = LpProblem {
            lower: vec![0.0],
            upper: vec![1.0],
            eq: vec![(vec![1.0], 2.0)],
            le: vec![],
        };
        assert!(matches!(
            p.solve(&[1.0], Sense::Min),
            Err(LpError::Infeasible)
        ));
        assert_eq!(p.feasible_point(), Err(LpError::Infeasible));
    }

    #[test]
    fn feasible_point_satisfies_constraints() {
        let p = LpProblem {
            lower: vec![-1.0, -1.0, -1.0],
            upper: vec![1.0, 1.0, 1.0],
            eq: vec![(vec![1.0, 1.0, 1.0], 0.5)],
            le: vec![(vec![1.0, -1.0, 0.0], 0.3)],
        };
        let x = p.feasible_point().unwrap();
        let s: f64 = x.iter().sum();
        assert!((s - 0.5).abs() < 1e-9);
        assert!(x[0] - x[1] <= 0.3 + 1e-9);
        for v in &x {
            assert!(*v >= -1.0 - 1e-9 && *v <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn fixed_variables_are_respected() {
        let p = LpProblem {
            lower: vec![2.0, 0.0],
            upper: vec![2.0, 1.0],
            eq: vec![],
            le: vec![(vec![1.0, 1.0], 2.5)],
        };
        let max = p.solve(&[1.0, 1.0], Sense::Max).unwrap();
        assert!((max.value - 2.5).abs() < 1e-12);
        assert_eq!(max.point[0], 2.0);
    }

    #[test]
    fn box_minimum_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let n = rng.gen_range(1..=6);
            let mut lower = Vec::new();
            let mut upper = Vec::new();
            for _ in 0..n {
                let a: f64 = rng.gen_range(-5.0..5.0);
                let b: f64 = rng.gen_range(-5.0..5.0);
                lower.push(a.min(b));
                upper.push(a.max(b));
            }
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = box_problem(lower.clone(), upper.clone());
            let got = p.solve(&c, Sense::Min).unwrap();
            let want: f64 = c
                .iter()
                .enumerate()
                .map(|(j, &cj)| {
                    if cj >= 0.0 {
                        cj * lower[j]
                    } else {
                        cj * upper[j]
                    }
                })
                .sum();
            assert!(
                (got.value - want).abs() < 1e-9,
                "box LP value {} vs closed form {want}",
                got.value
            );
        }
    }

    #[test]
    fn deterministic_argmin() {
        let p = LpProblem {
            lower: vec![-7.0, 4.0, 0.0],
            upper: vec![-5.0, 5.0, 2.0],
            eq: vec![(vec![1.0, 1.0, 1.0], 0.0)],
            le: vec![],
        };
        let first = p.solve(&[0.0, 1.0, -1.0], Sense::Min).unwrap();
        for _ in 0..10 {
            let again = p.solve(&[0.0, 1.0, -1.0], Sense::Min).unwrap();
            assert_eq!(first.point, again.point);
        }
    }
}
