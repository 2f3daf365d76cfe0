//! Dense strictly convex quadratic programming.
//!
//! Solves
//!
//! ```text
//!     minimize    1/2 u' H u + g' u
//!     subject to  A u + lb >= 0        (row-wise)
//!                 lo <= u <= hi        (optional box)
//! ```
//!
//! with the dual active-set method of Goldfarb and Idnani: start at the
//! unconstrained minimum, repeatedly add the most violated constraint while
//! stepping in primal and dual space, dropping active constraints whose
//! multiplier would go negative. `H` is factorized once by Cholesky. Problem
//! sizes here are tiny (n <= 3, a handful of rows), so step directions are
//! formed by direct solves instead of incrementally updated factors.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Constraint-satisfaction tolerance promised by [`QpSolution`].
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Violation threshold for picking constraints to activate.
const VIOLATION_TOL: f64 = 1e-11;
/// Pivot threshold below which a direction counts as zero.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct QpProblem {
    /// Symmetric positive-definite cost matrix.
    pub hessian: DMatrix<f64>,
    /// Linear cost term.
    pub gradient: DVector<f64>,
    /// Inequality rows; `constraints * u + offsets >= 0`.
    pub constraints: DMatrix<f64>,
    pub offsets: DVector<f64>,
    /// Optional box bounds on `u`.
    pub lower: Option<DVector<f64>>,
    pub upper: Option<DVector<f64>>,
}

impl QpProblem {
    pub fn new(hessian: DMatrix<f64>, gradient: DVector<f64>) -> Self {
        let n = gradient.len();
        Self {
            hessian,
            gradient,
            constraints: DMatrix::zeros(0, n),
            offsets: DVector::zeros(0),
            lower: None,
            upper: None,
        }
    }

    pub fn with_constraints(mut self, a: DMatrix<f64>, lb: DVector<f64>) -> Self {
        self.constraints = a;
        self.offsets = lb;
        self
    }

    pub fn with_box(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.lower = Some(lower);
        self.upper = Some(upper);
        self
    }

    pub fn n(&self) -> usize {
        self.gradient.len()
    }

    /// Structural checks: shapes agree, H symmetric with min eigenvalue above
    /// 1e-10, box ordered.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.hessian.nrows() != n || self.hessian.ncols() != n {
            return Err(Error::Dimension(format!(
                "H is {}x{}, expected {}x{}",
                self.hessian.nrows(),
                self.hessian.ncols(),
                n,
                n
            )));
        }
        if self.constraints.ncols() != n && self.constraints.nrows() > 0 {
            return Err(Error::Dimension("constraint row width != n".into()));
        }
        if self.constraints.nrows() != self.offsets.len() {
            return Err(Error::Dimension("constraint rows != offsets".into()));
        }
        let asym = (&self.hessian - self.hessian.transpose()).norm();
        if asym > 1e-10 * (1.0 + self.hessian.norm()) {
            return Err(Error::InvalidParam("H must be symmetric".into()));
        }
        let eig = self.hessian.clone().symmetric_eigen();
        if eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min) <= 1e-10 {
            return Err(Error::NotPositiveDefinite);
        }
        if let (Some(lo), Some(hi)) = (&self.lower, &self.upper) {
            if lo.len() != n || hi.len() != n {
                return Err(Error::Dimension("box bounds must have length n".into()));
            }
            if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
                return Err(Error::InvalidParam("box lower bound exceeds upper".into()));
            }
        }
        Ok(())
    }

    /// All inequality rows with the box expanded to `+-e_j` rows. Row order:
    /// explicit rows, then lower bounds, then upper bounds.
    pub(crate) fn expanded_rows(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.n();
        let m = self.constraints.nrows();
        let extra = self.lower.as_ref().map_or(0, |_| n) + self.upper.as_ref().map_or(0, |_| n);
        let mut a = DMatrix::zeros(m + extra, n);
        let mut lb = DVector::zeros(m + extra);
        a.rows_mut(0, m).copy_from(&self.constraints);
        lb.rows_mut(0, m).copy_from(&self.offsets);
        let mut row = m;
        if let Some(lo) = &self.lower {
            for j in 0..n {
                a[(row, j)] = 1.0;
                lb[row] = -lo[j];
                row += 1;
            }
        }
        if let Some(hi) = &self.upper {
            for j in 0..n {
                a[(row, j)] = -1.0;
                lb[row] = hi[j];
                row += 1;
            }
        }
        (a, lb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Solved,
    Infeasible,
}

/// Solver output. `active_set` and `multipliers` index the expanded row set
/// (explicit rows first, then box rows in the order documented on
/// [`QpProblem::expanded_rows`]).
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub u: DVector<f64>,
    pub active_set: Vec<usize>,
    pub status: QpStatus,
    /// Lagrange multiplier per expanded row (zero for inactive rows).
    pub multipliers: DVector<f64>,
}

impl QpSolution {
    pub fn objective(&self, problem: &QpProblem) -> f64 {
        0.5 * self.u.dot(&(&problem.hessian * &self.u)) + problem.gradient.dot(&self.u)
    }
}

/// Solve a strictly convex QP. Infeasible problems report
/// `QpStatus::Infeasible` with the last iterate; a non-PD cost matrix is a
/// contract violation error.
pub fn solve(problem: &QpProblem) -> Result<QpSolution> {
    problem.validate()?;
    let n = problem.n();
    let chol = Cholesky::new(problem.hessian.clone()).ok_or(Error::NotPositiveDefinite)?;

    let (a, lb) = problem.expanded_rows();
    let m = a.nrows();

    // Row norms for scale-free violation comparison.
    let row_norms: Vec<f64> = (0..m).map(|i| a.row(i).norm()).collect();

    // Unconstrained minimum.
    let mut u = chol.solve(&(-&problem.gradient));
    let mut active: Vec<usize> = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();

    // A zero row can never be repaired by stepping.
    for i in 0..m {
        if row_norms[i] <= PIVOT_TOL && lb[i] < -FEASIBILITY_TOL {
            return Ok(QpSolution {
                u,
                active_set: active,
                status: QpStatus::Infeasible,
                multipliers: DVector::zeros(m),
            });
        }
    }

    let max_iter = 20 * (m + 2) * (m + 2) + 50;
    let mut iter = 0;

    loop {
        // Most violated inactive constraint, scaled by row norm.
        let mut add = None;
        let mut worst = -VIOLATION_TOL;
        for i in 0..m {
            if row_norms[i] <= PIVOT_TOL || active.contains(&i) {
                continue;
            }
            let slack = (a.row(i) * &u)[0] + lb[i];
            let scaled = slack / row_norms[i];
            if scaled < worst {
                worst = scaled;
                add = Some(i);
            }
        }
        let Some(p) = add else {
            return finish(problem, &a, &lb, u, active, lambda, m);
        };

        let n_plus: DVector<f64> = a.row(p).transpose();
        let mut lambda_p = 0.0;

        // Dual iterations for the incoming constraint p.
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(Error::Solver("active-set iteration limit".into()));
            }

            let hinv_np = chol.solve(&n_plus);
            let q = active.len();
            let (z, r) = if q == 0 {
                (hinv_np.clone(), DVector::zeros(0))
            } else {
                let mut nmat = DMatrix::zeros(q, n);
                for (row, &idx) in active.iter().enumerate() {
                    nmat.row_mut(row).copy_from(&a.row(idx));
                }
                let hinv_nt = chol.solve(&nmat.transpose());
                let mmat = &nmat * &hinv_nt; // q x q, SPD when rows independent
                let rhs = &nmat * &hinv_np;
                let r = solve_small_spd(&mmat, &rhs)?;
                let z = &hinv_np - &hinv_nt * &r;
                (z, r)
            };

            // Step to bring constraint p's slack to zero in primal space.
            let slack = (a.row(p) * &u)[0] + lb[p];
            let denom = n_plus.dot(&z); // = z' H z >= 0
            let t2 = if denom > PIVOT_TOL { -slack / denom } else { f64::INFINITY };

            // Largest dual step before an active multiplier hits zero.
            let mut t1 = f64::INFINITY;
            let mut drop_local = None;
            for (j, (&lam, rj)) in lambda.iter().zip(r.iter()).enumerate() {
                if *rj > PIVOT_TOL {
                    let t = lam / rj;
                    if t < t1 {
                        t1 = t;
                        drop_local = Some(j);
                    }
                }
            }

            if !t1.is_finite() && !t2.is_finite() {
                return Ok(QpSolution {
                    u,
                    active_set: active,
                    status: QpStatus::Infeasible,
                    multipliers: DVector::zeros(m),
                });
            }

            let t = t1.min(t2);
            if t2.is_finite() {
                u += t * &z;
            }
            for (lam, rj) in lambda.iter_mut().zip(r.iter()) {
                *lam -= t * rj;
            }
            lambda_p += t;

            if t2 <= t1 {
                active.push(p);
                lambda.push(lambda_p);
                break;
            }
            // Partial step: drop the blocking constraint and continue.
            let j = drop_local.expect("finite t1 implies a blocking index");
            active.remove(j);
            lambda.remove(j);
        }
    }
}

/// Polish and package the terminal iterate: re-solve the equality KKT system
/// on the final active set so stationarity holds to machine precision.
fn finish(
    problem: &QpProblem,
    a: &DMatrix<f64>,
    lb: &DVector<f64>,
    u_iter: DVector<f64>,
    active: Vec<usize>,
    lambda: Vec<f64>,
    m: usize,
) -> Result<QpSolution> {
    let n = problem.n();
    let q = active.len();
    let (u, lam) = if q == 0 {
        (u_iter, lambda)
    } else {
        let mut kkt = DMatrix::zeros(n + q, n + q);
        kkt.view_mut((0, 0), (n, n)).copy_from(&problem.hessian);
        for (row, &idx) in active.iter().enumerate() {
            for col in 0..n {
                kkt[(n + row, col)] = a[(idx, col)];
                kkt[(col, n + row)] = -a[(idx, col)];
            }
        }
        let mut rhs = DVector::zeros(n + q);
        rhs.rows_mut(0, n).copy_from(&(-&problem.gradient));
        for (row, &idx) in active.iter().enumerate() {
            rhs[n + row] = -lb[idx];
        }
        match kkt.lu().solve(&rhs) {
            Some(sol) => (
                sol.rows(0, n).into_owned(),
                sol.rows(n, q).iter().cloned().collect(),
            ),
            // Degenerate active set: keep the iterate.
            None => (u_iter, lambda),
        }
    };
    let mut multipliers = DVector::zeros(m);
    for (&idx, &l) in active.iter().zip(lam.iter()) {
        multipliers[idx] = l;
    }
    Ok(QpSolution {
        u,
        active_set: active,
        status: QpStatus::Solved,
        multipliers,
    })
}

/// Solve `M x = rhs` for small SPD `M`, falling back to SVD when the active
/// rows are (nearly) linearly dependent.
fn solve_small_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok(chol.solve(rhs));
    }
    let svd = m.clone().svd(true, true);
    svd.solve(rhs, 1e-12)
        .map(|x| x.column(0).into_owned())
        .map_err(|e| Error::Solver(format!("dual direction solve failed: {e}")))
}

/// KKT residuals of a solved instance, used by tests and the acceptance
/// suite: (stationarity, worst primal violation, worst negative multiplier,
/// worst complementary-slackness product).
pub fn kkt_residuals(problem: &QpProblem, solution: &QpSolution) -> (f64, f64, f64, f64) {
    let (a, lb) = problem.expanded_rows();
    let lam = &solution.multipliers;
    let stationarity =
        (&problem.hessian * &solution.u + &problem.gradient - a.transpose() * lam).norm();
    let slacks = &a * &solution.u + &lb;
    let primal = slacks.iter().cloned().fold(0.0_f64, |acc, s| acc.max(-s));
    let dual = lam.iter().cloned().fold(0.0_f64, |acc, l| acc.max(-l));
    let comp = slacks
        .iter()
        .zip(lam.iter())
        .map(|(s, l)| (s * l).abs())
        .fold(0.0_f64, f64::max);
    (stationarity, primal, dual, comp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity_problem(g: Vec<f64>) -> QpProblem {
        let n = g.len();
        QpProblem::new(DMatrix::identity(n, n), DVector::from_vec(g))
    }

    #[test]
    fn unconstrained_minimum() {
        let sol = solve(&identity_problem(vec![-3.0])).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert_relative_eq!(sol.u[0], 3.0, epsilon = 1e-12);
        assert!(sol.active_set.is_empty());
    }

    #[test]
    fn single_constraint_clips() {
        // min 1/2 u^2 - 3u  s.t.  -u + 2 >= 0  ->  u = 2
        let p = identity_problem(vec![-3.0]).with_constraints(
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            DVector::from_vec(vec![2.0]),
        );
        let sol = solve(&p).unwrap();
        assert_relative_eq!(sol.u[0], 2.0, epsilon = 1e-12);
        assert_eq!(sol.active_set, vec![0]);
        assert!(sol.multipliers[0] > 0.0);
    }

    #[test]
    fn simplex_projection_matches_grid_oracle() {
        // min 1/2|u|^2 - u1 - u2  s.t. u1 >= 0, u2 >= 0, -u1 - u2 + 1 >= 0
        let p = identity_problem(vec![-1.0, -1.0]).with_constraints(
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, -1.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
        );
        let sol = solve(&p).unwrap();
        assert_relative_eq!(sol.u[0], 0.5, epsilon = 1e-10);
        assert_relative_eq!(sol.u[1], 0.5, epsilon = 1e-10);

        // brute-force grid over the simplex at resolution 1e-3
        let mut best = f64::INFINITY;
        let steps = 1000;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let u1 = i as f64 / steps as f64;
                let u2 = j as f64 / steps as f64;
                let obj = 0.5 * (u1 * u1 + u2 * u2) - u1 - u2;
                if obj < best {
                    best = obj;
                }
            }
        }
        assert!((sol.objective(&p) - best).abs() <= 1e-3);
    }

    #[test]
    fn box_bounds_respected() {
        let p = identity_problem(vec![-10.0, 4.0])
            .with_box(DVector::from_vec(vec![-1.0, -1.0]), DVector::from_vec(vec![1.0, 1.0]));
        let sol = solve(&p).unwrap();
        assert_relative_eq!(sol.u[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.u[1], -1.0, epsilon = 1e-12);
        let (stat, primal, dual, comp) = kkt_residuals(&p, &sol);
        assert!(stat <= 1e-8 && primal <= 1e-8 && dual <= 1e-10 && comp <= 1e-8);
    }

    #[test]
    fn infeasible_reports_status() {
        // u >= 1 and -u >= 0 cannot both hold.
        let p = identity_problem(vec![0.0]).with_constraints(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_vec(vec![-1.0, 0.0]),
        );
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
    }

    #[test]
    fn non_pd_is_contract_violation() {
        let p = QpProblem::new(
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            DVector::from_vec(vec![0.0]),
        );
        assert!(matches!(solve(&p), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn monotone_in_constraints() {
        // Adding a constraint never decreases the optimum.
        let base = identity_problem(vec![-2.0, 1.0]);
        let sol0 = solve(&base).unwrap();
        let tightened = base.clone().with_constraints(
            DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]),
            DVector::from_vec(vec![1.0]),
        );
        let sol1 = solve(&tightened).unwrap();
        assert!(sol1.objective(&tightened) >= sol0.objective(&base) - 1e-12);
    }
}
