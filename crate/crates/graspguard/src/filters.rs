//! QP safety filters: CBF, RaCBF, RCBF and DOBCBF.
//!
//! Each filter solves
//!
//! ```text
//!     u_safe = argmin_{u in U} 1/2 |u - u_nominal|^2
//! ```
//!
//! subject to one inequality per barrier. The variants differ only in how
//! the barrier inequality is tightened against model error:
//!
//! * CBF:    `L_f h + L_g1 h u + alpha h >= 0` with the believed parameters;
//! * RCBF:   the CBF row minus the worst-case term `|L_g2 h| w0`;
//! * RaCBF:  the parametric form with `lambda(x, theta_hat)` and the safe
//!   set tightened by `1/2 titilde' Gamma^-1 titilde`, plus the adaptation
//!   law on `theta_hat`;
//! * DOBCBF: the CBF row plus the observer estimate `L_g2 h d_hat` and the
//!   two residual-compensation terms in `psi_0`.
//!
//! When the QP is infeasible the filter applies the input that maximizes the
//! minimum constraint residual over the input box and flags the step.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::barriers::{barrier_terms, BarrierSpec, BarrierTerms, ConeContext};
use crate::contact::{ContactParams, ContactState};
use crate::error::{Error, Result};
use crate::observer::ObserverState;
use crate::qp::{self, QpProblem, QpStatus};

/// Which safety filter to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterVariant {
    Cbf,
    Racbf,
    Rcbf,
    Dobcbf,
}

impl FilterVariant {
    pub const ALL: [FilterVariant; 4] = [
        FilterVariant::Cbf,
        FilterVariant::Racbf,
        FilterVariant::Rcbf,
        FilterVariant::Dobcbf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FilterVariant::Cbf => "cbf",
            FilterVariant::Racbf => "racbf",
            FilterVariant::Rcbf => "rcbf",
            FilterVariant::Dobcbf => "dobcbf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cbf" => Ok(FilterVariant::Cbf),
            "racbf" => Ok(FilterVariant::Racbf),
            "rcbf" => Ok(FilterVariant::Rcbf),
            "dobcbf" => Ok(FilterVariant::Dobcbf),
            other => Err(Error::Parse(format!(
                "unknown filter '{other}' (expected cbf, racbf, rcbf or dobcbf)"
            ))),
        }
    }
}

/// Admissible input box `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputBounds {
    pub lo: f64,
    pub hi: f64,
}

impl InputBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParam(format!("input box [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.lo, self.hi)
    }
}

/// Everything a single filter evaluation needs.
#[derive(Debug, Clone, Copy)]
pub struct FilterStep<'a> {
    pub specs: &'a [BarrierSpec],
    pub ctx: ConeContext,
    pub state: &'a ContactState,
    /// The filter's believed contact parameters.
    pub model: &'a ContactParams,
    /// Measured compressive load grounding the barrier values; `None` makes
    /// the filter trust its model outright.
    pub measured_load: Option<f64>,
    pub u_nominal: f64,
    pub bounds: InputBounds,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterResult {
    pub u: f64,
    /// True when the QP was infeasible and the maximin fallback was applied.
    pub infeasible_fallback: bool,
}

/// Mutable state of the robust adaptive filter. The estimate lives in
/// physical units; the adaptation metric `Gamma` and the maximum error
/// vector operate in coordinates normalized by `scale` (the initial
/// estimate), which keeps stiffness and damping commensurate.
#[derive(Debug, Clone, PartialEq)]
pub struct RaCbfState {
    /// Current physical estimate `[k_hat, b_hat]`.
    pub theta_hat: Vector2<f64>,
    /// Adaptation gain (normalized coordinates, symmetric PSD).
    pub gamma: Matrix2<f64>,
    /// Maximum estimation error (normalized coordinates).
    pub theta_tilde_max: Vector2<f64>,
    /// Admissible physical box.
    pub lo: Vector2<f64>,
    pub hi: Vector2<f64>,
    /// Normalization scales.
    pub scale: Vector2<f64>,
    /// Cached `1/2 titilde' Gamma^-1 titilde`.
    tightening: f64,
}

impl RaCbfState {
    /// `theta0` is the initial physical estimate and normalization scale;
    /// `lo`/`hi` bound the physical parameters (truth must lie inside). The
    /// maximum estimation error defaults to the full box width; see
    /// [`RaCbfState::with_error_bound`] for a tighter declared bound.
    pub fn new(theta0: Vector2<f64>, gamma: Matrix2<f64>, lo: Vector2<f64>, hi: Vector2<f64>) -> Result<Self> {
        if theta0.iter().any(|v| *v <= 0.0) {
            return Err(Error::InvalidParam("initial estimate must be positive".into()));
        }
        for i in 0..2 {
            if !(lo[i] <= theta0[i] && theta0[i] <= hi[i]) {
                return Err(Error::InvalidParam(
                    "initial estimate must lie inside the admissible box".into(),
                ));
            }
        }
        if (gamma - gamma.transpose()).norm() > 1e-12 * (1.0 + gamma.norm()) {
            return Err(Error::InvalidParam("Gamma must be symmetric".into()));
        }
        let eig = gamma.symmetric_eigen();
        if eig.eigenvalues.iter().any(|v| *v < -1e-12) {
            return Err(Error::InvalidParam("Gamma must be positive semidefinite".into()));
        }
        let scale = theta0;
        let theta_tilde_max = Vector2::new((hi[0] - lo[0]) / scale[0], (hi[1] - lo[1]) / scale[1]);
        let tightening = Self::tightening_of(&gamma, &theta_tilde_max)?;
        Ok(Self {
            theta_hat: theta0,
            gamma,
            theta_tilde_max,
            lo,
            hi,
            scale,
            tightening,
        })
    }

    /// Replace the declared maximum estimation error (normalized units) and
    /// recompute the safe-set tightening.
    pub fn with_error_bound(mut self, theta_tilde_max: Vector2<f64>) -> Result<Self> {
        if theta_tilde_max.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidParam("error bound entries must be >= 0".into()));
        }
        self.tightening = Self::tightening_of(&self.gamma, &theta_tilde_max)?;
        self.theta_tilde_max = theta_tilde_max;
        Ok(self)
    }

    fn tightening_of(gamma: &Matrix2<f64>, theta_tilde: &Vector2<f64>) -> Result<f64> {
        if theta_tilde.norm() == 0.0 {
            return Ok(0.0);
        }
        let inv = gamma.try_inverse().ok_or_else(|| {
            Error::InvalidParam(
                "Gamma must be positive definite when the estimation error bound is nonzero"
                    .into(),
            )
        })?;
        Ok(0.5 * (theta_tilde.transpose() * inv * theta_tilde)[(0, 0)])
    }

    /// Safe-set tightening `1/2 titilde' Gamma^-1 titilde`.
    pub fn tightening(&self) -> f64 {
        self.tightening
    }

    /// Contact parameters carrying the current estimate.
    pub fn model(&self, base: &ContactParams) -> ContactParams {
        let mut m = base.clone();
        m.k[0] = self.theta_hat[0];
        m.b[0] = self.theta_hat[1];
        m
    }

    fn normalized(&self) -> Vector2<f64> {
        Vector2::new(self.theta_hat[0] / self.scale[0], self.theta_hat[1] / self.scale[1])
    }

    /// Margin of the eigenvalue condition
    /// `lambda_min(Gamma) >= |titilde|^2 / (2 h_r)`; negative means violated.
    pub fn gamma_condition_margin(&self, h_r: f64) -> f64 {
        if h_r <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let lambda_min = self
            .gamma
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        lambda_min - self.theta_tilde_max.norm_squared() / (2.0 * h_r)
    }
}

/// The DOBCBF compensation constants (`c` and `alpha_d` live on the
/// observer).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DobcbfConstants {
    /// Bound on the disturbance rate.
    pub w1: f64,
    /// Lyapunov weight; must exceed `|e_d(0)|^2 / (2 h(x0))`.
    pub beta: f64,
    /// Rate constant; must exceed `(alpha + c)/2` for every barrier slope.
    pub nu: f64,
}

impl DobcbfConstants {
    /// Construction-time checks against the barrier slopes and the observer
    /// constant `c`. The denominator `4 nu - 2c - 2 alpha` must be positive
    /// for every barrier.
    pub fn validate(&self, specs: &[BarrierSpec], c: f64) -> Result<()> {
        if self.w1 < 0.0 || self.beta <= 0.0 {
            return Err(Error::InvalidParam("w1 >= 0 and beta > 0 required".into()));
        }
        for spec in specs {
            if self.nu <= (spec.alpha + c) / 2.0 {
                return Err(Error::InvalidParam(format!(
                    "nu = {} must exceed (alpha + c)/2 = {} for {}",
                    self.nu,
                    (spec.alpha + c) / 2.0,
                    spec.label()
                )));
            }
            let denom = 4.0 * self.nu - 2.0 * c - 2.0 * spec.alpha;
            if denom <= 0.0 {
                return Err(Error::InvalidParam(format!(
                    "4 nu - 2c - 2 alpha = {denom} must be positive for {}",
                    spec.label()
                )));
            }
        }
        Ok(())
    }
}

/// Standard CBF filter on the believed (possibly wrong) model.
pub fn filter_cbf(step: &FilterStep) -> Result<FilterResult> {
    let rows = cbf_rows(step, step.model, 0.0, None)?;
    solve_rows(step, &rows)
}

/// Robust CBF: every row tightened by the worst-case term `|L_g2 h| w0`.
pub fn filter_rcbf(step: &FilterStep, w0: f64) -> Result<FilterResult> {
    if w0 < 0.0 {
        return Err(Error::InvalidParam("w0 must be >= 0".into()));
    }
    let rows = cbf_rows(step, step.model, w0, None)?;
    solve_rows(step, &rows)
}

/// Disturbance-observer CBF: rows use the current estimate `d_hat` plus the
/// printed residual-compensation terms.
pub fn filter_dobcbf(
    step: &FilterStep,
    obs: &ObserverState,
    consts: &DobcbfConstants,
) -> Result<FilterResult> {
    consts.validate(step.specs, obs.c)?;
    let d_hat = obs.d_hat[0];
    let mut rows = Vec::with_capacity(step.specs.len());
    for spec in step.specs {
        let t = barrier_terms(spec, &step.ctx, step.state, step.model, step.measured_load)?;
        let denom = 4.0 * consts.nu - 2.0 * obs.c - 2.0 * spec.alpha;
        let psi0 = t.l_f + t.l_g2 * d_hat
            - consts.w1 * consts.w1 / (2.0 * obs.c * consts.beta)
            - consts.beta * t.l_g2 * t.l_g2 / denom
            + spec.alpha * t.h;
        rows.push((t.l_g1, psi0));
    }
    solve_rows(step, &rows)
}

/// Robust adaptive CBF. Builds each row with `lambda(x, theta_hat)`,
/// tightens the class-K term by the cached estimation-error bound, solves
/// the QP, then advances the adaptation law one Euler step (driven by the
/// most critical barrier) with projection onto the admissible box.
///
/// Returns the filtered input, the updated adaptive state and whether the
/// eigenvalue condition on `Gamma` was violated at this step.
pub fn filter_racbf(
    step: &FilterStep,
    racbf: &RaCbfState,
    dt: f64,
) -> Result<(FilterResult, RaCbfState, bool)> {
    if dt <= 0.0 {
        return Err(Error::InvalidParam("dt must be > 0".into()));
    }
    let model = racbf.model(step.model);
    let theta_n = racbf.normalized();

    let mut rows = Vec::with_capacity(step.specs.len());
    let mut h_min = f64::INFINITY;
    let mut critical: Option<BarrierTerms> = None;
    for spec in step.specs {
        let t = barrier_terms(spec, &step.ctx, step.state, &model, step.measured_load)?;
        // lambda = theta_hat - Gamma (dh/dtheta)' in normalized coordinates
        let dh_dtheta_n = Vector2::new(
            t.dh_dtheta[0] * racbf.scale[0],
            t.dh_dtheta[1] * racbf.scale[1],
        );
        let lambda_n = theta_n - racbf.gamma * dh_dtheta_n;
        let dhdx_f_n = Vector2::new(
            t.dhdx_f[0] * racbf.scale[0],
            t.dhdx_f[1] * racbf.scale[1],
        );
        let lb = t.l_f_param + dhdx_f_n.dot(&lambda_n)
            + spec.alpha * (t.h - racbf.tightening());
        rows.push((t.l_g1, lb));
        if t.h < h_min {
            h_min = t.h;
            critical = Some(t);
        }
    }

    let result = solve_rows(step, &rows)?;

    // Adaptation: theta_dot = -Gamma (dh/dx F)', Euler step, box projection.
    let mut next = racbf.clone();
    if let Some(t) = critical {
        let dhdx_f_n = Vector2::new(
            t.dhdx_f[0] * racbf.scale[0],
            t.dhdx_f[1] * racbf.scale[1],
        );
        let theta_n_new = theta_n - dt * (racbf.gamma * dhdx_f_n);
        let mut phys = Vector2::new(
            theta_n_new[0] * racbf.scale[0],
            theta_n_new[1] * racbf.scale[1],
        );
        for i in 0..2 {
            phys[i] = phys[i].clamp(racbf.lo[i], racbf.hi[i]);
        }
        next.theta_hat = phys;
    }

    let gamma_warning = racbf.gamma_condition_margin(h_min) < 0.0 && h_min > 0.0;
    Ok((result, next, gamma_warning))
}

/// Shared CBF-style row assembly; `w0` adds the robust tightening.
fn cbf_rows(
    step: &FilterStep,
    model: &ContactParams,
    w0: f64,
    _marker: Option<()>,
) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::with_capacity(step.specs.len());
    for spec in step.specs {
        let t = barrier_terms(spec, &step.ctx, step.state, model, step.measured_load)?;
        let lb = t.l_f - t.l_g2.abs() * w0 + spec.alpha * t.h;
        rows.push((t.l_g1, lb));
    }
    Ok(rows)
}

/// Solve `min 1/2 (u - u_nom)^2` under the rows and input box; fall back to
/// the maximin input on infeasibility.
fn solve_rows(step: &FilterStep, rows: &[(f64, f64)]) -> Result<FilterResult> {
    let m = rows.len();
    let a = DMatrix::from_fn(m, 1, |i, _| rows[i].0);
    let lb = DVector::from_fn(m, |i, _| rows[i].1);
    let problem = QpProblem::new(
        DMatrix::identity(1, 1),
        DVector::from_vec(vec![-step.u_nominal]),
    )
    .with_constraints(a, lb)
    .with_box(
        DVector::from_vec(vec![step.bounds.lo]),
        DVector::from_vec(vec![step.bounds.hi]),
    );
    let sol = qp::solve(&problem)?;
    if sol.status == QpStatus::Solved {
        return Ok(FilterResult {
            u: sol.u[0],
            infeasible_fallback: false,
        });
    }
    Ok(FilterResult {
        u: fallback_maximin(rows, step.bounds)?,
        infeasible_fallback: true,
    })
}

/// Input maximizing the minimum constraint residual over the box: the
/// epigraph program `max t  s.t.  a_i u + lb_i >= t,  u in U`, solved as a
/// lightly regularized strictly convex QP in `(u, t)`.
pub fn fallback_maximin(rows: &[(f64, f64)], bounds: InputBounds) -> Result<f64> {
    const REG: f64 = 1e-6;
    let m = rows.len();
    if m == 0 {
        return Ok(bounds.clamp(0.0));
    }
    let mut a = DMatrix::zeros(m, 2);
    let mut lb = DVector::zeros(m);
    for (i, &(ai, lbi)) in rows.iter().enumerate() {
        a[(i, 0)] = ai;
        a[(i, 1)] = -1.0;
        lb[i] = lbi;
    }
    let problem = QpProblem::new(
        DMatrix::identity(2, 2) * REG,
        DVector::from_vec(vec![0.0, -1.0]),
    )
    .with_constraints(a, lb)
    .with_box(
        DVector::from_vec(vec![bounds.lo, -f64::MAX / 4.0]),
        DVector::from_vec(vec![bounds.hi, f64::MAX / 4.0]),
    );
    let sol = qp::solve(&problem)?;
    if sol.status != QpStatus::Solved {
        return Err(Error::Solver("maximin fallback must be feasible".into()));
    }
    Ok(bounds.clamp(sol.u[0]))
}
