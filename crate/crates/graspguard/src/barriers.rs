//! Barrier functions for force regulation and force closure.
//!
//! Every barrier used by the filters is affine in the compressive contact
//! load `s(x) = diag(k) p + diag(b) p_dot = -f_c(x)`:
//!
//! ```text
//!     h = c0 + w * s
//! ```
//!
//! * force floor   `h1   = f_c - f_min`:            c0 = -f_min,  w = -1
//! * force ceiling `hmax = f_max - f_c`:            c0 =  f_max,  w = +1
//! * cone row i    `h    = (Lambda F)_i`:           c0 from the tangential
//!   load and torsion, w = +mu (the normal column of Lambda)
//!
//! The harness evaluates true barrier values from the measured wrench via
//! [`barrier_values`]. The filters evaluate everything, values included,
//! from their believed parameters at the state ([`barrier_terms`]), which
//! is where parametric model error enters the constraint: a filter whose
//! model underestimates the contact load certifies more margin than truly
//! exists.

use nalgebra::RowVector2;

use crate::contact::{ContactParams, ContactState};
use crate::error::{Error, Result};

/// Which constraint a barrier encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierKind {
    /// `f_c >= f_min` (compressive force magnitude capped).
    ForceMin,
    /// `f_c <= f_max`.
    ForceMax,
    /// Row `i` (1-based, 1..=4) of the linearized friction cone.
    ConeRow(usize),
}

/// One scalar barrier: its kind, force limit (ignored for cone rows) and
/// linear class-K slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub kind: BarrierKind,
    pub limit: f64,
    pub alpha: f64,
}

impl BarrierSpec {
    pub fn force_min(limit: f64, alpha: f64) -> Self {
        Self { kind: BarrierKind::ForceMin, limit, alpha }
    }

    pub fn force_max(limit: f64, alpha: f64) -> Self {
        Self { kind: BarrierKind::ForceMax, limit, alpha }
    }

    pub fn cone_row(row: usize, alpha: f64) -> Self {
        Self { kind: BarrierKind::ConeRow(row), limit: 0.0, alpha }
    }

    pub fn label(&self) -> String {
        match self.kind {
            BarrierKind::ForceMin => "h1 (force floor)".into(),
            BarrierKind::ForceMax => "h_max (force ceiling)".into(),
            BarrierKind::ConeRow(i) => format!("cone row {i}"),
        }
    }
}

/// Validate a set of barrier specs as a whole.
pub fn validate_specs(specs: &[BarrierSpec]) -> Result<()> {
    let mut f_min = None;
    let mut f_max = None;
    for spec in specs {
        if spec.alpha <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "{}: class-K slope must be > 0",
                spec.label()
            )));
        }
        match spec.kind {
            BarrierKind::ForceMin => f_min = Some(spec.limit),
            BarrierKind::ForceMax => f_max = Some(spec.limit),
            BarrierKind::ConeRow(i) if !(1..=4).contains(&i) => {
                return Err(Error::InvalidParam(format!("cone row {i} out of range 1..=4")));
            }
            _ => {}
        }
    }
    if let (Some(lo), Some(hi)) = (f_min, f_max) {
        if lo > hi {
            return Err(Error::InvalidParam(format!(
                "force limits disagree: f_min = {lo} > f_max = {hi}"
            )));
        }
    }
    Ok(())
}

/// Exogenous quantities entering the cone rows: tangential load and
/// torsional moment, plus the effective friction coefficient the filter
/// trusts (`mu_hat - e_max`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeContext {
    pub f_cx: f64,
    pub f_cy: f64,
    pub tau_abs: f64,
    pub mu: f64,
    pub a_eta: f64,
}

impl ConeContext {
    pub fn new(f_cx: f64, f_cy: f64, tau_abs: f64, mu: f64, a_eta: f64) -> Result<Self> {
        if mu <= 0.0 || a_eta <= 0.0 {
            return Err(Error::InvalidParam("mu and a*eta must be > 0".into()));
        }
        Ok(Self { f_cx, f_cy, tau_abs: tau_abs.abs(), mu, a_eta })
    }
}

/// Affine decomposition `h = c0 + w * s` of one barrier.
pub fn affine_coeffs(spec: &BarrierSpec, ctx: &ConeContext) -> (f64, f64) {
    match spec.kind {
        BarrierKind::ForceMin => (-spec.limit, -1.0),
        BarrierKind::ForceMax => (spec.limit, 1.0),
        BarrierKind::ConeRow(1) => (ctx.f_cx + ctx.tau_abs / ctx.a_eta, ctx.mu),
        BarrierKind::ConeRow(2) => (-ctx.f_cx - ctx.tau_abs / ctx.a_eta, ctx.mu),
        BarrierKind::ConeRow(3) => (ctx.f_cy + ctx.tau_abs / ctx.a_eta, ctx.mu),
        BarrierKind::ConeRow(4) => (-ctx.f_cy - ctx.tau_abs / ctx.a_eta, ctx.mu),
        BarrierKind::ConeRow(i) => panic!("cone row {i} out of range"),
    }
}

/// Barrier values from a measured compressive load `s_meas = -f_c_meas`.
pub fn values_from_load(specs: &[BarrierSpec], ctx: &ConeContext, s_meas: f64) -> Vec<f64> {
    specs
        .iter()
        .map(|spec| {
            let (c0, w) = affine_coeffs(spec, ctx);
            c0 + w * s_meas
        })
        .collect()
}

/// Barrier values per spec from a measured contact wrench. `wrench.f_cz`
/// is the cone-convention normal load, so the signed contact force is
/// `-wrench.f_cz`.
pub fn barrier_values(
    _state: &ContactState,
    wrench: &crate::contact::ContactWrench,
    specs: &[BarrierSpec],
    params: &ContactParams,
) -> Vec<f64> {
    let ctx = ConeContext {
        f_cx: wrench.f_cx,
        f_cy: wrench.f_cy,
        tau_abs: wrench.tau_cz.abs(),
        mu: params.mu,
        a_eta: params.a * params.eta,
    };
    values_from_load(specs, &ctx, wrench.f_cz)
}

/// One barrier with every term a filter needs, evaluated at a state with the
/// filter's model parameters (scalar controlled axis).
#[derive(Debug, Clone, Copy)]
pub struct BarrierTerms {
    /// Barrier value under the model: `c0 + w (k_hat p + b_hat p_dot)`.
    pub h: f64,
    /// Class-K slope.
    pub alpha: f64,
    /// Drift under the disturbance-form model: `L_f h` including the
    /// stiffness/damping term.
    pub l_f: f64,
    /// Input direction `L_{g1} h = w * b / m_o`.
    pub l_g1: f64,
    /// Disturbance direction `L_{g2} h` (equal to `l_g1` here).
    pub l_g2: f64,
    /// Drift of the parametric form `f(x) = [p_dot; 0]` alone.
    pub l_f_param: f64,
    /// Row `dh/dx * F(x)` against the physical parameter vector `[k; b]`.
    pub dhdx_f: RowVector2<f64>,
    /// Parameter gradient `dh/dtheta = w * [p, p_dot]`.
    pub dh_dtheta: RowVector2<f64>,
}

/// Build the terms for one barrier on the scalar controlled axis.
///
/// `model` carries the filter's believed `k_hat`, `b_hat`, `m_o`. The
/// barrier value is `c0 + w * s` with `s` taken from `measured_load` when a
/// measurement grounds the filter, and from the model expression
/// `k_hat p + b_hat p_dot` otherwise.
pub fn barrier_terms(
    spec: &BarrierSpec,
    ctx: &ConeContext,
    state: &ContactState,
    model: &ContactParams,
    measured_load: Option<f64>,
) -> Result<BarrierTerms> {
    if state.dim() != 1 || model.dim() != 1 {
        return Err(Error::Dimension(
            "barrier terms are defined on the scalar controlled axis".into(),
        ));
    }
    let (c0, w) = affine_coeffs(spec, ctx);
    let p = state.p[0];
    let pd = state.p_dot[0];
    let k_hat = model.k[0];
    let b_hat = model.b[0];
    let m_o = model.m_o;

    let s_model = k_hat * p + b_hat * pd;
    let l_g = w * b_hat / m_o;
    Ok(BarrierTerms {
        h: c0 + w * measured_load.unwrap_or(s_model),
        alpha: spec.alpha,
        l_f: w * (k_hat * pd - b_hat * s_model / m_o),
        l_g1: l_g,
        l_g2: l_g,
        l_f_param: w * k_hat * pd,
        dhdx_f: RowVector2::new(-w * b_hat * p / m_o, -w * b_hat * pd / m_o),
        dh_dtheta: RowVector2::new(w * p, w * pd),
    })
}
