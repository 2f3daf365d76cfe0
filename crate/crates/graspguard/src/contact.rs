//! Contact state, the Kelvin-Voigt force law, the two uncertain state-space
//! models, and the soft-finger friction cone with its linearization.
//!
//! Sign convention used throughout the crate: a compressive contact reaction
//! is *negative* (a grasp pressing with 6 N measures `f_c = -6 N`). The
//! friction-cone quantities work on the magnitude of the normal component,
//! so the cone wrench stores `f_cz = -f_c >= 0` for a loaded contact.

use nalgebra::{DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Penetration state of a contact: `x = [p, p_dot]`.
///
/// Entries of `p` are penetrations in metres and stay non-negative; the
/// integrator clamps a separating contact at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactState {
    pub p: DVector<f64>,
    pub p_dot: DVector<f64>,
}

impl ContactState {
    pub fn new(p: DVector<f64>, p_dot: DVector<f64>) -> Result<Self> {
        if p.len() != p_dot.len() {
            return Err(Error::Dimension(format!(
                "p has {} entries, p_dot has {}",
                p.len(),
                p_dot.len()
            )));
        }
        if p.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParam(
                "penetration entries must be finite and >= 0".into(),
            ));
        }
        Ok(Self { p, p_dot })
    }

    /// Scalar (single-axis) contact state.
    pub fn scalar(p: f64, p_dot: f64) -> Result<Self> {
        Self::new(DVector::from_vec(vec![p]), DVector::from_vec(vec![p_dot]))
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Stacked state vector `[p; p_dot]`.
    pub fn as_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(2 * self.dim());
        v.rows_mut(0, self.dim()).copy_from(&self.p);
        v.rows_mut(self.dim(), self.dim()).copy_from(&self.p_dot);
        v
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(Error::Dimension("stacked state must have even length".into()));
        }
        let n = v.len() / 2;
        Ok(Self {
            p: v.rows(0, n).into_owned(),
            p_dot: v.rows(n, n).into_owned(),
        })
    }

    /// Clamp a separated contact: negative penetration snaps to zero and the
    /// rate is zeroed so the state does not carry phantom tension.
    pub fn clamp_separation(&mut self) {
        for i in 0..self.dim() {
            if self.p[i] < 0.0 {
                self.p[i] = 0.0;
                self.p_dot[i] = 0.0;
            }
        }
    }

    /// Energy-weighted norm `sqrt(k p^2 + m_o p_dot^2)`; monotone along the
    /// undriven dynamics, unlike the plain Euclidean norm.
    pub fn energy_norm(&self, params: &ContactParams) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            acc += params.k[i] * self.p[i] * self.p[i]
                + params.m_o * self.p_dot[i] * self.p_dot[i];
        }
        acc.sqrt()
    }
}

/// Physical contact parameters. `[k; b]` stacked is the unknown parameter
/// vector the adaptive filter estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactParams {
    /// Stiffness per axis (N/m).
    pub k: DVector<f64>,
    /// Damping per axis (N.s/m).
    pub b: DVector<f64>,
    /// Mass (kg).
    pub m_o: f64,
    /// Friction coefficient.
    pub mu: f64,
    /// Torsional friction coefficient.
    pub eta: f64,
    /// Unit-consistency length (m) multiplying eta in the cone.
    pub a: f64,
}

impl ContactParams {
    pub fn new(k: DVector<f64>, b: DVector<f64>, m_o: f64, mu: f64, eta: f64, a: f64) -> Result<Self> {
        if k.len() != b.len() {
            return Err(Error::Dimension(format!(
                "k has {} entries, b has {}",
                k.len(),
                b.len()
            )));
        }
        let params = Self { k, b, m_o, mu, eta, a };
        params.validate()?;
        Ok(params)
    }

    /// Scalar (single-axis) parameter set.
    pub fn scalar(k: f64, b: f64, m_o: f64, mu: f64, eta: f64, a: f64) -> Result<Self> {
        Self::new(
            DVector::from_vec(vec![k]),
            DVector::from_vec(vec![b]),
            m_o,
            mu,
            eta,
            a,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let strictly_positive = self.k.iter().all(|v| *v > 0.0)
            && self.b.iter().all(|v| *v > 0.0)
            && self.m_o > 0.0
            && self.mu > 0.0
            && self.eta > 0.0
            && self.a > 0.0;
        if !strictly_positive {
            return Err(Error::InvalidParam(
                "contact parameters must all be strictly positive".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    /// Copy with stiffness and damping scaled; used to inject parametric
    /// model error (`k_hat = s_k * k`, `b_hat = s_b * b`).
    pub fn scaled(&self, k_scale: f64, b_scale: f64) -> Result<Self> {
        Self::new(
            &self.k * k_scale,
            &self.b * b_scale,
            self.m_o,
            self.mu,
            self.eta,
            self.a,
        )
    }
}

/// Contact wrench in the cone convention: `f_cz` is the normal load pressing
/// *into* the surface (so `f_cz = -f_c` for a compressive reaction `f_c < 0`),
/// `tau_cz` is the torsional moment about the contact normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactWrench {
    pub f_cx: f64,
    pub f_cy: f64,
    pub f_cz: f64,
    pub tau_cz: f64,
}

impl ContactWrench {
    pub fn new(f_cx: f64, f_cy: f64, f_cz: f64, tau_cz: f64) -> Result<Self> {
        let w = Self { f_cx, f_cy, f_cz, tau_cz };
        if ![w.f_cx, w.f_cy, w.f_cz, w.tau_cz].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParam("wrench entries must be finite".into()));
        }
        Ok(w)
    }

    /// Stacked `F = [f_cx, f_cy, f_cz, |tau_cz|]` used by the linearized cone.
    pub fn cone_vector(&self) -> Vector4<f64> {
        Vector4::new(self.f_cx, self.f_cy, self.f_cz, self.tau_cz.abs())
    }

    /// Signed contact reaction on the controlled normal axis (negative =
    /// compressive), i.e. `-f_cz`.
    pub fn normal_reaction(&self) -> f64 {
        -self.f_cz
    }
}

/// A bounded disturbance sample with its declared bounds: `|d| <= w0` and
/// `|d_dot| <= w1` for every signal a scenario generates.
#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance {
    pub d: DVector<f64>,
    pub w0: f64,
    pub w1: f64,
}

impl Disturbance {
    pub fn new(d: DVector<f64>, w0: f64, w1: f64) -> Result<Self> {
        if w0 < 0.0 || w1 < 0.0 {
            return Err(Error::InvalidParam("disturbance bounds must be >= 0".into()));
        }
        if d.norm() > w0 * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::InvalidParam(format!(
                "|d| = {} exceeds declared bound w0 = {}",
                d.norm(),
                w0
            )));
        }
        Ok(Self { d, w0, w1 })
    }
}

/// Kelvin-Voigt contact force `f_c = -diag(k) p - diag(b) p_dot`.
/// Negative values are compressive reactions.
pub fn contact_force(state: &ContactState, params: &ContactParams) -> Result<DVector<f64>> {
    check_dims(state, params)?;
    Ok(-state.p.component_mul(&params.k) - state.p_dot.component_mul(&params.b))
}

/// State derivative of the parametric model:
/// `x_dot = [p_dot; (u - diag(p) k - diag(p_dot) b) / m_o]`.
pub fn parametric_dynamics(
    state: &ContactState,
    params: &ContactParams,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dims(state, params)?;
    if u.len() != state.dim() {
        return Err(Error::Dimension(format!(
            "input has {} entries, state has {} axes",
            u.len(),
            state.dim()
        )));
    }
    let n = state.dim();
    let spring = state.p.component_mul(&params.k) + state.p_dot.component_mul(&params.b);
    let mut dx = DVector::zeros(2 * n);
    dx.rows_mut(0, n).copy_from(&state.p_dot);
    dx.rows_mut(n, n).copy_from(&((u - spring) / params.m_o));
    Ok(dx)
}

/// State derivative of the disturbance model:
/// `x_dot = [p_dot; (u + d - diag(p) k - diag(p_dot) b) / m_o]`.
pub fn disturbance_dynamics(
    state: &ContactState,
    params: &ContactParams,
    u: &DVector<f64>,
    d: &DVector<f64>,
) -> Result<DVector<f64>> {
    if d.len() != state.dim() {
        return Err(Error::Dimension(format!(
            "disturbance has {} entries, state has {} axes",
            d.len(),
            state.dim()
        )));
    }
    parametric_dynamics(state, params, &(u + d))
}

/// Residual of the exact soft-finger cone:
/// `f_cz - sqrt(f_cx^2 + f_cy^2)/mu - |tau_cz|/(a eta)`.
/// Non-negative iff the wrench lies inside the cone.
pub fn friction_cone_residual(wrench: &ContactWrench, params: &ContactParams) -> f64 {
    let tangential = (wrench.f_cx * wrench.f_cx + wrench.f_cy * wrench.f_cy).sqrt();
    wrench.f_cz - tangential / params.mu - wrench.tau_cz.abs() / (params.a * params.eta)
}

/// The four-plane linearization `Lambda(mu, a, eta)`; row `i` of
/// `Lambda * F >= 0` is one planar closure constraint.
pub fn linearized_cone_matrix(params: &ContactParams) -> Matrix4<f64> {
    let mu = params.mu;
    let inv_ae = 1.0 / (params.a * params.eta);
    Matrix4::new(
        1.0, 0.0, mu, inv_ae, //
        -1.0, 0.0, mu, -inv_ae, //
        0.0, 1.0, mu, inv_ae, //
        0.0, -1.0, mu, -inv_ae,
    )
}

fn check_dims(state: &ContactState, params: &ContactParams) -> Result<()> {
    if state.dim() != params.dim() {
        return Err(Error::Dimension(format!(
            "state has {} axes, params have {}",
            state.dim(),
            params.dim()
        )));
    }
    Ok(())
}
