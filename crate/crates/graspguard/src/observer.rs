//! Nonlinear disturbance observer (NDOB).
//!
//! Estimates a matched additive disturbance `d` acting on the contact
//! dynamics through
//!
//! ```text
//!     d_hat = z + alpha_d * P(x),        P(x) = diag(k) p + diag(b) p_dot
//!     z_dot = -alpha_d * L_d (f(x) + g1 u + g2 d_hat),   L_d = [k' b']
//! ```
//!
//! run with the observer's *model* parameters, so parametric model error
//! shows up inside `d_hat` as an equivalent disturbance. The estimation
//! error is uniformly bounded by [`error_bound`], valid whenever the gain
//! condition `e' e <= e' L_d g2 e` holds (scalar case: `b / m_o >= 1`,
//! checked by [`gain_condition_margin`]).

use nalgebra::DVector;

use crate::contact::{ContactParams, ContactState};
use crate::error::{Error, Result};

/// Observer internal state plus its two tuning constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    /// Internal integrator state.
    pub z: DVector<f64>,
    /// Current disturbance estimate.
    pub d_hat: DVector<f64>,
    /// Positive observer gain.
    pub alpha_d: f64,
    /// Positive constant with `c < 2 alpha_d`, so `k = alpha_d - c/2 > 0`.
    pub c: f64,
}

impl ObserverState {
    /// Observer initialized so that `d_hat(0) = 0` at the given state.
    pub fn new(state: &ContactState, params: &ContactParams, alpha_d: f64, c: f64) -> Result<Self> {
        if alpha_d <= 0.0 {
            return Err(Error::InvalidParam("alpha_d must be > 0".into()));
        }
        if c <= 0.0 || c >= 2.0 * alpha_d {
            return Err(Error::InvalidParam(format!(
                "c must satisfy 0 < c < 2*alpha_d (got c = {c}, alpha_d = {alpha_d})"
            )));
        }
        let z = -alpha_d * gain_p(state, params)?;
        let n = state.dim();
        Ok(Self {
            z,
            d_hat: DVector::zeros(n),
            alpha_d,
            c,
        })
    }

    /// Decay rate of the error bound, `k = alpha_d - c/2`.
    pub fn decay_rate(&self) -> f64 {
        self.alpha_d - self.c / 2.0
    }
}

/// Estimator gain function `P(x) = diag(k) p + diag(b) p_dot`. Note
/// `P(x) = -f_c(x)`.
pub fn gain_p(state: &ContactState, params: &ContactParams) -> Result<DVector<f64>> {
    if state.dim() != params.dim() {
        return Err(Error::Dimension(format!(
            "state has {} axes, params have {}",
            state.dim(),
            params.dim()
        )));
    }
    Ok(state.p.component_mul(&params.k) + state.p_dot.component_mul(&params.b))
}

/// Margin of the gain condition `e' e <= e' L_d g2 e`: the smallest
/// eigenvalue of `L_d g2 = diag(b)/m_o` minus one. Negative means the
/// printed error bound is not guaranteed for these parameters.
pub fn gain_condition_margin(params: &ContactParams) -> f64 {
    params.b.iter().cloned().fold(f64::INFINITY, f64::min) / params.m_o - 1.0
}

/// Advance the observer by one fixed step `dt` with the same RK4 scheme the
/// plant uses. The plant state over the step is linearly interpolated from
/// `before` to `after`; `d_hat` is refreshed against the post-step state.
pub fn observer_step(
    obs: &ObserverState,
    before: &ContactState,
    after: &ContactState,
    params: &ContactParams,
    u: &DVector<f64>,
    dt: f64,
) -> Result<ObserverState> {
    if dt <= 0.0 {
        return Err(Error::InvalidParam("dt must be > 0".into()));
    }
    if before.dim() != after.dim() || u.len() != before.dim() {
        return Err(Error::Dimension("observer step dimensions disagree".into()));
    }

    let state_at = |tau: f64| -> ContactState {
        let w = tau / dt;
        ContactState {
            p: (1.0 - w) * &before.p + w * &after.p,
            p_dot: (1.0 - w) * &before.p_dot + w * &after.p_dot,
        }
    };

    let deriv = |tau: f64, z: &DVector<f64>| -> Result<DVector<f64>> {
        let x = state_at(tau);
        let d_hat = z + obs.alpha_d * gain_p(&x, params)?;
        // f(x) + g1 u + g2 d_hat under the model parameters
        let spring = x.p.component_mul(&params.k) + x.p_dot.component_mul(&params.b);
        let accel = (u + &d_hat - spring) / params.m_o;
        // L_d [p_dot; accel] = diag(k) p_dot + diag(b) accel
        let ld = x.p_dot.component_mul(&params.k) + accel.component_mul(&params.b);
        Ok(-obs.alpha_d * ld)
    };

    let k1 = deriv(0.0, &obs.z)?;
    let k2 = deriv(dt / 2.0, &(&obs.z + (dt / 2.0) * &k1))?;
    let k3 = deriv(dt / 2.0, &(&obs.z + (dt / 2.0) * &k2))?;
    let k4 = deriv(dt, &(&obs.z + dt * &k3))?;
    let z = &obs.z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    let d_hat = &z + obs.alpha_d * gain_p(after, params)?;
    Ok(ObserverState {
        z,
        d_hat,
        alpha_d: obs.alpha_d,
        c: obs.c,
    })
}

/// The printed uniform error bound
/// `M_d(t) = sqrt((2ck |e0|^2 e^{-2kt} + w1^2 (1 - e^{-2kt})) / (2ck))`
/// with `k = alpha_d - c/2`.
pub fn error_bound(obs: &ObserverState, e0_norm: f64, w1: f64, t: f64) -> f64 {
    let k = obs.decay_rate();
    let decay = (-2.0 * k * t).exp();
    let num = 2.0 * obs.c * k * e0_norm * e0_norm * decay + w1 * w1 * (1.0 - decay);
    (num / (2.0 * obs.c * k)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{disturbance_dynamics, ContactState};
    use approx::assert_relative_eq;

    fn params(k: f64, b: f64, m_o: f64) -> ContactParams {
        ContactParams::scalar(k, b, m_o, 0.5, 0.5, 0.01).unwrap()
    }

    #[test]
    fn gain_p_values() {
        let p = params(100.0, 1.0, 0.1);
        let zero = ContactState::scalar(0.0, 0.0).unwrap();
        assert_eq!(gain_p(&zero, &p).unwrap()[0], 0.0);

        let s = ContactState::scalar(0.01, 0.0).unwrap();
        assert_relative_eq!(gain_p(&s, &p).unwrap()[0], 1.0);

        // P(x) + f_c(x) = 0 identically
        let s = ContactState::scalar(0.0042, -0.73).unwrap();
        let f = crate::contact::contact_force(&s, &p).unwrap();
        assert_relative_eq!(gain_p(&s, &p).unwrap()[0] + f[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn constructor_checks_constants() {
        let s = ContactState::scalar(0.0, 0.0).unwrap();
        let p = params(100.0, 1.0, 0.1);
        assert!(ObserverState::new(&s, &p, 1.0, 0.5).is_ok());
        assert!(ObserverState::new(&s, &p, 0.0, 0.5).is_err());
        assert!(ObserverState::new(&s, &p, 1.0, 2.0).is_err());
        assert!(ObserverState::new(&s, &p, 1.0, -0.1).is_err());
    }

    #[test]
    fn starts_unbiased() {
        let s = ContactState::scalar(0.02, -0.3).unwrap();
        let p = params(250.0, 4.0, 0.1);
        let obs = ObserverState::new(&s, &p, 5.0, 1.0).unwrap();
        assert_relative_eq!((&obs.z + obs.alpha_d * gain_p(&s, &p).unwrap())[0], 0.0);
    }

    #[test]
    fn bound_values() {
        let s = ContactState::scalar(0.0, 0.0).unwrap();
        let p = params(100.0, 1.0, 0.1);
        // k = alpha_d - c/2 = 1 with alpha_d = 1.5, c = 1
        let obs = ObserverState::new(&s, &p, 1.5, 1.0).unwrap();
        assert_relative_eq!(obs.decay_rate(), 1.0);

        // t = 0 collapses to |e0|
        assert_relative_eq!(error_bound(&obs, 0.37, 2.0, 0.0), 0.37, epsilon = 1e-15);

        // w1 = 0, k = 1, c = 1, t = 1 -> e^{-1}
        assert_relative_eq!(
            error_bound(&obs, 1.0, 0.0, 1.0),
            (-1.0_f64).exp(),
            epsilon = 1e-12
        );

        // large-t asymptote: w1 / sqrt(2ck)
        let asym = 2.0 / (2.0_f64 * 1.0 * 1.0).sqrt();
        assert_relative_eq!(error_bound(&obs, 5.0, 2.0, 50.0), asym, epsilon = 1e-9);
    }

    #[test]
    fn bound_monotonicity() {
        let s = ContactState::scalar(0.0, 0.0).unwrap();
        let p = params(100.0, 1.0, 0.1);
        let obs = ObserverState::new(&s, &p, 3.0, 1.0).unwrap();
        let asym = 0.8 / (2.0 * obs.c * obs.decay_rate()).sqrt();

        // non-increasing from above the asymptote, non-decreasing from below
        let mut prev = error_bound(&obs, 2.0 * asym, 0.8, 0.0);
        for i in 1..200 {
            let t = i as f64 * 0.05;
            let m = error_bound(&obs, 2.0 * asym, 0.8, t);
            assert!(m <= prev + 1e-12);
            prev = m;
        }
        let mut prev = error_bound(&obs, 0.1 * asym, 0.8, 0.0);
        for i in 1..200 {
            let t = i as f64 * 0.05;
            let m = error_bound(&obs, 0.1 * asym, 0.8, t);
            assert!(m >= prev - 1e-12);
            prev = m;
        }
    }

    /// Roll plant + observer with a constant true disturbance and exact model
    /// parameters. Starting at force balance the plant never moves, so the
    /// sampled error must match the closed-form decay to integrator
    /// precision; from a transient start it must stay inside the printed
    /// bound at every sample.
    #[test]
    fn tracks_constant_disturbance_within_bound() {
        let p = params(300.0, 4.0, 0.1); // b/m_o = 40 >= 1
        assert!(gain_condition_margin(&p) > 0.0);

        let dt = 1e-3;
        let d_true: DVector<f64> = DVector::from_vec(vec![0.8]);
        let u: DVector<f64> = DVector::from_vec(vec![2.0]);
        let e0 = d_true[0].abs(); // d_hat(0) = 0 by initialization

        // static plant: p* = (u + d)/k, closed form e(t) = e0 e^{-rate t}
        let p_star = (u[0] + d_true[0]) / p.k[0];
        let mut state = ContactState::scalar(p_star, 0.0).unwrap();
        let mut obs = ObserverState::new(&state, &p, 5.0, 2.0).unwrap();
        let rate = obs.alpha_d * p.b[0] / p.m_o;
        for step in 1..=2000 {
            let before = state.clone();
            state = rk4_plant(&state, &p, &u, &d_true, dt);
            obs = observer_step(&obs, &before, &state, &p, &u, dt).unwrap();
            let t = step as f64 * dt;
            let err = (d_true[0] - obs.d_hat[0]).abs();
            let closed_form = e0 * (-rate * t).exp();
            // RK4 truncation at rate*dt = 0.2 is ~3e-6 relative per step
            assert!(
                (err - closed_form).abs() <= 1e-5 * e0 + 1e-2 * closed_form,
                "err {err} vs closed form {closed_form} at t = {t}"
            );
        }

        // transient start: only the printed bound is claimed
        let mut state = ContactState::scalar(0.004, 0.0).unwrap();
        let mut obs = ObserverState::new(&state, &p, 5.0, 2.0).unwrap();
        for step in 1..=3000 {
            let before = state.clone();
            state = rk4_plant(&state, &p, &u, &d_true, dt);
            obs = observer_step(&obs, &before, &state, &p, &u, dt).unwrap();
            let t = step as f64 * dt;
            let err = (d_true[0] - obs.d_hat[0]).abs();
            let bound = error_bound(&obs, e0, 0.0, t);
            assert!(
                err <= bound * 1.001 + 1e-12,
                "err {err} exceeds bound {bound} at t = {t}"
            );
        }
    }

    fn rk4_plant(
        state: &ContactState,
        p: &ContactParams,
        u: &DVector<f64>,
        d: &DVector<f64>,
        dt: f64,
    ) -> ContactState {
        let f = |s: &ContactState| disturbance_dynamics(s, p, u, d).unwrap();
        let x0 = state.as_vector();
        let k1 = f(state);
        let k2 = f(&ContactState::from_vector(&(&x0 + (dt / 2.0) * &k1)).unwrap());
        let k3 = f(&ContactState::from_vector(&(&x0 + (dt / 2.0) * &k2)).unwrap());
        let k4 = f(&ContactState::from_vector(&(&x0 + dt * &k3)).unwrap());
        let x1 = &x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let mut s = ContactState::from_vector(&x1).unwrap();
        s.clamp_separation();
        s
    }
}
