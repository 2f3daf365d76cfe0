//! Closed-loop scenario harness.
//!
//! One outer (control) step runs: sample the desired-force profile, form
//! the nominal input, filter it, integrate the plant over the inner
//! substeps with RK4 under the true parameters and the exogenous
//! disturbance, update the observer or the adaptation, synthesize tactile
//! feedback, and record.
//!
//! The nominal force command `K_p (f_d - f_c)` lives in the measured-force
//! convention (compressive negative); the plant input presses with the
//! opposite sign, so the command is negated before filtering and every
//! `u` in the trace is in the plant (pressing-positive) convention.

use nalgebra::{DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::barriers::ConeContext;
use crate::contact::{disturbance_dynamics, ContactParams, ContactState};
use crate::error::{Error, Result};
use crate::filters::{
    filter_cbf, filter_dobcbf, filter_racbf, filter_rcbf, FilterStep, FilterVariant,
};
use crate::finger::control_force;
use crate::observer::{error_bound, observer_step};
use crate::scenario::Scenario;
use crate::tactile::{
    estimate_contact, synth_readings, ArrayGeometry, ContactReading, RegressionModel,
};
use crate::trace::{StepFlags, TraceRecord};

/// One RK4 step of the true plant under a held input and a time-varying
/// disturbance, with separation clamping.
pub fn plant_step<F: Fn(f64) -> f64>(
    state: &ContactState,
    params: &ContactParams,
    u: f64,
    disturbance: &F,
    t: f64,
    dt: f64,
) -> Result<ContactState> {
    let deriv = |tau: f64, x: &DVector<f64>| -> Result<DVector<f64>> {
        let s = ContactState {
            p: x.rows(0, 1).into_owned(),
            p_dot: x.rows(1, 1).into_owned(),
        };
        disturbance_dynamics(
            &s,
            params,
            &DVector::from_vec(vec![u]),
            &DVector::from_vec(vec![disturbance(tau)]),
        )
    };
    let x0 = state.as_vector();
    let k1 = deriv(t, &x0)?;
    let k2 = deriv(t + dt / 2.0, &(&x0 + (dt / 2.0) * &k1))?;
    let k3 = deriv(t + dt / 2.0, &(&x0 + (dt / 2.0) * &k2))?;
    let k4 = deriv(t + dt, &(&x0 + dt * &k3))?;
    let x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    let mut next = ContactState::from_vector(&x1)?;
    next.clamp_separation();
    Ok(next)
}

/// Fixed synthetic array calibration shared by every run.
fn synthetic_regression() -> RegressionModel {
    RegressionModel::new(Vector3::new(2.0, 2.0, 3.0), Vector3::zeros())
        .expect("static calibration is valid")
}

/// Run one scenario under one filter. Deterministic for a fixed seed.
pub fn run_scenario(scenario: &Scenario, variant: FilterVariant) -> Result<Vec<TraceRecord>> {
    let validation = scenario.validate();
    if !validation.ok() {
        return Err(Error::Scenario(validation.errors));
    }

    let true_params = scenario.true_params()?;
    let model_params = scenario.model_params()?;
    let specs = scenario.barrier_specs();
    let bounds = scenario.input_bounds()?;
    let ctx = ConeContext::new(
        scenario.f_cx(),
        scenario.object.f_cy,
        scenario.object.tau_cz,
        scenario.mu_effective(),
        scenario.contact.unit_a * scenario.contact.torsion_eta,
    )?;

    let mut state = scenario.initial_state()?;
    let n_outer = scenario.outer_steps();
    let n_inner = scenario.inner_substeps();
    let dt_outer = scenario.dt_outer;
    let dt_inner = scenario.dt_inner;

    let mut racbf = scenario.racbf_state()?;
    let mut observer = scenario.observer(&state)?;
    let dob_consts = scenario.dob_constants();
    let e0 = (scenario.disturbance.sample(0.0) + scenario.equivalent_disturbance(&state)).abs();

    let geometry = ArrayGeometry::hemispherical(scenario.tactile.neighbor_count)?;
    let regression = synthetic_regression();
    let contact_point = geometry.surface_point(
        scenario.tactile.contact_theta_deg.to_radians(),
        scenario.tactile.contact_phi_deg.to_radians(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let lag_tau = scenario.inner_loop.lag_tau;
    let mut u_applied = 0.0_f64;

    let mut records = Vec::with_capacity(n_outer);
    for step in 0..n_outer {
        let t = step as f64 * dt_outer;

        let s_true =
            scenario.contact.stiffness * state.p[0] + scenario.contact.damping * state.p_dot[0];
        let f_c_true = -s_true;

        // tactile measurement of the contact force
        let (f_c_meas, f_c_est) = if scenario.tactile.enabled {
            let force = Vector3::new(scenario.f_cx(), scenario.object.f_cy, f_c_true);
            let array = synth_readings(
                &contact_point,
                &force,
                &geometry,
                &regression,
                scenario.tactile.kernel_width,
                scenario.tactile.noise_std,
                &mut rng,
            )?;
            match estimate_contact(&array, &regression, scenario.tactile.noise_std) {
                ContactReading::Contact(est) => (est.f_c[2], est.f_c[2]),
                ContactReading::NoContact => (0.0, 0.0),
            }
        } else {
            (f_c_true, f_c_true)
        };

        // nominal input: force command negated into the pressing convention
        let f_d = scenario.profile.sample(t);
        let u_nom = -control_force(f_d, f_c_meas, scenario.controller.kp_force);

        // The baseline CBF trusts its model outright; the robust filters
        // ground their barrier values in the measured force.
        let measured_load = match variant {
            FilterVariant::Cbf => None,
            _ => Some(-f_c_meas),
        };
        let filter_step = FilterStep {
            specs: &specs,
            ctx,
            state: &state,
            model: &model_params,
            measured_load,
            u_nominal: u_nom,
            bounds,
        };
        let mut flags = StepFlags::default();
        let u_safe = match variant {
            FilterVariant::Cbf => {
                let r = filter_cbf(&filter_step)?;
                flags.infeasible = r.infeasible_fallback;
                r.u
            }
            FilterVariant::Rcbf => {
                let r = filter_rcbf(&filter_step, scenario.rcbf.w0)?;
                flags.infeasible = r.infeasible_fallback;
                r.u
            }
            FilterVariant::Racbf => {
                let (r, next, gamma_warn) = filter_racbf(&filter_step, &racbf, dt_outer)?;
                racbf = next;
                flags.infeasible = r.infeasible_fallback;
                flags.gamma_condition = gamma_warn;
                r.u
            }
            FilterVariant::Dobcbf => {
                let r = filter_dobcbf(&filter_step, &observer, &dob_consts)?;
                flags.infeasible = r.infeasible_fallback;
                r.u
            }
        };

        // record the step before integrating
        let h_true = scenario.true_h_at(&state);
        let d_total = scenario.disturbance.sample(t) + scenario.equivalent_disturbance(&state);
        let (d_hat, m_d) = if variant == FilterVariant::Dobcbf {
            (
                observer.d_hat[0],
                error_bound(&observer, e0, scenario.dobcbf.w1, t),
            )
        } else {
            (0.0, 0.0)
        };
        let (theta_k, theta_b) = if variant == FilterVariant::Racbf {
            (racbf.theta_hat[0], racbf.theta_hat[1])
        } else {
            (model_params.k[0], model_params.b[0])
        };
        records.push(TraceRecord {
            t,
            p: state.p[0],
            p_dot: state.p_dot[0],
            f_c: f_c_true,
            f_c_est,
            u_nom,
            u_safe,
            h1: h_true[0],
            h_max: h_true[1],
            h2: h_true.get(2).copied().unwrap_or(f64::NAN),
            h3: h_true.get(3).copied().unwrap_or(f64::NAN),
            d: d_total,
            d_hat,
            m_d,
            theta_hat_k: theta_k,
            theta_hat_b: theta_b,
            flags,
        });

        // plant (and observer) over the inner substeps
        let disturbance = |tau: f64| scenario.disturbance.sample(tau);
        for inner in 0..n_inner {
            let t_in = t + inner as f64 * dt_inner;
            if lag_tau > 0.0 {
                // first-order tracking lag on the realized input
                u_applied = u_safe + (u_applied - u_safe) * (-dt_inner / lag_tau).exp();
            } else {
                u_applied = u_safe;
            }
            let before = state.clone();
            state = plant_step(&state, &true_params, u_applied, &disturbance, t_in, dt_inner)?;
            if variant == FilterVariant::Dobcbf {
                observer = observer_step(
                    &observer,
                    &before,
                    &state,
                    &model_params,
                    &DVector::from_vec(vec![u_applied]),
                    dt_inner,
                )?;
            }
        }
    }
    Ok(records)
}

/// Run several filters over one scenario, at most `max_threads` at a time;
/// results come back in the order of `filters`.
pub fn run_many(
    scenario: &Scenario,
    filters: &[FilterVariant],
    max_threads: usize,
) -> Vec<(FilterVariant, Result<Vec<TraceRecord>>)> {
    let threads = max_threads.max(1).min(filters.len().max(1));
    let mut results: Vec<Option<Result<Vec<TraceRecord>>>> =
        (0..filters.len()).map(|_| None).collect();
    if threads <= 1 || filters.len() <= 1 {
        for (i, f) in filters.iter().enumerate() {
            results[i] = Some(run_scenario(scenario, *f));
        }
    } else {
        let chunks: Vec<Vec<usize>> = (0..threads)
            .map(|w| (w..filters.len()).step_by(threads).collect())
            .collect();
        let mut slots: Vec<(usize, Result<Vec<TraceRecord>>)> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|idxs| {
                    scope.spawn(move || {
                        idxs.into_iter()
                            .map(|i| (i, run_scenario(scenario, filters[i])))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                slots.extend(h.join().expect("scenario worker panicked"));
            }
        });
        for (i, r) in slots {
            results[i] = Some(r);
        }
    }
    filters
        .iter()
        .zip(results)
        .map(|(f, r)| (*f, r.expect("every filter slot filled")))
        .collect()
}

/// Per-filter summary of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterMetrics {
    pub variant: FilterVariant,
    pub min_h1: f64,
    pub min_h2: f64,
    pub min_h3: f64,
    pub min_h_max: f64,
    pub violation_h1: bool,
    pub violation_h2: bool,
    pub violation_h3: bool,
    pub violation_h_max: bool,
    /// True when any sampled barrier dipped below -1e-6.
    pub violation: bool,
    /// Conservatism proxy: mean |u_safe - u_nominal| over the trace.
    pub mean_input_deviation: f64,
}

pub const VIOLATION_TOL: f64 = 1e-6;

fn nan_min(values: impl Iterator<Item = f64>) -> f64 {
    let mut min = f64::NAN;
    for v in values {
        if v.is_nan() {
            continue;
        }
        if min.is_nan() || v < min {
            min = v;
        }
    }
    min
}

/// Exact minima over the sampled records plus violation flags.
pub fn metrics(variant: FilterVariant, trace: &[TraceRecord]) -> Result<FilterMetrics> {
    if trace.is_empty() {
        return Err(Error::InvalidParam("metrics need a non-empty trace".into()));
    }
    let min_h1 = nan_min(trace.iter().map(|r| r.h1));
    let min_h2 = nan_min(trace.iter().map(|r| r.h2));
    let min_h3 = nan_min(trace.iter().map(|r| r.h3));
    let min_h_max = nan_min(trace.iter().map(|r| r.h_max));
    let violated = |m: f64| m < -VIOLATION_TOL; // NaN compares false
    let deviation = trace
        .iter()
        .map(|r| (r.u_safe - r.u_nom).abs())
        .sum::<f64>()
        / trace.len() as f64;
    Ok(FilterMetrics {
        variant,
        min_h1,
        min_h2,
        min_h3,
        min_h_max,
        violation_h1: violated(min_h1),
        violation_h2: violated(min_h2),
        violation_h3: violated(min_h3),
        violation_h_max: violated(min_h_max),
        violation: violated(min_h1) || violated(min_h2) || violated(min_h3)
            || violated(min_h_max),
        mean_input_deviation: deviation,
    })
}
