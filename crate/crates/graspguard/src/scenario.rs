//! Scenario configuration: a versioned TOML schema describing one grasping
//! study, plus validation and the builders the simulation harness consumes.
//!
//! See `docs/scenario.md` for the generated field reference.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::barriers::BarrierSpec;
use crate::contact::{ContactParams, ContactState};
use crate::error::Result;
use crate::filters::{DobcbfConstants, FilterVariant, InputBounds, RaCbfState};
use crate::observer::{gain_condition_margin, ObserverState};

pub const SCHEMA_VERSION: u32 = 1;
const GRAVITY: f64 = 9.81;

/// Top-level scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Schema version; currently 1.
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    /// Total simulated time (s).
    #[serde(default = "default_duration")]
    pub duration: f64,
    /// Outer (control) step, default 1/125 s.
    #[serde(default = "default_dt_outer")]
    pub dt_outer: f64,
    /// Inner (plant) step, default 1 ms.
    #[serde(default = "default_dt_inner")]
    pub dt_inner: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Filters to run when the CLI does not override.
    #[serde(default = "default_filters")]
    pub filters: Vec<String>,
    #[serde(default)]
    pub object: ObjectConfig,
    #[serde(default)]
    pub contact: ContactConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub limits: LimitsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub input: InputConfig,
    #[serde(default)]
    pub disturbance: DisturbanceConfig,
    #[serde(default)]
    pub tactile: TactileConfig,
    #[serde(default)]
    pub racbf: RacbfConfig,
    #[serde(default)]
    pub rcbf: RcbfConfig,
    #[serde(default)]
    pub dobcbf: DobcbfConfig,
    #[serde(default)]
    pub inner_loop: InnerLoopConfig,
}

fn default_version() -> u32 { SCHEMA_VERSION }
fn default_name() -> String { "unnamed".into() }
fn default_duration() -> f64 { 8.0 }
fn default_dt_outer() -> f64 { 0.008 }
fn default_dt_inner() -> f64 { 0.001 }
fn default_seed() -> u64 { 42 }
fn default_filters() -> Vec<String> {
    FilterVariant::ALL.iter().map(|f| f.name().to_string()).collect()
}

/// Grasped object: its mass is both the plant inertia and the source of the
/// tangential load share `f_cx = mass * g / 2` (override with `f_cx`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub mass: f64,
    /// Tangential load per finger (N); defaults to `mass * g / 2`.
    pub f_cx: Option<f64>,
    #[serde(default)]
    pub f_cy: f64,
    #[serde(default)]
    pub tau_cz: f64,
}

impl Default for ObjectConfig {
    fn default() -> Self {
        Self { mass: 0.1, f_cx: None, f_cy: 0.0, tau_cz: 0.0 }
    }
}

/// True plant contact parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactConfig {
    pub stiffness: f64,
    pub damping: f64,
    pub friction_mu: f64,
    pub torsion_eta: f64,
    pub unit_a: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        Self {
            stiffness: 300.0,
            damping: 4.0,
            friction_mu: 0.5,
            torsion_eta: 0.5,
            unit_a: 0.01,
        }
    }
}

/// The filters' belief: true stiffness/damping scaled per entry, and the
/// friction estimate with its conservative error margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub stiffness_scale: f64,
    pub damping_scale: f64,
    /// Friction coefficient the filters trust; `None` copies the truth.
    pub mu_hat: Option<f64>,
    #[serde(default)]
    pub e_max: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { stiffness_scale: 1.0, damping_scale: 1.0, mu_hat: None, e_max: 0.0 }
    }
}

/// Safety limits and class-K slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub alpha_force_min: f64,
    pub alpha_force_max: f64,
    /// Rows of the linearized cone to enforce (1..=4).
    pub cone_rows: Vec<usize>,
    /// One slope per enforced cone row.
    pub cone_alphas: Vec<f64>,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        Self {
            f_min: -6.0,
            f_max: 1.0,
            alpha_force_min: 80.0,
            alpha_force_max: 80.0,
            cone_rows: vec![1, 2],
            cone_alphas: vec![15.0, 15.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Initial contact force (N, compressive is negative); the plant starts
    /// at the matching static penetration with zero rate.
    pub force: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { force: -2.0 }
    }
}

/// Desired-force profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant { level: f64 },
    /// Piecewise-linear `(t, f)` waypoints, clamped outside the range.
    PiecewiseLinear { points: Vec<(f64, f64)> },
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig::Constant { level: -2.0 }
    }
}

impl ProfileConfig {
    pub fn sample(&self, t: f64) -> f64 {
        match self {
            ProfileConfig::Constant { level } => *level,
            ProfileConfig::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return 0.0;
                }
                if t <= points[0].0 {
                    return points[0].1;
                }
                for pair in points.windows(2) {
                    let (t0, f0) = pair[0];
                    let (t1, f1) = pair[1];
                    if t <= t1 {
                        let s = (t - t0) / (t1 - t0);
                        return f0 + s * (f1 - f0);
                    }
                }
                points.last().unwrap().1
            }
        }
    }

    fn validate(&self, errors: &mut Vec<String>) {
        if let ProfileConfig::PiecewiseLinear { points } = self {
            if points.is_empty() {
                errors.push("profile: needs at least one waypoint".into());
            }
            if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                errors.push("profile: waypoint times must be strictly increasing".into());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Proportional force gain of the nominal controller.
    pub kp_force: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self { kp_force: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self { u_min: -50.0, u_max: 50.0 }
    }
}

/// Exogenous disturbance signal; every shape respects the declared bounds
/// by construction (validated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceConfig {
    #[serde(flatten)]
    pub shape: DisturbanceShape,
    /// Declared amplitude bound |d| <= w0.
    #[serde(default)]
    pub w0: f64,
    /// Declared rate bound |d_dot| <= w1.
    #[serde(default)]
    pub w1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceShape {
    None,
    Constant { level: f64 },
    Sinusoid { amplitude: f64, frequency_hz: f64, #[serde(default)] phase: f64 },
    /// Rises from zero toward `level` at `rate`, then holds.
    Ramp { rate: f64, level: f64 },
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self { shape: DisturbanceShape::None, w0: 0.0, w1: 0.0 }
    }
}

impl DisturbanceConfig {
    pub fn sample(&self, t: f64) -> f64 {
        match &self.shape {
            DisturbanceShape::None => 0.0,
            DisturbanceShape::Constant { level } => *level,
            DisturbanceShape::Sinusoid { amplitude, frequency_hz, phase } => {
                amplitude * (2.0 * std::f64::consts::PI * frequency_hz * t + phase).sin()
            }
            DisturbanceShape::Ramp { rate, level } => {
                let mag = (rate.abs() * t).min(level.abs());
                mag * level.signum()
            }
        }
    }

    fn validate(&self, errors: &mut Vec<String>) {
        if self.w0 < 0.0 || self.w1 < 0.0 {
            errors.push("disturbance: bounds w0, w1 must be >= 0".into());
        }
        let tol = 1e-12;
        match &self.shape {
            DisturbanceShape::None => {}
            DisturbanceShape::Constant { level } => {
                if level.abs() > self.w0 + tol {
                    errors.push(format!(
                        "disturbance: |constant level| = {} exceeds w0 = {}",
                        level.abs(),
                        self.w0
                    ));
                }
            }
            DisturbanceShape::Sinusoid { amplitude, frequency_hz, .. } => {
                if amplitude.abs() > self.w0 + tol {
                    errors.push(format!(
                        "disturbance: amplitude {} exceeds w0 = {}",
                        amplitude.abs(),
                        self.w0
                    ));
                }
                let rate = amplitude.abs() * 2.0 * std::f64::consts::PI * frequency_hz.abs();
                if rate > self.w1 + tol {
                    errors.push(format!(
                        "disturbance: peak rate {} exceeds w1 = {}",
                        rate, self.w1
                    ));
                }
            }
            DisturbanceShape::Ramp { rate, level } => {
                if level.abs() > self.w0 + tol {
                    errors.push(format!(
                        "disturbance: |ramp level| = {} exceeds w0 = {}",
                        level.abs(),
                        self.w0
                    ));
                }
                if rate.abs() > self.w1 + tol {
                    errors.push(format!(
                        "disturbance: |ramp rate| = {} exceeds w1 = {}",
                        rate.abs(),
                        self.w1
                    ));
                }
            }
        }
    }
}

/// Synthetic tactile feedback settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TactileConfig {
    /// Feed the filters the tactile estimate instead of the true force.
    pub enabled: bool,
    pub noise_std: f64,
    pub kernel_width: f64,
    pub neighbor_count: usize,
    /// Contact location on the cap (polar/azimuth, degrees).
    pub contact_theta_deg: f64,
    pub contact_phi_deg: f64,
}

impl Default for TactileConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            noise_std: 0.0,
            kernel_width: 0.002,
            neighbor_count: 4,
            contact_theta_deg: 8.0,
            contact_phi_deg: 20.0,
        }
    }
}

/// Robust adaptive filter settings. `gamma` scales the identity adaptation
/// gain in normalized parameter coordinates; the admissible box is given as
/// scale factors on the model estimate. `theta_tilde` declares the maximum
/// estimation error (normalized); when absent it defaults to the full box
/// width, the worst case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RacbfConfig {
    pub gamma: f64,
    pub theta_lo_scale: f64,
    pub theta_hi_scale: f64,
    pub theta_tilde: Option<(f64, f64)>,
}

impl Default for RacbfConfig {
    fn default() -> Self {
        Self {
            gamma: 0.02,
            theta_lo_scale: 0.4,
            theta_hi_scale: 2.2,
            theta_tilde: Some((0.13, 0.13)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcbfConfig {
    /// Worst-case disturbance magnitude the robust filter assumes.
    pub w0: f64,
}

impl Default for RcbfConfig {
    fn default() -> Self {
        Self { w0: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DobcbfConfig {
    pub alpha_d: f64,
    pub c: f64,
    pub w1: f64,
    pub beta: f64,
    pub nu: f64,
}

impl Default for DobcbfConfig {
    fn default() -> Self {
        Self { alpha_d: 5.0, c: 2.0, w1: 40.0, beta: 170.0, nu: 1.0e4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerLoopConfig {
    /// First-order lag time constant on the realized input (s); 0 is the
    /// ideal tracker.
    pub lag_tau: f64,
}

impl Default for InnerLoopConfig {
    fn default() -> Self {
        Self { lag_tau: 0.0 }
    }
}

impl Default for Scenario {
    fn default() -> Self {
        toml::from_str("").expect("empty scenario uses defaults")
    }
}

/// Validation outcome: errors block a run, warnings are printed.
#[derive(Debug, Clone, Default)]
pub struct Validation {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Validation {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl Scenario {
    pub fn from_toml(content: &str) -> Result<Self> {
        Ok(toml::from_str(content)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn true_params(&self) -> Result<ContactParams> {
        ContactParams::scalar(
            self.contact.stiffness,
            self.contact.damping,
            self.object.mass,
            self.contact.friction_mu,
            self.contact.torsion_eta,
            self.contact.unit_a,
        )
    }

    /// The filters' believed parameters.
    pub fn model_params(&self) -> Result<ContactParams> {
        ContactParams::scalar(
            self.contact.stiffness * self.model.stiffness_scale,
            self.contact.damping * self.model.damping_scale,
            self.object.mass,
            self.mu_hat(),
            self.contact.torsion_eta,
            self.contact.unit_a,
        )
    }

    pub fn mu_hat(&self) -> f64 {
        self.model.mu_hat.unwrap_or(self.contact.friction_mu)
    }

    /// Friction coefficient the closure constraints run at
    /// (conservatively `mu_hat - e_max`).
    pub fn mu_effective(&self) -> f64 {
        self.mu_hat() - self.model.e_max
    }

    /// Tangential load carried by the finger.
    pub fn f_cx(&self) -> f64 {
        self.object.f_cx.unwrap_or(self.object.mass * GRAVITY / 2.0)
    }

    pub fn barrier_specs(&self) -> Vec<BarrierSpec> {
        let mut specs = vec![
            BarrierSpec::force_min(self.limits.f_min, self.limits.alpha_force_min),
            BarrierSpec::force_max(self.limits.f_max, self.limits.alpha_force_max),
        ];
        for (row, alpha) in self.limits.cone_rows.iter().zip(self.limits.cone_alphas.iter()) {
            specs.push(BarrierSpec::cone_row(*row, *alpha));
        }
        specs
    }

    pub fn initial_state(&self) -> Result<ContactState> {
        let p0 = -self.initial.force / self.contact.stiffness;
        ContactState::scalar(p0, 0.0)
    }

    pub fn input_bounds(&self) -> Result<InputBounds> {
        InputBounds::new(self.input.u_min, self.input.u_max)
    }

    pub fn filter_list(&self) -> Result<Vec<FilterVariant>> {
        self.filters.iter().map(|s| FilterVariant::parse(s)).collect()
    }

    pub fn racbf_state(&self) -> Result<RaCbfState> {
        let model = self.model_params()?;
        let theta0 = Vector2::new(model.k[0], model.b[0]);
        let state = RaCbfState::new(
            theta0,
            Matrix2::identity() * self.racbf.gamma,
            theta0 * self.racbf.theta_lo_scale,
            theta0 * self.racbf.theta_hi_scale,
        )?;
        match self.racbf.theta_tilde {
            Some((tk, tb)) => state.with_error_bound(Vector2::new(tk, tb)),
            None => Ok(state),
        }
    }

    pub fn observer(&self, x0: &ContactState) -> Result<ObserverState> {
        ObserverState::new(x0, &self.model_params()?, self.dobcbf.alpha_d, self.dobcbf.c)
    }

    pub fn dob_constants(&self) -> DobcbfConstants {
        DobcbfConstants {
            w1: self.dobcbf.w1,
            beta: self.dobcbf.beta,
            nu: self.dobcbf.nu,
        }
    }

    pub fn outer_steps(&self) -> usize {
        (self.duration / self.dt_outer).round() as usize
    }

    pub fn inner_substeps(&self) -> usize {
        (self.dt_outer / self.dt_inner).round() as usize
    }

    /// Equivalent disturbance from parametric mismatch at a state:
    /// `(k_hat - k) p + (b_hat - b) p_dot`.
    pub fn equivalent_disturbance(&self, state: &ContactState) -> f64 {
        let dk = self.contact.stiffness * (self.model.stiffness_scale - 1.0);
        let db = self.contact.damping * (self.model.damping_scale - 1.0);
        dk * state.p[0] + db * state.p_dot[0]
    }

    /// Full validation pass; errors block a run.
    pub fn validate(&self) -> Validation {
        let mut v = Validation::default();
        let errors = &mut v.errors;

        if self.version != SCHEMA_VERSION {
            errors.push(format!(
                "version: expected {SCHEMA_VERSION}, got {}",
                self.version
            ));
        }
        if !(self.dt_outer > 0.0) {
            errors.push("dt_outer must be > 0".into());
        }
        if !(self.dt_inner > 0.0) {
            errors.push("dt_inner must be > 0".into());
        }
        if self.duration < self.dt_outer {
            errors.push("duration must be >= dt_outer".into());
        }
        if self.dt_outer > 0.0 && self.dt_inner > 0.0 {
            let ratio = self.dt_outer / self.dt_inner;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
                errors.push(format!(
                    "dt_outer / dt_inner = {ratio} must be a positive integer"
                ));
            }
        }
        if let Err(e) = self.filter_list() {
            errors.push(format!("filters: {e}"));
        }

        let true_params = match self.true_params() {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(format!("contact: {e}"));
                None
            }
        };
        let model_params = match self.model_params() {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(format!("model: {e}"));
                None
            }
        };
        if self.mu_effective() <= 0.0 {
            errors.push(format!(
                "model: effective friction mu_hat - e_max = {} must be > 0",
                self.mu_effective()
            ));
        }

        if let Err(e) = crate::barriers::validate_specs(&self.barrier_specs()) {
            errors.push(format!("limits: {e}"));
        }
        if self.limits.cone_rows.len() != self.limits.cone_alphas.len() {
            errors.push("limits: cone_rows and cone_alphas must pair up".into());
        }

        self.profile.validate(errors);
        self.disturbance.validate(errors);

        if let Err(e) = self.input_bounds() {
            errors.push(format!("input: {e}"));
        }
        if self.inner_loop.lag_tau < 0.0 {
            errors.push("inner_loop: lag_tau must be >= 0".into());
        }

        if self.tactile.kernel_width <= 0.0 {
            errors.push("tactile: kernel_width must be > 0".into());
        }
        if self.tactile.noise_std < 0.0 {
            errors.push("tactile: noise_std must be >= 0".into());
        }
        if !(1..=16).contains(&self.tactile.neighbor_count) {
            errors.push("tactile: neighbor_count must sit in 1..=16".into());
        }
        if !(0.0..=75.0).contains(&self.tactile.contact_theta_deg) {
            errors.push("tactile: contact_theta_deg must sit in [0, 75]".into());
        }

        // initial state strictly inside the (true) safe set
        if self.initial.force > 0.0 {
            errors.push("initial: force must be <= 0 (compressive)".into());
        }
        if let (Ok(x0), Some(_tp)) = (self.initial_state(), true_params.as_ref()) {
            for (spec, h) in self.barrier_specs().iter().zip(self.true_h_at(&x0)) {
                if h <= 0.0 {
                    errors.push(format!(
                        "initial state violates {}: h = {h:.4} (must be strictly positive)",
                        spec.label()
                    ));
                }
            }
        }

        // RaCBF configuration
        if self.racbf.gamma < 0.0 {
            errors.push("racbf: gamma must be >= 0".into());
        }
        if !(self.racbf.theta_lo_scale <= 1.0 && 1.0 <= self.racbf.theta_hi_scale) {
            errors.push("racbf: the admissible box must contain the initial estimate".into());
        } else if self.racbf.theta_lo_scale <= 0.0 {
            errors.push("racbf: theta_lo_scale must be > 0".into());
        } else if let (Some(_), Some(_)) = (true_params.as_ref(), model_params.as_ref()) {
            let lo = self.model.stiffness_scale * self.racbf.theta_lo_scale;
            let hi = self.model.stiffness_scale * self.racbf.theta_hi_scale;
            if !(lo <= 1.0 && 1.0 <= hi) {
                v.warnings.push(
                    "racbf: true stiffness lies outside the admissible box; the tightened-set \
                     argument does not cover this run"
                        .into(),
                );
            }
            let lo_b = self.model.damping_scale * self.racbf.theta_lo_scale;
            let hi_b = self.model.damping_scale * self.racbf.theta_hi_scale;
            if !(lo_b <= 1.0 && 1.0 <= hi_b) {
                v.warnings.push(
                    "racbf: true damping lies outside the admissible box; the tightened-set \
                     argument does not cover this run"
                        .into(),
                );
            }
        }
        if let Err(e) = self.racbf_state() {
            errors.push(format!("racbf: {e}"));
        }

        // DOBCBF configuration
        match self.initial_state().and_then(|x0| self.observer(&x0)) {
            Ok(_) => {
                let consts = self.dob_constants();
                if let Err(e) = consts.validate(&self.barrier_specs(), self.dobcbf.c) {
                    errors.push(format!("dobcbf: {e}"));
                }
                if let Ok(x0) = self.initial_state() {
                    // e_d(0) = total disturbance at t = 0 since d_hat(0) = 0
                    let e0 = (self.disturbance.sample(0.0) + self.equivalent_disturbance(&x0)).abs();
                    let h_min = self
                        .true_h_at(&x0)
                        .into_iter()
                        .fold(f64::INFINITY, f64::min);
                    if h_min > 0.0 && consts.beta <= e0 * e0 / (2.0 * h_min) {
                        errors.push(format!(
                            "dobcbf: beta = {} must exceed |e_d(0)|^2 / (2 h(x0)) = {}",
                            consts.beta,
                            e0 * e0 / (2.0 * h_min)
                        ));
                    }
                }
            }
            Err(e) => errors.push(format!("dobcbf: {e}")),
        }
        if let Some(mp) = model_params.as_ref() {
            let margin = gain_condition_margin(mp);
            if margin < 0.0 {
                v.warnings.push(format!(
                    "observer gain condition violated: b_hat/m_o = {:.3} < 1; the printed \
                     disturbance error bound is not guaranteed",
                    margin + 1.0
                ));
            }
        }

        v
    }

    /// Reference page for the scenario schema: every field of the default
    /// configuration as TOML. `docs/scenario.md` is generated from this and
    /// kept in sync by a test.
    pub fn reference_page() -> String {
        let defaults = Scenario::default();
        format!(
            "# Scenario reference\n\n\
             A scenario is a TOML file with schema version {version}. Every field is\n\
             optional; omitted fields take the defaults below. Validate a file with\n\
             `graspguard validate --scenario <file>`.\n\n\
             Notes:\n\n\
             * forces follow the measured-contact convention: compressive is negative;\n\
             * `model.stiffness_scale` / `damping_scale` scale the true parameters into\n\
               the filters' belief (0.6 reproduces the uncertainty study);\n\
             * `object.f_cx` defaults to `object.mass * 9.81 / 2`, the static share of\n\
               the object weight per finger;\n\
             * `racbf.theta_tilde` declares the adaptive filter's maximum estimation\n\
               error in units of the initial estimate; omit it to assume the full\n\
               admissible box width;\n\
             * `disturbance` shapes must respect the declared `w0`/`w1` bounds;\n\
             * `inner_loop.lag_tau = 0` is the ideal joint tracker.\n\n\
             ## Defaults\n\n```toml\n{toml}```\n",
            version = SCHEMA_VERSION,
            toml = defaults.to_toml(),
        )
    }

    /// True barrier values at a state (true parameters, true friction, the
    /// known tangential load).
    pub fn true_h_at(&self, state: &ContactState) -> Vec<f64> {
        let s = self.contact.stiffness * state.p[0] + self.contact.damping * state.p_dot[0];
        let ctx = crate::barriers::ConeContext {
            f_cx: self.f_cx(),
            f_cy: self.object.f_cy,
            tau_abs: self.object.tau_cz.abs(),
            mu: self.contact.friction_mu,
            a_eta: self.contact.unit_a * self.contact.torsion_eta,
        };
        crate::barriers::values_from_load(&self.barrier_specs(), &ctx, s)
    }
}
