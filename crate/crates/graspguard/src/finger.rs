//! Planar finger model and the fingertip force controller.
//!
//! The finger is a planar serial chain (three links by default, sized like
//! an anthropomorphic first finger). It supplies forward kinematics, the
//! analytic Jacobian, damped-least-squares inverse kinematics for pinch
//! trajectories, and the joint position-based force controller
//!
//! ```text
//!     u     = K_p (f_d - f_c)
//!     q_ref = q_d + k_p ttau + k_i int(ttau) dt + k_d d(ttau)/dt,
//!     ttau  = J'(q) ferr
//! ```

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::{Error, Result};

/// Planar serial finger.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerModel {
    /// Link lengths (m).
    pub link_lengths: Vec<f64>,
    /// Per-joint limits (rad).
    pub joint_limits: Vec<(f64, f64)>,
}

impl FingerModel {
    pub fn new(link_lengths: Vec<f64>, joint_limits: Vec<(f64, f64)>) -> Result<Self> {
        if link_lengths.len() < 2 {
            return Err(Error::InvalidParam("finger needs at least 2 links".into()));
        }
        if link_lengths.iter().any(|l| *l <= 0.0) {
            return Err(Error::InvalidParam("link lengths must be positive".into()));
        }
        if joint_limits.len() != link_lengths.len() {
            return Err(Error::Dimension("one joint limit pair per link".into()));
        }
        if joint_limits.iter().any(|(lo, hi)| lo >= hi) {
            return Err(Error::InvalidParam("joint limits must satisfy lo < hi".into()));
        }
        Ok(Self { link_lengths, joint_limits })
    }

    /// Three-link planar finger approximating an anthropomorphic first
    /// finger: links (0.045, 0.025, 0.026) m.
    pub fn default_three_link() -> Self {
        Self::new(
            vec![0.045, 0.025, 0.026],
            vec![(-0.3, 2.0), (-0.3, 2.0), (-0.3, 2.0)],
        )
        .expect("default model is valid")
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    /// Fingertip position for joint vector `q` (cumulative-angle chain).
    pub fn forward(&self, q: &DVector<f64>) -> Result<Vector2<f64>> {
        if q.len() != self.dof() {
            return Err(Error::Dimension(format!(
                "q has {} entries, model has {} joints",
                q.len(),
                self.dof()
            )));
        }
        let mut angle = 0.0;
        let mut tip = Vector2::zeros();
        for (i, l) in self.link_lengths.iter().enumerate() {
            angle += q[i];
            tip += Vector2::new(l * angle.cos(), l * angle.sin());
        }
        Ok(tip)
    }

    /// Analytic 2 x dof positional Jacobian.
    pub fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        if q.len() != self.dof() {
            return Err(Error::Dimension("q length != dof".into()));
        }
        let n = self.dof();
        let mut jac = DMatrix::zeros(2, n);
        // column j sums the contributions of links j..n
        for j in 0..n {
            let mut angle: f64 = q.iter().take(j + 1).sum();
            let mut dx = -self.link_lengths[j] * angle.sin();
            let mut dy = self.link_lengths[j] * angle.cos();
            for (i, l) in self.link_lengths.iter().enumerate().skip(j + 1) {
                angle += q[i];
                dx += -l * angle.sin();
                dy += l * angle.cos();
            }
            jac[(0, j)] = dx;
            jac[(1, j)] = dy;
        }
        Ok(jac)
    }

    pub fn max_reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Damped-least-squares IK from a seed configuration. Iterates until the
    /// fingertip error drops below 1e-9 m; errors out if the target cannot be
    /// reached inside the joint limits.
    pub fn inverse(&self, target: Vector2<f64>, seed: &DVector<f64>) -> Result<DVector<f64>> {
        if target.norm() > self.max_reach() - 1e-9 {
            return Err(Error::Unreachable(format!(
                "target at {:.4} m exceeds reach {:.4} m",
                target.norm(),
                self.max_reach()
            )));
        }
        let mut q = seed.clone();
        let damping = 1e-4;
        for _ in 0..500 {
            let err = target - self.forward(&q)?;
            if err.norm() < 1e-9 {
                return Ok(q);
            }
            let jac = self.jacobian(&q)?;
            // dq = J' (J J' + lambda^2 I)^-1 e
            let jjt = &jac * jac.transpose()
                + DMatrix::identity(2, 2) * damping * damping;
            let dq = jac.transpose()
                * jjt
                    .lu()
                    .solve(&DVector::from_vec(vec![err[0], err[1]]))
                    .ok_or_else(|| Error::Solver("IK normal equations singular".into()))?;
            // cautious step keeps the iteration inside the basin
            let scale = if dq.norm() > 0.5 { 0.5 / dq.norm() } else { 1.0 };
            q += scale * dq;
            for i in 0..q.len() {
                q[i] = q[i].clamp(self.joint_limits[i].0, self.joint_limits[i].1);
            }
        }
        let residual = (target - self.forward(&q)?).norm();
        if residual < 1e-9 {
            Ok(q)
        } else {
            Err(Error::Unreachable(format!(
                "IK stalled at residual {residual:.2e} m (joint limits?)"
            )))
        }
    }

    /// A mid-range elbow-down seed.
    pub fn default_seed(&self) -> DVector<f64> {
        DVector::from_element(self.dof(), 0.7)
    }
}

/// Control force law `u = K_p (f_desired - f_current)`, in the measured
/// contact-force convention (compressive is negative).
pub fn control_force(f_desired: f64, f_current: f64, kp_force: f64) -> f64 {
    kp_force * (f_desired - f_current)
}

/// PID state of the joint position-based force controller.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceControllerState {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Anti-windup clamp on each integral component.
    pub windup_limit: f64,
    pub integral: DVector<f64>,
    pub previous_error: DVector<f64>,
    has_previous: bool,
}

impl ForceControllerState {
    pub fn new(dof: usize, kp: f64, ki: f64, kd: f64, windup_limit: f64) -> Result<Self> {
        if kp < 0.0 || ki < 0.0 || kd < 0.0 || windup_limit <= 0.0 {
            return Err(Error::InvalidParam(
                "PID gains must be >= 0 and the windup limit positive".into(),
            ));
        }
        Ok(Self {
            kp,
            ki,
            kd,
            windup_limit,
            integral: DVector::zeros(dof),
            previous_error: DVector::zeros(dof),
            has_previous: false,
        })
    }
}

/// One joint-reference update: maps the planar force error through the
/// transpose Jacobian and applies PID. Returns the joint reference, the
/// updated controller state and whether the configuration was singular
/// (derivative frozen for the step).
pub fn joint_reference(
    model: &FingerModel,
    q: &DVector<f64>,
    q_d: &DVector<f64>,
    f_error: Vector2<f64>,
    ctrl: &ForceControllerState,
    dt: f64,
) -> Result<(DVector<f64>, ForceControllerState, bool)> {
    if dt <= 0.0 {
        return Err(Error::InvalidParam("dt must be > 0".into()));
    }
    if q.len() != model.dof() || q_d.len() != model.dof() {
        return Err(Error::Dimension("joint vectors must match the model dof".into()));
    }
    let jac = model.jacobian(q)?;
    let singular = jac
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        < 1e-6;

    let tau = jac.transpose() * DVector::from_vec(vec![f_error[0], f_error[1]]);

    let mut next = ctrl.clone();
    next.integral += dt * &tau; // rectangle rule
    for v in next.integral.iter_mut() {
        *v = v.clamp(-ctrl.windup_limit, ctrl.windup_limit);
    }
    let derivative = if singular || !ctrl.has_previous {
        DVector::zeros(model.dof())
    } else {
        (&tau - &ctrl.previous_error) / dt
    };
    next.previous_error = tau.clone();
    next.has_previous = true;

    let q_ref = q_d + ctrl.kp * &tau + ctrl.ki * &next.integral + ctrl.kd * derivative;
    Ok((q_ref, next, singular))
}

/// Straight-line fingertip trajectory solved to joint space.
///
/// Reachability of the whole segment is checked at construction by chaining
/// IK along it; later sampling warm-starts from the prevalidated grid and is
/// deterministic.
#[derive(Debug, Clone)]
pub struct PinchTrajectory {
    model: FingerModel,
    start: Vector2<f64>,
    end: Vector2<f64>,
    duration: f64,
    grid: Vec<DVector<f64>>,
}

impl PinchTrajectory {
    const GRID_STEPS: usize = 64;

    pub fn new(
        model: &FingerModel,
        start: Vector2<f64>,
        end: Vector2<f64>,
        duration: f64,
    ) -> Result<Self> {
        if duration <= 0.0 {
            return Err(Error::InvalidParam("duration must be > 0".into()));
        }
        let mut grid = Vec::with_capacity(Self::GRID_STEPS + 1);
        let mut seed = model.default_seed();
        for i in 0..=Self::GRID_STEPS {
            let s = i as f64 / Self::GRID_STEPS as f64;
            let point = start + s * (end - start);
            let q = model.inverse(point, &seed)?;
            seed = q.clone();
            grid.push(q);
        }
        Ok(Self {
            model: model.clone(),
            start,
            end,
            duration,
            grid,
        })
    }

    /// Cartesian interpolant at time `t` (clamped to the segment).
    pub fn cartesian(&self, t: f64) -> Vector2<f64> {
        let s = (t / self.duration).clamp(0.0, 1.0);
        self.start + s * (self.end - self.start)
    }

    /// Feedforward joints at time `t`; refined from the nearest grid sample
    /// so `forward(sample(t))` matches the Cartesian interpolant to IK
    /// precision.
    pub fn sample(&self, t: f64) -> Result<DVector<f64>> {
        let s = (t / self.duration).clamp(0.0, 1.0);
        let idx = ((s * Self::GRID_STEPS as f64).round() as usize).min(Self::GRID_STEPS);
        self.model.inverse(self.cartesian(t), &self.grid[idx])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn model() -> FingerModel {
        FingerModel::default_three_link()
    }

    fn random_q(rng: &mut StdRng, m: &FingerModel) -> DVector<f64> {
        DVector::from_fn(m.dof(), |i, _| {
            let (lo, hi) = m.joint_limits[i];
            let pad = 0.1 * (hi - lo);
            rng.random_range(lo + pad..hi - pad)
        })
    }

    #[test]
    fn control_force_values() {
        assert_eq!(control_force(-3.0, -3.0, 2.0), 0.0);
        assert_eq!(control_force(-4.0, -3.0, 2.0), -2.0);
        // linear in the gain
        assert_eq!(control_force(-4.0, -3.0, 4.0), 2.0 * control_force(-4.0, -3.0, 2.0));
    }

    #[test]
    fn two_link_jacobian_by_hand() {
        // q = (0, pi/2): tip at (l1, l2); hand Jacobian
        let m = FingerModel::new(vec![0.1, 0.05], vec![(-3.0, 3.0), (-3.0, 3.0)]).unwrap();
        let q = DVector::from_vec(vec![0.0, std::f64::consts::FRAC_PI_2]);
        let tip = m.forward(&q).unwrap();
        assert_relative_eq!(tip[0], 0.1, epsilon = 1e-12);
        assert_relative_eq!(tip[1], 0.05, epsilon = 1e-12);

        let jac = m.jacobian(&q).unwrap();
        // dx/dq1 = -l1 sin0 - l2 sin(pi/2) = -0.05 ; dx/dq2 = -0.05
        // dy/dq1 =  l1 cos0 + l2 cos(pi/2) =  0.1  ; dy/dq2 = 0
        assert_relative_eq!(jac[(0, 0)], -0.05, epsilon = 1e-12);
        assert_relative_eq!(jac[(0, 1)], -0.05, epsilon = 1e-12);
        assert_relative_eq!(jac[(1, 0)], 0.1, epsilon = 1e-12);
        assert_relative_eq!(jac[(1, 1)], 0.0, epsilon = 1e-12);

        // unit tangential force maps to tau = J' f
        let tau = jac.transpose() * DVector::from_vec(vec![1.0, 0.0]);
        assert_relative_eq!(tau[0], -0.05, epsilon = 1e-12);
        assert_relative_eq!(tau[1], -0.05, epsilon = 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = model();
        let mut rng = StdRng::seed_from_u64(17);
        let eps = 1e-7;
        for _ in 0..100 {
            let q = random_q(&mut rng, &m);
            let jac = m.jacobian(&q).unwrap();
            for j in 0..m.dof() {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[j] += eps;
                qm[j] -= eps;
                let fd = (m.forward(&qp).unwrap() - m.forward(&qm).unwrap()) / (2.0 * eps);
                for row in 0..2 {
                    let a = jac[(row, j)];
                    let denom = a.abs().max(1e-3);
                    assert!(
                        (a - fd[row]).abs() / denom <= 1e-5,
                        "J[{row},{j}] = {a} vs fd {}",
                        fd[row]
                    );
                }
            }
        }
    }

    #[test]
    fn fk_ik_round_trip() {
        let m = model();
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..100 {
            let q = random_q(&mut rng, &m);
            let target = m.forward(&q).unwrap();
            let q_sol = m.inverse(target, &m.default_seed()).unwrap();
            let tip = m.forward(&q_sol).unwrap();
            assert!(
                (tip - target).norm() <= 1e-6,
                "round-trip error {}",
                (tip - target).norm()
            );
        }
    }

    #[test]
    fn unreachable_target_errors() {
        let m = model();
        let too_far = Vector2::new(m.max_reach() + 0.01, 0.0);
        assert!(matches!(
            m.inverse(too_far, &m.default_seed()),
            Err(Error::Unreachable(_))
        ));
        // trajectory construction surfaces the error up front
        assert!(PinchTrajectory::new(&m, Vector2::new(0.05, 0.02), too_far, 1.0).is_err());
    }

    #[test]
    fn trajectory_endpoints_and_midpoint() {
        let m = model();
        let start = Vector2::new(0.07, 0.03);
        let end = Vector2::new(0.05, 0.05);
        let traj = PinchTrajectory::new(&m, start, end, 2.0).unwrap();

        for (t, expect) in [(0.0, start), (2.0, end), (1.0, 0.5 * (start + end))] {
            let q = traj.sample(t).unwrap();
            let tip = m.forward(&q).unwrap();
            assert!((tip - expect).norm() <= 1e-6, "t = {t}");
        }

        // dense sweep: FK of q_d reproduces the interpolated point
        for i in 0..=40 {
            let t = 2.0 * i as f64 / 40.0;
            let tip = m.forward(&traj.sample(t).unwrap()).unwrap();
            assert!((tip - traj.cartesian(t)).norm() <= 1e-6);
        }
    }

    #[test]
    fn joint_reference_identity_and_integral() {
        let m = model();
        let q = DVector::from_element(3, 0.5);
        let q_d = DVector::from_vec(vec![0.4, 0.6, 0.5]);
        let ctrl = ForceControllerState::new(3, 0.2, 1.0, 0.0, 10.0).unwrap();

        // zero force error, zero integral -> q_ref = q_d
        let (q_ref, _, singular) =
            joint_reference(&m, &q, &q_d, Vector2::zeros(), &ctrl, 1e-3).unwrap();
        assert!(!singular);
        assert_relative_eq!((q_ref - &q_d).norm(), 0.0, epsilon = 1e-15);

        // constant error over N steps: integral = N dt tau (rectangle rule)
        let f_err = Vector2::new(0.0, -1.0);
        let tau = m.jacobian(&q).unwrap().transpose()
            * DVector::from_vec(vec![f_err[0], f_err[1]]);
        let mut state = ForceControllerState::new(3, 0.0, 1.0, 0.0, 10.0).unwrap();
        let n_steps = 250;
        let dt = 1e-3;
        for _ in 0..n_steps {
            let (_, next, _) = joint_reference(&m, &q, &q_d, f_err, &state, dt).unwrap();
            state = next;
        }
        let expected = n_steps as f64 * dt * &tau;
        assert!((state.integral - expected).norm() <= 1e-10);
    }

    #[test]
    fn singular_configuration_flags_and_freezes_derivative() {
        // fully stretched arm: Jacobian rows degenerate in x
        let m = FingerModel::new(
            vec![0.1, 0.05],
            vec![(-3.0, 3.0), (-3.0, 3.0)],
        )
        .unwrap();
        let q = DVector::from_vec(vec![0.0, 0.0]);
        let mut ctrl = ForceControllerState::new(2, 0.1, 0.0, 5.0, 10.0).unwrap();
        // build derivative history first
        let (_, next, _) = joint_reference(
            &FingerModel::new(vec![0.1, 0.05], vec![(-3.0, 3.0), (-3.0, 3.0)]).unwrap(),
            &DVector::from_vec(vec![0.3, 0.4]),
            &DVector::zeros(2),
            Vector2::new(0.5, 0.0),
            &ctrl,
            1e-3,
        )
        .unwrap();
        ctrl = next;
        let (q_ref, _, singular) =
            joint_reference(&m, &q, &DVector::zeros(2), Vector2::new(1.0, 0.0), &ctrl, 1e-3)
                .unwrap();
        assert!(singular);
        // derivative frozen: reference carries only P and I terms
        let tau = m.jacobian(&q).unwrap().transpose() * DVector::from_vec(vec![1.0, 0.0]);
        let expected = 0.1 * &tau + 0.0 * &tau;
        assert!((q_ref - expected).norm() <= 1e-12);
    }

    /// Closed-loop force tracking through the joint-position chain: the
    /// fingertip presses a compliant wall, the joint tracker is ideal, and
    /// the integral term removes the steady-state force error.
    #[test]
    fn force_tracking_converges_through_joint_chain() {
        let m = model();
        let (wall_k, wall_b) = (300.0, 4.0);
        let f_desired = -2.0; // N, compressive

        // wall plane: x = x_wall; penetration = tip_x - x_wall
        let q0 = m.inverse(Vector2::new(0.075, 0.03), &m.default_seed()).unwrap();
        let x_wall = 0.0745; // starts slightly penetrated
        let mut q = q0.clone();
        let q_d = q0.clone();
        let mut ctrl = ForceControllerState::new(3, 0.05, 10.0, 0.0, 50.0).unwrap();

        let dt = 1e-3;
        let mut f_c = 0.0;
        let mut prev_tip_x = m.forward(&q).unwrap()[0];
        let mut errors = Vec::new();
        for step in 0..2000 {
            let tip = m.forward(&q).unwrap();
            let pen = (tip[0] - x_wall).max(0.0);
            let pen_rate = (tip[0] - prev_tip_x) / dt;
            prev_tip_x = tip[0];
            f_c = if pen > 0.0 { -(wall_k * pen + wall_b * pen_rate) } else { 0.0 };

            // measured-convention error, negated into the applied (pressing)
            // direction the fingertip must displace toward
            let f_err = -(f_desired - f_c);
            let (q_ref, next, _) =
                joint_reference(&m, &q, &q_d, Vector2::new(f_err, 0.0), &ctrl, dt).unwrap();
            ctrl = next;
            q = q_ref; // ideal joint tracker
            for i in 0..q.len() {
                q[i] = q[i].clamp(m.joint_limits[i].0, m.joint_limits[i].1);
            }
            if step % 100 == 0 {
                errors.push((f_desired - f_c).abs());
            }
        }
        // within 1% of the commanded force after 2 s
        let steady_err = (f_desired - f_c).abs() / f_desired.abs();
        assert!(
            steady_err <= 0.01,
            "steady-state force error {steady_err:.4} exceeds 1%"
        );
        // error decreasing after the initial transient
        let tail = &errors[errors.len() - 5..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-6));
    }
}
