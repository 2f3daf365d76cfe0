//! Synthetic fingertip tactile array and contact estimation.
//!
//! Seventeen three-axis sensors sit on a hemispherical cap (one apex, two
//! rings of eight). A calibrated linear regression maps deformation readings
//! to forces. The contact estimator picks the strongest sensor, gathers its
//! `k` nearest neighbours, and reports the center of pressure (weighted by
//! normalized reading magnitudes), the force as the regression-mapped
//! average over the neighbourhood, and the torque `tau = p_cop x f`.
//!
//! The synthetic reading model spreads the applied force over the array
//! with a Gaussian spatial kernel whose gain is calibrated so the mapped
//! average over the estimator's neighbourhood reproduces the applied force,
//! which is what the hardware press-and-release calibration achieves.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const SENSOR_COUNT: usize = 17;

/// Fixed sensor layout plus the neighbour count the estimator uses.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    /// Sensor positions in the fingertip frame (m), origin at the cap's
    /// sphere centre, apex along +z.
    pub positions: [Vector3<f64>; SENSOR_COUNT],
    /// Cap radius (m).
    pub radius: f64,
    /// Surrounding sensors used by the estimator (1..=16).
    pub neighbor_count: usize,
}

impl ArrayGeometry {
    /// Hemispherical cap of radius 9 mm: apex plus rings of eight at 30 and
    /// 60 degrees polar angle (outer ring offset half a pitch).
    pub fn hemispherical(neighbor_count: usize) -> Result<Self> {
        if !(1..SENSOR_COUNT).contains(&neighbor_count) {
            return Err(Error::InvalidParam(format!(
                "neighbor count {neighbor_count} outside 1..=16"
            )));
        }
        let r = 0.009;
        let mut positions = [Vector3::zeros(); SENSOR_COUNT];
        positions[0] = Vector3::new(0.0, 0.0, r);
        let mut idx = 1;
        for (theta_deg, phi_offset_deg) in [(30.0_f64, 0.0_f64), (60.0, 22.5)] {
            let theta = theta_deg.to_radians();
            for i in 0..8 {
                let phi = (45.0 * i as f64 + phi_offset_deg).to_radians();
                positions[idx] = Vector3::new(
                    r * theta.sin() * phi.cos(),
                    r * theta.sin() * phi.sin(),
                    r * theta.cos(),
                );
                idx += 1;
            }
        }
        Ok(Self {
            positions,
            radius: r,
            neighbor_count,
        })
    }

    /// Point on the cap surface at polar angle `theta` and azimuth `phi`
    /// (radians).
    pub fn surface_point(&self, theta: f64, phi: f64) -> Vector3<f64> {
        Vector3::new(
            self.radius * theta.sin() * phi.cos(),
            self.radius * theta.sin() * phi.sin(),
            self.radius * theta.cos(),
        )
    }

    /// Largest nearest-neighbour distance over the array; the estimator's
    /// worst-case localization cell.
    pub fn spacing(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, pi) in self.positions.iter().enumerate() {
            let mut nearest = f64::INFINITY;
            for (j, pj) in self.positions.iter().enumerate() {
                if i != j {
                    nearest = nearest.min((pi - pj).norm());
                }
            }
            worst = worst.max(nearest);
        }
        worst
    }

    /// Indices of `self.neighbor_count` sensors nearest to sensor `center`
    /// (excluding it), in increasing distance.
    fn neighbors_of(&self, center: usize) -> Vec<usize> {
        let mut others: Vec<usize> = (0..SENSOR_COUNT).filter(|&j| j != center).collect();
        others.sort_by(|&a, &b| {
            let da = (self.positions[a] - self.positions[center]).norm();
            let db = (self.positions[b] - self.positions[center]).norm();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        others.truncate(self.neighbor_count);
        others
    }

    /// Index of the sensor nearest to a surface point.
    fn nearest_sensor(&self, point: &Vector3<f64>) -> usize {
        (0..SENSOR_COUNT)
            .min_by(|&a, &b| {
                let da = (self.positions[a] - point).norm();
                let db = (self.positions[b] - point).norm();
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })
            .expect("array is non-empty")
    }
}

/// Per-axis affine map from deformation readings to forces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionModel {
    pub slope: Vector3<f64>,
    pub intercept: Vector3<f64>,
    /// Per-axis RMS residual of the fit.
    pub residual_rms: Vector3<f64>,
}

impl RegressionModel {
    pub fn new(slope: Vector3<f64>, intercept: Vector3<f64>) -> Result<Self> {
        if slope.iter().any(|s| !s.is_finite()) || intercept.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParam("regression parameters must be finite".into()));
        }
        if slope[2] == 0.0 {
            return Err(Error::InvalidParam("normal-axis slope must be nonzero".into()));
        }
        Ok(Self {
            slope,
            intercept,
            residual_rms: Vector3::zeros(),
        })
    }

    /// Map one deformation reading to a force.
    pub fn force_from(&self, reading: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            self.slope[0] * reading[0] + self.intercept[0],
            self.slope[1] * reading[1] + self.intercept[1],
            self.slope[2] * reading[2] + self.intercept[2],
        )
    }

    /// Inverse map: deformation producing a given force.
    pub fn deformation_for(&self, force: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            (force[0] - self.intercept[0]) / self.slope[0],
            (force[1] - self.intercept[1]) / self.slope[1],
            (force[2] - self.intercept[2]) / self.slope[2],
        )
    }
}

/// One frame of readings from the array.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileArray {
    pub geometry: ArrayGeometry,
    pub readings: [Vector3<f64>; SENSOR_COUNT],
}

/// Synthesize readings for a contact at `contact_point` (fingertip frame,
/// on the cap) carrying `force`. Each sensor sees the inverse-regression
/// deformation attenuated by a Gaussian kernel of width `kernel_width`,
/// plus i.i.d. noise of standard deviation `noise_std`. The kernel gain is
/// normalized over the estimator's neighbourhood of the nearest sensor.
pub fn synth_readings<R: Rng>(
    contact_point: &Vector3<f64>,
    force: &Vector3<f64>,
    geometry: &ArrayGeometry,
    model: &RegressionModel,
    kernel_width: f64,
    noise_std: f64,
    rng: &mut R,
) -> Result<TactileArray> {
    if kernel_width <= 0.0 {
        return Err(Error::InvalidParam("kernel width must be > 0".into()));
    }
    if noise_std < 0.0 {
        return Err(Error::InvalidParam("noise std must be >= 0".into()));
    }
    let deformation = model.deformation_for(force);

    let weight = |i: usize| {
        let d = (geometry.positions[i] - contact_point).norm();
        (-d * d / (2.0 * kernel_width * kernel_width)).exp()
    };

    // Gain calibration: mean kernel weight over the neighbourhood the
    // estimator will select for this contact.
    let center = geometry.nearest_sensor(contact_point);
    let mut hood = geometry.neighbors_of(center);
    hood.push(center);
    let mean_w: f64 = hood.iter().map(|&i| weight(i)).sum::<f64>() / hood.len() as f64;
    if mean_w <= 0.0 {
        return Err(Error::Degenerate("kernel vanished over the whole array".into()));
    }

    let noise = if noise_std > 0.0 {
        Some(Normal::new(0.0, noise_std).expect("noise_std validated"))
    } else {
        None
    };

    let mut readings = [Vector3::zeros(); SENSOR_COUNT];
    for (i, reading) in readings.iter_mut().enumerate() {
        let w = weight(i) / mean_w;
        let mut r = deformation * w;
        if let Some(n) = &noise {
            r += Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        }
        *reading = r;
    }
    Ok(TactileArray {
        geometry: geometry.clone(),
        readings,
    })
}

/// Per-axis least squares. Returns the fitted model with residual
/// statistics; errors out when any axis has (near-)constant deformations.
pub fn fit_regression(
    deformations: &[Vector3<f64>],
    forces: &[Vector3<f64>],
) -> Result<RegressionModel> {
    if deformations.len() != forces.len() {
        return Err(Error::Dimension("sample counts disagree".into()));
    }
    if deformations.len() < 2 {
        return Err(Error::Degenerate("need at least two samples".into()));
    }
    let n = deformations.len() as f64;
    let mut slope = Vector3::zeros();
    let mut intercept = Vector3::zeros();
    let mut residual = Vector3::zeros();
    for axis in 0..3 {
        let xs: Vec<f64> = deformations.iter().map(|d| d[axis]).collect();
        let ys: Vec<f64> = forces.iter().map(|f| f[axis]).collect();
        let x_mean = xs.iter().sum::<f64>() / n;
        let y_mean = ys.iter().sum::<f64>() / n;
        let var: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
        let scale: f64 = xs.iter().map(|x| x * x).sum::<f64>().max(1.0);
        if var <= 1e-14 * scale {
            return Err(Error::Degenerate(format!(
                "axis {axis} deformations are constant"
            )));
        }
        let cov: f64 = xs
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| (x - x_mean) * (y - y_mean))
            .sum();
        slope[axis] = cov / var;
        intercept[axis] = y_mean - slope[axis] * x_mean;
        residual[axis] = (xs
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| (y - slope[axis] * x - intercept[axis]).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
    }
    let mut model = RegressionModel::new(slope, intercept)?;
    model.residual_rms = residual;
    Ok(model)
}

/// Calibration CSV ingestion: header
/// `t,deformation_x,deformation_y,deformation_z,force_x,force_y,force_z`
/// then one sample per row.
pub type CalibrationSamples = (Vec<Vector3<f64>>, Vec<Vector3<f64>>);

pub fn load_calibration_csv(content: &str) -> Result<CalibrationSamples> {
    let mut lines = content.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty calibration file".into()))?;
    let expected = "t,deformation_x,deformation_y,deformation_z,force_x,force_y,force_z";
    if header.trim() != expected {
        return Err(Error::Parse(format!(
            "calibration header must be '{expected}', got '{}'",
            header.trim()
        )));
    }
    let mut deformations = Vec::new();
    let mut forces = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse(format!(
                "calibration line {}: expected 7 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let mut vals = [0.0; 7];
        for (i, f) in fields.iter().enumerate() {
            vals[i] = f.trim().parse::<f64>().map_err(|e| {
                Error::Parse(format!("calibration line {}: {e}", lineno + 2))
            })?;
        }
        deformations.push(Vector3::new(vals[1], vals[2], vals[3]));
        forces.push(Vector3::new(vals[4], vals[5], vals[6]));
    }
    Ok((deformations, forces))
}

/// Estimated contact point, force and torque in the fingertip frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEstimate {
    pub p_cop: Vector3<f64>,
    pub f_c: Vector3<f64>,
    pub tau_c: Vector3<f64>,
}

/// Estimator outcome: no contact is distinct from a zero-force contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContactReading {
    NoContact,
    Contact(ContactEstimate),
}

/// Center-of-pressure contact estimation: strongest sensor plus its
/// `neighbor_count` nearest neighbours, weights normalized to sum to one.
/// The detection threshold is `3 * noise_std` (with a tiny absolute floor
/// so a silent array reads as no contact).
pub fn estimate_contact(
    array: &TactileArray,
    model: &RegressionModel,
    noise_std: f64,
) -> ContactReading {
    let threshold = (3.0 * noise_std).max(1e-12);
    let magnitudes: Vec<f64> = array.readings.iter().map(|r| r.norm()).collect();
    let best = (0..SENSOR_COUNT)
        .max_by(|&a, &b| magnitudes[a].partial_cmp(&magnitudes[b]).unwrap().then(b.cmp(&a)))
        .expect("array is non-empty");
    if magnitudes[best] <= threshold {
        return ContactReading::NoContact;
    }

    let mut selection = vec![best];
    selection.extend(array.geometry.neighbors_of(best));

    let total: f64 = selection.iter().map(|&i| magnitudes[i]).sum();
    let mut p_cop = Vector3::zeros();
    for &i in &selection {
        p_cop += (magnitudes[i] / total) * array.geometry.positions[i];
    }

    let mut f_c = Vector3::zeros();
    for &i in &selection {
        f_c += model.force_from(&array.readings[i]);
    }
    f_c /= selection.len() as f64;

    ContactReading::Contact(ContactEstimate {
        p_cop,
        f_c,
        tau_c: p_cop.cross(&f_c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn geometry() -> ArrayGeometry {
        ArrayGeometry::hemispherical(4).unwrap()
    }

    fn unit_model() -> RegressionModel {
        RegressionModel::new(Vector3::new(2.0, 2.0, 3.0), Vector3::zeros()).unwrap()
    }

    #[test]
    fn layout_has_17_sensors_on_the_cap() {
        let g = geometry();
        assert_eq!(g.positions.len(), SENSOR_COUNT);
        for p in &g.positions {
            assert_relative_eq!(p.norm(), g.radius, epsilon = 1e-12);
        }
        assert!(ArrayGeometry::hemispherical(0).is_err());
        assert!(ArrayGeometry::hemispherical(17).is_err());
        // spacing is a few millimetres on a 9 mm cap
        assert!(g.spacing() > 0.002 && g.spacing() < 0.008, "spacing {}", g.spacing());
    }

    #[test]
    fn delta_kernel_hits_single_sensor() {
        let g = geometry();
        let m = unit_model();
        let mut rng = StdRng::seed_from_u64(1);
        let force = Vector3::new(0.1, 0.0, -2.0);
        let arr = synth_readings(&g.positions[3], &force, &g, &m, 1e-5, 0.0, &mut rng).unwrap();
        for (i, r) in arr.readings.iter().enumerate() {
            if i == 3 {
                assert!(r.norm() > 0.0);
            } else {
                assert!(r.norm() <= 1e-12, "sensor {i} leaked {}", r.norm());
            }
        }
        // single nonzero sensor: COP is that sensor's position exactly, and
        // the calibrated gain makes the mapped average reproduce the force
        match estimate_contact(&arr, &m, 0.0) {
            ContactReading::Contact(e) => {
                assert_relative_eq!((e.p_cop - g.positions[3]).norm(), 0.0, epsilon = 1e-12);
                assert_relative_eq!((e.f_c - force).norm(), 0.0, epsilon = 1e-9);
                assert_relative_eq!((e.tau_c - e.p_cop.cross(&e.f_c)).norm(), 0.0);
            }
            ContactReading::NoContact => panic!("contact expected"),
        }
    }

    #[test]
    fn zero_force_is_no_contact_noiseless() {
        let g = geometry();
        let m = unit_model();
        let mut rng = StdRng::seed_from_u64(2);
        let arr =
            synth_readings(&g.positions[0], &Vector3::zeros(), &g, &m, 0.003, 0.0, &mut rng)
                .unwrap();
        assert!(matches!(estimate_contact(&arr, &m, 0.0), ContactReading::NoContact));
    }

    #[test]
    fn readings_scale_linearly_with_force() {
        let g = geometry();
        let m = unit_model();
        let mut rng = StdRng::seed_from_u64(3);
        let p = g.surface_point(0.4, 1.0);
        let f1 = Vector3::new(0.2, 0.1, -1.5);
        let a1 = synth_readings(&p, &f1, &g, &m, 0.004, 0.0, &mut rng).unwrap();
        let a2 = synth_readings(&p, &(2.0 * f1), &g, &m, 0.004, 0.0, &mut rng).unwrap();
        for i in 0..SENSOR_COUNT {
            assert_relative_eq!((a2.readings[i] - 2.0 * a1.readings[i]).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_equal_sensors_give_midpoint() {
        let g = geometry();
        let m = unit_model();
        let mut arr = TactileArray {
            geometry: g.clone(),
            readings: [Vector3::zeros(); SENSOR_COUNT],
        };
        // sensors 1 and 2 are adjacent on the inner ring
        arr.readings[1] = Vector3::new(0.0, 0.0, 1.0);
        arr.readings[2] = Vector3::new(0.0, 0.0, 1.0);
        match estimate_contact(&arr, &m, 0.0) {
            ContactReading::Contact(e) => {
                let midpoint = 0.5 * (g.positions[1] + g.positions[2]);
                assert!((e.p_cop - midpoint).norm() <= 1e-12);
            }
            ContactReading::NoContact => panic!("contact expected"),
        }
    }

    #[test]
    fn weights_normalize_and_torque_identity() {
        let g = geometry();
        let m = unit_model();
        let mut rng = StdRng::seed_from_u64(5);
        for trial in 0..50 {
            let theta = 0.1 + 0.07 * trial as f64 % 1.2;
            let phi = 0.37 * trial as f64;
            let p = g.surface_point(theta, phi);
            let f = Vector3::new(0.3, -0.2, -2.0);
            let arr = synth_readings(&p, &f, &g, &m, 0.0035, 0.001, &mut rng).unwrap();
            if let ContactReading::Contact(e) = estimate_contact(&arr, &m, 0.001) {
                // COP inside the convex hull implies |p_cop| <= radius
                assert!(e.p_cop.norm() <= g.radius + 1e-12);
                assert_relative_eq!((e.tau_c - e.p_cop.cross(&e.f_c)).norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn noiseless_sweep_localizes_and_recovers_force() {
        let g = geometry();
        let m = unit_model();
        let mut rng = StdRng::seed_from_u64(7);
        let half_spacing = g.spacing() / 2.0;
        let force = Vector3::new(0.25, 0.1, -2.0);
        // sweep the sensed cap region (the outer ring sits at 60 degrees)
        let mut worst_cop = 0.0_f64;
        let mut worst_force = 0.0_f64;
        for i in 0..=60 {
            let theta = 1.0 * i as f64 / 60.0;
            for phi_step in 0..24 {
                let phi = 0.2618 * phi_step as f64;
                let p = g.surface_point(theta, phi);
                let arr = synth_readings(&p, &force, &g, &m, 0.002, 0.0, &mut rng).unwrap();
                match estimate_contact(&arr, &m, 0.0) {
                    ContactReading::Contact(e) => {
                        worst_cop = worst_cop.max((e.p_cop - p).norm());
                        worst_force =
                            worst_force.max((e.f_c - force).norm() / force.norm());
                    }
                    ContactReading::NoContact => panic!("sweep point lost contact"),
                }
            }
        }
        assert!(
            worst_cop <= half_spacing,
            "worst COP error {worst_cop} > {half_spacing}"
        );
        assert!(worst_force <= 0.02, "worst force error {worst_force}");
    }

    #[test]
    fn regression_fits_exact_line() {
        let xs: Vec<Vector3<f64>> = (0..10)
            .map(|i| Vector3::new(i as f64, 0.5 * i as f64, -0.2 * i as f64))
            .collect();
        let ys: Vec<Vector3<f64>> = xs
            .iter()
            .map(|x| Vector3::new(3.0 * x[0] + 1.0, 2.0 * x[1] - 0.5, -4.0 * x[2] + 0.25))
            .collect();
        let m = fit_regression(&xs, &ys).unwrap();
        assert_relative_eq!(m.slope[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(m.intercept[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.slope[2], -4.0, epsilon = 1e-12);
        assert!(m.residual_rms.norm() <= 1e-12);
    }

    #[test]
    fn regression_round_trips_synth_model() {
        // generate deformation/force pairs through the synth mapping with no
        // noise and recover the model parameters
        let truth = RegressionModel::new(Vector3::new(2.0, 2.5, 3.0), Vector3::zeros()).unwrap();
        let mut defs = Vec::new();
        let mut forces = Vec::new();
        for i in 1..=20 {
            let f = Vector3::new(0.05 * i as f64, -0.04 * i as f64, -0.3 * i as f64);
            defs.push(truth.deformation_for(&f));
            forces.push(f);
        }
        let fit = fit_regression(&defs, &forces).unwrap();
        assert!((fit.slope - truth.slope).norm() <= 1e-8);
        assert!((fit.intercept - truth.intercept).norm() <= 1e-8);
    }

    #[test]
    fn regression_error_shrinks_with_samples() {
        let truth_slope = 3.0;
        let gen = |n: usize, seed: u64| -> f64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let noise = Normal::new(0.0, 0.5).unwrap();
            let mut defs = Vec::new();
            let mut forces = Vec::new();
            for i in 0..n {
                let x = i as f64 / n as f64 * 10.0;
                let y = truth_slope * x + noise.sample(&mut rng);
                defs.push(Vector3::new(x, x, x));
                forces.push(Vector3::new(y, y, y));
            }
            let m = fit_regression(&defs, &forces).unwrap();
            (m.slope[0] - truth_slope).abs()
        };
        // Monte-Carlo average over a few seeds
        let err10: f64 = (0..20).map(|s| gen(10, s)).sum::<f64>() / 20.0;
        let err1000: f64 = (0..20).map(|s| gen(1000, s)).sum::<f64>() / 20.0;
        assert!(
            err1000 < err10,
            "slope error should shrink: N=10 gives {err10}, N=1000 gives {err1000}"
        );
    }

    #[test]
    fn degenerate_deformations_error() {
        let defs = vec![Vector3::new(1.0, 1.0, 1.0); 5];
        let forces: Vec<Vector3<f64>> = (0..5)
            .map(|i| Vector3::new(i as f64, i as f64, i as f64))
            .collect();
        assert!(matches!(fit_regression(&defs, &forces), Err(Error::Degenerate(_))));
    }

    #[test]
    fn calibration_csv_round_trip() {
        let csv = "t,deformation_x,deformation_y,deformation_z,force_x,force_y,force_z\n\
                   0.0,0.1,0.2,0.3,1.0,2.0,3.0\n\
                   0.1,0.2,0.4,0.6,2.0,4.0,6.0\n";
        let (defs, forces) = load_calibration_csv(csv).unwrap();
        assert_eq!(defs.len(), 2);
        assert_relative_eq!(defs[1][2], 0.6);
        assert_relative_eq!(forces[0][1], 2.0);

        assert!(load_calibration_csv("bad,header\n1,2\n").is_err());
        assert!(load_calibration_csv(
            "t,deformation_x,deformation_y,deformation_z,force_x,force_y,force_z\n0.0,1.0\n"
        )
        .is_err());
    }
}
