//! Simulation trace records and their CSV serialization.
//!
//! Column order is fixed:
//! `t,p,p_dot,f_c,f_c_est,u_nom,u_safe,h1,h2,h3,h_max,d,d_hat,M_d,theta_hat_k,theta_hat_b,flags`.
//! Floats are printed with 17 significant digits so parsing an emitted
//! trace reproduces every field bit-exactly. `flags` is a bitmask:
//! 1 = QP infeasible (fallback applied), 2 = adaptation-gain eigenvalue
//! condition violated, 4 = singular finger Jacobian.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "t,p,p_dot,f_c,f_c_est,u_nom,u_safe,h1,h2,h3,h_max,d,d_hat,M_d,theta_hat_k,theta_hat_b,flags";

/// Per-step condition flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepFlags {
    pub infeasible: bool,
    pub gamma_condition: bool,
    pub singular_jacobian: bool,
}

impl StepFlags {
    pub fn bits(&self) -> u32 {
        (self.infeasible as u32) | (self.gamma_condition as u32) << 1
            | (self.singular_jacobian as u32) << 2
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        if bits > 7 {
            return Err(Error::Parse(format!("flag bits {bits} out of range")));
        }
        Ok(Self {
            infeasible: bits & 1 != 0,
            gamma_condition: bits & 2 != 0,
            singular_jacobian: bits & 4 != 0,
        })
    }

    pub fn any(&self) -> bool {
        self.bits() != 0
    }
}

/// One outer control step of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub p: f64,
    pub p_dot: f64,
    /// True contact force (signed, compressive negative).
    pub f_c: f64,
    /// Tactile estimate of the contact force fed to the filter.
    pub f_c_est: f64,
    /// Nominal input (plant convention).
    pub u_nom: f64,
    /// Filtered input actually applied.
    pub u_safe: f64,
    /// True barrier values at the step.
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h_max: f64,
    /// Total disturbance (exogenous plus parametric-mismatch equivalent).
    pub d: f64,
    pub d_hat: f64,
    pub m_d: f64,
    pub theta_hat_k: f64,
    pub theta_hat_b: f64,
    pub flags: StepFlags,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl TraceRecord {
    pub fn to_csv_line(&self) -> String {
        let fields = [
            self.t,
            self.p,
            self.p_dot,
            self.f_c,
            self.f_c_est,
            self.u_nom,
            self.u_safe,
            self.h1,
            self.h2,
            self.h3,
            self.h_max,
            self.d,
            self.d_hat,
            self.m_d,
            self.theta_hat_k,
            self.theta_hat_b,
        ];
        let mut line = fields.map(fmt_f64).join(",");
        line.push(',');
        line.push_str(&self.flags.bits().to_string());
        line
    }

    pub fn from_csv_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 17 {
            return Err(Error::Parse(format!(
                "trace line has {} fields, expected 17",
                fields.len()
            )));
        }
        let mut vals = [0.0_f64; 16];
        for (i, f) in fields[..16].iter().enumerate() {
            vals[i] = f
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("field {i}: {e}")))?;
        }
        let flags = StepFlags::from_bits(
            fields[16]
                .parse::<u32>()
                .map_err(|e| Error::Parse(format!("flags: {e}")))?,
        )?;
        Ok(Self {
            t: vals[0],
            p: vals[1],
            p_dot: vals[2],
            f_c: vals[3],
            f_c_est: vals[4],
            u_nom: vals[5],
            u_safe: vals[6],
            h1: vals[7],
            h2: vals[8],
            h3: vals[9],
            h_max: vals[10],
            d: vals[11],
            d_hat: vals[12],
            m_d: vals[13],
            theta_hat_k: vals[14],
            theta_hat_b: vals[15],
            flags,
        })
    }

    /// Bitwise equality across every float field (NaN-tolerant).
    pub fn bit_eq(&self, other: &Self) -> bool {
        let a = [
            self.t, self.p, self.p_dot, self.f_c, self.f_c_est, self.u_nom, self.u_safe,
            self.h1, self.h2, self.h3, self.h_max, self.d, self.d_hat, self.m_d,
            self.theta_hat_k, self.theta_hat_b,
        ];
        let b = [
            other.t, other.p, other.p_dot, other.f_c, other.f_c_est, other.u_nom,
            other.u_safe, other.h1, other.h2, other.h3, other.h_max, other.d, other.d_hat,
            other.m_d, other.theta_hat_k, other.theta_hat_b,
        ];
        a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
            && self.flags == other.flags
    }
}

pub fn write_csv<W: Write>(records: &[TraceRecord], out: &mut W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.to_csv_line())?;
    }
    Ok(())
}

pub fn to_csv_string(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("in-memory write cannot fail");
    String::from_utf8(buf).expect("trace CSV is UTF-8")
}

pub fn write_csv_path(records: &[TraceRecord], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_csv(records, &mut file)?;
    Ok(())
}

pub fn read_csv(content: &str) -> Result<Vec<TraceRecord>> {
    let mut lines = content.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        Some(h) => {
            return Err(Error::Parse(format!(
                "unexpected trace header '{}'",
                h.trim()
            )))
        }
        None => return Err(Error::Parse("empty trace file".into())),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(TraceRecord::from_csv_line)
        .collect()
}

pub fn read_csv_path(path: &Path) -> Result<Vec<TraceRecord>> {
    read_csv(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_record() -> TraceRecord {
        TraceRecord {
            t: 0.008,
            p: 0.0123456789012345,
            p_dot: -0.5,
            f_c: -3.7,
            f_c_est: -3.699_999_999_999_999,
            u_nom: 4.0,
            u_safe: 3.2,
            h1: 2.3,
            h2: 1.45,
            h3: 0.55,
            h_max: 4.7,
            d: -0.8,
            d_hat: -0.79,
            m_d: 0.1,
            theta_hat_k: 180.0,
            theta_hat_b: 2.4,
            flags: StepFlags { infeasible: true, gamma_condition: false, singular_jacobian: true },
        }
    }

    #[test]
    fn header_and_line_round_trip() {
        let records = vec![sample_record()];
        let text = to_csv_string(&records);
        assert!(text.starts_with(CSV_HEADER));
        let back = read_csv(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert!(back[0].bit_eq(&records[0]));
    }

    #[test]
    fn flags_round_trip_all_combinations() {
        for bits in 0..8 {
            let f = StepFlags::from_bits(bits).unwrap();
            assert_eq!(f.bits(), bits);
        }
        assert!(StepFlags::from_bits(8).is_err());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(read_csv("").is_err());
        assert!(read_csv("wrong,header\n").is_err());
        let text = format!("{CSV_HEADER}\n1.0,2.0\n");
        assert!(read_csv(&text).is_err());
    }

    proptest! {
        /// 17-significant-digit formatting reproduces every f64 bit-exactly.
        #[test]
        fn csv_round_trip_is_bit_exact(
            t in -1e6_f64..1e6,
            p in proptest::num::f64::NORMAL,
            h in proptest::num::f64::ANY.prop_filter("finite", |v| v.is_finite()),
            bits in 0u32..8,
        ) {
            let mut r = sample_record();
            r.t = t;
            r.p = p;
            r.h2 = h;
            r.flags = StepFlags::from_bits(bits).unwrap();
            let line = r.to_csv_line();
            let back = TraceRecord::from_csv_line(&line).unwrap();
            prop_assert!(back.bit_eq(&r));
        }
    }
}
