//! Annealing protocols.
//!
//! The bifurcation protocol sweeps `B(t) = B0 (2t/t_f − 1)` from `−B0` to
//! `+B0` while the driver `A(t)` is either a Gaussian centred on `t_f/2`
//! or a constant. The transverse-field protocol interpolates linearly
//! between driver and problem with weights `(1 − t/t_f, t/t_f)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SIGMA2: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DriverProfile {
    /// `A(t) = a0 exp[−(2t/t_f − 1)² / (2 sigma2)]`, not truncated at the ends.
    Gaussian { a0: f64, sigma2: f64 },
    Constant { a0: f64 },
}

impl DriverProfile {
    pub fn a0(&self) -> f64 {
        match *self {
            DriverProfile::Gaussian { a0, .. } | DriverProfile::Constant { a0 } => a0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BqaSchedule {
    driver: DriverProfile,
    b0: f64,
    t_final: f64,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn check_time(t: f64, t_final: f64) -> Result<()> {
    if (0.0..=t_final).contains(&t) {
        Ok(())
    } else {
        Err(Error::invalid(format!("time {t} outside [0, {t_final}]")))
    }
}

impl BqaSchedule {
    pub fn new(driver: DriverProfile, b0: f64, t_final: f64) -> Result<Self> {
        match driver {
            DriverProfile::Gaussian { a0, sigma2 } => {
                positive("A0", a0)?;
                positive("sigma2", sigma2)?;
            }
            DriverProfile::Constant { a0 } => positive("A0", a0)?,
        }
        positive("B0", b0)?;
        positive("t_f", t_final)?;
        Ok(BqaSchedule { driver, b0, t_final })
    }

    pub fn gaussian(a0: f64, b0: f64, t_final: f64) -> Result<Self> {
        Self::new(
            DriverProfile::Gaussian {
                a0,
                sigma2: DEFAULT_SIGMA2,
            },
            b0,
            t_final,
        )
    }

    pub fn constant(a0: f64, b0: f64, t_final: f64) -> Result<Self> {
        Self::new(DriverProfile::Constant { a0 }, b0, t_final)
    }

    pub fn driver(&self) -> DriverProfile {
        self.driver
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Same protocol with a different annealing time.
    pub fn with_t_final(&self, t_final: f64) -> Result<Self> {
        Self::new(self.driver, self.b0, t_final)
    }

    /// `(A(t), B(t))`, checked against `[0, t_f]`.
    pub fn coefficients(&self, t: f64) -> Result<(f64, f64)> {
        check_time(t, self.t_final)?;
        Ok((self.a(t), self.b(t)))
    }

    pub(crate) fn a(&self, t: f64) -> f64 {
        match self.driver {
            DriverProfile::Gaussian { a0, sigma2 } => {
                let x = 2.0 * t / self.t_final - 1.0;
                a0 * (-x * x / (2.0 * sigma2)).exp()
            }
            DriverProfile::Constant { a0 } => a0,
        }
    }

    pub(crate) fn b(&self, t: f64) -> f64 {
        self.b0 * (2.0 * t / self.t_final - 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaSchedule {
    gamma: f64,
    t_final: f64,
}

impl QaSchedule {
    pub fn new(gamma: f64, t_final: f64) -> Result<Self> {
        positive("Gamma", gamma)?;
        positive("t_f", t_final)?;
        Ok(QaSchedule { gamma, t_final })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn with_t_final(&self, t_final: f64) -> Result<Self> {
        Self::new(self.gamma, t_final)
    }

    /// `(1 − t/t_f, t/t_f)`.
    pub fn weights(&self, t: f64) -> Result<(f64, f64)> {
        check_time(t, self.t_final)?;
        Ok((self.driver_weight(t), self.problem_weight(t)))
    }

    pub(crate) fn driver_weight(&self, t: f64) -> f64 {
        1.0 - t / self.t_final
    }

    pub(crate) fn problem_weight(&self, t: f64) -> f64 {
        t / self.t_final
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gaussian_examples() {
        let s = BqaSchedule::gaussian(1.0, 20.0, 100.0).unwrap();
        let (a, b) = s.coefficients(50.0).unwrap();
        assert_eq!(a, 1.0);
        assert_eq!(b, 0.0);
        let (a0, b0) = s.coefficients(0.0).unwrap();
        assert!((a0 - (-5.0f64).exp()).abs() < 1e-15);
        assert!((a0 - 0.006738).abs() < 1e-6);
        assert_eq!(b0, -20.0);
        assert_eq!(s.coefficients(100.0).unwrap().1, 20.0);
    }

    #[test]
    fn constant_driver() {
        let s = BqaSchedule::constant(0.7, 20.0, 10.0).unwrap();
        for t in [0.0, 1.3, 5.0, 10.0] {
            assert_eq!(s.coefficients(t).unwrap().0, 0.7);
        }
    }

    #[test]
    fn out_of_range_times_rejected() {
        let s = BqaSchedule::gaussian(1.0, 20.0, 10.0).unwrap();
        assert!(matches!(s.coefficients(-1e-9), Err(Error::InvalidArgument(_))));
        assert!(s.coefficients(10.0 + 1e-9).is_err());
        let q = QaSchedule::new(1.0, 10.0).unwrap();
        assert!(q.weights(11.0).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(BqaSchedule::gaussian(0.0, 20.0, 1.0).is_err());
        assert!(BqaSchedule::gaussian(1.0, -1.0, 1.0).is_err());
        assert!(BqaSchedule::constant(1.0, 20.0, 0.0).is_err());
        assert!(BqaSchedule::new(DriverProfile::Gaussian { a0: 1.0, sigma2: 0.0 }, 1.0, 1.0).is_err());
        assert!(QaSchedule::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn qa_weight_examples() {
        let q = QaSchedule::new(1.0, 8.0).unwrap();
        assert_eq!(q.weights(0.0).unwrap(), (1.0, 0.0));
        assert_eq!(q.weights(8.0).unwrap(), (0.0, 1.0));
        assert_eq!(q.weights(4.0).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn coefficients_are_continuous() {
        let s = BqaSchedule::gaussian(2.0, 20.0, 200.0).unwrap();
        let dt = 1e-7;
        let mut t = 0.0;
        while t + dt <= 200.0 {
            let (a1, b1) = s.coefficients(t).unwrap();
            let (a2, b2) = s.coefficients(t + dt).unwrap();
            assert!((a1 - a2).abs() < 1e-6 && (b1 - b2).abs() < 1e-6);
            t += 0.37;
        }
    }

    proptest! {
        #[test]
        fn symmetry_about_midpoint(tau in 0.0f64..1.0, a0 in 0.1f64..5.0, tf in 1.0f64..500.0) {
            let s = BqaSchedule::gaussian(a0, 20.0 * a0, tf).unwrap();
            let half = tf / 2.0;
            let d = tau * half;
            let (ap, bp) = s.coefficients(half + d).unwrap();
            let (am, bm) = s.coefficients(half - d).unwrap();
            prop_assert!((bp + bm).abs() < 1e-9 * s.b0());
            prop_assert!((ap - am).abs() < 1e-12 * a0);
        }

        #[test]
        fn qa_weights_partition_unity(frac in 0.0f64..=1.0, tf in 0.1f64..1000.0) {
            let q = QaSchedule::new(1.0, tf).unwrap();
            let (d, p) = q.weights(frac * tf).unwrap();
            prop_assert!((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&p));
            prop_assert!((d + p - 1.0).abs() < 1e-15);
        }
    }
}
