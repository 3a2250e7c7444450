//! Analytic benchmark functions, organized as level pairs.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

/// Built-in benchmark functions. Naming: `Ex<example><level>` with the
/// example-three variants distinguished by their transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    Ex1L1,
    Ex1L2,
    Ex2CorrL1,
    Ex2CorrL2,
    Ex2UncorrL1,
    Ex2UncorrL2,
    Ex3L1,
    Ex3L2Shift,
    Ex3L2Tilt,
    Ex3L2Stretch,
}

impl TestFunction {
    pub fn dim(self) -> usize {
        match self {
            TestFunction::Ex3L1
            | TestFunction::Ex3L2Shift
            | TestFunction::Ex3L2Tilt
            | TestFunction::Ex3L2Stretch => 1,
            _ => 2,
        }
    }

    /// Per-dimension closed input domain `[lo, hi]`.
    pub fn domain(self) -> (f64, f64) {
        if self.dim() == 1 {
            (0.0, 10.0)
        } else {
            (0.0, 1.0)
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Ex1L1 => "ex1-l1",
            TestFunction::Ex1L2 => "ex1-l2",
            TestFunction::Ex2CorrL1 => "ex2-corr-l1",
            TestFunction::Ex2CorrL2 => "ex2-corr-l2",
            TestFunction::Ex2UncorrL1 => "ex2-uncorr-l1",
            TestFunction::Ex2UncorrL2 => "ex2-uncorr-l2",
            TestFunction::Ex3L1 => "ex3-l1",
            TestFunction::Ex3L2Shift => "ex3-l2-shift",
            TestFunction::Ex3L2Tilt => "ex3-l2-tilt",
            TestFunction::Ex3L2Stretch => "ex3-l2-stretch",
        }
    }

    /// Evaluate at one in-domain point.
    pub fn eval(self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "test function input",
                expected: self.dim(),
                got: x.len(),
            });
        }
        let (lo, hi) = self.domain();
        for &v in x {
            if !(v >= lo - 1e-12 && v <= hi + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "input {v} outside the domain [{lo}, {hi}] of {}",
                    self.name()
                )));
            }
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Ex1L1 => ex1_l1(x[0], x[1]),
            TestFunction::Ex1L2 => ex1_l1(x[0], x[1]) + ex1_gap(x[0], x[1]),
            TestFunction::Ex2CorrL1 => ex1_l1(x[0], x[1]) + (4.0 * PI * x[0] * x[1]).cos(),
            TestFunction::Ex2CorrL2 | TestFunction::Ex2UncorrL2 => {
                ex1_l1(x[0], x[1]) + ex1_gap(x[0], x[1])
            }
            TestFunction::Ex2UncorrL1 => {
                let (a, b) = (x[0], x[1]);
                (4.0 * a.powi(3) - a * b.powi(4)) / (a * b).exp().powi(2) - 2.0
            }
            TestFunction::Ex3L1 => ex3_l1(x[0]),
            TestFunction::Ex3L2Shift => ex3_l1(x[0]) + 4.0,
            TestFunction::Ex3L2Tilt => ex3_l1(x[0]) + 2.0 * x[0],
            TestFunction::Ex3L2Stretch => ex3_l1(x[0]) + 4.0 * (x[0] / 2.0).sin(),
        }
    }

    /// Evaluate at every row of a design.
    pub fn eval_design(self, x: &DesignMatrix) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(x.nrows());
        for (i, row) in x.rows_iter().enumerate() {
            out[i] = self.eval(row)?;
        }
        Ok(out)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let all = [
            TestFunction::Ex1L1,
            TestFunction::Ex1L2,
            TestFunction::Ex2CorrL1,
            TestFunction::Ex2CorrL2,
            TestFunction::Ex2UncorrL1,
            TestFunction::Ex2UncorrL2,
            TestFunction::Ex3L1,
            TestFunction::Ex3L2Shift,
            TestFunction::Ex3L2Tilt,
            TestFunction::Ex3L2Stretch,
        ];
        all.into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown test function '{s}'")))
    }
}

fn ex1_l1(x1: f64, x2: f64) -> f64 {
    (x1 * x2).powi(2) + (2.0 * PI * x1).sin()
}

/// Difference between the two levels of example one.
fn ex1_gap(x1: f64, x2: f64) -> f64 {
    2.0 * x2 * ((4.0 * PI * x1 * x2).cos() + x1 * x1 - x1 * x2)
}

fn ex3_l1(x: f64) -> f64 {
    x * x.sin() + x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn spot_values() {
        assert_relative_eq!(
            TestFunction::Ex1L1.eval(&[0.5, 0.5]).unwrap(),
            0.0625,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            TestFunction::Ex1L2.eval(&[0.5, 0.5]).unwrap(),
            -0.9375,
            epsilon = 1e-12
        );
        assert_relative_eq!(TestFunction::Ex3L1.eval(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn shift_is_level_one_plus_four() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let x = rng.random::<f64>() * 10.0;
            let l1 = TestFunction::Ex3L1.eval(&[x]).unwrap();
            let l2 = TestFunction::Ex3L2Shift.eval(&[x]).unwrap();
            assert_relative_eq!(l2, l1 + 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn out_of_domain_rejected() {
        assert!(TestFunction::Ex1L1.eval(&[1.2, 0.4]).is_err());
        assert!(TestFunction::Ex3L1.eval(&[-0.5]).is_err());
    }

    /// Independent transcription check of every formula at random points.
    #[test]
    fn matches_manual_evaluation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
            let f1 = (a * b) * (a * b) + (2.0 * PI * a).sin();
            let gap = 2.0 * b * ((4.0 * PI * a * b).cos() + a * a - a * b);
            assert_relative_eq!(
                TestFunction::Ex1L1.eval(&[a, b]).unwrap(),
                f1,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                TestFunction::Ex1L2.eval(&[a, b]).unwrap(),
                f1 + gap,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                TestFunction::Ex2CorrL1.eval(&[a, b]).unwrap(),
                f1 + (4.0 * PI * a * b).cos(),
                epsilon = 1e-12
            );
            assert_relative_eq!(
                TestFunction::Ex2UncorrL1.eval(&[a, b]).unwrap(),
                (4.0 * a * a * a - a * b * b * b * b) * (-2.0 * a * b).exp() - 2.0,
                epsilon = 1e-12
            );
            let x = 10.0 * rng.random::<f64>();
            assert_relative_eq!(
                TestFunction::Ex3L2Tilt.eval(&[x]).unwrap(),
                x * x.sin() + x + 2.0 * x,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                TestFunction::Ex3L2Stretch.eval(&[x]).unwrap(),
                x * x.sin() + x + 4.0 * (0.5 * x).sin(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn parse_round_trip() {
        for name in ["ex1-l1", "ex2-uncorr-l2", "ex3-l2-stretch"] {
            assert_eq!(TestFunction::parse(name).unwrap().name(), name);
        }
        assert!(TestFunction::parse("nope").is_err());
    }
}
