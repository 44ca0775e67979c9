//! Finite Blaschke products `b(z) = e^{i phi} prod (z - z_j) / (1 - conj(z_j) z)`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{BepError, Result};

/// Minimum separation below which two zeros count as coincident.
pub const ZERO_SEPARATION: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BlaschkeProduct {
    zeros: Vec<Complex64>,
    phase: f64,
}

impl BlaschkeProduct {
    pub fn new(zeros: Vec<Complex64>, phase: f64) -> Result<Self> {
        if !(0.0..=TAU).contains(&phase) {
            return Err(BepError::invalid(format!(
                "phase {phase} must lie in [0, 2pi]"
            )));
        }
        for (j, z) in zeros.iter().enumerate() {
            if !(z.norm() < 1.0) {
                return Err(BepError::invalid(format!(
                    "zero {j} = {z} is not inside the open unit disk"
                )));
            }
            if let Some(k) = zeros[..j]
                .iter()
                .position(|w| (w - z).norm() <= ZERO_SEPARATION)
            {
                return Err(BepError::invalid(format!(
                    "zeros {k} and {j} coincide; repeated zeros are not supported"
                )));
            }
        }
        Ok(Self { zeros, phase })
    }

    /// The constant `e^{i phase}` product with no zeros.
    pub fn unit(phase: f64) -> Result<Self> {
        Self::new(Vec::new(), phase)
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.zeros
            .iter()
            .fold(Complex64::from_polar(1.0, self.phase), |acc, &zj| {
                acc * (z - zj) / (1.0 - zj.conj() * z)
            })
    }

    /// `b(e^{i theta})`.
    pub fn boundary(&self, theta: f64) -> Complex64 {
        self.eval(Complex64::from_polar(1.0, theta))
    }

    /// `conj(b(e^{i theta}))`, equal to `1 / b` on the circle.
    pub fn boundary_conj(&self, theta: f64) -> Complex64 {
        self.boundary(theta).conj()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn table_zeros() -> Vec<Complex64> {
        vec![c(0.5, 0.4), c(-0.3, 0.3), c(0.2, 0.6), c(0.2, -0.5), c(0.8, -0.1)]
    }

    #[test]
    fn single_zero_at_origin_is_identity_map() {
        let b = BlaschkeProduct::new(vec![c(0.0, 0.0)], 0.0).unwrap();
        assert!((b.eval(c(0.3, 0.1)) - c(0.3, 0.1)).norm() < 1e-15);
        let t = 0.83;
        assert!((b.boundary_conj(t) - Complex64::from_polar(1.0, -t)).norm() < 1e-15);
    }

    #[test]
    fn vanishes_at_zeros() {
        let b = BlaschkeProduct::new(table_zeros(), 0.0).unwrap();
        for z in table_zeros() {
            assert!(b.eval(z).norm() < 1e-15);
        }
    }

    #[test]
    fn unimodular_on_circle() {
        let b = BlaschkeProduct::new(table_zeros(), 1.3).unwrap();
        assert!((b.boundary(std::f64::consts::PI / 7.0).norm() - 1.0).abs() < 1e-12);
        for n in 0..1000 {
            let t = TAU * n as f64 / 1000.0;
            let v = b.boundary(t);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!((v * b.boundary_conj(t) - 1.0).norm() < 1e-12);
            assert!((b.boundary_conj(t) - 1.0 / v).norm() < 1e-12);
        }
    }

    #[test]
    fn real_zero_at_one() {
        let b = BlaschkeProduct::new(vec![c(0.5, 0.0)], 0.0).unwrap();
        assert!((b.boundary_conj(0.0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert!(BlaschkeProduct::new(vec![c(1.0, 0.0)], 0.0).is_err());
        assert!(BlaschkeProduct::new(vec![c(0.1, 0.0), c(0.1, 0.0)], 0.0).is_err());
        assert!(BlaschkeProduct::new(vec![], 7.0).is_err());
        assert!(BlaschkeProduct::new(vec![c(f64::NAN, 0.0)], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn bounded_in_disk(r in 0.0f64..=1.0, t in 0.0f64..TAU) {
            let b = BlaschkeProduct::new(table_zeros(), 0.4).unwrap();
            prop_assert!(b.eval(Complex64::from_polar(r, t)).norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn product_of_factors(r in 0.0f64..1.0, t in 0.0f64..TAU) {
            let z = Complex64::from_polar(r, t);
            let whole = BlaschkeProduct::new(table_zeros(), 0.0).unwrap().eval(z);
            let parts = table_zeros()
                .into_iter()
                .map(|zj| BlaschkeProduct::new(vec![zj], 0.0).unwrap().eval(z))
                .fold(c(1.0, 0.0), |a, v| a * v);
            prop_assert!((whole - parts).norm() < 1e-13);
        }
    }
}
