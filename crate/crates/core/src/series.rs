//! Power series of the discrepancy `M0^2(mu)` and error `e(mu)` about
//! `mu = 0`, driven by the moments `F(k) = <A^k xi0, xi0>`.

use num_complex::Complex64;

use crate::error::{BepError, Result};
use crate::fourier::FourierPoly;
use crate::solver::Problem;

pub const DEFAULT_MAX_ORDER: usize = 512;

/// `xi0 = A (s_I + s_J) - s_J`.
pub fn compute_xi0(problem: &Problem) -> Result<FourierPoly> {
    let (s_i, s_j) = problem.rhs_parts();
    let s0: Vec<Complex64> = s_i.iter().zip(s_j).map(|(a, b)| a + b).collect();
    let a_s0 = problem.toeplitz().apply_slice(&s0);
    FourierPoly::new(a_s0.iter().zip(s_j).map(|(a, b)| a - b).collect())
}

/// Moments with the values at `mu = 0` that anchor the series.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    moments: Vec<f64>,
    xi0: FourierPoly,
    base_e: f64,
    base_m0_sq: f64,
}

impl MomentTable {
    /// Table supporting series up to power `order` of `mu`.
    pub fn build(problem: &Problem, order: usize) -> Result<Self> {
        let xi0 = compute_xi0(problem)?;
        let moments = problem.toeplitz().power_moments(&xi0, order)?;
        let base = problem.solve_for_mu(0.0)?;
        Ok(Self {
            moments,
            xi0,
            base_e: base.e,
            base_m0_sq: base.m0_sq(),
        })
    }

    /// Highest power of `mu` available.
    pub fn order(&self) -> usize {
        self.moments.len() - 1
    }

    /// `F(0), ..., F(order)`.
    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    pub fn xi0(&self) -> &FourierPoly {
        &self.xi0
    }

    pub fn base_e(&self) -> f64 {
        self.base_e
    }

    pub fn base_m0_sq(&self) -> f64 {
        self.base_m0_sq
    }

    fn f(&self, k: isize) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.moments[k as usize]
        }
    }

    fn sign(p: usize) -> f64 {
        if p % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Coefficients of `mu^1, ..., mu^s` in the discrepancy series.
    pub fn m0_coefficients(&self, s: usize) -> Vec<f64> {
        (1..=s)
            .map(|p| Self::sign(p) * (p + 1) as f64 * self.f(p as isize - 1))
            .collect()
    }

    /// Coefficients of `mu^1, ..., mu^s` in the error series.
    pub fn e_coefficients(&self, s: usize) -> Vec<f64> {
        (1..=s)
            .map(|p| {
                let pi = p as isize;
                Self::sign(p - 1)
                    * ((p + 1) as f64 * self.f(pi - 1) - (p - 1) as f64 * self.f(pi - 2))
            })
            .collect()
    }

    fn check(&self, mu: f64, s: usize) -> Result<()> {
        if !(mu.abs() < 1.0) {
            return Err(BepError::OutOfDomain {
                what: "mu",
                value: mu,
                domain: "the disk of convergence |mu| < 1",
            });
        }
        if s > self.order() {
            return Err(BepError::invalid(format!(
                "series order {s} exceeds the {} moments in the table",
                self.order()
            )));
        }
        Ok(())
    }

    /// `M0^2(mu)` truncated at the full table order.
    pub fn m0_series(&self, mu: f64) -> Result<f64> {
        self.m0_series_order(mu, self.order())
    }

    /// `e(mu)` truncated at the full table order.
    pub fn e_series(&self, mu: f64) -> Result<f64> {
        self.e_series_order(mu, self.order())
    }

    pub fn m0_series_order(&self, mu: f64, s: usize) -> Result<f64> {
        self.check(mu, s)?;
        Ok(horner_shifted(self.base_m0_sq, &self.m0_coefficients(s), mu))
    }

    pub fn e_series_order(&self, mu: f64, s: usize) -> Result<f64> {
        self.check(mu, s)?;
        Ok(horner_shifted(self.base_e, &self.e_coefficients(s), mu))
    }
}

/// `base + c_1 mu + ... + c_s mu^s`; returns `base` unchanged at `mu = 0`.
fn horner_shifted(base: f64, coeffs: &[f64], mu: f64) -> f64 {
    let tail = coeffs.iter().rev().fold(0.0, |acc, &c| acc * mu + c);
    base + mu * tail
}

/// Outcome of [`calibrate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    /// Smallest adequate power of `mu`.
    pub order: usize,
    pub rel_error: f64,
    pub e_direct: f64,
    pub table: MomentTable,
}

/// Smallest order whose error series matches a direct solve at `mu0`.
pub fn calibrate(problem: &Problem, mu0: f64, tol: f64, max_order: usize) -> Result<Calibration> {
    if !(mu0 > -1.0 && mu0 <= 0.0) {
        return Err(BepError::OutOfDomain {
            what: "mu0",
            value: mu0,
            domain: "(-1, 0]",
        });
    }
    if !(tol > 0.0) {
        return Err(BepError::invalid(format!("tol = {tol} must be positive")));
    }
    let table = MomentTable::build(problem, max_order)?;
    let e_direct = problem.solve_for_mu(mu0)?.e;
    let mut best = (f64::INFINITY, 0);
    for s in 0..=max_order {
        let approx = table.e_series_order(mu0, s)?;
        let err = (approx - e_direct).abs();
        let rel = if e_direct > 0.0 { err / e_direct } else { err };
        if rel < best.0 {
            best = (rel, s);
        }
        if err <= tol * e_direct {
            return Ok(Calibration {
                order: s,
                rel_error: rel,
                e_direct,
                table,
            });
        }
    }
    Err(BepError::CalibrationFailure {
        best_error: best.0,
        best_order: best.1,
        max_order,
    })
}

/// Least-squares fit of `log(M0^2 (1 + mu))` against `log|log(1 + mu)|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupFit {
    /// The exponent `l`, i.e. minus the fitted slope.
    pub exponent: f64,
    pub intercept: f64,
    pub rows_used: usize,
    pub rms_residual: f64,
}

pub const BLOWUP_WINDOW: (f64, f64) = (1e-4, 1e-1);
pub const BLOWUP_MIN_ROWS: usize = 8;

/// Fit the blow-up exponent from `(mu, M0^2)` rows near `mu = -1`.
pub fn fit_blowup_exponent(rows: &[(f64, f64)]) -> Result<BlowupFit> {
    let slack = 1.0 + 1e-9;
    let used: Vec<(f64, f64)> = rows
        .iter()
        .copied()
        .filter(|&(mu, m)| {
            let t = 1.0 + mu;
            t * slack >= BLOWUP_WINDOW.0 && t <= BLOWUP_WINDOW.1 * slack && m > 0.0 && m.is_finite()
        })
        .collect();
    if used.len() < BLOWUP_MIN_ROWS {
        return Err(BepError::invalid(format!(
            "blow-up fit needs at least {BLOWUP_MIN_ROWS} rows with 1 + mu in [1e-4, 1e-1], found {}",
            used.len()
        )));
    }
    let (lo, hi) = used
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, m)| (a.min(m), b.max(m)));
    if hi - lo <= 1e-12 * hi {
        return Err(BepError::Degenerate(
            "M0^2 is constant over the fit window".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = used
        .iter()
        .map(|&(mu, m)| {
            let t = 1.0 + mu;
            (t.ln().abs().ln(), (m * t).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(BepError::Degenerate("fit abscissae coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(BlowupFit {
        exponent: -slope,
        intercept,
        rows_used: pts.len(),
        rms_residual: rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::BoundaryFn;
    use crate::interpolant::InterpolationData;
    use crate::reference::reference_spec;
    use crate::solver::{log_mu_grid, ProblemSpec};
    use std::f64::consts::PI;

    fn reference() -> Problem {
        Problem::new(reference_spec(0.5, 20)).unwrap()
    }

    #[test]
    fn xi0_vanishes_for_matching_data() {
        let p = Problem::new(reference_spec(0.5, 20)).unwrap();
        let psi = p.interpolant().clone();
        let psi2 = psi.clone();
        let spec = ProblemSpec::new(
            BoundaryFn::new(2048, move |t| psi.boundary(t)),
            BoundaryFn::new(2048, move |t| psi2.boundary(t)),
            p.spec().data.clone(),
            PI / 3.0,
            20,
        );
        assert!(compute_xi0(&Problem::new(spec).unwrap()).unwrap().norm() < 1e-13);
    }

    #[test]
    fn xi0_single_mode_matches_closed_form() {
        // With psi = 0, b = 1, h = 0 and f = z on I: xi0 = A (chi_I z)_+ .
        let theta0 = 1.0;
        let spec = ProblemSpec::new(
            BoundaryFn::new(512, |t| Complex64::from_polar(1.0, t)),
            BoundaryFn::constant(512, Complex64::new(0.0, 0.0)),
            InterpolationData::empty(),
            theta0,
            6,
        )
        .with_quad_points(512);
        let p = Problem::new(spec).unwrap();
        let xi = compute_xi0(&p).unwrap();
        let a = p.toeplitz().matrix();
        // (chi_I z)_+ has coefficients delta_{k1} - A_{k1}.
        let u: Vec<f64> = (0..6).map(|k| if k == 1 { 1.0 } else { 0.0 } - a[(k, 1)]).collect();
        for k in 0..6 {
            let want: f64 = (0..6).map(|m| a[(k, m)] * u[m]).sum();
            assert!((xi.coeffs()[k] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn exact_at_origin() {
        let p = reference();
        let t = MomentTable::build(&p, 10).unwrap();
        let base = p.solve_for_mu(0.0).unwrap();
        assert_eq!(t.m0_series(0.0).unwrap(), base.m0_sq());
        assert_eq!(t.e_series(0.0).unwrap(), base.e);
        assert!(t.xi0().norm() > 0.0);
    }

    #[test]
    fn first_derivatives() {
        let p = reference();
        let t = MomentTable::build(&p, 4).unwrap();
        let f0 = t.moments()[0];
        assert!((f0 - t.xi0().norm_sq()).abs() < 1e-10);
        assert_eq!(t.m0_coefficients(1)[0], -2.0 * f0);
        assert_eq!(t.e_coefficients(1)[0], 2.0 * f0);
        let h = 1e-4;
        let dm = (p.solve_for_mu(h).unwrap().m0_sq() - p.solve_for_mu(-h).unwrap().m0_sq()) / (2.0 * h);
        assert!((dm + 2.0 * f0).abs() < 1e-4 * f0, "{dm} vs {}", -2.0 * f0);
        let de = (p.solve_for_mu(h).unwrap().e - p.solve_for_mu(-h).unwrap().e) / (2.0 * h);
        assert!((de - 2.0 * f0).abs() < 1e-4 * f0);
    }

    #[test]
    fn series_track_direct_solves() {
        let p = reference();
        let t = MomentTable::build(&p, 10).unwrap();
        for mu in [-0.5, 0.5] {
            let r = p.solve_for_mu(mu).unwrap();
            assert!((t.m0_series(mu).unwrap() - r.m0_sq()).abs() < 0.05 * r.m0_sq());
            assert!((t.e_series(mu).unwrap() - r.e).abs() < 0.05 * r.e);
        }
    }

    #[test]
    fn radius_guard() {
        let t = MomentTable::build(&reference(), 4).unwrap();
        for mu in [1.0, -1.0, 1.5, f64::NAN] {
            assert!(matches!(t.m0_series(mu), Err(BepError::OutOfDomain { .. })));
            assert!(matches!(t.e_series(mu), Err(BepError::OutOfDomain { .. })));
        }
        assert!(t.e_series_order(0.1, 5).is_err());
    }

    #[test]
    fn term_structure_identity() {
        // Integrating de = -(1 + mu) dM0^2 term by term leaves only the
        // top-order remainder.
        let t = MomentTable::build(&reference(), 20).unwrap();
        let s = 20;
        let cm = t.m0_coefficients(s);
        for mu in [-0.5, -0.2, 0.0, 0.3, 0.5] {
            let m_s = t.m0_series_order(mu, s).unwrap();
            let integral: f64 = cm
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let p = (i + 1) as f64;
                    c / (p + 1.0) * mu.powi(i as i32 + 2)
                })
                .sum();
            let rebuilt = t.base_e() - (1.0 + mu) * (m_s - t.base_m0_sq()) + integral;
            let remainder = -cm[s - 1] * s as f64 / (s as f64 + 1.0) * mu.powi(s as i32 + 1);
            let direct = t.e_series_order(mu, s).unwrap();
            assert!((rebuilt - direct - remainder).abs() < 1e-10);
        }
    }

    #[test]
    fn calibration_at_origin_is_trivial() {
        let c = calibrate(&reference(), 0.0, 1e-3, 16).unwrap();
        assert_eq!(c.order, 0);
    }

    #[test]
    fn calibration_reaches_tolerance() {
        let c = calibrate(&reference(), -0.5, 0.05, DEFAULT_MAX_ORDER).unwrap();
        assert!(c.order <= 10);
        assert!(c.rel_error <= 0.05);
    }

    #[test]
    fn calibration_failure_reports_best() {
        match calibrate(&reference(), -0.99, 1e-12, 3) {
            Err(BepError::CalibrationFailure { best_error, max_order, .. }) => {
                assert!(best_error > 1e-12);
                assert_eq!(max_order, 3);
            }
            other => panic!("expected failure, got {other:?}"),
        }
        assert!(calibrate(&reference(), 0.5, 0.1, 4).is_err());
        assert!(calibrate(&reference(), -0.5, 0.0, 4).is_err());
    }

    #[test]
    fn blowup_fit_recovers_synthetic_exponent() {
        let rows: Vec<(f64, f64)> = log_mu_grid(1e-4, 1e-1, 20)
            .into_iter()
            .map(|mu| {
                let t: f64 = 1.0 + mu;
                (mu, 3.0 / t * t.ln().abs().powf(-2.0))
            })
            .collect();
        let fit = fit_blowup_exponent(&rows).unwrap();
        assert!((fit.exponent - 2.0).abs() < 0.05);
        assert_eq!(fit.rows_used, 20);
    }

    #[test]
    fn blowup_fit_rejects_bad_input() {
        let few: Vec<(f64, f64)> = log_mu_grid(1e-4, 1e-1, 5).into_iter().map(|m| (m, 1.0 / (1.0 + m))).collect();
        assert!(matches!(fit_blowup_exponent(&few), Err(BepError::InvalidArgument(_))));
        let flat: Vec<(f64, f64)> = log_mu_grid(1e-4, 1e-1, 12).into_iter().map(|m| (m, 2.0)).collect();
        assert!(matches!(fit_blowup_exponent(&flat), Err(BepError::Degenerate(_))));
    }
}
