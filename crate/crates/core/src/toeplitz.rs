//! Matrix of the Toeplitz operator `g -> P+(chi_J g)` on the truncated basis
//! `1, z, ..., z^{Q-1}`.

use std::f64::consts::PI;

use astro_float::{BigFloat, Consts, RoundingMode};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{BepError, Result};
use crate::fourier::FourierPoly;

/// Tolerance on the spectral enclosure `[0, 1]`.
pub const SPECTRAL_SLACK: f64 = 1e-10;

/// `A_{k,m} = sin((m-k) theta0) / (pi (m-k))`, `A_{k,k} = theta0 / pi`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzMatrix {
    theta0: f64,
    matrix: DMatrix<f64>,
}

/// Symbol value for the lag `d = m - k`.
pub fn symbol_coefficient(theta0: f64, d: i64) -> f64 {
    if d == 0 {
        theta0 / PI
    } else {
        let d = d as f64;
        (d * theta0).sin() / (PI * d)
    }
}

impl ToeplitzMatrix {
    /// `theta0 = pi` is accepted and gives the identity up to round-off.
    pub fn build(theta0: f64, q: usize) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 <= PI) {
            return Err(BepError::invalid(format!(
                "theta0 = {theta0} must lie in (0, pi]"
            )));
        }
        if q < 1 {
            return Err(BepError::invalid("truncation order Q must be at least 1"));
        }
        let row: Vec<f64> = (0..q as i64).map(|d| symbol_coefficient(theta0, d)).collect();
        let matrix = DMatrix::from_fn(q, q, |k, m| row[k.abs_diff(m)]);
        Ok(Self { theta0, matrix })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, g: &FourierPoly) -> Result<FourierPoly> {
        if g.len() != self.dim() {
            return Err(BepError::invalid(format!(
                "dimension mismatch: matrix is {q}x{q}, vector has {}",
                g.len(),
                q = self.dim()
            )));
        }
        FourierPoly::new(self.apply_slice(g.coeffs()))
    }

    pub(crate) fn apply_slice(&self, v: &[Complex64]) -> Vec<Complex64> {
        let q = self.dim();
        (0..q)
            .map(|k| (0..q).map(|m| v[m] * self.matrix[(k, m)]).sum())
            .collect()
    }

    /// `F(k) = <A^k xi, xi>` for `k = 0..=s`.
    pub fn power_moments(&self, xi: &FourierPoly, s: usize) -> Result<Vec<f64>> {
        if xi.len() != self.dim() {
            return Err(BepError::invalid(format!(
                "dimension mismatch: matrix is {q}x{q}, vector has {}",
                xi.len(),
                q = self.dim()
            )));
        }
        let base = xi.coeffs();
        let scale = xi.norm_sq();
        let mut v = base.to_vec();
        let mut out = Vec::with_capacity(s + 1);
        for k in 0..=s {
            if k > 0 {
                v = self.apply_slice(&v);
            }
            let f: Complex64 = v.iter().zip(base).map(|(a, b)| a * b.conj()).sum();
            if f.im.abs() > 1e-12 * scale.max(1.0) {
                return Err(BepError::Numerical(format!(
                    "moment {k} has imaginary residue {:.3e}",
                    f.im
                )));
            }
            out.push(f.re);
        }
        Ok(out)
    }

    /// Extreme eigenvalues from a dense symmetric eigensolve.
    pub fn spectrum(&self) -> Result<(f64, f64)> {
        let eig = nalgebra::SymmetricEigen::try_new(self.matrix.clone(), f64::EPSILON, 0)
            .ok_or_else(|| BepError::Numerical("symmetric eigensolve did not converge".into()))?;
        Ok((eig.eigenvalues.min(), eig.eigenvalues.max()))
    }

    /// Factorisation of `I + mu A`.
    pub fn shifted(&self, mu: f64) -> Result<ShiftedSolver> {
        if !mu.is_finite() {
            return Err(BepError::invalid(format!("mu = {mu} is not finite")));
        }
        let q = self.dim();
        let m = DMatrix::<f64>::identity(q, q) + &self.matrix * mu;
        if let Some(ch) = m.clone().cholesky() {
            return Ok(ShiftedSolver::Cholesky(ch));
        }
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(BepError::Numerical(format!("I + mu A is singular at mu = {mu}")));
        }
        Ok(ShiftedSolver::Lu(lu))
    }

    /// Extreme eigenvalues of the exact matrix computed in `bits`-bit arithmetic.
    pub fn extended_spectrum(&self, bits: usize) -> Result<ExtendedSpectrum> {
        ExtendedSpectrum::compute(self.theta0, self.dim(), bits)
    }
}

/// Factorised `I + mu A`, solving complex right-hand sides.
#[derive(Clone, Debug)]
pub enum ShiftedSolver {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl ShiftedSolver {
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let q = rhs.len();
        let b = DMatrix::from_fn(q, 2, |k, j| if j == 0 { rhs[k].re } else { rhs[k].im });
        let x = match self {
            ShiftedSolver::Cholesky(ch) => ch.solve(&b),
            ShiftedSolver::Lu(lu) => lu
                .solve(&b)
                .ok_or_else(|| BepError::Numerical("LU solve failed".into()))?,
        };
        let out: Vec<Complex64> = (0..q).map(|k| Complex64::new(x[(k, 0)], x[(k, 1)])).collect();
        if out.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(BepError::Numerical("shifted solve produced non-finite values".into()));
        }
        Ok(out)
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self, ShiftedSolver::Cholesky(_))
    }
}

/// Extreme eigenvalues of `A` resolved below double precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedSpectrum {
    /// Smallest eigenvalue of `A`.
    pub lambda_min: f64,
    /// Smallest eigenvalue of `I - A`, i.e. `1 - lambda_max`.
    pub upper_gap: f64,
    /// Whether the extended-precision Cholesky factorisations of `A` and
    /// `I - A` both completed with positive pivots.
    pub positive_definite: bool,
}

const INVERSE_ITERATIONS: usize = 60;

struct Big {
    bits: usize,
    rm: RoundingMode,
}

impl Big {
    fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.bits)
    }
    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, self.rm)
    }
    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, self.rm)
    }
    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, self.rm)
    }
    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, self.rm)
    }
    fn dot(&self, a: &[BigFloat], b: &[BigFloat]) -> BigFloat {
        a.iter()
            .zip(b)
            .fold(self.num(0.0), |acc, (x, y)| self.add(&acc, &self.mul(x, y)))
    }
    fn to_f64(&self, x: &BigFloat) -> Result<f64> {
        x.to_string()
            .parse::<f64>()
            .map_err(|e| BepError::Numerical(format!("extended-precision conversion: {e}")))
    }

    /// Lower Cholesky factor, or `None` when a pivot is not positive.
    fn cholesky(&self, m: &[Vec<BigFloat>]) -> Option<Vec<Vec<BigFloat>>> {
        let n = m.len();
        let mut l = vec![vec![self.num(0.0); n]; n];
        for j in 0..n {
            let mut d = m[j][j].clone();
            for k in 0..j {
                d = self.sub(&d, &self.mul(&l[j][k], &l[j][k]));
            }
            if !d.is_positive() || d.is_zero() {
                return None;
            }
            let djj = d.sqrt(self.bits, self.rm);
            for i in j + 1..n {
                let mut s = m[i][j].clone();
                for k in 0..j {
                    s = self.sub(&s, &self.mul(&l[i][k], &l[j][k]));
                }
                l[i][j] = self.div(&s, &djj);
            }
            l[j][j] = djj;
        }
        Some(l)
    }

    fn cholesky_solve(&self, l: &[Vec<BigFloat>], b: &[BigFloat]) -> Vec<BigFloat> {
        let n = l.len();
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] = self.sub(&y[i], &self.mul(&l[i][k], &y[k]));
            }
            y[i] = self.div(&y[i], &l[i][i]);
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] = self.sub(&y[i], &self.mul(&l[k][i], &y[k]));
            }
            y[i] = self.div(&y[i], &l[i][i]);
        }
        y
    }

    /// Smallest eigenvalue of a positive definite matrix by inverse iteration.
    fn smallest_eigenvalue(&self, m: &[Vec<BigFloat>], l: &[Vec<BigFloat>]) -> BigFloat {
        let n = m.len();
        // Mixed even and odd start so neither symmetry class is missed.
        let mut v: Vec<BigFloat> = (0..n)
            .map(|k| self.num(1.0 + 0.37 * k as f64 + 0.011 * (k * k) as f64))
            .collect();
        for _ in 0..INVERSE_ITERATIONS {
            let w = self.cholesky_solve(l, &v);
            let norm = self.dot(&w, &w).sqrt(self.bits, self.rm);
            v = w.iter().map(|x| self.div(x, &norm)).collect();
        }
        let mv: Vec<BigFloat> = (0..n).map(|i| self.dot(&m[i], &v)).collect();
        self.div(&self.dot(&v, &mv), &self.dot(&v, &v))
    }
}

impl ExtendedSpectrum {
    fn compute(theta0: f64, q: usize, bits: usize) -> Result<Self> {
        if bits < 64 {
            return Err(BepError::invalid("extended precision needs at least 64 bits"));
        }
        let big = Big {
            bits,
            rm: RoundingMode::ToEven,
        };
        let mut consts = Consts::new()
            .map_err(|e| BepError::Numerical(format!("extended-precision constants: {e:?}")))?;
        let pi = consts.pi(bits, big.rm);
        let t0 = big.num(theta0);
        let row: Vec<BigFloat> = (0..q)
            .map(|d| {
                if d == 0 {
                    big.div(&t0, &pi)
                } else {
                    let dd = big.num(d as f64);
                    let s = big.mul(&dd, &t0).sin(bits, big.rm, &mut consts);
                    big.div(&s, &big.mul(&pi, &dd))
                }
            })
            .collect();
        let a: Vec<Vec<BigFloat>> = (0..q)
            .map(|k| (0..q).map(|m| row[k.abs_diff(m)].clone()).collect())
            .collect();
        let one = big.num(1.0);
        let complement: Vec<Vec<BigFloat>> = (0..q)
            .map(|k| {
                (0..q)
                    .map(|m| {
                        let neg = a[k][m].neg();
                        if k == m {
                            big.add(&one, &neg)
                        } else {
                            neg
                        }
                    })
                    .collect()
            })
            .collect();

        let (la, lc) = (big.cholesky(&a), big.cholesky(&complement));
        let positive_definite = la.is_some() && lc.is_some();
        let lambda_min = match &la {
            Some(l) => big.to_f64(&big.smallest_eigenvalue(&a, l))?,
            None => f64::NAN,
        };
        let upper_gap = match &lc {
            Some(l) => big.to_f64(&big.smallest_eigenvalue(&complement, l))?,
            None => f64::NAN,
        };
        Ok(Self {
            lambda_min,
            upper_gap,
            positive_definite,
        })
    }
}
