//! Discretised optimality system `(I + mu A) g = s`, the error and
//! discrepancy functionals, and tuning of `mu` against the bound `M`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::blaschke::BlaschkeProduct;
use crate::error::{BepError, Result};
use crate::fourier::{moments_from_values, region_nodes, ArcSplit, BoundaryFn, FourierPoly, Nodes, Region};
use crate::interpolant::{build_interpolant, Interpolant, InterpolantKind, InterpolationData};
use crate::toeplitz::ToeplitzMatrix;

pub const DEFAULT_QUAD_POINTS: usize = 2048;

/// A full problem instance.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    /// Data to approximate on `I`.
    pub f: BoundaryFn,
    /// Reference data on `J`.
    pub h: BoundaryFn,
    pub data: InterpolationData,
    /// Half-angle of `J`.
    pub theta0: f64,
    /// Discrepancy bound `M` on `J`.
    pub bound: f64,
    /// Truncation order `Q`.
    pub q: usize,
    pub quad_points: usize,
    /// Phase of the Blaschke product.
    pub phase: f64,
    pub interpolant: InterpolantKind,
}

impl ProblemSpec {
    pub fn new(f: BoundaryFn, h: BoundaryFn, data: InterpolationData, theta0: f64, q: usize) -> Self {
        Self {
            f,
            h,
            data,
            theta0,
            bound: 0.0,
            q,
            quad_points: DEFAULT_QUAD_POINTS,
            phase: 0.0,
            interpolant: InterpolantKind::Kernel,
        }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    pub fn with_q(mut self, q: usize) -> Self {
        self.q = q;
        self
    }

    pub fn with_quad_points(mut self, quad_points: usize) -> Self {
        self.quad_points = quad_points;
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_interpolant(mut self, kind: InterpolantKind) -> Self {
        self.interpolant = kind;
        self
    }

    pub fn with_data(mut self, data: InterpolationData) -> Self {
        self.data = data;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ArcSplit::new(self.theta0)?;
        if self.q < 1 {
            return Err(BepError::invalid("q: truncation order must be at least 1"));
        }
        if self.q < self.data.len() {
            return Err(BepError::invalid(format!(
                "q: truncation order {} is below the number of interpolation points {}",
                self.q,
                self.data.len()
            )));
        }
        if self.quad_points < 4 * self.q {
            return Err(BepError::invalid(format!(
                "quad_points: {} is below the oversampling floor 4Q = {}",
                self.quad_points,
                4 * self.q
            )));
        }
        if !(self.bound.is_finite() && self.bound >= 0.0) {
            return Err(BepError::invalid(format!(
                "bound: M = {} must be finite and nonnegative",
                self.bound
            )));
        }
        if !(0.0..=TAU).contains(&self.phase) {
            return Err(BepError::invalid(format!(
                "phase: {} must lie in [0, 2pi]",
                self.phase
            )));
        }
        Ok(())
    }
}

/// Precomputed samples of everything the solver needs on one arc.
#[derive(Clone, Debug)]
struct ArcSamples {
    nodes: Nodes,
    z: Vec<Complex64>,
    b: Vec<Complex64>,
    psi: Vec<Complex64>,
    target: Vec<Complex64>,
}

impl ArcSamples {
    fn new(
        split: &ArcSplit,
        region: Region,
        quad_points: usize,
        b: &BlaschkeProduct,
        psi: &Interpolant,
        target: &BoundaryFn,
    ) -> Result<Self> {
        let nodes = region_nodes(split, region, quad_points);
        let z: Vec<Complex64> = nodes.theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        let bv = z.iter().map(|&z| b.eval(z)).collect();
        let pv = z.iter().map(|&z| psi.eval(z)).collect();
        let tv: Vec<Complex64> = nodes.theta.iter().map(|&t| target.eval(t)).collect();
        if let Some(n) = tv.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(BepError::Numerical(format!(
                "boundary data is not finite at theta = {}",
                nodes.theta[n]
            )));
        }
        Ok(Self {
            nodes,
            z,
            b: bv,
            psi: pv,
            target: tv,
        })
    }

    /// `<conj(b) (target - psi), z^k>` over the arc.
    fn rhs(&self, q: usize) -> Vec<Complex64> {
        let v: Vec<Complex64> = self
            .b
            .iter()
            .zip(&self.target)
            .zip(&self.psi)
            .map(|((b, t), p)| b.conj() * (t - p))
            .collect();
        moments_from_values(&self.nodes, &v, q)
    }

    /// `<conj(b) target, z^k>` over the arc.
    fn raw_rhs(&self, q: usize) -> Vec<Complex64> {
        let v: Vec<Complex64> = self.b.iter().zip(&self.target).map(|(b, t)| b.conj() * t).collect();
        moments_from_values(&self.nodes, &v, q)
    }

    /// `|| psi + b g - target ||^2` over the arc.
    fn residual_sq(&self, g: &FourierPoly) -> f64 {
        (0..self.z.len())
            .map(|n| {
                let r = self.psi[n] + self.b[n] * g.eval(self.z[n]) - self.target[n];
                self.nodes.weight[n] * r.norm_sqr()
            })
            .sum()
    }

    fn target_norm_sq(&self) -> f64 {
        self.target
            .iter()
            .zip(&self.nodes.weight)
            .map(|(t, w)| w * t.norm_sqr())
            .sum()
    }

    fn misfit_norm_sq(&self) -> f64 {
        self.target
            .iter()
            .zip(&self.psi)
            .zip(&self.nodes.weight)
            .map(|((t, p), w)| w * (t - p).norm_sqr())
            .sum()
    }
}

/// A problem with its discretisation precomputed.
#[derive(Clone, Debug)]
pub struct Problem {
    spec: ProblemSpec,
    split: ArcSplit,
    toeplitz: ToeplitzMatrix,
    blaschke: BlaschkeProduct,
    interpolant: Interpolant,
    on_i: ArcSamples,
    on_j: ArcSamples,
    s_i: Vec<Complex64>,
    s_j: Vec<Complex64>,
}

/// Outcome of one solve at fixed `mu`.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub mu: f64,
    /// Coefficients of `g0`.
    pub g: FourierPoly,
    /// Squared approximation error on `I`.
    pub e: f64,
    /// Discrepancy norm on `J`.
    pub m0: f64,
    psi: Interpolant,
    blaschke: BlaschkeProduct,
}

impl SolveResult {
    pub fn m0_sq(&self) -> f64 {
        self.m0 * self.m0
    }

    /// `psi + b g0` at `z`.
    pub fn gtilde(&self, z: Complex64) -> Complex64 {
        self.psi.eval(z) + self.blaschke.eval(z) * self.g.eval(z)
    }

    pub fn gtilde_boundary(&self, theta: f64) -> Complex64 {
        self.gtilde(Complex64::from_polar(1.0, theta))
    }
}

/// Bisection controls for [`Problem::tune_mu`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuneOptions {
    /// Relative tolerance on `|M0 - M| / M`.
    pub rtol: f64,
    /// Width of the final `mu` bracket.
    pub mu_tol: f64,
    pub max_iter: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            mu_tol: 1e-12,
            max_iter: 200,
        }
    }
}

pub const BRACKET_START: (f64, f64) = (-0.99, 1.0);
pub const BRACKET_LIMITS: (f64, f64) = (-1.0 + 1e-9, 1e6);

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub mu: f64,
    pub outcome: std::result::Result<SweepPoint, BepError>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub e: f64,
    pub m0_sq: f64,
}

/// `n` values of `mu` with `1 + mu` log-spaced over `[lo, hi]`.
pub fn log_mu_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo - 1.0],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp_m1())
                .collect()
        }
    }
}

/// Sixty points with `1 + mu` log-spaced from `1e-3` to `4`.
pub fn default_mu_grid() -> Vec<f64> {
    log_mu_grid(1e-3, 4.0, 60)
}

impl Problem {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let split = ArcSplit::new(spec.theta0)?;
        let toeplitz = ToeplitzMatrix::build(spec.theta0, spec.q)?;
        let blaschke = BlaschkeProduct::new(spec.data.points().to_vec(), spec.phase)?;
        let interpolant = build_interpolant(spec.interpolant, &spec.data, spec.q)?;
        let on_i = ArcSamples::new(&split, Region::I, spec.quad_points, &blaschke, &interpolant, &spec.f)?;
        let on_j = ArcSamples::new(&split, Region::J, spec.quad_points, &blaschke, &interpolant, &spec.h)?;
        let s_i = on_i.rhs(spec.q);
        let s_j = on_j.rhs(spec.q);
        Ok(Self {
            spec,
            split,
            toeplitz,
            blaschke,
            interpolant,
            on_i,
            on_j,
            s_i,
            s_j,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn split(&self) -> &ArcSplit {
        &self.split
    }

    pub fn toeplitz(&self) -> &ToeplitzMatrix {
        &self.toeplitz
    }

    pub fn blaschke(&self) -> &BlaschkeProduct {
        &self.blaschke
    }

    pub fn interpolant(&self) -> &Interpolant {
        &self.interpolant
    }

    pub fn q(&self) -> usize {
        self.spec.q
    }

    /// Contributions `s_I` and `s_J` to the right-hand side.
    pub fn rhs_parts(&self) -> (&[Complex64], &[Complex64]) {
        (&self.s_i, &self.s_j)
    }

    /// `||f||` on `I`.
    pub fn f_norm_i(&self) -> f64 {
        self.on_i.target_norm_sq().sqrt()
    }

    /// `||h||` on `J`.
    pub fn h_norm_j(&self) -> f64 {
        self.on_j.target_norm_sq().sqrt()
    }

    /// `||f - psi||^2` on `I` and `||h - psi||^2` on `J`.
    pub fn misfit_norms_sq(&self) -> (f64, f64) {
        (self.on_i.misfit_norm_sq(), self.on_j.misfit_norm_sq())
    }

    /// Truncated `P+(conj(b) (f v h))`.
    pub fn projected_data(&self) -> Result<FourierPoly> {
        let a = self.on_i.raw_rhs(self.spec.q);
        let b = self.on_j.raw_rhs(self.spec.q);
        FourierPoly::new(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }

    /// `s = s_I + (1 + mu) s_J`.
    pub fn assemble_rhs(&self, mu: f64) -> Result<Vec<Complex64>> {
        check_mu(mu)?;
        Ok(self
            .s_i
            .iter()
            .zip(&self.s_j)
            .map(|(a, b)| a + b * (1.0 + mu))
            .collect())
    }

    /// Error on `I` (squared) and discrepancy on `J` (unsquared) of `psi + b g`.
    pub fn residuals(&self, g: &FourierPoly) -> (f64, f64) {
        (self.on_i.residual_sq(g), self.on_j.residual_sq(g).sqrt())
    }

    /// The same quantities from the quadratic forms in the coefficients.
    pub fn algebraic_residuals(&self, g: &FourierPoly) -> (f64, f64) {
        let (ci, cj) = self.misfit_norms_sq();
        let c = g.coeffs();
        let ag = self.toeplitz.apply_slice(c);
        let g_ag: f64 = c.iter().zip(&ag).map(|(x, y)| (x.conj() * y).re).sum();
        let cross = |s: &[Complex64]| -> f64 { c.iter().zip(s).map(|(x, y)| (x * y.conj()).re).sum() };
        let e = ci - 2.0 * cross(&self.s_i) + g.norm_sq() - g_ag;
        let m0_sq = cj - 2.0 * cross(&self.s_j) + g_ag;
        (e, m0_sq.max(0.0).sqrt())
    }

    pub fn solve_for_mu(&self, mu: f64) -> Result<SolveResult> {
        let rhs = self.assemble_rhs(mu)?;
        let g = FourierPoly::new(self.toeplitz.shifted(mu)?.solve(&rhs)?)?;
        Ok(self.result_for(mu, g))
    }

    pub(crate) fn result_for(&self, mu: f64, g: FourierPoly) -> SolveResult {
        let (e, m0) = self.residuals(&g);
        SolveResult {
            mu,
            g,
            e,
            m0,
            psi: self.interpolant.clone(),
            blaschke: self.blaschke.clone(),
        }
    }

    /// Tune `mu` so that the discrepancy equals the bound in the spec.
    pub fn tune_mu(&self) -> Result<SolveResult> {
        self.tune_mu_to(self.spec.bound, TuneOptions::default())
    }

    /// Bisection in `log(1 + mu)` over an expanding bracket.
    pub fn tune_mu_to(&self, m: f64, opts: TuneOptions) -> Result<SolveResult> {
        if !m.is_finite() {
            return Err(BepError::invalid(format!("bound: M = {m} is not finite")));
        }
        let (mut lo, mut hi) = BRACKET_START;
        let mut m_lo = self.solve_for_mu(lo)?.m0;
        while m_lo <= m && lo > BRACKET_LIMITS.0 {
            lo = (-1.0 + (lo + 1.0) / 10.0).max(BRACKET_LIMITS.0);
            m_lo = self.solve_for_mu(lo)?.m0;
        }
        let mut m_hi = self.solve_for_mu(hi)?.m0;
        while m_hi >= m && hi < BRACKET_LIMITS.1 {
            hi = (hi * 10.0).min(BRACKET_LIMITS.1);
            m_hi = self.solve_for_mu(hi)?.m0;
        }
        if m <= 0.0 || m_lo <= m || m_hi >= m {
            return Err(BepError::InfeasibleConstraint {
                requested: m,
                lowest: m_hi,
                highest: m_lo,
            });
        }

        let (mut u_lo, mut u_hi) = (lo.ln_1p(), hi.ln_1p());
        let mut accepted: Option<SolveResult> = None;
        for _ in 0..opts.max_iter {
            let u = 0.5 * (u_lo + u_hi);
            let r = self.solve_for_mu(u.exp_m1())?;
            if r.m0 > m {
                u_lo = u;
            } else {
                u_hi = u;
            }
            let saturated = (r.m0 - m).abs() < opts.rtol * m;
            let narrow = u_hi.exp_m1() - u_lo.exp_m1() <= opts.mu_tol;
            let exhausted = u <= u_lo && u >= u_hi || (u_hi - u_lo) <= f64::EPSILON * u.abs().max(f64::MIN_POSITIVE);
            if saturated {
                if narrow || exhausted {
                    return Ok(r);
                }
                accepted = Some(r);
            }
            if exhausted {
                break;
            }
        }
        accepted.ok_or_else(|| {
            BepError::Numerical(format!(
                "bisection for M = {m} did not converge within {} steps",
                opts.max_iter
            ))
        })
    }

    /// Solve at every grid point; rows come back sorted by `mu`.
    pub fn mu_sweep(&self, grid: &[f64]) -> Vec<SweepRow> {
        let mut sorted = grid.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        sorted
            .par_iter()
            .map(|&mu| SweepRow {
                mu,
                outcome: self.solve_for_mu(mu).map(|r| SweepPoint {
                    e: r.e,
                    m0_sq: r.m0_sq(),
                }),
            })
            .collect()
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > -1.0) || !mu.is_finite() {
        return Err(BepError::invalid(format!("mu = {mu} must be finite and greater than -1")));
    }
    Ok(())
}
