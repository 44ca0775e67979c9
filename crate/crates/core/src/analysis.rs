//! Stability experiments, the companion solution at `mu = 0`, and Carleman
//! extrapolation from the arc `I` into the disk.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blaschke::BlaschkeProduct;
use crate::error::{BepError, Result};
use crate::fourier::{panel_nodes, region_nodes, ArcSplit, BoundaryFn, FourierPoly, Region};
use crate::interpolant::{lagrange_basis, Interpolant, InterpolantKind, InterpolationData};
use crate::series::compute_xi0;
use crate::solver::{Problem, SolveResult, TuneOptions};

// ---------------------------------------------------------------------------
// Stability

/// Input being perturbed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PerturbationKind {
    F,
    H,
    Omega,
    Z,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 4] = [Self::F, Self::H, Self::Omega, Self::Z];

    pub fn name(&self) -> &'static str {
        match self {
            Self::F => "f",
            Self::H => "h",
            Self::Omega => "omega",
            Self::Z => "z",
        }
    }
}

impl std::str::FromStr for PerturbationKind {
    type Err = BepError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" => Ok(Self::F),
            "h" => Ok(Self::H),
            "omega" => Ok(Self::Omega),
            "z" => Ok(Self::Z),
            other => Err(BepError::invalid(format!(
                "unknown perturbation kind `{other}` (expected f, h, omega or z)"
            ))),
        }
    }
}

/// Constants entering the first-order stability bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityConstants {
    pub mu: f64,
    pub m0: f64,
    pub m1: f64,
    /// Norm of `xi = A g0 - P+(chi_J conj(b) (h - psi))`.
    pub xi_norm: f64,
    /// Discrepancy level `M`.
    pub bound_m: f64,
    /// `1 + m1 M^2 / (m0 ||xi||^2)`.
    pub shared_factor: f64,
    pub c1: f64,
    pub c2: f64,
    /// `||f v h||` on the circle.
    pub data_norm: f64,
    /// `||h - psi||` on `J`.
    pub h_misfit: f64,
    /// `max_j ||L_j||` over the Lagrange basis.
    pub lagrange_norm: f64,
    /// Coefficient of `||dz||_1` in the bound on `||db||`.
    pub blaschke_factor: f64,
    /// Coefficient of `||dz||_1` in the bound on `||dpsi||`.
    pub psi_factor: f64,
    /// A-priori lower bound on `||xi||`, when it applies.
    pub xi_lower_bound: Option<f64>,
}

impl StabilityConstants {
    /// Right-hand side of the bound for a perturbation of size `delta`.
    pub fn bound(&self, kind: PerturbationKind, delta: f64) -> f64 {
        let k = self.shared_factor;
        match kind {
            PerturbationKind::F => self.m1 * k * delta,
            PerturbationKind::H => ((1.0 + self.m1 * (1.0 + self.mu)) * k - 1.0) * delta,
            PerturbationKind::Omega => self.c2 * k * self.lagrange_norm * delta,
            PerturbationKind::Z => {
                k * (self.c1 * self.blaschke_factor + self.c2 * self.psi_factor) * delta
            }
        }
    }
}

fn poly_mul_linear(poly: &[Complex64], root: Complex64) -> Vec<Complex64> {
    let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
    for (i, &c) in poly.iter().enumerate() {
        next[i + 1] += c;
        next[i] -= c * root;
    }
    next
}

fn coeff_norm(p: &[Complex64]) -> f64 {
    p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Constants of the stability bounds at a solved state.
pub fn stability_constants(problem: &Problem, result: &SolveResult) -> Result<StabilityConstants> {
    let mu = result.mu;
    let inv = 1.0 / (1.0 + mu);
    let (m0, m1) = (inv.min(1.0), inv.max(1.0));
    let (_, s_j) = problem.rhs_parts();
    let ag = problem.toeplitz().apply_slice(result.g.coeffs());
    let xi_norm = ag
        .iter()
        .zip(s_j)
        .map(|(a, s)| (a - s).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if !(xi_norm > 0.0) {
        return Err(BepError::Degenerate(
            "xi vanishes, so the stability bounds are undefined".into(),
        ));
    }
    let bound_m = result.m0;
    let shared_factor = 1.0 + m1 * bound_m * bound_m / (m0 * xi_norm * xi_norm);
    let data_norm = (problem.f_norm_i().powi(2) + problem.h_norm_j().powi(2)).sqrt();
    let h_misfit = problem.misfit_norms_sq().1.sqrt();
    let c1 = m1 * (data_norm + mu.abs() * h_misfit);
    let c2 = 1.0 + mu.abs() * m1;

    let data = &problem.spec().data;
    let pts = data.points();
    let n = pts.len();
    let lagrange_norm = (0..n)
        .map(|j| coeff_norm(&lagrange_basis(pts, j)))
        .fold(0.0, f64::max);
    let blaschke_factor = 2.0 * pts.iter().map(|z| 1.0 / (1.0 - z.norm())).fold(0.0, f64::max);
    let psi_factor = if n < 2 {
        0.0
    } else {
        let omega0 = data.values().iter().map(|w| w.norm()).fold(0.0, f64::max);
        let prod_norm = (0..n)
            .map(|j| {
                let p = pts
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != j)
                    .fold(vec![Complex64::new(1.0, 0.0)], |acc, (_, &zm)| poly_mul_linear(&acc, zm));
                coeff_norm(&p)
            })
            .fold(0.0, f64::max);
        let inv_sum = (0..n)
            .map(|j| (0..n).filter(|&k| k != j).map(|k| 1.0 / (pts[j] - pts[k]).norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let min_prod = (0..n)
            .map(|j| (0..n).filter(|&k| k != j).map(|k| (pts[j] - pts[k]).norm()).product::<f64>())
            .fold(f64::INFINITY, f64::min);
        2.0 * omega0 * prod_norm * inv_sum / min_prod
    };

    let xi_lower_bound = if mu != 0.0 {
        let companion = problem.projected_data()?;
        let (_, gap) = problem.residuals(&companion);
        (gap < bound_m).then(|| (bound_m - gap) / mu.abs())
    } else {
        None
    };

    Ok(StabilityConstants {
        mu,
        m0,
        m1,
        xi_norm,
        bound_m,
        shared_factor,
        c1,
        c2,
        data_norm,
        h_misfit,
        lagrange_norm,
        blaschke_factor,
        psi_factor,
        xi_lower_bound,
    })
}

/// One row of a perturbation experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationReport {
    pub kind: PerturbationKind,
    pub delta: f64,
    /// `||delta gtilde||` in H2, absent when the perturbed solve failed.
    pub measured: Option<f64>,
    pub bound: f64,
    pub ratio: Option<f64>,
    /// Why the row has no measurement.
    pub failure: Option<String>,
}

/// Unit-size perturbation direction for one kind.
#[derive(Clone, Debug)]
enum Direction {
    Boundary(Vec<(i32, Complex64)>),
    Vector(Vec<Complex64>),
}

fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn direction(problem: &Problem, kind: PerturbationKind, seed: u64) -> Result<Direction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        PerturbationKind::F | PerturbationKind::H => {
            let modes: Vec<(i32, Complex64)> = (-3..=3).map(|k| (k, random_complex(&mut rng))).collect();
            let region = if kind == PerturbationKind::F { Region::I } else { Region::J };
            let nodes = region_nodes(problem.split(), region, problem.spec().quad_points);
            let norm = nodes
                .integrate(|t| Complex64::new(eval_modes(&modes, t).norm_sqr(), 0.0))
                .re
                .sqrt();
            Ok(Direction::Boundary(modes.into_iter().map(|(k, a)| (k, a / norm)).collect()))
        }
        PerturbationKind::Omega | PerturbationKind::Z => {
            let n = problem.spec().data.len();
            if n == 0 {
                return Err(BepError::invalid(format!(
                    "perturbing {} needs interpolation data",
                    kind.name()
                )));
            }
            let v: Vec<Complex64> = (0..n).map(|_| random_complex(&mut rng)).collect();
            let l1: f64 = v.iter().map(|c| c.norm()).sum();
            Ok(Direction::Vector(v.into_iter().map(|c| c / l1).collect()))
        }
    }
}

fn eval_modes(modes: &[(i32, Complex64)], t: f64) -> Complex64 {
    modes
        .iter()
        .map(|&(k, a)| a * Complex64::from_polar(1.0, k as f64 * t))
        .sum()
}

fn perturbed_problem(
    problem: &Problem,
    kind: PerturbationKind,
    dir: &Direction,
    delta: f64,
) -> Result<Problem> {
    let mut spec = problem.spec().clone();
    match (kind, dir) {
        (PerturbationKind::F, Direction::Boundary(modes)) => {
            let (base, modes) = (spec.f.clone(), modes.clone());
            spec.f = BoundaryFn::new(base.quad_points(), move |t| base.eval(t) + eval_modes(&modes, t) * delta);
        }
        (PerturbationKind::H, Direction::Boundary(modes)) => {
            let (base, modes) = (spec.h.clone(), modes.clone());
            spec.h = BoundaryFn::new(base.quad_points(), move |t| base.eval(t) + eval_modes(&modes, t) * delta);
        }
        (PerturbationKind::Omega, Direction::Vector(v)) => {
            let values = spec.data.values().iter().zip(v).map(|(w, d)| w + d * delta).collect();
            spec.data = InterpolationData::new(spec.data.points().to_vec(), values)?;
        }
        (PerturbationKind::Z, Direction::Vector(v)) => {
            let points = spec.data.points().iter().zip(v).map(|(z, d)| z + d * delta).collect();
            spec.data = InterpolationData::new(points, spec.data.values().to_vec())?;
        }
        _ => return Err(BepError::invalid("perturbation direction does not match its kind")),
    }
    Problem::new(spec)
}

/// H2 distance between two solutions, by the trapezoid rule on the circle.
pub fn h2_distance(a: &SolveResult, b: &SolveResult, quad_points: usize) -> f64 {
    let p = quad_points.max(1);
    ((0..p)
        .map(|n| {
            let t = TAU * n as f64 / p as f64;
            (a.gtilde_boundary(t) - b.gtilde_boundary(t)).norm_sqr()
        })
        .sum::<f64>()
        / p as f64)
        .sqrt()
}

/// Perturb one input along a seeded random direction at each magnitude,
/// retune `mu` to the same bound, and compare against the first-order bound.
pub fn perturbation_experiment(
    problem: &Problem,
    kind: PerturbationKind,
    deltas: &[f64],
    seed: u64,
) -> Result<(StabilityConstants, Vec<PerturbationReport>)> {
    let opts = TuneOptions::default();
    let m = problem.spec().bound;
    let baseline = problem.tune_mu_to(m, opts)?;
    let constants = stability_constants(problem, &baseline)?;
    let dir = direction(problem, kind, seed)?;
    let quad_points = problem.spec().quad_points;
    let rows = deltas
        .par_iter()
        .map(|&delta| {
            let bound = constants.bound(kind, delta);
            let outcome = perturbed_problem(problem, kind, &dir, delta)
                .and_then(|p| p.tune_mu_to(m, opts))
                .map(|r| h2_distance(&r, &baseline, quad_points));
            match outcome {
                Ok(measured) => PerturbationReport {
                    kind,
                    delta,
                    measured: Some(measured),
                    bound,
                    ratio: (bound > 0.0).then(|| measured / bound),
                    failure: None,
                },
                Err(e) => PerturbationReport {
                    kind,
                    delta,
                    measured: None,
                    bound,
                    ratio: None,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok((constants, rows))
}

// ---------------------------------------------------------------------------
// Companion solution

/// `psi + b g` for an explicitly given `g`.
#[derive(Clone, Debug)]
pub struct CompanionSolution {
    pub g: FourierPoly,
    psi: Interpolant,
    blaschke: BlaschkeProduct,
}

impl CompanionSolution {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.psi.eval(z) + self.blaschke.eval(z) * self.g.eval(z)
    }

    pub fn boundary(&self, theta: f64) -> Complex64 {
        self.eval(Complex64::from_polar(1.0, theta))
    }
}

/// `psi + b P+(conj(b) (f v h))`, the explicit solution at `mu = 0`.
pub fn companion_mu0(problem: &Problem) -> Result<CompanionSolution> {
    if problem.interpolant().kind() != InterpolantKind::Kernel {
        return Err(BepError::invalid(
            "the companion formula requires the kernel interpolant",
        ));
    }
    Ok(CompanionSolution {
        g: problem.projected_data()?,
        psi: problem.interpolant().clone(),
        blaschke: problem.blaschke().clone(),
    })
}

/// Companion solution moved to first order towards `M0^2(0) + delta_m2`.
#[derive(Clone, Debug)]
pub struct FirstOrderCompanion {
    pub solution: CompanionSolution,
    /// Predicted change of `mu`.
    pub mu_shift: f64,
    /// `F(0) = ||xi0||^2`.
    pub f0: f64,
}

pub fn companion_first_order(problem: &Problem, delta_m2: f64) -> Result<FirstOrderCompanion> {
    if !delta_m2.is_finite() {
        return Err(BepError::invalid("delta_m2 must be finite"));
    }
    let base = companion_mu0(problem)?;
    let xi0 = compute_xi0(problem)?;
    let f0 = xi0.norm_sq();
    let m0_sq = problem.residuals(&base.g).1.powi(2);
    if !(f0 > f64::EPSILON * (1.0 + m0_sq)) {
        return Err(BepError::Degenerate(format!(
            "dM0^2/dmu = {:.3e} at mu = 0 cannot be inverted",
            -2.0 * f0
        )));
    }
    // dg/dmu = -xi0 and dM0^2/dmu = -2 F(0) at mu = 0.
    let mu_shift = -delta_m2 / (2.0 * f0);
    let g = FourierPoly::new(
        base.g
            .coeffs()
            .iter()
            .zip(xi0.coeffs())
            .map(|(g, x)| g - x * mu_shift)
            .collect(),
    )?;
    Ok(FirstOrderCompanion {
        solution: CompanionSolution { g, ..base },
        mu_shift,
        f0,
    })
}

// ---------------------------------------------------------------------------
// Carleman extrapolation

/// Outer function with `|Phi| = rho` on `I` and `|Phi| = 1` on `J`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuenchingFunction {
    split: ArcSplit,
    rho: f64,
}

impl QuenchingFunction {
    pub fn new(split: ArcSplit, rho: f64) -> Result<Self> {
        if !(rho > 1.0 && rho.is_finite()) {
            return Err(BepError::invalid(format!("rho = {rho} must exceed 1")));
        }
        Ok(Self { split, rho })
    }

    /// Schwarz integral `(1/2pi) int_I (xi + z)/(xi - z) dtheta` in closed form.
    pub fn schwarz(&self, z: Complex64) -> Complex64 {
        let (a, b) = self.split.interval(Region::I);
        let (ea, eb) = (Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b));
        let ratio = (eb - z) / (ea - z);
        let sweep = ratio.arg().rem_euclid(TAU);
        Complex64::new(-(b - a) + 2.0 * sweep, -2.0 * ratio.norm().ln()) / TAU
    }

    /// The same integral by composite Gauss-Legendre quadrature.
    pub fn schwarz_quadrature(&self, z: Complex64, quad_points: usize) -> Complex64 {
        region_nodes(&self.split, Region::I, quad_points).integrate(|t| {
            let xi = Complex64::from_polar(1.0, t);
            (xi + z) / (xi - z)
        })
    }

    /// `log Phi(z)`.
    pub fn log_value(&self, z: Complex64) -> Complex64 {
        self.schwarz(z) * self.rho.ln()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.log_value(z).exp()
    }
}

/// Breakpoints on `[0, half]` refined geometrically towards `0`. Each dyadic
/// level is split into at least `per_level` panels of width at most `h_max`.
fn graded_offsets(half: f64, h_max: f64, per_level: usize, levels: usize) -> Vec<f64> {
    let mut breaks = vec![half];
    let mut hi = half;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        let pieces = (((hi - lo) / h_max).ceil() as usize).max(per_level);
        for k in 1..=pieces {
            breaks.push(hi - (hi - lo) * k as f64 / pieces as f64);
        }
        hi = lo;
    }
    breaks.push(0.0);
    breaks.reverse();
    breaks
}

const GRADING_LEVELS: usize = 120;

impl QuenchingFunction {
    /// `log Phi` at the point of `I` with offsets `da` and `db` from its ends.
    fn log_on_arc(&self, da: f64, db: f64) -> Complex64 {
        let ln_ratio = ((0.5 * db).sin() / (0.5 * da).sin()).ln();
        Complex64::new(1.0, -ln_ratio / std::f64::consts::PI) * self.rho.ln()
    }
}

/// Carleman reconstruction of `F(z)` from the values of `F` on `I`.
pub fn carleman_extrapolate(
    f: &BoundaryFn,
    split: &ArcSplit,
    rho: f64,
    alpha: f64,
    z: Complex64,
    r_max: f64,
) -> Result<Complex64> {
    if !(r_max > 0.0 && r_max < 1.0) {
        return Err(BepError::invalid(format!("r_max = {r_max} must lie in (0, 1)")));
    }
    if !(z.norm() < r_max) {
        return Err(BepError::OutOfDomain {
            what: "|z|",
            value: z.norm(),
            domain: "the disk |z| < r_max",
        });
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(BepError::invalid(format!("alpha = {alpha} must be positive")));
    }
    let phi = QuenchingFunction::new(*split, rho)?;
    let (a, b) = split.interval(Region::I);
    let len = b - a;
    let h_max = (TAU * crate::fourier::PANEL_ORDER as f64 / f.quad_points().max(1) as f64)
        .min(0.5 * (1.0 - r_max));
    // Phase of the kernel turns by `alpha ln(rho) ln(2) / pi` per dyadic level.
    let turn = alpha * rho.ln() * std::f64::consts::LN_2 / std::f64::consts::PI;
    let per_level = (turn / 2.0).ceil().max(1.0) as usize;
    let nodes = panel_nodes(&graded_offsets(0.5 * len, h_max, per_level, GRADING_LEVELS));
    let log_phi_z = phi.log_value(z);
    let term = |t: f64, da: f64, db: f64| {
        let xi = Complex64::from_polar(1.0, t);
        f.eval(t) * xi / (xi - z) * ((phi.log_on_arc(da, db) - log_phi_z) * alpha).exp()
    };
    let value: Complex64 = nodes
        .theta
        .iter()
        .zip(&nodes.weight)
        .map(|(&s, &w)| (term(a + s, s, len - s) + term(b - s, len - s, s)) * w)
        .sum();
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(BepError::Numerical("Carleman integral overflowed".into()));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::reference_spec;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference() -> Problem {
        let p = Problem::new(reference_spec(0.5, 20)).unwrap();
        let m = p.solve_for_mu(0.0).unwrap().m0;
        Problem::new(reference_spec(0.5, 20).with_bound(2.0 * m)).unwrap()
    }

    #[test]
    fn constants_at_simple_mu() {
        let p = reference();
        let r0 = p.solve_for_mu(0.0).unwrap();
        let k0 = stability_constants(&p, &r0).unwrap();
        assert_eq!((k0.m0, k0.m1), (1.0, 1.0));
        let r = p.solve_for_mu(-0.5).unwrap();
        let k = stability_constants(&p, &r).unwrap();
        assert_eq!((k.m0, k.m1), (1.0, 2.0));
        assert!(k.xi_norm > 0.0);
    }

    #[test]
    fn xi_at_tuned_state_is_positive_and_above_prior_bound() {
        let p = reference();
        let r = p.tune_mu().unwrap();
        let k = stability_constants(&p, &r).unwrap();
        assert!(k.xi_norm > 0.0);
        if let Some(lb) = k.xi_lower_bound {
            assert!(k.xi_norm >= lb * (1.0 - 1e-9));
        }
    }

    #[test]
    fn zero_perturbation_measures_zero() {
        let p = reference();
        for kind in PerturbationKind::ALL {
            let (_, rows) = perturbation_experiment(&p, kind, &[0.0], 7).unwrap();
            assert_eq!(rows[0].measured, Some(0.0), "{kind:?}");
        }
    }

    #[test]
    fn small_perturbations_respect_bounds() {
        let p = reference();
        for kind in PerturbationKind::ALL {
            let (_, rows) = perturbation_experiment(&p, kind, &[1e-4, 1e-5], 11).unwrap();
            for r in rows {
                let m = r.measured.unwrap();
                assert!(m > 0.0 && m <= r.bound, "{kind:?} {} {m} {}", r.delta, r.bound);
            }
        }
    }

    #[test]
    fn colliding_points_are_flagged() {
        let p = reference();
        let (_, rows) = perturbation_experiment(&p, PerturbationKind::Z, &[5.0], 3).unwrap();
        assert!(rows[0].measured.is_none());
        assert!(rows[0].failure.is_some());
    }

    #[test]
    fn companion_matches_direct_solve() {
        let p = reference();
        let comp = companion_mu0(&p).unwrap();
        let direct = p.solve_for_mu(0.0).unwrap();
        for n in 0..256 {
            let t = TAU * n as f64 / 256.0;
            assert!((comp.boundary(t) - direct.gtilde_boundary(t)).norm() < 1e-8);
        }
        for (z, w) in p.spec().data.points().iter().zip(p.spec().data.values()) {
            assert!((comp.eval(*z) - w).norm() < 1e-8);
        }
    }

    #[test]
    fn companion_with_zero_data_is_interpolant() {
        let zero = BoundaryFn::constant(2048, c(0.0, 0.0));
        let mut spec = reference_spec(0.5, 20);
        spec.f = zero.clone();
        spec.h = zero;
        let p = Problem::new(spec).unwrap();
        let comp = companion_mu0(&p).unwrap();
        for n in 0..32 {
            let z = Complex64::from_polar(0.9, TAU * n as f64 / 32.0);
            assert!((comp.eval(z) - p.interpolant().eval(z)).norm() < 1e-12);
        }
    }

    #[test]
    fn companion_needs_kernel_interpolant() {
        let spec = reference_spec(0.5, 20).with_interpolant(InterpolantKind::Lagrange);
        assert!(companion_mu0(&Problem::new(spec).unwrap()).is_err());
    }

    #[test]
    fn first_order_correction() {
        let p = reference();
        let same = companion_first_order(&p, 0.0).unwrap();
        let base = companion_mu0(&p).unwrap();
        assert_eq!(same.solution.g, base.g);
        let m2 = p.solve_for_mu(0.0).unwrap().m0_sq();
        let delta = 0.01 * m2;
        let fo = companion_first_order(&p, delta).unwrap();
        assert!(fo.mu_shift < 0.0);
        let corrected = p.residuals(&fo.solution.g).1.powi(2);
        assert!((corrected - (m2 + delta)).abs() < delta);
    }

    #[test]
    fn quenching_contract() {
        let split = ArcSplit::new(PI / 3.0).unwrap();
        let phi = QuenchingFunction::new(split, 2.0).unwrap();
        for n in 0..360 {
            let t = TAU * (n as f64 + 0.5) / 360.0;
            let v = phi.eval(Complex64::from_polar(1.0, t)).norm();
            let want = if split.contains(Region::J, t) { 1.0 } else { 2.0 };
            assert!((v - want).abs() < 1e-6, "theta = {t}: {v}");
        }
        for r in [0.0, 0.3, 0.6, 0.9] {
            for n in 0..16 {
                let z = Complex64::from_polar(r, TAU * n as f64 / 16.0);
                assert!(phi.eval(z).norm() > 1.0);
            }
        }
        assert!(QuenchingFunction::new(split, 1.0).is_err());
    }

    #[test]
    fn schwarz_closed_form_matches_quadrature() {
        let split = ArcSplit::new(1.2).unwrap();
        let phi = QuenchingFunction::new(split, 3.0).unwrap();
        for &z in &[c(0.0, 0.0), c(0.5, 0.2), c(-0.7, 0.1), c(0.1, -0.8)] {
            let d = (phi.schwarz(z) - phi.schwarz_quadrature(z, 8192)).norm();
            assert!(d < 1e-10, "{z}: {d}");
        }
    }

    #[test]
    fn carleman_recovers_constant_and_quadratic() {
        let split = ArcSplit::new(PI / 3.0).unwrap();
        let one = BoundaryFn::constant(2048, c(1.0, 0.0));
        let quad = BoundaryFn::new(2048, |t| Complex64::from_polar(1.0, 2.0 * t) + 1.0);
        let targets: [(&BoundaryFn, fn(Complex64) -> Complex64); 2] =
            [(&one, |_| Complex64::new(1.0, 0.0)), (&quad, |z| z * z + 1.0)];
        for (f, target) in targets {
            for z in [c(0.0, 0.0), c(0.2, 0.0), c(0.0, 0.3)] {
                let errs: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
                    .iter()
                    .map(|&a| (carleman_extrapolate(f, &split, 2.0, a, z, 0.95).unwrap() - target(z)).norm())
                    .collect();
                assert!(errs.windows(2).all(|w| w[1] < w[0]), "{z}: {errs:?}");
                assert!(errs[3] < 1e-2);
            }
        }
        assert!(matches!(
            carleman_extrapolate(&one, &split, 2.0, 1.0, c(0.96, 0.0), 0.95),
            Err(BepError::OutOfDomain { .. })
        ));
    }
}
