//! Truncated power series on the unit circle, projections onto the analytic
//! and anti-analytic parts, and inner products restricted to arcs.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::num::NonZeroUsize;
use std::sync::{Arc, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{BepError, Result};

/// Number of Gauss-Legendre nodes per arc panel.
pub const PANEL_ORDER: usize = 16;

/// Truncated analytic polynomial `g(z) = sum_k c_k z^k`, `k = 0..Q-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierPoly {
    coeffs: Vec<Complex64>,
}

impl FourierPoly {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(BepError::invalid("a FourierPoly needs at least one coefficient"));
        }
        if let Some(k) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(BepError::invalid(format!("coefficient {k} is not finite")));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(q: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); q.max(1)],
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Truncation order Q.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    /// Boundary value at `e^{i theta}`.
    pub fn trace(&self, theta: f64) -> Complex64 {
        self.eval(Complex64::from_polar(1.0, theta))
    }

    /// Squared H2 norm, i.e. the squared coefficient 2-norm.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Boundary trace wrapped as a [`BoundaryFn`].
    pub fn to_boundary(&self, quad_points: usize) -> BoundaryFn {
        let p = self.clone();
        BoundaryFn::new(quad_points, move |t| p.trace(t))
    }
}

pub(crate) fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

type Evaluator = dyn Fn(f64) -> Complex64 + Send + Sync;

/// Complex function on the circle, parametrised by angle, with the number of
/// uniform nodes used when it is projected.
#[derive(Clone)]
pub struct BoundaryFn {
    eval: Arc<Evaluator>,
    quad_points: usize,
}

impl BoundaryFn {
    pub fn new<F>(quad_points: usize, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            quad_points,
        }
    }

    pub fn constant(quad_points: usize, value: Complex64) -> Self {
        Self::new(quad_points, move |_| value)
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        (self.eval)(theta)
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points
    }

    pub fn with_quad_points(&self, quad_points: usize) -> Self {
        Self {
            eval: Arc::clone(&self.eval),
            quad_points,
        }
    }
}

impl fmt::Debug for BoundaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryFn")
            .field("quad_points", &self.quad_points)
            .finish_non_exhaustive()
    }
}

/// Splitting of the circle into `J = [-theta0, theta0]` and its complement `I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcSplit {
    theta0: f64,
}

/// Part of the circle an integral runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Full,
    J,
    I,
}

impl ArcSplit {
    pub fn new(theta0: f64) -> Result<Self> {
        if !theta0.is_finite() || theta0 <= 0.0 {
            return Err(BepError::invalid(format!(
                "theta0 = {theta0} leaves the arc J empty; need 0 < theta0 < pi"
            )));
        }
        if theta0 >= PI {
            return Err(BepError::invalid(format!(
                "theta0 = {theta0} leaves the arc I empty; need 0 < theta0 < pi"
            )));
        }
        Ok(Self { theta0 })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// Angular interval `[a, b]` covering the region.
    pub fn interval(&self, region: Region) -> (f64, f64) {
        match region {
            Region::Full => (0.0, TAU),
            Region::J => (-self.theta0, self.theta0),
            Region::I => (self.theta0, TAU - self.theta0),
        }
    }

    /// Normalised measure `|region| / 2pi`.
    pub fn measure(&self, region: Region) -> f64 {
        let (a, b) = self.interval(region);
        (b - a) / TAU
    }

    pub fn contains(&self, region: Region, theta: f64) -> bool {
        let t = theta.rem_euclid(TAU);
        let in_j = t <= self.theta0 || t >= TAU - self.theta0;
        match region {
            Region::Full => true,
            Region::J => in_j,
            Region::I => !in_j,
        }
    }
}

/// Quadrature nodes and weights normalised so that the weights of a region
/// sum to its normalised measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Nodes {
    pub theta: Vec<f64>,
    pub weight: Vec<f64>,
}

impl Nodes {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Weighted sum `sum_n w_n f(theta_n)`.
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        self.theta
            .iter()
            .zip(&self.weight)
            .map(|(&t, &w)| f(t) * w)
            .sum()
    }
}

fn legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let rule = GaussLegendre::new(NonZeroUsize::new(PANEL_ORDER).expect("nonzero order"));
        rule.nodes()
            .copied()
            .zip(rule.weights().copied())
            .collect()
    })
}

/// Composite Gauss-Legendre nodes on `[a, b]` split at `breaks`, normalised by `2pi`.
pub(crate) fn panel_nodes(breaks: &[f64]) -> Nodes {
    let rule = legendre_rule();
    let mut theta = Vec::with_capacity(breaks.len() * PANEL_ORDER);
    let mut weight = Vec::with_capacity(breaks.len() * PANEL_ORDER);
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        for &(x, w) in rule {
            theta.push(mid + half * x);
            weight.push(w * half / TAU);
        }
    }
    Nodes { theta, weight }
}

fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels)
        .map(|k| a + (b - a) * k as f64 / panels as f64)
        .collect()
}

/// Quadrature nodes for a region. The full circle uses the uniform
/// trapezoid grid with `quad_points` nodes starting at `theta = 0`; the arcs
/// use composite Gauss-Legendre panels of comparable density.
pub fn region_nodes(split: &ArcSplit, region: Region, quad_points: usize) -> Nodes {
    let quad_points = quad_points.max(1);
    match region {
        Region::Full => {
            let w = 1.0 / quad_points as f64;
            Nodes {
                theta: (0..quad_points)
                    .map(|n| TAU * n as f64 / quad_points as f64)
                    .collect(),
                weight: vec![w; quad_points],
            }
        }
        Region::J | Region::I => {
            let (a, b) = split.interval(region);
            let share = quad_points as f64 * (b - a) / TAU;
            let panels = ((share / PANEL_ORDER as f64).ceil() as usize).max(1);
            panel_nodes(&uniform_breaks(a, b, panels))
        }
    }
}

fn check_projection_args(u: &BoundaryFn, q: usize) -> Result<()> {
    if q < 1 {
        return Err(BepError::invalid("truncation order Q must be at least 1"));
    }
    if u.quad_points() < 4 * q {
        return Err(BepError::invalid(format!(
            "quad_points = {} is below the oversampling floor 4Q = {}",
            u.quad_points(),
            4 * q
        )));
    }
    Ok(())
}

/// Values of `u` on the uniform grid.
fn grid_values(u: &BoundaryFn) -> (Vec<f64>, Vec<Complex64>) {
    let p = u.quad_points();
    let theta: Vec<f64> = (0..p).map(|n| TAU * n as f64 / p as f64).collect();
    let values = theta.iter().map(|&t| u.eval(t)).collect();
    (theta, values)
}

/// Fourier coefficients `hat u(k)` for `k = sign * (offset + j)`, `j = 0..q-1`.
fn grid_coefficients(u: &BoundaryFn, q: usize, sign: f64, offset: usize) -> Vec<Complex64> {
    let (theta, values) = grid_values(u);
    let p = theta.len() as f64;
    (0..q)
        .map(|j| {
            let k = sign * (offset + j) as f64;
            theta
                .iter()
                .zip(&values)
                .map(|(&t, &v)| v * Complex64::from_polar(1.0, -k * t))
                .sum::<Complex64>()
                / p
        })
        .collect()
}

/// First `q` nonnegative-index Fourier coefficients of `u`.
pub fn project_plus(u: &BoundaryFn, q: usize) -> Result<FourierPoly> {
    check_projection_args(u, q)?;
    FourierPoly::new(grid_coefficients(u, q, 1.0, 0))
        .map_err(|e| BepError::Numerical(format!("projection produced {e}")))
}

/// Coefficients `hat u(-1), ..., hat u(-q)`.
pub fn project_minus(u: &BoundaryFn, q: usize) -> Result<Vec<Complex64>> {
    check_projection_args(u, q)?;
    Ok(grid_coefficients(u, q, -1.0, 1))
}

/// `(1/2pi) int u conj(v) dtheta` over a region.
pub fn inner_product_arc(
    u: &BoundaryFn,
    v: &BoundaryFn,
    split: &ArcSplit,
    region: Region,
) -> Complex64 {
    let p = u.quad_points().max(v.quad_points());
    region_nodes(split, region, p).integrate(|t| u.eval(t) * v.eval(t).conj())
}

/// Moments `<u, z^k>` over a region for `k = 0..q-1`.
pub fn region_coefficients(
    u: &BoundaryFn,
    split: &ArcSplit,
    region: Region,
    q: usize,
) -> Vec<Complex64> {
    let nodes = region_nodes(split, region, u.quad_points());
    let values: Vec<Complex64> = nodes.theta.iter().map(|&t| u.eval(t)).collect();
    moments_from_values(&nodes, &values, q)
}

/// `sum_n w_n v_n conj(z_n)^k` for `k = 0..q-1`.
pub(crate) fn moments_from_values(nodes: &Nodes, values: &[Complex64], q: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); q];
    for ((&t, &w), &v) in nodes.theta.iter().zip(&nodes.weight).zip(values) {
        let step = Complex64::from_polar(1.0, -t);
        let mut acc = v * w;
        for slot in out.iter_mut() {
            *slot += acc;
            acc *= step;
        }
    }
    out
}
