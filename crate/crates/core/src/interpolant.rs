//! Holomorphic interpolants of interior point data: the minimal-norm
//! reproducing-kernel interpolant and the Lagrange polynomial.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::blaschke::ZERO_SEPARATION;
use crate::error::{BepError, Result};
use crate::fourier::{horner, BoundaryFn, FourierPoly};

/// Largest accepted condition estimate of the Gram matrix.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Interior points `z_j` with prescribed values `omega_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationData {
    points: Vec<Complex64>,
    values: Vec<Complex64>,
}

impl InterpolationData {
    pub fn new(points: Vec<Complex64>, values: Vec<Complex64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(BepError::invalid(format!(
                "{} interpolation points but {} values",
                points.len(),
                values.len()
            )));
        }
        validate_points(&points)?;
        if let Some(j) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(BepError::invalid(format!("interpolation value {j} is not finite")));
        }
        Ok(Self { points, values })
    }

    pub fn empty() -> Self {
        Self {
            points: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn validate_points(points: &[Complex64]) -> Result<()> {
    for (j, z) in points.iter().enumerate() {
        if !(z.norm() < 1.0) {
            return Err(BepError::invalid(format!(
                "interpolation point {j} = {z} is not inside the open unit disk"
            )));
        }
        if let Some(k) = points[..j]
            .iter()
            .position(|w| (w - z).norm() <= ZERO_SEPARATION)
        {
            return Err(BepError::invalid(format!(
                "interpolation points {k} and {j} coincide"
            )));
        }
    }
    Ok(())
}

const REFINEMENT_STEPS: usize = 3;

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[derive(Default)]
struct Compensated {
    hi: f64,
    lo: f64,
}

impl Compensated {
    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let err = a.mul_add(b, -p);
        let (s, e) = two_sum(self.hi, p);
        self.hi = s;
        self.lo += e + err;
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// `sum a_k b_k` evaluated with error-free transformations, accurate to
/// roughly twice working precision.
fn compensated_dot(terms: impl Iterator<Item = (Complex64, Complex64)>) -> Complex64 {
    let mut re = Compensated::default();
    let mut im = Compensated::default();
    for (a, b) in terms {
        re.add_product(a.re, b.re);
        re.add_product(-a.im, b.im);
        im.add_product(a.re, b.im);
        im.add_product(a.im, b.re);
    }
    Complex64::new(re.value(), im.value())
}

/// Szego kernel `K(a, z) = 1 / (1 - conj(a) z)`.
pub fn szego_kernel(a: Complex64, z: Complex64) -> Complex64 {
    1.0 / (1.0 - a.conj() * z)
}

/// Boundary trace of `K(a, .)`.
pub fn kernel_boundary(a: Complex64, quad_points: usize) -> BoundaryFn {
    BoundaryFn::new(quad_points, move |t| {
        szego_kernel(a, Complex64::from_polar(1.0, t))
    })
}

/// Gram matrix with entry `(k, j) = 1 / (1 - conj(z_k) z_j)`.
pub fn gram_matrix(points: &[Complex64]) -> Result<DMatrix<Complex64>> {
    validate_points(points)?;
    let n = points.len();
    Ok(DMatrix::from_fn(n, n, |k, j| szego_kernel(points[k], points[j])))
}

/// Ratio of extreme eigenvalues of a Hermitian matrix.
pub fn hermitian_condition(m: &DMatrix<Complex64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(1.0);
    }
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| BepError::Numerical("Hermitian eigensolve did not converge".into()))?;
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    Ok(if lo <= 0.0 { f64::INFINITY } else { hi / lo })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InterpolantKind {
    Kernel,
    Lagrange,
}

impl std::str::FromStr for InterpolantKind {
    type Err = BepError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel" => Ok(Self::Kernel),
            "lagrange" => Ok(Self::Lagrange),
            other => Err(BepError::invalid(format!(
                "unknown interpolant kind `{other}` (expected `kernel` or `lagrange`)"
            ))),
        }
    }
}

/// An interpolant together with its truncated boundary trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Interpolant {
    kind: InterpolantKind,
    points: Vec<Complex64>,
    /// Kernel weights or monomial coefficients, depending on `kind`.
    weights: Vec<Complex64>,
    tails: Vec<Complex64>,
    trace: FourierPoly,
    norm_sq: f64,
}

impl Interpolant {
    pub fn kind(&self) -> InterpolantKind {
        self.kind
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self.kind {
            InterpolantKind::Kernel => compensated_dot(
                self.points
                    .iter()
                    .zip(self.weights.iter().zip(&self.tails))
                    .flat_map(|(&p, (&w, &t))| {
                        let k = szego_kernel(p, z);
                        [(w, k), (t, k)]
                    }),
            ),
            InterpolantKind::Lagrange => horner(&self.weights, z),
        }
    }

    pub fn boundary(&self, theta: f64) -> Complex64 {
        self.eval(Complex64::from_polar(1.0, theta))
    }

    /// First Q Taylor coefficients.
    pub fn trace(&self) -> &FourierPoly {
        &self.trace
    }

    /// Exact H2 norm.
    pub fn h2_norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }
}

/// Build an interpolant of the requested kind.
pub fn build_interpolant(
    kind: InterpolantKind,
    data: &InterpolationData,
    q: usize,
) -> Result<Interpolant> {
    match kind {
        InterpolantKind::Kernel => kernel_interpolant(data, q),
        InterpolantKind::Lagrange => lagrange_interpolant(data, q),
    }
}

/// Minimal-norm interpolant `psi(z) = sum_k psi_k / (1 - conj(z_k) z)`.
pub fn kernel_interpolant(data: &InterpolationData, q: usize) -> Result<Interpolant> {
    if q < 1 {
        return Err(BepError::invalid("truncation order Q must be at least 1"));
    }
    let gram = gram_matrix(data.points())?;
    let condition = hermitian_condition(&gram)?;
    if !(condition <= GRAM_CONDITION_LIMIT) {
        return Err(BepError::IllConditioned {
            condition,
            limit: GRAM_CONDITION_LIMIT,
        });
    }
    // psi(z_m) = sum_k psi_k K(z_k, z_m), i.e. the transposed Gram system.
    let system = gram.transpose();
    let rhs = DVector::from_column_slice(data.values());
    let (weights, tails) = if data.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let chol = system.clone().cholesky().ok_or(BepError::IllConditioned {
            condition,
            limit: GRAM_CONDITION_LIMIT,
        })?;
        // Weights are kept as unevaluated sums `hi + lo` so that the
        // interpolation conditions survive large kernel weights.
        let mut hi = chol.solve(&rhs);
        let mut lo = DVector::zeros(rhs.len());
        for _ in 0..REFINEMENT_STEPS {
            let residual = DVector::from_fn(rhs.len(), |m, _| {
                rhs[m]
                    - compensated_dot(
                        (0..hi.len())
                            .flat_map(|k| [(system[(m, k)], hi[k]), (system[(m, k)], lo[k])]),
                    )
            });
            let delta = chol.solve(&residual);
            for k in 0..hi.len() {
                let (re, re_lo) = two_sum(hi[k].re, lo[k].re + delta[k].re);
                let (im, im_lo) = two_sum(hi[k].im, lo[k].im + delta[k].im);
                hi[k] = Complex64::new(re, im);
                lo[k] = Complex64::new(re_lo, im_lo);
            }
        }
        (hi.iter().copied().collect(), lo.iter().copied().collect())
    };

    let mut coeffs = vec![Complex64::new(0.0, 0.0); q];
    for ((&p, &w), &t) in data.points().iter().zip(&weights).zip(&tails) {
        let mut pow = w + t;
        for c in coeffs.iter_mut() {
            *c += pow;
            pow *= p.conj();
        }
    }
    let mut norm_sq = Complex64::new(0.0, 0.0);
    for (k, &wk) in weights.iter().enumerate() {
        for (j, &wj) in weights.iter().enumerate() {
            norm_sq += wk * gram[(k, j)] * wj.conj();
        }
    }
    Ok(Interpolant {
        kind: InterpolantKind::Kernel,
        points: data.points().to_vec(),
        weights,
        tails,
        trace: FourierPoly::new(coeffs)?,
        norm_sq: norm_sq.re.max(0.0),
    })
}

/// Monomial coefficients of the Lagrange basis polynomial `L_j`.
pub fn lagrange_basis(points: &[Complex64], j: usize) -> Vec<Complex64> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    let mut denom = Complex64::new(1.0, 0.0);
    for (k, &zk) in points.iter().enumerate() {
        if k == j {
            continue;
        }
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * zk;
        }
        poly = next;
        denom *= points[j] - zk;
    }
    poly.into_iter().map(|c| c / denom).collect()
}

/// Degree `N - 1` polynomial through the data.
pub fn lagrange_interpolant(data: &InterpolationData, q: usize) -> Result<Interpolant> {
    let n = data.len();
    if n == 0 {
        return Err(BepError::invalid(
            "the Lagrange interpolant needs at least one point",
        ));
    }
    if q < n {
        return Err(BepError::invalid(format!(
            "truncation order Q = {q} cannot hold a polynomial of degree {}",
            n - 1
        )));
    }
    let gram = gram_matrix(data.points())?;
    let condition = hermitian_condition(&gram)?;
    if !(condition <= GRAM_CONDITION_LIMIT) {
        return Err(BepError::IllConditioned {
            condition,
            limit: GRAM_CONDITION_LIMIT,
        });
    }
    let mut weights = vec![Complex64::new(0.0, 0.0); n];
    for (j, &w) in data.values().iter().enumerate() {
        for (c, b) in weights.iter_mut().zip(lagrange_basis(data.points(), j)) {
            *c += w * b;
        }
    }
    let mut coeffs = weights.clone();
    coeffs.resize(q, Complex64::new(0.0, 0.0));
    let norm_sq = weights.iter().map(|c| c.norm_sqr()).sum();
    Ok(Interpolant {
        kind: InterpolantKind::Lagrange,
        points: data.points().to_vec(),
        tails: vec![Complex64::new(0.0, 0.0); weights.len()],
        weights,
        trace: FourierPoly::new(coeffs)?,
        norm_sq,
    })
}

/// Values of `z^5 + z^2 + 1` at the given points.
pub fn table1_oracle(points: &[Complex64]) -> Vec<Complex64> {
    points.iter().map(|&z| z.powu(5) + z * z + 1.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{inner_product_arc, ArcSplit, Region};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn table_points() -> Vec<Complex64> {
        vec![c(0.5, 0.4), c(-0.3, 0.3), c(0.2, 0.6), c(0.2, -0.5), c(0.8, -0.1)]
    }

    #[test]
    fn gram_small_cases() {
        let g = gram_matrix(&[c(0.0, 0.0)]).unwrap();
        assert_eq!(g[(0, 0)], c(1.0, 0.0));
        let g = gram_matrix(&[c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        let want = [[1.0, 1.0], [1.0, 4.0 / 3.0]];
        for k in 0..2 {
            for j in 0..2 {
                assert!((g[(k, j)] - want[k][j]).norm() < 1e-15);
            }
        }
        assert!(gram_matrix(&[c(0.1, 0.1), c(0.1, 0.1)]).is_err());
    }

    #[test]
    fn gram_of_table_points_is_positive_definite() {
        let g = gram_matrix(&table_points()).unwrap();
        assert!((g.adjoint() - &g).norm() < 1e-15);
        let eig = nalgebra::SymmetricEigen::new(g);
        assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn kernel_trivial_cases() {
        let one = InterpolationData::new(vec![c(0.0, 0.0)], vec![c(5.0, 0.0)]).unwrap();
        let psi = kernel_interpolant(&one, 4).unwrap();
        for z in [c(0.3, 0.2), c(-0.9, 0.0)] {
            assert!((psi.eval(z) - 5.0).norm() < 1e-14);
        }
        let none = kernel_interpolant(&InterpolationData::empty(), 3).unwrap();
        assert_eq!(none.eval(c(0.2, 0.1)), c(0.0, 0.0));
        assert_eq!(none.trace().norm(), 0.0);
    }

    #[test]
    fn table_values_to_four_decimals() {
        let want = [
            c(0.9852, 0.3752),
            c(1.0097, -0.1897),
            c(0.7811, 0.2362),
            c(0.8328, -0.1852),
            c(1.9069, -0.3584),
        ];
        let values = table1_oracle(&table_points());
        for (v, w) in values.iter().zip(want) {
            assert!((v.re - w.re).abs() < 1e-4 && (v.im - w.im).abs() < 1e-4, "{v} vs {w}");
        }
        assert_eq!(table1_oracle(&[c(0.0, 0.0)]), vec![c(1.0, 0.0)]);
        let data = InterpolationData::new(table_points(), values).unwrap();
        let psi = kernel_interpolant(&data, 20).unwrap();
        let at = psi.eval(table_points()[0]);
        assert!((at.re - 0.9852).abs() < 1e-4 && (at.im - 0.3752).abs() < 1e-4);
    }

    #[test]
    fn lagrange_small_cases() {
        let one = InterpolationData::new(vec![c(0.4, 0.1)], vec![c(2.0, -1.0)]).unwrap();
        let p = lagrange_interpolant(&one, 2).unwrap();
        assert!((p.eval(c(-0.7, 0.2)) - c(2.0, -1.0)).norm() < 1e-15);
        let two = InterpolationData::new(vec![c(0.0, 0.0), c(0.5, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let p = lagrange_interpolant(&two, 4).unwrap();
        let want = [c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        for (a, b) in p.trace().coeffs().iter().zip(want) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(lagrange_interpolant(&InterpolationData::empty(), 4).is_err());
        assert!(lagrange_interpolant(&two, 1).is_err());
    }

    #[test]
    fn kernel_is_norm_minimal_on_table_data() {
        let data = InterpolationData::new(table_points(), table1_oracle(&table_points())).unwrap();
        let k = kernel_interpolant(&data, 20).unwrap();
        let l = lagrange_interpolant(&data, 20).unwrap();
        for (z, w) in data.points().iter().zip(data.values()) {
            assert!((k.eval(*z) - w).norm() < 1e-9);
            assert!((l.eval(*z) - w).norm() < 1e-9);
        }
        assert!(k.h2_norm() <= l.h2_norm() + 1e-10);
        // z^5 + z^2 + 1 interpolates too, so it bounds the kernel norm as well.
        assert!(k.h2_norm() <= 3f64.sqrt() + 1e-10);
    }

    #[test]
    fn close_points_are_ill_conditioned() {
        let data = InterpolationData::new(
            vec![c(0.5, 0.0), c(0.5 + 1e-7, 0.0), c(0.5, 1e-7)],
            vec![c(1.0, 0.0); 3],
        )
        .unwrap();
        assert!(matches!(
            kernel_interpolant(&data, 8),
            Err(BepError::IllConditioned { .. })
        ));
    }

    #[test]
    fn trace_matches_evaluator_inside() {
        let data = InterpolationData::new(table_points(), table1_oracle(&table_points())).unwrap();
        let k = kernel_interpolant(&data, 400).unwrap();
        let z = c(0.3, -0.4);
        assert!((k.trace().eval(z) - k.eval(z)).norm() < 1e-12);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("kernel".parse::<InterpolantKind>().unwrap(), InterpolantKind::Kernel);
        assert_eq!("lagrange".parse::<InterpolantKind>().unwrap(), InterpolantKind::Lagrange);
        assert!("spline".parse::<InterpolantKind>().is_err());
    }

    fn separated_points() -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((0.0f64..0.9, 0.0f64..std::f64::consts::TAU), 1..=8)
            .prop_map(|v| v.into_iter().map(|(r, t)| Complex64::from_polar(r, t)).collect::<Vec<_>>())
            .prop_filter("points must be separated", |pts| {
                pts.iter().enumerate().all(|(j, a)| pts[..j].iter().all(|b| (a - b).norm() >= 0.05))
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn both_interpolants_interpolate(
            pts in separated_points(),
            seed in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 8),
        ) {
            let values: Vec<Complex64> = seed.iter().take(pts.len()).map(|&(a, b)| c(a, b)).collect();
            let data = InterpolationData::new(pts.clone(), values.clone()).unwrap();
            let k = match kernel_interpolant(&data, 16) {
                Ok(k) => k,
                Err(BepError::IllConditioned { .. }) => return Ok(()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            let l = lagrange_interpolant(&data, 16).unwrap();
            for (z, w) in pts.iter().zip(&values) {
                prop_assert!((k.eval(*z) - w).norm() < 1e-9);
                prop_assert!((l.eval(*z) - w).norm() < 1e-9);
            }
            prop_assert!(k.h2_norm() <= l.h2_norm() + 1e-10);
        }

        #[test]
        fn reproducing_property(r in 0.0f64..=0.9, t in 0.0f64..std::f64::consts::TAU,
                                a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6)) {
            let z0 = Complex64::from_polar(r, t);
            let u = FourierPoly::new(a.iter().map(|&(x, y)| c(x, y)).collect()).unwrap();
            let split = ArcSplit::new(1.0).unwrap();
            let ip = inner_product_arc(&u.to_boundary(1024), &kernel_boundary(z0, 1024), &split, Region::Full);
            prop_assert!((ip - u.eval(z0)).norm() < 1e-8);
        }
    }
}
