//! The worked configuration: five interior points carrying the values of
//! `z^5 + z^2 + 1`, `J = [-pi/3, pi/3]`, and data with a tunable pole term.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::fourier::BoundaryFn;
use crate::interpolant::{table1_oracle, InterpolationData};
use crate::solver::{ProblemSpec, DEFAULT_QUAD_POINTS};

pub const REFERENCE_THETA0: f64 = PI / 3.0;

/// Interior points `z_1, ..., z_5`.
pub fn table_points() -> Vec<Complex64> {
    [(0.5, 0.4), (-0.3, 0.3), (0.2, 0.6), (0.2, -0.5), (0.8, -0.1)]
        .iter()
        .map(|&(re, im)| Complex64::new(re, im))
        .collect()
}

/// Published values at the points, rounded to four decimals.
pub fn table_values_rounded() -> Vec<Complex64> {
    [
        (0.9852, 0.3752),
        (1.0097, -0.1897),
        (0.7811, 0.2362),
        (0.8328, -0.1852),
        (1.9069, -0.3584),
    ]
    .iter()
    .map(|&(re, im)| Complex64::new(re, im))
    .collect()
}

pub fn reference_data() -> InterpolationData {
    let pts = table_points();
    let vals = table1_oracle(&pts);
    InterpolationData::new(pts, vals).expect("reference points are valid")
}

/// `f(theta) = e^{5i theta} + e^{2i theta} + 1 + epsilon / (e^{i theta} - 0.4 - 0.3i)`.
pub fn reference_f(epsilon: f64, quad_points: usize) -> BoundaryFn {
    let pole = Complex64::new(0.4, 0.3);
    BoundaryFn::new(quad_points, move |t| {
        let z = Complex64::from_polar(1.0, t);
        z.powu(5) + z * z + 1.0 + epsilon / (z - pole)
    })
}

/// `h(theta) = 1 / (e^{i theta} - 0.5i)`.
pub fn reference_h(quad_points: usize) -> BoundaryFn {
    let pole = Complex64::new(0.0, 0.5);
    BoundaryFn::new(quad_points, move |t| 1.0 / (Complex64::from_polar(1.0, t) - pole))
}

/// The worked configuration with no bound set.
pub fn reference_spec(epsilon: f64, q: usize) -> ProblemSpec {
    ProblemSpec::new(
        reference_f(epsilon, DEFAULT_QUAD_POINTS),
        reference_h(DEFAULT_QUAD_POINTS),
        reference_data(),
        REFERENCE_THETA0,
        q,
    )
}
