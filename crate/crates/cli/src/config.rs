//! Run configuration read from TOML.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use hardy_bep::fourier::{ArcSplit, BoundaryFn};
use hardy_bep::interpolant::{InterpolantKind, InterpolationData};
use hardy_bep::reference::{reference_data, reference_f, reference_h};
use hardy_bep::solver::{default_mu_grid, log_mu_grid, Problem, ProblemSpec, DEFAULT_QUAD_POINTS};
use hardy_bep::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// Complex number written as `"re,im"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexValue(pub Complex64);

impl FromStr for ComplexValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (re, im) = s
            .split_once(',')
            .ok_or_else(|| format!("`{s}` is not of the form \"re,im\""))?;
        let parse = |part: &str| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| format!("`{s}`: {e}"))
        };
        Ok(Self(Complex64::new(parse(re)?, parse(im)?)))
    }
}

impl fmt::Display for ComplexValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0.re, self.0.im)
    }
}

impl Serialize for ComplexValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ComplexValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// One Fourier mode `c e^{i k theta}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub k: i32,
    pub c: ComplexValue,
}

/// Boundary data source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    /// The built-in worked example; `epsilon` applies to `f` only.
    Reference {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    Zero,
    Trig { terms: Vec<TrigTerm> },
    /// Samples at `theta_k = 2 pi k / n`, linearly interpolated.
    Table { values: Vec<ComplexValue> },
}

impl Source {
    fn build(&self, field: &str, is_f: bool, quad_points: usize) -> Result<BoundaryFn, CliError> {
        match self {
            Source::Reference { epsilon } => {
                if is_f {
                    let eps = epsilon.unwrap_or(0.0);
                    if !eps.is_finite() {
                        return Err(CliError::config(format!("{field}.epsilon: must be finite")));
                    }
                    Ok(reference_f(eps, quad_points))
                } else if epsilon.is_some() {
                    Err(CliError::config(format!(
                        "{field}.epsilon: only the f reference takes epsilon"
                    )))
                } else {
                    Ok(reference_h(quad_points))
                }
            }
            Source::Zero => Ok(BoundaryFn::constant(quad_points, Complex64::new(0.0, 0.0))),
            Source::Trig { terms } => {
                let terms: Vec<(f64, Complex64)> = terms.iter().map(|t| (t.k as f64, t.c.0)).collect();
                Ok(BoundaryFn::new(quad_points, move |theta| {
                    terms
                        .iter()
                        .map(|&(k, c)| c * Complex64::from_polar(1.0, k * theta))
                        .sum()
                }))
            }
            Source::Table { values } => {
                if values.is_empty() {
                    return Err(CliError::config(format!("{field}.values: table is empty")));
                }
                let values: Arc<[Complex64]> = values.iter().map(|v| v.0).collect();
                Ok(BoundaryFn::new(quad_points, move |theta| sample_table(&values, theta)))
            }
        }
    }
}

fn sample_table(values: &[Complex64], theta: f64) -> Complex64 {
    let n = values.len();
    let x = theta.rem_euclid(TAU) / TAU * n as f64;
    let k = (x.floor() as usize).min(n - 1);
    let frac = x - k as f64;
    values[k] * (1.0 - frac) + values[(k + 1) % n] * frac
}

/// Interpolation data: explicit lists, or the built-in table via `preset`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<ComplexValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<ComplexValue>,
}

impl DataConfig {
    fn build(&self) -> Result<InterpolationData, CliError> {
        match self.preset.as_deref() {
            Some("reference") if self.points.is_empty() && self.values.is_empty() => Ok(reference_data()),
            Some("reference") => Err(CliError::config(
                "problem.data: give either preset or points/values, not both",
            )),
            Some(other) => Err(CliError::config(format!(
                "problem.data.preset: unknown preset `{other}` (expected reference)"
            ))),
            None => {
                for (j, z) in self.points.iter().enumerate() {
                    if !(z.0.norm() < 1.0) {
                        return Err(CliError::config(format!(
                            "problem.data.points[{j}]: |z| = {} must be below 1",
                            z.0.norm()
                        )));
                    }
                }
                InterpolationData::new(
                    self.points.iter().map(|z| z.0).collect(),
                    self.values.iter().map(|w| w.0).collect(),
                )
                .map_err(|e| CliError::config(format!("problem.data: {}", bare(&e))))
            }
        }
    }
}

fn bare(e: &hardy_bep::BepError) -> String {
    match e {
        hardy_bep::BepError::InvalidArgument(msg) => msg.clone(),
        other => other.to_string(),
    }
}

fn default_quad_points() -> usize {
    DEFAULT_QUAD_POINTS
}

fn default_interpolant() -> String {
    "kernel".into()
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub theta0: f64,
    pub q: usize,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub phase: f64,
    #[serde(default = "default_interpolant")]
    pub interpolant: String,
    pub f: Source,
    pub h: Source,
    #[serde(default)]
    pub data: DataConfig,
    /// Absolute discrepancy bound `M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    /// Bound given as a multiple of `M0(0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_factor: Option<f64>,
}

/// Grid of `mu` values. Defaults to 60 points with `1 + mu` log-spaced on `[1e-3, 4]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    /// Range of `1 + mu` for a log-spaced grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_plus_mu: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl SweepConfig {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        match (&self.mu, self.one_plus_mu) {
            (Some(_), Some(_)) => Err(CliError::config("sweep: give either mu or one_plus_mu, not both")),
            (Some(mu), None) => {
                if mu.is_empty() {
                    return Err(CliError::config("sweep.mu: grid is empty"));
                }
                if let Some(bad) = mu.iter().find(|m| !(m.is_finite() && **m > -1.0)) {
                    return Err(CliError::config(format!("sweep.mu: {bad} must exceed -1")));
                }
                Ok(mu.clone())
            }
            (None, Some([lo, hi])) => {
                if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                    return Err(CliError::config(format!(
                        "sweep.one_plus_mu: need 0 < lo <= hi, got [{lo}, {hi}]"
                    )));
                }
                let n = self.points.unwrap_or(60);
                if n == 0 {
                    return Err(CliError::config("sweep.points: must be positive"));
                }
                Ok(log_mu_grid(lo, hi, n))
            }
            (None, None) => Ok(default_mu_grid()),
        }
    }
}

/// Series settings: a fixed order, or calibration at `mu0` to `tol`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub kinds: Vec<String>,
    pub deltas: Vec<f64>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            kinds: ["f", "h", "omega", "z"].map(String::from).to_vec(),
            deltas: vec![1e-2, 1e-3, 1e-4, 1e-5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub order: usize,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        Self { order: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanConfig {
    pub rho: f64,
    pub alphas: Vec<f64>,
    pub r_max: f64,
    pub points: Vec<ComplexValue>,
    /// Data on `I`; the problem's `f` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    /// Taylor coefficients of the exact continuation, for an error column.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exact: Vec<ComplexValue>,
}

impl Default for CarlemanConfig {
    fn default() -> Self {
        Self {
            rho: 2.0,
            alphas: vec![1.0, 4.0, 16.0, 64.0],
            r_max: 0.95,
            points: vec![
                ComplexValue(Complex64::new(0.0, 0.0)),
                ComplexValue(Complex64::new(0.2, 0.0)),
                ComplexValue(Complex64::new(0.0, 0.3)),
            ],
            source: None,
            exact: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesConfig>,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub moments: MomentsConfig,
    #[serde(default)]
    pub carleman: CarlemanConfig,
    /// Seed for perturbation directions.
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.message().to_string()))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn split(&self) -> Result<ArcSplit, CliError> {
        ArcSplit::new(self.problem.theta0).map_err(|e| CliError::config(format!("problem.theta0: {}", bare(&e))))
    }

    pub fn boundary_source(&self, source: &Source, field: &str, is_f: bool) -> Result<BoundaryFn, CliError> {
        source.build(field, is_f, self.problem.quad_points)
    }

    /// Problem with `M` unset.
    pub fn unbounded_spec(&self) -> Result<ProblemSpec, CliError> {
        let p = &self.problem;
        self.split()?;
        let kind: InterpolantKind = p
            .interpolant
            .parse()
            .map_err(|e| CliError::config(format!("problem.interpolant: {}", bare(&e))))?;
        let data = p.data.build()?;
        let f = self.boundary_source(&p.f, "problem.f", true)?;
        let h = self.boundary_source(&p.h, "problem.h", false)?;
        let spec = ProblemSpec::new(f, h, data, p.theta0, p.q)
            .with_quad_points(p.quad_points)
            .with_phase(p.phase)
            .with_interpolant(kind);
        spec.validate()
            .map_err(|e| CliError::config(format!("problem.{}", bare(&e))))?;
        Ok(spec)
    }

    pub fn unbounded_problem(&self) -> Result<Problem, CliError> {
        Ok(Problem::new(self.unbounded_spec()?)?)
    }

    /// Problem with `M` resolved from `bound` or `bound_factor`.
    pub fn bounded_problem(&self) -> Result<Problem, CliError> {
        let base = self.unbounded_problem()?;
        let m = match (self.problem.bound, self.problem.bound_factor) {
            (Some(_), Some(_)) => {
                return Err(CliError::config("problem.bound: give either bound or bound_factor, not both"))
            }
            (None, None) => return Err(CliError::config("problem.bound: no discrepancy bound configured")),
            (Some(m), None) => m,
            (None, Some(k)) => {
                if !(k.is_finite() && k >= 0.0) {
                    return Err(CliError::config(format!("problem.bound_factor: {k} must be nonnegative")));
                }
                k * base.solve_for_mu(0.0)?.m0
            }
        };
        if !(m.is_finite() && m >= 0.0) {
            return Err(CliError::config(format!("problem.bound: {m} must be finite and nonnegative")));
        }
        Ok(Problem::new(base.spec().clone().with_bound(m))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7

[problem]
theta0 = 1.0471975511965976
q = 20
f = { kind = "reference", epsilon = 0.5 }
h = { kind = "reference" }
data = { preset = "reference" }
bound_factor = 2.0

[series]
mu0 = -0.5
tol = 0.05
"#;

    #[test]
    fn complex_values_parse_and_print() {
        let z: ComplexValue = "0.5,-0.25".parse().unwrap();
        assert_eq!(z.0, Complex64::new(0.5, -0.25));
        assert_eq!(z.to_string(), "0.5,-0.25");
        assert!("0.5".parse::<ComplexValue>().is_err());
        assert!("a,b".parse::<ComplexValue>().is_err());
    }

    #[test]
    fn round_trip_is_lossless() {
        let cfg = RunConfig::from_toml(SAMPLE).unwrap();
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        let mut cfg = cfg;
        cfg.problem.f = Source::Trig {
            terms: vec![TrigTerm { k: -1, c: ComplexValue(Complex64::new(0.1, 1.0 / 3.0)) }],
        };
        cfg.problem.h = Source::Table { values: vec![ComplexValue(Complex64::new(1.0, 2.0)); 3] };
        cfg.sweep.one_plus_mu = Some([1e-3, 4.0]);
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn tables_interpolate_linearly_and_periodically() {
        let v = [Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)];
        assert_eq!(sample_table(&v, 0.0), v[0]);
        assert!((sample_table(&v, TAU / 4.0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((sample_table(&v, 3.0 * TAU / 4.0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((sample_table(&v, TAU) - v[0]).norm() < 1e-12);
    }

    fn rejects(edit: impl Fn(&mut RunConfig), field: &str) {
        let mut cfg = RunConfig::from_toml(SAMPLE).unwrap();
        edit(&mut cfg);
        let err = cfg.unbounded_problem().unwrap_err().to_string();
        assert!(err.contains(field), "`{err}` does not name {field}");
    }

    #[test]
    fn validation_names_the_field() {
        rejects(|c| c.problem.theta0 = 4.0, "problem.theta0");
        rejects(|c| c.problem.theta0 = 0.0, "problem.theta0");
        rejects(|c| c.problem.q = 3, "problem.q");
        rejects(|c| c.problem.quad_points = 40, "problem.quad_points");
        rejects(
            |c| {
                c.problem.data = DataConfig {
                    preset: None,
                    points: vec!["1.2,0".parse().unwrap()],
                    values: vec!["1,0".parse().unwrap()],
                }
            },
            "problem.data.points[0]",
        );
        rejects(
            |c| {
                c.problem.data = DataConfig {
                    preset: None,
                    points: vec!["0.2,0".parse().unwrap(); 2],
                    values: vec!["1,0".parse().unwrap(); 2],
                }
            },
            "problem.data",
        );
        rejects(|c| c.problem.h = Source::Reference { epsilon: Some(1.0) }, "problem.h.epsilon");
        rejects(|c| c.problem.interpolant = "spline".into(), "problem.interpolant");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = SAMPLE.replace("q = 20", "q = 20\nqq = 1");
        assert!(RunConfig::from_toml(&text).unwrap_err().to_string().contains("qq"));
    }

    #[test]
    fn bound_factor_scales_unconstrained_discrepancy() {
        let cfg = RunConfig::from_toml(SAMPLE).unwrap();
        let base = cfg.unbounded_problem().unwrap().solve_for_mu(0.0).unwrap().m0;
        let p = cfg.bounded_problem().unwrap();
        assert!((p.spec().bound - 2.0 * base).abs() < 1e-15);
    }

    #[test]
    fn default_grid_has_sixty_points() {
        let g = SweepConfig::default().grid().unwrap();
        assert_eq!(g.len(), 60);
        assert!(SweepConfig { mu: Some(vec![-1.0]), ..Default::default() }.grid().is_err());
    }
}
