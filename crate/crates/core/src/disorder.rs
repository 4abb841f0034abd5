//! Single-site laws: sampling, cumulant generating functions
//! `G(t) = log⟨e^{-tV}⟩`, the deviation `S(λ,t)`, and regular-variation
//! metadata `(ρ, c_g, g)`.
//!
//! Two laws are completed from their tails. The double-exponential family
//! samples the Gumbel law `P[V < E] = exp(-e^{-E/c})`, but its cumulant is
//! the model form `c t log(ct) - ct`; the Gumbel law's own log-moment
//! `log Γ(1+ct)` is available from [`DistributionSpec::law_cumulant`] and
//! differs by `½ log(2πct) + O(1/t)`. The Weibull-tail family is
//! `P[V < E] = exp(-C(-E)^α)` on `E < 0` with no mass on `[0, ∞)`.

use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::integrate;
use crate::rng::{stream, StreamRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DisorderError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature for G({t}) did not converge (error estimate {achieved:.3e})")]
    Quadrature { t: f64, achieved: f64 },
    #[error("empirical mean of exp(-tV) is not representable at t = {t}")]
    EmpiricalOverflow { t: f64 },
}

/// Single-site distribution families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Uniform on `[0, 1]`.
    Uniform01,
    /// `0` with probability `p0`, `a` otherwise.
    Bernoulli { p0: f64, a: f64 },
    /// Density `θ e^{-θv}` on `[0, ∞)`.
    Exponential { theta: f64 },
    /// `P[V < E] = exp(-C(-E)^α)` for `E < 0`, `α > 1`.
    WeibullTail { alpha: f64, c: f64 },
    /// Gumbel-type law `P[V < E] = exp(-e^{-E/c_g})`.
    DoubleExponential { c_g: f64 },
    PointMass { v: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), DisorderError> {
        let bad = |m: String| Err(DisorderError::InvalidParameter(m));
        match *self {
            Self::Uniform01 => Ok(()),
            Self::Bernoulli { p0, a } => {
                if !(0.0..=1.0).contains(&p0) {
                    bad(format!("p0 = {p0} must lie in [0, 1]"))
                } else if !a.is_finite() {
                    bad("a must be finite".into())
                } else {
                    Ok(())
                }
            }
            Self::Exponential { theta } if !(theta > 0.0 && theta.is_finite()) => {
                bad(format!("θ = {theta} must be positive"))
            }
            Self::Exponential { .. } => Ok(()),
            Self::WeibullTail { alpha, c } => {
                if !(alpha > 1.0 && alpha.is_finite()) {
                    bad(format!("α must exceed 1 (got {alpha})"))
                } else if !(c > 0.0 && c.is_finite()) {
                    bad(format!("C = {c} must be positive"))
                } else {
                    Ok(())
                }
            }
            Self::DoubleExponential { c_g } if !(c_g > 0.0 && c_g.is_finite()) => {
                bad(format!("c_g = {c_g} must be positive"))
            }
            Self::DoubleExponential { .. } => Ok(()),
            Self::PointMass { v } if !v.is_finite() => bad("v must be finite".into()),
            Self::PointMass { .. } => Ok(()),
        }
    }

    /// Stable identifier used in file headers and potential samples.
    pub fn id(&self) -> String {
        match *self {
            Self::Uniform01 => "uniform01".into(),
            Self::Bernoulli { p0, a } => format!("bernoulli(p0={p0},a={a})"),
            Self::Exponential { theta } => format!("exponential(theta={theta})"),
            Self::WeibullTail { alpha, c } => format!("weibull_tail(alpha={alpha},c={c})"),
            Self::DoubleExponential { c_g } => format!("double_exponential(c_g={c_g})"),
            Self::PointMass { v } => format!("point_mass({v})"),
        }
    }

    /// Finite support with probabilities, for laws that have one.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            Self::PointMass { v } => Some(vec![(v, 1.0)]),
            Self::Bernoulli { p0, a } => Some(vec![(0.0, p0), (a, 1.0 - p0)]),
            _ => None,
        }
    }

    /// Cumulative distribution function `P[V ≤ x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Uniform01 => x.clamp(0.0, 1.0),
            Self::Bernoulli { p0, a } => {
                let mut f = 0.0;
                if x >= 0.0 {
                    f += p0;
                }
                if x >= a {
                    f += 1.0 - p0;
                }
                f
            }
            Self::Exponential { theta } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-theta * x).exp_m1()
                }
            }
            Self::WeibullTail { alpha, c } => {
                if x >= 0.0 {
                    1.0
                } else {
                    (-c * (-x).powf(alpha)).exp()
                }
            }
            Self::DoubleExponential { c_g } => (-(-x / c_g).exp()).exp(),
            Self::PointMass { v } => {
                if x >= v {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            Self::Uniform01 => rng.random::<f64>(),
            Self::Bernoulli { p0, a } => {
                if rng.random::<f64>() < p0 {
                    0.0
                } else {
                    a
                }
            }
            Self::Exponential { theta } => Exp::new(theta).expect("validated θ").sample(rng),
            Self::WeibullTail { alpha, c } => {
                let e: f64 = Exp1.sample(rng);
                -(e / c).powf(1.0 / alpha)
            }
            Self::DoubleExponential { c_g } => {
                let e: f64 = Exp1.sample(rng);
                -c_g * e.ln()
            }
            Self::PointMass { v } => v,
        }
    }

    /// Effective potential `G(s)/s` for `s > 0`, accurate as `s → 0`.
    pub fn effective_potential(&self, s: f64) -> Result<f64, DisorderError> {
        if !(s > 0.0) {
            return Err(DisorderError::InvalidArgument(format!("effective potential needs s > 0, got {s}")));
        }
        Ok(match *self {
            Self::Uniform01 => uniform_g_over_t(s),
            Self::Bernoulli { .. } | Self::Exponential { .. } | Self::WeibullTail { .. } => self.cumulant(s)? / s,
            Self::DoubleExponential { c_g } => c_g * (c_g * s).ln() - c_g,
            Self::PointMass { v } => -v,
        })
    }

    /// `G(t) = log⟨exp(-tV)⟩`; `G(0) = 0`.
    pub fn cumulant(&self, t: f64) -> Result<f64, DisorderError> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(DisorderError::InvalidArgument(format!("cumulant needs finite t ≥ 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            Self::Uniform01 => t * uniform_g_over_t(t),
            Self::Bernoulli { p0, a } => bernoulli_cumulant(p0, a, t),
            Self::Exponential { theta } => -(t / theta).ln_1p(),
            Self::WeibullTail { alpha, c } => weibull_cumulant(alpha, c, t)?,
            Self::DoubleExponential { c_g } => c_g * t * (c_g * t).ln() - c_g * t,
            Self::PointMass { v } => -t * v,
        })
    }

    /// Log-moment `log E[e^{-tV}]` of the sampling law itself.
    ///
    /// Equals [`cumulant`](Self::cumulant) except for the double-exponential
    /// family, whose Gumbel completion gives `log Γ(1 + c t)`.
    pub fn law_cumulant(&self, t: f64) -> Result<f64, DisorderError> {
        match *self {
            Self::DoubleExponential { c_g } => {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(DisorderError::InvalidArgument(format!("cumulant needs finite t ≥ 0, got {t}")));
                }
                Ok(statrs::function::gamma::ln_gamma(1.0 + c_g * t))
            }
            _ => self.cumulant(t),
        }
    }
}

fn uniform_g_over_t(s: f64) -> f64 {
    // (1 - e^{-s})/s = e^{-s/2} sinh(s/2)/(s/2)
    if s > 40.0 {
        return ((-s).exp_m1().abs().ln() - s.ln()) / s;
    }
    let x = 0.5 * s;
    let log_sinhc = if x < 1e-2 {
        let x2 = x * x;
        x2 / 6.0 - x2 * x2 / 180.0 + 2.0 * x2 * x2 * x2 / 2835.0
    } else {
        (x.sinh() / x).ln()
    };
    -0.5 + log_sinhc / s
}

fn bernoulli_cumulant(p0: f64, a: f64, t: f64) -> f64 {
    let ta = t * a;
    if ta.abs() < 1.0 {
        ((1.0 - p0) * (-ta).exp_m1()).ln_1p()
    } else {
        // logaddexp(log p0, log(1-p0) - ta)
        let x = if p0 > 0.0 { p0.ln() } else { f64::NEG_INFINITY };
        let y = if p0 < 1.0 { (1.0 - p0).ln() - ta } else { f64::NEG_INFINITY };
        let m = x.max(y);
        m + ((x - m).exp() + (y - m).exp()).ln()
    }
}

/// `log(1 + t ∫_0^∞ e^{tw} P[W > w] dw)` for `W = -V`, `P[W > w] = e^{-Cw^α}`.
fn weibull_cumulant(alpha: f64, c: f64, t: f64) -> Result<f64, DisorderError> {
    // w = w*(1 + σy) with w* the maximiser of tw − Cw^α and σ the Laplace
    // width; then tw − Cw^α − peak = A ψ(σy)
    let w_star = (t / (c * alpha)).powf(1.0 / (alpha - 1.0));
    let amp = t * w_star;
    let peak = amp * (1.0 - 1.0 / alpha);
    let sigma = 1.0 / (amp * (alpha - 1.0)).sqrt();
    let psi = |x: f64| {
        if x.abs() < 1e-4 {
            let a1 = alpha - 1.0;
            -x * x * (a1 / 2.0 + x * (a1 * (alpha - 2.0) / 6.0 + x * a1 * (alpha - 2.0) * (alpha - 3.0) / 24.0))
        } else {
            x - (alpha * x.ln_1p()).exp_m1() / alpha
        }
    };
    let log_f = |y: f64| amp * psi(sigma * y);
    const DEPTH: f64 = 60.0;
    let find = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if log_f(mid) > -DEPTH {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        outside
    };
    let y_min = -1.0 / sigma;
    let lo = if log_f(y_min) > -DEPTH { y_min } else { find(0.0, y_min) };
    let mut far = 4.0;
    while log_f(far) > -DEPTH {
        far *= 2.0;
    }
    let hi = find(0.0, far);
    let f = |y: f64| log_f(y).exp();
    let left = integrate(f, lo, 0.0, 0.0, 1e-12, 4000);
    let right = integrate(f, 0.0, hi, 0.0, 1e-12, 4000);
    let total = left.value + right.value;
    if !(total > 0.0) || left.error + right.error > 1e-10 * total {
        return Err(DisorderError::Quadrature { t, achieved: left.error + right.error });
    }
    let x = t.ln() + w_star.ln() + sigma.ln() + total.ln() + peak;
    Ok(if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() })
}

/// `count` i.i.d. draws, reproducible from `seed`.
pub fn sample(spec: &DistributionSpec, seed: u64, count: usize) -> Result<Vec<f64>, DisorderError> {
    spec.validate()?;
    if count == 0 {
        return Err(DisorderError::InvalidArgument("count must be at least 1".into()));
    }
    let mut rng = stream(seed, 0);
    Ok((0..count).map(|_| spec.draw(&mut rng)).collect())
}

pub fn cumulant(spec: &DistributionSpec, t: f64) -> Result<f64, DisorderError> {
    spec.cumulant(t)
}

/// `S(λ,t) = G(t)/t − G(λt)/(λt)`, nonnegative by convexity of `G`.
pub fn s_deviation(spec: &DistributionSpec, lambda: f64, t: f64) -> Result<f64, DisorderError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(DisorderError::InvalidArgument(format!("λ = {lambda} must lie in (0, 1]")));
    }
    if !(t > 0.0) {
        return Err(DisorderError::InvalidArgument(format!("t = {t} must be positive")));
    }
    if lambda == 1.0 {
        return Ok(0.0);
    }
    if let DistributionSpec::DoubleExponential { c_g } = spec {
        return Ok(-c_g * lambda.ln());
    }
    Ok(spec.effective_potential(t)? - spec.effective_potential(lambda * t)?)
}

/// `h_ρ(λ)`: `−log λ` at `ρ = 0`, `(1 − λ^ρ)/ρ` otherwise.
pub fn h_rho(rho: f64, lambda: f64) -> f64 {
    assert!(lambda > 0.0 && lambda <= 1.0, "λ must lie in (0, 1]");
    let l = lambda.ln();
    if rho == 0.0 {
        -l
    } else {
        -(rho * l).exp_m1() / rho
    }
}

/// Auxiliary function `g(t) = t^ρ (log t)^k`, or `g ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuxFunction {
    Zero,
    PowerLog { rho: f64, log_power: i32 },
}

impl AuxFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::PowerLog { rho, log_power } => t.powf(rho) * self.slowly_varying_part(t).max(0.0).max(if log_power == 0 { 1.0 } else { 0.0 }),
        }
    }

    /// `g0(t) = g(t) t^{-ρ}`.
    pub fn slowly_varying_part(&self, t: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::PowerLog { log_power, .. } => {
                if log_power == 0 {
                    1.0
                } else {
                    t.ln().powi(log_power)
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }
}

/// Regular-variation metadata: `S(λ,t) ≈ c_g h_ρ(λ) g(t)` as `t → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RvMetadata {
    pub rho: f64,
    pub c_g: f64,
    pub g: AuxFunction,
    /// Fitted numerically rather than known in closed form.
    pub estimated: bool,
    /// RMS relative misfit of the numerical fit.
    pub fit_residual: Option<f64>,
}

impl RvMetadata {
    pub fn g(&self, t: f64) -> f64 {
        self.g.eval(t)
    }

    pub fn g0(&self, t: f64) -> f64 {
        self.g.slowly_varying_part(t)
    }

    /// `c_g h_ρ(λ) g(t)`.
    pub fn asymptotic_deviation(&self, lambda: f64, t: f64) -> f64 {
        if self.g.is_zero() {
            return 0.0;
        }
        self.c_g * h_rho(self.rho, lambda) * self.g(t)
    }
}

pub fn rv_metadata(spec: &DistributionSpec) -> Result<RvMetadata, DisorderError> {
    spec.validate()?;
    let exact = |rho, c_g, g| RvMetadata { rho, c_g, g, estimated: false, fit_residual: None };
    Ok(match *spec {
        DistributionSpec::Uniform01 => exact(-1.0, 1.0, AuxFunction::PowerLog { rho: -1.0, log_power: 1 }),
        DistributionSpec::DoubleExponential { c_g } => exact(0.0, c_g, AuxFunction::PowerLog { rho: 0.0, log_power: 0 }),
        DistributionSpec::PointMass { .. } => exact(0.0, 0.0, AuxFunction::Zero),
        DistributionSpec::WeibullTail { alpha, .. } => {
            let rho = 1.0 / (alpha - 1.0);
            fit_metadata(spec, Some(rho), (2.0, 4.0))?
        }
        DistributionSpec::Bernoulli { p0, .. } if p0 == 0.0 || p0 == 1.0 => exact(0.0, 0.0, AuxFunction::Zero),
        DistributionSpec::Bernoulli { a: 0.0, .. } => exact(0.0, 0.0, AuxFunction::Zero),
        DistributionSpec::Bernoulli { .. } | DistributionSpec::Exponential { .. } => fit_metadata(spec, None, (3.0, 6.0))?,
    })
}

const FIT_LAMBDAS: [f64; 3] = [0.25, 0.5, 0.75];

/// Least-squares fit of `S(λ,t)` against `c · h_ρ(λ) · t^ρ` on a log-spaced grid.
///
/// When `rho` is not given it is estimated from the log-log slope of `S(1/2, t)`.
fn fit_metadata(spec: &DistributionSpec, rho: Option<f64>, log10_range: (f64, f64)) -> Result<RvMetadata, DisorderError> {
    let ts: Vec<f64> = (0..=12)
        .map(|i| 10f64.powf(log10_range.0 + (log10_range.1 - log10_range.0) * i as f64 / 12.0))
        .collect();
    let rho = match rho {
        Some(r) => r,
        None => {
            let pts: Vec<(f64, f64)> = ts
                .iter()
                .map(|&t| Ok((t.ln(), s_deviation(spec, 0.5, t)?.max(f64::MIN_POSITIVE).ln())))
                .collect::<Result<_, DisorderError>>()?;
            least_squares_slope(&pts).max(-1.0)
        }
    };
    let g = AuxFunction::PowerLog { rho, log_power: 0 };
    let mut ratios = Vec::new();
    for &t in &ts {
        for &lambda in &FIT_LAMBDAS {
            let basis = h_rho(rho, lambda) * g.eval(t);
            ratios.push(s_deviation(spec, lambda, t)? / basis);
        }
    }
    let c = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let residual = (ratios.iter().map(|r| ((r - c) / c).powi(2)).sum::<f64>() / ratios.len() as f64).sqrt();
    Ok(RvMetadata { rho, c_g: c, g, estimated: true, fit_residual: Some(residual) })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCumulant {
    pub value: f64,
    /// Jackknife standard error.
    pub se: f64,
}

/// `log` of the sample mean of `e^{-tv}`, with a jackknife standard error.
pub fn empirical_cumulant(samples: &[f64], t: f64) -> Result<EmpiricalCumulant, DisorderError> {
    if samples.is_empty() {
        return Err(DisorderError::InvalidArgument("no samples".into()));
    }
    if !(t >= 0.0) {
        return Err(DisorderError::InvalidArgument(format!("t = {t} must be nonnegative")));
    }
    let exps: Vec<f64> = samples.iter().map(|v| -t * v).collect();
    let shift = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(DisorderError::EmpiricalOverflow { t });
    }
    let w: Vec<f64> = exps.iter().map(|x| (x - shift).exp()).collect();
    let n = w.len() as f64;
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(DisorderError::EmpiricalOverflow { t });
    }
    let value = shift + (total / n).ln();
    if w.len() == 1 {
        return Ok(EmpiricalCumulant { value, se: f64::INFINITY });
    }
    let loo: Vec<f64> = w.iter().map(|wi| shift + ((total - wi).max(0.0) / (n - 1.0)).ln()).collect();
    if loo.iter().any(|x| !x.is_finite()) {
        return Ok(EmpiricalCumulant { value, se: f64::INFINITY });
    }
    let mean_loo = loo.iter().sum::<f64>() / n;
    let se = ((n - 1.0) / n * loo.iter().map(|x| (x - mean_loo).powi(2)).sum::<f64>()).sqrt();
    Ok(EmpiricalCumulant { value, se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn all_specs() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::Uniform01,
            DistributionSpec::Bernoulli { p0: 0.5, a: 1.0 },
            DistributionSpec::Bernoulli { p0: 0.2, a: 2.5 },
            DistributionSpec::Exponential { theta: 1.0 },
            DistributionSpec::Exponential { theta: 3.0 },
            DistributionSpec::WeibullTail { alpha: 2.0, c: 1.0 },
            DistributionSpec::WeibullTail { alpha: 1.5, c: 0.7 },
            DistributionSpec::DoubleExponential { c_g: 1.0 },
            DistributionSpec::PointMass { v: 0.3 },
        ]
    }

    #[test]
    fn cumulant_vanishes_at_zero() {
        for s in all_specs() {
            assert_eq!(s.cumulant(0.0).unwrap(), 0.0, "{}", s.id());
        }
    }

    #[test]
    fn uniform_cumulant_matches_quadrature() {
        let oracle = integrate(|v| (-v).exp(), 0.0, 1.0, 1e-15, 1e-15, 100).value.ln();
        let g = DistributionSpec::Uniform01.cumulant(1.0).unwrap();
        assert!((g - oracle).abs() < 1e-14);
        assert!((g + 0.458_675).abs() < 1e-6);
        let tiny = 1e-9;
        let series = -tiny / 2.0 + tiny * tiny / 24.0;
        assert!((DistributionSpec::Uniform01.cumulant(tiny).unwrap() - series).abs() < 1e-24);
        for t in [0.03, 0.5, 7.0, 39.0, 41.0, 300.0] {
            let q = integrate(|v| (-t * v).exp(), 0.0, 1.0, 0.0, 1e-14, 500).value.ln();
            let g = DistributionSpec::Uniform01.cumulant(t).unwrap();
            assert!((g - q).abs() <= 1e-12 * q.abs().max(1e-12), "t={t}: {g} vs {q}");
        }
    }

    #[test]
    fn exponential_cumulant_matches_quadrature() {
        let g = DistributionSpec::Exponential { theta: 1.0 }.cumulant(1.0).unwrap();
        assert!((g - 0.5f64.ln()).abs() < 1e-15);
        let q = integrate(|v| (-2.0 * v).exp(), 0.0, 60.0, 0.0, 1e-14, 500).value.ln();
        assert!((g - q).abs() < 1e-12);
    }

    #[test]
    fn weibull_alpha_two_matches_erfc_closed_form() {
        use statrs::function::erf::erfc;
        let spec = DistributionSpec::WeibullTail { alpha: 2.0, c: 1.0 };
        for t in [1e-3f64, 0.1, 1.0, 5.0, 20.0] {
            let closed = (1.0 + t * (t * t / 4.0).exp() * std::f64::consts::PI.sqrt() / 2.0 * erfc(-t / 2.0)).ln();
            let g = spec.cumulant(t).unwrap();
            assert!((g - closed).abs() <= 1e-10 * closed.abs().max(1e-3), "t={t}: {g} vs {closed}");
        }
        // far tail: log-space closed form
        let t: f64 = 400.0;
        let closed = t * t / 4.0 + (t * std::f64::consts::PI.sqrt() / 2.0 * erfc(-t / 2.0)).ln();
        let g = spec.cumulant(t).unwrap();
        assert!((g - closed).abs() < 1e-9 * closed);
    }

    #[test]
    fn gumbel_law_cumulant_matches_quadrature() {
        let spec = DistributionSpec::DoubleExponential { c_g: 1.0 };
        for t in [0.5, 1.0, 3.0] {
            let q = integrate(|x: f64| (t * x.ln() - x).exp(), 1e-300, 80.0, 0.0, 1e-13, 2000).value.ln();
            assert!((spec.law_cumulant(t).unwrap() - q).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn point_mass_and_bernoulli_closed_forms() {
        let pm = DistributionSpec::PointMass { v: 2.0 };
        assert_eq!(pm.cumulant(3.0).unwrap(), -6.0);
        let b = DistributionSpec::Bernoulli { p0: 0.5, a: 1.0 };
        for t in [0.1f64, 1.0, 10.0, 200.0] {
            let direct = (0.5 + 0.5 * (-t).exp()).ln();
            assert!((b.cumulant(t).unwrap() - direct).abs() < 1e-15);
        }
        let b0 = DistributionSpec::Bernoulli { p0: 0.0, a: 1.5 };
        assert!((b0.cumulant(100.0).unwrap() + 150.0).abs() < 1e-12);
    }

    #[test]
    fn deviation_examples() {
        for s in all_specs() {
            assert_eq!(s_deviation(&s, 1.0, 3.0).unwrap(), 0.0);
        }
        let pm = DistributionSpec::PointMass { v: -1.2 };
        assert!(s_deviation(&pm, 0.3, 17.0).unwrap().abs() < 1e-15);
        assert!(s_deviation(&pm, 0.0, 1.0).is_err());
    }

    #[test]
    fn uniform_deviation_log_trend() {
        // t·S(1/2,t)/log t = 1 − 2 log 2/log t
        let mut prev = 0.0;
        for t in [1e4, 1e6, 1e8] {
            let r = t * s_deviation(&DistributionSpec::Uniform01, 0.5, t).unwrap() / t.ln();
            assert!(r > prev && r < 1.0, "t={t}: {r}");
            assert!((r - (1.0 - 2.0 * 2f64.ln() / t.ln())).abs() < 1e-6);
            prev = r;
        }
        assert!((prev - 1.0).abs() < 0.1);
    }

    #[test]
    fn h_rho_values() {
        assert!((h_rho(0.0, 0.5) - 2f64.ln()).abs() < 1e-15);
        assert!((h_rho(1.0, 0.5) - 0.5).abs() < 1e-15);
        for r in [-1.0, 0.0, 0.7, 3.0] {
            assert_eq!(h_rho(r, 1.0), 0.0);
        }
        for k in 1..=9 {
            let l = k as f64 / 10.0;
            assert!((h_rho(1e-6, l) + l.ln()).abs() <= 1e-4);
        }
    }

    #[test]
    fn metadata_examples() {
        let u = rv_metadata(&DistributionSpec::Uniform01).unwrap();
        assert_eq!(u.rho, -1.0);
        assert!((u.g(1e6) - 1e6f64.ln() / 1e6).abs() < 1e-18);
        let de = rv_metadata(&DistributionSpec::DoubleExponential { c_g: 1.0 }).unwrap();
        assert_eq!((de.rho, de.c_g), (0.0, 1.0));
        assert_eq!(de.g(123.0), 1.0);
        let pm = rv_metadata(&DistributionSpec::PointMass { v: 4.0 }).unwrap();
        assert_eq!(pm.g(10.0), 0.0);
    }

    #[test]
    fn weibull_fit_recovers_leading_constant() {
        // G(t)/t ~ K t^ρ with K = (α−1) C (Cα)^{−α/(α−1)}; c_g = ρK when g = t^ρ
        for (alpha, c) in [(2.0f64, 1.0f64), (3.0, 0.5)] {
            let m = rv_metadata(&DistributionSpec::WeibullTail { alpha, c }).unwrap();
            let rho = 1.0 / (alpha - 1.0);
            let k = (alpha - 1.0) * c * (c * alpha).powf(-alpha / (alpha - 1.0));
            assert!(m.estimated);
            assert!((m.rho - rho).abs() < 1e-15);
            assert!((m.c_g - rho * k).abs() < 0.05 * rho * k, "α={alpha}: {} vs {}", m.c_g, rho * k);
        }
    }

    #[test]
    fn bernoulli_fit_is_rho_minus_one() {
        let m = rv_metadata(&DistributionSpec::Bernoulli { p0: 0.5, a: 1.0 }).unwrap();
        assert!(m.estimated);
        assert!((m.rho + 1.0).abs() < 1e-3, "{m:?}");
        assert!((m.c_g - 2f64.ln()).abs() < 1e-2, "{m:?}");
    }

    #[test]
    fn validation_messages() {
        let w = DistributionSpec::WeibullTail { alpha: 1.0, c: 1.0 };
        assert!(w.validate().unwrap_err().to_string().contains("α must exceed 1"));
        assert!(DistributionSpec::Bernoulli { p0: 1.5, a: 1.0 }.validate().is_err());
        assert!(DistributionSpec::Exponential { theta: 0.0 }.validate().is_err());
    }

    #[test]
    fn sampler_moments() {
        let z = sample(&DistributionSpec::PointMass { v: 0.0 }, 9, 100).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
        let u = sample(&DistributionSpec::Uniform01, 1, 1_000_000).unwrap();
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        assert!((mean - 0.5).abs() < 3.0 / 12f64.sqrt() / 1e3);
        let b = sample(&DistributionSpec::Bernoulli { p0: 0.5, a: 1.0 }, 2, 1_000_000).unwrap();
        let zeros = b.iter().filter(|&&x| x == 0.0).count() as f64 / 1e6;
        assert!((zeros - 0.5).abs() < 0.0016);
    }

    #[test]
    fn sampler_is_reproducible() {
        let s = DistributionSpec::WeibullTail { alpha: 2.0, c: 1.0 };
        assert_eq!(sample(&s, 77, 50).unwrap(), sample(&s, 77, 50).unwrap());
        assert_ne!(sample(&s, 77, 50).unwrap(), sample(&s, 78, 50).unwrap());
    }

    #[test]
    fn empirical_cumulant_examples() {
        let e = empirical_cumulant(&[0.0; 10], 4.0).unwrap();
        assert_eq!((e.value, e.se), (0.0, 0.0));
        let e = empirical_cumulant(&[2.0; 5], 3.0).unwrap();
        assert_eq!(e.value, -6.0);
        let u = sample(&DistributionSpec::Uniform01, 5, 1_000_000).unwrap();
        let e = empirical_cumulant(&u, 1.0).unwrap();
        let target = DistributionSpec::Uniform01.cumulant(1.0).unwrap();
        assert!((e.value - target).abs() <= 3.0 * e.se, "{e:?} vs {target}");
        assert!(empirical_cumulant(&[], 1.0).is_err());
    }

    fn ks_statistic(spec: &DistributionSpec, mut xs: Vec<f64>) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = spec.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn kolmogorov_smirnov_continuous_families() {
        // 99.9% critical value ≈ 1.95/√n
        let n = 20_000;
        for spec in all_specs().into_iter().filter(|s| s.atoms().is_none()) {
            let xs = sample(&spec, 2024, n).unwrap();
            let d = ks_statistic(&spec, xs);
            assert!(d < 1.95 / (n as f64).sqrt(), "{}: D = {d}", spec.id());
        }
    }

    #[test]
    fn sampler_and_law_cumulant_agree() {
        for spec in all_specs() {
            let xs = sample(&spec, 31, 200_000).unwrap();
            for t in [0.5, 1.0, 2.0] {
                let e = empirical_cumulant(&xs, t).unwrap();
                let g = spec.law_cumulant(t).unwrap();
                assert!((e.value - g).abs() <= 3.0 * e.se + 1e-12, "{} t={t}: {e:?} vs {g}", spec.id());
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn spec_strategy() -> impl Strategy<Value = DistributionSpec> {
            prop_oneof![
                Just(DistributionSpec::Uniform01),
                (0.01f64..0.99, 0.1f64..3.0).prop_map(|(p0, a)| DistributionSpec::Bernoulli { p0, a }),
                (0.2f64..5.0).prop_map(|theta| DistributionSpec::Exponential { theta }),
                (1.2f64..4.0, 0.3f64..2.0).prop_map(|(alpha, c)| DistributionSpec::WeibullTail { alpha, c }),
                (0.2f64..3.0).prop_map(|c_g| DistributionSpec::DoubleExponential { c_g }),
                (-2.0f64..2.0).prop_map(|v| DistributionSpec::PointMass { v }),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn cumulant_is_midpoint_convex(spec in spec_strategy(), t1 in 0.01f64..30.0, t2 in 0.01f64..30.0) {
                let (a, b) = (t1.min(t2), t1.max(t2));
                let mid = spec.cumulant(0.5 * (a + b)).unwrap();
                let avg = 0.5 * (spec.cumulant(a).unwrap() + spec.cumulant(b).unwrap());
                prop_assert!(mid <= avg + 1e-10 * (1.0 + avg.abs()), "{}: {mid} > {avg}", spec.id());
            }

            #[test]
            fn deviation_is_nonnegative(spec in spec_strategy(), lambda in 1e-4f64..1.0, t in 0.01f64..1e4) {
                let s = s_deviation(&spec, lambda, t).unwrap();
                prop_assert!(s >= -1e-12 * (1.0 + spec.effective_potential(t).unwrap().abs()), "{}: S = {s}", spec.id());
            }
        }
    }

    #[test]
    fn de_haan_ratio_trend() {
        for spec in [DistributionSpec::Uniform01, DistributionSpec::DoubleExponential { c_g: 1.0 }] {
            let m = rv_metadata(&spec).unwrap();
            for t in [1e6, 1e7, 1e8] {
                for lambda in FIT_LAMBDAS {
                    let r = s_deviation(&spec, lambda, t).unwrap() / m.asymptotic_deviation(lambda, t);
                    assert!((0.8..=1.2).contains(&r), "{} λ={lambda} t={t}: {r}", spec.id());
                }
            }
        }
    }
}
