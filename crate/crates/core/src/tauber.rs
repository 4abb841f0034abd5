//! Legendre transforms `inf_t [Et + f(t)]`, the single-site rate function,
//! shifted rate bounds, and limit-of-oscillation Tauberian bounds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disorder::{rv_metadata, AuxFunction, DisorderError, DistributionSpec, RvMetadata};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TauberError {
    #[error(transparent)]
    Disorder(#[from] DisorderError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("root not bracketed: {0}")]
    NotBracketed(String),
}

type Result<T> = std::result::Result<T, TauberError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// The objective keeps decreasing as `t → 0`.
    Zero,
    /// The objective keeps decreasing as `t → ∞`.
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketPolicy {
    pub t0: f64,
    /// Geometric growth of the bracket per expansion.
    pub growth: f64,
    pub max_expansions: usize,
    /// Also search from 8 log-spaced starts on `[1e-6, 1e6]` and keep the best.
    pub multistart: bool,
}

impl Default for BracketPolicy {
    fn default() -> Self {
        Self { t0: 1.0, growth: 4.0, max_expansions: 200, multistart: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreResult {
    pub e: f64,
    /// Smallest `Et + f(t)` seen over every probed `t`.
    pub value: f64,
    pub t_star: f64,
    pub converged: bool,
    pub boundary: Option<Boundary>,
    pub bracket: (f64, f64),
}

struct Search<'a> {
    phi: &'a dyn Fn(f64) -> f64,
    best: (f64, f64),
}

impl Search<'_> {
    /// Objective in `x = log t`; non-finite values count as `+∞`.
    fn eval(&mut self, x: f64) -> f64 {
        let v = (self.phi)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best.1 {
            self.best = (x, v);
        }
        v
    }

    fn run(&mut self, x0: f64, step: f64, max_expansions: usize) -> (Option<Boundary>, (f64, f64), bool) {
        let f0 = self.eval(x0);
        let fr = self.eval(x0 + step);
        let (dir, mut a, mut b, mut fb) = if fr < f0 {
            (1.0, x0, x0 + step, fr)
        } else {
            let fl = self.eval(x0 - step);
            if fl < f0 {
                (-1.0, x0, x0 - step, fl)
            } else {
                return self.golden(x0 - step, x0 + step);
            }
        };
        let h = step;
        for _ in 0..max_expansions {
            let c = b + dir * h;
            let fc = self.eval(c);
            if fc >= fb {
                let (lo, hi) = if dir > 0.0 { (a, c) } else { (c, a) };
                return self.golden(lo, hi);
            }
            a = b;
            b = c;
            fb = fc;
        }
        let edge = if dir > 0.0 { Boundary::Infinity } else { Boundary::Zero };
        (Some(edge), if dir > 0.0 { (a.exp(), b.exp()) } else { (b.exp(), a.exp()) }, false)
    }

    fn golden(&mut self, mut a: f64, mut b: f64) -> (Option<Boundary>, (f64, f64), bool) {
        let bracket = (a, b);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - r * (b - a);
        let mut x2 = a + r * (b - a);
        let mut f1 = self.eval(x1);
        let mut f2 = self.eval(x2);
        let mut converged = false;
        for _ in 0..300 {
            if (b - a).abs() <= 1e-12 * (1.0 + x1.abs()) {
                converged = true;
                break;
            }
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = self.eval(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = self.eval(x2);
            }
        }
        (None, (bracket.0.exp(), bracket.1.exp()), converged)
    }
}

/// `inf_{t>0} [E t + f(t)]` by geometric bracketing in `log t` and golden-section refinement.
pub fn legendre_inf(f: &dyn Fn(f64) -> f64, e: f64, policy: &BracketPolicy) -> LegendreResult {
    let phi = |x: f64| {
        let t = x.exp();
        e * t + f(t)
    };
    let mut search = Search { phi: &phi, best: (policy.t0.ln(), f64::INFINITY) };
    let step = policy.growth.ln();
    let (mut boundary, mut bracket, mut converged) = search.run(policy.t0.ln(), step, policy.max_expansions);
    let mut best = search.best;
    if policy.multistart {
        for k in 0..8 {
            let x = (1e-6f64).ln() + (1e12f64).ln() * k as f64 / 7.0;
            let mut s = Search { phi: &phi, best: (x, f64::INFINITY) };
            let outcome = s.run(x, step, policy.max_expansions);
            if s.best.1 < best.1 {
                best = s.best;
                (boundary, bracket, converged) = outcome;
            }
        }
    }
    LegendreResult { e, value: best.1, t_star: best.0.exp(), converged: converged && boundary.is_none(), boundary, bracket }
}

/// `I(E) = inf_t [E t + G(t)]`.
pub fn rate_function(spec: &DistributionSpec, e: f64) -> Result<LegendreResult> {
    spec.validate()?;
    let g = |t: f64| spec.cumulant(t).unwrap_or(f64::NAN);
    Ok(legendre_inf(&g, e, &BracketPolicy::default()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedRateBounds {
    /// `−C I(E − 2d χ⁻*)`.
    pub lower: f64,
    /// `−I(E − 2d χ⁺*)`.
    pub upper: f64,
    pub c: f64,
    pub rate_minus: LegendreResult,
    pub rate_plus: LegendreResult,
    /// `lower ≤ upper`; not guaranteed by the displayed form.
    pub ordered: bool,
}

pub fn shifted_rate_bounds(
    spec: &DistributionSpec,
    e: f64,
    chi_minus_star: f64,
    chi_plus_star: f64,
    d: usize,
    c: f64,
) -> Result<ShiftedRateBounds> {
    if !(c > 0.0) {
        return Err(TauberError::InvalidArgument(format!("C = {c} must be positive")));
    }
    let two_d = 2.0 * d as f64;
    let rate_minus = rate_function(spec, e - two_d * chi_minus_star)?;
    let rate_plus = rate_function(spec, e - two_d * chi_plus_star)?;
    let lower = -c * rate_minus.value;
    let upper = -rate_plus.value;
    Ok(ShiftedRateBounds { lower, upper, c, rate_minus, rate_plus, ordered: lower <= upper })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeBruijnConstants {
    /// `C_i = ρ^{ρ/(ρ−1)} B_i / (1 − ρ)`.
    #[default]
    ProofDisplay,
    /// `C_i = B_i^{1/(1−ρ)}`, exact when `f` is a pure power.
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauberBounds {
    pub lower: f64,
    pub upper: f64,
    pub c1: f64,
    pub c2: f64,
    pub infimum: LegendreResult,
}

/// Bounds `C_1 inf_t[Et − f(t)] ≤ log v(E) ≤ C_2 inf_t[Et − f(t)]` for
/// `f ∈ R_ρ`, `0 < ρ < 1`, `E ↘ 0`.
pub fn de_bruijn_bounds(
    f: &dyn Fn(f64) -> f64,
    rho: f64,
    b1: f64,
    b2: f64,
    e: f64,
    constants: DeBruijnConstants,
) -> Result<TauberBounds> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(TauberError::InvalidArgument(format!("ρ = {rho} must lie in (0, 1)")));
    }
    if !(b1 >= b2 && b2 > 0.0) {
        return Err(TauberError::InvalidArgument(format!("need B1 ≥ B2 > 0, got {b1}, {b2}")));
    }
    if !(e > 0.0) {
        return Err(TauberError::InvalidArgument(format!("E = {e} must be positive")));
    }
    let neg = |t: f64| -f(t);
    let infimum = legendre_inf(&neg, e, &BracketPolicy::default());
    let scale = |b: f64| match constants {
        DeBruijnConstants::ProofDisplay => rho.powf(rho / (rho - 1.0)) * b / (1.0 - rho),
        DeBruijnConstants::PowerLaw => b.powf(1.0 / (1.0 - rho)),
    };
    let (c1, c2) = (scale(b1), scale(b2));
    Ok(TauberBounds { lower: c1 * infimum.value, upper: c2 * infimum.value, c1, c2, infimum })
}

/// Bounds `C_1 inf_t[Et + f(t)] ≤ log v(E) ≤ C_2 inf_t[Et + f(t)]` for
/// `f ∈ R_ρ`, `ρ > 1`, `E → −∞`, with `C_i = B_i^{−1/(ρ−1)}` (exact for
/// `f = t^ρ`).
pub fn kasahara_bounds(f: &dyn Fn(f64) -> f64, rho: f64, b1: f64, b2: f64, e: f64) -> Result<TauberBounds> {
    if !(rho > 1.0) {
        return Err(TauberError::InvalidArgument(format!("ρ = {rho} must exceed 1")));
    }
    if !(b1 > 0.0 && b2 >= b1) {
        return Err(TauberError::InvalidArgument(format!("need 0 < B1 ≤ B2, got {b1}, {b2}")));
    }
    if !(e <= 0.0) {
        return Err(TauberError::InvalidArgument(format!("E = {e} must be nonpositive")));
    }
    let infimum = legendre_inf(f, e, &BracketPolicy::default());
    let scale = |b: f64| b.powf(-1.0 / (rho - 1.0));
    let (c1, c2) = (scale(b1), scale(b2));
    Ok(TauberBounds { lower: c1 * infimum.value, upper: c2 * infimum.value, c1, c2, infimum })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifshitzEnvelope {
    pub e: f64,
    /// Root of `g(t*) = E^{(2−dρ)/2}`.
    pub t_star: f64,
    /// One fixed-point step `(y / g0(y^{1/ρ}))^{1/ρ}` of the asymptotic inverse.
    pub t_star_closed_form: f64,
    /// `E^{−d/2+1+1/ρ} g0(t*)^{−1/ρ}`.
    pub envelope: f64,
    /// `−C · envelope`.
    pub log_n_scale: f64,
}

pub fn lifshitz_envelope(spec: &DistributionSpec, e: f64, d: usize, c: f64) -> Result<LifshitzEnvelope> {
    lifshitz_envelope_from_metadata(&rv_metadata(spec)?, e, d, c)
}

pub fn lifshitz_envelope_from_metadata(meta: &RvMetadata, e: f64, d: usize, c: f64) -> Result<LifshitzEnvelope> {
    let rho = meta.rho;
    if !(-1.0..0.0).contains(&rho) || matches!(meta.g, AuxFunction::Zero) {
        return Err(TauberError::InvalidArgument(format!("envelope needs ρ ∈ [−1, 0) and g ≢ 0, got ρ = {rho}")));
    }
    if !(e > 0.0) {
        return Err(TauberError::InvalidArgument(format!("E = {e} must be positive")));
    }
    let df = d as f64;
    let target = e.powf((2.0 - df * rho) / 2.0);
    let log_g = |x: f64| meta.g(x.exp()).ln();
    // g decreases beyond its maximum; bracket in log t from t = e² upward
    let (mut lo, mut hi) = (2.0, 2.0);
    if !(log_g(lo) > target.ln()) {
        return Err(TauberError::NotBracketed(format!("g(e²) ≤ E^{{(2−dρ)/2}} = {target:.3e}")));
    }
    while log_g(hi) > target.ln() {
        hi *= 2.0;
        if hi > 700.0 {
            return Err(TauberError::NotBracketed(format!("g stays above {target:.3e} up to t = e^700")));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if log_g(mid) > target.ln() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let t_star = (0.5 * (lo + hi)).exp();
    let y1 = target.powf(1.0 / rho);
    let t_star_closed_form = (target / meta.g0(y1)).powf(1.0 / rho);
    let envelope = e.powf(-df / 2.0 + 1.0 + 1.0 / rho) * meta.g0(t_star).powf(-1.0 / rho);
    Ok(LifshitzEnvelope { e, t_star, t_star_closed_form, envelope, log_n_scale: -c * envelope })
}
