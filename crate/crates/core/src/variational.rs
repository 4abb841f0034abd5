//! Variational functionals `χ±_ℓ(t)`, their infima over `ℓ`, the optimal
//! length `ℓ*(t)`, the box schedule `l(t)` and the resulting bounds
//! `G(t) − t inf χ∓` on `log N̂(t)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disorder::{rv_metadata, s_deviation, DisorderError, DistributionSpec, RvMetadata};
use crate::lattice::{default_faber_krahn_constant, laplacian_ground_energy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error(transparent)]
    Disorder(#[from] DisorderError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate metadata: {0}")]
    Degenerate(String),
    #[error("wrong regime: {0}")]
    WrongRegime(String),
}

type Result<T> = std::result::Result<T, VariationalError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChiMode {
    /// `S(λ,t)` evaluated from the cumulant.
    #[default]
    Exact,
    /// `S(λ,t)` replaced by `c_g h_ρ(λ) g(t)`.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalParams {
    pub c_fk: f64,
    /// `c_FK/(12π)²`.
    pub gamma: f64,
    /// Search cap; `None` selects `max(500, 4⌈ℓ*⌉)`.
    pub ell_max: Option<usize>,
    /// Coarse grid size for the `ℓ = 1` maximin.
    pub h_grid: usize,
    pub mode: ChiMode,
}

impl VariationalParams {
    pub fn new(c_fk: f64) -> Result<Self> {
        if !(c_fk > 0.0 && c_fk.is_finite()) {
            return Err(VariationalError::InvalidArgument(format!("c_FK = {c_fk} must be positive")));
        }
        Ok(Self { c_fk, gamma: c_fk / (12.0 * PI).powi(2), ell_max: None, h_grid: 1000, mode: ChiMode::Exact })
    }

    pub fn for_dimension(d: usize) -> Self {
        Self::new(default_faber_krahn_constant(d)).expect("positive constant")
    }

    pub fn with_mode(mut self, mode: ChiMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_ell_max(mut self, ell_max: usize) -> Result<Self> {
        if ell_max < 2 {
            return Err(VariationalError::InvalidArgument("ℓ_max must be at least 2".into()));
        }
        self.ell_max = Some(ell_max);
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OptimalLength {
    Finite(f64),
    /// `g ≡ 0`: the kinetic term alone is minimised as `ℓ → ∞`.
    Unbounded,
}

impl OptimalLength {
    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(x) => Some(x),
            Self::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Quantum,
    Borderline,
    Classical,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Quantum => "quantum",
            Self::Borderline => "borderline",
            Self::Classical => "classical",
        }
    }
}

/// Finite-t regime tag: quantum if `g < 0.1`, classical if `g > 10`.
pub fn regime_tag(meta: &RvMetadata, t: f64) -> Regime {
    let g = meta.g(t);
    if g < 0.1 {
        Regime::Quantum
    } else if g > 10.0 {
        Regime::Classical
    } else {
        Regime::Borderline
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfChi {
    pub value: f64,
    pub argmin: usize,
    pub ell_max: usize,
    /// The minimum sits at the search cap.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub t: f64,
    pub g: f64,
    pub chi_minus: InfChi,
    pub chi_plus: InfChi,
    /// `G − t inf χ⁻`.
    pub lower: f64,
    /// `G − t inf χ⁺`.
    pub upper: f64,
    pub regime: Regime,
    /// `inf χ⁺ > inf χ⁻`, so the two bounds cross.
    pub crossing: bool,
}

/// A single-site law in dimension `d` with its metadata, ready for repeated
/// evaluation over `ℓ` and `t`.
#[derive(Debug, Clone)]
pub struct Variational {
    pub spec: DistributionSpec,
    pub d: usize,
    pub params: VariationalParams,
    pub meta: RvMetadata,
}

impl Variational {
    pub fn new(spec: DistributionSpec, d: usize, params: VariationalParams) -> Result<Self> {
        if d == 0 {
            return Err(VariationalError::InvalidArgument("dimension must be at least 1".into()));
        }
        let meta = rv_metadata(&spec)?;
        Ok(Self { spec, d, params, meta })
    }

    fn check(ell: usize, t: f64) -> Result<()> {
        if ell == 0 {
            return Err(VariationalError::InvalidArgument("ℓ must be at least 1".into()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(VariationalError::InvalidArgument(format!("t = {t} must be positive")));
        }
        Ok(())
    }

    fn deviation(&self, lambda: f64, t: f64) -> Result<f64> {
        match self.params.mode {
            ChiMode::Exact => Ok(s_deviation(&self.spec, lambda, t)?),
            ChiMode::Asymptotic => Ok(self.meta.asymptotic_deviation(lambda, t)),
        }
    }

    /// `μ S(μ,t)`, continuous at `μ = 0`.
    fn weighted_deviation(&self, mu: f64, t: f64) -> Result<f64> {
        if mu > 0.0 {
            return Ok(mu * self.deviation(mu, t)?);
        }
        Ok(match self.params.mode {
            ChiMode::Exact => 0.0,
            // μ h_ρ(μ) → 1 at ρ = −1 and → 0 for ρ > −1
            ChiMode::Asymptotic if self.meta.rho <= -1.0 && !self.meta.g.is_zero() => self.meta.c_g * self.meta.g(t),
            ChiMode::Asymptotic => 0.0,
        })
    }

    /// `4d sin²(π/(2(ℓ+1))) + S(ℓ^{−d}, t)`.
    pub fn chi_minus(&self, ell: usize, t: f64) -> Result<f64> {
        Self::check(ell, t)?;
        let lambda = (ell as f64).powi(-(self.d as i32));
        Ok(laplacian_ground_energy(self.d, ell) + self.deviation(lambda, t)?)
    }

    /// `ℓ = 1`: maximin over `h ∈ [1/2, 1]`; `ℓ > 1`: `γ sin²(π/(2(ℓ+1))) + S((4ℓ)^{−d}, t)/4`.
    pub fn chi_plus(&self, ell: usize, t: f64) -> Result<f64> {
        Self::check(ell, t)?;
        if ell == 1 {
            return self.chi_plus_one(t);
        }
        let s = (PI / (2.0 * (ell as f64 + 1.0))).sin();
        let lambda = (4.0 * ell as f64).powi(-(self.d as i32));
        Ok(self.params.gamma * s * s + self.deviation(lambda, t)? / 4.0)
    }

    fn chi_plus_one(&self, t: f64) -> Result<f64> {
        let two_d = 2.0 * self.d as f64;
        let half_gamma = self.params.gamma / 2.0;
        let envelope = |h: f64| -> Result<f64> {
            let kinetic = two_d * (1.0 - 2.0 * (1.0 - h).max(0.0).sqrt());
            let energy = half_gamma + self.weighted_deviation(1.0 - h, t)?;
            Ok(kinetic.min(energy))
        };
        let n = self.params.h_grid.max(3);
        let hs: Vec<f64> = (0..n).map(|i| 0.5 + 0.5 * i as f64 / (n - 1) as f64).collect();
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &h) in hs.iter().enumerate() {
            let v = envelope(h)?;
            // ties go to the larger h
            if v >= best.1 {
                best = (i, v);
            }
        }
        let (mut a, mut b) = (hs[best.0.saturating_sub(1)], hs[(best.0 + 1).min(n - 1)]);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - r * (b - a);
        let mut x2 = a + r * (b - a);
        let (mut f1, mut f2) = (envelope(x1)?, envelope(x2)?);
        for _ in 0..200 {
            if b - a <= 1e-15 {
                break;
            }
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = envelope(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = envelope(x2)?;
            }
        }
        Ok(best.1.max(f1).max(f2))
    }

    pub fn chi(&self, which: Which, ell: usize, t: f64) -> Result<f64> {
        match which {
            Which::Minus => self.chi_minus(ell, t),
            Which::Plus => self.chi_plus(ell, t),
        }
    }

    pub fn default_ell_max(&self, t: f64) -> usize {
        if let Some(cap) = self.params.ell_max {
            return cap;
        }
        match self.ell_star(t) {
            Ok(OptimalLength::Finite(l)) if l.is_finite() => 500.max(4 * l.ceil() as usize),
            _ => 500,
        }
    }

    /// Exact discrete minimum over `ℓ ∈ [1, ℓ_max]`; ties go to the smaller `ℓ`.
    pub fn inf_chi(&self, which: Which, t: f64) -> Result<InfChi> {
        let ell_max = self.default_ell_max(t);
        let mut best = (1, self.chi(which, 1, t)?);
        for ell in 2..=ell_max {
            let v = self.chi(which, ell, t)?;
            if v < best.1 {
                best = (ell, v);
            }
        }
        Ok(InfChi { value: best.1, argmin: best.0, ell_max, truncated: best.0 == ell_max })
    }

    /// `ℓ*(t)` per regime: `g^{1/(dρ−2)}` for `ρ < 0`,
    /// `max[1, (2π²/(c_g g))^{1/2}]` at `ρ = 0`, and `1` for `ρ > 0`.
    pub fn ell_star(&self, t: f64) -> Result<OptimalLength> {
        ell_star_from_metadata(&self.meta, t, self.d)
    }

    pub fn box_schedule(&self, t: f64) -> Result<BoxSchedule> {
        box_schedule_from_metadata(&self.meta, t, self.d)
    }

    pub fn sandwich_bounds(&self, t: f64) -> Result<BoundsReport> {
        let g = self.spec.cumulant(t)?;
        let chi_minus = self.inf_chi(Which::Minus, t)?;
        let chi_plus = self.inf_chi(Which::Plus, t)?;
        Ok(BoundsReport {
            t,
            g,
            chi_minus,
            chi_plus,
            lower: g - t * chi_minus.value,
            upper: g - t * chi_plus.value,
            regime: regime_tag(&self.meta, t),
            crossing: chi_plus.value > chi_minus.value,
        })
    }
}

pub fn ell_star_from_metadata(meta: &RvMetadata, t: f64, d: usize) -> Result<OptimalLength> {
    if !(t > 0.0) {
        return Err(VariationalError::InvalidArgument(format!("t = {t} must be positive")));
    }
    if meta.g.is_zero() || meta.c_g == 0.0 {
        return Ok(OptimalLength::Unbounded);
    }
    let g = meta.g(t);
    let rho = meta.rho;
    Ok(OptimalLength::Finite(if rho < 0.0 {
        g.powf(1.0 / (d as f64 * rho - 2.0))
    } else if rho == 0.0 {
        1f64.max((2.0 * PI * PI / (meta.c_g * g)).sqrt())
    } else {
        1.0
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSchedule {
    pub l: usize,
    pub alpha: f64,
    pub ell_star: f64,
}

/// `l = ⌈α(t) ℓ*(t)⌉` with `α = g₀^{1/(d(d+2))}` (ρ = −1),
/// `t^{−(1+ρ)/(d(dρ−2))}` (−1 < ρ < 0) or `t^{1/(2d)}` (ρ ≥ 0).
pub fn box_schedule_from_metadata(meta: &RvMetadata, t: f64, d: usize) -> Result<BoxSchedule> {
    let ell_star = ell_star_from_metadata(meta, t, d)?
        .finite()
        .ok_or_else(|| VariationalError::Degenerate("g ≡ 0: no finite optimal length".into()))?;
    let df = d as f64;
    let rho = meta.rho;
    let alpha = if rho == -1.0 {
        meta.g0(t).powf(1.0 / (df * (df + 2.0)))
    } else if rho < 0.0 {
        t.powf(-(1.0 + rho) / (df * (df * rho - 2.0)))
    } else {
        t.powf(1.0 / (2.0 * df))
    };
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(VariationalError::Degenerate(format!("α(t) = {alpha} at t = {t}")));
    }
    Ok(BoxSchedule { l: ((alpha * ell_star).ceil() as usize).max(1), alpha, ell_star })
}

pub fn chi_minus(ell: usize, t: f64, spec: &DistributionSpec, d: usize, params: &VariationalParams) -> Result<f64> {
    Variational::new(*spec, d, *params)?.chi_minus(ell, t)
}

pub fn chi_plus(ell: usize, t: f64, spec: &DistributionSpec, d: usize, params: &VariationalParams) -> Result<f64> {
    Variational::new(*spec, d, *params)?.chi_plus(ell, t)
}

pub fn inf_chi(which: Which, t: f64, spec: &DistributionSpec, d: usize, params: &VariationalParams) -> Result<InfChi> {
    Variational::new(*spec, d, *params)?.inf_chi(which, t)
}

pub fn ell_star(spec: &DistributionSpec, t: f64, d: usize) -> Result<OptimalLength> {
    ell_star_from_metadata(&rv_metadata(spec)?, t, d)
}

pub fn box_schedule(spec: &DistributionSpec, t: f64, d: usize) -> Result<BoxSchedule> {
    box_schedule_from_metadata(&rv_metadata(spec)?, t, d)
}

pub fn sandwich_bounds(t: f64, spec: &DistributionSpec, d: usize, params: &VariationalParams) -> Result<BoundsReport> {
    Variational::new(*spec, d, *params)?.sandwich_bounds(t)
}

/// Constant of the small-`c_g g` branch of `χ⁺*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlusBranchConstant {
    /// `γ/(4d)`, normalised by `2d`.
    #[default]
    GammaOverFourD,
    /// `γ/2`, the unnormalised lower bound on `inf χ⁺`.
    GammaOverTwo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiStar {
    pub value: f64,
    /// `min(value, 1)`; `inf χ⁻ ≤ χ⁻_1 = 2d` makes values above 1 vacuous.
    pub capped: f64,
    /// Index of the closed-form case that applied (1 or 2).
    pub branch: u8,
}

/// Classical-regime constants with `G − 2dt χ⁻* ≤ log N̂ ≤ G − 2dt χ⁺*`.
pub fn classical_chi_star(
    which: Which,
    t: f64,
    meta: &RvMetadata,
    d: usize,
    gamma: f64,
    constant: PlusBranchConstant,
) -> Result<ChiStar> {
    if meta.rho < 0.0 {
        return Err(VariationalError::WrongRegime(format!("classical constants need ρ ≥ 0, got {}", meta.rho)));
    }
    if meta.g.is_zero() || meta.c_g <= 0.0 {
        return Err(VariationalError::Degenerate("c_g g(t) vanishes".into()));
    }
    chi_star_from_product(which, meta.c_g * meta.g(t), d, gamma, constant)
}

/// [`classical_chi_star`] as a function of `x = c_g g(t)`.
pub fn chi_star_from_product(which: Which, x: f64, d: usize, gamma: f64, constant: PlusBranchConstant) -> Result<ChiStar> {
    if !(x > 0.0) {
        return Err(VariationalError::InvalidArgument(format!("c_g g(t) = {x} must be positive")));
    }
    let df = d as f64;
    let (value, branch) = match which {
        Which::Minus => {
            if x >= 2.0 * PI * PI {
                (1.0, 1)
            } else {
                (4.0 * x + x * (2.0 * PI * PI / x).ln(), 2)
            }
        }
        Which::Plus => {
            let threshold = 2.0 * (2.0 * df).exp() + gamma * PI * PI / (2.0 * df);
            if x >= threshold {
                (1.0 - 2.0 / x.sqrt(), 1)
            } else {
                let c = match constant {
                    PlusBranchConstant::GammaOverFourD => gamma / (4.0 * df),
                    PlusBranchConstant::GammaOverTwo => gamma / 2.0,
                };
                let k = df * x / 8.0;
                (c.min(k + k * (64.0 * gamma * PI * PI / x).ln()), 2)
            }
        }
    };
    Ok(ChiStar { value, capped: value.min(1.0), branch })
}
