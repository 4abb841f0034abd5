//! Parabolic Anderson model `∂_t u = −H u`, `u(·,0) = 1`, on a Dirichlet box.
//!
//! Quenched solutions come from a Krylov matrix-exponential integrator or
//! from Feynman–Kac Monte Carlo over continuous-time walks with jump rate
//! `2d`. Annealed quantities average over seeded disorder realizations.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};
use thiserror::Error;

use crate::disorder::{sample, DisorderError, DistributionSpec};
use crate::lattice::lanczos::{lanczos, norm};
use crate::lattice::{full_spectrum, BoxGeometry, HamiltonianOperator, LatticeError, PotentialSample, SymmetricOperator};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Error)]
pub enum PamError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Disorder(#[from] DisorderError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integrator exceeded its step budget at time {reached} of {target}")]
    StepBudget { reached: f64, target: f64 },
    #[error("potential undefined at {0:?} (free-mode walk left the sampled region)")]
    PotentialUndefined(Vec<i64>),
}

type Result<T> = std::result::Result<T, PamError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Krylov,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PamSolution {
    pub t: f64,
    pub u: Vec<f64>,
    pub method: SolveMethod,
    /// Accumulated step-doubling error (max norm).
    pub error_estimate: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealedEstimate {
    pub t: f64,
    pub mean: f64,
    pub se: f64,
    pub n_disorder: usize,
    /// Walkers per realization, zero for deterministic methods.
    pub n_paths: usize,
    pub seed: u64,
}

const KRYLOV_DIM: usize = 40;
const MAX_STEPS: usize = 100_000;

/// `exp(−τA)·v` from one Lanczos run.
fn krylov_step(op: &dyn SymmetricOperator, v: &[f64], tau: f64) -> Vec<f64> {
    let beta = norm(v);
    if beta == 0.0 {
        return vec![0.0; v.len()];
    }
    let start: Vec<f64> = v.iter().map(|x| x / beta).collect();
    let m = KRYLOV_DIM.min(op.dim());
    let basis = lanczos(op, start, m, &[], |_| false);
    let eig = nalgebra::SymmetricEigen::new(basis.tridiagonal_matrix());
    let k = basis.len();
    let mut coeffs = vec![0.0; k];
    for j in 0..k {
        let w = beta * (-tau * eig.eigenvalues[j]).exp() * eig.eigenvectors[(0, j)];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c += w * eig.eigenvectors[(i, j)];
        }
    }
    basis.combine(&coeffs)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `e^{−tA}·1` by Krylov steps, each checked against two half steps.
///
/// The local error of an accepted step is at most `tol·(τ/t)·max(1, ‖u‖∞)`.
pub fn solve_pam(h: &dyn SymmetricOperator, t: f64, tol: f64) -> Result<PamSolution> {
    solve_pam_from(h, vec![1.0; h.dim()], t, tol)
}

pub fn solve_pam_from(h: &dyn SymmetricOperator, u0: Vec<f64>, t: f64, tol: f64) -> Result<PamSolution> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PamError::InvalidArgument(format!("t = {t} must be finite and nonnegative")));
    }
    if !(tol > 0.0) {
        return Err(PamError::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    if u0.len() != h.dim() {
        return Err(PamError::InvalidArgument("initial vector has the wrong length".into()));
    }
    let mut u = u0;
    let mut time = 0.0;
    let mut tau = t;
    let mut error = 0.0;
    let mut steps = 0;
    let mut attempts = 0;
    while t - time > 1e-14 * t {
        attempts += 1;
        if attempts > MAX_STEPS {
            return Err(PamError::StepBudget { reached: time, target: t });
        }
        tau = tau.min(t - time);
        let full = krylov_step(h, &u, tau);
        let mid = krylov_step(h, &u, 0.5 * tau);
        let half = krylov_step(h, &mid, 0.5 * tau);
        let diff = full.iter().zip(&half).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let allowed = tol * (tau / t) * max_abs(&half).max(1.0);
        if diff <= allowed {
            u = half;
            time += tau;
            error += diff;
            steps += 1;
            if diff < allowed / 32.0 {
                tau *= 2.0;
            }
        } else {
            tau *= 0.5;
        }
    }
    Ok(PamSolution { t, u, method: SolveMethod::Krylov, error_estimate: error, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WalkMode {
    /// Paths leaving the box contribute zero.
    #[default]
    Killed,
    /// Paths continue on ℤ^d; the field must be defined wherever they go.
    Free,
}

/// A potential on ℤ^d, possibly defined only on part of it.
pub trait LatticeField: Sync {
    fn value_at(&self, coords: &[i64]) -> Option<f64>;
}

/// Box potential; undefined outside the box.
pub struct BoxField<'a> {
    pub geometry: BoxGeometry,
    pub values: &'a [f64],
}

impl LatticeField for BoxField<'_> {
    fn value_at(&self, coords: &[i64]) -> Option<f64> {
        self.geometry.index_signed(coords).map(|i| self.values[i])
    }
}

pub struct ConstantField(pub f64);

impl LatticeField for ConstantField {
    fn value_at(&self, _: &[i64]) -> Option<f64> {
        Some(self.0)
    }
}

const PATH_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n / n, m2: self.m2 + o.m2 + d * d * self.n * o.n / n }
    }
}

/// Feynman–Kac estimate of `u(x0, t) = E^{x0}[exp(−∫_0^t V(X_s) ds)]`.
///
/// Paths are simulated in fixed chunks, chunk `k` drawing from stream `k`
/// of `seed`, so the estimate does not depend on the thread count.
pub fn feynman_kac_mc(
    field: &dyn LatticeField,
    geometry: &BoxGeometry,
    x0: usize,
    t: f64,
    n_paths: usize,
    seed: u64,
    mode: WalkMode,
) -> Result<AnnealedEstimate> {
    if x0 >= geometry.volume() {
        return Err(PamError::InvalidArgument(format!("start site {x0} outside the box")));
    }
    if n_paths == 0 {
        return Err(PamError::InvalidArgument("need at least one path".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PamError::InvalidArgument(format!("t = {t} must be finite and nonnegative")));
    }
    let d = geometry.dim();
    let rate = 2.0 * d as f64;
    let origin: Vec<i64> = geometry.coords(x0).into_iter().map(|c| c as i64).collect();
    let chunks = n_paths.div_ceil(PATH_CHUNK);
    let parts: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k as u64);
            let count = PATH_CHUNK.min(n_paths - k * PATH_CHUNK);
            let mut acc = Moments::default();
            let mut pos = origin.clone();
            for _ in 0..count {
                pos.copy_from_slice(&origin);
                let mut remaining = t;
                let mut integral = 0.0;
                let mut alive = true;
                loop {
                    let v = field.value_at(&pos).ok_or_else(|| PamError::PotentialUndefined(pos.clone()))?;
                    let hold: f64 = Exp1.sample(&mut rng);
                    let hold = hold / rate;
                    if hold >= remaining {
                        integral += v * remaining;
                        break;
                    }
                    integral += v * hold;
                    remaining -= hold;
                    let k = rng.random_range(0..2 * d);
                    pos[k / 2] += if k % 2 == 0 { 1 } else { -1 };
                    if mode == WalkMode::Killed && geometry.index_signed(&pos).is_none() {
                        alive = false;
                        break;
                    }
                }
                acc.push(if alive { (-integral).exp() } else { 0.0 });
            }
            Ok(acc)
        })
        .collect();
    let mut total = Moments::default();
    for p in parts {
        total = total.merge(p?);
    }
    let var = if total.n > 1.0 { total.m2 / (total.n - 1.0) } else { 0.0 };
    Ok(AnnealedEstimate {
        t,
        mean: total.mean,
        se: (var.max(0.0) / total.n).sqrt(),
        n_disorder: 1,
        n_paths,
        seed,
    })
}

/// `P[Poisson(2dt) ≥ R]` with `R` the jump distance from `x0` to the outside
/// of the box: a bound on the probability that a walk notices the boundary.
pub fn exit_probability_bound(geometry: &BoxGeometry, x0: usize, t: f64) -> f64 {
    let n = geometry.side();
    let r = geometry.coords(x0).into_iter().map(|c| (c + 1).min(n - c)).min().unwrap_or(1) as u64;
    let lambda = 2.0 * geometry.dim() as f64 * t;
    if lambda <= 0.0 {
        return 0.0;
    }
    let p = Poisson::new(lambda).expect("positive rate");
    1.0 - p.cdf(r - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentMethod {
    Integrator { tol: f64 },
    MonteCarlo { n_paths: usize, mode: WalkMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DisorderSampling {
    /// Independent draws, realization `r` seeded by `derive_seed(seed, r)`.
    #[default]
    Iid,
    /// Every configuration of a finite-support law, weighted by its probability.
    Exhaustive,
}

/// Potential of realization `r`, identical across every annealed estimator.
pub fn realization_potential(spec: &DistributionSpec, geometry: &BoxGeometry, seed: u64, r: usize) -> Result<PotentialSample> {
    let s = derive_seed(seed, r as u64);
    Ok(PotentialSample::new(sample(spec, s, geometry.volume())?, s, spec.id())?)
}

fn configurations(
    spec: &DistributionSpec,
    geometry: &BoxGeometry,
    n_disorder: usize,
    seed: u64,
    sampling: DisorderSampling,
) -> Result<Vec<(PotentialSample, f64)>> {
    match sampling {
        DisorderSampling::Iid => {
            if n_disorder < 2 {
                return Err(PamError::InvalidArgument("n_disorder must be at least 2".into()));
            }
            let w = 1.0 / n_disorder as f64;
            (0..n_disorder).map(|r| Ok((realization_potential(spec, geometry, seed, r)?, w))).collect()
        }
        DisorderSampling::Exhaustive => {
            let atoms = spec
                .atoms()
                .ok_or_else(|| PamError::InvalidArgument(format!("{} has no finite support", spec.id())))?;
            let v = geometry.volume();
            let total = (atoms.len() as u32)
                .checked_pow(v as u32)
                .map(|x| x as usize)
                .filter(|&x| x == n_disorder)
                .ok_or_else(|| {
                    PamError::InvalidArgument(format!(
                        "exhaustive sampling needs n_disorder = {}^{v}, got {n_disorder}",
                        atoms.len()
                    ))
                })?;
            let mut out = Vec::with_capacity(total);
            for code in 0..total {
                let mut c = code;
                let mut values = Vec::with_capacity(v);
                let mut weight = 1.0;
                for _ in 0..v {
                    let (a, p) = atoms[c % atoms.len()];
                    values.push(a);
                    weight *= p;
                    c /= atoms.len();
                }
                out.push((PotentialSample::new(values, code as u64, spec.id())?, weight));
            }
            Ok(out)
        }
    }
}

/// `⟨u(0,t)⟩` at the box centre with i.i.d. disorder.
pub fn annealed_moment(
    spec: &DistributionSpec,
    geometry: &BoxGeometry,
    t: f64,
    n_disorder: usize,
    method: MomentMethod,
    seed: u64,
) -> Result<AnnealedEstimate> {
    annealed_moment_with(spec, geometry, t, n_disorder, method, seed, DisorderSampling::Iid)
}

/// Disorder se is the jackknife over realizations; Monte Carlo se per
/// realization is added in quadrature.
pub fn annealed_moment_with(
    spec: &DistributionSpec,
    geometry: &BoxGeometry,
    t: f64,
    n_disorder: usize,
    method: MomentMethod,
    seed: u64,
    sampling: DisorderSampling,
) -> Result<AnnealedEstimate> {
    spec.validate()?;
    let configs = configurations(spec, geometry, n_disorder, seed, sampling)?;
    let x0 = geometry.center();
    let values: Vec<Result<(f64, f64)>> = configs
        .par_iter()
        .map(|(pot, _)| match method {
            MomentMethod::Integrator { tol } => {
                let h = HamiltonianOperator::new(*geometry, Some(pot.clone()))?;
                let sol = solve_pam(&h, t, tol)?;
                Ok((sol.u[x0], 0.0))
            }
            MomentMethod::MonteCarlo { n_paths, mode } => {
                let field = BoxField { geometry: *geometry, values: pot.values() };
                let e = feynman_kac_mc(&field, geometry, x0, t, n_paths, derive_seed(pot.seed(), 0x4d43), mode)?;
                Ok((e.mean, e.se))
            }
        })
        .collect();
    let values: Vec<(f64, f64)> = values.into_iter().collect::<Result<_>>()?;
    let weights: Vec<f64> = configs.iter().map(|c| c.1).collect();
    let (mean, se) = combine(&values, &weights, sampling);
    let n_paths = match method {
        MomentMethod::MonteCarlo { n_paths, .. } => n_paths,
        MomentMethod::Integrator { .. } => 0,
    };
    Ok(AnnealedEstimate { t, mean, se, n_disorder: configs.len(), n_paths, seed })
}

fn combine(values: &[(f64, f64)], weights: &[f64], sampling: DisorderSampling) -> (f64, f64) {
    let mean: f64 = values.iter().zip(weights).map(|(v, w)| v.0 * w).sum();
    let inner: f64 = values.iter().zip(weights).map(|(v, w)| (v.1 * w).powi(2)).sum();
    let outer = match sampling {
        DisorderSampling::Exhaustive => 0.0,
        DisorderSampling::Iid => {
            let xs: Vec<f64> = values.iter().map(|v| v.0).collect();
            jackknife_mean_se(&xs).powi(2)
        }
    };
    (mean, (outer + inner).sqrt())
}

/// Jackknife standard error of a sample mean (equal to `s/√n`).
pub fn jackknife_mean_se(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::INFINITY;
    }
    let total: f64 = xs.iter().sum();
    let loo: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1.0)).collect();
    let m = loo.iter().sum::<f64>() / n;
    ((n - 1.0) / n * loo.iter().map(|x| (x - m).powi(2)).sum::<f64>()).sqrt()
}

/// Full Dirichlet spectra of realizations `0..n_disorder`.
pub fn realization_spectra(
    spec: &DistributionSpec,
    geometry: &BoxGeometry,
    n_disorder: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    (0..n_disorder)
        .into_par_iter()
        .map(|r| {
            let h = HamiltonianOperator::new(*geometry, Some(realization_potential(spec, geometry, seed, r)?))?;
            Ok(full_spectrum(&h)?.eigenvalues)
        })
        .collect()
}

/// `|Λ|^{-1} Σ_i e^{−tE_i}` for one spectrum.
pub fn heat_trace(eigenvalues: &[f64], t: f64) -> f64 {
    eigenvalues.iter().map(|e| (-t * e).exp()).sum::<f64>() / eigenvalues.len() as f64
}

pub fn heat_trace_from_spectra(spectra: &[Vec<f64>], t: f64, seed: u64) -> AnnealedEstimate {
    let xs: Vec<f64> = spectra.iter().map(|s| heat_trace(s, t)).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    AnnealedEstimate { t, mean, se: jackknife_mean_se(&xs), n_disorder: xs.len(), n_paths: 0, seed }
}

/// Finite-volume `N̂(t)`: the disorder average of the site-averaged diagonal heat kernel.
pub fn annealed_heat_trace(
    spec: &DistributionSpec,
    geometry: &BoxGeometry,
    t: f64,
    n_disorder: usize,
    seed: u64,
) -> Result<AnnealedEstimate> {
    Ok(annealed_heat_trace_grid(spec, geometry, &[t], n_disorder, seed)?.remove(0))
}

pub fn annealed_heat_trace_grid(
    spec: &DistributionSpec,
    geometry: &BoxGeometry,
    ts: &[f64],
    n_disorder: usize,
    seed: u64,
) -> Result<Vec<AnnealedEstimate>> {
    if n_disorder < 2 {
        return Err(PamError::InvalidArgument("n_disorder must be at least 2".into()));
    }
    if let Some(t) = ts.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(PamError::InvalidArgument(format!("t = {t} must be finite and nonnegative")));
    }
    let spectra = realization_spectra(spec, geometry, n_disorder, seed)?;
    Ok(ts.iter().map(|&t| heat_trace_from_spectra(&spectra, t, seed)).collect())
}
