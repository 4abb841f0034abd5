//! Empirical integrated density of states from Dirichlet eigenvalue counts,
//! its Laplace transform, Lifshitz-exponent fits and the log-correction
//! model comparison.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disorder::{least_squares_slope, DistributionSpec};
use crate::lattice::BoxGeometry;
use crate::pam::{heat_trace, jackknife_mean_se, realization_spectra, PamError};
use crate::rng::stream;

#[derive(Debug, Error)]
pub enum IdsError {
    #[error(transparent)]
    Pam(#[from] PamError),
    #[error("invalid energy grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("curve does not retain per-realization eigenvalues")]
    NoEigenvalues,
    #[error("fit window [{lo}, {hi}] keeps {kept} usable points, need 3")]
    EmptyWindow { lo: f64, hi: f64, kept: usize },
}

type Result<T> = std::result::Result<T, IdsError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    pub n: Vec<f64>,
    pub se: Vec<f64>,
    pub n_disorder: usize,
    pub geometry: BoxGeometry,
    pub spec_id: String,
    pub seed: u64,
    /// Sorted spectrum of each realization.
    #[serde(skip)]
    pub eigenvalues: Option<Vec<Vec<f64>>>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(IdsError::InvalidGrid("empty".into()));
    }
    if grid.iter().any(|e| !e.is_finite()) {
        return Err(IdsError::InvalidGrid("non-finite energy".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(IdsError::InvalidGrid("energies must be strictly ascending".into()));
    }
    Ok(())
}

impl IdsCurve {
    /// Counts eigenvalues `≤ E` per realization and averages.
    pub fn from_spectra(
        mut spectra: Vec<Vec<f64>>,
        grid: &[f64],
        geometry: BoxGeometry,
        spec_id: impl Into<String>,
        seed: u64,
    ) -> Result<Self> {
        check_grid(grid)?;
        if spectra.is_empty() {
            return Err(IdsError::InvalidArgument("no realizations".into()));
        }
        for s in &mut spectra {
            s.sort_by(f64::total_cmp);
        }
        let volume = geometry.volume() as f64;
        let mut n = Vec::with_capacity(grid.len());
        let mut se = Vec::with_capacity(grid.len());
        for &e in grid {
            // eigenvalues carry rounding of a few ulp; an exact level at E counts
            let cut = e + 1e-12 * (1.0 + e.abs());
            let xs: Vec<f64> = spectra.iter().map(|s| s.partition_point(|&x| x <= cut) as f64 / volume).collect();
            n.push(xs.iter().sum::<f64>() / xs.len() as f64);
            se.push(if xs.len() > 1 { jackknife_mean_se(&xs) } else { 0.0 });
        }
        Ok(Self {
            energies: grid.to_vec(),
            n,
            se,
            n_disorder: spectra.len(),
            geometry,
            spec_id: spec_id.into(),
            seed,
            eigenvalues: Some(spectra),
        })
    }

    /// `1/(|Λ| · n_disorder · 10)`; smaller values are counting noise.
    pub fn resolution_floor(&self) -> f64 {
        1.0 / (self.geometry.volume() as f64 * self.n_disorder as f64 * 10.0)
    }

    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "# spec: {}", self.spec_id)?;
        writeln!(w, "# geometry: d={} n={}", self.geometry.dim(), self.geometry.side())?;
        writeln!(w, "# n_disorder: {}", self.n_disorder)?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "E,N,se")?;
        for ((e, n), s) in self.energies.iter().zip(&self.n).zip(&self.se) {
            writeln!(w, "{e:.17e},{n:.17e},{s:.17e}")?;
        }
        Ok(())
    }
}

/// Disorder-averaged `|Λ|^{-1} #{E_i ≤ E}` on `grid`, from the same
/// realizations as [`crate::pam::annealed_heat_trace`].
pub fn empirical_ids(
    spec: &DistributionSpec,
    geometry: &BoxGeometry,
    grid: &[f64],
    n_disorder: usize,
    seed: u64,
) -> Result<IdsCurve> {
    check_grid(grid)?;
    if n_disorder == 0 {
        return Err(IdsError::InvalidArgument("n_disorder must be positive".into()));
    }
    let spectra = realization_spectra(spec, geometry, n_disorder, seed)?;
    IdsCurve::from_spectra(spectra, grid, *geometry, spec.id(), seed)
}

/// `∫ e^{−tλ} dN(λ)` summed over the retained eigenvalues.
pub fn laplace_of_ids(curve: &IdsCurve, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(IdsError::InvalidArgument(format!("t = {t} must be nonnegative")));
    }
    let spectra = curve.eigenvalues.as_ref().ok_or(IdsError::NoEigenvalues)?;
    Ok(spectra.iter().map(|s| heat_trace(s, t)).sum::<f64>() / spectra.len() as f64)
}

/// `points` energies above `bottom`: half log-spaced in `E − bottom` over
/// `[1e-4, 0.1]·span`, the rest linear up to `top`.
pub fn energy_grid(bottom: f64, top: f64, points: usize) -> Result<Vec<f64>> {
    if !(top > bottom) || points < 4 {
        return Err(IdsError::InvalidGrid(format!("need top > bottom and ≥ 4 points (got [{bottom}, {top}], {points})")));
    }
    let span = top - bottom;
    let n_log = points / 2;
    let n_lin = points - n_log;
    let mut grid: Vec<f64> = (0..n_log)
        .map(|k| bottom + span * 10f64.powf(-4.0 + 3.0 * k as f64 / n_log as f64))
        .collect();
    grid.extend((0..n_lin).map(|k| bottom + span * (0.1 + 0.9 * k as f64 / (n_lin - 1) as f64)));
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifshitzFit {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

fn usable(energies: &[f64], n: &[f64], window: (f64, f64), floor: f64) -> Result<Vec<(f64, f64)>> {
    let pts: Vec<(f64, f64)> = energies
        .iter()
        .zip(n)
        .filter(|(&e, &v)| e >= window.0 && e <= window.1 && e > 0.0 && v > floor && v < 1.0)
        .map(|(&e, &v)| (e, v))
        .collect();
    if pts.len() < 3 {
        return Err(IdsError::EmptyWindow { lo: window.0, hi: window.1, kept: pts.len() });
    }
    Ok(pts)
}

/// Slope of `log(−log N)` against `log E` over `window`, dropping values at
/// or below `floor`.
pub fn lifshitz_fit_points(energies: &[f64], n: &[f64], window: (f64, f64), floor: f64) -> Result<LifshitzFit> {
    let pts: Vec<(f64, f64)> =
        usable(energies, n, window, floor)?.into_iter().map(|(e, v)| (e.ln(), (-v.ln()).ln())).collect();
    let slope = least_squares_slope(&pts);
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let stderr = if pts.len() > 2 { (rss / (k - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    Ok(LifshitzFit { slope, stderr, points: pts.len() })
}

pub fn lifshitz_fit(curve: &IdsCurve, window: (f64, f64)) -> Result<LifshitzFit> {
    lifshitz_fit_points(&curve.energies, &curve.n, window, curve.resolution_floor())
}

/// Tail window: from the first energy where at least 20 eigenvalues per
/// realization batch are counted (`N ≥ 20/(|Λ| n_disorder)`) up to `N ≤ 10⁻²`.
pub fn resolution_window(curve: &IdsCurve) -> Result<(f64, f64)> {
    let count_floor = 20.0 / (curve.geometry.volume() as f64 * curve.n_disorder as f64);
    let lo = curve.energies.iter().zip(&curve.n).find(|(_, &v)| v >= count_floor).map(|(&e, _)| e);
    let hi = curve.energies.iter().zip(&curve.n).rev().find(|(_, &v)| v <= 1e-2).map(|(&e, _)| e);
    match (lo, hi) {
        (Some(lo), Some(hi)) if hi > lo => Ok((lo, hi)),
        _ => Err(IdsError::EmptyWindow { lo: lo.unwrap_or(f64::NAN), hi: hi.unwrap_or(f64::NAN), kept: 0 }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogModel {
    /// `log N ≈ C E^{−d/2}`.
    A,
    /// `log N ≈ C E^{−d/2} log E`.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCorrectionReport {
    pub c_a: f64,
    pub rss_a: f64,
    pub c_b: f64,
    pub rss_b: f64,
    pub preferred: LogModel,
    pub points: usize,
}

pub fn log_correction_points(
    energies: &[f64],
    n: &[f64],
    d: usize,
    window: (f64, f64),
    floor: f64,
) -> Result<LogCorrectionReport> {
    let pts = usable(energies, n, window, floor)?;
    let half_d = d as f64 / 2.0;
    let fit = |basis: &dyn Fn(f64) -> f64| {
        let (mut sfy, mut sff) = (0.0, 0.0);
        for &(e, v) in &pts {
            let f = basis(e);
            sfy += f * v.ln();
            sff += f * f;
        }
        let c = sfy / sff;
        let rss: f64 = pts.iter().map(|&(e, v)| (v.ln() - c * basis(e)).powi(2)).sum();
        (c, rss)
    };
    let (c_a, rss_a) = fit(&|e: f64| e.powf(-half_d));
    let (c_b, rss_b) = fit(&|e: f64| e.powf(-half_d) * e.ln());
    let preferred = if rss_b <= rss_a { LogModel::B } else { LogModel::A };
    Ok(LogCorrectionReport { c_a, rss_a, c_b, rss_b, preferred, points: pts.len() })
}

pub fn log_correction_diagnostic(curve: &IdsCurve, d: usize, window: (f64, f64)) -> Result<LogCorrectionReport> {
    log_correction_points(&curve.energies, &curve.n, d, window, curve.resolution_floor())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub resamples: usize,
    /// Resamples whose fit succeeded.
    pub fitted: usize,
    /// Fraction of fitted resamples with `rss_B ≤ rss_A`.
    pub b_preferred_fraction: f64,
}

/// Resamples realizations with replacement and repeats the model comparison.
pub fn bootstrap_log_correction(
    curve: &IdsCurve,
    d: usize,
    window: (f64, f64),
    resamples: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    let spectra = curve.eigenvalues.as_ref().ok_or(IdsError::NoEigenvalues)?;
    let m = spectra.len();
    let mut fitted = 0;
    let mut b_wins = 0;
    for r in 0..resamples {
        let mut rng = stream(seed, r as u64);
        let pick: Vec<Vec<f64>> = (0..m).map(|_| spectra[rng.random_range(0..m)].clone()).collect();
        let c = IdsCurve::from_spectra(pick, &curve.energies, curve.geometry, curve.spec_id.clone(), seed)?;
        if let Ok(rep) = log_correction_diagnostic(&c, d, window) {
            fitted += 1;
            if rep.preferred == LogModel::B {
                b_wins += 1;
            }
        }
    }
    Ok(BootstrapSummary {
        resamples,
        fitted,
        b_preferred_fraction: if fitted > 0 { b_wins as f64 / fitted as f64 } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pam::annealed_heat_trace;

    #[test]
    fn free_path_counts() {
        let g = BoxGeometry::new(1, 3).unwrap();
        let c = empirical_ids(&DistributionSpec::PointMass { v: 0.0 }, &g, &[-0.1, 0.6, 2.0, 3.5, 4.0], 2, 0).unwrap();
        assert_eq!(c.n[0], 0.0);
        assert!((c.n[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.n[2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.n[4], 1.0);
    }

    #[test]
    fn nonnegative_potential_has_no_negative_states() {
        let g = BoxGeometry::new(2, 6).unwrap();
        let grid = [-1.0, -0.5, -1e-9, 0.3, 9.0];
        let c = empirical_ids(&DistributionSpec::Uniform01, &g, &grid, 5, 1).unwrap();
        assert!(c.n[..3].iter().all(|&v| v == 0.0));
        // Gershgorin: all eigenvalues ≤ 4d + max V
        assert_eq!(c.n[4], 1.0);
        assert!(c.n.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn grid_validation() {
        let g = BoxGeometry::new(1, 3).unwrap();
        assert!(empirical_ids(&DistributionSpec::Uniform01, &g, &[1.0, 0.5], 2, 0).is_err());
        assert!(empirical_ids(&DistributionSpec::Uniform01, &g, &[], 2, 0).is_err());
        let grid = energy_grid(0.0, 5.0, 40).unwrap();
        assert_eq!(grid.len(), 40);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn laplace_matches_heat_trace() {
        let g = BoxGeometry::new(1, 3).unwrap();
        let spec = DistributionSpec::PointMass { v: 0.0 };
        let c = empirical_ids(&spec, &g, &[0.0, 1.0], 2, 0).unwrap();
        assert_eq!(laplace_of_ids(&c, 0.0).unwrap(), 1.0);
        let h = annealed_heat_trace(&spec, &g, 1.0, 2, 0).unwrap();
        assert_eq!(laplace_of_ids(&c, 1.0).unwrap(), h.mean);
        let g = BoxGeometry::new(2, 7).unwrap();
        let c = empirical_ids(&DistributionSpec::Uniform01, &g, &[1.0], 6, 99).unwrap();
        for t in [0.1, 1.0, 5.0] {
            let h = annealed_heat_trace(&DistributionSpec::Uniform01, &g, t, 6, 99).unwrap();
            assert!((laplace_of_ids(&c, t).unwrap() - h.mean).abs() <= 1e-12);
        }
    }

    #[test]
    fn laplace_is_decreasing_and_log_convex() {
        let g = BoxGeometry::new(1, 40).unwrap();
        let c = empirical_ids(&DistributionSpec::Exponential { theta: 2.0 }, &g, &[1.0], 4, 5).unwrap();
        let ts: Vec<f64> = (0..30).map(|k| 0.25 * k as f64).collect();
        let ls: Vec<f64> = ts.iter().map(|&t| laplace_of_ids(&c, t).unwrap().ln()).collect();
        for w in ls.windows(3) {
            assert!(w[1] <= w[0] + 1e-15);
            assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
        }
    }

    #[test]
    fn fitter_recovers_pure_lifshitz() {
        let es: Vec<f64> = (0..50).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 49.0)).collect();
        let ns: Vec<f64> = es.iter().map(|e| (-e.powf(-0.5)).exp()).collect();
        let f = lifshitz_fit_points(&es, &ns, (1e-3, 0.1), 0.0).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-6, "{f:?}");
    }

    #[test]
    fn log_corrected_slope_is_biased_low() {
        let es: Vec<f64> = (0..50).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 49.0)).collect();
        let ns: Vec<f64> = es.iter().map(|e| (e.powf(-0.5) * e.ln()).exp()).collect();
        let f = lifshitz_fit_points(&es, &ns, (1e-3, 0.1), 0.0).unwrap();
        assert!(f.slope < -0.5, "{f:?}");
        // local slope −1/2 + 1/log E rises toward −1/2 as E ↘ 0
        let shallow = lifshitz_fit_points(&es, &ns, (1e-2, 0.1), 0.0).unwrap();
        let deep: Vec<f64> = (0..50).map(|k| 10f64.powf(-3.5 + k as f64 / 49.0)).collect();
        let nd: Vec<f64> = deep.iter().map(|e| (e.powf(-0.5) * e.ln()).exp()).collect();
        let h = lifshitz_fit_points(&deep, &nd, (1e-4, 1e-2), 0.0).unwrap();
        assert!(h.slope > shallow.slope && h.slope < -0.5, "{h:?} vs {shallow:?}");
    }

    #[test]
    fn model_selection_self_fits() {
        let es: Vec<f64> = (0..40).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 39.0)).collect();
        let nb: Vec<f64> = es.iter().map(|e| (0.7 * e.powf(-0.5) * e.ln()).exp()).collect();
        let b = log_correction_points(&es, &nb, 1, (1e-3, 0.1), 0.0).unwrap();
        assert_eq!(b.preferred, LogModel::B);
        assert!(b.rss_b < 0.5 * b.rss_a);
        assert!((b.c_b - 0.7).abs() < 1e-10);
        let na: Vec<f64> = es.iter().map(|e| (-0.7 * e.powf(-0.5)).exp()).collect();
        let a = log_correction_points(&es, &na, 1, (1e-3, 0.1), 0.0).unwrap();
        assert_eq!(a.preferred, LogModel::A);
    }

    #[test]
    fn empty_window_is_reported() {
        let es = [0.1, 0.2, 0.3];
        let ns = [0.0, 0.0, 0.5];
        assert!(matches!(lifshitz_fit_points(&es, &ns, (0.0, 1.0), 1e-6), Err(IdsError::EmptyWindow { kept: 1, .. })));
    }

    #[test]
    fn csv_header() {
        let g = BoxGeometry::new(1, 3).unwrap();
        let c = empirical_ids(&DistributionSpec::Uniform01, &g, &[0.5, 1.0], 2, 4).unwrap();
        let mut out = Vec::new();
        c.write_csv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("# spec: uniform01\n"));
        assert_eq!(s.lines().filter(|l| !l.starts_with('#')).count(), 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn curve_is_a_distribution_function(seed in 0u64..500, n in 2usize..30) {
                let g = BoxGeometry::new(1, n).unwrap();
                let grid = energy_grid(-0.5, 6.0, 30).unwrap();
                let c = empirical_ids(&DistributionSpec::Bernoulli { p0: 0.3, a: 1.5 }, &g, &grid, 3, seed).unwrap();
                prop_assert!(c.n.windows(2).all(|w| w[1] >= w[0]));
                prop_assert!(c.n.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }
}
