//! Occupation measures, their Dirichlet-form energy, the energy-bin
//! classification used by the upper bound, and a lattice Faber–Krahn check.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BoxGeometry, LatticeError, SymmetricOperator};

/// A probability vector on the sites of a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationMeasure {
    geometry: BoxGeometry,
    weights: Vec<f64>,
}

impl OccupationMeasure {
    pub fn new(geometry: BoxGeometry, weights: Vec<f64>) -> Result<Self, LatticeError> {
        if weights.len() != geometry.volume() {
            return Err(LatticeError::SiteCountMismatch { expected: geometry.volume(), found: weights.len() });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(LatticeError::InvalidMeasure("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(LatticeError::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { geometry, weights })
    }

    /// Normalizes arbitrary nonnegative mass.
    pub fn from_mass(geometry: BoxGeometry, mass: Vec<f64>) -> Result<Self, LatticeError> {
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(LatticeError::InvalidMeasure("total mass must be positive".into()));
        }
        Self::new(geometry, mass.into_iter().map(|m| m / total).collect())
    }

    pub fn dirac(geometry: BoxGeometry, site: usize) -> Self {
        let mut w = vec![0.0; geometry.volume()];
        w[site] = 1.0;
        Self { geometry, weights: w }
    }

    pub fn uniform(geometry: BoxGeometry) -> Self {
        let n = geometry.volume();
        Self { geometry, weights: vec![1.0 / n as f64; n] }
    }

    /// `p = φ²` for a unit vector `φ`.
    pub fn from_amplitude(geometry: BoxGeometry, phi: &[f64]) -> Result<Self, LatticeError> {
        Self::from_mass(geometry, phi.iter().map(|x| x * x).collect())
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `(√p | -Δ_Λ^D √p)`: the edge sum of `(√p(x) - √p(y))²` plus the mass next to the exterior.
pub fn dirichlet_form(p: &OccupationMeasure) -> f64 {
    let g = p.geometry();
    let root: Vec<f64> = p.weights().iter().map(|w| w.sqrt()).collect();
    let mut edges = 0.0;
    let mut boundary = 0.0;
    for x in 0..g.volume() {
        g.for_each_neighbor(x, |y| {
            if y > x {
                edges += (root[x] - root[y]).powi(2);
            }
        });
        boundary += g.boundary_deficit(x) as f64 * p.weights()[x];
    }
    edges + boundary
}

/// Energy bin of an occupation measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureBin {
    Bin(usize),
    /// Form value zero; no bin contains it.
    Unclassifiable,
}

/// Interval `(lo, hi]` of form values assigned to bin `ℓ`.
pub fn bin_edges(ell: usize, gamma: f64, d: usize) -> (f64, f64) {
    assert!(ell >= 1);
    let s2 = |x: f64| x.sin().powi(2);
    let pi = std::f64::consts::PI;
    if ell == 1 {
        (gamma * s2(pi / 4.0), 2.0 * d as f64)
    } else {
        (gamma * s2(pi / (2.0 * (ell + 1) as f64)), gamma * s2(pi / (2.0 * ell as f64)))
    }
}

pub fn classify_measure(p: &OccupationMeasure, gamma: f64) -> Result<MeasureBin, LatticeError> {
    if !(gamma > 0.0) {
        return Err(LatticeError::InvalidArgument("γ must be positive".into()));
    }
    Ok(classify_energy(dirichlet_form(p), gamma, p.geometry().dim()))
}

/// Bin of a form value in `(0, 2d]`. Intervals are open below and closed above.
pub fn classify_energy(form: f64, gamma: f64, d: usize) -> MeasureBin {
    if !(form > 0.0) {
        return MeasureBin::Unclassifiable;
    }
    if form > bin_edges(1, gamma, d).0 {
        return MeasureBin::Bin(1);
    }
    // π/(2(ℓ+1)) < asin√(form/γ) ≤ π/(2ℓ)  ⇔  ℓ = ⌊π / (2 asin√(form/γ))⌋
    let s = (form / gamma).sqrt().min(1.0).asin();
    let mut ell = ((std::f64::consts::PI / (2.0 * s)).floor() as usize).max(2);
    loop {
        let (lo, hi) = bin_edges(ell, gamma, d);
        if form > hi {
            ell -= 1;
        } else if form <= lo {
            ell += 1;
        } else {
            return MeasureBin::Bin(ell.max(2));
        }
        if ell < 2 {
            return MeasureBin::Bin(2);
        }
    }
}

/// Dirichlet Laplacian of an arbitrary finite site set `U ⊂ ℤ^d`.
#[derive(Debug, Clone)]
pub struct SiteSetLaplacian {
    d: usize,
    neighbors: Vec<Vec<usize>>,
}

impl SiteSetLaplacian {
    pub fn new(sites: &[Vec<i64>]) -> Result<Self, LatticeError> {
        let d = sites.first().map(Vec::len).ok_or_else(|| LatticeError::InvalidArgument("empty site set".into()))?;
        if d == 0 || sites.iter().any(|s| s.len() != d) {
            return Err(LatticeError::InvalidArgument("sites must share a positive dimension".into()));
        }
        let index: HashMap<&[i64], usize> = sites.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        if index.len() != sites.len() {
            return Err(LatticeError::InvalidArgument("duplicate sites".into()));
        }
        let mut probe = vec![0i64; d];
        let neighbors = sites
            .iter()
            .map(|s| {
                let mut nb = Vec::new();
                for axis in 0..d {
                    for step in [-1i64, 1] {
                        probe.copy_from_slice(s);
                        probe[axis] += step;
                        if let Some(&j) = index.get(probe.as_slice()) {
                            nb.push(j);
                        }
                    }
                }
                nb
            })
            .collect();
        Ok(Self { d, neighbors })
    }
}

impl SymmetricOperator for SiteSetLaplacian {
    fn dim(&self) -> usize {
        self.neighbors.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let diag = 2.0 * self.d as f64;
        for (i, nb) in self.neighbors.iter().enumerate() {
            out[i] = diag * x[i] - nb.iter().map(|&j| x[j]).sum::<f64>();
        }
    }

    fn trace(&self) -> f64 {
        2.0 * self.d as f64 * self.dim() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaberKrahnCheck {
    pub holds: bool,
    pub ground_energy: f64,
    pub bound: f64,
    /// `E1 − c_FK |U|^{-2/d}`.
    pub margin: f64,
}

/// Compares `E1(-Δ_U^D)` with `c_FK |U|^{-2/d}`.
pub fn faber_krahn_check(sites: &[Vec<i64>], c_fk: f64) -> Result<FaberKrahnCheck, LatticeError> {
    let lap = SiteSetLaplacian::new(sites)?;
    let size = lap.dim() as f64;
    let ground_energy = if lap.dim() <= 512 {
        super::spectrum::dense_eigenvalues(lap.to_dense())[0]
    } else {
        super::smallest_eigenvalues(&lap, 1, 1e-10)?.eigenvalues[0]
    };
    let bound = c_fk * size.powf(-2.0 / lap.d as f64);
    let margin = ground_energy - bound;
    // Tolerate round-off when the bound is attained (single site).
    Ok(FaberKrahnCheck { holds: margin >= -1e-12 * bound.max(1.0), ground_energy, bound, margin })
}

/// Default Faber–Krahn constant: 2 in one dimension, 1 otherwise.
pub fn default_faber_krahn_constant(d: usize) -> f64 {
    if d == 1 {
        2.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{laplacian_ground_energy, laplacian_ground_state};

    fn gamma(c_fk: f64) -> f64 {
        c_fk / (12.0 * std::f64::consts::PI).powi(2)
    }

    #[test]
    fn dirac_at_center_costs_2d() {
        for d in 1..=3 {
            let g = BoxGeometry::new(d, 7).unwrap();
            let p = OccupationMeasure::dirac(g, g.center());
            assert!((dirichlet_form(&p) - 2.0 * d as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn ground_state_rayleigh_quotient() {
        for (d, n) in [(1, 12), (2, 6), (3, 4)] {
            let g = BoxGeometry::new(d, n).unwrap();
            let p = OccupationMeasure::from_amplitude(g, &laplacian_ground_state(d, n)).unwrap();
            assert!((dirichlet_form(&p) - laplacian_ground_energy(d, n)).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_on_long_path() {
        let g = BoxGeometry::new(1, 100).unwrap();
        let p = OccupationMeasure::uniform(g);
        // direct summation: interior differences vanish, two boundary sites carry 1/100 each
        let oracle: f64 = 2.0 * (1.0 / 100.0);
        assert!((dirichlet_form(&p) - oracle).abs() < 1e-15);
    }

    #[test]
    fn measure_validation() {
        let g = BoxGeometry::new(1, 3).unwrap();
        assert!(OccupationMeasure::new(g, vec![0.5, 0.5, 0.1]).is_err());
        assert!(OccupationMeasure::new(g, vec![1.5, -0.5, 0.0]).is_err());
        assert!(OccupationMeasure::new(g, vec![0.5, 0.5]).is_err());
        assert!(OccupationMeasure::new(g, vec![0.25, 0.5, 0.25]).is_ok());
    }

    #[test]
    fn classification_examples() {
        let g1 = BoxGeometry::new(1, 9).unwrap();
        let gam = gamma(2.0);
        assert!(gam < 0.0015);
        let p = OccupationMeasure::dirac(g1, g1.center());
        assert_eq!(classify_measure(&p, gam).unwrap(), MeasureBin::Bin(1));

        let edge = gam * (std::f64::consts::PI / 4.0).sin().powi(2);
        assert_eq!(classify_energy(edge, gam, 1), MeasureBin::Bin(2));
        assert_eq!(classify_energy(0.0, gam, 1), MeasureBin::Unclassifiable);
        assert_eq!(classify_energy(2.0, gam, 1), MeasureBin::Bin(1));
    }

    #[test]
    fn wide_ground_states_land_in_large_bins() {
        let gam = gamma(2.0);
        let mut last = 0;
        for n in [50, 100, 200, 400, 800] {
            let g = BoxGeometry::new(1, n).unwrap();
            let p = OccupationMeasure::from_amplitude(g, &laplacian_ground_state(1, n)).unwrap();
            let MeasureBin::Bin(ell) = classify_measure(&p, gam).unwrap() else { panic!() };
            assert!(ell >= last, "bins must not shrink as the form decreases");
            last = ell;
        }
        assert!(last > 1);
    }

    #[test]
    fn single_site_faber_krahn_is_tight() {
        let r = faber_krahn_check(&[vec![0]], 2.0).unwrap();
        assert!(r.holds);
        assert!(r.margin.abs() < 1e-14);
    }

    #[test]
    fn path_scaled_energy_increases_to_pi_squared() {
        let mut last = 0.0;
        for n in 1..=50usize {
            let sites: Vec<Vec<i64>> = (0..n as i64).map(|x| vec![x]).collect();
            let r = faber_krahn_check(&sites, 2.0).unwrap();
            let scaled = r.ground_energy * (n * n) as f64;
            let closed = 4.0 * (std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin().powi(2) * (n * n) as f64;
            assert!((scaled - closed).abs() < 1e-10 * closed);
            assert!(scaled > last && scaled < std::f64::consts::PI.powi(2));
            last = scaled;
        }
    }

    #[test]
    fn every_subset_of_ten_sites_satisfies_faber_krahn() {
        // exhaustive over all 2^10 − 1 nonempty subsets
        for mask in 1u32..(1 << 10) {
            let sites: Vec<Vec<i64>> = (0..10).filter(|b| mask >> b & 1 == 1).map(|b| vec![b as i64]).collect();
            let r = faber_krahn_check(&sites, 2.0).unwrap();
            assert!(r.holds, "mask {mask:b}: {r:?}");
        }
    }
}
