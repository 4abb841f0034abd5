use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{BoxGeometry, LatticeError};

/// A real symmetric operator that can be applied to vectors.
///
/// Implementations must be safe to share across threads; solvers keep
/// their own scratch space.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// `out ← A·x`. `out` has length `dim()` and is overwritten.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }

    /// Sum of the diagonal entries.
    fn trace(&self) -> f64;

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        m
    }
}

/// Site potential on a box, reproducible from `(seed, spec_id, geometry)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSample {
    values: Vec<f64>,
    seed: u64,
    spec_id: String,
}

impl PotentialSample {
    pub fn new(values: Vec<f64>, seed: u64, spec_id: impl Into<String>) -> Result<Self, LatticeError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LatticeError::NonFinitePotential { site: i });
        }
        Ok(Self { values, seed, spec_id: spec_id.into() })
    }

    pub fn constant(geometry: &BoxGeometry, value: f64) -> Result<Self, LatticeError> {
        Self::new(vec![value; geometry.volume()], 0, format!("point_mass({value})"))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec_id(&self) -> &str {
        &self.spec_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `H = -Δ + V` compressed to a box: exterior values are zero, so the
/// diagonal is `2d + V(x)` and every in-box neighbour contributes `-1`.
#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    geometry: BoxGeometry,
    diagonal: Vec<f64>,
    potential: Option<PotentialSample>,
}

impl HamiltonianOperator {
    pub fn new(geometry: BoxGeometry, potential: Option<PotentialSample>) -> Result<Self, LatticeError> {
        let vol = geometry.volume();
        let kinetic = 2.0 * geometry.dim() as f64;
        let diagonal = match &potential {
            Some(p) => {
                if p.len() != vol {
                    return Err(LatticeError::SiteCountMismatch { expected: vol, found: p.len() });
                }
                p.values().iter().map(|v| kinetic + v).collect()
            }
            None => vec![kinetic; vol],
        };
        Ok(Self { geometry, diagonal, potential })
    }

    /// The pure Dirichlet Laplacian `-Δ_Λ^D`.
    pub fn laplacian(geometry: BoxGeometry) -> Self {
        Self::new(geometry, None).expect("zero potential always matches")
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn potential(&self) -> Option<&PotentialSample> {
        self.potential.as_ref()
    }

    /// Potential value at a site (zero when no potential is attached).
    pub fn potential_at(&self, site: usize) -> f64 {
        self.potential.as_ref().map_or(0.0, |p| p.values()[site])
    }

    /// For `d = 1` the operator is tridiagonal: returns `(diagonal, off_diagonal)`.
    pub fn tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        (self.geometry.dim() == 1).then(|| {
            let n = self.diagonal.len();
            (self.diagonal.clone(), vec![-1.0; n.saturating_sub(1)])
        })
    }
}

impl SymmetricOperator for HamiltonianOperator {
    fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.diagonal[i] * x[i];
            self.geometry.for_each_neighbor(i, |j| acc -= x[j]);
            *o = acc;
        }
    }

    fn trace(&self) -> f64 {
        self.diagonal.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_diagonal_is_2d() {
        let h = HamiltonianOperator::laplacian(BoxGeometry::new(1, 1).unwrap());
        assert_eq!(h.apply(&[1.0]), vec![2.0]);
    }

    #[test]
    fn constant_vector_gives_boundary_deficit() {
        let g = BoxGeometry::new(2, 3).unwrap();
        let h = HamiltonianOperator::laplacian(g);
        let out = h.apply(&[1.0; 9]);
        // corners 2, edge midpoints 1, centre 0
        assert_eq!(out, vec![2.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 2.0]);
        for (i, &x) in out.iter().enumerate() {
            assert_eq!(x, g.boundary_deficit(i) as f64);
        }
    }

    #[test]
    fn dense_matches_stencil_with_potential() {
        let g = BoxGeometry::new(1, 3).unwrap();
        let v = PotentialSample::new(vec![5.0, 0.0, 0.0], 0, "test").unwrap();
        let h = HamiltonianOperator::new(g, Some(v)).unwrap();
        let m = h.to_dense();
        let expected = DMatrix::from_row_slice(3, 3, &[7.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        assert_eq!(m, expected);
        assert_eq!(h.trace(), 11.0);
    }

    #[test]
    fn mismatched_potential_rejected() {
        let g = BoxGeometry::new(2, 3).unwrap();
        let v = PotentialSample::new(vec![0.0; 8], 0, "test").unwrap();
        assert!(matches!(
            HamiltonianOperator::new(g, Some(v)),
            Err(LatticeError::SiteCountMismatch { expected: 9, found: 8 })
        ));
    }

    #[test]
    fn non_finite_potential_rejected() {
        assert!(PotentialSample::new(vec![0.0, f64::NAN], 0, "x").is_err());
    }
}
