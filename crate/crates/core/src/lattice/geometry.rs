use serde::{Deserialize, Serialize};

use super::LatticeError;

/// A cube of `n^d` lattice sites with Dirichlet (hard zero) exterior.
///
/// Sites carry coordinates `x_j ∈ 0..n`; the linear index is
/// `Σ_j x_j n^j`. Exterior neighbours are never indexed, they only show up
/// as the per-site boundary deficit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxGeometry {
    d: usize,
    n: usize,
}

impl BoxGeometry {
    pub fn new(d: usize, n: usize) -> Result<Self, LatticeError> {
        if d == 0 {
            return Err(LatticeError::InvalidGeometry("dimension must be positive".into()));
        }
        if n == 0 {
            return Err(LatticeError::InvalidGeometry("sites per axis must be positive".into()));
        }
        let volume = n
            .checked_pow(d as u32)
            .ok_or_else(|| LatticeError::InvalidGeometry(format!("{n}^{d} sites overflows usize")))?;
        if volume > (1usize << 40) {
            return Err(LatticeError::InvalidGeometry(format!("{n}^{d} sites is not a desk-scale box")));
        }
        Ok(Self { d, n })
    }

    /// Box matching the half-width convention `Λ_ℓ = {|x|_∞ ≤ ℓ}`, i.e. `2ℓ+1` sites per axis.
    pub fn from_half_width(d: usize, half_width: usize) -> Result<Self, LatticeError> {
        Self::new(d, 2 * half_width + 1)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.n
    }

    /// Number of sites, `n^d`.
    #[inline]
    pub fn volume(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Half-width ℓ if the side is odd (`n = 2ℓ+1`).
    pub fn half_width(&self) -> Option<usize> {
        (self.n % 2 == 1).then_some(self.n / 2)
    }

    pub fn index(&self, coords: &[usize]) -> Option<usize> {
        if coords.len() != self.d {
            return None;
        }
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &c in coords {
            if c >= self.n {
                return None;
            }
            idx += c * stride;
            stride *= self.n;
        }
        Some(idx)
    }

    /// Index of a signed lattice point, `None` when it lies outside the box.
    pub fn index_signed(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.d {
            return None;
        }
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &c in coords {
            if c < 0 || c as usize >= self.n {
                return None;
            }
            idx += c as usize * stride;
            stride *= self.n;
        }
        Some(idx)
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        debug_assert!(index < self.volume());
        let mut out = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            out.push(index % self.n);
            index /= self.n;
        }
        out
    }

    /// The site playing the role of the origin: the centre for odd `n`,
    /// the lower-middle site otherwise.
    pub fn center(&self) -> usize {
        let c = (self.n - 1) / 2;
        self.index(&vec![c; self.d]).expect("centre lies in the box")
    }

    /// Calls `f(neighbour_index)` for every in-box nearest neighbour of `index`.
    #[inline]
    pub fn for_each_neighbor(&self, index: usize, mut f: impl FnMut(usize)) {
        let mut stride = 1usize;
        let mut rest = index;
        for _ in 0..self.d {
            let c = rest % self.n;
            rest /= self.n;
            if c > 0 {
                f(index - stride);
            }
            if c + 1 < self.n {
                f(index + stride);
            }
            stride *= self.n;
        }
    }

    /// Number of nearest neighbours inside the box.
    pub fn interior_degree(&self, index: usize) -> usize {
        let mut k = 0;
        self.for_each_neighbor(index, |_| k += 1);
        k
    }

    /// Number of nearest neighbours outside the box (the Dirichlet deficit).
    #[inline]
    pub fn boundary_deficit(&self, index: usize) -> usize {
        2 * self.d - self.interior_degree(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = BoxGeometry::new(3, 4).unwrap();
        assert_eq!(g.volume(), 64);
        for i in 0..g.volume() {
            assert_eq!(g.index(&g.coords(i)), Some(i));
        }
    }

    #[test]
    fn degrees_between_d_and_2d() {
        for (d, n) in [(1, 5), (2, 4), (3, 3)] {
            let g = BoxGeometry::new(d, n).unwrap();
            for i in 0..g.volume() {
                let k = g.interior_degree(i);
                assert!(k >= d && k <= 2 * d, "site {i} has degree {k}");
                assert_eq!(k + g.boundary_deficit(i), 2 * d);
            }
        }
    }

    #[test]
    fn single_site_has_only_exterior_neighbours() {
        let g = BoxGeometry::new(2, 1).unwrap();
        assert_eq!(g.interior_degree(0), 0);
        assert_eq!(g.boundary_deficit(0), 4);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(BoxGeometry::new(0, 3).is_err());
        assert!(BoxGeometry::new(2, 0).is_err());
    }

    #[test]
    fn center_and_signed_index() {
        let g = BoxGeometry::from_half_width(2, 2).unwrap();
        assert_eq!(g.side(), 5);
        assert_eq!(g.coords(g.center()), vec![2, 2]);
        assert_eq!(g.index_signed(&[-1, 0]), None);
        assert_eq!(g.index_signed(&[4, 4]), Some(24));
    }
}
