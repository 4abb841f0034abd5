use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lanczos::{lanczos, norm, orthogonalize};
use super::{BoxGeometry, HamiltonianOperator, LatticeError, SymmetricOperator};
use crate::rng::stream;

/// Default dimension cap for dense diagonalization.
pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    /// `‖Hv − λv‖₂` per returned pair; empty when no vectors were computed.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Seed for the deterministic Lanczos start vectors.
    pub seed: u64,
    /// Lanczos steps allowed per locked eigenpair; `None` means the operator dimension.
    pub max_steps: Option<usize>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { seed: 0x5eed_1a7c, max_steps: None }
    }
}

/// `4d sin²(π / (2(n+1)))`, the exact bottom of the Dirichlet Laplacian on `n^d` sites.
pub fn laplacian_ground_energy(d: usize, n: usize) -> f64 {
    assert!(d >= 1 && n >= 1, "need d ≥ 1 and n ≥ 1");
    if n == 1 {
        // sin²(π/4) rounds below 1/2
        return 2.0 * d as f64;
    }
    let s = (std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin();
    4.0 * d as f64 * s * s
}

/// Product-of-sines ground state, unit 2-norm and pointwise positive.
pub fn laplacian_ground_state(d: usize, n: usize) -> Vec<f64> {
    let geometry = BoxGeometry::new(d, n).expect("valid box");
    let amp = (2.0 / (n + 1) as f64).sqrt();
    let factor: Vec<f64> = (1..=n)
        .map(|x| amp * (x as f64 * std::f64::consts::PI / (n + 1) as f64).sin())
        .collect();
    (0..geometry.volume())
        .map(|i| geometry.coords(i).iter().map(|&c| factor[c]).product())
        .collect()
}

/// Separable Dirichlet Laplacian eigenvalues `Σ_j 4 sin²(π i_j / (2(n+1)))`, ascending.
pub fn laplacian_spectrum_closed_form(d: usize, n: usize) -> Vec<f64> {
    let one_d: Vec<f64> = (1..=n)
        .map(|i| 4.0 * (std::f64::consts::PI * i as f64 / (2.0 * (n + 1) as f64)).sin().powi(2))
        .collect();
    let mut out = vec![0.0];
    for _ in 0..d {
        out = out.iter().flat_map(|s| one_d.iter().map(move |e| s + e)).collect();
    }
    out.sort_by(f64::total_cmp);
    out
}

/// The `k` smallest eigenpairs by Lanczos with full reorthogonalization.
///
/// Eigenpairs are locked one at a time and deflated from later runs, which
/// also resolves degenerate eigenvalues.
pub fn smallest_eigenvalues(
    op: &dyn SymmetricOperator,
    k: usize,
    tol: f64,
) -> Result<SpectralResult, LatticeError> {
    smallest_eigenvalues_with(op, k, tol, &EigenOptions::default())
}

pub fn smallest_eigenvalues_with(
    op: &dyn SymmetricOperator,
    k: usize,
    tol: f64,
    options: &EigenOptions,
) -> Result<SpectralResult, LatticeError> {
    let n = op.dim();
    if k > n {
        return Err(LatticeError::InvalidArgument(format!("requested {k} eigenvalues of a {n}-dimensional operator")));
    }
    if !(tol > 0.0) {
        return Err(LatticeError::InvalidArgument("tolerance must be positive".into()));
    }
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut scratch = vec![0.0; n];

    for run in 0..k {
        let mut rng = stream(options.seed, run as u64);
        let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut start, &locked);
        let s = norm(&start);
        if s == 0.0 {
            return Err(LatticeError::NoConvergence { what: "Lanczos", detail: "degenerate start vector".into() });
        }
        start.iter_mut().for_each(|x| *x /= s);

        let budget = options.max_steps.unwrap_or(n).min(n - locked.len()).max(1);
        let mut candidate: Option<(f64, Vec<f64>)> = None;
        let basis = lanczos(op, start, budget, &locked, |b| {
            let m = b.len();
            if !(b.invariant || m == budget || m % 5 == 0) {
                return false;
            }
            let eig = SymmetricEigen::new(b.tridiagonal_matrix());
            let (imin, theta) = eig
                .eigenvalues
                .iter()
                .copied()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            let coeffs: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
            let estimate = (b.beta[m - 1] * coeffs[m - 1]).abs();
            if estimate > tol && !b.invariant && m != budget {
                return false;
            }
            candidate = Some((theta, coeffs));
            true
        });
        let Some((theta, coeffs)) = candidate else {
            return Err(LatticeError::NoConvergence {
                what: "Lanczos",
                detail: format!("eigenpair {run} not converged within {budget} steps"),
            });
        };
        let mut v = basis.combine(&coeffs);
        orthogonalize(&mut v, &locked);
        let vn = norm(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        op.apply_into(&v, &mut scratch);
        let lambda = super::lanczos::dot(&v, &scratch);
        let res = scratch.iter().zip(&v).map(|(hv, vi)| (hv - lambda * vi).powi(2)).sum::<f64>().sqrt();
        if res > tol {
            return Err(LatticeError::NoConvergence {
                what: "Lanczos",
                detail: format!("eigenpair {run}: residual {res:.3e} > {tol:.3e} (Ritz value {theta})"),
            });
        }
        values.push(lambda);
        residuals.push(res);
        locked.push(v);
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(SpectralResult {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenvectors: Some(order.iter().map(|&i| locked[i].clone()).collect()),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
    })
}

/// All eigenvalues of a box Hamiltonian, ascending.
///
/// One-dimensional boxes use the tridiagonal QL solver, anything else a
/// dense symmetric eigensolve capped at `dense_cap` sites.
pub fn full_spectrum(h: &HamiltonianOperator) -> Result<SpectralResult, LatticeError> {
    full_spectrum_capped(h, DEFAULT_DENSE_CAP)
}

pub fn full_spectrum_capped(h: &HamiltonianOperator, dense_cap: usize) -> Result<SpectralResult, LatticeError> {
    let n = h.dim();
    let eigenvalues = if let Some((diag, off)) = h.tridiagonal() {
        super::tridiag::tridiagonal_eigenvalues(&diag, &off)?
    } else {
        if n > dense_cap {
            return Err(LatticeError::DenseCapExceeded { dim: n, cap: dense_cap });
        }
        dense_eigenvalues(h.to_dense())
    };
    let trace = h.trace();
    let sum: f64 = eigenvalues.iter().sum();
    if (sum - trace).abs() > 1e-8 * trace.abs().max(1.0) {
        return Err(LatticeError::NoConvergence {
            what: "full spectrum",
            detail: format!("eigenvalue sum {sum} differs from trace {trace}"),
        });
    }
    Ok(SpectralResult { eigenvalues, eigenvectors: None, residuals: Vec::new() })
}

pub(crate) fn dense_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::PotentialSample;

    #[test]
    fn ground_energy_values() {
        assert!((laplacian_ground_energy(1, 1) - 2.0).abs() < 1e-15);
        assert!((laplacian_ground_energy(2, 2) - 2.0).abs() < 1e-15);
        assert!((laplacian_ground_energy(1, 3) - (2.0 - 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn ground_state_values() {
        assert!((laplacian_ground_state(1, 1)[0] - 1.0).abs() < 1e-15);
        let phi = laplacian_ground_state(1, 3);
        let expected = [0.5, 0.5f64.sqrt(), 0.5];
        for (a, b) in phi.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn ground_state_is_eigenpair() {
        for (d, n) in [(1, 1), (1, 9), (2, 5), (3, 4)] {
            let h = HamiltonianOperator::laplacian(BoxGeometry::new(d, n).unwrap());
            let phi = laplacian_ground_state(d, n);
            let e1 = laplacian_ground_energy(d, n);
            assert!((norm(&phi) - 1.0).abs() < 1e-12);
            assert!(phi.iter().all(|&x| x > 0.0));
            let hphi = h.apply(&phi);
            let res = hphi.iter().zip(&phi).map(|(a, b)| (a - e1 * b).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-10, "d={d} n={n} residual {res}");
        }
    }

    #[test]
    fn lanczos_1d_ground_energy() {
        let h = HamiltonianOperator::laplacian(BoxGeometry::new(1, 50).unwrap());
        let r = smallest_eigenvalues(&h, 1, 1e-10).unwrap();
        assert!((r.eigenvalues[0] - laplacian_ground_energy(1, 50)).abs() < 1e-8);
        assert!(r.residuals[0] <= 1e-10);
    }

    #[test]
    fn lanczos_resolves_2d_degeneracy() {
        let h = HamiltonianOperator::laplacian(BoxGeometry::new(2, 8).unwrap());
        let r = smallest_eigenvalues(&h, 3, 1e-10).unwrap();
        let exact = laplacian_spectrum_closed_form(2, 8);
        for i in 0..3 {
            assert!((r.eigenvalues[i] - exact[i]).abs() < 1e-8, "{:?} vs {:?}", r.eigenvalues, &exact[..3]);
        }
        let s = |i: usize| (std::f64::consts::PI * i as f64 / 18.0).sin().powi(2);
        assert!((exact[0] - 4.0 * (s(1) + s(1))).abs() < 1e-14);
        assert!((exact[1] - 4.0 * (s(1) + s(2))).abs() < 1e-14);
        assert!((exact[2] - exact[1]).abs() < 1e-14);
    }

    #[test]
    fn constant_potential_shifts_everything() {
        let g = BoxGeometry::new(2, 5).unwrap();
        let free = smallest_eigenvalues(&HamiltonianOperator::laplacian(g), 4, 1e-10).unwrap();
        let shifted_h = HamiltonianOperator::new(g, Some(PotentialSample::constant(&g, 0.75).unwrap())).unwrap();
        let shifted = smallest_eigenvalues(&shifted_h, 4, 1e-10).unwrap();
        for (a, b) in free.eigenvalues.iter().zip(&shifted.eigenvalues) {
            assert!((b - a - 0.75).abs() < 1e-9);
        }
    }

    #[test]
    fn small_potential_example() {
        // dense 3×3 oracle [[7,-1,0],[-1,2,-1],[0,-1,2]]
        let m = DMatrix::from_row_slice(3, 3, &[7.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let oracle = dense_eigenvalues(m)[0];
        assert!((oracle - 0.914_468).abs() < 1e-6);
        let g = BoxGeometry::new(1, 3).unwrap();
        let h = HamiltonianOperator::new(g, Some(PotentialSample::new(vec![5.0, 0.0, 0.0], 0, "t").unwrap())).unwrap();
        let r = smallest_eigenvalues(&h, 1, 1e-12).unwrap();
        assert!((r.eigenvalues[0] - oracle).abs() < 1e-12);
    }

    #[test]
    fn full_spectrum_small_paths() {
        let h3 = HamiltonianOperator::laplacian(BoxGeometry::new(1, 3).unwrap());
        let ev = full_spectrum(&h3).unwrap().eigenvalues;
        let r2 = 2f64.sqrt();
        for (a, b) in ev.iter().zip([2.0 - r2, 2.0, 2.0 + r2]) {
            assert!((a - b).abs() < 1e-14);
        }
        let h2 = HamiltonianOperator::laplacian(BoxGeometry::new(1, 2).unwrap());
        let ev = full_spectrum(&h2).unwrap().eigenvalues;
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn full_spectrum_cap() {
        let h = HamiltonianOperator::laplacian(BoxGeometry::new(2, 10).unwrap());
        assert!(matches!(full_spectrum_capped(&h, 50), Err(LatticeError::DenseCapExceeded { dim: 100, cap: 50 })));
    }

    #[test]
    fn k_larger_than_dim_rejected() {
        let h = HamiltonianOperator::laplacian(BoxGeometry::new(1, 3).unwrap());
        assert!(smallest_eigenvalues(&h, 4, 1e-8).is_err());
        let all = smallest_eigenvalues(&h, 3, 1e-10).unwrap();
        assert_eq!(all.eigenvalues.len(), 3);
    }
}
