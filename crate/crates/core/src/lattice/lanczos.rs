//! Lanczos tridiagonalization with full reorthogonalization.
//!
//! Shared by the extremal eigensolver and the Krylov matrix-exponential
//! integrator in [`crate::pam`].

use super::SymmetricOperator;

/// Krylov basis `V_m` with `V_mᵀ A V_m = T_m`, where `T_m` has diagonal
/// `alpha` and off-diagonal `beta[..m-1]`. `beta[m-1]` is the coupling to
/// the next (unbuilt) vector and drives residual estimates.
#[derive(Debug, Clone)]
pub(crate) struct LanczosBasis {
    pub vectors: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// The Krylov space became invariant (`beta` vanished).
    pub invariant: bool,
}

impl LanczosBasis {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    /// Dense `T_m`.
    pub fn tridiagonal_matrix(&self) -> nalgebra::DMatrix<f64> {
        let m = self.len();
        let mut t = nalgebra::DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        t
    }

    /// `Σ_j coeffs[j] · v_j`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.vectors[0].len();
        let mut out = vec![0.0; n];
        for (c, v) in coeffs.iter().zip(&self.vectors) {
            axpy(*c, v, &mut out);
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Removes the components of `w` along every vector of `against`, twice.
pub(crate) fn orthogonalize(w: &mut [f64], against: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in against {
            let c = dot(w, q);
            axpy(-c, q, w);
        }
    }
}

/// Runs up to `max_steps` Lanczos steps from the unit vector `start`.
///
/// `locked` vectors are projected out at every step (explicit deflation).
/// After each step `stop` sees the current basis and may end the run early.
pub(crate) fn lanczos(
    op: &dyn SymmetricOperator,
    start: Vec<f64>,
    max_steps: usize,
    locked: &[Vec<f64>],
    mut stop: impl FnMut(&LanczosBasis) -> bool,
) -> LanczosBasis {
    let n = op.dim();
    let scale = op.trace().abs() / n.max(1) as f64 + 1.0;
    let mut basis = LanczosBasis {
        vectors: vec![start],
        alpha: Vec::new(),
        beta: Vec::new(),
        invariant: false,
    };
    let mut w = vec![0.0; n];
    for j in 0..max_steps {
        op.apply_into(&basis.vectors[j], &mut w);
        let a = dot(&w, &basis.vectors[j]);
        axpy(-a, &basis.vectors[j], &mut w);
        if j > 0 {
            let b = basis.beta[j - 1];
            axpy(-b, &basis.vectors[j - 1], &mut w);
        }
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis.vectors);
        basis.alpha.push(a);
        let b = norm(&w);
        basis.beta.push(b);
        if b <= 1e-13 * scale || basis.vectors.len() + locked.len() >= n {
            basis.invariant = true;
            basis.beta[j] = 0.0;
            stop(&basis);
            break;
        }
        if stop(&basis) || j + 1 == max_steps {
            break;
        }
        let next: Vec<f64> = w.iter().map(|x| x / b).collect();
        basis.vectors.push(next);
    }
    basis.vectors.truncate(basis.alpha.len());
    basis
}
