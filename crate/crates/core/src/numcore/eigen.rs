//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Conventions used throughout the crate:
//! - eigenvalues are sorted in descending order,
//! - eigenvectors are the columns of an orthonormal matrix,
//! - each eigenvector is sign-canonicalized: the entry of largest absolute
//!   value is positive, ties broken by lowest index.
//!
//! Eigenvector sign is not determined by the decomposition itself, and the
//! PCA-perturbation experiments are sensitive to the convention, so the canon
//! is applied in exactly one place (here) and nowhere else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::matrix::DenseMatrix;

/// Relative symmetry tolerance: inputs with asymmetry within this factor of
/// the largest entry are symmetrized as `(A + A^T)/2` before decomposition.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Sweep budget multiplier. Jacobi converges in well under 20 sweeps for any
/// symmetric matrix; the budget only guards against NaN-poisoned input.
const MAX_SWEEPS_PER_DIM: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    eigenvectors: DenseMatrix,
}

impl EigenSystem {
    #[cfg(test)]
    pub(crate) fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DenseMatrix) -> Self {
        EigenSystem {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as matrix columns, ordered to match
    /// `eigenvalues`.
    pub fn eigenvectors(&self) -> &DenseMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }

    /// Smallest gap between consecutive (descending) eigenvalues.
    pub fn min_eigengap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| (w[0] - w[1]).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Reconstructs `V diag(lambda) V^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let m = self.dim();
        let mut out = DenseMatrix::zeros(m, m);
        for (idx, &lam) in self.eigenvalues.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            let v = self.eigenvector(idx);
            for i in 0..m {
                let vi = lam * v[i];
                let row = out.row_mut(i);
                for (o, &vj) in row.iter_mut().zip(v.iter()) {
                    *o += vi * vj;
                }
            }
        }
        out
    }

    /// Returns a copy whose eigenvector signs are flipped, where necessary,
    /// to have a nonnegative inner product with the reference basis. This is
    /// the ablation alternative to the default canon; it is never applied
    /// implicitly.
    pub fn aligned_to(&self, reference: &EigenSystem) -> Result<EigenSystem> {
        if reference.dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: reference.dim(),
                context: "eigenbasis alignment",
            });
        }
        let mut vectors = self.eigenvectors.clone();
        for i in 0..self.dim() {
            let v = self.eigenvector(i);
            let r = reference.eigenvector(i);
            let ip: f64 = v.iter().zip(r.iter()).map(|(a, b)| a * b).sum();
            if ip < 0.0 {
                let flipped: Vec<f64> = v.iter().map(|x| -x).collect();
                vectors.set_column(i, &flipped);
            }
        }
        Ok(EigenSystem {
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: vectors,
        })
    }
}

/// Flips the vector's sign so the entry of largest absolute value is
/// positive; ties break to the lowest index. Errors on the zero vector.
pub fn canonical_sign(vector: &[f64]) -> Result<Vec<f64>> {
    let mut out = vector.to_vec();
    canonical_sign_in_place(&mut out)?;
    Ok(out)
}

pub(crate) fn canonical_sign_in_place(v: &mut [f64]) -> Result<()> {
    let mut best = 0.0_f64;
    let mut best_idx = None;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            best_idx = Some(i);
        }
    }
    match best_idx {
        None => Err(Error::ZeroVector),
        Some(i) => {
            if v[i] < 0.0 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
            Ok(())
        }
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// The input must be symmetric within [`SYMMETRY_TOL`] relative to its
/// largest entry; it is then symmetrized exactly before iteration, so the
/// result is deterministic for identical input bits.
pub fn sym_eigendecomposition(matrix: &DenseMatrix) -> Result<EigenSystem> {
    if !matrix.is_square() {
        return Err(Error::DimMismatch {
            expected: matrix.rows(),
            found: matrix.cols(),
            context: "eigendecomposition requires square input",
        });
    }
    if !matrix.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    let scale = matrix.max_abs();
    let dev = matrix.asymmetry();
    if dev > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric {
            deviation: dev,
            tol: SYMMETRY_TOL * scale,
        });
    }

    let m = matrix.rows();
    let mut a = matrix.symmetrized();
    let mut v = DenseMatrix::identity(m);

    if m == 1 {
        return Ok(EigenSystem {
            eigenvalues: vec![a.get(0, 0)],
            eigenvectors: v,
        });
    }

    let fro = a.frobenius_norm();
    let target = fro * 1e-15;
    let budget = MAX_SWEEPS_PER_DIM * m;
    let mut converged = fro == 0.0;
    for _ in 0..budget {
        if off_diagonal_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..m - 1 {
            for q in (p + 1)..m {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > target {
        return Err(Error::NoConvergence { sweeps: budget });
    }

    // Sort descending; equal eigenvalues keep the sweep's column order.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .partial_cmp(&a.get(i, i))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut eigenvectors = DenseMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        canonical_sign_in_place(&mut col)?;
        eigenvectors.set_column(dst, &col);
    }

    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let m = a.rows();
    let mut sum = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let x = a.get(i, j);
            sum += 2.0 * x * x;
        }
    }
    sum.sqrt()
}

fn jacobi_rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq.abs() < f64::MIN_POSITIVE {
        return;
    }
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta == 0.0 {
        1.0
    } else {
        let sign = if theta > 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let m = a.rows();
    a.set(p, p, app - t * apq);
    a.set(q, q, aqq + t * apq);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for r in 0..m {
        if r == p || r == q {
            continue;
        }
        let arp = a.get(r, p);
        let arq = a.get(r, q);
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        a.set(r, p, new_rp);
        a.set(p, r, new_rp);
        a.set(r, q, new_rq);
        a.set(q, r, new_rq);
    }
    for r in 0..m {
        let vrp = v.get(r, p);
        let vrq = v.get(r, q);
        v.set(r, p, c * vrp - s * vrq);
        v.set(r, q, s * vrp + c * vrq);
    }
}

/// Spectral norm of a symmetric matrix: `max_i |lambda_i|`.
pub fn operator_norm_sym(matrix: &DenseMatrix) -> Result<f64> {
    let eigen = sym_eigendecomposition(matrix)?;
    Ok(eigen
        .eigenvalues()
        .iter()
        .fold(0.0_f64, |m, l| m.max(l.abs())))
}
