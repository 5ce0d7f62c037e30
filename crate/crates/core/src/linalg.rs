//! Small dense linear-algebra helpers shared by the vehicle and predictor layers.

use nalgebra::{DMatrix, SMatrix};

use crate::error::{Error, Result};

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The argument is scaled by `2^-s` until its 1-norm is below 0.5, the series
/// is summed until the next term no longer changes the sum, and the result is
/// squared `s` times.
pub fn expm<const D: usize>(m: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    let norm = one_norm(m);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = m / 2f64.powi(squarings as i32);

    let mut sum = SMatrix::<f64, D, D>::identity();
    let mut term = SMatrix::<f64, D, D>::identity();
    for k in 1..=30 {
        term = term * scaled / k as f64;
        let before = sum;
        sum += term;
        if sum == before {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

fn one_norm<const D: usize>(m: &SMatrix<f64, D, D>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Block-diagonal matrix with `count` copies of `block`.
pub fn block_diag(block: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let (r, c) = block.shape();
    let mut out = DMatrix::zeros(r * count, c * count);
    for i in 0..count {
        out.view_mut((i * r, i * c), (r, c)).copy_from(block);
    }
    out
}

/// Solves `lhs · X = rhs` for a symmetric positive-definite `lhs`.
///
/// Uses a Cholesky factorization; if that reports loss of positive
/// definiteness, falls back to the SVD pseudo-inverse of `lhs`.
pub fn solve_spd(lhs: DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = lhs.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    let svd = lhs.svd(true, true);
    let pinv = svd
        .pseudo_inverse(f64::EPSILON * 64.0)
        .map_err(|e| Error::Synthesis(e.to_string()))?;
    Ok(pinv * rhs)
}

/// True when `m` is symmetric (to a relative 1e-12) with strictly positive eigenvalues.
pub fn is_symmetric_positive_definite(m: &DMatrix<f64>) -> bool {
    if !m.is_square() || m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return false;
    }
    m.clone().symmetric_eigenvalues().iter().all(|&l| l > 0.0)
}
