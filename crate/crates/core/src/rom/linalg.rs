use faer::linalg::matmul::matmul as faer_matmul;
use faer::{Accum, Mat, MatRef, Par};

use crate::error::{Result, SfvError};

/// `a·b`, sequential so the summation order is fixed.
pub fn matmul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut c = Mat::zeros(a.nrows(), b.ncols());
    faer_matmul(c.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
    c
}

/// Moore–Penrose pseudoinverse with its numerical rank and singular values.
#[derive(Debug, Clone)]
pub struct Pinv {
    pub matrix: Mat<f64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

impl Pinv {
    /// `σ_max / σ_min` over the full spectrum; infinite when rank-deficient.
    pub fn condition_number(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }
}

/// Pseudoinverse from a thin SVD, discarding `σ ≤ max(m, n)·σ₁·1e-14`.
pub fn pseudoinverse(a: MatRef<'_, f64>) -> Result<Pinv> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Ok(Pinv { matrix: Mat::zeros(n, m), rank: 0, singular_values: Vec::new() });
    }
    let svd = a.thin_svd().map_err(|e| SfvError::Numerical(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let k = m.min(n);
    let sv: Vec<f64> = (0..k).map(|i| s[i]).collect();
    let tol = m.max(n) as f64 * sv[0] * 1e-14;
    let rank = sv.iter().take_while(|&&x| x > tol).count();
    let u = svd.U();
    let v = svd.V();
    let vs = Mat::from_fn(n, rank, |r, c| v[(r, c)] / sv[c]);
    let matrix = matmul(vs.as_ref(), u.subcols(0, rank).transpose());
    Ok(Pinv { matrix, rank, singular_values: sv })
}
