use faer::{Mat, MatRef};

use super::linalg::{matmul, pseudoinverse};
use crate::error::{Result, SfvError};
use crate::grid::QuadratureSet;

/// Leading left singular vectors of a snapshot matrix (node values of the
/// stochastic basis functions) and the full singular spectrum.
#[derive(Debug, Clone)]
pub struct PodBasis {
    pub v: Mat<f64>,
    pub singular_values: Vec<f64>,
}

impl PodBasis {
    pub fn n_modes(&self) -> usize {
        self.v.ncols()
    }

    pub fn n_nodes(&self) -> usize {
        self.v.nrows()
    }

    /// `Σ_{k>N} σ_k²`.
    pub fn tail_energy(&self) -> f64 {
        self.singular_values.iter().skip(self.n_modes()).map(|s| s * s).sum()
    }
}

/// Thin SVD of the snapshots; the largest-magnitude entry of each kept column
/// is made positive (first index on ties).
pub fn compute_pod(snap: MatRef<'_, f64>, n: usize) -> Result<PodBasis> {
    let k = snap.nrows().min(snap.ncols());
    if n == 0 || n > k {
        return Err(SfvError::config(format!(
            "requested {n} modes from a {}x{} snapshot matrix",
            snap.nrows(),
            snap.ncols()
        )));
    }
    let svd = snap.thin_svd().map_err(|e| SfvError::Numerical(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let singular_values: Vec<f64> = (0..k).map(|i| s[i]).collect();
    let s1 = singular_values[0];
    let rank = singular_values.iter().take_while(|&&x| s1 > 0.0 && x / s1 >= 1e-14).count();
    if rank < n {
        return Err(SfvError::RankDeficient { requested: n, rank });
    }
    let u = svd.U();
    let mut v = Mat::zeros(snap.nrows(), n);
    for c in 0..n {
        let mut arg = 0;
        for r in 1..snap.nrows() {
            if u[(r, c)].abs() > u[(arg, c)].abs() {
                arg = r;
            }
        }
        let sign = if u[(arg, c)] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..snap.nrows() {
            v[(r, c)] = sign * u[(r, c)];
        }
    }
    Ok(PodBasis { v, singular_values })
}

/// `B = Q·V` with `Q_{j,l} = μ(y_l) w_l` when node `l` lies in cell `j`.
pub fn build_face_integrals(v: MatRef<'_, f64>, qs: &QuadratureSet) -> Result<Mat<f64>> {
    if v.nrows() != qs.len() {
        return Err(SfvError::config(format!(
            "basis has {} rows but the quadrature has {} nodes",
            v.nrows(),
            qs.len()
        )));
    }
    let ny = qs.len() / qs.nodes_per_cell();
    let mut b = Mat::zeros(ny, v.ncols());
    for k in 0..v.ncols() {
        for j in 0..ny {
            b[(j, k)] = qs.cell_nodes(j).map(|l| v[(l, k)] * qs.measure_weight(l)).sum();
        }
    }
    Ok(b)
}

/// Minimum-norm least-squares coefficients `V†F`.
pub fn least_squares_coefficients(v: MatRef<'_, f64>, f: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if v.nrows() != f.nrows() {
        return Err(SfvError::config("basis and data row counts differ"));
    }
    let p = pseudoinverse(v)?;
    if p.rank < v.ncols() {
        return Err(SfvError::RankDeficient { requested: v.ncols(), rank: p.rank });
    }
    Ok(matmul(p.matrix.as_ref(), f))
}
