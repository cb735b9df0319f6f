//! Moments of the stochastic solution and error metrics.

use std::path::Path;

use crate::error::{Result, SfvError};
use crate::grid::TensorGrid;
use crate::io::write_csv;
use crate::solver::StateField;

/// Per-component, per-cell mean and standard deviation, stored `[p][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStats {
    pub nx: usize,
    pub n: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FieldStats {
    pub fn mean_of(&self, p: usize) -> &[f64] {
        &self.mean[p * self.nx..(p + 1) * self.nx]
    }

    pub fn std_of(&self, p: usize) -> &[f64] {
        &self.std[p * self.nx..(p + 1) * self.nx]
    }
}

fn check_measures(u: &StateField, measures: &[f64]) -> Result<()> {
    if measures.len() != u.ny() {
        return Err(SfvError::config(format!(
            "{} stochastic measures for {} cells",
            measures.len(),
            u.ny()
        )));
    }
    Ok(())
}

/// `E[u_p](x_i) ≈ Σ_j U_{i,j,p} |K_y^j|`, stored `[p][i]`.
pub fn mean(u: &StateField, measures: &[f64]) -> Result<Vec<f64>> {
    check_measures(u, measures)?;
    let (nx, ny, n) = (u.nx(), u.ny(), u.n());
    let mut out = vec![0.0; n * nx];
    for p in 0..n {
        for j in 0..ny {
            let line = u.line(p, j);
            for i in 0..nx {
                out[p * nx + i] += line[i] * measures[j];
            }
        }
    }
    Ok(out)
}

/// `√max(0, Σ_j U² |K_y^j| − mean²)`; a variance below `−1e-12` is an error.
pub fn std(u: &StateField, measures: &[f64]) -> Result<Vec<f64>> {
    let m = mean(u, measures)?;
    let (nx, ny, n) = (u.nx(), u.ny(), u.n());
    let mut second = vec![0.0; n * nx];
    for p in 0..n {
        for j in 0..ny {
            let line = u.line(p, j);
            for i in 0..nx {
                second[p * nx + i] += line[i] * line[i] * measures[j];
            }
        }
    }
    second
        .iter()
        .zip(&m)
        .enumerate()
        .map(|(k, (s, mu))| {
            let var = s - mu * mu;
            if var < -1e-12 {
                Err(SfvError::Numerical(format!("negative variance {var:e} at cell {}", k % nx)))
            } else {
                Ok(var.max(0.0).sqrt())
            }
        })
        .collect()
}

pub fn field_stats(u: &StateField, measures: &[f64]) -> Result<FieldStats> {
    Ok(FieldStats { nx: u.nx(), n: u.n(), mean: mean(u, measures)?, std: std(u, measures)? })
}

/// Relative L1 errors of `a` against reference `b`, per component and aggregated.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub per_component: Vec<f64>,
    pub aggregate: f64,
}

/// `Σ_i |K_x^i||a_i − b_i| / Σ_i |K_x^i||b_i|` for fields stored `[p][i]`.
pub fn relative_l1(a: &[f64], b: &[f64], widths: &[f64]) -> Result<ErrorReport> {
    let nx = widths.len();
    if nx == 0 || a.len() != b.len() || !a.len().is_multiple_of(nx) {
        return Err(SfvError::config("relative_l1: mismatched field sizes"));
    }
    let n = a.len() / nx;
    let mut per_component = Vec::with_capacity(n);
    let (mut num_tot, mut den_tot) = (0.0, 0.0);
    for p in 0..n {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..nx {
            num += widths[i] * (a[p * nx + i] - b[p * nx + i]).abs();
            den += widths[i] * b[p * nx + i].abs();
        }
        if den == 0.0 {
            return Err(SfvError::Numerical(format!("reference component {p} has zero L1 norm")));
        }
        per_component.push(num / den);
        num_tot += num;
        den_tot += den;
    }
    Ok(ErrorReport { per_component, aggregate: num_tot / den_tot })
}

/// `log2(e_coarse / e_fine)` per doubling; `None` unless both errors are positive.
pub fn convergence_order(err_coarse: f64, err_fine: f64) -> Option<f64> {
    error_ratio(err_coarse, err_fine).map(f64::log2)
}

/// `e_coarse / e_fine`; `None` unless both errors are positive.
pub fn error_ratio(err_coarse: f64, err_fine: f64) -> Option<f64> {
    (err_coarse > 0.0 && err_fine > 0.0 && err_coarse.is_finite() && err_fine.is_finite())
        .then(|| err_coarse / err_fine)
}

/// `Σ_i |v_{i+1} − v_i|`.
pub fn total_variation(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Cells of a parameter slice: every stochastic cell whose index along `dim`
/// is the one with center nearest to `y`.
pub fn slice_cells(grid: &TensorGrid, dim: usize, y: f64) -> Result<Vec<usize>> {
    if dim >= grid.q() {
        return Err(SfvError::config(format!("slice dimension {dim} but q = {}", grid.q())));
    }
    let c = grid.nearest_cell_along(dim, y);
    Ok((0..grid.ny()).filter(|&j| grid.multi_index(j)[dim] == c).collect())
}

/// Writes `x,mean_<c>...,std_<c>...` with one row per physical cell.
pub fn write_stats_csv(path: impl AsRef<Path>, grid: &TensorGrid, names: &[&str], s: &FieldStats) -> Result<()> {
    if names.len() != s.n || grid.nx() != s.nx {
        return Err(SfvError::config("statistics do not match the grid"));
    }
    let mut header = vec!["x".to_string()];
    header.extend(names.iter().map(|c| format!("mean_{c}")));
    header.extend(names.iter().map(|c| format!("std_{c}")));
    let mut columns = vec![(0..s.nx).map(|i| grid.cell_center(i)).collect::<Vec<_>>()];
    columns.extend((0..s.n).map(|p| s.mean_of(p).to_vec()));
    columns.extend((0..s.n).map(|p| s.std_of(p).to_vec()));
    write_csv(path, &header, &columns)
}

/// Writes the cell averages of a parameter slice in long form:
/// `x,y1..yq,<c>...`, where `y` is the stochastic cell center.
pub fn write_slice_csv(
    path: impl AsRef<Path>,
    grid: &TensorGrid,
    names: &[&str],
    u: &StateField,
    cells: &[usize],
) -> Result<()> {
    let q = grid.q();
    let mut header = vec!["x".to_string()];
    header.extend((1..=q).map(|d| format!("y{d}")));
    header.extend(names.iter().map(|c| c.to_string()));
    let mut columns = vec![Vec::new(); 1 + q + u.n()];
    for &j in cells {
        let yc = grid.cell_center_y(j);
        for i in 0..u.nx() {
            columns[0].push(grid.cell_center(i));
            for d in 0..q {
                columns[1 + d].push(yc[d]);
            }
            for p in 0..u.n() {
                columns[1 + q + p].push(u.get(i, j, p));
            }
        }
    }
    write_csv(path, &header, &columns)
}
