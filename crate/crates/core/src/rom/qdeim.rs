use faer::{Mat, MatRef};

use super::linalg::pseudoinverse;
use crate::error::{Result, SfvError};
use crate::grid::QuadratureSet;
use crate::weno::StochasticReconstructor;

/// Selected quadrature nodes and the stochastic cells needed to evaluate them.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperReduction {
    /// Global node indices in pivot order.
    pub indices: Vec<usize>,
    /// Cells owning a selected node, ascending.
    pub owners: Vec<usize>,
    /// Owners plus their WENO stencils, ascending.
    pub closure: Vec<usize>,
    /// Condition number of `V[I,:]`.
    pub condition_number: f64,
}

/// How rows beyond the first `N` pivots are chosen when `N_H > N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Oversampling {
    /// Restart the pivoted QR on the rows not yet chosen.
    Restart,
    /// Add one row at a time, maximizing a lower bound on the smallest
    /// singular value of `V[I,:]`.
    #[default]
    Greedy,
}

/// Householder QR with column pivoting of `Vᵀ`, returning the first `n_h` pivots.
///
/// The QR yields at most `N` pivots; further rows follow [`Oversampling::default`].
pub fn qdeim_indices(v: MatRef<'_, f64>, n_h: usize) -> Result<Vec<usize>> {
    qdeim_indices_with(v, n_h, Oversampling::default())
}

pub fn qdeim_indices_with(v: MatRef<'_, f64>, n_h: usize, mode: Oversampling) -> Result<Vec<usize>> {
    let (rows, n) = (v.nrows(), v.ncols());
    if n_h < n || n_h > rows {
        return Err(SfvError::config(format!("N_H = {n_h} must lie in [{n}, {rows}]")));
    }
    match mode {
        Oversampling::Restart => restart_rounds(v, n_h),
        Oversampling::Greedy => {
            let mut selected = restart_rounds(v, v.ncols().min(n_h))?;
            greedy_extend(v, &mut selected, n_h)?;
            Ok(selected)
        }
    }
}

fn greedy_extend(v: MatRef<'_, f64>, selected: &mut Vec<usize>, n_h: usize) -> Result<()> {
    let (rows, n) = (v.nrows(), v.ncols());
    let mut taken = vec![false; rows];
    for &r in selected.iter() {
        taken[r] = true;
    }
    let mut gram = Mat::<f64>::zeros(n, n);
    for &r in selected.iter() {
        add_outer(&mut gram, v, r);
    }
    while selected.len() < n_h {
        let evd = gram
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| SfvError::Numerical(format!("eigendecomposition failed: {e:?}")))?;
        let lam = evd.S().column_vector();
        let psi = evd.U();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| lam[b].total_cmp(&lam[a]));
        let last = order[n - 1];
        let g = if n > 1 { lam[order[n - 2]] - lam[last] } else { 0.0 };
        let mut best: Option<(usize, f64)> = None;
        for r in (0..rows).filter(|&r| !taken[r]) {
            let (mut norm2, mut rn) = (0.0, 0.0);
            for c in 0..n {
                let mut proj = 0.0;
                for d in 0..n {
                    proj += psi[(d, c)] * v[(r, d)];
                }
                norm2 += proj * proj;
                if c == last {
                    rn = proj;
                }
            }
            let score = if n > 1 {
                let a = g + norm2;
                a - (a * a - 4.0 * g * rn * rn).max(0.0).sqrt()
            } else {
                norm2
            };
            if best.is_none_or(|(_, b)| score > b * (1.0 + 1e-14)) {
                best = Some((r, score));
            }
        }
        let Some((r, _)) = best else { break };
        taken[r] = true;
        selected.push(r);
        add_outer(&mut gram, v, r);
    }
    Ok(())
}

fn add_outer(gram: &mut Mat<f64>, v: MatRef<'_, f64>, r: usize) {
    let n = v.ncols();
    for a in 0..n {
        for b in 0..n {
            gram[(a, b)] += v[(r, a)] * v[(r, b)];
        }
    }
}

fn restart_rounds(v: MatRef<'_, f64>, n_h: usize) -> Result<Vec<usize>> {
    let (rows, n) = (v.nrows(), v.ncols());
    let mut taken = vec![false; rows];
    let mut selected = Vec::with_capacity(n_h);
    while selected.len() < n_h {
        let remaining: Vec<usize> = (0..rows).filter(|&r| !taken[r]).collect();
        let mut cols: Vec<Vec<f64>> = remaining.iter().map(|&r| (0..n).map(|c| v[(r, c)]).collect()).collect();
        let mut active: Vec<usize> = (0..remaining.len()).collect();
        let scale = cols.iter().map(|c| norm(c)).fold(0.0, f64::max);
        let steps = n.min(remaining.len()).min(n_h - selected.len());
        let mut picked = 0;
        for k in 0..steps {
            let mut best: Option<(usize, f64)> = None;
            for (pos, &a) in active.iter().enumerate() {
                let nrm = norm(&cols[a][k..]);
                if best.is_none_or(|(_, b)| nrm > b * (1.0 + 1e-14)) {
                    best = Some((pos, nrm));
                }
            }
            let Some((pos, nrm)) = best else { break };
            if nrm <= 1e-13 * scale || nrm == 0.0 {
                break;
            }
            let a = active.remove(pos);
            let mut h = cols[a][k..].to_vec();
            let alpha = if h[0] >= 0.0 { -nrm } else { nrm };
            h[0] -= alpha;
            let hh: f64 = h.iter().map(|x| x * x).sum();
            if hh > 0.0 {
                for &o in &active {
                    let x = &mut cols[o][k..];
                    let f = 2.0 * dot(&h, x) / hh;
                    for (xi, hi) in x.iter_mut().zip(&h) {
                        *xi -= f * hi;
                    }
                }
            }
            taken[remaining[a]] = true;
            selected.push(remaining[a]);
            picked += 1;
        }
        if picked == 0 {
            // Nothing left with a nonzero component: fill by index.
            for r in remaining.into_iter().take(n_h - selected.len()) {
                taken[r] = true;
                selected.push(r);
            }
        }
    }
    Ok(selected)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Q-DEIM node selection with the stochastic-cell closure of the selected nodes.
pub fn qdeim_select(
    v: MatRef<'_, f64>,
    n_h: usize,
    qs: &QuadratureSet,
    reconstructor: &StochasticReconstructor,
) -> Result<HyperReduction> {
    if v.nrows() != qs.len() {
        return Err(SfvError::config("basis rows do not match the quadrature"));
    }
    qdeim_select_with(v, n_h, qs, reconstructor, Oversampling::default())
}

pub fn qdeim_select_with(
    v: MatRef<'_, f64>,
    n_h: usize,
    qs: &QuadratureSet,
    reconstructor: &StochasticReconstructor,
    mode: Oversampling,
) -> Result<HyperReduction> {
    if v.nrows() != qs.len() {
        return Err(SfvError::config("basis rows do not match the quadrature"));
    }
    let indices = qdeim_indices_with(v, n_h, mode)?;
    let mut owners: Vec<usize> = indices.iter().map(|&l| qs.owner_cell(l)).collect();
    owners.sort_unstable();
    owners.dedup();
    let mut closure: Vec<usize> = owners.iter().flat_map(|&j| reconstructor.stencil(j)).collect();
    closure.sort_unstable();
    closure.dedup();
    let vi = select_rows(v, &indices);
    let condition_number = pseudoinverse(vi.as_ref())?.condition_number();
    Ok(HyperReduction { indices, owners, closure, condition_number })
}

pub(crate) fn select_rows(v: MatRef<'_, f64>, rows: &[usize]) -> Mat<f64> {
    Mat::from_fn(rows.len(), v.ncols(), |i, c| v[(rows[i], c)])
}
