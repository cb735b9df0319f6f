//! Third-order WENO reconstruction.
//!
//! Along `x` the two candidate linears are blended with the optimal weights of
//! each interface, giving left/right interface states per cell. Along each
//! stochastic dimension a linear polynomial is formed per cell, either through
//! the two WENO face values of the cell or around the cell value with a WENO
//! slope (see [`StochasticScheme`]). Sweeping the dimensions in order yields a
//! multilinear polynomial per cell.

use crate::error::{Result, SfvError};
use crate::grid::{QuadratureSet, TensorGrid};
use crate::solver::StateField;

/// How the per-dimension linear polynomial of a stochastic cell is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StochasticScheme {
    /// Cell value at the center, WENO slope with `stochastic_weights`.
    CellCentered,
    /// Linear interpolant of the two WENO face values (`interface_weights`).
    FaceInterpolation,
}

impl StochasticScheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cell-centered" => Ok(Self::CellCentered),
            "face-interpolation" => Ok(Self::FaceInterpolation),
            _ => Err(SfvError::config(format!("unknown stochastic scheme '{s}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CellCentered => "cell-centered",
            Self::FaceInterpolation => "face-interpolation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WenoParams {
    pub epsilon: f64,
    /// `(d_0, d_1)` at the right interface `x_{i+1/2}`; mirrored at `x_{i-1/2}`.
    pub interface_weights: [f64; 2],
    /// `(d_0, d_1)` for the stochastic polynomial.
    pub stochastic_weights: [f64; 2],
    pub stochastic_scheme: StochasticScheme,
}

impl Default for WenoParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            interface_weights: [2.0 / 3.0, 1.0 / 3.0],
            stochastic_weights: [0.5, 0.5],
            stochastic_scheme: StochasticScheme::FaceInterpolation,
        }
    }
}

impl WenoParams {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(SfvError::config(format!("WENO epsilon must be positive, got {}", self.epsilon)));
        }
        for d in [self.interface_weights, self.stochastic_weights] {
            if !(d[0] > 0.0 && d[1] > 0.0) || (d[0] + d[1] - 1.0).abs() > 1e-14 {
                return Err(SfvError::config(format!("invalid linear weights {d:?}")));
            }
        }
        Ok(())
    }
}

#[inline]
fn nonlinear_weights(d: [f64; 2], dp: f64, dm: f64, eps: f64) -> (f64, f64) {
    let b0 = dp * dp;
    let b1 = dm * dm;
    let a0 = d[0] / ((eps + b0) * (eps + b0));
    let a1 = d[1] / ((eps + b1) * (eps + b1));
    let s = a0 + a1;
    (a0 / s, a1 / s)
}

/// Interface values `(ũ at x_{i-1/2}, ũ at x_{i+1/2})` of the center cell.
#[inline]
pub fn weno3_pair(um: f64, uc: f64, up: f64, params: &WenoParams) -> (f64, f64) {
    let dp = up - uc;
    let dm = uc - um;
    let [r0, r1] = params.interface_weights;
    let (w0, w1) = nonlinear_weights([r1, r0], dp, dm, params.epsilon);
    let left = uc - 0.5 * (w0 * dp + w1 * dm);
    let (w0, w1) = nonlinear_weights([r0, r1], dp, dm, params.epsilon);
    let right = uc + 0.5 * (w0 * dp + w1 * dm);
    (left, right)
}

/// Slope per unit normalised coordinate `ξ ∈ [-1/2, 1/2]` of the stochastic reconstruction.
#[inline]
pub fn weno3_slope(um: f64, uc: f64, up: f64, params: &WenoParams) -> f64 {
    let dp = up - uc;
    let dm = uc - um;
    let (w0, w1) = nonlinear_weights(params.stochastic_weights, dp, dm, params.epsilon);
    w0 * dp + w1 * dm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Zero-gradient ghost cells.
    Outflow,
}

/// Reconstructs one line of `n ≥ 3` cell values. Writes `n + 1` left and right
/// interface states: `left[k]` comes from cell `k − 1`, `right[k]` from cell `k`.
pub fn reconstruct_line(values: &[f64], bc: Boundary, params: &WenoParams, left: &mut [f64], right: &mut [f64]) {
    let n = values.len();
    debug_assert!(n >= 3);
    let ghost = |c: isize| -> f64 {
        match bc {
            Boundary::Periodic => values[c.rem_euclid(n as isize) as usize],
            Boundary::Outflow => values[c.clamp(0, n as isize - 1) as usize],
        }
    };
    let at = |c: isize| -> f64 {
        if c >= 0 && (c as usize) < n {
            values[c as usize]
        } else {
            ghost(c)
        }
    };
    for c in -1..=(n as isize) {
        let (lv, rv) = weno3_pair(at(c - 1), at(c), at(c + 1), params);
        if c >= 0 {
            right[c as usize] = lv;
        }
        if c < n as isize {
            left[(c + 1) as usize] = rv;
        }
    }
}

/// Reconstructed states at every physical interface, for every stochastic cell
/// and component. Layout `[p][j][k]` with `k = 0..=N_x`.
#[derive(Debug, Clone)]
pub struct InterfaceStates {
    pub nx: usize,
    pub ny: usize,
    pub n: usize,
    /// `ũ_L`: state on the left side of each interface.
    pub left: Vec<f64>,
    /// `ũ_R`: state on the right side of each interface.
    pub right: Vec<f64>,
}

impl InterfaceStates {
    #[inline]
    pub fn index(&self, p: usize, j: usize, k: usize) -> usize {
        (p * self.ny + j) * (self.nx + 1) + k
    }
}

/// WENO along `x` for all stochastic cells and components.
pub fn reconstruct_physical(u: &StateField, bc: Boundary, params: &WenoParams) -> InterfaceStates {
    let (nx, ny, n) = (u.nx(), u.ny(), u.n());
    let mut out = InterfaceStates {
        nx,
        ny,
        n,
        left: vec![0.0; n * ny * (nx + 1)],
        right: vec![0.0; n * ny * (nx + 1)],
    };
    for p in 0..n {
        for j in 0..ny {
            let s = out.index(p, j, 0);
            reconstruct_line(u.line(p, j), bc, params, &mut out.left[s..s + nx + 1], &mut out.right[s..s + nx + 1]);
        }
    }
    out
}

/// As [`reconstruct_physical`], but only for the listed stochastic cells; the
/// remaining lines are left at zero.
pub fn reconstruct_physical_cells(u: &StateField, bc: Boundary, params: &WenoParams, cells: &[usize]) -> InterfaceStates {
    let (nx, ny, n) = (u.nx(), u.ny(), u.n());
    let mut out = InterfaceStates {
        nx,
        ny,
        n,
        left: vec![0.0; n * ny * (nx + 1)],
        right: vec![0.0; n * ny * (nx + 1)],
    };
    for p in 0..n {
        for &j in cells {
            let s = out.index(p, j, 0);
            reconstruct_line(u.line(p, j), bc, params, &mut out.left[s..s + nx + 1], &mut out.right[s..s + nx + 1]);
        }
    }
    out
}

/// Dimension-by-dimension stochastic WENO on a fixed tensor grid.
#[derive(Debug, Clone)]
pub struct StochasticReconstructor {
    cells: Vec<usize>,
    strides: Vec<usize>,
    active: Vec<bool>,
    params: WenoParams,
    nq: usize,
    /// `Π_{d ∈ S} ξ_d(m)` for local node `m` (rows) and coefficient mask `S` (columns).
    node_monomials: Vec<f64>,
}

/// Reusable buffers for [`StochasticReconstructor::coefficients`].
#[derive(Debug, Default, Clone)]
pub struct SweepScratch {
    a: Vec<f64>,
    b: Vec<f64>,
    coeffs: Vec<f64>,
}

impl StochasticReconstructor {
    pub fn new(grid: &TensorGrid, qs: &QuadratureSet, params: WenoParams) -> Self {
        let q = grid.q();
        let cells: Vec<usize> = grid.axes().iter().map(|a| a.cells).collect();
        let active: Vec<bool> = cells.iter().map(|&c| c >= 3).collect();
        for (d, &a) in active.iter().enumerate() {
            if !a && cells[d] > 1 {
                log::warn!(
                    "stochastic dimension {d} has {} cells; using piecewise-constant reconstruction",
                    cells[d]
                );
            }
        }
        let nq = qs.nodes_per_cell();
        let nc = 1usize << q;
        let mut node_monomials = vec![0.0; nq * nc];
        for m in 0..nq {
            let xi = qs.local_offset(m);
            for mask in 0..nc {
                node_monomials[m * nc + mask] = (0..q).filter(|d| mask >> d & 1 == 1).map(|d| xi[d]).product();
            }
        }
        Self {
            cells,
            strides: grid.strides().to_vec(),
            active,
            params,
            nq,
            node_monomials,
        }
    }

    pub fn q(&self) -> usize {
        self.cells.len()
    }

    pub fn n_coefficients(&self) -> usize {
        1 << self.q()
    }

    fn neighbour(&self, j: usize, d: usize, offset: isize) -> usize {
        if !self.active[d] || offset == 0 {
            return j;
        }
        let c = (j / self.strides[d]) % self.cells[d];
        let nc = (c as isize + offset).clamp(0, self.cells[d] as isize - 1) as usize;
        j - c * self.strides[d] + nc * self.strides[d]
    }

    /// Stochastic cells whose values enter the polynomial of cell `j`.
    pub fn stencil(&self, j: usize) -> Vec<usize> {
        let mut out = vec![j];
        for d in 0..self.q() {
            let mut next = Vec::with_capacity(out.len() * 3);
            for &c in &out {
                for off in [-1, 0, 1] {
                    next.push(self.neighbour(c, d, off));
                }
            }
            next.sort_unstable();
            next.dedup();
            out = next;
        }
        out
    }

    /// Multilinear coefficients of cell `j`, indexed by dimension bitmask, in `ξ ∈ [-1/2,1/2]^q`.
    pub fn coefficients<'s>(&self, values: &[f64], j: usize, scratch: &'s mut SweepScratch) -> &'s [f64] {
        let q = self.q();
        let box_len = 3usize.pow(q as u32);
        scratch.a.clear();
        for b in 0..box_len {
            let mut c = j;
            let mut rem = b;
            for d in (0..q).rev() {
                let off = (rem % 3) as isize - 1;
                rem /= 3;
                c = self.neighbour(c, d, off);
            }
            scratch.a.push(values[c]);
        }
        // `a` holds 2^d coefficient blocks, each of 3^(q-d) entries with dim d slowest.
        for d in 0..q {
            let block = 3usize.pow((q - d) as u32);
            let inner = block / 3;
            let nblocks = 1usize << d;
            scratch.b.clear();
            scratch.b.resize(2 * nblocks * inner, 0.0);
            for mask in 0..nblocks {
                let src = &scratch.a[mask * block..(mask + 1) * block];
                let (lo, hi) = scratch.b.split_at_mut(nblocks * inner);
                let center = &mut lo[mask * inner..(mask + 1) * inner];
                let slope = &mut hi[mask * inner..(mask + 1) * inner];
                for r in 0..inner {
                    let (um, uc, up) = (src[r], src[inner + r], src[2 * inner + r]);
                    (center[r], slope[r]) = if !self.active[d] {
                        (uc, 0.0)
                    } else {
                        match self.params.stochastic_scheme {
                            StochasticScheme::CellCentered => (uc, weno3_slope(um, uc, up, &self.params)),
                            StochasticScheme::FaceInterpolation => {
                                let (lo, hi) = weno3_pair(um, uc, up, &self.params);
                                (0.5 * (lo + hi), hi - lo)
                            }
                        }
                    };
                }
            }
            std::mem::swap(&mut scratch.a, &mut scratch.b);
        }
        scratch.coeffs.clear();
        scratch.coeffs.extend_from_slice(&scratch.a);
        &scratch.coeffs
    }

    #[inline]
    pub fn evaluate_local(&self, coeffs: &[f64], m: usize) -> f64 {
        let nc = coeffs.len();
        let mono = &self.node_monomials[m * nc..(m + 1) * nc];
        let mut acc = coeffs[0];
        for s in 1..nc {
            acc += coeffs[s] * mono[s];
        }
        acc
    }

    /// Reconstructed values at all `N_q·N_y` quadrature nodes.
    pub fn node_values(&self, values: &[f64], out: &mut [f64], scratch: &mut SweepScratch) {
        let ny = values.len();
        for j in 0..ny {
            let coeffs = self.coefficients(values, j, scratch);
            for m in 0..self.nq {
                let v = self.evaluate_local(coeffs, m);
                out[j * self.nq + m] = v;
            }
        }
    }

    /// Reconstructed value at global node `l` only.
    pub fn node_value(&self, values: &[f64], l: usize, scratch: &mut SweepScratch) -> f64 {
        let coeffs = self.coefficients(values, l / self.nq, scratch);
        self.evaluate_local(coeffs, l % self.nq)
    }

    pub fn reconstruct(&self, values: &[f64]) -> StochasticPoly {
        let nc = self.n_coefficients();
        let mut scratch = SweepScratch::default();
        let mut coeffs = Vec::with_capacity(values.len() * nc);
        for j in 0..values.len() {
            coeffs.extend_from_slice(self.coefficients(values, j, &mut scratch));
        }
        StochasticPoly { q: self.q(), coeffs }
    }
}

/// Per-cell multilinear polynomials over the stochastic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPoly {
    q: usize,
    coeffs: Vec<f64>,
}

impl StochasticPoly {
    pub fn from_coefficients(q: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len() % (1 << q), 0);
        Self { q, coeffs }
    }

    pub fn cell_coefficients(&self, j: usize) -> &[f64] {
        let nc = 1 << self.q;
        &self.coeffs[j * nc..(j + 1) * nc]
    }

    /// Evaluates the polynomial of cell `j` at `y`, which must lie in that cell.
    pub fn evaluate(&self, grid: &TensorGrid, j: usize, y: &[f64]) -> Result<f64> {
        if y.len() != self.q {
            return Err(SfvError::Index(format!("point has {} coordinates, expected {}", y.len(), self.q)));
        }
        let bx = grid.cell_box(j);
        let mut xi = Vec::with_capacity(self.q);
        for (d, iv) in bx.iter().enumerate() {
            let tol = 1e-12 * iv.length();
            if y[d] < iv.lo - tol || y[d] > iv.hi + tol {
                return Err(SfvError::Index(format!("y[{d}] = {} outside cell {j} [{}, {}]", y[d], iv.lo, iv.hi)));
            }
            xi.push((y[d] - 0.5 * (iv.lo + iv.hi)) / iv.length());
        }
        let c = self.cell_coefficients(j);
        Ok((0..c.len())
            .map(|mask| c[mask] * (0..self.q).filter(|d| mask >> d & 1 == 1).map(|d| xi[d]).product::<f64>())
            .sum())
    }

    /// Values at every quadrature node, each evaluated in its owner cell.
    pub fn evaluate_nodes(&self, grid: &TensorGrid, qs: &QuadratureSet) -> Result<Vec<f64>> {
        (0..qs.len()).map(|l| self.evaluate(grid, qs.owner_cell(l), qs.node(l))).collect()
    }
}
