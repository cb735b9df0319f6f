//! Tensor-product meshes over the physical and stochastic domains, two-point
//! Gauss quadrature per stochastic cell, and PDF-weighted cell measures.
//!
//! Stochastic cells are linearised row-major: the first stochastic dimension
//! varies slowest. Quadrature nodes are numbered cell-major, so the global node
//! `l` belongs to cell `l / N_q` and has local index `l % N_q`; local nodes use
//! the same row-major convention over the `2^q` tensor points.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SfvError};

/// Abscissa of the two-point Gauss–Legendre rule on `[-1, 1]`.
pub const GAUSS_ABSCISSA: f64 = 0.577_350_269_189_625_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(SfvError::config(format!("degenerate interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// One stochastic dimension: its interval and the number of uniform cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticAxis {
    pub interval: Interval,
    pub cells: usize,
}

impl StochasticAxis {
    pub fn width(&self) -> f64 {
        self.interval.length() / self.cells as f64
    }

    pub fn center(&self, c: usize) -> f64 {
        self.interval.lo + (c as f64 + 0.5) * self.width()
    }
}

/// Uniform Cartesian partition of `D_x × D_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    physical: Interval,
    nx: usize,
    axes: Vec<StochasticAxis>,
    strides: Vec<usize>,
    ny: usize,
}

impl TensorGrid {
    /// Builds the grid. `nx` must be at least 3 so the WENO stencil fits.
    pub fn new(physical: Interval, nx: usize, stochastic: &[(Interval, usize)]) -> Result<Self> {
        if nx < 3 {
            return Err(SfvError::config(format!("N_x = {nx}: need at least 3 physical cells")));
        }
        Interval::new(physical.lo, physical.hi)?;
        let mut axes = Vec::with_capacity(stochastic.len());
        for (d, &(interval, cells)) in stochastic.iter().enumerate() {
            Interval::new(interval.lo, interval.hi)?;
            if cells == 0 {
                return Err(SfvError::config(format!("stochastic dimension {d} has zero cells")));
            }
            axes.push(StochasticAxis { interval, cells });
        }
        let mut strides = vec![1; axes.len()];
        for d in (0..axes.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * axes[d + 1].cells;
        }
        let ny = axes.iter().map(|a| a.cells).product();
        Ok(Self { physical, nx, axes, strides, ny })
    }

    /// Same physical mesh with no stochastic dimensions (a single "cell" of measure one).
    pub fn deterministic(&self) -> Self {
        Self {
            physical: self.physical,
            nx: self.nx,
            axes: Vec::new(),
            strides: Vec::new(),
            ny: 1,
        }
    }

    pub fn physical(&self) -> Interval {
        self.physical
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn q(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[StochasticAxis] {
        &self.axes
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn dx(&self) -> f64 {
        self.physical.length() / self.nx as f64
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.physical.lo + (i as f64 + 0.5) * self.dx()
    }

    /// Coordinate of interface `k`, `k = 0..=N_x`.
    pub fn interface(&self, k: usize) -> f64 {
        self.physical.lo + k as f64 * self.dx()
    }

    pub fn physical_widths(&self) -> Vec<f64> {
        vec![self.dx(); self.nx]
    }

    pub fn multi_index(&self, j: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.axes)
            .map(|(&s, a)| (j / s) % a.cells)
            .collect()
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(&c, &s)| c * s).sum()
    }

    /// Per-dimension bounds of stochastic cell `j`.
    pub fn cell_box(&self, j: usize) -> Vec<Interval> {
        self.multi_index(j)
            .into_iter()
            .zip(&self.axes)
            .map(|(c, a)| {
                let lo = a.interval.lo + c as f64 * a.width();
                Interval { lo, hi: lo + a.width() }
            })
            .collect()
    }

    pub fn cell_center_y(&self, j: usize) -> Vec<f64> {
        self.multi_index(j)
            .into_iter()
            .zip(&self.axes)
            .map(|(c, a)| a.center(c))
            .collect()
    }

    /// Geometric volume of the stochastic domain.
    pub fn stochastic_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.interval.length()).product()
    }

    /// Index of the stochastic cell along dimension `d` whose center is nearest to `y`.
    pub fn nearest_cell_along(&self, d: usize, y: f64) -> usize {
        let a = &self.axes[d];
        let c = ((y - a.interval.lo) / a.width() - 0.5).round();
        c.clamp(0.0, (a.cells - 1) as f64) as usize
    }
}

/// Probability density over the stochastic domain.
#[derive(Clone)]
pub enum Density {
    Uniform,
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Density {
    pub fn custom(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Density::Custom(Arc::new(f))
    }

    pub fn eval(&self, grid: &TensorGrid, y: &[f64]) -> f64 {
        match self {
            Density::Uniform => 1.0 / grid.stochastic_volume(),
            Density::Custom(f) => f(y),
        }
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Uniform => f.write_str("Uniform"),
            Density::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// All stochastic quadrature nodes of a grid, with geometric weights and PDF
/// values kept separately.
#[derive(Debug, Clone)]
pub struct QuadratureSet {
    q: usize,
    nodes_per_cell: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    pdf: Vec<f64>,
    /// Reference offsets `ξ ∈ [-1/2, 1/2]^q` of each local node, relative to the cell width.
    local_offsets: Vec<f64>,
}

impl QuadratureSet {
    pub fn q(&self) -> usize {
        self.q
    }

    /// `N_q = 2^q`.
    pub fn nodes_per_cell(&self) -> usize {
        self.nodes_per_cell
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, l: usize) -> &[f64] {
        &self.nodes[l * self.q..(l + 1) * self.q]
    }

    pub fn weight(&self, l: usize) -> f64 {
        self.weights[l]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pdf(&self, l: usize) -> f64 {
        self.pdf[l]
    }

    pub fn pdf_values(&self) -> &[f64] {
        &self.pdf
    }

    pub fn owner_cell(&self, l: usize) -> usize {
        l / self.nodes_per_cell
    }

    pub fn cell_nodes(&self, j: usize) -> std::ops::Range<usize> {
        j * self.nodes_per_cell..(j + 1) * self.nodes_per_cell
    }

    pub fn local_offset(&self, m: usize) -> &[f64] {
        &self.local_offsets[m * self.q..(m + 1) * self.q]
    }

    /// `μ(y_l)·w_l`, the full quadrature weight of node `l`.
    pub fn measure_weight(&self, l: usize) -> f64 {
        self.pdf[l] * self.weights[l]
    }

    /// Replaces the PDF values, keeping nodes and geometric weights.
    pub fn with_density(&self, grid: &TensorGrid, density: &Density) -> Self {
        let mut out = self.clone();
        for l in 0..out.len() {
            out.pdf[l] = density.eval(grid, self.node(l));
        }
        out
    }
}

/// Two-point Gauss–Legendre nodes per dimension in every stochastic cell.
pub fn tensor_gauss_nodes(grid: &TensorGrid, density: &Density) -> QuadratureSet {
    let q = grid.q();
    let nq = 1usize << q;
    let half = 0.5 * GAUSS_ABSCISSA;
    let mut local_offsets = Vec::with_capacity(nq * q);
    for m in 0..nq {
        for d in 0..q {
            let bit = (m >> (q - 1 - d)) & 1;
            local_offsets.push(if bit == 0 { -half } else { half });
        }
    }
    let total = nq * grid.ny();
    let mut nodes = Vec::with_capacity(total * q);
    let mut weights = Vec::with_capacity(total);
    let jac: f64 = grid.axes().iter().map(|a| 0.5 * a.width()).product();
    for j in 0..grid.ny() {
        let center = grid.cell_center_y(j);
        for m in 0..nq {
            for d in 0..q {
                let w = grid.axes()[d].width();
                nodes.push(center[d] + w * local_offsets[m * q + d]);
            }
            weights.push(jac);
        }
    }
    let mut qs = QuadratureSet {
        q,
        nodes_per_cell: nq,
        nodes,
        weights,
        pdf: vec![0.0; total],
        local_offsets,
    };
    for l in 0..total {
        qs.pdf[l] = density.eval(grid, qs.node(l));
    }
    qs
}

/// `Σ_{l ∈ cell j} f(y_l) μ(y_l) w_l` for node-indexed values `f`.
pub fn quadrature_integrate(qs: &QuadratureSet, values: &[f64], j: usize) -> f64 {
    qs.cell_nodes(j).map(|l| values[l] * qs.measure_weight(l)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMeasures {
    /// `|K_y^j|`, probability mass of each stochastic cell.
    pub stochastic: Vec<f64>,
    /// `|K_x^i|`.
    pub physical: Vec<f64>,
}

impl CellMeasures {
    pub fn new(grid: &TensorGrid, qs: &QuadratureSet) -> Result<Self> {
        let ones = vec![1.0; qs.len()];
        let stochastic: Vec<f64> = (0..grid.ny()).map(|j| quadrature_integrate(qs, &ones, j)).collect();
        if let Some((j, m)) = stochastic.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
            return Err(SfvError::config(format!(
                "stochastic cell {j} has non-positive measure {m}; PDF invalid on this cell"
            )));
        }
        Ok(Self { stochastic, physical: grid.physical_widths() })
    }
}

/// Stochastic cell measures for `grid` under `density`.
pub fn cell_measures(grid: &TensorGrid, density: &Density) -> Result<CellMeasures> {
    CellMeasures::new(grid, &tensor_gauss_nodes(grid, density))
}
