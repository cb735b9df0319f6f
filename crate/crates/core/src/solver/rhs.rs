//! Right-hand sides of the SFV system for both reconstruction strategies.

use super::{Discretization, StateField};
use crate::error::{Result, SfvError, StateLocation};
use crate::physics::{Inadmissible, Vector, MAX_COMPONENTS};
use crate::weno::{reconstruct_physical, InterfaceStates, SweepScratch};

/// Stochastic flux integrals `F̄_{k,j,p}` at every physical interface `k = 0..=N_x`,
/// stored `[p][k][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceIntegrals {
    pub nx: usize,
    pub ny: usize,
    pub n: usize,
    pub values: Vec<f64>,
}

impl FaceIntegrals {
    pub fn zeros(nx: usize, ny: usize, n: usize) -> Self {
        Self { nx, ny, n, values: vec![0.0; n * (nx + 1) * ny] }
    }

    #[inline]
    pub fn index(&self, p: usize, k: usize, j: usize) -> usize {
        (p * (self.nx + 1) + k) * self.ny + j
    }
}

/// Reconstructed flux at every global quadrature node along every physical
/// interface, stored `[p][k][l]` (`k = 0..=N_x`). Each `(p, k)` slab is one
/// column of the `F̃_{±1/2}` matrices: column `i` of `F̃_{+1/2}` is interface
/// `i + 1`, column `i` of `F̃_{−1/2}` is interface `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxTrace {
    pub nx: usize,
    pub n: usize,
    pub nodes: usize,
    pub values: Vec<f64>,
}

impl FluxTrace {
    pub fn zeros(nx: usize, n: usize, nodes: usize) -> Self {
        Self { nx, n, nodes, values: vec![0.0; n * (nx + 1) * nodes] }
    }

    /// Node values along interface `k` for component `p`.
    pub fn interface(&self, p: usize, k: usize) -> &[f64] {
        let s = (p * (self.nx + 1) + k) * self.nodes;
        &self.values[s..s + self.nodes]
    }

    pub fn interface_mut(&mut self, p: usize, k: usize) -> &mut [f64] {
        let s = (p * (self.nx + 1) + k) * self.nodes;
        &mut self.values[s..s + self.nodes]
    }

    /// `F̃_{+1/2}` for component `p`, column-major `nodes × N_x`.
    pub fn plus(&self, p: usize) -> &[f64] {
        let s = (p * (self.nx + 1) + 1) * self.nodes;
        &self.values[s..s + self.nx * self.nodes]
    }

    /// `F̃_{−1/2}` for component `p`, column-major `nodes × N_x`.
    pub fn minus(&self, p: usize) -> &[f64] {
        let s = p * (self.nx + 1) * self.nodes;
        &self.values[s..s + self.nx * self.nodes]
    }

    /// All `N_x + 1` interfaces of component `p`, column-major `nodes × (N_x + 1)`.
    pub fn component(&self, p: usize) -> &[f64] {
        let s = p * (self.nx + 1) * self.nodes;
        &self.values[s..s + (self.nx + 1) * self.nodes]
    }
}

fn positivity(e: Inadmissible, physical: usize, stochastic_cell: usize, node: Option<usize>) -> SfvError {
    SfvError::Positivity {
        location: StateLocation { physical, stochastic_cell, node },
        component: e.component,
        detail: e.to_string(),
    }
}

/// Numerical fluxes `F̂(ũ_L, ũ_R)` per interface and stochastic cell, `[p][k][j]`,
/// restricted to the listed cells (all cells when `cells` is `None`).
pub(crate) fn interface_fluxes(
    disc: &Discretization,
    states: &InterfaceStates,
    cells: Option<&[usize]>,
) -> Result<FaceIntegrals> {
    let (nx, ny, n) = (states.nx, states.ny, states.n);
    let mut out = FaceIntegrals::zeros(nx, ny, n);
    let mut eval = |j: usize| -> Result<()> {
        for k in 0..=nx {
            let mut ul: Vector = [0.0; MAX_COMPONENTS];
            let mut ur: Vector = [0.0; MAX_COMPONENTS];
            for p in 0..n {
                ul[p] = states.left[states.index(p, j, k)];
                ur[p] = states.right[states.index(p, j, k)];
            }
            let f = disc.law.lax_friedrichs(&ul, &ur).map_err(|e| positivity(e, k, j, None))?;
            for p in 0..n {
                let idx = out.index(p, k, j);
                out.values[idx] = f[p];
            }
        }
        Ok(())
    };
    let count = match cells {
        None => {
            for j in 0..ny {
                eval(j)?;
            }
            ny
        }
        Some(cells) => {
            for &j in cells {
                eval(j)?;
            }
            cells.len()
        }
    };
    disc.count_flux_evaluations(((nx + 1) * count) as u64);
    Ok(out)
}

/// Flux reconstruction: one numerical flux per interface and stochastic cell,
/// then stochastic WENO of the flux evaluated at every quadrature node.
pub fn flux_reconstruction_trace(disc: &Discretization, u: &StateField) -> Result<FluxTrace> {
    let states = reconstruct_physical(u, disc.boundary, &disc.weno);
    let fhat = interface_fluxes(disc, &states, None)?;
    let (nx, ny, n) = (u.nx(), u.ny(), u.n());
    let mut trace = FluxTrace::zeros(nx, n, disc.quadrature.len());
    let mut scratch = SweepScratch::default();
    for p in 0..n {
        for k in 0..=nx {
            let s = fhat.index(p, k, 0);
            let vals = &fhat.values[s..s + ny];
            disc.reconstructor.node_values(vals, trace.interface_mut(p, k), &mut scratch);
        }
    }
    Ok(trace)
}

/// Per-cell quadrature of a flux trace: `F̄_{k,j} = Σ_{l ∈ j} F̃_k(y_l) μ(y_l) w_l`.
pub fn quadrature_flux_integrals(disc: &Discretization, trace: &FluxTrace) -> FaceIntegrals {
    let qs = &disc.quadrature;
    let ny = disc.grid.ny();
    let mut out = FaceIntegrals::zeros(trace.nx, ny, trace.n);
    for p in 0..trace.n {
        for k in 0..=trace.nx {
            let vals = trace.interface(p, k);
            for j in 0..ny {
                let idx = out.index(p, k, j);
                out.values[idx] = qs.cell_nodes(j).map(|l| vals[l] * qs.measure_weight(l)).sum();
            }
        }
    }
    out
}

/// State reconstruction: stochastic WENO of the interface states, a numerical
/// flux at every quadrature node, then per-cell quadrature.
pub fn state_reconstruction_integrals(disc: &Discretization, u: &StateField) -> Result<FaceIntegrals> {
    let states = reconstruct_physical(u, disc.boundary, &disc.weno);
    let (nx, ny, n) = (u.nx(), u.ny(), u.n());
    let qs = &disc.quadrature;
    let nodes = qs.len();
    let mut left_nodes = vec![0.0; n * nodes];
    let mut right_nodes = vec![0.0; n * nodes];
    let mut gather = vec![0.0; ny];
    let mut scratch = SweepScratch::default();
    let mut out = FaceIntegrals::zeros(nx, ny, n);
    for k in 0..=nx {
        for p in 0..n {
            for (j, g) in gather.iter_mut().enumerate() {
                *g = states.left[states.index(p, j, k)];
            }
            disc.reconstructor.node_values(&gather, &mut left_nodes[p * nodes..(p + 1) * nodes], &mut scratch);
            for (j, g) in gather.iter_mut().enumerate() {
                *g = states.right[states.index(p, j, k)];
            }
            disc.reconstructor.node_values(&gather, &mut right_nodes[p * nodes..(p + 1) * nodes], &mut scratch);
        }
        for j in 0..ny {
            let mut acc = [0.0; MAX_COMPONENTS];
            for l in qs.cell_nodes(j) {
                let mut ul: Vector = [0.0; MAX_COMPONENTS];
                let mut ur: Vector = [0.0; MAX_COMPONENTS];
                for p in 0..n {
                    ul[p] = left_nodes[p * nodes + l];
                    ur[p] = right_nodes[p * nodes + l];
                }
                let f = disc.law.lax_friedrichs(&ul, &ur).map_err(|e| positivity(e, k, j, Some(l)))?;
                let mw = qs.measure_weight(l);
                for p in 0..n {
                    acc[p] += f[p] * mw;
                }
            }
            for (p, a) in acc.iter().enumerate().take(n) {
                let idx = out.index(p, k, j);
                out.values[idx] = *a;
            }
        }
    }
    disc.count_flux_evaluations(((nx + 1) * nodes) as u64);
    Ok(out)
}

/// `dU_{i,j}/dt = −(F̄_{i+1/2,j} − F̄_{i−1/2,j}) / (|K_x^i||K_y^j|)`.
pub fn assemble(disc: &Discretization, fbar: &FaceIntegrals, out: &mut StateField) {
    let (nx, ny, n) = (out.nx(), out.ny(), out.n());
    for p in 0..n {
        for j in 0..ny {
            for i in 0..nx {
                let fp = fbar.values[fbar.index(p, i + 1, j)];
                let fm = fbar.values[fbar.index(p, i, j)];
                out.set(i, j, p, -(fp - fm) / disc.mass(i, j));
            }
        }
    }
}

pub fn rhs_state_reconstruction(disc: &Discretization, u: &StateField, out: &mut StateField) -> Result<()> {
    let fbar = state_reconstruction_integrals(disc, u)?;
    assemble(disc, &fbar, out);
    Ok(())
}

pub fn rhs_flux_reconstruction(disc: &Discretization, u: &StateField, out: &mut StateField) -> Result<()> {
    let trace = flux_reconstruction_trace(disc, u)?;
    let fbar = quadrature_flux_integrals(disc, &trace);
    assemble(disc, &fbar, out);
    Ok(())
}
