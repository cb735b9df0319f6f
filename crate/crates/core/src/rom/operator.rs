use faer::{Mat, MatMut, MatRef};

use super::linalg::{matmul, pseudoinverse};
use super::pod::build_face_integrals;
use super::qdeim::{select_rows, HyperReduction};
use crate::error::{Result, SfvError};
use crate::solver::{
    assemble, evolve, flux_reconstruction_trace, interface_fluxes, Discretization,
    FaceIntegrals, FluxTrace, FomRun, IntegratorConfig, Problem, StateField,
};
use crate::weno::{reconstruct_physical_cells, SweepScratch};

/// `F̄ = B V† F̃` on the full flux trace.
#[derive(Debug, Clone)]
pub struct RomOperator {
    v_pinv: Mat<f64>,
    b: Mat<f64>,
}

impl RomOperator {
    pub fn new(v: MatRef<'_, f64>, disc: &Discretization) -> Result<Self> {
        let b = build_face_integrals(v, &disc.quadrature)?;
        let p = pseudoinverse(v)?;
        if p.rank < v.ncols() {
            return Err(SfvError::RankDeficient { requested: v.ncols(), rank: p.rank });
        }
        Ok(Self { v_pinv: p.matrix, b })
    }

    pub fn n_modes(&self) -> usize {
        self.b.ncols()
    }

    /// Face-integral matrix `B`, `N_y × N`.
    pub fn face_integrals(&self) -> MatRef<'_, f64> {
        self.b.as_ref()
    }

    /// Reduced flux integrals at every interface from a full trace.
    pub fn project(&self, trace: &FluxTrace) -> FaceIntegrals {
        let ny = self.b.nrows();
        let mut out = FaceIntegrals::zeros(trace.nx, ny, trace.n);
        let cols = trace.nx + 1;
        for p in 0..trace.n {
            let f = MatRef::from_column_major_slice(trace.component(p), trace.nodes, cols);
            let c = matmul(self.v_pinv.as_ref(), f);
            let fbar = matmul(self.b.as_ref(), c.as_ref());
            write_block(&mut out, p, fbar.as_ref());
        }
        out
    }
}

fn write_block(out: &mut FaceIntegrals, p: usize, fbar: MatRef<'_, f64>) {
    let (ny, cols) = (fbar.nrows(), fbar.ncols());
    let s = out.index(p, 0, 0);
    let mut dst = MatMut::from_column_major_slice_mut(&mut out.values[s..s + ny * cols], ny, cols);
    dst.copy_from(fbar);
}

pub fn rom_rhs(disc: &Discretization, op: &RomOperator, u: &StateField, out: &mut StateField) -> Result<()> {
    let trace = flux_reconstruction_trace(disc, u)?;
    assemble(disc, &op.project(&trace), out);
    Ok(())
}

/// `F̄ = B V[I,:]† F̃[I,:]`, evaluating fluxes only on the closure of `I`.
#[derive(Debug, Clone)]
pub struct HyperReducedOperator {
    pub selection: HyperReduction,
    vi_pinv: Mat<f64>,
    b: Mat<f64>,
}

impl HyperReducedOperator {
    pub fn new(v: MatRef<'_, f64>, selection: HyperReduction, disc: &Discretization) -> Result<Self> {
        let b = build_face_integrals(v, &disc.quadrature)?;
        let vi = select_rows(v, &selection.indices);
        let p = pseudoinverse(vi.as_ref())?;
        if p.rank < v.ncols() {
            return Err(SfvError::RankDeficient { requested: v.ncols(), rank: p.rank });
        }
        Ok(Self { selection, vi_pinv: p.matrix, b })
    }

    /// Reconstructed flux at the selected nodes, per component `N_H × (N_x + 1)`.
    pub fn selected_trace(&self, disc: &Discretization, u: &StateField) -> Result<Vec<Mat<f64>>> {
        let closure = &self.selection.closure;
        let states = reconstruct_physical_cells(u, disc.boundary, &disc.weno, closure);
        let fhat = interface_fluxes(disc, &states, Some(closure))?;
        let (nx, ny, n) = (u.nx(), u.ny(), u.n());
        let idx = &self.selection.indices;
        let mut scratch = SweepScratch::default();
        let mut out = Vec::with_capacity(n);
        for p in 0..n {
            let mut f = Mat::zeros(idx.len(), nx + 1);
            for k in 0..=nx {
                let s = fhat.index(p, k, 0);
                let vals = &fhat.values[s..s + ny];
                for (r, &l) in idx.iter().enumerate() {
                    f[(r, k)] = disc.reconstructor.node_value(vals, l, &mut scratch);
                }
            }
            out.push(f);
        }
        Ok(out)
    }

    pub fn integrals(&self, disc: &Discretization, u: &StateField) -> Result<FaceIntegrals> {
        let rows = self.selected_trace(disc, u)?;
        let mut out = FaceIntegrals::zeros(u.nx(), u.ny(), u.n());
        for (p, f) in rows.iter().enumerate() {
            let c = matmul(self.vi_pinv.as_ref(), f.as_ref());
            let fbar = matmul(self.b.as_ref(), c.as_ref());
            write_block(&mut out, p, fbar.as_ref());
        }
        Ok(out)
    }
}

pub fn hyper_reduced_rhs(
    disc: &Discretization,
    op: &HyperReducedOperator,
    u: &StateField,
    out: &mut StateField,
) -> Result<()> {
    let fbar = op.integrals(disc, u)?;
    assemble(disc, &fbar, out);
    Ok(())
}

fn run_reduced<R>(problem: &Problem, disc: &Discretization, cfg: &IntegratorConfig, rhs: R) -> Result<FomRun>
where
    R: FnMut(&StateField, &mut StateField) -> Result<()>,
{
    let u0 = problem.initial_state(disc)?;
    let start = disc.flux_evaluations();
    let mut frames = Vec::with_capacity(cfg.frames.len());
    let (final_state, stats) = evolve(disc, &u0, rhs, cfg, |_, f| {
        frames.push(f);
        Ok(())
    })?;
    Ok(FomRun { final_state, frames, stats, flux_evaluations: disc.flux_evaluations() - start })
}

pub fn run_rom(problem: &Problem, disc: &Discretization, op: &RomOperator, cfg: &IntegratorConfig) -> Result<FomRun> {
    run_reduced(problem, disc, cfg, |u, out| rom_rhs(disc, op, u, out))
}

pub fn run_hyper_reduced(
    problem: &Problem,
    disc: &Discretization,
    op: &HyperReducedOperator,
    cfg: &IntegratorConfig,
) -> Result<FomRun> {
    run_reduced(problem, disc, cfg, |u, out| hyper_reduced_rhs(disc, op, u, out))
}
