//! Semi-discrete stochastic finite volume system and its time integration.

mod integrator;
mod problem;
mod rhs;

use std::sync::atomic::{AtomicU64, Ordering};

pub use integrator::{integrate, FrameSchedule, IntegrationStats, IntegratorConfig};
pub use problem::{
    cfl_initial_step, evolve, project_initial_condition, run_fom, FomRun, InitialCondition, Method,
    Problem, ProblemKind,
};
pub(crate) use rhs::interface_fluxes;
pub use rhs::{
    assemble, flux_reconstruction_trace, quadrature_flux_integrals, rhs_flux_reconstruction,
    rhs_state_reconstruction, state_reconstruction_integrals, FaceIntegrals, FluxTrace,
};

use crate::error::Result;
use crate::grid::{tensor_gauss_nodes, CellMeasures, Density, QuadratureSet, TensorGrid};
use crate::physics::ConservationLaw;
use crate::weno::{Boundary, StochasticReconstructor, WenoParams};

/// PDF-weighted cell averages `U_{i,j,p}`, stored `[p][j][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    nx: usize,
    ny: usize,
    n: usize,
    pub t: f64,
    values: Vec<f64>,
}

impl StateField {
    pub fn zeros(nx: usize, ny: usize, n: usize) -> Self {
        Self { nx, ny, n, t: 0.0, values: vec![0.0; nx * ny * n] }
    }

    pub fn from_values(nx: usize, ny: usize, n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), nx * ny * n, "state size mismatch");
        Self { nx, ny, n, t: 0.0, values }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, p: usize) -> usize {
        (p * self.ny + j) * self.nx + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, p: usize) -> f64 {
        self.values[self.index(i, j, p)]
    }

    pub fn set(&mut self, i: usize, j: usize, p: usize, v: f64) {
        let k = self.index(i, j, p);
        self.values[k] = v;
    }

    /// Cell averages along `x` for fixed stochastic cell `j` and component `p`.
    pub fn line(&self, p: usize, j: usize) -> &[f64] {
        let s = (p * self.ny + j) * self.nx;
        &self.values[s..s + self.nx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Conserved vector of cell `(i, j)`.
    pub fn state(&self, i: usize, j: usize) -> crate::physics::Vector {
        let mut u = [0.0; crate::physics::MAX_COMPONENTS];
        for (p, up) in u.iter_mut().enumerate().take(self.n) {
            *up = self.get(i, j, p);
        }
        u
    }
}

/// Everything the right-hand sides need about the discretisation.
#[derive(Debug)]
pub struct Discretization {
    pub grid: TensorGrid,
    pub quadrature: QuadratureSet,
    pub measures: CellMeasures,
    pub law: ConservationLaw,
    pub boundary: Boundary,
    pub weno: WenoParams,
    pub reconstructor: StochasticReconstructor,
    flux_evaluations: AtomicU64,
}

impl Discretization {
    pub fn new(
        grid: TensorGrid,
        density: &Density,
        law: ConservationLaw,
        boundary: Boundary,
        weno: WenoParams,
    ) -> Result<Self> {
        weno.validate()?;
        let quadrature = tensor_gauss_nodes(&grid, density);
        let measures = CellMeasures::new(&grid, &quadrature)?;
        let reconstructor = StochasticReconstructor::new(&grid, &quadrature, weno);
        Ok(Self {
            grid,
            quadrature,
            measures,
            law,
            boundary,
            weno,
            reconstructor,
            flux_evaluations: AtomicU64::new(0),
        })
    }

    pub fn n(&self) -> usize {
        self.law.n_components()
    }

    /// Number of numerical-flux evaluations since construction or the last reset.
    pub fn flux_evaluations(&self) -> u64 {
        self.flux_evaluations.load(Ordering::Relaxed)
    }

    pub fn reset_flux_counter(&self) {
        self.flux_evaluations.store(0, Ordering::Relaxed);
    }

    pub(crate) fn count_flux_evaluations(&self, k: u64) {
        self.flux_evaluations.fetch_add(k, Ordering::Relaxed);
    }

    /// `|K_x^i|·|K_y^j|`.
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.measures.physical[i] * self.measures.stochastic[j]
    }

    /// `Σ_{i,j} |K_x^i||K_y^j| U_{i,j,p}` for each component.
    pub fn total_mass(&self, u: &StateField) -> Vec<f64> {
        (0..u.n())
            .map(|p| {
                let mut s = 0.0;
                for j in 0..u.ny() {
                    for i in 0..u.nx() {
                        s += self.mass(i, j) * u.get(i, j, p);
                    }
                }
                s
            })
            .collect()
    }

    pub fn zero_field(&self) -> StateField {
        StateField::zeros(self.grid.nx(), self.grid.ny(), self.n())
    }
}
