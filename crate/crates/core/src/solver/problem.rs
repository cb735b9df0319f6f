//! Problem definitions, initial projection, and full-order runs.

use std::fmt;
use std::sync::Arc;

use super::integrator::{integrate, IntegrationStats, IntegratorConfig};
use super::rhs::{rhs_flux_reconstruction, rhs_state_reconstruction};
use super::{Discretization, StateField};
use crate::error::{Result, SfvError, StateLocation};
use crate::grid::{Density, Interval, TensorGrid, GAUSS_ABSCISSA};
use crate::physics::{primitive_to_conserved, ConservationLaw, Vector};
use crate::weno::{Boundary, WenoParams};

/// `u_0(x, y)` in conserved variables.
pub type InitialCondition = Arc<dyn Fn(f64, &[f64]) -> Vector + Send + Sync>;

/// Exact average of `u_0` over a physical cell and a stochastic box under the
/// uniform density; degenerate boxes `[y, y]` give the physical average at `y`.
pub type CellAverage = Arc<dyn Fn(Interval, &[Interval]) -> Vector + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    /// `u_0 = (1 + y_1/2) sin(2πx) + y_2`, periodic, `y ~ U[0,1]²`.
    BurgersSine,
    /// Sod tube with interface at `0.475 + 0.05 y`.
    SodNarrow,
    /// Sod tube with interface at `0.3 + 0.3 y`.
    SodWide,
    /// User-defined Riemann problem with interface at `x0 + slope·y_1`.
    Riemann,
}

impl ProblemKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "burgers-sine" => Ok(Self::BurgersSine),
            "sod-narrow" => Ok(Self::SodNarrow),
            "sod-wide" => Ok(Self::SodWide),
            "custom" => Ok(Self::Riemann),
            _ => Err(SfvError::config(format!("unknown problem '{s}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BurgersSine => "burgers-sine",
            Self::SodNarrow => "sod-narrow",
            Self::SodWide => "sod-wide",
            Self::Riemann => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FomState,
    FomFlux,
    Rom,
    RomHr,
    Det1d,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fom-state" => Ok(Self::FomState),
            "fom-flux" => Ok(Self::FomFlux),
            "rom" => Ok(Self::Rom),
            "rom-hr" => Ok(Self::RomHr),
            "det-1d" => Ok(Self::Det1d),
            _ => Err(SfvError::config(format!("unknown method '{s}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FomState => "fom-state",
            Self::FomFlux => "fom-flux",
            Self::Rom => "rom",
            Self::RomHr => "rom-hr",
            Self::Det1d => "det-1d",
        }
    }
}

/// A stochastic conservation law with its domain, data and final time.
#[derive(Clone)]
pub struct Problem {
    pub kind: ProblemKind,
    pub law: ConservationLaw,
    pub boundary: Boundary,
    pub physical: Interval,
    pub stochastic: Vec<Interval>,
    pub density: Density,
    pub initial: InitialCondition,
    /// Closed-form cell averages, used instead of quadrature when available.
    pub cell_average: Option<CellAverage>,
    pub t_final: f64,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("kind", &self.kind)
            .field("law", &self.law)
            .field("boundary", &self.boundary)
            .field("physical", &self.physical)
            .field("stochastic", &self.stochastic)
            .field("t_final", &self.t_final)
            .finish()
    }
}

const SOD_LEFT: (f64, f64, f64) = (1.0, 0.0, 1.0);
const SOD_RIGHT: (f64, f64, f64) = (0.125, 0.0, 0.1);

impl Problem {
    pub fn burgers_sine() -> Self {
        Self {
            kind: ProblemKind::BurgersSine,
            law: ConservationLaw::Burgers,
            boundary: Boundary::Periodic,
            physical: Interval::unit(),
            stochastic: vec![Interval::unit(), Interval::unit()],
            density: Density::Uniform,
            initial: Arc::new(|x, y| {
                [(1.0 + 0.5 * y[0]) * (2.0 * std::f64::consts::PI * x).sin() + y[1], 0.0, 0.0]
            }),
            cell_average: None,
            t_final: 0.2,
        }
    }

    pub fn sod_narrow() -> Self {
        Self { kind: ProblemKind::SodNarrow, ..Self::riemann(SOD_LEFT, SOD_RIGHT, 0.475, 0.05, 1.4) }
    }

    pub fn sod_wide() -> Self {
        Self { kind: ProblemKind::SodWide, ..Self::riemann(SOD_LEFT, SOD_RIGHT, 0.3, 0.3, 1.4) }
    }

    /// Euler Riemann problem on `[0, 1]` with primitive states `(ρ, u, p)` and an
    /// uncertain interface at `x0 + slope·y`, `y ~ U[0, 1]`, outflow boundaries.
    pub fn riemann(left: (f64, f64, f64), right: (f64, f64, f64), x0: f64, slope: f64, gamma: f64) -> Self {
        let ul = primitive_to_conserved(left.0, left.1, left.2, gamma);
        let ur = primitive_to_conserved(right.0, right.1, right.2, gamma);
        Self {
            kind: ProblemKind::Riemann,
            law: ConservationLaw::euler(gamma),
            boundary: Boundary::Outflow,
            physical: Interval::unit(),
            stochastic: vec![Interval::unit()],
            density: Density::Uniform,
            initial: Arc::new(move |x, y| if x < x0 + slope * y[0] { ul } else { ur }),
            cell_average: Some(Arc::new(move |xc, yb| {
                let (c, d) = yb.first().map_or((0.0, 0.0), |b| (b.lo, b.hi));
                let f = mean_left_fraction(x0 - xc.lo, slope, xc.length(), c, d);
                let mut u = [0.0; 3];
                for p in 0..3 {
                    u[p] = ur[p] + f * (ul[p] - ur[p]);
                }
                u
            })),
            t_final: 0.2,
        }
    }

    pub fn preset(kind: ProblemKind) -> Result<Self> {
        match kind {
            ProblemKind::BurgersSine => Ok(Self::burgers_sine()),
            ProblemKind::SodNarrow => Ok(Self::sod_narrow()),
            ProblemKind::SodWide => Ok(Self::sod_wide()),
            ProblemKind::Riemann => Err(SfvError::config("custom problems need explicit Riemann data")),
        }
    }

    pub fn q(&self) -> usize {
        self.stochastic.len()
    }

    pub fn grid(&self, nx: usize, cells: &[usize]) -> Result<TensorGrid> {
        if cells.len() != self.q() {
            return Err(SfvError::config(format!(
                "problem has {} stochastic dimensions, got {} cell counts",
                self.q(),
                cells.len()
            )));
        }
        let dims: Vec<_> = self.stochastic.iter().copied().zip(cells.iter().copied()).collect();
        TensorGrid::new(self.physical, nx, &dims)
    }

    pub fn discretization(&self, nx: usize, cells: &[usize], weno: WenoParams) -> Result<Discretization> {
        Discretization::new(self.grid(nx, cells)?, &self.density, self.law, self.boundary, weno)
    }

    /// The deterministic problem obtained by freezing the parameter at `y`.
    pub fn at_parameter(&self, y: &[f64]) -> Self {
        let ic = self.initial.clone();
        let point: Vec<Interval> = y.iter().map(|&v| Interval { lo: v, hi: v }).collect();
        let cell_average = self.cell_average.clone().map(|avg| -> CellAverage {
            Arc::new(move |x: Interval, _: &[Interval]| avg(x, &point))
        });
        let y = y.to_vec();
        Self {
            stochastic: Vec::new(),
            density: Density::Uniform,
            initial: Arc::new(move |x, _| ic(x, &y)),
            cell_average,
            ..self.clone()
        }
    }

    /// Initial cell averages: closed form when the problem provides it and the
    /// density is uniform, two-point Gauss otherwise.
    pub fn initial_state(&self, disc: &Discretization) -> Result<StateField> {
        match (&self.cell_average, &self.density) {
            (Some(avg), Density::Uniform) => {
                let grid = &disc.grid;
                let mut u = disc.zero_field();
                for j in 0..grid.ny() {
                    let ybox = grid.cell_box(j);
                    for i in 0..grid.nx() {
                        let xc = Interval { lo: grid.interface(i), hi: grid.interface(i + 1) };
                        let v = avg(xc, &ybox);
                        for p in 0..disc.n() {
                            u.set(i, j, p, v[p]);
                        }
                        admissible(disc, &v, i, j)?;
                    }
                }
                Ok(u)
            }
            _ => project_initial_condition(disc, self.initial.as_ref()),
        }
    }
}

/// `1/(d−c) ∫_c^d clamp((a + b·y)/h, 0, 1) dy`, or the point value when `c = d`.
fn mean_left_fraction(a: f64, b: f64, h: f64, c: f64, d: f64) -> f64 {
    let (alpha, beta) = (a / h, b / h);
    if d - c <= 0.0 || beta == 0.0 {
        return (alpha + beta * c).clamp(0.0, 1.0);
    }
    let g = |z: f64| {
        if z <= 0.0 {
            0.0
        } else if z <= 1.0 {
            0.5 * z * z
        } else {
            z - 0.5
        }
    };
    (g(alpha + beta * d) - g(alpha + beta * c)) / (beta * (d - c))
}

fn admissible(disc: &Discretization, cell: &Vector, i: usize, j: usize) -> Result<()> {
    disc.law.check(cell).map_err(|e| SfvError::Positivity {
        location: StateLocation { physical: i, stochastic_cell: j, node: None },
        component: e.component,
        detail: format!("initial average inadmissible: {e}"),
    })
}

/// PDF-weighted cell averages of `u0` by two-point Gauss in `x` and in every
/// stochastic dimension.
pub fn project_initial_condition(disc: &Discretization, u0: &(dyn Fn(f64, &[f64]) -> Vector + Send + Sync)) -> Result<StateField> {
    let grid = &disc.grid;
    let qs = &disc.quadrature;
    let n = disc.n();
    let mut u = disc.zero_field();
    let half = 0.5 * GAUSS_ABSCISSA;
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let xc = grid.cell_center(i);
            let dx = grid.dx();
            let mut acc = [0.0; 3];
            for xa in [xc - half * dx, xc + half * dx] {
                for l in qs.cell_nodes(j) {
                    let v = u0(xa, qs.node(l));
                    let w = 0.5 * qs.measure_weight(l);
                    for p in 0..n {
                        acc[p] += v[p] * w;
                    }
                }
            }
            let mut cell = [0.0; 3];
            for p in 0..n {
                cell[p] = acc[p] / disc.measures.stochastic[j];
                u.set(i, j, p, cell[p]);
            }
            admissible(disc, &cell, i, j)?;
        }
    }
    Ok(u)
}

/// Step from a CFL number of 0.5 and the Davis speed of the initial averages.
pub fn cfl_initial_step(disc: &Discretization, u: &StateField) -> f64 {
    let mut smax: f64 = 0.0;
    for j in 0..u.ny() {
        for i in 0..u.nx() {
            let s = u.state(i, j);
            if let Ok(v) = disc.law.davis_wave_speed(&s, &s) {
                smax = smax.max(v);
            }
        }
    }
    let dx = disc.grid.dx();
    if smax > 0.0 {
        0.5 * dx / smax
    } else {
        0.5 * dx
    }
}

/// Integrates `dU/dt = rhs(U)` from `u0`, calling `on_frame` at each scheduled frame.
pub fn evolve<R, O>(
    disc: &Discretization,
    u0: &StateField,
    mut rhs: R,
    cfg: &IntegratorConfig,
    mut on_frame: O,
) -> Result<(StateField, IntegrationStats)>
where
    R: FnMut(&StateField, &mut StateField) -> Result<()>,
    O: FnMut(usize, StateField) -> Result<()>,
{
    let (nx, ny, n) = (u0.nx(), u0.ny(), u0.n());
    let mut cfg = cfg.clone();
    if cfg.initial_dt.is_none() {
        cfg.initial_dt = Some(cfl_initial_step(disc, u0));
    }
    let mut work_in = StateField::zeros(nx, ny, n);
    let mut work_out = StateField::zeros(nx, ny, n);
    let (y, stats) = integrate(
        u0.values(),
        |t, y, dy| {
            work_in.values_mut().copy_from_slice(y);
            work_in.t = t;
            rhs(&work_in, &mut work_out)?;
            dy.copy_from_slice(work_out.values());
            Ok(())
        },
        &cfg,
        |k, t, y| {
            let mut f = StateField::from_values(nx, ny, n, y.to_vec());
            f.t = t;
            on_frame(k, f)
        },
    )?;
    let mut fin = StateField::from_values(nx, ny, n, y);
    fin.t = cfg.t_final;
    Ok((fin, stats))
}

/// Output of a full-order run.
#[derive(Debug, Clone)]
pub struct FomRun {
    pub final_state: StateField,
    pub frames: Vec<StateField>,
    pub stats: IntegrationStats,
    pub flux_evaluations: u64,
}

/// Full-order SFV run with either reconstruction; frames are kept in memory.
pub fn run_fom(problem: &Problem, disc: &Discretization, method: Method, cfg: &IntegratorConfig) -> Result<FomRun> {
    let u0 = problem.initial_state(disc)?;
    let start = disc.flux_evaluations();
    let mut frames = Vec::with_capacity(cfg.frames.len());
    let collect = |_, f| {
        frames.push(f);
        Ok(())
    };
    let (final_state, stats) = match method {
        Method::FomState => evolve(disc, &u0, |u, out| rhs_state_reconstruction(disc, u, out), cfg, collect)?,
        Method::FomFlux | Method::Det1d => {
            evolve(disc, &u0, |u, out| rhs_flux_reconstruction(disc, u, out), cfg, collect)?
        }
        Method::Rom | Method::RomHr => {
            return Err(SfvError::config("reduced methods need a basis; use the rom module"));
        }
    };
    Ok(FomRun { final_state, frames, stats, flux_evaluations: disc.flux_evaluations() - start })
}
