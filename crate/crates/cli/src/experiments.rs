//! Experiment protocols shared by `reproduce` and the acceptance suite.

use std::path::Path;

use sfv::config::RunConfig;
use sfv::io::write_csv;
use sfv::rom::{compute_pod, qdeim_select_with, run_hyper_reduced, run_rom, HyperReducedOperator, RomOperator};
use sfv::snapshots::{run_fom_with_snapshots, SnapshotAssembler, SnapshotLayout, SnapshotSink};
use sfv::solver::{rhs_flux_reconstruction, run_fom, FomRun, Method, Problem};
use sfv::stats::{error_ratio, convergence_order, mean, relative_l1, total_variation};
use sfv::{Result, SfvError};

/// One resolution of a state-vs-flux reconstruction table.
#[derive(Debug, Clone)]
pub struct TableRow {
    /// Stochastic cells per dimension.
    pub cells: usize,
    pub ny: usize,
    /// Relative L1 error of the flux-reconstruction mean against the state-reconstruction mean.
    pub error: f64,
    /// `e(previous) / e(this)`.
    pub ratio: Option<f64>,
    /// `log2` of `ratio`.
    pub order: Option<f64>,
    pub state_evals_per_rhs: f64,
    pub flux_evals_per_rhs: f64,
}

fn evals_per_rhs(run: &FomRun) -> f64 {
    run.flux_evaluations as f64 / run.stats.rhs_evaluations as f64
}

/// Runs both full-order methods at each resolution in `sweep`.
pub fn reconstruction_table(cfg: &RunConfig, problem: &Problem, nx: usize, sweep: &[usize]) -> Result<Vec<TableRow>> {
    let integ = cfg.integrator(problem, 1);
    let mut rows: Vec<TableRow> = Vec::new();
    for &c in sweep {
        let cells = vec![c; problem.q()];
        let disc = problem.discretization(nx, &cells, cfg.weno())?;
        let state = run_fom(problem, &disc, Method::FomState, &integ)?;
        let flux = run_fom(problem, &disc, Method::FomFlux, &integ)?;
        let ms = mean(&state.final_state, &disc.measures.stochastic)?;
        let mf = mean(&flux.final_state, &disc.measures.stochastic)?;
        let error = relative_l1(&mf, &ms, &disc.grid.physical_widths())?.aggregate;
        let prev = rows.last().map(|r| r.error);
        log::info!("N_y = {}: error {error:.4e}", disc.grid.ny());
        rows.push(TableRow {
            cells: c,
            ny: disc.grid.ny(),
            error,
            ratio: prev.and_then(|p| error_ratio(p, error)),
            order: prev.and_then(|p| convergence_order(p, error)),
            state_evals_per_rhs: evals_per_rhs(&state),
            flux_evals_per_rhs: evals_per_rhs(&flux),
        });
    }
    Ok(rows)
}

pub fn write_table_csv(path: impl AsRef<Path>, rows: &[TableRow]) -> Result<()> {
    let header: Vec<String> = ["cells_per_dim", "Ny", "error", "ratio", "order", "state_evals_per_rhs", "flux_evals_per_rhs"]
        .map(String::from)
        .to_vec();
    let nan = f64::NAN;
    let columns = vec![
        rows.iter().map(|r| r.cells as f64).collect(),
        rows.iter().map(|r| r.ny as f64).collect(),
        rows.iter().map(|r| r.error).collect(),
        rows.iter().map(|r| r.ratio.unwrap_or(nan)).collect(),
        rows.iter().map(|r| r.order.unwrap_or(nan)).collect(),
        rows.iter().map(|r| r.state_evals_per_rhs).collect(),
        rows.iter().map(|r| r.flux_evals_per_rhs).collect(),
    ];
    write_csv(path, &header, &columns)
}

/// Outcome of one reduced run.
#[derive(Debug, Clone)]
pub struct ReducedRow {
    /// `N` for plain ROM rows, `N_H` for hyper-reduced rows.
    pub size: usize,
    /// Relative L1 error of the mean against the flux-reconstruction FOM.
    pub error: f64,
    /// Total variation of the first component's mean.
    pub tv: f64,
    pub evals_per_rhs: f64,
    /// Closure size and `cond(V[I,:])`, hyper-reduced rows only.
    pub closure: Option<usize>,
    pub condition: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RomStudy {
    pub nx: usize,
    pub ny: usize,
    pub snapshot_shape: (usize, usize),
    pub singular_values: Vec<f64>,
    pub fom_tv: f64,
    /// Flux evaluations of one flux-reconstruction RHS.
    pub fom_evals_per_rhs: f64,
    pub rom: Vec<ReducedRow>,
    /// Hyper-reduced runs with `hr_modes` modes.
    pub hr_modes: Option<usize>,
    pub hr: Vec<ReducedRow>,
}

/// Flux-reconstruction FOM with `cfg.frames` intrusive snapshot frames, a POD
/// basis, ROM runs for each `N` in `modes` and hyper-reduced runs with `hr.0`
/// modes for each `N_H` in `hr.1`.
pub fn rom_study(
    cfg: &RunConfig,
    problem: &Problem,
    nx: usize,
    cells: &[usize],
    modes: &[usize],
    hr: Option<(usize, &[usize])>,
) -> Result<RomStudy> {
    let disc = problem.discretization(nx, cells, cfg.weno())?;
    let integ = cfg.integrator(problem, cfg.frames);
    let layout = SnapshotLayout { nx, n: disc.n(), frames: cfg.frames, dedup: cfg.dedup };
    let mut asm = SnapshotAssembler::new(layout, disc.quadrature.len());
    let fom = run_fom_with_snapshots(problem, &disc, &integ, &mut asm as &mut dyn SnapshotSink, false)?;
    let snap = asm.finish()?;
    // the run's own counter also includes the snapshot traces
    let mut out = disc.zero_field();
    disc.reset_flux_counter();
    rhs_flux_reconstruction(&disc, &fom.final_state, &mut out)?;
    let fom_evals_per_rhs = disc.flux_evaluations() as f64;
    let reference = mean(&fom.final_state, &disc.measures.stochastic)?;
    let widths = disc.grid.physical_widths();
    let n_max = modes.iter().copied().chain(hr.map(|h| h.0)).max().ok_or_else(|| SfvError::config("no mode counts"))?;
    log::info!("snapshots {}x{}, POD with {n_max} modes", snap.data.nrows(), snap.data.ncols());
    let basis = compute_pod(snap.data.as_ref(), n_max)?;
    let once = cfg.integrator(problem, 1);
    let measure = |run: Result<FomRun>, size: usize| -> Result<ReducedRow> {
        let mut row =
            ReducedRow { size, error: f64::NAN, tv: f64::NAN, evals_per_rhs: f64::NAN, closure: None, condition: None, failure: None };
        match run {
            Ok(r) => {
                let m = mean(&r.final_state, &disc.measures.stochastic)?;
                row.error = relative_l1(&m, &reference, &widths)?.aggregate;
                row.tv = total_variation(&m[..nx]);
                row.evals_per_rhs = evals_per_rhs(&r);
            }
            Err(e) => row.failure = Some(e.to_string()),
        }
        Ok(row)
    };
    let mut rom = Vec::new();
    for &n in modes {
        let op = RomOperator::new(basis.v.subcols(0, n), &disc)?;
        let row = measure(run_rom(problem, &disc, &op, &once), n)?;
        log::info!("ROM N = {n}: error {:.4e}", row.error);
        rom.push(row);
    }
    let mut hr_rows = Vec::new();
    if let Some((n, sweep)) = hr {
        let v = basis.v.subcols(0, n);
        for &nh in sweep {
            let sel = qdeim_select_with(v, nh, &disc.quadrature, &disc.reconstructor, cfg.oversampling)?;
            let (closure, condition) = (sel.closure.len(), sel.condition_number);
            let op = HyperReducedOperator::new(v, sel, &disc)?;
            let mut row = measure(run_hyper_reduced(problem, &disc, &op, &once), nh)?;
            row.closure = Some(closure);
            row.condition = Some(condition);
            log::info!("HR N = {n}, N_H = {nh}: error {:.4e}", row.error);
            hr_rows.push(row);
        }
    }
    Ok(RomStudy {
        nx,
        ny: disc.grid.ny(),
        snapshot_shape: (snap.data.nrows(), snap.data.ncols()),
        singular_values: basis.singular_values,
        fom_tv: total_variation(&reference[..nx]),
        fom_evals_per_rhs,
        rom,
        hr_modes: hr.map(|h| h.0),
        hr: hr_rows,
    })
}

pub fn write_reduced_csv(path: impl AsRef<Path>, size: &str, rows: &[ReducedRow]) -> Result<()> {
    let header: Vec<String> = [size, "error", "tv", "evals_per_rhs", "closure", "condition"].map(String::from).to_vec();
    let nan = f64::NAN;
    let columns = vec![
        rows.iter().map(|r| r.size as f64).collect(),
        rows.iter().map(|r| r.error).collect(),
        rows.iter().map(|r| r.tv).collect(),
        rows.iter().map(|r| r.evals_per_rhs).collect(),
        rows.iter().map(|r| r.closure.map_or(nan, |c| c as f64)).collect(),
        rows.iter().map(|r| r.condition.unwrap_or(nan)).collect(),
    ];
    write_csv(path, &header, &columns)
}
