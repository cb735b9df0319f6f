//! Flux snapshot matrices, collected from SFV runs or from decoupled
//! deterministic runs at the quadrature nodes.

use std::path::{Path, PathBuf};

use faer::Mat;
use rayon::prelude::*;

use crate::error::{Result, SfvError};
use crate::io::{sha256_hex, Manifest, MatrixWriter};
use crate::solver::{
    evolve, flux_reconstruction_trace, interface_fluxes, rhs_flux_reconstruction,
    Discretization, FluxTrace, FomRun, IntegratorConfig, Problem, StateField,
};
use crate::weno::{reconstruct_physical, WenoParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `F̃_{+1/2}`: right interface of the cell.
    Plus,
    /// `F̃_{−1/2}`: left interface of the cell.
    Minus,
}

/// Provenance of one snapshot column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnMeta {
    pub frame: usize,
    pub component: usize,
    pub side: Side,
    pub cell: usize,
}

impl ColumnMeta {
    /// Physical interface index `k` (interface `x_{k−1/2}`).
    pub fn interface(&self) -> usize {
        match self.side {
            Side::Plus => self.cell + 1,
            Side::Minus => self.cell,
        }
    }
}

/// Column layout `[F̃_{+1/2} | F̃_{−1/2}]`, each block frame-major, then
/// component, then cell. With `dedup` the minus block keeps only cell 0, since
/// every other `F̃_{i−1/2}` column repeats `F̃_{(i−1)+1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnapshotLayout {
    pub nx: usize,
    pub n: usize,
    pub frames: usize,
    pub dedup: bool,
}

impl SnapshotLayout {
    fn minus_cells(&self) -> usize {
        if self.dedup {
            1
        } else {
            self.nx
        }
    }

    pub fn n_columns(&self) -> usize {
        self.frames * self.n * (self.nx + self.minus_cells())
    }

    pub fn columns(&self) -> Vec<ColumnMeta> {
        let mut out = Vec::with_capacity(self.n_columns());
        for (side, cells) in [(Side::Plus, self.nx), (Side::Minus, self.minus_cells())] {
            for frame in 0..self.frames {
                for component in 0..self.n {
                    for cell in 0..cells {
                        out.push(ColumnMeta { frame, component, side, cell });
                    }
                }
            }
        }
        out
    }

    /// Column holding the flux for `(frame, component, side, cell)`, resolving removed duplicates.
    pub fn column_of(&self, frame: usize, component: usize, side: Side, cell: usize) -> Option<usize> {
        if frame >= self.frames || component >= self.n || cell >= self.nx {
            return None;
        }
        let plus = |c: usize| (frame * self.n + component) * self.nx + c;
        match side {
            Side::Plus => Some(plus(cell)),
            Side::Minus if self.dedup && cell > 0 => Some(plus(cell - 1)),
            Side::Minus => {
                let base = self.frames * self.n * self.nx;
                Some(base + (frame * self.n + component) * self.minus_cells() + cell)
            }
        }
    }
}

/// `N_q·N_y × cols` flux snapshots with column provenance and frame times.
#[derive(Debug, Clone)]
pub struct SnapshotMatrix {
    pub data: Mat<f64>,
    pub layout: SnapshotLayout,
    pub times: Vec<f64>,
}

impl SnapshotMatrix {
    pub fn columns(&self) -> Vec<ColumnMeta> {
        self.layout.columns()
    }

    pub fn manifest(&self, disc: &Discretization, mode: &str) -> Manifest {
        snapshot_manifest(&self.layout, &self.times, self.data.nrows(), disc, mode)
    }
}

/// Metadata sidecar for a snapshot file.
pub fn snapshot_manifest(layout: &SnapshotLayout, times: &[f64], rows: usize, disc: &Discretization, mode: &str) -> Manifest {
    let join = |v: &[f64]| v.iter().map(|t| format!("{t:e}")).collect::<Vec<_>>().join(",");
    let mut m = Manifest::new();
    m.set("kind", "snapshots")
        .set("mode", mode)
        .set("rows", rows)
        .set("cols", layout.n_columns())
        .set("nx", layout.nx)
        .set("n", layout.n)
        .set("frames", layout.frames)
        .set("dedup", layout.dedup)
        .set("q", disc.grid.q())
        .set("N_y", disc.grid.ny())
        .set("N_q", disc.quadrature.nodes_per_cell())
        .set("times", join(times))
        .set("mesh_hash", mesh_hash(disc));
    m
}

/// SHA-256 of a textual description of the physical mesh and quadrature nodes.
pub fn mesh_hash(disc: &Discretization) -> String {
    let g = &disc.grid;
    let mut s = format!("{:e},{:e},{}", g.physical().lo, g.physical().hi, g.nx());
    for a in g.axes() {
        s += &format!(";{:e},{:e},{}", a.interval.lo, a.interval.hi, a.cells);
    }
    for l in 0..disc.quadrature.len() {
        for y in disc.quadrature.node(l) {
            s += &format!(",{y:e}");
        }
    }
    sha256_hex(s.as_bytes())
}

impl SnapshotLayout {
    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        let dedup = match m.require("dedup")? {
            "true" => true,
            "false" => false,
            v => return Err(SfvError::format(format!("manifest 'dedup' must be true/false, got '{v}'"))),
        };
        Ok(Self { nx: m.get_usize("nx")?, n: m.get_usize("n")?, frames: m.get_usize("frames")?, dedup })
    }
}

/// Receives one flux trace per frame.
pub trait SnapshotSink {
    fn push_trace(&mut self, t: f64, trace: &FluxTrace) -> Result<()>;
}

fn check_trace(layout: &SnapshotLayout, rows: usize, trace: &FluxTrace, pushed: usize) -> Result<()> {
    if trace.nx != layout.nx || trace.n != layout.n || trace.nodes != rows {
        return Err(SfvError::config("flux trace does not match the snapshot layout"));
    }
    if pushed >= layout.frames {
        return Err(SfvError::config(format!("more than {} frames pushed", layout.frames)));
    }
    Ok(())
}

/// Builds a snapshot matrix in memory.
pub struct SnapshotAssembler {
    layout: SnapshotLayout,
    rows: usize,
    plus: Vec<f64>,
    minus: Vec<f64>,
    times: Vec<f64>,
}

impl SnapshotAssembler {
    pub fn new(layout: SnapshotLayout, rows: usize) -> Self {
        Self { layout, rows, plus: Vec::new(), minus: Vec::new(), times: Vec::new() }
    }

    pub fn finish(self) -> Result<SnapshotMatrix> {
        if self.times.len() != self.layout.frames {
            return Err(SfvError::config(format!(
                "expected {} frames, got {}",
                self.layout.frames,
                self.times.len()
            )));
        }
        let rows = self.rows;
        let np = self.plus.len() / rows.max(1);
        let data = Mat::from_fn(rows, self.layout.n_columns(), |r, c| {
            if c < np {
                self.plus[c * rows + r]
            } else {
                self.minus[(c - np) * rows + r]
            }
        });
        Ok(SnapshotMatrix { data, layout: self.layout, times: self.times })
    }
}

impl SnapshotSink for SnapshotAssembler {
    fn push_trace(&mut self, t: f64, trace: &FluxTrace) -> Result<()> {
        check_trace(&self.layout, self.rows, trace, self.times.len())?;
        for p in 0..self.layout.n {
            self.plus.extend_from_slice(trace.plus(p));
            let m = trace.minus(p);
            self.minus.extend_from_slice(&m[..self.layout.minus_cells() * self.rows]);
        }
        self.times.push(t);
        Ok(())
    }
}

/// Streams snapshot columns to disk: plus columns go straight to the target,
/// minus columns to a sidecar that is appended on [`finish`](Self::finish).
pub struct SnapshotFileWriter {
    layout: SnapshotLayout,
    main: MatrixWriter,
    minus: MatrixWriter,
    minus_path: PathBuf,
    times: Vec<f64>,
}

impl SnapshotFileWriter {
    pub fn create(path: impl AsRef<Path>, layout: SnapshotLayout, rows: usize) -> Result<Self> {
        let path = path.as_ref();
        let mut minus_path = path.as_os_str().to_owned();
        minus_path.push(".minus.tmp");
        let minus_path = PathBuf::from(minus_path);
        Ok(Self {
            layout,
            main: MatrixWriter::create(path, rows)?,
            minus: MatrixWriter::create(&minus_path, rows)?,
            minus_path,
            times: Vec::new(),
        })
    }

    /// Completes the file and returns the frame times.
    pub fn finish(mut self) -> Result<Vec<f64>> {
        if self.times.len() != self.layout.frames {
            return Err(SfvError::config(format!(
                "expected {} frames, got {}",
                self.layout.frames,
                self.times.len()
            )));
        }
        self.minus.finish()?;
        self.main.append_file(&self.minus_path)?;
        self.main.finish()?;
        std::fs::remove_file(&self.minus_path)?;
        Ok(self.times)
    }
}

impl SnapshotSink for SnapshotFileWriter {
    fn push_trace(&mut self, t: f64, trace: &FluxTrace) -> Result<()> {
        let rows = self.main.rows();
        check_trace(&self.layout, rows, trace, self.times.len())?;
        for p in 0..self.layout.n {
            for col in trace.plus(p).chunks(rows) {
                self.main.push_column(col)?;
            }
            for col in trace.minus(p).chunks(rows).take(self.layout.minus_cells()) {
                self.minus.push_column(col)?;
            }
        }
        self.times.push(t);
        Ok(())
    }
}

/// Snapshots from stored SFV frames (flux reconstruction applied to each state).
pub fn collect_intrusive(disc: &Discretization, frames: &[StateField], dedup: bool) -> Result<SnapshotMatrix> {
    let layout = SnapshotLayout { nx: disc.grid.nx(), n: disc.n(), frames: frames.len(), dedup };
    let mut asm = SnapshotAssembler::new(layout, disc.quadrature.len());
    for f in frames {
        asm.push_trace(f.t, &flux_reconstruction_trace(disc, f)?)?;
    }
    asm.finish()
}

/// Flux-reconstruction SFV run that feeds each frame's trace to `sink`.
pub fn run_fom_with_snapshots(
    problem: &Problem,
    disc: &Discretization,
    cfg: &IntegratorConfig,
    sink: &mut dyn SnapshotSink,
    keep_frames: bool,
) -> Result<FomRun> {
    let u0 = problem.initial_state(disc)?;
    let start = disc.flux_evaluations();
    let mut frames = Vec::new();
    let (final_state, stats) = evolve(disc, &u0, |u, out| rhs_flux_reconstruction(disc, u, out), cfg, |_, f| {
        sink.push_trace(f.t, &flux_reconstruction_trace(disc, &f)?)?;
        if keep_frames {
            frames.push(f);
        }
        Ok(())
    })?;
    Ok(FomRun { final_state, frames, stats, flux_evaluations: disc.flux_evaluations() - start })
}

/// A finite-volume run with the parameter frozen at `y`.
#[derive(Debug, Clone)]
pub struct DeterministicRun {
    pub y: Vec<f64>,
    pub frames: Vec<StateField>,
    /// Numerical fluxes per frame, stored `[p][k]` with `k = 0..=N_x`.
    pub fluxes: Vec<Vec<f64>>,
}

/// Deterministic WENO finite-volume solve on the physical mesh at parameter `y`.
pub fn run_deterministic_1d(
    problem: &Problem,
    nx: usize,
    y: &[f64],
    weno: WenoParams,
    cfg: &IntegratorConfig,
) -> Result<DeterministicRun> {
    let fixed = problem.at_parameter(y);
    let disc = fixed.discretization(nx, &[], weno)?;
    let u0 = fixed.initial_state(&disc)?;
    let mut frames = Vec::with_capacity(cfg.frames.len());
    let mut fluxes = Vec::with_capacity(cfg.frames.len());
    evolve(&disc, &u0, |u, out| rhs_flux_reconstruction(&disc, u, out), cfg, |_, f| {
        let states = reconstruct_physical(&f, disc.boundary, &disc.weno);
        fluxes.push(interface_fluxes(&disc, &states, None)?.values);
        frames.push(f);
        Ok(())
    })?;
    Ok(DeterministicRun { y: y.to_vec(), frames, fluxes })
}

/// Snapshots from one deterministic run per quadrature node of `disc`; row `l`
/// holds the numerical fluxes of the run at `y_l`.
pub fn collect_nonintrusive(
    problem: &Problem,
    disc: &Discretization,
    cfg: &IntegratorConfig,
    dedup: bool,
) -> Result<SnapshotMatrix> {
    let nx = disc.grid.nx();
    let qs = &disc.quadrature;
    let layout = SnapshotLayout { nx, n: disc.n(), frames: cfg.frames.len(), dedup };
    let columns = layout.columns();
    let results: Vec<Result<Vec<f64>>> = (0..qs.len())
        .into_par_iter()
        .map(|l| {
            let y = qs.node(l);
            let run = run_deterministic_1d(problem, nx, y, disc.weno, cfg)
                .map_err(|e| SfvError::AtNode { node: l, y: y.to_vec(), source: Box::new(e) })?;
            Ok(columns
                .iter()
                .map(|c| run.fluxes[c.frame][c.component * (nx + 1) + c.interface()])
                .collect())
        })
        .collect();
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let data = Mat::from_fn(rows.len(), columns.len(), |r, c| rows[r][c]);
    Ok(SnapshotMatrix { data, layout, times: cfg.frames.times().to_vec() })
}
