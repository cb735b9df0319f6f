//! The `sfv` subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sfv::config::{RunConfig, SnapshotMode};
use sfv::faer::Mat;
use sfv::io::{read_csv, read_matrix, sha256_file, write_csv, write_matrix, Manifest, MatrixWriter, RunSummary};
use sfv::rom::{
    build_face_integrals, compute_pod, qdeim_select_with, run_hyper_reduced, run_rom, HyperReducedOperator, RomOperator,
};
use sfv::snapshots::{
    collect_intrusive, collect_nonintrusive, mesh_hash, run_fom_with_snapshots, snapshot_manifest, SnapshotFileWriter,
    SnapshotLayout, SnapshotMatrix,
};
use sfv::solver::{run_fom, Discretization, FomRun, Method, Problem, ProblemKind, StateField};
use sfv::stats::{field_stats, relative_l1, slice_cells, write_slice_csv, write_stats_csv, ErrorReport};
use sfv::{Result, SfvError};

use crate::experiments::{reconstruction_table, rom_study, write_reduced_csv, write_table_csv, RomStudy, TableRow};

fn prepare(cfg: &RunConfig) -> Result<Problem> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    fs::create_dir_all(&cfg.output)?;
    Ok(problem)
}

/// The problem and discretisation a run uses; `det-1d` freezes the parameter.
fn setup(cfg: &RunConfig, problem: Problem) -> Result<(Problem, Discretization)> {
    if cfg.method == Method::Det1d {
        let y: Vec<f64> = if cfg.y.is_empty() {
            problem.stochastic.iter().map(|i| 0.5 * (i.lo + i.hi)).collect()
        } else {
            cfg.y.clone()
        };
        let fixed = problem.at_parameter(&y);
        let disc = fixed.discretization(cfg.nx, &[], cfg.weno())?;
        return Ok((fixed, disc));
    }
    let disc = problem.discretization(cfg.nx, &cfg.ny, cfg.weno())?;
    Ok((problem, disc))
}

/// Basis columns `0..N` from a stored basis, or a fresh POD of stored snapshots.
fn load_basis(cfg: &RunConfig, disc: &Discretization, n: usize) -> Result<Mat<f64>> {
    let v = if let Some(path) = &cfg.basis {
        let v = read_matrix(path)?;
        if v.ncols() < n {
            return Err(SfvError::RankDeficient { requested: n, rank: v.ncols() });
        }
        v.subcols(0, n).to_owned()
    } else {
        let path = cfg.snapshots.as_ref().ok_or_else(|| SfvError::config("need 'basis' or 'snapshots'"))?;
        compute_pod(read_matrix(path)?.as_ref(), n)?.v
    };
    if v.nrows() != disc.quadrature.len() {
        return Err(SfvError::config(format!(
            "basis has {} rows but the stochastic mesh has {} quadrature nodes",
            v.nrows(),
            disc.quadrature.len()
        )));
    }
    Ok(v)
}

fn frames_manifest(disc: &Discretization, frames: &[StateField]) -> Manifest {
    let mut m = Manifest::new();
    let cells: Vec<String> = disc.grid.axes().iter().map(|a| a.cells.to_string()).collect();
    let times: Vec<String> = frames.iter().map(|f| format!("{:e}", f.t)).collect();
    m.set("kind", "frames")
        .set("nx", disc.grid.nx())
        .set("ny", cells.join(","))
        .set("n", disc.n())
        .set("frames", frames.len())
        .set("times", times.join(","))
        .set("mesh_hash", mesh_hash(disc));
    m
}

fn write_frames(dir: &Path, disc: &Discretization, frames: &[StateField]) -> Result<()> {
    let rows = frames.first().map_or(0, |f| f.values().len());
    let mut w = MatrixWriter::create(dir.join("frames.sfvm"), rows)?;
    for f in frames {
        w.push_column(f.values())?;
    }
    w.finish()?;
    frames_manifest(disc, frames).write(dir.join("frames.manifest"))
}

fn read_frames(dir: &Path, disc: &Discretization) -> Result<Vec<StateField>> {
    let m = Manifest::read(dir.join("frames.manifest"))?;
    if m.require("mesh_hash")? != mesh_hash(disc) {
        return Err(SfvError::config(format!("stored run in {} was computed on a different mesh", dir.display())));
    }
    let data = read_matrix(dir.join("frames.sfvm"))?;
    let times = m.get_f64_list("times")?;
    let (nx, ny, n) = (disc.grid.nx(), disc.grid.ny(), disc.n());
    if data.nrows() != nx * ny * n || data.ncols() != times.len() {
        return Err(SfvError::format("frame matrix does not match its manifest"));
    }
    Ok((0..data.ncols())
        .map(|c| {
            let mut f = StateField::from_values(nx, ny, n, data.col(c).iter().copied().collect());
            f.t = times[c];
            f
        })
        .collect())
}

fn summary(cfg: &RunConfig, problem: &Problem, disc: &Discretization, run: &FomRun, start: Instant) -> RunSummary {
    RunSummary {
        problem: cfg.problem.as_str().into(),
        nx: disc.grid.nx(),
        ny: disc.grid.axes().iter().map(|a| a.cells).collect(),
        q: disc.grid.q(),
        method: cfg.method.as_str().into(),
        n_modes: cfg.n_modes.filter(|_| matches!(cfg.method, Method::Rom | Method::RomHr)),
        n_hyper: cfg.n_hyper.filter(|_| cfg.method == Method::RomHr),
        t_final: cfg.t_final(problem),
        errors: BTreeMap::new(),
        flux_evaluations: run.flux_evaluations,
        accepted_steps: run.stats.accepted,
        rejected_steps: run.stats.rejected,
        wall_time_s: start.elapsed().as_secs_f64(),
        notes: Vec::new(),
    }
}

/// Runs the configured method and writes `stats.csv`, `slice_y<d>.csv`,
/// `summary.json` and the effective `config.txt` into the output directory.
pub fn solve(cfg: &RunConfig) -> Result<RunSummary> {
    let (problem, disc) = setup(cfg, prepare(cfg)?)?;
    let start = Instant::now();
    let frames = if cfg.store_frames { cfg.frames } else { 1 };
    let integ = cfg.integrator(&problem, frames);
    let mut notes = Vec::new();
    let run = match cfg.method {
        Method::FomState | Method::FomFlux | Method::Det1d => run_fom(&problem, &disc, cfg.method, &integ)?,
        Method::Rom => {
            let v = load_basis(cfg, &disc, cfg.n_modes.unwrap_or_default())?;
            run_rom(&problem, &disc, &RomOperator::new(v.as_ref(), &disc)?, &integ)?
        }
        Method::RomHr => {
            let v = load_basis(cfg, &disc, cfg.n_modes.unwrap_or_default())?;
            let nh = cfg.n_hyper.unwrap_or_default();
            let sel = qdeim_select_with(v.as_ref(), nh, &disc.quadrature, &disc.reconstructor, cfg.oversampling)?;
            notes.push(format!("closure of I: {} of {} stochastic cells", sel.closure.len(), disc.grid.ny()));
            notes.push(format!("cond(V[I,:]) = {:.6e}", sel.condition_number));
            run_hyper_reduced(&problem, &disc, &HyperReducedOperator::new(v.as_ref(), sel, &disc)?, &integ)?
        }
    };
    let out = &cfg.output;
    let names = disc.law.component_names();
    let stats = field_stats(&run.final_state, &disc.measures.stochastic)?;
    write_stats_csv(out.join("stats.csv"), &disc.grid, names, &stats)?;
    for d in 0..disc.grid.q() {
        let cells = slice_cells(&disc.grid, d, cfg.slice_y)?;
        let yc = disc.grid.axes()[d].center(disc.grid.nearest_cell_along(d, cfg.slice_y));
        notes.push(format!("slice_y{}.csv: nearest stochastic cell to y{} = {}, center {yc}", d + 1, d + 1, cfg.slice_y));
        write_slice_csv(out.join(format!("slice_y{}.csv", d + 1)), &disc.grid, names, &run.final_state, &cells)?;
    }
    if cfg.store_frames {
        write_frames(out, &disc, &run.frames)?;
    }
    fs::write(out.join("config.txt"), cfg.to_text())?;
    let mut s = summary(cfg, &problem, &disc, &run, start);
    s.notes = notes;
    s.write(out.join("summary.json"))?;
    Ok(s)
}

/// Builds the flux snapshot matrix and writes `snapshots.sfvm` with its manifest.
pub fn snapshots(cfg: &RunConfig) -> Result<(usize, usize)> {
    let problem = prepare(cfg)?;
    let disc = problem.discretization(cfg.nx, &cfg.ny, cfg.weno())?;
    let integ = cfg.integrator(&problem, cfg.frames);
    let path = cfg.output.join("snapshots.sfvm");
    let mode = cfg.snapshot_mode.as_str();
    let rows = disc.quadrature.len();
    let stored = |snap: SnapshotMatrix| -> Result<(usize, usize)> {
        write_matrix(&path, snap.data.as_ref())?;
        snap.manifest(&disc, mode).write(cfg.output.join("snapshots.manifest"))?;
        Ok((snap.data.nrows(), snap.data.ncols()))
    };
    match (cfg.snapshot_mode, &cfg.fom_run) {
        (SnapshotMode::NonIntrusive, _) => stored(collect_nonintrusive(&problem, &disc, &integ, cfg.dedup)?),
        (SnapshotMode::Intrusive, Some(dir)) => stored(collect_intrusive(&disc, &read_frames(dir, &disc)?, cfg.dedup)?),
        (SnapshotMode::Intrusive, None) => {
            let layout = SnapshotLayout { nx: cfg.nx, n: disc.n(), frames: cfg.frames, dedup: cfg.dedup };
            let mut w = SnapshotFileWriter::create(&path, layout, rows)?;
            run_fom_with_snapshots(&problem, &disc, &integ, &mut w, false)?;
            let times = w.finish()?;
            snapshot_manifest(&layout, &times, rows, &disc, mode).write(cfg.output.join("snapshots.manifest"))?;
            Ok((rows, layout.n_columns()))
        }
    }
}

/// POD basis `basis.sfvm`, singular values `sigma.csv`, face integrals
/// `face_integrals.sfvm`, optional Q-DEIM indices `qdeim.csv` and `basis.manifest`.
pub fn basis(cfg: &RunConfig) -> Result<usize> {
    let problem = prepare(cfg)?;
    let disc = problem.discretization(cfg.nx, &cfg.ny, cfg.weno())?;
    let snap_path = cfg.snapshots.as_ref().ok_or_else(|| SfvError::config("basis needs 'snapshots'"))?;
    let n = cfg.n_modes.ok_or_else(|| SfvError::config("basis needs 'n_modes'"))?;
    let snap = read_matrix(snap_path)?;
    if snap.nrows() != disc.quadrature.len() {
        return Err(SfvError::config(format!(
            "snapshots have {} rows but the stochastic mesh has {} quadrature nodes",
            snap.nrows(),
            disc.quadrature.len()
        )));
    }
    let pod = compute_pod(snap.as_ref(), n)?;
    let out = &cfg.output;
    write_matrix(out.join("basis.sfvm"), pod.v.as_ref())?;
    write_matrix(out.join("face_integrals.sfvm"), build_face_integrals(pod.v.as_ref(), &disc.quadrature)?.as_ref())?;
    let k: Vec<f64> = (1..=pod.singular_values.len()).map(|k| k as f64).collect();
    write_csv(out.join("sigma.csv"), &["k".into(), "sigma".into()], &[k, pod.singular_values.clone()])?;
    let mut m = Manifest::new();
    m.set("kind", "basis")
        .set("N", n)
        .set("q", disc.grid.q())
        .set("N_y", disc.grid.ny())
        .set("N_q", disc.quadrature.nodes_per_cell())
        .set("snapshot_hash", sha256_file(snap_path)?)
        .set("mesh_hash", mesh_hash(&disc))
        .set("tail_energy", format!("{:e}", pod.tail_energy()));
    if let Some(nh) = cfg.n_hyper {
        let sel = qdeim_select_with(pod.v.as_ref(), nh, &disc.quadrature, &disc.reconstructor, cfg.oversampling)?;
        let idx: Vec<f64> = sel.indices.iter().map(|&l| l as f64).collect();
        let owner: Vec<f64> = sel.indices.iter().map(|&l| disc.quadrature.owner_cell(l) as f64).collect();
        write_csv(out.join("qdeim.csv"), &["node".into(), "cell".into()], &[idx, owner])?;
        m.set("N_H", nh).set("closure", sel.closure.len()).set("condition", format!("{:e}", sel.condition_number));
    }
    m.write(out.join("basis.manifest"))?;
    Ok(n)
}

fn stats_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("stats.csv")
    } else {
        p.to_path_buf()
    }
}

/// Relative L1 difference of the means of run `a` against reference run `b`,
/// per component over matching `mean_*` columns. Assumes a uniform mesh.
pub fn compare(a: &Path, b: &Path) -> Result<Vec<(String, ErrorReport)>> {
    let ta = read_csv(stats_path(a))?;
    let tb = read_csv(stats_path(b))?;
    let (xa, xb) = (ta.column("x"), tb.column("x"));
    if xa.is_none() || xa != xb {
        return Err(SfvError::config("runs are not on the same physical mesh"));
    }
    let widths = vec![1.0; xa.map_or(0, <[f64]>::len)];
    let mut out = Vec::new();
    let (mut num, mut den) = (Vec::new(), Vec::new());
    for name in ta.header.iter().filter(|h| h.starts_with("mean_")) {
        let cb = tb.column(name).ok_or_else(|| SfvError::config(format!("reference run lacks '{name}'")))?;
        let ca = ta.column(name).unwrap_or_default();
        out.push((name.clone(), relative_l1(ca, cb, &widths)?));
        num.extend_from_slice(ca);
        den.extend_from_slice(cb);
    }
    if out.is_empty() {
        return Err(SfvError::format("no mean columns to compare"));
    }
    out.push(("aggregate".into(), relative_l1(&num, &den, &vec![1.0; num.len()])?));
    Ok(out)
}

pub const EXPERIMENTS: &[&str] = &["table1", "table2", "burgers-rom-sweep", "sod-rom-sweep"];

fn print_table(rows: &[TableRow]) {
    println!("{:>8} {:>12} {:>8} {:>8}", "N_y", "error", "ratio", "log2");
    for r in rows {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
        println!("{:>8} {:>12.4e} {:>8} {:>8}", r.ny, r.error, f(r.ratio), f(r.order));
    }
}

fn print_study(s: &RomStudy) {
    println!("snapshots {}x{}, FOM TV {:.6}", s.snapshot_shape.0, s.snapshot_shape.1, s.fom_tv);
    for r in &s.rom {
        match &r.failure {
            None => println!("N = {:>4}: error {:.4e}, TV {:.6}", r.size, r.error, r.tv),
            Some(e) => println!("N = {:>4}: failed ({e})", r.size),
        }
    }
    for r in &s.hr {
        match &r.failure {
            None => println!(
                "N_H = {:>4}: error {:.4e}, closure {}, evals/RHS {:.0} (full {:.0})",
                r.size,
                r.error,
                r.closure.unwrap_or_default(),
                r.evals_per_rhs,
                s.fom_evals_per_rhs
            ),
            Some(e) => println!("N_H = {:>4}: failed ({e})", r.size),
        }
    }
}

fn study_manifest(s: &RomStudy) -> Manifest {
    let mut m = Manifest::new();
    m.set("nx", s.nx)
        .set("N_y", s.ny)
        .set("snapshot_rows", s.snapshot_shape.0)
        .set("snapshot_cols", s.snapshot_shape.1)
        .set("fom_tv", format!("{:e}", s.fom_tv))
        .set("fom_evals_per_rhs", s.fom_evals_per_rhs);
    if let Some(n) = s.hr_modes {
        m.set("hr_modes", n);
    }
    m
}

fn sweep_or(cfg: &RunConfig, default: &[usize]) -> Vec<usize> {
    if cfg.sweep.is_empty() {
        default.to_vec()
    } else {
        cfg.sweep.clone()
    }
}

/// Runs a named experiment protocol and writes its CSV files.
pub fn reproduce(id: &str, cfg: &RunConfig) -> Result<()> {
    let mut cfg = cfg.clone();
    let out = cfg.output.clone();
    let with_problem = |cfg: &mut RunConfig, kind: ProblemKind, ny: Vec<usize>| -> Result<Problem> {
        cfg.problem = kind;
        cfg.ny = ny;
        cfg.method = Method::FomFlux;
        prepare(cfg)
    };
    match id {
        "table1" | "table2" => {
            let (kind, nx, default) = if id == "table1" {
                (ProblemKind::BurgersSine, 64, vec![4, 8, 16, 32])
            } else {
                (ProblemKind::SodNarrow, 128, vec![4, 8, 16, 32, 64])
            };
            let q = if id == "table1" { 2 } else { 1 };
            let problem = with_problem(&mut cfg, kind, vec![4; q])?;
            let rows = reconstruction_table(&cfg, &problem, nx, &sweep_or(&cfg, &default))?;
            print_table(&rows);
            write_table_csv(out.join(format!("{id}.csv")), &rows)
        }
        "burgers-rom-sweep" => {
            let problem = with_problem(&mut cfg, ProblemKind::BurgersSine, vec![32, 32])?;
            let modes = sweep_or(&cfg, &[5, 10, 20, 30, 40, 50]);
            let study = rom_study(&cfg, &problem, 64, &[32, 32], &modes, Some((50, &[50, 75, 100, 150])))?;
            print_study(&study);
            write_reduced_csv(out.join("burgers_rom_sweep.csv"), "N", &study.rom)?;
            write_reduced_csv(out.join("burgers_hr_sweep.csv"), "N_H", &study.hr)?;
            study_manifest(&study).write(out.join("burgers_rom_sweep.manifest"))
        }
        "sod-rom-sweep" => {
            let problem = with_problem(&mut cfg, ProblemKind::SodNarrow, vec![32])?;
            let modes = sweep_or(&cfg, &[4, 8, 12, 16, 24, 32]);
            let study = rom_study(&cfg, &problem, 128, &[32], &modes, None)?;
            print_study(&study);
            write_reduced_csv(out.join("sod_rom_sweep.csv"), "N", &study.rom)?;
            study_manifest(&study).write(out.join("sod_rom_sweep.manifest"))
        }
        _ => Err(SfvError::config(format!("unknown experiment '{id}' (known: {})", EXPERIMENTS.join(", ")))),
    }
}
