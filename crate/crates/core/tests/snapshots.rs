use sfv::io::{matrix_from_bytes, matrix_to_bytes, read_matrix};
use sfv::snapshots::{
    collect_intrusive, collect_nonintrusive, run_deterministic_1d, run_fom_with_snapshots, Side, SnapshotFileWriter,
    SnapshotLayout, SnapshotSink,
};
use sfv::solver::{run_fom, IntegratorConfig, Method, Problem};
use sfv::weno::WenoParams;

#[test]
fn intrusive_and_nonintrusive_shapes() {
    let problem = Problem::burgers_sine();
    let disc = problem.discretization(8, &[4, 4], WenoParams::default()).unwrap();
    let cfg = IntegratorConfig::new(0.1, 3);
    let run = run_fom(&problem, &disc, Method::FomFlux, &cfg).unwrap();
    assert_eq!(run.frames.len(), 3);
    for (dedup, cols) in [(false, 48), (true, 27)] {
        let intr = collect_intrusive(&disc, &run.frames, dedup).unwrap();
        assert_eq!((intr.data.nrows(), intr.data.ncols()), (64, cols));
        let non = collect_nonintrusive(&problem, &disc, &cfg, dedup).unwrap();
        assert_eq!((non.data.nrows(), non.data.ncols()), (64, cols));
        assert_eq!(intr.layout, non.layout);
    }
}

#[test]
fn deduplicated_columns_agree_with_the_full_matrix() {
    let problem = Problem::sod_narrow();
    let disc = problem.discretization(6, &[4], WenoParams::default()).unwrap();
    let run = run_fom(&problem, &disc, Method::FomFlux, &IntegratorConfig::new(0.05, 2)).unwrap();
    let full = collect_intrusive(&disc, &run.frames, false).unwrap();
    let dedup = collect_intrusive(&disc, &run.frames, true).unwrap();
    for f in 0..2 {
        for p in 0..3 {
            for i in 0..6 {
                for side in [Side::Plus, Side::Minus] {
                    let a = full.layout.column_of(f, p, side, i).unwrap();
                    let b = dedup.layout.column_of(f, p, side, i).unwrap();
                    for r in 0..full.data.nrows() {
                        assert_eq!(full.data[(r, a)], dedup.data[(r, b)]);
                    }
                }
            }
        }
    }
}

#[test]
fn nonintrusive_rows_are_deterministic_runs_at_the_nodes() {
    let problem = Problem::sod_narrow();
    let disc = problem.discretization(10, &[3], WenoParams::default()).unwrap();
    let cfg = IntegratorConfig::new(0.05, 2);
    let snap = collect_nonintrusive(&problem, &disc, &cfg, true).unwrap();
    for l in [0, 4] {
        let det = run_deterministic_1d(&problem, 10, disc.quadrature.node(l), disc.weno, &cfg).unwrap();
        for (c, meta) in snap.columns().iter().enumerate() {
            let want = det.fluxes[meta.frame][meta.component * 11 + meta.interface()];
            assert_eq!(snap.data[(l, c)], want);
        }
    }
}

#[test]
fn streamed_snapshots_match_in_memory_assembly() {
    let problem = Problem::burgers_sine();
    let disc = problem.discretization(8, &[3, 3], WenoParams::default()).unwrap();
    let cfg = IntegratorConfig::new(0.1, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snap.sfvm");
    let layout = SnapshotLayout { nx: 8, n: 1, frames: 4, dedup: true };
    let mut writer = SnapshotFileWriter::create(&path, layout, disc.quadrature.len()).unwrap();
    let run = run_fom_with_snapshots(&problem, &disc, &cfg, &mut writer as &mut dyn SnapshotSink, true).unwrap();
    writer.finish().unwrap();
    let on_disk = read_matrix(&path).unwrap();
    let mem = collect_intrusive(&disc, &run.frames, true).unwrap();
    assert_eq!(matrix_to_bytes(on_disk.as_ref()), matrix_to_bytes(mem.data.as_ref()));
    assert_eq!(matrix_from_bytes(&matrix_to_bytes(mem.data.as_ref())).unwrap(), mem.data);
    assert!(!dir.path().join("snap.sfvm.minus.tmp").exists());
}

#[test]
fn reruns_are_bit_identical() {
    let problem = Problem::burgers_sine();
    let disc = problem.discretization(8, &[3, 3], WenoParams::default()).unwrap();
    let cfg = IntegratorConfig::new(0.2, 3);
    let a = collect_nonintrusive(&problem, &disc, &cfg, true).unwrap();
    let b = collect_nonintrusive(&problem, &disc, &cfg, true).unwrap();
    assert_eq!(matrix_to_bytes(a.data.as_ref()), matrix_to_bytes(b.data.as_ref()));
    let r1 = run_fom(&problem, &disc, Method::FomFlux, &cfg).unwrap();
    let r2 = run_fom(&problem, &disc, Method::FomFlux, &cfg).unwrap();
    assert_eq!(r1.final_state.values(), r2.final_state.values());
}

#[test]
fn deterministic_sod_stays_physical() {
    let problem = Problem::sod_narrow();
    let cfg = IntegratorConfig::new(problem.t_final, 1);
    let run = run_deterministic_1d(&problem, 128, &[0.5], WenoParams::default(), &cfg).unwrap();
    let u = run.frames.last().unwrap();
    for i in 0..128 {
        let s = u.state(i, 0);
        let (rho, m, e) = (s[0], s[1], s[2]);
        let p = 0.4 * (e - 0.5 * m * m / rho);
        assert!(rho > 0.125 - 1e-2 && rho < 1.0 + 1e-2, "rho[{i}] = {rho}");
        assert!(p > 0.0, "p[{i}] = {p}");
    }
}
