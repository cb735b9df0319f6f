use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sfv::config::RunConfig;
use sfv::faer::Mat;
use sfv::io::{read_matrix, write_matrix, Manifest};
use sfv::SfvError;
use sfv_cli::exit_code;

fn sfv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfv")).args(args).output().expect("failed to launch sfv")
}

fn out_arg(dir: &Path) -> String {
    format!("output={}", dir.display())
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(code(&sfv(&["solve", "bogus_key=1", &out])), 2);
    assert_eq!(code(&sfv(&["solve", "method=rom", "nx=8", "ny=4,4", &out])), 2);
    assert_eq!(code(&sfv(&["solve", "problem=sod-narrow", "ny=4,4", &out])), 2);
    assert_eq!(code(&sfv(&["reproduce", "table9", &out])), 2);
}

#[test]
fn negative_pressure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    for method in ["method=fom-flux", "method=fom-state"] {
        let o = sfv(&[
            "solve", "problem=custom", "left=1,-2,0.4", "right=1,2,0.4", "x0=0.5", "slope=0", "nx=32", "ny=4",
            method, &out,
        ]);
        assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn missing_files_exit_with_5() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let missing = format!("fom_run={}", dir.path().join("nowhere").display());
    assert_eq!(code(&sfv(&["snapshots", "nx=8", "ny=3,3", "frames=2", &missing, &out])), 5);
    let cfg = format!("{}", dir.path().join("absent.cfg").display());
    assert_eq!(code(&sfv(&["solve", "-c", &cfg, &out])), 5);
    let garbage = dir.path().join("garbage.sfvm");
    fs::write(&garbage, b"not a matrix").unwrap();
    let basis = format!("basis={}", garbage.display());
    assert_eq!(code(&sfv(&["solve", "method=rom", "n_modes=2", "nx=8", "ny=3,3", &basis, &out])), 5);
}

#[test]
fn exit_code_mapping() {
    assert_eq!(exit_code(&SfvError::config("x")), 2);
    assert_eq!(exit_code(&SfvError::RankDeficient { requested: 3, rank: 1 }), 2);
    assert_eq!(exit_code(&SfvError::Numerical("x".into())), 4);
    assert_eq!(exit_code(&SfvError::format("x")), 5);
    let nested = SfvError::AtNode { node: 3, y: vec![0.1], source: Box::new(SfvError::format("x")) };
    assert_eq!(exit_code(&nested), 5);
}

#[test]
fn solve_outputs_are_bit_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        let o = sfv(&["solve", "nx=16", "ny=3,3", "t_final=0.1", &out_arg(d)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["stats.csv", "slice_y1.csv", "slice_y2.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let header = fs::read_to_string(a.path().join("stats.csv")).unwrap();
    assert!(header.starts_with("x,mean_u,std_u"));
    let summary = fs::read_to_string(a.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"method\""));

    let o = sfv(&["compare", a.path().to_str().unwrap(), b.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for line in text.lines() {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.0, "{line}");
    }
}

#[test]
fn written_config_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = sfv(&["solve", "problem=sod-narrow", "nx=12", "ny=4", "t_final=0.05", "epsilon=1e-5", &out_arg(a.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let written = a.path().join("config.txt");
    let cfg = RunConfig::read(&written).unwrap();
    assert_eq!(cfg.nx, 12);
    assert_eq!(cfg.epsilon, 1e-5);
    assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    let o = sfv(&["solve", "-c", written.to_str().unwrap(), &out_arg(b.path())]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(a.path().join("stats.csv")).unwrap(), fs::read(b.path().join("stats.csv")).unwrap());
}

#[test]
fn basis_of_a_rank_one_snapshot_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let rows = 4 * 4 * 4;
    let u: Vec<f64> = (0..rows).map(|l| 1.0 + l as f64).collect();
    let snap = Mat::from_fn(rows, 7, |r, c| u[r] * (c as f64 - 2.5));
    let path = dir.path().join("snap.sfvm");
    write_matrix(&path, snap.as_ref()).unwrap();
    let snaps = format!("snapshots={}", path.display());
    let out = out_arg(dir.path());
    let o = sfv(&["basis", "nx=8", "ny=4,4", "n_modes=1", "n_hyper=3", &snaps, &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_matrix(dir.path().join("basis.sfvm")).unwrap();
    assert_eq!((v.nrows(), v.ncols()), (rows, 1));
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    for r in 0..rows {
        assert!((v[(r, 0)] - u[r] / norm).abs() < 1e-12);
    }
    let m = Manifest::read(dir.path().join("basis.manifest")).unwrap();
    assert_eq!(m.get("N"), Some("1"));
    assert_eq!(m.get("N_H"), Some("3"));
    assert!(m.get("tail_energy").unwrap().parse::<f64>().unwrap() < 1e-20);
    assert_eq!(code(&sfv(&["basis", "nx=8", "ny=4,4", "n_modes=2", &snaps, &out])), 2);
}

#[test]
fn snapshot_basis_and_reduced_solves_chain_together() {
    let dir = tempfile::tempdir().unwrap();
    let fom = dir.path().join("fom");
    let common = ["nx=16", "ny=3,3", "t_final=0.2", "frames=5"];
    let run = |sub: &str, extra: &[String]| {
        let mut args: Vec<&str> = vec![sub];
        args.extend(common);
        args.extend(extra.iter().map(String::as_str));
        sfv(&args)
    };
    let o = run("solve", &[out_arg(&fom), "store_frames=true".into(), "method=fom-flux".into()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (s1, s2) = (dir.path().join("s1"), dir.path().join("s2"));
    assert_eq!(code(&run("snapshots", &[out_arg(&s1)])), 0);
    assert_eq!(code(&run("snapshots", &[out_arg(&s2), format!("fom_run={}", fom.display())])), 0);
    assert_eq!(fs::read(s1.join("snapshots.sfvm")).unwrap(), fs::read(s2.join("snapshots.sfvm")).unwrap());
    let m = Manifest::read(s1.join("snapshots.manifest")).unwrap();
    assert_eq!(m.get_usize("cols").unwrap(), 5 * 17);

    let snaps = format!("snapshots={}", s1.join("snapshots.sfvm").display());
    let b = dir.path().join("basis");
    assert_eq!(code(&run("basis", &[out_arg(&b), snaps, "n_modes=6".into(), "n_hyper=9".into()])), 0);
    let basis = format!("basis={}", b.join("basis.sfvm").display());
    for (method, sub) in [("method=rom", "rom"), ("method=rom-hr", "hr")] {
        let o = run("solve", &[out_arg(&dir.path().join(sub)), basis.clone(), method.into(), "n_modes=6".into(), "n_hyper=9".into()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = sfv(&["compare", dir.path().join("rom").to_str().unwrap(), fom.to_str().unwrap()]);
    let agg: f64 = String::from_utf8_lossy(&o.stdout).lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(agg < 0.05, "ROM error {agg}");
}
