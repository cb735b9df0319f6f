//! Run configuration: flat `key = value` text with `#` comments, plus overrides.

use std::path::PathBuf;

use crate::error::{Result, SfvError};
use crate::io::Manifest;
use crate::rom::Oversampling;
use crate::solver::{IntegratorConfig, Method, Problem, ProblemKind};
use crate::weno::{StochasticScheme, WenoParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotMode {
    Intrusive,
    NonIntrusive,
}

impl SnapshotMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "intrusive" => Ok(Self::Intrusive),
            "non-intrusive" => Ok(Self::NonIntrusive),
            _ => Err(SfvError::config(format!("unknown snapshot mode '{s}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Intrusive => "intrusive",
            Self::NonIntrusive => "non-intrusive",
        }
    }
}

/// Primitive Riemann data for `problem = custom`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannData {
    pub left: [f64; 3],
    pub right: [f64; 3],
    pub x0: f64,
    pub slope: f64,
    pub gamma: f64,
}

impl Default for RiemannData {
    fn default() -> Self {
        Self { left: [1.0, 0.0, 1.0], right: [0.125, 0.0, 0.1], x0: 0.475, slope: 0.05, gamma: 1.4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub method: Method,
    pub nx: usize,
    /// Stochastic cells per dimension.
    pub ny: Vec<usize>,
    pub n_modes: Option<usize>,
    pub n_hyper: Option<usize>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Final time; the problem's own when unset.
    pub t_final: Option<f64>,
    /// Snapshot frames `m`.
    pub frames: usize,
    pub max_steps: usize,
    pub epsilon: f64,
    pub stochastic_scheme: StochasticScheme,
    pub oversampling: Oversampling,
    pub basis: Option<PathBuf>,
    pub snapshots: Option<PathBuf>,
    pub output: PathBuf,
    pub snapshot_mode: SnapshotMode,
    pub dedup: bool,
    /// Parameter value of the exported slices.
    pub slice_y: f64,
    /// Parameter of a `det-1d` run; interval midpoints when empty.
    pub y: Vec<f64>,
    /// Keep the frames of a FOM solve for later intrusive snapshots.
    pub store_frames: bool,
    /// Directory of a stored FOM solve to take intrusive snapshots from.
    pub fom_run: Option<PathBuf>,
    /// Resolutions or mode counts swept by `reproduce`; the protocol's own when empty.
    pub sweep: Vec<usize>,
    pub riemann: RiemannData,
}

const KEYS: &[&str] = &[
    "problem",
    "method",
    "nx",
    "ny",
    "n_modes",
    "n_hyper",
    "rel_tol",
    "abs_tol",
    "t_final",
    "frames",
    "max_steps",
    "epsilon",
    "stochastic_scheme",
    "oversampling",
    "basis",
    "snapshots",
    "output",
    "snapshot_mode",
    "dedup",
    "slice_y",
    "y",
    "store_frames",
    "fom_run",
    "sweep",
    "left",
    "right",
    "x0",
    "slope",
    "gamma",
];

impl Default for RunConfig {
    fn default() -> Self {
        let integ = IntegratorConfig::new(1.0, 1);
        Self {
            problem: ProblemKind::BurgersSine,
            method: Method::FomFlux,
            nx: 64,
            ny: vec![8, 8],
            n_modes: None,
            n_hyper: None,
            rel_tol: integ.rel_tol,
            abs_tol: integ.abs_tol,
            t_final: None,
            frames: 50,
            max_steps: integ.max_steps,
            epsilon: WenoParams::default().epsilon,
            stochastic_scheme: WenoParams::default().stochastic_scheme,
            oversampling: Oversampling::default(),
            basis: None,
            snapshots: None,
            output: PathBuf::from("out"),
            snapshot_mode: SnapshotMode::Intrusive,
            dedup: true,
            slice_y: 1.0,
            y: Vec::new(),
            store_frames: false,
            fom_run: None,
            sweep: Vec::new(),
            riemann: RiemannData::default(),
        }
    }
}

fn bad(key: &str, v: &str) -> SfvError {
    SfvError::config(format!("invalid value for '{key}': '{v}'"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(key, v))
}

fn real(key: &str, v: &str) -> Result<f64> {
    let x: f64 = num(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, v))
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

fn reals(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| real(key, s.trim())).collect()
}

fn triple(key: &str, v: &str) -> Result<[f64; 3]> {
    reals(key, v)?.try_into().map_err(|_| bad(key, v))
}

fn optional<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v.is_empty() || v == "none" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, v)),
    }
}

fn path(v: &str) -> Option<PathBuf> {
    (!v.is_empty() && v != "none").then(|| PathBuf::from(v))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses configuration text; unknown keys and duplicates are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let m = Manifest::parse(text).map_err(|e| match e {
            SfvError::Format(s) => SfvError::Config(s),
            e => e,
        })?;
        let mut c = Self::default();
        for (k, v) in m.entries() {
            c.set(k, v)?;
        }
        Ok(c)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o.split_once('=').ok_or_else(|| SfvError::config(format!("override '{o}' has no '='")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "problem" => self.problem = ProblemKind::parse(v)?,
            "method" => self.method = Method::parse(v)?,
            "nx" => self.nx = num(key, v)?,
            "ny" => self.ny = list(key, v)?,
            "n_modes" => self.n_modes = optional(key, v)?,
            "n_hyper" => self.n_hyper = optional(key, v)?,
            "rel_tol" => self.rel_tol = real(key, v)?,
            "abs_tol" => self.abs_tol = real(key, v)?,
            "t_final" => self.t_final = if v.is_empty() || v == "none" { None } else { Some(real(key, v)?) },
            "frames" => self.frames = num(key, v)?,
            "max_steps" => self.max_steps = num(key, v)?,
            "epsilon" => self.epsilon = real(key, v)?,
            "stochastic_scheme" => self.stochastic_scheme = StochasticScheme::parse(v)?,
            "oversampling" => {
                self.oversampling = match v {
                    "greedy" => Oversampling::Greedy,
                    "restart" => Oversampling::Restart,
                    _ => return Err(bad(key, v)),
                }
            }
            "basis" => self.basis = path(v),
            "snapshots" => self.snapshots = path(v),
            "output" => self.output = PathBuf::from(v),
            "snapshot_mode" => self.snapshot_mode = SnapshotMode::parse(v)?,
            "dedup" => self.dedup = flag(key, v)?,
            "slice_y" => self.slice_y = real(key, v)?,
            "y" => self.y = if v.is_empty() { Vec::new() } else { reals(key, v)? },
            "store_frames" => self.store_frames = flag(key, v)?,
            "fom_run" => self.fom_run = path(v),
            "sweep" => self.sweep = if v.is_empty() { Vec::new() } else { list(key, v)? },
            "left" => self.riemann.left = triple(key, v)?,
            "right" => self.riemann.right = triple(key, v)?,
            "x0" => self.riemann.x0 = real(key, v)?,
            "slope" => self.riemann.slope = real(key, v)?,
            "gamma" => self.riemann.gamma = real(key, v)?,
            _ => return Err(SfvError::config(format!("unknown config key '{key}' (known: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let opt = |o: Option<String>| o.unwrap_or_else(|| "none".into());
        let show = |p: &Option<PathBuf>| opt(p.as_ref().map(|p| p.display().to_string()));
        let mut m = Manifest::new();
        m.set("problem", self.problem.as_str())
            .set("method", self.method.as_str())
            .set("nx", self.nx)
            .set("ny", join(&self.ny))
            .set("n_modes", opt(self.n_modes.map(|v| v.to_string())))
            .set("n_hyper", opt(self.n_hyper.map(|v| v.to_string())))
            .set("rel_tol", self.rel_tol)
            .set("abs_tol", self.abs_tol)
            .set("t_final", opt(self.t_final.map(|v| v.to_string())))
            .set("frames", self.frames)
            .set("max_steps", self.max_steps)
            .set("epsilon", self.epsilon)
            .set("stochastic_scheme", self.stochastic_scheme.as_str())
            .set(
                "oversampling",
                match self.oversampling {
                    Oversampling::Greedy => "greedy",
                    Oversampling::Restart => "restart",
                },
            )
            .set("basis", show(&self.basis))
            .set("snapshots", show(&self.snapshots))
            .set("output", self.output.display())
            .set("snapshot_mode", self.snapshot_mode.as_str())
            .set("dedup", self.dedup)
            .set("slice_y", self.slice_y)
            .set("y", join(&self.y))
            .set("store_frames", self.store_frames)
            .set("fom_run", show(&self.fom_run))
            .set("sweep", join(&self.sweep))
            .set("left", join(&self.riemann.left))
            .set("right", join(&self.riemann.right))
            .set("x0", self.riemann.x0)
            .set("slope", self.riemann.slope)
            .set("gamma", self.riemann.gamma);
        m.to_text()
    }

    pub fn build_problem(&self) -> Result<Problem> {
        match self.problem {
            ProblemKind::Riemann => {
                let r = &self.riemann;
                for (name, s) in [("left", r.left), ("right", r.right)] {
                    if !(s[0] > 0.0 && s[2] > 0.0) || s.iter().any(|v| !v.is_finite()) {
                        return Err(SfvError::config(format!("'{name}' needs finite ρ > 0 and p > 0")));
                    }
                }
                if !(r.gamma > 1.0) {
                    return Err(SfvError::config("gamma must exceed 1"));
                }
                Ok(Problem::riemann(
                    (r.left[0], r.left[1], r.left[2]),
                    (r.right[0], r.right[1], r.right[2]),
                    r.x0,
                    r.slope,
                    r.gamma,
                ))
            }
            kind => Problem::preset(kind),
        }
    }

    pub fn weno(&self) -> WenoParams {
        WenoParams { epsilon: self.epsilon, stochastic_scheme: self.stochastic_scheme, ..WenoParams::default() }
    }

    pub fn t_final(&self, problem: &Problem) -> f64 {
        self.t_final.unwrap_or(problem.t_final)
    }

    /// Integrator settings with `frames` equally spaced outputs.
    pub fn integrator(&self, problem: &Problem, frames: usize) -> IntegratorConfig {
        let mut c = IntegratorConfig::new(self.t_final(problem), frames);
        c.rel_tol = self.rel_tol;
        c.abs_tol = self.abs_tol;
        c.max_steps = self.max_steps;
        c
    }

    /// Checks ranges and the fields the chosen method needs.
    pub fn validate(&self) -> Result<()> {
        let problem = self.build_problem()?;
        if self.method == Method::Det1d {
            if !self.ny.is_empty() && self.ny.len() != problem.q() {
                return Err(SfvError::config(format!("'ny' needs {} entries", problem.q())));
            }
        } else if self.ny.len() != problem.q() {
            return Err(SfvError::config(format!(
                "problem '{}' has {} stochastic dimensions; 'ny' has {} entries",
                self.problem.as_str(),
                problem.q(),
                self.ny.len()
            )));
        }
        if self.nx < 3 || self.ny.contains(&0) {
            return Err(SfvError::config("need nx >= 3 and every ny entry >= 1"));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(SfvError::config("tolerances must be positive"));
        }
        if self.t_final.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return Err(SfvError::config("t_final must be positive"));
        }
        if self.frames == 0 || self.max_steps == 0 {
            return Err(SfvError::config("frames and max_steps must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(SfvError::config("epsilon must be positive"));
        }
        if !self.slice_y.is_finite() {
            return Err(SfvError::config("slice_y must be finite"));
        }
        if !self.y.is_empty() && self.y.len() != problem.q() {
            return Err(SfvError::config(format!("'y' needs {} entries", problem.q())));
        }
        if matches!(self.method, Method::Rom | Method::RomHr) {
            let n = self.n_modes.ok_or_else(|| SfvError::config("method rom needs 'n_modes'"))?;
            if n == 0 {
                return Err(SfvError::config("'n_modes' must be positive"));
            }
            if self.basis.is_none() && self.snapshots.is_none() {
                return Err(SfvError::config("method rom needs 'basis' or 'snapshots'"));
            }
            if self.method == Method::RomHr {
                let nh = self.n_hyper.ok_or_else(|| SfvError::config("method rom-hr needs 'n_hyper'"))?;
                if nh < n {
                    return Err(SfvError::config(format!("'n_hyper' = {nh} must be at least 'n_modes' = {n}")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_are_rejected() {
        for text in ["rel_tol=nan", "epsilon=inf", "t_final=-inf", "y=0.5,NaN", "left=1,0,1e400"] {
            assert!(matches!(RunConfig::parse(text), Err(SfvError::Config(_))), "{text}");
        }
        assert_eq!(RunConfig::parse("t_final=none").unwrap().t_final, None);
    }

    #[test]
    fn parse_with_comments_and_overrides() {
        let mut c = RunConfig::parse("# sod\nproblem = sod-narrow\nmethod=fom-state\nnx=128\nny=32\n").unwrap();
        assert_eq!(c.problem, ProblemKind::SodNarrow);
        assert_eq!(c.method, Method::FomState);
        assert_eq!(c.ny, vec![32]);
        c.apply_overrides(&["nx=64", "epsilon=1e-3"]).unwrap();
        assert_eq!((c.nx, c.epsilon), (64, 1e-3));
        c.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.set("method", "rom-hr").unwrap();
        c.set("n_modes", "20").unwrap();
        c.set("n_hyper", "40").unwrap();
        c.set("basis", "b.sfvm").unwrap();
        c.set("rel_tol", "1.2345678901234e-7").unwrap();
        c.set("t_final", "0.35").unwrap();
        c.set("y", "0.25,1").unwrap();
        c.set("sweep", "4,8").unwrap();
        c.set("fom_run", "runs/a").unwrap();
        let d = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(c, d);
        assert_eq!(d.to_text(), c.to_text());
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(RunConfig::parse("colour=red"), Err(SfvError::Config(_))));
        assert!(matches!(RunConfig::parse("nx=4\nnx=5"), Err(SfvError::Config(_))));
        assert!(matches!(RunConfig::parse("nx"), Err(SfvError::Config(_))));
        assert!(matches!(RunConfig::parse("nx=-1"), Err(SfvError::Config(_))));
    }

    #[test]
    fn method_requirements() {
        let mut c = RunConfig::default();
        c.method = Method::Rom;
        assert!(c.validate().is_err());
        c.n_modes = Some(10);
        assert!(c.validate().is_err());
        c.snapshots = Some("s.sfvm".into());
        c.validate().unwrap();
        c.method = Method::RomHr;
        c.n_hyper = Some(5);
        assert!(c.validate().is_err());
        c.n_hyper = Some(10);
        c.validate().unwrap();
    }

    #[test]
    fn dimension_mismatch() {
        let mut c = RunConfig::default();
        c.problem = ProblemKind::SodWide;
        assert!(c.validate().is_err());
        c.ny = vec![16];
        c.validate().unwrap();
    }
}
