//! Dormand–Prince 5(4) with PI step-size control and continuous output.

use crate::error::{Result, SfvError};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const MAX_SHRINK: f64 = 5.0;
const MAX_GROW: f64 = 10.0;

/// Output times for the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSchedule {
    times: Vec<f64>,
}

impl FrameSchedule {
    /// `m` equally spaced frames on `[0, t_final]`, endpoints included. A single
    /// frame is placed at `t_final`.
    pub fn equally_spaced(t_final: f64, m: usize) -> Self {
        let times = match m {
            0 => Vec::new(),
            1 => vec![t_final],
            _ => (0..m).map(|k| if k + 1 == m { t_final } else { t_final * k as f64 / (m - 1) as f64 }).collect(),
        };
        Self { times }
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !(*t >= 0.0)) {
            return Err(SfvError::config("frame times must be non-negative and strictly increasing"));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_final: f64,
    /// Initial step; `None` picks a step from the initial derivative.
    pub initial_dt: Option<f64>,
    pub max_steps: usize,
    pub frames: FrameSchedule,
}

impl IntegratorConfig {
    pub fn new(t_final: f64, frames: usize) -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            t_final,
            initial_dt: None,
            max_steps: 1_000_000,
            frames: FrameSchedule::equally_spaced(t_final, frames),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(SfvError::config("integrator tolerances must be positive"));
        }
        if !(self.t_final > 0.0) {
            return Err(SfvError::config("t_final must be positive"));
        }
        if self.frames.times().last().is_some_and(|&t| t > self.t_final) {
            return Err(SfvError::config("frame schedule extends past t_final"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    /// Largest scaled error norm among accepted steps (at most one).
    pub max_accepted_error: f64,
}

/// Integrates `dy/dt = rhs(t, y)` from `t = 0` to `cfg.t_final`.
///
/// `on_frame(k, t_k, y(t_k))` is called for each scheduled frame, in order.
/// Returns the final state.
pub fn integrate<R, O>(y0: &[f64], mut rhs: R, cfg: &IntegratorConfig, mut on_frame: O) -> Result<(Vec<f64>, IntegrationStats)>
where
    R: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(usize, f64, &[f64]) -> Result<()>,
{
    cfg.validate()?;
    let n = y0.len();
    let t_end = cfg.t_final;
    let frames = cfg.frames.times();
    let mut next_frame = 0;
    let mut stats = IntegrationStats::default();

    let mut y = y0.to_vec();
    let mut t = 0.0;
    while next_frame < frames.len() && frames[next_frame] <= 0.0 {
        on_frame(next_frame, 0.0, &y)?;
        next_frame += 1;
    }

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut cont = vec![0.0; 5 * n];
    let mut dense = vec![0.0; n];

    rhs(t, &y, &mut k1)?;
    stats.rhs_evaluations += 1;

    let mut h = match cfg.initial_dt {
        Some(h) if h > 0.0 => h,
        _ => initial_step(&y, &k1, cfg),
    }
    .min(t_end);
    let h_min = 1e-14 * t_end;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0;

    let fail = |t: f64, h: f64, reason: String, y: &[f64]| SfvError::Integration {
        t,
        dt: h,
        reason,
        last_state: Box::new(y.to_vec()),
    };

    while t < t_end {
        if steps >= cfg.max_steps {
            return Err(fail(t, h, format!("exceeded {} steps", cfg.max_steps), &y));
        }
        if h < h_min {
            return Err(fail(t, h, "step size underflow".into(), &y));
        }
        if t + 1.01 * h >= t_end {
            h = t_end - t;
        }
        steps += 1;

        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &ys, &mut k2)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &ys, &mut k3)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &ys, &mut k4)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &ys, &mut k5)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, &ys, &mut k6)?;
        for i in 0..n {
            y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, &y_new, &mut k7)?;
        stats.rhs_evaluations += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err += (e / sk) * (e / sk);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            h /= MAX_SHRINK;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            let fac = (fac11 / facold.powf(BETA) / SAFETY).clamp(1.0 / MAX_GROW, MAX_SHRINK);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            facold = err.max(1e-4);
            stats.accepted += 1;
            stats.max_accepted_error = stats.max_accepted_error.max(err);

            let t_new = if t_end - (t + h) <= 1e-15 * t_end { t_end } else { t + h };
            if next_frame < frames.len() && frames[next_frame] <= t_new {
                for i in 0..n {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    cont[i] = y[i];
                    cont[n + i] = ydiff;
                    cont[2 * n + i] = bspl;
                    cont[3 * n + i] = ydiff - h * k7[i] - bspl;
                    cont[4 * n + i] =
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                while next_frame < frames.len() && frames[next_frame] <= t_new {
                    let tf = frames[next_frame];
                    if tf == t_new {
                        on_frame(next_frame, tf, &y_new)?;
                    } else {
                        let s = (tf - t) / h;
                        let s1 = 1.0 - s;
                        for i in 0..n {
                            dense[i] = cont[i]
                                + s * (cont[n + i]
                                    + s1 * (cont[2 * n + i] + s * (cont[3 * n + i] + s1 * cont[4 * n + i])));
                        }
                        on_frame(next_frame, tf, &dense)?;
                    }
                    next_frame += 1;
                }
            }

            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            h = h_new;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h /= (fac11 / SAFETY).min(MAX_SHRINK);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

/// Starting step from the size of the solution and its derivative.
fn initial_step(y: &[f64], f: &[f64], cfg: &IntegratorConfig) -> f64 {
    let n = y.len().max(1) as f64;
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for (yi, fi) in y.iter().zip(f) {
        let sk = cfg.abs_tol + cfg.rel_tol * yi.abs();
        d0 += (yi / sk).powi(2);
        d1 += (fi / sk).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(cfg.t_final)
}
