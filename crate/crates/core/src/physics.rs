//! Conservation laws, their physical fluxes, Davis wave-speed bounds and the
//! Lax–Friedrichs numerical flux.

/// Largest number of conserved components of any supported law.
pub const MAX_COMPONENTS: usize = 3;

/// Fixed-capacity state/flux vector; only the first `n_components` entries are meaningful.
pub type Vector = [f64; MAX_COMPONENTS];

/// Why a state is outside the admissible set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inadmissible {
    pub component: usize,
    pub density: f64,
    pub pressure: f64,
}

impl std::fmt::Display for Inadmissible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "rho = {:.6e}, p = {:.6e}", self.density, self.pressure)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerParams {
    pub gamma: f64,
}

impl Default for EulerParams {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConservationLaw {
    /// `f(u) = u²/2`.
    Burgers,
    /// 1D compressible Euler in conserved variables `(ρ, ρu, E)`.
    Euler(EulerParams),
}

impl ConservationLaw {
    pub fn euler(gamma: f64) -> Self {
        ConservationLaw::Euler(EulerParams { gamma })
    }

    pub fn n_components(&self) -> usize {
        match self {
            ConservationLaw::Burgers => 1,
            ConservationLaw::Euler(_) => 3,
        }
    }

    pub fn component_names(&self) -> &'static [&'static str] {
        match self {
            ConservationLaw::Burgers => &["u"],
            ConservationLaw::Euler(_) => &["rho", "rhou", "E"],
        }
    }

    pub fn check(&self, u: &Vector) -> Result<(), Inadmissible> {
        match self {
            ConservationLaw::Burgers => {
                if u[0].is_finite() {
                    Ok(())
                } else {
                    Err(Inadmissible { component: 0, density: f64::NAN, pressure: f64::NAN })
                }
            }
            ConservationLaw::Euler(p) => {
                let rho = u[0];
                if !(rho > 0.0) {
                    return Err(Inadmissible { component: 0, density: rho, pressure: f64::NAN });
                }
                let pressure = euler_pressure(u, p.gamma);
                if !(pressure > 0.0) || !pressure.is_finite() {
                    return Err(Inadmissible { component: 2, density: rho, pressure });
                }
                Ok(())
            }
        }
    }

    /// Physical flux `F(u)`.
    pub fn flux(&self, u: &Vector) -> Result<Vector, Inadmissible> {
        match self {
            ConservationLaw::Burgers => Ok([burgers_flux(u[0]), 0.0, 0.0]),
            ConservationLaw::Euler(p) => euler_flux(u, p.gamma),
        }
    }

    /// Local maximum wave speed between two states.
    pub fn davis_wave_speed(&self, ul: &Vector, ur: &Vector) -> Result<f64, Inadmissible> {
        match self {
            ConservationLaw::Burgers => {
                self.check(ul)?;
                self.check(ur)?;
                Ok(ul[0].abs().max(ur[0].abs()))
            }
            ConservationLaw::Euler(p) => {
                let sl = euler_signal_speed(ul, p.gamma)?;
                let sr = euler_signal_speed(ur, p.gamma)?;
                Ok(sl.max(sr))
            }
        }
    }

    /// `½(F(u_L) + F(u_R)) − (λ/2)(u_R − u_L)` with the Davis bound for `λ`.
    pub fn lax_friedrichs(&self, ul: &Vector, ur: &Vector) -> Result<Vector, Inadmissible> {
        let lambda = self.davis_wave_speed(ul, ur)?;
        let fl = self.flux(ul)?;
        let fr = self.flux(ur)?;
        let mut out = [0.0; MAX_COMPONENTS];
        for p in 0..self.n_components() {
            out[p] = 0.5 * (fl[p] + fr[p]) - 0.5 * lambda * (ur[p] - ul[p]);
        }
        Ok(out)
    }
}

pub fn burgers_flux(u: f64) -> f64 {
    0.5 * u * u
}

/// `p = (γ − 1)(E − ½ρu²)`. Does not check admissibility.
pub fn euler_pressure(u: &Vector, gamma: f64) -> f64 {
    let [rho, mom, e] = *u;
    (gamma - 1.0) * (e - 0.5 * mom * mom / rho)
}

/// `[ρu, ρu² + p, u(E + p)]`.
pub fn euler_flux(u: &Vector, gamma: f64) -> Result<Vector, Inadmissible> {
    ConservationLaw::euler(gamma).check(u)?;
    let [rho, mom, e] = *u;
    let vel = mom / rho;
    let p = euler_pressure(u, gamma);
    Ok([mom, mom * vel + p, vel * (e + p)])
}

fn euler_signal_speed(u: &Vector, gamma: f64) -> Result<f64, Inadmissible> {
    ConservationLaw::euler(gamma).check(u)?;
    let p = euler_pressure(u, gamma);
    let c = (gamma * p / u[0]).sqrt();
    Ok((u[1] / u[0]).abs() + c)
}

/// Conserved `(ρ, ρu, E)` from primitive `(ρ, u, p)`.
pub fn primitive_to_conserved(rho: f64, vel: f64, p: f64, gamma: f64) -> Vector {
    [rho, rho * vel, p / (gamma - 1.0) + 0.5 * rho * vel * vel]
}

/// Primitive `(ρ, u, p)` from conserved variables.
pub fn conserved_to_primitive(u: &Vector, gamma: f64) -> Vector {
    [u[0], u[1] / u[0], euler_pressure(u, gamma)]
}
