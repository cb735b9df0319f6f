//! Brute-force reference implementations written directly from the formulas,
//! without any of the library's reconstruction or quadrature code.
#![allow(dead_code)]

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Law {
    Burgers,
    Euler(f64),
}

impl Law {
    pub fn n(&self) -> usize {
        match self {
            Law::Burgers => 1,
            Law::Euler(_) => 3,
        }
    }

    pub fn flux(&self, u: &[f64]) -> Vec<f64> {
        match *self {
            Law::Burgers => vec![0.5 * u[0] * u[0]],
            Law::Euler(g) => {
                let v = u[1] / u[0];
                let p = (g - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0]);
                vec![u[1], u[1] * v + p, v * (u[2] + p)]
            }
        }
    }

    fn speed(&self, u: &[f64]) -> f64 {
        match *self {
            Law::Burgers => u[0].abs(),
            Law::Euler(g) => {
                let p = (g - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0]);
                assert!(u[0] > 0.0 && p > 0.0, "oracle hit an inadmissible state");
                (u[1] / u[0]).abs() + (g * p / u[0]).sqrt()
            }
        }
    }

    /// Lax-Friedrichs with the larger of the two local signal speeds.
    pub fn lax_friedrichs(&self, ul: &[f64], ur: &[f64]) -> Vec<f64> {
        let s = self.speed(ul).max(self.speed(ur));
        let (fl, fr) = (self.flux(ul), self.flux(ur));
        (0..self.n()).map(|p| 0.5 * (fl[p] + fr[p]) - 0.5 * s * (ur[p] - ul[p])).collect()
    }
}

/// Third-order WENO values at the left and right faces of the middle cell,
/// written as convex combinations of the two candidate linear interpolants.
pub fn weno_faces(um: f64, uc: f64, up: f64, eps: f64) -> (f64, f64) {
    let bl = (uc - um) * (uc - um);
    let br = (up - uc) * (up - uc);
    let alpha = |d: f64, b: f64| d / ((eps + b) * (eps + b));
    // right face: central (uc+up)/2 with 2/3, upwind (3uc-um)/2 with 1/3
    let (a0, a1) = (alpha(2.0 / 3.0, br), alpha(1.0 / 3.0, bl));
    let right = (a0 * 0.5 * (uc + up) + a1 * 0.5 * (3.0 * uc - um)) / (a0 + a1);
    // left face: central (um+uc)/2 with 2/3, downwind (3uc-up)/2 with 1/3
    let (a0, a1) = (alpha(2.0 / 3.0, bl), alpha(1.0 / 3.0, br));
    let left = (a0 * 0.5 * (um + uc) + a1 * 0.5 * (3.0 * uc - up)) / (a0 + a1);
    (left, right)
}

/// Equal-weight WENO slope across one cell.
pub fn weno_slope(um: f64, uc: f64, up: f64, eps: f64) -> f64 {
    let bl = (uc - um) * (uc - um);
    let br = (up - uc) * (up - uc);
    let a0 = 0.5 / ((eps + br) * (eps + br));
    let a1 = 0.5 / ((eps + bl) * (eps + bl));
    (a0 * (up - uc) + a1 * (uc - um)) / (a0 + a1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    Faces,
    CellSlope,
}

#[derive(Clone, Debug)]
pub struct Oracle {
    pub law: Law,
    pub nx: usize,
    /// Cells per stochastic dimension on `[0, 1]^q`, uniform density.
    pub cells: Vec<usize>,
    pub periodic: bool,
    pub eps: f64,
    pub scheme: Scheme,
}

impl Oracle {
    pub fn q(&self) -> usize {
        self.cells.len()
    }

    pub fn ny(&self) -> usize {
        self.cells.iter().product()
    }

    /// Multi-index of linear stochastic cell `j`, last dimension fastest.
    pub fn multi(&self, mut j: usize) -> Vec<usize> {
        let mut idx = vec![0; self.q()];
        for d in (0..self.q()).rev() {
            idx[d] = j % self.cells[d];
            j /= self.cells[d];
        }
        idx
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.cells).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    /// Two-point Gauss offsets in `[-1/2, 1/2]^q` for every local node.
    pub fn offsets(&self) -> Vec<Vec<f64>> {
        let g = 0.5 / 3f64.sqrt();
        let q = self.q();
        (0..1usize << q)
            .map(|m| (0..q).map(|d| if m >> (q - 1 - d) & 1 == 1 { g } else { -g }).collect())
            .collect()
    }

    /// Probability mass of a node: cell volume over the number of nodes.
    pub fn node_mass(&self) -> f64 {
        self.cells.iter().map(|&c| 1.0 / c as f64).product::<f64>() / (1usize << self.q()) as f64
    }

    pub fn cell_mass(&self) -> f64 {
        self.cells.iter().map(|&c| 1.0 / c as f64).product()
    }

    fn one_d(&self, um: f64, uc: f64, up: f64) -> (f64, f64) {
        match self.scheme {
            Scheme::Faces => {
                let (lo, hi) = weno_faces(um, uc, up, self.eps);
                (0.5 * (lo + hi), hi - lo)
            }
            Scheme::CellSlope => (uc, weno_slope(um, uc, up, self.eps)),
        }
    }

    /// Value at offset `xi` of cell `j` of the stochastic reconstruction of `values`.
    pub fn stochastic_value(&self, values: &[f64], j: usize, xi: &[f64]) -> f64 {
        let q = self.q();
        let centre = self.multi(j);
        // box of 3^q clamped neighbours, dimension 0 slowest
        let mut boxv = Vec::new();
        for b in 0..3usize.pow(q as u32) {
            let mut idx = centre.clone();
            for d in 0..q {
                let off = (b / 3usize.pow((q - 1 - d) as u32)) % 3;
                if self.cells[d] >= 3 {
                    idx[d] = (centre[d] as isize + off as isize - 1).clamp(0, self.cells[d] as isize - 1) as usize;
                }
            }
            boxv.push(values[self.linear(&idx)]);
        }
        self.sweep(&boxv, 0, xi)
    }

    fn sweep(&self, boxv: &[f64], d: usize, xi: &[f64]) -> f64 {
        if d == self.q() {
            return boxv[0];
        }
        let inner = boxv.len() / 3;
        let mut c = vec![0.0; inner];
        let mut s = vec![0.0; inner];
        for r in 0..inner {
            let (um, uc, up) = (boxv[r], boxv[inner + r], boxv[2 * inner + r]);
            (c[r], s[r]) = if self.cells[d] >= 3 { self.one_d(um, uc, up) } else { (uc, 0.0) };
        }
        self.sweep(&c, d + 1, xi) + xi[d] * self.sweep(&s, d + 1, xi)
    }

    /// Left and right physical interface states `[p][j][k]`, `k = 0..=nx`.
    pub fn physical_states(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (nx, ny, n) = (self.nx, self.ny(), self.law.n());
        let mut left = vec![0.0; n * ny * (nx + 1)];
        let mut right = vec![0.0; n * ny * (nx + 1)];
        for p in 0..n {
            for j in 0..ny {
                let at = |c: isize| -> f64 {
                    let c = if self.periodic { c.rem_euclid(nx as isize) } else { c.clamp(0, nx as isize - 1) };
                    u[(p * ny + j) * nx + c as usize]
                };
                for k in 0..=nx {
                    let a = k as isize - 1;
                    let b = k as isize;
                    let (_, from_left) = weno_faces(at(a - 1), at(a), at(a + 1), self.eps);
                    let (from_right, _) = weno_faces(at(b - 1), at(b), at(b + 1), self.eps);
                    let s = (p * ny + j) * (nx + 1) + k;
                    left[s] = from_left;
                    right[s] = from_right;
                }
            }
        }
        (left, right)
    }

    /// `dU/dt` in `[p][j][i]` layout with state (`flux = false`) or flux reconstruction.
    pub fn rhs(&self, u: &[f64], flux: bool) -> Vec<f64> {
        let (nx, ny, n) = (self.nx, self.ny(), self.law.n());
        let (left, right) = self.physical_states(u);
        let offsets = self.offsets();
        let w = self.node_mass();
        let mut fbar = vec![0.0; n * (nx + 1) * ny]; // [p][k][j]
        for k in 0..=nx {
            let line = |src: &[f64], p: usize| -> Vec<f64> { (0..ny).map(|j| src[(p * ny + j) * (nx + 1) + k]).collect() };
            if flux {
                let mut fhat = vec![vec![0.0; ny]; n];
                for j in 0..ny {
                    let ul: Vec<f64> = (0..n).map(|p| left[(p * ny + j) * (nx + 1) + k]).collect();
                    let ur: Vec<f64> = (0..n).map(|p| right[(p * ny + j) * (nx + 1) + k]).collect();
                    let f = self.law.lax_friedrichs(&ul, &ur);
                    for p in 0..n {
                        fhat[p][j] = f[p];
                    }
                }
                for p in 0..n {
                    for j in 0..ny {
                        fbar[(p * (nx + 1) + k) * ny + j] =
                            offsets.iter().map(|xi| self.stochastic_value(&fhat[p], j, xi) * w).sum();
                    }
                }
            } else {
                let ls: Vec<Vec<f64>> = (0..n).map(|p| line(&left, p)).collect();
                let rs: Vec<Vec<f64>> = (0..n).map(|p| line(&right, p)).collect();
                for j in 0..ny {
                    let mut acc = vec![0.0; n];
                    for xi in &offsets {
                        let ul: Vec<f64> = (0..n).map(|p| self.stochastic_value(&ls[p], j, xi)).collect();
                        let ur: Vec<f64> = (0..n).map(|p| self.stochastic_value(&rs[p], j, xi)).collect();
                        let f = self.law.lax_friedrichs(&ul, &ur);
                        for p in 0..n {
                            acc[p] += f[p] * w;
                        }
                    }
                    for p in 0..n {
                        fbar[(p * (nx + 1) + k) * ny + j] = acc[p];
                    }
                }
            }
        }
        let dx = 1.0 / nx as f64;
        let mut out = vec![0.0; n * ny * nx];
        for p in 0..n {
            for j in 0..ny {
                for i in 0..nx {
                    let fp = fbar[(p * (nx + 1) + i + 1) * ny + j];
                    let fm = fbar[(p * (nx + 1) + i) * ny + j];
                    out[(p * ny + j) * nx + i] = -(fp - fm) / (dx * self.cell_mass());
                }
            }
        }
        out
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, whole: f64, m: f64, fm: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1) + rec(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 40)
}
