mod support;

use sfv::solver::{rhs_flux_reconstruction, rhs_state_reconstruction, Discretization, Problem, StateField};
use sfv::weno::{StochasticScheme, WenoParams};
use support::{Law, Oracle, Scheme};

fn params(scheme: StochasticScheme) -> WenoParams {
    WenoParams { stochastic_scheme: scheme, ..WenoParams::default() }
}

fn oracle_scheme(s: StochasticScheme) -> Scheme {
    match s {
        StochasticScheme::FaceInterpolation => Scheme::Faces,
        StochasticScheme::CellCentered => Scheme::CellSlope,
    }
}

/// Initial averages plus a smooth perturbation, so the nonlinear weights are not trivial.
fn perturbed(problem: &Problem, disc: &Discretization, amp: f64) -> StateField {
    let mut u = problem.initial_state(disc).unwrap();
    let (nx, ny) = (u.nx(), u.ny());
    for j in 0..ny {
        for i in 0..nx {
            let v = u.get(i, j, 0);
            u.set(i, j, 0, v * (1.0 + amp * ((3 * i + 7 * j) as f64 * 0.37).sin()));
        }
    }
    u
}

fn check(problem: &Problem, law: Law, nx: usize, cells: &[usize], periodic: bool, amp: f64) {
    for scheme in [StochasticScheme::FaceInterpolation, StochasticScheme::CellCentered] {
        let disc = problem.discretization(nx, cells, params(scheme)).unwrap();
        let u = perturbed(problem, &disc, amp);
        let oracle = Oracle { law, nx, cells: cells.to_vec(), periodic, eps: 1e-6, scheme: oracle_scheme(scheme) };
        for flux in [false, true] {
            let mut out = disc.zero_field();
            if flux {
                rhs_flux_reconstruction(&disc, &u, &mut out).unwrap();
            } else {
                rhs_state_reconstruction(&disc, &u, &mut out).unwrap();
            }
            let want = oracle.rhs(u.values(), flux);
            let scale = want.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in out.values().iter().zip(&want) {
                assert!(
                    (a - b).abs() <= 1e-12 * scale,
                    "{scheme:?} flux={flux} cells={cells:?}: {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn burgers_one_active_dimension() {
    check(&Problem::burgers_sine(), Law::Burgers, 6, &[4, 1], true, 0.2);
}

#[test]
fn burgers_two_cell_dimensions() {
    check(&Problem::burgers_sine(), Law::Burgers, 5, &[2, 2], true, 0.2);
}

#[test]
fn burgers_three_by_three() {
    check(&Problem::burgers_sine(), Law::Burgers, 8, &[3, 3], true, 0.3);
}

#[test]
fn sod_narrow_four_cells() {
    check(&Problem::sod_narrow(), Law::Euler(1.4), 8, &[4], false, 0.1);
}

#[test]
fn sod_wide_four_cells() {
    check(&Problem::sod_wide(), Law::Euler(1.4), 7, &[4], false, 0.0);
}

#[test]
fn state_to_flux_evaluation_ratio_is_two_to_the_q() {
    for (problem, cells) in [(Problem::burgers_sine(), vec![3, 4]), (Problem::sod_narrow(), vec![5])] {
        let disc = problem.discretization(6, &cells, WenoParams::default()).unwrap();
        let u = problem.initial_state(&disc).unwrap();
        let mut out = disc.zero_field();
        disc.reset_flux_counter();
        rhs_state_reconstruction(&disc, &u, &mut out).unwrap();
        let state = disc.flux_evaluations();
        disc.reset_flux_counter();
        rhs_flux_reconstruction(&disc, &u, &mut out).unwrap();
        let flux = disc.flux_evaluations();
        let ny: usize = cells.iter().product();
        assert_eq!(flux, (7 * ny) as u64);
        assert_eq!(state, flux << cells.len());
    }
}
