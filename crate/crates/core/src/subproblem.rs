//! Per-tone subproblem `min_{0 ≤ x ≤ mask} f_app(x) + λ x`.
//!
//! The closed-form path enumerates the interval ends and the feasible real
//! roots of the stationarity polynomial. The fixed-point path isolates `x` in
//! the own-rate term of the stationarity condition and iterates.

use serde::{Deserialize, Serialize};

use crate::approx::{Term, UnivariateApproximation};
use crate::error::{Error, Result};
use crate::poly::{closed_form_roots, numeric_roots_in};
use crate::units::db_distance;

pub use crate::poly::{real_roots, Poly};

/// Powers below this fraction of the mask compare as equal when measuring
/// convergence in dB.
pub const POWER_FLOOR_REL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    ClosedForm,
    FixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Allow numeric root isolation for stationarity polynomials above degree three.
    pub numeric_fallback: bool,
    pub fp_max_iter: usize,
    /// Fixed-point stop: successive iterates closer than this, in dB.
    pub fp_tol_db: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            numeric_fallback: true,
            fp_max_iter: 50,
            fp_tol_db: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemSolution {
    pub x: f64,
    /// `f_app(x) + λ x`.
    pub value: f64,
    pub candidates: Vec<f64>,
    pub mode: SolveMode,
    /// Fixed-point updates needed; zero in closed-form mode.
    pub fp_iterations: usize,
    /// A polynomial root solve was performed.
    pub root_solve: bool,
    /// Degree of the polynomial handed to the root solver.
    pub poly_degree: usize,
    /// Roots came from numeric isolation rather than closed form.
    pub numeric: bool,
    pub fp_converged: bool,
    pub diverged: bool,
}

fn objective(app: &UnivariateApproximation, lambda: f64, x: f64) -> f64 {
    app.value(x) + lambda * x
}

/// Argmin over candidates; ties go to the smaller power. NaN values never win.
fn pick(app: &UnivariateApproximation, lambda: f64, mut candidates: Vec<f64>) -> (f64, f64, Vec<f64>) {
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = (candidates[0], f64::INFINITY);
    let mut first = true;
    for &x in &candidates {
        let v = objective(app, lambda, x);
        if first || v < best.1 {
            if !v.is_nan() {
                best = (x, v);
                first = false;
            }
        }
    }
    (best.0, best.1, candidates)
}

/// Exact minimizer via stationary points and interval ends.
pub fn solve_closed_form(
    app: &UnivariateApproximation,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<SubproblemSolution> {
    let mask = app.mask;
    let poly = app.stationarity(lambda);
    let mut candidates = vec![0.0, mask];
    let mut numeric = false;
    let mut root_solve = false;
    let mut poly_degree = 0;
    if !poly.is_zero() && poly.degree() > 0 {
        root_solve = true;
        poly_degree = poly.degree();
        // work on u = x / mask so the feasible interval is [0, 1]
        let scaled = poly.compose_scale(mask).normalized();
        let roots = if scaled.degree() <= 3 {
            closed_form_roots(&scaled)?
        } else if opts.numeric_fallback {
            numeric = true;
            numeric_roots_in(&scaled, 0.0, 1.0)
        } else {
            return Err(Error::NoClosedForm {
                degree: scaled.degree(),
            });
        };
        candidates.extend(
            roots
                .into_iter()
                .filter(|u| *u > 0.0 && *u < 1.0)
                .map(|u| (u * mask).clamp(0.0, mask)),
        );
    }
    let (x, value, candidates) = pick(app, lambda, candidates);
    Ok(SubproblemSolution {
        x,
        value,
        candidates,
        mode: SolveMode::ClosedForm,
        fp_iterations: 0,
        root_solve,
        poly_degree,
        numeric,
        fp_converged: true,
        diverged: false,
    })
}

/// Own-rate term used to isolate `x`, and the index of that term.
fn own_term(app: &UnivariateApproximation) -> Option<(usize, &Term)> {
    app.terms
        .iter()
        .enumerate()
        .find(|(_, t)| matches!(t, Term::Own { .. } | Term::ScaleOwn { .. }))
}

/// One fixed-point update from `x`. Returns the clamped next iterate and
/// whether the divergence guard fired.
pub fn fixed_point_step(app: &UnivariateApproximation, lambda: f64, x: f64) -> (f64, bool) {
    let Some((idx, own)) = own_term(app) else {
        // nothing to isolate: the kept part is flat in x
        let next = if lambda + app.d + app.f1_d1(x) < 0.0 { app.mask } else { 0.0 };
        return (next, false);
    };
    let rest: f64 = app
        .terms
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != idx)
        .map(|(_, t)| t.d1(x))
        .sum();
    let denom = lambda + app.d + rest;
    if !(denom > 0.0) {
        return (app.mask, true);
    }
    let raw = match *own {
        Term::Own { weight, interference } => weight / denom - interference,
        Term::ScaleOwn { weight, alpha, .. } => weight * alpha / denom,
        _ => unreachable!(),
    };
    if !raw.is_finite() {
        return (app.mask, true);
    }
    (raw.clamp(0.0, app.mask), false)
}

/// Iterates [`fixed_point_step`] from the build point.
///
/// The iteration count excludes the final update that only confirms
/// convergence, so a method whose update is exact reports one.
pub fn solve_fixed_point(
    app: &UnivariateApproximation,
    lambda: f64,
    opts: &SolverOptions,
) -> SubproblemSolution {
    let floor = POWER_FLOOR_REL * app.mask;
    let mut x = app.build_point;
    let mut iterations = 0;
    let mut converged = false;
    let mut diverged = false;
    for step in 1..=opts.fp_max_iter.max(1) {
        let (next, div) = fixed_point_step(app, lambda, x);
        diverged |= div;
        let moved = db_distance(next, x, floor);
        x = next;
        if moved < opts.fp_tol_db {
            iterations = (step - 1).max(1);
            converged = true;
            break;
        }
        iterations = step;
    }
    SubproblemSolution {
        x,
        value: objective(app, lambda, x),
        candidates: vec![x],
        mode: SolveMode::FixedPoint,
        fp_iterations: iterations,
        root_solve: false,
        poly_degree: 0,
        numeric: false,
        fp_converged: converged,
        diverged,
    }
}

pub fn solve(
    app: &UnivariateApproximation,
    lambda: f64,
    mode: SolveMode,
    opts: &SolverOptions,
) -> Result<SubproblemSolution> {
    match mode {
        SolveMode::ClosedForm => solve_closed_form(app, lambda, opts),
        SolveMode::FixedPoint => Ok(solve_fixed_point(app, lambda, opts)),
    }
}
