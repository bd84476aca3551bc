//! Per-user dual problem: bisection on the budget price `λ_n`, with the
//! tones decoupled into independent subproblems.

use rayon::prelude::*;

use crate::approx::UnivariateApproximation;
use crate::error::{Error, Result};
use crate::subproblem::{solve, SolveMode, SolverOptions, SubproblemSolution};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualOptions {
    /// Stop once total power is within this fraction of the budget.
    pub power_tol_rel: f64,
    /// Stop once the bracket is this narrow relative to its upper end.
    pub lambda_tol_rel: f64,
    pub max_bisection_steps: usize,
    pub max_doublings: usize,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            power_tol_rel: 1e-6,
            lambda_tol_rel: 1e-10,
            max_bisection_steps: 100,
            max_doublings: 1000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DualEvaluation {
    pub lambda: f64,
    /// `g_app(λ) = -λ P + Σ_k min_x [f_app + λ x]`.
    pub value: f64,
    pub total_power: f64,
    pub solutions: Vec<SubproblemSolution>,
}

/// Solves every tone at price `λ`. Tone results are collected in order and
/// summed sequentially, so the outcome does not depend on scheduling.
pub fn evaluate_dual(
    apps: &[UnivariateApproximation],
    budget: f64,
    lambda: f64,
    mode: SolveMode,
    opts: &SolverOptions,
) -> Result<DualEvaluation> {
    let solutions = apps
        .par_iter()
        .with_min_len(16)
        .map(|app| solve(app, lambda, mode, opts))
        .collect::<Result<Vec<_>>>()?;
    let total_power: f64 = solutions.iter().map(|s| s.x).sum();
    let value = solutions.iter().map(|s| s.value).sum::<f64>() - lambda * budget;
    Ok(DualEvaluation {
        lambda,
        value,
        total_power,
        solutions,
    })
}

#[derive(Clone, Debug)]
pub struct UserSolution {
    pub powers: Vec<f64>,
    pub lambda: f64,
    pub total_power: f64,
    /// `budget - total_power`; nonnegative, and small whenever `λ > 0`.
    pub budget_gap: f64,
    pub bisection_steps: usize,
    pub solutions: Vec<SubproblemSolution>,
}

impl UserSolution {
    fn from_eval(eval: DualEvaluation, budget: f64, steps: usize) -> Self {
        UserSolution {
            powers: eval.solutions.iter().map(|s| s.x).collect(),
            lambda: eval.lambda,
            total_power: eval.total_power,
            budget_gap: budget - eval.total_power,
            bisection_steps: steps,
            solutions: eval.solutions,
        }
    }
}

/// Finds the smallest price meeting the budget, up to tolerance, and returns
/// the allocation on the feasible side of the bracket.
pub fn solve_user(
    apps: &[UnivariateApproximation],
    user: usize,
    budget: f64,
    mode: SolveMode,
    solver: &SolverOptions,
    opts: &DualOptions,
) -> Result<UserSolution> {
    let eval = |l: f64| evaluate_dual(apps, budget, l, mode, solver);
    let at_zero = eval(0.0)?;
    if at_zero.total_power <= budget {
        return Ok(UserSolution::from_eval(at_zero, budget, 0));
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut upper = eval(hi)?;
    let mut doublings = 0;
    while upper.total_power > budget {
        doublings += 1;
        if doublings > opts.max_doublings || !hi.is_finite() {
            return Err(Error::BracketFailure {
                user,
                lambda: hi,
                power: upper.total_power,
                budget,
            });
        }
        lo = hi;
        hi *= 2.0;
        upper = eval(hi)?;
    }

    let mut steps = 0;
    while steps < opts.max_bisection_steps {
        if budget - upper.total_power <= opts.power_tol_rel * budget
            || hi - lo <= opts.lambda_tol_rel * hi
        {
            break;
        }
        steps += 1;
        let mid = 0.5 * (lo + hi);
        let m = eval(mid)?;
        if m.total_power > budget {
            lo = mid;
        } else {
            hi = mid;
            upper = m;
        }
    }
    Ok(UserSolution::from_eval(upper, budget, steps))
}
