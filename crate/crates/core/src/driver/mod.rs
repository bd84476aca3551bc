//! The outer sweep / user / inner-approximation loop.

mod alloc;
pub mod convergence;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use alloc::{allocate_hybrid, MethodAssignment};

use crate::approx::{build, ApproximationSpec, UnivariateApproximation};
use crate::channel::{Channel, PowerAllocation};
use crate::dual::{solve_user, DualOptions, UserSolution};
use crate::error::{Error, Result};
use crate::objective::{objective, rates};
use crate::subproblem::{SolveMode, SolverOptions, POWER_FLOOR_REL};
use crate::units::db_distance;

/// Relative increase of the approximate objective tolerated before a dual
/// solution is rejected in favour of the current point.
pub const ACCEPT_SLACK_REL: f64 = 1e-10;

const POLISH_DUAL: DualOptions = DualOptions {
    power_tol_rel: 1e-13,
    lambda_tol_rel: 1e-15,
    max_bisection_steps: 200,
    max_doublings: 1000,
};

#[derive(Clone, Debug, PartialEq)]
pub enum InitRule {
    AllZero,
    Mask,
    Given(PowerAllocation),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OuterStop {
    /// Exactly this many sweeps.
    Sweeps(usize),
    /// Stop when the relative objective change over a sweep drops below `tol`.
    ObjectiveChange { tol: f64, max_sweeps: usize },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub assignment: MethodAssignment,
    pub outer: OuterStop,
    pub inner_max: usize,
    /// Inner stop: largest per-tone power change below this, in dB.
    pub inner_tol_db: f64,
    pub mode: SolveMode,
    pub init: InitRule,
    pub solver: SolverOptions,
    pub dual: DualOptions,
}

impl RunConfig {
    pub fn new(assignment: MethodAssignment) -> Self {
        RunConfig {
            assignment,
            outer: OuterStop::ObjectiveChange {
                tol: 1e-8,
                max_sweeps: 50,
            },
            inner_max: 10,
            inner_tol_db: 0.01,
            mode: SolveMode::ClosedForm,
            init: InitRule::AllZero,
            solver: SolverOptions::default(),
            dual: DualOptions::default(),
        }
    }

    /// The same spec for every user and tone.
    pub fn uniform(ch: &Channel, spec: ApproximationSpec) -> Self {
        Self::new(MethodAssignment::uniform(spec, ch.num_users(), ch.num_tones()))
    }

    pub fn with_mode(mut self, mode: SolveMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_init(mut self, init: InitRule) -> Self {
        self.init = init;
        self
    }

    pub fn with_outer(mut self, outer: OuterStop) -> Self {
        self.outer = outer;
        self
    }

    fn validate(&self, ch: &Channel) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.assignment.num_users() != ch.num_users() || self.assignment.num_tones() != ch.num_tones() {
            return bad("method assignment dimensions do not match the channel");
        }
        if self.inner_max == 0 {
            return bad("inner iteration cap must be at least 1");
        }
        if !(self.inner_tol_db > 0.0) {
            return bad("inner tolerance must be positive");
        }
        match self.outer {
            OuterStop::Sweeps(0) => return bad("sweep count must be at least 1"),
            OuterStop::ObjectiveChange { tol, max_sweeps } => {
                if !(tol > 0.0) || max_sweeps == 0 {
                    return bad("outer tolerance must be positive and the sweep cap at least 1");
                }
            }
            _ => {}
        }
        if let InitRule::Given(s) = &self.init {
            if s.num_users() != ch.num_users() || s.num_tones() != ch.num_tones() {
                return bad("initial allocation dimensions do not match the channel");
            }
            if !s.is_feasible(ch, f64::INFINITY) {
                return bad("initial allocation violates the spectral masks");
            }
        }
        Ok(())
    }
}

/// One entry of the objective trace, recorded after every inner iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub sweep: usize,
    pub user: usize,
    pub inner: usize,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnTiming {
    pub sweep: usize,
    pub user: usize,
    pub seconds: f64,
}

/// Conditions worth a look that do not stop a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunFlags {
    /// Inner loops stopped by the iteration cap.
    pub inner_cap_hits: usize,
    /// Tone solves whose fixed-point iteration hit its cap.
    pub fp_not_converged: usize,
    /// Tone solves where the fixed-point divergence guard fired.
    pub fp_diverged: usize,
    /// Tone solves that needed numeric root isolation.
    pub numeric_roots: usize,
    /// Dual solutions rejected because they did not improve the approximation.
    pub dual_fallbacks: usize,
    /// Dual solves redone with tight tolerances before deciding on a fallback.
    pub polished_duals: usize,
    /// Largest relative budget slack left when the price was positive.
    pub max_budget_gap_rel: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub allocation: PowerAllocation,
    /// Per-user rates, bit/s.
    pub rates: Vec<f64>,
    pub weighted_rate: f64,
    /// Final value of `Σ_k f_k`.
    pub objective: f64,
    pub initial_objective: f64,
    pub trace: Vec<TraceEntry>,
    /// Approximations built per `(k, n)`, tone-major.
    pub approximation_counts: Vec<usize>,
    /// Fixed-point updates per `(k, n)` in the accepted solves, tone-major.
    pub fp_iterations: Vec<usize>,
    /// `lambdas[sweep][n]`, price at the end of user `n`'s turn.
    pub lambdas: Vec<Vec<f64>>,
    /// Root solves keyed by the method's declared degree.
    pub root_solves_by_declared_degree: BTreeMap<usize, u64>,
    /// Root solves keyed by the degree of the polynomial actually solved.
    pub root_solves_by_poly_degree: BTreeMap<usize, u64>,
    pub timings: Vec<TurnTiming>,
    pub sweeps: usize,
    pub converged: bool,
    pub flags: RunFlags,
}

impl SolveReport {
    /// Root solves at declared degree three.
    pub fn cubic_solves(&self) -> u64 {
        self.root_solves_by_declared_degree.get(&3).copied().unwrap_or(0)
    }

    pub fn mean_approximations(&self) -> f64 {
        let c = &self.approximation_counts;
        c.iter().sum::<usize>() as f64 / c.len() as f64
    }
}

/// Statistics of one user's inner loop.
#[derive(Clone, Debug, Default)]
pub struct TurnStats {
    pub inner_iterations: usize,
    pub lambda: f64,
    pub capped: bool,
    /// Power of the user on every tone after each inner iteration.
    pub iterates: Vec<Vec<f64>>,
    /// Fixed-point updates per tone for each inner iteration.
    pub fp_iterations: Vec<Vec<usize>>,
    pub objectives: Vec<f64>,
    pub root_solves_declared: BTreeMap<usize, u64>,
    pub root_solves_poly: BTreeMap<usize, u64>,
    pub fp_not_converged: usize,
    pub fp_diverged: usize,
    pub numeric_roots: usize,
    pub dual_fallbacks: usize,
    /// Dual solves redone with tight tolerances before deciding on a fallback.
    pub polished_duals: usize,
    pub max_budget_gap_rel: f64,
}

pub(crate) fn build_user_approximations(
    ch: &Channel,
    s: &PowerAllocation,
    n: usize,
    assignment: &MethodAssignment,
) -> Result<Vec<UnivariateApproximation>> {
    (0..ch.num_tones())
        .into_par_iter()
        .with_min_len(16)
        .map(|k| build(assignment.get(k, n), ch, s.tone(k), k, n))
        .collect()
}

/// Runs user `n`'s inner approximation loop, updating `s` in place.
pub fn user_turn(
    ch: &Channel,
    s: &mut PowerAllocation,
    n: usize,
    cfg: &RunConfig,
    inner_max: usize,
) -> Result<TurnStats> {
    let nk = ch.num_tones();
    let budget = ch.budget(n);
    let mut stats = TurnStats::default();
    for inner in 1..=inner_max {
        let apps = build_user_approximations(ch, s, n, &cfg.assignment)?;
        let mut sol = solve_user(&apps, n, budget, cfg.mode, &cfg.solver, &cfg.dual)?;

        let old: Vec<f64> = (0..nk).map(|k| s.get(k, n)).collect();
        let old_total: f64 = old.iter().sum();
        let old_app: f64 = apps.iter().zip(&old).map(|(a, &x)| a.value(x)).sum();
        let app_at = |p: &[f64]| -> f64 { apps.iter().zip(p).map(|(a, &x)| a.value(x)).sum() };
        let mut new_app = app_at(&sol.powers);
        let slack = ACCEPT_SLACK_REL * old_app.abs().max(f64::MIN_POSITIVE);
        let regressed = |v: f64| old_total <= budget && v > old_app + slack;
        if regressed(new_app) && sol.lambda > 0.0 {
            // stopping short of the budget can cost up to lambda * gap, which
            // is enough to stall methods whose off tones decay geometrically
            let polished = solve_user(&apps, n, budget, cfg.mode, &cfg.solver, &POLISH_DUAL)?;
            stats.polished_duals += 1;
            let steps = sol.bisection_steps + polished.bisection_steps;
            sol = UserSolution { bisection_steps: steps, ..polished };
            new_app = app_at(&sol.powers);
        }
        // every dual evaluation counts, not only the accepted one
        let evaluations = sol.bisection_steps as u64 + 1;
        for app in &apps {
            let declared = app.declared_degree();
            let degree = app.stationarity(sol.lambda).degree();
            if cfg.mode == crate::subproblem::SolveMode::ClosedForm && degree > 0 {
                *stats.root_solves_declared.entry(declared).or_default() += evaluations;
                *stats.root_solves_poly.entry(degree).or_default() += evaluations;
            }
        }
        for t in &sol.solutions {
            stats.fp_not_converged += usize::from(!t.fp_converged);
            stats.fp_diverged += usize::from(t.diverged);
            stats.numeric_roots += usize::from(t.numeric);
        }
        if sol.lambda > 0.0 {
            stats.max_budget_gap_rel = stats.max_budget_gap_rel.max(sol.budget_gap / budget);
        }
        stats.lambda = sol.lambda;

        let accepted = if regressed(new_app) {
            stats.dual_fallbacks += 1;
            false
        } else {
            true
        };

        let mut moved = 0.0f64;
        if accepted {
            for (k, &x) in sol.powers.iter().enumerate() {
                let floor = POWER_FLOOR_REL * ch.mask(k, n);
                moved = moved.max(db_distance(x, old[k], floor));
                s.set(k, n, x);
            }
        }
        stats.inner_iterations = inner;
        stats.iterates.push((0..nk).map(|k| s.get(k, n)).collect());
        stats
            .fp_iterations
            .push(sol.solutions.iter().map(|t| t.fp_iterations).collect());
        stats.objectives.push(objective(ch, s));
        if !accepted || moved < cfg.inner_tol_db {
            return Ok(stats);
        }
    }
    stats.capped = true;
    Ok(stats)
}

pub(crate) fn initial_allocation(ch: &Channel, init: &InitRule) -> PowerAllocation {
    match init {
        InitRule::AllZero => PowerAllocation::for_channel(ch),
        InitRule::Mask => PowerAllocation::at_mask(ch),
        InitRule::Given(s) => s.clone(),
    }
}

/// Runs the full method until the outer stopping rule fires.
pub fn run(ch: &Channel, cfg: &RunConfig) -> Result<SolveReport> {
    cfg.validate(ch)?;
    let (nu, nk) = (ch.num_users(), ch.num_tones());
    let mut s = initial_allocation(ch, &cfg.init);
    let initial_objective = objective(ch, &s);
    let mut prev = initial_objective;

    let (max_sweeps, tol) = match cfg.outer {
        OuterStop::Sweeps(c) => (c, None),
        OuterStop::ObjectiveChange { tol, max_sweeps } => (max_sweeps, Some(tol)),
    };

    let mut trace = Vec::new();
    let mut counts = vec![0usize; nk * nu];
    let mut fp = vec![0usize; nk * nu];
    let mut lambdas = Vec::new();
    let mut declared = BTreeMap::new();
    let mut poly = BTreeMap::new();
    let mut timings = Vec::new();
    let mut flags = RunFlags::default();
    let mut converged = tol.is_none();
    let mut sweeps = 0;

    for sweep in 0..max_sweeps {
        sweeps = sweep + 1;
        let mut sweep_lambdas = Vec::with_capacity(nu);
        for n in 0..nu {
            let start = Instant::now();
            let st = user_turn(ch, &mut s, n, cfg, cfg.inner_max)?;
            timings.push(TurnTiming {
                sweep,
                user: n,
                seconds: start.elapsed().as_secs_f64(),
            });
            for (inner, obj) in st.objectives.iter().enumerate() {
                trace.push(TraceEntry {
                    sweep,
                    user: n,
                    inner: inner + 1,
                    objective: *obj,
                });
            }
            for k in 0..nk {
                counts[k * nu + n] += st.inner_iterations;
                fp[k * nu + n] += st.fp_iterations.iter().map(|it| it[k]).sum::<usize>();
            }
            for (d, c) in st.root_solves_declared {
                *declared.entry(d).or_insert(0) += c;
            }
            for (d, c) in st.root_solves_poly {
                *poly.entry(d).or_insert(0) += c;
            }
            flags.inner_cap_hits += usize::from(st.capped);
            flags.fp_not_converged += st.fp_not_converged;
            flags.fp_diverged += st.fp_diverged;
            flags.numeric_roots += st.numeric_roots;
            flags.dual_fallbacks += st.dual_fallbacks;
            flags.polished_duals += st.polished_duals;
            flags.max_budget_gap_rel = flags.max_budget_gap_rel.max(st.max_budget_gap_rel);
            sweep_lambdas.push(st.lambda);
        }
        lambdas.push(sweep_lambdas);
        let obj = objective(ch, &s);
        if let Some(tol) = tol {
            let scale = prev.abs().max(obj.abs()).max(f64::MIN_POSITIVE);
            if (prev - obj).abs() <= tol * scale {
                converged = true;
                prev = obj;
                break;
            }
        }
        prev = obj;
    }

    let r = rates(ch, &s);
    Ok(SolveReport {
        weighted_rate: r.weighted_sum(ch),
        rates: r.per_user,
        objective: prev,
        initial_objective,
        allocation: s,
        trace,
        approximation_counts: counts,
        fp_iterations: fp,
        lambdas,
        root_solves_by_declared_degree: declared,
        root_solves_by_poly_degree: poly,
        timings,
        sweeps,
        converged,
        flags,
    })
}
