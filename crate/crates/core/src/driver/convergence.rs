//! Approximation counting against per-user grid optima.
//!
//! A reference run supplies the states at which each user starts its turn
//! ("contexts"). For each context the grid oracle gives the per-user
//! optimum, and each compared method runs that user's inner loop from the
//! same state. The count for a tone is the first approximation after which
//! the user's power stays within `tol_db` of the oracle.

use rayon::prelude::*;

use super::{initial_allocation, user_turn, RunConfig};
use crate::channel::{Channel, PowerAllocation};
use crate::error::Result;
use crate::oracle::exhaustive_per_user;
use crate::units::{db_distance, dbm_to_mw};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountOptions {
    /// Reference sweeps whose user turns become contexts.
    pub sweeps: usize,
    pub grid_step_db: f64,
    pub floor_dbm: f64,
    /// Agreement with the oracle, dB.
    pub tol_db: f64,
    /// Inner iteration cap while counting.
    pub inner_cap: usize,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            sweeps: 2,
            grid_step_db: 0.01,
            floor_dbm: -80.0,
            tol_db: 0.1,
            inner_cap: 50,
        }
    }
}

/// State at the start of one user's turn.
#[derive(Clone, Debug, PartialEq)]
pub struct Context {
    pub sweep: usize,
    pub user: usize,
    pub start: PowerAllocation,
}

/// Replays `reference` for `sweeps` sweeps and snapshots every user turn.
pub fn reference_contexts(ch: &Channel, reference: &RunConfig, sweeps: usize) -> Result<Vec<Context>> {
    let mut s = initial_allocation(ch, &reference.init);
    let mut out = Vec::with_capacity(sweeps * ch.num_users());
    for sweep in 0..sweeps {
        for n in 0..ch.num_users() {
            out.push(Context {
                sweep,
                user: n,
                start: s.clone(),
            });
            user_turn(ch, &mut s, n, reference, reference.inner_max)?;
        }
    }
    Ok(out)
}

/// Grid optimum of the context's user, one power per tone.
pub fn context_target(ch: &Channel, ctx: &Context, opts: &CountOptions) -> Vec<f64> {
    exhaustive_per_user(ch, &ctx.start, ctx.user, opts.grid_step_db, opts.floor_dbm).powers
}

/// Counts for one method in one context, per tone. `None` means the method
/// did not settle at the oracle optimum on that tone.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextCounts {
    pub approximations: Vec<Option<usize>>,
    /// Fixed-point updates accumulated up to the counted approximation.
    pub fp_updates: Vec<Option<usize>>,
}

/// Runs the context's user turn with `cfg` and counts per tone.
pub fn count_convergence(
    ch: &Channel,
    cfg: &RunConfig,
    ctx: &Context,
    target: &[f64],
    opts: &CountOptions,
) -> Result<ContextCounts> {
    let mut s = ctx.start.clone();
    let stats = user_turn(ch, &mut s, ctx.user, cfg, opts.inner_cap)?;
    let floor = dbm_to_mw(opts.floor_dbm);
    let nk = ch.num_tones();
    let mut approximations = vec![None; nk];
    let mut fp_updates = vec![None; nk];
    for k in 0..nk {
        let mut count = None;
        for (j, it) in stats.iterates.iter().enumerate().rev() {
            if db_distance(it[k], target[k], floor) <= opts.tol_db {
                count = Some(j + 1);
            } else {
                break;
            }
        }
        if let Some(c) = count {
            approximations[k] = Some(c);
            fp_updates[k] = Some(stats.fp_iterations[..c].iter().map(|f| f[k]).sum());
        }
    }
    Ok(ContextCounts {
        approximations,
        fp_updates,
    })
}

/// Per-method counts over the `(context, tone)` pairs on which every
/// compared method settled at the oracle optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparedCounts {
    pub approximations: Vec<Vec<usize>>,
    pub fp_updates: Vec<Vec<usize>>,
    /// Pairs considered before exclusion.
    pub total_pairs: usize,
}

impl ComparedCounts {
    pub fn mean_approximations(&self, method: usize) -> f64 {
        mean(&self.approximations[method])
    }

    pub fn mean_fp_updates(&self, method: usize) -> f64 {
        mean(&self.fp_updates[method])
    }
}

fn mean(v: &[usize]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }
}

/// Counts every method in every context. `fixed_point` holds the matching
/// fixed-point configurations when fixed-point counts are wanted; a pair is
/// kept only if every configuration converged there.
pub fn compare_counts(
    ch: &Channel,
    methods: &[RunConfig],
    fixed_point: Option<&[RunConfig]>,
    contexts: &[Context],
    opts: &CountOptions,
) -> Result<ComparedCounts> {
    let targets: Vec<Vec<f64>> = contexts
        .par_iter()
        .map(|c| context_target(ch, c, opts))
        .collect();
    let count_all = |cfgs: &[RunConfig]| -> Result<Vec<Vec<ContextCounts>>> {
        cfgs.iter()
            .map(|cfg| {
                contexts
                    .iter()
                    .zip(&targets)
                    .map(|(c, t)| count_convergence(ch, cfg, c, t, opts))
                    .collect()
            })
            .collect()
    };
    let closed = count_all(methods)?;
    let fixed = match fixed_point {
        Some(f) => Some(count_all(f)?),
        None => None,
    };

    let m = methods.len();
    let mut out = ComparedCounts {
        approximations: vec![Vec::new(); m],
        fp_updates: vec![Vec::new(); m],
        total_pairs: contexts.len() * ch.num_tones(),
    };
    for c in 0..contexts.len() {
        for k in 0..ch.num_tones() {
            let closed_ok = closed.iter().all(|per| per[c].approximations[k].is_some());
            let fixed_ok = fixed
                .as_ref()
                .map_or(true, |f| f.iter().all(|per| per[c].fp_updates[k].is_some()));
            if !(closed_ok && fixed_ok) {
                continue;
            }
            for i in 0..m {
                out.approximations[i].push(closed[i][c].approximations[k].unwrap());
                if let Some(f) = &fixed {
                    out.fp_updates[i].push(f[i][c].fp_updates[k].unwrap());
                }
            }
        }
    }
    Ok(out)
}
