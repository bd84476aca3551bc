//! Brute-force references: grid searches over dBm ladders and per-user
//! exhaustive search under the budget.

use rayon::prelude::*;

use crate::approx::{build, ApproximationSpec};
use crate::channel::{Channel, PowerAllocation};
use crate::error::Result;
use crate::objective::Restriction;
use crate::units::{dbm_to_mw, mw_to_dbm};

/// Candidate powers: exact zero plus a dBm ladder from `floor_dbm` to the mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(mask_mw: f64, step_db: f64, floor_dbm: f64) -> Self {
        assert!(step_db > 0.0, "grid step must be positive");
        let mask_dbm = mw_to_dbm(mask_mw);
        let mut points = vec![0.0];
        let mut i = 0u64;
        loop {
            let dbm = floor_dbm + step_db * i as f64;
            if dbm >= mask_dbm {
                break;
            }
            points.push(dbm_to_mw(dbm));
            i += 1;
        }
        if *points.last().unwrap() < mask_mw {
            points.push(mask_mw);
        }
        Grid { points }
    }

    /// 0.1 dB steps from -80 dBm.
    pub fn standard(mask_mw: f64) -> Self {
        Self::new(mask_mw, 0.1, -80.0)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Exact argmin of `f(x) + λ x` over the grid; ties go to the smaller power.
pub fn grid_min_subproblem(f: impl Fn(f64) -> f64, lambda: f64, grid: &Grid) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    for &x in grid.points() {
        let v = f(x) + lambda * x;
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Grid points that are no worse than both neighbours, as `(x, f(x))`.
/// Flat runs report only their first point.
pub fn grid_local_minima(f: impl Fn(f64) -> f64, grid: &Grid) -> Vec<(f64, f64)> {
    let pts = grid.points();
    let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
    let mut out = Vec::new();
    for i in 0..pts.len() {
        let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
        let right = if i + 1 == pts.len() { f64::INFINITY } else { vals[i + 1] };
        if vals[i] < left && vals[i] <= right {
            out.push((pts[i], vals[i]));
        }
    }
    out
}

/// Lower convex hull of `(x, y)` points sorted by `x`, kept as vertex indices.
/// Minimizing `y + λ x` over the points always lands on a hull vertex.
#[derive(Clone, Debug)]
struct Hull {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // slope from vertex i to i + 1
    slopes: Vec<f64>,
}

impl Hull {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let mut hx: Vec<f64> = Vec::new();
        let mut hy: Vec<f64> = Vec::new();
        for (&x, &y) in xs.iter().zip(ys) {
            while hx.len() >= 2 {
                let (x1, y1) = (hx[hx.len() - 2], hy[hy.len() - 2]);
                let (x2, y2) = (hx[hx.len() - 1], hy[hy.len() - 1]);
                // drop the middle point unless it is strictly below the chord
                if (y2 - y1) * (x - x1) >= (y - y1) * (x2 - x1) {
                    hx.pop();
                    hy.pop();
                } else {
                    break;
                }
            }
            hx.push(x);
            hy.push(y);
        }
        let slopes = hx
            .windows(2)
            .zip(hy.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        Hull { xs: hx, ys: hy, slopes }
    }

    fn argmin(&self, lambda: f64) -> (f64, f64) {
        // first vertex whose outgoing slope is at least -λ
        let j = self.slopes.partition_point(|&s| s < -lambda);
        (self.xs[j], self.ys[j] + lambda * self.xs[j])
    }
}

/// Per-user optimum on the grid, for all tones, under the user's budget.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub powers: Vec<f64>,
    pub lambda: f64,
    pub total_power: f64,
    /// `Σ_k f_k` at the oracle powers with the other users fixed.
    pub objective: f64,
}

/// Grid search for user `n` with everyone else fixed at `s`, using bisection
/// on the budget price over grid-restricted tone problems.
pub fn exhaustive_per_user(
    ch: &Channel,
    s: &PowerAllocation,
    n: usize,
    step_db: f64,
    floor_dbm: f64,
) -> OracleSolution {
    let nk = ch.num_tones();
    let hulls: Vec<(Hull, Restriction)> = (0..nk)
        .into_par_iter()
        .map(|k| {
            let r = Restriction::new(ch, k, n, s.tone(k));
            let grid = Grid::new(ch.mask(k, n), step_db, floor_dbm);
            let ys: Vec<f64> = grid.points().iter().map(|&x| r.value(x)).collect();
            (Hull::new(grid.points(), &ys), r)
        })
        .collect();
    let solve = |lambda: f64| -> Vec<f64> { hulls.iter().map(|(h, _)| h.argmin(lambda).0).collect() };
    let total = |p: &[f64]| p.iter().sum::<f64>();
    let budget = ch.budget(n);

    let mut lambda = 0.0;
    let mut powers = solve(0.0);
    if total(&powers) > budget {
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut upper = solve(hi);
        while total(&upper) > budget && hi.is_finite() {
            lo = hi;
            hi *= 2.0;
            upper = solve(hi);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let p = solve(mid);
            if total(&p) > budget {
                lo = mid;
            } else {
                hi = mid;
                upper = p;
            }
        }
        lambda = hi;
        powers = upper;
    }
    let objective = hulls
        .iter()
        .zip(&powers)
        .map(|((_, r), &x)| r.value(x))
        .sum();
    OracleSolution {
        total_power: total(&powers),
        powers,
        lambda,
        objective,
    }
}

/// Evaluation points for bound and ordering checks: `count` uniform points
/// over `[0, mask]` (endpoints included) plus the build point.
pub fn check_points(mask: f64, build_point: f64, count: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..count)
        .map(|i| mask * i as f64 / (count - 1) as f64)
        .collect();
    pts.push(build_point);
    pts
}

/// Where bound and ordering checks evaluate the approximations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckGrid {
    /// Uniform points over `[0, mask]`, see [`check_points`].
    Uniform(usize),
    /// The oracle's dBm grid with this step (dB) down to -80 dBm, plus the
    /// build point.
    Db(f64),
}

impl CheckGrid {
    pub fn points(&self, mask: f64, build_point: f64) -> Vec<f64> {
        match *self {
            CheckGrid::Uniform(count) => check_points(mask, build_point, count),
            CheckGrid::Db(step) => {
                let mut pts = Grid::new(mask, step, -80.0).points().to_vec();
                pts.push(build_point);
                pts
            }
        }
    }
}

/// A single tone restriction to test approximations on.
#[derive(Clone, Debug)]
pub struct ToneInstance {
    pub channel: Channel,
    pub s_tilde: Vec<f64>,
    pub tone: usize,
    pub user: usize,
    /// Seed the instance was drawn from, for reporting.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderCheck {
    pub pass: bool,
    /// Smallest `f_looser(x) - f_tighter(x)` seen.
    pub worst_gap: f64,
    pub worst_seed: u64,
    pub worst_x: f64,
}

/// Checks `f_tighter(x) ≤ f_looser(x) + slack` on every instance and check point.
pub fn verify_lemma_order(
    tighter: &ApproximationSpec,
    looser: &ApproximationSpec,
    instances: &[ToneInstance],
    grid: CheckGrid,
    slack: f64,
) -> Result<OrderCheck> {
    let per_instance: Vec<(f64, u64, f64)> = instances
        .par_iter()
        .map(|inst| -> Result<(f64, u64, f64)> {
            let a = build(tighter, &inst.channel, &inst.s_tilde, inst.tone, inst.user)?;
            let b = build(looser, &inst.channel, &inst.s_tilde, inst.tone, inst.user)?;
            let mut worst = (f64::INFINITY, inst.seed, 0.0);
            for x in grid.points(a.mask, a.build_point) {
                let gap = b.value(x) - a.value(x);
                // both infinite at the same point compares as equal
                let gap = if gap.is_nan() { 0.0 } else { gap };
                if gap < worst.0 {
                    worst = (gap, inst.seed, x);
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let worst = per_instance
        .into_iter()
        .fold((f64::INFINITY, 0, 0.0), |acc, w| if w.0 < acc.0 { w } else { acc });
    Ok(OrderCheck {
        pass: worst.0 >= -slack,
        worst_gap: worst.0,
        worst_seed: worst.1,
        worst_x: worst.2,
    })
}
