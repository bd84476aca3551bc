//! Property suites for the approximation conditions and tightness orderings,
//! run on seeded random single-tone instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{build, ApproximationSpec, MethodKind};
use crate::channel::ChannelBuilder;
use crate::error::Result;
use crate::objective::Restriction;
use crate::oracle::{verify_lemma_order, CheckGrid, OrderCheck, ToneInstance};

/// Draws `count` single-tone instances with `min_users..=max_users` users.
///
/// Gains span weak to strong coupling, noise spans high to low SNR, and
/// about one in five powers of the approximation point is exactly zero.
pub fn random_instances(count: usize, seed: u64, min_users: usize, max_users: usize) -> Vec<ToneInstance> {
    (0..count)
        .map(|i| {
            let inst_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            random_instance(inst_seed, min_users, max_users)
        })
        .collect()
}

pub fn random_instance(seed: u64, min_users: usize, max_users: usize) -> ToneInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nu = rng.gen_range(min_users..=max_users);
    let mask = 10f64.powf(rng.gen_range(-1.0..2.0));
    let mut b = ChannelBuilder::new(nu, 1).mask_all(mask).budget_all(mask);
    for n in 0..nu {
        b = b
            .weight(n, rng.gen_range(0.2..1.0))
            .noise(0, n, mask * 10f64.powf(rng.gen_range(-6.0..-0.5)));
        for m in 0..nu {
            if m != n {
                b = b.gain(0, n, m, 10f64.powf(rng.gen_range(-4.5..-0.05)));
            }
        }
    }
    let channel = b.build().expect("random instance is valid");
    let s_tilde = (0..nu)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                mask * rng.gen_range(0.0..1.0f64).powi(2)
            }
        })
        .collect();
    let user = rng.gen_range(0..nu);
    ToneInstance {
        channel,
        s_tilde,
        tone: 0,
        user,
        seed,
    }
}

/// Tolerances for the three approximation conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionTolerances {
    /// `|f_app(s̃) - f(s̃)|`.
    pub value_abs: f64,
    /// Relative derivative mismatch at `s̃` against central differences.
    pub derivative_rel: f64,
    /// Allowed amount by which `f_app` may dip below `f`.
    pub bound_abs: f64,
}

impl Default for ConditionTolerances {
    fn default() -> Self {
        ConditionTolerances {
            value_abs: 1e-9,
            derivative_rel: 1e-6,
            bound_abs: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Value,
    Derivative,
    UpperBound,
}

impl Condition {
    pub fn label(&self) -> &'static str {
        match self {
            Condition::Value => "value_match",
            Condition::Derivative => "derivative_match",
            Condition::UpperBound => "upper_bound",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub method: String,
    pub condition: Condition,
    pub seed: u64,
    pub x: f64,
    pub error: f64,
}

/// Worst-case errors of one method over a batch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub method: String,
    pub instances: usize,
    pub max_value_err: f64,
    pub max_derivative_err: f64,
    /// Most negative `f_app(x) - f(x)` seen (zero or positive when valid).
    pub min_bound_gap: f64,
    pub violations: Vec<Violation>,
}

impl ConditionSummary {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Central difference of the exact restriction, with a step small relative
/// to the curvature scales of every term.
pub fn finite_difference_d1(r: &Restriction, x: f64) -> f64 {
    let mut scale = x + r.own_interference;
    for v in &r.victims {
        if !v.is_inert() {
            scale = scale.min(v.interference(x) / v.coupling);
        }
    }
    let h = 1e-4 * scale;
    (r.value(x + h) - r.value(x - h)) / (2.0 * h)
}

/// Sum of the magnitudes of the derivative's parts; the natural scale for
/// relative derivative errors.
pub fn derivative_scale(r: &Restriction, x: f64) -> f64 {
    r.weight / (x + r.own_interference) + r.victims.iter().map(|v| v.d1(x).abs()).sum::<f64>()
}

/// Checks the three conditions for one spec on one instance.
/// `perturb_d` shifts the linear coefficient as a negative control.
pub fn check_instance(
    spec: &ApproximationSpec,
    inst: &ToneInstance,
    grid: CheckGrid,
    tol: &ConditionTolerances,
    perturb_d: f64,
) -> Result<(f64, f64, f64, Vec<Violation>)> {
    let mut app = build(spec, &inst.channel, &inst.s_tilde, inst.tone, inst.user)?;
    let r = app.restriction().clone();
    let xb = app.build_point;
    if perturb_d != 0.0 {
        app.perturb_d(perturb_d * derivative_scale(&r, xb));
    }
    let name = spec.kind.to_string();
    let mut violations = Vec::new();

    let value_err = (app.value(xb) - r.value(xb)).abs();
    if !(value_err <= tol.value_abs) {
        violations.push(Violation {
            method: name.clone(),
            condition: Condition::Value,
            seed: inst.seed,
            x: xb,
            error: value_err,
        });
    }

    let fd = finite_difference_d1(&r, xb);
    let deriv_err = (app.d1(xb) - fd).abs() / derivative_scale(&r, xb);
    if !(deriv_err <= tol.derivative_rel) {
        violations.push(Violation {
            method: name.clone(),
            condition: Condition::Derivative,
            seed: inst.seed,
            x: xb,
            error: deriv_err,
        });
    }

    let mut min_gap = f64::INFINITY;
    let mut worst_x = 0.0;
    for x in grid.points(app.mask, xb) {
        let gap = app.value(x) - r.value(x);
        if gap < min_gap || gap.is_nan() {
            min_gap = if gap.is_nan() { f64::NEG_INFINITY } else { gap };
            worst_x = x;
        }
    }
    if !(min_gap >= -tol.bound_abs) {
        violations.push(Violation {
            method: name,
            condition: Condition::UpperBound,
            seed: inst.seed,
            x: worst_x,
            error: -min_gap,
        });
    }
    Ok((value_err, deriv_err, min_gap, violations))
}

/// Runs [`check_instance`] for one spec over a batch.
pub fn verify_conditions(
    spec: &ApproximationSpec,
    instances: &[ToneInstance],
    grid: CheckGrid,
    tol: &ConditionTolerances,
    perturb_d: f64,
) -> Result<ConditionSummary> {
    let results = instances
        .par_iter()
        .map(|inst| check_instance(spec, inst, grid, tol, perturb_d))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = ConditionSummary {
        method: spec.kind.to_string(),
        instances: instances.len(),
        max_value_err: 0.0,
        max_derivative_err: 0.0,
        min_bound_gap: f64::INFINITY,
        violations: Vec::new(),
    };
    for (v, d, g, viol) in results {
        summary.max_value_err = summary.max_value_err.max(v);
        summary.max_derivative_err = summary.max_derivative_err.max(d);
        summary.min_bound_gap = summary.min_bound_gap.min(g);
        summary.violations.extend(viol);
    }
    Ok(summary)
}

/// Pairs `(tighter, looser)` whose pointwise ordering is guaranteed.
pub fn ordering_pairs() -> Vec<(MethodKind, MethodKind)> {
    use MethodKind::*;
    vec![
        (Iasb(1), Cadsb),
        (Iasb(2), Iasb(1)),
        (Iasb(3), Iasb(1)),
        (Iasb(4), Iasb(1)),
        (Iasb(3), Iasb(4)),
        (Iasb(5), Iasb(4)),
        (Iasb(5), Iasb(1)),
        (Iasb(6), Iasb(1)),
        (Iasb(7), Iasb(3)),
        (Iasb(8), Iasb(5)),
        (Iasb(10), Iasb(1)),
        (Iasb(10), Iasb(4)),
        (Iasb(10), Iasb(5)),
        (Iasb(10), Cadsb),
        (Iasb(10), Scale),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderResult {
    pub tighter: MethodKind,
    pub looser: MethodKind,
    pub check: OrderCheck,
}

/// Checks every pair from [`ordering_pairs`] on the batch.
pub fn verify_orders(
    instances: &[ToneInstance],
    grid: CheckGrid,
    slack: f64,
) -> Result<Vec<OrderResult>> {
    ordering_pairs()
        .into_iter()
        .map(|(a, b)| {
            let check = verify_lemma_order(
                &ApproximationSpec::new(a),
                &ApproximationSpec::new(b),
                instances,
                grid,
                slack,
            )?;
            Ok(OrderResult {
                tighter: a,
                looser: b,
                check,
            })
        })
        .collect()
}
