//! Per-user per-tone approximations `f_app = f1 + d x + e`, where `f1` is a
//! sum of kept [`Term`]s and `d x + e` linearizes the rest at the build point.

mod kind;
mod params;
mod term;

use serde::{Deserialize, Serialize};

pub use kind::{AlphaSet, Base, MethodKind, QuadMode, Recipe};
pub use params::{alpha_param, cadsb_b_param, scale_c_param};
pub use term::{combine_rational, Term};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::objective::{Restriction, Victim};
use crate::poly::Poly;
use params::{alpha_curvature, scale_constant};

/// The own-power log bound is singular at zero power, so SCALE approximations
/// are built no lower than this fraction of the user's interference.
pub const SCALE_FLOOR: f64 = 1e-12;

/// Which approximation to build, with reference users for the methods that
/// keep or bound specific other users' terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproximationSpec {
    pub kind: MethodKind,
    pub q: usize,
    pub t: usize,
    /// Substituted when the optimized user coincides with `q` or `t`.
    pub fallback: usize,
    /// Replaces the closed-form β (or `L` when the method has no β).
    pub theta: Option<f64>,
}

impl ApproximationSpec {
    pub fn new(kind: MethodKind) -> Self {
        ApproximationSpec {
            kind,
            q: 0,
            t: 1,
            fallback: 2,
            theta: None,
        }
    }

    pub fn with_refs(mut self, q: usize, t: usize, fallback: usize) -> Self {
        self.q = q;
        self.t = t;
        self.fallback = fallback;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    /// Reference users for user `n`, in the order they are consumed.
    ///
    /// Candidates are `q`, `t`, then `fallback`, skipping `n` and duplicates.
    /// With fewer other users than requested references, all others are used.
    pub fn resolve_refs(&self, n: usize, num_users: usize) -> Result<Vec<usize>> {
        let needed = self.kind.recipe().refs_needed();
        if needed == 0 {
            return Ok(Vec::new());
        }
        let wanted = needed.min(num_users - 1);
        let mut refs = Vec::with_capacity(wanted);
        for c in [self.q, self.t, self.fallback] {
            if refs.len() == wanted {
                break;
            }
            if c != n && c < num_users && !refs.contains(&c) {
                refs.push(c);
            }
        }
        if refs.len() < wanted {
            return Err(Error::ReferenceConflict {
                user: n,
                reason: format!(
                    "{} needs {wanted} distinct reference users other than {n}, got q={}, t={}, fallback={}",
                    self.kind, self.q, self.t, self.fallback
                ),
            });
        }
        Ok(refs)
    }
}

/// Parameters recorded while building an approximation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    /// `(m, α_k^m)` for every user given the log lower bound.
    pub alpha: Vec<(usize, f64)>,
    /// `(m, c_k^m)` matching `alpha`.
    pub scale_c: Vec<(usize, f64)>,
    pub cadsb_b: Option<f64>,
    pub l: Option<f64>,
    pub beta: Option<f64>,
    /// Users whose rate term is kept exactly.
    pub exact: Vec<usize>,
}

/// A built approximation of the restriction of `f_k` to user `n` at `s̃_k`.
#[derive(Clone, Debug)]
pub struct UnivariateApproximation {
    pub kind: MethodKind,
    pub tone: usize,
    pub user: usize,
    /// Power of the optimized user at which the approximation is tight.
    pub build_point: f64,
    pub mask: f64,
    pub terms: Vec<Term>,
    pub d: f64,
    pub e: f64,
    pub params: ParamRecord,
    declared_degree: usize,
    numerator: Poly,
    denominator: Poly,
    restriction: Restriction,
}

impl UnivariateApproximation {
    /// Kept part only.
    pub fn f1(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.value(x)).sum()
    }

    pub fn f1_d1(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.d1(x)).sum()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.f1(x) + self.d * x + self.e
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.f1_d1(x) + self.d
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.d2(x)).sum()
    }

    /// The exact restriction being approximated.
    pub fn restriction(&self) -> &Restriction {
        &self.restriction
    }

    /// Degree of the stationarity polynomial when every term is active.
    pub fn declared_degree(&self) -> usize {
        self.declared_degree
    }

    /// Degree of the stationarity polynomial actually emitted.
    pub fn poly_degree(&self) -> usize {
        self.numerator.degree().max(self.denominator.degree())
    }

    /// `f1'` as `numerator / denominator`.
    pub fn rational(&self) -> (&Poly, &Poly) {
        (&self.numerator, &self.denominator)
    }

    /// `p1..p8` with `f1'(x) = (p1 x³ + p2 x² + p3 x + p4) / (p5 x³ + p6 x² + p7 x + p8)`,
    /// when both polynomials have degree at most three.
    pub fn p_coefficients(&self) -> Option<[f64; 8]> {
        if self.numerator.degree() > 3 || self.denominator.degree() > 3 {
            return None;
        }
        let (n, d) = (&self.numerator, &self.denominator);
        Some([
            n.coeff(3),
            n.coeff(2),
            n.coeff(1),
            n.coeff(0),
            d.coeff(3),
            d.coeff(2),
            d.coeff(1),
            d.coeff(0),
        ])
    }

    /// Polynomial whose roots are the stationary points of `f_app + λ x`.
    pub fn stationarity(&self, lambda: f64) -> Poly {
        self.numerator
            .add(&self.denominator.scale(lambda + self.d))
    }

    /// Shifts `d` while keeping the value at the build point. Only used to
    /// check that the derivative condition is actually detected.
    #[doc(hidden)]
    pub fn perturb_d(&mut self, delta: f64) {
        self.d += delta;
        self.e -= delta * self.build_point;
    }
}

struct Tuning {
    beta: f64,
    l: f64,
}

/// Curvature available in the linearized part, evaluated with the optimized
/// user at its mask: every linearized rate term, minus the curvature of the
/// log lower bounds moved into the kept part.
///
/// An α term whose net curvature is negative at the mask can dip further
/// below it elsewhere; such a term is then covered by the α bound itself
/// (which dominates the rate term everywhere) instead of by the
/// linearization, so the resulting `L` or `β` still yields an upper bound.
fn curvature_budget(r: &Restriction, linearized: &[Victim], alpha: &[(Victim, f64)]) -> f64 {
    let exact: f64 = linearized.iter().map(|v| v.curvature(r.mask)).sum();
    let alpha_part: f64 = alpha.iter().map(|(v, a)| alpha_curvature(v, *a, r.mask)).sum();
    exact - alpha_part
}

fn tune(recipe: &Recipe, spec: &ApproximationSpec, r: &Restriction, budget: f64) -> Tuning {
    let w = r.weight;
    let i0 = r.own_interference;
    let mut l = 0.0;
    if let Some(mode) = recipe.quad {
        l = budget / 2.0;
        if mode == QuadMode::Convex {
            let t = r.mask + i0;
            l = l.min(w / (2.0 * t * t));
        }
        if let (Some(theta), false) = (spec.theta, recipe.beta) {
            l = theta;
        }
    }
    let mut beta = 0.0;
    if recipe.beta {
        beta = (i0 * i0 / w * (budget - 2.0 * l)).clamp(0.0, 1.0);
        if recipe.quad == Some(QuadMode::Convex) {
            let t = r.mask + i0;
            beta = beta.min((1.0 - 2.0 * l * t * t / w).max(0.0));
        }
        if let Some(theta) = spec.theta {
            beta = theta;
        }
    }
    Tuning { beta, l }
}

/// Builds the approximation of user `n` on tone `k` around the tone vector `s_tilde`.
pub fn build(
    spec: &ApproximationSpec,
    ch: &Channel,
    s_tilde: &[f64],
    k: usize,
    n: usize,
) -> Result<UnivariateApproximation> {
    let recipe = spec.kind.recipe();
    let nu = ch.num_users();
    let refs = spec.resolve_refs(n, nu)?;
    let restriction = Restriction::new(ch, k, n, s_tilde);
    let mask = restriction.mask;
    let i_own = restriction.own_interference;
    let w = restriction.weight;

    let mut x0 = s_tilde[n].clamp(0.0, mask);
    if recipe.base == Base::Scale {
        x0 = x0.max((SCALE_FLOOR * i_own).min(mask));
    }

    // split the other users by treatment
    let mut exact: Vec<Victim> = Vec::new();
    let mut alpha_users: Vec<usize> = Vec::new();
    let mut ref_iter = refs.iter().copied();
    if recipe.exact_ref {
        if let Some(q) = ref_iter.next() {
            exact.extend(restriction.victim(q).copied());
        }
    }
    match recipe.alpha {
        AlphaSet::None => {}
        AlphaSet::Refs(_) => alpha_users.extend(ref_iter),
        AlphaSet::AllOthers => alpha_users.extend(restriction.victims.iter().map(|v| v.user)),
    }
    let mut alpha: Vec<(Victim, f64)> = Vec::new();
    let mut rest: Vec<Victim> = Vec::new();
    for v in &restriction.victims {
        if exact.iter().any(|e| e.user == v.user) {
            continue;
        }
        if alpha_users.contains(&v.user) {
            let i = v.interference(x0);
            alpha.push((*v, v.power / (v.power + i)));
        } else {
            rest.push(*v);
        }
    }

    let mut params = ParamRecord {
        exact: exact.iter().map(|v| v.user).collect(),
        ..ParamRecord::default()
    };
    let mut terms = Vec::new();
    let mut d = 0.0;

    match recipe.base {
        Base::Iasb => {
            let mut linearized: Vec<Victim> = rest.clone();
            linearized.extend(alpha.iter().map(|(v, _)| *v));
            let budget = curvature_budget(&restriction, &linearized, &alpha);
            let tuning = tune(&recipe, spec, &restriction, budget);
            if recipe.beta {
                params.beta = Some(tuning.beta);
            }
            if recipe.quad.is_some() {
                params.l = Some(tuning.l);
            }
            let omega = (1.0 - tuning.beta) * w;
            if omega != 0.0 {
                terms.push(Term::Own {
                    weight: omega,
                    interference: i_own,
                });
            }
            d -= tuning.beta * w / (x0 + i_own);
            for v in &rest {
                d += v.d1(x0);
            }
            if tuning.l != 0.0 {
                terms.push(Term::Quadratic {
                    l: tuning.l,
                    center: x0,
                });
            }
        }
        Base::Cadsb => {
            terms.push(Term::Own {
                weight: w,
                interference: i_own,
            });
            let mut b = 0.0;
            for v in &rest {
                let i = v.interference(x0);
                b += v.weight * v.coupling / i;
                if v.coupling != 0.0 {
                    terms.push(Term::Cadsb {
                        victim: *v,
                        constant: v.weight * i.ln(),
                    });
                }
            }
            d += b;
            params.cadsb_b = Some(b);
        }
        Base::Scale => {
            let a_own = x0 / (x0 + i_own);
            let c_own = scale_constant(w, a_own, x0, i_own);
            terms.push(Term::ScaleOwn {
                weight: w,
                alpha: a_own,
                interference: i_own,
                constant: c_own,
            });
            params.alpha.push((n, a_own));
            params.scale_c.push((n, c_own));
        }
    }

    for v in &exact {
        if !v.is_inert() {
            terms.push(Term::Exact(*v));
        }
    }
    for (v, a) in &alpha {
        let i = v.interference(x0);
        let c = scale_constant(v.weight, *a, v.power, i);
        params.alpha.push((v.user, *a));
        params.scale_c.push((v.user, c));
        if !v.is_inert() {
            terms.push(Term::Alpha {
                victim: *v,
                alpha: *a,
                constant: c,
            });
        }
    }

    let f1_at = terms.iter().map(|t| t.value(x0)).sum::<f64>();
    let e = restriction.value(x0) - f1_at - d * x0;
    let (numerator, denominator) = combine_rational(&terms);

    Ok(UnivariateApproximation {
        kind: spec.kind,
        tone: k,
        user: n,
        build_point: x0,
        mask,
        terms,
        d,
        e,
        params,
        declared_degree: recipe.declared_degree(nu),
        numerator,
        denominator,
        restriction,
    })
}
