//! Building blocks of the kept (non-linearized) part of an approximation.

use crate::objective::Victim;
use crate::poly::Poly;

/// One additive term of the kept part, as a function of the optimized power `x`.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    /// `-weight ln(1 + x / interference)`.
    Own { weight: f64, interference: f64 },
    /// `-weight alpha ln(x / interference) + constant`.
    ScaleOwn {
        weight: f64,
        alpha: f64,
        interference: f64,
        constant: f64,
    },
    /// Another user's rate term kept exactly.
    Exact(Victim),
    /// `-w alpha ln(s / int(x)) + constant`: lower bound of another user's rate.
    Alpha {
        victim: Victim,
        alpha: f64,
        constant: f64,
    },
    /// `-w ln(int(x) + s) + constant`: received-power part of another user's rate.
    Cadsb { victim: Victim, constant: f64 },
    /// `-l (x - center)^2`.
    Quadratic { l: f64, center: f64 },
}

impl Term {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Term::Own { weight, interference } => -weight * (x / interference).ln_1p(),
            Term::ScaleOwn {
                weight,
                alpha,
                interference,
                constant,
            } => -weight * alpha * (x / interference).ln() + constant,
            Term::Exact(v) => v.value(x),
            Term::Alpha {
                victim: v,
                alpha,
                constant,
            } => -v.weight * alpha * (v.power / v.interference(x)).ln() + constant,
            Term::Cadsb { victim: v, constant } => {
                -v.weight * (v.interference(x) + v.power).ln() + constant
            }
            Term::Quadratic { l, center } => -l * (x - center) * (x - center),
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match *self {
            Term::Own { weight, interference } => -weight / (x + interference),
            Term::ScaleOwn { weight, alpha, .. } => -weight * alpha / x,
            Term::Exact(v) => v.d1(x),
            Term::Alpha { victim: v, alpha, .. } => {
                v.weight * alpha * v.coupling / v.interference(x)
            }
            Term::Cadsb { victim: v, .. } => {
                -v.weight * v.coupling / (v.interference(x) + v.power)
            }
            Term::Quadratic { l, center } => -2.0 * l * (x - center),
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match *self {
            Term::Own { weight, interference } => {
                let t = x + interference;
                weight / (t * t)
            }
            Term::ScaleOwn { weight, alpha, .. } => weight * alpha / (x * x),
            Term::Exact(v) => -v.curvature(x),
            Term::Alpha { victim: v, alpha, .. } => {
                let i = v.interference(x);
                -v.weight * alpha * v.coupling * v.coupling / (i * i)
            }
            Term::Cadsb { victim: v, .. } => {
                let r = v.interference(x) + v.power;
                v.weight * v.coupling * v.coupling / (r * r)
            }
            Term::Quadratic { l, .. } => -2.0 * l,
        }
    }

    /// The derivative as `num(x) / den(x)`.
    pub fn rational_derivative(&self) -> (Poly, Poly) {
        match *self {
            Term::Own { weight, interference } => {
                (Poly::constant(-weight), Poly::linear(interference, 1.0))
            }
            Term::ScaleOwn { weight, alpha, .. } => {
                (Poly::constant(-weight * alpha), Poly::linear(0.0, 1.0))
            }
            Term::Exact(v) => {
                let i = Poly::linear(v.base, v.coupling);
                let r = Poly::linear(v.base + v.power, v.coupling);
                (Poly::constant(v.weight * v.coupling * v.power), i.mul(&r))
            }
            Term::Alpha { victim: v, alpha, .. } => (
                Poly::constant(v.weight * alpha * v.coupling),
                Poly::linear(v.base, v.coupling),
            ),
            Term::Cadsb { victim: v, .. } => (
                Poly::constant(-v.weight * v.coupling),
                Poly::linear(v.base + v.power, v.coupling),
            ),
            Term::Quadratic { l, center } => {
                (Poly::linear(2.0 * l * center, -2.0 * l), Poly::constant(1.0))
            }
        }
    }
}

/// Sums term derivatives into a single fraction `num / den`.
pub fn combine_rational(terms: &[Term]) -> (Poly, Poly) {
    let parts: Vec<(Poly, Poly)> = terms.iter().map(Term::rational_derivative).collect();
    let mut num = Poly::constant(0.0);
    let mut den = Poly::constant(1.0);
    for (n_i, d_i) in &parts {
        num = num.mul(d_i).add(&n_i.mul(&den));
        den = den.mul(d_i);
    }
    (num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn victim() -> Victim {
        Victim {
            user: 1,
            weight: 0.7,
            coupling: 0.3,
            base: 0.2,
            power: 1.5,
        }
    }

    fn all_terms() -> Vec<Term> {
        let v = victim();
        vec![
            Term::Own { weight: 1.0, interference: 0.4 },
            Term::ScaleOwn { weight: 1.0, alpha: 0.6, interference: 0.4, constant: 0.1 },
            Term::Exact(v),
            Term::Alpha { victim: v, alpha: 0.4, constant: -0.2 },
            Term::Cadsb { victim: v, constant: 0.05 },
            Term::Quadratic { l: 0.3, center: 0.8 },
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for t in all_terms() {
            for &x in &[0.3, 1.0, 2.5] {
                let h = 1e-6;
                let fd1 = (t.value(x + h) - t.value(x - h)) / (2.0 * h);
                let fd2 = (t.d1(x + h) - t.d1(x - h)) / (2.0 * h);
                assert!((fd1 - t.d1(x)).abs() < 1e-7 * (1.0 + t.d1(x).abs()), "{t:?}");
                assert!((fd2 - t.d2(x)).abs() < 1e-6 * (1.0 + t.d2(x).abs()), "{t:?}");
            }
        }
    }

    #[test]
    fn rational_form_matches() {
        let terms = all_terms();
        let (num, den) = combine_rational(&terms);
        for &x in &[0.3, 1.0, 2.5] {
            let direct: f64 = terms.iter().map(|t| t.d1(x)).sum();
            assert!((num.eval(x) / den.eval(x) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        }
    }
}
