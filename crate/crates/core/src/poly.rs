//! Dense real polynomials and their real roots.
//!
//! Degrees up to three are solved in closed form (trigonometric or Cardano
//! branch, then a guarded Newton polish). Higher degrees use recursive
//! isolation between the roots of the derivative followed by bisection.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Polynomial with coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    /// `a0 + a1 x`.
    pub fn linear(a0: f64, a1: f64) -> Self {
        Poly::new(vec![a0, a1])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..len).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `q(u) = p(s u)`.
    pub fn compose_scale(&self, s: f64) -> Poly {
        let mut f = 1.0;
        Poly::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let v = c * f;
                    f *= s;
                    v
                })
                .collect(),
        )
    }

    /// Divides by the largest coefficient magnitude.
    pub fn normalized(&self) -> Poly {
        let m = self.max_abs_coeff();
        if m == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / m)
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

// Leading coefficients this small relative to the rest are treated as a
// degree drop plus one far-away root.
const DEGENERATE_LEADING: f64 = 1e-9;
const POLISH_STEPS: usize = 4;

fn polish(p: &Poly, dp: &Poly, mut x: f64) -> f64 {
    let mut r = p.eval(x).abs();
    for _ in 0..POLISH_STEPS {
        if r == 0.0 {
            break;
        }
        let d = dp.eval(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let cand = x - p.eval(x) / d;
        let rc = p.eval(cand).abs();
        if rc.is_finite() && rc < r {
            x = cand;
            r = rc;
        } else {
            break;
        }
    }
    x
}

fn linear_roots(a0: f64, a1: f64) -> Vec<f64> {
    vec![-a0 / a1]
}

fn quadratic_roots(a0: f64, a1: f64, a2: f64) -> Vec<f64> {
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-a1 / (2.0 * a2)];
    }
    let sq = disc.sqrt();
    let q = if a1 >= 0.0 { -0.5 * (a1 + sq) } else { -0.5 * (a1 - sq) };
    vec![q / a2, a0 / q]
}

/// Roots of the monic cubic `x³ + b x² + c x + d`.
fn monic_cubic_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if p == 0.0 && q == 0.0 {
        return vec![-shift];
    }
    if disc < 0.0 {
        // three distinct real roots
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|j| r * (phi - 2.0 * PI * j as f64 / 3.0).cos() - shift)
            .collect()
    } else {
        let sq = disc.sqrt();
        let u = (-q / 2.0 - q.signum() * sq).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        let mut roots = vec![t - shift];
        if disc == 0.0 && u != 0.0 {
            // double root of the depressed cubic
            roots.push(-t / 2.0 - shift);
        }
        roots
    }
}

/// Closed-form real roots for degree ≤ 3. Roots are polished against the
/// input polynomial and returned sorted.
pub fn closed_form_roots(p: &Poly) -> Result<Vec<f64>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let deg = p.degree();
    if deg > 3 {
        return Err(Error::NoClosedForm { degree: deg });
    }
    let n = p.normalized();
    let c = |i| n.coeff(i);
    let mut roots = match deg {
        0 => Vec::new(),
        1 => linear_roots(c(0), c(1)),
        2 => {
            if c(2).abs() < DEGENERATE_LEADING * c(1).abs().max(c(0).abs()) && c(1) != 0.0 {
                let mut r = linear_roots(c(0), c(1));
                r.push(-c(1) / c(2));
                r
            } else {
                quadratic_roots(c(0), c(1), c(2))
            }
        }
        _ => {
            let rest = c(2).abs().max(c(1).abs()).max(c(0).abs());
            if c(3).abs() < DEGENERATE_LEADING * rest && c(2) != 0.0 {
                let mut r = quadratic_roots(c(0), c(1), c(2));
                r.push(-c(2) / c(3));
                r
            } else {
                monic_cubic_roots(c(2) / c(3), c(1) / c(3), c(0) / c(3))
            }
        }
    };
    let dn = n.derivative();
    for r in roots.iter_mut() {
        *r = polish(&n, &dn, *r);
    }
    roots.retain(|r| r.is_finite());
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// Cauchy bound on the magnitude of every root.
fn root_bound(p: &Poly) -> f64 {
    let lead = p.coeff(p.degree()).abs();
    1.0 + p.coeffs[..p.degree()]
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs() / lead))
}

fn bisect(p: &Poly, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = p.eval(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = p.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real roots of `p` in `[lo, hi]` by recursive isolation. Works for any
/// degree; roots of even multiplicity are found at critical points where
/// `p` vanishes up to rounding.
pub fn numeric_roots_in(p: &Poly, lo: f64, hi: f64) -> Vec<f64> {
    let p = p.normalized();
    let deg = p.degree();
    if p.is_zero() || deg == 0 {
        return Vec::new();
    }
    let crit: Vec<f64> = if deg == 1 {
        Vec::new()
    } else {
        numeric_roots_in(&p.derivative(), lo, hi)
    };
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(lo);
    knots.extend(crit.iter().copied().filter(|&c| c > lo && c < hi));
    knots.push(hi);
    let scale = p.max_abs_coeff() * (1.0 + lo.abs().max(hi.abs())).powi(deg as i32);
    let tol = 1e-13 * scale;
    let mut roots: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (p.eval(a), p.eval(b));
        if fa == 0.0 {
            roots.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            roots.push(bisect(&p, a, b));
        } else if fa.abs() <= tol && a != lo {
            // touching zero at a critical point
            roots.push(a);
        }
    }
    if p.eval(hi) == 0.0 {
        roots.push(hi);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + a.abs()));
    roots
}

/// All real roots: closed form up to degree three, numeric isolation above.
pub fn real_roots(p: &Poly) -> Result<Vec<f64>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if p.degree() <= 3 {
        closed_form_roots(p)
    } else {
        let b = root_bound(p);
        Ok(numeric_roots_in(p, -b, b))
    }
}
