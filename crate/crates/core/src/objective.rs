//! The true nonconvex objective, rates, and the per-user univariate
//! restriction `x ↦ f_k(x; s_k^{-n})` with its first two derivatives.

use crate::channel::{Channel, PowerAllocation};
use crate::units::nats_to_bits;

/// Interference plus noise seen by receiver `n` on tone `k`, given the tone's
/// power vector `s_k`.
pub fn interference_tone(ch: &Channel, k: usize, n: usize, s_k: &[f64]) -> f64 {
    let mut acc = ch.noise(k, n);
    for (m, &s) in s_k.iter().enumerate() {
        if m != n {
            acc += ch.gain(k, n, m) * s;
        }
    }
    acc
}

/// `int_k^n(s)`.
pub fn interference(ch: &Channel, s: &PowerAllocation, k: usize, n: usize) -> f64 {
    interference_tone(ch, k, n, s.tone(k))
}

/// `f_k(s_k) = -Σ_n w_n ln(1 + s_k^n / int_k^n)`, in weighted nats.
pub fn per_tone_objective(ch: &Channel, s_k: &[f64], k: usize) -> f64 {
    let mut acc = 0.0;
    for (n, &s) in s_k.iter().enumerate() {
        acc -= ch.weight(n) * (s / interference_tone(ch, k, n, s_k)).ln_1p();
    }
    acc
}

/// Sum of `per_tone_objective` over all tones.
pub fn objective(ch: &Channel, s: &PowerAllocation) -> f64 {
    (0..ch.num_tones())
        .map(|k| per_tone_objective(ch, s.tone(k), k))
        .sum()
}

/// Bit loadings and rates of an allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Rates {
    /// `bits[k][n]`, bits per symbol.
    pub bits: Vec<Vec<f64>>,
    /// Per-user rate in bit/s.
    pub per_user: Vec<f64>,
}

impl Rates {
    /// `Σ_n w_n R^n` in bit/s.
    pub fn weighted_sum(&self, ch: &Channel) -> f64 {
        self.per_user
            .iter()
            .enumerate()
            .map(|(n, r)| ch.weight(n) * r)
            .sum()
    }
}

pub fn rates(ch: &Channel, s: &PowerAllocation) -> Rates {
    let (nu, nk) = (ch.num_users(), ch.num_tones());
    let mut bits = vec![vec![0.0; nu]; nk];
    let mut per_user = vec![0.0; nu];
    for (k, row) in bits.iter_mut().enumerate() {
        let s_k = s.tone(k);
        for n in 0..nu {
            let b = nats_to_bits((s_k[n] / interference_tone(ch, k, n, s_k)).ln_1p());
            row[n] = b;
            per_user[n] += b;
        }
    }
    let rate = ch.meta().symbol_rate_hz;
    per_user.iter_mut().for_each(|r| *r *= rate);
    Rates { bits, per_user }
}

/// One other user's rate term seen as a function of the optimized power `x`:
/// `T_m(x) = -w ln(1 + s / (c + a x))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Victim {
    pub user: usize,
    pub weight: f64,
    /// `a_k^{m,n}`: coupling from the optimized user into this receiver.
    pub coupling: f64,
    /// Interference at this receiver from everyone except the optimized user.
    pub base: f64,
    /// This user's own (fixed) power.
    pub power: f64,
}

impl Victim {
    #[inline]
    pub fn interference(&self, x: f64) -> f64 {
        self.base + self.coupling * x
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        -self.weight * (self.power / self.interference(x)).ln_1p()
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        let i = self.interference(x);
        self.weight * self.coupling * self.power / ((i + self.power) * i)
    }

    /// Magnitude of the (nonpositive) second derivative.
    #[inline]
    pub fn curvature(&self, x: f64) -> f64 {
        let i = self.interference(x);
        let r = i + self.power;
        self.weight * self.power * self.coupling * self.coupling * (r + i) / (r * r * i * i)
    }

    /// True when the term does not depend on `x` or vanishes.
    #[inline]
    pub fn is_inert(&self) -> bool {
        self.coupling == 0.0 || self.power == 0.0
    }
}

/// The restriction of `f_k` to user `n`'s power on tone `k` with all other
/// powers fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct Restriction {
    pub tone: usize,
    pub user: usize,
    pub weight: f64,
    /// `int_k^n`, constant in `x`.
    pub own_interference: f64,
    pub mask: f64,
    /// Every other user, indexed by position; `victims[i].user` is the index.
    pub victims: Vec<Victim>,
}

impl Restriction {
    /// Builds the restriction around the tone vector `s_k`; entry `n` is ignored.
    pub fn new(ch: &Channel, k: usize, n: usize, s_k: &[f64]) -> Self {
        let nu = ch.num_users();
        let mut victims = Vec::with_capacity(nu.saturating_sub(1));
        for m in 0..nu {
            if m == n {
                continue;
            }
            let mut base = ch.noise(k, m);
            for (p, &sp) in s_k.iter().enumerate() {
                if p != m && p != n {
                    base += ch.gain(k, m, p) * sp;
                }
            }
            victims.push(Victim {
                user: m,
                weight: ch.weight(m),
                coupling: ch.gain(k, m, n),
                base,
                power: s_k[m],
            });
        }
        Restriction {
            tone: k,
            user: n,
            weight: ch.weight(n),
            own_interference: interference_tone(ch, k, n, s_k),
            mask: ch.mask(k, n),
            victims,
        }
    }

    pub fn victim(&self, m: usize) -> Option<&Victim> {
        self.victims.iter().find(|v| v.user == m)
    }

    #[inline]
    pub fn own_value(&self, x: f64) -> f64 {
        -self.weight * (x / self.own_interference).ln_1p()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.own_value(x) + self.victims.iter().map(|v| v.value(x)).sum::<f64>()
    }

    pub fn d1(&self, x: f64) -> f64 {
        -self.weight / (x + self.own_interference)
            + self.victims.iter().map(|v| v.d1(x)).sum::<f64>()
    }

    pub fn d2(&self, x: f64) -> f64 {
        let t = x + self.own_interference;
        self.weight / (t * t) - self.victims.iter().map(|v| v.curvature(x)).sum::<f64>()
    }
}

/// `(f, f', f'')` of the restriction at `x`.
pub fn restriction_derivatives(
    ch: &Channel,
    k: usize,
    n: usize,
    s_k: &[f64],
    x: f64,
) -> (f64, f64, f64) {
    let r = Restriction::new(ch, k, n, s_k);
    (r.value(x), r.d1(x), r.d2(x))
}
