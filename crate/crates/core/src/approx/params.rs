//! Closed-form parameters evaluated at the approximation point.

use crate::channel::Channel;
use crate::objective::{interference_tone, Victim};

/// `α_k^m = s̃^m / (s̃^m + int^m(s̃))`, in `[0, 1)`.
pub fn alpha_param(ch: &Channel, s_tilde: &[f64], k: usize, m: usize) -> f64 {
    let s = s_tilde[m];
    s / (s + interference_tone(ch, k, m, s_tilde))
}

/// `b_k^n = Σ_{m≠n} w_m a_k^{m,n} / int_k^m(s̃)`.
pub fn cadsb_b_param(ch: &Channel, s_tilde: &[f64], k: usize, n: usize) -> f64 {
    (0..ch.num_users())
        .filter(|&m| m != n)
        .map(|m| ch.weight(m) * ch.gain(k, m, n) / interference_tone(ch, k, m, s_tilde))
        .sum()
}

/// Constant making `-w α ln(s/int) + c` equal `-w ln(1 + s/int)` at `s̃`.
/// Zero when `s̃^m = 0`.
pub fn scale_c_param(ch: &Channel, s_tilde: &[f64], k: usize, m: usize) -> f64 {
    let s = s_tilde[m];
    if s == 0.0 {
        return 0.0;
    }
    let int = interference_tone(ch, k, m, s_tilde);
    let alpha = s / (s + int);
    scale_constant(ch.weight(m), alpha, s, int)
}

pub(crate) fn scale_constant(weight: f64, alpha: f64, s: f64, int: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    -weight * (s / int).ln_1p() + weight * alpha * (s / int).ln()
}

/// Magnitude of the second derivative of an α lower-bound term at `x`.
pub(crate) fn alpha_curvature(v: &Victim, alpha: f64, x: f64) -> f64 {
    let i = v.interference(x);
    v.weight * alpha * v.coupling * v.coupling / (i * i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelBuilder;

    #[test]
    fn alpha_half_when_power_equals_interference() {
        let ch = ChannelBuilder::new(2, 1)
            .gain(0, 1, 0, 0.5)
            .noise_all(0.5)
            .build()
            .unwrap();
        assert_eq!(alpha_param(&ch, &[1.0, 1.0], 0, 1), 0.5);
        assert_eq!(alpha_param(&ch, &[1.0, 0.0], 0, 1), 0.0);
        let c = scale_c_param(&ch, &[1.0, 1.0], 0, 1);
        assert!((c + std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(scale_c_param(&ch, &[1.0, 0.0], 0, 1), 0.0);
    }

    #[test]
    fn cadsb_b_two_user() {
        let ch = ChannelBuilder::new(2, 1)
            .gain(0, 1, 0, 0.1)
            .noise_all(1.0)
            .build()
            .unwrap();
        assert!((cadsb_b_param(&ch, &[0.0, 3.0], 0, 0) - 0.1).abs() < 1e-15);
        assert_eq!(cadsb_b_param(&ch, &[0.0, 3.0], 0, 1), 0.0);
    }
}
