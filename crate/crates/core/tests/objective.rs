use proptest::prelude::*;
use spectra_core::objective::{interference_tone, objective, Restriction};
use spectra_core::verify::random_instance;
use spectra_core::*;

fn two_user() -> Channel {
    ChannelBuilder::new(2, 1)
        .gain(0, 0, 1, 0.5)
        .gain(0, 1, 0, 0.25)
        .noise(0, 0, 0.5)
        .noise(0, 1, 0.5)
        .mask_all(10.0)
        .build()
        .unwrap()
}

#[test]
fn interference_examples() {
    let single = ChannelBuilder::new(1, 1).noise(0, 0, 0.3).build().unwrap();
    let s = PowerAllocation::at_mask(&single);
    assert_eq!(interference(&single, &s, 0, 0), 0.3);

    let ch = two_user();
    let mut s = PowerAllocation::for_channel(&ch);
    s.set(0, 1, 1.0);
    assert_eq!(interference(&ch, &s, 0, 0), 1.0);
}

#[test]
fn interference_matches_naive_sum() {
    for seed in 0..50 {
        let inst = random_instance(seed, 6, 6);
        let ch = &inst.channel;
        for n in 0..ch.num_users() {
            let mut naive = 0.0;
            for m in 0..ch.num_users() {
                if m != n {
                    naive += ch.gain(0, n, m) * inst.s_tilde[m];
                }
            }
            naive += ch.noise(0, n);
            let got = interference_tone(ch, 0, n, &inst.s_tilde);
            assert!((got - naive).abs() <= 1e-15 * naive, "{got} vs {naive}");
        }
    }
}

#[test]
fn per_tone_objective_examples() {
    let ch = two_user();
    assert_eq!(per_tone_objective(&ch, &[0.0, 0.0], 0), 0.0);
    let single = ChannelBuilder::new(1, 1).noise(0, 0, 0.2).build().unwrap();
    let v = per_tone_objective(&single, &[0.2], 0);
    assert!((v + 2f64.ln()).abs() < 1e-15);
}

#[test]
fn per_tone_objective_matches_direct_formula() {
    for seed in 0..50 {
        let inst = random_instance(seed, 2, 6);
        let ch = &inst.channel;
        let s = &inst.s_tilde;
        let mut direct = 0.0;
        for n in 0..ch.num_users() {
            let mut int = ch.noise(0, n);
            for m in 0..ch.num_users() {
                if m != n {
                    int += ch.gain(0, n, m) * s[m];
                }
            }
            direct -= ch.weight(n) * (1.0 + s[n] / int).ln();
        }
        let got = per_tone_objective(ch, s, 0);
        assert!((got - direct).abs() <= 1e-12 * direct.abs().max(1e-300));
    }
}

#[test]
fn rates_examples() {
    let single = ChannelBuilder::new(1, 2).noise_all(0.1).build().unwrap();
    let zero = rates(&single, &PowerAllocation::for_channel(&single));
    assert!(zero.per_user.iter().all(|&r| r == 0.0));

    let mut s = PowerAllocation::for_channel(&single);
    s.set(0, 0, 0.1);
    let r = rates(&single, &s);
    assert!((r.bits[0][0] - 1.0).abs() < 1e-15);
    assert!((r.per_user[0] - 4000.0).abs() < 1e-9);
}

#[test]
fn rates_match_oracle_summation() {
    let ch = two_user();
    let mut s = PowerAllocation::for_channel(&ch);
    s.set(0, 0, 3.0);
    s.set(0, 1, 2.0);
    let r = rates(&ch, &s);
    let b0 = (1.0_f64 + 3.0 / (0.5 * 2.0 + 0.5)).log2();
    let b1 = (1.0_f64 + 2.0 / (0.25 * 3.0 + 0.5)).log2();
    assert!((r.per_user[0] - 4000.0 * b0).abs() < 1e-9);
    assert!((r.per_user[1] - 4000.0 * b1).abs() < 1e-9);
    // weighted sum of rates in nats per symbol equals minus the objective
    let nats = -objective(&ch, &s);
    assert!((r.weighted_sum(&ch) / 4000.0 * 2f64.ln() - nats).abs() < 1e-12);
}

#[test]
fn restriction_without_crosstalk_is_single_log() {
    let ch = ChannelBuilder::new(3, 1).noise_all(0.5).weight(1, 2.0).build().unwrap();
    let (_, d1, d2) = restriction_derivatives(&ch, 0, 1, &[1.0, 0.0, 1.0], 0.7);
    assert!((d1 + 2.0 / 1.2).abs() < 1e-15);
    assert!((d2 - 2.0 / 1.44).abs() < 1e-15);
}

#[test]
fn restriction_derivatives_match_finite_differences() {
    for seed in 0..300 {
        let inst = random_instance(seed, 2, 6);
        let r = Restriction::new(&inst.channel, 0, inst.user, &inst.s_tilde);
        let h = 1e-6 * r.mask;
        for frac in [0.1, 0.37, 0.5, 0.81] {
            let x = frac * r.mask;
            let fd1 = (r.value(x + h) - r.value(x - h)) / (2.0 * h);
            let scale1 = r.weight / (x + r.own_interference)
                + r.victims.iter().map(|v| v.d1(x)).sum::<f64>();
            assert!((r.d1(x) - fd1).abs() <= 1e-5 * scale1, "seed {seed} x {x}");

            let h2 = 1e-4 * r.mask;
            let fd2 = (r.value(x + h2) - 2.0 * r.value(x) + r.value(x - h2)) / (h2 * h2);
            let t = x + r.own_interference;
            let scale2 = r.weight / (t * t) + r.victims.iter().map(|v| v.curvature(x)).sum::<f64>();
            // plus the rounding floor of a second difference
            let rounding = 8.0 * f64::EPSILON * r.value(x).abs() / (h2 * h2);
            assert!((r.d2(x) - fd2).abs() <= 1e-4 * scale2 + rounding, "seed {seed} x {x}");
        }
    }
}

fn arb_tone() -> impl Strategy<Value = (Channel, Vec<f64>, Vec<f64>, f64)> {
    (2usize..5, any::<u64>()).prop_flat_map(|(n, seed)| {
        let inst = random_instance(seed, n, n);
        let ch = inst.channel.clone();
        let mask = ch.mask(0, 0);
        (
            Just(ch),
            prop::collection::vec(0.0..1.0f64, n),
            prop::collection::vec(0.0..1.0f64, n),
            0.0..1.0f64,
        )
            .prop_map(move |(ch, a, b, l)| {
                let a = a.iter().map(|u| u * mask).collect();
                let b = b.iter().map(|u| u * mask).collect();
                (ch, a, b, l)
            })
    })
}

proptest! {
    #[test]
    fn interference_is_affine_in_other_powers((ch, a, b, l) in arb_tone()) {
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| l * x + (1.0 - l) * y).collect();
        for n in 0..ch.num_users() {
            let lhs = interference_tone(&ch, 0, n, &mix);
            let rhs = l * interference_tone(&ch, 0, n, &a) + (1.0 - l) * interference_tone(&ch, 0, n, &b);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
            prop_assert!(lhs >= ch.noise(0, n));
        }
    }

    #[test]
    fn own_term_decreases_in_own_power((ch, a, _b, l) in arb_tone()) {
        let n = 0;
        let r = Restriction::new(&ch, 0, n, &a);
        let x = l * r.mask;
        prop_assert!(r.own_value(x + 0.01 * r.mask) < r.own_value(x));
    }
}
