use spectra_core::approx::{alpha_param, cadsb_b_param, scale_c_param};
use spectra_core::objective::{interference_tone, Restriction};
use spectra_core::oracle::{check_points, CheckGrid};
use spectra_core::verify::{random_instance, random_instances, verify_conditions, ConditionTolerances};
use spectra_core::*;

fn no_crosstalk() -> Channel {
    ChannelBuilder::new(3, 1).noise_all(0.01).mask_all(5.0).build().unwrap()
}

#[test]
fn alpha_matches_direct_ratio() {
    for seed in 0..100 {
        let inst = random_instance(seed, 2, 6);
        let ch = &inst.channel;
        for m in 0..ch.num_users() {
            let s = inst.s_tilde[m];
            let int = interference_tone(ch, 0, m, &inst.s_tilde);
            let a = alpha_param(ch, &inst.s_tilde, 0, m);
            assert!((a - s / (s + int)).abs() <= 1e-12);
            assert!((0.0..1.0).contains(&a));
        }
    }
}

#[test]
fn cadsb_b_examples() {
    assert_eq!(cadsb_b_param(&no_crosstalk(), &[1.0, 1.0, 1.0], 0, 1), 0.0);
    let two = ChannelBuilder::new(2, 1).gain(0, 1, 0, 0.1).noise_all(1.0).build().unwrap();
    assert!((cadsb_b_param(&two, &[0.0, 5.0], 0, 0) - 0.1).abs() < 1e-15);

    for seed in 0..50 {
        let inst = random_instance(seed, 6, 6);
        let ch = &inst.channel;
        let n = inst.user;
        let mut naive = 0.0;
        for m in 0..6 {
            if m == n {
                continue;
            }
            let mut int = ch.noise(0, m);
            for p in 0..6 {
                if p != m {
                    int += ch.gain(0, m, p) * inst.s_tilde[p];
                }
            }
            naive += ch.weight(m) * ch.gain(0, m, n) / int;
        }
        let b = cadsb_b_param(ch, &inst.s_tilde, 0, n);
        assert!((b - naive).abs() <= 1e-12 * naive.max(1e-300));
    }
}

#[test]
fn scale_constant_makes_log_bound_tight() {
    for seed in 0..100 {
        let inst = random_instance(seed, 2, 5);
        let ch = &inst.channel;
        for m in 0..ch.num_users() {
            let s = inst.s_tilde[m];
            if s == 0.0 {
                assert_eq!(scale_c_param(ch, &inst.s_tilde, 0, m), 0.0);
                continue;
            }
            let w = ch.weight(m);
            let int = interference_tone(ch, 0, m, &inst.s_tilde);
            let a = alpha_param(ch, &inst.s_tilde, 0, m);
            let c = scale_c_param(ch, &inst.s_tilde, 0, m);
            let exact = |g: f64| -w * (1.0 + g).ln();
            let bound = |g: f64| -w * a * g.ln() + c;
            let g0 = s / int;
            assert!((exact(g0) - bound(g0)).abs() <= 1e-12 * exact(g0).abs().max(1.0));
            // strict elsewhere on a log-spaced SINR grid
            for i in 0..256 {
                let g = g0 * 10f64.powf(-3.0 + 6.0 * i as f64 / 255.0);
                if (g / g0 - 1.0).abs() > 1e-3 {
                    assert!(bound(g) > exact(g), "seed {seed} m {m}");
                }
            }
        }
    }
}

#[test]
fn iasb2_has_zero_l_without_crosstalk() {
    let ch = no_crosstalk();
    for kind in [MethodKind::Iasb(2), MethodKind::Iasb2Convex] {
        let app = build(&ApproximationSpec::new(kind), &ch, &[1.0, 1.0, 1.0], 0, 1).unwrap();
        assert_eq!(app.params.l, Some(0.0));
    }
}

/// Both branches of the convex `L`, computed from the restriction directly.
fn convex_l_branches(r: &Restriction) -> (f64, f64) {
    let t = r.mask + r.own_interference;
    let own = r.weight / (2.0 * t * t);
    let linearized = 0.5 * r.victims.iter().map(|v| v.curvature(r.mask)).sum::<f64>();
    (own, linearized)
}

#[test]
fn iasb2_convex_takes_smaller_branch() {
    let mut own_branch = 0;
    let mut lin_branch = 0;
    for seed in 0..200 {
        let inst = random_instance(seed, 2, 4);
        let app = build(&ApproximationSpec::new(MethodKind::Iasb2Convex), &inst.channel, &inst.s_tilde, 0, inst.user).unwrap();
        let (own, lin) = convex_l_branches(app.restriction());
        let l = app.params.l.unwrap();
        assert!((l - own.min(lin)).abs() <= 1e-12 * own.min(lin).max(1e-300));
        if own < lin {
            own_branch += 1;
        } else {
            lin_branch += 1;
        }
        // the kept part stays convex
        for x in check_points(app.mask, app.build_point, 64) {
            assert!(app.d2(x) >= -1e-12 * app.restriction().weight / (x + app.restriction().own_interference).powi(2));
        }
    }
    assert!(own_branch > 0 && lin_branch > 0, "{own_branch} {lin_branch}");
}

#[test]
fn iasb6_linearized_part_is_concave() {
    let mut positive = 0;
    for seed in 0..200 {
        let inst = random_instance(seed, 2, 2);
        let app = build(&ApproximationSpec::new(MethodKind::Iasb(6)), &inst.channel, &inst.s_tilde, 0, inst.user).unwrap();
        let r = app.restriction();
        let beta = app.params.beta.unwrap();
        if beta > 0.0 {
            positive += 1;
        }
        // f2 = β·(own rate term) + other users' terms
        for i in 0..256 {
            let x = r.mask * i as f64 / 255.0;
            let t = x + r.own_interference;
            let f2_d2 = beta * r.weight / (t * t) - r.victims.iter().map(|v| v.curvature(x)).sum::<f64>();
            assert!(f2_d2 <= 1e-12 * r.weight / (t * t), "seed {seed} x {x}: {f2_d2}");
        }
    }
    assert!(positive > 50);
}

#[test]
fn iasb6_beta_matches_closed_form_when_below_one() {
    for seed in 0..200 {
        let inst = random_instance(seed, 2, 6);
        let app = build(&ApproximationSpec::new(MethodKind::Iasb(6)), &inst.channel, &inst.s_tilde, 0, inst.user).unwrap();
        let r = app.restriction();
        // (A) at zero own power, (B) at the mask
        let a = r.own_interference * r.own_interference;
        let b: f64 = r
            .victims
            .iter()
            .map(|v| {
                let int = v.interference(r.mask);
                let rec = int + v.power;
                v.weight * v.power * v.coupling * v.coupling / r.weight / (rec * int) * (1.0 / rec + 1.0 / int)
            })
            .sum();
        let expect = (a * b).min(1.0);
        let beta = app.params.beta.unwrap();
        assert!((beta - expect).abs() <= 1e-12 * expect.max(1e-300), "seed {seed}: {beta} vs {expect}");
    }
}

#[test]
fn iasb1_slope_matches_finite_difference_of_linearized_part() {
    for seed in 0..200 {
        let inst = random_instance(seed, 2, 6);
        let app = build(&ApproximationSpec::new(MethodKind::Iasb(1)), &inst.channel, &inst.s_tilde, 0, inst.user).unwrap();
        let r = app.restriction();
        let f2 = |x: f64| r.victims.iter().map(|v| v.value(x)).sum::<f64>();
        let x0 = app.build_point;
        // the victims vary on the scale base / coupling, which can be far below the mask
        let scale_x = r
            .victims
            .iter()
            .filter(|v| v.coupling > 0.0)
            .map(|v| v.base / v.coupling)
            .fold(r.mask, f64::min);
        let h = 1e-6 * scale_x;
        let (lo, hi) = ((x0 - h).max(0.0), x0 + h);
        let fd = (f2(hi) - f2(lo)) / (hi - lo);
        let scale = r.victims.iter().map(|v| v.d1(x0)).sum::<f64>() + r.weight / (x0 + r.own_interference);
        assert!((app.d - fd).abs() <= 1e-5 * scale, "seed {seed}");
        assert!(app.d >= 0.0);
    }
}

#[test]
fn every_kind_is_tight_at_build_point() {
    let inst = random_instances(100, 11, 2, 6);
    let mut kinds = MethodKind::NAMED.to_vec();
    kinds.push(MethodKind::Iasb2Convex);
    kinds.push("ia5-bral".parse().unwrap());
    for kind in kinds {
        let s = verify_conditions(&ApproximationSpec::new(kind), &inst, CheckGrid::Uniform(64), &ConditionTolerances::default(), 0.0).unwrap();
        assert!(s.pass(), "{kind}: {:?}", s.violations.first());
    }
}

#[test]
fn iasb3_can_be_nonconvex() {
    let ch = presets::escape_instance();
    let app = build(&ApproximationSpec::new(MethodKind::Iasb(3)), &ch, &[100.0, 100.0, 0.0], 0, presets::ESCAPE_USER).unwrap();
    // geometric grid from 1e-8 mW to the mask, nonuniform second differences
    let xs: Vec<f64> = (0..=2000).map(|i| 1e-8 * (app.mask / 1e-8).powf(i as f64 / 2000.0)).collect();
    let concave = xs.windows(3).any(|w| {
        let s1 = (app.value(w[1]) - app.value(w[0])) / (w[1] - w[0]);
        let s2 = (app.value(w[2]) - app.value(w[1])) / (w[2] - w[1]);
        s2 < s1
    });
    assert!(concave);
}

#[test]
fn theta_zero_turns_iasb6_into_iasb1() {
    for seed in 0..100 {
        let inst = random_instance(seed, 2, 6);
        let a = build(&ApproximationSpec::new(MethodKind::Iasb(6)).with_theta(0.0), &inst.channel, &inst.s_tilde, 0, inst.user).unwrap();
        let b = build(&ApproximationSpec::new(MethodKind::Iasb(1)), &inst.channel, &inst.s_tilde, 0, inst.user).unwrap();
        assert_eq!(a.d, b.d);
        for x in check_points(a.mask, a.build_point, 32) {
            assert_eq!(a.value(x), b.value(x));
        }
    }
}

#[test]
fn declared_degrees_follow_the_method_table() {
    let expect = [1, 2, 3, 2, 3, 1, 3, 3, 3];
    for (i, d) in expect.iter().enumerate() {
        assert_eq!(MethodKind::Iasb(i as u8 + 1).declared_degree(6), *d, "iasb{}", i + 1);
    }
    for n in 2..8 {
        assert_eq!(MethodKind::Iasb(10).declared_degree(n), n);
        assert_eq!(MethodKind::Cadsb.declared_degree(n), n);
        assert_eq!(MethodKind::Scale.declared_degree(n), n);
    }
}

#[test]
fn emitted_degree_never_exceeds_declared() {
    for seed in 0..200 {
        let inst = random_instance(seed, 2, 6);
        for kind in MethodKind::NAMED {
            let app = build(&ApproximationSpec::new(kind), &inst.channel, &inst.s_tilde, 0, inst.user).unwrap();
            assert!(app.stationarity(0.3).degree() <= app.declared_degree(), "{kind} seed {seed}");
        }
    }
}

#[test]
fn generalized_names() {
    let cases = [("ia1", "iasb1"), ("ia2-l", "iasb2"), ("ia3-r", "iasb3"), ("ia2-a", "iasb4"), ("ia3-a2", "iasb5"), ("ia1-b", "iasb6"), ("ia3-br", "iasb7"), ("ia3-ba2", "iasb8"), ("ia3-al", "iasb9")];
    for (generalized, named) in cases {
        let k: MethodKind = generalized.parse().unwrap();
        assert_eq!(k.to_string(), named);
    }
    let custom: MethodKind = "ia4-brl".parse().unwrap();
    assert_eq!(custom.declared_degree(5), 4);
    assert!("ia2-r".parse::<MethodKind>().is_err());
    assert!("iasb11".parse::<MethodKind>().is_err());
}

#[test]
fn reference_conflict_is_reported() {
    let ch = generate_synthetic(&SynthesisParams::new(4, 1, 0)).unwrap();
    let spec = ApproximationSpec::new(MethodKind::Iasb(5)).with_refs(1, 1, 1);
    let err = build(&spec, &ch, &[0.1; 4], 0, 0).unwrap_err();
    assert!(matches!(err, Error::ReferenceConflict { user: 0, .. }));
    // user 0 is a reference; fallback substitutes
    let spec = ApproximationSpec::new(MethodKind::Iasb(5)).with_refs(0, 1, 2);
    let app = build(&spec, &ch, &[0.1; 4], 0, 0).unwrap();
    let users: Vec<usize> = app.params.alpha.iter().map(|(m, _)| *m).collect();
    assert_eq!(users, vec![1, 2]);
}
