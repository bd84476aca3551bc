use spectra_core::driver::convergence::{compare_counts, count_convergence, reference_contexts, context_target, CountOptions};
use spectra_core::objective::objective;
use spectra_core::oracle::exhaustive_per_user;
use spectra_core::*;

fn assert_nonincreasing(rep: &SolveReport, label: &str) {
    let mut last = rep.initial_objective;
    for t in &rep.trace {
        assert!(
            t.objective <= last + 1e-9 * last.abs().max(1.0),
            "{label}: sweep {} user {} inner {}: {} > {}",
            t.sweep, t.user, t.inner, t.objective, last
        );
        last = t.objective;
    }
}

#[test]
fn traces_fall_and_budgets_hold_for_every_method() {
    let ch = generate_synthetic(&SynthesisParams::new(5, 24, 12)).unwrap();
    let mut kinds = MethodKind::NAMED.to_vec();
    kinds.push(MethodKind::Iasb2Convex);
    for kind in kinds {
        for mode in [SolveMode::ClosedForm, SolveMode::FixedPoint] {
            let cfg = RunConfig::uniform(&ch, ApproximationSpec::new(kind)).with_mode(mode).with_outer(OuterStop::Sweeps(3));
            let rep = run(&ch, &cfg).unwrap();
            let label = format!("{kind} {mode:?}");
            assert_nonincreasing(&rep, &label);
            assert!(rep.allocation.is_feasible(&ch, 1e-9), "{label}");
            assert_eq!(rep.objective, objective(&ch, &rep.allocation));
            assert_eq!(rep.sweeps, 3);
        }
    }
}

#[test]
fn single_user_matches_grid_oracle() {
    for seed in 0..3 {
        let ch = generate_synthetic(&SynthesisParams::new(1, 8, seed)).unwrap();
        for kind in [MethodKind::Iasb(1), MethodKind::Iasb(5), MethodKind::Cadsb, MethodKind::Scale] {
            // off tones shrink geometrically under SCALE, so let the loop run them down
            let outer = OuterStop::ObjectiveChange { tol: 1e-13, max_sweeps: 500 };
            let rep = run(&ch, &RunConfig::uniform(&ch, ApproximationSpec::new(kind)).with_outer(outer)).unwrap();
            assert!(rep.converged, "{kind}");
            let o = exhaustive_per_user(&ch, &PowerAllocation::for_channel(&ch), 0, 0.01, -80.0);
            // the grid can only lose against the continuous optimum, by a little
            assert!(rep.objective <= o.objective + 1e-12);
            assert!((rep.objective - o.objective).abs() <= 1e-4 * o.objective.abs(), "{kind}");
            let floor = units::dbm_to_mw(-80.0);
            for k in 0..8 {
                let d = units::db_distance(rep.allocation.get(k, 0), o.powers[k], floor);
                assert!(d <= 0.1, "{kind} tone {k}: {d} dB");
            }
        }
    }
}

#[test]
fn decoupled_users_solve_independently() {
    let mut b = ChannelBuilder::new(3, 6);
    for k in 0..6 {
        for n in 0..3 {
            b = b.noise(k, n, 1e-3 * (1 + k + 2 * n) as f64);
        }
    }
    let ch = b.mask_all(1.0).budget_all(2.0).weight(1, 0.4).build().unwrap();
    let joint = run(&ch, &RunConfig::uniform(&ch, ApproximationSpec::new(MethodKind::Iasb(3)))).unwrap();
    for n in 0..3 {
        let mut sb = ChannelBuilder::new(1, 6);
        for k in 0..6 {
            sb = sb.noise(k, 0, ch.noise(k, n));
        }
        let single = sb.mask_all(1.0).budget_all(2.0).weight(0, ch.weight(n)).build().unwrap();
        let alone = run(&single, &RunConfig::uniform(&single, ApproximationSpec::new(MethodKind::Iasb(1)))).unwrap();
        for k in 0..6 {
            assert_eq!(joint.allocation.get(k, n), alone.allocation.get(k, 0));
        }
    }
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let ch = generate_synthetic(&SynthesisParams::new(4, 64, 9)).unwrap();
    let cfg = RunConfig::uniform(&ch, ApproximationSpec::new(MethodKind::Iasb(5)));
    let a = run(&ch, &cfg).unwrap();
    let b = run(&ch, &cfg).unwrap();
    let c = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run(&ch, &cfg).unwrap());
    for other in [&b, &c] {
        assert_eq!(a.allocation, other.allocation);
        assert_eq!(a.trace, other.trace);
        assert_eq!(a.lambdas, other.lambdas);
        assert_eq!(a.root_solves_by_declared_degree, other.root_solves_by_declared_degree);
    }
}

#[test]
fn nonconvex_method_escapes_where_linear_one_sticks() {
    let ch = presets::escape_instance();
    let one = run(&ch, &RunConfig::uniform(&ch, ApproximationSpec::new(MethodKind::Iasb(1)))).unwrap();
    let three = run(&ch, &RunConfig::uniform(&ch, ApproximationSpec::new(MethodKind::Iasb(3)))).unwrap();
    assert!(three.objective < one.objective - 1.0);
    assert!(three.weighted_rate > one.weighted_rate);
    assert_eq!(one.allocation.get(0, presets::ESCAPE_USER), 0.0);

    // and never worse on a generic strong-interference pair
    let pair = ChannelBuilder::new(2, 1)
        .gain(0, 0, 1, 0.5)
        .gain(0, 1, 0, 0.5)
        .noise_all(1e-3)
        .build()
        .unwrap();
    let one = run(&pair, &RunConfig::uniform(&pair, ApproximationSpec::new(MethodKind::Iasb(1)))).unwrap();
    let three = run(&pair, &RunConfig::uniform(&pair, ApproximationSpec::new(MethodKind::Iasb(3)))).unwrap();
    assert!(three.objective <= one.objective + 1e-12);
}

#[test]
fn hybrid_rules() {
    let base = ApproximationSpec::new(MethodKind::Iasb(1));
    let all = allocate_hybrid("all:iasb1", 3, 4, base).unwrap();
    assert_eq!(all.uniform_kind(), Some(MethodKind::Iasb(1)));
    let two = allocate_hybrid("user2:iasb3,rest:iasb1", 2, 7, base).unwrap();
    assert_eq!(two.count_kind(MethodKind::Iasb(3)), 7);
    assert_eq!(two.get(3, 1).kind, MethodKind::Iasb(3));
    let bands = allocate_hybrid("tones>=3:iasb5,rest:iasb1", 2, 4, base).unwrap();
    assert_eq!(bands.count_kind(MethodKind::Iasb(5)), 4);
    assert!(allocate_hybrid("user3:iasb3,rest:iasb1", 2, 4, base).is_err());
    assert!(allocate_hybrid("user1:iasb3", 2, 4, base).is_err());
    assert!(allocate_hybrid("user1:iasb42,rest:iasb1", 2, 4, base).is_err());
}

#[test]
fn hybrid_matches_nonconvex_run_on_escape_instance() {
    let ch = presets::escape_instance();
    let spec = ApproximationSpec::new(MethodKind::Iasb(3));
    let all = run(&ch, &RunConfig::uniform(&ch, spec)).unwrap();
    let hybrid = run(&ch, &RunConfig::new(allocate_hybrid(presets::ESCAPE_HYBRID_RULE, 3, 1, spec).unwrap())).unwrap();
    assert!((all.objective - hybrid.objective).abs() <= 1e-9 * all.objective.abs());
    assert!(hybrid.cubic_solves() < all.cubic_solves());
}

#[test]
fn invalid_configs_are_rejected() {
    let ch = generate_synthetic(&SynthesisParams::new(2, 3, 0)).unwrap();
    let mut cfg = RunConfig::uniform(&ch, ApproximationSpec::new(MethodKind::Iasb(1)));
    cfg.inner_max = 0;
    assert!(matches!(run(&ch, &cfg), Err(Error::InvalidConfig(_))));
    let other = generate_synthetic(&SynthesisParams::new(3, 3, 0)).unwrap();
    let cfg = RunConfig::uniform(&other, ApproximationSpec::new(MethodKind::Iasb(1)));
    assert!(run(&ch, &cfg).is_err());
}

#[test]
fn decoupled_channels_count_one_everywhere() {
    let ch = ChannelBuilder::new(3, 8).noise_all(1e-3).budget_all(3.0).build().unwrap();
    let methods: Vec<RunConfig> = ["iasb1", "iasb5", "cadsb", "iasb10"]
        .iter()
        .map(|m| RunConfig::uniform(&ch, ApproximationSpec::new(m.parse().unwrap())))
        .collect();
    let opts = CountOptions::default();
    let contexts = reference_contexts(&ch, &methods[0], 1).unwrap();
    let counts = compare_counts(&ch, &methods, None, &contexts, &opts).unwrap();
    assert_eq!(counts.approximations[0].len(), counts.total_pairs);
    for per in &counts.approximations {
        assert!(per.iter().all(|&c| c == 1));
    }
}

#[test]
fn counts_are_bounded_by_the_inner_loop() {
    let ch = generate_synthetic(&SynthesisParams::new(3, 8, 4)).unwrap();
    let cfg = RunConfig::uniform(&ch, ApproximationSpec::new(MethodKind::Iasb(1)));
    let opts = CountOptions::default();
    let contexts = reference_contexts(&ch, &cfg, 1).unwrap();
    for ctx in &contexts {
        let target = context_target(&ch, ctx, &opts);
        let c = count_convergence(&ch, &cfg, ctx, &target, &opts).unwrap();
        for a in c.approximations.iter().flatten() {
            assert!((1..=opts.inner_cap).contains(a));
        }
    }
}
