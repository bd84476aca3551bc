use spectra_core::objective::Restriction;
use spectra_core::oracle::*;
use spectra_core::verify::random_instances;
use spectra_core::*;

#[test]
fn grid_has_zero_ladder_and_mask() {
    let g = Grid::new(2.0, 0.1, -80.0);
    let p = g.points();
    assert_eq!(p[0], 0.0);
    assert_eq!(*p.last().unwrap(), 2.0);
    assert!(p.windows(2).all(|w| w[0] < w[1]));
    assert!((units::mw_to_dbm(p[1]) + 80.0).abs() < 1e-12);
}

#[test]
fn grid_min_examples() {
    let g = Grid::standard(4.0);
    assert_eq!(grid_min_subproblem(|x| -x, 0.0, &g).0, 4.0);
    assert_eq!(grid_min_subproblem(|x| -(1.0 + x).ln(), 1e9, &g).0, 0.0);
}

#[test]
fn grid_agrees_with_iasb1_closed_form() {
    let opts = SolverOptions::default();
    for inst in random_instances(200, 3, 2, 5) {
        let app = build(&ApproximationSpec::new(MethodKind::Iasb(1)), &inst.channel, &inst.s_tilde, 0, inst.user).unwrap();
        let lambda = 0.3 * app.restriction().weight / (app.restriction().own_interference + app.mask);
        let cf = subproblem::solve_closed_form(&app, lambda, &opts).unwrap().x;
        let (g, _) = grid_min_subproblem(|x| app.value(x), lambda, &Grid::standard(app.mask));
        let floor = units::dbm_to_mw(-80.0);
        // the grid point sits next to the continuous optimum
        assert!(units::db_distance(cf, g, floor) <= 0.1 + 1e-9, "{cf} vs {g}");
    }
}

#[test]
fn single_tone_oracle_is_plain_grid_argmin() {
    let ch = ChannelBuilder::new(2, 1)
        .gain(0, 0, 1, 0.2)
        .gain(0, 1, 0, 0.3)
        .noise_all(0.01)
        .mask_all(1.0)
        .budget_all(5.0)
        .build()
        .unwrap();
    let mut s = PowerAllocation::for_channel(&ch);
    s.set(0, 1, 0.7);
    let o = exhaustive_per_user(&ch, &s, 0, 0.1, -80.0);
    let r = Restriction::new(&ch, 0, 0, s.tone(0));
    let (x, _) = grid_min_subproblem(|x| r.value(x), 0.0, &Grid::standard(1.0));
    assert_eq!(o.powers[0], x);
    assert_eq!(o.lambda, 0.0);
}

/// Waterfilling against noise: `x_k = clamp(μ - z_k, 0, mask)` with the water
/// level `μ` found by bisection.
fn analytic_waterfilling(noise: &[f64], mask: f64, budget: f64) -> Vec<f64> {
    let fill = |mu: f64| noise.iter().map(|z| (mu - z).clamp(0.0, mask)).collect::<Vec<_>>();
    if fill(f64::MAX).iter().sum::<f64>() <= budget {
        return fill(f64::MAX);
    }
    let (mut lo, mut hi) = (0.0, noise.iter().cloned().fold(0.0, f64::max) + mask);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fill(mid).iter().sum::<f64>() > budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    fill(lo)
}

#[test]
fn zero_crosstalk_oracle_matches_waterfilling() {
    let ch = generate_synthetic(&SynthesisParams::new(1, 24, 6)).unwrap();
    let noise: Vec<f64> = (0..24).map(|k| ch.noise(k, 0)).collect();
    let wf = analytic_waterfilling(&noise, ch.mask(0, 0), ch.budget(0));
    let o = exhaustive_per_user(&ch, &PowerAllocation::for_channel(&ch), 0, 0.1, -80.0);
    let floor = units::dbm_to_mw(-80.0);
    for k in 0..24 {
        assert!(units::db_distance(o.powers[k], wf[k], floor) <= 0.1 + 1e-9, "tone {k}: {} vs {}", o.powers[k], wf[k]);
    }
    assert!(o.total_power <= ch.budget(0));
}

#[test]
fn finer_grid_never_worse_with_slack_budget() {
    for seed in 0..5 {
        let mut p = SynthesisParams::new(4, 8, seed);
        p.budget_dbm = 30.0;
        let ch = generate_synthetic(&p).unwrap();
        let s = PowerAllocation::at_mask(&ch);
        for n in 0..4 {
            let coarse = exhaustive_per_user(&ch, &s, n, 0.2, -80.0);
            let fine = exhaustive_per_user(&ch, &s, n, 0.1, -80.0);
            assert_eq!(fine.lambda, 0.0);
            assert!(fine.objective <= coarse.objective);
        }
    }
}

/// With a binding budget the price search leaves at most `λ · (B - P)` on
/// the table relative to the best grid allocation, and the 0.1 dB ladder
/// contains the 0.2 dB one.
#[test]
fn finer_grid_never_worse_beyond_price_gap() {
    for seed in 0..5 {
        let ch = generate_synthetic(&SynthesisParams::new(4, 8, seed)).unwrap();
        let s = PowerAllocation::at_mask(&ch);
        for n in 0..4 {
            let coarse = exhaustive_per_user(&ch, &s, n, 0.2, -80.0);
            let fine = exhaustive_per_user(&ch, &s, n, 0.1, -80.0);
            let gap = fine.lambda * (ch.budget(n) - fine.total_power);
            assert!(fine.objective <= coarse.objective + gap + 1e-12);
        }
    }
}

#[test]
fn oracle_is_deterministic() {
    let ch = generate_synthetic(&SynthesisParams::new(4, 16, 3)).unwrap();
    let s = PowerAllocation::at_mask(&ch);
    let a = exhaustive_per_user(&ch, &s, 1, 0.1, -80.0);
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| exhaustive_per_user(&ch, &s, 1, 0.1, -80.0));
    assert_eq!(a, b);
}

#[test]
fn order_examples() {
    let inst = random_instances(500, 17, 2, 6);
    let iasb1 = ApproximationSpec::new(MethodKind::Iasb(1));
    let same = verify_lemma_order(&iasb1, &iasb1, &inst, CheckGrid::Uniform(256), 1e-9).unwrap();
    assert!(same.pass && same.worst_gap == 0.0);
    let cadsb = ApproximationSpec::new(MethodKind::Cadsb);
    assert!(verify_lemma_order(&iasb1, &cadsb, &inst, CheckGrid::Uniform(256), 1e-9).unwrap().pass);
    let iasb2 = ApproximationSpec::new(MethodKind::Iasb(2));
    assert!(verify_lemma_order(&iasb2, &iasb1, &inst, CheckGrid::Uniform(256), 1e-9).unwrap().pass);
    // the reverse order is violated somewhere
    assert!(!verify_lemma_order(&cadsb, &iasb1, &inst, CheckGrid::Uniform(256), 1e-9).unwrap().pass);
}

#[test]
fn escape_instance_local_minima() {
    let ch = presets::escape_instance();
    let r = Restriction::new(&ch, 0, presets::ESCAPE_USER, &[100.0, 100.0, 0.0]);
    let minima = grid_local_minima(|x| r.value(x), &Grid::new(100.0, 0.1, -80.0));
    assert_eq!(minima.len(), 2);
    assert_eq!(minima[0].0, 0.0);
    assert!(minima[1].0 > 0.0 && minima[1].0 < 100.0);
}
