mod output;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spectra_core::driver::convergence::{compare_counts, reference_contexts, CountOptions};
use spectra_core::oracle::{exhaustive_per_user, CheckGrid};
use spectra_core::units::mw_to_dbm;
use spectra_core::verify::{random_instances, verify_conditions, verify_orders, ConditionTolerances};
use spectra_core::{
    allocate_hybrid, generate_synthetic, load_scenario, presets, run, save_scenario, ApproximationSpec, Channel,
    MethodKind, OuterStop, PowerAllocation, RunConfig, SolveMode, SolveReport, SynthesisParams,
};

#[derive(Parser, Debug)]
#[command(name = "spectra", version, about = "Spectrum balancing with iterative per-user approximations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one or more methods and write spectra, rates, trace and report.
    Run(RunArgs),
    /// Count approximations to the per-user grid optimum for several methods.
    Compare(CompareArgs),
    /// Per-user grid search for every user against the others' powers.
    Oracle(OracleArgs),
    /// Write a scenario file.
    Generate(GenerateArgs),
    /// Check the approximation conditions and tightness orderings.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Synthetic channel `N,K` or `N,K,SEED`.
    #[arg(long, value_name = "N,K[,SEED]")]
    synth: Option<String>,
    /// `escape` or `paper-defaults:N,K[,SEED]`.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args, Debug)]
struct Common {
    #[command(flatten)]
    source: Source,
    /// Seed used when the synthetic spec leaves it out.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Closed,
    Fixedpoint,
}

impl Mode {
    fn solve(self) -> SolveMode {
        match self {
            Mode::Closed => SolveMode::ClosedForm,
            Mode::Fixedpoint => SolveMode::FixedPoint,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Mode::Closed => "closed",
            Mode::Fixedpoint => "fixedpoint",
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated method names. Several methods write one subdirectory each.
    #[arg(long, default_value = "iasb1")]
    method: String,
    /// Per-user/per-tone assignment rule, e.g. `user2:iasb3,rest:iasb1`.
    #[arg(long)]
    alloc: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Closed)]
    mode: Mode,
    /// Sweep cap; without --tol the run does exactly this many sweeps.
    #[arg(long)]
    outer: Option<usize>,
    /// Stop when the objective changes by less than this, relative.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "scale,cadsb,iasb1,iasb5,iasb10")]
    method: String,
    /// Method whose run supplies the starting states.
    #[arg(long, default_value = "iasb1")]
    reference: String,
    /// Synthetic scenarios in the batch, seeds counting up from the given one.
    #[arg(long, default_value_t = 1)]
    batch: u64,
    /// `closed` skips the fixed-point counts.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Reference sweeps that provide starting states.
    #[arg(long)]
    outer: Option<usize>,
    /// Agreement with the oracle, dB.
    #[arg(long)]
    tol: Option<f64>,
    /// Oracle grid step, dB.
    #[arg(long)]
    grid_dbm: Option<f64>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Run this method first and search against its final powers; otherwise
    /// every other user is silent.
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    grid_dbm: f64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Random single-tone instances per check.
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Uniform check points over [0, mask].
    #[arg(long, default_value_t = 256)]
    points: usize,
    /// Check on a dBm grid with this step instead of uniform points.
    #[arg(long)]
    grid_dbm: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Negative control: shift every slope by this fraction of its scale.
    #[arg(long, default_value_t = 0.0, hide = true)]
    corrupt_d: f64,
}

fn parse_dims(text: &str, default_seed: u64) -> Result<(usize, usize, u64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    ensure!(parts.len() == 2 || parts.len() == 3, "expected N,K or N,K,SEED, got `{text}`");
    let n = parts[0].parse().with_context(|| format!("bad user count `{}`", parts[0]))?;
    let k = parts[1].parse().with_context(|| format!("bad tone count `{}`", parts[1]))?;
    let seed = match parts.get(2) {
        Some(s) => s.parse().with_context(|| format!("bad seed `{s}`"))?,
        None => default_seed,
    };
    Ok((n, k, seed))
}

fn load_channels(common: &Common, batch: u64) -> Result<Vec<Channel>> {
    let src = &common.source;
    if let Some(path) = &src.scenario {
        ensure!(batch == 1, "--batch needs a synthetic source");
        return Ok(vec![load_scenario(path)?]);
    }
    if let Some(spec) = &src.synth {
        let (n, k, seed) = parse_dims(spec, common.seed)?;
        return (seed..seed + batch)
            .map(|s| Ok(generate_synthetic(&SynthesisParams::new(n, k, s))?))
            .collect();
    }
    let preset = src.preset.as_deref().unwrap_or_default();
    if preset == "escape" {
        ensure!(batch == 1, "the escape preset is a single scenario");
        return Ok(vec![presets::escape_instance()]);
    }
    if let Some(dims) = preset.strip_prefix("paper-defaults") {
        let (n, k, seed) = parse_dims(dims.trim_start_matches(':'), common.seed)?;
        return (seed..seed + batch)
            .map(|s| Ok(presets::paper_defaults(n, k, s)?))
            .collect();
    }
    bail!("unknown preset `{preset}` (expected `escape` or `paper-defaults:N,K[,SEED]`)")
}

fn methods(list: &str) -> Result<Vec<MethodKind>> {
    list.split(',')
        .filter(|m| !m.trim().is_empty())
        .map(|m| m.parse::<MethodKind>().with_context(|| format!("bad method `{m}`")))
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

#[derive(Serialize)]
struct RunRecord<'a> {
    method: String,
    mode: &'static str,
    alloc: Option<&'a str>,
    report: &'a SolveReport,
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let ch = load_channels(&args.common, 1)?.remove(0);
    let kinds = methods(&args.method)?;
    ensure!(!kinds.is_empty(), "no method given");
    ensure!(args.alloc.is_none() || kinds.len() == 1, "--alloc takes a single base --method");
    let outer = match (args.tol, args.outer) {
        (Some(tol), max) => Some(OuterStop::ObjectiveChange { tol, max_sweeps: max.unwrap_or(50) }),
        (None, Some(sweeps)) => Some(OuterStop::Sweeps(sweeps)),
        (None, None) => None,
    };
    for kind in &kinds {
        let spec = ApproximationSpec::new(*kind);
        let mut cfg = match &args.alloc {
            Some(rule) => RunConfig::new(allocate_hybrid(rule, ch.num_users(), ch.num_tones(), spec)?),
            None => RunConfig::uniform(&ch, spec),
        };
        cfg = cfg.with_mode(args.mode.solve());
        if let Some(o) = outer {
            cfg = cfg.with_outer(o);
        }
        let report = run(&ch, &cfg)?;
        let dir = if kinds.len() == 1 {
            args.common.out.clone()
        } else {
            args.common.out.join(kind.to_string())
        };
        create_dir(&dir)?;
        output::write_spectra(&dir, &ch, &report.allocation)?;
        output::write_rates(&dir, &ch, &report.rates)?;
        output::write_trace(&dir, &report.trace)?;
        let record = RunRecord {
            method: kind.to_string(),
            mode: args.mode.label(),
            alloc: args.alloc.as_deref(),
            report: &report,
        };
        output::write_json(&dir, "report.json", &record)?;
        println!(
            "{kind}: objective {:.6}, weighted rate {:.6e} bit/s, {} sweeps{}",
            report.objective,
            report.weighted_rate,
            report.sweeps,
            if report.converged { "" } else { " (not converged)" }
        );
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let channels = load_channels(&args.common, args.batch)?;
    let kinds = methods(&args.method)?;
    ensure!(!kinds.is_empty(), "no method given");
    let reference: MethodKind = args.reference.parse()?;
    let defaults = CountOptions::default();
    let opts = CountOptions {
        sweeps: args.outer.unwrap_or(defaults.sweeps),
        grid_step_db: args.grid_dbm.unwrap_or(defaults.grid_step_db),
        tol_db: args.tol.unwrap_or(defaults.tol_db),
        ..defaults
    };
    let with_fp = args.mode != Some(Mode::Closed);

    let mut approx: Vec<Vec<usize>> = vec![Vec::new(); kinds.len()];
    let mut fp: Vec<Vec<usize>> = vec![Vec::new(); kinds.len()];
    let mut total = 0;
    for ch in &channels {
        let closed: Vec<RunConfig> = kinds
            .iter()
            .map(|&k| RunConfig::uniform(ch, ApproximationSpec::new(k)))
            .collect();
        let fixed: Vec<RunConfig> = closed.iter().cloned().map(|c| c.with_mode(SolveMode::FixedPoint)).collect();
        let contexts = reference_contexts(ch, &RunConfig::uniform(ch, ApproximationSpec::new(reference)), opts.sweeps)?;
        let counts = compare_counts(ch, &closed, with_fp.then_some(&fixed[..]), &contexts, &opts)?;
        total += counts.total_pairs;
        for i in 0..kinds.len() {
            approx[i].extend(&counts.approximations[i]);
            fp[i].extend(&counts.fp_updates[i]);
        }
    }

    let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len() as f64;
    let mut cdf_rows = Vec::new();
    let mut summary = Vec::new();
    for (i, kind) in kinds.iter().enumerate() {
        for (c, frac) in output::empirical_cdf(&approx[i]) {
            cdf_rows.push(vec![kind.to_string(), "closed".into(), c.to_string(), frac.to_string()]);
        }
        if with_fp {
            for (c, frac) in output::empirical_cdf(&fp[i]) {
                cdf_rows.push(vec![kind.to_string(), "fixedpoint".into(), c.to_string(), frac.to_string()]);
            }
        }
        let fp_mean = if with_fp { mean(&fp[i]).to_string() } else { String::new() };
        summary.push(vec![
            kind.to_string(),
            mean(&approx[i]).to_string(),
            fp_mean,
            approx[i].len().to_string(),
            total.to_string(),
        ]);
        println!("{kind}: {:.3} approximations{}", mean(&approx[i]), if with_fp {
            format!(", {:.3} fixed-point updates", mean(&fp[i]))
        } else {
            String::new()
        });
    }
    let out = &args.common.out;
    create_dir(out)?;
    output::write_csv(out, "counts_cdf.csv", &["method", "mode", "count", "cdf"], &cdf_rows)?;
    output::write_csv(
        out,
        "summary.csv",
        &["method", "mean_approximations", "mean_fixed_point_updates", "pairs_kept", "pairs_total"],
        &summary,
    )?;
    Ok(())
}

#[derive(Serialize)]
struct OracleUser {
    user: usize,
    lambda: f64,
    total_power: f64,
    objective: f64,
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let ch = load_channels(&args.common, 1)?.remove(0);
    let others = match &args.method {
        Some(m) => run(&ch, &RunConfig::uniform(&ch, ApproximationSpec::new(m.parse()?)))?.allocation,
        None => PowerAllocation::for_channel(&ch),
    };
    let mut best = PowerAllocation::for_channel(&ch);
    let mut users = Vec::new();
    for n in 0..ch.num_users() {
        let o = exhaustive_per_user(&ch, &others, n, args.grid_dbm, -80.0);
        for (k, &p) in o.powers.iter().enumerate() {
            best.set(k, n, p);
        }
        println!("user {}: objective {:.6}, {:.3} dBm total", n + 1, o.objective, mw_to_dbm(o.total_power));
        users.push(OracleUser {
            user: n + 1,
            lambda: o.lambda,
            total_power: o.total_power,
            objective: o.objective,
        });
    }
    let out = &args.common.out;
    create_dir(out)?;
    output::write_spectra(out, &ch, &best)?;
    output::write_json(out, "oracle.json", &users)?;
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let ch = load_channels(&args.common, 1)?.remove(0);
    create_dir(&args.common.out)?;
    let path = args.common.out.join("scenario.json");
    save_scenario(&ch, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    ensure!(args.count > 0, "--count must be positive");
    let grid = match args.grid_dbm {
        Some(step) => CheckGrid::Db(step),
        None => CheckGrid::Uniform(args.points.max(2)),
    };
    let instances = random_instances(args.count, args.seed, 2, 6);
    let tol = ConditionTolerances::default();
    let mut rows = Vec::new();
    let mut failures = 0;
    for kind in MethodKind::NAMED {
        let s = verify_conditions(&ApproximationSpec::new(kind), &instances, grid, &tol, args.corrupt_d)?;
        let worst = s.violations.iter().max_by(|a, b| a.error.total_cmp(&b.error));
        rows.push(vec![
            "conditions".into(),
            kind.to_string(),
            s.pass().to_string(),
            s.violations.len().to_string(),
            worst.map_or(String::new(), |v| v.condition.label().to_string()),
            worst.map_or(String::new(), |v| v.error.to_string()),
            worst.map_or(String::new(), |v| v.seed.to_string()),
            worst.map_or(String::new(), |v| v.x.to_string()),
        ]);
        for v in s.violations.iter().take(5) {
            eprintln!("{kind}: {} violated by {:.3e} at x = {} (seed {})", v.condition.label(), v.error, v.x, v.seed);
        }
        failures += usize::from(!s.pass());
    }
    for r in verify_orders(&instances, grid, 1e-9)? {
        let c = &r.check;
        rows.push(vec![
            "order".into(),
            format!("{}<={}", r.tighter, r.looser),
            c.pass.to_string(),
            usize::from(!c.pass).to_string(),
            "order".into(),
            (-c.worst_gap).to_string(),
            c.worst_seed.to_string(),
            c.worst_x.to_string(),
        ]);
        if !c.pass {
            eprintln!(
                "{} <= {} fails by {:.3e} at x = {} (seed {})",
                r.tighter, r.looser, -c.worst_gap, c.worst_x, c.worst_seed
            );
            failures += 1;
        }
    }
    create_dir(&args.out)?;
    output::write_csv(
        &args.out,
        "verify.csv",
        &["check", "subject", "pass", "violations", "worst_kind", "worst_error", "seed", "x"],
        &rows,
    )?;
    ensure!(failures == 0, "{failures} checks failed, see verify.csv");
    println!("all {} checks passed on {} instances", rows.len(), args.count);
    Ok(())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SPECTRA_THREADS") {
        let n: usize = v.parse().with_context(|| format!("SPECTRA_THREADS must be a positive integer, got `{v}`"))?;
        ensure!(n > 0, "SPECTRA_THREADS must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    init_threads()?;
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Verify(a) => cmd_verify(a),
    }
}
