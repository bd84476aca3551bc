use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use spectra_core::driver::TraceEntry;
use spectra_core::units::mw_to_dbm;
use spectra_core::{Channel, PowerAllocation};

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    let path = dir.join(name);
    csv::Writer::from_path(&path).with_context(|| format!("cannot create {}", path.display()))
}

/// One row per tone, one dBm column per user. Zero power is written as `-inf`.
pub fn write_spectra(dir: &Path, ch: &Channel, s: &PowerAllocation) -> Result<()> {
    let mut w = writer(dir, "spectra.csv")?;
    let mut header = vec!["tone".to_string()];
    header.extend((1..=ch.num_users()).map(|n| format!("user{n}_dbm")));
    w.write_record(&header)?;
    for k in 0..ch.num_tones() {
        let mut row = vec![k.to_string()];
        row.extend((0..ch.num_users()).map(|n| mw_to_dbm(s.get(k, n)).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rates(dir: &Path, ch: &Channel, per_user: &[f64]) -> Result<()> {
    let mut w = writer(dir, "rates.csv")?;
    w.write_record(["user", "weight", "rate_bps", "weighted_rate_bps"])?;
    let mut total = 0.0;
    for (n, r) in per_user.iter().enumerate() {
        let weighted = ch.weight(n) * r;
        total += weighted;
        w.write_record([(n + 1).to_string(), ch.weight(n).to_string(), r.to_string(), weighted.to_string()])?;
    }
    w.write_record(["all".to_string(), String::new(), String::new(), total.to_string()])?;
    w.flush()?;
    Ok(())
}

pub fn write_trace(dir: &Path, trace: &[TraceEntry]) -> Result<()> {
    let mut w = writer(dir, "trace.csv")?;
    w.write_record(["sweep", "user", "inner", "objective"])?;
    for t in trace {
        w.write_record([
            (t.sweep + 1).to_string(),
            (t.user + 1).to_string(),
            t.inner.to_string(),
            t.objective.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

/// Empirical CDF rows `(count, fraction of samples ≤ count)` at each distinct count.
pub fn empirical_cdf(samples: &[usize]) -> Vec<(usize, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (i, &c) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 = frac,
            _ => out.push((c, frac)),
        }
    }
    out
}

pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(dir, name)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
