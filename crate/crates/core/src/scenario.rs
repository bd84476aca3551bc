//! JSON scenario files.
//!
//! Powers are written in dBm for readability. Because a dBm decimal cannot
//! always reproduce an arbitrary mW value exactly, the writer also stores the
//! linear values under `*_mw` keys; when those are present the reader uses
//! them and only checks that the dBm fields agree.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ChannelBuilder, ChannelMeta};
use crate::error::{Error, Result};
use crate::units::{dbm_to_mw, mw_to_dbm};

pub const SCENARIO_VERSION: u32 = 1;

// Allowed disagreement between a `_dbm` field and its `_mw` twin.
const DBM_CONSISTENCY_DB: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PerUser {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PerToneUser {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GainEntry {
    k: usize,
    n: usize,
    m: usize,
    value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: u32,
    num_users: usize,
    num_tones: usize,
    weights: PerUser,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budgets_dbm: Option<PerUser>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budgets_mw: Option<PerUser>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    masks_dbm: Option<PerToneUser>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    masks_mw: Option<PerToneUser>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_dbm: Option<PerToneUser>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_mw: Option<PerToneUser>,
    #[serde(default)]
    gains: Vec<GainEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<ChannelMeta>,
}

fn expand_users(field: &str, v: &PerUser, n_users: usize) -> Result<Vec<f64>> {
    match v {
        PerUser::Scalar(x) => Ok(vec![*x; n_users]),
        PerUser::List(xs) if xs.len() == n_users => Ok(xs.clone()),
        PerUser::List(xs) => Err(Error::channel(
            field,
            format!("expected {n_users} entries, found {}", xs.len()),
        )),
    }
}

fn expand_tones(field: &str, v: &PerToneUser, n_tones: usize, n_users: usize) -> Result<Vec<f64>> {
    match v {
        PerToneUser::Scalar(x) => Ok(vec![*x; n_tones * n_users]),
        PerToneUser::Matrix(rows) => {
            if rows.len() != n_tones {
                return Err(Error::channel(
                    field,
                    format!("expected {n_tones} tone rows, found {}", rows.len()),
                ));
            }
            let mut out = Vec::with_capacity(n_tones * n_users);
            for (k, row) in rows.iter().enumerate() {
                if row.len() != n_users {
                    return Err(Error::channel(
                        format!("{field}[{k}]"),
                        format!("expected {n_users} entries, found {}", row.len()),
                    ));
                }
                out.extend_from_slice(row);
            }
            Ok(out)
        }
    }
}

/// Picks the exact linear values if present, otherwise converts the dBm
/// values. When both are present they must agree.
fn resolve(
    name: &str,
    dbm: Option<Vec<f64>>,
    mw: Option<Vec<f64>>,
) -> Result<Vec<f64>> {
    match (dbm, mw) {
        (None, None) => Err(Error::channel(
            format!("{name}_dbm"),
            "missing field",
        )),
        (Some(d), None) => Ok(d.into_iter().map(dbm_to_mw).collect()),
        (None, Some(m)) => Ok(m),
        (Some(d), Some(m)) => {
            for (i, (&dv, &mv)) in d.iter().zip(&m).enumerate() {
                let agrees = if mv > 0.0 {
                    (mw_to_dbm(mv) - dv).abs() <= DBM_CONSISTENCY_DB
                } else {
                    dv == f64::NEG_INFINITY
                };
                if !agrees {
                    return Err(Error::channel(
                        format!("{name}_dbm[{i}]"),
                        format!("{dv} dBm disagrees with {name}_mw value {mv}"),
                    ));
                }
            }
            Ok(m)
        }
    }
}

fn from_file(f: ScenarioFile) -> Result<Channel> {
    if f.version != SCENARIO_VERSION {
        return Err(Error::channel(
            "version",
            format!("unsupported version {} (expected {SCENARIO_VERSION})", f.version),
        ));
    }
    let (nu, nk) = (f.num_users, f.num_tones);
    if nu == 0 {
        return Err(Error::channel("num_users", "must be at least 1"));
    }
    if nk == 0 {
        return Err(Error::channel("num_tones", "must be at least 1"));
    }
    let weights = expand_users("weights", &f.weights, nu)?;
    let budgets = resolve(
        "budgets",
        f.budgets_dbm.as_ref().map(|v| expand_users("budgets_dbm", v, nu)).transpose()?,
        f.budgets_mw.as_ref().map(|v| expand_users("budgets_mw", v, nu)).transpose()?,
    )?;
    let masks = resolve(
        "masks",
        f.masks_dbm.as_ref().map(|v| expand_tones("masks_dbm", v, nk, nu)).transpose()?,
        f.masks_mw.as_ref().map(|v| expand_tones("masks_mw", v, nk, nu)).transpose()?,
    )?;
    let noise = resolve(
        "noise",
        f.noise_dbm.as_ref().map(|v| expand_tones("noise_dbm", v, nk, nu)).transpose()?,
        f.noise_mw.as_ref().map(|v| expand_tones("noise_mw", v, nk, nu)).transpose()?,
    )?;

    let mut b = ChannelBuilder::new(nu, nk);
    for n in 0..nu {
        b = b.weight(n, weights[n]).budget(n, budgets[n]);
    }
    for k in 0..nk {
        for n in 0..nu {
            b = b.mask(k, n, masks[k * nu + n]).noise(k, n, noise[k * nu + n]);
        }
    }
    for (i, g) in f.gains.iter().enumerate() {
        if g.k >= nk || g.n >= nu || g.m >= nu {
            return Err(Error::channel(
                format!("gains[{i}]"),
                format!("index (k={}, n={}, m={}) out of range", g.k, g.n, g.m),
            ));
        }
        if g.n == g.m {
            return Err(Error::channel(
                format!("gains[{i}]"),
                "entries must have n != m",
            ));
        }
        b = b.gain(g.k, g.n, g.m, g.value);
    }
    if let Some(meta) = f.meta {
        b = b.meta(meta);
    }
    b.build()
}

fn to_file(ch: &Channel) -> ScenarioFile {
    let (nu, nk) = (ch.num_users(), ch.num_tones());
    let per_tone = |get: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
        (0..nk).map(|k| (0..nu).map(|n| get(k, n)).collect()).collect()
    };
    let masks_mw = per_tone(&|k, n| ch.mask(k, n));
    let noise_mw = per_tone(&|k, n| ch.noise(k, n));
    let to_dbm = |rows: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| mw_to_dbm(v)).collect())
            .collect()
    };
    let mut gains = Vec::with_capacity(nk * nu * nu.saturating_sub(1));
    for k in 0..nk {
        for n in 0..nu {
            for m in 0..nu {
                if m != n {
                    gains.push(GainEntry {
                        k,
                        n,
                        m,
                        value: ch.gain(k, n, m),
                    });
                }
            }
        }
    }
    ScenarioFile {
        version: SCENARIO_VERSION,
        num_users: nu,
        num_tones: nk,
        weights: PerUser::List(ch.weights().to_vec()),
        budgets_dbm: Some(PerUser::List(
            ch.budgets().iter().map(|&p| mw_to_dbm(p)).collect(),
        )),
        budgets_mw: Some(PerUser::List(ch.budgets().to_vec())),
        masks_dbm: Some(PerToneUser::Matrix(to_dbm(&masks_mw))),
        masks_mw: Some(PerToneUser::Matrix(masks_mw)),
        noise_dbm: Some(PerToneUser::Matrix(to_dbm(&noise_mw))),
        noise_mw: Some(PerToneUser::Matrix(noise_mw)),
        gains,
        meta: Some(ch.meta().clone()),
    }
}

/// Parses a scenario from a JSON string. `origin` is only used in error messages.
pub fn parse_scenario(text: &str, origin: &Path) -> Result<Channel> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::ScenarioParse {
        path: origin.to_path_buf(),
        message: format!("line {} column {}: {e}", e.line(), e.column()),
    })?;
    from_file(file)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Channel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, path)
}

pub fn scenario_to_string(ch: &Channel) -> String {
    // f64 values serialize with shortest round-trip formatting
    serde_json::to_string_pretty(&to_file(ch)).expect("scenario serialization cannot fail")
}

pub fn save_scenario(ch: &Channel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, scenario_to_string(ch)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_single_user() {
        let text = r#"{"version":1,"num_users":1,"num_tones":1,"weights":[1.0],
            "budgets_dbm":[20.4],"masks_dbm":20.4,"noise_dbm":-140}"#;
        let ch = parse_scenario(text, Path::new("inline")).unwrap();
        assert_eq!(ch.num_users(), 1);
        assert_eq!(ch.num_tones(), 1);
        assert!((ch.noise(0, 0) - 1e-14).abs() < 1e-26);
        assert!(ch.is_decoupled());
    }

    #[test]
    fn zero_noise_rejected() {
        let text = r#"{"version":1,"num_users":1,"num_tones":1,"weights":[1.0],
            "budgets_dbm":[20.4],"masks_dbm":20.4,"noise_mw":0.0}"#;
        let err = parse_scenario(text, Path::new("inline")).unwrap_err();
        assert!(err.to_string().contains("noise must be strictly positive"), "{err}");
    }

    #[test]
    fn parse_error_has_line() {
        let text = "{\n\"version\": 1,\n\"num_users\": oops}";
        let err = parse_scenario(text, Path::new("bad.json")).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn bad_gain_index() {
        let text = r#"{"version":1,"num_users":2,"num_tones":1,"weights":1.0,
            "budgets_dbm":0,"masks_dbm":0,"noise_dbm":-40,
            "gains":[{"k":0,"n":1,"m":1,"value":0.1}]}"#;
        let err = parse_scenario(text, Path::new("inline")).unwrap_err();
        assert!(err.to_string().contains("gains[0]"), "{err}");
    }
}
