//! Power unit conversions. Solvers work in linear mW; dBm only appears at
//! I/O boundaries.

/// Converts dBm to mW.
#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Converts mW to dBm. Zero maps to `-inf`.
#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Distance between two powers in dB, with both values floored at `floor_mw`
/// so that zero and sub-floor powers compare as equal.
pub fn db_distance(a_mw: f64, b_mw: f64, floor_mw: f64) -> f64 {
    let a = a_mw.max(floor_mw);
    let b = b_mw.max(floor_mw);
    (10.0 * (a / b).log10()).abs()
}

/// Nats to bits.
#[inline]
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}
