//! Seeded synthetic channels with frequency-correlated crosstalk.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ChannelBuilder, ChannelMeta};
use crate::error::{Error, Result};
use crate::units::dbm_to_mw;

/// Parameters of the synthetic generator.
///
/// Each ordered user pair gets a base direct-to-cross ratio drawn
/// log-uniformly from `coupling_db`, then a smooth cubic profile across the
/// band. Tones are indexed by `t = k / (K - 1)` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub num_users: usize,
    pub num_tones: usize,
    /// Range of the direct-to-cross ratio in dB; both ends must be positive.
    pub coupling_db: (f64, f64),
    /// Peak deviation of the per-pair tone profile, dB.
    pub ripple_db: f64,
    /// Extra crosstalk at the top tone relative to the bottom one, dB.
    pub high_tone_boost_db: f64,
    /// Noise at the bottom tone for the best user, dBm.
    pub noise_dbm: f64,
    /// Noise increase from the bottom to the top tone, dB.
    pub noise_tilt_db: f64,
    /// Per-user noise offsets are drawn uniformly from `[0, noise_spread_db]`.
    pub noise_spread_db: f64,
    pub mask_dbm: f64,
    pub budget_dbm: f64,
    pub seed: u64,
}

impl SynthesisParams {
    /// Desk-scale defaults: budgets bind, crosstalk dominates noise on most
    /// tones and the top tones sit at low SNR.
    pub fn new(num_users: usize, num_tones: usize, seed: u64) -> Self {
        let budget_dbm = 10.0 * ((num_tones as f64) * 0.5).max(1.0).log10();
        SynthesisParams {
            num_users,
            num_tones,
            coupling_db: (6.0, 30.0),
            ripple_db: 3.0,
            high_tone_boost_db: 6.0,
            noise_dbm: -30.0,
            noise_tilt_db: 30.0,
            noise_spread_db: 10.0,
            mask_dbm: 0.0,
            budget_dbm,
            seed,
        }
    }

    /// 20.4 dBm masks and budgets with noise placed so the per-tone SNR range
    /// resembles the desk defaults.
    pub fn paper_defaults(num_users: usize, num_tones: usize, seed: u64) -> Self {
        let mut p = Self::new(num_users, num_tones, seed);
        p.mask_dbm = 20.4;
        p.budget_dbm = 20.4;
        p.noise_dbm = 20.4 - 10.0 * (num_tones as f64).log10() - 30.0;
        p
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.num_users == 0 || self.num_tones == 0 {
            return bad("num_users and num_tones must be at least 1");
        }
        let (lo, hi) = self.coupling_db;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("coupling ratio range must satisfy 0 < lo <= hi");
        }
        if !(self.ripple_db >= 0.0 && self.high_tone_boost_db >= 0.0 && self.noise_spread_db >= 0.0) {
            return bad("ripple, boost and noise spread must be nonnegative");
        }
        let finite = [self.noise_dbm, self.noise_tilt_db, self.mask_dbm, self.budget_dbm];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("noise, mask and budget levels must be finite");
        }
        Ok(())
    }
}

/// Draws a channel from `p`. Identical parameters give identical channels.
pub fn generate_synthetic(p: &SynthesisParams) -> Result<Channel> {
    p.validate()?;
    let (nu, nk) = (p.num_users, p.num_tones);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (lo, hi) = p.coupling_db;
    // keeps every pair strictly below the direct channel after ripple and boost
    let min_ratio_db = 0.5 * lo;

    let tone_pos = |k: usize| if nk > 1 { k as f64 / (nk - 1) as f64 } else { 0.0 };

    let mut b = ChannelBuilder::new(nu, nk)
        .weight_all(1.0 / nu as f64)
        .budget_all(dbm_to_mw(p.budget_dbm))
        .mask_all(dbm_to_mw(p.mask_dbm))
        .meta(ChannelMeta::default());

    for n in 0..nu {
        for m in 0..nu {
            if n == m {
                continue;
            }
            let base = rng.gen_range(lo..=hi);
            let c: [f64; 3] = [
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
            ];
            // centered so the profile averages to roughly zero over the band
            let profile = |t: f64| {
                let u = 2.0 * t - 1.0;
                p.ripple_db * (c[0] * u + c[1] * (u * u - 1.0 / 3.0) + c[2] * (u * u * u - 0.6 * u)) / 2.0
            };
            for k in 0..nk {
                let t = tone_pos(k);
                let ratio = (base - profile(t) - p.high_tone_boost_db * t).max(min_ratio_db);
                b = b.gain(k, n, m, 10f64.powf(-ratio / 10.0));
            }
        }
    }

    for n in 0..nu {
        let offset = rng.gen_range(0.0..=p.noise_spread_db);
        for k in 0..nk {
            let z = p.noise_dbm + offset + p.noise_tilt_db * tone_pos(k);
            b = b.noise(k, n, dbm_to_mw(z));
        }
    }
    b.build()
}
