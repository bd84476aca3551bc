//! Static problem data: normalized cross gains, noise, spectral masks,
//! power budgets and rate weights.
//!
//! All powers are stored in linear mW. Gains are dimensionless and already
//! normalized by the direct channel (and SNR gap), so the direct gain never
//! appears explicitly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reporting metadata. None of these values enter the optimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeta {
    /// DMT symbol rate used to turn bit loadings into bit/s.
    pub symbol_rate_hz: f64,
    pub tone_spacing_hz: f64,
    /// SNR gap already folded into the normalized gains and noise.
    pub snr_gap_db: f64,
}

impl Default for ChannelMeta {
    fn default() -> Self {
        ChannelMeta {
            symbol_rate_hz: 4000.0,
            tone_spacing_hz: 4312.5,
            snr_gap_db: 12.9,
        }
    }
}

/// Immutable problem instance with `N` users and `K` tones.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    num_users: usize,
    num_tones: usize,
    // [k][n][m]: gain from transmitter m into receiver n, zero diagonal
    gains: Vec<f64>,
    // [k][n]
    noise: Vec<f64>,
    masks: Vec<f64>,
    budgets: Vec<f64>,
    weights: Vec<f64>,
    meta: ChannelMeta,
}

impl Channel {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_tones(&self) -> usize {
        self.num_tones
    }

    /// `a_k^{n,m}`: normalized gain from transmitter `m` into receiver `n`.
    #[inline]
    pub fn gain(&self, k: usize, n: usize, m: usize) -> f64 {
        self.gains[(k * self.num_users + n) * self.num_users + m]
    }

    #[inline]
    pub fn noise(&self, k: usize, n: usize) -> f64 {
        self.noise[k * self.num_users + n]
    }

    #[inline]
    pub fn mask(&self, k: usize, n: usize) -> f64 {
        self.masks[k * self.num_users + n]
    }

    #[inline]
    pub fn budget(&self, n: usize) -> f64 {
        self.budgets[n]
    }

    #[inline]
    pub fn weight(&self, n: usize) -> f64 {
        self.weights[n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn meta(&self) -> &ChannelMeta {
        &self.meta
    }

    /// True when no user couples into any other user on any tone.
    pub fn is_decoupled(&self) -> bool {
        self.gains.iter().all(|&g| g == 0.0)
    }

    /// Maximum gain `a_k^{m,n}` that user `n` causes at any other receiver, averaged over tones.
    pub fn mean_caused_crosstalk(&self, n: usize) -> f64 {
        let mut total = 0.0;
        for k in 0..self.num_tones {
            for m in 0..self.num_users {
                if m != n {
                    total += self.gain(k, m, n);
                }
            }
        }
        total / self.num_tones as f64
    }

    fn validate(&self) -> Result<()> {
        let (nu, nk) = (self.num_users, self.num_tones);
        if nu == 0 {
            return Err(Error::channel("num_users", "must be at least 1"));
        }
        if nk == 0 {
            return Err(Error::channel("num_tones", "must be at least 1"));
        }
        for n in 0..nu {
            let w = self.weights[n];
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::channel(
                    format!("weights[{n}]"),
                    "weight must be finite and strictly positive",
                ));
            }
            let p = self.budgets[n];
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::channel(
                    format!("budgets[{n}]"),
                    "budget must be finite and strictly positive",
                ));
            }
        }
        for k in 0..nk {
            for n in 0..nu {
                let z = self.noise(k, n);
                if !(z.is_finite() && z > 0.0) {
                    return Err(Error::channel(
                        format!("noise[k={k}][n={n}]"),
                        "noise must be strictly positive",
                    ));
                }
                let s = self.mask(k, n);
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::channel(
                        format!("masks[k={k}][n={n}]"),
                        "mask must be strictly positive",
                    ));
                }
                for m in 0..nu {
                    let a = self.gain(k, n, m);
                    if m == n {
                        if a != 0.0 {
                            return Err(Error::channel(
                                format!("gains[k={k}][n={n}][m={m}]"),
                                "direct gain is normalized out and must be zero",
                            ));
                        }
                    } else if !(a.is_finite() && a >= 0.0) {
                        return Err(Error::channel(
                            format!("gains[k={k}][n={n}][m={m}]"),
                            "gain must be finite and nonnegative",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Incremental constructor for [`Channel`]. Every field starts at a
/// placeholder and `build` validates the result.
#[derive(Clone, Debug)]
pub struct ChannelBuilder {
    inner: Channel,
}

impl ChannelBuilder {
    /// Starts with zero gains, unit weights, 1 mW masks and budgets, and 1e-6 mW noise.
    pub fn new(num_users: usize, num_tones: usize) -> Self {
        ChannelBuilder {
            inner: Channel {
                num_users,
                num_tones,
                gains: vec![0.0; num_tones * num_users * num_users],
                noise: vec![1e-6; num_tones * num_users],
                masks: vec![1.0; num_tones * num_users],
                budgets: vec![1.0; num_users],
                weights: vec![1.0; num_users],
                meta: ChannelMeta::default(),
            },
        }
    }

    pub fn gain(mut self, k: usize, n: usize, m: usize, value: f64) -> Self {
        let nu = self.inner.num_users;
        self.inner.gains[(k * nu + n) * nu + m] = value;
        self
    }

    /// Sets `a^{n,m}` on every tone.
    pub fn gain_all_tones(mut self, n: usize, m: usize, value: f64) -> Self {
        for k in 0..self.inner.num_tones {
            self = self.gain(k, n, m, value);
        }
        self
    }

    pub fn noise(mut self, k: usize, n: usize, value: f64) -> Self {
        let nu = self.inner.num_users;
        self.inner.noise[k * nu + n] = value;
        self
    }

    pub fn noise_all(mut self, value: f64) -> Self {
        self.inner.noise.iter_mut().for_each(|z| *z = value);
        self
    }

    pub fn mask(mut self, k: usize, n: usize, value: f64) -> Self {
        let nu = self.inner.num_users;
        self.inner.masks[k * nu + n] = value;
        self
    }

    pub fn mask_all(mut self, value: f64) -> Self {
        self.inner.masks.iter_mut().for_each(|s| *s = value);
        self
    }

    pub fn budget(mut self, n: usize, value: f64) -> Self {
        self.inner.budgets[n] = value;
        self
    }

    pub fn budget_all(mut self, value: f64) -> Self {
        self.inner.budgets.iter_mut().for_each(|p| *p = value);
        self
    }

    pub fn weight(mut self, n: usize, value: f64) -> Self {
        self.inner.weights[n] = value;
        self
    }

    pub fn weight_all(mut self, value: f64) -> Self {
        self.inner.weights.iter_mut().for_each(|w| *w = value);
        self
    }

    pub fn meta(mut self, meta: ChannelMeta) -> Self {
        self.inner.meta = meta;
        self
    }

    pub fn build(self) -> Result<Channel> {
        let nu = self.inner.num_users;
        let nk = self.inner.num_tones;
        if nu == 0 || nk == 0 {
            return Err(Error::channel(
                if nu == 0 { "num_users" } else { "num_tones" },
                "must be at least 1",
            ));
        }
        self.inner.validate()?;
        Ok(self.inner)
    }
}

/// Transmit powers `s_k^n` in mW, stored tone-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    num_users: usize,
    num_tones: usize,
    powers: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(num_users: usize, num_tones: usize) -> Self {
        PowerAllocation {
            num_users,
            num_tones,
            powers: vec![0.0; num_users * num_tones],
        }
    }

    /// Every user at its spectral mask.
    pub fn at_mask(ch: &Channel) -> Self {
        let mut s = Self::zeros(ch.num_users(), ch.num_tones());
        for k in 0..ch.num_tones() {
            for n in 0..ch.num_users() {
                s.set(k, n, ch.mask(k, n));
            }
        }
        s
    }

    pub fn for_channel(ch: &Channel) -> Self {
        Self::zeros(ch.num_users(), ch.num_tones())
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_tones(&self) -> usize {
        self.num_tones
    }

    #[inline]
    pub fn get(&self, k: usize, n: usize) -> f64 {
        self.powers[k * self.num_users + n]
    }

    #[inline]
    pub fn set(&mut self, k: usize, n: usize, value: f64) {
        self.powers[k * self.num_users + n] = value;
    }

    /// The power vector `s_k` of all users on tone `k`.
    pub fn tone(&self, k: usize) -> &[f64] {
        &self.powers[k * self.num_users..(k + 1) * self.num_users]
    }

    pub fn user_total(&self, n: usize) -> f64 {
        (0..self.num_tones).map(|k| self.get(k, n)).sum()
    }

    pub fn user_spectrum(&self, n: usize) -> Vec<f64> {
        (0..self.num_tones).map(|k| self.get(k, n)).collect()
    }

    /// Checks masks, nonnegativity and (with relative slack) budgets.
    pub fn is_feasible(&self, ch: &Channel, budget_slack: f64) -> bool {
        for k in 0..self.num_tones {
            for n in 0..self.num_users {
                let s = self.get(k, n);
                if !(s >= 0.0 && s <= ch.mask(k, n)) {
                    return false;
                }
            }
        }
        (0..self.num_users).all(|n| self.user_total(n) <= ch.budget(n) * (1.0 + budget_slack))
    }
}
