//! Named channels used by experiments and tests.

use crate::channel::{Channel, ChannelBuilder};
use crate::error::Result;
use crate::synth::{generate_synthetic, SynthesisParams};

/// Synthetic channel with the default DSL reporting numbers: 20.4 dBm mask
/// and budget, 4 kHz symbol rate, 12.9 dB SNR gap recorded as metadata.
pub fn paper_defaults(num_users: usize, num_tones: usize, seed: u64) -> Result<Channel> {
    generate_synthetic(&SynthesisParams::paper_defaults(num_users, num_tones, seed))
}

/// User whose per-tone restriction has two local minima on the escape instance.
pub const ESCAPE_USER: usize = 2;

/// Assignment rule for the escape instance: the two victims cause almost no
/// crosstalk and get the cheap linear method.
pub const ESCAPE_HYBRID_RULE: &str = "user1-2:iasb1,user3:iasb3";

/// Three users on one tone, all budgets above the 100 mW masks.
///
/// Users 0 and 1 leak only 1e-9 into everyone else, so both sit at their
/// mask whatever user 2 does. User 2 hurts both: user 0 has a very low noise
/// floor and is damaged by the first milliwatts, user 1 has a high noise
/// floor and is only damaged once user 2 passes a few mW. With users 0 and 1
/// at the mask, user 2's restriction has a local minimum at zero power and a
/// deeper one near 5.1 mW.
pub fn escape_instance() -> Channel {
    let leak = 1e-9;
    ChannelBuilder::new(3, 1)
        .noise(0, 0, 1e-6)
        .noise(0, 1, 1.0)
        .noise(0, 2, 1e-3)
        .gain(0, 0, 2, 1e-2)
        .gain(0, 1, 2, 0.1)
        .gain(0, 0, 1, leak)
        .gain(0, 1, 0, leak)
        .gain(0, 2, 0, leak)
        .gain(0, 2, 1, leak)
        .mask_all(100.0)
        .budget_all(200.0)
        .weight(0, 0.5)
        .weight(1, 1.5)
        .weight(2, 1.0)
        .build()
        .expect("escape instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Restriction;
    use crate::oracle::{grid_local_minima, Grid};

    #[test]
    fn escape_restriction_has_boundary_and_interior_minimum() {
        let ch = escape_instance();
        let r = Restriction::new(&ch, 0, ESCAPE_USER, &[100.0, 100.0, 0.0]);
        let minima = grid_local_minima(|x| r.value(x), &Grid::new(100.0, 0.01, -80.0));
        assert_eq!(minima.len(), 2, "{minima:?}");
        assert_eq!(minima[0].0, 0.0);
        assert!(minima[1].0 > 1.0 && minima[1].0 < 50.0);
        assert!(minima[1].1 < minima[0].1);
    }

    #[test]
    fn paper_defaults_mask() {
        let ch = paper_defaults(2, 4, 1).unwrap();
        assert!((crate::units::mw_to_dbm(ch.mask(0, 0)) - 20.4).abs() < 1e-12);
    }
}
