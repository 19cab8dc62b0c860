//! Seed management.
//!
//! A run has four independent randomness sources: the N scenario draws, the
//! re-drawn (N+1)-th scenarios, the function realizations, and the
//! measurement noise. Each consumes its own ChaCha stream derived from one
//! master seed, so experiments can vary one source while freezing the rest.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Master seed for one run, fanned out into four named sub-streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SeedBundle {
    pub master: u64,
}

impl SeedBundle {
    pub fn new(master: u64) -> Self {
        SeedBundle { master }
    }

    /// Seed for repetition `rep` of an experiment keyed by `master`.
    pub fn derive(master: u64, rep: u64) -> Self {
        SeedBundle {
            master: splitmix64(master ^ splitmix64(rep)),
        }
    }

    /// Stream for the N i.i.d. scenario draws.
    pub fn scenario_rng(&self) -> ChaCha12Rng {
        self.stream(0)
    }

    /// Stream for the re-drawn (N+1)-th scenarios.
    pub fn redraw_rng(&self) -> ChaCha12Rng {
        self.stream(1)
    }

    /// Stream for sampling function realizations over the grid.
    pub fn realization_rng(&self) -> ChaCha12Rng {
        self.stream(2)
    }

    /// Stream for measurement noise in blackbox queries.
    pub fn noise_rng(&self) -> ChaCha12Rng {
        self.stream(3)
    }

    fn stream(&self, id: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master);
        rng.set_stream(id);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
