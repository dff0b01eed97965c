//! Reproducible random streams.
//!
//! Every random number in an experiment is drawn from a ChaCha8 stream keyed
//! by `(master_seed, domain)` and selected by a 64-bit stream index, so
//! trajectory `i` always sees the same numbers no matter which worker runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent purposes that draw from the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Field,
    Trajectories(u8),
    Auxiliary(u64),
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Field => 0x6669_656c_6400_0000,
            Domain::Trajectories(k) => 0x7472_616a_0000_0000 | u64::from(k),
            Domain::Auxiliary(k) => 0x6175_7800_0000_0000 ^ k.rotate_left(17),
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn key(master_seed: u64, domain: Domain) -> [u8; 32] {
    let mut state = master_seed ^ domain.tag().wrapping_mul(0xd6e8_feb8_6659_fd93);
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    out
}

/// Stream `index` of `domain` under `master_seed`.
pub fn stream(master_seed: u64, domain: Domain, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::from_seed(key(master_seed, domain));
    rng.set_stream(index);
    rng
}
