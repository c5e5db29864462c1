//! Counter-based seeding: every replicate gets its own ChaCha8 stream,
//! derived from the master seed and the replicate index alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finaliser applied to `master ⊕ golden·(i+1)`.
///
/// `seed_i = mix(master, i)` is the documented splitting function; distinct
/// indices give statistically unrelated seeds, so replicates can be generated
/// in any order on any number of workers.
pub fn mix(master: u64, i: u64) -> u64 {
    let mut z = master ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for replicate `i` of a run seeded with `master`.
pub fn stream(master: u64, i: u64) -> Rng {
    Rng::seed_from_u64(mix(master, i))
}

/// Independent sub-streams of one replicate (stable path, fBm, ...).
pub fn substream(seed: u64, component: u64) -> Rng {
    Rng::seed_from_u64(mix(mix(seed, component), u64::MAX))
}
