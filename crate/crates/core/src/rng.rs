//! Named, counter-keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! user seed, a domain label and a stream index (usually the trial number).
//! Parallel trials therefore see the same numbers whatever the schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Derive a child seed from a parent seed and a label.
pub fn derive(seed: u64, label: &str) -> u64 {
    splitmix(seed ^ splitmix(fnv1a(label)))
}

/// Stream `index` of the domain `label` under `seed`.
pub fn stream(seed: u64, label: &str, index: u64) -> Rng {
    let base = derive(seed, label);
    let mut key = [0u8; 32];
    let mut s = base;
    for chunk in key.chunks_mut(8) {
        s = splitmix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
