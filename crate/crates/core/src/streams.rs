//! Deterministic random streams.
//!
//! Every random number in a run comes from one 64-bit master seed. A stream
//! is identified by `(seed, purpose, epoch, index)`; the ChaCha key is derived
//! from the seed and the 64-bit stream id from a mix of the other three, so a
//! particle's stream does not depend on which worker propagates it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for; part of the stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Path = 1,
    Propagate = 2,
    Resample = 3,
    Initialize = 4,
    SamplerTest = 5,
    Check = 6,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for a `(purpose, epoch, index)` triple.
pub fn stream_id(purpose: Purpose, epoch: u64, index: u64) -> u64 {
    let a = splitmix64(purpose as u64);
    let b = splitmix64(a ^ epoch);
    splitmix64(b ^ index.rotate_left(32))
}

/// The stream `(seed, purpose, epoch, index)`.
pub fn stream(seed: u64, purpose: Purpose, epoch: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(purpose, epoch, index));
    rng
}
