//! Reproducible per-path random streams.
//!
//! Every simulated path owns a ChaCha8 generator keyed by the run seed
//! (via `SeedableRng::seed_from_u64`, which expands the `u64` with PCG32)
//! and positioned on ChaCha stream number `path_id`. ChaCha is counter
//! based, so path `i` draws the same numbers no matter how many paths are
//! generated, in which order, or on how many threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

pub fn path_rng(seed: u64, path_id: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    rng
}
