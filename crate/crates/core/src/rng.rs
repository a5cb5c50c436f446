//! Reproducible random streams.
//!
//! Every stochastic routine takes a caller-supplied generator. Replicated
//! experiments derive replica `r`'s generator from the base seed as a ChaCha8
//! key (`seed_from_u64(seed)`) with stream id `r`, so replicas are independent,
//! counter-based, and identical regardless of how they are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn replica_rng(seed: u64, replica: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}
