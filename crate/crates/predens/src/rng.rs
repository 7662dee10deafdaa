use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for one independent stream of a seeded computation.
pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
