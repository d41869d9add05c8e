use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for realization `index` under `seed`.
///
/// Every (seed, index) pair maps to its own ChaCha stream, so ensembles give
/// the same numbers regardless of how the work is scheduled.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed for realization `index` of an ensemble rooted at `seed`.
pub fn derive(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, index).next_u64()
}
