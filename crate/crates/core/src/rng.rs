//! Seeded random streams and deterministic parallel sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples are drawn in fixed blocks, one ChaCha stream per block, so results
/// do not depend on the thread count.
pub const BLOCK_SIZE: usize = 4096;

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` independent draws of `f`, in parallel, reproducible from `seed`.
pub fn par_samples<T, F>(seed: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let blocks = n.div_ceil(BLOCK_SIZE);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = seeded(seed, b as u64 + 1);
            let len = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
            (0..len).map(|_| f(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Fallible variant of [`par_samples`]; the first error wins.
pub fn try_par_samples<T, E, F>(seed: u64, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T, E> + Sync,
{
    par_samples(seed, n, f).into_iter().collect()
}
