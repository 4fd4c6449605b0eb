use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for `stream` under a master `seed`.
///
/// Every trial of a Monte-Carlo run draws from its own stream, so results do
/// not depend on how trials are split across workers.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
