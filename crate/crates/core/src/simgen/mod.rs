//! Reproducible simulation of benchmark designs: noise families, mixture
//! signal features, copula-correlated blocks, and whole experiment matrices.
//!
//! All randomness flows through counter-based seeded substreams: the stream
//! id is the (first) column index of whatever is being generated, so columns
//! can be produced in parallel, in any order, with bit-identical output.

pub mod copula;
pub mod dist;
pub mod experiments;

pub use copula::{sample_copula, CopulaKind, CopulaSpec};
pub use dist::{sample_distribution, sample_distribution_labeled, DistributionSpec};
pub use experiments::{sample_experiment, ExperimentDesign};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded RNG on an independent substream.
pub fn substream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
