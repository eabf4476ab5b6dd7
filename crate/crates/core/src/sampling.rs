//! Seed derivation and random test functions.
//!
//! Every sample draws from its own generator keyed by `(seed, index)`, so
//! results never depend on evaluation order or thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fem::FemSpace;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed derived from a base seed and a counter.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Counter-based uniform value in `[-1, 1]` keyed by three words.
pub fn keyed_uniform(seed: u64, a: u64, b: u64) -> f64 {
    let z = mix64(derive_seed(derive_seed(seed, a), b));
    // 53 random mantissa bits in [0, 1)
    let u = (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

/// Random interior-node coefficients for `space`.
///
/// Half of the draws are rough (independent coefficients uniform in
/// `[-amplitude, amplitude]`), the other half smooth (a random combination of
/// the first four Dirichlet sine modes interpolated at the nodes). The smooth
/// half is what makes sup-type ratio estimates approach their true values.
pub fn random_coeffs<R: Rng>(space: &FemSpace, rng: &mut R, amplitude: f64) -> Vec<f64> {
    let dim = space.dim();
    if rng.gen_bool(0.5) {
        (0..dim)
            .map(|_| rng.gen_range(-amplitude..=amplitude))
            .collect()
    } else {
        let weights: Vec<f64> = (1..=4)
            .map(|k| rng.gen_range(-amplitude..=amplitude) / k as f64)
            .collect();
        let grid = space.grid();
        let len = grid.x_hi - grid.x_lo;
        (1..=dim)
            .map(|i| {
                let s = (grid.node(i) - grid.x_lo) / len;
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * ((k + 1) as f64 * std::f64::consts::PI * s).sin())
                    .sum()
            })
            .collect()
    }
}
