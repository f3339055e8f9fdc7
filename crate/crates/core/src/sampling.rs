//! Latin hypercube designs of experiments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::space::DesignSpace;

/// `n` points in `[0, 1]^dim`, one per stratum in every dimension. Each
/// point sits uniformly at random inside its stratum; strata are assigned
/// by an independent shuffle per dimension.
pub fn unit_latin_hypercube<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for d in 0..dim {
        strata.shuffle(rng);
        for (point, &k) in points.iter_mut().zip(&strata) {
            let jitter: f64 = rng.gen();
            // stays strictly below the next stratum edge
            point[d] = ((k as f64 + jitter) / n as f64).min((k as f64 + 1.0) / n as f64 - f64::EPSILON);
        }
    }
    points
}

/// Latin hypercube sample of `space` in model units, deterministic in `seed`.
pub fn latin_hypercube(space: &DesignSpace, n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::invalid(format!("latin hypercube needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = unit_latin_hypercube(n, space.dim(), &mut rng);
    let inputs = unit
        .iter()
        .map(|u| {
            (0..space.dim())
                .map(|i| space.denormalize_component(i, u[i]))
                .collect()
        })
        .collect();
    Dataset::inputs_only(space.names(), inputs)
}
