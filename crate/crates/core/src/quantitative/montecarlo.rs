use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Flavor, StateSpace};
use crate::scalar::Probability;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    /// 95% normal-approximation half-width, `1.96 * sqrt(p(1-p)/n)`.
    pub half_width: f64,
    pub samples: u64,
    pub hits: u64,
}

impl MonteCarloEstimate {
    /// Standard error of the estimate.
    pub fn sigma(&self) -> f64 {
        self.half_width / 1.96
    }
}

/// Trajectories per independently seeded stream.
const CHUNK: u64 = 4096;

/// Estimates `P[true U≤k H]` by simulating `samples` trajectories of the
/// DTMC. Chunk `c` of trajectories uses stream `c` of a ChaCha8 generator
/// seeded with `seed`, so the result depends only on the arguments.
pub fn monte_carlo_hazard<P: Probability>(
    space: &StateSpace<P>,
    k: u64,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    space.expect_flavor(Flavor::Dtmc)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let hazard = space.hazard();
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            (0..n).filter(|_| trajectory_hits(space, hazard, k, &mut rng)).count() as u64
        })
        .sum();
    let n = samples as f64;
    let p = hits as f64 / n;
    Ok(MonteCarloEstimate {
        estimate: p,
        half_width: 1.96 * (p * (1.0 - p) / n).sqrt(),
        samples,
        hits,
    })
}

fn trajectory_hits<P: Probability>(space: &StateSpace<P>, hazard: &[bool], k: u64, rng: &mut ChaCha8Rng) -> bool {
    let mut s = space.initial();
    if hazard[s] {
        return true;
    }
    for _ in 0..k {
        let edges = space.edges(s);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut next = edges[edges.len() - 1].target;
        for e in edges {
            acc += e.probability.as_f64();
            if u < acc {
                next = e.target;
                break;
            }
        }
        s = next as usize;
        if hazard[s] {
            return true;
        }
    }
    false
}
