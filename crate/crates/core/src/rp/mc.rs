use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

/// Draws per independent stream. Fixed, so results do not depend on the thread count.
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Binomial standard error `√(p(1−p)/n)`.
    pub std_error: f64,
    pub draws: u64,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors of the estimate.
    /// A zero standard error (no or all rejections) allows a slack of `1/n`.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        let se = self.std_error.max(1.0 / self.draws as f64);
        (self.estimate - value).abs() <= k * se
    }
}

/// Fraction of draws `T ~ N(mu, I)` on which `rule` rejects.
///
/// Draw chunk `c` comes from ChaCha8 seeded with `seed` on stream `c`, so the
/// estimate is a pure function of `(rule, mu, draws, seed)`.
pub fn monte_carlo_rp<R>(rule: R, mu: &[f64], draws: u64, seed: u64) -> McEstimate
where
    R: Fn(&[f64]) -> bool + Sync,
{
    let k = mu.len();
    let chunks = draws.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(draws - c * CHUNK);
            let mut t = vec![0.0; k];
            let mut hits = 0u64;
            for _ in 0..n {
                for (ti, &m) in t.iter_mut().zip(mu) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *ti = m + z;
                }
                if rule(&t) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = hits as f64 / draws as f64;
    McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / draws as f64).sqrt(),
        draws,
    }
}
