//! Reproducible random streams and Walker/Vose alias tables.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::kahan_sum;

const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Counter-based pseudo-random stream keyed by `(seed, stream_id)`.
///
/// Backed by ChaCha8, whose output is fixed by its specification, so the
/// same key yields the same sequence on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform in `[0, 1)` with 53 random bits; one draw.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * TWO_POW_MINUS_53
    }

    /// Uniform index in `0..n` by widening multiply; one draw.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.inner.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

/// O(1) sampler for a fixed discrete distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// Two-worklist construction in O(n).
    ///
    /// Zero weights end with `prob = 0` and are never the alias of another
    /// cell, so they are never sampled.
    pub fn new(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidWeights(format!(
                "weight {i} is {w}; weights must be finite and non-negative"
            )));
        }
        let total = kahan_sum(weights.iter().copied());
        if !(total > 0.0) {
            return Err(Error::InvalidWeights(
                "at least one weight must be positive".into(),
            ));
        }

        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut prob = vec![0.0; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let mut small = Vec::with_capacity(n);
        let mut large = Vec::with_capacity(n);
        for (i, s) in scaled.iter().enumerate() {
            if *s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l;
            // remaining mass of l after donating (1 - scaled[s]) to cell s
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }

        // Leftovers are exactly-full cells up to rounding.
        let fallback = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        for i in large.into_iter().chain(small) {
            if weights[i] > 0.0 {
                prob[i] = 1.0;
                alias[i] = i;
            } else {
                prob[i] = 0.0;
                alias[i] = fallback;
            }
        }

        Ok(AliasTable { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn prob(&self) -> &[f64] {
        &self.prob
    }

    pub fn alias(&self) -> &[usize] {
        &self.alias
    }

    /// Draws an index: one uniform for the cell, one for the coin.
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> usize {
        let cell = rng.index(self.prob.len());
        let coin = rng.uniform();
        if coin < self.prob[cell] {
            cell
        } else {
            self.alias[cell]
        }
    }

    /// Probabilities implied by the table:
    /// `q_i = (prob[i] + Σ_{j: alias[j]=i} (1 − prob[j])) / n`.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.prob.len();
        let mut q: Vec<f64> = self.prob.clone();
        for (j, &a) in self.alias.iter().enumerate() {
            if a != j {
                q[a] += 1.0 - self.prob[j];
            }
        }
        q.iter_mut().for_each(|v| *v /= n as f64);
        q
    }
}

/// Upper-tail p-value of Pearson's chi-square statistic for `counts`
/// against `expected_probs`.
pub fn chi_square_p_value(counts: &[u64], expected_probs: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut categories = 0usize;
    for (c, p) in counts.iter().zip(expected_probs) {
        if *p > 0.0 {
            let e = p * total as f64;
            stat += (*c as f64 - e).powi(2) / e;
            categories += 1;
        }
    }
    let dof = categories.saturating_sub(1).max(1) as f64;
    let dist = ChiSquared::new(dof).expect("positive degrees of freedom");
    1.0 - dist.cdf(stat)
}
