//! Seeded Monte Carlo estimators for the per-term entropy constants.
//!
//! Trial `t` draws from ChaCha8 stream `t` of the root seed, and results are
//! folded in trial order, so estimates are bit-identical for a given
//! configuration regardless of how many worker threads run the trials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    decompose_runs, modified_realization, perturbed_realization, sample_realization,
    truncate_runs_counting, BitWord, ChannelParams,
};
use crate::series::{h2, neg_xlog2x};

/// Default cap on `n * trials`.
pub const DEFAULT_BUDGET: u128 = 1 << 30;

/// Input process fed to the channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum InputMode {
    /// i.i.d. Ber(1/2).
    #[default]
    Uniform,
    /// Diagnostic: a single run of zeros.
    AllZeros,
    /// Diagnostic: `0101...`, every run of length one.
    Alternating,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McConfig {
    pub alpha: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub input: InputMode,
}

impl McConfig {
    pub fn new(alpha: f64, n: usize, trials: usize, seed: u64) -> Result<Self> {
        Self::with_budget(alpha, n, trials, seed, DEFAULT_BUDGET)
    }

    pub fn with_budget(
        alpha: f64,
        n: usize,
        trials: usize,
        seed: u64,
        budget: u128,
    ) -> Result<Self> {
        ChannelParams::new(alpha, seed)?;
        if n == 0 || trials == 0 {
            return Err(Error::InvalidParameter(
                "blocklength and trial count must be positive".into(),
            ));
        }
        let requested = n as u128 * trials as u128;
        if requested > budget {
            return Err(Error::BudgetExceeded { requested, budget });
        }
        Ok(Self {
            alpha,
            n,
            trials,
            seed,
            input: InputMode::Uniform,
        })
    }

    pub fn with_input(mut self, input: InputMode) -> Self {
        self.input = input;
        self
    }

    fn params(&self) -> ChannelParams {
        ChannelParams::new(self.alpha, self.seed).expect("validated at construction")
    }

    /// Generator for trial `t`: the root seed's ChaCha stream number `t`.
    pub fn trial_rng(&self, t: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        rng
    }

    fn run_trials<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng) -> T + Sync,
    {
        (0..self.trials)
            .into_par_iter()
            .map(|t| f(&mut self.trial_rng(t)))
            .collect()
    }

    fn sample_input(&self, rng: &mut ChaCha8Rng) -> BitWord {
        let n = self.n;
        let bits = match self.input {
            InputMode::AllZeros => vec![0; n],
            InputMode::Alternating => (0..n).map(|i| (i % 2) as u8).collect(),
            InputMode::Uniform => {
                let mut bits = Vec::with_capacity(n);
                while bits.len() < n {
                    let word: u64 = rng.gen();
                    let take = (n - bits.len()).min(64);
                    bits.extend((0..take).map(|k| ((word >> k) & 1) as u8));
                }
                bits
            }
        };
        BitWord::new(bits).expect("bits are binary")
    }
}

/// Mean over trials with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    /// Sample mean and `sd / sqrt(k)` with the unbiased sample deviation.
    pub fn from_values(values: &[f64]) -> Self {
        let k = values.len();
        if k == 0 {
            return Self {
                mean: 0.0,
                std_error: 0.0,
                samples: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let std_error = if k > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            samples: k,
        }
    }

    /// Sample standard deviation of the per-trial values.
    pub fn std_dev(&self) -> f64 {
        self.std_error * (self.samples as f64).sqrt()
    }

    /// `|mean - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Plug-in per-symbol entropy of the i.i.d. pairs `(A_i, B_i)`.
pub fn estimate_ab_entropy_rate(cfg: &McConfig) -> Result<Estimate> {
    let params = cfg.params();
    let n = cfg.n as f64;
    let values = cfg.run_trials(|rng| {
        let r = sample_realization(cfg.n, &params, rng).expect("n > 0");
        let ones = r.inserted().popcount() as f64;
        let ins = r.insertions() as f64;
        [n - ins, ins - ones, ones]
            .iter()
            .map(|&c| neg_xlog2x(c / n))
            .sum::<f64>()
    });
    Ok(Estimate::from_values(&values))
}

/// Per-position frequencies of the reversed atoms of the modified process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZvStats {
    /// `z = 1, v = 0`
    pub reversed_zero: Estimate,
    /// `z = 1, v = 1`
    pub reversed_one: Estimate,
}

pub fn estimate_zv_stats(cfg: &McConfig) -> Result<ZvStats> {
    let params = cfg.params();
    let n = cfg.n as f64;
    let pairs = cfg.run_trials(|rng| {
        let x = cfg.sample_input(rng);
        let r = sample_realization(cfg.n, &params, rng).expect("n > 0");
        let (_, diff) = modified_realization(&x, &r).expect("lengths agree");
        let z1 = diff.z().popcount();
        let v1 = diff.v().popcount();
        ((z1 - v1) as f64 / n, v1 as f64 / n)
    });
    let (zero, one): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(ZvStats {
        reversed_zero: Estimate::from_values(&zero),
        reversed_one: Estimate::from_values(&one),
    })
}

/// Boundary-ambiguity entropy divided by `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AmbiguityEstimate {
    /// Normalized by the number of interior run pairs examined; estimates `A1`.
    pub per_pair: Estimate,
    /// Normalized by the blocklength.
    pub per_symbol: Estimate,
    /// Indistinguishable configurations found over all trials.
    pub events: u64,
}

/// Counts, under the perturbed process, consecutive interior run pairs whose
/// output shows run `j` unchanged and run `j + 1` one bit longer. In that
/// configuration the extra bit is either appended to run `j` or placed inside
/// run `j + 1` (`r_{j+1} + 1` equally likely slots), contributing
/// `h(1 / (r_{j+1} + 1))` bits of segment-length uncertainty.
///
/// Only pairs with exactly one insertion qualify; the first and last runs of
/// the word never enter a pair.
pub fn estimate_boundary_ambiguity(cfg: &McConfig) -> Result<AmbiguityEstimate> {
    let alpha = cfg.alpha;
    if alpha == 0.0 {
        let empty = Estimate::from_values(&[]);
        return Ok(AmbiguityEstimate {
            per_pair: empty,
            per_symbol: empty,
            events: 0,
        });
    }
    let params = cfg.params();
    let per_trial = cfg.run_trials(|rng| {
        let x = cfg.sample_input(rng);
        let r = sample_realization(cfg.n, &params, rng).expect("n > 0");
        let (p, _) = perturbed_realization(&x, &r).expect("lengths agree");
        let (a, b) = (p.pattern().as_slice(), p.inserted().as_slice());
        let runs = decompose_runs(&x).expect("n > 0");
        let runs = runs.runs();
        let counts: Vec<usize> = runs
            .iter()
            .map(|run| a[run.start..run.end()].iter().filter(|&&v| v == 1).count())
            .collect();

        let mut acc = 0.0;
        let mut pairs = 0usize;
        let mut events = 0u64;
        for j in 1..runs.len().saturating_sub(2) {
            pairs += 1;
            if counts[j] + counts[j + 1] != 1 {
                continue;
            }
            let (cur, next, prev) = (runs[j], runs[j + 1], runs[j - 1]);
            // an insertion after run j - 1 carrying run j's symbol lengthens it
            if a[prev.last()] == 1 && b[prev.last()] == cur.symbol {
                continue;
            }
            let i = (cur.start..next.end())
                .find(|&i| a[i] == 1)
                .expect("one insertion in the pair");
            if b[i] != next.symbol || i < cur.last() {
                continue;
            }
            acc += h2(1.0 / (next.len as f64 + 1.0));
            events += 1;
        }
        (acc, pairs, events)
    });

    let per_pair: Vec<f64> = per_trial
        .iter()
        .map(|&(acc, pairs, _)| {
            if pairs > 0 {
                acc / (pairs as f64 * alpha)
            } else {
                0.0
            }
        })
        .collect();
    let per_symbol: Vec<f64> = per_trial
        .iter()
        .map(|&(acc, _, _)| acc / (cfg.n as f64 * alpha))
        .collect();
    Ok(AmbiguityEstimate {
        per_pair: Estimate::from_values(&per_pair),
        per_symbol: Estimate::from_values(&per_symbol),
        events: per_trial.iter().map(|t| t.2).sum(),
    })
}

/// Mean of `log2` of the length of the run containing each position.
pub fn estimate_length_biased_log_run(cfg: &McConfig) -> Result<Estimate> {
    let values = cfg.run_trials(|rng| {
        let x = cfg.sample_input(rng);
        let runs = decompose_runs(&x).expect("n > 0");
        runs.runs()
            .iter()
            .map(|r| r.len as f64 * (r.len as f64).log2())
            .sum::<f64>()
            / cfg.n as f64
    });
    Ok(Estimate::from_values(&values))
}

/// Relative excess output length `(|y| - n) / n`.
pub fn estimate_output_length(cfg: &McConfig) -> Result<Estimate> {
    let params = cfg.params();
    let values = cfg.run_trials(|rng| {
        let r = sample_realization(cfg.n, &params, rng).expect("n > 0");
        // |y| = n + popcount(a)
        r.insertions() as f64 / cfg.n as f64
    });
    Ok(Estimate::from_values(&values))
}

/// Density of bits flipped when capping input runs at `l_star`.
pub fn estimate_flip_density(cfg: &McConfig, l_star: usize) -> Result<Estimate> {
    if l_star == 0 {
        return Err(Error::InvalidParameter("l_star must be at least 1".into()));
    }
    let values = cfg.run_trials(|rng| {
        let x = cfg.sample_input(rng);
        let (_, flips) = truncate_runs_counting(&x, l_star).expect("l_star > 0");
        flips as f64 / cfg.n as f64
    });
    Ok(Estimate::from_values(&values))
}
