//! Exact channel transition law.
//!
//! `P(y | x)` is computed by a forward recursion over the input bits: input
//! bit `i` either lands alone on `y_j` (weight `1 - alpha`) or lands on `y_{j-1}`
//! followed by one uniformly random inserted bit (weight `alpha / 2`).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{check_alpha, BitWord};
use crate::series::neg_xlog2x;

/// Environment variable overriding the full-alphabet enumeration guard.
pub const GUARD_ENV: &str = "SYNCAP_GUARD_N";

/// Longest input word the packed [`WordKey`] can serve (outputs up to 64 bits).
pub const HARD_LIMIT_N: usize = 32;

/// Blocklength limits for exhaustive enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationGuard {
    /// Limit for enumerating the outputs of a single input word (`3^n` classes).
    pub output_n: usize,
    /// Limit for workflows over every input word (`6^n` joint atoms).
    pub alphabet_n: usize,
}

impl Default for EnumerationGuard {
    fn default() -> Self {
        Self {
            output_n: 16,
            alphabet_n: 8,
        }
    }
}

impl EnumerationGuard {
    /// Defaults, with `SYNCAP_GUARD_N` (if set and parseable) replacing the
    /// full-alphabet limit. Values are clamped to [`HARD_LIMIT_N`].
    pub fn from_env() -> Self {
        let mut g = Self::default();
        if let Some(v) = std::env::var(GUARD_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
        {
            let v = v.min(HARD_LIMIT_N);
            g.alphabet_n = v;
            g.output_n = g.output_n.max(v);
        }
        g
    }

    pub fn check_output(&self, n: usize) -> Result<()> {
        check_guard(n, self.output_n.min(HARD_LIMIT_N))
    }

    pub fn check_alphabet(&self, n: usize) -> Result<()> {
        check_guard(n, self.alphabet_n.min(HARD_LIMIT_N))
    }
}

fn check_guard(n: usize, guard: usize) -> Result<()> {
    if n > guard {
        Err(Error::GuardExceeded { n, guard })
    } else {
        Ok(())
    }
}

/// Canonical key of a short word: length plus bits packed first-symbol-high.
/// Ordering is by length, then lexicographic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordKey {
    pub len: u8,
    pub bits: u64,
}

impl WordKey {
    pub const EMPTY: WordKey = WordKey { len: 0, bits: 0 };

    pub fn from_word(w: &BitWord) -> Self {
        assert!(w.len() <= 64, "word too long for a packed key");
        Self {
            len: w.len() as u8,
            bits: w.to_index(),
        }
    }

    #[inline]
    pub fn push(self, bit: u8) -> Self {
        Self {
            len: self.len + 1,
            bits: (self.bits << 1) | u64::from(bit),
        }
    }

    pub fn to_word(self) -> BitWord {
        BitWord::from_index(self.bits, self.len as usize)
    }
}

/// `P(y | x)` for insertion probability `alpha`. Zero when `|y|` is outside `[n, 2n]`.
pub fn channel_law(x: &BitWord, y: &BitWord, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let n = x.len();
    let m = y.len();
    if m < n || m > 2 * n {
        return Ok(0.0);
    }
    let (xs, ys) = (x.as_slice(), y.as_slice());
    let keep = 1.0 - alpha;
    let ins = alpha / 2.0;
    // prev[j] = f(i - 1, j)
    let mut prev = vec![0.0f64; m + 1];
    let mut cur = vec![0.0f64; m + 1];
    prev[0] = 1.0;
    for i in 1..=n {
        cur.iter_mut().for_each(|c| *c = 0.0);
        let xi = xs[i - 1];
        // y has at least i and at most 2i symbols after i inputs
        for j in i..=(2 * i).min(m) {
            let mut f = 0.0;
            if ys[j - 1] == xi {
                f += keep * prev[j - 1];
            }
            if j >= 2 && ys[j - 2] == xi {
                f += ins * prev[j - 2];
            }
            cur[j] = f;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// Support and probabilities of `Y` given one input word, sorted by key.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputDistribution {
    n: usize,
    alpha: f64,
    entries: Vec<(WordKey, f64)>,
}

impl OutputDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn entries(&self) -> &[(WordKey, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, y: &BitWord) -> f64 {
        if y.len() > 64 {
            return 0.0;
        }
        let key = WordKey::from_word(y);
        self.entries
            .binary_search_by(|(k, _)| k.cmp(&key))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn entropy(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| neg_xlog2x(p)).sum()
    }
}

/// Enumerates every realization class of `x` (no insertion, insert 0, insert 1
/// after each bit), merging classes that share an output prefix.
pub fn output_distribution(
    x: &BitWord,
    alpha: f64,
    guard: &EnumerationGuard,
) -> Result<OutputDistribution> {
    check_alpha(alpha)?;
    guard.check_output(x.len())?;
    let keep = 1.0 - alpha;
    let ins = alpha / 2.0;
    let mut states: HashMap<WordKey, f64> = HashMap::from([(WordKey::EMPTY, 1.0)]);
    for xi in x.iter() {
        let mut next = HashMap::with_capacity(states.len() * 3);
        for (prefix, p) in states {
            let base = prefix.push(xi);
            *next.entry(base).or_insert(0.0) += p * keep;
            if alpha > 0.0 {
                *next.entry(base.push(0)).or_insert(0.0) += p * ins;
                *next.entry(base.push(1)).or_insert(0.0) += p * ins;
            }
        }
        states = next;
    }
    let mut entries: Vec<(WordKey, f64)> = states.into_iter().collect();
    entries.sort_unstable_by_key(|e| e.0);
    Ok(OutputDistribution {
        n: x.len(),
        alpha,
        entries,
    })
}

/// `H(Y | X = x)` in bits.
pub fn conditional_output_entropy(
    x: &BitWord,
    alpha: f64,
    guard: &EnumerationGuard,
) -> Result<f64> {
    Ok(output_distribution(x, alpha, guard)?.entropy())
}
