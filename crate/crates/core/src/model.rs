//! Channel model: words, insertion realizations, runs and segment lengths,
//! and the realization transforms (modified, perturbed, run-truncated).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A finite binary word. Symbols are stored one per byte for O(1) access.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BitWord {
    bits: Vec<u8>,
}

impl BitWord {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidBit(b));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self {
            bits: bits.iter().map(|&b| b as u8).collect(),
        }
    }

    /// Word of length `n` whose first symbol is the most significant bit of `index`.
    pub fn from_index(index: u64, n: usize) -> Self {
        debug_assert!(n <= 64);
        let bits = (0..n).map(|k| ((index >> (n - 1 - k)) & 1) as u8).collect();
        Self { bits }
    }

    /// Inverse of [`BitWord::from_index`]. Only meaningful for `len() <= 64`.
    pub fn to_index(&self) -> u64 {
        self.bits
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    #[inline]
    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.bits.iter().copied()
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|&b| b ^ 1).collect(),
        }
    }

    pub fn xor(&self, other: &BitWord) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    /// Length of the longest run of identical symbols (0 for the empty word).
    pub fn max_run_length(&self) -> usize {
        let mut best = 0;
        let mut cur = 0;
        for (i, &b) in self.bits.iter().enumerate() {
            if i > 0 && b == self.bits[i - 1] {
                cur += 1;
            } else {
                cur = 1;
            }
            best = best.max(cur);
        }
        best
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl FromStr for BitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .bytes()
            .map(|c| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                other => Err(Error::InvalidBit(other)),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self { bits })
    }
}

impl From<BitWord> for Vec<u8> {
    fn from(w: BitWord) -> Self {
        w.bits
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<f64> {
    if (0.0..1.0).contains(&alpha) {
        Ok(alpha)
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Insertion probability together with the root seed of a simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    alpha: f64,
    seed: u64,
}

impl ChannelParams {
    pub fn new(alpha: f64, seed: u64) -> Result<Self> {
        Ok(Self {
            alpha: check_alpha(alpha)?,
            seed,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Insertion pattern `a` and inserted bits `b` for one channel use.
///
/// `a[i] = 1` means a bit was inserted right after input bit `i`; `b[i]` is its
/// value and is zero wherever `a[i] = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InsertionRealization {
    pattern: BitWord,
    inserted: BitWord,
}

impl InsertionRealization {
    pub fn new(pattern: BitWord, inserted: BitWord) -> Result<Self> {
        check_len(pattern.len(), inserted.len())?;
        if pattern
            .iter()
            .zip(inserted.iter())
            .any(|(a, b)| a == 0 && b == 1)
        {
            return Err(Error::InvalidParameter(
                "inserted bit set where no insertion occurred".into(),
            ));
        }
        Ok(Self { pattern, inserted })
    }

    pub fn none(n: usize) -> Self {
        Self {
            pattern: BitWord::zeros(n),
            inserted: BitWord::zeros(n),
        }
    }

    /// Realization class from its base-3 code: digit `i` (most significant
    /// first) is 0 for no insertion, 1 for inserting a 0, 2 for inserting a 1.
    pub fn from_ternary(n: usize, mut code: u64) -> Self {
        let mut pattern = vec![0u8; n];
        let mut inserted = vec![0u8; n];
        for i in (0..n).rev() {
            let d = (code % 3) as u8;
            code /= 3;
            if d > 0 {
                pattern[i] = 1;
                inserted[i] = d - 1;
            }
        }
        Self {
            pattern: BitWord { bits: pattern },
            inserted: BitWord { bits: inserted },
        }
    }

    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }

    pub fn pattern(&self) -> &BitWord {
        &self.pattern
    }

    pub fn inserted(&self) -> &BitWord {
        &self.inserted
    }

    pub fn insertions(&self) -> usize {
        self.pattern.popcount()
    }

    /// Probability of this exact `(a, b)` under insertion probability `alpha`.
    pub fn probability(&self, alpha: f64) -> f64 {
        let k = self.insertions() as i32;
        let n = self.len() as i32;
        (alpha / 2.0).powi(k) * (1.0 - alpha).powi(n - k)
    }

    /// Clears the insertions flagged in `remove`, keeping `b = 0` where `a = 0`.
    fn without(&self, remove: &[u8]) -> Self {
        let pattern: Vec<u8> = self
            .pattern
            .bits
            .iter()
            .zip(remove)
            .map(|(&a, &z)| a & !z & 1)
            .collect();
        let inserted = self
            .inserted
            .bits
            .iter()
            .zip(&pattern)
            .map(|(&b, &a)| b & a)
            .collect();
        Self {
            pattern: BitWord { bits: pattern },
            inserted: BitWord { bits: inserted },
        }
    }
}

/// Draws `a_i ~ Ber(alpha)` and, where `a_i = 1`, `b_i ~ Ber(1/2)`.
pub fn sample_realization<R: Rng + ?Sized>(
    n: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<InsertionRealization> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "blocklength must be positive".into(),
        ));
    }
    let alpha = params.alpha();
    let mut pattern = vec![0u8; n];
    let mut inserted = vec![0u8; n];
    if alpha > 0.0 {
        for i in 0..n {
            if rng.gen::<f64>() < alpha {
                pattern[i] = 1;
                inserted[i] = rng.gen::<bool>() as u8;
            }
        }
    }
    Ok(InsertionRealization {
        pattern: BitWord { bits: pattern },
        inserted: BitWord { bits: inserted },
    })
}

/// Output `x_1 [b_1] x_2 [b_2] ... x_n [b_n]`, with `b_i` present iff `a_i = 1`.
pub fn apply_channel(x: &BitWord, r: &InsertionRealization) -> Result<BitWord> {
    check_len(x.len(), r.len())?;
    let mut out = Vec::with_capacity(x.len() + r.insertions());
    for i in 0..x.len() {
        out.push(x.bits[i]);
        if r.pattern.bits[i] == 1 {
            out.push(r.inserted.bits[i]);
        }
    }
    Ok(BitWord { bits: out })
}

/// A maximal block of identical symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Run {
    pub symbol: u8,
    pub start: usize,
    pub len: usize,
}

impl Run {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn last(&self) -> usize {
        self.start + self.len - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunDecomposition {
    runs: Vec<Run>,
}

impl RunDecomposition {
    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn count(&self) -> usize {
        self.runs.len()
    }

    /// `(symbol, length)` pairs in order.
    pub fn symbol_lengths(&self) -> Vec<(u8, usize)> {
        self.runs.iter().map(|r| (r.symbol, r.len)).collect()
    }

    /// Number of insertions owned by each run (insertions after its bits).
    pub fn insertions_per_run(&self, pattern: &BitWord) -> Vec<usize> {
        self.runs
            .iter()
            .map(|r| {
                pattern.bits[r.start..r.end()]
                    .iter()
                    .filter(|&&a| a == 1)
                    .count()
            })
            .collect()
    }
}

pub fn decompose_runs(x: &BitWord) -> Result<RunDecomposition> {
    if x.is_empty() {
        return Err(Error::EmptyWord);
    }
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=x.len() {
        if i == x.len() || x.bits[i] != x.bits[start] {
            runs.push(Run {
                symbol: x.bits[start],
                start,
                len: i - start,
            });
            start = i;
        }
    }
    Ok(RunDecomposition { runs })
}

/// Output segment length per input run.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SegmentLengths(pub Vec<usize>);

impl SegmentLengths {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// `K[j]` = length of run `j` plus the insertions after its bits. An inserted
/// bit belongs to the run of the input bit it follows, whatever its value.
pub fn segment_lengths(x: &BitWord, r: &InsertionRealization) -> Result<SegmentLengths> {
    check_len(x.len(), r.len())?;
    let runs = decompose_runs(x)?;
    let extra = runs.insertions_per_run(&r.pattern);
    Ok(SegmentLengths(
        runs.runs
            .iter()
            .zip(extra)
            .map(|(run, e)| run.len + e)
            .collect(),
    ))
}

/// Positions reversed by a realization transform: `z = a ^ a'`, `v = b ^ b'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessDiff {
    z: BitWord,
    v: BitWord,
}

impl ProcessDiff {
    pub fn new(z: BitWord, v: BitWord) -> Result<Self> {
        check_len(z.len(), v.len())?;
        if z.iter().zip(v.iter()).any(|(z, v)| v == 1 && z == 0) {
            return Err(Error::InvalidParameter("v set where z is clear".into()));
        }
        Ok(Self { z, v })
    }

    pub fn z(&self) -> &BitWord {
        &self.z
    }

    pub fn v(&self) -> &BitWord {
        &self.v
    }

    pub fn is_zero(&self) -> bool {
        self.z.popcount() == 0
    }
}

/// Extended run `j`: run `j` plus the adjacent boundary bit of each existing
/// neighbor, as a half-open position range clipped to the word.
pub fn extended_run_span(runs: &RunDecomposition, j: usize) -> std::ops::Range<usize> {
    let r = runs.runs[j];
    let lo = if j > 0 { r.start - 1 } else { r.start };
    let hi = if j + 1 < runs.count() {
        r.end() + 1
    } else {
        r.end()
    };
    lo..hi
}

/// Modified insertion process: every extended run holding two or more
/// insertions loses all of them.
///
/// Boundary bits sit in two extended runs, but an insertion is owned only by
/// the extended run whose core run contains the input bit it follows. The
/// reversal is therefore a function of `(x, a)` and is idempotent.
pub fn modified_realization(
    x: &BitWord,
    r: &InsertionRealization,
) -> Result<(InsertionRealization, ProcessDiff)> {
    check_len(x.len(), r.len())?;
    let runs = decompose_runs(x)?;
    let counts = runs.insertions_per_run(&r.pattern);
    let mut remove = vec![0u8; x.len()];
    for (run, &c) in runs.runs.iter().zip(&counts) {
        if c >= 2 {
            let span = run.start..run.end();
            remove[span.clone()].copy_from_slice(&r.pattern.bits[span]);
        }
    }
    let modified = r.without(&remove);
    let diff = ProcessDiff {
        z: r.pattern.xor(&modified.pattern)?,
        v: r.inserted.xor(&modified.inserted)?,
    };
    Ok((modified, diff))
}

/// Perturbed insertion process: for each pair of consecutive runs holding two
/// or more insertions in total, the insertions owned by the first run of the
/// pair are removed. Returns the new realization and the removal mask.
pub fn perturbed_realization(
    x: &BitWord,
    r: &InsertionRealization,
) -> Result<(InsertionRealization, BitWord)> {
    check_len(x.len(), r.len())?;
    let runs = decompose_runs(x)?;
    let counts = runs.insertions_per_run(&r.pattern);
    let mut remove = vec![0u8; x.len()];
    for j in 0..runs.count().saturating_sub(1) {
        if counts[j] + counts[j + 1] >= 2 {
            let run = runs.runs[j];
            for (m, &a) in remove[run.start..run.end()]
                .iter_mut()
                .zip(&r.pattern.bits[run.start..run.end()])
            {
                *m |= a;
            }
        }
    }
    Ok((r.without(&remove), BitWord { bits: remove }))
}

/// Caps run lengths at `l_star` by flipping every bit that would be the
/// `(l_star + 1)`-th consecutive equal bit of the output. Returns the word and
/// the number of flips.
pub fn truncate_runs_counting(x: &BitWord, l_star: usize) -> Result<(BitWord, usize)> {
    if l_star == 0 {
        return Err(Error::InvalidParameter("l_star must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(x.len());
    let mut run = 0usize;
    let mut flips = 0usize;
    for &b in &x.bits {
        let mut bit = b;
        match out.last() {
            Some(&prev) if prev == bit => {
                if run == l_star {
                    bit ^= 1;
                    flips += 1;
                    run = 1;
                } else {
                    run += 1;
                }
            }
            _ => run = 1,
        }
        out.push(bit);
    }
    Ok((BitWord { bits: out }, flips))
}

pub fn truncate_runs(x: &BitWord, l_star: usize) -> Result<BitWord> {
    truncate_runs_counting(x, l_star).map(|(w, _)| w)
}
