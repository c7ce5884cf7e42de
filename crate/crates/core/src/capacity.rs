//! Exact finite-blocklength information quantities.
//!
//! [`mutual_information`] enumerates every joint atom `(x, a, b)` and groups
//! them by `y` and by `(x, y, K)`, so each entropy in
//!
//! ```text
//! I(X; Y) = H(Y) - H(A, B) + H(A, B | X, Y, K) + H(K | X, Y)
//! ```
//!
//! is computed directly rather than by difference. [`blahut_arimoto`] maximizes
//! `I(X^n; Y) / n` over input laws, giving the upper bounds `C_n >= C`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{output_distribution, EnumerationGuard, WordKey};
use crate::model::{check_alpha, decompose_runs, BitWord};
use crate::series::neg_xlog2x;

#[derive(Clone, Debug, PartialEq)]
pub enum InputLawKind {
    /// i.i.d. symbols with `P(1) = p`.
    IidBernoulli(f64),
    /// Stationary two-state chain: `p01 = P(1 | 0)`, `p10 = P(0 | 1)`.
    Markov { p01: f64, p10: f64 },
    /// Probability of every word, indexed by [`BitWord::to_index`].
    Explicit(Vec<f64>),
}

/// Distribution of the input block `X^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputLaw {
    n: usize,
    kind: InputLawKind,
}

fn check_prob(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::InvalidProbability(p))
    }
}

impl InputLaw {
    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            kind: InputLawKind::IidBernoulli(0.5),
        }
    }

    pub fn iid(n: usize, p: f64) -> Result<Self> {
        Ok(Self {
            n,
            kind: InputLawKind::IidBernoulli(check_prob(p)?),
        })
    }

    pub fn markov(n: usize, p01: f64, p10: f64) -> Result<Self> {
        Ok(Self {
            n,
            kind: InputLawKind::Markov {
                p01: check_prob(p01)?,
                p10: check_prob(p10)?,
            },
        })
    }

    pub fn explicit(n: usize, table: Vec<f64>) -> Result<Self> {
        if n >= usize::BITS as usize || table.len() != 1usize << n {
            return Err(Error::InvalidLaw(format!(
                "table has {} entries, expected 2^{n}",
                table.len()
            )));
        }
        if table
            .iter()
            .any(|&p| p.is_nan() || p < 0.0 || !p.is_finite())
        {
            return Err(Error::InvalidLaw("negative or non-finite entry".into()));
        }
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!("entries sum to {total}")));
        }
        Ok(Self {
            n,
            kind: InputLawKind::Explicit(table),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &InputLawKind {
        &self.kind
    }

    /// Probability of every input word, indexed by [`BitWord::to_index`].
    pub fn table(&self) -> Vec<f64> {
        let n = self.n;
        match &self.kind {
            InputLawKind::Explicit(t) => t.clone(),
            InputLawKind::IidBernoulli(p) => (0..1u64 << n)
                .map(|i| {
                    let ones = i.count_ones() as i32;
                    p.powi(ones) * (1.0 - p).powi(n as i32 - ones)
                })
                .collect(),
            &InputLawKind::Markov { p01, p10 } => {
                let pi1 = if p01 + p10 > 0.0 {
                    p01 / (p01 + p10)
                } else {
                    0.5
                };
                let trans = |from: u8, to: u8| match (from, to) {
                    (0, 0) => 1.0 - p01,
                    (0, _) => p01,
                    (_, 0) => p10,
                    _ => 1.0 - p10,
                };
                (0..1u64 << n)
                    .map(|i| {
                        let x = BitWord::from_index(i, n);
                        let mut p = if x.get(0) == 1 { pi1 } else { 1.0 - pi1 };
                        for k in 1..n {
                            p *= trans(x.get(k - 1), x.get(k));
                        }
                        p
                    })
                    .collect()
            }
        }
    }

    /// The law of the complemented word.
    pub fn complement(&self) -> Self {
        let mask = (1u64 << self.n) - 1;
        let t = self.table();
        let flipped = (0..t.len() as u64)
            .map(|i| t[(i ^ mask) as usize])
            .collect();
        Self {
            n: self.n,
            kind: InputLawKind::Explicit(flipped),
        }
    }

    pub fn entropy(&self) -> f64 {
        self.table().iter().map(|&p| neg_xlog2x(p)).sum()
    }
}

/// Exact entropies (bits) of one blocklength-`n` channel use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MiResult {
    pub n: usize,
    pub alpha: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub h_y_given_x: f64,
    pub h_ab: f64,
    pub h_ab_given_xyk: f64,
    pub h_k_given_xy: f64,
    pub mutual_information: f64,
}

impl MiResult {
    /// `I - (H(Y) - H(Y|X))`.
    pub fn residual_direct(&self) -> f64 {
        self.mutual_information - (self.h_y - self.h_y_given_x)
    }

    /// `I - (H(Y) - H(A,B) + H(A,B|X,Y,K) + H(K|X,Y))`.
    pub fn residual_decomposition(&self) -> f64 {
        self.mutual_information - (self.h_y - self.h_ab + self.h_ab_given_xyk + self.h_k_given_xy)
    }

    pub fn per_symbol(&self) -> f64 {
        self.mutual_information / self.n as f64
    }
}

/// Conditional quantities for one fixed input word.
struct WordTerms {
    h_ab_given_yk: f64,
    h_k_given_y: f64,
    h_y: f64,
    outputs: Vec<(WordKey, f64)>,
}

struct Enumerator<'a> {
    x: &'a [u8],
    run_of: Vec<usize>,
    radix: Vec<u64>,
    keep: f64,
    ins: f64,
    insertions: bool,
    groups: HashMap<(WordKey, u64), (f64, f64)>,
}

impl Enumerator<'_> {
    fn visit(&mut self, i: usize, y: WordKey, k: u64, p: f64) {
        if i == self.x.len() {
            let g = self.groups.entry((y, k)).or_insert((0.0, 0.0));
            g.0 += p;
            g.1 += neg_xlog2x(p);
            return;
        }
        let base = y.push(self.x[i]);
        self.visit(i + 1, base, k, p * self.keep);
        if self.insertions {
            let k1 = k + self.radix[self.run_of[i]];
            let p1 = p * self.ins;
            self.visit(i + 1, base.push(0), k1, p1);
            self.visit(i + 1, base.push(1), k1, p1);
        }
    }
}

fn word_terms(x: &BitWord, alpha: f64) -> WordTerms {
    let runs = decompose_runs(x).expect("blocklength is positive");
    let mut run_of = vec![0usize; x.len()];
    // K is encoded as a mixed-radix number of per-run insertion counts
    let mut radix = Vec::with_capacity(runs.count());
    let mut scale = 1u64;
    for (j, r) in runs.runs().iter().enumerate() {
        run_of[r.start..r.end()].fill(j);
        radix.push(scale);
        scale *= r.len as u64 + 1;
    }
    let mut e = Enumerator {
        x: x.as_slice(),
        run_of,
        radix,
        keep: 1.0 - alpha,
        ins: alpha / 2.0,
        insertions: alpha > 0.0,
        groups: HashMap::new(),
    };
    e.visit(0, WordKey::EMPTY, 0, 1.0);

    let mut groups: Vec<((WordKey, u64), (f64, f64))> = e.groups.into_iter().collect();
    groups.sort_unstable_by_key(|g| g.0);

    let mut h_ab_given_yk = 0.0;
    let mut h_k_given_y = 0.0;
    let mut h_y = 0.0;
    let mut outputs: Vec<(WordKey, f64)> = Vec::new();
    let mut idx = 0;
    while idx < groups.len() {
        let y = groups[idx].0 .0;
        let mut q_y = 0.0;
        let mut h_k = 0.0;
        while idx < groups.len() && groups[idx].0 .0 == y {
            let (q, atoms) = groups[idx].1;
            h_ab_given_yk += atoms - neg_xlog2x(q);
            h_k += neg_xlog2x(q);
            q_y += q;
            idx += 1;
        }
        h_k_given_y += h_k - neg_xlog2x(q_y);
        h_y += neg_xlog2x(q_y);
        outputs.push((y, q_y));
    }
    WordTerms {
        h_ab_given_yk,
        h_k_given_y,
        h_y,
        outputs,
    }
}

/// `H(A^n, B^n)` by summing over insertion counts: `C(n, k) 2^k` atoms of
/// probability `(alpha/2)^k (1 - alpha)^(n-k)` each.
fn insertion_entropy(n: usize, alpha: f64) -> f64 {
    let mut h = 0.0;
    let mut binom = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            binom = binom * (n - k + 1) as f64 / k as f64;
        }
        let p = (alpha / 2.0).powi(k as i32) * (1.0 - alpha).powi((n - k) as i32);
        h += binom * 2f64.powi(k as i32) * neg_xlog2x(p);
    }
    h
}

/// Exact `I(X^n; Y)` and its entropy decomposition for the given input law.
pub fn mutual_information(
    law: &InputLaw,
    alpha: f64,
    guard: &EnumerationGuard,
) -> Result<MiResult> {
    check_alpha(alpha)?;
    let n = law.n();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "blocklength must be positive".into(),
        ));
    }
    guard.check_alphabet(n)?;
    let table = law.table();

    let per_word: Vec<Option<WordTerms>> = table
        .par_iter()
        .enumerate()
        .map(|(i, &px)| (px > 0.0).then(|| word_terms(&BitWord::from_index(i as u64, n), alpha)))
        .collect();

    let mut h_x = 0.0;
    let mut h_y_given_x = 0.0;
    let mut h_ab_given_xyk = 0.0;
    let mut h_k_given_xy = 0.0;
    let mut marginal: HashMap<WordKey, f64> = HashMap::new();
    for (px, terms) in table.iter().zip(&per_word) {
        let Some(t) = terms else { continue };
        h_x += neg_xlog2x(*px);
        h_y_given_x += px * t.h_y;
        h_ab_given_xyk += px * t.h_ab_given_yk;
        h_k_given_xy += px * t.h_k_given_y;
        for &(y, q) in &t.outputs {
            *marginal.entry(y).or_insert(0.0) += px * q;
        }
    }
    let mut ys: Vec<(WordKey, f64)> = marginal.into_iter().collect();
    ys.sort_unstable_by_key(|e| e.0);
    let h_y: f64 = ys.iter().map(|&(_, p)| neg_xlog2x(p)).sum();

    Ok(MiResult {
        n,
        alpha,
        h_x,
        h_y,
        h_y_given_x,
        h_ab: insertion_entropy(n, alpha),
        h_ab_given_xyk,
        h_k_given_xy,
        mutual_information: h_y - h_y_given_x,
    })
}

/// Sparse transition matrix from `{0,1}^n` to all output words of length
/// `n..=2n` that have positive probability.
#[derive(Clone, Debug)]
pub struct ChannelMatrix {
    n: usize,
    alpha: f64,
    outputs: usize,
    rows: Vec<Vec<(u32, f64)>>,
    /// `sum_y W log2 W` per row.
    row_plogp: Vec<f64>,
}

impl ChannelMatrix {
    pub fn build(n: usize, alpha: f64, guard: &EnumerationGuard) -> Result<Self> {
        check_alpha(alpha)?;
        if n == 0 {
            return Err(Error::InvalidParameter(
                "blocklength must be positive".into(),
            ));
        }
        guard.check_alphabet(n)?;
        let dists = (0..1u64 << n)
            .into_par_iter()
            .map(|i| output_distribution(&BitWord::from_index(i, n), alpha, guard))
            .collect::<Result<Vec<_>>>()?;
        let mut keys: Vec<WordKey> = dists
            .iter()
            .flat_map(|d| d.entries().iter().map(|e| e.0))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let rows: Vec<Vec<(u32, f64)>> = dists
            .par_iter()
            .map(|d| {
                d.entries()
                    .iter()
                    .map(|&(k, p)| (keys.binary_search(&k).unwrap() as u32, p))
                    .collect()
            })
            .collect();
        let row_plogp = rows
            .iter()
            .map(|r| r.iter().map(|&(_, w)| -neg_xlog2x(w)).sum())
            .collect();
        Ok(Self {
            n,
            alpha,
            outputs: keys.len(),
            rows,
            row_plogp,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    fn output_marginal(&self, law: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.outputs];
        for (row, &p) in self.rows.iter().zip(law) {
            if p > 0.0 {
                for &(j, w) in row {
                    q[j as usize] += p * w;
                }
            }
        }
        q
    }

    /// `D(W(.|x) || q)` for every input `x`, in bits.
    fn divergences(&self, q: &[f64]) -> Vec<f64> {
        let log_q: Vec<f64> = q
            .par_iter()
            .map(|&v| if v > 0.0 { v.log2() } else { f64::NEG_INFINITY })
            .collect();
        self.rows
            .par_iter()
            .zip(&self.row_plogp)
            .map(|(row, &plogp)| {
                plogp - row.iter().map(|&(j, w)| w * log_q[j as usize]).sum::<f64>()
            })
            .collect()
    }

    /// `I(X^n; Y)` in bits for an input law given as a table.
    pub fn mutual_information(&self, law: &[f64]) -> f64 {
        let q = self.output_marginal(law);
        let d = self.divergences(&q);
        law.iter()
            .zip(&d)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, d)| p * d)
            .sum()
    }
}

/// Blahut–Arimoto run summary. Rates are per input symbol.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaTrace {
    pub n: usize,
    pub alpha: f64,
    /// `I(p_t) / n` for each iterate; non-decreasing.
    pub values: Vec<f64>,
    /// Final `I(p_t) / n`, a lower bound on `C_n`.
    pub capacity: f64,
    /// `max_x D(W(.|x) || q_t) / n`, a certified upper bound on `C_n`.
    pub upper_bound: f64,
    /// Block gap `max_x D - I(p_t)` in bits.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub law: Vec<f64>,
}

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Alternating maximization starting from the uniform law, stopping once the
/// block gap `max_x D - I` drops below `tol` bits.
pub fn blahut_arimoto_matrix(matrix: &ChannelMatrix, tol: f64, max_iter: usize) -> Result<BaTrace> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be positive".into()));
    }
    let n = matrix.n();
    let nf = n as f64;
    let inputs = matrix.inputs();
    let mut law = vec![1.0 / inputs as f64; inputs];
    let mut values = Vec::new();
    let mut upper = f64::INFINITY;
    let mut gap = f64::INFINITY;
    let mut info = 0.0;
    let mut converged = false;

    for _ in 0..max_iter {
        let q = matrix.output_marginal(&law);
        let d = matrix.divergences(&q);
        info = law
            .iter()
            .zip(&d)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, d)| p * d)
            .sum();
        upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if let Some(&prev) = values.last() {
            assert!(
                info / nf >= prev - 1e-12,
                "Blahut-Arimoto iterate decreased: {prev} -> {}",
                info / nf
            );
        }
        values.push(info / nf);
        gap = (upper - info).max(0.0);
        if gap < tol {
            converged = true;
            break;
        }
        let shift = upper;
        for (p, &dx) in law.iter_mut().zip(&d) {
            *p *= (dx - shift).exp2();
        }
        let total: f64 = law.iter().sum();
        law.iter_mut().for_each(|p| *p /= total);
    }

    let trace = BaTrace {
        n,
        alpha: matrix.alpha(),
        iterations: values.len(),
        values,
        capacity: info / nf,
        upper_bound: upper / nf,
        gap,
        converged,
        law,
    };
    if converged {
        Ok(trace)
    } else {
        Err(Error::NotConverged {
            iterations: trace.iterations,
            gap,
            trace: Box::new(trace),
        })
    }
}

pub fn blahut_arimoto(
    n: usize,
    alpha: f64,
    tol: f64,
    max_iter: usize,
    guard: &EnumerationGuard,
) -> Result<BaTrace> {
    let m = ChannelMatrix::build(n, alpha, guard)?;
    blahut_arimoto_matrix(&m, tol, max_iter)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperBoundSequence {
    pub alpha: f64,
    pub traces: Vec<BaTrace>,
    /// `min_n` of the certified per-symbol upper bounds.
    pub best_upper: f64,
    pub best_n: usize,
}

/// `C_n` for `n = 1..=n_max`; the running minimum of the certified bounds is
/// an upper bound on the capacity.
pub fn upper_bound_sequence(
    alpha: f64,
    n_max: usize,
    tol: f64,
    max_iter: usize,
    guard: &EnumerationGuard,
) -> Result<UpperBoundSequence> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be positive".into()));
    }
    guard.check_alphabet(n_max)?;
    let mut traces = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        traces.push(blahut_arimoto(n, alpha, tol, max_iter, guard)?);
    }
    let (best_n, best_upper) =
        traces
            .iter()
            .map(|t| (t.n, t.upper_bound))
            .fold(
                (0, f64::INFINITY),
                |acc, c| if c.1 < acc.1 { c } else { acc },
            );
    Ok(UpperBoundSequence {
        alpha,
        traces,
        best_upper,
        best_n,
    })
}
