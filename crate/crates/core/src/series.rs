//! Expansion constants and their truncated series.
//!
//! Every series here has terms decaying like `2^-l`. Partial sums are
//! accumulated smallest-term-first and returned with a closed-form bound on
//! the discarded tail, obtained by bounding `h(.) <= 1` and `log2 l <= l` and
//! summing the remaining geometric moments exactly:
//!
//! ```text
//! sum_{l>L} 2^-l     = 2^-L
//! sum_{l>L} l 2^-l   = (L + 2) 2^-L
//! sum_{l>L} l^2 2^-l = (L^2 + 4L + 6) 2^-L
//! ```

use serde::Serialize;

use crate::error::{Error, Result};

/// Mean of the length-biased run length under uniform i.i.d. input:
/// `sum_l l * l 2^-(l+1) = 3`.
pub const LENGTH_BIASED_MEAN: f64 = 3.0;

/// `-p log2 p`, with `0 log 0 = 0`.
#[inline]
pub fn neg_xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn h2(p: f64) -> f64 {
    neg_xlog2x(p) + neg_xlog2x(1.0 - p)
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(h2(p))
}

/// A truncated series with a rigorous bound on what was left out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub truncation: usize,
    pub tail_bound: f64,
}

/// `poly * 2^-shift`, floored at the smallest normal double so an underflowed
/// tail still bounds the true (positive) remainder.
fn scaled_tail(poly: f64, shift: usize) -> f64 {
    (poly * (-(shift as f64)).exp2()).max(f64::MIN_POSITIVE)
}

fn check_truncation(l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::InvalidParameter(
            "truncation level must be at least 1".into(),
        ));
    }
    Ok(())
}

fn check_open_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Per-run weight `(b + 1) 2^-b h(1/(b + 1))` for `b = 1..=l`, indexed from 0.
fn ambiguity_weights(l: usize) -> Vec<f64> {
    (1..=l)
        .map(|b| {
            let b = b as f64;
            (b + 1.0) * (-b).exp2() * h2(1.0 / (b + 1.0))
        })
        .collect()
}

/// `E[log2 L0] = sum_{l=1}^{L} 2^-(l+1) l log2 l`, the mean log length of the
/// run containing a uniformly chosen position of an i.i.d. Ber(1/2) word.
pub fn e_log_l0(l: usize) -> Result<SeriesValue> {
    check_truncation(l)?;
    let value = (1..=l)
        .rev()
        .map(|k| {
            let k = k as f64;
            (-(k + 1.0)).exp2() * k * k.log2()
        })
        .sum();
    let lf = l as f64;
    Ok(SeriesValue {
        value,
        truncation: l,
        tail_bound: scaled_tail(0.5 * (lf * lf + 4.0 * lf + 6.0), l),
    })
}

/// `A1 = (1/2) sum_{a,b=1}^{L} (b + 1) 2^-(a+b) h(1/(b + 1))`, the expected
/// boundary ambiguity entropy of a pair of consecutive runs, per unit `alpha`.
pub fn a1(l: usize) -> Result<SeriesValue> {
    check_truncation(l)?;
    let wts = ambiguity_weights(l);
    let mut value = 0.0;
    for a in (1..=l).rev() {
        let pa = (-(a as f64)).exp2();
        for &t in wts.iter().rev() {
            value += pa * t;
        }
    }
    let lf = l as f64;
    // outside the box: (1/2)[sum_{b>L} (b+1)2^-b + 3 * sum_{a>L} 2^-a]
    Ok(SeriesValue {
        value: 0.5 * value,
        truncation: l,
        tail_bound: scaled_tail(0.5 * (lf + 6.0), l),
    })
}

/// Single-sum form of [`a1`] after summing out the first run length.
pub fn a1_single_sum(l: usize) -> Result<SeriesValue> {
    check_truncation(l)?;
    let value: f64 = ambiguity_weights(l).iter().rev().sum();
    let lf = l as f64;
    Ok(SeriesValue {
        value: 0.5 * value,
        truncation: l,
        tail_bound: scaled_tail(0.5 * (lf + 3.0), l),
    })
}

/// First-order coefficient `G1 = -log2 e + E[log2 L0]/2 + A1` with the
/// closed-form tail bound `2^-(L+2) (L^2 + 8L + 24)`.
pub fn g1(l: usize) -> Result<SeriesValue> {
    let e = e_log_l0(l)?;
    let a = a1(l)?;
    let lf = l as f64;
    Ok(SeriesValue {
        value: -std::f64::consts::LOG2_E + 0.5 * e.value + a.value,
        truncation: l,
        tail_bound: scaled_tail(lf * lf + 8.0 * lf + 24.0, l + 2),
    })
}

/// Capacity approximation `1 + alpha log2 alpha + G1 alpha`. The neglected
/// remainder is `O(alpha^(3/2 - eps))`; this is an approximation, not a bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpansionPoint {
    pub alpha: f64,
    pub value: f64,
    pub g1: SeriesValue,
    pub remainder_order: &'static str,
}

pub const EXPANSION_REMAINDER: &str = "O(alpha^(3/2 - eps)) for every eps > 0";

pub fn capacity_expansion(alpha: f64, l: usize) -> Result<ExpansionPoint> {
    check_open_alpha(alpha)?;
    let g = g1(l)?;
    let value = if alpha == 0.0 {
        1.0
    } else {
        1.0 + alpha * alpha.log2() + g.value * alpha
    };
    Ok(ExpansionPoint {
        alpha,
        value,
        g1: g,
        remainder_order: EXPANSION_REMAINDER,
    })
}

/// Leading-order conditional output entropy rate
/// `h(alpha) + alpha (1 - E[log2 L0]/2 - A1)`, both series truncated at `L`.
pub fn hyx_asymptote(alpha: f64, l: usize) -> Result<f64> {
    check_open_alpha(alpha)?;
    let e = e_log_l0(l)?.value;
    let a = a1(l)?.value;
    Ok(h2(alpha) + alpha * (1.0 - 0.5 * e - a))
}

/// Upper end of the perturbed-process correction,
/// `(alpha^2 / 2) sum_{a,b} (a + b)(b + 1) 2^-(a+b) h(1/(b + 1))`.
pub fn epsilon2_bound(alpha: f64, l: usize) -> Result<SeriesValue> {
    check_open_alpha(alpha)?;
    check_truncation(l)?;
    let wts = ambiguity_weights(l);
    let mut s = 0.0;
    for a in (1..=l).rev() {
        let pa = (-(a as f64)).exp2();
        for (bi, &t) in wts.iter().enumerate().rev() {
            let b = (bi + 1) as f64;
            s += (a as f64 + b) * pa * t;
        }
    }
    let lf = l as f64;
    let scale = alpha * alpha * 0.5;
    // a(b+1) part: (5L + 12) 2^-L; b(b+1) part: (L^2 + 5L + 16) 2^-L
    let tail = if scale == 0.0 {
        0.0
    } else {
        scale * scaled_tail(lf * lf + 10.0 * lf + 28.0, l)
    };
    Ok(SeriesValue {
        value: scale * s,
        truncation: l,
        tail_bound: tail,
    })
}

/// Converse-side bound `h(z, v) <= 0.5 alpha^(2 - eps) (2 + 0.5 alpha^(1/2) L*)`.
pub fn hzv_converse_bound(alpha: f64, epsilon: f64, l_star: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    Ok(0.5 * alpha.powf(2.0 - epsilon) * (2.0 + 0.5 * alpha.sqrt() * l_star as f64))
}

/// `P(L0 > l) = (l + 2) 2^-(l+1)` for the length-biased run length.
pub fn length_biased_tail(l: usize) -> f64 {
    (l as f64 + 2.0) * (-(l as f64 + 1.0)).exp2()
}

/// Density bound `P(L0 > L*) / L*` for bits flipped by run truncation.
pub fn flip_density_bound(l_star: usize) -> f64 {
    length_biased_tail(l_star) / l_star as f64
}
