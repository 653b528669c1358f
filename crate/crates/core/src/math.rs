//! Scalar numerics shared by the decoder and the oracles.
//!
//! Everything here is written around one identity: for sharpness `K > 0`,
//!
//! ```text
//! softmin_K(x_1..x_m) = -(1/K) * ln( sum_i exp(-K * x_i) )
//! ```
//!
//! which satisfies `min - ln(m)/K <= softmin_K <= min`. The implementations
//! shift by the extreme value before exponentiating so they stay finite for
//! any sharpness that fits in an `f64`.

#[allow(unused_imports)]
use num_traits::Float;

/// Natural log of `sum(exp(x_i))`, max-shifted for stability.
///
/// Returns `-inf` for an empty input. Entries equal to `-inf` are harmless
/// (they contribute nothing); `+inf` entries dominate and yield `+inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mut hi = f64::NEG_INFINITY;
    for &x in xs {
        if x > hi {
            hi = x;
        }
    }
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    for &x in xs {
        acc += (x - hi).exp();
    }
    hi + acc.ln()
}

/// Soft minimum with sharpness `k` over `values`, skipping non-finite
/// entries (an excluded trellis edge is represented as `+inf`).
///
/// Returns `+inf` when every entry is excluded; that return value *is* the
/// error flag, mirroring the convention for unreachable trellis states.
pub fn softmin(k: f64, values: &[f64]) -> f64 {
    debug_assert!(k > 0.0, "softmin sharpness must be positive");
    let mut lo = f64::INFINITY;
    for &v in values {
        if v.is_finite() && v < lo {
            lo = v;
        }
    }
    if lo == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    for &v in values {
        if v.is_finite() {
            acc += (-k * (v - lo)).exp();
        }
    }
    // acc >= 1 because the minimizer contributes exp(0); ln(acc) >= 0 keeps
    // the result at or below the hard minimum.
    lo - acc.ln() / k
}

/// Hard minimum with the same exclusion convention as [`softmin`].
pub fn hardmin(values: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    for &v in values {
        if v.is_finite() && v < lo {
            lo = v;
        }
    }
    lo
}

/// `ln(1 + exp(x))` without overflow for large `|x|`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Shannon entropy `-sum q_i ln q_i` of a nonnegative vector (callers
/// normalize); zero entries contribute zero.
pub fn entropy(q: &[f64]) -> f64 {
    let mut h = 0.0;
    for &v in q {
        if v > 0.0 {
            h -= v * v.ln();
        }
    }
    h
}

/// Exact pairwise combine of two scaled log-likelihood ratios:
/// `2 atanh(tanh(a/2) tanh(b/2))`.
///
/// Evaluated as `sign(a) sign(b) min(|a|, |b|)` plus two `ln(1 + e^{-|.|})`
/// corrections, which keeps full precision for arbitrarily large magnitudes;
/// the literal product form loses the answer once `tanh` rounds to one
/// (|argument| beyond roughly 19). `+inf` is the identity; two infinite
/// inputs combine by sign agreement. Associative and commutative up to
/// rounding, so leave-one-out combines may be built from partial combines.
pub fn boxplus(a: f64, b: f64) -> f64 {
    if a.is_infinite() && b.is_infinite() {
        return if (a > 0.0) == (b > 0.0) { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    if a.is_infinite() {
        return if a > 0.0 { b } else { -b };
    }
    if b.is_infinite() {
        return if b > 0.0 { a } else { -a };
    }
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    sign * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Clamp helper that also reports whether clamping occurred.
#[inline]
pub fn clamp_flagged(x: f64, bound: f64) -> (f64, bool) {
    if x > bound {
        (bound, true)
    } else if x < -bound {
        (-bound, true)
    } else {
        (x, false)
    }
}
