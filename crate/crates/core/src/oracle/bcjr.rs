//! Forward-backward posterior recursions computed in the probability domain.
//!
//! Works directly with Gaussian densities and per-stage normalization, with
//! no log-domain tricks, so it is an independent check on the decoder's
//! smoothed trellis passes at moderate sharpness. An optional per-bit extra
//! cost on input-1 edges lets tests feed in coupling messages.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::TrellisSequence;
use crate::oracle::OracleError;

#[derive(Debug, Clone)]
pub struct BcjrPosteriors {
    /// `alpha[t][k]`: probability of state `k` after `t` sections, given
    /// observations `0..t`. Row 0 is the start distribution.
    pub alpha: Vec<Vec<f64>>,
    /// `beta[t][k]`: likelihood of observations `t..` from state `k`,
    /// normalized per stage; row `len` is uniform.
    pub beta: Vec<Vec<f64>>,
    /// `gamma[t]`: log posterior ratio `ln P(x_t = 0 | y) - ln P(x_t = 1 | y)`,
    /// `+inf`/`-inf` when one side has zero mass.
    pub gamma: Vec<f64>,
}

/// Posterior state/bit beliefs for observations `y` under i.i.d. Gaussian
/// noise of deviation `sigma`. `extra_bit_cost[t]`, when given, multiplies
/// every input-1 edge weight of section `t` by `exp(-extra_bit_cost[t])`.
pub fn bcjr_direct(
    trellis: &TrellisSequence,
    y: &[f64],
    sigma: f64,
    extra_bit_cost: Option<&[f64]>,
) -> Result<BcjrPosteriors, OracleError> {
    let n = trellis.len();
    if y.len() != n {
        return Err(OracleError::Shape("observation length != trellis sections"));
    }
    if let Some(extra) = extra_bit_cost {
        if extra.len() != n {
            return Err(OracleError::Shape("extra cost length != trellis sections"));
        }
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(OracleError::Shape("sigma must be finite and positive"));
    }
    let s = trellis.num_states();
    let edges = trellis.edges();
    let norm = 1.0 / (sigma * (2.0 * core::f64::consts::PI).sqrt());
    let weight = |t: usize, a: usize| -> f64 {
        let e = &edges[a];
        let d = y[t] - e.output;
        let mut w = norm * (-d * d / (2.0 * sigma * sigma)).exp();
        if e.bit == 1 {
            if let Some(extra) = extra_bit_cost {
                w *= (-extra[t]).exp();
            }
        }
        w
    };

    let mut alpha = vec![vec![0.0f64; s]; n + 1];
    alpha[0].copy_from_slice(trellis.spec().initial_distribution());
    for t in 0..n {
        let mut next = vec![0.0f64; s];
        for (a, e) in edges.iter().enumerate() {
            if alpha[t][e.from] > 0.0 {
                next[e.to] += alpha[t][e.from] * weight(t, a);
            }
        }
        let total: f64 = next.iter().sum();
        if total <= 0.0 {
            return Err(OracleError::NoFeasiblePath);
        }
        for v in &mut next {
            *v /= total;
        }
        alpha[t + 1] = next;
    }

    let uniform = 1.0 / s as f64;
    let mut beta = vec![vec![uniform; s]; n + 1];
    for t in (0..n).rev() {
        let mut prev = vec![0.0f64; s];
        for (a, e) in edges.iter().enumerate() {
            if beta[t + 1][e.to] > 0.0 {
                prev[e.from] += weight(t, a) * beta[t + 1][e.to];
            }
        }
        let total: f64 = prev.iter().sum();
        if total <= 0.0 {
            return Err(OracleError::NoFeasiblePath);
        }
        for v in &mut prev {
            *v /= total;
        }
        beta[t] = prev;
    }

    let mut gamma = Vec::with_capacity(n);
    for t in 0..n {
        let mut mass = [0.0f64; 2];
        for (a, e) in edges.iter().enumerate() {
            mass[e.bit as usize] += alpha[t][e.from] * weight(t, a) * beta[t + 1][e.to];
        }
        gamma.push(match (mass[0] > 0.0, mass[1] > 0.0) {
            (true, true) => mass[0].ln() - mass[1].ln(),
            (true, false) => f64::INFINITY,
            (false, true) => f64::NEG_INFINITY,
            (false, false) => return Err(OracleError::NoFeasiblePath),
        });
    }
    Ok(BcjrPosteriors { alpha, beta, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_trellis, channel_simulate, ChannelSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn rows_stay_normalized_and_start_row_is_p0() {
        let spec = ChannelSpec::pr2();
        let trellis = build_trellis(&spec, 5);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let y = channel_simulate(&trellis, &[1, 0, 1, 1, 0], 0.7, &mut rng).unwrap();
        let post = bcjr_direct(&trellis, &y, 0.7, None).unwrap();
        assert_eq!(post.alpha[0], trellis.spec().initial_distribution());
        for row in post.alpha.iter().chain(post.beta.iter().take(5)) {
            let total: f64 = row.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn strong_observations_give_confident_signs() {
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, 3);
        // Clean 110 from state 0, tiny noise floor in the model.
        let post = bcjr_direct(&trellis, &[2.0, 0.0, -2.0], 0.1, None).unwrap();
        assert!(post.gamma[0] < -10.0);
        assert!(post.gamma[2] > 10.0);
    }

    #[test]
    fn extra_cost_pushes_the_posterior_toward_zero() {
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, 3);
        let y = [0.4, -0.2, 0.1];
        let base = bcjr_direct(&trellis, &y, 1.0, None).unwrap();
        let biased = bcjr_direct(&trellis, &y, 1.0, Some(&[3.0, 3.0, 3.0])).unwrap();
        for t in 0..3 {
            assert!(biased.gamma[t] > base.gamma[t]);
        }
    }
}
