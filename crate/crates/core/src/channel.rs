//! Finite-state channel models and their trellis representation.
//!
//! A channel is a labeled edge set over `S` states: every edge carries an
//! input bit `x(e)` and a noiseless output level `a(e)`. Running `N` inputs
//! through the channel traces an edge path; the receiver observes
//! `y_i = a(e_i) + sigma * z_i` with standard normal `z_i`. The decoder never
//! materializes `N` copies of the section graph — a [`TrellisSequence`] is
//! just the shared edge set plus a length.
//!
//! Built-in models (antipodal map `u = 2b - 1`):
//!
//! * `dic` — dicode `1 - D`, two states, outputs `{-2, 0, +2}`.
//! * `pdic` — dicode with a `1/(1 xor D)` precoder folded in: input 0 keeps
//!   the state and outputs 0, input 1 flips the state and outputs `+/-2`.
//! * `pr2` — partial response `1 + 2D + D^2`, four states, outputs
//!   `{-4, -2, 0, +2, +4}`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

/// One labeled trellis edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// State the edge leaves.
    pub from: usize,
    /// State the edge enters.
    pub to: usize,
    /// Input bit `x(e)`.
    pub bit: u8,
    /// Noiseless output level `a(e)`.
    pub output: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ChannelError {
    #[error("channel spec invalid: {0}")]
    InvalidSpec(String),
    #[error("initial distribution invalid: {0}")]
    InvalidDistribution(String),
    #[error("input length {got} does not match trellis length {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("state {state} has {count} edges for input {bit}; simulation needs exactly one")]
    NonDeterministic { state: usize, bit: u8, count: usize },
    #[error("initial distribution has empty support")]
    EmptySupport,
}

/// A finite-state channel: states, labeled edges, and the distribution of the
/// initial state.
///
/// Edges are held in canonical order, sorted by `(from, bit)` (stable for
/// multi-edge specs); every index used by the decoder and the oracles refers
/// to this order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    name: String,
    num_states: usize,
    edges: Vec<Edge>,
    p0: Vec<f64>,
}

impl ChannelSpec {
    /// Validates and canonicalizes a spec. Every state needs at least one
    /// outgoing edge per input bit, and `p0` must be a distribution over the
    /// states.
    pub fn new(
        name: impl Into<String>,
        num_states: usize,
        mut edges: Vec<Edge>,
        p0: Vec<f64>,
    ) -> Result<Self, ChannelError> {
        if num_states == 0 {
            return Err(ChannelError::InvalidSpec("no states".into()));
        }
        if edges.is_empty() {
            return Err(ChannelError::InvalidSpec("no edges".into()));
        }
        for e in &edges {
            if e.from >= num_states || e.to >= num_states {
                return Err(ChannelError::InvalidSpec(format!(
                    "edge ({} -> {}) references a state outside 0..{num_states}",
                    e.from, e.to
                )));
            }
            if e.bit > 1 {
                return Err(ChannelError::InvalidSpec(format!(
                    "edge input label {} is not a bit",
                    e.bit
                )));
            }
            if !e.output.is_finite() {
                return Err(ChannelError::InvalidSpec("non-finite output level".into()));
            }
        }
        for s in 0..num_states {
            for bit in 0..2u8 {
                if !edges.iter().any(|e| e.from == s && e.bit == bit) {
                    return Err(ChannelError::InvalidSpec(format!(
                        "state {s} has no outgoing edge for input {bit}"
                    )));
                }
            }
        }
        validate_distribution(&p0, num_states)?;
        edges.sort_by_key(|e| (e.from, e.bit));
        Ok(Self { name: name.into(), num_states, edges, p0 })
    }

    /// Dicode channel `1 - D` (`dic`). Starts in state 0 (previous symbol
    /// `-1`) by default.
    pub fn dicode() -> Self {
        let edges = (0..2usize)
            .flat_map(|s| {
                (0..2u8).map(move |x| {
                    let u_prev = 2.0 * s as f64 - 1.0;
                    let u = 2.0 * x as f64 - 1.0;
                    Edge { from: s, to: x as usize, bit: x, output: u - u_prev }
                })
            })
            .collect();
        Self::new("dic", 2, edges, point_mass(2, 0)).expect("built-in spec is valid")
    }

    /// Dicode behind a `1/(1 xor D)` precoder (`pdic`): the precoder state
    /// `v` absorbs the input (`v_i = x_i xor v_{i-1}`), so input 0 outputs 0
    /// and input 1 outputs `+/-2` while flipping the state.
    pub fn precoded_dicode() -> Self {
        let edges = (0..2usize)
            .flat_map(|s| {
                (0..2u8).map(move |x| {
                    let v = (x as usize) ^ s;
                    Edge { from: s, to: v, bit: x, output: 2.0 * (v as f64 - s as f64) }
                })
            })
            .collect();
        Self::new("pdic", 2, edges, point_mass(2, 0)).expect("built-in spec is valid")
    }

    /// Partial-response channel `1 + 2D + D^2` (`pr2`); the state packs the
    /// previous two bits as `2*b_{i-1} + b_{i-2}`.
    pub fn pr2() -> Self {
        let u = |b: usize| 2.0 * b as f64 - 1.0;
        let edges = (0..4usize)
            .flat_map(|s| {
                (0..2u8).map(move |x| {
                    let (b1, b2) = (s >> 1, s & 1);
                    Edge {
                        from: s,
                        to: ((x as usize) << 1) | b1,
                        bit: x,
                        output: u(x as usize) + 2.0 * u(b1) + u(b2),
                    }
                })
            })
            .collect();
        Self::new("pr2", 4, edges, point_mass(4, 0)).expect("built-in spec is valid")
    }

    /// Replaces the initial state distribution.
    pub fn with_initial_distribution(mut self, p0: Vec<f64>) -> Result<Self, ChannelError> {
        validate_distribution(&p0, self.num_states)?;
        self.p0 = p0;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Edges in canonical `(from, bit)` order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.p0
    }

    /// The unique edge leaving `state` under input `bit`, for deterministic
    /// (ISI-style) channels.
    pub fn edge_from(&self, state: usize, bit: u8) -> Result<&Edge, ChannelError> {
        let mut found = None;
        let mut count = 0;
        for e in &self.edges {
            if e.from == state && e.bit == bit {
                count += 1;
                found = Some(e);
            }
        }
        match (found, count) {
            (Some(e), 1) => Ok(e),
            _ => Err(ChannelError::NonDeterministic { state, bit, count }),
        }
    }

    /// Mean squared noiseless output under i.i.d. uniform input bits, taken
    /// in the stationary state distribution (computed by power iteration, so
    /// non-uniform stationary laws are handled too).
    pub fn output_power(&self) -> f64 {
        let pi = self.stationary_states();
        let mut power = 0.0;
        for e in &self.edges {
            let same_label = self
                .edges
                .iter()
                .filter(|o| o.from == e.from && o.bit == e.bit)
                .count() as f64;
            power += pi[e.from] * 0.5 / same_label * e.output * e.output;
        }
        power
    }

    /// Noise level realizing `snr_db` of output power over noise power.
    pub fn sigma_for_snr_db(&self, snr_db: f64) -> f64 {
        (self.output_power() / 10f64.powf(snr_db / 10.0)).sqrt()
    }

    /// Inverse of [`Self::sigma_for_snr_db`].
    pub fn snr_db_for_sigma(&self, sigma: f64) -> f64 {
        10.0 * (self.output_power() / (sigma * sigma)).log10()
    }

    fn stationary_states(&self) -> Vec<f64> {
        let s = self.num_states;
        let mut pi = vec![1.0 / s as f64; s];
        let mut next = vec![0.0; s];
        for _ in 0..512 {
            next.iter_mut().for_each(|v| *v = 0.0);
            for e in &self.edges {
                let same_label = self
                    .edges
                    .iter()
                    .filter(|o| o.from == e.from && o.bit == e.bit)
                    .count() as f64;
                next[e.to] += pi[e.from] * 0.5 / same_label;
            }
            let delta: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            core::mem::swap(&mut pi, &mut next);
            if delta < 1e-14 {
                break;
            }
        }
        pi
    }
}

fn point_mass(len: usize, at: usize) -> Vec<f64> {
    let mut p = vec![0.0; len];
    p[at] = 1.0;
    p
}

fn validate_distribution(p0: &[f64], num_states: usize) -> Result<(), ChannelError> {
    if p0.len() != num_states {
        return Err(ChannelError::InvalidDistribution(format!(
            "length {} != number of states {num_states}",
            p0.len()
        )));
    }
    if p0.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(ChannelError::InvalidDistribution("entries outside [0, 1]".into()));
    }
    let total: f64 = p0.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ChannelError::InvalidDistribution(format!("sums to {total}, not 1")));
    }
    Ok(())
}

/// `N` identical trellis sections over a shared channel spec; storage is
/// independent of `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrellisSequence {
    spec: ChannelSpec,
    len: usize,
}

/// Builds the length-`n` trellis for a channel.
pub fn build_trellis(spec: &ChannelSpec, n: usize) -> TrellisSequence {
    TrellisSequence { spec: spec.clone(), len: n }
}

impl TrellisSequence {
    /// Number of sections `N`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_states(&self) -> usize {
        self.spec.num_states()
    }

    /// Edges of one section, canonical order.
    pub fn edges(&self) -> &[Edge] {
        self.spec.edges()
    }

    pub fn num_edges(&self) -> usize {
        self.spec.num_edges()
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }
}

/// Dense `N x O` cost matrix over trellis sections, with an exclusion mask
/// for edges priced at `+inf` (zero-probability starts).
///
/// The same container carries raw branch metrics `b` and message-adjusted
/// costs; excluded entries read back as `+inf` and every recursion skips
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchMetrics {
    len: usize,
    num_edges: usize,
    values: Vec<f64>,
    excluded: Vec<bool>,
}

impl BranchMetrics {
    /// Wraps raw per-edge costs; non-finite entries become exclusions.
    pub fn from_values(len: usize, num_edges: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), len * num_edges, "cost matrix shape mismatch");
        let excluded = values.iter().map(|v| !v.is_finite()).collect();
        Self { len, num_edges, values, excluded }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    #[inline]
    pub fn get(&self, section: usize, edge: usize) -> f64 {
        self.values[section * self.num_edges + edge]
    }

    #[inline]
    pub fn is_excluded(&self, section: usize, edge: usize) -> bool {
        self.excluded[section * self.num_edges + edge]
    }

    /// Row of costs for one section.
    pub fn row(&self, section: usize) -> &[f64] {
        let o = self.num_edges;
        &self.values[section * o..(section + 1) * o]
    }

    pub(crate) fn set(&mut self, section: usize, edge: usize, value: f64) {
        let idx = section * self.num_edges + edge;
        self.values[idx] = value;
        self.excluded[idx] = !value.is_finite();
    }
}

/// Gaussian branch metrics `b_{i,e} = (y_i - a(e))^2 / (2 sigma^2)`, with
/// `-ln p0(s(e))` added on the first section (zero-probability start states
/// become exclusions). The constant `ln(sqrt(2 pi) sigma)` is dropped; it
/// cancels everywhere the metrics are used.
pub fn branch_metrics(
    trellis: &TrellisSequence,
    y: &[f64],
    sigma: f64,
) -> Result<BranchMetrics, ChannelError> {
    if y.len() != trellis.len() {
        return Err(ChannelError::LengthMismatch { got: y.len(), expected: trellis.len() });
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(ChannelError::InvalidSigma(sigma));
    }
    let o = trellis.num_edges();
    let inv = 1.0 / (2.0 * sigma * sigma);
    let p0 = trellis.spec().initial_distribution();
    let mut values = Vec::with_capacity(y.len() * o);
    for (i, &yi) in y.iter().enumerate() {
        for e in trellis.edges() {
            let d = yi - e.output;
            let mut b = d * d * inv;
            if i == 0 {
                let p = p0[e.from];
                b = if p > 0.0 { b - p.ln() } else { f64::INFINITY };
            }
            values.push(b);
        }
    }
    Ok(BranchMetrics::from_values(y.len(), o, values))
}

/// Runs `bits` through the channel and adds `sigma`-scaled white Gaussian
/// noise. The initial state is drawn from `p0` (one uniform variate is always
/// consumed, then one normal variate per section).
///
/// `sigma = 0` is allowed and returns the clean output sequence.
pub fn channel_simulate<R: Rng + ?Sized>(
    trellis: &TrellisSequence,
    bits: &[u8],
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>, ChannelError> {
    if bits.len() != trellis.len() {
        return Err(ChannelError::LengthMismatch { got: bits.len(), expected: trellis.len() });
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(ChannelError::InvalidSigma(sigma));
    }
    let spec = trellis.spec();
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut state = None;
    for (s, &p) in spec.initial_distribution().iter().enumerate() {
        acc += p;
        if u < acc {
            state = Some(s);
            break;
        }
    }
    // Guard against the cumulative sum landing a hair under 1.
    let mut state = match state.or_else(|| {
        spec.initial_distribution().iter().rposition(|&p| p > 0.0)
    }) {
        Some(s) => s,
        None => return Err(ChannelError::EmptySupport),
    };
    let mut y = Vec::with_capacity(bits.len());
    for &b in bits {
        let e = spec.edge_from(state, b)?;
        let z: f64 = rng.sample(StandardNormal);
        y.push(e.output + sigma * z);
        state = e.to;
    }
    Ok(y)
}
