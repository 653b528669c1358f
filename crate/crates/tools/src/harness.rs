//! Seeded Monte Carlo word-error-rate estimation.
//!
//! Every trial derives its own RNG from (master seed, SNR index, trial
//! index, stream tag), so results are independent of worker count and all
//! decoder variants in a plan face the same noise realizations (paired
//! comparison). Aggregation happens in trial order over fixed-size chunks;
//! the stop-at-errors rule is evaluated only at chunk boundaries, which makes
//! the stopping point itself deterministic.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use jointlp_core::channel::{
    branch_metrics, build_trellis, channel_simulate, BranchMetrics, ChannelError, TrellisSequence,
};
use jointlp_core::code::{
    fixed_weight_codeword, generate_regular_code, syndrome_ok, CodeError, TannerGraph,
};
use jointlp_core::decoder::{decode, DecodeError, DecodeReport, DecodeStatus, DecoderConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::alist::{load_alist, AlistError};
use crate::formats::{
    read_codeword_file, CodeSource, CodewordPolicy, FormatError, TrialBudget, TrialPlan,
};

/// Column order is part of the output contract.
pub const CSV_HEADER: &str = "snr_db,sigma,trials,word_errors,detected_errors,\
undetected_errors,wer,ci_lo,ci_hi,mean_iters,decoder_id,seed";

/// Trials per scheduling chunk; the stop-at-errors rule fires only on these
/// boundaries so any worker count stops at the same trial.
const CHUNK: u64 = 64;

/// Stream tag for the channel noise RNG (decoder variants share it).
const STREAM_NOISE: u64 = 0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("plan rejected: {0}")]
    BadPlan(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Alist(#[from] AlistError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// One uniform-random-deviate RNG per (master, SNR point, trial, stream).
pub fn child_rng(master: u64, snr_idx: u64, trial: u64, stream: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&snr_idx.to_le_bytes());
    key[16..24].copy_from_slice(&trial.to_le_bytes());
    key[24..32].copy_from_slice(&stream.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Matched-pair comparison of two per-trial error-flag sequences: returns
/// `(mean difference, lo, hi)` where the difference is
/// `rate(first) - rate(second)` and `[lo, hi]` is the 95% normal-approximation
/// interval for the per-trial paired differences. Trials where both decoders
/// agree contribute zero difference but still shrink the interval, which is
/// the whole benefit of pairing.
pub fn paired_difference_interval(first: &[bool], second: &[bool]) -> (f64, f64, f64) {
    assert_eq!(first.len(), second.len(), "paired sequences must align");
    let n = first.len() as f64;
    if first.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (&a, &b) in first.iter().zip(second) {
        let d = f64::from(a) - f64::from(b);
        sum += d;
        sum_sq += d * d;
    }
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let half = 1.959_963_984_540_054 * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

/// 95% Wilson score interval for `errors` successes in `trials` draws.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One decoder variant's aggregate at one SNR point.
#[derive(Debug, Clone)]
pub struct WerRow {
    pub snr_db: f64,
    pub sigma: f64,
    pub trials: u64,
    pub word_errors: u64,
    pub detected_errors: u64,
    pub undetected_errors: u64,
    pub wer: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_iters: f64,
    pub decoder_id: String,
    pub seed: u64,
    /// Wall-clock diagnostics; intentionally not a CSV column (not
    /// reproducible across machines).
    pub mean_seconds: f64,
    pub harness_errors: u64,
}

impl WerRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.snr_db,
            self.sigma,
            self.trials,
            self.word_errors,
            self.detected_errors,
            self.undetected_errors,
            self.wer,
            self.ci_lo,
            self.ci_hi,
            self.mean_iters,
            self.decoder_id,
            self.seed
        )
    }
}

pub fn csv_table(rows: &[WerRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Default)]
struct TrialOutcome {
    word_error: bool,
    detected: bool,
    undetected: bool,
    iters: u64,
    seconds: f64,
    harness_error: bool,
}

impl TrialOutcome {
    fn failure(seconds: f64) -> Self {
        TrialOutcome {
            word_error: true,
            detected: true,
            undetected: false,
            iters: 0,
            seconds,
            harness_error: true,
        }
    }

    fn from_report(report: &DecodeReport, sent: &[u8], seconds: f64) -> Self {
        let word_error = report.hard_bits != sent;
        let undetected = word_error && report.status == DecodeStatus::CodewordFound;
        TrialOutcome {
            word_error,
            detected: word_error && !undetected,
            undetected,
            iters: report.iterations_used as u64,
            seconds,
            harness_error: false,
        }
    }
}

#[derive(Default, Clone)]
struct VariantAgg {
    trials: u64,
    word_errors: u64,
    detected: u64,
    undetected: u64,
    iters: u64,
    seconds: f64,
    harness_errors: u64,
}

impl VariantAgg {
    fn absorb(&mut self, o: &TrialOutcome) {
        self.trials += 1;
        self.word_errors += u64::from(o.word_error);
        self.detected += u64::from(o.detected);
        self.undetected += u64::from(o.undetected);
        self.iters += o.iters;
        self.seconds += o.seconds;
        self.harness_errors += u64::from(o.harness_error);
    }
}

/// A plan with its code, channel, and transmitted codeword resolved.
pub struct Harness {
    pub graph: TannerGraph,
    pub trellis: TrellisSequence,
    pub codeword: Vec<u8>,
    pub plan: TrialPlan,
    configs: Vec<DecoderConfig>,
}

pub struct PointResult {
    pub rows: Vec<WerRow>,
    /// Per-variant, per-trial word-error flags in trial order, indexed
    /// `[variant][trial]`. Every variant faces the same noise on a given
    /// trial, so matched-pair statistics can be formed directly from these.
    pub error_flags: Vec<Vec<bool>>,
    pub harness_errors: u64,
}

pub struct SweepResult {
    pub rows: Vec<WerRow>,
    pub csv: String,
    pub harness_errors: u64,
}

impl Harness {
    pub fn from_plan(plan: TrialPlan) -> Result<Self, HarnessError> {
        if plan.decoders.is_empty() {
            return Err(HarnessError::BadPlan("no decoder variants".into()));
        }
        if plan.snr_points_db.iter().any(|s| !s.is_finite()) {
            return Err(HarnessError::BadPlan("non-finite SNR point".into()));
        }
        match plan.trials {
            TrialBudget::Fixed(0) => {
                return Err(HarnessError::BadPlan("fixed trial budget of zero".into()))
            }
            TrialBudget::StopAtErrors { max_trials: 0, .. } => {
                return Err(HarnessError::BadPlan("zero max_trials".into()))
            }
            _ => {}
        }
        let graph = match &plan.code {
            CodeSource::File { path } => load_alist(std::path::Path::new(path))?,
            CodeSource::Generate { n, dv, dc, seed } => {
                let mut rng = ChaCha12Rng::seed_from_u64(*seed);
                generate_regular_code(*n, *dv, *dc, &mut rng)?
            }
        };
        let n = graph.num_vars();
        let trellis = build_trellis(&plan.channel.spec(), n);
        let codeword = match &plan.codewords {
            CodewordPolicy::AllZero => vec![0u8; n],
            CodewordPolicy::FixedWeight { target, tol, seed } => {
                let mut rng = ChaCha12Rng::seed_from_u64(*seed);
                fixed_weight_codeword(&graph, *target, *tol, &mut rng)?
            }
            CodewordPolicy::File { path } => {
                let cw = read_codeword_file(std::path::Path::new(path))?;
                if cw.len() != n {
                    return Err(HarnessError::BadPlan(format!(
                        "codeword length {} != code length {n}",
                        cw.len()
                    )));
                }
                if !syndrome_ok(&graph, &cw) {
                    return Err(HarnessError::BadPlan("codeword fails the syndrome".into()));
                }
                cw
            }
        };
        let configs: Vec<DecoderConfig> = plan.decoders.iter().map(|d| d.config()).collect();
        for cfg in &configs {
            cfg.validate()?;
        }
        Ok(Harness { graph, trellis, codeword, plan, configs })
    }

    /// All trials for one SNR point, one row per decoder variant.
    pub fn run_point(&self, snr_idx: usize, workers: usize) -> Result<PointResult, HarnessError> {
        self.run_point_at(snr_idx, None, workers)
    }

    /// Like [`run_point`](Self::run_point), but `sigma_override`, when given,
    /// is used verbatim instead of being derived from the dB value.
    pub fn run_point_at(
        &self,
        snr_idx: usize,
        sigma_override: Option<f64>,
        workers: usize,
    ) -> Result<PointResult, HarnessError> {
        let snr_db = self.plan.snr_points_db[snr_idx];
        let sigma =
            sigma_override.unwrap_or_else(|| self.trellis.spec().sigma_for_snr_db(snr_db));
        let decode_real = |variant: usize, costs: &BranchMetrics| {
            decode(&self.graph, &self.trellis, costs, &self.configs[variant])
        };
        self.run_point_with(snr_idx, snr_db, sigma, workers, &decode_real)
    }

    /// Worker-pool driver with the decoder call injected; the production
    /// path and the panic-isolation tests share everything else.
    fn run_point_with(
        &self,
        snr_idx: usize,
        snr_db: f64,
        sigma: f64,
        workers: usize,
        decode_fn: &(dyn Fn(usize, &BranchMetrics) -> Result<DecodeReport, DecodeError> + Sync),
    ) -> Result<PointResult, HarnessError> {
        let (cap, stop_errors) = match self.plan.trials {
            TrialBudget::Fixed(t) => (t, None),
            TrialBudget::StopAtErrors { target_errors, max_trials } => {
                (max_trials, Some(target_errors))
            }
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?;

        let mut agg = vec![VariantAgg::default(); self.configs.len()];
        let mut error_flags = vec![Vec::new(); self.configs.len()];
        let mut done = 0u64;
        while done < cap {
            let end = (done + CHUNK).min(cap);
            let chunk: Vec<Vec<TrialOutcome>> = pool.install(|| {
                (done..end)
                    .into_par_iter()
                    .map(|trial| self.run_trial(snr_idx, trial, sigma, decode_fn))
                    .collect()
            });
            for trial in &chunk {
                for (v, outcome) in trial.iter().enumerate() {
                    agg[v].absorb(outcome);
                    error_flags[v].push(outcome.word_error);
                }
            }
            done = end;
            if let Some(target) = stop_errors {
                if agg.iter().all(|a| a.word_errors >= target) {
                    break;
                }
            }
        }

        let mut rows = Vec::with_capacity(self.configs.len());
        let mut harness_errors = 0;
        for (v, a) in agg.iter().enumerate() {
            let (ci_lo, ci_hi) = wilson_interval(a.word_errors, a.trials);
            let trials_f = (a.trials.max(1)) as f64;
            rows.push(WerRow {
                snr_db,
                sigma,
                trials: a.trials,
                word_errors: a.word_errors,
                detected_errors: a.detected,
                undetected_errors: a.undetected,
                wer: a.word_errors as f64 / trials_f,
                ci_lo,
                ci_hi,
                mean_iters: a.iters as f64 / trials_f,
                decoder_id: self.plan.decoders[v].id.clone(),
                seed: self.plan.master_seed,
                mean_seconds: a.seconds / trials_f,
                harness_errors: a.harness_errors,
            });
            harness_errors += a.harness_errors;
        }
        Ok(PointResult { rows, error_flags, harness_errors })
    }

    fn run_trial(
        &self,
        snr_idx: usize,
        trial: u64,
        sigma: f64,
        decode_fn: &(dyn Fn(usize, &BranchMetrics) -> Result<DecodeReport, DecodeError> + Sync),
    ) -> Vec<TrialOutcome> {
        let mut rng = child_rng(self.plan.master_seed, snr_idx as u64, trial, STREAM_NOISE);
        let costs = channel_simulate(&self.trellis, &self.codeword, sigma, &mut rng)
            .and_then(|y| branch_metrics(&self.trellis, &y, sigma));
        let costs = match costs {
            Ok(c) => c,
            Err(_) => return vec![TrialOutcome::failure(0.0); self.configs.len()],
        };
        (0..self.configs.len())
            .map(|v| {
                let start = Instant::now();
                let result = catch_unwind(AssertUnwindSafe(|| decode_fn(v, &costs)));
                let seconds = start.elapsed().as_secs_f64();
                match result {
                    Ok(Ok(report)) => TrialOutcome::from_report(&report, &self.codeword, seconds),
                    Ok(Err(_)) | Err(_) => TrialOutcome::failure(seconds),
                }
            })
            .collect()
    }

    /// Runs every SNR point in order; rows interleave decoder variants per
    /// point in plan order.
    pub fn sweep(&self, workers: usize) -> Result<SweepResult, HarnessError> {
        let mut rows = Vec::new();
        let mut harness_errors = 0;
        for snr_idx in 0..self.plan.snr_points_db.len() {
            let point = self.run_point(snr_idx, workers)?;
            harness_errors += point.harness_errors;
            rows.extend(point.rows);
        }
        Ok(SweepResult { csv: csv_table(&rows), rows, harness_errors })
    }
}
