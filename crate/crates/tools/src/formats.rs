//! JSON-facing data shapes: decode reports, trial plans, run manifests, and
//! the small helpers (hashing, y-files) the CLI needs around them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use jointlp_core::channel::ChannelSpec;
use jointlp_core::decoder::{
    DecodeReport, DecodeStatus, DecoderConfig, GapReport, InnerOrder, Schedule,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("y-file must be a JSON array of numbers or an object with a \"y\" array")]
    YShape,
    #[error("codeword file must be a JSON array of 0/1 integers")]
    CodewordShape,
}

fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path)
        .map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|source| FormatError::Json { path: path.display().to_string(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| FormatError::Json { path: path.display().to_string(), source })?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> Result<String, FormatError> {
    let bytes = fs::read(path)
        .map_err(|source| FormatError::Io { path: path.display().to_string(), source })?;
    Ok(sha256_hex(&bytes))
}

/// Channel selector shared by flags and plan files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    /// Dicode 1-D.
    Dic,
    /// Dicode behind a 1/(1 xor D) precoder.
    Pdic,
    /// Partial response 1+2D+D^2.
    Pr2,
}

impl ChannelKind {
    pub fn spec(self) -> ChannelSpec {
        match self {
            ChannelKind::Dic => ChannelSpec::dicode(),
            ChannelKind::Pdic => ChannelSpec::precoded_dicode(),
            ChannelKind::Pr2 => ChannelSpec::pr2(),
        }
    }
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChannelKind::Dic => "dic",
            ChannelKind::Pdic => "pdic",
            ChannelKind::Pr2 => "pr2",
        })
    }
}

/// Observation file: either a bare JSON array or `{"y": [...]}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum YFile {
    Bare(Vec<f64>),
    Tagged { y: Vec<f64> },
}

pub fn read_y_file(path: &Path) -> Result<Vec<f64>, FormatError> {
    let text = read_text(path)?;
    match serde_json::from_str::<YFile>(&text) {
        Ok(YFile::Bare(y)) | Ok(YFile::Tagged { y }) => Ok(y),
        Err(_) => Err(FormatError::YShape),
    }
}

pub fn read_codeword_file(path: &Path) -> Result<Vec<u8>, FormatError> {
    let text = read_text(path)?;
    let raw: Vec<u8> = serde_json::from_str(&text).map_err(|_| FormatError::CodewordShape)?;
    if raw.iter().any(|&b| b > 1) {
        return Err(FormatError::CodewordShape);
    }
    Ok(raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleDto {
    Flooding,
    Cyclic,
}

impl From<ScheduleDto> for Schedule {
    fn from(s: ScheduleDto) -> Self {
        match s {
            ScheduleDto::Flooding => Schedule::Flooding,
            ScheduleDto::Cyclic => Schedule::Cyclic,
        }
    }
}

/// One decoder configuration inside a plan, labelled for the CSV output.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderVariant {
    pub id: String,
    pub k1: f64,
    pub k2: f64,
    #[serde(default = "default_inner")]
    pub inner_rounds: usize,
    #[serde(default = "default_outer")]
    pub outer_limit: usize,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleDto,
    #[serde(default)]
    pub anchor: Option<usize>,
    #[serde(default = "default_clamp")]
    pub message_clamp: f64,
}

fn default_inner() -> usize {
    1
}
fn default_outer() -> usize {
    100
}
fn default_schedule() -> ScheduleDto {
    ScheduleDto::Flooding
}
fn default_clamp() -> f64 {
    50.0
}

impl DecoderVariant {
    pub fn config(&self) -> DecoderConfig {
        DecoderConfig {
            k1: self.k1,
            k2: self.k2,
            inner_rounds: self.inner_rounds,
            outer_limit: self.outer_limit,
            schedule: self.schedule.into(),
            anchor: self.anchor,
            message_clamp: self.message_clamp,
            tanh_eps: 1e-12,
            inner_order: InnerOrder::CheckFirst,
            stop_on_codeword: true,
            dual_improvement_tol: None,
            compute_gap: false,
            degree_cap: 12,
        }
    }

    /// The turbo-equalization baseline: unit sharpness on both sides, one
    /// inner round per outer pass.
    pub fn te_baseline(outer_limit: usize) -> Self {
        DecoderVariant {
            id: "te".into(),
            k1: 1.0,
            k2: 1.0,
            inner_rounds: 1,
            outer_limit,
            schedule: ScheduleDto::Flooding,
            anchor: None,
            message_clamp: 50.0,
        }
    }
}

/// Where the parity-check matrix comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeSource {
    File { path: String },
    Generate { n: usize, dv: usize, dc: usize, seed: u64 },
}

/// How the transmitted codeword is chosen. The fixed-weight draw carries its
/// own seed, so one codeword is fixed for the whole run while noise varies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodewordPolicy {
    AllZero,
    FixedWeight { target: usize, tol: usize, seed: u64 },
    File { path: String },
}

impl Default for CodewordPolicy {
    fn default() -> Self {
        CodewordPolicy::AllZero
    }
}

/// Trial budget per SNR point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialBudget {
    Fixed(u64),
    StopAtErrors { target_errors: u64, max_trials: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialPlan {
    pub code: CodeSource,
    pub channel: ChannelKind,
    #[serde(default)]
    pub codewords: CodewordPolicy,
    pub snr_points_db: Vec<f64>,
    pub trials: TrialBudget,
    pub decoders: Vec<DecoderVariant>,
    pub master_seed: u64,
}

/// JSON mirror of a decode report; bits travel as a compact 0/1 string.
#[derive(Debug, Serialize, Deserialize)]
pub struct DecodeReportDto {
    pub hard_bits: String,
    pub status: String,
    pub iterations_used: usize,
    pub pseudo_marginals: Vec<f64>,
    pub dual_trace: Vec<f64>,
    pub clamp_flags: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapDto>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GapDto {
    pub primal_cost: f64,
    pub primal_smoothed: f64,
    pub dual_value: f64,
    pub flow_residual: f64,
    pub coupling_residual: f64,
    pub section_residual: f64,
    pub subset_residual: f64,
    pub min_entry: f64,
}

impl From<&GapReport> for GapDto {
    fn from(g: &GapReport) -> Self {
        GapDto {
            primal_cost: g.primal_cost,
            primal_smoothed: g.primal_smoothed,
            dual_value: g.dual_value,
            flow_residual: g.flow_residual,
            coupling_residual: g.coupling_residual,
            section_residual: g.section_residual,
            subset_residual: g.subset_residual,
            min_entry: g.min_entry,
        }
    }
}

impl From<&DecodeReport> for DecodeReportDto {
    fn from(r: &DecodeReport) -> Self {
        DecodeReportDto {
            hard_bits: r.hard_bits.iter().map(|b| char::from(b'0' + b)).collect(),
            status: match r.status {
                DecodeStatus::CodewordFound => "codeword_found".into(),
                DecodeStatus::IterationLimit => "iteration_limit".into(),
            },
            iterations_used: r.iterations_used,
            pseudo_marginals: r.pseudo_marginals.clone(),
            dual_trace: r.dual_trace.clone(),
            clamp_flags: r.clamp_flags.clone(),
            gap: r.gap.as_ref().map(GapDto::from),
        }
    }
}

/// Written on every run, success or failure, so runs are replayable.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub config: serde_json::Value,
    pub input_hashes: BTreeMap<String, String>,
    pub wall_clock_seconds: f64,
    pub exit_status: i32,
}

impl RunManifest {
    pub fn new(command: Vec<String>) -> Self {
        RunManifest {
            tool: "jointlp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            config: serde_json::Value::Null,
            input_hashes: BTreeMap::new(),
            wall_clock_seconds: 0.0,
            exit_status: 0,
        }
    }

    pub fn record_input(&mut self, path: &Path) {
        let hash = hash_file(path).unwrap_or_else(|e| format!("unreadable: {e}"));
        self.input_hashes.insert(path.display().to_string(), hash);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_round_trips_through_json() {
        let plan = TrialPlan {
            code: CodeSource::Generate { n: 105, dv: 3, dc: 5, seed: 7 },
            channel: ChannelKind::Pdic,
            codewords: CodewordPolicy::FixedWeight { target: 52, tol: 5, seed: 9 },
            snr_points_db: vec![3.0, 4.0],
            trials: TrialBudget::Fixed(2000),
            decoders: vec![
                DecoderVariant {
                    id: "jlp".into(),
                    k1: 1000.0,
                    k2: 100.0,
                    inner_rounds: 5,
                    outer_limit: 166,
                    schedule: ScheduleDto::Flooding,
                    anchor: None,
                    message_clamp: 50.0,
                },
                DecoderVariant::te_baseline(500),
            ],
            master_seed: 1234,
        };
        let text = serde_json::to_string_pretty(&plan).unwrap();
        let back: TrialPlan = serde_json::from_str(&text).unwrap();
        assert_eq!(back.decoders.len(), 2);
        assert_eq!(back.decoders[1].id, "te");
        assert!(matches!(back.trials, TrialBudget::Fixed(2000)));
        assert!(matches!(back.codewords, CodewordPolicy::FixedWeight { target: 52, .. }));
    }

    #[test]
    fn plan_defaults_fill_in() {
        let text = r#"{
            "code": {"file": {"path": "code.alist"}},
            "channel": "dic",
            "snr_points_db": [5.0],
            "trials": {"fixed": 10},
            "decoders": [{"id": "d", "k1": 100.0, "k2": 100.0}],
            "master_seed": 1
        }"#;
        let plan: TrialPlan = serde_json::from_str(text).unwrap();
        assert!(matches!(plan.codewords, CodewordPolicy::AllZero));
        assert_eq!(plan.decoders[0].inner_rounds, 1);
        assert_eq!(plan.decoders[0].outer_limit, 100);
        assert!(matches!(plan.decoders[0].schedule, ScheduleDto::Flooding));
    }

    #[test]
    fn y_files_accept_both_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let bare = dir.path().join("bare.json");
        std::fs::write(&bare, "[1.0, -2.0, 0.5]").unwrap();
        assert_eq!(read_y_file(&bare).unwrap(), vec![1.0, -2.0, 0.5]);
        let tagged = dir.path().join("tagged.json");
        std::fs::write(&tagged, r#"{"y": [0.0, 2.0]}"#).unwrap();
        assert_eq!(read_y_file(&tagged).unwrap(), vec![0.0, 2.0]);
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"z": 3}"#).unwrap();
        assert!(matches!(read_y_file(&bad), Err(FormatError::YShape)));
    }

    #[test]
    fn hashes_are_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
