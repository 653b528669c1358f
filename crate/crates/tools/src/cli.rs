//! Command-line surface. Every subcommand writes a run manifest (tool
//! version, argv, resolved configuration, input digests, wall clock, exit
//! status), including failed runs; only argument-parsing errors skip it.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use jointlp_core::channel::{branch_metrics, build_trellis, ChannelSpec};
use jointlp_core::code::generate_regular_code;
use jointlp_core::decoder::decode;

use crate::alist::{load_alist, save_alist};
use crate::checks::{run_battery, BatteryOptions};
use crate::formats::{
    read_json, read_y_file, write_json, ChannelKind, CodeSource, CodewordPolicy, DecodeReportDto,
    DecoderVariant, RunManifest, ScheduleDto, TrialBudget, TrialPlan,
};
use crate::harness::{csv_table, Harness, CSV_HEADER};
use crate::pseudosearch::fig2_search;

#[derive(Parser, Debug)]
#[command(
    name = "jointlp",
    version,
    about = "Joint linear-programming decoding of LDPC codes over finite-state channels"
)]
pub struct Cli {
    /// Where the run manifest is written.
    #[arg(long, global = true, default_value = "run-manifest.json")]
    pub manifest: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a random regular parity-check code and save it in alist form.
    GenCode(GenCodeArgs),
    /// Decode one observation file and print the JSON report.
    Decode(DecodeArgs),
    /// Cross-validate the decoder internals against independent references.
    OracleCheck(OracleCheckArgs),
    /// Monte Carlo word-error run at a single noise level.
    Simulate(SimulateArgs),
    /// Run a multi-point trial plan and stream the CSV table.
    Sweep(SweepArgs),
    /// Search for observations whose relaxation optimum is fractional.
    Fig2Search(Fig2Args),
}

/// Noise level, given either on the dB scale (converted through the
/// channel's average output power) or as a literal standard deviation.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct NoiseArgs {
    /// Signal-to-noise ratio in dB.
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Noise standard deviation, used verbatim (no dB conversion).
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl NoiseArgs {
    /// Resolved `(sigma, snr_db)`; whichever was absent is derived from the
    /// other so both can be echoed in the manifest.
    fn resolve(&self, spec: &ChannelSpec) -> (f64, f64) {
        match (self.sigma, self.snr_db) {
            (Some(s), _) => (s, spec.snr_db_for_sigma(s)),
            (None, Some(db)) => (spec.sigma_for_snr_db(db), db),
            (None, None) => unreachable!("clap enforces the group"),
        }
    }
}

#[derive(Args, Debug)]
pub struct GenCodeArgs {
    /// Block length.
    #[arg(long)]
    pub n: usize,
    /// Variable degree.
    #[arg(long)]
    pub dv: usize,
    /// Check degree.
    #[arg(long)]
    pub dc: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output alist path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DecoderFlags {
    #[arg(long, default_value_t = 1000.0)]
    pub k1: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub k2: f64,
    #[arg(long, value_enum, default_value_t = ScheduleDto::Flooding)]
    pub schedule: ScheduleDto,
    /// Check/bit half-step rounds per outer iteration (flooding only).
    #[arg(long, default_value_t = 1)]
    pub inner_rounds: usize,
    /// Outer iteration (or sweep) limit.
    #[arg(long, default_value_t = 200)]
    pub outer_limit: usize,
    /// Section carrying the path-score normalization; defaults to the last.
    #[arg(long)]
    pub anchor: Option<usize>,
    #[arg(long, default_value_t = 50.0)]
    pub message_clamp: f64,
}

impl DecoderFlags {
    fn variant(&self, id: &str) -> DecoderVariant {
        DecoderVariant {
            id: id.into(),
            k1: self.k1,
            k2: self.k2,
            inner_rounds: self.inner_rounds,
            outer_limit: self.outer_limit,
            schedule: self.schedule,
            anchor: self.anchor,
            message_clamp: self.message_clamp,
        }
    }
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    /// Parity-check code in alist form.
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long, value_enum)]
    pub channel: ChannelKind,
    /// Observation file: a JSON array, or an object with a "y" field.
    #[arg(long)]
    pub y: PathBuf,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub decoder: DecoderFlags,
    /// Attach the primal/dual certificate to the report.
    #[arg(long)]
    pub gap: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleCheckArgs {
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dv: usize,
    #[arg(long, default_value_t = 3)]
    pub dc: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ChannelKind::Dic)]
    pub channel: ChannelKind,
    #[arg(long, default_value_t = 3.0)]
    pub snr_db: f64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Parity-check code in alist form; omit to generate one.
    #[arg(long)]
    pub code: Option<PathBuf>,
    /// Generated-code block length (with --dv/--dc/--code-seed).
    #[arg(long, default_value_t = 24, conflicts_with = "code")]
    pub n: usize,
    #[arg(long, default_value_t = 3, conflicts_with = "code")]
    pub dv: usize,
    #[arg(long, default_value_t = 4, conflicts_with = "code")]
    pub dc: usize,
    #[arg(long, default_value_t = 1, conflicts_with = "code")]
    pub code_seed: u64,
    #[arg(long, value_enum)]
    pub channel: ChannelKind,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Trial budget (exact, unless --target-errors turns it into a cap).
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Stop once every decoder has seen this many word errors.
    #[arg(long)]
    pub target_errors: Option<u64>,
    /// Master seed for the paired noise streams.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub decoder: DecoderFlags,
    /// Also run the unit-sharpness baseline on the same noise.
    #[arg(long)]
    pub baseline: bool,
    /// Outer iteration limit for the baseline.
    #[arg(long, default_value_t = 500)]
    pub baseline_outer: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Trial plan (JSON).
    #[arg(long)]
    pub plan: PathBuf,
    /// CSV output path; rows are flushed after every SNR point.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Args, Debug)]
pub struct Fig2Args {
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let mut manifest = RunManifest::new(std::env::args().collect());
    let outcome = execute(&cli, &mut manifest);
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    let code = match outcome {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    };
    manifest.exit_status = code;
    if let Err(e) = write_json(&cli.manifest, &manifest) {
        eprintln!("error: cannot write run manifest: {e}");
        return 2;
    }
    code
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: &Cli, manifest: &mut RunManifest) -> Result<(), String> {
    match &cli.command {
        Command::GenCode(args) => gen_code(args, manifest),
        Command::Decode(args) => run_decode(args, manifest),
        Command::OracleCheck(args) => oracle_check(args, manifest),
        Command::Simulate(args) => simulate(args, manifest),
        Command::Sweep(args) => sweep(args, manifest),
        Command::Fig2Search(args) => fig2(args, manifest),
    }
}

fn gen_code(args: &GenCodeArgs, manifest: &mut RunManifest) -> Result<(), String> {
    manifest.config = serde_json::json!({
        "n": args.n, "dv": args.dv, "dc": args.dc, "seed": args.seed,
        "out": args.out.display().to_string(),
    });
    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    let graph = generate_regular_code(args.n, args.dv, args.dc, &mut rng).map_err(|e| e.to_string())?;
    save_alist(&args.out, &graph).map_err(|e| e.to_string())?;
    eprintln!(
        "wrote {} ({} variables, {} checks)",
        args.out.display(),
        graph.num_vars(),
        graph.num_checks()
    );
    Ok(())
}

fn run_decode(args: &DecodeArgs, manifest: &mut RunManifest) -> Result<(), String> {
    manifest.record_input(&args.code);
    manifest.record_input(&args.y);
    let graph = load_alist(&args.code).map_err(|e| e.to_string())?;
    let spec = args.channel.spec();
    let (sigma, snr_db) = args.noise.resolve(&spec);
    let variant = args.decoder.variant("cli");
    let mut config = variant.config();
    config.stop_on_codeword = true;
    config.compute_gap = args.gap;
    manifest.config = serde_json::json!({
        "channel": args.channel.to_string(),
        "sigma": sigma,
        "snr_db": snr_db,
        "sigma_given": args.noise.sigma.is_some(),
        "decoder": &variant,
        "gap": args.gap,
    });
    let trellis = build_trellis(&spec, graph.num_vars());
    let y = read_y_file(&args.y).map_err(|e| e.to_string())?;
    if y.len() != graph.num_vars() {
        return Err(format!(
            "observation length {} does not match code length {}",
            y.len(),
            graph.num_vars()
        ));
    }
    let costs = branch_metrics(&trellis, &y, sigma).map_err(|e| e.to_string())?;
    let report = decode(&graph, &trellis, &costs, &config).map_err(|e| e.to_string())?;
    let dto = DecodeReportDto::from(&report);
    let text = serde_json::to_string_pretty(&dto).map_err(|e| e.to_string())?;
    emit(&args.out, &text)?;
    eprintln!(
        "status {} after {} iterations",
        dto.status, report.iterations_used
    );
    Ok(())
}

fn oracle_check(args: &OracleCheckArgs, manifest: &mut RunManifest) -> Result<(), String> {
    let opts = BatteryOptions {
        n: args.n,
        dv: args.dv,
        dc: args.dc,
        seed: args.seed,
        channel: args.channel,
        snr_db: args.snr_db,
    };
    manifest.config = serde_json::json!({
        "n": opts.n, "dv": opts.dv, "dc": opts.dc, "seed": opts.seed,
        "channel": opts.channel.to_string(), "snr_db": opts.snr_db,
    });
    let results = run_battery(&opts).map_err(|e| e.to_string())?;
    let mut failures = 0usize;
    for r in &results {
        println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
        failures += usize::from(!r.pass);
    }
    println!("{} checks, {} failed", results.len(), failures);
    if failures > 0 {
        return Err(format!("{failures} cross-checks failed"));
    }
    Ok(())
}

fn simulate(args: &SimulateArgs, manifest: &mut RunManifest) -> Result<(), String> {
    let code = match &args.code {
        Some(path) => {
            manifest.record_input(path);
            CodeSource::File { path: path.display().to_string() }
        }
        None => CodeSource::Generate { n: args.n, dv: args.dv, dc: args.dc, seed: args.code_seed },
    };
    let spec = args.channel.spec();
    let (sigma, snr_db) = args.noise.resolve(&spec);
    let trials = match args.target_errors {
        Some(target_errors) => TrialBudget::StopAtErrors { target_errors, max_trials: args.trials },
        None => TrialBudget::Fixed(args.trials),
    };
    let mut decoders = vec![args.decoder.variant("jlp")];
    if args.baseline {
        decoders.push(DecoderVariant::te_baseline(args.baseline_outer));
    }
    let plan = TrialPlan {
        code,
        channel: args.channel,
        codewords: CodewordPolicy::AllZero,
        snr_points_db: vec![snr_db],
        trials,
        decoders,
        master_seed: args.seed,
    };
    manifest.config = serde_json::json!({
        "plan": &plan,
        "sigma": sigma,
        "sigma_given": args.noise.sigma.is_some(),
        "workers": args.workers,
    });
    let harness = Harness::from_plan(plan).map_err(|e| e.to_string())?;
    let sigma_override = args.noise.sigma;
    let point = harness.run_point_at(0, sigma_override, args.workers).map_err(|e| e.to_string())?;
    for row in &point.rows {
        eprintln!(
            "{}: {}/{} word errors, wer {:.3e} [{:.3e}, {:.3e}], mean iters {:.1}",
            row.decoder_id, row.word_errors, row.trials, row.wer, row.ci_lo, row.ci_hi,
            row.mean_iters
        );
    }
    if point.harness_errors > 0 {
        eprintln!("warning: {} trials failed inside the decoder", point.harness_errors);
    }
    emit(&args.out, csv_table(&point.rows).trim_end())?;
    Ok(())
}

fn sweep(args: &SweepArgs, manifest: &mut RunManifest) -> Result<(), String> {
    manifest.record_input(&args.plan);
    let plan: TrialPlan = read_json(&args.plan).map_err(|e| e.to_string())?;
    if let CodeSource::File { path } = &plan.code {
        manifest.record_input(std::path::Path::new(path));
    }
    manifest.config = serde_json::json!({
        "plan": &plan,
        "workers": args.workers,
        "out": args.out.display().to_string(),
    });
    let harness = Harness::from_plan(plan).map_err(|e| e.to_string())?;
    let mut file = fs::File::create(&args.out)
        .map_err(|e| format!("{}: {e}", args.out.display()))?;
    writeln!(file, "{CSV_HEADER}").map_err(|e| e.to_string())?;
    let mut harness_errors = 0u64;
    for snr_idx in 0..harness.plan.snr_points_db.len() {
        let point = harness.run_point(snr_idx, args.workers).map_err(|e| e.to_string())?;
        for row in &point.rows {
            writeln!(file, "{}", row.csv_line()).map_err(|e| e.to_string())?;
        }
        file.flush().map_err(|e| e.to_string())?;
        harness_errors += point.harness_errors;
        eprintln!(
            "point {}/{} ({} dB) done",
            snr_idx + 1,
            harness.plan.snr_points_db.len(),
            harness.plan.snr_points_db[snr_idx]
        );
    }
    if harness_errors > 0 {
        eprintln!("warning: {harness_errors} trials failed inside a decoder");
    }
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn fig2(args: &Fig2Args, manifest: &mut RunManifest) -> Result<(), String> {
    manifest.config = serde_json::json!({ "sigma": args.sigma });
    let result = fig2_search(args.sigma).map_err(|e| e.to_string())?;
    eprintln!(
        "fractional optimum at y = {:?}: projection {:?}, lp objective {:.6}, \
         decoder dual gap {:.2e}/bit; target distance {:.3}, target realizable: {}",
        result.y,
        result.projection,
        result.lp_objective,
        result.dual_gap_per_bit,
        result.target_distance,
        result.target_realizable,
    );
    let text = serde_json::to_string_pretty(&result).map_err(|e| e.to_string())?;
    emit(&args.out, &text)?;
    Ok(())
}
