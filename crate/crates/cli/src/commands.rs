use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sls_core::{
    fit_markov, generate_stream, read_trace, scatter_adjusted, write_trace_to, Method, MethodSettings,
    Sampler, SlsError, SplitMix64, StreamOptions, TraceHeader, TraceRecord, Transform, DEMO_CORPUS,
};

use crate::bench::run_bench;
use crate::error::{CliError, CliResult};
use crate::report::{line, text_table, ConfigEcho, RunReport, StepRow, Summary, Timing, TraceInfo};
use crate::settings::ParamArgs;

#[derive(Debug, Parser)]
#[command(name = "sls", version, about = "Entropy-gated spectral logit sculpting harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a character Markov model and record a synthetic logit trace.
    Record(RecordArgs),
    /// Stream a trace through one method and write a run report.
    Replay(ReplayArgs),
    /// Run several methods over the same trace and tabulate their summaries.
    Compare(CompareArgs),
    /// Measure per-step latency of the sculpting step.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RecordArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Use the built-in demo corpus.
    #[arg(long, conflicts_with = "corpus")]
    pub demo: bool,
    /// Training text for the Markov source.
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, default_value_t = 0.5)]
    pub smoothing: f64,
    #[arg(long, default_value_t = 256)]
    pub length: usize,
    #[arg(long, default_value = "sample")]
    pub sampler: Sampler,
    /// Transform applied before sampling while generating.
    #[arg(long, default_value = "identity")]
    pub method: Method,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_name = "PATH")]
    pub trace: PathBuf,
    #[arg(long, default_value = "sls")]
    pub method: Method,
    #[arg(long, default_value = "greedy")]
    pub sampler: Sampler,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_name = "PATH")]
    pub trace: PathBuf,
    /// Methods to compare (repeat the flag or separate with commas).
    #[arg(long = "method", value_delimiter = ',', required = true)]
    pub methods: Vec<Method>,
    #[arg(long, default_value = "greedy")]
    pub sampler: Sampler,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Record(a) => {
            let (header, records) = record(&a)?;
            let bytes = write_trace_to(Vec::new(), &header, &records)?;
            emit(a.common.out.as_deref(), &bytes)
        }
        Command::Replay(a) => {
            let report = replay(&a)?;
            emit(a.common.out.as_deref(), report.to_jsonl().as_bytes())
        }
        Command::Compare(a) => {
            let report = compare(&a)?;
            emit(a.common.out.as_deref(), report.to_jsonl().as_bytes())?;
            let table = report.table();
            if a.common.out.is_some() {
                print!("{table}");
            } else {
                eprint!("{table}");
            }
            Ok(())
        }
        Command::Bench(a) => {
            let settings = a.common.params.resolve()?.settings()?;
            let report = run_bench(&settings.sls, a.steps, a.common.seed)?;
            let text = line("bench", Some(Method::Sls), &report);
            emit(a.common.out.as_deref(), text.as_bytes())
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| CliError::Core(SlsError::Io { path: path.to_path_buf(), source: e })),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Builds the trace described by `args` without writing it.
pub fn record(args: &RecordArgs) -> CliResult<(TraceHeader, Vec<TraceRecord>)> {
    let (text, label) = match (&args.corpus, args.demo) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read corpus {}: {e}", path.display())))?;
            let name = path.file_name().map_or_else(|| "corpus".into(), |n| n.to_string_lossy().into_owned());
            (text, format!("markov-o{}:{name}", args.order))
        }
        (None, true) => (DEMO_CORPUS.to_string(), format!("markov-o{}:demo", args.order)),
        (None, false) => return Err(CliError::Usage("record needs --demo or --corpus <PATH>".into())),
    };
    let resolved = args.common.params.resolve()?;
    let source = fit_markov(&text, args.order, args.smoothing).map_err(|e| CliError::Usage(e.to_string()))?;
    let k = resolved.params.k;
    if k > source.vocab_size() {
        return Err(CliError::Usage(format!(
            "--k {k} exceeds the corpus vocabulary of {} characters",
            source.vocab_size()
        )));
    }
    let opts = StreamOptions {
        length: args.length,
        seed: args.common.seed,
        k,
        sampler: args.sampler,
        method: args.method,
        settings: resolved.settings()?,
    };
    let records = generate_stream(&source, &opts)?;
    let header = TraceHeader::new(source.vocab_size(), k, label, args.common.seed);
    Ok((header, records))
}

/// Resolves settings for a trace. Without an explicit `k` the trace's `k` is used.
fn settings_for(params: &ParamArgs, header: &TraceHeader) -> CliResult<MethodSettings> {
    let mut resolved = params.resolve()?;
    if !resolved.k_explicit {
        resolved.params.k = header.k;
    }
    let settings = resolved.settings()?;
    if settings.sls.k != header.k {
        return Err(SlsError::Validation(format!(
            "config k = {} does not match trace k = {}",
            settings.sls.k, header.k
        ))
        .into());
    }
    Ok(settings)
}

/// Streams records through one method.
pub fn replay_records(
    header: &TraceHeader,
    records: &[TraceRecord],
    method: Method,
    settings: &MethodSettings,
    sampler: Sampler,
    seed: u64,
) -> CliResult<RunReport> {
    let mut transform = Transform::new(method, settings)?;
    let sampler = if transform.forces_greedy() { Sampler::Greedy } else { sampler };
    let mut rng = SplitMix64::new(seed);
    let mut rows = Vec::with_capacity(records.len());
    let mut busy = 0.0;
    for rec in records {
        let slice = rec.to_slice();
        let start = Instant::now();
        let (adjusted, diagnostics) = transform.apply(&slice, settings.sls.epsilon)?;
        busy += start.elapsed().as_secs_f64();
        log::debug!(
            "step {} H={:.4} gated={} H_post={:.4}",
            diagnostics.step,
            diagnostics.entropy_pre,
            diagnostics.gate_fired,
            diagnostics.entropy_post
        );
        let full = scatter_adjusted(&adjusted, header.vocab_size)?;
        let token = sampler.choose(&full, &mut rng);
        rows.push(StepRow { diagnostics, token });
    }
    let diags: Vec<_> = rows.iter().map(|r| r.diagnostics.clone()).collect();
    let summary = Summary::from_steps(&diags);
    log::info!(
        "{method}: {} steps, {} gated",
        summary.steps_total,
        summary.steps_gated
    );
    Ok(RunReport {
        method,
        trace: TraceInfo::new(header, records.len()),
        config_echo: ConfigEcho { sampler, seed, settings: settings.clone() },
        per_step: rows,
        summary,
        timing: Timing {
            wall_time_per_step_us: if records.is_empty() { 0.0 } else { busy * 1e6 / records.len() as f64 },
        },
    })
}

pub fn replay(args: &ReplayArgs) -> CliResult<RunReport> {
    let (header, records) = read_trace(&args.trace)?;
    let settings = settings_for(&args.common.params, &header)?;
    replay_records(&header, &records, args.method, &settings, args.sampler, args.common.seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareEntry {
    pub method: Method,
    #[serde(flatten)]
    pub summary: Summary,
    /// Mean post-transform entropy over the steps on which the sculpting gate fired.
    pub mean_entropy_post_on_sls_gated_steps: Option<f64>,
    #[serde(skip)]
    pub wall_time_per_step_us: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub trace: TraceInfo,
    pub config_echo: ConfigEcho,
    pub sls_gated_steps: usize,
    pub entries: Vec<CompareEntry>,
}

#[derive(Serialize)]
struct CompareHeader<'a> {
    methods: Vec<Method>,
    sls_gated_steps: usize,
    trace: &'a TraceInfo,
    config: &'a ConfigEcho,
}

impl CompareReport {
    pub fn to_jsonl(&self) -> String {
        let header = CompareHeader {
            methods: self.entries.iter().map(|e| e.method).collect(),
            sls_gated_steps: self.sls_gated_steps,
            trace: &self.trace,
            config: &self.config_echo,
        };
        let mut out = line("header", None, &header);
        for e in &self.entries {
            out.push_str(&line("summary", None, e));
        }
        for e in &self.entries {
            let t = Timing { wall_time_per_step_us: e.wall_time_per_step_us };
            out.push_str(&line("timing", Some(e.method), &t));
        }
        out
    }

    pub fn table(&self) -> String {
        let rows: Vec<_> = self
            .entries
            .iter()
            .map(|e| (e.method, &e.summary, e.mean_entropy_post_on_sls_gated_steps, e.wall_time_per_step_us))
            .collect();
        text_table(&rows)
    }
}

pub fn compare_records(
    header: &TraceHeader,
    records: &[TraceRecord],
    methods: &[Method],
    settings: &MethodSettings,
    sampler: Sampler,
    seed: u64,
) -> CliResult<CompareReport> {
    if methods.len() < 2 {
        return Err(CliError::Usage("compare needs at least two methods".into()));
    }
    let reports = methods
        .iter()
        .map(|&m| replay_records(header, records, m, settings, sampler, seed))
        .collect::<CliResult<Vec<_>>>()?;
    let sls_mask: Vec<bool> = match reports.iter().find(|r| r.method == Method::Sls) {
        Some(r) => r.diagnostics().map(|d| d.gate_fired).collect(),
        None => replay_records(header, records, Method::Sls, settings, sampler, seed)?
            .diagnostics()
            .map(|d| d.gate_fired)
            .collect(),
    };
    let entries = reports
        .iter()
        .map(|r| {
            let (sum, n) = r
                .diagnostics()
                .zip(&sls_mask)
                .filter(|(_, &gated)| gated)
                .fold((0.0, 0usize), |(s, n), (d, _)| (s + d.entropy_post, n + 1));
            CompareEntry {
                method: r.method,
                summary: r.summary.clone(),
                mean_entropy_post_on_sls_gated_steps: (n > 0).then(|| sum / n as f64),
                wall_time_per_step_us: r.timing.wall_time_per_step_us,
            }
        })
        .collect();
    Ok(CompareReport {
        trace: TraceInfo::new(header, records.len()),
        config_echo: reports[0].config_echo.clone(),
        sls_gated_steps: sls_mask.iter().filter(|&&g| g).count(),
        entries,
    })
}

pub fn compare(args: &CompareArgs) -> CliResult<CompareReport> {
    let (header, records) = read_trace(&args.trace)?;
    let settings = settings_for(&args.common.params, &header)?;
    compare_records(&header, &records, &args.methods, &settings, args.sampler, args.common.seed)
}
