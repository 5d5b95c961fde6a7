//! The `pqscope` command line.
//!
//! Exit codes: 0 success, 2 unreadable or malformed capture (`analyze`),
//! 64 usage error, 65 data error, 1 anything else.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use pqscope_core::analyze::CaptureReport;
use pqscope_core::{analyze_capture, load_builtin, EvalOptions};
use pqscope_ml::{
    chi2_scores, evaluate, fit_forest, fit_logreg, load_csv, load_model, predict, save_model, select_top_k, split,
    synth, write_csv, ForestParams, LogRegParams, MlError, FEATURE_NAMES, NUM_FEATURES,
};
use pqscope_prober::{
    parse_domain_list, probe, scan, split_target, ProbeConfig, ScanConfig, ShareSource, DEFAULT_OFFER,
};
use pqscope_service::ServiceConfig;
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

#[derive(Debug, Parser)]
#[command(name = "pqscope", version, about = "Detect post-quantum key exchange in traffic and side-channel data")]
pub struct Cli {
    /// key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the key exchange of every handshake in a pcap/pcapng file.
    Analyze(AnalyzeArgs),
    /// Probe one TLS server for post-quantum group support.
    Probe(ProbeArgs),
    /// Probe a list of domains and write JSON Lines results.
    Scan(ScanArgs),
    /// Train a classifier on a labeled feature CSV.
    MlTrain(TrainArgs),
    /// Run a saved model over a feature CSV.
    MlEval(EvalArgs),
    /// Rank features by chi-square score.
    MlSelect(SelectArgs),
    /// Generate a synthetic feature CSV.
    Synth(SynthArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct EvalFlags {
    /// Byte slack when matching share sizes.
    #[arg(long, default_value_t = 0)]
    pub tolerance: usize,
    /// Resolve mixed candidate sets toward post-quantum.
    #[arg(long)]
    pub prefer_pq: bool,
    /// Classify SSH by share sizes only.
    #[arg(long)]
    pub ssh_size_only: bool,
}

impl EvalFlags {
    fn options(&self) -> EvalOptions {
        EvalOptions {
            tolerance: self.tolerance,
            prefer_pq: self.prefer_pq,
            ssh_size_only: self.ssh_size_only,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[command(flatten)]
    pub eval: EvalFlags,
    #[arg(long, conflicts_with = "table")]
    pub json: bool,
    /// Human-readable table (the default).
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShareMode {
    Hrr,
    Blob,
}

#[derive(Debug, Args)]
pub struct ProbeFlags {
    /// Groups to offer, comma separated (hex with 0x or decimal).
    #[arg(long, value_delimiter = ',', value_parser = parse_group)]
    pub groups: Vec<u16>,
    #[arg(long, value_enum, default_value_t = ShareMode::Hrr)]
    pub mode: ShareMode,
    /// Key shares for blob mode: one `<group> <hex bytes>` per line.
    #[arg(long, value_name = "FILE")]
    pub blob_file: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    pub timeout_ms: u64,
    #[command(flatten)]
    pub eval: EvalFlags,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Host name or address, optionally `host:port`.
    #[arg(long)]
    pub host: String,
    #[arg(long, default_value_t = 443)]
    pub port: u16,
    #[command(flatten)]
    pub probe: ProbeFlags,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Newline-delimited domain list.
    #[arg(long, required_unless_present = "tranco", conflicts_with = "tranco")]
    pub domains: Option<PathBuf>,
    /// Tranco CSV (`rank,domain`).
    #[arg(long)]
    pub tranco: Option<PathBuf>,
    /// JSON Lines output, one result per domain.
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the summary JSON; stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub concurrency: u64,
    /// Maximum probe starts per second.
    #[arg(long)]
    pub rate_limit: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub retries: usize,
    #[arg(long, default_value_t = 443)]
    pub port: u16,
    #[command(flatten)]
    pub probe: ProbeFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKindArg {
    Logreg,
    Forest,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelKindArg::Forest)]
    pub model_kind: ModelKindArg,
    /// Number of chi-square-selected features.
    #[arg(long, default_value_t = NUM_FEATURES as u64, value_parser = clap::value_parser!(u64).range(1..=NUM_FEATURES as u64))]
    pub k: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of rows used for training; the rest is the test split.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=NUM_FEATURES as u64))]
    pub k: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Built-in parameter set.
    #[arg(long, required_unless_present = "spec", conflicts_with = "spec")]
    pub preset: Option<String>,
    /// JSON map of class -> feature -> [mean, std].
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PQSCOPE_BIND", default_value = pqscope_service::DEFAULT_BIND)]
    pub bind: std::net::SocketAddr,
    #[arg(long, env = "PQSCOPE_KEX_MODEL")]
    pub kex_model: Option<PathBuf>,
    #[arg(long, env = "PQSCOPE_SIG_MODEL")]
    pub sig_model: Option<PathBuf>,
    #[arg(long, default_value_t = pqscope_service::DEFAULT_MAX_UPLOAD)]
    pub max_upload_bytes: usize,
    #[arg(long, default_value_t = 0)]
    pub tolerance: usize,
    #[arg(long)]
    pub prefer_pq: bool,
}

fn parse_group(s: &str) -> Result<u16, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u16::from_str_radix(h, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| format!("invalid group codepoint {s:?}"))
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(code: i32, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

type CliResult = Result<(), Failure>;

fn ml_failure(e: MlError) -> Failure {
    let code = match e {
        MlError::InvalidK { .. } => EXIT_USAGE,
        MlError::Io(_) => EXIT_FAILURE,
        _ => EXIT_DATA,
    };
    Failure::new(code, e)
}

fn read_file(path: &Path, code: i32) -> Result<Vec<u8>, Failure> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display())).map_err(|e| Failure::new(code, e))
}

fn write_file(path: &Path, data: &[u8]) -> CliResult {
    fs::write(path, data)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(|e| Failure::new(EXIT_FAILURE, e))
}

fn emit(out: &mut dyn Write, value: &impl serde::Serialize) -> CliResult {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    writeln!(out).map_err(|e| Failure::new(EXIT_FAILURE, e))
}

fn io(e: std::io::Error) -> Failure {
    Failure::new(EXIT_FAILURE, e)
}

pub fn render_table(report: &CaptureReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{:<24} {:<24} {:<12} {:<13} {:<40} NOTES", "CLIENT", "SERVER", "PROTOCOL", "CLASS", "CANDIDATES")?;
    for f in &report.flows {
        let cands: Vec<&str> = f.candidates.iter().map(|c| c.id.as_str()).collect();
        writeln!(
            out,
            "{:<24} {:<24} {:<12} {:<13} {:<40} {}",
            f.src,
            f.dst,
            f.protocol.as_str(),
            f.classification.as_str(),
            if cands.is_empty() { "-".to_owned() } else { cands.join(",") },
            f.notes.join("; ")
        )?;
    }
    let s = &report.summary;
    writeln!(
        out,
        "\n{} flows: {} classical, {} post_quantum, {} hybrid, {} unknown",
        s.total, s.classical, s.post_quantum, s.hybrid, s.unknown
    )?;
    for ip in &report.pq_ips {
        writeln!(out, "pq endpoint {} ({})", ip.ip, ip.candidates.join(","))?;
    }
    for n in &report.notes {
        writeln!(out, "note: {n}")?;
    }
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> CliResult {
    let data = read_file(&a.input, EXIT_INPUT)?;
    let report = analyze_capture(&data, &load_builtin(), &a.eval.options())
        .with_context(|| format!("cannot analyze {}", a.input.display()))
        .map_err(|e| Failure::new(EXIT_INPUT, e))?;
    if a.json {
        emit(out, &report)
    } else {
        render_table(&report, out).map_err(io)
    }
}

fn read_blobs(path: &Path) -> Result<BTreeMap<u16, Vec<u8>>, Failure> {
    let text = String::from_utf8(read_file(path, EXIT_DATA)?).map_err(|e| Failure::new(EXIT_DATA, e))?;
    let mut blobs = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: String| Failure::new(EXIT_DATA, anyhow!("{}:{}: {m}", path.display(), n + 1));
        let (g, h) = line.split_once(char::is_whitespace).ok_or_else(|| bad("expected `<group> <hex>`".into()))?;
        let group = parse_group(g).map_err(bad)?;
        let bytes = hex::decode(h.trim()).map_err(|e| bad(e.to_string()))?;
        blobs.insert(group, bytes);
    }
    Ok(blobs)
}

fn probe_config(p: &ProbeFlags) -> Result<ProbeConfig, Failure> {
    let source = match p.mode {
        ShareMode::Hrr => ShareSource::Hrr,
        ShareMode::Blob => {
            let path = p
                .blob_file
                .as_ref()
                .ok_or_else(|| Failure::new(EXIT_USAGE, anyhow!("--mode blob requires --blob-file")))?;
            ShareSource::Blob(read_blobs(path)?)
        }
    };
    let offer = if p.groups.is_empty() {
        DEFAULT_OFFER.to_vec()
    } else {
        p.groups.clone()
    };
    if let ShareSource::Blob(b) = &source {
        if let Some(g) = offer.iter().find(|g| !b.contains_key(g)) {
            return Err(Failure::new(EXIT_DATA, anyhow!("no key share bytes for group 0x{g:04x}")));
        }
    }
    Ok(ProbeConfig {
        offer,
        source,
        timeout: Duration::from_millis(p.timeout_ms),
        eval: p.eval.options(),
    })
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(io)
}

fn cmd_probe(a: &ProbeArgs, out: &mut dyn Write) -> CliResult {
    let cfg = probe_config(&a.probe)?;
    let (host, port) = split_target(&a.host, a.port);
    let profiles = load_builtin();
    let result = runtime()?.block_on(probe(&host, port, &cfg, &profiles));
    emit(out, &result)
}

fn cmd_scan(a: &ScanArgs, out: &mut dyn Write) -> CliResult {
    let (path, tranco) = match (&a.domains, &a.tranco) {
        (Some(p), _) => (p, false),
        (None, Some(p)) => (p, true),
        (None, None) => return Err(Failure::new(EXIT_USAGE, anyhow!("--domains or --tranco is required"))),
    };
    let text = String::from_utf8(read_file(path, EXIT_DATA)?).map_err(|e| Failure::new(EXIT_DATA, e))?;
    let targets = parse_domain_list(&text, tranco);
    let cfg = ScanConfig {
        probe: probe_config(&a.probe)?,
        port: a.port,
        concurrency: a.concurrency as usize,
        rate_limit: a.rate_limit,
        retries: a.retries,
    };
    let sink = fs::File::create(&a.out)
        .with_context(|| format!("cannot create {}", a.out.display()))
        .map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    let (_, summary) = runtime()?
        .block_on(scan(&targets, &cfg, Arc::new(load_builtin()), std::io::BufWriter::new(sink)))
        .map_err(io)?;
    match &a.summary {
        Some(p) => write_file(p, format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()).as_bytes()),
        None => emit(out, &summary),
    }
}

fn load_dataset(path: &Path) -> Result<pqscope_ml::schema::LoadedCsv, Failure> {
    let bytes = read_file(path, EXIT_DATA)?;
    load_csv(&bytes[..]).map_err(ml_failure)
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> CliResult {
    let loaded = load_dataset(&a.data)?;
    if !loaded.labeled {
        return Err(Failure::new(EXIT_DATA, anyhow!("{} has no label column", a.data.display())));
    }
    if !(a.train_fraction > 0.0 && a.train_fraction < 1.0) {
        return Err(Failure::new(EXIT_USAGE, anyhow!("--train-fraction must be in (0, 1)")));
    }
    let parts = split(&loaded.dataset, a.train_fraction, a.seed).map_err(ml_failure)?;
    let scores = chi2_scores(&parts.train).map_err(ml_failure)?;
    let selector = select_top_k(&scores, a.k as usize).map_err(ml_failure)?;
    let model = match a.model_kind {
        ModelKindArg::Logreg => fit_logreg(&parts.train, &selector, &LogRegParams::default()),
        ModelKindArg::Forest => {
            let params = ForestParams {
                n_trees: a.trees,
                max_depth: a.max_depth,
                ..ForestParams::with_seed(a.seed)
            };
            fit_forest(&parts.train, &selector, &params)
        }
    }
    .map_err(ml_failure)?;
    let metrics = if parts.test.is_empty() {
        None
    } else {
        Some(evaluate(&model, &parts.test).map_err(ml_failure)?)
    };
    write_file(&a.out, save_model(&model).as_bytes())?;
    let mut warnings = loaded.warnings;
    warnings.extend(parts.warnings);
    emit(
        out,
        &json!({
            "model": a.out,
            "selected_features": selector.names(),
            "train_rows": parts.train.len(),
            "test_rows": parts.test.len(),
            "metrics": metrics,
            "warnings": warnings,
        }),
    )
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CliResult {
    let text = String::from_utf8(read_file(&a.model, EXIT_DATA)?).map_err(|e| Failure::new(EXIT_DATA, e))?;
    let model = load_model(&text).map_err(ml_failure)?;
    let loaded = load_dataset(&a.data)?;
    let labels = predict(&model, &loaded.dataset.rows);
    let predictions: Vec<_> = labels
        .iter()
        .enumerate()
        .map(|(row, label)| json!({ "row": row, "label": label }))
        .collect();
    let metrics = if loaded.labeled {
        Some(evaluate(&model, &loaded.dataset).map_err(ml_failure)?)
    } else {
        None
    };
    emit(
        out,
        &json!({ "metrics": metrics, "predictions": predictions, "warnings": loaded.warnings }),
    )
}

fn cmd_select(a: &SelectArgs, out: &mut dyn Write) -> CliResult {
    let loaded = load_dataset(&a.data)?;
    let scores = chi2_scores(&loaded.dataset).map_err(ml_failure)?;
    let selector = select_top_k(&scores, a.k as usize).map_err(ml_failure)?;
    let all: BTreeMap<&str, f64> = FEATURE_NAMES.iter().copied().zip(scores.iter().copied()).collect();
    emit(
        out,
        &json!({ "selected": selector.names(), "indices": selector.selected, "scores": all }),
    )
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> CliResult {
    let spec = match (&a.preset, &a.spec) {
        (Some(name), _) => synth::presets::by_name(name).ok_or_else(|| {
            Failure::new(
                EXIT_USAGE,
                anyhow!("unknown preset {name:?}; choose one of {}", synth::presets::NAMES.join(", ")),
            )
        })?,
        (None, Some(path)) => {
            let text = String::from_utf8(read_file(path, EXIT_DATA)?).map_err(|e| Failure::new(EXIT_DATA, e))?;
            synth::SynthSpec::from_json(&text).map_err(ml_failure)?
        }
        (None, None) => return Err(Failure::new(EXIT_USAGE, anyhow!("--preset or --spec is required"))),
    };
    let ds = synth::synthesize(&spec, a.n_per_class, a.seed).map_err(ml_failure)?;
    let mut csv = Vec::new();
    write_csv(&ds, &mut csv).map_err(ml_failure)?;
    match &a.out {
        Some(p) => write_file(p, &csv),
        None => out.write_all(&csv).map_err(io),
    }
}

fn cmd_serve(a: &ServeArgs) -> CliResult {
    let config = ServiceConfig {
        bind: a.bind,
        max_upload_bytes: a.max_upload_bytes,
        kex_model_path: a.kex_model.clone(),
        sig_model_path: a.sig_model.clone(),
        tolerance: a.tolerance,
        prefer_pq: a.prefer_pq,
    };
    runtime()?
        .block_on(pqscope_service::serve(&config))
        .map_err(|e| Failure::new(EXIT_FAILURE, e))
}

/// Strip `--config FILE` and append flags from the file that the command
/// line does not already set.
pub fn apply_config(args: Vec<String>) -> Result<Vec<String>, Failure> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().ok_or_else(|| Failure::new(EXIT_USAGE, anyhow!("--config needs a file")))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_owned());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let text = fs::read_to_string(&path)
        .with_context(|| format!("cannot read config {path}"))
        .map_err(|e| Failure::new(EXIT_USAGE, e))?;
    let cmd = Cli::command();
    let Some(sub) = rest
        .iter()
        .skip(1)
        .find(|a| !a.starts_with('-'))
        .and_then(|name| cmd.find_subcommand(name))
    else {
        return Ok(rest);
    };
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| Failure::new(EXIT_USAGE, anyhow!("{path}:{}: {m}", n + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| bad(&format!("unknown key {key:?} for {}", sub.get_name())))?;
        let flag = format!("--{key}");
        if rest.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        if arg.get_action().takes_values() {
            extra.push(format!("{flag}={value}"));
        } else {
            match value {
                "true" => extra.push(flag),
                "false" => {}
                _ => return Err(bad(&format!("{key} expects true or false"))),
            }
        }
    }
    rest.extend(extra);
    Ok(rest)
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(f) => {
            let _ = writeln!(err, "error: {:#}", f.error);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Probe(a) => cmd_probe(a, out),
        Command::Scan(a) => cmd_scan(a, out),
        Command::MlTrain(a) => cmd_train(a, out),
        Command::MlEval(a) => cmd_eval(a, out),
        Command::MlSelect(a) => cmd_select(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {:#}", f.error);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn cli_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn groups_parse() {
        assert_eq!(parse_group("0x11EC"), Ok(0x11EC));
        assert_eq!(parse_group("29"), Ok(29));
        assert!(parse_group("0xZZ").is_err());
    }

    #[test]
    fn config_fills_missing_flags_only() {
        let dir = std::env::temp_dir().join(format!("pqscope-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("c.conf");
        fs::write(&cfg, "# defaults\ntolerance = 3\nprefer_pq = true\njson = false\n").unwrap();
        let got = apply_config(args(&format!("pqscope --config {} analyze --input x --tolerance 1", cfg.display()))).unwrap();
        assert_eq!(got, args("pqscope analyze --input x --tolerance 1 --prefer-pq"));

        fs::write(&cfg, "bogus = 1\n").unwrap();
        let e = apply_config(args(&format!("pqscope analyze --config {}", cfg.display()))).unwrap_err();
        assert_eq!(e.code, EXIT_USAGE);
    }

    #[test]
    fn usage_errors_exit_64() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(args("pqscope ml-select --data x.csv --k 20"), &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run(args("pqscope analyze --input x --bogus"), &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run(args("pqscope"), &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run(args("pqscope --help"), &mut o, &mut e), EXIT_OK);
    }
}
