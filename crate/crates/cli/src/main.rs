use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qsvm_core::experiment::{self, ExperimentConfig, ResolvedConfig, SCHEMA_VERSION};
use qsvm_core::grover::{GroverBackend, GroverConfig};
use qsvm_core::learn::LearnerKind;
use qsvm_core::pattern::{self, format_bits, PatternLedger, TextInstance};
use qsvm_core::{selftest, Error};

const EXIT_OTHER: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_DOMAIN: u8 = 4;

#[derive(Parser)]
#[command(name = "qsvm", version, about = "Grover interval-kernel SVM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded training set with its concept and labels.
    GenData(ConfigArgs),
    /// Train and evaluate the configured learner over every trial.
    Run(ConfigArgs),
    /// Query-cost sweep over `sweep_N` with fitted log-log slopes.
    Sweep(ConfigArgs),
    /// Match a pattern against each text of a file and compare with KMP.
    PatternDemo(PatternArgs),
    /// Run the fast invariant checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    #[value(name = "quantum_kernel")]
    QuantumKernel,
    Preprocessing,
    Classical,
}

impl From<LearnerArg> for LearnerKind {
    fn from(value: LearnerArg) -> Self {
        match value {
            LearnerArg::QuantumKernel => LearnerKind::QuantumKernel,
            LearnerArg::Preprocessing => LearnerKind::Preprocessing,
            LearnerArg::Classical => LearnerKind::Classical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Ideal,
    Faithful,
}

impl From<BackendArg> for GroverBackend {
    fn from(value: BackendArg) -> Self {
        match value {
            BackendArg::Ideal => GroverBackend::Ideal,
            BackendArg::Faithful => GroverBackend::Faithful,
        }
    }
}

impl BackendArg {
    fn key(self) -> &'static str {
        match self {
            BackendArg::Ideal => "ideal",
            BackendArg::Faithful => "faithful",
        }
    }
}

impl LearnerArg {
    fn key(self) -> &'static str {
        LearnerKind::from(self).name()
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSONL report path; a CSV summary is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    learner: Option<LearnerArg>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long)]
    trials: Option<usize>,
    /// Override one config key, e.g. `--set N=256`. Repeatable; flags win.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<(ResolvedConfig, Option<PathBuf>)> {
        let mut overrides = Vec::new();
        for item in &self.overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(seed) = self.seed {
            overrides.push(("seed".into(), seed.to_string()));
        }
        if let Some(trials) = self.trials {
            overrides.push(("trials".into(), trials.to_string()));
        }
        if let Some(l) = self.learner {
            overrides.push(("learner".into(), format!("{:?}", l.key())));
        }
        if let Some(b) = self.backend {
            overrides.push(("backend".into(), format!("{:?}", b.key())));
        }
        let config = ExperimentConfig::load(self.config.as_deref(), &overrides)?;
        let out = self.out.clone().or_else(|| config.output_path.clone());
        Ok((config.resolve()?, out))
    }
}

#[derive(Args)]
struct PatternArgs {
    /// File of newline-separated binary texts.
    text_file: PathBuf,
    /// Binary pattern.
    pattern: String,
    #[arg(long, value_enum, default_value = "faithful")]
    backend: BackendArg,
    /// Seed of the index measurement.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional JSONL report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// The report sink: `out` when given, stdout otherwise.
fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

fn gen_data(args: &ConfigArgs) -> Result<()> {
    let (config, out) = args.load()?;
    let data = experiment::gen_data(&config)?;
    let mut w = sink(out.as_deref())?;
    data.write_jsonl(&mut w)?;
    w.flush()?;
    eprintln!(
        "{} rows, concept s={} N={}",
        data.rows.len(),
        data.concept.s,
        data.concept.domain_size
    );
    Ok(())
}

fn run(args: &ConfigArgs) -> Result<()> {
    let (config, out) = args.load()?;
    let report = experiment::run(&config)?;
    let mut w = sink(out.as_deref())?;
    report.write_jsonl(&mut w)?;
    w.flush()?;
    if let Some(path) = &out {
        let mut w = create(&csv_path(path))?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    let s = &report.summary;
    eprintln!(
        "learner={} N={} M={} m={} R={}: {} completed, {} failed; accuracy {} ± {}; >=0.99 {}; >=0.95 {}",
        config.learner.name(),
        config.domain_size,
        config.width,
        config.m,
        config.shots,
        s.completed,
        s.failed,
        fmt_opt(s.mean_accuracy),
        fmt_opt(s.ci_half_width),
        fmt_opt(s.fraction_at_least_099),
        fmt_opt(s.fraction_at_least_095),
    );
    for t in report.trials.iter().filter(|t| t.error.is_some()) {
        eprintln!("trial {}: {}", t.trial, t.error.as_deref().unwrap_or_default());
    }
    Ok(())
}

fn sweep(args: &ConfigArgs) -> Result<()> {
    let (config, out) = args.load()?;
    let report = experiment::sweep(&config)?;
    let mut w = sink(out.as_deref())?;
    report.write_jsonl(&mut w)?;
    w.flush()?;
    if let Some(path) = &out {
        let mut w = create(&csv_path(path))?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    for f in &report.fits {
        eprintln!(
            "{:<15} slope {:.4} ± {:.4}",
            f.learner.name(),
            f.slope,
            f.slope_std_err
        );
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum DemoLine<'a> {
    Header {
        schema_version: u32,
        kind: &'static str,
        pattern: &'a str,
        backend: GroverBackend,
        seed: u64,
    },
    Match {
        line: usize,
        text: String,
        location: usize,
        measured: usize,
        verified: bool,
        success_probability: f64,
        quantum: PatternLedger,
        kmp: PatternLedger,
    },
}

fn pattern_demo(args: &PatternArgs) -> Result<()> {
    let body = std::fs::read_to_string(&args.text_file)
        .with_context(|| format!("reading {}", args.text_file.display()))?;
    let bits = pattern::parse_bits(&args.pattern).context("pattern")?;
    let pattern = format_bits(&bits);
    let config = GroverConfig {
        backend: args.backend.into(),
        iterations: None,
    };
    let mut lines = vec![DemoLine::Header {
        schema_version: SCHEMA_VERSION,
        kind: "pattern_demo",
        pattern: &pattern,
        backend: config.backend,
        seed: args.seed,
    }];
    for (no, raw) in body.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let line = no + 1;
        let instance = TextInstance::new(pattern::parse_bits(raw)?, bits.clone())
            .with_context(|| format!("line {line}"))?;
        let m = pattern::pattern_match(&instance, &config, args.seed)
            .with_context(|| format!("line {line}"))?;
        let (kmp_at, kmp) = pattern::kmp_search(instance.text(), instance.pattern());
        println!(
            "line {line}: t={} measured={} verified={} p={:.6} steps={} rounds={} | kmp t={} comparisons={}",
            instance.location(),
            m.location,
            m.verified,
            m.success_probability,
            m.ledger.gate_steps,
            m.ledger.amplification_rounds,
            kmp_at.map_or_else(|| "-".into(), |t| t.to_string()),
            kmp.classical_char_comparisons,
        );
        lines.push(DemoLine::Match {
            line,
            text: format_bits(instance.text()),
            location: instance.location(),
            measured: m.location,
            verified: m.verified,
            success_probability: m.success_probability,
            quantum: m.ledger,
            kmp,
        });
    }
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        for l in &lines {
            serde_json::to_writer(&mut w, l)?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn run_selftest() -> Result<bool> {
    let checks = selftest::run_all();
    for c in &checks {
        println!(
            "{} {} ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Config(_)
            | Error::Structural(_)
            | Error::UnsupportedSize(_)
            | Error::InvalidInterval { .. }
            | Error::ContractViolation(_),
        ) => EXIT_INVALID,
        Some(Error::ResourceCap { .. }) => EXIT_RESOURCE,
        Some(
            Error::NoOccurrence
            | Error::MultipleOccurrences(_)
            | Error::DegenerateProblem(_)
            | Error::NotConverged(_),
        ) => EXIT_DOMAIN,
        Some(Error::Io(_)) | None => EXIT_OTHER,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::PatternDemo(a) => pattern_demo(a),
        Command::Selftest => match run_selftest() {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(EXIT_OTHER),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
