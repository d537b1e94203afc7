//! Command-line front end. Every subcommand prints a [`RunReport`] as JSON
//! on stdout and a short human-readable summary on stderr.
//!
//! Exit codes: 0 success, 1 validation/format errors, 2 numerical errors,
//! 3 external-command errors.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::lfid::{lfid_score, quality_gate, rank_features, GateConfig, SelectionSpec};
use crate::metrics::{
    discrete_frechet, frechet_gaussian_distance, inception_score, js_divergence, kl_divergence, mmd,
    wasserstein_1d, Bandwidth, Curve, DiscreteDist, Distribution1d, Estimator, KernelConfig, KernelKind,
    MetricReport, ProbTable,
};
use crate::monitor::{parse_epoch_line, MonitorConfig, MonitorState};
use crate::plot::{csv_twin, emit_plot, PlotLabels};
use crate::report::{GateOutcome, InputRef, RunReport, SummarySnapshot};
use crate::stats::{load_activations, save_activations, summarize, ActivationSet};
use crate::toy::{run_toy_pipeline, sample_toy, AdamConfig, DemoConfig, ToyGenerator};
use crate::tune::{grid_search_parallel, ExternalEvaluator, TuningGrid};

#[derive(Debug, Parser)]
#[command(name = "genmetric", version, about = "Generative-model evaluation: FID, LFID and companion metrics")]
struct Cli {
    /// Omit the timestamp so identical runs produce identical reports.
    #[arg(long, global = true)]
    no_timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mean and covariance of an activation file.
    Summarize { acts: PathBuf },
    /// Fréchet distance between the Gaussian fits of two activation files.
    Fid { real: PathBuf, gen: PathBuf },
    /// Low-dimensional FID with optional top-k variance selection and the quality gate.
    Lfid {
        real: PathBuf,
        gen: PathBuf,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long, default_value_t = GateConfig::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Per-dimension variances and the variance ranking.
    Rank { acts: PathBuf },
    /// Inception Score of a class-probability CSV.
    Is { probs: PathBuf },
    /// Divergences and distances between two inputs.
    Div {
        #[command(subcommand)]
        kind: DivCommand,
    },
    /// Discrete Fréchet distance between two curve CSVs.
    FrechetCurve { a: PathBuf, b: PathBuf },
    /// Early-stopping monitor over `epoch,lfid` lines on stdin, or over generated ACTB files.
    Monitor(MonitorArgs),
    /// Grid search over an external generator command.
    Tune {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long = "cmd")]
        command: String,
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Train the toy Gaussian generator under LFID monitoring.
    DemoToy {
        #[arg(long, env = "GENMETRIC_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        epochs: u64,
        #[arg(long, default_value = "demo-out")]
        out_dir: PathBuf,
    },
    /// Sample the toy generator to an ACTB file (usable as a `tune` command).
    ToySample {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Dimensions that receive variance; the rest are constant.
        #[arg(long)]
        latent_dim: Option<usize>,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mean: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, env = "GENMETRIC_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Re-emit a saved run report.
    Report { file: PathBuf },
}

#[derive(Debug, Subcommand)]
enum DivCommand {
    /// KL(P‖Q) between two probability files.
    Kl {
        p: PathBuf,
        q: PathBuf,
        #[arg(long)]
        smoothing: Option<f64>,
    },
    /// Jensen–Shannon divergence between two probability files.
    Js { p: PathBuf, q: PathBuf },
    /// 1-D Wasserstein distance; lines are `value` or `location,weight`.
    W { x: PathBuf, y: PathBuf },
    /// Squared MMD between two activation files.
    Mmd {
        x: PathBuf,
        y: PathBuf,
        /// Positive number, or `median` for the pooled median heuristic.
        #[arg(long, default_value = "median")]
        bandwidth: String,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Biased)]
        estimator: EstimatorArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Biased,
    Unbiased,
}

#[derive(Debug, Args)]
struct MonitorArgs {
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    patience: u32,
    #[arg(long, default_value_t = 2)]
    min_epochs: u64,
    #[arg(long, default_value_t = GateConfig::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Real activations; with generated files given, LFID is computed per epoch.
    #[arg(long)]
    real: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Write the LFID curve as SVG (plus a CSV twin).
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Generated activation files, one per epoch starting at 1.
    gen: Vec<PathBuf>,
}

struct Io<'a> {
    stdin: &'a mut dyn BufRead,
    stderr: &'a mut dyn Write,
}

/// Parses `argv` (including the program name), runs the command, and
/// returns the process exit code.
pub fn run<I, T>(argv: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    1
                }
            };
        }
    };
    let mut io = Io { stdin, stderr };
    match dispatch(&cli, &mut io) {
        Ok(report) => {
            let _ = writeln!(stdout, "{}", report.to_json());
            0
        }
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn selection(top_k: Option<usize>) -> Result<SelectionSpec> {
    top_k.map_or(Ok(SelectionSpec::All), SelectionSpec::top_k)
}

fn load_input(path: &Path, report: &mut RunReport) -> Result<ActivationSet> {
    report.inputs.push(InputRef::from_file(path)?);
    load_activations(path)
}

fn describe_params(r: &MetricReport) -> String {
    r.params
        .iter()
        .filter_map(|p| p.value.as_f64().map(|v| format!("{}={v:.6}", p.name)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn dispatch(cli: &Cli, io: &mut Io<'_>) -> Result<RunReport> {
    let stamp = !cli.no_timestamp;
    match &cli.command {
        Command::Summarize { acts } => {
            let mut report = RunReport::new("summarize", stamp);
            let set = load_input(acts, &mut report)?;
            let summary = summarize(&set)?;
            let _ = writeln!(
                io.stderr,
                "{} samples x {} dims, trace(cov) = {:.6}",
                summary.n_samples(),
                summary.dim(),
                summary.trace()
            );
            report.summary = Some(SummarySnapshot::from(&summary));
            Ok(report)
        }
        Command::Fid { real, gen } => {
            let mut report = RunReport::new("fid", stamp);
            let real = load_input(real, &mut report)?;
            let gen = load_input(gen, &mut report)?;
            let r = frechet_gaussian_distance(&summarize(&real)?, &summarize(&gen)?)?;
            let _ = writeln!(io.stderr, "fid = {:.6} ({})", r.value, describe_params(&r));
            report.reports.push(r);
            Ok(report)
        }
        Command::Lfid { real, gen, top_k, threshold } => {
            let mut report = RunReport::new("lfid", stamp);
            let gate = GateConfig::new(*threshold)?;
            let real = load_input(real, &mut report)?;
            let gen = load_input(gen, &mut report)?;
            let r = lfid_score(&real, &gen, selection(*top_k)?)?;
            let decision = quality_gate(r.value, &gate)?;
            let _ = writeln!(
                io.stderr,
                "lfid = {:.6} ({}); gate T = {} -> {decision:?}",
                r.value,
                describe_params(&r),
                gate.threshold_t
            );
            report.gate = Some(GateOutcome {
                threshold: gate.threshold_t,
                value: r.value,
                decision,
            });
            report.reports.push(r);
            Ok(report)
        }
        Command::Rank { acts } => {
            let mut report = RunReport::new("rank", stamp);
            let set = load_input(acts, &mut report)?;
            let ranking = rank_features(&set)?;
            let head: Vec<String> = ranking
                .order
                .iter()
                .take(10)
                .map(|&i| format!("{i}:{:.4}", ranking.variances[i]))
                .collect();
            let _ = writeln!(io.stderr, "top dimensions by variance: {}", head.join(" "));
            report.ranking = Some((&ranking).into());
            Ok(report)
        }
        Command::Is { probs } => {
            let mut report = RunReport::new("is", stamp);
            report.inputs.push(InputRef::from_file(probs)?);
            let table = read_prob_table(probs)?;
            let r = inception_score(&table)?;
            let _ = writeln!(io.stderr, "inception score = {:.6}", r.value);
            report.reports.push(r);
            Ok(report)
        }
        Command::Div { kind } => run_div(kind, stamp, io),
        Command::FrechetCurve { a, b } => {
            let mut report = RunReport::new("frechet-curve", stamp);
            report.inputs.push(InputRef::from_file(a)?);
            report.inputs.push(InputRef::from_file(b)?);
            let r = discrete_frechet(&read_curve(a)?, &read_curve(b)?)?;
            let _ = writeln!(io.stderr, "discrete frechet = {:.6}", r.value);
            report.reports.push(r);
            Ok(report)
        }
        Command::Monitor(args) => run_monitor(args, stamp, io),
        Command::Tune { grid, command, real, top_k, jobs } => {
            let mut report = RunReport::new("tune", stamp);
            report.inputs.push(InputRef::from_file(grid)?);
            let text = fs::read_to_string(grid).map_err(|e| Error::io(grid, e))?;
            let grid = TuningGrid::parse(&text)?;
            let real = load_input(real, &mut report)?;
            let evaluator = ExternalEvaluator::new(command.clone(), real, selection(*top_k)?)?;
            let result = grid_search_parallel(&grid, *jobs, |p| evaluator.evaluate(p))?;
            for w in &result.warnings {
                let _ = writeln!(io.stderr, "warning: {w}");
            }
            let _ = writeln!(
                io.stderr,
                "best lfid = {:.6} at {:?} ({} of {} points evaluated)",
                result.best_lfid,
                result.best_params,
                result.trace.len(),
                grid.size()
            );
            report.tuning = Some(result);
            Ok(report)
        }
        Command::DemoToy { seed, epochs, out_dir } => run_demo(*seed, *epochs, out_dir, stamp, io),
        Command::ToySample { out, dim, latent_dim, n, mean, sigma, seed } => {
            let latent = latent_dim.unwrap_or(*dim).min(*dim);
            if sigma.is_nan() || *sigma <= 0.0 {
                return Err(Error::Validation(format!("sigma must be positive, got {sigma}")));
            }
            let log_sigma = (0..*dim)
                .map(|j| if j < latent { sigma.ln() } else { -1e3 })
                .collect();
            let gen = ToyGenerator::new(vec![*mean; *dim], log_sigma, *seed)?;
            let set = sample_toy(&gen, *n, *seed)?;
            save_activations(&set, out)?;
            let _ = writeln!(io.stderr, "wrote {n} x {dim} samples to {}", out.display());
            let mut report = RunReport::new("toy-sample", stamp);
            report.artifacts.push(out.display().to_string());
            Ok(report)
        }
        Command::Report { file } => {
            let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
            let report = RunReport::from_json(&text)?;
            let _ = writeln!(io.stderr, "{} report ({} metric reports)", report.subcommand, report.reports.len());
            for r in &report.reports {
                let _ = writeln!(io.stderr, "  {} = {:.6} {}", r.metric_name, r.value, describe_params(r));
            }
            if let Some(g) = &report.gate {
                let _ = writeln!(io.stderr, "  gate T = {} -> {:?}", g.threshold, g.decision);
            }
            if let Some(m) = &report.monitor {
                let _ = writeln!(io.stderr, "  monitor stopped = {} at {:?}", m.stopped, m.stop_epoch);
            }
            Ok(report)
        }
    }
}

fn run_div(kind: &DivCommand, stamp: bool, io: &mut Io<'_>) -> Result<RunReport> {
    let mut report = RunReport::new("div", stamp);
    let r = match kind {
        DivCommand::Kl { p, q, smoothing } => {
            report.inputs.extend([InputRef::from_file(p)?, InputRef::from_file(q)?]);
            kl_divergence(&read_dist(p)?, &read_dist(q)?, *smoothing)?
        }
        DivCommand::Js { p, q } => {
            report.inputs.extend([InputRef::from_file(p)?, InputRef::from_file(q)?]);
            js_divergence(&read_dist(p)?, &read_dist(q)?)?
        }
        DivCommand::W { x, y } => {
            report.inputs.extend([InputRef::from_file(x)?, InputRef::from_file(y)?]);
            wasserstein_1d(&read_1d(x)?, &read_1d(y)?)?
        }
        DivCommand::Mmd { x, y, bandwidth, estimator } => {
            let xs = load_input(x, &mut report)?;
            let ys = load_input(y, &mut report)?;
            let bandwidth = if bandwidth == "median" {
                Bandwidth::MedianHeuristic
            } else {
                Bandwidth::Fixed(
                    bandwidth
                        .parse()
                        .map_err(|_| Error::Validation(format!("bad bandwidth {bandwidth:?}")))?,
                )
            };
            let kernel = KernelConfig { kind: KernelKind::Rbf, bandwidth };
            let estimator = match estimator {
                EstimatorArg::Biased => Estimator::Biased,
                EstimatorArg::Unbiased => Estimator::Unbiased,
            };
            mmd(&xs, &ys, &kernel, estimator)?
        }
    };
    let _ = writeln!(io.stderr, "{} = {:.6} {}", r.metric_name, r.value, describe_params(&r));
    report.reports.push(r);
    Ok(report)
}

fn run_monitor(args: &MonitorArgs, stamp: bool, io: &mut Io<'_>) -> Result<RunReport> {
    let gate = GateConfig::new(args.threshold)?;
    let config = MonitorConfig::new(args.epsilon, args.patience, args.min_epochs, gate)?;
    let mut report = RunReport::new("monitor", stamp);
    let mut state = MonitorState::new();

    if args.gen.is_empty() {
        if args.real.is_some() {
            return Err(Error::Validation("--real given without generated activation files".into()));
        }
        let mut line = String::new();
        let mut lineno = 0;
        loop {
            line.clear();
            let read = io.stdin.read_line(&mut line).map_err(|e| Error::io("<stdin>", e))?;
            if read == 0 || state.stopped {
                break;
            }
            lineno += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (epoch, value) = parse_epoch_line(trimmed)
                .map_err(|e| Error::Format(format!("stdin line {lineno}: {e}")))?;
            state = state.update(&config, epoch, value)?;
        }
    } else {
        let real_path = args
            .real
            .as_ref()
            .ok_or_else(|| Error::Validation("generated files need --real".into()))?;
        let real = load_input(real_path, &mut report)?;
        let spec = selection(args.top_k)?;
        for (i, path) in args.gen.iter().enumerate() {
            let gen = load_input(path, &mut report)?;
            let epoch = i as u64 + 1;
            let r = lfid_score(&real, &gen, spec)?.with_param("epoch", epoch as usize);
            state = state.update(&config, epoch, r.value)?;
            report.reports.push(r);
            if state.stopped {
                break;
            }
        }
    }

    if let Some((epoch, value)) = state.last() {
        let decision = quality_gate(value, &gate)?;
        let _ = writeln!(
            io.stderr,
            "{} epochs; last lfid {value:.6} at epoch {epoch}; gate -> {decision:?}; stopped = {}{}",
            state.history.len(),
            state.stopped,
            state.stop_epoch.map(|e| format!(" at epoch {e}")).unwrap_or_default()
        );
        report.gate = Some(GateOutcome {
            threshold: gate.threshold_t,
            value,
            decision,
        });
    } else {
        let _ = writeln!(io.stderr, "no LFID values received");
    }
    if let Some(plot) = &args.plot {
        let series: Vec<(f64, f64)> = state.history.iter().map(|&(e, v)| (e as f64, v)).collect();
        emit_plot(&series, plot, &PlotLabels::default())?;
        report.artifacts.push(plot.display().to_string());
        report.artifacts.push(csv_twin(plot).display().to_string());
    }
    report.monitor = Some(state);
    Ok(report)
}

fn run_demo(seed: u64, epochs: u64, out_dir: &Path, stamp: bool, io: &mut Io<'_>) -> Result<RunReport> {
    if epochs == 0 {
        return Err(Error::Validation("epochs must be at least 1".into()));
    }
    let cfg = DemoConfig {
        seed,
        max_epochs: epochs,
        ..DemoConfig::default()
    };
    let out = run_toy_pipeline(&cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let real_path = out_dir.join("real.actb");
    let gen_path = out_dir.join("generated.actb");
    let svg_path = out_dir.join("lfid.svg");
    save_activations(&out.real, &real_path)?;
    save_activations(&out.last_sample, &gen_path)?;
    let series: Vec<(f64, f64)> = out.curve.iter().map(|&(e, v)| (e as f64, v)).collect();
    emit_plot(
        &series,
        &svg_path,
        &PlotLabels {
            title: "Toy generator LFID".into(),
            ..PlotLabels::default()
        },
    )?;

    let mut report = RunReport::new("demo-toy", stamp);
    let adam: &AdamConfig = &cfg.adam;
    for &(epoch, value) in &out.curve {
        report.reports.push(
            MetricReport {
                metric_name: "lfid".into(),
                value,
                params: Vec::new(),
                warnings: Vec::new(),
                inputs_digest: String::new(),
            }
            .with_param("epoch", epoch as usize),
        );
    }
    if let Some(last) = report.reports.last_mut() {
        *last = last
            .clone()
            .with_param("initial_lfid", out.initial_lfid)
            .with_param("seed", seed as usize)
            .with_param("steps_per_epoch", cfg.steps_per_epoch)
            .with_param("alpha", adam.alpha)
            .with_param("epsilon", cfg.monitor.epsilon)
            .with_param("patience", cfg.monitor.patience as usize);
    }
    report.gate = Some(GateOutcome {
        threshold: cfg.monitor.gate.threshold_t,
        value: out.final_lfid,
        decision: out.final_gate,
    });
    report.monitor = Some(out.monitor.clone());
    report.artifacts = [&real_path, &gen_path, &svg_path, &csv_twin(&svg_path)]
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    let report_path = out_dir.join("report.json");
    report.artifacts.push(report_path.display().to_string());
    fs::write(&report_path, report.to_json()).map_err(|e| Error::io(&report_path, e))?;

    let _ = writeln!(
        io.stderr,
        "lfid {:.4} -> {:.4} over {} epochs ({:?} -> {:?}); early stop: {}",
        out.initial_lfid,
        out.final_lfid,
        out.curve.len() - 1,
        out.initial_gate,
        out.final_gate,
        out.monitor
            .stop_epoch
            .map(|e| format!("epoch {e}"))
            .unwrap_or_else(|| "not triggered".into())
    );
    Ok(report)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_num(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("{}:{}: bad number {:?}", path.display(), line, s.trim())))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Probabilities separated by commas and/or newlines.
fn read_dist(path: &Path) -> Result<DiscreteDist> {
    let text = read_text(path)?;
    let mut probs = Vec::new();
    for (lineno, line) in data_lines(&text) {
        for field in line.split(',').filter(|f| !f.trim().is_empty()) {
            probs.push(parse_num(field, path, lineno)?);
        }
    }
    DiscreteDist::new(probs)
}

/// One sample per line, or `location,weight` per line.
fn read_1d(path: &Path) -> Result<Distribution1d> {
    let text = read_text(path)?;
    let mut samples = Vec::new();
    let mut weighted = Vec::new();
    for (lineno, line) in data_lines(&text) {
        let fields: Vec<&str> = line.split(',').collect();
        match fields.as_slice() {
            [v] => samples.push(parse_num(v, path, lineno)?),
            [loc, w] => weighted.push((parse_num(loc, path, lineno)?, parse_num(w, path, lineno)?)),
            _ => {
                return Err(Error::Format(format!(
                    "{}:{lineno}: expected `value` or `location,weight`",
                    path.display()
                )))
            }
        }
    }
    match (samples.is_empty(), weighted.is_empty()) {
        (false, true) => Distribution1d::from_samples(&samples),
        (true, false) => {
            let (locs, ws): (Vec<f64>, Vec<f64>) = weighted.into_iter().unzip();
            Distribution1d::weighted(&locs, &DiscreteDist::new(ws)?)
        }
        (true, true) => Err(Error::Validation(format!("{} holds no samples", path.display()))),
        (false, false) => Err(Error::Format(format!(
            "{} mixes plain samples and weighted atoms",
            path.display()
        ))),
    }
}

fn read_rows(path: &Path, allow_header: bool) -> Result<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (idx, (lineno, line)) in data_lines(&text).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if idx == 0 && allow_header && fields[0].trim().parse::<f64>().is_err() {
            continue;
        }
        rows.push(
            fields
                .iter()
                .map(|f| parse_num(f, path, lineno))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(rows)
}

/// Rows of class probabilities; an optional non-numeric header is skipped.
fn read_prob_table(path: &Path) -> Result<ProbTable> {
    let rows = read_rows(path, true)?;
    if rows.is_empty() {
        return Err(Error::Validation(format!("{} has no probability rows", path.display())));
    }
    ProbTable::from_rows(&rows)
}

/// One point per line, comma-separated coordinates, no header.
fn read_curve(path: &Path) -> Result<Curve> {
    Curve::new(read_rows(path, false)?)
}
