use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use molscale_core::chem::canonical_smiles;
use molscale_core::codecs::Representation;
use molscale_core::frontier::{
    fit_rho_powerlaw, frontier, isoflop_curve, isoloss_curve, min_loss_envelope, numeric_frontier, Coverage,
    EnvelopeGrid, FrontierPoint,
};
use molscale_core::metrics::{metrics_csv, sweep_reports, GroupBy, ReferenceSet, SampleLine};
use molscale_core::plot::{num, plot_csv, plot_svg, PlotPoint, PlotSpec, Series};
use molscale_core::report::{
    build_report, frontier_csv, write_files, ReportConfig, DEFAULT_C_MAX, DEFAULT_C_MIN, DEFAULT_LEVELS,
};
use molscale_core::runlog::{load_runs, LoadedRuns};
use molscale_core::scaling::{fit_bivariate, FitConfig, FitReport};
use molscale_core::tokenizer::{build_budget, count_corpus_tokens, sha256_hex, shuffled_order, BudgetSpec, Vocabulary};

const GRID_SIZES: [f64; 8] = [1e6, 4e6, 16e6, 43e6, 85e6, 152e6, 278e6, 650e6];
/// Relative tolerance for `frontier --verify`.
const VERIFY_TOL: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "molscale",
    version,
    about = "Scaling-law workbench for molecular language models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the bivariate law to one representation's runs.
    Fit(FitArgs),
    /// Compute-optimal allocation over a compute range.
    Frontier(FrontierArgs),
    /// Loss along a constant-compute curve.
    Isoflop(IsoflopArgs),
    /// Model sizes and compute that reach a target loss.
    Isoloss(IsolossArgs),
    /// Log-linear fit of the optimal tokens-per-parameter ratio.
    RhoFit(RhoFitArgs),
    /// Minimum loss envelope over all checkpoints.
    Envelope(EnvelopeArgs),
    /// SMILES lines in, representation lines out.
    Encode(CodecArgs),
    /// Representation lines in, canonical SMILES lines out.
    Decode(CodecArgs),
    /// Loss-contributing tokens of a SMILES corpus in one representation.
    CountTokens(CountArgs),
    /// Smallest corpus prefix that reaches a token target.
    BuildBudget(BudgetArgs),
    /// Validity, uniqueness, diversity and novelty of generated molecules.
    Metrics(MetricsArgs),
    /// Fit, frontier, ratio fit and tables for every representation.
    Report(ReportArgs),
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    repr: Representation,
    #[arg(long)]
    out: PathBuf,
    /// JSON with any of restarts, seed, tol, max_iter, include_multi_epoch.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FrontierArgs {
    #[arg(long)]
    fit: PathBuf,
    #[arg(long, default_value_t = DEFAULT_C_MIN)]
    cmin: f64,
    #[arg(long, default_value_t = DEFAULT_C_MAX)]
    cmax: f64,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
    /// Cross-check every point against a numeric minimizer.
    #[arg(long)]
    verify: bool,
    /// Multiplier applied to the reported compute column.
    #[arg(long, default_value_t = 1.0)]
    flops_per_token: f64,
    /// Run log whose grid marks points as in range.
    #[arg(long)]
    runs: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IsoflopArgs {
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    c: f64,
    /// Comma-separated model sizes; the training grid by default.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<f64>>,
    #[arg(long)]
    runs: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IsolossArgs {
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    target: f64,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<f64>>,
    #[arg(long)]
    runs: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RhoFitArgs {
    #[arg(long)]
    fit: PathBuf,
    #[arg(long, default_value_t = DEFAULT_C_MIN)]
    cmin: f64,
    #[arg(long, default_value_t = DEFAULT_C_MAX)]
    cmax: f64,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnvelopeArgs {
    #[arg(long)]
    runs: PathBuf,
    /// Only this representation; all in the log by default.
    #[arg(long)]
    repr: Option<Representation>,
    /// Report the running minimum so loss never rises with compute.
    #[arg(long)]
    monotone: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CodecArgs {
    #[arg(long)]
    repr: Representation,
    /// Defaults to stdin.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Defaults to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    repr: Representation,
    /// SMILES, one per line.
    #[arg(long)]
    input: PathBuf,
    /// Vocabulary JSON; built from the encoded input when absent.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    repr: Representation,
    #[arg(long)]
    target: u64,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Shuffle the corpus with this seed before taking the prefix.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    None,
    Sampling,
    Checkpoint,
}

#[derive(Args)]
struct MetricsArgs {
    /// Plain lines, or JSONL with line/temperature/top_k/checkpoint.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    repr: Representation,
    /// Training SMILES, one per line.
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    group_by: GroupArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_C_MIN)]
    cmin: f64,
    #[arg(long, default_value_t = DEFAULT_C_MAX)]
    cmax: f64,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
}

enum Failure {
    Usage(String),
    Data {
        kind: &'static str,
        message: String,
        details: Value,
    },
}

fn data(kind: &'static str, message: impl ToString) -> Failure {
    Failure::Data {
        kind,
        message: message.to_string(),
        details: Value::Null,
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data { kind, message, details }) => {
            let mut err = json!({"error": kind, "message": message});
            if !details.is_null() {
                err["details"] = details;
            }
            eprintln!("{err}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Fit(a) => cmd_fit(a),
        Command::Frontier(a) => cmd_frontier(a),
        Command::Isoflop(a) => cmd_isoflop(a),
        Command::Isoloss(a) => cmd_isoloss(a),
        Command::RhoFit(a) => cmd_rho_fit(a),
        Command::Envelope(a) => cmd_envelope(a),
        Command::Encode(a) => cmd_codec(a, true),
        Command::Decode(a) => cmd_codec(a, false),
        Command::CountTokens(a) => cmd_count(a),
        Command::BuildBudget(a) => cmd_budget(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| data("io", format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read(path)?).map_err(|_| data("io", format!("{}: not UTF-8", path.display())))
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("MOLSCALE_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("MOLSCALE_SEED must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

fn fit_config(path: Option<&Path>) -> Result<FitConfig, Failure> {
    let mut cfg = match path {
        Some(p) => serde_json::from_slice(&read(p)?).map_err(|e| data("config", format!("{}: {e}", p.display())))?,
        None => FitConfig::default(),
    };
    if let Some(seed) = env_seed()? {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn runs(path: &Path) -> Result<LoadedRuns, Failure> {
    let loaded = load_runs(path).map_err(|e| {
        let details = match &e {
            molscale_core::runlog::LoadError::NoValidRecords(d) => serde_json::to_value(d).unwrap_or(Value::Null),
            _ => Value::Null,
        };
        Failure::Data {
            kind: "run_log",
            message: e.to_string(),
            details,
        }
    })?;
    for d in &loaded.diagnostics {
        eprintln!(
            "{}",
            json!({"warning": "rejected_record", "line": d.line, "kind": d.kind, "message": d.message})
        );
    }
    Ok(loaded)
}

fn load_fit(path: &Path) -> Result<FitReport<f64>, Failure> {
    let fit: FitReport<f64> =
        serde_json::from_slice(&read(path)?).map_err(|e| data("fit", format!("{}: {e}", path.display())))?;
    fit.params().validate().map_err(|e| data("fit", e))?;
    Ok(fit)
}

fn write(out: &Path, files: &[(String, Vec<u8>)]) -> Outcome {
    write_files(out, files.iter().map(|(k, v)| (k.as_str(), v.as_slice())))
        .map_err(|e| data("io", format!("{}: {e}", out.display())))
}

fn json_bytes<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

fn cmd_fit(a: FitArgs) -> Outcome {
    let cfg = fit_config(a.config.as_deref())?;
    let loaded = runs(&a.runs)?;
    let obs = loaded.observations(a.repr);
    let (params, diag) = fit_bivariate::<f64>(&obs, &cfg).map_err(|e| data("fit", e))?;
    let report = FitReport::new(a.repr, &params, &diag);
    write(&a.out, &[(format!("fit_{}.json", a.repr), json_bytes(&report))])
}

/// Token coverage and compute span of a run log's single-epoch grid.
type GridSpan = (Coverage, (f64, f64));

fn coverage_of(path: Option<&Path>, repr: Representation) -> Result<Option<GridSpan>, Failure> {
    let Some(p) = path else { return Ok(None) };
    let loaded = runs(p)?;
    match (loaded.coverage(repr), loaded.compute_span(repr)) {
        (Some(c), Some(s)) => Ok(Some((c, s))),
        _ => Err(data(
            "run_log",
            format!("no single-epoch {repr} runs in {}", p.display()),
        )),
    }
}

fn cmd_frontier(a: FrontierArgs) -> Outcome {
    if !(a.flops_per_token > 0.0 && a.flops_per_token.is_finite()) {
        return Err(Failure::Usage("--flops-per-token must be positive".into()));
    }
    let fit = load_fit(&a.fit)?;
    let params = fit.params();
    let repr = fit.representation;
    let pts = frontier(&params, a.cmin, a.cmax, a.levels).map_err(|e| data("frontier", e))?;
    let span = coverage_of(a.runs.as_deref(), repr)?.map_or((f64::NEG_INFINITY, f64::INFINITY), |(_, s)| s);
    let csv = frontier_csv(&pts, span, a.flops_per_token);
    let svg = frontier_svg(repr, &pts, span, a.flops_per_token)?;
    let mut files = vec![
        (format!("frontier_{repr}.csv"), csv.into_bytes()),
        (format!("frontier_{repr}.svg"), svg.into_bytes()),
    ];
    if a.verify {
        let mut worst = 0.0f64;
        let mut verify = String::from("C,P_opt,P_opt_numeric,rel_err\n");
        for p in &pts {
            let n = numeric_frontier(&params, p.c).map_err(|e| data("frontier", e))?;
            let rel = ((p.p_opt - n) / n).abs();
            worst = worst.max(rel);
            verify.push_str(&format!(
                "{},{},{},{}\n",
                num(p.c * a.flops_per_token),
                num(p.p_opt),
                num(n),
                num(rel)
            ));
        }
        if worst > VERIFY_TOL {
            return Err(Failure::Data {
                kind: "verify",
                message: format!("closed form and numeric minimizer differ by {worst:e}"),
                details: json!({"tolerance": VERIFY_TOL, "max_rel_err": worst}),
            });
        }
        files.push((format!("frontier_{repr}_verify.csv"), verify.into_bytes()));
    }
    write(&a.out, &files)
}

fn frontier_svg(repr: Representation, pts: &[FrontierPoint<f64>], span: (f64, f64), k: f64) -> Result<String, Failure> {
    let series = [Series::line(
        "frontier",
        pts.iter()
            .map(|p| PlotPoint {
                x: p.c * k,
                y: p.l_opt,
                in_range: p.c >= span.0 && p.c <= span.1,
            })
            .collect(),
    )];
    let shade = (span.0.is_finite() && span.1.is_finite()).then_some((span.0 * k, span.1 * k));
    let spec = PlotSpec {
        title: format!("{repr} compute-optimal loss"),
        x_label: "compute".into(),
        y_label: "L_opt".into(),
        log_x: true,
        log_y: false,
        shade,
    };
    plot_svg(&spec, &series).map_err(|e| data("plot", e))
}

fn sizes(s: Option<Vec<f64>>) -> Vec<f64> {
    s.unwrap_or_else(|| GRID_SIZES.to_vec())
}

fn cmd_isoflop(a: IsoflopArgs) -> Outcome {
    let fit = load_fit(&a.fit)?;
    let repr = fit.representation;
    let cov = coverage_of(a.runs.as_deref(), repr)?.map(|(c, _)| c);
    let curve = isoflop_curve(&fit.params(), a.c, &sizes(a.sizes), cov).map_err(|e| data("isoflop", e))?;
    let series = [Series::line(
        format!("C={}", a.c),
        curve
            .iter()
            .map(|p| PlotPoint {
                x: p.p,
                y: p.loss,
                in_range: p.in_range,
            })
            .collect(),
    )];
    let spec = PlotSpec {
        title: format!("{repr} isoFLOP"),
        x_label: "P".into(),
        y_label: "predicted loss".into(),
        log_x: true,
        log_y: false,
        shade: None,
    };
    let mut csv = String::from("P,D,loss,in_range\n");
    for p in &curve {
        csv.push_str(&format!("{},{},{},{}\n", num(p.p), num(p.d), num(p.loss), p.in_range));
    }
    let svg = plot_svg(&spec, &series).map_err(|e| data("plot", e))?;
    write(
        &a.out,
        &[
            (format!("isoflop_{repr}.csv"), csv.into_bytes()),
            (format!("isoflop_{repr}.svg"), svg.into_bytes()),
        ],
    )
}

fn cmd_isoloss(a: IsolossArgs) -> Outcome {
    let fit = load_fit(&a.fit)?;
    let repr = fit.representation;
    let cov = coverage_of(a.runs.as_deref(), repr)?.map(|(c, _)| c);
    let iso = isoloss_curve(&fit.params(), a.target, &sizes(a.sizes), cov).map_err(|e| data("isoloss", e))?;
    let mut files = vec![(format!("isoloss_{repr}.json"), json_bytes(&iso))];
    let mut csv = String::from("C,P,D,in_range\n");
    for p in &iso.points {
        csv.push_str(&format!("{},{},{},{}\n", num(p.c), num(p.p), num(p.d), p.in_range));
    }
    files.push((format!("isoloss_{repr}.csv"), csv.into_bytes()));
    if !iso.points.is_empty() {
        let series = [Series::line(
            format!("L={}", a.target),
            iso.points
                .iter()
                .map(|p| PlotPoint {
                    x: p.c,
                    y: p.p,
                    in_range: p.in_range,
                })
                .collect(),
        )];
        let spec = PlotSpec {
            title: format!("{repr} isoLoss"),
            x_label: "C".into(),
            y_label: "P".into(),
            log_x: true,
            log_y: true,
            shade: None,
        };
        files.push((
            format!("isoloss_{repr}.svg"),
            plot_svg(&spec, &series).map_err(|e| data("plot", e))?.into_bytes(),
        ));
    }
    write(&a.out, &files)
}

fn cmd_rho_fit(a: RhoFitArgs) -> Outcome {
    let fit = load_fit(&a.fit)?;
    let repr = fit.representation;
    let pts = frontier(&fit.params(), a.cmin, a.cmax, a.levels).map_err(|e| data("frontier", e))?;
    let samples: Vec<(f64, f64)> = pts.iter().map(|p| (p.c, p.rho_opt)).collect();
    let rho = fit_rho_powerlaw(&samples).map_err(|e| data("rho_fit", e))?;
    let mut csv = String::from("C,rho_opt\n");
    for (c, r) in &samples {
        csv.push_str(&format!("{},{}\n", num(*c), num(*r)));
    }
    let series = [Series::line(
        "rho_opt",
        samples
            .iter()
            .map(|&(x, y)| PlotPoint { x, y, in_range: true })
            .collect(),
    )];
    let spec = PlotSpec {
        title: format!("{repr} optimal tokens per parameter"),
        x_label: "C".into(),
        y_label: "rho_opt".into(),
        log_x: true,
        log_y: true,
        shade: None,
    };
    let svg = plot_svg(&spec, &series).map_err(|e| data("plot", e))?;
    write(
        &a.out,
        &[
            (
                format!("rho_{repr}.json"),
                json_bytes(&json!({"representation": repr, "fit": rho})),
            ),
            (format!("rho_{repr}.csv"), csv.into_bytes()),
            (format!("rho_{repr}.svg"), svg.into_bytes()),
        ],
    )
}

fn cmd_envelope(a: EnvelopeArgs) -> Outcome {
    let loaded = runs(&a.runs)?;
    let reprs = match a.repr {
        Some(r) => vec![r],
        None => loaded.representations(),
    };
    let mut files = Vec::new();
    for repr in reprs {
        let traj = loaded.trajectories(repr);
        if traj.is_empty() {
            return Err(data("envelope", format!("no {repr} runs in the log")));
        }
        let env = min_loss_envelope(&traj, EnvelopeGrid::Union, a.monotone).map_err(|e| data("envelope", e))?;
        let series = [Series::line(
            "envelope",
            env.iter()
                .map(|e| PlotPoint {
                    x: e.c,
                    y: e.loss,
                    in_range: true,
                })
                .collect(),
        )];
        let spec = PlotSpec {
            title: format!("{repr} minimum loss envelope"),
            x_label: "C".into(),
            y_label: "validation loss".into(),
            log_x: true,
            log_y: false,
            shade: None,
        };
        files.push((format!("envelope_{repr}.csv"), plot_csv(&series).into_bytes()));
        files.push((format!("envelope_{repr}.json"), json_bytes(&env)));
        files.push((
            format!("envelope_{repr}.svg"),
            plot_svg(&spec, &series).map_err(|e| data("plot", e))?.into_bytes(),
        ));
    }
    write(&a.out, &files)
}

fn cmd_codec(a: CodecArgs, encode: bool) -> Outcome {
    let input = match &a.input {
        Some(p) => read_text(p)?,
        None => {
            let mut buf = Vec::new();
            std::io::stdin().read_to_end(&mut buf).map_err(|e| data("io", e))?;
            String::from_utf8_lossy(&buf).into_owned()
        }
    };
    let mut out = String::with_capacity(input.len() * 2);
    let mut failures = 0usize;
    for (i, line) in input.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        let result = if encode {
            a.repr.encode(line)
        } else {
            a.repr.decode(line).map(|g| canonical_smiles(&g))
        };
        match result {
            Ok(text) => out.push_str(&text),
            Err(e) => {
                failures += 1;
                eprintln!(
                    "{}",
                    json!({"line": i + 1, "error": e.kind(), "message": e.to_string()})
                );
            }
        }
        out.push('\n');
    }
    match &a.output {
        Some(p) => {
            let dir = p
                .parent()
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            let name = p
                .file_name()
                .ok_or_else(|| Failure::Usage("--output needs a file name".into()))?;
            write(dir, &[(name.to_string_lossy().into_owned(), out.into_bytes())])?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| data("io", e))?;
        }
    }
    if failures > 0 {
        return Err(data("codec", format!("{failures} line(s) failed")));
    }
    Ok(())
}

fn encoded_corpus(path: &Path, repr: Representation) -> Result<(Vec<u8>, Vec<Option<String>>), Failure> {
    let bytes = read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let encoded = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| repr.encode(l).ok())
        .collect();
    Ok((bytes, encoded))
}

fn vocabulary(path: Option<&Path>, encoded: &[Option<String>]) -> Result<Vocabulary, Failure> {
    match path {
        Some(p) => serde_json::from_slice(&read(p)?).map_err(|e| data("vocab", format!("{}: {e}", p.display()))),
        None => Vocabulary::build(encoded.iter().flatten().map(String::as_str)).map_err(|e| data("vocab", e)),
    }
}

fn cmd_count(a: CountArgs) -> Outcome {
    let (_, encoded) = encoded_corpus(&a.input, a.repr)?;
    let vocab = vocabulary(a.vocab.as_deref(), &encoded)?;
    let mut count = count_corpus_tokens(encoded.iter().flatten().map(String::as_str), a.repr, &vocab);
    count.failed += encoded.iter().filter(|e| e.is_none()).count() as u64;
    let bytes = json_bytes(&count);
    match a.out {
        Some(out) => write(&out, &[(format!("count_{}.json", a.repr), bytes)]),
        None => std::io::stdout().write_all(&bytes).map_err(|e| data("io", e)),
    }
}

fn cmd_budget(a: BudgetArgs) -> Outcome {
    let (bytes, encoded) = encoded_corpus(&a.input, a.repr)?;
    let vocab = vocabulary(a.vocab.as_deref(), &encoded)?;
    let items: Vec<&str> = encoded.iter().flatten().map(String::as_str).collect();
    let order: Vec<usize> = match env_seed()?.or(a.seed) {
        Some(seed) => shuffled_order(items.len(), seed),
        None => (0..items.len()).collect(),
    };
    let ordered: Vec<&str> = order.iter().map(|&i| items[i]).collect();
    let manifest = build_budget(
        ordered.iter().copied(),
        BudgetSpec {
            target_tokens: a.target,
            representation: a.repr,
        },
        &vocab,
        &sha256_hex(&bytes),
    )
    .map_err(|e| data("budget", e))?;
    let mut selected = String::new();
    for line in &ordered[..manifest.molecule_count as usize] {
        selected.push_str(line);
        selected.push('\n');
    }
    write(
        &a.out,
        &[
            (format!("budget_{}.json", a.repr), json_bytes(&manifest)),
            (format!("budget_{}.txt", a.repr), selected.into_bytes()),
            (format!("vocab_{}.json", a.repr), json_bytes(&vocab)),
        ],
    )
}

fn sample_lines(bytes: &[u8]) -> Result<Vec<SampleLine>, Failure> {
    let text = String::from_utf8_lossy(bytes);
    let jsonl = text.trim_start().starts_with('{');
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if jsonl {
            if line.trim().is_empty() {
                continue;
            }
            let s: SampleLine = serde_json::from_str(line).map_err(|e| Failure::Data {
                kind: "metrics_input",
                message: e.to_string(),
                details: json!({"line": i + 1}),
            })?;
            out.push(s);
        } else {
            out.push(SampleLine {
                line: line.to_string(),
                temperature: None,
                top_k: None,
                checkpoint: None,
            });
        }
    }
    Ok(out)
}

fn cmd_metrics(a: MetricsArgs) -> Outcome {
    let lines = sample_lines(&read(&a.input)?)?;
    let reference_text = read_text(&a.reference)?;
    let reference = ReferenceSet::from_lines(reference_text.lines());
    if reference.rejected > 0 {
        eprintln!(
            "{}",
            json!({"warning": "reference_lines_rejected", "count": reference.rejected})
        );
    }
    let seed = env_seed()?.or(a.seed).unwrap_or(0);
    let (group, label) = match a.group_by {
        GroupArg::None => (GroupBy::None, "group"),
        GroupArg::Sampling => (GroupBy::Sampling, "sampling"),
        GroupArg::Checkpoint => (GroupBy::Checkpoint, "checkpoint"),
    };
    let rows = sweep_reports(&lines, a.repr, group, &reference, seed);
    write(
        &a.out,
        &[
            ("metrics.csv".to_string(), metrics_csv(label, &rows).into_bytes()),
            ("metrics.json".to_string(), json_bytes(&rows)),
        ],
    )
}

fn cmd_report(a: ReportArgs) -> Outcome {
    let cfg = ReportConfig {
        fit: fit_config(a.config.as_deref())?,
        c_min: a.cmin,
        c_max: a.cmax,
        levels: a.levels,
    };
    let input = read(&a.runs)?;
    let bundle = build_report(&input, &cfg).map_err(|e| {
        let details = match &e {
            molscale_core::report::ReportError::NothingFitted(m) => json!(m),
            _ => Value::Null,
        };
        Failure::Data {
            kind: "report",
            message: e.to_string(),
            details,
        }
    })?;
    bundle
        .write_to(&a.out)
        .map_err(|e| data("io", format!("{}: {e}", a.out.display())))
}
