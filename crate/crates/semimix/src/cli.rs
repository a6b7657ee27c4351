//! Command-line front end.
//!
//! Six subcommands cover the pipeline: `fit` (Euclidean parameters),
//! `cdf` / `pdf` (curve estimates on a grid), `band` (simultaneous
//! confidence band), `simulate` (synthetic data), and `mc` (replicated
//! studies).  Data comes either from a CSV/TSV file (`--input`, with
//! `--known` and optionally `--transform` describing the known component)
//! or from a built-in scenario (`--scenario` with `--pi0`, `--n`,
//! `--seed`).
//!
//! Every run writes its outputs into `--out-dir` and finishes with a
//! `manifest.json` recording the argument vector, input digest, output
//! names, and per-stage wall-clock timings; the manifest is written last,
//! so its presence implies every output it lists was written.  Exit codes
//! separate failure classes: 2 configuration, 3 ingestion, 4 degenerate or
//! overflowing arithmetic, 5 estimate outside its domain, 6 I/O.

use crate::bootstrap::{confidence_band, BootstrapConfig};
use crate::density::{f_n_pdf_grid, DensityConfig};
use crate::error::{Error, Result};
use crate::euclidean::{
    fit_model, lambda_param_family, sigma_star_diagnostic, ModelFit, SigmaStarDiagnostic,
};
use crate::functional::{estimate_curves, EvaluationGrid, DEFAULT_GRID_POINTS};
use crate::io::{file_digest, parse_known_spec, read_pairs, write_pairs_csv};
use crate::mc::{run_study, BandSpec, McConfig};
use crate::model::{transform_to_canonical, Dataset, KnownComponent};
use crate::moments::fit_lambda;
use crate::simulate::{builtin_scenario, simulate, ScenarioConfig};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Parses `std::env::args`, runs the requested command, and returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Ingestion { .. } => 3,
        Error::DegenerateDesign { .. } | Error::NumericOverflow { .. } => 4,
        Error::OutsideDomain(_) => 5,
        Error::Io { .. } => 6,
    }
}

#[derive(Parser)]
#[command(
    name = "semimix",
    version,
    about = "Two-component mixture of regressions with one component fully known"
)]
struct Cli {
    /// Cap the worker-thread count (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory output files are written into (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate (alpha, beta, pi) with standard errors; writes fit.json.
    Fit(FitArgs),
    /// Estimate the unknown error distribution function; writes cdf.tsv.
    Cdf(CurveArgs),
    /// Estimate the unknown error density; writes pdf.tsv.
    Pdf(CurveArgs),
    /// Simultaneous confidence band for the c.d.f.; writes band.tsv.
    Band(BandArgs),
    /// Draw a synthetic dataset from a scenario; writes sim.csv.
    Simulate(SimArgs),
    /// Replicated Monte Carlo study; writes mc.tsv and mc.json.
    Mc(McArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV/TSV file of x,y pairs (header row optional).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Built-in scenario (WOn WOg WOe MOn MOg MOe SOn SOg SOe).
    #[arg(long, conflicts_with = "input")]
    scenario: Option<String>,
    /// Mixing proportion for --scenario.
    #[arg(long, requires = "scenario")]
    pi0: Option<f64>,
    /// Sample size for --scenario.
    #[arg(long, requires = "scenario")]
    n: Option<usize>,
    /// RNG seed (scenario draws and bootstrap streams).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Known error law: normal:<sigma> | gamma:<shape>:<rate>:<var> |
    /// exp:<var> | table:<path>.
    #[arg(long, default_value = "normal:1", conflicts_with = "scenario")]
    known: String,
    /// Known line "a,b" subtracted from raw responses before fitting.
    #[arg(long, conflicts_with = "scenario")]
    transform: Option<String>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Also evaluate the nine closed-form single-parameter estimators.
    #[arg(long)]
    lambda_family: bool,
    /// Also estimate the known component's error variance (unstable
    /// diagnostic; may come back undefined).
    #[arg(long)]
    sigma_star: bool,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of grid points over the residual range.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// Proceed even when the mixing-weight estimate leaves (0, 1].
    #[arg(long)]
    force: bool,
    /// Append the true curve column (scenario runs only).
    #[arg(long)]
    with_truth: bool,
}

#[derive(Args)]
struct BandArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// Bootstrap replicates.
    #[arg(long = "N", default_value_t = 1000)]
    replicates: usize,
    /// Band level p; the band has confidence 1 − p.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
}

#[derive(Args)]
struct SimArgs {
    /// Built-in scenario (WOn WOg WOe MOn MOg MOe SOn SOg SOe).
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    pi0: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include the latent component label as a third column.
    #[arg(long)]
    with_latent: bool,
}

#[derive(Args)]
struct McArgs {
    /// Built-in scenario (WOn WOg WOe MOn MOg MOe SOn SOg SOe).
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    pi0: f64,
    #[arg(long)]
    n: usize,
    /// Monte Carlo replicates.
    #[arg(long = "M")]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add √n-scaled sd and mean-se columns.
    #[arg(long)]
    with_se: bool,
    /// Score confidence-band coverage (requires --N).
    #[arg(long, requires = "band_replicates")]
    coverage: bool,
    /// Bootstrap replicates per band; enables the coverage column.
    #[arg(long = "N")]
    band_replicates: Option<usize>,
    /// Band level for coverage.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        // First initialization in the process; a late rebuild is a no-op and
        // harmless because results never depend on the pool size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match &cli.command {
        Cmd::Fit(args) => cmd_fit(&cli, args),
        Cmd::Cdf(args) => cmd_curve(&cli, args, Curve::Cdf, None),
        Cmd::Pdf(args) => cmd_curve(&cli, args, Curve::Pdf, None),
        Cmd::Band(args) => {
            cmd_curve(&cli, &args.curve, Curve::Cdf, Some((args.replicates, args.level)))
        }
        Cmd::Simulate(args) => cmd_simulate(&cli, args),
        Cmd::Mc(args) => cmd_mc(&cli, args),
    }
}

/// Manifest written at the end of every successful run.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    argv: Vec<String>,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    known: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    band_replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    band_level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    outputs: Vec<String>,
    timings_ms: BTreeMap<String, u128>,
}

/// One run: output directory, manifest under construction, stage timer.
struct Run {
    out_dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn new(command: &str, out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        Ok(Run {
            out_dir: out_dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                argv: std::env::args().collect(),
                version: env!("CARGO_PKG_VERSION"),
                input: None,
                input_digest: None,
                scenario: None,
                known: None,
                grid_points: None,
                band_replicates: None,
                band_level: None,
                seed: None,
                outputs: Vec::new(),
                timings_ms: BTreeMap::new(),
            },
        })
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f()?;
        self.record(stage, t0);
        Ok(out)
    }

    fn record(&mut self, stage: &str, since: Instant) {
        self.manifest.timings_ms.insert(stage.to_string(), since.elapsed().as_millis());
    }

    fn write_output(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    /// Records an output file some other writer already produced.
    fn note_output(&mut self, name: &str) {
        self.manifest.outputs.push(name.to_string());
    }

    fn finish(self) -> Result<()> {
        let path = self.out_dir.join("manifest.json");
        let mut json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
        json.push('\n');
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

/// Canonical-scale data ready for estimation, with provenance.
struct Loaded {
    data: Dataset,
    known: KnownComponent,
    /// Present for scenario runs; carries the true laws for --with-truth.
    truth: Option<ScenarioConfig>,
}

fn parse_line_pair(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("--transform expects \"a,b\", got {s:?}")));
    }
    let a = parts[0].parse::<f64>().map_err(|_| {
        Error::Config(format!("--transform intercept {:?} is not a number", parts[0]))
    })?;
    let b = parts[1].parse::<f64>().map_err(|_| {
        Error::Config(format!("--transform slope {:?} is not a number", parts[1]))
    })?;
    Ok((a, b))
}

fn load(args: &InputArgs, run: &mut Run) -> Result<Loaded> {
    let t0 = Instant::now();
    let loaded = match (&args.input, &args.scenario) {
        (Some(path), None) => {
            let noise = parse_known_spec(&args.known)?;
            let (a, b) = match &args.transform {
                None => (0.0, 0.0),
                Some(s) => parse_line_pair(s)?,
            };
            run.manifest.input = Some(path.display().to_string());
            run.manifest.input_digest = Some(format!("{:016x}", file_digest(path)?));
            run.manifest.known = Some(args.known.clone());
            let pairs = read_pairs(path)?;
            let line = KnownComponent::new(a, b, noise)?;
            let data = transform_to_canonical(&pairs, &line)?;
            Loaded { data, known: KnownComponent::canonical(line.noise), truth: None }
        }
        (None, Some(name)) => {
            let pi0 = args
                .pi0
                .ok_or_else(|| Error::Config("--pi0 is required with --scenario".into()))?;
            let n =
                args.n.ok_or_else(|| Error::Config("--n is required with --scenario".into()))?;
            run.manifest.scenario = Some(name.clone());
            run.manifest.seed = Some(args.seed);
            run.manifest.known = Some("normal:1".into());
            let cfg = builtin_scenario(name, pi0, n, args.seed)?;
            let sim = simulate(&cfg)?;
            Loaded { data: sim.data, known: cfg.known.clone(), truth: Some(cfg) }
        }
        _ => return Err(Error::Config("provide exactly one of --input or --scenario".into())),
    };
    run.record("load", t0);
    Ok(loaded)
}

/// Refuses curve estimation on an unidentified fit unless forced.
fn guard_pi(fit: &ModelFit, force: bool) -> Result<()> {
    if fit.euclidean.pi_valid || force {
        Ok(())
    } else {
        Err(Error::OutsideDomain(format!(
            "mixing weight estimate {:.6} lies outside (0, 1], so the curve estimators are not \
             identified; rerun with --force to evaluate them anyway",
            fit.euclidean.params.pi
        )))
    }
}

#[derive(Serialize)]
struct FamilyReport {
    alpha: [Option<f64>; 3],
    beta: [Option<f64>; 3],
    pi: [Option<f64>; 3],
}

#[derive(Serialize)]
struct SigmaStarReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    undefined_reason: Option<String>,
}

#[derive(Serialize)]
struct FitReport {
    n: usize,
    alpha: f64,
    beta: f64,
    pi: f64,
    std_errors: [f64; 3],
    pi_valid: bool,
    gamma: [f64; 8],
    gamma_condition: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<[f64; 5]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_family: Option<FamilyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_star: Option<SigmaStarReport>,
}

fn cmd_fit(cli: &Cli, args: &FitArgs) -> Result<()> {
    let mut run = Run::new("fit", &cli.out_dir)?;
    let loaded = load(&args.input, &mut run)?;
    let fit = run.time("fit", || fit_model(&loaded.data))?;
    let mut report = FitReport {
        n: loaded.data.n(),
        alpha: fit.euclidean.params.alpha,
        beta: fit.euclidean.params.beta,
        pi: fit.euclidean.params.pi,
        std_errors: fit.euclidean.std_errors,
        pi_valid: fit.euclidean.pi_valid,
        gamma: fit.gamma.gamma,
        gamma_condition: fit.gamma.condition,
        lambda: None,
        lambda_family: None,
        sigma_star: None,
    };
    if args.lambda_family {
        let lam = fit_lambda(&fit.moments)?;
        let family = lambda_param_family(&lam.lambda);
        report.lambda = Some(lam.lambda);
        report.lambda_family =
            Some(FamilyReport { alpha: family.alpha, beta: family.beta, pi: family.pi });
    }
    if args.sigma_star {
        report.sigma_star = Some(match sigma_star_diagnostic(&fit.moments)? {
            SigmaStarDiagnostic::Estimate(v) => {
                SigmaStarReport { estimate: Some(v), undefined_reason: None }
            }
            SigmaStarDiagnostic::Undefined { reason } => {
                SigmaStarReport { estimate: None, undefined_reason: Some(reason) }
            }
        });
    }
    print_fit(&report, &run.manifest.timings_ms);
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
    json.push('\n');
    run.write_output("fit.json", &json)?;
    run.finish()
}

fn print_fit(report: &FitReport, timings: &BTreeMap<String, u128>) {
    println!("n          {}", report.n);
    println!("alpha      {:>12.6}   (se {:.6})", report.alpha, report.std_errors[0]);
    println!("beta       {:>12.6}   (se {:.6})", report.beta, report.std_errors[1]);
    println!("pi         {:>12.6}   (se {:.6})", report.pi, report.std_errors[2]);
    println!("pi_valid   {}", report.pi_valid);
    let g: Vec<String> = report.gamma.iter().map(|v| format!("{v:.6}")).collect();
    println!("gamma      [{}]", g.join(", "));
    println!("condition  {:.3e}", report.gamma_condition);
    if let Some(family) = &report.lambda_family {
        let show = |vals: &[Option<f64>; 3]| -> String {
            vals.iter()
                .map(|v| match v {
                    Some(v) => format!("{v:.6}"),
                    None => "undefined".to_string(),
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        println!("family     alpha: {}", show(&family.alpha));
        println!("           beta:  {}", show(&family.beta));
        println!("           pi:    {}", show(&family.pi));
    }
    if let Some(s) = &report.sigma_star {
        match (&s.estimate, &s.undefined_reason) {
            (Some(v), _) => println!("sigma*^2   {v:.6}"),
            (_, Some(reason)) => println!("sigma*^2   undefined: {reason}"),
            _ => {}
        }
    }
    let spent: Vec<String> = timings.iter().map(|(k, v)| format!("{k} {v} ms")).collect();
    println!("timings    {}", spent.join(", "));
}

#[derive(Clone, Copy)]
enum Curve {
    Cdf,
    Pdf,
}

fn render_grid_tsv(columns: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    out.push_str(&columns.iter().map(|(name, _)| *name).collect::<Vec<_>>().join("\t"));
    out.push('\n');
    let rows = columns[0].1.len();
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|(_, v)| format!("{}", v[i])).collect();
        out.push_str(&line.join("\t"));
        out.push('\n');
    }
    out
}

fn cmd_curve(cli: &Cli, args: &CurveArgs, curve: Curve, band: Option<(usize, f64)>) -> Result<()> {
    let command = match (curve, band.is_some()) {
        (_, true) => "band",
        (Curve::Cdf, false) => "cdf",
        (Curve::Pdf, false) => "pdf",
    };
    let mut run = Run::new(command, &cli.out_dir)?;
    run.manifest.grid_points = Some(args.grid_points);
    if let Some((n_rep, level)) = band {
        run.manifest.band_replicates = Some(n_rep);
        run.manifest.band_level = Some(level);
    }
    let loaded = load(&args.input, &mut run)?;
    if args.with_truth && loaded.truth.is_none() {
        return Err(Error::Config(
            "--with-truth needs a --scenario run (no true curve is known for file input)".into(),
        ));
    }
    let fit = run.time("fit", || fit_model(&loaded.data))?;
    guard_pi(&fit, args.force)?;
    let grid = EvaluationGrid::over_residual_range(
        &loaded.data,
        &fit.euclidean.params,
        args.grid_points,
    )?;
    match curve {
        Curve::Pdf => {
            let pdf = run.time("pdf", || {
                f_n_pdf_grid(
                    &loaded.data,
                    &loaded.known,
                    &fit.euclidean.params,
                    &grid,
                    &DensityConfig::default(),
                )
            })?;
            let truth_col: Option<Vec<f64>> = args.with_truth.then(|| {
                let scen = loaded.truth.as_ref().expect("checked above");
                grid.points().iter().map(|&t| scen.eps_law.pdf(t)).collect()
            });
            let mut columns: Vec<(&str, &[f64])> =
                vec![("t", grid.points()), ("f_n", &pdf.raw), ("clamped", &pdf.clamped)];
            if let Some(tc) = &truth_col {
                columns.push(("truth", tc));
            }
            run.write_output("pdf.tsv", &render_grid_tsv(&columns))?;
        }
        Curve::Cdf => {
            let bundle = run.time("cdf", || {
                estimate_curves(&loaded.data, &loaded.known, &fit, &grid, &DensityConfig::default())
            })?;
            let band_result = match band {
                Some((n_rep, level)) => Some(run.time("band", || {
                    confidence_band(
                        &bundle.cdf,
                        &bundle.influence,
                        &BootstrapConfig {
                            replicates: n_rep,
                            level,
                            seed: args.input.seed,
                            ..Default::default()
                        },
                    )
                })?),
                None => None,
            };
            let truth_col: Option<Vec<f64>> = args.with_truth.then(|| {
                let scen = loaded.truth.as_ref().expect("checked above");
                grid.points().iter().map(|&t| scen.eps_law.cdf(t)).collect()
            });
            let mut columns: Vec<(&str, &[f64])> = vec![
                ("t", grid.points()),
                ("F_n", &bundle.cdf.f_raw),
                ("clamped", &bundle.cdf.f_clamped),
                ("se", &bundle.cdf.se),
            ];
            if let Some(b) = &band_result {
                columns.push(("band_lo", &b.band_lo));
                columns.push(("band_hi", &b.band_hi));
                columns.push(("band_lo_clamped", &b.band_lo_clamped));
                columns.push(("band_hi_clamped", &b.band_hi_clamped));
            }
            if let Some(tc) = &truth_col {
                columns.push(("truth", tc));
            }
            let name = if band.is_some() { "band.tsv" } else { "cdf.tsv" };
            run.write_output(name, &render_grid_tsv(&columns))?;
        }
    }
    run.finish()
}

fn cmd_simulate(cli: &Cli, args: &SimArgs) -> Result<()> {
    let mut run = Run::new("simulate", &cli.out_dir)?;
    run.manifest.scenario = Some(args.scenario.clone());
    run.manifest.seed = Some(args.seed);
    let sim = run.time("simulate", || {
        simulate(&builtin_scenario(&args.scenario, args.pi0, args.n, args.seed)?)
    })?;
    let t0 = Instant::now();
    let pairs: Vec<(f64, f64)> = sim.data.obs().iter().map(|o| (o.x, o.y)).collect();
    let path = run.out_dir.join("sim.csv");
    write_pairs_csv(&path, &pairs, args.with_latent.then_some(sim.latent.as_slice()))?;
    run.record("write", t0);
    run.note_output("sim.csv");
    run.finish()
}

fn cmd_mc(cli: &Cli, args: &McArgs) -> Result<()> {
    let mut run = Run::new("mc", &cli.out_dir)?;
    run.manifest.scenario = Some(args.scenario.clone());
    run.manifest.seed = Some(args.seed);
    run.manifest.band_replicates = args.band_replicates;
    if args.band_replicates.is_some() {
        run.manifest.band_level = Some(args.level);
    }
    let cfg = McConfig {
        scenario: args.scenario.clone(),
        pi0: args.pi0,
        n: args.n,
        replicates: args.replicates,
        seed: args.seed,
        with_se: args.with_se,
        band: args.band_replicates.map(|replicates| BandSpec { replicates, level: args.level }),
    };
    let report = run.time("study", || run_study(&cfg))?;
    print!("{}", report.tsv());
    run.write_output("mc.tsv", &report.tsv())?;
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
    json.push('\n');
    run.write_output("mc.json", &json)?;
    run.finish()
}
