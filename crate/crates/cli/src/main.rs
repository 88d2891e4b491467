use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdvar::bounds::{
    gram_a_floor, gram_concentration_check, gram_deviation, l2_error_bound, martingale_corollary,
    martingale_tail_bound_opt, pi1, pi2, population_gram, prediction_error_bound, rsc_check, rsc_threshold,
    truncated_moment, weibull_tail_sums, GramConstants, RscInput,
};
use hdvar::dgp::default_burn_in;
use hdvar::experiment::{sha256_hex, write_reports, VERSION};
use hdvar::lasso::{FitDoc, SolverOptions};
use hdvar::linalg::symmetric_eigen_range;
use hdvar::panel_io::{load_panel, save_binary, save_csv};
use hdvar::{
    build_design, build_table1_design, deviation_bound_check, fit_all_equations, run_experiment, simulate,
    stationary_innovation_covariance, theoretical_lambda, Error, ExperimentConfig, GramCache, InnovationSpec,
    PenaltyStrategy, Result, VarSpec,
};
use serde::Serialize;
use serde_json::{json, Value};

const MANIFEST_SCHEMA: u32 = 1;

/// Sparse high-dimensional VAR estimation, simulation and diagnostics.
#[derive(Parser, Debug)]
#[command(name = "hdvar", version, about)]
struct Cli {
    /// RNG seed for every random draw of the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// More progress output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Where to write the run manifest (default: next to the primary output).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a panel and write it as CSV and binary.
    Simulate(SimulateArgs),
    /// Fit every equation by lasso.
    Fit(FitArgs),
    /// Deviation bound, Gram concentration, RSC and error bounds for a panel.
    Diagnose(DiagnoseArgs),
    /// Run a Monte Carlo experiment from a TOML config.
    Experiment(ExperimentArgs),
    /// Evaluate the closed-form probability and error bounds.
    Bounds(BoundsArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum InnovKind {
    /// Stochastic covariance with diagonal C0 and Psi.
    Sc,
    /// i.i.d. N(0, sigma^2 I).
    Gaussian,
}

#[derive(Args, Debug, Clone)]
struct InnovArgs {
    #[arg(long, value_enum, default_value = "sc")]
    innovations: InnovKind,
    /// Diagonal of C0 (stochastic covariance).
    #[arg(long, default_value_t = 1e-5)]
    c0: f64,
    /// Diagonal of Psi (stochastic covariance).
    #[arg(long, default_value_t = 0.8)]
    psi: f64,
    /// Innovation standard deviation (gaussian).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

impl InnovArgs {
    fn build(&self, n: usize) -> Result<InnovationSpec<f64>> {
        let eye = nalgebra::DMatrix::<f64>::identity(n, n);
        match self.innovations {
            InnovKind::Sc => InnovationSpec::stochastic_covariance(&eye * self.c0, &eye * self.psi),
            InnovKind::Gaussian => InnovationSpec::gaussian(&eye * (self.sigma * self.sigma)),
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Use the block-diagonal Monte Carlo design with n = c*T.
    #[arg(long, conflicts_with = "spec")]
    table1: bool,
    /// Model JSON (`{"n": .., "p": .., "coeffs": [[[..]]], "intercept": [..]}`, intercept optional).
    #[arg(long, required_unless_present = "table1")]
    spec: Option<PathBuf>,
    /// Number of observations kept.
    #[arg(long = "T", alias = "t")]
    t: usize,
    /// n = c*T for --table1.
    #[arg(long, default_value_t = 1)]
    c: usize,
    /// Burn-in (default 200 + 10p).
    #[arg(long)]
    burn_in: Option<usize>,
    #[command(flatten)]
    innov: InnovArgs,
    /// Output directory; receives panel.csv, panel.bin and manifest.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Select {
    Bic,
    Theoretical,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Panel file (.csv or .bin).
    #[arg(long)]
    panel: PathBuf,
    /// Lag order.
    #[arg(long)]
    p: usize,
    /// Penalty selection rule (ignored when --lambda is given).
    #[arg(long, value_enum, default_value = "bic")]
    select: Select,
    /// Fixed penalty for every equation.
    #[arg(long)]
    lambda: Option<f64>,
    /// BIC grid size.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// BIC grid lambda_min / lambda_max.
    #[arg(long, default_value_t = 1e-3)]
    ratio: f64,
    /// BIC path stops at this many nonzeros (default N/2).
    #[arg(long)]
    max_active: Option<usize>,
    #[arg(long, default_value_t = 3.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    tau_star: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Fit on standardized regressors, report raw-scale coefficients.
    #[arg(long)]
    standardize: bool,
    /// Output JSON (default fit.json).
    #[arg(long, default_value = "fit.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(long)]
    panel: PathBuf,
    /// True model JSON, same format as `simulate --spec`.
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    innov: InnovArgs,
    /// Penalty; defaults to the deviation-bound rate.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 3.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    tau_star: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Gram deviation level (default: smallest admissible).
    #[arg(long)]
    a: Option<f64>,
    /// Weak-sparsity exponent.
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    /// Cone directions per equation.
    #[arg(long, default_value_t = 30)]
    samples: usize,
    /// JSON file with Gram-concentration constants.
    #[arg(long)]
    constants: Option<PathBuf>,
    #[arg(long, default_value = "diagnostics.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Validate the grids and exit.
    #[arg(long)]
    dry_run: bool,
    /// Output directory for report.json, table1.csv, diagnostics.csv.
    #[arg(long, default_value = "experiment-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long = "T", alias = "t")]
    t: usize,
    #[arg(long, default_value_t = 3.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    tau_star: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Gram deviation level for pi_2.
    #[arg(long)]
    a: Option<f64>,
    /// Martingale deviation level.
    #[arg(long, default_value_t = 1.0)]
    x: f64,
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    #[arg(long, default_value_t = 10.0)]
    r_q: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_sq: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_l1: f64,
    /// Output JSON; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FileRef {
    path: String,
    sha256: String,
}

fn file_ref(path: &Path) -> Result<FileRef> {
    Ok(FileRef { path: path.display().to_string(), sha256: sha256_hex(&fs::read(path)?) })
}

struct Run {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    manifest_at: Option<PathBuf>,
    extra: Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    let started = Instant::now();
    let outcome = match &cli.command {
        Command::Simulate(a) => cmd_simulate(&cli, a),
        Command::Fit(a) => cmd_fit(&cli, a),
        Command::Diagnose(a) => cmd_diagnose(&cli, a),
        Command::Experiment(a) => cmd_experiment(&cli, a),
        Command::Bounds(a) => cmd_bounds(&cli, a),
    };
    let run = match outcome {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_validation() { 2 } else { 3 });
        }
    };
    match write_manifest(&cli, &run, started.elapsed().as_secs_f64()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: manifest: {e}");
            ExitCode::from(3)
        }
    }
}

fn write_manifest(cli: &Cli, run: &Run, wall: f64) -> Result<()> {
    let command = match cli.command {
        Command::Simulate(_) => "simulate",
        Command::Fit(_) => "fit",
        Command::Diagnose(_) => "diagnose",
        Command::Experiment(_) => "experiment",
        Command::Bounds(_) => "bounds",
    };
    let doc = json!({
        "schema_version": MANIFEST_SCHEMA,
        "command": command,
        "args": std::env::args().skip(1).collect::<Vec<_>>(),
        "version": VERSION,
        "seed": cli.seed,
        "threads": cli.threads,
        "inputs": run.inputs.iter().map(|p| file_ref(p)).collect::<Result<Vec<_>>>()?,
        "outputs": run.outputs.iter().map(|p| file_ref(p)).collect::<Result<Vec<_>>>()?,
        "details": run.extra,
        "wall_time_s": wall,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    match cli.manifest.as_ref().or(run.manifest_at.as_ref()) {
        Some(path) => fs::write(path, text)?,
        None => eprintln!("{text}"),
    }
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn read_spec(path: &Path) -> Result<VarSpec<f64>> {
    VarSpec::from_json(&fs::read_to_string(path).map_err(|e| io_context(path, e))?)
}

fn io_context(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<Run> {
    let (spec, innov) = if a.table1 {
        build_table1_design::<f64>(a.t, a.c)?
    } else {
        let spec = read_spec(a.spec.as_ref().expect("clap requires --spec"))?;
        let innov = a.innov.build(spec.n())?;
        (spec, innov)
    };
    let seed = cli.seed.unwrap_or(0);
    let burn = a.burn_in.unwrap_or_else(|| default_burn_in(spec.p()));
    if cli.verbose > 0 {
        eprintln!("simulating T={} n={} p={} burn-in={burn} seed={seed}", a.t, spec.n(), spec.p());
    }
    let panel = simulate(&spec, &innov, a.t, burn, seed)?;
    fs::create_dir_all(&a.out)?;
    let (csv, bin) = (a.out.join("panel.csv"), a.out.join("panel.bin"));
    save_csv(&panel, &csv)?;
    save_binary(&panel, &bin)?;
    let mut inputs = vec![];
    if let Some(s) = &a.spec {
        inputs.push(s.clone());
    }
    Ok(Run {
        inputs,
        outputs: vec![csv, bin],
        manifest_at: Some(a.out.join("manifest.json")),
        extra: json!({"T": a.t, "n": spec.n(), "p": spec.p(), "burn_in": burn, "dgp_fingerprint": panel.dgp_fingerprint}),
    })
}

fn cmd_fit(_cli: &Cli, a: &FitArgs) -> Result<Run> {
    let panel = load_panel::<f64>(&a.panel).map_err(|e| match e {
        Error::Io(io) => io_context(&a.panel, io),
        e => e,
    })?;
    let strategy = match (a.lambda, a.select) {
        (Some(lambda), _) => {
            if !(lambda >= 0.0) {
                return Err(Error::InvalidArgument(format!("--lambda must be >= 0, got {lambda}")));
            }
            PenaltyStrategy::Fixed { lambda }
        }
        (None, Select::Bic) => PenaltyStrategy::Bic { grid: a.grid, ratio: a.ratio, max_active: a.max_active },
        (None, Select::Theoretical) => {
            PenaltyStrategy::Theoretical { epsilon: a.epsilon, tau_star: a.tau_star, alpha: a.alpha, safety: 1.0 }
        }
    };
    let design = build_design(&panel, a.p)?;
    let gram = GramCache::new(&design, a.standardize);
    let fit = fit_all_equations(&design, &gram, &strategy, &SolverOptions::for_scalar::<f64>());
    if let Some(f) = fit.failures.first() {
        return Err(Error::Divergence(format!("equation {}: {}", f.equation, f.message)));
    }
    fs::write(&a.out, serde_json::to_string_pretty(&FitDoc::from_fit(&fit))?)?;
    Ok(Run {
        inputs: vec![a.panel.clone()],
        outputs: vec![a.out.clone()],
        manifest_at: Some(sidecar(&a.out)),
        extra: json!({
            "strategy": strategy,
            "p": a.p,
            "max_kkt_residual": fit.max_kkt_residual(),
            "all_converged": fit.all_converged(),
        }),
    })
}

fn cmd_diagnose(cli: &Cli, a: &DiagnoseArgs) -> Result<Run> {
    let panel = load_panel::<f64>(&a.panel).map_err(|e| match e {
        Error::Io(io) => io_context(&a.panel, io),
        e => e,
    })?;
    let spec = read_spec(&a.spec)?;
    if spec.n() != panel.n() {
        return Err(Error::InvalidSpec(format!("model has n = {}, panel has {} columns", spec.n(), panel.n())));
    }
    let constants: GramConstants = match &a.constants {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).map_err(|e| io_context(p, e))?)?,
        None => GramConstants::default(),
    };
    let (n, p) = (spec.n(), spec.p());
    let design = build_design(&panel, p)?;
    let t_eff = design.n_eff();
    let lambda = match a.lambda {
        Some(l) => l,
        None => theoretical_lambda(t_eff, n, p, a.epsilon, a.tau_star, a.alpha)?,
    };
    let db = deviation_bound_check(&design, &spec, &[lambda])?;

    let sigma = stationary_innovation_covariance(&a.innov.build(n)?, 1e-12)?;
    let gamma = population_gram(&spec, &sigma, p, 1e-12)?;
    let gram = GramCache::new(&design, false);
    let dev = gram_deviation(&gram.g, &gamma);
    let level = a.a.unwrap_or_else(|| gram_a_floor(n, p, t_eff, &constants));
    let gram_report = gram_concentration_check(&[dev], &gamma, level, n, p, t_eff, &constants)?;
    let sigma_sq = symmetric_eigen_range(&gamma).0;

    let fit = fit_all_equations(&design, &gram, &PenaltyStrategy::Fixed { lambda }, &SolverOptions::for_scalar::<f64>());
    let beta_star = spec.stacked();
    let eta = lambda / sigma_sq;
    let profile = hdvar::sparsity_profile(&beta_star, a.q, eta)?;
    let r_q = profile.radius().max(f64::MIN_POSITIVE);
    let seed = cli.seed.unwrap_or(0);
    let mut equations = Vec::with_capacity(n);
    for i in 0..n {
        let b = beta_star.column(i).into_owned();
        let err = fit.beta.column(i) - &b;
        let rsc = rsc_check(
            &RscInput {
                gram_t: &gram.g,
                beta_star: &b,
                q: a.q,
                eta,
                sigma_gamma_sq: sigma_sq,
                r_q,
                population: Some(&gamma),
                error: Some(&err),
            },
            a.samples,
            seed.wrapping_add(i as u64),
        )?;
        let l2 = err.norm_squared();
        let pred = (&gram.g * &err).dot(&err);
        let l2_bound = l2_error_bound(lambda, r_q, a.q, sigma_sq)?;
        let pred_bound = prediction_error_bound(lambda, b.lp_norm(1))?;
        equations.push(json!({
            "equation": i,
            "db_statistic": db.statistic[i],
            "db_holds": db.holds[i],
            "rsc_min_slack": rsc.min_slack,
            "rsc_pass": rsc.pass,
            "rsc_hypothesis": rsc.hypothesis_holds,
            "l2_error": l2,
            "l2_bound": l2_bound,
            "prediction_error": pred,
            "prediction_bound": pred_bound,
        }));
    }
    let doc = json!({
        "T": panel.len(),
        "t_eff": t_eff,
        "n": n,
        "p": p,
        "lambda": lambda,
        "deviation_bound": {"joint": db.joint, "pi1": pi1(a.epsilon), "epsilon": a.epsilon},
        "gram": gram_report,
        "sigma_gamma_sq": sigma_sq,
        "rsc_threshold": rsc_threshold(sigma_sq, eta, a.q, r_q),
        "r_q": r_q,
        "q": a.q,
        "equations": equations,
    });
    fs::write(&a.out, serde_json::to_string_pretty(&doc)?)?;
    let mut inputs = vec![a.panel.clone(), a.spec.clone()];
    inputs.extend(a.constants.clone());
    Ok(Run { inputs, outputs: vec![a.out.clone()], manifest_at: Some(sidecar(&a.out)), extra: json!({"lambda": lambda}) })
}

fn cmd_experiment(cli: &Cli, a: &ExperimentArgs) -> Result<Run> {
    let text = fs::read_to_string(&a.config).map_err(|e| io_context(&a.config, e))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
        if let Some(th) = cfg.theory.as_mut() {
            th.base_seed = seed;
        }
    }
    if cli.threads > 0 {
        cfg.threads = cli.threads;
    }
    cfg.validate()?;
    let cells: Vec<Value> = cfg
        .t_grid
        .iter()
        .flat_map(|&t| cfg.c_grid.iter().map(move |&c| json!({"T": t, "c": c, "n": c * t})))
        .collect();
    if a.dry_run {
        println!("{}", serde_json::to_string_pretty(&json!({"valid": true, "config_hash": cfg.hash(), "cells": cells}))?);
        return Ok(Run { inputs: vec![a.config.clone()], outputs: vec![], manifest_at: None, extra: json!({"dry_run": true}) });
    }
    if cli.verbose > 0 {
        eprintln!("running {} cells x {} replications", cells.len(), cfg.replications);
    }
    let report = run_experiment(&cfg)?;
    let files = write_reports(&report, &a.out)?;
    if cli.verbose > 0 {
        for c in &report.cells {
            eprintln!(
                "T={} c={}: mse {:.4} msfe ratio {:.4} ({} of {} reps)",
                c.t, c.c, c.mse.mean, c.msfe_ratio.value, c.completed, c.requested
            );
        }
    }
    Ok(Run {
        inputs: vec![a.config.clone()],
        outputs: vec![files.report_json, files.table1_csv, files.diagnostics_csv],
        manifest_at: Some(a.out.join("manifest.json")),
        extra: json!({"config_hash": report.config_hash}),
    })
}

fn cmd_bounds(_cli: &Cli, a: &BoundsArgs) -> Result<Run> {
    let k = GramConstants::default();
    let t_eff = a.t.checked_sub(a.p).filter(|&t| t > 0).ok_or_else(|| Error::InvalidArgument("need T > p".into()))?;
    let lambda = theoretical_lambda(t_eff, a.n, a.p, a.epsilon, a.tau_star, a.alpha);
    let level = a.a.unwrap_or_else(|| gram_a_floor(a.n, a.p, t_eff, &k));
    let (mart, m_opt) = martingale_tail_bound_opt(a.n, t_eff, a.x, a.alpha, a.tau_star)?;
    let lam = lambda.as_ref().ok().copied();
    let doc = json!({
        "n": a.n,
        "p": a.p,
        "T": a.t,
        "t_eff": t_eff,
        "lambda": lam,
        "lambda_error": lambda.as_ref().err().map(|e| e.to_string()),
        "pi1": pi1(a.epsilon),
        "gram": {"a": level, "pi2": pi2(level, a.n, a.p, t_eff, &k)?, "constants": k},
        "martingale": {"x": a.x, "bound": mart, "m": m_opt,
            "corollary": martingale_corollary(a.n, t_eff, a.x, a.epsilon, a.alpha, a.tau_star)?},
        "l2_error_bound": lam.map(|l| l2_error_bound(l, a.r_q, a.q, a.sigma_sq)).transpose()?,
        "prediction_error_bound": lam.map(|l| prediction_error_bound(l, a.beta_l1)).transpose()?,
        "weibull_sums": weibull_tail_sums(a.alpha.min(1.0), 1.0, 1)?,
        "truncated_moment": truncated_moment(2.0, a.alpha, 1.0, 1.5)?,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    match &a.out {
        Some(p) => {
            fs::write(p, text)?;
            Ok(Run { inputs: vec![], outputs: vec![p.clone()], manifest_at: Some(sidecar(p)), extra: Value::Null })
        }
        None => {
            println!("{text}");
            Ok(Run { inputs: vec![], outputs: vec![], manifest_at: None, extra: Value::Null })
        }
    }
}
