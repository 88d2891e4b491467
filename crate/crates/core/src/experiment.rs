//! Monte Carlo harness for the block-diagonal simulation design and the
//! theory-verification battery on the small desk design.
//!
//! Every replication draws its own seed from `(base_seed, T, c, rep)`, so a
//! report is a pure function of its config regardless of thread count.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{
    deviation_bound_from_gram, embed_block_gram, gram_a_floor, gram_concentration_check, gram_deviation,
    l2_error_bound, pi1, population_gram, prediction_error_bound, rsc_check, rsc_threshold, GramConstants,
    GramReport, RscInput,
};
use crate::dgp::{default_burn_in, desk_design, simulate, stationary_innovation_covariance, SimulationDesign};
use crate::error::{Error, Result};
use crate::lasso::{
    build_design, fit_all_equations, last_regressors, oracle_fit, theoretical_lambda, GramCache, PenaltyStrategy,
    SolverOptions,
};
use crate::linalg::symmetric_eigen_range;
use crate::var::VarSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    TrueParams,
    OlsOnSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub t_grid: Vec<usize>,
    pub c_grid: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "PenaltyStrategy::bic")]
    pub strategy: PenaltyStrategy,
    #[serde(default = "default_oracle")]
    pub oracle: OracleKind,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Worker threads; 0 uses the global pool.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub standardize: bool,
    /// Per-replication DB and max-norm diagnostics in each cell.
    #[serde(default = "default_true")]
    pub diagnostics: bool,
    #[serde(default)]
    pub theory: Option<TheoryConfig>,
}

fn default_replications() -> usize {
    100
}
fn default_oracle() -> OracleKind {
    OracleKind::OlsOnSupport
}
fn default_horizon() -> usize {
    1
}
fn default_true() -> bool {
    true
}

impl Default for ExperimentConfig {
    /// Desk scale: one cell, T = 100, n = T, 100 replications.
    fn default() -> Self {
        Self {
            t_grid: vec![100],
            c_grid: vec![1],
            replications: default_replications(),
            strategy: PenaltyStrategy::bic(),
            oracle: default_oracle(),
            base_seed: 0,
            horizon: 1,
            threads: 0,
            standardize: false,
            diagnostics: true,
            theory: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Checks every grid cell before anything runs.
    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() || self.c_grid.is_empty() {
            return Err(Error::InvalidSpec("t_grid and c_grid must be non-empty".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidSpec("replications must be at least 1".into()));
        }
        if self.horizon != 1 {
            return Err(Error::InvalidSpec(format!("only horizon 1 is supported, got {}", self.horizon)));
        }
        validate_strategy(&self.strategy)?;
        for &t in &self.t_grid {
            for &c in &self.c_grid {
                let d = SimulationDesign::table1(t, c);
                if t <= d.p() + 1 {
                    return Err(Error::InvalidSpec(format!("T = {t} leaves no estimation sample for p = {}", d.p())));
                }
                if c == 0 || (c * t) % d.block_size != 0 {
                    return Err(Error::InvalidSpec(format!(
                        "cell T={t}, c={c}: n = c*T must be a positive multiple of {}",
                        d.block_size
                    )));
                }
                crate::var::ensure_stable(&d.block_spec::<f64>()?, crate::var::DEFAULT_STABILITY_MARGIN)?;
                d.block_innovations::<f64>()?.validate()?;
            }
        }
        if let Some(th) = &self.theory {
            th.validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    /// Hash of the result-determining fields; `threads` is excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = 0;
        if let Some(th) = c.theory.as_mut() {
            th.threads = 0;
        }
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }
}

fn validate_strategy(s: &PenaltyStrategy) -> Result<()> {
    match *s {
        PenaltyStrategy::Bic { grid, ratio, .. } if grid < 2 || !(ratio > 0.0 && ratio < 1.0) => {
            Err(Error::InvalidSpec("bic strategy needs grid >= 2 and 0 < ratio < 1".into()))
        }
        PenaltyStrategy::Fixed { lambda } if !(lambda >= 0.0) || !lambda.is_finite() => {
            Err(Error::InvalidSpec(format!("fixed lambda must be finite and >= 0, got {lambda}")))
        }
        PenaltyStrategy::Theoretical { epsilon, tau_star, alpha, safety }
            if !(epsilon > 0.0 && tau_star > 0.0 && alpha > 0.0 && safety > 0.0) =>
        {
            Err(Error::InvalidSpec("theoretical strategy needs positive epsilon, tau_star, alpha, safety".into()))
        }
        _ => Ok(()),
    }
}

/// Lower-case hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

// JSON has no NaN; serde_json writes it as null
fn nan_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Seed of one replication, a hash of `(base, T, c, rep)`.
pub fn replication_seed(base: u64, t: usize, c: usize, rep: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"hdvar-replication");
    for v in [base, t as u64, c as u64, rep as u64] {
        h.update(v.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(deserialize_with = "nan_if_null")]
    pub mean: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub stderr: f64,
    pub n: usize,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { mean: f64::NAN, stderr: f64::NAN, n };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
    } else {
        f64::NAN
    };
    Summary { mean, stderr, n }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    #[serde(deserialize_with = "nan_if_null")]
    pub value: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub stderr: f64,
    pub n: usize,
}

/// `mean(num) / mean(den)` with a delta-method standard error.
pub fn ratio_of_means(num: &[f64], den: &[f64]) -> RatioSummary {
    let n = num.len().min(den.len());
    if n == 0 {
        return RatioSummary { value: f64::NAN, stderr: f64::NAN, n };
    }
    let (a, b) = (&num[..n], &den[..n]);
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let value = ma / mb;
    let stderr = if n > 1 {
        let k = (n - 1) as f64;
        let saa = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / k;
        let sbb = b.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / k;
        let sab = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / k;
        let var = (saa / (mb * mb) - 2.0 * ma * sab / mb.powi(3) + ma * ma * sbb / mb.powi(4)) / n as f64;
        var.max(0.0).sqrt()
    } else {
        f64::NAN
    };
    RatioSummary { value, stderr, n }
}

/// Metrics of one completed replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub seed: u64,
    /// `|B_hat - B*|_F^2`.
    pub sq_error: f64,
    pub oracle_sq_error: f64,
    /// Mean over series of the squared one-step forecast error.
    pub msfe_lasso: f64,
    pub msfe_true: f64,
    pub msfe_ols: f64,
    pub mean_support: f64,
    pub mean_lambda: f64,
    pub db_joint: Option<bool>,
    pub gram_deviation: Option<f64>,
    pub rsc_hypothesis: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub rep: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub t: usize,
    pub c: usize,
    pub n: usize,
    pub p: usize,
    pub requested: usize,
    pub completed: usize,
    pub failures: Vec<ReplicationFailure>,
    /// `|B_hat - B*|_F^2 / n`, the default estimation metric.
    pub mse: Summary,
    pub mse_per_parameter: Summary,
    pub mse_total: Summary,
    /// Same metric for least squares on the true support.
    pub oracle_mse: Summary,
    pub msfe_lasso: Summary,
    pub msfe_oracle_true: Summary,
    pub msfe_oracle_ols: Summary,
    /// Lasso over the configured oracle.
    pub msfe_ratio: RatioSummary,
    pub msfe_ratio_true: RatioSummary,
    pub msfe_ratio_ols: RatioSummary,
    pub db_frequency: Option<f64>,
    pub rsc_frequency: Option<f64>,
    pub rsc_threshold: Option<f64>,
    pub mean_support: f64,
    pub mean_lambda: f64,
    pub records: Vec<ReplicationRecord>,
}

impl CellReport {
    pub fn partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Squared-error and forecast metrics for given coefficient estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastMetrics {
    pub sq_error: f64,
    pub msfe_lasso: f64,
    pub msfe_oracle: f64,
}

/// Compares `beta_hat` and an oracle against the truth, forecasting
/// `y_next` from the tail of `regressors_panel`.
pub fn evaluate_forecasts(
    beta_star: &DMatrix<f64>,
    beta_hat: &DMatrix<f64>,
    beta_oracle: &DMatrix<f64>,
    x_next: &DVector<f64>,
    y_next: &DVector<f64>,
) -> ForecastMetrics {
    let n = y_next.len() as f64;
    let msfe = |b: &DMatrix<f64>| (y_next - b.tr_mul(x_next)).norm_squared() / n;
    ForecastMetrics {
        sq_error: (beta_hat - beta_star).norm_squared(),
        msfe_lasso: msfe(beta_hat),
        msfe_oracle: msfe(beta_oracle),
    }
}

struct CellContext {
    spec: VarSpec<f64>,
    innov: crate::dgp::InnovationSpec<f64>,
    beta_star: DMatrix<f64>,
    supports: Vec<Vec<usize>>,
    gamma: Option<DMatrix<f64>>,
    threshold: Option<f64>,
}

fn cell_context(t: usize, c: usize, diagnostics: bool) -> Result<CellContext> {
    let d = SimulationDesign::table1(t, c);
    let (spec, innov) = d.build::<f64>()?;
    let beta_star = spec.stacked();
    let supports = spec.supports();
    let (gamma, threshold) = if diagnostics {
        // every block is an independent copy, so one small Lyapunov sum suffices
        let block = d.block_spec::<f64>()?;
        let sigma = stationary_innovation_covariance(&d.block_innovations::<f64>()?, 1e-12)?;
        let gb = population_gram(&block, &sigma, d.p(), 1e-12)?;
        let sigma_sq = symmetric_eigen_range(&gb).0;
        let r_q = supports.iter().map(Vec::len).max().unwrap_or(0).max(1) as f64;
        let gamma = embed_block_gram(&gb, d.block_size, d.n() / d.block_size, d.p())?;
        (Some(gamma), Some(rsc_threshold(sigma_sq, 0.0, 0.0, r_q)))
    } else {
        (None, None)
    };
    Ok(CellContext { spec, innov, beta_star, supports, gamma, threshold })
}

fn run_replication(ctx: &CellContext, t: usize, rep: usize, seed: u64, cfg: &ExperimentConfig) -> Result<ReplicationRecord> {
    let p = ctx.spec.p();
    let full = simulate(&ctx.spec, &ctx.innov, t + 1, default_burn_in(p), seed)?;
    let panel = full.head(t);
    let y_next = full.row(t);
    let design = build_design(&panel, p)?;
    let gram = GramCache::new(&design, cfg.standardize);
    let fit = fit_all_equations(&design, &gram, &cfg.strategy, &SolverOptions::for_scalar::<f64>());
    if let Some(f) = fit.failures.first() {
        return Err(Error::Divergence(format!("equation {}: {}", f.equation, f.message)));
    }
    if let Some(i) = fit.converged.iter().position(|c| !c) {
        return Err(Error::Divergence(format!("equation {i} did not converge")));
    }
    let oracle = oracle_fit(&design, &ctx.supports)?;
    let x_next = last_regressors(&panel, p)?;
    let m = evaluate_forecasts(&ctx.beta_star, &fit.beta, &oracle.beta, &x_next, &y_next);
    let msfe_true = evaluate_forecasts(&ctx.beta_star, &fit.beta, &ctx.beta_star, &x_next, &y_next).msfe_oracle;
    let n = panel.n() as f64;

    let (mut db_joint, mut gram_dev, mut rsc) = (None, None, None);
    if cfg.diagnostics {
        let raw;
        let g = if cfg.standardize {
            raw = GramCache::new(&design, false);
            &raw
        } else {
            &gram
        };
        if !cfg.standardize {
            db_joint = Some(deviation_bound_from_gram(g, &ctx.beta_star, &fit.lambda)?.joint);
        }
        if let (Some(gamma), Some(th)) = (&ctx.gamma, ctx.threshold) {
            let d = gram_deviation(&g.g, gamma);
            gram_dev = Some(d);
            rsc = Some(d <= th);
        }
    }
    Ok(ReplicationRecord {
        rep,
        seed,
        sq_error: m.sq_error,
        oracle_sq_error: (&oracle.beta - &ctx.beta_star).norm_squared(),
        msfe_lasso: m.msfe_lasso,
        msfe_true,
        msfe_ols: m.msfe_oracle,
        mean_support: fit.active_sets.iter().map(Vec::len).sum::<usize>() as f64 / n,
        mean_lambda: fit.lambda.iter().sum::<f64>() / n,
        db_joint,
        gram_deviation: gram_dev,
        rsc_hypothesis: rsc,
    })
}

fn frequency(flags: impl Iterator<Item = Option<bool>>) -> Option<f64> {
    let (mut hit, mut tot) = (0usize, 0usize);
    for f in flags {
        let f = f?;
        tot += 1;
        hit += f as usize;
    }
    (tot > 0).then(|| hit as f64 / tot as f64)
}

/// Runs `replications` of one `(T, c)` cell. Replication failures are
/// recorded with their seed and left out of every aggregate.
pub fn run_cell(t: usize, c: usize, replications: usize, cfg: &ExperimentConfig) -> Result<CellReport> {
    let ctx = cell_context(t, c, cfg.diagnostics)?;
    let results: Vec<(usize, u64, Result<ReplicationRecord>)> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(cfg.base_seed, t, c, rep);
            (rep, seed, run_replication(&ctx, t, rep, seed, cfg))
        })
        .collect();
    let mut records = Vec::with_capacity(replications);
    let mut failures = Vec::new();
    for (rep, seed, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(ReplicationFailure { rep, seed, message: e.to_string() }),
        }
    }
    let n = ctx.spec.n();
    let params = (n * ctx.beta_star.nrows()) as f64;
    let col = |f: fn(&ReplicationRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let sq = col(|r| r.sq_error);
    let scaled = |k: f64| sq.iter().map(|v| v / k).collect::<Vec<f64>>();
    let (lasso, true_, ols) = (col(|r| r.msfe_lasso), col(|r| r.msfe_true), col(|r| r.msfe_ols));
    let ratio_true = ratio_of_means(&lasso, &true_);
    let ratio_ols = ratio_of_means(&lasso, &ols);
    let k = records.len().max(1) as f64;
    Ok(CellReport {
        t,
        c,
        n,
        p: ctx.spec.p(),
        requested: replications,
        completed: records.len(),
        failures,
        mse: summarize(&scaled(n as f64)),
        mse_per_parameter: summarize(&scaled(params)),
        mse_total: summarize(&sq),
        oracle_mse: summarize(&records.iter().map(|r| r.oracle_sq_error / n as f64).collect::<Vec<_>>()),
        msfe_lasso: summarize(&lasso),
        msfe_oracle_true: summarize(&true_),
        msfe_oracle_ols: summarize(&ols),
        msfe_ratio: match cfg.oracle {
            OracleKind::TrueParams => ratio_true,
            OracleKind::OlsOnSupport => ratio_ols,
        },
        msfe_ratio_true: ratio_true,
        msfe_ratio_ols: ratio_ols,
        db_frequency: frequency(records.iter().map(|r| r.db_joint)),
        rsc_frequency: frequency(records.iter().map(|r| r.rsc_hypothesis)),
        rsc_threshold: ctx.threshold,
        mean_support: records.iter().map(|r| r.mean_support).sum::<f64>() / k,
        mean_lambda: records.iter().map(|r| r.mean_lambda).sum::<f64>() / k,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub cells: Vec<CellReport>,
    pub theory: Option<TheoryReport>,
}

impl ExperimentReport {
    pub fn cell(&self, t: usize, c: usize) -> Option<&CellReport> {
        self.cells.iter().find(|x| x.t == t && x.c == c)
    }
}

fn with_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Every `(T, c)` cell in grid order, plus the theory battery if configured.
/// A cell that cannot start at all is an error; failed replications are not.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    with_pool(cfg.threads, || {
        let mut cells = Vec::new();
        for &t in &cfg.t_grid {
            for &c in &cfg.c_grid {
                cells.push(run_cell(t, c, cfg.replications, cfg)?);
            }
        }
        let theory = cfg.theory.as_ref().map(verify_theory_inner).transpose()?;
        Ok(ExperimentReport { version: VERSION.into(), config_hash: cfg.hash(), config: cfg.clone(), cells, theory })
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    #[serde(default = "default_theory_t")]
    pub t: usize,
    #[serde(default = "default_theory_reps")]
    pub replications: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub tau_star: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub base_seed: u64,
    /// Gram deviation level; defaults to the smallest admissible one.
    #[serde(default)]
    pub gram_a: Option<f64>,
    #[serde(default = "default_rsc_samples")]
    pub rsc_samples: usize,
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub constants: Option<GramConstants>,
}

fn default_theory_t() -> usize {
    500
}
fn default_theory_reps() -> usize {
    1000
}
fn default_epsilon() -> f64 {
    3.0
}
fn one() -> f64 {
    1.0
}
fn default_rsc_samples() -> usize {
    30
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            t: default_theory_t(),
            replications: default_theory_reps(),
            epsilon: default_epsilon(),
            tau_star: 1.0,
            alpha: 1.0,
            base_seed: 0,
            gram_a: None,
            rsc_samples: default_rsc_samples(),
            threads: 0,
            constants: None,
        }
    }
}

impl TheoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 || self.rsc_samples == 0 {
            return Err(Error::InvalidSpec("theory battery needs replications >= 1 and rsc_samples >= 1".into()));
        }
        if !(self.epsilon > 0.0 && self.tau_star > 0.0 && self.alpha > 0.0) {
            return Err(Error::InvalidSpec("epsilon, tau_star and alpha must be positive".into()));
        }
        if self.gram_a.is_some_and(|a| !(a >= 0.0)) {
            return Err(Error::InvalidSpec("gram_a must be >= 0".into()));
        }
        let (spec, _) = desk_design::<f64>()?;
        theoretical_lambda(self.t.saturating_sub(spec.p()), spec.n(), spec.p(), self.epsilon, self.tau_star, self.alpha)
            .map_err(|e| Error::InvalidSpec(format!("theory battery: {e}")))?;
        Ok(())
    }

    /// Hash of the result-determining fields; `threads` is excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = 0;
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRecord {
    pub rep: usize,
    pub seed: u64,
    pub db_joint: bool,
    pub db_max_statistic: f64,
    pub gram_deviation: f64,
    pub rsc_hypothesis: bool,
    pub rsc_min_slack: f64,
    pub rsc_pass: bool,
    /// Largest `|b_hat_i - b*_i|_2^2` over equations.
    pub l2_error_max: f64,
    /// Largest `(1/N)|X(b_hat_i - b*_i)|^2` over equations.
    pub prediction_error_max: f64,
    pub l2_violations: usize,
    pub prediction_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub version: String,
    pub config_hash: String,
    pub config: TheoryConfig,
    pub n: usize,
    pub p: usize,
    pub t_eff: usize,
    pub lambda: f64,
    pub pi1: f64,
    pub db_failures: usize,
    pub db_failure_frequency: f64,
    pub gram: GramReport,
    pub sigma_gamma_sq: f64,
    pub r_q: f64,
    pub rsc_threshold: f64,
    pub rsc_hypothesis_count: usize,
    pub rsc_sample_pass_count: usize,
    pub l2_bound: f64,
    pub prediction_bounds: Vec<f64>,
    /// Replications where both the DB event and the max-norm hypothesis hold.
    pub on_event: usize,
    pub l2_violations_on_event: usize,
    pub prediction_violations_on_event: usize,
    pub db_event: usize,
    pub prediction_violations_on_db: usize,
    pub l2_violations_all: usize,
    pub prediction_violations_all: usize,
    pub records: Vec<TheoryRecord>,
}

/// Deviation bound, Gram concentration, restricted strong convexity and
/// the oracle inequalities on replications of the desk design, with the
/// penalty set from the deviation-bound rate.
pub fn verify_theory(cfg: &TheoryConfig) -> Result<TheoryReport> {
    cfg.validate()?;
    with_pool(cfg.threads, || verify_theory_inner(cfg))?
}

fn verify_theory_inner(cfg: &TheoryConfig) -> Result<TheoryReport> {
    let (spec, innov) = desk_design::<f64>()?;
    let (n, p) = (spec.n(), spec.p());
    let t_eff = cfg.t - p;
    let lambda = theoretical_lambda(t_eff, n, p, cfg.epsilon, cfg.tau_star, cfg.alpha)?;
    let sigma = stationary_innovation_covariance(&innov, 1e-12)?;
    let gamma = population_gram(&spec, &sigma, p, 1e-12)?;
    let sigma_sq = symmetric_eigen_range(&gamma).0;
    let beta_star = spec.stacked();
    let supports = spec.supports();
    let q = 0.0;
    let r_q = supports.iter().map(Vec::len).max().unwrap_or(0).max(1) as f64;
    let eta = lambda / sigma_sq;
    let threshold = rsc_threshold(sigma_sq, eta, q, r_q);
    let l2_bound = l2_error_bound(lambda, r_q, q, sigma_sq)?;
    let pred_bounds: Vec<f64> = (0..n)
        .map(|i| prediction_error_bound(lambda, beta_star.column(i).lp_norm(1)))
        .collect::<Result<_>>()?;
    let strategy = PenaltyStrategy::Fixed { lambda };
    let opts = SolverOptions::for_scalar::<f64>();

    let run = |rep: usize| -> Result<TheoryRecord> {
        let seed = replication_seed(cfg.base_seed, cfg.t, 0, rep);
        let panel = simulate(&spec, &innov, cfg.t, default_burn_in(p), seed)?;
        let design = build_design(&panel, p)?;
        let gram = GramCache::new(&design, false);
        let db = deviation_bound_from_gram(&gram, &beta_star, &[lambda])?;
        let fit = fit_all_equations(&design, &gram, &strategy, &opts);
        if let Some(f) = fit.failures.first() {
            return Err(Error::Divergence(format!("equation {}: {}", f.equation, f.message)));
        }
        let dev = gram_deviation(&gram.g, &gamma);
        let (mut l2_max, mut pred_max, mut l2_v, mut pred_v) = (0.0_f64, 0.0_f64, 0, 0);
        let mut min_slack = f64::INFINITY;
        let mut rsc_pass = true;
        for i in 0..n {
            let err: DVector<f64> = fit.beta.column(i) - beta_star.column(i);
            let l2 = err.norm_squared();
            let pred = (&gram.g * &err).dot(&err);
            l2_max = l2_max.max(l2);
            pred_max = pred_max.max(pred);
            l2_v += (l2 > l2_bound) as usize;
            pred_v += (pred > pred_bounds[i]) as usize;
            let b = beta_star.column(i).into_owned();
            let r = rsc_check(
                &RscInput {
                    gram_t: &gram.g,
                    beta_star: &b,
                    q,
                    eta,
                    sigma_gamma_sq: sigma_sq,
                    r_q,
                    population: None,
                    error: Some(&err),
                },
                cfg.rsc_samples,
                seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            )?;
            min_slack = min_slack.min(r.min_slack);
            rsc_pass &= r.pass;
        }
        Ok(TheoryRecord {
            rep,
            seed,
            db_joint: db.joint,
            db_max_statistic: db.statistic.iter().copied().fold(0.0, f64::max),
            gram_deviation: dev,
            rsc_hypothesis: dev <= threshold,
            rsc_min_slack: min_slack,
            rsc_pass,
            l2_error_max: l2_max,
            prediction_error_max: pred_max,
            l2_violations: l2_v,
            prediction_violations: pred_v,
        })
    };
    let records: Vec<TheoryRecord> = (0..cfg.replications).into_par_iter().map(run).collect::<Result<_>>()?;

    let constants = cfg.constants.unwrap_or_default();
    let a = cfg.gram_a.unwrap_or_else(|| gram_a_floor(n, p, t_eff, &constants));
    let devs: Vec<f64> = records.iter().map(|r| r.gram_deviation).collect();
    let gram = gram_concentration_check(&devs, &gamma, a, n, p, t_eff, &constants)?;
    let db_failures = records.iter().filter(|r| !r.db_joint).count();
    let on: Vec<&TheoryRecord> = records.iter().filter(|r| r.db_joint && r.rsc_hypothesis).collect();
    let on_db: Vec<&TheoryRecord> = records.iter().filter(|r| r.db_joint).collect();
    Ok(TheoryReport {
        version: VERSION.into(),
        config_hash: cfg.hash(),
        config: cfg.clone(),
        n,
        p,
        t_eff,
        lambda,
        pi1: pi1(cfg.epsilon),
        db_failures,
        db_failure_frequency: db_failures as f64 / records.len() as f64,
        gram,
        sigma_gamma_sq: sigma_sq,
        r_q,
        rsc_threshold: threshold,
        rsc_hypothesis_count: records.iter().filter(|r| r.rsc_hypothesis).count(),
        rsc_sample_pass_count: records.iter().filter(|r| r.rsc_pass).count(),
        l2_bound,
        prediction_bounds: pred_bounds,
        on_event: on.len(),
        l2_violations_on_event: on.iter().map(|r| r.l2_violations).sum(),
        prediction_violations_on_event: on.iter().map(|r| r.prediction_violations).sum(),
        db_event: on_db.len(),
        prediction_violations_on_db: on_db.iter().map(|r| r.prediction_violations).sum(),
        l2_violations_all: records.iter().map(|r| r.l2_violations).sum(),
        prediction_violations_all: records.iter().map(|r| r.prediction_violations).sum(),
        records,
    })
}

/// Paths of the files written by [`write_reports`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub report_json: PathBuf,
    pub table1_csv: PathBuf,
    pub diagnostics_csv: PathBuf,
}

/// `report.json`, `table1.csv` and `diagnostics.csv` under `dir`.
pub fn write_reports(report: &ExperimentReport, dir: &Path) -> Result<ReportFiles> {
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        report_json: dir.join("report.json"),
        table1_csv: dir.join("table1.csv"),
        diagnostics_csv: dir.join("diagnostics.csv"),
    };
    fs::write(&files.report_json, serde_json::to_string_pretty(report)?)?;

    let mut w = csv::Writer::from_path(&files.table1_csv)?;
    w.write_record(["panel", "metric", "T", "c", "value", "stderr", "n_reps", "config_hash", "version"])?;
    for cell in &report.cells {
        let rows: [(&str, &str, f64, f64, usize); 7] = [
            ("a", "mse", cell.mse.mean, cell.mse.stderr, cell.mse.n),
            ("a", "mse-per-parameter", cell.mse_per_parameter.mean, cell.mse_per_parameter.stderr, cell.mse.n),
            ("a", "mse-total", cell.mse_total.mean, cell.mse_total.stderr, cell.mse.n),
            ("a", "oracle-mse", cell.oracle_mse.mean, cell.oracle_mse.stderr, cell.oracle_mse.n),
            ("b", "msfe-ratio", cell.msfe_ratio.value, cell.msfe_ratio.stderr, cell.msfe_ratio.n),
            ("b", "msfe-ratio-true-params", cell.msfe_ratio_true.value, cell.msfe_ratio_true.stderr, cell.msfe_ratio_true.n),
            ("b", "msfe-ratio-ols-on-support", cell.msfe_ratio_ols.value, cell.msfe_ratio_ols.stderr, cell.msfe_ratio_ols.n),
        ];
        for (panel, metric, v, se, k) in rows {
            w.write_record([
                panel.to_string(),
                metric.to_string(),
                cell.t.to_string(),
                cell.c.to_string(),
                v.to_string(),
                se.to_string(),
                k.to_string(),
                report.config_hash.clone(),
                report.version.clone(),
            ])?;
        }
    }
    w.flush()?;

    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_path(&files.diagnostics_csv)?;
    w.write_record([
        "T",
        "c",
        "requested",
        "completed",
        "failures",
        "db_frequency",
        "rsc_frequency",
        "rsc_threshold",
        "mean_support",
        "mean_lambda",
        "config_hash",
        "version",
    ])?;
    for cell in &report.cells {
        w.write_record([
            cell.t.to_string(),
            cell.c.to_string(),
            cell.requested.to_string(),
            cell.completed.to_string(),
            cell.failures.len().to_string(),
            opt(cell.db_frequency),
            opt(cell.rsc_frequency),
            opt(cell.rsc_threshold),
            cell.mean_support.to_string(),
            cell.mean_lambda.to_string(),
            report.config_hash.clone(),
            report.version.clone(),
        ])?;
    }
    w.flush()?;
    Ok(files)
}
