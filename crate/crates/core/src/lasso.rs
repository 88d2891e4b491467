//! Equation-wise lasso for VAR(p) panels.
//!
//! Each equation solves `min (1/N) |Y_i - X b|^2 + lambda |b|_1` with
//! `N = T - p`. All equations share `X`, so the solver works on the cached
//! Gram matrix `G = X'X / N` and cross products `c_i = X'Y_i / N`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::TimeSeriesPanel;
use crate::error::{Error, Result};
use crate::linalg::lstsq_min_norm;
use crate::scalar::{soft_threshold, Scalar};

/// Lagged regression of a panel: row `r` of `x` is
/// `(y_{r+p-1}', ..., y_r')`, row `r` of `y` is `y_{r+p}'`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices<T: Scalar> {
    pub x: DMatrix<T>,
    pub y: DMatrix<T>,
    pub n: usize,
    pub p: usize,
}

impl<T: Scalar> DesignMatrices<T> {
    /// Effective sample size `T - p`.
    pub fn n_eff(&self) -> usize {
        self.x.nrows()
    }

    pub fn width(&self) -> usize {
        self.x.ncols()
    }
}

pub fn build_design<T: Scalar>(panel: &TimeSeriesPanel<T>, p: usize) -> Result<DesignMatrices<T>> {
    let (t_len, n) = (panel.len(), panel.n());
    if p == 0 {
        return Err(Error::InvalidArgument("lag order p must be at least 1".into()));
    }
    if t_len <= p {
        return Err(Error::InsufficientData(format!("T = {t_len} must exceed p = {p}")));
    }
    let rows = t_len - p;
    let d = &panel.data;
    let x = DMatrix::from_fn(rows, n * p, |r, col| {
        let (k, j) = (col / n + 1, col % n);
        d[(r + p - k, j)]
    });
    let y = d.rows(p, rows).into_owned();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix".into()));
    }
    Ok(DesignMatrices { x, y, n, p })
}

/// Shared second moments of a design.
#[derive(Debug, Clone)]
pub struct GramCache<T: Scalar> {
    /// `X'X / N`, possibly standardized.
    pub g: DMatrix<T>,
    /// `X'Y / N`, one column per equation, possibly standardized.
    pub c: DMatrix<T>,
    /// `|Y_i|^2 / N`.
    pub yty: Vec<T>,
    pub n_eff: usize,
    /// Column scales `s_j` when standardized: solver coefficients are
    /// divided by them to get back to the raw scale.
    pub scale: Option<DVector<T>>,
}

impl<T: Scalar> GramCache<T> {
    pub fn new(design: &DesignMatrices<T>, standardize: bool) -> Self {
        let inv_n = T::of(1.0 / design.n_eff() as f64);
        let xt = design.x.transpose();
        let mut g = &xt * &design.x * inv_n;
        let mut c = &xt * &design.y * inv_n;
        let yty = design.y.column_iter().map(|col| col.norm_squared() * inv_n).collect();
        let scale = if standardize {
            let s = DVector::from_fn(g.nrows(), |j, _| {
                let v = g[(j, j)].sqrt();
                if v > T::zero() {
                    v
                } else {
                    T::one()
                }
            });
            for j in 0..g.ncols() {
                for i in 0..g.nrows() {
                    g[(i, j)] /= s[i] * s[j];
                }
            }
            for mut col in c.column_iter_mut() {
                col.component_div_assign(&s);
            }
            Some(s)
        } else {
            None
        };
        Self { g, c, yty, n_eff: design.n_eff(), scale }
    }

    pub fn width(&self) -> usize {
        self.g.nrows()
    }

    /// Smallest penalty giving the all-zero solution: `max_j |2 c_ij|`.
    pub fn lambda_max(&self, eq: usize) -> f64 {
        self.c.column(eq).iter().map(|v| (v.abs() * T::of(2.0)).as_f64()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once the largest coefficient change of a sweep is below this.
    pub tol: f64,
    /// Required KKT residual at exit.
    pub kkt_tol: f64,
    /// Cap on coordinate sweeps (full and active-set).
    pub max_iter: usize,
}

impl SolverOptions {
    pub fn for_scalar<T: Scalar>() -> Self {
        Self { tol: T::CD_TOL, kkt_tol: T::KKT_TOL, max_iter: 100_000 }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::for_scalar::<f64>()
    }
}

/// Solution of one equation at one penalty, on the solver's scale.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationFit<T: Scalar> {
    pub beta: DVector<T>,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub objective: f64,
}

impl<T: Scalar> EquationFit<T> {
    pub fn support(&self) -> Vec<usize> {
        self.beta.iter().enumerate().filter(|(_, v)| **v != T::zero()).map(|(j, _)| j).collect()
    }
}

/// `s = c - G b`, using only the nonzero coordinates of `b`.
fn fresh_gradient<T: Scalar>(g: &DMatrix<T>, c: &DVector<T>, beta: &DVector<T>) -> DVector<T> {
    let mut s = c.clone();
    for (j, b) in beta.iter().enumerate() {
        if *b != T::zero() {
            s.axpy(-*b, &g.column(j), T::one());
        }
    }
    s
}

/// Largest violation of the optimality conditions, `2 s = lambda sign(b)` on
/// the support and `|2 s| <= lambda` off it.
pub fn kkt_residual<T: Scalar>(s: &DVector<T>, beta: &DVector<T>, lambda: f64) -> f64 {
    let mut worst = 0.0_f64;
    for (sj, bj) in s.iter().zip(beta.iter()) {
        let grad = 2.0 * sj.as_f64();
        let v = if *bj > T::zero() {
            (grad - lambda).abs()
        } else if *bj < T::zero() {
            (grad + lambda).abs()
        } else {
            (grad.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

fn objective_from<T: Scalar>(yty: T, c: &DVector<T>, s: &DVector<T>, beta: &DVector<T>, lambda: f64) -> f64 {
    let mut obj = yty.as_f64();
    for ((cj, sj), bj) in c.iter().zip(s.iter()).zip(beta.iter()) {
        if *bj != T::zero() {
            let b = bj.as_f64();
            obj += -(cj.as_f64() + sj.as_f64()) * b + lambda * b.abs();
        }
    }
    obj
}

/// Cyclic coordinate descent with active-set cycling. `warm` seeds the
/// iterate.
pub fn solve_equation<T: Scalar>(
    g: &DMatrix<T>,
    c: &DVector<T>,
    yty: T,
    lambda: f64,
    warm: Option<&DVector<T>>,
    opts: &SolverOptions,
) -> Result<EquationFit<T>> {
    let m = g.nrows();
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if c.len() != m || g.ncols() != m {
        return Err(Error::InvalidArgument("Gram and cross-product shapes disagree".into()));
    }
    let lam = T::of(lambda);
    let two = T::of(2.0);
    let mut beta = warm.cloned().unwrap_or_else(|| DVector::zeros(m));
    let mut s = fresh_gradient(g, c, &beta);
    let mut iterations = 0;
    let mut last_change = f64::INFINITY;
    let mut prev_obj = f64::INFINITY;
    let mut active: Vec<usize> = Vec::new();

    let update = |j: usize, beta: &mut DVector<T>, s: &DVector<T>| -> T {
        let gjj = g[(j, j)];
        let old = beta[j];
        let new = if gjj > T::zero() { soft_threshold(two * (s[j] + gjj * old), lam) / (two * gjj) } else { T::zero() };
        beta[j] = new;
        new - old
    };

    loop {
        let kkt = kkt_residual(&s, &beta, lambda);
        if cfg!(debug_assertions) {
            let obj = objective_from(yty, c, &s, &beta, lambda);
            let slack = 1e-8 * (1.0 + obj.abs());
            debug_assert!(obj <= prev_obj + slack, "objective increased from {prev_obj} to {obj}");
            prev_obj = obj;
        }
        if last_change < opts.tol && kkt <= opts.kkt_tol {
            let objective = objective_from(yty, c, &s, &beta, lambda);
            return Ok(EquationFit { beta, lambda, iterations, converged: true, kkt_residual: kkt, objective });
        }
        if iterations >= opts.max_iter {
            let objective = objective_from(yty, c, &s, &beta, lambda);
            if !objective.is_finite() {
                return Err(Error::NonFinite("lasso objective".into()));
            }
            return Ok(EquationFit { beta, lambda, iterations, converged: false, kkt_residual: kkt, objective });
        }

        // full sweep keeps the whole gradient current
        let mut change = 0.0_f64;
        for j in 0..m {
            let d = update(j, &mut beta, &s);
            if d != T::zero() {
                s.axpy(-d, &g.column(j), T::one());
                change = change.max(d.abs().as_f64());
            }
        }
        iterations += 1;
        last_change = change;

        // cycle on the support, tracking the gradient there only
        active.clear();
        active.extend((0..m).filter(|&j| beta[j] != T::zero()));
        if change >= opts.tol && !active.is_empty() {
            // contiguous copy of G restricted to the support
            let k = active.len();
            let ga = DMatrix::from_fn(k, k, |r, q| g[(active[r], active[q])]);
            let mut sa = DVector::from_fn(k, |r, _| s[active[r]]);
            let mut ba = DVector::from_fn(k, |r, _| beta[active[r]]);
            while iterations < opts.max_iter {
                let mut change = 0.0_f64;
                for q in 0..k {
                    let gqq = ga[(q, q)];
                    let old = ba[q];
                    let new = soft_threshold(two * (sa[q] + gqq * old), lam) / (two * gqq);
                    let d = new - old;
                    if d != T::zero() {
                        ba[q] = new;
                        sa.axpy(-d, &ga.column(q), T::one());
                        change = change.max(d.abs().as_f64());
                    }
                }
                iterations += 1;
                last_change = change;
                if change < opts.tol {
                    break;
                }
            }
            for (r, &j) in active.iter().enumerate() {
                beta[j] = ba[r];
            }
        }
        s = fresh_gradient(g, c, &beta);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lasso gradient".into()));
        }
    }
}

/// Penalty from the deviation-bound rate:
/// `tau* (eps + ln(T n^2 p))^{2/alpha} sqrt((eps + ln(n^2 p)) / T)`.
pub fn theoretical_lambda(t_eff: usize, n: usize, p: usize, epsilon: f64, tau_star: f64, alpha: f64) -> Result<f64> {
    if t_eff == 0 || n == 0 || p == 0 || !(epsilon > 0.0) || !(tau_star > 0.0) || !(alpha > 0.0) {
        return Err(Error::InvalidArgument("theoretical lambda needs positive T, n, p, epsilon, tau*, alpha".into()));
    }
    let (t, n, p) = (t_eff as f64, n as f64, p as f64);
    let inner = epsilon + (n * n * p).ln();
    if !(t > inner) {
        return Err(Error::SideCondition { what: "T > eps + ln(n^2 p)".into(), lhs: t, rhs: inner });
    }
    Ok(tau_star * (epsilon + (t * n * n * p).ln()).powf(2.0 / alpha) * (inner / t).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOptions {
    pub grid: usize,
    /// `lambda_min / lambda_max`.
    pub ratio: f64,
    /// Stop descending once a fit has at least this many nonzeros. `None`
    /// means `N / 2`: closer to saturation the in-sample RSS collapses and
    /// BIC starts rewarding interpolation.
    pub max_active: Option<usize>,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { grid: 100, ratio: 1e-3, max_active: None }
    }
}

/// Fits along a descending log-spaced penalty grid with warm starts.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationPath<T: Scalar> {
    pub lambdas: Vec<f64>,
    pub fits: Vec<EquationFit<T>>,
    pub rss: Vec<f64>,
    pub bic: Vec<f64>,
}

pub fn lambda_grid(lambda_max: f64, grid: usize, ratio: f64) -> Vec<f64> {
    if grid <= 1 {
        return vec![lambda_max];
    }
    (0..grid)
        .map(|k| lambda_max * ratio.powf(k as f64 / (grid - 1) as f64))
        .collect()
}

/// Residual sum of squares of `b` (raw scale) for equation `eq`.
pub fn rss<T: Scalar>(design: &DesignMatrices<T>, eq: usize, beta: &DVector<T>) -> f64 {
    let mut r = design.y.column(eq).into_owned();
    for (j, b) in beta.iter().enumerate() {
        if *b != T::zero() {
            r.axpy(-*b, &design.x.column(j), T::one());
        }
    }
    r.iter().map(|v| v.as_f64() * v.as_f64()).sum()
}

/// `N ln(RSS / N) + df ln N`.
pub fn bic_score(n_eff: usize, rss: f64, df: usize) -> f64 {
    let n = n_eff as f64;
    n * (rss / n).ln() + df as f64 * n.ln()
}

fn to_raw<T: Scalar>(gram: &GramCache<T>, beta: &DVector<T>) -> DVector<T> {
    match &gram.scale {
        Some(s) => beta.component_div(s),
        None => beta.clone(),
    }
}

pub fn solve_path<T: Scalar>(
    design: &DesignMatrices<T>,
    gram: &GramCache<T>,
    eq: usize,
    path: &PathOptions,
    opts: &SolverOptions,
) -> Result<RegularizationPath<T>> {
    if path.grid == 0 || !(path.ratio > 0.0 && path.ratio <= 1.0) {
        return Err(Error::InvalidArgument("path needs grid >= 1 and ratio in (0, 1]".into()));
    }
    let n_eff = gram.n_eff;
    let cap = path.max_active.unwrap_or((n_eff / 2).max(1));
    let c = gram.c.column(eq).into_owned();
    let mut out = RegularizationPath { lambdas: vec![], fits: vec![], rss: vec![], bic: vec![] };
    let mut warm: Option<DVector<T>> = None;
    for lam in lambda_grid(gram.lambda_max(eq), path.grid, path.ratio) {
        let fit = solve_equation(&gram.g, &c, gram.yty[eq], lam, warm.as_ref(), opts)?;
        let df = fit.support().len();
        let r = rss(design, eq, &to_raw(gram, &fit.beta));
        warm = Some(fit.beta.clone());
        out.lambdas.push(lam);
        out.rss.push(r);
        out.bic.push(bic_score(n_eff, r, df));
        out.fits.push(fit);
        if df >= cap {
            break;
        }
    }
    Ok(out)
}

/// Index of the BIC minimizer; ties go to the larger penalty.
pub fn bic_select<T: Scalar>(path: &RegularizationPath<T>) -> Result<usize> {
    if path.fits.is_empty() {
        return Err(Error::InvalidArgument("empty regularization path".into()));
    }
    let mut best: Option<usize> = None;
    for (k, b) in path.bic.iter().enumerate() {
        if !b.is_finite() {
            continue;
        }
        if best.is_none_or(|i| *b < path.bic[i]) {
            best = Some(k);
        }
    }
    best.ok_or_else(|| Error::DegeneratePath("every grid point has zero residual sum of squares".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PenaltyStrategy {
    Bic { grid: usize, ratio: f64, max_active: Option<usize> },
    Fixed { lambda: f64 },
    /// `safety * theoretical_lambda(...)`.
    Theoretical { epsilon: f64, tau_star: f64, alpha: f64, safety: f64 },
}

impl PenaltyStrategy {
    pub fn bic() -> Self {
        let d = PathOptions::default();
        PenaltyStrategy::Bic { grid: d.grid, ratio: d.ratio, max_active: d.max_active }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationFailure {
    pub equation: usize,
    pub message: String,
}

/// Equation-wise fit of a whole system, coefficients on the raw scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit<T: Scalar> {
    /// `np x n`; column `i` is equation `i`.
    pub beta: DMatrix<T>,
    pub lambda: Vec<f64>,
    pub active_sets: Vec<Vec<usize>>,
    pub iterations: Vec<usize>,
    pub kkt_residual: Vec<f64>,
    pub converged: Vec<bool>,
    pub failures: Vec<EquationFailure>,
}

impl<T: Scalar> LassoFit<T> {
    pub fn all_converged(&self) -> bool {
        self.failures.is_empty() && self.converged.iter().all(|c| *c)
    }

    pub fn max_kkt_residual(&self) -> f64 {
        self.kkt_residual.iter().cloned().fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FitDoc::from_fit(self))?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquationDoc {
    pub lambda: f64,
    pub nonzeros: Vec<(usize, f64)>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDoc {
    pub width: usize,
    pub equations: Vec<EquationDoc>,
    pub failures: Vec<EquationFailure>,
}

impl FitDoc {
    pub fn from_fit<T: Scalar>(fit: &LassoFit<T>) -> Self {
        let equations = (0..fit.beta.ncols())
            .map(|i| EquationDoc {
                lambda: fit.lambda[i],
                nonzeros: fit.active_sets[i].iter().map(|&j| (j, fit.beta[(j, i)].as_f64())).collect(),
                kkt_residual: fit.kkt_residual[i],
                iterations: fit.iterations[i],
                converged: fit.converged[i],
            })
            .collect();
        Self { width: fit.beta.nrows(), equations, failures: fit.failures.clone() }
    }

    /// Dense `np x n` coefficient matrix.
    pub fn beta(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.width, self.equations.len());
        for (i, e) in self.equations.iter().enumerate() {
            for &(j, v) in &e.nonzeros {
                b[(j, i)] = v;
            }
        }
        b
    }
}

struct EqResult<T: Scalar> {
    beta: DVector<T>,
    lambda: f64,
    iterations: usize,
    kkt: f64,
    converged: bool,
}

fn fit_one<T: Scalar>(
    design: &DesignMatrices<T>,
    gram: &GramCache<T>,
    eq: usize,
    strategy: &PenaltyStrategy,
    opts: &SolverOptions,
) -> Result<EqResult<T>> {
    let c = gram.c.column(eq).into_owned();
    let fit = match *strategy {
        PenaltyStrategy::Fixed { lambda } => solve_equation(&gram.g, &c, gram.yty[eq], lambda, None, opts)?,
        PenaltyStrategy::Theoretical { epsilon, tau_star, alpha, safety } => {
            let lam = safety * theoretical_lambda(gram.n_eff, design.n, design.p, epsilon, tau_star, alpha)?;
            solve_equation(&gram.g, &c, gram.yty[eq], lam, None, opts)?
        }
        PenaltyStrategy::Bic { grid, ratio, max_active } => {
            let path = solve_path(design, gram, eq, &PathOptions { grid, ratio, max_active }, opts)?;
            let k = bic_select(&path)?;
            path.fits.into_iter().nth(k).expect("index from bic_select")
        }
    };
    Ok(EqResult {
        beta: to_raw(gram, &fit.beta),
        lambda: fit.lambda,
        iterations: fit.iterations,
        kkt: fit.kkt_residual,
        converged: fit.converged,
    })
}

/// Fits every equation independently (in parallel); results are assembled
/// by equation index so the output does not depend on scheduling.
pub fn fit_all_equations<T: Scalar>(
    design: &DesignMatrices<T>,
    gram: &GramCache<T>,
    strategy: &PenaltyStrategy,
    opts: &SolverOptions,
) -> LassoFit<T> {
    let n = design.y.ncols();
    let results: Vec<Result<EqResult<T>>> =
        (0..n).into_par_iter().map(|i| fit_one(design, gram, i, strategy, opts)).collect();
    let m = design.width();
    let mut fit = LassoFit {
        beta: DMatrix::zeros(m, n),
        lambda: vec![f64::NAN; n],
        active_sets: vec![vec![]; n],
        iterations: vec![0; n],
        kkt_residual: vec![f64::NAN; n],
        converged: vec![false; n],
        failures: vec![],
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => {
                fit.active_sets[i] = (0..m).filter(|&j| e.beta[j] != T::zero()).collect();
                fit.beta.set_column(i, &e.beta);
                fit.lambda[i] = e.lambda;
                fit.iterations[i] = e.iterations;
                fit.kkt_residual[i] = e.kkt;
                fit.converged[i] = e.converged;
            }
            Err(e) => fit.failures.push(EquationFailure { equation: i, message: e.to_string() }),
        }
    }
    fit
}

/// Convenience wrapper: design, Gram cache and fit in one call.
pub fn fit_panel<T: Scalar>(
    panel: &TimeSeriesPanel<T>,
    p: usize,
    strategy: &PenaltyStrategy,
    standardize: bool,
) -> Result<(DesignMatrices<T>, LassoFit<T>)> {
    let design = build_design(panel, p)?;
    let gram = GramCache::new(&design, standardize);
    let fit = fit_all_equations(&design, &gram, strategy, &SolverOptions::for_scalar::<T>());
    Ok((design, fit))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleFit {
    pub beta: DMatrix<f64>,
    /// Whether the restricted design of each equation was rank deficient.
    pub rank_deficient: Vec<bool>,
}

/// Least squares restricted to the given support of each equation.
pub fn oracle_fit<T: Scalar>(design: &DesignMatrices<T>, supports: &[Vec<usize>]) -> Result<OracleFit> {
    let n = design.y.ncols();
    if supports.len() != n {
        return Err(Error::InvalidArgument(format!("need {n} supports, got {}", supports.len())));
    }
    let m = design.width();
    let mut beta = DMatrix::zeros(m, n);
    let mut rank_deficient = vec![false; n];
    for (i, s) in supports.iter().enumerate() {
        if s.iter().any(|&j| j >= m) {
            return Err(Error::InvalidArgument(format!("support of equation {i} exceeds width {m}")));
        }
        if s.is_empty() {
            continue;
        }
        let xs = DMatrix::from_fn(design.n_eff(), s.len(), |r, k| design.x[(r, s[k])].as_f64());
        let y = DVector::from_fn(design.n_eff(), |r, _| design.y[(r, i)].as_f64());
        let (b, def) = lstsq_min_norm(&xs, &y);
        rank_deficient[i] = def;
        for (k, &j) in s.iter().enumerate() {
            beta[(j, i)] = b[k];
        }
    }
    Ok(OracleFit { beta, rank_deficient })
}

/// Regressor vector `(y_T', y_{T-1}', ..., y_{T-p+1}')'` at the end of a panel.
pub fn last_regressors<T: Scalar>(panel: &TimeSeriesPanel<T>, p: usize) -> Result<DVector<T>> {
    let (t_len, n) = (panel.len(), panel.n());
    if p == 0 || t_len < p {
        return Err(Error::InsufficientData(format!("forecast needs {p} trailing rows, panel has {t_len}")));
    }
    Ok(DVector::from_fn(n * p, |col, _| {
        let (k, j) = (col / n + 1, col % n);
        panel.data[(t_len - k, j)]
    }))
}

/// One-step forecast `y_{T+1} = beta' x_{T+1}` from stacked coefficients.
pub fn forecast<T: Scalar>(beta: &DMatrix<T>, panel: &TimeSeriesPanel<T>, p: usize) -> Result<DVector<T>> {
    let x = last_regressors(panel, p)?;
    if beta.nrows() != x.len() {
        return Err(Error::InvalidArgument(format!(
            "coefficients have {} rows, regressors {}",
            beta.nrows(),
            x.len()
        )));
    }
    Ok(beta.tr_mul(&x))
}
