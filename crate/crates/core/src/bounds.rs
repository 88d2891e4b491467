//! Evaluators for the probabilistic events and error bounds that back the
//! lasso theory: deviation bound, Gram concentration, restricted strong
//! convexity, the oracle inequalities, martingale concentration and the
//! Weibull tail bounds.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{DesignMatrices, GramCache};
use crate::linalg::{max_abs_diff, symmetric_eigen_range};
use crate::scalar::Scalar;
use crate::var::{ensure_stable, VarSpec, DEFAULT_STABILITY_MARGIN};

const GRAM_SERIES_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationBoundReport {
    /// `2 |X'U_i / N|_inf` per equation.
    pub statistic: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `lambda_i >= statistic_i`.
    pub holds: Vec<bool>,
    pub joint: bool,
}

impl DeviationBoundReport {
    fn from_parts(statistic: Vec<f64>, lambda: Vec<f64>) -> Self {
        let holds: Vec<bool> = statistic.iter().zip(&lambda).map(|(s, l)| *l >= *s).collect();
        let joint = holds.iter().all(|h| *h);
        Self { statistic, lambda, holds, joint }
    }
}

fn broadcast(lambda: &[f64], n: usize) -> Result<Vec<f64>> {
    match lambda.len() {
        1 => Ok(vec![lambda[0]; n]),
        l if l == n => Ok(lambda.to_vec()),
        l => Err(Error::InvalidArgument(format!("need 1 or {n} penalties, got {l}"))),
    }
}

/// Deviation-bound statistic computed from the innovations
/// `U = Y - 1 A0' - X B*` of the true model.
pub fn deviation_bound_check<T: Scalar>(
    design: &DesignMatrices<T>,
    true_spec: &VarSpec<T>,
    lambda: &[f64],
) -> Result<DeviationBoundReport> {
    let n = design.y.ncols();
    if true_spec.n() != n || true_spec.p() != design.p {
        return Err(Error::InvalidArgument("true model does not match the design dimensions".into()));
    }
    let lambda = broadcast(lambda, n)?;
    let mut u = &design.y - &design.x * true_spec.stacked();
    for (i, mut col) in u.column_iter_mut().enumerate() {
        col.add_scalar_mut(-true_spec.intercept()[i]);
    }
    let grad = design.x.tr_mul(&u) * T::of(2.0 / design.n_eff() as f64);
    let stat = grad.column_iter().map(|c| c.iter().map(|v| v.abs().as_f64()).fold(0.0, f64::max)).collect();
    Ok(DeviationBoundReport::from_parts(stat, lambda))
}

/// Same statistic from cached moments, `2 |c_i - G b*_i|_inf` (zero intercept only).
pub fn deviation_bound_from_gram<T: Scalar>(
    gram: &GramCache<T>,
    beta_star: &DMatrix<T>,
    lambda: &[f64],
) -> Result<DeviationBoundReport> {
    if gram.scale.is_some() {
        return Err(Error::InvalidArgument("deviation bound needs an unstandardized Gram cache".into()));
    }
    let n = gram.c.ncols();
    let lambda = broadcast(lambda, n)?;
    let s = &gram.c - &gram.g * beta_star;
    let stat = s
        .column_iter()
        .map(|c| c.iter().map(|v| 2.0 * v.abs().as_f64()).fold(0.0, f64::max))
        .collect();
    Ok(DeviationBoundReport::from_parts(stat, lambda))
}

/// `pi_1(eps) = 10 e^{-eps}`.
pub fn pi1(epsilon: f64) -> f64 {
    10.0 * (-epsilon).exp()
}

/// Population Gram matrix of the lag vector `(y_{t-1}', ..., y_{t-p}')'`:
/// block `(k, l)` is `Gamma_y(l - k)` with
/// `Gamma_y(h) = sum_j Phi_{j+h} Sigma Phi_j'`, summed until the increment's
/// max-norm drops below `tol`.
pub fn population_gram<T: Scalar>(spec: &VarSpec<T>, sigma: &DMatrix<T>, p: usize, tol: f64) -> Result<DMatrix<f64>> {
    let n = spec.n();
    if sigma.shape() != (n, n) {
        return Err(Error::InvalidArgument(format!("sigma must be {n}x{n}")));
    }
    if p == 0 {
        return Err(Error::InvalidArgument("lag order p must be at least 1".into()));
    }
    if sigma.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite { what: "innovation covariance".into() });
    }
    ensure_stable(spec, DEFAULT_STABILITY_MARGIN)?;
    let a: Vec<DMatrix<f64>> = spec.coeffs().iter().map(|m| m.map(|v| v.as_f64())).collect();
    let sig = sigma.map(|v| v.as_f64());
    // Phi_0 .. Phi_{p-1} up front, then extend lazily
    let mut phis: Vec<DMatrix<f64>> = vec![DMatrix::identity(n, n)];
    let next_phi = |phis: &Vec<DMatrix<f64>>| -> DMatrix<f64> {
        let k = phis.len();
        let mut phi = DMatrix::zeros(n, n);
        for j in 1..=a.len().min(k) {
            phi.gemm(1.0, &phis[k - j], &a[j - 1], 1.0);
        }
        phi
    };
    while phis.len() < p {
        let phi = next_phi(&phis);
        phis.push(phi);
    }
    let mut gy: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, n); p];
    let mut j = 0;
    loop {
        let left = &phis[j] * &sig;
        let mut inc = 0.0_f64;
        for (h, g) in gy.iter_mut().enumerate() {
            let term = &phis[j + h] * &left.transpose();
            // term = Phi_{j+h} Sigma Phi_j'
            inc = inc.max(term.amax());
            *g += term;
        }
        if !inc.is_finite() {
            return Err(Error::Divergence("autocovariance series overflowed".into()));
        }
        if inc < tol {
            break;
        }
        j += 1;
        if j >= GRAM_SERIES_CAP {
            return Err(Error::Divergence(format!("autocovariance series not below {tol:e} after {GRAM_SERIES_CAP} terms")));
        }
        let phi = next_phi(&phis);
        phis.push(phi);
    }
    let mut gamma = DMatrix::zeros(n * p, n * p);
    for k in 0..p {
        for l in 0..p {
            let blk = if l >= k { gy[l - k].clone() } else { gy[k - l].transpose() };
            gamma.view_mut((k * n, l * n), (n, n)).copy_from(&blk);
        }
    }
    // the series is symmetric in exact arithmetic
    let sym = (&gamma + gamma.transpose()) * 0.5;
    Ok(sym)
}

/// Expands the Gram matrix of one `b`-dimensional block into the lag-major
/// Gram matrix of `blocks` independent copies of it.
pub fn embed_block_gram(block: &DMatrix<f64>, b: usize, blocks: usize, p: usize) -> Result<DMatrix<f64>> {
    if block.shape() != (b * p, b * p) {
        return Err(Error::InvalidArgument(format!("block Gram must be {0}x{0}", b * p)));
    }
    let n = b * blocks;
    let mut out = DMatrix::zeros(n * p, n * p);
    for k in 0..p {
        for l in 0..p {
            for blk in 0..blocks {
                for i in 0..b {
                    for j in 0..b {
                        out[(k * n + blk * b + i, l * n + blk * b + j)] = block[(k * b + i, l * b + j)];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Constants of the Gram concentration bound. They are existential in the
/// theory, so every report echoes the values used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramConstants {
    pub xi: f64,
    pub tau: f64,
    pub alpha: f64,
    pub b1: f64,
    /// Shared slot for the constant named `b_8` / `b_5` in different places.
    pub b8: f64,
    pub c_phi: f64,
    pub a2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Default for GramConstants {
    fn default() -> Self {
        Self { xi: 1.0, tau: 1.0, alpha: 1.0, b1: 1.0, b8: 1.0, c_phi: 1.0, a2: 1.0, gamma1: 1.0, gamma2: 1.0 }
    }
}

/// `pi_2(a)` of the Gram concentration inequality.
pub fn pi2(a: f64, n: usize, p: usize, t: usize, k: &GramConstants) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("pi2 needs a > 0, got {a}")));
    }
    let (n, p, t) = (n as f64, p as f64, t as f64);
    let g = k.gamma1.min(k.gamma2);
    let np_xi = (n * p).powf(k.xi);
    let first = 2.0 / (np_xi * t.powf(1.0 + k.xi)) + 8.0 / (np_xi * t.powf(k.xi));
    let tail = k.b1 * (-(k.c_phi.min(k.a2)) * (t / 2.0).powf(g)).exp()
        + k.b8 * (-2.0 * k.gamma1 * k.c_phi * (t / 2.0).powf(k.gamma1)).exp();
    Ok(first + n * n / a * tail)
}

/// Upper limit on `p` for the Gram concentration bound.
pub fn gram_p_limit(t: usize, k: &GramConstants) -> f64 {
    let g = k.gamma1.min(k.gamma2);
    (t as f64).powf(g) / ((2.0 / (g + 1.0)) * (2.0 + 1.4 / (2.0 * k.gamma1 * k.c_phi).min(k.a2)))
}

/// Smallest admissible deviation level `a`.
pub fn gram_a_floor(n: usize, p: usize, t: usize, k: &GramConstants) -> f64 {
    let e = 1.0 + 2.0 / k.alpha;
    (2.0 * (1.0 + k.xi).powf(e) * k.tau * k.tau * ((n * p * t) as f64).ln().powf(e) / t as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub a: f64,
    pub t_eff: usize,
    pub deviations: Vec<f64>,
    pub exceedance_frequency: f64,
    pub pi2: f64,
    pub p_limit: f64,
    pub a_floor: f64,
    /// Both side conditions hold; otherwise the comparison is out of regime.
    pub in_regime: bool,
    pub sigma_gamma_sq: f64,
    pub constants: GramConstants,
}

/// `|Gamma_T - Gamma|_max`.
pub fn gram_deviation<T: Scalar>(gram_t: &DMatrix<T>, gamma: &DMatrix<f64>) -> f64 {
    max_abs_diff(&gram_t.map(|v| v.as_f64()), gamma)
}

/// Compares the empirical exceedance frequency of `|Gamma_T - Gamma|_max > a`
/// over replications with `pi_2(a)`.
pub fn gram_concentration_check(
    deviations: &[f64],
    gamma: &DMatrix<f64>,
    a: f64,
    n: usize,
    p: usize,
    t_eff: usize,
    k: &GramConstants,
) -> Result<GramReport> {
    if deviations.is_empty() {
        return Err(Error::InvalidArgument("no replications".into()));
    }
    let exceed = deviations.iter().filter(|d| **d > a).count() as f64 / deviations.len() as f64;
    let p_limit = gram_p_limit(t_eff, k);
    let a_floor = gram_a_floor(n, p, t_eff, k);
    let pi2 = if a > 0.0 { pi2(a, n, p, t_eff, k)? } else { f64::INFINITY };
    Ok(GramReport {
        a,
        t_eff,
        deviations: deviations.to_vec(),
        exceedance_frequency: exceed,
        pi2,
        p_limit,
        a_floor,
        in_regime: (p as f64) < p_limit && a >= a_floor,
        sigma_gamma_sq: symmetric_eigen_range(gamma).0,
        constants: *k,
    })
}

/// Max-norm threshold `sigma^2 eta^q / (64 R_q)` under which restricted
/// strong convexity is guaranteed.
pub fn rsc_threshold(sigma_gamma_sq: f64, eta: f64, q: f64, r_q: f64) -> f64 {
    let eq = if q == 0.0 { 1.0 } else { eta.powf(q) };
    sigma_gamma_sq * eq / (64.0 * r_q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeGenerator {
    Sparse,
    Dense,
    ErrorShaped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeSample {
    pub generator: ConeGenerator,
    pub norm: f64,
    /// `3 |D_M|_1 + 4 |b*_{M-perp}|_1 - |D_{M-perp}|_1 >= 0` certifies membership.
    pub cone_margin: f64,
    /// `D' Gamma_T D - (s/2)|D|^2 + (s/2) R_q eta^{2-q}`, scaled by `1/|D|^2`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RscReport {
    pub q: f64,
    pub eta: f64,
    pub r_q: f64,
    pub sigma_gamma_sq: f64,
    pub threshold: f64,
    /// `|Gamma_T - Gamma|_max` if a population Gram was supplied.
    pub max_deviation: Option<f64>,
    pub hypothesis_holds: Option<bool>,
    pub samples: Vec<ConeSample>,
    pub min_slack: f64,
    pub all_in_cone: bool,
    pub pass: bool,
}

/// Inputs to [`rsc_check`] for one equation.
pub struct RscInput<'a> {
    pub gram_t: &'a DMatrix<f64>,
    pub beta_star: &'a DVector<f64>,
    pub q: f64,
    pub eta: f64,
    pub sigma_gamma_sq: f64,
    pub r_q: f64,
    pub population: Option<&'a DMatrix<f64>>,
    /// Optional estimation error `b_hat - b*` to shape one generator.
    pub error: Option<&'a DVector<f64>>,
}

fn l1(v: impl Iterator<Item = f64>) -> f64 {
    v.map(f64::abs).sum()
}

/// Samples directions from the cone around `b*` with three generators and
/// evaluates the restricted strong convexity inequality on each.
pub fn rsc_check(input: &RscInput<'_>, samples: usize, seed: u64) -> Result<RscReport> {
    let m = input.beta_star.len();
    if input.gram_t.shape() != (m, m) {
        return Err(Error::InvalidArgument("Gram matrix and coefficient vector disagree".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("rsc_check needs at least one sample".into()));
    }
    if !(0.0..1.0).contains(&input.q) || !(input.eta >= 0.0) || !(input.r_q > 0.0) || !(input.sigma_gamma_sq > 0.0) {
        return Err(Error::InvalidArgument("rsc_check needs q in [0,1), eta >= 0, R_q > 0, sigma^2 > 0".into()));
    }
    let b = input.beta_star;
    let on: Vec<usize> = (0..m).filter(|&j| b[j].abs() > input.eta).collect();
    let off: Vec<usize> = (0..m).filter(|&j| b[j].abs() <= input.eta).collect();
    let off_mass = 4.0 * l1(off.iter().map(|&j| b[j]));
    let half = input.sigma_gamma_sq / 2.0;
    let offset = half * input.r_q * input.eta.powf(2.0 - input.q);
    let threshold = rsc_threshold(input.sigma_gamma_sq, input.eta, input.q, input.r_q);
    let max_deviation = input.population.map(|g| max_abs_diff(input.gram_t, g));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale_ref = 1.0 + b.norm();

    let mut out = Vec::with_capacity(samples);
    for s in 0..samples {
        let generator = match s % 3 {
            0 => ConeGenerator::Sparse,
            1 => ConeGenerator::Dense,
            _ => ConeGenerator::ErrorShaped,
        };
        let mut d = DVector::<f64>::zeros(m);
        for &j in &on {
            d[j] = rng.sample(StandardNormal);
        }
        let on_l1 = l1(on.iter().map(|&j| d[j]));
        let budget = 3.0 * on_l1 + off_mass;
        match generator {
            ConeGenerator::Sparse => {
                if on.is_empty() && !off.is_empty() {
                    // only the slack from small coefficients is available
                    let j = off[rng.random_range(0..off.len())];
                    d[j] = budget * rng.random::<f64>();
                }
            }
            ConeGenerator::Dense => {
                if !off.is_empty() {
                    let mut w: Vec<f64> = off.iter().map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let wl1 = l1(w.iter().copied()).max(f64::MIN_POSITIVE);
                    let u: f64 = rng.random::<f64>().sqrt();
                    for x in &mut w {
                        *x *= u * budget / wl1;
                    }
                    for (x, &j) in w.iter().zip(&off) {
                        d[j] = *x;
                    }
                }
            }
            ConeGenerator::ErrorShaped => {
                if let Some(e) = input.error.filter(|e| e.len() == m && e.norm() > 0.0) {
                    d.copy_from(e);
                    for x in d.iter_mut() {
                        *x *= 1.0 + 0.1 * rng.sample::<f64, _>(StandardNormal);
                    }
                    let on_l1 = l1(on.iter().map(|&j| d[j]));
                    let off_l1 = l1(off.iter().map(|&j| d[j]));
                    let budget = 3.0 * on_l1 + off_mass;
                    if off_l1 > budget {
                        for &j in &off {
                            d[j] *= budget / off_l1;
                        }
                    }
                } else if !off.is_empty() {
                    // spiky: the whole off-support budget on a few coordinates,
                    // which maximizes |D|_1 / |D|_2 pressure on the Gram matrix
                    let spikes = 1 + rng.random_range(0..3.min(off.len()));
                    for _ in 0..spikes {
                        let j = off[rng.random_range(0..off.len())];
                        d[j] += if rng.random::<bool>() { 1.0 } else { -1.0 } * budget / spikes as f64;
                    }
                    let off_l1 = l1(off.iter().map(|&j| d[j]));
                    if off_l1 > budget {
                        for &j in &off {
                            d[j] *= budget / off_l1;
                        }
                    }
                }
            }
        }
        // random overall scale; the cone is star-shaped only for the on-part,
        // so rescale before the membership test
        let target = scale_ref * 10f64.powf(rng.random_range(-3.0..3.0));
        let nrm = d.norm();
        if nrm > 0.0 && generator != ConeGenerator::ErrorShaped {
            let f = target / nrm;
            // scaling the on-part keeps membership whenever the off-part is
            // within 3 |D_M|_1; otherwise keep the original scale
            let off_l1 = l1(off.iter().map(|&j| d[j]));
            let on_l1 = l1(on.iter().map(|&j| d[j]));
            if f * off_l1 <= 3.0 * f * on_l1 + off_mass {
                d *= f;
            }
        }
        let norm = d.norm();
        let on_l1 = l1(on.iter().map(|&j| d[j]));
        let off_l1 = l1(off.iter().map(|&j| d[j]));
        let cone_margin = 3.0 * on_l1 + off_mass - off_l1;
        let quad = (input.gram_t * &d).dot(&d);
        let slack = if norm > 0.0 { (quad - half * norm * norm + offset) / (norm * norm) } else { f64::INFINITY };
        out.push(ConeSample { generator, norm, cone_margin, slack });
    }
    let min_slack = out.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * (1.0 + off_mass);
    let all_in_cone = out.iter().all(|s| s.cone_margin >= -tol);
    Ok(RscReport {
        q: input.q,
        eta: input.eta,
        r_q: input.r_q,
        sigma_gamma_sq: input.sigma_gamma_sq,
        threshold,
        max_deviation,
        hypothesis_holds: max_deviation.map(|d| d <= threshold),
        samples: out,
        min_slack,
        all_in_cone,
        pass: all_in_cone && min_slack >= -1e-12,
    })
}

/// `(44 + 2 lambda) R_q (lambda / sigma^2)^{2-q}`.
pub fn l2_error_bound(lambda: f64, r_q: f64, q: f64, sigma_gamma_sq: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !(r_q >= 0.0) || !(sigma_gamma_sq > 0.0) || !(0.0..1.0).contains(&q) {
        return Err(Error::InvalidArgument("l2 bound needs lambda, R_q >= 0, sigma^2 > 0, q in [0,1)".into()));
    }
    Ok((44.0 + 2.0 * lambda) * r_q * (lambda / sigma_gamma_sq).powf(2.0 - q))
}

/// `12 |b*|_1 lambda`.
pub fn prediction_error_bound(lambda: f64, beta_star_l1: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !(beta_star_l1 >= 0.0) {
        return Err(Error::InvalidArgument("prediction bound needs nonnegative inputs".into()));
    }
    Ok(12.0 * beta_star_l1 * lambda)
}

/// `2n exp(-T x^2 / (2M^2 + xM)) + 8 n T exp(-(M/tau)^alpha)`.
pub fn martingale_tail_bound(n: usize, t: usize, x: f64, m: f64, alpha: f64, tau: f64) -> Result<f64> {
    if n == 0 || t == 0 || !(x > 0.0) || !(m > 0.0) || !(alpha > 0.0) || !(tau > 0.0) {
        return Err(Error::InvalidArgument("martingale bound needs positive inputs".into()));
    }
    let (nf, tf) = (n as f64, t as f64);
    Ok(2.0 * nf * (-tf * x * x / (2.0 * m * m + x * m)).exp() + 8.0 * nf * tf * (-(m / tau).powf(alpha)).exp())
}

/// Minimum of [`martingale_tail_bound`] over a log grid of truncation levels.
pub fn martingale_tail_bound_opt(n: usize, t: usize, x: f64, alpha: f64, tau: f64) -> Result<(f64, f64)> {
    let mut best = (f64::INFINITY, f64::NAN);
    for k in 0..=400 {
        let m = tau * 10f64.powf(-2.0 + 6.0 * k as f64 / 400.0);
        let b = martingale_tail_bound(n, t, x, m, alpha, tau)?;
        if b < best.0 {
            best = (b, m);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorollaryBound {
    /// `tau (eps + ln(nT))^{1/alpha} sqrt(eps + ln n) / sqrt(T)`.
    pub x_threshold: f64,
    pub premises_hold: bool,
    /// `10 e^{-eps}`.
    pub bound: f64,
    /// First-part bound at the truncation `M = x sqrt(T / (eps + ln n))`.
    pub explicit: f64,
}

/// Simplified `10 e^{-eps}` form of the martingale bound with its premises
/// `x > threshold` and `T > eps + ln n`.
pub fn martingale_corollary(n: usize, t: usize, x: f64, epsilon: f64, alpha: f64, tau: f64) -> Result<CorollaryBound> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let (nf, tf) = (n as f64, t as f64);
    let ln_n = nf.ln();
    let x_threshold = tau * (epsilon + (nf * tf).ln()).powf(1.0 / alpha) * (epsilon + ln_n).sqrt() / tf.sqrt();
    let premises_hold = x > x_threshold && tf > epsilon + ln_n;
    let m = x * (tf / (epsilon + ln_n)).sqrt();
    let explicit = martingale_tail_bound(n, t, x, m, alpha, tau)?;
    Ok(CorollaryBound { x_threshold, premises_hold, bound: 10.0 * (-epsilon).exp(), explicit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeibullSums {
    /// `sum_{i>=n} e^{-b i^a}`.
    pub single_exact: f64,
    /// `2 n e^{-b n^a}`.
    pub single_bound: f64,
    /// `sum_{i>=n} sum_{j>=0} e^{-b i^a - b (i+j)^a}`.
    pub double_exact: f64,
    /// `(2 + 1/a) n^2 e^{-2 b n^a}`.
    pub double_bound: f64,
}

/// Weibull tail sums and their closed-form bounds. The exact sums run until
/// the summand is below `1e-300` or `1e-18` of the running total.
pub fn weibull_tail_sums(a: f64, b: f64, n: usize) -> Result<WeibullSums> {
    if !(a > 0.0 && a <= 1.0) || !(b > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!("need 0 < a <= 1, b > 0, n >= 1 (got a={a}, b={b}, n={n})")));
    }
    // terms e^{-b i^a} for i = n.. until negligible
    let mut terms = Vec::new();
    let mut i = n;
    loop {
        let v = (-b * (i as f64).powf(a)).exp();
        terms.push(v);
        if v < 1e-300 || (v < 1e-18 * terms[0] && i > 2 * n) || terms.len() > 50_000_000 {
            break;
        }
        i += 1;
    }
    // tail[k] = sum_{l>=k} terms[l]
    let mut tail = vec![0.0; terms.len() + 1];
    for k in (0..terms.len()).rev() {
        tail[k] = tail[k + 1] + terms[k];
    }
    let single_exact = tail[0];
    let double_exact: f64 = terms.iter().enumerate().map(|(k, v)| v * tail[k]).sum();
    let nf = n as f64;
    let e = (-b * nf.powf(a)).exp();
    Ok(WeibullSums {
        single_exact,
        single_bound: 2.0 * nf * e,
        double_exact,
        double_bound: (2.0 + 1.0 / a) * nf * nf * e * e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedMoment {
    /// `M^p P(X >= M)`.
    pub lower: f64,
    /// `E[X^p 1{X >= M}]` in closed form.
    pub exact: f64,
    /// `(1 + p/alpha) M^p e^{-c M^alpha}`.
    pub upper: f64,
    /// `M^p e^{-c M^alpha} + (p/alpha) c^{-p/alpha} Gamma(p/alpha, c M^alpha)`.
    pub incomplete_gamma_form: f64,
}

/// Truncated moment of a Weibull variable with `P(X >= x) = exp(-c x^alpha)`.
pub fn truncated_moment(p: f64, alpha: f64, c: f64, m: f64) -> Result<TruncatedMoment> {
    if !(p >= 1.0) || !(alpha > 0.0) || !(c > 0.0) || !(m > 0.0) {
        return Err(Error::InvalidArgument("need p >= 1, alpha > 0, c > 0, M > 0".into()));
    }
    let surv = (-c * m.powf(alpha)).exp();
    let s = p / alpha;
    let upper_gamma = statrs::function::gamma::gamma_ur(s, c * m.powf(alpha)) * statrs::function::gamma::gamma(s);
    let exact = m.powf(p) * surv + s * c.powf(-s) * upper_gamma;
    Ok(TruncatedMoment {
        lower: m.powf(p) * surv,
        exact,
        upper: (1.0 + s) * m.powf(p) * surv,
        incomplete_gamma_form: exact,
    })
}
