//! Data-generating processes: Gaussian and stochastic-covariance innovations,
//! the VAR recursion, and the block-diagonal simulation design.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Weibull};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, norm_1, norm_inf, symmetric_eigen_range};
use crate::scalar::Scalar;
use crate::var::{ensure_stable, VarSpec, VarSpecDoc, DEFAULT_STABILITY_MARGIN};

/// Anything larger than this in absolute value counts as an explosive path.
pub const OVERFLOW_LIMIT: f64 = 1e150;
const SERIES_CAP: usize = 1_000_000;

pub type CustomSampler = Arc<dyn Fn(&mut ChaCha8Rng) -> f64 + Send + Sync>;

/// Law of the scalar draws that make up `v_t` and `eps_t`. All laws are
/// expected to have mean zero and unit variance.
#[derive(Clone)]
pub enum NoiseLaw {
    Gaussian,
    /// `sign * W / sqrt(Gamma(1 + 2/alpha))` with `W ~ Weibull(shape alpha)`.
    SymmetricWeibull { alpha: f64 },
    /// User-supplied sampler; the name feeds the panel fingerprint.
    Custom { name: String, sampler: CustomSampler },
}

impl fmt::Debug for NoiseLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl NoiseLaw {
    pub fn label(&self) -> String {
        match self {
            NoiseLaw::Gaussian => "gaussian".into(),
            NoiseLaw::SymmetricWeibull { alpha } => format!("symmetric-weibull({alpha})"),
            NoiseLaw::Custom { name, .. } => format!("custom({name})"),
        }
    }

    fn validate(&self) -> Result<()> {
        if let NoiseLaw::SymmetricWeibull { alpha } = self {
            if !(*alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidArgument(format!("Weibull shape must be positive, got {alpha}")));
            }
        }
        Ok(())
    }

    fn sampler(&self) -> Sampler {
        match self {
            NoiseLaw::Gaussian => Sampler::Gaussian,
            NoiseLaw::SymmetricWeibull { alpha } => {
                let scale = 1.0 / statrs::function::gamma::gamma(1.0 + 2.0 / alpha).sqrt();
                Sampler::Weibull { dist: Weibull::new(1.0, *alpha).expect("validated shape"), scale }
            }
            NoiseLaw::Custom { sampler, .. } => Sampler::Custom(sampler.clone()),
        }
    }
}

enum Sampler {
    Gaussian,
    Weibull { dist: Weibull<f64>, scale: f64 },
    Custom(CustomSampler),
}

impl Sampler {
    #[inline]
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Gaussian => rng.sample(StandardNormal),
            Sampler::Weibull { dist, scale } => {
                let w = dist.sample(rng) * scale;
                if rng.random::<bool>() {
                    w
                } else {
                    -w
                }
            }
            Sampler::Custom(f) => f(rng),
        }
    }

    fn fill<T: Scalar>(&self, rng: &mut ChaCha8Rng, out: &mut DVector<T>) {
        for v in out.iter_mut() {
            *v = T::of(self.draw(rng));
        }
    }
}

/// Innovation process `u_t`.
#[derive(Debug, Clone)]
pub enum InnovationSpec<T: Scalar> {
    /// `u_t = chol(Sigma) v_t`, `v_t` i.i.d. with the given law.
    GaussianIid { sigma: DMatrix<T>, law: NoiseLaw },
    /// `u_t = chol(H_t) v_t`, `H_{t+1} = C0 + Psi H_t Psi' + eps_t eps_t'`.
    StochasticCovariance { c0: DMatrix<T>, psi: DMatrix<T>, eps_law: NoiseLaw, v_law: NoiseLaw },
}

impl<T: Scalar> InnovationSpec<T> {
    pub fn gaussian(sigma: DMatrix<T>) -> Result<Self> {
        let s = InnovationSpec::GaussianIid { sigma, law: NoiseLaw::Gaussian };
        s.validate()?;
        Ok(s)
    }

    pub fn stochastic_covariance(c0: DMatrix<T>, psi: DMatrix<T>) -> Result<Self> {
        let s = InnovationSpec::StochasticCovariance { c0, psi, eps_law: NoiseLaw::Gaussian, v_law: NoiseLaw::Gaussian };
        s.validate()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        match self {
            InnovationSpec::GaussianIid { sigma, .. } => sigma.nrows(),
            InnovationSpec::StochasticCovariance { c0, .. } => c0.nrows(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let spd = |m: &DMatrix<T>, what: &str| -> Result<()> {
            if !m.is_square() || m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("{what} must be a finite square matrix")));
            }
            if !is_symmetric(m, 1e-12 * (1.0 + crate::linalg::max_abs(m))) || m.clone().cholesky().is_none() {
                return Err(Error::NotPositiveDefinite { what: what.into() });
            }
            Ok(())
        };
        match self {
            InnovationSpec::GaussianIid { sigma, law } => {
                law.validate()?;
                spd(sigma, "innovation covariance Sigma")
            }
            InnovationSpec::StochasticCovariance { c0, psi, eps_law, v_law } => {
                eps_law.validate()?;
                v_law.validate()?;
                spd(c0, "C0")?;
                if psi.nrows() != c0.nrows() || psi.ncols() != c0.ncols() {
                    return Err(Error::InvalidSpec("Psi and C0 must have the same shape".into()));
                }
                let prod = norm_1(psi) * norm_inf(psi);
                if !(prod < 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "stochastic covariance is not stationary: |Psi|_1 |Psi|_inf = {prod} >= 1"
                    )));
                }
                Ok(())
            }
        }
    }

    fn describe(&self) -> serde_json::Value {
        let m = |x: &DMatrix<T>| -> Vec<Vec<f64>> {
            (0..x.nrows()).map(|i| (0..x.ncols()).map(|j| x[(i, j)].as_f64()).collect()).collect()
        };
        match self {
            InnovationSpec::GaussianIid { sigma, law } => {
                serde_json::json!({"kind": "gaussian-iid", "sigma": m(sigma), "law": law.label()})
            }
            InnovationSpec::StochasticCovariance { c0, psi, eps_law, v_law } => serde_json::json!({
                "kind": "stochastic-covariance",
                "c0": m(c0),
                "psi": m(psi),
                "eps_law": eps_law.label(),
                "v_law": v_law.label(),
            }),
        }
    }
}

fn is_diagonal<T: Scalar>(m: &DMatrix<T>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == T::zero()))
}

/// Long-run mean of `H_t`: `sum_j Psi^j (C0 + I) Psi'^j`, truncated once the
/// Frobenius norm of the increment drops below `tol`. For i.i.d. innovations
/// this is just `Sigma`.
pub fn stationary_innovation_covariance<T: Scalar>(innov: &InnovationSpec<T>, tol: f64) -> Result<DMatrix<T>> {
    innov.validate()?;
    match innov {
        InnovationSpec::GaussianIid { sigma, .. } => Ok(sigma.clone()),
        InnovationSpec::StochasticCovariance { c0, psi, .. } => {
            let n = c0.nrows();
            let mut term = c0 + DMatrix::<T>::identity(n, n);
            let mut sum = term.clone();
            let psi_t = psi.transpose();
            for _ in 0..SERIES_CAP {
                term = psi * &term * &psi_t;
                sum += &term;
                if term.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Divergence("stationary covariance series overflowed".into()));
                }
                if term.norm().as_f64() < tol {
                    return Ok(sum);
                }
            }
            Err(Error::Divergence(format!("stationary covariance series not below {tol:e} after {SERIES_CAP} terms")))
        }
    }
}

/// Deterministic split of one replication seed into the `v` and `eps` streams.
pub struct InnovationStreams {
    pub v: ChaCha8Rng,
    pub eps: ChaCha8Rng,
}

impl InnovationStreams {
    pub fn new(seed: u64) -> Self {
        let mut v = ChaCha8Rng::seed_from_u64(seed);
        v.set_stream(1);
        let mut eps = ChaCha8Rng::seed_from_u64(seed);
        eps.set_stream(2);
        Self { v, eps }
    }
}

/// One step of the stochastic-covariance recursion. Returns `u_t` and
/// overwrites `h` with `H_{t+1}`. `eps` and `v` are scratch vectors that must
/// hold the draws for this step.
pub fn step_stochastic_covariance<T: Scalar>(
    h: &mut DMatrix<T>,
    c0: &DMatrix<T>,
    psi: &DMatrix<T>,
    v: &DVector<T>,
    eps: &DVector<T>,
    t: usize,
) -> Result<DVector<T>> {
    let chol = h.clone().cholesky().ok_or(Error::CholeskyFailure { t })?;
    let u = chol.l() * v;
    let n = h.nrows();
    if is_diagonal(psi) {
        for j in 0..n {
            for i in j..n {
                let val = c0[(i, j)] + psi[(i, i)] * psi[(j, j)] * h[(i, j)] + eps[i] * eps[j];
                h[(i, j)] = val;
                h[(j, i)] = val;
            }
        }
    } else {
        let mut next = psi * &*h * psi.transpose() + c0;
        next.ger(T::one(), eps, eps, T::one());
        // keep exact symmetry
        for j in 0..n {
            for i in j + 1..n {
                let s = (next[(i, j)] + next[(j, i)]) * T::of(0.5);
                next[(i, j)] = s;
                next[(j, i)] = s;
            }
        }
        *h = next;
    }
    Ok(u)
}

/// Stateful innovation generator for one path.
pub struct InnovationProcess<T: Scalar> {
    kind: ProcessKind<T>,
    streams: InnovationStreams,
    v_buf: DVector<T>,
    eps_buf: DVector<T>,
    t: usize,
}

enum ProcessKind<T: Scalar> {
    Iid { chol: DMatrix<T>, law: Sampler },
    Sc { h: DMatrix<T>, c0: DMatrix<T>, psi: DMatrix<T>, eps_law: Sampler, v_law: Sampler },
}

impl<T: Scalar> InnovationProcess<T> {
    /// Starts the process; for the stochastic-covariance model `H_0` is the
    /// stationary mean.
    pub fn new(innov: &InnovationSpec<T>, seed: u64) -> Result<Self> {
        let n = innov.n();
        let kind = match innov {
            InnovationSpec::GaussianIid { sigma, law } => {
                innov.validate()?;
                let chol = sigma
                    .clone()
                    .cholesky()
                    .ok_or(Error::NotPositiveDefinite { what: "innovation covariance Sigma".into() })?
                    .l();
                ProcessKind::Iid { chol, law: law.sampler() }
            }
            InnovationSpec::StochasticCovariance { c0, psi, eps_law, v_law } => {
                let h = stationary_innovation_covariance(innov, 1e-12)?;
                ProcessKind::Sc {
                    h,
                    c0: c0.clone(),
                    psi: psi.clone(),
                    eps_law: eps_law.sampler(),
                    v_law: v_law.sampler(),
                }
            }
        };
        Ok(Self {
            kind,
            streams: InnovationStreams::new(seed),
            v_buf: DVector::zeros(n),
            eps_buf: DVector::zeros(n),
            t: 0,
        })
    }

    /// Current conditional covariance `H_t` (stochastic-covariance only).
    pub fn state(&self) -> Option<&DMatrix<T>> {
        match &self.kind {
            ProcessKind::Sc { h, .. } => Some(h),
            ProcessKind::Iid { .. } => None,
        }
    }

    pub fn next_innovation(&mut self) -> Result<DVector<T>> {
        let t = self.t;
        self.t += 1;
        match &mut self.kind {
            ProcessKind::Iid { chol, law } => {
                law.fill(&mut self.streams.v, &mut self.v_buf);
                Ok(&*chol * &self.v_buf)
            }
            ProcessKind::Sc { h, c0, psi, eps_law, v_law } => {
                v_law.fill(&mut self.streams.v, &mut self.v_buf);
                eps_law.fill(&mut self.streams.eps, &mut self.eps_buf);
                step_stochastic_covariance(h, c0, psi, &self.v_buf, &self.eps_buf, t)
            }
        }
    }
}

/// A `T x n` panel; row `t` is `y_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel<T: Scalar> {
    pub data: DMatrix<T>,
    pub seed: u64,
    pub burn_in: usize,
    pub dgp_fingerprint: String,
}

impl<T: Scalar> TimeSeriesPanel<T> {
    pub fn new(data: DMatrix<T>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InsufficientData("panel must have at least one row and column".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("panel data".into()));
        }
        Ok(Self { data, seed: 0, burn_in: 0, dgp_fingerprint: String::new() })
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, t: usize) -> DVector<T> {
        self.data.row(t).transpose()
    }

    /// First `rows` observations with the same provenance.
    pub fn head(&self, rows: usize) -> Self {
        Self { data: self.data.rows(0, rows.min(self.len())).into_owned(), ..self.clone() }
    }
}

/// SHA-256 over the canonical JSON of the model and innovation law.
pub fn dgp_fingerprint<T: Scalar>(spec: &VarSpec<T>, innov: &InnovationSpec<T>) -> String {
    let doc = serde_json::json!({"spec": VarSpecDoc::from_spec(spec), "innovations": innov.describe()});
    let digest = Sha256::digest(doc.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn default_burn_in(p: usize) -> usize {
    200 + 10 * p
}

/// Iterates the VAR from zero initial conditions, drops `burn_in` rows and
/// returns the next `t_len`.
pub fn simulate<T: Scalar>(
    spec: &VarSpec<T>,
    innov: &InnovationSpec<T>,
    t_len: usize,
    burn_in: usize,
    seed: u64,
) -> Result<TimeSeriesPanel<T>> {
    if t_len == 0 {
        return Err(Error::InvalidArgument("T must be at least 1".into()));
    }
    if innov.n() != spec.n() {
        return Err(Error::InvalidSpec(format!(
            "innovations have dimension {}, model has {}",
            innov.n(),
            spec.n()
        )));
    }
    ensure_stable(spec, DEFAULT_STABILITY_MARGIN)?;
    let mut process = InnovationProcess::new(innov, seed)?;
    let (n, p) = (spec.n(), spec.p());
    let active_lags: Vec<usize> =
        (1..=p).filter(|&k| spec.lag(k).iter().any(|v| *v != T::zero())).collect();
    // ring buffer of the last p states, slot t % p
    let mut hist: Vec<DVector<T>> = vec![DVector::zeros(n); p];
    let total = burn_in + t_len;
    let mut data = DMatrix::zeros(t_len, n);
    for t in 0..total {
        let mut y = spec.intercept() + process.next_innovation()?;
        for &k in &active_lags {
            if t >= k {
                y.gemv(T::one(), spec.lag(k), &hist[(t - k) % p], T::one());
            }
        }
        let mag = y.iter().map(|v| v.abs().as_f64()).fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
        if !(mag < OVERFLOW_LIMIT) {
            return Err(Error::Overflow { t, magnitude: mag });
        }
        if t >= burn_in {
            data.set_row(t - burn_in, &y.transpose());
        }
        hist[t % p] = y;
    }
    Ok(TimeSeriesPanel { data, seed, burn_in, dgp_fingerprint: dgp_fingerprint(spec, innov) })
}

/// The block-diagonal Monte Carlo design: lag-1 and lag-4 blocks of equal
/// entries, diagonal stochastic covariance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationDesign {
    pub t: usize,
    pub c: usize,
    pub block_size: usize,
    pub a1_entry: f64,
    pub a4_entry: f64,
    pub c0_diag: f64,
    pub psi_diag: f64,
    pub replications: usize,
    pub horizon: usize,
}

impl SimulationDesign {
    pub fn table1(t: usize, c: usize) -> Self {
        Self {
            t,
            c,
            block_size: 5,
            a1_entry: 0.15,
            a4_entry: -0.1,
            c0_diag: 1e-5,
            psi_diag: 0.8,
            replications: 100,
            horizon: 1,
        }
    }

    pub fn n(&self) -> usize {
        self.c * self.t
    }

    pub fn p(&self) -> usize {
        4
    }

    /// The single `block_size`-dimensional block; every block of the full
    /// model is a copy of it.
    pub fn block_spec<T: Scalar>(&self) -> Result<VarSpec<T>> {
        block_var(self.block_size, 1, self.block_size, &[(1, self.a1_entry), (4, self.a4_entry)])
    }

    pub fn block_innovations<T: Scalar>(&self) -> Result<InnovationSpec<T>> {
        diag_sc(self.block_size, self.c0_diag, self.psi_diag)
    }

    pub fn build<T: Scalar>(&self) -> Result<(VarSpec<T>, InnovationSpec<T>)> {
        if self.block_size == 0 || self.n() == 0 || self.n() % self.block_size != 0 {
            return Err(Error::InvalidSpec(format!(
                "n = c*T = {} must be a positive multiple of the block size {}",
                self.n(),
                self.block_size
            )));
        }
        ensure_stable(&self.block_spec::<T>()?, DEFAULT_STABILITY_MARGIN)?;
        let spec = block_var(self.n(), self.n() / self.block_size, self.block_size, &[(1, self.a1_entry), (4, self.a4_entry)])?;
        Ok((spec, diag_sc(self.n(), self.c0_diag, self.psi_diag)?))
    }
}

fn block_var<T: Scalar>(n: usize, blocks: usize, size: usize, lags: &[(usize, f64)]) -> Result<VarSpec<T>> {
    let p = lags.iter().map(|l| l.0).max().unwrap_or(1);
    let mut coeffs = vec![DMatrix::zeros(n, n); p];
    for &(k, val) in lags {
        for b in 0..blocks {
            coeffs[k - 1].view_mut((b * size, b * size), (size, size)).fill(T::of(val));
        }
    }
    VarSpec::new(coeffs, None)
}

fn diag_sc<T: Scalar>(n: usize, c0: f64, psi: f64) -> Result<InnovationSpec<T>> {
    InnovationSpec::stochastic_covariance(
        DMatrix::identity(n, n) * T::of(c0),
        DMatrix::identity(n, n) * T::of(psi),
    )
}

/// `(VarSpec, InnovationSpec)` of the Monte Carlo design with `n = c T`.
pub fn build_table1_design<T: Scalar>(t: usize, c: usize) -> Result<(VarSpec<T>, InnovationSpec<T>)> {
    SimulationDesign::table1(t, c).build()
}

/// Small design used by the theory checks: `n = 10`, two 5x5 blocks with
/// 0.15 at lag 1 and -0.1 at lag 2, same stochastic covariance as the
/// Monte Carlo design.
pub fn desk_design<T: Scalar>() -> Result<(VarSpec<T>, InnovationSpec<T>)> {
    let spec = block_var(10, 2, 5, &[(1, 0.15), (2, -0.1)])?;
    ensure_stable(&spec, DEFAULT_STABILITY_MARGIN)?;
    Ok((spec, diag_sc(10, 1e-5, 0.8)?))
}

/// Smallest eigenvalue of the stationary innovation covariance, handy for
/// checking `Lambda_min(Sigma) >= Lambda_min(C0) + 1`.
pub fn innovation_eigen_range<T: Scalar>(innov: &InnovationSpec<T>) -> Result<(f64, f64)> {
    Ok(symmetric_eigen_range(&stationary_innovation_covariance(innov, 1e-12)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stationary_sigma_cases() {
        let innov = InnovationSpec::<f64>::stochastic_covariance(DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).unwrap();
        let s = stationary_innovation_covariance(&innov, 1e-14).unwrap();
        assert_eq!(s, DMatrix::identity(2, 2) * 2.0);
        let innov = InnovationSpec::<f64>::stochastic_covariance(DMatrix::identity(3, 3) * 1e-5, DMatrix::identity(3, 3) * 0.8).unwrap();
        let s = stationary_innovation_covariance(&innov, 1e-14).unwrap();
        assert_relative_eq!(s[(1, 1)], (1.0 + 1e-5) / 0.36, max_relative = 1e-12);
        assert_eq!(s[(0, 1)], 0.0);
    }

    #[test]
    fn nonstationary_psi_rejected() {
        let r = InnovationSpec::<f64>::stochastic_covariance(DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        assert!(matches!(r, Err(Error::InvalidSpec(_))));
        let r = InnovationSpec::<f64>::gaussian(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn degenerate_recursion_keeps_identity() {
        let mut h = DMatrix::<f64>::identity(3, 3) * 4.0;
        let c0 = DMatrix::identity(3, 3);
        let psi = DMatrix::zeros(3, 3);
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let eps = DVector::zeros(3);
        let u = step_stochastic_covariance(&mut h, &c0, &psi, &v, &eps, 0).unwrap();
        assert_eq!(u, v * 2.0);
        assert_eq!(h, DMatrix::identity(3, 3));
        let u = step_stochastic_covariance(&mut h, &c0, &psi, &DVector::from_vec(vec![1.0, 2.0, 3.0]), &eps, 1).unwrap();
        assert_eq!(u, DVector::from_vec(vec![1.0, 2.0, 3.0]));
    }

    #[test]
    fn diagonal_and_dense_paths_agree() {
        let mut h1 = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
        let mut h2 = h1.clone();
        let c0 = DMatrix::identity(2, 2) * 0.1;
        let psi = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.7]));
        let mut psi_dense = psi.clone();
        psi_dense[(0, 1)] = 1e-300; // forces the dense branch
        let v = DVector::from_vec(vec![0.2, -0.4]);
        let eps = DVector::from_vec(vec![1.1, 0.3]);
        let u1 = step_stochastic_covariance(&mut h1, &c0, &psi, &v, &eps, 0).unwrap();
        let u2 = step_stochastic_covariance(&mut h2, &c0, &psi_dense, &v, &eps, 0).unwrap();
        assert_eq!(u1, u2);
        assert!((h1 - h2).abs().max() < 1e-14);
    }

    #[test]
    fn cholesky_failure_reports_t() {
        let mut h = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let r = step_stochastic_covariance(&mut h, &DMatrix::identity(2, 2), &DMatrix::zeros(2, 2), &DVector::zeros(2), &DVector::zeros(2), 17);
        assert!(matches!(r, Err(Error::CholeskyFailure { t: 17 })));
    }

    #[test]
    fn weibull_law_has_unit_variance() {
        let s = NoiseLaw::SymmetricWeibull { alpha: 1.0 }.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let x = s.draw(&mut rng);
            s1 += x;
            s2 += x * x;
        }
        assert!((s1 / m as f64).abs() < 0.02);
        assert!((s2 / m as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn simulate_is_reproducible() {
        let (spec, innov) = desk_design::<f64>().unwrap();
        let a = simulate(&spec, &innov, 50, 20, 9).unwrap();
        let b = simulate(&spec, &innov, 50, 20, 9).unwrap();
        let c = simulate(&spec, &innov, 50, 20, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.data, c.data);
        assert_eq!(a.dgp_fingerprint, c.dgp_fingerprint);
        assert_eq!(a.dgp_fingerprint.len(), 64);
    }

    #[test]
    fn simulate_rejects_unstable() {
        let spec = VarSpec::<f64>::scaled_identity(2, 1.0).unwrap();
        let innov = InnovationSpec::gaussian(DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(simulate(&spec, &innov, 10, 0, 1), Err(Error::Unstable { .. })));
    }

    #[test]
    fn overflow_reports_step() {
        // huge intercept trips the overflow guard on the first step
        let spec = VarSpec::<f64>::new(vec![DMatrix::zeros(1, 1)], Some(DVector::from_element(1, 1e200))).unwrap();
        let innov = InnovationSpec::gaussian(DMatrix::identity(1, 1)).unwrap();
        assert!(matches!(simulate(&spec, &innov, 10, 0, 1), Err(Error::Overflow { t: 0, .. })));
    }

    #[test]
    fn table1_design_shape() {
        let (spec, innov) = build_table1_design::<f64>(100, 1).unwrap();
        assert_eq!((spec.n(), spec.p()), (100, 4));
        assert!(spec.supports().iter().all(|s| s.len() == 10));
        assert_eq!(spec.lag(2).iter().filter(|v| **v != 0.0).count(), 0);
        assert_eq!(spec.lag(1)[(7, 9)], 0.15);
        assert_eq!(spec.lag(1)[(4, 5)], 0.0);
        assert_eq!(spec.lag(4)[(0, 4)], -0.1);
        assert_eq!(innov.n(), 100);
        assert!(build_table1_design::<f64>(101, 1).is_err());
        assert_eq!(SimulationDesign::table1(100, 3).n() * 4, 1200);
    }
}
