//! VAR(p) model representation and model-level diagnostics.
//!
//! A [`VarSpec`] holds the lag matrices `A_1..A_p` of
//! `y_t = A_0 + A_1 y_{t-1} + ... + A_p y_{t-p} + u_t`. From it we build the
//! companion (first-order) form, the moving-average weights `Phi_k`, the
//! spectral bounds on the population Gram matrix and the sparsity profile of
//! the stacked coefficients.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, symmetric_eigen_range};
use crate::scalar::Scalar;

/// Default margin below one for the companion spectral radius.
pub const DEFAULT_STABILITY_MARGIN: f64 = 1e-6;
/// Default number of points on the unit circle for [`gram_eigen_bounds`].
pub const DEFAULT_CIRCLE_GRID: usize = 512;
/// Hard cap on the automatically chosen moving-average horizon.
pub const MAX_VMA_HORIZON: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct VarSpec<T: Scalar> {
    n: usize,
    p: usize,
    coeffs: Vec<DMatrix<T>>,
    intercept: DVector<T>,
}

impl<T: Scalar> VarSpec<T> {
    /// Builds a spec from lag matrices in ascending lag order.
    pub fn new(coeffs: Vec<DMatrix<T>>, intercept: Option<DVector<T>>) -> Result<Self> {
        let p = coeffs.len();
        if p == 0 {
            return Err(Error::InvalidSpec("lag order p must be at least 1".into()));
        }
        let n = coeffs[0].nrows();
        if n == 0 {
            return Err(Error::InvalidSpec("series count n must be at least 1".into()));
        }
        for (k, a) in coeffs.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::InvalidSpec(format!(
                    "A_{} is {}x{}, expected {n}x{n}",
                    k + 1,
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("A_{} has non-finite entries", k + 1)));
            }
        }
        let intercept = intercept.unwrap_or_else(|| DVector::zeros(n));
        if intercept.len() != n {
            return Err(Error::InvalidSpec(format!(
                "intercept has length {}, expected {n}",
                intercept.len()
            )));
        }
        if intercept.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("intercept has non-finite entries".into()));
        }
        Ok(Self { n, p, coeffs, intercept })
    }

    /// Diagonal VAR(1) with `A_1 = a * I_n`.
    pub fn scaled_identity(n: usize, a: T) -> Result<Self> {
        Self::new(vec![DMatrix::identity(n, n) * a], None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn coeffs(&self) -> &[DMatrix<T>] {
        &self.coeffs
    }

    /// Lag matrix `A_k`, `1 <= k <= p`.
    pub fn lag(&self, k: usize) -> &DMatrix<T> {
        &self.coeffs[k - 1]
    }

    pub fn intercept(&self) -> &DVector<T> {
        &self.intercept
    }

    /// Width `np` of the stacked regressor vector.
    pub fn width(&self) -> usize {
        self.n * self.p
    }

    /// Stacked coefficients: an `np x n` matrix whose column `i` is the
    /// regression vector of equation `i` in lag-major layout.
    pub fn stacked(&self) -> DMatrix<T> {
        let n = self.n;
        let mut beta = DMatrix::zeros(n * self.p, n);
        for (k, a) in self.coeffs.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    beta[(k * n + j, i)] = a[(i, j)];
                }
            }
        }
        beta
    }

    /// Inverse of [`VarSpec::stacked`].
    pub fn from_stacked(beta: &DMatrix<T>, p: usize) -> Result<Self> {
        Self::new(unstack(beta, p)?, None)
    }

    /// Support of each equation's true coefficient vector.
    pub fn supports(&self) -> Vec<Vec<usize>> {
        let beta = self.stacked();
        (0..self.n)
            .map(|i| (0..beta.nrows()).filter(|&j| beta[(j, i)] != T::zero()).collect())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&VarSpecDoc::from_spec(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: VarSpecDoc = serde_json::from_str(s)?;
        doc.into_spec()
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> VarSpec<U> {
        VarSpec {
            n: self.n,
            p: self.p,
            coeffs: self.coeffs.iter().map(|a| a.map(|v| U::of(v.as_f64()))).collect(),
            intercept: self.intercept.map(|v| U::of(v.as_f64())),
        }
    }
}

/// Splits an `np x n` stacked coefficient matrix back into `A_1..A_p`.
pub fn unstack<T: Scalar>(beta: &DMatrix<T>, p: usize) -> Result<Vec<DMatrix<T>>> {
    let n = beta.ncols();
    if p == 0 || beta.nrows() != n * p {
        return Err(Error::InvalidArgument(format!(
            "stacked coefficients are {}x{}, which is not np x n for p = {p}",
            beta.nrows(),
            n
        )));
    }
    Ok((0..p)
        .map(|k| DMatrix::from_fn(n, n, |i, j| beta[(k * n + j, i)]))
        .collect())
}

/// JSON document layout: matrices row-major, lags ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarSpecDoc {
    pub n: usize,
    pub p: usize,
    pub coeffs: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub intercept: Option<Vec<f64>>,
}

impl VarSpecDoc {
    pub fn from_spec<T: Scalar>(spec: &VarSpec<T>) -> Self {
        let coeffs = spec
            .coeffs
            .iter()
            .map(|a| {
                (0..spec.n)
                    .map(|i| (0..spec.n).map(|j| a[(i, j)].as_f64()).collect())
                    .collect()
            })
            .collect();
        Self {
            n: spec.n,
            p: spec.p,
            coeffs,
            intercept: Some(spec.intercept.iter().map(|v| v.as_f64()).collect()),
        }
    }

    pub fn into_spec<T: Scalar>(self) -> Result<VarSpec<T>> {
        if self.coeffs.len() != self.p {
            return Err(Error::InvalidSpec(format!(
                "document declares p = {} but holds {} lag matrices",
                self.p,
                self.coeffs.len()
            )));
        }
        let n = self.n;
        let mut mats = Vec::with_capacity(self.p);
        for (k, rows) in self.coeffs.iter().enumerate() {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidSpec(format!("A_{} is not {n}x{n}", k + 1)));
            }
            mats.push(DMatrix::from_fn(n, n, |i, j| T::of(rows[i][j])));
        }
        let intercept = self
            .intercept
            .map(|v| DVector::from_iterator(v.len(), v.into_iter().map(T::of)));
        VarSpec::new(mats, intercept)
    }
}

/// First-order representation `F` of a VAR(p), of size `np x np`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionMatrix<T: Scalar> {
    pub data: DMatrix<T>,
}

impl<T: Scalar> CompanionMatrix<T> {
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }
}

pub fn build_companion<T: Scalar>(spec: &VarSpec<T>) -> CompanionMatrix<T> {
    let (n, p) = (spec.n, spec.p);
    let mut f = DMatrix::zeros(n * p, n * p);
    for (k, a) in spec.coeffs.iter().enumerate() {
        f.view_mut((0, k * n), (n, n)).copy_from(a);
    }
    for k in 1..p {
        f.view_mut((k * n, (k - 1) * n), (n, n)).fill_with_identity();
    }
    CompanionMatrix { data: f }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub stable: bool,
    pub spectral_radius: f64,
    pub margin: f64,
}

/// Spectral radius of the companion matrix, via a real Schur decomposition.
pub fn spectral_radius<T: Scalar>(spec: &VarSpec<T>) -> Result<f64> {
    let f = build_companion(spec).data;
    let dim = f.nrows();
    let eps = T::default_epsilon() * T::of(dim as f64);
    let schur = nalgebra::Schur::try_new(f, eps, 10_000 * dim.max(1))
        .ok_or_else(|| Error::Eigen(format!("Schur iteration did not converge on the {dim}x{dim} companion matrix")))?;
    let eig = schur.complex_eigenvalues();
    let mut radius = 0.0_f64;
    for z in eig.iter() {
        let m = z.re.as_f64().hypot(z.im.as_f64());
        if !m.is_finite() {
            return Err(Error::Eigen("non-finite companion eigenvalue".into()));
        }
        radius = radius.max(m);
    }
    Ok(radius)
}

/// Stable iff every companion eigenvalue has modulus below `1 - margin`,
/// which is the same as all roots of `det(I - sum A_j z^j)` lying outside
/// the unit disk.
pub fn is_stable<T: Scalar>(spec: &VarSpec<T>, margin: f64) -> Result<Stability> {
    if !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("stability margin must be >= 0, got {margin}")));
    }
    let radius = spectral_radius(spec)?;
    Ok(Stability { stable: radius < 1.0 - margin, spectral_radius: radius, margin })
}

/// Returns an [`Error::Unstable`] unless the spec passes [`is_stable`].
pub fn ensure_stable<T: Scalar>(spec: &VarSpec<T>, margin: f64) -> Result<f64> {
    let s = is_stable(spec, margin)?;
    if s.stable {
        Ok(s.spectral_radius)
    } else {
        Err(Error::Unstable { radius: s.spectral_radius, margin })
    }
}

/// Moving-average weights `Phi_0..Phi_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct VmaCoefficients<T: Scalar> {
    pub phis: Vec<DMatrix<T>>,
}

impl<T: Scalar> VmaCoefficients<T> {
    pub fn horizon(&self) -> usize {
        self.phis.len() - 1
    }

    pub fn n(&self) -> usize {
        self.phis[0].nrows()
    }

    pub fn phi(&self, k: usize) -> &DMatrix<T> {
        &self.phis[k]
    }

    /// Row `i` of `Phi_k`.
    pub fn row(&self, k: usize, i: usize) -> Vec<T> {
        self.phis[k].row(i).iter().copied().collect()
    }
}

/// Smallest horizon with `radius^K < 1e-12`, capped at [`MAX_VMA_HORIZON`].
pub fn default_vma_horizon(radius: f64, p: usize) -> usize {
    if radius <= 0.0 || !radius.is_finite() {
        return p.clamp(1, MAX_VMA_HORIZON);
    }
    if radius >= 1.0 {
        return MAX_VMA_HORIZON;
    }
    let k = ((1e-12_f64).ln() / radius.ln()).ceil() as usize;
    k.clamp(1, MAX_VMA_HORIZON)
}

/// `Phi_k = sum_{j=1}^{min(p,k)} Phi_{k-j} A_j` with `Phi_0 = I`.
pub fn vma_coefficients<T: Scalar>(spec: &VarSpec<T>, horizon: usize) -> VmaCoefficients<T> {
    let n = spec.n;
    let mut phis: Vec<DMatrix<T>> = Vec::with_capacity(horizon + 1);
    phis.push(DMatrix::identity(n, n));
    let nonzero: Vec<bool> = spec.coeffs.iter().map(|a| a.iter().any(|v| *v != T::zero())).collect();
    for k in 1..=horizon {
        let mut phi = DMatrix::zeros(n, n);
        for j in 1..=spec.p.min(k) {
            if nonzero[j - 1] {
                phi.gemm(T::one(), &phis[k - j], &spec.coeffs[j - 1], T::one());
            }
        }
        phis.push(phi);
    }
    VmaCoefficients { phis }
}

/// Per-row tail sums `sum_{k=m}^{K} |phi_{k,i}|_1`.
pub fn tail_sum_profile<T: Scalar>(vma: &VmaCoefficients<T>, m: usize) -> Result<Vec<f64>> {
    let k_max = vma.horizon();
    if m > k_max {
        return Err(Error::InvalidArgument(format!("tail start m = {m} exceeds horizon K = {k_max}")));
    }
    let n = vma.n();
    let mut out = vec![0.0; n];
    for k in m..=k_max {
        let phi = &vma.phis[k];
        for (i, acc) in out.iter_mut().enumerate() {
            *acc += phi.row(i).iter().map(|v| v.abs().as_f64()).sum::<f64>();
        }
    }
    Ok(out)
}

/// Exponential envelope `c_bar * exp(-c_phi * m^gamma1)` fitted to the
/// worst-row tail sums, with `gamma1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDecayFit {
    pub c_bar: f64,
    pub c_phi: f64,
    pub gamma1: f64,
}

impl TailDecayFit {
    pub fn envelope(&self, m: usize) -> f64 {
        self.c_bar * (-self.c_phi * (m as f64).powf(self.gamma1)).exp()
    }
}

/// Fits the decay rate by least squares on `log max_i tail(m)` and then
/// lifts the intercept so the envelope dominates every observed tail sum.
pub fn fit_tail_decay<T: Scalar>(vma: &VmaCoefficients<T>) -> Result<TailDecayFit> {
    let k_max = vma.horizon();
    let n = vma.n();
    // row l1 norms per lag, accumulated from the back
    let mut tails = vec![0.0_f64; k_max + 1];
    let mut acc = vec![0.0_f64; n];
    for k in (0..=k_max).rev() {
        let phi = &vma.phis[k];
        for (i, a) in acc.iter_mut().enumerate() {
            *a += phi.row(i).iter().map(|v| v.abs().as_f64()).sum::<f64>();
        }
        tails[k] = acc.iter().cloned().fold(0.0, f64::max);
    }
    let floor = tails[0] * 1e-13;
    let pts: Vec<(f64, f64)> = (1..=k_max)
        .filter(|&m| tails[m] > floor && tails[m] > 0.0)
        .map(|m| (m as f64, tails[m].ln()))
        .collect();
    let c_phi = if pts.len() >= 2 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (-sxy / sxx).max(f64::MIN_POSITIVE)
    } else {
        // finite-order moving average: any positive rate works once the tail is zero
        1.0
    };
    let c_bar = (0..=k_max)
        .map(|m| tails[m] * (c_phi * m as f64).exp())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    Ok(TailDecayFit { c_bar, c_phi, gamma1: 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramEigenBounds {
    pub lower: f64,
    pub upper: f64,
    /// `max_{|z|=1} Lambda_max(A*(z) A(z))` over the grid.
    pub max_symbol_eig: f64,
    /// `min_{|z|=1} Lambda_min(A*(z) A(z))` over the grid.
    pub min_symbol_eig: f64,
    pub grid: usize,
}

/// Spectral sandwich for the eigenvalues of the population Gram matrix:
/// `Lambda_min(Sigma) / max Lambda_max(A*A) <= eig(Gamma) <= Lambda_max(Sigma) / min Lambda_min(A*A)`,
/// with the extrema taken over a uniform grid on the unit circle.
pub fn gram_eigen_bounds<T: Scalar>(spec: &VarSpec<T>, sigma: &DMatrix<T>, grid: usize) -> Result<GramEigenBounds> {
    let n = spec.n;
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::InvalidArgument(format!("sigma must be {n}x{n}")));
    }
    if grid == 0 {
        return Err(Error::InvalidArgument("unit-circle grid must have at least one point".into()));
    }
    let (sig_min, sig_max) = symmetric_eigen_range(sigma);
    if !(sig_min > 0.0) || sigma.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite { what: "innovation covariance".into() });
    }
    let mut max_eig = 0.0_f64;
    let mut min_eig = f64::INFINITY;
    // real embedding [[R, -I], [I, R]] of A(z) = R + iI has the singular
    // values of A(z), each repeated twice
    let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for g in 0..grid {
        let theta = 2.0 * std::f64::consts::PI * g as f64 / grid as f64;
        emb.fill(0.0);
        for i in 0..n {
            emb[(i, i)] = 1.0;
            emb[(n + i, n + i)] = 1.0;
        }
        for (k, a) in spec.coeffs.iter().enumerate() {
            let (s, c) = ((k + 1) as f64 * theta).sin_cos();
            for i in 0..n {
                for j in 0..n {
                    let v = a[(i, j)].as_f64();
                    if v != 0.0 {
                        emb[(i, j)] -= v * c;
                        emb[(n + i, n + j)] -= v * c;
                        emb[(n + i, j)] -= v * s;
                        emb[(i, n + j)] += v * s;
                    }
                }
            }
        }
        let sv = emb.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        max_eig = max_eig.max(smax * smax);
        min_eig = min_eig.min(smin * smin);
    }
    let upper = if min_eig > 0.0 { sig_max / min_eig } else { f64::INFINITY };
    Ok(GramEigenBounds { lower: sig_min / max_eig, upper, max_symbol_eig: max_eig, min_symbol_eig: min_eig, grid })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityProfile {
    pub q: f64,
    /// `sum_j |beta_{i,j}|^q` per equation, with `0^0 = 0`.
    pub rq: Vec<f64>,
    pub eta: f64,
    /// `{ j : |beta_{i,j}| > eta }` per equation.
    pub active_sets: Vec<Vec<usize>>,
}

impl SparsityProfile {
    /// `R_q`: the largest per-equation l_q mass.
    pub fn radius(&self) -> f64 {
        self.rq.iter().cloned().fold(0.0, f64::max)
    }
}

/// Weak-sparsity profile of stacked coefficients (one column per equation).
pub fn sparsity_profile<T: Scalar>(beta: &DMatrix<T>, q: f64, eta: f64) -> Result<SparsityProfile> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("q must lie in [0, 1), got {q}")));
    }
    if !(eta >= 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be >= 0, got {eta}")));
    }
    let mut rq = Vec::with_capacity(beta.ncols());
    let mut active_sets = Vec::with_capacity(beta.ncols());
    for col in beta.column_iter() {
        let mut mass = 0.0;
        let mut active = Vec::new();
        for (j, v) in col.iter().enumerate() {
            let a = v.abs().as_f64();
            if a != 0.0 {
                mass += if q == 0.0 { 1.0 } else { a.powf(q) };
            }
            if a > eta {
                active.push(j);
            }
        }
        rq.push(mass);
        active_sets.push(active);
    }
    Ok(SparsityProfile { q, rq, eta, active_sets })
}

/// Maximum absolute entry across all lag matrices.
pub fn max_coefficient<T: Scalar>(spec: &VarSpec<T>) -> f64 {
    spec.coeffs.iter().map(max_abs).fold(0.0, f64::max)
}
