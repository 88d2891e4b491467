#![allow(dead_code)]

use hdvar::{spectral_radius, VarSpec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random VAR(p) rescaled so that the companion spectral radius is `target`.
/// Scaling `A_j` by `s^j` scales every companion eigenvalue by `s`.
pub fn random_stable_spec(n: usize, p: usize, target: f64, seed: u64) -> VarSpec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<DMatrix<f64>> =
        (0..p).map(|_| DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0) / n as f64)).collect();
    let rho = spectral_radius(&VarSpec::new(raw.clone(), None).unwrap()).unwrap();
    let s = if rho > 0.0 { target / rho } else { 1.0 };
    let scaled = raw.into_iter().enumerate().map(|(j, a)| a * s.powi(j as i32 + 1)).collect();
    VarSpec::new(scaled, None).unwrap()
}

/// All roots of the monic polynomial `z^d + c[0] z^{d-1} + ... + c[d-1]`
/// by Durand-Kerner iteration.
pub fn durand_kerner(c: &[f64]) -> Vec<Complex64> {
    let d = c.len();
    let eval = |z: Complex64| c.iter().fold(Complex64::new(1.0, 0.0), |acc, &ci| acc * z + ci);
    let bound = 1.0 + c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..d).map(|k| seed.powu(k as u32) * bound * 0.5).collect();
    for _ in 0..5000 {
        let mut delta = 0.0_f64;
        for i in 0..d {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..d {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

/// Slow proximal-gradient (ISTA) solution of `(1/N)|y - X b|^2 + lam |b|_1`,
/// run until the iterates stop moving.
pub fn ista(x: &DMatrix<f64>, y: &DVector<f64>, lam: f64) -> DVector<f64> {
    let nn = x.nrows() as f64;
    let g = x.tr_mul(x) / nn;
    let c = x.tr_mul(y) / nn;
    let lip = 2.0 * g.symmetric_eigenvalues().max().max(1e-12);
    let step = 1.0 / lip;
    let mut b = DVector::zeros(x.ncols());
    for _ in 0..2_000_000 {
        let grad = (&g * &b - &c) * 2.0;
        let z = &b - grad * step;
        let next = z.map(|v| v.signum() * (v.abs() - lam * step).max(0.0));
        let moved = (&next - &b).amax();
        b = next;
        if moved < 1e-14 {
            break;
        }
    }
    b
}

pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>, lam: f64) -> f64 {
    (y - x * b).norm_squared() / x.nrows() as f64 + lam * b.lp_norm(1)
}
