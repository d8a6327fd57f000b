//! Lanczos with full reorthogonalization for the lowest eigenpairs of a real
//! symmetric operator given only through its matrix-vector product.
//!
//! The whole Krylov basis is kept and every new vector is orthogonalized
//! twice against it, so the tridiagonal projection never develops ghost
//! copies. When the recursion breaks down on an invariant subspace it is
//! restarted with a fresh random vector orthogonal to the basis built so far.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::sorted_symmetric_eigen;
use crate::{Error, Real, Result};

#[derive(Debug, Clone)]
pub struct LanczosConfig<T: Real> {
    /// Number of lowest eigenpairs wanted.
    pub n_eig: usize,
    pub max_iter: usize,
    /// Convergence when `||H v - θ v|| <= tol * ||H||` for every wanted pair.
    pub tol: T,
    pub seed: u64,
    /// Iterations between convergence checks.
    pub check_every: usize,
}

impl<T: Real> LanczosConfig<T> {
    pub fn lowest(n_eig: usize) -> Self {
        LanczosConfig { n_eig, max_iter: 600, tol: T::lit(1e-12), seed: 0x5eed, check_every: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosOutcome<T: Real> {
    pub values: Vec<T>,
    pub vectors: Vec<DVector<T>>,
    /// True residual norms `||H v - θ v||`.
    pub residuals: Vec<T>,
    pub iterations: usize,
    /// Estimate of the operator norm used for the relative tolerance.
    pub norm_estimate: T,
}

pub fn lanczos_lowest<T, F>(dim: usize, apply: F, cfg: &LanczosConfig<T>) -> Result<LanczosOutcome<T>>
where
    T: Real,
    F: Fn(&DVector<T>) -> DVector<T>,
{
    let want = cfg.n_eig.min(dim);
    if want == 0 {
        return Ok(LanczosOutcome {
            values: Vec::new(),
            vectors: Vec::new(),
            residuals: Vec::new(),
            iterations: 0,
            norm_estimate: T::zero(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_iter = cfg.max_iter.min(dim).max(want);
    let breakdown = T::lit(1e-13);

    let mut basis: Vec<DVector<T>> = Vec::new();
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut norm_est = T::zero();

    let mut q = random_unit(dim, &mut rng, &basis);
    let mut best_residual = f64::INFINITY;
    loop {
        let mut w = apply(&q);
        let a = q.dot(&w);
        w.axpy(-a, &q, T::one());
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            w.axpy(-b, prev, T::one());
        }
        basis.push(q);
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = v.dot(&w);
                w.axpy(-c, v, T::one());
            }
        }
        let b = w.norm();
        norm_est = norm_est.max(a.abs() + b + beta.last().copied().unwrap_or(T::zero()));
        let m = basis.len();

        let exhausted = m == dim;
        let check = m >= want && (m.is_multiple_of(cfg.check_every) || exhausted || m == max_iter);
        if check {
            let (theta, s) = tridiagonal_eigen(&alpha, &beta);
            let est_ok = (0..want).all(|k| (b * s[(m - 1, k)]).abs() <= cfg.tol * norm_est);
            if est_ok || exhausted || m == max_iter {
                let vectors: Vec<DVector<T>> = (0..want).map(|k| ritz_vector(&basis, &s, k)).collect();
                let residuals: Vec<T> = vectors.iter().zip(&theta).map(|(v, &t)| (apply(v) - v * t).norm()).collect();
                let worst = residuals.iter().fold(T::zero(), |acc, &r| acc.max(r));
                if worst <= cfg.tol * norm_est * T::lit(10.0) || exhausted {
                    return Ok(LanczosOutcome {
                        values: theta[..want].to_vec(),
                        vectors,
                        residuals,
                        iterations: m,
                        norm_estimate: norm_est,
                    });
                }
                best_residual = best_residual.min(worst.as_f64());
                if m == max_iter {
                    return Err(Error::NotConverged { solver: "lanczos", iterations: m, residual: best_residual });
                }
            }
        }
        if b <= breakdown * norm_est.max(T::one()) {
            // invariant subspace: restart orthogonally
            beta.push(T::zero());
            q = random_unit(dim, &mut rng, &basis);
        } else {
            beta.push(b);
            q = w / b;
        }
    }
}

fn random_unit<T: Real>(dim: usize, rng: &mut ChaCha8Rng, against: &[DVector<T>]) -> DVector<T> {
    loop {
        let mut v = DVector::from_fn(dim, |_, _| T::lit(rng.random::<f64>() - 0.5));
        for _ in 0..2 {
            for b in against {
                let c = b.dot(&v);
                v.axpy(-c, b, T::one());
            }
        }
        let n = v.norm();
        if n > T::lit(1e-8) {
            return v / n;
        }
    }
}

fn tridiagonal_eigen<T: Real>(alpha: &[T], beta: &[T]) -> (Vec<T>, DMatrix<T>) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let e = sorted_symmetric_eigen(t);
    (e.values, e.vectors)
}

fn ritz_vector<T: Real>(basis: &[DVector<T>], s: &DMatrix<T>, k: usize) -> DVector<T> {
    let mut v = DVector::zeros(basis[0].len());
    for (j, b) in basis.iter().enumerate() {
        v.axpy(s[(j, k)], b, T::one());
    }
    let n = v.norm();
    v / n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn lowest_of_path_laplacian() {
        let n = 200;
        let a = laplacian(n);
        let out = lanczos_lowest(n, |v| &a * v, &LanczosConfig::lowest(3)).unwrap();
        for (k, &val) in out.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((val - exact).abs() < 1e-10, "k={k}: {val} vs {exact}");
        }
        assert!(out.residuals.iter().all(|&r| r < 1e-9));
    }

    #[test]
    fn identity_is_all_ones() {
        let out = lanczos_lowest(7, |v: &DVector<f64>| v.clone(), &LanczosConfig::lowest(3)).unwrap();
        assert!(out.values.iter().all(|&x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn finds_degenerate_copies_after_restart() {
        let d = DVector::from_vec(vec![1.0f64, 1.0, 2.0, 3.0, 3.0, 4.0]);
        let a = DMatrix::from_diagonal(&d);
        let out = lanczos_lowest(6, |v| &a * v, &LanczosConfig::lowest(3)).unwrap();
        assert!((out.values[0] - 1.0).abs() < 1e-12);
        assert!((out.values[1] - 1.0).abs() < 1e-12);
        assert!((out.values[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_precision() {
        let a = laplacian(40).map(|x| x as f32);
        let mut cfg = LanczosConfig::<f32>::lowest(1);
        cfg.tol = 1e-5;
        let out = lanczos_lowest(40, |v| &a * v, &cfg).unwrap();
        let exact = 2.0 - 2.0 * (std::f32::consts::PI / 41.0).cos();
        assert!((out.values[0] - exact).abs() < 1e-4);
    }
}
