//! Exponential saturation fit `J(L) = j_inf - A exp(-L/ξ)` by
//! Levenberg–Marquardt.
//!
//! `A` and `ξ` are fitted through their logarithms so both stay positive.
//! The arithmetic runs in `f64` whatever the caller's scalar.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DVector, Dyn, OMatrix, Vector3, U3};
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Cap on residual evaluations.
pub const MAX_EVALUATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationFit<T: Real> {
    pub j_inf: T,
    pub amplitude: T,
    pub decay_length: T,
    /// Root-mean-square misfit.
    pub residual: T,
    pub converged: bool,
    pub termination: String,
    pub evaluations: usize,
}

impl<T: Real> SaturationFit<T> {
    pub fn model(&self, chain_len: T) -> T {
        self.j_inf - self.amplitude * (-chain_len / self.decay_length).exp()
    }

    /// Residual as a fraction of `|j_inf|`.
    pub fn relative_residual(&self) -> T {
        self.residual / self.j_inf.abs()
    }
}

struct Problem {
    ls: Vec<f64>,
    js: Vec<f64>,
    // j_inf, ln A, ln ξ
    p: Vector3<f64>,
}

impl LeastSquaresProblem<f64, Dyn, U3> for Problem {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U3>;
    type ParameterStorage = Owned<f64, U3>;

    fn set_params(&mut self, p: &Vector3<f64>) {
        self.p = *p;
    }

    fn params(&self) -> Vector3<f64> {
        self.p
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let (j_inf, a, xi) = (self.p[0], self.p[1].exp(), self.p[2].exp());
        Some(DVector::from_iterator(
            self.ls.len(),
            self.ls.iter().zip(&self.js).map(|(&l, &j)| j_inf - a * (-l / xi).exp() - j),
        ))
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U3>> {
        let (a, xi) = (self.p[1].exp(), self.p[2].exp());
        let mut m = OMatrix::<f64, Dyn, U3>::zeros(self.ls.len());
        for (r, &l) in self.ls.iter().enumerate() {
            let e = (-l / xi).exp();
            m[(r, 0)] = 1.0;
            m[(r, 1)] = -a * e;
            m[(r, 2)] = -a * e * l / xi;
        }
        Some(m)
    }
}

/// Fits the saturation model to `(L, J_eff)` points.
///
/// Start: `j_inf` the last value, `A = j_inf - first value`,
/// `ξ = (L_max - L_min)/ln(max(r, 2))` with `r` the ratio of the first to the
/// last increment.
pub fn saturation_fit<T: Real>(points: &[(usize, T)]) -> Result<SaturationFit<T>> {
    if points.len() < 3 {
        return Err(Error::Domain(format!("saturation fit needs at least 3 points, got {}", points.len())));
    }
    let mut pts: Vec<(f64, f64)> = points.iter().map(|&(l, j)| (l as f64, j.as_f64())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(&(l, _)) = points.iter().find(|(l, _)| l % 2 != 0) {
        return Err(Error::InvalidLength(l));
    }
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Domain("saturation fit needs distinct chain lengths".into()));
    }
    if pts.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Domain("saturation fit got a non-finite coupling".into()));
    }
    let n = pts.len();
    let (l_min, l_max) = (pts[0].0, pts[n - 1].0);
    let j_last = pts[n - 1].1;
    let first_inc = pts[1].1 - pts[0].1;
    let last_inc = pts[n - 1].1 - pts[n - 2].1;
    let ratio = if last_inc != 0.0 { (first_inc / last_inc).abs() } else { f64::INFINITY };
    let xi0 = (l_max - l_min) / ratio.max(2.0).ln();
    let a0 = (j_last - pts[0].1).abs().max(1e-12 * j_last.abs().max(1e-300));
    let a0 = a0 * (l_min / xi0).exp();

    let problem = Problem {
        ls: pts.iter().map(|p| p.0).collect(),
        js: pts.iter().map(|p| p.1).collect(),
        p: Vector3::new(j_last, a0.ln(), xi0.ln()),
    };
    let lm = LevenbergMarquardt::new().with_patience(MAX_EVALUATIONS.div_ceil(4));
    let (problem, report) = lm.minimize(problem);
    let res = problem.residuals().unwrap_or_else(|| DVector::zeros(n));
    let rms = (res.norm_squared() / n as f64).sqrt();
    let p = problem.p;
    Ok(SaturationFit {
        j_inf: T::lit(p[0]),
        amplitude: T::lit(p[1].exp()),
        decay_length: T::lit(p[2].exp()),
        residual: T::lit(rms),
        converged: report.termination.was_successful(),
        termination: format!("{:?}", report.termination),
        evaluations: report.number_of_evaluations,
    })
}
