use nalgebra::DVector;

use crate::{Error, Real, Result};

#[derive(Debug, Clone)]
pub struct CgOutcome<T: Real> {
    pub solution: DVector<T>,
    pub iterations: usize,
    /// `||b - A x|| / ||b||` at exit.
    pub relative_residual: T,
}

/// Conjugate gradients for `Q A Q x = Q b`, with the projector `Q` applied to
/// the residual and search direction on every iteration.
///
/// `A` must be symmetric positive definite on the range of `Q`.
pub fn conjugate_gradient<T, A, P>(
    apply: A,
    project: P,
    rhs: &DVector<T>,
    rel_tol: T,
    max_iter: usize,
) -> Result<CgOutcome<T>>
where
    T: Real,
    A: Fn(&DVector<T>) -> DVector<T>,
    P: Fn(&mut DVector<T>),
{
    let mut b = rhs.clone();
    project(&mut b);
    let b_norm = b.norm();
    let mut x = DVector::zeros(b.len());
    if b_norm == T::zero() {
        return Ok(CgOutcome { solution: x, iterations: 0, relative_residual: T::zero() });
    }
    let mut r = b;
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    for it in 1..=max_iter {
        let mut ap = apply(&p);
        project(&mut ap);
        let pap = p.dot(&ap);
        if pap <= T::zero() {
            return Err(Error::NotConverged {
                solver: "conjugate gradient (operator not positive on projected space)",
                iterations: it,
                residual: (rr.sqrt() / b_norm).as_f64(),
            });
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p, T::one());
        r.axpy(-alpha, &ap, T::one());
        project(&mut r);
        let rr_new = r.dot(&r);
        if rr_new.sqrt() <= rel_tol * b_norm {
            // confirm against the true residual
            let mut true_r = rhs.clone() - apply(&x);
            project(&mut true_r);
            let rel = true_r.norm() / b_norm;
            if rel <= rel_tol * T::lit(10.0) {
                return Ok(CgOutcome { solution: x, iterations: it, relative_residual: rel });
            }
            r = true_r;
            p = r.clone();
            rr = r.dot(&r);
            continue;
        }
        let beta = rr_new / rr;
        p = &r + &p * beta;
        project(&mut p);
        rr = rr_new;
    }
    Err(Error::NotConverged {
        solver: "conjugate gradient",
        iterations: max_iter,
        residual: (rr.sqrt() / b_norm).as_f64(),
    })
}
