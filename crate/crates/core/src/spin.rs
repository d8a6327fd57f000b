//! Angular-momentum matrices for spin-1/2 and spin-1 in the `|m>`-descending
//! basis (ħ = 1).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Complex, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinKind {
    Half,
    One,
}

impl SpinKind {
    /// Local Hilbert-space dimension `2s + 1`.
    pub fn dim(self) -> usize {
        match self {
            SpinKind::Half => 2,
            SpinKind::One => 3,
        }
    }

    /// `2s`.
    pub fn twice_spin(self) -> i32 {
        match self {
            SpinKind::Half => 1,
            SpinKind::One => 2,
        }
    }

    /// `2m` of the local state with the given index; index 0 is `m = s`.
    pub fn twice_m(self, index: usize) -> i32 {
        self.twice_spin() - 2 * index as i32
    }

    /// Matrix element `<m+1|S+|m>` expressed through `2m`:
    /// `sqrt(s(s+1) - m(m+1))`.
    pub fn raise_coeff<T: Real>(self, twice_m: i32) -> T {
        let s = T::lit(self.twice_spin() as f64 / 2.0);
        let m = T::lit(twice_m as f64 / 2.0);
        (s * (s + T::one()) - m * (m + T::one())).max(T::zero()).sqrt()
    }
}

/// Dense spin matrices of a single site.
#[derive(Debug, Clone)]
pub struct SpinOps<T: Real> {
    pub kind: SpinKind,
    pub sx: DMatrix<Complex<T>>,
    pub sy: DMatrix<Complex<T>>,
    pub sz: DMatrix<Complex<T>>,
    pub s_plus: DMatrix<Complex<T>>,
    pub s_minus: DMatrix<Complex<T>>,
}

impl<T: Real> SpinOps<T> {
    pub fn components(&self) -> [&DMatrix<Complex<T>>; 3] {
        [&self.sx, &self.sy, &self.sz]
    }
}

pub fn spin_matrices<T: Real>(kind: SpinKind) -> SpinOps<T> {
    let d = kind.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let mut sz = DMatrix::from_element(d, d, zero);
    let mut s_plus = DMatrix::from_element(d, d, zero);
    for k in 0..d {
        let twice_m = kind.twice_m(k);
        sz[(k, k)] = Complex::new(T::lit(twice_m as f64 / 2.0), T::zero());
        // |m> at index k is raised to index k-1
        if k > 0 {
            s_plus[(k - 1, k)] = Complex::new(kind.raise_coeff::<T>(twice_m), T::zero());
        }
    }
    let s_minus = s_plus.adjoint();
    let half = T::lit(0.5);
    let sx = (&s_plus + &s_minus).map(|z| z * half);
    // sy = (S+ - S-) / 2i
    let sy = (&s_plus - &s_minus).map(|z| Complex::new(z.im * half, -z.re * half));
    SpinOps { kind, sx, sy, sz, s_plus, s_minus }
}
