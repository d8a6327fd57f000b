//! Real sparse operators between total-S^z sectors.
//!
//! Every coupling used here (`S^z`, `S^±`, `S_i·S_j` and its square) has real
//! matrix elements in the product basis, so operators store real scalars.

use nalgebra::{DMatrix, DVector};

use crate::basis::SectorBasis;
use crate::spin::SpinKind;
use crate::{Error, Real, Result};

/// Entries with magnitude below this are never stored.
pub const DROP_TOL: f64 = 1e-14;

/// CSR matrix mapping amplitudes of one sector onto another.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<T: Real> {
    nrows: usize,
    ncols: usize,
    twice_sz_in: i32,
    twice_sz_out: i32,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SparseOperator<T> {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// tiny entries dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        twice_sz_in: i32,
        twice_sz_out: i32,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let drop = T::lit(DROP_TOL);
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v.abs() >= drop {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator { nrows, ncols, twice_sz_in, twice_sz_out, row_ptr, col_idx: keep_cols, values: keep_vals }
    }

    pub fn identity(dim: usize, twice_sz: i32) -> Self {
        Self::from_triplets(dim, dim, twice_sz, twice_sz, (0..dim).map(|i| (i, i, T::one())).collect())
    }

    /// Converts a dense matrix, dropping tiny entries.
    pub fn from_dense(m: &DMatrix<T>, twice_sz_in: i32, twice_sz_out: i32) -> Self {
        let mut t = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                t.push((r, c, m[(r, c)]));
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), twice_sz_in, twice_sz_out, t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn twice_sz_in(&self) -> i32 {
        self.twice_sz_in
    }

    pub fn twice_sz_out(&self) -> i32 {
        self.twice_sz_out
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::zero(),
        }
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    pub fn apply(&self, x: &DVector<T>) -> DVector<T> {
        let mut y = DVector::zeros(self.nrows);
        self.matvec_into(x.as_slice(), y.as_mut_slice());
        y
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, self.twice_sz_out, self.twice_sz_in, t)
    }

    pub fn scaled(&self, factor: T) -> Self {
        let t = self.triplets().map(|(r, c, v)| (r, c, v * factor)).collect();
        Self::from_triplets(self.nrows, self.ncols, self.twice_sz_in, self.twice_sz_out, t)
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t = self.triplets().chain(other.triplets().map(|(r, c, v)| (r, c, v * factor))).collect();
        Self::from_triplets(self.nrows, self.ncols, self.twice_sz_in, self.twice_sz_out, t)
    }

    /// Sparse product `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.ncols, rhs.nrows, "inner dimensions differ");
        let mut t = Vec::new();
        let mut acc = vec![T::zero(); rhs.ncols];
        let mut touched = Vec::new();
        let mut seen = vec![false; rhs.ncols];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (mid, a) = (self.col_idx[k], self.values[k]);
                for q in rhs.row_ptr[mid]..rhs.row_ptr[mid + 1] {
                    let c = rhs.col_idx[q];
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * rhs.values[q];
                }
            }
            for &c in &touched {
                t.push((r, c, acc[c]));
                acc[c] = T::zero();
                seen[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, rhs.ncols, rhs.twice_sz_in, self.twice_sz_out, t)
    }

    /// Largest entrywise asymmetry `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> T {
        assert!(self.is_square());
        self.triplets().map(|(r, c, v)| (v - self.get(c, r)).abs()).fold(T::zero(), |a, b| a.max(b))
    }

    /// Max absolute row sum, an upper bound on the spectral norm of a
    /// symmetric operator.
    pub fn norm_inf(&self) -> T {
        (0..self.nrows)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).fold(T::zero(), |a, k| a + self.values[k].abs()))
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn trace(&self) -> T {
        (0..self.nrows.min(self.ncols)).fold(T::zero(), |a, i| a + self.get(i, i))
    }
}

/// Which two-site interaction to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingForm {
    /// `S_i·S_j`
    Bilinear,
    /// `(S_i·S_j)^2`
    Biquadratic,
    /// `s_probe·S_end`, requires one spin-1/2 site.
    ProbeHeisenberg,
}

fn check_site(basis: &SectorBasis, site: usize) -> Result<()> {
    if site >= basis.n_sites() {
        return Err(Error::SiteOutOfRange { site, sites: basis.n_sites() });
    }
    Ok(())
}

/// Matrix of a two-site Heisenberg-type interaction inside one sector.
/// `i` and `j` are configuration positions.
pub fn two_site_coupling<T: Real>(
    basis: &SectorBasis,
    i: usize,
    j: usize,
    form: CouplingForm,
) -> Result<SparseOperator<T>> {
    check_site(basis, i)?;
    check_site(basis, j)?;
    if i == j {
        return Err(Error::SameSite(i));
    }
    match form {
        CouplingForm::Bilinear => Ok(bilinear(basis, i, j)),
        CouplingForm::Biquadratic => {
            let b = bilinear::<T>(basis, i, j);
            Ok(b.mul(&b))
        }
        CouplingForm::ProbeHeisenberg => {
            let kinds = (basis.sites()[i], basis.sites()[j]);
            if !matches!(kinds, (SpinKind::Half, SpinKind::One) | (SpinKind::One, SpinKind::Half)) {
                return Err(Error::Domain(format!(
                    "probe coupling needs one spin-1/2 and one spin-1 site, got {kinds:?}"
                )));
            }
            Ok(bilinear(basis, i, j))
        }
    }
}

fn bilinear<T: Real>(basis: &SectorBasis, i: usize, j: usize) -> SparseOperator<T> {
    let (ki, kj) = (basis.sites()[i], basis.sites()[j]);
    let quarter = T::lit(0.25);
    let half = T::lit(0.5);
    let mut t = Vec::with_capacity(basis.dim() * 3);
    for (col, &s) in basis.states().iter().enumerate() {
        let (di, dj) = (basis.digit(s, i), basis.digit(s, j));
        let (mi, mj) = (ki.twice_m(di), kj.twice_m(dj));
        t.push((col, col, T::lit((mi * mj) as f64) * quarter));
        // S+_i S-_j : digit_i decreases, digit_j increases
        if di > 0 && dj + 1 < kj.dim() {
            let c = ki.raise_coeff::<T>(mi) * kj.raise_coeff::<T>(mj - 2);
            let s2 = basis.with_digit(basis.with_digit(s, i, di - 1), j, dj + 1);
            let row = basis.index_of(s2).expect("S+S- preserves the sector");
            t.push((row, col, half * c));
        }
        if dj > 0 && di + 1 < ki.dim() {
            let c = kj.raise_coeff::<T>(mj) * ki.raise_coeff::<T>(mi - 2);
            let s2 = basis.with_digit(basis.with_digit(s, j, dj - 1), i, di + 1);
            let row = basis.index_of(s2).expect("S-S+ preserves the sector");
            t.push((row, col, half * c));
        }
    }
    SparseOperator::from_triplets(basis.dim(), basis.dim(), basis.twice_sz(), basis.twice_sz(), t)
}

/// Diagonal `S^z` of one site.
pub fn site_sz<T: Real>(basis: &SectorBasis, site: usize) -> Result<SparseOperator<T>> {
    check_site(basis, site)?;
    let half = T::lit(0.5);
    let t =
        basis.states().iter().enumerate().map(|(k, &s)| (k, k, T::lit(basis.twice_m(s, site) as f64) * half)).collect();
    Ok(SparseOperator::from_triplets(basis.dim(), basis.dim(), basis.twice_sz(), basis.twice_sz(), t))
}

/// `S^-` of one site, mapping `from` (magnetization M) into `to` (M - 1).
pub fn site_lowering<T: Real>(from: &SectorBasis, to: &SectorBasis, site: usize) -> Result<SparseOperator<T>> {
    ladder(from, to, site, false)
}

/// `S^+` of one site, mapping `from` (magnetization M) into `to` (M + 1).
pub fn site_raising<T: Real>(from: &SectorBasis, to: &SectorBasis, site: usize) -> Result<SparseOperator<T>> {
    ladder(from, to, site, true)
}

fn ladder<T: Real>(from: &SectorBasis, to: &SectorBasis, site: usize, raise: bool) -> Result<SparseOperator<T>> {
    check_site(from, site)?;
    let step = if raise { 2 } else { -2 };
    if to.twice_sz() != from.twice_sz() + step || to.sites() != from.sites() {
        return Err(Error::Domain(format!(
            "ladder operator cannot map sector 2Sz={} into 2Sz={}",
            from.twice_sz(),
            to.twice_sz()
        )));
    }
    let kind = from.sites()[site];
    let mut t = Vec::with_capacity(from.dim());
    for (col, &s) in from.states().iter().enumerate() {
        let d = from.digit(s, site);
        let m = kind.twice_m(d);
        let (new_digit, coeff) = if raise {
            if d == 0 {
                continue;
            }
            (d - 1, kind.raise_coeff::<T>(m))
        } else {
            if d + 1 >= kind.dim() {
                continue;
            }
            (d + 1, kind.raise_coeff::<T>(m - 2))
        };
        let row = to.index_of(from.with_digit(s, site, new_digit)).expect("ladder target in sector");
        t.push((row, col, coeff));
    }
    Ok(SparseOperator::from_triplets(to.dim(), from.dim(), from.twice_sz(), to.twice_sz(), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_sector_basis;
    use nalgebra::SymmetricEigen;

    fn full_space_eigs(form: CouplingForm) -> Vec<f64> {
        let mut all = Vec::new();
        for m in -2..=2 {
            let b = build_sector_basis(2, m, false).unwrap();
            let op = two_site_coupling::<f64>(&b, 0, 1, form).unwrap();
            all.extend(SymmetricEigen::new(op.to_dense()).eigenvalues.iter().copied());
        }
        all.sort_by(f64::total_cmp);
        all
    }

    #[test]
    fn dimer_bilinear_multiplets() {
        let e = full_space_eigs(CouplingForm::Bilinear);
        let expected = [-2.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13, "{e:?}");
        }
    }

    #[test]
    fn dimer_biquadratic_multiplets() {
        let e = full_space_eigs(CouplingForm::Biquadratic);
        // 1 (x8: triplet + quintet), 4 (singlet)
        let expected = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13, "{e:?}");
        }
    }

    #[test]
    fn couplings_are_symmetric() {
        for m in -1..=1 {
            let b = build_sector_basis(4, m, true).unwrap();
            for form in [CouplingForm::Bilinear, CouplingForm::Biquadratic] {
                assert!(two_site_coupling::<f64>(&b, 1, 3, form).unwrap().asymmetry() < 1e-14);
            }
            let p = two_site_coupling::<f64>(&b, 0, 1, CouplingForm::ProbeHeisenberg).unwrap();
            assert!(p.asymmetry() < 1e-14);
        }
    }

    #[test]
    fn probe_form_requires_half_spin() {
        let b = build_sector_basis(4, 0, true).unwrap();
        assert!(two_site_coupling::<f64>(&b, 1, 2, CouplingForm::ProbeHeisenberg).is_err());
        assert!(two_site_coupling::<f64>(&b, 4, 5, CouplingForm::ProbeHeisenberg).is_ok());
    }

    #[test]
    fn site_errors() {
        let b = build_sector_basis(2, 0, false).unwrap();
        assert!(matches!(
            two_site_coupling::<f64>(&b, 0, 2, CouplingForm::Bilinear),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(matches!(two_site_coupling::<f64>(&b, 1, 1, CouplingForm::Bilinear), Err(Error::SameSite(1))));
    }

    #[test]
    fn ladder_is_adjoint_pair() {
        let b0 = build_sector_basis(4, 0, false).unwrap();
        let b1 = build_sector_basis(4, 1, false).unwrap();
        let up = site_raising::<f64>(&b0, &b1, 2).unwrap();
        let down = site_lowering::<f64>(&b1, &b0, 2).unwrap();
        assert_eq!(up.transpose(), down);
        assert!(site_raising::<f64>(&b0, &b0, 2).is_err());
    }

    #[test]
    fn from_triplets_sums_and_drops() {
        let op = SparseOperator::<f64>::from_triplets(
            2,
            2,
            0,
            0,
            vec![(0, 0, 1.0), (0, 0, 0.5), (1, 0, 1e-16), (1, 1, 2.0)],
        );
        assert_eq!(op.nnz(), 2);
        assert_eq!(op.get(0, 0), 1.5);
        assert_eq!(op.get(1, 0), 0.0);
    }

    #[test]
    fn sparse_product_matches_dense() {
        let b = build_sector_basis(4, 0, false).unwrap();
        let a = two_site_coupling::<f64>(&b, 0, 1, CouplingForm::Bilinear).unwrap();
        let c = two_site_coupling::<f64>(&b, 1, 2, CouplingForm::Bilinear).unwrap();
        let diff = a.mul(&c).to_dense() - a.to_dense() * c.to_dense();
        assert!(diff.amax() < 1e-14);
    }
}
