//! Total-S^z sector bases of a spin-1 chain, optionally flanked by two
//! spin-1/2 probes.
//!
//! A configuration is a mixed-radix integer label. Each site contributes one
//! digit (its local state index, 0 = highest `m`), with the first site as the
//! most significant digit, so ascending labels are lexicographic in the local
//! `m`-values. With probes the site order is `[probe A, chain 1..L, probe B]`.

use crate::spin::SpinKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    chain_len: usize,
    probes: bool,
    sites: Vec<SpinKind>,
    place: Vec<u64>,
    twice_sz: i32,
    states: Vec<u64>,
}

impl SectorBasis {
    pub fn chain_len(&self) -> usize {
        self.chain_len
    }

    pub fn has_probes(&self) -> bool {
        self.probes
    }

    pub fn sites(&self) -> &[SpinKind] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Total magnetization of the sector. With probes this is still an
    /// integer since the two spin-1/2 contributions pair up.
    pub fn sz_total(&self) -> i32 {
        self.twice_sz / 2
    }

    pub fn twice_sz(&self) -> i32 {
        self.twice_sz
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn label(&self, index: usize) -> u64 {
        self.states[index]
    }

    pub fn index_of(&self, label: u64) -> Option<usize> {
        self.states.binary_search(&label).ok()
    }

    /// Local state index of `site` in configuration `label`.
    pub fn digit(&self, label: u64, site: usize) -> usize {
        ((label / self.place[site]) % self.sites[site].dim() as u64) as usize
    }

    /// `2m` of `site` in configuration `label`.
    pub fn twice_m(&self, label: u64, site: usize) -> i32 {
        self.sites[site].twice_m(self.digit(label, site))
    }

    /// Replaces the digit of `site` in `label`.
    pub fn with_digit(&self, label: u64, site: usize, digit: usize) -> u64 {
        let old = self.digit(label, site) as u64;
        label - old * self.place[site] + digit as u64 * self.place[site]
    }

    /// Sum of `2m` over all sites of a configuration.
    pub fn twice_sz_of(&self, label: u64) -> i32 {
        (0..self.sites.len()).map(|s| self.twice_m(label, s)).sum()
    }

    /// Configuration position of chain site `i`, counted from 1 as in the
    /// chain Hamiltonian.
    pub fn chain_site(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.chain_len {
            return Err(Error::SiteOutOfRange { site: i, sites: self.chain_len });
        }
        Ok(if self.probes { i } else { i - 1 })
    }

    pub fn probe_a(&self) -> Option<usize> {
        self.probes.then_some(0)
    }

    pub fn probe_b(&self) -> Option<usize> {
        self.probes.then_some(self.chain_len + 1)
    }

    /// The sector with the same site layout and a different magnetization.
    pub fn sibling(&self, sz_total: i32) -> Result<SectorBasis> {
        build_sector_basis(self.chain_len, sz_total, self.probes)
    }
}

/// Enumerates all configurations with total `S^z = sz_total`.
///
/// Odd chain lengths are rejected; an unreachable magnetization yields an
/// empty basis.
pub fn build_sector_basis(chain_len: usize, sz_total: i32, probes: bool) -> Result<SectorBasis> {
    if chain_len < 2 || !chain_len.is_multiple_of(2) {
        return Err(Error::InvalidLength(chain_len));
    }
    let mut sites = Vec::with_capacity(chain_len + 2);
    if probes {
        sites.push(SpinKind::Half);
    }
    sites.extend(std::iter::repeat_n(SpinKind::One, chain_len));
    if probes {
        sites.push(SpinKind::Half);
    }

    let mut place = vec![1u64; sites.len()];
    for k in (0..sites.len().saturating_sub(1)).rev() {
        place[k] = place[k + 1] * sites[k + 1].dim() as u64;
    }

    // suffix_max[k] = largest 2*Sz reachable by sites k..
    let mut suffix_max = vec![0i32; sites.len() + 1];
    for k in (0..sites.len()).rev() {
        suffix_max[k] = suffix_max[k + 1] + sites[k].twice_spin();
    }

    let twice_sz = 2 * sz_total;
    let mut states = Vec::new();
    if twice_sz.abs() <= suffix_max[0] {
        enumerate(&sites, &place, &suffix_max, 0, twice_sz, 0, &mut states);
    }

    Ok(SectorBasis { chain_len, probes, sites, place, twice_sz, states })
}

fn enumerate(
    sites: &[SpinKind],
    place: &[u64],
    suffix_max: &[i32],
    site: usize,
    remaining: i32,
    prefix: u64,
    out: &mut Vec<u64>,
) {
    if site == sites.len() {
        if remaining == 0 {
            out.push(prefix);
        }
        return;
    }
    let kind = sites[site];
    for digit in 0..kind.dim() {
        let rest = remaining - kind.twice_m(digit);
        if rest.abs() <= suffix_max[site + 1] {
            enumerate(sites, place, suffix_max, site + 1, rest, prefix + digit as u64 * place[site], out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimer_sectors() {
        let top = build_sector_basis(2, 2, false).unwrap();
        assert_eq!(top.dim(), 1);
        assert_eq!(top.twice_m(top.label(0), 0), 2);
        assert_eq!(top.twice_m(top.label(0), 1), 2);

        let zero = build_sector_basis(2, 0, false).unwrap();
        assert_eq!(zero.dim(), 3);
        let ms: Vec<(i32, i32)> =
            zero.states().iter().map(|&s| (zero.twice_m(s, 0) / 2, zero.twice_m(s, 1) / 2)).collect();
        assert_eq!(ms, vec![(1, -1), (0, 0), (-1, 1)]);
    }

    #[test]
    fn odd_length_rejected() {
        assert!(matches!(build_sector_basis(3, 0, false), Err(Error::InvalidLength(3))));
        assert!(build_sector_basis(0, 0, false).is_err());
    }

    #[test]
    fn out_of_range_magnetization_is_empty() {
        assert!(build_sector_basis(4, 5, false).unwrap().is_empty());
        assert!(build_sector_basis(4, -5, false).unwrap().is_empty());
        assert_eq!(build_sector_basis(4, 5, true).unwrap().dim(), 1);
        assert!(build_sector_basis(4, 6, true).unwrap().is_empty());
    }

    #[test]
    fn probe_layout() {
        let b = build_sector_basis(2, 0, true).unwrap();
        assert_eq!(b.sites(), &[SpinKind::Half, SpinKind::One, SpinKind::One, SpinKind::Half]);
        assert_eq!(b.probe_a(), Some(0));
        assert_eq!(b.probe_b(), Some(3));
        assert_eq!(b.chain_site(1).unwrap(), 1);
        assert_eq!(b.chain_site(2).unwrap(), 2);
        assert!(b.chain_site(3).is_err());
        for &s in b.states() {
            assert_eq!(b.twice_sz_of(s), 0);
        }
    }

    #[test]
    fn labels_strictly_increase_and_rebuild_identically() {
        let a = build_sector_basis(6, 1, true).unwrap();
        assert!(a.states().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a, build_sector_basis(6, 1, true).unwrap());
    }

    #[test]
    fn with_digit_roundtrip() {
        let b = build_sector_basis(4, 0, false).unwrap();
        let s = b.label(5);
        let d = b.digit(s, 2);
        let t = b.with_digit(s, 2, (d + 1) % 3);
        assert_eq!(b.digit(t, 2), (d + 1) % 3);
        assert_eq!(b.with_digit(t, 2, d), s);
    }
}
