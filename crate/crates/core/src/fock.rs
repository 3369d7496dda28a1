//! Occupation-number bases, number operators and truncation projectors.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{LatticeGraph, Region};

pub const DEFAULT_BASIS_CAP: usize = 5_000_000;

/// Lexicographically ordered occupation states with per-site cutoffs and an
/// optional fixed total particle number.
#[derive(Debug)]
pub struct FockBasis {
    lattice: Arc<LatticeGraph>,
    cutoffs: Vec<u8>,
    sector: Option<usize>,
    states: Vec<u8>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
            || (self.cutoffs == other.cutoffs
                && self.sector == other.sector
                && self.lattice.edges() == other.lattice.edges()
                && self.lattice.n_sites() == other.lattice.n_sites())
    }
}

/// Number of states, without enumerating them.
pub fn basis_dimension(cutoffs: &[u8], sector: Option<usize>) -> u128 {
    match sector {
        None => cutoffs.iter().map(|&c| c as u128 + 1).product(),
        Some(n) => {
            // ways[k] = number of fillings of the processed sites with k bosons
            let mut ways = vec![0u128; n + 1];
            ways[0] = 1;
            for &c in cutoffs {
                let mut next = vec![0u128; n + 1];
                for (k, &w) in ways.iter().enumerate() {
                    if w == 0 {
                        continue;
                    }
                    for m in 0..=(c as usize).min(n - k) {
                        next[k + m] += w;
                    }
                }
                ways = next;
            }
            ways[n]
        }
    }
}

impl FockBasis {
    pub fn new(
        lattice: Arc<LatticeGraph>,
        cutoffs: Vec<u8>,
        sector: Option<usize>,
        cap: usize,
    ) -> Result<Arc<Self>> {
        let n = lattice.n_sites();
        if cutoffs.len() != n {
            return Err(Error::Basis(format!("{} cutoffs for {} sites", cutoffs.len(), n)));
        }
        let dim = basis_dimension(&cutoffs, sector);
        if dim > cap as u128 {
            return Err(Error::BasisTooLarge { dim, cap });
        }
        if dim == 0 {
            return Err(Error::Basis(format!("sector {sector:?} is empty")));
        }
        let mut states = Vec::with_capacity(dim as usize * n);
        let mut suffix_cap = vec![0usize; n + 1];
        for i in (0..n).rev() {
            suffix_cap[i] = suffix_cap[i + 1] + cutoffs[i] as usize;
        }
        let mut occ = vec![0u8; n];
        enumerate(0, 0, &cutoffs, sector, &suffix_cap, &mut occ, &mut states);
        debug_assert_eq!(states.len(), dim as usize * n);
        Ok(Arc::new(FockBasis { lattice, cutoffs, sector, states }))
    }

    /// Same cutoff on every site.
    pub fn uniform(
        lattice: Arc<LatticeGraph>,
        cutoff: u8,
        sector: Option<usize>,
        cap: usize,
    ) -> Result<Arc<Self>> {
        let n = lattice.n_sites();
        Self::new(lattice, vec![cutoff; n], sector, cap)
    }

    pub fn lattice(&self) -> &Arc<LatticeGraph> {
        &self.lattice
    }

    pub fn n_sites(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn dim(&self) -> usize {
        self.states.len() / self.n_sites()
    }

    pub fn cutoffs(&self) -> &[u8] {
        &self.cutoffs
    }

    pub fn max_cutoff(&self) -> u8 {
        self.cutoffs.iter().copied().max().unwrap_or(0)
    }

    pub fn sector(&self) -> Option<usize> {
        self.sector
    }

    pub fn occupation(&self, idx: usize) -> &[u8] {
        let n = self.n_sites();
        &self.states[idx * n..(idx + 1) * n]
    }

    /// Index of an occupation vector, if it belongs to the basis.
    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        let n = self.n_sites();
        if occ.len() != n {
            return None;
        }
        let (mut lo, mut hi) = (0, self.dim());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.occupation(mid).cmp(occ) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn total_number(&self, idx: usize) -> usize {
        self.occupation(idx).iter().map(|&x| x as usize).sum()
    }

    pub fn region_number(&self, idx: usize, x: &Region) -> usize {
        let occ = self.occupation(idx);
        x.sites().iter().map(|&i| occ[i] as usize).sum()
    }

    pub fn same_as(&self, other: &FockBasis) -> bool {
        self == other
    }
}

fn enumerate(
    site: usize,
    used: usize,
    cutoffs: &[u8],
    sector: Option<usize>,
    suffix_cap: &[usize],
    occ: &mut [u8],
    out: &mut Vec<u8>,
) {
    let n = cutoffs.len();
    if site == n {
        if sector.is_none_or(|s| s == used) {
            out.extend_from_slice(occ);
        }
        return;
    }
    let (lo, hi) = match sector {
        Some(s) => {
            let remaining = s - used;
            let hi = (cutoffs[site] as usize).min(remaining);
            let lo = remaining.saturating_sub(suffix_cap[site + 1]);
            (lo, hi)
        }
        None => (0, cutoffs[site] as usize),
    };
    for m in lo..=hi {
        occ[site] = m as u8;
        enumerate(site + 1, used + m, cutoffs, sector, suffix_cap, occ, out);
    }
    occ[site] = 0;
}

/// Site-wise truncation: every site of each region holds at most the paired
/// number of bosons.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruncationScheme(pub Vec<(Region, usize)>);

impl TruncationScheme {
    pub fn none() -> Self {
        TruncationScheme(Vec::new())
    }

    pub fn single(region: Region, q: usize) -> Self {
        TruncationScheme(vec![(region, q)])
    }

    pub fn with(mut self, region: Region, q: usize) -> Self {
        self.0.push((region, q));
        self
    }

    pub fn admits(&self, occ: &[u8]) -> bool {
        self.0
            .iter()
            .all(|(r, q)| r.sites().iter().all(|&i| (occ[i] as usize) <= *q))
    }
}

/// Operator diagonal in the occupation basis.
#[derive(Clone, Debug)]
pub struct DiagonalOperator {
    basis: Arc<FockBasis>,
    values: Vec<f64>,
}

impl DiagonalOperator {
    pub fn from_fn(basis: &Arc<FockBasis>, f: impl Fn(&[u8]) -> f64) -> Self {
        let values = (0..basis.dim()).map(|k| f(basis.occupation(k))).collect();
        DiagonalOperator { basis: basis.clone(), values }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// n_i
    pub fn number(basis: &Arc<FockBasis>, site: usize) -> Result<Self> {
        basis.lattice().check_site(site)?;
        Ok(Self::from_fn(basis, |o| o[site] as f64))
    }

    /// n_X
    pub fn region_number(basis: &Arc<FockBasis>, x: &Region) -> Result<Self> {
        basis.lattice().check_region(x)?;
        Ok(Self::from_fn(basis, |o| x.sites().iter().map(|&i| o[i] as f64).sum()))
    }

    /// Projector onto n_X = q.
    pub fn projector_eq(basis: &Arc<FockBasis>, x: &Region, q: usize) -> Result<Self> {
        basis.lattice().check_region(x)?;
        Ok(Self::from_fn(basis, |o| {
            let n: usize = x.sites().iter().map(|&i| o[i] as usize).sum();
            (n == q) as u8 as f64
        }))
    }

    /// Projector onto n_X >= q.
    pub fn projector_ge(basis: &Arc<FockBasis>, x: &Region, q: usize) -> Result<Self> {
        basis.lattice().check_region(x)?;
        Ok(Self::from_fn(basis, |o| {
            let n: usize = x.sites().iter().map(|&i| o[i] as usize).sum();
            (n >= q) as u8 as f64
        }))
    }

    /// Projector onto the states admitted by `scheme`.
    pub fn truncation(basis: &Arc<FockBasis>, scheme: &TruncationScheme) -> Result<Self> {
        for (r, _) in &scheme.0 {
            basis.lattice().check_region(r)?;
        }
        Ok(Self::from_fn(basis, |o| scheme.admits(o) as u8 as f64))
    }

    /// f(n_i) for a function of the occupation.
    pub fn site_function(basis: &Arc<FockBasis>, site: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        basis.lattice().check_site(site)?;
        Ok(Self::from_fn(basis, |o| f(o[site] as f64)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeKind;

    fn chain(n: usize) -> Arc<LatticeGraph> {
        Arc::new(LatticeGraph::build(LatticeKind::Chain, &[n]).unwrap())
    }

    #[test]
    fn sector_dimension_small() {
        let b = FockBasis::uniform(chain(3), 2, Some(2), DEFAULT_BASIS_CAP).unwrap();
        assert_eq!(b.dim(), 6);
        assert_eq!(b.occupation(0), &[0, 0, 2]);
        assert_eq!(b.occupation(5), &[2, 0, 0]);
    }

    #[test]
    fn unrestricted_dimension() {
        let b = FockBasis::uniform(chain(4), 1, None, DEFAULT_BASIS_CAP).unwrap();
        assert_eq!(b.dim(), 16);
    }

    #[test]
    fn index_round_trip() {
        let b = FockBasis::uniform(chain(5), 3, Some(4), DEFAULT_BASIS_CAP).unwrap();
        for k in 0..b.dim() {
            assert_eq!(b.index_of(b.occupation(k)), Some(k));
            assert_eq!(b.total_number(k), 4);
        }
        assert_eq!(b.index_of(&[4, 0, 0, 0, 0]), None);
    }

    #[test]
    fn counting_matches_enumeration() {
        for n in 1..6 {
            for c in 0..4u8 {
                for s in 0..8 {
                    let d = basis_dimension(&vec![c; n], Some(s));
                    if d == 0 {
                        continue;
                    }
                    let b = FockBasis::uniform(chain(n), c, Some(s), DEFAULT_BASIS_CAP).unwrap();
                    assert_eq!(b.dim() as u128, d);
                }
            }
        }
    }

    #[test]
    fn cap_enforced() {
        let err = FockBasis::uniform(chain(8), 4, None, 1000).unwrap_err();
        assert!(matches!(err, Error::BasisTooLarge { .. }));
    }

    #[test]
    fn number_and_projectors() {
        let b = FockBasis::uniform(chain(3), 2, Some(2), DEFAULT_BASIS_CAP).unwrap();
        let x = Region::new(vec![0, 1]);
        let nx = DiagonalOperator::region_number(&b, &x).unwrap();
        let p = DiagonalOperator::projector_eq(&b, &x, 1).unwrap();
        for k in 0..b.dim() {
            let o = b.occupation(k);
            assert_eq!(nx.values()[k], (o[0] + o[1]) as f64);
            assert_eq!(p.values()[k], ((o[0] + o[1]) == 1) as u8 as f64);
        }
        let t = DiagonalOperator::truncation(&b, &TruncationScheme::single(Region::single(2), 1)).unwrap();
        assert_eq!(t.values().iter().filter(|&&v| v == 0.0).count(), 1);
    }
}
