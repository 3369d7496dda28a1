//! Hamiltonian definitions, operator matrices and local operators.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra_sparse::CsrMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DiagonalOperator, FockBasis, TruncationScheme};
use crate::lattice::{LatticeGraph, Region};
use crate::linalg::{
    csr_from_triplets, csr_to_dense, dense_to_csr, hermitian_defect_csr, hermitian_defect_dense,
    unitarity_defect, CMatrix, LinearOp, C64, ONE, ZERO,
};

/// Coefficient times a product of occupation powers over the sites of an
/// interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// Polynomial in the number operators of a set of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    sites: Region,
    terms: Vec<Monomial>,
}

impl Interaction {
    pub fn new(sites: Vec<usize>, terms: Vec<Monomial>) -> Result<Self> {
        let region = Region::new(sites.clone());
        if region.len() != sites.len() || region.sites() != sites.as_slice() {
            return Err(Error::Model("interaction sites must be sorted and distinct".into()));
        }
        if region.is_empty() {
            return Err(Error::Model("interaction without sites".into()));
        }
        for t in &terms {
            if t.powers.len() != sites.len() {
                return Err(Error::Model("monomial arity does not match its sites".into()));
            }
            if !t.coef.is_finite() {
                return Err(Error::Model("non-finite interaction coefficient".into()));
            }
        }
        Ok(Interaction { sites: region, terms })
    }

    /// sum_p coeffs[p] n^p on one site.
    pub fn onsite(site: usize, coeffs: &[f64]) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(p, &c)| Monomial { coef: c, powers: vec![p as u32] })
            .collect();
        Interaction { sites: Region::single(site), terms }
    }

    pub fn sites(&self) -> &Region {
        &self.sites
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn evaluate(&self, occ: &[u8]) -> f64 {
        self.terms
            .iter()
            .map(|m| {
                m.coef
                    * self
                        .sites
                        .sites()
                        .iter()
                        .zip(&m.powers)
                        .map(|(&s, &p)| (occ[s] as f64).powi(p as i32))
                        .product::<f64>()
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hopping {
    pub i: usize,
    pub j: usize,
    pub amplitude: f64,
}

/// Nearest-neighbour hopping plus number-conserving interactions.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    lattice: Arc<LatticeGraph>,
    hoppings: Vec<Hopping>,
    interactions: Vec<Interaction>,
}

impl HamiltonianSpec {
    pub fn new(
        lattice: Arc<LatticeGraph>,
        hoppings: Vec<Hopping>,
        interactions: Vec<Interaction>,
    ) -> Result<Self> {
        for h in &hoppings {
            lattice.check_site(h.i)?;
            lattice.check_site(h.j)?;
            if lattice.dist(h.i, h.j) != 1 {
                return Err(Error::Model(format!("hopping {}-{} is not along an edge", h.i, h.j)));
            }
            if !h.amplitude.is_finite() {
                return Err(Error::Model("non-finite hopping amplitude".into()));
            }
        }
        for v in &interactions {
            lattice.check_region(v.sites())?;
        }
        Ok(HamiltonianSpec { lattice, hoppings, interactions })
    }

    /// J (b_i b_j^dagger + h.c.) on every edge, U/2 n(n-1) - mu n on every site.
    pub fn bose_hubbard(lattice: Arc<LatticeGraph>, j: f64, u: f64, mu: f64) -> Result<Self> {
        let hoppings = lattice
            .edges()
            .iter()
            .map(|&(a, b)| Hopping { i: a, j: b, amplitude: j })
            .collect();
        let interactions = (0..lattice.n_sites())
            .map(|i| Interaction::onsite(i, &[0.0, -u / 2.0 - mu, u / 2.0]))
            .filter(|v| !v.terms.is_empty())
            .collect();
        Self::new(lattice, hoppings, interactions)
    }

    pub fn lattice(&self) -> &Arc<LatticeGraph> {
        &self.lattice
    }

    pub fn hoppings(&self) -> &[Hopping] {
        &self.hoppings
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    /// Largest hopping magnitude.
    pub fn j_bar(&self) -> f64 {
        self.hoppings.iter().map(|h| h.amplitude.abs()).fold(0.0, f64::max)
    }

    /// Interaction range: at least 1, otherwise the largest size or diameter
    /// of an interaction support.
    pub fn locality(&self) -> usize {
        self.interactions
            .iter()
            .map(|v| v.sites().len().max(self.lattice.diameter(v.sites())))
            .max()
            .unwrap_or(1)
            .max(1)
    }

    /// Same hoppings, extra interaction terms appended.
    pub fn with_interactions(&self, extra: &[Interaction]) -> Result<Self> {
        let mut all = self.interactions.clone();
        all.extend_from_slice(extra);
        Self::new(self.lattice.clone(), self.hoppings.clone(), all)
    }
}

/// Which terms of a Hamiltonian enter an assembled matrix.
#[derive(Clone, Debug, Default)]
pub struct TermSelection {
    /// Keep hoppings with both ends here; `None` keeps all.
    pub hop_region: Option<Region>,
    /// Keep interactions supported inside this region; `None` keeps all.
    pub interaction_region: Option<Region>,
    /// Keep only the terms straddling the boundary of this region.
    pub straddling: Option<Region>,
    pub truncation: TruncationScheme,
}

impl TermSelection {
    fn keeps_hop(&self, h: &Hopping) -> bool {
        if let Some(x) = &self.straddling {
            return x.contains(h.i) != x.contains(h.j);
        }
        self.hop_region.as_ref().is_none_or(|r| r.contains(h.i) && r.contains(h.j))
    }

    fn keeps_interaction(&self, v: &Interaction) -> bool {
        if let Some(x) = &self.straddling {
            let inside = v.sites().sites().iter().filter(|&&s| x.contains(s)).count();
            return inside > 0 && inside < v.sites().len();
        }
        self.interaction_region.as_ref().is_none_or(|r| v.sites().is_subset(r))
    }
}

/// Sparse matrix of the selected terms, projected by the truncation scheme.
pub fn assemble_selected(
    spec: &HamiltonianSpec,
    basis: &Arc<FockBasis>,
    sel: &TermSelection,
) -> Result<OperatorMatrix> {
    if basis.n_sites() != spec.lattice.n_sites() {
        return Err(Error::BasisMismatch);
    }
    for (r, _) in &sel.truncation.0 {
        spec.lattice.check_region(r)?;
    }
    let hops: Vec<&Hopping> = spec.hoppings.iter().filter(|h| sel.keeps_hop(h)).collect();
    let ints: Vec<&Interaction> =
        spec.interactions.iter().filter(|v| sel.keeps_interaction(v)).collect();
    let cutoffs = basis.cutoffs();
    let rows: Vec<Vec<(usize, usize, C64)>> = (0..basis.dim())
        .into_par_iter()
        .map(|r| {
            let occ = basis.occupation(r);
            let mut out = Vec::new();
            if !sel.truncation.admits(occ) {
                return out;
            }
            let diag: f64 = ints.iter().map(|v| v.evaluate(occ)).sum();
            if diag != 0.0 {
                out.push((r, r, C64::new(diag, 0.0)));
            }
            let mut moved = occ.to_vec();
            for h in &hops {
                for (from, to) in [(h.i, h.j), (h.j, h.i)] {
                    if occ[from] == 0 || occ[to] >= cutoffs[to] {
                        continue;
                    }
                    moved[from] -= 1;
                    moved[to] += 1;
                    if sel.truncation.admits(&moved) {
                        if let Some(c) = basis.index_of(&moved) {
                            let amp = h.amplitude
                                * ((occ[from] as f64) * (occ[to] as f64 + 1.0)).sqrt();
                            out.push((r, c, C64::new(amp, 0.0)));
                        }
                    }
                    moved[from] += 1;
                    moved[to] -= 1;
                }
            }
            out
        })
        .collect();
    let trip = rows.into_iter().flatten().collect();
    Ok(OperatorMatrix::from_csr(basis.clone(), csr_from_triplets(basis.dim(), trip)))
}

/// Full Hamiltonian on the basis; hops leaving the cutoff are dropped.
pub fn assemble_hamiltonian(spec: &HamiltonianSpec, basis: &Arc<FockBasis>) -> Result<OperatorMatrix> {
    assemble_selected(spec, basis, &TermSelection::default())
}

/// Truncated Hamiltonian Pi H Pi for the given truncation scheme.
pub fn effective_hamiltonian(
    spec: &HamiltonianSpec,
    basis: &Arc<FockBasis>,
    scheme: &TruncationScheme,
) -> Result<OperatorMatrix> {
    assemble_selected(spec, basis, &TermSelection { truncation: scheme.clone(), ..Default::default() })
}

/// Terms supported inside `x`.
pub fn subset_hamiltonian(
    spec: &HamiltonianSpec,
    basis: &Arc<FockBasis>,
    x: &Region,
) -> Result<OperatorMatrix> {
    spec.lattice.check_region(x)?;
    assemble_selected(
        spec,
        basis,
        &TermSelection {
            hop_region: Some(x.clone()),
            interaction_region: Some(x.clone()),
            ..Default::default()
        },
    )
}

/// Terms coupling `x` to its complement.
pub fn boundary_hamiltonian(
    spec: &HamiltonianSpec,
    basis: &Arc<FockBasis>,
    x: &Region,
) -> Result<OperatorMatrix> {
    spec.lattice.check_region(x)?;
    assemble_selected(spec, basis, &TermSelection { straddling: Some(x.clone()), ..Default::default() })
}

#[derive(Clone, Debug)]
pub enum Storage {
    Sparse(CsrMatrix<C64>),
    Dense(CMatrix),
}

/// Square operator on a Fock basis.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    basis: Arc<FockBasis>,
    storage: Storage,
}

impl OperatorMatrix {
    pub fn from_csr(basis: Arc<FockBasis>, m: CsrMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), basis.dim());
        OperatorMatrix { basis, storage: Storage::Sparse(m) }
    }

    pub fn from_dense(basis: Arc<FockBasis>, m: CMatrix) -> Result<Self> {
        if m.nrows() != basis.dim() || m.ncols() != basis.dim() {
            return Err(Error::Argument(format!(
                "{}x{} matrix on a basis of dimension {}",
                m.nrows(),
                m.ncols(),
                basis.dim()
            )));
        }
        Ok(OperatorMatrix { basis, storage: Storage::Dense(m) })
    }

    pub fn from_diagonal(d: &DiagonalOperator) -> Self {
        let trip = d
            .values()
            .iter()
            .enumerate()
            .map(|(k, &v)| (k, k, C64::new(v, 0.0)))
            .collect();
        Self::from_csr(d.basis().clone(), csr_from_triplets(d.basis().dim(), trip))
    }

    pub fn identity(basis: &Arc<FockBasis>) -> Self {
        let trip = (0..basis.dim()).map(|k| (k, k, ONE)).collect();
        Self::from_csr(basis.clone(), csr_from_triplets(basis.dim(), trip))
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Dense copy, refusing dimensions above `cap`.
    pub fn to_dense(&self, cap: usize) -> Result<CMatrix> {
        if self.dim() > cap {
            return Err(Error::DenseCapExceeded { dim: self.dim(), cap });
        }
        Ok(self.dense())
    }

    /// Dense copy without a size check.
    pub fn dense(&self) -> CMatrix {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(m) => csr_to_dense(m),
        }
    }

    pub fn to_sparse(&self) -> CsrMatrix<C64> {
        match &self.storage {
            Storage::Sparse(m) => m.clone(),
            Storage::Dense(m) => dense_to_csr(m),
        }
    }

    /// Nonzero entries as (row, col, value).
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        match &self.storage {
            Storage::Sparse(m) => m.triplet_iter().map(|(r, c, v)| (r, c, *v)).collect(),
            Storage::Dense(m) => {
                let mut t = Vec::new();
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        if m[(r, c)] != ZERO {
                            t.push((r, c, m[(r, c)]));
                        }
                    }
                }
                t
            }
        }
    }

    pub fn hermitian_defect(&self) -> f64 {
        match &self.storage {
            Storage::Sparse(m) => hermitian_defect_csr(m),
            Storage::Dense(m) => hermitian_defect_dense(m),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().iter().all(|&(r, c, _)| r == c)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        let mut d = vec![ZERO; self.dim()];
        for (r, c, v) in self.triplets() {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.triplets().iter().map(|t| t.2.norm()).fold(0.0, f64::max)
    }

    fn check_same(&self, other: &OperatorMatrix) -> Result<()> {
        if self.basis.same_as(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_same(other)?;
        match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let mut t: Vec<_> = a.triplet_iter().map(|(r, c, v)| (r, c, *v)).collect();
                t.extend(b.triplet_iter().map(|(r, c, v)| (r, c, *v)));
                Ok(Self::from_csr(self.basis.clone(), csr_from_triplets(self.dim(), t)))
            }
            _ => Self::from_dense(self.basis.clone(), self.dense() + other.dense()),
        }
    }

    pub fn scale(&self, w: C64) -> OperatorMatrix {
        let storage = match &self.storage {
            Storage::Sparse(m) => {
                let t = m.triplet_iter().map(|(r, c, v)| (r, c, *v * w)).collect();
                Storage::Sparse(csr_from_triplets(self.dim(), t))
            }
            Storage::Dense(m) => Storage::Dense(m * w),
        };
        OperatorMatrix { basis: self.basis.clone(), storage }
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.add(&other.scale(-ONE))
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        let storage = match &self.storage {
            Storage::Sparse(m) => {
                let t = m.triplet_iter().map(|(r, c, v)| (c, r, v.conj())).collect();
                Storage::Sparse(csr_from_triplets(self.dim(), t))
            }
            Storage::Dense(m) => Storage::Dense(m.adjoint()),
        };
        OperatorMatrix { basis: self.basis.clone(), storage }
    }

    /// self * other; sparse when both factors are sparse.
    pub fn matmul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_same(other)?;
        match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                Ok(Self::from_csr(self.basis.clone(), a * b))
            }
            _ => Self::from_dense(self.basis.clone(), self.dense() * other.dense()),
        }
    }

    /// [self, other]
    pub fn commutator(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Largest entry of [self, diag].
    pub fn commutator_with_diagonal(&self, d: &DiagonalOperator) -> f64 {
        let v = d.values();
        self.triplets()
            .iter()
            .map(|&(r, c, a)| (a * (v[c] - v[r])).norm())
            .fold(0.0, f64::max)
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.dense())
    }

    /// Sites on which the operator acts non-trivially.
    pub fn support(&self) -> Region {
        operator_support(self)
    }

    /// Whether the operator acts as the identity outside `x`.
    pub fn lives_on(&self, x: &Region) -> bool {
        let keep = x.mask(self.basis.n_sites());
        lives_on(&self.basis, &self.triplets(), &keep)
    }

    /// <a|self|b>
    pub fn matrix_element(&self, a: &[C64], b: &[C64]) -> C64 {
        let y = self.apply(b);
        crate::linalg::vec_dotc(a, &y)
    }
}

impl LinearOp for OperatorMatrix {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply_to(&self, x: &[C64], y: &mut [C64]) {
        match &self.storage {
            Storage::Sparse(m) => m.apply_to(x, y),
            Storage::Dense(m) => m.apply_to(x, y),
        }
    }
}

/// Greedy minimal region on which the operator lives: every entry leaves the
/// complement untouched and its value depends only on the occupations inside.
/// In a fixed-number sector the choice is not unique; sites are dropped in
/// index order.
fn operator_support(op: &OperatorMatrix) -> Region {
    let basis = op.basis();
    let n = basis.n_sites();
    let trip = op.triplets();
    let mut keep = vec![true; n];
    for i in 0..n {
        keep[i] = false;
        if !lives_on(basis, &trip, &keep) {
            keep[i] = true;
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}

fn lives_on(basis: &FockBasis, trip: &[(usize, usize, C64)], keep: &[bool]) -> bool {
    let split = |occ: &[u8]| -> (Vec<u8>, Vec<u8>) {
        let mut inside = Vec::new();
        let mut outside = Vec::new();
        for (s, &m) in occ.iter().enumerate() {
            if keep[s] { inside.push(m) } else { outside.push(m) }
        }
        (inside, outside)
    };
    let mut groups: HashMap<(Vec<u8>, Vec<u8>), (C64, usize)> = HashMap::new();
    for &(r, c, v) in trip {
        let (ir, or) = split(basis.occupation(r));
        let (ic, oc) = split(basis.occupation(c));
        if or != oc {
            return false;
        }
        let e = groups.entry((ir, ic)).or_insert((v, 0));
        if (e.0 - v).norm() > 1e-12 * (1.0 + v.norm()) {
            return false;
        }
        e.1 += 1;
    }
    // zero entries count too: each admissible outside configuration must
    // carry the same value
    let mut by_inside: HashMap<Vec<u8>, Vec<Vec<u8>>> = HashMap::new();
    for k in 0..basis.dim() {
        let (i, o) = split(basis.occupation(k));
        by_inside.entry(i).or_default().push(o);
    }
    let merge = |inside: &[u8], outside: &[u8]| -> Vec<u8> {
        let (mut a, mut b) = (inside.iter(), outside.iter());
        keep.iter().map(|&k| if k { *a.next().unwrap() } else { *b.next().unwrap() }).collect()
    };
    for ((a, b), (_, count)) in &groups {
        let admissible = by_inside
            .get(a)
            .map(|outs| outs.iter().filter(|o| basis.index_of(&merge(b, o)).is_some()).count())
            .unwrap_or(0);
        if admissible != *count {
            return false;
        }
    }
    true
}

/// Local operators built directly on a basis.
#[derive(Clone, Debug)]
pub enum LocalOperatorKind {
    Number { site: usize },
    Creation { site: usize },
    Annihilation { site: usize },
    /// Projector onto n_X = value.
    ProjectorEq { region: Region, value: usize },
    /// Projector onto n_X >= value.
    ProjectorGe { region: Region, value: usize },
    /// exp(i angle n_i)
    Phase { site: usize, angle: f64 },
    /// Matrix on the product space of `region` with the basis cutoffs,
    /// local states ordered lexicographically.
    Custom { region: Region, matrix: CMatrix, unitary: bool },
}

pub fn local_operator(basis: &Arc<FockBasis>, kind: &LocalOperatorKind) -> Result<OperatorMatrix> {
    let lat = basis.lattice();
    let dim = basis.dim();
    let cut = basis.cutoffs();
    let ladder = |site: usize, raise: bool| -> Result<OperatorMatrix> {
        lat.check_site(site)?;
        let mut trip = Vec::new();
        let mut moved = vec![0u8; basis.n_sites()];
        for c in 0..dim {
            let occ = basis.occupation(c);
            moved.copy_from_slice(occ);
            let amp = if raise {
                if occ[site] >= cut[site] {
                    continue;
                }
                moved[site] += 1;
                (occ[site] as f64 + 1.0).sqrt()
            } else {
                if occ[site] == 0 {
                    continue;
                }
                moved[site] -= 1;
                (occ[site] as f64).sqrt()
            };
            if let Some(r) = basis.index_of(&moved) {
                trip.push((r, c, C64::new(amp, 0.0)));
            }
        }
        Ok(OperatorMatrix::from_csr(basis.clone(), csr_from_triplets(dim, trip)))
    };
    match kind {
        LocalOperatorKind::Number { site } => {
            Ok(OperatorMatrix::from_diagonal(&DiagonalOperator::number(basis, *site)?))
        }
        LocalOperatorKind::Creation { site } => ladder(*site, true),
        LocalOperatorKind::Annihilation { site } => ladder(*site, false),
        LocalOperatorKind::ProjectorEq { region, value } => Ok(OperatorMatrix::from_diagonal(
            &DiagonalOperator::projector_eq(basis, region, *value)?,
        )),
        LocalOperatorKind::ProjectorGe { region, value } => Ok(OperatorMatrix::from_diagonal(
            &DiagonalOperator::projector_ge(basis, region, *value)?,
        )),
        LocalOperatorKind::Phase { site, angle } => {
            lat.check_site(*site)?;
            let trip = (0..dim)
                .map(|k| {
                    let n = basis.occupation(k)[*site] as f64;
                    (k, k, C64::from_polar(1.0, angle * n))
                })
                .collect();
            Ok(OperatorMatrix::from_csr(basis.clone(), csr_from_triplets(dim, trip)))
        }
        LocalOperatorKind::Custom { region, matrix, unitary } => {
            lat.check_region(region)?;
            let sites = region.sites();
            let local_dims: Vec<usize> = sites.iter().map(|&s| cut[s] as usize + 1).collect();
            let ldim: usize = local_dims.iter().product();
            if matrix.nrows() != ldim || matrix.ncols() != ldim {
                return Err(Error::Argument(format!(
                    "custom operator on {} sites needs a {ldim}x{ldim} matrix",
                    sites.len()
                )));
            }
            if *unitary {
                let d = unitarity_defect(matrix);
                if d > 1e-10 {
                    return Err(Error::NotUnitary(d));
                }
            }
            let encode = |occ: &[u8]| {
                sites.iter().zip(&local_dims).fold(0usize, |acc, (&s, &d)| acc * d + occ[s] as usize)
            };
            let mut trip = Vec::new();
            let mut moved = vec![0u8; basis.n_sites()];
            for c in 0..dim {
                let occ = basis.occupation(c);
                let lc = encode(occ);
                for lr in 0..ldim {
                    let v = matrix[(lr, lc)];
                    if v == ZERO {
                        continue;
                    }
                    moved.copy_from_slice(occ);
                    let mut rem = lr;
                    for (k, &s) in sites.iter().enumerate().rev() {
                        moved[s] = (rem % local_dims[k]) as u8;
                        rem /= local_dims[k];
                    }
                    if let Some(r) = basis.index_of(&moved) {
                        trip.push((r, c, v));
                    }
                }
            }
            Ok(OperatorMatrix::from_csr(basis.clone(), csr_from_triplets(dim, trip)))
        }
    }
}

/// Largest number of bosons an operator can add to a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CreationDegree {
    pub q0: usize,
    /// The degree equals the full span of n_X available in the basis.
    pub saturates_basis: bool,
}

pub fn creation_degree(op: &OperatorMatrix, x: &Region) -> Result<CreationDegree> {
    let basis = op.basis();
    basis.lattice().check_region(x)?;
    let mut q0 = 0i64;
    for (r, c, _) in op.triplets() {
        let diff = basis.region_number(r, x) as i64 - basis.region_number(c, x) as i64;
        q0 = q0.max(diff);
    }
    let (mut lo, mut hi) = (usize::MAX, 0usize);
    for k in 0..basis.dim() {
        let n = basis.region_number(k, x);
        lo = lo.min(n);
        hi = hi.max(n);
    }
    let q0 = q0 as usize;
    Ok(CreationDegree { q0, saturates_basis: q0 > 0 && q0 >= hi - lo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::DEFAULT_BASIS_CAP;
    use crate::lattice::LatticeKind;

    fn chain_basis(n: usize, cut: u8, sector: Option<usize>) -> (Arc<LatticeGraph>, Arc<FockBasis>) {
        let g = Arc::new(LatticeGraph::build(LatticeKind::Chain, &[n]).unwrap());
        let b = FockBasis::uniform(g.clone(), cut, sector, DEFAULT_BASIS_CAP).unwrap();
        (g, b)
    }

    #[test]
    fn two_site_single_boson() {
        let (g, b) = chain_basis(2, 1, Some(1));
        let spec = HamiltonianSpec::bose_hubbard(g, 1.0, 0.0, 0.0).unwrap();
        let h = assemble_hamiltonian(&spec, &b).unwrap().dense();
        assert_eq!(h[(0, 0)], ZERO);
        assert_eq!(h[(0, 1)], ONE);
        assert_eq!(h[(1, 0)], ONE);
    }

    #[test]
    fn onsite_energy_two_bosons() {
        let (g, b) = chain_basis(2, 2, Some(2));
        let spec = HamiltonianSpec::bose_hubbard(g, 0.0, 3.0, 0.5).unwrap();
        let h = assemble_hamiltonian(&spec, &b).unwrap();
        let d = h.diagonal();
        let k = b.index_of(&[2, 0]).unwrap();
        assert!((d[k].re - (3.0 - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn hermitian_and_number_conserving() {
        let (g, b) = chain_basis(4, 3, None);
        let spec = HamiltonianSpec::bose_hubbard(g, 0.7, 1.3, 0.2).unwrap();
        let h = assemble_hamiltonian(&spec, &b).unwrap();
        assert!(h.is_hermitian(1e-14));
        let n = DiagonalOperator::region_number(&b, &b.lattice().all_sites()).unwrap();
        assert_eq!(h.commutator_with_diagonal(&n), 0.0);
    }

    #[test]
    fn subset_plus_boundary_is_whole() {
        let (g, b) = chain_basis(5, 2, Some(4));
        let spec = HamiltonianSpec::bose_hubbard(g.clone(), 1.0, 2.0, 0.3).unwrap();
        let x = Region::new(vec![1, 2]);
        let rest = g.all_sites().difference(&x);
        let sum = subset_hamiltonian(&spec, &b, &x)
            .unwrap()
            .add(&subset_hamiltonian(&spec, &b, &rest).unwrap())
            .unwrap()
            .add(&boundary_hamiltonian(&spec, &b, &x).unwrap())
            .unwrap();
        let h = assemble_hamiltonian(&spec, &b).unwrap();
        assert!((sum.dense() - h.dense()).norm() < 1e-13);
    }

    #[test]
    fn truncation_none_and_total() {
        let (g, b) = chain_basis(4, 3, Some(4));
        let spec = HamiltonianSpec::bose_hubbard(g.clone(), 1.0, 1.0, 0.0).unwrap();
        let h = assemble_hamiltonian(&spec, &b).unwrap().dense();
        let e = effective_hamiltonian(&spec, &b, &TruncationScheme::none()).unwrap().dense();
        assert_eq!(h, e);
        let z = effective_hamiltonian(&spec, &b, &TruncationScheme::single(g.all_sites(), 0)).unwrap();
        assert!(z.triplets().iter().all(|&(r, c, _)| r == c));
    }

    #[test]
    fn truncated_hopping_bounded() {
        let (g, b) = chain_basis(3, 4, Some(4));
        let spec = HamiltonianSpec::bose_hubbard(g.clone(), 1.0, 0.0, 0.0).unwrap();
        for q in 1..=4 {
            let e = effective_hamiltonian(&spec, &b, &TruncationScheme::single(g.all_sites(), q))
                .unwrap();
            assert!(e.max_abs() <= 2f64.sqrt() * q as f64 + 1e-12);
        }
    }

    #[test]
    fn ladder_operators() {
        let (_, b) = chain_basis(2, 3, None);
        let a = local_operator(&b, &LocalOperatorKind::Annihilation { site: 0 }).unwrap();
        let ad = local_operator(&b, &LocalOperatorKind::Creation { site: 0 }).unwrap();
        assert!((a.adjoint().dense() - ad.dense()).norm() < 1e-14);
        let n = a.adjoint().matmul(&a).unwrap();
        let num = local_operator(&b, &LocalOperatorKind::Number { site: 0 }).unwrap();
        assert!((n.dense() - num.dense()).norm() < 1e-13);
    }

    #[test]
    fn creation_degrees() {
        let (_, b) = chain_basis(3, 3, None);
        let x = Region::single(1);
        let ad = local_operator(&b, &LocalOperatorKind::Creation { site: 1 }).unwrap();
        assert_eq!(creation_degree(&ad, &x).unwrap().q0, 1);
        let a = local_operator(&b, &LocalOperatorKind::Annihilation { site: 1 }).unwrap();
        let mixed = ad.matmul(&ad).unwrap().add(&a).unwrap();
        assert_eq!(creation_degree(&mixed, &x).unwrap().q0, 2);
        let p = local_operator(&b, &LocalOperatorKind::Phase { site: 1, angle: 0.4 }).unwrap();
        assert_eq!(creation_degree(&p, &x).unwrap().q0, 0);
        assert_eq!(creation_degree(&a, &x).unwrap().q0, 0);
    }

    #[test]
    fn support_detection() {
        let (g, b) = chain_basis(4, 2, Some(3));
        let p = local_operator(&b, &LocalOperatorKind::Number { site: 2 }).unwrap();
        assert_eq!(p.support().sites(), &[2]);
        let spec = HamiltonianSpec::bose_hubbard(g, 1.0, 0.0, 0.0).unwrap();
        let h12 = subset_hamiltonian(&spec, &b, &Region::new(vec![1, 2])).unwrap();
        assert_eq!(h12.support().sites(), &[1, 2]);
        assert!(OperatorMatrix::identity(&b).support().is_empty());
    }

    #[test]
    fn custom_embedding_matches_phase() {
        let (_, b) = chain_basis(3, 2, None);
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(3, |k, _| {
            C64::from_polar(1.0, 0.3 * k as f64)
        }));
        let c = local_operator(
            &b,
            &LocalOperatorKind::Custom { region: Region::single(1), matrix: m, unitary: true },
        )
        .unwrap();
        let p = local_operator(&b, &LocalOperatorKind::Phase { site: 1, angle: 0.3 }).unwrap();
        assert!((c.dense() - p.dense()).norm() < 1e-14);
    }

    #[test]
    fn non_edge_hopping_rejected() {
        let (g, _) = chain_basis(4, 1, None);
        let bad = HamiltonianSpec::new(g, vec![Hopping { i: 0, j: 2, amplitude: 1.0 }], vec![]);
        assert!(bad.is_err());
    }
}
