//! Finite lattices with graph distance, balls and geometric constants.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    Chain,
    Ring,
    Grid,
    Custom,
}

/// Undirected connected graph with all-pairs hop distances.
#[derive(Clone, Debug)]
pub struct LatticeGraph {
    kind: LatticeKind,
    dims: Vec<usize>,
    dimension: usize,
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    dist: Vec<u32>,
}

/// Sorted set of site indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Region(Vec<usize>);

impl Region {
    pub fn new(mut sites: Vec<usize>) -> Self {
        sites.sort_unstable();
        sites.dedup();
        Region(sites)
    }

    pub fn single(site: usize) -> Self {
        Region(vec![site])
    }

    pub fn empty() -> Self {
        Region(Vec::new())
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.0.iter().all(|&s| other.contains(s))
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Region::new(v)
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region(self.0.iter().copied().filter(|&s| !other.contains(s)).collect())
    }

    /// Membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &s in &self.0 {
            m[s] = true;
        }
        m
    }
}

impl FromIterator<usize> for Region {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Region::new(iter.into_iter().collect())
    }
}

impl LatticeGraph {
    /// Chain, ring or open grid with the given extents.
    pub fn build(kind: LatticeKind, dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Lattice(format!("empty extent in {dims:?}")));
        }
        let mut edges = Vec::new();
        let dimension = match kind {
            LatticeKind::Chain | LatticeKind::Ring => {
                if dims.len() != 1 {
                    return Err(Error::Lattice(format!("{kind:?} takes one extent")));
                }
                let n = dims[0];
                for i in 0..n.saturating_sub(1) {
                    edges.push((i, i + 1));
                }
                if kind == LatticeKind::Ring {
                    if n < 3 {
                        return Err(Error::Lattice("ring needs at least 3 sites".into()));
                    }
                    edges.push((n - 1, 0));
                }
                1
            }
            LatticeKind::Grid => {
                let n: usize = dims.iter().product();
                let mut stride = 1;
                for &extent in dims {
                    for site in 0..n {
                        let coord = (site / stride) % extent;
                        if coord + 1 < extent {
                            edges.push((site, site + stride));
                        }
                    }
                    stride *= extent;
                }
                dims.len()
            }
            LatticeKind::Custom => {
                return Err(Error::Lattice("use LatticeGraph::custom for edge lists".into()))
            }
        };
        let n = dims.iter().product();
        Self::from_edges(kind, dims.to_vec(), dimension, n, edges)
    }

    /// Arbitrary edge list; `dimension` is the growth exponent used by bounds.
    pub fn custom(n: usize, edges: &[(usize, usize)], dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Lattice("dimension must be at least 1".into()));
        }
        Self::from_edges(LatticeKind::Custom, vec![n], dimension, n, edges.to_vec())
    }

    fn from_edges(
        kind: LatticeKind,
        dims: Vec<usize>,
        dimension: usize,
        n: usize,
        raw_edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Lattice("no sites".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut edges = Vec::new();
        for (a, b) in raw_edges {
            if a >= n || b >= n {
                return Err(Error::SiteOutOfRange { site: a.max(b), n });
            }
            if a == b {
                return Err(Error::Lattice(format!("self loop at {a}")));
            }
            let (lo, hi) = (a.min(b), a.max(b));
            if !adjacency[lo].contains(&hi) {
                adjacency[lo].push(hi);
                adjacency[hi].push(lo);
                edges.push((lo, hi));
            }
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        edges.sort_unstable();
        let mut dist = vec![u32::MAX; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0;
            queue.push_back(src);
            while let Some(v) = queue.pop_front() {
                for &w in &adjacency[v] {
                    if row[w] == u32::MAX {
                        row[w] = row[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            if row.contains(&u32::MAX) {
                return Err(Error::Lattice("graph is disconnected".into()));
            }
        }
        Ok(LatticeGraph { kind, dims, dimension, adjacency, edges, dist })
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.adjacency.len()
    }

    /// Growth exponent D in |i[r]| <= gamma r^D.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn all_sites(&self) -> Region {
        Region((0..self.n_sites()).collect())
    }

    pub fn check_site(&self, i: usize) -> Result<()> {
        if i < self.n_sites() {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange { site: i, n: self.n_sites() })
        }
    }

    pub fn check_region(&self, x: &Region) -> Result<()> {
        x.sites().iter().try_for_each(|&i| self.check_site(i))
    }

    pub fn dist(&self, i: usize, j: usize) -> u32 {
        self.dist[i * self.n_sites() + j]
    }

    /// Distance from site `i` to the nearest site of `x`.
    pub fn dist_to(&self, i: usize, x: &Region) -> Option<u32> {
        x.sites().iter().map(|&j| self.dist(i, j)).min()
    }

    pub fn dist_sets(&self, x: &Region, y: &Region) -> Option<u32> {
        x.sites().iter().filter_map(|&i| self.dist_to(i, y)).min()
    }

    /// Sites within distance `r` of `x`; `x[0] = x`.
    pub fn ball(&self, x: &Region, r: usize) -> Region {
        (0..self.n_sites())
            .filter(|&i| self.dist_to(i, x).is_some_and(|d| d as usize <= r))
            .collect()
    }

    pub fn site_ball(&self, i: usize, r: usize) -> Region {
        self.ball(&Region::single(i), r)
    }

    /// Sites of `x` adjacent to the complement.
    pub fn boundary(&self, x: &Region) -> Region {
        x.sites()
            .iter()
            .copied()
            .filter(|&i| self.adjacency[i].iter().any(|&j| !x.contains(j)))
            .collect()
    }

    /// `1 + max d(i, j)` over `x`; zero for the empty set.
    pub fn diameter(&self, x: &Region) -> usize {
        if x.is_empty() {
            return 0;
        }
        let s = x.sites();
        let max = s
            .iter()
            .flat_map(|&i| s.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.dist(i, j))
            .max()
            .unwrap_or(0);
        1 + max as usize
    }

    /// Largest hop distance between any two sites.
    pub fn graph_diameter(&self) -> usize {
        self.dist.iter().copied().max().unwrap_or(0) as usize
    }

    /// Largest distance from `i` to any site.
    pub fn eccentricity(&self, i: usize) -> usize {
        let n = self.n_sites();
        self.dist[i * n..(i + 1) * n].iter().copied().max().unwrap_or(0) as usize
    }

    /// Adjacency matrix as dense f64 rows.
    pub fn adjacency_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n_sites();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for &(a, b) in &self.edges {
            m[(a, b)] = 1.0;
            m[(b, a)] = 1.0;
        }
        m
    }
}

/// Constants derived from the lattice geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricConstants {
    /// Smallest gamma with |i[r]| <= gamma r^D for all i and r >= 1.
    pub gamma: f64,
    /// max_i sum_j exp(-d(i, j)).
    pub lambda0: f64,
    /// Maximum vertex degree.
    pub degree: usize,
    pub dimension: usize,
}

impl GeometricConstants {
    pub fn of(g: &LatticeGraph) -> Self {
        let n = g.n_sites();
        let d = g.dimension() as i32;
        let rmax = g.graph_diameter().max(1);
        let mut gamma: f64 = 1.0;
        let mut lambda0: f64 = 0.0;
        for i in 0..n {
            let row = &g.dist[i * n..(i + 1) * n];
            let mut counts = vec![0usize; rmax + 1];
            for &dij in row {
                counts[dij as usize] += 1;
            }
            let mut acc = 0;
            for (r, c) in counts.iter().enumerate() {
                acc += c;
                if r >= 1 {
                    gamma = gamma.max(acc as f64 / (r as f64).powi(d));
                }
            }
            lambda0 = lambda0.max(row.iter().map(|&dij| (-(dij as f64)).exp()).sum());
        }
        GeometricConstants { gamma, lambda0, degree: g.degree(), dimension: g.dimension() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_ball_and_distances() {
        let g = LatticeGraph::build(LatticeKind::Chain, &[10]).unwrap();
        assert_eq!(g.site_ball(4, 2).sites(), &[2, 3, 4, 5, 6]);
        assert_eq!(g.dist(0, 9), 9);
        assert_eq!(g.boundary(&Region::new(vec![2, 3, 4])).sites(), &[2, 4]);
        assert_eq!(g.diameter(&Region::new(vec![2, 5])), 4);
    }

    #[test]
    fn grid_distance_is_manhattan() {
        let g = LatticeGraph::build(LatticeKind::Grid, &[4, 4]).unwrap();
        assert_eq!(g.dist(0, 15), 6);
        assert_eq!(g.degree(), 4);
        assert_eq!(g.dimension(), 2);
    }

    #[test]
    fn ring_wraps() {
        let g = LatticeGraph::build(LatticeKind::Ring, &[6]).unwrap();
        assert_eq!(g.dist(0, 5), 1);
        assert_eq!(g.dist(0, 3), 3);
        assert!(LatticeGraph::build(LatticeKind::Ring, &[2]).is_err());
    }

    #[test]
    fn chain_constants() {
        let g = LatticeGraph::build(LatticeKind::Chain, &[6]).unwrap();
        let c = GeometricConstants::of(&g);
        assert_eq!(c.gamma, 3.0);
        assert_eq!(c.degree, 2);
        let expected = 1.0 + 2.0 * (-1.0f64).exp() + 2.0 * (-2.0f64).exp() + (-3.0f64).exp();
        assert!((c.lambda0 - expected).abs() < 1e-14);
        assert!((c.lambda0 - 2.05622).abs() < 1e-5);
    }

    #[test]
    fn disconnected_rejected() {
        assert!(LatticeGraph::custom(4, &[(0, 1), (2, 3)], 1).is_err());
    }

    #[test]
    fn empty_region_edge_cases() {
        let g = LatticeGraph::build(LatticeKind::Chain, &[4]).unwrap();
        let e = Region::empty();
        assert!(g.ball(&e, 3).is_empty());
        assert_eq!(g.diameter(&e), 0);
        assert!(g.boundary(&g.all_sites()).is_empty());
    }
}
