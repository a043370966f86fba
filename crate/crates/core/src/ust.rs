//! Uniform spanning trees and the transfer current matrix.

use nalgebra::DMatrix;

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix};
use crate::oracle::DEFAULT_ENUMERATION_LIMIT;
use crate::process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};

/// Largest vertex count accepted by [`enumerate_spanning_trees`].
pub const MAX_TREE_ENUMERATION_VERTICES: usize = 10;

/// Multigraph with a fixed orientation `(tail, head)` per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedGraph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl OrientedGraph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if vertices == 0 {
            return Err(DppError::InvalidInput("graph needs a vertex".into()));
        }
        for &(a, b) in &edges {
            if a >= vertices || b >= vertices {
                return Err(DppError::IndexOutOfBounds {
                    index: a.max(b),
                    size: vertices,
                });
            }
            if a == b {
                return Err(DppError::InvalidInput(format!("self-loop at vertex {a}")));
            }
        }
        Ok(OrientedGraph { vertices, edges })
    }

    /// `K_n` with edges `i -> j` for `i < j`.
    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::new(n, edges)
    }

    /// `rows × cols` grid, edges oriented right and down.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Self::new(rows * cols, edges)
    }

    /// Cycle `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Same graph with edge `f` reversed.
    pub fn flip(&self, f: usize) -> Self {
        let mut g = self.clone();
        let (a, b) = g.edges[f];
        g.edges[f] = (b, a);
        g
    }

    /// Edge labels `{tail}>{head}`, with a `#k` suffix on parallel copies.
    pub fn ground_set(&self) -> Result<GroundSet> {
        let mut seen = std::collections::HashMap::new();
        GroundSet::new(self.edges.iter().map(|&(a, b)| {
            let k = seen.entry((a.min(b), a.max(b))).or_insert(0);
            *k += 1;
            if *k == 1 {
                format!("{a}>{b}")
            } else {
                format!("{a}>{b}#{k}")
            }
        }))
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.vertices);
        for &(a, b) in &self.edges {
            uf.union(a, b);
        }
        let r = uf.find(0);
        (0..self.vertices).all(|v| uf.find(v) == r)
    }

    fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(DppError::Disconnected)
        }
    }

    /// Star vector `a(v)`: `+1` on edges leaving `v`, `-1` on edges entering.
    pub fn star(&self, v: usize) -> Vec<f64> {
        self.edges
            .iter()
            .map(|&(a, b)| {
                if a == v {
                    1.0
                } else if b == v {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn laplacian(&self) -> Vec<Vec<i128>> {
        let n = self.vertices;
        let mut l = vec![vec![0i128; n]; n];
        for &(a, b) in &self.edges {
            l[a][a] += 1;
            l[b][b] += 1;
            l[a][b] -= 1;
            l[b][a] -= 1;
        }
        l
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// Orthogonal projection onto the span of the star vectors,
/// `K = A_r (A_rᵀ A_r)^{-1} A_rᵀ` with `A_r` the incidence matrix (edges by
/// vertices) with vertex 0 removed.
pub fn transfer_current(g: &OrientedGraph) -> Result<KernelMatrix> {
    g.require_connected()?;
    let e = g.edges.len();
    let n = g.vertices;
    let a = DMatrix::from_fn(e, n - 1, |k, v| {
        let (t, h) = g.edges[k];
        if t == v + 1 {
            1.0
        } else if h == v + 1 {
            -1.0
        } else {
            0.0
        }
    });
    let lap = a.transpose() * &a;
    let inv =
        linalg::inverse_checked(&linalg::to_complex(&lap)).map_err(|_| DppError::Disconnected)?;
    let ac = linalg::to_complex(&a);
    let k = &ac * inv * ac.transpose();
    KernelMatrix::new(g.ground_set()?, k)
}

/// Expected signed number of passages through `f` of a simple random walk
/// started at the tail of `e` and stopped on hitting its head. Computed from
/// the walk's Green function, independently of [`transfer_current`].
pub fn random_walk_current(g: &OrientedGraph, e: usize, f: usize) -> Result<f64> {
    g.require_connected()?;
    let m = g.edges.len();
    if e >= m || f >= m {
        return Err(DppError::IndexOutOfBounds {
            index: e.max(f),
            size: m,
        });
    }
    let n = g.vertices;
    let (x, y) = g.edges[e];
    let mut deg = vec![0.0; n];
    for &(a, b) in &g.edges {
        deg[a] += 1.0;
        deg[b] += 1.0;
    }
    // Green function G(x, v) = expected visits to v before hitting y solves
    // G (I - P) = δ_x on the states other than y.
    let states: Vec<usize> = (0..n).filter(|&v| v != y).collect();
    let pos = |v: usize| states.iter().position(|&s| s == v);
    let s = states.len();
    let mut m_ = DMatrix::<f64>::identity(s, s);
    for &(a, b) in &g.edges {
        if let (Some(i), Some(j)) = (pos(a), pos(b)) {
            m_[(i, j)] -= 1.0 / deg[a];
            m_[(j, i)] -= 1.0 / deg[b];
        }
    }
    let rhs = {
        let mut r = DMatrix::<f64>::zeros(1, s);
        r[(0, pos(x).expect("x differs from y"))] = 1.0;
        r
    };
    let inv = m_.try_inverse().ok_or(DppError::Disconnected)?;
    let green = rhs * inv;
    let visits = |v: usize| pos(v).map_or(0.0, |i| green[(0, i)]);
    let (u, v) = g.edges[f];
    Ok(visits(u) / deg[u] - visits(v) / deg[v])
}

/// Matrix-tree count: any cofactor of the Laplacian, by exact elimination.
pub fn count_spanning_trees(g: &OrientedGraph) -> Result<u128> {
    g.require_connected()?;
    let l = g.laplacian();
    let reduced: Vec<Vec<i128>> = l[1..].iter().map(|row| row[1..].to_vec()).collect();
    Ok(linalg::bareiss_det(reduced).unsigned_abs())
}

/// Uniform measure on spanning trees, by backtracking over edges.
pub fn enumerate_spanning_trees(g: &OrientedGraph) -> Result<ExplicitProcess> {
    let n = g.vertices;
    if n > MAX_TREE_ENUMERATION_VERTICES {
        return Err(DppError::EnumerationTooLarge {
            size: n,
            limit: MAX_TREE_ENUMERATION_VERTICES,
        });
    }
    if g.edges.len() > DEFAULT_ENUMERATION_LIMIT {
        return Err(DppError::EnumerationTooLarge {
            size: g.edges.len(),
            limit: DEFAULT_ENUMERATION_LIMIT,
        });
    }
    g.require_connected()?;
    let mut trees = Vec::new();
    fn rec(
        k: usize,
        g: &OrientedGraph,
        chosen: &mut Vec<usize>,
        comp: &mut Vec<usize>,
        trees: &mut Vec<Vec<usize>>,
    ) {
        let need = g.vertices - 1 - chosen.len();
        if need == 0 {
            trees.push(chosen.clone());
            return;
        }
        if g.edges.len() - k < need {
            return;
        }
        let (a, b) = g.edges[k];
        // Component labels, copied on the include branch.
        if comp[a] != comp[b] {
            let saved = comp.clone();
            let (from, to) = (comp[a], comp[b]);
            for c in comp.iter_mut() {
                if *c == from {
                    *c = to;
                }
            }
            chosen.push(k);
            rec(k + 1, g, chosen, comp, trees);
            chosen.pop();
            *comp = saved;
        }
        rec(k + 1, g, chosen, comp, trees);
    }
    rec(0, g, &mut Vec::new(), &mut (0..n).collect(), &mut trees);
    let weights = trees
        .into_iter()
        .map(|t| Ok((Configuration::new(t)?, linalg::ONE)))
        .collect::<Result<Vec<_>>>()?;
    ExplicitProcess::new(g.ground_set()?, weights)
}

/// `‖K² - K‖`, `‖K - Kᵀ‖` (entrywise maxima) and the trace.
pub fn projection_defects(k: &KernelMatrix) -> (f64, f64, f64) {
    let m: &CMatrix = k.matrix();
    let sq = linalg::max_abs_diff(&(m * m), m);
    let sym = linalg::max_abs_diff(&m.transpose(), m);
    (sq, sym, m.trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::verify_determinantal;

    #[test]
    fn bridge_is_forced() {
        let g = OrientedGraph::new(2, vec![(0, 1)]).unwrap();
        let k = transfer_current(&g).unwrap();
        assert!((k.get(0, 0).re - 1.0).abs() < 1e-15);
        assert!((random_walk_current(&g, 0, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle() {
        let g = OrientedGraph::complete(3).unwrap();
        let k = transfer_current(&g).unwrap();
        for e in 0..3 {
            assert!((k.get(e, e).re - 2.0 / 3.0).abs() < 1e-14);
            for f in 0..3 {
                let rw = random_walk_current(&g, e, f).unwrap();
                assert!((rw - k.get(e, f).re).abs() < 1e-12);
                if e != f {
                    assert!((rw.abs() - 1.0 / 3.0).abs() < 1e-12);
                }
            }
        }
        // A walk from 0 stopped at 1 crosses 1>2 only backwards.
        assert!((k.get(0, 2).re + 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(count_spanning_trees(&g).unwrap(), 3);
        assert_eq!(enumerate_spanning_trees(&g).unwrap().weights().len(), 3);
    }

    #[test]
    fn k4_and_grid() {
        let g = OrientedGraph::complete(4).unwrap();
        let k = transfer_current(&g).unwrap();
        for e in 0..6 {
            assert!((k.get(e, e).re - 0.5).abs() < 1e-14);
        }
        assert_eq!(count_spanning_trees(&g).unwrap(), 16);
        let p = enumerate_spanning_trees(&g).unwrap();
        assert_eq!(p.weights().len(), 16);
        assert!(verify_determinantal(&p, &k, 4, 1e-10).unwrap().passed());

        let grid = OrientedGraph::grid(3, 3).unwrap();
        assert_eq!(count_spanning_trees(&grid).unwrap(), 192);
        let k = transfer_current(&grid).unwrap();
        let (sq, sym, tr) = projection_defects(&k);
        assert!(sq < 1e-12 && sym < 1e-12 && (tr - 8.0).abs() < 1e-12);
    }

    #[test]
    fn double_edge() {
        let g = OrientedGraph::new(2, vec![(0, 1), (1, 0)]).unwrap();
        let p = enumerate_spanning_trees(&g).unwrap();
        assert_eq!(p.weights().len(), 2);
        let k = transfer_current(&g).unwrap();
        assert!(verify_determinantal(&p, &k, 2, 1e-12).unwrap().passed());
        assert_eq!(g.ground_set().unwrap().label(1), "1>0#2");
    }

    #[test]
    fn trees_and_paths() {
        let path = OrientedGraph::new(4, vec![(0, 1), (1, 2), (3, 2)]).unwrap();
        assert_eq!(count_spanning_trees(&path).unwrap(), 1);
        assert_eq!(enumerate_spanning_trees(&path).unwrap().weights().len(), 1);
    }

    #[test]
    fn disconnected_and_loops() {
        let g = OrientedGraph::new(3, vec![(0, 1)]).unwrap();
        assert_eq!(transfer_current(&g), Err(DppError::Disconnected));
        assert_eq!(count_spanning_trees(&g), Err(DppError::Disconnected));
        assert!(OrientedGraph::new(2, vec![(1, 1)]).is_err());
    }

    #[test]
    fn star_vectors_sum_to_zero() {
        let g = OrientedGraph::grid(2, 3).unwrap();
        let total: Vec<f64> = (0..g.vertices())
            .map(|v| g.star(v))
            .fold(vec![0.0; g.edges().len()], |acc, s| {
                acc.iter().zip(&s).map(|(a, b)| a + b).collect()
            });
        assert!(total.iter().all(|&x| x == 0.0));
    }
}
