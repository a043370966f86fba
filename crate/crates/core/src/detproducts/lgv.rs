use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix, ONE};

/// Finite directed acyclic graph with complex edge weights. Parallel edges
/// are distinct paths.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDag {
    vertices: usize,
    edges: Vec<(usize, usize, Complex64)>,
    order: Vec<usize>,
}

impl WeightedDag {
    pub fn new(vertices: usize, edges: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        if let Some(&(u, v, _)) = edges
            .iter()
            .find(|(u, v, _)| *u >= vertices || *v >= vertices)
        {
            return Err(DppError::IndexOutOfBounds {
                index: u.max(v),
                size: vertices,
            });
        }
        let order = topological_sort(vertices, &edges).ok_or(DppError::CycleDetected)?;
        Ok(WeightedDag {
            vertices,
            edges,
            order,
        })
    }

    /// `rows × cols` lattice with unit-weight edges right and down; vertex
    /// `(r, c)` has index `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1, ONE));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols, ONE));
                }
            }
        }
        WeightedDag::new(rows * cols, edges).expect("grid is acyclic")
    }

    /// Space-time graph of a discrete-time chain: vertex `(t, x)` has index
    /// `t * n + x` and edge `(t, x) -> (t+1, y)` carries `P(x, y)` when
    /// positive.
    pub fn time_expanded(p: &DMatrix<f64>, steps: usize) -> Self {
        let n = p.nrows();
        let mut edges = Vec::new();
        for t in 0..steps {
            for x in 0..n {
                for y in 0..n {
                    if p[(x, y)] > 0.0 {
                        edges.push((t * n + x, (t + 1) * n + y, linalg::c(p[(x, y)])));
                    }
                }
            }
        }
        WeightedDag::new((steps + 1) * n, edges).expect("time-expanded graph is acyclic")
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize, Complex64)] {
        &self.edges
    }

    /// Path sums from `u` to every vertex, by dynamic programming in
    /// topological order.
    fn transfer_from(&self, u: usize) -> Vec<Complex64> {
        let mut out = vec![vec![]; self.vertices];
        for (k, &(a, _, _)) in self.edges.iter().enumerate() {
            out[a].push(k);
        }
        let mut t = vec![linalg::ZERO; self.vertices];
        t[u] = ONE;
        for &a in &self.order {
            if t[a] == linalg::ZERO {
                continue;
            }
            for &k in &out[a] {
                let (_, b, w) = self.edges[k];
                let ta = t[a];
                t[b] += ta * w;
            }
        }
        t
    }

    /// `T(u_i, v_j)`.
    pub fn transfer_matrix(&self, sources: &[usize], sinks: &[usize]) -> Result<CMatrix> {
        self.check(sources)?;
        self.check(sinks)?;
        let rows: Vec<Vec<Complex64>> = sources.iter().map(|&u| self.transfer_from(u)).collect();
        Ok(CMatrix::from_fn(sources.len(), sinks.len(), |i, j| {
            rows[i][sinks[j]]
        }))
    }

    fn check(&self, vs: &[usize]) -> Result<()> {
        match vs.iter().find(|&&v| v >= self.vertices) {
            Some(&v) => Err(DppError::IndexOutOfBounds {
                index: v,
                size: self.vertices,
            }),
            None => Ok(()),
        }
    }

    /// Every directed path from `u` to `v` as (visited-vertex bitset, weight).
    fn paths(&self, u: usize, v: usize) -> Vec<(Vec<u64>, Complex64)> {
        let words = self.vertices.div_ceil(64);
        let mut out_edges = vec![vec![]; self.vertices];
        for &(a, b, w) in &self.edges {
            out_edges[a].push((b, w));
        }
        let mut found = Vec::new();
        let mut seen = vec![0u64; words];
        fn rec(
            a: usize,
            v: usize,
            w: Complex64,
            seen: &mut Vec<u64>,
            out: &[Vec<(usize, Complex64)>],
            found: &mut Vec<(Vec<u64>, Complex64)>,
        ) {
            seen[a / 64] |= 1 << (a % 64);
            if a == v {
                found.push((seen.clone(), w));
            } else {
                for &(b, we) in &out[a] {
                    rec(b, v, w * we, seen, out, found);
                }
            }
            seen[a / 64] &= !(1 << (a % 64));
        }
        rec(u, v, ONE, &mut seen, &out_edges, &mut found);
        found
    }
}

fn topological_sort(n: usize, edges: &[(usize, usize, Complex64)]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut out = vec![vec![]; n];
    for &(a, b, _) in edges {
        indeg[b] += 1;
        out[a].push(b);
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(a) = ready.pop() {
        order.push(a);
        for &b in &out[a] {
            indeg[b] -= 1;
            if indeg[b] == 0 {
                ready.push(b);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Weighted path sum `T(u, v)`. The empty path makes `T(u, u) = 1`.
pub fn lgv_transfer(dag: &WeightedDag, u: usize, v: usize) -> Result<Complex64> {
    Ok(dag.transfer_matrix(&[u], &[v])?[(0, 0)])
}

/// Both sides of the path-counting determinant identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgvCheck {
    /// Weighted count of vertex-disjoint families `u_i -> v_i`.
    pub enumerated: Complex64,
    /// `det[T(u_i, v_j)]`.
    pub determinant: Complex64,
}

/// Enumerates vertex-disjoint path families for every pairing of sources
/// with sinks. Fails with `CompatibilityViolated` when a non-identity
/// pairing admits such a family, since the determinant identity then does
/// not hold.
pub fn lgv_check(dag: &WeightedDag, sources: &[usize], sinks: &[usize]) -> Result<LgvCheck> {
    if sources.len() != sinks.len() {
        return Err(DppError::DimensionMismatch(
            "sources and sinks differ in number".into(),
        ));
    }
    let determinant = linalg::det(&dag.transfer_matrix(sources, sinks)?);
    let n = sources.len();
    let paths: Vec<PathsBySink> = sources
        .iter()
        .map(|&u| sinks.iter().map(|&v| dag.paths(u, v)).collect())
        .collect();

    let mut enumerated = linalg::ZERO;
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let identity = perm.iter().enumerate().all(|(i, &p)| i == p);
        let words = dag.vertices.div_ceil(64).max(1);
        let total = disjoint_families(&paths, &perm, 0, &mut vec![0u64; words], ONE);
        if identity {
            enumerated = total.0;
        } else if total.1 {
            return Err(DppError::CompatibilityViolated);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(LgvCheck {
        enumerated,
        determinant,
    })
}

/// Paths from one source to each sink, as (vertex bit set, weight).
type PathsBySink = Vec<Vec<(Vec<u64>, Complex64)>>;

/// Returns (weighted count, whether any family exists).
fn disjoint_families(
    paths: &[PathsBySink],
    perm: &[usize],
    i: usize,
    used: &mut Vec<u64>,
    acc: Complex64,
) -> (Complex64, bool) {
    if i == perm.len() {
        return (acc, true);
    }
    let mut sum = linalg::ZERO;
    let mut any = false;
    for (bits, w) in &paths[i][perm[i]] {
        if bits.iter().zip(used.iter()).any(|(a, b)| a & b != 0) {
            continue;
        }
        for (u, b) in used.iter_mut().zip(bits) {
            *u |= b;
        }
        let (s, found) = disjoint_families(paths, perm, i + 1, used, acc * w);
        sum += s;
        any |= found;
        for (u, b) in used.iter_mut().zip(bits) {
            *u &= !b;
        }
    }
    (sum, any)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
