//! Dimer covers of planar bipartite graphs: Kasteleyn signs, exact cover
//! counts and the edge correlation kernel.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix};
use crate::oracle::DEFAULT_ENUMERATION_LIMIT;
use crate::process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};

/// A face of the embedding as a cyclic sequence of edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    pub edges: Vec<usize>,
    #[serde(default)]
    pub outer: bool,
}

/// Bipartite graph with a fixed planar embedding. Black and white vertices
/// are numbered separately; edge `k` joins black `edges[k].0` to white
/// `edges[k].1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarBipartiteGraph {
    black: usize,
    white: usize,
    edges: Vec<(usize, usize)>,
    faces: Vec<Face>,
}

impl PlanarBipartiteGraph {
    /// `faces` must list every bounded face; the outer face may be included
    /// (flagged `outer`) or left implicit.
    pub fn new(
        black: usize,
        white: usize,
        edges: Vec<(usize, usize)>,
        faces: Vec<Face>,
    ) -> Result<Self> {
        if black != white {
            return Err(DppError::InvalidInput(format!(
                "{black} black and {white} white vertices admit no perfect matching"
            )));
        }
        for &(b, w) in &edges {
            if b >= black || w >= white {
                return Err(DppError::IndexOutOfBounds {
                    index: b.max(w),
                    size: black,
                });
            }
        }
        let g = PlanarBipartiteGraph {
            black,
            white,
            edges,
            faces,
        };
        g.check_connected()?;
        g.check_faces()?;
        Ok(g)
    }

    /// Traces the faces from vertex positions. Edges must not cross.
    pub fn from_embedding(
        black_pos: &[(f64, f64)],
        white_pos: &[(f64, f64)],
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let nb = black_pos.len();
        let pos: Vec<(f64, f64)> = black_pos.iter().chain(white_pos).copied().collect();
        let ends: Vec<(usize, usize)> = edges.iter().map(|&(b, w)| (b, nb + w)).collect();
        if ends.iter().any(|&(b, w)| b >= nb || w >= pos.len()) {
            return Err(DppError::InvalidInput("edge endpoint out of range".into()));
        }
        let faces = trace_faces(&pos, &ends);
        Self::new(nb, white_pos.len(), edges, faces)
    }

    /// `rows × cols` square grid; vertex `(r, c)` is black when `r + c` is
    /// even. Vertex numbering within each colour follows row-major order.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        Self::lattice(rows, cols, |_, _| true)
    }

    /// Brick-wall patch of the hexagonal lattice: the `rows × cols` grid
    /// with the vertical edge below `(r, c)` kept only when `r + c` is even.
    pub fn brick_wall(rows: usize, cols: usize) -> Result<Self> {
        Self::lattice(rows, cols, |r, c| (r + c) % 2 == 0)
    }

    fn lattice(
        rows: usize,
        cols: usize,
        keep_vertical: impl Fn(usize, usize) -> bool,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(DppError::InvalidInput(
                "grid dimensions must be positive".into(),
            ));
        }
        let mut index = vec![0usize; rows * cols];
        let mut black_pos = Vec::new();
        let mut white_pos = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let p = (c as f64, -(r as f64));
                if (r + c) % 2 == 0 {
                    index[r * cols + c] = black_pos.len();
                    black_pos.push(p);
                } else {
                    index[r * cols + c] = white_pos.len();
                    white_pos.push(p);
                }
            }
        }
        let edge = |a: (usize, usize), b: (usize, usize)| {
            let (bl, wh) = if (a.0 + a.1).is_multiple_of(2) {
                (a, b)
            } else {
                (b, a)
            };
            (index[bl.0 * cols + bl.1], index[wh.0 * cols + wh.1])
        };
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push(edge((r, c), (r, c + 1)));
                }
                if r + 1 < rows && keep_vertical(r, c) {
                    edges.push(edge((r, c), (r + 1, c)));
                }
            }
        }
        Self::from_embedding(&black_pos, &white_pos, edges)
    }

    pub fn black(&self) -> usize {
        self.black
    }

    pub fn white(&self) -> usize {
        self.white
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn bounded_faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(|f| !f.outer)
    }

    /// Edge labels `b{b}w{w}`, with a `#k` suffix on parallel copies.
    pub fn ground_set(&self) -> Result<GroundSet> {
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        GroundSet::new(self.edges.iter().map(|&e| {
            let k = seen.entry(e).or_insert(0);
            *k += 1;
            if *k == 1 {
                format!("b{}w{}", e.0, e.1)
            } else {
                format!("b{}w{}#{}", e.0, e.1, k)
            }
        }))
    }

    fn vertex_count(&self) -> usize {
        self.black + self.white
    }

    fn check_connected(&self) -> Result<()> {
        let mut uf = UnionFind::new(self.vertex_count());
        for &(b, w) in &self.edges {
            uf.union(b, self.black + w);
        }
        let root = uf.find(0);
        if (0..self.vertex_count()).any(|v| uf.find(v) != root) {
            return Err(DppError::Disconnected);
        }
        Ok(())
    }

    fn check_faces(&self) -> Result<()> {
        let bad = |m: String| Err(DppError::NotPlanarConsistent(m));
        let e = self.edges.len();
        let mut bounded = vec![0usize; e];
        let mut total = vec![0usize; e];
        let mut outer_faces = 0;
        for (fi, face) in self.faces.iter().enumerate() {
            if face.edges.is_empty() {
                return bad(format!("face {fi} is empty"));
            }
            for &k in &face.edges {
                if k >= e {
                    return bad(format!("face {fi} refers to missing edge {k}"));
                }
                total[k] += 1;
                if !face.outer {
                    bounded[k] += 1;
                }
            }
            outer_faces += face.outer as usize;
            // Consecutive edges share a vertex.
            let n = face.edges.len();
            for i in 0..n {
                let (a, b) = (
                    self.edges[face.edges[i]],
                    self.edges[face.edges[(i + 1) % n]],
                );
                if n > 1 && a.0 != b.0 && a.1 != b.1 {
                    return bad(format!("face {fi} is not a closed walk"));
                }
            }
        }
        if outer_faces > 1 {
            return bad("more than one outer face".into());
        }
        if let Some(k) = (0..e).find(|&k| bounded[k] > 2 || (outer_faces == 1 && total[k] != 2)) {
            return bad(format!("edge {k} does not border exactly two faces"));
        }
        // Euler's formula for a connected plane graph.
        let f = self.faces.len() - outer_faces + 1;
        if self.vertex_count() + f != e + 2 {
            return bad(format!(
                "{} vertices, {e} edges and {f} faces violate Euler's formula",
                self.vertex_count()
            ));
        }
        Ok(())
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

/// Faces of a straight-line embedding, by walking each directed edge and
/// turning to the next neighbour clockwise. The face with negative signed
/// area is the outer one.
fn trace_faces(pos: &[(f64, f64)], ends: &[(usize, usize)]) -> Vec<Face> {
    let n = pos.len();
    // Rotation system: incident (neighbour, edge) sorted by angle.
    let mut around: Vec<Vec<(f64, usize, usize)>> = vec![vec![]; n];
    for (k, &(a, b)) in ends.iter().enumerate() {
        let ang = |from: usize, to: usize| (pos[to].1 - pos[from].1).atan2(pos[to].0 - pos[from].0);
        around[a].push((ang(a, b), b, k));
        around[b].push((ang(b, a), a, k));
    }
    for list in &mut around {
        list.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.cmp(&y.2)));
    }
    // Directed edge (k, forward) leaves `ends[k].0` when forward.
    let mut used = vec![[false; 2]; ends.len()];
    let mut faces = Vec::new();
    for k0 in 0..ends.len() {
        for dir0 in 0..2 {
            if used[k0][dir0] {
                continue;
            }
            let mut edges = Vec::new();
            let mut area = 0.0;
            let (mut k, mut dir) = (k0, dir0);
            while !used[k][dir] {
                used[k][dir] = true;
                edges.push(k);
                let (from, to) = if dir == 0 {
                    ends[k]
                } else {
                    (ends[k].1, ends[k].0)
                };
                area += pos[from].0 * pos[to].1 - pos[to].0 * pos[from].1;
                // Next edge around `to`, clockwise from the edge we came in on.
                let list = &around[to];
                let at = list.iter().position(|&(_, _, e)| e == k).expect("incident");
                let (_, _, next) = list[(at + list.len() - 1) % list.len()];
                k = next;
                dir = if ends[next].0 == to { 0 } else { 1 };
            }
            faces.push((edges, area));
        }
    }
    let outer = faces
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i);
    faces
        .into_iter()
        .enumerate()
        .map(|(i, (edges, _))| Face {
            edges,
            outer: Some(i) == outer,
        })
        .collect()
}

/// Required parity of minus signs on a bounded face of the given length:
/// odd when the length is `0 mod 4`, even when it is `2 mod 4`.
fn required_parity(len: usize) -> usize {
    if len.is_multiple_of(4) {
        1
    } else {
        0
    }
}

/// Whether every bounded face satisfies the Kasteleyn parity rule.
pub fn is_kasteleyn(g: &PlanarBipartiteGraph, signs: &[i8]) -> bool {
    signs.len() == g.edges.len()
        && signs.iter().all(|&s| s == 1 || s == -1)
        && g.bounded_faces().all(|f| {
            let minus = f.edges.iter().filter(|&&k| signs[k] < 0).count();
            minus % 2 == required_parity(f.edges.len())
        })
}

/// Signs `±1` per edge satisfying the face-parity rule on bounded faces:
/// `+1` on a spanning tree, then each remaining edge is fixed by the one
/// face that still has it as its only free edge.
pub fn kasteleyn_weighting(g: &PlanarBipartiteGraph) -> Result<Vec<i8>> {
    let e = g.edges.len();
    let mut signs = vec![0i8; e];
    let mut uf = UnionFind::new(g.vertex_count());
    for (k, &(b, w)) in g.edges.iter().enumerate() {
        if uf.union(b, g.black + w) {
            signs[k] = 1;
        }
    }
    let faces: Vec<&Face> = g.bounded_faces().collect();
    let mut done = vec![false; faces.len()];
    loop {
        let mut progress = false;
        for (fi, face) in faces.iter().enumerate() {
            if done[fi] {
                continue;
            }
            let mut free: Vec<usize> = face
                .edges
                .iter()
                .copied()
                .filter(|&k| signs[k] == 0)
                .collect();
            free.dedup();
            match free.len() {
                0 => done[fi] = true,
                1 => {
                    let minus = face.edges.iter().filter(|&&k| signs[k] < 0).count();
                    signs[free[0]] = if minus % 2 == required_parity(face.edges.len()) {
                        1
                    } else {
                        -1
                    };
                    done[fi] = true;
                    progress = true;
                }
                _ => {}
            }
        }
        if done.iter().all(|&d| d) {
            break;
        }
        if !progress {
            return Err(DppError::NotPlanarConsistent(
                "faces do not form a dual tree".into(),
            ));
        }
    }
    // Edges seen by no bounded face would be bridges, already in the tree.
    if signs.contains(&0) || !is_kasteleyn(g, &signs) {
        return Err(DppError::NotPlanarConsistent(
            "no consistent sign assignment".into(),
        ));
    }
    Ok(signs)
}

/// Signed adjacency matrix, rows black, columns white. Parallel edges add.
pub fn kasteleyn_matrix(g: &PlanarBipartiteGraph, signs: &[i8]) -> Result<Vec<Vec<i128>>> {
    if signs.len() != g.edges.len() {
        return Err(DppError::DimensionMismatch("one sign per edge".into()));
    }
    let mut m = vec![vec![0i128; g.white]; g.black];
    for (&(b, w), &s) in g.edges.iter().zip(signs) {
        m[b][w] += s as i128;
    }
    Ok(m)
}

/// `|det 𝔎|` by fraction-free elimination.
pub fn count_dimer_covers(g: &PlanarBipartiteGraph) -> Result<u128> {
    let signs = kasteleyn_weighting(g)?;
    Ok(linalg::bareiss_det(kasteleyn_matrix(g, &signs)?).unsigned_abs())
}

/// `K(e, e') = 𝔎(b, w) 𝔎^{-1}(w, b')`, where `(b, w)` are the ends of `e`
/// and `b'` is the black end of `e'`.
pub fn dimer_kernel(g: &PlanarBipartiteGraph, signs: &[i8]) -> Result<KernelMatrix> {
    let int = kasteleyn_matrix(g, signs)?;
    if linalg::bareiss_det(int.clone()) == 0 {
        return Err(DppError::NoPerfectMatching);
    }
    let n = g.black;
    let m = CMatrix::from_fn(n, n, |b, w| linalg::c(int[b][w] as f64));
    let inv = linalg::inverse_checked(&m).map_err(|_| DppError::NoPerfectMatching)?;
    let e = g.edges.len();
    let k = CMatrix::from_fn(e, e, |i, j| {
        let w = g.edges[i].1;
        let b2 = g.edges[j].0;
        linalg::c(signs[i] as f64) * inv[(w, b2)]
    });
    KernelMatrix::new(g.ground_set()?, k)
}

/// Uniform measure on perfect matchings, by backtracking over black
/// vertices.
pub fn enumerate_matchings(g: &PlanarBipartiteGraph) -> Result<ExplicitProcess> {
    let e = g.edges.len();
    if e > DEFAULT_ENUMERATION_LIMIT {
        return Err(DppError::EnumerationTooLarge {
            size: e,
            limit: DEFAULT_ENUMERATION_LIMIT,
        });
    }
    let mut at_black = vec![vec![]; g.black];
    for (k, &(b, _)) in g.edges.iter().enumerate() {
        at_black[b].push(k);
    }
    let mut found = Vec::new();
    fn rec(
        b: usize,
        g: &PlanarBipartiteGraph,
        at_black: &[Vec<usize>],
        used_white: &mut Vec<bool>,
        chosen: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
    ) {
        if b == g.black {
            found.push(chosen.clone());
            return;
        }
        for &k in &at_black[b] {
            let w = g.edges[k].1;
            if !used_white[w] {
                used_white[w] = true;
                chosen.push(k);
                rec(b + 1, g, at_black, used_white, chosen, found);
                chosen.pop();
                used_white[w] = false;
            }
        }
    }
    rec(
        0,
        g,
        &at_black,
        &mut vec![false; g.white],
        &mut Vec::new(),
        &mut found,
    );
    if found.is_empty() {
        return Err(DppError::NoPerfectMatching);
    }
    let weights = found
        .into_iter()
        .map(|m| Ok((Configuration::new(m)?, linalg::ONE)))
        .collect::<Result<Vec<_>>>()?;
    ExplicitProcess::new(g.ground_set()?, weights)
}

/// Multiplies the signs of every edge at one vertex by `-1`.
pub fn flip_vertex(g: &PlanarBipartiteGraph, signs: &[i8], black: bool, v: usize) -> Vec<i8> {
    g.edges
        .iter()
        .zip(signs)
        .map(|(&(b, w), &s)| {
            if (black && b == v) || (!black && w == v) {
                -s
            } else {
                s
            }
        })
        .collect()
}
