use num_complex::Complex64;

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix, ONE};
use crate::oracle::combinations;
use crate::process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};

/// Multi-layer measure on `X^(1) ⊔ ... ⊔ X^(k)` with `N` points per layer and
/// weight
/// `det[Φ_i(x^(1)_j)] Π_j det[T_{j,j+1}(x^(j)_a, x^(j+1)_b)] det[Ψ_i(x^(k)_j)]`.
///
/// Layers carry counting measure. `phi` is `N × |X^(1)|`, `psi` is
/// `N × |X^(k)|` and `transitions[j]` is `|X^(j)| × |X^(j+1)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredSpec {
    layer_sizes: Vec<usize>,
    phi: CMatrix,
    psi: CMatrix,
    transitions: Vec<CMatrix>,
}

impl LayeredSpec {
    pub fn new(
        layer_sizes: Vec<usize>,
        phi: CMatrix,
        psi: CMatrix,
        transitions: Vec<CMatrix>,
    ) -> Result<Self> {
        let k = layer_sizes.len();
        if k == 0 || layer_sizes.contains(&0) {
            return Err(DppError::InvalidInput("layers must be nonempty".into()));
        }
        if transitions.len() != k - 1 {
            return Err(DppError::DimensionMismatch(format!(
                "{k} layers need {} transitions, got {}",
                k - 1,
                transitions.len()
            )));
        }
        for (j, t) in transitions.iter().enumerate() {
            if t.nrows() != layer_sizes[j] || t.ncols() != layer_sizes[j + 1] {
                return Err(DppError::DimensionMismatch(format!(
                    "transition {j} is {}x{}, expected {}x{}",
                    t.nrows(),
                    t.ncols(),
                    layer_sizes[j],
                    layer_sizes[j + 1]
                )));
            }
        }
        let big_n = phi.nrows();
        if big_n == 0
            || psi.nrows() != big_n
            || phi.ncols() != layer_sizes[0]
            || psi.ncols() != layer_sizes[k - 1]
        {
            return Err(DppError::DimensionMismatch(
                "Phi/Psi shapes do not match the layers".into(),
            ));
        }
        if layer_sizes.iter().any(|&d| d < big_n) {
            return Err(DppError::InvalidInput(format!(
                "N = {big_n} exceeds a layer size"
            )));
        }
        Ok(LayeredSpec {
            layer_sizes,
            phi,
            psi,
            transitions,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn particles(&self) -> usize {
        self.phi.nrows()
    }

    pub fn phi(&self) -> &CMatrix {
        &self.phi
    }

    pub fn psi(&self) -> &CMatrix {
        &self.psi
    }

    pub fn transitions(&self) -> &[CMatrix] {
        &self.transitions
    }

    /// First ground-set index of every layer.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.layer_sizes
            .iter()
            .map(|d| {
                let o = acc;
                acc += d;
                o
            })
            .collect()
    }

    /// Disjoint union of the layers, labelled `"{layer}:{point}"` (1-based
    /// layers).
    pub fn ground_set(&self) -> Result<GroundSet> {
        GroundSet::new(
            self.layer_sizes
                .iter()
                .enumerate()
                .flat_map(|(p, &d)| (0..d).map(move |i| format!("{}:{i}", p + 1))),
        )
    }

    /// `T_{q,q+1} * ... * T_{p-1,p}`, the identity when `p == q`.
    fn chain(&self, q: usize, p: usize) -> CMatrix {
        let mut m = CMatrix::identity(self.layer_sizes[q], self.layer_sizes[q]);
        for t in &self.transitions[q..p] {
            m *= t;
        }
        m
    }

    /// `G_ij = Φ_i * T_{1,2} * ... * T_{k-1,k} * Ψ_j`.
    pub fn gram(&self) -> CMatrix {
        let k = self.layer_sizes.len();
        &self.phi * self.chain(0, k - 1) * self.psi.transpose()
    }

    pub fn explicit_process(&self) -> Result<ExplicitProcess> {
        let big_n = self.particles();
        let offsets = self.offsets();
        let subsets: Vec<Vec<Vec<usize>>> = self
            .layer_sizes
            .iter()
            .map(|&d| {
                let pts: Vec<usize> = (0..d).collect();
                let mut out = Vec::new();
                combinations(&pts, big_n, 0, &mut Vec::new(), &mut |s: &[usize]| {
                    out.push(s.to_vec())
                });
                out
            })
            .collect();
        let rows: Vec<usize> = (0..big_n).collect();
        let mut weights = Vec::new();
        let mut choice: Vec<usize> = Vec::with_capacity(subsets.len());
        self.enumerate(&subsets, &rows, &offsets, &mut choice, &mut weights);
        ExplicitProcess::new(self.ground_set()?, weights)
    }

    fn enumerate(
        &self,
        subsets: &[Vec<Vec<usize>>],
        rows: &[usize],
        offsets: &[usize],
        choice: &mut Vec<usize>,
        out: &mut Vec<(Configuration, Complex64)>,
    ) {
        let layer = choice.len();
        if layer == subsets.len() {
            let k = subsets.len();
            let pick = |p: usize| &subsets[p][choice[p]];
            let mut w = linalg::det(&linalg::submatrix(&self.phi, rows, pick(0)));
            for j in 0..k - 1 {
                w *= linalg::det(&linalg::submatrix(
                    &self.transitions[j],
                    pick(j),
                    pick(j + 1),
                ));
            }
            w *= linalg::det(&linalg::submatrix(&self.psi, rows, pick(k - 1)));
            if w != linalg::ZERO {
                let idx = (0..k)
                    .flat_map(|p| pick(p).iter().map(move |&i| offsets[p] + i))
                    .collect();
                out.push((Configuration::new(idx).expect("distinct"), w));
            }
            return;
        }
        for c in 0..subsets[layer].len() {
            choice.push(c);
            self.enumerate(subsets, rows, offsets, choice, out);
            choice.pop();
        }
    }
}

/// Block kernel on the disjoint union of layers:
/// `K(x^(p), y^(q)) = -1_{p>q} (T_{q,q+1} * ... * T_{p-1,p})(y, x)
///   + Σ_ij [G^{-t}]_ij (Φ_i * T_{1,2} * ... * T_{p-1,p})(x) (T_{q,q+1} * ... * T_{k-1,k} * Ψ_j)(y)`.
pub fn em_kernel(spec: &LayeredSpec) -> Result<KernelMatrix> {
    let k = spec.layer_sizes.len();
    let g_inv =
        linalg::inverse_checked(&spec.gram()).map_err(|rcond| DppError::SingularGram { rcond })?;
    let g_inv_t = g_inv.transpose();
    // left[p] = Φ * T_{1..p}  (N × d_p); right[q] = T_{q..k} * Ψ^t  (d_q × N)
    let left: Vec<CMatrix> = (0..k).map(|p| &spec.phi * spec.chain(0, p)).collect();
    let right: Vec<CMatrix> = (0..k)
        .map(|q| spec.chain(q, k - 1) * spec.psi.transpose())
        .collect();
    let offsets = spec.offsets();
    let total: usize = spec.layer_sizes.iter().sum();
    let mut kmat = CMatrix::zeros(total, total);
    for p in 0..k {
        for q in 0..k {
            let mut block = left[p].transpose() * &g_inv_t * right[q].transpose();
            if p > q {
                block -= spec.chain(q, p).transpose();
            }
            kmat.view_mut(
                (offsets[p], offsets[q]),
                (spec.layer_sizes[p], spec.layer_sizes[q]),
            )
            .copy_from(&block);
        }
    }
    KernelMatrix::new(spec.ground_set()?, kmat)
}

/// The factorized case: per-layer orthonormal bases `Ξ^(j)` (columns of
/// `bases[j]`) with `T_{j,j+1} = Σ_i c_{j,j+1;i} Ξ^(j)_i ⊗ Ξ^(j+1)_i`, and
/// `Φ`, `Ψ` spanning the first `N` basis vectors of the outer layers.
#[derive(Debug, Clone, PartialEq)]
pub struct NiceCaseSpec {
    bases: Vec<CMatrix>,
    constants: Vec<Vec<Complex64>>,
    particles: usize,
}

impl NiceCaseSpec {
    pub fn new(
        bases: Vec<CMatrix>,
        constants: Vec<Vec<Complex64>>,
        particles: usize,
    ) -> Result<Self> {
        let k = bases.len();
        if k == 0 {
            return Err(DppError::InvalidInput("need at least one layer".into()));
        }
        let d = bases[0].nrows();
        if bases.iter().any(|b| b.nrows() != d || b.ncols() != d) {
            return Err(DppError::DimensionMismatch(
                "bases must all be d x d".into(),
            ));
        }
        if constants.len() != k - 1 || constants.iter().any(|c| c.len() != d) {
            return Err(DppError::DimensionMismatch(format!(
                "need {} rows of {d} constants",
                k - 1
            )));
        }
        if particles == 0 || particles > d {
            return Err(DppError::InvalidInput(format!(
                "N = {particles} outside 1..={d}"
            )));
        }
        for (j, b) in bases.iter().enumerate() {
            if linalg::max_abs_diff(&(b.transpose() * b), &CMatrix::identity(d, d)) > 1e-10 {
                return Err(DppError::InvalidInput(format!(
                    "basis {j} is not orthonormal"
                )));
            }
        }
        Ok(NiceCaseSpec {
            bases,
            constants,
            particles,
        })
    }

    fn dim(&self) -> usize {
        self.bases[0].nrows()
    }

    /// `c_{p,q;i} = c_{p,p+1;i} ... c_{q-1,q;i}`, 1 when `p == q`.
    fn c_prod(&self, p: usize, q: usize, i: usize) -> Complex64 {
        self.constants[p..q].iter().map(|row| row[i]).product()
    }

    /// The same measure written as a general layered spec.
    pub fn to_layered(&self) -> Result<LayeredSpec> {
        let k = self.bases.len();
        let d = self.dim();
        let n = self.particles;
        let phi = self.bases[0].columns(0, n).transpose();
        let psi = self.bases[k - 1].columns(0, n).transpose();
        let transitions = (0..k - 1)
            .map(|j| {
                let c = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
                    &self.constants[j],
                ));
                &self.bases[j] * c * self.bases[j + 1].transpose()
            })
            .collect();
        LayeredSpec::new(vec![d; k], phi, psi, transitions)
    }
}

/// Two-branch kernel of the factorized case:
/// `Σ_{i≤N} Ξ^(p)_i(x) Ξ^(q)_i(y) / c_{p,q;i}` for `p ≤ q` and
/// `-Σ_{i>N} c_{q,p;i} Ξ^(p)_i(x) Ξ^(q)_i(y)` for `p > q`.
pub fn nice_case_kernel(spec: &NiceCaseSpec) -> Result<KernelMatrix> {
    let k = spec.bases.len();
    let d = spec.dim();
    let n = spec.particles;
    for (j, row) in spec.constants.iter().enumerate() {
        if let Some(i) = row[..n].iter().position(|c| *c == linalg::ZERO) {
            return Err(DppError::ZeroConstant {
                layer_from: j + 1,
                layer_to: j + 2,
                index: i + 1,
            });
        }
    }
    let mut kmat = CMatrix::zeros(k * d, k * d);
    for p in 0..k {
        for q in 0..k {
            let (range, coef): (Vec<usize>, Box<dyn Fn(usize) -> Complex64>) = if p <= q {
                (
                    (0..n).collect(),
                    Box::new(move |i| ONE / spec.c_prod(p, q, i)),
                )
            } else {
                ((n..d).collect(), Box::new(move |i| -spec.c_prod(q, p, i)))
            };
            for x in 0..d {
                for y in 0..d {
                    kmat[(p * d + x, q * d + y)] = range
                        .iter()
                        .map(|&i| coef(i) * spec.bases[p][(x, i)] * spec.bases[q][(y, i)])
                        .sum();
                }
            }
        }
    }
    let gs = GroundSet::new((0..k).flat_map(|p| (0..d).map(move |i| format!("{}:{i}", p + 1))))?;
    KernelMatrix::new(gs, kmat)
}
