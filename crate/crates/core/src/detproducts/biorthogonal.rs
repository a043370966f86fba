use num_complex::Complex64;

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix};
use crate::oracle::combinations;
use crate::process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};

/// Exactly-`N`-point measure with weight
/// `det[Φ_i(x_j)] det[Ψ_i(x_j)] Π μ(x_j)`.
///
/// `phi` and `psi` are `N × |X|` with one row per function.
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalSpec {
    ground_set: GroundSet,
    phi: CMatrix,
    psi: CMatrix,
}

impl BiorthogonalSpec {
    pub fn new(ground_set: GroundSet, phi: CMatrix, psi: CMatrix) -> Result<Self> {
        let n = ground_set.len();
        let big_n = phi.nrows();
        if big_n == 0 {
            return Err(DppError::InvalidInput("need at least one particle".into()));
        }
        if phi.ncols() != n || psi.ncols() != n || psi.nrows() != big_n {
            return Err(DppError::DimensionMismatch(format!(
                "Phi is {}x{}, Psi is {}x{}, ground set has {n} points",
                phi.nrows(),
                phi.ncols(),
                psi.nrows(),
                psi.ncols()
            )));
        }
        if big_n > n {
            return Err(DppError::InvalidInput(format!(
                "N = {big_n} exceeds |X| = {n}"
            )));
        }
        Ok(BiorthogonalSpec {
            ground_set,
            phi,
            psi,
        })
    }

    pub fn ground_set(&self) -> &GroundSet {
        &self.ground_set
    }

    pub fn phi(&self) -> &CMatrix {
        &self.phi
    }

    pub fn psi(&self) -> &CMatrix {
        &self.psi
    }

    pub fn particles(&self) -> usize {
        self.phi.nrows()
    }

    /// Materializes every `N`-point configuration with its weight.
    pub fn explicit_process(&self) -> Result<ExplicitProcess> {
        let n = self.ground_set.len();
        let pts: Vec<usize> = (0..n).collect();
        let rows: Vec<usize> = (0..self.particles()).collect();
        let mu = self.ground_set.mu();
        let mut weights = Vec::new();
        combinations(
            &pts,
            self.particles(),
            0,
            &mut Vec::new(),
            &mut |x: &[usize]| {
                let w = linalg::det(&linalg::submatrix(&self.phi, &rows, x))
                    * linalg::det(&linalg::submatrix(&self.psi, &rows, x))
                    * x.iter().map(|&i| mu[i]).product::<f64>();
                weights.push((Configuration::new(x.to_vec()).expect("distinct"), w));
            },
        );
        ExplicitProcess::new(self.ground_set.clone(), weights)
    }
}

/// `G_ij = Σ_x Φ_i(x) Ψ_j(x) μ(x)`.
pub fn gram(spec: &BiorthogonalSpec) -> CMatrix {
    let mu = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        spec.ground_set.len(),
        spec.ground_set.mu().iter().map(|&m| linalg::c(m)),
    ));
    &spec.phi * mu * spec.psi.transpose()
}

/// `K(x, y) = Σ_ij [G^{-t}]_ij Φ_i(x) Ψ_j(y)`, a kernel with respect to `μ`.
pub fn bi_kernel(spec: &BiorthogonalSpec) -> Result<KernelMatrix> {
    let g = gram(spec);
    let g_inv = linalg::inverse_checked(&g).map_err(|rcond| DppError::SingularGram { rcond })?;
    let k = spec.phi.transpose() * g_inv.transpose() * &spec.psi;
    KernelMatrix::new(spec.ground_set.clone(), k)
}

/// Orthogonal polynomial ensemble on real points:
/// `W(X) ∝ Π_{i<j} (x_i - x_j)^2 Π w(x_i)`, via `Φ_i = Ψ_i = x^{i-1} √w(x)`.
pub fn ope_spec(positions: &[f64], weight: &[f64], particles: usize) -> Result<BiorthogonalSpec> {
    if positions.len() != weight.len() {
        return Err(DppError::DimensionMismatch(
            "positions and weights differ in length".into(),
        ));
    }
    if weight.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(DppError::InvalidInput("OPE weight must be positive".into()));
    }
    let ground_set = GroundSet::new(positions.iter().map(|x| format!("{x}")))?;
    let f = CMatrix::from_fn(particles, positions.len(), |i, j| {
        Complex64::new(positions[j].powi(i as i32) * weight[j].sqrt(), 0.0)
    });
    BiorthogonalSpec::new(ground_set, f.clone(), f)
}
