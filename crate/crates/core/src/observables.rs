//! Observables expressible as finite determinants of the kernel: gap
//! probabilities, counting statistics, multiplicative functionals and
//! Janossy densities.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix, ONE};
use crate::process::{Configuration, KernelMatrix};

/// A subset of the ground set on which counts are taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window(Vec<usize>);

impl Window {
    pub fn new(indices: Vec<usize>, size: usize) -> Result<Self> {
        let conf = Configuration::new(indices)
            .map_err(|_| DppError::InvalidInput("window has repeated points".into()))?;
        conf.check_bounds(size)?;
        Ok(Window(conf.indices().to_vec()))
    }

    pub fn full(size: usize) -> Self {
        Window((0..size).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `Pr{X ∩ I = ∅} = det(1 - K_I)`.
pub fn gap_probability(kernel: &KernelMatrix, window: &Window) -> Complex64 {
    let k = linalg::principal(kernel.matrix(), window.indices());
    let n = k.nrows();
    linalg::det(&(CMatrix::identity(n, n) - k))
}

/// Law of `|X ∩ I|` as a vector indexed by `N = 0..=|I|`.
///
/// The generating function `E[w^{|X∩I|}] = det(1 - (1 - w) K_I)` is a
/// polynomial of degree `|I|` in `w`; its coefficients are recovered exactly
/// from its values at the `|I|+1`-th roots of unity.
pub fn counting_distribution(kernel: &KernelMatrix, window: &Window) -> Vec<Complex64> {
    multi_window_counting(kernel, std::slice::from_ref(window))
        .expect("a single window cannot overlap itself")
        .values
}

/// Joint counting law over several disjoint windows, stored densely with the
/// first window's count varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCounts {
    pub shape: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl JointCounts {
    pub fn get(&self, counts: &[usize]) -> Complex64 {
        let mut flat = 0;
        for (c, s) in counts.iter().zip(&self.shape) {
            assert!(c < s, "count out of range");
            flat = flat * s + c;
        }
        self.values[flat]
    }

    pub fn total(&self) -> Complex64 {
        self.values.iter().sum()
    }
}

/// `Pr{|X∩I_1| = N_1, ..., |X∩I_m| = N_m}` for pairwise disjoint windows.
///
/// `F(w_1..w_m) = det(1 - Σ_j (1 - w_j) K_{I_j})` restricted to the union of
/// windows is a polynomial of degree at most `|I_j|` in each `w_j`. It is
/// sampled on the product grid of roots of unity and inverted with a
/// multidimensional discrete Fourier transform, which is exact for
/// polynomials of that degree.
pub fn multi_window_counting(kernel: &KernelMatrix, windows: &[Window]) -> Result<JointCounts> {
    let mut owner = vec![usize::MAX; kernel.len()];
    let mut union = Vec::new();
    for (j, w) in windows.iter().enumerate() {
        for &i in w.indices() {
            if i >= owner.len() {
                return Err(DppError::IndexOutOfBounds {
                    index: i,
                    size: owner.len(),
                });
            }
            if owner[i] != usize::MAX {
                return Err(DppError::OverlappingWindows(i));
            }
            owner[i] = j;
            union.push(i);
        }
    }
    let k_union = linalg::principal(kernel.matrix(), &union);
    let shape: Vec<usize> = windows.iter().map(|w| w.len() + 1).collect();
    let total: usize = shape.iter().product();
    let n = union.len();

    let roots: Vec<Vec<Complex64>> = shape
        .iter()
        .map(|&s| {
            (0..s)
                .map(|a| Complex64::from_polar(1.0, 2.0 * PI * a as f64 / s as f64))
                .collect()
        })
        .collect();

    // Generating function on the grid.
    let mut samples = vec![linalg::ZERO; total];
    let mut grid = vec![0usize; shape.len()];
    for sample in samples.iter_mut() {
        let scale: Vec<Complex64> = union
            .iter()
            .map(|&i| {
                let j = owner[i];
                ONE - roots[j][grid[j]]
            })
            .collect();
        let m = CMatrix::from_fn(n, n, |r, col| {
            let id = if r == col { ONE } else { linalg::ZERO };
            id - scale[r] * k_union[(r, col)]
        });
        *sample = linalg::det(&m);
        advance(&mut grid, &shape);
    }

    // Inverse DFT along each axis in turn.
    let mut values = samples;
    let mut stride = total;
    for (axis, &s) in shape.iter().enumerate() {
        stride /= s;
        let outer = total / (stride * s);
        let mut next = vec![linalg::ZERO; total];
        for o in 0..outer {
            for inner in 0..stride {
                for coef in 0..s {
                    let mut acc = linalg::ZERO;
                    for a in 0..s {
                        let v = values[(o * s + a) * stride + inner];
                        acc += v * roots[axis][(a * coef) % s].conj();
                    }
                    next[(o * s + coef) * stride + inner] = acc / s as f64;
                }
            }
        }
        values = next;
    }
    Ok(JointCounts { shape, values })
}

fn advance(grid: &mut [usize], shape: &[usize]) {
    for j in (0..grid.len()).rev() {
        grid[j] += 1;
        if grid[j] < shape[j] {
            return;
        }
        grid[j] = 0;
    }
}

/// `E[Π_{x∈X} φ(x)] = det(1 - (1 - φ) K)`, with `1 - φ` scaling rows.
pub fn multiplicative_expectation(kernel: &KernelMatrix, phi: &[Complex64]) -> Result<Complex64> {
    let n = kernel.len();
    if phi.len() != n {
        return Err(DppError::DimensionMismatch(format!(
            "phi has {} entries for {n} points",
            phi.len()
        )));
    }
    let k = kernel.matrix();
    let m = CMatrix::from_fn(n, n, |r, col| {
        let id = if r == col { ONE } else { linalg::ZERO };
        id - (ONE - phi[r]) * k[(r, col)]
    });
    Ok(linalg::det(&m))
}

/// Janossy density: probability that the points of `pts` are present and no
/// other point of `window` is, `det(1 - K_I) det[L_I(x_i, x_j)]` with
/// `L_I = K_I (1 - K_I)^{-1}`.
pub fn janossy(kernel: &KernelMatrix, window: &Window, pts: &Configuration) -> Result<Complex64> {
    let pos: Vec<usize> = pts
        .indices()
        .iter()
        .map(|p| {
            window
                .indices()
                .binary_search(p)
                .map_err(|_| DppError::InvalidInput(format!("point {p} is not in the window")))
        })
        .collect::<Result<_>>()?;
    let l = janossy_l(kernel, window)?;
    let gap = gap_probability(kernel, window);
    Ok(gap * linalg::det(&linalg::principal(&l, &pos)))
}

/// `L_I = K_I (1 - K_I)^{-1}` on the window, rows and columns in window order.
pub fn janossy_l(kernel: &KernelMatrix, window: &Window) -> Result<CMatrix> {
    let k = linalg::principal(kernel.matrix(), window.indices());
    let n = k.nrows();
    let inv = linalg::inverse_checked(&(CMatrix::identity(n, n) - &k))
        .map_err(|rcond| DppError::SingularComplement { rcond })?;
    Ok(k * inv)
}
