//! Sine and Airy kernels on the line and Fredholm determinants of their
//! restrictions to finite intervals, discretized by Gauss–Legendre
//! quadrature.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::dd::Dd;
use crate::error::{DppError, Result};
use crate::linalg;

/// Largest `|x|` accepted by the Airy routines.
pub const AIRY_RANGE: f64 = 12.0;
/// Smallest quadrature order per interval.
pub const MIN_ORDER: usize = 4;

// Ai(0) and -Ai'(0) to double-double precision.
const AI0: (f64, f64) = (0.3550280538878172, 2.05233632436212e-17);
const MINUS_AIP0: (f64, f64) = (0.2588194037928068, -2.522243111610832e-17);

/// `sin π(x-y) / π(x-y)`, equal to 1 on the diagonal.
pub fn sine_kernel(x: f64, y: f64) -> f64 {
    let d = PI * (x - y);
    if d.abs() < 1e-8 {
        1.0 - d * d / 6.0
    } else {
        d.sin() / d
    }
}

/// `(Ai, Ai')` at `x` in double-double precision, from the Maclaurin series
/// `Ai = c1 f - c2 g`.
fn airy_dd(x: f64) -> Result<(Dd, Dd)> {
    if x.is_nan() || x.abs() > AIRY_RANGE {
        return Err(DppError::ArgumentOutOfRange(x));
    }
    let xd = Dd::from(x);
    let x3 = xd * xd * xd;
    // f = Σ t_k, g = Σ u_k and their derivatives Σ p_k, Σ q_k.
    let (mut t, mut u) = (Dd::ONE, xd);
    let (mut p, mut q) = (xd * xd / Dd::from(2.0), Dd::ONE);
    let (mut f, mut g, mut fp, mut gp) = (t, u, p, q);
    let mut peak = 1.0f64;
    for k in 1..500 {
        let k3 = 3.0 * k as f64;
        t = t * x3 / Dd::from((k3 - 1.0) * k3);
        u = u * x3 / Dd::from(k3 * (k3 + 1.0));
        q = q * x3 / Dd::from(k3 * (k3 - 2.0));
        if k > 1 {
            p = p * x3 / Dd::from((k3 - 3.0) * (k3 - 1.0));
            fp = fp + p;
        }
        f = f + t;
        g = g + u;
        gp = gp + q;
        let mag = [t, u, p, q]
            .iter()
            .map(|v| v.abs().to_f64())
            .fold(0.0, f64::max);
        peak = peak.max(mag);
        if mag <= 1e-34 * peak {
            break;
        }
    }
    let c1 = Dd::new(AI0.0, AI0.1);
    let c2 = Dd::new(MINUS_AIP0.0, MINUS_AIP0.1);
    Ok((c1 * f - c2 * g, c1 * fp - c2 * gp))
}

/// `(Ai(x), Ai'(x))` for `|x| <= 12`.
pub fn airy_fn(x: f64) -> Result<(f64, f64)> {
    let (a, ap) = airy_dd(x)?;
    Ok((a.to_f64(), ap.to_f64()))
}

/// `(Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y)`, and `Ai'(x)² - x Ai(x)²` on the
/// diagonal.
pub fn airy_kernel(x: f64, y: f64) -> Result<f64> {
    if (x - y).abs() < 1e-12 {
        let m = 0.5 * (x + y);
        let (a, ap) = airy_dd(m)?;
        return Ok((ap * ap - Dd::from(m) * a * a).to_f64());
    }
    let (ax, apx) = airy_dd(x)?;
    let (ay, apy) = airy_dd(y)?;
    Ok(((ax * apy - apx * ay) / (Dd::from(x) - Dd::from(y))).to_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Sine,
    Airy,
}

/// `scale · K` for one of the two kernels; the scale lets tests produce
/// kernels that are not contractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuumKernel {
    pub kind: KernelKind,
    pub scale: f64,
}

impl ContinuumKernel {
    pub fn sine() -> Self {
        ContinuumKernel {
            kind: KernelKind::Sine,
            scale: 1.0,
        }
    }

    pub fn airy() -> Self {
        ContinuumKernel {
            kind: KernelKind::Airy,
            scale: 1.0,
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        ContinuumKernel {
            scale: self.scale * c,
            ..self
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let v = match self.kind {
            KernelKind::Sine => sine_kernel(x, y),
            KernelKind::Airy => airy_kernel(x, y)?,
        };
        Ok(self.scale * v)
    }
}

/// Gauss–Legendre nodes and weights on a union of disjoint intervals,
/// `order` nodes per interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NystromGrid {
    intervals: Vec<(f64, f64)>,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl NystromGrid {
    pub fn new(intervals: &[(f64, f64)], order: usize) -> Result<Self> {
        if order < MIN_ORDER {
            return Err(DppError::InvalidInput(format!(
                "quadrature order must be at least {MIN_ORDER}"
            )));
        }
        let mut sorted = intervals.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(a, b) in &sorted {
            if !(a < b && a.is_finite() && b.is_finite()) {
                return Err(DppError::InvalidInput(format!(
                    "({a}, {b}) is not a bounded interval"
                )));
            }
        }
        if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(DppError::InvalidInput("intervals overlap".into()));
        }
        let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order >= 4"));
        let mut nodes = Vec::with_capacity(order * sorted.len());
        let mut weights = Vec::with_capacity(order * sorted.len());
        for &(a, b) in &sorted {
            let half = 0.5 * (b - a);
            for &(x, w) in rule.as_node_weight_pairs() {
                nodes.push(a + half * (x + 1.0));
                weights.push(half * w);
            }
        }
        Ok(NystromGrid {
            intervals: sorted,
            order,
            nodes,
            weights,
        })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn refined(&self) -> Result<Self> {
        Self::new(&self.intervals, 2 * self.order)
    }
}

/// `√w_i K(x_i, x_j) √w_j`.
pub fn nystrom_matrix(kernel: &ContinuumKernel, grid: &NystromGrid) -> Result<DMatrix<f64>> {
    let n = grid.nodes.len();
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = sw[i] * kernel.eval(grid.nodes[i], grid.nodes[j])? * sw[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// `det(δ_ij - √w_i K(x_i, x_j) √w_j)`, approximating the gap probability
/// of the union of intervals.
pub fn fredholm_det(kernel: &ContinuumKernel, grid: &NystromGrid) -> Result<f64> {
    let m = nystrom_matrix(kernel, grid)?;
    let n = m.nrows();
    Ok((DMatrix::identity(n, n) - m).determinant())
}

/// Eigenvalues of the symmetrized Nyström matrix, ascending.
pub fn nystrom_spectrum(kernel: &ContinuumKernel, grid: &NystromGrid) -> Result<Vec<f64>> {
    Ok(linalg::symmetric_eigenvalues(&nystrom_matrix(
        kernel, grid,
    )?))
}

/// Whether the discretized operator satisfies `0 <= K <= 1` within `tol`.
pub fn discretized_validity(
    kernel: &ContinuumKernel,
    grid: &NystromGrid,
    tol: f64,
) -> Result<bool> {
    Ok(nystrom_spectrum(kernel, grid)?
        .iter()
        .all(|&l| l >= -tol && l <= 1.0 + tol))
}

/// A Fredholm determinant at two quadrature orders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEstimate {
    pub value: f64,
    pub order: usize,
    pub refined_value: f64,
    pub refined_order: usize,
    /// `|value - refined_value|`.
    pub difference: f64,
}

/// Gap probability of the union of intervals at order `m`, with the
/// order-`2m` value as a convergence diagnostic.
pub fn gap_estimate(
    kernel: &ContinuumKernel,
    intervals: &[(f64, f64)],
    order: usize,
) -> Result<GapEstimate> {
    let grid = NystromGrid::new(intervals, order)?;
    let fine = grid.refined()?;
    let value = fredholm_det(kernel, &grid)?;
    let refined_value = fredholm_det(kernel, &fine)?;
    Ok(GapEstimate {
        value,
        order,
        refined_value,
        refined_order: fine.order,
        difference: (value - refined_value).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // (x, Ai(x), Ai'(x)) reference values.
    #[allow(clippy::excessive_precision)]
    const AIRY_TABLE: [(f64, f64, f64); 13] = [
        (-12.0, -0.066555175054373129474, 1.0231104533679707299),
        (-10.0, 0.040241238486443190689, 0.9962650441327900559),
        (-5.0, 0.35076100902411431979, 0.32719281855444313679),
        (-2.5, -0.11232506769296608919, 0.67885273426479436337),
        (-1.0, 0.5355608832923521188, -0.010160567116645209395),
        (0.0, 0.35502805388781723926, -0.25881940379280679841),
        (0.5, 0.23169360648083348977, -0.22491053266468389314),
        (1.0, 0.13529241631288141552, -0.15914744129679321279),
        (2.0, 0.034924130423274379135, -0.053090384433653631704),
        (5.0, 0.00010834442813607441735, -0.000247413890868462476),
        (8.0, 4.6922076160992316256e-8, -1.3414392979067865743e-7),
        (10.0, 1.1047532552898685934e-10, -3.5206336767389236366e-10),
        (12.0, 1.393184688875360839e-13, -4.854736554985308463e-13),
    ];

    #[test]
    fn airy_matches_reference_values() {
        for (x, ai, aip) in AIRY_TABLE {
            let (a, ap) = airy_fn(x).unwrap();
            assert!(
                (a - ai).abs() <= 1e-14 * ai.abs().max(1e-3),
                "Ai({x}) = {a}, want {ai}"
            );
            assert!(
                (ap - aip).abs() <= 1e-14 * aip.abs().max(1e-3),
                "Ai'({x}) = {ap}, want {aip}"
            );
        }
    }

    #[test]
    fn airy_guard() {
        assert_eq!(airy_fn(12.5), Err(DppError::ArgumentOutOfRange(12.5)));
        assert!(airy_kernel(0.0, -13.0).is_err());
    }

    #[test]
    fn sine_values() {
        assert_eq!(sine_kernel(0.0, 0.0), 1.0);
        assert!(sine_kernel(0.0, 1.0).abs() < 1e-15);
        assert!((sine_kernel(0.0, 0.5) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(NystromGrid::new(&[(0.0, 1.0)], 3).is_err());
        assert!(NystromGrid::new(&[(0.0, 1.0), (0.5, 2.0)], 8).is_err());
        assert!(NystromGrid::new(&[(1.0, 0.0)], 8).is_err());
        let g = NystromGrid::new(&[(2.0, 3.0), (0.0, 1.0)], 6).unwrap();
        assert_eq!(g.nodes().len(), 12);
        assert!((g.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(g
            .nodes()
            .iter()
            .all(|&x| (0.0..1.0).contains(&x) || (2.0..3.0).contains(&x)));
    }

    #[test]
    fn zero_kernel_and_small_interval() {
        let g = NystromGrid::new(&[(0.0, 1.0)], 8).unwrap();
        assert_eq!(
            fredholm_det(&ContinuumKernel::sine().scaled(0.0), &g).unwrap(),
            1.0
        );
        let s = 1e-3;
        let g = NystromGrid::new(&[(0.0, s)], 8).unwrap();
        let d = fredholm_det(&ContinuumKernel::sine(), &g).unwrap();
        assert!((d - (1.0 - s)).abs() < 1e-5);
    }

    #[test]
    fn sine_self_convergence_and_validity() {
        let est = gap_estimate(&ContinuumKernel::sine(), &[(0.0, 1.0)], 40).unwrap();
        assert!(est.difference < 1e-10);
        let g = NystromGrid::new(&[(0.0, 1.0)], 60).unwrap();
        assert!(discretized_validity(&ContinuumKernel::sine(), &g, 1e-10).unwrap());
        assert!(!discretized_validity(&ContinuumKernel::sine().scaled(2.0), &g, 1e-10).unwrap());
    }

    #[test]
    fn airy_operator_is_a_contraction() {
        let g = NystromGrid::new(&[(0.0, 8.0)], 40).unwrap();
        assert!(discretized_validity(&ContinuumKernel::airy(), &g, 1e-10).unwrap());
    }
}
