//! L-ensembles `Pr{X} ∝ det L_X`, their conditional versions, and the
//! passage between `L` and the correlation kernel.

use num_complex::Complex64;

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix};
use crate::oracle::DEFAULT_ENUMERATION_LIMIT;
use crate::process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LMatrix {
    ground_set: GroundSet,
    entries: CMatrix,
}

impl LMatrix {
    /// Point weights are ignored: L-ensembles live on the counting measure.
    pub fn new(ground_set: GroundSet, entries: CMatrix) -> Result<Self> {
        let n = ground_set.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(DppError::DimensionMismatch(format!(
                "L is {}x{} on {n} points",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let ground_set = GroundSet::new(ground_set.labels().to_vec())?;
        Ok(LMatrix {
            ground_set,
            entries,
        })
    }

    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        Self::new(GroundSet::counting(entries.nrows())?, entries)
    }

    pub fn ground_set(&self) -> &GroundSet {
        &self.ground_set
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Optional validation for probability measures: every principal minor
    /// is real and nonnegative (within `tol`). Enumerates all subsets.
    pub fn has_nonnegative_minors(&self, tol: f64) -> Result<bool> {
        let n = self.len();
        if n > DEFAULT_ENUMERATION_LIMIT {
            return Err(DppError::EnumerationTooLarge {
                size: n,
                limit: DEFAULT_ENUMERATION_LIMIT,
            });
        }
        Ok((0u64..1 << n).all(|mask| {
            let d = linalg::det(&linalg::principal(
                &self.entries,
                Configuration::from_mask(mask).indices(),
            ));
            d.re >= -tol && d.im.abs() <= tol
        }))
    }
}

/// Indicator split of the ground set into the free part `Y` and the part
/// `Ȳ` that is always occupied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalSplit {
    y: Vec<usize>,
    complement: Vec<usize>,
}

impl ConditionalSplit {
    pub fn new(y: Vec<usize>, size: usize) -> Result<Self> {
        let conf = Configuration::new(y)
            .map_err(|_| DppError::InvalidInput("Y has repeated points".into()))?;
        conf.check_bounds(size)?;
        if conf.is_empty() {
            return Err(DppError::InvalidInput("Y must be nonempty".into()));
        }
        let complement = (0..size).filter(|&i| !conf.contains(i)).collect();
        Ok(ConditionalSplit {
            y: conf.indices().to_vec(),
            complement,
        })
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    fn check(&self, l: &LMatrix) -> Result<()> {
        if self.y.len() + self.complement.len() != l.len() {
            return Err(DppError::DimensionMismatch(
                "split does not partition the ground set".into(),
            ));
        }
        Ok(())
    }
}

fn det_one_plus_l(l: &LMatrix) -> Result<Complex64> {
    let n = l.len();
    let m = CMatrix::identity(n, n) + &l.entries;
    linalg::inverse_checked(&m).map_err(|rcond| DppError::SingularOnePlusL { rcond })?;
    Ok(linalg::det(&m))
}

/// `Pr{X} = det L_X / det(1 + L)`.
pub fn l_probability(l: &LMatrix, x: &Configuration) -> Result<Complex64> {
    x.check_bounds(l.len())?;
    let z = det_one_plus_l(l)?;
    Ok(linalg::det(&linalg::principal(&l.entries, x.indices())) / z)
}

/// Every subset with weight `det L_X`.
pub fn l_process(l: &LMatrix) -> Result<ExplicitProcess> {
    let n = l.len();
    if n > DEFAULT_ENUMERATION_LIMIT {
        return Err(DppError::EnumerationTooLarge {
            size: n,
            limit: DEFAULT_ENUMERATION_LIMIT,
        });
    }
    let weights = (0u64..1 << n).map(|mask| {
        let x = Configuration::from_mask(mask);
        let w = linalg::det(&linalg::principal(&l.entries, x.indices()));
        (x, w)
    });
    ExplicitProcess::new(l.ground_set.clone(), weights)
}

/// `K = L (1 + L)^{-1}`.
pub fn l_to_k(l: &LMatrix) -> Result<KernelMatrix> {
    let n = l.len();
    let inv = linalg::inverse_checked(&(CMatrix::identity(n, n) + &l.entries))
        .map_err(|rcond| DppError::SingularOnePlusL { rcond })?;
    KernelMatrix::new(l.ground_set.clone(), &l.entries * inv)
}

/// `L = K (1 - K)^{-1}`.
pub fn k_to_l(k: &KernelMatrix) -> Result<LMatrix> {
    let n = k.len();
    let inv = linalg::inverse_checked(&(CMatrix::identity(n, n) - k.matrix()))
        .map_err(|rcond| DppError::SingularOneMinusK { rcond })?;
    LMatrix::new(k.ground_set().clone(), k.matrix() * inv)
}

fn one_y_plus_l(l: &LMatrix, split: &ConditionalSplit) -> CMatrix {
    let mut m = l.entries.clone();
    for &i in &split.y {
        m[(i, i)] += linalg::ONE;
    }
    m
}

/// `K = 1_Y - (1_Y + L)^{-1}` restricted to `Y × Y`.
pub fn conditional_k(l: &LMatrix, split: &ConditionalSplit) -> Result<KernelMatrix> {
    split.check(l)?;
    let inv = linalg::inverse_checked(&one_y_plus_l(l, split))
        .map_err(|rcond| DppError::SingularConditional { rcond })?;
    let y = &split.y;
    let k = CMatrix::from_fn(y.len(), y.len(), |i, j| {
        let id = if i == j { linalg::ONE } else { linalg::ZERO };
        id - inv[(y[i], y[j])]
    });
    let labels: Vec<String> = y
        .iter()
        .map(|&i| l.ground_set.label(i).to_string())
        .collect();
    KernelMatrix::new(GroundSet::new(labels)?, k)
}

/// `Pr{Y'} = det L_{Y' ∪ Ȳ} / det(1_Y + L)`, with `Y'` indexed within `Y`.
pub fn conditional_probability(
    l: &LMatrix,
    split: &ConditionalSplit,
    y_prime: &Configuration,
) -> Result<Complex64> {
    split.check(l)?;
    y_prime.check_bounds(split.y.len())?;
    let m = one_y_plus_l(l, split);
    linalg::inverse_checked(&m).map_err(|rcond| DppError::SingularConditional { rcond })?;
    let mut idx: Vec<usize> = y_prime.indices().iter().map(|&k| split.y[k]).collect();
    idx.extend_from_slice(&split.complement);
    idx.sort_unstable();
    Ok(linalg::det(&linalg::principal(&l.entries, &idx)) / linalg::det(&m))
}

/// The conditional process on `Y` with weights `det L_{Y' ∪ Ȳ}`.
pub fn conditional_process(l: &LMatrix, split: &ConditionalSplit) -> Result<ExplicitProcess> {
    split.check(l)?;
    let ny = split.y.len();
    if ny > DEFAULT_ENUMERATION_LIMIT {
        return Err(DppError::EnumerationTooLarge {
            size: ny,
            limit: DEFAULT_ENUMERATION_LIMIT,
        });
    }
    let mut weights = Vec::with_capacity(1 << ny);
    for mask in 0u64..1 << ny {
        let yp = Configuration::from_mask(mask);
        let mut idx: Vec<usize> = yp.indices().iter().map(|&k| split.y[k]).collect();
        idx.extend_from_slice(&split.complement);
        idx.sort_unstable();
        weights.push((yp, linalg::det(&linalg::principal(&l.entries, &idx))));
    }
    let labels: Vec<String> = split
        .y
        .iter()
        .map(|&i| l.ground_set.label(i).to_string())
        .collect();
    ExplicitProcess::new(GroundSet::new(labels)?, weights)
}
