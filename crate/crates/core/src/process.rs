//! Ground sets, configurations, correlation kernels and explicitly weighted
//! point processes on finite sets.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix};

/// A finite state space with a reference measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSet {
    labels: Vec<String>,
    mu: Vec<f64>,
}

impl GroundSet {
    /// Ground set with counting measure.
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mu = vec![1.0; labels.len()];
        Self::with_measure(labels, mu)
    }

    pub fn with_measure(labels: Vec<String>, mu: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(DppError::InvalidInput("ground set must be nonempty".into()));
        }
        if labels.len() != mu.len() {
            return Err(DppError::DimensionMismatch(format!(
                "{} labels but {} reference weights",
                labels.len(),
                mu.len()
            )));
        }
        if let Some(w) = mu.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(DppError::InvalidInput(format!(
                "reference weight {w} is not strictly positive"
            )));
        }
        let mut sorted: Vec<&String> = labels.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(DppError::InvalidInput(format!(
                "duplicate label {:?}",
                w[0]
            )));
        }
        Ok(GroundSet { labels, mu })
    }

    /// Points labelled `0..n` with counting measure.
    pub fn counting(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn has_counting_measure(&self) -> bool {
        self.mu.iter().all(|&m| m == 1.0)
    }

    /// Restriction to the given indices, in the given order.
    pub fn restrict(&self, idx: &[usize]) -> Result<Self> {
        Self::with_measure(
            idx.iter().map(|&i| self.labels[i].clone()).collect(),
            idx.iter().map(|&i| self.mu[i]).collect(),
        )
    }
}

/// A finite point configuration: strictly increasing ground-set indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Configuration(Vec<usize>);

impl Configuration {
    /// Sorts the indices; duplicated points are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(DppError::InvalidInput(format!("point {} repeated", w[0])));
        }
        Ok(Configuration(indices))
    }

    pub fn empty() -> Self {
        Configuration(Vec::new())
    }

    /// Configuration of the set bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        Configuration((0..64).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn full(n: usize) -> Self {
        Configuration((0..n).collect())
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

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &Configuration) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &i| m | 1 << i)
    }

    pub fn check_bounds(&self, size: usize) -> Result<()> {
        match self.0.last() {
            Some(&i) if i >= size => Err(DppError::IndexOutOfBounds { index: i, size }),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for Configuration {
    type Error = DppError;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Configuration::new(v)
    }
}

impl From<Configuration> for Vec<usize> {
    fn from(c: Configuration) -> Self {
        c.0
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// A correlation kernel on a finite ground set.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    ground_set: GroundSet,
    entries: CMatrix,
}

impl KernelMatrix {
    pub fn new(ground_set: GroundSet, entries: CMatrix) -> Result<Self> {
        let n = ground_set.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(DppError::DimensionMismatch(format!(
                "kernel is {}x{} but ground set has {n} points",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(KernelMatrix {
            ground_set,
            entries,
        })
    }

    /// Kernel on `0..n` with counting measure.
    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        Self::new(GroundSet::counting(entries.nrows())?, entries)
    }

    pub fn from_real(entries: &nalgebra::DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(linalg::to_complex(entries))
    }

    pub fn ground_set(&self) -> &GroundSet {
        &self.ground_set
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.entries[(x, y)]
    }

    /// `D K D^{-1}` for the diagonal matrix `D = diag(d)`. Every
    /// correlation function is unchanged.
    pub fn conjugate_diagonal(&self, d: &[Complex64]) -> Result<Self> {
        if d.len() != self.len() {
            return Err(DppError::DimensionMismatch("gauge vector length".into()));
        }
        let m = CMatrix::from_fn(self.len(), self.len(), |i, j| {
            d[i] * self.entries[(i, j)] / d[j]
        });
        Self::new(self.ground_set.clone(), m)
    }
}

/// A (possibly complex) measure on the configurations of a finite ground set,
/// given by unnormalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitProcess {
    ground_set: GroundSet,
    weights: BTreeMap<Configuration, Complex64>,
    partition_function: Complex64,
}

impl ExplicitProcess {
    /// Builds the process from unnormalized weights. Repeated configurations
    /// accumulate; exact zeros are dropped.
    pub fn new(
        ground_set: GroundSet,
        weights: impl IntoIterator<Item = (Configuration, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Configuration, Complex64> = BTreeMap::new();
        let mut scale = 0.0;
        for (conf, w) in weights {
            conf.check_bounds(ground_set.len())?;
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(DppError::InvalidInput(format!(
                    "weight of {conf} is not finite"
                )));
            }
            scale += w.norm();
            *map.entry(conf).or_insert(linalg::ZERO) += w;
        }
        map.retain(|_, w| *w != linalg::ZERO);
        let z: Complex64 = map.values().sum();
        if z.norm() <= 1e-14 * scale || z == linalg::ZERO {
            return Err(DppError::ZeroPartitionFunction);
        }
        Ok(ExplicitProcess {
            ground_set,
            weights: map,
            partition_function: z,
        })
    }

    pub fn ground_set(&self) -> &GroundSet {
        &self.ground_set
    }

    pub fn partition_function(&self) -> Complex64 {
        self.partition_function
    }

    /// Unnormalized weights of the configurations with nonzero weight.
    pub fn weights(&self) -> &BTreeMap<Configuration, Complex64> {
        &self.weights
    }

    /// Normalized weight `W(X)/Z`.
    pub fn probability(&self, conf: &Configuration) -> Complex64 {
        self.weights
            .get(conf)
            .map_or(linalg::ZERO, |w| w / self.partition_function)
    }

    /// Iterator over `(X, W(X)/Z)`.
    pub fn probabilities(&self) -> impl Iterator<Item = (&Configuration, Complex64)> + '_ {
        let z = self.partition_function;
        self.weights.iter().map(move |(c, w)| (c, w / z))
    }

    /// Expected number of points, `sum_X |X| W(X)/Z`.
    pub fn expected_size(&self) -> Complex64 {
        self.probabilities().map(|(c, p)| p * c.len() as f64).sum()
    }

    /// Image of the process under restriction to `window`: the law of
    /// `X ∩ window`, on the ground set restricted to `window`.
    pub fn restrict(&self, window: &[usize]) -> Result<Self> {
        let mut pos = vec![usize::MAX; self.ground_set.len()];
        for (k, &i) in window.iter().enumerate() {
            if i >= pos.len() {
                return Err(DppError::IndexOutOfBounds {
                    index: i,
                    size: pos.len(),
                });
            }
            pos[i] = k;
        }
        let weights = self.weights.iter().map(|(c, w)| {
            let idx: Vec<usize> = c
                .indices()
                .iter()
                .filter(|&&i| pos[i] != usize::MAX)
                .map(|&i| pos[i])
                .collect();
            (Configuration::new(idx).expect("distinct"), *w)
        });
        ExplicitProcess::new(self.ground_set.restrict(window)?, weights)
    }
}
