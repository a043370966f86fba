//! Brute-force correlation oracle and the determinantal verification harness.
//!
//! Every kernel constructor in this crate is checked the same way: build the
//! explicit measure on configurations, read off correlation functions by
//! summation, and compare them against principal minors of the kernel.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix};
use crate::process::{Configuration, ExplicitProcess, KernelMatrix};

/// Largest ground set the oracle enumerates unless told otherwise.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 24;
/// Hard ceiling: configurations are tracked as 64-bit masks.
pub const MAX_ENUMERATION_LIMIT: usize = 63;

pub const DEFAULT_VERIFY_TOL: f64 = 1e-10;
pub const DEFAULT_HERMITIAN_TOL: f64 = 1e-9;

/// `rho_n(pts)`: the probability that every point of `pts` is present,
/// divided by the reference weights of those points.
pub fn oracle_correlation(process: &ExplicitProcess, pts: &Configuration) -> Result<Complex64> {
    let gs = process.ground_set();
    pts.check_bounds(gs.len())?;
    let hit: Complex64 = process
        .weights()
        .iter()
        .filter(|(conf, _)| pts.is_subset_of(conf))
        .map(|(_, w)| *w)
        .sum();
    let mu: f64 = pts.indices().iter().map(|&i| gs.mu()[i]).product();
    Ok(hit / process.partition_function() / mu)
}

/// `det[K(x_i, x_j)]` over the points of `pts`.
pub fn kernel_correlation(kernel: &KernelMatrix, pts: &Configuration) -> Result<Complex64> {
    pts.check_bounds(kernel.len())?;
    Ok(linalg::det(&linalg::principal(
        kernel.matrix(),
        pts.indices(),
    )))
}

/// One correlation value where the kernel and the oracle disagree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub configuration: Configuration,
    pub oracle: [f64; 2],
    pub kernel: [f64; 2],
    pub deviation: f64,
}

/// Outcome of comparing a kernel against an explicit process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub n_max: usize,
    pub tol: f64,
    /// Number of point sets compared.
    pub checked: usize,
    pub max_deviation: f64,
    /// Point set attaining `max_deviation`.
    pub worst: Option<Configuration>,
    /// Every point set whose deviation exceeds `tol`, in configuration order.
    pub failures: Vec<Deviation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares `rho_n` from the kernel with the oracle for every point set of
/// size `1..=n_max`.
pub fn verify_determinantal(
    process: &ExplicitProcess,
    kernel: &KernelMatrix,
    n_max: usize,
    tol: f64,
) -> Result<VerificationReport> {
    verify_determinantal_with_limit(process, kernel, n_max, tol, DEFAULT_ENUMERATION_LIMIT)
}

pub fn verify_determinantal_with_limit(
    process: &ExplicitProcess,
    kernel: &KernelMatrix,
    n_max: usize,
    tol: f64,
    limit: usize,
) -> Result<VerificationReport> {
    let n = kernel.len();
    if process.ground_set().len() != n {
        return Err(DppError::DimensionMismatch(format!(
            "process lives on {} points, kernel on {n}",
            process.ground_set().len()
        )));
    }
    let limit = limit.min(MAX_ENUMERATION_LIMIT);
    if n > limit {
        return Err(DppError::EnumerationTooLarge { size: n, limit });
    }
    let n_max = n_max.min(n);

    let targets = subsets_up_to(n, n_max);
    let slot: HashMap<u64, usize> = targets.iter().enumerate().map(|(k, &m)| (m, k)).collect();

    let mut hits = vec![linalg::ZERO; targets.len()];
    for (conf, p) in process.probabilities() {
        let idx = conf.indices();
        for_each_subset(idx, n_max, |mask| {
            if let Some(&k) = slot.get(&mask) {
                hits[k] += p;
            }
        });
    }

    let mu = process.ground_set().mu();
    let mat: &CMatrix = kernel.matrix();
    let mut deviations: Vec<(usize, Complex64, Complex64, f64)> = targets
        .par_iter()
        .enumerate()
        .map(|(k, &mask)| {
            let conf = Configuration::from_mask(mask);
            let weight: f64 = conf.indices().iter().map(|&i| mu[i]).product();
            let oracle = hits[k] / weight;
            let from_kernel = linalg::det(&linalg::principal(mat, conf.indices()));
            let dev = (oracle - from_kernel).norm();
            (
                k,
                oracle,
                from_kernel,
                if dev.is_nan() { f64::INFINITY } else { dev },
            )
        })
        .collect();
    deviations.sort_by_key(|d| d.0);

    let mut max_deviation = 0.0;
    let mut worst = None;
    let mut failures = Vec::new();
    for &(k, oracle, from_kernel, dev) in &deviations {
        let conf = Configuration::from_mask(targets[k]);
        if dev > max_deviation || worst.is_none() {
            max_deviation = dev;
            worst = Some(conf.clone());
        }
        if dev > tol {
            failures.push(Deviation {
                configuration: conf,
                oracle: [oracle.re, oracle.im],
                kernel: [from_kernel.re, from_kernel.im],
                deviation: dev,
            });
        }
    }
    failures.sort_by(|a, b| a.configuration.cmp(&b.configuration));
    Ok(VerificationReport {
        n_max,
        tol,
        checked: targets.len(),
        max_deviation,
        worst,
        failures,
    })
}

/// Theorem-9.1 style validity of a Hermitian kernel: every eigenvalue in
/// `[-tol, 1 + tol]`.
pub fn validity_hermitian(kernel: &KernelMatrix, tol: f64) -> Result<bool> {
    let m = kernel.matrix();
    let deviation = linalg::max_abs_diff(m, &m.adjoint());
    if deviation > tol {
        return Err(DppError::NotHermitian { deviation });
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(linalg::hermitian_eigenvalues(&herm)
        .iter()
        .all(|&l| l >= -tol && l <= 1.0 + tol))
}

/// Largest difference between `rho_n` computed from two kernels on the same
/// ground set, over all point sets of size `1..=n_max`.
pub fn max_correlation_gap(a: &KernelMatrix, b: &KernelMatrix, n_max: usize) -> Result<f64> {
    let n = a.len();
    if b.len() != n {
        return Err(DppError::DimensionMismatch("kernels differ in size".into()));
    }
    if n > MAX_ENUMERATION_LIMIT {
        return Err(DppError::EnumerationTooLarge {
            size: n,
            limit: MAX_ENUMERATION_LIMIT,
        });
    }
    let gap = subsets_up_to(n, n_max.min(n))
        .par_iter()
        .map(|&m| {
            let idx = Configuration::from_mask(m);
            let d = (linalg::det(&linalg::principal(a.matrix(), idx.indices()))
                - linalg::det(&linalg::principal(b.matrix(), idx.indices())))
            .norm();
            if d.is_nan() {
                f64::INFINITY
            } else {
                d
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(gap)
}

/// All masks over `0..n` with between 1 and `k` bits set, ordered by size
/// and then lexicographically by index list.
pub(crate) fn subsets_up_to(n: usize, k: usize) -> Vec<u64> {
    let all: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for size in 1..=k {
        let mut buf = Vec::with_capacity(size);
        combinations(&all, size, 0, &mut buf, &mut |c| {
            out.push(c.iter().fold(0u64, |m, &i| m | 1 << i));
        });
    }
    out
}

/// Calls `f` with the mask of every nonempty subset of `idx` of size at
/// most `k`.
fn for_each_subset(idx: &[usize], k: usize, mut f: impl FnMut(u64)) {
    fn rec(idx: &[usize], start: usize, k: usize, mask: u64, f: &mut impl FnMut(u64)) {
        for j in start..idx.len() {
            let m = mask | 1 << idx[j];
            f(m);
            if k > 1 {
                rec(idx, j + 1, k - 1, m, f);
            }
        }
    }
    if k > 0 {
        rec(idx, 0, k, 0, &mut f);
    }
}

/// Lexicographic `size`-combinations of `items`.
pub(crate) fn combinations<T: Copy>(
    items: &[T],
    size: usize,
    start: usize,
    buf: &mut Vec<T>,
    f: &mut impl FnMut(&[T]),
) {
    if buf.len() == size {
        f(buf);
        return;
    }
    let need = size - buf.len();
    for j in start..=items.len().saturating_sub(need) {
        if items.len() < need {
            break;
        }
        buf.push(items[j]);
        combinations(items, size, j + 1, buf, f);
        buf.pop();
    }
}
