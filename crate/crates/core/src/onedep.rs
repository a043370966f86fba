//! One-dependent processes on an integer segment and their kernels built
//! from correlations of consecutive blocks.

use num_complex::Complex64;

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};

/// Largest segment on which [`check_one_dependent`] tabulates every
/// correlation.
pub const ONE_DEPENDENT_CHECK_LIMIT: usize = 20;

/// `R_{a,b} = ρ_{b-a}(a, ..., b-1)` on the segment `start..start+len`,
/// for `start <= a <= b <= start+len`, with `R_{a,a} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCorrelations {
    start: i64,
    len: usize,
    // (len+1)^2, indexed by offsets from `start`
    values: Vec<Complex64>,
}

impl BlockCorrelations {
    /// `f(a, b)` is called with absolute coordinates for every `a < b`.
    pub fn from_fn(
        start: i64,
        len: usize,
        mut f: impl FnMut(i64, i64) -> Complex64,
    ) -> Result<Self> {
        if len == 0 {
            return Err(DppError::InvalidInput(
                "segment must contain at least one point".into(),
            ));
        }
        let w = len + 1;
        let mut values = vec![ZERO; w * w];
        for a in 0..w {
            values[a * w + a] = ONE;
            for b in a + 1..w {
                values[a * w + b] = f(start + a as i64, start + b as i64);
            }
        }
        Ok(BlockCorrelations { start, len, values })
    }

    /// `rows[a][k] = R_{start+a, start+a+k+1}`: row `a` lists the blocks
    /// starting at `start + a`.
    pub fn from_rows(start: i64, rows: &[Vec<Complex64>]) -> Result<Self> {
        let len = rows.len();
        for (a, row) in rows.iter().enumerate() {
            if row.len() != len - a {
                return Err(DppError::DimensionMismatch(format!(
                    "row {a} needs {} entries, has {}",
                    len - a,
                    row.len()
                )));
            }
        }
        Self::from_fn(start, len, |a, b| {
            let a = (a - start) as usize;
            let b = (b - start) as usize;
            rows[a][b - a - 1]
        })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `R_{a,b}` in absolute coordinates.
    pub fn get(&self, a: i64, b: i64) -> Complex64 {
        self.at((a - self.start) as usize, (b - self.start) as usize)
    }

    fn at(&self, a: usize, b: usize) -> Complex64 {
        self.values[a * (self.len + 1) + b]
    }

    /// Rows in the layout accepted by [`BlockCorrelations::from_rows`].
    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.len)
            .map(|a| (a + 1..=self.len).map(|b| self.at(a, b)).collect())
            .collect()
    }

    /// Ground set labelled by the integer coordinates.
    pub fn ground_set(&self) -> Result<GroundSet> {
        GroundSet::new((0..self.len).map(|i| (self.start + i as i64).to_string()))
    }
}

/// `K(x, y) = 0` for `x - y >= 2`, `-1` for `x - y = 1`, and for `x <= y`
/// the alternating sum over chains `x = l_0 < l_1 < ... < l_r = y + 1` of
/// `(-1)^{r-1} R_{l_0,l_1} ... R_{l_{r-1},l_r}`.
pub fn onedep_kernel(r: &BlockCorrelations) -> Result<KernelMatrix> {
    let n = r.len;
    let w = n + 1;
    // s[a][c] = alternating chain sum from a to c.
    let mut s = vec![ZERO; w * w];
    for c in 1..w {
        for a in (0..c).rev() {
            let mut v = r.at(a, c);
            for b in a + 1..c {
                v -= r.at(a, b) * s[b * w + c];
            }
            s[a * w + c] = v;
        }
    }
    let k = CMatrix::from_fn(n, n, |x, y| {
        if x <= y {
            s[x * w + y + 1]
        } else if x == y + 1 {
            -ONE
        } else {
            ZERO
        }
    });
    KernelMatrix::new(r.ground_set()?, k)
}

/// Reads `R_{a,b}` off the process, treating ground-set index `i` as the
/// point `start + i`.
pub fn blocks_from_process(process: &ExplicitProcess, start: i64) -> Result<BlockCorrelations> {
    let n = process.ground_set().len();
    let mu = process.ground_set().mu();
    let probs: Vec<(Vec<bool>, Complex64)> = process
        .probabilities()
        .map(|(c, p)| {
            let mut occ = vec![false; n];
            for &i in c.indices() {
                occ[i] = true;
            }
            (occ, p)
        })
        .collect();
    BlockCorrelations::from_fn(start, n, |a, b| {
        let a = (a - start) as usize;
        let b = (b - start) as usize;
        let hit: Complex64 = probs
            .iter()
            .filter(|(occ, _)| occ[a..b].iter().all(|&o| o))
            .map(|(_, p)| *p)
            .sum();
        hit / mu[a..b].iter().product::<f64>()
    })
}

/// True iff `ρ(A ∪ B) = ρ(A) ρ(B)` within `tol` whenever every point of `A`
/// is at distance at least 2 from every point of `B`. Ground-set indices are
/// taken as consecutive integers.
///
/// Splitting off one maximal run of consecutive points at a time suffices:
/// it forces every correlation to factor over its runs.
pub fn check_one_dependent(process: &ExplicitProcess, tol: f64) -> Result<bool> {
    let n = process.ground_set().len();
    if n > ONE_DEPENDENT_CHECK_LIMIT {
        return Err(DppError::EnumerationTooLarge {
            size: n,
            limit: ONE_DEPENDENT_CHECK_LIMIT,
        });
    }
    // Superset sums give Pr{A ⊂ X} for every mask A.
    let mut rho = vec![ZERO; 1 << n];
    for (c, p) in process.probabilities() {
        rho[c.mask() as usize] += p;
    }
    for bit in 0..n {
        for m in 0..1usize << n {
            if m >> bit & 1 == 0 {
                let up = rho[m | 1 << bit];
                rho[m] += up;
            }
        }
    }
    let mu = process.ground_set().mu();
    for (m, v) in rho.iter_mut().enumerate() {
        let w: f64 = (0..n).filter(|i| m >> i & 1 == 1).map(|i| mu[i]).product();
        *v /= w;
    }
    for m in 1..1usize << n {
        let low = m.trailing_zeros() as usize;
        // First run of consecutive set bits.
        let run_len = (m >> low).trailing_ones() as usize;
        let run = ((1usize << run_len) - 1) << low;
        let rest = m & !run;
        if rest == 0 {
            continue;
        }
        if (rho[m] - rho[run] * rho[rest]).norm() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The one-dependent (signed) measure determined by `R`: correlations
/// factor over maximal runs of consecutive points, and configuration
/// weights follow by inclusion-exclusion. Counting measure.
pub fn process_from_blocks(r: &BlockCorrelations) -> Result<ExplicitProcess> {
    let n = r.len();
    if n > ONE_DEPENDENT_CHECK_LIMIT {
        return Err(DppError::EnumerationTooLarge {
            size: n,
            limit: ONE_DEPENDENT_CHECK_LIMIT,
        });
    }
    let mut w = vec![ONE; 1 << n];
    for (m, v) in w.iter_mut().enumerate().skip(1) {
        let mut rest = m;
        while rest != 0 {
            let low = rest.trailing_zeros() as usize;
            let run_len = (rest >> low).trailing_ones() as usize;
            *v *= r.at(low, low + run_len);
            rest &= !(((1usize << run_len) - 1) << low);
        }
    }
    // Möbius inversion over supersets.
    for bit in 0..n {
        for m in 0..1usize << n {
            if m >> bit & 1 == 0 {
                let up = w[m | 1 << bit];
                w[m] -= up;
            }
        }
    }
    let weights = w
        .into_iter()
        .enumerate()
        .map(|(m, p)| (Configuration::from_mask(m as u64), p));
    ExplicitProcess::new(r.ground_set()?, weights)
}

/// The nearest-neighbour exclusion process `X_i = ξ_i (1 - ξ_{i+1})` built
/// from independent Bernoulli variables `ξ_0, ..., ξ_n` with
/// `Pr{ξ_i = 1} = p[i]`; the segment has `n = p.len() - 1` points. Each
/// `X_i` depends on two neighbouring variables only, so the process is
/// one-dependent, and adjacent points are never both present.
pub fn exclusion_process(p: &[f64]) -> Result<ExplicitProcess> {
    if p.len() < 2 {
        return Err(DppError::InvalidInput(
            "need at least two Bernoulli parameters".into(),
        ));
    }
    if p.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
        return Err(DppError::InvalidInput(
            "Bernoulli parameters must lie in [0, 1]".into(),
        ));
    }
    let n = p.len() - 1;
    if n > ONE_DEPENDENT_CHECK_LIMIT {
        return Err(DppError::EnumerationTooLarge {
            size: n,
            limit: ONE_DEPENDENT_CHECK_LIMIT,
        });
    }
    let confs = (0u64..1 << p.len()).map(|xi| {
        let w: f64 = (0..p.len())
            .map(|i| if xi >> i & 1 == 1 { p[i] } else { 1.0 - p[i] })
            .product();
        let x = (0..n).fold(0u64, |m, i| m | ((xi >> i & 1) & !(xi >> (i + 1)) & 1) << i);
        (Configuration::from_mask(x), linalg::c(w))
    });
    ExplicitProcess::new(GroundSet::counting(n)?, confs)
}
