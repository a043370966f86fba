//! Exact sampling from a finite kernel by sequential conditioning.
//!
//! Points are visited in ground-set order. Point `x` is included with its
//! current one-point probability `K(x, x)`; the kernel of the remaining
//! points is then the Schur complement through `x` (for "in") or through
//! `x` in `1 - K` (for "out"). Only the conditionals must lie in `[0, 1]`,
//! so non-self-adjoint kernels are fine whenever they define a probability
//! measure.

use rand::Rng;
use serde::Serialize;

use crate::error::{DppError, Result};
use crate::process::{Configuration, KernelMatrix};

/// Slack allowed on conditional probabilities before they are rejected.
pub const PROBABILITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-300;

/// Draws one configuration.
pub fn sample<R: Rng + ?Sized>(kernel: &KernelMatrix, rng: &mut R) -> Result<Configuration> {
    let mut state = SamplerState::new(kernel);
    state.run(rng)
}

/// Working copy of the kernel with `(re, im)` entries in a flat row-major
/// buffer; row and column `i` are dropped once point `i` is decided.
#[derive(Debug, Clone)]
pub struct SamplerState {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl SamplerState {
    pub fn new(kernel: &KernelMatrix) -> Self {
        let n = kernel.len();
        let m = kernel.matrix();
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                re[i * n + j] = m[(i, j)].re;
                im[i * n + j] = m[(i, j)].im;
            }
        }
        SamplerState { n, re, im }
    }

    pub fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Configuration> {
        let n = self.n;
        let mut chosen = Vec::new();
        for i in 0..n {
            let (p, pim) = (self.re[i * n + i], self.im[i * n + i]);
            if !((-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p)
                && pim.abs() <= PROBABILITY_TOL)
            {
                return Err(DppError::InvalidProbability {
                    point: i,
                    re: p,
                    im: pim,
                });
            }
            let take = rng.random::<f64>() < p;
            // Pivot: K(i,i) for "in", K(i,i) - 1 for "out" (the sign folds
            // the complement 1 - K back into an update of K).
            let (pr, pi) = if take { (p, pim) } else { (p - 1.0, pim) };
            let d = pr * pr + pi * pi;
            if i + 1 < n {
                if d <= PIVOT_TOL {
                    return Err(DppError::SingularPivot(i));
                }
                // 1 / pivot
                let (ir, ii) = (pr / d, -pi / d);
                for a in i + 1..n {
                    // c = K(a, i) / pivot
                    let (kr, ki) = (self.re[a * n + i], self.im[a * n + i]);
                    if kr == 0.0 && ki == 0.0 {
                        continue;
                    }
                    let cr = kr * ir - ki * ii;
                    let ci = kr * ii + ki * ir;
                    for b in i + 1..n {
                        let (br, bi) = (self.re[i * n + b], self.im[i * n + b]);
                        self.re[a * n + b] -= cr * br - ci * bi;
                        self.im[a * n + b] -= cr * bi + ci * br;
                    }
                }
            }
            if take {
                chosen.push(i);
            }
        }
        Ok(Configuration::new(chosen).expect("increasing"))
    }
}

/// Monte Carlo estimate of `ρ_n` at one point set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub points: Configuration,
    pub estimate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / draws)`.
    pub std_error: f64,
}

/// Estimates `Pr{pts ⊂ X}` for each point set from `draws` samples. The
/// reference measure is taken to be counting measure.
pub fn empirical_correlations<R: Rng + ?Sized>(
    kernel: &KernelMatrix,
    rng: &mut R,
    draws: usize,
    pts_list: &[Configuration],
) -> Result<Vec<CorrelationEstimate>> {
    if draws == 0 {
        return Err(DppError::InvalidInput("need at least one draw".into()));
    }
    for pts in pts_list {
        pts.check_bounds(kernel.len())?;
    }
    let mut hits = vec![0usize; pts_list.len()];
    let base = SamplerState::new(kernel);
    for _ in 0..draws {
        let x = base.clone().run(rng)?;
        for (h, pts) in hits.iter_mut().zip(pts_list) {
            if pts.is_subset_of(&x) {
                *h += 1;
            }
        }
    }
    Ok(pts_list
        .iter()
        .zip(hits)
        .map(|(pts, h)| {
            let p = h as f64 / draws as f64;
            CorrelationEstimate {
                points: pts.clone(),
                estimate: p,
                std_error: (p * (1.0 - p) / draws as f64).sqrt(),
            }
        })
        .collect())
}

/// Empirical frequency of every configuration over `draws` samples, keyed
/// by bit mask. Requires at most 20 points.
pub fn empirical_frequencies<R: Rng + ?Sized>(
    kernel: &KernelMatrix,
    rng: &mut R,
    draws: usize,
) -> Result<Vec<f64>> {
    let n = kernel.len();
    if n > 20 {
        return Err(DppError::EnumerationTooLarge { size: n, limit: 20 });
    }
    let mut counts = vec![0usize; 1 << n];
    let base = SamplerState::new(kernel);
    for _ in 0..draws {
        counts[base.clone().run(rng)?.mask() as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / draws as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CMatrix};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real(n: usize, v: &[f64]) -> KernelMatrix {
        KernelMatrix::from_real(&DMatrix::from_row_slice(n, n, v)).unwrap()
    }

    #[test]
    fn deterministic_kernel() {
        let k = real(2, &[1.0, 0.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample(&k, &mut rng).unwrap().indices(), &[0]);
        }
    }

    #[test]
    fn independent_halves() {
        let k = real(2, &[0.5, 0.0, 0.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 100_000;
        let f = empirical_frequencies(&k, &mut rng, draws).unwrap();
        let sd = (0.25f64 * 0.75 / draws as f64).sqrt();
        assert!(f.iter().all(|&x| (x - 0.25).abs() < 3.0 * sd), "{f:?}");
    }

    #[test]
    fn exactly_one_point() {
        let k = real(2, &[0.5, 0.5, 0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let f = empirical_frequencies(&k, &mut rng, draws).unwrap();
        assert_eq!(f[0] + f[3], 0.0);
        let sd = (0.25 / draws as f64).sqrt();
        assert!((f[1] - 0.5).abs() < 3.0 * sd);
    }

    #[test]
    fn seeds_reproduce_streams() {
        let k = real(3, &[0.5, 0.2, 0.1, 0.2, 0.4, 0.0, 0.1, 0.0, 0.7]);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample(&k, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn invalid_kernels_are_reported() {
        let k = real(1, &[1.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(matches!(
            sample(&k, &mut rng),
            Err(DppError::InvalidProbability { point: 0, .. })
        ));
        let k = KernelMatrix::from_matrix(CMatrix::from_element(
            1,
            1,
            c(0.5) + crate::Complex64::new(0.0, 0.3),
        ))
        .unwrap();
        assert!(matches!(
            sample(&k, &mut rng),
            Err(DppError::InvalidProbability { .. })
        ));
    }

    #[test]
    fn correlation_estimates() {
        let k = real(2, &[0.3, 0.0, 0.0, 0.6]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = [Configuration::new(vec![0, 1]).unwrap()];
        let est = empirical_correlations(&k, &mut rng, 100_000, &pts).unwrap();
        assert!((est[0].estimate - 0.18).abs() < 3.0 * est[0].std_error);
    }
}
