//! Trajectories of loop-free Markov chains, viewed as random subsets of the
//! state space.
//!
//! Finite loop-free chains cannot have stochastic rows, so transition rows
//! may sum to less than one; the deficit is the probability of being killed
//! (moving to an implicit cemetery state that is not part of the ground set).

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix};
use crate::process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};

const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChainSpec {
    ground_set: GroundSet,
    transitions: DMatrix<f64>,
    initial: Vec<f64>,
}

impl MarkovChainSpec {
    pub fn new(
        ground_set: GroundSet,
        transitions: DMatrix<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let n = ground_set.len();
        if transitions.nrows() != n || transitions.ncols() != n || initial.len() != n {
            return Err(DppError::DimensionMismatch(format!(
                "{n} states but P is {}x{} and pi has {} entries",
                transitions.nrows(),
                transitions.ncols(),
                initial.len()
            )));
        }
        if transitions
            .iter()
            .chain(&initial)
            .any(|&p| !(p >= 0.0 && p.is_finite()))
        {
            return Err(DppError::InvalidInput(
                "probabilities must be nonnegative".into(),
            ));
        }
        for (x, row) in transitions.row_iter().enumerate() {
            if row.sum() > 1.0 + PROB_TOL {
                return Err(DppError::InvalidInput(format!("row {x} of P sums above 1")));
            }
        }
        if (initial.iter().sum::<f64>() - 1.0).abs() > PROB_TOL {
            return Err(DppError::InvalidInput(
                "initial distribution must sum to 1".into(),
            ));
        }
        if !check_loop_free(&transitions) {
            return Err(DppError::NotLoopFree);
        }
        Ok(MarkovChainSpec {
            ground_set,
            transitions,
            initial,
        })
    }

    pub fn ground_set(&self) -> &GroundSet {
        &self.ground_set
    }

    pub fn transitions(&self) -> &DMatrix<f64> {
        &self.transitions
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }
}

/// True iff no trajectory can return to its starting state, i.e.
/// `(P^k)_{xx} = 0` for `k = 1..=n`. Longer returns would revisit some
/// state within `n` steps, so checking up to `n` suffices.
pub fn check_loop_free(p: &DMatrix<f64>) -> bool {
    let n = p.nrows();
    // Work on the support pattern so tiny probabilities cannot vanish.
    let support = p.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let mut power = support.clone();
    for _ in 0..n {
        if power.diagonal().iter().any(|&d| d > 0.0) {
            return false;
        }
        power = (&power * &support).map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    }
    true
}

/// `Q = P + P^2 + ...`, which terminates after `n - 1` terms on a loop-free
/// chain. `Q_{xy}` is the probability that a trajectory started at `x`
/// passes through `y`.
pub fn accumulate_q(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !check_loop_free(p) {
        return Err(DppError::NotLoopFree);
    }
    let n = p.nrows();
    let mut q = DMatrix::zeros(n, n);
    let mut power = p.clone();
    for _ in 1..n.max(2) {
        q += &power;
        power = &power * p;
    }
    Ok(q)
}

/// `K(x, y) = π_x + (πQ)_x - Q_{yx}`.
pub fn markov_kernel(spec: &MarkovChainSpec) -> Result<KernelMatrix> {
    let q = accumulate_q(&spec.transitions)?;
    let n = q.nrows();
    let pi = &spec.initial;
    let visit: Vec<f64> = (0..n)
        .map(|x| pi[x] + (0..n).map(|z| pi[z] * q[(z, x)]).sum::<f64>())
        .collect();
    let k = CMatrix::from_fn(n, n, |x, y| linalg::c(visit[x] - q[(y, x)]));
    KernelMatrix::new(spec.ground_set.clone(), k)
}

/// The law of the set of visited states, by enumerating every trajectory.
pub fn trajectory_process(spec: &MarkovChainSpec) -> Result<ExplicitProcess> {
    let p = &spec.transitions;
    let n = p.nrows();
    if n > crate::oracle::MAX_ENUMERATION_LIMIT {
        return Err(DppError::EnumerationTooLarge {
            size: n,
            limit: crate::oracle::MAX_ENUMERATION_LIMIT,
        });
    }
    let mut acc: HashMap<u64, f64> = HashMap::new();
    for x in 0..n {
        if spec.initial[x] > 0.0 {
            walk(p, x, spec.initial[x], 0, &mut acc);
        }
    }
    let weights = acc
        .into_iter()
        .map(|(mask, w)| (mask_to_conf(mask, n), Complex64::new(w, 0.0)));
    ExplicitProcess::new(spec.ground_set.clone(), weights)
}

fn mask_to_conf(mask: u64, n: usize) -> Configuration {
    Configuration::new((0..n).filter(|i| mask >> i & 1 == 1).collect()).expect("distinct")
}

fn walk(p: &DMatrix<f64>, x: usize, prob: f64, mask: u64, acc: &mut HashMap<u64, f64>) {
    let mask = mask | 1 << x;
    let row_sum: f64 = p.row(x).sum();
    let killed = (1.0 - row_sum).max(0.0);
    if killed > 0.0 {
        *acc.entry(mask).or_insert(0.0) += prob * killed;
    }
    for y in 0..p.ncols() {
        let step = p[(x, y)];
        if step > 0.0 {
            debug_assert!(mask >> y & 1 == 0, "loop-free chain revisited a state");
            walk(p, y, prob * step, mask, acc);
        }
    }
}

/// A topological order of the states (exists because the chain is loop-free).
pub fn topological_order(p: &DMatrix<f64>) -> Result<Vec<usize>> {
    let n = p.nrows();
    let mut indeg = vec![0usize; n];
    for x in 0..n {
        for y in 0..n {
            if p[(x, y)] > 0.0 {
                indeg[y] += 1;
            }
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&x| indeg[x] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(x) = ready.pop() {
        order.push(x);
        for y in 0..n {
            if p[(x, y)] > 0.0 {
                indeg[y] -= 1;
                if indeg[y] == 0 {
                    ready.push(y);
                }
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(DppError::NotLoopFree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{kernel_correlation, verify_determinantal};

    fn spec(p: DMatrix<f64>, pi: Vec<f64>) -> MarkovChainSpec {
        MarkovChainSpec::new(GroundSet::counting(pi.len()).unwrap(), p, pi).unwrap()
    }

    #[test]
    fn loop_detection() {
        let upper = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(check_loop_free(&upper));
        let selfloop = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 0.0]);
        assert!(!check_loop_free(&selfloop));
        let cycle = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(!check_loop_free(&cycle));
        assert_eq!(accumulate_q(&cycle), Err(DppError::NotLoopFree));
    }

    #[test]
    fn q_examples() {
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 0.4, 0.0, 0.0]);
        assert_eq!(accumulate_q(&p).unwrap(), p);
        let chain = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(accumulate_q(&chain).unwrap()[(0, 2)], 1.0);
    }

    #[test]
    fn two_state_kernel_and_trajectories() {
        let p = 0.3;
        let s = spec(
            DMatrix::from_row_slice(2, 2, &[0.0, p, 0.0, 0.0]),
            vec![1.0, 0.0],
        );
        let k = markov_kernel(&s).unwrap();
        let want = [[1.0, 1.0], [0.0, p]];
        for x in 0..2 {
            for y in 0..2 {
                assert!((k.get(x, y) - linalg::c(want[x][y])).norm() < 1e-15);
            }
        }
        let both = Configuration::new(vec![0, 1]).unwrap();
        assert!((kernel_correlation(&k, &both).unwrap().re - p).abs() < 1e-15);

        let proc_ = trajectory_process(&s).unwrap();
        let one = Configuration::new(vec![0]).unwrap();
        assert!((proc_.probability(&one).re - (1.0 - p)).abs() < 1e-15);
        assert!((proc_.probability(&both).re - p).abs() < 1e-15);
    }

    #[test]
    fn deterministic_chain_is_one_configuration() {
        let chain = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let s = spec(chain, vec![1.0, 0.0, 0.0]);
        let proc_ = trajectory_process(&s).unwrap();
        assert_eq!(proc_.weights().len(), 1);
        assert_eq!(proc_.probability(&Configuration::full(3)).re, 1.0);
    }

    #[test]
    fn start_at_absorbing_state() {
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let s = spec(p, vec![0.0, 1.0, 0.0]);
        let k = markov_kernel(&s).unwrap();
        assert_eq!(k.get(1, 1).re, 1.0);
        assert_eq!(k.get(0, 0).re, 0.0);
        assert_eq!(k.get(2, 2).re, 0.0);
    }

    #[test]
    fn layered_four_state_chain_is_determinantal() {
        let p = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.5, 0.3, 0.1, 0.0, 0.0, 0.6, 0.2, 0.0, 0.0, 0.0, 0.7, 0.0, 0.0, 0.0, 0.0,
            ],
        );
        let s = spec(p, vec![0.6, 0.3, 0.1, 0.0]);
        let rep = verify_determinantal(
            &trajectory_process(&s).unwrap(),
            &markov_kernel(&s).unwrap(),
            4,
            1e-12,
        )
        .unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn rejects_bad_specs() {
        let g = GroundSet::counting(2).unwrap();
        let cyc = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(
            MarkovChainSpec::new(g.clone(), cyc, vec![1.0, 0.0]),
            Err(DppError::NotLoopFree)
        );
        let p = DMatrix::zeros(2, 2);
        assert!(MarkovChainSpec::new(g.clone(), p.clone(), vec![0.5, 0.2]).is_err());
        let heavy = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 0.0, 0.0]);
        assert!(MarkovChainSpec::new(g, heavy, vec![1.0, 0.0]).is_err());
    }
}
