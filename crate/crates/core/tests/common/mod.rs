#![allow(dead_code)]

use detpp_core::lensemble::LMatrix;
use detpp_core::markov::MarkovChainSpec;
use detpp_core::ust::OrientedGraph;
use detpp_core::{CMatrix, Complex64, GroundSet, KernelMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cplx<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng>(n: usize, m: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, m, |_, _| cplx(rng))
}

/// Unitary factor of a random complex matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    random_matrix(n, n, rng).qr().q()
}

/// `U diag(λ) U*` with eigenvalues drawn from `[lo, hi]`.
pub fn hermitian_with_spectrum<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> CMatrix {
    let u = random_unitary(n, rng);
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        Complex64::new(rng.random_range(lo..hi), 0.0)
    }));
    let m = &u * d * u.adjoint();
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Hermitian kernel with spectrum inside `(0, 1)`.
pub fn hermitian_kernel<R: Rng>(n: usize, rng: &mut R) -> KernelMatrix {
    KernelMatrix::from_matrix(hermitian_with_spectrum(n, 0.02, 0.98, rng)).unwrap()
}

pub fn psd_l<R: Rng>(n: usize, rng: &mut R) -> LMatrix {
    LMatrix::from_matrix(hermitian_with_spectrum(n, 0.0, 3.0, rng)).unwrap()
}

/// Chain on `0..n` whose moves only increase the state, with killing.
pub fn loop_free_chain<R: Rng>(n: usize, rng: &mut R) -> MarkovChainSpec {
    let mut p = DMatrix::zeros(n, n);
    for x in 0..n {
        let mass: f64 = rng.random_range(0.0..1.0);
        let raw: Vec<f64> = (x + 1..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (y, w) in (x + 1..n).zip(raw) {
            p[(x, y)] = mass * w / total;
        }
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let pi = raw.into_iter().map(|w| w / total).collect();
    MarkovChainSpec::new(GroundSet::counting(n).unwrap(), p, pi).unwrap()
}

/// A random spanning path plus `extra` chords, randomly oriented.
pub fn connected_graph<R: Rng>(n: usize, extra: usize, rng: &mut R) -> OrientedGraph {
    let mut edges = Vec::new();
    let orient =
        |a: usize, b: usize, rng: &mut R| if rng.random_bool(0.5) { (a, b) } else { (b, a) };
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push(orient(u, v, rng));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.push(orient(a, b, rng));
        }
    }
    OrientedGraph::new(n, edges).unwrap()
}
