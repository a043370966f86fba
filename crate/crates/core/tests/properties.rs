mod common;

use common::*;
use detpp_core::detproducts::{bi_kernel, BiorthogonalSpec};
use detpp_core::dimer::{
    dimer_kernel, enumerate_matchings, flip_vertex, is_kasteleyn, kasteleyn_weighting,
    PlanarBipartiteGraph,
};
use detpp_core::lensemble::{conditional_k, k_to_l, l_process, l_to_k, ConditionalSplit};
use detpp_core::linalg::{self, max_abs_diff, ONE};
use detpp_core::markov::{markov_kernel, trajectory_process};
use detpp_core::observables::{
    counting_distribution, gap_probability, janossy, multi_window_counting,
    multiplicative_expectation, Window,
};
use detpp_core::onedep::{
    blocks_from_process, check_one_dependent, exclusion_process, onedep_kernel,
};
use detpp_core::oracle::{kernel_correlation, verify_determinantal};
use detpp_core::sampler::sample;
use detpp_core::ust::{enumerate_spanning_trees, projection_defects, transfer_current};
use detpp_core::{CMatrix, Complex64, Configuration, GroundSet, KernelMatrix};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn subsets(n: usize) -> impl Iterator<Item = Configuration> {
    (0..1u64 << n).map(Configuration::from_mask)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn minors_follow_relabelling(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let k = hermitian_kernel(n, &mut r);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rand::Rng::random_range(&mut r, 0..=i));
        }
        // kp(i, j) = k(perm[i], perm[j])
        let kp = KernelMatrix::from_matrix(CMatrix::from_fn(n, n, |i, j| k.get(perm[i], perm[j]))).unwrap();
        for pts in subsets(n) {
            let image = Configuration::new(pts.indices().iter().map(|&i| perm[i]).collect()).unwrap();
            let a = kernel_correlation(&kp, &pts).unwrap();
            let b = kernel_correlation(&k, &image).unwrap();
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gauge_leaves_correlations(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng(seed);
        let k = hermitian_kernel(n, &mut r);
        let d: Vec<Complex64> = (0..n)
            .map(|_| Complex64::from_polar(rand::Rng::random_range(&mut r, 0.2..5.0), rand::Rng::random_range(&mut r, 0.0..std::f64::consts::TAU)))
            .collect();
        let g = k.conjugate_diagonal(&d).unwrap();
        for pts in subsets(n) {
            let a = kernel_correlation(&k, &pts).unwrap();
            let b = kernel_correlation(&g, &pts).unwrap();
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn l_ensembles(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng(seed);
        let l = psd_l(n, &mut r);
        let k = l_to_k(&l).unwrap();
        let process = l_process(&l).unwrap();
        prop_assert!(verify_determinantal(&process, &k, n.min(4), TOL).unwrap().passed());

        let back = k_to_l(&k).unwrap();
        prop_assert!(max_abs_diff(back.matrix(), l.matrix()) < 1e-9);

        let all = ConditionalSplit::new((0..n).collect(), n).unwrap();
        let cond = conditional_k(&l, &all).unwrap();
        prop_assert!(max_abs_diff(cond.matrix(), k.matrix()) < 1e-12);

        let id = CMatrix::identity(n, n);
        let z = linalg::det(&(id + l.matrix()));
        prop_assert!((process.partition_function() - z).norm() < 1e-9 * z.norm());
    }

    #[test]
    fn observables_are_consistent(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let k = hermitian_kernel(n, &mut r);
        let w = Window::full(n);
        let dist = counting_distribution(&k, &w);
        let total: Complex64 = dist.iter().sum();
        prop_assert!((total - ONE).norm() < 1e-10);
        prop_assert!((gap_probability(&k, &w) - dist[0]).norm() < 1e-12);
        prop_assert!(dist.iter().all(|p| p.re > -1e-12 && p.im.abs() < 1e-10));

        prop_assert_eq!(multiplicative_expectation(&k, &vec![ONE; n]).unwrap(), ONE);

        let jan: Complex64 = subsets(n).map(|pts| janossy(&k, &w, &pts).unwrap()).sum();
        prop_assert!((jan - ONE).norm() < 1e-10);

        let split = n / 2;
        let windows = [
            Window::new((0..split).collect(), n).unwrap(),
            Window::new((split..n).collect(), n).unwrap(),
        ];
        let joint = multi_window_counting(&k, &windows).unwrap();
        prop_assert!((joint.total() - ONE).norm() < 1e-10);
        for (m, d) in dist.iter().enumerate() {
            let marginal: Complex64 = (m.saturating_sub(n - split)..=m.min(split)).map(|a| joint.get(&[a, m - a])).sum();
            prop_assert!((marginal - d).norm() < 1e-10);
        }
    }

    #[test]
    fn markov_chains(seed in any::<u64>(), n in 1usize..8) {
        let spec = loop_free_chain(n, &mut rng(seed));
        let k = markov_kernel(&spec).unwrap();
        let process = trajectory_process(&spec).unwrap();
        prop_assert!(verify_determinantal(&process, &k, n.min(4), 1e-10).unwrap().passed());
    }

    #[test]
    fn exclusion_processes(p in proptest::collection::vec(0.05f64..0.95, 2..9)) {
        let process = exclusion_process(&p).unwrap();
        prop_assert!(check_one_dependent(&process, 1e-12).unwrap());
        let blocks = blocks_from_process(&process, 0).unwrap();
        let k = onedep_kernel(&blocks).unwrap();
        let n = k.len();
        prop_assert!(verify_determinantal(&process, &k, n.min(4), 1e-10).unwrap().passed());
        for x in 0..n {
            for y in 0..x {
                let want = if x == y + 1 { -ONE } else { linalg::ZERO };
                prop_assert_eq!(k.get(x, y), want);
            }
        }
    }

    #[test]
    fn spanning_trees(seed in any::<u64>(), n in 2usize..7, extra in 0usize..5) {
        let mut r = rng(seed);
        let g = connected_graph(n, extra, &mut r);
        let k = transfer_current(&g).unwrap();
        let (sq, sym, trace) = projection_defects(&k);
        prop_assert!(sq < 1e-10 && sym < 1e-10);
        prop_assert!((trace - (n - 1) as f64).abs() < 1e-10);
        let process = enumerate_spanning_trees(&g).unwrap();
        prop_assert!(verify_determinantal(&process, &k, 3, 1e-10).unwrap().passed());

        let f = rand::Rng::random_range(&mut r, 0..g.edges().len());
        let kf = transfer_current(&g.flip(f)).unwrap();
        for e in 0..k.len() {
            for h in 0..k.len() {
                let s = if (e == f) != (h == f) { -1.0 } else { 1.0 };
                prop_assert!((kf.get(e, h) - k.get(e, h) * s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kasteleyn_gauge(seed in any::<u64>(), rows in 1usize..4, cols in 2usize..5) {
        prop_assume!(rows * cols % 2 == 0);
        let g = PlanarBipartiteGraph::grid(rows, cols).unwrap();
        let mut signs = kasteleyn_weighting(&g).unwrap();
        let process = enumerate_matchings(&g).unwrap();
        let mut r = rng(seed);
        for _ in 0..3 {
            let black = rand::Rng::random_bool(&mut r, 0.5);
            let count = if black { g.black() } else { g.white() };
            let v = rand::Rng::random_range(&mut r, 0..count);
            signs = flip_vertex(&g, &signs, black, v);
            prop_assert!(is_kasteleyn(&g, &signs));
        }
        let k = dimer_kernel(&g, &signs).unwrap();
        prop_assert!(verify_determinantal(&process, &k, 3, 1e-10).unwrap().passed());
    }

    #[test]
    fn biorthogonal_ensembles(seed in any::<u64>(), n in 2usize..7, particles in 1usize..3) {
        prop_assume!(particles < n);
        let mut r = rng(seed);
        let phi = random_matrix(particles, n, &mut r);
        let psi = random_matrix(particles, n, &mut r);
        let spec = BiorthogonalSpec::new(GroundSet::counting(n).unwrap(), phi, psi).unwrap();
        let Ok(k) = bi_kernel(&spec) else { return Ok(()) };
        let process = spec.explicit_process().unwrap();
        let scale = process.weights().values().map(|w| w.norm()).sum::<f64>() / process.partition_function().norm();
        prop_assume!(scale < 1e3);
        prop_assert!(verify_determinantal(&process, &k, n.min(4), 1e-9 * scale).unwrap().passed());
        prop_assert!((k.matrix().trace() - Complex64::new(particles as f64, 0.0)).norm() < 1e-9 * scale);
    }

    #[test]
    fn sampler_accepts_valid_kernels(seed in any::<u64>(), n in 1usize..10) {
        let mut r = rng(seed);
        let k = hermitian_kernel(n, &mut r);
        for _ in 0..20 {
            prop_assert!(sample(&k, &mut r).is_ok());
        }
    }
}
