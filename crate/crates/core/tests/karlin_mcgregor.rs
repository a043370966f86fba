use detpp_core::detproducts::{lgv_check, WeightedDag};
use detpp_core::DppError;
use nalgebra::DMatrix;

fn pure_birth(n: usize, p: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |x, y| {
        if y == x {
            1.0 - p
        } else if y == x + 1 {
            p
        } else {
            0.0
        }
    })
}

#[test]
fn pure_birth_walkers_satisfy_the_determinant_identity() {
    let n = 6;
    let steps = 4;
    let dag = WeightedDag::time_expanded(&pure_birth(n, 0.35), steps);
    let at = |t: usize, x: usize| t * n + x;
    for (starts, ends) in [
        (vec![0, 1], vec![2, 3]),
        (vec![0, 2, 3], vec![1, 4, 5]),
        (vec![1], vec![3]),
    ] {
        let sources: Vec<usize> = starts.iter().map(|&x| at(0, x)).collect();
        let sinks: Vec<usize> = ends.iter().map(|&y| at(steps, y)).collect();
        let c = lgv_check(&dag, &sources, &sinks).unwrap();
        assert!(
            (c.enumerated - c.determinant).norm() < 1e-12,
            "{starts:?} -> {ends:?}: {c:?}"
        );
        assert!(c.enumerated.re > 0.0);
    }
}

#[test]
fn walkers_that_can_jump_over_each_other_are_rejected() {
    // Nearest-neighbour steps without holding: walkers at 0 and 1 can swap.
    let n = 4;
    let p = DMatrix::from_fn(n, n, |x, y| if x.abs_diff(y) == 1 { 0.5 } else { 0.0 });
    let dag = WeightedDag::time_expanded(&p, 2);
    let r = lgv_check(&dag, &[0, 1], &[2 * n + 1, 2 * n + 2]);
    assert!(matches!(r, Err(DppError::CompatibilityViolated)), "{r:?}");
}

#[test]
fn lattice_paths_count_by_determinant() {
    let dag = WeightedDag::grid(4, 4);
    let c = lgv_check(&dag, &[0, 1], &[14, 15]).unwrap();
    assert!((c.enumerated - c.determinant).norm() < 1e-9);
}
