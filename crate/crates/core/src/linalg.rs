//! Small dense linear-algebra helpers shared by the kernel constructors.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Reciprocal-condition threshold below which an inversion is refused.
pub const RCOND_THRESHOLD: f64 = 1e-12;

pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Determinant via partial-pivot LU. The empty determinant is 1.
pub fn det(m: &CMatrix) -> Complex64 {
    match m.nrows() {
        0 => ONE,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().lu().determinant(),
    }
}

/// Principal submatrix `m[idx, idx]`.
pub fn principal(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Submatrix with independent row and column index lists.
pub fn submatrix(m: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn norm1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse together with its reciprocal condition number in the 1-norm.
/// Returns `Err(rcond)` when the matrix is singular or worse conditioned
/// than [`RCOND_THRESHOLD`].
pub fn inverse_checked(m: &CMatrix) -> std::result::Result<CMatrix, f64> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let inv = match m.clone().lu().try_inverse() {
        Some(inv) => inv,
        None => return Err(0.0),
    };
    let rcond = 1.0 / (norm1(m) * norm1(&inv));
    if !rcond.is_finite() || rcond < RCOND_THRESHOLD {
        return Err(if rcond.is_finite() { rcond } else { 0.0 });
    }
    Ok(inv)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(c)
}

/// Exact determinant of an integer matrix by fraction-free (Bareiss)
/// elimination.
pub fn bareiss_det(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_determinant_is_one() {
        assert_eq!(det(&CMatrix::zeros(0, 0)), ONE);
        assert_eq!(bareiss_det(vec![]), 1);
    }

    #[test]
    fn bareiss_matches_float_lu() {
        let rows = vec![
            vec![2i128, -1, 0, 3],
            vec![1, 4, -2, 0],
            vec![0, 5, 1, -1],
            vec![3, 0, 2, 2],
        ];
        let m = CMatrix::from_fn(4, 4, |i, j| c(rows[i][j] as f64));
        let exact = bareiss_det(rows);
        assert!((det(&m).re - exact as f64).abs() < 1e-9);
    }

    #[test]
    fn bareiss_handles_zero_pivot() {
        assert_eq!(bareiss_det(vec![vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(bareiss_det(vec![vec![0, 1], vec![0, 2]]), 0);
    }

    #[test]
    fn singular_inverse_is_refused() {
        let m = CMatrix::from_element(2, 2, ONE);
        assert!(inverse_checked(&m).is_err());
        let id = CMatrix::identity(3, 3);
        assert_eq!(inverse_checked(&id).unwrap(), id);
    }
}
