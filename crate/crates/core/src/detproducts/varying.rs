//! Determinantal structure for measures where the number of particles grows
//! by one per level: level `n` carries `n` points in each of its `c(n) + 1`
//! time slices.
//!
//! Only the order of the time moments matters, so slices are identified by
//! `(level, slice)` pairs. In chronological order the slices run
//! `(N, 0), ..., (N, c(N)), (N-1, 0), ..., (1, c(1))`.

use num_complex::Complex64;

use crate::error::{DppError, Result};
use crate::linalg::{self, CMatrix};
use crate::oracle::combinations;
use crate::process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};

/// A time slice `(level, slice)`; `level` is 1-based, `slice` runs over
/// `0..=c(level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slice {
    pub level: usize,
    pub slice: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaryingSpec {
    sizes: Vec<usize>,
    phi_virt: Vec<Vec<Complex64>>,
    phi: Vec<CMatrix>,
    psi: CMatrix,
    evolutions: Vec<Vec<CMatrix>>,
}

impl VaryingSpec {
    /// * `sizes[n-1] = |X_n|`
    /// * `phi_virt[n-1]` is the one-point function `φ_n(virt, ·)` on `X_n`
    /// * `phi[n-2]` is `φ_n` on `X_{n-1} × X_n`, for `n = 2..=N`
    /// * `psi` is `N × |X_N|`, one row per `Ψ_j`
    /// * `evolutions[n-1][a-1]` is `T_{t^n_a, t^n_{a-1}}` on `X_n × X_n`;
    ///   its length is `c(n)`
    pub fn new(
        sizes: Vec<usize>,
        phi_virt: Vec<Vec<Complex64>>,
        phi: Vec<CMatrix>,
        psi: CMatrix,
        evolutions: Vec<Vec<CMatrix>>,
    ) -> Result<Self> {
        let big_n = sizes.len();
        let bad = |msg: String| Err(DppError::DimensionMismatch(msg));
        if big_n == 0 {
            return Err(DppError::InvalidInput("need at least one level".into()));
        }
        for (n, &d) in sizes.iter().enumerate() {
            if d < n + 1 {
                return Err(DppError::InvalidInput(format!(
                    "level {} needs at least {} points, has {d}",
                    n + 1,
                    n + 1
                )));
            }
        }
        if phi_virt.len() != big_n || phi_virt.iter().zip(&sizes).any(|(v, &d)| v.len() != d) {
            return bad("phi_virt must give one vector of length |X_n| per level".into());
        }
        if phi.len() != big_n - 1 {
            return bad(format!("need {} two-point functions", big_n - 1));
        }
        for (k, m) in phi.iter().enumerate() {
            if m.nrows() != sizes[k] || m.ncols() != sizes[k + 1] {
                return bad(format!(
                    "phi_{} must be {}x{}",
                    k + 2,
                    sizes[k],
                    sizes[k + 1]
                ));
            }
        }
        if psi.nrows() != big_n || psi.ncols() != sizes[big_n - 1] {
            return bad(format!("Psi must be {big_n}x{}", sizes[big_n - 1]));
        }
        if evolutions.len() != big_n {
            return bad("need one evolution list per level".into());
        }
        for (n, list) in evolutions.iter().enumerate() {
            if list
                .iter()
                .any(|t| t.nrows() != sizes[n] || t.ncols() != sizes[n])
            {
                return bad(format!(
                    "evolutions at level {} must be square of size {}",
                    n + 1,
                    sizes[n]
                ));
            }
        }
        Ok(VaryingSpec {
            sizes,
            phi_virt,
            phi,
            psi,
            evolutions,
        })
    }

    pub fn levels(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn phi_virt(&self) -> &[Vec<Complex64>] {
        &self.phi_virt
    }

    pub fn phi(&self) -> &[CMatrix] {
        &self.phi
    }

    pub fn psi(&self) -> &CMatrix {
        &self.psi
    }

    pub fn evolutions(&self) -> &[Vec<CMatrix>] {
        &self.evolutions
    }

    /// `c(n)`.
    pub fn count(&self, level: usize) -> usize {
        self.evolutions[level - 1].len()
    }

    /// Slices in ground-set order: levels ascending, slices ascending.
    pub fn slices(&self) -> Vec<Slice> {
        (1..=self.levels())
            .flat_map(|level| (0..=self.count(level)).map(move |slice| Slice { level, slice }))
            .collect()
    }

    fn size_of(&self, s: Slice) -> usize {
        self.sizes[s.level - 1]
    }

    /// Chronological rank of a slice.
    fn rank(&self, s: Slice) -> usize {
        (s.level + 1..=self.levels())
            .map(|m| self.count(m) + 1)
            .sum::<usize>()
            + s.slice
    }

    pub fn ground_set(&self) -> Result<GroundSet> {
        GroundSet::new(self.slices().into_iter().flat_map(|s| {
            (0..self.size_of(s)).map(move |i| format!("{}.{}:{i}", s.level, s.slice))
        }))
    }

    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.slices()
            .into_iter()
            .map(|s| {
                let o = acc;
                acc += self.size_of(s);
                o
            })
            .collect()
    }

    /// `T_{t^n_hi, t^n_lo}`, the identity when `hi == lo`.
    fn evolve(&self, level: usize, hi: usize, lo: usize) -> CMatrix {
        let d = self.sizes[level - 1];
        let mut m = CMatrix::identity(d, d);
        for a in (lo + 1..=hi).rev() {
            m *= &self.evolutions[level - 1][a - 1];
        }
        m
    }

    /// Convolution of every transition from slice `from` back to the earlier
    /// slice `to`, a `|X_from| × |X_to|` matrix. `None` if `to` is later than
    /// `from`; the identity if they coincide.
    fn propagator(&self, from: Slice, to: Slice) -> Option<CMatrix> {
        if self.rank(from) < self.rank(to) {
            return None;
        }
        if from.level == to.level {
            return Some(self.evolve(from.level, from.slice, to.slice));
        }
        let mut m = self.evolve(from.level, from.slice, 0);
        for n in from.level + 1..to.level {
            m = m * &self.phi[n - 2] * self.evolve(n, self.count(n), 0);
        }
        m = m * &self.phi[to.level - 2] * self.evolve(to.level, self.count(to.level), to.slice);
        Some(m)
    }

    /// `G_kl = (φ_k * T^k * φ_{k+1} * ... * φ_N * T^N * Ψ_l)(virt)`.
    pub fn gram(&self) -> CMatrix {
        let big_n = self.levels();
        let bottom = Slice {
            level: big_n,
            slice: 0,
        };
        CMatrix::from_fn(big_n, big_n, |k, l| {
            let top = Slice {
                level: k + 1,
                slice: self.count(k + 1),
            };
            let prop = self
                .propagator(top, bottom)
                .expect("top is later than bottom");
            let row = CMatrix::from_row_slice(1, self.sizes[k], &self.phi_virt[k]);
            (row * prop * self.psi.row(l).transpose())[(0, 0)]
        })
    }

    /// Weights of every configuration with `n` points in each slice of
    /// level `n`.
    pub fn explicit_process(&self) -> Result<ExplicitProcess> {
        let slices = self.slices();
        let subsets: Vec<Vec<Vec<usize>>> = slices
            .iter()
            .map(|s| {
                let pts: Vec<usize> = (0..self.size_of(*s)).collect();
                let mut out = Vec::new();
                combinations(&pts, s.level, 0, &mut Vec::new(), &mut |c: &[usize]| {
                    out.push(c.to_vec())
                });
                out
            })
            .collect();
        let offsets = self.offsets();
        let position = |s: Slice| slices.iter().position(|t| *t == s).expect("slice exists");
        let mut weights = Vec::new();
        let mut choice = vec![0usize; slices.len()];
        loop {
            let pick = |s: Slice| &subsets[position(s)][choice[position(s)]];
            let w = self.weight(&pick);
            if w != linalg::ZERO {
                let idx = slices
                    .iter()
                    .enumerate()
                    .flat_map(|(k, _)| {
                        let o = offsets[k];
                        subsets[k][choice[k]].iter().map(move |&i| o + i)
                    })
                    .collect();
                weights.push((Configuration::new(idx).expect("distinct"), w));
            }
            // odometer
            let mut k = slices.len();
            loop {
                if k == 0 {
                    return ExplicitProcess::new(self.ground_set()?, weights);
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < subsets[k].len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }

    fn weight<'a>(&self, pick: &dyn Fn(Slice) -> &'a Vec<usize>) -> Complex64 {
        let big_n = self.levels();
        let mut w = linalg::ONE;
        for n in 1..=big_n {
            let top = pick(Slice {
                level: n,
                slice: self.count(n),
            });
            // Rows: points of level n-1 at slice 0, then the virtual variable.
            let m = CMatrix::from_fn(n, n, |k, l| {
                if k + 1 == n {
                    self.phi_virt[n - 1][top[l]]
                } else {
                    let below = pick(Slice {
                        level: n - 1,
                        slice: 0,
                    });
                    self.phi[n - 2][(below[k], top[l])]
                }
            });
            w *= linalg::det(&m);
            for a in 1..=self.count(n) {
                let later = pick(Slice { level: n, slice: a });
                let earlier = pick(Slice {
                    level: n,
                    slice: a - 1,
                });
                w *= linalg::det(&linalg::submatrix(
                    &self.evolutions[n - 1][a - 1],
                    later,
                    earlier,
                ));
            }
        }
        let bottom = pick(Slice {
            level: big_n,
            slice: 0,
        });
        let rows: Vec<usize> = (0..big_n).collect();
        w * linalg::det(&linalg::submatrix(&self.psi, &rows, bottom))
    }
}

/// `K(s1, x1; s2, x2) = -φ^{(s2, s1)}(x2, x1)
///   + Σ_{i ≤ n1} Σ_{j ≤ N} [G^{-t}]_ij (φ_i * φ^{(t^i_{c(i)}, s1)})(virt, x1) Ψ^{s2}_j(x2)`.
///
/// The subtracted term vanishes unless `s2` is strictly later than `s1`;
/// inside the convolutions a propagator between coinciding slices is the
/// identity.
pub fn varying_kernel(spec: &VaryingSpec) -> Result<KernelMatrix> {
    let big_n = spec.levels();
    let g_inv =
        linalg::inverse_checked(&spec.gram()).map_err(|rcond| DppError::SingularGram { rcond })?;
    let g_inv_t = g_inv.transpose();
    let slices = spec.slices();
    let offsets = spec.offsets();
    let bottom = Slice {
        level: big_n,
        slice: 0,
    };

    // psi_at[s] is |X_s| × N: Ψ^{s}_j(x).
    let psi_at: Vec<CMatrix> = slices
        .iter()
        .map(|&s| spec.propagator(s, bottom).expect("bottom is earliest") * spec.psi.transpose())
        .collect();
    // left[s] is n1 × |X_s|: (φ_i * φ^{(t^i_{c(i)}, s)})(virt, x).
    let left: Vec<CMatrix> = slices
        .iter()
        .map(|&s| {
            let d = spec.size_of(s);
            let mut m = CMatrix::zeros(s.level, d);
            for i in 1..=s.level {
                let top = Slice {
                    level: i,
                    slice: spec.count(i),
                };
                let prop = spec.propagator(top, s).expect("level i <= level of s");
                let row =
                    CMatrix::from_row_slice(1, spec.sizes[i - 1], &spec.phi_virt[i - 1]) * prop;
                m.row_mut(i - 1).copy_from(&row.row(0));
            }
            m
        })
        .collect();

    let total: usize = slices.iter().map(|&s| spec.size_of(s)).sum();
    let mut k = CMatrix::zeros(total, total);
    for (a, &s1) in slices.iter().enumerate() {
        let n1 = s1.level;
        let g_block = g_inv_t.rows(0, n1).into_owned();
        for (b, &s2) in slices.iter().enumerate() {
            let mut block = left[a].transpose() * &g_block * psi_at[b].transpose();
            if spec.rank(s2) > spec.rank(s1) {
                let prop = spec.propagator(s2, s1).expect("s2 is later");
                block -= prop.transpose();
            }
            k.view_mut(
                (offsets[a], offsets[b]),
                (spec.size_of(s1), spec.size_of(s2)),
            )
            .copy_from(&block);
        }
    }
    KernelMatrix::new(spec.ground_set()?, k)
}
