//! Uniform access to every kernel mechanism: build the kernel, build the
//! explicit process it should reproduce, and run the structural checks
//! specific to the mechanism.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::detproducts::{
    bi_kernel, em_kernel, nice_case_kernel, ope_spec, varying_kernel, BiorthogonalSpec,
    LayeredSpec, NiceCaseSpec, VaryingSpec,
};
use crate::dimer::{self, PlanarBipartiteGraph};
use crate::error::{DppError, Result};
use crate::io::{build, MechanismSpec};
use crate::lensemble::{self, ConditionalSplit, LMatrix};
use crate::linalg::{self, CMatrix};
use crate::markov::{self, MarkovChainSpec};
use crate::onedep::{self, BlockCorrelations};
use crate::oracle::{max_correlation_gap, DEFAULT_VERIFY_TOL};
use crate::plancherel::{self, HalfInteger};
use crate::process::{ExplicitProcess, KernelMatrix};
use crate::ust::{self, OrientedGraph};

/// Tolerance for identities that hold to rounding error.
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Plancherel correlations are compared against a truncated sum.
pub const PLANCHEREL_TOL: f64 = 1e-7;
/// Point-set size used when comparing two kernels' correlations.
const GAUGE_N_MAX: usize = 3;

/// One named check with its observed deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, deviation: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            deviation,
            tol,
            passed: deviation <= tol,
        }
    }

    /// A yes/no check, recorded as deviation 0 or 1 against tolerance 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            deviation: if ok { 0.0 } else { 1.0 },
            tol: 0.0,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Instance {
    Markov(MarkovChainSpec),
    Bi(BiorthogonalSpec),
    Em(LayeredSpec),
    Nice(NiceCaseSpec),
    Varying(VaryingSpec),
    L {
        l: LMatrix,
        condition: Option<ConditionalSplit>,
    },
    OneDep {
        blocks: BlockCorrelations,
        /// The process the blocks were read from, when one was given.
        process: Option<ExplicitProcess>,
    },
    Dimer(PlanarBipartiteGraph),
    Ust(OrientedGraph),
    Plancherel {
        window: Vec<HalfInteger>,
        theta: f64,
        cutoff: usize,
    },
}

/// Smallest size cutoff whose Poisson tail is below `1e-13`.
fn plancherel_cutoff(theta: f64) -> usize {
    (1..=plancherel::MAX_PARTITION_CUTOFF)
        .find(|&c| plancherel::poisson_tail(theta, c) < 1e-13)
        .unwrap_or(plancherel::MAX_PARTITION_CUTOFF)
}

impl Instance {
    pub fn from_spec(spec: &MechanismSpec) -> Result<Self> {
        Ok(match spec {
            MechanismSpec::Markov { points, pi, p } => {
                Instance::Markov(build::markov(points, pi, p)?)
            }
            MechanismSpec::Bi {
                points,
                mu,
                phi,
                psi,
            } => Instance::Bi(build::bi(points, mu, phi, psi)?),
            MechanismSpec::Ope {
                positions,
                weight,
                particles,
            } => Instance::Bi(ope_spec(positions, weight, *particles)?),
            MechanismSpec::Em {
                layer_sizes,
                phi,
                psi,
                transitions,
            } => Instance::Em(build::em(layer_sizes, phi, psi, transitions)?),
            MechanismSpec::Nice {
                bases,
                constants,
                particles,
            } => Instance::Nice(build::nice(bases, constants, *particles)?),
            MechanismSpec::Varying {
                sizes,
                phi_virt,
                phi,
                psi,
                evolutions,
            } => Instance::Varying(build::varying(sizes, phi_virt, phi, psi, evolutions)?),
            MechanismSpec::L {
                points,
                l,
                condition,
            } => {
                let l = build::l_matrix(points, l)?;
                let condition = condition
                    .as_ref()
                    .map(|y| ConditionalSplit::new(y.clone(), l.len()))
                    .transpose()?;
                Instance::L { l, condition }
            }
            MechanismSpec::Onedep {
                start,
                r,
                process,
                exclusion,
            } => match (r, process, exclusion) {
                (Some(rows), None, None) => {
                    let m = rows
                        .iter()
                        .map(|row| row.iter().map(|z| z.0).collect())
                        .collect::<Vec<Vec<_>>>();
                    Instance::OneDep {
                        blocks: BlockCorrelations::from_rows(*start, &m)?,
                        process: None,
                    }
                }
                (None, Some(doc), None) => {
                    let p = doc.to_process()?;
                    Instance::OneDep {
                        blocks: onedep::blocks_from_process(&p, *start)?,
                        process: Some(p),
                    }
                }
                (None, None, Some(probs)) => {
                    let p = onedep::exclusion_process(probs)?;
                    Instance::OneDep {
                        blocks: onedep::blocks_from_process(&p, *start)?,
                        process: Some(p),
                    }
                }
                _ => {
                    return Err(DppError::InvalidInput(
                        "give exactly one of R, process, exclusion".into(),
                    ))
                }
            },
            MechanismSpec::Dimer {
                graph,
                grid,
                brick_wall,
            } => Instance::Dimer(build::dimer(graph, *grid, *brick_wall)?),
            MechanismSpec::Ust {
                graph,
                complete,
                grid,
                cycle,
            } => Instance::Ust(build::ust(graph, *complete, *grid, *cycle)?),
            MechanismSpec::Plancherel {
                theta,
                window,
                cutoff,
            } => {
                if !(theta.is_finite() && *theta > 0.0) {
                    return Err(DppError::InvalidInput("theta must be positive".into()));
                }
                let a = HalfInteger::parse(&window.0)?;
                let b = HalfInteger::parse(&window.1)?;
                if a > b {
                    return Err(DppError::InvalidInput("window is empty".into()));
                }
                Instance::Plancherel {
                    window: HalfInteger::range(a, b),
                    theta: *theta,
                    cutoff: cutoff.unwrap_or_else(|| plancherel_cutoff(*theta)),
                }
            }
        })
    }

    pub fn mechanism(&self) -> &'static str {
        match self {
            Instance::Markov(_) => "markov",
            Instance::Bi(_) => "bi",
            Instance::Em(_) => "em",
            Instance::Nice(_) => "nice",
            Instance::Varying(_) => "varying",
            Instance::L { .. } => "l",
            Instance::OneDep { .. } => "onedep",
            Instance::Dimer(_) => "dimer",
            Instance::Ust(_) => "ust",
            Instance::Plancherel { .. } => "plancherel",
        }
    }

    pub fn default_tol(&self) -> f64 {
        match self {
            Instance::Plancherel { .. } => PLANCHEREL_TOL,
            _ => DEFAULT_VERIFY_TOL,
        }
    }

    pub fn kernel(&self) -> Result<KernelMatrix> {
        match self {
            Instance::Markov(s) => markov::markov_kernel(s),
            Instance::Bi(s) => bi_kernel(s),
            Instance::Em(s) => em_kernel(s),
            Instance::Nice(s) => nice_case_kernel(s),
            Instance::Varying(s) => varying_kernel(s),
            Instance::L { l, condition: None } => lensemble::l_to_k(l),
            Instance::L {
                l,
                condition: Some(y),
            } => lensemble::conditional_k(l, y),
            Instance::OneDep { blocks, .. } => onedep::onedep_kernel(blocks),
            Instance::Dimer(g) => dimer::dimer_kernel(g, &dimer::kasteleyn_weighting(g)?),
            Instance::Ust(g) => ust::transfer_current(g),
            Instance::Plancherel { window, theta, .. } => {
                plancherel::discrete_bessel_matrix(window, *theta)
            }
        }
    }

    /// The explicit measure the kernel must reproduce.
    pub fn oracle(&self) -> Result<ExplicitProcess> {
        match self {
            Instance::Markov(s) => markov::trajectory_process(s),
            Instance::Bi(s) => s.explicit_process(),
            Instance::Em(s) => s.explicit_process(),
            Instance::Nice(s) => s.to_layered()?.explicit_process(),
            Instance::Varying(s) => s.explicit_process(),
            Instance::L { l, condition: None } => lensemble::l_process(l),
            Instance::L {
                l,
                condition: Some(y),
            } => lensemble::conditional_process(l, y),
            Instance::OneDep {
                process: Some(p), ..
            } => Ok(p.clone()),
            Instance::OneDep {
                blocks,
                process: None,
            } => onedep::process_from_blocks(blocks),
            Instance::Dimer(g) => dimer::enumerate_matchings(g),
            Instance::Ust(g) => ust::enumerate_spanning_trees(g),
            Instance::Plancherel {
                window,
                theta,
                cutoff,
            } => plancherel::window_process(window, *theta, *cutoff),
        }
    }

    /// Mechanism-specific identities, evaluated on the kernel `k` returned by
    /// [`Instance::kernel`].
    pub fn structural_checks(&self, k: &KernelMatrix) -> Result<Vec<Check>> {
        let mut out = Vec::new();
        match self {
            Instance::Markov(s) => {
                out.push(Check::within(
                    "kernel minus rank one is nilpotent",
                    markov_nilpotent_defect(s, k)?,
                    STRUCTURAL_TOL,
                ));
            }
            Instance::Bi(s) => {
                let mu = s.ground_set().mu();
                let n = s.particles() as f64;
                let trace: f64 = (0..k.len()).map(|i| k.get(i, i).re * mu[i]).sum();
                out.push(Check::within(
                    "expected size equals N",
                    (trace - n).abs(),
                    1e-10,
                ));
                let scaled = CMatrix::from_fn(k.len(), k.len(), |i, j| k.get(i, j) * mu[j]);
                let no_l = matches!(
                    lensemble::k_to_l(&KernelMatrix::from_matrix(scaled)?),
                    Err(DppError::SingularOneMinusK { .. })
                );
                out.push(Check::holds(
                    "fixed particle number has no L-ensemble",
                    no_l,
                ));
            }
            Instance::Em(s) => {
                out.push(layer_traces(
                    k,
                    &s.offsets(),
                    s.layer_sizes(),
                    s.particles(),
                ));
            }
            Instance::Nice(s) => {
                let layered = s.to_layered()?;
                let general = em_kernel(&layered)?;
                out.push(Check::within(
                    "factorized kernel equals general kernel",
                    linalg::max_abs_diff(k.matrix(), general.matrix()),
                    1e-10,
                ));
                out.push(layer_traces(
                    k,
                    &layered.offsets(),
                    layered.layer_sizes(),
                    layered.particles(),
                ));
            }
            Instance::Varying(_) => {
                out.push(Check::within(
                    "slice traces equal level",
                    varying_trace_defect(k)?,
                    1e-10,
                ));
            }
            Instance::L { l, condition } => {
                let plain = lensemble::l_to_k(l)?;
                let back = lensemble::k_to_l(&plain)?;
                out.push(Check::within(
                    "L to K to L round trip",
                    linalg::max_abs_diff(back.matrix(), l.matrix()),
                    STRUCTURAL_TOL,
                ));
                let full = ConditionalSplit::new((0..l.len()).collect(), l.len())?;
                let cond_full = lensemble::conditional_k(l, &full)?;
                out.push(Check::within(
                    "conditioning on the whole set is the plain kernel",
                    linalg::max_abs_diff(cond_full.matrix(), plain.matrix()),
                    STRUCTURAL_TOL,
                ));
                if condition.is_none() && l.len() <= 12 {
                    let z = lensemble::l_process(l)?.partition_function();
                    let id = CMatrix::identity(l.len(), l.len());
                    let d = linalg::det(&(id + l.matrix()));
                    out.push(Check::within(
                        "sum of principal minors equals det(1 + L)",
                        (z - d).norm() / d.norm().max(1.0),
                        STRUCTURAL_TOL,
                    ));
                }
            }
            Instance::OneDep { process, .. } => {
                let n = k.len();
                let exact = (0..n).all(|x| {
                    (0..x).all(|y| {
                        let v = k.get(x, y);
                        if x - y == 1 {
                            v == -linalg::ONE
                        } else {
                            v == linalg::ZERO
                        }
                    })
                });
                out.push(Check::holds("exact 0 and -1 below the diagonal", exact));
                if let Some(p) = process {
                    out.push(Check::holds(
                        "process is one-dependent",
                        onedep::check_one_dependent(p, 1e-10)?,
                    ));
                }
            }
            Instance::Dimer(g) => {
                let signs = dimer::kasteleyn_weighting(g)?;
                out.push(Check::holds(
                    "weighting satisfies the face rule",
                    dimer::is_kasteleyn(g, &signs),
                ));
                let count = dimer::count_dimer_covers(g)?;
                let enumerated = dimer::enumerate_matchings(g)?.weights().len() as u128;
                out.push(Check::holds(
                    format!("|det| = {count} equals enumeration {enumerated}"),
                    count == enumerated,
                ));
                let total: f64 = (0..k.len()).map(|i| k.get(i, i).re).sum();
                out.push(Check::within(
                    "edge probabilities sum to |B|",
                    (total - g.black() as f64).abs(),
                    1e-10,
                ));
                let flipped = dimer::flip_vertex(g, &signs, true, 0);
                let k2 = dimer::dimer_kernel(g, &flipped)?;
                out.push(Check::within(
                    "gauge flip leaves correlations unchanged",
                    max_correlation_gap(k, &k2, GAUGE_N_MAX)?,
                    1e-10,
                ));
            }
            Instance::Ust(g) => {
                let (sq, sym, trace) = ust::projection_defects(k);
                out.push(Check::within("K^2 = K", sq, STRUCTURAL_TOL));
                out.push(Check::within("K^T = K", sym, STRUCTURAL_TOL));
                out.push(Check::within(
                    "trace equals |V| - 1",
                    (trace - (g.vertices() as f64 - 1.0)).abs(),
                    STRUCTURAL_TOL,
                ));
                let count = ust::count_spanning_trees(g)?;
                let enumerated = ust::enumerate_spanning_trees(g)?.weights().len() as u128;
                out.push(Check::holds(
                    format!("matrix-tree count {count} equals enumeration {enumerated}"),
                    count == enumerated,
                ));
                let mut walk = 0.0f64;
                for e in 0..k.len() {
                    for f in 0..k.len() {
                        walk =
                            walk.max((ust::random_walk_current(g, e, f)? - k.get(e, f).re).abs());
                    }
                }
                out.push(Check::within("random-walk currents agree", walk, 1e-10));
                let k2 = ust::transfer_current(&g.flip(0))?;
                out.push(Check::within(
                    "orientation flip leaves correlations unchanged",
                    max_correlation_gap(k, &k2, GAUGE_N_MAX)?,
                    1e-10,
                ));
            }
            Instance::Plancherel {
                window,
                theta,
                cutoff,
            } => {
                let mut gap = 0.0f64;
                for &x in window {
                    for &y in window {
                        if x != y {
                            let a = plancherel::discrete_bessel_kernel(x, y, *theta)?;
                            let b = plancherel::discrete_bessel_series(x, y, *theta)?;
                            gap = gap.max((a - b).abs());
                        }
                    }
                }
                out.push(Check::within(
                    "ratio and series forms agree",
                    gap,
                    STRUCTURAL_TOL,
                ));
                out.push(Check::within(
                    format!("Poisson tail bound at cutoff {cutoff}"),
                    plancherel::poisson_tail(*theta, *cutoff),
                    PLANCHEREL_TOL,
                ));
            }
        }
        Ok(out)
    }
}

/// `K - (π + πQ) ⊗ 1 = -Qᵀ` must be strictly lower triangular once states
/// are listed in topological order.
fn markov_nilpotent_defect(s: &MarkovChainSpec, k: &KernelMatrix) -> Result<f64> {
    let p: &DMatrix<f64> = s.transitions();
    let q = markov::accumulate_q(p)?;
    let pi = s.initial();
    let n = pi.len();
    let r: Vec<f64> = (0..n)
        .map(|x| pi[x] + (0..n).map(|z| pi[z] * q[(z, x)]).sum::<f64>())
        .collect();
    let order = markov::topological_order(p)?;
    let mut pos = vec![0; n];
    for (i, &x) in order.iter().enumerate() {
        pos[x] = i;
    }
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let v = (k.get(x, y) - linalg::c(r[x])).norm();
            if pos[y] >= pos[x] {
                worst = worst.max(v);
            }
        }
    }
    Ok(worst)
}

fn layer_traces(k: &KernelMatrix, offsets: &[usize], sizes: &[usize], particles: usize) -> Check {
    let mut worst = 0.0f64;
    for (&o, &d) in offsets.iter().zip(sizes) {
        let t: f64 = (o..o + d).map(|i| k.get(i, i).re).sum();
        worst = worst.max((t - particles as f64).abs());
    }
    Check::within("every layer holds N particles", worst, 1e-10)
}

/// Slice blocks are recognised by their `level.slice:` label prefix.
fn varying_trace_defect(k: &KernelMatrix) -> Result<f64> {
    let mut sums: Vec<(String, usize, f64)> = Vec::new();
    for (i, label) in k.ground_set().labels().iter().enumerate() {
        let (prefix, _) = label
            .split_once(':')
            .ok_or_else(|| DppError::InvalidInput(format!("unexpected label {label}")))?;
        let level: usize = prefix
            .split('.')
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DppError::InvalidInput(format!("unexpected label {label}")))?;
        match sums.iter_mut().find(|s| s.0 == prefix) {
            Some(s) => s.2 += k.get(i, i).re,
            None => sums.push((prefix.to_string(), level, k.get(i, i).re)),
        }
    }
    Ok(sums
        .iter()
        .map(|(_, lvl, t)| (t - *lvl as f64).abs())
        .fold(0.0, f64::max))
}

/// Builds the instance and its kernel in one step.
pub fn kernel_from_spec(spec: &MechanismSpec) -> Result<KernelMatrix> {
    Instance::from_spec(spec)?.kernel()
}
