//! Verification runs over spec files and over the bundled corpus.

use std::time::Instant;

use serde::Serialize;

use crate::error::{DppError, Result};
use crate::io::SpecDoc;
use crate::mechanism::{Check, Instance};
use crate::oracle::{
    verify_determinantal_with_limit, VerificationReport, DEFAULT_ENUMERATION_LIMIT,
};
use crate::process::KernelMatrix;

/// Correlation order compared against enumeration by default.
pub const DEFAULT_N_MAX: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Overrides the mechanism's default tolerance.
    pub tol: Option<f64>,
    pub n_max: usize,
    pub enumeration_limit: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: None,
            n_max: DEFAULT_N_MAX,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// Outcome of verifying one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub detpp_schema: u32,
    pub name: String,
    pub mechanism: String,
    pub description: Option<String>,
    pub points: usize,
    pub verification: VerificationReport,
    pub checks: Vec<Check>,
    /// Largest correlation deviation against enumeration.
    pub max_deviation: f64,
    pub passed: bool,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub detpp_schema: u32,
    pub instances: usize,
    pub failed: Vec<String>,
    pub passed: bool,
    pub wall_time_ms: f64,
    pub reports: Vec<RunReport>,
}

/// Verifies the kernel built from `doc` against its explicit process.
pub fn run_spec(doc: &SpecDoc, opts: &RunOptions) -> Result<RunReport> {
    run_spec_with_kernel(doc, None, opts)
}

/// As [`run_spec`], but checks `kernel` in place of the constructed one.
pub fn run_spec_with_kernel(
    doc: &SpecDoc,
    kernel: Option<KernelMatrix>,
    opts: &RunOptions,
) -> Result<RunReport> {
    let start = Instant::now();
    let instance = Instance::from_spec(&doc.spec)?;
    let built = instance.kernel()?;
    let k = match kernel {
        Some(k) if k.len() != built.len() => {
            return Err(DppError::DimensionMismatch(format!(
                "kernel has {} points, instance has {}",
                k.len(),
                built.len()
            )))
        }
        Some(k) => k,
        None => built,
    };
    let limit = opts
        .enumeration_limit
        .min(crate::oracle::MAX_ENUMERATION_LIMIT);
    if k.len() > limit {
        return Err(DppError::EnumerationTooLarge {
            size: k.len(),
            limit,
        });
    }
    let tol = doc
        .tol
        .or(opts.tol)
        .unwrap_or_else(|| instance.default_tol());
    let process = instance.oracle()?;
    let verification = verify_determinantal_with_limit(&process, &k, opts.n_max, tol, limit)?;
    let checks = instance.structural_checks(&k)?;
    let passed = verification.passed() && checks.iter().all(|c| c.passed);
    Ok(RunReport {
        detpp_schema: crate::io::SCHEMA_VERSION,
        name: doc.to_string(),
        mechanism: instance.mechanism().to_string(),
        description: doc.description.clone(),
        points: k.len(),
        max_deviation: verification.max_deviation,
        verification,
        checks,
        passed,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// A spec file shipped with the library.
#[derive(Debug, Clone, Copy)]
pub struct Bundled {
    pub name: &'static str,
    pub text: &'static str,
}

impl Bundled {
    pub fn spec(&self) -> Result<SpecDoc> {
        SpecDoc::parse(self.text)
    }
}

macro_rules! bundled {
    ($name:literal) => {
        Bundled {
            name: $name,
            text: include_str!(concat!("../../../corpus/", $name, ".json")),
        }
    };
}

pub const CORPUS: &[Bundled] = &[
    bundled!("bi-complex-generic"),
    bundled!("bi-roots-of-unity"),
    bundled!("bi-standard-basis"),
    bundled!("bi-uniform-single"),
    bundled!("dimer-brick-wall"),
    bundled!("dimer-four-cycle"),
    bundled!("dimer-four-cycle-faces"),
    bundled!("dimer-grid-2x3"),
    bundled!("dimer-grid-2x4"),
    bundled!("dimer-grid-2x5"),
    bundled!("dimer-grid-2x6"),
    bundled!("dimer-grid-3x4"),
    bundled!("dimer-grid-4x4"),
    bundled!("dimer-hexagon-embedded"),
    bundled!("dimer-single-edge"),
    bundled!("em-generic-positive"),
    bundled!("em-nonintersecting-walks"),
    bundled!("em-two-layer-single"),
    bundled!("l-all-ones"),
    bundled!("l-block-conditional"),
    bundled!("l-complex-hermitian"),
    bundled!("l-conditional"),
    bundled!("l-identity"),
    bundled!("l-random-psd"),
    bundled!("l-twelve-points"),
    bundled!("l-zero"),
    bundled!("markov-absorbing-start"),
    bundled!("markov-deterministic-chain"),
    bundled!("markov-eight-state"),
    bundled!("markov-layered-4"),
    bundled!("markov-two-state"),
    bundled!("nice-single-layer"),
    bundled!("nice-three-layer"),
    bundled!("onedep-bernoulli"),
    bundled!("onedep-exclusion"),
    bundled!("onedep-exclusion-ten"),
    bundled!("onedep-full-segment"),
    bundled!("onedep-process-input"),
    bundled!("ope-discrete-gaussian"),
    bundled!("ope-three-points"),
    bundled!("plancherel-theta-0.3"),
    bundled!("plancherel-theta-0.5"),
    bundled!("plancherel-theta-1.0"),
    bundled!("ust-bridge"),
    bundled!("ust-cycle-5"),
    bundled!("ust-double-edge"),
    bundled!("ust-grid-3x3"),
    bundled!("ust-k4"),
    bundled!("ust-k5"),
    bundled!("ust-path"),
    bundled!("ust-triangle"),
    bundled!("varying-interlacing"),
    bundled!("varying-one-level"),
    bundled!("varying-with-evolution"),
];

/// Bundled instances selected by `suite`: `all`, a mechanism name, or an
/// instance name.
pub fn select(suite: &str) -> Result<Vec<SpecDoc>> {
    let mut out = Vec::new();
    for b in CORPUS {
        let doc = b.spec()?;
        if suite == "all" || suite == b.name || suite == doc.spec.name() {
            out.push(doc);
        }
    }
    if out.is_empty() {
        return Err(DppError::InvalidInput(format!(
            "no bundled instance matches {suite:?}"
        )));
    }
    Ok(out)
}

pub fn run_suite(suite: &str, opts: &RunOptions) -> Result<SuiteReport> {
    let start = Instant::now();
    let reports = select(suite)?
        .iter()
        .map(|doc| run_spec(doc, opts))
        .collect::<Result<Vec<_>>>()?;
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.clone())
        .collect();
    Ok(SuiteReport {
        detpp_schema: crate::io::SCHEMA_VERSION,
        instances: reports.len(),
        passed: failed.is_empty(),
        failed,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        reports,
    })
}
