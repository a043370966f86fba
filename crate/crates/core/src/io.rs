//! JSON documents: kernels, explicit processes and mechanism specs.
//!
//! Every document carries `"detpp_schema": 1`. Complex entries are written
//! as `{"re": .., "im": ..}`; on input a bare number is also accepted.

use std::fmt;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dimer::Face;
use crate::error::{DppError, Result};
use crate::linalg::CMatrix;
use crate::process::{Configuration, ExplicitProcess, GroundSet, KernelMatrix};
use crate::Complex64;

pub const SCHEMA_VERSION: u32 = 1;

/// A complex number in JSON form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cx(pub Complex64);

#[derive(Deserialize)]
#[serde(untagged)]
enum CxRepr {
    Real(f64),
    Parts {
        re: f64,
        #[serde(default)]
        im: f64,
    },
}

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Parts {
            re: f64,
            im: f64,
        }
        Parts {
            re: self.0.re,
            im: self.0.im,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match CxRepr::deserialize(d)? {
            CxRepr::Real(re) => Cx(Complex64::new(re, 0.0)),
            CxRepr::Parts { re, im } => Cx(Complex64::new(re, im)),
        })
    }
}

pub type CxRows = Vec<Vec<Cx>>;

pub fn to_rows(m: &CMatrix) -> CxRows {
    m.row_iter()
        .map(|r| r.iter().map(|&z| Cx(z)).collect())
        .collect()
}

/// Rectangular matrix from rows. An empty row list is rejected.
pub fn from_rows(rows: &[Vec<Cx>], what: &str) -> Result<CMatrix> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if nr == 0 || rows.iter().any(|r| r.len() != nc) {
        return Err(DppError::DimensionMismatch(format!(
            "{what} must be a nonempty rectangular matrix"
        )));
    }
    Ok(CMatrix::from_fn(nr, nc, |i, j| rows[i][j].0))
}

fn from_real_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if nr == 0 || rows.iter().any(|r| r.len() != nc) {
        return Err(DppError::DimensionMismatch(format!(
            "{what} must be a nonempty rectangular matrix"
        )));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

fn cx_vec(v: &[Cx]) -> Vec<Complex64> {
    v.iter().map(|z| z.0).collect()
}

fn check_schema(v: Option<u32>) -> Result<()> {
    match v {
        None | Some(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(DppError::InvalidInput(format!(
            "unsupported detpp_schema {v}"
        ))),
    }
}

fn schema() -> Option<u32> {
    Some(SCHEMA_VERSION)
}

/// Parses any document type, mapping JSON errors to `InvalidInput`.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| DppError::InvalidInput(format!("malformed JSON: {e}")))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn ground_set(points: Option<Vec<String>>, mu: Option<Vec<f64>>, n: usize) -> Result<GroundSet> {
    let labels = points.unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
    if labels.len() != n {
        return Err(DppError::DimensionMismatch(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    match mu {
        Some(mu) => GroundSet::with_measure(labels, mu),
        None => GroundSet::new(labels),
    }
}

/// `{"points": [...], "mu": [...], "kernel": [[..]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDoc {
    #[serde(default = "schema")]
    pub detpp_schema: Option<u32>,
    #[serde(default)]
    pub points: Option<Vec<String>>,
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    pub kernel: CxRows,
}

impl KernelDoc {
    pub fn from_kernel(k: &KernelMatrix) -> Self {
        KernelDoc {
            detpp_schema: schema(),
            points: Some(k.ground_set().labels().to_vec()),
            mu: Some(k.ground_set().mu().to_vec()),
            kernel: to_rows(k.matrix()),
        }
    }

    pub fn to_kernel(&self) -> Result<KernelMatrix> {
        check_schema(self.detpp_schema)?;
        let m = from_rows(&self.kernel, "kernel")?;
        KernelMatrix::new(
            ground_set(self.points.clone(), self.mu.clone(), m.nrows())?,
            m,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub configuration: Configuration,
    pub weight: Cx,
}

/// `{"points", "mu", "weights": [{"configuration": [..], "weight": ..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessDoc {
    #[serde(default = "schema")]
    pub detpp_schema: Option<u32>,
    #[serde(default)]
    pub points: Option<Vec<String>>,
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    /// Number of points when `points` is absent.
    #[serde(default)]
    pub size: Option<usize>,
    pub weights: Vec<WeightEntry>,
}

impl ProcessDoc {
    pub fn from_process(p: &ExplicitProcess) -> Self {
        ProcessDoc {
            detpp_schema: schema(),
            points: Some(p.ground_set().labels().to_vec()),
            mu: Some(p.ground_set().mu().to_vec()),
            size: None,
            weights: p
                .weights()
                .iter()
                .map(|(c, w)| WeightEntry {
                    configuration: c.clone(),
                    weight: Cx(*w),
                })
                .collect(),
        }
    }

    pub fn to_process(&self) -> Result<ExplicitProcess> {
        check_schema(self.detpp_schema)?;
        let n = match (&self.points, self.size) {
            (Some(p), _) => p.len(),
            (None, Some(n)) => n,
            (None, None) => {
                return Err(DppError::InvalidInput(
                    "process needs points or size".into(),
                ))
            }
        };
        let gs = ground_set(self.points.clone(), self.mu.clone(), n)?;
        ExplicitProcess::new(
            gs,
            self.weights
                .iter()
                .map(|e| (e.configuration.clone(), e.weight.0)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerGraphDoc {
    pub black: Option<usize>,
    pub white: Option<usize>,
    /// `[black, white]` pairs.
    pub edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub faces: Option<Vec<Face>>,
    #[serde(default)]
    pub black_pos: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub white_pos: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedGraphDoc {
    pub vertices: usize,
    /// `[tail, head]` pairs.
    pub edges: Vec<(usize, usize)>,
}

/// Mechanism-specific payload, tagged by `"mechanism"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "lowercase")]
pub enum MechanismSpec {
    Markov {
        #[serde(default)]
        points: Option<Vec<String>>,
        pi: Vec<f64>,
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
    },
    Bi {
        #[serde(default)]
        points: Option<Vec<String>>,
        #[serde(default)]
        mu: Option<Vec<f64>>,
        phi: CxRows,
        psi: CxRows,
    },
    Ope {
        positions: Vec<f64>,
        weight: Vec<f64>,
        particles: usize,
    },
    Em {
        layer_sizes: Vec<usize>,
        phi: CxRows,
        psi: CxRows,
        transitions: Vec<CxRows>,
    },
    Nice {
        bases: Vec<CxRows>,
        constants: Vec<Vec<Cx>>,
        particles: usize,
    },
    Varying {
        sizes: Vec<usize>,
        phi_virt: Vec<Vec<Cx>>,
        phi: Vec<CxRows>,
        psi: CxRows,
        #[serde(default)]
        evolutions: Option<Vec<Vec<CxRows>>>,
    },
    L {
        #[serde(default)]
        points: Option<Vec<String>>,
        #[serde(rename = "L")]
        l: CxRows,
        /// Indices of the subset `Y` to condition on.
        #[serde(default)]
        condition: Option<Vec<usize>>,
    },
    Onedep {
        #[serde(default)]
        start: i64,
        #[serde(rename = "R", default)]
        r: Option<CxRows>,
        #[serde(default)]
        process: Option<ProcessDoc>,
        /// Bernoulli parameters of the two-block exclusion factor.
        #[serde(default)]
        exclusion: Option<Vec<f64>>,
    },
    Dimer {
        #[serde(default)]
        graph: Option<DimerGraphDoc>,
        #[serde(default)]
        grid: Option<(usize, usize)>,
        #[serde(default)]
        brick_wall: Option<(usize, usize)>,
    },
    Ust {
        #[serde(default)]
        graph: Option<OrientedGraphDoc>,
        #[serde(default)]
        complete: Option<usize>,
        #[serde(default)]
        grid: Option<(usize, usize)>,
        #[serde(default)]
        cycle: Option<usize>,
    },
    Plancherel {
        theta: f64,
        /// Endpoints as half-integers, e.g. `["-5/2", "5/2"]`.
        window: (String, String),
        #[serde(default)]
        cutoff: Option<usize>,
    },
}

impl MechanismSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismSpec::Markov { .. } => "markov",
            MechanismSpec::Bi { .. } => "bi",
            MechanismSpec::Ope { .. } => "ope",
            MechanismSpec::Em { .. } => "em",
            MechanismSpec::Nice { .. } => "nice",
            MechanismSpec::Varying { .. } => "varying",
            MechanismSpec::L { .. } => "l",
            MechanismSpec::Onedep { .. } => "onedep",
            MechanismSpec::Dimer { .. } => "dimer",
            MechanismSpec::Ust { .. } => "ust",
            MechanismSpec::Plancherel { .. } => "plancherel",
        }
    }
}

/// A spec file: the mechanism payload plus optional metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecDoc {
    #[serde(default = "schema")]
    pub detpp_schema: Option<u32>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    /// Verification tolerance; the mechanism default when absent.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(flatten)]
    pub spec: MechanismSpec,
}

impl SpecDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: SpecDoc = parse(text)?;
        check_schema(doc.detpp_schema)?;
        Ok(doc)
    }
}

impl fmt::Display for SpecDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name.as_deref().unwrap_or(self.spec.name()))
    }
}

pub(crate) mod build {
    //! Conversions from JSON payloads to the library types.
    use super::*;
    use crate::detproducts::{BiorthogonalSpec, LayeredSpec, NiceCaseSpec, VaryingSpec};
    use crate::dimer::PlanarBipartiteGraph;
    use crate::markov::MarkovChainSpec;
    use crate::ust::OrientedGraph;

    pub fn markov(
        points: &Option<Vec<String>>,
        pi: &[f64],
        p: &[Vec<f64>],
    ) -> Result<MarkovChainSpec> {
        let p = from_real_rows(p, "P")?;
        MarkovChainSpec::new(ground_set(points.clone(), None, pi.len())?, p, pi.to_vec())
    }

    pub fn bi(
        points: &Option<Vec<String>>,
        mu: &Option<Vec<f64>>,
        phi: &CxRows,
        psi: &CxRows,
    ) -> Result<BiorthogonalSpec> {
        let phi = from_rows(phi, "phi")?;
        let psi = from_rows(psi, "psi")?;
        BiorthogonalSpec::new(
            ground_set(points.clone(), mu.clone(), phi.ncols())?,
            phi,
            psi,
        )
    }

    pub fn em(
        layer_sizes: &[usize],
        phi: &CxRows,
        psi: &CxRows,
        transitions: &[CxRows],
    ) -> Result<LayeredSpec> {
        let t = transitions
            .iter()
            .map(|t| from_rows(t, "transition"))
            .collect::<Result<Vec<_>>>()?;
        LayeredSpec::new(
            layer_sizes.to_vec(),
            from_rows(phi, "phi")?,
            from_rows(psi, "psi")?,
            t,
        )
    }

    pub fn nice(bases: &[CxRows], constants: &[Vec<Cx>], particles: usize) -> Result<NiceCaseSpec> {
        let b = bases
            .iter()
            .map(|b| from_rows(b, "basis"))
            .collect::<Result<Vec<_>>>()?;
        NiceCaseSpec::new(b, constants.iter().map(|c| cx_vec(c)).collect(), particles)
    }

    pub fn varying(
        sizes: &[usize],
        phi_virt: &[Vec<Cx>],
        phi: &[CxRows],
        psi: &CxRows,
        evolutions: &Option<Vec<Vec<CxRows>>>,
    ) -> Result<VaryingSpec> {
        let phi = phi
            .iter()
            .map(|m| from_rows(m, "phi"))
            .collect::<Result<Vec<_>>>()?;
        let evolutions = match evolutions {
            Some(e) => e
                .iter()
                .map(|list| {
                    list.iter()
                        .map(|m| from_rows(m, "evolution"))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
            None => vec![Vec::new(); sizes.len()],
        };
        VaryingSpec::new(
            sizes.to_vec(),
            phi_virt.iter().map(|v| cx_vec(v)).collect(),
            phi,
            from_rows(psi, "psi")?,
            evolutions,
        )
    }

    pub fn l_matrix(points: &Option<Vec<String>>, l: &CxRows) -> Result<crate::lensemble::LMatrix> {
        let m = from_rows(l, "L")?;
        crate::lensemble::LMatrix::new(ground_set(points.clone(), None, m.nrows())?, m)
    }

    pub fn dimer(
        graph: &Option<DimerGraphDoc>,
        grid: Option<(usize, usize)>,
        brick_wall: Option<(usize, usize)>,
    ) -> Result<PlanarBipartiteGraph> {
        match (graph, grid, brick_wall) {
            (Some(g), None, None) => match (&g.faces, &g.black_pos, &g.white_pos) {
                (Some(faces), _, _) => {
                    let (b, w) = match (g.black, g.white) {
                        (Some(b), Some(w)) => (b, w),
                        _ => {
                            return Err(DppError::InvalidInput(
                                "graph needs black and white counts".into(),
                            ))
                        }
                    };
                    PlanarBipartiteGraph::new(b, w, g.edges.clone(), faces.clone())
                }
                (None, Some(bp), Some(wp)) => {
                    PlanarBipartiteGraph::from_embedding(bp, wp, g.edges.clone())
                }
                _ => Err(DppError::InvalidInput(
                    "graph needs faces or black_pos/white_pos".into(),
                )),
            },
            (None, Some((r, c)), None) => PlanarBipartiteGraph::grid(r, c),
            (None, None, Some((r, c))) => PlanarBipartiteGraph::brick_wall(r, c),
            _ => Err(DppError::InvalidInput(
                "give exactly one of graph, grid, brick_wall".into(),
            )),
        }
    }

    pub fn ust(
        graph: &Option<OrientedGraphDoc>,
        complete: Option<usize>,
        grid: Option<(usize, usize)>,
        cycle: Option<usize>,
    ) -> Result<OrientedGraph> {
        match (graph, complete, grid, cycle) {
            (Some(g), None, None, None) => OrientedGraph::new(g.vertices, g.edges.clone()),
            (None, Some(n), None, None) => OrientedGraph::complete(n),
            (None, None, Some((r, c)), None) => OrientedGraph::grid(r, c),
            (None, None, None, Some(n)) => OrientedGraph::cycle(n),
            _ => Err(DppError::InvalidInput(
                "give exactly one of graph, complete, grid, cycle".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn complex_entries_accept_numbers_and_parts() {
        let v: Vec<Cx> = parse(r#"[1.5, {"re": 2, "im": -1}, {"re": 3}]"#).unwrap();
        assert_eq!(v[0].0, c(1.5));
        assert_eq!(v[1].0, Complex64::new(2.0, -1.0));
        assert_eq!(v[2].0, c(3.0));
        assert_eq!(
            serde_json::to_string(&v[1]).unwrap(),
            r#"{"re":2.0,"im":-1.0}"#
        );
    }

    #[test]
    fn kernel_round_trip() {
        let gs = GroundSet::with_measure(vec!["a".into(), "b".into()], vec![1.0, 0.5]).unwrap();
        let m = CMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64 + 0.25, j as f64 - 0.5));
        let k = KernelMatrix::new(gs, m).unwrap();
        let text = to_json(&KernelDoc::from_kernel(&k));
        assert!(text.contains("\"detpp_schema\": 1"));
        let back = parse::<KernelDoc>(&text).unwrap().to_kernel().unwrap();
        assert_eq!(back, k);
    }

    #[test]
    fn process_round_trip() {
        let gs = GroundSet::counting(3).unwrap();
        let w = [
            (Configuration::new(vec![0, 2]).unwrap(), c(2.0)),
            (Configuration::empty(), c(1.0)),
        ];
        let p = ExplicitProcess::new(gs, w).unwrap();
        let back = parse::<ProcessDoc>(&to_json(&ProcessDoc::from_process(&p)))
            .unwrap()
            .to_process()
            .unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn spec_tagging() {
        let doc = SpecDoc::parse(
            r#"{"detpp_schema": 1, "mechanism": "markov", "pi": [1, 0], "P": [[0, 0.5], [0, 0]]}"#,
        )
        .unwrap();
        assert_eq!(doc.spec.name(), "markov");
        assert!(SpecDoc::parse(r#"{"mechanism": "nope"}"#).is_err());
        let bad = SpecDoc::parse(r#"{"detpp_schema": 7, "mechanism": "ust", "complete": 3}"#);
        assert!(matches!(bad, Err(DppError::InvalidInput(_))));
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: CxRows = parse("[[1, 2], [3]]").unwrap();
        assert!(matches!(
            from_rows(&rows, "m"),
            Err(DppError::DimensionMismatch(_))
        ));
    }
}
