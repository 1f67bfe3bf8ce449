//! Scenario documents: the JSON schema, its validation into a [`Scenario`],
//! and the reverse mapping used to write a scenario back out.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::biorthogonal::{build_frame_with, dual_partner, StatePair};
use crate::dynamics::{
    FourierSeries, Hamiltonian, HamiltonianPath, HamiltonianTerm, TimeGrid, TimeProfile,
    DEFAULT_DRIFT_FAIL,
};
use crate::error::{Error, Result};
use crate::geometry::DEFAULT_TOL_BIO;
use crate::linalg::{c, default_gap_tolerance, frobenius_norm, ComplexMatrix, ComplexVector};
use crate::phases::DEFAULT_ANCHOR_BUDGET;

pub const SCENARIO_VERSION: u32 = 1;
pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_GEODESIC_SAMPLES: usize = 1001;
pub const FRAME_ASSOCIATED: &str = "frame-associated";
pub const AUTO: &str = "auto";

/// A complex number written as `[re, im]`.
pub type Entry = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub scenario_version: u32,
    pub dimension: usize,
    pub hamiltonian: HamiltonianDoc,
    pub initial_state: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_dual: Option<VectorOrToken>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offdiag: Option<OffdiagDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<GeodesicDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon: Option<PolygonDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianDoc {
    pub t_domain: [f64; 2],
    pub terms: Vec<TermDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    /// Rows of `[re, im]` entries.
    pub matrix: Vec<Vec<Entry>>,
    /// Absent means the constant 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierDoc {
    pub omega: f64,
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorOrToken {
    Token(String),
    Vector(Vec<Entry>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnchorDoc {
    Token(String),
    Vector(Vec<Entry>),
    Pair(PairDoc),
}

/// A state with an optional dual; a missing dual means the normalized
/// state paired with itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    pub state: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<Vec<Entry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_bio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_fail: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffdiagDoc {
    pub states: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicDoc {
    pub start: PairDoc,
    pub end: PairDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonDoc {
    pub vertices: Vec<PairDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    pub command: String,
    pub parameter: String,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Phase,
    Offdiag,
    Geodesic,
    Polygon,
    Check,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Evolve,
        Command::Phase,
        Command::Offdiag,
        Command::Geodesic,
        Command::Polygon,
        Command::Check,
        Command::Sweep,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Phase => "phase",
            Command::Offdiag => "offdiag",
            Command::Geodesic => "geodesic",
            Command::Polygon => "polygon",
            Command::Check => "check",
            Command::Sweep => "sweep",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == name)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DualSource {
    FrameAssociated,
    Literal(ComplexVector),
}

/// A state and its optional dual as written, resolved on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub state: ComplexVector,
    pub dual: Option<ComplexVector>,
}

impl PairSpec {
    /// Self-dual unit state, or the dual rescaled so that `⟨ψ̃|ψ⟩ = 1`.
    pub fn resolve(&self) -> Result<StatePair> {
        match &self.dual {
            None => StatePair::self_dual(self.state.clone()),
            Some(d) => StatePair::with_rescaled_dual(self.state.clone(), d.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnchorSpec {
    Absent,
    Auto,
    Literal(PairSpec),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `None` applies `1e-8·‖H(t)‖_F` sample by sample.
    pub tol_gap: Option<f64>,
    pub tol_bio: f64,
    pub drift_fail: f64,
    pub anchor_budget: usize,
}

impl Tolerances {
    pub fn gap_for(&self, h: &ComplexMatrix) -> f64 {
        self.tol_gap.unwrap_or_else(|| default_gap_tolerance(h))
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_gap: None,
            tol_bio: DEFAULT_TOL_BIO,
            drift_fail: DEFAULT_DRIFT_FAIL,
            anchor_budget: DEFAULT_ANCHOR_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outputs {
    pub trajectory: bool,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSpec {
    pub start: PairSpec,
    pub end: PairSpec,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonSpec {
    pub vertices: Vec<PairSpec>,
    pub closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepParameter {
    /// Traverse the same path `λ` times more slowly.
    TimeScale,
    /// Self-dual anchor with components `e^{ikφ}/√N`.
    AnchorPhase,
    /// Multiply one term's matrix.
    TermScale(usize),
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::TimeScale => "time_scale",
            SweepParameter::AnchorPhase => "anchor_phase",
            SweepParameter::TermScale(_) => "term_scale",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub command: Command,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub path: HamiltonianPath,
    pub initial_state: ComplexVector,
    pub initial_dual: DualSource,
    /// Binormalized initial pair derived from the two fields above.
    pub initial: StatePair,
    pub grid: TimeGrid,
    pub anchor: AnchorSpec,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub outputs: Outputs,
    pub offdiag: Option<[usize; 2]>,
    pub geodesic: Option<GeodesicSpec>,
    pub polygon: Option<PolygonSpec>,
    pub sweep: Option<SweepSpec>,
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc = parse_document(text)?;
    Scenario::from_document(&doc)
}

pub fn parse_document(text: &str) -> Result<ScenarioDocument> {
    from_json(text)
}

/// Writes `scenario` back as a document that parses to an equal scenario.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(&scenario.to_document()).expect("documents always serialize")
}

/// Anchor given on its own, as a vector or a `{state, dual}` object.
pub fn parse_anchor(text: &str, dim: usize) -> Result<AnchorSpec> {
    let doc: AnchorDoc = from_json(text)?;
    anchor_from_doc(&doc, dim, "anchor")
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        Error::parse(if path == "." { "(document)".into() } else { path }, e.inner().to_string())
    })?;
    de.end()
        .map_err(|e| Error::parse("(document)", e.to_string()))?;
    Ok(value)
}

fn complex_vector(entries: &[Entry], dim: usize, field: &str) -> Result<ComplexVector> {
    if entries.len() != dim {
        return Err(Error::dimension(field, dim, entries.len()));
    }
    Ok(ComplexVector::from_iterator(
        dim,
        entries.iter().map(|&[re, im]| c(re, im)),
    ))
}

fn entries(v: &ComplexVector) -> Vec<Entry> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn pair_from_doc(doc: &PairDoc, dim: usize, field: &str) -> Result<PairSpec> {
    let spec = PairSpec {
        state: complex_vector(&doc.state, dim, &format!("{field}.state"))?,
        dual: doc
            .dual
            .as_ref()
            .map(|d| complex_vector(d, dim, &format!("{field}.dual")))
            .transpose()?,
    };
    spec.resolve()?;
    Ok(spec)
}

fn pair_to_doc(spec: &PairSpec) -> PairDoc {
    PairDoc {
        state: entries(&spec.state),
        dual: spec.dual.as_ref().map(entries),
    }
}

fn anchor_from_doc(doc: &AnchorDoc, dim: usize, field: &str) -> Result<AnchorSpec> {
    match doc {
        AnchorDoc::Token(t) if t == AUTO => Ok(AnchorSpec::Auto),
        AnchorDoc::Token(t) => Err(Error::parse(
            field,
            format!("unknown anchor token {t:?}; expected \"{AUTO}\", a vector or {{state, dual}}"),
        )),
        AnchorDoc::Vector(v) => Ok(AnchorSpec::Literal(pair_from_doc(
            &PairDoc {
                state: v.clone(),
                dual: None,
            },
            dim,
            field,
        )?)),
        AnchorDoc::Pair(p) => Ok(AnchorSpec::Literal(pair_from_doc(p, dim, field)?)),
    }
}

fn positive(value: Option<f64>, default: f64, field: &str) -> Result<f64> {
    match value {
        None => Ok(default),
        Some(v) if v.is_finite() && v > 0.0 => Ok(v),
        Some(v) => Err(Error::parse(field, format!("must be finite and positive, got {v}"))),
    }
}

fn profile_from_doc(doc: Option<&ProfileDoc>) -> TimeProfile {
    match doc {
        None => TimeProfile::constant(1.0),
        Some(p) => TimeProfile {
            polynomial: p.polynomial.clone().unwrap_or_default(),
            fourier: p.fourier.as_ref().map(|f| FourierSeries {
                omega: f.omega,
                constant: f.constant,
                cos: f.cos.clone(),
                sin: f.sin.clone(),
            }),
        },
    }
}

fn profile_to_doc(p: &TimeProfile) -> ProfileDoc {
    ProfileDoc {
        polynomial: Some(p.polynomial.clone()),
        fourier: p.fourier.as_ref().map(|f| FourierDoc {
            omega: f.omega,
            constant: f.constant,
            cos: f.cos.clone(),
            sin: f.sin.clone(),
        }),
    }
}

fn is_hermitian(h: &ComplexMatrix) -> bool {
    frobenius_norm(&(h - h.adjoint())) <= 1e-12 * frobenius_norm(h).max(1.0)
}

/// Binormalized initial pair.
///
/// The frame-associated dual is taken from the biorthonormal frame of
/// `H(t0)`. For Hermitian `H(t0)` it reduces to `ψ/‖ψ‖²`, which is used
/// directly so that degenerate Hermitian spectra remain admissible.
pub fn resolve_initial(
    path: &HamiltonianPath,
    t0: f64,
    state: &ComplexVector,
    dual: &DualSource,
    tolerances: &Tolerances,
) -> Result<StatePair> {
    if state.norm() == 0.0 {
        return Err(Error::ZeroVector {
            operation: "initial_state".into(),
        });
    }
    let raw_dual = match dual {
        DualSource::Literal(d) => d.clone(),
        DualSource::FrameAssociated => {
            let h = path.at(t0);
            if is_hermitian(&h) {
                state / c(state.norm_squared(), 0.0)
            } else {
                let frame = build_frame_with(&h, tolerances.gap_for(&h), t0)?;
                dual_partner(&frame, state)?.dual
            }
        }
    };
    let overlap = raw_dual.dotc(state);
    if !(overlap.norm() > tolerances.tol_bio * state.norm() * raw_dual.norm()) {
        return Err(Error::Biorthogonal {
            overlap: "<initial_dual|initial_state>".into(),
            magnitude: overlap.norm(),
            tol_bio: tolerances.tol_bio,
        });
    }
    StatePair::with_rescaled_dual(state.clone(), raw_dual)
}

impl Scenario {
    pub fn from_document(doc: &ScenarioDocument) -> Result<Self> {
        if doc.scenario_version != SCENARIO_VERSION {
            return Err(Error::parse(
                "scenario_version",
                format!("unsupported version {}, expected {SCENARIO_VERSION}", doc.scenario_version),
            ));
        }
        let dim = doc.dimension;
        if dim == 0 {
            return Err(Error::parse("dimension", "must be at least 1"));
        }

        let mut terms = Vec::with_capacity(doc.hamiltonian.terms.len());
        for (j, term) in doc.hamiltonian.terms.iter().enumerate() {
            let field = format!("hamiltonian.terms[{j}].matrix");
            let rows = term.matrix.len();
            if let Some(bad) = term.matrix.iter().find(|r| r.len() != rows) {
                return Err(Error::parse(
                    field,
                    format!("matrix must be square: {rows} rows but a row of length {}", bad.len()),
                ));
            }
            if rows != dim {
                return Err(Error::dimension(field, dim, rows));
            }
            let matrix = ComplexMatrix::from_fn(dim, dim, |r, col| {
                let [re, im] = term.matrix[r][col];
                c(re, im)
            });
            terms.push(HamiltonianTerm {
                matrix,
                profile: profile_from_doc(term.profile.as_ref()),
            });
        }
        let [d0, d1] = doc.hamiltonian.t_domain;
        let path = HamiltonianPath::new(dim, terms, (d0, d1))?;

        let grid_doc = doc.grid.clone().unwrap_or(GridDoc {
            t0: None,
            t1: None,
            steps: None,
        });
        let grid = TimeGrid::new(
            grid_doc.t0.unwrap_or(d0),
            grid_doc.t1.unwrap_or(d1),
            grid_doc.steps.unwrap_or(DEFAULT_STEPS),
        )?;
        check_grid(&grid, (d0, d1))?;

        let tol = doc.tolerances.clone().unwrap_or(TolerancesDoc {
            tol_gap: None,
            tol_bio: None,
            drift_fail: None,
            anchor_budget: None,
        });
        let defaults = Tolerances::default();
        let tolerances = Tolerances {
            tol_gap: tol
                .tol_gap
                .map(|v| positive(Some(v), v, "tolerances.tol_gap"))
                .transpose()?,
            tol_bio: positive(tol.tol_bio, defaults.tol_bio, "tolerances.tol_bio")?,
            drift_fail: positive(tol.drift_fail, defaults.drift_fail, "tolerances.drift_fail")?,
            anchor_budget: tol.anchor_budget.unwrap_or(defaults.anchor_budget),
        };

        let initial_state = complex_vector(&doc.initial_state, dim, "initial_state")?;
        let initial_dual = match &doc.initial_dual {
            None => DualSource::FrameAssociated,
            Some(VectorOrToken::Token(t)) if t == FRAME_ASSOCIATED => DualSource::FrameAssociated,
            Some(VectorOrToken::Token(t)) => {
                return Err(Error::parse(
                    "initial_dual",
                    format!("unknown token {t:?}; expected \"{FRAME_ASSOCIATED}\" or a vector"),
                ))
            }
            Some(VectorOrToken::Vector(v)) => {
                DualSource::Literal(complex_vector(v, dim, "initial_dual")?)
            }
        };
        let initial = resolve_initial(&path, grid.t0, &initial_state, &initial_dual, &tolerances)?;

        let anchor = match &doc.anchor {
            None => AnchorSpec::Absent,
            Some(a) => anchor_from_doc(a, dim, "anchor")?,
        };

        let outputs = match &doc.outputs {
            None => Outputs {
                trajectory: true,
                stride: 1,
            },
            Some(o) => {
                let stride = o.stride.unwrap_or(1);
                if stride == 0 {
                    return Err(Error::parse("outputs.stride", "must be at least 1"));
                }
                Outputs {
                    trajectory: o.trajectory.unwrap_or(true),
                    stride,
                }
            }
        };

        let offdiag = match &doc.offdiag {
            None => None,
            Some(o) => {
                let [j, k] = o.states;
                if j == k || j >= dim || k >= dim {
                    return Err(Error::parse(
                        "offdiag.states",
                        format!("need two distinct eigenstate indices below {dim}, got [{j}, {k}]"),
                    ));
                }
                Some([j, k])
            }
        };

        let geodesic = match &doc.geodesic {
            None => None,
            Some(g) => {
                let samples = g.samples.unwrap_or(DEFAULT_GEODESIC_SAMPLES);
                if samples < 5 {
                    return Err(Error::parse(
                        "geodesic.samples",
                        format!("need at least 5 samples, got {samples}"),
                    ));
                }
                Some(GeodesicSpec {
                    start: pair_from_doc(&g.start, dim, "geodesic.start")?,
                    end: pair_from_doc(&g.end, dim, "geodesic.end")?,
                    samples,
                })
            }
        };

        let polygon = match &doc.polygon {
            None => None,
            Some(p) => {
                if p.vertices.len() < 2 {
                    return Err(Error::parse("polygon.vertices", "need at least 2 vertices"));
                }
                let vertices = p
                    .vertices
                    .iter()
                    .enumerate()
                    .map(|(k, v)| pair_from_doc(v, dim, &format!("polygon.vertices[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                Some(PolygonSpec {
                    vertices,
                    closed: p.closed.unwrap_or(true),
                })
            }
        };

        let sweep = doc
            .sweep
            .as_ref()
            .map(|s| sweep_from_doc(s, path.terms().len()))
            .transpose()?;

        Ok(Self {
            path,
            initial_state,
            initial_dual,
            initial,
            grid,
            anchor,
            tolerances,
            seed: doc.seed.unwrap_or(0),
            outputs,
            offdiag,
            geodesic,
            polygon,
            sweep,
        })
    }

    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    pub fn to_document(&self) -> ScenarioDocument {
        let (d0, d1) = self.path.domain();
        ScenarioDocument {
            scenario_version: SCENARIO_VERSION,
            dimension: self.dim(),
            hamiltonian: HamiltonianDoc {
                t_domain: [d0, d1],
                terms: self
                    .path
                    .terms()
                    .iter()
                    .map(|t| TermDoc {
                        matrix: t
                            .matrix
                            .row_iter()
                            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                            .collect(),
                        profile: Some(profile_to_doc(&t.profile)),
                    })
                    .collect(),
            },
            initial_state: entries(&self.initial_state),
            initial_dual: Some(match &self.initial_dual {
                DualSource::FrameAssociated => VectorOrToken::Token(FRAME_ASSOCIATED.into()),
                DualSource::Literal(d) => VectorOrToken::Vector(entries(d)),
            }),
            grid: Some(GridDoc {
                t0: Some(self.grid.t0),
                t1: Some(self.grid.t1),
                steps: Some(self.grid.steps),
            }),
            anchor: match &self.anchor {
                AnchorSpec::Absent => None,
                AnchorSpec::Auto => Some(AnchorDoc::Token(AUTO.into())),
                AnchorSpec::Literal(p) => Some(AnchorDoc::Pair(pair_to_doc(p))),
            },
            tolerances: Some(TolerancesDoc {
                tol_gap: self.tolerances.tol_gap,
                tol_bio: Some(self.tolerances.tol_bio),
                drift_fail: Some(self.tolerances.drift_fail),
                anchor_budget: Some(self.tolerances.anchor_budget),
            }),
            seed: Some(self.seed),
            outputs: Some(OutputsDoc {
                trajectory: Some(self.outputs.trajectory),
                stride: Some(self.outputs.stride),
            }),
            offdiag: self.offdiag.map(|states| OffdiagDoc { states }),
            geodesic: self.geodesic.as_ref().map(|g| GeodesicDoc {
                start: pair_to_doc(&g.start),
                end: pair_to_doc(&g.end),
                samples: Some(g.samples),
            }),
            polygon: self.polygon.as_ref().map(|p| PolygonDoc {
                vertices: p.vertices.iter().map(pair_to_doc).collect(),
                closed: Some(p.closed),
            }),
            sweep: self.sweep.as_ref().map(|s| SweepDoc {
                command: s.command.as_str().into(),
                parameter: s.parameter.as_str().into(),
                values: s.values.clone(),
                term: match s.parameter {
                    SweepParameter::TermScale(j) => Some(j),
                    _ => None,
                },
            }),
        }
    }

    /// Same scenario on a grid with `steps` intervals.
    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        let mut out = self.clone();
        out.grid = TimeGrid::new(self.grid.t0, self.grid.t1, steps)?;
        Ok(out)
    }

    /// Same scenario driven by a different Hamiltonian path and grid; the
    /// initial pair is re-derived.
    pub fn with_path(&self, path: HamiltonianPath, grid: TimeGrid) -> Result<Self> {
        check_grid(&grid, path.domain())?;
        let initial = resolve_initial(
            &path,
            grid.t0,
            &self.initial_state,
            &self.initial_dual,
            &self.tolerances,
        )?;
        Ok(Self {
            path,
            grid,
            initial,
            ..self.clone()
        })
    }
}

fn check_grid(grid: &TimeGrid, (d0, d1): (f64, f64)) -> Result<()> {
    if grid.t0 < d0 || grid.t1 > d1 {
        return Err(Error::Grid(format!(
            "grid [{}, {}] extends outside the Hamiltonian domain [{d0}, {d1}]",
            grid.t0, grid.t1
        )));
    }
    Ok(())
}

fn sweep_from_doc(doc: &SweepDoc, n_terms: usize) -> Result<SweepSpec> {
    let command = match Command::from_name(&doc.command) {
        Some(Command::Sweep) | None => {
            return Err(Error::parse(
                "sweep.command",
                format!("cannot sweep {:?}", doc.command),
            ))
        }
        Some(c) => c,
    };
    let parameter = match doc.parameter.as_str() {
        "time_scale" => SweepParameter::TimeScale,
        "anchor_phase" => SweepParameter::AnchorPhase,
        "term_scale" => {
            let j = doc
                .term
                .ok_or_else(|| Error::parse("sweep.term", "term_scale needs a term index"))?;
            if j >= n_terms {
                return Err(Error::parse(
                    "sweep.term",
                    format!("term index {j} out of range 0..{n_terms}"),
                ));
            }
            SweepParameter::TermScale(j)
        }
        other => {
            return Err(Error::parse(
                "sweep.parameter",
                format!("unknown parameter {other:?}; expected time_scale, anchor_phase or term_scale"),
            ))
        }
    };
    if doc.values.is_empty() {
        return Err(Error::parse("sweep.values", "need at least one value"));
    }
    if let Some(v) = doc.values.iter().find(|v| !v.is_finite()) {
        return Err(Error::parse("sweep.values", format!("non-finite value {v}")));
    }
    Ok(SweepSpec {
        command,
        parameter,
        values: doc.values.clone(),
    })
}
