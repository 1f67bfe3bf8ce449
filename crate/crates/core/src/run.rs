//! Command dispatch. Each command turns a validated [`Scenario`] into a
//! [`ResultBundle`] tagged with the operation and the resolution it ran at.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::biorthogonal::{apply_gauge, build_frame_with, GaugeTransform, StatePair};
use crate::dynamics::{evolve_pair_with, Hamiltonian, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{
    connection_line_integral, distance_mod_pi, geodesic_between, geodesic_residual, path_length,
    pancharatnam_phase, polygon_phase, PhaseValue,
};
use crate::linalg::{c, eigendecompose, frobenius_norm, Complex64, ComplexVector};
use crate::phases::{
    anchored_pancharatnam, auto_anchor, geometric_phase, geometric_phase_anchored,
    offdiagonal_phase, AnchorState, PhaseResult,
};
use crate::scenario::{AnchorSpec, Command, Scenario, SweepParameter, DEFAULT_GEODESIC_SAMPLES};

const FRAME_RESIDUAL_MAX: f64 = 1e-9;
const DRIFT_MAX: f64 = 1e-8;
/// Below this the drift is roundoff and its refinement ratio is noise.
const DRIFT_RATIO_FLOOR: f64 = 1e-10;
const DRIFT_RATIO_MIN: f64 = 12.0;
const GAUGE_MAX: f64 = 1e-8;
const POLYGON_GAUGE_MAX: f64 = 1e-10;
const HERMITIAN_IMAG_MAX: f64 = 1e-7;
const THEOREM_MAX: f64 = 1e-7;
const IN_PHASE_MAX: f64 = 1e-10;
const COMPOSITION_MAX: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseOut {
    pub re: f64,
    pub im: f64,
    pub branch_offset: i64,
}

impl From<PhaseValue> for PhaseOut {
    fn from(p: PhaseValue) -> Self {
        Self {
            re: p.value.re,
            im: p.value.im,
            branch_offset: p.branch_offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOut {
    pub state: Vec<Cx>,
    pub dual: Vec<Cx>,
}

impl From<&StatePair> for PairOut {
    fn from(p: &StatePair) -> Self {
        Self {
            state: p.state.iter().map(|&z| z.into()).collect(),
            dual: p.dual.iter().map(|&z| z.into()).collect(),
        }
    }
}

/// Grid or sample count a result was computed at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolution {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    pub samples: usize,
}

impl Resolution {
    pub fn grid(g: &TimeGrid) -> Self {
        Self {
            t0: Some(g.t0),
            t1: Some(g.t1),
            steps: Some(g.steps),
            spacing: Some(g.spacing()),
            samples: g.len(),
        }
    }

    pub fn samples(n: usize) -> Self {
        Self {
            t0: None,
            t1: None,
            steps: None,
            spacing: None,
            samples: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultBundle {
    pub operation: &'static str,
    pub resolution: Resolution,
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Output {
    Evolve(EvolveOutput),
    Phase(PhaseOutput),
    Offdiag(OffdiagOutput),
    Geodesic(GeodesicOutput),
    Polygon(PolygonOutput),
    Check(CheckOutput),
    Sweep(SweepOutput),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub t: f64,
    pub state: Vec<Cx>,
    pub dual: Vec<Cx>,
    pub binorm_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveOutput {
    pub dimension: usize,
    pub max_binorm_drift: f64,
    pub final_binorm_defect: f64,
    pub stride: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<SampleRow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseOutput {
    pub mode: &'static str,
    pub pancharatnam: PhaseOut,
    pub dynamical: Cx,
    pub geometric: Cx,
    pub anchor_used: Option<PairOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor_min_overlap: Option<f64>,
    pub endpoint_overlap: Cx,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direct_discrepancy: Option<Cx>,
    /// Why the direct formula was abandoned, when it was.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
}

impl PhaseOutput {
    fn new(r: &PhaseResult, anchor: Option<&AnchorState>, fallback_reason: Option<String>) -> Self {
        Self {
            mode: r.mode.as_str(),
            pancharatnam: r.pancharatnam.into(),
            dynamical: r.dynamical.into(),
            geometric: r.geometric.into(),
            anchor_used: r.anchor_used.as_ref().map(PairOut::from),
            anchor_min_overlap: anchor.map(|a| a.min_overlap),
            endpoint_overlap: r.endpoint_overlap.into(),
            direct_discrepancy: r.direct_discrepancy.map(Cx::from),
            fallback_reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffdiagOutput {
    pub states: [usize; 2],
    pub eigenvalues_t0: [Cx; 2],
    pub gamma_jk: PhaseOut,
    /// `γ[j(0),a,k(t)]` and `γ[k(0),a,j(t)]`
    pub brackets: [PhaseOut; 2],
    pub singles: [PhaseOutput; 2],
    pub anchor_used: PairOut,
    pub anchor_min_overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicOutput {
    pub start: PairOut,
    pub end: PairOut,
    pub theta: PhaseOut,
    /// `−i∫⟨ψ̃|dψ⟩` along the θ-gauged geodesic.
    pub line_integral: PhaseOut,
    /// Distance modulo π between the two numbers above.
    pub theorem_discrepancy: f64,
    pub max_in_phase_residual: f64,
    pub geodesic_residual: f64,
    pub path_length: Cx,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolygonOutput {
    pub closed: bool,
    pub vertices: usize,
    pub phase: PhaseOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: &'static str,
    pub status: CheckStatus,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRow {
    fn at_most(name: &'static str, measured: f64, threshold: f64) -> Self {
        Self::compare(name, measured, threshold, measured <= threshold)
    }

    fn at_least(name: &'static str, measured: f64, threshold: f64) -> Self {
        Self::compare(name, measured, threshold, measured >= threshold)
    }

    fn compare(name: &'static str, measured: f64, threshold: f64, ok: bool) -> Self {
        Self {
            name,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            measured: Some(measured),
            threshold: Some(threshold),
            detail: None,
        }
    }

    fn skipped(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            status: CheckStatus::Skipped,
            measured: None,
            threshold: None,
            detail: Some(detail.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutput {
    pub checks: Vec<CheckRow>,
    pub failed: usize,
}

/// Machine-readable description of a failed operation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub exit_status: i32,
    pub command: String,
    pub message: String,
    pub details: serde_json::Value,
}

impl ErrorRecord {
    pub fn new(command: &str, err: &Error) -> Self {
        Self {
            kind: err.kind(),
            exit_status: err.exit_status(),
            command: command.into(),
            message: err.to_string(),
            details: serde_json::to_value(err).unwrap_or(serde_json::Value::Null),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub status: &'static str,
    /// Principal number of the point: drift for evolve, the geometric or
    /// off-diagonal phase, or the failed-check count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub headline: Option<Cx>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_offset: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ResultBundle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub command: &'static str,
    pub parameter: &'static str,
    pub rows: Vec<SweepRow>,
}

impl ResultBundle {
    /// The number a sweep row reports, with its branch offset if it has one.
    pub fn headline(&self) -> (Cx, Option<i64>) {
        match &self.output {
            Output::Evolve(e) => (c(e.max_binorm_drift, 0.0).into(), None),
            Output::Phase(p) => (p.geometric, Some(p.pancharatnam.branch_offset)),
            Output::Offdiag(o) => (
                Cx {
                    re: o.gamma_jk.re,
                    im: o.gamma_jk.im,
                },
                Some(o.gamma_jk.branch_offset),
            ),
            Output::Geodesic(g) => (
                Cx {
                    re: g.line_integral.re,
                    im: g.line_integral.im,
                },
                Some(g.line_integral.branch_offset),
            ),
            Output::Polygon(p) => (
                Cx {
                    re: p.phase.re,
                    im: p.phase.im,
                },
                Some(p.phase.branch_offset),
            ),
            Output::Check(k) => (c(k.failed as f64, 0.0).into(), None),
            Output::Sweep(s) => (c(s.rows.len() as f64, 0.0).into(), None),
        }
    }

    /// Number of failed checks, zero for every other command.
    pub fn failed_checks(&self) -> usize {
        match &self.output {
            Output::Check(k) => k.failed,
            _ => 0,
        }
    }
}

/// Runs `command` on `scenario`.
pub fn run(command: Command, scenario: &Scenario) -> Result<ResultBundle> {
    run_with(command, scenario, None)
}

fn run_with(command: Command, s: &Scenario, forced: Option<&StatePair>) -> Result<ResultBundle> {
    match command {
        Command::Evolve => run_evolve(s),
        Command::Phase => run_phase(s, forced),
        Command::Offdiag => run_offdiag(s, forced),
        Command::Geodesic => run_geodesic(s),
        Command::Polygon => run_polygon(s),
        Command::Check => run_check(s),
        Command::Sweep => run_sweep(s),
    }
}

fn evolve(s: &Scenario) -> Result<Trajectory> {
    evolve_pair_with(&s.path, &s.initial, &s.grid, s.tolerances.drift_fail)
}

/// Worst spectral gap along the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub min_gap: f64,
    pub tol_gap: f64,
    pub time: f64,
}

/// Decomposes `H(t)` at every grid sample; the first sample whose gap falls
/// to its tolerance raises `DegenerateSpectrum`. Otherwise reports the
/// sample with the smallest gap-to-tolerance ratio.
pub fn spectral_gap_guard(s: &Scenario) -> Result<GapReport> {
    let mut worst = GapReport {
        min_gap: f64::INFINITY,
        tol_gap: 0.0,
        time: s.grid.t0,
    };
    let mut worst_ratio = f64::INFINITY;
    for t in s.grid.times() {
        let h = s.path.at(t);
        let tol = s.tolerances.gap_for(&h);
        let gap = eigendecompose(&h, tol)?.min_gap();
        if gap / tol < worst_ratio {
            worst_ratio = gap / tol;
            worst = GapReport {
                min_gap: gap,
                tol_gap: tol,
                time: t,
            };
        }
    }
    Ok(worst)
}

fn run_evolve(s: &Scenario) -> Result<ResultBundle> {
    let traj = evolve(s)?;
    let rows = s.outputs.trajectory.then(|| {
        traj.pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| k % s.outputs.stride == 0 || *k == s.grid.steps)
            .map(|(k, p)| SampleRow {
                t: s.grid.time(k),
                state: p.state.iter().map(|&z| z.into()).collect(),
                dual: p.dual.iter().map(|&z| z.into()).collect(),
                binorm_defect: (p.overlap() - c(1.0, 0.0)).norm(),
            })
            .collect()
    });
    Ok(ResultBundle {
        operation: Command::Evolve.as_str(),
        resolution: Resolution::grid(&s.grid),
        output: Output::Evolve(EvolveOutput {
            dimension: s.dim(),
            max_binorm_drift: traj.max_binorm_drift,
            final_binorm_defect: (traj.last().overlap() - c(1.0, 0.0)).norm(),
            stride: s.outputs.stride,
            trajectory: rows,
        }),
    })
}

fn scenario_anchor(s: &Scenario, endpoints: &[&StatePair], default_auto: bool) -> Result<Option<AnchorState>> {
    let tol = s.tolerances.tol_bio;
    match &s.anchor {
        AnchorSpec::Literal(p) => AnchorState::new(p.resolve()?, endpoints, tol).map(Some),
        AnchorSpec::Auto => auto_anchor(endpoints, s.seed, s.tolerances.anchor_budget, tol).map(Some),
        AnchorSpec::Absent if default_auto => {
            auto_anchor(endpoints, s.seed, s.tolerances.anchor_budget, tol).map(Some)
        }
        AnchorSpec::Absent => Ok(None),
    }
}

struct PhaseRun {
    result: PhaseResult,
    anchor: Option<AnchorState>,
    fallback: Option<String>,
}

/// Direct formula first; on biorthogonal endpoints, the anchored one with
/// the scenario's anchor. A `forced` anchor skips the direct attempt.
fn phase_of(s: &Scenario, traj: &Trajectory, forced: Option<&StatePair>) -> Result<PhaseRun> {
    let tol = s.tolerances.tol_bio;
    let endpoints = [traj.initial(), traj.last()];
    if let Some(pair) = forced {
        let anchor = AnchorState::new(pair.clone(), &endpoints, tol)?;
        let result = geometric_phase_anchored(traj, &s.path, &anchor, tol)?;
        return Ok(PhaseRun {
            result,
            anchor: Some(anchor),
            fallback: None,
        });
    }
    match geometric_phase(traj, &s.path, tol) {
        Ok(result) => Ok(PhaseRun {
            result,
            anchor: None,
            fallback: None,
        }),
        Err(e @ Error::Biorthogonal { .. }) => {
            let Some(anchor) = scenario_anchor(s, &endpoints, false)? else {
                return Err(e);
            };
            let result = geometric_phase_anchored(traj, &s.path, &anchor, tol)?;
            Ok(PhaseRun {
                result,
                anchor: Some(anchor),
                fallback: Some(e.to_string()),
            })
        }
        Err(e) => Err(e),
    }
}

fn run_phase(s: &Scenario, forced: Option<&StatePair>) -> Result<ResultBundle> {
    spectral_gap_guard(s)?;
    let traj = evolve(s)?;
    let run = phase_of(s, &traj, forced)?;
    Ok(ResultBundle {
        operation: Command::Phase.as_str(),
        resolution: Resolution::grid(&s.grid),
        output: Output::Phase(PhaseOutput::new(&run.result, run.anchor.as_ref(), run.fallback)),
    })
}

fn run_offdiag(s: &Scenario, forced: Option<&StatePair>) -> Result<ResultBundle> {
    let dim = s.dim();
    let [j, k] = s.offdiag.unwrap_or([0, 1]);
    if dim < 2 || j >= dim || k >= dim || j == k {
        return Err(Error::parse(
            "offdiag.states",
            format!("need two distinct eigenstate indices below {dim}, got [{j}, {k}]"),
        ));
    }
    spectral_gap_guard(s)?;
    let t0 = s.grid.t0;
    let h0 = s.path.at(t0);
    let frame = build_frame_with(&h0, s.tolerances.gap_for(&h0), t0)?;
    let start = |n: usize| {
        let p = frame.pair(n);
        StatePair::with_rescaled_dual(p.state, p.dual)
    };
    let traj_j = evolve_pair_with(&s.path, &start(j)?, &s.grid, s.tolerances.drift_fail)?;
    let traj_k = evolve_pair_with(&s.path, &start(k)?, &s.grid, s.tolerances.drift_fail)?;
    let endpoints = [traj_j.initial(), traj_j.last(), traj_k.initial(), traj_k.last()];
    let tol = s.tolerances.tol_bio;
    let anchor = match forced {
        Some(pair) => AnchorState::new(pair.clone(), &endpoints, tol)?,
        None => scenario_anchor(s, &endpoints, true)?.expect("auto anchor requested"),
    };
    let od = offdiagonal_phase(&traj_j, &traj_k, &s.path, &anchor, tol)?;
    let single = |r: &PhaseResult| PhaseOutput::new(r, Some(&anchor), None);
    Ok(ResultBundle {
        operation: Command::Offdiag.as_str(),
        resolution: Resolution::grid(&s.grid),
        output: Output::Offdiag(OffdiagOutput {
            states: [j, k],
            eigenvalues_t0: [frame.eigenvalues[j].into(), frame.eigenvalues[k].into()],
            gamma_jk: od.value.into(),
            brackets: [od.brackets[0].into(), od.brackets[1].into()],
            singles: [single(&od.singles[0]), single(&od.singles[1])],
            anchor_used: (&anchor.pair).into(),
            anchor_min_overlap: anchor.min_overlap,
        }),
    })
}

fn run_geodesic(s: &Scenario) -> Result<ResultBundle> {
    let g = s
        .geodesic
        .as_ref()
        .ok_or_else(|| Error::parse("geodesic", "the geodesic command needs a geodesic section"))?;
    let tol = s.tolerances.tol_bio;
    let (p1, p2) = (g.start.resolve()?, g.end.resolve()?);
    let geo = geodesic_between(&p1, &p2, g.samples, tol)?;
    let line = connection_line_integral(&geo.theta_gauged())?;
    Ok(ResultBundle {
        operation: Command::Geodesic.as_str(),
        resolution: Resolution::samples(g.samples),
        output: Output::Geodesic(GeodesicOutput {
            start: (&p1).into(),
            end: (&p2).into(),
            theta: geo.theta.into(),
            line_integral: line.into(),
            theorem_discrepancy: distance_mod_pi(line.value, geo.theta.value),
            max_in_phase_residual: geo.max_in_phase_residual(tol)?,
            geodesic_residual: geodesic_residual(&geo)?,
            path_length: path_length(&geo)?.into(),
        }),
    })
}

fn run_polygon(s: &Scenario) -> Result<ResultBundle> {
    let p = s
        .polygon
        .as_ref()
        .ok_or_else(|| Error::parse("polygon", "the polygon command needs a polygon section"))?;
    let vertices = p
        .vertices
        .iter()
        .map(|v| v.resolve())
        .collect::<Result<Vec<_>>>()?;
    let phase = polygon_phase(&vertices, p.closed, s.tolerances.tol_bio)?;
    Ok(ResultBundle {
        operation: Command::Polygon.as_str(),
        resolution: Resolution::samples(vertices.len()),
        output: Output::Polygon(PolygonOutput {
            closed: p.closed,
            vertices: vertices.len(),
            phase: phase.into(),
        }),
    })
}

fn random_gauge(rng: &mut ChaCha8Rng) -> GaugeTransform {
    GaugeTransform::new(c(rng.random_range(-PI..PI), rng.random_range(-0.5..0.5)))
}

fn is_skippable(e: &Error) -> bool {
    matches!(
        e,
        Error::Biorthogonal { .. } | Error::Anchor { .. } | Error::DegeneratePath { .. }
    )
}

/// The check suite at the scenario's own resolution.
fn run_check(s: &Scenario) -> Result<ResultBundle> {
    let tol = s.tolerances.tol_bio;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut checks = Vec::new();

    let gap = spectral_gap_guard(s)?;
    checks.push(CheckRow::at_least("spectral_gap", gap.min_gap, gap.tol_gap));

    let h0 = s.path.at(s.grid.t0);
    let frame = build_frame_with(&h0, s.tolerances.gap_for(&h0), s.grid.t0)?;
    checks.push(CheckRow::at_most(
        "frame_biorthonormality",
        frame.biorthonormality_residual(),
        FRAME_RESIDUAL_MAX,
    ));
    checks.push(CheckRow::at_most(
        "frame_completeness",
        frame.completeness_residual(),
        FRAME_RESIDUAL_MAX,
    ));

    let traj = evolve(s)?;
    let drift = traj.max_binorm_drift;
    checks.push(CheckRow::at_most("binormalization_drift", drift, DRIFT_MAX));
    if drift < DRIFT_RATIO_FLOOR {
        checks.push(CheckRow::skipped(
            "drift_refinement",
            format!("drift {drift:e} is at roundoff level"),
        ));
    } else {
        let fine = evolve(&s.with_steps(2 * s.grid.steps)?)?;
        checks.push(CheckRow::at_least(
            "drift_refinement",
            drift / fine.max_binorm_drift,
            DRIFT_RATIO_MIN,
        ));
    }

    let base = match phase_of(s, &traj, None) {
        Ok(run) => Some(run),
        Err(e) if is_skippable(&e) => {
            checks.push(CheckRow::skipped("gauge_invariance", e.to_string()));
            checks.push(CheckRow::skipped("hermitian_reduction", e.to_string()));
            None
        }
        Err(e) => return Err(e),
    };
    if let Some(base) = &base {
        let gauge = random_gauge(&mut rng);
        let moved = Scenario {
            initial: apply_gauge(&s.initial, &gauge),
            ..s.clone()
        };
        let moved_traj = evolve(&moved)?;
        let forced = base.anchor.as_ref().map(|a| &a.pair);
        let other = phase_of(&moved, &moved_traj, forced)?;
        checks.push(CheckRow::at_most(
            "gauge_invariance",
            distance_mod_pi(base.result.geometric, other.result.geometric),
            GAUGE_MAX,
        ));

        if hermitian_self_dual(s) {
            checks.push(CheckRow::at_most(
                "hermitian_reduction",
                base.result.geometric.im.abs(),
                HERMITIAN_IMAG_MAX,
            ));
        } else {
            checks.push(CheckRow::skipped(
                "hermitian_reduction",
                "H(t) is not Hermitian on the grid or the initial dual is not the state",
            ));
        }
    }

    let first = traj.initial();
    let last = StatePair::with_rescaled_dual(traj.last().state.clone(), traj.last().dual.clone())?;
    match geodesic_between(first, &last, DEFAULT_GEODESIC_SAMPLES, tol) {
        Ok(geo) => {
            let line = connection_line_integral(&geo.theta_gauged())?;
            checks.push(CheckRow::at_most(
                "geodesic_theorem",
                distance_mod_pi(line.value, geo.theta.value),
                THEOREM_MAX,
            ));
            checks.push(CheckRow::at_most(
                "geodesic_in_phase",
                geo.max_in_phase_residual(tol)?,
                IN_PHASE_MAX,
            ));
        }
        Err(e) if is_skippable(&e) => {
            checks.push(CheckRow::skipped("geodesic_theorem", e.to_string()));
            checks.push(CheckRow::skipped("geodesic_in_phase", e.to_string()));
        }
        Err(e) => return Err(e),
    }

    let mid = &traj.pairs[s.grid.steps / 2];
    let composed = anchored_pancharatnam(first, traj.last(), mid, tol).and_then(|anchored| {
        let a = pancharatnam_phase(first, mid, tol)?;
        let b = pancharatnam_phase(mid, traj.last(), tol)?;
        Ok(distance_mod_pi(anchored.value, a.value + b.value))
    });
    match composed {
        Ok(d) => checks.push(CheckRow::at_most("anchored_composition", d, COMPOSITION_MAX)),
        Err(e) if is_skippable(&e) => {
            checks.push(CheckRow::skipped("anchored_composition", e.to_string()))
        }
        Err(e) => return Err(e),
    }

    let n = s.grid.steps;
    let mut picks = vec![0, n / 3, 2 * n / 3, n];
    picks.dedup();
    let vertices: Vec<StatePair> = picks.iter().map(|&k| traj.pairs[k].clone()).collect();
    let gauged: Vec<StatePair> = vertices
        .iter()
        .map(|v| apply_gauge(v, &random_gauge(&mut rng)))
        .collect();
    let polygon = polygon_phase(&vertices, true, tol)
        .and_then(|a| Ok(distance_mod_pi(a.value, polygon_phase(&gauged, true, tol)?.value)));
    match polygon {
        Ok(d) => checks.push(CheckRow::at_most("polygon_gauge_invariance", d, POLYGON_GAUGE_MAX)),
        Err(e) if is_skippable(&e) => {
            checks.push(CheckRow::skipped("polygon_gauge_invariance", e.to_string()))
        }
        Err(e) => return Err(e),
    }

    let failed = checks.iter().filter(|r| r.status == CheckStatus::Fail).count();
    Ok(ResultBundle {
        operation: Command::Check.as_str(),
        resolution: Resolution::grid(&s.grid),
        output: Output::Check(CheckOutput { checks, failed }),
    })
}

/// `H(t)` Hermitian at every sample and the initial dual a positive
/// multiple of the state.
fn hermitian_self_dual(s: &Scenario) -> bool {
    let hermitian = s.grid.times().into_iter().all(|t| {
        let h = s.path.at(t);
        frobenius_norm(&(&h - h.adjoint())) <= 1e-12 * frobenius_norm(&h).max(1.0)
    });
    let psi = &s.initial.state;
    let scaled = &s.initial.dual * c(psi.norm_squared(), 0.0);
    hermitian && (scaled - psi).norm() <= 1e-12 * psi.norm()
}

/// Self-dual anchor `a_k = e^{ikφ}/√N`.
pub fn phase_family_anchor(dim: usize, phi: f64) -> Result<StatePair> {
    let v = ComplexVector::from_iterator(
        dim,
        (0..dim).map(|k| c(0.0, k as f64 * phi).exp()),
    );
    StatePair::self_dual(v)
}

fn sweep_point(s: &Scenario, parameter: SweepParameter, v: f64) -> Result<(Scenario, Option<StatePair>)> {
    match parameter {
        SweepParameter::TimeScale => {
            let path = s.path.time_scaled(v)?;
            let steps = (s.grid.steps as f64 * v).round().max(1.0) as usize;
            let grid = TimeGrid::new(s.grid.t0 * v, s.grid.t1 * v, steps)?;
            Ok((s.with_path(path, grid)?, None))
        }
        SweepParameter::TermScale(j) => {
            Ok((s.with_path(s.path.with_term_scale(j, v)?, s.grid)?, None))
        }
        SweepParameter::AnchorPhase => Ok((s.clone(), Some(phase_family_anchor(s.dim(), v)?))),
    }
}

/// Independent points run concurrently; rows come back in input order.
fn run_sweep(s: &Scenario) -> Result<ResultBundle> {
    let spec = s
        .sweep
        .as_ref()
        .ok_or_else(|| Error::parse("sweep", "the sweep command needs a sweep section"))?;
    let rows = spec
        .values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| {
            let outcome = sweep_point(s, spec.parameter, value)
                .and_then(|(variant, forced)| run_with(spec.command, &variant, forced.as_ref()));
            match outcome {
                Ok(bundle) => {
                    let (headline, branch_offset) = bundle.headline();
                    SweepRow {
                        index,
                        value,
                        status: "ok",
                        headline: Some(headline),
                        branch_offset,
                        result: Some(bundle),
                        error: None,
                    }
                }
                Err(e) => SweepRow {
                    index,
                    value,
                    status: "error",
                    headline: None,
                    branch_offset: None,
                    result: None,
                    error: Some(ErrorRecord::new(spec.command.as_str(), &e)),
                },
            }
        })
        .collect::<Vec<_>>();
    Ok(ResultBundle {
        operation: Command::Sweep.as_str(),
        resolution: Resolution::samples(rows.len()),
        output: Output::Sweep(SweepOutput {
            command: spec.command.as_str(),
            parameter: spec.parameter.as_str(),
            rows,
        }),
    })
}
