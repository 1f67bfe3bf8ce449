//! Interference, the complex Pancharatnam connection and phase, covariant
//! derivatives, the ray-space metric, geodesics and polygon phases.

use std::f64::consts::PI;

use crate::biorthogonal::{binorm_defect, StatePair, BINORM_TOL};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{c, Complex64, ComplexVector};
use crate::quadrature::{derivative, simpson};

/// Overlaps at or below this magnitude count as biorthogonal.
pub const DEFAULT_TOL_BIO: f64 = 1e-6;

/// A complex phase together with the number of π multiples separating it from
/// its principal representative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseValue {
    pub value: Complex64,
    pub branch_offset: i64,
}

impl PhaseValue {
    /// Wraps an arbitrary value, recording its offset from the principal branch.
    pub fn new(value: Complex64) -> Self {
        let principal = principal_real(value.re);
        Self {
            value,
            branch_offset: ((value.re - principal) / PI).round() as i64,
        }
    }

    pub fn zero() -> Self {
        Self::new(c(0.0, 0.0))
    }

    /// The same phase reduced to real part in `(−π/2, π/2]`.
    pub fn principal(&self) -> Complex64 {
        c(principal_real(self.value.re), self.value.im)
    }

    /// Distance to `other` on the circle of circumference π.
    pub fn distance_mod_pi(&self, other: &PhaseValue) -> f64 {
        distance_mod_pi(self.value, other.value)
    }
}

/// `|a − b|` after shifting the real part of the difference into `(−π/2, π/2]`.
pub fn distance_mod_pi(a: Complex64, b: Complex64) -> f64 {
    let d = a - b;
    c(principal_real(d.re), d.im).norm()
}

fn principal_real(x: f64) -> f64 {
    let r = x - PI * (x / PI).round();
    if r <= -PI / 2.0 {
        r + PI
    } else if r > PI / 2.0 {
        r - PI
    } else {
        r
    }
}

/// Principal `−(i/2)·log(ratio)`; a ratio on the negative real axis gives `+π/2`.
pub fn half_log_phase(ratio: Complex64) -> Complex64 {
    let arg = if ratio.im == 0.0 && ratio.re < 0.0 {
        PI
    } else {
        ratio.arg()
    };
    c(0.5 * arg, -0.5 * ratio.norm().ln())
}

/// Principal square root matching the tie-break of [`half_log_phase`].
fn principal_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re < 0.0 {
        c(0.0, (-z.re).sqrt())
    } else {
        z.sqrt()
    }
}

/// Parameterized samples of a curve of state pairs.
pub trait PairSamples {
    fn pairs(&self) -> &[StatePair];
    /// Parameter value of the first sample.
    fn origin(&self) -> f64;
    fn spacing(&self) -> f64;

    fn parameter(&self, index: usize) -> f64 {
        self.origin() + index as f64 * self.spacing()
    }
}

impl PairSamples for Trajectory {
    fn pairs(&self) -> &[StatePair] {
        &self.pairs
    }

    fn origin(&self) -> f64 {
        self.grid.t0
    }

    fn spacing(&self) -> f64 {
        self.grid.spacing()
    }
}

/// Pairs sampled uniformly on `[s0, s1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub s0: f64,
    pub s1: f64,
    pub pairs: Vec<StatePair>,
}

impl SampledCurve {
    pub fn new(s0: f64, s1: f64, pairs: Vec<StatePair>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::Grid(format!(
                "a sampled curve needs at least 2 samples, got {}",
                pairs.len()
            )));
        }
        if !(s0.is_finite() && s1.is_finite() && s1 > s0) {
            return Err(Error::Grid(format!("need s1 > s0, got [{s0}, {s1}]")));
        }
        let dim = pairs[0].dim();
        if let Some(p) = pairs.iter().find(|p| p.dim() != dim) {
            return Err(Error::dimension("curve sample", dim, p.dim()));
        }
        Ok(Self { s0, s1, pairs })
    }

    /// Samples `f` at `n` equally spaced points of `[s0, s1]`.
    pub fn from_fn(
        n: usize,
        s0: f64,
        s1: f64,
        f: impl Fn(f64) -> Result<StatePair>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Grid(format!("a sampled curve needs at least 2 samples, got {n}")));
        }
        let h = (s1 - s0) / (n - 1) as f64;
        let pairs = (0..n)
            .map(|k| f(if k == n - 1 { s1 } else { s0 + k as f64 * h }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(s0, s1, pairs)
    }

    /// The same samples traversed backwards, `s ↦ s0 + s1 − s`.
    pub fn reversed(&self) -> Self {
        Self {
            s0: self.s0,
            s1: self.s1,
            pairs: self.pairs.iter().rev().cloned().collect(),
        }
    }
}

impl From<&Trajectory> for SampledCurve {
    fn from(traj: &Trajectory) -> Self {
        Self {
            s0: traj.grid.t0,
            s1: traj.grid.t1,
            pairs: traj.pairs.clone(),
        }
    }
}

impl PairSamples for SampledCurve {
    fn pairs(&self) -> &[StatePair] {
        &self.pairs
    }

    fn origin(&self) -> f64 {
        self.s0
    }

    fn spacing(&self) -> f64 {
        (self.s1 - self.s0) / (self.pairs.len() - 1) as f64
    }
}

/// `⟨ψ̃₁e^{−iθ} + ψ̃₂ | ψ₁e^{iθ} + ψ₂⟩`.
pub fn interference_intensity(p1: &StatePair, p2: &StatePair, theta: Complex64) -> Result<Complex64> {
    check_dims(p1, p2)?;
    let i = c(0.0, 1.0);
    Ok(p1.overlap()
        + p2.overlap()
        + (i * theta).exp() * p2.dual.dotc(&p1.state)
        + (-i * theta).exp() * p1.dual.dotc(&p2.state))
}

fn check_dims(p1: &StatePair, p2: &StatePair) -> Result<()> {
    if p1.dim() != p2.dim() {
        return Err(Error::dimension("state pair", p1.dim(), p2.dim()));
    }
    Ok(())
}

/// `⟨ψ̃₁|ψ₂⟩` and `⟨ψ̃₂|ψ₁⟩`, rejecting biorthogonal pairs.
fn cross_overlaps(p1: &StatePair, p2: &StatePair, tol_bio: f64) -> Result<(Complex64, Complex64)> {
    check_dims(p1, p2)?;
    let a = p1.dual.dotc(&p2.state);
    let b = p2.dual.dotc(&p1.state);
    for (z, name) in [(a, "<dual1|state2>"), (b, "<dual2|state1>")] {
        if !(z.norm() > tol_bio) {
            return Err(Error::Biorthogonal {
                overlap: name.into(),
                magnitude: z.norm(),
                tol_bio,
            });
        }
    }
    Ok((a, b))
}

/// `√(⟨ψ̃₁|ψ₂⟩/⟨ψ̃₂|ψ₁⟩) − 1` with the principal root; zero when the pairs are
/// in phase.
pub fn in_phase_residual(p1: &StatePair, p2: &StatePair, tol_bio: f64) -> Result<Complex64> {
    let (a, b) = cross_overlaps(p1, p2, tol_bio)?;
    Ok(principal_sqrt(a / b) - c(1.0, 0.0))
}

/// Principal `θ = −(i/2)·log(⟨ψ̃₁|ψ₂⟩/⟨ψ̃₂|ψ₁⟩)`.
pub fn pancharatnam_phase(p1: &StatePair, p2: &StatePair, tol_bio: f64) -> Result<PhaseValue> {
    let (a, b) = cross_overlaps(p1, p2, tol_bio)?;
    Ok(PhaseValue::new(half_log_phase(a / b)))
}

/// `A(s) = ⟨ψ̃(s)|dψ/ds⟩` at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionSample {
    pub s: f64,
    pub value: Complex64,
}

fn states(curve: &impl PairSamples) -> Vec<&ComplexVector> {
    curve.pairs().iter().map(|p| &p.state).collect()
}

fn duals(curve: &impl PairSamples) -> Vec<&ComplexVector> {
    curve.pairs().iter().map(|p| &p.dual).collect()
}

fn check_index(curve: &impl PairSamples, index: usize) -> Result<()> {
    let n = curve.pairs().len();
    if n < 3 {
        return Err(Error::Grid(format!(
            "finite differences need at least 3 samples, got {n}"
        )));
    }
    if index >= n {
        return Err(Error::Grid(format!("sample index {index} out of range 0..{n}")));
    }
    Ok(())
}

pub fn connection_sample(curve: &impl PairSamples, index: usize) -> Result<ConnectionSample> {
    check_index(curve, index)?;
    let d = derivative(&states(curve), index, curve.spacing())?;
    Ok(ConnectionSample {
        s: curve.parameter(index),
        value: curve.pairs()[index].dual.dotc(&d),
    })
}

/// Dual connection `Ã(s) = ⟨ψ(s)|dψ̃/ds⟩`.
pub fn dual_connection_sample(curve: &impl PairSamples, index: usize) -> Result<ConnectionSample> {
    check_index(curve, index)?;
    let d = derivative(&duals(curve), index, curve.spacing())?;
    Ok(ConnectionSample {
        s: curve.parameter(index),
        value: curve.pairs()[index].state.dotc(&d),
    })
}

/// `Dψ/ds = dψ/ds − A(s)ψ`.
pub fn covariant_derivative(curve: &impl PairSamples, index: usize) -> Result<ComplexVector> {
    check_index(curve, index)?;
    let pair = &curve.pairs()[index];
    let d = derivative(&states(curve), index, curve.spacing())?;
    let a = pair.dual.dotc(&d);
    Ok(d - &pair.state * a)
}

/// `D̃ψ̃/ds = dψ̃/ds − Ã(s)ψ̃`.
pub fn dual_covariant_derivative(curve: &impl PairSamples, index: usize) -> Result<ComplexVector> {
    check_index(curve, index)?;
    let pair = &curve.pairs()[index];
    let d = derivative(&duals(curve), index, curve.spacing())?;
    let a = pair.state.dotc(&d);
    Ok(d - &pair.dual * a)
}

/// `⟨D̃ψ̃/ds|Dψ/ds⟩`, the complex line element per unit `ds²`.
pub fn metric_element(curve: &impl PairSamples, index: usize) -> Result<Complex64> {
    let dpsi = covariant_derivative(curve, index)?;
    let ddual = dual_covariant_derivative(curve, index)?;
    Ok(ddual.dotc(&dpsi))
}

/// `∫ √(⟨D̃ψ̃|Dψ⟩) ds` with the principal root.
pub fn path_length(curve: &impl PairSamples) -> Result<Complex64> {
    let n = curve.pairs().len();
    let roots = (0..n)
        .map(|k| metric_element(curve, k).map(principal_sqrt))
        .collect::<Result<Vec<_>>>()?;
    simpson(&roots, curve.spacing())
}

/// `−i ∫ A(s) ds`.
pub fn connection_line_integral(curve: &impl PairSamples) -> Result<PhaseValue> {
    let n = curve.pairs().len();
    let values = (0..n)
        .map(|k| connection_sample(curve, k).map(|a| a.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseValue::new(c(0.0, -1.0) * simpson(&values, curve.spacing())?))
}

/// Straight-line geodesic between two binormalized pairs, stored in the
/// parallel gauge (vanishing connection).
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub curve: SampledCurve,
    pub start: StatePair,
    pub end: StatePair,
    /// Principal phase between the endpoints.
    pub theta: PhaseValue,
}

impl GeodesicPath {
    pub fn samples(&self) -> &[StatePair] {
        &self.curve.pairs
    }

    /// Samples regauged by `ζ(s) = sθ`, so the last one coincides with the
    /// second endpoint itself.
    pub fn theta_gauged(&self) -> SampledCurve {
        let theta = self.theta.value;
        let i = c(0.0, 1.0);
        let n = self.curve.pairs.len();
        let pairs = self
            .curve
            .pairs
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let s = k as f64 / (n - 1) as f64;
                StatePair {
                    state: &p.state * (i * theta * s).exp(),
                    dual: &p.dual * (i * theta.conj() * s).exp(),
                }
            })
            .collect();
        SampledCurve {
            s0: 0.0,
            s1: 1.0,
            pairs,
        }
    }

    /// `max_s |q(s)|` of every sample against the first endpoint.
    pub fn max_in_phase_residual(&self, tol_bio: f64) -> Result<f64> {
        self.curve.pairs.iter().try_fold(0.0f64, |acc, p| {
            Ok(acc.max(in_phase_residual(&self.start, p, tol_bio)?.norm()))
        })
    }
}

impl PairSamples for GeodesicPath {
    fn pairs(&self) -> &[StatePair] {
        &self.curve.pairs
    }

    fn origin(&self) -> f64 {
        0.0
    }

    fn spacing(&self) -> f64 {
        self.curve.spacing()
    }
}

/// Builds the geodesic from `p1` to the ray of `p2` on `n` samples of `[0, 1]`.
///
/// The second endpoint is first rotated in phase with the first,
/// `φ₁ = e^{−iθ}ψ₂`, `φ̃₁ = e^{−iθ*}ψ̃₂`. State and dual are then interpolated
/// linearly and both divided by `√⟨φ̃(s)|φ(s)⟩` (the dual by its conjugate),
/// which keeps every sample binormalized and the connection identically zero.
pub fn geodesic_between(
    p1: &StatePair,
    p2: &StatePair,
    n: usize,
    tol_bio: f64,
) -> Result<GeodesicPath> {
    if n < 2 {
        return Err(Error::Grid(format!("a geodesic needs at least 2 samples, got {n}")));
    }
    for (p, which) in [(p1, "first"), (p2, "second")] {
        let defect = binorm_defect(p);
        if !(defect <= BINORM_TOL) {
            return Err(Error::Numerical {
                operation: "geodesic_between".into(),
                message: format!("{which} endpoint not binormalized (defect {defect:e})"),
            });
        }
    }
    let principal = pancharatnam_phase(p1, p2, tol_bio)?;
    let i = c(0.0, 1.0);
    // θ and θ + π both put the endpoints in phase; take the one with
    // Re⟨ψ̃₁|φ(1)⟩ ≥ 0 so the chord does not pass through the origin.
    let w0 = p1.dual.dotc(&(&p2.state * (-i * principal.value).exp()));
    let theta = if w0.re < 0.0 {
        PhaseValue::new(principal.value + c(PI, 0.0))
    } else {
        principal
    };
    let phi1 = &p2.state * (-i * theta.value).exp();
    let phi1_dual = &p2.dual * (-i * theta.value.conj()).exp();

    let mut root_prev = c(1.0, 0.0);
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let s = k as f64 / (n - 1) as f64;
        let state = &p1.state * c(1.0 - s, 0.0) + &phi1 * c(s, 0.0);
        let dual = &p1.dual * c(1.0 - s, 0.0) + &phi1_dual * c(s, 0.0);
        let d = dual.dotc(&state);
        if !(d.norm() > tol_bio) || !(p1.dual.dotc(&state).norm() > tol_bio) {
            return Err(Error::DegeneratePath { s });
        }
        // continuous branch of √d starting from √1 = 1
        let mut root = d.sqrt();
        if (root - root_prev).norm() > (root + root_prev).norm() {
            root = -root;
        }
        root_prev = root;
        pairs.push(StatePair {
            state: state / root,
            dual: dual / root.conj(),
        });
    }
    Ok(GeodesicPath {
        curve: SampledCurve {
            s0: 0.0,
            s1: 1.0,
            pairs,
        },
        start: p1.clone(),
        end: p2.clone(),
        theta,
    })
}

/// Largest `‖D²ψ/ds²‖` or `‖D̃²ψ̃/ds²‖` over interior samples.
pub fn geodesic_residual(curve: &impl PairSamples) -> Result<f64> {
    let n = curve.pairs().len();
    if n < 5 {
        return Err(Error::Grid(format!(
            "geodesic residual needs at least 5 samples, got {n}"
        )));
    }
    let h = curve.spacing();
    let first = (0..n)
        .map(|k| Ok((covariant_derivative(curve, k)?, dual_covariant_derivative(curve, k)?)))
        .collect::<Result<Vec<_>>>()?;
    let dpsi: Vec<_> = first.iter().map(|(a, _)| a).collect();
    let ddual: Vec<_> = first.iter().map(|(_, b)| b).collect();
    let mut worst = 0.0f64;
    for k in 1..n - 1 {
        let a = connection_sample(curve, k)?.value;
        let a_dual = dual_connection_sample(curve, k)?.value;
        let second = derivative(&dpsi, k, h)? - dpsi[k] * a;
        let second_dual = derivative(&ddual, k, h)? - ddual[k] * a_dual;
        worst = worst.max(second.norm()).max(second_dual.norm());
    }
    Ok(worst)
}

/// Sum of edge phases `θ(v_k, v_{k+1})`, including the closing edge when
/// `closed`.
pub fn polygon_phase(vertices: &[StatePair], closed: bool, tol_bio: f64) -> Result<PhaseValue> {
    if vertices.len() < 2 {
        return Err(Error::Grid(format!(
            "a polygon needs at least 2 vertices, got {}",
            vertices.len()
        )));
    }
    let n = vertices.len();
    let edges = if closed { n } else { n - 1 };
    let mut total = c(0.0, 0.0);
    for k in 0..edges {
        let (a, b) = (&vertices[k], &vertices[(k + 1) % n]);
        let edge = pancharatnam_phase(a, b, tol_bio).map_err(|e| match e {
            Error::Biorthogonal {
                overlap,
                magnitude,
                tol_bio,
            } => Error::Biorthogonal {
                overlap: format!("edge {k}->{}: {overlap}", (k + 1) % n),
                magnitude,
                tol_bio,
            },
            other => other,
        })?;
        total += edge.value;
    }
    Ok(PhaseValue::new(total))
}

/// Continuum limit of the closed polygon phase along a sampled curve:
/// `−(i/2)·log(⟨ψ̃(1)|ψ(0)⟩/⟨ψ̃(0)|ψ(1)⟩) − i∫⟨ψ̃|dψ/ds⟩ds`.
pub fn polygon_limit_phase(curve: &impl PairSamples, tol_bio: f64) -> Result<PhaseValue> {
    let pairs = curve.pairs();
    let (first, last) = (&pairs[0], &pairs[pairs.len() - 1]);
    let closing = pancharatnam_phase(last, first, tol_bio)?;
    let line = connection_line_integral(curve)?;
    Ok(PhaseValue::new(closing.value + line.value))
}
