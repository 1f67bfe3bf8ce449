//! Geometric phases of trajectories: the direct formula for
//! non-biorthogonal endpoints, the anchored formula that also covers
//! biorthogonal ones, and the off-diagonal phase of two swapped states.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::biorthogonal::StatePair;
use crate::dynamics::{dynamical_phase, Hamiltonian, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{half_log_phase, PhaseValue};
use crate::linalg::{basis, c, Complex64, ComplexVector};

/// Default number of random candidates tried by [`auto_anchor`].
pub const DEFAULT_ANCHOR_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    Direct,
    Anchored,
}

impl PhaseMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseMode::Direct => "direct",
            PhaseMode::Anchored => "anchored",
        }
    }
}

/// `γ_geo = θ_GP − γ_dyn` together with its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    pub mode: PhaseMode,
    pub pancharatnam: PhaseValue,
    /// `γ_dyn = −∫⟨ψ̃|H|ψ⟩dt`
    pub dynamical: Complex64,
    pub geometric: Complex64,
    pub anchor_used: Option<StatePair>,
    /// `⟨ψ̃(0)|ψ(t)⟩`
    pub endpoint_overlap: Complex64,
    /// Anchored minus direct phase, reduced modulo π; only when both exist.
    pub direct_discrepancy: Option<Complex64>,
}

impl PhaseResult {
    fn assemble(
        mode: PhaseMode,
        pancharatnam: PhaseValue,
        dynamical: Complex64,
        traj: &Trajectory,
    ) -> Self {
        let endpoint_overlap = traj.initial().dual.dotc(&traj.last().state);
        Self {
            mode,
            pancharatnam,
            dynamical,
            geometric: pancharatnam.value - dynamical,
            anchor_used: None,
            endpoint_overlap,
            direct_discrepancy: None,
        }
    }
}

/// An auxiliary pair non-biorthogonal to every state it has to bridge.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorState {
    pub pair: StatePair,
    /// Smallest `|⟨ẽ|a⟩|` or `|⟨ã|e⟩|` over the endpoints `e` it was checked against.
    pub min_overlap: f64,
}

impl AnchorState {
    /// Validates `pair` against `endpoints`.
    pub fn new(pair: StatePair, endpoints: &[&StatePair], tol_bio: f64) -> Result<Self> {
        let mut min_overlap = f64::INFINITY;
        for (k, e) in endpoints.iter().enumerate() {
            if e.dim() != pair.dim() {
                return Err(Error::dimension("anchor", e.dim(), pair.dim()));
            }
            for (z, name) in [
                (e.dual.dotc(&pair.state), format!("<endpoint{k}~|a>")),
                (pair.dual.dotc(&e.state), format!("<a~|endpoint{k}>")),
            ] {
                if !(z.norm() > tol_bio) {
                    return Err(Error::Anchor {
                        overlap: name,
                        magnitude: z.norm(),
                        tol_bio,
                    });
                }
                min_overlap = min_overlap.min(z.norm());
            }
        }
        Ok(Self { pair, min_overlap })
    }
}

fn min_overlap_against(candidate: &StatePair, endpoints: &[&StatePair]) -> f64 {
    endpoints
        .iter()
        .map(|e| {
            e.dual
                .dotc(&candidate.state)
                .norm()
                .min(candidate.dual.dotc(&e.state).norm())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Picks the candidate with the largest minimum overlap against all
/// endpoints: basis vectors, discrete Fourier vectors (the first one is the
/// uniform superposition), then `budget` seeded random unit vectors, each
/// paired with itself.
pub fn auto_anchor(
    endpoints: &[&StatePair],
    seed: u64,
    budget: usize,
    tol_bio: f64,
) -> Result<AnchorState> {
    let Some(first) = endpoints.first() else {
        return Err(Error::AnchorSearch {
            best: 0.0,
            draws: 0,
            tol_bio,
        });
    };
    let n = first.dim();
    if let Some(e) = endpoints.iter().find(|e| e.dim() != n) {
        return Err(Error::dimension("anchor endpoints", n, e.dim()));
    }

    let norm = 1.0 / (n as f64).sqrt();
    let mut candidates: Vec<ComplexVector> = (0..n).map(|k| basis(n, k)).collect();
    for k in 0..n {
        candidates.push(ComplexVector::from_fn(n, |j, _| {
            c(0.0, 2.0 * PI * (j * k) as f64 / n as f64).exp() * norm
        }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let v = ComplexVector::from_fn(n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        if v.norm() > 1e-3 {
            candidates.push(&v / c(v.norm(), 0.0));
        }
    }

    let mut best: Option<(f64, StatePair)> = None;
    for v in candidates {
        let pair = StatePair {
            state: v.clone(),
            dual: v,
        };
        let score = min_overlap_against(&pair, endpoints);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, pair));
        }
    }
    let (score, pair) = best.expect("at least the basis candidates exist");
    if !(score > tol_bio) {
        return Err(Error::AnchorSearch {
            best: score,
            draws: budget,
            tol_bio,
        });
    }
    Ok(AnchorState {
        pair,
        min_overlap: score,
    })
}

/// Principal `θ_GP(0,t)` continued along the trajectory.
///
/// Each sample contributes the principal value of
/// `−(i/2)·log(⟨ψ̃(0)|ψ(t_k)⟩/⟨ψ̃(t_k)|ψ(0)⟩)`, shifted by the multiple of π that
/// keeps it closest to the previous one. Samples whose overlaps fall below
/// `tol_bio` are stepped over.
pub fn unwrapped_pancharatnam(traj: &Trajectory, tol_bio: f64) -> Result<PhaseValue> {
    let start = traj.initial();
    let last = traj.pairs.len() - 1;
    let mut re = 0.0;
    let mut im = 0.0;
    for (k, pair) in traj.pairs.iter().enumerate().skip(1) {
        let a = start.dual.dotc(&pair.state);
        let b = pair.dual.dotc(&start.state);
        if !(a.norm() > tol_bio && b.norm() > tol_bio) {
            if k == last {
                let (overlap, magnitude) = if a.norm() <= b.norm() {
                    ("<dual(0)|state(t)>", a.norm())
                } else {
                    ("<dual(t)|state(0)>", b.norm())
                };
                return Err(Error::Biorthogonal {
                    overlap: format!("{overlap}; use the anchored formula"),
                    magnitude,
                    tol_bio,
                });
            }
            continue;
        }
        let p = half_log_phase(a / b);
        re = p.re + PI * ((re - p.re) / PI).round();
        im = p.im;
    }
    Ok(PhaseValue::new(c(re, im)))
}

/// Direct geometric phase of a trajectory whose endpoints are not biorthogonal.
pub fn geometric_phase(
    traj: &Trajectory,
    path: &impl Hamiltonian,
    tol_bio: f64,
) -> Result<PhaseResult> {
    let pancharatnam = unwrapped_pancharatnam(traj, tol_bio)?;
    let dynamical = dynamical_phase(traj, path)?.gamma;
    Ok(PhaseResult::assemble(
        PhaseMode::Direct,
        pancharatnam,
        dynamical,
        traj,
    ))
}

/// `−(i/2)·log[⟨ψ̃₀|a⟩⟨ã|ψ_t⟩ / (⟨ψ̃_t|a⟩⟨ã|ψ₀⟩)]` on the principal branch.
pub fn anchored_pancharatnam(
    start: &StatePair,
    end: &StatePair,
    anchor: &StatePair,
    tol_bio: f64,
) -> Result<PhaseValue> {
    let overlaps = [
        (start.dual.dotc(&anchor.state), "<dual(0)|a>"),
        (anchor.dual.dotc(&end.state), "<a~|state(t)>"),
        (end.dual.dotc(&anchor.state), "<dual(t)|a>"),
        (anchor.dual.dotc(&start.state), "<a~|state(0)>"),
    ];
    for (z, name) in &overlaps {
        if !(z.norm() > tol_bio) {
            return Err(Error::Anchor {
                overlap: (*name).into(),
                magnitude: z.norm(),
                tol_bio,
            });
        }
    }
    let ratio = overlaps[0].0 * overlaps[1].0 / (overlaps[2].0 * overlaps[3].0);
    Ok(PhaseValue::new(half_log_phase(ratio)))
}

/// Geometric phase bridged by an anchor; valid for biorthogonal endpoints.
pub fn geometric_phase_anchored(
    traj: &Trajectory,
    path: &impl Hamiltonian,
    anchor: &AnchorState,
    tol_bio: f64,
) -> Result<PhaseResult> {
    let pancharatnam =
        anchored_pancharatnam(traj.initial(), traj.last(), &anchor.pair, tol_bio)?;
    let dynamical = dynamical_phase(traj, path)?.gamma;
    let mut result = PhaseResult::assemble(PhaseMode::Anchored, pancharatnam, dynamical, traj);
    result.anchor_used = Some(anchor.pair.clone());
    if let Ok(direct) = unwrapped_pancharatnam(traj, tol_bio) {
        let d = pancharatnam.value - direct.value;
        result.direct_discrepancy = Some(c(d.re - PI * (d.re / PI).round(), d.im));
    }
    Ok(result)
}

/// Three-vertex bracket `γ[x(0), a, y(t)]`:
/// `−(i/2)·log[⟨x̃₀|a⟩⟨ã|y_t⟩⟨ỹ_t|x₀⟩ / (⟨ã|x₀⟩⟨ỹ_t|a⟩⟨x̃₀|y_t⟩)]`.
pub fn bracket_phase(
    x0: &StatePair,
    anchor: &StatePair,
    yt: &StatePair,
    tol_bio: f64,
) -> Result<PhaseValue> {
    let num = [
        (x0.dual.dotc(&anchor.state), "<x~(0)|a>"),
        (anchor.dual.dotc(&yt.state), "<a~|y(t)>"),
        (yt.dual.dotc(&x0.state), "<y~(t)|x(0)>"),
    ];
    let den = [
        (anchor.dual.dotc(&x0.state), "<a~|x(0)>"),
        (yt.dual.dotc(&anchor.state), "<y~(t)|a>"),
        (x0.dual.dotc(&yt.state), "<x~(0)|y(t)>"),
    ];
    for (z, name) in num.iter().chain(&den) {
        if !(z.norm() > tol_bio) {
            return Err(Error::Biorthogonal {
                overlap: (*name).into(),
                magnitude: z.norm(),
                tol_bio,
            });
        }
    }
    let ratio = num.iter().map(|x| x.0).product::<Complex64>()
        / den.iter().map(|x| x.0).product::<Complex64>();
    Ok(PhaseValue::new(half_log_phase(ratio)))
}

/// The off-diagonal phase and the four terms it is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct OffDiagonalPhase {
    pub value: PhaseValue,
    /// `γ[j(0), a, k(t)]` and `γ[k(0), a, j(t)]`
    pub brackets: [PhaseValue; 2],
    /// Anchored single-state phases of `j` and `k`.
    pub singles: [PhaseResult; 2],
}

/// `γ_jk = γ[j(0),a,k(t)] + γ[k(0),a,j(t)] + γ_j(0,t) + γ_k(0,t)`.
pub fn offdiagonal_phase(
    traj_j: &Trajectory,
    traj_k: &Trajectory,
    path: &impl Hamiltonian,
    anchor: &AnchorState,
    tol_bio: f64,
) -> Result<OffDiagonalPhase> {
    if traj_j.grid != traj_k.grid {
        return Err(Error::Grid(format!(
            "trajectories on different grids: {:?} vs {:?}",
            traj_j.grid, traj_k.grid
        )));
    }
    let rename = |which: &'static str| {
        move |e: Error| match e {
            Error::Anchor {
                overlap,
                magnitude,
                tol_bio,
            }
            | Error::Biorthogonal {
                overlap,
                magnitude,
                tol_bio,
            } => Error::Biorthogonal {
                overlap: format!("{which}: {overlap}"),
                magnitude,
                tol_bio,
            },
            other => other,
        }
    };
    let a = &anchor.pair;
    let b_jk = bracket_phase(traj_j.initial(), a, traj_k.last(), tol_bio).map_err(rename("[j(0),a,k(t)]"))?;
    let b_kj = bracket_phase(traj_k.initial(), a, traj_j.last(), tol_bio).map_err(rename("[k(0),a,j(t)]"))?;
    let g_j = geometric_phase_anchored(traj_j, path, anchor, tol_bio).map_err(rename("j"))?;
    let g_k = geometric_phase_anchored(traj_k, path, anchor, tol_bio).map_err(rename("k"))?;
    let total = b_jk.value + b_kj.value + g_j.geometric + g_k.geometric;
    Ok(OffDiagonalPhase {
        value: PhaseValue::new(total),
        brackets: [b_jk, b_kj],
        singles: [g_j, g_k],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biorthogonal::{apply_gauge, GaugeTransform};
    use crate::dynamics::{evolve_pair, HamiltonianPath, TimeGrid};
    use crate::geometry::{distance_mod_pi, polygon_limit_phase, polygon_phase, DEFAULT_TOL_BIO};
    use crate::linalg::{matrix, vector, ComplexMatrix};
    use proptest::prelude::*;
    use rand::Rng;

    const TOL: f64 = DEFAULT_TOL_BIO;

    fn sd(entries: &[Complex64]) -> StatePair {
        StatePair::self_dual(vector(entries)).unwrap()
    }

    fn e(k: usize) -> StatePair {
        StatePair::self_dual(basis(2, k)).unwrap()
    }

    fn plus() -> StatePair {
        sd(&[c(1.0, 0.0), c(1.0, 0.0)])
    }

    fn plus_i() -> StatePair {
        sd(&[c(1.0, 0.0), c(0.0, 1.0)])
    }

    fn zero_path(dim: usize) -> HamiltonianPath {
        HamiltonianPath::constant(ComplexMatrix::zeros(dim, dim), (0.0, 1.0)).unwrap()
    }

    /// A two-step stand-in trajectory with prescribed samples.
    fn fabricated(pairs: Vec<StatePair>) -> Trajectory {
        Trajectory::from_pairs(TimeGrid::new(0.0, 1.0, pairs.len() - 1).unwrap(), pairs).unwrap()
    }

    fn random_path(rng: &mut ChaCha8Rng, n: usize) -> HamiltonianPath {
        let mut m = || {
            ComplexMatrix::from_fn(n, n, |_, _| {
                c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))
            })
        };
        let terms = vec![
            crate::dynamics::HamiltonianTerm {
                matrix: m(),
                profile: crate::dynamics::TimeProfile::constant(1.0),
            },
            crate::dynamics::HamiltonianTerm {
                matrix: m(),
                profile: crate::dynamics::TimeProfile::polynomial(vec![0.0, 1.0]),
            },
        ];
        HamiltonianPath::new(n, terms, (0.0, 1.0)).unwrap()
    }

    fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> StatePair {
        let mut draw = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let v = ComplexVector::from_fn(n, |_, _| draw());
        let w = &v + ComplexVector::from_fn(n, |_, _| draw() * 0.4);
        let v = &v / c(v.norm(), 0.0);
        StatePair::with_rescaled_dual(v, w).unwrap()
    }

    #[test]
    fn eigenstate_has_no_geometric_phase() {
        let e0 = c(0.7, -0.2);
        let h = matrix(2, &[e0, c(0.3, 0.1), c(0.0, 0.0), c(-0.4, 0.05)]).unwrap();
        let path = HamiltonianPath::constant(h, (0.0, 4.0)).unwrap();
        let traj = evolve_pair(&path, &e(0), &TimeGrid::new(0.0, 4.0, 800).unwrap()).unwrap();
        let r = geometric_phase(&traj, &path, TOL).unwrap();
        assert!(r.geometric.norm() < 1e-9, "{:?}", r.geometric);
        // θ_GP = −E t continued through the branch cut at t ≈ 2.24
        assert!((r.pancharatnam.value - (-e0 * 4.0)).norm() < 1e-9);
        assert_eq!(r.pancharatnam.branch_offset, -1);
        assert_eq!(r.geometric, r.pancharatnam.value - r.dynamical);
    }

    #[test]
    fn zero_hamiltonian_gives_zero_phases() {
        let path = zero_path(2);
        let traj = evolve_pair(&path, &plus_i(), &TimeGrid::new(0.0, 1.0, 10).unwrap()).unwrap();
        let r = geometric_phase(&traj, &path, TOL).unwrap();
        assert!(r.pancharatnam.value.norm() < 1e-15);
        assert_eq!(r.dynamical, c(0.0, 0.0));
        assert!(r.geometric.norm() < 1e-15);
    }

    #[test]
    fn biorthogonal_endpoints_need_an_anchor() {
        let traj = fabricated(vec![e(0), plus(), e(1)]);
        match geometric_phase(&traj, &zero_path(2), TOL) {
            Err(Error::Biorthogonal { overlap, .. }) => assert!(overlap.contains("anchored")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn anchored_hand_values() {
        let traj = fabricated(vec![e(0), plus(), e(1)]);
        let path = zero_path(2);
        let ends = [traj.initial(), traj.last()];
        let a = AnchorState::new(plus(), &ends, TOL).unwrap();
        let r = geometric_phase_anchored(&traj, &path, &a, TOL).unwrap();
        assert!(r.geometric.norm() < 1e-12);
        assert_eq!(r.anchor_used, Some(plus()));
        assert_eq!(r.direct_discrepancy, None);
        let a = AnchorState::new(plus_i(), &ends, TOL).unwrap();
        let r = geometric_phase_anchored(&traj, &path, &a, TOL).unwrap();
        assert!((r.pancharatnam.value - c(PI / 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn anchor_validation_names_the_overlap() {
        match AnchorState::new(e(0), &[&e(1)], TOL) {
            Err(Error::Anchor { overlap, .. }) => assert_eq!(overlap, "<endpoint0~|a>"),
            other => panic!("{other:?}"),
        }
        match anchored_pancharatnam(&e(0), &plus(), &e(1), TOL) {
            Err(Error::Anchor { overlap, .. }) => assert_eq!(overlap, "<dual(0)|a>"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn auto_anchor_examples() {
        let a = auto_anchor(&[&e(0)], 0, DEFAULT_ANCHOR_BUDGET, TOL).unwrap();
        assert!(a.min_overlap >= 0.5f64.sqrt());
        let a = auto_anchor(&[&e(0), &e(1)], 0, DEFAULT_ANCHOR_BUDGET, TOL).unwrap();
        assert!(a.min_overlap >= 0.4);
        assert!(AnchorState::new(a.pair.clone(), &[&e(0), &e(1)], TOL).is_ok());
        let b = auto_anchor(&[&e(0), &e(1)], 0, DEFAULT_ANCHOR_BUDGET, TOL).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ends: Vec<_> = (0..4).map(|_| random_pair(&mut rng, 3)).collect();
        let refs: Vec<_> = ends.iter().collect();
        let a = auto_anchor(&refs, 17, DEFAULT_ANCHOR_BUDGET, TOL).unwrap();
        assert!(a.min_overlap > 0.1);
    }

    #[test]
    fn auto_anchor_failure() {
        // no unit vector has overlap above 2 with anything of unit size
        assert!(matches!(
            auto_anchor(&[&e(0)], 0, 10, 2.0),
            Err(Error::AnchorSearch { draws: 10, .. })
        ));
        assert!(auto_anchor(&[], 0, 10, TOL).is_err());
    }

    #[test]
    fn swap_configuration_is_zero() {
        let path = zero_path(2);
        let j = fabricated(vec![e(0), plus(), e(1)]);
        let k = fabricated(vec![e(1), plus(), e(0)]);
        let a = AnchorState::new(plus(), &[&e(0), &e(1)], TOL).unwrap();
        let r = offdiagonal_phase(&j, &k, &path, &a, TOL).unwrap();
        assert!(r.value.value.norm() < 1e-12);
    }

    #[test]
    fn offdiagonal_with_identical_trajectories() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let path = random_path(&mut rng, 3);
        let init = random_pair(&mut rng, 3);
        let traj = evolve_pair(&path, &init, &TimeGrid::new(0.0, 1.0, 200).unwrap()).unwrap();
        let a = auto_anchor(&[traj.initial(), traj.last()], 1, 200, TOL).unwrap();
        let r = offdiagonal_phase(&traj, &traj, &path, &a, TOL).unwrap();
        let single = geometric_phase_anchored(&traj, &path, &a, TOL).unwrap();
        let bracket = bracket_phase(traj.initial(), &a.pair, traj.last(), TOL).unwrap();
        let expect = (single.geometric + bracket.value) * 2.0;
        assert!((r.value.value - expect).norm() < 1e-12);
    }

    #[test]
    fn offdiagonal_errors() {
        let path = zero_path(2);
        let j = fabricated(vec![e(0), plus(), e(1)]);
        let k = fabricated(vec![e(1), plus(), plus(), e(0)]);
        let a = AnchorState::new(plus(), &[&e(0), &e(1)], TOL).unwrap();
        assert!(matches!(
            offdiagonal_phase(&j, &k, &path, &a, TOL),
            Err(Error::Grid(_))
        ));
        // k ends where j starts is required by the bracket; break it
        let k = fabricated(vec![e(1), plus(), e(1)]);
        match offdiagonal_phase(&j, &k, &path, &a, TOL) {
            Err(Error::Biorthogonal { overlap, .. }) => assert!(overlap.starts_with("[j(0),a,k(t)]")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn anchored_and_direct_differ_by_the_closed_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let path = random_path(&mut rng, 3);
        let init = random_pair(&mut rng, 3);
        let traj = evolve_pair(&path, &init, &TimeGrid::new(0.0, 1.0, 400).unwrap()).unwrap();
        let a = traj.pairs[137].clone();
        let anchor = AnchorState::new(a.clone(), &[traj.initial(), traj.last()], TOL).unwrap();
        let r = geometric_phase_anchored(&traj, &path, &anchor, TOL).unwrap();
        let triangle = polygon_phase(&[traj.initial().clone(), a, traj.last().clone()], true, TOL)
            .unwrap();
        let d = r.direct_discrepancy.unwrap();
        assert!(distance_mod_pi(d, triangle.value) < 1e-9);
        assert!(triangle.value.norm() > 1e-3);
    }

    #[test]
    fn closed_loop_phase_is_gauge_invariant() {
        // polygon-limit closure of the trajectory is unchanged when the
        // endpoints are regauged
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let path = random_path(&mut rng, 2);
        let init = random_pair(&mut rng, 2);
        let traj = evolve_pair(&path, &init, &TimeGrid::new(0.0, 1.0, 400).unwrap()).unwrap();
        let base = polygon_limit_phase(&traj, TOL).unwrap();
        let mut moved = traj.clone();
        let n = moved.pairs.len();
        for (k, p) in moved.pairs.iter_mut().enumerate() {
            let s = k as f64 / (n - 1) as f64;
            *p = apply_gauge(p, &GaugeTransform::new(c(0.8 * s * s, -0.3 * s)));
        }
        let gauged = polygon_limit_phase(&moved, TOL).unwrap();
        assert!(base.distance_mod_pi(&gauged) < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn intermediate_anchor_reproduces_composition(seed in any::<u64>(), split in 1usize..99) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let path = random_path(&mut rng, 3);
            let init = random_pair(&mut rng, 3);
            let traj = evolve_pair(&path, &init, &TimeGrid::new(0.0, 1.0, 200).unwrap()).unwrap();
            let t1 = 2 * split;
            let anchor = AnchorState::new(traj.pairs[t1].clone(), &[traj.initial(), traj.last()], TOL).unwrap();
            let whole = geometric_phase_anchored(&traj, &path, &anchor, TOL).unwrap();
            let first = geometric_phase(&traj.slice(0, t1).unwrap(), &path, TOL).unwrap();
            let second = geometric_phase(&traj.slice(t1, 200).unwrap(), &path, TOL).unwrap();
            let composed = first.geometric + second.geometric;
            prop_assert!(distance_mod_pi(whole.geometric, composed) < 1e-9);
        }

        #[test]
        fn decomposition_is_exact(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let path = random_path(&mut rng, 2);
            let init = random_pair(&mut rng, 2);
            let traj = evolve_pair(&path, &init, &TimeGrid::new(0.0, 1.0, 50).unwrap()).unwrap();
            let r = geometric_phase(&traj, &path, TOL).unwrap();
            prop_assert_eq!(r.geometric, r.pancharatnam.value - r.dynamical);
        }
    }
}
