//! Biorthonormal frames `{E_n, |n⟩, |ñ⟩}` of a non-Hermitian matrix and the
//! explicit state/dual pairs every phase formula works with.

use crate::error::{Error, Result};
use crate::linalg::{
    c, default_gap_tolerance, eigendecompose, inner, solve, Complex64, ComplexMatrix,
    ComplexVector,
};

/// Binormalization tolerance accepted for an input pair.
pub const BINORM_TOL: f64 = 1e-9;
/// Two matching candidates closer than this are considered ambiguous.
pub const MATCH_AMBIGUITY: f64 = 1e-12;

/// A state `|ψ⟩` together with its explicit dual `|ψ̃⟩`.
///
/// The pair is expected to satisfy `⟨ψ̃|ψ⟩ = 1`; [`StatePair::new`] does not
/// enforce it so that drifting trajectory samples can still be represented,
/// while [`StatePair::binormalized`] does.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub state: ComplexVector,
    pub dual: ComplexVector,
}

impl StatePair {
    pub fn new(state: ComplexVector, dual: ComplexVector) -> Result<Self> {
        if state.len() != dual.len() {
            return Err(Error::dimension("state/dual pair", state.len(), dual.len()));
        }
        if state.is_empty() {
            return Err(Error::dimension("state/dual pair", 1, 0));
        }
        Ok(Self { state, dual })
    }

    /// Checked constructor: `|⟨ψ̃|ψ⟩ − 1| ≤ 1e-9`.
    pub fn binormalized(state: ComplexVector, dual: ComplexVector) -> Result<Self> {
        let pair = Self::new(state, dual)?;
        let defect = binorm_defect(&pair);
        if !(defect <= BINORM_TOL) {
            return Err(Error::Numerical {
                operation: "StatePair::binormalized".into(),
                message: format!("binormalization defect {defect:e} exceeds {BINORM_TOL:e}"),
            });
        }
        Ok(pair)
    }

    /// Unit-norm `v` paired with itself, the Hermitian convention.
    pub fn self_dual(v: ComplexVector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector {
                operation: "StatePair::self_dual".into(),
            });
        }
        let v = v / c(norm, 0.0);
        Self::new(v.clone(), v)
    }

    /// Keeps `state`, rescales `dual` by `1 / conj(⟨dual|state⟩)`.
    pub fn with_rescaled_dual(state: ComplexVector, dual: ComplexVector) -> Result<Self> {
        let overlap = inner(&dual, &state)?;
        if overlap.norm() == 0.0 {
            return Err(Error::Biorthogonal {
                overlap: "<dual|state>".into(),
                magnitude: 0.0,
                tol_bio: 0.0,
            });
        }
        let dual = dual / overlap.conj();
        Self::new(state, dual)
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    /// `⟨ψ̃|ψ⟩`.
    pub fn overlap(&self) -> Complex64 {
        self.dual.dotc(&self.state)
    }
}

/// `|⟨ψ̃|ψ⟩ − 1|`.
pub fn binorm_defect(pair: &StatePair) -> f64 {
    (pair.overlap() - c(1.0, 0.0)).norm()
}

/// Complex gauge `ψ → e^{iζ} ψ`, `ψ̃ → e^{i ζ*} ψ̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeTransform {
    pub zeta: Complex64,
}

impl GaugeTransform {
    pub fn new(zeta: Complex64) -> Self {
        Self { zeta }
    }

    pub fn inverse(&self) -> Self {
        Self { zeta: -self.zeta }
    }

    /// Factor applied to the state.
    pub fn state_factor(&self) -> Complex64 {
        (c(0.0, 1.0) * self.zeta).exp()
    }

    /// Factor applied to the dual.
    pub fn dual_factor(&self) -> Complex64 {
        (c(0.0, 1.0) * self.zeta.conj()).exp()
    }
}

pub fn apply_gauge(pair: &StatePair, gauge: &GaugeTransform) -> StatePair {
    StatePair {
        state: &pair.state * gauge.state_factor(),
        dual: &pair.dual * gauge.dual_factor(),
    }
}

/// Matched triples `(E_n, |n⟩, |ñ⟩)` with `⟨m̃|n⟩ = δ_mn`.
///
/// Right vectors carry unit norm; the left vectors absorb the remaining
/// complex scale.
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthonormalFrame {
    pub eigenvalues: Vec<Complex64>,
    pub right: Vec<ComplexVector>,
    pub left: Vec<ComplexVector>,
    pub source_time: f64,
}

impl BiorthonormalFrame {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The trivial frame of the identity basis (all eigenvalues zero).
    pub fn identity(dim: usize) -> Self {
        let basis: Vec<_> = (0..dim).map(|k| crate::linalg::basis(dim, k)).collect();
        Self {
            eigenvalues: vec![c(0.0, 0.0); dim],
            right: basis.clone(),
            left: basis,
            source_time: 0.0,
        }
    }

    /// `max_mn |⟨m̃|n⟩ − δ_mn|`.
    pub fn biorthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, l) in self.left.iter().enumerate() {
            for (n, r) in self.right.iter().enumerate() {
                let target = if m == n { c(1.0, 0.0) } else { c(0.0, 0.0) };
                worst = worst.max((l.dotc(r) - target).norm());
            }
        }
        worst
    }

    /// Frobenius norm of `Σ_n |n⟩⟨ñ| − I`.
    pub fn completeness_residual(&self) -> f64 {
        let n = self.dim();
        let mut sum = ComplexMatrix::zeros(n, n);
        for (r, l) in self.right.iter().zip(&self.left) {
            sum += r * l.adjoint();
        }
        (sum - ComplexMatrix::identity(n, n)).norm()
    }

    /// Pair `(|n⟩, |ñ⟩)` for eigenvector `n`.
    pub fn pair(&self, n: usize) -> StatePair {
        StatePair {
            state: self.right[n].clone(),
            dual: self.left[n].clone(),
        }
    }
}

/// Frame of `h` with the default gap tolerance.
pub fn build_frame(h: &ComplexMatrix) -> Result<BiorthonormalFrame> {
    build_frame_with(h, default_gap_tolerance(h), 0.0)
}

/// Left vectors are the conjugated rows of `V⁻¹`, so biorthonormality holds
/// to the accuracy of the inversion.
pub fn build_frame_with(
    h: &ComplexMatrix,
    tol_gap: f64,
    source_time: f64,
) -> Result<BiorthonormalFrame> {
    let spectral = eigendecompose(h, tol_gap)?;
    let n = spectral.dim();
    let v = spectral.vector_matrix();
    let v_inv = solve(&v, &ComplexMatrix::identity(n, n))?;
    let left = (0..n).map(|k| v_inv.row(k).adjoint()).collect();
    Ok(BiorthonormalFrame {
        eigenvalues: spectral.eigenvalues,
        right: spectral.right_vectors,
        left,
        source_time,
    })
}

/// Reorders and rephases `next` so that its triples continue those of `prev`.
///
/// Assignment is greedy on `|⟨prev.left_n|next.right_m⟩| / ‖prev.left_n‖`;
/// each matched overlap is then made real and positive.
pub fn match_frames(
    prev: &BiorthonormalFrame,
    next: &BiorthonormalFrame,
) -> Result<BiorthonormalFrame> {
    let n = prev.dim();
    if next.dim() != n {
        return Err(Error::dimension("match_frames", n, next.dim()));
    }
    let overlaps: Vec<Vec<Complex64>> = prev
        .left
        .iter()
        .map(|l| next.right.iter().map(|r| l.dotc(r)).collect())
        .collect();
    let score: Vec<Vec<f64>> = overlaps
        .iter()
        .zip(&prev.left)
        .map(|(row, l)| {
            let scale = l.norm().max(f64::MIN_POSITIVE);
            row.iter().map(|o| o.norm() / scale).collect()
        })
        .collect();

    let mut row_free = vec![true; n];
    let mut col_free = vec![true; n];
    let mut assignment = vec![0usize; n];
    for _ in 0..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, row) in score.iter().enumerate().filter(|(i, _)| row_free[*i]) {
            for (j, &s) in row.iter().enumerate().filter(|(j, _)| col_free[*j]) {
                if best.map_or(true, |(_, _, b)| s > b) {
                    best = Some((i, j, s));
                }
            }
        }
        let (i, j, s) = best.expect("free rows and columns remain");
        let runner_up = score[i]
            .iter()
            .enumerate()
            .filter(|(jj, _)| col_free[*jj] && *jj != j)
            .map(|(_, &v)| v)
            .chain(
                (0..n)
                    .filter(|ii| row_free[*ii] && *ii != i)
                    .map(|ii| score[ii][j]),
            )
            .fold(f64::NEG_INFINITY, f64::max);
        if s - runner_up <= MATCH_AMBIGUITY {
            return Err(Error::AmbiguousMatch {
                index: i,
                best: s,
                runner_up,
            });
        }
        row_free[i] = false;
        col_free[j] = false;
        assignment[i] = j;
    }

    let mut out = BiorthonormalFrame {
        eigenvalues: Vec::with_capacity(n),
        right: Vec::with_capacity(n),
        left: Vec::with_capacity(n),
        source_time: next.source_time,
    };
    for (i, &j) in assignment.iter().enumerate() {
        let o = overlaps[i][j];
        let phase = if o.norm() > 0.0 { o.conj() / o.norm() } else { c(1.0, 0.0) };
        out.eigenvalues.push(next.eigenvalues[j]);
        out.right.push(&next.right[j] * phase);
        out.left.push(&next.left[j] * phase);
    }
    Ok(out)
}

/// Binormalized dual of `psi` within the frame's dual span.
///
/// With `ψ = Σ c_n |n⟩`, the dual is `Σ (c_n / Σ_m |c_m|²) |ñ⟩`.
pub fn dual_partner(frame: &BiorthonormalFrame, psi: &ComplexVector) -> Result<StatePair> {
    if psi.len() != frame.dim() {
        return Err(Error::dimension("dual_partner", frame.dim(), psi.len()));
    }
    if psi.norm() == 0.0 {
        return Err(Error::ZeroVector {
            operation: "dual_partner".into(),
        });
    }
    let coeffs: Vec<Complex64> = frame.left.iter().map(|l| l.dotc(psi)).collect();
    let weight: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
    let mut dual = ComplexVector::zeros(psi.len());
    for (coef, l) in coeffs.iter().zip(&frame.left) {
        dual += l * (coef / weight);
    }
    StatePair::new(psi.clone(), dual)
}

/// `N − 1` pairs biorthogonal to `pair.state` and mutually biorthonormal.
///
/// Candidates are the frame vectors pushed through the oblique projector
/// `I − |ψ⟩⟨ψ̃|` (and its adjoint for the duals), then biorthogonalized with
/// complete pivoting on `|⟨L_m|R_n⟩|`.
pub fn biorthogonal_complement(
    frame: &BiorthonormalFrame,
    pair: &StatePair,
) -> Result<Vec<StatePair>> {
    let n = frame.dim();
    if pair.dim() != n {
        return Err(Error::dimension("biorthogonal_complement", n, pair.dim()));
    }
    let psi = &pair.state;
    let psi_dual = &pair.dual;
    let mut rights: Vec<Option<ComplexVector>> = frame
        .right
        .iter()
        .map(|r| Some(r - psi * psi_dual.dotc(r)))
        .collect();
    let mut lefts: Vec<Option<ComplexVector>> = frame
        .left
        .iter()
        .map(|l| Some(l - psi_dual * psi.dotc(l)))
        .collect();

    let scale = frame
        .right
        .iter()
        .chain(&frame.left)
        .map(|v| v.norm())
        .fold(1.0, f64::max);
    let breakdown = 1e-12 * scale * scale;

    let mut out = Vec::with_capacity(n.saturating_sub(1));
    while out.len() + 1 < n {
        let mut best: Option<(usize, usize, f64)> = None;
        for (m, l) in lefts.iter().enumerate() {
            let Some(l) = l else { continue };
            for (k, r) in rights.iter().enumerate() {
                let Some(r) = r else { continue };
                let mag = l.dotc(r).norm();
                if best.map_or(true, |(_, _, b)| mag > b) {
                    best = Some((m, k, mag));
                }
            }
        }
        let (m, k, mag) = best.ok_or_else(|| Error::Numerical {
            operation: "biorthogonal_complement".into(),
            message: "ran out of candidate vectors".into(),
        })?;
        if mag <= breakdown {
            return Err(Error::Numerical {
                operation: "biorthogonal_complement".into(),
                message: format!("biorthogonalization broke down (pivot {mag:e})"),
            });
        }
        let r = rights[k].take().expect("selected right candidate");
        let l = lefts[m].take().expect("selected left candidate");
        let d = l.dotc(&r);
        let rn = r.norm();
        let phi = &r / c(rn, 0.0);
        let phi_dual = &l * (c(rn, 0.0) / d.conj());

        for slot in rights.iter_mut().flatten() {
            let proj = phi_dual.dotc(slot);
            *slot -= &phi * proj;
        }
        for slot in lefts.iter_mut().flatten() {
            let proj = phi.dotc(slot);
            *slot -= &phi_dual * proj;
        }
        out.push(StatePair {
            state: phi,
            dual: phi_dual,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis, matrix, vector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn pt(gamma: f64) -> ComplexMatrix {
        matrix(2, &[c(0.0, gamma), c(1.0, 0.0), c(1.0, 0.0), c(0.0, -gamma)]).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
        ComplexVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn diagonal_frame_is_identity_basis() {
        let h = ComplexMatrix::from_diagonal(&vector(&[c(1.0, 0.0), c(0.0, 2.0)]));
        let f = build_frame(&h).unwrap();
        // ordered by real part: 2i first
        assert!((&f.right[0] - basis(2, 1)).norm() < 1e-14);
        assert!((&f.left[0] - basis(2, 1)).norm() < 1e-14);
        assert!((&f.right[1] - basis(2, 0)).norm() < 1e-14);
        assert!((&f.left[1] - basis(2, 0)).norm() < 1e-14);
    }

    #[test]
    fn triangular_frame_matches_hand_inverse() {
        let h = matrix(2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]).unwrap();
        let f = build_frame(&h).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!((&f.right[0] - vector(&[c(1.0, 0.0), c(0.0, 0.0)])).norm() < 1e-14);
        assert!((&f.right[1] - vector(&[c(s, 0.0), c(s, 0.0)])).norm() < 1e-14);
        // V⁻¹ = [[1, -1], [0, √2]]
        assert!((&f.left[0] - vector(&[c(1.0, 0.0), c(-1.0, 0.0)])).norm() < 1e-14);
        assert!((&f.left[1] - vector(&[c(0.0, 0.0), c(2f64.sqrt(), 0.0)])).norm() < 1e-14);
        assert!(f.biorthonormality_residual() < 1e-14);
    }

    #[test]
    fn pt_frame_cross_overlap_vanishes() {
        let f = build_frame(&pt(0.6)).unwrap();
        assert!(f.left[0].dotc(&f.right[1]).norm() <= 1e-12);
        assert!(f.left[1].dotc(&f.right[0]).norm() <= 1e-12);
    }

    #[test]
    fn left_vectors_are_adjoint_eigenvectors() {
        // independent check against H†
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=6 {
            let h = random_matrix(&mut rng, n);
            let f = build_frame(&h).unwrap();
            let hd = h.adjoint();
            for (e, l) in f.eigenvalues.iter().zip(&f.left) {
                let res = (&hd * l - l * e.conj()).norm() / l.norm();
                assert!(res < 1e-9, "n={n} residual {res:e}");
            }
            let adj = build_frame(&hd).unwrap();
            for e in &f.eigenvalues {
                assert!(adj.eigenvalues.iter().any(|a| (a - e.conj()).norm() < 1e-9));
            }
        }
    }

    #[test]
    fn random_frames_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..200 {
            let n = 2 + trial % 7;
            let f = build_frame(&random_matrix(&mut rng, n)).unwrap();
            assert!(f.biorthonormality_residual() <= 1e-10);
            assert!(f.completeness_residual() <= 1e-9);
        }
    }

    #[test]
    fn exceptional_point_propagates() {
        assert!(matches!(
            build_frame(&pt(1.0)),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn match_identity_and_swap() {
        let f = build_frame(&pt(0.6)).unwrap();
        let same = match_frames(&f, &f).unwrap();
        assert_eq!(same.eigenvalues, f.eigenvalues);
        for k in 0..2 {
            assert!((&same.right[k] - &f.right[k]).norm() < 1e-14);
        }

        let swapped = BiorthonormalFrame {
            eigenvalues: vec![f.eigenvalues[1], f.eigenvalues[0]],
            right: vec![f.right[1].clone(), f.right[0].clone()],
            left: vec![f.left[1].clone(), f.left[0].clone()],
            source_time: 1.0,
        };
        let m = match_frames(&f, &swapped).unwrap();
        assert_eq!(m.eigenvalues, f.eigenvalues);
        for k in 0..2 {
            assert!((&m.right[k] - &f.right[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn match_neighbouring_pt_frames() {
        let a = build_frame(&pt(0.59)).unwrap();
        let b = build_frame(&pt(0.60)).unwrap();
        let m = match_frames(&a, &b).unwrap();
        assert_eq!(m.eigenvalues, b.eigenvalues);
        for k in 0..2 {
            let o = a.left[k].dotc(&m.right[k]);
            assert!(o.re > 0.0 && o.im.abs() < 1e-12);
        }
        assert!(m.biorthonormality_residual() < 1e-12);
    }

    #[test]
    fn identical_frames_are_ambiguous_when_degenerate_overlaps() {
        let mut f = BiorthonormalFrame::identity(2);
        let s = FRAC_1_SQRT_2;
        f.right = vec![vector(&[c(s, 0.0), c(s, 0.0)]), vector(&[c(s, 0.0), c(-s, 0.0)])];
        f.left = f.right.clone();
        let err = match_frames(&BiorthonormalFrame::identity(2), &f).unwrap_err();
        assert!(matches!(err, Error::AmbiguousMatch { .. }));
    }

    #[test]
    fn eigenvalue_curves_are_continuous_after_matching() {
        let step = 1e-3;
        let mut prev = build_frame(&pt(0.0)).unwrap();
        let mut gamma = 0.0;
        while gamma < 0.9 {
            gamma += step;
            let next = match_frames(&prev, &build_frame(&pt(gamma)).unwrap()).unwrap();
            for (a, b) in prev.eigenvalues.iter().zip(&next.eigenvalues) {
                // dE/dγ = γ/√(1−γ²) ≤ 2.1 on [0, 0.9]
                assert!((a - b).norm() <= 2.5 * step);
            }
            prev = next;
        }
    }

    #[test]
    fn dual_partner_examples() {
        let f = build_frame(&pt(0.6)).unwrap();
        for k in 0..2 {
            let p = dual_partner(&f, &f.right[k]).unwrap();
            assert!((&p.dual - &f.left[k]).norm() <= 1e-12);
        }

        let id = BiorthonormalFrame::identity(2);
        let p = dual_partner(&id, &vector(&[c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
        assert!((&p.dual - vector(&[c(0.5, 0.0), c(0.5, 0.0)])).norm() < 1e-15);
        assert!(binorm_defect(&p) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = build_frame(&random_matrix(&mut rng, 4)).unwrap();
        let p = dual_partner(&f, &random_vector(&mut rng, 4)).unwrap();
        assert!(binorm_defect(&p) <= 1e-12);

        assert!(matches!(
            dual_partner(&f, &ComplexVector::zeros(4)),
            Err(Error::ZeroVector { .. })
        ));
    }

    #[test]
    fn complement_of_basis_vector() {
        let id = BiorthonormalFrame::identity(4);
        let pair = StatePair::self_dual(basis(4, 0)).unwrap();
        let comp = biorthogonal_complement(&id, &pair).unwrap();
        assert_eq!(comp.len(), 3);
        for (k, p) in comp.iter().enumerate() {
            assert!((&p.state - basis(4, k + 1)).norm() < 1e-15);
            assert!((&p.dual - basis(4, k + 1)).norm() < 1e-15);
        }
    }

    #[test]
    fn complement_in_two_dimensions() {
        let id = BiorthonormalFrame::identity(2);
        let s = FRAC_1_SQRT_2;
        let pair = StatePair::self_dual(vector(&[c(s, 0.0), c(s, 0.0)])).unwrap();
        let comp = biorthogonal_complement(&id, &pair).unwrap();
        assert_eq!(comp.len(), 1);
        let p = &comp[0];
        assert!(p.dual.dotc(&pair.state).norm() < 1e-15);
        assert!((p.overlap() - c(1.0, 0.0)).norm() < 1e-15);
        // the only biorthogonal ray is (1, -1)
        assert!((p.state[0] + p.state[1]).norm() < 1e-15);
    }

    #[test]
    fn complement_of_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 2..=7 {
            let f = build_frame(&random_matrix(&mut rng, n)).unwrap();
            let pair = dual_partner(&f, &random_vector(&mut rng, n)).unwrap();
            let comp = biorthogonal_complement(&f, &pair).unwrap();
            assert_eq!(comp.len(), n - 1);
            for (a, p) in comp.iter().enumerate() {
                assert!(p.dual.dotc(&pair.state).norm() <= 1e-10);
                assert!((p.overlap() - c(1.0, 0.0)).norm() <= 1e-10);
                for (b, q) in comp.iter().enumerate() {
                    if a != b {
                        assert!(p.dual.dotc(&q.state).norm() <= 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn gauge_examples() {
        let s = FRAC_1_SQRT_2;
        let pair = StatePair::self_dual(vector(&[c(s, 0.0), c(0.0, s)])).unwrap();
        assert_eq!(apply_gauge(&pair, &GaugeTransform::new(c(0.0, 0.0))), pair);

        let neg = apply_gauge(&pair, &GaugeTransform::new(c(PI, 0.0)));
        assert!((&neg.state + &pair.state).norm() < 1e-15);
        assert!((&neg.dual + &pair.dual).norm() < 1e-15);
        assert!(binorm_defect(&neg) < 1e-15);

        let imag = apply_gauge(&pair, &GaugeTransform::new(c(0.0, 1.0)));
        let e = std::f64::consts::E;
        assert!((&imag.state - &pair.state * c(1.0 / e, 0.0)).norm() < 1e-15);
        assert!((&imag.dual - &pair.dual * c(e, 0.0)).norm() < 1e-15);
        assert!((imag.overlap() - pair.overlap()).norm() < 1e-15);
    }

    #[test]
    fn binorm_defect_examples() {
        let e1 = basis(2, 0);
        let e2 = basis(2, 1);
        assert_eq!(binorm_defect(&StatePair::new(e1.clone(), e1.clone()).unwrap()), 0.0);
        assert_eq!(binorm_defect(&StatePair::new(e1.clone(), &e1 * c(2.0, 0.0)).unwrap()), 1.0);
        assert_eq!(binorm_defect(&StatePair::new(e1, e2).unwrap()), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_c() -> impl Strategy<Value = Complex64> {
            (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
        }

        proptest! {
            #[test]
            fn gauge_preserves_binormalization(
                v in proptest::collection::vec(arb_c(), 3),
                w in proptest::collection::vec(arb_c(), 3),
                zeta in arb_c(),
            ) {
                let pair = StatePair::with_rescaled_dual(vector(&v), vector(&w)).unwrap();
                prop_assume!(pair.dual.norm() < 1e6);
                let g = GaugeTransform::new(zeta * c(3.0, 0.0));
                let out = apply_gauge(&pair, &g);
                // rounding bound of a length-3 dot product, cancellation included
                let scale: f64 = pair.dual.iter().zip(pair.state.iter()).map(|(d, s)| d.norm() * s.norm()).sum::<f64>()
                    + out.dual.iter().zip(out.state.iter()).map(|(d, s)| d.norm() * s.norm()).sum::<f64>();
                prop_assert!((out.overlap() - pair.overlap()).norm() <= 16.0 * f64::EPSILON * scale);
                let back = apply_gauge(&out, &g.inverse());
                let maxabs = |v: &ComplexVector| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
                prop_assert!(maxabs(&(&back.state - &pair.state)) <= 1e-12 * maxabs(&pair.state).max(1.0));
                prop_assert!(maxabs(&(&back.dual - &pair.dual)) <= 1e-12 * maxabs(&pair.dual).max(1.0));
            }
        }
    }
}
