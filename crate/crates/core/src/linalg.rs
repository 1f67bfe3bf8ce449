//! Dense complex vectors and matrices, the conjugate-linear inner product,
//! linear solves and a non-Hermitian eigendecomposition.
//!
//! Eigenpairs come from a complex Schur factorization `H = Q T Q^†` followed
//! by back substitution on the triangular factor. Right eigenvectors are
//! scaled to unit Euclidean norm and rotated so that their first
//! significant entry is real and positive, which makes every frame built on
//! top of them reproducible.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;
pub type ComplexVector = DVector<Complex64>;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Relative tolerance on the eigen-residual `‖H v − E v‖ / ‖H‖`.
pub const DEFAULT_TOL_EIG: f64 = 1e-10;
/// Relative factor applied to `‖H‖` for the default eigenvalue gap tolerance.
pub const DEFAULT_GAP_FACTOR: f64 = 1e-8;
/// Reciprocal condition number below which a matrix is treated as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

const SCHUR_MAX_ITER: usize = 10_000;
// entries below this fraction of the vector norm do not fix the phase
const PHASE_FIX_THRESHOLD: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex::new(re, im)
}

/// Canonical basis vector `e_k` of dimension `dim`.
pub fn basis(dim: usize, k: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[k] = c(1.0, 0.0);
    v
}

pub fn vector(entries: &[Complex64]) -> ComplexVector {
    ComplexVector::from_column_slice(entries)
}

/// Builds a square matrix from row-major entries.
pub fn matrix(dim: usize, row_major: &[Complex64]) -> Result<ComplexMatrix> {
    if row_major.len() != dim * dim {
        return Err(Error::dimension("matrix entries", dim * dim, row_major.len()));
    }
    Ok(ComplexMatrix::from_row_slice(dim, dim, row_major))
}

/// `Σ_k conj(u_k) v_k`, conjugate-linear in the first argument.
pub fn inner(u: &ComplexVector, v: &ComplexVector) -> Result<Complex64> {
    if u.len() != v.len() {
        return Err(Error::dimension("inner product", u.len(), v.len()));
    }
    Ok(u.dotc(v))
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum absolute column sum.
pub fn one_norm(m: &ComplexMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Default gap tolerance `1e-8 · ‖H‖_F`, kept strictly positive.
pub fn default_gap_tolerance(h: &ComplexMatrix) -> f64 {
    (DEFAULT_GAP_FACTOR * frobenius_norm(h)).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<Complex64>,
    /// Unit-norm right eigenvectors, in the same order as `eigenvalues`.
    pub right_vectors: Vec<ComplexVector>,
    /// Reciprocal 1-norm condition number of the eigenvector matrix.
    pub condition_estimate: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvector matrix `V` with the right vectors as columns.
    pub fn vector_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.right_vectors)
    }

    pub fn min_gap(&self) -> f64 {
        min_pairwise_gap(&self.eigenvalues)
    }
}

fn min_pairwise_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for (m, a) in values.iter().enumerate() {
        for b in &values[m + 1..] {
            gap = gap.min((a - b).norm());
        }
    }
    gap
}

/// Eigendecomposition with the default residual tolerance.
pub fn eigendecompose(h: &ComplexMatrix, tol_gap: f64) -> Result<SpectralDecomposition> {
    eigendecompose_with_tolerances(h, tol_gap, DEFAULT_TOL_EIG)
}

pub fn eigendecompose_with_tolerances(
    h: &ComplexMatrix,
    tol_gap: f64,
    tol_eig: f64,
) -> Result<SpectralDecomposition> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::dimension("eigendecompose (square matrix)", n, h.ncols()));
    }
    if !(tol_gap > 0.0) {
        return Err(Error::Numerical {
            operation: "eigendecompose".into(),
            message: format!("tol_gap must be positive, got {tol_gap}"),
        });
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical {
            operation: "eigendecompose".into(),
            message: "matrix has non-finite entries".into(),
        });
    }

    let schur = nalgebra::Schur::try_new(h.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| {
        Error::Numerical {
            operation: "eigendecompose".into(),
            message: "Schur iteration did not converge".into(),
        }
    })?;
    let (q, t) = schur.unpack();
    let diag: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();

    let min_gap = min_pairwise_gap(&diag);
    if min_gap <= tol_gap {
        return Err(Error::DegenerateSpectrum { min_gap, tol_gap });
    }

    let norm_h = frobenius_norm(h);
    let mut pairs: Vec<(Complex64, ComplexVector)> = (0..n)
        .map(|k| {
            let x = triangular_eigenvector(&t, k);
            (diag[k], canonical_phase(&q * x))
        })
        .collect();

    for (value, v) in &pairs {
        let residual = (h * v - v * *value).norm();
        if residual > tol_eig * norm_h.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical {
                operation: "eigendecompose".into(),
                message: format!("eigen-residual {residual:e} exceeds {:e}", tol_eig * norm_h),
            });
        }
    }

    // Quantized real part keeps the ordering a total order when real parts tie.
    let quantum = 1e-9 * norm_h.max(1.0);
    pairs.sort_by(|(a, _), (b, _)| {
        let ka = (a.re / quantum).round();
        let kb = (b.re / quantum).round();
        ka.total_cmp(&kb).then(a.im.total_cmp(&b.im))
    });

    let (eigenvalues, right_vectors): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let v = ComplexMatrix::from_columns(&right_vectors);
    let condition_estimate = reciprocal_condition(&v);

    Ok(SpectralDecomposition {
        eigenvalues,
        right_vectors,
        condition_estimate,
    })
}

/// Eigenvector of the upper-triangular `t` for the diagonal entry `k`.
fn triangular_eigenvector(t: &ComplexMatrix, k: usize) -> ComplexVector {
    let n = t.nrows();
    let lambda = t[(k, k)];
    let floor = f64::EPSILON * frobenius_norm(t).max(f64::MIN_POSITIVE);
    let mut x = ComplexVector::zeros(n);
    x[k] = c(1.0, 0.0);
    for j in (0..k).rev() {
        let mut acc = c(0.0, 0.0);
        for l in j + 1..=k {
            acc += t[(j, l)] * x[l];
        }
        let mut denom = t[(j, j)] - lambda;
        if denom.norm() < floor {
            denom = c(floor, 0.0);
        }
        x[j] = -acc / denom;
    }
    x
}

/// Unit norm, first significant entry real and positive.
pub fn canonical_phase(v: ComplexVector) -> ComplexVector {
    let norm = v.norm();
    if norm == 0.0 {
        return v;
    }
    let v = v / c(norm, 0.0);
    match v.iter().find(|z| z.norm() > PHASE_FIX_THRESHOLD) {
        Some(lead) => {
            let rot = lead.conj() / lead.norm();
            v * rot
        }
        None => v,
    }
}

/// `1 / (‖M‖₁ ‖M⁻¹‖₁)`, zero for numerically singular input.
pub fn reciprocal_condition(m: &ComplexMatrix) -> f64 {
    match m.clone().lu().try_inverse() {
        Some(inv) => {
            let denom = one_norm(m) * one_norm(&inv);
            if denom.is_finite() && denom > 0.0 {
                1.0 / denom
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

/// Solves `M X = B` by LU with partial pivoting.
pub fn solve(m: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::dimension("solve (square matrix)", n, m.ncols()));
    }
    if b.nrows() != n {
        return Err(Error::dimension("solve right-hand side", n, b.nrows()));
    }
    let lu = m.clone().lu();
    let inverse = lu.try_inverse().ok_or(Error::SingularMatrix { rcond: 0.0 })?;
    let denom = one_norm(m) * one_norm(&inverse);
    let rcond = if denom.is_finite() && denom > 0.0 { 1.0 / denom } else { 0.0 };
    if rcond < SINGULAR_RCOND {
        return Err(Error::SingularMatrix { rcond });
    }
    lu.solve(b).ok_or(Error::SingularMatrix { rcond })
}
