//! Co-evolution of a state and its dual under a time-dependent,
//! possibly non-Hermitian Hamiltonian.

use crate::biorthogonal::{binorm_defect, StatePair};
use crate::error::{Error, Result};
use crate::linalg::{c, Complex64, ComplexMatrix, ComplexVector};
use crate::quadrature::simpson;

/// Default threshold above which [`evolve_pair`] refuses a trajectory.
pub const DEFAULT_DRIFT_FAIL: f64 = 1e-4;
/// Binormalization required of the initial pair.
pub const INITIAL_BINORM_TOL: f64 = 1e-12;

/// Anything that yields an `N×N` matrix for each time in a closed interval.
pub trait Hamiltonian {
    fn dim(&self) -> usize;
    fn at(&self, t: f64) -> ComplexMatrix;
    fn domain(&self) -> (f64, f64);
}

/// `constant + Σ_k cos_k cos(kωt) + sin_k sin(kωt)`, `k` starting at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    pub omega: f64,
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn eval(&self, t: f64) -> f64 {
        let harmonics = |coeffs: &[f64], f: fn(f64) -> f64| -> f64 {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * f((k + 1) as f64 * self.omega * t))
                .sum()
        };
        self.constant + harmonics(&self.cos, f64::cos) + harmonics(&self.sin, f64::sin)
    }
}

/// Scalar coefficient of one Hamiltonian term: polynomial plus optional
/// Fourier series. An empty profile is identically zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeProfile {
    /// `c_0 + c_1 t + c_2 t² + ...`
    pub polynomial: Vec<f64>,
    pub fourier: Option<FourierSeries>,
}

impl TimeProfile {
    pub fn constant(value: f64) -> Self {
        Self {
            polynomial: vec![value],
            fourier: None,
        }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self {
            polynomial: coeffs,
            fourier: None,
        }
    }

    pub fn fourier(series: FourierSeries) -> Self {
        Self {
            polynomial: Vec::new(),
            fourier: Some(series),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let poly = self.polynomial.iter().rev().fold(0.0, |acc, a| acc * t + a);
        poly + self.fourier.as_ref().map_or(0.0, |f| f.eval(t))
    }

    /// Profile `g(t) = f(t / lambda)`.
    pub fn time_scaled(&self, lambda: f64) -> Self {
        let polynomial = self
            .polynomial
            .iter()
            .enumerate()
            .map(|(p, a)| a / lambda.powi(p as i32))
            .collect();
        let fourier = self.fourier.as_ref().map(|f| FourierSeries {
            omega: f.omega / lambda,
            ..f.clone()
        });
        Self { polynomial, fourier }
    }

    fn is_finite(&self) -> bool {
        self.polynomial.iter().all(|a| a.is_finite())
            && self.fourier.as_ref().is_none_or(|f| {
                f.omega.is_finite()
                    && f.constant.is_finite()
                    && f.cos.iter().chain(&f.sin).all(|a| a.is_finite())
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerm {
    pub matrix: ComplexMatrix,
    pub profile: TimeProfile,
}

/// `H(t) = Σ_j f_j(t) M_j` on `[t0, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianPath {
    dim: usize,
    terms: Vec<HamiltonianTerm>,
    t_domain: (f64, f64),
}

impl HamiltonianPath {
    pub fn new(dim: usize, terms: Vec<HamiltonianTerm>, t_domain: (f64, f64)) -> Result<Self> {
        if dim == 0 {
            return Err(Error::dimension("Hamiltonian dimension", 1, 0));
        }
        for (j, term) in terms.iter().enumerate() {
            let (r, cols) = term.matrix.shape();
            if r != dim || cols != dim {
                return Err(Error::dimension(
                    format!("Hamiltonian term {j}"),
                    dim,
                    if r != dim { r } else { cols },
                ));
            }
            if term.matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
                || !term.profile.is_finite()
            {
                return Err(Error::Numerical {
                    operation: "HamiltonianPath::new".into(),
                    message: format!("term {j} contains non-finite entries"),
                });
            }
        }
        let (t0, t1) = t_domain;
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::Grid(format!("invalid time domain [{t0}, {t1}]")));
        }
        Ok(Self {
            dim,
            terms,
            t_domain,
        })
    }

    /// Time-independent `H` on `[t0, t1]`.
    pub fn constant(h: ComplexMatrix, t_domain: (f64, f64)) -> Result<Self> {
        let dim = h.nrows();
        Self::new(
            dim,
            vec![HamiltonianTerm {
                matrix: h,
                profile: TimeProfile::constant(1.0),
            }],
            t_domain,
        )
    }

    pub fn terms(&self) -> &[HamiltonianTerm] {
        &self.terms
    }

    /// The same sequence of matrices traversed `lambda` times more slowly:
    /// `H'(t) = H(t / lambda)` on the stretched domain.
    pub fn time_scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Grid(format!("time scale must be positive, got {lambda}")));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| HamiltonianTerm {
                matrix: t.matrix.clone(),
                profile: t.profile.time_scaled(lambda),
            })
            .collect();
        Self::new(
            self.dim,
            terms,
            (self.t_domain.0 * lambda, self.t_domain.1 * lambda),
        )
    }

    /// Multiplies the matrix of term `index` by `factor`.
    pub fn with_term_scale(&self, index: usize, factor: f64) -> Result<Self> {
        if index >= self.terms.len() {
            return Err(Error::dimension(
                "Hamiltonian term index",
                self.terms.len(),
                index,
            ));
        }
        let mut out = self.clone();
        out.terms[index].matrix *= c(factor, 0.0);
        Ok(out)
    }
}

impl Hamiltonian for HamiltonianPath {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, t: f64) -> ComplexMatrix {
        let mut h = ComplexMatrix::zeros(self.dim, self.dim);
        for term in &self.terms {
            h += &term.matrix * c(term.profile.eval(t), 0.0);
        }
        h
    }

    fn domain(&self) -> (f64, f64) {
        self.t_domain
    }
}

/// `steps + 1` equally spaced samples of `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::Grid(format!("need t1 > t0, got [{t0}, {t1}]")));
        }
        if steps == 0 {
            return Err(Error::Grid("grid needs at least one step".into()));
        }
        Ok(Self { t0, t1, steps })
    }

    /// Grid whose spacing is as close as possible to `step` without exceeding it.
    pub fn with_step(t0: f64, t1: f64, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Grid(format!("step must be positive, got {step}")));
        }
        let steps = ((t1 - t0) / step - 1e-9).ceil().max(1.0) as usize;
        Self::new(t0, t1, steps)
    }

    pub fn spacing(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.spacing()
        }
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    fn within(&self, (d0, d1): (f64, f64)) -> bool {
        let slack = 1e-12 * (d1 - d0).abs().max(1.0);
        self.t0 >= d0 - slack && self.t1 <= d1 + slack
    }
}

/// Pairs sampled on a grid, as produced by [`evolve_pair`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub pairs: Vec<StatePair>,
    pub max_binorm_drift: f64,
}

impl Trajectory {
    /// Wraps externally produced samples, recomputing the drift.
    pub fn from_pairs(grid: TimeGrid, pairs: Vec<StatePair>) -> Result<Self> {
        if pairs.len() != grid.len() {
            return Err(Error::Grid(format!(
                "{} pairs for a grid of {} samples",
                pairs.len(),
                grid.len()
            )));
        }
        let max_binorm_drift = pairs.iter().map(binorm_defect).fold(0.0, f64::max);
        Ok(Self {
            grid,
            pairs,
            max_binorm_drift,
        })
    }

    /// Samples `start..=end` as a trajectory of its own.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if end <= start || end > self.grid.steps {
            return Err(Error::Grid(format!(
                "invalid slice {start}..={end} of a {}-step trajectory",
                self.grid.steps
            )));
        }
        let grid = TimeGrid::new(self.grid.time(start), self.grid.time(end), end - start)?;
        Self::from_pairs(grid, self.pairs[start..=end].to_vec())
    }

    pub fn initial(&self) -> &StatePair {
        &self.pairs[0]
    }

    pub fn last(&self) -> &StatePair {
        &self.pairs[self.pairs.len() - 1]
    }
}

/// Integrates `dψ/dt = −iHψ` and `dψ̃/dt = −iH†ψ̃` with classical RK4 using
/// the default drift threshold.
pub fn evolve_pair(
    path: &impl Hamiltonian,
    initial: &StatePair,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    evolve_pair_with(path, initial, grid, DEFAULT_DRIFT_FAIL)
}

pub fn evolve_pair_with(
    path: &impl Hamiltonian,
    initial: &StatePair,
    grid: &TimeGrid,
    drift_fail: f64,
) -> Result<Trajectory> {
    if initial.dim() != path.dim() {
        return Err(Error::dimension("initial pair", path.dim(), initial.dim()));
    }
    let defect = binorm_defect(initial);
    if !(defect <= INITIAL_BINORM_TOL) {
        return Err(Error::Numerical {
            operation: "evolve_pair".into(),
            message: format!(
                "initial pair is not binormalized (defect {defect:e} > {INITIAL_BINORM_TOL:e})"
            ),
        });
    }
    if !grid.within(path.domain()) {
        let (d0, d1) = path.domain();
        return Err(Error::Grid(format!(
            "grid [{}, {}] outside Hamiltonian domain [{d0}, {d1}]",
            grid.t0, grid.t1
        )));
    }

    let h = grid.spacing();
    let mi = c(0.0, -1.0);
    let rhs = |m: &ComplexMatrix, y: &ComplexVector| -> ComplexVector { (m * y) * mi };

    let mut pairs = Vec::with_capacity(grid.len());
    pairs.push(initial.clone());
    let mut max_drift = defect;
    let mut psi = initial.state.clone();
    let mut dual = initial.dual.clone();
    let mut h_start = path.at(grid.time(0));
    for k in 0..grid.steps {
        let t = grid.time(k);
        let h_mid = path.at(t + 0.5 * h);
        let h_end = path.at(grid.time(k + 1));
        let (a0, am, a1) = (h_start.adjoint(), h_mid.adjoint(), h_end.adjoint());

        psi = rk4_step(&rhs, [&h_start, &h_mid, &h_end], &psi, h);
        dual = rk4_step(&rhs, [&a0, &am, &a1], &dual, h);

        let pair = StatePair {
            state: psi.clone(),
            dual: dual.clone(),
        };
        let d = binorm_defect(&pair);
        if !d.is_finite() {
            return Err(Error::Numerical {
                operation: "evolve_pair".into(),
                message: format!("non-finite state at t = {}", grid.time(k + 1)),
            });
        }
        if d > drift_fail {
            return Err(Error::Drift {
                drift: d,
                threshold: drift_fail,
            });
        }
        max_drift = max_drift.max(d);
        pairs.push(pair);
        h_start = h_end;
    }
    Ok(Trajectory {
        grid: *grid,
        pairs,
        max_binorm_drift: max_drift,
    })
}

fn rk4_step(
    rhs: &impl Fn(&ComplexMatrix, &ComplexVector) -> ComplexVector,
    [m0, mm, m1]: [&ComplexMatrix; 3],
    y: &ComplexVector,
    h: f64,
) -> ComplexVector {
    let half = c(0.5 * h, 0.0);
    let k1 = rhs(m0, y);
    let k2 = rhs(mm, &(y + &k1 * half));
    let k3 = rhs(mm, &(y + &k2 * half));
    let k4 = rhs(m1, &(y + &k3 * c(h, 0.0)));
    y + (k1 + (k2 + k3) * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0)
}

/// Both sign conventions of the dynamical phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicalPhase {
    /// `∫ ⟨ψ̃|H|ψ⟩ dt`
    pub integral: Complex64,
    /// `γ_dyn = −∫ ⟨ψ̃|H|ψ⟩ dt`
    pub gamma: Complex64,
}

/// Simpson quadrature of `⟨ψ̃(t)|H(t)|ψ(t)⟩` over the trajectory grid.
pub fn dynamical_phase(traj: &Trajectory, path: &impl Hamiltonian) -> Result<DynamicalPhase> {
    if traj.grid.steps < 2 {
        return Err(Error::Grid(format!(
            "dynamical phase needs at least 2 steps, got {}",
            traj.grid.steps
        )));
    }
    let integrand = energy_samples(traj, path)?;
    let integral = simpson(&integrand, traj.grid.spacing())?;
    Ok(DynamicalPhase {
        integral,
        gamma: -integral,
    })
}

/// `⟨ψ̃(t_k)|H(t_k)|ψ(t_k)⟩` at every grid sample.
pub fn energy_samples(traj: &Trajectory, path: &impl Hamiltonian) -> Result<Vec<Complex64>> {
    if let Some(p) = traj.pairs.first() {
        if p.dim() != path.dim() {
            return Err(Error::dimension("trajectory", path.dim(), p.dim()));
        }
    }
    Ok(traj
        .pairs
        .iter()
        .enumerate()
        .map(|(k, p)| p.dual.dotc(&(path.at(traj.grid.time(k)) * &p.state)))
        .collect())
}

/// Largest `|⟨ψ̃|ψ⟩ − 1|` along the trajectory.
pub fn drift_report(traj: &Trajectory) -> f64 {
    traj.max_binorm_drift
}
