//! Lowest roots of `H c = E S c`, nonlinear parameter optimization and
//! state tracking.
//!
//! Eigenpairs come from shift-and-invert subspace iteration. A Cholesky
//! factorization of `H - σS` succeeds exactly when every eigenvalue lies
//! above `σ`, so each shift doubles as a certificate that the iteration
//! converges to the lowest roots. The shift is moved up under the current
//! Rayleigh–Ritz estimate as the iteration converges, and every returned pair
//! carries its relative residual `‖Hc - ESc‖ / ‖Hc‖`.

use std::cell::RefCell;

use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::BasisSpec;
use crate::matrix::{dot, norm, Matrix};
use crate::operators::{assemble, AssemblyError, MatrixPair, SystemSpec, Wavefunction};
use crate::precision::{PrecisionError, PrecisionPolicy, Real};
use crate::with_real;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("overlap matrix is not positive definite at {bits} bits (basis is numerically dependent)")]
    Indefinite { bits: u32 },
    #[error("eigenpairs did not reach residual {tolerance:e} (best {residual:e})")]
    NoConvergence { residual: f64, tolerance: f64 },
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("no candidate states to track")]
    EmptyCandidates,
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Precision(#[from] PrecisionError),
    #[error("optimizer: {0}")]
    Optimizer(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution<R> {
    pub energy: R,
    /// Normalized so that `cᵀ S c = 1`, largest component positive.
    pub coefficients: Vec<R>,
    pub residual: R,
    pub index: usize,
}

impl<R: Real> EigenSolution<R> {
    pub fn convert<T: Real>(&self) -> EigenSolution<T> {
        EigenSolution {
            energy: self.energy.convert(),
            coefficients: self.coefficients.iter().map(|c| c.convert()).collect(),
            residual: self.residual.convert(),
            index: self.index,
        }
    }
}

/// Residual target for a precision: `1e-20`, or `2^{-BITS/2}` when that is
/// looser.
pub fn default_tolerance<R: Real>() -> R {
    let half = R::one().mul_pow2(-(R::BITS as i64 / 2));
    half.max(R::from_f64(1e-20))
}

#[derive(Debug, Clone)]
pub struct SolveOptions<R> {
    /// A value believed to lie below the lowest root. Wrong guesses only
    /// cost extra factorizations.
    pub lower_hint: Option<R>,
    pub tolerance: R,
    pub max_iterations: usize,
}

impl<R: Real> Default for SolveOptions<R> {
    fn default() -> Self {
        Self {
            lower_hint: None,
            tolerance: default_tolerance(),
            max_iterations: 400,
        }
    }
}

/// Lower-triangular `L` with `A = L Lᵀ`, or `None` at the first
/// nonpositive pivot.
pub fn cholesky<R: Real>(a: &Matrix<R>) -> Option<Matrix<R>> {
    assert!(a.is_square());
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    let mut inv_diag = vec![R::zero(); n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                if !(s > R::zero()) {
                    return None;
                }
                let d = s.sqrt();
                l[(i, i)] = d;
                inv_diag[i] = d.recip();
            } else {
                l[(i, j)] = s * inv_diag[j];
            }
        }
    }
    Some(l)
}

/// Solve `L Lᵀ x = b`.
fn cholesky_solve<R: Real>(l: &Matrix<R>, b: &[R]) -> Vec<R> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let s = y[i] - dot(&l.row(i)[..i], &y[..i]);
        y[i] = s / l[(i, i)];
    }
    // Backward pass by rows of L so every access is contiguous.
    for i in (0..n).rev() {
        let xi = y[i] / l[(i, i)];
        y[i] = xi;
        let row = l.row(i);
        for k in 0..i {
            y[k] -= row[k] * xi;
        }
    }
    y
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a small symmetric
/// matrix by cyclic Jacobi rotations.
pub fn symmetric_eigen<R: Real>(a: &Matrix<R>) -> (Vec<R>, Matrix<R>) {
    assert!(a.is_square());
    let n = a.rows();
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    let eps2 = R::epsilon() * R::epsilon();
    for _ in 0..100 {
        let mut off = R::zero();
        let mut total = R::zero();
        for i in 0..n {
            for j in 0..n {
                let x = a[(i, j)] * a[(i, j)];
                total += x;
                if i != j {
                    off += x;
                }
            }
        }
        if off <= eps2 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.is_zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / apq.mul_pow2(1);
                let t = (theta.abs() + (theta * theta + R::one()).sqrt()).recip();
                let t = if theta < R::zero() { -t } else { t };
                let c = (t * t + R::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs[(k, new)] = v[(k, old)];
        }
    }
    (values, vecs)
}

/// S-orthonormalize the columns in place (two passes of modified
/// Gram–Schmidt). Returns `S y` for each column.
fn s_orthonormalize<R: Real>(s: &Matrix<R>, cols: &mut [Vec<R>]) -> Vec<Vec<R>> {
    let mut s_cols: Vec<Vec<R>> = Vec::with_capacity(cols.len());
    for j in 0..cols.len() {
        for _ in 0..2 {
            for k in 0..j {
                let proj = dot(&s_cols[k], &cols[j]);
                let (done, rest) = cols.split_at_mut(j);
                for (y, x) in rest[0].iter_mut().zip(&done[k]) {
                    *y -= proj * *x;
                }
            }
        }
        let mut sy = s.mul_vec(&cols[j]);
        let mut nrm = dot(&sy, &cols[j]);
        if !(nrm > R::zero()) {
            // Collapsed direction; restart from a unit vector.
            let n = cols[j].len();
            cols[j] = (0..n).map(|i| if i == j % n { R::one() } else { R::zero() }).collect();
            sy = s.mul_vec(&cols[j]);
            nrm = dot(&sy, &cols[j]);
        }
        let inv = nrm.sqrt().recip();
        for y in cols[j].iter_mut() {
            *y *= inv;
        }
        for y in sy.iter_mut() {
            *y *= inv;
        }
        s_cols.push(sy);
    }
    s_cols
}

/// Cholesky of `H - σS` for the first `σ <= start` that works, stepping
/// down geometrically.
fn certified_shift<R: Real>(pencil: &MatrixPair<R>, start: R, step: R) -> (R, Matrix<R>) {
    let mut sigma = start;
    let mut step = step;
    loop {
        let k = pencil.hamiltonian.sub_scaled(sigma, &pencil.overlap);
        if let Some(l) = cholesky(&k) {
            return (sigma, l);
        }
        sigma -= step;
        step = step.mul_pow2(2);
    }
}

/// `count` lowest eigenpairs at the precision of `R`, with no escalation.
pub fn solve_at<R: Real>(
    pencil: &MatrixPair<R>,
    count: usize,
    opts: &SolveOptions<R>,
) -> Result<Vec<EigenSolution<R>>, SolverError> {
    let n = pencil.size;
    if count == 0 || count > n {
        return Err(SolverError::Invalid(format!("cannot extract {count} roots from a size-{n} pencil")));
    }
    if cholesky(&pencil.overlap).is_none() {
        return Err(SolverError::Indefinite { bits: R::BITS });
    }
    let h = &pencil.hamiltonian;
    let s = &pencil.overlap;
    let p = (count + count.max(2)).min(n);

    // Start below every Rayleigh quotient of a unit vector.
    let diag_min = (0..n)
        .map(|i| h[(i, i)] / s[(i, i)])
        .fold(None, |m: Option<R>, x| Some(m.map_or(x, |m| m.min(x))))
        .unwrap();
    let scale = diag_min.abs().max(R::one());
    let start = match opts.lower_hint {
        Some(hint) => hint.min(diag_min),
        None => diag_min - scale,
    };
    let (mut sigma, mut chol) = certified_shift(pencil, start, scale.mul_pow2(-3));

    let mut x: Vec<Vec<R>> = (0..p)
        .map(|j| (0..n).map(|i| if i == j { R::one() } else { R::zero() }).collect())
        .collect();
    let mut prev_theta: Option<R> = None;
    let mut best = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let mut y: Vec<Vec<R>> = x.iter().map(|col| cholesky_solve(&chol, &s.mul_vec(col))).collect();
        s_orthonormalize(s, &mut y);
        let hy: Vec<Vec<R>> = y.iter().map(|col| h.mul_vec(col)).collect();
        let mut a = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let v = dot(&y[i], &hy[j]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let (theta, z) = symmetric_eigen(&a);
        x = (0..p)
            .map(|c| {
                let mut col = vec![R::zero(); n];
                for (k, yk) in y.iter().enumerate() {
                    let w = z[(k, c)];
                    for (o, v) in col.iter_mut().zip(yk) {
                        *o += w * *v;
                    }
                }
                col
            })
            .collect();
        let mut worst = R::zero();
        let mut residuals = Vec::with_capacity(count);
        for (c, col) in x.iter().enumerate().take(count) {
            let hx = h.mul_vec(col);
            let sx = s.mul_vec(col);
            let r: Vec<R> = hx.iter().zip(&sx).map(|(a, b)| *a - theta[c] * *b).collect();
            let rel = norm(&r) / norm(&hx);
            worst = worst.max(rel);
            residuals.push(rel);
        }
        best = best.min(worst.to_f64());
        if worst <= opts.tolerance {
            return Ok((0..count)
                .map(|c| EigenSolution {
                    energy: theta[c],
                    coefficients: normalized(s, &x[c]),
                    residual: residuals[c],
                    index: c,
                })
                .collect());
        }
        // Move the shift up under the lowest Ritz value once it has settled.
        let settled = prev_theta.is_some_and(|t0| (t0 - theta[0]).abs() <= theta[0].abs() * R::from_f64(1e-6));
        let rate = ((theta[count - 1] - sigma) / (theta[p - 1] - sigma)).to_f64();
        if settled && rate > 1e-3 {
            let drift = (prev_theta.unwrap() - theta[0]).abs();
            let gap = (theta[0] - sigma).abs();
            let margin = (drift.mul_pow2(7)).max(theta[0].abs() * R::from_f64(1e-12)).min(gap.mul_pow2(-1));
            let (s2, c2) = certified_shift(pencil, theta[0] - margin, margin.mul_pow2(4));
            if s2 > sigma {
                sigma = s2;
                chol = c2;
            }
        }
        prev_theta = Some(theta[0]);
    }
    Err(SolverError::NoConvergence {
        residual: best,
        tolerance: opts.tolerance.to_f64(),
    })
}

fn normalized<R: Real>(s: &Matrix<R>, c: &[R]) -> Vec<R> {
    let nrm = s.bilinear(c, c).sqrt();
    let big = c.iter().fold(R::zero(), |m, v| if v.abs() > m.abs() { *v } else { m });
    let f = if big < R::zero() { -nrm.recip() } else { nrm.recip() };
    c.iter().map(|v| *v * f).collect()
}

/// The `count` lowest eigenpairs. When `S` is not numerically positive
/// definite at the precision of `R`, the pencil is carried to the next
/// precision of `policy` and solved there.
pub fn solve_lowest<R: Real>(
    pencil: &MatrixPair<R>,
    count: usize,
    policy: &PrecisionPolicy,
) -> Result<Vec<EigenSolution<R>>, SolverError> {
    policy.validate()?;
    match solve_at(pencil, count, &SolveOptions::default()) {
        Err(SolverError::Indefinite { bits }) => {
            let next = escalate(policy, bits)?;
            with_real!(next.effective_bits(), T => {
                let wide = convert_pencil::<R, T>(pencil);
                solve_lowest::<T>(&wide, count, &next).map(|v| v.iter().map(|s| s.convert()).collect())
            })
        }
        other => other,
    }
}

fn escalate(policy: &PrecisionPolicy, bits: u32) -> Result<PrecisionPolicy, SolverError> {
    let mut next = *policy;
    while next.effective_bits() <= bits {
        next = next.escalated().ok_or(SolverError::Indefinite { bits })?;
    }
    Ok(next)
}

fn convert_pencil<R: Real, T: Real>(p: &MatrixPair<R>) -> MatrixPair<T> {
    MatrixPair {
        size: p.size,
        overlap: p.overlap.convert(),
        kinetic: p.kinetic.convert(),
        potential: p.potential.convert(),
        hamiltonian: p.hamiltonian.convert(),
    }
}

/// Roots of one system at one basis, with `⟨T⟩` and `⟨V⟩` of each root.
#[derive(Debug, Clone)]
pub struct SystemSolution<R> {
    pub roots: Vec<EigenSolution<R>>,
    pub kinetic: Vec<R>,
    pub potential: Vec<R>,
    /// Precision at which the pencil was finally assembled and solved.
    pub bits: u32,
    pub overlap: Matrix<R>,
}

/// Assemble and solve, re-assembling at higher precision while the overlap
/// is numerically indefinite.
pub fn solve_system<R: Real>(
    system: &SystemSpec,
    basis: &BasisSpec<R>,
    count: usize,
    policy: &PrecisionPolicy,
    lower_hint: Option<f64>,
) -> Result<SystemSolution<R>, SolverError> {
    policy.validate()?;
    let pencil = assemble(system, basis)?;
    let opts = SolveOptions {
        lower_hint: lower_hint.map(R::from_f64),
        ..SolveOptions::default()
    };
    match solve_at(&pencil, count, &opts) {
        Ok(roots) => {
            let kinetic = roots.iter().map(|r| pencil.kinetic.bilinear(&r.coefficients, &r.coefficients)).collect();
            let potential = roots
                .iter()
                .map(|r| pencil.potential.bilinear(&r.coefficients, &r.coefficients))
                .collect();
            Ok(SystemSolution {
                roots,
                kinetic,
                potential,
                bits: R::BITS,
                overlap: pencil.overlap,
            })
        }
        Err(SolverError::Indefinite { bits }) => {
            let next = escalate(policy, bits)?;
            with_real!(next.effective_bits(), T => {
                let wide = solve_system::<T>(system, &basis.convert::<T>(), count, &next, lower_hint)?;
                Ok(SystemSolution {
                    roots: wide.roots.iter().map(|s| s.convert()).collect(),
                    kinetic: wide.kinetic.iter().map(|v| v.convert()).collect(),
                    potential: wide.potential.iter().map(|v| v.convert()).collect(),
                    bits: wide.bits,
                    overlap: wide.overlap.convert(),
                })
            })
        }
        Err(e) => Err(e),
    }
}

/// A value certainly below the ground state, from dropping the electron
/// repulsion (and, for Ps⁻, bounding the mass-polarization term).
pub fn energy_lower_bound(system: &SystemSpec) -> f64 {
    if system.is_ps_minus() {
        -1.0
    } else {
        let z = system.z();
        -z * z
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TracePoint {
    pub alpha: f64,
    pub beta: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult<R> {
    pub alpha: R,
    pub beta: R,
    pub energy: R,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
    pub solution: EigenSolution<R>,
    pub kinetic: R,
    pub potential: R,
    pub basis: BasisSpec<R>,
}

impl<R: Real> OptimizationResult<R> {
    /// `⟨V⟩ / E`, equal to 2 at a scaling-optimal point.
    pub fn virial_ratio(&self) -> R {
        self.potential / self.energy
    }

    pub fn wavefunction(&self, system: &SystemSpec) -> Wavefunction<R> {
        Wavefunction {
            system: *system,
            basis: self.basis.clone(),
            coefficients: self.solution.coefficients.clone(),
            energy: self.energy,
            metadata: Default::default(),
        }
    }
}

/// Simplex energy spread treated as converged.
pub const SIMPLEX_SPREAD: f64 = 1e-11;

struct Objective<'a, R: Real> {
    system: &'a SystemSpec,
    omega: u32,
    policy: &'a PrecisionPolicy,
    budget: usize,
    state: RefCell<Evaluations<R>>,
}

struct Evaluations<R> {
    trace: Vec<TracePoint>,
    best: Option<(SystemSolution<R>, BasisSpec<R>)>,
    last_energy: Option<f64>,
}

impl<R: Real> Objective<'_, R> {
    fn evaluate(&self, alpha: f64, beta: f64) -> Result<f64, SolverError> {
        let basis = BasisSpec::new(self.omega, R::from_f64(alpha), R::from_f64(beta))
            .map_err(|e| SolverError::Assembly(e.into()))?;
        let hint = {
            let st = self.state.borrow();
            st.last_energy.map(|e| e - 0.05 * e.abs().max(0.1))
        };
        let hint = Some(hint.unwrap_or(energy_lower_bound(self.system)).max(energy_lower_bound(self.system)));
        let sol = solve_system(self.system, &basis, 1, self.policy, hint)?;
        let e = sol.roots[0].energy.to_f64();
        let mut st = self.state.borrow_mut();
        st.trace.push(TracePoint { alpha, beta, energy: e });
        st.last_energy = Some(e);
        let better = st.best.as_ref().is_none_or(|(b, _)| sol.roots[0].energy < b.roots[0].energy);
        if better {
            st.best = Some((sol, basis));
        }
        Ok(e)
    }
}

impl<R: Real> CostFunction for &Objective<'_, R> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> Result<f64, ArgminError> {
        if self.state.borrow().trace.len() >= self.budget {
            return Err(ArgminError::msg("evaluation budget exhausted"));
        }
        self.evaluate(x[0].exp(), x[1].exp()).map_err(|e| ArgminError::msg(e.to_string()))
    }
}

/// Nelder–Mead over `(ln α, ln β)` for the lowest root. The returned point
/// is the best one evaluated.
pub fn optimize_parameters<R: Real>(
    system: &SystemSpec,
    omega: u32,
    initial: (f64, f64),
    budget: usize,
    policy: &PrecisionPolicy,
) -> Result<OptimizationResult<R>, SolverError> {
    optimize_with_step(system, omega, initial, DEFAULT_SIMPLEX_STEP, budget, policy)
}

/// Edge of the starting simplex in `ln α` and `ln β`.
pub const DEFAULT_SIMPLEX_STEP: f64 = 0.1;

/// [`optimize_parameters`] with an explicit starting simplex edge, for warm
/// starts near a known optimum.
pub fn optimize_with_step<R: Real>(
    system: &SystemSpec,
    omega: u32,
    initial: (f64, f64),
    step: f64,
    budget: usize,
    policy: &PrecisionPolicy,
) -> Result<OptimizationResult<R>, SolverError> {
    if !(initial.0 > 0.0 && initial.1 > 0.0) || budget == 0 || !(step > 0.0) {
        return Err(SolverError::Invalid(
            "initial exponents and simplex step must be positive and budget nonzero".into(),
        ));
    }
    system.validate()?;
    let objective = Objective::<R> {
        system,
        omega,
        policy,
        budget,
        state: RefCell::new(Evaluations {
            trace: Vec::new(),
            best: None,
            last_energy: None,
        }),
    };
    let (la, lb) = (initial.0.ln(), initial.1.ln());
    let simplex = vec![vec![la, lb], vec![la + step, lb], vec![la, lb + step]];
    // The spread of three values is at most 2.5 standard deviations.
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(SIMPLEX_SPREAD / 2.5)
        .map_err(|e| SolverError::Optimizer(e.to_string()))?;
    let run = Executor::new(&objective, solver)
        .configure(|s| s.max_iters(budget as u64))
        .run();
    let converged = match &run {
        Ok(res) => matches!(
            res.state().get_termination_status(),
            TerminationStatus::Terminated(TerminationReason::SolverConverged)
        ),
        Err(_) => false,
    };
    if let Err(e) = &run {
        // Budget exhaustion keeps the best point; anything else is fatal.
        if objective.state.borrow().best.is_none() || !e.to_string().contains("budget") {
            return Err(SolverError::Optimizer(e.to_string()));
        }
    }
    // The simplex resolves energy, not scale: a scale error δ costs only
    // O(δ²) in E but O(δ) in V/E. At fixed shape E(λ) = λ²T + λV, so one
    // rescaling by λ = -V/2T fixes it; kept only if the energy drops.
    let rescaled = objective.state.borrow().best.as_ref().and_then(|(sol, basis)| {
        let lambda = (-(sol.potential[0] / sol.kinetic[0]).mul_pow2(-1)).to_f64();
        let (a, b) = (basis.alpha.to_f64() * lambda, basis.beta.to_f64() * lambda);
        ((lambda - 1.0).abs() > 4.0 * f64::EPSILON && a > 0.0 && b > 0.0).then_some((a, b))
    });
    if let Some((a, b)) = rescaled {
        // A failed solve here just leaves the simplex optimum in place.
        let _ = objective.evaluate(a, b);
    }
    let (sol, basis) = objective.state.borrow_mut().best.take().expect("at least one evaluation");
    let st = objective.state.into_inner();
    Ok(OptimizationResult {
        alpha: basis.alpha,
        beta: basis.beta,
        energy: sol.roots[0].energy,
        evaluations: st.trace.len(),
        converged,
        trace: st.trace,
        kinetic: sol.kinetic[0],
        potential: sol.potential[0],
        solution: sol.roots.into_iter().next().unwrap(),
        basis,
    })
}

/// The candidate with the largest `|cᵀ S c_prev|`; ties go to the lower
/// energy.
pub fn track_state<R: Real>(
    previous: &Wavefunction<R>,
    candidates: &[EigenSolution<R>],
    overlap_matrix: &Matrix<R>,
) -> Result<EigenSolution<R>, SolverError> {
    track_coefficients(&previous.coefficients, candidates, overlap_matrix)
}

pub fn track_coefficients<R: Real>(
    previous: &[R],
    candidates: &[EigenSolution<R>],
    overlap_matrix: &Matrix<R>,
) -> Result<EigenSolution<R>, SolverError> {
    let s_prev = overlap_matrix.mul_vec(previous);
    let mut best: Option<(R, &EigenSolution<R>)> = None;
    for c in candidates {
        if c.coefficients.len() != previous.len() {
            return Err(SolverError::Invalid("candidate and previous state differ in basis size".into()));
        }
        let o = dot(&c.coefficients, &s_prev).abs();
        best = match best {
            None => Some((o, c)),
            Some((bo, bc)) => {
                if o > bo || (o == bo && c.energy < bc.energy) {
                    Some((o, c))
                } else {
                    Some((bo, bc))
                }
            }
        };
    }
    best.map(|(_, c)| c.clone()).ok_or(SolverError::EmptyCandidates)
}
