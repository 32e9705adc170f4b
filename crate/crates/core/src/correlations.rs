//! Entropies and correlation measures of two-qubit states.
//!
//! All logarithms are base 2. The classical correlation `J` is optimized over
//! rank-1 projective measurements on one qubit, parameterized by the Bloch
//! angles of the measurement axis: a fixed 64x64 grid over
//! `θ ∈ [0, π]`, `φ ∈ [0, 2π)` seeds a Nelder–Mead refinement.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qlin::{
    eig_hermitian, partial_trace, r, swap_subsystems, tensor, ComplexMatrix, Subsystem,
};
use crate::qstate::{pauli, BellState, DensityMatrix};
use crate::simplex::nelder_mead;

pub const POVM_TOL: f64 = 1e-8;
/// Outcomes less likely than this carry no conditional state.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-12;
const EIGEN_CLIP: f64 = 1e-8;

const GRID_THETA: usize = 64;
const GRID_PHI: usize = 64;
const REFINE_FTOL: f64 = 1e-9;
const REFINE_MAX_ITER: usize = 500;

/// `-Σ λ log2 λ` over a spectrum; eigenvalues in `[-1e-8, 0)` count as 0.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Binary entropy `H2(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of_spectrum(&[p, 1.0 - p])
}

fn spectrum(m: &ComplexMatrix) -> Vec<f64> {
    let mut ev = if m.dim() == 2 {
        // Closed form for 2x2 Hermitian matrices.
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let off = m[(0, 1)].norm();
        let half_gap = (0.25 * (a - d) * (a - d) + off * off).sqrt();
        let mid = 0.5 * (a + d);
        vec![mid - half_gap, mid + half_gap]
    } else {
        eig_hermitian(m).expect("Hermitian input").eigenvalues
    };
    for l in &mut ev {
        if *l < 0.0 && *l >= -EIGEN_CLIP {
            *l = 0.0;
        }
    }
    ev
}

/// Von Neumann entropy in bits.
pub fn entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&spectrum(rho.matrix()))
}

fn require_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() == 4 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        })
    }
}

fn marginal(rho: &DensityMatrix, keep: Subsystem) -> DensityMatrix {
    DensityMatrix::from_trusted(partial_trace(rho.matrix(), keep).expect("4x4"))
}

/// `I(A,B) = S(ρ_A) + S(ρ_B) - S(ρ_AB)`
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubit(rho)?;
    let sa = entropy(&marginal(rho, Subsystem::A));
    let sb = entropy(&marginal(rho, Subsystem::B));
    Ok((sa + sb - entropy(rho)).max(0.0))
}

/// Anything that assigns Born-rule probabilities `Tr[E ρ]`.
pub trait BornRule {
    fn dim(&self) -> usize;
    fn born_probability(&self, effect: &ComplexMatrix) -> f64;
}

impl BornRule for DensityMatrix {
    fn dim(&self) -> usize {
        DensityMatrix::dim(self)
    }

    fn born_probability(&self, effect: &ComplexMatrix) -> f64 {
        effect.trace_product(self.matrix()).re
    }
}

/// Pure states given as (normalized) state vectors.
impl BornRule for [Complex64] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn born_probability(&self, effect: &ComplexMatrix) -> f64 {
        effect.expectation(self).re
    }
}

impl BornRule for Vec<Complex64> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn born_probability(&self, effect: &ComplexMatrix) -> f64 {
        effect.expectation(self).re
    }
}

#[derive(Clone, Debug)]
pub struct PovmElement {
    pub label: String,
    pub operator: ComplexMatrix,
}

/// Index of a drawn POVM outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Element(usize),
    Failure,
}

/// A validated POVM: labeled elements plus an optional unlabeled failure
/// element (used for post-selected measurements). Elements and failure sum
/// to the identity.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    elements: Vec<PovmElement>,
    failure: Option<ComplexMatrix>,
}

impl MeasurementModel {
    pub fn new(elements: Vec<PovmElement>, failure: Option<ComplexMatrix>) -> Result<Self> {
        let dim = elements
            .first()
            .ok_or_else(|| Error::InvalidPovm("no elements".into()))?
            .operator
            .dim();
        let mut sum = ComplexMatrix::zeros(dim);
        let all = elements
            .iter()
            .map(|e| (e.label.as_str(), &e.operator))
            .chain(failure.iter().map(|f| ("failure", f)));
        for (label, op) in all {
            if op.dim() != dim {
                return Err(Error::InvalidPovm(format!(
                    "element {label} is {0}x{0}, expected {dim}x{dim}",
                    op.dim()
                )));
            }
            let residual = op.hermiticity_residual();
            if residual > POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {label} is not Hermitian (residual {residual:e})"
                )));
            }
            let min = eig_hermitian(op)?.eigenvalues[0];
            if min < -POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {label} has negative eigenvalue {min:e}"
                )));
            }
            sum = &sum + op;
        }
        let residual = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if residual > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {residual:e}"
            )));
        }
        Ok(Self { elements, failure })
    }

    /// Projective qubit measurement along the Bloch axis `(θ, φ)`;
    /// outcome 0 is the `+n` projector.
    pub fn qubit_projective(theta: f64, phi: f64) -> Self {
        let [plus, minus] = axis_projectors(theta, phi);
        Self {
            elements: vec![
                PovmElement {
                    label: "+n".into(),
                    operator: plus,
                },
                PovmElement {
                    label: "-n".into(),
                    operator: minus,
                },
            ],
            failure: None,
        }
    }

    /// Computational-basis measurement on `qubits` qubits (1 or 2).
    pub fn computational(qubits: u32) -> Self {
        let dim = 1usize << qubits;
        let elements = (0..dim)
            .map(|i| {
                let mut diag = vec![0.0; dim];
                diag[i] = 1.0;
                PovmElement {
                    label: format!("{:0width$b}", i, width = qubits as usize),
                    operator: ComplexMatrix::from_diagonal(&diag),
                }
            })
            .collect();
        Self {
            elements,
            failure: None,
        }
    }

    /// Ideal projective Bell measurement, elements in [`BellState::ALL`] order.
    pub fn bell() -> Self {
        Self {
            elements: BellState::ALL
                .iter()
                .map(|b| PovmElement {
                    label: b.label().into(),
                    operator: b.projector(),
                })
                .collect(),
            failure: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].operator.dim()
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn failure(&self) -> Option<&ComplexMatrix> {
        self.failure.as_ref()
    }

    pub fn label(&self, outcome: Outcome) -> &str {
        match outcome {
            Outcome::Element(i) => &self.elements[i].label,
            Outcome::Failure => "failure",
        }
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.label == label)
    }

    /// `max |Σ E + F - I|`
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim());
        for e in &self.elements {
            sum = &sum + &e.operator;
        }
        if let Some(f) = &self.failure {
            sum = &sum + f;
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim()))
    }

    /// Outcome probabilities, elements first and the failure element last.
    pub fn probabilities<S: BornRule + ?Sized>(&self, state: &S) -> Vec<f64> {
        assert_eq!(state.dim(), self.dim(), "state and POVM dimensions differ");
        self.elements
            .iter()
            .map(|e| &e.operator)
            .chain(self.failure.iter())
            .map(|op| state.born_probability(op))
            .collect()
    }

    /// Outcome corresponding to a position in [`Self::probabilities`].
    pub fn outcome_at(&self, index: usize) -> Outcome {
        if index < self.elements.len() {
            Outcome::Element(index)
        } else {
            Outcome::Failure
        }
    }
}

fn axis_projectors(theta: f64, phi: f64) -> [ComplexMatrix; 2] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let n_sigma =
        &(&pauli::x().scale(st * cp) + &pauli::y().scale(st * sp)) + &pauli::z().scale(ct);
    let id = pauli::identity();
    [(&id + &n_sigma).scale(0.5), (&id - &n_sigma).scale(0.5)]
}

#[derive(Clone, Debug)]
pub struct ConditionalOutcome {
    pub label: String,
    pub probability: f64,
    pub state: DensityMatrix,
}

/// Post-measurement states of the unmeasured qubit.
#[derive(Clone, Debug)]
pub struct ConditionalEnsemble {
    pub outcomes: Vec<ConditionalOutcome>,
}

impl ConditionalEnsemble {
    /// `Σ_b p_b S(ρ_{A|b})`
    pub fn average_entropy(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.probability * entropy(&o.state))
            .sum()
    }
}

/// Unnormalized `Tr_B[(I ⊗ Π) ρ]` for a 4x4 `ρ` and 2x2 `Π`.
fn reduced_after_effect(rho: &ComplexMatrix, effect: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = r(0.0);
            for b in 0..2 {
                for bp in 0..2 {
                    acc += effect[(b, bp)] * rho[(2 * i + bp, 2 * j + b)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    let out_h = out.adjoint();
    (&out + &out_h).scale(0.5)
}

/// Measures qubit B of `rho` with the 2x2 POVM `m` and returns the
/// conditional states of qubit A.
pub fn measure_conditional(
    rho: &DensityMatrix,
    m: &MeasurementModel,
) -> Result<ConditionalEnsemble> {
    require_two_qubit(rho)?;
    if m.dim() != 2 {
        return Err(Error::InvalidPovm(format!(
            "conditioning needs a single-qubit POVM, got dimension {}",
            m.dim()
        )));
    }
    let effects = m
        .elements
        .iter()
        .map(|e| (e.label.as_str(), &e.operator))
        .chain(m.failure.iter().map(|f| ("failure", f)));
    let mut outcomes = Vec::new();
    for (label, effect) in effects {
        let lifted = tensor(&pauli::identity(), effect)?;
        let p = lifted.trace_product(rho.matrix()).re;
        if p < MIN_OUTCOME_PROBABILITY {
            continue;
        }
        let cond = reduced_after_effect(rho.matrix(), effect).scale(1.0 / p);
        outcomes.push(ConditionalOutcome {
            label: label.to_string(),
            probability: p,
            state: DensityMatrix::from_trusted(cond),
        });
    }
    Ok(ConditionalEnsemble { outcomes })
}

/// `Σ_b p_b S(ρ_{A|b})` for the projective measurement along `(θ, φ)` on
/// qubit B of a 4x4 state.
fn average_conditional_entropy(rho: &ComplexMatrix, theta: f64, phi: f64) -> f64 {
    axis_projectors(theta, phi)
        .iter()
        .map(|effect| {
            let unnorm = reduced_after_effect(rho, effect);
            let p = unnorm.trace().re;
            if p < MIN_OUTCOME_PROBABILITY {
                return 0.0;
            }
            let ev = spectrum(&unnorm.scale(1.0 / p));
            p * entropy_of_spectrum(&ev)
        })
        .sum()
}

fn oriented(rho: &DensityMatrix, side: Subsystem) -> Result<ComplexMatrix> {
    require_two_qubit(rho)?;
    Ok(match side {
        Subsystem::B => rho.matrix().clone(),
        Subsystem::A => swap_subsystems(rho.matrix())?,
    })
}

/// Classical correlation obtained from one fixed projective measurement on
/// `side`, i.e. `S(ρ_rest) - Σ p_b S(ρ_{rest|b})` without optimization.
pub fn classical_correlation_at(
    rho: &DensityMatrix,
    side: Subsystem,
    theta: f64,
    phi: f64,
) -> Result<f64> {
    let m = oriented(rho, side)?;
    let rest = entropy(&marginal(rho, side.other()));
    Ok(rest - average_conditional_entropy(&m, theta, phi))
}

/// Optimized classical correlation and the measurement axis achieving it.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassicalCorrelation {
    pub value: f64,
    pub theta: f64,
    pub phi: f64,
}

/// `J(A|B)` when `side = B` (B is measured), `J(B|A)` when `side = A`.
pub fn classical_correlation(rho: &DensityMatrix, side: Subsystem) -> Result<ClassicalCorrelation> {
    let m = oriented(rho, side)?;
    let rest = entropy(&marginal(rho, side.other()));
    let objective = |[theta, phi]: [f64; 2]| average_conditional_entropy(&m, theta, phi);

    let theta_step = PI / (GRID_THETA - 1) as f64;
    let phi_step = 2.0 * PI / GRID_PHI as f64;
    // Strict comparison keeps the lexicographically smallest grid optimum.
    let mut best = ([0.0, 0.0], f64::INFINITY);
    for i in 0..GRID_THETA {
        for j in 0..GRID_PHI {
            let point = [i as f64 * theta_step, j as f64 * phi_step];
            let value = objective(point);
            if value < best.1 {
                best = (point, value);
            }
        }
    }
    let refined = nelder_mead(objective, best.0, theta_step, REFINE_FTOL, REFINE_MAX_ITER);
    let (point, value) = if refined.value <= best.1 {
        (refined.point, refined.value)
    } else {
        best
    };
    let (theta, phi) = normalize_angles(point[0], point[1]);
    Ok(ClassicalCorrelation {
        value: (rest - value).max(0.0),
        theta,
        phi,
    })
}

/// Maps arbitrary angles to `θ ∈ [0, π]`, `φ ∈ [0, 2π)` for the same axis.
fn normalize_angles(theta: f64, phi: f64) -> (f64, f64) {
    let (st, ct) = theta.sin_cos();
    let (x, y, z) = (st * phi.cos(), st * phi.sin(), ct);
    let theta = z.clamp(-1.0, 1.0).acos();
    let mut phi = if x.abs() < 1e-15 && y.abs() < 1e-15 {
        0.0
    } else {
        y.atan2(x)
    };
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    if phi >= 2.0 * PI {
        phi -= 2.0 * PI;
    }
    (theta, phi)
}

/// Mutual information, classical correlation and discord of a two-qubit
/// state, all in bits.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CorrelationReport {
    pub mutual_info: f64,
    pub classical_corr: f64,
    pub discord: f64,
    pub theta: f64,
    pub phi: f64,
}

/// `δ(A|B) = I(A,B) - J(A|B)` for `side = B`; `δ(B|A)` for `side = A`.
pub fn discord(rho: &DensityMatrix, side: Subsystem) -> Result<CorrelationReport> {
    let mutual_info = mutual_information(rho)?;
    let j = classical_correlation(rho, side)?;
    let classical_corr = j.value.min(mutual_info);
    Ok(CorrelationReport {
        mutual_info,
        classical_corr,
        discord: mutual_info - classical_corr,
        theta: j.theta,
        phi: j.phi,
    })
}

/// Holevo quantity `S(Σ p_i ρ_i) - Σ p_i S(ρ_i)`.
pub fn holevo(ensemble: &[(f64, DensityMatrix)]) -> Result<f64> {
    let total: f64 = ensemble.iter().map(|(p, _)| p).sum();
    if ensemble.iter().any(|(p, _)| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > POVM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "ensemble weights must be non-negative and sum to 1 (sum = {total})"
        )));
    }
    let average = DensityMatrix::mixture(ensemble)?;
    let mean_entropy: f64 = ensemble.iter().map(|(p, rho)| p * entropy(rho)).sum();
    Ok((entropy(&average) - mean_entropy).max(0.0))
}
