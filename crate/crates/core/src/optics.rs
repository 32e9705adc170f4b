//! Two-photon Fock-space model of the linear-optical controlled-Z gate and
//! of the Bell-state analyzer built from it.
//!
//! Eight optical modes are tracked: two spatial arms (`a` carries qubit A,
//! `b` carries qubit B), two polarizations (`H = |0>`, `V = |1>`) and two
//! temporal bins. Photon `a` always occupies the reference bin; photon `b`
//! has amplitude `v` in the reference bin and `sqrt(1 - v^2)` in an orthogonal
//! bin, where `v^2 = 1 - ξ` is the wavepacket overlap left by a delay `Δτ`.
//!
//! A two-photon state `Σ_{i<=j} c_ij |i j>` is stored as its 36 amplitudes
//! over unordered mode pairs. `|i j>` is `a_i^† a_j^† |0>` for `i < j` and
//! `(a_i^†)^2 / sqrt(2) |0>` for `i = j`, so the squared norm is `Σ |c_ij|^2`.
//! Internally linear optics acts on the symmetric coefficient tensor `T`
//! with `Σ_ij T_ij a_i^† a_j^†`, which transforms as `T -> U T U^T`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex64;

use crate::correlations::{MeasurementModel, PovmElement};
use crate::error::{check_range, Error, Result};
use crate::qlin::{r, ComplexMatrix};
use crate::qstate::BellState;

pub const MODE_COUNT: usize = 8;
pub const PAIR_COUNT: usize = MODE_COUNT * (MODE_COUNT + 1) / 2;
/// `ΔωΔτ = c_scale · Δτ/τ_coh`; `τ_coh := 2π/Δω`.
pub const DEFAULT_C_SCALE: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arm {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub fn from_bit(bit: usize) -> Self {
        if bit == 0 {
            Pol::H
        } else {
            Pol::V
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TemporalBin {
    Matched,
    Orthogonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OpticalMode {
    pub arm: Arm,
    pub pol: Pol,
    pub temporal: TemporalBin,
}

impl OpticalMode {
    pub const fn new(arm: Arm, pol: Pol, temporal: TemporalBin) -> Self {
        Self { arm, pol, temporal }
    }

    /// `4 * arm + 2 * pol + temporal`
    pub fn index(self) -> usize {
        let arm = match self.arm {
            Arm::A => 0,
            Arm::B => 1,
        };
        let pol = match self.pol {
            Pol::H => 0,
            Pol::V => 1,
        };
        let temporal = match self.temporal {
            TemporalBin::Matched => 0,
            TemporalBin::Orthogonal => 1,
        };
        4 * arm + 2 * pol + temporal
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < MODE_COUNT, "mode index out of range");
        Self {
            arm: if i & 4 == 0 { Arm::A } else { Arm::B },
            pol: if i & 2 == 0 { Pol::H } else { Pol::V },
            temporal: if i & 1 == 0 {
                TemporalBin::Matched
            } else {
                TemporalBin::Orthogonal
            },
        }
    }

    pub fn all() -> impl Iterator<Item = OpticalMode> {
        (0..MODE_COUNT).map(Self::from_index)
    }
}

/// Position of the unordered pair `{i, j}` in the 36-amplitude layout.
pub fn pair_index(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    lo * MODE_COUNT - lo * (lo.saturating_sub(1)) / 2 + (hi - lo)
}

/// Exactly-two-photon state; the norm may drop below 1 after lossy
/// elements or post-selection.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhotonFockState {
    amplitudes: Vec<Complex64>,
}

impl TwoPhotonFockState {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != PAIR_COUNT {
            return Err(Error::DimensionMismatch {
                expected: PAIR_COUNT,
                found: amplitudes.len(),
            });
        }
        Ok(Self { amplitudes })
    }

    /// One photon in each of two (possibly equal) modes, normalized.
    pub fn from_photons(first: OpticalMode, second: OpticalMode) -> Self {
        let mut amplitudes = vec![r(0.0); PAIR_COUNT];
        amplitudes[pair_index(first.index(), second.index())] = r(1.0);
        Self { amplitudes }
    }

    /// `a^†(f) a^†(g) |0>` for single-photon mode functions `f`, `g`.
    pub fn from_wavepackets(
        f: &[(OpticalMode, Complex64)],
        g: &[(OpticalMode, Complex64)],
    ) -> Self {
        let mut t = ComplexMatrix::zeros(MODE_COUNT);
        for &(mf, af) in f {
            for &(mg, ag) in g {
                let (i, j) = (mf.index(), mg.index());
                t[(i, j)] += af * ag * 0.5;
                t[(j, i)] += af * ag * 0.5;
            }
        }
        Self::from_tensor(&t)
    }

    fn to_tensor(&self) -> ComplexMatrix {
        let mut t = ComplexMatrix::zeros(MODE_COUNT);
        for i in 0..MODE_COUNT {
            for j in i..MODE_COUNT {
                let c = self.amplitudes[pair_index(i, j)];
                if i == j {
                    t[(i, i)] = c / SQRT_2;
                } else {
                    t[(i, j)] = c * 0.5;
                    t[(j, i)] = c * 0.5;
                }
            }
        }
        t
    }

    fn from_tensor(t: &ComplexMatrix) -> Self {
        let mut amplitudes = vec![r(0.0); PAIR_COUNT];
        for i in 0..MODE_COUNT {
            for j in i..MODE_COUNT {
                amplitudes[pair_index(i, j)] = if i == j {
                    t[(i, i)] * SQRT_2
                } else {
                    t[(i, j)] + t[(j, i)]
                };
            }
        }
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, first: OpticalMode, second: OpticalMode) -> Complex64 {
        self.amplitudes[pair_index(first.index(), second.index())]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Probability of one photon in each arm.
    pub fn coincidence_probability(&self) -> f64 {
        let mut p = 0.0;
        for i in 0..4 {
            for j in 4..MODE_COUNT {
                p += self.amplitudes[pair_index(i, j)].norm_sqr();
            }
        }
        p
    }

    /// Applies the single-photon mode map `a_i^† -> Σ_k U_ki a_k^†`.
    pub fn transform(&self, u: &ModeTransform) -> Self {
        let t = self.to_tensor();
        let ut = &u.0 * &t;
        let mut out = ComplexMatrix::zeros(MODE_COUNT);
        // (U T) U^T
        for i in 0..MODE_COUNT {
            for j in 0..MODE_COUNT {
                let mut acc = r(0.0);
                for k in 0..MODE_COUNT {
                    acc += ut[(i, k)] * u.0[(j, k)];
                }
                out[(i, j)] = acc;
            }
        }
        Self::from_tensor(&out)
    }
}

/// Reflectivities (intensity) of a partially polarizing beamsplitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PpbsSpec {
    pub eta_h: f64,
    pub eta_v: f64,
}

impl PpbsSpec {
    pub fn new(eta_h: f64, eta_v: f64) -> Result<Self> {
        check_range("eta_h", eta_h, 0.0, 1.0, "[0, 1]")?;
        check_range("eta_v", eta_v, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { eta_h, eta_v })
    }

    /// The controlled-Z element: `η_V = 2/3`, `η_H = 0`.
    pub fn cz() -> Self {
        Self {
            eta_h: 0.0,
            eta_v: 2.0 / 3.0,
        }
    }

    fn eta(&self, pol: Pol) -> f64 {
        match pol {
            Pol::H => self.eta_h,
            Pol::V => self.eta_v,
        }
    }
}

/// Linear map on the eight single-photon creation operators, stored as
/// `U[out, in]`. Attenuators make it sub-unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTransform(ComplexMatrix);

impl ModeTransform {
    pub fn identity() -> Self {
        Self(ComplexMatrix::identity(MODE_COUNT))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// Per polarization, arm `a` maps to `sqrt(1-η) a + sqrt(η) b` and arm
    /// `b` to `-sqrt(η) a + sqrt(1-η) b`; temporal bins are untouched.
    pub fn beamsplitter(spec: &PpbsSpec) -> Self {
        let mut u = ComplexMatrix::zeros(MODE_COUNT);
        for pol in [Pol::H, Pol::V] {
            let eta = spec.eta(pol);
            let (t, rf) = ((1.0 - eta).sqrt(), eta.sqrt());
            for temporal in [TemporalBin::Matched, TemporalBin::Orthogonal] {
                let a = OpticalMode::new(Arm::A, pol, temporal).index();
                let b = OpticalMode::new(Arm::B, pol, temporal).index();
                u[(a, a)] = r(t);
                u[(b, a)] = r(rf);
                u[(a, b)] = r(-rf);
                u[(b, b)] = r(t);
            }
        }
        Self(u)
    }

    /// Half-wave plate at 22.5°: `H -> (H+V)/√2`, `V -> (H-V)/√2` in one arm.
    pub fn hadamard(arm: Arm) -> Self {
        let mut u = ComplexMatrix::identity(MODE_COUNT);
        for temporal in [TemporalBin::Matched, TemporalBin::Orthogonal] {
            let h = OpticalMode::new(arm, Pol::H, temporal).index();
            let v = OpticalMode::new(arm, Pol::V, temporal).index();
            u[(h, h)] = r(FRAC_1_SQRT_2);
            u[(v, h)] = r(FRAC_1_SQRT_2);
            u[(h, v)] = r(FRAC_1_SQRT_2);
            u[(v, v)] = r(-FRAC_1_SQRT_2);
        }
        Self(u)
    }

    /// Amplitude transmission `amplitude` for one polarization in one arm.
    pub fn attenuator(arm: Arm, pol: Pol, amplitude: f64) -> Self {
        let mut u = ComplexMatrix::identity(MODE_COUNT);
        for temporal in [TemporalBin::Matched, TemporalBin::Orthogonal] {
            let m = OpticalMode::new(arm, pol, temporal).index();
            u[(m, m)] = r(amplitude);
        }
        Self(u)
    }
}

pub fn apply_beamsplitter(state: &TwoPhotonFockState, spec: &PpbsSpec) -> TwoPhotonFockState {
    state.transform(&ModeTransform::beamsplitter(spec))
}

/// One optical element of the gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CircuitStep {
    Ppbs(PpbsSpec),
    Hadamard(Arm),
    Attenuate { arm: Arm, pol: Pol, amplitude: f64 },
}

impl CircuitStep {
    pub fn transform(&self) -> ModeTransform {
        match *self {
            CircuitStep::Ppbs(spec) => ModeTransform::beamsplitter(&spec),
            CircuitStep::Hadamard(arm) => ModeTransform::hadamard(arm),
            CircuitStep::Attenuate {
                arm,
                pol,
                amplitude,
            } => ModeTransform::attenuator(arm, pol, amplitude),
        }
    }
}

/// Post-selected controlled-Z: a central PPBS followed by `1/√3` amplitude
/// attenuation of `H` in both arms, so all four computational inputs succeed
/// with probability 1/9.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CzCircuit {
    pub ppbs: PpbsSpec,
    pub balance_amplitude: f64,
}

pub fn cz_circuit() -> CzCircuit {
    CzCircuit {
        ppbs: PpbsSpec::cz(),
        balance_amplitude: 1.0 / 3.0f64.sqrt(),
    }
}

impl CzCircuit {
    pub fn core_steps(&self) -> Vec<CircuitStep> {
        vec![
            CircuitStep::Ppbs(self.ppbs),
            CircuitStep::Attenuate {
                arm: Arm::A,
                pol: Pol::H,
                amplitude: self.balance_amplitude,
            },
            CircuitStep::Attenuate {
                arm: Arm::B,
                pol: Pol::H,
                amplitude: self.balance_amplitude,
            },
        ]
    }

    /// Bell analyzer: Hadamard on the target (arm `b`) before and after the
    /// CZ core and on the control (arm `a`) after it.
    pub fn bell_measurement_steps(&self) -> Vec<CircuitStep> {
        let mut steps = vec![CircuitStep::Hadamard(Arm::B)];
        steps.extend(self.core_steps());
        steps.push(CircuitStep::Hadamard(Arm::B));
        steps.push(CircuitStep::Hadamard(Arm::A));
        steps
    }
}

pub fn run_circuit(state: &TwoPhotonFockState, steps: &[CircuitStep]) -> TwoPhotonFockState {
    steps
        .iter()
        .fold(state.clone(), |s, step| s.transform(&step.transform()))
}

/// Temporal delay between the photons, expressed through `ξ = 1 - e^{-(ΔωΔτ)^2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MismatchModel {
    dtau_ratio: f64,
    c_scale: f64,
}

impl MismatchModel {
    pub fn new(dtau_ratio: f64, c_scale: f64) -> Result<Self> {
        check_range("dtau_ratio", dtau_ratio, 0.0, f64::MAX, "[0, inf)")?;
        if !(c_scale.is_finite() && c_scale > 0.0) {
            return Err(Error::Domain {
                name: "c_scale",
                value: c_scale,
                range: "(0, inf)",
            });
        }
        Ok(Self {
            dtau_ratio,
            c_scale,
        })
    }

    pub fn ideal() -> Self {
        Self {
            dtau_ratio: 0.0,
            c_scale: DEFAULT_C_SCALE,
        }
    }

    pub fn dtau_ratio(&self) -> f64 {
        self.dtau_ratio
    }

    pub fn c_scale(&self) -> f64 {
        self.c_scale
    }

    /// `ΔωΔτ`
    pub fn bandwidth_delay_product(&self) -> f64 {
        self.c_scale * self.dtau_ratio
    }

    pub fn xi(&self) -> f64 {
        xi_of_dtau(self)
    }

    /// Wavepacket overlap amplitude `v = sqrt(1 - ξ)`.
    pub fn overlap(&self) -> f64 {
        let x = self.bandwidth_delay_product();
        (-0.5 * x * x).exp()
    }
}

pub fn xi_of_dtau(m: &MismatchModel) -> f64 {
    let x = m.bandwidth_delay_product();
    -(-x * x).exp_m1()
}

/// Detection-conditioned amplitudes of the gate: one 4x4 matrix per pair of
/// temporal bins `(bin of the arm-a click, bin of the arm-b click)`. Row
/// `2x + y` is the detected polarization pair, column `2P + Q` the input
/// computational state.
#[derive(Clone, Debug)]
pub struct PostSelectedMap {
    sectors: Vec<ComplexMatrix>,
}

impl PostSelectedMap {
    pub fn sectors(&self) -> &[ComplexMatrix] {
        &self.sectors
    }

    /// `Σ_s K_s^† K_s`: coincidence probability operator on the input.
    pub fn success_operator(&self) -> ComplexMatrix {
        self.sectors
            .iter()
            .fold(ComplexMatrix::zeros(4), |acc, k| &acc + &(&k.adjoint() * k))
    }

    pub fn success_probability(&self, input: usize) -> f64 {
        self.success_operator()[(input, input)].re
    }

    /// Process fidelity of the success-normalized map with the unitary `u`.
    pub fn process_fidelity(&self, u: &ComplexMatrix) -> f64 {
        let overlap: f64 = self
            .sectors
            .iter()
            .map(|k| (&u.adjoint() * k).trace().norm_sqr())
            .sum();
        let weight: f64 = self
            .sectors
            .iter()
            .map(|k| (&k.adjoint() * k).trace().re)
            .sum();
        overlap / (4.0 * weight)
    }

    /// Effect operator for detecting polarizations `row = 2x + y`.
    pub fn effect(&self, row: usize) -> ComplexMatrix {
        let mut e = ComplexMatrix::zeros(4);
        for k in &self.sectors {
            for i in 0..4 {
                for j in 0..4 {
                    e[(i, j)] += k[(row, i)].conj() * k[(row, j)];
                }
            }
        }
        e
    }
}

/// Runs every computational input through `steps` with photon `b` at
/// overlap `v` and reads off the coincidence amplitudes.
pub fn post_selected_map(steps: &[CircuitStep], v: f64) -> PostSelectedMap {
    let v = v.clamp(0.0, 1.0);
    let w = (1.0 - v * v).max(0.0).sqrt();
    let bins = [TemporalBin::Matched, TemporalBin::Orthogonal];
    let mut sectors = vec![ComplexMatrix::zeros(4); 4];
    for input in 0..4 {
        let (pa, pb) = (Pol::from_bit(input >> 1), Pol::from_bit(input & 1));
        let photon_a = [(OpticalMode::new(Arm::A, pa, TemporalBin::Matched), r(1.0))];
        let photon_b = [
            (OpticalMode::new(Arm::B, pb, TemporalBin::Matched), r(v)),
            (OpticalMode::new(Arm::B, pb, TemporalBin::Orthogonal), r(w)),
        ];
        let out = run_circuit(
            &TwoPhotonFockState::from_wavepackets(&photon_a, &photon_b),
            steps,
        );
        for (s, (ta, tb)) in bins
            .iter()
            .flat_map(|&ta| bins.iter().map(move |&tb| (ta, tb)))
            .enumerate()
        {
            for row in 0..4 {
                let ma = OpticalMode::new(Arm::A, Pol::from_bit(row >> 1), ta);
                let mb = OpticalMode::new(Arm::B, Pol::from_bit(row & 1), tb);
                sectors[s][(row, input)] = out.amplitude(ma, mb);
            }
        }
    }
    PostSelectedMap { sectors }
}

/// Bell state identified by detecting polarizations `(x, y)` at the analyzer
/// output (`x` in arm `a`).
pub fn bell_outcome_for_detection(x: usize, y: usize) -> BellState {
    match (x, y) {
        (0, 0) => BellState::PhiPlus,
        (1, 0) => BellState::PhiMinus,
        (0, 1) => BellState::PsiPlus,
        (1, 1) => BellState::PsiMinus,
        _ => panic!("detection bits must be 0 or 1"),
    }
}

/// Effective two-qubit POVM of the photonic Bell analyzer at overlap `v`,
/// elements in [`BellState::ALL`] order plus the non-coincidence element.
pub fn effective_bell_povm_for_overlap(v: f64) -> MeasurementModel {
    let map = post_selected_map(&cz_circuit().bell_measurement_steps(), v);
    let mut elements: Vec<PovmElement> = Vec::with_capacity(4);
    for bell in BellState::ALL {
        let row = (0..4)
            .find(|&row| bell_outcome_for_detection(row >> 1, row & 1) == bell)
            .unwrap();
        elements.push(PovmElement {
            label: bell.label().to_string(),
            operator: map.effect(row),
        });
    }
    let success = elements
        .iter()
        .fold(ComplexMatrix::zeros(4), |acc, e| &acc + &e.operator);
    let failure = &ComplexMatrix::identity(4) - &success;
    MeasurementModel::new(elements, Some(failure)).expect("analyzer POVM is complete and positive")
}

pub fn effective_bell_povm(m: &MismatchModel) -> MeasurementModel {
    effective_bell_povm_for_overlap(m.overlap())
}

/// Largest anti-diagonal entry `|E_03|, |E_12|`: the coherences that
/// distinguish `phi+` from `phi-` and `psi+` from `psi-`.
pub fn bell_coherence(effect: &ComplexMatrix) -> f64 {
    [(0, 3), (1, 2), (2, 1), (3, 0)]
        .iter()
        .map(|&ij| effect[ij].norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlin::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn mode(arm: Arm, pol: Pol, temporal: TemporalBin) -> OpticalMode {
        OpticalMode::new(arm, pol, temporal)
    }

    const M: TemporalBin = TemporalBin::Matched;
    const O: TemporalBin = TemporalBin::Orthogonal;

    #[test]
    fn mode_and_pair_indices_are_bijective() {
        for i in 0..MODE_COUNT {
            assert_eq!(OpticalMode::from_index(i).index(), i);
        }
        let mut seen = [false; PAIR_COUNT];
        for i in 0..MODE_COUNT {
            for j in i..MODE_COUNT {
                let k = pair_index(i, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(pair_index(j, i), k);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn xi_examples() {
        assert_eq!(MismatchModel::new(0.0, DEFAULT_C_SCALE).unwrap().xi(), 0.0);
        let unit = MismatchModel::new(1.0, 1.0).unwrap();
        assert!((unit.xi() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((unit.xi() - 0.632_120_6).abs() < 1e-7);
        let far = MismatchModel::new(100.0, 1.0).unwrap();
        assert_eq!(far.xi(), 1.0);
        let m = MismatchModel::new(0.07, DEFAULT_C_SCALE).unwrap();
        assert!((m.overlap().powi(2) - (1.0 - m.xi())).abs() < 1e-15);
    }

    #[test]
    fn mismatch_rejects_bad_inputs() {
        assert!(matches!(
            MismatchModel::new(-0.1, 1.0),
            Err(Error::Domain {
                name: "dtau_ratio",
                ..
            })
        ));
        assert!(MismatchModel::new(0.1, 0.0).is_err());
        assert!(MismatchModel::new(f64::NAN, 1.0).is_err());
        assert!(PpbsSpec::new(0.0, 1.2).is_err());
    }

    #[test]
    fn zero_reflectivity_is_identity() {
        let spec = PpbsSpec::new(0.0, 0.0).unwrap();
        assert_eq!(
            ModeTransform::beamsplitter(&spec),
            ModeTransform::identity()
        );
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let spec = PpbsSpec::new(0.0, 0.5).unwrap();
        let input =
            TwoPhotonFockState::from_photons(mode(Arm::A, Pol::V, M), mode(Arm::B, Pol::V, M));
        let out = apply_beamsplitter(&input, &spec);
        assert!(
            out.amplitude(mode(Arm::A, Pol::V, M), mode(Arm::B, Pol::V, M))
                .norm()
                < 1e-15
        );
        assert!(out.coincidence_probability() < 1e-12);
        // Both photons bunch: |2,0> and |0,2> with probability 1/2 each.
        assert!(
            (out.amplitude(mode(Arm::A, Pol::V, M), mode(Arm::A, Pol::V, M))
                .norm_sqr()
                - 0.5)
                .abs()
                < 1e-12
        );
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cz_reflectivity_gives_minus_one_third() {
        let input =
            TwoPhotonFockState::from_photons(mode(Arm::A, Pol::V, M), mode(Arm::B, Pol::V, M));
        let out = apply_beamsplitter(&input, &PpbsSpec::cz());
        let amp = out.amplitude(mode(Arm::A, Pol::V, M), mode(Arm::B, Pol::V, M));
        assert!((amp - r(-1.0 / 3.0)).norm() < 1e-15, "{amp}");
    }

    #[test]
    fn distinguishable_photons_add_classically() {
        let input =
            TwoPhotonFockState::from_photons(mode(Arm::A, Pol::V, M), mode(Arm::B, Pol::V, O));
        let out = apply_beamsplitter(&input, &PpbsSpec::cz());
        assert!((out.coincidence_probability() - 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn wavepacket_constructor_matches_basis_constructor() {
        let a = mode(Arm::A, Pol::H, M);
        let b = mode(Arm::B, Pol::V, O);
        let s1 = TwoPhotonFockState::from_photons(a, b);
        let s2 = TwoPhotonFockState::from_wavepackets(&[(a, r(1.0))], &[(b, r(1.0))]);
        assert_eq!(s1, s2);
        // Two photons in one mode: a^†a^†|0> = √2 |2>.
        let doubled = TwoPhotonFockState::from_wavepackets(&[(a, r(1.0))], &[(a, r(1.0))]);
        assert!((doubled.amplitude(a, a) - r(SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn beamsplitter_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let amps: Vec<Complex64> = (0..PAIR_COUNT)
                .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let state =
                TwoPhotonFockState::from_amplitudes(amps.iter().map(|z| z / norm).collect())
                    .unwrap();
            let spec = PpbsSpec::new(rng.random(), rng.random()).unwrap();
            let out = apply_beamsplitter(&state, &spec);
            assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
            let had = state.transform(&ModeTransform::hadamard(Arm::A));
            assert!((had.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ideal_core_is_controlled_z() {
        let map = post_selected_map(&cz_circuit().core_steps(), 1.0);
        let cz = ComplexMatrix::from_diagonal(&[1.0, 1.0, 1.0, -1.0]);
        assert!(map.sectors()[0].max_abs_diff(&cz.scale(1.0 / 3.0)) < 1e-15);
        assert!(map.process_fidelity(&cz) >= 1.0 - 1e-9);
        for input in 0..4 {
            assert!((map.success_probability(input) - 1.0 / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ideal_analyzer_is_a_bell_measurement() {
        let povm = effective_bell_povm_for_overlap(1.0);
        for (e, bell) in povm.elements().iter().zip(BellState::ALL) {
            assert_eq!(e.label, bell.label());
            assert!(e.operator.max_abs_diff(&bell.projector().scale(1.0 / 9.0)) < 1e-12);
        }
        let failure = povm.failure().unwrap();
        assert!(failure.max_abs_diff(&ComplexMatrix::identity(4).scale(8.0 / 9.0)) < 1e-12);
    }

    #[test]
    fn analyzer_povm_is_complete_and_positive() {
        for v in [0.0, 0.25, 0.5, 0.75, 1.0] {
            // MeasurementModel::new re-validates positivity and completeness.
            let povm = effective_bell_povm_for_overlap(v);
            assert!(povm.completeness_residual() <= 1e-8);
            for e in povm.elements() {
                let min = crate::qlin::eig_hermitian(&e.operator).unwrap().eigenvalues[0];
                assert!(min >= -1e-8);
            }
        }
    }

    #[test]
    fn incoherent_analyzer_loses_bell_coherence() {
        let povm = effective_bell_povm_for_overlap(0.0);
        for e in povm.elements() {
            assert!(bell_coherence(&e.operator) < 1e-15, "{}", e.label);
        }
        let partial = effective_bell_povm_for_overlap(0.5);
        assert!(partial
            .elements()
            .iter()
            .all(|e| bell_coherence(&e.operator) > 1e-3));
        let far = effective_bell_povm(&MismatchModel::new(10.0, DEFAULT_C_SCALE).unwrap());
        assert!(far
            .elements()
            .iter()
            .all(|e| bell_coherence(&e.operator) <= 1e-6));
    }

    #[test]
    fn renormalized_ideal_statistics_match_bell_projectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let povm = effective_bell_povm_for_overlap(1.0);
        let ideal = MeasurementModel::bell();
        for _ in 0..50 {
            let ket: Vec<Complex64> = (0..4)
                .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let ket: Vec<Complex64> = ket.iter().map(|z| z / norm).collect();
            let p = povm.probabilities(&ket);
            let success: f64 = p[..4].iter().sum();
            let q = ideal.probabilities(&ket);
            for i in 0..4 {
                assert!((p[i] / success - q[i]).abs() < 1e-10);
            }
        }
    }
}
