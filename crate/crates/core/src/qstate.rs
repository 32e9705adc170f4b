//! Quantum states and the maps applied to them: Pauli operators, Bell
//! states, the three-Bell resource state and its separable preparation, white
//! noise and the Pauli encodings `U_k = X^{b1} Z^{b2}` on qubit A.
//!
//! The logical mapping `|H> -> |0>`, `|V> -> |1>` is used everywhere.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::qlin::{c, eig_hermitian, kron_vec, r, tensor, ComplexMatrix};

pub const HERMITIAN_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;

pub mod pauli {
    use super::*;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_vec(2, vec![r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0)]).unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&[1.0, -1.0])
    }

    pub fn hadamard() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, -1.0]])
            .unwrap()
            .scale(FRAC_1_SQRT_2)
    }
}

/// A validated density operator on one (`dim = 2`) or two (`dim = 4`) qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.dim() != 2 && m.dim() != 4 {
            return Err(Error::Malformed(format!(
                "density matrices must be 2x2 or 4x4, got {0}x{0}",
                m.dim()
            )));
        }
        let residual = m.hermiticity_residual();
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = eig_hermitian(&m)?.eigenvalues[0];
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self(m))
    }

    /// Skips validation; only for maps known to preserve the invariants.
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        debug_assert!(m.hermiticity_residual() < 1e-6);
        Self(m)
    }

    /// `|ket><ket|` after normalizing `ket`.
    pub fn from_pure(ket: &[Complex64]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Malformed("zero state vector".into()));
        }
        let normalized: Vec<Complex64> = ket.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&normalized))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Ascending spectrum.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian(&self.0)
            .expect("density matrices are Hermitian")
            .eigenvalues
    }

    /// `sum_i p_i rho_i` over a probability-weighted list of same-size states.
    pub fn mixture(members: &[(f64, DensityMatrix)]) -> Result<Self> {
        let dim = members
            .first()
            .ok_or_else(|| Error::InvalidDistribution("empty mixture".into()))?
            .1
            .dim();
        let mut acc = ComplexMatrix::zeros(dim);
        for (p, rho) in members {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rho.dim(),
                });
            }
            acc = &acc + &rho.0.scale(*p);
        }
        Self::new(acc)
    }

    pub fn to_document(&self) -> MatrixDocument {
        MatrixDocument::from(&self.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("plain numeric document")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MatrixDocument = serde_json::from_str(text)?;
        Self::new(doc.to_matrix()?)
    }
}

/// JSON interchange form `{"dim": n, "re": [[..]], "im": [[..]]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&ComplexMatrix> for MatrixDocument {
    fn from(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        let re = (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].re).collect())
            .collect();
        let im = (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].im).collect())
            .collect();
        Self { dim: n, re, im }
    }
}

impl MatrixDocument {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let n = self.dim;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(Error::Malformed(format!(
                "\"re\" and \"im\" must both be {n}x{n}"
            )));
        }
        let data = self
            .re
            .iter()
            .flatten()
            .zip(self.im.iter().flatten())
            .map(|(&a, &b)| c(a, b))
            .collect();
        ComplexMatrix::from_vec(n, data)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.label() == label)
    }

    pub fn projector(self) -> ComplexMatrix {
        ComplexMatrix::outer(&bell_state(self))
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn bell_state(which: BellState) -> Vec<Complex64> {
    let s = FRAC_1_SQRT_2;
    let v = match which {
        BellState::PhiPlus => [s, 0.0, 0.0, s],
        BellState::PhiMinus => [s, 0.0, 0.0, -s],
        BellState::PsiPlus => [0.0, s, s, 0.0],
        BellState::PsiMinus => [0.0, s, -s, 0.0],
    };
    v.iter().map(|&x| r(x)).collect()
}

/// Equal mixture of `phi+`, `phi-` and `psi+`.
pub fn resource_state() -> DensityMatrix {
    let sum = [BellState::PhiPlus, BellState::PhiMinus, BellState::PsiPlus]
        .into_iter()
        .fold(ComplexMatrix::zeros(4), |acc, b| &acc + &b.projector());
    DensityMatrix::from_trusted(sum.scale(1.0 / 3.0))
}

/// One of the six single-photon polarizations Alice prepares on both qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::R,
        Polarization::L,
    ];

    pub fn ket(self) -> [Complex64; 2] {
        let s = FRAC_1_SQRT_2;
        match self {
            Polarization::H => [r(1.0), r(0.0)],
            Polarization::V => [r(0.0), r(1.0)],
            Polarization::D => [r(s), r(s)],
            Polarization::A => [r(s), r(-s)],
            Polarization::R => [r(s), c(0.0, s)],
            Polarization::L => [r(s), c(0.0, -s)],
        }
    }

    /// The two-photon product `|PP>`.
    pub fn product_ket(self) -> Vec<Complex64> {
        let k = self.ket();
        kron_vec(&k, &k)
    }
}

/// Probability-weighted list of pure product states.
#[derive(Clone, Debug)]
pub struct ProductEnsemble {
    pub members: Vec<(f64, Polarization, Vec<Complex64>)>,
}

impl ProductEnsemble {
    pub fn mixture(&self) -> DensityMatrix {
        let acc = self
            .members
            .iter()
            .fold(ComplexMatrix::zeros(4), |acc, (w, _, ket)| {
                &acc + &ComplexMatrix::outer(ket).scale(*w)
            });
        DensityMatrix::from_trusted(acc)
    }
}

/// Separable preparation of the resource state: `|PP>` for each of the six
/// Bloch-axis polarizations, weight 1/6 each.
pub fn product_decomposition() -> ProductEnsemble {
    ProductEnsemble {
        members: Polarization::ALL
            .into_iter()
            .map(|p| (1.0 / 6.0, p, p.product_ket()))
            .collect(),
    }
}

/// Schmidt coefficient test for a two-qubit vector: `|ad - bc|` vanishes iff
/// the state is a product.
pub fn product_defect(ket: &[Complex64]) -> f64 {
    assert_eq!(ket.len(), 4);
    (ket[0] * ket[3] - ket[1] * ket[2]).norm()
}

/// `p rho + (1 - p) I / d`
pub fn depolarize(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let d = rho.dim();
    let mixed = ComplexMatrix::identity(d).scale((1.0 - p) / d as f64);
    Ok(DensityMatrix::from_trusted(&rho.0.scale(p) + &mixed))
}

/// Alice's two classical bits `k = (b1, b2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EncodingKey {
    pub b1: bool,
    pub b2: bool,
}

impl EncodingKey {
    pub const ALL: [EncodingKey; 4] = [
        EncodingKey::new(false, false),
        EncodingKey::new(false, true),
        EncodingKey::new(true, false),
        EncodingKey::new(true, true),
    ];

    pub const fn new(b1: bool, b2: bool) -> Self {
        Self { b1, b2 }
    }

    /// `2 * b1 + b2`
    pub fn index(self) -> usize {
        2 * usize::from(self.b1) + usize::from(self.b2)
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < 4, "key index out of range");
        Self::new(i & 2 != 0, i & 1 != 0)
    }

    /// `X^{b1} Z^{b2}` on a single qubit.
    pub fn single_qubit_unitary(self) -> ComplexMatrix {
        let mut u = pauli::identity();
        if self.b2 {
            u = pauli::z();
        }
        if self.b1 {
            u = &pauli::x() * &u;
        }
        u
    }

    /// `U_k ⊗ I`
    pub fn unitary(self) -> ComplexMatrix {
        tensor(&self.single_qubit_unitary(), &pauli::identity()).expect("4x4")
    }
}

impl fmt::Display for EncodingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", u8::from(self.b1), u8::from(self.b2))
    }
}

pub fn encode(rho: &DensityMatrix, k: EncodingKey) -> DensityMatrix {
    assert_eq!(rho.dim(), 4, "encoding acts on two-qubit states");
    DensityMatrix::from_trusted(rho.0.conjugate_by(&k.unitary()))
}

pub fn encode_ket(ket: &[Complex64], k: EncodingKey) -> Vec<Complex64> {
    k.unitary().apply(ket)
}

/// The Bell state absent from `encode(resource_state(), k)`.
pub fn omitted_bell_state(k: EncodingKey) -> BellState {
    match (k.b1, k.b2) {
        (false, false) => BellState::PsiMinus,
        (false, true) => BellState::PsiPlus,
        (true, false) => BellState::PhiMinus,
        (true, true) => BellState::PhiPlus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlin::{partial_trace, Subsystem};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_state(seed: u64) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = ComplexMatrix::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                g[(i, j)] = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
        }
        let m = &g * &g.adjoint();
        let tr = m.trace().re;
        DensityMatrix::new(m.scale(1.0 / tr)).unwrap()
    }

    fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn bell_states_are_orthonormal() {
        let s = FRAC_1_SQRT_2;
        assert_eq!(
            bell_state(BellState::PhiPlus),
            vec![r(s), r(0.0), r(0.0), r(s)]
        );
        assert_eq!(
            bell_state(BellState::PsiMinus),
            vec![r(0.0), r(s), r(-s), r(0.0)]
        );
        for a in BellState::ALL {
            for b in BellState::ALL {
                let ip = inner(&bell_state(a), &bell_state(b));
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - r(expected)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn resource_state_matrix_entries() {
        let rho = resource_state();
        let m = rho.matrix();
        let expected = ComplexMatrix::from_real_rows(&[
            &[1.0 / 3.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0 / 6.0, 1.0 / 6.0, 0.0],
            &[0.0, 1.0 / 6.0, 1.0 / 6.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0 / 3.0],
        ])
        .unwrap();
        assert!(m.max_abs_diff(&expected) < 1e-15);
        assert!((m.trace() - r(1.0)).norm() < 1e-15);
        let psi_minus = bell_state(BellState::PsiMinus);
        assert!(m.expectation(&psi_minus).norm() < 1e-15);
        let ev = rho.eigenvalues();
        for (a, b) in ev.iter().zip([0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn product_decomposition_reproduces_resource_state() {
        let ens = product_decomposition();
        assert_eq!(ens.members.len(), 6);
        let total: f64 = ens.members.iter().map(|m| m.0).sum();
        assert!((total - 1.0).abs() < 1e-15);
        for (w, pol, ket) in &ens.members {
            assert!(product_defect(ket) < 1e-10, "{pol:?}");
            if *pol == Polarization::D {
                assert!((w - 1.0 / 6.0).abs() < 1e-15);
            }
        }
        let diff = ens
            .mixture()
            .matrix()
            .max_abs_diff(resource_state().matrix());
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn depolarize_endpoints_and_spectrum() {
        let rho = resource_state();
        assert!(
            depolarize(&rho, 1.0)
                .unwrap()
                .matrix()
                .max_abs_diff(rho.matrix())
                < 1e-15
        );
        let mm = depolarize(&rho, 0.0).unwrap();
        assert!(
            mm.matrix()
                .max_abs_diff(&ComplexMatrix::identity(4).scale(0.25))
                < 1e-15
        );
        for p in [0.1, 0.37, 0.5, 0.9] {
            let ev = depolarize(&rho, p).unwrap().eigenvalues();
            let low = (1.0 - p) / 4.0;
            let high = p / 3.0 + (1.0 - p) / 4.0;
            assert!((ev[0] - low).abs() < 1e-12);
            assert!(ev[1..].iter().all(|x| (x - high).abs() < 1e-12));
        }
    }

    #[test]
    fn depolarize_rejects_out_of_range() {
        let rho = resource_state();
        assert!(matches!(
            depolarize(&rho, 1.5),
            Err(Error::Domain { name: "p", .. })
        ));
        assert!(depolarize(&rho, -0.1).is_err());
        assert!(depolarize(&rho, f64::NAN).is_err());
    }

    #[test]
    fn identity_key_leaves_state_unchanged() {
        let rho = random_state(7);
        let out = encode(&rho, EncodingKey::new(false, false));
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn encoded_resource_matches_closed_form() {
        // Entries (2-b1, 1+b1, (1-b1) r, b1 r) / 6 with r = (-1)^b2.
        for k in EncodingKey::ALL {
            let b1 = f64::from(u8::from(k.b1));
            let rr = if k.b2 { -1.0 } else { 1.0 };
            let d0 = (2.0 - b1) / 6.0;
            let d1 = (1.0 + b1) / 6.0;
            let inner = (1.0 - b1) * rr / 6.0;
            let corner = b1 * rr / 6.0;
            let expected = ComplexMatrix::from_real_rows(&[
                &[d0, 0.0, 0.0, corner],
                &[0.0, d1, inner, 0.0],
                &[0.0, inner, d1, 0.0],
                &[corner, 0.0, 0.0, d0],
            ])
            .unwrap();
            let got = encode(&resource_state(), k);
            assert!(got.matrix().max_abs_diff(&expected) < 1e-15, "k = {k}");
        }
        let k10 = encode(&resource_state(), EncodingKey::new(true, false));
        let m = k10.matrix();
        assert!((m[(0, 0)].re - 1.0 / 6.0).abs() < 1e-15);
        assert!((m[(1, 1)].re - 1.0 / 3.0).abs() < 1e-15);
        assert!((m[(0, 3)].re - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn each_key_omits_one_bell_state() {
        let expected = [
            (EncodingKey::new(false, false), BellState::PsiMinus),
            (EncodingKey::new(false, true), BellState::PsiPlus),
            (EncodingKey::new(true, false), BellState::PhiMinus),
            (EncodingKey::new(true, true), BellState::PhiPlus),
        ];
        for (k, omitted) in expected {
            assert_eq!(omitted_bell_state(k), omitted);
            let rho = encode(&resource_state(), k);
            for b in BellState::ALL {
                let overlap = rho.matrix().expectation(&bell_state(b)).re;
                let want = if b == omitted { 0.0 } else { 1.0 / 3.0 };
                assert!((overlap - want).abs() < 1e-15, "k={k} b={b}");
            }
        }
    }

    #[test]
    fn key_average_is_maximally_mixed_on_a() {
        let members: Vec<(f64, DensityMatrix)> = EncodingKey::ALL
            .iter()
            .map(|&k| (0.25, encode(&resource_state(), k)))
            .collect();
        let avg = DensityMatrix::mixture(&members).unwrap();
        let reduced = partial_trace(avg.matrix(), Subsystem::B).unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
        // Holds for an arbitrary single-qubit state too.
        let any = DensityMatrix::new(
            ComplexMatrix::from_vec(2, vec![r(0.8), c(0.1, 0.2), c(0.1, -0.2), r(0.2)]).unwrap(),
        )
        .unwrap();
        let mut acc = ComplexMatrix::zeros(2);
        for k in EncodingKey::ALL {
            acc = &acc
                + &any
                    .matrix()
                    .conjugate_by(&k.single_qubit_unitary())
                    .scale(0.25);
        }
        assert!(acc.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let not_unit = ComplexMatrix::identity(2);
        assert!(matches!(
            DensityMatrix::new(not_unit),
            Err(Error::InvalidTrace(_))
        ));
        let negative = ComplexMatrix::from_diagonal(&[1.5, -0.5]);
        assert!(matches!(
            DensityMatrix::new(negative),
            Err(Error::NotPositive(_))
        ));
        let skew = ComplexMatrix::from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]]).unwrap();
        assert!(matches!(
            DensityMatrix::new(skew),
            Err(Error::NotHermitian { .. })
        ));
        assert!(DensityMatrix::new(ComplexMatrix::identity(3).scale(1.0 / 3.0)).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let rho = depolarize(&resource_state(), 0.4).unwrap();
        let text = rho.to_json();
        let back = DensityMatrix::from_json(&text).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-15);

        let bad = r#"{"dim": 2, "re": [[1.0, 0.0], [0.0, 1.0]], "im": [[0,0],[0,0]]}"#;
        assert!(matches!(
            DensityMatrix::from_json(bad),
            Err(Error::InvalidTrace(_))
        ));
        let ragged = r#"{"dim": 2, "re": [[1.0], [0.0, 0.0]], "im": [[0,0],[0,0]]}"#;
        assert!(matches!(
            DensityMatrix::from_json(ragged),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(DensityMatrix::from_json("{"), Err(Error::Json(_))));
    }

    proptest! {
        #[test]
        fn encode_preserves_spectrum(seed in any::<u64>(), idx in 0usize..4) {
            let rho = random_state(seed);
            let k = EncodingKey::from_index(idx);
            let before = rho.eigenvalues();
            let after = encode(&rho, k).eigenvalues();
            for (a, b) in before.iter().zip(&after) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn depolarize_commutes_with_encode(seed in any::<u64>(), idx in 0usize..4, p in 0.0f64..=1.0) {
            let rho = random_state(seed);
            let k = EncodingKey::from_index(idx);
            let a = depolarize(&encode(&rho, k), p).unwrap();
            let b = encode(&depolarize(&rho, p).unwrap(), k);
            prop_assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-12);
        }
    }
}
