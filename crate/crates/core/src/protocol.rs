//! The certification protocol: Alice's sampler and encoder, Bob's two
//! strategies and their decoders, and closed-form information rates.
//!
//! Alice draws a uniform key `k`, prepares one of six polarization product
//! states (whose mixture is the resource state), applies `U_k` to qubit A and
//! sends both qubits. Bob reports an estimate `k_m`; the information rate is
//! `I(K; K_m)` under a uniform prior.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::correlations::{binary_entropy, entropy, BornRule, MeasurementModel, Outcome};
use crate::error::{check_range, Error, Result};
use crate::estimate::CountTable;
use crate::optics::{effective_bell_povm, MismatchModel};
use crate::qlin::r;
use crate::qstate::{
    depolarize, encode, encode_ket, omitted_bell_state, product_decomposition, resource_state,
    BellState, DensityMatrix, EncodingKey, Polarization,
};
use crate::rng::{CounterRng, Domain};

/// Tolerance on the total probability of a POVM and on channel row sums.
pub const PROBABILITY_TOL: f64 = 1e-8;

/// White noise `p` on the resource state and an optional imperfect gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelModel {
    noise_p: f64,
    mismatch: Option<MismatchModel>,
}

impl ChannelModel {
    pub fn new(noise_p: f64, mismatch: Option<MismatchModel>) -> Result<Self> {
        check_range("noise_p", noise_p, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { noise_p, mismatch })
    }

    pub fn ideal() -> Self {
        Self {
            noise_p: 1.0,
            mismatch: None,
        }
    }

    pub fn noise_p(&self) -> f64 {
        self.noise_p
    }

    pub fn mismatch(&self) -> Option<&MismatchModel> {
        self.mismatch.as_ref()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    QuantumBell,
    ClassicalZz,
}

#[derive(Clone, Debug)]
enum Decoder {
    /// Key reported for each POVM element.
    Bell(Vec<EncodingKey>),
    /// Parity of the two `Z` outcomes gives `b1`; `b2` is a fair coin.
    Parity,
}

/// Bob's measurement together with the map from its outcomes to `k_m`.
#[derive(Clone, Debug)]
pub struct Strategy {
    kind: StrategyKind,
    measurement: MeasurementModel,
    decoder: Decoder,
}

impl Strategy {
    pub fn quantum_bell() -> Self {
        Self::bell_from(MeasurementModel::bell())
    }

    /// Bell analyzer built from the photonic gate with temporal mismatch;
    /// non-coincidence events yield no estimate.
    pub fn quantum_with_mismatch(m: &MismatchModel) -> Self {
        Self::bell_from(effective_bell_povm(m))
    }

    pub fn classical_zz() -> Self {
        Self {
            kind: StrategyKind::ClassicalZz,
            measurement: MeasurementModel::computational(2),
            decoder: Decoder::Parity,
        }
    }

    /// The strategy Bob uses against `model`: the classical one never touches
    /// the gate, so mismatch only affects the quantum strategy.
    pub fn for_model(kind: StrategyKind, model: &ChannelModel) -> Self {
        match (kind, model.mismatch()) {
            (StrategyKind::QuantumBell, Some(m)) => Self::quantum_with_mismatch(m),
            (StrategyKind::QuantumBell, None) => Self::quantum_bell(),
            (StrategyKind::ClassicalZz, _) => Self::classical_zz(),
        }
    }

    fn bell_from(measurement: MeasurementModel) -> Self {
        let keys = measurement
            .elements()
            .iter()
            .map(|e| {
                let bell =
                    BellState::from_label(&e.label).expect("Bell POVM elements carry Bell labels");
                decode_quantum(bell)
            })
            .collect();
        Self {
            kind: StrategyKind::QuantumBell,
            measurement,
            decoder: Decoder::Bell(keys),
        }
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn measurement(&self) -> &MeasurementModel {
        &self.measurement
    }

    /// `None` for the failure outcome. The classical decoder draws its
    /// `b2` guess from the `(seed, Decoding, trial)` stream.
    pub fn decode(&self, outcome: Outcome, seed: u64, trial: u64) -> Option<EncodingKey> {
        let Outcome::Element(i) = outcome else {
            return None;
        };
        Some(match &self.decoder {
            Decoder::Bell(keys) => keys[i],
            Decoder::Parity => {
                let coin = CounterRng::new(seed, Domain::Decoding, trial).random::<bool>();
                EncodingKey::new(parity_guess(i), coin)
            }
        })
    }

    /// Exact `P(k_m | k)` for states `encode(ρ(p), k)`, conditioned on a
    /// coincidence.
    pub fn channel(&self, noise_p: f64) -> Result<[[f64; 4]; 4]> {
        let rho = depolarize(&resource_state(), noise_p)?;
        let mut rows = [[0.0; 4]; 4];
        for k in EncodingKey::ALL {
            let probs = self.measurement.probabilities(&encode(&rho, k));
            let success: f64 = probs[..self.measurement.elements().len()].iter().sum();
            if success <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "no coincidences for key {k}"
                )));
            }
            let row = &mut rows[k.index()];
            for (i, p) in probs[..self.measurement.elements().len()]
                .iter()
                .enumerate()
            {
                match &self.decoder {
                    Decoder::Bell(keys) => row[keys[i].index()] += p / success,
                    Decoder::Parity => {
                        for coin in [false, true] {
                            row[EncodingKey::new(parity_guess(i), coin).index()] +=
                                0.5 * p / success;
                        }
                    }
                }
            }
        }
        Ok(rows)
    }
}

/// Computational outcome `2x + y` → "results differ".
fn parity_guess(outcome: usize) -> bool {
    (outcome >> 1) != (outcome & 1)
}

/// The key whose encoded resource state omits `bell`.
pub fn decode_quantum(bell: BellState) -> EncodingKey {
    EncodingKey::ALL
        .into_iter()
        .find(|&k| omitted_bell_state(k) == bell)
        .expect("omitted-Bell map is a bijection")
}

/// Where Alice's pure state came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// A member of the six-state product decomposition of the resource state.
    Product(Polarization),
    /// A uniformly random computational basis state `|ij>` (index `2i + j`),
    /// drawn with probability `1 - p` to realize white noise.
    WhiteNoise(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preparation {
    pub key: EncodingKey,
    pub source: Source,
    /// `U_k ⊗ I` applied to the source state.
    pub state: Vec<Complex64>,
}

/// Alice's draw for one trial, a pure function of `(seed, trial)`.
/// Averaged over sources, the state at fixed key is `encode(ρ(p), k)`.
pub fn alice_sample(seed: u64, trial: u64, noise_p: f64) -> Preparation {
    let mut rng = CounterRng::new(seed, Domain::Preparation, trial);
    let key = EncodingKey::from_index(rng.random_range(0..4));
    let keep = rng.random::<f64>() < noise_p;
    let (source, ket) = if keep {
        let pol = Polarization::ALL[rng.random_range(0..6)];
        (Source::Product(pol), pol.product_ket())
    } else {
        let i = rng.random_range(0..4);
        let mut ket = vec![r(0.0); 4];
        ket[i] = r(1.0);
        (Source::WhiteNoise(i), ket)
    };
    Preparation {
        key,
        source,
        state: encode_ket(&ket, key),
    }
}

/// Born-rule draw from `m`, using the `(seed, Measurement, trial)` stream.
pub fn measure<S: BornRule + ?Sized>(
    state: &S,
    m: &MeasurementModel,
    seed: u64,
    trial: u64,
) -> Result<Outcome> {
    let probs = m.probabilities(state);
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::InvalidDistribution(format!(
            "outcome probabilities sum to {total}"
        )));
    }
    let u = CounterRng::new(seed, Domain::Measurement, trial).random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return Ok(m.outcome_at(i));
        }
    }
    Ok(m.outcome_at(last))
}

/// One `Z ⊗ Z` measurement and the parity decoder.
pub fn classical_strategy_run<S: BornRule + ?Sized>(
    state: &S,
    seed: u64,
    trial: u64,
) -> EncodingKey {
    let strategy = Strategy::classical_zz();
    let outcome = measure(state, strategy.measurement(), seed, trial)
        .expect("computational basis is complete");
    strategy
        .decode(outcome, seed, trial)
        .expect("no failure element")
}

/// Mutual information (bits) of a channel with the given conditional rows
/// and a uniform prior over rows.
pub fn channel_mi<R: AsRef<[f64]>>(rows: &[R]) -> Result<f64> {
    let Some(first) = rows.first() else {
        return Err(Error::InvalidDistribution("channel has no rows".into()));
    };
    let width = first.as_ref().len();
    let mut mixture = vec![0.0; width];
    let mut conditional = 0.0;
    for row in rows {
        let row = row.as_ref();
        if row.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: row.len(),
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOL || row.iter().any(|&p| p < -PROBABILITY_TOL) {
            return Err(Error::InvalidDistribution(format!(
                "channel row sums to {sum}"
            )));
        }
        conditional += shannon(row);
        for (m, p) in mixture.iter_mut().zip(row) {
            *m += p / rows.len() as f64;
        }
    }
    Ok((shannon(&mixture) - conditional / rows.len() as f64).max(0.0))
}

fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Holevo limit `2 - S(ρ(p))`, saturated by the Bell measurement.
pub fn i_q_noise(p: f64) -> f64 {
    let rho = depolarize(&resource_state(), p.clamp(0.0, 1.0)).expect("p clamped to [0, 1]");
    (2.0 - entropy(&rho)).max(0.0)
}

/// `1 - H2(1/2 - p/6)`: one bit guessed from the `Z ⊗ Z` parity.
pub fn i_c_noise(p: f64) -> f64 {
    1.0 - binary_entropy(0.5 - p / 6.0)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Rates {
    /// Quantum rate. Under mismatch this is the analytic substitution
    /// `i_q_noise(p (1 - ξ))`.
    pub i_q: f64,
    pub i_c: f64,
    /// `i_q - i_c`
    pub advantage: f64,
    /// Rate of the simulated photonic analyzer, present under mismatch.
    pub i_q_optics: Option<f64>,
}

pub fn rates(model: &ChannelModel) -> Result<Rates> {
    let p = model.noise_p();
    let i_c = i_c_noise(p);
    let (i_q, i_q_optics) = match model.mismatch() {
        None => (i_q_noise(p), None),
        Some(m) => {
            let optics = channel_mi(&Strategy::quantum_with_mismatch(m).channel(p)?)?;
            (i_q_noise(p * (1.0 - m.xi())), Some(optics))
        }
    };
    Ok(Rates {
        i_q,
        i_c,
        advantage: i_q - i_c,
        i_q_optics,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialRecord {
    pub key: EncodingKey,
    pub outcome: Outcome,
    /// `Some` exactly when the trial produced a coincidence.
    pub estimate: Option<EncodingKey>,
}

impl TrialRecord {
    pub fn coincidence(&self) -> bool {
        self.estimate.is_some()
    }
}

pub fn run_trial(
    strategy: &Strategy,
    model: &ChannelModel,
    seed: u64,
    trial: u64,
) -> Result<TrialRecord> {
    let prep = alice_sample(seed, trial, model.noise_p());
    let outcome = measure(&prep.state, strategy.measurement(), seed, trial)?;
    Ok(TrialRecord {
        key: prep.key,
        outcome,
        estimate: strategy.decode(outcome, seed, trial),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Simulation {
    /// Coincident trials only.
    pub counts: CountTable,
    pub trials: u64,
}

impl Simulation {
    pub fn coincidences(&self) -> u64 {
        self.counts.total()
    }
}

/// Runs trials `0..trials` in parallel; the table is independent of the
/// thread count because every trial owns its random streams.
pub fn simulate(
    strategy: &Strategy,
    model: &ChannelModel,
    seed: u64,
    trials: u64,
) -> Result<Simulation> {
    let counts = (0..trials)
        .into_par_iter()
        .try_fold(CountTable::new, |mut table, trial| {
            let record = run_trial(strategy, model, seed, trial)?;
            if let Some(k_m) = record.estimate {
                table.record(record.key, k_m);
            }
            Ok::<_, Error>(table)
        })
        .try_reduce(CountTable::new, |a, b| Ok(a.merge(&b)))?;
    Ok(Simulation { counts, trials })
}

/// Mixture of Alice's six product preparations at key `k`.
pub fn prepared_mixture(k: EncodingKey) -> DensityMatrix {
    let members: Vec<(f64, DensityMatrix)> = product_decomposition()
        .members
        .iter()
        .map(|(w, _, ket)| {
            (
                *w,
                DensityMatrix::from_pure(&encode_ket(ket, k)).expect("unit product ket"),
            )
        })
        .collect();
    DensityMatrix::mixture(&members).expect("weights sum to 1")
}
