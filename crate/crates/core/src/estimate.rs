//! Plug-in mutual information from `(k, k_m)` counts, multinomial bootstrap
//! errors and the certification verdict.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::EncodingKey;
use crate::rng::{CounterRng, Domain};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const MIN_BOOTSTRAP_TRIALS: u64 = 10;
pub const MIN_RESAMPLES: usize = 100;
pub const DEFAULT_Z_THRESHOLD: f64 = 5.0;
/// Slack on `z >= threshold` so that a value constructed as
/// `i_c + threshold * sigma` is not rejected by rounding.
pub const THRESHOLD_SLACK: f64 = 1e-9;

/// Joint counts of the true key (row) and Bob's estimate (column).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    counts: [[u64; 4]; 4],
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [[u64; 4]; 4]) -> Self {
        Self { counts }
    }

    pub fn record(&mut self, k: EncodingKey, k_m: EncodingKey) {
        self.counts[k.index()][k_m.index()] += 1;
    }

    pub fn counts(&self) -> &[[u64; 4]; 4] {
        &self.counts
    }

    pub fn get(&self, k: EncodingKey, k_m: EncodingKey) -> u64 {
        self.counts[k.index()][k_m.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn nonzero_cells(&self) -> usize {
        self.counts.iter().flatten().filter(|&&n| n > 0).count()
    }

    pub fn merge(mut self, other: &CountTable) -> Self {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (n, m) in row.iter_mut().zip(other_row) {
                *n += m;
            }
        }
        self
    }

    pub fn row_marginal(&self) -> [u64; 4] {
        self.counts.map(|row| row.iter().sum())
    }

    pub fn column_marginal(&self) -> [u64; 4] {
        let mut out = [0; 4];
        for row in &self.counts {
            for (o, n) in out.iter_mut().zip(row) {
                *o += n;
            }
        }
        out
    }
}

fn entropy_of_counts(counts: &[u64], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&n| n > 0)
        .map(|&n| {
            let p = n as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// `H(K) + H(K_m) - H(K, K_m)` of the empirical joint distribution, in bits.
pub fn plugin_mi(t: &CountTable) -> Result<f64> {
    let total = t.total();
    if total == 0 {
        return Err(Error::EmptyTable);
    }
    let n = total as f64;
    let joint: Vec<u64> = t.counts.iter().flatten().copied().collect();
    let mi = entropy_of_counts(&t.row_marginal(), n) + entropy_of_counts(&t.column_marginal(), n)
        - entropy_of_counts(&joint, n);
    Ok(mi.clamp(0.0, 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootstrapEstimate {
    pub sigma: f64,
    /// Only one cell is populated, so every resample is identical.
    pub degenerate: bool,
    pub resamples: usize,
}

fn resample(t: &CountTable, seed: u64, index: u64) -> CountTable {
    let mut rng = CounterRng::new(seed, Domain::Bootstrap, index);
    let total = t.total();
    let mut remaining = total;
    let mut mass_left = 1.0;
    let mut out = [[0u64; 4]; 4];
    for cell in 0..16 {
        let p = t.counts[cell / 4][cell % 4] as f64 / total as f64;
        if remaining == 0 || p == 0.0 {
            continue;
        }
        let x = if cell == 15 || p >= mass_left {
            remaining
        } else {
            Binomial::new(remaining, p / mass_left)
                .expect("probability in [0, 1]")
                .sample(&mut rng)
        };
        out[cell / 4][cell % 4] = x;
        remaining -= x;
        mass_left -= p;
    }
    if remaining > 0 {
        // Rounding left mass on the table: give it to the last populated cell.
        let last = (0..16).rev().find(|&c| t.counts[c / 4][c % 4] > 0).unwrap();
        out[last / 4][last % 4] += remaining;
    }
    CountTable::from_counts(out)
}

/// Standard deviation of [`plugin_mi`] over multinomial resamples of `t`
/// with the same total. Resample `i` uses the stream `(seed, Bootstrap, i)`,
/// so the result does not depend on thread count.
pub fn bootstrap_sigma(t: &CountTable, resamples: usize, seed: u64) -> Result<BootstrapEstimate> {
    let total = t.total();
    if total < MIN_BOOTSTRAP_TRIALS {
        return Err(Error::InsufficientData(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_TRIALS} counts, table has {total}"
        )));
    }
    if resamples < MIN_RESAMPLES {
        return Err(Error::InsufficientData(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if t.nonzero_cells() == 1 {
        return Ok(BootstrapEstimate {
            sigma: 0.0,
            degenerate: true,
            resamples,
        });
    }
    let values: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|i| plugin_mi(&resample(t, seed, i)).expect("resample keeps the total"))
        .collect();
    let mean = values.iter().sum::<f64>() / resamples as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(BootstrapEstimate {
        sigma: (ss / (resamples - 1) as f64).sqrt(),
        degenerate: false,
        resamples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub i_exp: f64,
    pub sigma: f64,
    pub i_c_ref: f64,
    pub z_score: f64,
    pub certified: bool,
    pub z_threshold: f64,
}

/// `z = (i_exp - i_c_ref) / sigma`, certified when `z >= z_threshold`.
pub fn certify(i_exp: f64, sigma: f64, i_c_ref: f64, z_threshold: f64) -> Result<Verdict> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let z_score = (i_exp - i_c_ref) / sigma;
    Ok(Verdict {
        i_exp,
        sigma,
        i_c_ref,
        z_score,
        certified: z_score >= z_threshold - THRESHOLD_SLACK,
        z_threshold,
    })
}

impl Verdict {
    pub fn record(&self, n_trials: u64, seed: u64) -> VerdictRecord {
        VerdictRecord {
            i_exp: self.i_exp,
            sigma: self.sigma,
            i_c_ref: self.i_c_ref,
            z_score: self.z_score,
            certified: self.certified,
            n_trials,
            seed,
        }
    }
}

/// Serialized form of a certification run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub i_exp: f64,
    pub sigma: f64,
    pub i_c_ref: f64,
    pub z_score: f64,
    pub certified: bool,
    pub n_trials: u64,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const I_Q: f64 = 0.415_037_499_278_843_8;
    const I_C: f64 = 0.081_704_165_945_510_5;

    /// Joint distribution of the ideal quantum channel scaled to `n` counts:
    /// zero on the relabeled diagonal, `n/12` elsewhere.
    fn ideal_table(n: u64) -> CountTable {
        let mut counts = [[n / 12; 4]; 4];
        for (i, row) in counts.iter_mut().enumerate() {
            row[i] = 0;
        }
        CountTable::from_counts(counts)
    }

    #[test]
    fn perfect_agreement_is_two_bits() {
        let t = CountTable::from_counts([[5, 0, 0, 0], [0, 5, 0, 0], [0, 0, 5, 0], [0, 0, 0, 5]]);
        assert!((plugin_mi(&t).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn factorized_table_is_zero() {
        let rows = [1u64, 2, 3, 4];
        let cols = [2u64, 1, 1, 4];
        let mut counts = [[0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                counts[i][j] = rows[i] * cols[j];
            }
        }
        assert!(plugin_mi(&CountTable::from_counts(counts)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn exact_quantum_proportions() {
        let t = ideal_table(4_000_008);
        assert!((plugin_mi(&t).unwrap() - I_Q).abs() < 1e-12);
        assert!((I_Q - (2.0 - 3f64.log2())).abs() < 1e-15);
    }

    #[test]
    fn empty_table_is_an_error() {
        assert!(matches!(
            plugin_mi(&CountTable::new()),
            Err(Error::EmptyTable)
        ));
    }

    #[test]
    fn bootstrap_guards() {
        let tiny = CountTable::from_counts([[3, 0, 0, 0], [0, 3, 0, 0], [0; 4], [0; 4]]);
        assert!(matches!(
            bootstrap_sigma(&tiny, 1000, 1),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            bootstrap_sigma(&ideal_table(1200), 99, 1),
            Err(Error::InsufficientData(_))
        ));
        let single = CountTable::from_counts([[0, 0, 0, 0], [0, 0, 50, 0], [0; 4], [0; 4]]);
        let est = bootstrap_sigma(&single, 1000, 1).unwrap();
        assert_eq!(est.sigma, 0.0);
        assert!(est.degenerate);
    }

    #[test]
    fn resample_keeps_total() {
        let t = CountTable::from_counts([[7, 1, 0, 3], [0, 9, 2, 0], [1, 1, 1, 1], [0, 0, 0, 40]]);
        for i in 0..200 {
            let r = resample(&t, 9, i);
            assert_eq!(r.total(), t.total());
            for c in 0..16 {
                if t.counts[c / 4][c % 4] == 0 {
                    assert_eq!(r.counts[c / 4][c % 4], 0);
                }
            }
        }
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let t = ideal_table(100_008);
        let a = bootstrap_sigma(&t, 1000, 77).unwrap();
        let b = bootstrap_sigma(&t, 1000, 77).unwrap();
        assert_eq!(a.sigma.to_bits(), b.sigma.to_bits());
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| bootstrap_sigma(&t, 1000, 77).unwrap());
        assert_eq!(a.sigma.to_bits(), c.sigma.to_bits());
    }

    /// Generic proportions. The ideal quantum table is a stationary point of
    /// the mutual information, where sigma falls off as 1/N instead.
    fn skewed_table(scale: u64) -> CountTable {
        let base = [
            [30, 10, 5, 5],
            [10, 25, 10, 5],
            [5, 5, 35, 5],
            [2, 8, 10, 30],
        ];
        CountTable::from_counts(base.map(|row| row.map(|n: u64| n * scale)))
    }

    #[test]
    fn bootstrap_sigma_scales_as_inverse_root_n() {
        let small = bootstrap_sigma(&skewed_table(50), 1000, 3).unwrap().sigma;
        let large = bootstrap_sigma(&skewed_table(5000), 1000, 3).unwrap().sigma;
        let ratio = small / large;
        assert!((8.0..=12.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn stationary_table_sigma_scales_as_inverse_n() {
        let small = bootstrap_sigma(&ideal_table(12_000), 1000, 3)
            .unwrap()
            .sigma;
        let large = bootstrap_sigma(&ideal_table(1_200_000), 1000, 3)
            .unwrap()
            .sigma;
        let ratio = small / large;
        assert!((70.0..=130.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn thirty_five_sigma_example() {
        let v = certify(0.363, 0.008, I_C, DEFAULT_Z_THRESHOLD).unwrap();
        assert!((v.z_score - 35.16198).abs() < 1e-4);
        assert!(v.certified);
    }

    #[test]
    fn certify_edges() {
        let v = certify(I_C, 0.01, I_C, DEFAULT_Z_THRESHOLD).unwrap();
        assert_eq!(v.z_score, 0.0);
        assert!(!v.certified);
        for sigma in [0.008, 0.01, 0.003, 1e-4] {
            let v = certify(I_C + 5.0 * sigma, sigma, I_C, 5.0).unwrap();
            assert!(v.certified, "sigma {sigma}: z = {}", v.z_score);
        }
        assert!(matches!(
            certify(0.3, 0.0, I_C, 5.0),
            Err(Error::NonPositiveSigma(_))
        ));
        assert!(certify(0.3, -1.0, I_C, 5.0).is_err());
    }

    #[test]
    fn verdict_record_fields() {
        let v = certify(0.363, 0.008, I_C, 5.0).unwrap();
        let json = serde_json::to_value(v.record(1000, 42)).unwrap();
        let mut keys: Vec<&str> = json
            .as_object()
            .unwrap()
            .keys()
            .map(String::as_str)
            .collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            [
                "certified",
                "i_c_ref",
                "i_exp",
                "n_trials",
                "seed",
                "sigma",
                "z_score"
            ]
        );
    }

    fn entropy_bits(counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        entropy_of_counts(counts, n as f64)
    }

    fn table_strategy() -> impl Strategy<Value = [[u64; 4]; 4]> {
        prop::array::uniform4(prop::array::uniform4(0u64..50))
            .prop_filter("non-empty", |c| c.iter().flatten().sum::<u64>() > 0)
    }

    proptest! {
        #[test]
        fn relabeling_invariance(counts in table_strategy(), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
            let t = CountTable::from_counts(counts);
            let mut permuted = [[0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    permuted[perm[i]][perm[j]] = counts[i][j];
                }
            }
            let a = plugin_mi(&t).unwrap();
            let b = plugin_mi(&CountTable::from_counts(permuted)).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn bounded_by_marginal_entropies(counts in table_strategy()) {
            let t = CountTable::from_counts(counts);
            let mi = plugin_mi(&t).unwrap();
            let bound = entropy_bits(&t.row_marginal()).min(entropy_bits(&t.column_marginal()));
            prop_assert!(mi >= 0.0);
            prop_assert!(mi <= bound + 1e-12);
        }
    }
}
