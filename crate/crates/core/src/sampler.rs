//! Column-by-column Markov chain for the limiting sandpile measure.
//!
//! The first column height λ'_1 is drawn from the parts-count distribution
//! `P(a)`; each following height is drawn from the kernel row `K(a, ·)` of the
//! previous one, until a height of zero is reached. Draws use inverse-CDF
//! sampling: a uniform `u64` `k` is read as the rational `k / 2^64` and
//! compared against exact cumulative masses through precomputed integer
//! thresholds `ceil(F · 2^64)`.
//!
//! Randomness: each trial gets its own ChaCha8 stream, keyed by
//! `(seed, trial index)` with the trial index as the ChaCha stream id.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{self, MassValue, PartitionDistribution};
use crate::partition::Partition;
use crate::prime::Prime;
use crate::qseries::{self, finite_qpoch_table};
use crate::rational::{self, int, rat, ExactRational};

/// Columns allowed before a sample is abandoned with [`Error::ColumnCap`].
pub const MAX_COLUMNS: usize = 10_000;

/// `K(a,b) = (1/p)_a / (p^{C(b+1,2)} (1/p)_b (1/p²)_{⌊(a−b)/2⌋})`.
pub fn kernel(a: u32, b: u32, p: Prime) -> Result<ExactRational> {
    if b > a {
        return Err(Error::KernelSupport { a, b });
    }
    let inv = p.inv();
    let q2 = rational::inv_pow(p.get(), 2);
    let poch = finite_qpoch_table(&inv, &inv, a as u64);
    let half = qseries::finite_qpoch(&q2, &q2, ((a - b) / 2) as u64);
    let b64 = b as u64;
    Ok(&poch[a as usize] * rational::inv_pow(p.get(), b64 * (b64 + 1) / 2)
        / (&poch[b as usize] * half))
}

/// One row `K(a, 0..=a)` with exact masses.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelRow {
    pub a: u32,
    pub masses: Vec<ExactRational>,
}

impl KernelRow {
    pub fn sum(&self) -> ExactRational {
        self.masses.iter().sum()
    }
}

/// Builds `K(a, ·)`; asserts the exact row sum is 1.
pub fn kernel_row(a: u32, p: Prime) -> Result<KernelRow> {
    let masses = (0..=a).map(|b| kernel(a, b, p)).collect::<Result<Vec<_>>>()?;
    let row = KernelRow { a, masses };
    assert!(row.sum().is_one(), "kernel row {a} does not sum to 1");
    Ok(row)
}

/// First-column distribution `P(0..=B)`, truncated where the remaining mass
/// drops below the cutoff.
#[derive(Clone, Debug)]
pub struct InitialColumn {
    pub entries: Vec<(u32, MassValue)>,
    /// Upper bound on `Σ_{a>B} P(a)`.
    pub tail_bound: ExactRational,
}

/// Tail bound: `P(a+1)/P(a) = 1/(p^{a+1} − 1)`, so for `a > B` the masses are
/// dominated by a geometric series with ratio `1/(p^{B+2} − 1)` starting at
/// `P(B+1)`, and `C_p ≤ 1`.
pub fn initial_column_distribution(p: Prime, cutoff: &ExactRational) -> Result<InitialColumn> {
    if *cutoff <= ExactRational::zero() || *cutoff >= ExactRational::one() {
        return Err(Error::OutOfRange("cutoff must lie in (0,1)".into()));
    }
    let mut entries = vec![(0, measures::pmf_parts(0, p))];
    loop {
        let b = entries.len() as u32 - 1;
        let next = measures::pmf_parts(b + 1, p).rational;
        let pow = rational::inv_pow(p.get(), b as u64 + 2).recip();
        let ratio = (pow - int(1)).recip();
        let tail = next / (int(1) - ratio);
        if tail < *cutoff {
            return Ok(InitialColumn {
                entries,
                tail_bound: tail,
            });
        }
        entries.push((b + 1, measures::pmf_parts(b + 1, p)));
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub p: Prime,
    pub seed: u64,
    pub initial_tail_cutoff: ExactRational,
}

impl SamplerConfig {
    pub fn new(p: Prime, seed: u64) -> Self {
        SamplerConfig {
            p,
            seed,
            initial_tail_cutoff: rat(1, 1_000_000_000_000),
        }
    }
}

/// Inverse-CDF table over `0..thresholds.len()`.
#[derive(Clone, Debug)]
struct Thresholds(Vec<u128>);

impl Thresholds {
    /// `cumulative` must be nondecreasing; the last entry is forced to 2^64.
    fn from_cumulative(cumulative: &[ExactRational]) -> Self {
        let full = 1u128 << 64;
        let mut t: Vec<u128> = cumulative
            .iter()
            .map(|c| {
                rational::ceil_scaled(c, 64)
                    .to_u128()
                    .unwrap_or(full)
                    .min(full)
            })
            .collect();
        if let Some(last) = t.last_mut() {
            *last = full;
        }
        Thresholds(t)
    }

    fn draw(&self, k: u64) -> usize {
        self.0.partition_point(|&t| t <= k as u128)
    }
}

/// Precomputed first-column and kernel thresholds for one prime. Immutable
/// after construction, so one sampler can serve many threads.
#[derive(Clone, Debug)]
pub struct ColumnSampler {
    p: Prime,
    initial: InitialColumn,
    first: Thresholds,
    rows: Vec<Thresholds>,
}

impl ColumnSampler {
    pub fn new(p: Prime, cutoff: &ExactRational) -> Result<Self> {
        let initial = initial_column_distribution(p, cutoff)?;
        // C_p enclosed far below 2^-64 so the thresholds are determined by it
        // except on a set of measure zero; the midpoint is used there.
        let c = qseries::odd_constant(p, &rational::inv_pow(2, 100))?;
        let mut acc = ExactRational::zero();
        let cumulative: Vec<ExactRational> = initial
            .entries
            .iter()
            .map(|(_, m)| {
                acc += &m.rational;
                c.mid() * &acc
            })
            .collect();
        let first = Thresholds::from_cumulative(&cumulative);
        let max_a = initial.entries.len() as u32 - 1;
        let rows = (0..=max_a)
            .map(|a| {
                let row = kernel_row(a, p)?;
                let mut acc = ExactRational::zero();
                let cumulative: Vec<_> = row
                    .masses
                    .iter()
                    .map(|m| {
                        acc += m;
                        acc.clone()
                    })
                    .collect();
                Ok(Thresholds::from_cumulative(&cumulative))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ColumnSampler {
            p,
            initial,
            first,
            rows,
        })
    }

    pub fn from_config(config: &SamplerConfig) -> Result<Self> {
        Self::new(config.p, &config.initial_tail_cutoff)
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn initial(&self) -> &InitialColumn {
        &self.initial
    }

    /// Largest first column the sampler can produce.
    pub fn max_height(&self) -> u32 {
        self.rows.len() as u32 - 1
    }

    /// Column heights λ'_1 ≥ λ'_2 ≥ … > 0 of one sample.
    pub fn sample_columns<R: RngCore>(&self, rng: &mut R) -> Result<Vec<u32>> {
        let mut columns = Vec::new();
        let mut height = self.first.draw(rng.next_u64());
        while height > 0 {
            if columns.len() == MAX_COLUMNS {
                return Err(Error::ColumnCap(MAX_COLUMNS));
            }
            columns.push(height as u32);
            height = self.rows[height].draw(rng.next_u64());
        }
        Ok(columns)
    }

    pub fn sample<R: RngCore>(&self, rng: &mut R) -> Result<Partition> {
        Partition::from_columns(&self.sample_columns(rng)?)
    }
}

/// Independent stream for trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One draw from the limiting measure.
pub fn sample_partition<R: RngCore>(config: &SamplerConfig, rng: &mut R) -> Result<Partition> {
    ColumnSampler::from_config(config)?.sample(rng)
}

/// Counts over `trials` independent samples. Deterministic in
/// `(seed, trials)`, independent of thread count.
pub fn sample_counts(config: &SamplerConfig, trials: u64) -> Result<BTreeMap<Partition, u64>> {
    let sampler = ColumnSampler::from_config(config)?;
    const CHUNK: u64 = 4096;
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = BTreeMap::new();
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let l = sampler.sample(&mut trial_rng(config.seed, t))?;
                *local.entry(l).or_insert(0u64) += 1;
            }
            Ok(local)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (l, c) in b {
                *a.entry(l).or_insert(0) += c;
            }
            Ok(a)
        })
}

/// Frequency table of `trials` samples.
pub fn empirical_distribution(config: &SamplerConfig, trials: u64) -> Result<PartitionDistribution> {
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be at least 1".into()));
    }
    let counts = sample_counts(config, trials)?;
    let mut params = BTreeMap::new();
    params.insert("seed".to_string(), config.seed.into());
    params.insert(
        "cutoff".to_string(),
        rational::format_rational(&config.initial_tail_cutoff).into(),
    );
    Ok(PartitionDistribution::from_counts(
        config.p,
        "sampled",
        params,
        &counts,
        trials,
    ))
}

/// `P(λ'_1 = a, λ'_2 = b)` under the chain, as a rational part of `C_p`.
pub fn two_column_mass(a: u32, b: u32, p: Prime) -> Result<ExactRational> {
    Ok(measures::pmf_parts(a, p).rational * kernel(a, b, p)?)
}

/// Checks `P(b) / (p^{C(a+1,2)} P(a) (1/p²)_{⌊(a−b)/2⌋}) = K(a,b)` exactly.
pub fn ratio_identity_holds(a: u32, b: u32, p: Prime) -> Result<bool> {
    let q2 = rational::inv_pow(p.get(), 2);
    let pa = measures::pmf_parts(a, p).rational;
    let pb = measures::pmf_parts(b, p).rational;
    let a64 = a as u64;
    let scale = ExactRational::from_integer(num_traits::pow(BigInt::from(p.get()), (a64 * (a64 + 1) / 2) as usize));
    let lhs = pb / (scale * pa * qseries::finite_qpoch(&q2, &q2, ((a - b) / 2) as u64));
    Ok(lhs == kernel(a, b, p)?)
}
