//! Probability measures on partitions and their distribution formulas.
//!
//! Every mass is a [`MassValue`]: an exact rational times one of a few
//! infinite-product constants (or no constant at all). Comparisons between
//! formulas therefore happen on the rational parts and are exact; constants
//! are enclosed only when a number has to leave the library.
//!
//! The common building block is the Hall–Littlewood weight
//! `w(λ) = 1 / (p^{n(λ)+|λ|} d_λ(1/p))`. Writing `S_n = Σ_{|λ|=n} w(λ)`,
//! the size formula gives `S_n ≤ p^{−n} / C_p`, which yields all the tail
//! bounds below.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounded::BoundedReal;
use crate::error::{Error, Result};
use crate::partition::{self, Partition};
use crate::prime::Prime;
use crate::qseries::{self, d_lambda, finite_qpoch};
use crate::rational::{self, int, ExactRational};

/// Tolerance used whenever a constant is enclosed for output.
pub fn constant_tolerance() -> ExactRational {
    rational::inv_pow(2, 160)
}

/// Bits kept in midpoints written to tables.
pub const OUTPUT_BITS: u32 = 128;

/// Which infinite product multiplies a [`MassValue`]'s rational part.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstantTag {
    None,
    /// `C_p = ∏_{i odd} (1 − p^{−i})`
    OddProduct,
    /// `(1 − u/p) ∏_{i≥3 odd} (1 − u²/p^i)`
    Deformed(ExactRational),
}

impl ConstantTag {
    pub fn enclose(&self, p: Prime, tolerance: &ExactRational) -> Result<BoundedReal> {
        match self {
            ConstantTag::None => Ok(BoundedReal::exact(ExactRational::one())),
            ConstantTag::OddProduct => qseries::odd_constant(p, tolerance),
            ConstantTag::Deformed(u) => qseries::deformed_constant(p, u, tolerance),
        }
    }
}

impl fmt::Display for ConstantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstantTag::None => f.write_str("1"),
            ConstantTag::OddProduct => f.write_str("C_P"),
            ConstantTag::Deformed(u) => write!(f, "DEFORMED({})", rational::format_rational(u)),
        }
    }
}

/// `constant(tag) × rational`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MassValue {
    pub tag: ConstantTag,
    pub rational: ExactRational,
}

impl MassValue {
    pub fn new(tag: ConstantTag, rational: ExactRational) -> Self {
        MassValue { tag, rational }
    }

    pub fn exact(rational: ExactRational) -> Self {
        MassValue::new(ConstantTag::None, rational)
    }

    pub fn odd(rational: ExactRational) -> Self {
        MassValue::new(ConstantTag::OddProduct, rational)
    }

    pub fn enclose(&self, p: Prime, tolerance: &ExactRational) -> Result<BoundedReal> {
        Ok(self.tag.enclose(p, tolerance)?.scale(&self.rational))
    }
}

impl fmt::Display for MassValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            ConstantTag::None => write!(f, "{}", rational::format_rational(&self.rational)),
            _ => write!(f, "{} × {}", self.tag, rational::format_rational(&self.rational)),
        }
    }
}

/// `w(λ) = 1 / (p^{n(λ)+|λ|} d_λ)`.
pub fn hall_weight(lambda: &Partition, p: Prime) -> ExactRational {
    let e = lambda.n_stat() + lambda.size() as u64;
    rational::inv_pow(p.get(), e) / d_lambda(lambda, p)
}

/// The limiting sandpile measure written through the conjugate `μ`:
/// `C_p / (p^{Σ μ_i(μ_i+1)/2} ∏_{i=1}^{λ_1} ∏_{j=1}^{⌊(μ_i−μ_{i+1})/2⌋} (1 − p^{−2j}))`.
pub fn pmf_wood_form1(lambda: &Partition, p: Prime) -> MassValue {
    let mu = lambda.conjugate();
    let cols = mu.parts();
    let exponent: u64 = cols.iter().map(|&m| m as u64 * (m as u64 + 1) / 2).sum();
    let q2 = rational::inv_pow(p.get(), 2);
    let mut inner = ExactRational::one();
    for i in 0..cols.len() {
        let next = cols.get(i + 1).copied().unwrap_or(0);
        inner *= finite_qpoch(&q2, &q2, ((cols[i] - next) / 2) as u64);
    }
    MassValue::odd(rational::inv_pow(p.get(), exponent) / inner)
}

/// The same measure as `C_p · w(λ)`.
pub fn pmf_wood_form2(lambda: &Partition, p: Prime) -> MassValue {
    MassValue::odd(hall_weight(lambda, p))
}

/// Probability of exactly `a` parts: `C_p / (p^{a(a+1)/2} (1/p;1/p)_a)`.
pub fn pmf_parts(a: u32, p: Prime) -> MassValue {
    let a = a as u64;
    let inv = p.inv();
    MassValue::odd(
        rational::inv_pow(p.get(), a * (a + 1) / 2) / finite_qpoch(&inv, &inv, a),
    )
}

/// Probability that `|λ| = n`:
/// `C_p p^{−n} Σ_{j even ≤ n} p^{−j/2} / (1/p²;1/p²)_{j/2}`.
pub fn pmf_size(n: u32, p: Prime) -> MassValue {
    let q2 = rational::inv_pow(p.get(), 2);
    let table = qseries::finite_qpoch_table(&q2, &q2, n as u64 / 2);
    let mut sum = ExactRational::zero();
    for (k, poch) in table.iter().enumerate() {
        sum += rational::inv_pow(p.get(), k as u64) / poch;
    }
    MassValue::odd(sum * rational::inv_pow(p.get(), n as u64))
}

fn check_u(p: Prime, u: &ExactRational) -> Result<()> {
    if *u <= ExactRational::zero() || *u >= int(p.get() as i64) {
        return Err(Error::OutOfRange(format!(
            "u must satisfy 0 < u < p = {p}, got {}",
            rational::format_rational(u)
        )));
    }
    Ok(())
}

/// The u-deformed measure: `DEFORMED(u) × u^{|λ|} w(λ)`.
pub fn pmf_deformed(lambda: &Partition, p: Prime, u: &ExactRational) -> Result<MassValue> {
    check_u(p, u)?;
    Ok(MassValue::new(
        ConstantTag::Deformed(u.clone()),
        rational::pow(u, lambda.size() as u64) * hall_weight(lambda, p),
    ))
}

/// `(1 + 1/p)(1 + 1/p²)⋯(1 + 1/p^r)`.
pub fn plus_product(p: Prime, r: u32) -> ExactRational {
    let neg = -p.inv();
    finite_qpoch(&neg, &p.inv(), r as u64)
}

/// The measure on partitions with at most `r` parts:
/// `w(λ) (1/p;1/p)_r / ((1/p;1/p)_{r−ℓ} ∏_{i≤r}(1 + p^{−i}))`. Fully exact.
pub fn pmf_truncated(lambda: &Partition, p: Prime, r: u32) -> Result<ExactRational> {
    if r == 0 {
        return Err(Error::OutOfRange("r must be at least 1".into()));
    }
    let len = lambda.len();
    if len > r as usize {
        return Err(Error::TooManyParts { parts: len, r });
    }
    let inv = p.inv();
    let table = qseries::finite_qpoch_table(&inv, &inv, r as u64);
    let ratio = &table[r as usize] / &table[r as usize - len];
    Ok(hall_weight(lambda, p) * ratio / plus_product(p, r))
}

/// `P(0..=a_max)` as rational parts of `C_p`, solved two ways.
#[derive(Clone, Debug)]
pub struct PartsRecursion {
    pub p: Prime,
    /// From `Σ_{s≤r} P(s)/((1/p)_{r−s} C_p) = ∏_{i≤r}(1+p^{−i}) / (1/p)_r`.
    pub by_truncation: Vec<ExactRational>,
    /// From `Σ_{b≤a} P(b) / (p^{C(a+1,2)} P(a) (1/p²)_{⌊(a−b)/2⌋}) = 1`.
    pub by_columns: Vec<ExactRational>,
}

impl PartsRecursion {
    pub fn consistent(&self) -> bool {
        self.by_truncation == self.by_columns
    }

    pub fn matches_closed_form(&self) -> bool {
        self.by_truncation
            .iter()
            .enumerate()
            .all(|(a, v)| *v == pmf_parts(a as u32, self.p).rational)
    }

    pub fn masses(&self) -> Vec<MassValue> {
        self.by_truncation.iter().cloned().map(MassValue::odd).collect()
    }
}

/// Solves for `P(a)` from `P(0) = C_p` using both recursions. Neither uses
/// the closed form.
pub fn solve_parts_recursion(p: Prime, a_max: u32) -> PartsRecursion {
    let n = a_max as usize;
    let inv = p.inv();
    let q2 = rational::inv_pow(p.get(), 2);
    let poch = qseries::finite_qpoch_table(&inv, &inv, a_max as u64);
    let poch2 = qseries::finite_qpoch_table(&q2, &q2, a_max as u64 / 2);

    // Σ_{s=0}^{r} R(s) / (1/p)_{r−s} = ∏(1 + p^{−i}) / (1/p)_r, solved for R(r).
    let mut by_truncation = vec![ExactRational::one()];
    for r in 1..=n {
        let target = plus_product(p, r as u32) / &poch[r];
        let known: ExactRational = (0..r).map(|s| &by_truncation[s] / &poch[r - s]).sum();
        by_truncation.push(target - known);
    }

    // R(a) (p^{C(a+1,2)} − 1) = Σ_{b<a} R(b) / (1/p²)_{⌊(a−b)/2⌋}.
    let mut by_columns = vec![ExactRational::one()];
    for a in 1..=n {
        let known: ExactRational = (0..a)
            .map(|b| &by_columns[b] / &poch2[(a - b) / 2])
            .sum();
        let binom = (a * (a + 1) / 2) as u64;
        let scale = rational::inv_pow(p.get(), binom).recip() - int(1);
        by_columns.push(known / scale);
    }

    PartsRecursion {
        p,
        by_truncation,
        by_columns,
    }
}

/// Measure selector for [`tabulate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Measure {
    /// The limiting sandpile measure `C_p w(λ)`.
    Wood,
    Deformed { u: ExactRational },
    Truncated { r: u32 },
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::Wood => "wood",
            Measure::Deformed { .. } => "deformed",
            Measure::Truncated { .. } => "truncated",
        }
    }

    pub fn params(&self) -> BTreeMap<String, serde_json::Value> {
        let mut m = BTreeMap::new();
        match self {
            Measure::Wood => {}
            Measure::Deformed { u } => {
                m.insert("u".into(), rational::format_rational(u).into());
            }
            Measure::Truncated { r } => {
                m.insert("r".into(), (*r).into());
            }
        }
        m
    }

    /// Mass of a single partition under this measure.
    pub fn mass(&self, lambda: &Partition, p: Prime) -> Result<MassValue> {
        match self {
            Measure::Wood => Ok(pmf_wood_form2(lambda, p)),
            Measure::Deformed { u } => pmf_deformed(lambda, p, u),
            Measure::Truncated { r } => Ok(MassValue::exact(pmf_truncated(lambda, p, *r)?)),
        }
    }

    /// Enclosure of the mass carried by partitions of size `> max_size`.
    ///
    /// Uses `C_p S_n ≤ p^{−n}`:
    /// - wood: `Σ_{n>N} p^{−n} = p^{−N}/(p−1)`;
    /// - deformed: `D_u Σ_{n>N} (u/p)^n / C_p`;
    /// - truncated: the ratio factor is at most 1, so
    ///   `p^{−N} / ((p−1) C_p ∏(1+p^{−i}))`.
    pub fn tail_bound(&self, p: Prime, max_size: u32) -> Result<BoundedReal> {
        let tol = constant_tolerance();
        let pm1 = int(p.get() as i64 - 1);
        let geometric = rational::inv_pow(p.get(), max_size as u64) / &pm1;
        let upper = match self {
            Measure::Wood => geometric,
            Measure::Deformed { u } => {
                check_u(p, u)?;
                let ratio = u * p.inv();
                let c_lo = qseries::odd_constant(p, &tol)?.lo();
                let d_hi = qseries::deformed_constant(p, u, &tol)?.hi();
                d_hi * rational::pow(&ratio, max_size as u64 + 1)
                    / ((ExactRational::one() - ratio) * c_lo)
            }
            Measure::Truncated { r } => {
                let c_lo = qseries::odd_constant(p, &tol)?.lo();
                geometric / (c_lo * plus_product(p, *r))
            }
        };
        Ok(BoundedReal::from_bounds(ExactRational::zero(), upper))
    }

    fn max_parts(&self) -> u32 {
        match self {
            Measure::Truncated { r } => *r,
            _ => u32::MAX,
        }
    }
}

/// A table of masses over an explicit support plus an enclosure of the mass
/// outside it.
#[derive(Clone, Debug)]
pub struct PartitionDistribution {
    pub p: Prime,
    pub measure: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub entries: BTreeMap<Partition, MassValue>,
    pub tail_mass: BoundedReal,
    /// Set for empirical tables; entry counts are `rational × trials`.
    pub trials: Option<u64>,
    /// Additional top-level JSON fields.
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize)]
struct EntryJson {
    partition: String,
    mid: String,
    rad: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<u64>,
}

#[derive(Serialize)]
struct DistributionJson<'a> {
    p: u32,
    measure: &'a str,
    params: &'a BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    entries: Vec<EntryJson>,
    tail: BoundedReal,
    #[serde(flatten)]
    extra: &'a BTreeMap<String, serde_json::Value>,
}

impl PartitionDistribution {
    /// Empirical frequencies `count / trials`; `tail` is the mass known to
    /// lie outside the listed support (usually zero).
    pub fn from_counts(
        p: Prime,
        measure: &str,
        params: BTreeMap<String, serde_json::Value>,
        counts: &BTreeMap<Partition, u64>,
        trials: u64,
    ) -> Self {
        let total = int(trials as i64);
        let entries = counts
            .iter()
            .map(|(l, &c)| (l.clone(), MassValue::exact(int(c as i64) / &total)))
            .collect();
        PartitionDistribution {
            p,
            measure: measure.to_string(),
            params,
            entries,
            tail_mass: BoundedReal::zero(),
            trials: Some(trials),
            extra: BTreeMap::new(),
        }
    }

    pub fn count(&self, lambda: &Partition) -> Option<u64> {
        let t = self.trials?;
        let m = self.entries.get(lambda)?;
        (&m.rational * int(t as i64)).to_integer().try_into().ok()
    }

    /// Enclosures of every entry, sharing one constant enclosure per tag.
    pub fn enclosed_entries(&self, tolerance: &ExactRational) -> Result<Vec<(Partition, BoundedReal)>> {
        let mut cache: BTreeMap<ConstantTag, BoundedReal> = BTreeMap::new();
        let mut out = Vec::with_capacity(self.entries.len());
        for (l, m) in &self.entries {
            if !cache.contains_key(&m.tag) {
                cache.insert(m.tag.clone(), m.tag.enclose(self.p, tolerance)?);
            }
            out.push((l.clone(), cache[&m.tag].scale(&m.rational)));
        }
        Ok(out)
    }

    /// Enclosure of the total listed mass; rational parts are summed exactly
    /// per tag before the constant is applied.
    pub fn entries_total(&self, tolerance: &ExactRational) -> Result<BoundedReal> {
        let mut sums: BTreeMap<ConstantTag, ExactRational> = BTreeMap::new();
        for m in self.entries.values() {
            *sums.entry(m.tag.clone()).or_insert_with(ExactRational::zero) += &m.rational;
        }
        let mut total = BoundedReal::zero();
        for (tag, s) in sums {
            total = &total + &tag.enclose(self.p, tolerance)?.scale(&s);
        }
        Ok(total)
    }

    /// Listed mass plus the tail enclosure; contains 1 for a normalized measure.
    pub fn total_with_tail(&self, tolerance: &ExactRational) -> Result<BoundedReal> {
        Ok(&self.entries_total(tolerance)? + &self.tail_mass)
    }

    fn output_entries(&self) -> Result<Vec<(Partition, BoundedReal)>> {
        Ok(self
            .enclosed_entries(&constant_tolerance())?
            .into_iter()
            .map(|(l, b)| {
                let b = if b.is_exact() { b } else { b.rounded(OUTPUT_BITS) };
                (l, b)
            })
            .collect())
    }

    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        let entries = self
            .output_entries()?
            .into_iter()
            .map(|(l, b)| EntryJson {
                count: self.count(&l),
                partition: l.to_string(),
                mid: rational::format_rational(b.mid()),
                rad: rational::format_rational(b.rad()),
            })
            .collect();
        let tail = if self.tail_mass.is_exact() {
            self.tail_mass.clone()
        } else {
            self.tail_mass.rounded(OUTPUT_BITS)
        };
        let doc = DistributionJson {
            p: self.p.get(),
            measure: &self.measure,
            params: &self.params,
            trials: self.trials,
            entries,
            tail,
            extra: &self.extra,
        };
        serde_json::to_value(doc).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        let v = self.to_json_value()?;
        serde_json::to_string_pretty(&v).map_err(|e| Error::Parse(e.to_string()))
    }

    /// `partition,midpoint,radius` with decimal values.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("partition,midpoint,radius\n");
        for (l, b) in self.output_entries()? {
            out.push_str(&format!("\"{}\",{:e},{:e}\n", l, b.mid_f64(), b.rad_f64()));
        }
        Ok(out)
    }
}

/// Tabulates a measure over all partitions of size `≤ max_size` (and at most
/// `r` parts for the truncated measure), with a rigorous tail enclosure that
/// does not assume normalization.
pub fn tabulate(p: Prime, max_size: u32, measure: &Measure) -> Result<PartitionDistribution> {
    if max_size > partition::ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            requested: max_size,
            cap: partition::ENUMERATION_CAP,
        });
    }
    if let Measure::Truncated { r: 0 } = measure {
        return Err(Error::OutOfRange("r must be at least 1".into()));
    }
    let max_parts = measure.max_parts();
    let classes: Vec<Vec<(Partition, MassValue)>> = (0..=max_size)
        .into_par_iter()
        .map(|n| {
            partition::enumerate_bounded(n, max_parts)?
                .into_iter()
                .map(|l| {
                    let m = measure.mass(&l, p)?;
                    Ok((l, m))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let entries = classes.into_iter().flatten().collect();
    Ok(PartitionDistribution {
        p,
        measure: measure.name().to_string(),
        params: measure.params(),
        entries,
        tail_mass: measure.tail_bound(p, max_size)?,
        trials: None,
        extra: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn part(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn form1_examples() {
        assert_eq!(pmf_wood_form1(&Partition::empty(), p(2)), MassValue::odd(int(1)));
        assert_eq!(pmf_wood_form1(&part(&[1]), p(2)), MassValue::odd(rat(1, 2)));
        assert_eq!(pmf_wood_form1(&part(&[1, 1]), p(2)), MassValue::odd(rat(1, 6)));
    }

    #[test]
    fn form2_examples() {
        assert_eq!(pmf_wood_form2(&Partition::empty(), p(2)), MassValue::odd(int(1)));
        assert_eq!(pmf_wood_form2(&part(&[1, 1]), p(2)), MassValue::odd(rat(1, 6)));
        assert_eq!(pmf_wood_form2(&part(&[2]), p(3)), MassValue::odd(rat(1, 9)));
    }

    #[test]
    fn parts_examples() {
        assert_eq!(pmf_parts(0, p(2)).rational, int(1));
        assert_eq!(pmf_parts(1, p(2)).rational, int(1));
        assert_eq!(pmf_parts(2, p(2)).rational, rat(1, 3));
    }

    #[test]
    fn parts_one_matches_single_row_sum() {
        // Σ_k w([k]) = Σ 2^{-k} = 1
        let s: ExactRational = (1..=60).map(|k| hall_weight(&part(&[k]), p(2))).sum();
        assert_eq!(int(1) - s, rational::inv_pow(2, 60));
    }

    #[test]
    fn size_examples() {
        assert_eq!(pmf_size(0, p(2)).rational, int(1));
        assert_eq!(pmf_size(1, p(2)).rational, rat(1, 2));
        assert_eq!(pmf_size(2, p(2)).rational, rat(5, 12));
        assert_eq!(
            pmf_size(2, p(2)).rational,
            pmf_wood_form2(&part(&[2]), p(2)).rational + pmf_wood_form2(&part(&[1, 1]), p(2)).rational
        );
    }

    #[test]
    fn deformed_examples() {
        let u = rat(1, 2);
        let m = pmf_deformed(&Partition::empty(), p(2), &u).unwrap();
        assert_eq!(m.tag, ConstantTag::Deformed(u.clone()));
        assert_eq!(m.rational, int(1));
        assert_eq!(pmf_deformed(&part(&[1]), p(2), &u).unwrap().rational, rat(1, 4));
        for n in 0..=15 {
            for l in partition::enumerate_partitions(n).unwrap() {
                assert_eq!(
                    pmf_deformed(&l, p(2), &int(1)).unwrap().rational,
                    pmf_wood_form2(&l, p(2)).rational
                );
            }
        }
        assert!(pmf_deformed(&part(&[1]), p(2), &int(2)).is_err());
        assert!(pmf_deformed(&part(&[1]), p(2), &int(0)).is_err());
    }

    #[test]
    fn truncated_examples() {
        assert_eq!(pmf_truncated(&Partition::empty(), p(2), 1).unwrap(), rat(2, 3));
        assert_eq!(pmf_truncated(&part(&[1]), p(2), 1).unwrap(), rat(1, 6));
        for k in 1..=10u32 {
            assert_eq!(
                pmf_truncated(&part(&[k]), p(2), 1).unwrap(),
                rat(2, 3) * rational::inv_pow(2, k as u64 + 1)
            );
        }
        assert!(matches!(
            pmf_truncated(&part(&[1, 1]), p(2), 1),
            Err(Error::TooManyParts { parts: 2, r: 1 })
        ));
        assert!(pmf_truncated(&part(&[1, 1]), p(2), 2).unwrap() > int(0));
    }

    #[test]
    fn recursion_examples() {
        let r0 = solve_parts_recursion(p(2), 0);
        assert_eq!(r0.masses(), vec![MassValue::odd(int(1))]);
        let r1 = solve_parts_recursion(p(2), 1);
        assert_eq!(r1.by_columns[1], int(1));
        assert_eq!(r1.by_truncation[1], int(1));
        let r5 = solve_parts_recursion(p(3), 5);
        assert!(r5.consistent());
        assert!(r5.matches_closed_form());
    }

    #[test]
    fn form_equivalence_small() {
        for prime in [2, 3, 5] {
            for n in 0..=10 {
                for l in partition::enumerate_partitions(n).unwrap() {
                    assert_eq!(pmf_wood_form1(&l, p(prime)), pmf_wood_form2(&l, p(prime)), "{l}");
                }
            }
        }
    }

    #[test]
    fn tabulate_size_zero() {
        let t = tabulate(p(2), 0, &Measure::Wood).unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[&Partition::empty()], MassValue::odd(int(1)));
        let c = qseries::odd_constant(p(2), &constant_tolerance()).unwrap();
        let complement = BoundedReal::exact(int(1)) - c;
        assert!(t.tail_mass.contains_enclosure(&complement));
    }

    #[test]
    fn tabulate_truncated_is_geometric() {
        let t = tabulate(p(2), 20, &Measure::Truncated { r: 1 }).unwrap();
        assert_eq!(t.entries.len(), 21);
        for (l, m) in &t.entries {
            let expect = if l.is_empty() {
                rat(2, 3)
            } else {
                rat(2, 3) * rational::inv_pow(2, l.size() as u64 + 1)
            };
            assert_eq!(m.rational, expect);
        }
        let total = t.total_with_tail(&constant_tolerance()).unwrap();
        assert!(total.contains(&int(1)));
    }

    #[test]
    fn tabulate_rejects_cap() {
        assert!(matches!(
            tabulate(p(2), 61, &Measure::Wood),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn json_and_csv_shapes() {
        let t = tabulate(p(2), 2, &Measure::Truncated { r: 1 }).unwrap();
        let v = t.to_json_value().unwrap();
        assert_eq!(v["p"], 2);
        assert_eq!(v["measure"], "truncated");
        assert_eq!(v["params"]["r"], 1);
        assert_eq!(v["entries"][0]["partition"], "[]");
        assert_eq!(v["entries"][0]["mid"], "2/3");
        assert_eq!(v["entries"][0]["rad"], "0/1");
        assert!(v["tail"]["mid"].is_string());
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("partition,midpoint,radius\n\"[]\","));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn empirical_counts_round_trip() {
        let mut counts = BTreeMap::new();
        counts.insert(Partition::empty(), 3u64);
        counts.insert(part(&[1]), 1u64);
        let d = PartitionDistribution::from_counts(p(2), "empirical", BTreeMap::new(), &counts, 4);
        assert_eq!(d.count(&Partition::empty()), Some(3));
        let v = d.to_json_value().unwrap();
        assert_eq!(v["entries"][0]["count"], 3);
        assert_eq!(v["entries"][0]["mid"], "3/4");
        assert_eq!(v["trials"], 4);
    }
}
