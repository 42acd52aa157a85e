//! Verification suites for the identities behind the measures.
//!
//! Each check returns a [`CheckOutcome`] line. Infinite sums are compared
//! through rigorous enclosures: a partial sum over enumerated partitions plus
//! a tail bound derived from `C_p S_n ≤ p^{−n}`, where
//! `S_n = Σ_{|λ|=n} w(λ)` and `w(λ) = 1/(p^{n(λ)+|λ|} d_λ)`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::bounded::BoundedReal;
use crate::error::{Error, Result};
use crate::measures::{self, Measure};
use crate::partition;
use crate::prime::Prime;
use crate::qseries;
use crate::rational::{self, int, rat, ExactRational};
use crate::sampler;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Recursions,
    Chain,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "recursions" => Ok(Suite::Recursions),
            "chain" => Ok(Suite::Chain),
            _ => Err(Error::Parse(format!(
                "unknown suite {s:?} (expected identities, recursions or chain)"
            ))),
        }
    }
}

/// Exact sums of `w(λ)` over enumerated partitions of size `≤ depth`.
#[derive(Clone, Debug)]
pub struct EnumeratedSums {
    pub p: Prime,
    pub depth: u32,
    /// `[n][ℓ]` = Σ over `|λ| = n`, `ℓ(λ) = ℓ`.
    pub by_size_and_length: Vec<Vec<ExactRational>>,
    /// `(λ'_1, λ'_2)` → Σ, for `λ'_1 ≤ 4`.
    pub by_leading_columns: BTreeMap<(u32, u32), ExactRational>,
}

/// Per-size sums by length, and by leading column pair.
type SizeClass = (Vec<ExactRational>, BTreeMap<(u32, u32), ExactRational>);

impl EnumeratedSums {
    pub fn compute(p: Prime, depth: u32) -> Result<Self> {
        if depth > partition::ENUMERATION_CAP {
            return Err(Error::EnumerationCap {
                requested: depth,
                cap: partition::ENUMERATION_CAP,
            });
        }
        let q2 = rational::inv_pow(p.get(), 2);
        let half = qseries::finite_qpoch_table(&q2, &q2, depth as u64 / 2 + 1);
        let per_size: Vec<SizeClass> = (0..=depth)
            .into_par_iter()
            .map(|n| {
                let mut lens = vec![ExactRational::zero(); n as usize + 1];
                let mut cols = BTreeMap::new();
                for l in partition::enumerate_partitions(n)? {
                    let d: ExactRational = l
                        .multiplicities()
                        .iter()
                        .map(|&(_, m)| half[(m / 2) as usize].clone())
                        .product();
                    let w = rational::inv_pow(p.get(), l.n_stat() + n as u64) / d;
                    let (c1, c2) = (l.column(1), l.column(2));
                    if c1 <= 4 {
                        *cols.entry((c1, c2)).or_insert_with(ExactRational::zero) += &w;
                    }
                    lens[l.len()] += w;
                }
                Ok((lens, cols))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut by_size_and_length = Vec::with_capacity(per_size.len());
        let mut by_leading_columns: BTreeMap<(u32, u32), ExactRational> = BTreeMap::new();
        for (lens, cols) in per_size {
            by_size_and_length.push(lens);
            for (k, v) in cols {
                *by_leading_columns.entry(k).or_insert_with(ExactRational::zero) += v;
            }
        }
        Ok(EnumeratedSums {
            p,
            depth,
            by_size_and_length,
            by_leading_columns,
        })
    }

    /// `S_n`
    pub fn size_sum(&self, n: u32) -> ExactRational {
        self.by_size_and_length[n as usize].iter().sum()
    }

    /// Upper bound on `Σ_{n > depth} S_n`, namely `p^{−N} / ((p−1) C_p)`.
    pub fn rational_tail_bound(&self) -> Result<ExactRational> {
        let c_lo = qseries::odd_constant(self.p, &measures::constant_tolerance())?.lo();
        Ok(rational::inv_pow(self.p.get(), self.depth as u64) / (int(self.p.get() as i64 - 1) * c_lo))
    }
}

fn primes_label(p: Prime) -> String {
    format!("p={p}")
}

/// Form (1) vs form (2) of the limiting measure, exact, all `|λ| ≤ max_size`.
pub fn check_form_equivalence(p: Prime, max_size: u32) -> Result<CheckOutcome> {
    let all = partition::enumerate_up_to(max_size, u32::MAX)?;
    let bad = all
        .iter()
        .find(|l| measures::pmf_wood_form1(l, p) != measures::pmf_wood_form2(l, p));
    Ok(CheckOutcome::new(
        format!("form equivalence {} |λ|<={max_size}", primes_label(p)),
        bad.is_none(),
        match bad {
            None => format!("{} partitions agree exactly", all.len()),
            Some(l) => format!("mismatch at {l}"),
        },
    ))
}

/// Size formula: `pmf_size(n)` equals the enumerated size class, exactly.
pub fn check_size_formula(sums: &EnumeratedSums, max_n: u32) -> CheckOutcome {
    let max_n = max_n.min(sums.depth);
    let bad = (0..=max_n).find(|&n| sums.size_sum(n) != measures::pmf_size(n, sums.p).rational);
    CheckOutcome::new(
        format!("size formula {} n<={max_n}", primes_label(sums.p)),
        bad.is_none(),
        match bad {
            None => "exact agreement".to_string(),
            Some(n) => format!("mismatch at n={n}"),
        },
    )
}

/// Normalization: `tabulate(p, N)` total plus tail encloses 1.
pub fn check_normalization(p: Prime, max_size: u32, measure: &Measure) -> Result<CheckOutcome> {
    let t = measures::tabulate(p, max_size, measure)?;
    let total = t.total_with_tail(&measures::constant_tolerance())?;
    let ok = total.contains(&int(1));
    Ok(CheckOutcome::new(
        format!("normalization {} {} |λ|<={max_size}", measure.name(), primes_label(p)),
        ok,
        format!("total+tail = {total}, tail radius {:.3e}", t.tail_mass.rad_f64()),
    ))
}

/// `Σ_λ u^{|λ|} w(λ) = (1 − u/p)^{−1} ∏_{i≥3 odd} (1 − u²/p^i)^{−1}`.
pub fn check_size_generating_function(sums: &EnumeratedSums, u: &ExactRational) -> Result<CheckOutcome> {
    let p = sums.p;
    let tol = measures::constant_tolerance();
    let lhs: ExactRational = (0..=sums.depth)
        .map(|n| rational::pow(u, n as u64) * sums.size_sum(n))
        .sum();
    let ratio = u * p.inv();
    let c_lo = qseries::odd_constant(p, &tol)?.lo();
    let tail = rational::pow(&ratio, sums.depth as u64 + 1) / ((int(1) - &ratio) * c_lo);
    let rhs = qseries::deformed_constant(p, u, &tol)?.recip()?;
    let range = BoundedReal::from_bounds(lhs.clone(), &lhs + &tail);
    Ok(CheckOutcome::new(
        format!(
            "u-size identity {} u={} N={}",
            primes_label(p),
            rational::format_rational(u),
            sums.depth
        ),
        range.intersects(&rhs),
        format!(
            "partial sum {:.15e}, truncation <= {:.3e}, product {rhs}",
            rational::to_f64(&lhs),
            rational::to_f64(&tail)
        ),
    ))
}

/// `Σ_{ℓ(λ)≤r} w(λ) (1/p)_r / (1/p)_{r−ℓ} = ∏_{i=1}^{r} (1 + p^{−i})`.
pub fn check_plus_product(sums: &EnumeratedSums, r: u32) -> Result<CheckOutcome> {
    let p = sums.p;
    let inv = p.inv();
    let poch = qseries::finite_qpoch_table(&inv, &inv, r as u64);
    let mut lhs = ExactRational::zero();
    for lens in &sums.by_size_and_length {
        for (len, s) in lens.iter().enumerate().take(r as usize + 1) {
            lhs += s * &poch[r as usize] / &poch[r as usize - len];
        }
    }
    let tail = sums.rational_tail_bound()?;
    let rhs = measures::plus_product(p, r);
    let ok = lhs <= rhs && rhs <= &lhs + &tail;
    Ok(CheckOutcome::new(
        format!("at-most-r-parts product {} r={r} N={}", primes_label(p), sums.depth),
        ok,
        format!(
            "partial {:.15e} + tail <= {:.3e} vs exact {}",
            rational::to_f64(&lhs),
            rational::to_f64(&tail),
            rational::format_rational(&rhs)
        ),
    ))
}

/// Euler's `Σ s^m/(q;q)_m = 1/(s;q)_∞` at one parameter pair.
pub fn check_euler(s: &ExactRational, q: &ExactRational, n: u64) -> Result<CheckOutcome> {
    let c = qseries::verify_euler_identity(s, q, n)?;
    Ok(CheckOutcome::new(
        format!(
            "euler identity s={} q={} N={n}",
            rational::format_rational(s),
            rational::format_rational(q)
        ),
        c.agree,
        format!(
            "sum {:.15e} (+<= {:.3e}), product {}",
            rational::to_f64(&c.lhs),
            rational::to_f64(&c.truncation_bound),
            c.rhs
        ),
    ))
}

/// q-binomial theorem for `r ≤ max_r` and a small grid of `(q, x)`.
pub fn check_qbinomial_grid(p: Prime, max_r: u64) -> CheckOutcome {
    let qs = [p.inv(), rat(1, 3), rat(2, 5)];
    let xs = [int(1), int(2), rat(-1, 2)];
    let mut failures = Vec::new();
    let mut count = 0;
    for r in 1..=max_r {
        for q in &qs {
            for x in &xs {
                count += 1;
                if !qseries::verify_qbinomial(r, q, x).agree {
                    failures.push(format!("r={r} q={q} x={x}"));
                }
            }
        }
    }
    CheckOutcome::new(
        format!("q-binomial {} r<={max_r}", primes_label(p)),
        failures.is_empty(),
        if failures.is_empty() {
            format!("{count} exact equalities")
        } else {
            failures.join("; ")
        },
    )
}

/// Closed form for `P(a)` vs the two recursions.
pub fn check_parts_recursions(p: Prime, a_max: u32) -> CheckOutcome {
    let rec = measures::solve_parts_recursion(p, a_max);
    let consistent = rec.consistent();
    let closed = rec.matches_closed_form();
    CheckOutcome::new(
        format!("parts recursions {} a<={a_max}", primes_label(p)),
        consistent && closed,
        format!("recursions agree: {consistent}, closed form agrees: {closed}"),
    )
}

/// `Σ_{ℓ(λ)=a} w(λ) = P(a)/C_p`, enumerated sum plus tail.
pub fn check_parts_marginal(sums: &EnumeratedSums, a_max: u32) -> Result<CheckOutcome> {
    let tail = sums.rational_tail_bound()?;
    let mut bad = Vec::new();
    for a in 0..=a_max {
        let partial: ExactRational = sums
            .by_size_and_length
            .iter()
            .filter_map(|lens| lens.get(a as usize))
            .sum();
        let exact = measures::pmf_parts(a, sums.p).rational;
        if !(partial <= exact && exact <= &partial + &tail) {
            bad.push(a);
        }
    }
    Ok(CheckOutcome::new(
        format!("parts marginal {} a<={a_max} N={}", primes_label(sums.p), sums.depth),
        bad.is_empty(),
        if bad.is_empty() {
            format!("all enclosed, tail <= {:.3e}", rational::to_f64(&tail))
        } else {
            format!("outside enclosure at a in {bad:?}")
        },
    ))
}

pub fn check_kernel_rows(p: Prime, a_max: u32) -> Result<CheckOutcome> {
    let mut bad = Vec::new();
    for a in 0..=a_max {
        let row: ExactRational = (0..=a)
            .map(|b| sampler::kernel(a, b, p))
            .sum::<Result<ExactRational>>()?;
        if !row.is_one() {
            bad.push(a);
        }
    }
    Ok(CheckOutcome::new(
        format!("kernel row sums {} a<={a_max}", primes_label(p)),
        bad.is_empty(),
        if bad.is_empty() {
            "every row sums to exactly 1".to_string()
        } else {
            format!("rows {bad:?} do not sum to 1")
        },
    ))
}

pub fn check_kernel_ratio(p: Prime, a_max: u32) -> Result<CheckOutcome> {
    let mut bad = Vec::new();
    let mut count = 0;
    for a in 0..=a_max {
        for b in 0..=a {
            count += 1;
            if !sampler::ratio_identity_holds(a, b, p)? {
                bad.push((a, b));
            }
        }
    }
    Ok(CheckOutcome::new(
        format!("kernel ratio identity {} a<={a_max}", primes_label(p)),
        bad.is_empty(),
        if bad.is_empty() {
            format!("{count} exact equalities")
        } else {
            format!("fails at {bad:?}")
        },
    ))
}

/// `P(λ'_1=a, λ'_2=b)` from the chain vs enumeration, `a ≤ 4`.
pub fn check_two_column_marginal(sums: &EnumeratedSums) -> Result<CheckOutcome> {
    let tail = sums.rational_tail_bound()?;
    let mut bad = Vec::new();
    for a in 0..=4u32 {
        for b in 0..=a {
            let chain = sampler::two_column_mass(a, b, sums.p)?;
            let zero = ExactRational::zero();
            let partial = sums.by_leading_columns.get(&(a, b)).unwrap_or(&zero);
            if !(*partial <= chain && chain <= partial + &tail) {
                bad.push((a, b));
            }
        }
    }
    Ok(CheckOutcome::new(
        format!("two-column marginal {} N={}", primes_label(sums.p), sums.depth),
        bad.is_empty(),
        if bad.is_empty() {
            format!("all 15 cells enclosed, tail <= {:.3e}", rational::to_f64(&tail))
        } else {
            format!("outside enclosure at {bad:?}")
        },
    ))
}

/// Parameters for [`run_suite`].
#[derive(Clone, Debug)]
pub struct SuiteParams {
    pub primes: Vec<Prime>,
    /// Enumeration depth `N` for partial sums.
    pub depth: u32,
    pub a_max: u32,
}

pub fn run_suite(suite: Suite, params: &SuiteParams) -> Result<Vec<CheckOutcome>> {
    if params.depth == 0 {
        return Err(Error::OutOfRange("depth must be at least 1".into()));
    }
    if params.primes.is_empty() {
        return Err(Error::OutOfRange("at least one prime is required".into()));
    }
    let mut out = Vec::new();
    match suite {
        Suite::Identities => {
            out.push(check_euler(&rat(1, 8), &rat(1, 4), params.depth as u64)?);
            out.push(check_euler(&rat(1, 2), &rat(1, 2), params.depth as u64)?);
            for &p in &params.primes {
                let pp = p.get() as i64;
                out.push(check_euler(&rat(1, pp * pp * pp), &rat(1, pp * pp), params.depth as u64)?);
                out.push(check_qbinomial_grid(p, 12));
                let sums = EnumeratedSums::compute(p, params.depth)?;
                out.push(check_form_equivalence(p, params.depth.min(15))?);
                out.push(check_size_formula(&sums, 15));
                let mut us = vec![rat(1, 2), int(pp - 1)];
                us.dedup();
                for u in &us {
                    out.push(check_size_generating_function(&sums, u)?);
                }
                for r in 1..=5 {
                    out.push(check_plus_product(&sums, r)?);
                }
                out.push(check_normalization(p, params.depth.min(30), &Measure::Wood)?);
            }
        }
        Suite::Recursions => {
            for &p in &params.primes {
                out.push(check_parts_recursions(p, params.a_max));
                let sums = EnumeratedSums::compute(p, params.depth)?;
                out.push(check_parts_marginal(&sums, params.a_max.min(params.depth))?);
            }
        }
        Suite::Chain => {
            for &p in &params.primes {
                out.push(check_kernel_rows(p, params.a_max)?);
                out.push(check_kernel_ratio(p, params.a_max)?);
                let sums = EnumeratedSums::compute(p, params.depth)?;
                out.push(check_two_column_marginal(&sums)?);
            }
        }
    }
    Ok(out)
}
