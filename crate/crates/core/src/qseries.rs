//! Finite q-Pochhammer products in exact arithmetic and rigorous enclosures
//! of the infinite products built from them.
//!
//! Infinite products `∏_{k≥0}(1 − a_k)` with `a_k ∈ [0,1)` are enclosed by a
//! partial product `P_M = ∏_{k<M}(1 − a_k)` and the elementary bound
//! `1 ≥ ∏_{k≥M}(1 − a_k) ≥ 1 − Σ_{k≥M} a_k`, so the true value lies in
//! `[P_M (1 − ε_M), P_M]`. `M` grows until the radius `P_M ε_M / 2` meets the
//! requested tolerance, capped at [`MAX_FACTORS`].

use num_traits::{One, Signed, Zero};

use crate::bounded::BoundedReal;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::prime::Prime;
use crate::rational::{self, int, ExactRational};

/// Hard cap on the number of factors taken from an infinite product.
pub const MAX_FACTORS: u64 = 100_000;

/// `(x; q)_j = ∏_{k=1}^{j} (1 − x q^{k−1})`.
pub fn finite_qpoch(x: &ExactRational, q: &ExactRational, j: u64) -> ExactRational {
    let mut acc = ExactRational::one();
    let mut term = x.clone();
    for _ in 0..j {
        acc *= ExactRational::one() - &term;
        term *= q;
    }
    acc
}

/// All prefixes `(x; q)_0, …, (x; q)_j`.
pub fn finite_qpoch_table(x: &ExactRational, q: &ExactRational, j: u64) -> Vec<ExactRational> {
    let mut out = Vec::with_capacity(j as usize + 1);
    let mut acc = ExactRational::one();
    let mut term = x.clone();
    out.push(acc.clone());
    for _ in 0..j {
        acc *= ExactRational::one() - &term;
        term *= q;
        out.push(acc.clone());
    }
    out
}

/// `d_λ(1/p) = ∏_i ∏_{j=1}^{⌊m_i/2⌋} (1 − p^{−2j})`.
pub fn d_lambda(lambda: &Partition, p: Prime) -> ExactRational {
    let q2 = rational::inv_pow(p.get(), 2);
    lambda
        .multiplicities()
        .into_iter()
        .map(|(_, m)| finite_qpoch(&q2, &q2, (m / 2) as u64))
        .product()
}

/// Enclosure of `(x; q)_∞ = ∏_{m≥0} (1 − x q^m)` for `0 ≤ x < 1`, `0 ≤ q < 1`.
/// Tail bound: `Σ_{m≥M} x q^m = x q^M / (1 − q)`.
pub fn infinite_qpoch(
    x: &ExactRational,
    q: &ExactRational,
    tolerance: &ExactRational,
) -> Result<BoundedReal> {
    let one = ExactRational::one();
    if x.is_negative() || *x >= one || q.is_negative() || *q >= one {
        return Err(Error::OutOfRange(format!(
            "infinite product needs 0 <= x, q < 1 (x = {x}, q = {q})"
        )));
    }
    if !tolerance.is_positive() {
        return Err(Error::OutOfRange("tolerance must be positive".into()));
    }
    let tail_scale = (&one - q).recip();
    let mut partial = one.clone();
    let mut term = x.clone();
    for _ in 0..MAX_FACTORS {
        partial *= &one - &term;
        term *= q;
        let eps = &term * &tail_scale;
        if eps < one {
            let rad = &partial * &eps / int(2);
            if rad <= *tolerance {
                return Ok(BoundedReal::new(&partial - &rad, rad));
            }
        }
    }
    Err(Error::DepthCap(MAX_FACTORS))
}

/// Enclosure of `C_p = ∏_{i odd} (1 − p^{−i})`, the mass of the empty
/// partition. Computed as `(1/p; 1/p²)_∞`, whose tail bound is
/// `Σ_{i odd ≥ M} p^{−i} = p^{−M} / (1 − p^{−2})`.
pub fn odd_constant(p: Prime, tolerance: &ExactRational) -> Result<BoundedReal> {
    infinite_qpoch(&p.inv(), &rational::inv_pow(p.get(), 2), tolerance)
}

fn check_u(p: Prime, u: &ExactRational) -> Result<()> {
    if !u.is_positive() || *u >= int(p.get() as i64) {
        return Err(Error::OutOfRange(format!(
            "u must satisfy 0 < u < p = {p}, got {}",
            rational::format_rational(u)
        )));
    }
    Ok(())
}

/// Enclosure of the normalizer `(1 − u/p) ∏_{i≥3 odd} (1 − u²/p^i)` of the
/// u-deformed measure.
pub fn deformed_constant(p: Prime, u: &ExactRational, tolerance: &ExactRational) -> Result<BoundedReal> {
    check_u(p, u)?;
    let lead = ExactRational::one() - u * p.inv();
    let x = u * u * rational::inv_pow(p.get(), 3);
    let rest = infinite_qpoch(&x, &rational::inv_pow(p.get(), 2), tolerance)?;
    // lead ∈ (0,1) so scaling cannot push the radius past the tolerance
    Ok(rest.scale(&lead))
}

#[derive(Clone, Debug)]
pub struct EulerCheck {
    /// `1 + Σ_{m=1}^{N} s^m / (q;q)_m`
    pub lhs: ExactRational,
    /// Enclosure of `∏_{m≥0} (1 − s q^m)^{−1}`.
    pub rhs: BoundedReal,
    /// Upper bound on the omitted terms `Σ_{m>N} s^m / (q;q)_m`.
    pub truncation_bound: ExactRational,
    pub agree: bool,
}

/// Checks `1 + Σ_{m≥1} s^m/((1−q)⋯(1−q^m)) = ∏_{m≥0} (1 − s q^m)^{−1}`.
///
/// Every omitted term is positive and at most `s^m / (q;q)_∞`, so the
/// infinite sum lies in `[lhs, lhs + s^{N+1} / ((1 − s) (q;q)_∞)]`; the check
/// passes when that interval meets the product enclosure.
pub fn verify_euler_identity(s: &ExactRational, q: &ExactRational, n: u64) -> Result<EulerCheck> {
    let one = ExactRational::one();
    for (name, v) in [("s", s), ("q", q)] {
        if !v.is_positive() || *v >= one {
            return Err(Error::OutOfRange(format!(
                "{name} must lie in (0,1), got {}",
                rational::format_rational(v)
            )));
        }
    }
    if n == 0 {
        return Err(Error::OutOfRange("N must be at least 1".into()));
    }
    let tol = rational::inv_pow(2, 100);

    let mut lhs = one.clone();
    let mut s_pow = one.clone();
    let mut poch = one.clone();
    let mut q_pow = one.clone();
    for _ in 1..=n {
        s_pow *= s;
        q_pow *= q;
        poch *= &one - &q_pow;
        lhs += &s_pow / &poch;
    }

    let rhs = infinite_qpoch(s, q, &tol)?.recip()?;
    let qq_inf = infinite_qpoch(q, q, &tol)?;
    let truncation_bound = &s_pow * s / ((&one - s) * qq_inf.lo());
    let sum_range = BoundedReal::from_bounds(lhs.clone(), &lhs + &truncation_bound);
    let agree = sum_range.intersects(&rhs);
    Ok(EulerCheck {
        lhs,
        rhs,
        truncation_bound,
        agree,
    })
}

/// Gaussian binomial `[r choose s]_q = (q;q)_r / ((q;q)_s (q;q)_{r−s})`.
pub fn gaussian_binomial(r: u64, s: u64, q: &ExactRational) -> ExactRational {
    if s > r {
        return ExactRational::zero();
    }
    let t = finite_qpoch_table(q, q, r);
    &t[r as usize] / (&t[s as usize] * &t[(r - s) as usize])
}

#[derive(Clone, Debug, PartialEq)]
pub struct QBinomialCheck {
    pub lhs: ExactRational,
    pub rhs: ExactRational,
    pub agree: bool,
}

/// Checks `Σ_{s=0}^{r} [r choose s]_q q^{s(s+1)/2} x^s = ∏_{k=1}^{r} (1 + x q^k)`
/// exactly.
pub fn verify_qbinomial(r: u64, q: &ExactRational, x: &ExactRational) -> QBinomialCheck {
    let poch = finite_qpoch_table(q, q, r);
    let mut lhs = ExactRational::zero();
    for s in 0..=r {
        let gauss = &poch[r as usize] / (&poch[s as usize] * &poch[(r - s) as usize]);
        lhs += gauss * rational::pow(q, s * (s + 1) / 2) * rational::pow(x, s);
    }
    let mut rhs = ExactRational::one();
    let mut q_pow = ExactRational::one();
    for _ in 1..=r {
        q_pow *= q;
        rhs *= ExactRational::one() + x * &q_pow;
    }
    let agree = lhs == rhs;
    QBinomialCheck { lhs, rhs, agree }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn tol(exp10: u32) -> ExactRational {
        ExactRational::new(1.into(), num_traits::pow(num_bigint::BigInt::from(10), exp10 as usize))
    }

    /// Independent oracle: plain partial product over odd i ≤ 201 and the
    /// tail sum over odd i ≥ 203.
    fn odd_product_oracle(base: u32, u2: &ExactRational, first: &ExactRational) -> (ExactRational, ExactRational) {
        let mut prod = first.clone();
        let mut i = 3;
        while i <= 201 {
            prod *= ExactRational::one() - u2 * rational::inv_pow(base, i);
            i += 2;
        }
        let b2 = rat(base as i64 * base as i64, 1);
        let tail = u2 * rational::inv_pow(base, 203) * &b2 / (&b2 - int(1));
        (&prod * (ExactRational::one() - tail), prod)
    }

    #[test]
    fn finite_qpoch_examples() {
        let q = rat(1, 4);
        assert_eq!(finite_qpoch(&q, &q, 0), int(1));
        assert_eq!(finite_qpoch(&q, &q, 1), rat(3, 4));
        assert_eq!(finite_qpoch(&q, &q, 2), rat(45, 64));
    }

    #[test]
    fn d_lambda_examples() {
        let part = |v: &[u32]| Partition::new(v.to_vec()).unwrap();
        assert_eq!(d_lambda(&Partition::empty(), p(2)), int(1));
        assert_eq!(d_lambda(&part(&[1, 1]), p(2)), rat(3, 4));
        assert_eq!(d_lambda(&part(&[2, 2, 1, 1, 1, 1]), p(2)), rat(135, 256));
    }

    #[test]
    fn odd_constant_matches_oracle() {
        for base in [2u32, 3] {
            let c = odd_constant(p(base as u64), &tol(20)).unwrap();
            assert!(*c.rad() <= tol(20));
            let (lo, hi) = odd_product_oracle(base, &int(1), &(int(1) - rat(1, base as i64)));
            assert!(c.lo() <= hi && lo <= c.hi(), "p={base}");
        }
        let c2 = odd_constant(p(2), &tol(20)).unwrap();
        assert!((c2.mid_f64() - 0.419_422_441_795_107_6).abs() < 1e-15);
    }

    #[test]
    fn odd_constant_tolerances_agree() {
        let a = odd_constant(p(2), &tol(10)).unwrap();
        let b = odd_constant(p(2), &tol(20)).unwrap();
        assert!((a.mid() - b.mid()).abs() <= tol(9));
        assert!(a.contains_enclosure(&b) || a.intersects(&b));
    }

    #[test]
    fn odd_constant_contains_later_partial_products_floor() {
        // every partial product beyond the truncation point lies above the
        // enclosure's lower end and the products decrease
        let c = odd_constant(p(3), &tol(12)).unwrap();
        let mut prev = ExactRational::one();
        let mut prod = ExactRational::one();
        let mut i = 1;
        while i < 120 {
            prod *= ExactRational::one() - rational::inv_pow(3, i);
            assert!(prod < prev);
            prev = prod.clone();
            i += 2;
        }
        assert!(prod >= c.lo());
        assert!(c.contains(&prod) || prod > c.hi());
    }

    #[test]
    fn deformed_constant_examples() {
        let at_one = deformed_constant(p(2), &int(1), &tol(20)).unwrap();
        let c = odd_constant(p(2), &tol(20)).unwrap();
        assert!(at_one.intersects(&c));

        let d = deformed_constant(p(2), &rat(1, 2), &tol(15)).unwrap();
        assert!(*d.rad() <= tol(15));
        let (lo, hi) = odd_product_oracle(2, &rat(1, 4), &rat(3, 4));
        assert!(d.lo() <= hi && lo <= d.hi());

        let d3 = deformed_constant(p(3), &int(2), &tol(15)).unwrap();
        assert!(d3.lo() > int(0) && d3.hi() < int(1));
        let (lo, hi) = odd_product_oracle(3, &int(4), &rat(1, 3));
        assert!(d3.lo() <= hi && lo <= d3.hi());
    }

    #[test]
    fn deformed_constant_rejects_bad_u() {
        assert!(deformed_constant(p(2), &int(0), &tol(5)).is_err());
        assert!(deformed_constant(p(2), &int(2), &tol(5)).is_err());
        assert!(deformed_constant(p(2), &int(-1), &tol(5)).is_err());
    }

    #[test]
    fn euler_identity_examples() {
        assert!(verify_euler_identity(&rat(1, 8), &rat(1, 4), 30).unwrap().agree);
        assert!(verify_euler_identity(&rat(1, 2), &rat(1, 2), 40).unwrap().agree);
        let one_term = verify_euler_identity(&rat(1, 4), &rat(1, 4), 1).unwrap();
        assert_eq!(one_term.lhs, rat(4, 3));
        assert!(one_term.agree);
        assert!(verify_euler_identity(&int(1), &rat(1, 2), 3).is_err());
        assert!(verify_euler_identity(&rat(1, 2), &int(0), 3).is_err());
        assert!(verify_euler_identity(&rat(1, 2), &rat(1, 2), 0).is_err());
    }

    #[test]
    fn euler_identity_detects_a_wrong_product() {
        // the partial sum must not match a product that is off by a little
        let check = verify_euler_identity(&rat(1, 8), &rat(1, 4), 30).unwrap();
        let shifted = check.rhs.scale(&rat(1_000_001, 1_000_000));
        let range = BoundedReal::from_bounds(check.lhs.clone(), &check.lhs + &check.truncation_bound);
        assert!(!range.intersects(&shifted));
    }

    #[test]
    fn qbinomial_examples() {
        let one = verify_qbinomial(1, &rat(1, 2), &int(1));
        assert_eq!(one.lhs, rat(3, 2));
        assert_eq!(one.rhs, rat(3, 2));
        assert!(one.agree);
        assert!(verify_qbinomial(3, &rat(1, 2), &int(1)).agree);
        assert!(verify_qbinomial(5, &rat(1, 3), &int(2)).agree);
    }

    #[test]
    fn qbinomial_exhaustive_grid() {
        let qs = [rat(1, 2), rat(1, 3), rat(2, 5), rat(3, 7), rat(1, 5)];
        let xs = [int(1), int(2), rat(1, 2), rat(-3, 4), int(0)];
        for r in 1..=12 {
            for q in &qs {
                for x in &xs {
                    assert!(verify_qbinomial(r, q, x).agree, "r={r} q={q} x={x}");
                }
            }
        }
    }

    #[test]
    fn gaussian_binomial_small() {
        // [4 choose 2]_q = 1 + q + 2q^2 + q^3 + q^4
        let q = rat(1, 2);
        let expect = int(1) + &q + int(2) * &q * &q + rational::pow(&q, 3) + rational::pow(&q, 4);
        assert_eq!(gaussian_binomial(4, 2, &q), expect);
        assert_eq!(gaussian_binomial(2, 3, &q), int(0));
    }

    proptest! {
        #[test]
        fn qpoch_step(xn in -20i64..20, xd in 1i64..20, qn in -20i64..20, qd in 1i64..20, j in 0u64..12) {
            let x = rat(xn, xd);
            let q = rat(qn, qd);
            let step = finite_qpoch(&x, &q, j) * (ExactRational::one() - &x * rational::pow(&q, j));
            prop_assert_eq!(finite_qpoch(&x, &q, j + 1), step);
        }
    }
}
