//! Smith normal form over the integers and a p-local variant.
//!
//! [`smith_diagonal`] is the reference: classic elimination with the pivot of
//! least absolute value, arbitrary precision throughout. [`p_local_valuations`]
//! works in `Z/p^K` and returns only the p-adic valuations of the invariant
//! factors, truncated at `K`; it is much faster and is checked against the
//! reference in tests.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type IntMatrix = Vec<Vec<BigInt>>;

fn check_square<T>(m: &[Vec<T>]) -> Result<usize> {
    let n = m.len();
    if let Some(row) = m.iter().find(|r| r.len() != n) {
        return Err(Error::NotSquare {
            rows: n,
            cols: row.len(),
        });
    }
    Ok(n)
}

/// Invariant factors `d_1 | d_2 | … | d_n`, all positive. Fails on a
/// singular matrix.
pub fn smith_diagonal(m: &IntMatrix) -> Result<Vec<BigInt>> {
    let n = check_square(m)?;
    let mut a = m.clone();
    let mut diag = Vec::with_capacity(n);
    for t in 0..n {
        loop {
            let (pi, pj) = min_abs_entry(&a, t).ok_or(Error::SingularMatrix)?;
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            let mut clean = true;
            for i in t + 1..n {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                let (top, rest) = a.split_at_mut(i);
                let pivot_row = &top[t];
                for (x, y) in rest[0][t..].iter_mut().zip(&pivot_row[t..]) {
                    *x -= &q * y;
                }
                if !a[i][t].is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..n {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                for row in a[t..].iter_mut() {
                    let y = row[t].clone();
                    row[j] -= &q * y;
                }
                if !a[t][j].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // row and column are clear; enforce divisibility of the rest
            let pivot = a[t][t].clone();
            let bad = (t + 1..n).find(|&i| a[i][t + 1..].iter().any(|x| !x.is_multiple_of(&pivot)));
            match bad {
                Some(i) => {
                    let (top, rest) = a.split_at_mut(i);
                    for (x, y) in top[t][t..].iter_mut().zip(&rest[0][t..]) {
                        *x += y;
                    }
                }
                None => break,
            }
        }
        diag.push(a[t][t].abs());
    }
    Ok(diag)
}

fn min_abs_entry(a: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, x) in row.iter().enumerate().skip(t) {
            if x.is_zero() {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bj)) => x.abs() < a[bi][bj].abs(),
            };
            if better {
                best = Some((i, j));
                if x.abs().is_one() {
                    return best;
                }
            }
        }
    }
    best
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &IntMatrix) -> Result<BigInt> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(BigInt::one());
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    Ok(sign * &a[n - 1][n - 1])
}

/// p-adic valuation of a nonzero integer, stopping at `cap`.
pub fn valuation(x: &BigInt, p: u32, cap: u32) -> u32 {
    let p = BigInt::from(p);
    let mut v = 0;
    let mut y = x.abs();
    while v < cap && !y.is_zero() && y.is_multiple_of(&p) {
        y /= &p;
        v += 1;
    }
    if y.is_zero() {
        cap
    } else {
        v
    }
}

/// Valuations `min(v_p(d_i), cap)` of the invariant factors, computed by
/// elimination over `Z/p^cap`. Requires `p^cap < 2^63`; returns `None`
/// otherwise so callers can fall back to [`smith_diagonal`].
pub fn p_local_valuations(m: &[Vec<i64>], p: u32, cap: u32) -> Result<Option<Vec<u32>>> {
    let n = check_square(m)?;
    let Some(modulus) = (p as i128).checked_pow(cap).filter(|&k| k < (1i128 << 63)) else {
        return Ok(None);
    };
    let p = p as i128;
    let mut a: Vec<Vec<i128>> = m
        .iter()
        .map(|r| r.iter().map(|&x| (x as i128).rem_euclid(modulus)).collect())
        .collect();
    let val = |x: i128| -> u32 {
        if x == 0 {
            return cap;
        }
        let mut v = 0;
        let mut y = x;
        while y % p == 0 {
            y /= p;
            v += 1;
        }
        v
    };
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        // pivot of least valuation
        let mut best: Option<(usize, usize, u32)> = None;
        'scan: for i in t..n {
            for j in t..n {
                let v = val(a[i][j]);
                if v < cap && best.is_none_or(|(_, _, bv)| v < bv) {
                    best = Some((i, j, v));
                    if v == 0 {
                        break 'scan;
                    }
                }
            }
        }
        let Some((pi, pj, v)) = best else {
            out.extend(std::iter::repeat_n(cap, n - t));
            break;
        };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        // pivot = p^v · unit; scale row t by unit^{-1}
        let unit = a[t][t] / p.pow(v);
        let inv = mod_inverse(unit.rem_euclid(modulus), modulus);
        for x in a[t][t..].iter_mut() {
            *x = mulmod(*x, inv, modulus);
        }
        let pv = p.pow(v);
        // every other entry in the pivot column/row has valuation >= v
        for i in t + 1..n {
            if a[i][t] == 0 {
                continue;
            }
            let f = a[i][t] / pv;
            let (top, rest) = a.split_at_mut(i);
            for (x, &y) in rest[0][t..].iter_mut().zip(&top[t][t..]) {
                *x = (*x - mulmod(f, y, modulus)).rem_euclid(modulus);
            }
        }
        a[t][t + 1..].fill(0);
        out.push(v);
    }
    out.sort_unstable();
    Ok(Some(out))
}

fn mulmod(a: i128, b: i128, m: i128) -> i128 {
    // operands are < 2^63, so the product fits in i128
    (a * b).rem_euclid(m)
}

fn mod_inverse(a: i128, m: i128) -> i128 {
    let (mut r0, mut r1) = (m, a);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1, "not a unit");
    s0.rem_euclid(m)
}
