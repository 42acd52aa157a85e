//! Integer partitions and the statistics the measures are written in.
//!
//! A partition `λ = (λ_1 ≥ λ_2 ≥ … ≥ λ_ℓ > 0)` stands for the finite abelian
//! p-group `⊕ Z/p^{λ_i}`. Its conjugate `μ = λ'` lists column heights of the
//! Young diagram; the sampler builds partitions column by column.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest size accepted by [`enumerate_partitions`]. p(60) = 966467.
pub const ENUMERATION_CAP: u32 = 60;

/// A weakly decreasing list of positive parts.
///
/// `Ord` is the canonical table order: by size, then reverse lexicographic
/// on the parts, so `[2] < [1,1] < [3] < [2,1] < [1,1,1]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidPartition("parts must be positive".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition(
                "parts must be weakly decreasing".into(),
            ));
        }
        Ok(Partition { parts })
    }

    /// Builds the partition whose conjugate is `columns`. Trailing zero
    /// heights are ignored.
    pub fn from_columns(columns: &[u32]) -> Result<Self> {
        let trimmed: Vec<u32> = columns.iter().copied().take_while(|&c| c > 0).collect();
        if columns[trimmed.len()..].iter().any(|&c| c > 0) {
            return Err(Error::InvalidPartition(
                "column heights must be weakly decreasing".into(),
            ));
        }
        Ok(Partition::new(trimmed)?.conjugate())
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Number of parts, ℓ(λ).
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    /// |λ|
    pub fn size(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn largest_part(&self) -> u32 {
        self.parts.first().copied().unwrap_or(0)
    }

    /// Transpose of the Young diagram: `μ_j = #{i : λ_i ≥ j}`.
    pub fn conjugate(&self) -> Partition {
        let mut mu = Vec::with_capacity(self.largest_part() as usize);
        for j in 1..=self.largest_part() {
            // parts are decreasing, so the count is a prefix length
            mu.push(self.parts.partition_point(|&x| x >= j) as u32);
        }
        Partition { parts: mu }
    }

    /// Column height λ'_j for `j ≥ 1`; zero past the first row.
    pub fn column(&self, j: u32) -> u32 {
        if j == 0 {
            return 0;
        }
        self.parts.partition_point(|&x| x >= j) as u32
    }

    /// n(λ) = Σ (i−1) λ_i.
    pub fn n_stat(&self) -> u64 {
        self.parts
            .iter()
            .enumerate()
            .map(|(i, &x)| i as u64 * x as u64)
            .sum()
    }

    /// m_i(λ), the number of parts equal to `i`.
    pub fn multiplicity(&self, i: u32) -> u32 {
        self.parts.iter().filter(|&&x| x == i).count() as u32
    }

    /// Nonzero multiplicities `(part, m_part)` in decreasing part order.
    pub fn multiplicities(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = Vec::new();
        for &x in &self.parts {
            match out.last_mut() {
                Some((v, m)) if *v == x => *m += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    }
}

impl Ord for Partition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| other.parts.cmp(&self.parts))
    }
}

impl PartialOrd for Partition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, x) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| {
                Error::InvalidPartition(format!("expected \"[a,b,...]\", got {s:?}"))
            })?;
        if inner.trim().is_empty() {
            return Ok(Partition::empty());
        }
        let parts = inner
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidPartition(format!("bad part {:?}", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}

impl serde::Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All partitions of `n`, in reverse lexicographic order.
pub fn enumerate_partitions(n: u32) -> Result<Vec<Partition>> {
    enumerate_bounded(n, u32::MAX)
}

/// All partitions of `n` with at most `max_parts` parts, reverse lexicographic.
pub fn enumerate_bounded(n: u32, max_parts: u32) -> Result<Vec<Partition>> {
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            requested: n,
            cap: ENUMERATION_CAP,
        });
    }
    let mut out = Vec::new();
    let mut stack = Vec::new();
    fill(n, n, max_parts, &mut stack, &mut out);
    Ok(out)
}

/// All partitions with size at most `max_size`, in canonical order.
pub fn enumerate_up_to(max_size: u32, max_parts: u32) -> Result<Vec<Partition>> {
    let mut out = Vec::new();
    for n in 0..=max_size {
        out.extend(enumerate_bounded(n, max_parts)?);
    }
    Ok(out)
}

fn fill(rest: u32, bound: u32, parts_left: u32, stack: &mut Vec<u32>, out: &mut Vec<Partition>) {
    if rest == 0 {
        out.push(Partition {
            parts: stack.clone(),
        });
        return;
    }
    if parts_left == 0 {
        return;
    }
    for first in (1..=rest.min(bound)).rev() {
        stack.push(first);
        fill(rest - first, first, parts_left - 1, stack, out);
        stack.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(Partition::empty().conjugate(), Partition::empty());
        assert_eq!(part(&[3, 1]).conjugate(), part(&[2, 1, 1]));
        assert_eq!(part(&[2, 2]).conjugate(), part(&[2, 2]));
    }

    #[test]
    fn n_stat_examples() {
        assert_eq!(Partition::empty().n_stat(), 0);
        assert_eq!(part(&[1, 1]).n_stat(), 1);
        assert_eq!(part(&[3, 2, 1]).n_stat(), 4);
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(part(&[1, 1]).multiplicity(1), 2);
        assert_eq!(part(&[3, 1]).multiplicity(2), 0);
        assert_eq!(part(&[2, 2, 2]).multiplicity(2), 3);
        assert_eq!(part(&[3, 3, 1]).multiplicities(), vec![(3, 2), (1, 1)]);
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(enumerate_partitions(0).unwrap(), vec![Partition::empty()]);
        assert_eq!(
            enumerate_partitions(2).unwrap(),
            vec![part(&[2]), part(&[1, 1])]
        );
        let five = enumerate_partitions(5).unwrap();
        assert_eq!(five.len(), 7);
        assert_eq!(five[0], part(&[5]));
        assert_eq!(five[1], part(&[4, 1]));
        assert_eq!(five[6], part(&[1, 1, 1, 1, 1]));
        assert!(matches!(
            enumerate_partitions(61),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn enumeration_is_sorted_canonically() {
        let all = enumerate_up_to(12, u32::MAX).unwrap();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bounded_enumeration_filters_by_length() {
        let all = enumerate_partitions(10).unwrap();
        let bounded = enumerate_bounded(10, 3).unwrap();
        let expected: Vec<_> = all.into_iter().filter(|l| l.len() <= 3).collect();
        assert_eq!(bounded, expected);
    }

    #[test]
    fn conjugation_is_an_involution_up_to_20() {
        for n in 0..=20 {
            for l in enumerate_partitions(n).unwrap() {
                let mu = l.conjugate();
                assert_eq!(mu.size(), l.size());
                assert_eq!(mu.conjugate(), l);
                for j in 1..=l.largest_part() + 1 {
                    assert_eq!(l.column(j), mu.parts().get(j as usize - 1).copied().unwrap_or(0));
                }
            }
        }
    }

    #[test]
    fn n_stat_equals_sum_of_column_binomials() {
        for n in 0..=20 {
            for l in enumerate_partitions(n).unwrap() {
                let via_columns: u64 = l
                    .conjugate()
                    .parts()
                    .iter()
                    .map(|&m| m as u64 * (m as u64).saturating_sub(1) / 2)
                    .sum();
                assert_eq!(l.n_stat(), via_columns, "{l}");
            }
        }
    }

    #[test]
    fn counts_match_euler_recurrence() {
        // p(n) via the pentagonal number recurrence
        let mut p = vec![1i64; 41];
        for n in 1..=40i64 {
            let mut acc = 0i64;
            for k in 1.. {
                let g1 = k * (3 * k - 1) / 2;
                if g1 > n {
                    break;
                }
                let sign = if k % 2 == 1 { 1 } else { -1 };
                acc += sign * p[(n - g1) as usize];
                let g2 = k * (3 * k + 1) / 2;
                if g2 <= n {
                    acc += sign * p[(n - g2) as usize];
                }
            }
            p[n as usize] = acc;
        }
        for n in 0..=40u32 {
            assert_eq!(
                enumerate_partitions(n).unwrap().len() as i64,
                p[n as usize],
                "n={n}"
            );
        }
    }

    #[test]
    fn text_form() {
        assert_eq!(Partition::empty().to_string(), "[]");
        assert_eq!(part(&[3, 1, 1]).to_string(), "[3,1,1]");
        assert_eq!("[3, 1,1]".parse::<Partition>().unwrap(), part(&[3, 1, 1]));
        assert_eq!("[]".parse::<Partition>().unwrap(), Partition::empty());
        let err = "[1,2]".parse::<Partition>().unwrap_err();
        assert!(err.to_string().contains("parts must be weakly decreasing"));
        assert!("[0]".parse::<Partition>().is_err());
        assert!("3,1".parse::<Partition>().is_err());
    }

    #[test]
    fn from_columns_inverts_conjugate() {
        assert_eq!(Partition::from_columns(&[2, 1, 0]).unwrap(), part(&[2, 1]));
        assert_eq!(Partition::from_columns(&[0]).unwrap(), Partition::empty());
        assert!(Partition::from_columns(&[1, 2]).is_err());
    }
}
