use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rational::{rat, ExactRational};

/// A prime `p`, the characteristic of the Sylow subgroups under study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u32);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if p < 2 || p > u32::MAX as u64 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Prime(p as u32))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// `1/p`
    pub fn inv(self) -> ExactRational {
        rat(1, self.0 as i64)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Prime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v: u64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad prime {s:?}")))?;
        Prime::new(v)
    }
}
