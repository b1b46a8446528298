//! Finite prefixes of divisor chains `n_1 | n_2 | ...`.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated divisor chain prefix. Levels are numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "OmegaFile", into = "OmegaFile")]
pub struct OmegaPrefix {
    terms: Vec<usize>,
    /// User assertion that `n_k -> infinity` along the full chain.
    eventually_divergent: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OmegaFile {
    omega: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    divergent: bool,
}

impl TryFrom<OmegaFile> for OmegaPrefix {
    type Error = Error;

    fn try_from(f: OmegaFile) -> Result<Self> {
        Ok(validate_omega(&f.omega)?.with_divergence(f.divergent))
    }
}

impl From<OmegaPrefix> for OmegaFile {
    fn from(w: OmegaPrefix) -> Self {
        OmegaFile {
            omega: w.terms,
            divergent: w.eventually_divergent,
        }
    }
}

pub fn validate_omega(raw: &[usize]) -> Result<OmegaPrefix> {
    if raw.is_empty() {
        return Err(Error::EmptyOmega);
    }
    if let Some(i) = raw.iter().position(|&n| n == 0) {
        return Err(Error::NonPositiveOmega(i));
    }
    for i in 1..raw.len() {
        if !raw[i].is_multiple_of(raw[i - 1]) {
            return Err(Error::NotDivisorChain(i));
        }
    }
    Ok(OmegaPrefix {
        terms: raw.to_vec(),
        eventually_divergent: false,
    })
}

impl OmegaPrefix {
    pub fn new(raw: &[usize]) -> Result<Self> {
        validate_omega(raw)
    }

    pub fn with_divergence(mut self, divergent: bool) -> Self {
        self.eventually_divergent = divergent;
        self
    }

    pub fn is_eventually_divergent(&self) -> bool {
        self.eventually_divergent
    }

    pub fn terms(&self) -> &[usize] {
        &self.terms
    }

    /// Number of levels `K`.
    pub fn depth(&self) -> usize {
        self.terms.len()
    }

    /// `n_k` for `1 <= k <= K`.
    pub fn n(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.terms.len() {
            return Err(Error::LevelOutOfRange(k));
        }
        Ok(self.terms[k - 1])
    }

    pub fn last(&self) -> usize {
        *self.terms.last().unwrap()
    }

    /// The first `k` levels.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        self.n(k)?;
        Ok(OmegaPrefix {
            terms: self.terms[..k].to_vec(),
            eventually_divergent: false,
        })
    }

    /// First level `k` with `gcd(p, n_k)` equal to its final prefix value,
    /// provided that value is certified stable.
    pub fn stable_level(&self, p: usize) -> Result<usize> {
        let g = gcd_omega(p, self);
        if !g.stabilized {
            return Err(Error::UnstablePrefix);
        }
        Ok(self.terms.iter().position(|&n| n.gcd(&p) == g.value).unwrap() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcdOmega {
    pub value: usize,
    pub stabilized: bool,
}

impl GcdOmega {
    pub fn require_stable(self) -> Result<usize> {
        if self.stabilized {
            Ok(self.value)
        } else {
            Err(Error::UnstablePrefix)
        }
    }
}

/// `gcd(p, n_K)`; stable when the last two terms agree or the value is `p`.
pub fn gcd_omega(p: usize, omega: &OmegaPrefix) -> GcdOmega {
    let t = omega.terms();
    let value = p.gcd(&t[t.len() - 1]);
    let stabilized = value == p || (t.len() >= 2 && p.gcd(&t[t.len() - 2]) == value);
    GcdOmega { value, stabilized }
}

/// Every term of `a` divides some term of `b`.
pub fn divides_omega(a: &OmegaPrefix, b: &OmegaPrefix) -> bool {
    a.terms().iter().all(|&n| b.terms().iter().any(|&m| m % n == 0))
}
