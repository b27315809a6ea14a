//! The explicit witness point for perfect formats.
//!
//! For a canonical format `(p_1, ..., p_n, p_{n+1})` with
//! `q <= p_{n+1} <= p_1 ... p_n` the witness has `p_{n+1}` rank-one terms, one
//! per index tuple of a support set `S` of tuples over the first `n` modes.
//! The term at position `h` (tuple `k`) uses the factors
//! `e_{k_j} + u_j(k) e_{p_j}` for `j <= n` and `e_h` in the last mode.
//!
//! Indices in this module are 1-based throughout.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{is_perfect, threshold_of, CanonicalFormat};
use crate::tensor::RankOneTermList;

/// A tuple `(k_1, ..., k_n)` with `1 <= k_j <= p_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexTuple(pub Vec<usize>);

impl IndexTuple {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    /// Number of coordinates at their maximum `p_j`.
    pub fn count_maximal(&self, dims: &[usize]) -> usize {
        self.0.iter().zip(dims).filter(|(k, p)| k == p).count()
    }

    pub fn is_valid_for(&self, dims: &[usize]) -> bool {
        self.0.len() == dims.len() && self.0.iter().zip(dims).all(|(&k, &p)| (1..=p).contains(&k))
    }
}

impl fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// All tuples over `dims` in lexicographic order (first coordinate most
/// significant).
pub fn all_tuples(dims: &[usize]) -> impl Iterator<Item = IndexTuple> + '_ {
    let total: usize = dims.iter().product();
    (0..total).map(move |mut lin| {
        let mut coords = vec![0; dims.len()];
        for j in (0..dims.len()).rev() {
            coords[j] = lin % dims[j] + 1;
            lin /= dims[j];
        }
        IndexTuple(coords)
    })
}

/// Ordered support of the witness. The position of a tuple is its image
/// under the bijection onto `1..=|S|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    pub tuples: Vec<IndexTuple>,
    pub dims: Vec<usize>,
}

impl SupportSet {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// 1-based position of `t`, if present.
    pub fn position(&self, t: &IndexTuple) -> Option<usize> {
        self.tuples.iter().position(|s| s == t).map(|i| i + 1)
    }
}

/// Tuples whose number of maximal coordinates differs from `n - 1`, in
/// lexicographic order. Has exactly `q` elements.
pub fn build_s0(dims: &[usize]) -> Vec<IndexTuple> {
    let n = dims.len();
    all_tuples(dims)
        .filter(|t| t.count_maximal(dims) + 1 != n)
        .collect()
}

/// `S_0` followed by the lexicographically smallest tuples outside it until
/// `target` tuples are present.
pub fn extend_support(s0: &[IndexTuple], target: usize, dims: &[usize]) -> Result<SupportSet> {
    let total: usize = dims.iter().product();
    if target < s0.len() || target > total {
        return Err(Error::SupportSize {
            target,
            min: s0.len(),
            max: total,
        });
    }
    let mut tuples = s0.to_vec();
    let n = dims.len();
    tuples.extend(
        all_tuples(dims)
            .filter(|t| t.count_maximal(dims) + 1 == n)
            .take(target - s0.len()),
    );
    Ok(SupportSet {
        tuples,
        dims: dims.to_vec(),
    })
}

/// How the off-basis coefficient `u_j(k)` of the witness factors is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientRule {
    /// `0` if `k_j = p_j`; else `1` if some other coordinate is maximal;
    /// else `k_j + 1`.
    Standard,
    /// `0` if `k_j = p_j`; else `1` if every other coordinate is maximal;
    /// else `1 + sum_{s != j} k_s w_s` with mixed-radix weights
    /// `w_s = prod_{l < s, l != j} (p_l + 1)`, so distinct values of the other
    /// coordinates give distinct coefficients. For two modes this is
    /// `1 + k_other` on interior tuples.
    Separating,
}

impl CoefficientRule {
    pub fn name(self) -> &'static str {
        match self {
            CoefficientRule::Standard => "standard",
            CoefficientRule::Separating => "separating",
        }
    }
}

impl std::str::FromStr for CoefficientRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(CoefficientRule::Standard),
            "separating" => Ok(CoefficientRule::Separating),
            other => Err(Error::InvalidArgument(format!(
                "unknown coefficient rule {other:?}"
            ))),
        }
    }
}

/// `u_j(t)` under the standard three-case rule; `j` is 1-based. Cases are
/// tested in order, so `t_j = p_j` wins over any other maximal coordinate.
pub fn u_coeff(j: usize, t: &IndexTuple, dims: &[usize]) -> i64 {
    u_coeff_with(CoefficientRule::Standard, j, t, dims)
}

pub fn u_coeff_with(rule: CoefficientRule, j: usize, t: &IndexTuple, dims: &[usize]) -> i64 {
    let x = t.coords();
    let jj = j - 1;
    if x[jj] == dims[jj] {
        return 0;
    }
    let others = (0..dims.len()).filter(|&s| s != jj);
    match rule {
        CoefficientRule::Standard => {
            if others.clone().any(|s| x[s] == dims[s]) {
                1
            } else {
                x[jj] as i64 + 1
            }
        }
        CoefficientRule::Separating => {
            if others.clone().all(|s| x[s] == dims[s]) {
                return 1;
            }
            let mut weight = 1i64;
            let mut acc = 1i64;
            for s in others {
                acc += x[s] as i64 * weight;
                weight *= dims[s] as i64 + 1;
            }
            acc
        }
    }
}

/// The witness point: `p_N` groups of `N` integer factor vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessPoint {
    pub format: CanonicalFormat,
    pub rule: CoefficientRule,
    pub support: SupportSet,
    pub groups: Vec<Vec<Vec<i64>>>,
}

impl WitnessPoint {
    pub fn terms(&self) -> RankOneTermList<i64> {
        RankOneTermList::new(self.groups.clone())
    }
}

/// Witness under the standard coefficient rule.
pub fn build_witness(f: &CanonicalFormat) -> Result<WitnessPoint> {
    build_witness_with(f, CoefficientRule::Standard)
}

pub fn build_witness_with(f: &CanonicalFormat, rule: CoefficientRule) -> Result<WitnessPoint> {
    let verdict = is_perfect(f);
    if !verdict.perfect {
        return Err(Error::NotPerfect {
            dims: f.dims().to_vec(),
            q: verdict.q,
            largest: f.largest(),
            product_rest: f.product_rest(),
        });
    }
    let dims = f.rest();
    let r = f.largest();
    let s0 = build_s0(dims);
    debug_assert_eq!(s0.len() as u64, threshold_of(dims));
    let support = extend_support(&s0, r, dims)?;
    let groups = support
        .tuples
        .iter()
        .enumerate()
        .map(|(h, t)| {
            let mut group: Vec<Vec<i64>> = dims
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    let mut v = vec![0i64; p];
                    v[t.coords()[j] - 1] += 1;
                    v[p - 1] += u_coeff_with(rule, j + 1, t, dims);
                    v
                })
                .collect();
            let mut last = vec![0i64; r];
            last[h] = 1;
            group.push(last);
            group
        })
        .collect();
    Ok(WitnessPoint {
        format: f.clone(),
        rule,
        support,
        groups,
    })
}
