//! Tensor formats and their closed-form analysis.
//!
//! A [`Format`] is the raw list of mode sizes as written by the user. Rank is
//! invariant under permuting modes and dropping singleton modes, so every
//! predicate here works on a [`CanonicalFormat`]: dims >= 2, sorted
//! ascending, order >= 3. The largest (last) mode plays the distinguished
//! role; ties among maximal dims are broken by position.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mode sizes in the order given, possibly with singleton modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Format {
    dims: Vec<usize>,
}

impl Format {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Drops singleton modes and sorts the rest ascending.
    pub fn canonicalize(&self) -> Result<CanonicalFormat> {
        let mut dims: Vec<usize> = self.dims.iter().copied().filter(|&d| d != 1).collect();
        dims.sort_unstable();
        if dims.len() < 3 {
            return Err(Error::OrderTooSmall {
                dims: self.dims.clone(),
                order: dims.len(),
            });
        }
        CanonicalFormat::new(dims)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_dims(f, &self.dims)
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_format(s)
    }
}

fn write_dims(f: &mut fmt::Formatter<'_>, dims: &[usize]) -> fmt::Result {
    for (i, d) in dims.iter().enumerate() {
        if i > 0 {
            f.write_str("x")?;
        }
        write!(f, "{d}")?;
    }
    Ok(())
}

/// Parses `<int>x<int>x...` (lowercase `x`, no whitespace, at least two
/// fields, every field >= 1).
pub fn parse_format(text: &str) -> Result<Format> {
    let malformed = |reason: &str| Error::MalformedFormat {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = text.split('x').collect();
    if fields.len() < 2 {
        return Err(malformed("need at least two fields joined by 'x'"));
    }
    let mut dims = Vec::with_capacity(fields.len());
    for field in fields {
        if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed("every field must be a decimal integer"));
        }
        let d: usize = field
            .parse()
            .map_err(|_| malformed("dimension too large"))?;
        if d < 1 {
            return Err(malformed("dimensions must be at least 1"));
        }
        dims.push(d);
    }
    checked_product(&dims).ok_or_else(|| Error::Overflow(dims.clone()))?;
    Ok(Format { dims })
}

fn checked_product(dims: &[usize]) -> Option<u64> {
    dims.iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
}

/// A format with dims >= 2, sorted ascending, order >= 3, whose entry count
/// fits in a `u64`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct CanonicalFormat {
    dims: Vec<usize>,
}

impl CanonicalFormat {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let sorted = dims.windows(2).all(|w| w[0] <= w[1]);
        if dims.len() < 3 || !sorted || dims.iter().any(|&d| d < 2) {
            return Err(Error::NotCanonical(dims));
        }
        if checked_product(&dims).is_none() {
            return Err(Error::Overflow(dims));
        }
        Ok(Self { dims })
    }

    /// Parses and canonicalizes in one step.
    pub fn parse(text: &str) -> Result<Self> {
        parse_format(text)?.canonicalize()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// The largest mode size `p_N`.
    pub fn largest(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    /// The first `N - 1` mode sizes.
    pub fn rest(&self) -> &[usize] {
        &self.dims[..self.dims.len() - 1]
    }

    pub fn num_entries(&self) -> u64 {
        self.dims.iter().map(|&d| d as u64).product()
    }

    /// Product of all dims except the largest.
    pub fn product_rest(&self) -> u64 {
        self.rest().iter().map(|&d| d as u64).product()
    }

    pub fn sum_dims(&self) -> u64 {
        self.dims.iter().map(|&d| d as u64).sum()
    }

    pub fn as_format(&self) -> Format {
        Format::new(self.dims.clone())
    }
}

impl fmt::Display for CanonicalFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_dims(f, &self.dims)
    }
}

/// `q = p_1...p_n - (p_1 + ... + p_n) + n` over the first `n = N - 1` dims.
pub fn perfect_threshold_q(f: &CanonicalFormat) -> u64 {
    threshold_of(f.rest())
}

/// `q` for an arbitrary list of (at least two) mode sizes >= 2. This is
/// also the cardinality of the mandatory witness support.
pub(crate) fn threshold_of(dims: &[usize]) -> u64 {
    let prod: u64 = dims.iter().map(|&d| d as u64).product();
    let sum: u64 = dims.iter().map(|&d| d as u64).sum();
    // prod >= sum - n whenever every dim >= 2 and n >= 1
    prod + dims.len() as u64 - sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// No typical rank is smaller than this.
    pub lower: u64,
    /// No typical rank is larger than this.
    pub upper: u64,
    pub q: u64,
    pub max_dim: u64,
    pub product_rest: u64,
}

/// Interval containing every typical rank of the format.
///
/// The lower bound combines the flattening bound `min(p_N, prod_rest)` with
/// the dimension count `ceil(prod / (sum - N + 1))`; the upper bound is the
/// smallest leave-one-out product, which for sorted dims is `prod_rest`.
pub fn typical_rank_bounds(f: &CanonicalFormat) -> BoundsReport {
    let product_rest = f.product_rest();
    let max_dim = f.largest() as u64;
    let entries = f.num_entries();
    let cone_dim = f.sum_dims() - f.order() as u64 + 1;
    let dimension_bound = entries.div_ceil(cone_dim);
    let flattening = max_dim.min(product_rest);
    BoundsReport {
        lower: flattening.max(dimension_bound),
        upper: product_rest,
        q: perfect_threshold_q(f),
        max_dim,
        product_rest,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfectVerdict {
    pub perfect: bool,
    pub q: u64,
    /// `[q, prod_rest]`: the format is perfect iff `p_N` lies in it.
    pub interval: [u64; 2],
}

/// Closed-form perfectness test: `q <= p_N <= p_1 ... p_{N-1}`.
pub fn is_perfect(f: &CanonicalFormat) -> PerfectVerdict {
    let q = perfect_threshold_q(f);
    let upper = f.product_rest();
    let largest = f.largest() as u64;
    PerfectVerdict {
        perfect: q <= largest && largest <= upper,
        q,
        interval: [q, upper],
    }
}

/// Every canonical format with `order` modes and dims in `[2, max_dim]`.
pub fn enumerate_canonical(order: usize, max_dim: usize) -> Vec<CanonicalFormat> {
    fn rec(order: usize, lo: usize, hi: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == order {
            out.push(cur.clone());
            return;
        }
        for d in lo..=hi {
            cur.push(d);
            rec(order, d, hi, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(order, 2, max_dim, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|d| CanonicalFormat::new(d).expect("enumerated dims are canonical"))
        .collect()
}
