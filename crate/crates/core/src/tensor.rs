//! Dense tensors, rank-one terms and unfoldings.
//!
//! Linearization is row-major with the last index fastest: the offset of
//! `(k_1, ..., k_N)` (0-based) is `sum_j k_j * prod_{l > j} p_l`. The same
//! convention orders unfolding columns and Jacobian columns.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exactrank::rank_rational;
use crate::matrix::Matrix;

/// Ring operations needed by tensor and Jacobian assembly.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
{
}

impl<T> Scalar for T where
    T: Clone
        + Debug
        + PartialEq
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Send
        + Sync
{
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T> {
    dims: Vec<usize>,
    values: Vec<T>,
}

/// Row-major strides for `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        s[j] = s[j + 1] * dims[j + 1];
    }
    s
}

/// 0-based multi-index of a linear offset.
pub fn unravel(mut offset: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for j in (0..dims.len()).rev() {
        idx[j] = offset % dims[j];
        offset /= dims[j];
    }
    idx
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(dims: Vec<usize>, values: Vec<T>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.is_empty() || values.len() != n {
            return Err(Error::Shape(format!(
                "{} values for dims {dims:?} ({n} expected)",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self {
            dims,
            values: vec![T::zero(); n],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry at a 0-based multi-index.
    pub fn get(&self, idx: &[usize]) -> &T {
        let off: usize = idx
            .iter()
            .zip(strides(&self.dims))
            .map(|(k, s)| k * s)
            .sum();
        &self.values[off]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "adding {:?} to {:?}",
                other.dims, self.dims
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Ok(Self {
            dims: self.dims.clone(),
            values,
        })
    }

    pub fn map<U: Scalar, F: FnMut(&T) -> U>(&self, f: F) -> DenseTensor<U> {
        DenseTensor {
            dims: self.dims.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }
}

impl DenseTensor<i64> {
    pub fn to_rational(&self) -> DenseTensor<BigRational> {
        self.map(|&x| BigRational::from_integer(BigInt::from(x)))
    }

    pub fn to_f64(&self) -> DenseTensor<f64> {
        self.map(|&x| x as f64)
    }
}

impl DenseTensor<BigRational> {
    /// Lossy conversion to binary64.
    pub fn to_f64(&self) -> DenseTensor<f64> {
        self.map(|x| x.to_f64().unwrap_or(f64::NAN))
    }
}

/// Outer product `v_1 ⊗ ... ⊗ v_N`; the tensor has dims `(|v_1|, ..., |v_N|)`.
pub fn rank_one<T: Scalar>(vectors: &[Vec<T>]) -> Result<DenseTensor<T>> {
    if vectors.is_empty() || vectors.iter().any(Vec::is_empty) {
        return Err(Error::Shape(
            "rank-one term needs at least one nonempty factor".into(),
        ));
    }
    let dims = vectors.iter().map(Vec::len).collect();
    Ok(DenseTensor {
        dims,
        values: kron_all(vectors.iter().map(Vec::as_slice)),
    })
}

/// Kronecker product of vectors, first factor slowest.
pub(crate) fn kron_all<'a, T: Scalar + 'a>(factors: impl IntoIterator<Item = &'a [T]>) -> Vec<T> {
    let mut out = vec![T::one()];
    for v in factors {
        let mut next = Vec::with_capacity(out.len() * v.len());
        for a in &out {
            for b in v {
                next.push(a.clone() * b.clone());
            }
        }
        out = next;
    }
    out
}

/// A list of rank-one terms, each a group of `N` factor vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankOneTermList<T> {
    pub terms: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> RankOneTermList<T> {
    pub fn new(terms: Vec<Vec<Vec<T>>>) -> Self {
        Self { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Checks every group against `dims`.
    pub fn check_shape(&self, dims: &[usize]) -> Result<()> {
        for (h, group) in self.terms.iter().enumerate() {
            if group.len() != dims.len() {
                return Err(Error::Shape(format!(
                    "term {h} has {} factors, format has {} modes",
                    group.len(),
                    dims.len()
                )));
            }
            for (j, (v, &p)) in group.iter().zip(dims).enumerate() {
                if v.len() != p {
                    return Err(Error::Shape(format!(
                        "term {h}, mode {}: length {} != {p}",
                        j + 1,
                        v.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn map<U: Scalar, F: FnMut(&T) -> U>(&self, mut f: F) -> RankOneTermList<U> {
        RankOneTermList {
            terms: self
                .terms
                .iter()
                .map(|g| g.iter().map(|v| v.iter().map(&mut f).collect()).collect())
                .collect(),
        }
    }
}

/// Sum of the rank-one tensors of `point`; zero tensor for an empty list.
pub fn eval_phi<T: Scalar>(point: &RankOneTermList<T>, dims: &[usize]) -> Result<DenseTensor<T>> {
    point.check_shape(dims)?;
    let mut acc = DenseTensor::<T>::zeros(dims.to_vec());
    for group in &point.terms {
        let term = kron_all(group.iter().map(Vec::as_slice));
        for (a, b) in acc.values.iter_mut().zip(term) {
            *a = a.clone() + b;
        }
    }
    Ok(acc)
}

/// Mode-`mode` unfolding (1-based): row `k` holds every entry whose
/// `mode`-th index is `k`, the remaining indices in row-major order.
pub fn unfold<T: Scalar>(t: &DenseTensor<T>, mode: usize) -> Result<Matrix<T>> {
    let order = t.order();
    if mode == 0 || mode > order {
        return Err(Error::ModeOutOfRange { mode, order });
    }
    let j = mode - 1;
    let rows = t.dims[j];
    let cols = t.len() / rows;
    let mut m = Matrix::zeros(rows, cols);
    for (off, v) in t.values.iter().enumerate() {
        let (row, col) = unfold_position(off, &t.dims, j);
        m.set(row, col, v.clone());
    }
    Ok(m)
}

/// Inverse of [`unfold`].
pub fn refold<T: Scalar>(m: &Matrix<T>, dims: &[usize], mode: usize) -> Result<DenseTensor<T>> {
    let order = dims.len();
    if mode == 0 || mode > order {
        return Err(Error::ModeOutOfRange { mode, order });
    }
    let j = mode - 1;
    let n: usize = dims.iter().product();
    if m.rows() != dims[j] || m.rows() * m.cols() != n {
        return Err(Error::Shape(format!(
            "{:?} matrix cannot refold to {dims:?}",
            m.shape()
        )));
    }
    let values = (0..n)
        .map(|off| {
            let (row, col) = unfold_position(off, dims, j);
            m.get(row, col).clone()
        })
        .collect();
    DenseTensor::new(dims.to_vec(), values)
}

fn unfold_position(off: usize, dims: &[usize], j: usize) -> (usize, usize) {
    let idx = unravel(off, dims);
    let col = idx
        .iter()
        .zip(dims)
        .enumerate()
        .filter(|&(l, _)| l != j)
        .fold(0, |acc, (_, (&k, &p))| acc * p + k);
    (idx[j], col)
}

/// Largest exact rank over all unfoldings; a lower bound on tensor rank.
pub fn flattening_rank_bound(t: &DenseTensor<BigRational>) -> usize {
    (1..=t.order())
        .map(|mode| rank_rational(&unfold(t, mode).expect("mode in range")))
        .max()
        .unwrap_or(0)
}

/// Writes `t` as `prod_{i<N} p_i` rank-one terms
/// `e_{i_1} ⊗ ... ⊗ e_{i_{N-1}} ⊗ (last-mode fiber at i)`.
pub fn trivial_decomposition<T: Scalar>(t: &DenseTensor<T>) -> RankOneTermList<T> {
    let order = t.order();
    let (head, last) = t.dims.split_at(order - 1);
    let fiber_len = last[0];
    let count: usize = head.iter().product();
    let terms = (0..count)
        .map(|i| {
            let idx = unravel(i, head);
            let mut group: Vec<Vec<T>> = idx
                .iter()
                .zip(head)
                .map(|(&k, &p)| basis_vector(p, k))
                .collect();
            group.push(t.values[i * fiber_len..(i + 1) * fiber_len].to_vec());
            group
        })
        .collect();
    RankOneTermList { terms }
}

/// `e_k` of length `len`, 0-based `k`.
pub fn basis_vector<T: Scalar>(len: usize, k: usize) -> Vec<T> {
    let mut v = vec![T::zero(); len];
    v[k] = T::one();
    v
}

/// Scalars that have a JSON representation in tensor dumps.
pub trait DumpScalar: Scalar {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl DumpScalar for f64 {
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self).map_or(Value::Null, Value::Number)
    }

    fn from_json(v: &Value) -> Result<Self> {
        v.as_f64()
            .ok_or_else(|| Error::Dump(format!("expected a number, got {v}")))
    }
}

impl DumpScalar for BigRational {
    fn to_json(&self) -> Value {
        Value::String(format!("{}/{}", self.numer(), self.denom()))
    }

    fn from_json(v: &Value) -> Result<Self> {
        let s = v
            .as_str()
            .ok_or_else(|| Error::Dump(format!("expected \"num/den\", got {v}")))?;
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| Error::Dump(format!("missing '/' in {s:?}")))?;
        let parse = |x: &str| {
            x.parse::<BigInt>()
                .map_err(|e| Error::Dump(format!("{s:?}: {e}")))
        };
        let (n, d) = (parse(n)?, parse(d)?);
        if d.is_zero() {
            return Err(Error::Dump(format!("zero denominator in {s:?}")));
        }
        Ok(BigRational::new(n, d))
    }
}

/// On-disk tensor representation: `{"dims": [...], "values": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorDump {
    pub dims: Vec<usize>,
    pub values: Vec<Value>,
}

impl<T: DumpScalar> DenseTensor<T> {
    pub fn to_dump(&self) -> TensorDump {
        TensorDump {
            dims: self.dims.clone(),
            values: self.values.iter().map(T::to_json).collect(),
        }
    }

    pub fn from_dump(dump: &TensorDump) -> Result<Self> {
        let values = dump
            .values
            .iter()
            .map(T::from_json)
            .collect::<Result<Vec<_>>>()?;
        Self::new(dump.dims.clone(), values)
    }
}
