//! Exact rank and null space of integer matrices.
//!
//! [`rank_exact`] first reduces modulo a fixed list of large primes: the rank
//! modulo any prime is at most the rational rank, so reaching
//! `min(rows, cols)` there settles the question. Otherwise the rank comes from
//! fraction-free (Bareiss) elimination, which keeps every intermediate value
//! an integer minor of the input.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub type IntMatrix = Matrix<BigInt>;

/// The three largest primes below 2^64.
pub const PRESCREEN_PRIMES: [u64; 3] = [
    18_446_744_073_709_551_557,
    18_446_744_073_709_551_533,
    18_446_744_073_709_551_521,
];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn reduce(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p))
        .to_u64()
        .expect("residue fits in u64")
}

/// Rank of `m` over GF(`prime`).
pub fn rank_mod_p(m: &IntMatrix, prime: u64) -> Result<usize> {
    if !is_prime(prime) {
        return Err(Error::NotPrime(prime));
    }
    let (rows, cols) = m.shape();
    let mut a: Vec<u64> = m.as_slice().iter().map(|x| reduce(x, prime)).collect();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&i| a[i * cols + c] != 0) else {
            continue;
        };
        if piv != rank {
            for k in 0..cols {
                a.swap(piv * cols + k, rank * cols + k);
            }
        }
        let inv = pow_mod(a[rank * cols + c], prime - 2, prime);
        for k in c..cols {
            a[rank * cols + k] = mul_mod(a[rank * cols + k], inv, prime);
        }
        for i in rank + 1..rows {
            let factor = a[i * cols + c];
            if factor == 0 {
                continue;
            }
            for k in c..cols {
                let sub = mul_mod(factor, a[rank * cols + k], prime);
                let cur = a[i * cols + k];
                a[i * cols + k] = if cur >= sub {
                    cur - sub
                } else {
                    cur + (prime - sub)
                };
            }
        }
        rank += 1;
    }
    Ok(rank)
}

/// Fraction-free row echelon form.
#[derive(Debug, Clone)]
pub struct Echelon {
    /// The reduced matrix; rows `0..rank` are the pivot rows.
    pub matrix: IntMatrix,
    /// Pivot column of each pivot row.
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Bareiss elimination. Pivot: the first row with the largest absolute
/// value in the current column.
pub fn bareiss_echelon(m: &IntMatrix) -> Echelon {
    let (rows, cols) = m.shape();
    let mut a: Vec<Vec<BigInt>> = m.to_rows();
    let mut prev = BigInt::one();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut best: Option<usize> = None;
        for i in r..rows {
            if a[i][c].is_zero() {
                continue;
            }
            if best.is_none_or(|b| a[i][c].abs() > a[b][c].abs()) {
                best = Some(i);
            }
        }
        let Some(piv) = best else { continue };
        a.swap(r, piv);
        let (top, bottom) = a.split_at_mut(r + 1);
        let pivot_row = &top[r];
        let pv = &pivot_row[c];
        for row in bottom.iter_mut() {
            let lead = std::mem::take(&mut row[c]);
            if lead.is_zero() {
                for x in row.iter_mut().skip(c + 1) {
                    if !x.is_zero() {
                        *x = &*x * pv;
                        *x = exact_div(x, &prev);
                    }
                }
                continue;
            }
            for (x, y) in row.iter_mut().zip(pivot_row.iter()).skip(c + 1) {
                let v = &*x * pv - &lead * y;
                *x = exact_div(&v, &prev);
            }
        }
        prev = pivot_row[c].clone();
        pivots.push(c);
        r += 1;
    }
    let matrix = Matrix::from_rows(cols, a).expect("shape preserved");
    Echelon { matrix, pivots }
}

fn exact_div(x: &BigInt, d: &BigInt) -> BigInt {
    if d.is_one() {
        return x.clone();
    }
    let (q, rem) = x.div_rem(d);
    debug_assert!(rem.is_zero(), "Bareiss division must be exact");
    q
}

/// How [`rank_exact`] settled the rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum RankMethod {
    /// Full rank reached modulo `prime`.
    Prescreen {
        prime: u64,
    },
    Bareiss,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankOutcome {
    pub rank: usize,
    #[serde(flatten)]
    pub method: RankMethod,
    /// Best rank seen modulo the prescreen primes.
    pub modular_rank: usize,
}

/// Rank over the rationals.
pub fn rank_exact(m: &IntMatrix) -> usize {
    rank_exact_detailed(m).rank
}

pub fn rank_exact_detailed(m: &IntMatrix) -> RankOutcome {
    let full = m.rows().min(m.cols());
    let mut modular_rank = 0;
    for &p in &PRESCREEN_PRIMES {
        let r = rank_mod_p(m, p).expect("prescreen primes are prime");
        modular_rank = modular_rank.max(r);
        if r == full {
            return RankOutcome {
                rank: full,
                method: RankMethod::Prescreen { prime: p },
                modular_rank,
            };
        }
    }
    let rank = bareiss_echelon(m).rank();
    debug_assert!(rank >= modular_rank);
    RankOutcome {
        rank,
        method: RankMethod::Bareiss,
        modular_rank,
    }
}

/// Rank of a rational matrix (rows scaled to integers first).
pub fn rank_rational(m: &Matrix<BigRational>) -> usize {
    rank_exact(&m.clear_denominators())
}

/// Basis of the right null space over the rationals, one vector per free
/// column; empty iff the rank equals the column count.
pub fn kernel_basis(m: &IntMatrix) -> Vec<Vec<BigRational>> {
    let cols = m.cols();
    if m.rows() >= cols && rank_exact(m) == cols {
        return Vec::new();
    }
    let ech = bareiss_echelon(m);
    let rank = ech.rank();
    let mut is_pivot = vec![false; cols];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }
    let u = &ech.matrix;
    (0..cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut x = vec![BigRational::zero(); cols];
            x[free] = BigRational::one();
            for i in (0..rank).rev() {
                let pc = ech.pivots[i];
                let mut acc = BigRational::zero();
                for (k, xk) in x.iter().enumerate().skip(pc + 1) {
                    if !xk.is_zero() && !u.get(i, k).is_zero() {
                        acc += BigRational::from_integer(u.get(i, k).clone()) * xk;
                    }
                }
                x[pc] = -acc / BigRational::from_integer(u.get(i, pc).clone());
            }
            x
        })
        .collect()
}

/// `m * x` for a rational vector.
pub fn apply(m: &IntMatrix, x: &[BigRational]) -> Vec<BigRational> {
    m.row_iter()
        .map(|row| {
            row.iter().zip(x).fold(BigRational::zero(), |acc, (a, b)| {
                if a.is_zero() || b.is_zero() {
                    acc
                } else {
                    acc + BigRational::from_integer(a.clone()) * b
                }
            })
        })
        .collect()
}
