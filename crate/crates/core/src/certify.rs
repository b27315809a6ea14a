//! Certification of perfect formats by exact Jacobian rank.
//!
//! For a format inside the closed-form interval, [`certify_perfect`] builds
//! an integer witness point with `p_N` terms, assembles the Jacobian of the
//! summed rank-one map there and computes its rank exactly. Rank equal to
//! the number of tensor entries means the image of the rank-`p_N` map has
//! nonempty interior, so `p_N` is a typical rank (and, being the flattening
//! lower bound, the smallest one).
//!
//! Witnesses are tried in a fixed order and every attempt is recorded: the
//! standard coefficient rule, the separating rule, then a few seeded random
//! integer points. Any full-rank attempt is a complete certificate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exactrank::{kernel_basis, rank_exact, IntMatrix, PRESCREEN_PRIMES};
use crate::formats::{is_perfect, CanonicalFormat};
use crate::jacobian::assemble_jacobian;
use crate::probe::random_point;
use crate::seed::task_rng;
use crate::tensor::{kron_all, RankOneTermList};
use crate::witness::{
    all_tuples, build_s0, build_witness_with, extend_support, CoefficientRule, IndexTuple,
};
use crate::VERSION;

/// Number of seeded random points tried after the structured witnesses.
pub const RANDOM_FALLBACK_TRIALS: u64 = 3;
pub const RANDOM_FALLBACK_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    PerfectCertified,
    FullRankFailed,
    NotApplicable,
}

impl Verdict {
    /// CLI exit status for this verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::PerfectCertified => 0,
            Verdict::NotApplicable => 2,
            Verdict::FullRankFailed => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::PerfectCertified => "PERFECT_CERTIFIED",
            Verdict::FullRankFailed => "FULL_RANK_FAILED",
            Verdict::NotApplicable => "NOT_APPLICABLE",
        }
    }
}

/// Which point a Jacobian was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WitnessSource {
    Standard,
    Separating,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub witness: WitnessSource,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobianSummary {
    pub rows: usize,
    pub cols: usize,
    /// `None` when no witness was built.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub format: Vec<usize>,
    pub r: usize,
    pub q: u64,
    /// Support tuples; the position of a tuple is its term index.
    pub support: Vec<Vec<usize>>,
    pub jacobian: JacobianSummary,
    pub verdict: Verdict,
    /// SHA-256 of the reported Jacobian's canonical serialization.
    pub digest: Option<String>,
    pub primes: Vec<u64>,
    pub version: String,
    /// The point behind `jacobian` and `digest`.
    pub witness: Option<WitnessSource>,
    pub attempts: Vec<Attempt>,
}

impl Certificate {
    /// Pretty JSON with keys in declaration order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Hex SHA-256 of `rows,cols,` followed by the decimal entries joined by
/// commas, row-major.
pub fn matrix_digest(m: &IntMatrix) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{},{},", m.rows(), m.cols()).as_bytes());
    for (i, x) in m.as_slice().iter().enumerate() {
        if i > 0 {
            hasher.update(b",");
        }
        hasher.update(x.to_str_radix(10).as_bytes());
    }
    hex::encode(hasher.finalize())
}

fn int_jacobian(point: &RankOneTermList<i64>, dims: &[usize]) -> IntMatrix {
    assemble_jacobian(&point.map(|&x| BigInt::from(x)), dims).expect("witness shape matches format")
}

/// Decides and, where the closed form says yes, certifies perfectness.
pub fn certify_perfect(f: &CanonicalFormat) -> Certificate {
    let verdict = is_perfect(f);
    let dims = f.dims();
    let r = f.largest();
    let cols = f.num_entries() as usize;
    let rows = r * dims.iter().sum::<usize>();
    let mut cert = Certificate {
        format: dims.to_vec(),
        r,
        q: verdict.q,
        support: Vec::new(),
        jacobian: JacobianSummary {
            rows,
            cols,
            rank: None,
        },
        verdict: Verdict::NotApplicable,
        digest: None,
        primes: PRESCREEN_PRIMES.to_vec(),
        version: VERSION.to_string(),
        witness: None,
        attempts: Vec::new(),
    };
    if !verdict.perfect {
        return cert;
    }

    let support =
        extend_support(&build_s0(f.rest()), r, f.rest()).expect("r within [q, prod_rest]");
    cert.support = support.tuples.iter().map(|t| t.coords().to_vec()).collect();

    let structured = [CoefficientRule::Standard, CoefficientRule::Separating]
        .into_iter()
        .map(|rule| {
            let w = build_witness_with(f, rule).expect("format is perfect");
            let source = match rule {
                CoefficientRule::Standard => WitnessSource::Standard,
                CoefficientRule::Separating => WitnessSource::Separating,
            };
            (source, w.terms())
        });
    let random = (0..RANDOM_FALLBACK_TRIALS).map(|trial| {
        let seed = crate::seed::derive_seed(RANDOM_FALLBACK_SEED, &[trial]);
        let mut rng = task_rng(seed, &[]);
        (
            WitnessSource::Random { seed },
            random_point(dims, r, &mut rng),
        )
    });

    let mut best: Option<(WitnessSource, usize, IntMatrix)> = None;
    for (source, point) in structured.chain(random) {
        let jac = int_jacobian(&point, dims);
        let rank = rank_exact(&jac);
        cert.attempts.push(Attempt {
            witness: source,
            rank,
        });
        let improves = best.as_ref().is_none_or(|(_, b, _)| rank > *b);
        if improves {
            best = Some((source, rank, jac));
        }
        if rank == cols {
            break;
        }
    }
    let (source, rank, jac) = best.expect("at least one attempt");
    cert.witness = Some(source);
    cert.jacobian.rank = Some(rank);
    cert.digest = Some(matrix_digest(&jac));
    cert.verdict = if rank == cols {
        Verdict::PerfectCertified
    } else {
        Verdict::FullRankFailed
    };
    cert
}

/// Certifies many formats concurrently; results keep the input order.
pub fn certify_grid(formats: &[CanonicalFormat]) -> Vec<Certificate> {
    formats.par_iter().map(certify_perfect).collect()
}

fn basis_i(len: usize, k: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); len];
    v[k] = BigInt::one();
    v
}

/// `e_{k} + c e_{p}` with 1-based `k`.
fn shifted(p: usize, k: usize, c: &BigInt) -> Vec<BigInt> {
    let mut v = basis_i(p, k - 1);
    v[p - 1] += c;
    v
}

fn tuple_vector(dims: &[usize], t: &[usize]) -> Vec<BigInt> {
    let factors: Vec<Vec<BigInt>> = dims
        .iter()
        .zip(t)
        .map(|(&p, &k)| basis_i(p, k - 1))
        .collect();
    kron_all(factors.iter().map(Vec::as_slice))
}

fn dot(a: &[BigInt], x: &[BigRational]) -> BigRational {
    a.iter().zip(x).fold(BigRational::zero(), |acc, (a, b)| {
        if a.is_zero() || b.is_zero() {
            acc
        } else {
            acc + BigRational::from_integer(a.clone()) * b
        }
    })
}

/// Checks the codimension-one reduction identity for the given first-`n`
/// dims: every functional vanishing on `(e_{k_1}+e_{p_1}) ⊗ ... ⊗
/// (e_{k_n}+e_{p_n})` for all `k` in `S_0 \ {(p_1..p_n)}` also satisfies
/// `x(k) = (-1)^{n-1} (x(W_n) + (n-1) x(p_1..p_n))` at every interior `k`,
/// where `W_n` sums the tuples with exactly one coordinate replaced by `k_j`.
///
/// Membership is tested against a rational basis of the annihilator.
pub fn lemma_codim1_oracle(dims: &[usize]) -> bool {
    let n = dims.len();
    assert!(
        n >= 2 && dims.iter().all(|&p| p >= 2),
        "need n >= 2 and dims >= 2"
    );
    let top: Vec<usize> = dims.to_vec();
    let one = BigInt::one();
    let span: Vec<Vec<BigInt>> = build_s0(dims)
        .into_iter()
        .filter(|t| t.coords() != top.as_slice())
        .map(|t| {
            let factors: Vec<Vec<BigInt>> = dims
                .iter()
                .zip(t.coords())
                .map(|(&p, &k)| shifted(p, k, &one))
                .collect();
            kron_all(factors.iter().map(Vec::as_slice))
        })
        .collect();
    let cols: usize = dims.iter().product();
    let span = IntMatrix::from_rows(cols, span).expect("uniform rows");
    let annihilator = kernel_basis(&span);

    let sign = if (n - 1).is_multiple_of(2) {
        BigInt::one()
    } else {
        -BigInt::one()
    };
    let e_top = tuple_vector(dims, &top);
    all_tuples(dims)
        .filter(|t| t.count_maximal(dims) == 0)
        .all(|t| {
            let k = t.coords();
            let mut target = tuple_vector(dims, k);
            let mut w = vec![BigInt::zero(); cols];
            for j in 0..n {
                let mut s = top.clone();
                s[j] = k[j];
                for (acc, x) in w.iter_mut().zip(tuple_vector(dims, &s)) {
                    *acc += x;
                }
            }
            let scale = BigInt::from(n as i64 - 1);
            for ((tgt, wi), ei) in target.iter_mut().zip(&w).zip(&e_top) {
                *tgt -= &sign * (wi + &scale * ei);
            }
            annihilator.iter().all(|x| dot(&target, x).is_zero())
        })
}

/// Checks the expansion identity: for every functional `x` vanishing on
/// `(e_{i_1}+v_1 e_{p_1}) ⊗ ... ⊗ (e_{i_n}+v_n e_{p_n})` over all `i` other
/// than `(p_1..p_n)`, the value of `x` on `(e_{k_1}+u_1 e_{p_1}) ⊗ ... ⊗
/// (e_{k_n}+u_n e_{p_n})` equals `prod_j (u_j - 1) * x(p_1..p_n)`.
pub fn lemma_expand_oracle(dims: &[usize], k: &IndexTuple, u: &[i64], v: &[i64]) -> Result<bool> {
    let n = dims.len();
    if u.len() != n || v.len() != n || !k.is_valid_for(dims) {
        return Err(Error::Shape(format!(
            "dims {dims:?}, k {k}, u {u:?}, v {v:?} must share length and bounds"
        )));
    }
    let cols: usize = dims.iter().product();
    let v_big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
    let rows: Vec<Vec<BigInt>> = all_tuples(dims)
        .filter(|t| t.coords() != dims)
        .map(|t| {
            let factors: Vec<Vec<BigInt>> = dims
                .iter()
                .zip(t.coords())
                .zip(&v_big)
                .map(|((&p, &i), c)| shifted(p, i, c))
                .collect();
            kron_all(factors.iter().map(Vec::as_slice))
        })
        .collect();
    let span = IntMatrix::from_rows(cols, rows).expect("uniform rows");
    let functionals = kernel_basis(&span);

    let test_factors: Vec<Vec<BigInt>> = dims
        .iter()
        .zip(k.coords())
        .zip(u)
        .map(|((&p, &kk), &c)| shifted(p, kk, &BigInt::from(c)))
        .collect();
    let test = kron_all(test_factors.iter().map(Vec::as_slice));
    let coeff: BigInt = u.iter().map(|&x| BigInt::from(x - 1)).product();
    let coeff = BigRational::from_integer(coeff);
    Ok(functionals.iter().all(|x| {
        let lhs = dot(&test, x);
        let rhs = &coeff * &x[cols - 1];
        lhs == rhs
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::exactrank::apply;

    fn annihilates(m: &IntMatrix, xs: &[Vec<BigRational>]) -> bool {
        xs.iter().all(|x| apply(m, x).iter().all(Zero::is_zero))
    }

    fn canon(d: &[usize]) -> CanonicalFormat {
        CanonicalFormat::new(d.to_vec()).unwrap()
    }

    #[test]
    fn certify_223() {
        let c = certify_perfect(&canon(&[2, 2, 3]));
        assert_eq!(
            (c.jacobian.rows, c.jacobian.cols, c.jacobian.rank),
            (21, 12, Some(12))
        );
        assert_eq!(c.verdict, Verdict::PerfectCertified);
        assert_eq!(c.witness, Some(WitnessSource::Standard));
        assert_eq!(c.support, vec![vec![1, 1], vec![2, 2], vec![1, 2]]);
        assert_eq!(c.attempts.len(), 1);
    }

    #[test]
    fn certify_333_not_applicable() {
        let c = certify_perfect(&canon(&[3, 3, 3]));
        assert_eq!(c.verdict, Verdict::NotApplicable);
        assert_eq!(c.q, 5);
        assert!(c.attempts.is_empty());
        assert_eq!(c.digest, None);
    }

    #[test]
    fn certify_2225() {
        let c = certify_perfect(&canon(&[2, 2, 2, 5]));
        assert_eq!((c.jacobian.rows, c.jacobian.cols), (55, 40));
        assert_eq!(c.jacobian.rank, Some(40));
        assert_eq!(c.verdict, Verdict::PerfectCertified);
    }

    #[test]
    fn standard_rule_falls_short_where_coordinates_collide() {
        // 2x3x3: interior tuples (1,1), (1,2) share u_2 under the standard rule
        let c = certify_perfect(&canon(&[2, 3, 3]));
        assert_eq!(c.attempts[0].witness, WitnessSource::Standard);
        assert_eq!(c.attempts[0].rank, 16);
        assert_eq!(c.witness, Some(WitnessSource::Separating));
        assert_eq!(c.verdict, Verdict::PerfectCertified);
    }

    #[test]
    fn digest_format() {
        let m = IntMatrix::from_i64(1, 2, &[3, -4]).unwrap();
        let expect = hex::encode(Sha256::digest(b"1,2,3,-4"));
        assert_eq!(matrix_digest(&m), expect);
    }

    #[test]
    fn certificate_json_keys() {
        let c = certify_perfect(&canon(&[2, 2, 2]));
        let v = serde_json::to_value(&c).unwrap();
        for key in [
            "format", "r", "q", "support", "jacobian", "verdict", "digest", "primes", "version",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["verdict"], "PERFECT_CERTIFIED");
        assert_eq!(v["jacobian"]["rank"], 8);
        assert_eq!(v["witness"]["rule"], "standard");
        let back: Certificate = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn codim1_examples() {
        assert!(lemma_codim1_oracle(&[2, 2]));
        assert!(lemma_codim1_oracle(&[2, 2, 2]));
        assert!(lemma_codim1_oracle(&[3, 3]));
    }

    #[test]
    fn codim1_span_for_22_is_all_ones() {
        // S_0 \ {(2,2)} = {(1,1)}: a single span row (1,1,1,1), 3-dim annihilator
        let span = IntMatrix::from_i64(1, 4, &[1, 1, 1, 1]).unwrap();
        let k = kernel_basis(&span);
        assert_eq!(k.len(), 3);
        assert!(annihilates(&span, &k));
    }

    #[test]
    fn expand_examples() {
        let k = IndexTuple(vec![1, 1]);
        assert!(lemma_expand_oracle(&[2, 2], &k, &[1, 1], &[1, 1]).unwrap());
        assert!(lemma_expand_oracle(&[2, 2], &k, &[2, 1], &[1, 1]).unwrap());
        let dims = [2, 3];
        let t = IndexTuple(vec![1, 2]);
        let u: Vec<i64> = (1..=2)
            .map(|j| crate::witness::u_coeff(j, &t, &dims))
            .collect();
        assert!(lemma_expand_oracle(&dims, &t, &u, &[1, 1]).unwrap());
        assert!(lemma_expand_oracle(&dims, &t, &[1], &[1, 1]).is_err());
    }

    #[test]
    fn expand_identity_needs_unit_v() {
        // With v != 1 the coefficient becomes prod (u_j - v_j); the oracle
        // must notice that (u_j - 1) no longer matches.
        let k = IndexTuple(vec![1, 1]);
        assert!(!lemma_expand_oracle(&[2, 2], &k, &[3, 2], &[2, 1]).unwrap());
    }
}
