//! Numerical probes for formats outside the closed-form interval.
//!
//! [`generic_rank_probe`] evaluates the Jacobian at random integer points
//! and computes its rank exactly; a full-column-rank hit at `r` terms proves
//! the generic rank is at most `r`, while a miss is only probabilistic
//! evidence. [`typical_rank_sample`] fits Gaussian tensors by alternating
//! least squares and reports how often rank `r` suffices.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactrank::rank_exact;
use crate::formats::{typical_rank_bounds, CanonicalFormat};
use crate::jacobian::assemble_jacobian;
use crate::seed::{derive_seed, task_rng};
use crate::tensor::{unravel, DenseTensor, RankOneTermList};

/// Entries of random probe points are drawn uniformly from
/// `[-RANDOM_ENTRY_BOUND, RANDOM_ENTRY_BOUND] \ {0}`.
pub const RANDOM_ENTRY_BOUND: i64 = 9;

/// `r` groups of nonzero random integer factor vectors.
pub fn random_point<R: Rng>(dims: &[usize], r: usize, rng: &mut R) -> RankOneTermList<i64> {
    let terms = (0..r)
        .map(|_| {
            dims.iter()
                .map(|&p| {
                    (0..p)
                        .map(|_| {
                            let m = rng.gen_range(1..=RANDOM_ENTRY_BOUND);
                            if rng.gen::<bool>() {
                                m
                            } else {
                                -m
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    RankOneTermList::new(terms)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub r: usize,
    /// Best exact Jacobian rank over the trials.
    pub rank: usize,
    pub full: bool,
    pub trials: usize,
    /// `min(r * (sum p - N + 1), prod p)`: the rank expected without
    /// defectivity.
    pub expected: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub format: Vec<usize>,
    pub lower: u64,
    pub upper: u64,
    pub records: Vec<ProbeRecord>,
    /// Smallest `r` whose Jacobian reached full column rank.
    pub estimated_generic_rank: Option<usize>,
    pub seed: u64,
}

/// Sweeps `r` from the lower rank bound up to `max_r`.
pub fn generic_rank_probe(
    f: &CanonicalFormat,
    max_r: usize,
    trials: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let bounds = typical_rank_bounds(f);
    if (max_r as u64) < bounds.lower {
        return Err(Error::MaxRankBelowBound {
            max_r,
            lower: bounds.lower,
        });
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let dims = f.dims();
    let cols = f.num_entries() as usize;
    let cone = (f.sum_dims() - f.order() as u64 + 1) as usize;
    let lower = bounds.lower as usize;
    let tasks: Vec<(usize, usize)> = (lower..=max_r)
        .flat_map(|r| (0..trials).map(move |t| (r, t)))
        .collect();
    let ranks: Vec<usize> = tasks
        .par_iter()
        .map(|&(r, t)| {
            let mut rng = task_rng(seed, &[r as u64, t as u64]);
            let point = random_point(dims, r, &mut rng).map(|&x| num_bigint::BigInt::from(x));
            rank_exact(&assemble_jacobian(&point, dims).expect("shape"))
        })
        .collect();
    let records: Vec<ProbeRecord> = (lower..=max_r)
        .zip(ranks.chunks(trials))
        .map(|(r, chunk)| {
            let rank = chunk.iter().copied().max().unwrap_or(0);
            ProbeRecord {
                r,
                rank,
                full: rank == cols,
                trials,
                expected: (r * cone).min(cols),
                cols,
            }
        })
        .collect();
    let estimated_generic_rank = records.iter().find(|rec| rec.full).map(|rec| rec.r);
    Ok(ProbeReport {
        format: dims.to_vec(),
        lower: bounds.lower,
        upper: bounds.upper,
        records,
        estimated_generic_rank,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlsOptions {
    pub max_iters: usize,
    /// Stop once a sweep lowers the objective by less than this fraction.
    pub tol: f64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        Self {
            max_iters: 3000,
            tol: 1e-12,
        }
    }
}

/// Relative slack allowed when checking that sweeps never increase the
/// objective; covers roundoff and the ridge term.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Ridge added to a singular Gram matrix.
pub const RIDGE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AlsFit {
    /// `||t - fit|| / ||t||`, or 0 for the zero tensor.
    pub residual: f64,
    pub factors: RankOneTermList<f64>,
    pub iterations: usize,
    /// Squared residual after each sweep, starting with the initial guess.
    pub history: Vec<f64>,
    pub monotone: bool,
}

fn frob2(values: &[f64]) -> f64 {
    values.iter().map(|x| x * x).sum()
}

/// Squared residual `||t - sum_c a_1c ⊗ ... ⊗ a_Nc||^2`.
fn objective(t: &DenseTensor<f64>, factors: &[DMatrix<f64>]) -> f64 {
    let dims = t.dims();
    let r = factors[0].ncols();
    t.values()
        .iter()
        .enumerate()
        .map(|(off, &x)| {
            let idx = unravel(off, dims);
            let fit: f64 = (0..r)
                .map(|c| {
                    idx.iter()
                        .enumerate()
                        .map(|(j, &k)| factors[j][(k, c)])
                        .product::<f64>()
                })
                .sum();
            (x - fit) * (x - fit)
        })
        .sum()
}

fn mttkrp(t: &DenseTensor<f64>, factors: &[DMatrix<f64>], mode: usize) -> DMatrix<f64> {
    let dims = t.dims();
    let r = factors[0].ncols();
    let mut m = DMatrix::zeros(dims[mode], r);
    for (off, &x) in t.values().iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let idx = unravel(off, dims);
        for c in 0..r {
            let w: f64 = idx
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != mode)
                .map(|(j, &k)| factors[j][(k, c)])
                .product();
            m[(idx[mode], c)] += x * w;
        }
    }
    m
}

/// Solves `A V = M` for symmetric positive semidefinite `V`.
fn solve_gram(m: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    if let Some(ch) = v.clone().cholesky() {
        return ch.solve(&mt).transpose();
    }
    let r = v.nrows();
    let scale = (v.trace() / r as f64).max(1.0);
    let ridged = v + DMatrix::identity(r, r) * (RIDGE * scale);
    match ridged.clone().cholesky() {
        Some(ch) => ch.solve(&mt).transpose(),
        None => {
            let pinv = ridged
                .pseudo_inverse(1e-14)
                .expect("pseudo-inverse of a finite matrix");
            m * pinv
        }
    }
}

/// Equalizes column norms across modes without changing the fitted tensor.
fn rebalance(factors: &mut [DMatrix<f64>]) {
    let n = factors.len() as f64;
    for c in 0..factors[0].ncols() {
        let norms: Vec<f64> = factors.iter().map(|a| a.column(c).norm()).collect();
        if norms.iter().any(|&x| x == 0.0 || !x.is_finite()) {
            continue;
        }
        let target = norms.iter().map(|x| x.ln()).sum::<f64>() / n;
        let target = target.exp();
        for (a, nrm) in factors.iter_mut().zip(&norms) {
            a.column_mut(c).scale_mut(target / nrm);
        }
    }
}

/// Alternating least squares fit of `t` by `r` rank-one terms.
pub fn als_fit(t: &DenseTensor<f64>, r: usize, opts: &AlsOptions, seed: u64) -> Result<AlsFit> {
    if r == 0 {
        return Err(Error::InvalidArgument("ALS rank must be at least 1".into()));
    }
    let dims = t.dims().to_vec();
    let norm2 = frob2(t.values());
    let mut rng = task_rng(seed, &[]);
    let mut factors: Vec<DMatrix<f64>> = dims
        .iter()
        .map(|&p| DMatrix::from_fn(p, r, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect();
    if norm2 == 0.0 {
        let factors = factors
            .iter()
            .map(|a| DMatrix::zeros(a.nrows(), r))
            .collect::<Vec<_>>();
        return Ok(AlsFit {
            residual: 0.0,
            factors: to_terms(&factors),
            iterations: 0,
            history: vec![0.0],
            monotone: true,
        });
    }

    let mut obj = objective(t, &factors);
    let mut history = vec![obj];
    let mut monotone = true;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        for mode in 0..dims.len() {
            let mut gram = DMatrix::from_element(r, r, 1.0);
            for (l, a) in factors.iter().enumerate() {
                if l != mode {
                    gram.component_mul_assign(&(a.transpose() * a));
                }
            }
            let m = mttkrp(t, &factors, mode);
            factors[mode] = solve_gram(&m, &gram);
        }
        rebalance(&mut factors);
        iterations += 1;
        let next = objective(t, &factors);
        if next > obj * (1.0 + MONOTONE_SLACK) + norm2 * 1e-15 {
            monotone = false;
        }
        history.push(next);
        let decrease = (obj - next) / obj;
        obj = next;
        if obj <= norm2 * f64::EPSILON * f64::EPSILON || decrease < opts.tol {
            break;
        }
    }
    Ok(AlsFit {
        residual: (obj / norm2).sqrt(),
        factors: to_terms(&factors),
        iterations,
        history,
        monotone,
    })
}

fn to_terms(factors: &[DMatrix<f64>]) -> RankOneTermList<f64> {
    let r = factors[0].ncols();
    RankOneTermList::new(
        (0..r)
            .map(|c| {
                factors
                    .iter()
                    .map(|a| a.column(c).iter().copied().collect())
                    .collect()
            })
            .collect(),
    )
}

/// Tensor with independent standard Gaussian entries.
pub fn gaussian_tensor<R: Rng>(dims: &[usize], rng: &mut R) -> DenseTensor<f64> {
    let n = dims.iter().product();
    let values = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    DenseTensor::new(dims.to_vec(), values).expect("sized to dims")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlsReport {
    pub format: Vec<usize>,
    pub r: usize,
    pub samples: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Best relative residual over the restarts, per sample.
    pub residuals: Vec<f64>,
    pub successes: usize,
    pub success_fraction: f64,
    /// Every run kept the objective nonincreasing.
    pub monotone: bool,
    pub seed: u64,
}

/// Estimates the probability that a Gaussian tensor has rank at most `r`.
///
/// A sample counts as a success when the best residual over `restarts` ALS
/// runs is below `tol`.
pub fn typical_rank_sample(
    f: &CanonicalFormat,
    r: usize,
    samples: usize,
    restarts: usize,
    opts: &AlsOptions,
    tol: f64,
    seed: u64,
) -> Result<AlsReport> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let dims = f.dims();
    let outcomes: Vec<(f64, bool)> = (0..samples)
        .into_par_iter()
        .map(|s| -> Result<(f64, bool)> {
            let t = gaussian_tensor(dims, &mut task_rng(seed, &[0, s as u64]));
            let mut best = f64::INFINITY;
            let mut monotone = true;
            for k in 0..restarts {
                let fit = als_fit(&t, r, opts, derive_seed(seed, &[1, s as u64, k as u64]))?;
                monotone &= fit.monotone;
                best = best.min(fit.residual);
                if best < tol {
                    break;
                }
            }
            Ok((best, monotone))
        })
        .collect::<Result<_>>()?;
    let residuals: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let successes = residuals.iter().filter(|&&x| x < tol).count();
    Ok(AlsReport {
        format: dims.to_vec(),
        r,
        samples,
        restarts,
        max_iters: opts.max_iters,
        tol,
        success_fraction: if samples == 0 {
            0.0
        } else {
            successes as f64 / samples as f64
        },
        residuals,
        successes,
        monotone: outcomes.iter().all(|o| o.1),
        seed,
    })
}

/// `sample,residual` CSV of an ALS report.
pub fn write_residuals_csv<W: Write>(report: &AlsReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "sample,residual")?;
    for (i, r) in report.residuals.iter().enumerate() {
        writeln!(out, "{i},{r:e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::rank_one;

    fn canon(d: &[usize]) -> CanonicalFormat {
        CanonicalFormat::new(d.to_vec()).unwrap()
    }

    #[test]
    fn random_points_are_nonzero_and_bounded() {
        let mut rng = task_rng(7, &[]);
        let p = random_point(&[2, 3, 4], 5, &mut rng);
        p.check_shape(&[2, 3, 4]).unwrap();
        for x in p.terms.iter().flatten().flatten() {
            assert!(*x != 0 && x.abs() <= RANDOM_ENTRY_BOUND);
        }
    }

    #[test]
    fn probe_222() {
        let rep = generic_rank_probe(&canon(&[2, 2, 2]), 3, 3, 42).unwrap();
        assert_eq!(rep.estimated_generic_rank, Some(2));
        assert_eq!(rep.records[0].r, 2);
        assert_eq!(rep.records[0].rank, 8);
    }

    #[test]
    fn probe_rejects_small_max_r() {
        assert!(matches!(
            generic_rank_probe(&canon(&[3, 3, 3]), 3, 1, 0),
            Err(Error::MaxRankBelowBound { max_r: 3, lower: 4 })
        ));
    }

    #[test]
    fn als_recovers_rank_one() {
        let mut rng = task_rng(3, &[]);
        let vecs: Vec<Vec<f64>> = [2usize, 3, 2]
            .iter()
            .map(|&p| {
                let v: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / n).collect()
            })
            .collect();
        let t = rank_one(&vecs).unwrap();
        let fit = als_fit(&t, 1, &AlsOptions::default(), 11).unwrap();
        assert!(fit.residual < 1e-8, "{}", fit.residual);
        assert!(fit.monotone);
    }

    #[test]
    fn als_zero_tensor() {
        let t = DenseTensor::<f64>::zeros(vec![2, 2, 2]);
        let fit = als_fit(&t, 2, &AlsOptions::default(), 0).unwrap();
        assert_eq!(fit.residual, 0.0);
        assert!(als_fit(&t, 0, &AlsOptions::default(), 0).is_err());
    }

    #[test]
    fn als_history_nonincreasing() {
        let t = gaussian_tensor(&[2, 2, 2], &mut task_rng(5, &[]));
        let fit = als_fit(
            &t,
            2,
            &AlsOptions {
                max_iters: 200,
                tol: 0.0,
            },
            9,
        )
        .unwrap();
        for w in fit.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + MONOTONE_SLACK) + 1e-15, "{w:?}");
        }
        assert!(fit.monotone);
    }

    #[test]
    fn csv_has_one_line_per_sample() {
        let rep = typical_rank_sample(&canon(&[2, 2, 2]), 4, 3, 1, &AlsOptions::default(), 1e-6, 1)
            .unwrap();
        let mut buf = Vec::new();
        write_residuals_csv(&rep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("sample,residual\n"));
    }
}
