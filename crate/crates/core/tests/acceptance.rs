//! End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use tenperf::certify::{
    certify_grid, certify_perfect, lemma_codim1_oracle, lemma_expand_oracle, Verdict,
};
use tenperf::exactrank::{kernel_basis, rank_exact, IntMatrix};
use tenperf::formats::{perfect_threshold_q, typical_rank_bounds, CanonicalFormat};
use tenperf::jacobian::{assemble_jacobian, fd_check, phi1_jacobian_block};
use tenperf::probe::{generic_rank_probe, random_point, typical_rank_sample, AlsOptions};
use tenperf::seed::task_rng;
use tenperf::tensor::{
    eval_phi, flattening_rank_bound, rank_one, trivial_decomposition, DenseTensor,
};
use tenperf::witness::{all_tuples, build_witness_with, CoefficientRule, IndexTuple};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn canon(d: &[usize]) -> CanonicalFormat {
    CanonicalFormat::new(d.to_vec()).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_s), || {
        format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

/// Every matrix handed to `rank_exact` here also goes through this check.
fn rank_nullity(m: &IntMatrix) -> Result<usize, String> {
    let rank = rank_exact(m);
    let nullity = kernel_basis(m).len();
    ensure(rank + nullity == m.cols(), || {
        format!("rank {rank} + nullity {nullity} != {} cols", m.cols())
    })?;
    Ok(rank)
}

/// Canonical `(p1, p2, p3)` with `2 <= p1 <= p2 <= 4`, p3 from `p2` to
/// `p1 p2 + 3`.
fn order3_grid() -> Vec<CanonicalFormat> {
    let mut out = Vec::new();
    for p1 in 2..=4 {
        for p2 in p1..=4 {
            for p3 in p2..=p1 * p2 + 3 {
                out.push(canon(&[p1, p2, p3]));
            }
        }
    }
    out
}

fn in_interval(f: &CanonicalFormat) -> bool {
    let q = perfect_threshold_q(f);
    let p = f.largest() as u64;
    q <= p && p <= f.product_rest()
}

fn criterion_1() -> Check {
    let grid: Vec<_> = order3_grid().into_iter().filter(in_interval).collect();
    let start = Instant::now();
    let certs = certify_grid(&grid);
    let elapsed = start.elapsed();
    let mut notes = Vec::new();
    for (f, c) in grid.iter().zip(&certs) {
        ensure(c.verdict == Verdict::PerfectCertified, || {
            format!("{f}: {} with attempts {:?}", c.verdict.as_str(), c.attempts)
        })?;
        ensure(c.jacobian.rank == Some(f.num_entries() as usize), || {
            format!("{f}: rank {:?}", c.jacobian.rank)
        })?;
        if c.attempts.len() > 1 {
            notes.push(format!("{f} standard-rule rank {}", c.attempts[0].rank));
        }
    }
    let again = certify_grid(&grid);
    ensure(
        certs.iter().zip(&again).all(|(a, b)| a.digest == b.digest),
        || "digests differ between runs".into(),
    )?;
    within(elapsed, 60)?;
    Ok(format!(
        "{} formats certified in {:.2}s; standard rule short of full rank on {}: {}",
        grid.len(),
        elapsed.as_secs_f64(),
        notes.len(),
        notes.join(", ")
    ))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut ranks = Vec::new();
    for r in 5..=8 {
        let f = canon(&[2, 2, 2, r]);
        let c = certify_perfect(&f);
        ensure(
            c.verdict == Verdict::PerfectCertified && c.jacobian.rank == Some(8 * r),
            || format!("{f}: {} rank {:?}", c.verdict.as_str(), c.jacobian.rank),
        )?;
        ranks.push(format!("{f}:{}", 8 * r));
    }
    within(start.elapsed(), 30)?;
    Ok(format!(
        "{} in {:.2}s",
        ranks.join(" "),
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_3() -> Check {
    let c = certify_perfect(&canon(&[3, 3, 5]));
    let json = c.to_json();
    ensure(json.contains("\"verdict\""), || {
        "certificate not emitted".into()
    })?;
    let attempts: Vec<String> = c
        .attempts
        .iter()
        .map(|a| format!("{:?}={}", a.witness, a.rank))
        .collect();
    Ok(format!(
        "(3,3,5) q={} verdict {} rank {:?}/{}; attempts {}",
        c.q,
        c.verdict.as_str(),
        c.jacobian.rank,
        c.jacobian.cols,
        attempts.join(", ")
    ))
}

fn criterion_4() -> Check {
    let mut grid = order3_grid();
    grid.extend((2..=11).map(|r| canon(&[2, 2, 2, r])));
    let certs = certify_grid(&grid);
    let mut not_applicable = 0;
    for (f, c) in grid.iter().zip(&certs) {
        let q = perfect_threshold_q(f);
        let p = f.largest() as u64;
        let outside = p < q || p > f.product_rest();
        ensure((c.verdict == Verdict::NotApplicable) == outside, || {
            format!(
                "{f}: verdict {} but outside = {outside}",
                c.verdict.as_str()
            )
        })?;
        not_applicable += outside as usize;
    }
    Ok(format!(
        "{} formats, {not_applicable} NOT_APPLICABLE, all matching",
        grid.len()
    ))
}

fn criterion_5() -> Check {
    for (d, lo, hi) in [([3, 3, 3], 4, 9), ([2, 2, 2], 2, 4), ([2, 3, 5], 5, 6)] {
        let b = typical_rank_bounds(&canon(&d));
        ensure((b.lower, b.upper) == (lo, hi), || {
            format!("{d:?}: got [{}, {}], want [{lo}, {hi}]", b.lower, b.upper)
        })?;
    }
    Ok("3x3x3=[4,9] 2x2x2=[2,4] 2x3x5=[5,6]".into())
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let mut out = Vec::new();
    for (d, want) in [([2, 2, 2], 2), ([2, 2, 3], 3), ([3, 3, 3], 5)] {
        let f = canon(&d);
        let upper = typical_rank_bounds(&f).upper as usize;
        let rep = generic_rank_probe(&f, upper, 3, 42).map_err(|e| e.to_string())?;
        ensure(rep.estimated_generic_rank == Some(want), || {
            format!(
                "{f}: estimated {:?}, want {want}",
                rep.estimated_generic_rank
            )
        })?;
        out.push(format!("{f}->{want}"));
    }
    let rep = generic_rank_probe(&canon(&[3, 3, 3]), 4, 3, 42).map_err(|e| e.to_string())?;
    let r4 = &rep.records[0];
    ensure(r4.r == 4 && r4.rank == 26 && r4.cols == 27, || {
        format!("(3,3,3) r=4 record {r4:?}")
    })?;
    within(start.elapsed(), 30)?;
    Ok(format!("{}; (3,3,3) r=4 rank 26/27", out.join(" ")))
}

fn small_order3() -> Vec<CanonicalFormat> {
    [[2, 2, 2], [2, 2, 3], [2, 3, 3], [3, 3, 3]]
        .iter()
        .map(|d| canon(d))
        .collect()
}

fn criterion_7() -> Check {
    let mut worst = 0.0f64;
    for f in small_order3() {
        let r = typical_rank_bounds(&f).lower as usize;
        for trial in 0..20 {
            let mut rng = task_rng(7, &[f.num_entries(), trial]);
            let point = random_point(f.dims(), r, &mut rng).map(|&x| x as f64);
            let err = fd_check(&point, f.dims(), 1e-3).map_err(|e| e.to_string())?;
            ensure(err < 1e-6, || {
                format!("{f} trial {trial}: relative error {err:e}")
            })?;
            worst = worst.max(err);
        }
    }
    Ok(format!("80 points, worst relative error {worst:.1e}"))
}

fn criterion_8() -> Check {
    let mut formats = small_order3();
    formats.extend([[2, 3, 4], [3, 4, 4], [4, 4, 4]].iter().map(|d| canon(d)));
    formats.extend([[2, 2, 2, 2], [2, 2, 3, 5]].iter().map(|d| canon(d)));
    for f in &formats {
        let want = f.dims().iter().sum::<usize>() - f.order() + 1;
        for trial in 0..20 {
            let mut rng = task_rng(8, &[f.num_entries(), trial]);
            let point = random_point(f.dims(), 1, &mut rng);
            let block = phi1_jacobian_block(&point.terms[0]).map(|&x| BigInt::from(x));
            let rank = rank_nullity(&block)?;
            ensure(rank == want, || {
                format!("{f} trial {trial}: rank {rank}, want {want}")
            })?;
        }
    }
    Ok(format!("{} formats x 20 points", formats.len()))
}

fn lemma_dims() -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for n in 2..=3 {
        let base = vec![4; n];
        for t in all_tuples(&base) {
            if t.coords().iter().all(|&x| x >= 2) {
                out.push(t.coords().to_vec());
            }
        }
    }
    out
}

fn criterion_9() -> Check {
    let dims_list = lemma_dims();
    for dims in &dims_list {
        ensure(lemma_codim1_oracle(dims), || {
            format!("codim-one identity fails for {dims:?}")
        })?;
    }
    let mut rng = task_rng(42, &[]);
    let mut cases = 0;
    for dims in &dims_list {
        let ones = vec![1i64; dims.len()];
        for _ in 0..50 {
            let k: Vec<usize> = dims.iter().map(|&p| rng.gen_range(1..p)).collect();
            let u: Vec<i64> = dims.iter().map(|_| rng.gen_range(-9..=9)).collect();
            let ok = lemma_expand_oracle(dims, &IndexTuple(k.clone()), &u, &ones)
                .map_err(|e| e.to_string())?;
            ensure(ok, || {
                format!("expansion fails for {dims:?}, k {k:?}, u {u:?}")
            })?;
            cases += 1;
        }
    }
    Ok(format!(
        "codim-one on {} dims, expansion on {cases} cases",
        dims_list.len()
    ))
}

fn criterion_10() -> Check {
    let mut formats = small_order3();
    formats.push(canon(&[2, 2, 2, 2]));
    for f in &formats {
        let n = f.num_entries() as usize;
        for trial in 0..100 {
            let mut rng = task_rng(10, &[n as u64, trial]);
            let values: Vec<i64> = (0..n).map(|_| rng.gen_range(-20..=20)).collect();
            let t = DenseTensor::new(f.dims().to_vec(), values).unwrap();
            let back = eval_phi(&trivial_decomposition(&t), f.dims()).map_err(|e| e.to_string())?;
            ensure(back == t, || {
                format!("{f} trial {trial}: round trip differs")
            })?;
        }
        for trial in 0..10 {
            let mut rng = task_rng(11, &[n as u64, trial]);
            let point = random_point(f.dims(), 1, &mut rng);
            let vecs: Vec<Vec<BigRational>> = point.terms[0]
                .iter()
                .map(|v| {
                    v.iter()
                        .map(|&x| BigRational::from_integer(x.into()))
                        .collect()
                })
                .collect();
            let t = rank_one(&vecs).map_err(|e| e.to_string())?;
            let b = flattening_rank_bound(&t);
            ensure(b == 1, || {
                format!("{f}: flattening bound {b} on a rank-one tensor")
            })?;
        }
    }
    Ok(format!(
        "{} formats, 100 round trips and 10 rank-one tensors each",
        formats.len()
    ))
}

fn criterion_11() -> Check {
    let opts = AlsOptions::default();
    let start = Instant::now();
    let a = typical_rank_sample(&canon(&[2, 2, 3]), 3, 100, 5, &opts, 1e-6, 42)
        .map_err(|e| e.to_string())?;
    let ta = start.elapsed();
    let start = Instant::now();
    let b = typical_rank_sample(&canon(&[2, 2, 2]), 2, 200, 5, &opts, 1e-6, 42)
        .map_err(|e| e.to_string())?;
    let tb = start.elapsed();
    ensure(a.monotone && b.monotone, || {
        "an ALS objective increased".into()
    })?;
    ensure(a.success_fraction >= 0.95, || {
        format!("(2,2,3) r=3 success {:.3} < 0.95", a.success_fraction)
    })?;
    ensure(
        b.success_fraction > 0.05 && b.success_fraction < 0.95,
        || {
            format!(
                "(2,2,2) r=2 success {:.3} outside (0.05, 0.95)",
                b.success_fraction
            )
        },
    )?;
    within(ta, 120)?;
    within(tb, 120)?;
    Ok(format!(
        "(2,2,3) r=3: {:.3} in {:.1}s; (2,2,2) r=2: {:.3} in {:.1}s",
        a.success_fraction,
        ta.as_secs_f64(),
        b.success_fraction,
        tb.as_secs_f64()
    ))
}

fn svd_rank(m: &IntMatrix) -> usize {
    let f = m.to_f64();
    let d = DMatrix::from_row_slice(f.rows(), f.cols(), f.as_slice());
    let sv = d.singular_values();
    let top = sv.iter().copied().fold(0.0f64, f64::max);
    sv.iter().filter(|&&s| s > 1e-8 * top).count()
}

fn criterion_12() -> Check {
    let mut ranks = Vec::new();
    for trial in 0..100u64 {
        let mut rng = task_rng(12, &[trial]);
        let k = rng.gen_range(1..=30);
        let a: Vec<i64> = (0..30 * k).map(|_| rng.gen_range(-5..=5)).collect();
        let b: Vec<i64> = (0..k * 40).map(|_| rng.gen_range(-5..=5)).collect();
        let prod: Vec<i64> = (0..30 * 40)
            .map(|ij| {
                let (i, j) = (ij / 40, ij % 40);
                (0..k).map(|l| a[i * k + l] * b[l * 40 + j]).sum()
            })
            .collect();
        let m = IntMatrix::from_i64(30, 40, &prod).unwrap();
        let exact = rank_nullity(&m)?;
        let float = svd_rank(&m);
        ensure(exact == float, || {
            format!("trial {trial}: exact {exact}, singular values {float}")
        })?;
        ranks.push(exact);
    }
    // Rank-deficient Jacobians from the standard witness on the certified grid.
    let mut deficient = 0;
    for f in order3_grid().into_iter().filter(in_interval) {
        let w = build_witness_with(&f, CoefficientRule::Standard).map_err(|e| e.to_string())?;
        let jac = assemble_jacobian(&w.terms().map(|&x| BigInt::from(x)), f.dims())
            .map_err(|e| e.to_string())?;
        if rank_nullity(&jac)? < jac.cols() {
            deficient += 1;
        }
    }
    let (lo, hi) = (ranks.iter().min().unwrap(), ranks.iter().max().unwrap());
    Ok(format!(
        "100 matrices agree (ranks {lo}..={hi}); rank + nullity = cols also on {deficient} deficient Jacobians"
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("perfectness grid", criterion_1),
        ("order-4 certification", criterion_2),
        ("boundary probe (3,3,5)", criterion_3),
        ("converse", criterion_4),
        ("bounds", criterion_5),
        ("generic-rank probes", criterion_6),
        ("jacobian finite differences", criterion_7),
        ("single-block rank", criterion_8),
        ("lemma oracles", criterion_9),
        ("round trips", criterion_10),
        ("ALS calibration", criterion_11),
        ("exact-rank engine", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name} [{secs:.2}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name} [{secs:.2}s]: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
