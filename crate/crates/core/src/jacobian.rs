//! Jacobian of the summed rank-one parameterization.
//!
//! For one term `(a_1, ..., a_N)` the block has one row per parameter: row
//! `(j, i)` is `a_1 ⊗ ... ⊗ e_i ⊗ ... ⊗ a_N` with `e_i` in slot `j`, i.e. the
//! sub-block for mode `j` is `a_1 ⊗ ... ⊗ E_{p_j} ⊗ ... ⊗ a_N`. Blocks are
//! stacked term by term. Columns follow the tensor linearization.

use rayon::prelude::*;

use crate::error::Result;
use crate::matrix::Matrix;
use crate::tensor::{basis_vector, eval_phi, kron_all, RankOneTermList, Scalar};

/// `(sum p_j) x (prod p_j)` block for a single rank-one term.
pub fn phi1_jacobian_block<T: Scalar>(vectors: &[Vec<T>]) -> Matrix<T> {
    let cols: usize = vectors.iter().map(Vec::len).product();
    let rows: Vec<Vec<T>> = vectors
        .iter()
        .enumerate()
        .flat_map(|(j, v)| {
            (0..v.len()).map(move |i| {
                let e = basis_vector::<T>(v.len(), i);
                kron_all(vectors.iter().enumerate().map(|(l, w)| {
                    if l == j {
                        e.as_slice()
                    } else {
                        w.as_slice()
                    }
                }))
            })
        })
        .collect();
    Matrix::from_rows(cols, rows).expect("block rows have prod(p) entries")
}

/// Stacked per-term blocks; `r * sum(p)` rows and `prod(p)` columns.
pub fn assemble_jacobian<T: Scalar>(
    point: &RankOneTermList<T>,
    dims: &[usize],
) -> Result<Matrix<T>> {
    point.check_shape(dims)?;
    let cols: usize = dims.iter().product();
    let blocks: Vec<Matrix<T>> = point
        .terms
        .par_iter()
        .map(|g| phi1_jacobian_block(g))
        .collect();
    let mut data = Vec::with_capacity(blocks.len() * dims.iter().sum::<usize>() * cols);
    for b in blocks {
        data.extend(b.into_vec());
    }
    let rows = data.len() / cols.max(1);
    Matrix::from_vec(rows, cols, data)
}

/// Largest deviation between the Jacobian rows and central differences of
/// the evaluation map, relative to `max(1, max |J|)`.
pub fn fd_check(point: &RankOneTermList<f64>, dims: &[usize], step: f64) -> Result<f64> {
    let jac = assemble_jacobian(point, dims)?;
    let scale = jac.as_slice().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut worst = 0.0f64;
    let mut row = 0;
    for h in 0..point.len() {
        for j in 0..dims.len() {
            for i in 0..dims[j] {
                let mut plus = point.clone();
                plus.terms[h][j][i] += step;
                let mut minus = point.clone();
                minus.terms[h][j][i] -= step;
                let fp = eval_phi(&plus, dims)?;
                let fm = eval_phi(&minus, dims)?;
                for (c, (a, b)) in fp.values().iter().zip(fm.values()).enumerate() {
                    let fd = (a - b) / (2.0 * step);
                    worst = worst.max((fd - jac.get(row, c)).abs());
                }
                row += 1;
            }
        }
    }
    Ok(worst / scale)
}
