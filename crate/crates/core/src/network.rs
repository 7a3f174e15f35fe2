//! Vectorization between symmetric adjacency matrices and edge vectors.
//!
//! Edges are ordered lexicographically over node pairs `k < l`:
//! `(1,2), (1,3), ..., (1,V), (2,3), ..., (V-1,V)`. Public functions taking
//! `(k, l)` pairs use 1-based node labels; the `*0` variants are 0-based.

use nalgebra::{DMatrix, DVector};

use crate::error::{BnrError, Result};

/// Number of unordered node pairs, `V(V-1)/2`.
pub fn edge_count(v: usize) -> usize {
    v * v.saturating_sub(1) / 2
}

/// Recovers `V` from an edge count, if `q` is of the form `V(V-1)/2`.
pub fn nodes_for_edges(q: usize) -> Option<usize> {
    // V = (1 + sqrt(1 + 8q)) / 2
    let disc = 1 + 8 * q as u128;
    let root = (disc as f64).sqrt().round() as u128;
    if root * root != disc {
        return None;
    }
    let v = (root as usize).div_ceil(2);
    (edge_count(v) == q && v >= 2).then_some(v)
}

/// 0-based edge position for 0-based nodes `k < l < v`. No range checks.
#[inline]
pub fn edge_index0(k: usize, l: usize, v: usize) -> usize {
    debug_assert!(k < l && l < v);
    k * (2 * v - k - 1) / 2 + (l - k - 1)
}

/// Position (1-based) of the pair `(k, l)` with `1 <= k < l <= v`.
pub fn pair_index(k: usize, l: usize, v: usize) -> Result<usize> {
    if k == 0 || k >= l || l > v {
        return Err(BnrError::invalid(format!(
            "pair ({k}, {l}) is not a valid edge of a {v}-node network"
        )));
    }
    Ok(edge_index0(k - 1, l - 1, v) + 1)
}

/// Inverse of [`pair_index`]: the 1-based pair at 1-based position `index`.
pub fn edge_pair(index: usize, v: usize) -> Result<(usize, usize)> {
    let q = edge_count(v);
    if index == 0 || index > q {
        return Err(BnrError::invalid(format!(
            "edge index {index} outside 1..={q}"
        )));
    }
    let mut rem = index - 1;
    for k in 0..v - 1 {
        let row = v - k - 1;
        if rem < row {
            return Ok((k + 1, k + rem + 2));
        }
        rem -= row;
    }
    unreachable!("index bounded by q")
}

/// All 0-based pairs in vectorization order.
pub fn edge_pairs0(v: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(edge_count(v));
    for k in 0..v {
        for l in k + 1..v {
            out.push((k, l));
        }
    }
    out
}

/// Rejects matrices that are not square, symmetric (to `tol`) and zero on the diagonal.
pub fn check_adjacency(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(BnrError::dims(format!(
            "adjacency matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    let v = a.nrows();
    for k in 0..v {
        if a[(k, k)] != 0.0 {
            return Err(BnrError::invalid(format!(
                "adjacency diagonal entry ({}, {}) is {}, expected 0",
                k + 1,
                k + 1,
                a[(k, k)]
            )));
        }
        for l in k + 1..v {
            let (x, y) = (a[(k, l)], a[(l, k)]);
            if !x.is_finite() || (x - y).abs() > tol * (1.0 + x.abs().max(y.abs())) {
                return Err(BnrError::invalid(format!(
                    "adjacency matrix not symmetric at ({}, {}): {x} vs {y}",
                    k + 1,
                    l + 1
                )));
            }
        }
    }
    Ok(())
}

/// Upper triangle of a symmetric zero-diagonal matrix, in edge order.
pub fn upper_triangle_vectorize(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_adjacency(a, 0.0)?;
    let v = a.nrows();
    let mut out = DVector::zeros(edge_count(v));
    let mut idx = 0;
    for k in 0..v {
        for l in k + 1..v {
            out[idx] = a[(k, l)];
            idx += 1;
        }
    }
    Ok(out)
}

/// Sum of elementwise products of two equally sized matrices.
pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(BnrError::dims(format!(
            "frobenius product of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x * y).sum())
}

/// Coefficient matrix `B` from edge coefficients: `b_kl = b_lk = gamma_kl / 2`.
pub fn gamma_to_b(gamma: &DVector<f64>) -> Result<DMatrix<f64>> {
    let v = nodes_for_edges(gamma.len()).ok_or_else(|| {
        BnrError::dims(format!(
            "edge vector length {} is not V(V-1)/2 for any V >= 2",
            gamma.len()
        ))
    })?;
    let mut b = DMatrix::zeros(v, v);
    let mut idx = 0;
    for k in 0..v {
        for l in k + 1..v {
            let half = gamma[idx] / 2.0;
            b[(k, l)] = half;
            b[(l, k)] = half;
            idx += 1;
        }
    }
    Ok(b)
}

/// Edge vector of a symmetric matrix, `gamma_kl = b_kl + b_lk`.
pub fn b_to_gamma(b: &DMatrix<f64>) -> Result<DVector<f64>> {
    if b.nrows() != b.ncols() {
        return Err(BnrError::dims("coefficient matrix must be square"));
    }
    let v = b.nrows();
    Ok(DVector::from_iterator(
        edge_count(v),
        edge_pairs0(v).into_iter().map(|(k, l)| b[(k, l)] + b[(l, k)]),
    ))
}
