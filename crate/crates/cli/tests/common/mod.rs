//! Independent reference implementations used by the acceptance and golden tests.
//!
//! Nothing here calls into the library's numerical code: projectors come from
//! an eigendecomposition of the explicit Gram matrix and the step oracle uses
//! nalgebra's SVD on a plain `Vec<Vec<f64>>` buffer.

#![allow(dead_code)]

pub mod golden;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Subtracts the column mean from every row and returns the `T x K` matrix.
pub fn centered_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let t = rows.len();
    let k = rows[0].len();
    let mut m = DMatrix::from_fn(t, k, |r, c| rows[r][c]);
    for c in 0..k {
        let mean = m.column(c).sum() / t as f64;
        m.column_mut(c).add_scalar_mut(-mean);
    }
    m
}

/// Eigenpairs of a symmetric matrix through Lanczos with full
/// reorthogonalization, sorted by decreasing eigenvalue.
///
/// Exact for low-rank Gram matrices: the Krylov space closes once it holds the
/// range of `g`, after at most `rank + 1` matrix-vector products.
pub fn lanczos_eigen(g: &DMatrix<f64>, max_iter: usize) -> (Vec<f64>, Vec<DVector<f64>>) {
    let n = g.nrows();
    let scale = g.norm().max(f64::MIN_POSITIVE);
    // Deterministic start vector with no special alignment to the data.
    let mut q = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919 + 13) % 101) as f64 / 101.0);
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = vec![q];
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    for j in 0..max_iter.min(n) {
        let mut w = g * &basis[j];
        let a = basis[j].dot(&w);
        alphas.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = v.dot(&w);
                w.axpy(-c, v, 1.0);
            }
        }
        let b = w.norm();
        if b <= 1e-13 * scale || j + 1 == max_iter.min(n) {
            break;
        }
        betas.push(b);
        basis.push(w / b);
    }
    let m = alphas.len();
    let tri = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alphas[r]
        } else if r + 1 == c {
            betas[r]
        } else if c + 1 == r {
            betas[c]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(tri);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let y = eig.eigenvectors.column(i);
            let mut v = DVector::zeros(n);
            for (k, q) in basis.iter().take(m).enumerate() {
                v.axpy(y[k], q, 1.0);
            }
            let norm = v.norm();
            v / norm
        })
        .collect();
    (values, vectors)
}

/// Number of retained directions: at most `m`, at most the row count, and only
/// singular values at or above `tol * sigma_1`.
pub fn retained(sigmas: &[f64], m: usize, rows: usize, tol: f64) -> usize {
    let lead = sigmas[0];
    sigmas
        .iter()
        .take(m.min(rows))
        .take_while(|&&s| s >= tol * lead)
        .count()
}

/// Projector onto the top-`m_eff` eigenvectors of `Z^T Z`, with `m_eff`.
pub fn gram_projector(rows: &[Vec<f64>], m: usize, tol: f64) -> (DMatrix<f64>, usize) {
    let z = centered_matrix(rows);
    let g = z.transpose() * &z;
    let (values, vectors) = lanczos_eigen(&g, rows.len() + 2);
    projector_from(&values, &vectors, m, rows.len(), tol)
}

/// Same projector from a dense symmetric eigensolver on the full Gram matrix.
pub fn dense_gram_projector(rows: &[Vec<f64>], m: usize, tol: f64) -> (DMatrix<f64>, usize) {
    let z = centered_matrix(rows);
    let g = z.transpose() * &z;
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors: Vec<DVector<f64>> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    projector_from(&values, &vectors, m, rows.len(), tol)
}

fn projector_from(
    values: &[f64],
    vectors: &[DVector<f64>],
    m: usize,
    rows: usize,
    tol: f64,
) -> (DMatrix<f64>, usize) {
    let sigmas: Vec<f64> = values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let m_eff = retained(&sigmas, m, rows, tol);
    let n = vectors[0].len();
    let mut p = DMatrix::zeros(n, n);
    for v in &vectors[..m_eff] {
        p.ger(1.0, v, v, 1.0);
    }
    (p, m_eff)
}

/// Per-step output of the straight-line oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleStep {
    pub step: usize,
    pub entropy_pre: f64,
    pub gap: f64,
    pub gate_fired: bool,
    pub alpha: Option<f64>,
    pub m_eff: Option<usize>,
    pub singular_values: Option<Vec<f64>>,
    pub entropy_post: f64,
    pub adjusted: Vec<f64>,
}

/// Parameters the oracle reads; mirrors the library defaults.
#[derive(Debug, Clone, Copy)]
pub struct OracleParams {
    pub window: usize,
    pub rank: usize,
    pub h_thres: f64,
    pub alpha_max: f64,
    pub gamma: f64,
    pub s_h: f64,
    pub s_d: f64,
    pub h_0: f64,
    pub d_0: f64,
    pub epsilon: f64,
    pub svd_tol: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            window: 16,
            rank: 8,
            h_thres: 0.5,
            alpha_max: 1.5,
            gamma: 0.85,
            s_h: 0.5,
            s_d: 1.0,
            h_0: 0.0,
            d_0: 2.0,
            epsilon: 1e-12,
            svd_tol: 1e-10,
        }
    }
}

pub fn oracle_entropy(z: &[f64], eps: f64) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = e.iter().sum();
    -e.iter().map(|x| x / total).map(|p| p * (p + eps).ln()).sum::<f64>()
}

pub fn oracle_alpha(h: f64, gap: f64, p: &OracleParams) -> f64 {
    let x = (h - p.h_0) / p.s_h - (p.d_0 - gap) / p.s_d;
    1.0 + (p.alpha_max - 1.0) / (1.0 + (-x).exp())
}

/// Runs the transform over a stream of top-K value rows, written directly
/// from the formulas with dense linear algebra.
pub fn oracle_run(stream: &[Vec<f64>], p: &OracleParams) -> Vec<OracleStep> {
    let mut buffer: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    for (step, z) in stream.iter().enumerate() {
        let h = oracle_entropy(z, p.epsilon);
        let gap = if z.len() > 1 { z[0] - z[1] } else { f64::INFINITY };
        buffer.push(z.clone());
        if buffer.len() > p.window {
            buffer.remove(0);
        }
        let mut rec = OracleStep {
            step,
            entropy_pre: h,
            gap,
            gate_fired: false,
            alpha: None,
            m_eff: None,
            singular_values: None,
            entropy_post: h,
            adjusted: z.clone(),
        };
        if h > p.h_thres && buffer.len() >= 2 {
            let svd = centered_matrix(&buffer).svd(false, true);
            let vt = svd.v_t.expect("right singular vectors requested");
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            let sigmas: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
            if sigmas[0] >= p.svd_tol {
                let m_eff = retained(&sigmas, p.rank, buffer.len(), p.svd_tol);
                let zv = DVector::from_column_slice(z);
                let mut in_span = DVector::zeros(z.len());
                for &i in &order[..m_eff] {
                    let v = vt.row(i).transpose();
                    in_span += &v * v.dot(&zv);
                }
                let residual = &zv - &in_span;
                let alpha = oracle_alpha(h, gap, p);
                let adjusted: Vec<f64> = (residual * p.gamma + in_span * alpha).iter().copied().collect();
                rec.entropy_post = oracle_entropy(&adjusted, p.epsilon);
                rec.gate_fired = true;
                rec.alpha = Some(alpha);
                rec.m_eff = Some(m_eff);
                rec.singular_values = Some(sigmas[..m_eff].to_vec());
                *buffer.last_mut().unwrap() = adjusted.clone();
                rec.adjusted = adjusted;
            }
        }
        out.push(rec);
    }
    out
}

/// Largest absolute difference between two equally long slices.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
