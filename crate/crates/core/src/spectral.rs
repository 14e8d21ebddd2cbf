//! Thin SVD of the centered logit buffer and the projections built from it.
//!
//! The buffer is `T_b x K` with `T_b <= window` (small) and `K` typically large.
//! The decomposition works on whichever orientation is tall: a Householder QR
//! reduces it to a small square triangular factor, and one-sided (Hestenes)
//! Jacobi rotations diagonalise that factor. Only the requested leading
//! singular vectors are expanded back to full length.

use crate::error::{Result, SlsError};

/// A buffer with its column mean removed.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredBuffer {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`.
    data: Vec<f64>,
    mean: Vec<f64>,
    source: Vec<f64>,
}

impl CenteredBuffer {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// The rows that were centered, as given.
    pub fn source_row(&self, i: usize) -> &[f64] {
        &self.source[i * self.cols..(i + 1) * self.cols]
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// Subtracts the elementwise mean of `rows` from each row.
pub fn center_buffer<R: AsRef<[f64]>>(rows: &[R]) -> Result<CenteredBuffer> {
    let first = rows
        .first()
        .ok_or_else(|| SlsError::Input("cannot center an empty buffer".into()))?;
    let cols = first.as_ref().len();
    let mut source = Vec::with_capacity(rows.len() * cols);
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != cols {
            return Err(SlsError::Input(format!(
                "buffer row {i} has length {}, expected {cols}",
                r.len()
            )));
        }
        source.extend_from_slice(r);
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; cols];
    for r in source.chunks_exact(cols) {
        mean.iter_mut().zip(r).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let data = source
        .chunks_exact(cols)
        .flat_map(|r| r.iter().zip(&mean).map(|(x, m)| x - m))
        .collect();
    Ok(CenteredBuffer {
        rows: rows.len(),
        cols,
        data,
        mean,
        source,
    })
}

/// Orthonormal basis of the dominant variation directions (columns of length `K`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    columns: Vec<Vec<f64>>,
    singular_values: Vec<f64>,
}

impl SpectralBasis {
    /// Builds a basis from columns that the caller guarantees are orthonormal.
    pub fn from_columns(columns: Vec<Vec<f64>>, singular_values: Vec<f64>) -> Result<Self> {
        if columns.is_empty() || columns.len() != singular_values.len() {
            return Err(SlsError::Input(format!(
                "{} basis columns for {} singular values",
                columns.len(),
                singular_values.len()
            )));
        }
        let dim = columns[0].len();
        if columns.iter().any(|c| c.len() != dim) {
            return Err(SlsError::Input("basis columns differ in length".into()));
        }
        Ok(SpectralBasis {
            columns,
            singular_values,
        })
    }

    /// Number of retained directions (`m_eff`).
    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    /// Ambient dimension (`K`).
    pub fn dim(&self) -> usize {
        self.columns[0].len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }
}

/// All `min(T_b, K)` singular triples, sorted by non-increasing singular value.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// Left singular vectors, each of length `T_b`.
    pub left: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    /// Right singular vectors, each of length `K`.
    pub right: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

struct Reflector {
    v: Vec<f64>,
    scale: f64,
}

/// SVD of a tall matrix (`len >= ncols`) supplied column by column.
struct TallSvd {
    len: usize,
    reflectors: Vec<Option<Reflector>>,
    sigma: Vec<f64>,
    /// Left singular vectors of the triangular factor, sorted with `sigma`.
    u_small: Vec<Vec<f64>>,
    /// Right singular vectors (length `ncols`), sorted with `sigma`.
    v: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 64;

impl TallSvd {
    fn new(mut cols: Vec<Vec<f64>>) -> Self {
        let n = cols.len();
        let len = cols.first().map_or(0, Vec::len);
        debug_assert!(len >= n);

        let mut reflectors = Vec::with_capacity(n);
        for j in 0..n {
            let x = &cols[j][j..];
            let norm = dot(x, x).sqrt();
            if norm == 0.0 {
                reflectors.push(None);
                continue;
            }
            let alpha = if x[0] > 0.0 { -norm } else { norm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vnorm_sq = dot(&v, &v);
            if vnorm_sq == 0.0 {
                reflectors.push(None);
                continue;
            }
            let scale = 2.0 / vnorm_sq;
            for c in &mut cols[j..] {
                let f = scale * dot(&v, &c[j..]);
                axpy(-f, &v, &mut c[j..]);
            }
            reflectors.push(Some(Reflector { v, scale }));
        }

        // Upper-triangular factor, column-major.
        let mut b: Vec<Vec<f64>> = cols
            .iter()
            .enumerate()
            .map(|(c, col)| (0..n).map(|i| if i <= c { col[i] } else { 0.0 }).collect())
            .collect();
        let mut v: Vec<Vec<f64>> = (0..n)
            .map(|c| (0..n).map(|i| if i == c { 1.0 } else { 0.0 }).collect())
            .collect();

        let tol = f64::EPSILON * n as f64;
        let mut norms: Vec<f64> = b.iter().map(|c| dot(c, c)).collect();
        // Columns at roundoff level relative to the whole factor are numerically
        // zero; rotating them against each other never settles.
        let negligible = f64::EPSILON * f64::EPSILON * norms.iter().sum::<f64>();
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for i in 0..n {
                for j in i + 1..n {
                    if norms[i] <= negligible || norms[j] <= negligible {
                        continue;
                    }
                    let g = dot(&b[i], &b[j]);
                    if g == 0.0 || g.abs() <= tol * (norms[i] * norms[j]).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (norms[j] - norms[i]) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut b, i, j, c, s);
                    rotate(&mut v, i, j, c, s);
                    norms[i] = dot(&b[i], &b[i]);
                    norms[j] = dot(&b[j], &b[j]);
                }
            }
            if !rotated {
                break;
            }
        }

        let sigma_unsorted: Vec<f64> = b.iter().map(|c| dot(c, c).sqrt()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| sigma_unsorted[y].total_cmp(&sigma_unsorted[x]).then(x.cmp(&y)));

        let sigma: Vec<f64> = order.iter().map(|&i| sigma_unsorted[i]).collect();
        let u_small = order
            .iter()
            .map(|&i| {
                let s = sigma_unsorted[i];
                if s > 0.0 {
                    b[i].iter().map(|x| x / s).collect()
                } else {
                    vec![0.0; n]
                }
            })
            .collect();
        let v = order.iter().map(|&i| std::mem::take(&mut v[i])).collect();

        TallSvd {
            len,
            reflectors,
            sigma,
            u_small,
            v,
        }
    }

    /// `Q * [u_small[idx]; 0]`, a left singular vector of the original tall matrix.
    fn left(&self, idx: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.len];
        y[..self.u_small[idx].len()].copy_from_slice(&self.u_small[idx]);
        for (j, r) in self.reflectors.iter().enumerate().rev() {
            if let Some(r) = r {
                let f = r.scale * dot(&r.v, &y[j..]);
                axpy(-f, &r.v, &mut y[j..]);
            }
        }
        y
    }
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(j);
    for (x, y) in head[i].iter_mut().zip(tail[0].iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Flips signs so the largest-magnitude entry of `key` is positive.
fn canonical_sign(key: &mut [f64], partner: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in key.iter().enumerate() {
        if x.abs() > key[best].abs() {
            best = i;
        }
    }
    if key.get(best).is_some_and(|x| *x < 0.0) {
        key.iter_mut().for_each(|x| *x = -*x);
        partner.iter_mut().for_each(|x| *x = -*x);
    }
}

fn check_finite(centered: &CenteredBuffer) -> Result<()> {
    match centered.data.iter().position(|x| !x.is_finite()) {
        Some(p) => Err(SlsError::Input(format!(
            "non-finite entry at row {}, column {} of the centered buffer",
            p / centered.cols,
            p % centered.cols
        ))),
        None => Ok(()),
    }
}

/// A decomposition of the centered buffer in whichever orientation is tall.
enum Decomposition {
    /// `Z^T = L S W^T`: right vectors of `Z` are the expanded left vectors.
    Transposed(TallSvd),
    /// `Z = L S W^T` directly: right vectors of `Z` are the small `W`.
    Direct(TallSvd),
}

impl Decomposition {
    fn new(centered: &CenteredBuffer) -> Self {
        let (rows, cols) = (centered.rows, centered.cols);
        if cols >= rows {
            // The transpose's columns are the buffer rows.
            Decomposition::Transposed(TallSvd::new(
                (0..rows).map(|i| centered.row(i).to_vec()).collect(),
            ))
        } else {
            Decomposition::Direct(TallSvd::new(
                (0..cols)
                    .map(|c| (0..rows).map(|r| centered.data[r * cols + c]).collect())
                    .collect(),
            ))
        }
    }

    fn sigma(&self) -> &[f64] {
        match self {
            Decomposition::Transposed(s) | Decomposition::Direct(s) => &s.sigma,
        }
    }

    fn right(&self, i: usize) -> Vec<f64> {
        match self {
            Decomposition::Transposed(s) => s.left(i),
            Decomposition::Direct(s) => s.v[i].clone(),
        }
    }

    fn left(&self, i: usize) -> Vec<f64> {
        match self {
            Decomposition::Transposed(s) => s.v[i].clone(),
            Decomposition::Direct(s) => s.left(i),
        }
    }
}

/// Full thin SVD `Z = U diag(sigma) V^T` of a centered buffer.
pub fn thin_svd(centered: &CenteredBuffer) -> Result<ThinSvd> {
    check_finite(centered)?;
    let dec = Decomposition::new(centered);
    let p = dec.sigma().len();
    let mut left = Vec::with_capacity(p);
    let mut right = Vec::with_capacity(p);
    for i in 0..p {
        let (mut u, mut v) = (dec.left(i), dec.right(i));
        canonical_sign(&mut v, &mut u);
        left.push(u);
        right.push(v);
    }
    Ok(ThinSvd {
        left,
        singular_values: dec.sigma().to_vec(),
        right,
    })
}

/// Leading right singular vectors of the centered buffer.
///
/// Returns `Ok(None)` when the buffer carries no usable variation (leading
/// singular value below `svd_tol`). Directions whose singular value falls below
/// `svd_tol * sigma_1` are not retained, so the result may hold fewer than `m`
/// columns.
pub fn spectral_basis(centered: &CenteredBuffer, m: usize, svd_tol: f64) -> Result<Option<SpectralBasis>> {
    if m == 0 {
        return Err(SlsError::Config("spectral rank must be positive".into()));
    }
    check_finite(centered)?;
    let dec = Decomposition::new(centered);
    let sigma = dec.sigma();
    let lead = sigma.first().copied().unwrap_or(0.0);
    if lead < svd_tol {
        return Ok(None);
    }
    let m_eff = sigma
        .iter()
        .take(m)
        .take_while(|&&s| s >= svd_tol * lead)
        .count();
    let columns = (0..m_eff)
        .map(|i| {
            let mut v = dec.right(i);
            canonical_sign(&mut v, &mut []);
            v
        })
        .collect();
    Ok(Some(SpectralBasis {
        columns,
        singular_values: sigma[..m_eff].to_vec(),
    }))
}

/// Splits `z` into its projection onto the basis span and the orthogonal residual.
///
/// Uses `basis * (basis^T * z)`; the `K x K` projector is never formed.
pub fn project_split(z: &[f64], basis: &SpectralBasis) -> Result<(Vec<f64>, Vec<f64>)> {
    if z.len() != basis.dim() {
        return Err(SlsError::Input(format!(
            "vector of length {} against a basis of dimension {}",
            z.len(),
            basis.dim()
        )));
    }
    let mut in_span = vec![0.0; z.len()];
    for col in &basis.columns {
        axpy(dot(col, z), col, &mut in_span);
    }
    let residual = z.iter().zip(&in_span).map(|(z, s)| z - s).collect();
    Ok((in_span, residual))
}

/// `gamma * residual + alpha * in_span`.
pub fn recombine(in_span: &[f64], residual: &[f64], alpha: f64, gamma: f64) -> Vec<f64> {
    assert_eq!(in_span.len(), residual.len(), "split components differ in length");
    in_span
        .iter()
        .zip(residual)
        .map(|(s, r)| gamma * r + alpha * s)
        .collect()
}
