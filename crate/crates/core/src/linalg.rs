//! Dense symmetric linear algebra used by the local PCA and affinity code.
//!
//! Matrices here are small (the ambient dimension of the data), so everything
//! is stored densely in row-major order. Eigendecompositions are delegated to
//! `nalgebra` and then normalized: eigenvalues descending, eigenvectors with
//! their first nonzero component positive.

use nalgebra::{DMatrix, SymmetricEigen, SVD};

use crate::error::{invalid, Error, Result};

/// Regularization weight used before inverting local covariances.
pub const DEFAULT_REGULARIZATION: f64 = 1e-8;

/// Eigenvalues closer than this are treated as tied when checking the gap
/// below a projection rank.
pub const GAP_TOLERANCE: f64 = 1e-12;

/// Tolerance used to accept a matrix as an orthogonal projection.
const PROJECTION_TOLERANCE: f64 = 1e-8;

/// Which matrix norm to use when comparing covariances or projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    #[default]
    Spectral,
    Frobenius,
}

impl NormMode {
    pub fn norm(self, m: &SymmetricMatrix) -> f64 {
        match self {
            NormMode::Spectral => spectral_norm(m),
            NormMode::Frobenius => frobenius_norm(m),
        }
    }

    /// Norm of `a - b`. Frobenius and small spectral cases skip the
    /// intermediate matrix.
    pub fn distance(self, a: &SymmetricMatrix, b: &SymmetricMatrix) -> f64 {
        assert_eq!(a.dim, b.dim, "matrix dimensions differ");
        match (self, a.dim) {
            (NormMode::Frobenius, _) => a
                .data
                .iter()
                .zip(&b.data)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            (NormMode::Spectral, 1) => (a.data[0] - b.data[0]).abs(),
            (NormMode::Spectral, 2) => {
                let (p, q, r) = (a.data[0] - b.data[0], a.data[1] - b.data[1], a.data[3] - b.data[3]);
                0.5 * (p + r).abs() + (0.25 * (p - r) * (p - r) + q * q).sqrt()
            }
            (NormMode::Spectral, _) => spectral_norm(&a.sub(b)),
        }
    }
}

impl std::str::FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(NormMode::Spectral),
            "frobenius" => Ok(NormMode::Frobenius),
            other => Err(invalid(format!("unknown norm '{other}'"))),
        }
    }
}

/// A real symmetric `dim × dim` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds a matrix from row-major entries, symmetrizing by averaging
    /// `(i, j)` with `(j, i)`.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("matrix dimension must be positive"));
        }
        if data.len() != dim * dim {
            return Err(invalid(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        let mut m = SymmetricMatrix { dim, data };
        m.symmetrize();
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        let dim = v.len();
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = v[i] * v[j];
            }
        }
        SymmetricMatrix { dim, data }
    }

    /// Unchecked constructor for entries that are symmetric by construction.
    pub(crate) fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        SymmetricMatrix { dim, data }
    }

    fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (self.data[i * d + j] + self.data[j * d + i]);
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(self.dim, other.dim, "matrix dimensions differ");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        SymmetricMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn add(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(self.dim, other.dim, "matrix dimensions differ");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        SymmetricMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn scale(&self, s: f64) -> SymmetricMatrix {
        SymmetricMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + lambda * I`.
    pub fn add_identity(&self, lambda: f64) -> SymmetricMatrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += lambda;
        }
        m
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Plain matrix product; the result is symmetric only if the factors
    /// commute, so it is returned as raw row-major entries.
    pub fn matmul(&self, other: &SymmetricMatrix) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    /// `U M Uᵀ` for a square row-major `u`.
    pub fn conjugate(&self, u: &[f64]) -> SymmetricMatrix {
        let d = self.dim;
        let um = DMatrix::from_row_slice(d, d, u);
        let m = self.to_dmatrix();
        let r = &um * m * um.transpose();
        let mut out = SymmetricMatrix::from_raw(d, r.transpose().as_slice().to_vec());
        out.symmetrize();
        out
    }

    pub(crate) fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Checks that the matrix is an orthogonal projection and returns its rank.
    pub fn projection_rank(&self) -> Result<usize> {
        let sq = self.matmul(self);
        let diff = SymmetricMatrix::new(
            self.dim,
            sq.iter().zip(&self.data).map(|(a, b)| a - b).collect(),
        )?;
        if spectral_norm(&diff) > PROJECTION_TOLERANCE {
            return Err(invalid("matrix is not an orthogonal projection"));
        }
        Ok(self.trace().round().max(0.0) as usize)
    }
}

/// Eigenvalues sorted descending with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    /// Column `k` of the eigenvector matrix is stored at
    /// `vectors[k * dim..(k + 1) * dim]`.
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.vectors[k * d..(k + 1) * d]
    }

    /// True when `β_d - β_{d+1}` is below [`GAP_TOLERANCE`], meaning the
    /// top-`d` eigenspace is not uniquely determined.
    pub fn degenerate_gap(&self, d: usize) -> bool {
        d > 0 && d < self.dim() && self.values[d - 1] - self.values[d] <= GAP_TOLERANCE
    }

    /// Rebuilds `V diag(β) Vᵀ`.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let d = self.dim();
        let mut data = vec![0.0; d * d];
        for (k, &beta) in self.values.iter().enumerate() {
            let v = self.vector(k);
            for i in 0..d {
                for j in 0..d {
                    data[i * d + j] += beta * v[i] * v[j];
                }
            }
        }
        let mut m = SymmetricMatrix::from_raw(d, data);
        m.symmetrize();
        m
    }
}

/// Symmetric eigendecomposition with descending eigenvalues and a fixed sign
/// convention (first nonzero component of each eigenvector positive).
pub fn eigh(m: &SymmetricMatrix) -> Result<EigenDecomposition> {
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let d = m.dim;
    let eig = SymmetricEigen::new(m.to_dmatrix());
    let mut order: Vec<usize> = (0..d).collect();
    // stable sort keeps nalgebra's order for exact ties
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut values = Vec::with_capacity(d);
    let mut vectors = Vec::with_capacity(d * d);
    for &k in &order {
        values.push(eig.eigenvalues[k]);
        let col = eig.eigenvectors.column(k);
        let norm = col.norm();
        let mut v: Vec<f64> = col.iter().map(|x| x / norm).collect();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        vectors.extend(v);
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, descending.
pub fn eigenvalues(m: &SymmetricMatrix) -> Vec<f64> {
    match m.dim {
        1 => vec![m.data[0]],
        2 => {
            let (a, b, c) = (m.data[0], m.data[1], m.data[3]);
            let mean = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            vec![mean + rad, mean - rad]
        }
        _ => {
            let mut v: Vec<f64> = m.to_dmatrix().symmetric_eigenvalues().iter().copied().collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        }
    }
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(m: &SymmetricMatrix) -> f64 {
    eigenvalues(m).into_iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn frobenius_norm(m: &SymmetricMatrix) -> f64 {
    m.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Orthogonal projection onto the span of the top `d` eigenvectors.
///
/// Ties at the cut (see [`EigenDecomposition::degenerate_gap`]) are not an
/// error; the eigenvector order from [`eigh`] decides.
pub fn projection_onto_top_d(e: &EigenDecomposition, d: usize) -> Result<SymmetricMatrix> {
    let dim = e.dim();
    if d == 0 || d > dim {
        return Err(invalid(format!(
            "projection rank {d} outside 1..={dim}"
        )));
    }
    Ok(projection_onto(e, 0..d))
}

pub(crate) fn projection_onto(
    e: &EigenDecomposition,
    columns: std::ops::Range<usize>,
) -> SymmetricMatrix {
    let dim = e.dim();
    let mut data = vec![0.0; dim * dim];
    for k in columns {
        let v = e.vector(k);
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] += v[i] * v[j];
            }
        }
    }
    let mut p = SymmetricMatrix::from_raw(dim, data);
    p.symmetrize();
    p
}

fn range_basis(p: &SymmetricMatrix, rank: usize) -> DMatrix<f64> {
    let dim = p.dim;
    let e = eigh(p).expect("projection entries are finite");
    let mut basis = DMatrix::zeros(dim, rank);
    for k in 0..rank {
        for (i, &x) in e.vector(k).iter().enumerate() {
            basis[(i, k)] = x;
        }
    }
    basis
}

/// Principal angles between the ranges of two orthogonal projections,
/// largest first. Returns `min(rank P, rank Q)` angles in `[0, π/2]`.
pub fn principal_angles(p: &SymmetricMatrix, q: &SymmetricMatrix) -> Result<Vec<f64>> {
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: q.dim,
        });
    }
    let rp = p.projection_rank()?;
    let rq = q.projection_rank()?;
    if rp == 0 || rq == 0 {
        return Err(invalid("principal angles need projections of rank >= 1"));
    }
    let cross = range_basis(p, rp).transpose() * range_basis(q, rq);
    let svd = SVD::new(cross, false, false);
    let mut angles: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|s| s.clamp(-1.0, 1.0).acos())
        .collect();
    angles.sort_by(|a, b| b.total_cmp(a));
    angles.truncate(rp.min(rq));
    Ok(angles)
}

fn log_det_positive(m: &SymmetricMatrix) -> Result<f64> {
    let values = eigenvalues(m);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::SingularCovariance { min_eigenvalue: min });
    }
    Ok(values.iter().map(|v| v.ln()).sum())
}

/// Hellinger distance between `N(0, Ci)` and `N(0, Cj)`.
pub fn hellinger_distance(ci: &SymmetricMatrix, cj: &SymmetricMatrix) -> Result<f64> {
    if ci.dim != cj.dim {
        return Err(Error::DimensionMismatch {
            expected: ci.dim,
            found: cj.dim,
        });
    }
    let ld_i = log_det_positive(ci)?;
    let ld_j = log_det_positive(cj)?;
    let ld_sum = log_det_positive(&ci.add(cj))?;
    let log_ratio =
        0.5 * ci.dim as f64 * std::f64::consts::LN_2 + 0.25 * (ld_i + ld_j) - 0.5 * ld_sum;
    Ok((1.0 - log_ratio.exp()).max(0.0).sqrt())
}

/// `C + lambda r² I`, the regularized covariance used before inversion.
pub fn regularize(c: &SymmetricMatrix, lambda: f64, r: f64) -> SymmetricMatrix {
    c.add_identity(lambda * r * r)
}

/// `‖C^{-1/2} v‖` using the symmetric square root.
fn whitened_norm(c: &SymmetricMatrix, v: &[f64]) -> Result<f64> {
    let e = eigh(c)?;
    let mut sum = 0.0;
    for (k, &beta) in e.values().iter().enumerate() {
        if !(beta > 0.0) {
            return Err(Error::SingularCovariance { min_eigenvalue: beta });
        }
        let proj: f64 = e.vector(k).iter().zip(v).map(|(a, b)| a * b).sum();
        sum += proj * proj / beta;
    }
    Ok(sum.sqrt())
}

/// Average Mahalanobis distance
/// `‖Ci^{-1/2}(xi - xj)‖ + ‖Cj^{-1/2}(xj - xi)‖`.
///
/// The covariances are used as given; call [`regularize`] first when they
/// may be rank deficient.
pub fn mahalanobis_avg(
    ci: &SymmetricMatrix,
    cj: &SymmetricMatrix,
    xi: &[f64],
    xj: &[f64],
) -> Result<f64> {
    if xi.len() != ci.dim || xj.len() != cj.dim || ci.dim != cj.dim {
        return Err(Error::DimensionMismatch {
            expected: ci.dim,
            found: xi.len().max(xj.len()),
        });
    }
    let diff: Vec<f64> = xi.iter().zip(xj).map(|(a, b)| a - b).collect();
    Ok(whitened_norm(ci, &diff)? + whitened_norm(cj, &diff)?)
}
