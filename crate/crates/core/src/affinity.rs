//! Pairwise affinities between local models and automatic scale selection.
//!
//! Models carry the index of the point their ball is centered on; positions
//! are always read from the cloud passed alongside them. The binary
//! (indicator) affinities are returned as sparse [`Graph`]s since they are
//! evaluated on every data point; the weighted ones are dense.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::{principal_angles, NormMode};
use crate::local_pca::LocalModel;
use crate::neighborhoods::{dist, dist_sq, Graph, NeighborhoodIndex, PointCloud};

/// Dense symmetric nonnegative weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl AffinityMatrix {
    /// Builds from row-major entries; rejects asymmetric, negative or
    /// non-finite input.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(invalid(format!("expected {} entries, got {}", n * n, data.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let w = data[i * n + j];
                if !w.is_finite() || w < 0.0 {
                    return Err(invalid(format!("entry ({i}, {j}) = {w} is not a finite nonnegative weight")));
                }
                if w != data[j * n + i] {
                    return Err(invalid(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(AffinityMatrix { n, data })
    }

    /// Fills the strict upper triangle from `f(i, j)` (in parallel over rows),
    /// mirrors it, and puts `diagonal` on the diagonal.
    pub(crate) fn from_pairs(n: usize, diagonal: f64, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| f(i, j)).collect())
            .collect();
        let mut data = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            data[i * n + i] = diagonal;
            for (k, w) in row.into_iter().enumerate() {
                let j = i + 1 + k;
                data[i * n + j] = w;
                data[j * n + i] = w;
            }
        }
        AffinityMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Off-diagonal pairs with positive weight.
    pub fn to_graph(&self) -> Graph {
        Graph::from_edges(
            self.n,
            (0..self.n).flat_map(|i| ((i + 1)..self.n).filter(move |&j| self.get(i, j) > 0.0).map(move |j| (i, j))),
        )
    }

    /// 0/1 matrix of a graph, zero diagonal.
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.len();
        let mut data = vec![0.0; n * n];
        for (i, j) in g.edges() {
            data[i * n + j] = 1.0;
            data[j * n + i] = 1.0;
        }
        AffinityMatrix { n, data }
    }
}

/// Length and orientation scales.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScaleParams {
    /// Neighborhood radius.
    pub r: f64,
    /// Spatial scale.
    pub eps: f64,
    /// Covariance (relative) or projection scale.
    pub eta: f64,
    /// Noise bound of the generating model.
    pub tau: f64,
}

impl ScaleParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("eps", self.eps), ("eta", self.eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.tau >= 0.0) {
            return Err(invalid(format!("tau must be nonnegative, got {}", self.tau)));
        }
        Ok(())
    }
}

fn position<'a>(cloud: &'a PointCloud, m: &LocalModel) -> &'a [f64] {
    cloud.point(m.center)
}

fn model_cloud(models: &[LocalModel], cloud: &PointCloud) -> PointCloud {
    let ids: Vec<usize> = models.iter().map(|m| m.center).collect();
    cloud.subset(&ids)
}

/// Graph joining models within `eps` of each other for which `keep(i, j)`
/// holds (called with `i < j`). Degenerate models get no edges.
fn indicator_graph(
    models: &[LocalModel],
    cloud: &PointCloud,
    eps: f64,
    keep: impl Fn(&LocalModel, &LocalModel) -> bool + Sync,
) -> Graph {
    let positions = model_cloud(models, cloud);
    let index = NeighborhoodIndex::build(&positions);
    let adjacency = (0..models.len())
        .into_par_iter()
        .map(|i| {
            if models[i].degenerate {
                return Vec::new();
            }
            index
                .radius_query(positions.point(i), eps)
                .into_iter()
                .filter(|&j| {
                    j != i && !models[j].degenerate && {
                        let (a, b) = if i < j { (i, j) } else { (j, i) };
                        keep(&models[a], &models[b])
                    }
                })
                .collect()
        })
        .collect();
    Graph::from_adjacency(adjacency)
}

/// `W_ij = 1{‖x_i - x_j‖ ≤ ε} · 1{‖C_i - C_j‖ ≤ η r²}`.
pub fn cov_indicator_affinity(
    models: &[LocalModel],
    cloud: &PointCloud,
    eps: f64,
    eta: f64,
    r: f64,
    norm: NormMode,
) -> Graph {
    let bound = eta * r * r;
    indicator_graph(models, cloud, eps, |a, b| {
        norm.distance(&a.covariance, &b.covariance) <= bound
    })
}

/// `W_ij = 1{‖x_i - x_j‖ ≤ ε} · 1{‖Q_i - Q_j‖ ≤ η}`.
pub fn proj_indicator_affinity(
    models: &[LocalModel],
    cloud: &PointCloud,
    eps: f64,
    eta: f64,
    norm: NormMode,
) -> Graph {
    indicator_graph(models, cloud, eps, |a, b| {
        norm.distance(&a.projection, &b.projection) <= eta
    })
}

/// `W_ij = exp(-‖y_i - y_j‖²/ε²) · exp(-‖Q_i - Q_j‖²/η²)`, unit diagonal.
/// Pairs involving a degenerate model get weight 0.
pub fn gaussian_product_affinity(
    models: &[LocalModel],
    cloud: &PointCloud,
    eps: f64,
    eta: f64,
    norm: NormMode,
) -> Result<AffinityMatrix> {
    if !(eps > 0.0 && eta > 0.0) {
        return Err(invalid(format!("eps and eta must be positive (eps = {eps}, eta = {eta})")));
    }
    Ok(AffinityMatrix::from_pairs(models.len(), 1.0, |i, j| {
        let (a, b) = (&models[i], &models[j]);
        if a.degenerate || b.degenerate {
            return 0.0;
        }
        let spatial = dist_sq(position(cloud, a), position(cloud, b)) / (eps * eps);
        let q = norm.distance(&a.projection, &b.projection);
        (-spatial).exp() * (-(q * q) / (eta * eta)).exp()
    }))
}

/// For each model, the indices of its `ell` nearest other models.
fn nearest_neighbor_lists(positions: &PointCloud, ell: usize) -> Vec<Vec<(usize, f64)>> {
    let index = NeighborhoodIndex::build(positions);
    (0..positions.len())
        .into_par_iter()
        .map(|i| {
            index
                .knn(positions.point(i), ell + 1)
                .into_iter()
                .filter(|&(j, _)| j != i)
                .take(ell)
                .collect()
        })
        .collect()
}

/// Symmetric ℓ-nearest-neighbor indicator weighted by the product of the
/// cosines of the principal angles between tangent subspaces, raised to α.
pub fn wang_affinity(
    models: &[LocalModel],
    cloud: &PointCloud,
    ell: usize,
    alpha: f64,
) -> Result<AffinityMatrix> {
    if ell == 0 || !(alpha > 0.0) {
        return Err(invalid("wang affinity needs ell >= 1 and alpha > 0"));
    }
    let d = models.first().map_or(0, |m| m.est_dim);
    if let Some(m) = models.iter().find(|m| m.est_dim != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.est_dim,
        });
    }
    let positions = model_cloud(models, cloud);
    let n = models.len();
    let mut delta = vec![false; n * n];
    for (i, list) in nearest_neighbor_lists(&positions, ell).into_iter().enumerate() {
        for (j, _) in list {
            delta[i * n + j] = true;
            delta[j * n + i] = true;
        }
    }
    let weights: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (models, delta) = (&models, &delta);
            ((i + 1)..n).map(move |j| {
                if !delta[i * n + j] || models[i].degenerate || models[j].degenerate {
                    return Ok(0.0);
                }
                let angles = principal_angles(&models[i].projection, &models[j].projection)?;
                Ok(angles.iter().map(|t| t.cos()).product::<f64>().max(0.0).powf(alpha))
            })
        })
        .collect();
    let weights = weights.into_iter().collect::<Result<Vec<f64>>>()?;
    let mut offsets = Vec::with_capacity(n);
    let mut acc = 0;
    for i in 0..n {
        offsets.push(acc);
        acc += n - i - 1;
    }
    Ok(AffinityMatrix::from_pairs(n, 1.0, |i, j| weights[offsets[i] + (j - i - 1)]))
}

/// Distance from each model position to its `ell`-th nearest other model.
pub fn self_tuning_scales(models: &[LocalModel], cloud: &PointCloud, ell: usize) -> Vec<f64> {
    let positions = model_cloud(models, cloud);
    nearest_neighbor_lists(&positions, ell)
        .into_iter()
        .map(|list| list.last().map_or(0.0, |&(_, d)| d))
        .collect()
}

/// Self-tuned Gaussian times a projection-angle factor scaled by the same
/// local distances.
///
/// For coincident points the second factor is 1 when the projections agree
/// and 0 otherwise.
pub fn gong_affinity(
    models: &[LocalModel],
    cloud: &PointCloud,
    ell: usize,
    eta: f64,
    norm: NormMode,
) -> Result<AffinityMatrix> {
    if ell == 0 || !(eta > 0.0) {
        return Err(invalid("gong affinity needs ell >= 1 and eta > 0"));
    }
    if models.len() <= ell {
        return Err(invalid(format!("need more than ell = {ell} models")));
    }
    let scales = self_tuning_scales(models, cloud, ell);
    Ok(AffinityMatrix::from_pairs(models.len(), 1.0, |i, j| {
        let (a, b) = (&models[i], &models[j]);
        if a.degenerate || b.degenerate {
            return 0.0;
        }
        let scale = scales[i] * scales[j];
        let d2 = dist_sq(position(cloud, a), position(cloud, b));
        let q = norm.distance(&a.projection, &b.projection).clamp(0.0, 1.0);
        let angle = q.asin();
        let orientation = if d2 == 0.0 {
            if q <= 1e-12 { 1.0 } else { 0.0 }
        } else if scale == 0.0 {
            if angle == 0.0 { 1.0 } else { 0.0 }
        } else {
            (-(angle * angle) / (eta * eta * d2 / scale)).exp()
        };
        let spatial = if scale == 0.0 {
            if d2 == 0.0 { 1.0 } else { 0.0 }
        } else {
            (-d2 / scale).exp()
        };
        spatial * orientation
    }))
}

/// `ε = max_i min_{j≠i} ‖y_i - y_j‖` over the given points.
pub fn auto_epsilon(centers: &PointCloud) -> Result<f64> {
    if centers.len() < 2 {
        return Err(Error::TooFewCenters {
            found: centers.len(),
            needed: 2,
        });
    }
    let index = NeighborhoodIndex::build(centers);
    let nearest: Vec<f64> = (0..centers.len())
        .into_par_iter()
        .map(|i| index.knn(centers.point(i), 2)[1].1)
        .collect();
    Ok(nearest.into_iter().fold(0.0, f64::max))
}

/// Lower median of `‖Q_i - Q_j‖` over model pairs strictly closer than `eps`.
/// Degenerate models are skipped.
pub fn auto_eta(models: &[LocalModel], cloud: &PointCloud, eps: f64, norm: NormMode) -> Result<f64> {
    let positions = model_cloud(models, cloud);
    let index = NeighborhoodIndex::build(&positions);
    let mut values: Vec<f64> = (0..models.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let (positions, index) = (&positions, &index);
            index
                .radius_query(positions.point(i), eps)
                .into_iter()
                .filter(move |&j| {
                    j > i
                        && !models[i].degenerate
                        && !models[j].degenerate
                        && dist(positions.point(i), positions.point(j)) < eps
                })
                .map(move |j| norm.distance(&models[i].projection, &models[j].projection))
        })
        .collect();
    if values.is_empty() {
        return Err(Error::NoPairsInRange { eps });
    }
    values.sort_by(f64::total_cmp);
    Ok(values[(values.len() - 1) / 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricMatrix;
    use std::f64::consts::{E, PI};

    fn line_model(center: usize, theta: f64) -> LocalModel {
        let v = [theta.cos(), theta.sin()];
        LocalModel {
            center,
            neighbor_count: 10,
            covariance: SymmetricMatrix::outer(&v).scale(1.0 / 3.0),
            projection: SymmetricMatrix::outer(&v),
            est_dim: 1,
            degenerate: false,
            degenerate_gap: false,
        }
    }

    fn cloud(points: &[[f64; 2]]) -> PointCloud {
        PointCloud::from_points(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn indicator_zero_diagonal_and_tangent_rule() {
        let c = cloud(&[[0.0, 0.0], [0.05, 0.0], [0.0, 0.05]]);
        let models = vec![line_model(0, 0.0), line_model(1, 0.0), line_model(2, PI / 2.0)];
        let g = proj_indicator_affinity(&models, &c, 0.1, 0.5, NormMode::Spectral);
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(0, 2));
        assert!(!g.has_edge(0, 0));
        let dense = AffinityMatrix::from_graph(&g);
        assert_eq!(dense.get(0, 0), 0.0);
        assert_eq!(dense.get(1, 0), 1.0);
    }

    #[test]
    fn proj_indicator_dimension_mismatch_disconnects() {
        let c = cloud(&[[0.0, 0.0], [0.01, 0.0]]);
        let mut plane = line_model(1, 0.0);
        plane.projection = SymmetricMatrix::identity(2);
        plane.est_dim = 2;
        let models = vec![line_model(0, 0.0), plane];
        let g = proj_indicator_affinity(&models, &c, 1.0, 0.5, NormMode::Spectral);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn cov_indicator_perpendicular_frobenius() {
        let r = 0.1;
        let c = cloud(&[[0.0, 0.0], [0.01, 0.01]]);
        let mut a = line_model(0, 0.0);
        let mut b = line_model(1, PI / 2.0);
        a.covariance = a.covariance.scale(r * r);
        b.covariance = b.covariance.scale(r * r);
        // ‖C_a - C_b‖_F = √2 r²/3 ≈ 0.471 r²
        let models = vec![a, b];
        let cut = cov_indicator_affinity(&models, &c, 1.0, 0.45, r, NormMode::Frobenius);
        assert_eq!(cut.edge_count(), 0);
        let kept = cov_indicator_affinity(&models, &c, 1.0, 0.48, r, NormMode::Frobenius);
        assert_eq!(kept.edge_count(), 1);
    }

    #[test]
    fn gaussian_cases() {
        let eps = 0.3;
        let eta = 0.7;
        let c = cloud(&[[0.0, 0.0], [0.0, 0.0], [eps, 0.0]]);
        let models = vec![line_model(0, 0.0), line_model(1, 0.0), line_model(2, PI / 2.0)];
        let w = gaussian_product_affinity(&models, &c, eps, eta, NormMode::Spectral).unwrap();
        assert_eq!(w.get(0, 1), 1.0);
        assert_eq!(w.get(2, 2), 1.0);
        let want = (-1.0f64).exp() * (-1.0 / (eta * eta)).exp();
        assert!((w.get(0, 2) - want).abs() < 1e-12);

        let same = vec![line_model(0, 0.0), line_model(2, 0.0)];
        let w = gaussian_product_affinity(&same, &c, eps, eta, NormMode::Spectral).unwrap();
        assert!((w.get(0, 1) - 1.0 / E).abs() < 1e-12);
        assert!(gaussian_product_affinity(&same, &c, 0.0, eta, NormMode::Spectral).is_err());
    }

    #[test]
    fn wang_cases() {
        let c = cloud(&[[0.0, 0.0], [0.1, 0.0], [5.0, 5.0]]);
        let models = vec![line_model(0, 0.0), line_model(1, 0.0), line_model(2, 0.0)];
        let w = wang_affinity(&models, &c, 1, 1.0).unwrap();
        assert!((w.get(0, 1) - 1.0).abs() < 1e-12);
        // 2 is nobody's nearest neighbor but its own nearest is 1
        assert!(w.get(1, 2) > 0.99);
        assert_eq!(w.get(0, 2), 0.0);

        let models = vec![line_model(0, 0.0), line_model(1, PI / 2.0), line_model(2, 0.0)];
        let w = wang_affinity(&models, &c, 1, 1.0).unwrap();
        assert!(w.get(0, 1).abs() < 1e-12);
    }

    #[test]
    fn wang_planes_at_pi_over_six() {
        let t = PI / 6.0;
        let mut a = line_model(0, 0.0);
        a.projection = SymmetricMatrix::from_diagonal(&[1.0, 1.0, 0.0]);
        a.est_dim = 2;
        let mut b = a.clone();
        b.center = 1;
        let v = [t.cos(), 0.0, t.sin()];
        b.projection = SymmetricMatrix::outer(&v).add(&SymmetricMatrix::from_diagonal(&[0.0, 1.0, 0.0]));
        let c = PointCloud::new(3, vec![0.0, 0.0, 0.0, 0.1, 0.0, 0.0]).unwrap();
        let w = wang_affinity(&[a.clone(), b], &c, 1, 2.0).unwrap();
        assert!((w.get(0, 1) - 0.75).abs() < 1e-12);

        let mismatched = line_model(1, 0.0);
        assert!(matches!(
            wang_affinity(&[a, mismatched], &c, 1, 2.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gong_cases() {
        // three collinear points with unit spacing: ε_i = 1 for ℓ = 1
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let models = vec![line_model(0, 0.0), line_model(1, 0.0), line_model(2, 0.0)];
        let w = gong_affinity(&models, &c, 1, 0.5, NormMode::Spectral).unwrap();
        assert!((w.get(0, 1) - (-1.0f64).exp()).abs() < 1e-12);
        assert!((w.get(0, 2) - (-4.0f64).exp()).abs() < 1e-12);

        // ‖Q_i - Q_j‖ = sin(π/4) and ‖x_i - x_j‖² = ε_i ε_j with η = π/4
        let models = vec![line_model(0, 0.0), line_model(1, PI / 4.0), line_model(2, 0.0)];
        let w = gong_affinity(&models, &c, 1, PI / 4.0, NormMode::Spectral).unwrap();
        assert!((w.get(0, 1) - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn gong_coincident_points() {
        let c = cloud(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        let models = vec![line_model(0, 0.0), line_model(1, 0.0), line_model(2, 0.0)];
        let w = gong_affinity(&models, &c, 1, 0.5, NormMode::Spectral).unwrap();
        assert!(w.as_slice().iter().all(|v| v.is_finite()));
        let models = vec![line_model(0, 0.0), line_model(1, PI / 2.0), line_model(2, 0.0)];
        let w = gong_affinity(&models, &c, 2, 0.5, NormMode::Spectral).unwrap();
        assert_eq!(w.get(0, 1), 0.0);
    }

    #[test]
    fn auto_epsilon_cases() {
        let one_d = |xs: &[f64]| PointCloud::new(1, xs.to_vec()).unwrap();
        assert_eq!(auto_epsilon(&one_d(&[0.0, 1.0])).unwrap(), 1.0);
        assert_eq!(auto_epsilon(&one_d(&[0.0, 1.0, 3.0])).unwrap(), 2.0);
        assert!(matches!(auto_epsilon(&one_d(&[0.0])), Err(Error::TooFewCenters { .. })));
    }

    #[test]
    fn auto_eta_cases() {
        let c = cloud(&[[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]]);
        let same = vec![line_model(0, 0.3), line_model(1, 0.3), line_model(2, 0.3)];
        assert_eq!(auto_eta(&same, &c, 1.0, NormMode::Spectral).unwrap(), 0.0);
        let mixed = vec![line_model(0, 0.0), line_model(1, 0.0), line_model(2, PI / 2.0)];
        let eta = auto_eta(&mixed, &c, 1.0, NormMode::Spectral).unwrap();
        assert!((eta - 1.0).abs() < 1e-12);
        // strict inequality: pairs at exactly eps do not count
        assert!(matches!(
            auto_eta(&mixed, &cloud(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]), 1.0, NormMode::Spectral),
            Err(Error::NoPairsInRange { .. })
        ));
    }

    #[test]
    fn affinity_matrix_validation() {
        assert!(AffinityMatrix::new(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(AffinityMatrix::new(2, vec![1.0, -0.5, -0.5, 1.0]).is_err());
        let w = AffinityMatrix::new(2, vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        assert_eq!(w.degrees(), vec![1.5, 1.5]);
        assert_eq!(w.to_graph().edge_count(), 1);
    }

    #[test]
    fn scale_params_validation() {
        let ok = ScaleParams { r: 0.1, eps: 0.2, eta: 0.3, tau: 0.0 };
        assert!(ok.validate().is_ok());
        assert!(ScaleParams { r: 0.0, ..ok }.validate().is_err());
        assert!(ScaleParams { tau: -1.0, ..ok }.validate().is_err());
    }
}
