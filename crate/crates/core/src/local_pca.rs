//! Local covariance estimation and tangent projections.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, eigh, projection_onto, projection_onto_top_d, SymmetricMatrix};
use crate::neighborhoods::{NeighborhoodIndex, PointCloud};

/// How the rank of the local tangent projection is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimMode {
    /// Project onto the top `d` eigenvectors.
    Fixed(usize),
    /// Keep eigenvectors whose eigenvalue exceeds `√η · ‖C‖`.
    Thresholded(f64),
}

/// Local PCA summary of the r-ball around one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    /// Index of the point the ball is centered on.
    pub center: usize,
    pub neighbor_count: usize,
    pub covariance: SymmetricMatrix,
    pub projection: SymmetricMatrix,
    pub est_dim: usize,
    /// Fewer than two points in the ball, or a zero covariance under the
    /// thresholded rule. Affinities never connect degenerate models.
    pub degenerate: bool,
    /// The eigenvalue gap at the projection rank was numerically zero.
    pub degenerate_gap: bool,
}

/// Covariance of the points of `cloud` listed in `neighbors`, normalized by
/// the neighbor count (the covariance of the empirical measure).
pub fn covariance_of(cloud: &PointCloud, neighbors: &[usize]) -> Result<SymmetricMatrix> {
    if neighbors.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let dim = cloud.dim();
    let m = neighbors.len() as f64;
    let mut mean = vec![0.0; dim];
    for &j in neighbors {
        for (acc, &c) in mean.iter_mut().zip(cloud.point(j)) {
            *acc += c;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);

    let mut cov = vec![0.0; dim * dim];
    let mut centered = vec![0.0; dim];
    for &j in neighbors {
        for ((c, &x), &mu) in centered.iter_mut().zip(cloud.point(j)).zip(&mean) {
            *c = x - mu;
        }
        for a in 0..dim {
            for b in a..dim {
                cov[a * dim + b] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..dim {
        for b in a..dim {
            let v = cov[a * dim + b] / m;
            cov[a * dim + b] = v;
            cov[b * dim + a] = v;
        }
    }
    Ok(SymmetricMatrix::from_raw(dim, cov))
}

/// Sample covariance of `N_r(x)`.
pub fn local_covariance(index: &NeighborhoodIndex<'_>, x: &[f64], r: f64) -> Result<SymmetricMatrix> {
    if !(r > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let neighbors = index.radius_query(x, r);
    covariance_of(index.cloud(), &neighbors)
}

/// Projection onto the top `d` eigenvectors of `c`.
pub fn estimate_projection(c: &SymmetricMatrix, d: usize) -> Result<SymmetricMatrix> {
    projection_onto_top_d(&eigh(c)?, d)
}

/// Counts eigenvalues strictly above `√η · β₁(C)` and projects onto their
/// eigenvectors.
pub fn estimate_dim_thresholded(c: &SymmetricMatrix, eta: f64) -> Result<(usize, SymmetricMatrix)> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("eta must lie in (0, 1), got {eta}")));
    }
    if c.is_zero() {
        return Err(Error::ZeroCovariance);
    }
    let e = eigh(c)?;
    let threshold = eta.sqrt() * e.values()[0];
    let est_dim = e.values().iter().take_while(|&&b| b > threshold).count();
    if est_dim == 0 {
        // only possible when every eigenvalue is <= 0
        return Err(Error::ZeroCovariance);
    }
    Ok((est_dim, projection_onto(&e, 0..est_dim)))
}

fn model_for(
    index: &NeighborhoodIndex<'_>,
    center: usize,
    r: f64,
    mode: DimMode,
) -> Result<LocalModel> {
    let cloud = index.cloud();
    let dim = cloud.dim();
    let neighbors = index.radius_query(cloud.point(center), r);
    let covariance = covariance_of(cloud, &neighbors)?;
    let degenerate_model = |covariance: SymmetricMatrix| LocalModel {
        center,
        neighbor_count: neighbors.len(),
        covariance,
        projection: SymmetricMatrix::zeros(dim),
        est_dim: 0,
        degenerate: true,
        degenerate_gap: false,
    };
    if neighbors.len() < 2 {
        return Ok(degenerate_model(SymmetricMatrix::zeros(dim)));
    }
    match mode {
        DimMode::Fixed(d) => {
            let e = eigh(&covariance)?;
            let projection = projection_onto_top_d(&e, d)?;
            Ok(LocalModel {
                center,
                neighbor_count: neighbors.len(),
                degenerate: covariance.is_zero(),
                degenerate_gap: e.degenerate_gap(d),
                covariance,
                projection,
                est_dim: d,
            })
        }
        DimMode::Thresholded(eta) => match estimate_dim_thresholded(&covariance, eta) {
            Ok((est_dim, projection)) => Ok(LocalModel {
                center,
                neighbor_count: neighbors.len(),
                covariance,
                projection,
                est_dim,
                degenerate: false,
                degenerate_gap: false,
            }),
            Err(Error::ZeroCovariance) => Ok(degenerate_model(covariance)),
            Err(e) => Err(e),
        },
    }
}

/// One local model per center, computed in parallel. Every slot is computed
/// independently, so the output does not depend on scheduling. Per-center
/// failures stay in their slot.
pub fn batch_local_models(
    index: &NeighborhoodIndex<'_>,
    centers: &[usize],
    r: f64,
    mode: DimMode,
) -> Result<Vec<Result<LocalModel>>> {
    if centers.is_empty() {
        return Err(invalid("at least one center is required"));
    }
    if !(r > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    if let DimMode::Fixed(d) = mode {
        if d == 0 || d > index.cloud().dim() {
            return Err(invalid(format!(
                "intrinsic dimension {d} outside 1..={}",
                index.cloud().dim()
            )));
        }
    }
    Ok(centers
        .par_iter()
        .map(|&c| model_for(index, c, r, mode))
        .collect())
}

/// [`batch_local_models`] that fails on the first per-center error.
pub fn local_models(
    index: &NeighborhoodIndex<'_>,
    centers: &[usize],
    r: f64,
    mode: DimMode,
) -> Result<Vec<LocalModel>> {
    batch_local_models(index, centers, r, mode)?.into_iter().collect()
}

/// Spectral norm bound used by the support check: a covariance over a ball of
/// radius `r` cannot exceed `r²`.
pub fn within_support_bound(model: &LocalModel, r: f64) -> bool {
    linalg::spectral_norm(&model.covariance) <= r * r * (1.0 + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_norm, spectral_norm};
    use std::f64::consts::PI;

    #[test]
    fn single_neighbor_is_zero() {
        let c = PointCloud::new(2, vec![0.3, 0.4]).unwrap();
        let idx = NeighborhoodIndex::build(&c);
        let cov = local_covariance(&idx, &[0.3, 0.4], 1.0).unwrap();
        assert!(cov.is_zero());
    }

    #[test]
    fn two_neighbors_on_a_line() {
        let c = PointCloud::new(1, vec![0.0, 1.0]).unwrap();
        let idx = NeighborhoodIndex::build(&c);
        let cov = local_covariance(&idx, &[0.5], 1.0).unwrap();
        assert!((cov.get(0, 0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn empty_neighborhood() {
        let c = PointCloud::new(1, vec![0.0]).unwrap();
        let idx = NeighborhoodIndex::build(&c);
        assert!(matches!(
            local_covariance(&idx, &[5.0], 1.0),
            Err(Error::EmptyNeighborhood)
        ));
    }

    #[test]
    fn projection_examples() {
        let r: f64 = 0.1;
        let c = SymmetricMatrix::from_diagonal(&[r * r / 3.0, 0.0]);
        assert_eq!(
            estimate_projection(&c, 1).unwrap(),
            SymmetricMatrix::from_diagonal(&[1.0, 0.0])
        );
        let i3 = SymmetricMatrix::identity(3);
        assert!(spectral_norm(&estimate_projection(&i3, 3).unwrap().sub(&i3)) < 1e-12);

        let theta = PI / 4.0;
        let v = [theta.cos(), theta.sin()];
        let c = SymmetricMatrix::outer(&v).scale(r * r / 3.0);
        let q = estimate_projection(&c, 1).unwrap();
        let want = SymmetricMatrix::new(2, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(frobenius_norm(&q.sub(&want)) < 1e-12);
    }

    #[test]
    fn thresholded_dimension() {
        let c = SymmetricMatrix::from_diagonal(&[1.0, 0.5, 0.01]);
        let (d, p) = estimate_dim_thresholded(&c, 0.09).unwrap();
        assert_eq!(d, 2);
        assert!((p.trace() - 2.0).abs() < 1e-12);
        let (d, _) = estimate_dim_thresholded(&SymmetricMatrix::identity(3), 0.5).unwrap();
        assert_eq!(d, 3);
        assert!(matches!(
            estimate_dim_thresholded(&SymmetricMatrix::zeros(2), 0.5),
            Err(Error::ZeroCovariance)
        ));
        assert!(estimate_dim_thresholded(&c, 1.0).is_err());
    }

    #[test]
    fn threshold_is_strict() {
        // second eigenvalue exactly at √η · β₁ is not kept
        let c = SymmetricMatrix::from_diagonal(&[1.0, 0.5]);
        let (d, _) = estimate_dim_thresholded(&c, 0.25).unwrap();
        assert_eq!(d, 1);
    }

    #[test]
    fn batch_degenerate_center() {
        let c = PointCloud::new(2, vec![0.0, 0.0, 5.0, 5.0]).unwrap();
        let idx = NeighborhoodIndex::build(&c);
        let models = local_models(&idx, &[0], 1.0, DimMode::Fixed(1)).unwrap();
        assert!(models[0].degenerate);
        assert!(models[0].covariance.is_zero());
        assert_eq!(models[0].neighbor_count, 1);
    }

    #[test]
    fn batch_rejects_bad_dimension() {
        let c = PointCloud::new(2, vec![0.0, 0.0, 0.1, 0.0]).unwrap();
        let idx = NeighborhoodIndex::build(&c);
        assert!(batch_local_models(&idx, &[0], 1.0, DimMode::Fixed(3)).is_err());
        assert!(batch_local_models(&idx, &[], 1.0, DimMode::Fixed(1)).is_err());
    }
}
