//! Clustering pipelines: spectral graph partitioning, the two
//! connected-component extractors, and spectral clustering on local PCA.

pub mod kmeans;

use rand::Rng;
use rayon::prelude::*;

use crate::affinity::{
    auto_epsilon, auto_eta, cov_indicator_affinity, gaussian_product_affinity, gong_affinity,
    proj_indicator_affinity, wang_affinity, AffinityMatrix, ScaleParams,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{eigh, NormMode, SymmetricMatrix};
use crate::local_pca::{local_models, DimMode, LocalModel};
use crate::neighborhoods::{
    assign_to_closest_survivor, connected_components, dist_sq, subsample_centers,
    NeighborhoodIndex, PointCloud,
};

pub use kmeans::{kmeans_pp, KMeansConfig, KMeansResult};

/// Cluster assignment per point, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    assignments: Vec<usize>,
    k_found: usize,
    removed: Option<Vec<usize>>,
}

impl Labeling {
    /// Relabels arbitrary ids to `1..=k` in order of first appearance.
    pub fn from_ids(ids: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignments = ids
            .iter()
            .map(|id| {
                let next = map.len() + 1;
                *map.entry(*id).or_insert(next)
            })
            .collect();
        Labeling {
            assignments,
            k_found: map.len(),
            removed: None,
        }
    }

    pub fn with_removed(mut self, removed: Vec<usize>) -> Self {
        self.removed = Some(removed);
        self
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn k_found(&self) -> usize {
        self.k_found
    }

    /// Points dropped by the intersection filter before reassignment.
    pub fn removed(&self) -> Option<&[usize]> {
        self.removed.as_deref()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Number of points per cluster, index `k - 1` for cluster `k`.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k_found];
        for &a in &self.assignments {
            sizes[a - 1] += 1;
        }
        sizes
    }
}

/// Normalized spectral embedding: top-`k` eigenvectors of
/// `D^{-1/2} W D^{-1/2}` with every row scaled to unit length.
pub fn spectral_embedding(w: &AffinityMatrix, k: usize) -> Result<Vec<Vec<f64>>> {
    let n = w.len();
    if k == 0 || k > n {
        return Err(invalid(format!("cannot extract {k} eigenvectors from a {n}-node graph")));
    }
    let degrees = w.degrees();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::IsolatedNode(i));
    }
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            z[i * n + j] = w.get(i, j) / (degrees[i] * degrees[j]).sqrt();
        }
    }
    let e = eigh(&SymmetricMatrix::new(n, z)?)?;
    Ok((0..n)
        .map(|i| {
            let row: Vec<f64> = (0..k).map(|c| e.vector(c)[i]).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|x| x / norm).collect()
            } else {
                row
            }
        })
        .collect())
}

/// Spectral graph partitioning of an affinity matrix into `k` groups.
pub fn njw_partition(
    w: &AffinityMatrix,
    k: usize,
    rng: &mut impl Rng,
    config: &KMeansConfig,
) -> Result<Labeling> {
    let rows = spectral_embedding(w, k)?;
    let res = kmeans_pp(&rows, k, rng, config)?;
    Ok(Labeling::from_ids(&res.assignments))
}

fn models_for_all_points(index: &NeighborhoodIndex<'_>, r: f64, mode: DimMode) -> Result<Vec<LocalModel>> {
    let all: Vec<usize> = (0..index.cloud().len()).collect();
    local_models(index, &all, r, mode)
}

/// Connected components of the covariance-comparison graph, after removing
/// points that see a markedly different covariance within distance `r`.
/// Removed points join the component of their nearest survivor.
pub fn algorithm2_cov_components(cloud: &PointCloud, params: &ScaleParams, norm: NormMode) -> Result<Labeling> {
    params.validate()?;
    let index = NeighborhoodIndex::build(cloud);
    let models = models_for_all_points(&index, params.r, DimMode::Fixed(1))?;
    let graph = cov_indicator_affinity(&models, cloud, params.eps, params.eta, params.r, norm);

    let bound = params.eta * params.r * params.r;
    let removed_flags: Vec<bool> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            index
                .radius_query(cloud.point(i), params.r)
                .into_iter()
                .any(|j| {
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    norm.distance(&models[a].covariance, &models[b].covariance) > bound
                })
        })
        .collect();
    let survivors: Vec<usize> = (0..cloud.len()).filter(|&i| !removed_flags[i]).collect();
    let removed: Vec<usize> = (0..cloud.len()).filter(|&i| removed_flags[i]).collect();
    if survivors.is_empty() {
        return Err(Error::AllPointsRemoved);
    }

    let components = connected_components(&graph.induced(&survivors));
    let mut ids = vec![0; cloud.len()];
    for (&i, &c) in survivors.iter().zip(&components) {
        ids[i] = c;
    }
    let reassigned = assign_to_closest_survivor(cloud, &removed, &survivors, &components)?;
    for (&i, c) in removed.iter().zip(reassigned) {
        ids[i] = c;
    }
    // survivors keep component order; removed points only reuse existing ids
    Ok(Labeling::from_ids(&ids).with_removed(removed))
}

/// Connected components of the projection-comparison graph, with local
/// dimension chosen by eigenvalue thresholding.
pub fn algorithm3_proj_components(cloud: &PointCloud, params: &ScaleParams, norm: NormMode) -> Result<Labeling> {
    params.validate()?;
    if params.eta >= 1.0 {
        return Err(invalid(format!("projection scale eta must be below 1, got {}", params.eta)));
    }
    let index = NeighborhoodIndex::build(cloud);
    let models = models_for_all_points(&index, params.r, DimMode::Thresholded(params.eta))?;
    let graph = proj_indicator_affinity(&models, cloud, params.eps, params.eta, norm);
    Ok(Labeling::from_ids(&connected_components(&graph)))
}

/// Affinity used between centers in [`algorithm4_local_pca_spectral`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum CenterAffinity {
    /// Gaussian in distance times Gaussian in projection distance.
    Gauss,
    /// ℓ-nearest-neighbor graph weighted by principal-angle cosines.
    Wang { ell: usize, alpha: f64 },
    /// Self-tuned Gaussian with an angle term.
    Gong { ell: usize },
    /// Distance-only Gaussian (standard spectral clustering).
    Distance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalPcaConfig {
    pub r: f64,
    pub k: usize,
    pub d: usize,
    /// Spatial scale; chosen as the largest nearest-center distance if unset.
    pub eps: Option<f64>,
    /// Projection scale; chosen as the median nearby projection distance if unset.
    pub eta: Option<f64>,
    pub norm: NormMode,
    pub affinity: CenterAffinity,
    pub kmeans: KMeansConfig,
}

impl LocalPcaConfig {
    pub fn new(r: f64, k: usize, d: usize) -> Self {
        LocalPcaConfig {
            r,
            k,
            d,
            eps: None,
            eta: None,
            norm: NormMode::Spectral,
            affinity: CenterAffinity::Gauss,
            kmeans: KMeansConfig::default(),
        }
    }
}

/// Smallest projection scale used when the automatic rule returns zero
/// (every nearby pair of centers has the same projection).
pub const MIN_ETA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalPcaOutcome {
    pub labeling: Labeling,
    /// Point indices of the centers, in selection order.
    pub centers: Vec<usize>,
    /// Cluster (1-based) of each center.
    pub center_labels: Vec<usize>,
    pub eps: Option<f64>,
    pub eta: Option<f64>,
}

/// Spectral clustering on an r-packing of centers, with affinities built
/// from local PCA projections; every point then takes its nearest center's
/// cluster.
pub fn algorithm4_local_pca_spectral(
    cloud: &PointCloud,
    config: &LocalPcaConfig,
    rng: &mut impl Rng,
) -> Result<LocalPcaOutcome> {
    if config.k == 0 {
        return Err(invalid("number of clusters must be at least 1"));
    }
    if config.d == 0 || config.d > cloud.dim() {
        return Err(invalid(format!("intrinsic dimension {} outside 1..={}", config.d, cloud.dim())));
    }
    if !(config.r > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let index = NeighborhoodIndex::build(cloud);
    let centers = subsample_centers(&index, config.r, rng);
    if centers.len() < config.k {
        return Err(Error::TooFewCenters {
            found: centers.len(),
            needed: config.k,
        });
    }
    let center_cloud = cloud.subset(&centers);
    if centers.len() == 1 {
        return Ok(LocalPcaOutcome {
            labeling: Labeling::from_ids(&vec![0; cloud.len()]),
            centers,
            center_labels: vec![1],
            eps: config.eps,
            eta: config.eta,
        });
    }

    let models = local_models(&index, &centers, config.r, DimMode::Fixed(config.d))?;
    let eps = match config.eps {
        Some(e) => e,
        None => auto_epsilon(&center_cloud)?,
    };
    let needs_eta = matches!(config.affinity, CenterAffinity::Gauss | CenterAffinity::Gong { .. });
    let eta = match (config.eta, needs_eta) {
        (Some(e), _) => Some(e),
        (None, true) => Some(auto_eta(&models, cloud, eps, config.norm)?.max(MIN_ETA)),
        (None, false) => None,
    };

    let w = match config.affinity {
        CenterAffinity::Gauss => gaussian_product_affinity(&models, cloud, eps, eta.unwrap(), config.norm)?,
        CenterAffinity::Wang { ell, alpha } => wang_affinity(&models, cloud, ell.min(centers.len() - 1), alpha)?,
        CenterAffinity::Gong { ell } => gong_affinity(&models, cloud, ell.min(centers.len() - 1), eta.unwrap(), config.norm)?,
        CenterAffinity::Distance => AffinityMatrix::from_pairs(centers.len(), 1.0, |i, j| {
            (-dist_sq(center_cloud.point(i), center_cloud.point(j)) / (eps * eps)).exp()
        }),
    };
    let center_labeling = njw_partition(&w, config.k, rng, &config.kmeans)?;

    let center_index = NeighborhoodIndex::build(&center_cloud);
    let ids: Vec<usize> = (0..cloud.len())
        .into_par_iter()
        .map(|i| center_labeling.assignments()[center_index.nearest(cloud.point(i)).0])
        .collect();
    Ok(LocalPcaOutcome {
        labeling: Labeling::from_ids(&ids),
        centers,
        center_labels: center_labeling.assignments().to_vec(),
        eps: Some(eps),
        eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn block_affinity(sizes: &[usize]) -> AffinityMatrix {
        let n: usize = sizes.iter().sum();
        let mut block = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            block.extend(std::iter::repeat_n(b, s));
        }
        let data = (0..n * n)
            .map(|k| if block[k / n] == block[k % n] { 1.0 } else { 0.0 })
            .collect();
        AffinityMatrix::new(n, data).unwrap()
    }

    #[test]
    fn labeling_relabels_by_first_appearance() {
        let l = Labeling::from_ids(&[7, 7, 3, 9, 3]);
        assert_eq!(l.assignments(), &[1, 1, 2, 3, 2]);
        assert_eq!(l.k_found(), 3);
        assert_eq!(l.cluster_sizes(), vec![2, 2, 1]);
    }

    #[test]
    fn njw_recovers_blocks() {
        let w = block_affinity(&[3, 4]);
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = njw_partition(&w, 2, &mut rng, &KMeansConfig::default()).unwrap();
            assert_eq!(l.assignments(), &[1, 1, 1, 2, 2, 2, 2]);
        }
    }

    #[test]
    fn njw_single_cluster() {
        let w = block_affinity(&[5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = njw_partition(&w, 1, &mut rng, &KMeansConfig::default()).unwrap();
        assert_eq!(l.k_found(), 1);
    }

    #[test]
    fn njw_rejects_isolated_node() {
        let w = AffinityMatrix::new(2, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            njw_partition(&w, 1, &mut rng, &KMeansConfig::default()),
            Err(Error::IsolatedNode(0))
        ));
    }

    fn dense_segment(n: usize) -> PointCloud {
        let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64, 0.0]).collect();
        PointCloud::from_points(&pts).unwrap()
    }

    #[test]
    fn algorithm2_single_segment() {
        let c = dense_segment(400);
        let params = ScaleParams { r: 0.05, eps: 0.1, eta: 0.3, tau: 0.0 };
        let l = algorithm2_cov_components(&c, &params, NormMode::Spectral).unwrap();
        assert_eq!(l.k_found(), 1);
        assert_eq!(l.removed().unwrap().len(), 0);
    }

    #[test]
    fn algorithm2_parallel_segments() {
        let delta = 0.2;
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for i in 0..400 {
            let x = i as f64 / 400.0;
            pts.push(vec![x, 0.0]);
            pts.push(vec![x, delta]);
        }
        let c = PointCloud::from_points(&pts).unwrap();
        let params = ScaleParams { r: 0.05, eps: 0.1, eta: 0.3, tau: 0.0 };
        let l = algorithm2_cov_components(&c, &params, NormMode::Spectral).unwrap();
        assert_eq!(l.k_found(), 2);
        // ε larger than the gap merges them
        let merged = ScaleParams { eps: 0.3, ..params };
        let l = algorithm2_cov_components(&c, &merged, NormMode::Spectral).unwrap();
        assert_eq!(l.k_found(), 1);
    }

    #[test]
    fn algorithm3_single_segment() {
        let c = dense_segment(400);
        let params = ScaleParams { r: 0.05, eps: 0.1, eta: 0.3, tau: 0.0 };
        let l = algorithm3_proj_components(&c, &params, NormMode::Spectral).unwrap();
        assert_eq!(l.k_found(), 1);
        assert!(algorithm3_proj_components(&c, &ScaleParams { eta: 1.0, ..params }, NormMode::Spectral).is_err());
    }

    #[test]
    fn algorithm4_too_few_centers() {
        let c = dense_segment(50);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let config = LocalPcaConfig::new(10.0, 2, 1);
        assert!(matches!(
            algorithm4_local_pca_spectral(&c, &config, &mut rng),
            Err(Error::TooFewCenters { found: 1, needed: 2 })
        ));
    }
}
