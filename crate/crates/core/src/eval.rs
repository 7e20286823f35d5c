//! Misclustering rate and the repeated-trial harness.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::affinity::ScaleParams;
use crate::cluster::{
    algorithm2_cov_components, algorithm3_proj_components, algorithm4_local_pca_spectral, CenterAffinity,
    Labeling, LocalPcaConfig,
};
use crate::datasets::{generate, global_radius, DatasetName, DatasetSpec};
use crate::error::{invalid, Error, Result};
use crate::linalg::NormMode;
use crate::neighborhoods::PointCloud;

/// Thresholds reported by [`TrialStats::count_below`].
pub const THRESHOLDS: [f64; 3] = [0.05, 0.10, 0.15];

/// Smallest fraction of points whose predicted cluster disagrees with the
/// truth, over all injective maps from predicted clusters to true clusters.
/// Predicted clusters left unmatched (when there are more than `k`) count
/// entirely as errors.
///
/// Both label slices are 1-based; `truth` must use labels in `1..=k`.
pub fn misclustering_rate(pred: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(invalid(format!(
            "prediction has {} labels but truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    if let Some(&bad) = truth.iter().find(|&&t| t == 0 || t > k) {
        return Err(invalid(format!("truth label {bad} outside 1..={k}")));
    }
    if pred.contains(&0) {
        return Err(invalid("predicted labels are 1-based"));
    }
    let k_found = *pred.iter().max().unwrap();
    let mut table = vec![vec![0i64; k]; k_found];
    for (&p, &t) in pred.iter().zip(truth) {
        table[p - 1][t - 1] += 1;
    }
    // the solver wants no more rows than columns
    let table = if k_found <= k {
        table
    } else {
        (0..k).map(|t| table.iter().map(|row| row[t]).collect()).collect()
    };
    let matrix = Matrix::from_rows(table).map_err(|e| invalid(e.to_string()))?;
    let (matched, _) = kuhn_munkres(&matrix);
    Ok(1.0 - matched as f64 / pred.len() as f64)
}

/// A clustering method with all of its parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Covariance comparison, removal and connected components.
    Alg2 { params: ScaleParams, norm: NormMode },
    /// Thresholded-dimension projection comparison and connected components.
    Alg3 { params: ScaleParams, norm: NormMode },
    /// Spectral clustering of local PCA models on an r-packing.
    Alg4 {
        r: f64,
        k: usize,
        d: usize,
        eps: Option<f64>,
        eta: Option<f64>,
        norm: NormMode,
        affinity: CenterAffinity,
    },
    /// Spectral clustering with a distance-only Gaussian on the same centers.
    NjwBaseline { r: f64, k: usize, eps: Option<f64> },
}

impl Method {
    /// Local PCA spectral clustering with automatic scales.
    pub fn alg4(r: f64, k: usize, d: usize) -> Self {
        Method::Alg4 {
            r,
            k,
            d,
            eps: None,
            eta: None,
            norm: NormMode::Spectral,
            affinity: CenterAffinity::Gauss,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Alg2 { .. } => "alg2",
            Method::Alg3 { .. } => "alg3",
            Method::Alg4 { .. } => "alg4",
            Method::NjwBaseline { .. } => "njw_baseline",
        }
    }

    /// Neighborhood radius the method works at.
    pub fn radius(&self) -> f64 {
        match self {
            Method::Alg2 { params, .. } | Method::Alg3 { params, .. } => params.r,
            Method::Alg4 { r, .. } | Method::NjwBaseline { r, .. } => *r,
        }
    }

    fn local_pca_config(&self) -> Option<LocalPcaConfig> {
        match *self {
            Method::Alg4 {
                r,
                k,
                d,
                eps,
                eta,
                norm,
                affinity,
            } => Some(LocalPcaConfig {
                eps,
                eta,
                norm,
                affinity,
                ..LocalPcaConfig::new(r, k, d)
            }),
            Method::NjwBaseline { r, k, eps } => Some(LocalPcaConfig {
                eps,
                affinity: CenterAffinity::Distance,
                ..LocalPcaConfig::new(r, k, 1)
            }),
            _ => None,
        }
    }
}

/// Labels plus the scales a run actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub labeling: Labeling,
    pub eps: Option<f64>,
    pub eta: Option<f64>,
    pub num_centers: Option<usize>,
}

/// Random generator of the clustering algorithm for `seed`. It shares the
/// seed with data generation but draws from a separate stream.
pub fn algorithm_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Runs `method` on `cloud`, seeding any internal randomness from `seed`.
pub fn run_method(cloud: &PointCloud, method: &Method, seed: u64) -> Result<RunOutput> {
    match method {
        Method::Alg2 { params, norm } => Ok(RunOutput {
            labeling: algorithm2_cov_components(cloud, params, *norm)?,
            eps: Some(params.eps),
            eta: Some(params.eta),
            num_centers: None,
        }),
        Method::Alg3 { params, norm } => Ok(RunOutput {
            labeling: algorithm3_proj_components(cloud, params, *norm)?,
            eps: Some(params.eps),
            eta: Some(params.eta),
            num_centers: None,
        }),
        _ => {
            let config = method.local_pca_config().unwrap();
            let out = algorithm4_local_pca_spectral(cloud, &config, &mut algorithm_rng(seed))?;
            Ok(RunOutput {
                labeling: out.labeling,
                eps: out.eps,
                eta: out.eta,
                num_centers: Some(out.centers.len()),
            })
        }
    }
}

/// Seed of trial `t`: the splitmix64 output for state
/// `base + (t + 1) · 0x9E3779B97F4A7C15` (wrapping).
pub fn derive_seed(base: u64, t: u64) -> u64 {
    let mut z = base.wrapping_add(t.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrialNote {
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrialStats {
    /// Misclustering rate of every trial, in trial order.
    pub rates: Vec<f64>,
    /// Lower-middle order statistic of `rates`.
    pub median: f64,
    /// Number of trials with rate strictly below each of [`THRESHOLDS`].
    pub count_below: [usize; 3],
    pub r_used: f64,
    /// `r_used` over the global radius of the first trial's data.
    #[serde(rename = "r_over_R")]
    pub r_over_radius: f64,
    /// Clusters found per trial (0 for failed trials).
    pub k_found: Vec<usize>,
    pub notes: Vec<TrialNote>,
}

/// Lower-middle order statistic.
pub fn lower_median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[(sorted.len() - 1) / 2]
}

impl TrialStats {
    pub fn from_rates(rates: Vec<f64>, k_found: Vec<usize>, notes: Vec<TrialNote>, r_used: f64, radius: f64) -> Self {
        let count_below = THRESHOLDS.map(|th| rates.iter().filter(|&&r| r < th).count());
        TrialStats {
            median: lower_median(&rates),
            rates,
            count_below,
            r_used,
            r_over_radius: r_used / radius,
            k_found,
            notes,
        }
    }
}

struct TrialOutcome {
    rate: f64,
    k_found: usize,
    error: Option<String>,
    radius: f64,
}

fn one_trial(spec: &DatasetSpec, method: &Method, seed: u64) -> Result<TrialOutcome> {
    let data = generate(&DatasetSpec { seed, ..spec.clone() })?;
    let radius = global_radius(&data.cloud);
    let truth = data.cloud.labels().unwrap();
    Ok(match run_method(&data.cloud, method, seed) {
        Ok(out) => TrialOutcome {
            rate: misclustering_rate(out.labeling.assignments(), truth, data.k)?,
            k_found: out.labeling.k_found(),
            error: None,
            radius,
        },
        Err(e) => TrialOutcome {
            rate: 1.0,
            k_found: 0,
            error: Some(e.to_string()),
            radius,
        },
    })
}

/// Runs `n_trials` independent trials. Trial `t` generates `spec` with seed
/// `derive_seed(base_seed, t)` and runs `method` with the same seed.
/// Algorithm failures are recorded as rate 1 with a note; invalid dataset
/// specs are an error.
pub fn run_trials(spec: &DatasetSpec, method: &Method, n_trials: usize, base_seed: u64) -> Result<TrialStats> {
    if n_trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    spec.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..n_trials)
        .into_par_iter()
        .map(|t| one_trial(spec, method, derive_seed(base_seed, t as u64)))
        .collect::<Result<_>>()?;
    let notes = outcomes
        .iter()
        .enumerate()
        .filter_map(|(trial, o)| o.error.clone().map(|error| TrialNote { trial, error }))
        .collect();
    Ok(TrialStats::from_rates(
        outcomes.iter().map(|o| o.rate).collect(),
        outcomes.iter().map(|o| o.k_found).collect(),
        notes,
        method.radius(),
        outcomes[0].radius,
    ))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AngleRow {
    pub angle: f64,
    pub stats: TrialStats,
}

/// [`run_trials`] on `two_curves_angle` for each angle; `template` supplies
/// the sample size, noise and ambient dimension.
pub fn angle_sweep(
    angles: &[f64],
    template: &DatasetSpec,
    method: &Method,
    n_trials: usize,
    base_seed: u64,
) -> Result<Vec<AngleRow>> {
    if template.name != DatasetName::TwoCurvesAngle {
        return Err(Error::InvalidInput(format!(
            "angle sweeps use two_curves_angle, not {}",
            template.name
        )));
    }
    angles
        .iter()
        .map(|&angle| {
            let spec = template.clone().with_angle(angle);
            Ok(AngleRow {
                angle,
                stats: run_trials(&spec, method, n_trials, base_seed)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        let truth = [1, 1, 1, 1, 2, 2, 2, 2, 2, 2];
        assert_eq!(misclustering_rate(&truth, &truth, 2).unwrap(), 0.0);
        let swapped: Vec<usize> = truth.iter().map(|&l| 3 - l).collect();
        assert_eq!(misclustering_rate(&swapped, &truth, 2).unwrap(), 0.0);
        let mut flipped = truth;
        flipped[0] = 2;
        assert!((misclustering_rate(&flipped, &truth, 2).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn extra_predicted_clusters_count_as_errors() {
        let truth = [1, 1, 1, 2, 2, 2];
        let pred = [1, 1, 3, 2, 2, 4];
        assert!((misclustering_rate(&pred, &truth, 2).unwrap() - 2.0 / 6.0).abs() < 1e-15);
        // one predicted cluster for everything
        assert!((misclustering_rate(&[1; 6], &truth, 2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rate_errors() {
        assert!(misclustering_rate(&[1, 2], &[1], 2).is_err());
        assert!(misclustering_rate(&[1], &[3], 2).is_err());
        assert!(misclustering_rate(&[0], &[1], 2).is_err());
    }

    #[test]
    fn seeds_differ() {
        let s: Vec<u64> = (0..100).map(|t| derive_seed(42, t)).collect();
        let mut u = s.clone();
        u.sort();
        u.dedup();
        assert_eq!(u.len(), 100);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn stats_counts() {
        let s = TrialStats::from_rates(vec![0.2, 0.01, 0.07, 0.12], vec![2; 4], vec![], 0.1, 1.0);
        assert_eq!(s.median, 0.07);
        assert_eq!(s.count_below, [1, 2, 3]);
    }

    #[test]
    fn single_trial_median() {
        let spec = DatasetSpec::new(DatasetName::TwoSegments, 200, 0.0, 0);
        let method = Method::alg4(0.1, 2, 1);
        let stats = run_trials(&spec, &method, 1, 7).unwrap();
        assert_eq!(stats.median, stats.rates[0]);
        assert_eq!(stats.rates.len(), 1);
    }

    #[test]
    fn failures_become_notes() {
        let spec = DatasetSpec::new(DatasetName::TwoSegments, 20, 0.0, 0);
        // radius too large for two centers
        let stats = run_trials(&spec, &Method::alg4(50.0, 2, 1), 2, 0).unwrap();
        assert_eq!(stats.rates, vec![1.0, 1.0]);
        assert_eq!(stats.notes.len(), 2);
        assert_eq!(stats.count_below, [0, 0, 0]);
    }

    #[test]
    fn empty_sweep() {
        let spec = DatasetSpec::new(DatasetName::TwoCurvesAngle, 10, 0.0, 0);
        assert!(angle_sweep(&[], &spec, &Method::alg4(0.1, 2, 1), 1, 0).unwrap().is_empty());
    }
}
