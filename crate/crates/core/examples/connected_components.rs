//! The two connected-components methods on a noiseless right-angle crossing.
//!
//! Covariance comparison removes the points whose neighborhoods see the
//! crossing, links the rest and reattaches the removed points to their
//! nearest survivor. Projection comparison estimates a local dimension
//! instead; near the crossing it sees a plane, so the crossing typically
//! becomes a small group of its own.
//!
//!     cargo run --release --example connected_components

use std::f64::consts::FRAC_PI_2;

use mmcluster::affinity::ScaleParams;
use mmcluster::cluster::{algorithm2_cov_components, algorithm3_proj_components, Labeling};
use mmcluster::datasets::{generate, DatasetName, DatasetSpec};
use mmcluster::eval::misclustering_rate;
use mmcluster::linalg::NormMode;
use mmcluster::neighborhoods::PointCloud;

fn describe(name: &str, labeling: &Labeling, cloud: &PointCloud) -> mmcluster::Result<()> {
    let truth = cloud.labels().expect("labeled");
    let mut sizes = labeling.cluster_sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    print!("{name}: {} groups, sizes {sizes:?}", labeling.k_found());
    if let Some(removed) = labeling.removed() {
        print!(", {} points removed then reattached", removed.len());
    }
    println!(", misclustering {:.2}%", 100.0 * misclustering_rate(labeling.assignments(), truth, 2)?);
    Ok(())
}

fn main() -> mmcluster::Result<()> {
    let spec = DatasetSpec::new(DatasetName::TwoSegments, 2000, 0.0, 5).with_angle(FRAC_PI_2);
    let cloud = generate(&spec)?.cloud;
    // tau << r << eps, with eta well above the noise level
    let params = ScaleParams {
        r: 0.05,
        eps: 0.3,
        eta: 0.13,
        tau: 0.0,
    };
    describe("covariance comparison", &algorithm2_cov_components(&cloud, &params, NormMode::Spectral)?, &cloud)?;
    describe("projection comparison", &algorithm3_proj_components(&cloud, &params, NormMode::Spectral)?, &cloud)?;
    Ok(())
}
