//! Compares the center affinities available to local PCA spectral
//! clustering on the three-curve dataset: the Gaussian product of distance
//! and projection distance, the principal-angle kernel on an ℓ-NN graph, the
//! self-tuned kernel with an angle term, and distance alone.
//!
//!     cargo run --release --example affinity_kernels -- [trials]

use mmcluster::cluster::CenterAffinity;
use mmcluster::datasets::{DatasetName, DatasetSpec};
use mmcluster::eval::{run_trials, Method};
use mmcluster::linalg::NormMode;

fn main() -> mmcluster::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let spec = DatasetSpec::new(DatasetName::ThreeCurves, 1000, 0.01, 0);
    let r = DatasetName::ThreeCurves.default_radius();
    let k = DatasetName::ThreeCurves.num_clusters();

    let kernels = [
        ("gaussian product", CenterAffinity::Gauss),
        ("principal angles", CenterAffinity::Wang { ell: 10, alpha: 1.0 }),
        ("self-tuned", CenterAffinity::Gong { ell: 7 }),
        ("distance only", CenterAffinity::Distance),
    ];
    println!("{trials} trials, r = {r}");
    for (label, affinity) in kernels {
        let method = Method::Alg4 {
            r,
            k,
            d: 1,
            eps: None,
            eta: None,
            norm: NormMode::Spectral,
            affinity,
        };
        let stats = run_trials(&spec, &method, trials, 1)?;
        println!(
            "{label:>17}: median {:6.2}%, below 5% in {}/{trials}",
            100.0 * stats.median,
            stats.count_below[0]
        );
    }
    Ok(())
}
