//! Runs local PCA spectral clustering over every benchmark dataset at its
//! default radius and prints the summary table (median misclustering and
//! how often it stays below 5, 10 and 15 percent).
//!
//! Surface datasets use 4000 points per cluster, so a full run takes a
//! while; the trial count defaults to 3.
//!
//!     cargo run --release --example benchmark_datasets -- [trials]

use mmcluster::cli::{ExperimentReport, ExperimentRow};
use mmcluster::datasets::{DatasetName, DatasetSpec};
use mmcluster::eval::{run_trials, Method};

fn main() -> mmcluster::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let seed = 0;
    let mut rows = Vec::new();
    for name in DatasetName::ALL {
        if name == DatasetName::TwoCurvesAngle {
            continue;
        }
        let dataset = DatasetSpec::new(name, name.suggested_n_per_cluster(), 0.01, seed);
        let method = Method::alg4(name.default_radius(), name.num_clusters(), name.intrinsic_dim());
        let stats = run_trials(&dataset, &method, trials, seed)?;
        eprintln!("{name}: done");
        rows.push(ExperimentRow { dataset, method, stats });
    }
    print!("{}", ExperimentReport { seed, trials, rows }.table());
    Ok(())
}
