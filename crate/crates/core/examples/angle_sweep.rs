//! Misclustering of local PCA spectral clustering as two curved arcs meet at
//! shallower and shallower angles.
//!
//!     cargo run --release --example angle_sweep -- [trials]

use std::f64::consts::PI;

use mmcluster::cli::{ExperimentReport, ExperimentRow};
use mmcluster::datasets::{DatasetName, DatasetSpec};
use mmcluster::eval::{angle_sweep, Method};

fn main() -> mmcluster::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let template = DatasetSpec::new(DatasetName::TwoCurvesAngle, 1500, 0.005, 0);
    let method = Method::alg4(0.02, 2, 1);
    let angles = [PI / 2.0, PI / 3.0, PI / 4.0, PI / 6.0, PI / 8.0];
    let seed = 2;

    let rows = angle_sweep(&angles, &template, &method, trials, seed)?
        .into_iter()
        .map(|row| ExperimentRow {
            dataset: template.clone().with_angle(row.angle),
            method: method.clone(),
            stats: row.stats,
        })
        .collect();
    let report = ExperimentReport { seed, trials, rows };
    print!("{}", report.table());
    Ok(())
}
