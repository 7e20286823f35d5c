//! The command-line workflow driven in-process: generate a point-cloud CSV,
//! cluster it into a labels CSV plus a JSON report, then run a small
//! repeated-trial experiment. Everything lands in a scratch directory
//! (or the directory given as the first argument).
//!
//!     cargo run --release --example file_workflow -- /tmp/mm

use std::path::PathBuf;

use mmcluster::cli::{read_labels, read_point_cloud, run, ClusterReport, ExperimentReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("mmcluster-workflow"));
    std::fs::create_dir_all(&dir)?;
    let file = |name: &str| dir.join(name).to_string_lossy().into_owned();

    let (points, labels, report, experiment) =
        (file("spheres.csv"), file("labels.csv"), file("run.json"), file("experiment.json"));
    let status = run([
        "mmcluster", "generate", "--dataset", "two_spheres", "--n", "4000", "--tau", "0.01", "--seed", "3", "--out",
        &points,
    ]);
    assert_eq!(status, 0);
    let cloud = read_point_cloud(points.as_ref())?;
    println!("generated {} points in R^{} (seed {:?})", cloud.len(), cloud.dim(), cloud.seed());

    let status = run([
        "mmcluster", "cluster", &points, "--r", "0.2", "--d", "2", "--seed", "3", "--out", &labels, "--report",
        &report,
    ]);
    assert_eq!(status, 0);
    let summary: ClusterReport = serde_json::from_str(&std::fs::read_to_string(&report)?)?;
    println!(
        "clustered into {} groups of sizes {:?}; eps {:.4}, eta {:.4}, misclustering {:.2}%",
        summary.k_found,
        summary.cluster_sizes,
        summary.eps_used.unwrap_or(f64::NAN),
        summary.eta_used.unwrap_or(f64::NAN),
        100.0 * summary.misclustering.unwrap_or(f64::NAN)
    );
    println!("{} labels written to {labels}", read_labels(labels.as_ref())?.len());

    let status = run([
        "mmcluster", "experiment", "--dataset", "two_segments", "--tau", "0.01", "--r", "0.05", "--trials", "10",
        "--seed", "1", "--out", &experiment,
    ]);
    assert_eq!(status, 0);
    let parsed = ExperimentReport::from_json(&std::fs::read_to_string(&experiment)?)?;
    println!("experiment report with {} row(s) saved to {experiment}", parsed.rows.len());
    Ok(())
}
