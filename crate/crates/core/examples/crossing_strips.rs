//! Two noisy strips crossing at a right angle, clustered with local PCA
//! spectral clustering and with plain distance-based spectral clustering on
//! the same centers.
//!
//! Pass a directory to also write plot-ready CSV files (points with the
//! true label and both predicted labels):
//!
//!     cargo run --release --example crossing_strips -- /tmp/strips

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use mmcluster::datasets::{generate, DatasetName, DatasetSpec};
use mmcluster::eval::{misclustering_rate, run_method, Method};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DatasetSpec::new(DatasetName::TwoSegments, 1000, 0.01, 7).with_angle(FRAC_PI_2);
    let data = generate(&spec)?;
    let truth = data.cloud.labels().expect("generated clouds are labeled");

    let methods = [
        Method::alg4(0.05, 2, 1),
        Method::NjwBaseline {
            r: 0.05,
            k: 2,
            eps: None,
        },
    ];
    let mut predictions = Vec::new();
    for method in &methods {
        let out = run_method(&data.cloud, method, 7)?;
        let rate = misclustering_rate(out.labeling.assignments(), truth, 2)?;
        println!(
            "{:>12}: {} centers, eps {:.4}, eta {}, misclustering {:.2}%",
            method.name(),
            out.num_centers.unwrap_or(0),
            out.eps.unwrap_or(f64::NAN),
            out.eta.map_or("-".to_string(), |e| format!("{e:.4}")),
            100.0 * rate
        );
        predictions.push(out.labeling.assignments().to_vec());
    }

    if let Some(dir) = std::env::args().nth(1) {
        std::fs::create_dir_all(&dir)?;
        let mut csv = String::from("x0,x1,truth,local_pca,distance_only\n");
        for (i, p) in data.cloud.points().enumerate() {
            writeln!(csv, "{},{},{},{},{}", p[0], p[1], truth[i], predictions[0][i], predictions[1][i]).unwrap();
        }
        let path = std::path::Path::new(&dir).join("crossing_strips.csv");
        std::fs::write(&path, csv)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
