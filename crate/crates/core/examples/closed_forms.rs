//! Local covariances and tangent projections on two crossing segments,
//! measured on a dense grid and compared with their closed forms.
//!
//! Away from the crossing, the covariance at the end of a segment differs
//! from the covariance at its middle by `r²/4`, while two segments meeting
//! at angle θ differ by only `√2 r² sin θ / 3`. For shallow angles the
//! boundary effect dominates; the rank-one projections do not suffer from it.
//!
//!     cargo run --release --example closed_forms

use mmcluster::linalg::NormMode;
use mmcluster::local_pca::{estimate_projection, local_covariance};
use mmcluster::neighborhoods::{NeighborhoodIndex, PointCloud};

fn two_segments(theta: f64, per_segment: usize) -> PointCloud {
    let h = 2.0 / per_segment as f64;
    let mut pts = Vec::with_capacity(2 * per_segment);
    for i in 0..per_segment {
        let t = -1.0 + (i as f64 + 0.5) * h;
        pts.push(vec![t, 0.0]);
        pts.push(vec![t * theta.cos(), t * theta.sin()]);
    }
    PointCloud::from_points(&pts).expect("finite grid")
}

fn main() -> mmcluster::Result<()> {
    let r = 0.1;
    println!("r = {r}, 10^5 grid points");
    println!(
        "{:>7} {:>14} {:>14} {:>14} {:>14} {:>12} {:>12}",
        "theta", "|C0-C1|", "r^2/4", "|C1-C2|_F", "sqrt2 r^2 s/3", "|Q1-Q2|_F", "sqrt2 s"
    );
    for degrees in [90.0f64, 60.0, 45.0, 32.0, 20.0] {
        let theta = degrees.to_radians();
        let cloud = two_segments(theta, 50_000);
        let index = NeighborhoodIndex::build(&cloud);
        let c0 = local_covariance(&index, &[1.0, 0.0], r)?;
        let c1 = local_covariance(&index, &[0.5, 0.0], r)?;
        let c2 = local_covariance(&index, &[0.5 * theta.cos(), 0.5 * theta.sin()], r)?;
        let q1 = estimate_projection(&c1, 1)?;
        let q2 = estimate_projection(&c2, 1)?;
        let s = theta.sin();
        println!(
            "{:>6.0}° {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>12.6} {:>12.6}",
            degrees,
            NormMode::Frobenius.distance(&c0, &c1),
            r * r / 4.0,
            NormMode::Frobenius.distance(&c1, &c2),
            2f64.sqrt() * r * r * s / 3.0,
            NormMode::Frobenius.distance(&q1, &q2),
            2f64.sqrt() * s,
        );
    }
    Ok(())
}
