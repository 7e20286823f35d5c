//! Spectral graph partitioning on its own: three noisy groups in an affinity
//! matrix, their normalized spectral embedding, and the recovered partition.
//!
//!     cargo run --release --example spectral_partition

use mmcluster::affinity::AffinityMatrix;
use mmcluster::cluster::{njw_partition, spectral_embedding, KMeansConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mmcluster::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let groups = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 2];
    let n = groups.len();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        w[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let v = if groups[i] == groups[j] {
                rng.random_range(0.5..1.0)
            } else {
                rng.random_range(0.0..0.1)
            };
            w[i * n + j] = v;
            w[j * n + i] = v;
        }
    }
    let w = AffinityMatrix::new(n, w)?;

    println!("embedding rows (unit length):");
    for (i, row) in spectral_embedding(&w, 3)?.iter().enumerate() {
        let coords: Vec<String> = row.iter().map(|x| format!("{x:+.3}")).collect();
        println!("  node {i:>2} (group {}): [{}]", groups[i], coords.join(", "));
    }
    let labels = njw_partition(&w, 3, &mut rng, &KMeansConfig::default())?;
    println!("partition: {:?}", labels.assignments());
    Ok(())
}
