//! The `mmcluster` command line: `generate`, `cluster` and `experiment`
//! subcommands, plus the file formats they read and write.
//!
//! Point clouds are CSV files with `#` metadata lines above a header row
//! `x0,…,x{D-1}` optionally followed by `label`. Coordinates are written with
//! 17 significant digits so that they re-parse to the same values.
//! Reports are JSON documents.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::affinity::ScaleParams;
use crate::cluster::CenterAffinity;
use crate::datasets::{generate, DatasetName, DatasetSpec};
use crate::error::{Error, Result};
use crate::eval::{misclustering_rate, run_method, run_trials, Method, TrialStats, THRESHOLDS};
use crate::linalg::NormMode;
use crate::neighborhoods::PointCloud;

/// Default neighborhood size for the Wang affinity.
pub const WANG_DEFAULT_ELL: usize = 10;
/// Default neighbor rank for the self-tuning scales of the Gong affinity.
pub const GONG_DEFAULT_ELL: usize = 7;

#[derive(Debug, Parser)]
#[command(name = "mmcluster", version, about = "Multi-manifold clustering with local PCA")]
pub struct Cli {
    /// Worker threads for parallel steps (defaults to all cores).
    #[arg(long, env = "MMCLUSTER_THREADS", global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic dataset and write it as CSV.
    Generate(GenerateArgs),
    /// Cluster a point-cloud file.
    Cluster(ClusterArgs),
    /// Run repeated trials and report misclustering statistics.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long, value_parser = parse_dataset)]
    pub dataset: Option<DatasetName>,
    /// Points per cluster (1000 on curves and 4000 on surfaces by default).
    #[arg(long)]
    pub n: Option<usize>,
    /// Noise bound.
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    /// Ambient dimension (defaults to the dataset's own).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Sample proportionally to length or area instead of equal counts.
    #[arg(long)]
    pub measure_proportional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    Alg2,
    Alg3,
    Alg4,
    NjwBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AffinityName {
    Cov,
    Proj,
    Gauss,
    Wang,
    Gong,
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodName::Alg4)]
    pub method: MethodName,
    /// Neighborhood radius (defaults to a per-dataset value in experiments).
    #[arg(long)]
    pub r: Option<f64>,
    /// Spatial scale (automatic for alg4 when omitted).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Covariance or projection scale (automatic for alg4 when omitted).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Number of clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// Intrinsic dimension.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_enum)]
    pub affinity: Option<AffinityName>,
    #[arg(long, value_parser = parse_norm, default_value = "spectral")]
    pub norm: NormMode,
    /// Neighbor count for the wang and gong affinities.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Exponent of the wang affinity.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Intersection angle in radians.
    #[arg(long)]
    pub angle: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    /// Point-cloud CSV to cluster.
    pub input: PathBuf,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Labels CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the JSON run report (printed when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Intersection angles; repeat for a sweep over `two_curves_angle`.
    #[arg(long)]
    pub angle: Vec<f64>,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_dataset(s: &str) -> std::result::Result<DatasetName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_norm(s: &str) -> std::result::Result<NormMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

impl DataArgs {
    fn spec(&self, name: DatasetName, angle: Option<f64>, seed: u64) -> DatasetSpec {
        DatasetSpec {
            name,
            n_per_cluster: self.n.unwrap_or(name.suggested_n_per_cluster()),
            tau: self.tau,
            angle,
            seed,
            dim: self.dim,
            measure_proportional: self.measure_proportional,
        }
    }
}

impl MethodArgs {
    /// Builds the method, filling `k`, `d` and `r` from the given defaults
    /// when they were not passed.
    pub fn resolve(&self, k: Option<usize>, d: Option<usize>, r: Option<f64>) -> Result<Method> {
        let r = self.r.or(r).ok_or_else(|| usage("--r is required"))?;
        let scale = |what: &str| -> Result<ScaleParams> {
            Ok(ScaleParams {
                r,
                eps: self.eps.ok_or_else(|| usage(format!("--eps is required for {what}")))?,
                eta: self.eta.ok_or_else(|| usage(format!("--eta is required for {what}")))?,
                tau: 0.0,
            })
        };
        let method = match (self.method, self.affinity) {
            (MethodName::Alg2, None | Some(AffinityName::Cov)) => Method::Alg2 {
                params: scale("alg2")?,
                norm: self.norm,
            },
            (MethodName::Alg3, None | Some(AffinityName::Proj)) => {
                let params = scale("alg3")?;
                if params.eta >= 1.0 {
                    return Err(usage("alg3 requires --eta below 1"));
                }
                Method::Alg3 { params, norm: self.norm }
            }
            (MethodName::Alg4, a @ (None | Some(AffinityName::Gauss | AffinityName::Wang | AffinityName::Gong))) => {
                let affinity = match a {
                    Some(AffinityName::Wang) => CenterAffinity::Wang {
                        ell: self.ell.unwrap_or(WANG_DEFAULT_ELL),
                        alpha: self.alpha,
                    },
                    Some(AffinityName::Gong) => CenterAffinity::Gong {
                        ell: self.ell.unwrap_or(GONG_DEFAULT_ELL),
                    },
                    _ => CenterAffinity::Gauss,
                };
                Method::Alg4 {
                    r,
                    k: self.k.or(k).ok_or_else(|| usage("--k is required for alg4"))?,
                    d: self.d.or(d).ok_or_else(|| usage("--d is required for alg4"))?,
                    eps: self.eps,
                    eta: self.eta,
                    norm: self.norm,
                    affinity,
                }
            }
            (MethodName::NjwBaseline, None) => Method::NjwBaseline {
                r,
                k: self.k.or(k).ok_or_else(|| usage("--k is required for njw_baseline"))?,
                eps: self.eps,
            },
            (m, Some(a)) => {
                return Err(usage(format!(
                    "--affinity {} does not apply to --method {}",
                    a.to_possible_value().unwrap().get_name(),
                    m.to_possible_value().unwrap().get_name()
                )))
            }
        };
        if !(r > 0.0 && r.is_finite()) {
            return Err(usage(format!("--r must be positive, got {r}")));
        }
        Ok(method)
    }
}

/// Formats a point cloud as CSV, with the seed and generating spec (if any)
/// in `#` comment lines.
pub fn point_cloud_to_csv(cloud: &PointCloud, spec: Option<&DatasetSpec>) -> String {
    let mut out = String::new();
    if let Some(seed) = cloud.seed() {
        writeln!(out, "# seed: {seed}").unwrap();
    }
    if let Some(spec) = spec {
        writeln!(out, "# spec: {}", serde_json::to_string(spec).unwrap()).unwrap();
    }
    let mut header: Vec<String> = (0..cloud.dim()).map(|k| format!("x{k}")).collect();
    if cloud.labels().is_some() {
        header.push("label".into());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, p) in cloud.points().enumerate() {
        let mut fields: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
        if let Some(labels) = cloud.labels() {
            fields.push(labels[i].to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parses [`point_cloud_to_csv`] output. `path` only labels error messages.
pub fn parse_point_cloud(text: &str, path: &Path) -> Result<PointCloud> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut seed = None;
    for line in text.lines().filter(|l| l.starts_with('#')) {
        if let Some(v) = line.trim_start_matches('#').trim().strip_prefix("seed:") {
            seed = Some(v.trim().parse::<u64>().map_err(|e| parse_err(format!("bad seed: {e}")))?);
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    let has_labels = header.iter().next_back() == Some("label");
    let dim = header.len() - usize::from(has_labels);
    if dim == 0 {
        return Err(parse_err("no coordinate columns".into()));
    }
    for (k, name) in header.iter().take(dim).enumerate() {
        if name != format!("x{k}") {
            return Err(parse_err(format!("column {k} is named '{name}', expected 'x{k}'")));
        }
    }
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        for k in 0..dim {
            let v: f64 = record[k]
                .parse()
                .map_err(|e| parse_err(format!("row {}: {e}", row + 1)))?;
            coords.push(v);
        }
        if has_labels {
            labels.push(
                record[dim]
                    .parse::<usize>()
                    .map_err(|e| parse_err(format!("row {}: {e}", row + 1)))?,
            );
        }
    }
    if coords.is_empty() {
        return Err(parse_err("no data rows".into()));
    }
    let mut cloud = PointCloud::new(dim, coords).map_err(|e| parse_err(e.to_string()))?;
    if has_labels {
        cloud = cloud.with_labels(labels).map_err(|e| parse_err(e.to_string()))?;
    }
    if let Some(seed) = seed {
        cloud = cloud.with_seed(seed);
    }
    Ok(cloud)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    parse_point_cloud(&read_file(path)?, path)
}

pub fn write_point_cloud(path: &Path, cloud: &PointCloud, spec: Option<&DatasetSpec>) -> Result<()> {
    write_file(path, &point_cloud_to_csv(cloud, spec))
}

/// One `label` column, 1-based.
pub fn labels_to_csv(labels: &[usize]) -> String {
    let mut out = String::from("label\n");
    for l in labels {
        writeln!(out, "{l}").unwrap();
    }
    out
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("label") {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: "expected a 'label' header".into(),
        });
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim().parse().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: format!("{e}"),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClusterReport {
    pub input: PathBuf,
    pub n: usize,
    pub dim: usize,
    #[serde(flatten)]
    pub method: Method,
    pub seed: u64,
    /// Spatial scale actually used.
    pub eps_used: Option<f64>,
    /// Covariance or projection scale actually used.
    pub eta_used: Option<f64>,
    pub num_centers: Option<usize>,
    pub k_found: usize,
    pub cluster_sizes: Vec<usize>,
    pub removed: Option<usize>,
    pub runtime_ms: f64,
    /// Present when the input carries ground-truth labels.
    pub misclustering: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentRow {
    pub dataset: DatasetSpec,
    pub method: Method,
    pub stats: TrialStats,
}

/// Output of `mmcluster experiment`. Contains no timings, so equal seeds
/// give byte-identical reports.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub trials: usize,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap();
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad experiment report: {e}")))
    }

    /// Aligned plain-text table, one row per dataset (and angle).
    pub fn table(&self) -> String {
        let mut rows = vec![[
            "dataset".to_string(),
            "angle".into(),
            "method".into(),
            "r".into(),
            "r/R".into(),
            "median".into(),
            format!("<{:.0}%", THRESHOLDS[0] * 100.0),
            format!("<{:.0}%", THRESHOLDS[1] * 100.0),
            format!("<{:.0}%", THRESHOLDS[2] * 100.0),
            "failed".into(),
        ]];
        for row in &self.rows {
            let s = &row.stats;
            rows.push([
                row.dataset.name.to_string(),
                if row.dataset.name.takes_angle() {
                    format!("{:.4}", row.dataset.angle_or_default())
                } else {
                    "-".into()
                },
                row.method.name().into(),
                format!("{:.4}", s.r_used),
                format!("{:.3}", s.r_over_radius),
                format!("{:.2}%", 100.0 * s.median),
                s.count_below[0].to_string(),
                s.count_below[1].to_string(),
                s.count_below[2].to_string(),
                s.notes.len().to_string(),
            ]);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap())
            .collect();
        let mut out = String::new();
        for r in &rows {
            let cells: Vec<String> = r.iter().zip(&widths).map(|(v, &w)| format!("{v:>w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Writes the sampled dataset; returns the generated cloud.
pub fn cmd_generate(args: &GenerateArgs) -> Result<PointCloud> {
    let name = args.data.dataset.ok_or_else(|| usage("--dataset is required"))?;
    let spec = args.data.spec(name, args.angle, args.seed);
    let data = generate(&spec)?;
    write_point_cloud(&args.out, &data.cloud, Some(&spec))?;
    Ok(data.cloud)
}

/// Clusters the input file, writes labels if asked and returns the report.
pub fn cmd_cluster(args: &ClusterArgs) -> Result<(ClusterReport, Vec<usize>)> {
    let cloud = read_point_cloud(&args.input)?;
    let k_truth = cloud.num_clusters();
    let method = args.method.resolve(k_truth, None, None)?;
    let start = Instant::now();
    let out = run_method(&cloud, &method, args.seed)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let labels = out.labeling.assignments().to_vec();
    let misclustering = match (cloud.labels(), k_truth) {
        (Some(truth), Some(k)) => Some(misclustering_rate(&labels, truth, k)?),
        _ => None,
    };
    let report = ClusterReport {
        input: args.input.clone(),
        n: cloud.len(),
        dim: cloud.dim(),
        method,
        seed: args.seed,
        eps_used: out.eps,
        eta_used: out.eta,
        num_centers: out.num_centers,
        k_found: out.labeling.k_found(),
        cluster_sizes: out.labeling.cluster_sizes(),
        removed: out.labeling.removed().map(<[usize]>::len),
        runtime_ms,
        misclustering,
    };
    if let Some(path) = &args.out {
        write_file(path, &labels_to_csv(&labels))?;
    }
    if let Some(path) = &args.report {
        write_file(path, &(serde_json::to_string_pretty(&report).unwrap() + "\n"))?;
    }
    Ok((report, labels))
}

/// Runs the trials for every requested dataset (all surface and curve
/// datasets except `two_curves_angle` when none is named) and writes the
/// report if asked.
pub fn cmd_experiment(args: &ExperimentArgs) -> Result<ExperimentReport> {
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let names: Vec<DatasetName> = match args.data.dataset {
        Some(name) => vec![name],
        None => DatasetName::ALL
            .into_iter()
            .filter(|n| *n != DatasetName::TwoCurvesAngle)
            .collect(),
    };
    let mut rows = Vec::new();
    for name in names {
        let angles: Vec<Option<f64>> = if args.angle.is_empty() || !name.takes_angle() {
            vec![None]
        } else {
            args.angle.iter().copied().map(Some).collect()
        };
        let method = args.method.resolve(
            Some(name.num_clusters()),
            Some(name.intrinsic_dim()),
            Some(name.default_radius()),
        )?;
        for angle in angles {
            let spec = args.data.spec(name, angle, args.seed);
            let stats = run_trials(&spec, &method, args.trials, args.seed)?;
            rows.push(ExperimentRow {
                dataset: spec,
                method: method.clone(),
                stats,
            });
        }
    }
    let report = ExperimentReport {
        seed: args.seed,
        trials: args.trials,
        rows,
    };
    if let Some(path) = &args.out {
        write_file(path, &report.to_json())?;
    }
    Ok(report)
}

/// Exit status for an error: 2 for usage, parse and I/O problems, 1 for
/// failures of the algorithms themselves.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::UnknownDataset(_)
        | Error::Io { .. }
        | Error::Parse { .. }
        | Error::DimensionMismatch { .. } => 2,
        _ => 1,
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(args) => {
            let cloud = cmd_generate(args)?;
            eprintln!("wrote {} points to {}", cloud.len(), args.out.display());
        }
        Command::Cluster(args) => {
            let (report, _) = cmd_cluster(args)?;
            if args.report.is_none() {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                eprintln!("found {} clusters", report.k_found);
            }
        }
        Command::Experiment(args) => {
            let report = cmd_experiment(args)?;
            print!("{}", report.table());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let spec = DatasetSpec::new(DatasetName::TwoSegments, 5, 0.01, 11);
        let cloud = generate(&spec).unwrap().cloud;
        let text = point_cloud_to_csv(&cloud, Some(&spec));
        assert!(text.contains("\nx0,x1,label\n"));
        let back = parse_point_cloud(&text, Path::new("mem")).unwrap();
        assert_eq!(back, cloud);
    }

    #[test]
    fn csv_without_labels() {
        let text = "x0,x1\n1.5,2\n3,4\n";
        let cloud = parse_point_cloud(text, Path::new("mem")).unwrap();
        assert_eq!(cloud.len(), 2);
        assert!(cloud.labels().is_none());
        assert!(parse_point_cloud("a,b\n1,2\n", Path::new("mem")).is_err());
        assert!(parse_point_cloud("x0\nnope\n", Path::new("mem")).is_err());
    }

    #[test]
    fn method_resolution() {
        let cli = Cli::try_parse_from(["mmcluster", "cluster", "in.csv", "--method", "alg3", "--r", "0.1", "--eps", "0.3"])
            .unwrap();
        let Command::Cluster(args) = cli.command else { panic!() };
        // eta missing
        assert!(args.method.resolve(None, None, None).is_err());

        let cli = Cli::try_parse_from(["mmcluster", "cluster", "in.csv", "--affinity", "cov", "--r", "0.1"]).unwrap();
        let Command::Cluster(args) = cli.command else { panic!() };
        assert!(args.method.resolve(Some(2), Some(1), None).is_err());

        let cli = Cli::try_parse_from([
            "mmcluster", "cluster", "in.csv", "--affinity", "wang", "--r", "0.1", "--k", "2", "--d", "1",
        ])
        .unwrap();
        let Command::Cluster(args) = cli.command else { panic!() };
        let m = args.method.resolve(None, None, None).unwrap();
        assert!(matches!(
            m,
            Method::Alg4 {
                affinity: CenterAffinity::Wang { ell: WANG_DEFAULT_ELL, .. },
                ..
            }
        ));
    }

    #[test]
    fn table_has_header_and_rows() {
        let report = ExperimentReport {
            seed: 1,
            trials: 1,
            rows: vec![ExperimentRow {
                dataset: DatasetSpec::new(DatasetName::TwoSpheres, 10, 0.0, 1),
                method: Method::alg4(0.1, 2, 2),
                stats: TrialStats::from_rates(vec![0.02], vec![2], vec![], 0.1, 2.0),
            }],
        };
        let t = report.table();
        assert_eq!(t.lines().count(), 2);
        assert!(t.contains("two_spheres"));
        assert!(t.contains("2.00%"));
        assert_eq!(ExperimentReport::from_json(&report.to_json()).unwrap(), report);
    }
}
