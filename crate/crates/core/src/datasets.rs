//! Seedable synthetic data: points sampled uniformly (by arclength or area)
//! from unions of curves and surfaces, plus bounded noise.
//!
//! Parametrizations:
//!
//! | name | K | d | D | surfaces |
//! |---|---|---|---|---|
//! | `two_segments` | 2 | 1 | 2 | `[-1,1]×{0}` and `{(x, x tan θ) : |x| ≤ cos θ}` |
//! | `two_curves_angle` | 2 | 1 | 2 | `y = x²/2` for `|x| ≤ 0.7`, and the same arc rotated by θ about the origin |
//! | `three_curves` | 3 | 1 | 2 | through `c = (½,½)`: `c + (t, 0.6t + 0.8t²)`, `c + (t, -0.6t + 0.8t²)`, `c + (0.8t², t)`, `|t| ≤ ½` |
//! | `self_intersecting_curves` | 2 | 1 | 2 | figure-eights `(sin t, ½ sin 2t)` and `(1.2 - ½ sin 2t, sin t)` |
//! | `two_spheres` | 2 | 2 | 3 | unit spheres centered at the origin and at `(1.5, 0, 0)` |
//! | `mobius_strips` | 2 | 2 | 3 | `((2 + v cos(u/2)) cos u, (2 + v cos(u/2)) sin u, v sin(u/2))`, `|v| ≤ ½`, and its rotation by π/2 about the y axis |
//! | `monkey_saddle` | 2 | 2 | 3 | `z = x³ - 3xy²` over the unit disk, and the square `y = 0`, `|x|, |z| ≤ 1` |
//! | `paraboloids` | 2 | 2 | 3 | `z = ±((x² + y²)/2 - ¼)` over the unit disk |
//!
//! Noise is uniform in the ambient ball of radius τ. When a larger ambient
//! dimension is requested, the surfaces are embedded by zero padding.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::neighborhoods::{dist, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetName {
    TwoSegments,
    ThreeCurves,
    SelfIntersectingCurves,
    TwoSpheres,
    MobiusStrips,
    MonkeySaddle,
    Paraboloids,
    TwoCurvesAngle,
}

impl DatasetName {
    pub const ALL: [DatasetName; 8] = [
        DatasetName::TwoSegments,
        DatasetName::ThreeCurves,
        DatasetName::SelfIntersectingCurves,
        DatasetName::TwoSpheres,
        DatasetName::MobiusStrips,
        DatasetName::MonkeySaddle,
        DatasetName::Paraboloids,
        DatasetName::TwoCurvesAngle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::TwoSegments => "two_segments",
            DatasetName::ThreeCurves => "three_curves",
            DatasetName::SelfIntersectingCurves => "self_intersecting_curves",
            DatasetName::TwoSpheres => "two_spheres",
            DatasetName::MobiusStrips => "mobius_strips",
            DatasetName::MonkeySaddle => "monkey_saddle",
            DatasetName::Paraboloids => "paraboloids",
            DatasetName::TwoCurvesAngle => "two_curves_angle",
        }
    }

    /// Whether the `angle` field of a spec applies.
    pub fn takes_angle(self) -> bool {
        matches!(self, DatasetName::TwoSegments | DatasetName::TwoCurvesAngle)
    }

    pub fn intrinsic_dim(self) -> usize {
        match self {
            DatasetName::TwoSpheres
            | DatasetName::MobiusStrips
            | DatasetName::MonkeySaddle
            | DatasetName::Paraboloids => 2,
            _ => 1,
        }
    }

    pub fn natural_ambient_dim(self) -> usize {
        self.intrinsic_dim() + 1
    }

    /// Hand-picked neighborhood radius for small noise and the suggested
    /// sample size ([`DatasetName::suggested_n_per_cluster`]).
    pub fn default_radius(self) -> f64 {
        match self {
            DatasetName::TwoSegments => 0.05,
            DatasetName::TwoCurvesAngle => 0.02,
            DatasetName::ThreeCurves => 0.03,
            DatasetName::SelfIntersectingCurves => 0.05,
            DatasetName::TwoSpheres => 0.2,
            DatasetName::MobiusStrips => 0.35,
            DatasetName::MonkeySaddle => 0.12,
            DatasetName::Paraboloids => 0.12,
        }
    }

    /// Points per cluster: 1000 on curves, 4000 on surfaces.
    pub fn suggested_n_per_cluster(self) -> usize {
        if self.intrinsic_dim() == 1 {
            1000
        } else {
            4000
        }
    }

    pub fn num_clusters(self) -> usize {
        match self {
            DatasetName::ThreeCurves => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DatasetSpec {
    pub name: DatasetName,
    pub n_per_cluster: usize,
    pub tau: f64,
    /// Intersection angle in radians for `two_segments` / `two_curves_angle`;
    /// defaults to π/2.
    pub angle: Option<f64>,
    pub seed: u64,
    /// Ambient dimension; defaults to the natural one (2 for curves, 3 for
    /// surfaces).
    pub dim: Option<usize>,
    /// Sample the union uniformly (cluster sizes proportional to length or
    /// area) instead of `n_per_cluster` points per cluster.
    #[serde(default)]
    pub measure_proportional: bool,
}

impl DatasetSpec {
    pub fn new(name: DatasetName, n_per_cluster: usize, tau: f64, seed: u64) -> Self {
        DatasetSpec {
            name,
            n_per_cluster,
            tau,
            angle: None,
            seed,
            dim: None,
            measure_proportional: false,
        }
    }

    pub fn with_angle(mut self, angle: f64) -> Self {
        self.angle = Some(angle);
        self
    }

    pub fn angle_or_default(&self) -> f64 {
        self.angle.unwrap_or(FRAC_PI_2)
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim.unwrap_or(self.name.natural_ambient_dim())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_cluster == 0 {
            return Err(invalid("n_per_cluster must be at least 1"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau must be finite and nonnegative, got {}", self.tau)));
        }
        if let Some(a) = self.angle {
            if !(a > 0.0 && a <= FRAC_PI_2) {
                return Err(invalid(format!("angle must lie in (0, π/2], got {a}")));
            }
        }
        if self.ambient_dim() < self.name.natural_ambient_dim() {
            return Err(invalid(format!(
                "{} needs ambient dimension at least {}",
                self.name,
                self.name.natural_ambient_dim()
            )));
        }
        Ok(())
    }
}

/// Height function of a graph surface `z = f(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Height {
    MonkeySaddle,
    /// `sign · ((x² + y²)/2 - offset)`
    Paraboloid { sign: f64, offset: f64 },
}

impl Height {
    fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            Height::MonkeySaddle => x * x * x - 3.0 * x * y * y,
            Height::Paraboloid { sign, offset } => sign * (0.5 * (x * x + y * y) - offset),
        }
    }

    fn gradient(self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Height::MonkeySaddle => (3.0 * x * x - 3.0 * y * y, -6.0 * x * y),
            Height::Paraboloid { sign, .. } => (sign * x, sign * y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `[-h, h]²`
    Square(f64),
    /// Disk of the given radius.
    Disk(f64),
}

impl Domain {
    fn half_extent(self) -> f64 {
        match self {
            Domain::Square(h) | Domain::Disk(h) => h,
        }
    }

    fn contains(self, x: f64, y: f64) -> bool {
        match self {
            Domain::Square(h) => x.abs() <= h && y.abs() <= h,
            Domain::Disk(r) => x * x + y * y <= r * r,
        }
    }
}

/// One generating curve or surface, in its natural ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    Segment { a: Vec<f64>, b: Vec<f64> },
    /// `origin + t u + (slope t + curvature t²) v` for `t ∈ [t0, t1]`.
    Quadratic {
        origin: [f64; 2],
        u: [f64; 2],
        v: [f64; 2],
        slope: f64,
        curvature: f64,
        t0: f64,
        t1: f64,
    },
    /// `center + R(rotation) (a sin t, b sin 2t)`, closed.
    FigureEight { center: [f64; 2], rotation: f64, a: f64, b: f64 },
    Sphere { center: [f64; 3], radius: f64 },
    /// Möbius band of half-width `half_width` around the circle of radius `radius`,
    /// rotated by `rotation` about the y axis.
    Mobius { radius: f64, rotation: f64, half_width: f64 },
    Graph { height: Height, domain: Domain },
    /// `origin + s e1 + t e2` for `|s|, |t| ≤ half`.
    Rectangle { origin: [f64; 3], e1: [f64; 3], e2: [f64; 3], half: f64 },
}

fn rotate2(theta: f64, p: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Surface {
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Surface::Segment { .. } | Surface::Quadratic { .. } | Surface::FigureEight { .. } => 1,
            _ => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Surface::Segment { a, .. } => a.len(),
            Surface::Quadratic { .. } | Surface::FigureEight { .. } => 2,
            _ => 3,
        }
    }

    /// Parameter box `[lo, hi]` per intrinsic coordinate.
    fn param_box(&self) -> Vec<(f64, f64)> {
        match self {
            Surface::Segment { .. } => vec![(0.0, 1.0)],
            Surface::Quadratic { t0, t1, .. } => vec![(*t0, *t1)],
            Surface::FigureEight { .. } => vec![(0.0, TAU)],
            Surface::Sphere { .. } => vec![(0.0, PI), (0.0, TAU)],
            Surface::Mobius { half_width, .. } => vec![(0.0, TAU), (-half_width, *half_width)],
            Surface::Graph { domain, .. } => {
                let h = domain.half_extent();
                vec![(-h, h), (-h, h)]
            }
            Surface::Rectangle { half, .. } => vec![(-half, *half), (-half, *half)],
        }
    }

    /// Parameter coordinates that wrap around.
    fn periodic(&self) -> Vec<bool> {
        match self {
            Surface::FigureEight { .. } => vec![true],
            Surface::Mobius { .. } => vec![true, false],
            Surface::Sphere { .. } => vec![false, true],
            s => vec![false; s.intrinsic_dim()],
        }
    }

    fn param_valid(&self, p: &[f64]) -> bool {
        match self {
            Surface::Graph { domain, .. } => domain.contains(p[0], p[1]),
            _ => true,
        }
    }

    /// Point at parameter `p`.
    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        match self {
            Surface::Segment { a, b } => a.iter().zip(b).map(|(x, y)| x + p[0] * (y - x)).collect(),
            Surface::Quadratic {
                origin,
                u,
                v,
                slope,
                curvature,
                ..
            } => {
                let t = p[0];
                let h = slope * t + curvature * t * t;
                vec![origin[0] + t * u[0] + h * v[0], origin[1] + t * u[1] + h * v[1]]
            }
            Surface::FigureEight { center, rotation, a, b } => {
                let t = p[0];
                let q = rotate2(*rotation, [a * t.sin(), b * (2.0 * t).sin()]);
                vec![center[0] + q[0], center[1] + q[1]]
            }
            Surface::Sphere { center, radius } => {
                let (st, ct) = p[0].sin_cos();
                let (sp, cp) = p[1].sin_cos();
                vec![
                    center[0] + radius * st * cp,
                    center[1] + radius * st * sp,
                    center[2] + radius * ct,
                ]
            }
            Surface::Mobius { radius, rotation, .. } => {
                let (u, v) = (p[0], p[1]);
                let w = radius + v * (0.5 * u).cos();
                let (x, y, z) = (w * u.cos(), w * u.sin(), v * (0.5 * u).sin());
                let (s, c) = rotation.sin_cos();
                vec![c * x + s * z, y, c * z - s * x]
            }
            Surface::Graph { height, .. } => vec![p[0], p[1], height.eval(p[0], p[1])],
            Surface::Rectangle { origin, e1, e2, .. } => {
                (0..3).map(|i| origin[i] + p[0] * e1[i] + p[1] * e2[i]).collect()
            }
        }
    }

    /// Arclength speed (curves) or area element (surfaces) at `p`.
    fn density(&self, p: &[f64]) -> f64 {
        match self {
            Surface::Segment { a, b } => dist(a, b),
            Surface::Sphere { radius, .. } => radius * radius * p[0].sin().abs(),
            Surface::Graph { height, .. } => {
                let (gx, gy) = height.gradient(p[0], p[1]);
                (1.0 + gx * gx + gy * gy).sqrt()
            }
            Surface::Rectangle { e1, e2, .. } => norm(&cross(e1, e2)),
            _ => {
                let h = 1e-6;
                let partial = |k: usize| -> Vec<f64> {
                    let mut lo = p.to_vec();
                    let mut hi = p.to_vec();
                    lo[k] -= h;
                    hi[k] += h;
                    self.eval(&hi).iter().zip(self.eval(&lo)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
                };
                if self.intrinsic_dim() == 1 {
                    norm(&partial(0))
                } else {
                    norm(&cross(&partial(0), &partial(1)))
                }
            }
        }
    }

    fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let bounds = self.param_box();
        let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
            (0..per_axis).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / per_axis as f64).collect()
        };
        if bounds.len() == 1 {
            axis(bounds[0]).into_iter().map(|t| vec![t]).collect()
        } else {
            let (us, vs) = (axis(bounds[0]), axis(bounds[1]));
            us.iter().flat_map(|&u| vs.iter().map(move |&v| vec![u, v])).collect()
        }
    }

    /// Length or area, by midpoint quadrature.
    pub fn measure(&self) -> f64 {
        match self {
            Surface::Segment { a, b } => dist(a, b),
            Surface::Sphere { radius, .. } => 4.0 * PI * radius * radius,
            _ => {
                let per_axis = if self.intrinsic_dim() == 1 { 20_000 } else { 400 };
                let cell: f64 = self.param_box().iter().map(|(lo, hi)| (hi - lo) / per_axis as f64).product();
                self.grid(per_axis)
                    .iter()
                    .filter(|p| self.param_valid(p))
                    .map(|p| self.density(p))
                    .sum::<f64>()
                    * cell
            }
        }
    }

    fn max_density(&self) -> f64 {
        let per_axis = if self.intrinsic_dim() == 1 { 4096 } else { 128 };
        1.05 * self
            .grid(per_axis)
            .iter()
            .filter(|p| self.param_valid(p))
            .map(|p| self.density(p))
            .fold(0.0, f64::max)
    }

    /// One point drawn uniformly with respect to length or area.
    pub fn sample(&self, rng: &mut impl Rng, max_density: f64) -> Vec<f64> {
        match self {
            Surface::Segment { .. } => self.eval(&[rng.random::<f64>()]),
            Surface::Sphere { center, radius } => {
                let g: Vec<f64> = (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let n = norm(&g);
                (0..3).map(|i| center[i] + radius * g[i] / n).collect()
            }
            _ => {
                let bounds = self.param_box();
                loop {
                    let p: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
                    if !self.param_valid(&p) {
                        continue;
                    }
                    if rng.random::<f64>() * max_density <= self.density(&p) {
                        return self.eval(&p);
                    }
                }
            }
        }
    }

    /// Euclidean distance from `x` (natural ambient dimension) to the surface.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Surface::Segment { a, b } => {
                let ab: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
                let ax: Vec<f64> = a.iter().zip(x).map(|(p, q)| q - p).collect();
                let t = (dot(&ab, &ax) / dot(&ab, &ab)).clamp(0.0, 1.0);
                dist(x, &self.eval(&[t]))
            }
            Surface::Sphere { center, radius } => (dist(x, center) - radius).abs(),
            Surface::Rectangle { origin, e1, e2, half } => {
                // e1, e2 orthonormal
                let rel: Vec<f64> = (0..3).map(|i| x[i] - origin[i]).collect();
                let s = dot(&rel, e1).clamp(-half, *half);
                let t = dot(&rel, e2).clamp(-half, *half);
                dist(x, &self.eval(&[s, t]))
            }
            _ => self.numeric_distance(x),
        }
    }

    fn wrap(&self, p: &mut [f64]) {
        let bounds = self.param_box();
        for (k, periodic) in self.periodic().into_iter().enumerate() {
            let (lo, hi) = bounds[k];
            if periodic {
                p[k] = lo + (p[k] - lo).rem_euclid(hi - lo);
            } else {
                p[k] = p[k].clamp(lo, hi);
            }
        }
        if let Surface::Graph { domain: Domain::Disk(r), .. } = self {
            let n = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if n > *r {
                p[0] *= r / n;
                p[1] *= r / n;
            }
        }
    }

    /// Coarse grid search followed by compass search from the best few
    /// starting parameters.
    fn numeric_distance(&self, x: &[f64]) -> f64 {
        let per_axis = if self.intrinsic_dim() == 1 { 2000 } else { 120 };
        let mut starts: Vec<(f64, Vec<f64>)> = self
            .grid(per_axis)
            .into_iter()
            .filter(|p| self.param_valid(p))
            .map(|p| (dist(x, &self.eval(&p)), p))
            .collect();
        starts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let bounds = self.param_box();
        let mut best = f64::INFINITY;
        for (d0, p0) in starts.into_iter().take(6) {
            let mut p = p0;
            let mut d = d0;
            let mut steps: Vec<f64> = bounds.iter().map(|(lo, hi)| 2.0 * (hi - lo) / per_axis as f64).collect();
            while steps.iter().any(|&s| s > 1e-13) {
                let mut improved = false;
                for k in 0..p.len() {
                    for sign in [1.0, -1.0] {
                        let mut q = p.clone();
                        q[k] += sign * steps[k];
                        self.wrap(&mut q);
                        let dq = dist(x, &self.eval(&q));
                        if dq < d {
                            d = dq;
                            p = q;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    steps.iter_mut().for_each(|s| *s *= 0.5);
                }
            }
            best = best.min(d);
        }
        best
    }
}

/// The generating surfaces of a dataset, indexed by `label - 1`.
pub fn surfaces(spec: &DatasetSpec) -> Vec<Surface> {
    let theta = spec.angle_or_default();
    match spec.name {
        DatasetName::TwoSegments => vec![
            Surface::Segment {
                a: vec![-1.0, 0.0],
                b: vec![1.0, 0.0],
            },
            Surface::Segment {
                a: vec![-theta.cos(), -theta.sin()],
                b: vec![theta.cos(), theta.sin()],
            },
        ],
        DatasetName::TwoCurvesAngle => {
            let arc = |rot: f64| Surface::Quadratic {
                origin: [0.0, 0.0],
                u: rotate2(rot, [1.0, 0.0]),
                v: rotate2(rot, [0.0, 1.0]),
                slope: 0.0,
                curvature: 0.5,
                t0: -0.7,
                t1: 0.7,
            };
            vec![arc(0.0), arc(theta)]
        }
        DatasetName::ThreeCurves => {
            let c = [0.5, 0.5];
            let arc = |u: [f64; 2], v: [f64; 2], slope: f64| Surface::Quadratic {
                origin: c,
                u,
                v,
                slope,
                curvature: 0.8,
                t0: -0.5,
                t1: 0.5,
            };
            vec![
                arc([1.0, 0.0], [0.0, 1.0], 0.6),
                arc([1.0, 0.0], [0.0, 1.0], -0.6),
                arc([0.0, 1.0], [1.0, 0.0], 0.0),
            ]
        }
        DatasetName::SelfIntersectingCurves => vec![
            Surface::FigureEight {
                center: [0.0, 0.0],
                rotation: 0.0,
                a: 1.0,
                b: 0.5,
            },
            Surface::FigureEight {
                center: [1.2, 0.0],
                rotation: FRAC_PI_2,
                a: 1.0,
                b: 0.5,
            },
        ],
        DatasetName::TwoSpheres => vec![
            Surface::Sphere {
                center: [0.0, 0.0, 0.0],
                radius: 1.0,
            },
            Surface::Sphere {
                center: [1.5, 0.0, 0.0],
                radius: 1.0,
            },
        ],
        DatasetName::MobiusStrips => vec![
            Surface::Mobius {
                radius: 2.0,
                rotation: 0.0,
                half_width: 0.5,
            },
            Surface::Mobius {
                radius: 2.0,
                rotation: FRAC_PI_2,
                half_width: 0.5,
            },
        ],
        DatasetName::MonkeySaddle => vec![
            Surface::Graph {
                height: Height::MonkeySaddle,
                domain: Domain::Disk(1.0),
            },
            Surface::Rectangle {
                origin: [0.0, 0.0, 0.0],
                e1: [1.0, 0.0, 0.0],
                e2: [0.0, 0.0, 1.0],
                half: 1.0,
            },
        ],
        DatasetName::Paraboloids => vec![
            Surface::Graph {
                height: Height::Paraboloid {
                    sign: 1.0,
                    offset: 0.25,
                },
                domain: Domain::Disk(1.0),
            },
            Surface::Graph {
                height: Height::Paraboloid {
                    sign: -1.0,
                    offset: 0.25,
                },
                domain: Domain::Disk(1.0),
            },
        ],
    }
}

/// A generated cloud together with what generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    /// Noisy points with 1-based source labels and the seed recorded.
    pub cloud: PointCloud,
    /// Noise-free source point of every sample.
    pub sources: PointCloud,
    pub intrinsic_dim: usize,
    pub k: usize,
}

fn noise(rng: &mut impl Rng, dim: usize, tau: f64) -> Vec<f64> {
    if tau == 0.0 {
        return vec![0.0; dim];
    }
    let g: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n = norm(&g);
    let radius = tau * rng.random::<f64>().powf(1.0 / dim as f64);
    g.iter().map(|x| radius * x / n).collect()
}

/// Samples the dataset described by `spec`.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let surfaces = surfaces(spec);
    let k = surfaces.len();
    let dim = spec.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let labels: Vec<usize> = if spec.measure_proportional {
        let measures: Vec<f64> = surfaces.iter().map(Surface::measure).collect();
        let total: f64 = measures.iter().sum();
        let mut labels: Vec<usize> = (0..spec.n_per_cluster * k)
            .map(|_| {
                let mut u = rng.random::<f64>() * total;
                for (i, m) in measures.iter().enumerate() {
                    if u < *m {
                        return i + 1;
                    }
                    u -= m;
                }
                k
            })
            .collect();
        labels.sort_unstable();
        labels
    } else {
        (1..=k).flat_map(|l| std::iter::repeat_n(l, spec.n_per_cluster)).collect()
    };

    let max_density: Vec<f64> = surfaces.iter().map(Surface::max_density).collect();
    let mut clean = Vec::with_capacity(labels.len() * dim);
    let mut noisy = Vec::with_capacity(labels.len() * dim);
    for &label in &labels {
        let mut s = surfaces[label - 1].sample(&mut rng, max_density[label - 1]);
        s.resize(dim, 0.0);
        let z = noise(&mut rng, dim, spec.tau);
        noisy.extend(s.iter().zip(&z).map(|(a, b)| a + b));
        clean.extend(s);
    }
    let cloud = PointCloud::new(dim, noisy)?.with_labels(labels.clone())?.with_seed(spec.seed);
    let sources = PointCloud::new(dim, clean)?.with_labels(labels)?.with_seed(spec.seed);
    Ok(Dataset {
        spec: spec.clone(),
        cloud,
        sources,
        intrinsic_dim: spec.name.intrinsic_dim(),
        k,
    })
}

/// Largest distance from the centroid of the cloud to any of its points.
pub fn global_radius(cloud: &PointCloud) -> f64 {
    let n = cloud.len() as f64;
    let mut centroid = vec![0.0; cloud.dim()];
    for p in cloud.points() {
        for (c, x) in centroid.iter_mut().zip(p) {
            *c += x;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= n);
    cloud.points().map(|p| dist(p, &centroid)).fold(0.0, f64::max)
}

/// Distance from `point` to surface `surface_id` (1-based) of `spec`.
pub fn distance_to_surface(point: &[f64], surface_id: usize, spec: &DatasetSpec) -> Result<f64> {
    let all = surfaces(spec);
    let surface = surface_id
        .checked_sub(1)
        .and_then(|i| all.get(i))
        .ok_or_else(|| invalid(format!("{} has no surface {surface_id}", spec.name)))?;
    let natural = surface.ambient_dim();
    if point.len() < natural {
        return Err(Error::DimensionMismatch {
            expected: natural,
            found: point.len(),
        });
    }
    let inplane = surface.distance(&point[..natural]);
    let off: f64 = point[natural..].iter().map(|x| x * x).sum();
    Ok((inplane * inplane + off).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in DatasetName::ALL {
            assert_eq!(name.as_str().parse::<DatasetName>().unwrap(), name);
        }
        assert!(matches!("swiss_roll".parse::<DatasetName>(), Err(Error::UnknownDataset(_))));
    }

    #[test]
    fn two_segments_points_on_segments() {
        let spec = DatasetSpec::new(DatasetName::TwoSegments, 2, 0.0, 1).with_angle(FRAC_PI_2);
        let ds = generate(&spec).unwrap();
        assert_eq!(ds.cloud.len(), 4);
        for (p, &l) in ds.cloud.points().zip(ds.cloud.labels().unwrap()) {
            if l == 1 {
                assert_eq!(p[1], 0.0);
                assert!(p[0].abs() <= 1.0);
            } else {
                assert!(p[0].abs() < 1e-15);
                assert!(p[1].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn noiseless_points_lie_on_their_surface() {
        for name in DatasetName::ALL {
            let spec = DatasetSpec::new(name, 40, 0.0, 3);
            let ds = generate(&spec).unwrap();
            for (p, &l) in ds.cloud.points().zip(ds.cloud.labels().unwrap()) {
                let d = distance_to_surface(p, l, &spec).unwrap();
                assert!(d <= 1e-9, "{name}: distance {d}");
            }
        }
    }

    #[test]
    fn spheres_noise_bound_and_counts() {
        let spec = DatasetSpec::new(DatasetName::TwoSpheres, 300, 0.02, 5);
        let ds = generate(&spec).unwrap();
        let labels = ds.cloud.labels().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 300);
        assert_eq!(labels.iter().filter(|&&l| l == 2).count(), 300);
        for (p, &l) in ds.cloud.points().zip(labels) {
            assert!(distance_to_surface(p, l, &spec).unwrap() <= 0.02 + 1e-12);
        }
    }

    #[test]
    fn closed_form_distances() {
        let spec = DatasetSpec::new(DatasetName::TwoSpheres, 1, 0.0, 0);
        assert!((distance_to_surface(&[0.0, 0.0, 2.0], 1, &spec).unwrap() - 1.0).abs() < 1e-15);
        let seg = DatasetSpec::new(DatasetName::TwoSegments, 1, 0.0, 0);
        assert!((distance_to_surface(&[2.0, 0.0], 1, &seg).unwrap() - 1.0).abs() < 1e-15);
        assert!(distance_to_surface(&[0.0, 0.0], 3, &seg).is_err());
    }

    #[test]
    fn padded_ambient_dimension() {
        let mut spec = DatasetSpec::new(DatasetName::TwoSegments, 10, 0.0, 2);
        spec.dim = Some(4);
        let ds = generate(&spec).unwrap();
        assert_eq!(ds.cloud.dim(), 4);
        assert!(ds.cloud.points().all(|p| p[2] == 0.0 && p[3] == 0.0));
        assert!((distance_to_surface(&[0.0, 0.0, 3.0, 4.0], 1, &spec).unwrap() - 5.0).abs() < 1e-15);
        spec.dim = Some(1);
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn invalid_specs() {
        let base = DatasetSpec::new(DatasetName::TwoSegments, 10, 0.0, 0);
        assert!(generate(&DatasetSpec { n_per_cluster: 0, ..base.clone() }).is_err());
        assert!(generate(&DatasetSpec { tau: -0.1, ..base.clone() }).is_err());
        assert!(generate(&base.clone().with_angle(2.0)).is_err());
    }

    #[test]
    fn global_radius_cases() {
        let single = PointCloud::new(2, vec![3.0, 4.0]).unwrap();
        assert_eq!(global_radius(&single), 0.0);
        let circle: Vec<Vec<f64>> = (0..360)
            .map(|i| {
                let t = i as f64 * TAU / 360.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let r = global_radius(&PointCloud::from_points(&circle).unwrap());
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn measures() {
        let seg = Surface::Segment {
            a: vec![0.0, 0.0],
            b: vec![3.0, 4.0],
        };
        assert_eq!(seg.measure(), 5.0);
        let flat = Surface::Rectangle {
            origin: [0.0; 3],
            e1: [1.0, 0.0, 0.0],
            e2: [0.0, 1.0, 0.0],
            half: 1.0,
        };
        assert!((flat.measure() - 4.0).abs() < 1e-9);
        // y = x²/2 on [-0.7, 0.7]: length = ∫ √(1 + x²)
        let arc = &surfaces(&DatasetSpec::new(DatasetName::TwoCurvesAngle, 1, 0.0, 0))[0];
        let exact = {
            let f = |x: f64| 0.5 * (x * (1.0 + x * x).sqrt() + x.asinh());
            f(0.7) - f(-0.7)
        };
        assert!((arc.measure() - exact).abs() < 1e-6);
    }

    #[test]
    fn measure_proportional_mode() {
        let mut spec = DatasetSpec::new(DatasetName::TwoSegments, 500, 0.0, 9).with_angle(FRAC_PI_2);
        spec.measure_proportional = true;
        let ds = generate(&spec).unwrap();
        assert_eq!(ds.cloud.len(), 1000);
        let ones = ds.cloud.labels().unwrap().iter().filter(|&&l| l == 1).count();
        assert!((400..600).contains(&ones));
    }
}
