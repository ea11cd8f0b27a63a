//! Seeded synthetic datasets: separated disk blobs with optional uniform
//! noise (the DS1..DS8 presets) and hand-drawn-style non-convex patterns
//! (data1..data6).

use std::f64::consts::PI;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Draws one point of a drawn pattern piece.
type Sampler = Box<dyn Fn(&mut ChaCha8Rng) -> [f64; 2]>;

/// Centers must be at least this many semidiameters apart.
pub const CENTER_SEPARATION: f64 = 3.0;
/// New centers land within `CENTER_SEPARATION * (1 + CENTER_SLACK)`
/// semidiameters of an existing one.
pub const CENTER_SLACK: f64 = 0.1;
const PLACEMENT_ATTEMPTS: usize = 20_000;

/// Form of each planted cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Shape {
    /// Uniform in a disk of radius `cluster_semidiameter`.
    #[default]
    Blob,
    /// Uniform in the annulus between 0.75 and 1 semidiameters.
    Ring,
    /// Thin bar of length two semidiameters at a random angle.
    Chain,
}

impl Shape {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "blob" => Ok(Shape::Blob),
            "ring" => Ok(Shape::Ring),
            "chain" => Ok(Shape::Chain),
            other => Err(Error::usage(format!("unknown shape '{other}'"))),
        }
    }
}

/// Axis-aligned 2-D box `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Default for Region {
    fn default() -> Self {
        Region {
            x: (0.0, 600.0),
            y: (0.0, 600.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub region: Region,
    pub num_clusters: usize,
    pub cluster_semidiameter: f64,
    /// Total point count, noise included.
    pub n: usize,
    pub noise_fraction: f64,
    pub shape: Shape,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(num_clusters: usize, cluster_semidiameter: f64, n: usize, seed: u64) -> Self {
        SyntheticSpec {
            region: Region::default(),
            num_clusters,
            cluster_semidiameter,
            n,
            noise_fraction: 0.0,
            shape: Shape::Blob,
            seed,
        }
    }

    pub fn with_noise(mut self, fraction: f64) -> Self {
        self.noise_fraction = fraction;
        self
    }

    pub fn with_shape(mut self, shape: Shape) -> Self {
        self.shape = shape;
        self
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = region;
        self
    }

    pub fn noise_points(&self) -> usize {
        (self.n as f64 * self.noise_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_clusters == 0 {
            return Err(Error::usage("num_clusters must be positive"));
        }
        if !(self.cluster_semidiameter > 0.0 && self.cluster_semidiameter.is_finite()) {
            return Err(Error::usage("cluster semidiameter must be positive"));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(Error::usage("noise fraction must be in [0, 1)"));
        }
        if self.n < self.num_clusters + self.noise_points() {
            return Err(Error::usage(format!(
                "n = {} leaves some of the {} clusters empty",
                self.n, self.num_clusters
            )));
        }
        let r = &self.region;
        let (w, h) = (r.x.1 - r.x.0, r.y.1 - r.y.0);
        if !(w > 2.0 * self.cluster_semidiameter && h > 2.0 * self.cluster_semidiameter) {
            return Err(Error::usage("region is too small for one cluster"));
        }
        Ok(())
    }
}

/// Named presets echoing the artificial benchmark sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Ds1,
    Ds2,
    Ds3,
    Ds4,
    Ds5,
    Ds6,
    Ds7,
    Ds8,
    Data1,
    Data2,
    Data3,
    Data4,
    Data5,
    Data6,
}

impl Preset {
    pub const BLOBS: [Preset; 8] = [
        Preset::Ds1,
        Preset::Ds2,
        Preset::Ds3,
        Preset::Ds4,
        Preset::Ds5,
        Preset::Ds6,
        Preset::Ds7,
        Preset::Ds8,
    ];
    pub const PATTERNS: [Preset; 6] = [
        Preset::Data1,
        Preset::Data2,
        Preset::Data3,
        Preset::Data4,
        Preset::Data5,
        Preset::Data6,
    ];
    /// Point count of the drawn patterns.
    pub const PATTERN_POINTS: usize = 300;

    pub fn parse(name: &str) -> Result<Self> {
        let all = Self::BLOBS.iter().chain(Self::PATTERNS.iter());
        all.copied()
            .find(|p| p.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::usage(format!("unknown preset '{name}'")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Ds1 => "ds1",
            Preset::Ds2 => "ds2",
            Preset::Ds3 => "ds3",
            Preset::Ds4 => "ds4",
            Preset::Ds5 => "ds5",
            Preset::Ds6 => "ds6",
            Preset::Ds7 => "ds7",
            Preset::Ds8 => "ds8",
            Preset::Data1 => "data1",
            Preset::Data2 => "data2",
            Preset::Data3 => "data3",
            Preset::Data4 => "data4",
            Preset::Data5 => "data5",
            Preset::Data6 => "data6",
        }
    }

    /// Planted cluster count.
    pub fn num_clusters(&self) -> usize {
        match self {
            Preset::Ds1 | Preset::Ds2 | Preset::Ds5 | Preset::Ds7 => 5,
            Preset::Ds3 | Preset::Ds4 | Preset::Ds6 => 8,
            Preset::Ds8 => 11,
            Preset::Data1 | Preset::Data6 => 2,
            Preset::Data2 => 3,
            Preset::Data3 | Preset::Data4 | Preset::Data5 => 4,
        }
    }

    pub fn has_noise(&self) -> bool {
        matches!(self, Preset::Ds1 | Preset::Ds3 | Preset::Data5)
    }

    /// Blob spec for `Ds*` presets; `None` for drawn patterns.
    pub fn spec(&self, n: usize, seed: u64) -> Option<SyntheticSpec> {
        let cs = match self {
            Preset::Ds1 | Preset::Ds2 | Preset::Ds3 | Preset::Ds4 => 36.0,
            Preset::Ds5 => 60.0,
            Preset::Ds6 | Preset::Ds8 => 40.0,
            Preset::Ds7 => 50.0,
            _ => return None,
        };
        let spec = SyntheticSpec::new(self.num_clusters(), cs, n, seed);
        Some(if self.has_noise() {
            spec.with_noise(0.05)
        } else {
            spec
        })
    }

    /// Drawn patterns always have [`Preset::PATTERN_POINTS`] points and ignore `n`.
    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        match self.spec(n, seed) {
            Some(spec) => generate(&spec),
            None => pattern(*self, seed),
        }
    }
}

/// Places the cluster centers: each new center sits at
/// `[3, 3.3]` semidiameters from a random earlier one and at least 3
/// semidiameters from all of them, keeping every disk inside the region.
pub fn place_centers(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Vec<[f64; 2]>> {
    let cs = spec.cluster_semidiameter;
    let r = spec.region;
    let (x0, x1, y0, y1) = (r.x.0 + cs, r.x.1 - cs, r.y.0 + cs, r.y.1 - cs);
    let inside = |c: [f64; 2]| c[0] >= x0 && c[0] <= x1 && c[1] >= y0 && c[1] <= y1;
    let min_gap = CENTER_SEPARATION * cs;
    let max_gap = min_gap * (1.0 + CENTER_SLACK);
    let mut centers = vec![[rng.random_range(x0..=x1), rng.random_range(y0..=y1)]];
    while centers.len() < spec.num_clusters {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let anchor = centers[rng.random_range(0..centers.len())];
            let dist = rng.random_range(min_gap..=max_gap);
            let angle = rng.random_range(0.0..2.0 * PI);
            let c = [
                anchor[0] + dist * angle.cos(),
                anchor[1] + dist * angle.sin(),
            ];
            if inside(c)
                && centers
                    .iter()
                    .all(|o| ((o[0] - c[0]).powi(2) + (o[1] - c[1]).powi(2)).sqrt() >= min_gap)
            {
                centers.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::usage(format!(
                "cannot place {} clusters of semidiameter {cs} in the region",
                spec.num_clusters
            )));
        }
    }
    Ok(centers)
}

fn shape_point(
    shape: Shape,
    center: [f64; 2],
    cs: f64,
    tilt: f64,
    rng: &mut ChaCha8Rng,
) -> [f64; 2] {
    match shape {
        Shape::Blob => disk_point(center, cs, rng),
        Shape::Ring => {
            let inner = 0.75 * cs;
            let rad = (inner * inner + rng.random::<f64>() * (cs * cs - inner * inner)).sqrt();
            let a = rng.random_range(0.0..2.0 * PI);
            [center[0] + rad * a.cos(), center[1] + rad * a.sin()]
        }
        Shape::Chain => {
            let t = rng.random_range(-0.9 * cs..=0.9 * cs);
            let off = disk_point([0.0, 0.0], 0.1 * cs, rng);
            [
                center[0] + t * tilt.cos() + off[0],
                center[1] + t * tilt.sin() + off[1],
            ]
        }
    }
}

fn disk_point(center: [f64; 2], radius: f64, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let rad = radius * rng.random::<f64>().sqrt();
    let a = rng.random_range(0.0..2.0 * PI);
    [center[0] + rad * a.cos(), center[1] + rad * a.sin()]
}

/// Deterministic for a fixed spec. Clusters are labeled `1..=num_clusters`
/// and emitted in label order, followed by the noise points (label 0).
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = place_centers(spec, &mut rng)?;
    let noise = spec.noise_points();
    let clustered = spec.n - noise;
    let k = spec.num_clusters;
    let mut coords = Vec::with_capacity(2 * spec.n);
    let mut truth = Vec::with_capacity(spec.n);
    for (c, center) in centers.iter().enumerate() {
        let count = clustered / k + usize::from(c < clustered % k);
        let tilt = rng.random_range(0.0..PI);
        for _ in 0..count {
            coords.extend(shape_point(
                spec.shape,
                *center,
                spec.cluster_semidiameter,
                tilt,
                &mut rng,
            ));
            truth.push(c as i64 + 1);
        }
    }
    let r = spec.region;
    for _ in 0..noise {
        coords.push(rng.random_range(r.x.0..=r.x.1));
        coords.push(rng.random_range(r.y.0..=r.y.1));
        truth.push(0);
    }
    Dataset::from_flat(2, coords)?.with_truth(truth)
}

/// One piece of a drawn pattern: a sampler and the label it carries.
struct Piece {
    label: i64,
    weight: usize,
    draw: Sampler,
}

fn arc(center: [f64; 2], radius: f64, from: f64, to: f64, thickness: f64) -> Sampler {
    Box::new(move |rng| {
        let a = rng.random_range(from..=to);
        let p = [center[0] + radius * a.cos(), center[1] + radius * a.sin()];
        disk_point(p, thickness, rng)
    })
}

fn segment(a: [f64; 2], b: [f64; 2], thickness: f64) -> Sampler {
    Box::new(move |rng| {
        let t: f64 = rng.random();
        let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        disk_point(p, thickness, rng)
    })
}

fn disk(center: [f64; 2], radius: f64) -> Sampler {
    Box::new(move |rng| disk_point(center, radius, rng))
}

fn pieces(preset: Preset) -> (Vec<Piece>, usize) {
    let p = |label, weight, draw| Piece {
        label,
        weight,
        draw,
    };
    match preset {
        // Two interleaved moons.
        Preset::Data1 => (
            vec![
                p(1, 1, arc([240.0, 260.0], 130.0, 0.0, PI, 8.0)),
                p(2, 1, arc([370.0, 330.0], 130.0, PI, 2.0 * PI, 8.0)),
            ],
            0,
        ),
        // A ring around a core blob, plus a separate blob.
        Preset::Data2 => (
            vec![
                p(1, 3, arc([220.0, 300.0], 130.0, 0.0, 2.0 * PI, 7.0)),
                p(2, 1, disk([220.0, 300.0], 40.0)),
                p(3, 1, disk([480.0, 300.0], 55.0)),
            ],
            0,
        ),
        // Two parallel bars, a long ellipse-like arc and a small disk.
        Preset::Data3 => (
            vec![
                p(1, 1, segment([80.0, 120.0], [80.0, 480.0], 10.0)),
                p(2, 1, segment([180.0, 120.0], [180.0, 480.0], 10.0)),
                p(3, 1, arc([420.0, 420.0], 110.0, 0.0, PI, 10.0)),
                p(4, 1, disk([420.0, 160.0], 60.0)),
            ],
            0,
        ),
        // S-curve, ring, and two blobs of different sizes.
        Preset::Data4 | Preset::Data5 => (
            vec![
                p(1, 1, s_curve([140.0, 300.0], 80.0, 8.0)),
                p(2, 1, arc([420.0, 430.0], 90.0, 0.0, 2.0 * PI, 7.0)),
                p(3, 1, disk([360.0, 150.0], 45.0)),
                p(4, 1, disk([510.0, 170.0], 35.0)),
            ],
            if preset == Preset::Data5 { 20 } else { 0 },
        ),
        // Two blobs joined by a thin bridge; the bridge takes the nearer blob's label.
        Preset::Data6 => (
            vec![
                p(1, 5, disk([180.0, 300.0], 90.0)),
                p(2, 5, disk([420.0, 300.0], 90.0)),
                p(1, 1, segment([270.0, 300.0], [300.0, 300.0], 3.0)),
                p(2, 1, segment([300.0, 300.0], [330.0, 300.0], 3.0)),
            ],
            0,
        ),
        _ => unreachable!("blob presets have no drawn pattern"),
    }
}

fn s_curve(center: [f64; 2], radius: f64, thickness: f64) -> Sampler {
    let upper = arc(
        [center[0], center[1] + radius],
        radius,
        -0.5 * PI,
        PI,
        thickness,
    );
    let lower = arc(
        [center[0], center[1] - radius],
        radius,
        0.0,
        1.5 * PI,
        thickness,
    );
    let lower = move |rng: &mut ChaCha8Rng| {
        let q = lower(rng);
        // Mirror so the two halves form an S.
        [2.0 * center[0] - q[0], q[1]]
    };
    Box::new(move |rng| {
        if rng.random::<bool>() {
            upper(rng)
        } else {
            lower(rng)
        }
    })
}

/// A drawn-style pattern of [`Preset::PATTERN_POINTS`] points.
pub fn pattern(preset: Preset, seed: u64) -> Result<Dataset> {
    if preset.spec(1, 0).is_some() {
        return Err(Error::usage(format!(
            "{} is not a drawn pattern",
            preset.name()
        )));
    }
    let (pieces, noise) = pieces(preset);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clustered = Preset::PATTERN_POINTS - noise;
    let total_weight: usize = pieces.iter().map(|p| p.weight).sum();
    let mut coords = Vec::with_capacity(2 * Preset::PATTERN_POINTS);
    let mut truth = Vec::with_capacity(Preset::PATTERN_POINTS);
    let mut emitted = 0;
    for (i, piece) in pieces.iter().enumerate() {
        let count = if i + 1 == pieces.len() {
            clustered - emitted
        } else {
            clustered * piece.weight / total_weight
        };
        for _ in 0..count {
            coords.extend((piece.draw)(&mut rng));
            truth.push(piece.label);
        }
        emitted += count;
    }
    for _ in 0..noise {
        coords.push(rng.random_range(0.0..=600.0));
        coords.push(rng.random_range(0.0..=600.0));
        truth.push(0);
    }
    Dataset::from_flat(2, coords)?.with_truth(truth)
}

/// `k` points drawn uniformly without replacement, kept in their original order.
pub fn sample(dataset: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    if k == 0 || k > dataset.len() {
        return Err(Error::usage(format!(
            "sample size must be in 1..={}, got {k}",
            dataset.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = sample_indices(&mut rng, dataset.len(), k).into_vec();
    picks.sort_unstable();
    dataset.select(&picks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{Algorithm, CnniConfig};

    #[test]
    fn ds2_analog_has_five_blobs() {
        let spec = Preset::Ds2.spec(4000, 1).unwrap();
        assert_eq!(
            (
                spec.num_clusters,
                spec.cluster_semidiameter,
                spec.noise_fraction
            ),
            (5, 36.0, 0.0)
        );
        let ds = generate(&spec).unwrap();
        assert_eq!(ds.len(), 4000);
        let truth = ds.truth().unwrap();
        for c in 1..=5 {
            assert_eq!(truth.iter().filter(|&&t| t == c).count(), 800);
        }
        for p in ds.points() {
            assert!((0.0..=600.0).contains(&p[0]) && (0.0..=600.0).contains(&p[1]));
        }
    }

    #[test]
    fn tiny_single_cluster() {
        let ds = generate(&SyntheticSpec::new(1, 1.0, 10, 4)).unwrap();
        assert_eq!(ds.len(), 10);
        for i in 0..10 {
            for j in 0..10 {
                assert!(ds.distance(i, j) <= 2.0);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for preset in Preset::BLOBS.iter().chain(&Preset::PATTERNS) {
            let a = preset.generate(400, 7).unwrap();
            let b = preset.generate(400, 7).unwrap();
            assert_eq!(a, b, "{}", preset.name());
            let c = preset.generate(400, 8).unwrap();
            assert_ne!(a, c, "{}", preset.name());
        }
    }

    #[test]
    fn noise_share_and_labels() {
        let ds = Preset::Ds1.generate(1000, 3).unwrap();
        let truth = ds.truth().unwrap();
        assert_eq!(truth.iter().filter(|&&t| t == 0).count(), 50);
        assert_eq!(*truth.iter().max().unwrap(), 5);
        let ds = Preset::Data5.generate(0, 3).unwrap();
        assert_eq!(ds.len(), Preset::PATTERN_POINTS);
        assert_eq!(ds.truth().unwrap().iter().filter(|&&t| t == 0).count(), 20);
    }

    #[test]
    fn centers_respect_separation() {
        for seed in 0..30 {
            let spec = Preset::Ds8.spec(400, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = place_centers(&spec, &mut rng).unwrap();
            assert_eq!(c.len(), 11);
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    let d = ((c[i][0] - c[j][0]).powi(2) + (c[i][1] - c[j][1]).powi(2)).sqrt();
                    assert!(d >= 3.0 * 40.0);
                }
            }
        }
    }

    #[test]
    fn infeasible_and_invalid_specs() {
        assert!(generate(&SyntheticSpec::new(200, 36.0, 4000, 1))
            .unwrap_err()
            .is_usage());
        assert!(generate(&SyntheticSpec::new(5, 36.0, 0, 1))
            .unwrap_err()
            .is_usage());
        assert!(generate(&SyntheticSpec::new(0, 36.0, 10, 1))
            .unwrap_err()
            .is_usage());
        assert!(generate(&SyntheticSpec::new(2, 36.0, 10, 1).with_noise(1.0)).is_err());
        assert!(generate(&SyntheticSpec::new(1, 400.0, 10, 1)).is_err());
        assert!(Preset::parse("DS4").is_ok());
        assert!(Preset::parse("ds9").is_err());
        assert!(pattern(Preset::Ds1, 0).is_err());
    }

    #[test]
    fn other_shapes_stay_near_their_center() {
        for shape in [Shape::Ring, Shape::Chain] {
            let spec = SyntheticSpec::new(3, 30.0, 300, 2).with_shape(shape);
            let ds = generate(&spec).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let centers = place_centers(&spec, &mut rng).unwrap();
            for (p, &t) in ds.points().zip(ds.truth().unwrap()) {
                let c = centers[t as usize - 1];
                assert!(((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() <= 30.0 + 1e-9);
            }
        }
    }

    #[test]
    fn planted_partition_is_recovered() {
        // Intra-disk spacing at this density is far below the 36-unit gap between disks.
        for seed in 0..5 {
            let ds = Preset::Ds2.generate(2000, seed).unwrap();
            let l = Algorithm::Ecnni.run(&ds, &CnniConfig::new(20.0)).unwrap();
            assert_eq!(l.num_clusters(), 5);
            let truth = ds.truth().unwrap();
            for i in 0..ds.len() {
                for j in 0..ds.len() {
                    assert_eq!(truth[i] == truth[j], l.labels()[i] == l.labels()[j]);
                }
            }
        }
    }

    #[test]
    fn patterns_have_planted_counts() {
        for preset in Preset::PATTERNS {
            let ds = pattern(preset, 0).unwrap();
            let mut labels: Vec<i64> = ds
                .truth()
                .unwrap()
                .iter()
                .copied()
                .filter(|&t| t > 0)
                .collect();
            labels.sort_unstable();
            labels.dedup();
            assert_eq!(labels.len(), preset.num_clusters(), "{}", preset.name());
        }
    }

    #[test]
    fn sampling() {
        let ds = Dataset::from_1d(&(0..100).map(f64::from).collect::<Vec<_>>()).unwrap();
        let s = sample(&ds, 10, 5).unwrap();
        assert_eq!(s.len(), 10);
        let v: Vec<f64> = s.points().map(|p| p[0]).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, sample(&ds, 10, 5).unwrap());
        assert!(sample(&ds, 0, 5).is_err());
        assert!(sample(&ds, 101, 5).is_err());
    }
}
