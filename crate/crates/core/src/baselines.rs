//! Reference clusterers: Lloyd KMeans and DBSCAN.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clustering::ClusterLabeling;
use crate::error::{Error, Result};
use crate::model::{squared_distance, Dataset};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            max_iters: 300,
            seed,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labeling: ClusterLabeling,
    /// Entry `c - 1` is the centroid of cluster `c`.
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroid after each assignment step.
    pub objective: Vec<f64>,
    pub converged: bool,
}

/// Lloyd iteration from `k` distinct seeded points until the assignment
/// stops changing or `max_iters` assignment steps have run. A centroid that
/// loses all its points moves to the point farthest from its own centroid.
pub fn kmeans(dataset: &Dataset, config: &KMeansConfig) -> Result<KMeansResult> {
    let n = dataset.len();
    let k = config.k;
    if k == 0 || k > n {
        return Err(Error::usage(format!("k must be in 1..={n}, got {k}")));
    }
    if config.max_iters == 0 {
        return Err(Error::usage("max_iters must be at least 1"));
    }
    let dim = dataset.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut picks = sample(&mut rng, n, k).into_vec();
    picks.sort_unstable();
    let mut centroids: Vec<Vec<f64>> = picks.iter().map(|&i| dataset.point(i).to_vec()).collect();

    let mut assign = vec![usize::MAX; n];
    let mut nearest_sq = vec![0.0; n];
    let mut objective = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iters {
        let mut changed = false;
        for i in 0..n {
            let p = dataset.point(i);
            let (c, sq) = nearest(p, &centroids);
            if c != assign[i] {
                assign[i] = c;
                changed = true;
            }
            nearest_sq[i] = sq;
        }
        objective.push(nearest_sq.iter().sum());
        if !changed {
            converged = true;
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            for (s, &x) in sums[assign[i]].iter_mut().zip(dataset.point(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (dst, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *dst = s / counts[c] as f64;
                }
            }
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| !taken[i])
                .map(|i| (i, squared_distance(dataset.point(i), &centroids[assign[i]])))
                .fold((usize::MAX, f64::NEG_INFINITY), |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                })
                .0;
            taken[far] = true;
            centroids[c] = dataset.point(far).to_vec();
        }
    }

    let labeling =
        ClusterLabeling::from_raw_ids(&assign.iter().map(|&c| c + 1).collect::<Vec<_>>());
    let mut used = vec![false; k];
    for &c in &assign {
        used[c] = true;
    }
    let centroids = centroids
        .into_iter()
        .zip(used)
        .filter_map(|(c, u)| u.then_some(c))
        .collect();
    Ok(KMeansResult {
        labeling,
        centroids,
        objective,
        converged,
    })
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let sq = squared_distance(p, centroid);
        if sq < best.1 {
            best = (c, sq);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanConfig {
    pub eps: f64,
    /// Counts the point itself.
    pub min_pts: usize,
}

impl DbscanConfig {
    pub fn new(eps: f64, min_pts: usize) -> Self {
        DbscanConfig { eps, min_pts }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::usage(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.min_pts == 0 {
            return Err(Error::usage("min_pts must be at least 1"));
        }
        Ok(())
    }
}

/// DBSCAN with `d <= eps` neighborhoods that include the point itself.
///
/// Seeds are tried in ascending index order and each cluster is expanded
/// breadth-first, so a border point reachable from several clusters belongs
/// to the one created first.
pub fn dbscan(dataset: &Dataset, config: &DbscanConfig) -> Result<ClusterLabeling> {
    config.validate()?;
    let n = dataset.len();
    let eps = config.eps;
    let region = |i: usize| -> Vec<usize> {
        let p = dataset.point(i);
        (0..n)
            .filter(|&j| squared_distance(p, dataset.point(j)).sqrt() <= eps)
            .collect()
    };
    const UNSEEN: usize = usize::MAX;
    let mut raw = vec![UNSEEN; n];
    let mut next = 0;
    let mut queue = std::collections::VecDeque::new();
    for i in 0..n {
        if raw[i] != UNSEEN {
            continue;
        }
        let seeds = region(i);
        if seeds.len() < config.min_pts {
            raw[i] = 0;
            continue;
        }
        next += 1;
        raw[i] = next;
        queue.extend(seeds);
        while let Some(q) = queue.pop_front() {
            if raw[q] == 0 {
                raw[q] = next;
            }
            if raw[q] != UNSEEN {
                continue;
            }
            raw[q] = next;
            let reach = region(q);
            if reach.len() >= config.min_pts {
                queue.extend(
                    reach
                        .into_iter()
                        .filter(|&j| raw[j] == UNSEEN || raw[j] == 0),
                );
            }
        }
    }
    Ok(ClusterLabeling::from_raw_ids(&raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::adm;

    #[test]
    fn kmeans_examples() {
        let ds = Dataset::from_1d(&[0.0, 1.0, 2.0, 100.0, 101.0, 102.0]).unwrap();
        let one = kmeans(&ds, &KMeansConfig::new(1, 3)).unwrap();
        assert_eq!(one.labeling.num_clusters(), 1);
        assert_eq!(one.centroids, vec![vec![51.0]]);

        for seed in 0..20 {
            let two = kmeans(&ds, &KMeansConfig::new(2, seed)).unwrap();
            let l = two.labeling.labels();
            assert!(l[0] == l[1] && l[1] == l[2] && l[3] == l[4] && l[4] == l[5]);
            assert_ne!(l[0], l[3]);
            // Each blob deviates (1 + 0 + 1) / 3 from its mean.
            assert!((adm(&ds, &two.labeling).unwrap() - 2.0 / 3.0).abs() < 1e-12);
            assert!(two.converged);
        }

        let all = kmeans(&ds, &KMeansConfig::new(6, 9)).unwrap();
        assert_eq!(all.labeling.num_clusters(), 6);
        assert_eq!(adm(&ds, &all.labeling).unwrap(), 0.0);

        assert!(kmeans(&ds, &KMeansConfig::new(7, 0))
            .unwrap_err()
            .is_usage());
        assert!(kmeans(&ds, &KMeansConfig::new(0, 0))
            .unwrap_err()
            .is_usage());
        assert!(kmeans(&ds, &KMeansConfig::new(2, 0).with_max_iters(0)).is_err());
    }

    #[test]
    fn kmeans_is_seed_deterministic() {
        let ds =
            Dataset::from_1d(&(0..50).map(|i| ((i * 37) % 23) as f64).collect::<Vec<_>>()).unwrap();
        let a = kmeans(&ds, &KMeansConfig::new(4, 11)).unwrap();
        let b = kmeans(&ds, &KMeansConfig::new(4, 11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kmeans_reseeds_empty_cluster() {
        // Duplicate points make two initial centers coincide; one loses every point.
        let ds = Dataset::from_1d(&[0.0, 0.0, 0.0, 10.0]).unwrap();
        for seed in 0..10 {
            let r = kmeans(&ds, &KMeansConfig::new(2, seed)).unwrap();
            assert_eq!(r.labeling.num_clusters(), 2);
            assert_ne!(r.labeling.labels()[0], r.labeling.labels()[3]);
        }
    }

    #[test]
    fn dbscan_examples() {
        let chain = Dataset::from_1d(&(0..=20).map(f64::from).collect::<Vec<_>>()).unwrap();
        let l = dbscan(&chain, &DbscanConfig::new(1.0, 2)).unwrap();
        assert_eq!(l.num_clusters(), 1);
        assert_eq!(l.noise_count(), 0);

        let sparse = Dataset::from_1d(&[0.0, 5.0, 10.0]).unwrap();
        let l = dbscan(&sparse, &DbscanConfig::new(1.0, 2)).unwrap();
        assert_eq!(l.labels(), &[0, 0, 0]);

        assert!(dbscan(&sparse, &DbscanConfig::new(0.0, 2))
            .unwrap_err()
            .is_usage());
        assert!(dbscan(&sparse, &DbscanConfig::new(1.0, 0))
            .unwrap_err()
            .is_usage());
    }

    #[test]
    fn dbscan_border_goes_to_first_cluster() {
        // Index 0 is a border point within eps of both groups but core of neither.
        let ds =
            Dataset::from_1d(&[1.1, -0.4, -0.3, -0.2, -0.1, 0.2, 2.0, 2.3, 2.4, 2.5, 2.6]).unwrap();
        let l = dbscan(&ds, &DbscanConfig::new(1.0, 4)).unwrap();
        assert_eq!(l.labels(), &[1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn dbscan_min_pts_one_makes_every_point_core() {
        let ds = Dataset::from_1d(&[0.0, 1.0, 5.0]).unwrap();
        let l = dbscan(&ds, &DbscanConfig::new(1.0, 1)).unwrap();
        assert_eq!(l.labels(), &[1, 1, 2]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kmeans_objective_never_increases(
                pts in proptest::collection::vec(prop::array::uniform2(0.0..100.0f64), 5..80),
                k in 1usize..6,
                seed in 0u64..1000,
            ) {
                let ds = Dataset::from_rows(&pts).unwrap();
                let r = kmeans(&ds, &KMeansConfig::new(k.min(pts.len()), seed)).unwrap();
                for w in r.objective.windows(2) {
                    prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-9, "{:?}", r.objective);
                }
                prop_assert_eq!(r.labeling.noise_count(), 0);
            }

            #[test]
            fn dbscan_core_membership_ignores_order(
                pts in proptest::collection::vec(prop::array::uniform2(0.0..30.0f64), 2..60),
                eps in 1.0..6.0f64,
                min_pts in 1usize..5,
            ) {
                let ds = Dataset::from_rows(&pts).unwrap();
                let rev: Vec<[f64; 2]> = pts.iter().rev().copied().collect();
                let n = pts.len();
                let a = dbscan(&ds, &DbscanConfig::new(eps, min_pts)).unwrap();
                let b = dbscan(&Dataset::from_rows(&rev).unwrap(), &DbscanConfig::new(eps, min_pts)).unwrap();
                let core: Vec<usize> = (0..n)
                    .filter(|&i| (0..n).filter(|&j| ds.distance(i, j) <= eps).count() >= min_pts)
                    .collect();
                for &i in &core {
                    for &j in &core {
                        let same_a = a.labels()[i] == a.labels()[j];
                        let same_b = b.labels()[n - 1 - i] == b.labels()[n - 1 - j];
                        prop_assert_eq!(same_a, same_b);
                    }
                }
            }
        }
    }
}
