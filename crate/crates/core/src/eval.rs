//! Quality measures: cluster count, average deviation from cluster means
//! (ADM) and clustering purity.

use std::collections::HashMap;
use std::fmt;
use std::time::Duration;

use crate::clustering::ClusterLabeling;
use crate::error::{Error, Result};
use crate::model::{distance_unchecked, Dataset};

/// Coordinate mean of every cluster; entry `c - 1` is cluster `c`.
pub fn cluster_means(dataset: &Dataset, labeling: &ClusterLabeling) -> Result<Vec<Vec<f64>>> {
    cluster_means_weighted(dataset, labeling, None)
}

pub(crate) fn cluster_means_weighted(
    dataset: &Dataset,
    labeling: &ClusterLabeling,
    weights: Option<&[u64]>,
) -> Result<Vec<Vec<f64>>> {
    check_len(dataset.len(), labeling.len())?;
    let dim = dataset.dim();
    let k = labeling.num_clusters();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut mass = vec![0.0; k];
    for (i, &l) in labeling.labels().iter().enumerate() {
        if l == 0 {
            continue;
        }
        let w = weights.map_or(1.0, |w| w[i] as f64);
        let c = l as usize - 1;
        mass[c] += w;
        for (s, &x) in sums[c].iter_mut().zip(dataset.point(i)) {
            *s += w * x;
        }
    }
    for (s, m) in sums.iter_mut().zip(&mass) {
        for x in s.iter_mut() {
            *x /= m;
        }
    }
    Ok(sums)
}

fn check_len(points: usize, labels: usize) -> Result<()> {
    if points == labels {
        Ok(())
    } else {
        Err(Error::usage(format!("{labels} labels for {points} points")))
    }
}

/// Mean Euclidean distance from each clustered point to its cluster mean.
/// Noise points are left out; an all-noise labeling scores 0.
pub fn adm(dataset: &Dataset, labeling: &ClusterLabeling) -> Result<f64> {
    adm_weighted(dataset, labeling, None)
}

/// [`adm`] where point `i` counts `weights[i]` times.
pub fn adm_weighted(
    dataset: &Dataset,
    labeling: &ClusterLabeling,
    weights: Option<&[u64]>,
) -> Result<f64> {
    if let Some(w) = weights {
        check_len(dataset.len(), w.len())?;
    }
    let means = cluster_means_weighted(dataset, labeling, weights)?;
    let mut total = 0.0;
    let mut count = 0.0;
    for (i, &l) in labeling.labels().iter().enumerate() {
        if l == 0 {
            continue;
        }
        let w = weights.map_or(1.0, |w| w[i] as f64);
        total += w * distance_unchecked(dataset.point(i), &means[l as usize - 1]);
        count += w;
    }
    Ok(if count > 0.0 { total / count } else { 0.0 })
}

/// Fraction of points that carry their cluster's majority class. Noise
/// points form one extra group so every point is counted.
pub fn purity(labeling: &ClusterLabeling, truth: &[i64]) -> Result<f64> {
    check_len(truth.len(), labeling.len())?;
    if truth.is_empty() {
        return Err(Error::usage("purity needs at least one labeled point"));
    }
    let mut tallies: HashMap<(u32, i64), usize> = HashMap::new();
    for (&l, &t) in labeling.labels().iter().zip(truth) {
        *tallies.entry((l, t)).or_default() += 1;
    }
    let mut majority: HashMap<u32, usize> = HashMap::new();
    for (&(l, _), &c) in &tallies {
        let best = majority.entry(l).or_default();
        *best = (*best).max(c);
    }
    let hits: usize = majority.values().sum();
    Ok(hits as f64 / truth.len() as f64)
}

/// Summary of one clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub nc: usize,
    pub adm: f64,
    pub purity: Option<f64>,
    pub noise_count: usize,
    pub elapsed: Duration,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "nc,adm,purity,noise,st_ms";

    /// One CSV row matching [`EvalReport::CSV_HEADER`]; purity is empty when absent.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{},{},{}",
            self.nc,
            self.adm,
            self.purity.map(|p| format!("{p:.6}")).unwrap_or_default(),
            self.noise_count,
            self.elapsed.as_millis()
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "NC={}", self.nc)?;
        writeln!(f, "ADM={:.4}", self.adm)?;
        if let Some(p) = self.purity {
            writeln!(f, "CP={:.4}", p)?;
        }
        writeln!(f, "NOISE={}", self.noise_count)?;
        write!(f, "ST_MS={}", self.elapsed.as_millis())
    }
}

/// Bundles the individual measures. `truth` falls back to the dataset's own labels.
pub fn evaluate(
    dataset: &Dataset,
    labeling: &ClusterLabeling,
    truth: Option<&[i64]>,
    elapsed: Duration,
) -> Result<EvalReport> {
    let truth = truth.or_else(|| dataset.truth());
    Ok(EvalReport {
        nc: labeling.num_clusters(),
        adm: adm(dataset, labeling)?,
        purity: truth.map(|t| purity(labeling, t)).transpose()?,
        noise_count: labeling.noise_count(),
        elapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeling(raw: &[usize]) -> ClusterLabeling {
        ClusterLabeling::from_raw_ids(raw)
    }

    #[test]
    fn adm_examples() {
        let ds = Dataset::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(adm(&ds, &labeling(&[1, 1])).unwrap(), 1.0);
        assert_eq!(adm(&ds, &labeling(&[1, 2])).unwrap(), 0.0);
        assert_eq!(adm(&ds, &labeling(&[0, 0])).unwrap(), 0.0);

        let ds = Dataset::from_1d(&[0.0, 2.0, 10.0, 14.0]).unwrap();
        assert_eq!(adm(&ds, &labeling(&[1, 1, 2, 2])).unwrap(), 1.5);
        // Noise is left out of both numerator and denominator.
        assert_eq!(adm(&ds, &labeling(&[1, 1, 0, 0])).unwrap(), 1.0);
        assert!(adm(&ds, &labeling(&[1, 1])).unwrap_err().is_usage());
    }

    #[test]
    fn purity_examples() {
        assert_eq!(
            purity(&labeling(&[1, 1, 2, 2]), &[5, 5, 7, 7]).unwrap(),
            1.0
        );
        assert_eq!(
            purity(&labeling(&[1, 1, 1, 1]), &[1, 1, 1, 2]).unwrap(),
            0.75
        );
        // Noise is one extra group with its own majority.
        assert_eq!(
            purity(&labeling(&[1, 1, 0, 0]), &[1, 1, 2, 3]).unwrap(),
            0.75
        );
        assert!(purity(&labeling(&[1]), &[1, 2]).unwrap_err().is_usage());
    }

    #[test]
    fn weighted_adm_counts_copies() {
        let ds = Dataset::from_1d(&[0.0, 4.0]).unwrap();
        let l = labeling(&[1, 1]);
        // Mean is 1.0 with weights (3, 1): deviations 1 and 3, weighted mean 1.5.
        assert_eq!(adm_weighted(&ds, &l, Some(&[3, 1])).unwrap(), 1.5);
    }

    #[test]
    fn evaluate_bundles_measures() {
        let ds = Dataset::from_1d(&[0.0, 2.0, 10.0, 14.0, 100.0])
            .unwrap()
            .with_truth(vec![1, 1, 2, 2, 2])
            .unwrap();
        let l = labeling(&[1, 1, 2, 2, 0]);
        let r = evaluate(&ds, &l, None, Duration::from_millis(7)).unwrap();
        assert_eq!(r.nc, 2);
        assert_eq!(r.noise_count, 1);
        assert_eq!(r.adm, adm(&ds, &l).unwrap());
        assert_eq!(r.purity, Some(1.0));
        assert_eq!(r.csv_row(), "2,1.500000,1.000000,1,7");

        let bare = ds.clone().without_truth();
        let r = evaluate(&bare, &labeling(&[0; 5]), None, Duration::ZERO).unwrap();
        assert_eq!((r.nc, r.adm, r.purity), (0, 0.0, None));
        assert!(r.to_string().contains("NC=0"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn case() -> impl Strategy<Value = (Vec<[f64; 2]>, Vec<usize>)> {
            (2usize..40).prop_flat_map(|n| {
                (
                    proptest::collection::vec(prop::array::uniform2(-50.0..50.0f64), n),
                    proptest::collection::vec(0usize..5, n),
                )
            })
        }

        proptest! {
            #[test]
            fn adm_translates_and_scales((pts, raw) in case(), dx in -100.0..100.0f64, c in 0.1..10.0f64) {
                let ds = Dataset::from_rows(&pts).unwrap();
                let l = labeling(&raw);
                let base = adm(&ds, &l).unwrap();
                let shifted: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] + dx, p[1] - dx]).collect();
                let scaled: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] * c, p[1] * c]).collect();
                let a = adm(&Dataset::from_rows(&shifted).unwrap(), &l).unwrap();
                let b = adm(&Dataset::from_rows(&scaled).unwrap(), &l).unwrap();
                prop_assert!((a - base).abs() <= 1e-9 * (1.0 + base.abs()) + 1e-9);
                prop_assert!((b - c * base).abs() <= 1e-9 * (1.0 + c * base));
            }

            #[test]
            fn purity_ignores_cluster_ids(raw in proptest::collection::vec(1usize..6, 1..60), seed in 0u64..1000) {
                let truth: Vec<i64> = raw.iter().enumerate().map(|(i, &r)| ((i as u64 * 7 + seed + r as u64) % 3) as i64).collect();
                let l = labeling(&raw);
                // Reverse the ids: 1..=5 -> 5..=1.
                let relabeled = labeling(&raw.iter().map(|&r| 6 - r).collect::<Vec<_>>());
                prop_assert_eq!(purity(&l, &truth).unwrap(), purity(&relabeled, &truth).unwrap());
            }

            #[test]
            fn singleton_purity_bound(truth in proptest::collection::vec(0i64..4, 1..60)) {
                let n = truth.len();
                let singletons = labeling(&(1..=n).collect::<Vec<_>>());
                let largest = (0..4).map(|c| truth.iter().filter(|&&t| t == c).count()).max().unwrap();
                let p = purity(&singletons, &truth).unwrap();
                prop_assert!(p >= largest as f64 / n as f64);
                prop_assert_eq!(p, 1.0);
            }
        }
    }
}
