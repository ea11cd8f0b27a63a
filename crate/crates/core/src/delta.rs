//! Choosing δ: the supervised bound from labeled data, the maximal gap
//! between consecutive minimum spanning tree edges, and sweeps that find the
//! δ ranges producing a given number of clusters.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use crate::clustering::{Algorithm, CnniConfig};
use crate::error::{Error, Result};
use crate::eval::adm;
use crate::model::Dataset;

/// A half-open range `[low, high)` of δ values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaInterval {
    pub low: f64,
    pub high: f64,
}

impl DeltaInterval {
    /// No δ satisfies `low <= δ < high`.
    pub fn is_empty(&self) -> bool {
        self.low.partial_cmp(&self.high) != Some(Ordering::Less)
    }

    /// Integer δ values inside the interval's closure: `[ceil(low), floor(high)]`.
    pub fn integer_bounds(&self) -> (i64, i64) {
        (self.low.ceil() as i64, self.high.floor() as i64)
    }

    pub fn contains(&self, delta: f64) -> bool {
        self.low <= delta && delta < self.high
    }

    pub fn scaled(&self, c: f64) -> DeltaInterval {
        DeltaInterval {
            low: self.low * c,
            high: self.high * c,
        }
    }
}

impl fmt::Display for DeltaInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.low, self.high)
    }
}

/// Edge weights of a Euclidean minimum spanning tree, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct MstEdgeList {
    edges: Vec<f64>,
}

impl MstEdgeList {
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().sum()
    }

    pub fn from_sorted(edges: Vec<f64>) -> Result<Self> {
        if edges.windows(2).any(|w| {
            !matches!(
                w[0].partial_cmp(&w[1]),
                Some(Ordering::Less | Ordering::Equal)
            )
        }) {
            return Err(Error::usage("edge weights must be sorted ascending"));
        }
        Ok(MstEdgeList { edges })
    }
}

/// Dense Prim, `O(n²)` time and `O(n)` extra space.
pub fn build_mst(dataset: &Dataset) -> Result<MstEdgeList> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::usage("a spanning tree needs at least two points"));
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = dataset.distance(current, j);
            if d < best[j] {
                best[j] = d;
            }
            if best[j] < next_w || next == usize::MAX {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push(next_w);
        current = next;
    }
    edges.sort_by(f64::total_cmp);
    Ok(MstEdgeList { edges })
}

/// Position `k` (1-based, as in `e_k`) of the largest gap `e_{k+1} - e_k`;
/// ties go to the smallest `k`.
pub fn max_gap_index(edges: &MstEdgeList) -> Result<usize> {
    let e = edges.edges();
    if e.len() < 2 {
        return Err(Error::usage(
            "gap estimation needs at least two spanning tree edges",
        ));
    }
    let mut k = 0;
    let mut gap = f64::NEG_INFINITY;
    for (i, w) in e.windows(2).enumerate() {
        let g = w[1] - w[0];
        if g > gap {
            gap = g;
            k = i;
        }
    }
    Ok(k + 1)
}

/// `[e_k, e_{k+1})` around the largest gap. When every edge has the same
/// weight the result is the empty interval `[e_1, e_1)`.
pub fn estimate_delta_mst(edges: &MstEdgeList) -> Result<DeltaInterval> {
    let k = max_gap_index(edges)?;
    let e = edges.edges();
    Ok(DeltaInterval {
        low: e[k - 1],
        high: e[k],
    })
}

/// `[largest same-class distance, smallest cross-class distance)`.
///
/// Points whose truth label is 0 (planted noise) take no part. The result
/// is empty when the classes overlap at this scale.
pub fn delta_bounds_supervised(dataset: &Dataset) -> Result<DeltaInterval> {
    let truth = dataset
        .truth()
        .ok_or_else(|| Error::usage("supervised bounds need ground-truth labels"))?;
    let mut low = f64::NEG_INFINITY;
    let mut high = f64::INFINITY;
    for i in 0..dataset.len() {
        if truth[i] == 0 {
            continue;
        }
        for j in i + 1..dataset.len() {
            if truth[j] == 0 {
                continue;
            }
            let d = dataset.distance(i, j);
            if truth[i] == truth[j] {
                low = low.max(d);
            } else {
                high = high.min(d);
            }
        }
    }
    if low == f64::NEG_INFINITY {
        return Err(Error::usage("no two points share a class"));
    }
    if high == f64::INFINITY {
        return Err(Error::usage("all points share one class"));
    }
    Ok(DeltaInterval { low, high })
}

/// One evaluated grid point of a δ sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub num_clusters: usize,
    pub noise: usize,
    pub adm: f64,
}

/// A maximal run of consecutive grid values, inclusive at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub low: f64,
    pub high: f64,
}

impl GridRange {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, delta: f64) -> bool {
        self.low <= delta && delta <= self.high
    }
}

impl fmt::Display for GridRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.low, self.high)
    }
}

/// Runs `algo` at every δ of `grid` (evaluated in parallel, reported in grid order).
pub fn sweep(
    dataset: &Dataset,
    algo: &Algorithm,
    base: &CnniConfig,
    grid: &[f64],
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::usage("the delta grid is empty"));
    }
    if grid
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
    {
        return Err(Error::usage("the delta grid must be strictly ascending"));
    }
    grid.par_iter()
        .map(|&delta| {
            let config = CnniConfig {
                delta,
                ..base.clone()
            };
            let labeling = algo.run(dataset, &config)?;
            Ok(SweepRow {
                delta,
                num_clusters: labeling.num_clusters(),
                noise: labeling.noise_count(),
                adm: adm(dataset, &labeling)?,
            })
        })
        .collect()
}

/// Maximal runs of consecutive rows whose cluster count equals `target`.
pub fn valid_ranges(rows: &[SweepRow], target: usize) -> Vec<GridRange> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, row) in rows.iter().enumerate() {
        match (row.num_clusters == target, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(GridRange {
                    low: rows[s].delta,
                    high: rows[i - 1].delta,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(GridRange {
            low: rows[s].delta,
            high: rows[rows.len() - 1].delta,
        });
    }
    out
}

/// Sweeps `grid` and returns the δ ranges on which `algo` finds exactly
/// `target_nc` clusters (noise excluded).
pub fn scan_valid_interval(
    dataset: &Dataset,
    algo: &Algorithm,
    base: &CnniConfig,
    target_nc: usize,
    grid: &[f64],
) -> Result<Vec<GridRange>> {
    if target_nc == 0 {
        return Err(Error::usage("target cluster count must be positive"));
    }
    Ok(valid_ranges(&sweep(dataset, algo, base, grid)?, target_nc))
}

/// `lo, lo + step, ...` up to and including `hi` (within rounding).
pub fn delta_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && step > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::usage(format!(
            "invalid delta range {lo}..={hi} step {step}"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mst_examples() {
        let ds = Dataset::from_1d(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]).unwrap();
        assert_eq!(build_mst(&ds).unwrap().edges(), &[1.0, 1.0, 1.0, 1.0, 8.0]);
        let ds = Dataset::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(build_mst(&ds).unwrap().edges(), &[5.0]);
        let ds = Dataset::from_1d(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(build_mst(&ds).unwrap().edges(), &[1.0, 1.0]);
        let one = Dataset::from_1d(&[1.0]).unwrap();
        assert!(build_mst(&one).unwrap_err().is_usage());
    }

    #[test]
    fn gap_examples() {
        let e = MstEdgeList::from_sorted(vec![1.0, 1.0, 1.0, 1.0, 8.0]).unwrap();
        assert_eq!(max_gap_index(&e).unwrap(), 4);
        assert_eq!(
            estimate_delta_mst(&e).unwrap(),
            DeltaInterval {
                low: 1.0,
                high: 8.0
            }
        );

        let flat = MstEdgeList::from_sorted(vec![2.0, 2.0, 2.0]).unwrap();
        let iv = estimate_delta_mst(&flat).unwrap();
        assert_eq!(
            iv,
            DeltaInterval {
                low: 2.0,
                high: 2.0
            }
        );
        assert!(iv.is_empty());

        let ties = MstEdgeList::from_sorted(vec![1.0, 3.0, 5.0]).unwrap();
        assert_eq!(max_gap_index(&ties).unwrap(), 1);

        let short = MstEdgeList::from_sorted(vec![1.0]).unwrap();
        assert!(estimate_delta_mst(&short).unwrap_err().is_usage());
        assert!(MstEdgeList::from_sorted(vec![2.0, 1.0]).is_err());
    }

    #[test]
    fn supervised_examples() {
        let ds = Dataset::from_1d(&[0.0, 1.0, 10.0, 11.0])
            .unwrap()
            .with_truth(vec![1, 1, 2, 2])
            .unwrap();
        assert_eq!(
            delta_bounds_supervised(&ds).unwrap(),
            DeltaInterval {
                low: 1.0,
                high: 9.0
            }
        );

        let ds = Dataset::from_1d(&[0.0, 3.0, 4.0, 7.0])
            .unwrap()
            .with_truth(vec![1, 1, 2, 2])
            .unwrap();
        let iv = delta_bounds_supervised(&ds).unwrap();
        assert_eq!((iv.low, iv.high), (3.0, 1.0));
        assert!(iv.is_empty());

        let singletons = Dataset::from_1d(&[0.0, 5.0])
            .unwrap()
            .with_truth(vec![1, 2])
            .unwrap();
        assert!(delta_bounds_supervised(&singletons).unwrap_err().is_usage());
        let unlabeled = Dataset::from_1d(&[0.0, 5.0]).unwrap();
        assert!(delta_bounds_supervised(&unlabeled).unwrap_err().is_usage());
    }

    #[test]
    fn valid_ranges_split_on_mismatch() {
        let rows: Vec<SweepRow> = [3, 2, 2, 1, 2, 2, 2]
            .iter()
            .enumerate()
            .map(|(i, &nc)| SweepRow {
                delta: (i + 1) as f64,
                num_clusters: nc,
                noise: 0,
                adm: 0.0,
            })
            .collect();
        assert_eq!(
            valid_ranges(&rows, 2),
            vec![
                GridRange {
                    low: 2.0,
                    high: 3.0
                },
                GridRange {
                    low: 5.0,
                    high: 7.0
                }
            ]
        );
        assert!(valid_ranges(&rows, 9).is_empty());
    }

    #[test]
    fn blob_sweep_finds_single_cluster_range() {
        // Tight blob: nearest spacing 1, diameter 3.
        let ds = Dataset::from_1d(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let grid = delta_grid(0.5, 6.0, 0.5).unwrap();
        let ranges =
            scan_valid_interval(&ds, &Algorithm::Ecnni, &CnniConfig::new(1.0), 1, &grid).unwrap();
        assert_eq!(
            ranges,
            vec![GridRange {
                low: 1.0,
                high: 6.0
            }]
        );
        // More clusters than points can never happen.
        let none =
            scan_valid_interval(&ds, &Algorithm::Ecnni, &CnniConfig::new(1.0), 5, &grid).unwrap();
        assert!(none.is_empty());
        assert!(sweep(&ds, &Algorithm::Cnni, &CnniConfig::new(1.0), &[]).is_err());
        assert!(sweep(&ds, &Algorithm::Cnni, &CnniConfig::new(1.0), &[2.0, 1.0]).is_err());
    }

    #[test]
    fn grid_construction() {
        assert_eq!(delta_grid(1.0, 3.0, 1.0).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(delta_grid(0.1, 0.3, 0.1).unwrap().len(), 3);
        assert!(delta_grid(3.0, 1.0, 1.0).is_err());
        assert!(delta_grid(1.0, 3.0, 0.0).is_err());
    }
}
