//! Boosting-spread clustering over a [`NeighborTable`].
//!
//! Points are visited in order of decreasing influence. An unlabeled point
//! whose neighbors are still mostly unassigned seeds a new cluster together
//! with its whole neighbor set; otherwise it joins the cluster holding most of
//! its neighbors. Points without neighbors stay noise (label 0).
//!
//! [`ecnni`] additionally floods each new cluster through the neighbor graph,
//! so its clusters are the connected components of the δ-graph.

use crate::disjoint_set::DisjointSet;
use crate::error::{Error, Result};
use crate::model::{Dataset, SimilarityKind};
use crate::neighbors::{build_brute, build_grid, sort_by_influence, NeighborTable};

/// Per-point cluster labels. `0` is noise, clusters are numbered `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    labels: Vec<u32>,
    num_clusters: usize,
}

impl ClusterLabeling {
    /// Renumbers arbitrary cluster ids into `1..=k` by ascending id; `0` stays noise.
    pub fn from_raw_ids(raw: &[usize]) -> Self {
        let max = raw.iter().copied().max().unwrap_or(0);
        let mut remap = vec![0u32; max + 1];
        for &id in raw {
            if id != 0 {
                remap[id] = 1;
            }
        }
        let mut next = 0u32;
        for slot in remap.iter_mut().skip(1) {
            if *slot != 0 {
                next += 1;
                *slot = next;
            }
        }
        ClusterLabeling {
            labels: raw.iter().map(|&id| remap[id]).collect(),
            num_clusters: next as usize,
        }
    }

    /// Accepts labels that already use the contiguous range `1..=k`.
    pub fn from_labels(labels: Vec<u32>) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut seen = vec![false; k + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(gap) = (1..=k).find(|&l| !seen[l]) {
            return Err(Error::usage(format!(
                "cluster labels are not contiguous: label {gap} is unused"
            )));
        }
        Ok(ClusterLabeling {
            labels,
            num_clusters: k,
        })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 0).count()
    }

    /// Point indices per cluster; entry `c - 1` holds cluster `c`.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            if l != 0 {
                out[l as usize - 1].push(i);
            }
        }
        out
    }
}

/// How the "many unassigned neighbors" threshold `fraction * |δ(X)|` is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ManyThreshold {
    /// `unassigned >= floor(fraction * |δ(X)|)`
    #[default]
    Truncated,
    /// `unassigned >= fraction * |δ(X)|` in real arithmetic.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnniConfig {
    pub delta: f64,
    pub many_fraction: f64,
    pub kind: SimilarityKind,
    pub threshold: ManyThreshold,
    /// A new seed relabels neighbors that already belong to an older cluster.
    pub overwrite: bool,
}

impl CnniConfig {
    pub fn new(delta: f64) -> Self {
        CnniConfig {
            delta,
            many_fraction: 0.8,
            kind: SimilarityKind::Reciprocal,
            threshold: ManyThreshold::Truncated,
            overwrite: true,
        }
    }

    pub fn with_many_fraction(mut self, fraction: f64) -> Self {
        self.many_fraction = fraction;
        self
    }

    pub fn with_kind(mut self, kind: SimilarityKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_threshold(mut self, threshold: ManyThreshold) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_overwrite(mut self, overwrite: bool) -> Self {
        self.overwrite = overwrite;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::usage(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.many_fraction > 0.0 && self.many_fraction <= 1.0) {
            return Err(Error::usage(format!(
                "many fraction must lie in (0, 1], got {}",
                self.many_fraction
            )));
        }
        if let SimilarityKind::ExpScaled(s) = self.kind {
            SimilarityKind::exp_scaled(s)?;
        }
        Ok(())
    }

    fn opens_cluster(&self, unassigned: u64, total: u64) -> bool {
        let bound = self.many_fraction * total as f64;
        match self.threshold {
            ManyThreshold::Truncated => unassigned >= bound.floor() as u64,
            ManyThreshold::Exact => unassigned as f64 >= bound,
        }
    }
}

fn check_inputs(dataset: &Dataset, table: &NeighborTable, config: &CnniConfig) -> Result<()> {
    config.validate()?;
    if table.len() != dataset.len() {
        return Err(Error::usage(format!(
            "neighbor table covers {} points, dataset has {}",
            table.len(),
            dataset.len()
        )));
    }
    if table.delta() != config.delta {
        return Err(Error::usage(format!(
            "neighbor table was built with delta {}, config asks for {}",
            table.delta(),
            config.delta
        )));
    }
    if table.kind() != config.kind {
        return Err(Error::usage(format!(
            "neighbor table uses {} similarity, config asks for {}",
            table.kind().name(),
            config.kind.name()
        )));
    }
    Ok(())
}

/// Base algorithm on a prebuilt neighbor table.
pub fn cnni(
    dataset: &Dataset,
    table: &NeighborTable,
    config: &CnniConfig,
) -> Result<ClusterLabeling> {
    check_inputs(dataset, table, config)?;
    Ok(spread(table, config, false))
}

/// Expanding variant: every seeded cluster absorbs, transitively, all
/// unlabeled non-isolated neighbors of its members.
pub fn ecnni(
    dataset: &Dataset,
    table: &NeighborTable,
    config: &CnniConfig,
) -> Result<ClusterLabeling> {
    check_inputs(dataset, table, config)?;
    Ok(spread(table, config, true))
}

/// Base algorithm with grid-built neighbor sets; identical output to [`cnni`]
/// over [`build_brute`].
pub fn icnni(
    dataset: &Dataset,
    config: &CnniConfig,
    cell_lengths: &[f64],
) -> Result<ClusterLabeling> {
    config.validate()?;
    let table = build_grid(dataset, config.delta, cell_lengths, config.kind)?;
    cnni(dataset, &table, config)
}

/// Which member of the family to run, with whatever it needs besides δ.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Cnni,
    Icnni { cell_lengths: Vec<f64> },
    Ecnni,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Cnni => "cnni",
            Algorithm::Icnni { .. } => "icnni",
            Algorithm::Ecnni => "ecnni",
        }
    }

    pub fn neighbor_table(&self, dataset: &Dataset, config: &CnniConfig) -> Result<NeighborTable> {
        config.validate()?;
        match self {
            Algorithm::Icnni { cell_lengths } => {
                build_grid(dataset, config.delta, cell_lengths, config.kind)
            }
            _ => build_brute(dataset, config.delta, config.kind),
        }
    }

    /// Clusters with a table already built by [`Algorithm::neighbor_table`].
    pub fn cluster_table(
        &self,
        dataset: &Dataset,
        table: &NeighborTable,
        config: &CnniConfig,
    ) -> Result<ClusterLabeling> {
        match self {
            Algorithm::Ecnni => ecnni(dataset, table, config),
            _ => cnni(dataset, table, config),
        }
    }

    pub fn run(&self, dataset: &Dataset, config: &CnniConfig) -> Result<ClusterLabeling> {
        let table = self.neighbor_table(dataset, config)?;
        self.cluster_table(dataset, &table, config)
    }
}

/// Label array plus the disjoint-set forest the merge steps drive in parallel.
struct State {
    labels: Vec<usize>,
    forest: DisjointSet,
    next_id: usize,
}

fn spread(table: &NeighborTable, config: &CnniConfig, expand: bool) -> ClusterLabeling {
    let n = table.len();
    if n == 0 {
        return ClusterLabeling::from_raw_ids(&[]);
    }
    let mut st = State {
        labels: vec![0; n],
        forest: DisjointSet::new(n).expect("n > 0"),
        next_id: 1,
    };
    // Weighted vote counts per raw cluster id, reset after every use.
    let mut votes: Vec<u64> = vec![0; n + 1];
    let mut touched: Vec<usize> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();

    for i in sort_by_influence(table) {
        if st.labels[i] != 0 {
            continue;
        }
        let nbrs = table.neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let mut total = 0u64;
        let mut unassigned = 0u64;
        for &q in nbrs {
            let w = table.weight(q as usize);
            total += w;
            if st.labels[q as usize] == 0 {
                unassigned += w;
            }
        }

        if config.opens_cluster(unassigned, total) {
            let id = st.next_id;
            st.next_id += 1;
            st.labels[i] = id;
            for &q in nbrs {
                let q = q as usize;
                st.forest.union_roots(i, q);
                if config.overwrite || st.labels[q] == 0 {
                    st.labels[q] = id;
                }
            }
            if expand {
                for &p in nbrs {
                    if table.degree(p as usize) > 0 {
                        absorb(table, &mut st, &mut stack, p as usize, id);
                    }
                }
            }
        } else {
            for &q in nbrs {
                let l = st.labels[q as usize];
                if l != 0 {
                    if votes[l] == 0 {
                        touched.push(l);
                    }
                    votes[l] += table.weight(q as usize);
                }
            }
            let mut best = 0;
            for &l in &touched {
                if votes[l] > votes[best] || (votes[l] == votes[best] && l < best) {
                    best = l;
                }
            }
            for &l in &touched {
                votes[l] = 0;
            }
            touched.clear();
            st.labels[i] = best;
            if let Some(&q) = nbrs.iter().find(|&&q| st.labels[q as usize] == best) {
                st.forest.union_roots(i, q as usize);
            }
        }
    }
    ClusterLabeling::from_raw_ids(&st.labels)
}

/// Depth-first flood from `start`, in the same order as the recursive
/// formulation but with an explicit stack.
fn absorb(
    table: &NeighborTable,
    st: &mut State,
    stack: &mut Vec<(usize, usize)>,
    start: usize,
    id: usize,
) {
    stack.clear();
    stack.push((start, 0));
    while let Some(top) = stack.last_mut() {
        let (p, pos) = *top;
        let nbrs = table.neighbors(p);
        if pos == nbrs.len() {
            stack.pop();
            continue;
        }
        top.1 += 1;
        let q = nbrs[pos] as usize;
        if st.labels[q] == 0 && table.degree(q) > 0 {
            st.forest.union_roots(q, p);
            st.labels[q] = id;
            stack.push((q, 0));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SimilarityKind;

    fn run(values: &[f64], delta: f64, algo: Algorithm) -> ClusterLabeling {
        let ds = Dataset::from_1d(values).unwrap();
        algo.run(&ds, &CnniConfig::new(delta)).unwrap()
    }

    #[test]
    fn two_separated_groups() {
        let v = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0];
        for algo in [
            Algorithm::Cnni,
            Algorithm::Ecnni,
            Algorithm::Icnni {
                cell_lengths: vec![2.0],
            },
        ] {
            let l = run(&v, 1.5, algo);
            assert_eq!(l.labels(), &[1, 1, 1, 2, 2, 2]);
            assert_eq!(l.num_clusters(), 2);
        }
    }

    #[test]
    fn isolated_point_is_noise() {
        let v = [0.0, 1.0, 2.0, 50.0];
        for algo in [Algorithm::Cnni, Algorithm::Ecnni] {
            let l = run(&v, 1.5, algo);
            assert_eq!(l.labels()[3], 0);
            assert_eq!(l.noise_count(), 1);
        }
        let single = run(&[3.0], 1.0, Algorithm::Cnni);
        assert_eq!(single.labels(), &[0]);
        assert_eq!(single.num_clusters(), 0);
        let single = run(
            &[3.0],
            1.0,
            Algorithm::Icnni {
                cell_lengths: vec![1.0],
            },
        );
        assert_eq!(single.labels(), &[0]);
    }

    #[test]
    fn chain_is_one_cluster_under_expansion() {
        let v: Vec<f64> = (0..=20).map(f64::from).collect();
        let l = run(&v, 1.0, Algorithm::Ecnni);
        assert_eq!(l.num_clusters(), 1);
        assert!(l.labels().iter().all(|&x| x == 1));
        // The base algorithm only spreads one neighborhood at a time.
        let l = run(&v, 1.0, Algorithm::Cnni);
        assert!(l.num_clusters() > 1);
        assert_eq!(l.noise_count(), 0);
    }

    #[test]
    fn overwriting_seed_reclaims_neighbors() {
        let ds = Dataset::from_1d(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let t = build_brute(&ds, 1.0, SimilarityKind::Reciprocal).unwrap();
        let l = cnni(&ds, &t, &CnniConfig::new(1.0)).unwrap();
        // Interior points tie on influence and are visited left to right:
        // index 1 seeds {0,1,2}; index 3 still has 1 >= floor(0.8 * 2) free
        // neighbor, seeds {2,3,4} and takes index 2; index 5 does the same.
        assert_eq!(l.labels(), &[1, 1, 2, 2, 3, 3, 3]);
    }

    #[test]
    fn majority_join_prefers_older_cluster_on_tie() {
        let v = [-0.3, 0.0, 0.3, 1.0, 2.0, 3.0, 3.7, 4.0, 4.3];
        let l = run(&v, 1.0, Algorithm::Cnni);
        assert_eq!(l.num_clusters(), 2);
        let (left, right) = (l.labels()[0], l.labels()[8]);
        assert!(l.labels()[..4].iter().all(|&x| x == left));
        assert!(l.labels()[5..].iter().all(|&x| x == right));
        assert_ne!(left, right);
        // The midpoint sees one member of each cluster and joins the older one.
        assert_eq!(l.labels()[4], 1);
    }

    #[test]
    fn exact_threshold_and_no_overwrite() {
        let ds = Dataset::from_1d(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let t = build_brute(&ds, 1.0, SimilarityKind::Reciprocal).unwrap();
        let exact = CnniConfig::new(1.0).with_threshold(ManyThreshold::Exact);
        // 3 sees 1 free of 2 (< 1.6): joins cluster 1; 4 likewise; 5 joins; 6 joins.
        assert_eq!(cnni(&ds, &t, &exact).unwrap().labels(), &[1; 7]);
        let keep = CnniConfig::new(1.0).with_overwrite(false);
        assert_eq!(
            cnni(&ds, &t, &keep).unwrap().labels(),
            &[1, 1, 1, 2, 2, 3, 3]
        );
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let ds = Dataset::from_1d(&[0.0, 1.0]).unwrap();
        let t = build_brute(&ds, 1.0, SimilarityKind::Reciprocal).unwrap();
        assert!(cnni(&ds, &t, &CnniConfig::new(2.0)).unwrap_err().is_usage());
        let other = Dataset::from_1d(&[0.0, 1.0, 2.0]).unwrap();
        assert!(ecnni(&other, &t, &CnniConfig::new(1.0))
            .unwrap_err()
            .is_usage());
        let exp = CnniConfig::new(1.0).with_kind(SimilarityKind::Exp);
        assert!(cnni(&ds, &t, &exp).unwrap_err().is_usage());
        assert!(CnniConfig::new(1.0)
            .with_many_fraction(0.0)
            .validate()
            .is_err());
        assert!(CnniConfig::new(1.0)
            .with_many_fraction(1.5)
            .validate()
            .is_err());
        assert!(CnniConfig::new(-1.0).validate().is_err());
    }

    #[test]
    fn renumbering_drops_emptied_ids() {
        let l = ClusterLabeling::from_raw_ids(&[0, 4, 4, 2, 7, 0]);
        assert_eq!(l.labels(), &[0, 2, 2, 1, 3, 0]);
        assert_eq!(l.num_clusters(), 3);
        assert_eq!(l.clusters(), vec![vec![3], vec![1, 2], vec![4]]);
        assert!(ClusterLabeling::from_labels(vec![0, 2, 2]).is_err());
        assert_eq!(
            ClusterLabeling::from_labels(vec![1, 0, 2])
                .unwrap()
                .num_clusters(),
            2
        );
    }

    #[test]
    fn weighted_points_count_copies() {
        // Point 1 stands for ten copies: point 0 can never see 8 of them free
        // once point 2 has seeded, so it joins instead of opening a cluster.
        let ds = Dataset::from_1d(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let t = build_brute(&ds, 1.0, SimilarityKind::Reciprocal)
            .unwrap()
            .reweighted(vec![1, 10, 1, 1, 1, 1])
            .unwrap();
        let l = cnni(&ds, &t, &CnniConfig::new(1.0)).unwrap();
        assert_eq!(l.labels(), &[1, 1, 1, 2, 2, 2]);
    }
}
