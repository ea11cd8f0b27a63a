//! Construction of the δ near neighbor sets and their influences.
//!
//! Two builders produce the same [`NeighborTable`]: an exhaustive scan over
//! all pairs and a uniform-grid scan that only visits cells within reach of
//! δ. Rows are always stored in ascending neighbor index and influences are
//! summed in that order, so the two tables compare equal bit for bit.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{squared_distance, Dataset, SimilarityKind};

/// Per-point neighbor lists (compressed rows) and influence values.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    delta: f64,
    kind: SimilarityKind,
    offsets: Vec<usize>,
    indices: Vec<u32>,
    distances: Vec<f64>,
    influences: Vec<f64>,
    weights: Option<Vec<u64>>,
}

impl NeighborTable {
    fn from_rows(delta: f64, kind: SimilarityKind, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let total = rows.iter().map(Vec::len).sum();
        let mut t = NeighborTable::with_capacity(delta, kind, rows.len(), total);
        for row in rows {
            t.push_row(row.into_iter());
        }
        t
    }

    fn with_capacity(delta: f64, kind: SimilarityKind, n: usize, entries: usize) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        NeighborTable {
            delta,
            kind,
            offsets,
            indices: Vec::with_capacity(entries),
            distances: Vec::with_capacity(entries),
            influences: Vec::with_capacity(n),
            weights: None,
        }
    }

    fn push_row(&mut self, row: impl Iterator<Item = (u32, f64)>) {
        let mut inf = 0.0;
        for (j, d) in row {
            self.indices.push(j);
            self.distances.push(d);
            inf += self.kind.apply(d);
        }
        self.offsets.push(self.indices.len());
        self.influences.push(inf);
    }

    pub fn len(&self) -> usize {
        self.influences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.influences.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    /// Neighbor indices of point `i`, ascending.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Distances matching [`NeighborTable::neighbors`].
    #[inline]
    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    #[inline]
    pub fn influence(&self, i: usize) -> f64 {
        self.influences[i]
    }

    pub fn influences(&self) -> &[f64] {
        &self.influences
    }

    /// Total number of stored (point, neighbor) entries.
    pub fn entries(&self) -> usize {
        self.indices.len()
    }

    /// Multiplicity of point `i`; 1 unless the table was reweighted.
    #[inline]
    pub fn weight(&self, i: usize) -> u64 {
        self.weights.as_ref().map_or(1, |w| w[i])
    }

    pub fn weights(&self) -> Option<&[u64]> {
        self.weights.as_deref()
    }

    /// Treats point `i` as standing for `weights[i]` coincident copies.
    ///
    /// Coincident copies are never neighbors of each other, so each copy sees
    /// the neighbors of the representative with their multiplicities:
    /// influences become weighted sums and the clustering rules count copies.
    pub fn reweighted(mut self, weights: Vec<u64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::usage(format!(
                "{} weights for {} points",
                weights.len(),
                self.len()
            )));
        }
        if weights.contains(&0) {
            return Err(Error::usage("point weights must be positive"));
        }
        for i in 0..self.len() {
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            self.influences[i] = self.indices[lo..hi]
                .iter()
                .zip(&self.distances[lo..hi])
                .fold(0.0, |acc, (&j, &d)| {
                    acc + weights[j as usize] as f64 * self.kind.apply(d)
                });
        }
        self.weights = Some(weights);
        Ok(self)
    }
}

fn check_params(dataset: &Dataset, delta: f64, kind: SimilarityKind) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::usage(format!("delta must be positive, got {delta}")));
    }
    if let SimilarityKind::ExpScaled(s) = kind {
        SimilarityKind::exp_scaled(s)?;
    }
    if dataset.len() > u32::MAX as usize {
        return Err(Error::usage("dataset too large for 32-bit point indices"));
    }
    Ok(())
}

/// Exact-threshold filter: squared distances are prefiltered against a
/// slightly inflated δ², then the rounded distance is compared with δ itself.
struct Threshold {
    delta: f64,
    loose_sq: f64,
}

impl Threshold {
    fn new(delta: f64) -> Self {
        Threshold {
            delta,
            loose_sq: delta * delta * (1.0 + 1e-12),
        }
    }

    #[inline]
    fn check(&self, a: &[f64], b: &[f64]) -> Option<f64> {
        self.accept(squared_distance(a, b))
    }

    /// Same decision as [`Threshold::check`] given `d = sq.sqrt()`: a
    /// correctly rounded square root of anything above the loose bound
    /// already exceeds δ, so the prefilter never changes the outcome.
    #[inline]
    fn accepts(&self, sq: f64, d: f64) -> bool {
        (sq > 0.0) & (d <= self.delta)
    }

    #[inline]
    fn accept(&self, sq: f64) -> Option<f64> {
        if sq > 0.0 && sq <= self.loose_sq {
            let d = sq.sqrt();
            if d <= self.delta {
                return Some(d);
            }
        }
        None
    }
}

/// Exhaustive construction: every pair is examined.
pub fn build_brute(dataset: &Dataset, delta: f64, kind: SimilarityKind) -> Result<NeighborTable> {
    check_params(dataset, delta, kind)?;
    let n = dataset.len();
    let th = Threshold::new(delta);
    let mut table = NeighborTable::with_capacity(delta, kind, n, 0);
    for i in 0..n {
        let p = dataset.point(i);
        let row = (0..n).filter_map(|j| {
            if j == i {
                return None;
            }
            th.check(p, dataset.point(j)).map(|d| (j as u32, d))
        });
        table.push_row(row);
    }
    Ok(table)
}

/// [`build_brute`] with rows computed on the rayon pool.
pub fn build_brute_parallel(
    dataset: &Dataset,
    delta: f64,
    kind: SimilarityKind,
) -> Result<NeighborTable> {
    check_params(dataset, delta, kind)?;
    let n = dataset.len();
    let th = Threshold::new(delta);
    let rows: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = dataset.point(i);
            (0..n)
                .filter(|&j| j != i)
                .filter_map(|j| th.check(p, dataset.point(j)).map(|d| (j as u32, d)))
                .collect()
        })
        .collect();
    Ok(NeighborTable::from_rows(delta, kind, rows))
}

/// Uniform grid over the dataset's bounding box.
///
/// Cell coordinate along axis `k` is `floor((x_k - min_k) / r_k)`. Members of
/// every cell are kept in ascending point order.
#[derive(Debug, Clone)]
pub struct GridIndex {
    origin: Vec<f64>,
    cell_lengths: Vec<f64>,
    cells: HashMap<Vec<u32>, Vec<u32>>,
    point_cells: Vec<u32>,
    keys: Vec<Vec<u32>>,
}

impl GridIndex {
    pub fn new(dataset: &Dataset, cell_lengths: &[f64]) -> Result<Self> {
        if cell_lengths.len() != dataset.dim() {
            return Err(Error::usage(format!(
                "{} cell lengths for {}-dimensional data",
                cell_lengths.len(),
                dataset.dim()
            )));
        }
        if let Some(r) = cell_lengths.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::usage(format!(
                "cell lengths must be positive, got {r}"
            )));
        }
        let origin: Vec<f64> = dataset.bounds().iter().map(|b| b.0).collect();
        let mut cells: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
        let mut keys = Vec::new();
        let mut slot_of: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut point_cells = Vec::with_capacity(dataset.len());
        for (i, p) in dataset.points().enumerate() {
            let key = cell_key(p, &origin, cell_lengths);
            let slot = *slot_of.entry(key.clone()).or_insert_with(|| {
                keys.push(key.clone());
                (keys.len() - 1) as u32
            });
            point_cells.push(slot);
            cells.entry(key).or_default().push(i as u32);
        }
        Ok(GridIndex {
            origin,
            cell_lengths: cell_lengths.to_vec(),
            cells,
            point_cells,
            keys,
        })
    }

    pub fn cell_lengths(&self) -> &[f64] {
        &self.cell_lengths
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Number of non-empty cells.
    pub fn occupied_cells(&self) -> usize {
        self.keys.len()
    }

    /// Cell coordinates of point `i`.
    pub fn cell_of(&self, i: usize) -> &[u32] {
        &self.keys[self.point_cells[i] as usize]
    }

    pub fn members(&self, cell: &[u32]) -> &[u32] {
        self.cells.get(cell).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Cells per axis that a radius of `delta` can cross: `ceil(delta / r_k)`.
    pub fn reach(&self, delta: f64) -> Vec<u32> {
        self.cell_lengths
            .iter()
            .map(|r| (delta / r).ceil().max(1.0) as u32)
            .collect()
    }

    /// Calls `visit` with the members of every occupied cell within `reach`
    /// cells of `center` along each axis.
    fn for_each_nearby(&self, center: &[u32], reach: &[u32], mut visit: impl FnMut(&[u32])) {
        let block: f64 = reach.iter().map(|&w| 2.0 * w as f64 + 1.0).product();
        if block > self.keys.len() as f64 {
            for key in &self.keys {
                let near = key
                    .iter()
                    .zip(center)
                    .zip(reach)
                    .all(|((&a, &b), &w)| a.abs_diff(b) <= w);
                if near {
                    visit(&self.cells[key]);
                }
            }
            return;
        }
        let dim = center.len();
        let lo: Vec<u32> = center
            .iter()
            .zip(reach)
            .map(|(&c, &w)| c.saturating_sub(w))
            .collect();
        let hi: Vec<u32> = center
            .iter()
            .zip(reach)
            .map(|(&c, &w)| c.saturating_add(w))
            .collect();
        let mut cur = lo.clone();
        loop {
            if let Some(members) = self.cells.get(cur.as_slice()) {
                visit(members);
            }
            let mut axis = 0;
            while axis < dim {
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = lo[axis];
                axis += 1;
            }
            if axis == dim {
                break;
            }
        }
    }
}

fn cell_key(p: &[f64], origin: &[f64], lengths: &[f64]) -> Vec<u32> {
    p.iter()
        .zip(origin)
        .zip(lengths)
        .map(|((&x, &o), &r)| {
            let c = ((x - o) / r).floor();
            if c >= u32::MAX as f64 {
                u32::MAX
            } else {
                c as u32
            }
        })
        .collect()
}

/// Rows of the members of one or more cells, stored back to back.
#[derive(Default)]
struct CellRows {
    points: Vec<u32>,
    ends: Vec<usize>,
    indices: Vec<u32>,
    distances: Vec<f64>,
}

/// Reused per-worker buffers: candidate ids in ascending order and their
/// coordinates copied contiguously.
#[derive(Default)]
struct Scratch {
    ids: Vec<u32>,
    coords: Vec<f64>,
    sq: Vec<f64>,
    keep_ids: Vec<u32>,
    keep_d: Vec<f64>,
}

/// Appends the rows of every member of cell `slot` to `out`.
fn cell_rows(
    dataset: &Dataset,
    grid: &GridIndex,
    reach: &[u32],
    th: &Threshold,
    slot: usize,
    scratch: &mut Scratch,
    out: &mut CellRows,
) {
    let dim = dataset.dim();
    scratch.ids.clear();
    grid.for_each_nearby(&grid.keys[slot], reach, |members| {
        scratch.ids.extend_from_slice(members)
    });
    scratch.ids.sort_unstable();
    scratch.coords.clear();
    for &j in &scratch.ids {
        scratch.coords.extend_from_slice(dataset.point(j as usize));
    }
    for &i in grid.members(&grid.keys[slot]) {
        let p = dataset.point(i as usize);
        match dim {
            1 => squared_distances::<1>(p, &scratch.coords, &mut scratch.sq),
            2 => squared_distances::<2>(p, &scratch.coords, &mut scratch.sq),
            3 => squared_distances::<3>(p, &scratch.coords, &mut scratch.sq),
            _ => {
                scratch.sq.clear();
                let rows = scratch.coords.chunks_exact(dim);
                scratch.sq.extend(rows.map(|q| squared_distance(p, q)));
            }
        }
        // Branch-free compaction: every candidate is written, only accepted
        // ones advance the cursor. Point `i` itself has sq = 0 and is dropped.
        let n = scratch.ids.len();
        scratch.keep_ids.resize(n + 1, 0);
        scratch.keep_d.resize(n + 1, 0.0);
        let mut kept = 0;
        for (&j, &sq) in scratch.ids.iter().zip(&scratch.sq) {
            let d = sq.sqrt();
            scratch.keep_ids[kept] = j;
            scratch.keep_d[kept] = d;
            kept += usize::from(th.accepts(sq, d));
        }
        out.indices.extend_from_slice(&scratch.keep_ids[..kept]);
        out.distances.extend_from_slice(&scratch.keep_d[..kept]);
        out.points.push(i);
        out.ends.push(out.indices.len());
    }
}

/// Squared distances from `p` to each `M`-dimensional point in `coords`,
/// summed in the same order as [`squared_distance`].
fn squared_distances<const M: usize>(p: &[f64], coords: &[f64], out: &mut Vec<f64>) {
    let p: [f64; M] = p.try_into().expect("point has M coordinates");
    out.clear();
    out.extend(coords.chunks_exact(M).map(|q| {
        let mut sum = 0.0;
        for k in 0..M {
            let d = p[k] - q[k];
            sum += d * d;
        }
        sum
    }));
}

/// Reorders per-cell rows into point order.
fn assemble(delta: f64, kind: SimilarityKind, n: usize, parts: &[CellRows]) -> NeighborTable {
    let mut at = vec![(0u32, 0usize, 0usize); n];
    for (c, part) in parts.iter().enumerate() {
        let mut start = 0;
        for (&i, &end) in part.points.iter().zip(&part.ends) {
            at[i as usize] = (c as u32, start, end);
            start = end;
        }
    }
    let entries = parts.iter().map(|p| p.indices.len()).sum();
    let mut table = NeighborTable::with_capacity(delta, kind, n, entries);
    for &(c, start, end) in &at {
        let part = &parts[c as usize];
        let row = part.indices[start..end]
            .iter()
            .copied()
            .zip(part.distances[start..end].iter().copied());
        table.push_row(row);
    }
    table
}

/// Grid-accelerated construction. The result equals [`build_brute`] exactly.
///
/// With `r_k >= delta` on every axis only the `3^m` block around a point's
/// cell is scanned; smaller cells widen the block to `ceil(delta / r_k)`.
/// Candidates are gathered once per cell, so rows come out sorted.
pub fn build_grid(
    dataset: &Dataset,
    delta: f64,
    cell_lengths: &[f64],
    kind: SimilarityKind,
) -> Result<NeighborTable> {
    check_params(dataset, delta, kind)?;
    let grid = GridIndex::new(dataset, cell_lengths)?;
    let reach = grid.reach(delta);
    let th = Threshold::new(delta);
    let mut rows = CellRows::default();
    let mut scratch = Scratch::default();
    for slot in 0..grid.occupied_cells() {
        cell_rows(dataset, &grid, &reach, &th, slot, &mut scratch, &mut rows);
    }
    Ok(assemble(
        delta,
        kind,
        dataset.len(),
        std::slice::from_ref(&rows),
    ))
}

/// [`build_grid`] with cells processed on the rayon pool.
pub fn build_grid_parallel(
    dataset: &Dataset,
    delta: f64,
    cell_lengths: &[f64],
    kind: SimilarityKind,
) -> Result<NeighborTable> {
    check_params(dataset, delta, kind)?;
    let grid = GridIndex::new(dataset, cell_lengths)?;
    let reach = grid.reach(delta);
    let th = Threshold::new(delta);
    let parts: Vec<CellRows> = (0..grid.occupied_cells())
        .into_par_iter()
        .map_init(Scratch::default, |scratch, slot| {
            let mut out = CellRows::default();
            cell_rows(dataset, &grid, &reach, &th, slot, scratch, &mut out);
            out
        })
        .collect();
    Ok(assemble(delta, kind, dataset.len(), &parts))
}

/// Point indices ordered by non-increasing influence, ties by ascending index.
pub fn sort_by_influence(table: &NeighborTable) -> Vec<usize> {
    let inf = table.influences();
    let mut order: Vec<usize> = (0..inf.len()).collect();
    order.sort_by(|&a, &b| inf[b].total_cmp(&inf[a]).then(a.cmp(&b)));
    order
}
