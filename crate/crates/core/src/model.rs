//! Points, datasets and the similarity measures that turn distances into
//! near neighbor influence.
//!
//! Point indices are 0-based in the API. Anything shown to a user (label
//! files, cluster dumps, reports) numbers points from 1, so point `i` here is
//! line `i + 1` there.

use crate::error::{Error, Result};

/// An ordered collection of points of one dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
    truth: Option<Vec<i64>>,
}

impl Dataset {
    /// Builds a dataset from a flat row-major coordinate buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("points must have at least one coordinate"));
        }
        if coords.is_empty() {
            return Err(Error::usage("dataset must contain at least one point"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::usage(format!(
                "coordinate buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::usage(format!(
                "point {} has a non-finite coordinate",
                pos / dim + 1
            )));
        }
        Ok(Dataset {
            dim,
            coords,
            truth: None,
        })
    }

    /// Builds a dataset from per-point rows, which must all have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::usage(format!(
                    "point {} has dimension {}, expected {dim}",
                    i + 1,
                    row.len()
                )));
            }
            coords.extend_from_slice(row);
        }
        Self::from_flat(dim, coords)
    }

    /// Convenience constructor for one-dimensional data.
    pub fn from_1d(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    /// Attaches ground-truth class labels, one per point.
    pub fn with_truth(mut self, truth: Vec<i64>) -> Result<Self> {
        if truth.len() != self.len() {
            return Err(Error::usage(format!(
                "{} truth labels for {} points",
                truth.len(),
                self.len()
            )));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn without_truth(mut self) -> Self {
        self.truth = None;
        self
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn truth(&self) -> Option<&[i64]> {
        self.truth.as_deref()
    }

    /// Distance between points `i` and `j`.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance_unchecked(self.point(i), self.point(j))
    }

    /// Per-dimension `(min, max)` of the coordinates.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.points() {
            for (slot, &c) in b.iter_mut().zip(p) {
                slot.0 = slot.0.min(c);
                slot.1 = slot.1.max(c);
            }
        }
        b
    }

    /// Rescales every attribute to `[0, 1]`. Constant attributes map to 0.
    pub fn min_max_normalized(&self) -> Dataset {
        let bounds = self.bounds();
        let mut coords = self.coords.clone();
        for row in coords.chunks_exact_mut(self.dim) {
            for (c, &(lo, hi)) in row.iter_mut().zip(&bounds) {
                let span = hi - lo;
                *c = if span > 0.0 { (*c - lo) / span } else { 0.0 };
            }
        }
        Dataset {
            dim: self.dim,
            coords,
            truth: self.truth.clone(),
        }
    }

    /// Returns the subset of points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::usage(format!("point index {} out of range", i + 1)));
            }
            coords.extend_from_slice(self.point(i));
        }
        let mut out = Dataset::from_flat(self.dim, coords)?;
        out.truth = self
            .truth
            .as_ref()
            .map(|t| indices.iter().map(|&i| t[i]).collect());
        Ok(out)
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::usage(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(distance_unchecked(a, b))
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[inline]
pub(crate) fn distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// How a distance is converted into a similarity in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SimilarityKind {
    /// `1 / (1 + d)`
    #[default]
    Reciprocal,
    /// `exp(-d)`
    Exp,
    /// `exp(-d / scale)`; the scale is normally the neighbor radius.
    ExpScaled(f64),
}

impl SimilarityKind {
    pub fn exp_scaled(scale: f64) -> Result<Self> {
        if scale > 0.0 && scale.is_finite() {
            Ok(SimilarityKind::ExpScaled(scale))
        } else {
            Err(Error::usage(format!(
                "exp-scaled similarity needs a positive scale, got {scale}"
            )))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimilarityKind::Reciprocal => "reciprocal",
            SimilarityKind::Exp => "exp",
            SimilarityKind::ExpScaled(_) => "exp-scaled",
        }
    }

    #[inline]
    pub(crate) fn apply(&self, d: f64) -> f64 {
        match *self {
            SimilarityKind::Reciprocal => 1.0 / (1.0 + d),
            SimilarityKind::Exp => (-d).exp(),
            SimilarityKind::ExpScaled(scale) => (-d / scale).exp(),
        }
    }
}

/// Similarity for a distance `d >= 0`.
pub fn similarity(d: f64, kind: SimilarityKind) -> Result<f64> {
    if d.is_nan() || d < 0.0 {
        return Err(Error::usage(format!(
            "distance must be non-negative, got {d}"
        )));
    }
    if let SimilarityKind::ExpScaled(s) = kind {
        SimilarityKind::exp_scaled(s)?;
    }
    Ok(kind.apply(d))
}

/// Near neighbor influence: the summed similarity over a neighbor set.
///
/// Terms are accumulated in the given order, which neighbor construction
/// fixes to ascending point index.
pub fn influence(neighbor_distances: &[f64], kind: SimilarityKind) -> Result<f64> {
    neighbor_distances
        .iter()
        .try_fold(0.0, |acc, &d| Ok(acc + similarity(d, kind)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        let d = euclidean_distance(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert!((d - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(euclidean_distance(&[1.0], &[1.0, 2.0])
            .unwrap_err()
            .is_usage());
    }

    #[test]
    fn similarity_examples() {
        let r = SimilarityKind::Reciprocal;
        assert_eq!(similarity(0.0, r).unwrap(), 1.0);
        assert_eq!(similarity(1.0, r).unwrap(), 0.5);
        assert_eq!(similarity(3.0, r).unwrap(), 0.25);
        assert_eq!(similarity(0.0, SimilarityKind::Exp).unwrap(), 1.0);
        assert_eq!(
            similarity(2.0, SimilarityKind::ExpScaled(2.0)).unwrap(),
            (-1.0f64).exp()
        );
        assert!(similarity(-0.5, r).unwrap_err().is_usage());
        assert!(similarity(1.0, SimilarityKind::ExpScaled(0.0)).is_err());
        assert!(SimilarityKind::exp_scaled(-1.0).is_err());
    }

    #[test]
    fn influence_examples() {
        let r = SimilarityKind::Reciprocal;
        assert_eq!(influence(&[], r).unwrap(), 0.0);
        assert_eq!(influence(&[1.0], r).unwrap(), 0.5);
        assert_eq!(influence(&[1.0, 3.0], r).unwrap(), 0.75);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::from_flat(0, vec![]).is_err());
        assert!(Dataset::from_flat(2, vec![]).is_err());
        assert!(Dataset::from_flat(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Dataset::from_flat(1, vec![f64::NAN]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        let ds = Dataset::from_1d(&[1.0, 2.0]).unwrap();
        assert!(ds.clone().with_truth(vec![1]).is_err());
        assert_eq!(
            ds.with_truth(vec![1, 2]).unwrap().truth(),
            Some(&[1, 2][..])
        );
    }

    #[test]
    fn min_max_normalization() {
        let ds = Dataset::from_rows(&[[0.0, 5.0], [10.0, 5.0], [5.0, 5.0]]).unwrap();
        let n = ds.min_max_normalized();
        assert_eq!(n.point(0), &[0.0, 0.0]);
        assert_eq!(n.point(1), &[1.0, 0.0]);
        assert_eq!(n.point(2), &[0.5, 0.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn point3() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-1e3..1e3f64, 3)
        }

        proptest! {
            #[test]
            fn metric_axioms(a in point3(), b in point3(), c in point3()) {
                let ab = euclidean_distance(&a, &b).unwrap();
                let ba = euclidean_distance(&b, &a).unwrap();
                let ac = euclidean_distance(&a, &c).unwrap();
                let bc = euclidean_distance(&b, &c).unwrap();
                prop_assert_eq!(ab, ba);
                prop_assert_eq!(euclidean_distance(&a, &a).unwrap(), 0.0);
                prop_assert!(ac <= ab + bc + 1e-9);
            }

            #[test]
            fn similarity_is_decreasing_and_bounded(d1 in 0.0..1e3f64, d2 in 0.0..1e3f64, s in 0.1..10.0f64) {
                for kind in [SimilarityKind::Reciprocal, SimilarityKind::Exp, SimilarityKind::ExpScaled(s)] {
                    let s1 = similarity(d1, kind).unwrap();
                    let s2 = similarity(d2, kind).unwrap();
                    prop_assert!(s1 >= 0.0);
                    prop_assert!(s1 <= 1.0);
                    if d1 < d2 {
                        prop_assert!(s1 >= s2);
                    }
                }
                // Reciprocal never underflows, so positivity and strictness hold everywhere.
                prop_assert!(similarity(d1, SimilarityKind::Reciprocal).unwrap() > 0.0);
                if d1 < d2 {
                    prop_assert!(similarity(d1, SimilarityKind::Reciprocal).unwrap()
                        > similarity(d2, SimilarityKind::Reciprocal).unwrap());
                }
            }
        }
    }
}
