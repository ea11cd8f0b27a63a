//! Clustering based on near neighbor influence.
//!
//! The crate covers the whole pipeline: δ near neighbor sets (exhaustive or
//! grid-indexed), the CNNI / ICNNI / ECNNI clustering family, δ estimation
//! from minimum spanning trees, KMeans and DBSCAN baselines, quality
//! measures, synthetic data, CSV loading and RGB pixel quantization of
//! 24-bit bitmaps.

pub mod baselines;
pub mod clustering;
pub mod datagen;
pub mod delta;
pub mod disjoint_set;
pub mod error;
pub mod eval;
pub mod image;
pub mod io;
pub mod model;
pub mod neighbors;

pub use baselines::{dbscan, kmeans, DbscanConfig, KMeansConfig, KMeansResult};
pub use clustering::{cnni, ecnni, icnni, Algorithm, ClusterLabeling, CnniConfig, ManyThreshold};
pub use datagen::{generate, pattern, sample, Preset, Region, Shape, SyntheticSpec};
pub use delta::{
    build_mst, delta_bounds_supervised, delta_grid, estimate_delta_mst, scan_valid_interval, sweep,
    DeltaInterval, GridRange, MstEdgeList, SweepRow,
};
pub use disjoint_set::DisjointSet;
pub use error::{Error, Result};
pub use eval::{adm, adm_weighted, evaluate, purity, EvalReport};
pub use image::{
    compress_image, decode_bmp, encode_bmp, load_bmp_pixels, recolor_by_clusters, write_bmp,
    BmpLayout, Compression, PixelDataset,
};
pub use io::{
    load_csv, read_labels, write_cluster_dump, write_dataset_csv, write_labels, write_truth,
    CsvOptions, LabelColumn,
};
pub use model::{euclidean_distance, influence, similarity, Dataset, SimilarityKind};
pub use neighbors::{
    build_brute, build_brute_parallel, build_grid, build_grid_parallel, sort_by_influence,
    GridIndex, NeighborTable,
};
