//! Uncompressed 24-bit BMP images as RGB point sets, and color quantization
//! by clustering those points.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::{cnni, ClusterLabeling, CnniConfig};
use crate::error::{Error, Result};
use crate::eval::adm_weighted;
use crate::io::io_error;
use crate::model::Dataset;
use crate::neighbors::build_grid_parallel;

const FILE_HEADER_LEN: usize = 14;
const INFO_HEADER_LEN: u32 = 40;
const DEFAULT_PPM: i32 = 2835;

/// Header fields preserved so a decoded file re-encodes to the same bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BmpLayout {
    /// Rows stored first-to-last from the top (negative height in the header).
    pub top_down: bool,
    pub x_pixels_per_meter: i32,
    pub y_pixels_per_meter: i32,
}

impl Default for BmpLayout {
    fn default() -> Self {
        BmpLayout {
            top_down: false,
            x_pixels_per_meter: DEFAULT_PPM,
            y_pixels_per_meter: DEFAULT_PPM,
        }
    }
}

/// An RGB image, pixels in row-major order from the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelDataset {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
    layout: BmpLayout,
}

impl PixelDataset {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::usage("image dimensions must be positive"));
        }
        if pixels.len() as u64 != u64::from(width) * u64::from(height) {
            return Err(Error::usage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(PixelDataset {
            width,
            height,
            pixels,
            layout: BmpLayout::default(),
        })
    }

    pub fn with_layout(mut self, layout: BmpLayout) -> Self {
        self.layout = layout;
        self
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn layout(&self) -> BmpLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// One 3-D point per pixel.
    pub fn to_dataset(&self) -> Dataset {
        let coords = self
            .pixels
            .iter()
            .flat_map(|p| p.iter().map(|&c| f64::from(c)))
            .collect();
        Dataset::from_flat(3, coords).expect("an image has at least one pixel")
    }

    pub fn distinct_colors(&self) -> usize {
        let mut seen: Vec<[u8; 3]> = self.pixels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

fn format_error(path: &Path, field: &'static str, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        field,
        message: message.into(),
    }
}

fn row_stride(width: u32) -> usize {
    (width as usize * 3 + 3) & !3
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn i32_at(b: &[u8], at: usize) -> i32 {
    u32_at(b, at) as i32
}

/// Decodes an uncompressed 24-bit bitmap with a `BITMAPINFOHEADER` (or a
/// later header version that extends it). `path` only labels errors.
pub fn decode_bmp(bytes: &[u8], path: &Path) -> Result<PixelDataset> {
    if bytes.len() < FILE_HEADER_LEN + INFO_HEADER_LEN as usize {
        return Err(format_error(
            path,
            "file_size",
            format!("{} bytes is too short", bytes.len()),
        ));
    }
    if &bytes[0..2] != b"BM" {
        return Err(format_error(path, "signature", "expected 'BM'"));
    }
    let data_offset = u32_at(bytes, 10) as usize;
    let header_size = u32_at(bytes, 14);
    if header_size < INFO_HEADER_LEN {
        return Err(format_error(path, "header_size", format!("{header_size}")));
    }
    let width = i32_at(bytes, 18);
    let height = i32_at(bytes, 22);
    let planes = u16_at(bytes, 26);
    let bit_count = u16_at(bytes, 28);
    let compression = u32_at(bytes, 30);
    if width <= 0 {
        return Err(format_error(path, "width", format!("{width}")));
    }
    if height == 0 || height == i32::MIN {
        return Err(format_error(path, "height", format!("{height}")));
    }
    if planes != 1 {
        return Err(format_error(path, "planes", format!("{planes}")));
    }
    if bit_count != 24 {
        return Err(format_error(
            path,
            "bit_count",
            format!("{bit_count}, only 24 is supported"),
        ));
    }
    if compression != 0 {
        return Err(format_error(
            path,
            "compression",
            format!("{compression}, only uncompressed is supported"),
        ));
    }
    let width = width as u32;
    let top_down = height < 0;
    let rows = height.unsigned_abs();
    let stride = row_stride(width);
    let needed = stride as u64 * u64::from(rows);
    if data_offset < FILE_HEADER_LEN + header_size as usize
        || (bytes.len() as u64) < data_offset as u64 + needed
    {
        return Err(format_error(
            path,
            "pixel_data",
            "pixel array lies outside the file",
        ));
    }

    let mut pixels = vec![[0u8; 3]; width as usize * rows as usize];
    for stored in 0..rows as usize {
        let y = if top_down {
            stored
        } else {
            rows as usize - 1 - stored
        };
        let row = &bytes[data_offset + stored * stride..];
        for x in 0..width as usize {
            let bgr = &row[3 * x..3 * x + 3];
            pixels[y * width as usize + x] = [bgr[2], bgr[1], bgr[0]];
        }
    }
    Ok(PixelDataset {
        width,
        height: rows,
        pixels,
        layout: BmpLayout {
            top_down,
            x_pixels_per_meter: i32_at(bytes, 38),
            y_pixels_per_meter: i32_at(bytes, 42),
        },
    })
}

/// Encodes with a 14-byte file header and a 40-byte `BITMAPINFOHEADER`.
pub fn encode_bmp(image: &PixelDataset) -> Vec<u8> {
    let stride = row_stride(image.width);
    let data_len = stride * image.height as usize;
    let offset = FILE_HEADER_LEN + INFO_HEADER_LEN as usize;
    let mut out = Vec::with_capacity(offset + data_len);
    out.extend_from_slice(b"BM");
    out.extend_from_slice(&((offset + data_len) as u32).to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    out.extend_from_slice(&(offset as u32).to_le_bytes());
    out.extend_from_slice(&INFO_HEADER_LEN.to_le_bytes());
    out.extend_from_slice(&(image.width as i32).to_le_bytes());
    let h = image.height as i32;
    out.extend_from_slice(&(if image.layout.top_down { -h } else { h }).to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&24u16.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    out.extend_from_slice(&image.layout.x_pixels_per_meter.to_le_bytes());
    out.extend_from_slice(&image.layout.y_pixels_per_meter.to_le_bytes());
    out.extend_from_slice(&[0; 8]);
    let w = image.width as usize;
    for stored in 0..image.height as usize {
        let y = if image.layout.top_down {
            stored
        } else {
            image.height as usize - 1 - stored
        };
        for p in &image.pixels[y * w..(y + 1) * w] {
            out.extend_from_slice(&[p[2], p[1], p[0]]);
        }
        out.resize(out.len() + stride - 3 * w, 0);
    }
    out
}

pub fn load_bmp_pixels(path: impl AsRef<Path>) -> Result<PixelDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_error(path))?;
    decode_bmp(&bytes, path)
}

pub fn write_bmp(path: impl AsRef<Path>, image: &PixelDataset) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_bmp(image)).map_err(io_error(path))
}

fn round_channel(sum: f64, count: f64) -> u8 {
    (sum / count).round().clamp(0.0, 255.0) as u8
}

/// Replaces each clustered pixel by its cluster's mean color, rounded per
/// channel; noise pixels keep their color.
pub fn recolor_by_clusters(
    image: &PixelDataset,
    labeling: &ClusterLabeling,
) -> Result<PixelDataset> {
    if labeling.len() != image.len() {
        return Err(Error::usage(format!(
            "{} labels for {} pixels",
            labeling.len(),
            image.len()
        )));
    }
    let k = labeling.num_clusters();
    let mut sums = vec![[0.0f64; 3]; k];
    let mut counts = vec![0.0f64; k];
    for (p, &l) in image.pixels.iter().zip(labeling.labels()) {
        if l > 0 {
            let c = l as usize - 1;
            counts[c] += 1.0;
            for ch in 0..3 {
                sums[c][ch] += f64::from(p[ch]);
            }
        }
    }
    let means: Vec<[u8; 3]> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| {
            [
                round_channel(s[0], n),
                round_channel(s[1], n),
                round_channel(s[2], n),
            ]
        })
        .collect();
    let pixels = image
        .pixels
        .iter()
        .zip(labeling.labels())
        .map(|(&p, &l)| if l == 0 { p } else { means[l as usize - 1] })
        .collect();
    Ok(PixelDataset {
        pixels,
        ..image.clone()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compression {
    /// Per-pixel labels.
    pub labeling: ClusterLabeling,
    pub image: PixelDataset,
    pub adm: f64,
    pub distinct_colors: usize,
}

impl Compression {
    /// Number of clusters (color count before noise).
    pub fn cn(&self) -> usize {
        self.labeling.num_clusters()
    }
}

/// Clusters the pixels in RGB space with the base algorithm and recolors
/// by cluster means.
///
/// Each distinct color is clustered once, weighted by how many pixels carry
/// it; pixels of one color always share a label.
pub fn compress_image(image: &PixelDataset, config: &CnniConfig) -> Result<Compression> {
    config.validate()?;
    let mut index: HashMap<[u8; 3], usize> = HashMap::new();
    let mut palette: Vec<[u8; 3]> = image.pixels.clone();
    palette.sort_unstable();
    palette.dedup();
    for (i, c) in palette.iter().enumerate() {
        index.insert(*c, i);
    }
    let mut weights = vec![0u64; palette.len()];
    let pixel_color: Vec<usize> = image
        .pixels
        .iter()
        .map(|p| {
            let i = index[p];
            weights[i] += 1;
            i
        })
        .collect();
    let colors = Dataset::from_flat(
        3,
        palette
            .iter()
            .flat_map(|p| p.iter().map(|&c| f64::from(c)))
            .collect(),
    )?;
    let cell = [config.delta; 3];
    let table = build_grid_parallel(&colors, config.delta, &cell, config.kind)?
        .reweighted(weights.clone())?;
    let clustered = cnni(&colors, &table, config)?;
    // Identical pixels are never neighbors; a color shared by several pixels
    // with no neighbor colors is still a cluster of its own.
    let mut next = clustered.num_clusters();
    let raw: Vec<usize> = clustered
        .labels()
        .iter()
        .zip(&weights)
        .map(|(&l, &w)| match (l, w) {
            (0, w) if w >= 2 => {
                next += 1;
                next
            }
            (l, _) => l as usize,
        })
        .collect();
    let color_labels = ClusterLabeling::from_raw_ids(&raw);
    let adm = adm_weighted(&colors, &color_labels, Some(&weights))?;
    let labeling = ClusterLabeling::from_labels(
        pixel_color
            .iter()
            .map(|&c| color_labels.labels()[c])
            .collect(),
    )?;
    let recolored = recolor_by_clusters(image, &labeling)?;
    Ok(Compression {
        labeling,
        image: recolored,
        adm,
        distinct_colors: palette.len(),
    })
}

/// `k` colors in `[margin, 255 - margin]^3`, pairwise farther apart than `min_separation`.
pub fn planted_colors(
    k: usize,
    min_separation: f64,
    margin: u8,
    seed: u64,
) -> Result<Vec<[u8; 3]>> {
    if k == 0 || margin > 127 {
        return Err(Error::usage(
            "need at least one color and a margin below 128",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut colors: Vec<[u8; 3]> = Vec::with_capacity(k);
    let mut attempts = 0;
    while colors.len() < k {
        attempts += 1;
        if attempts > 1_000_000 {
            return Err(Error::usage(format!(
                "cannot place {k} colors {min_separation} apart"
            )));
        }
        let c = [
            rng.random_range(margin..=255 - margin),
            rng.random_range(margin..=255 - margin),
            rng.random_range(margin..=255 - margin),
        ];
        let far = colors.iter().all(|o| {
            let d: f64 = (0..3)
                .map(|i| (f64::from(o[i]) - f64::from(c[i])).powi(2))
                .sum();
            d.sqrt() > min_separation
        });
        if far {
            colors.push(c);
        }
    }
    Ok(colors)
}

/// Image of horizontal bands, one per color, each pixel jittered by up to
/// `jitter` per channel.
pub fn banded_image(
    width: u32,
    height: u32,
    colors: &[[u8; 3]],
    jitter: u8,
    seed: u64,
) -> Result<PixelDataset> {
    if colors.is_empty() {
        return Err(Error::usage("need at least one color"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = i16::from(jitter);
    let mut pixels = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height as usize {
        let base = colors[y * colors.len() / height as usize];
        for _ in 0..width {
            let mut p = [0u8; 3];
            for ch in 0..3 {
                let off = if j > 0 { rng.random_range(-j..=j) } else { 0 };
                p[ch] = (i16::from(base[ch]) + off).clamp(0, 255) as u8;
            }
            pixels.push(p);
        }
    }
    PixelDataset::new(width, height, pixels)
}

/// Smooth red/green ramp over a constant blue channel.
pub fn gradient_image(width: u32, height: u32) -> Result<PixelDataset> {
    let ramp = |i: u32, n: u32| if n > 1 { (i * 255 / (n - 1)) as u8 } else { 0 };
    let pixels = (0..height)
        .flat_map(|y| (0..width).map(move |x| [ramp(x, width), ramp(y, height), 128]))
        .collect();
    PixelDataset::new(width, height, pixels)
}
