//! CSV datasets, label files and cluster dumps.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::clustering::ClusterLabeling;
use crate::error::{Error, Result};
use crate::model::Dataset;

/// Which column, if any, holds the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    None,
    Last,
    /// Zero-based column index.
    Index(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub label_column: LabelColumn,
    /// Rescale every attribute to `[0, 1]` after loading.
    pub normalize: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            has_header: false,
            label_column: LabelColumn::None,
            normalize: false,
        }
    }
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a rectangular numeric table.
///
/// Integer labels are kept as-is. Any non-integer label switches the whole
/// column to names, numbered `1, 2, ...` in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_error(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let mut width: Option<usize> = None;
    let mut coords = Vec::new();
    let mut raw_labels: Vec<(u64, String)> = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut last_line = u64::from(options.has_header);
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map_or(last_line + 1, |p| p.line());
                return Err(parse_error(path, line, e.to_string()));
            }
        }
        let line = record.position().map_or(last_line + 1, |p| p.line());
        last_line = line;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_error(
                    path,
                    line,
                    format!("expected {w} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        let label_at = match options.label_column {
            LabelColumn::None => None,
            LabelColumn::Last => Some(record.len() - 1),
            LabelColumn::Index(i) if i < record.len() => Some(i),
            LabelColumn::Index(i) => {
                return Err(parse_error(
                    path,
                    line,
                    format!("label column {} is past the last field", i + 1),
                ))
            }
        };
        for (col, field) in record.iter().enumerate() {
            if Some(col) == label_at {
                raw_labels.push((line, field.to_string()));
                continue;
            }
            let value: f64 = field.parse().map_err(|_| {
                parse_error(
                    path,
                    line,
                    format!("field {}: '{field}' is not a number", col + 1),
                )
            })?;
            if !value.is_finite() {
                return Err(parse_error(
                    path,
                    line,
                    format!("field {}: value is not finite", col + 1),
                ));
            }
            coords.push(value);
        }
    }

    let width = width.ok_or_else(|| parse_error(path, last_line.max(1), "no data rows"))?;
    let dim = width - usize::from(options.label_column != LabelColumn::None);
    if dim == 0 {
        return Err(parse_error(path, 1, "no feature columns"));
    }
    let mut dataset =
        Dataset::from_flat(dim, coords).map_err(|e| parse_error(path, 1, e.to_string()))?;
    if options.label_column != LabelColumn::None {
        dataset = dataset.with_truth(labels_from_strings(&raw_labels))?;
    }
    Ok(if options.normalize {
        dataset.min_max_normalized()
    } else {
        dataset
    })
}

fn labels_from_strings(raw: &[(u64, String)]) -> Vec<i64> {
    if let Ok(ints) = raw
        .iter()
        .map(|(_, s)| s.parse::<i64>())
        .collect::<Result<Vec<_>, _>>()
    {
        return ints;
    }
    let mut ids: HashMap<&str, i64> = HashMap::new();
    raw.iter()
        .map(|(_, s)| {
            let next = ids.len() as i64 + 1;
            *ids.entry(s.as_str()).or_insert(next)
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_error(path))?))
}

/// Writes coordinates (and the truth label as a last column, when present)
/// with a header row, in a form [`load_csv`] reads back with
/// `has_header = true`.
pub fn write_dataset_csv(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let write = |out: &mut BufWriter<File>| -> io::Result<()> {
        let mut header: Vec<String> = (0..dataset.dim()).map(|k| format!("x{k}")).collect();
        if dataset.truth().is_some() {
            header.push("label".into());
        }
        writeln!(out, "{}", header.join(","))?;
        for (i, p) in dataset.points().enumerate() {
            let mut first = true;
            for v in p {
                if !first {
                    out.write_all(b",")?;
                }
                first = false;
                write!(out, "{v:?}")?;
            }
            if let Some(t) = dataset.truth() {
                write!(out, ",{}", t[i])?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    write(&mut out).map_err(io_error(path))
}

/// One label per line; line `i` is point `i`, `0` is noise.
pub fn write_labels(path: impl AsRef<Path>, labeling: &ClusterLabeling) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let write = |out: &mut BufWriter<File>| -> io::Result<()> {
        for l in labeling.labels() {
            writeln!(out, "{l}")?;
        }
        out.flush()
    };
    write(&mut out).map_err(io_error(path))
}

/// Plain integer truth labels, one per line, in the same format as [`write_labels`].
pub fn write_truth(path: impl AsRef<Path>, truth: &[i64]) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let write = |out: &mut BufWriter<File>| -> io::Result<()> {
        for t in truth {
            writeln!(out, "{t}")?;
        }
        out.flush()
    };
    write(&mut out).map_err(io_error(path))
}

/// Reads a file produced by [`write_labels`].
pub fn read_labels(path: impl AsRef<Path>) -> Result<ClusterLabeling> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_error(path))?;
    let mut labels = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_error(path))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let l: u32 = line
            .parse()
            .map_err(|_| parse_error(path, i as u64 + 1, format!("'{line}' is not a label")))?;
        labels.push(l);
    }
    ClusterLabeling::from_labels(labels).map_err(|e| parse_error(path, 1, e.to_string()))
}

/// CSV of `index,x0,..,label` for plotting.
pub fn write_cluster_dump(
    path: impl AsRef<Path>,
    dataset: &Dataset,
    labeling: &ClusterLabeling,
) -> Result<()> {
    if labeling.len() != dataset.len() {
        return Err(Error::usage(format!(
            "{} labels for {} points",
            labeling.len(),
            dataset.len()
        )));
    }
    let path = path.as_ref();
    let mut out = create(path)?;
    let write = |out: &mut BufWriter<File>| -> io::Result<()> {
        let coords: Vec<String> = (0..dataset.dim()).map(|k| format!("x{k}")).collect();
        writeln!(out, "index,{},label", coords.join(","))?;
        for (i, p) in dataset.points().enumerate() {
            write!(out, "{i}")?;
            for v in p {
                write!(out, ",{v:?}")?;
            }
            writeln!(out, ",{}", labeling.labels()[i])?;
        }
        out.flush()
    };
    write(&mut out).map_err(io_error(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn labeled() -> CsvOptions {
        CsvOptions {
            has_header: true,
            label_column: LabelColumn::Last,
            ..CsvOptions::default()
        }
    }

    #[test]
    fn iris_file_loads() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv");
        let ds = load_csv(&path, &labeled()).unwrap();
        assert_eq!((ds.len(), ds.dim()), (150, 4));
        let mut classes = ds.truth().unwrap().to_vec();
        classes.sort_unstable();
        classes.dedup();
        assert_eq!(classes, vec![1, 2, 3]);
    }

    #[test]
    fn empty_and_header_only_fail() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write_tmp(&dir, "empty.csv", "");
        assert!(matches!(
            load_csv(&empty, &CsvOptions::default()),
            Err(Error::Parse { .. })
        ));
        let header = write_tmp(&dir, "header.csv", "a,b,label\n");
        assert!(matches!(
            load_csv(&header, &labeled()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = write_tmp(&dir, "ragged.csv", "a,b\n1,2\n3,4\n5\n");
        match load_csv(
            &ragged,
            &CsvOptions {
                has_header: true,
                ..CsvOptions::default()
            },
        ) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let text = write_tmp(&dir, "text.csv", "1,2\nx,4\n");
        match load_csv(&text, &CsvOptions::default()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("'x'"));
            }
            other => panic!("{other:?}"),
        }
        let missing = dir.path().join("missing.csv");
        assert!(matches!(
            load_csv(&missing, &CsvOptions::default()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn label_columns_and_options() {
        let dir = tempfile::tempdir().unwrap();
        let named = write_tmp(&dir, "named.csv", "setosa;1;2\nvirginica;3;4\nsetosa;5;6\n");
        let opts = CsvOptions {
            delimiter: b';',
            label_column: LabelColumn::Index(0),
            normalize: true,
            ..CsvOptions::default()
        };
        let ds = load_csv(&named, &opts).unwrap();
        assert_eq!(ds.truth().unwrap(), &[1, 2, 1]);
        assert_eq!(ds.point(1), &[0.5, 0.5]);
        let bad = CsvOptions {
            label_column: LabelColumn::Index(9),
            ..opts
        };
        assert!(matches!(
            load_csv(&named, &bad),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn dataset_and_label_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::from_rows(&[[0.1, 2.0], [1.0 / 3.0, -4.5]])
            .unwrap()
            .with_truth(vec![2, 0])
            .unwrap();
        let p = dir.path().join("ds.csv");
        write_dataset_csv(&p, &ds).unwrap();
        assert_eq!(load_csv(&p, &labeled()).unwrap(), ds);

        let l = ClusterLabeling::from_labels(vec![1, 0, 2, 2]).unwrap();
        let lp = dir.path().join("labels.txt");
        write_labels(&lp, &l).unwrap();
        assert_eq!(fs::read_to_string(&lp).unwrap(), "1\n0\n2\n2\n");
        assert_eq!(read_labels(&lp).unwrap(), l);

        let dump = dir.path().join("dump.csv");
        write_cluster_dump(
            &dump,
            &ds,
            &ClusterLabeling::from_labels(vec![1, 0]).unwrap(),
        )
        .unwrap();
        let text = fs::read_to_string(&dump).unwrap();
        assert_eq!(text.lines().next().unwrap(), "index,x0,x1,label");
        assert_eq!(text.lines().nth(2).unwrap(), "1,0.3333333333333333,-4.5,0");
        assert!(write_cluster_dump(&dump, &ds, &l).unwrap_err().is_usage());
    }
}
