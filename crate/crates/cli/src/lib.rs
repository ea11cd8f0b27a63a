//! Command-line front end: every subcommand is a plain function over parsed
//! arguments so the binary and the test suites share one code path.
//!
//! Exit statuses: 0 success, 1 usage error, 2 unreadable or malformed
//! input, 3 the estimated δ interval is empty.

use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Map, Value};

use cnni::image::{banded_image, gradient_image, planted_colors};
use cnni::{
    build_mst, compress_image, dbscan, delta_bounds_supervised, delta_grid, estimate_delta_mst,
    evaluate, generate, kmeans, load_bmp_pixels, load_csv, sweep, write_bmp, write_cluster_dump,
    write_dataset_csv, write_labels, write_truth, Algorithm, CnniConfig, CsvOptions, Dataset,
    DbscanConfig, KMeansConfig, LabelColumn, ManyThreshold, Preset, Shape, SimilarityKind,
    SyntheticSpec,
};

pub mod args;
pub mod manifest;

pub use args::Cli;
use args::*;
pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub(crate) fn io(path: &Path, e: io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
        }
    }
}

impl From<cnni::Error> for CliError {
    fn from(e: cnni::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// What a command produced, for the manifest and the exit status.
#[derive(Debug, Default)]
struct Outcome {
    params: Map<String, Value>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    degenerate: bool,
}

impl Outcome {
    fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }
}

/// Parses `args` (without the program name), runs the command and returns
/// the exit status. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(
        std::iter::once("cnni".to_string()).chain(args.iter().cloned()),
    ) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{shown}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{shown}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, &args, out) {
        Ok(degenerate) => {
            if degenerate {
                EXIT_DEGENERATE
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

/// Runs one parsed command; `Ok(true)` means it finished with a degenerate result.
fn execute(command: Command, args: &[String], out: &mut dyn Write) -> CliResult<bool> {
    let started = Instant::now();
    let (name, outcome) = match command {
        Command::Generate(a) => ("generate", cmd_generate(&a, out)?),
        Command::Cluster(a) => ("cluster", cmd_cluster(&a, out)?),
        Command::EstimateDelta(a) => ("estimate-delta", cmd_estimate_delta(&a, out)?),
        Command::CompressImage(a) => ("compress-image", cmd_compress_image(&a, out)?),
        Command::GenerateImage(a) => ("generate-image", cmd_generate_image(&a, out)?),
        Command::Sweep(a) => ("sweep", cmd_sweep(&a, out)?),
        Command::Replay(a) => return cmd_replay(&a, out),
    };
    if let Some(primary) = outcome.outputs.first() {
        let manifest = RunManifest {
            command: name.to_string(),
            args: args.to_vec(),
            params: outcome.params,
            inputs: outcome
                .inputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            outputs: outcome
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            elapsed_ms: started.elapsed().as_millis(),
        };
        manifest.write(&RunManifest::path_for(primary))?;
    }
    Ok(outcome.degenerate)
}

fn emit(out: &mut dyn Write, text: impl fmt::Display) -> CliResult<()> {
    writeln!(out, "{text}").map_err(|e| CliError::Input(format!("stdout: {e}")))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn csv_options(input: &InputArgs) -> CliResult<CsvOptions> {
    if !input.delimiter.is_ascii() {
        return Err(CliError::usage(
            "the delimiter must be a single ASCII character",
        ));
    }
    let delimiter = input.delimiter as u8;
    let has_header = !input.no_header;
    let label_column = match input.label_column.to_ascii_lowercase().as_str() {
        "none" => LabelColumn::None,
        "last" => LabelColumn::Last,
        "auto" => detect_label_column(&input.input, delimiter, has_header),
        other => match other.parse::<usize>() {
            Ok(c) if c >= 1 => LabelColumn::Index(c - 1),
            _ => {
                return Err(CliError::usage(format!(
                    "--label-column must be none, last, auto or a column number, got '{other}'"
                )))
            }
        },
    };
    Ok(CsvOptions {
        delimiter,
        has_header,
        label_column,
        normalize: input.normalize,
    })
}

/// A header whose last name reads like a class column marks it as labels.
fn detect_label_column(path: &Path, delimiter: u8, has_header: bool) -> LabelColumn {
    if !has_header {
        return LabelColumn::None;
    }
    let Ok(file) = fs::File::open(path) else {
        return LabelColumn::None;
    };
    let mut first = String::new();
    if BufReader::new(file).read_line(&mut first).is_err() {
        return LabelColumn::None;
    }
    let last = first
        .trim_end()
        .rsplit(delimiter as char)
        .next()
        .unwrap_or("");
    let last = last.trim().trim_matches('"').to_ascii_lowercase();
    if ["label", "class", "target", "truth"].contains(&last.as_str()) {
        LabelColumn::Last
    } else {
        LabelColumn::None
    }
}

fn load_input(input: &InputArgs, outcome: &mut Outcome) -> CliResult<Dataset> {
    let options = csv_options(input)?;
    outcome.param("header", options.has_header);
    outcome.param("delimiter", input.delimiter.to_string());
    outcome.param(
        "label_column",
        match options.label_column {
            LabelColumn::None => json!("none"),
            LabelColumn::Last => json!("last"),
            LabelColumn::Index(i) => json!(i + 1),
        },
    );
    outcome.param("normalize", options.normalize);
    outcome.inputs.push(input.input.clone());
    Ok(load_csv(&input.input, &options)?)
}

fn need<T: Copy>(value: Option<T>, flag: &str, algo: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("--{flag} is required for {algo}")))
}

fn cnni_config(delta: f64, a: &CnniArgs, outcome: &mut Outcome) -> CliResult<CnniConfig> {
    let kind = match a.kind {
        KindArg::Reciprocal => SimilarityKind::Reciprocal,
        KindArg::Exp => SimilarityKind::Exp,
        KindArg::ExpScaled => SimilarityKind::exp_scaled(a.scale.unwrap_or(delta))?,
    };
    let threshold = match a.threshold {
        ThresholdArg::Truncated => ManyThreshold::Truncated,
        ThresholdArg::Exact => ManyThreshold::Exact,
    };
    outcome.param("kind", kind.name());
    if let SimilarityKind::ExpScaled(s) = kind {
        outcome.param("scale", s);
    }
    outcome.param("many_fraction", a.many_fraction);
    outcome.param("threshold", format!("{threshold:?}").to_ascii_lowercase());
    outcome.param("overwrite", !a.no_overwrite);
    let config = CnniConfig::new(delta)
        .with_kind(kind)
        .with_many_fraction(a.many_fraction)
        .with_threshold(threshold)
        .with_overwrite(!a.no_overwrite);
    config.validate()?;
    Ok(config)
}

fn cell_lengths(cell: &[f64], dim: usize) -> CliResult<Vec<f64>> {
    match cell.len() {
        0 => Err(CliError::usage("--cell is required for icnni")),
        1 => Ok(vec![cell[0]; dim]),
        n if n == dim => Ok(cell.to_vec()),
        n => Err(CliError::usage(format!(
            "--cell lists {n} lengths for {dim}-dimensional data"
        ))),
    }
}

fn family(algo: AlgoArg, cell: &[f64], dim: usize, outcome: &mut Outcome) -> CliResult<Algorithm> {
    Ok(match algo {
        AlgoArg::Cnni => Algorithm::Cnni,
        AlgoArg::Ecnni => Algorithm::Ecnni,
        AlgoArg::Icnni => {
            let cells = cell_lengths(cell, dim)?;
            outcome.param("cell", cells.clone());
            Algorithm::Icnni {
                cell_lengths: cells,
            }
        }
        AlgoArg::Kmeans | AlgoArg::Dbscan => {
            return Err(CliError::usage(
                "delta sweeps apply to cnni, icnni and ecnni only",
            ))
        }
    })
}

fn algo_name(algo: AlgoArg) -> &'static str {
    match algo {
        AlgoArg::Cnni => "cnni",
        AlgoArg::Icnni => "icnni",
        AlgoArg::Ecnni => "ecnni",
        AlgoArg::Kmeans => "kmeans",
        AlgoArg::Dbscan => "dbscan",
    }
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> CliResult<Outcome> {
    let mut outcome = Outcome::default();
    outcome.param("seed", a.seed);
    let dataset = match &a.preset {
        Some(name) => {
            let preset = Preset::parse(name)?;
            outcome.param("preset", preset.name());
            match preset.spec(1, a.seed) {
                Some(_) => {
                    let n = need(a.n, "n", preset.name())?;
                    outcome.param("n", n);
                    preset.generate(n, a.seed)?
                }
                None => {
                    outcome.param("n", Preset::PATTERN_POINTS);
                    preset.generate(Preset::PATTERN_POINTS, a.seed)?
                }
            }
        }
        None => {
            let clusters = need(a.clusters, "clusters", "generate without --preset")?;
            let cs = need(a.semidiameter, "semidiameter", "generate without --preset")?;
            let n = need(a.n, "n", "generate")?;
            let shape = match a.shape {
                ShapeArg::Blob => Shape::Blob,
                ShapeArg::Ring => Shape::Ring,
                ShapeArg::Chain => Shape::Chain,
            };
            outcome.param("clusters", clusters);
            outcome.param("semidiameter", cs);
            outcome.param("n", n);
            outcome.param("noise", a.noise);
            outcome.param("shape", format!("{shape:?}").to_ascii_lowercase());
            let spec = SyntheticSpec::new(clusters, cs, n, a.seed)
                .with_noise(a.noise)
                .with_shape(shape);
            generate(&spec)?
        }
    };
    let truth_path = a.truth.clone().unwrap_or_else(|| {
        let mut p = a.output.as_os_str().to_os_string();
        p.push(".truth.txt");
        PathBuf::from(p)
    });
    write_dataset_csv(&a.output, &dataset)?;
    let truth = dataset.truth().expect("generated data carries truth");
    write_truth(&truth_path, truth)?;
    let classes = truth.iter().filter(|&&t| t > 0).max().copied().unwrap_or(0);
    let noise = truth.iter().filter(|&&t| t == 0).count();
    emit(
        out,
        format!(
            "wrote {} points ({classes} clusters, {noise} noise) to {}",
            dataset.len(),
            a.output.display()
        ),
    )?;
    outcome.outputs.push(a.output.clone());
    outcome.outputs.push(truth_path);
    Ok(outcome)
}

fn cmd_cluster(a: &ClusterArgs, out: &mut dyn Write) -> CliResult<Outcome> {
    let mut outcome = Outcome::default();
    let name = algo_name(a.algo);
    outcome.param("algorithm", name);
    let dataset = load_input(&a.input, &mut outcome)?;

    let (labeling, elapsed) = match a.algo {
        AlgoArg::Cnni | AlgoArg::Icnni | AlgoArg::Ecnni => {
            let delta = need(a.delta, "delta", name)?;
            outcome.param("delta", delta);
            let config = cnni_config(delta, &a.cnni, &mut outcome)?;
            let algo = family(a.algo, &a.cnni.cell, dataset.dim(), &mut outcome)?;
            let t = Instant::now();
            let labeling = algo.run(&dataset, &config)?;
            (labeling, t.elapsed())
        }
        AlgoArg::Kmeans => {
            let k = need(a.k, "k", name)?;
            outcome.param("k", k);
            outcome.param("seed", a.seed);
            outcome.param("max_iters", a.max_iters);
            let config = KMeansConfig::new(k, a.seed).with_max_iters(a.max_iters);
            let t = Instant::now();
            let result = kmeans(&dataset, &config)?;
            (result.labeling, t.elapsed())
        }
        AlgoArg::Dbscan => {
            let eps = need(a.eps, "eps", name)?;
            let min_pts = need(a.min_pts, "min-pts", name)?;
            outcome.param("eps", eps);
            outcome.param("min_pts", min_pts);
            let t = Instant::now();
            let labeling = dbscan(&dataset, &DbscanConfig::new(eps, min_pts))?;
            (labeling, t.elapsed())
        }
    };

    let report = evaluate(&dataset, &labeling, None, elapsed)?;
    emit(out, &report)?;
    if let Some(path) = &a.output {
        write_labels(path, &labeling)?;
        outcome.outputs.push(path.clone());
    }
    if let Some(path) = &a.dump {
        write_cluster_dump(path, &dataset, &labeling)?;
        outcome.outputs.push(path.clone());
    }
    if let Some(path) = &a.report {
        write_text(
            path,
            &format!("{}\n{}\n", cnni::EvalReport::CSV_HEADER, report.csv_row()),
        )?;
        outcome.outputs.push(path.clone());
    }
    Ok(outcome)
}

fn cmd_estimate_delta(a: &EstimateArgs, out: &mut dyn Write) -> CliResult<Outcome> {
    let mut outcome = Outcome::default();
    let mut dataset = load_input(&a.input, &mut outcome)?;
    if let Some(k) = a.sample {
        outcome.param("sample", k);
        outcome.param("seed", a.seed);
        dataset = cnni::sample(&dataset, k, a.seed)?;
    }
    let (method, interval) = match a.method {
        MethodArg::Mst => {
            let edges = build_mst(&dataset)?;
            let interval = estimate_delta_mst(&edges)?;
            let e = edges.edges();
            let k = cnni::delta::max_gap_index(&edges)?;
            emit(out, format!("edges: {}", e.len()))?;
            emit(out, format!("min_edge: {}", e[0]))?;
            emit(out, format!("max_edge: {}", e[e.len() - 1]))?;
            emit(out, format!("gap_index: {k}"))?;
            emit(out, format!("gap: {}", interval.high - interval.low))?;
            ("mst", interval)
        }
        MethodArg::Bound => {
            if dataset.truth().is_none() {
                return Err(CliError::usage("--method bound needs a label column"));
            }
            ("bound", delta_bounds_supervised(&dataset)?)
        }
    };
    outcome.param("method", method);
    emit(out, format!("interval: {interval}"))?;
    if interval.is_empty() {
        emit(
            out,
            "degenerate: the interval is empty, no delta satisfies it",
        )?;
    } else {
        let (lo, hi) = interval.integer_bounds();
        emit(out, format!("integer: [{lo}, {hi}]"))?;
    }
    if let Some(path) = &a.report {
        write_text(
            path,
            &format!(
                "method,low,high,empty\n{method},{:?},{:?},{}\n",
                interval.low,
                interval.high,
                interval.is_empty()
            ),
        )?;
        outcome.outputs.push(path.clone());
    }
    outcome.degenerate = interval.is_empty();
    Ok(outcome)
}

fn cmd_compress_image(a: &CompressArgs, out: &mut dyn Write) -> CliResult<Outcome> {
    let mut outcome = Outcome::default();
    outcome.inputs.push(a.input.clone());
    outcome.param("delta", a.delta);
    let image = load_bmp_pixels(&a.input)?;
    let config = cnni_config(a.delta, &a.cnni, &mut outcome)?;
    let t = Instant::now();
    let result = compress_image(&image, &config)?;
    let elapsed = t.elapsed();
    write_bmp(&a.output, &result.image)?;
    outcome.outputs.push(a.output.clone());
    let out_colors = result.image.distinct_colors();
    emit(out, format!("CN={}", result.cn()))?;
    emit(out, format!("ADM={:.4}", result.adm))?;
    emit(out, format!("NOISE={}", result.labeling.noise_count()))?;
    emit(out, format!("COLORS_IN={}", result.distinct_colors))?;
    emit(out, format!("COLORS_OUT={out_colors}"))?;
    emit(out, format!("ST_MS={}", elapsed.as_millis()))?;
    if let Some(path) = &a.labels {
        write_labels(path, &result.labeling)?;
        outcome.outputs.push(path.clone());
    }
    if let Some(path) = &a.report {
        write_text(
            path,
            &format!(
                "cn,adm,noise,colors_in,colors_out,st_ms\n{},{:.6},{},{},{out_colors},{}\n",
                result.cn(),
                result.adm,
                result.labeling.noise_count(),
                result.distinct_colors,
                elapsed.as_millis()
            ),
        )?;
        outcome.outputs.push(path.clone());
    }
    Ok(outcome)
}

fn cmd_generate_image(a: &GenerateImageArgs, out: &mut dyn Write) -> CliResult<Outcome> {
    let mut outcome = Outcome::default();
    outcome.param("width", a.width);
    outcome.param("height", a.height);
    let image = match a.colors {
        Some(k) => {
            outcome.param("colors", k);
            outcome.param("separation", a.separation);
            outcome.param("jitter", a.jitter);
            outcome.param("seed", a.seed);
            let palette = planted_colors(k, a.separation, a.jitter, a.seed)?;
            banded_image(a.width, a.height, &palette, a.jitter, a.seed)?
        }
        None => {
            outcome.param("gradient", true);
            gradient_image(a.width, a.height)?
        }
    };
    write_bmp(&a.output, &image)?;
    emit(
        out,
        format!(
            "wrote {}x{} image with {} distinct colors to {}",
            a.width,
            a.height,
            image.distinct_colors(),
            a.output.display()
        ),
    )?;
    outcome.outputs.push(a.output.clone());
    Ok(outcome)
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> CliResult<Outcome> {
    let mut outcome = Outcome::default();
    outcome.param("algorithm", algo_name(a.algo));
    if matches!(a.algo, AlgoArg::Kmeans | AlgoArg::Dbscan) {
        return Err(CliError::usage(
            "delta sweeps apply to cnni, icnni and ecnni only",
        ));
    }
    if a.cnni.kind == KindArg::ExpScaled && a.cnni.scale.is_none() {
        return Err(CliError::usage("--scale is required for exp-scaled sweeps"));
    }
    let grid = delta_grid(a.from, a.to, a.step)?;
    outcome.param("from", a.from);
    outcome.param("to", a.to);
    outcome.param("step", a.step);
    let dataset = load_input(&a.input, &mut outcome)?;
    let base = cnni_config(a.from, &a.cnni, &mut outcome)?;
    let algo = family(a.algo, &a.cnni.cell, dataset.dim(), &mut outcome)?;
    let rows = sweep(&dataset, &algo, &base, &grid)?;

    let mut table = String::from("delta,nc,noise,adm\n");
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{:.6}\n",
            r.delta, r.num_clusters, r.noise, r.adm
        ));
    }
    match &a.output {
        Some(path) => {
            write_text(path, &table)?;
            outcome.outputs.push(path.clone());
        }
        None => emit(out, table.trim_end())?,
    }
    if let Some(target) = a.target_nc {
        if target == 0 {
            return Err(CliError::usage("--target-nc must be positive"));
        }
        outcome.param("target_nc", target);
        let ranges = cnni::delta::valid_ranges(&rows, target);
        if ranges.is_empty() {
            emit(out, format!("valid[{target}]: none"))?;
        }
        for r in ranges {
            emit(out, format!("valid[{target}]: {r}"))?;
        }
    }
    Ok(outcome)
}

fn cmd_replay(a: &ReplayArgs, out: &mut dyn Write) -> CliResult<bool> {
    let manifest = RunManifest::read(&a.manifest)?;
    let cli = Cli::try_parse_from(
        std::iter::once("cnni".to_string()).chain(manifest.args.iter().cloned()),
    )
    .map_err(|e| {
        CliError::Input(format!(
            "{}: recorded arguments no longer parse: {e}",
            a.manifest.display()
        ))
    })?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Input(format!(
            "{}: a manifest cannot replay a replay",
            a.manifest.display()
        )));
    }
    execute(cli.command, &manifest.args, out)
}
