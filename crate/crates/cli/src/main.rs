//! `tonas`: batch front end for transcription, distances, classification,
//! α sweeps, phylogenetic exports and the corpus report.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 partial data
//! failure (some cantes could not be processed).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;
use tonas_core::analysis::{
    alpha_sweep, integrate, knn_unanimous, nearest_centroid_loo, normalize_matrix,
    parse_alpha_grid, Classification, KRule,
};
use tonas_core::contour::ContourConfig;
use tonas_core::midlevel::FeatureEncoding;
use tonas_core::phylo::{
    export_newick, export_nexus, export_phylip, lsfit, neighbor_joining, patristic_distances,
};
use tonas_core::pipeline::{self, build_report, PipelineError, ReportConfig};
use tonas_core::symbolic::{load_manifest, write_notes, CorpusManifest};
use tonas_core::transcription::SegmentationConfig;
use tonas_core::DistanceMatrix;

#[derive(Parser, Debug)]
#[command(
    name = "tonas",
    version,
    about = "Melodic analysis of a cappella flamenco cantes"
)]
struct Cli {
    /// Corpus manifest (JSON list of entries).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Seed for the cross-validation partition.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// More log output (-v info, -vv debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(flatten)]
    seg: SegArgs,
    #[command(flatten)]
    contour: ContourArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SegArgs {
    /// Weight of pitch stability in the segment score.
    #[arg(long, global = true)]
    w_pitch: Option<f64>,
    /// Weight of onset evidence in the segment score.
    #[arg(long, global = true)]
    w_energy: Option<f64>,
    /// Weight of the duration prior in the segment score.
    #[arg(long, global = true)]
    w_duration: Option<f64>,
    /// Shortest plausible note, seconds.
    #[arg(long, global = true)]
    min_note: Option<f64>,
    /// Longest plausible note, seconds.
    #[arg(long, global = true)]
    max_note: Option<f64>,
    /// Notes shorter than this are absorbed by a neighbour, seconds.
    #[arg(long, global = true)]
    short_note_threshold: Option<f64>,
    /// Equal-pitch neighbours joined by a smaller jump are merged.
    #[arg(long, global = true)]
    soft_transition_cents: Option<f64>,
    /// Pitch-derivative scale of the tuning frame weights.
    #[arg(long, global = true)]
    derivative_scale_cents: Option<f64>,
}

#[derive(Args, Debug)]
struct ContourArgs {
    /// Interval n-gram length for contour matching.
    #[arg(long, global = true)]
    ngram_n: Option<usize>,
    /// Duration quantum (seconds) for rhythm weighting.
    #[arg(long, global = true)]
    grid_quantum: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MatrixKind {
    Mc,
    Md,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Classifier {
    Centroid,
    Knn,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Variables {
    Full,
    Reduced,
}

impl Variables {
    fn encoding(self) -> FeatureEncoding {
        match self {
            Self::Full => FeatureEncoding::FULL7,
            Self::Reduced => FeatureEncoding::REDUCED4,
        }
    }
}

/// Sources for the two distance matrices.
#[derive(Args, Debug)]
struct MatrixInputs {
    /// Contour distance matrix (TSV); computed from the manifest if absent.
    #[arg(long)]
    mc: Option<PathBuf>,
    /// Feature distance matrix (TSV); computed from the manifest if absent.
    #[arg(long)]
    md: Option<PathBuf>,
    /// Feature set for a computed feature distance.
    #[arg(long, value_enum, default_value = "reduced")]
    variables: Variables,
    /// Use this k for every cante instead of floor(sqrt(class size)).
    #[arg(long)]
    fixed_k: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transcribe every frames/WAV entry to a notes CSV.
    Transcribe,
    /// Compute a distance matrix over the corpus.
    Dist {
        #[arg(value_enum)]
        kind: MatrixKind,
        /// Output file (default: <out-dir>/dmc.tsv or dmd.tsv).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "reduced")]
        variables: Variables,
    },
    /// Classify the corpus on the integrated distance.
    Classify {
        #[arg(value_enum)]
        method: Classifier,
        #[command(flatten)]
        inputs: MatrixInputs,
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
        /// JSON report file (default: <out-dir>/<method>_report.json).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Unanimous k-NN errors over a grid of alphas.
    Sweep {
        #[command(flatten)]
        inputs: MatrixInputs,
        /// Grid as start:stop:step or a comma-separated list.
        #[arg(long, default_value = "0:1:0.1")]
        alphas: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Neighbour-joining tree and exports for a distance matrix.
    Phylo {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        nexus: Option<PathBuf>,
        #[arg(long)]
        newick: Option<PathBuf>,
        #[arg(long)]
        phylip: Option<PathBuf>,
        /// JSON with the fit index and clamped branch count.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Full report bundle into the output directory.
    Report {
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
        #[arg(long, default_value = "0:1:0.1")]
        alphas: String,
        #[arg(long, value_enum, default_value = "reduced")]
        variables: Variables,
        #[arg(long)]
        fixed_k: Option<usize>,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Partial(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<PipelineError>() {
            Some(PipelineError::Failures(_)) => Failure::Partial(e),
            _ => Failure::Usage(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn segmentation(a: &SegArgs) -> SegmentationConfig {
    let mut c = SegmentationConfig::default();
    let set = |field: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *field = v;
        }
    };
    set(&mut c.w_pitch, a.w_pitch);
    set(&mut c.w_energy, a.w_energy);
    set(&mut c.w_duration, a.w_duration);
    set(&mut c.min_note, a.min_note);
    set(&mut c.max_note, a.max_note);
    set(&mut c.short_note_threshold, a.short_note_threshold);
    set(&mut c.soft_transition_cents, a.soft_transition_cents);
    set(&mut c.derivative_scale_cents, a.derivative_scale_cents);
    c
}

fn contour(a: &ContourArgs) -> Result<ContourConfig> {
    let mut c = ContourConfig::default();
    if let Some(n) = a.ngram_n {
        if n == 0 {
            bail!("--ngram-n must be at least 1");
        }
        c.ngram_n = n;
    }
    if let Some(q) = a.grid_quantum {
        if !(q.is_finite() && q > 0.0) {
            bail!("--grid-quantum must be positive, got {q}");
        }
        c.grid_quantum = q;
    }
    Ok(c)
}

fn manifest(cli: &Cli) -> Result<CorpusManifest> {
    let path = cli
        .manifest
        .as_ref()
        .ok_or_else(|| anyhow!("--manifest is required for this command"))?;
    let m = load_manifest(path).with_context(|| format!("loading {}", path.display()))?;
    if m.is_empty() {
        bail!("manifest {} lists no cantes", path.display());
    }
    Ok(m)
}

fn k_rule(fixed: Option<usize>) -> KRule {
    fixed.map_or(KRule::PerClass, KRule::Fixed)
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let seg = segmentation(&cli.seg);
    seg.validate(tonas_core::symbolic::FRAME_PERIOD)
        .context("invalid segmentation settings")?;
    let contour = contour(&cli.contour)?;
    match &cli.command {
        Command::Transcribe => transcribe(cli, &seg),
        Command::Dist {
            kind,
            out,
            variables,
        } => {
            let m = manifest(cli)?;
            let (d, name) = match kind {
                MatrixKind::Mc => (
                    pipeline::mc_matrix(&m, &seg, &contour).map_err(anyhow::Error::from)?,
                    "dmc.tsv",
                ),
                MatrixKind::Md => (
                    pipeline::md_matrix(&m, &variables.encoding()).map_err(anyhow::Error::from)?,
                    "dmd.tsv",
                ),
            };
            let out = out.clone().unwrap_or_else(|| cli.out_dir.join(name));
            write_atomic(&out, &d.to_tsv())?;
            Ok(())
        }
        Command::Classify {
            method,
            inputs,
            alpha,
            report,
        } => {
            let m = manifest(cli)?;
            let (dmc, dmd) = matrices(&m, inputs, &seg, &contour)?;
            let dint = integrate(&dmc, &dmd, *alpha).map_err(anyhow::Error::from)?;
            let labels = m.labels();
            let (c, name): (Classification, _) = match method {
                Classifier::Centroid => (
                    nearest_centroid_loo(&dint, &labels).map_err(anyhow::Error::from)?,
                    "centroid_report.json",
                ),
                Classifier::Knn => (
                    knn_unanimous(&dint, &labels, k_rule(inputs.fixed_k))
                        .map_err(anyhow::Error::from)?,
                    "knn_report.json",
                ),
            };
            let body = serde_json::to_string_pretty(&json!({
                "alpha": alpha,
                "report": c.report,
                "predictions": c.outcome.items,
            }))
            .map_err(anyhow::Error::from)?;
            let out = report.clone().unwrap_or_else(|| cli.out_dir.join(name));
            write_atomic(&out, &(body + "\n"))?;
            print!("{}", c.report.to_tsv());
            Ok(())
        }
        Command::Sweep {
            inputs,
            alphas,
            out,
        } => {
            let m = manifest(cli)?;
            let grid = parse_alpha_grid(alphas).map_err(anyhow::Error::from)?;
            let (dmc, dmd) = matrices(&m, inputs, &seg, &contour)?;
            let sweep = alpha_sweep(&dmc, &dmd, &m.labels(), &grid, k_rule(inputs.fixed_k))
                .map_err(anyhow::Error::from)?;
            let out = out
                .clone()
                .unwrap_or_else(|| cli.out_dir.join("alpha_sweep.tsv"));
            write_atomic(&out, &sweep.to_tsv())?;
            println!(
                "best alpha {} with {} errors",
                sweep.best_alpha, sweep.best_errors
            );
            Ok(())
        }
        Command::Phylo {
            matrix,
            nexus,
            newick,
            phylip,
            report,
        } => phylo(
            matrix,
            nexus.as_deref(),
            newick.as_deref(),
            phylip.as_deref(),
            report.as_deref(),
        )
        .map_err(Failure::Usage),
        Command::Report {
            alpha,
            alphas,
            variables,
            fixed_k,
        } => {
            let m = manifest(cli)?;
            let cfg = ReportConfig {
                alpha: *alpha,
                alphas: parse_alpha_grid(alphas).map_err(anyhow::Error::from)?,
                seed: cli.seed,
                k_rule: k_rule(*fixed_k),
                md_encoding: variables.encoding(),
                contour,
                segmentation: seg,
            };
            if !(0.0..=1.0).contains(alpha) {
                return Err(Failure::Usage(anyhow!(
                    "--alpha must lie in [0, 1], got {alpha}"
                )));
            }
            let bundle = build_report(&m, &cfg).map_err(anyhow::Error::from)?;
            for (name, text) in bundle.artifacts().map_err(anyhow::Error::from)? {
                write_atomic(&cli.out_dir.join(name), &text)?;
            }
            write_atomic(&cli.out_dir.join("artifacts.json"), &bundle.manifest_json())?;
            println!(
                "{} cantes; best alpha {} ({:.2}% errors)",
                bundle.summary.cantes,
                bundle.summary.best_alpha,
                bundle.summary.best_alpha_error_percentage
            );
            Ok(())
        }
    }
}

/// Normalised contour and feature matrices aligned to the manifest order.
fn matrices(
    m: &CorpusManifest,
    inputs: &MatrixInputs,
    seg: &SegmentationConfig,
    contour: &ContourConfig,
) -> Result<(DistanceMatrix, DistanceMatrix)> {
    let ids = m.ids();
    let dmc = match &inputs.mc {
        Some(p) => aligned(&DistanceMatrix::load(p)?, &ids, p)?,
        None => pipeline::mc_matrix(m, seg, contour)?,
    };
    let dmd = match &inputs.md {
        Some(p) => aligned(&DistanceMatrix::load(p)?, &ids, p)?,
        None => pipeline::md_matrix(m, &inputs.variables.encoding())?,
    };
    Ok((normalize_matrix(&dmc), normalize_matrix(&dmd)))
}

fn aligned(d: &DistanceMatrix, ids: &[String], origin: &Path) -> Result<DistanceMatrix> {
    if d.len() != ids.len() {
        bail!(
            "{} has {} ids but the manifest lists {}",
            origin.display(),
            d.len(),
            ids.len()
        );
    }
    let order = ids
        .iter()
        .map(|id| {
            d.index_of(id)
                .ok_or_else(|| anyhow!("{} has no row for {id}", origin.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(d.permuted(&order)?)
}

fn transcribe(cli: &Cli, seg: &SegmentationConfig) -> Result<(), Failure> {
    let m = manifest(cli)?;
    let results: Vec<_> = m
        .entries
        .par_iter()
        .map(|e| {
            let t = pipeline::transcribe_entry(e, seg)?;
            let mut buf = Vec::new();
            write_notes(&t.melody, &mut buf)?;
            Ok::<_, anyhow::Error>((t, buf))
        })
        .collect();
    let mut log = String::from("id\tstatus\ttuning_hz\tnotes\tmerges\n");
    let mut failed = Vec::new();
    for (e, r) in m.entries.iter().zip(results) {
        let written = r.and_then(|(t, buf)| {
            let path = cli.out_dir.join(format!("{}.notes.csv", e.id));
            write_atomic(&path, std::str::from_utf8(&buf)?)?;
            Ok(t)
        });
        match written {
            Ok(t) => {
                let _ = writeln!(
                    log,
                    "{}\tok\t{:.4}\t{}\t{}",
                    e.id,
                    t.melody.tuning_hz(),
                    t.melody.len(),
                    t.merges
                );
            }
            Err(err) => {
                log::warn!("{}: {err:#}", e.id);
                let _ = writeln!(log, "{}\tfailed\t\t\t", e.id);
                failed.push((e.id.clone(), format!("{err:#}")));
            }
        }
    }
    write_atomic(&cli.out_dir.join("transcription.log"), &log)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(PipelineError::Failures(failed).into()))
    }
}

fn phylo(
    matrix: &Path,
    nexus: Option<&Path>,
    newick: Option<&Path>,
    phylip: Option<&Path>,
    report: Option<&Path>,
) -> Result<()> {
    let d = DistanceMatrix::load(matrix)?;
    let tree = neighbor_joining(&d)?;
    let fit = match lsfit(&d, &patristic_distances(&tree)?) {
        Ok(v) => Some(v),
        Err(tonas_core::phylo::PhyloError::ZeroMatrix) => None,
        Err(e) => return Err(e.into()),
    };
    if let Some(p) = nexus {
        write_atomic(p, &export_nexus(&d)?)?;
    }
    if let Some(p) = newick {
        write_atomic(p, &(export_newick(&tree)? + "\n"))?;
    }
    if let Some(p) = phylip {
        write_atomic(p, &export_phylip(&d)?)?;
    }
    if let Some(p) = report {
        let body = serde_json::to_string_pretty(&json!({
            "matrix": matrix.display().to_string(),
            "taxa": d.len(),
            "lsfit": fit,
            "clamped_branches": tree.clamped_branches(),
            "total_length": tree.total_length(),
        }))?;
        write_atomic(p, &(body + "\n"))?;
    }
    match fit {
        Some(f) => println!("LSFit {f:.4}"),
        None => println!("LSFit undefined (all distances zero)"),
    }
    Ok(())
}
