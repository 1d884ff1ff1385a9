//! Corpus-level plumbing: melodies and annotations from a manifest, and
//! the consolidated report bundle.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::analysis::{
    self, alpha_sweep, centroid_dispersion, knn_k, knn_unanimous, nearest_centroid_loo,
    ten_fold_cv, AlphaSweep, AnalysisError, Classification, CvClassifier, CvResult, KRule,
};
use crate::contour::{build_mc_matrix, ContourConfig};
use crate::midlevel::{
    build_md_matrix, load_corpus_annotations, Annotation, FeatureEncoding, FeatureError,
};
use crate::phylo::{export_nexus, lsfit, neighbor_joining, patristic_distances, PhyloError};
use crate::symbolic::{
    load_notes, CorpusManifest, DistanceMatrix, ManifestEntry, Melody, StyleLabel, SymbolicError,
};
use crate::transcription::{
    estimate_f0, load_frames, read_wav, transcribe, SegmentationConfig, Transcription,
    TranscriptionError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0} has neither a notes file nor a frames/audio file")]
    NoSource(String),
    #[error("{} cantes failed: {}", .0.len(), .0.iter().map(|(id, m)| format!("{id} ({m})")).collect::<Vec<_>>().join("; "))]
    Failures(Vec<(String, String)>),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Transcription(#[from] TranscriptionError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Phylo(#[from] PhyloError),
}

fn is_wav(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

/// Transcribes an entry's frames file (or WAV audio, via the reference f0
/// estimator).
pub fn transcribe_entry(
    entry: &ManifestEntry,
    cfg: &SegmentationConfig,
) -> Result<Transcription, PipelineError> {
    let path = entry
        .frames_path
        .as_ref()
        .ok_or_else(|| PipelineError::NoSource(entry.id.clone()))?;
    let fs = if is_wav(path) {
        let (samples, sr) = read_wav(path)?;
        estimate_f0(&samples, sr)?
    } else {
        load_frames(path)?
    };
    let mut t = transcribe(&fs, cfg)?;
    t.melody = t.melody.with_id(entry.id.clone());
    Ok(t)
}

/// The entry's melody: its notes file when present, else a transcription.
pub fn entry_melody(
    entry: &ManifestEntry,
    cfg: &SegmentationConfig,
) -> Result<Melody, PipelineError> {
    match &entry.notes_path {
        Some(p) => Ok(load_notes(p, 440.0)?.with_id(entry.id.clone())),
        None => Ok(transcribe_entry(entry, cfg)?.melody),
    }
}

/// Melodies for every entry, in manifest order. Fails listing every cante
/// that could not be loaded.
pub fn corpus_melodies(
    manifest: &CorpusManifest,
    cfg: &SegmentationConfig,
) -> Result<Vec<Melody>, PipelineError> {
    let results: Vec<Result<Melody, PipelineError>> = manifest
        .entries
        .par_iter()
        .map(|e| entry_melody(e, cfg))
        .collect();
    let mut out = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (e, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok(m) => out.push(m),
            Err(err) => failed.push((e.id.clone(), err.to_string())),
        }
    }
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(PipelineError::Failures(failed))
    }
}

/// Annotations keyed by id. Every entry must have an annotations file.
pub fn corpus_annotations(
    manifest: &CorpusManifest,
) -> Result<HashMap<String, Annotation>, PipelineError> {
    let missing: Vec<String> = manifest
        .entries
        .iter()
        .filter(|e| e.annotations_path.is_none())
        .map(|e| e.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(FeatureError::MissingAnnotations(missing).into());
    }
    let entries = manifest.entries.iter().map(|e| {
        (
            e.id.as_str(),
            &e.style,
            e.annotations_path.as_deref().expect("checked above"),
        )
    });
    Ok(load_corpus_annotations(entries)?.into_iter().collect())
}

pub fn mc_matrix(
    manifest: &CorpusManifest,
    seg: &SegmentationConfig,
    contour: &ContourConfig,
) -> Result<DistanceMatrix, PipelineError> {
    Ok(build_mc_matrix(&corpus_melodies(manifest, seg)?, contour)?)
}

pub fn md_matrix(
    manifest: &CorpusManifest,
    enc: &FeatureEncoding,
) -> Result<DistanceMatrix, PipelineError> {
    let ann = corpus_annotations(manifest)?;
    let common = ann.into_iter().map(|(id, a)| (id, a.common)).collect();
    Ok(build_md_matrix(&manifest.ids(), &common, enc)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub alpha: f64,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub k_rule: KRule,
    /// Feature set behind the MD distance used for integration.
    pub md_encoding: FeatureEncoding,
    pub contour: ContourConfig,
    pub segmentation: SegmentationConfig,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            alphas: (0..=10).map(|k| k as f64 / 10.0).collect(),
            seed: 0,
            k_rule: KRule::PerClass,
            md_encoding: FeatureEncoding::REDUCED4,
            contour: ContourConfig::default(),
            segmentation: SegmentationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvEntry {
    pub variables: String,
    pub classifier: CvClassifier,
    pub result: CvResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeSummary {
    pub matrix: String,
    pub lsfit: Option<f64>,
    pub clamped_branches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub cantes: usize,
    pub class_sizes: Vec<(StyleLabel, usize)>,
    pub alpha: f64,
    pub best_alpha: f64,
    pub best_alpha_errors: usize,
    pub best_alpha_error_percentage: f64,
    pub centroid_max_cv_percent: f64,
    pub trees: Vec<TreeSummary>,
}

/// Everything `report` emits.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub dmc: DistanceMatrix,
    pub dmd: DistanceMatrix,
    pub dint: DistanceMatrix,
    pub centroid: Classification,
    pub knn: Classification,
    pub sweep: AlphaSweep,
    pub cv: Vec<CvEntry>,
    pub summary: ReportSummary,
}

/// File names of the bundle, in emission order.
pub const ARTIFACTS: [&str; 9] = [
    "dmc.tsv",
    "dmd.tsv",
    "dint.tsv",
    "centroid_report.json",
    "knn_report.json",
    "alpha_sweep.tsv",
    "cv_report.json",
    "dmc.nex",
    "dmd.nex",
];

fn tree_summary(name: &str, d: &DistanceMatrix) -> Result<TreeSummary, PipelineError> {
    let t = neighbor_joining(d)?;
    let p = patristic_distances(&t)?;
    let fit = match lsfit(d, &p) {
        Ok(v) => Some(v),
        Err(PhyloError::ZeroMatrix) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(TreeSummary {
        matrix: name.into(),
        lsfit: fit,
        clamped_branches: t.clamped_branches(),
    })
}

/// Report from already-loaded melodies and annotations (ids aligned with
/// `labels`).
pub fn build_report_from(
    melodies: &[Melody],
    labels: &[StyleLabel],
    annotations: &HashMap<String, Annotation>,
    cfg: &ReportConfig,
) -> Result<ReportBundle, PipelineError> {
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(AnalysisError::AlphaRange(cfg.alpha).into());
    }
    let ids: Vec<String> = melodies.iter().map(|m| m.id().to_string()).collect();
    let common: HashMap<String, _> = annotations
        .iter()
        .map(|(id, a)| (id.clone(), a.common))
        .collect();
    let dmc = analysis::normalize_matrix(&build_mc_matrix(melodies, &cfg.contour)?);
    let dmd = analysis::normalize_matrix(&build_md_matrix(&ids, &common, &cfg.md_encoding)?);
    let dint = analysis::integrate(&dmc, &dmd, cfg.alpha)?;

    let centroid = nearest_centroid_loo(&dint, labels)?;
    let dispersion = centroid_dispersion(&dint, labels)?;
    let knn = knn_unanimous(&dint, labels, cfg.k_rule)?;
    let sweep = alpha_sweep(&dmc, &dmd, labels, &cfg.alphas, cfg.k_rule)?;

    let k = knn_k(ids.len()).max(1);
    let mut cv = Vec::new();
    for enc in [FeatureEncoding::FULL7, FeatureEncoding::REDUCED4] {
        let x: Vec<Vec<f64>> = ids.iter().map(|id| enc.encode(&common[id])).collect();
        for classifier in [CvClassifier::Lda, CvClassifier::Knn { k }] {
            cv.push(CvEntry {
                variables: format!("{:?}", enc.variables),
                classifier,
                result: ten_fold_cv(&x, labels, classifier, cfg.seed)?,
            });
        }
    }

    let mut sizes: Vec<(StyleLabel, usize)> = Vec::new();
    for l in labels {
        match sizes.iter_mut().find(|(s, _)| s == l) {
            Some((_, c)) => *c += 1,
            None => sizes.push((l.clone(), 1)),
        }
    }
    sizes.sort();
    let best = sweep
        .rows
        .iter()
        .find(|r| r.alpha == sweep.best_alpha)
        .expect("best alpha is a grid point");
    let summary = ReportSummary {
        cantes: ids.len(),
        class_sizes: sizes,
        alpha: cfg.alpha,
        best_alpha: sweep.best_alpha,
        best_alpha_errors: sweep.best_errors,
        best_alpha_error_percentage: best.error_percentage,
        centroid_max_cv_percent: dispersion,
        trees: vec![
            tree_summary("dmc", &dmc)?,
            tree_summary("dmd", &dmd)?,
            tree_summary("dint", &dint)?,
        ],
    };
    Ok(ReportBundle {
        dmc,
        dmd,
        dint,
        centroid,
        knn,
        sweep,
        cv,
        summary,
    })
}

pub fn build_report(
    manifest: &CorpusManifest,
    cfg: &ReportConfig,
) -> Result<ReportBundle, PipelineError> {
    let annotations = corpus_annotations(manifest)?;
    let melodies = corpus_melodies(manifest, &cfg.segmentation)?;
    build_report_from(&melodies, &manifest.labels(), &annotations, cfg)
}

impl ReportBundle {
    /// `(file name, contents)` for each artifact in [`ARTIFACTS`] order.
    pub fn artifacts(&self) -> Result<Vec<(&'static str, String)>, PipelineError> {
        let json =
            |v: serde_json::Value| serde_json::to_string_pretty(&v).expect("serialisable") + "\n";
        let classification = |c: &Classification| {
            json(json!({
                "alpha": self.summary.alpha,
                "report": c.report,
                "predictions": c.outcome.items,
                "table": c.report.to_tsv(),
            }))
        };
        Ok(vec![
            (ARTIFACTS[0], self.dmc.to_tsv()),
            (ARTIFACTS[1], self.dmd.to_tsv()),
            (ARTIFACTS[2], self.dint.to_tsv()),
            (ARTIFACTS[3], classification(&self.centroid)),
            (ARTIFACTS[4], classification(&self.knn)),
            (ARTIFACTS[5], self.sweep.to_tsv()),
            (ARTIFACTS[6], json(json!({ "runs": self.cv }))),
            (ARTIFACTS[7], export_nexus(&self.dmc)?),
            (ARTIFACTS[8], export_nexus(&self.dmd)?),
        ])
    }

    /// Index of produced files plus the summary.
    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(&json!({
            "artifacts": ARTIFACTS,
            "summary": self.summary,
        }))
        .expect("serialisable")
            + "\n"
    }
}
