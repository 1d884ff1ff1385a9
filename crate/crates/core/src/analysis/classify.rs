use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{ClassificationOutcome, ClassificationReport, StyleMetrics};
use super::{integrate, AnalysisError};
use crate::midlevel::mean_and_population_sd;
use crate::symbolic::{DistanceMatrix, StyleLabel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub outcome: ClassificationOutcome,
    pub report: ClassificationReport,
}

fn check_labels(d: &DistanceMatrix, labels: &[StyleLabel]) -> Result<(), AnalysisError> {
    if labels.len() != d.len() {
        return Err(AnalysisError::LabelCount {
            labels: labels.len(),
            objects: d.len(),
        });
    }
    Ok(())
}

fn members(labels: &[StyleLabel]) -> BTreeMap<&StyleLabel, Vec<usize>> {
    let mut m: BTreeMap<&StyleLabel, Vec<usize>> = BTreeMap::new();
    for (i, s) in labels.iter().enumerate() {
        m.entry(s).or_default().push(i);
    }
    m
}

/// Leave-one-out nearest centroid in distance space: the distance from a
/// cante to a style is its mean distance to that style's other members.
/// Ties go to the earlier style (martinete 1, martinete 2, debla).
pub fn nearest_centroid_loo(
    d: &DistanceMatrix,
    labels: &[StyleLabel],
) -> Result<Classification, AnalysisError> {
    check_labels(d, labels)?;
    let groups = members(labels);
    if let Some((s, _)) = groups.iter().find(|(_, m)| m.len() < 2) {
        return Err(AnalysisError::SingletonStyle((*s).clone()));
    }
    let mut outcome = ClassificationOutcome::default();
    for (x, truth) in labels.iter().enumerate() {
        let mut best: Option<(&StyleLabel, f64)> = None;
        for (style, idx) in &groups {
            let others: Vec<f64> = idx
                .iter()
                .filter(|&&y| y != x)
                .map(|&y| d.get(x, y))
                .collect();
            let mean = others.iter().sum::<f64>() / others.len() as f64;
            if best.is_none_or(|(_, b)| mean < b) {
                best = Some((style, mean));
            }
        }
        let predicted = best.map(|(s, _)| s.clone());
        outcome.push(d.ids()[x].clone(), truth.clone(), predicted);
    }
    let report = outcome.report();
    Ok(Classification { outcome, report })
}

/// Coefficient of variation in percent, `100·σ/μ` with population σ.
pub fn coefficient_of_variation(values: &[f64]) -> Result<f64, AnalysisError> {
    if values.len() < 2 {
        return Err(AnalysisError::Dispersion("need at least 2 values"));
    }
    let (mean, sd) = mean_and_population_sd(values);
    if mean == 0.0 {
        return Err(AnalysisError::Dispersion("zero mean"));
    }
    Ok(100.0 * sd / mean.abs())
}

/// Largest coefficient of variation among the distance lists averaged by
/// [`nearest_centroid_loo`], skipping lists with fewer than 2 values or a
/// zero mean. Gauges whether the means are representative.
pub fn centroid_dispersion(
    d: &DistanceMatrix,
    labels: &[StyleLabel],
) -> Result<f64, AnalysisError> {
    check_labels(d, labels)?;
    let groups = members(labels);
    let mut worst = 0.0f64;
    for x in 0..labels.len() {
        for idx in groups.values() {
            let vals: Vec<f64> = idx
                .iter()
                .filter(|&&y| y != x)
                .map(|&y| d.get(x, y))
                .collect();
            if let Ok(cv) = coefficient_of_variation(&vals) {
                worst = worst.max(cv);
            }
        }
    }
    Ok(worst)
}

/// How many neighbours the unanimous k-NN rule consults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum KRule {
    /// `⌊√n_s⌋` where `n_s` is the size of the query's own class.
    #[default]
    PerClass,
    Fixed(usize),
}

pub fn knn_k(class_size: usize) -> usize {
    // Integer square root; exact for every usize.
    let mut k = (class_size as f64).sqrt() as usize;
    while k * k > class_size {
        k -= 1;
    }
    while (k + 1) * (k + 1) <= class_size {
        k += 1;
    }
    k
}

/// Unanimous k-NN: a cante takes a style only when all of its `k` nearest
/// neighbours share it; otherwise it stays unclassified. Distance ties are
/// broken by id.
pub fn knn_unanimous(
    d: &DistanceMatrix,
    labels: &[StyleLabel],
    rule: KRule,
) -> Result<Classification, AnalysisError> {
    check_labels(d, labels)?;
    let groups = members(labels);
    let n = labels.len();
    let mut outcome = ClassificationOutcome::default();
    for (x, truth) in labels.iter().enumerate() {
        let k = match rule {
            KRule::PerClass => knn_k(groups[truth].len()),
            KRule::Fixed(k) => k,
        };
        if k == 0 {
            return Err(AnalysisError::EmptyClass(truth.clone()));
        }
        if k > n - 1 {
            return Err(AnalysisError::KTooLarge {
                k,
                available: n - 1,
            });
        }
        let mut others: Vec<usize> = (0..n).filter(|&y| y != x).collect();
        others.sort_by(|&a, &b| {
            d.get(x, a)
                .total_cmp(&d.get(x, b))
                .then_with(|| d.ids()[a].cmp(&d.ids()[b]))
        });
        let first = &labels[others[0]];
        let unanimous = others[..k].iter().all(|&y| &labels[y] == first);
        outcome.push(
            d.ids()[x].clone(),
            truth.clone(),
            unanimous.then(|| first.clone()),
        );
    }
    let report = outcome.report();
    Ok(Classification { outcome, report })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSweepRow {
    pub alpha: f64,
    pub errors: usize,
    pub error_percentage: f64,
    pub misclassified: usize,
    pub unclassified: usize,
    pub per_style: Vec<StyleMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSweep {
    pub rows: Vec<AlphaSweepRow>,
    /// Alpha with the fewest errors; ties go to the larger alpha.
    pub best_alpha: f64,
    pub best_errors: usize,
}

pub fn alpha_sweep(
    dmc: &DistanceMatrix,
    dmd: &DistanceMatrix,
    labels: &[StyleLabel],
    alphas: &[f64],
    rule: KRule,
) -> Result<AlphaSweep, AnalysisError> {
    if alphas.is_empty() {
        return Err(AnalysisError::AlphaGrid(String::new()));
    }
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let di = integrate(dmc, dmd, alpha)?;
            let r = knn_unanimous(&di, labels, rule)?.report;
            Ok(AlphaSweepRow {
                alpha,
                errors: r.errors,
                error_percentage: r.error_percentage,
                misclassified: r.misclassified,
                unclassified: r.unclassified,
                per_style: r.per_style,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let best = rows
        .iter()
        .min_by(|a, b| a.errors.cmp(&b.errors).then(b.alpha.total_cmp(&a.alpha)))
        .expect("non-empty grid");
    Ok(AlphaSweep {
        best_alpha: best.alpha,
        best_errors: best.errors,
        rows,
    })
}

impl AlphaSweep {
    /// One row per alpha: error counts, then P/R/F in percent per style.
    pub fn to_tsv(&self) -> String {
        let styles: Vec<StyleLabel> = {
            let mut s: Vec<StyleLabel> = self
                .rows
                .iter()
                .flat_map(|r| r.per_style.iter().map(|m| m.style.clone()))
                .collect();
            s.sort();
            s.dedup();
            s
        };
        let mut out = String::from("alpha\terrors\terror_pct\tmisclassified\tunclassified");
        for s in &styles {
            let t = s.short();
            out.push_str(&format!("\tP_{t}\tR_{t}\tF_{t}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:.2}\t{}\t{:.2}\t{}\t{}",
                r.alpha, r.errors, r.error_percentage, r.misclassified, r.unclassified
            ));
            for s in &styles {
                match r.per_style.iter().find(|m| &m.style == s) {
                    Some(m) => out.push_str(&format!(
                        "\t{:.2}\t{:.2}\t{:.2}",
                        100.0 * m.precision,
                        100.0 * m.recall,
                        100.0 * m.f_score
                    )),
                    None => out.push_str("\t\t\t"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Parses `start:stop:step` into an inclusive grid, e.g. `0:1:0.1` gives
/// 0.0, 0.1, …, 1.0, or a comma-separated list such as `0,0.5,1`. Grid
/// points are rounded to 12 decimals.
pub fn parse_alpha_grid(spec: &str) -> Result<Vec<f64>, AnalysisError> {
    let bad = || AnalysisError::AlphaGrid(spec.to_string());
    if spec.contains(',') {
        let grid: Vec<f64> = spec
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        if let Some(&a) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(AnalysisError::AlphaRange(a));
        }
        return Ok(grid);
    }
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect();
    if let Some(&a) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(AnalysisError::AlphaRange(a));
    }
    Ok(grid)
}
