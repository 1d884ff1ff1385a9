use std::collections::BTreeSet;

use serde::Serialize;

use crate::symbolic::StyleLabel;

/// Prediction for one object. `predicted = None` means the classifier
/// declined to label it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeItem {
    pub id: String,
    pub truth: StyleLabel,
    pub predicted: Option<StyleLabel>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ClassificationOutcome {
    pub items: Vec<OutcomeItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StyleMetrics {
    pub style: StyleLabel,
    pub support: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

/// Per-style and averaged precision/recall/F. Undefined ratios (zero
/// denominators) are reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub total: usize,
    pub correct: usize,
    /// Labelled, but with the wrong style.
    pub misclassified: usize,
    pub unclassified: usize,
    /// `misclassified + unclassified`.
    pub errors: usize,
    pub error_percentage: f64,
    pub per_style: Vec<StyleMetrics>,
    pub micro: Averages,
    #[serde(rename = "macro")]
    pub macro_: Averages,
}

pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn f_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl ClassificationOutcome {
    pub fn push(
        &mut self,
        id: impl Into<String>,
        truth: StyleLabel,
        predicted: Option<StyleLabel>,
    ) {
        self.items.push(OutcomeItem {
            id: id.into(),
            truth,
            predicted,
        });
    }

    pub fn report(&self) -> ClassificationReport {
        ClassificationReport::from_outcome(self)
    }
}

impl ClassificationReport {
    pub fn from_outcome(outcome: &ClassificationOutcome) -> Self {
        let styles: BTreeSet<&StyleLabel> = outcome
            .items
            .iter()
            .flat_map(|it| std::iter::once(&it.truth).chain(it.predicted.as_ref()))
            .collect();

        let per_style: Vec<StyleMetrics> = styles
            .into_iter()
            .map(|s| {
                let (mut tp, mut fp, mut fn_, mut support) = (0, 0, 0, 0);
                for it in &outcome.items {
                    let is_truth = &it.truth == s;
                    let is_pred = it.predicted.as_ref() == Some(s);
                    support += usize::from(is_truth);
                    match (is_truth, is_pred) {
                        (true, true) => tp += 1,
                        (true, false) => fn_ += 1,
                        (false, true) => fp += 1,
                        (false, false) => {}
                    }
                }
                let precision = ratio(tp, tp + fp);
                let recall = ratio(tp, tp + fn_);
                StyleMetrics {
                    style: s.clone(),
                    support,
                    tp,
                    fp,
                    fn_,
                    precision,
                    recall,
                    f_score: f_score(precision, recall),
                }
            })
            .collect();

        let sum = |f: fn(&StyleMetrics) -> usize| per_style.iter().map(f).sum::<usize>();
        let (tp, fp, fn_) = (sum(|m| m.tp), sum(|m| m.fp), sum(|m| m.fn_));
        let micro_p = ratio(tp, tp + fp);
        let micro_r = ratio(tp, tp + fn_);
        let k = per_style.len().max(1) as f64;
        let macro_p = per_style.iter().map(|m| m.precision).sum::<f64>() / k;
        let macro_r = per_style.iter().map(|m| m.recall).sum::<f64>() / k;

        let total = outcome.items.len();
        let correct = outcome
            .items
            .iter()
            .filter(|it| it.predicted.as_ref() == Some(&it.truth))
            .count();
        let unclassified = outcome
            .items
            .iter()
            .filter(|it| it.predicted.is_none())
            .count();
        let misclassified = total - correct - unclassified;
        let errors = misclassified + unclassified;
        Self {
            total,
            correct,
            misclassified,
            unclassified,
            errors,
            error_percentage: 100.0 * ratio(errors, total),
            per_style,
            micro: Averages {
                precision: micro_p,
                recall: micro_r,
                f_score: f_score(micro_p, micro_r),
            },
            // The averaged F is the harmonic mean of the averaged P and R.
            macro_: Averages {
                precision: macro_p,
                recall: macro_r,
                f_score: f_score(macro_p, macro_r),
            },
        }
    }

    pub fn style(&self, s: &StyleLabel) -> Option<&StyleMetrics> {
        self.per_style.iter().find(|m| &m.style == s)
    }

    /// Table layout: one row per style plus micro and macro rows.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("row\tprecision\trecall\tf_score\ttp\tfp\tfn\n");
        for m in &self.per_style {
            s.push_str(&format!(
                "{}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}\n",
                m.style, m.precision, m.recall, m.f_score, m.tp, m.fp, m.fn_
            ));
        }
        for (name, a) in [("micro", self.micro), ("macro", self.macro_)] {
            s.push_str(&format!(
                "{name}\t{:.4}\t{:.4}\t{:.4}\t\t\t\n",
                a.precision, a.recall, a.f_score
            ));
        }
        s
    }
}
