//! Ranking and classification metrics, one-vs-rest threshold tuning and the
//! severity-first decision rule.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::MergedLabel;
use crate::error::{Error, Result};

fn class_sizes(labels: &[bool]) -> Result<(usize, usize)> {
    let p = labels.iter().filter(|&&l| l).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::UndefinedAuc(format!("{p} positives and {n} negatives")));
    }
    Ok((p, n))
}

fn check_scores(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("NaN score".into()));
    }
    Ok(())
}

/// Distinct score values in descending order with (positives, negatives) at each.
fn descending_groups(scores: &[f64], labels: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for i in order {
        let (s, l) = (scores[i], labels[i]);
        match groups.last_mut() {
            Some(g) if g.0 == s => {
                if l {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((s, l as usize, (!l) as usize)),
        }
    }
    groups
}

/// Area under the ROC curve by sorted trapezoid; tied scores contribute half.
pub fn binary_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_scores(scores, labels)?;
    let (p, n) = class_sizes(labels)?;
    let mut area = 0.0;
    let mut tp = 0usize;
    for (_, gp, gn) in descending_groups(scores, labels) {
        // Trapezoid in count units: gn * (tp + tp + gp) / 2.
        area += gn as f64 * (tp as f64 + 0.5 * gp as f64);
        tp += gp;
    }
    Ok(area / (p as f64 * n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Descending; a point predicts positive when `score >= threshold`.
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
}

pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    check_scores(scores, labels)?;
    let (p, n) = class_sizes(labels)?;
    let mut curve = RocCurve {
        thresholds: vec![f64::INFINITY],
        tpr: vec![0.0],
        fpr: vec![0.0],
    };
    let (mut tp, mut fp) = (0, 0);
    for (s, gp, gn) in descending_groups(scores, labels) {
        tp += gp;
        fp += gn;
        curve.thresholds.push(s);
        curve.tpr.push(tp as f64 / p as f64);
        curve.fpr.push(fp as f64 / n as f64);
    }
    Ok(curve)
}

/// Unweighted mean of the three one-vs-rest AUCs.
pub fn macro_auc(scores: &[[f64; 3]], labels: &[MergedLabel]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} score rows for {} labels", scores.len(), labels.len())));
    }
    let absent: Vec<&str> = MergedLabel::ALL
        .iter()
        .filter(|c| !labels.contains(c))
        .map(|c| c.name())
        .collect();
    if !absent.is_empty() {
        return Err(Error::MissingClass(format!("absent from labels: {}", absent.join(", "))));
    }
    let mut sum = 0.0;
    for c in MergedLabel::ALL {
        let s: Vec<f64> = scores.iter().map(|r| r[c.index()]).collect();
        let l: Vec<bool> = labels.iter().map(|&x| x == c).collect();
        sum += binary_auc(&s, &l)?;
    }
    Ok(sum / 3.0)
}

/// Threshold selection criterion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// `TPR - FPR`.
    #[default]
    Youden,
    /// `TPR + FPR - 1`, which always favours predicting everything positive.
    Literal,
}

impl Objective {
    pub fn value(self, tpr: f64, fpr: f64) -> f64 {
        match self {
            Objective::Youden => tpr - fpr,
            Objective::Literal => tpr + fpr - 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub objective: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Best cut over all candidates: the lowest score, midpoints between
/// consecutive distinct scores, and one step above the highest score.
/// Equal objective values resolve to the higher threshold.
pub fn tune_threshold(scores: &[f64], labels: &[bool], objective: Objective) -> Result<ThresholdChoice> {
    check_scores(scores, labels)?;
    let (p, n) = class_sizes(labels)?;
    let mut groups = descending_groups(scores, labels);
    groups.reverse();
    // Ascending groups; positives/negatives at or above group i.
    let m = groups.len();
    let mut above_p = vec![0usize; m + 1];
    let mut above_n = vec![0usize; m + 1];
    for i in (0..m).rev() {
        above_p[i] = above_p[i + 1] + groups[i].1;
        above_n[i] = above_n[i + 1] + groups[i].2;
    }
    let mut best: Option<ThresholdChoice> = None;
    for cut in 0..=m {
        let threshold = if cut == 0 {
            groups[0].0
        } else if cut == m {
            groups[m - 1].0.next_up()
        } else {
            let (lo, hi) = (groups[cut - 1].0, groups[cut].0);
            let mid = lo + (hi - lo) / 2.0;
            if mid > lo {
                mid
            } else {
                hi
            }
        };
        let tpr = above_p[cut] as f64 / p as f64;
        let fpr = above_n[cut] as f64 / n as f64;
        let value = objective.value(tpr, fpr);
        if best.map_or(true, |b| value >= b.objective) {
            best = Some(ThresholdChoice { threshold, objective: value, tpr, fpr });
        }
    }
    Ok(best.expect("at least one candidate"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub t_slight: f64,
    pub t_modext: f64,
}

/// Tune the Slight and ModExt one-vs-rest thresholds independently.
pub fn tune_pair(scores: &[[f64; 3]], labels: &[MergedLabel], objective: Objective) -> Result<ThresholdPair> {
    let pick = |c: MergedLabel| -> Result<f64> {
        let s: Vec<f64> = scores.iter().map(|r| r[c.index()]).collect();
        let l: Vec<bool> = labels.iter().map(|&x| x == c).collect();
        Ok(tune_threshold(&s, &l, objective)?.threshold)
    };
    Ok(ThresholdPair {
        t_slight: pick(MergedLabel::Slight)?,
        t_modext: pick(MergedLabel::ModExt)?,
    })
}

/// ModExt wins whenever its threshold is met; Alert is the fallback.
pub fn decide(scores: &[f64; 3], thresholds: &ThresholdPair) -> MergedLabel {
    if scores[MergedLabel::ModExt.index()] >= thresholds.t_modext {
        MergedLabel::ModExt
    } else if scores[MergedLabel::Slight.index()] >= thresholds.t_slight {
        MergedLabel::Slight
    } else {
        MergedLabel::Alert
    }
}

/// Highest-probability class, lowest index on ties.
pub fn argmax(scores: &[f64; 3]) -> MergedLabel {
    let mut best = 0;
    for c in 1..3 {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    MergedLabel::ALL[best]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    /// Rows are true classes, columns predicted.
    pub confusion: [[usize; 3]; 3],
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn confusion_and_weighted_metrics(truth: &[MergedLabel], pred: &[MergedLabel]) -> Result<ClassificationMetrics> {
    if truth.len() != pred.len() {
        return Err(Error::Shape(format!("{} truths for {} predictions", truth.len(), pred.len())));
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput("no labels to score".into()));
    }
    let mut confusion = [[0usize; 3]; 3];
    for (t, p) in truth.iter().zip(pred) {
        confusion[t.index()][p.index()] += 1;
    }
    let total = truth.len();
    let trace: usize = (0..3).map(|c| confusion[c][c]).sum();
    let mut per_class = Vec::with_capacity(3);
    let (mut wp, mut wr, mut wf) = (0.0, 0.0, 0.0);
    for c in 0..3 {
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = (0..3).map(|r| confusion[r][c]).sum();
        let tp = confusion[c][c];
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let w = support as f64 / total as f64;
        wp += w * precision;
        wr += w * recall;
        wf += w * f1;
        per_class.push(ClassMetrics { precision, recall, f1, support });
    }
    Ok(ClassificationMetrics {
        confusion,
        accuracy: ratio(trace, total),
        precision: wp,
        recall: wr,
        f1: wf,
        per_class,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub n_samples: usize,
    pub macro_auc: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: [[usize; 3]; 3],
    pub per_class_recall: [f64; 3],
    /// `None` for plain argmax decisions.
    pub thresholds: Option<ThresholdPair>,
}

/// Score a model's test probabilities, with argmax or thresholded decisions.
pub fn evaluate(
    model: &str,
    scores: &[[f64; 3]],
    labels: &[MergedLabel],
    thresholds: Option<ThresholdPair>,
) -> Result<EvalReport> {
    let auc = macro_auc(scores, labels)?;
    let pred: Vec<MergedLabel> = scores
        .iter()
        .map(|s| match &thresholds {
            Some(t) => decide(s, t),
            None => argmax(s),
        })
        .collect();
    let m = confusion_and_weighted_metrics(labels, &pred)?;
    Ok(EvalReport {
        model: model.to_string(),
        n_samples: labels.len(),
        macro_auc: auc,
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        confusion: m.confusion,
        per_class_recall: [m.per_class[0].recall, m.per_class[1].recall, m.per_class[2].recall],
        thresholds,
    })
}

/// Aligned rows of `model AUC Acc Pre Rec F1`.
pub fn render_table(reports: &[EvalReport]) -> String {
    let width = reports.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>6} {:>6} {:>6} {:>6} {:>6}", "model", "AUC", "Acc", "Pre", "Rec", "F1");
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
            r.model, r.macro_auc, r.accuracy, r.precision, r.recall, r.f1
        );
    }
    out
}

pub fn render_confusion(confusion: &[[usize; 3]; 3]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<9} {:>7} {:>7} {:>7}", "true\\pred", "alert", "slight", "modext");
    for (c, row) in MergedLabel::ALL.iter().zip(confusion) {
        let _ = writeln!(out, "{:<9} {:>7} {:>7} {:>7}", c.name(), row[0], row[1], row[2]);
    }
    out
}

/// Pairwise reference: `(wins + ties / 2) / (P * N)`.
pub fn mann_whitney(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_scores(scores, labels)?;
    let (p, n) = class_sizes(labels)?;
    let mut acc = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            if si > sj {
                acc += 1.0;
            } else if si == sj {
                acc += 0.5;
            }
        }
    }
    Ok(acc / (p as f64 * n as f64))
}
