//! Ranking, classification and correlation metrics.

use std::cmp::Ordering;

use crate::error::{Error, Result};

fn check_binary(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("need at least one positive and one negative"));
    }
    Ok((pos, neg))
}

/// 1-based ranks in ascending order; tied values share their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Probability that a random positive outscores a random negative; ties count one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (p, n) = check_binary(scores, labels)?;
    let ranks = average_ranks(scores);
    let sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let wins = sum - (p * (p + 1)) as f64 / 2.0;
    Ok(wins / (p * n) as f64)
}

/// Mean over positives of the precision at that positive's score, where the
/// precision at `s` counts every item scoring at least `s`.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (p, _) = check_binary(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let (mut seen, mut seen_pos, mut total) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let group_pos = idx[i..=j].iter().filter(|&&k| labels[k]).count();
        seen += j - i + 1;
        seen_pos += group_pos;
        let precision = seen_pos as f64 / seen as f64;
        for _ in 0..group_pos {
            total += precision;
        }
        i = j + 1;
    }
    Ok(total / p as f64)
}

/// ROC points `(false positive rate, true positive rate)` from (0,0) to (1,1),
/// one per distinct score threshold.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64)>> {
    let (p, n) = check_binary(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            if labels[k] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        pts.push((fp as f64 / n as f64, tp as f64 / p as f64));
        i = j + 1;
    }
    Ok(pts)
}

fn check_classes(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("empty evaluation set"));
    }
    if pred.iter().chain(truth).any(|&c| c >= num_classes) {
        return Err(Error::invalid("class id out of range"));
    }
    Ok(())
}

/// `confusion[t][p]` counts items of true class `t` predicted as `p`.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    check_classes(pred, truth, num_classes)?;
    let mut m = vec![vec![0; num_classes]; num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        m[t][p] += 1;
    }
    Ok(m)
}

/// F1 over pooled counts. With one label per item this equals accuracy.
pub fn micro_f1(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<f64> {
    let m = confusion_matrix(pred, truth, num_classes)?;
    let tp: usize = (0..num_classes).map(|c| m[c][c]).sum();
    let total = truth.len();
    // Pooled FP and FN both equal the misclassified count.
    let wrong = total - tp;
    Ok(2.0 * tp as f64 / (2 * tp + 2 * wrong) as f64)
}

/// F1 of each class; a class with no true or predicted items scores 0.
pub fn per_class_f1(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<Vec<f64>> {
    let m = confusion_matrix(pred, truth, num_classes)?;
    Ok((0..num_classes)
        .map(|c| {
            let tp = m[c][c];
            let fn_: usize = m[c].iter().sum::<usize>() - tp;
            let fp: usize = (0..num_classes).map(|t| m[t][c]).sum::<usize>() - tp;
            let denom = 2 * tp + fp + fn_;
            if denom == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denom as f64
            }
        })
        .collect())
}

/// Unweighted mean of per-class F1 over all `num_classes` classes.
pub fn macro_f1(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<f64> {
    let f = per_class_f1(pred, truth, num_classes)?;
    Ok(f.iter().sum::<f64>() / num_classes as f64)
}

/// Pearson correlation; `None` when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa.sqrt() * sbb.sqrt()))
}

/// Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}
