//! Evaluation: accuracy, cost-sensitive risk, group-wise PPV, the
//! predictive-parity disparity (sum of absolute PPV deviations from the
//! pooled PPV) and a one-sided paired t-test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::GroupId;
use crate::error::{Error, Result};
use crate::special::student_t_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

/// Evaluation summary of one classifier on one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// (c * #FP + (1-c) * #FN) / n.
    pub cost_risk: f64,
    /// Sum over groups (with at least one positive prediction) of
    /// |group PPV - pooled PPV|.
    pub dpp: f64,
    /// PPV per group with at least one positive prediction.
    pub group_ppv: BTreeMap<GroupId, f64>,
    /// Pooled PPV; `None` when there are no positive predictions at all.
    pub overall_ppv: Option<f64>,
    pub counts: BTreeMap<GroupId, ConfusionCounts>,
    /// Groups omitted from the disparity sum (no positive predictions).
    pub dpp_omitted_groups: Vec<GroupId>,
}

/// Evaluates binary predictions against labels, group by group.
pub fn evaluate(preds: &[u8], labels: &[u8], groups: &[GroupId], cost: f64) -> Result<EvalReport> {
    let n = preds.len();
    if n == 0 {
        return Err(Error::Shape("evaluate requires at least one row".into()));
    }
    if labels.len() != n || groups.len() != n {
        return Err(Error::Shape(format!(
            "preds/labels/groups lengths differ: {n}/{}/{}",
            labels.len(),
            groups.len()
        )));
    }
    if preds.iter().chain(labels).any(|&v| v > 1) {
        return Err(Error::Data("predictions and labels must be 0 or 1".into()));
    }
    if !(0.0..=1.0).contains(&cost) {
        return Err(Error::Config(format!("cost must be in [0, 1], got {cost}")));
    }

    let mut counts: BTreeMap<GroupId, ConfusionCounts> = BTreeMap::new();
    for ((&p, &y), &g) in preds.iter().zip(labels).zip(groups) {
        let c = counts.entry(g).or_default();
        match (p, y) {
            (1, 1) => c.true_pos += 1,
            (1, 0) => c.false_pos += 1,
            (0, 0) => c.true_neg += 1,
            _ => c.false_neg += 1,
        }
    }

    let total_tp: usize = counts.values().map(|c| c.true_pos).sum();
    let total_fp: usize = counts.values().map(|c| c.false_pos).sum();
    let total_tn: usize = counts.values().map(|c| c.true_neg).sum();
    let total_fn: usize = counts.values().map(|c| c.false_neg).sum();
    let accuracy = (total_tp + total_tn) as f64 / n as f64;
    let cost_risk = (cost * total_fp as f64 + (1.0 - cost) * total_fn as f64) / n as f64;

    let overall_ppv = if total_tp + total_fp > 0 {
        Some(total_tp as f64 / (total_tp + total_fp) as f64)
    } else {
        None
    };
    let mut group_ppv = BTreeMap::new();
    let mut omitted = Vec::new();
    let mut dpp = 0.0;
    for (&g, c) in &counts {
        let denom = c.true_pos + c.false_pos;
        if denom > 0 {
            let ppv = c.true_pos as f64 / denom as f64;
            group_ppv.insert(g, ppv);
            if let Some(pool) = overall_ppv {
                dpp += (ppv - pool).abs();
            }
        } else {
            omitted.push(g);
        }
    }

    Ok(EvalReport {
        accuracy,
        cost_risk,
        dpp,
        group_ppv,
        overall_ppv,
        counts,
        dpp_omitted_groups: omitted,
    })
}

/// One-sided paired t-test of H0: mean(d_fair - d_base) = 0 against
/// H1: mean < 0. Returns `(t statistic, left-tail p-value)`; a small
/// p-value supports the alternative that `d_fair` runs below `d_base`.
pub fn paired_t_one_sided(d_fair: &[f64], d_base: &[f64]) -> Result<(f64, f64)> {
    let n = d_fair.len();
    if d_base.len() != n {
        return Err(Error::Shape(format!(
            "paired samples have different lengths: {n} vs {}",
            d_base.len()
        )));
    }
    if n < 2 {
        return Err(Error::DegenerateTest("need at least 2 pairs".into()));
    }
    let diffs: Vec<f64> = d_fair.iter().zip(d_base).map(|(a, b)| a - b).collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    if sd == 0.0 {
        return Err(Error::DegenerateTest(
            "paired differences have zero variance".into(),
        ));
    }
    let t = mean / (sd / nf.sqrt());
    let p = student_t_cdf(t, nf - 1.0);
    Ok((t, p))
}
