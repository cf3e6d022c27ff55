//! Group-wise threshold calibration: empirical sufficient-condition check,
//! PPV-matching threshold search across groups, and cost-sensitive risk
//! minimization over the anchor threshold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{GroupId, GroupView};
use crate::error::{Error, Result};

/// Knobs for the threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Cost parameter c in [0, 1]: false positives weigh c, false negatives 1 - c.
    pub cost: f64,
    /// Group whose threshold drives the one-dimensional risk search.
    pub anchor_group: GroupId,
    /// Spacing of the anchor-threshold grid.
    pub grid_step: f64,
    /// Slack added to the left side of the sufficient-condition check.
    pub condition_slack: f64,
    /// Residuals above this produce a per-group warning (never an error).
    pub ppv_match_tol: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            cost: 0.5,
            anchor_group: 0,
            grid_step: 0.001,
            condition_slack: 0.0,
            ppv_match_tol: 0.01,
        }
    }
}

impl CalibrationConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cost) {
            return Err(Error::Config(format!(
                "cost must be in [0, 1], got {}",
                self.cost
            )));
        }
        if !self.grid_step.is_finite() || self.grid_step <= 0.0 {
            return Err(Error::Config("grid_step must be positive".into()));
        }
        if self.condition_slack < 0.0 || self.ppv_match_tol < 0.0 {
            return Err(Error::Config(
                "slack and tolerance must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// One threshold per group; scores at or above the group's threshold are
/// predicted positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    thresholds: BTreeMap<GroupId, f64>,
}

impl ThresholdSet {
    pub fn new(thresholds: BTreeMap<GroupId, f64>) -> Self {
        Self { thresholds }
    }

    /// The same threshold for every group id in `0..num_groups`.
    pub fn constant(num_groups: usize, t: f64) -> Self {
        Self {
            thresholds: (0..num_groups).map(|g| (g, t)).collect(),
        }
    }

    pub fn get(&self, group: GroupId) -> Option<f64> {
        self.thresholds.get(&group).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GroupId, f64)> + '_ {
        self.thresholds.iter().map(|(&g, &t)| (g, t))
    }

    pub fn as_map(&self) -> &BTreeMap<GroupId, f64> {
        &self.thresholds
    }
}

/// Verdict of the empirical sufficient-condition check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub holds: bool,
    /// min over groups of the PPV at the cost threshold (NaN if undefined everywhere).
    pub lhs: f64,
    /// max over groups of the empirical base rate.
    pub rhs: f64,
    /// Groups whose PPV at the cost threshold is undefined (no score >= c).
    pub undefined_groups: Vec<GroupId>,
}

/// Outcome of `calibrate`. Thresholds are present iff the condition holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub condition: ConditionCheck,
    pub thresholds: Option<ThresholdSet>,
    /// Anchor-grid point whose risk was minimal.
    pub anchor_t: Option<f64>,
    pub achieved_ppv: BTreeMap<GroupId, f64>,
    /// |achieved PPV - anchor PPV| per non-anchor group at the chosen point.
    pub match_residuals: BTreeMap<GroupId, f64>,
    /// Groups whose residual exceeded `ppv_match_tol`.
    pub match_warnings: Vec<GroupId>,
    /// (anchor threshold, empirical cost-sensitive risk) over the whole grid.
    pub risk_trace: Vec<(f64, f64)>,
    pub base_rates: BTreeMap<GroupId, f64>,
}

impl CalibrationResult {
    pub fn condition_holds(&self) -> bool {
        self.condition.holds
    }
}

/// Rows used for empirical risk evaluation during calibration.
#[derive(Debug, Clone, Copy)]
pub struct ScoredSample<'a> {
    pub scores: &'a [f64],
    pub groups: &'a [GroupId],
    pub labels: &'a [u8],
}

impl<'a> ScoredSample<'a> {
    fn validate(&self) -> Result<()> {
        let n = self.scores.len();
        if n == 0 {
            return Err(Error::Data("empty risk-evaluation sample".into()));
        }
        if self.groups.len() != n || self.labels.len() != n {
            return Err(Error::Shape(format!(
                "scores/groups/labels lengths differ: {n}/{}/{}",
                self.groups.len(),
                self.labels.len()
            )));
        }
        Ok(())
    }
}

/// Empirical PPV of thresholding the view at `t` (>= semantics): the share
/// of positive labels among rows with score >= t.
pub fn ppv_hat(view: &GroupView, t: f64) -> Result<f64> {
    let count = view.count_at_least(t);
    if count == 0 {
        return Err(Error::UndefinedPpv(format!(
            "group {}: no score >= {t} (max score {})",
            view.group(),
            view.max_score()
        )));
    }
    Ok(view.positives_in_top(count) as f64 / count as f64)
}

/// Empirical base rate of the view: the mean label.
pub fn base_rate_hat(view: &GroupView) -> f64 {
    view.positives_in_top(view.len()) as f64 / view.len() as f64
}

/// Checks whether min_a PPV_a(c) + slack >= max_a base_rate_a. A group with
/// no score above the cost threshold makes the condition fail and is named
/// in the verdict.
pub fn check_condition(
    views: &BTreeMap<GroupId, GroupView>,
    cfg: &CalibrationConfig,
) -> ConditionCheck {
    let mut lhs = f64::INFINITY;
    let mut rhs = f64::NEG_INFINITY;
    let mut undefined = Vec::new();
    for (&g, view) in views {
        rhs = rhs.max(base_rate_hat(view));
        match ppv_hat(view, cfg.cost) {
            Ok(p) => lhs = lhs.min(p),
            Err(_) => undefined.push(g),
        }
    }
    let lhs = if lhs.is_finite() { lhs } else { f64::NAN };
    let holds = undefined.is_empty() && lhs + cfg.condition_slack >= rhs;
    ConditionCheck {
        holds,
        lhs,
        rhs,
        undefined_groups: undefined,
    }
}

// Candidate threshold closest in PPV to `target`; ties go to the smallest
// threshold (most positives selected). Candidates are (t, ppv) ascending.
fn closest_candidate(candidates: &[(f64, f64)], target: f64) -> (f64, f64) {
    let mut best = candidates[0];
    let mut best_diff = (best.1 - target).abs();
    for &(t, p) in &candidates[1..] {
        let diff = (p - target).abs();
        if diff < best_diff {
            best = (t, p);
            best_diff = diff;
        }
    }
    best
}

/// Finds the threshold whose empirical PPV is closest to `target_ppv`,
/// searching exhaustively over the view's distinct score values. Returns
/// `(threshold, achieved PPV)`.
pub fn match_threshold(view: &GroupView, target_ppv: f64) -> Result<(f64, f64)> {
    let base = base_rate_hat(view);
    if target_ppv < base {
        return Err(Error::UnreachableTarget(format!(
            "group {}: target PPV {target_ppv} below base rate {base}",
            view.group()
        )));
    }
    if target_ppv > 1.0 {
        return Err(Error::UnreachableTarget(format!(
            "group {}: target PPV {target_ppv} exceeds 1",
            view.group()
        )));
    }
    Ok(closest_candidate(&view.candidates(), target_ppv))
}

// Smallest candidate threshold of the anchor whose PPV reaches `floor`.
fn find_t_min(anchor_candidates: &[(f64, f64)], floor: f64) -> Option<f64> {
    anchor_candidates
        .iter()
        .find(|&&(_, p)| p >= floor)
        .map(|&(t, _)| t)
}

/// Runs the full threshold search: condition check, anchor grid from t_min
/// to the anchor's maximum score, per-grid-point PPV matching for the other
/// groups, and cost-sensitive risk minimization over the grid (ties to the
/// smallest threshold). Risk is evaluated on `sample`.
pub fn calibrate(
    views: &BTreeMap<GroupId, GroupView>,
    sample: ScoredSample<'_>,
    cfg: &CalibrationConfig,
) -> Result<CalibrationResult> {
    cfg.validate()?;
    sample.validate()?;
    if views.is_empty() {
        return Err(Error::CalibrationInput("no group views".into()));
    }
    let anchor = cfg.anchor_group;
    let anchor_view = views.get(&anchor).ok_or(Error::UnknownGroup(anchor))?;
    let num_groups = views.keys().max().unwrap() + 1;
    if sample.groups.iter().any(|&g| g >= num_groups) {
        return Err(Error::Data(
            "risk-evaluation sample has group ids absent from the views".into(),
        ));
    }

    let base_rates: BTreeMap<GroupId, f64> =
        views.iter().map(|(&g, v)| (g, base_rate_hat(v))).collect();
    let condition = check_condition(views, cfg);
    if !condition.holds {
        return Ok(CalibrationResult {
            condition,
            thresholds: None,
            anchor_t: None,
            achieved_ppv: BTreeMap::new(),
            match_residuals: BTreeMap::new(),
            match_warnings: Vec::new(),
            risk_trace: Vec::new(),
            base_rates,
        });
    }

    let max_rate = condition.rhs;
    let candidates: BTreeMap<GroupId, Vec<(f64, f64)>> =
        views.iter().map(|(&g, v)| (g, v.candidates())).collect();
    let t_min = find_t_min(&candidates[&anchor], max_rate).ok_or_else(|| {
        Error::CalibrationInfeasible(format!(
            "anchor group {anchor}: PPV never reaches the max base rate {max_rate} \
             (anchor PPV range {:.4}..{:.4})",
            candidates[&anchor]
                .iter()
                .map(|c| c.1)
                .fold(f64::INFINITY, f64::min),
            candidates[&anchor]
                .iter()
                .map(|c| c.1)
                .fold(f64::NEG_INFINITY, f64::max),
        ))
    })?;

    // anchor grid {t_min, t_min + step, ...} capped at the max anchor score
    let t_max = anchor_view.max_score();
    let mut grid = Vec::new();
    let mut k = 0u64;
    loop {
        let t = t_min + k as f64 * cfg.grid_step;
        if t > t_max + 1e-12 {
            break;
        }
        grid.push(t.min(t_max));
        k += 1;
    }
    if *grid.last().unwrap() < t_max - 1e-12 {
        grid.push(t_max);
    }

    // dense per-group thresholds for the risk pass
    let mut thresholds = vec![f64::INFINITY; num_groups];
    let n = sample.scores.len() as f64;
    let cost = cfg.cost;
    let mut trace = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None; // (risk, anchor t)
    for &t in &grid {
        let target = ppv_hat(anchor_view, t)?;
        thresholds[anchor] = t;
        for (&g, cands) in &candidates {
            if g != anchor {
                thresholds[g] = closest_candidate(cands, target).0;
            }
        }
        let mut risk = 0.0;
        for ((&s, &g), &y) in sample.scores.iter().zip(sample.groups).zip(sample.labels) {
            let pred = s >= thresholds[g];
            if pred != (y == 1) {
                risk += if y == 1 { 1.0 - cost } else { cost };
            }
        }
        risk /= n;
        trace.push((t, risk));
        if best.is_none_or(|(r, _)| risk < r) {
            best = Some((risk, t));
        }
    }
    let (_, anchor_t) = best.unwrap();

    let target = ppv_hat(anchor_view, anchor_t)?;
    let mut final_thresholds = BTreeMap::new();
    let mut achieved_ppv = BTreeMap::new();
    let mut residuals = BTreeMap::new();
    let mut warnings = Vec::new();
    final_thresholds.insert(anchor, anchor_t);
    achieved_ppv.insert(anchor, target);
    for (&g, cands) in &candidates {
        if g == anchor {
            continue;
        }
        let (t_g, achieved) = closest_candidate(cands, target);
        let residual = (achieved - target).abs();
        if residual > cfg.ppv_match_tol {
            warnings.push(g);
        }
        final_thresholds.insert(g, t_g);
        achieved_ppv.insert(g, achieved);
        residuals.insert(g, residual);
    }

    Ok(CalibrationResult {
        condition,
        thresholds: Some(ThresholdSet::new(final_thresholds)),
        anchor_t: Some(anchor_t),
        achieved_ppv,
        match_residuals: residuals,
        match_warnings: warnings,
        risk_trace: trace,
        base_rates,
    })
}

/// Deterministic group-wise thresholding: predicts 1 iff `score >= t_group`.
pub fn predict(thresholds: &ThresholdSet, score: f64, group: GroupId) -> Result<u8> {
    let t = thresholds.get(group).ok_or(Error::UnknownGroup(group))?;
    Ok((score >= t) as u8)
}
