//! Analytic Gaussian mixture model with closed-form conditional label
//! probabilities, group-wise PPV of threshold classifiers, and the exact
//! fair-optimal threshold pair under a predictive-parity constraint.
//!
//! The model: A ~ Categorical(p_a), Y | A=a ~ Bernoulli(p_{Y|a}), and
//! X | A=a, Y=y ~ N(mu_{a,y}, sigma^2 I). Two mean layouts are supported:
//! the two-group planar layout mu_{a,y} = (2a-1, 2y-1) and the coordinate
//! layout mu_{a,y} = (2y-1) e_a for any number of groups. In both, the
//! label evidence lives in a single coordinate, so PPV and risk reduce to
//! one-dimensional normal integrals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{GroupId, TabularDataset};
use crate::error::{Error, Result};
use crate::rng;
use crate::special::{log_normal_sf, normal_cdf, normal_quantile, normal_sf};

/// Mean layout of the mixture components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeanRule {
    /// mu_{a,y} = (2a-1, 2y-1), two groups in the plane.
    BinaryOffset,
    /// mu_{a,y} = (2y-1) e_a, one coordinate axis per group.
    GroupAxis,
}

/// Parameters of the synthetic distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModelSpec {
    group_probs: Vec<f64>,
    label_probs: Vec<f64>,
    sigma: f64,
    dim: usize,
    mean_rule: MeanRule,
}

impl GaussianModelSpec {
    /// Two-group planar model with P(A=1) = `p_a1`, base rates `p_y0` and
    /// `p_y1`, features in the plane.
    pub fn binary(p_a1: f64, p_y0: f64, p_y1: f64, sigma: f64) -> Result<Self> {
        Self::validated(
            vec![1.0 - p_a1, p_a1],
            vec![p_y0, p_y1],
            sigma,
            2,
            MeanRule::BinaryOffset,
        )
    }

    /// Coordinate-axis model with one dimension per group.
    pub fn multi_class(group_probs: Vec<f64>, label_probs: Vec<f64>, sigma: f64) -> Result<Self> {
        let dim = group_probs.len();
        Self::validated(group_probs, label_probs, sigma, dim, MeanRule::GroupAxis)
    }

    fn validated(
        group_probs: Vec<f64>,
        label_probs: Vec<f64>,
        sigma: f64,
        dim: usize,
        mean_rule: MeanRule,
    ) -> Result<Self> {
        if group_probs.is_empty() || group_probs.len() != label_probs.len() {
            return Err(Error::Config(
                "group_probs and label_probs must be nonempty and equal length".into(),
            ));
        }
        let total: f64 = group_probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "group probabilities sum to {total}, not 1"
            )));
        }
        if group_probs.iter().any(|&p| p <= 0.0) {
            return Err(Error::Config(
                "every group probability must be positive".into(),
            ));
        }
        if label_probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Config(
                "every label probability must be in (0, 1)".into(),
            ));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::Config("sigma must be positive".into()));
        }
        Ok(Self {
            group_probs,
            label_probs,
            sigma,
            dim,
            mean_rule,
        })
    }

    pub fn num_groups(&self) -> usize {
        self.group_probs.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn group_prob(&self, a: GroupId) -> f64 {
        self.group_probs[a]
    }

    pub fn label_prob(&self, a: GroupId) -> f64 {
        self.label_probs[a]
    }

    /// Copy with group `a`'s base rate replaced.
    pub fn with_label_prob(&self, a: GroupId, p: f64) -> Result<Self> {
        if a >= self.label_probs.len() {
            return Err(Error::UnknownGroup(a));
        }
        let mut label_probs = self.label_probs.clone();
        label_probs[a] = p;
        Self::validated(
            self.group_probs.clone(),
            label_probs,
            self.sigma,
            self.dim,
            self.mean_rule,
        )
    }

    /// Copy with the group distribution replaced (lengths must match).
    pub fn with_group_probs(&self, group_probs: Vec<f64>) -> Result<Self> {
        if group_probs.len() != self.group_probs.len() {
            return Err(Error::Config("group count cannot change".into()));
        }
        Self::validated(
            group_probs,
            self.label_probs.clone(),
            self.sigma,
            self.dim,
            self.mean_rule,
        )
    }

    /// Component mean for (group, label).
    pub fn mean(&self, a: GroupId, y: u8) -> Vec<f64> {
        let sign = if y == 1 { 1.0 } else { -1.0 };
        match self.mean_rule {
            MeanRule::BinaryOffset => vec![2.0 * a as f64 - 1.0, sign],
            MeanRule::GroupAxis => {
                let mut m = vec![0.0; self.dim];
                m[a] = sign;
                m
            }
        }
    }
}

/// Draws a seeded sample from the model. Gaussian variates come from the
/// inverse-CDF transform of 53-bit uniforms, so a seed pins the dataset
/// bit for bit across platforms. Per row the draw order is: group, label,
/// then the `dim` coordinates.
pub fn sample(spec: &GaussianModelSpec, n: usize, seed: u64) -> Result<TabularDataset> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let mut rng = rng::rng_from_seed(seed);
    let mut features = Vec::with_capacity(n * spec.dim);
    let mut groups = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng::uniform_open01(&mut rng);
        let mut acc = 0.0;
        let mut a = spec.num_groups() - 1;
        for (g, &p) in spec.group_probs.iter().enumerate() {
            acc += p;
            if u < acc {
                a = g;
                break;
            }
        }
        let y = (rng::uniform_open01(&mut rng) < spec.label_probs[a]) as u8;
        let mean = spec.mean(a, y);
        for m in mean {
            let z = normal_quantile(rng::uniform_open01(&mut rng));
            features.push(m + spec.sigma * z);
        }
        groups.push(a);
        labels.push(y);
    }
    TabularDataset::new(features, spec.dim, groups, labels, spec.num_groups())
}

/// True conditional label probability P(Y=1 | X=x, A=a), evaluated through
/// the log-odds for numerical stability.
pub fn eta(spec: &GaussianModelSpec, x: &[f64], a: GroupId) -> Result<f64> {
    if x.len() != spec.dim {
        return Err(Error::Shape(format!(
            "feature vector has width {}, model expects {}",
            x.len(),
            spec.dim
        )));
    }
    if a >= spec.num_groups() {
        return Err(Error::UnknownGroup(a));
    }
    let p = spec.label_probs[a];
    let mu0 = spec.mean(a, 0);
    let mu1 = spec.mean(a, 1);
    let d0: f64 = x.iter().zip(&mu0).map(|(v, m)| (v - m) * (v - m)).sum();
    let d1: f64 = x.iter().zip(&mu1).map(|(v, m)| (v - m) * (v - m)).sum();
    let log_odds = (p / (1.0 - p)).ln() + (d0 - d1) / (2.0 * spec.sigma * spec.sigma);
    let s = if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    };
    Ok(s.clamp(1e-300, 1.0 - 1e-12))
}

/// True scores for every row of a dataset drawn from the model.
pub fn eta_scores(spec: &GaussianModelSpec, ds: &TabularDataset) -> Result<Vec<f64>> {
    (0..ds.len())
        .map(|i| eta(spec, ds.row(i), ds.groups()[i]))
        .collect()
}

// z_a(t) = sigma * log(q_a(t)) / 2 with q_a(t) = t (1-p) / ((1-t) p);
// thresholding eta_a at t selects the label coordinate above sigma * z_a(t).
fn threshold_z(spec: &GaussianModelSpec, a: GroupId, t: f64) -> f64 {
    let p = spec.label_probs[a];
    let q = t * (1.0 - p) / ((1.0 - t) * p);
    spec.sigma * q.ln() / 2.0
}

fn check_group_and_t(spec: &GaussianModelSpec, a: GroupId, t: f64) -> Result<()> {
    if a >= spec.num_groups() {
        return Err(Error::UnknownGroup(a));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "threshold must be in (0, 1), got {t}"
        )));
    }
    Ok(())
}

/// Closed-form PPV of group `a` under the threshold classifier
/// I(eta_a(x) >= t):
///
/// ```text
/// p sf(z - 1/sigma) / [p sf(z - 1/sigma) + (1-p) sf(z + 1/sigma)]
/// ```
///
/// with z = sigma log(q_a(t)) / 2, evaluated through log survival
/// functions so the ratio stays finite arbitrarily deep in the tail.
pub fn ppv_closed_form(spec: &GaussianModelSpec, a: GroupId, t: f64) -> Result<f64> {
    check_group_and_t(spec, a, t)?;
    let p = spec.label_probs[a];
    let z = threshold_z(spec, a, t);
    let kappa = 1.0 / spec.sigma;
    let log_ratio = log_normal_sf(z + kappa) - log_normal_sf(z - kappa);
    Ok(1.0 / (1.0 + (1.0 - p) / p * log_ratio.exp()))
}

/// P(eta_a(X) >= t | A=a): the positive-prediction rate of the threshold
/// classifier within group `a`.
pub fn coverage_closed_form(spec: &GaussianModelSpec, a: GroupId, t: f64) -> Result<f64> {
    check_group_and_t(spec, a, t)?;
    let p = spec.label_probs[a];
    let z = threshold_z(spec, a, t);
    let kappa = 1.0 / spec.sigma;
    Ok(p * normal_sf(z - kappa) + (1.0 - p) * normal_sf(z + kappa))
}

/// The model-specific value the sufficient condition compares base rates
/// against: group 0's closed-form PPV at the cost threshold.
pub fn condition_rhs(spec: &GaussianModelSpec, c: f64) -> Result<f64> {
    ppv_closed_form(spec, 0, c)
}

/// Population sufficient-condition check, in the symmetric form
/// min_a PPV_a(c) >= max_a p_{Y|a}. `one_sided_rhs` additionally reports
/// group 0's PPV at c, the quantity a two-group analysis compares the other
/// group's base rate against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConditionCheck {
    pub holds: bool,
    pub min_ppv: f64,
    pub max_base_rate: f64,
    pub one_sided_rhs: f64,
}

pub fn condition_check(spec: &GaussianModelSpec, c: f64) -> Result<OracleConditionCheck> {
    let mut min_ppv = f64::INFINITY;
    for a in 0..spec.num_groups() {
        min_ppv = min_ppv.min(ppv_closed_form(spec, a, c)?);
    }
    let max_base_rate = spec
        .label_probs
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(OracleConditionCheck {
        holds: min_ppv >= max_base_rate,
        min_ppv,
        max_base_rate,
        one_sided_rhs: condition_rhs(spec, c)?,
    })
}

/// Inverts the closed-form PPV of group `a`: finds t with PPV_a(t) = target
/// by bisection on the strictly increasing PPV. The target must lie in
/// (p_{Y|a}, 1), the open range the PPV sweeps over (0, 1).
pub fn match_threshold_for_group(spec: &GaussianModelSpec, a: GroupId, target: f64) -> Result<f64> {
    if a >= spec.num_groups() {
        return Err(Error::UnknownGroup(a));
    }
    let mut lo = 1e-14;
    let mut hi = 1.0 - 1e-14;
    if target < ppv_closed_form(spec, a, lo)? {
        return Err(Error::UnreachableTarget(format!(
            "group {a}: PPV target {target} below the group floor {}",
            spec.label_probs[a]
        )));
    }
    if target > ppv_closed_form(spec, a, hi)? {
        return Err(Error::UnreachableTarget(format!(
            "group {a}: PPV target {target} beyond the reachable range"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = ppv_closed_form(spec, a, mid)?;
        if (v - target).abs() <= 1e-13 {
            return Ok(mid);
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The matching function of the two-group model: the group-0 threshold
/// whose closed-form PPV equals group 1's PPV at `t`.
pub fn match_t0(spec: &GaussianModelSpec, t: f64) -> Result<f64> {
    check_group_and_t(spec, 1, t)?;
    let target = ppv_closed_form(spec, 1, t)?;
    match_threshold_for_group(spec, 0, target)
}

/// Cost-sensitive risk of the threshold classifier with per-group
/// thresholds `ths` (one per group, each in (0, 1)).
pub fn risk_at_thresholds(spec: &GaussianModelSpec, ths: &[f64], c: f64) -> Result<f64> {
    if ths.len() != spec.num_groups() {
        return Err(Error::Shape("one threshold per group required".into()));
    }
    let kappa = 1.0 / spec.sigma;
    let mut risk = 0.0;
    for (a, &t) in ths.iter().enumerate() {
        check_group_and_t(spec, a, t)?;
        let p = spec.label_probs[a];
        let z = threshold_z(spec, a, t);
        let fn_rate = normal_cdf(z - kappa); // P(eta < t | Y=1)
        let fp_rate = normal_sf(z + kappa); // P(eta >= t | Y=0)
        risk += spec.group_probs[a] * ((1.0 - c) * p * fn_rate + c * (1.0 - p) * fp_rate);
    }
    Ok(risk)
}

/// Plain accuracy of the same classifier.
pub fn accuracy_at_thresholds(spec: &GaussianModelSpec, ths: &[f64]) -> Result<f64> {
    if ths.len() != spec.num_groups() {
        return Err(Error::Shape("one threshold per group required".into()));
    }
    let kappa = 1.0 / spec.sigma;
    let mut acc = 0.0;
    for (a, &t) in ths.iter().enumerate() {
        check_group_and_t(spec, a, t)?;
        let p = spec.label_probs[a];
        let z = threshold_z(spec, a, t);
        let tp = p * normal_sf(z - kappa);
        let tn = (1.0 - p) * normal_cdf(z + kappa);
        acc += spec.group_probs[a] * (tp + tn);
    }
    Ok(acc)
}

/// Population disparity (sum of |group PPV - pooled PPV|) of the classifier.
pub fn dpp_at_thresholds(spec: &GaussianModelSpec, ths: &[f64]) -> Result<f64> {
    if ths.len() != spec.num_groups() {
        return Err(Error::Shape("one threshold per group required".into()));
    }
    let mut ppvs = Vec::with_capacity(ths.len());
    let mut pooled_num = 0.0;
    let mut pooled_den = 0.0;
    for (a, &t) in ths.iter().enumerate() {
        let ppv = ppv_closed_form(spec, a, t)?;
        let cov = coverage_closed_form(spec, a, t)?;
        pooled_num += spec.group_probs[a] * cov * ppv;
        pooled_den += spec.group_probs[a] * cov;
        ppvs.push(ppv);
    }
    let pooled = pooled_num / pooled_den;
    Ok(ppvs.iter().map(|v| (v - pooled).abs()).sum())
}

/// The exact fair-optimal solution and the unconstrained comparison point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFairSolution {
    /// Threshold of the anchor group (group 1 in the two-group model).
    pub t_star: f64,
    /// PPV-matched threshold per group; `matched_thresholds[anchor] == t_star`.
    pub matched_thresholds: BTreeMap<GroupId, f64>,
    /// The common PPV attained by every group at the solution.
    pub matched_ppv: f64,
    pub fair_accuracy: f64,
    pub fair_risk: f64,
    pub uncon_accuracy: f64,
    pub uncon_dpp: f64,
    /// Group 0's closed-form PPV at the cost threshold.
    pub condition_value: f64,
}

/// Minimizes the closed-form cost-sensitive risk over the one-parameter
/// family of PPV-matched threshold tuples. The family is parametrized by
/// the common PPV value s, gridded with step 1e-4 over
/// (max_a p_{Y|a}, 1) — the range a shared PPV can take — and refined by
/// golden-section search to a bracket of width 1e-8; the per-group
/// thresholds then come from inverting each group's PPV at s.
pub fn solve_fair_optimal(spec: &GaussianModelSpec, c: f64) -> Result<OracleFairSolution> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("cost must be in (0, 1), got {c}")));
    }
    let check = condition_check(spec, c)?;
    if !check.holds {
        return Err(Error::OracleInfeasible(format!(
            "sufficient condition fails (min PPV at cost {:.4} = {:.4} < max base rate {:.4}); \
             predictive parity may be unsuitable for this distribution — consider a different \
             fairness criterion",
            c, check.min_ppv, check.max_base_rate
        )));
    }

    let thresholds_at = |s: f64| -> Result<Vec<f64>> {
        (0..spec.num_groups())
            .map(|a| match_threshold_for_group(spec, a, s))
            .collect()
    };
    let risk_of = |s: f64| -> Result<f64> { risk_at_thresholds(spec, &thresholds_at(s)?, c) };

    // coarse grid over the common PPV value
    let floor = check.max_base_rate;
    let step = 1e-4;
    let mut best_k = 1usize;
    let mut best_risk = f64::INFINITY;
    let mut k = 1usize;
    loop {
        let s = floor + k as f64 * step;
        if s >= 1.0 - 1e-9 {
            break;
        }
        let r = risk_of(s)?;
        if r < best_risk {
            best_risk = r;
            best_k = k;
        }
        k += 1;
    }
    if !best_risk.is_finite() {
        return Err(Error::OracleInfeasible(
            "risk grid produced no finite values".into(),
        ));
    }

    // golden-section refinement inside the bracketing grid cells
    let mut a = floor + (best_k.saturating_sub(1).max(1)) as f64 * step - step * 0.5;
    let mut b = (floor + (best_k + 1) as f64 * step + step * 0.5).min(1.0 - 1e-9);
    a = a.max(floor + 1e-12);
    const INV_PHI: f64 = 0.6180339887498949;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = risk_of(x1)?;
    let mut f2 = risk_of(x2)?;
    while b - a > 1e-8 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = risk_of(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = risk_of(x2)?;
        }
    }
    let s_star = 0.5 * (a + b);

    let ths = thresholds_at(s_star)?;
    let anchor: GroupId = if spec.num_groups() >= 2 { 1 } else { 0 };
    let fair_risk = risk_at_thresholds(spec, &ths, c)?;
    let fair_accuracy = accuracy_at_thresholds(spec, &ths)?;
    let uncon: Vec<f64> = vec![c; spec.num_groups()];
    let uncon_accuracy = accuracy_at_thresholds(spec, &uncon)?;
    let uncon_dpp = dpp_at_thresholds(spec, &uncon)?;
    Ok(OracleFairSolution {
        t_star: ths[anchor],
        matched_thresholds: ths.iter().copied().enumerate().collect(),
        matched_ppv: s_star,
        fair_accuracy,
        fair_risk,
        uncon_accuracy,
        uncon_dpp,
        condition_value: check.one_sided_rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(p_y1: f64) -> GaussianModelSpec {
        GaussianModelSpec::binary(0.3, 0.2, p_y1, 2.0).unwrap()
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        assert!(GaussianModelSpec::binary(0.0, 0.2, 0.6, 2.0).is_err());
        assert!(GaussianModelSpec::binary(0.3, 0.0, 0.6, 2.0).is_err());
        assert!(GaussianModelSpec::binary(0.3, 0.2, 0.6, 0.0).is_err());
        assert!(GaussianModelSpec::multi_class(vec![0.5, 0.4], vec![0.2, 0.3], 2.0).is_err());
    }

    #[test]
    fn eta_equals_base_rate_on_the_label_midplane() {
        let spec = settings(0.6);
        for a in 0..2 {
            for x1 in [-3.0, 0.0, 2.0] {
                let e = eta(&spec, &[x1, 0.0], a).unwrap();
                assert!(
                    (e - spec.label_prob(a)).abs() < 1e-12,
                    "eta({x1}, 0 | a={a}) = {e}"
                );
            }
        }
    }

    #[test]
    fn eta_hand_computed_point() {
        // a = 1, p = 0.5, sigma = 2, x = (0, 1): squared distances 5 and 1,
        // log-odds 1/2, eta = 1 / (1 + e^{-1/2})
        let spec = GaussianModelSpec::binary(0.3, 0.2, 0.5, 2.0).unwrap();
        let e = eta(&spec, &[0.0, 1.0], 1).unwrap();
        let want = 1.0 / (1.0 + (-0.5f64).exp());
        assert!((e - want).abs() < 1e-14, "eta = {e}, want {want}");
        assert!((want - 0.6224593312018546).abs() < 1e-15);
    }

    #[test]
    fn eta_tends_to_one_along_the_label_axis() {
        let spec = settings(0.6);
        let mut prev = 0.0;
        for x2 in [0.0, 2.0, 5.0, 10.0, 30.0] {
            let e = eta(&spec, &[0.0, x2], 0).unwrap();
            assert!(e >= prev);
            prev = e;
        }
        assert!(prev > 0.999);
    }

    #[test]
    fn sample_is_reproducible_and_respects_group_frequencies() {
        let spec = settings(0.6);
        let a = sample(&spec, 5_000, 42).unwrap();
        let b = sample(&spec, 5_000, 42).unwrap();
        assert_eq!(a, b);

        let big = sample(&spec, 100_000, 7).unwrap();
        let n1 = big.groups().iter().filter(|&&g| g == 1).count() as f64;
        let n = big.len() as f64;
        let se = (0.3f64 * 0.7 / n).sqrt();
        assert!(
            (n1 / n - 0.3).abs() < 3.0 * se,
            "group-1 frequency {} vs 0.3 (3 sigma = {})",
            n1 / n,
            3.0 * se
        );
    }

    #[test]
    fn ppv_closed_form_at_base_rate_threshold() {
        // t = p makes q = 1: PPV = p sf(-1/s) / (p sf(-1/s) + (1-p) sf(1/s))
        let spec = settings(0.6);
        let got = ppv_closed_form(&spec, 0, 0.2).unwrap();
        assert!((got - 0.3590870019570488).abs() < 1e-12, "PPV = {got}");
    }

    #[test]
    fn ppv_closed_form_matches_published_condition_constant() {
        let spec = settings(0.6);
        let got = ppv_closed_form(&spec, 0, 0.5).unwrap();
        assert!((got - 0.613).abs() < 0.002, "PPV = {got}");
        assert!((got - 0.6130140611859827).abs() < 1e-12);
        assert!((condition_rhs(&spec, 0.5).unwrap() - got).abs() == 0.0);
    }

    #[test]
    fn ppv_closed_form_strictly_increases() {
        let spec = settings(0.45);
        for a in 0..2 {
            let mut prev = 0.0;
            for k in 1..99 {
                let t = 0.01 * k as f64;
                let v = ppv_closed_form(&spec, a, t).unwrap();
                assert!(v > prev, "PPV not increasing at t = {t} (group {a})");
                prev = v;
            }
        }
    }

    #[test]
    fn condition_check_flags_infeasible_base_rate() {
        // p_{Y|1} = 0.7 exceeds group 0's PPV at c = 0.5 (~0.613)
        let spec = settings(0.7);
        let check = condition_check(&spec, 0.5).unwrap();
        assert!(!check.holds);
        assert!(check.max_base_rate == 0.7);
        assert!((check.one_sided_rhs - 0.613).abs() < 0.002);
        for p in [0.2, 0.3, 0.4, 0.5, 0.6] {
            assert!(condition_check(&settings(p), 0.5).unwrap().holds, "p = {p}");
        }
    }

    #[test]
    fn symmetric_groups_always_satisfy_the_condition() {
        let spec = GaussianModelSpec::binary(0.5, 0.35, 0.35, 1.7).unwrap();
        let check = condition_check(&spec, 0.5).unwrap();
        assert!(check.holds); // PPV_a(c) >= p_{Y|a} for the common group
    }

    #[test]
    fn match_t0_is_identity_for_identical_groups() {
        let spec = GaussianModelSpec::binary(0.4, 0.3, 0.3, 2.0).unwrap();
        for t in [0.2, 0.4, 0.55, 0.8] {
            let t0 = match_t0(&spec, t).unwrap();
            assert!((t0 - t).abs() < 1e-9, "T0({t}) = {t0}");
        }
    }

    #[test]
    fn match_t0_round_trips_through_the_defining_equation() {
        let spec = settings(0.6);
        for k in 1..100 {
            let t = k as f64 / 100.0;
            let t0 = match_t0(&spec, t).unwrap();
            let lhs = ppv_closed_form(&spec, 0, t0).unwrap();
            let rhs = ppv_closed_form(&spec, 1, t).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "t = {t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn match_t0_regression_value() {
        // frozen from an independent bisection on the closed form
        let spec = settings(0.6);
        let t0 = match_t0(&spec, 0.5).unwrap();
        assert!((t0 - 0.6451324240649068).abs() < 1e-7, "T0(0.5) = {t0}");
        let target = ppv_closed_form(&spec, 1, 0.5).unwrap();
        assert!((target - 0.7261700393139667).abs() < 1e-12);
    }

    #[test]
    fn match_rejects_unreachable_targets() {
        let spec = settings(0.6);
        assert!(matches!(
            match_threshold_for_group(&spec, 0, 0.1),
            Err(Error::UnreachableTarget(_))
        ));
    }

    #[test]
    fn ppv_dominates_threshold_and_base_rate_on_a_grid() {
        let spec = settings(0.55);
        for a in 0..2 {
            let p = spec.label_prob(a);
            for k in 1..1000 {
                let t = k as f64 / 1000.0;
                let v = ppv_closed_form(&spec, a, t).unwrap();
                assert!(v >= t - 1e-12, "PPV({t}) = {v} < t (group {a})");
                assert!(v >= p - 1e-12, "PPV({t}) = {v} < base rate (group {a})");
            }
        }
    }

    #[test]
    fn every_reachable_ppv_level_is_attained() {
        let spec = settings(0.6);
        for a in 0..2 {
            let p = spec.label_prob(a);
            for k in 0..=20 {
                let s = p + (1.0 - 1e-6 - p) * k as f64 / 20.0;
                if s <= p {
                    continue;
                }
                let t = match_threshold_for_group(&spec, a, s).unwrap();
                let v = ppv_closed_form(&spec, a, t).unwrap();
                assert!((v - s).abs() < 1e-9, "group {a}, level {s}: got {v}");
            }
        }
    }

    #[test]
    fn solve_fair_optimal_matches_ppv_across_groups() {
        let spec = settings(0.6);
        let sol = solve_fair_optimal(&spec, 0.5).unwrap();
        let ppvs: Vec<f64> = (0..2)
            .map(|a| ppv_closed_form(&spec, a, sol.matched_thresholds[&a]).unwrap())
            .collect();
        assert!((ppvs[0] - ppvs[1]).abs() < 1e-9, "PPVs {ppvs:?}");
        assert!((ppvs[1] - sol.matched_ppv).abs() < 1e-7);
        assert_eq!(sol.t_star, sol.matched_thresholds[&1]);
        assert!(sol.t_star > 0.0 && sol.t_star < 1.0);
    }

    #[test]
    fn solve_fair_optimal_is_locally_optimal_along_the_matched_curve() {
        let spec = settings(0.5);
        let c = 0.5;
        let sol = solve_fair_optimal(&spec, c).unwrap();
        let risk_at_anchor = |t1: f64| -> f64 {
            let t0 = match_t0(&spec, t1).unwrap();
            risk_at_thresholds(&spec, &[t0, t1], c).unwrap()
        };
        let base = risk_at_anchor(sol.t_star);
        assert!((base - sol.fair_risk).abs() < 1e-10);
        assert!(risk_at_anchor(sol.t_star + 1e-4) >= base - 1e-12);
        assert!(risk_at_anchor(sol.t_star - 1e-4) >= base - 1e-12);
    }

    #[test]
    fn unconstrained_thresholds_at_cost_are_bayes_optimal() {
        let spec = settings(0.6);
        for c in [0.35, 0.5, 0.65] {
            let base = risk_at_thresholds(&spec, &[c, c], c).unwrap();
            for delta in [-0.01, 0.01] {
                let shifted = risk_at_thresholds(&spec, &[c + delta, c + delta], c).unwrap();
                assert!(shifted >= base - 1e-14, "c = {c}, delta = {delta}");
            }
        }
    }

    #[test]
    fn accuracy_equals_one_minus_twice_risk_at_even_cost() {
        let spec = settings(0.4);
        let ths = [0.55, 0.48];
        let acc = accuracy_at_thresholds(&spec, &ths).unwrap();
        let risk = risk_at_thresholds(&spec, &ths, 0.5).unwrap();
        assert!((acc - (1.0 - 2.0 * risk)).abs() < 1e-14);
    }

    #[test]
    fn solve_fair_optimal_rejects_infeasible_model() {
        let spec = settings(0.7);
        assert!(matches!(
            solve_fair_optimal(&spec, 0.5),
            Err(Error::OracleInfeasible(_))
        ));
    }

    #[test]
    fn multi_class_solution_matches_every_group() {
        let spec =
            GaussianModelSpec::multi_class(vec![0.3, 0.3, 0.4], vec![0.2, 0.6, 0.3], 2.0).unwrap();
        let sol = solve_fair_optimal(&spec, 0.5).unwrap();
        for a in 0..3 {
            let v = ppv_closed_form(&spec, a, sol.matched_thresholds[&a]).unwrap();
            assert!((v - sol.matched_ppv).abs() < 1e-7, "group {a}");
        }
        // frozen from an independent grid + refinement run on the closed form
        assert!((sol.fair_accuracy - 0.7498998560582719).abs() < 1e-4);
    }
}
