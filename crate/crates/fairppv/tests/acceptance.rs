//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values (run with `--nocapture` to see them).

use std::io::Write as _;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use fairppv::calibration::{base_rate_hat, match_threshold, ppv_hat};
use fairppv::data::{group_views, GroupView};
use fairppv::experiment::{
    bootstrap_split, group_prob_sweep_preset, run_synthetic, run_tabular, sample_size_sweep_preset,
    synthetic_preset, TabularConfig,
};
use fairppv::gaussian::{self, GaussianModelSpec};
use fairppv::score_model::mean_loss_and_gradient;
use fairppv::{calibration::CalibrationConfig, data::CsvSchema, data::TabularDataset};

fn uniform(rng: &mut ChaCha12Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / 9007199254740992.0
}

/// Criterion 1: the closed-form solver reproduces the reference theoretical
/// block (fair accuracy, unconstrained accuracy, unconstrained disparity)
/// for p_y1 in {0.2, ..., 0.6} within +/- 0.002.
#[test]
fn criterion_1_oracle_reproduces_reference_values() {
    let expected = [
        // (p_y1, fair acc, uncon acc, uncon dpp)
        (0.2, 0.814, 0.814, 0.000),
        (0.3, 0.794, 0.794, 0.024),
        (0.4, 0.781, 0.781, 0.050),
        (0.5, 0.775, 0.777, 0.078),
        (0.6, 0.778, 0.781, 0.113),
    ];
    let started = std::time::Instant::now();
    for (p, fair_acc, uncon_acc, uncon_dpp) in expected {
        let spec = GaussianModelSpec::binary(0.3, 0.2, p, 2.0).unwrap();
        let sol = gaussian::solve_fair_optimal(&spec, 0.5).unwrap();
        assert!(
            (sol.fair_accuracy - fair_acc).abs() <= 0.002,
            "p = {p}: fair accuracy {} vs {fair_acc}",
            sol.fair_accuracy
        );
        assert!(
            (sol.uncon_accuracy - uncon_acc).abs() <= 0.002,
            "p = {p}: unconstrained accuracy {} vs {uncon_acc}",
            sol.uncon_accuracy
        );
        assert!(
            (sol.uncon_dpp - uncon_dpp).abs() <= 0.002,
            "p = {p}: unconstrained dpp {} vs {uncon_dpp}",
            sol.uncon_dpp
        );
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 5.0, "oracle sweep took {secs:.2}s, budget is 5s");
    println!(
        "[criterion 1] PASS: theoretical block reproduced for 5 settings within 0.002 \
         ({secs:.2}s)"
    );
}

/// Criterion 2: the sufficient-condition constant at the reference setting.
#[test]
fn criterion_2_condition_constant() {
    let spec = GaussianModelSpec::binary(0.3, 0.2, 0.6, 2.0).unwrap();
    let rhs = gaussian::condition_rhs(&spec, 0.5).unwrap();
    assert!((rhs - 0.613).abs() <= 0.002, "condition constant {rhs}");
    println!("[criterion 2] PASS: condition constant {rhs:.4} within 0.613 +/- 0.002");
}

/// Criterion 3: 20 replications of the reference experiment at p_y1 = 0.6
/// (50k train, 5k test, logistic scores, grid step 0.001) land within 0.01
/// of the theoretical fair accuracy 0.778 with mean disparity at most 0.07.
#[test]
fn criterion_3_replicated_pipeline_tracks_theory() {
    let cfg = synthetic_preset(0.6, 50_000, 5_000, 20, 20240613);
    let report = run_synthetic(&cfg).unwrap();
    let s = &report.settings[0];
    assert!(
        s.fair.count + s.condition_failures + s.calibration_infeasible == 20,
        "accounting must cover all replications"
    );
    assert!(
        s.fair.count >= 15,
        "too few successful replications: {}",
        s.fair.count
    );
    let acc = s.fair.mean_accuracy;
    let dpp = s.fair.mean_dpp;
    assert!((acc - 0.778).abs() < 0.01, "mean fair accuracy {acc}");
    assert!(dpp <= 0.07, "mean fair dpp {dpp}");
    println!(
        "[criterion 3] PASS: mean fair accuracy {acc:.4} (target 0.778 +/- 0.01), \
         mean dpp {dpp:.4} <= 0.07, {} of 20 replications calibrated ({:.1}s)",
        s.fair.count, report.timing.total_secs
    );
}

/// Criterion 4a: the empirical PPV equals a direct double loop, exactly,
/// on 500 random views.
#[test]
fn criterion_4a_ppv_equals_double_loop() {
    let mut rng = ChaCha12Rng::seed_from_u64(401);
    for case in 0..500 {
        let n = 1 + (rng.next_u64() % 200) as usize;
        let pairs: Vec<(f64, u8)> = (0..n)
            .map(|_| {
                let s = ((rng.next_u64() % 64) as f64 + 0.5) / 64.0;
                (s, (rng.next_u64() % 2) as u8)
            })
            .collect();
        let view = GroupView::from_pairs(0, pairs.clone()).unwrap();
        let t = uniform(&mut rng);
        let selected: Vec<u8> = pairs
            .iter()
            .filter(|&&(s, _)| s >= t)
            .map(|&(_, y)| y)
            .collect();
        match ppv_hat(&view, t) {
            Ok(p) => {
                let mut pos = 0usize;
                for &y in &selected {
                    pos += y as usize;
                }
                assert!(
                    p == pos as f64 / selected.len() as f64,
                    "case {case}: ppv mismatch"
                );
            }
            Err(_) => assert!(selected.is_empty(), "case {case}: spurious undefined PPV"),
        }
    }
    println!("[criterion 4a] PASS: ppv_hat equals double-loop enumeration on 500 views");
}

/// Criterion 4b: threshold matching equals exhaustive candidate search on
/// 500 random views.
#[test]
fn criterion_4b_match_equals_exhaustive_search() {
    let mut rng = ChaCha12Rng::seed_from_u64(402);
    for case in 0..500 {
        let n = 1 + (rng.next_u64() % 200) as usize;
        let pairs: Vec<(f64, u8)> = (0..n)
            .map(|_| {
                let s = ((rng.next_u64() % 40) as f64 + 0.5) / 40.0;
                (s, (rng.next_u64() % 2) as u8)
            })
            .collect();
        let view = GroupView::from_pairs(0, pairs.clone()).unwrap();
        let base = base_rate_hat(&view);
        let target = base + (1.0 - base) * uniform(&mut rng);
        let (got_t, got_ppv) = match_threshold(&view, target).unwrap();

        let mut cands: Vec<f64> = pairs.iter().map(|&(s, _)| s).collect();
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cands.dedup();
        let mut want_t = f64::NAN;
        let mut want_diff = f64::INFINITY;
        for &c in &cands {
            let sel: Vec<u8> = pairs
                .iter()
                .filter(|&&(s, _)| s >= c)
                .map(|&(_, y)| y)
                .collect();
            let pos: usize = sel.iter().map(|&y| y as usize).sum();
            let ppv = pos as f64 / sel.len() as f64;
            if (ppv - target).abs() < want_diff {
                want_diff = (ppv - target).abs();
                want_t = c;
            }
        }
        assert!(
            got_t == want_t,
            "case {case}: matched {got_t} vs exhaustive {want_t}"
        );
        assert!(
            (got_ppv - target).abs() == want_diff,
            "case {case}: residual mismatch"
        );
    }
    println!("[criterion 4b] PASS: match_threshold equals exhaustive search on 500 views");
}

/// Criterion 4c: closed-form PPV is nondecreasing and dominates both the
/// threshold and the base rate on 1000-point grids, for 50 random models.
#[test]
fn criterion_4c_closed_form_ppv_bounds() {
    let mut rng = ChaCha12Rng::seed_from_u64(403);
    for case in 0..50 {
        let p_a1 = 0.2 + 0.6 * uniform(&mut rng);
        let p_y0 = 0.1 + 0.8 * uniform(&mut rng);
        let p_y1 = 0.1 + 0.8 * uniform(&mut rng);
        let sigma = 0.5 + 2.5 * uniform(&mut rng);
        let spec = GaussianModelSpec::binary(p_a1, p_y0, p_y1, sigma).unwrap();
        for a in 0..2 {
            let mut prev = 0.0;
            for k in 1..=1000 {
                let t = k as f64 / 1001.0;
                let v = gaussian::ppv_closed_form(&spec, a, t).unwrap();
                assert!(v >= prev - 1e-12, "case {case}: PPV decreased at t = {t}");
                assert!(v >= t - 1e-9, "case {case}: PPV {v} below threshold {t}");
                assert!(
                    v >= spec.label_prob(a) - 1e-9,
                    "case {case}: PPV {v} below base rate"
                );
                prev = v;
            }
        }
    }
    println!("[criterion 4c] PASS: PPV monotone and above t and the base rate (50 specs)");
}

/// Criterion 4d: closed-form PPV agrees with a structured Monte Carlo
/// estimate from one million model draws, within four standard errors.
#[test]
fn criterion_4d_closed_form_matches_monte_carlo() {
    let mut rng = ChaCha12Rng::seed_from_u64(404);
    for case in 0..20 {
        let p_a1 = 0.25 + 0.5 * uniform(&mut rng);
        let p_y0 = 0.2 + 0.6 * uniform(&mut rng);
        let p_y1 = 0.2 + 0.6 * uniform(&mut rng);
        let sigma = 0.8 + 2.0 * uniform(&mut rng);
        let spec = GaussianModelSpec::binary(p_a1, p_y0, p_y1, sigma).unwrap();
        let a = (case % 2) as usize;
        let t = 0.15 + 0.7 * uniform(&mut rng);

        let ds = gaussian::sample(&spec, 1_000_000, 404_000 + case as u64).unwrap();
        let scores = gaussian::eta_scores(&spec, &ds).unwrap();
        let mut selected = 0usize;
        let mut positive = 0usize;
        for ((&g, &y), &s) in ds.groups().iter().zip(ds.labels()).zip(&scores) {
            if g == a && s >= t {
                selected += 1;
                positive += y as usize;
            }
        }
        assert!(
            selected > 50,
            "case {case}: selection too small for a CLT band"
        );
        let empirical = positive as f64 / selected as f64;
        let exact = gaussian::ppv_closed_form(&spec, a, t).unwrap();
        let se = (exact * (1.0 - exact) / selected as f64).sqrt();
        assert!(
            (empirical - exact).abs() <= 4.0 * se,
            "case {case}: |{empirical} - {exact}| > 4se = {}",
            4.0 * se
        );
    }
    println!("[criterion 4d] PASS: closed-form PPV within 4 standard errors of 1e6-draw MC");
}

/// Criterion 4e: the analytic training gradient matches central finite
/// differences on 50 random small instances.
#[test]
fn criterion_4e_gradient_matches_finite_differences() {
    let mut rng = ChaCha12Rng::seed_from_u64(405);
    for case in 0..50 {
        let n = 2 + (rng.next_u64() % 19) as usize;
        let d = 1 + (rng.next_u64() % 5) as usize;
        let num_groups = 1 + (rng.next_u64() % 3) as usize;
        let features: Vec<f64> = (0..n * d).map(|_| 4.0 * uniform(&mut rng) - 2.0).collect();
        let groups: Vec<usize> = (0..n)
            .map(|_| (rng.next_u64() % num_groups as u64) as usize)
            .collect();
        let labels: Vec<u8> = (0..n).map(|_| (rng.next_u64() % 2) as u8).collect();
        let ds = TabularDataset::new(features, d, groups, labels, num_groups).unwrap();
        let weights: Vec<f64> = (0..d + num_groups)
            .map(|_| 2.0 * uniform(&mut rng) - 1.0)
            .collect();
        let bias = 2.0 * uniform(&mut rng) - 1.0;
        let l2 = 0.1 * uniform(&mut rng);

        let (_, grad_w, grad_b) = mean_loss_and_gradient(&weights, bias, &ds, l2);
        let h = 1e-5;
        for k in 0..weights.len() {
            let mut wp = weights.clone();
            let mut wm = weights.clone();
            wp[k] += h;
            wm[k] -= h;
            let fd = (mean_loss_and_gradient(&wp, bias, &ds, l2).0
                - mean_loss_and_gradient(&wm, bias, &ds, l2).0)
                / (2.0 * h);
            let rel = (grad_w[k] - fd).abs() / fd.abs().max(1e-6);
            assert!(rel < 1e-4, "case {case}, weight {k}: rel err {rel}");
        }
        let fd_b = (mean_loss_and_gradient(&weights, bias + h, &ds, l2).0
            - mean_loss_and_gradient(&weights, bias - h, &ds, l2).0)
            / (2.0 * h);
        let rel_b = (grad_b - fd_b).abs() / fd_b.abs().max(1e-6);
        assert!(rel_b < 1e-4, "case {case}, bias: rel err {rel_b}");
    }
    println!("[criterion 4e] PASS: gradient matches finite differences on 50 instances");
}

/// Criterion 4f: a seeded synthetic experiment serializes identically
/// across runs.
#[test]
fn criterion_4f_end_to_end_determinism() {
    let cfg = synthetic_preset(0.5, 2_000, 1_000, 3, 777);
    let a = serde_json::to_string(&run_synthetic(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_synthetic(&cfg).unwrap()).unwrap();
    assert!(a == b, "reports differ across reruns");
    println!(
        "[criterion 4f] PASS: identical JSON across reruns ({} bytes)",
        a.len()
    );
}

/// Criterion 5: the sample-size sweep shows a nonincreasing disparity trend
/// (least-squares slope <= 0) and both sweeps account for every replication.
#[test]
fn criterion_5_sweep_trends_and_accounting() {
    let report = run_synthetic(&sample_size_sweep_preset(24, 20240614)).unwrap();
    let points: Vec<(f64, f64)> = report
        .settings
        .iter()
        .map(|s| (s.sweep_value.unwrap(), s.fair.mean_dpp))
        .collect();
    let xbar = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let ybar = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let slope = points
        .iter()
        .map(|p| (p.0 - xbar) * (p.1 - ybar))
        .sum::<f64>()
        / points.iter().map(|p| (p.0 - xbar).powi(2)).sum::<f64>();
    assert!(slope <= 0.0, "fair-dpp slope over n_train is {slope:+.3e}");
    for s in &report.settings {
        assert_eq!(
            s.fair.count + s.condition_failures + s.calibration_infeasible,
            24,
            "n_train = {:?}: replications unaccounted for",
            s.sweep_value
        );
    }

    let group_report = run_synthetic(&group_prob_sweep_preset(10, 20240615)).unwrap();
    let mut failures = 0usize;
    for s in &group_report.settings {
        assert_eq!(
            s.fair.count + s.condition_failures + s.calibration_infeasible,
            10,
            "p_a0 = {:?}: replications unaccounted for",
            s.sweep_value
        );
        failures += s.condition_failures + s.calibration_infeasible;
    }
    println!(
        "[criterion 5] PASS: dpp slope over n_train {slope:+.3e} <= 0; sweep dpp means {:?}; \
         group sweep reported {failures} non-calibrated replications across {} settings",
        points
            .iter()
            .map(|p| (p.1 * 1e4).round() / 1e4)
            .collect::<Vec<_>>(),
        group_report.settings.len()
    );
}

/// Criterion 6: the CSV pipeline on model-generated data removes disparity
/// relative to the unconstrained baseline, with a significant paired test.
#[test]
fn criterion_6_tabular_pipeline_on_generated_csv() {
    let spec = GaussianModelSpec::binary(0.3, 0.2, 0.6, 2.0).unwrap();
    let ds = gaussian::sample(&spec, 20_000, 606).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("synthetic.csv");
    {
        let mut f = std::fs::File::create(&csv_path).unwrap();
        writeln!(f, "x1,x2,group,label").unwrap();
        for i in 0..ds.len() {
            let row = ds.row(i);
            writeln!(
                f,
                "{},{},{},{}",
                row[0],
                row[1],
                ds.groups()[i],
                ds.labels()[i]
            )
            .unwrap();
        }
    }
    let cfg = TabularConfig {
        label: "synthetic-csv".into(),
        csv_path,
        schema: CsvSchema {
            group_column: "group".into(),
            label_column: "label".into(),
            numeric_features: vec!["x1".into(), "x2".into()],
            categorical_features: vec![],
        },
        split: bootstrap_split(0),
        train: fairppv::score_model::TrainConfig {
            learning_rate: 0.2,
            epochs: 25,
            batch_size: 256,
            seed: 0,
            l2: 0.0,
        },
        calibration: CalibrationConfig::default(),
        estimator: fairppv::experiment::Estimator::Pooled,
        replications: 30,
        seed: 20240616,
    };
    let report = run_tabular(&cfg).unwrap();
    let s = &report.settings[0];
    assert!(
        s.fair.count + s.condition_failures + s.calibration_infeasible == 30,
        "accounting must cover all replications"
    );
    assert!(
        s.fair.mean_dpp < s.baseline.mean_dpp,
        "fair dpp {} not below baseline {}",
        s.fair.mean_dpp,
        s.baseline.mean_dpp
    );
    let t = s
        .t_test
        .expect("paired test requires at least 2 paired replications");
    assert!(t.p_value < 0.05, "one-sided p-value {}", t.p_value);
    println!(
        "[criterion 6] PASS: fair dpp {:.4} < baseline {:.4}; paired t = {:.2}, \
         p = {:.2e} over {} pairs ({} condition failures)",
        s.fair.mean_dpp, s.baseline.mean_dpp, t.t_stat, t.p_value, t.pairs, s.condition_failures
    );
}

/// The empirical condition check on oracle-scored reference data tracks the
/// population constant.
#[test]
fn empirical_condition_tracks_population_constant() {
    let spec = GaussianModelSpec::binary(0.3, 0.2, 0.6, 2.0).unwrap();
    let ds = gaussian::sample(&spec, 50_000, 3).unwrap();
    let scores = gaussian::eta_scores(&spec, &ds).unwrap();
    let views = group_views(&ds, &scores).unwrap();
    let check = fairppv::calibration::check_condition(&views, &CalibrationConfig::default());
    assert!((check.lhs - 0.613).abs() < 0.05, "lhs {}", check.lhs);
    assert!(check.holds, "check: {check:?}");
}
