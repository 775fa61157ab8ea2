//! End-to-end verification suite: one check per headline property of the
//! toolkit, each reporting a pass/fail verdict with its measured margin.
//! Shared by the `verify` CLI subcommand and the acceptance tests.

use crate::config::RunConfig;
use crate::curves::{
    brier_curve, brier_curve_step_exact, curve_area, curve_bounds_check, exact_curve,
    prior_shift_transform, refinement_bounds, uniform_grid,
};
use crate::error::{Error, Result};
use crate::metrics::{brier_score, decompose, refinement_plugin, Prediction};
use crate::model::{GaussianBinaryModel, InformationScope, PopulationSample};
use crate::probing::{combine_two, crossing_point, probing_bound, ClassifierFamily, Crossing};
use crate::sufficiency::{
    comonotonicity_check, counterexample_harness, curve_dominance, threshold_sufficiency_check,
    Relation,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Wall-clock seconds spent on this check.
    pub seconds: f64,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
            seconds: 0.0,
        }
    }
}

fn preds_for(
    sample: &PopulationSample,
    z_scope: InformationScope,
    group_scope: InformationScope,
) -> Vec<Prediction> {
    let z = sample.psis(z_scope);
    let psi = sample.psis(InformationScope::Full);
    let g = sample.psis(group_scope);
    (0..sample.len())
        .map(|i| Prediction::with_oracle(z[i], sample.labels[i], psi[i], g[i]))
        .collect()
}

/// The four probabilistic classifiers whose decompositions and curves the
/// reports revolve around.
const REPORT_SCOPES: [InformationScope; 4] = [
    InformationScope::Full,
    InformationScope::NaiveBayes,
    InformationScope::NaiveBayesCalibrated,
    InformationScope::Component1,
];

/// Run the full verification suite at the scale given by `cfg`.
/// `perturb_psi` additively corrupts the oracle posterior column first
/// (fault injection; 0.0 leaves it untouched).
pub fn run_checks(cfg: &RunConfig, perturb_psi: f64) -> Result<Vec<CheckResult>> {
    cfg.validate()?;
    let model = cfg.model()?;
    let tol = cfg.tolerance;
    let sample_start = std::time::Instant::now();
    let mut sample = model.sample(cfg.n, cfg.seed)?;
    let sample_seconds = sample_start.elapsed().as_secs_f64();
    if perturb_psi != 0.0 {
        sample.shift_posteriors(InformationScope::Full, perturb_psi);
    }

    let mut results = Vec::new();
    let timed = |results: &mut Vec<CheckResult>, f: &mut dyn FnMut(&mut Vec<CheckResult>)| {
        let before = results.len();
        let start = std::time::Instant::now();
        f(results);
        let elapsed = start.elapsed().as_secs_f64();
        for r in &mut results[before..] {
            r.seconds = elapsed;
        }
    };
    let mut decomps = Vec::new();
    timed(&mut results, &mut |r| {
        decomps = check_decomposition_additivity(&model, &sample, tol, r);
    });
    // the simulation cost belongs to the first sampled check's budget
    results[0].seconds += sample_seconds;
    timed(&mut results, &mut |r| {
        check_area_identity(&sample, cfg.grid_points, r);
    });
    timed(&mut results, &mut |r| check_constant_closed_forms(r));
    timed(&mut results, &mut |r| check_curve_max_location(&model, r));
    timed(&mut results, &mut |r| check_cohen_bounds(&model, &sample, r));
    timed(&mut results, &mut |r| check_prior_shift_round_trip(&model, r));
    timed(&mut results, &mut |r| check_probing_bound(&model, tol, r));
    timed(&mut results, &mut |r| {
        check_combination(&model, cfg.seed, tol, r);
    });
    timed(&mut results, &mut |r| {
        check_dominance_without_sufficiency(tol, r);
    });
    timed(&mut results, &mut |r| check_correlation_bounds(&sample, r));
    timed(&mut results, &mut |r| {
        check_comonotone_certification(&model, cfg.seed, r);
    });
    timed(&mut results, &mut |r| {
        check_ordering_and_areas(&model, &sample, &decomps, r);
    });
    Ok(results)
}

fn check_decomposition_additivity(
    model: &GaussianBinaryModel,
    sample: &PopulationSample,
    tol: f64,
    out: &mut Vec<CheckResult>,
) -> Vec<(InformationScope, crate::metrics::BrierDecomposition)> {
    let _ = model;
    let decomps: Vec<_> = REPORT_SCOPES
        .iter()
        .map(|&scope| {
            let preds = preds_for(sample, scope, scope);
            (scope, decompose(&preds).expect("oracle columns present"))
        })
        .collect();
    let worst = decomps
        .iter()
        .map(|(_, d)| d.residual().abs())
        .fold(0.0f64, f64::max);
    out.push(CheckResult::new(
        "decomposition-additivity",
        worst <= tol,
        format!("max |total - sum| = {worst:.3e} (tolerance {tol:.1e})"),
    ));
    decomps
}

fn check_area_identity(sample: &PopulationSample, grid_points: usize, out: &mut Vec<CheckResult>) {
    let preds = preds_for(sample, InformationScope::Full, InformationScope::Full);
    let bs = brier_score(&preds).unwrap();
    let exact_gap =
        (2.0 * curve_area(&brier_curve_step_exact(&preds, 11).unwrap()) - bs).abs();
    let plain_gap = (2.0
        * curve_area(&brier_curve(&preds, &uniform_grid(grid_points.max(3))).unwrap())
        - bs)
        .abs();
    out.push(CheckResult::new(
        "brier-curve-area-identity",
        exact_gap <= 1e-9 && plain_gap <= 1e-4,
        format!("step-exact gap {exact_gap:.3e} (<=1e-9), uniform-grid gap {plain_gap:.3e} (<=1e-4)"),
    ));
}

fn check_constant_closed_forms(out: &mut Vec<CheckResult>) {
    // small 10%-positive set: summation round-off stays below the 1e-15 bar
    let preds: Vec<Prediction> = (0..20)
        .map(|i| Prediction::new(0.1, u8::from(i < 2)))
        .collect();
    let bs_gap = (brier_score(&preds).unwrap() - 0.09).abs();
    let curve = brier_curve(&preds, &uniform_grid(1001)).unwrap();
    let curve_gap = curve
        .grid
        .iter()
        .zip(&curve.values)
        .map(|(&t, &v)| (v - (0.9 * t).min(0.1 * (1.0 - t))).abs())
        .fold(0.0f64, f64::max);
    out.push(CheckResult::new(
        "constant-predictor-closed-forms",
        bs_gap <= 1e-15 && curve_gap <= 1e-15,
        format!("|BS - 0.09| = {bs_gap:.1e}, max tent deviation {curve_gap:.1e} (<=1e-15)"),
    ));
}

fn check_curve_max_location(model: &GaussianBinaryModel, out: &mut Vec<CheckResult>) {
    let grid = uniform_grid(9999);
    let curve = exact_curve(model, InformationScope::Full, &grid).unwrap();
    let i_max = curve
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let q = model
        .posterior_quantile(InformationScope::Full, 1.0 - model.prior())
        .unwrap();
    let gap = (grid[i_max] - q).abs();
    let step = 1.0 / 9998.0;
    out.push(CheckResult::new(
        "curve-maximum-at-quantile",
        gap <= step,
        format!("argmax {:.6} vs quantile {q:.6}, gap {gap:.2e} (<= grid step {step:.2e})", grid[i_max]),
    ));
}

fn check_cohen_bounds(
    model: &GaussianBinaryModel,
    sample: &PopulationSample,
    out: &mut Vec<CheckResult>,
) {
    let grid = uniform_grid(999);
    let mut worst_exact = f64::INFINITY;
    for scope in [
        InformationScope::Full,
        InformationScope::Component1,
        InformationScope::Component2,
        InformationScope::NaiveBayesCalibrated,
        InformationScope::Prior,
    ] {
        let curve = exact_curve(model, scope, &grid).unwrap();
        let report = curve_bounds_check(&curve, model.refinement_exact(scope));
        worst_exact = worst_exact.min(report.lower_margin.min(report.upper_margin));
    }
    let preds = preds_for(sample, InformationScope::Full, InformationScope::Full);
    let emp_curve = brier_curve(&preds, &grid).unwrap();
    let emp_ref = refinement_plugin(sample.psis(InformationScope::Full)).unwrap();
    let emp_report = curve_bounds_check(&emp_curve, emp_ref);
    let mc_tol = 3.0 * 0.5 / (sample.len() as f64).sqrt();
    let worst_emp = emp_report.lower_margin.min(emp_report.upper_margin);
    out.push(CheckResult::new(
        "cohen-style-bounds",
        worst_exact >= -1e-9 && worst_emp >= -mc_tol,
        format!("worst exact margin {worst_exact:.2e} (>=-1e-9), worst sampled margin {worst_emp:.2e} (>=-{mc_tol:.1e})"),
    ));
}

fn check_prior_shift_round_trip(model: &GaussianBinaryModel, out: &mut Vec<CheckResult>) {
    let curve = exact_curve(model, InformationScope::Full, &uniform_grid(2001)).unwrap();
    let back =
        prior_shift_transform(&prior_shift_transform(&curve, 0.5).unwrap(), model.prior())
            .unwrap();
    let sup = curve
        .values
        .iter()
        .zip(&back.values)
        .map(|(a, b)| (a - b).abs())
        .chain(curve.grid.iter().zip(&back.grid).map(|(a, b)| (a - b).abs()))
        .fold(0.0f64, f64::max);
    out.push(CheckResult::new(
        "prior-shift-round-trip",
        sup <= 1e-12,
        format!("sup-norm round-trip error {sup:.2e} (<=1e-12)"),
    ));
}

fn check_probing_bound(model: &GaussianBinaryModel, tol: f64, out: &mut Vec<CheckResult>) {
    const TRIALS: u64 = 100;
    const PROBE_N: usize = 100_000;
    const PROBE_GRID: usize = 99;
    let sample = model.sample(PROBE_N, 9001).unwrap();
    let psis = sample.psis(InformationScope::Full).to_vec();
    let base = ClassifierFamily::from_threshold_scores(&psis, PROBE_GRID).unwrap();

    let bayes_report = probing_bound(&base, &psis).unwrap();
    let bayes_ok = bayes_report.calibration_loss_lhs <= 1e-3;

    let trial_results: Vec<(f64, f64)> = (0..TRIALS)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha12Rng::seed_from_u64(7000 + trial);
            let decisions: Vec<Vec<u8>> = base
                .decisions()
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&b| if rng.gen::<f64>() < 0.05 { 1 - b } else { b })
                        .collect()
                })
                .collect();
            let family = ClassifierFamily::new(base.grid().to_vec(), decisions).unwrap();
            let r = probing_bound(&family, &psis).unwrap();
            (
                (r.calibration_loss_lhs - r.combined_regret).abs(),
                r.combined_regret - r.regret_integral_rhs,
            )
        })
        .collect();
    let worst_eq = trial_results.iter().map(|r| r.0).fold(0.0f64, f64::max);
    let worst_ineq = trial_results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    out.push(CheckResult::new(
        "probing-regret-bound",
        bayes_ok && worst_eq <= tol.max(1e-3) && worst_ineq <= 1e-9,
        format!(
            "bayes-family lhs {:.2e} (<=1e-3); over {TRIALS} trials: worst |lhs-combined| {worst_eq:.2e}, worst combined-rhs {worst_ineq:.2e} (<=0)",
            bayes_report.calibration_loss_lhs
        ),
    ));
}

fn check_combination(
    model: &GaussianBinaryModel,
    seed: u64,
    tol: f64,
    out: &mut Vec<CheckResult>,
) {
    let sample = model.sample(200_000, seed.wrapping_add(17)).unwrap();
    let nb = sample.psis(InformationScope::NaiveBayes);
    let c1 = sample.psis(InformationScope::Component1);
    let preds = |zs: &[f64]| -> Vec<Prediction> {
        zs.iter()
            .zip(&sample.labels)
            .map(|(&z, &l)| Prediction::new(z, l))
            .collect()
    };
    let grid = uniform_grid(1001);
    let curve_nb = brier_curve(&preds(nb), &grid).unwrap();
    let curve_c1 = brier_curve(&preds(c1), &grid).unwrap();
    let combined: Vec<f64> = match crossing_point(&curve_nb, &curve_c1).unwrap() {
        Crossing::At { t, .. } => combine_two(nb, c1, t).unwrap(),
        Crossing::NoCrossing(crate::probing::Dominant::Second) => c1.to_vec(),
        Crossing::NoCrossing(_) => nb.to_vec(),
    };
    let bs_combined = brier_score(&preds(&combined)).unwrap();
    let bs_min = brier_score(&preds(nb))
        .unwrap()
        .min(brier_score(&preds(c1)).unwrap());
    let margin = bs_combined - bs_min;
    out.push(CheckResult::new(
        "two-estimator-combination",
        margin <= tol.max(1e-3),
        format!("BS(combined) - min parent BS = {margin:.3e} (<= {:.1e})", tol.max(1e-3)),
    ));
}

fn check_dominance_without_sufficiency(tol: f64, out: &mut Vec<CheckResult>) {
    let report = counterexample_harness(&GaussianBinaryModel::independence(), 999, 1e-9).unwrap();
    let dominated = report.x2_vs_x1.relation == Relation::DominatedBy
        || report.x2_vs_x1.relation == Relation::Equal;
    let informative = report.x1_vs_prior.max_gap > 10.0 * tol;
    out.push(CheckResult::new(
        "dominance-without-sufficiency",
        dominated && report.x2_vs_x1.relation == Relation::DominatedBy && informative,
        format!(
            "X2 vs X1: {} (max gap {:.3e}); X1 vs prior max gap {:.3e} (> {:.1e})",
            report.x2_vs_x1.relation.label(),
            report.x2_vs_x1.max_gap,
            report.x1_vs_prior.max_gap,
            10.0 * tol
        ),
    ));
}

fn check_correlation_bounds(sample: &PopulationSample, out: &mut Vec<CheckResult>) {
    let psis = sample.psis(InformationScope::Full);
    let bounds = refinement_bounds(psis, &sample.labels).unwrap();
    let refinement = refinement_plugin(psis).unwrap();
    let mc_tol = 3.0 * 0.5 / (sample.len() as f64).sqrt();
    let lower_ok = bounds.lower <= refinement + mc_tol;
    let upper_ok = refinement <= bounds.upper + mc_tol;
    let degenerate = refinement_bounds(&vec![0.3; sample.len()], &sample.labels);
    let degenerate_ok = matches!(degenerate, Err(Error::Precondition(_)));
    out.push(CheckResult::new(
        "refinement-correlation-bounds",
        lower_ok && upper_ok && degenerate_ok,
        format!(
            "{:.5} <= {refinement:.5} <= {:.5} (slack {mc_tol:.1e}); constant-psi rejected: {degenerate_ok}",
            bounds.lower, bounds.upper
        ),
    ));
}

fn check_comonotone_certification(
    model: &GaussianBinaryModel,
    seed: u64,
    out: &mut Vec<CheckResult>,
) {
    let sample = model.sample(200_000, seed.wrapping_add(29)).unwrap();
    let psis = sample.psis(InformationScope::Full);
    let tol = 3.0 * 0.5 / (sample.len() as f64).sqrt();
    let grid = uniform_grid(41);
    let oracle = |t: f64| model.bayes_loss_exact(InformationScope::Full, t).unwrap();
    let transforms: [(&str, fn(f64) -> f64); 5] = [
        ("identity", |x| x),
        ("affine", |x| 2.0 * x - 0.3),
        ("cubic", |x| x * x * x),
        ("exp", f64::exp),
        ("atan", |x| (5.0 * x).atan()),
    ];
    let mut all_ok = true;
    let mut worst_excess = f64::NEG_INFINITY;
    for (name, f) in transforms {
        let s: Vec<f64> = psis.iter().map(|&x| f(x)).collect();
        let (mono, tau) = comonotonicity_check(&s, psis).unwrap();
        let fit = threshold_sufficiency_check(&s, &sample.labels, oracle, &grid, tol).unwrap();
        worst_excess = worst_excess.max(fit.max_excess);
        if !(mono && (tau - 1.0).abs() < 1e-12 && fit.sufficient) {
            all_ok = false;
        }
        let _ = name;
    }
    // the weaker component must NOT certify: strict curve dominance instead
    let grid_fine = uniform_grid(999);
    let full = exact_curve(model, InformationScope::Full, &grid_fine).unwrap();
    let c1 = exact_curve(model, InformationScope::Component1, &grid_fine).unwrap();
    let verdict = curve_dominance(&c1, &full, 1e-9).unwrap();
    let strict = verdict.relation == Relation::DominatedBy && verdict.max_gap > 1e-6;
    out.push(CheckResult::new(
        "comonotone-score-certification",
        all_ok && strict,
        format!(
            "5 increasing transforms certified (worst loss excess {worst_excess:.2e} <= {tol:.1e}); component-1 verdict {} with gap {:.3e}",
            verdict.relation.label(),
            verdict.max_gap
        ),
    ));
}

fn check_ordering_and_areas(
    model: &GaussianBinaryModel,
    sample: &PopulationSample,
    decomps: &[(InformationScope, crate::metrics::BrierDecomposition)],
    out: &mut Vec<CheckResult>,
) {
    let grid = uniform_grid(999);
    let full = exact_curve(model, InformationScope::Full, &grid).unwrap();
    let nb = exact_curve(model, InformationScope::NaiveBayes, &grid).unwrap();
    let nbcal = exact_curve(model, InformationScope::NaiveBayesCalibrated, &grid).unwrap();
    let c1 = exact_curve(model, InformationScope::Component1, &grid).unwrap();
    let mut ordering_ok = true;
    for i in 0..grid.len() {
        if full.values[i] > nbcal.values[i] + 1e-12
            || nbcal.values[i] > nb.values[i] + 1e-12
            || full.values[i] > c1.values[i] + 1e-12
        {
            ordering_ok = false;
        }
    }

    // doubled area gaps between curves recover the decomposition components
    let area_of = |scope: InformationScope| {
        let preds = preds_for(sample, scope, scope);
        curve_area(&brier_curve_step_exact(&preds, 11).unwrap())
    };
    let (a_full, a_nb, a_nbcal) = (
        area_of(InformationScope::Full),
        area_of(InformationScope::NaiveBayes),
        area_of(InformationScope::NaiveBayesCalibrated),
    );
    let d_nb = decomps
        .iter()
        .find(|(s, _)| *s == InformationScope::NaiveBayes)
        .map(|(_, d)| *d)
        .unwrap();
    let gap_cal = (2.0 * (a_nb - a_nbcal) - d_nb.groupwise_calibration).abs();
    let gap_grouping = (2.0 * (a_nbcal - a_full) - d_nb.grouping).abs();
    let areas_ok = gap_cal <= 2e-3 && gap_grouping <= 2e-3;
    out.push(CheckResult::new(
        "curve-ordering-and-component-areas",
        ordering_ok && areas_ok,
        format!(
            "exact ordering holds: {ordering_ok}; area-vs-component gaps {gap_cal:.3e} / {gap_grouping:.3e} (<=2e-3)"
        ),
    ));
}

/// Render the results as an aligned text table.
pub fn format_table(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{:<width$}  {}  [{:6.2}s]  {}\n",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.detail,
        ));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    out.push_str(&format!(
        "{} checks, {} passed, {} failed\n",
        results.len(),
        results.len() - failed,
        failed
    ));
    out
}
