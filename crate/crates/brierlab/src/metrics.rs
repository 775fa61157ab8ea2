//! Brier score and its decomposition into refinement, grouping and
//! group-wise calibration losses, with a pool-adjacent-violators estimator of
//! the group-conditional probability P[A | sigma(S)].

use crate::error::{Error, Result};
use crate::num::variance;

/// One scored instance: classifier output `z`, outcome `label`, and (when a
/// population oracle exists) the true posterior `oracle_psi` and the scoring
/// classifier value `group_score` that generates the coarse sigma-field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub z: f64,
    pub label: u8,
    pub oracle_psi: Option<f64>,
    pub group_score: Option<f64>,
}

impl Prediction {
    pub fn new(z: f64, label: u8) -> Self {
        Self {
            z,
            label,
            oracle_psi: None,
            group_score: None,
        }
    }

    pub fn with_oracle(z: f64, label: u8, oracle_psi: f64, group_score: f64) -> Self {
        Self {
            z,
            label,
            oracle_psi: Some(oracle_psi),
            group_score: Some(group_score),
        }
    }
}

/// Additive split of a Brier score: total = refinement + grouping +
/// group-wise calibration, up to estimation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrierDecomposition {
    pub refinement: f64,
    pub grouping: f64,
    pub groupwise_calibration: f64,
    pub total: f64,
}

impl BrierDecomposition {
    /// Signed additivity residual total - (sum of components).
    pub fn residual(&self) -> f64 {
        self.total - (self.refinement + self.grouping + self.groupwise_calibration)
    }
}

/// Monotone step function fitted by isotonic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicFit {
    /// Distinct score knots, strictly increasing.
    pub breakpoints: Vec<f64>,
    /// Fitted probabilities, nondecreasing, one per knot.
    pub levels: Vec<f64>,
}

impl IsotonicFit {
    /// Step-function evaluation: level of the largest knot <= score, with
    /// left-constant / right-constant extrapolation.
    pub fn predict(&self, score: f64) -> f64 {
        match self
            .breakpoints
            .partition_point(|&b| b <= score)
            .checked_sub(1)
        {
            None => self.levels[0],
            Some(i) => self.levels[i],
        }
    }
}

/// Sampling tolerance declared for n-instance estimates.
pub fn estimation_tolerance(n: usize) -> f64 {
    (5.0 / (n as f64).sqrt()).max(1e-3)
}

/// Mean squared error between predictions and outcome indicators.
pub fn brier_score(preds: &[Prediction]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Domain("brier_score requires nonempty input".into()));
    }
    Ok(preds
        .iter()
        .map(|p| {
            let d = f64::from(p.label) - p.z;
            d * d
        })
        .sum::<f64>()
        / preds.len() as f64)
}

/// Refinement loss as uncertainty minus resolution: prior(1-prior) - var(psi).
/// Identical to mean(psi(1-psi)) whenever `prior` equals the sample mean of
/// `psis`.
pub fn refinement_alt(psis: &[f64], prior: f64) -> Result<f64> {
    if psis.is_empty() {
        return Err(Error::Domain("refinement_alt requires nonempty input".into()));
    }
    if !(prior > 0.0 && prior < 1.0) {
        return Err(Error::Domain(format!("prior must lie in (0,1), got {prior}")));
    }
    Ok(prior * (1.0 - prior) - variance(psis))
}

/// Plug-in refinement loss mean(psi(1-psi)).
pub fn refinement_plugin(psis: &[f64]) -> Result<f64> {
    if psis.is_empty() {
        return Err(Error::Domain("refinement_plugin requires nonempty input".into()));
    }
    Ok(psis.iter().map(|&psi| psi * (1.0 - psi)).sum::<f64>() / psis.len() as f64)
}

/// Least-squares nondecreasing fit of labels on scores (pool adjacent
/// violators). Tied scores are pre-pooled so the result is
/// permutation-invariant.
pub fn calibrate_isotonic(scores: &[f64], labels: &[u8]) -> Result<IsotonicFit> {
    if scores.len() != labels.len() {
        return Err(Error::Domain(format!(
            "scores ({}) and labels ({}) must have equal length",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::Domain("calibrate_isotonic requires nonempty input".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Pre-pool ties: one (score, label-sum, count) cell per distinct score.
    let mut knots: Vec<f64> = Vec::new();
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (sum, weight)
    for &i in &order {
        if knots.last() == Some(&scores[i]) {
            let cell = cells.last_mut().unwrap();
            cell.0 += f64::from(labels[i]);
            cell.1 += 1.0;
        } else {
            knots.push(scores[i]);
            cells.push((f64::from(labels[i]), 1.0));
        }
    }

    // PAV: merge adjacent blocks while their means decrease.
    // blocks: (sum, weight, number of cells covered)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(cells.len());
    for (s, w) in cells {
        blocks.push((s, w, 1));
        while blocks.len() >= 2 {
            let b = blocks[blocks.len() - 1];
            let a = blocks[blocks.len() - 2];
            if a.0 * b.1 <= b.0 * a.1 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().unwrap();
            last.0 += b.0;
            last.1 += b.1;
            last.2 += b.2;
        }
    }

    let mut levels = Vec::with_capacity(knots.len());
    for (s, w, span) in blocks {
        let level = s / w;
        levels.extend(std::iter::repeat(level).take(span));
    }
    Ok(IsotonicFit {
        breakpoints: knots,
        levels,
    })
}

fn oracle_columns(preds: &[Prediction]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut psis = Vec::with_capacity(preds.len());
    let mut scores = Vec::with_capacity(preds.len());
    for (i, p) in preds.iter().enumerate() {
        let (Some(psi), Some(s)) = (p.oracle_psi, p.group_score) else {
            return Err(Error::Domain(format!(
                "instance {i} is missing oracle_psi or group_score"
            )));
        };
        psis.push(psi);
        scores.push(s);
    }
    Ok((psis, scores))
}

/// Estimate the three-way Brier decomposition. The group-conditional
/// probability is estimated by isotonic regression of labels on group_score;
/// refinement uses the oracle posterior.
pub fn decompose(preds: &[Prediction]) -> Result<BrierDecomposition> {
    if preds.is_empty() {
        return Err(Error::Domain("decompose requires nonempty input".into()));
    }
    let (psis, scores) = oracle_columns(preds)?;
    let labels: Vec<u8> = preds.iter().map(|p| p.label).collect();
    let fit = calibrate_isotonic(&scores, &labels)?;
    let n = preds.len() as f64;
    let mut refinement = 0.0;
    let mut grouping = 0.0;
    let mut groupwise = 0.0;
    for (p, &psi) in preds.iter().zip(&psis) {
        let psi_g = fit.predict(p.group_score.unwrap());
        refinement += psi * (1.0 - psi);
        grouping += (psi - psi_g) * (psi - psi_g);
        groupwise += (psi_g - p.z) * (psi_g - p.z);
    }
    Ok(BrierDecomposition {
        refinement: refinement / n,
        grouping: grouping / n,
        groupwise_calibration: groupwise / n,
        total: brier_score(preds)?,
    })
}

/// Grouping loss as a mean conditional variance: partition instances into
/// `bins` equal-frequency bins of group_score and average the within-bin
/// variance of the oracle posterior.
pub fn grouping_condvar(preds: &[Prediction], bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
    }
    if preds.is_empty() {
        return Err(Error::Domain("grouping_condvar requires nonempty input".into()));
    }
    let (psis, scores) = oracle_columns(preds)?;
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n = preds.len();
    let mut acc = 0.0;
    for b in 0..bins {
        let lo = b * n / bins;
        let hi = (b + 1) * n / bins;
        if hi <= lo {
            continue;
        }
        let bin_psis: Vec<f64> = order[lo..hi].iter().map(|&i| psis[i]).collect();
        acc += bin_psis.len() as f64 * variance(&bin_psis);
    }
    Ok(acc / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GaussianBinaryModel, InformationScope};
    use crate::num::mean;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn oracle_preds(
        m: &GaussianBinaryModel,
        n: usize,
        seed: u64,
        z_scope: InformationScope,
        group_scope: InformationScope,
    ) -> Vec<Prediction> {
        let s = m.sample(n, seed).unwrap();
        (0..n)
            .map(|i| {
                Prediction::with_oracle(
                    s.psis(z_scope)[i],
                    s.labels[i],
                    s.psis(InformationScope::Full)[i],
                    s.psis(group_scope)[i],
                )
            })
            .collect()
    }

    #[test]
    fn brier_score_trivial_cases() {
        let perfect: Vec<Prediction> = (0..10)
            .map(|i| Prediction::new(f64::from(u8::from(i % 3 == 0)), u8::from(i % 3 == 0)))
            .collect();
        assert_eq!(brier_score(&perfect).unwrap(), 0.0);

        // constant 0.1 on a set with exactly 10% positives
        let preds: Vec<Prediction> = (0..100)
            .map(|i| Prediction::new(0.1, u8::from(i < 10)))
            .collect();
        assert!((brier_score(&preds).unwrap() - 0.09).abs() < 1e-15);

        assert!(brier_score(&[]).is_err());
    }

    #[test]
    fn brier_score_of_full_posterior_matches_refinement() {
        let m = GaussianBinaryModel::canonical();
        let s = m.sample(1_000_000, 11).unwrap();
        let preds: Vec<Prediction> = s
            .psis(InformationScope::Full)
            .iter()
            .zip(&s.labels)
            .map(|(&z, &l)| Prediction::new(z, l))
            .collect();
        let bs = brier_score(&preds).unwrap();
        let exact = m.refinement_exact(InformationScope::Full);
        // MC standard error of the per-instance squared errors
        let sq: Vec<f64> = preds
            .iter()
            .map(|p| {
                let d = f64::from(p.label) - p.z;
                d * d
            })
            .collect();
        let se = (variance(&sq) / sq.len() as f64).sqrt();
        assert!((bs - exact).abs() < 3.0 * se, "bs={bs} exact={exact} se={se}");
    }

    #[test]
    fn refinement_alt_trivial_and_identity() {
        let psis = vec![0.1; 50];
        assert!((refinement_alt(&psis, 0.1).unwrap() - 0.09).abs() < 1e-15);

        let separated: Vec<f64> = (0..100).map(|i| f64::from(u8::from(i < 10))).collect();
        assert!(refinement_alt(&separated, 0.1).unwrap().abs() < 1e-15);

        // algebraic identity once the prior is recentered to the sample mean
        let m = GaussianBinaryModel::canonical();
        let s = m.sample(20_000, 2).unwrap();
        let psis = s.psis(InformationScope::Full);
        let alt = refinement_alt(psis, mean(psis)).unwrap();
        let plugin = refinement_plugin(psis).unwrap();
        assert!((alt - plugin).abs() < 1e-12, "{alt} vs {plugin}");
    }

    /// Exhaustive oracle for three points: best monotone step fit over all
    /// consecutive-block poolings.
    fn pav3_oracle(labels: [f64; 3]) -> Vec<f64> {
        let partitions: [&[&[usize]]; 4] = [
            &[&[0], &[1], &[2]],
            &[&[0, 1], &[2]],
            &[&[0], &[1, 2]],
            &[&[0, 1, 2]],
        ];
        let mut best: Option<(f64, Vec<f64>)> = None;
        for part in partitions {
            let mut fit = vec![0.0; 3];
            let mut prev = f64::NEG_INFINITY;
            let mut monotone = true;
            for block in part {
                let m = block.iter().map(|&i| labels[i]).sum::<f64>() / block.len() as f64;
                if m < prev {
                    monotone = false;
                    break;
                }
                prev = m;
                for &i in *block {
                    fit[i] = m;
                }
            }
            if !monotone {
                continue;
            }
            let sse: f64 = (0..3).map(|i| (labels[i] - fit[i]).powi(2)).sum();
            if best.as_ref().is_none_or(|(b, _)| sse < *b) {
                best = Some((sse, fit));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn isotonic_matches_brute_force_on_three_points() {
        let fit = calibrate_isotonic(&[1.0, 2.0, 3.0], &[1, 0, 1]).unwrap();
        assert_eq!(fit.levels, pav3_oracle([1.0, 0.0, 1.0]));
        assert_eq!(fit.levels, vec![0.5, 0.5, 1.0]);
        // all eight label patterns against the oracle
        for bits in 0..8u8 {
            let labels = [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1];
            let fit = calibrate_isotonic(&[1.0, 2.0, 3.0], &labels).unwrap();
            let want = pav3_oracle(labels.map(f64::from));
            for (a, b) in fit.levels.iter().zip(&want) {
                assert!((a - b).abs() < 1e-15, "labels {labels:?}");
            }
        }
    }

    #[test]
    fn isotonic_trivial_cases() {
        // already monotone: reproduces per-score means exactly
        let fit = calibrate_isotonic(&[1.0, 1.0, 2.0, 3.0], &[0, 1, 1, 1]).unwrap();
        assert_eq!(fit.breakpoints, vec![1.0, 2.0, 3.0]);
        assert_eq!(fit.levels, vec![0.5, 1.0, 1.0]);

        let fit = calibrate_isotonic(&[3.0, 1.0, 2.0], &[0, 0, 0]).unwrap();
        assert_eq!(fit.levels, vec![0.0, 0.0, 0.0]);

        assert!(calibrate_isotonic(&[1.0], &[0, 1]).is_err());
        assert!(calibrate_isotonic(&[], &[]).is_err());
    }

    #[test]
    fn isotonic_is_calibrated_on_level_sets() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let scores: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        let labels: Vec<u8> = scores
            .iter()
            .map(|&s| u8::from(rng.gen::<f64>() < s))
            .collect();
        let fit = calibrate_isotonic(&scores, &labels).unwrap();
        // group instances by fitted level; mean label must equal the level
        let mut acc: std::collections::BTreeMap<u64, (f64, f64)> = Default::default();
        for (&s, &l) in scores.iter().zip(&labels) {
            let level = fit.predict(s);
            let e = acc.entry(level.to_bits()).or_insert((0.0, 0.0));
            e.0 += f64::from(l);
            e.1 += 1.0;
        }
        for (bits, (sum, count)) in acc {
            assert!((sum / count - f64::from_bits(bits)).abs() < 1e-12);
        }
    }

    #[test]
    fn isotonic_permutation_invariant() {
        let scores = [2.0, 1.0, 1.0, 3.0, 2.0];
        let labels = [1u8, 0, 1, 0, 0];
        let a = calibrate_isotonic(&scores, &labels).unwrap();
        let perm = [4usize, 2, 0, 3, 1];
        let b = calibrate_isotonic(
            &perm.map(|i| scores[i]),
            &perm.map(|i| labels[i]),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decompose_sufficient_group_has_no_grouping() {
        let m = GaussianBinaryModel::canonical();
        let n = 100_000;
        let preds = oracle_preds(&m, n, 21, InformationScope::Full, InformationScope::Full);
        let d = decompose(&preds).unwrap();
        let tol = estimation_tolerance(n);
        assert!(d.grouping <= tol, "{}", d.grouping);
        assert!(d.residual().abs() <= tol);
    }

    #[test]
    fn decompose_constant_group_recovers_variance() {
        let m = GaussianBinaryModel::canonical();
        let n = 100_000;
        let s = m.sample(n, 22).unwrap();
        let psis = s.psis(InformationScope::Full);
        let preds: Vec<Prediction> = (0..n)
            .map(|i| Prediction::with_oracle(psis[i], s.labels[i], psis[i], 0.0))
            .collect();
        let d = decompose(&preds).unwrap();
        assert!((d.grouping - variance(psis)).abs() <= estimation_tolerance(n));
    }

    #[test]
    fn decompose_grouping_matches_analytic_gap() {
        let m = GaussianBinaryModel::canonical();
        let n = 200_000;
        let preds = oracle_preds(
            &m,
            n,
            23,
            InformationScope::NaiveBayes,
            InformationScope::NaiveBayes,
        );
        let d = decompose(&preds).unwrap();
        let exact = m.posterior_sq_gap(
            InformationScope::Full,
            InformationScope::NaiveBayesCalibrated,
        );
        let tol = estimation_tolerance(n);
        assert!((d.grouping - exact).abs() <= tol, "{} vs {exact}", d.grouping);
        // Eq-(3)-style identity: refinement of the coarse posterior equals
        // refinement of the fine one plus the grouping loss.
        let labels: Vec<u8> = preds.iter().map(|p| p.label).collect();
        let scores: Vec<f64> = preds.iter().map(|p| p.group_score.unwrap()).collect();
        let fit = calibrate_isotonic(&scores, &labels).unwrap();
        let coarse: Vec<f64> = scores.iter().map(|&s| fit.predict(s)).collect();
        let lhs = refinement_plugin(&coarse).unwrap();
        let rhs = d.refinement + d.grouping;
        assert!((lhs - rhs).abs() <= 2.0 * tol, "{lhs} vs {rhs}");
    }

    #[test]
    fn decompose_requires_oracle_fields() {
        let preds = vec![Prediction::new(0.5, 1)];
        assert!(decompose(&preds).is_err());
    }

    #[test]
    fn oracle_posterior_is_brier_optimal() {
        let m = GaussianBinaryModel::canonical();
        let s = m.sample(200_000, 31).unwrap();
        let psis = s.psis(InformationScope::Full);
        let base: Vec<Prediction> = psis
            .iter()
            .zip(&s.labels)
            .map(|(&z, &l)| Prediction::new(z, l))
            .collect();
        let bs_opt = brier_score(&base).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(32);
        for _ in 0..5 {
            let eps: f64 = rng.gen_range(0.01..0.2);
            let perturbed: Vec<Prediction> = base
                .iter()
                .map(|p| {
                    let z = (p.z + eps * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0);
                    Prediction::new(z, p.label)
                })
                .collect();
            assert!(brier_score(&perturbed).unwrap() >= bs_opt - 1e-4);
        }
    }

    #[test]
    fn grouping_condvar_trivial_and_consistency() {
        let m = GaussianBinaryModel::canonical();
        let n = 100_000;

        // group_score = oracle_psi: conditional variance vanishes
        let preds = oracle_preds(&m, n, 41, InformationScope::Full, InformationScope::Full);
        assert!(grouping_condvar(&preds, 50).unwrap() <= estimation_tolerance(n));
        assert!(grouping_condvar(&preds, 1).is_err());

        // independent group_score: recovers the total variance
        let s = m.sample(n, 42).unwrap();
        let psis = s.psis(InformationScope::Full);
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let noise: Vec<Prediction> = (0..n)
            .map(|i| Prediction::with_oracle(psis[i], s.labels[i], psis[i], rng.gen()))
            .collect();
        let got = grouping_condvar(&noise, 50).unwrap();
        assert!((got - variance(psis)).abs() <= 2.0 * estimation_tolerance(n));

        // cross-estimator agreement on the naive-Bayes grouping loss
        let nb = oracle_preds(
            &m,
            n,
            44,
            InformationScope::NaiveBayes,
            InformationScope::NaiveBayes,
        );
        let binned = grouping_condvar(&nb, 50).unwrap();
        let via_pav = decompose(&nb).unwrap().grouping;
        assert!(
            (binned - via_pav).abs() <= 2.0 * estimation_tolerance(n),
            "{binned} vs {via_pav}"
        );
    }
}
