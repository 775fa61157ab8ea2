//! Probing reduction: build a probability estimator as the cost-weight
//! average Z = integral of h(t, .) dt over a family of cost-sensitive binary
//! classifiers, certify its calibration loss by the integrated-regret bound,
//! and combine two estimators whose Brier curves criss-cross.

use crate::curves::{curve_area, LossCurve};
use crate::error::{Error, Result};

/// A family of binary decisions indexed by cost weight t: one bit per
/// (instance, grid point), h(t, omega) in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierFamily {
    grid: Vec<f64>,
    /// decisions[i][j] = h(grid[j], instance i)
    decisions: Vec<Vec<u8>>,
}

impl ClassifierFamily {
    pub fn new(grid: Vec<f64>, decisions: Vec<Vec<u8>>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Domain("family grid must be nonempty".into()));
        }
        if grid[0] <= 0.0 || *grid.last().unwrap() >= 1.0 {
            return Err(Error::Domain("family grid must lie inside (0,1)".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("family grid must be strictly increasing".into()));
        }
        for (i, row) in decisions.iter().enumerate() {
            if row.len() != grid.len() {
                return Err(Error::Domain(format!(
                    "instance {i} has {} decisions for {} grid points",
                    row.len(),
                    grid.len()
                )));
            }
            if row.iter().any(|&b| b > 1) {
                return Err(Error::Domain(format!("instance {i} has a non-binary decision")));
            }
        }
        Ok(Self { grid, decisions })
    }

    /// Threshold family h(t, i) = 1{score_i > t} on a uniform interior grid.
    pub fn from_threshold_scores(scores: &[f64], grid_points: usize) -> Result<Self> {
        let grid = interior_grid(grid_points)?;
        let decisions = scores
            .iter()
            .map(|&s| grid.iter().map(|&t| u8::from(s > t)).collect())
            .collect();
        Self::new(grid, decisions)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn decisions(&self) -> &[Vec<u8>] {
        &self.decisions
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }
}

/// Uniform grid of `points` values strictly inside (0,1).
pub fn interior_grid(points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Domain("grid needs at least one point".into()));
    }
    Ok((1..=points)
        .map(|i| i as f64 / (points + 1) as f64)
        .collect())
}

/// Riemann cell widths for the family grid: each point owns the interval up
/// to the midpoints towards its neighbours, with the endpoint cells extended
/// to 0 and 1. Widths sum to 1.
pub fn cell_weights(grid: &[f64]) -> Vec<f64> {
    let k = grid.len();
    (0..k)
        .map(|j| {
            let lo = if j == 0 { 0.0 } else { 0.5 * (grid[j - 1] + grid[j]) };
            let hi = if j == k - 1 {
                1.0
            } else {
                0.5 * (grid[j] + grid[j + 1])
            };
            hi - lo
        })
        .collect()
}

/// The probing estimator: per instance, Z = integral of h(t, .) dt
/// approximated by the cell-weighted decision average.
pub fn probe_combine(family: &ClassifierFamily) -> Result<Vec<f64>> {
    if family.is_empty() {
        return Err(Error::Domain("family has no instances".into()));
    }
    let w = cell_weights(&family.grid);
    Ok(family
        .decisions
        .iter()
        .map(|row| {
            row.iter()
                .zip(&w)
                .map(|(&b, &wj)| f64::from(b) * wj)
                .sum::<f64>()
                .clamp(0.0, 1.0)
        })
        .collect())
}

/// The three certified quantities of the probing bound, all evaluated under
/// the empirical measure weighted by the oracle posteriors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbingReport {
    /// E[(Z - Psi)^2]
    pub calibration_loss_lhs: f64,
    /// 2 * integral of (L({Z > t}, t) - L*(t)) dt
    pub combined_regret: f64,
    /// 2 * integral of (L(H(t), t) - L*(t)) dt
    pub regret_integral_rhs: f64,
}

/// Evaluate the probing bound for a decision family against oracle
/// posteriors: the calibration loss of the probing estimator Z equals its own
/// curve regret and is bounded by the family's integrated regret. Losses use
/// the posterior-weighted empirical measure, so L*(t) is exactly
/// mean(min((1-t) psi, t (1-psi))) and no population oracle beyond `psis` is
/// needed.
pub fn probing_bound(family: &ClassifierFamily, psis: &[f64]) -> Result<ProbingReport> {
    if psis.len() != family.len() {
        return Err(Error::Domain(format!(
            "family has {} instances but {} posteriors given",
            family.len(),
            psis.len()
        )));
    }
    if psis.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::Domain("posteriors must lie in [0,1]".into()));
    }
    let z = probe_combine(family)?;
    let n = psis.len() as f64;

    let lhs = psis
        .iter()
        .zip(&z)
        .map(|(&psi, &zi)| (zi - psi) * (zi - psi))
        .sum::<f64>()
        / n;

    let w = cell_weights(&family.grid);
    let mut combined = 0.0;
    let mut family_regret = 0.0;
    for (j, (&t, &wj)) in family.grid.iter().zip(&w).enumerate() {
        let mut loss_z = 0.0;
        let mut loss_h = 0.0;
        let mut loss_star = 0.0;
        for (i, &psi) in psis.iter().enumerate() {
            let fn_cost = (1.0 - t) * psi;
            let fp_cost = t * (1.0 - psi);
            loss_z += if z[i] > t { fp_cost } else { fn_cost };
            loss_h += if family.decisions[i][j] == 1 {
                fp_cost
            } else {
                fn_cost
            };
            loss_star += fn_cost.min(fp_cost);
        }
        combined += wj * (loss_z - loss_star);
        family_regret += wj * (loss_h - loss_star);
    }
    Ok(ProbingReport {
        calibration_loss_lhs: lhs,
        combined_regret: 2.0 * combined / n,
        regret_integral_rhs: 2.0 * family_regret / n,
    })
}

/// Merge two probability estimators whose Brier curves cross at z, using Z1
/// below the crossing and Z2 above: Z = min(z, Z1) + (Z2 - z) 1{Z2 > z}.
pub fn combine_two(z1: &[f64], z2: &[f64], z: f64) -> Result<Vec<f64>> {
    if z1.len() != z2.len() {
        return Err(Error::Domain("estimator lengths differ".into()));
    }
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::Domain(format!("crossing point must lie in (0,1), got {z}")));
    }
    Ok(z1
        .iter()
        .zip(z2)
        .map(|(&a, &b)| {
            let v = z.min(a) + if b > z { b - z } else { 0.0 };
            v.clamp(0.0, 1.0)
        })
        .collect())
}

/// Which curve lies below when the two never cross.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominant {
    First,
    Second,
    Equal,
}

/// Outcome of searching two loss curves for a sign change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    /// Curves cross at t; `unique` is false when several sign changes exist
    /// (t then minimizes the area of the two-piece combination).
    At { t: f64, unique: bool },
    NoCrossing(Dominant),
}

/// Locate the t in (0,1) where curve1 - curve2 changes sign.
pub fn crossing_point(curve1: &LossCurve, curve2: &LossCurve) -> Result<Crossing> {
    if curve1.grid != curve2.grid {
        return Err(Error::Domain("curves must share a common grid".into()));
    }
    let diff: Vec<f64> = curve1
        .values
        .iter()
        .zip(&curve2.values)
        .map(|(a, b)| a - b)
        .collect();
    const EPS: f64 = 1e-12;
    let max_abs = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if max_abs <= EPS {
        return Ok(Crossing::NoCrossing(Dominant::Equal));
    }

    // candidate roots where the sign flips strictly
    let mut candidates = Vec::new();
    let mut last_signed: Option<(usize, f64)> = None;
    for (i, &d) in diff.iter().enumerate() {
        if d.abs() <= EPS {
            continue;
        }
        if let Some((j, prev)) = last_signed {
            if prev * d < 0.0 {
                // linear interpolation of the root between grid points j and i
                let (g0, g1) = (curve1.grid[j], curve1.grid[i]);
                let t = if g1 > g0 {
                    g0 + (g1 - g0) * prev.abs() / (prev.abs() + d.abs())
                } else {
                    g0
                };
                candidates.push(t.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON));
            }
        }
        last_signed = Some((i, d));
    }
    if candidates.is_empty() {
        let first_below = diff.iter().find(|d| d.abs() > EPS).unwrap() < &0.0;
        return Ok(Crossing::NoCrossing(if first_below {
            Dominant::First
        } else {
            Dominant::Second
        }));
    }
    if candidates.len() == 1 {
        return Ok(Crossing::At {
            t: candidates[0],
            unique: true,
        });
    }

    // several sign changes: pick the split minimizing the combined area
    let area_prefix = |curve: &LossCurve, tc: f64| -> f64 {
        let mut acc = 0.0;
        for i in 1..curve.grid.len() {
            let (g0, g1) = (curve.grid[i - 1], curve.grid[i]);
            if g0 >= tc {
                break;
            }
            let hi = g1.min(tc);
            let v1 = if g1 > g0 {
                curve.values[i - 1]
                    + (curve.values[i] - curve.values[i - 1]) * (hi - g0) / (g1 - g0)
            } else {
                curve.values[i]
            };
            acc += 0.5 * (curve.values[i - 1] + v1) * (hi - g0);
        }
        acc
    };
    let total1 = curve_area(curve1);
    let total2 = curve_area(curve2);
    let best = candidates
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let area = |tc: f64| {
                let split_12 = area_prefix(curve1, tc) + (total2 - area_prefix(curve2, tc));
                let split_21 = area_prefix(curve2, tc) + (total1 - area_prefix(curve1, tc));
                split_12.min(split_21)
            };
            area(a).total_cmp(&area(b))
        })
        .unwrap();
    Ok(Crossing::At {
        t: best,
        unique: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{brier_curve, uniform_grid};
    use crate::metrics::{brier_score, Prediction};
    use crate::model::{GaussianBinaryModel, InformationScope};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn cell_weights_partition_unity() {
        for points in [1, 2, 7, 99] {
            let grid = interior_grid(points).unwrap();
            let w = cell_weights(&grid);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14, "{points}");
            assert!(w.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn probe_combine_constant_families() {
        let grid = interior_grid(9).unwrap();
        let ones = ClassifierFamily::new(grid.clone(), vec![vec![1; 9]]).unwrap();
        assert_eq!(probe_combine(&ones).unwrap(), vec![1.0]);
        let zeros = ClassifierFamily::new(grid, vec![vec![0; 9]]).unwrap();
        assert_eq!(probe_combine(&zeros).unwrap(), vec![0.0]);
    }

    #[test]
    fn probe_combine_threshold_family_recovers_psi() {
        let psis = [0.03, 0.2, 0.5, 0.77, 0.99];
        let family = ClassifierFamily::from_threshold_scores(&psis, 999).unwrap();
        let z = probe_combine(&family).unwrap();
        for (&psi, &zi) in psis.iter().zip(&z) {
            assert!((zi - psi).abs() <= 1.5 / 1000.0, "{psi} vs {zi}");
        }
    }

    #[test]
    fn probe_combine_step_pattern() {
        // decisions on for t < 0.25 and for 0.5 < t < 0.75: integral 0.5
        for points in [199, 999, 3999] {
            let grid = interior_grid(points).unwrap();
            let row: Vec<u8> = grid
                .iter()
                .map(|&t| u8::from(t < 0.25 || (0.5 < t && t < 0.75)))
                .collect();
            let family = ClassifierFamily::new(grid, vec![row]).unwrap();
            let z = probe_combine(&family).unwrap()[0];
            assert!((z - 0.5).abs() <= 2.0 / points as f64, "{points}: {z}");
        }
    }

    #[test]
    fn family_validation() {
        assert!(ClassifierFamily::new(vec![], vec![]).is_err());
        assert!(ClassifierFamily::new(vec![0.0, 0.5], vec![vec![0, 0]]).is_err());
        assert!(ClassifierFamily::new(vec![0.5, 0.3], vec![vec![0, 0]]).is_err());
        assert!(ClassifierFamily::new(vec![0.3, 0.5], vec![vec![0, 2]]).is_err());
        assert!(ClassifierFamily::new(vec![0.3, 0.5], vec![vec![0]]).is_err());
    }

    #[test]
    fn probing_bound_bayes_family_is_tight() {
        let m = GaussianBinaryModel::canonical();
        let s = m.sample(20_000, 61).unwrap();
        let psis = s.psis(InformationScope::Full);
        let family = ClassifierFamily::from_threshold_scores(psis, 199).unwrap();
        let report = probing_bound(&family, psis).unwrap();
        // Z differs from psi by at most one grid cell
        assert!(report.calibration_loss_lhs < 1e-4, "{report:?}");
        assert!(report.regret_integral_rhs < 1e-3, "{report:?}");
        assert!(
            report.combined_regret <= report.regret_integral_rhs + 1e-9,
            "{report:?}"
        );
    }

    #[test]
    fn probing_bound_component_family_recovers_grouping_loss() {
        let m = GaussianBinaryModel::canonical();
        let s = m.sample(100_000, 62).unwrap();
        let full = s.psis(InformationScope::Full);
        let c1 = s.psis(InformationScope::Component1);
        let family = ClassifierFamily::from_threshold_scores(c1, 199).unwrap();
        let report = probing_bound(&family, full).unwrap();
        let exact_gap =
            m.posterior_sq_gap(InformationScope::Full, InformationScope::Component1);
        assert!(
            (report.calibration_loss_lhs - exact_gap).abs() < 2e-3,
            "{} vs {exact_gap}",
            report.calibration_loss_lhs
        );
        assert!((report.calibration_loss_lhs - report.combined_regret).abs() < 1e-3);
        assert!(report.combined_regret <= report.regret_integral_rhs + 1e-9);
    }

    #[test]
    fn probing_inequality_survives_random_perturbation() {
        let m = GaussianBinaryModel::canonical();
        let s = m.sample(5_000, 63).unwrap();
        let psis = s.psis(InformationScope::Full);
        let base = ClassifierFamily::from_threshold_scores(psis, 99).unwrap();
        for seed in 0..20u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(1000 + seed);
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
            let report = probing_bound(&family, psis).unwrap();
            assert!(
                (report.calibration_loss_lhs - report.combined_regret).abs() < 1e-3,
                "seed {seed}: {report:?}"
            );
            assert!(
                report.combined_regret <= report.regret_integral_rhs + 1e-9,
                "seed {seed}: {report:?}"
            );
        }
    }

    #[test]
    fn combine_two_formula_cases() {
        let a = [0.3, 0.6, 0.9];
        assert_eq!(combine_two(&a, &a, 0.5).unwrap(), a.to_vec());
        let z1 = [0.2; 4];
        let z2 = [0.8; 4];
        let out = combine_two(&z1, &z2, 0.5).unwrap();
        assert!(out.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert!(combine_two(&z1, &z2, 0.0).is_err());
        assert!(combine_two(&z1, &[0.8; 3], 0.5).is_err());
    }

    #[test]
    fn combine_two_matches_two_piece_probing_family() {
        // the combination formula equals the probing integral of the family
        // that uses Z1's thresholds below z and Z2's above
        let z1 = [0.1, 0.35, 0.6, 0.8];
        let z2 = [0.25, 0.3, 0.75, 0.95];
        let z = 0.5;
        let grid = interior_grid(1999).unwrap();
        let decisions: Vec<Vec<u8>> = z1
            .iter()
            .zip(&z2)
            .map(|(&a, &b)| {
                grid.iter()
                    .map(|&t| u8::from(if t <= z { a > t } else { b > t }))
                    .collect()
            })
            .collect();
        let family = ClassifierFamily::new(grid, decisions).unwrap();
        let integral = probe_combine(&family).unwrap();
        let formula = combine_two(&z1, &z2, z).unwrap();
        for (a, b) in integral.iter().zip(&formula) {
            assert!((a - b).abs() < 2.0 / 2000.0, "{a} vs {b}");
        }
    }

    #[test]
    fn combined_estimator_beats_both_parents() {
        // criss-crossing pair in the canonical model: naive Bayes posterior
        // vs the single-component posterior
        let m = GaussianBinaryModel::canonical();
        let s = m.sample(200_000, 64).unwrap();
        let grid = uniform_grid(1001);
        let preds = |zs: &[f64]| -> Vec<Prediction> {
            zs.iter()
                .zip(&s.labels)
                .map(|(&z, &l)| Prediction::new(z, l))
                .collect()
        };
        let nb = s.psis(InformationScope::NaiveBayes);
        let c1 = s.psis(InformationScope::Component1);
        let curve_nb = brier_curve(&preds(nb), &grid).unwrap();
        let curve_c1 = brier_curve(&preds(c1), &grid).unwrap();
        let Crossing::At { t: tc, .. } = crossing_point(&curve_nb, &curve_c1).unwrap() else {
            panic!("expected the naive-Bayes and component curves to cross")
        };
        let combined = combine_two(nb, c1, tc).unwrap();
        let bs_combined = brier_score(&preds(&combined)).unwrap();
        let bs_nb = brier_score(&preds(nb)).unwrap();
        let bs_c1 = brier_score(&preds(c1)).unwrap();
        assert!(
            bs_combined <= bs_nb.min(bs_c1) + 1e-3,
            "{bs_combined} vs min({bs_nb}, {bs_c1})"
        );
    }

    #[test]
    fn crossing_point_cases() {
        let grid = uniform_grid(1001);
        let tent = |p: f64| {
            let preds: Vec<Prediction> = (0..1000)
                .map(|i| Prediction::new(p, u8::from((i as f64) < 1000.0 * p)))
                .collect();
            brier_curve(&preds, &grid).unwrap()
        };
        let t1 = tent(0.1);
        let t3 = tent(0.3);
        assert_eq!(
            crossing_point(&t1, &t1).unwrap(),
            Crossing::NoCrossing(Dominant::Equal)
        );
        // analytic intersection of the two tents: 0.1(1-t) = 0.7t at t=0.125
        let Crossing::At { t, unique } = crossing_point(&t1, &t3).unwrap() else {
            panic!("tents at different priors must cross")
        };
        assert!(unique);
        assert!((t - 0.125).abs() < 1e-12, "{t}");

        // pointwise dominance: scaled-down copy of the same tent
        let mut smaller = t1.clone();
        for v in &mut smaller.values {
            *v *= 0.5;
        }
        assert_eq!(
            crossing_point(&smaller, &t1).unwrap(),
            Crossing::NoCrossing(Dominant::First)
        );
        assert_eq!(
            crossing_point(&t1, &smaller).unwrap(),
            Crossing::NoCrossing(Dominant::Second)
        );
    }
}
