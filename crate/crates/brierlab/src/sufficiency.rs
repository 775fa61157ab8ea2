//! Executable sufficiency diagnostics: strong comonotonicity of a score with
//! the posterior, equality/dominance of cost-weighted Bayes-loss curves,
//! per-cost-weight threshold recovery, and the independence-model harness
//! showing that curve dominance alone does not certify sufficiency.

use crate::curves::{exact_curve, uniform_grid, LossCurve};
use crate::error::{Error, Result};
use crate::model::{GaussianBinaryModel, InformationScope};

/// How curve `a` compares to curve `b` pointwise (lower loss is better).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    /// a is everywhere at or below b, strictly below somewhere.
    Dominates,
    /// a is everywhere at or above b, strictly above somewhere.
    DominatedBy,
    Crosses,
}

impl Relation {
    pub fn label(self) -> &'static str {
        match self {
            Relation::Equal => "equal",
            Relation::Dominates => "dominates",
            Relation::DominatedBy => "dominated_by",
            Relation::Crosses => "crosses",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceVerdict {
    pub relation: Relation,
    /// Largest absolute pointwise gap |a - b|.
    pub max_gap: f64,
    /// Grid location of the largest gap.
    pub argmax_t: f64,
}

/// Count strict inversions (pairs out of order) in `xs` by merge sort.
fn count_inversions(xs: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = xs.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = xs.split_at_mut(mid);
    let mut inv = count_inversions(left, buf) + count_inversions(right, buf);
    buf.clear();
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf.push(left[i]);
            i += 1;
        } else {
            inv += (left.len() - i) as u64;
            buf.push(right[j]);
            j += 1;
        }
    }
    buf.extend_from_slice(&left[i..]);
    buf.extend_from_slice(&right[j..]);
    xs.copy_from_slice(buf);
    inv
}

fn tie_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Strong-comonotonicity test: true iff for every pair, s_i < s_j exactly
/// when psi_i < psi_j (so tie classes coincide as well). Also reports
/// Kendall's tau-b, which equals 1 for comonotone pairs.
pub fn comonotonicity_check(s: &[f64], psi: &[f64]) -> Result<(bool, f64)> {
    if s.len() != psi.len() {
        return Err(Error::Domain(format!(
            "lengths differ: {} vs {}",
            s.len(),
            psi.len()
        )));
    }
    let n = s.len();
    if n < 2 {
        return Err(Error::Domain("need at least two instances".into()));
    }
    let mut pairs: Vec<(f64, f64)> = s.iter().copied().zip(psi.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    // walk tie groups of s: psi constant within a group, strictly increasing
    // across groups
    let mut comonotone = true;
    let mut g = 0;
    let mut prev_group_psi: Option<f64> = None;
    while g < n {
        let mut h = g;
        while h < n && pairs[h].0 == pairs[g].0 {
            if pairs[h].1 != pairs[g].1 {
                comonotone = false;
            }
            h += 1;
        }
        if let Some(prev) = prev_group_psi {
            if pairs[g].1 <= prev {
                comonotone = false;
            }
        }
        prev_group_psi = Some(pairs[h - 1].1);
        g = h;
    }

    // Kendall tau-b by inversion counting on the s-sorted psi sequence
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let s_sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tie_pairs(&s_sorted);
    let mut joint = 0u64;
    let mut run = 1u64;
    for w in pairs.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            joint += run * (run - 1) / 2;
            run = 1;
        }
    }
    let n3 = joint + run * (run - 1) / 2;
    let mut psi_seq: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(n);
    let discordant = count_inversions(&mut psi_seq, &mut buf);
    let mut psi_sorted = psi.to_vec();
    psi_sorted.sort_by(f64::total_cmp);
    let n2 = tie_pairs(&psi_sorted);
    let c_minus_d =
        n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * discordant as f64;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    let tau = if denom == 0.0 { 0.0 } else { c_minus_d / denom };
    Ok((comonotone, tau))
}

/// Pointwise comparison of two loss curves on a shared grid. For nested
/// information scopes, an Equal verdict certifies sufficiency of the coarser
/// scope.
pub fn curve_dominance(a: &LossCurve, b: &LossCurve, tolerance: f64) -> Result<DominanceVerdict> {
    if a.grid != b.grid {
        return Err(Error::Domain("curves must share a common grid".into()));
    }
    let mut max_gap = 0.0f64;
    let mut argmax_t = a.grid[0];
    let mut below = false;
    let mut above = false;
    for ((&t, &va), &vb) in a.grid.iter().zip(&a.values).zip(&b.values) {
        let d = va - vb;
        if d.abs() > max_gap {
            max_gap = d.abs();
            argmax_t = t;
        }
        if d < -tolerance {
            below = true;
        }
        if d > tolerance {
            above = true;
        }
    }
    let relation = match (below, above) {
        (false, false) => Relation::Equal,
        (true, false) => Relation::Dominates,
        (false, true) => Relation::DominatedBy,
        (true, true) => Relation::Crosses,
    };
    Ok(DominanceVerdict {
        relation,
        max_gap,
        argmax_t,
    })
}

/// Per-cost-weight optimal thresholds of a scoring classifier, for the
/// sufficiency test against an exact Bayes-loss oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdFit {
    /// (t, fitted threshold F(t)) per interior grid point.
    pub thresholds: Vec<(f64, f64)>,
    /// Largest excess of the per-t optimal empirical loss over L*(t).
    pub max_excess: f64,
    /// Whether t -> F(t) is nondecreasing.
    pub monotone: bool,
    pub sufficient: bool,
}

/// For each interior grid t, finds the threshold c minimizing the empirical
/// cost-weighted loss of {s > c}. The score is judged sufficient when those
/// optimal losses reach the exact Bayes loss within `tolerance` and the
/// fitted threshold map is nondecreasing (monotonicity is verified, not
/// assumed).
pub fn threshold_sufficiency_check<F: Fn(f64) -> f64>(
    s: &[f64],
    labels: &[u8],
    exact_bayes: F,
    grid: &[f64],
    tolerance: f64,
) -> Result<ThresholdFit> {
    if s.len() != labels.len() || s.is_empty() {
        return Err(Error::Domain(
            "scores and labels must be nonempty and of equal length".into(),
        ));
    }
    let n = s.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    // prefix counts after sorting by score
    let mut pos_prefix = Vec::with_capacity(n + 1);
    let mut neg_prefix = Vec::with_capacity(n + 1);
    let (mut pos, mut neg) = (0u64, 0u64);
    pos_prefix.push(0);
    neg_prefix.push(0);
    for &i in &order {
        if labels[i] == 1 {
            pos += 1;
        } else {
            neg += 1;
        }
        pos_prefix.push(pos);
        neg_prefix.push(neg);
    }
    // valid cut positions: only after the last instance of a tied score run
    let mut cuts: Vec<usize> = vec![0];
    for k in 1..=n {
        if k == n || s[order[k]] != s[order[k - 1]] {
            cuts.push(k);
        }
    }

    let mut thresholds = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut prev_f = f64::NEG_INFINITY;
    for &t in grid {
        if !(t > 0.0 && t < 1.0) {
            continue;
        }
        let mut best = f64::INFINITY;
        let mut best_k = 0usize;
        for &k in &cuts {
            let loss = ((1.0 - t) * pos_prefix[k] as f64
                + t * (neg - neg_prefix[k]) as f64)
                / n as f64;
            if loss < best {
                best = loss;
                best_k = k;
            }
        }
        let f_t = if best_k == 0 {
            s[order[0]] - 1.0
        } else {
            s[order[best_k - 1]]
        };
        if f_t < prev_f {
            monotone = false;
        }
        prev_f = f_t;
        max_excess = max_excess.max(best - exact_bayes(t));
        thresholds.push((t, f_t));
    }
    if thresholds.is_empty() {
        return Err(Error::Domain("grid has no interior points".into()));
    }
    let sufficient = monotone && max_excess <= tolerance;
    Ok(ThresholdFit {
        thresholds,
        max_excess,
        monotone,
        sufficient,
    })
}

/// The four exact curves and verdicts of the independence-model harness.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessReport {
    /// Curves for the joint scope, X1 alone, X2 alone, and the prior.
    pub joint: LossCurve,
    pub x1: LossCurve,
    pub x2: LossCurve,
    pub prior: LossCurve,
    /// X2's curve compared to X1's.
    pub x2_vs_x1: DominanceVerdict,
    /// X1's curve compared to the prior curve.
    pub x1_vs_prior: DominanceVerdict,
    /// True when X2 is strictly dominated by X1 while X1 is still
    /// informative: dominance holds although X1's sigma-field cannot be
    /// sufficient (it would have to be independent of the outcome).
    pub dominance_without_sufficiency: bool,
}

/// Build the dominance-without-sufficiency counterexample on a model with
/// independent components: with unequal component power, X2's curve is
/// dominated by X1's everywhere, yet X1 is not outcome-independent, so
/// density-ratio sufficiency of the weaker component is refuted.
pub fn counterexample_harness(
    model: &GaussianBinaryModel,
    grid_points: usize,
    tolerance: f64,
) -> Result<HarnessReport> {
    if !model.is_cov_diagonal() {
        return Err(Error::Precondition(
            "harness requires independent components (diagonal covariance)".into(),
        ));
    }
    let grid = uniform_grid(grid_points.max(3));
    let joint = exact_curve(model, InformationScope::Full, &grid)?;
    let x1 = exact_curve(model, InformationScope::Component1, &grid)?;
    let x2 = exact_curve(model, InformationScope::Component2, &grid)?;
    let prior = exact_curve(model, InformationScope::Prior, &grid)?;
    let x2_vs_x1 = curve_dominance(&x2, &x1, tolerance)?;
    let x1_vs_prior = curve_dominance(&x1, &prior, tolerance)?;
    let dominance_without_sufficiency = x2_vs_x1.relation == Relation::DominatedBy
        && x1_vs_prior.max_gap > tolerance;
    Ok(HarnessReport {
        joint,
        x1,
        x2,
        prior,
        x2_vs_x1,
        x1_vs_prior,
        dominance_without_sufficiency,
    })
}
