//! Brier curves and cost-weighted Bayes-loss curves: construction from
//! samples or from the analytic model, the doubled-area identity with the
//! Brier score, curve properties for calibrated classifiers (concavity,
//! Cohen-style bounds, one-sided derivatives, maximum location, prior-shift
//! transform), the Bayes-error and ROC dualities, and correlation bounds on
//! the refinement loss.

use crate::error::{Error, Result};
use crate::metrics::{estimation_tolerance, Prediction};
use crate::model::{GaussianBinaryModel, InformationScope};
use crate::num::{correlation, mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Empirical curve t -> L({Z > t}, t) of a probabilistic classifier.
    BrierCurve,
    /// Curve of exact cost-weighted Bayes losses t -> L*(t).
    BayesLossCurve,
}

/// A loss curve tabulated on an ascending grid over [0,1]. The grid may
/// contain repeated points: an empirical Brier curve jumps at every distinct
/// predicted value, and storing both the left limit and the value at such a
/// point makes trapezoidal integration exact.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub prior: f64,
    pub kind: CurveKind,
}

impl LossCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, prior: f64, kind: CurveKind) -> Result<Self> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err(Error::Domain(
                "curve needs equally many grid points and values (at least 2)".into(),
            ));
        }
        if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
            return Err(Error::Domain("curve grid must span [0,1] inclusive".into()));
        }
        if grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("curve grid must be ascending".into()));
        }
        if values.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Domain("curve values must be nonnegative".into()));
        }
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::Domain(format!("prior must lie in (0,1), got {prior}")));
        }
        Ok(Self {
            grid,
            values,
            prior,
            kind,
        })
    }

    /// Value at t by linear interpolation, right-continuous at repeated grid
    /// points.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.grid[0] {
            return self.values[0];
        }
        if t >= *self.grid.last().unwrap() {
            return *self.values.last().unwrap();
        }
        let i = self.grid.partition_point(|&g| g <= t);
        let (g0, g1) = (self.grid[i - 1], self.grid[i]);
        if g0 == t || g1 == g0 {
            return self.values[i - 1];
        }
        let w = (t - g0) / (g1 - g0);
        self.values[i - 1] * (1.0 - w) + self.values[i] * w
    }
}

/// Uniform grid of `points` values spanning [0,1].
pub fn uniform_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect()
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
        return Err(Error::Domain("grid must span [0,1] inclusive".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("grid must be ascending".into()));
    }
    Ok(())
}

/// Predicted values split by outcome and sorted, for O(log n) loss lookups.
struct SplitSorted {
    pos: Vec<f64>,
    neg: Vec<f64>,
    n: f64,
}

impl SplitSorted {
    fn build(preds: &[Prediction]) -> Self {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for p in preds {
            if p.label == 1 {
                pos.push(p.z);
            } else {
                neg.push(p.z);
            }
        }
        pos.sort_by(f64::total_cmp);
        neg.sort_by(f64::total_cmp);
        Self {
            pos,
            neg,
            n: preds.len() as f64,
        }
    }

    /// Empirical L({Z > t}, t); with `left_limit` the threshold set is
    /// {Z >= t}, giving the curve's left limit at a jump.
    fn loss(&self, t: f64, left_limit: bool) -> f64 {
        let below = |zs: &[f64]| {
            if left_limit {
                zs.partition_point(|&z| z < t)
            } else {
                zs.partition_point(|&z| z <= t)
            }
        };
        let fn_count = below(&self.pos) as f64;
        let fp_count = self.neg.len() as f64 - below(&self.neg) as f64;
        ((1.0 - t) * fn_count + t * fp_count) / self.n
    }
}

/// Empirical cost-weighted mean loss of thresholding Z at t:
/// (1-t) P_n[A, Z <= t] + t P_n[A^c, Z > t].
pub fn cost_loss(preds: &[Prediction], t: f64) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Domain("cost_loss requires nonempty input".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t must lie in [0,1], got {t}")));
    }
    Ok(SplitSorted::build(preds).loss(t, false))
}

fn empirical_prior(preds: &[Prediction]) -> f64 {
    preds.iter().map(|p| f64::from(p.label)).sum::<f64>() / preds.len() as f64
}

/// Empirical Brier curve on the given grid.
pub fn brier_curve(preds: &[Prediction], grid: &[f64]) -> Result<LossCurve> {
    if preds.is_empty() {
        return Err(Error::Domain("brier_curve requires nonempty input".into()));
    }
    validate_grid(grid)?;
    let split = SplitSorted::build(preds);
    let values = grid.iter().map(|&t| split.loss(t, false)).collect();
    LossCurve::new(
        grid.to_vec(),
        values,
        empirical_prior(preds).clamp(1e-12, 1.0 - 1e-12),
        CurveKind::BrierCurve,
    )
}

/// Empirical Brier curve on a uniform grid augmented with every distinct
/// predicted value, each inserted twice (left limit, then value). The curve
/// is piecewise linear between jumps, so trapezoidal integration of this
/// representation is exact and 2 * area equals the Brier score to rounding.
pub fn brier_curve_step_exact(preds: &[Prediction], base_points: usize) -> Result<LossCurve> {
    if preds.is_empty() {
        return Err(Error::Domain("brier_curve requires nonempty input".into()));
    }
    let split = SplitSorted::build(preds);
    let mut breaks: Vec<f64> = preds
        .iter()
        .map(|p| p.z)
        .filter(|&z| z > 0.0 && z < 1.0)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // (t, is_left_limit), ordered with the left limit first at each jump
    let mut points: Vec<(f64, bool)> = uniform_grid(base_points.max(2))
        .into_iter()
        .map(|t| (t, false))
        .collect();
    for &z in &breaks {
        points.push((z, true));
        points.push((z, false));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));

    let grid: Vec<f64> = points.iter().map(|&(t, _)| t).collect();
    let values: Vec<f64> = points
        .iter()
        .map(|&(t, left)| split.loss(t, left))
        .collect();
    LossCurve::new(
        grid,
        values,
        empirical_prior(preds).clamp(1e-12, 1.0 - 1e-12),
        CurveKind::BrierCurve,
    )
}

/// Exact cost-weighted Bayes-loss curve of a model scope on the given grid.
pub fn exact_curve(
    model: &GaussianBinaryModel,
    scope: InformationScope,
    grid: &[f64],
) -> Result<LossCurve> {
    validate_grid(grid)?;
    let values: Result<Vec<f64>> = grid
        .iter()
        .map(|&t| {
            if t == 0.0 || t == 1.0 {
                Ok(0.0)
            } else {
                model.bayes_loss_exact(scope, t)
            }
        })
        .collect();
    LossCurve::new(
        grid.to_vec(),
        values?,
        model.prior(),
        CurveKind::BayesLossCurve,
    )
}

/// Trapezoidal area under the curve. Twice this value equals the Brier score
/// (exactly for the step-exact representation).
pub fn curve_area(curve: &LossCurve) -> f64 {
    curve
        .grid
        .windows(2)
        .zip(curve.values.windows(2))
        .map(|(g, v)| 0.5 * (v[0] + v[1]) * (g[1] - g[0]))
        .sum()
}

/// Location and value of the curve maximum for calibrated predictions: the
/// (1 - P[A])-quantile of z (lowest admissible value) and the loss there.
pub fn curve_max(preds: &[Prediction]) -> Result<(f64, f64)> {
    if preds.is_empty() {
        return Err(Error::Domain("curve_max requires nonempty input".into()));
    }
    let alpha = 1.0 - empirical_prior(preds);
    let mut zs: Vec<f64> = preds.iter().map(|p| p.z).collect();
    zs.sort_by(f64::total_cmp);
    let n = zs.len();
    let k = ((alpha * n as f64).ceil() as usize).clamp(1, n);
    let t_star = zs[k - 1];
    let split = SplitSorted::build(preds);
    Ok((t_star, split.loss(t_star.clamp(0.0, 1.0), false)))
}

/// Worst-case margins of the generalized Cohen bounds
/// min(t, 1-t) * refinement <= B(t) <= refinement over the curve grid.
/// Both margins are nonnegative iff the bounds hold everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub lower_margin: f64,
    pub upper_margin: f64,
}

impl BoundsReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.lower_margin >= -tolerance && self.upper_margin >= -tolerance
    }
}

pub fn curve_bounds_check(curve: &LossCurve, refinement: f64) -> BoundsReport {
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for (&t, &v) in curve.grid.iter().zip(&curve.values) {
        lower = lower.min(v - t.min(1.0 - t) * refinement);
        upper = upper.min(refinement - v);
    }
    BoundsReport {
        lower_margin: lower,
        upper_margin: upper,
    }
}

/// One-sided derivatives of the Brier curve of calibrated predictions at t:
/// right = 1 - P[A] - P[z <= t], left = 1 - P[A] - P[z < t].
pub fn one_sided_derivatives(preds: &[Prediction], t: f64) -> Result<(f64, f64)> {
    if preds.is_empty() {
        return Err(Error::Domain("one_sided_derivatives requires nonempty input".into()));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("t must lie in (0,1), got {t}")));
    }
    let n = preds.len() as f64;
    let p = empirical_prior(preds);
    let leq = preds.iter().filter(|p| p.z <= t).count() as f64 / n;
    let lt = preds.iter().filter(|p| p.z < t).count() as f64 / n;
    Ok((1.0 - p - lt, 1.0 - p - leq))
}

/// Smallest sag below the chord of neighbouring grid points; nonnegative iff
/// the tabulated curve is concave.
pub fn concavity_margin(curve: &LossCurve) -> f64 {
    let mut margin = f64::INFINITY;
    for i in 1..curve.grid.len() - 1 {
        let (g0, g1, g2) = (curve.grid[i - 1], curve.grid[i], curve.grid[i + 1]);
        if g2 == g0 {
            continue;
        }
        let chord =
            (curve.values[i - 1] * (g2 - g1) + curve.values[i + 1] * (g1 - g0)) / (g2 - g0);
        margin = margin.min(curve.values[i] - chord);
    }
    margin
}

/// Transform the Brier curve of a calibrated classifier under prior p into
/// the curve under target prior q, keeping class-conditional laws fixed:
/// B_Q(t) = B_P(s) (1-t) q / ((1-s) p) with
/// s = (1-q) p t / ((p-q) t + q (1-p)).
///
/// Each source grid point s is carried to its target coordinate
/// t = s q (1-p) / ((1-q) p - (p-q) s), so values transfer exactly (no
/// interpolation) and a round trip p -> q -> p reproduces the curve to
/// rounding error.
pub fn prior_shift_transform(curve: &LossCurve, target_prior: f64) -> Result<LossCurve> {
    let p = curve.prior;
    let q = target_prior;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("target prior must lie in (0,1), got {q}")));
    }
    let mut grid = Vec::with_capacity(curve.grid.len());
    let mut values = Vec::with_capacity(curve.grid.len());
    for (&s, &v) in curve.grid.iter().zip(&curve.values) {
        let t = if s >= 1.0 {
            1.0
        } else {
            s * q * (1.0 - p) / ((1.0 - q) * p - (p - q) * s)
        };
        let value = if s >= 1.0 || t >= 1.0 {
            0.0
        } else {
            (v * (1.0 - t) * q / ((1.0 - s) * p)).max(0.0)
        };
        grid.push(t.clamp(0.0, 1.0));
        values.push(value);
    }
    LossCurve::new(grid, values, q, curve.kind)
}

/// Brier-curve value at t from an oracle for the q-weighted Bayes error
/// (min over decision regions of q P[G^c|A] + (1-q) P[G|A^c]):
/// B(t) = ((1-t)p + t(1-p)) * bayes_error(q), q = (1-t)p / ((1-t)p + t(1-p)).
pub fn curve_from_bayes_error<F: Fn(f64) -> f64>(
    prior: f64,
    t: f64,
    bayes_error: F,
) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("t must lie in (0,1), got {t}")));
    }
    let p = prior;
    let norm = (1.0 - t) * p + t * (1.0 - p);
    let q = (1.0 - t) * p / norm;
    Ok(norm * bayes_error(q))
}

/// Unweighted Bayes error from the Brier curve taken under prior 1/2:
/// min over regions of P[A cap G^c] + P[A^c cap G] = 2 B_Q(1 - P[A]).
pub fn bayes_error_from_half_prior_curve(half_curve: &LossCurve, prior: f64) -> Result<f64> {
    if (half_curve.prior - 0.5).abs() > 1e-12 {
        return Err(Error::Precondition(
            "Bayes-error duality needs the curve under prior 1/2".into(),
        ));
    }
    if !(prior > 0.0 && prior < 1.0) {
        return Err(Error::Domain(format!("prior must lie in (0,1), got {prior}")));
    }
    Ok(2.0 * half_curve.eval(1.0 - prior))
}

/// Number of grid points used for the discretized infima in the ROC duality.
pub const ROC_GRID_POINTS: usize = 1999;

/// Brier-curve value at t from the power function beta(alpha) of the
/// Neyman-Pearson test on the class-conditional score densities:
/// B(t) = ((1-t)p + t(1-p)) * min over alpha of ((1-q) alpha + q (1-beta)).
/// The minimum is taken over a discretized alpha grid.
pub fn roc_forward<F: Fn(f64) -> f64>(power: F, prior: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("t must lie in (0,1), got {t}")));
    }
    let p = prior;
    let norm = (1.0 - t) * p + t * (1.0 - p);
    let q = (1.0 - t) * p / norm;
    let mut best = f64::INFINITY;
    let mut prev_beta = f64::NEG_INFINITY;
    for i in 0..=ROC_GRID_POINTS {
        let alpha = i as f64 / ROC_GRID_POINTS as f64;
        let beta = power(alpha);
        if beta < prev_beta - 1e-9 {
            return Err(Error::Domain("power function must be nondecreasing".into()));
        }
        prev_beta = beta;
        best = best.min((1.0 - q) * alpha + q * (1.0 - beta));
    }
    Ok(norm * best)
}

/// Power function of the Neyman-Pearson test recovered from the half-prior
/// Brier curve: beta(alpha) = inf over p in (0,1] of
/// ((1-p) alpha + p - 2 B_Q(1-p)) / p, over a discretized p grid.
pub fn roc_inverse(half_curve: &LossCurve, alpha: f64) -> Result<f64> {
    if (half_curve.prior - 0.5).abs() > 1e-12 {
        return Err(Error::Precondition(
            "ROC duality needs the curve under prior 1/2".into(),
        ));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0,1], got {alpha}")));
    }
    let mut best = f64::INFINITY;
    for i in 1..=ROC_GRID_POINTS {
        let p = i as f64 / ROC_GRID_POINTS as f64;
        let v = ((1.0 - p) * alpha + p - 2.0 * half_curve.eval(1.0 - p)) / p;
        best = best.min(v);
    }
    Ok(best.clamp(0.0, 1.0))
}

/// Correlation-based refinement-loss bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementBounds {
    pub lower: f64,
    pub upper: f64,
    pub correlation: f64,
    pub quantile_q: f64,
}

/// Bounds (1 - rho) p(1-p) <= E[psi(1-psi)] <= (1 - rho^2) p(1-p) where rho
/// is the correlation of the outcome indicator with 1{psi > q} and q is the
/// (1 - P[A])-quantile of psi. Requires a q with P[psi <= q] close to
/// 1 - P[A]; a (near-)constant psi has none and is rejected.
pub fn refinement_bounds(psis: &[f64], labels: &[u8]) -> Result<RefinementBounds> {
    if psis.len() != labels.len() || psis.is_empty() {
        return Err(Error::Domain(
            "refinement_bounds requires equal-length nonempty inputs".into(),
        ));
    }
    let n = psis.len();
    let labels_f: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let p = mean(&labels_f);
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Precondition("labels are all equal".into()));
    }
    let alpha = 1.0 - p;
    let mut sorted = psis.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((alpha * n as f64).ceil() as usize).clamp(1, n);
    let q = sorted[k - 1];
    let attained = sorted.partition_point(|&x| x <= q) as f64 / n as f64;
    if (attained - alpha).abs() > estimation_tolerance(n) {
        return Err(Error::Precondition(format!(
            "no admissible quantile: P[psi <= q] = {attained} vs target {alpha}"
        )));
    }
    let indicator: Vec<f64> = psis.iter().map(|&x| f64::from(u8::from(x > q))).collect();
    let rho = correlation(&labels_f, &indicator);
    Ok(RefinementBounds {
        lower: (1.0 - rho) * p * (1.0 - p),
        upper: (1.0 - rho * rho) * p * (1.0 - p),
        correlation: rho,
        quantile_q: q,
    })
}
