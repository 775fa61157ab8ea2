//! Analytic two-class population models with bivariate-normal features.
//!
//! Both class-conditional feature distributions share one covariance matrix,
//! so every information scope's posterior class probability is the logistic of
//! a linear score whose class-conditional laws are univariate Gaussian. That
//! makes posteriors, cost-weighted Bayes losses and refinement losses exactly
//! computable, which is what the rest of the toolkit is validated against.

use crate::error::{Error, Result};
use crate::num::{logistic, logit, normal_cdf, normal_pdf, normal_sf, simpson};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Which sub-sigma-field the posterior is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InformationScope {
    /// Both feature components (and their correlation).
    Full,
    /// First feature component only.
    Component1,
    /// Second feature component only.
    Component2,
    /// Misspecified posterior: full formula with off-diagonal covariance zeroed.
    NaiveBayes,
    /// Exact posterior given the naive-Bayes linear score.
    NaiveBayesCalibrated,
    /// No feature information; constant prior.
    Prior,
}

impl InformationScope {
    pub const ALL: [InformationScope; 6] = [
        InformationScope::Full,
        InformationScope::Component1,
        InformationScope::Component2,
        InformationScope::NaiveBayes,
        InformationScope::NaiveBayesCalibrated,
        InformationScope::Prior,
    ];

    /// Stable column index, matching the sample CSV column order.
    pub fn index(self) -> usize {
        match self {
            InformationScope::Full => 0,
            InformationScope::Component1 => 1,
            InformationScope::Component2 => 2,
            InformationScope::NaiveBayes => 3,
            InformationScope::NaiveBayesCalibrated => 4,
            InformationScope::Prior => 5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            InformationScope::Full => "full",
            InformationScope::Component1 => "c1",
            InformationScope::Component2 => "c2",
            InformationScope::NaiveBayes => "nb",
            InformationScope::NaiveBayesCalibrated => "nbcal",
            InformationScope::Prior => "prior",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(InformationScope::Full),
            "c1" | "component1" => Ok(InformationScope::Component1),
            "c2" | "component2" => Ok(InformationScope::Component2),
            "nb" | "naivebayes" => Ok(InformationScope::NaiveBayes),
            "nbcal" | "naivebayescalibrated" => Ok(InformationScope::NaiveBayesCalibrated),
            "prior" => Ok(InformationScope::Prior),
            other => Err(Error::Domain(format!("unknown scope `{other}`"))),
        }
    }
}

/// Class-conditional law of a scope's posterior logit.
///
/// `Linear` means the posterior equals `logistic(eta)` where `eta` is Gaussian
/// with mean `mean_neg` (class 0) / `mean_pos` (class 1) and shared `sd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreLaw {
    Constant(f64),
    Linear { mean_neg: f64, mean_pos: f64, sd: f64 },
}

/// Two-class population with shared-covariance bivariate-normal features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBinaryModel {
    prior: f64,
    mean_neg: [f64; 2],
    mean_pos: [f64; 2],
    cov: [[f64; 2]; 2],
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn mat_vec(m: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn solve2(m: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        (m[1][1] * v[0] - m[0][1] * v[1]) / det,
        (m[0][0] * v[1] - m[1][0] * v[0]) / det,
    ]
}

fn cholesky2(cov: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    if cov[0][0] <= 0.0 {
        return Err(Error::InvalidModel("cov[0][0] must be positive".into()));
    }
    let l00 = cov[0][0].sqrt();
    let l10 = cov[1][0] / l00;
    let rest = cov[1][1] - l10 * l10;
    if rest <= 0.0 {
        return Err(Error::InvalidModel(
            "covariance matrix is not positive definite".into(),
        ));
    }
    Ok([[l00, 0.0], [l10, rest.sqrt()]])
}

impl GaussianBinaryModel {
    pub fn new(
        prior: f64,
        mean_neg: [f64; 2],
        mean_pos: [f64; 2],
        cov: [[f64; 2]; 2],
    ) -> Result<Self> {
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::InvalidModel(format!(
                "prior must lie in (0,1), got {prior}"
            )));
        }
        let scale = cov[0][0].abs().max(cov[1][1].abs()).max(1.0);
        if (cov[0][1] - cov[1][0]).abs() > 1e-12 * scale {
            return Err(Error::InvalidModel("covariance matrix is not symmetric".into()));
        }
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        let trace = cov[0][0] + cov[1][1];
        if det <= 0.0 || trace <= 0.0 {
            return Err(Error::InvalidModel(
                "covariance matrix is not positive definite".into(),
            ));
        }
        Ok(Self {
            prior,
            mean_neg,
            mean_pos,
            cov,
        })
    }

    /// Canonical correlated model behind the figure-1 style reports.
    pub fn canonical() -> Self {
        Self::new(0.1, [0.0, 0.0], [1.0, 2.0], [[1.0, 0.5], [0.5, 1.0]]).unwrap()
    }

    /// Independence model (diagonal covariance, unequal component power)
    /// behind the figure-2 style counter-example.
    pub fn independence() -> Self {
        Self::new(0.1, [0.0, 0.0], [2.0, 1.0], [[1.0, 0.0], [0.0, 1.0]]).unwrap()
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn mean_neg(&self) -> [f64; 2] {
        self.mean_neg
    }

    pub fn mean_pos(&self) -> [f64; 2] {
        self.mean_pos
    }

    pub fn cov(&self) -> [[f64; 2]; 2] {
        self.cov
    }

    pub fn is_cov_diagonal(&self) -> bool {
        self.cov[0][1] == 0.0 && self.cov[1][0] == 0.0
    }

    /// Linear form (w, b) of the posterior logit in feature space for the
    /// scopes whose logit is linear in x. `None` for NaiveBayesCalibrated and
    /// Prior (handled via their score law).
    fn linear_form(&self, scope: InformationScope) -> Option<([f64; 2], f64)> {
        let delta = [
            self.mean_pos[0] - self.mean_neg[0],
            self.mean_pos[1] - self.mean_neg[1],
        ];
        let mid = [
            0.5 * (self.mean_pos[0] + self.mean_neg[0]),
            0.5 * (self.mean_pos[1] + self.mean_neg[1]),
        ];
        let lo = logit(self.prior);
        match scope {
            InformationScope::Full => {
                let w = solve2(self.cov, delta);
                Some((w, -dot(mid, w) + lo))
            }
            InformationScope::Component1 => {
                let wi = delta[0] / self.cov[0][0];
                Some(([wi, 0.0], -mid[0] * wi + lo))
            }
            InformationScope::Component2 => {
                let wi = delta[1] / self.cov[1][1];
                Some(([0.0, wi], -mid[1] * wi + lo))
            }
            InformationScope::NaiveBayes => {
                let w = [delta[0] / self.cov[0][0], delta[1] / self.cov[1][1]];
                Some((w, -dot(mid, w) + lo))
            }
            InformationScope::NaiveBayesCalibrated | InformationScope::Prior => None,
        }
    }

    /// Recalibration coefficients (a, c) mapping the naive-Bayes logit u to
    /// the exact posterior logit a*u + c, or `None` when uninformative.
    fn nbcal_coeffs(&self) -> Option<(f64, f64)> {
        let ScoreLaw::Linear {
            mean_neg: m0,
            mean_pos: m1,
            sd,
        } = self.score_law(InformationScope::NaiveBayes)
        else {
            return None;
        };
        if m1 == m0 {
            return None;
        }
        let v = sd * sd;
        let a = (m1 - m0) / v;
        let c = -(m1 * m1 - m0 * m0) / (2.0 * v) + logit(self.prior);
        Some((a, c))
    }

    /// Class-conditional law of the scope's posterior logit.
    pub fn score_law(&self, scope: InformationScope) -> ScoreLaw {
        match scope {
            InformationScope::Prior => ScoreLaw::Constant(self.prior),
            InformationScope::NaiveBayesCalibrated => match self.nbcal_coeffs() {
                None => ScoreLaw::Constant(self.prior),
                Some((a, c)) => {
                    let ScoreLaw::Linear {
                        mean_neg: m0,
                        mean_pos: m1,
                        sd,
                    } = self.score_law(InformationScope::NaiveBayes)
                    else {
                        unreachable!()
                    };
                    ScoreLaw::Linear {
                        mean_neg: a * m0 + c,
                        mean_pos: a * m1 + c,
                        sd: a.abs() * sd,
                    }
                }
            },
            _ => {
                let (w, b) = self.linear_form(scope).unwrap();
                let var = dot(w, mat_vec(self.cov, w));
                if var == 0.0 {
                    ScoreLaw::Constant(self.prior)
                } else {
                    ScoreLaw::Linear {
                        mean_neg: dot(w, self.mean_neg) + b,
                        mean_pos: dot(w, self.mean_pos) + b,
                        sd: var.sqrt(),
                    }
                }
            }
        }
    }

    /// P[A | scope information] at feature value x.
    pub fn posterior(&self, scope: InformationScope, x: [f64; 2]) -> f64 {
        match scope {
            InformationScope::Prior => self.prior,
            InformationScope::NaiveBayesCalibrated => match self.nbcal_coeffs() {
                None => self.prior,
                Some((a, c)) => {
                    let (w, b) = self.linear_form(InformationScope::NaiveBayes).unwrap();
                    logistic(a * (dot(w, x) + b) + c)
                }
            },
            _ => {
                let (w, b) = self.linear_form(scope).unwrap();
                if dot(w, mat_vec(self.cov, w)) == 0.0 {
                    self.prior
                } else {
                    logistic(dot(w, x) + b)
                }
            }
        }
    }

    /// Exact cost-weighted loss of thresholding the scope posterior at t:
    /// (1-t) P[A, Psi <= t] + t P[A^c, Psi > t], via normal-CDF evaluation.
    pub fn bayes_loss_exact(&self, scope: InformationScope, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("t must lie in (0,1), got {t}")));
        }
        Ok(self.threshold_loss(scope, t))
    }

    fn threshold_loss(&self, scope: InformationScope, t: f64) -> f64 {
        let p = self.prior;
        match self.score_law(scope) {
            ScoreLaw::Constant(c) => {
                if c > t {
                    t * (1.0 - p)
                } else {
                    (1.0 - t) * p
                }
            }
            ScoreLaw::Linear {
                mean_neg: m0,
                mean_pos: m1,
                sd,
            } => {
                let theta = logit(t);
                (1.0 - t) * p * normal_cdf((theta - m1) / sd)
                    + t * (1.0 - p) * normal_sf((theta - m0) / sd)
            }
        }
    }

    /// Exact refinement loss E[Psi (1 - Psi)] of the scope posterior.
    pub fn refinement_exact(&self, scope: InformationScope) -> f64 {
        let p = self.prior;
        match self.score_law(scope) {
            ScoreLaw::Constant(c) => c * (1.0 - c),
            ScoreLaw::Linear {
                mean_neg: m0,
                mean_pos: m1,
                sd,
            } => {
                let lo = m0.min(m1) - 12.0 * sd;
                let hi = m0.max(m1) + 12.0 * sd;
                simpson(
                    |u| {
                        let s = logistic(u);
                        let mix = p * normal_pdf((u - m1) / sd) + (1.0 - p) * normal_pdf((u - m0) / sd);
                        s * (1.0 - s) * mix / sd
                    },
                    lo,
                    hi,
                    8192,
                )
            }
        }
    }

    /// alpha-quantile of the scope posterior distribution.
    pub fn posterior_quantile(&self, scope: InformationScope, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
        }
        let p = self.prior;
        match self.score_law(scope) {
            ScoreLaw::Constant(c) => Ok(c),
            ScoreLaw::Linear {
                mean_neg: m0,
                mean_pos: m1,
                sd,
            } => {
                let cdf = |theta: f64| {
                    p * normal_cdf((theta - m1) / sd) + (1.0 - p) * normal_cdf((theta - m0) / sd)
                };
                let mut lo = m0.min(m1) - 42.0 * sd;
                let mut hi = m0.max(m1) + 42.0 * sd;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if cdf(mid) < alpha {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(logistic(0.5 * (lo + hi)))
            }
        }
    }

    /// Prior-q-weighted Bayes error of the scope's score sigma-field:
    /// min over decision regions of q P[G^c|A] + (1-q) P[G|A^c].
    pub fn weighted_bayes_error(&self, scope: InformationScope, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("q must lie in (0,1), got {q}")));
        }
        match self.score_law(scope) {
            ScoreLaw::Constant(_) => Ok(q.min(1.0 - q)),
            ScoreLaw::Linear {
                mean_neg: m0,
                mean_pos: m1,
                sd,
            } => {
                if m1 == m0 {
                    return Ok(q.min(1.0 - q));
                }
                let c = 0.5 * (m0 + m1) + sd * sd * ((1.0 - q) / q).ln() / (m1 - m0);
                if m1 > m0 {
                    Ok(q * normal_cdf((c - m1) / sd) + (1.0 - q) * normal_sf((c - m0) / sd))
                } else {
                    Ok(q * normal_sf((c - m1) / sd) + (1.0 - q) * normal_cdf((c - m0) / sd))
                }
            }
        }
    }

    /// Standardized class-mean separation of the scope's score (Mahalanobis
    /// distance for the Full scope).
    pub fn discriminability(&self, scope: InformationScope) -> f64 {
        match self.score_law(scope) {
            ScoreLaw::Constant(_) => 0.0,
            ScoreLaw::Linear {
                mean_neg: m0,
                mean_pos: m1,
                sd,
            } => (m1 - m0).abs() / sd,
        }
    }

    /// E[f(X)] over the feature mixture distribution, by per-class
    /// standardized 2-D Simpson quadrature.
    pub fn expect_feature_fn<F: Fn([f64; 2]) -> f64>(&self, f: F) -> f64 {
        let chol = cholesky2(self.cov).expect("validated at construction");
        let n = 240usize;
        let (lo, hi) = (-8.5f64, 8.5f64);
        let h = (hi - lo) / n as f64;
        let mut class_mean = [0.0f64; 2];
        for (ci, mu) in [self.mean_neg, self.mean_pos].into_iter().enumerate() {
            let mut acc = 0.0;
            for i in 0..=n {
                let y1 = lo + h * i as f64;
                let wi = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let mut inner = 0.0;
                for j in 0..=n {
                    let y2 = lo + h * j as f64;
                    let wj = if j == 0 || j == n {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let x = [
                        mu[0] + chol[0][0] * y1,
                        mu[1] + chol[1][0] * y1 + chol[1][1] * y2,
                    ];
                    inner += wj * normal_pdf(y2) * f(x);
                }
                acc += wi * normal_pdf(y1) * inner;
            }
            class_mean[ci] = acc * h * h / 9.0;
        }
        (1.0 - self.prior) * class_mean[0] + self.prior * class_mean[1]
    }

    /// Exact E[(Psi_a - Psi_b)^2] between two scope posteriors.
    pub fn posterior_sq_gap(&self, a: InformationScope, b: InformationScope) -> f64 {
        self.expect_feature_fn(|x| {
            let d = self.posterior(a, x) - self.posterior(b, x);
            d * d
        })
    }

    /// Draw a deterministic population sample. Labels are Bernoulli(prior),
    /// features come from the class-conditional Gaussian, and every scope's
    /// posterior column is filled in.
    pub fn sample(&self, n: usize, seed: u64) -> Result<PopulationSample> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        let chol = cholesky2(self.cov)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.gen();
            let label = u < self.prior;
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let mu = if label { self.mean_pos } else { self.mean_neg };
            features.push([
                mu[0] + chol[0][0] * z1,
                mu[1] + chol[1][0] * z1 + chol[1][1] * z2,
            ]);
            labels.push(u8::from(label));
        }
        let posteriors = InformationScope::ALL
            .map(|scope| features.iter().map(|&x| self.posterior(scope, x)).collect());
        Ok(PopulationSample {
            seed,
            features,
            labels,
            posteriors,
        })
    }
}

/// Realized sample of (features, label, per-scope posteriors).
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSample {
    pub seed: u64,
    pub features: Vec<[f64; 2]>,
    pub labels: Vec<u8>,
    posteriors: [Vec<f64>; 6],
}

impl PopulationSample {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn psis(&self, scope: InformationScope) -> &[f64] {
        &self.posteriors[scope.index()]
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }

    /// Additively shift one posterior column, clamped to [0,1]. Only used by
    /// the verification suite's fault-injection mode.
    pub fn shift_posteriors(&mut self, scope: InformationScope, delta: f64) {
        for v in &mut self.posteriors[scope.index()] {
            *v = (*v + delta).clamp(0.0, 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::mean;

    /// Independent density-ratio oracle: P[A|x] directly from the bivariate
    /// normal densities.
    fn posterior_by_density(
        p: f64,
        mu0: [f64; 2],
        mu1: [f64; 2],
        cov: [[f64; 2]; 2],
        x: [f64; 2],
    ) -> f64 {
        let pdf = |mu: [f64; 2]| {
            let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
            let d = [x[0] - mu[0], x[1] - mu[1]];
            let inv = [
                [cov[1][1] / det, -cov[0][1] / det],
                [-cov[1][0] / det, cov[0][0] / det],
            ];
            let q = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1])
                + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
            (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
        };
        p * pdf(mu1) / (p * pdf(mu1) + (1.0 - p) * pdf(mu0))
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianBinaryModel::new(0.0, [0.0; 2], [1.0; 2], [[1.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(GaussianBinaryModel::new(0.5, [0.0; 2], [1.0; 2], [[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(GaussianBinaryModel::new(0.5, [0.0; 2], [1.0; 2], [[1.0, 0.5], [0.4, 1.0]]).is_err());
        assert!(GaussianBinaryModel::new(0.5, [0.0; 2], [1.0; 2], [[-1.0, 0.0], [0.0, -1.0]]).is_err());
    }

    #[test]
    fn posterior_identical_means_is_prior() {
        let m = GaussianBinaryModel::new(0.1, [1.0, -2.0], [1.0, -2.0], [[2.0, 0.3], [0.3, 1.0]])
            .unwrap();
        for scope in InformationScope::ALL {
            assert_eq!(m.posterior(scope, [4.2, -1.0]), 0.1, "{scope:?}");
        }
    }

    #[test]
    fn posterior_symmetric_midpoint() {
        let m =
            GaussianBinaryModel::new(0.5, [0.0, 0.0], [1.0, 1.0], [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!((m.posterior(InformationScope::Full, [0.5, 0.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn posterior_full_matches_density_ratio_oracle() {
        let p = 0.5;
        let (mu0, mu1) = ([0.0, 0.0], [1.0, 1.0]);
        let cov = [[1.0, 0.0], [0.0, 1.0]];
        let m = GaussianBinaryModel::new(p, mu0, mu1, cov).unwrap();
        let got = m.posterior(InformationScope::Full, [1.0, 1.0]);
        assert!((got - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);
        // and at a handful of points on a correlated model
        let m = GaussianBinaryModel::canonical();
        for x in [[0.0, 0.0], [1.0, 2.0], [-1.5, 0.7], [3.0, -2.0]] {
            let want = posterior_by_density(0.1, [0.0, 0.0], [1.0, 2.0], [[1.0, 0.5], [0.5, 1.0]], x);
            assert!((m.posterior(InformationScope::Full, x) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn bayes_loss_prior_scope_closed_form() {
        let m = GaussianBinaryModel::canonical();
        let got = m.bayes_loss_exact(InformationScope::Prior, 0.3).unwrap();
        assert!((got - 0.07).abs() < 1e-15);
        assert!(m.bayes_loss_exact(InformationScope::Prior, 0.0).is_err());
        assert!(m.bayes_loss_exact(InformationScope::Prior, 1.0).is_err());
    }

    #[test]
    fn bayes_loss_uninformative_equals_prior_curve() {
        let m = GaussianBinaryModel::new(0.25, [1.0, 1.0], [1.0, 1.0], [[1.0, 0.2], [0.2, 1.0]])
            .unwrap();
        for scope in InformationScope::ALL {
            for t in [0.05, 0.25, 0.5, 0.9] {
                let got = m.bayes_loss_exact(scope, t).unwrap();
                let want = m.bayes_loss_exact(InformationScope::Prior, t).unwrap();
                assert!((got - want).abs() < 1e-15, "{scope:?} t={t}");
            }
        }
    }

    #[test]
    fn bayes_loss_matches_monte_carlo() {
        let m =
            GaussianBinaryModel::new(0.1, [0.0, 0.0], [2.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let s = m.sample(1_000_000, 42).unwrap();
        let t = 0.5;
        let psis = s.psis(InformationScope::Full);
        // plug-in estimate of (1-t) P[A, Psi<=t] + t P[A^c, Psi>t]
        let vals: Vec<f64> = psis
            .iter()
            .map(|&psi| {
                if psi <= t {
                    (1.0 - t) * psi
                } else {
                    t * (1.0 - psi)
                }
            })
            .collect();
        let est = mean(&vals);
        let se = (crate::num::variance(&vals) / vals.len() as f64).sqrt();
        let exact = m.bayes_loss_exact(InformationScope::Full, t).unwrap();
        assert!(
            (est - exact).abs() < 3.0 * se.max(1e-6),
            "est={est} exact={exact} se={se}"
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = GaussianBinaryModel::canonical();
        let a = m.sample(1000, 7).unwrap();
        let b = m.sample(1000, 7).unwrap();
        assert_eq!(a, b);
        let c = m.sample(1000, 8).unwrap();
        assert_ne!(a, c);
        assert!(m.sample(0, 7).is_err());
    }

    #[test]
    fn sample_label_mean_in_binomial_band() {
        let m = GaussianBinaryModel::canonical();
        let s = m.sample(1_000_000, 1).unwrap();
        let mean_label = mean(&s.labels_f64());
        assert!((0.0988..=0.1012).contains(&mean_label), "{mean_label}");
        // law of total expectation: every *calibrated* posterior column has
        // the same mean (NaiveBayes is deliberately miscalibrated)
        for scope in InformationScope::ALL {
            if scope == InformationScope::NaiveBayes {
                continue;
            }
            let mp = mean(s.psis(scope));
            assert!((mp - mean_label).abs() < 4.0 * 0.3 / 1000.0, "{scope:?}: {mp}");
        }
    }

    #[test]
    fn full_posterior_monotone_in_linear_score() {
        let m = GaussianBinaryModel::canonical();
        let s = m.sample(5000, 3).unwrap();
        let (w, b) = m.linear_form(InformationScope::Full).unwrap();
        let mut pairs: Vec<(f64, f64)> = s
            .features
            .iter()
            .zip(s.psis(InformationScope::Full))
            .map(|(&x, &psi)| (dot(w, x) + b, psi))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for win in pairs.windows(2) {
            assert!(win[0].1 < win[1].1 || win[0].0 == win[1].0);
        }
    }

    #[test]
    fn scope_ordering_of_exact_losses() {
        let m = GaussianBinaryModel::canonical();
        for i in 1..1000 {
            let t = i as f64 / 1000.0;
            let full = m.bayes_loss_exact(InformationScope::Full, t).unwrap();
            let c1 = m.bayes_loss_exact(InformationScope::Component1, t).unwrap();
            let c2 = m.bayes_loss_exact(InformationScope::Component2, t).unwrap();
            let prior = m.bayes_loss_exact(InformationScope::Prior, t).unwrap();
            assert!(full <= c1 + 1e-14 && c1 <= prior + 1e-14, "t={t}");
            assert!(full <= c2 + 1e-14 && c2 <= prior + 1e-14, "t={t}");
        }
    }

    #[test]
    fn nbcal_coincides_with_full_when_uncorrelated() {
        let m = GaussianBinaryModel::independence();
        for x in [[0.0, 0.0], [2.0, 1.0], [-1.0, 3.0]] {
            let a = m.posterior(InformationScope::Full, x);
            let b = m.posterior(InformationScope::NaiveBayesCalibrated, x);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_exact_matches_curve_area() {
        // dual route: E[Psi(1-Psi)] = 2 * integral of L*(t) dt
        let m = GaussianBinaryModel::canonical();
        for scope in [InformationScope::Full, InformationScope::Component2] {
            let quad = m.refinement_exact(scope);
            let area = simpson(|t| m.threshold_loss(scope, t), 1e-9, 1.0 - 1e-9, 20000);
            assert!((quad - 2.0 * area).abs() < 1e-6, "{scope:?}: {quad} vs {}", 2.0 * area);
        }
    }

    #[test]
    fn posterior_quantile_inverts_distribution() {
        let m = GaussianBinaryModel::canonical();
        let q = m.posterior_quantile(InformationScope::Full, 0.9).unwrap();
        let s = m.sample(200_000, 5).unwrap();
        let frac = s
            .psis(InformationScope::Full)
            .iter()
            .filter(|&&psi| psi <= q)
            .count() as f64
            / s.len() as f64;
        assert!((frac - 0.9).abs() < 5e-3, "{frac}");
    }

    #[test]
    fn posterior_sq_gap_matches_refinement_difference() {
        // For nested calibrated scopes, Eq-(1c)-style identity:
        // E[(Psi_full - Psi_c1)^2] = refinement(c1) - refinement(full).
        let m = GaussianBinaryModel::canonical();
        let gap = m.posterior_sq_gap(InformationScope::Full, InformationScope::Component1);
        let want = m.refinement_exact(InformationScope::Component1)
            - m.refinement_exact(InformationScope::Full);
        assert!((gap - want).abs() < 1e-8, "{gap} vs {want}");
    }
}
