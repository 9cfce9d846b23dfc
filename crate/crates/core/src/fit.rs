use serde::{Deserialize, Serialize};

/// Two-sided normal quantile used for the 95% Wald intervals.
pub const NORMAL_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "MPLE")]
    Mple,
    #[serde(rename = "MCMLE")]
    Mcmle,
    #[serde(rename = "BootstrapMPLE")]
    BootstrapMple,
    /// Exact MLE by full enumeration (small graphs only).
    #[serde(rename = "ExactMLE")]
    ExactMle,
}

impl Estimator {
    pub fn display_name(self) -> &'static str {
        match self {
            Estimator::Mple => "Logistic Regression",
            Estimator::Mcmle => "MCMLE",
            Estimator::BootstrapMple => "bootstrapped MPLE",
            Estimator::ExactMle => "Exact MLE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimator: Estimator,
    pub terms: Vec<String>,
    pub theta: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub std_errors: Vec<f64>,
    pub ci: Vec<[f64; 2]>,
    pub ci_level: f64,
    pub iterations: usize,
    pub converged: bool,
    pub max_abs_gradient: f64,
}

impl FitResult {
    /// Assembles a fit with Wald intervals `theta +/- 1.96 se`.
    pub fn with_normal_ci(
        estimator: Estimator,
        terms: Vec<String>,
        theta: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        iterations: usize,
        converged: bool,
        max_abs_gradient: f64,
    ) -> Self {
        let std_errors: Vec<f64> = (0..theta.len()).map(|i| covariance[i][i].max(0.0).sqrt()).collect();
        let ci = theta
            .iter()
            .zip(&std_errors)
            .map(|(t, s)| [t - NORMAL_95 * s, t + NORMAL_95 * s])
            .collect();
        Self {
            estimator,
            terms,
            theta,
            covariance,
            std_errors,
            ci,
            ci_level: 0.95,
            iterations,
            converged,
            max_abs_gradient,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Whether the interval for coordinate `k` contains `value`.
    pub fn covers(&self, k: usize, value: f64) -> bool {
        self.ci[k][0] <= value && value <= self.ci[k][1]
    }
}
