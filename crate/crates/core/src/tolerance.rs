use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Tower consistency and subinvariance comparisons.
    pub consistency: f64,
    /// Eigen-equation residuals.
    pub eigen: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            consistency: 1e-12,
            eigen: 1e-9,
        }
    }
}
