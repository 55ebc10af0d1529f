use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    /// No feasible point; carries a dual ray.
    Infeasible,
    /// Objective unbounded above; carries a primal ray.
    Unbounded,
    Stalled,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::Stalled => "stalled",
        };
        f.write_str(s)
    }
}

/// Relative residuals, all measured in the infinity norm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// `(y, Z)` with zero dual stationarity, `Z` in the dual cone and `b^T y + <C0, Z> = -1`.
    PrimalInfeasible,
    /// `x` with `A x = 0`, linear parts in the cone and objective `+1`.
    DualInfeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub x: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub cone_duals: Vec<Vec<f64>>,
    /// Largest violation of the certificate conditions after normalization.
    pub violation: f64,
}

/// Solver output. Cone duals are stored per cone: vectors as is, PSD
/// blocks as the upper triangle packed column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    pub objective: f64,
    pub dual_objective: f64,
    pub x: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub cone_duals: Vec<Vec<f64>>,
    pub residuals: Residuals,
    pub iterations: usize,
    pub certificate: Option<Certificate>,
}
