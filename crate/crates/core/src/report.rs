use serde::{Deserialize, Serialize};

/// Outcome of one identity check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub identity: String,
    pub params: Vec<i64>,
    pub lhs: String,
    pub rhs: String,
    pub abs_diff: f64,
    pub tol: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(identity: &str, params: Vec<i64>, lhs: String, rhs: String, abs_diff: f64, tol: f64) -> Self {
        VerificationReport { identity: identity.to_string(), params, lhs, rhs, abs_diff, tol, pass: abs_diff < tol }
    }
}

/// Worst-case summary of a list of reports.
pub fn summarize(reports: &[VerificationReport]) -> (usize, usize, f64) {
    let failed = reports.iter().filter(|r| !r.pass).count();
    let worst = reports.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    (reports.len(), failed, worst)
}
