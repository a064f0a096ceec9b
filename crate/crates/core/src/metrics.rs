//! Persistence scores, binary Shannon entropy, the no-intercept exponential
//! fit and the two-tailed Fisher exact test.

use serde::{Deserialize, Serialize};

use crate::formula::{coherence, Formula};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("input must not be empty")]
    EmptyInput,
    #[error("exponential fit needs at least two points")]
    TooFewPoints,
    #[error("exponential fit is degenerate: every kappa is zero")]
    Degenerate,
    #[error("persistence values must be > 0, got {0}")]
    Domain(f64),
    #[error("contingency table must contain at least one observation")]
    EmptyTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rate: f64,
    pub r_squared: f64,
}

/// 2×2 table laid out as `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Result<Self, MetricsError> {
        if a + b + c + d == 0 {
            return Err(MetricsError::EmptyTable);
        }
        Ok(ContingencyTable { a, b, c, d })
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }
}

/// π = Σ δ(φ) / |Γ|; an empty Γ scores 1.
pub fn persistence_score(gamma: &[Formula]) -> f64 {
    if gamma.is_empty() {
        return 1.0;
    }
    let coherent: usize = gamma.iter().map(|f| coherence(f) as usize).sum();
    coherent as f64 / gamma.len() as f64
}

/// Binary entropy in bits of the fraction of `true` entries.
pub fn shannon_entropy(bits: &[bool]) -> Result<f64, MetricsError> {
    if bits.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let p = bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64;
    Ok(binary_entropy(p))
}

pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Least squares for ln π = −rate·κ through the origin, with R² taken in
/// log space about the mean of ln π.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<FitResult, MetricsError> {
    if points.len() < 2 {
        return Err(MetricsError::TooFewPoints);
    }
    if let Some(&(_, bad)) = points.iter().find(|(_, pi)| pi.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
        return Err(MetricsError::Domain(bad));
    }
    let sxx: f64 = points.iter().map(|(k, _)| k * k).sum();
    if sxx == 0.0 {
        return Err(MetricsError::Degenerate);
    }
    let logs: Vec<f64> = points.iter().map(|(_, pi)| pi.ln()).collect();
    let sxy: f64 = points.iter().zip(&logs).map(|((k, _), l)| k * l).sum();
    let rate = -sxy / sxx;

    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let ss_tot: f64 = logs.iter().map(|l| (l - mean).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .zip(&logs)
        .map(|((k, _), l)| (l + rate * k).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(FitResult { rate, r_squared })
}

/// ln(k!) for k in 0..=n.
fn log_factorials(n: u64) -> Vec<f64> {
    let mut table = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    table.push(acc);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

const TIE_TOLERANCE: f64 = 1e-9;

/// Two-tailed exact p: total hypergeometric mass of every table with the
/// observed margins that is no more likely than the observed one.
pub fn fisher_exact_two_tailed(t: &ContingencyTable) -> f64 {
    let n = t.total();
    let row1 = t.a + t.b;
    let col1 = t.a + t.c;
    let row2 = n - row1;
    let lf = log_factorials(n);
    let fixed = lf[row1 as usize] + lf[row2 as usize] + lf[col1 as usize] + lf[(n - col1) as usize]
        - lf[n as usize];
    let log_p = |a: u64| {
        let b = row1 - a;
        let c = col1 - a;
        let d = row2 - c;
        fixed - lf[a as usize] - lf[b as usize] - lf[c as usize] - lf[d as usize]
    };
    let lo = col1.saturating_sub(row2);
    let hi = row1.min(col1);
    let observed = log_p(t.a);
    let cutoff = observed + TIE_TOLERANCE.ln_1p();
    let p: f64 = (lo..=hi)
        .map(log_p)
        .filter(|&lp| lp <= cutoff)
        .map(f64::exp)
        .sum();
    p.min(1.0)
}
