//! Binomial point estimates with Clopper-Pearson intervals and the
//! theoretical bound they are compared against.

use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

/// A bound is reported as vacuous when it exceeds 1 (no information) or
/// underflows any representable probability.
pub const VACUOUS_FLOOR_LOG10: f64 = -300.0;

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloEstimate {
    pub hits: u64,
    pub trials: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The comparison bound as a probability; 0 when it underflows f64.
    pub bound: f64,
    /// log10 of the bound, always finite and exact.
    pub bound_log10: f64,
    pub vacuous: bool,
    /// Plain-language statement of the bounded claim.
    pub bound_ref: String,
}

impl MonteCarloEstimate {
    /// 95% Clopper-Pearson interval around hits/trials, compared against a
    /// bound given in log10.
    pub fn new(hits: u64, trials: u64, bound_log10: f64, bound_ref: &str) -> Self {
        assert!(trials > 0, "estimates need at least one trial");
        assert!(hits <= trials);
        let (ci_low, ci_high) = clopper_pearson(hits, trials, 0.95);
        MonteCarloEstimate {
            hits,
            trials,
            point: hits as f64 / trials as f64,
            ci_low,
            ci_high,
            bound: 10f64.powf(bound_log10),
            bound_log10,
            vacuous: bound_log10 > 0.0 || bound_log10 < VACUOUS_FLOOR_LOG10,
            bound_ref: bound_ref.to_string(),
        }
    }

    /// The empirical estimate respects the bound (trivially true when the
    /// bound is vacuous above 1).
    pub fn within_bound(&self) -> bool {
        self.point <= self.bound || self.bound_log10 >= 0.0
    }
}

/// Exact binomial (Clopper-Pearson) confidence bounds.
pub fn clopper_pearson(hits: u64, trials: u64, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let (h, n) = (hits as f64, trials as f64);
    let low = if hits == 0 {
        0.0
    } else {
        Beta::new(h, n - h + 1.0)
            .expect("valid Beta shape")
            .inverse_cdf(alpha / 2.0)
    };
    let high = if hits == trials {
        1.0
    } else {
        Beta::new(h + 1.0, n - h)
            .expect("valid Beta shape")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (low, high)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_orders_and_contains_point() {
        for (h, n) in [(0u64, 50u64), (1, 50), (25, 50), (49, 50), (50, 50)] {
            let e = MonteCarloEstimate::new(h, n, -1.0, "test");
            assert!(0.0 <= e.ci_low && e.ci_low <= e.point);
            assert!(e.point <= e.ci_high && e.ci_high <= 1.0);
        }
    }

    #[test]
    fn zero_hit_upper_bound_formula() {
        // with 0 hits the 97.5% upper bound is 1 - (alpha/2)^{1/n}
        let n = 2000u64;
        let (_, high) = clopper_pearson(0, n, 0.95);
        let expect = 1.0 - (0.025f64).powf(1.0 / n as f64);
        assert!(
            (high - expect).abs() < 1e-6,
            "{high} vs {expect} (inverse beta precision)"
        );
        assert!(high < 0.02);
    }

    #[test]
    fn vacuous_flags() {
        assert!(MonteCarloEstimate::new(1, 10, 0.7, "x").vacuous, "bound > 1");
        assert!(MonteCarloEstimate::new(1, 10, -350.0, "x").vacuous, "underflow");
        let ok = MonteCarloEstimate::new(1, 10, -1.0, "x");
        assert!(!ok.vacuous);
        assert!((ok.bound - 0.1).abs() < 1e-15);
    }
}
