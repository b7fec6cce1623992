//! Evaluation grids, linear or logarithmic.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// A finite grid of evaluation points on [lo, hi].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn linear(lo: f64, hi: f64, n: usize) -> Self {
        GridSpec {
            lo,
            hi,
            n,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(lo: f64, hi: f64, n: usize) -> Self {
        GridSpec {
            lo,
            hi,
            n,
            spacing: Spacing::Log,
        }
    }

    /// Materializes the grid. Endpoints are hit exactly.
    pub fn points(&self) -> Vec<f64> {
        assert!(self.n >= 2, "grid needs at least two points");
        assert!(
            self.lo < self.hi && self.lo.is_finite() && self.hi.is_finite(),
            "grid bounds must be finite with lo < hi"
        );
        if self.spacing == Spacing::Log {
            assert!(self.lo > 0.0, "log grid needs lo > 0");
        }
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            let p = match self.spacing {
                Spacing::Linear => self.lo + t * (self.hi - self.lo),
                Spacing::Log => (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp(),
            };
            out.push(p);
        }
        out[0] = self.lo;
        out[n - 1] = self.hi;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_grid_endpoints_and_spacing() {
        let g = GridSpec::linear(1.0, 3.0, 5).points();
        assert_eq!(g, vec![1.0, 1.5, 2.0, 2.5, 3.0]);
    }

    #[test]
    fn log_grid_has_constant_ratio() {
        let g = GridSpec::log(1.0, 1e6, 7).points();
        assert_eq!(g[0], 1.0);
        assert_eq!(g[6], 1e6);
        for w in g.windows(2) {
            assert!((w[1] / w[0] - 10.0).abs() < 1e-9, "ratio {}", w[1] / w[0]);
        }
    }
}
