//! Shape-preserving cubic interpolation (Fritsch-Carlson / PCHIP).
//!
//! Used for CDF tables and their inverses, where overshoot would produce
//! out-of-order quantiles. Node derivatives are the weighted harmonic means
//! of adjacent secant slopes, zeroed at local extrema, which guarantees the
//! interpolant is monotone wherever the data are.

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant. `x` must be strictly increasing and at least
    /// 2 points long; `x` and `y` must have equal lengths.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len(), "x and y length mismatch");
        assert!(x.len() >= 2, "need at least two nodes");
        assert!(
            x.windows(2).all(|w| w[0] < w[1]),
            "x must be strictly increasing"
        );
        let n = x.len();
        let mut h = vec![0.0; n - 1];
        let mut s = vec![0.0; n - 1];
        for i in 0..n - 1 {
            h[i] = x[i + 1] - x[i];
            s[i] = (y[i + 1] - y[i]) / h[i];
        }
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = s[0];
            d[1] = s[0];
        } else {
            d[0] = endpoint_slope(h[0], h[1], s[0], s[1]);
            d[n - 1] = endpoint_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
            for i in 1..n - 1 {
                if s[i - 1] * s[i] <= 0.0 {
                    d[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
                }
            }
        }
        MonotoneCubic { x, y, d }
    }

    /// Builds the interpolant from known node derivatives, clamped into the
    /// Fritsch-Carlson monotone region (0 <= d_i <= 3 min of the adjacent
    /// secant slopes, for nondecreasing data). Where the grid resolves the
    /// function the clamp never engages and the interpolant keeps the full
    /// fourth-order accuracy of exact-slope Hermite cubics.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, mut d: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len(), "x and y length mismatch");
        assert_eq!(x.len(), d.len(), "x and d length mismatch");
        assert!(x.len() >= 2, "need at least two nodes");
        assert!(
            x.windows(2).all(|w| w[0] < w[1]),
            "x must be strictly increasing"
        );
        let n = x.len();
        let slope = |i: usize| (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        for i in 0..n {
            let left = if i > 0 { slope(i - 1) } else { f64::INFINITY };
            let right = if i + 1 < n { slope(i) } else { f64::INFINITY };
            let cap = 3.0 * left.min(right);
            d[i] = d[i].clamp(0.0, cap.max(0.0));
        }
        MonotoneCubic { x, y, d }
    }

    pub fn min_x(&self) -> f64 {
        self.x[0]
    }

    pub fn max_x(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Evaluates the interpolant, clamping to the end values outside the
    /// node range.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.x[0] {
            return self.y[0];
        }
        let n = self.x.len();
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(k) => return self.y[k],
            Err(k) => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let r = (t - self.x[i]) / h;
        let r2 = r * r;
        let r3 = r2 * r;
        let h00 = 2.0 * r3 - 3.0 * r2 + 1.0;
        let h10 = r3 - 2.0 * r2 + r;
        let h01 = -2.0 * r3 + 3.0 * r2;
        let h11 = r3 - r2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

/// One-sided three-point endpoint derivative with the standard PCHIP
/// clipping rules.
fn endpoint_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let mut d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        d = 0.0;
    } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
        d = 3.0 * s0;
    }
    d
}
