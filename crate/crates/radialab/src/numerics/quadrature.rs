//! Adaptive Gauss-Kronrod quadrature carried out in the log domain.
//!
//! Integrands here are densities of the form exp(phi(u)) whose values span
//! thousands of orders of magnitude across the domain, so every routine works
//! with the log-integrand phi directly and accumulates panel masses with a
//! running log-sum-exp. Two coordinate systems appear:
//!
//! * plain panels in u (an unbounded right tail is covered by panels whose
//!   widths double until their contributions provably stop mattering),
//! * a finite upper endpoint where the integrand vanishes like
//!   (hi - u)^b, mapped through v = (hi - u)^(b+1) which makes the leading
//!   behavior exactly constant near v = 0.
//!
//! All Kronrod nodes are interior, so endpoint singularities (log-integrand
//! -inf at u = 0 or u = hi) are never evaluated.

use crate::error::{Error, Result};

/// Incremental log-sum-exp accumulator: value() = log(sum exp(x_i)).
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    m: f64,
    s: f64,
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            m: f64::NEG_INFINITY,
            s: 0.0,
        }
    }

    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.m {
            self.s += (x - self.m).exp();
        } else {
            self.s = self.s * (self.m - x).exp() + 1.0;
            self.m = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.m == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.m + self.s.ln()
        }
    }
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

// 15-point Kronrod rule: positive abscissae (last entry is the center) and
// weights, plus the embedded 7-point Gauss weights. The Gauss nodes are the
// odd-indexed abscissae and the center.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Kronrod panel on [a, b] for a log-integrand. Returns
/// (log of the integral, log of the |K15 - G7| error estimate).
pub fn gk15_log<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    debug_assert!(a < b, "gk15_log needs a < b, got [{a}, {b}]");
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);

    let mut lf = [f64::NEG_INFINITY; 15];
    let mut m = f64::NEG_INFINITY;
    for (i, &x) in XGK.iter().enumerate() {
        let ls = f(c + h * x);
        check_value(ls, c + h * x)?;
        lf[i] = ls;
        m = m.max(ls);
        if x != 0.0 {
            let ls = f(c - h * x);
            check_value(ls, c - h * x)?;
            lf[7 + i + 1] = ls;
            m = m.max(ls);
        }
    }
    if m == f64::NEG_INFINITY {
        return Ok((f64::NEG_INFINITY, f64::NEG_INFINITY));
    }

    let mut sum_k = 0.0;
    let mut sum_g = 0.0;
    for i in 0..8 {
        let pair = if i < 7 {
            (lf[i] - m).exp() + (lf[8 + i] - m).exp()
        } else {
            (lf[7] - m).exp()
        };
        sum_k += WGK[i] * pair;
        if i % 2 == 1 || i == 7 {
            sum_g += WG[i / 2] * pair;
        }
    }

    let log_val = m + (h * sum_k).ln();
    let diff = (sum_k - sum_g).abs();
    let log_err = if diff == 0.0 {
        f64::NEG_INFINITY
    } else {
        m + (h * diff).ln()
    };
    Ok((log_val, log_err))
}

fn check_value(ls: f64, at: f64) -> Result<()> {
    if ls.is_nan() {
        return Err(Error::Domain(format!(
            "log-integrand returned NaN at u = {at:e}"
        )));
    }
    if ls == f64::INFINITY {
        return Err(Error::DivergentIntegral(format!(
            "log-integrand is +inf at u = {at:e}"
        )));
    }
    Ok(())
}

/// Wraps a u-space log-integrand into v-space, v = (u_star - u)^(b+1),
/// including the Jacobian. Near v = 0 a tail phi(u) ~ log a + b log(u_star-u)
/// turns into an exactly constant integrand.
pub fn boundary_log_integrand<'a, F: Fn(f64) -> f64>(
    f: &'a F,
    u_star: f64,
    b: f64,
) -> impl Fn(f64) -> f64 + 'a {
    let p = 1.0 / (b + 1.0);
    let log_jac = -(b + 1.0).ln();
    move |v: f64| {
        let u = u_star - v.powf(p);
        let mut l = f(u) + log_jac;
        if b != 0.0 {
            // (p - 1) log v, skipped for b = 0 where it is exactly zero
            // (and would otherwise produce 0 * -inf at v = 0).
            l += (p - 1.0) * v.ln();
        }
        l
    }
}

/// Log masses of consecutive cells: one Kronrod panel per cell, no
/// refinement, computed across workers since cells are independent.
/// `edges` must be strictly increasing with at least 2 entries.
pub fn cell_masses_log<F: Fn(f64) -> f64 + Sync>(f: &F, edges: &[f64]) -> Result<Vec<f64>> {
    assert!(edges.len() >= 2, "cell_masses_log needs at least one cell");
    crate::exec::map_indexed(edges.len() - 1, |i| {
        gk15_log(f, edges[i], edges[i + 1]).map(|(lv, _)| lv)
    })
    .into_iter()
    .collect()
}

/// Controls for [`integrate_log`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Location of the integrand maximum (used to place the initial window).
    pub peak: f64,
    /// Characteristic width of the integrand around the peak. With
    /// `endpoint_power` set this is instead the width of the boundary layer
    /// at the upper endpoint.
    pub width: f64,
    /// Target relative error on the integral.
    pub rel_tol: f64,
    /// Refinement budget; exceeded means `NonConvergence`.
    pub max_panels: usize,
    /// If the integrand vanishes like (hi - u)^b at a finite upper endpoint,
    /// the exponent b. The whole integral is then computed in v-space.
    pub endpoint_power: Option<f64>,
}

impl QuadOptions {
    pub fn new(peak: f64, width: f64) -> Self {
        QuadOptions {
            peak,
            width,
            rel_tol: 1e-12,
            max_panels: 4000,
            endpoint_power: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub log_value: f64,
    pub est_rel_error: f64,
    pub n_evals: usize,
}

#[derive(Clone, Copy, Debug)]
enum Seg {
    /// Plain u coordinate.
    U,
    /// Upper boundary: v = (u_star - u)^(b+1), v in [0, (u_star - lo)^(b+1)].
    V { u_star: f64, b: f64 },
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    seg: Seg,
    a: f64,
    b: f64,
    log_val: f64,
    log_err: f64,
}

fn eval_panel<F: Fn(f64) -> f64>(f: &F, seg: Seg, a: f64, b: f64) -> Result<(f64, f64)> {
    match seg {
        Seg::U => gk15_log(f, a, b),
        Seg::V { u_star, b: pow } => {
            let g = boundary_log_integrand(f, u_star, pow);
            gk15_log(&g, a, b)
        }
    }
}

/// Integral of exp(f) over [lo, hi] (hi may be +inf), returned as a log.
///
/// The initial panel layout is driven by `opts.peak` and `opts.width`: 32
/// uniform panels across peak +/- 40 widths, geometric flank panels outward
/// to the domain ends, and for hi = +inf a doubling tail chain that stops
/// once three consecutive panels fall below rel_tol / 10 of the running
/// total. Panels are then bisected worst-first until the summed |K15 - G7|
/// estimates drop below rel_tol relative to the total.
pub fn integrate_log<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    assert!(lo.is_finite() && lo >= 0.0, "lower limit must be finite and >= 0");
    assert!(hi > lo, "upper limit must exceed lower limit");
    assert!(
        opts.width.is_finite() && opts.width > 0.0,
        "width must be positive"
    );

    let mut panels: Vec<Panel> = Vec::new();
    let mut n_evals = 0usize;
    let push = |panels: &mut Vec<Panel>, seg: Seg, a: f64, b: f64, n: &mut usize| -> Result<f64> {
        let (lv, le) = eval_panel(f, seg, a, b)?;
        *n += 15;
        panels.push(Panel {
            seg,
            a,
            b,
            log_val: lv,
            log_err: le,
        });
        Ok(lv)
    };

    if let Some(pow) = opts.endpoint_power {
        assert!(hi.is_finite(), "endpoint_power requires a finite upper limit");
        assert!(pow >= 0.0, "endpoint exponent must be >= 0");
        // Whole integral in v-space: geometric chain from v_max down to the
        // scale of the boundary layer, then one panel to v = 0. The sliver
        // of u-space left beyond the chain holds < e^-40 of the mass.
        let v_max = (hi - lo).powf(pow + 1.0);
        let layer = opts.width.min(hi - lo);
        let v_stop = layer.powf(pow + 1.0) * (-40.0f64).exp();
        let seg = Seg::V { u_star: hi, b: pow };
        let mut v_hi = v_max;
        while v_hi / 2.0 > v_stop {
            let v_lo = v_hi / 2.0;
            push(&mut panels, seg, v_lo, v_hi, &mut n_evals)?;
            v_hi = v_lo;
        }
        push(&mut panels, seg, 0.0, v_hi, &mut n_evals)?;
    } else {
        let w_lo = (opts.peak - 40.0 * opts.width).max(lo);
        let mut w_hi = opts.peak + 40.0 * opts.width;
        if hi.is_finite() {
            w_hi = w_hi.min(hi);
        }
        if !(w_hi > w_lo) {
            // Peak sits outside the domain; fall back to a window at the
            // near edge.
            w_hi = if hi.is_finite() {
                hi.min(w_lo + 80.0 * opts.width)
            } else {
                w_lo + 80.0 * opts.width
            };
        }
        let step = (w_hi - w_lo) / 32.0;
        for i in 0..32 {
            let a = w_lo + step * i as f64;
            let b = if i == 31 { w_hi } else { w_lo + step * (i + 1) as f64 };
            push(&mut panels, Seg::U, a, b, &mut n_evals)?;
        }
        // Left flank: panel widths double moving away from the window.
        let mut width = step;
        let mut cur = w_lo;
        while cur > lo {
            let a = (cur - width).max(lo);
            push(&mut panels, Seg::U, a, cur, &mut n_evals)?;
            cur = a;
            width *= 2.0;
        }
        if hi.is_finite() {
            // Right flank to the endpoint.
            let mut width = step;
            let mut cur = w_hi;
            while cur < hi {
                let b = (cur + width).min(hi);
                push(&mut panels, Seg::U, cur, b, &mut n_evals)?;
                cur = b;
                width *= 2.0;
            }
        } else {
            // Tail chain toward +inf: plain u-panels whose widths double
            // each step, stopping once three consecutive panels fall below
            // rel_tol / 10 of the running total.
            let mut total = LogSum::new();
            for p in &panels {
                total.add(p.log_val);
            }
            let mut cur = w_hi;
            let mut width = opts.width.max(step);
            let mut small_run = 0;
            let mut recent: Vec<f64> = Vec::new();
            const MAX_TAIL: usize = 300;
            for k in 0..MAX_TAIL {
                let b = cur + width;
                let lv = push(&mut panels, Seg::U, cur, b, &mut n_evals)?;
                cur = b;
                width *= 2.0;
                total.add(lv);
                recent.push(lv);
                let cutoff = total.value() + (opts.rel_tol / 10.0).ln();
                if lv < cutoff {
                    small_run += 1;
                    if small_run >= 3 {
                        break;
                    }
                } else {
                    small_run = 0;
                }
                let n = recent.len();
                let growing = n >= 16
                    && recent[n - 8..].windows(2).all(|w| w[1] >= w[0])
                    && lv > total.value() + opts.rel_tol.ln();
                if growing || k + 1 == MAX_TAIL {
                    return Err(Error::DivergentIntegral(format!(
                        "tail mass does not decay (panel {k} near u = {cur:e} \
                         still contributes {:.3e} of the running total)",
                        (lv - total.value()).exp()
                    )));
                }
            }
        }
    }

    // Worst-first bisection until the error estimate meets rel_tol.
    loop {
        let mut tot = LogSum::new();
        let mut err = LogSum::new();
        for p in &panels {
            tot.add(p.log_val);
            err.add(p.log_err);
        }
        let log_tot = tot.value();
        if log_tot == f64::NEG_INFINITY {
            return Ok(QuadResult {
                log_value: f64::NEG_INFINITY,
                est_rel_error: 0.0,
                n_evals,
            });
        }
        let rel = (err.value() - log_tot).exp();
        if rel <= opts.rel_tol {
            return Ok(QuadResult {
                log_value: log_tot,
                est_rel_error: rel,
                n_evals,
            });
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::NonConvergence(format!(
                "error estimate {rel:.3e} above target {:.3e} after {} panels",
                opts.rel_tol,
                panels.len()
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.log_err.total_cmp(&b.1.log_err))
            .expect("panel list is never empty");
        let Panel { seg, a, b, .. } = panels[worst];
        let mid = 0.5 * (a + b);
        if !(a < mid && mid < b) {
            // Panel too narrow to split; its error estimate is noise.
            panels[worst].log_err = f64::NEG_INFINITY;
            continue;
        }
        let (lv1, le1) = eval_panel(f, seg, a, mid)?;
        let (lv2, le2) = eval_panel(f, seg, mid, b)?;
        n_evals += 30;
        panels[worst] = Panel {
            seg,
            a,
            b: mid,
            log_val: lv1,
            log_err: le1,
        };
        panels.push(Panel {
            seg,
            a: mid,
            b,
            log_val: lv2,
            log_err: le2,
        });
    }
}
