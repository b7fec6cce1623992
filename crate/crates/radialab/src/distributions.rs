//! Magnitude laws: the distribution of |X| when X is drawn from the radial
//! density c_d psi(|x|) on R^(d+1).
//!
//! The magnitude U = |X| has density c_d u^d psi(u) on the half-line, with
//! 1/c_d = int_0^inf u^d psi(u) du. Everything is computed in log space:
//! u^d psi(u) spans thousands of orders of magnitude long before d gets
//! interesting. A law owns a self-normalized cdf table (about 4k nodes
//! concentrated where the mass is) plus the exact normalizer from adaptive
//! quadrature, so pdf, cdf and quantile evaluations are table lookups with
//! a short polish, never fresh integrals.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::grid::GridSpec;
use crate::numerics::interp::MonotoneCubic;
use crate::numerics::quadrature::{
    boundary_log_integrand, cell_masses_log, gk15_log, integrate_log, LogSum, QuadOptions,
};
use crate::numerics::roots::find_root_increasing;
use crate::numerics::special::{gamma_cdf, ln_beta, normal_cdf, normal_quantile};
use crate::shapes::{ShapeSpec, Support};

/// Node count in the core of the cdf table.
const N_CORE: usize = 4096;

/// d ln u + log psi(u), the log magnitude density up to normalization.
/// The d = 0 branch avoids 0 * ln(0) at the origin.
fn log_integrand<'a>(shape: &'a ShapeSpec, d: f64) -> impl Fn(f64) -> f64 + 'a {
    move |u: f64| {
        if d == 0.0 {
            shape.log_psi(u)
        } else if u <= 0.0 {
            f64::NEG_INFINITY
        } else {
            d * u.ln() + shape.log_psi(u)
        }
    }
}

/// The magnitude distribution for one shape at one dimension parameter.
#[derive(Debug, Clone)]
pub struct RadialLaw {
    shape: ShapeSpec,
    d: f64,
    log_inv_cd: f64,
    u_d: f64,
    nu_d: Option<f64>,
    grid: Vec<f64>,
    cdf_at: Vec<f64>,
    cdf_interp: MonotoneCubic,
    inv_interp: MonotoneCubic,
}

/// Builds the law of U for `shape` at dimension parameter `d`: solves for
/// the concentration radius, integrates the normalizer to relative accuracy
/// `tol` (or better), and tabulates the cdf.
///
/// Fails with `BracketFailure` when the concentration radius cannot be
/// bracketed (tails too heavy for L to reach d) and `DivergentIntegral`
/// when the normalizing integral itself grows without bound.
pub fn build_law(shape: &ShapeSpec, d: f64, tol: f64) -> Result<RadialLaw> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Config(format!(
            "dimension parameter must be finite and >= 0, got {d}"
        )));
    }
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::Config(format!(
            "tolerance must be in (0, 1e-2], got {tol}"
        )));
    }
    // The log integrand carries a d ln u term, so its evaluations have
    // absolute noise of order d * eps; the error estimate cannot fall below
    // that floor no matter how many panels are spent.
    let rel = tol.min(1e-12).max(4e-15).max(d * 1e-16);
    let g = log_integrand(shape, d);

    match shape.support() {
        Support::Compact { u_star, .. } => {
            let tail = match shape.tail_params() {
                Ok(t) => Some(t),
                Err(Error::MissingTail) => None,
                Err(e) => return Err(e),
            };
            let mut opts = QuadOptions::new(u_star, u_star / (d + 1.0));
            opts.rel_tol = rel;
            opts.endpoint_power = tail.map(|(_, b, _)| b);
            let s = integrate_log(&g, 0.0, u_star, &opts)?;
            let b_pow = tail.map(|(_, b, _)| b).unwrap_or(0.0);
            let (grid, cdf_at, table_total) = compact_table(&g, u_star, b_pow)?;
            finish(shape, d, s.log_value, u_star, None, grid, cdf_at, table_total)
        }
        Support::NonCompact { regular_from } => {
            let big_l = |u: f64| shape.big_l(u);
            let guess = regular_from.max(1.0);
            let (u_d, nu, peak, width) = if d == 0.0 {
                // No concentration: the density is monotone decreasing.
                // The decay scale of psi itself (where L reaches 1) sizes
                // the table.
                let u_scale = find_root_increasing(&big_l, 1.0, guess)?;
                (0.0, 0.0, 0.0, u_scale)
            } else {
                let u_d = find_root_increasing(&big_l, d, guess)?;
                let nu = u_d * shape.big_l_prime(u_d);
                if !(nu > 0.0 && nu.is_finite()) {
                    return Err(Error::Domain(format!(
                        "concentration scale u L'(u) = {nu} at u = {u_d}; \
                         the magnitude law is not concentrating"
                    )));
                }
                (u_d, nu, u_d, u_d / nu.sqrt())
            };
            let mut opts = QuadOptions::new(peak, width);
            opts.rel_tol = rel;
            let s = integrate_log(&g, 0.0, f64::INFINITY, &opts)?;
            let (grid, cdf_at, table_total) =
                noncompact_table(&g, d, u_d, nu, width, s.log_value)?;
            finish(shape, d, s.log_value, u_d, Some(nu), grid, cdf_at, table_total)
        }
    }
}

/// Table for a compact shape: log-spaced in v = (u_star - u)^(b+1) from the
/// full support down to a boundary sliver of relative size 3e-13, then one
/// closing node exactly at u_star. This resolves the boundary layer (where
/// the mass piles up as d grows) at every d without retuning.
fn compact_table<F: Fn(f64) -> f64 + Sync>(
    g: &F,
    u_star: f64,
    b: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let p = 1.0 / (b + 1.0);
    let delta_min = 3e-13 * u_star;
    let v_hi = u_star.powf(b + 1.0);
    let lr = (v_hi / delta_min.powf(b + 1.0)).ln();

    // v decreases as u increases: index k walks u upward.
    let v_at = |k: usize| v_hi * (-lr * k as f64 / (N_CORE - 1) as f64).exp();
    let mut grid = Vec::with_capacity(N_CORE + 1);
    for k in 0..N_CORE {
        grid.push((u_star - v_at(k).powf(p)).max(0.0));
    }
    grid.push(u_star);

    let vb = boundary_log_integrand(g, u_star, b);
    let masses: Vec<f64> = exec::map_indexed(N_CORE, |k| {
        // u-cell [grid[k], grid[k+1]] is v-cell [v(k+1), v(k)]; the last
        // u-cell reaches the support edge, i.e. v = 0.
        let v_lo = if k == N_CORE - 1 { 0.0 } else { v_at(k + 1) };
        gk15_log(&vb, v_lo, v_at(k)).map(|(m, _)| m)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    Ok(assemble(grid, masses, f64::NEG_INFINITY, f64::NEG_INFINITY))
}

/// Table for a non-compact shape: a linear grid across the concentration
/// window u_d * [1 - 12/sqrt(nu), 1 + 12/sqrt(nu)] (absolute coordinates
/// near zero when d is small), padded geometrically on the left until the
/// untabulated head holds under 1e-13 of the mass and on the right until
/// the remaining tail integral is under 5e-13 of it.
fn noncompact_table<F: Fn(f64) -> f64 + Sync>(
    g: &F,
    d: f64,
    u_d: f64,
    nu: f64,
    width: f64,
    log_s: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let mut edges: Vec<f64> = if d > 0.0 {
        let rn = nu.sqrt();
        let r_hi = 1.0 + 12.0 / rn;
        let r_lo = (1.0 - 12.0 / rn).max(1e-3);
        (0..N_CORE)
            .map(|i| u_d * (r_lo + (r_hi - r_lo) * i as f64 / (N_CORE - 1) as f64))
            .collect()
    } else {
        (0..N_CORE)
            .map(|i| 12.0 * width * i as f64 / (N_CORE - 1) as f64)
            .collect()
    };
    let mut masses = cell_masses_log(g, &edges)?;

    let head_floor = 1e-13f64.ln() + log_s;
    let mut below = if edges[0] > 0.0 {
        gk15_log(g, 0.0, edges[0])?.0
    } else {
        f64::NEG_INFINITY
    };
    let mut guard = 0;
    while below > head_floor {
        let first = edges[0];
        let half = first / 2.0;
        let (m, _) = gk15_log(g, half, first)?;
        edges.insert(0, half);
        masses.insert(0, m);
        below = gk15_log(g, 0.0, half)?.0;
        guard += 1;
        if guard > 900 {
            return Err(Error::NonConvergence(
                "table padding failed to localize the lower tail of the magnitude law".into(),
            ));
        }
    }

    let tail_floor = 5e-13f64.ln() + log_s;
    let mut step = width.max(edges[edges.len() - 1] - edges[edges.len() - 2]);
    let mut guard = 0;
    let above = loop {
        let last = *edges.last().unwrap();
        let mut topts = QuadOptions::new(last, step);
        topts.rel_tol = 1e-6;
        let t = integrate_log(g, last, f64::INFINITY, &topts)?.log_value;
        if t <= tail_floor {
            break t;
        }
        for _ in 0..8 {
            let last = *edges.last().unwrap();
            let next = last + step;
            let (m, _) = gk15_log(g, last, next)?;
            edges.push(next);
            masses.push(m);
            step *= 1.5;
        }
        guard += 1;
        if guard > 40 {
            return Err(Error::NonConvergence(
                "table padding failed to exhaust the upper tail of the magnitude law".into(),
            ));
        }
    };

    Ok(assemble(edges, masses, below, above))
}

/// Self-normalized cumulative sums: cdf_i = (head + m_1 + ... + m_i) /
/// (head + all masses + tail), all in log space. When the tail remainder is
/// exactly -inf the last entry is exactly 1. Also returns the log of the
/// table's own normalizer, for slope (pdf) data consistent with the table.
fn assemble(
    edges: Vec<f64>,
    masses: Vec<f64>,
    below: f64,
    above: f64,
) -> (Vec<f64>, Vec<f64>, f64) {
    let mut total = LogSum::new();
    total.add(below);
    for &m in &masses {
        total.add(m);
    }
    total.add(above);
    let log_total = total.value();

    let mut cum = LogSum::new();
    cum.add(below);
    let mut cdf_at = Vec::with_capacity(edges.len());
    cdf_at.push((cum.value() - log_total).exp());
    for &m in &masses {
        cum.add(m);
        cdf_at.push((cum.value() - log_total).exp());
    }
    (edges, cdf_at, log_total)
}

fn finish(
    shape: &ShapeSpec,
    d: f64,
    log_inv_cd: f64,
    u_d: f64,
    nu_d: Option<f64>,
    grid: Vec<f64>,
    mut cdf_at: Vec<f64>,
    log_table_total: f64,
) -> Result<RadialLaw> {
    let mut prev = 0.0;
    for v in cdf_at.iter_mut() {
        *v = v.clamp(0.0, 1.0).max(prev);
        prev = *v;
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::NonConvergence(format!(
                "cdf table nodes failed to stay strictly increasing near u = {:e}",
                w[0]
            )));
        }
    }
    // The cdf derivative at each node is the (table-normalized) pdf, known
    // exactly; Hermite cubics with these slopes interpolate the cdf an
    // order better than slope estimation would.
    let g = log_integrand(shape, d);
    let slopes: Vec<f64> = grid
        .iter()
        .map(|&u| {
            let lp = g(u) - log_table_total;
            if lp.is_nan() {
                0.0
            } else {
                lp.exp()
            }
        })
        .collect();
    let cdf_interp = MonotoneCubic::with_slopes(grid.clone(), cdf_at.clone(), slopes);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (i, &f) in cdf_at.iter().enumerate() {
        if f > last {
            xs.push(f);
            ys.push(grid[i]);
            last = f;
        }
    }
    let inv_interp = MonotoneCubic::new(xs, ys);
    Ok(RadialLaw {
        shape: shape.clone(),
        d,
        log_inv_cd,
        u_d,
        nu_d,
        grid,
        cdf_at,
        cdf_interp,
        inv_interp,
    })
}

impl RadialLaw {
    pub fn shape(&self) -> &ShapeSpec {
        &self.shape
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// log of 1/c_d, the normalizing integral.
    pub fn log_inv_cd(&self) -> f64 {
        self.log_inv_cd
    }

    /// Concentration radius: the root of L(u) = d for non-compact shapes,
    /// the support end for compact ones.
    pub fn u_d(&self) -> f64 {
        self.u_d
    }

    /// nu_d = u_d L'(u_d); present exactly for non-compact shapes. The
    /// magnitude fluctuates at relative scale 1/sqrt(nu_d).
    pub fn nu_d(&self) -> Option<f64> {
        self.nu_d
    }

    /// Radii of the cdf table nodes, strictly increasing.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Cdf values at the table nodes.
    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf_at
    }

    /// log of the magnitude density c_d u^d psi(u); -inf off the support.
    pub fn log_pdf(&self, u: f64) -> f64 {
        if u < 0.0 {
            return f64::NEG_INFINITY;
        }
        let lp = self.shape.log_psi(u);
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let power = if self.d == 0.0 {
            0.0
        } else if u == 0.0 {
            return f64::NEG_INFINITY;
        } else {
            self.d * u.ln()
        };
        power + lp - self.log_inv_cd
    }

    /// P(U <= u). Below the first table node the head mass is distributed
    /// by the exact leading power u^(d+1), so cdf(0) = 0.
    pub fn cdf(&self, u: f64) -> f64 {
        let first = self.grid[0];
        let last = *self.grid.last().unwrap();
        if u <= first {
            if u <= 0.0 || first <= 0.0 {
                return if u >= first { self.cdf_at[0] } else { 0.0 };
            }
            return self.cdf_at[0] * (u / first).powf(self.d + 1.0);
        }
        if u >= last {
            return if self.shape.is_compact() {
                1.0
            } else {
                *self.cdf_at.last().unwrap()
            };
        }
        self.cdf_interp.eval(u).clamp(0.0, 1.0)
    }

    /// Inverse cdf. quantile(0) = 0; quantile(1) is the support end for
    /// compact shapes and the table end (which carries all but < 1e-12 of
    /// the mass) otherwise. Interior values are polished until the table
    /// cdf matches p to 1e-13.
    pub fn quantile(&self, pr: f64) -> f64 {
        assert!(
            (0.0..=1.0).contains(&pr),
            "probability out of range: {pr}"
        );
        if pr <= 0.0 {
            return 0.0;
        }
        let f0 = self.cdf_at[0];
        if pr <= f0 {
            // Invert the head power law.
            return self.grid[0] * (pr / f0).powf(1.0 / (self.d + 1.0));
        }
        let f_end = *self.cdf_at.last().unwrap();
        if pr >= f_end {
            return *self.grid.last().unwrap();
        }
        let idx = self.cdf_at.partition_point(|&f| f < pr);
        let (mut lo, mut hi) = (self.grid[idx - 1], self.grid[idx]);
        let mut x = self.inv_interp.eval(pr).clamp(lo, hi);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let mut x_prev = lo;
        let mut f_prev = self.cdf(lo) - pr;
        for _ in 0..80 {
            let fx = self.cdf(x) - pr;
            if fx.abs() <= 1e-13 {
                return x;
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let denom = fx - f_prev;
            let mut next = if denom != 0.0 {
                x - fx * (x - x_prev) / denom
            } else {
                f64::NAN
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            x_prev = x;
            f_prev = fx;
            x = next;
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                return x;
            }
        }
        x
    }

    /// Maximizer of the magnitude density; defined for non-compact shapes,
    /// where it coincides with the concentration radius.
    pub fn mode_radius(&self) -> Result<f64> {
        match self.shape.support() {
            Support::NonCompact { .. } => Ok(self.u_d),
            Support::Compact { .. } => Err(Error::Domain(
                "mode_radius applies to shapes on the whole half-line; a compact \
                 law piles up at its support end instead"
                    .into(),
            )),
        }
    }

    /// nu_d as a checked accessor.
    pub fn concentration_scale(&self) -> Result<f64> {
        self.nu_d.ok_or_else(|| {
            Error::Domain("concentration_scale applies to non-compact laws".into())
        })
    }

    /// Closed-form approximation of log(1/c_d):
    /// compact    log a + log B(d+1, b+1) + (d+b+1) log u_star,
    /// non-compact 0.5 log(2 pi / nu_d) + (d+1) log u_d + log psi(u_d).
    pub fn asym_log_inv_cd(&self) -> Result<f64> {
        match self.shape.support() {
            Support::Compact { .. } => {
                let (a, b, u_star) = self.shape.tail_params()?;
                Ok(a.ln() + ln_beta(self.d + 1.0, b + 1.0) + (self.d + b + 1.0) * u_star.ln())
            }
            Support::NonCompact { .. } => {
                let nu = self.nu_d.expect("non-compact laws always carry nu");
                if !(nu > 0.0) {
                    return Err(Error::Domain(
                        "the Laplace approximation needs a concentration point (d >= 1)".into(),
                    ));
                }
                Ok(0.5 * (2.0 * PI / nu).ln()
                    + (self.d + 1.0) * self.u_d.ln()
                    + self.shape.log_psi(self.u_d))
            }
        }
    }

    /// The weak limit of the standardized magnitude, together with the
    /// standardization map:
    /// compact    t = d (u_star - U)      => Gamma(b+1, rate 1/u_star),
    /// non-compact t = sqrt(nu_d) (U/u_d - 1) => N(0, 1).
    ///
    /// Compact shapes must declare their boundary power data; non-compact
    /// shapes must pass the decay regularity checks on a wide default grid.
    pub fn limit_law(&self) -> Result<LimitLaw> {
        match self.shape.support() {
            Support::Compact { .. } => {
                let (_a, b, u_star) = self.shape.tail_params()?;
                Ok(LimitLaw {
                    family: LimitFamily::Gamma {
                        shape: b + 1.0,
                        rate: 1.0 / u_star,
                    },
                    scale: -self.d,
                    shift: self.d * u_star,
                })
            }
            Support::NonCompact { regular_from } => {
                let lo = regular_from.max(1.0);
                let report = self
                    .shape
                    .check_regularity(&GridSpec::log(lo, lo * 1e6, 1024));
                if !report.passes() {
                    return Err(Error::RegularityFailure(report.notes.join("; ")));
                }
                let nu = self.nu_d.expect("non-compact laws always carry nu");
                if !(nu > 0.0) {
                    return Err(Error::Domain(
                        "no Gaussian limit at d = 0: the law does not concentrate".into(),
                    ));
                }
                let rn = nu.sqrt();
                Ok(LimitLaw {
                    family: LimitFamily::StandardNormal,
                    scale: rn / self.u_d,
                    shift: -rn,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitFamily {
    /// Gamma with the given shape and rate (density r^k t^(k-1) e^(-rt) / Gamma(k)).
    Gamma { shape: f64, rate: f64 },
    StandardNormal,
}

/// A weak limit plus the affine standardization t = scale * u + shift that
/// carries magnitudes onto it.
#[derive(Debug, Clone, Copy)]
pub struct LimitLaw {
    pub family: LimitFamily,
    pub scale: f64,
    pub shift: f64,
}

impl LimitLaw {
    pub fn standardize(&self, u: f64) -> f64 {
        self.shift + self.scale * u
    }

    /// Radius mapping to the standardized value t.
    pub fn unstandardize(&self, t: f64) -> f64 {
        (t - self.shift) / self.scale
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self.family {
            LimitFamily::Gamma { shape, rate } => gamma_cdf(t, shape, rate),
            LimitFamily::StandardNormal => normal_cdf(t),
        }
    }

    /// Quantile of the limit family; p must be interior for the Gamma case.
    pub fn quantile(&self, p: f64) -> f64 {
        match self.family {
            LimitFamily::StandardNormal => normal_quantile(p),
            LimitFamily::Gamma { shape, rate } => {
                assert!(p > 0.0 && p < 1.0, "gamma quantile needs interior p");
                let f = |t: f64| gamma_cdf(t, shape, rate);
                find_root_increasing(&f, p, shape / rate)
                    .expect("gamma cdf is increasing onto (0,1)")
            }
        }
    }
}

/// Leading-order concentration radius for the profile
/// Lambda(u) = c log(u+a)^alpha (u+b)^beta:
/// u_d ~ c^(-1/beta) beta^((alpha-1)/beta) (log d)^(-alpha/beta) d^(1/beta).
/// Exact already for alpha = 0, b = 0; needs d > 1 so log d is positive.
pub fn example1_ud_asymptotic(c: f64, alpha: f64, beta: f64, d: f64) -> f64 {
    assert!(d > 1.0, "the expansion needs d > 1, got {d}");
    assert!(
        c > 0.0 && beta > 0.0,
        "profile parameters out of range: c = {c}, beta = {beta}"
    );
    c.powf(-1.0 / beta)
        * beta.powf((alpha - 1.0) / beta)
        * d.ln().powf(-alpha / beta)
        * d.powf(1.0 / beta)
}
