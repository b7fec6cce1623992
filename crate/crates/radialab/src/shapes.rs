//! Radial profiles psi and their growth functions.
//!
//! A shape is the profile psi of a radial density f(x) = c_d psi(|x|),
//! specified through log psi so that u^d psi(u) stays computable at d = 10^6.
//! For non-compact profiles the decay is analyzed through
//!
//!   Lambda(u) = -log psi(u),  L(u) = u Lambda'(u),  M(u) = L(u) / log u,
//!
//! and the magnitude law concentrates at u_d = L^{-1}(d) with relative scale
//! 1/sqrt(nu_d), nu_d = u_d L'(u_d). Compact profiles instead declare their
//! power behavior a*(u_star - u)^b at the support edge.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::grid::GridSpec;

/// Power behavior of the profile at the upper support endpoint:
/// psi(u) ~ a * (u_star - u)^b as u -> u_star.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTail {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// psi positive on [0, u_star], zero beyond. The boundary power data is
    /// declared by the shape author, never estimated.
    Compact {
        u_star: f64,
        tail: Option<PowerTail>,
    },
    /// psi positive on the whole half-line. `regular_from` is a radius
    /// beyond which log psi is smooth and L, M are trusted (safely past any
    /// log-sign issues in the profile's formula).
    NonCompact { regular_from: f64 },
}

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An immutable radial profile. Cheap to clone; safe to share across
/// threads.
#[derive(Clone)]
pub struct ShapeSpec {
    id: String,
    support: Support,
    log_psi: ProfileFn,
    lambda_prime: Option<ProfileFn>,
    lambda_second: Option<ProfileFn>,
}

impl fmt::Debug for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShapeSpec")
            .field("id", &self.id)
            .field("support", &self.support)
            .finish()
    }
}

impl ShapeSpec {
    /// General constructor for custom profiles. Derivatives of
    /// Lambda = -log psi are optional; central differences with relative
    /// step 1e-6 fill in when absent.
    pub fn new(
        id: impl Into<String>,
        support: Support,
        log_psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lambda_prime: Option<ProfileFn>,
        lambda_second: Option<ProfileFn>,
    ) -> Self {
        ShapeSpec {
            id: id.into(),
            support,
            log_psi: Arc::new(log_psi),
            lambda_prime,
            lambda_second,
        }
    }

    /// psi(u) = 1 on [0, 1].
    pub fn uniform_ball() -> Self {
        ShapeSpec {
            id: "uniform-ball".into(),
            support: Support::Compact {
                u_star: 1.0,
                tail: Some(PowerTail { a: 1.0, b: 0.0 }),
            },
            log_psi: Arc::new(|u: f64| if u > 1.0 { f64::NEG_INFINITY } else { 0.0 }),
            lambda_prime: Some(Arc::new(|_| 0.0)),
            lambda_second: Some(Arc::new(|_| 0.0)),
        }
    }

    /// psi(u) = 2 - u on [0, 1]; at the edge psi(1) = 1, so the boundary
    /// power data is (a, b) = (1, 0), same as the uniform ball.
    pub fn triangle() -> Self {
        ShapeSpec {
            id: "triangle".into(),
            support: Support::Compact {
                u_star: 1.0,
                tail: Some(PowerTail { a: 1.0, b: 0.0 }),
            },
            log_psi: Arc::new(|u: f64| {
                if u > 1.0 {
                    f64::NEG_INFINITY
                } else {
                    (2.0 - u).ln()
                }
            }),
            lambda_prime: Some(Arc::new(|u: f64| 1.0 / (2.0 - u))),
            lambda_second: Some(Arc::new(|u: f64| 1.0 / ((2.0 - u) * (2.0 - u)))),
        }
    }

    /// psi(u) = a (u_star - u)^b on [0, u_star].
    pub fn power_compact(a: f64, b: f64, u_star: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Config(format!(
                "power shape: parameter a must be positive and finite, got {a}"
            )));
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::Config(format!(
                "power shape: parameter b must be nonnegative and finite, got {b}"
            )));
        }
        if !(u_star > 0.0 && u_star.is_finite()) {
            return Err(Error::Config(format!(
                "power shape: parameter u_star must be positive and finite, got {u_star}"
            )));
        }
        let la = a.ln();
        Ok(ShapeSpec {
            id: format!("power-a{a}-b{b}-ustar{u_star}"),
            support: Support::Compact {
                u_star,
                tail: Some(PowerTail { a, b }),
            },
            log_psi: Arc::new(move |u: f64| {
                if u > u_star {
                    f64::NEG_INFINITY
                } else if b == 0.0 {
                    la
                } else {
                    la + b * (u_star - u).ln()
                }
            }),
            lambda_prime: Some(Arc::new(move |u: f64| b / (u_star - u))),
            lambda_second: Some(Arc::new(move |u: f64| {
                b / ((u_star - u) * (u_star - u))
            })),
        })
    }

    /// psi(u) = exp(-u^2/2): Lambda = u^2/2, L(u) = u^2.
    pub fn gaussian() -> Self {
        ShapeSpec {
            id: "gaussian".into(),
            support: Support::NonCompact { regular_from: 0.0 },
            log_psi: Arc::new(|u: f64| -u * u / 2.0),
            lambda_prime: Some(Arc::new(|u: f64| u)),
            lambda_second: Some(Arc::new(|_| 1.0)),
        }
    }

    /// Lambda(u) = c * log(u + a)^alpha * (u + b)^beta with beta > 0.
    ///
    /// With a >= 1 the log factor is nonnegative on the whole half-line.
    /// Smaller a (or a = 0) is accepted; fractional alpha then makes Lambda
    /// undefined where log(u + a) < 0, which surfaces as a numerical-domain
    /// failure when such a profile is integrated.
    pub fn log_poly(a: f64, b: f64, c: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::Config(format!(
                "logpoly: parameter a must be nonnegative and finite, got {a}"
            )));
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::Config(format!(
                "logpoly: parameter b must be nonnegative and finite, got {b}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!(
                "logpoly: parameter c must be positive and finite, got {c}"
            )));
        }
        if !alpha.is_finite() {
            return Err(Error::Config(format!(
                "logpoly: parameter alpha must be finite, got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!(
                "logpoly: parameter beta must be positive and finite, got {beta} \
                 (the profile must decay at least as fast as exp(-c u^beta))"
            )));
        }
        let lam = move |u: f64| {
            let l1 = (u + a).ln();
            c * powf_checked(l1, alpha) * (u + b).powf(beta)
        };
        let lam_p = move |u: f64| {
            let l1 = (u + a).ln();
            let p = u + b;
            let mut s = beta * powf_checked(l1, alpha) * p.powf(beta - 1.0);
            if alpha != 0.0 {
                s += alpha * powf_checked(l1, alpha - 1.0) * p.powf(beta) / (u + a);
            }
            c * s
        };
        let lam_pp = move |u: f64| {
            let l1 = (u + a).ln();
            let p = u + b;
            let ua = u + a;
            let mut s = beta * (beta - 1.0) * powf_checked(l1, alpha) * p.powf(beta - 2.0);
            if alpha != 0.0 {
                s += alpha * (alpha - 1.0) * powf_checked(l1, alpha - 2.0) * p.powf(beta)
                    / (ua * ua);
                s -= alpha * powf_checked(l1, alpha - 1.0) * p.powf(beta) / (ua * ua);
                s += 2.0 * alpha * beta * powf_checked(l1, alpha - 1.0) * p.powf(beta - 1.0) / ua;
            }
            c * s
        };
        Ok(ShapeSpec {
            id: format!("logpoly-a{a}-b{b}-c{c}-alpha{alpha}-beta{beta}"),
            support: Support::NonCompact {
                regular_from: a.max(b).max(1.0) + 1.0,
            },
            log_psi: Arc::new(move |u: f64| -lam(u)),
            lambda_prime: Some(Arc::new(lam_p)),
            lambda_second: Some(Arc::new(lam_pp)),
        })
    }

    /// psi(u) = 1/(1 + u): too heavy a tail for any magnitude law
    /// (u^d psi(u) is not integrable). Exists so that failure paths can be
    /// exercised end to end.
    pub fn log_tail() -> Self {
        ShapeSpec {
            id: "log-tail".into(),
            support: Support::NonCompact { regular_from: 1.0 },
            log_psi: Arc::new(|u: f64| -(1.0 + u).ln()),
            lambda_prime: Some(Arc::new(|u: f64| 1.0 / (1.0 + u))),
            lambda_second: Some(Arc::new(|u: f64| -1.0 / ((1.0 + u) * (1.0 + u)))),
        }
    }

    /// Builds a shape from a config-style name plus parameter map.
    /// Unknown names and unknown or out-of-range parameters are
    /// configuration errors that name the offender.
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let canon = name.trim().to_ascii_lowercase().replace('_', "-");
        let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        let reject_unknown = |allowed: &[&str]| -> Result<()> {
            for k in params.keys() {
                if !allowed.contains(&k.as_str()) {
                    return Err(Error::Config(format!(
                        "shape {canon:?} does not take a parameter named {k:?} \
                         (allowed: {})",
                        if allowed.is_empty() {
                            "none".to_string()
                        } else {
                            allowed.join(", ")
                        }
                    )));
                }
            }
            Ok(())
        };
        match canon.as_str() {
            "uniform-ball" | "uniformball" => {
                reject_unknown(&[])?;
                Ok(ShapeSpec::uniform_ball())
            }
            "triangle" => {
                reject_unknown(&[])?;
                Ok(ShapeSpec::triangle())
            }
            "gaussian" => {
                reject_unknown(&[])?;
                Ok(ShapeSpec::gaussian())
            }
            "power" => {
                reject_unknown(&["a", "b", "u-star", "u_star", "ustar"])?;
                let u_star = params
                    .get("u-star")
                    .or_else(|| params.get("u_star"))
                    .or_else(|| params.get("ustar"))
                    .copied()
                    .unwrap_or(1.0);
                ShapeSpec::power_compact(get("a", 1.0), get("b", 0.0), u_star)
            }
            "logpoly" | "log-poly" => {
                reject_unknown(&["a", "b", "c", "alpha", "beta"])?;
                ShapeSpec::log_poly(
                    get("a", 1.0),
                    get("b", 0.0),
                    get("c", 1.0),
                    get("alpha", 0.0),
                    get("beta", 2.0),
                )
            }
            "log-tail" | "logtail" => {
                reject_unknown(&[])?;
                Ok(ShapeSpec::log_tail())
            }
            other => Err(Error::Config(format!(
                "unknown shape {other:?}; known shapes: uniform-ball, triangle, \
                 gaussian, power, logpoly, log-tail"
            ))),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn is_compact(&self) -> bool {
        matches!(self.support, Support::Compact { .. })
    }

    /// log psi(u); -inf beyond a compact support's end.
    pub fn log_psi(&self, u: f64) -> f64 {
        debug_assert!(u >= 0.0, "profiles live on the half-line, got u = {u}");
        (self.log_psi)(u)
    }

    /// Lambda(u) = -log psi(u).
    pub fn lambda(&self, u: f64) -> f64 {
        -self.log_psi(u)
    }

    /// Lambda'(u), analytic when declared, otherwise central differences
    /// with relative step h = u * 1e-6.
    pub fn lambda_prime(&self, u: f64) -> f64 {
        if let Some(f) = &self.lambda_prime {
            return f(u);
        }
        let h = if u > 0.0 { u * 1e-6 } else { 1e-6 };
        (self.lambda(u + h) - self.lambda((u - h).max(0.0))) / (h + h.min(u))
    }

    /// L(u) = u Lambda'(u), the function whose inverse locates the
    /// concentration radius.
    pub fn big_l(&self, u: f64) -> f64 {
        u * self.lambda_prime(u)
    }

    /// M(u) = L(u) / log u. Integrability of u^d psi(u) for every d is
    /// equivalent to M -> infinity.
    pub fn big_m(&self, u: f64) -> f64 {
        self.big_l(u) / u.ln()
    }

    /// L'(u) = Lambda'(u) + u Lambda''(u); falls back to central
    /// differences on L when no second derivative is declared.
    pub fn big_l_prime(&self, u: f64) -> f64 {
        if let Some(f) = &self.lambda_second {
            return self.lambda_prime(u) + u * f(u);
        }
        let h = if u > 0.0 { u * 1e-6 } else { 1e-6 };
        (self.big_l(u + h) - self.big_l((u - h).max(0.0))) / (h + h.min(u))
    }

    /// Radius beyond which the growth functions are trusted (non-compact
    /// shapes; 0 for compact ones).
    pub fn regular_from(&self) -> f64 {
        match self.support {
            Support::Compact { .. } => 0.0,
            Support::NonCompact { regular_from } => regular_from,
        }
    }

    /// Declared boundary power data (a, b, u_star) for compact shapes.
    pub fn tail_params(&self) -> Result<(f64, f64, f64)> {
        match self.support {
            Support::Compact {
                u_star,
                tail: Some(PowerTail { a, b }),
            } => Ok((a, b, u_star)),
            Support::Compact { tail: None, .. } => Err(Error::MissingTail),
            Support::NonCompact { .. } => Err(Error::Domain(
                "tail_params applies to compact shapes; this profile is positive \
                 on the whole half-line"
                    .into(),
            )),
        }
    }

    /// The same profile stretched by s: psi_s(u) = psi(u/s).
    pub fn scaled(&self, s: f64) -> ShapeSpec {
        assert!(s > 0.0 && s.is_finite(), "scale must be positive");
        let f = Arc::clone(&self.log_psi);
        let support = match self.support {
            Support::Compact { u_star, tail } => Support::Compact {
                u_star: s * u_star,
                tail: tail.map(|t| PowerTail {
                    a: t.a * s.powf(-t.b),
                    b: t.b,
                }),
            },
            Support::NonCompact { regular_from } => Support::NonCompact {
                regular_from: s * regular_from,
            },
        };
        ShapeSpec {
            id: format!("{}-x{}", self.id, s),
            support,
            log_psi: Arc::new(move |u: f64| f(u / s)),
            lambda_prime: self.lambda_prime.clone().map(|g| {
                Arc::new(move |u: f64| g(u / s) / s) as ProfileFn
            }),
            lambda_second: self.lambda_second.clone().map(|g| {
                Arc::new(move |u: f64| g(u / s) / (s * s)) as ProfileFn
            }),
        }
    }

    /// Finite-grid evidence for the decay conditions behind the Gaussian
    /// limit: L strictly increasing, M eventually increasing and large, and
    /// M-ratios at the grid tail on the correct sides of 1. Failures are
    /// reported in the result, never thrown.
    pub fn check_regularity(&self, grid: &GridSpec) -> RegularityReport {
        self.check_regularity_with(grid, M_THRESHOLD_DEFAULT)
    }

    pub fn check_regularity_with(&self, grid: &GridSpec, threshold: f64) -> RegularityReport {
        assert!(
            !self.is_compact(),
            "regularity analysis applies to non-compact shapes"
        );
        let points = grid.points();
        let n = points.len();
        let l: Vec<f64> = points.iter().map(|&u| self.big_l(u)).collect();
        let m: Vec<f64> = points.iter().map(|&u| self.big_m(u)).collect();
        let mut notes = Vec::new();

        let mut l_strictly_increasing = true;
        for i in 0..n - 1 {
            if !(l[i + 1] > l[i]) {
                l_strictly_increasing = false;
                notes.push(format!(
                    "L fails to increase between u = {:.6e} and u = {:.6e} \
                     ({} -> {})",
                    points[i],
                    points[i + 1],
                    l[i],
                    l[i + 1]
                ));
                break;
            }
        }

        // Longest suffix on which M is nondecreasing; it must cover at
        // least the last quarter of the grid to count as "eventually
        // increasing".
        let mut suffix_start = n - 1;
        while suffix_start > 0 && m[suffix_start - 1] <= m[suffix_start] {
            suffix_start -= 1;
        }
        let m_increasing_tail = suffix_start <= 3 * (n - 1) / 4;
        if !m_increasing_tail {
            notes.push(format!(
                "M is not increasing toward the grid end (nondecreasing only \
                 from point {suffix_start} of {n})"
            ));
        }

        let m_top = m[n - 1];
        let m_exceeds_threshold = m_top > threshold;
        if !m_exceeds_threshold {
            notes.push(format!(
                "M(u_max) = {m_top:.6e} does not exceed the threshold {threshold}"
            ));
        }

        let hi = grid.hi;
        let mut up_ratios = [(0.0, 0.0); 2];
        let mut down_ratios = [(0.0, 0.0); 2];
        for (k, eps) in [0.1f64, 0.5].iter().enumerate() {
            let up = self.big_m((1.0 + eps) * hi) / m_top;
            let down = self.big_m((1.0 - eps) * hi) / m_top;
            up_ratios[k] = (*eps, up);
            down_ratios[k] = (*eps, down);
            if !(up > 1.0) {
                notes.push(format!(
                    "M((1+{eps})u)/M(u) = {up:.6} at u = {hi:.3e}, expected > 1"
                ));
            }
            if !(down < 1.0) {
                notes.push(format!(
                    "M((1-{eps})u)/M(u) = {down:.6} at u = {hi:.3e}, expected < 1"
                ));
            }
        }

        RegularityReport {
            l_strictly_increasing,
            m_increasing_tail,
            m_exceeds_threshold,
            threshold,
            up_ratios,
            down_ratios,
            notes,
        }
    }
}

/// Real power that preserves IEEE semantics for the awkward bases: 0^0 = 1,
/// 0^negative = +inf, negative^integer defined, negative^fraction = NaN
/// (which downstream code reports as a domain failure).
fn powf_checked(base: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        base.powf(e)
    }
}

/// Default for "M must be large at the top of the grid".
pub const M_THRESHOLD_DEFAULT: f64 = 10.0;

/// Finite-grid regularity evidence for a non-compact shape.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// L(u) strictly increases across consecutive grid points.
    pub l_strictly_increasing: bool,
    /// M is nondecreasing on a suffix covering the last quarter of the grid.
    pub m_increasing_tail: bool,
    /// M at the top grid point exceeds `threshold`.
    pub m_exceeds_threshold: bool,
    pub threshold: f64,
    /// (eps, M((1+eps) u_max) / M(u_max)); healthy decay gives values > 1.
    pub up_ratios: [(f64, f64); 2],
    /// (eps, M((1-eps) u_max) / M(u_max)); healthy decay gives values < 1.
    pub down_ratios: [(f64, f64); 2],
    /// Human-readable explanations for any failed check.
    pub notes: Vec<String>,
}

impl RegularityReport {
    pub fn passes(&self) -> bool {
        self.l_strictly_increasing
            && self.m_increasing_tail
            && self.m_exceeds_threshold
            && self.up_ratios.iter().all(|&(_, r)| r > 1.0)
            && self.down_ratios.iter().all(|&(_, r)| r < 1.0)
    }
}
