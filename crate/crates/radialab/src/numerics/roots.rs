//! Scalar root finding for increasing functions.

use crate::error::{Error, Result};

/// Solves g(u) = target for a (weakly) increasing g on (0, inf), starting
/// from `guess > 0`.
///
/// The bracket is found by geometric expansion from the guess (doubling
/// upward, halving downward, at most 200 steps each way), then tightened by
/// alternating secant and bisection steps until it spans only a few ulps.
/// Polishing that far matters: downstream quantile and scaling identities
/// are checked at the 1e-12 level.
///
/// Returns `BracketFailure` if no sign change is found, which is also how a
/// target outside the range of g (say a bounded g) surfaces. NaN from g
/// during expansion is treated the same way.
pub fn find_root_increasing<F: Fn(f64) -> f64>(g: &F, target: f64, guess: f64) -> Result<f64> {
    assert!(guess > 0.0 && guess.is_finite(), "guess must be positive");
    assert!(target.is_finite(), "target must be finite");

    let h = |u: f64| g(u) - target;
    let mut a = guess;
    let mut fa = h(a);
    if fa.is_nan() {
        return Err(Error::BracketFailure(format!(
            "function is NaN at starting point {guess:e}"
        )));
    }
    if fa == 0.0 {
        return Ok(a);
    }

    let mut b;
    let mut fb;
    if fa < 0.0 {
        // Expand upward.
        b = a;
        fb = fa;
        let mut ok = false;
        for _ in 0..200 {
            b *= 2.0;
            fb = h(b);
            if fb.is_nan() {
                return Err(Error::BracketFailure(format!(
                    "function is NaN at {b:e} while expanding upward"
                )));
            }
            if fb >= 0.0 {
                ok = true;
                break;
            }
            a = b;
            fa = fb;
        }
        if !ok {
            return Err(Error::BracketFailure(format!(
                "no crossing of {target:e} up to {b:e}; function may be bounded below it"
            )));
        }
    } else {
        // Expand downward.
        b = a;
        fb = fa;
        let mut ok = false;
        for _ in 0..200 {
            a /= 2.0;
            fa = h(a);
            if fa.is_nan() {
                return Err(Error::BracketFailure(format!(
                    "function is NaN at {a:e} while expanding downward"
                )));
            }
            if fa <= 0.0 {
                ok = true;
                break;
            }
            b = a;
            fb = fa;
        }
        if !ok {
            return Err(Error::BracketFailure(format!(
                "no crossing of {target:e} down to {a:e}; function may be bounded above it"
            )));
        }
    }

    // a and b now bracket the root with h(a) <= 0 <= h(b). Alternate secant
    // and bisection; secant when it lands strictly inside, bisection
    // otherwise, until the bracket is a few ulps wide.
    for iter in 0..200 {
        if fa == 0.0 {
            return Ok(a);
        }
        if fb == 0.0 {
            return Ok(b);
        }
        let width = b - a;
        if width <= 4.0 * f64::EPSILON * b.abs().max(a.abs()) || width <= f64::MIN_POSITIVE {
            break;
        }
        let secant = a - fa * (b - a) / (fb - fa);
        let mid = if iter % 2 == 0 && secant > a && secant < b {
            secant
        } else {
            0.5 * (a + b)
        };
        if !(mid > a && mid < b) {
            break;
        }
        let fm = h(mid);
        if fm.is_nan() {
            return Err(Error::BracketFailure(format!(
                "function is NaN at {mid:e} inside the bracket"
            )));
        }
        if fm < 0.0 {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    Ok(if fb.abs() < fa.abs() { b } else { a })
}
