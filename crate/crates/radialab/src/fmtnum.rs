//! Shortest-faithful float formatting for report files.
//!
//! Values are printed with 17 significant digits, fixed-point where that is
//! readable and scientific otherwise, with trailing zeros trimmed. Every
//! finite output parses back to the identical f64.

/// Formats with 17 significant digits in the style of printf %.17g.
pub fn g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_owned();
    }
    if x.is_infinite() {
        return if x < 0.0 { "-inf" } else { "inf" }.to_owned();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_owned();
    }
    // {:.16e} renders d.dddddddddddddddde<exp> with 17 significant digits.
    let sci = format!("{x:.16e}");
    let epos = sci.find('e').expect("exponent marker");
    let exp: i32 = sci[epos + 1..].parse().expect("exponent digits");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        // Only strip zeros from a fractional part; integers keep theirs.
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            fixed
        }
    } else {
        let mantissa = sci[..epos].trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}
