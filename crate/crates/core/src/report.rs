//! Report value formatting: deterministic decimals plus small-fraction
//! recognition, so 0.0833… reads as 1/12 without ever inventing patterns
//! for genuinely irrational values.

/// Largest denominator a probability is matched against.
pub const MAX_DENOMINATOR: u64 = 64;

/// Smallest p/q with q ≤ 64 within `tol` of `value`, reduced.
pub fn match_fraction(value: f64, tol: f64) -> Option<(u64, u64)> {
    if !(0.0..=1.0 + tol).contains(&value) {
        return None;
    }
    for q in 1..=MAX_DENOMINATOR {
        let p = (value * q as f64).round();
        if p < 0.0 {
            continue;
        }
        let p = p as u64;
        if (value - p as f64 / q as f64).abs() <= tol {
            let g = gcd(p.max(1), q);
            return Some((p / g, q / g));
        }
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Fixed-width decimal with an optional "= p/q" annotation.
pub fn format_probability(value: f64, tol: f64) -> String {
    match match_fraction(value, tol) {
        Some((p, q)) => format!("{value:.10} (= {p}/{q})"),
        None => format!("{value:.10}"),
    }
}

/// Fraction as text, if one matches.
pub fn fraction_string(value: f64, tol: f64) -> Option<String> {
    match_fraction(value, tol).map(|(p, q)| format!("{p}/{q}"))
}
