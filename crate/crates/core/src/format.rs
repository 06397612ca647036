//! Text output helpers shared by the CSV writers.

use std::fmt::Write as _;

/// Scientific notation with 17 significant digits and a signed two-digit
/// exponent, e.g. `1.2500000000000000e-01` (the C `%.16e` layout).
pub fn sci17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("`e` formatting always has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Joins a row of numbers with commas and terminates it with LF.
pub fn csv_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        first = false;
        let _ = write!(out, "{}", sci17(v));
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(sci17(0.125), "1.2500000000000000e-01");
        assert_eq!(sci17(-3.0e20), "-3.0000000000000000e+20");
        assert_eq!(sci17(1e-300).len(), "1.0000000000000000e-300".len());
        assert_eq!(sci17(0.0), "0.0000000000000000e+00");
    }

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt() * 1e-200, f64::MAX] {
            assert_eq!(sci17(x).parse::<f64>().unwrap(), x);
        }
    }
}
