//! Fixed-width float formatting shared by every output file.

/// C-style `%.12e`: twelve fraction digits and an exponent with a sign and
/// at least two digits.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

/// One CSV row of floats.
pub fn csv_row(values: &[f64]) -> String {
    let mut s = values.iter().map(|v| sci(*v)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf() {
        assert_eq!(sci(0.0), "0.000000000000e+00");
        assert_eq!(sci(1.0), "1.000000000000e+00");
        assert_eq!(sci(-12345.678), "-1.234567800000e+04");
        assert_eq!(sci(1.5e-300), "1.500000000000e-300");
        assert_eq!(sci(f64::NAN), "nan");
        assert_eq!(csv_row(&[1.0, 2.0]), "1.000000000000e+00,2.000000000000e+00\n");
    }
}
