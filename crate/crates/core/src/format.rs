//! Text formatting shared by every CSV writer.

/// Scientific notation with 17 significant digits, which round-trips every
/// `f64` and never depends on locale.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Like [`fmt_f64`], with `None` written as an empty field.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_awkward_values() {
        for x in [0.1 + 0.2, 1.0 / 3.0, f64::MIN_POSITIVE, -1.1e-3, 1e300, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.5), "1.5000000000000000e0");
        assert_eq!(fmt_opt(None), "");
    }
}
