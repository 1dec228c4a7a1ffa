//! Fixed-precision number formatting for emitted artifacts.

/// Rounds to nine significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Nine-significant-digit text form, shortest representation of the rounded value.
pub fn sig9(x: f64) -> String {
    let r = round_sig9(x);
    if r == 0.0 {
        // folds -0.0 too
        return "0".to_string();
    }
    format!("{r:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(sig9(4.760000000000058), "4.76");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(-0.0), "0");
        assert_eq!(sig9(100.0), "100.0");
        assert_eq!(sig9(123456789012.0), "123456789000.0");
    }
}
