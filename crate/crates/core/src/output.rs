//! Fixed plain-text number formatting shared by every CSV writer.

/// Twelve significant digits in scientific notation, `.` as decimal
/// separator. Negative zero prints as zero so reruns stay byte-identical.
pub fn fmt12(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

#[cfg(test)]
mod tests {
    use super::fmt12;

    #[test]
    fn formatting() {
        assert_eq!(fmt12(0.5), "5.00000000000e-1");
        assert_eq!(fmt12(-0.0), "0.00000000000e0");
        assert_eq!(fmt12(1234.5678901234567), "1.23456789012e3");
        assert_eq!(fmt12(f64::NAN), "NaN");
    }
}
