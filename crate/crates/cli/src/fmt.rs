//! Deterministic number formatting shared by reports and CSV output.

/// Scientific notation with 9 significant digits; infinities and NaNs print
/// as `inf`/`nan` so CSV consumers see a stable token.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.8e}")
    }
}

pub fn csv_line(fields: &[String]) -> String {
    fields.join(",")
}
