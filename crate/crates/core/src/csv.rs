//! Fixed numeric formatting shared by every CSV writer.

/// Rounds to 9 significant digits and prints the shortest decimal of the rounded value.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}
