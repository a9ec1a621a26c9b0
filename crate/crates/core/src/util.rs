//! Small shared helpers: seed derivation and float formatting.

/// splitmix64 finalizer; decorrelates nearby inputs.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and two stream labels.
pub(crate) fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ a) ^ b)
}

/// Formats a float rounded to `sig` significant digits using the shortest
/// decimal representation of the rounded value.
pub(crate) fn fmt_sig(x: f64, sig: i32) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = sig - 1 - exp;
    let rounded = if decimals >= 0 {
        let f = 10f64.powi(decimals);
        (x * f).round() / f
    } else {
        let f = 10f64.powi(-decimals);
        (x / f).round() * f
    };
    format!("{rounded}")
}
