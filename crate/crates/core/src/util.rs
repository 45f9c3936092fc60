//! Small numeric helpers shared across modules.

/// Neumaier-compensated sum in iteration order.
///
/// Callers feed values in a fixed scanline order so the result does not
/// depend on how the values were produced.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Round half away from zero and clamp into `[0, max]`.
pub fn quantize(value: f64, max: u32) -> u16 {
    let r = value.round();
    if !(r > 0.0) {
        0
    } else if r >= max as f64 {
        max as u16
    } else {
        r as u16
    }
}
