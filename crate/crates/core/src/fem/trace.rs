//! One-dimensional trace bound `sup ζ² ≤ (2/a)∫ζ² + 2a∫ζ′²` for piecewise-linear samples.

/// Both sides of the bound for `ζ` sampled uniformly on `[0, a]` and interpolated linearly.
/// Integrals are exact for the interpolant.
pub fn trace_sup_estimate(samples: &[f64], a: f64) -> Option<(f64, f64)> {
    if samples.len() < 2 || !(a > 0.0) {
        return None;
    }
    let dt = a / (samples.len() - 1) as f64;
    let lhs = samples.iter().fold(0.0f64, |m, z| m.max(z * z));
    let mut int_sq = 0.0;
    let mut int_der = 0.0;
    for w in samples.windows(2) {
        let (z0, z1) = (w[0], w[1]);
        int_sq += dt / 3.0 * (z0 * z0 + z0 * z1 + z1 * z1);
        int_der += (z1 - z0) * (z1 - z0) / dt;
    }
    Some((lhs, 2.0 / a * int_sq + 2.0 * a * int_der))
}
