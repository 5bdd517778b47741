//! Quadrature rules on triangles and segments.

use crate::mesh::Point;

/// Degree-5 seven-point rule: barycentric coordinates and weights summing to 1.
const TRI7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W0: f64 = 0.225;
    const W1: f64 = 0.132_394_152_788_506;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], W0),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// `∫_T g` with the seven-point rule.
pub fn integrate_triangle(p: [Point; 3], area: f64, g: impl Fn(Point) -> f64) -> f64 {
    TRI7.iter()
        .map(|(l, w)| w * g(p[0] * l[0] + p[1] * l[1] + p[2] * l[2]))
        .sum::<f64>()
        * area
}

/// Four-point Gauss–Legendre `∫_a^b g` along a segment (arc-length measure).
pub fn integrate_segment(a: Point, b: Point, g: impl Fn(Point) -> f64) -> f64 {
    const X: [f64; 2] = [0.339_981_043_584_856, 0.861_136_311_594_053];
    const W: [f64; 2] = [0.652_145_154_862_546, 0.347_854_845_137_454];
    let half = 0.5 * a.dist(b);
    let mut s = 0.0;
    for k in 0..2 {
        for sign in [-1.0, 1.0] {
            let t = 0.5 * (1.0 + sign * X[k]);
            s += W[k] * g(a.lerp(b, t));
        }
    }
    s * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_quintics() {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        // ∫ x⁵ over the reference triangle = 5!·1!/7! = 1/42
        let v = integrate_triangle(p, 0.5, |q| q.x.powi(5));
        assert!((v - 1.0 / 42.0).abs() < 1e-12);
        let s = integrate_segment(Point::new(0.0, 0.0), Point::new(2.0, 0.0), |q| q.x.powi(7));
        assert!((s - 32.0).abs() < 1e-10);
    }
}
