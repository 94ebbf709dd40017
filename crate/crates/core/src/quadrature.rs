//! One-dimensional quadrature rules.

/// Nodes and weights of the 5-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre_5() -> ([f64; 5], [f64; 5]) {
    let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let s70 = 70.0f64.sqrt();
    let wa = (322.0 + 13.0 * s70) / 900.0;
    let wb = (322.0 - 13.0 * s70) / 900.0;
    ([-b, -a, 0.0, a, b], [wb, wa, 128.0 / 225.0, wa, wb])
}

/// Composite 5-point Gauss–Legendre rule with `panels` equal panels on `[a, b]`.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre_5();
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 5);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in xs.iter().zip(&ws) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Trapezoid weights for `nodes` equally spaced points on `[a, b]`.
pub fn trapezoid_weights(a: f64, b: f64, nodes: usize) -> Vec<f64> {
    assert!(nodes >= 2, "trapezoid rule needs at least two nodes");
    let h = (b - a) / (nodes - 1) as f64;
    let mut w = vec![h; nodes];
    w[0] = 0.5 * h;
    w[nodes - 1] = 0.5 * h;
    w
}
