//! Exact hair-cell nonlinearities (the forms with divisions).

/// Inner hair cell membrane conductance: `p³ / (p³ + p² + 0.1)` with
/// `p = max(0, bm_hpf + offset)`. Bounded in `[0, 1)`.
pub fn ihc_exact(bm_hpf: f64, offset: f64) -> f64 {
    let p = (bm_hpf + offset).max(0.0);
    let p2 = p * p;
    let p3 = p2 * p;
    p3 / (p3 + p2 + 0.1)
}

/// Outer hair cell compression of BM velocity: `1 / (1 + (scale·v + offset)²)`.
pub fn ohc_exact(v: f64, scale: f64, offset: f64) -> f64 {
    let t = scale * v + offset;
    1.0 / (1.0 + t * t)
}
