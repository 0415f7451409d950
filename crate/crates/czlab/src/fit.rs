//! Least-squares line fits and small sampling helpers shared by the
//! measurement code.

/// Least-squares line y = slope * x + intercept. Returns (slope, intercept, r²).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (0.0, ys.first().copied().unwrap_or(0.0), 1.0);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return (0.0, my, 1.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Slope of log2(y) against x, ignoring non-positive y.
pub fn log2_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x, y.log2()))
        .collect();
    let px: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let py: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (s, _, r2) = linear_fit(&px, &py);
    (s, r2)
}

/// Deterministic low-discrepancy sequence on [0, 1): a Kronecker walk with
/// per-dimension irrationals (the R1/R2/R3 generalized-golden-ratio
/// constants), offset by a seed. Use a distinct `dim` for each coordinate of
/// a multi-dimensional sample so the points fill the product space.
pub fn kronecker_dim(seed: u64, i: usize, dim: usize) -> f64 {
    const ALPHAS: [f64; 6] = [
        0.618_033_988_749_894_9, // 1/φ
        0.754_877_666_246_692_9, // 1/ρ (plastic number)
        0.569_840_290_998_053_3, // 1/ρ²
        0.819_172_513_396_164_4, // R3 first
        0.671_043_606_703_789_2, // R3 second
        0.549_700_477_901_439_2, // R3 third
    ];
    let a = ALPHAS[dim % ALPHAS.len()];
    let off = (seed % 7919) as f64 * 0.123_456_789;
    (off + a * (i as f64 + 1.0)).fract()
}

/// One-dimensional Kronecker walk (dimension 0 of [`kronecker_dim`]).
pub fn kronecker(seed: u64, i: usize) -> f64 {
    kronecker_dim(seed, i, 0)
}

/// Map a unit sample to an index in 0..n.
pub fn unit_to_index(u: f64, n: usize) -> usize {
    ((u * n as f64) as usize).min(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (s, b, r2) = linear_fit(&xs, &ys);
        assert!((s - 2.0).abs() < 1e-12);
        assert!((b - 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_slope_of_geometric_decay() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 5.0 * 2.0_f64.powf(-1.5 * x)).collect();
        let (s, r2) = log2_slope(&xs, &ys);
        assert!((s + 1.5).abs() < 1e-10);
        assert!(r2 > 0.999999);
    }
}
