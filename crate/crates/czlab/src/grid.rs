//! Discretization substrate: uniform midpoint grids on [-L, L], complex grid
//! functions, quadrature, convolution, the discrete Hilbert transform, the
//! Hardy-Littlewood maximal function, and dense linear operators.
//!
//! Sample points follow the midpoint convention x_i = -L + (i + 1/2) h, so no
//! sample ever sits at 0 and singular kernels are always evaluated off their
//! diagonal.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CzError, Result};

pub type C64 = Complex64;

/// Uniform midpoint grid over [-L, L] with a power-of-two point count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width: f64,
    n_points: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(CzError::InvalidParameter(format!(
                "half_width must be positive and finite, got {half_width}"
            )));
        }
        if n_points == 0 || !n_points.is_power_of_two() {
            return Err(CzError::InvalidParameter(format!(
                "n_points must be a positive power of two, got {n_points}"
            )));
        }
        Ok(Grid {
            half_width,
            n_points,
            spacing: 2.0 * half_width / n_points as f64,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Sample point x_i = -L + (i + 1/2) h.
    pub fn point(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    /// Indices of points at distance >= `margin` from both endpoints.
    pub fn interior(&self, margin: f64) -> std::ops::Range<usize> {
        let lo = ((margin / self.spacing) - 0.5).ceil().max(0.0) as usize;
        if 2 * lo >= self.n_points {
            return 0..0;
        }
        lo..self.n_points - lo
    }
}

/// Complex samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CzError::GridMismatch(format!(
                "value count {} != grid points {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(CzError::InvalidParameter(
                "grid function contains non-finite samples".into(),
            ));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zero(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn sample(grid: Grid, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.points().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn sample_real(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::sample(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self, c: C64) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn abs(&self) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| C64::new(v.norm(), 0.0)).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// L^p norm (h Σ |f|^p)^{1/p}; `p = f64::INFINITY` gives the sup norm.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        return Ok(f.sup_norm());
    }
    if !(p >= 1.0) {
        return Err(CzError::InvalidParameter(format!(
            "lp_norm requires p >= 1 or p = inf, got {p}"
        )));
    }
    let h = f.grid().spacing();
    let sum: f64 = f.values().iter().map(|v| v.norm().powf(p)).sum();
    Ok((h * sum).powf(1.0 / p))
}

/// Bilinear pairing h Σ f g (no conjugation, matching ⟨·,·⟩ throughout).
pub fn pairing(f: &GridFunction, g: &GridFunction) -> Result<C64> {
    if f.grid() != g.grid() {
        return Err(CzError::GridMismatch("pairing of mismatched grids".into()));
    }
    let h = f.grid().spacing();
    let mut acc = C64::new(0.0, 0.0);
    for (a, b) in f.values().iter().zip(g.values()) {
        acc += a * b;
    }
    Ok(acc * h)
}

/// Interpolate a midpoint-sampled function at an integer lattice point d*h
/// using the symmetric 4-point (O(h^4)) stencil; values off the grid count
/// as zero (compact-support convention).
fn lattice_value(f: &GridFunction, d: i64) -> C64 {
    let n = f.len() as i64;
    let at = |m: i64| -> C64 {
        if m >= 0 && m < n {
            f.values()[m as usize]
        } else {
            C64::new(0.0, 0.0)
        }
    };
    // x_{d + n/2 - 1} = d*h - h/2 and x_{d + n/2} = d*h + h/2 straddle d*h.
    let m0 = d + n / 2;
    (9.0 * (at(m0 - 1) + at(m0)) - (at(m0 - 2) + at(m0 + 1))) / 16.0
}

/// Discrete convolution (f*g)(x_i) = h Σ_j f(x_j) g(x_i - x_j).
///
/// The differences x_i - x_j land on the integer lattice of the grid, so g
/// is read there through a symmetric interpolation of its midpoint samples.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if f.grid() != g.grid() {
        return Err(CzError::GridMismatch("convolve of mismatched grids".into()));
    }
    let n = f.len();
    let h = f.grid().spacing();
    // g on the displacement lattice d = -(n-1) ... n-1.
    let lattice: Vec<C64> = (-(n as i64 - 1)..n as i64)
        .map(|d| lattice_value(g, d))
        .collect();
    let fv = f.values();
    let values: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                let d = i as i64 - j as i64 + (n as i64 - 1);
                acc += fv[j] * lattice[d as usize];
            }
            acc * h
        })
        .collect();
    GridFunction::new(f.grid(), values)
}

/// Discrete Hilbert transform: p.v. convolution with 1/(π x) under symmetric
/// truncation at the singular cell. The cell is never evaluated at its
/// singularity; its principal value equals -h f'(x) + O(h³) and is restored
/// through the neighboring samples, which shifts the two adjacent kernel
/// weights from ±1 to ±3/2. The kernel stays exactly antisymmetric.
pub fn hilbert_transform(f: &GridFunction) -> GridFunction {
    let n = f.len();
    let fv = f.values();
    let inv_pi = 1.0 / std::f64::consts::PI;
    let values: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                let d = i as i64 - j as i64;
                match d {
                    0 => {}
                    1 => acc += fv[j] * 1.5,
                    -1 => acc -= fv[j] * 1.5,
                    _ => acc += fv[j] / d as f64,
                }
            }
            acc * inv_pi
        })
        .collect();
    GridFunction::new(f.grid(), values).expect("same grid")
}

/// Hardy-Littlewood maximal function: for each point the supremum over all
/// grid-aligned intervals containing it of the average of |f|.
///
/// Exact over every interval: intervals are processed in decreasing average
/// order and each point takes the first (largest) average that covers it.
pub fn maximal_function(f: &GridFunction) -> GridFunction {
    let n = f.len();
    let absf: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let mut prefix = vec![0.0f64; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + absf[i];
    }
    let mut intervals: Vec<(f64, u32, u32)> = Vec::with_capacity(n * (n + 1) / 2);
    for s in 0..n {
        for e in s..n {
            let avg = (prefix[e + 1] - prefix[s]) / (e - s + 1) as f64;
            intervals.push((avg, s as u32, e as u32));
        }
    }
    intervals.sort_unstable_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    let mut out = vec![f64::NAN; n];
    // next[i] = first index >= i not yet assigned
    let mut next: Vec<u32> = (0..=n as u32).collect();
    let mut remaining = n;
    for &(avg, s, e) in &intervals {
        if remaining == 0 {
            break;
        }
        let mut i = {
            // path-compressed find
            let mut r = s;
            while next[r as usize] != r {
                r = next[r as usize];
            }
            let mut c = s;
            while next[c as usize] != c {
                let t = next[c as usize];
                next[c as usize] = r;
                c = t;
            }
            r
        };
        while i <= e {
            out[i as usize] = avg;
            next[i as usize] = i + 1;
            remaining -= 1;
            let mut r = i + 1;
            while r as usize <= n && next[r as usize] != r {
                r = next[r as usize];
            }
            i = r;
        }
    }
    let values = out.into_iter().map(|v| C64::new(v, 0.0)).collect();
    GridFunction::new(f.grid(), values).expect("same grid")
}

/// Dense linear operator (Af)(x_i) = h Σ_j coeffs[i][j] f(x_j).
#[derive(Debug, Clone)]
pub struct DenseOperator {
    grid: Grid,
    coeffs: Vec<C64>,
    /// Bandwidth hint: coeffs[i][j] = 0 whenever |i - j| > band.
    band: Option<usize>,
}

impl DenseOperator {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        DenseOperator {
            grid,
            coeffs: vec![C64::new(0.0, 0.0); n * n],
            band: Some(0),
        }
    }

    pub fn from_rows(grid: Grid, coeffs: Vec<C64>, band: Option<usize>) -> Result<Self> {
        if coeffs.len() != grid.len() * grid.len() {
            return Err(CzError::GridMismatch("coefficient count mismatch".into()));
        }
        Ok(DenseOperator { grid, coeffs, band })
    }

    pub fn from_kernel(grid: Grid, k: impl Fn(f64, f64) -> C64 + Sync) -> Self {
        let n = grid.len();
        let mut coeffs = vec![C64::new(0.0, 0.0); n * n];
        coeffs
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| {
                let x = grid.point(i);
                for (j, c) in row.iter_mut().enumerate() {
                    *c = k(x, grid.point(j));
                }
            });
        DenseOperator {
            grid,
            coeffs,
            band: None,
        }
    }

    /// Identity: h * coeffs = I, i.e. coeffs[i][i] = 1/h.
    pub fn identity(grid: Grid) -> Self {
        let n = grid.len();
        let mut coeffs = vec![C64::new(0.0, 0.0); n * n];
        let inv_h = 1.0 / grid.spacing();
        for i in 0..n {
            coeffs[i * n + i] = C64::new(inv_h, 0.0);
        }
        DenseOperator {
            grid,
            coeffs,
            band: Some(0),
        }
    }

    /// Multiplication operator M_b as a dense operator.
    pub fn multiplication(b: &GridFunction) -> Self {
        let n = b.len();
        let mut coeffs = vec![C64::new(0.0, 0.0); n * n];
        let inv_h = 1.0 / b.grid().spacing();
        for i in 0..n {
            coeffs[i * n + i] = b.values()[i] * inv_h;
        }
        DenseOperator {
            grid: b.grid(),
            coeffs,
            band: Some(0),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn band(&self) -> Option<usize> {
        self.band
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.coeffs[i * self.n() + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        let n = self.n();
        &mut self.coeffs[i * n + j]
    }

    pub fn rows(&self) -> &[C64] {
        &self.coeffs
    }

    fn col_range(&self, i: usize) -> std::ops::Range<usize> {
        match self.band {
            Some(b) => i.saturating_sub(b)..(i + b + 1).min(self.n()),
            None => 0..self.n(),
        }
    }

    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        assert_eq!(self.grid, f.grid(), "grid mismatch");
        let n = self.n();
        let h = self.grid.spacing();
        let fv = f.values();
        let values: Vec<C64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = &self.coeffs[i * n..(i + 1) * n];
                let mut acc = C64::new(0.0, 0.0);
                for j in self.col_range(i) {
                    acc += row[j] * fv[j];
                }
                acc * h
            })
            .collect();
        GridFunction::new(self.grid, values).expect("same grid")
    }

    /// Bilinear transpose: (Aᵀf)(x_j) = h Σ_i coeffs[i][j] f(x_i).
    pub fn apply_transpose(&self, f: &GridFunction) -> GridFunction {
        assert_eq!(self.grid, f.grid(), "grid mismatch");
        let n = self.n();
        let h = self.grid.spacing();
        let fv = f.values();
        let values: Vec<C64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut acc = C64::new(0.0, 0.0);
                for i in self.col_range(j) {
                    acc += self.coeffs[i * n + j] * fv[i];
                }
                acc * h
            })
            .collect();
        GridFunction::new(self.grid, values).expect("same grid")
    }

    /// Conjugate (Hermitian) adjoint action, used for L² operator norms.
    pub fn apply_adjoint(&self, f: &GridFunction) -> GridFunction {
        assert_eq!(self.grid, f.grid(), "grid mismatch");
        let n = self.n();
        let h = self.grid.spacing();
        let fv = f.values();
        let values: Vec<C64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut acc = C64::new(0.0, 0.0);
                for i in self.col_range(j) {
                    acc += self.coeffs[i * n + j].conj() * fv[i];
                }
                acc * h
            })
            .collect();
        GridFunction::new(self.grid, values).expect("same grid")
    }

    pub fn transpose(&self) -> DenseOperator {
        let n = self.n();
        let mut coeffs = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in self.col_range(i) {
                coeffs[j * n + i] = self.coeffs[i * n + j];
            }
        }
        DenseOperator {
            grid: self.grid,
            coeffs,
            band: self.band,
        }
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        DenseOperator {
            grid: self.grid,
            coeffs,
            band: match (self.band, other.band) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            },
        }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        DenseOperator {
            grid: self.grid,
            coeffs,
            band: match (self.band, other.band) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            },
        }
    }

    pub fn scale(&self, c: C64) -> DenseOperator {
        DenseOperator {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            band: self.band,
        }
    }

    /// Composition (A ∘ B): coeffs h Σ_u a[i][u] b[u][j].
    pub fn compose(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
        Self::compose_weighted_opt(a, None, b)
    }

    /// A ∘ M_w ∘ B: coeffs h Σ_u a[i][u] w[u] b[u][j]. Band hints keep the
    /// inner loops short for compactly supported kernels.
    pub fn compose_weighted(a: &DenseOperator, w: &GridFunction, b: &DenseOperator) -> DenseOperator {
        Self::compose_weighted_opt(a, Some(w), b)
    }

    fn compose_weighted_opt(
        a: &DenseOperator,
        w: Option<&GridFunction>,
        b: &DenseOperator,
    ) -> DenseOperator {
        assert_eq!(a.grid, b.grid, "grid mismatch");
        let n = a.n();
        let h = a.grid.spacing();
        let band = match (a.band, b.band) {
            (Some(ba), Some(bb)) => Some(ba + bb),
            _ => None,
        };
        let mut coeffs = vec![C64::new(0.0, 0.0); n * n];
        coeffs
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| {
                let arow = &a.coeffs[i * n..(i + 1) * n];
                for u in a.col_range(i) {
                    let mut au = arow[u];
                    if au.re == 0.0 && au.im == 0.0 {
                        continue;
                    }
                    if let Some(wf) = w {
                        au *= wf.values()[u];
                    }
                    au *= h;
                    let brow = &b.coeffs[u * n..(u + 1) * n];
                    for j in b.col_range(u) {
                        row[j] += au * brow[j];
                    }
                }
            });
        DenseOperator {
            grid: a.grid,
            coeffs,
            band,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Probe- and power-iteration-based lower estimate of the L^p -> L^q operator
/// norm. For p = q = 2 a power iteration on AᴴA is included; the reported
/// value is the maximum over everything tried.
pub fn operator_norm(a: &DenseOperator, p: f64, q: f64, trials: usize, seed: u64) -> Result<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    if trials == 0 {
        return Err(CzError::InvalidParameter("trials must be >= 1".into()));
    }
    let grid = a.grid();
    let n = grid.len();
    let mut best: f64 = 0.0;
    let mut probes: Vec<GridFunction> = Vec::new();
    // structured probes: constant, spikes at the largest-row positions, a mid oscillation
    probes.push(GridFunction::sample_real(grid, |_| 1.0));
    let mut row_norms: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let mut s = 0.0;
            for i in 0..n {
                s += a.entry(i, j).norm();
            }
            (s, j)
        })
        .collect();
    row_norms.sort_unstable_by(|x, y| y.0.total_cmp(&x.0).then_with(|| x.1.cmp(&y.1)));
    for &(_, j) in row_norms.iter().take(4) {
        let mut f = GridFunction::zero(grid);
        f.values_mut()[j] = C64::new(1.0, 0.0);
        probes.push(f);
    }
    let l = grid.half_width();
    probes.push(GridFunction::sample_real(grid, |x| {
        (std::f64::consts::PI * x / l).sin()
    }));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let values: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        probes.push(GridFunction::new(grid, values)?);
    }
    for f in &probes {
        let nf = lp_norm(f, p)?;
        if nf > 0.0 {
            let r = lp_norm(&a.apply(f), q)? / nf;
            best = best.max(r);
        }
    }
    if p == 2.0 && q == 2.0 {
        best = best.max(l2_operator_norm(a, 60));
    }
    Ok(best)
}

/// Power iteration on AᴴA for the L² -> L² norm.
pub fn l2_operator_norm(a: &DenseOperator, iters: usize) -> f64 {
    let grid = a.grid();
    let mut v = GridFunction::sample_real(grid, |x| 1.0 + 0.3 * (2.1 * x).sin() + 0.1 * x.cos());
    let mut sigma = 0.0;
    for _ in 0..iters {
        let nv = lp_norm(&v, 2.0).expect("p=2");
        if nv == 0.0 {
            return 0.0;
        }
        v = v.scale(C64::new(1.0 / nv, 0.0));
        let av = a.apply(&v);
        sigma = lp_norm(&av, 2.0).expect("p=2");
        v = a.apply_adjoint(&av);
    }
    sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(l: f64, n: usize) -> Grid {
        Grid::new(l, n).unwrap()
    }

    #[test]
    fn grid_midpoints_avoid_zero() {
        let g = grid(1.0, 64);
        assert!(g.points().all(|x| x.abs() > 1e-12));
        assert_abs_diff_eq!(g.point(0), -1.0 + g.spacing() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn grid_rejects_non_power_of_two() {
        assert!(Grid::new(1.0, 100).is_err());
        assert!(Grid::new(-1.0, 64).is_err());
    }

    #[test]
    fn lp_norm_constant_on_unit_interval() {
        let g = grid(1.0, 256);
        let f = GridFunction::sample_real(g, |_| 1.0);
        assert_abs_diff_eq!(lp_norm(&f, 2.0).unwrap(), 2.0_f64.sqrt(), epsilon = 1e-12);
        let z = GridFunction::zero(g);
        assert_eq!(lp_norm(&z, 1.0).unwrap(), 0.0);
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn lp_norm_matches_resummation_oracle() {
        use rand::{Rng, SeedableRng};
        let g = grid(2.0, 128);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let f = GridFunction::new(
            g,
            (0..128)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap();
        let v = lp_norm(&f, 3.0).unwrap();
        // independent oracle: reverse-order Riemann sum
        let h = g.spacing();
        let mut s = 0.0;
        for x in f.values().iter().rev() {
            s += x.norm().powi(3);
        }
        assert_abs_diff_eq!(v, (h * s).powf(1.0 / 3.0), epsilon = 1e-12);
    }

    #[test]
    fn pairing_basics() {
        let g = grid(1.0, 256);
        let one = GridFunction::sample_real(g, |_| 1.0);
        assert_abs_diff_eq!(pairing(&one, &one).unwrap().re, 2.0, epsilon = 1e-12);
        let odd = GridFunction::sample_real(g, |x| x * (3.0 * x * x).sin());
        let even = GridFunction::sample_real(g, |x| (x * x).cos());
        assert!(pairing(&odd, &even).unwrap().norm() < 1e-12);
        let f = GridFunction::sample_real(g, |x| x + 0.3);
        let fg = pairing(&f, &even).unwrap();
        let gf = pairing(&even, &f).unwrap();
        assert_abs_diff_eq!(fg.re, gf.re, epsilon = 1e-14);
    }

    #[test]
    fn convolve_gaussians_sums_variances() {
        let g = grid(16.0, 1024);
        let s1: f64 = 0.7;
        let s2: f64 = 0.5;
        let gauss = |s: f64| {
            move |x: f64| (-x * x / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
        };
        let f1 = GridFunction::sample_real(g, gauss(s1));
        let f2 = GridFunction::sample_real(g, gauss(s2));
        let c = convolve(&f1, &f2).unwrap();
        let s3 = (s1 * s1 + s2 * s2).sqrt();
        let exact = GridFunction::sample_real(g, gauss(s3));
        let err = lp_norm(&c.sub(&exact), 2.0).unwrap();
        assert!(err < 1e-6, "gaussian convolution L2 error {err}");
    }

    #[test]
    fn convolve_with_narrow_bump_approximates_identity() {
        let g = grid(4.0, 512);
        let h = g.spacing();
        // Lipschitz test function
        let f = GridFunction::sample_real(g, |x| (1.0 - x.abs() / 2.0).max(0.0));
        let w = 16.0 * h;
        let bump = GridFunction::sample_real(g, |x| {
            if x.abs() < w {
                (1.0 - (x / w) * (x / w)).powi(2)
            } else {
                0.0
            }
        });
        let mass = lp_norm(&bump, 1.0).unwrap();
        let bump = bump.scale(C64::new(1.0 / mass, 0.0));
        let c = convolve(&f, &bump).unwrap();
        let max_err = c
            .sub(&f)
            .values()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(max_err < 20.0 * h, "identity approximation error {max_err}");
        let z = GridFunction::zero(g);
        assert_eq!(lp_norm(&convolve(&z, &bump).unwrap(), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn hilbert_of_lorentzian() {
        let g = grid(64.0, 2048);
        let f = GridFunction::sample_real(g, |x| 1.0 / (1.0 + x * x));
        let hf = hilbert_transform(&f);
        let exact = GridFunction::sample_real(g, |x| x / (1.0 + x * x));
        let core = g.interior(32.0);
        let sup_err = core
            .map(|i| (hf.values()[i] - exact.values()[i]).norm())
            .fold(0.0, f64::max);
        assert!(sup_err < 1e-3, "sup error {sup_err}");
        let z = GridFunction::zero(g);
        assert_eq!(hilbert_transform(&z).sup_norm(), 0.0);
    }

    #[test]
    fn hilbert_squared_is_minus_identity() {
        for n in [1024usize, 2048] {
            let g = grid(64.0, n);
            // mean-zero probe so the transform decays quadratically
            let f = GridFunction::sample_real(g, |x| -2.0 * x * (-x * x).exp());
            let hhf = hilbert_transform(&hilbert_transform(&f));
            let core = g.interior(32.0);
            let mut num = 0.0;
            let mut den = 0.0;
            for i in core {
                num += (hhf.values()[i] + f.values()[i]).norm_sqr();
                den += f.values()[i].norm_sqr();
            }
            let rel = (num / den).sqrt();
            assert!(rel < 1e-2, "H^2 deviation {rel} at n = {n}");
        }
    }

    #[test]
    fn hilbert_antisymmetry() {
        let g = grid(8.0, 256);
        let f = GridFunction::sample_real(g, |x| (-(x - 0.5) * (x - 0.5)).exp());
        let gg = GridFunction::sample_real(g, |x| (2.0 * x).cos() * (-x * x / 2.0).exp());
        let lhs = pairing(&hilbert_transform(&f), &gg).unwrap();
        let rhs = pairing(&f, &hilbert_transform(&gg)).unwrap();
        let scale = lhs.norm().max(rhs.norm()).max(1e-300);
        assert!((lhs + rhs).norm() / scale < 1e-10);
    }

    #[test]
    fn maximal_function_properties() {
        let g = grid(8.0, 256);
        let c = GridFunction::sample_real(g, |_| -3.5);
        let mc = maximal_function(&c);
        assert!(mc.values().iter().all(|v| (v.re - 3.5).abs() < 1e-12));

        let f = GridFunction::sample_real(g, |x| (5.0 * x).sin() * (-x * x / 4.0).exp());
        let mf = maximal_function(&f);
        // M f >= |f| pointwise and bounded by sup|f|
        for i in 0..g.len() {
            assert!(mf.values()[i].re >= f.values()[i].norm() - 1e-13);
        }
        assert!(mf.sup_norm() <= f.sup_norm() + 1e-13);
        // monotonicity M(Mf) >= Mf
        let mmf = maximal_function(&mf);
        for i in 0..g.len() {
            assert!(mmf.values()[i].re >= mf.values()[i].re - 1e-13);
        }
    }

    #[test]
    fn maximal_function_of_indicator_matches_brute_force() {
        let g = grid(16.0, 512);
        let f = GridFunction::sample_real(g, |x| if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 });
        let mf = maximal_function(&f);
        // brute force at the point closest to x = 3
        let i0 = (0..g.len())
            .min_by(|&a, &b| (g.point(a) - 3.0).abs().total_cmp(&(g.point(b) - 3.0).abs()))
            .unwrap();
        let absf: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
        let mut brute: f64 = 0.0;
        for s in 0..=i0 {
            let mut sum = absf[s..=i0].iter().sum::<f64>() - absf[i0];
            for e in i0..g.len() {
                sum += absf[e];
                brute = brute.max(sum / (e - s + 1) as f64);
            }
        }
        assert_abs_diff_eq!(mf.values()[i0].re, brute, epsilon = 1e-12);
        // uncentered maximal of the unit indicator at x = 3 is 1/3 (interval [0, 3])
        assert!((mf.values()[i0].re - 1.0 / 3.0).abs() < 2.0 * g.spacing());
    }

    #[test]
    fn transpose_identity_exact() {
        let g = grid(2.0, 64);
        let a = DenseOperator::from_kernel(g, |x, y| C64::new((x * y).sin(), 0.5 * (x - y).cos()));
        let f = GridFunction::sample_real(g, |x| (1.3 * x).cos());
        let w = GridFunction::sample_real(g, |x| x.tanh());
        let lhs = pairing(&a.apply(&f), &w).unwrap();
        let rhs = pairing(&f, &a.apply_transpose(&w)).unwrap();
        let scale = lp_norm(&a.apply(&f), 2.0).unwrap() * lp_norm(&w, 2.0).unwrap();
        assert!((lhs - rhs).norm() / scale < 1e-12);
        let at = a.transpose();
        let rhs2 = pairing(&f, &at.apply(&w)).unwrap();
        assert!((lhs - rhs2).norm() / scale < 1e-12);
    }

    #[test]
    fn operator_norm_identity_and_zero() {
        let g = grid(1.0, 64);
        let id = DenseOperator::identity(g);
        let v = operator_norm(&id, 2.0, 2.0, 4, 9).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
        let z = DenseOperator::zeros(g);
        assert_eq!(operator_norm(&z, 2.0, 2.0, 4, 9).unwrap(), 0.0);
        assert!(operator_norm(&id, 2.0, 2.0, 0, 9).is_err());
    }

    #[test]
    fn operator_norm_of_multiplication_is_sup() {
        let g = grid(1.0, 128);
        let b = GridFunction::sample(g, |x| C64::new(1.0 + 0.5 * (3.0 * x).sin(), 0.4 * x));
        let m = DenseOperator::multiplication(&b);
        let v = operator_norm(&m, 2.0, 2.0, 64, 17).unwrap();
        let sup = b.sup_norm();
        assert!(v <= sup + 1e-9);
        assert!(v >= 0.98 * sup, "norm estimate {v} vs sup {sup}");
    }

    #[test]
    fn compose_matches_sequential_application() {
        let g = grid(1.0, 32);
        let a = DenseOperator::from_kernel(g, |x, y| C64::new((-(x - y).powi(2)).exp(), 0.0));
        let b = DenseOperator::from_kernel(g, |x, y| C64::new((x + y).cos(), (x * y).sin()));
        let w = GridFunction::sample(g, |x| C64::new(1.0, 0.2 * x));
        let c = DenseOperator::compose_weighted(&a, &w, &b);
        let f = GridFunction::sample_real(g, |x| x.exp() / 3.0);
        let direct = a.apply(&w.mul(&b.apply(&f)));
        let via = c.apply(&f);
        let err = lp_norm(&direct.sub(&via), 2.0).unwrap();
        assert!(err < 1e-12);
    }
}
