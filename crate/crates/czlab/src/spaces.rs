//! Function-space functionals at grid scale: the Hardy-space norm through
//! the Hilbert transform, dyadic BMO, Carleson box sums, Hölder seminorms,
//! and the convergence experiments for approximation-to-identity and
//! reproducing families.

use num_complex::Complex64 as C64;

use crate::accretive::ReproducingFamily;
use crate::error::{CzError, Result};
use crate::fit::{kronecker_dim, linear_fit, log2_slope, unit_to_index};
use crate::grid::{hilbert_transform, lp_norm, pairing, DenseOperator, Grid, GridFunction};
use crate::kernels::phi_scaled;

/// All grid-aligned dyadic intervals: sizes 2^m cells at positions aligned
/// to multiples of the size.
#[derive(Debug, Clone)]
pub struct DyadicFamily {
    pub grid: Grid,
    /// (start, len) in cells
    pub intervals: Vec<(usize, usize)>,
}

impl DyadicFamily {
    /// `min_cells` = 1 includes single-cell intervals (used by the Carleson
    /// box sums); BMO oscillation over a single cell vanishes so the choice
    /// does not affect it.
    pub fn new(grid: Grid, min_cells: usize) -> Self {
        let n = grid.len();
        let mut intervals = Vec::new();
        let mut size = min_cells.max(1).next_power_of_two();
        while size <= n {
            let mut start = 0;
            while start + size <= n {
                intervals.push((start, size));
                start += size;
            }
            size *= 2;
        }
        DyadicFamily { grid, intervals }
    }
}

/// H¹ norm report: ‖f‖₁ + ‖Hf‖₁ with a flag when the mean-zero hypothesis
/// fails and the value is dominated by the domain truncation of the
/// transform's tail.
#[derive(Debug, Clone, Copy)]
pub struct H1Result {
    pub value: f64,
    pub l1: f64,
    pub riesz_l1: f64,
    pub truncation_flag: bool,
}

pub fn h1_norm(f: &GridFunction) -> H1Result {
    let l1 = lp_norm(f, 1.0).expect("p=1");
    let mean = pairing(f, &GridFunction::sample_real(f.grid(), |_| 1.0)).expect("same grid");
    let flag = l1 > 0.0 && mean.norm() > 1e-6 * l1;
    let hf = hilbert_transform(f);
    let riesz_l1 = lp_norm(&hf, 1.0).expect("p=1");
    H1Result {
        value: l1 + riesz_l1,
        l1,
        riesz_l1,
        truncation_flag: flag,
    }
}

/// Dyadic BMO norm: sup over the dyadic family of mean oscillation.
pub fn bmo_norm(f: &GridFunction) -> f64 {
    let n = f.len();
    let fam = DyadicFamily::new(f.grid(), 2);
    let mut prefix = vec![C64::new(0.0, 0.0); n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + f.values()[i];
    }
    let mut best: f64 = 0.0;
    for &(s, len) in &fam.intervals {
        let avg = (prefix[s + len] - prefix[s]) / len as f64;
        let mut osc = 0.0;
        for i in s..s + len {
            osc += (f.values()[i] - avg).norm();
        }
        best = best.max(osc / len as f64);
    }
    best
}

/// Per-scale nonnegative densities a_k(x) with the Carleson box norm
/// sup_I (1/|I|) Σ_{2^{-k} <= |I|} h Σ_{x_i in I} a_k(x_i).
pub struct CarlesonMeasure {
    pub grid: Grid,
    pub k_values: Vec<i32>,
    pub densities: Vec<Vec<f64>>,
    pub norm: f64,
}

pub fn carleson_norm(grid: Grid, k_values: &[i32], densities: &[Vec<f64>]) -> Result<CarlesonMeasure> {
    if k_values.len() != densities.len() {
        return Err(CzError::InvalidParameter(
            "one density per scale required".into(),
        ));
    }
    for d in densities {
        if d.len() != grid.len() {
            return Err(CzError::GridMismatch("density length".into()));
        }
        if d.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(CzError::InvalidParameter(
                "densities must be nonnegative and finite".into(),
            ));
        }
    }
    let n = grid.len();
    let h = grid.spacing();
    let fam = DyadicFamily::new(grid, 1);
    let prefixes: Vec<Vec<f64>> = densities
        .iter()
        .map(|d| {
            let mut p = vec![0.0; n + 1];
            for i in 0..n {
                p[i + 1] = p[i] + d[i];
            }
            p
        })
        .collect();
    let mut norm: f64 = 0.0;
    for &(s, len) in &fam.intervals {
        let ilen = len as f64 * h;
        let mut acc = 0.0;
        for (ki, &k) in k_values.iter().enumerate() {
            if 2f64.powi(-k) <= ilen {
                acc += h * (prefixes[ki][s + len] - prefixes[ki][s]);
            }
        }
        norm = norm.max(acc / ilen);
    }
    Ok(CarlesonMeasure {
        grid,
        k_values: k_values.to_vec(),
        densities: densities.to_vec(),
        norm,
    })
}

/// Discrete Hölder seminorm sup |f(x)-f(y)| / |x-y|^δ over all grid pairs
/// within distance 1 plus a deterministic far set.
pub fn holder_norm(f: &GridFunction, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(CzError::InvalidParameter(format!(
            "holder exponent must lie in (0, 1], got {delta}"
        )));
    }
    let grid = f.grid();
    let n = f.len();
    let h = grid.spacing();
    let near = ((1.0 / h) as usize).min(n - 1);
    let mut best: f64 = 0.0;
    for i in 0..n {
        let hi = (i + near).min(n - 1);
        for j in i + 1..=hi {
            let d = (f.values()[i] - f.values()[j]).norm();
            let sep = (j - i) as f64 * h;
            best = best.max(d / sep.powf(delta));
        }
    }
    // far pairs on a low-discrepancy set
    for t in 0..4 * n {
        let i = unit_to_index(kronecker_dim(7, t, 0), n);
        let j = unit_to_index(kronecker_dim(7, t, 1), n);
        if i == j {
            continue;
        }
        let d = (f.values()[i] - f.values()[j]).norm();
        let sep = (i as f64 - j as f64).abs() * h;
        best = best.max(d / sep.powf(delta));
    }
    Ok(best)
}

/// Replace φ by φ - (⟨b, φ⟩ / ⟨b, ψ⟩) ψ so that bφ has exact mean zero; ψ is
/// a fixed interior bump.
pub fn project_mean_zero(phi: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
    let grid = phi.grid();
    let l = grid.half_width();
    let psi = GridFunction::sample_real(grid, move |x| {
        let u = 4.0 * x / l;
        if u.abs() < 1.0 {
            (-1.0 / (1.0 - u * u)).exp()
        } else {
            0.0
        }
    });
    let denom = pairing(b, &psi)?;
    if denom.norm() < 1e-12 {
        return Err(CzError::InvalidParameter(
            "projector bump pairs to zero against b".into(),
        ));
    }
    let c = pairing(b, phi)? / denom;
    Ok(phi.sub(&psi.scale(c)))
}

/// Builder for the two-scale mean-zero growth functions Φ_j^N - c Φ_k^N with
/// c fixed so the discrete mean vanishes exactly. At j = k the plain
/// difference collapses to zero, so the second kernel is displaced by one
/// scale unit instead; the result stays bounded by a Φ_j-type envelope.
pub fn two_scale_mean_zero(grid: Grid, j: i32, k: i32, exponent: f64) -> GridFunction {
    let shift = if j == k { 2f64.powi(-j) } else { 0.0 };
    let fj = GridFunction::sample_real(grid, |x| phi_scaled(j, exponent, x));
    let fk = GridFunction::sample_real(grid, move |x| phi_scaled(k, exponent, x - shift));
    let one = GridFunction::sample_real(grid, |_| 1.0);
    let c = pairing(&fj, &one).expect("grid") / pairing(&fk, &one).expect("grid");
    fj.sub(&fk.scale(c))
}

#[derive(Debug, Clone)]
pub struct H1GrowthReport {
    pub gaps: Vec<f64>,
    pub norms: Vec<f64>,
    pub fitted_exponent: f64,
    pub r2: f64,
}

/// H¹ norms of the two-scale mean-zero functions against the gap |j - k|,
/// with the growth exponent fitted as log(norm) against log(1 + gap).
pub fn h1_growth_experiment(grid: Grid, pairs: &[(i32, i32)], exponent: f64) -> H1GrowthReport {
    let mut gaps = Vec::new();
    let mut norms = Vec::new();
    for &(j, k) in pairs {
        let f = two_scale_mean_zero(grid, j, k, exponent);
        let r = h1_norm(&f);
        gaps.push((j - k).abs() as f64);
        norms.push(r.value);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (g, v) in gaps.iter().zip(&norms) {
        if *v > 0.0 {
            xs.push((1.0 + g).ln());
            ys.push(v.ln());
        }
    }
    let (slope, _, r2) = linear_fit(&xs, &ys);
    H1GrowthReport {
        gaps,
        norms,
        fitted_exponent: slope,
        r2,
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// scale and error pairs for the k -> +inf branch ‖P_k f - f‖_p
    pub upward: Vec<(i32, f64)>,
    /// scale and norm pairs for the k -> -inf branch ‖P_k f‖_p
    pub downward: Vec<(i32, f64)>,
    pub upward_decreasing: bool,
    pub downward_decreasing: bool,
}

/// Convergence of a plain approximation to identity: ‖P_k f − f‖_p shrinking
/// as k grows and ‖P_k f‖_p shrinking as k falls.
pub fn approx_identity_convergence(
    ops: &[(i32, DenseOperator)],
    f: &GridFunction,
    p: f64,
) -> Result<ConvergenceReport> {
    let mut upward = Vec::new();
    let mut downward = Vec::new();
    for (k, op) in ops {
        let pf = op.apply(f);
        upward.push((*k, lp_norm(&pf.sub(f), p)?));
        downward.push((*k, lp_norm(&pf, p)?));
    }
    upward.sort_by_key(|e| e.0);
    downward.sort_by_key(|e| e.0);
    let upward_decreasing = upward.windows(2).all(|w| w[1].1 <= w[0].1 * 1.05);
    let downward_decreasing = downward.windows(2).all(|w| w[1].1 >= w[0].1 * 0.95);
    Ok(ConvergenceReport {
        upward,
        downward,
        upward_decreasing,
        downward_decreasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvergenceMode {
    Lp(f64),
    H1,
}

#[derive(Debug, Clone)]
pub struct ReproducingConvergence {
    /// (M, error) partial-sum errors over scales |k| <= M
    pub errors: Vec<(i32, f64)>,
    pub decreasing: bool,
    pub final_error: f64,
    /// per-scale k and H¹ norm of the term M_b D~_k M_b D_k M_b φ
    pub per_scale_h1: Vec<(i32, f64)>,
    /// fitted decay rate γ of the (1+|k|) 2^{-γ|k|} envelope
    pub envelope_gamma: f64,
}

/// Partial sums of the reproducing formula against bφ in the chosen norm,
/// plus the per-scale H¹ norms and their decay envelope fit.
pub fn reproducing_convergence(
    fam: &ReproducingFamily,
    phi: &GridFunction,
    mode: ConvergenceMode,
) -> Result<ReproducingConvergence> {
    let b = fam.b().function().clone();
    if pairing(&b, phi)?.norm() > 1e-8 * lp_norm(phi, 1.0)?.max(1e-300) {
        return Err(CzError::InvalidParameter(
            "bφ must have mean zero; project the probe first".into(),
        ));
    }
    let target = b.mul(phi);
    let norm_of = |g: &GridFunction| -> f64 {
        match mode {
            ConvergenceMode::Lp(p) => lp_norm(g, p).expect("norm"),
            ConvergenceMode::H1 => h1_norm(g).value,
        }
    };
    let target_norm = norm_of(&target).max(1e-300);
    let max_abs_k = fam
        .scales()
        .map(|k| k.unsigned_abs())
        .max()
        .unwrap_or(0) as i32;
    let mut errors = Vec::new();
    for m in 0..=max_abs_k {
        let mut acc = GridFunction::zero(b.grid());
        for k in fam.scales() {
            if k.abs() <= m {
                acc = acc.add(&fam.term(k, phi));
            }
        }
        errors.push((m, norm_of(&acc.sub(&target)) / target_norm));
    }
    let decreasing = errors.windows(2).all(|w| w[1].1 <= w[0].1 * 1.05);
    let final_error = errors.last().map(|e| e.1).unwrap_or(f64::NAN);

    // per-scale H¹ terms f_k = M_b D~_k M_b D_k M_b φ and the envelope fit
    let mut per_scale_h1 = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in fam.scales() {
        let fk = b.mul(&fam.term(k, phi));
        let v = h1_norm(&fk).value;
        per_scale_h1.push((k, v));
        if v > 0.0 {
            xs.push(-(k.abs() as f64));
            ys.push(v / (1.0 + k.abs() as f64));
        }
    }
    let (envelope_gamma, _) = log2_slope(&xs, &ys);
    Ok(ReproducingConvergence {
        errors,
        decreasing,
        final_error,
        per_scale_h1,
        envelope_gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accretive::{build_approx_identity, build_smoothing, ParaAccretive};
    use approx::assert_abs_diff_eq;

    fn grid(l: f64, n: usize) -> Grid {
        Grid::new(l, n).unwrap()
    }

    fn unit_bump(grid: Grid, center: f64, w: f64) -> GridFunction {
        let raw = GridFunction::sample_real(grid, move |x| {
            let u = (x - center) / w;
            if u.abs() < 1.0 {
                (-1.0 / (1.0 - u * u)).exp()
            } else {
                0.0
            }
        });
        let mass = lp_norm(&raw, 1.0).unwrap();
        raw.scale(C64::new(1.0 / mass, 0.0))
    }

    #[test]
    fn h1_of_zero_and_of_dipole() {
        let g = grid(32.0, 1024);
        let z = GridFunction::zero(g);
        assert_eq!(h1_norm(&z).value, 0.0);

        let dipole = unit_bump(g, 1.0, 0.5).sub(&unit_bump(g, -1.0, 0.5));
        let r = h1_norm(&dipole);
        assert!(!r.truncation_flag);
        assert!(r.value.is_finite() && r.value > 0.0);
        // refinement stability within 5%
        let g2 = grid(32.0, 2048);
        let dipole2 = unit_bump(g2, 1.0, 0.5).sub(&unit_bump(g2, -1.0, 0.5));
        let r2 = h1_norm(&dipole2);
        assert!(
            (r.value - r2.value).abs() / r2.value < 0.05,
            "{} vs {}",
            r.value,
            r2.value
        );
    }

    #[test]
    fn h1_flags_nonzero_mean_and_grows_logarithmically() {
        let mut values = Vec::new();
        for l in [16.0, 32.0] {
            let g = Grid::new(l, (l as usize) * 32).unwrap();
            let bump = unit_bump(g, 0.0, 0.5);
            let r = h1_norm(&bump);
            assert!(r.truncation_flag);
            values.push(r.value);
        }
        // tail ~ mass/(π x): doubling L adds about (2/π) ln 2
        let growth = values[1] - values[0];
        assert!(growth > 0.3, "log growth {growth}");
    }

    #[test]
    fn h1_homogeneity_and_translation_invariance() {
        let g = grid(32.0, 1024);
        let f = unit_bump(g, 1.0, 0.5).sub(&unit_bump(g, -1.0, 0.5));
        let r1 = h1_norm(&f).value;
        let r2 = h1_norm(&f.scale(C64::new(2.0, 0.0))).value;
        assert_abs_diff_eq!(r2, 2.0 * r1, epsilon = 1e-10 * r1.abs());
        // shift by an exact number of cells
        let shift = (1.0 / g.spacing()) as usize;
        let mut shifted = vec![C64::new(0.0, 0.0); g.len()];
        for i in 0..g.len() - shift {
            shifted[i + shift] = f.values()[i];
        }
        let fs = GridFunction::new(g, shifted).unwrap();
        let r3 = h1_norm(&fs).value;
        assert!((r3 - r1).abs() / r1 < 2e-2, "{r3} vs {r1}");
    }

    #[test]
    fn bmo_basics() {
        let g = grid(4.0, 512);
        let c = GridFunction::sample_real(g, |_| 3.25);
        assert!(bmo_norm(&c) < 1e-13);
        let f = GridFunction::sample_real(g, |x| (5.0 * x).sin());
        let sup = f.sup_norm();
        assert!(bmo_norm(&f) <= 2.0 * sup + 1e-12);
    }

    #[test]
    fn bmo_of_log_is_refinement_stable() {
        let mut vals = Vec::new();
        for n in [512usize, 1024] {
            let g = grid(4.0, n);
            let f = GridFunction::sample_real(g, |x| x.abs().ln());
            vals.push(bmo_norm(&f));
        }
        let rel = (vals[1] - vals[0]).abs() / vals[1];
        assert!(rel < 0.10, "bmo(log) drift {rel}");
        assert!(vals[1].is_finite());
    }

    #[test]
    fn carleson_of_spike_and_homogeneity() {
        let g = grid(2.0, 256);
        let zero = vec![vec![0.0; 256]];
        let c0 = carleson_norm(g, &[0], &zero).unwrap();
        assert_eq!(c0.norm, 0.0);

        // single-cell spike at a scale matching one cell: norm = 1
        let h = g.spacing();
        let k0 = (-(h.log2())).ceil() as i32; // 2^{-k0} <= h
        let mut d = vec![0.0; 256];
        d[100] = 1.0;
        let c = carleson_norm(g, &[k0], &[d.clone()]).unwrap();
        assert_abs_diff_eq!(c.norm, 1.0, epsilon = 1e-12);

        // quadratic homogeneity when the field doubles
        let d2: Vec<f64> = d.iter().map(|v| 4.0 * v).collect();
        let c2 = carleson_norm(g, &[k0], &[d2]).unwrap();
        assert_abs_diff_eq!(c2.norm, 4.0 * c.norm, epsilon = 1e-12);

        let bad = vec![vec![-1.0; 256]];
        assert!(carleson_norm(g, &[0], &bad).is_err());
    }

    #[test]
    fn holder_norm_of_linear_function() {
        let g = grid(1.0, 256);
        let f = GridFunction::sample_real(g, |x| 2.0 * x);
        let v = holder_norm(&f, 1.0).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-10);
        assert!(holder_norm(&f, 0.0).is_err());
        assert!(holder_norm(&f, 1.5).is_err());
    }

    #[test]
    fn projector_gives_exact_mean_zero() {
        let g = grid(2.0, 256);
        let b = GridFunction::sample(g, |x| C64::new(1.0, 0.3 * x.sin()));
        let phi = GridFunction::sample_real(g, |x| (-(x * x)).exp());
        let pz = project_mean_zero(&phi, &b).unwrap();
        assert!(pairing(&b, &pz).unwrap().norm() < 1e-10);
    }

    #[test]
    fn h1_growth_is_at_most_linearish() {
        let g = grid(16.0, 2048);
        let pairs: Vec<(i32, i32)> = (0..=8)
            .map(|gap| (-((gap + 1) / 2), gap / 2))
            .collect();
        let rep = h1_growth_experiment(g, &pairs, 2.0);
        assert!(
            rep.fitted_exponent <= 1.15,
            "growth exponent {} norms {:?}",
            rep.fitted_exponent,
            rep.norms
        );
        // homogeneity: scaling the function scales the norm exactly
        let f = two_scale_mean_zero(g, -1, 1, 2.0);
        let a = h1_norm(&f).value;
        let b = h1_norm(&f.scale(C64::new(2.0, 0.0))).value;
        assert_abs_diff_eq!(b, 2.0 * a, epsilon = 1e-10 * a);
    }

    #[test]
    fn uchiyama_base_case_j_equals_k() {
        let g = grid(16.0, 1024);
        // gap 0: a single-scale mean-zero pair; its H¹ norm is bounded and
        // comparable to the gap-1 value (no scale separation to pay for)
        let f = two_scale_mean_zero(g, 2, 2, 2.0);
        let base = h1_norm(&f);
        assert!(!base.truncation_flag);
        assert!(base.value.is_finite() && base.value > 0.0);
        let f2 = two_scale_mean_zero(g, 1, 2, 2.0);
        let near = h1_norm(&f2).value;
        assert!(base.value < 3.0 * near, "base {} vs gap-1 {}", base.value, near);
    }

    #[test]
    fn approx_identity_convergence_both_branches() {
        let g = grid(2.0, 512);
        let ops: Vec<(i32, DenseOperator)> = (-2..=3)
            .map(|k| (k, build_smoothing(g, k).unwrap()))
            .collect();
        let f = GridFunction::sample_real(g, |x| (-(x * x) * 8.0).exp() * (3.0 * x).cos());
        let rep = approx_identity_convergence(&ops, &f, 2.0).unwrap();
        assert!(rep.upward_decreasing, "upward: {:?}", rep.upward);
        assert!(rep.downward_decreasing, "downward: {:?}", rep.downward);
        // smooth bump: first-order mollifier error at the finest scale
        let fine = rep.upward.last().unwrap().1;
        assert!(fine < 0.05, "fine-scale error {fine}");
        let z = GridFunction::zero(g);
        let rz = approx_identity_convergence(&ops, &z, 2.0).unwrap();
        assert!(rz.upward.iter().all(|e| e.1 == 0.0));

        // sup bound ‖P_k f‖_∞ <= 2^{k/q} C ‖f‖_q for q = 1; the constant is
        // the normalized mollifier's sup, ≈ e⁻¹ / (0.444/8) ≈ 6.63
        for (k, op) in &ops {
            let sup = op.apply(&f).sup_norm();
            let bound = 2f64.powi(*k) * lp_norm(&f, 1.0).unwrap() * 8.0;
            if *k <= 0 {
                assert!(sup <= bound.max(1e-12), "k={k}: sup {sup} vs bound {bound}");
            }
        }
    }

    #[test]
    fn reproducing_convergence_l2_and_h1() {
        let g = grid(2.0, 512);
        let b = ParaAccretive::certify(
            GridFunction::sample(g, |x| C64::new(1.0, 0.4 * (std::f64::consts::PI * x).sin())),
            1,
        )
        .unwrap();
        let s = build_approx_identity(&b, -2, 3, 0.1).unwrap();
        let raw = GridFunction::sample_real(g, |x| (-(x / 0.4) * (x / 0.4)).exp() * (8.0 * x).cos());
        let phi = project_mean_zero(&raw, b.function()).unwrap();
        let probes = vec![phi.clone()];
        let fam = crate::accretive::build_reproducing_family(&s, 1e-6, &probes).unwrap();

        let rep = reproducing_convergence(&fam, &phi, ConvergenceMode::Lp(2.0)).unwrap();
        assert!(rep.decreasing, "errors {:?}", rep.errors);
        assert!(
            rep.final_error <= 1.5 * fam.residual.max(1e-12),
            "final {} vs residual {}",
            rep.final_error,
            fam.residual
        );

        let zero = GridFunction::zero(g);
        let rz = reproducing_convergence(&fam, &zero, ConvergenceMode::Lp(2.0)).unwrap();
        assert!(rz.errors.iter().all(|e| !e.1.is_nan()));

        let reph1 = reproducing_convergence(&fam, &phi, ConvergenceMode::H1).unwrap();
        assert!(reph1.envelope_gamma.is_finite());
        // unprojected probe rejected
        let bad = GridFunction::sample_real(g, |x| (-(x * x)).exp());
        assert!(reproducing_convergence(&fam, &bad, ConvergenceMode::H1).is_err());
    }

    #[test]
    fn duality_pairing_controlled_by_h1_times_bmo() {
        let g = grid(32.0, 1024);
        let fs = [
            unit_bump(g, 1.0, 0.5).sub(&unit_bump(g, -1.0, 0.5)),
            unit_bump(g, 2.0, 1.0).sub(&unit_bump(g, -3.0, 1.0)),
        ];
        let gs = [
            GridFunction::sample_real(g, |x| x.abs().max(1e-9).ln()),
            GridFunction::sample_real(g, |x| (3.0 * x).sin()),
        ];
        for f in &fs {
            let hf = h1_norm(f).value;
            for gg in &gs {
                let p = pairing(f, gg).unwrap().norm();
                let bound = hf * bmo_norm(gg);
                assert!(p <= 5.0 * bound, "duality ratio {}", p / bound);
            }
        }
    }
}
