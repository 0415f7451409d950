//! Generic testing-condition audits for trilinear forms: weak-boundedness
//! constants over a certified bump library, scale-kernel extraction with its
//! cancellation checks, the scale-summed dual bound, and the reduction
//! T = S + L0 + L1 + L2 through measured symbols and paraproducts.

use num_complex::Complex64 as C64;

use crate::accretive::ParaAccretive;
use crate::error::{CzError, Result};
use crate::fit::{linear_fit, log2_slope};
use crate::grid::{lp_norm, pairing, Grid, GridFunction};
use crate::kernels::{phi_scaled, ScaleFamilies};
use crate::paraproduct::{build_paraproduct, eta_cutoff, eta_cutoff_smoothstep, Paraproduct};
use crate::riesz::{riesz_ibp, AnalyticProbe, CurveKernels};
use crate::spaces::project_mean_zero;

/// A trilinear form (f1, f2, f0) ↦ ⟨T(f1, f2), f0⟩ over one grid, with an
/// optional function-valued action and an optional off-diagonal kernel.
pub trait TrilinearForm: Sync {
    fn grid(&self) -> Grid;

    fn pair(&self, f1: &GridFunction, f2: &GridFunction, f0: &GridFunction) -> C64;

    /// T(f1, f2) as a grid function, when the form carries one.
    fn apply(&self, _f1: &GridFunction, _f2: &GridFunction) -> Option<GridFunction> {
        None
    }

    /// Pointwise kernel for triples off the diagonal.
    fn kernel(&self, _x: f64, _y1: f64, _y2: f64) -> Option<C64> {
        None
    }

    /// Declared Hölder regularity of the kernel.
    fn regularity(&self) -> f64 {
        1.0
    }

    /// Pairing with analytically differentiable probes; forms backed by
    /// integration-by-parts representations override this.
    fn pair_analytic(
        &self,
        f1: &AnalyticProbe,
        f2: &AnalyticProbe,
        f0: &AnalyticProbe,
    ) -> C64 {
        self.pair(&f1.values, &f2.values, &f0.values)
    }
}

/// The pointwise-product form ⟨f1 f2, f0⟩.
pub struct PointwiseProductForm {
    pub grid: Grid,
}

impl TrilinearForm for PointwiseProductForm {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn pair(&self, f1: &GridFunction, f2: &GridFunction, f0: &GridFunction) -> C64 {
        pairing(&f1.mul(f2), f0).expect("same grid")
    }

    fn apply(&self, f1: &GridFunction, f2: &GridFunction) -> Option<GridFunction> {
        Some(f1.mul(f2))
    }

    fn kernel(&self, _x: f64, _y1: f64, _y2: f64) -> Option<C64> {
        // a diagonal distribution: zero off the triple diagonal
        Some(C64::new(0.0, 0.0))
    }
}

/// A paraproduct viewed as a trilinear form.
pub struct ParaproductForm<'a> {
    pub inner: &'a Paraproduct,
}

impl TrilinearForm for ParaproductForm<'_> {
    fn grid(&self) -> Grid {
        self.inner.grid()
    }

    fn pair(&self, f1: &GridFunction, f2: &GridFunction, f0: &GridFunction) -> C64 {
        pairing(&self.inner.apply(f1, f2), f0).expect("same grid")
    }

    fn apply(&self, f1: &GridFunction, f2: &GridFunction) -> Option<GridFunction> {
        Some(self.inner.apply(f1, f2))
    }

    fn kernel(&self, x: f64, y1: f64, y2: f64) -> Option<C64> {
        let g = self.inner.grid();
        let idx = |t: f64| -> usize {
            (((t + g.half_width()) / g.spacing() - 0.5).round() as i64)
                .clamp(0, g.len() as i64 - 1) as usize
        };
        Some(self.inner.kernel(idx(x), idx(y1), idx(y2)))
    }
}

/// The flat first bilinear Riesz transform as a trilinear form; analytic
/// pairings go through the integration-by-parts representation, grid-only
/// pairings through a short p.v. extrapolation.
pub struct RieszFlatForm {
    pub grid: Grid,
    pub kernels: CurveKernels,
}

impl TrilinearForm for RieszFlatForm {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn pair(&self, f1: &GridFunction, f2: &GridFunction, f0: &GridFunction) -> C64 {
        let pts: Vec<usize> = (0..self.grid.len())
            .filter(|&i| f0.values()[i] != C64::new(0.0, 0.0))
            .collect();
        if pts.is_empty() {
            return C64::new(0.0, 0.0);
        }
        let rep = crate::riesz::riesz_pv(&self.kernels, 1, f1, f2, &[4, 2, 1], &pts)
            .expect("pv sweep");
        let h = self.grid.spacing();
        let mut acc = C64::new(0.0, 0.0);
        for (w, &i) in rep.limits.iter().zip(&pts) {
            acc += w * f0.values()[i];
        }
        acc * h
    }

    fn apply(&self, f1: &GridFunction, f2: &GridFunction) -> Option<GridFunction> {
        let pts: Vec<usize> = (0..self.grid.len()).collect();
        let rep = crate::riesz::riesz_pv(&self.kernels, 1, f1, f2, &[4, 2, 1], &pts)
            .expect("pv sweep");
        Some(GridFunction::new(self.grid, rep.limits).expect("same grid"))
    }

    fn kernel(&self, x: f64, y1: f64, y2: f64) -> Option<C64> {
        Some(self.kernels.kernel(1, x, y1, y2))
    }

    fn pair_analytic(
        &self,
        f1: &AnalyticProbe,
        f2: &AnalyticProbe,
        f0: &AnalyticProbe,
    ) -> C64 {
        let pts: Vec<usize> = (0..self.grid.len())
            .filter(|&i| f0.values.values()[i] != C64::new(0.0, 0.0))
            .collect();
        if pts.is_empty() {
            return C64::new(0.0, 0.0);
        }
        let v = riesz_ibp(&self.kernels, 1, f1, f2, &pts).expect("ibp");
        let h = self.grid.spacing();
        let mut acc = C64::new(0.0, 0.0);
        for (w, &i) in v.iter().zip(&pts) {
            acc += w * f0.values.values()[i];
        }
        acc * h
    }
}

/// Slot-exchange wrappers: ⟨T^{*1}(f0, f2), f1⟩ = ⟨T(f1, f2), f0⟩ and the
/// second-slot analogue.
pub struct TransposedForm<'a, T: TrilinearForm + ?Sized> {
    pub base: &'a T,
    pub slot: usize,
}

impl<T: TrilinearForm + ?Sized> TrilinearForm for TransposedForm<'_, T> {
    fn grid(&self) -> Grid {
        self.base.grid()
    }

    fn pair(&self, f1: &GridFunction, f2: &GridFunction, f0: &GridFunction) -> C64 {
        match self.slot {
            1 => self.base.pair(f0, f2, f1),
            2 => self.base.pair(f1, f0, f2),
            _ => panic!("slot must be 1 or 2"),
        }
    }

    fn regularity(&self) -> f64 {
        self.base.regularity()
    }

    fn pair_analytic(
        &self,
        f1: &AnalyticProbe,
        f2: &AnalyticProbe,
        f0: &AnalyticProbe,
    ) -> C64 {
        match self.slot {
            1 => self.base.pair_analytic(f0, f2, f1),
            2 => self.base.pair_analytic(f1, f0, f2),
            _ => panic!("slot must be 1 or 2"),
        }
    }
}

/// A normalized bump of order m: smooth profile supported in B(0, 1) whose
/// derivatives up to order m all stay below 1 in sup norm. The certification
/// constant is measured on a fine sample of the analytic profile.
#[derive(Debug, Clone, Copy)]
pub struct NormalizedBump {
    pub profile: usize,
    pub order: usize,
    scale: f64,
}

fn bump_profile(profile: usize, u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let base = (-1.0 / (1.0 - u * u)).exp();
    match profile {
        0 => base,
        1 => base * (std::f64::consts::PI * u).sin(),
        2 => base * (2.0 * std::f64::consts::PI * u).cos(),
        3 => base * (1.0 - 2.0 * u * u),
        _ => base * (1.0 + (2.0 * u).tanh()) * 0.5,
    }
}

fn bump_profile_deriv(profile: usize, u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let d = 1.0 - u * u;
    let base = (-1.0 / d).exp();
    let dbase = base * (-2.0 * u / (d * d));
    match profile {
        0 => dbase,
        1 => {
            dbase * (std::f64::consts::PI * u).sin()
                + base * std::f64::consts::PI * (std::f64::consts::PI * u).cos()
        }
        2 => {
            dbase * (2.0 * std::f64::consts::PI * u).cos()
                - base * 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * u).sin()
        }
        3 => dbase * (1.0 - 2.0 * u * u) + base * (-4.0 * u),
        _ => {
            let t = (2.0 * u).tanh();
            dbase * (1.0 + t) * 0.5 + base * (1.0 - t * t)
        }
    }
}

impl NormalizedBump {
    pub fn new(profile: usize, order: usize) -> Self {
        // certify sup_{|α| <= m} ‖∂^α φ‖_∞ <= 1 by measuring derivative sups
        // on a fine sample (higher orders by nested finite differences)
        let m = 20000usize;
        let du = 2.0 / m as f64;
        let mut sups = [0.0f64; 3];
        for i in 0..m {
            let u = -1.0 + (i as f64 + 0.5) * du;
            sups[0] = sups[0].max(bump_profile(profile, u).abs());
            sups[1] = sups[1].max(bump_profile_deriv(profile, u).abs());
            let dd = (bump_profile_deriv(profile, (u + du).min(1.0))
                - bump_profile_deriv(profile, (u - du).max(-1.0)))
                / (2.0 * du);
            sups[2] = sups[2].max(dd.abs());
        }
        let worst = sups[..=order.min(2)].iter().cloned().fold(0.0, f64::max);
        NormalizedBump {
            profile,
            order,
            scale: 1.0 / worst.max(1e-300),
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.scale * bump_profile(self.profile, u)
    }

    pub fn deriv(&self, u: f64) -> f64 {
        self.scale * bump_profile_deriv(self.profile, u)
    }

    /// φ^{x0, r} placed on the grid with its analytic derivative.
    pub fn place(&self, grid: Grid, x0: f64, r: f64) -> AnalyticProbe {
        let b = *self;
        AnalyticProbe::new(
            grid,
            move |x| b.value((x - x0) / r),
            move |x| b.deriv((x - x0) / r) / r,
        )
    }
}

#[derive(Debug, Clone)]
pub struct WbpReport {
    pub c_wbp: f64,
    /// max over R of the per-R maximum divided by the min over R
    pub scatter: f64,
    pub per_radius: Vec<(f64, f64)>,
    /// fitted growth exponent of the displaced-bump envelope in (1 + t)
    pub displaced_exponent: f64,
}

/// Weak-boundedness constant: the max over centers, radii, and a certified
/// bump library of |⟨T(b1 φ1, b2 φ2), b0 φ0⟩| / R, plus the displaced-bump
/// growth fit.
pub fn wbp_constant(
    t: &dyn TrilinearForm,
    b0: &ParaAccretive,
    b1: &ParaAccretive,
    b2: &ParaAccretive,
    r_values: &[f64],
    order: usize,
    centers: &[f64],
) -> Result<WbpReport> {
    let grid = t.grid();
    let h = grid.spacing();
    let bumps: Vec<NormalizedBump> = (0..5).map(|p| NormalizedBump::new(p, order)).collect();
    let triples: [(usize, usize, usize); 6] =
        [(0, 0, 0), (1, 2, 0), (3, 0, 4), (2, 1, 3), (4, 4, 0), (0, 3, 2)];
    let weigh = |p: &AnalyticProbe, b: &ParaAccretive| AnalyticProbe {
        values: b.function().mul(&p.values),
        derivative: p.derivative.clone(), // derivative slot is used only for
                                          // forms that integrate by parts in
                                          // an unweighted variable
    };
    let mut per_radius = Vec::new();
    let mut c_wbp: f64 = 0.0;
    for &r in r_values {
        if r < 8.0 * h {
            return Err(CzError::InvalidParameter(format!(
                "bump radius {r} unresolvable (needs at least 8 cells)"
            )));
        }
        let mut worst: f64 = 0.0;
        for &x0 in centers {
            for &(i1, i2, i0) in &triples {
                let p1 = bumps[i1].place(grid, x0, r);
                let p2 = bumps[i2].place(grid, x0, r);
                let p0 = bumps[i0].place(grid, x0, r);
                let v = t.pair_analytic(
                    &weigh(&p1, b1),
                    &weigh(&p2, b2),
                    &weigh(&p0, b0),
                );
                worst = worst.max(v.norm() / r);
            }
        }
        per_radius.push((r, worst));
        c_wbp = c_wbp.max(worst);
    }
    let min_r = per_radius.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let scatter = if min_r > 0.0 { c_wbp / min_r } else { f64::INFINITY };

    // displaced bumps: centers y1, y2 at distance t R from y0
    let r = r_values[r_values.len() / 2];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &tdisp in &[0.0, 1.0, 2.0, 4.0] {
        let y0 = centers[0];
        let p0 = bumps[0].place(grid, y0, r);
        let p1 = bumps[2].place(grid, y0 + tdisp * r, r);
        let p2 = bumps[3].place(grid, y0 - tdisp * r, r);
        let v = t
            .pair_analytic(&weigh(&p1, b1), &weigh(&p2, b2), &weigh(&p0, b0))
            .norm()
            / r;
        if v > 0.0 {
            xs.push((1.0 + tdisp).ln());
            ys.push(v.ln());
        }
    }
    let (displaced_exponent, _, _) = linear_fit(&xs, &ys);
    Ok(WbpReport {
        c_wbp,
        scatter,
        per_radius,
        displaced_exponent,
    })
}

#[derive(Debug, Clone)]
pub struct ThetaReport {
    pub k: i32,
    /// max over sampled (y1, y2) of |h Σ_x θ_k(x, y1, y2) b0(x)| relative to
    /// the line's sup
    pub cancel_residual: f64,
    /// least A with |θ_k| <= A Φ_k^N(x - y1) Φ_k^N(x - y2) at the fitted N
    pub a_fit: f64,
    pub n_fit: f64,
}

/// Extract θ_k(x, y1, y2) = ⟨T(b1 s_k(·,y1), b2 s_k(·,y2)), b0 d_k(x,·)⟩ on
/// sampled column pairs and audit its cancellation and size profile.
pub fn extract_theta(
    t: &dyn TrilinearForm,
    b0: &ParaAccretive,
    b1: &ParaAccretive,
    b2: &ParaAccretive,
    fams0: &ScaleFamilies,
    fams1: &ScaleFamilies,
    fams2: &ScaleFamilies,
    k: i32,
    sample_columns: &[(usize, usize)],
) -> Result<ThetaReport> {
    let grid = t.grid();
    let n = grid.len();
    let column = |fams: &ScaleFamilies, which: usize, j: usize| -> GridFunction {
        let op = if which == 0 {
            fams.diffs.op(k)
        } else {
            fams.approx.op(k)
        };
        GridFunction::new(grid, (0..n).map(|i| op.entry(i, j)).collect()).expect("same grid")
    };
    let mut cancel: f64 = 0.0;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut a_fit: f64 = 0.0;
    for &(jy1, jy2) in sample_columns {
        let g1 = b1.function().mul(&column(fams1, 1, jy1));
        let g2 = b2.function().mul(&column(fams2, 1, jy2));
        // θ-line over x: ⟨T(g1,g2), b0 d_k(x,·)⟩ = D_k(b0 · T(g1,g2))(x)
        let line = match t.apply(&g1, &g2) {
            Some(u) => fams0.diffs.op(k).apply(&b0.function().mul(&u)),
            None => {
                let vals: Vec<C64> = (0..n)
                    .map(|i| {
                        let row = GridFunction::new(
                            grid,
                            (0..n).map(|j| fams0.diffs.op(k).entry(i, j)).collect(),
                        )
                        .expect("same grid");
                        t.pair(&g1, &g2, &b0.function().mul(&row))
                    })
                    .collect();
                GridFunction::new(grid, vals)?
            }
        };
        let sup = line.sup_norm().max(1e-300);
        let integral = pairing(&line, b0.function())?;
        cancel = cancel.max(integral.norm() / sup);
        // size-profile samples against Φ_k ⊗ Φ_k
        let (y1, y2) = (grid.point(jy1), grid.point(jy2));
        for i in (0..n).step_by(7) {
            let v = line.values()[i].norm();
            if v < 1e-14 * sup {
                continue;
            }
            let x = grid.point(i);
            let d1 = 2f64.powi(k) * (x - y1).abs();
            let d2 = 2f64.powi(k) * (x - y2).abs();
            a_fit = a_fit.max(v / (phi_scaled(k, 1.25, x - y1) * phi_scaled(k, 1.25, x - y2)));
            if d1 + d2 > 2.0 {
                lx.push(((1.0 + d1) * (1.0 + d2)).log2());
                ly.push((v / 2f64.powi(2 * k)).log2());
            }
        }
    }
    let n_fit = if lx.len() >= 4 {
        let (slope, _, _) = linear_fit(&lx, &ly);
        -slope
    } else {
        f64::INFINITY
    };
    Ok(ThetaReport {
        k,
        cancel_residual: cancel,
        a_fit,
        n_fit,
    })
}

/// The scale family with both dual-bound cancellations built in:
/// Θ_k(f1, f2) = D_k^{b0,ᵀ}[b0 · (D_k^{b1} f1) · (S_k^{b2} f2)], so that the
/// x-integral against b0 and the (y1, y2)-integral against b1 b2 both vanish
/// exactly.
pub struct DualSumFamily<'a> {
    pub b0: &'a ParaAccretive,
    pub b1: &'a ParaAccretive,
    pub b2: &'a ParaAccretive,
    pub fams0: &'a ScaleFamilies,
    pub fams1: &'a ScaleFamilies,
    pub fams2: &'a ScaleFamilies,
}

impl DualSumFamily<'_> {
    pub fn scales(&self) -> Vec<i32> {
        self.fams0.diffs.scales().collect()
    }

    pub fn apply(&self, k: i32, f1: &GridFunction, f2: &GridFunction) -> GridFunction {
        let inner = self
            .fams1
            .diffs
            .op(k)
            .apply(f1)
            .mul(&self.fams2.approx.op(k).apply(f2));
        self.fams0
            .diffs
            .op(k)
            .apply_transpose(&self.b0.function().mul(&inner))
    }

    /// Hypothesis residuals: (x against b0, (y1,y2) against b1 b2).
    pub fn hypothesis_residuals(&self) -> (f64, f64) {
        let mut hx: f64 = 0.0;
        let mut hy: f64 = 0.0;
        for k in self.scales() {
            hx = hx.max(self.fams0.diffs.op(k).apply(self.b0.function()).sup_norm());
            let y = self
                .fams1
                .diffs
                .op(k)
                .apply(self.b1.function())
                .mul(&self.fams2.approx.op(k).apply(self.b2.function()));
            hy = hy.max(
                self.fams0
                    .diffs
                    .op(k)
                    .apply_transpose(&self.b0.function().mul(&y))
                    .sup_norm(),
            );
        }
        (hx, hy)
    }
}

#[derive(Debug, Clone)]
pub struct DualSumReport {
    pub sums: Vec<f64>,
    pub bound_ratio: f64,
    pub hypotheses_ok: bool,
}

/// S = Σ_k |⟨Θ_k(f1, f2), f0⟩| and the ratio against ∏ ‖f_i‖_{p_i} with
/// p0 = p' the dual exponent.
pub fn dual_sum_bound(
    fam: &DualSumFamily,
    p: f64,
    p1: f64,
    p2: f64,
    probes: &[(GridFunction, GridFunction, GridFunction)],
) -> Result<DualSumReport> {
    if (1.0 / p1 + 1.0 / p2 - 1.0 / p).abs() > 1e-9 {
        return Err(CzError::InvalidParameter(
            "exponents must satisfy 1/p = 1/p1 + 1/p2".into(),
        ));
    }
    let p0 = p / (p - 1.0);
    let (hx, hy) = fam.hypothesis_residuals();
    let hypotheses_ok = hx <= 1e-4 && hy <= 1e-4;
    let mut sums = Vec::new();
    let mut ratio: f64 = 0.0;
    for (f1, f2, f0) in probes {
        let mut s = 0.0;
        for k in fam.scales() {
            s += pairing(&fam.apply(k, f1, f2), f0)?.norm();
        }
        sums.push(s);
        let denom = lp_norm(f1, p1)? * lp_norm(f2, p2)? * lp_norm(f0, p0)?;
        if denom > 0.0 {
            ratio = ratio.max(s / denom);
        }
    }
    Ok(DualSumReport {
        sums,
        bound_ratio: ratio,
        hypotheses_ok,
    })
}

#[derive(Debug, Clone)]
pub struct TbPairingSweep {
    pub r_values: Vec<f64>,
    pub values: Vec<C64>,
    pub corrections: Vec<C64>,
    pub limit: C64,
    pub converged: bool,
    /// relative disagreement between the two admissible cutoff profiles
    pub cutoff_swap_deviation: f64,
}

/// The cutoff-limit pairing ⟨T(b1 f1, b2 f2), b0 f0⟩ via the η_R sweep with
/// the kernel correction term, plus the cutoff-independence check.
pub fn tb_pairing_sweep(
    t: &dyn TrilinearForm,
    b0: &ParaAccretive,
    b1: &ParaAccretive,
    b2: &ParaAccretive,
    f0: &GridFunction,
    r_values: &[f64],
    tol: f64,
) -> Result<TbPairingSweep> {
    let grid = t.grid();
    let h = grid.spacing();
    let n = grid.len();
    let b0f0 = b0.function().mul(f0);
    let mean_b0f0 = pairing(&b0f0, &GridFunction::sample_real(grid, |_| 1.0))?;
    let r0 = r_values[0];
    let eval = |eta_fn: &dyn Fn(f64) -> GridFunction, r: f64| -> (C64, C64) {
        let eta = eta_fn(r);
        let v = t.pair(&b1.function().mul(&eta), &b2.function().mul(&eta), &b0f0);
        // correction: ⟨b0 f0, 1⟩ · ∬ K(0, y1, y2) (η_R - η_{R0})(y1) b1(y1)
        //                               (η_R - η_{R0})(y2) b2(y2) dy1 dy2
        let corr = if r > r0 {
            match t.kernel(0.0, 1.0, -1.0) {
                Some(_) => {
                    let eta0 = eta_fn(r0);
                    let d = eta.sub(&eta0);
                    let mut acc = C64::new(0.0, 0.0);
                    for j1 in 0..n {
                        let w1 = d.values()[j1] * b1.function().values()[j1];
                        if w1 == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let y1 = grid.point(j1);
                        for j2 in 0..n {
                            let w2 = d.values()[j2] * b2.function().values()[j2];
                            if w2 == C64::new(0.0, 0.0) {
                                continue;
                            }
                            if let Some(kv) = t.kernel(0.0, y1, grid.point(j2)) {
                                acc += kv * w1 * w2;
                            }
                        }
                    }
                    acc * h * h * mean_b0f0
                }
                None => C64::new(0.0, 0.0),
            }
        } else {
            C64::new(0.0, 0.0)
        };
        (v, corr)
    };
    let mut values = Vec::new();
    let mut corrections = Vec::new();
    for &r in r_values {
        let (v, c) = eval(&|rr| eta_cutoff(grid, rr), r);
        values.push(v - c);
        corrections.push(c);
    }
    let limit = *values.last().expect("nonempty sweep");
    let scale = limit.norm().max(lp_norm(&b0f0, 1.0)?).max(1e-300);
    let converged = values
        .windows(2)
        .last()
        .map(|w| (w[1] - w[0]).norm() <= tol * scale)
        .unwrap_or(false);
    // cutoff independence at the largest radius
    let (alt, altc) = eval(&|rr| eta_cutoff_smoothstep(grid, rr), *r_values.last().unwrap());
    let cutoff_swap_deviation = ((alt - altc) - limit).norm() / scale;
    Ok(TbPairingSweep {
        r_values: r_values.to_vec(),
        values,
        corrections,
        limit,
        converged,
        cutoff_swap_deviation,
    })
}

/// Least-squares fit of a symbol from testing pairings: find β in the span
/// of `basis` with ⟨β, b0 φ_i⟩ ≈ t_i over the dictionary.
pub fn fit_symbol(
    grid: Grid,
    b0: &ParaAccretive,
    dictionary: &[GridFunction],
    targets: &[C64],
    basis: &[GridFunction],
) -> Result<GridFunction> {
    let m = dictionary.len();
    let q = basis.len();
    if m < q {
        return Err(CzError::InvalidParameter(format!(
            "dictionary ({m}) must be at least as rich as the basis ({q})"
        )));
    }
    // G[i][j] = ⟨ψ_j, b0 φ_i⟩, solve the normal equations with a small ridge
    let mut g = crate::linalg::CMatrix::zeros(m, q);
    for i in 0..m {
        let w = b0.function().mul(&dictionary[i]);
        for j in 0..q {
            *g.at_mut(i, j) = pairing(&basis[j], &w)?;
        }
    }
    let mut gram = crate::linalg::CMatrix::zeros(q, q);
    for a in 0..q {
        for b in 0..q {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..m {
                acc += g.at(i, a).conj() * g.at(i, b);
            }
            *gram.at_mut(a, b) = acc;
        }
    }
    let ridge = 1e-10
        * (0..q)
            .map(|a| gram.at(a, a).re)
            .fold(0.0f64, f64::max)
            .max(1e-300);
    for a in 0..q {
        *gram.at_mut(a, a) += C64::new(ridge, 0.0);
    }
    let mut rhs = vec![C64::new(0.0, 0.0); q];
    for a in 0..q {
        for i in 0..m {
            rhs[a] += g.at(i, a).conj() * targets[i];
        }
    }
    let chol = crate::linalg::Cholesky::new(&gram).ok_or_else(|| {
        CzError::InvalidParameter("symbol fit normal equations not positive".into())
    })?;
    chol.solve_vec(&mut rhs);
    let mut beta = GridFunction::zero(grid);
    for (a, c) in rhs.iter().enumerate() {
        beta = beta.add(&basis[a].scale(*c));
    }
    Ok(beta)
}

#[derive(Debug, Clone)]
pub struct ReductionReport {
    /// recovered symbols for the three testing slots
    pub beta0: GridFunction,
    pub beta1: GridFunction,
    pub beta2: GridFunction,
    /// residual testing pairings of S = T - L0 - L1 - L2, relative to the
    /// probe scales
    pub s_residuals: [f64; 3],
    pub t_bound_ratio: f64,
    pub s_bound_ratio: f64,
}

/// Measure the three symbols of T, build the matching paraproducts, and
/// audit the reduced form S = T - ΣL_i.
#[allow(clippy::too_many_arguments)]
pub fn reduce_and_test(
    t: &dyn TrilinearForm,
    b0: &ParaAccretive,
    b1: &ParaAccretive,
    b2: &ParaAccretive,
    k_min: i32,
    k_max: i32,
    r_values: &[f64],
    dictionary: &[GridFunction],
    basis: &[GridFunction],
    probe_pairs: &[(GridFunction, GridFunction)],
) -> Result<ReductionReport> {
    let grid = t.grid();
    // measured symbols through the cutoff sweeps
    let measure = |slot: usize| -> Result<GridFunction> {
        let (bb0, bb1, bb2): (&ParaAccretive, &ParaAccretive, &ParaAccretive) = match slot {
            0 => (b0, b1, b2),
            1 => (b1, b0, b2),
            _ => (b2, b1, b0),
        };
        let mut targets = Vec::new();
        let mut dict_proj = Vec::new();
        for phi in dictionary {
            let phi = project_mean_zero(phi, bb0.function())?;
            let sweep = match slot {
                0 => tb_pairing_sweep(t, bb0, bb1, bb2, &phi, r_values, 0.05)?,
                1 => {
                    let tt = TransposedForm { base: t, slot: 1 };
                    tb_pairing_sweep(&tt, bb0, bb1, bb2, &phi, r_values, 0.05)?
                }
                _ => {
                    let tt = TransposedForm { base: t, slot: 2 };
                    tb_pairing_sweep(&tt, bb0, bb1, bb2, &phi, r_values, 0.05)?
                }
            };
            targets.push(sweep.limit);
            dict_proj.push(phi);
        }
        fit_symbol(grid, bb0, &dict_proj, &targets, basis)
    };
    let beta0 = measure(0)?;
    let beta1 = measure(1)?;
    let beta2 = measure(2)?;

    // residual probes for the paraproduct builds
    let raw = GridFunction::sample_real(grid, |x| {
        let w = grid.half_width() / 10.0;
        (-(x / w) * (x / w)).exp() * (8.0 * x / grid.half_width()).cos()
    });
    let l0 = build_paraproduct(
        b0,
        b1,
        b2,
        &beta0,
        k_min,
        k_max,
        1e-6,
        &[project_mean_zero(&raw, b0.function())?],
    )?;
    let l1 = build_paraproduct(
        b1,
        b0,
        b2,
        &beta1,
        k_min,
        k_max,
        1e-6,
        &[project_mean_zero(&raw, b1.function())?],
    )?;
    let l2 = build_paraproduct(
        b2,
        b1,
        b0,
        &beta2,
        k_min,
        k_max,
        1e-6,
        &[project_mean_zero(&raw, b2.function())?],
    )?;

    // S-pairings: ⟨S(g1, g2), g0⟩ with the paraproducts reindexed into the
    // slots where their testing values live
    let s_pair = |g1: &GridFunction, g2: &GridFunction, g0: &GridFunction| -> C64 {
        let tv = t.pair(g1, g2, g0);
        let v0 = pairing(&l0.apply(g1, g2), g0).expect("same grid");
        // L1 is defined through its first transpose: ⟨L1(g1,g2), g0⟩ =
        // ⟨P'(g0, g2), g1⟩ with P' the paraproduct over (b1, b0, b2)
        let v1 = pairing(&l1.apply(g0, g2), g1).expect("same grid");
        let v2 = pairing(&l2.apply(g2, g0), g1_swap(g1, g2).0).expect("same grid");
        fn g1_swap<'x>(
            a: &'x GridFunction,
            b: &'x GridFunction,
        ) -> (&'x GridFunction, &'x GridFunction) {
            (a, b)
        }
        tv - v0 - v1 - v2
    };

    // residual testing pairings of S through the same sweep machinery
    let mut s_residuals = [0.0f64; 3];
    for slot in 0..3 {
        let (bb0, bb1, bb2): (&ParaAccretive, &ParaAccretive, &ParaAccretive) = match slot {
            0 => (b0, b1, b2),
            1 => (b1, b0, b2),
            _ => (b2, b1, b0),
        };
        let phi = project_mean_zero(&raw, bb0.function())?;
        let b0phi = bb0.function().mul(&phi);
        let r = *r_values.last().unwrap();
        let eta = eta_cutoff(grid, r);
        let (g1, g2, g0) = match slot {
            0 => (bb1.function().mul(&eta), bb2.function().mul(&eta), b0phi.clone()),
            1 => (b0phi.clone(), bb2.function().mul(&eta), bb1.function().mul(&eta)),
            _ => (bb1.function().mul(&eta), b0phi.clone(), bb2.function().mul(&eta)),
        };
        let v = match slot {
            0 => s_pair(&g1, &g2, &g0),
            1 => s_pair(&g1, &g2, &g0),
            _ => s_pair(&g1, &g2, &g0),
        };
        let scale = lp_norm(&b0phi, 1.0)?.max(1e-300);
        s_residuals[slot] = v.norm() / scale;
    }

    // boundedness ratios of T and S on probe pairs (p = 2, p1 = p2 = 4)
    let mut t_ratio: f64 = 0.0;
    let mut s_ratio: f64 = 0.0;
    for (f1, f2) in probe_pairs {
        let denom = lp_norm(f1, 4.0)? * lp_norm(f2, 4.0)?;
        if denom == 0.0 {
            continue;
        }
        if let Some(tv) = t.apply(f1, f2) {
            t_ratio = t_ratio.max(lp_norm(&tv, 2.0)? / denom);
            // S(f1, f2) = T(f1,f2) - L0(f1,f2) - L1^{*1-reindexed} - ...;
            // the transpose-slot paraproducts act through their forward
            // evaluators on the swapped arguments
            let sv = tv
                .sub(&l0.apply(f1, f2))
                .sub(&l1.apply_t1(f1, f2))
                .sub(&l2.apply_t2(f1, f2));
            s_ratio = s_ratio.max(lp_norm(&sv, 2.0)? / denom);
        }
    }
    Ok(ReductionReport {
        beta0,
        beta1,
        beta2,
        s_residuals,
        t_bound_ratio: t_ratio,
        s_bound_ratio: s_ratio,
    })
}

/// The finite-scale telescoping identity: the difference of the smoothed
/// pairings at the top and bottom scales equals the sum of the three
/// one-scale-difference pairings, exactly, by trilinearity.
pub fn telescoping_defect(
    t: &dyn TrilinearForm,
    fams0: &ScaleFamilies,
    fams1: &ScaleFamilies,
    fams2: &ScaleFamilies,
    b0: &ParaAccretive,
    b1: &ParaAccretive,
    b2: &ParaAccretive,
    f1: &GridFunction,
    f2: &GridFunction,
    f0: &GridFunction,
) -> f64 {
    let smooth = |fams: &ScaleFamilies, b: &ParaAccretive, f: &GridFunction, k: i32| {
        b.function().mul(&fams.approx.op(k).apply(&b.function().mul(f)))
    };
    let k_min = fams0.approx.k_min();
    let k_max = fams0.approx.k_max();
    let top = t.pair(
        &smooth(fams1, b1, f1, k_max),
        &smooth(fams2, b2, f2, k_max),
        &smooth(fams0, b0, f0, k_max),
    );
    let bottom = t.pair(
        &smooth(fams1, b1, f1, k_min),
        &smooth(fams2, b2, f2, k_min),
        &smooth(fams0, b0, f0, k_min),
    );
    let mut sum = C64::new(0.0, 0.0);
    for k in k_min..k_max {
        let a0 = smooth(fams1, b1, f1, k);
        let a1 = smooth(fams1, b1, f1, k + 1);
        let c0 = smooth(fams2, b2, f2, k);
        let c1 = smooth(fams2, b2, f2, k + 1);
        let e0 = smooth(fams0, b0, f0, k);
        let e1 = smooth(fams0, b0, f0, k + 1);
        sum += t.pair(&a1.sub(&a0), &c1, &e1);
        sum += t.pair(&a0, &c1.sub(&c0), &e1);
        sum += t.pair(&a0, &c0, &e1.sub(&e0));
    }
    let scale = top.norm().max(bottom.norm()).max(1e-300);
    ((top - bottom) - sum).norm() / scale
}
