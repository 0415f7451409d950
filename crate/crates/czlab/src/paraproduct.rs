//! The explicit bilinear paraproduct with prescribed testing values: built
//! from two approximation-to-identity families, the reproducing companions
//! of the output slot, and a BMO symbol β. Its defining properties — the
//! forward testing value β and vanishing transposes — are verified by
//! smooth-cutoff sweeps.

use num_complex::Complex64 as C64;

use crate::accretive::{build_approx_identity, build_reproducing_family, ApproxIdentity,
    ParaAccretive, ReproducingFamily};
use crate::error::{CzError, Result};
use crate::fit::log2_slope;
use crate::grid::{lp_norm, pairing, Grid, GridFunction};
use crate::kernels::{BilinearKernelFamily, KernelClass};
use crate::spaces::carleson_norm;

/// Smooth cutoff profile: 1 on |x| <= R, cos² taper on R < |x| < 2R.
pub fn eta_cutoff(grid: Grid, r: f64) -> GridFunction {
    GridFunction::sample_real(grid, move |x| {
        let a = x.abs();
        if a <= r {
            1.0
        } else if a < 2.0 * r {
            let t = (a - r) / r;
            (std::f64::consts::FRAC_PI_2 * t).cos().powi(2)
        } else {
            0.0
        }
    })
}

/// Alternative admissible cutoff with a smoother (quintic smoothstep) taper,
/// used by the cutoff-independence checks.
pub fn eta_cutoff_smoothstep(grid: Grid, r: f64) -> GridFunction {
    GridFunction::sample_real(grid, move |x| {
        let a = x.abs();
        if a <= r {
            1.0
        } else if a < 2.0 * r {
            let t = (a - r) / r;
            let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
            1.0 - s
        } else {
            0.0
        }
    })
}

pub struct Paraproduct {
    pub b0: ParaAccretive,
    pub b1: ParaAccretive,
    pub b2: ParaAccretive,
    pub beta: GridFunction,
    pub s1: ApproxIdentity,
    pub s2: ApproxIdentity,
    pub rep0: ReproducingFamily,
    /// per-scale weights u_k, the transpose companions applied to β
    pub weights: Vec<GridFunction>,
    pub carleson: f64,
}

impl Paraproduct {
    pub fn grid(&self) -> Grid {
        self.b0.grid()
    }

    pub fn scales(&self) -> impl Iterator<Item = i32> + '_ {
        self.rep0.scales()
    }

    fn weight(&self, k: i32) -> &GridFunction {
        &self.weights[(k - self.rep0.k_min) as usize]
    }

    /// L(f1, f2) = Σ_k D_k^{b0} M_{b0} [u_k · (S_k^{b1} f1) · (S_k^{b2} f2)].
    pub fn apply(&self, f1: &GridFunction, f2: &GridFunction) -> GridFunction {
        let b0v = self.b0.function();
        let mut acc = GridFunction::zero(self.grid());
        for k in self.scales() {
            let g = self
                .weight(k)
                .mul(&self.s1.op(k).apply(f1))
                .mul(&self.s2.op(k).apply(f2));
            acc = acc.add(&self.rep0.d_op(k).apply(&b0v.mul(&g)));
        }
        acc
    }

    /// First transpose as an operator: ⟨L^{∗1}(f0, f2), f1⟩ = ⟨L(f1, f2), f0⟩,
    /// realized by reindexing the cached per-scale terms.
    pub fn apply_t1(&self, f0: &GridFunction, f2: &GridFunction) -> GridFunction {
        let b0v = self.b0.function();
        let mut acc = GridFunction::zero(self.grid());
        for k in self.scales() {
            let w = self
                .weight(k)
                .mul(&self.s2.op(k).apply(f2))
                .mul(&b0v.mul(&self.rep0.d_op(k).apply_transpose(f0)));
            acc = acc.add(&self.s1.op(k).apply_transpose(&w));
        }
        acc
    }

    /// Second transpose: ⟨L^{∗2}(f1, f0), f2⟩ = ⟨L(f1, f2), f0⟩.
    pub fn apply_t2(&self, f1: &GridFunction, f0: &GridFunction) -> GridFunction {
        let b0v = self.b0.function();
        let mut acc = GridFunction::zero(self.grid());
        for k in self.scales() {
            let w = self
                .weight(k)
                .mul(&self.s1.op(k).apply(f1))
                .mul(&b0v.mul(&self.rep0.d_op(k).apply_transpose(f0)));
            acc = acc.add(&self.s2.op(k).apply_transpose(&w));
        }
        acc
    }

    /// Kernel value ℓ(x, y1, y2) = Σ_k h Σ_u d_k(x,u) b0(u) u_k(u)
    /// s_k^{b1}(u,y1) s_k^{b2}(u,y2).
    pub fn kernel(&self, x: usize, y1: usize, y2: usize) -> C64 {
        let h = self.grid().spacing();
        let n = self.grid().len();
        let b0v = self.b0.function();
        let mut acc = C64::new(0.0, 0.0);
        for k in self.scales() {
            let d = self.rep0.d_op(k);
            let s1 = self.s1.op(k);
            let s2 = self.s2.op(k);
            let band = d.band().unwrap_or(n);
            let lo = x.saturating_sub(band);
            let hi = (x + band).min(n - 1);
            let mut term = C64::new(0.0, 0.0);
            for u in lo..=hi {
                let duv = d.entry(x, u);
                if duv.re == 0.0 && duv.im == 0.0 {
                    continue;
                }
                term += duv
                    * b0v.values()[u]
                    * self.weight(k).values()[u]
                    * s1.entry(u, y1)
                    * s2.entry(u, y2);
            }
            acc += term * h;
        }
        acc
    }

    /// Per-scale kernels ℓ_k as a bilinear family for class verification.
    pub fn kernel_family(&self) -> BilinearKernelFamily<'_> {
        let grid = self.grid();
        let n = grid.len();
        let h = grid.spacing();
        BilinearKernelFamily::new(
            grid,
            self.rep0.k_min,
            self.rep0.k_min + self.rep0.d.len() as i32 - 1,
            KernelClass::Sblpk,
            2.0,
            1.0,
            move |k, x, y1, y2| {
                let d = self.rep0.d_op(k);
                let s1 = self.s1.op(k);
                let s2 = self.s2.op(k);
                let band = d.band().unwrap_or(n);
                let lo = x.saturating_sub(band);
                let hi = (x + band).min(n - 1);
                let mut term = C64::new(0.0, 0.0);
                for u in lo..=hi {
                    term += d.entry(x, u)
                        * self.b0.function().values()[u]
                        * self.weight(k).values()[u]
                        * s1.entry(u, y1)
                        * s2.entry(u, y2);
                }
                term * h
            },
        )
    }
}

/// Assemble the paraproduct over a common grid and scale range. The
/// reproducing-family residual is measured on `residual_probes` (mean-zero
/// against b0).
pub fn build_paraproduct(
    b0: &ParaAccretive,
    b1: &ParaAccretive,
    b2: &ParaAccretive,
    beta: &GridFunction,
    k_min: i32,
    k_max: i32,
    regularization: f64,
    residual_probes: &[GridFunction],
) -> Result<Paraproduct> {
    let grid = b0.grid();
    if b1.grid() != grid || b2.grid() != grid || beta.grid() != grid {
        return Err(CzError::GridMismatch(
            "paraproduct families must share one grid".into(),
        ));
    }
    let s1 = build_approx_identity(b1, k_min, k_max, 0.1)?;
    let s2 = build_approx_identity(b2, k_min, k_max, 0.1)?;
    let s0 = build_approx_identity(b0, k_min, k_max, 0.1)?;
    let rep0 = build_reproducing_family(&s0, regularization, residual_probes)?;
    let weights: Vec<GridFunction> = rep0
        .scales()
        .map(|k| rep0.dtilde_op(k).apply_transpose(beta))
        .collect();
    let k_values: Vec<i32> = rep0.scales().collect();
    let densities: Vec<Vec<f64>> = weights
        .iter()
        .map(|w| w.values().iter().map(|v| v.norm_sqr()).collect())
        .collect();
    let carleson = carleson_norm(grid, &k_values, &densities)?.norm;
    Ok(Paraproduct {
        b0: b0.clone(),
        b1: b1.clone(),
        b2: b2.clone(),
        beta: beta.clone(),
        s1,
        s2,
        rep0,
        weights,
        carleson,
    })
}

#[derive(Debug, Clone)]
pub struct TestingReport {
    pub r_values: Vec<f64>,
    /// per R: max over probes of |⟨L(b1 η_R, b2 η_R), b0 φ⟩ − ⟨β, b0 φ⟩|
    /// relative to |⟨β, b0 φ⟩|
    pub e0: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub e0_final: f64,
    pub e1_slope: f64,
    pub e2_slope: f64,
}

/// Sweep the three testing conditions over the cutoff radii. Probes must be
/// pre-projected: probes0 against b0, probes1 against b1, probes2 against b2.
pub fn verify_testing_conditions(
    p: &Paraproduct,
    r_values: &[f64],
    probes0: &[GridFunction],
    probes1: &[GridFunction],
    probes2: &[GridFunction],
) -> Result<TestingReport> {
    let grid = p.grid();
    let l = grid.half_width();
    let mut e0 = Vec::new();
    let mut e1 = Vec::new();
    let mut e2 = Vec::new();
    for &r in r_values {
        if 2.0 * r > l {
            return Err(CzError::InvalidParameter(format!(
                "cutoff radius {r} exceeds the interior (L/2 = {})",
                l / 2.0
            )));
        }
        let eta = eta_cutoff(grid, r);
        let b1e = p.b1.function().mul(&eta);
        let b2e = p.b2.function().mul(&eta);
        let mut w0: f64 = 0.0;
        for phi in probes0 {
            let b0phi = p.b0.function().mul(phi);
            let lhs = pairing(&p.apply(&b1e, &b2e), &b0phi)?;
            let target = pairing(&p.beta, &b0phi)?;
            w0 = w0.max((lhs - target).norm() / target.norm().max(1e-300));
        }
        e0.push(w0);
        let b0e = p.b0.function().mul(&eta);
        let mut w1: f64 = 0.0;
        for phi in probes1 {
            let b1phi = p.b1.function().mul(phi);
            let v = pairing(&p.apply_t1(&b0e, &b2e), &b1phi)?;
            let scale = lp_norm(&b1phi, 1.0)? * p.beta.sup_norm();
            w1 = w1.max(v.norm() / scale.max(1e-300));
        }
        e1.push(w1);
        let mut w2: f64 = 0.0;
        for phi in probes2 {
            let b2phi = p.b2.function().mul(phi);
            let v = pairing(&p.apply_t2(&b1e, &b0e), &b2phi)?;
            let scale = lp_norm(&b2phi, 1.0)? * p.beta.sup_norm();
            w2 = w2.max(v.norm() / scale.max(1e-300));
        }
        e2.push(w2);
    }
    let lr: Vec<f64> = r_values.iter().map(|r| r.log2()).collect();
    let (e1_slope, _) = log2_slope(&lr, &e1);
    let (e2_slope, _) = log2_slope(&lr, &e2);
    Ok(TestingReport {
        r_values: r_values.to_vec(),
        e0_final: *e0.last().unwrap_or(&f64::NAN),
        e0,
        e1,
        e2,
        e1_slope,
        e2_slope,
    })
}

/// Max probe ratio ‖L(f1, f2)‖_p / (‖f1‖_{p1} ‖f2‖_{p2}) with the Hölder
/// triple 1/p = 1/p1 + 1/p2.
pub fn boundedness_ratio(
    p: &Paraproduct,
    lp: f64,
    p1: f64,
    p2: f64,
    probe_pairs: &[(GridFunction, GridFunction)],
) -> Result<f64> {
    if (1.0 / p1 + 1.0 / p2 - 1.0 / lp).abs() > 1e-9 {
        return Err(CzError::InvalidParameter(
            "exponents must satisfy 1/p = 1/p1 + 1/p2".into(),
        ));
    }
    let mut best: f64 = 0.0;
    for (f1, f2) in probe_pairs {
        let denom = lp_norm(f1, p1)? * lp_norm(f2, p2)?;
        if denom > 0.0 {
            best = best.max(lp_norm(&p.apply(f1, f2), lp)? / denom);
        }
    }
    Ok(best)
}
