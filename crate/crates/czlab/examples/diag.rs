use czlab::grid::*;
use czlab::riesz::*;

fn main() {
    let target_x = -0.43f64;
    for n in [512usize, 1024, 2048, 4096] {
        let g = Grid::new(8.0, n).unwrap();
        let f1 = AnalyticProbe::poly_bump(g, 0.5, 0.8);
        let f2 = AnalyticProbe::oscillating_bump(g, -0.6, 0.9, 3.0);
        let kern = CurveKernels::new(LipschitzCurve::build(CurveProfile::Flat, 8.0).unwrap());
        let i = ((target_x + 8.0) / g.spacing() - 0.5).round() as usize;
        let ibp = riesz_ibp(&kern, 1, &f1, &f2, &[i]).unwrap();
        println!("n={n}: x={:+.5} ibp={:.6}", g.point(i), ibp[0].re);
    }
}
