use core::f64::consts::PI;

use nlpm_core::fracops::{build_frac_laplacian, frac_laplacian_constant, grad_riesz_constant, riesz_constant};
use nlpm_core::{Field, Grid};

// Gamma values from mpmath.
const GAMMA_3_4: f64 = 1.225_416_702_465_177_6;
const GAMMA_M1_4: f64 = -4.901_666_809_860_07;
const GAMMA_5_4: f64 = 0.906_402_477_055_477;
const GAMMA_M3_4: f64 = -4.834_146_544_295_878;

#[test]
fn constants_against_tabulated_gammas() {
    let sigma = |a: f64, g_num: f64, g_neg: f64| 4f64.powf(a) * g_num / (PI.sqrt() * g_neg.abs());
    assert!((frac_laplacian_constant(0.25) - sigma(0.25, GAMMA_3_4, GAMMA_M1_4)).abs() < 1e-13);
    assert!((frac_laplacian_constant(0.75) - sigma(0.75, GAMMA_5_4, GAMMA_M3_4)).abs() < 1e-13);
    assert!((frac_laplacian_constant(0.5) - 1.0 / PI).abs() < 1e-14);
    // Gamma(1/4) cancels at s = 1/4
    assert!((riesz_constant(0.25) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14);
    assert!((grad_riesz_constant(0.5) + 1.0 / PI).abs() < 1e-14);
}

#[test]
fn half_laplacian_of_the_poisson_kernel() {
    // (-Delta)^{1/2} 1/(1+x^2) = (1-x^2)/(1+x^2)^2
    let grid = Grid::symmetric(64.0, 8192).unwrap();
    let u = Field::from_fn(grid, |x| 1.0 / (1.0 + x * x));
    let lu = build_frac_laplacian(&grid, 0.5).unwrap().apply(&u).unwrap();
    let mut worst = 0f64;
    for i in 0..grid.n {
        let x = grid.x(i);
        if x.abs() <= 4.0 {
            let exact = (1.0 - x * x) / (1.0 + x * x).powi(2);
            worst = worst.max((lu.values[i] - exact).abs());
        }
    }
    assert!(worst < 2e-3, "max error {worst}");
}
