//! Manufactured-solution convergence of the forward solver.
//!
//! For homogeneous γ the coefficient G vanishes and H = e^{ikx} with
//! k² = -iωμ₀γ solves the field equation exactly; the discrete solution with
//! the exact Dirichlet trace must converge at second order in L∞.

use mrept::forward::solve_forward;
use mrept::grid::{ComplexField, Grid3D, RealField};
use mrept::linsolve::SolverConfig;
use mrept::phantom::Admittivity;
use mrept::{EPS0, MU0, OMEGA_DEFAULT};
use num_complex::Complex64;

fn linf_error(a: &ComplexField, b: &ComplexField) -> f64 {
    a.sub_field(b).max_abs()
}

#[test]
fn second_order_in_linf() {
    let omega = OMEGA_DEFAULT;
    let gamma0 = Complex64::new(1.0, omega * 80.0 * EPS0);
    let k = (-Complex64::i() * omega * MU0 * gamma0).sqrt();
    let solver = SolverConfig {
        tol: 1e-11,
        max_iter: None,
    };
    let mut errs = Vec::new();
    for n in [9, 17, 33] {
        let grid = Grid3D::centered([n, n, n], [0.15, 0.15, 0.15]).unwrap();
        let exact = ComplexField::from_fn(grid, |p| (Complex64::i() * k * p[0]).exp());
        let adm = Admittivity {
            sigma: RealField::constant(grid, gamma0.re),
            eps: RealField::constant(grid, gamma0.im / omega),
            omega,
        };
        let (h, report) = solve_forward(&adm, &exact, &solver).unwrap();
        // far below the discretization error measured next
        assert!(report.relative_residual < 1e-6);
        errs.push(linf_error(&h, &exact));
    }
    assert!(
        errs[0] / errs[1] >= 3.0,
        "ratios {:.2} {:.2} (errors {errs:?})",
        errs[0] / errs[1],
        errs[1] / errs[2]
    );
    assert!(
        errs[1] / errs[2] >= 3.0,
        "ratios {:.2} {:.2} (errors {errs:?})",
        errs[0] / errs[1],
        errs[1] / errs[2]
    );
}

#[test]
fn homogeneous_phantom_with_constant_trace_peaks_near_boundary() {
    // strong damping pushes |H| down toward the center of the domain
    let omega = OMEGA_DEFAULT;
    let grid = Grid3D::centered([13, 13, 13], [0.2, 0.2, 0.2]).unwrap();
    let adm = Admittivity {
        sigma: RealField::constant(grid, 1.5),
        eps: RealField::constant(grid, 60.0 * EPS0),
        omega,
    };
    let trace = ComplexField::constant(grid, Complex64::ONE);
    let (h, _) = solve_forward(&adm, &trace, &SolverConfig::default()).unwrap();
    let center = h.values()[grid.idx(6, 6, 6)].norm();
    let near_face = h.values()[grid.idx(1, 6, 6)].norm();
    assert!(
        center < near_face,
        "center {center:.4} vs near-face {near_face:.4}"
    );
    assert!(h.all_finite());
}
