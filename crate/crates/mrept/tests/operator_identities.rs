//! Algebraic identities of the coefficient fields on random smooth data.
//!
//! The in-plane derivative components satisfy Px = -Qy and Py = Qx, making
//! P and Q orthogonal in the xy-plane; the diffusion matrix A is symmetric,
//! singular (zero determinant), has the closed-form spectrum
//! {0, s₁, s₁+s₃}, and agrees entrywise with its unsimplified counterpart
//! M_ij = P_iP_j + Q_iQ_j. The zero-order sources (φ, ψ) match an
//! independently coded pair, and the first-order data operator satisfies
//! L H⁺ = P - iQ componentwise.

use mrept::grid::{ComplexField, Grid3D};
use mrept::operators::{
    apply_l, diffusion_matrix, diffusion_matrix_unsimplified, phi_psi, pq_fields,
};
use mrept::recon_init::{regularize, regularized_eigenvalues};
use mrept::MU0;
use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 16;

fn grid() -> Grid3D {
    Grid3D::centered([N, N, N], [2.0, 2.0, 2.0]).unwrap()
}

/// Random band-limited complex field: a handful of Fourier modes with
/// seeded coefficients, so derivatives are well resolved on the grid.
fn random_smooth_field(seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<([f64; 3], Complex64, f64)> = (0..6)
        .map(|_| {
            let k = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            (k, amp, phase)
        })
        .collect();
    ComplexField::from_fn(grid(), |p| {
        modes
            .iter()
            .map(|(k, amp, phase)| {
                amp * (k[0] * p[0] + k[1] * p[1] + k[2] * p[2] + phase).sin()
            })
            .sum()
    })
}

#[test]
fn inplane_derivative_identities() {
    for seed in 0..20 {
        let h = random_smooth_field(seed);
        let (p, q) = pq_fields(&h);
        let scale = p.x.max_abs().max(q.y.max_abs()).max(1e-30);
        for idx in 0..grid().num_nodes() {
            let [px, py, _] = p.at(idx);
            let [qx, qy, _] = q.at(idx);
            assert!((px + qy).abs() <= 1e-13 * scale, "seed {seed}: Px != -Qy");
            assert!((py - qx).abs() <= 1e-13 * scale, "seed {seed}: Py != Qx");
            // in-plane orthogonality follows from the two identities
            assert!((px * qx + py * qy).abs() <= 1e-12 * scale * scale);
        }
    }
}

#[test]
fn diffusion_matrix_is_singular_and_has_closed_form_spectrum() {
    for seed in 0..20 {
        let h = random_smooth_field(seed);
        let (p, q) = pq_fields(&h);
        let a = diffusion_matrix(&p, &q);
        for idx in (0..grid().num_nodes()).step_by(37) {
            let m = a.at(idx);
            let scale = m.iter().flatten().map(|v| v.abs()).fold(1e-30, f64::max);
            // symmetry and singularity
            for r in 0..3 {
                for c in 0..3 {
                    assert_eq!(m[r][c], m[c][r]);
                }
            }
            assert!(a.det(idx).abs() <= 1e-10 * scale.powi(3), "det not ~0");

            // spectrum against a dense eigensolver
            let dense = Matrix3::from_fn(|r, c| m[r][c]);
            let mut eig: Vec<f64> = dense.symmetric_eigenvalues().iter().cloned().collect();
            eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let [px, py, pz] = p.at(idx);
            let qz = q.z.values()[idx];
            let s1 = px * px + py * py;
            let s3 = pz * pz + qz * qz;
            let mut expect = [0.0, s1, s1 + s3];
            expect.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (e, x) in eig.iter().zip(expect) {
                assert!(
                    (e - x).abs() <= 1e-10 * scale,
                    "seed {seed} idx {idx}: eig {e} vs {x}"
                );
            }
        }
    }
}

#[test]
fn regularized_spectrum_matches_dense_solver() {
    for seed in 0..20 {
        let h = random_smooth_field(seed);
        let (p, q) = pq_fields(&h);
        let a = diffusion_matrix(&p, &q);
        let (ar, rho) = regularize(&a, 0.05);
        assert!(rho > 0.0);
        for idx in (0..grid().num_nodes()).step_by(53) {
            let m = ar.at(idx);
            let scale = m.iter().flatten().map(|v| v.abs()).fold(1e-30, f64::max);
            let dense = Matrix3::from_fn(|r, c| m[r][c]);
            let mut eig: Vec<f64> = dense.symmetric_eigenvalues().iter().cloned().collect();
            eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let expect = regularized_eigenvalues(&p, &q, rho, idx);
            for (e, x) in eig.iter().zip(expect) {
                assert!(
                    (e - x).abs() <= 1e-10 * scale,
                    "seed {seed} idx {idx}: eig {e} vs closed form {x}"
                );
            }
        }
    }
}

#[test]
fn simplified_and_unsimplified_assemblies_agree() {
    for seed in 0..20 {
        let h = random_smooth_field(seed);
        let (p, q) = pq_fields(&h);
        let a = diffusion_matrix(&p, &q);
        let b = diffusion_matrix_unsimplified(&p, &q);
        let pairs = [
            (&a.xx, &b.xx),
            (&a.yy, &b.yy),
            (&a.zz, &b.zz),
            (&a.xy, &b.xy),
            (&a.xz, &b.xz),
            (&a.yz, &b.yz),
        ];
        for (x, y) in pairs {
            let scale = x.max_abs().max(1e-30);
            for (u, v) in x.values().iter().zip(y.values()) {
                assert!((u - v).abs() <= 1e-12 * scale, "seed {seed}");
            }
        }
    }
}

#[test]
fn source_pair_matches_independent_formulas() {
    // independently coded zero-order terms of the split system (negated):
    // kappa = -ωμ₀(2 H_r σ s + H_i(σ²-s²)) - ΔH_r σ + ΔH_i s
    // tau   =  ωμ₀(H_r(σ²-s²) - 2 H_i σ s) - ΔH_r s - ΔH_i σ
    // and the crate's (φ, ψ) must equal (-kappa, -tau)
    let omega = 2.0 * std::f64::consts::PI * 128.0e6;
    for seed in 0..20 {
        let h = random_smooth_field(seed);
        let sigma = random_smooth_field(seed + 1000).real_part().map(|v| 0.5 + 0.1 * v);
        let weps = random_smooth_field(seed + 2000).real_part().map(|v| 0.4 + 0.1 * v);
        let (phi, psi) = phi_psi(&sigma, &weps, &h, omega);
        let lap = h.laplacian();
        let wm = omega * MU0;
        for idx in 0..grid().num_nodes() {
            let s = sigma.values()[idx];
            let t = weps.values()[idx];
            let hv = h.values()[idx];
            let lv = lap.values()[idx];
            let kappa = -wm * (2.0 * hv.re * s * t + hv.im * (s * s - t * t)) - lv.re * s
                + lv.im * t;
            let tau = wm * (hv.re * (s * s - t * t) - 2.0 * hv.im * s * t) - lv.re * t
                - lv.im * s;
            let scale = kappa.abs().max(tau.abs()).max(1e-30);
            assert!(
                (phi.values()[idx] + kappa).abs() <= 1e-12 * scale,
                "seed {seed}: phi != -kappa"
            );
            assert!(
                (psi.values()[idx] + tau).abs() <= 1e-12 * scale,
                "seed {seed}: psi != -tau"
            );
        }
    }
}

#[test]
fn first_order_operator_combines_pq() {
    for seed in 0..20 {
        let h = random_smooth_field(seed);
        let l = apply_l(&h);
        let (p, q) = pq_fields(&h);
        let scale = l.x.max_abs().max(l.y.max_abs()).max(l.z.max_abs()).max(1e-30);
        let i = Complex64::i();
        for idx in (0..grid().num_nodes()).step_by(11) {
            let lp = l.at(idx);
            let pv = p.at(idx);
            let qv = q.at(idx);
            for c in 0..3 {
                let expect = Complex64::new(pv[c], 0.0) - i * qv[c];
                assert!((lp[c] - expect).norm() <= 1e-12 * scale, "seed {seed}");
            }
        }
    }
}
