//! Coefficient fields of the governing equations.
//!
//! From the measured complex field H⁺ this module builds the first-derivative
//! vector pair (P, Q), the semi-definite diffusion matrix A, the drift vector
//! F₀, the zero-order sources (φ, ψ) and right-hand sides (F₁, F₂) of the
//! semi-elliptic admittivity equation, and the first-order coefficient G of
//! the forward/adjoint equations. All fields are produced on the full grid,
//! with one-sided stencils supplying values on the faces.

use num_complex::Complex64;

use crate::error::MreptError;
use crate::grid::{Axis, ComplexField, Grid3D, RealField, VectorField};
use crate::MU0;

/// Symmetric 3x3 matrix field stored by component.
#[derive(Debug, Clone)]
pub struct SymMatrixField {
    pub xx: RealField,
    pub yy: RealField,
    pub zz: RealField,
    pub xy: RealField,
    pub xz: RealField,
    pub yz: RealField,
}

impl SymMatrixField {
    pub fn grid(&self) -> &Grid3D {
        self.xx.grid()
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [[f64; 3]; 3] {
        let (xx, yy, zz) = (
            self.xx.values()[idx],
            self.yy.values()[idx],
            self.zz.values()[idx],
        );
        let (xy, xz, yz) = (
            self.xy.values()[idx],
            self.xz.values()[idx],
            self.yz.values()[idx],
        );
        [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]]
    }

    pub fn det(&self, idx: usize) -> f64 {
        let m = self.at(idx);
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Matrix-vector product with the gradient of `u`, as a vector field.
    pub fn apply_to_gradient(&self, u: &RealField) -> VectorField<f64> {
        let gx = u.ddx(Axis::X);
        let gy = u.ddx(Axis::Y);
        let gz = u.ddx(Axis::Z);
        let comp = |a: &RealField, b: &RealField, c: &RealField| -> RealField {
            let mut out = a.zip_map(&gx, |m, g| m * g);
            let t2 = b.zip_map(&gy, |m, g| m * g);
            let t3 = c.zip_map(&gz, |m, g| m * g);
            for ((o, u), v) in out.values_mut().iter_mut().zip(t2.values()).zip(t3.values()) {
                *o += u + v;
            }
            out
        };
        VectorField {
            x: comp(&self.xx, &self.xy, &self.xz),
            y: comp(&self.xy, &self.yy, &self.yz),
            z: comp(&self.xz, &self.yz, &self.zz),
        }
    }
}

/// First-derivative combinations of H⁺ that drive the semi-elliptic equation.
///
/// With H⁺ = a + ib:
/// P = (-a_x - b_y, b_x - a_y, -a_z), Q = (b_x - a_y, a_x + b_y, b_z),
/// so pointwise P_x = -Q_y and P_y = Q_x.
pub fn pq_fields(h: &ComplexField) -> (VectorField<f64>, VectorField<f64>) {
    let a = h.real_part();
    let b = h.imag_part();
    let ax = a.ddx(Axis::X);
    let ay = a.ddx(Axis::Y);
    let az = a.ddx(Axis::Z);
    let bx = b.ddx(Axis::X);
    let by = b.ddx(Axis::Y);
    let bz = b.ddx(Axis::Z);
    let p = VectorField {
        x: ax.zip_map(&by, |u, v| -u - v),
        y: bx.zip_map(&ay, |u, v| u - v),
        z: az.scaled(-1.0),
    };
    let q = VectorField {
        x: bx.zip_map(&ay, |u, v| u - v),
        y: ax.zip_map(&by, |u, v| u + v),
        z: bz,
    };
    (p, q)
}

/// Semi-definite diffusion matrix in its simplified form:
/// diag blocks Px²+Py² (twice) and Pz²+Qz², off-diagonals
/// PxPz+PyQz and PyPz-PxQz, zero xy coupling.
pub fn diffusion_matrix(p: &VectorField<f64>, q: &VectorField<f64>) -> SymMatrixField {
    let inplane = p
        .x
        .zip_map(&p.y, |px, py| px * px + py * py);
    SymMatrixField {
        xx: inplane.clone(),
        yy: inplane,
        zz: p.z.zip_map(&q.z, |pz, qz| pz * pz + qz * qz),
        xy: RealField::zeros(*p.grid()),
        xz: p
            .x
            .zip_map(&p.z, |px, pz| px * pz)
            .add_field(&p.y.zip_map(&q.z, |py, qz| py * qz)),
        yz: p
            .y
            .zip_map(&p.z, |py, pz| py * pz)
            .sub_field(&p.x.zip_map(&q.z, |px, qz| px * qz)),
    }
}

/// The same matrix built entrywise as M_ij = P_i P_j + Q_i Q_j, without using
/// the in-plane derivative identities. Agrees with [`diffusion_matrix`] to
/// machine epsilon for any H⁺.
pub fn diffusion_matrix_unsimplified(
    p: &VectorField<f64>,
    q: &VectorField<f64>,
) -> SymMatrixField {
    let entry = |pi: &RealField, pj: &RealField, qi: &RealField, qj: &RealField| {
        pi.zip_map(pj, |u, v| u * v)
            .add_field(&qi.zip_map(qj, |u, v| u * v))
    };
    SymMatrixField {
        xx: entry(&p.x, &p.x, &q.x, &q.x),
        yy: entry(&p.y, &p.y, &q.y, &q.y),
        zz: entry(&p.z, &p.z, &q.z, &q.z),
        xy: entry(&p.x, &p.y, &q.x, &q.y),
        xz: entry(&p.x, &p.z, &q.x, &q.z),
        yz: entry(&p.y, &p.z, &q.y, &q.z),
    }
}

/// Drift vector of the semi-elliptic equation:
/// -(P_i div P + Q_i div Q) per component.
pub fn drift_vector(p: &VectorField<f64>, q: &VectorField<f64>) -> VectorField<f64> {
    let div_p = p.divergence();
    let div_q = q.divergence();
    let comp = |pi: &RealField, qi: &RealField| {
        pi.zip_map(&div_p, |a, d| a * d)
            .add_field(&qi.zip_map(&div_q, |a, d| a * d))
            .scaled(-1.0)
    };
    VectorField {
        x: comp(&p.x, &q.x),
        y: comp(&p.y, &q.y),
        z: comp(&p.z, &q.z),
    }
}

/// Zero-order source pair (φ, ψ) of the split governing equation, in terms of
/// σ and the scaled imaginary part s = ωε:
///
/// φ = ωμ₀ [H_i (σ² - s²) + 2 H_r σ s] + ΔH_r σ - ΔH_i s
/// ψ = ωμ₀ [-H_r (σ² - s²) + 2 H_i σ s] + ΔH_i σ + ΔH_r s
pub fn phi_psi(
    sigma: &RealField,
    weps: &RealField,
    h: &ComplexField,
    omega: f64,
) -> (RealField, RealField) {
    let wm = omega * MU0;
    let lap = h.laplacian();
    let grid = *h.grid();
    let mut phi = RealField::zeros(grid);
    let mut psi = RealField::zeros(grid);
    for idx in 0..grid.num_nodes() {
        let s = sigma.values()[idx];
        let t = weps.values()[idx];
        let hv = h.values()[idx];
        let lv = lap.values()[idx];
        let quad = s * s - t * t;
        phi.values_mut()[idx] = wm * (hv.im * quad + 2.0 * hv.re * s * t) + lv.re * s - lv.im * t;
        psi.values_mut()[idx] = wm * (-hv.re * quad + 2.0 * hv.im * s * t) + lv.im * s + lv.re * t;
    }
    (phi, psi)
}

/// Commutator term E[η] = Q·∇(P·∇η) - P·∇(Q·∇η). Linear in η, zero for
/// constant η, antisymmetric under swapping P and Q.
pub fn directional_commutator(
    eta: &RealField,
    p: &VectorField<f64>,
    q: &VectorField<f64>,
) -> RealField {
    let p_eta = p.dot_gradient(eta);
    let q_eta = q.dot_gradient(eta);
    q.dot_gradient(&p_eta)
        .sub_field(&p.dot_gradient(&q_eta))
}

/// Right-hand sides (F₁, F₂) of the semi-elliptic equation evaluated at the
/// current (σ, ωε):
///
/// F₁ = -P·∇φ + Q·∇ψ + E[ωε],  F₂ = -Q·∇φ - P·∇ψ - E[σ].
pub fn semi_elliptic_rhs(
    sigma: &RealField,
    weps: &RealField,
    h: &ComplexField,
    omega: f64,
) -> (RealField, RealField) {
    let (p, q) = pq_fields(h);
    let (phi, psi) = phi_psi(sigma, weps, h, omega);
    let f1 = p
        .dot_gradient(&phi)
        .scaled(-1.0)
        .add_field(&q.dot_gradient(&psi))
        .add_field(&directional_commutator(weps, &p, &q));
    let f2 = q
        .dot_gradient(&phi)
        .scaled(-1.0)
        .sub_field(&p.dot_gradient(&psi))
        .sub_field(&directional_commutator(sigma, &p, &q));
    (f1, f2)
}

/// Relative floor below which the admittivity is treated as degenerate for
/// logarithms and divisions.
pub const GAMMA_FLOOR_REL: f64 = 1e-10;

fn check_gamma_floor(gamma: &ComplexField) -> Result<(), MreptError> {
    let max = gamma.max_abs();
    if max == 0.0 {
        return Err(MreptError::Inadmissible("admittivity is identically zero".into()));
    }
    let floor = GAMMA_FLOOR_REL * max;
    for (idx, g) in gamma.values().iter().enumerate() {
        if g.norm() < floor {
            let (i, j, k) = gamma.grid().coords_of(idx);
            return Err(MreptError::Inadmissible(format!(
                "|gamma| = {:.3e} below floor {:.3e} at node ({i}, {j}, {k})",
                g.norm(),
                floor
            )));
        }
        if g.re <= 0.0 {
            let (i, j, k) = gamma.grid().coords_of(idx);
            return Err(MreptError::Inadmissible(format!(
                "Re(gamma) = {:.3e} <= 0 at node ({i}, {j}, {k}); principal log branch unsafe",
                g.re
            )));
        }
    }
    Ok(())
}

/// Principal-branch log of the admittivity. Admissible fields stay in the
/// right half-plane so the branch cut is never crossed; this is checked.
pub fn log_gamma(gamma: &ComplexField) -> Result<ComplexField, MreptError> {
    check_gamma_floor(gamma)?;
    Ok(gamma.map(|g| g.ln()))
}

/// First-order coefficient of the forward/adjoint equations, with v = log γ:
/// G = -(v_x + i v_y, -i v_x + v_y, v_z).
pub fn log_gradient_vector(gamma: &ComplexField) -> Result<VectorField<Complex64>, MreptError> {
    let v = log_gamma(gamma)?;
    let vx = v.ddx(Axis::X);
    let vy = v.ddx(Axis::Y);
    let vz = v.ddx(Axis::Z);
    let i = Complex64::i();
    Ok(VectorField {
        x: vx.zip_map(&vy, move |a, b| -(a + i * b)),
        y: vx.zip_map(&vy, move |a, b| -(-i * a + b)),
        z: vz.scaled(-1.0),
    })
}

/// Componentwise application of the first-order data operator
/// L = (-∂x + i∂y, -i∂x - ∂y, -∂z). Pointwise, L H⁺ = P - iQ.
pub fn apply_l(f: &ComplexField) -> VectorField<Complex64> {
    let fx = f.ddx(Axis::X);
    let fy = f.ddx(Axis::Y);
    let fz = f.ddx(Axis::Z);
    let i = Complex64::i();
    VectorField {
        x: fx.zip_map(&fy, move |a, b| -a + i * b),
        y: fx.zip_map(&fy, move |a, b| -i * a - b),
        z: fz.scaled(-1.0),
    }
}

/// Residual of the first-order governing equation:
/// L H⁺ · (∇γ/γ) - iωμ₀ γ H⁺ + ΔH⁺. Vanishes (to stencil accuracy) for a
/// consistent (γ, H⁺) pair.
pub fn first_order_residual(
    gamma: &ComplexField,
    h: &ComplexField,
    omega: f64,
) -> Result<ComplexField, MreptError> {
    check_gamma_floor(gamma)?;
    let lh = apply_l(h);
    let grad_g = gamma.gradient();
    let dot = lh.dot(&grad_g);
    let lap = h.laplacian();
    let iwm = Complex64::new(0.0, omega * MU0);
    let mut out = dot;
    for (((o, g), hv), lv) in out
        .values_mut()
        .iter_mut()
        .zip(gamma.values())
        .zip(h.values())
        .zip(lap.values())
    {
        *o = *o / *g - iwm * *g * *hv + *lv;
    }
    Ok(out)
}

/// Residual of the semi-elliptic equation ∇·(A ∇u) + F₀·∇u - rhs, evaluated
/// with the field calculus (independent of the linear-system stencil).
pub fn semi_elliptic_residual(
    a: &SymMatrixField,
    f0: &VectorField<f64>,
    u: &RealField,
    rhs: &RealField,
) -> RealField {
    let flux = a.apply_to_gradient(u);
    flux.divergence()
        .add_field(&f0.dot_gradient(u))
        .sub_field(rhs)
}
