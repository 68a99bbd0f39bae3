//! Regularized semi-elliptic initial guess.
//!
//! The real/imaginary split of the governing equation yields, for
//! U = (σ, ωε)ᵀ, the system ∇·(A∇U) + F₀·∇U = (F₁, F₂) with a data-dependent
//! coefficient matrix A that is only positive semi-definite: its eigenvalues
//! are {0, s₁, s₁+s₃} with s₁ = Px²+Py², s₃ = Pz²+Qz². Two devices make the
//! problem solvable:
//!
//! * adding ρ·e₃e₃ᵀ with ρ a small fraction of max A₃₃, lifting the zero
//!   eigenvalue to a positive one wherever s₁ > 0;
//! * segmenting the degenerate set D where s₁ itself (nearly) vanishes and
//!   pinning it to the pointwise direct estimate, which simultaneously
//!   supplies a Dirichlet trace on ∂D.
//!
//! The right-hand side depends on U, so the solve is iterated as a fixed
//! point from U₀ = (1, 0); a small fixed iterate is returned.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::MreptError;
use crate::grid::{BoundaryMask, ComplexField, Grid3D, RealField};
use crate::linsolve::{solve_bicgstab, CsrMatrix, SolveReport, SolverConfig};
use crate::operators::{
    diffusion_matrix, drift_vector, pq_fields, semi_elliptic_rhs, SymMatrixField,
};
use crate::phantom::{Admittivity, Material};
use crate::recon_direct::{direct_reconstruct, DirectConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitConfig {
    /// Degeneracy threshold: nodes with s₁ < tau_d · max s₁ join D.
    pub tau_d: f64,
    /// Regularization strength as a fraction of max A₃₃.
    pub rho_fraction: f64,
    /// Fixed-point iterate to return.
    pub k_pick: usize,
    /// Reference material imposed on the domain boundary and collar.
    pub background: Material,
    /// Collar depth (nodes) forced to the reference material on return.
    pub collar_depth: usize,
    /// Settings for the direct fill of the degenerate set.
    #[serde(default)]
    pub direct: DirectConfig,
    /// Positivity floors applied to the returned iterate.
    pub sigma_floor: f64,
    pub weps_floor: f64,
}

impl InitConfig {
    pub fn new(background: Material) -> Self {
        Self {
            tau_d: 0.05,
            rho_fraction: 0.05,
            k_pick: 3,
            background,
            collar_depth: 2,
            direct: DirectConfig::default(),
            sigma_floor: 1e-3,
            weps_floor: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), MreptError> {
        if !(self.tau_d > 0.0 && self.tau_d < 1.0) {
            return Err(MreptError::InvalidConfig(format!(
                "tau_d must be in (0, 1), got {}",
                self.tau_d
            )));
        }
        if !(self.rho_fraction > 0.0 && self.rho_fraction < 1.0) {
            return Err(MreptError::InvalidConfig(format!(
                "rho_fraction must be in (0, 1), got {}",
                self.rho_fraction
            )));
        }
        if self.k_pick == 0 {
            return Err(MreptError::InvalidConfig("k_pick must be >= 1".into()));
        }
        self.background.validate()
    }
}

/// Segment the degenerate set D: nodes where s₁ = Px²+Py² falls below
/// `tau_d` times its maximum, dilated by one node. Fails when D covers more
/// than half the domain, which indicates unusable data.
pub fn segment_degenerate(
    p: &crate::grid::VectorField<f64>,
    tau_d: f64,
    grid: &Grid3D,
) -> Result<Vec<bool>, MreptError> {
    let s1: Vec<f64> = p
        .x
        .values()
        .iter()
        .zip(p.y.values())
        .map(|(&px, &py)| px * px + py * py)
        .collect();
    let max = s1.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(MreptError::DegenerateData(
            "in-plane derivative fields vanish everywhere".into(),
        ));
    }
    let thresh = tau_d * max;
    let core: Vec<bool> = s1.iter().map(|&v| v < thresh).collect();
    // dilate by one node so the direct fill overlaps the solve region
    let mut mask = core.clone();
    for k in 0..grid.nz {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if core[grid.idx(i, j, k)] {
                    for (di, dj, dk) in [
                        (-1i64, 0i64, 0i64),
                        (1, 0, 0),
                        (0, -1, 0),
                        (0, 1, 0),
                        (0, 0, -1),
                        (0, 0, 1),
                    ] {
                        let (ni, nj, nk) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                        if ni >= 0
                            && nj >= 0
                            && nk >= 0
                            && (ni as usize) < grid.nx
                            && (nj as usize) < grid.ny
                            && (nk as usize) < grid.nz
                        {
                            mask[grid.idx(ni as usize, nj as usize, nk as usize)] = true;
                        }
                    }
                }
            }
        }
    }
    let frac = mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64;
    if frac > 0.5 {
        return Err(MreptError::DegenerateData(format!(
            "degenerate set covers {:.0}% of the domain",
            frac * 100.0
        )));
    }
    Ok(mask)
}

/// Lift the zero eigenvalue: ρ = rho_fraction · max A₃₃, added to the (3,3)
/// entry. Returns the lifted matrix and ρ.
pub fn regularize(a: &SymMatrixField, rho_fraction: f64) -> (SymMatrixField, f64) {
    let rho = rho_fraction * a.zz.max_abs();
    let mut out = a.clone();
    for v in out.zz.values_mut() {
        *v += rho;
    }
    (out, rho)
}

/// Closed-form eigenvalues of the regularized matrix at one node, ascending:
/// s₁ stays an eigenvalue, the {0, s₁+s₃} pair moves to the roots of
/// λ² - (s₁+s₃+ρ)λ + s₁ρ.
pub fn regularized_eigenvalues(
    p: &crate::grid::VectorField<f64>,
    q: &crate::grid::VectorField<f64>,
    rho: f64,
    idx: usize,
) -> [f64; 3] {
    let [px, py, pz] = p.at(idx);
    let qz = q.z.values()[idx];
    let s1 = px * px + py * py;
    let s3 = pz * pz + qz * qz;
    let t = s1 + s3 + rho;
    let disc = (t * t - 4.0 * s1 * rho).max(0.0).sqrt();
    let mut lam = [s1, (t - disc) / 2.0, (t + disc) / 2.0];
    lam.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lam
}

/// Assemble ∇·(A∇u) + F₀·∇u over the free nodes as a 19-point stencil:
/// flux-centered differences for the diagonal terms, centered-of-centered
/// corner formulas for the cross terms, central differences for the drift.
/// Fixed nodes get identity rows.
pub fn assemble_semielliptic(
    a: &SymMatrixField,
    f0: &crate::grid::VectorField<f64>,
    fixed: &[bool],
) -> Result<CsrMatrix, MreptError> {
    let grid = *a.grid();
    let n = grid.num_nodes();
    if fixed.len() != n {
        return Err(MreptError::FieldMismatch(
            "fixed-node mask length does not match grid".into(),
        ));
    }
    let h = [grid.hx, grid.hy, grid.hz];
    let strides = [grid.stride(crate::grid::Axis::X), grid.stride(crate::grid::Axis::Y), grid.stride(crate::grid::Axis::Z)];
    let diag_coeff = [&a.xx, &a.yy, &a.zz];
    // cross coefficients per axis pair: (axis_a, axis_b, field)
    let cross: [(usize, usize, &RealField); 3] = [(0, 1, &a.xy), (0, 2, &a.xz), (1, 2, &a.yz)];
    let drift = [&f0.x, &f0.y, &f0.z];
    let mut trip: Vec<(usize, usize, Complex64)> = Vec::with_capacity(19 * n);
    let re = |v: f64| Complex64::new(v, 0.0);
    for k in 0..grid.nz {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let row = grid.idx(i, j, k);
                if fixed[row] {
                    trip.push((row, row, Complex64::ONE));
                    continue;
                }
                if grid.on_face(i, j, k) {
                    return Err(MreptError::Assembly {
                        i,
                        j,
                        k,
                        reason: "free node on the grid face; boundary must be fixed".into(),
                    });
                }
                let mut diag = 0.0;
                // diagonal flux terms: d/dx_a (c d/dx_a u)
                for ax in 0..3 {
                    let s = strides[ax];
                    let c = diag_coeff[ax].values();
                    let c_plus = 0.5 * (c[row] + c[row + s]);
                    let c_minus = 0.5 * (c[row] + c[row - s]);
                    let w = 1.0 / (h[ax] * h[ax]);
                    trip.push((row, row + s, re(c_plus * w)));
                    trip.push((row, row - s, re(c_minus * w)));
                    diag -= (c_plus + c_minus) * w;
                }
                // cross terms: d/dx_a (c d/dx_b u) + d/dx_b (c d/dx_a u)
                for &(axa, axb, c) in &cross {
                    let (sa, sb) = (strides[axa], strides[axb]);
                    let w = 1.0 / (4.0 * h[axa] * h[axb]);
                    let cv = c.values();
                    // first term: coefficient sampled at x_a ± h_a
                    let ca_p = cv[row + sa];
                    let ca_m = cv[row - sa];
                    // second term: coefficient sampled at x_b ± h_b
                    let cb_p = cv[row + sb];
                    let cb_m = cv[row - sb];
                    trip.push((row, row + sa + sb, re(w * (ca_p + cb_p))));
                    trip.push((row, row - sa - sb, re(w * (ca_m + cb_m))));
                    trip.push((row, row + sa - sb, re(-w * (ca_p + cb_m))));
                    trip.push((row, row - sa + sb, re(-w * (ca_m + cb_p))));
                }
                // drift: central first differences
                for ax in 0..3 {
                    let s = strides[ax];
                    let w = drift[ax].values()[row] / (2.0 * h[ax]);
                    trip.push((row, row + s, re(w)));
                    trip.push((row, row - s, re(-w)));
                }
                trip.push((row, row, re(diag)));
            }
        }
    }
    CsrMatrix::from_triplets(n, &trip)
}

/// Result of the initial-guess stage.
#[derive(Debug, Clone)]
pub struct InitResult {
    pub admittivity: Admittivity,
    /// L2 norm of γ_k − γ_{k−1} per fixed-point iterate.
    pub increments: Vec<f64>,
    /// L2 error against the truth per iterate, when a truth is supplied.
    pub truth_errors: Option<Vec<f64>>,
    /// Fraction of nodes in the degenerate set D.
    pub degenerate_fraction: f64,
    pub reports: Vec<SolveReport>,
}

/// Run the regularized semi-elliptic fixed point and return iterate
/// `k_pick`. Boundary faces carry the reference material; the degenerate set
/// is pinned to the pointwise direct estimate (falling back to the reference
/// where the direct estimate is masked or non-physical).
pub fn initial_guess(
    h: &ComplexField,
    omega: f64,
    config: &InitConfig,
    solver: &SolverConfig,
    truth: Option<&Admittivity>,
) -> Result<InitResult, MreptError> {
    config.validate()?;
    let grid = *h.grid();
    let (p, q) = pq_fields(h);
    let (a, _rho) = regularize(&diffusion_matrix(&p, &q), config.rho_fraction);
    let f0 = drift_vector(&p, &q);
    let degenerate = segment_degenerate(&p, config.tau_d, &grid)?;
    let degenerate_fraction =
        degenerate.iter().filter(|&&m| m).count() as f64 / degenerate.len() as f64;

    // fixed nodes: faces plus D
    let mask = BoundaryMask::new(grid, config.collar_depth.max(1));
    let fixed: Vec<bool> = (0..grid.num_nodes())
        .map(|idx| mask.is_boundary(idx) || degenerate[idx])
        .collect();

    // Dirichlet values on the fixed nodes
    let direct = direct_reconstruct(h, omega, &config.direct)?;
    let bg_sigma = config.background.sigma;
    let bg_weps = omega * config.background.eps();
    let mut fixed_sigma = vec![0.0; grid.num_nodes()];
    let mut fixed_weps = vec![0.0; grid.num_nodes()];
    for idx in 0..grid.num_nodes() {
        if !fixed[idx] {
            continue;
        }
        if mask.is_boundary(idx) || !direct.valid[idx] {
            fixed_sigma[idx] = bg_sigma;
            fixed_weps[idx] = bg_weps;
        } else {
            let gv = direct.gamma.values()[idx];
            fixed_sigma[idx] = if gv.re.is_finite() && gv.re > 0.0 {
                gv.re
            } else {
                bg_sigma
            };
            fixed_weps[idx] = if gv.im.is_finite() && gv.im > 0.0 {
                gv.im
            } else {
                bg_weps
            };
        }
    }

    let matrix = assemble_semielliptic(&a, &f0, &fixed)?;

    let mut sigma = RealField::constant(grid, 1.0);
    let mut weps = RealField::zeros(grid);
    for idx in 0..grid.num_nodes() {
        if fixed[idx] {
            sigma.values_mut()[idx] = fixed_sigma[idx];
            weps.values_mut()[idx] = fixed_weps[idx];
        }
    }
    let mut gamma_prev = ComplexField::from_parts(&sigma, &weps);

    let mut increments = Vec::with_capacity(config.k_pick);
    let mut truth_errors = truth.map(|_| Vec::with_capacity(config.k_pick));
    let mut reports = Vec::new();
    for _ in 0..config.k_pick {
        let (f1, f2) = semi_elliptic_rhs(&sigma, &weps, h, omega);
        let mut solve_component =
            |rhs_field: &RealField, fixed_vals: &[f64]| -> Result<RealField, MreptError> {
                let b: Vec<Complex64> = (0..grid.num_nodes())
                    .map(|idx| {
                        if fixed[idx] {
                            Complex64::new(fixed_vals[idx], 0.0)
                        } else {
                            Complex64::new(rhs_field.values()[idx], 0.0)
                        }
                    })
                    .collect();
                let (x, report) = solve_bicgstab(&matrix, &b, solver)?;
                reports.push(report);
                RealField::from_values(grid, x.iter().map(|v| v.re).collect())
            };
        sigma = solve_component(&f1, &fixed_sigma)?;
        weps = solve_component(&f2, &fixed_weps)?;
        let gamma = ComplexField::from_parts(&sigma, &weps);
        increments.push(gamma.sub_field(&gamma_prev).l2_norm());
        if let (Some(errors), Some(t)) = (truth_errors.as_mut(), truth) {
            errors.push(gamma.sub_field(&t.gamma()).l2_norm());
        }
        gamma_prev = gamma;
    }

    // positivity floors and collar pinning on the returned iterate
    let mut clamped = 0usize;
    for idx in 0..grid.num_nodes() {
        if mask.in_collar(idx) {
            sigma.values_mut()[idx] = bg_sigma;
            weps.values_mut()[idx] = bg_weps;
            continue;
        }
        if sigma.values()[idx] < config.sigma_floor {
            sigma.values_mut()[idx] = config.sigma_floor;
            clamped += 1;
        }
        if weps.values()[idx] < config.weps_floor {
            weps.values_mut()[idx] = config.weps_floor;
            clamped += 1;
        }
    }
    if clamped > 0 {
        log::warn!("initial guess: clamped {clamped} node values to the positivity floors");
    }

    let admittivity = Admittivity {
        eps: weps.scaled(1.0 / omega),
        sigma,
        omega,
    };
    admittivity.check_positive()?;
    Ok(InitResult {
        admittivity,
        increments,
        truth_errors,
        degenerate_fraction,
        reports,
    })
}
