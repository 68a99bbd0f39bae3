//! Adjoint-based Newton refinement.
//!
//! Minimizes the data misfit J[γ] = ½ ∫ |H[γ] - H_m|² over admittivities,
//! starting from the semi-elliptic initial guess. Each iteration solves the
//! forward problem, then one adjoint problem, and forms the gradient
//!
//! g = (1/γ) ∇·(p L H⁺) + iωμ₀ H⁺ p,
//!
//! with p the adjoint state. The adjoint system is the exact (unconjugated)
//! transpose of the assembled forward matrix with zero Dirichlet data, so the
//! directional derivative Re ∫ δ·g matches finite differences of the discrete
//! misfit to solver accuracy, provided the perturbation vanishes on a collar
//! of at least two nodes (where the gradient is zeroed anyway). The update is
//! the Newton-type step γ ← γ - (J/‖g‖²) conj(g), which by construction
//! predicts a full misfit cancellation to first order: DJ at the step equals
//! -J.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::MreptError;
use crate::forward::{adjoint_matrix, assemble_forward};
use crate::grid::{BoundaryMask, ComplexField, VectorField};
use crate::linsolve::{solve_bicgstab, SolverConfig};
use crate::operators::apply_l;
use crate::phantom::Admittivity;
use crate::MU0;

/// Data misfit J = ½ ∫ |h - h_m|² with node quadrature.
pub fn misfit(h: &ComplexField, h_m: &ComplexField) -> f64 {
    0.5 * h.sub_field(h_m).l2_norm().powi(2)
}

/// Solve the adjoint problem: (forward matrix)ᵀ p = conj(h - h_m) at interior
/// nodes, p = 0 on the boundary.
pub fn solve_adjoint(
    gamma: &Admittivity,
    residual: &ComplexField,
    solver: &SolverConfig,
) -> Result<ComplexField, MreptError> {
    let grid = *residual.grid();
    let matrix = assemble_forward(gamma)?;
    let mask = BoundaryMask::new(grid, 1);
    let at = adjoint_matrix(&matrix, &mask)?;
    let b: Vec<Complex64> = (0..grid.num_nodes())
        .map(|idx| {
            if mask.is_boundary(idx) {
                Complex64::ZERO
            } else {
                residual.values()[idx].conj()
            }
        })
        .collect();
    let (p, _) = solve_bicgstab(&at, &b, solver)?;
    ComplexField::from_values(grid, p)
}

/// Misfit gradient g = (1/γ) ∇·(p L H⁺) + iωμ₀ H⁺ p, zeroed on the frozen
/// collar. Satisfies DJ(δ) = Re ∫ δ·g for perturbations supported off the
/// collar.
pub fn misfit_gradient(
    gamma: &Admittivity,
    h: &ComplexField,
    p: &ComplexField,
    collar: &BoundaryMask,
) -> Result<ComplexField, MreptError> {
    let g = gamma.gamma();
    let lh = apply_l(h);
    let weighted = VectorField {
        x: lh.x.zip_map(p, |l, pv| l * pv),
        y: lh.y.zip_map(p, |l, pv| l * pv),
        z: lh.z.zip_map(p, |l, pv| l * pv),
    };
    let div = weighted.divergence();
    let iwm = Complex64::new(0.0, gamma.omega * MU0);
    let mut out = div.zip_map(&g, |d, gv| d / gv);
    for ((o, &hv), &pv) in out.values_mut().iter_mut().zip(h.values()).zip(p.values()) {
        *o += iwm * hv * pv;
    }
    for (idx, o) in out.values_mut().iter_mut().enumerate() {
        if collar.in_collar(idx) {
            *o = Complex64::ZERO;
        }
    }
    Ok(out)
}

/// Directional derivative DJ(δ) = Re ∫ δ·g with node quadrature.
pub fn directional_derivative(g: &ComplexField, delta: &ComplexField) -> f64 {
    let vol = g.grid().cell_volume();
    g.values()
        .iter()
        .zip(delta.values())
        .map(|(gv, dv)| (dv * gv).re)
        .sum::<f64>()
        * vol
}

/// Squared gradient norm ‖g‖² = ∫ |g|² with node quadrature.
pub fn gradient_norm_sq(g: &ComplexField) -> f64 {
    g.l2_norm().powi(2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub max_iter: usize,
    /// Collar depth (nodes) on which the admittivity is frozen.
    pub collar_depth: usize,
    /// Surrogate stopping tolerance on ‖γ_{n+1} - γ_n‖ / ‖γ_n‖.
    pub tol_rel_change: f64,
    /// Positivity floors applied after each step.
    pub sigma_floor: f64,
    pub weps_floor: f64,
    /// Damping factor β ∈ (0, 1] on the step; 1 is the undamped update. A
    /// step that raises the misfit is rejected and retried at half the
    /// current β; accepted steps grow β back toward this value.
    #[serde(default = "default_damping")]
    pub damping: f64,
}

fn default_damping() -> f64 {
    1.0
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            max_iter: 10,
            collar_depth: 2,
            tol_rel_change: 1e-6,
            sigma_floor: 1e-3,
            weps_floor: 1e-3,
            damping: default_damping(),
        }
    }
}

/// One iteration record for convergence reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonRecord {
    pub iteration: usize,
    pub misfit: f64,
    pub grad_norm: f64,
    pub rel_change: f64,
    /// L2 error of γ against the truth, when supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    /// Best iterate by misfit (not necessarily the last).
    pub admittivity: Admittivity,
    pub history: Vec<NewtonRecord>,
    /// Misfit of the returned iterate.
    pub best_misfit: f64,
    /// Why the iteration stopped.
    pub reason: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    SmallUpdate,
    MisfitIncrease,
}

/// Run the Newton refinement from `start` against measured data `h_m`.
/// Records per-iteration misfit/gradient history and returns the best
/// iterate. A step that raises the misfit is rejected and retried with the
/// damping factor halved; three consecutive rejections stop the iteration.
pub fn run_newton(
    h_m: &ComplexField,
    start: &Admittivity,
    config: &NewtonConfig,
    solver: &SolverConfig,
    truth: Option<&Admittivity>,
) -> Result<NewtonResult, MreptError> {
    if config.max_iter == 0 {
        return Err(MreptError::InvalidConfig("max_iter must be >= 1".into()));
    }
    if !(config.damping > 0.0 && config.damping <= 1.0) {
        return Err(MreptError::InvalidConfig(
            "damping must lie in (0, 1]".into(),
        ));
    }
    let grid = *h_m.grid();
    if start.grid() != &grid {
        return Err(MreptError::FieldMismatch(
            "initial guess grid does not match data grid".into(),
        ));
    }
    let collar = BoundaryMask::new(grid, config.collar_depth.max(2));
    let omega = start.omega;
    let truth_err = |g: &ComplexField| truth.map(|t| g.sub_field(&t.gamma()).l2_norm());

    let mut gamma = start.gamma();
    let adm = Admittivity::from_gamma(&gamma, omega);
    let (mut h, _) = crate::forward::solve_forward(&adm, h_m, solver)?;
    let mut j = misfit(&h, h_m);
    let mut best_gamma = gamma.clone();
    let mut best_misfit = j;
    let mut history = Vec::new();
    let mut reason = StopReason::MaxIterations;
    let mut beta = config.damping;

    'outer: for iteration in 0..config.max_iter {
        let adm = Admittivity::from_gamma(&gamma, omega);
        let residual = h.sub_field(h_m);
        let p = solve_adjoint(&adm, &residual, solver)?;
        let g = misfit_gradient(&adm, &h, &p, &collar)?;
        let gnorm_sq = gradient_norm_sq(&g);
        if gnorm_sq <= 0.0 || !gnorm_sq.is_finite() {
            return Err(MreptError::StationaryPoint { misfit: j });
        }
        let scale = j / gnorm_sq;
        let mut rejects = 0usize;
        loop {
            let step = beta * scale;
            let mut next = gamma.zip_map(&g, |gv, grad| gv - step * grad.conj());
            // positivity floors keep the log-coefficient well defined
            let mut clamped = 0usize;
            for v in next.values_mut() {
                if v.re < config.sigma_floor {
                    *v = Complex64::new(config.sigma_floor, v.im);
                    clamped += 1;
                }
                if v.im < config.weps_floor {
                    *v = Complex64::new(v.re, config.weps_floor);
                    clamped += 1;
                }
            }
            if clamped > 0 {
                log::warn!("newton: clamped {clamped} node values to the positivity floors");
            }
            let adm_next = Admittivity::from_gamma(&next, omega);
            let (h_next, _) = crate::forward::solve_forward(&adm_next, h_m, solver)?;
            let j_next = misfit(&h_next, h_m);
            if j_next < j {
                let rel_change = next.sub_field(&gamma).l2_norm() / gamma.l2_norm();
                history.push(NewtonRecord {
                    iteration,
                    misfit: j,
                    grad_norm: gnorm_sq.sqrt(),
                    rel_change,
                    truth_error: truth_err(&gamma),
                });
                gamma = next;
                h = h_next;
                j = j_next;
                if j < best_misfit {
                    best_misfit = j;
                    best_gamma = gamma.clone();
                }
                beta = (2.0 * beta).min(config.damping);
                if rel_change < config.tol_rel_change {
                    reason = StopReason::SmallUpdate;
                    break 'outer;
                }
                break;
            }
            rejects += 1;
            beta *= 0.5;
            if rejects >= 3 {
                reason = StopReason::MisfitIncrease;
                history.push(NewtonRecord {
                    iteration,
                    misfit: j,
                    grad_norm: gnorm_sq.sqrt(),
                    rel_change: 0.0,
                    truth_error: truth_err(&gamma),
                });
                break 'outer;
            }
        }
    }

    Ok(NewtonResult {
        admittivity: Admittivity::from_gamma(&best_gamma, omega),
        history,
        best_misfit,
        reason,
    })
}
