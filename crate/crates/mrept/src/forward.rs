//! Forward simulation: the Dirichlet boundary-value problem for H⁺ at a given
//! admittivity, its Fréchet derivative, and synthetic data generation.
//!
//! The field equation solved here is
//!
//! ΔH + G·∇H - iωμ₀γH = 0,   H = H_m on the boundary,
//!
//! with G the log-admittivity coefficient from
//! [`operators::log_gradient_vector`]. Interior rows use the 7-point Laplacian
//! and central first differences; boundary rows are identity rows carrying the
//! Dirichlet data, so the assembled matrix restricted to the interior is the
//! exact discrete operator whose transpose drives the adjoint solve.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::MreptError;
use crate::grid::{Axis, BoundaryMask, ComplexField, Grid3D};
use crate::linsolve::{solve_bicgstab, CsrMatrix, SolveReport, SolverConfig};
use crate::operators::{apply_l, log_gradient_vector};
use crate::phantom::{sample, Admittivity, Phantom};
use crate::MU0;

/// Assemble the forward operator for admittivity `gamma` as a full-size CSR
/// matrix: discrete Δ + G·∇ - iωμ₀γ at interior nodes, identity rows on the
/// boundary.
pub fn assemble_forward(gamma: &Admittivity) -> Result<CsrMatrix, MreptError> {
    let g = gamma.gamma();
    let grid = *g.grid();
    let omega = gamma.omega;
    let coeff = log_gradient_vector(&g)?;
    let n = grid.num_nodes();
    let mut trip: Vec<(usize, usize, Complex64)> = Vec::with_capacity(9 * n);
    let iwm = Complex64::new(0.0, omega * MU0);
    let inv_h2 = [
        1.0 / (grid.hx * grid.hx),
        1.0 / (grid.hy * grid.hy),
        1.0 / (grid.hz * grid.hz),
    ];
    let inv_2h = [
        1.0 / (2.0 * grid.hx),
        1.0 / (2.0 * grid.hy),
        1.0 / (2.0 * grid.hz),
    ];
    for k in 0..grid.nz {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let row = grid.idx(i, j, k);
                if grid.on_face(i, j, k) {
                    trip.push((row, row, Complex64::ONE));
                    continue;
                }
                let gc = coeff.at(row);
                let mut diag = -iwm * g.values()[row];
                for (ax, axis) in Axis::ALL.iter().enumerate() {
                    let s = grid.stride(*axis);
                    diag -= 2.0 * inv_h2[ax];
                    let off = gc[ax] * inv_2h[ax];
                    trip.push((row, row - s, Complex64::new(inv_h2[ax], 0.0) - off));
                    trip.push((row, row + s, Complex64::new(inv_h2[ax], 0.0) + off));
                }
                trip.push((row, row, diag));
            }
        }
    }
    CsrMatrix::from_triplets(n, &trip)
}

/// Transposed system for the adjoint solve: Aᵀ with boundary rows reset to
/// identity, which pins the adjoint variable to zero on the boundary.
pub fn adjoint_matrix(forward: &CsrMatrix, mask: &BoundaryMask) -> Result<CsrMatrix, MreptError> {
    let t = forward.transpose();
    let n = t.n();
    let mut trip: Vec<(usize, usize, Complex64)> = Vec::with_capacity(t.nnz());
    for r in 0..n {
        if mask.is_boundary(r) {
            trip.push((r, r, Complex64::ONE));
        } else {
            let (cols, vals) = t.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                trip.push((r, c, v));
            }
        }
    }
    CsrMatrix::from_triplets(n, &trip)
}

/// Solve the forward problem with `boundary` supplying the Dirichlet trace
/// (interior values of `boundary` are ignored).
pub fn solve_forward(
    gamma: &Admittivity,
    boundary: &ComplexField,
    config: &SolverConfig,
) -> Result<(ComplexField, SolveReport), MreptError> {
    let grid = *gamma.sigma.grid();
    if boundary.grid() != &grid {
        return Err(MreptError::FieldMismatch(
            "boundary data grid does not match admittivity grid".into(),
        ));
    }
    let matrix = assemble_forward(gamma)?;
    let mask = BoundaryMask::new(grid, 1);
    let b: Vec<Complex64> = (0..grid.num_nodes())
        .map(|idx| {
            if mask.is_boundary(idx) {
                boundary.values()[idx]
            } else {
                Complex64::ZERO
            }
        })
        .collect();
    let (x, report) = solve_bicgstab(&matrix, &b, config)?;
    Ok((ComplexField::from_values(grid, x)?, report))
}

/// Right-hand side of the linearized forward problem in direction `delta`:
/// -(L H·∇(δ/γ) - iωμ₀ δ H) at interior nodes, zero on the boundary. Solving
/// the forward matrix against it yields the Fréchet derivative of H with
/// respect to γ.
pub fn frechet_direction(
    gamma: &Admittivity,
    h: &ComplexField,
    delta: &ComplexField,
    config: &SolverConfig,
) -> Result<(ComplexField, SolveReport), MreptError> {
    let g = gamma.gamma();
    let grid = *g.grid();
    let omega = gamma.omega;
    let w = delta.zip_map(&g, |d, gv| d / gv);
    let lh = apply_l(h);
    let transport = lh.dot(&w.gradient());
    let iwm = Complex64::new(0.0, omega * MU0);
    let mask = BoundaryMask::new(grid, 1);
    let rhs: Vec<Complex64> = (0..grid.num_nodes())
        .map(|idx| {
            if mask.is_boundary(idx) {
                Complex64::ZERO
            } else {
                -(transport.values()[idx] - iwm * delta.values()[idx] * h.values()[idx])
            }
        })
        .collect();
    let matrix = assemble_forward(gamma)?;
    let (x, report) = solve_bicgstab(&matrix, &rhs, config)?;
    Ok((ComplexField::from_values(grid, x)?, report))
}

/// Dirichlet trace applied on the boundary of the simulation domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryProfile {
    /// Spatially constant trace with the given real and imaginary parts.
    Constant { re: f64, im: f64 },
}

impl Default for BoundaryProfile {
    fn default() -> Self {
        BoundaryProfile::Constant { re: 1.0, im: 0.0 }
    }
}

impl BoundaryProfile {
    pub fn sample(&self, grid: Grid3D) -> ComplexField {
        match *self {
            BoundaryProfile::Constant { re, im } => {
                ComplexField::constant(grid, Complex64::new(re, im))
            }
        }
    }
}

/// Settings for synthetic data generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    /// Solve on a grid this many times finer, then restrict to the target
    /// grid, so the data does not inherit the target grid's truncation error.
    pub refine: usize,
    /// Relative noise level: complex Gaussian noise with RMS amplitude
    /// `noise_rel` times the RMS of the clean field. Zero disables noise.
    pub noise_rel: f64,
    pub seed: u64,
    #[serde(default)]
    pub boundary: BoundaryProfile,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            refine: 2,
            noise_rel: 0.0,
            seed: 7,
            boundary: BoundaryProfile::default(),
        }
    }
}

/// Synthetic measurement paired with the ground truth it came from.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    /// Measured field on the target grid (noise included if requested).
    pub h: ComplexField,
    /// Ground-truth admittivity on the target grid.
    pub truth: Admittivity,
    pub report: SolveReport,
}

/// Restrict a fine-grid field to the coarse grid it refines, taking every
/// `factor`-th node.
pub fn restrict(fine: &ComplexField, coarse: Grid3D, factor: usize) -> Result<ComplexField, MreptError> {
    let fg = fine.grid();
    if fg.nx != (coarse.nx - 1) * factor + 1
        || fg.ny != (coarse.ny - 1) * factor + 1
        || fg.nz != (coarse.nz - 1) * factor + 1
    {
        return Err(MreptError::FieldMismatch(format!(
            "fine grid ({}, {}, {}) is not a {factor}x refinement of ({}, {}, {})",
            fg.nx, fg.ny, fg.nz, coarse.nx, coarse.ny, coarse.nz
        )));
    }
    let mut out = ComplexField::zeros(coarse);
    for k in 0..coarse.nz {
        for j in 0..coarse.ny {
            for i in 0..coarse.nx {
                out.set(i, j, k, fine.at(i * factor, j * factor, k * factor));
            }
        }
    }
    Ok(out)
}

/// Generate synthetic data for a phantom on the target grid: sample the scene
/// on a refined grid, solve the forward problem there, restrict, and add
/// seeded complex Gaussian noise.
pub fn synthesize_data(
    phantom: &Phantom,
    grid: Grid3D,
    omega: f64,
    sim: &SimulateConfig,
    solver: &SolverConfig,
) -> Result<SyntheticData, MreptError> {
    if sim.refine == 0 {
        return Err(MreptError::InvalidConfig("refine factor must be >= 1".into()));
    }
    let fine_grid = grid.refined(sim.refine)?;
    let truth_fine = sample(phantom, &fine_grid, omega)?;
    let boundary = sim.boundary.sample(fine_grid);
    let (h_fine, report) = solve_forward(&truth_fine, &boundary, solver)?;
    let mut h = if sim.refine == 1 {
        h_fine
    } else {
        restrict(&h_fine, grid, sim.refine)?
    };
    if sim.noise_rel > 0.0 {
        let rms =
            (h.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / h.values().len() as f64).sqrt();
        let std = sim.noise_rel * rms / std::f64::consts::SQRT_2;
        let normal = Normal::new(0.0, std).map_err(|e| {
            MreptError::InvalidConfig(format!("invalid noise level: {e}"))
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
        for v in h.values_mut() {
            *v += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }
    let truth = sample(phantom, &grid, omega)?;
    Ok(SyntheticData { h, truth, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::Material;
    use crate::OMEGA_DEFAULT;

    fn small_grid() -> Grid3D {
        Grid3D::centered([9, 9, 9], [0.12, 0.12, 0.12]).unwrap()
    }

    fn homogeneous_scene() -> Phantom {
        Phantom::homogeneous(Material {
            sigma: 0.5,
            eps_rel: 60.0,
        })
    }

    #[test]
    fn forward_matrix_is_identity_on_boundary() {
        let grid = small_grid();
        let truth = sample(&homogeneous_scene(), &grid, OMEGA_DEFAULT).unwrap();
        let m = assemble_forward(&truth).unwrap();
        let mask = BoundaryMask::new(grid, 1);
        for r in 0..grid.num_nodes() {
            if mask.is_boundary(r) {
                let (cols, vals) = m.row(r);
                assert_eq!(cols, &[r]);
                assert_eq!(vals[0], Complex64::ONE);
            }
        }
    }

    #[test]
    fn forward_solution_satisfies_boundary_data() {
        let grid = small_grid();
        let truth = sample(&homogeneous_scene(), &grid, OMEGA_DEFAULT).unwrap();
        let boundary = ComplexField::constant(grid, Complex64::new(1.0, 0.0));
        let (h, report) = solve_forward(&truth, &boundary, &SolverConfig::default()).unwrap();
        assert!(report.relative_residual < 1e-9);
        let mask = BoundaryMask::new(grid, 1);
        for idx in 0..grid.num_nodes() {
            if mask.is_boundary(idx) {
                assert!((h.values()[idx] - Complex64::ONE).norm() < 1e-9);
            }
        }
        // the interior field must differ from the trace (the equation acts)
        let center = grid.idx(4, 4, 4);
        assert!((h.values()[center] - Complex64::ONE).norm() > 1e-4);
    }

    #[test]
    fn adjoint_matrix_is_transpose_on_interior() {
        let grid = Grid3D::centered([5, 5, 5], [0.08; 3]).unwrap();
        let truth = sample(&homogeneous_scene(), &grid, OMEGA_DEFAULT).unwrap();
        let m = assemble_forward(&truth).unwrap();
        let mask = BoundaryMask::new(grid, 1);
        let at = adjoint_matrix(&m, &mask).unwrap();
        let d = m.to_dense();
        let dt = at.to_dense();
        for r in 0..grid.num_nodes() {
            for c in 0..grid.num_nodes() {
                if mask.is_boundary(r) {
                    let expect = if r == c { Complex64::ONE } else { Complex64::ZERO };
                    assert_eq!(dt[r][c], expect);
                } else {
                    assert_eq!(dt[r][c], d[c][r]);
                }
            }
        }
    }

    #[test]
    fn restriction_picks_matching_nodes() {
        let coarse = Grid3D::centered([5, 5, 5], [0.08; 3]).unwrap();
        let fine = coarse.refined(2).unwrap();
        let f = ComplexField::from_fn(fine, |p| Complex64::new(p[0] + 2.0 * p[1], p[2]));
        let r = restrict(&f, coarse, 2).unwrap();
        let expect = ComplexField::from_fn(coarse, |p| Complex64::new(p[0] + 2.0 * p[1], p[2]));
        for (a, b) in r.values().iter().zip(expect.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn synthesis_is_deterministic_per_seed() {
        let grid = Grid3D::centered([7, 7, 7], [0.1; 3]).unwrap();
        let sim = SimulateConfig {
            refine: 1,
            noise_rel: 0.02,
            seed: 11,
            boundary: BoundaryProfile::default(),
        };
        let solver = SolverConfig::default();
        let a = synthesize_data(&homogeneous_scene(), grid, OMEGA_DEFAULT, &sim, &solver).unwrap();
        let b = synthesize_data(&homogeneous_scene(), grid, OMEGA_DEFAULT, &sim, &solver).unwrap();
        assert_eq!(a.h.values(), b.h.values());
        let sim2 = SimulateConfig { seed: 12, ..sim };
        let c = synthesize_data(&homogeneous_scene(), grid, OMEGA_DEFAULT, &sim2, &solver).unwrap();
        assert_ne!(a.h.values(), c.h.values());
    }
}
