//! Regular 3D grid geometry and second-order finite-difference calculus.
//!
//! Every field in the crate lives on a [`Grid3D`]: a node-centered rectilinear
//! grid with per-axis spacing. Values are stored in a flat vector with x (`i`)
//! innermost and z (`k`) outermost, so the linear index of node `(i, j, k)` is
//! `(k * ny + j) * nx + i`. Binary dumps use the same order.
//!
//! Derivative stencils are second-order central differences at interior nodes
//! and second-order one-sided differences on the grid faces, so derived
//! coefficient fields stay defined up to the boundary.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::MreptError;

/// Spatial axis selector for directional derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Node-centered rectilinear grid over the imaging domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3D {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Node spacing in meters, per axis.
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
    /// Coordinates of node (0, 0, 0) in meters.
    pub origin: [f64; 3],
}

/// Build a grid, rejecting counts below 3 (central stencils need an interior)
/// and non-positive spacings.
pub fn make_grid(
    nx: usize,
    ny: usize,
    nz: usize,
    h: [f64; 3],
    origin: [f64; 3],
) -> Result<Grid3D, MreptError> {
    if nx < 3 || ny < 3 || nz < 3 {
        return Err(MreptError::InvalidGrid(format!(
            "node counts must be >= 3, got ({nx}, {ny}, {nz})"
        )));
    }
    if h.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(MreptError::InvalidGrid(format!(
            "spacings must be positive and finite, got {h:?}"
        )));
    }
    Ok(Grid3D {
        nx,
        ny,
        nz,
        hx: h[0],
        hy: h[1],
        hz: h[2],
        origin,
    })
}

impl Grid3D {
    /// Grid centered on the origin covering `extent` meters per axis.
    pub fn centered(n: [usize; 3], extent: [f64; 3]) -> Result<Self, MreptError> {
        let h = [
            extent[0] / (n[0] - 1) as f64,
            extent[1] / (n[1] - 1) as f64,
            extent[2] / (n[2] - 1) as f64,
        ];
        make_grid(
            n[0],
            n[1],
            n[2],
            h,
            [-extent[0] / 2.0, -extent[1] / 2.0, -extent[2] / 2.0],
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny && k < self.nz);
        (k * self.ny + j) * self.nx + i
    }

    /// Inverse of [`idx`](Self::idx).
    #[inline]
    pub fn coords_of(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        let k = idx / (self.nx * self.ny);
        (i, j, k)
    }

    /// Physical position of node (i, j, k).
    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.hx,
            self.origin[1] + j as f64 * self.hy,
            self.origin[2] + k as f64 * self.hz,
        ]
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.hx,
            Axis::Y => self.hy,
            Axis::Z => self.hz,
        }
    }

    pub fn count(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
            Axis::Z => self.nz,
        }
    }

    /// Linear-index stride between neighbors along `axis`.
    pub fn stride(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => 1,
            Axis::Y => self.nx,
            Axis::Z => self.nx * self.ny,
        }
    }

    /// True for nodes on any grid face.
    #[inline]
    pub fn on_face(&self, i: usize, j: usize, k: usize) -> bool {
        i == 0
            || j == 0
            || k == 0
            || i == self.nx - 1
            || j == self.ny - 1
            || k == self.nz - 1
    }

    /// Node volume for node quadrature.
    pub fn cell_volume(&self) -> f64 {
        self.hx * self.hy * self.hz
    }

    /// Refined grid with the same extent: `(n-1)*factor + 1` nodes per axis.
    pub fn refined(&self, factor: usize) -> Result<Grid3D, MreptError> {
        if factor == 0 {
            return Err(MreptError::InvalidGrid("refine factor must be >= 1".into()));
        }
        let f = factor as f64;
        make_grid(
            (self.nx - 1) * factor + 1,
            (self.ny - 1) * factor + 1,
            (self.nz - 1) * factor + 1,
            [self.hx / f, self.hy / f, self.hz / f],
            self.origin,
        )
    }
}

/// Scalar types a field can hold: `f64` or `Complex64`.
pub trait FieldScalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + num_traits::Zero
    + 'static
{
    fn is_finite_scalar(&self) -> bool;
    fn abs_scalar(&self) -> f64;
}

impl FieldScalar for f64 {
    fn is_finite_scalar(&self) -> bool {
        self.is_finite()
    }
    fn abs_scalar(&self) -> f64 {
        self.abs()
    }
}

impl FieldScalar for Complex64 {
    fn is_finite_scalar(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn abs_scalar(&self) -> f64 {
        self.norm()
    }
}

/// Grid-sampled function, real or complex depending on `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: Grid3D,
    values: Vec<T>,
}

pub type RealField = ScalarField<f64>;
pub type ComplexField = ScalarField<Complex64>;

impl<T: FieldScalar> ScalarField<T> {
    pub fn zeros(grid: Grid3D) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.num_nodes()],
        }
    }

    pub fn constant(grid: Grid3D, value: T) -> Self {
        Self {
            grid,
            values: vec![value; grid.num_nodes()],
        }
    }

    pub fn from_values(grid: Grid3D, values: Vec<T>) -> Result<Self, MreptError> {
        if values.len() != grid.num_nodes() {
            return Err(MreptError::FieldMismatch(format!(
                "value count {} does not match grid with {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f` at every node position.
    pub fn from_fn(grid: Grid3D, mut f: impl FnMut([f64; 3]) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.num_nodes());
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    values.push(f(grid.position(i, j, k)));
                }
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid3D {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.grid.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let idx = self.grid.idx(i, j, k);
        self.values[idx] = v;
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite_scalar())
    }

    pub fn map<U: FieldScalar>(&self, f: impl Fn(T) -> U) -> ScalarField<U> {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map<U: FieldScalar, V: FieldScalar>(
        &self,
        other: &ScalarField<U>,
        f: impl Fn(T, U) -> V,
    ) -> ScalarField<V> {
        assert_eq!(self.grid, other.grid, "field grids differ");
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add_field(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub_field(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// Max of |value| over all nodes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs_scalar()).fold(0.0, f64::max)
    }

    /// Max of |value| over nodes at least `margin` nodes away from every face.
    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        let g = &self.grid;
        let mut m = 0.0_f64;
        for k in margin..g.nz.saturating_sub(margin) {
            for j in margin..g.ny.saturating_sub(margin) {
                for i in margin..g.nx.saturating_sub(margin) {
                    m = m.max(self.at(i, j, k).abs_scalar());
                }
            }
        }
        m
    }

    /// Discrete L2 norm with node quadrature: sqrt(sum |v|^2 * hx hy hz).
    pub fn l2_norm(&self) -> f64 {
        let vol = self.grid.cell_volume();
        (self.values.iter().map(|v| v.abs_scalar().powi(2)).sum::<f64>() * vol).sqrt()
    }

    /// First derivative along `axis`: central interior, one-sided on faces,
    /// both second order.
    pub fn ddx(&self, axis: Axis) -> Self {
        let g = self.grid;
        let n = g.count(axis);
        let s = g.stride(axis);
        let h = g.spacing(axis);
        let inv2h = 1.0 / (2.0 * h);
        let mut out = vec![T::zero(); self.values.len()];
        let v = &self.values;
        self.for_each_line(axis, |base| {
            // one-sided ends
            out[base] = (v[base] * (-3.0) + v[base + s] * 4.0 - v[base + 2 * s]) * inv2h;
            let e = base + (n - 1) * s;
            out[e] = (v[e] * 3.0 - v[e - s] * 4.0 + v[e - 2 * s]) * inv2h;
            for p in 1..n - 1 {
                let c = base + p * s;
                out[c] = (v[c + s] - v[c - s]) * inv2h;
            }
        });
        Self {
            grid: g,
            values: out,
        }
    }

    /// Second derivative along `axis`: 3-point central interior; one-sided
    /// 4-point (second order) on faces, falling back to 3 points when the
    /// line is too short.
    pub fn d2(&self, axis: Axis) -> Self {
        let g = self.grid;
        let n = g.count(axis);
        let s = g.stride(axis);
        let h = g.spacing(axis);
        let invh2 = 1.0 / (h * h);
        let mut out = vec![T::zero(); self.values.len()];
        let v = &self.values;
        self.for_each_line(axis, |base| {
            let end = base + (n - 1) * s;
            if n >= 4 {
                out[base] =
                    (v[base] * 2.0 - v[base + s] * 5.0 + v[base + 2 * s] * 4.0 - v[base + 3 * s])
                        * invh2;
                out[end] =
                    (v[end] * 2.0 - v[end - s] * 5.0 + v[end - 2 * s] * 4.0 - v[end - 3 * s])
                        * invh2;
            } else {
                out[base] = (v[base] - v[base + s] * 2.0 + v[base + 2 * s]) * invh2;
                out[end] = (v[end] - v[end - s] * 2.0 + v[end - 2 * s]) * invh2;
            }
            for p in 1..n - 1 {
                let c = base + p * s;
                out[c] = (v[c - s] - v[c] * 2.0 + v[c + s]) * invh2;
            }
        });
        Self {
            grid: g,
            values: out,
        }
    }

    /// 7-point Laplacian (sum of per-axis second differences).
    pub fn laplacian(&self) -> Self {
        let mut out = self.d2(Axis::X);
        let dy = self.d2(Axis::Y);
        let dz = self.d2(Axis::Z);
        for ((o, y), z) in out.values.iter_mut().zip(&dy.values).zip(&dz.values) {
            *o = *o + *y + *z;
        }
        out
    }

    pub fn gradient(&self) -> VectorField<T> {
        VectorField {
            x: self.ddx(Axis::X),
            y: self.ddx(Axis::Y),
            z: self.ddx(Axis::Z),
        }
    }

    /// Visit the start index of every grid line along `axis`.
    fn for_each_line(&self, axis: Axis, mut f: impl FnMut(usize)) {
        let g = &self.grid;
        match axis {
            Axis::X => {
                for k in 0..g.nz {
                    for j in 0..g.ny {
                        f(g.idx(0, j, k));
                    }
                }
            }
            Axis::Y => {
                for k in 0..g.nz {
                    for i in 0..g.nx {
                        f(g.idx(i, 0, k));
                    }
                }
            }
            Axis::Z => {
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        f(g.idx(i, j, 0));
                    }
                }
            }
        }
    }
}

impl ComplexField {
    pub fn real_part(&self) -> RealField {
        self.map(|v| v.re)
    }

    pub fn imag_part(&self) -> RealField {
        self.map(|v| v.im)
    }

    pub fn from_parts(re: &RealField, im: &RealField) -> Self {
        re.zip_map(im, |r, i| Complex64::new(r, i))
    }

    pub fn conj_field(&self) -> Self {
        self.map(|v| v.conj())
    }
}

impl RealField {
    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

/// Three scalar fields on one grid, the components of a vector quantity.
#[derive(Debug, Clone)]
pub struct VectorField<T> {
    pub x: ScalarField<T>,
    pub y: ScalarField<T>,
    pub z: ScalarField<T>,
}

impl<T: FieldScalar> VectorField<T> {
    pub fn grid(&self) -> &Grid3D {
        debug_assert_eq!(self.x.grid(), self.y.grid());
        debug_assert_eq!(self.x.grid(), self.z.grid());
        self.x.grid()
    }

    pub fn divergence(&self) -> ScalarField<T> {
        let mut out = self.x.ddx(Axis::X);
        let dy = self.y.ddx(Axis::Y);
        let dz = self.z.ddx(Axis::Z);
        for ((o, y), z) in out
            .values_mut()
            .iter_mut()
            .zip(dy.values())
            .zip(dz.values())
        {
            *o = *o + *y + *z;
        }
        out
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [T; 3] {
        [self.x.values()[idx], self.y.values()[idx], self.z.values()[idx]]
    }

    /// Pointwise dot product with the gradient of `f`.
    pub fn dot_gradient(&self, f: &ScalarField<T>) -> ScalarField<T> {
        let grad = f.gradient();
        self.dot(&grad)
    }

    pub fn dot(&self, other: &VectorField<T>) -> ScalarField<T> {
        let xy = self
            .x
            .zip_map(&other.x, |a, b| a * b)
            .add_field(&self.y.zip_map(&other.y, |a, b| a * b));
        xy.add_field(&self.z.zip_map(&other.z, |a, b| a * b))
    }
}

/// Interior/boundary classification plus an optional collar region near the
/// faces where the admittivity is pinned to the reference value.
#[derive(Debug, Clone)]
pub struct BoundaryMask {
    grid: Grid3D,
    /// True on grid faces.
    boundary: Vec<bool>,
    /// True within `collar_depth` nodes of a face (includes the faces).
    collar: Vec<bool>,
    collar_depth: usize,
}

impl BoundaryMask {
    pub fn new(grid: Grid3D, collar_depth: usize) -> Self {
        let mut boundary = vec![false; grid.num_nodes()];
        let mut collar = vec![false; grid.num_nodes()];
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let idx = grid.idx(i, j, k);
                    boundary[idx] = grid.on_face(i, j, k);
                    let depth = i
                        .min(j)
                        .min(k)
                        .min(grid.nx - 1 - i)
                        .min(grid.ny - 1 - j)
                        .min(grid.nz - 1 - k);
                    collar[idx] = depth < collar_depth.max(1);
                }
            }
        }
        Self {
            grid,
            boundary,
            collar,
            collar_depth,
        }
    }

    pub fn grid(&self) -> &Grid3D {
        &self.grid
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.boundary[idx]
    }

    pub fn in_collar(&self, idx: usize) -> bool {
        self.collar[idx]
    }

    pub fn collar_depth(&self) -> usize {
        self.collar_depth
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn collar_flags(&self) -> &[bool] {
        &self.collar
    }
}
