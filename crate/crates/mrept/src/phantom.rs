//! Synthetic admittivity scenes.
//!
//! Two stock scene families mirror the simulation setups used throughout the
//! crate: model 1 is a cylindrical scene whose admittivity does not change
//! along z, model 2 stacks two different model-1 scenes above and below the
//! z = 0 plane. Scenes are described by JSON-serializable configs, sampled to
//! node-centered [`Admittivity`] fields, and optionally smoothed with a
//! separable Gaussian for solver-friendly (H²-like) material transitions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::MreptError;
use crate::grid::{Axis, ComplexField, Grid3D, RealField, ScalarField};
use crate::EPS0;

/// Electrical material: conductivity in S/m plus relative permittivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Conductivity, S/m.
    pub sigma: f64,
    /// Relative permittivity (>= 1); absolute permittivity is `eps_rel * EPS0`.
    pub eps_rel: f64,
}

impl Material {
    pub fn validate(&self) -> Result<(), MreptError> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(MreptError::InvalidConfig(format!(
                "material sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.eps_rel >= 1.0) || !self.eps_rel.is_finite() {
            return Err(MreptError::InvalidConfig(format!(
                "material eps_rel must be >= 1, got {}",
                self.eps_rel
            )));
        }
        Ok(())
    }

    /// Absolute permittivity in F/m.
    pub fn eps(&self) -> f64 {
        self.eps_rel * EPS0
    }
}

/// Geometric primitive with attached material. Later shapes override earlier
/// ones where they overlap.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Cylinder {
        /// Axis position in the xy-plane, meters.
        center: [f64; 2],
        radius: f64,
        /// Optional [z0, z1) slab restriction; infinite extent when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z_range: Option<[f64; 2]>,
        material: Material,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
        material: Material,
    },
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
        material: Material,
    },
}

impl Shape {
    pub fn material(&self) -> Material {
        match self {
            Shape::Cylinder { material, .. }
            | Shape::Sphere { material, .. }
            | Shape::Box { material, .. } => *material,
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        match self {
            Shape::Cylinder {
                center,
                radius,
                z_range,
                ..
            } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                if dx * dx + dy * dy > radius * radius {
                    return false;
                }
                match z_range {
                    Some([z0, z1]) => p[2] >= *z0 && p[2] < *z1,
                    None => true,
                }
            }
            Shape::Sphere { center, radius, .. } => {
                let d2 = (0..3).map(|a| (p[a] - center[a]).powi(2)).sum::<f64>();
                d2 <= radius * radius
            }
            Shape::Box {
                center,
                half_extents,
                ..
            } => (0..3).all(|a| (p[a] - center[a]).abs() <= half_extents[a]),
        }
    }

    pub fn validate(&self) -> Result<(), MreptError> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(MreptError::InvalidConfig(format!(
                    "shape {what} must be positive, got {v}"
                )))
            }
        };
        match self {
            Shape::Cylinder {
                radius, material, ..
            } => {
                positive(*radius, "radius")?;
                material.validate()
            }
            Shape::Sphere {
                radius, material, ..
            } => {
                positive(*radius, "radius")?;
                material.validate()
            }
            Shape::Box {
                half_extents,
                material,
                ..
            } => {
                for &h in half_extents {
                    positive(h, "half extent")?;
                }
                material.validate()
            }
        }
    }
}

/// Geometric scene: background material plus an ordered shape list and a
/// boundary collar that is always forced back to the background.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Phantom {
    pub background: Material,
    pub shapes: Vec<Shape>,
    /// Collar width in meters; `None` means 2 nodes on whatever grid the
    /// phantom is sampled to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collar_d: Option<f64>,
    /// Per-axis Gaussian smoothing standard deviation in meters (0 = sharp).
    #[serde(default)]
    pub smooth: [f64; 3],
}

impl Phantom {
    pub fn homogeneous(background: Material) -> Self {
        Self {
            background,
            shapes: Vec::new(),
            collar_d: None,
            smooth: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<(), MreptError> {
        self.background.validate()?;
        for s in &self.shapes {
            s.validate()?;
        }
        Ok(())
    }

    fn collar_contains(&self, grid: &Grid3D, i: usize, j: usize, k: usize) -> bool {
        match self.collar_d {
            Some(d) => {
                let dist = (i as f64 * grid.hx)
                    .min((grid.nx - 1 - i) as f64 * grid.hx)
                    .min(j as f64 * grid.hy)
                    .min((grid.ny - 1 - j) as f64 * grid.hy)
                    .min(k as f64 * grid.hz)
                    .min((grid.nz - 1 - k) as f64 * grid.hz);
                dist < d
            }
            None => {
                let depth = i
                    .min(j)
                    .min(k)
                    .min(grid.nx - 1 - i)
                    .min(grid.ny - 1 - j)
                    .min(grid.nz - 1 - k);
                depth < 2
            }
        }
    }

    /// Collar depth in nodes on `grid` (conservative: smallest per-axis count).
    pub fn collar_depth_nodes(&self, grid: &Grid3D) -> usize {
        match self.collar_d {
            Some(d) => {
                let h = grid.hx.min(grid.hy).min(grid.hz);
                (d / h).ceil() as usize
            }
            None => 2,
        }
    }
}

/// Paired conductivity and permittivity fields at a fixed angular frequency.
#[derive(Debug, Clone)]
pub struct Admittivity {
    /// Conductivity, S/m.
    pub sigma: RealField,
    /// Absolute permittivity, F/m.
    pub eps: RealField,
    /// Angular frequency, rad/s.
    pub omega: f64,
}

impl Admittivity {
    pub fn grid(&self) -> &Grid3D {
        self.sigma.grid()
    }

    /// Complex admittivity sigma + i*omega*eps.
    pub fn gamma(&self) -> ComplexField {
        let omega = self.omega;
        self.sigma
            .zip_map(&self.eps, move |s, e| Complex64::new(s, omega * e))
    }

    /// The scaled imaginary part omega*eps.
    pub fn weps(&self) -> RealField {
        self.eps.scaled(self.omega)
    }

    /// Rebuild from a complex gamma field: sigma = Re, eps = Im / omega.
    pub fn from_gamma(gamma: &ComplexField, omega: f64) -> Self {
        Self {
            sigma: gamma.real_part(),
            eps: gamma.imag_part().scaled(1.0 / omega),
            omega,
        }
    }

    pub fn check_positive(&self) -> Result<(), MreptError> {
        for (n, (&s, &e)) in self
            .sigma
            .values()
            .iter()
            .zip(self.eps.values())
            .enumerate()
        {
            if !(s > 0.0) || !(e > 0.0) {
                let (i, j, k) = self.grid().coords_of(n);
                return Err(MreptError::Inadmissible(format!(
                    "sigma={s}, eps={e} at node ({i}, {j}, {k})"
                )));
            }
        }
        Ok(())
    }
}

/// Separable Gaussian smoothing with a truncated, renormalized kernel.
/// Preserves constants exactly; a zero sigma skips the axis.
pub fn gaussian_smooth(field: &RealField, sigma_m: [f64; 3]) -> RealField {
    let mut out = field.clone();
    for (axis, &s) in Axis::ALL.iter().zip(&sigma_m) {
        if s <= 0.0 {
            continue;
        }
        out = smooth_axis(&out, *axis, s);
    }
    out
}

fn smooth_axis(field: &RealField, axis: Axis, sigma_m: f64) -> RealField {
    let g = *field.grid();
    let h = g.spacing(axis);
    let radius = ((3.0 * sigma_m / h).ceil() as usize).max(1);
    let weights: Vec<f64> = (0..=radius)
        .map(|d| (-((d as f64 * h).powi(2)) / (2.0 * sigma_m * sigma_m)).exp())
        .collect();
    let n = g.count(axis) as isize;
    let mut out = ScalarField::zeros(g);
    for k in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let p = match axis {
                    Axis::X => i,
                    Axis::Y => j,
                    Axis::Z => k,
                } as isize;
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for d in -(radius as isize)..=(radius as isize) {
                    let q = p + d;
                    if q < 0 || q >= n {
                        continue;
                    }
                    let w = weights[d.unsigned_abs()];
                    let (qi, qj, qk) = match axis {
                        Axis::X => (q as usize, j, k),
                        Axis::Y => (i, q as usize, k),
                        Axis::Z => (i, j, q as usize),
                    };
                    acc += w * field.at(qi, qj, qk);
                    wsum += w;
                }
                out.set(i, j, k, acc / wsum);
            }
        }
    }
    out
}

/// Nearest-material sampling at node centers; the collar is forced to the
/// background after optional smoothing.
pub fn sample(phantom: &Phantom, grid: &Grid3D, omega: f64) -> Result<Admittivity, MreptError> {
    phantom.validate()?;
    let mut sigma = ScalarField::zeros(*grid);
    let mut eps = ScalarField::zeros(*grid);
    for k in 0..grid.nz {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let p = grid.position(i, j, k);
                let mut m = phantom.background;
                for shape in &phantom.shapes {
                    if shape.contains(p) {
                        m = shape.material();
                    }
                }
                sigma.set(i, j, k, m.sigma);
                eps.set(i, j, k, m.eps());
            }
        }
    }
    if phantom.smooth.iter().any(|&s| s > 0.0) {
        sigma = gaussian_smooth(&sigma, phantom.smooth);
        eps = gaussian_smooth(&eps, phantom.smooth);
    }
    // collar takes the background material exactly
    for k in 0..grid.nz {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if phantom.collar_contains(grid, i, j, k) {
                    sigma.set(i, j, k, phantom.background.sigma);
                    eps.set(i, j, k, phantom.background.eps());
                }
            }
        }
    }
    let adm = Admittivity { sigma, eps, omega };
    adm.check_positive()?;
    Ok(adm)
}

/// Anomaly cylinder of a model-1 scene (always full z-extent).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub material: Material,
}

/// Cylindrical body containing the anomalies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodySpec {
    #[serde(default)]
    pub center: [f64; 2],
    pub radius: f64,
    pub material: Material,
}

/// Configuration of the z-invariant scene.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model1Config {
    pub background: Material,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySpec>,
    #[serde(default)]
    pub anomalies: Vec<AnomalySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collar_d: Option<f64>,
    /// In-plane smoothing std in meters; z is never smoothed so the sampled
    /// scene stays exactly z-invariant.
    #[serde(default)]
    pub smooth_xy: f64,
}

/// Build the z-invariant scene. Sampled admittivity satisfies
/// d(gamma)/dz = 0 exactly.
pub fn build_model1(cfg: &Model1Config) -> Result<Phantom, MreptError> {
    cfg.background.validate()?;
    let mut shapes = Vec::new();
    if let Some(body) = &cfg.body {
        body.material.validate()?;
        if !(body.radius > 0.0) {
            return Err(MreptError::InvalidConfig(
                "body radius must be positive".into(),
            ));
        }
        shapes.push(Shape::Cylinder {
            center: body.center,
            radius: body.radius,
            z_range: None,
            material: body.material,
        });
    }
    for a in &cfg.anomalies {
        a.material.validate()?;
        if !(a.radius > 0.0) {
            return Err(MreptError::InvalidConfig(
                "anomaly radius must be positive".into(),
            ));
        }
        if let Some(body) = &cfg.body {
            let d = ((a.center[0] - body.center[0]).powi(2)
                + (a.center[1] - body.center[1]).powi(2))
            .sqrt();
            if d + a.radius > body.radius {
                return Err(MreptError::InvalidConfig(format!(
                    "anomaly at ({}, {}) with radius {} extends outside the body cylinder",
                    a.center[0], a.center[1], a.radius
                )));
            }
        }
        shapes.push(Shape::Cylinder {
            center: a.center,
            radius: a.radius,
            z_range: None,
            material: a.material,
        });
    }
    Ok(Phantom {
        background: cfg.background,
        shapes,
        collar_d: cfg.collar_d,
        smooth: [cfg.smooth_xy, cfg.smooth_xy, 0.0],
    })
}

/// Configuration of the z-varying scene: separate sub-scenes for z < 0 and
/// z >= 0 sharing one background.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model2Config {
    pub lower: Model1Config,
    pub upper: Model1Config,
    /// Optional z-smoothing std in meters applied on top of the sub-scene
    /// in-plane smoothing.
    #[serde(default)]
    pub smooth_z: f64,
}

/// Build the z-varying scene; the z < 0 half restricts to the lower model-1
/// scene exactly.
pub fn build_model2(cfg: &Model2Config) -> Result<Phantom, MreptError> {
    if cfg.lower.background != cfg.upper.background {
        return Err(MreptError::InvalidConfig(
            "model-2 halves must share one background material".into(),
        ));
    }
    let lower = build_model1(&cfg.lower)?;
    let upper = build_model1(&cfg.upper)?;
    let clip = |shapes: Vec<Shape>, range: [f64; 2]| -> Vec<Shape> {
        shapes
            .into_iter()
            .map(|s| match s {
                Shape::Cylinder {
                    center,
                    radius,
                    material,
                    ..
                } => Shape::Cylinder {
                    center,
                    radius,
                    z_range: Some(range),
                    material,
                },
                other => other,
            })
            .collect()
    };
    let mut shapes = clip(lower.shapes, [f64::NEG_INFINITY, 0.0]);
    shapes.extend(clip(upper.shapes, [0.0, f64::INFINITY]));
    Ok(Phantom {
        background: cfg.lower.background,
        shapes,
        collar_d: cfg.lower.collar_d,
        smooth: [
            cfg.lower.smooth_xy.max(cfg.upper.smooth_xy),
            cfg.lower.smooth_xy.max(cfg.upper.smooth_xy),
            cfg.smooth_z,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg() -> Material {
        Material {
            sigma: 0.5,
            eps_rel: 60.0,
        }
    }

    fn anomaly() -> Material {
        Material {
            sigma: 1.2,
            eps_rel: 80.0,
        }
    }

    #[test]
    fn homogeneous_phantom_is_constant() {
        let g = Grid3D::centered([9, 9, 9], [0.2, 0.2, 0.2]).unwrap();
        let adm = sample(&Phantom::homogeneous(bg()), &g, 1.0e9).unwrap();
        assert!(adm.sigma.values().iter().all(|&v| v == 0.5));
        assert!(adm.eps.values().iter().all(|&v| v == 60.0 * EPS0));
    }

    #[test]
    fn model1_sampling_is_z_invariant() {
        let cfg = Model1Config {
            background: bg(),
            body: None,
            anomalies: vec![AnomalySpec {
                center: [0.03, -0.01],
                radius: 0.025,
                material: anomaly(),
            }],
            collar_d: None,
            smooth_xy: 0.0,
        };
        let g = Grid3D::centered([17, 17, 17], [0.2, 0.2, 0.2]).unwrap();
        let adm = sample(&build_model1(&cfg).unwrap(), &g, 1.0e9).unwrap();
        let slice0: Vec<f64> = (0..17 * 17)
            .map(|n| adm.sigma.values()[2 * 17 * 17 + n])
            .collect();
        for k in 3..14 {
            for n in 0..17 * 17 {
                assert_eq!(adm.sigma.values()[k * 17 * 17 + n], slice0[n]);
            }
        }
    }

    #[test]
    fn model1_rejects_anomaly_outside_body() {
        let cfg = Model1Config {
            background: bg(),
            body: Some(BodySpec {
                center: [0.0, 0.0],
                radius: 0.05,
                material: bg(),
            }),
            anomalies: vec![AnomalySpec {
                center: [0.04, 0.0],
                radius: 0.02,
                material: anomaly(),
            }],
            collar_d: None,
            smooth_xy: 0.0,
        };
        assert!(build_model1(&cfg).is_err());
    }

    #[test]
    fn model2_identical_halves_degenerate_to_model1() {
        let half = Model1Config {
            background: bg(),
            body: None,
            anomalies: vec![AnomalySpec {
                center: [0.02, 0.0],
                radius: 0.03,
                material: anomaly(),
            }],
            collar_d: None,
            smooth_xy: 0.0,
        };
        let cfg2 = Model2Config {
            lower: half.clone(),
            upper: half.clone(),
            smooth_z: 0.0,
        };
        let g = Grid3D::centered([13, 13, 13], [0.2, 0.2, 0.2]).unwrap();
        let a1 = sample(&build_model1(&half).unwrap(), &g, 1.0e9).unwrap();
        let a2 = sample(&build_model2(&cfg2).unwrap(), &g, 1.0e9).unwrap();
        assert_eq!(a1.sigma.values(), a2.sigma.values());
        assert_eq!(a1.eps.values(), a2.eps.values());
    }

    #[test]
    fn model2_lower_half_matches_model1() {
        let lower = Model1Config {
            background: bg(),
            body: None,
            anomalies: vec![],
            collar_d: None,
            smooth_xy: 0.0,
        };
        let upper = Model1Config {
            background: bg(),
            body: None,
            anomalies: vec![AnomalySpec {
                center: [0.0, 0.0],
                radius: 0.04,
                material: anomaly(),
            }],
            collar_d: None,
            smooth_xy: 0.0,
        };
        let cfg = Model2Config {
            lower: lower.clone(),
            upper,
            smooth_z: 0.0,
        };
        let g = Grid3D::centered([13, 13, 13], [0.2, 0.2, 0.2]).unwrap();
        let a2 = sample(&build_model2(&cfg).unwrap(), &g, 1.0e9).unwrap();
        let a1 = sample(&build_model1(&lower).unwrap(), &g, 1.0e9).unwrap();
        // z < 0 half equals the lower scene; anomaly only shows for z >= 0
        let mut differs_above = false;
        for k in 0..13 {
            let z = g.position(0, 0, k)[2];
            for j in 0..13 {
                for i in 0..13 {
                    if z < 0.0 {
                        assert_eq!(a2.sigma.at(i, j, k), a1.sigma.at(i, j, k));
                    } else if a2.sigma.at(i, j, k) != a1.sigma.at(i, j, k) {
                        differs_above = true;
                    }
                }
            }
        }
        assert!(differs_above);
    }

    #[test]
    fn collar_forced_to_background() {
        let cfg = Model1Config {
            background: bg(),
            body: None,
            anomalies: vec![AnomalySpec {
                center: [0.0, 0.0],
                radius: 0.09,
                material: anomaly(),
            }],
            collar_d: None,
            smooth_xy: 0.0,
        };
        let g = Grid3D::centered([11, 11, 11], [0.2, 0.2, 0.2]).unwrap();
        let adm = sample(&build_model1(&cfg).unwrap(), &g, 1.0e9).unwrap();
        for k in 0..11 {
            for j in 0..11 {
                for i in 0..11 {
                    let depth = i.min(j).min(k).min(10 - i).min(10 - j).min(10 - k);
                    if depth < 2 {
                        assert_eq!(adm.sigma.at(i, j, k), bg().sigma);
                    }
                }
            }
        }
    }

    #[test]
    fn anomaly_volume_fraction_matches_analytic() {
        let r = 0.05;
        let cfg = Model1Config {
            background: bg(),
            body: None,
            anomalies: vec![AnomalySpec {
                center: [0.0, 0.0],
                radius: r,
                material: anomaly(),
            }],
            collar_d: Some(0.0),
            smooth_xy: 0.0,
        };
        let g = Grid3D::centered([81, 81, 9], [0.2, 0.2, 0.2]).unwrap();
        let adm = sample(&build_model1(&cfg).unwrap(), &g, 1.0e9).unwrap();
        let count = adm
            .sigma
            .values()
            .iter()
            .filter(|&&v| v == anomaly().sigma)
            .count();
        let frac = count as f64 / g.num_nodes() as f64;
        let analytic = std::f64::consts::PI * r * r / (0.2 * 0.2);
        assert!(
            (frac - analytic).abs() / analytic < 0.05,
            "frac {frac} vs analytic {analytic}"
        );
    }

    #[test]
    fn smoothing_preserves_constants() {
        let g = Grid3D::centered([9, 9, 9], [0.1, 0.1, 0.1]).unwrap();
        let f = RealField::constant(g, 2.5);
        let s = gaussian_smooth(&f, [0.01, 0.01, 0.01]);
        for &v in s.values() {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }
}
