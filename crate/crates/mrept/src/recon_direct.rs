//! Pointwise direct reconstruction.
//!
//! Assuming the admittivity is locally constant, the field equation reduces to
//! ΔH⁺ = iωμ₀ γ H⁺, giving the pointwise estimate γ = ΔH⁺ / (iωμ₀ H⁺). The
//! estimate is exact for homogeneous media and degrades near material jumps,
//! where the neglected gradient term dominates; it also blows up near zeros of
//! H⁺, which a relative amplitude guard masks out.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::MreptError;
use crate::grid::ComplexField;
use crate::phantom::{gaussian_smooth, Admittivity};
use crate::MU0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectConfig {
    /// Nodes with |H⁺| below `guard` times the max amplitude are masked.
    pub guard: f64,
    /// Optional per-axis Gaussian presmoothing of the data, std in meters.
    #[serde(default)]
    pub presmooth: [f64; 3],
}

impl Default for DirectConfig {
    fn default() -> Self {
        Self {
            guard: 1e-3,
            presmooth: [0.0; 3],
        }
    }
}

/// Direct estimate with its validity mask.
#[derive(Debug, Clone)]
pub struct DirectResult {
    /// Estimated admittivity; NaN at masked nodes.
    pub gamma: ComplexField,
    /// Per-node validity: false where the amplitude guard tripped.
    pub valid: Vec<bool>,
}

impl DirectResult {
    /// Split into (sigma, eps) fields, NaN at masked nodes.
    pub fn admittivity(&self, omega: f64) -> Admittivity {
        Admittivity::from_gamma(&self.gamma, omega)
    }

    pub fn num_masked(&self) -> usize {
        self.valid.iter().filter(|&&v| !v).count()
    }
}

/// Apply the pointwise formula to measured data.
pub fn direct_reconstruct(
    h: &ComplexField,
    omega: f64,
    config: &DirectConfig,
) -> Result<DirectResult, MreptError> {
    if !(config.guard > 0.0) || config.guard >= 1.0 {
        return Err(MreptError::InvalidConfig(format!(
            "amplitude guard must be in (0, 1), got {}",
            config.guard
        )));
    }
    let h = if config.presmooth.iter().any(|&s| s > 0.0) {
        let re = gaussian_smooth(&h.real_part(), config.presmooth);
        let im = gaussian_smooth(&h.imag_part(), config.presmooth);
        ComplexField::from_parts(&re, &im)
    } else {
        h.clone()
    };
    let max = h.max_abs();
    if max == 0.0 {
        return Err(MreptError::DegenerateData(
            "measured field is identically zero".into(),
        ));
    }
    let floor = config.guard * max;
    let lap = h.laplacian();
    let iwm = Complex64::new(0.0, omega * MU0);
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let mut valid = vec![true; h.values().len()];
    let gamma = ComplexField::from_values(
        *h.grid(),
        h.values()
            .iter()
            .zip(lap.values())
            .enumerate()
            .map(|(idx, (&hv, &lv))| {
                if hv.norm() < floor {
                    valid[idx] = false;
                    nan
                } else {
                    lv / (iwm * hv)
                }
            })
            .collect(),
    )?;
    Ok(DirectResult { gamma, valid })
}
