//! Reconstruction quality metrics and report artifacts.
//!
//! Provides region-restricted error norms, the mean relative admittivity
//! deviation over an anomaly region, 8-bit PGM slice exports with min/max
//! windowing recorded in a JSON sidecar, bit-exact CSV slice exports, and a
//! CSV convergence log that can be re-parsed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::MreptError;
use crate::grid::{ComplexField, RealField};
use crate::phantom::{Admittivity, Material};
use crate::recon_newton::NewtonRecord;

/// Absolute L2 error ‖est - truth‖ over a node region (all nodes when the
/// region is `None`), with node quadrature.
pub fn l2_error(est: &ComplexField, truth: &ComplexField, region: Option<&[bool]>) -> f64 {
    let vol = est.grid().cell_volume();
    let sum: f64 = est
        .values()
        .iter()
        .zip(truth.values())
        .enumerate()
        .filter(|(idx, _)| region.map_or(true, |r| r[*idx]))
        .map(|(_, (a, b))| (a - b).norm_sqr())
        .sum();
    (sum * vol).sqrt()
}

/// Relative L2 error ‖est - truth‖ / ‖truth‖ over a region.
pub fn relative_l2_error(est: &ComplexField, truth: &ComplexField, region: Option<&[bool]>) -> f64 {
    let vol = est.grid().cell_volume();
    let denom: f64 = truth
        .values()
        .iter()
        .enumerate()
        .filter(|(idx, _)| region.map_or(true, |r| r[*idx]))
        .map(|(_, v)| v.norm_sqr())
        .sum();
    l2_error(est, truth, region) / (denom * vol).sqrt()
}

/// Mean relative deviation (1/|S|) Σ_S |est/truth - 1| over a region.
pub fn anomaly_accuracy(
    est: &ComplexField,
    truth: &ComplexField,
    region: &[bool],
) -> Result<f64, MreptError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (idx, (&e, &t)) in est.values().iter().zip(truth.values()).enumerate() {
        if !region[idx] {
            continue;
        }
        if t.norm() == 0.0 {
            return Err(MreptError::DegenerateData(
                "truth admittivity vanishes inside the anomaly region".into(),
            ));
        }
        sum += (e / t - num_complex::Complex64::ONE).norm();
        count += 1;
    }
    if count == 0 {
        return Err(MreptError::InvalidConfig("anomaly region is empty".into()));
    }
    Ok(sum / count as f64)
}

/// Region where the truth deviates from the background material by more than
/// `rel_tol` in either component.
pub fn anomaly_region(truth: &Admittivity, background: Material, rel_tol: f64) -> Vec<bool> {
    let bg_sigma = background.sigma;
    let bg_eps = background.eps();
    truth
        .sigma
        .values()
        .iter()
        .zip(truth.eps.values())
        .map(|(&s, &e)| {
            let ds = if bg_sigma > 0.0 {
                (s - bg_sigma).abs() / bg_sigma
            } else {
                s.abs()
            };
            let de = (e - bg_eps).abs() / bg_eps;
            ds > rel_tol || de > rel_tol
        })
        .collect()
}

/// Axis-aligned slice selector (index along the fixed axis).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "axis", content = "index", rename_all = "snake_case")]
pub enum SlicePlane {
    X(usize),
    Y(usize),
    Z(usize),
}

fn slice_values(field: &RealField, plane: SlicePlane) -> Result<(usize, usize, Vec<f64>), MreptError> {
    let g = field.grid();
    let (cols, rows) = match plane {
        SlicePlane::X(i) if i < g.nx => (g.ny, g.nz),
        SlicePlane::Y(j) if j < g.ny => (g.nx, g.nz),
        SlicePlane::Z(k) if k < g.nz => (g.nx, g.ny),
        _ => {
            return Err(MreptError::InvalidConfig(format!(
                "slice index out of range for {plane:?}"
            )))
        }
    };
    let mut out = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            let v = match plane {
                SlicePlane::X(i) => field.at(i, c, r),
                SlicePlane::Y(j) => field.at(c, j, r),
                SlicePlane::Z(k) => field.at(c, r, k),
            };
            out.push(v);
        }
    }
    Ok((cols, rows, out))
}

/// Window metadata stored next to a PGM export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceWindow {
    pub plane: SlicePlane,
    pub min: f64,
    pub max: f64,
}

/// Export a slice as binary 8-bit PGM (P5) with min/max windowing; the
/// window is recorded in a `.json` sidecar so values remain interpretable.
pub fn export_slice_pgm(
    field: &RealField,
    plane: SlicePlane,
    path: &Path,
) -> Result<SliceWindow, MreptError> {
    let (cols, rows, values) = slice_values(field, plane)?;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() {
        return Err(MreptError::DegenerateData(
            "slice contains non-finite values".into(),
        ));
    }
    let span = max - min;
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    let bytes: Vec<u8> = values
        .iter()
        .map(|&v| {
            if span == 0.0 {
                0
            } else {
                (255.0 * (v - min) / span).round().clamp(0.0, 255.0) as u8
            }
        })
        .collect();
    w.write_all(&bytes)?;
    w.flush()?;
    let window = SliceWindow { plane, min, max };
    let sidecar = File::create(path.with_extension("json"))?;
    serde_json::to_writer_pretty(BufWriter::new(sidecar), &window)?;
    Ok(window)
}

/// Export a slice as CSV with full-precision values (bit-exact on re-parse).
pub fn export_slice_csv(field: &RealField, plane: SlicePlane, path: &Path) -> Result<(), MreptError> {
    let (cols, rows, values) = slice_values(field, plane)?;
    let mut w = BufWriter::new(File::create(path)?);
    for r in 0..rows {
        let row: Vec<String> = (0..cols)
            .map(|c| format!("{:.17e}", values[r * cols + c]))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

const CONVERGENCE_HEADER: &str = "iteration,misfit,grad_norm,rel_change,truth_error";

/// Write the Newton convergence history as CSV.
pub fn write_convergence_csv(path: &Path, records: &[NewtonRecord]) -> Result<(), MreptError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    for r in records {
        let truth = r
            .truth_error
            .map(|v| format!("{v:.17e}"))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{:.17e},{:.17e},{:.17e},{}",
            r.iteration, r.misfit, r.grad_norm, r.rel_change, truth
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Re-parse a convergence CSV written by [`write_convergence_csv`].
pub fn read_convergence_csv(path: &Path) -> Result<Vec<NewtonRecord>, MreptError> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == CONVERGENCE_HEADER => {}
        _ => {
            return Err(MreptError::InvalidConfig(format!(
                "{} is not a convergence log",
                path.display()
            )))
        }
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(MreptError::InvalidConfig(format!(
                "malformed convergence row: {line}"
            )));
        }
        let parse = |s: &str| -> Result<f64, MreptError> {
            s.parse()
                .map_err(|e| MreptError::InvalidConfig(format!("bad number '{s}': {e}")))
        };
        out.push(NewtonRecord {
            iteration: parts[0]
                .parse()
                .map_err(|e| MreptError::InvalidConfig(format!("bad iteration: {e}")))?,
            misfit: parse(parts[1])?,
            grad_norm: parse(parts[2])?,
            rel_change: parse(parts[3])?,
            truth_error: if parts[4].is_empty() {
                None
            } else {
                Some(parse(parts[4])?)
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3D;
    use num_complex::Complex64;

    #[test]
    fn l2_error_basics() {
        let g = Grid3D::centered([5, 5, 5], [0.1; 3]).unwrap();
        let a = ComplexField::constant(g, Complex64::new(1.0, 0.0));
        let b = ComplexField::constant(g, Complex64::new(1.0, 1.0));
        assert_eq!(l2_error(&a, &a, None), 0.0);
        let expect = (g.num_nodes() as f64 * g.cell_volume()).sqrt();
        assert!((l2_error(&a, &b, None) - expect).abs() < 1e-12);
        // restricting to an empty region gives zero
        let none = vec![false; g.num_nodes()];
        assert_eq!(l2_error(&a, &b, Some(&none)), 0.0);
    }

    #[test]
    fn anomaly_accuracy_on_scaled_field() {
        let g = Grid3D::centered([5, 5, 5], [0.1; 3]).unwrap();
        let truth = ComplexField::constant(g, Complex64::new(2.0, 1.0));
        let est = truth.scaled(1.1);
        let region = vec![true; g.num_nodes()];
        let acc = anomaly_accuracy(&est, &truth, &region).unwrap();
        assert!((acc - 0.1).abs() < 1e-12);
    }

    #[test]
    fn pgm_export_has_correct_header_and_size() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid3D::centered([7, 5, 3], [0.1; 3]).unwrap();
        let f = RealField::from_fn(g, |p| p[0] + p[1]);
        let path = dir.path().join("slice.pgm");
        let window = export_slice_pgm(&f, SlicePlane::Z(1), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n7 5\n255\n";
        assert!(bytes.starts_with(header));
        assert_eq!(bytes.len(), header.len() + 7 * 5);
        assert!(window.min < window.max);
        // sidecar exists and parses
        let sc: SliceWindow =
            serde_json::from_reader(File::open(path.with_extension("json")).unwrap()).unwrap();
        assert_eq!(sc.min, window.min);
    }

    #[test]
    fn csv_slice_roundtrips_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid3D::centered([4, 3, 3], [0.1; 3]).unwrap();
        let f = RealField::from_fn(g, |p| (p[0] * 17.3).sin() * 1e-7 + p[2]);
        let path = dir.path().join("slice.csv");
        export_slice_csv(&f, SlicePlane::Z(2), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for (r, line) in text.lines().enumerate() {
            for (c, cell) in line.split(',').enumerate() {
                let parsed: f64 = cell.parse().unwrap();
                assert_eq!(parsed.to_bits(), f.at(c, r, 2).to_bits());
            }
        }
    }

    #[test]
    fn convergence_log_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            NewtonRecord {
                iteration: 0,
                misfit: 1.25e-3,
                grad_norm: 4.0e-2,
                rel_change: 0.5,
                truth_error: Some(0.125),
            },
            NewtonRecord {
                iteration: 1,
                misfit: 6.0e-4,
                grad_norm: 1.0e-2,
                rel_change: 0.25,
                truth_error: None,
            },
        ];
        let path = dir.path().join("log.csv");
        write_convergence_csv(&path, &records).unwrap();
        let back = read_convergence_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].misfit.to_bits(), records[0].misfit.to_bits());
        assert_eq!(back[1].truth_error, None);
        assert_eq!(back[0].truth_error, Some(0.125));
    }
}
