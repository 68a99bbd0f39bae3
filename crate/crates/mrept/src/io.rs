//! Binary field dumps: raw little-endian f64 values plus a JSON sidecar.
//!
//! Values are written in grid index order (x innermost, z outermost); complex
//! fields interleave real and imaginary parts. The sidecar lives next to the
//! raw file with a `.json` extension and records dims, spacing, origin, kind,
//! and a free-form name.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::MreptError;
use crate::grid::{make_grid, ComplexField, Grid3D, RealField, ScalarField};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub version: u32,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    /// "real" or "complex"
    pub kind: String,
    pub name: String,
}

impl FieldSidecar {
    fn for_grid(grid: &Grid3D, kind: &str, name: &str) -> Self {
        Self {
            version: 1,
            dims: [grid.nx, grid.ny, grid.nz],
            spacing: [grid.hx, grid.hy, grid.hz],
            origin: grid.origin,
            kind: kind.to_string(),
            name: name.to_string(),
        }
    }

    pub fn grid(&self) -> Result<Grid3D, MreptError> {
        make_grid(
            self.dims[0],
            self.dims[1],
            self.dims[2],
            self.spacing,
            self.origin,
        )
    }
}

fn sidecar_path(raw_path: &Path) -> PathBuf {
    raw_path.with_extension("json")
}

fn write_f64s(path: &Path, data: impl Iterator<Item = f64>) -> Result<(), MreptError> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_f64s(path: &Path, count: usize) -> Result<Vec<f64>, MreptError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(MreptError::FieldMismatch(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            count * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn write_sidecar(raw_path: &Path, sidecar: &FieldSidecar) -> Result<(), MreptError> {
    let f = File::create(sidecar_path(raw_path))?;
    serde_json::to_writer_pretty(BufWriter::new(f), sidecar)?;
    Ok(())
}

pub fn read_sidecar(raw_path: &Path) -> Result<FieldSidecar, MreptError> {
    let f = File::open(sidecar_path(raw_path))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

pub fn write_real_field(path: &Path, field: &RealField, name: &str) -> Result<(), MreptError> {
    write_f64s(path, field.values().iter().copied())?;
    write_sidecar(path, &FieldSidecar::for_grid(field.grid(), "real", name))
}

pub fn write_complex_field(
    path: &Path,
    field: &ComplexField,
    name: &str,
) -> Result<(), MreptError> {
    write_f64s(
        path,
        field.values().iter().flat_map(|c| [c.re, c.im]),
    )?;
    write_sidecar(path, &FieldSidecar::for_grid(field.grid(), "complex", name))
}

pub fn read_real_field(path: &Path) -> Result<RealField, MreptError> {
    let sidecar = read_sidecar(path)?;
    if sidecar.kind != "real" {
        return Err(MreptError::FieldMismatch(format!(
            "{} is kind '{}', expected real",
            path.display(),
            sidecar.kind
        )));
    }
    let grid = sidecar.grid()?;
    let values = read_f64s(path, grid.num_nodes())?;
    ScalarField::from_values(grid, values)
}

pub fn read_complex_field(path: &Path) -> Result<ComplexField, MreptError> {
    let sidecar = read_sidecar(path)?;
    if sidecar.kind != "complex" {
        return Err(MreptError::FieldMismatch(format!(
            "{} is kind '{}', expected complex",
            path.display(),
            sidecar.kind
        )));
    }
    let grid = sidecar.grid()?;
    let raw = read_f64s(path, 2 * grid.num_nodes())?;
    let values = raw
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    ScalarField::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3D;

    #[test]
    fn real_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid3D::centered([4, 5, 3], [1.0, 1.0, 1.0]).unwrap();
        let f = RealField::from_fn(g, |p| p[0] * 2.0 - p[2]);
        let path = dir.path().join("f.raw");
        write_real_field(&path, &f, "test").unwrap();
        let back = read_real_field(&path).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn complex_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid3D::centered([3, 3, 4], [1.0, 1.0, 2.0]).unwrap();
        let f = ComplexField::from_fn(g, |p| Complex64::new(p[0], p[1] - p[2]));
        let path = dir.path().join("h.raw");
        write_complex_field(&path, &f, "h").unwrap();
        let back = read_complex_field(&path).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn kind_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid3D::centered([3, 3, 3], [1.0; 3]).unwrap();
        let f = RealField::constant(g, 1.0);
        let path = dir.path().join("f.raw");
        write_real_field(&path, &f, "f").unwrap();
        assert!(read_complex_field(&path).is_err());
    }
}
