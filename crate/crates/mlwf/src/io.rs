//! Binary blobs with JSON sidecar headers, and CSV exports.

use std::fs;
use std::path::{Path, PathBuf};

use mlwf_core::grid::{Grid, SampledField, SpectralField};
use mlwf_core::modulation::PhaseSpaceField;
use mlwf_core::C64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlobKind {
    Sampled,
    Spectral,
    Phasespace,
    /// Symbol table `a(x, k)` stored as `[k * len + x]`.
    Symbol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Complex64,
    #[default]
    Complex128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub dimension: usize,
    pub n: usize,
    pub kind: BlobKind,
    #[serde(default)]
    pub precision: Precision,
}

impl Header {
    pub fn grid(&self) -> CliResult<Grid> {
        Grid::new(self.dimension, self.n).map_err(|e| CliError::schema(format!("header: {e}")))
    }

    fn expected_len(&self) -> CliResult<usize> {
        let m = self.grid()?.len();
        Ok(match self.kind {
            BlobKind::Sampled | BlobKind::Spectral => m,
            BlobKind::Phasespace | BlobKind::Symbol => m * m,
        })
    }
}

/// `f.bin` -> `f.bin.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingFile(path.to_path_buf()))
    }
}

pub fn write_blob(path: &Path, header: &Header, data: &[C64]) -> CliResult<()> {
    if data.len() != header.expected_len()? {
        return Err(CliError::Other(format!("blob holds {} values, header expects {}", data.len(), header.expected_len()?)));
    }
    let mut bytes = Vec::with_capacity(data.len() * 16);
    for v in data {
        match header.precision {
            Precision::Complex128 => {
                bytes.extend_from_slice(&v.re.to_le_bytes());
                bytes.extend_from_slice(&v.im.to_le_bytes());
            }
            Precision::Complex64 => {
                bytes.extend_from_slice(&(v.re as f32).to_le_bytes());
                bytes.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
        }
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(header)? + "\n")?;
    Ok(())
}

pub fn read_blob(path: &Path) -> CliResult<(Header, Vec<C64>)> {
    require_file(path)?;
    let side = sidecar_path(path);
    require_file(&side)?;
    let header: Header = serde_json::from_str(&fs::read_to_string(&side)?)
        .map_err(|e| CliError::schema(format!("{}: {e}", side.display())))?;
    let bytes = fs::read(path)?;
    let width = match header.precision {
        Precision::Complex128 => 16,
        Precision::Complex64 => 8,
    };
    let want = header.expected_len()?;
    if bytes.len() != want * width {
        return Err(CliError::schema(format!("{}: {} bytes, header implies {}", path.display(), bytes.len(), want * width)));
    }
    let data = bytes
        .chunks_exact(width)
        .map(|c| match header.precision {
            Precision::Complex128 => C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            ),
            Precision::Complex64 => C64::new(
                f32::from_le_bytes(c[..4].try_into().unwrap()) as f64,
                f32::from_le_bytes(c[4..].try_into().unwrap()) as f64,
            ),
        })
        .collect();
    Ok((header, data))
}

fn header_for(grid: &Grid, kind: BlobKind) -> Header {
    Header { dimension: grid.dim(), n: grid.n(), kind, precision: Precision::Complex128 }
}

pub fn write_sampled(path: &Path, f: &SampledField) -> CliResult<()> {
    write_blob(path, &header_for(&f.grid, BlobKind::Sampled), &f.values)
}

pub fn write_spectral(path: &Path, f: &SpectralField) -> CliResult<()> {
    write_blob(path, &header_for(&f.grid, BlobKind::Spectral), &f.coeffs)
}

pub fn write_phase_space(path: &Path, v: &PhaseSpaceField) -> CliResult<()> {
    write_blob(path, &header_for(&v.grid, BlobKind::Phasespace), &v.values)
}

/// A field file of either kind.
#[derive(Debug, Clone)]
pub enum FieldFile {
    Sampled(SampledField),
    Spectral(SpectralField),
}

pub fn read_field(path: &Path) -> CliResult<FieldFile> {
    let (h, data) = read_blob(path)?;
    let grid = h.grid()?;
    match h.kind {
        BlobKind::Sampled => Ok(FieldFile::Sampled(SampledField { grid, values: data })),
        BlobKind::Spectral => Ok(FieldFile::Spectral(SpectralField { grid, coeffs: data })),
        other => Err(CliError::schema(format!("{}: expected a field blob, found {other:?}", path.display()))),
    }
}

/// Reads a sampled field, transforming spectral blobs back to samples.
pub fn read_sampled(path: &Path) -> CliResult<SampledField> {
    Ok(match read_field(path)? {
        FieldFile::Sampled(f) => f,
        FieldFile::Spectral(s) => mlwf_core::grid::inverse_transform(&s),
    })
}

/// `index, re, im` rows.
pub fn write_values_csv(path: &Path, values: &[C64]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "re", "im"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{:e}", v.re), format!("{:e}", v.im)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_both_precisions() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(1, 8).unwrap();
        let f = SampledField::from_fn(g, |x| C64::new(x[0], -x[0] * 0.5));
        let p = dir.path().join("f.bin");
        write_sampled(&p, &f).unwrap();
        assert_eq!(read_sampled(&p).unwrap(), f);

        let h = Header { precision: Precision::Complex64, ..header_for(&g, BlobKind::Sampled) };
        write_blob(&p, &h, &f.values).unwrap();
        let back = read_sampled(&p).unwrap();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn truncated_blob_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(1, 8).unwrap();
        let p = dir.path().join("f.bin");
        write_sampled(&p, &SampledField::zeros(g)).unwrap();
        fs::write(&p, [0u8; 10]).unwrap();
        assert_eq!(read_blob(&p).unwrap_err().exit_code(), 2);
        assert_eq!(read_blob(&dir.path().join("none.bin")).unwrap_err().exit_code(), 3);
    }
}
