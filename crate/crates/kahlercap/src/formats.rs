//! Flat binary fields with JSON sidecars, and measure tables.
//!
//! A field file holds one block per chart: a header of `chart: u32`,
//! `box_radius: f64`, `resolution: u32`, then `resolution²` values in
//! row-major order (rows run along `Im z`, from `−box_radius` up). Everything
//! is little-endian; `−∞` is stored as `−1e300`.

use std::io::Write;
use std::path::{Path, PathBuf};

use kahlercap_core::field::{DiscreteMeasure, QpshField};
use kahlercap_core::geometry::ProjectiveGrid;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, CliResult};

pub const SENTINEL: f64 = -1e300;
const HEADER_BYTES: usize = 4 + 8 + 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub charts: usize,
    pub box_radius: f64,
    pub resolution: usize,
    pub sentinel: f64,
    /// Whether the values are certified ω-psh.
    pub claimed: bool,
    pub sup: Option<f64>,
    pub inf: Option<f64>,
    pub sentinel_fraction: f64,
}

pub const FIELD_FORMAT: &str = "kahlercap-field-v1";
pub const MEASURE_FORMAT: &str = "kahlercap-measure-v1";

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn encode(grid: &ProjectiveGrid, values: [&[f64]; 2]) -> Vec<u8> {
    let n = grid.nodes_per_chart();
    let mut out = Vec::with_capacity(2 * (HEADER_BYTES + 8 * n));
    for (c, vals) in values.iter().enumerate() {
        out.extend_from_slice(&(c as u32).to_le_bytes());
        out.extend_from_slice(&grid.box_radius.to_le_bytes());
        out.extend_from_slice(&(grid.resolution as u32).to_le_bytes());
        for v in vals.iter() {
            let v = if *v == f64::NEG_INFINITY { SENTINEL } else { *v };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn decode(bytes: &[u8], path: &Path) -> CliResult<(ProjectiveGrid, [Vec<f64>; 2])> {
    let bad = |msg: String| CliError::Format {
        path: path.to_path_buf(),
        msg,
    };
    let mut pos = 0;
    let mut take = |k: usize| -> CliResult<&[u8]> {
        let s = bytes
            .get(pos..pos + k)
            .ok_or_else(|| bad(format!("truncated at byte {pos}")))?;
        pos += k;
        Ok(s)
    };
    let mut grid: Option<ProjectiveGrid> = None;
    let mut values: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for c in 0..2 {
        let chart = u32::from_le_bytes(take(4)?.try_into().unwrap());
        let b = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let m = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        if chart as usize != c {
            return Err(bad(format!("block {c} is labelled chart {chart}")));
        }
        let g = ProjectiveGrid::new(b, m).map_err(|e| bad(e.to_string()))?;
        if grid.is_some_and(|g0| g0 != g) {
            return Err(bad("chart blocks disagree on the grid".into()));
        }
        grid = Some(g);
        let raw = take(8 * m * m)?;
        values[c] = raw
            .chunks_exact(8)
            .map(|w| {
                let v = f64::from_le_bytes(w.try_into().unwrap());
                if v <= 0.5 * SENTINEL {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            })
            .collect();
    }
    if pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok((grid.expect("two blocks read"), values))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

fn write_sidecar(path: &Path, s: &Sidecar) -> CliResult<()> {
    let p = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(s).expect("sidecar serializes");
    text.push('\n');
    write_bytes(&p, text.as_bytes())
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Writes the binary field and its sidecar.
pub fn write_field(path: &Path, f: &QpshField) -> CliResult<()> {
    let grid = f.grid();
    write_bytes(path, &encode(grid, [f.values(0), f.values(1)]))?;
    write_sidecar(
        path,
        &Sidecar {
            format: FIELD_FORMAT.into(),
            charts: 2,
            box_radius: grid.box_radius,
            resolution: grid.resolution,
            sentinel: SENTINEL,
            claimed: f.claimed(),
            sup: finite_or_none(f.sup()),
            inf: finite_or_none(f.inf()),
            sentinel_fraction: f.sentinel_fraction(),
        },
    )
}

/// Reads a binary field. The certification claim comes from the sidecar
/// when one exists; otherwise the field is certified from its values.
pub fn read_field(path: &Path) -> CliResult<QpshField> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let (grid, values) = decode(&bytes, path)?;
    let side = sidecar_path(path);
    let claimed = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(io_err(&side))?;
        let s: Sidecar = serde_json::from_str(&text).map_err(|e| CliError::Format {
            path: side.clone(),
            msg: e.to_string(),
        })?;
        if s.box_radius != grid.box_radius || s.resolution != grid.resolution {
            return Err(CliError::Format {
                path: side,
                msg: "sidecar grid differs from the binary header".into(),
            });
        }
        Some(s.claimed)
    } else {
        None
    };
    let f = QpshField::from_charts(grid, values, claimed.unwrap_or(false)).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    Ok(if claimed.is_some() { f } else { f.certify() })
}

/// Measure weights in the field layout, plus a sidecar.
pub fn write_measure_bin(path: &Path, m: &DiscreteMeasure) -> CliResult<()> {
    write_bytes(path, &encode(&m.grid, [&m.weights[0], &m.weights[1]]))?;
    write_sidecar(
        path,
        &Sidecar {
            format: MEASURE_FORMAT.into(),
            charts: 2,
            box_radius: m.grid.box_radius,
            resolution: m.grid.resolution,
            sentinel: SENTINEL,
            claimed: false,
            sup: None,
            inf: None,
            sentinel_fraction: 0.0,
        },
    )
}

pub fn read_measure_bin(path: &Path) -> CliResult<DiscreteMeasure> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let (grid, weights) = decode(&bytes, path)?;
    Ok(DiscreteMeasure { grid, weights })
}

/// `node,weight` rows for nonzero weights; the node index is
/// `chart · resolution² + row · resolution + column`.
pub fn write_measure_csv(path: &Path, m: &DiscreteMeasure) -> CliResult<()> {
    let n = m.grid.nodes_per_chart();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["node", "weight"]).map_err(|e| csv_err(path, e))?;
    for c in 0..2 {
        for (k, v) in m.weights[c].iter().enumerate() {
            if *v != 0.0 {
                w.write_record([(c * n + k).to_string(), v.to_string()])
                    .map_err(|e| csv_err(path, e))?;
            }
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn read_measure_csv(path: &Path, grid: ProjectiveGrid) -> CliResult<DiscreteMeasure> {
    let n = grid.nodes_per_chart();
    let mut m = DiscreteMeasure::zero(grid);
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    for (line, rec) in r.deserialize::<(usize, f64)>().enumerate() {
        let (node, weight) = rec.map_err(|e| csv_err(path, e))?;
        if node >= 2 * n {
            return Err(CliError::Format {
                path: path.to_path_buf(),
                msg: format!("row {}: node {node} outside the grid", line + 2),
            });
        }
        m.weights[node / n][node % n] = weight;
    }
    Ok(m)
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

/// Writes rows under a header.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahlercap_core::field::{fs_volume, kernel_potential, random_certified_field, AtomicMeasure};
    use kahlercap_core::C64;

    #[test]
    fn field_round_trip_keeps_sentinels() {
        let dir = tempfile::tempdir().unwrap();
        let g = ProjectiveGrid::new(2.0, 17).unwrap();
        let f = kernel_potential(&g, &AtomicMeasure::dirac(C64::new(0.0, 0.0), C64::new(1.0, 0.0)).unwrap());
        assert!(f.has_sentinel());
        let p = dir.path().join("f.bin");
        write_field(&p, &f).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len() as usize, 2 * (HEADER_BYTES + 8 * 17 * 17));
        let back = read_field(&p).unwrap();
        assert_eq!(back.values(0), f.values(0));
        assert_eq!(back.values(1), f.values(1));
        assert_eq!(back.claimed(), f.claimed());

        let r = random_certified_field(&g, 4);
        write_field(&p, &r).unwrap();
        std::fs::remove_file(sidecar_path(&p)).unwrap();
        // No sidecar: certified from values.
        assert!(read_field(&p).unwrap().claimed());
    }

    #[test]
    fn malformed_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        std::fs::write(&p, [0u8; 10]).unwrap();
        assert!(matches!(read_field(&p), Err(CliError::Format { .. })));
        let g = ProjectiveGrid::new(2.0, 17).unwrap();
        let zeros = vec![0.0; 17 * 17];
        let mut bytes = encode(&g, [&zeros, &zeros]);
        bytes.push(0);
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_field(&p), Err(CliError::Format { .. })));
    }

    #[test]
    fn measure_tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = ProjectiveGrid::new(2.0, 17).unwrap();
        let m = fs_volume(&g);
        let csv_path = dir.path().join("m.csv");
        write_measure_csv(&csv_path, &m).unwrap();
        assert_eq!(read_measure_csv(&csv_path, g).unwrap(), m);
        let bin = dir.path().join("m.bin");
        write_measure_bin(&bin, &m).unwrap();
        assert_eq!(read_measure_bin(&bin).unwrap(), m);
    }
}
