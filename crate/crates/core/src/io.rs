//! CSV interchange: configuration fields, sampled surfaces and load tables.
//!
//! Field files have the fixed header `idx,u,v,mx,my,mz,qw,qx,qy,qz` with one
//! row per node in grid order. Floats are written in shortest round-trip form,
//! so a written field reads back bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ParameterDomain, SampledSurface};
use crate::kinematics::{Grid, MidsurfaceConfiguration};
use crate::solver::LoadSpec;

pub const FIELD_HEADER: [&str; 10] = ["idx", "u", "v", "mx", "my", "mz", "qw", "qx", "qy", "qz"];
pub const SURFACE_HEADER: [&str; 5] = ["u", "v", "x", "y", "z"];
pub const LOAD_HEADER: [&str; 7] = ["idx", "fx", "fy", "fz", "cx", "cy", "cz"];

/// Largest accepted `| |q| - 1 |` of a stored quaternion.
pub const QUATERNION_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    /// `line` is 1-based and counts the header.
    #[error("{source_name}, line {line}: {message}")]
    Schema { source_name: String, line: u64, message: String },
    #[error("{source_name}: {message}")]
    Content { source_name: String, message: String },
}

fn schema(name: &str, line: u64, message: impl Into<String>) -> IoError {
    IoError::Schema { source_name: name.to_string(), line, message: message.into() }
}

fn content(name: &str, message: impl Into<String>) -> IoError {
    IoError::Content { source_name: name.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct FieldRow {
    idx: usize,
    u: f64,
    v: f64,
    mx: f64,
    my: f64,
    mz: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SurfaceRow {
    u: f64,
    v: f64,
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct LoadRow {
    idx: usize,
    fx: f64,
    fy: f64,
    fz: f64,
    cx: f64,
    cy: f64,
    cz: f64,
}

/// Parse all rows, checking the header and reporting the offending line.
fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(reader: R, header: &[&str], name: &str) -> Result<Vec<(u64, T)>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found = rdr.headers().map_err(|e| schema(name, 1, e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(schema(name, 1, format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            schema(name, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: T = rec.deserialize(Some(&found)).map_err(|e| schema(name, line, e.to_string()))?;
        rows.push((line, row));
    }
    Ok(rows)
}

fn finite(name: &str, line: u64, values: &[f64]) -> Result<(), IoError> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(schema(name, line, "non-finite value"))
    }
}

fn coords_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Write a configuration in the field format.
pub fn write_field<W: Write>(writer: W, config: &MidsurfaceConfiguration) -> Result<(), IoError> {
    let name = "field";
    let mut w = csv::Writer::from_writer(writer);
    for k in 0..config.grid.len() {
        let (u, v) = config.grid.coords(k);
        let (m, q) = (config.positions[k], config.rotations[k].quaternion());
        let row = FieldRow { idx: k, u, v, mx: m.x, my: m.y, mz: m.z, qw: q.w, qx: q.i, qy: q.j, qz: q.k };
        w.serialize(row).map_err(|e| content(name, e.to_string()))?;
    }
    w.flush().map_err(|e| content(name, e.to_string()))
}

/// Read a configuration on `grid` from the field format.
pub fn read_field<R: Read>(reader: R, grid: &Grid, name: &str) -> Result<MidsurfaceConfiguration, IoError> {
    let rows: Vec<(u64, FieldRow)> = read_rows(reader, &FIELD_HEADER, name)?;
    if rows.len() != grid.len() {
        return Err(content(name, format!("{} rows for a grid of {} nodes", rows.len(), grid.len())));
    }
    let mut positions = Vec::with_capacity(rows.len());
    let mut rotations = Vec::with_capacity(rows.len());
    for (k, (line, r)) in rows.into_iter().enumerate() {
        finite(name, line, &[r.u, r.v, r.mx, r.my, r.mz, r.qw, r.qx, r.qy, r.qz])?;
        if r.idx != k {
            return Err(schema(name, line, format!("expected idx {k}, found {}", r.idx)));
        }
        let (u, v) = grid.coords(k);
        if !coords_match(u, r.u) || !coords_match(v, r.v) {
            return Err(schema(name, line, format!("node {k} is at (u, v) = ({u}, {v}), file has ({}, {})", r.u, r.v)));
        }
        let q = Quaternion::new(r.qw, r.qx, r.qy, r.qz);
        if (q.norm() - 1.0).abs() > QUATERNION_TOL {
            return Err(schema(name, line, format!("quaternion norm {} is not 1", q.norm())));
        }
        positions.push(Vector3::new(r.mx, r.my, r.mz));
        rotations.push(UnitQuaternion::new_unchecked(q));
    }
    MidsurfaceConfiguration::new(*grid, positions, rotations).map_err(|e| content(name, e.to_string()))
}

/// Read a lattice of surface points; `u` and `v` must form a full uniform
/// lattice listed with `u` varying fastest.
pub fn read_surface<R: Read>(reader: R, name: &str) -> Result<SampledSurface, IoError> {
    let rows: Vec<(u64, SurfaceRow)> = read_rows(reader, &SURFACE_HEADER, name)?;
    for (line, r) in &rows {
        finite(name, *line, &[r.u, r.v, r.x, r.y, r.z])?;
    }
    let first_v = rows.first().map(|r| r.1.v).ok_or_else(|| content(name, "no rows"))?;
    let n_u = rows.iter().take_while(|r| r.1.v == first_v).count();
    if n_u == 0 || rows.len() % n_u != 0 {
        return Err(content(name, format!("{} rows do not form a lattice with {n_u} nodes per row", rows.len())));
    }
    let n_v = rows.len() / n_u;
    let (u0, u1) = (rows[0].1.u, rows[n_u - 1].1.u);
    let (v0, v1) = (first_v, rows[rows.len() - 1].1.v);
    let domain = ParameterDomain::new((u0, u1), (v0, v1)).map_err(|e| content(name, e.to_string()))?;
    for (k, (line, r)) in rows.iter().enumerate() {
        let (i, j) = (k % n_u, k / n_u);
        let u = u0 + (u1 - u0) * i as f64 / (n_u - 1).max(1) as f64;
        let v = v0 + (v1 - v0) * j as f64 / (n_v - 1).max(1) as f64;
        if !coords_match(u, r.u) || !coords_match(v, r.v) {
            return Err(schema(name, *line, format!("expected lattice node (u, v) = ({u}, {v})")));
        }
    }
    let points = rows.iter().map(|(_, r)| Vector3::new(r.x, r.y, r.z)).collect();
    SampledSurface::new(n_u, n_v, domain, points).map_err(|e| content(name, e.to_string()))
}

pub fn write_surface<W: Write>(writer: W, surface: &SampledSurface) -> Result<(), IoError> {
    let name = "surface";
    let grid = Grid::new(surface.n_u, surface.n_v, surface.domain).map_err(|e| content(name, e.to_string()))?;
    let mut w = csv::Writer::from_writer(writer);
    for (k, p) in surface.points.iter().enumerate() {
        let (u, v) = grid.coords(k);
        w.serialize(SurfaceRow { u, v, x: p.x, y: p.y, z: p.z }).map_err(|e| content(name, e.to_string()))?;
    }
    w.flush().map_err(|e| content(name, e.to_string()))
}

/// Read a per-node body force and couple table.
pub fn read_loads<R: Read>(reader: R, nodes: usize, name: &str) -> Result<LoadSpec, IoError> {
    let rows: Vec<(u64, LoadRow)> = read_rows(reader, &LOAD_HEADER, name)?;
    if rows.len() != nodes {
        return Err(content(name, format!("{} rows for a grid of {nodes} nodes", rows.len())));
    }
    let mut loads = LoadSpec::zero(nodes);
    for (k, (line, r)) in rows.into_iter().enumerate() {
        finite(name, line, &[r.fx, r.fy, r.fz, r.cx, r.cy, r.cz])?;
        if r.idx != k {
            return Err(schema(name, line, format!("expected idx {k}, found {}", r.idx)));
        }
        loads.force[k] = Vector3::new(r.fx, r.fy, r.fz);
        loads.couple[k] = Vector3::new(r.cx, r.cy, r.cz);
    }
    Ok(loads)
}

pub fn write_loads<W: Write>(writer: W, loads: &LoadSpec) -> Result<(), IoError> {
    let name = "loads";
    let mut w = csv::Writer::from_writer(writer);
    for (k, (f, c)) in loads.force.iter().zip(&loads.couple).enumerate() {
        let row = LoadRow { idx: k, fx: f.x, fy: f.y, fz: f.z, cx: c.x, cy: c.y, cz: c.z };
        w.serialize(row).map_err(|e| content(name, e.to_string()))?;
    }
    w.flush().map_err(|e| content(name, e.to_string()))
}

pub fn open(path: &Path) -> Result<std::fs::File, IoError> {
    std::fs::File::open(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn create(path: &Path) -> Result<std::fs::File, IoError> {
    std::fs::File::create(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn read_field_file(path: &Path, grid: &Grid) -> Result<MidsurfaceConfiguration, IoError> {
    read_field(open(path)?, grid, &path.display().to_string())
}

pub fn write_field_file(path: &Path, config: &MidsurfaceConfiguration) -> Result<(), IoError> {
    write_field(create(path)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SurfaceChart;
    use crate::kinematics::GridGeometry;
    use crate::sampling::{random_rotation, random_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(4, 3, ParameterDomain::new((0.0, 2.0), (-1.0, 0.5)).unwrap()).unwrap()
    }

    fn random_config(seed: u64) -> MidsurfaceConfiguration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let positions = (0..g.len()).map(|_| random_vector(&mut rng, 3.0)).collect();
        let rotations = (0..g.len()).map(|_| random_rotation(&mut rng).to_quaternion()).collect();
        MidsurfaceConfiguration::new(g, positions, rotations).unwrap()
    }

    #[test]
    fn field_round_trip_is_bit_exact() {
        let c = random_config(4);
        let mut buf = Vec::new();
        write_field(&mut buf, &c).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("idx,u,v,mx,my,mz,qw,qx,qy,qz\n"));
        let back = read_field(buf.as_slice(), &c.grid, "mem").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn field_errors_carry_line_numbers() {
        let c = random_config(5);
        let mut buf = Vec::new();
        write_field(&mut buf, &c).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[3] = lines[3].replacen(',', ",oops", 2);
        let broken = lines.join("\n");
        match read_field(broken.as_bytes(), &c.grid, "mem") {
            Err(IoError::Schema { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let bad_header = text.replacen("qw", "w", 1);
        assert!(matches!(read_field(bad_header.as_bytes(), &c.grid, "mem"), Err(IoError::Schema { line: 1, .. })));
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(matches!(read_field(truncated.as_bytes(), &c.grid, "mem"), Err(IoError::Content { .. })));
    }

    #[test]
    fn non_unit_quaternion_is_rejected() {
        let mut c = random_config(6);
        c.rotations[2] = UnitQuaternion::new_unchecked(Quaternion::new(1.1, 0.0, 0.0, 0.0));
        let mut buf = Vec::new();
        write_field(&mut buf, &c).unwrap();
        match read_field(buf.as_slice(), &c.grid, "mem") {
            Err(IoError::Schema { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn surface_round_trip() {
        let d = ParameterDomain::new((0.0, 1.0), (0.0, 2.0)).unwrap();
        let chart = SurfaceChart::cylinder(1.2, d).unwrap();
        let g = Grid::new(6, 5, d).unwrap();
        let geom = GridGeometry::new(&chart, g).unwrap();
        let s = SampledSurface::new(6, 5, d, geom.positions.clone()).unwrap();
        let mut buf = Vec::new();
        write_surface(&mut buf, &s).unwrap();
        assert_eq!(read_surface(buf.as_slice(), "mem").unwrap(), s);
        let text = String::from_utf8(buf).unwrap();
        let skipped: String = text.lines().enumerate().filter(|(i, _)| *i != 3).map(|(_, l)| format!("{l}\n")).collect();
        assert!(read_surface(skipped.as_bytes(), "mem").is_err());
    }

    #[test]
    fn load_table_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut l = LoadSpec::zero(12);
        for k in 0..12 {
            l.force[k] = random_vector(&mut rng, 1.0);
            l.couple[k] = random_vector(&mut rng, 1.0);
        }
        let mut buf = Vec::new();
        write_loads(&mut buf, &l).unwrap();
        assert_eq!(read_loads(buf.as_slice(), 12, "mem").unwrap(), l);
        assert!(read_loads(buf.as_slice(), 11, "mem").is_err());
    }
}
