//! File formats: legacy VTK ASCII meshes, polygon text and CSV tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use insulopt_core::geometry::{ConvexPolygon, Mesh, Vec2};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Legacy VTK unstructured grid of triangles with scalar point data.
pub fn vtk_string(mesh: &Mesh, fields: &[(&str, &[f64])]) -> String {
    let n = mesh.num_nodes();
    let tris = mesh.triangles();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\ninsulopt\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {} 0", fmt_f64(p.x), fmt_f64(p.y));
    }
    let _ = writeln!(s, "CELLS {} {}", tris.len(), 4 * tris.len());
    for t in tris {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", tris.len());
    for _ in tris {
        s.push_str("5\n");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n}");
        for (name, vals) in fields {
            assert_eq!(vals.len(), n, "field `{name}` has the wrong length");
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in vals.iter() {
                s.push_str(&fmt_f64(*v));
                s.push('\n');
            }
        }
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &Mesh, fields: &[(&str, &[f64])]) -> Result<String, CliError> {
    let s = vtk_string(mesh, fields);
    fs::write(path, &s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VtkData {
    pub points: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub fields: Vec<(String, Vec<f64>)>,
}

/// Reads back what [`vtk_string`] writes.
pub fn parse_vtk(text: &str) -> Result<VtkData, CliError> {
    let bad = |m: &str| CliError::BadInput(format!("vtk: {m}"));
    let mut lines = text.lines();
    if lines.next() != Some("# vtk DataFile Version 3.0") {
        return Err(bad("missing header"));
    }
    lines.next();
    if lines.next() != Some("ASCII") || lines.next() != Some("DATASET UNSTRUCTURED_GRID") {
        return Err(bad("not an ASCII unstructured grid"));
    }
    let next_count = |lines: &mut std::str::Lines, key: &str| -> Result<usize, CliError> {
        let l = lines.next().ok_or_else(|| bad("truncated"))?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(bad(&format!("expected {key}")));
        }
        it.next().and_then(|c| c.parse().ok()).ok_or_else(|| bad("bad count"))
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
    let n = next_count(&mut lines, "POINTS")?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let l = lines.next().ok_or_else(|| bad("truncated points"))?;
        let v: Vec<&str> = l.split_whitespace().collect();
        if v.len() != 3 {
            return Err(bad("point needs three coordinates"));
        }
        points.push(Vec2::new(num(v[0])?, num(v[1])?));
    }
    let nt = next_count(&mut lines, "CELLS")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let l = lines.next().ok_or_else(|| bad("truncated cells"))?;
        let v: Vec<usize> = l
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| bad("bad index")))
            .collect::<Result<_, _>>()?;
        if v.len() != 4 || v[0] != 3 || v[1..].iter().any(|&i| i >= n) {
            return Err(bad("cell is not a valid triangle"));
        }
        triangles.push([v[1], v[2], v[3]]);
    }
    if next_count(&mut lines, "CELL_TYPES")? != nt {
        return Err(bad("cell type count"));
    }
    for _ in 0..nt {
        if lines.next().map(str::trim) != Some("5") {
            return Err(bad("cell type must be 5"));
        }
    }
    let mut fields = Vec::new();
    if let Some(l) = lines.next() {
        if l.split_whitespace().collect::<Vec<_>>() != ["POINT_DATA", &n.to_string()] {
            return Err(bad("expected POINT_DATA"));
        }
        while let Some(l) = lines.next() {
            let v: Vec<&str> = l.split_whitespace().collect();
            if v.len() != 4 || v[0] != "SCALARS" {
                return Err(bad("expected SCALARS"));
            }
            if lines.next() != Some("LOOKUP_TABLE default") {
                return Err(bad("expected LOOKUP_TABLE"));
            }
            let vals = (0..n)
                .map(|_| num(lines.next().ok_or_else(|| bad("truncated field"))?.trim()))
                .collect::<Result<Vec<f64>, _>>()?;
            fields.push((v[1].to_string(), vals));
        }
    }
    Ok(VtkData {
        points,
        triangles,
        fields,
    })
}

pub fn polygon_string(vertices: &[Vec2]) -> String {
    let mut s = String::new();
    for p in vertices {
        let _ = writeln!(s, "{} {}", fmt_f64(p.x), fmt_f64(p.y));
    }
    s
}

/// One `x y` pair per line, counter-clockwise; `#` comments and blank lines
/// are ignored. The polygon must be strictly convex.
pub fn parse_polygon(text: &str) -> Result<ConvexPolygon, CliError> {
    let mut pts = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::BadInput(format!("polygon line {}: cannot parse `{line}`", no + 1)))?;
        if v.len() != 2 || !v.iter().all(|x| x.is_finite()) {
            return Err(CliError::BadInput(format!("polygon line {}: expected `x y`", no + 1)));
        }
        pts.push(Vec2::new(v[0], v[1]));
    }
    ConvexPolygon::new(pts).map_err(|e| CliError::BadInput(format!("polygon: {e}")))
}

pub fn read_polygon(path: &Path) -> Result<ConvexPolygon, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    parse_polygon(&text)
}

/// Writes an RFC 4180 table.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Header and rows of a CSV file.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

/// Nodal field from values in boundary order, zero in the interior.
pub fn boundary_to_nodal(mesh: &Mesh, values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.num_nodes()];
    for (&i, &v) in mesh.boundary().iter().zip(values) {
        out[i] = v;
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let probe = dir.join(".insulopt-write-test");
    fs::write(&probe, b"")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| CliError::Io(format!("{} is not writable: {e}", dir.display())))
}
