//! ASCII OFF and OBJ surface files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use graphnet_core::mesh::{MeshError, TriangleMesh};
use graphnet_core::Real;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: vertex index {index} out of range for {vertices} vertices")]
    IndexOutOfRange { line: usize, index: i64, vertices: usize },
    #[error("line {line}: face with {sides} vertices cannot be triangulated")]
    BadFace { line: usize, sides: usize },
    #[error("unknown mesh format for {0} (expected .off or .obj)")]
    UnknownFormat(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, MeshIoError> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "off" => Ok(Self::Off),
            Some(e) if e == "obj" => Ok(Self::Obj),
            _ => Err(MeshIoError::UnknownFormat(path.display().to_string())),
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse { line, msg: msg.into() }
}

fn parse_real(tok: Option<&str>, line: usize) -> Result<Real, MeshIoError> {
    let t = tok.ok_or_else(|| parse_err(line, "missing coordinate"))?;
    let v: Real = t.parse().map_err(|_| parse_err(line, format!("bad number {t:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite coordinate {t:?}")));
    }
    Ok(v)
}

/// Splits a polygon into a triangle fan; faces repeating a vertex are
/// rejected.
fn fan(line: usize, poly: &[usize], faces: &mut Vec<[usize; 3]>) -> Result<(), MeshIoError> {
    if poly.len() < 3 {
        return Err(MeshIoError::BadFace { line, sides: poly.len() });
    }
    for k in 1..poly.len() - 1 {
        let f = [poly[0], poly[k], poly[k + 1]];
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(parse_err(line, "degenerate face"));
        }
        faces.push(f);
    }
    Ok(())
}

/// Parses an OFF document. Lines may carry `#` comments; the counts line may
/// share the header line.
pub fn parse_off(text: &str) -> Result<TriangleMesh, MeshIoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let rest = header.strip_prefix("OFF").ok_or_else(|| parse_err(hl, "missing OFF header"))?.trim();
    let (cl, counts) = if rest.is_empty() { lines.next().ok_or_else(|| parse_err(hl, "missing counts line"))? } else { (hl, rest) };
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(cl, format!("bad count {t:?}"))))
        .collect::<Result<_, _>>()?;
    if nums.len() < 2 {
        return Err(parse_err(cl, "expected vertex and face counts"));
    }
    let (nv, nf) = (nums[0], nums[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(cl, format!("expected {nv} vertices")))?;
        let mut it = l.split_whitespace();
        vertices.push([parse_real(it.next(), ln)?, parse_real(it.next(), ln)?, parse_real(it.next(), ln)?]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(cl, format!("expected {nf} faces")))?;
        let mut it = l.split_whitespace();
        let k: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad face vertex count"))?;
        let mut poly = Vec::with_capacity(k);
        for _ in 0..k {
            let t = it.next().ok_or_else(|| parse_err(ln, "face has fewer indices than declared"))?;
            let idx: i64 = t.parse().map_err(|_| parse_err(ln, format!("bad index {t:?}")))?;
            if idx < 0 || idx as usize >= nv {
                return Err(MeshIoError::IndexOutOfRange { line: ln, index: idx, vertices: nv });
            }
            poly.push(idx as usize);
        }
        fan(ln, &poly, &mut faces)?;
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "unexpected data after the last face"));
    }
    Ok(TriangleMesh::new(vertices, faces)?)
}

/// Parses `v` and `f` records of an OBJ document. Face entries may use the
/// `v/vt/vn` form; only the vertex index is read. Indices are 1-based;
/// relative (negative) indices are rejected.
pub fn parse_obj(text: &str) -> Result<TriangleMesh, MeshIoError> {
    let mut vertices = Vec::new();
    let mut polys: Vec<(usize, Vec<i64>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut it = l.split_whitespace();
        match it.next() {
            Some("v") => vertices.push([parse_real(it.next(), ln)?, parse_real(it.next(), ln)?, parse_real(it.next(), ln)?]),
            Some("f") => {
                let idx = it
                    .map(|t| {
                        let v = t.split('/').next().unwrap_or("");
                        v.parse::<i64>().map_err(|_| parse_err(ln, format!("bad face index {t:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                polys.push((ln, idx));
            }
            _ => {}
        }
    }
    let nv = vertices.len();
    let mut faces = Vec::new();
    for (ln, idx) in polys {
        let mut poly = Vec::with_capacity(idx.len());
        for &k in &idx {
            if k < 1 || k as usize > nv {
                return Err(MeshIoError::IndexOutOfRange { line: ln, index: k, vertices: nv });
            }
            poly.push(k as usize - 1);
        }
        fan(ln, &poly, &mut faces)?;
    }
    Ok(TriangleMesh::new(vertices, faces)?)
}

/// Coordinates use the shortest representation that parses back to the
/// same value.
pub fn format_off(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.num_vertices(), mesh.faces().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn format_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {:?} {:?} {:?}", v[0], v[1], v[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriangleMesh, MeshIoError> {
    let text = fs::read_to_string(path).map_err(|source| MeshIoError::Io { path: path.display().to_string(), source })?;
    match format {
        MeshFormat::Off => parse_off(&text),
        MeshFormat::Obj => parse_obj(&text),
    }
}

pub fn save_mesh(path: &Path, mesh: &TriangleMesh, format: MeshFormat) -> Result<(), MeshIoError> {
    let text = match format {
        MeshFormat::Off => format_off(mesh),
        MeshFormat::Obj => format_obj(mesh),
    };
    fs::write(path, text).map_err(|source| MeshIoError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn off_single_triangle() {
        let m = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2").unwrap();
        assert_eq!(m.num_vertices(), 3);
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn off_comments_and_inline_counts() {
        let m = parse_off("# made by hand\nOFF 4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0 # last\n4 0 1 2 3\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        let m = parse_off("OFF\n2 0 0\n0 0 0\n1 1 1\n").unwrap();
        assert!(m.faces().is_empty());
    }

    #[test]
    fn off_errors_name_lines() {
        let e = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7").unwrap_err();
        assert!(matches!(e, MeshIoError::IndexOutOfRange { line: 6, index: 7, vertices: 3 }), "{e}");
        let e = parse_off("OFF\n3 1 0\n0 0 0\n1 x 0\n0 1 0\n3 0 1 2").unwrap_err();
        assert!(matches!(e, MeshIoError::Parse { line: 4, .. }), "{e}");
        assert!(parse_off("PLY\n").is_err());
        assert!(parse_off("OFF\n3 2 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2").is_err());
        assert!(matches!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n2 0 1").unwrap_err(), MeshIoError::BadFace { .. }));
    }

    #[test]
    fn obj_quad_is_fanned() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nf 1/1/1 2/1/1 3/1/1 4/1/1\n").unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_index_errors() {
        let e = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 9\n").unwrap_err();
        assert!(matches!(e, MeshIoError::IndexOutOfRange { line: 5, index: 9, vertices: 4 }), "{e}");
        assert!(e.to_string().starts_with("line 5"));
        let e = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nf -3 -2 -1\n").unwrap_err();
        assert!(matches!(e, MeshIoError::IndexOutOfRange { index: -3, .. }));
        assert!(matches!(parse_obj("v 0 0 0\nv 1 0 0\nf 1 2\n").unwrap_err(), MeshIoError::BadFace { line: 3, sides: 2 }));
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let v = vec![[0.1, -2.5e-7, 3.0], [1.0 / 3.0, 1e300, -0.0], [7.0, 8.0, 9.123456789012345]];
        let m = TriangleMesh::new(v, vec![[0, 1, 2]]).unwrap();
        assert_eq!(parse_off(&format_off(&m)).unwrap(), m);
        assert_eq!(parse_obj(&format_obj(&m)).unwrap(), m);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(MeshFormat::from_path(Path::new("a/b.OFF")).unwrap(), MeshFormat::Off);
        assert_eq!(MeshFormat::from_path(Path::new("x.obj")).unwrap(), MeshFormat::Obj);
        assert!(MeshFormat::from_path(Path::new("x.stl")).is_err());
    }
}
