//! Wavefront OBJ subset (`v`, `f`, `l`, `p`) and a plain tet-mesh format.
//!
//! Coordinates are written with the shortest representation that parses
//! back to the same `f64`, so a write/read round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::SimMesh;

/// Indexed geometry with zero-based indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub lines: Vec<[usize; 2]>,
    pub points: Vec<usize>,
}

fn parse_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: {msg}"),
    }
}

fn parse_index(tok: &str, n: usize, path: &Path, line: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad index `{tok}`")))?;
    let idx = if i > 0 {
        i - 1
    } else if i < 0 {
        n as i64 + i
    } else {
        -1
    };
    if idx < 0 || idx as usize >= n {
        return Err(parse_err(path, line, format!("index {i} out of range")));
    }
    Ok(idx as usize)
}

fn parse_coords(toks: &[&str], path: &Path, line: usize) -> Result<Vec3> {
    if toks.len() < 3 {
        return Err(parse_err(path, line, "expected three coordinates"));
    }
    let mut c = [0.0; 3];
    for k in 0..3 {
        c[k] = toks[k]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad number `{}`", toks[k])))?;
    }
    Ok(Vec3::new(c[0], c[1], c[2]))
}

/// Parse OBJ text. Polygons are fan-triangulated and polylines split into
/// segments; other records are ignored.
pub fn parse_obj(text: &str, path: &Path) -> Result<ObjMesh> {
    let mut m = ObjMesh::default();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        let Some(tag) = it.next() else { continue };
        let toks: Vec<&str> = it.collect();
        match tag {
            "v" => m.vertices.push(parse_coords(&toks, path, ln)?),
            "f" => {
                let n = m.vertices.len();
                let idx = toks
                    .iter()
                    .map(|t| parse_index(t, n, path, ln))
                    .collect::<Result<Vec<_>>>()?;
                if idx.len() < 3 {
                    return Err(parse_err(path, ln, "face needs at least three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    m.faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            "l" => {
                let n = m.vertices.len();
                let idx = toks
                    .iter()
                    .map(|t| parse_index(t, n, path, ln))
                    .collect::<Result<Vec<_>>>()?;
                if idx.len() < 2 {
                    return Err(parse_err(path, ln, "line needs at least two vertices"));
                }
                for w in idx.windows(2) {
                    m.lines.push([w[0], w[1]]);
                }
            }
            "p" => {
                let n = m.vertices.len();
                for t in &toks {
                    m.points.push(parse_index(t, n, path, ln)?);
                }
            }
            _ => {}
        }
    }
    Ok(m)
}

pub fn read_obj(path: &Path) -> Result<ObjMesh> {
    if !path.exists() {
        return Err(Error::MissingMesh(path.to_path_buf()));
    }
    parse_obj(&fs::read_to_string(path)?, path)
}

pub fn format_obj(m: &ObjMesh) -> String {
    let mut s = String::new();
    for v in &m.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in &m.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    for l in &m.lines {
        let _ = writeln!(s, "l {} {}", l[0] + 1, l[1] + 1);
    }
    for p in &m.points {
        let _ = writeln!(s, "p {}", p + 1);
    }
    s
}

pub fn write_obj(path: &Path, m: &ObjMesh) -> Result<()> {
    fs::write(path, format_obj(m))?;
    Ok(())
}

/// Tet mesh text: `v x y z` vertex lines and `t a b c d` one-based tets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TetMesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
}

pub fn parse_tet(text: &str, path: &Path) -> Result<TetMesh> {
    let mut m = TetMesh::default();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        let Some(tag) = it.next() else { continue };
        let toks: Vec<&str> = it.collect();
        match tag {
            "v" => m.vertices.push(parse_coords(&toks, path, ln)?),
            "t" => {
                if toks.len() != 4 {
                    return Err(parse_err(path, ln, "tet needs four vertices"));
                }
                let n = m.vertices.len();
                let mut t = [0; 4];
                for k in 0..4 {
                    t[k] = parse_index(toks[k], n, path, ln)?;
                }
                m.tets.push(t);
            }
            other => return Err(parse_err(path, ln, format!("unknown record `{other}`"))),
        }
    }
    Ok(m)
}

pub fn read_tet(path: &Path) -> Result<TetMesh> {
    if !path.exists() {
        return Err(Error::MissingMesh(path.to_path_buf()));
    }
    parse_tet(&fs::read_to_string(path)?, path)
}

pub fn format_tet(m: &TetMesh) -> String {
    let mut s = String::new();
    for v in &m.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &m.tets {
        let _ = writeln!(s, "t {} {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1);
    }
    s
}

/// Surface geometry of the whole scene at positions `x`: shell and
/// obstacle faces, tet boundaries, rod segments and particles.
pub fn frame_mesh(mesh: &SimMesh, x: &[Vec3]) -> ObjMesh {
    let mut m = ObjMesh {
        vertices: x.to_vec(),
        ..Default::default()
    };
    for o in &mesh.objects {
        m.faces.extend_from_slice(&o.faces);
        m.lines.extend_from_slice(&o.lines);
        m.points.extend_from_slice(&o.points);
    }
    m
}
