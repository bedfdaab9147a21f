use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TriangleMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads an ASCII OFF or OBJ mesh. Polygons are fan-triangulated.
pub fn load_mesh(source: impl BufRead, format: MeshFormat) -> Result<TriangleMesh> {
    let (v, t) = match format {
        MeshFormat::Off => parse_off(source)?,
        MeshFormat::Obj => parse_obj(source)?,
    };
    TriangleMesh::new(v, t)
}

pub fn load_mesh_file(path: &Path) -> Result<TriangleMesh> {
    let fmt = MeshFormat::from_path(path)
        .ok_or_else(|| Error::invalid(format!("unknown mesh extension: {}", path.display())))?;
    let f = std::fs::File::open(path)?;
    load_mesh(std::io::BufReader::new(f), fmt)
}

fn fan(poly: &[usize], out: &mut Vec<[usize; 3]>) {
    for k in 1..poly.len() - 1 {
        out.push([poly[0], poly[k], poly[k + 1]]);
    }
}

fn parse_off(source: impl BufRead) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>)> {
    let mut tokens: Vec<(usize, String)> = Vec::new();
    for (ln, line) in source.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("");
        tokens.extend(body.split_whitespace().map(|s| (ln + 1, s.to_string())));
    }
    let mut it = tokens.into_iter().peekable();
    match it.next() {
        Some((_, h)) if h == "OFF" => {}
        Some((l, h)) => return Err(perr(l, format!("expected OFF header, found {h:?}"))),
        None => return Err(perr(1, "empty file")),
    }
    let mut num = |what: &str| -> Result<(usize, String)> { it.next().ok_or_else(|| perr(0, format!("missing {what}"))) };
    let parse_usize = |(l, s): (usize, String)| s.parse::<usize>().map_err(|_| perr(l, format!("bad integer {s:?}")));
    let parse_f64 = |(l, s): (usize, String)| s.parse::<f64>().map_err(|_| perr(l, format!("bad number {s:?}")));
    let nv = parse_usize(num("vertex count")?)?;
    let nf = parse_usize(num("face count")?)?;
    let _ne = parse_usize(num("edge count")?)?;
    let mut v = Vec::with_capacity(nv);
    for _ in 0..nv {
        v.push([parse_f64(num("coordinate")?)?, parse_f64(num("coordinate")?)?, parse_f64(num("coordinate")?)?]);
    }
    let mut t = Vec::with_capacity(nf);
    for _ in 0..nf {
        let tok = num("face size")?;
        let line = tok.0;
        let k = parse_usize(tok)?;
        if k < 3 {
            return Err(perr(line, format!("face with {k} vertices")));
        }
        let mut poly = Vec::with_capacity(k);
        for _ in 0..k {
            let tok = num("face index")?;
            let l = tok.0;
            let i = parse_usize(tok)?;
            if i >= nv {
                return Err(perr(l, format!("vertex index {i} out of range for {nv} vertices")));
            }
            poly.push(i);
        }
        fan(&poly, &mut t);
    }
    Ok((v, t))
}

fn parse_obj(source: impl BufRead) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>)> {
    let mut v = Vec::new();
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();
    for (ln, line) in source.lines().enumerate() {
        let line = line?;
        let mut it = line.split('#').next().unwrap_or("").split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>().map_err(|_| perr(ln + 1, format!("bad coordinate {s:?}"))))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(perr(ln + 1, "vertex needs three coordinates"));
                }
                v.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<i64> = it
                    .map(|s| {
                        let head = s.split('/').next().unwrap_or("");
                        head.parse::<i64>().map_err(|_| perr(ln + 1, format!("bad face index {s:?}")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(perr(ln + 1, "face needs at least three vertices"));
                }
                faces.push((ln + 1, idx));
            }
            _ => {}
        }
    }
    let nv = v.len() as i64;
    let mut t = Vec::new();
    for (ln, idx) in faces {
        let poly: Vec<usize> = idx
            .iter()
            .map(|&i| {
                let r = if i > 0 { i - 1 } else { nv + i };
                if i == 0 || r < 0 || r >= nv {
                    Err(perr(ln, format!("vertex index {i} out of range for {nv} vertices")))
                } else {
                    Ok(r as usize)
                }
            })
            .collect::<Result<_>>()?;
        fan(&poly, &mut t);
    }
    Ok((v, t))
}

/// Writes an ASCII OFF file with 17 significant digits per coordinate.
pub fn write_off(mesh: &TriangleMesh, mut out: impl Write) -> Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} {}", mesh.n_vertices(), mesh.n_triangles(), mesh.edges().len())?;
    for p in mesh.vertices() {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}
