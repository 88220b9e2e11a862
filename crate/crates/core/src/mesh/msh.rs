//! Gmsh MSH 2.2 ASCII reader and writer (tetrahedra plus tagged boundary triangles).

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use super::{sorted3, FaceTag, Mesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    /// ASCII MSH 2.2: `$MeshFormat 2.2 0 8`, `$Nodes`, `$Elements`.
    Msh22,
}

const TRI: u32 = 2;
const TET: u32 = 4;

fn boundary_tag(id: i64) -> Option<FaceTag> {
    match id {
        1 => Some(FaceTag::Pec),
        2 => Some(FaceTag::AbcTop),
        3 => Some(FaceTag::AbcBottom),
        _ => None,
    }
}

fn tag_id(tag: FaceTag) -> Option<u32> {
    match tag {
        FaceTag::Pec => Some(1),
        FaceTag::AbcTop => Some(2),
        FaceTag::AbcBottom => Some(3),
        _ => None,
    }
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Option<String>> {
        loop {
            match self.inner.next() {
                None => return Ok(None),
                Some(Err(e)) => return Err(self.err(format!("read failed: {e}"))),
                Some(Ok(s)) => {
                    self.line += 1;
                    let t = s.trim();
                    if !t.is_empty() {
                        return Ok(Some(t.to_string()));
                    }
                }
            }
        }
    }

    fn expect_line(&mut self, what: &str) -> Result<String> {
        self.next()?
            .ok_or_else(|| self.err(format!("unexpected end of input, expected {what}")))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn fields<T: std::str::FromStr>(&self, s: &str) -> Result<Vec<T>> {
        s.split_whitespace()
            .map(|w| w.parse::<T>().map_err(|_| self.err(format!("invalid number '{w}'"))))
            .collect()
    }
}

/// Read a mesh from `source`.
pub fn load_mesh<R: Read>(source: R, format: MeshFormat) -> Result<Mesh> {
    match format {
        MeshFormat::Msh22 => parse_msh22(source),
    }
}

fn parse_msh22<R: Read>(source: R) -> Result<Mesh> {
    let mut lines = Lines {
        inner: BufReader::new(source).lines(),
        line: 0,
    };
    let mut node_index: HashMap<i64, usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut tets = Vec::new();
    let mut materials = Vec::new();
    let mut tri_tags: Vec<([i64; 3], FaceTag)> = Vec::new();
    let mut saw_format = false;

    while let Some(section) = lines.next()? {
        match section.as_str() {
            "$MeshFormat" => {
                let l = lines.expect_line("format line")?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() < 3 || !f[0].starts_with("2.2") || f[1] != "0" {
                    return Err(lines.err(format!("unsupported mesh format '{l}'")));
                }
                saw_format = true;
            }
            "$Nodes" => {
                let n: usize = lines
                    .expect_line("node count")?
                    .parse()
                    .map_err(|_| lines.err("invalid node count"))?;
                for _ in 0..n {
                    let l = lines.expect_line("node")?;
                    let v: Vec<f64> = lines.fields(&l)?;
                    if v.len() != 4 {
                        return Err(lines.err("node line needs id x y z"));
                    }
                    if node_index.insert(v[0] as i64, vertices.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {}", v[0])));
                    }
                    vertices.push([v[1], v[2], v[3]]);
                }
            }
            "$Elements" => {
                let n: usize = lines
                    .expect_line("element count")?
                    .parse()
                    .map_err(|_| lines.err("invalid element count"))?;
                for _ in 0..n {
                    let l = lines.expect_line("element")?;
                    let v: Vec<i64> = lines.fields(&l)?;
                    if v.len() < 3 {
                        return Err(lines.err("truncated element line"));
                    }
                    let (etype, ntags) = (v[1] as u32, v[2] as usize);
                    let nodes = &v[(3 + ntags).min(v.len())..];
                    let first_tag = if ntags > 0 { v.get(3).copied() } else { None };
                    let lookup = |id: i64| {
                        node_index
                            .get(&id)
                            .copied()
                            .ok_or_else(|| lines.err(format!("element {} references unknown node {id}", v[0])))
                    };
                    match etype {
                        TET => {
                            if nodes.len() != 4 {
                                return Err(lines.err(format!("element {} needs 4 nodes", v[0])));
                            }
                            let mat = first_tag.unwrap_or(0);
                            if mat < 0 {
                                return Err(lines.err(format!("element {} has negative material", v[0])));
                            }
                            tets.push([lookup(nodes[0])?, lookup(nodes[1])?, lookup(nodes[2])?, lookup(nodes[3])?]);
                            materials.push(mat as u32);
                        }
                        TRI => {
                            if nodes.len() != 3 {
                                return Err(lines.err(format!("element {} needs 3 nodes", v[0])));
                            }
                            let tag = first_tag.and_then(boundary_tag).ok_or_else(|| {
                                lines.err(format!("triangle {} has unknown boundary tag {:?}", v[0], first_tag))
                            })?;
                            tri_tags.push(([nodes[0], nodes[1], nodes[2]], tag));
                        }
                        // points and lines carry no information for the solver
                        1 | 15 => {}
                        other => {
                            return Err(lines.err(format!("unsupported element type {other}")));
                        }
                    }
                }
            }
            s if s.starts_with("$End") => {}
            s if s.starts_with('$') => {
                // skip unknown sections
                let end = format!("$End{}", &s[1..]);
                loop {
                    let l = lines.expect_line(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected line '{other}'"))),
        }
    }
    if !saw_format {
        return Err(Error::Parse {
            line: lines.line,
            msg: "missing $MeshFormat section".into(),
        });
    }

    let mut tags = HashMap::new();
    for (ids, tag) in tri_tags {
        let mut key = [0; 3];
        for (i, id) in ids.iter().enumerate() {
            key[i] = *node_index.get(id).ok_or_else(|| Error::Parse {
                line: lines.line,
                msg: format!("boundary triangle references unknown node {id}"),
            })?;
        }
        tags.insert(sorted3(key), tag);
    }
    Mesh::from_parts(vertices, tets, materials, &tags)
}

/// Write `mesh` as MSH 2.2 ASCII. Periodic faces are left untagged.
pub fn write_msh<W: Write>(mesh: &Mesh, mut out: W) -> std::io::Result<()> {
    writeln!(out, "$MeshFormat\n2.2 0 8\n$EndMeshFormat")?;
    writeln!(out, "$Nodes\n{}", mesh.vertices.len())?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        writeln!(out, "{} {:.17e} {:.17e} {:.17e}", i + 1, v[0], v[1], v[2])?;
    }
    writeln!(out, "$EndNodes")?;
    let mut boundary = Vec::new();
    for k in 0..mesh.n_elements() {
        for f in 0..4 {
            if let Some(id) = tag_id(mesh.face_tags[k][f]) {
                boundary.push((mesh.face_vertices(k, f), id));
            }
        }
    }
    writeln!(out, "$Elements\n{}", boundary.len() + mesh.n_elements())?;
    let mut id = 1;
    for (fv, tag) in &boundary {
        writeln!(out, "{id} {TRI} 2 {tag} {tag} {} {} {}", fv[0] + 1, fv[1] + 1, fv[2] + 1)?;
        id += 1;
    }
    for (t, m) in mesh.tets.iter().zip(&mesh.material) {
        writeln!(out, "{id} {TET} 2 {m} {m} {} {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1)?;
        id += 1;
    }
    writeln!(out, "$EndElements")
}
