//! Minimal Wavefront OBJ reader/writer: `v` and `f` records only.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use glam::DVec3;
use thiserror::Error;

use super::{GeometryError, TriangleMesh};

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: vertex index {index} out of range ({count} vertices defined)")]
    IndexOutOfRange { line: usize, index: i64, count: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A parsed OBJ file plus a count of every record kind that was skipped.
#[derive(Debug)]
pub struct ParsedObj {
    pub mesh: TriangleMesh,
    pub ignored: BTreeMap<String, usize>,
}

impl ParsedObj {
    pub fn warnings(&self) -> impl Iterator<Item = String> + '_ {
        self.ignored
            .iter()
            .map(|(kind, n)| format!("ignored {n} `{kind}` record(s)"))
    }
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<ParsedObj, ObjError> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|source| ObjError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_obj(&src)
}

pub fn parse_obj(src: &str) -> Result<ParsedObj, ObjError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut ignored = BTreeMap::new();

    for (n, raw) in src.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        let Some(kind) = tokens.next() else { continue };
        match kind {
            "v" => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let tok = tokens.next().ok_or_else(|| ObjError::Malformed {
                        line,
                        message: "vertex needs three coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| ObjError::Malformed {
                        line,
                        message: format!("bad coordinate `{tok}`"),
                    })?;
                }
                // an optional fourth (w) component is allowed and ignored
                vertices.push(DVec3::from_array(xyz));
            }
            "f" => {
                let mut face = Vec::with_capacity(4);
                for tok in tokens {
                    let head = tok.split('/').next().unwrap_or("");
                    let index: i64 = head.parse().map_err(|_| ObjError::Malformed {
                        line,
                        message: format!("bad face index `{tok}`"),
                    })?;
                    let count = vertices.len();
                    let resolved = match index {
                        i if i > 0 && (i as usize) <= count => i as usize - 1,
                        i if i < 0 && i.unsigned_abs() as usize <= count => count - i.unsigned_abs() as usize,
                        _ => return Err(ObjError::IndexOutOfRange { line, index, count }),
                    };
                    face.push(resolved as u32);
                }
                if face.len() < 3 {
                    return Err(ObjError::Malformed {
                        line,
                        message: format!("face has {} vertices, need at least 3", face.len()),
                    });
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            other => *ignored.entry(other.to_string()).or_insert(0) += 1,
        }
    }

    Ok(ParsedObj {
        mesh: TriangleMesh::new(vertices, triangles)?,
        ignored,
    })
}

pub fn write_obj(mesh: &TriangleMesh, mut out: impl Write) -> io::Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}
