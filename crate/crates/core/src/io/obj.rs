use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::mesh::{GarmentPiece, TriMesh};
use crate::Vec3;

use super::IoError;

/// Triangles and vertex positions read from an OBJ file, with one piece per
/// `o` record.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjMesh {
    pub positions: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub pieces: Vec<GarmentPiece>,
}

impl ObjMesh {
    /// Builds the mesh topology, keeping the piece table when there is one.
    pub fn into_trimesh(self, density: f64) -> Result<(TriMesh, Vec<Vec3>), IoError> {
        let mut mesh = TriMesh::build(&self.positions, self.faces, density)?;
        if !self.pieces.is_empty() {
            mesh = mesh.with_pieces(self.pieces)?;
        }
        Ok((mesh, self.positions))
    }
}

fn parse_index(token: &str, vertex_count: usize, line: usize) -> Result<usize, IoError> {
    let head = token.split('/').next().unwrap_or("");
    let raw: i64 = head.parse().map_err(|_| IoError::Parse {
        line,
        message: format!("bad vertex index '{token}'"),
    })?;
    let index = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        vertex_count as i64 + raw
    } else {
        -1
    };
    if index < 0 || index as usize >= vertex_count {
        return Err(IoError::Parse {
            line,
            message: format!("vertex index {raw} out of range ({vertex_count} vertices so far)"),
        });
    }
    Ok(index as usize)
}

/// Parses the `v`, `f` and `o` records of an OBJ document. Polygons are fanned
/// from their first corner; `vn`, `vt` and other records are skipped with a
/// warning.
pub fn parse_obj(text: &str) -> Result<ObjMesh, IoError> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    let mut starts: Vec<(String, usize, usize)> = Vec::new();
    let mut warned = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| IoError::Parse {
                        line,
                        message: format!("bad coordinate: {e}"),
                    })?;
                if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
                    return Err(IoError::Parse {
                        line,
                        message: "vertex needs three finite coordinates".into(),
                    });
                }
                positions.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let corners: Vec<usize> = tokens
                    .map(|t| parse_index(t, positions.len(), line))
                    .collect::<Result<_, _>>()?;
                if corners.len() < 3 {
                    return Err(IoError::NonTriangulableFace {
                        line,
                        corners: corners.len(),
                    });
                }
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            "o" => {
                let name = content[1..].trim();
                starts.push((name.to_string(), positions.len(), faces.len()));
            }
            _ => {
                if !warned {
                    log::warn!("line {line}: ignoring unsupported OBJ record '{tag}'");
                    warned = true;
                }
            }
        }
    }
    let mut pieces = Vec::new();
    if !starts.is_empty() {
        if starts[0].1 != 0 || starts[0].2 != 0 {
            starts.insert(0, ("garment".into(), 0, 0));
        }
        for (k, (label, v, f)) in starts.iter().enumerate() {
            let (v_end, f_end) = starts.get(k + 1).map_or((positions.len(), faces.len()), |s| (s.1, s.2));
            pieces.push(GarmentPiece {
                label: label.clone(),
                vertices: *v..v_end,
                faces: *f..f_end,
            });
        }
    }
    Ok(ObjMesh {
        positions,
        faces,
        pieces,
    })
}

pub fn read_obj(path: &Path) -> Result<ObjMesh, IoError> {
    let text = fs::read_to_string(path).map_err(IoError::at(path))?;
    parse_obj(&text)
}

/// OBJ text with coordinates in shortest round-trip form; pieces become `o`
/// records.
pub fn write_obj_to(positions: &[Vec3], faces: &[[usize; 3]], pieces: &[GarmentPiece]) -> String {
    let mut out = String::new();
    let mut piece_at_vertex: Vec<(usize, &str)> = pieces.iter().map(|p| (p.vertices.start, p.label.as_str())).collect();
    piece_at_vertex.sort();
    let mut next_piece = piece_at_vertex.iter().peekable();
    let mut face_cursor = 0;
    let emit_faces = |out: &mut String, until: usize, cursor: &mut usize| {
        while *cursor < until {
            let f = faces[*cursor];
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
            *cursor += 1;
        }
    };
    for (i, p) in positions.iter().enumerate() {
        while let Some((start, label)) = next_piece.peek() {
            if *start != i {
                break;
            }
            let face_start = pieces.iter().find(|q| q.vertices.start == i).map_or(0, |q| q.faces.start);
            emit_faces(&mut out, face_start, &mut face_cursor);
            let _ = writeln!(out, "o {label}");
            next_piece.next();
        }
        let _ = writeln!(out, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    emit_faces(&mut out, faces.len(), &mut face_cursor);
    out
}

pub fn write_obj(path: &Path, positions: &[Vec3], faces: &[[usize; 3]], pieces: &[GarmentPiece]) -> Result<(), IoError> {
    fs::write(path, write_obj_to(positions, faces, pieces)).map_err(IoError::at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_triangle() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(m.positions.len(), 3);
        assert_eq!(m.faces, vec![[0, 1, 2]]);
        assert!(m.pieces.is_empty());
    }

    #[test]
    fn quad_is_fanned() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_obj("v 0 0 0\nv 1 0 0\nf 1 2 9\n") {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_obj("v 0 0 0\nv 1 0 0\n\nf 1 2\n") {
            Err(IoError::NonTriangulableFace { line, corners }) => assert_eq!((line, corners), (4, 2)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_obj("v 0 zero 0\n"), Err(IoError::Parse { line: 1, .. })));
    }

    #[test]
    fn pieces_follow_object_records() {
        let text = "o a\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\no b\nv 0 0 1\nv 1 0 1\nv 0 1 1\nf 4 5 6\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.pieces.len(), 2);
        assert_eq!(m.pieces[1].vertices, 3..6);
        assert_eq!(m.pieces[1].faces, 1..2);
        let again = parse_obj(&write_obj_to(&m.positions, &m.faces, &m.pieces)).unwrap();
        assert_eq!(again, m);
    }
}
