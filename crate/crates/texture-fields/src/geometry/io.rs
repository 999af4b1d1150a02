//! Mesh file readers and writers.
//!
//! OBJ: the extended vertex-color variant, `v x y z [r g b]`. PLY: ascii
//! with optional per-vertex `red green blue` properties (uchar 0-255 or
//! float 0-1). Vertices without colors default to mid-gray. Polygons are
//! fan-triangulated on load.

use super::mesh::{Mesh, DEFAULT_GRAY};
use super::vec::vec3;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match ext.as_deref() {
        Some("obj") => parse_obj(path, &text),
        Some("ply") => parse_ply(path, &text),
        _ => Err(Error::Config(format!(
            "unsupported mesh format: {}",
            path.display()
        ))),
    }
}

fn parse_floats(path: &Path, lineno: usize, tokens: &[&str]) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse(path, lineno, format!("bad number `{t}`")))
        })
        .collect()
}

fn push_face(
    path: &Path,
    lineno: usize,
    faces: &mut Vec<[usize; 3]>,
    indices: &[usize],
    vertex_count: usize,
) -> Result<()> {
    if indices.len() < 3 {
        return Err(Error::parse(path, lineno, "face with fewer than 3 vertices"));
    }
    for &i in indices {
        if i >= vertex_count {
            return Err(Error::parse(
                path,
                lineno,
                format!("face index {i} out of range (mesh has {vertex_count} vertices)"),
            ));
        }
    }
    for k in 1..indices.len() - 1 {
        faces.push([indices[0], indices[k], indices[k + 1]]);
    }
    Ok(())
}

pub fn parse_obj(path: &Path, text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut colors = Vec::new();
    let mut faces = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let rest: Vec<&str> = tokens.collect();
                let vals = parse_floats(path, lineno, &rest)?;
                match vals.len() {
                    3 => {
                        vertices.push(vec3(vals[0], vals[1], vals[2]));
                        colors.push(DEFAULT_GRAY);
                    }
                    6 => {
                        vertices.push(vec3(vals[0], vals[1], vals[2]));
                        colors.push(vec3(vals[3], vals[4], vals[5]));
                    }
                    n => {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("vertex line with {n} values (expected 3 or 6)"),
                        ))
                    }
                }
            }
            Some("f") => {
                let mut indices = Vec::new();
                for tok in tokens {
                    // `f v`, `f v/vt`, `f v/vt/vn`, `f v//vn` all start with
                    // the vertex index
                    let first = tok.split('/').next().unwrap_or(tok);
                    let i: i64 = first
                        .parse()
                        .map_err(|_| Error::parse(path, lineno, format!("bad face index `{tok}`")))?;
                    if i < 1 {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("face index {i} (OBJ indices start at 1)"),
                        ));
                    }
                    indices.push((i - 1) as usize);
                }
                push_face(path, lineno, &mut faces, &indices, vertices.len())?;
            }
            _ => {} // ignore normals, texcoords, groups, materials
        }
    }
    Mesh::new(vertices, colors, faces)
}

pub fn parse_ply(path: &Path, text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate();
    let header_err = |lineno: usize, msg: &str| Error::parse(path, lineno, msg);

    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        Some((n, _)) => return Err(header_err(n + 1, "missing `ply` magic")),
        None => return Err(header_err(1, "empty file")),
    }

    #[derive(Default)]
    struct VertexLayout {
        // column index per property
        xyz: [usize; 3],
        rgb: Option<[usize; 3]>,
        rgb_is_byte: bool,
        columns: usize,
    }

    let mut vertex_count = 0usize;
    let mut face_count = 0usize;
    let mut layout = VertexLayout::default();
    let mut current: Option<&str> = None;
    let mut rgb_cols: Vec<(String, usize, bool)> = Vec::new();
    let mut body_start = 0usize;

    for (idx, raw) in lines.by_ref() {
        let lineno = idx + 1;
        let line = raw.trim();
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] | ["comment", ..] | ["format", "ascii/1.0"] => {}
            ["format", other, ..] => {
                return Err(header_err(lineno, &format!("unsupported format `{other}`")))
            }
            ["element", "vertex", n] => {
                vertex_count = n
                    .parse()
                    .map_err(|_| header_err(lineno, "bad vertex count"))?;
                current = Some("vertex");
            }
            ["element", "face", n] => {
                face_count = n
                    .parse()
                    .map_err(|_| header_err(lineno, "bad face count"))?;
                current = Some("face");
            }
            ["element", ..] => current = Some("other"),
            ["property", "list", ..] => {}
            ["property", ty, name] if current == Some("vertex") => {
                let col = layout.columns;
                layout.columns += 1;
                match *name {
                    "x" => layout.xyz[0] = col,
                    "y" => layout.xyz[1] = col,
                    "z" => layout.xyz[2] = col,
                    "red" | "green" | "blue" => {
                        rgb_cols.push((name.to_string(), col, matches!(*ty, "uchar" | "uint8")));
                    }
                    _ => {}
                }
            }
            ["property", ..] => {}
            ["end_header"] => {
                body_start = lineno;
                break;
            }
            [] => {}
            _ => return Err(header_err(lineno, &format!("unrecognized header line `{line}`"))),
        }
    }
    if body_start == 0 {
        return Err(header_err(1, "missing end_header"));
    }
    if rgb_cols.len() == 3 {
        let find = |n: &str| rgb_cols.iter().find(|(name, _, _)| name == n);
        if let (Some(r), Some(g), Some(b)) = (find("red"), find("green"), find("blue")) {
            layout.rgb = Some([r.1, g.1, b.1]);
            layout.rgb_is_byte = r.2;
        }
    }

    let mut vertices = Vec::with_capacity(vertex_count);
    let mut colors = Vec::with_capacity(vertex_count);
    let mut faces = Vec::with_capacity(face_count);
    let mut remaining_vertices = vertex_count;
    let mut remaining_faces = face_count;

    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if remaining_vertices > 0 {
            let vals = parse_floats(path, lineno, &tokens)?;
            if vals.len() < layout.columns {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!(
                        "vertex line has {} values, header declares {}",
                        vals.len(),
                        layout.columns
                    ),
                ));
            }
            vertices.push(vec3(
                vals[layout.xyz[0]],
                vals[layout.xyz[1]],
                vals[layout.xyz[2]],
            ));
            if let Some([r, g, b]) = layout.rgb {
                let scale = if layout.rgb_is_byte { 255.0 } else { 1.0 };
                colors.push(vec3(
                    vals[r] / scale,
                    vals[g] / scale,
                    vals[b] / scale,
                ));
            } else {
                colors.push(DEFAULT_GRAY);
            }
            remaining_vertices -= 1;
        } else if remaining_faces > 0 {
            let vals: Vec<usize> = tokens
                .iter()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::parse(path, lineno, format!("bad face index `{t}`")))
                })
                .collect::<Result<_>>()?;
            if vals.is_empty() || vals[0] + 1 != vals.len() {
                return Err(Error::parse(path, lineno, "face list count mismatch"));
            }
            push_face(path, lineno, &mut faces, &vals[1..], vertices.len())?;
            remaining_faces -= 1;
        }
    }
    if remaining_vertices > 0 || remaining_faces > 0 {
        return Err(Error::parse(
            path,
            0,
            format!("truncated body: {remaining_vertices} vertices, {remaining_faces} faces missing"),
        ));
    }
    Mesh::new(vertices, colors, faces)
}

/// Write an ascii PLY with uchar vertex colors.
pub fn save_ply(path: &Path, mesh: &Mesh) -> Result<()> {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    writeln!(out, "element vertex {}", mesh.vertices.len()).unwrap();
    out.push_str(
        "property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n",
    );
    writeln!(out, "element face {}", mesh.faces.len()).unwrap();
    out.push_str("property list uchar int vertex_indices\nend_header\n");
    let byte = |c: f64| (c.clamp(0.0, 1.0) * 255.0).round() as u8;
    for (v, c) in mesh.vertices.iter().zip(&mesh.vertex_colors) {
        writeln!(
            out,
            "{} {} {} {} {} {}",
            v.x,
            v.y,
            v.z,
            byte(c.x),
            byte(c.y),
            byte(c.z)
        )
        .unwrap();
    }
    for f in &mesh.faces {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    const P: &str = "<mem>.obj";

    #[test]
    fn minimal_colored_triangle_obj() {
        let text = "v 0 0 0 1 0 0\nv 1 0 0 0 1 0\nv 0 1 0 0 0 1\nf 1 2 3\n";
        let mesh = parse_obj(&PathBuf::from(P), text).unwrap();
        assert_eq!(mesh.vertices.len(), 3);
        assert_eq!(mesh.faces.len(), 1);
        assert_eq!(mesh.vertex_colors[0], vec3(1.0, 0.0, 0.0));
    }

    #[test]
    fn obj_without_colors_defaults_to_gray() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        let mesh = parse_obj(&PathBuf::from(P), text).unwrap();
        assert!(mesh.vertex_colors.iter().all(|&c| c == DEFAULT_GRAY));
    }

    #[test]
    fn out_of_range_face_index_names_the_line() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 8\n";
        match parse_obj(&PathBuf::from(P), text) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains('7'), "msg: {msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ply_round_trip_with_byte_colors() {
        let text = "v 0 0 0 1 0 0\nv 1 0 0 0 1 0\nv 0 1 0 0 0 1\nf 1 2 3\n";
        let mesh = parse_obj(&PathBuf::from(P), text).unwrap();
        let dir = std::env::temp_dir().join("texf_ply_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tri.ply");
        save_ply(&path, &mesh).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.vertices.len(), 3);
        assert_eq!(back.faces, mesh.faces);
        for (a, b) in back.vertex_colors.iter().zip(&mesh.vertex_colors) {
            assert!((*a - *b).norm() < 1.0 / 255.0 + 1e-9);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn quad_faces_fan_triangulate() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let mesh = parse_obj(&PathBuf::from(P), text).unwrap();
        assert_eq!(mesh.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }
}
