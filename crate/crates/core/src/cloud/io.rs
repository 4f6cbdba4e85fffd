use std::io::BufRead;
use std::path::Path;

use super::{CloudError, PointCloud};
use crate::geom::Point3;

/// Supported ASCII point formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    /// One `x y z` triple per line; `#` comment lines and blank lines skipped.
    /// Extra columns (normals, colour) are ignored.
    XyzAscii,
    /// ASCII PLY with a `vertex` element carrying `x`, `y`, `z` properties.
    PlyAscii,
}

impl CloudFormat {
    /// Guesses the format from a file extension (`.ply` vs anything else).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("ply") => CloudFormat::PlyAscii,
            _ => CloudFormat::XyzAscii,
        }
    }
}

/// Reads every vertex position from `source`.
pub fn load_cloud<R: BufRead>(source: R, format: CloudFormat) -> Result<PointCloud, CloudError> {
    let points = match format {
        CloudFormat::XyzAscii => read_xyz(source)?,
        CloudFormat::PlyAscii => read_ply(source)?,
    };
    PointCloud::new(points)
}

/// Opens `path` and loads it, picking the format from the extension.
pub fn load_cloud_path(path: &Path) -> Result<PointCloud, CloudError> {
    let file = std::fs::File::open(path)?;
    load_cloud(std::io::BufReader::new(file), CloudFormat::from_path(path))
}

fn parse_coord(tok: Option<&str>, line: usize, name: &str) -> Result<f64, CloudError> {
    let tok = tok.ok_or_else(|| CloudError::Parse {
        line,
        message: format!("missing {name} coordinate"),
    })?;
    let v: f64 = tok.parse().map_err(|_| CloudError::Parse {
        line,
        message: format!("cannot parse {name} coordinate {tok:?}"),
    })?;
    if !v.is_finite() {
        return Err(CloudError::Parse {
            line,
            message: format!("non-finite {name} coordinate {tok:?}"),
        });
    }
    Ok(v)
}

fn read_xyz<R: BufRead>(source: R) -> Result<Vec<Point3>, CloudError> {
    let mut points = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let x = parse_coord(toks.next(), lineno, "x")?;
        let y = parse_coord(toks.next(), lineno, "y")?;
        let z = parse_coord(toks.next(), lineno, "z")?;
        points.push(Point3::new(x, y, z));
    }
    Ok(points)
}

struct PlyLayout {
    vertex_count: usize,
    /// Number of property columns on a vertex line.
    columns: usize,
    xyz: [usize; 3],
    /// Lines belonging to elements declared before `vertex`.
    skip_before: usize,
}

fn read_ply<R: BufRead>(source: R) -> Result<Vec<Point3>, CloudError> {
    let mut lines = source.lines().enumerate();
    let header_err = |line: usize, message: &str| CloudError::Parse {
        line,
        message: message.to_string(),
    };

    match lines.next() {
        Some((_, Ok(l))) if l.trim() == "ply" => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(header_err(1, "missing 'ply' magic")),
    }

    let mut layout = PlyLayout {
        vertex_count: 0,
        columns: 0,
        xyz: [usize::MAX; 3],
        skip_before: 0,
    };
    // element currently receiving property declarations
    let mut current: Option<(String, usize)> = None;
    let mut seen_vertex = false;
    let mut header_done = false;

    for (i, line) in lines.by_ref() {
        let line = line?;
        let lineno = i + 1;
        let mut toks = line.split_whitespace();
        match toks.next() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                if toks.next() != Some("ascii") {
                    return Err(header_err(lineno, "only ASCII PLY is supported"));
                }
            }
            Some("element") => {
                let name = toks
                    .next()
                    .ok_or_else(|| header_err(lineno, "element without name"))?;
                let count: usize = toks
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| header_err(lineno, "element without valid count"))?;
                if name == "vertex" {
                    seen_vertex = true;
                    layout.vertex_count = count;
                } else if !seen_vertex {
                    layout.skip_before += count;
                }
                current = Some((name.to_string(), count));
            }
            Some("property") => {
                let Some((name, _)) = &current else {
                    return Err(header_err(lineno, "property before any element"));
                };
                if name != "vertex" {
                    continue;
                }
                let kind = toks
                    .next()
                    .ok_or_else(|| header_err(lineno, "property without type"))?;
                if kind == "list" {
                    return Err(header_err(lineno, "list properties on vertex are unsupported"));
                }
                let prop = toks
                    .next()
                    .ok_or_else(|| header_err(lineno, "property without name"))?;
                let col = layout.columns;
                match prop {
                    "x" => layout.xyz[0] = col,
                    "y" => layout.xyz[1] = col,
                    "z" => layout.xyz[2] = col,
                    _ => {}
                }
                layout.columns += 1;
            }
            Some("end_header") => {
                header_done = true;
                break;
            }
            Some(other) => {
                return Err(header_err(lineno, &format!("unexpected header keyword {other:?}")));
            }
        }
    }

    if !header_done {
        return Err(header_err(0, "missing end_header"));
    }
    if !seen_vertex {
        return Err(header_err(0, "no vertex element declared"));
    }
    if layout.vertex_count == 0 {
        return Err(CloudError::EmptyCloud);
    }
    if layout.xyz.contains(&usize::MAX) {
        return Err(header_err(0, "vertex element lacks x/y/z properties"));
    }

    let mut points = Vec::with_capacity(layout.vertex_count);
    let mut skipped = 0;
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if skipped < layout.skip_before {
            skipped += 1;
            continue;
        }
        if points.len() == layout.vertex_count {
            break;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < layout.columns {
            return Err(CloudError::Parse {
                line: lineno,
                message: format!("expected {} columns, found {}", layout.columns, toks.len()),
            });
        }
        let x = parse_coord(Some(toks[layout.xyz[0]]), lineno, "x")?;
        let y = parse_coord(Some(toks[layout.xyz[1]]), lineno, "y")?;
        let z = parse_coord(Some(toks[layout.xyz[2]]), lineno, "z")?;
        points.push(Point3::new(x, y, z));
    }
    if points.len() < layout.vertex_count {
        return Err(CloudError::Parse {
            line: 0,
            message: format!(
                "header declares {} vertices, body has {}",
                layout.vertex_count,
                points.len()
            ),
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xyz(text: &str) -> Result<PointCloud, CloudError> {
        load_cloud(text.as_bytes(), CloudFormat::XyzAscii)
    }

    fn ply(text: &str) -> Result<PointCloud, CloudError> {
        load_cloud(text.as_bytes(), CloudFormat::PlyAscii)
    }

    #[test]
    fn xyz_two_points() {
        let cloud = xyz("0 0 0\n1 2 3").unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.bounds().min, Point3::new(0.0, 0.0, 0.0));
        assert_eq!(cloud.bounds().max, Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn xyz_skips_comments_and_extra_columns() {
        let cloud = xyz("# header\n\n0 0 0 255 0 0\n  1 1 1\n").unwrap();
        assert_eq!(cloud.len(), 2);
    }

    #[test]
    fn xyz_nan_names_line() {
        let err = xyz("0 0 0\n1 NaN 2\n").unwrap_err();
        match err {
            CloudError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn xyz_short_line() {
        let err = xyz("0 0\n").unwrap_err();
        assert!(matches!(err, CloudError::Parse { line: 1, .. }));
    }

    #[test]
    fn xyz_empty() {
        assert!(matches!(xyz("# nothing\n"), Err(CloudError::EmptyCloud)));
    }

    #[test]
    fn ply_zero_vertices() {
        let text = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert!(matches!(ply(text), Err(CloudError::EmptyCloud)));
    }

    #[test]
    fn ply_reads_positions_ignoring_attributes() {
        let text = "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float nx\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n9 1 2 3 255\n9 4 5 6 0\n3 0 1 1\n";
        let cloud = ply(text).unwrap();
        assert_eq!(cloud.points(), &[Point3::new(1.0, 2.0, 3.0), Point3::new(4.0, 5.0, 6.0)]);
    }

    #[test]
    fn ply_binary_rejected() {
        let text = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nend_header\n";
        assert!(matches!(ply(text), Err(CloudError::Parse { line: 2, .. })));
    }

    #[test]
    fn ply_bad_vertex_line() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 inf 0\n";
        assert!(matches!(ply(text), Err(CloudError::Parse { line: 9, .. })));
    }

    #[test]
    fn ply_truncated_body() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n";
        assert!(matches!(ply(text), Err(CloudError::Parse { .. })));
    }
}
