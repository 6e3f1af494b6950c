//! Minimal OBJ reader: `v`, `vt` and `f` records, polygons fan-triangulated.

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::math::{Vec2, Vec3};

#[derive(Debug, Clone, Default)]
pub struct ObjMesh {
    pub positions: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// Per-face-corner texture coordinates.
    pub uv_corners: Vec<[Vec2; 3]>,
}

fn parse_floats<const N: usize>(
    parts: &mut std::str::SplitWhitespace<'_>,
    line_no: usize,
    min: usize,
) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    let mut count = 0;
    for (slot, tok) in out.iter_mut().zip(parts.by_ref()) {
        *slot = tok
            .parse::<f64>()
            .map_err(|_| Error::parse(format!("line {line_no}: bad number {tok:?}")))?;
        count += 1;
    }
    if count < min {
        return Err(Error::parse(format!(
            "line {line_no}: expected at least {min} numbers"
        )));
    }
    Ok(out)
}

fn resolve_index(tok: &str, len: usize, line_no: usize) -> Result<usize> {
    let raw: i64 = tok
        .parse()
        .map_err(|_| Error::parse(format!("line {line_no}: bad index {tok:?}")))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        len as i64 + raw
    } else {
        -1
    };
    if idx < 0 || idx as usize >= len {
        return Err(Error::parse(format!(
            "line {line_no}: index {raw} out of range (have {len})"
        )));
    }
    Ok(idx as usize)
}

pub fn read_obj<R: BufRead>(reader: R) -> Result<ObjMesh> {
    let mut positions = Vec::new();
    let mut texcoords: Vec<Vec2> = Vec::new();
    let mut faces = Vec::new();
    let mut uv_corners = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let line = line.split('#').next().unwrap_or("");
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let [x, y, z] = parse_floats::<3>(&mut parts, line_no, 3)?;
                positions.push(Vec3::new(x, y, z));
            }
            Some("vt") => {
                let [u, v] = parse_floats::<2>(&mut parts, line_no, 2)?;
                texcoords.push(Vec2::new(u, v));
            }
            Some("f") => {
                let mut corners = Vec::new();
                for tok in parts {
                    let mut fields = tok.split('/');
                    let vi = fields.next().unwrap_or("");
                    let ti = fields.next().unwrap_or("");
                    if ti.is_empty() {
                        return Err(Error::parse(format!(
                            "line {line_no}: face corner {tok:?} has no texture coordinate"
                        )));
                    }
                    corners.push((
                        resolve_index(vi, positions.len(), line_no)?,
                        resolve_index(ti, texcoords.len(), line_no)?,
                    ));
                }
                if corners.len() < 3 {
                    return Err(Error::parse(format!(
                        "line {line_no}: face needs at least 3 corners"
                    )));
                }
                for k in 1..corners.len() - 1 {
                    let (a, b, c) = (corners[0], corners[k], corners[k + 1]);
                    faces.push([a.0, b.0, c.0]);
                    uv_corners.push([texcoords[a.1], texcoords[b.1], texcoords[c.1]]);
                }
            }
            _ => {}
        }
    }

    if faces.is_empty() {
        return Err(Error::parse("mesh has no faces"));
    }
    Ok(ObjMesh {
        positions,
        faces,
        uv_corners,
    })
}

/// Writes positions, one `vt` per face corner, and faces.
pub fn write_obj<W: std::io::Write>(
    mut w: W,
    positions: &[Vec3],
    faces: &[[usize; 3]],
    uv_corners: &[[Vec2; 3]],
) -> std::io::Result<()> {
    for p in positions {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for tri in uv_corners {
        for uv in tri {
            writeln!(w, "vt {} {}", uv.x, uv.y)?;
        }
    }
    for (fi, f) in faces.iter().enumerate() {
        let t = 3 * fi + 1;
        writeln!(
            w,
            "f {}/{} {}/{} {}/{}",
            f[0] + 1,
            t,
            f[1] + 1,
            t + 1,
            f[2] + 1,
            t + 2
        )?;
    }
    Ok(())
}
