use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{SurfaceError, SurfacePatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MeshFormat::Obj => "obj",
            MeshFormat::Ply => "ply",
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshStats {
    pub vertices: usize,
    pub faces: usize,
}

/// Trusted vertices (grid order) and quads whose four corners are trusted,
/// as indices into the vertex list. Quads run counter-clockwise in (u, v).
fn mesh(patch: &SurfacePatch) -> (Vec<usize>, Vec<[usize; 4]>) {
    let g = &patch.grid;
    let mut remap = vec![usize::MAX; g.len()];
    let mut verts = Vec::new();
    for k in 0..g.len() {
        if patch.trusted[k] {
            remap[k] = verts.len();
            verts.push(k);
        }
    }
    let cols = if g.periodic { g.n_u } else { g.n_u - 1 };
    let mut faces = Vec::new();
    for j in 0..g.n_levels() - 1 {
        for i in 0..cols {
            let i1 = (i + 1) % g.n_u;
            let q = [g.index(i, j), g.index(i1, j), g.index(i1, j + 1), g.index(i, j + 1)];
            if q.iter().all(|&k| patch.trusted[k]) {
                faces.push(q.map(|k| remap[k]));
            }
        }
    }
    (verts, faces)
}

fn check_normals(patch: &SurfacePatch, normals: Option<&[Vector3<f64>]>) -> Result<(), SurfaceError> {
    match normals {
        Some(n) if n.len() != patch.points.len() => Err(SurfaceError::LengthMismatch {
            expected: patch.points.len(),
            found: n.len(),
        }),
        _ => Ok(()),
    }
}

fn finite_or_zero(n: &Vector3<f64>) -> Vector3<f64> {
    if n.iter().all(|x| x.is_finite()) {
        *n
    } else {
        Vector3::zeros()
    }
}

pub fn write_obj<W: Write>(
    patch: &SurfacePatch,
    normals: Option<&[Vector3<f64>]>,
    mut w: W,
) -> Result<MeshStats, SurfaceError> {
    check_normals(patch, normals)?;
    let (verts, faces) = mesh(patch);
    if verts.is_empty() {
        return Err(SurfaceError::EmptyTrustedRegion);
    }
    writeln!(w, "# {} vertices, {} faces", verts.len(), faces.len())?;
    for &k in &verts {
        let p = patch.points[k];
        writeln!(w, "v {:?} {:?} {:?}", p.x, p.y, p.z)?;
    }
    if let Some(ns) = normals {
        for &k in &verts {
            let n = finite_or_zero(&ns[k]);
            writeln!(w, "vn {:?} {:?} {:?}", n.x, n.y, n.z)?;
        }
        for q in &faces {
            let [a, b, c, d] = q.map(|x| x + 1);
            writeln!(w, "f {a}//{a} {b}//{b} {c}//{c} {d}//{d}")?;
        }
    } else {
        for q in &faces {
            writeln!(w, "f {} {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1)?;
        }
    }
    w.flush()?;
    Ok(MeshStats { vertices: verts.len(), faces: faces.len() })
}

/// Binary little-endian PLY; normals are written as zeros when absent.
pub fn write_ply<W: Write>(
    patch: &SurfacePatch,
    normals: Option<&[Vector3<f64>]>,
    mut w: W,
) -> Result<MeshStats, SurfaceError> {
    check_normals(patch, normals)?;
    let (verts, faces) = mesh(patch);
    if verts.is_empty() {
        return Err(SurfaceError::EmptyTrustedRegion);
    }
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\n\
         element vertex {}\n\
         property double x\nproperty double y\nproperty double z\n\
         property double nx\nproperty double ny\nproperty double nz\n\
         element face {}\n\
         property list uchar uint vertex_indices\n\
         end_header\n",
        verts.len(),
        faces.len()
    )?;
    for &k in &verts {
        let p = patch.points[k];
        let n = normals.map(|ns| finite_or_zero(&ns[k])).unwrap_or_else(Vector3::zeros);
        for x in p.iter().chain(n.iter()) {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    for q in &faces {
        w.write_all(&[4u8])?;
        for &x in q {
            w.write_all(&(x as u32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(MeshStats { vertices: verts.len(), faces: faces.len() })
}

pub fn export_mesh(
    patch: &SurfacePatch,
    format: MeshFormat,
    path: &Path,
    normals: Option<&[Vector3<f64>]>,
) -> Result<MeshStats, SurfaceError> {
    let w = BufWriter::new(File::create(path)?);
    match format {
        MeshFormat::Obj => write_obj(patch, normals, w),
        MeshFormat::Ply => write_ply(patch, normals, w),
    }
}

/// `i,j,u,v,f1,f2,f3,trust`, one row per node in grid order.
pub fn write_patch_csv<W: Write>(patch: &SurfacePatch, mut w: W) -> Result<(), SurfaceError> {
    let g = &patch.grid;
    writeln!(w, "i,j,u,v,f1,f2,f3,trust")?;
    for k in 0..g.len() {
        let (i, j) = g.node(k);
        let p = patch.points[k];
        writeln!(
            w,
            "{i},{j},{:?},{:?},{:?},{:?},{:?},{}",
            g.u(i),
            g.v(j),
            p.x,
            p.y,
            p.z,
            u8::from(patch.trusted[k])
        )?;
    }
    w.flush()?;
    Ok(())
}
