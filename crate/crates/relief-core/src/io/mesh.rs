//! Watertight solid meshes from height fields, for milling and printing.
//!
//! The solid is the relief surface on top, a mirrored flat grid at z = 0
//! underneath, and perimeter walls. Heights are normalized to
//! [base_mm, base_mm + relief_depth_mm]; x spans width_mm and y spans
//! width_mm * H / W (image row 0 maps to the largest y so the relief is
//! not mirrored when viewed from +z).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    StlBinary,
}

impl std::str::FromStr for MeshFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "obj" => Ok(MeshFormat::Obj),
            "stl" | "stl_binary" => Ok(MeshFormat::StlBinary),
            other => Err(format!("unknown mesh format '{other}' (obj|stl_binary)")),
        }
    }
}

/// Triangle mesh with shared vertices and consistent outward winding.
#[derive(Debug, Clone)]
pub struct SolidMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl SolidMesh {
    pub fn triangle_vertices(&self, t: usize) -> [[f64; 3]; 3] {
        let idx = self.triangles[t];
        [
            self.vertices[idx[0] as usize],
            self.vertices[idx[1] as usize],
            self.vertices[idx[2] as usize],
        ]
    }

    /// Six times the signed enclosed volume; positive for outward winding.
    pub fn signed_volume_x6(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let a = self.vertices[t[0] as usize];
                let b = self.vertices[t[1] as usize];
                let c = self.vertices[t[2] as usize];
                a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0])
            })
            .sum()
    }
}

/// Build the closed solid: W*H top vertices, W*H base vertices,
/// 4(W-1)(H-1) + 4(W-1) + 4(H-1) triangles.
pub fn build_solid_mesh(
    h: &ScalarField,
    width_mm: f64,
    relief_depth_mm: f64,
    base_mm: f64,
) -> Result<SolidMesh> {
    if !(width_mm > 0.0 && relief_depth_mm > 0.0 && base_mm > 0.0) {
        return Err(Error::BadMeshDimensions);
    }
    let (w, ht) = (h.width(), h.height());
    let y_extent = width_mm * ht as f64 / w as f64;
    let (min, max) = (h.min(), h.max());
    let range = max - min;

    let n_top = w * ht;
    let mut vertices = Vec::with_capacity(2 * n_top);
    for v in 0..ht {
        for u in 0..w {
            let x = u as f64 * width_mm / (w - 1) as f64;
            let y = (ht - 1 - v) as f64 * y_extent / (ht - 1) as f64;
            let normalized = if range > 0.0 {
                (h.at(u, v) - min) / range
            } else {
                0.0
            };
            vertices.push([x, y, base_mm + normalized * relief_depth_mm]);
        }
    }
    for v in 0..ht {
        for u in 0..w {
            let x = u as f64 * width_mm / (w - 1) as f64;
            let y = (ht - 1 - v) as f64 * y_extent / (ht - 1) as f64;
            vertices.push([x, y, 0.0]);
        }
    }

    let top = |u: usize, v: usize| (v * w + u) as u32;
    let bot = |u: usize, v: usize| (n_top + v * w + u) as u32;

    let mut triangles = Vec::with_capacity(4 * (w - 1) * (ht - 1) + 4 * (w - 1) + 4 * (ht - 1));
    for v in 0..ht - 1 {
        for u in 0..w - 1 {
            let (a, b, c, d) = (top(u, v), top(u + 1, v), top(u, v + 1), top(u + 1, v + 1));
            // +z outward (y decreases with v)
            triangles.push([a, d, b]);
            triangles.push([a, c, d]);
            let (a, b, c, d) = (bot(u, v), bot(u + 1, v), bot(u, v + 1), bot(u + 1, v + 1));
            // -z outward: reversed
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }

    // Perimeter walk, counterclockwise viewed from +z.
    let mut ring: Vec<(usize, usize)> = Vec::with_capacity(2 * (w + ht) - 4);
    for u in 0..w {
        ring.push((u, ht - 1)); // y = 0 edge, x increasing
    }
    for v in (0..ht - 1).rev() {
        ring.push((w - 1, v)); // x = max edge, y increasing
    }
    for u in (0..w - 1).rev() {
        ring.push((u, 0)); // y = max edge, x decreasing
    }
    for v in 1..ht - 1 {
        ring.push((0, v)); // x = 0 edge, y decreasing
    }
    for i in 0..ring.len() {
        let (pu, pv) = ring[i];
        let (qu, qv) = ring[(i + 1) % ring.len()];
        let (pt, pb) = (top(pu, pv), bot(pu, pv));
        let (qt, qb) = (top(qu, qv), bot(qu, qv));
        triangles.push([pt, pb, qb]);
        triangles.push([pt, qb, qt]);
    }

    Ok(SolidMesh {
        vertices,
        triangles,
    })
}

fn facet_normal(tri: &[[f64; 3]; 3]) -> [f32; 3] {
    let e1 = [
        tri[1][0] - tri[0][0],
        tri[1][1] - tri[0][1],
        tri[1][2] - tri[0][2],
    ];
    let e2 = [
        tri[2][0] - tri[0][0],
        tri[2][1] - tri[0][1],
        tri[2][2] - tri[0][2],
    ];
    let n = [
        e1[1] * e2[2] - e1[2] * e2[1],
        e1[2] * e2[0] - e1[0] * e2[2],
        e1[0] * e2[1] - e1[1] * e2[0],
    ];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len > 0.0 {
        [(n[0] / len) as f32, (n[1] / len) as f32, (n[2] / len) as f32]
    } else {
        [0.0, 0.0, 0.0]
    }
}

fn write_obj(path: &Path, mesh: &SolidMesh) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    out.flush()?;
    Ok(())
}

fn write_stl_binary(path: &Path, mesh: &SolidMesh) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut header = [0u8; 80];
    let tag = b"relief height-field solid";
    header[..tag.len()].copy_from_slice(tag);
    out.write_all(&header)?;
    out.write_all(&(mesh.triangles.len() as u32).to_le_bytes())?;
    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangle_vertices(t);
        for c in facet_normal(&tri) {
            out.write_all(&c.to_le_bytes())?;
        }
        for v in &tri {
            for c in v {
                out.write_all(&(*c as f32).to_le_bytes())?;
            }
        }
        out.write_all(&0u16.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Build and write the printable solid. Returns the mesh for inspection.
pub fn export_mesh(
    path: &Path,
    h: &ScalarField,
    width_mm: f64,
    relief_depth_mm: f64,
    base_mm: f64,
    format: MeshFormat,
) -> Result<SolidMesh> {
    let mesh = build_solid_mesh(h, width_mm, relief_depth_mm, base_mm)?;
    match format {
        MeshFormat::Obj => write_obj(path, &mesh)?,
        MeshFormat::StlBinary => write_stl_binary(path, &mesh)?,
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn check_manifold_and_oriented(mesh: &SolidMesh) {
        // Every undirected edge on exactly 2 triangles, every directed
        // edge exactly once (consistent orientation).
        let mut undirected: HashMap<(u32, u32), usize> = HashMap::new();
        let mut directed: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                *directed.entry((a, b)).or_default() += 1;
                let key = (a.min(b), a.max(b));
                *undirected.entry(key).or_default() += 1;
            }
        }
        for (e, count) in &undirected {
            assert_eq!(*count, 2, "edge {e:?} on {count} triangles");
        }
        for (e, count) in &directed {
            assert_eq!(*count, 1, "directed edge {e:?} repeated");
        }
        assert!(mesh.signed_volume_x6() > 0.0, "winding must be outward");
    }

    #[test]
    fn two_by_two_counts() {
        let h = ScalarField::new(2, 2, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        let mesh = build_solid_mesh(&h, 20.0, 2.0, 3.0).unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        // top 2 + bottom 2 + walls 8
        assert_eq!(mesh.triangles.len(), 12);
        check_manifold_and_oriented(&mesh);
    }

    #[test]
    fn bounding_box_rule() {
        let h = ScalarField::from_fn(5, 3, |u, v| (u + v) as f64 * 0.1).unwrap();
        let (wmm, dmm, bmm) = (50.0, 4.0, 2.0);
        let mesh = build_solid_mesh(&h, wmm, dmm, bmm).unwrap();
        let max = |i: usize| {
            mesh.vertices
                .iter()
                .map(|v| v[i])
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let min = |i: usize| mesh.vertices.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min);
        assert!((max(0) - wmm).abs() < 1e-12);
        assert!((max(1) - wmm * 3.0 / 5.0).abs() < 1e-12);
        assert!((max(2) - (bmm + dmm)).abs() < 1e-12);
        assert_eq!(min(0), 0.0);
        assert_eq!(min(2), 0.0);
    }

    #[test]
    fn larger_grids_are_manifold() {
        let h = ScalarField::from_fn(7, 5, |u, v| ((u * v) % 4) as f64 * 0.2).unwrap();
        let mesh = build_solid_mesh(&h, 30.0, 3.0, 2.0).unwrap();
        let (w, ht) = (7usize, 5usize);
        assert_eq!(
            mesh.triangles.len(),
            4 * (w - 1) * (ht - 1) + 4 * (w - 1) + 4 * (ht - 1)
        );
        check_manifold_and_oriented(&mesh);
    }

    #[test]
    fn nonpositive_dimensions_rejected() {
        let h = ScalarField::zeros(3, 3).unwrap();
        assert!(build_solid_mesh(&h, 0.0, 1.0, 1.0).is_err());
        assert!(build_solid_mesh(&h, 10.0, -1.0, 1.0).is_err());
        assert!(build_solid_mesh(&h, 10.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn constant_field_degenerates_to_flat_slab() {
        let h = ScalarField::constant(3, 3, 5.0).unwrap();
        let mesh = build_solid_mesh(&h, 10.0, 2.0, 1.0).unwrap();
        for v in 0..9 {
            assert_eq!(mesh.vertices[v][2], 1.0);
        }
        check_manifold_and_oriented(&mesh);
    }
}
