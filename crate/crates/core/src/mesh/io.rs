//! Mesh text format and legacy VTK export.
//!
//! Text format:
//!
//! ```text
//! aniso-mesh v1
//! NV NT NE
//! x y            (NV lines)
//! i j k          (NT lines, 0-based, counterclockwise)
//! i j tag        (NE boundary edges, tag in D / IN / OUT)
//! ```

use std::io::{BufRead, Write};

use super::{BoundaryKind, Mesh};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::scalar::Real;

pub const HEADER: &str = "aniso-mesh v1";

pub fn write_mesh<T: Real, W: Write>(mesh: &Mesh<T>, mut out: W) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(
        out,
        "{} {} {}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.boundary_edges().len()
    )?;
    for p in mesh.vertices() {
        // shortest round-trip representation
        writeln!(out, "{:?} {:?}", p.x.as_f64(), p.y.as_f64())?;
    }
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    for be in mesh.boundary_edges() {
        writeln!(out, "{} {} {}", be.v[0], be.v[1], be.kind.tag())?;
    }
    Ok(())
}

pub fn read_mesh<T: Real, R: BufRead>(input: R) -> Result<Mesh<T>> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            }),
        }
    };
    let (n, header) = next("header")?;
    if header.trim() != HEADER {
        return Err(Error::Parse {
            line: n,
            msg: format!("expected header `{HEADER}`"),
        });
    }
    let (n, counts) = next("counts")?;
    let c: Vec<usize> = parse_fields(n, &counts, 3)?;
    let (nv, nt, ne) = (c[0], c[1], c[2]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = next("vertex")?;
        let xy: Vec<f64> = parse_fields(n, &l, 2)?;
        vertices.push(Vec2::new(T::lit(xy[0]), T::lit(xy[1])));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = next("triangle")?;
        let t: Vec<usize> = parse_fields(n, &l, 3)?;
        triangles.push([t[0], t[1], t[2]]);
    }
    let mut boundary = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (n, l) = next("boundary edge")?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse {
                line: n,
                msg: "boundary edge needs `i j tag`".into(),
            });
        }
        let a = f[0].parse::<usize>().map_err(|e| Error::Parse { line: n, msg: e.to_string() })?;
        let b = f[1].parse::<usize>().map_err(|e| Error::Parse { line: n, msg: e.to_string() })?;
        let kind = BoundaryKind::from_tag(f[2]).ok_or_else(|| Error::Parse {
            line: n,
            msg: format!("unknown boundary tag `{}`", f[2]),
        })?;
        boundary.push(([a, b], kind));
    }
    Mesh::new(vertices, triangles, boundary)
}

fn parse_fields<V: std::str::FromStr>(line: usize, s: &str, n: usize) -> Result<Vec<V>>
where
    V::Err: std::fmt::Display,
{
    let out: Vec<V> = s
        .split_whitespace()
        .map(|t| t.parse::<V>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
    if out.len() != n {
        return Err(Error::Parse {
            line,
            msg: format!("expected {n} fields, found {}", out.len()),
        });
    }
    Ok(out)
}

/// Legacy ASCII VTK unstructured grid with per-vertex scalar fields.
pub fn write_vtk<T: Real, W: Write>(
    mesh: &Mesh<T>,
    fields: &[(&str, &[T])],
    mut out: W,
) -> Result<()> {
    for (name, values) in fields {
        if values.len() != mesh.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "field `{name}` has {} values for {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("invalid VTK field name `{name}`")));
        }
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "anisotropic mesh")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.num_vertices())?;
    for p in mesh.vertices() {
        writeln!(out, "{:?} {:?} 0", p.x.as_f64(), p.y.as_f64())?;
    }
    let nt = mesh.num_triangles();
    writeln!(out, "CELLS {} {}", nt, 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {}", mesh.num_vertices())?;
        for (name, values) in fields {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in values.iter() {
                writeln!(out, "{:?}", v.as_f64())?;
            }
        }
    }
    Ok(())
}
