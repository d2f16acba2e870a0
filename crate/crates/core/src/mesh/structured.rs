use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{remesh, Mesh};
use crate::error::{Error, Result};
use crate::linalg::{Sym2, Vec2};
use crate::scalar::Real;

/// How each rectangle of a structured grid is cut in two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DiagonalPattern {
    /// Diagonal direction alternates in a checkerboard.
    #[default]
    Alternating,
    /// Every rectangle cut from its lower-left to upper-right corner.
    Uniform,
}

/// `nx × ny` rectangles of size `h1 × h2` on the unit square, cut along
/// alternating diagonals.
pub fn build_structured_mesh<T: Real>(nx: usize, ny: usize, h1: T, h2: T) -> Result<Mesh<T>> {
    build_structured_mesh_with(nx, ny, h1, h2, DiagonalPattern::Alternating)
}

pub fn build_structured_mesh_with<T: Real>(
    nx: usize,
    ny: usize,
    h1: T,
    h2: T,
    pattern: DiagonalPattern,
) -> Result<Mesh<T>> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!(
            "structured mesh needs nx, ny >= 1 (got {nx} x {ny})"
        )));
    }
    let tol = 1e-12;
    for (n, h, name) in [(nx, h1, "nx*h1"), (ny, h2, "ny*h2")] {
        let cover = n as f64 * h.as_f64();
        if (cover - 1.0).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "{name} = {cover} does not cover the unit interval"
            )));
        }
    }
    let ntri = 2 * nx * ny;
    if ntri > super::MAX_TRIANGLES {
        return Err(Error::MeshTooLarge {
            requested: ntri,
            cap: super::MAX_TRIANGLES,
        });
    }
    let fx = T::from_usize_lossy(nx);
    let fy = T::from_usize_lossy(ny);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Vec2::new(
                T::from_usize_lossy(i) / fx,
                T::from_usize_lossy(j) / fy,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(ntri);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let main = match pattern {
                DiagonalPattern::Alternating => (i + j) % 2 == 0,
                DiagonalPattern::Uniform => true,
            };
            if main {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    Mesh::from_triangles(vertices, triangles)
}

/// Pseudo-unstructured mesh: a structured `nx × ny` grid whose vertices are
/// jittered by up to `jitter·h` per axis (boundary vertices slide along their
/// side, corners stay), then re-triangulated by Delaunay flips in the scaled
/// coordinates `(x/h1, y/h2)`.
pub fn build_perturbed_mesh<T: Real>(nx: usize, ny: usize, jitter: f64, seed: u64) -> Result<Mesh<T>> {
    if !(0.0..0.25).contains(&jitter) {
        return Err(Error::InvalidArgument(format!(
            "jitter {jitter} outside [0, 0.25)"
        )));
    }
    let h1 = T::one() / T::from_usize_lossy(nx.max(1));
    let h2 = T::one() / T::from_usize_lossy(ny.max(1));
    let base = build_structured_mesh(nx, ny, h1, h2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = base.vertices().to_vec();
    for p in vertices.iter_mut() {
        let dx = T::lit(rng.gen_range(-jitter..=jitter)) * h1;
        let dy = T::lit(rng.gen_range(-jitter..=jitter)) * h2;
        let on_x = p.x == T::zero() || p.x == T::one();
        let on_y = p.y == T::zero() || p.y == T::one();
        if !on_x {
            p.x += dx;
        }
        if !on_y {
            p.y += dy;
        }
    }
    let jittered = Mesh::from_triangles(vertices, base.triangles().to_vec())?;
    let metric = Sym2::new(T::one() / (h1 * h1), T::zero(), T::one() / (h2 * h2));
    remesh::flip_to_delaunay(&jittered, metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::element_geometry;

    #[test]
    fn counts() {
        let m = build_structured_mesh(1, 1, 1.0, 1.0).unwrap();
        assert_eq!((m.num_triangles(), m.num_vertices()), (2, 4));
        let m = build_structured_mesh(10, 10, 0.1, 0.1).unwrap();
        assert_eq!((m.num_triangles(), m.num_vertices()), (200, 121));
        assert!((m.total_area() - 1.0f64).abs() < 1e-12);
        m.audit().unwrap();
    }

    #[test]
    fn rejects_bad_cover() {
        assert!(build_structured_mesh(10, 10, 0.11, 0.1).is_err());
        assert!(build_structured_mesh(0, 10, 0.1, 0.1).is_err());
    }

    #[test]
    fn stretched_cells() {
        let m = build_structured_mesh::<f64>(10, 200, 0.1, 0.005).unwrap();
        for k in 0..m.num_triangles() {
            let g = element_geometry(&m, k).unwrap();
            assert!((g.aspect_ratio() - 20.0).abs() < 1e-9, "{}", g.aspect_ratio());
        }
    }

    #[test]
    fn alternating_diagonals() {
        let m = build_structured_mesh(2, 1, 0.5, 1.0).unwrap();
        // cell (0,0) uses diagonal 0-4, cell (1,0) uses diagonal 2-4
        assert!(m.find_edge(0, 4).is_some());
        assert!(m.find_edge(2, 4).is_some());
        assert!(m.find_edge(1, 5).is_none());
    }

    #[test]
    fn perturbed_mesh_is_valid_and_reproducible() {
        let a: Mesh<f64> = build_perturbed_mesh(20, 20, 0.15, 7).unwrap();
        let b: Mesh<f64> = build_perturbed_mesh(20, 20, 0.15, 7).unwrap();
        a.audit().unwrap();
        assert!((a.total_area() - 1.0).abs() < 1e-12);
        assert_eq!(a.triangles(), b.triangles());
        assert_eq!(a.vertices(), b.vertices());
        let c: Mesh<f64> = build_perturbed_mesh(20, 20, 0.15, 8).unwrap();
        assert_ne!(a.vertices(), c.vertices());
    }
}
