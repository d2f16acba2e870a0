use super::{Mesh, NONE};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::scalar::Real;

/// Points farther than this from the mesh are rejected.
pub const OUTSIDE_TOLERANCE: f64 = 1e-10;

/// Point location on a fixed mesh: a bucket grid gives a nearby starting
/// triangle, then a visibility walk with orientation tests finds the target.
pub struct Locator<'a, T> {
    mesh: &'a Mesh<T>,
    neighbors: Vec<[usize; 3]>,
    origin: Vec2<T>,
    cell: Vec2<T>,
    n: [usize; 2],
    seed: Vec<usize>,
}

impl<'a, T: Real> Locator<'a, T> {
    pub fn new(mesh: &'a Mesh<T>) -> Self {
        let nt = mesh.num_triangles();
        let neighbors = (0..nt)
            .map(|k| {
                mesh.triangle_edges(k).map(|e| {
                    let tris = mesh.edges()[e].tris;
                    if tris[0] == k {
                        tris[1]
                    } else {
                        tris[0]
                    }
                })
            })
            .collect();
        let mut lo = mesh.vertex(0);
        let mut hi = lo;
        for p in mesh.vertices() {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let side = ((nt as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let n = [side, side];
        let span = hi - lo;
        let cell = Vec2::new(
            span.x / T::from_usize_lossy(n[0]),
            span.y / T::from_usize_lossy(n[1]),
        );
        let mut loc = Self {
            mesh,
            neighbors,
            origin: lo,
            cell,
            n,
            seed: vec![NONE; n[0] * n[1]],
        };
        for k in 0..nt {
            let p = mesh.triangle_points(k);
            let (i0, j0) = loc.cell_of(Vec2::new(
                p[0].x.min(p[1].x).min(p[2].x),
                p[0].y.min(p[1].y).min(p[2].y),
            ));
            let (i1, j1) = loc.cell_of(Vec2::new(
                p[0].x.max(p[1].x).max(p[2].x),
                p[0].y.max(p[1].y).max(p[2].y),
            ));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let s = &mut loc.seed[j * n[0] + i];
                    if *s == NONE {
                        *s = k;
                    }
                }
            }
        }
        loc
    }

    fn cell_of(&self, p: Vec2<T>) -> (usize, usize) {
        let f = |v: T, o: T, c: T, n: usize| -> usize {
            if !(c > T::zero()) {
                return 0;
            }
            let t = ((v - o) / c).floor();
            if t < T::zero() {
                0
            } else {
                (t.to_usize().unwrap_or(n - 1)).min(n - 1)
            }
        };
        (
            f(p.x, self.origin.x, self.cell.x, self.n[0]),
            f(p.y, self.origin.y, self.cell.y, self.n[1]),
        )
    }

    /// Triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: Vec2<T>) -> Result<(usize, [T; 3])> {
        let (i, j) = self.cell_of(p);
        let mut k = self.seed[j * self.n[0] + i];
        if k == NONE {
            k = 0;
        }
        let cap = 4 * self.n[0] + 64;
        for _ in 0..cap {
            let bary = barycentric(self.mesh.triangle_points(k), p);
            let (worst, wi) = bary
                .iter()
                .enumerate()
                .map(|(i, &b)| (b, i))
                .fold((T::infinity(), 0), |acc, x| if x.0 < acc.0 { x } else { acc });
            if worst >= T::zero() {
                return Ok((k, bary));
            }
            let next = self.neighbors[k][wi];
            if next == NONE {
                // crossing the hull: either a boundary round-off or a true outside point
                return self.accept_near(k, p);
            }
            k = next;
        }
        self.brute_force(p)
    }

    fn accept_near(&self, k: usize, p: Vec2<T>) -> Result<(usize, [T; 3])> {
        let d = distance_to_triangle(self.mesh.triangle_points(k), p);
        if d <= T::lit(OUTSIDE_TOLERANCE) {
            return Ok((k, clamp_bary(barycentric(self.mesh.triangle_points(k), p))));
        }
        self.brute_force(p)
    }

    fn brute_force(&self, p: Vec2<T>) -> Result<(usize, [T; 3])> {
        let mut best = (T::infinity(), 0);
        for k in 0..self.mesh.num_triangles() {
            let d = distance_to_triangle(self.mesh.triangle_points(k), p);
            if d < best.0 {
                best = (d, k);
                if d == T::zero() {
                    break;
                }
            }
        }
        if best.0 <= T::lit(OUTSIDE_TOLERANCE) {
            let k = best.1;
            return Ok((k, clamp_bary(barycentric(self.mesh.triangle_points(k), p))));
        }
        Err(Error::PointOutside {
            x: p.x.as_f64(),
            y: p.y.as_f64(),
            distance: best.0.as_f64(),
        })
    }

    /// P1 interpolation of a vertex field at `p`.
    pub fn interpolate(&self, values: &[T], p: Vec2<T>) -> Result<T> {
        let (k, b) = self.locate(p)?;
        let t = self.mesh.triangle(k);
        Ok(b[0] * values[t[0]] + b[1] * values[t[1]] + b[2] * values[t[2]])
    }
}

fn barycentric<T: Real>(t: [Vec2<T>; 3], p: Vec2<T>) -> [T; 3] {
    let area2 = (t[1] - t[0]).cross(t[2] - t[0]);
    let l0 = (t[2] - t[1]).cross(p - t[1]) / area2;
    let l1 = (t[0] - t[2]).cross(p - t[2]) / area2;
    [l0, l1, T::one() - l0 - l1]
}

fn clamp_bary<T: Real>(b: [T; 3]) -> [T; 3] {
    let c = b.map(|v| v.max(T::zero()));
    let s = c[0] + c[1] + c[2];
    c.map(|v| v / s)
}

fn distance_to_segment<T: Real>(a: Vec2<T>, b: Vec2<T>, p: Vec2<T>) -> T {
    let d = b - a;
    let t = ((p - a).dot(d) / d.norm_sq()).max(T::zero()).min(T::one());
    (a + d.scale(t) - p).norm()
}

fn distance_to_triangle<T: Real>(t: [Vec2<T>; 3], p: Vec2<T>) -> T {
    let inside = (0..3).all(|i| (t[(i + 1) % 3] - t[i]).cross(p - t[i]) >= T::zero());
    if inside {
        return T::zero();
    }
    (0..3)
        .map(|i| distance_to_segment(t[i], t[(i + 1) % 3], p))
        .fold(T::infinity(), T::min)
}

/// P1 interpolant of `values` (given on `old`) at the vertices of `new`.
pub fn interpolate_vertex_field<T: Real>(
    old: &Mesh<T>,
    values: &[T],
    new: &Mesh<T>,
) -> Result<Vec<T>> {
    if values.len() != old.num_vertices() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for {} vertices",
            values.len(),
            old.num_vertices()
        )));
    }
    let loc = Locator::new(old);
    new.vertices()
        .iter()
        .map(|&p| loc.interpolate(values, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_perturbed_mesh, build_structured_mesh};

    #[test]
    fn linear_fields_transfer_exactly() {
        let old: Mesh<f64> = build_perturbed_mesh(17, 13, 0.15, 3).unwrap();
        let new = build_structured_mesh(9, 23, 1.0 / 9.0, 1.0 / 23.0).unwrap();
        let f = |p: Vec2<f64>| 0.3 * p.x - 1.7 * p.y + 0.25;
        let vals: Vec<f64> = old.vertices().iter().map(|&p| f(p)).collect();
        let out = interpolate_vertex_field(&old, &vals, &new).unwrap();
        for (p, v) in new.vertices().iter().zip(&out) {
            assert!((f(*p) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_and_smooth_fields() {
        let old: Mesh<f64> = build_perturbed_mesh(20, 20, 0.15, 1).unwrap();
        let new: Mesh<f64> = build_perturbed_mesh(20, 20, 0.15, 2).unwrap();
        let c = vec![2.5; old.num_vertices()];
        for v in interpolate_vertex_field(&old, &c, &new).unwrap() {
            assert!((v - 2.5).abs() < 1e-14);
        }
        let pi = std::f64::consts::PI;
        let s: Vec<f64> = old.vertices().iter().map(|p| (pi * p.y).sin()).collect();
        let out = interpolate_vertex_field(&old, &s, &new).unwrap();
        let dev = new
            .vertices()
            .iter()
            .zip(&out)
            .map(|(p, v)| ((pi * p.y).sin() - v).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 0.01, "max deviation {dev}");
    }

    #[test]
    fn outside_point_is_rejected() {
        let m = build_structured_mesh(4, 4, 0.25, 0.25).unwrap();
        let loc = Locator::new(&m);
        assert!(matches!(
            loc.locate(Vec2::new(1.5, 0.5)),
            Err(Error::PointOutside { .. })
        ));
        assert!(loc.locate(Vec2::new(1.0 + 1e-12, 0.5)).is_ok());
    }
}
