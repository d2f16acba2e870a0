//! Metric-conforming remeshing of the unit square by local operations.
//!
//! Each sweep runs edge splits (`ℓ_M > √2`), edge collapses (`ℓ_M < 1/√2`),
//! Delaunay flips measured in the metric and metric-weighted smoothing. The
//! operations of one pass act on an independent set so that adjacency can be
//! rebuilt from scratch between passes.

use super::{square_sides, BoundaryKind, Locator, Mesh, MetricField, NONE};
use crate::error::{Error, Result};
use crate::linalg::{Sym2, Vec2};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct RemeshParams {
    pub max_sweeps: usize,
    /// Split edges longer than this (metric units).
    pub split_length: f64,
    /// Collapse edges shorter than this.
    pub collapse_length: f64,
    pub smoothing_passes: usize,
    pub relaxation: f64,
    /// Cap on split/collapse/flip passes inside one sweep.
    pub inner_passes: usize,
}

impl Default for RemeshParams {
    fn default() -> Self {
        Self {
            max_sweeps: 30,
            split_length: std::f64::consts::SQRT_2,
            collapse_length: std::f64::consts::FRAC_1_SQRT_2,
            smoothing_passes: 2,
            relaxation: 0.5,
            inner_passes: 12,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RemeshStats {
    pub sweeps: usize,
    pub splits: usize,
    pub collapses: usize,
    pub flips: usize,
    pub moves: usize,
    /// Last sweep performed no split and no collapse.
    pub converged: bool,
}

/// Remeshes `mesh` so that edges have approximately unit length in `metric`
/// (given at the vertices of `mesh`).
pub fn adapt_to_metric<T: Real>(mesh: &Mesh<T>, metric: &MetricField<T>) -> Result<Mesh<T>> {
    adapt_to_metric_with(mesh, metric, &RemeshParams::default()).map(|(m, _)| m)
}

pub fn adapt_to_metric_with<T: Real>(
    mesh: &Mesh<T>,
    metric: &MetricField<T>,
    params: &RemeshParams,
) -> Result<(Mesh<T>, RemeshStats)> {
    if metric.len() != mesh.num_vertices() {
        return Err(Error::InvalidArgument(format!(
            "metric has {} entries for {} vertices",
            metric.len(),
            mesh.num_vertices()
        )));
    }
    for v in 0..metric.len() {
        let (h1, h2) = (metric.h1[v], metric.h2[v]);
        if !(h2 > T::zero() && h1 >= h2 && h1.is_finite() && metric.theta[v].is_finite()) {
            return Err(Error::NonSpdMetric { vertex: v });
        }
    }
    let tensors = metric.tensors();
    if let Some(v) = tensors.iter().position(|m| !m.is_spd()) {
        return Err(Error::NonSpdMetric { vertex: v });
    }
    let locator = Locator::new(mesh);
    let field = |p: Vec2<T>| -> Result<Sym2<T>> {
        let (k, b) = locator.locate(p)?;
        let t = mesh.triangle(k);
        Ok(tensors[t[0]].scale(b[0]) + tensors[t[1]].scale(b[1]) + tensors[t[2]].scale(b[2]))
    };
    let mut w = WorkMesh::from_mesh(mesh, tensors.clone());
    let mut stats = RemeshStats::default();
    let split = T::lit(params.split_length);
    let collapse = T::lit(params.collapse_length);

    for sweep in 0..params.max_sweeps {
        stats.sweeps = sweep + 1;
        let mut changed = 0;
        for _ in 0..params.inner_passes {
            let n = w.split_pass(split, &field)?;
            changed += n;
            stats.splits += n;
            if n == 0 {
                break;
            }
        }
        for _ in 0..params.inner_passes {
            let n = w.collapse_pass(collapse, split);
            changed += n;
            stats.collapses += n;
            if n == 0 {
                break;
            }
        }
        stats.flips += w.flip_until_stable(params.inner_passes);
        for _ in 0..params.smoothing_passes {
            stats.moves += w.smooth_pass(T::lit(params.relaxation), &field)?;
        }
        stats.flips += w.flip_until_stable(params.inner_passes);
        if changed == 0 {
            stats.converged = true;
            break;
        }
    }
    let out = w.into_mesh(mesh)?;
    out.audit()?;
    let (a0, a1) = (mesh.total_area(), out.total_area());
    if !((a1 - a0).abs() <= T::lit(1e-10) * a0) {
        return Err(Error::InvalidMesh(format!("remesh changed the area from {a0} to {a1}")));
    }
    Ok((out, stats))
}

/// Delaunay edge flips measured in a constant metric; vertices are unchanged.
pub fn flip_to_delaunay<T: Real>(mesh: &Mesh<T>, metric: Sym2<T>) -> Result<Mesh<T>> {
    if !metric.is_spd() {
        return Err(Error::NonSpdMetric { vertex: 0 });
    }
    let mut w = WorkMesh::from_mesh(mesh, vec![metric; mesh.num_vertices()]);
    w.flip_until_stable(1000);
    w.into_mesh(mesh)
}

/// Metric length of every edge of `mesh`, with the metric of `background`
/// evaluated (P1 tensor interpolation) at the edge midpoint.
pub fn metric_edge_lengths<T: Real>(
    background: &Mesh<T>,
    metric: &MetricField<T>,
    mesh: &Mesh<T>,
) -> Result<Vec<T>> {
    let tensors = metric.tensors();
    let locator = Locator::new(background);
    mesh.edges()
        .iter()
        .map(|e| {
            let a = mesh.vertex(e.v[0]);
            let b = mesh.vertex(e.v[1]);
            let (k, w) = locator.locate((a + b).scale(T::lit(0.5)))?;
            let t = background.triangle(k);
            let m = tensors[t[0]].scale(w[0]) + tensors[t[1]].scale(w[1]) + tensors[t[2]].scale(w[2]);
            Ok(m.quad(b - a).sqrt())
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Loc {
    /// Corner, boundary-kind transition or other vertex that must stay put.
    Fixed,
    /// On side `s` of the square (0 bottom, 1 right, 2 top, 3 left).
    Side(u8),
    Interior,
}

impl Loc {
    fn rank(self) -> u8 {
        match self {
            Loc::Interior => 0,
            Loc::Side(_) => 1,
            Loc::Fixed => 2,
        }
    }
}

struct Topology {
    v2t_off: Vec<usize>,
    v2t: Vec<usize>,
    /// `(a, b, t0, t1)` with `a < b`; `t1 == NONE` on the boundary.
    edges: Vec<(usize, usize, usize, usize)>,
}

impl Topology {
    fn ball(&self, v: usize) -> &[usize] {
        &self.v2t[self.v2t_off[v]..self.v2t_off[v + 1]]
    }
}

struct WorkMesh<T> {
    pts: Vec<Vec2<T>>,
    met: Vec<Sym2<T>>,
    loc: Vec<Loc>,
    tris: Vec<[usize; 3]>,
}

const SIDE_TOL: f64 = 1e-12;

impl<T: Real> WorkMesh<T> {
    fn from_mesh(mesh: &Mesh<T>, met: Vec<Sym2<T>>) -> Self {
        let nv = mesh.num_vertices();
        let mut loc = vec![Loc::Interior; nv];
        let mut kinds: Vec<Vec<BoundaryKind>> = vec![Vec::new(); nv];
        for be in mesh.boundary_edges() {
            kinds[be.v[0]].push(be.kind);
            kinds[be.v[1]].push(be.kind);
        }
        let tol = T::lit(SIDE_TOL);
        for v in 0..nv {
            if kinds[v].is_empty() {
                continue;
            }
            let sides = square_sides(mesh.vertex(v), tol);
            let count = sides.iter().filter(|&&s| s).count();
            let transition = kinds[v].windows(2).any(|w| w[0] != w[1]);
            loc[v] = if count == 1 && !transition {
                Loc::Side(sides.iter().position(|&s| s).unwrap() as u8)
            } else {
                Loc::Fixed
            };
        }
        Self {
            pts: mesh.vertices().to_vec(),
            met,
            loc,
            tris: mesh.triangles().to_vec(),
        }
    }

    fn topology(&self) -> Topology {
        let nv = self.pts.len();
        let mut off = vec![0usize; nv + 1];
        for t in &self.tris {
            for &v in t {
                off[v + 1] += 1;
            }
        }
        for i in 0..nv {
            off[i + 1] += off[i];
        }
        let mut fill = off.clone();
        let mut v2t = vec![0; off[nv]];
        for (k, t) in self.tris.iter().enumerate() {
            for &v in t {
                v2t[fill[v]] = k;
                fill[v] += 1;
            }
        }
        let mut half: Vec<(usize, usize, usize)> = Vec::with_capacity(3 * self.tris.len());
        for (k, t) in self.tris.iter().enumerate() {
            for i in 0..3 {
                let a = t[(i + 1) % 3];
                let b = t[(i + 2) % 3];
                half.push((a.min(b), a.max(b), k));
            }
        }
        half.sort_unstable();
        let mut edges = Vec::with_capacity(half.len() / 2 + 1);
        let mut i = 0;
        while i < half.len() {
            let (a, b, k) = half[i];
            if i + 1 < half.len() && half[i + 1].0 == a && half[i + 1].1 == b {
                edges.push((a, b, k, half[i + 1].2));
                i += 2;
            } else {
                edges.push((a, b, k, NONE));
                i += 1;
            }
        }
        Topology {
            v2t_off: off,
            v2t,
            edges,
        }
    }

    fn length(&self, a: usize, b: usize) -> T {
        let m = (self.met[a] + self.met[b]).scale(T::lit(0.5));
        m.quad(self.pts[b] - self.pts[a]).sqrt()
    }

    fn quality_of(&self, p: [Vec2<T>; 3], m: [Sym2<T>; 3]) -> T {
        quality(p, (m[0] + m[1] + m[2]).scale(T::one() / T::lit(3.0)))
    }

    fn tri_quality(&self, t: [usize; 3]) -> T {
        self.quality_of(t.map(|v| self.pts[v]), t.map(|v| self.met[v]))
    }

    fn split_pass<F>(&mut self, threshold: T, field: &F) -> Result<usize>
    where
        F: Fn(Vec2<T>) -> Result<Sym2<T>>,
    {
        let topo = self.topology();
        let mut cand: Vec<(T, usize)> = topo
            .edges
            .iter()
            .enumerate()
            .filter_map(|(i, &(a, b, _, _))| {
                let l = self.length(a, b);
                (l > threshold).then_some((l, i))
            })
            .collect();
        cand.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
        let mut touched = vec![false; self.tris.len()];
        let mut count = 0;
        for (_, ei) in cand {
            let (a, b, t0, t1) = topo.edges[ei];
            if touched[t0] || (t1 != NONE && touched[t1]) {
                continue;
            }
            if self.tris.len() + 2 > super::MAX_TRIANGLES {
                return Err(Error::MeshTooLarge {
                    requested: self.tris.len() + 2,
                    cap: super::MAX_TRIANGLES,
                });
            }
            let mut mid = (self.pts[a] + self.pts[b]).scale(T::lit(0.5));
            let loc = if t1 == NONE {
                let s = self.boundary_side(a, b).ok_or_else(|| Error::Remesh {
                    x: mid.x.as_f64(),
                    y: mid.y.as_f64(),
                    reason: "boundary edge off the square sides".into(),
                })?;
                snap(&mut mid, s);
                Loc::Side(s)
            } else {
                Loc::Interior
            };
            let m = self.pts.len();
            self.pts.push(mid);
            self.met.push(field(mid)?);
            self.loc.push(loc);
            for t in [t0, t1] {
                if t == NONE {
                    continue;
                }
                let tri = self.tris[t];
                let i = (0..3).find(|&i| tri[i] != a && tri[i] != b).unwrap();
                let (x, y, c) = (tri[(i + 1) % 3], tri[(i + 2) % 3], tri[i]);
                self.tris[t] = [x, m, c];
                self.tris.push([m, y, c]);
                touched[t] = true;
                touched.push(true);
            }
            count += 1;
        }
        Ok(count)
    }

    /// Common side of two boundary vertices.
    fn boundary_side(&self, a: usize, b: usize) -> Option<u8> {
        let tol = T::lit(SIDE_TOL);
        let sa = square_sides(self.pts[a], tol);
        let sb = square_sides(self.pts[b], tol);
        (0..4).find(|&s| sa[s] && sb[s]).map(|s| s as u8)
    }

    fn collapse_pass(&mut self, threshold: T, max_length: T) -> usize {
        let topo = self.topology();
        let mut cand: Vec<(T, usize)> = topo
            .edges
            .iter()
            .enumerate()
            .filter_map(|(i, &(a, b, _, _))| {
                let l = self.length(a, b);
                (l < threshold).then_some((l, i))
            })
            .collect();
        cand.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
        let nv = self.pts.len();
        let mut locked = vec![false; nv];
        let mut dead_t = vec![false; self.tris.len()];
        let mut dead_v = vec![false; nv];
        let mut count = 0;
        for (_, ei) in cand {
            let (a, b, _, t1) = topo.edges[ei];
            if locked[a] || locked[b] {
                continue;
            }
            let order = if self.loc[a].rank() <= self.loc[b].rank() {
                [(a, b), (b, a)]
            } else {
                [(b, a), (a, b)]
            };
            for (v, t) in order {
                if let Some(updates) = self.try_collapse(&topo, v, t, t1 == NONE, max_length) {
                    for (k, tri) in updates {
                        match tri {
                            Some(tri) => self.tris[k] = tri,
                            None => dead_t[k] = true,
                        }
                    }
                    for &k in topo.ball(v) {
                        for &u in &self.tris[k] {
                            locked[u] = true;
                        }
                    }
                    locked[v] = true;
                    locked[t] = true;
                    dead_v[v] = true;
                    count += 1;
                    break;
                }
            }
        }
        if count > 0 {
            self.compact(&dead_t, &dead_v);
        }
        count
    }

    /// Checks removing `v` by merging it into `t`; returns the triangle updates.
    #[allow(clippy::type_complexity)]
    fn try_collapse(
        &self,
        topo: &Topology,
        v: usize,
        t: usize,
        boundary_edge: bool,
        max_length: T,
    ) -> Option<Vec<(usize, Option<[usize; 3]>)>> {
        match self.loc[v] {
            Loc::Fixed => return None,
            Loc::Side(_) if !boundary_edge => return None,
            _ => {}
        }
        // link condition: common neighbours are exactly the apexes of the edge triangles
        let ball_v = topo.ball(v);
        let ball_t = topo.ball(t);
        let mut nv: Vec<usize> = ball_v.iter().flat_map(|&k| self.tris[k]).collect();
        nv.sort_unstable();
        nv.dedup();
        let mut nt: Vec<usize> = ball_t.iter().flat_map(|&k| self.tris[k]).collect();
        nt.sort_unstable();
        nt.dedup();
        let common = nv
            .iter()
            .filter(|&&u| u != v && u != t && nt.binary_search(&u).is_ok())
            .count();
        let shared = ball_v.iter().filter(|&&k| self.tris[k].contains(&t)).count();
        if common != shared {
            return None;
        }
        let mut old_q = T::infinity();
        let mut new_q = T::infinity();
        let mut updates = Vec::with_capacity(ball_v.len());
        for &k in ball_v {
            let tri = self.tris[k];
            old_q = old_q.min(self.tri_quality(tri));
            if tri.contains(&t) {
                updates.push((k, None));
                continue;
            }
            let new = tri.map(|u| if u == v { t } else { u });
            let p = new.map(|u| self.pts[u]);
            let area2 = (p[1] - p[0]).cross(p[2] - p[0]);
            if !(area2 > T::zero()) {
                return None;
            }
            for &u in &new {
                if u != t && self.length(t, u) > max_length {
                    return None;
                }
            }
            new_q = new_q.min(self.tri_quality(new));
            updates.push((k, Some(new)));
        }
        let floor = old_q.min(T::lit(0.3));
        if new_q < floor {
            return None;
        }
        Some(updates)
    }

    fn compact(&mut self, dead_t: &[bool], dead_v: &[bool]) {
        let mut map = vec![NONE; self.pts.len()];
        let mut n = 0;
        for v in 0..self.pts.len() {
            if !dead_v[v] {
                map[v] = n;
                self.pts[n] = self.pts[v];
                self.met[n] = self.met[v];
                self.loc[n] = self.loc[v];
                n += 1;
            }
        }
        self.pts.truncate(n);
        self.met.truncate(n);
        self.loc.truncate(n);
        let tris = std::mem::take(&mut self.tris);
        self.tris = tris
            .into_iter()
            .enumerate()
            .filter(|(k, _)| !dead_t[*k])
            .map(|(_, t)| t.map(|v| map[v]))
            .collect();
    }

    fn flip_until_stable(&mut self, cap: usize) -> usize {
        let mut total = 0;
        for _ in 0..cap {
            let n = self.flip_pass();
            total += n;
            if n == 0 {
                break;
            }
        }
        total
    }

    fn flip_pass(&mut self) -> usize {
        let topo = self.topology();
        let mut touched = vec![false; self.tris.len()];
        let mut count = 0;
        for &(a, b, t0, t1) in &topo.edges {
            if t1 == NONE || touched[t0] || touched[t1] {
                continue;
            }
            // orient so that t0 traverses a -> b
            let tri0 = self.tris[t0];
            let i0 = (0..3).find(|&i| tri0[i] != a && tri0[i] != b).unwrap();
            let (x, y, c) = (tri0[(i0 + 1) % 3], tri0[(i0 + 2) % 3], tri0[i0]);
            let tri1 = self.tris[t1];
            let d = *tri1.iter().find(|&&u| u != x && u != y).unwrap();
            let m = (self.met[x] + self.met[y] + self.met[c] + self.met[d]).scale(T::lit(0.25));
            let Some(l) = cholesky_upper(m) else { continue };
            let origin = (self.pts[x] + self.pts[y]).scale(T::lit(0.5));
            let map = |u: usize| {
                let q = self.pts[u] - origin;
                Vec2::new(l[0] * q.x + l[1] * q.y, l[2] * q.y)
            };
            let (px, py, pc, pd) = (map(x), map(y), map(c), map(d));
            let scale = (py - px).norm_sq();
            if !(incircle(px, py, pc, pd) > T::lit(1e-10) * scale * scale) {
                continue;
            }
            // quad x, d, y, c must be strictly convex for the flip
            let n0 = [x, d, c];
            let n1 = [d, y, c];
            let ok = [n0, n1].iter().all(|t| {
                let p = t.map(|u| self.pts[u]);
                let a2 = (p[1] - p[0]).cross(p[2] - p[0]);
                let s = (p[1] - p[0]).norm_sq().max((p[2] - p[0]).norm_sq());
                a2 > T::lit(1e-12) * s
            });
            if !ok {
                continue;
            }
            self.tris[t0] = n0;
            self.tris[t1] = n1;
            touched[t0] = true;
            touched[t1] = true;
            count += 1;
        }
        count
    }

    fn smooth_pass<F>(&mut self, relax: T, field: &F) -> Result<usize>
    where
        F: Fn(Vec2<T>) -> Result<Sym2<T>>,
    {
        let topo = self.topology();
        let mut moves = 0;
        for v in 0..self.pts.len() {
            if self.loc[v] == Loc::Fixed {
                continue;
            }
            let ball = topo.ball(v);
            let mut nbrs: Vec<usize> = ball.iter().flat_map(|&k| self.tris[k]).collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            let p = self.pts[v];
            let mut target = Vec2::zero();
            let mut n = 0usize;
            for &u in &nbrs {
                if u == v {
                    continue;
                }
                let l = self.length(v, u);
                if !(l > T::zero()) {
                    continue;
                }
                let q = self.pts[u];
                target += q + (p - q).scale(T::one() / l);
                n += 1;
            }
            if n == 0 {
                continue;
            }
            target = target.scale(T::one() / T::from_usize_lossy(n));
            let mut np = p + (target - p).scale(relax);
            if let Loc::Side(s) = self.loc[v] {
                snap(&mut np, s);
            }
            if (np - p).norm_sq() == T::zero() {
                continue;
            }
            let nm = field(np)?;
            let mut old_q = T::infinity();
            let mut new_q = T::infinity();
            let mut valid = true;
            for &k in ball {
                let tri = self.tris[k];
                old_q = old_q.min(self.tri_quality(tri));
                let pts = tri.map(|u| if u == v { np } else { self.pts[u] });
                let ms = tri.map(|u| if u == v { nm } else { self.met[u] });
                let a2 = (pts[1] - pts[0]).cross(pts[2] - pts[0]);
                if !(a2 > T::zero()) {
                    valid = false;
                    break;
                }
                new_q = new_q.min(self.quality_of(pts, ms));
            }
            if valid && new_q >= old_q {
                self.pts[v] = np;
                self.met[v] = nm;
                moves += 1;
            }
        }
        Ok(moves)
    }

    fn into_mesh(self, original: &Mesh<T>) -> Result<Mesh<T>> {
        let topo = self.topology();
        let mut boundary = Vec::new();
        let orig_b = original.boundary_edges();
        for &(a, b, t0, t1) in &topo.edges {
            if t1 != NONE {
                continue;
            }
            let _ = t0;
            let mid = (self.pts[a] + self.pts[b]).scale(T::lit(0.5));
            // tag from the input boundary edge containing the midpoint
            let mut best = (T::infinity(), BoundaryKind::Unclassified);
            for be in orig_b {
                let p = original.vertex(be.v[0]);
                let q = original.vertex(be.v[1]);
                let d = q - p;
                let s = ((mid - p).dot(d) / d.norm_sq()).max(T::zero()).min(T::one());
                let dist = (p + d.scale(s) - mid).norm();
                if dist < best.0 {
                    best = (dist, be.kind);
                }
            }
            boundary.push(([a, b], best.1));
        }
        let area: T = self
            .tris
            .iter()
            .map(|t| {
                let p = t.map(|u| self.pts[u]);
                (p[1] - p[0]).cross(p[2] - p[0]) * T::lit(0.5)
            })
            .sum();
        let target = original.total_area();
        if (area - target).abs() > T::lit(1e-10) * target.max(T::one()) {
            return Err(Error::Remesh {
                x: f64::NAN,
                y: f64::NAN,
                reason: format!("area drifted to {area} from {target}"),
            });
        }
        Mesh::new(self.pts, self.tris, boundary).map_err(|e| Error::Remesh {
            x: f64::NAN,
            y: f64::NAN,
            reason: e.to_string(),
        })
    }
}

/// Puts a point exactly on side `s` of the unit square.
fn snap<T: Real>(p: &mut Vec2<T>, s: u8) {
    match s {
        0 => p.y = T::zero(),
        1 => p.x = T::one(),
        2 => p.y = T::one(),
        _ => p.x = T::zero(),
    }
}

/// Shape quality in the metric `m`: `4√3·|K|_M / Σ ℓ_M²`, 1 for a triangle
/// equilateral in the metric, negative when inverted.
fn quality<T: Real>(p: [Vec2<T>; 3], m: Sym2<T>) -> T {
    let area = (p[1] - p[0]).cross(p[2] - p[0]) * T::lit(0.5) * m.det().max(T::zero()).sqrt();
    let s = m.quad(p[1] - p[0]) + m.quad(p[2] - p[1]) + m.quad(p[0] - p[2]);
    if !(s > T::zero()) {
        return T::zero();
    }
    T::lit(4.0 * 3f64.sqrt()) * area / s
}

/// Upper factor `U = [[u00, u01], [0, u11]]` with `UᵀU = m`, as `[u00, u01, u11]`.
fn cholesky_upper<T: Real>(m: Sym2<T>) -> Option<[T; 3]> {
    if !(m.xx > T::zero()) {
        return None;
    }
    let u00 = m.xx.sqrt();
    let u01 = m.xy / u00;
    let r = m.yy - u01 * u01;
    if !(r > T::zero()) {
        return None;
    }
    Some([u00, u01, r.sqrt()])
}

/// Positive when `d` lies inside the circle through counterclockwise `a, b, c`.
fn incircle<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, d: Vec2<T>) -> T {
    let (ax, ay) = (a.x - d.x, a.y - d.y);
    let (bx, by) = (b.x - d.x, b.y - d.y);
    let (cx, cy) = (c.x - d.x, c.y - d.y);
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx)
}
