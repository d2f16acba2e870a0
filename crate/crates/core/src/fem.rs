//! P1 assembly of the diffusion forms and solution of the stabilized APS
//! block system and of the single-field P-model.

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::mesh::{element_geometry, BoundaryKind, Mesh, NONE};
use crate::problem::{ExactSolution, Problem};
use crate::quadrature::TriangleRule;
use crate::scalar::Real;
use crate::sparse::{condition_estimate, norm2, rcm_ordering, solve_refined, CsrMatrix, SkylineLu};

/// Residual target relative to the load vector norm.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Iterations of the condition-number power method.
pub const CONDITION_ITERATIONS: usize = 50;

/// Gradients of the three barycentric functions and the area.
pub fn barycentric_gradients<T: Real>(p: [Vec2<T>; 3]) -> ([Vec2<T>; 3], T) {
    let area2 = (p[1] - p[0]).cross(p[2] - p[0]);
    let g = [0, 1, 2].map(|i| {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        Vec2::new(a.y - b.y, b.x - a.x).scale(T::one() / area2)
    });
    (g, area2 * T::lit(0.5))
}

fn require_classified<T: Real>(mesh: &Mesh<T>) -> Result<()> {
    if mesh
        .boundary_edges()
        .iter()
        .any(|e| e.kind == BoundaryKind::Unclassified)
    {
        return Err(Error::InvalidArgument(
            "mesh boundary is not classified; call Mesh::classify_boundary first".into(),
        ));
    }
    Ok(())
}

/// Tags the boundary of `mesh` with the field of `problem`.
pub fn classify<T: Real>(mesh: &Mesh<T>, problem: &Problem<T>) -> Result<Mesh<T>> {
    mesh.classify_boundary(|p| problem.eval_b(p))
}

/// Vertex-level stiffness matrix `∫_K ∇λ_aᵀ C(x) ∇λ_b` where the element
/// coefficient is `weight(k) · C(x)`.
pub fn assemble_weighted<T, F, W>(
    mesh: &Mesh<T>,
    rule: &TriangleRule,
    mut coef: F,
    mut weight: W,
) -> Result<CsrMatrix<T>>
where
    T: Real,
    F: FnMut(Vec2<T>) -> Result<Mat2<T>>,
    W: FnMut(usize) -> T,
{
    let (off, cols) = mesh.vertex_graph();
    let mut m = CsrMatrix::from_pattern(mesh.num_vertices(), off, cols);
    for k in 0..mesh.num_triangles() {
        let p = mesh.triangle_points(k);
        let (g, _) = barycentric_gradients(p);
        let mut c = Mat2::zero();
        for (x, w) in rule.on(p) {
            c = c + coef(x)?.scale(w);
        }
        let c = c.scale(weight(k));
        let tri = mesh.triangle(k);
        for a in 0..3 {
            let cg = c.transpose().mul_vec(g[a]);
            for b in 0..3 {
                m.add(tri[a], tri[b], cg.dot(g[b]));
            }
        }
    }
    Ok(m)
}

/// `∫ A∥ (b·∇u)(b·∇v)`.
pub fn assemble_parallel_form<T: Real>(mesh: &Mesh<T>, problem: &Problem<T>) -> Result<CsrMatrix<T>> {
    assemble_weighted(
        mesh,
        &TriangleRule::degree2(),
        |x| Ok(problem.coeffs.pieces(&problem.field, x)?.par),
        |_| T::one(),
    )
}

/// `∫ 𝔸∇u·∇v`, or `∫ 𝔸_ε∇u·∇v` with `use_eps`.
pub fn assemble_full_form<T: Real>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    use_eps: bool,
) -> Result<CsrMatrix<T>> {
    assemble_weighted(
        mesh,
        &TriangleRule::degree2(),
        |x| problem.coeffs.full_diffusion_matrix(&problem.field, x, use_eps),
        |_| T::one(),
    )
}

/// Element size `h_K` used by the stabilization term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StabilizationSize {
    /// `h_K = √2·λ_{2,K}`: the reference diameter times the smallest
    /// stretching amplitude. Equals the longest edge on isotropic right
    /// triangles and follows the short side on stretched ones.
    #[default]
    Stretch,
    /// `h_K` = longest edge.
    Diameter,
}

impl StabilizationSize {
    pub fn size<T: Real>(self, mesh: &Mesh<T>, k: usize) -> Result<T> {
        Ok(match self {
            Self::Diameter => mesh.diameter(k),
            Self::Stretch => element_geometry(mesh, k)?.lambda2 * T::SQRT_2(),
        })
    }
}

impl std::str::FromStr for StabilizationSize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stretch" => Ok(Self::Stretch),
            "diameter" => Ok(Self::Diameter),
            _ => Err(Error::InvalidArgument(format!(
                "unknown stabilization size '{s}' (expected stretch or diameter)"
            ))),
        }
    }
}

/// `Σ_K h_K² ∫_K 𝔸∇u·∇v` with the default [`StabilizationSize`].
pub fn assemble_stabilization<T: Real>(mesh: &Mesh<T>, problem: &Problem<T>) -> Result<CsrMatrix<T>> {
    assemble_stabilization_with(mesh, problem, StabilizationSize::default())
}

pub fn assemble_stabilization_with<T: Real>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    size: StabilizationSize,
) -> Result<CsrMatrix<T>> {
    let h2: Vec<T> = (0..mesh.num_triangles())
        .map(|k| size.size(mesh, k).map(|h| h * h))
        .collect::<Result<_>>()?;
    assemble_weighted(
        mesh,
        &TriangleRule::degree2(),
        |x| problem.coeffs.full_diffusion_matrix(&problem.field, x, false),
        |k| h2[k],
    )
}

/// `(f, λ_a)` with `f` evaluated exactly at the quadrature points.
pub fn assemble_load<T: Real>(mesh: &Mesh<T>, problem: &Problem<T>) -> Result<Vec<T>> {
    let rule = TriangleRule::degree2();
    let mut f = vec![T::zero(); mesh.num_vertices()];
    for k in 0..mesh.num_triangles() {
        let p = mesh.triangle_points(k);
        let tri = mesh.triangle(k);
        for ((x, w), l) in rule.on(p).into_iter().zip(&rule.bary) {
            let fx = problem.source_at(x)? * w;
            for a in 0..3 {
                f[tri[a]] += fx * T::lit(l[a]);
            }
        }
    }
    Ok(f)
}

/// Map between mesh vertices and unknowns after Dirichlet elimination.
#[derive(Clone, Debug)]
pub struct DofMap {
    /// Vertex → position among free vertices, or [`NONE`] for Dirichlet.
    pub position: Vec<usize>,
    /// Position → vertex.
    pub vertex: Vec<usize>,
    /// Unknowns per free vertex (1 for the P-model, 2 for APS).
    pub block: usize,
}

impl DofMap {
    /// Free vertices in reverse Cuthill–McKee order.
    pub fn new<T: Real>(mesh: &Mesh<T>, block: usize) -> Result<Self> {
        let dir = mesh.dirichlet_vertices();
        if !dir.iter().any(|&d| d) {
            return Err(Error::MissingDirichlet);
        }
        let nv = mesh.num_vertices();
        let mut local = vec![NONE; nv];
        let mut free = Vec::new();
        for v in 0..nv {
            if !dir[v] {
                local[v] = free.len();
                free.push(v);
            }
        }
        let (off, cols) = mesh.vertex_graph();
        let mut soff = vec![0];
        let mut scols = Vec::new();
        for &v in &free {
            scols.extend(
                cols[off[v]..off[v + 1]]
                    .iter()
                    .filter(|&&u| local[u] != NONE)
                    .map(|&u| local[u]),
            );
            soff.push(scols.len());
        }
        let order = rcm_ordering(&soff, &scols);
        let mut position = vec![NONE; nv];
        let vertex: Vec<usize> = order.iter().map(|&l| free[l]).collect();
        for (pos, &v) in vertex.iter().enumerate() {
            position[v] = pos;
        }
        Ok(Self {
            position,
            vertex,
            block,
        })
    }

    pub fn num_free(&self) -> usize {
        self.vertex.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.block * self.vertex.len()
    }

    /// Row of component `c` at vertex `v`, if free.
    #[inline]
    pub fn dof(&self, v: usize, c: usize) -> Option<usize> {
        let p = self.position[v];
        (p != NONE).then(|| self.block * p + c)
    }
}

/// Assembled linear system after Dirichlet elimination.
#[derive(Clone, Debug)]
pub struct SparseSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
    pub dof_map: DofMap,
}

/// Knobs for the APS solve.
#[derive(Clone, Copy, Debug)]
pub struct ApsOptions<T> {
    /// Multiplier of the stabilization term (1 for the scheme itself).
    pub stabilization_scale: T,
    pub stabilization_size: StabilizationSize,
    pub refinement_steps: usize,
    pub condition_estimate: bool,
}

impl<T: Real> Default for ApsOptions<T> {
    fn default() -> Self {
        Self {
            stabilization_scale: T::one(),
            stabilization_size: StabilizationSize::default(),
            refinement_steps: 2,
            condition_estimate: false,
        }
    }
}

fn free_pattern(mesh_graph: &(Vec<usize>, Vec<usize>), map: &DofMap) -> (Vec<usize>, Vec<usize>) {
    let (off, cols) = mesh_graph;
    let bs = map.block;
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    for &v in &map.vertex {
        let mut nb: Vec<usize> = cols[off[v]..off[v + 1]]
            .iter()
            .filter(|&&u| map.position[u] != NONE)
            .map(|&u| map.position[u])
            .collect();
        nb.sort_unstable();
        for _ in 0..bs {
            for &p in &nb {
                for c in 0..bs {
                    col_idx.push(bs * p + c);
                }
            }
            row_ptr.push(col_idx.len());
        }
    }
    (row_ptr, col_idx)
}

/// Copies the free part of vertex matrix `m`, scaled by `s`, into block
/// `(r, c)` of `out`.
fn scatter_block<T: Real>(out: &mut CsrMatrix<T>, m: &CsrMatrix<T>, map: &DofMap, r: usize, c: usize, s: T) {
    for &v in &map.vertex {
        let i = map.dof(v, r).unwrap();
        let (cols, vals) = m.row(v);
        for (&u, &a) in cols.iter().zip(vals) {
            if let Some(j) = map.dof(u, c) {
                out.add(i, j, a * s);
            }
        }
    }
}

/// Stabilized APS block system in interleaved `(φ, q)` ordering:
/// row 1 `a(φ,v) + (1−ε) a∥(q,v) = (f,v)`,
/// row 2 `a∥(φ,w) − ε a∥(q,w) − stab(q,w) = 0`.
pub fn assemble_aps_system<T: Real>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    opts: &ApsOptions<T>,
) -> Result<SparseSystem<T>> {
    require_classified(mesh)?;
    let map = DofMap::new(mesh, 2)?;
    let eps = problem.eps();
    let full = assemble_full_form(mesh, problem, false)?;
    let par = assemble_parallel_form(mesh, problem)?;
    let stab = assemble_stabilization_with(mesh, problem, opts.stabilization_size)?;
    let load = assemble_load(mesh, problem)?;
    let (rp, ci) = free_pattern(&mesh.vertex_graph(), &map);
    let mut matrix = CsrMatrix::from_pattern(map.num_dofs(), rp, ci);
    scatter_block(&mut matrix, &full, &map, 0, 0, T::one());
    scatter_block(&mut matrix, &par, &map, 0, 1, T::one() - eps);
    scatter_block(&mut matrix, &par, &map, 1, 0, T::one());
    scatter_block(&mut matrix, &par, &map, 1, 1, -eps);
    scatter_block(&mut matrix, &stab, &map, 1, 1, -opts.stabilization_scale);
    let mut rhs = vec![T::zero(); map.num_dofs()];
    for &v in &map.vertex {
        rhs[map.dof(v, 0).unwrap()] = load[v];
    }
    Ok(SparseSystem {
        matrix,
        rhs,
        dof_map: map,
    })
}

/// Single-field P-model system with matrix `𝔸_ε`.
pub fn assemble_p_system<T: Real>(mesh: &Mesh<T>, problem: &Problem<T>) -> Result<SparseSystem<T>> {
    require_classified(mesh)?;
    let map = DofMap::new(mesh, 1)?;
    let full = assemble_full_form(mesh, problem, true)?;
    let load = assemble_load(mesh, problem)?;
    let (rp, ci) = free_pattern(&mesh.vertex_graph(), &map);
    let mut matrix = CsrMatrix::from_pattern(map.num_dofs(), rp, ci);
    scatter_block(&mut matrix, &full, &map, 0, 0, T::one());
    let rhs = map.vertex.iter().map(|&v| load[v]).collect();
    Ok(SparseSystem {
        matrix,
        rhs,
        dof_map: map,
    })
}

/// Solver diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverStats<T> {
    pub dofs: usize,
    pub nonzeros: usize,
    pub envelope: usize,
    pub refinement_steps: usize,
    /// `‖b − A x‖`.
    pub residual: T,
    /// `‖f_h‖`.
    pub rhs_norm: T,
    pub min_pivot: T,
    pub condition: Option<T>,
}

impl<T: Real> SolverStats<T> {
    pub fn relative_residual(&self) -> T {
        if self.rhs_norm > T::zero() {
            self.residual / self.rhs_norm
        } else {
            self.residual
        }
    }
}

#[derive(Clone, Debug)]
pub struct ApsSolution<T> {
    pub phi: Vec<T>,
    pub q: Vec<T>,
    pub eps: T,
    pub stats: SolverStats<T>,
}

impl<T: Real> ApsSolution<T> {
    /// Nodal values of `p = φ − ε q`.
    pub fn p(&self) -> Vec<T> {
        self.phi.iter().zip(&self.q).map(|(&f, &q)| f - self.eps * q).collect()
    }
}

#[derive(Clone, Debug)]
pub struct PSolution<T> {
    pub phi: Vec<T>,
    pub stats: SolverStats<T>,
}

fn factor_and_solve<T: Real>(
    factor_matrix: &CsrMatrix<T>,
    residual_matrix: &CsrMatrix<T>,
    rhs: &[T],
    row_sign: &[T],
    refinement_steps: usize,
    condition: bool,
) -> Result<(Vec<T>, SolverStats<T>)> {
    let n = factor_matrix.n();
    let lu = SkylineLu::factor(factor_matrix, (0..n).collect())?;
    let b: Vec<T> = rhs.iter().zip(row_sign).map(|(&b, &s)| b * s).collect();
    let rhs_norm = norm2(rhs);
    let target = T::lit(RESIDUAL_TOLERANCE) * rhs_norm;
    let mut steps = refinement_steps;
    let (mut x, _) = solve_refined(factor_matrix, &lu, &b, steps);
    let mut residual = residual_norm(residual_matrix, &x, rhs);
    while residual > target && steps < refinement_steps + 4 {
        let r: Vec<T> = {
            let ax = factor_matrix.mul_vec(&x);
            b.iter().zip(&ax).map(|(&bi, &a)| bi - a).collect()
        };
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += *d;
        }
        steps += 1;
        residual = residual_norm(residual_matrix, &x, rhs);
    }
    let cond = condition.then(|| condition_estimate(factor_matrix, &lu, CONDITION_ITERATIONS));
    Ok((
        x,
        SolverStats {
            dofs: n,
            nonzeros: factor_matrix.nnz(),
            envelope: lu.envelope_size(),
            refinement_steps: steps,
            residual,
            rhs_norm,
            min_pivot: lu.min_pivot(),
            condition: cond,
        },
    ))
}

fn residual_norm<T: Real>(a: &CsrMatrix<T>, x: &[T], b: &[T]) -> T {
    let ax = a.mul_vec(x);
    norm2(&b.iter().zip(&ax).map(|(&bi, &a)| bi - a).collect::<Vec<_>>())
}

pub fn solve_aps<T: Real>(mesh: &Mesh<T>, problem: &Problem<T>) -> Result<ApsSolution<T>> {
    solve_aps_with(mesh, problem, &ApsOptions::default())
}

/// Solves the APS system. The factorization works on the system with its
/// second block row negated, whose symmetric part is positive definite, so
/// the LU needs no pivoting.
pub fn solve_aps_with<T: Real>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    opts: &ApsOptions<T>,
) -> Result<ApsSolution<T>> {
    let sys = assemble_aps_system(mesh, problem, opts)?;
    let n = sys.matrix.n();
    let sign: Vec<T> = (0..n)
        .map(|i| if i % 2 == 0 { T::one() } else { -T::one() })
        .collect();
    let mut scaled = sys.matrix.clone();
    scale_rows(&mut scaled, &sign);
    let (x, stats) = factor_and_solve(
        &scaled,
        &sys.matrix,
        &sys.rhs,
        &sign,
        opts.refinement_steps,
        opts.condition_estimate,
    )?;
    let nv = mesh.num_vertices();
    let mut phi = vec![T::zero(); nv];
    let mut q = vec![T::zero(); nv];
    for &v in &sys.dof_map.vertex {
        phi[v] = x[sys.dof_map.dof(v, 0).unwrap()];
        q[v] = x[sys.dof_map.dof(v, 1).unwrap()];
    }
    Ok(ApsSolution {
        phi,
        q,
        eps: problem.eps(),
        stats,
    })
}

fn scale_rows<T: Real>(m: &mut CsrMatrix<T>, s: &[T]) {
    let mut trip = Vec::with_capacity(m.nnz());
    for i in 0..m.n() {
        let (c, v) = m.row(i);
        for (&j, &a) in c.iter().zip(v) {
            trip.push((i, j, a * s[i]));
        }
    }
    *m = CsrMatrix::from_triplets(m.n(), &trip);
}

/// Direct solve of the P-model with a condition estimate.
pub fn solve_p_direct<T: Real>(mesh: &Mesh<T>, problem: &Problem<T>) -> Result<PSolution<T>> {
    let sys = assemble_p_system(mesh, problem)?;
    let ones = vec![T::one(); sys.matrix.n()];
    let (x, stats) = factor_and_solve(&sys.matrix, &sys.matrix, &sys.rhs, &ones, 2, true)?;
    let mut phi = vec![T::zero(); mesh.num_vertices()];
    for &v in &sys.dof_map.vertex {
        phi[v] = x[sys.dof_map.dof(v, 0).unwrap()];
    }
    Ok(PSolution { phi, stats })
}

/// Gradient of the P1 interpolant of `u` on triangle `k`.
pub fn element_gradient<T: Real>(mesh: &Mesh<T>, k: usize, u: &[T]) -> Vec2<T> {
    let (g, _) = barycentric_gradients(mesh.triangle_points(k));
    let t = mesh.triangle(k);
    g[0].scale(u[t[0]]) + g[1].scale(u[t[1]]) + g[2].scale(u[t[2]])
}

/// `‖∇(u_h − u)‖_{L²}` and `‖∇u_h‖_{L²}` with a degree-4 rule.
pub fn h1_error_parts<T: Real>(
    mesh: &Mesh<T>,
    sol: &[T],
    exact_grad: impl Fn(Vec2<T>) -> Vec2<T>,
) -> (T, T) {
    let rule = TriangleRule::degree4();
    let mut err = T::zero();
    let mut norm = T::zero();
    for k in 0..mesh.num_triangles() {
        let gh = element_gradient(mesh, k, sol);
        norm += gh.norm_sq() * mesh.area(k);
        for (x, w) in rule.on(mesh.triangle_points(k)) {
            err += (gh - exact_grad(x)).norm_sq() * w;
        }
    }
    (err.sqrt(), norm.sqrt())
}

/// `‖∇(φ_h − φ)‖ / ‖∇φ_h‖`.
pub fn h1_relative_error<T: Real>(
    mesh: &Mesh<T>,
    sol: &[T],
    exact: &dyn ExactSolution<T>,
) -> Result<T> {
    let (e, n) = h1_error_parts(mesh, sol, |x| exact.grad_phi(x));
    if !(n > T::zero()) {
        return Err(Error::ZeroDenominator("discrete gradient norm is zero".into()));
    }
    Ok(e / n)
}

/// Nodal interpolant of a function.
pub fn interpolate<T: Real>(mesh: &Mesh<T>, f: impl Fn(Vec2<T>) -> T) -> Vec<T> {
    mesh.vertices().iter().map(|&p| f(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;
    use crate::problem::{AnisotropyField, CaseKind, Coefficients, Source};

    fn axis_problem(eps: f64) -> Problem<f64> {
        Problem {
            field: AnisotropyField::constant(Vec2::new(1.0, 0.0)).unwrap(),
            coeffs: Coefficients::unit(eps).unwrap(),
            source: Source::Function(std::sync::Arc::new(|_| 1.0)),
            exact: None,
        }
    }

    fn reference_mesh() -> Mesh<f64> {
        Mesh::from_triangles(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn reference_element_parallel_block() {
        let m = assemble_parallel_form(&reference_mesh(), &axis_problem(1.0)).unwrap();
        let want = [[0.5, -0.5, 0.0], [-0.5, 0.5, 0.0], [0.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - want[i][j]).abs() < 1e-15);
            }
        }
        let s = assemble_stabilization(&reference_mesh(), &axis_problem(1.0)).unwrap();
        let a = assemble_full_form(&reference_mesh(), &axis_problem(1.0), false).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((s.get(i, j) - 2.0 * a.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gradient_of_linear_interpolant() {
        let mesh: Mesh<f64> = build_structured_mesh(3, 3, 1.0 / 3.0, 1.0 / 3.0).unwrap();
        let u = interpolate(&mesh, |p| 2.0 * p.x - 3.0 * p.y + 1.0);
        for k in 0..mesh.num_triangles() {
            let g = element_gradient(&mesh, k, &u);
            assert!((g.x - 2.0).abs() < 1e-12 && (g.y + 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let mesh: Mesh<f64> = build_structured_mesh(4, 4, 0.25, 0.25).unwrap();
        let a = assemble_full_form(&mesh, &axis_problem(1.0), false).unwrap();
        for i in 0..a.n() {
            let (_, v) = a.row(i);
            assert!(v.iter().sum::<f64>().abs() < 1e-13);
        }
        assert!(a.asymmetry() < 1e-15);
    }

    #[test]
    fn p_model_scales_parallel_part() {
        let mesh: Mesh<f64> = build_structured_mesh(4, 4, 0.25, 0.25).unwrap();
        let pr = axis_problem(1e-10);
        let a = assemble_full_form(&mesh, &pr, true).unwrap();
        let par = assemble_parallel_form(&mesh, &pr).unwrap();
        let full = assemble_full_form(&mesh, &pr, false).unwrap();
        for i in 0..a.n() {
            for &j in a.row(i).0 {
                let want = par.get(i, j) * 1e10 + (full.get(i, j) - par.get(i, j));
                assert!((a.get(i, j) - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn aps_blocks_follow_layout() {
        let mesh = classify(
            &build_structured_mesh(5, 5, 0.2, 0.2).unwrap(),
            &axis_problem(0.3),
        )
        .unwrap();
        let pr = axis_problem(0.3);
        let sys = assemble_aps_system(&mesh, &pr, &ApsOptions::default()).unwrap();
        let par = assemble_parallel_form(&mesh, &pr).unwrap();
        let map = &sys.dof_map;
        for &v in &map.vertex {
            for &u in par.row(v).0 {
                if let (Some(i), Some(j)) = (map.dof(v, 0), map.dof(u, 1)) {
                    let (i1, j0) = (map.dof(v, 1).unwrap(), map.dof(u, 0).unwrap());
                    assert!((sys.matrix.get(i, j) - 0.7 * par.get(v, u)).abs() < 1e-14);
                    assert!((sys.matrix.get(i1, j0) - par.get(v, u)).abs() < 1e-14);
                }
            }
        }
        assert_eq!(sys.rhs.len(), sys.matrix.n());
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let mut pr = axis_problem(1e-4);
        pr.source = Source::Zero;
        let mesh = classify(&build_structured_mesh(4, 4, 0.25, 0.25).unwrap(), &pr).unwrap();
        let s = solve_aps(&mesh, &pr).unwrap();
        assert!(s.phi.iter().chain(&s.q).all(|&v| v == 0.0));
    }

    #[test]
    fn missing_dirichlet_is_rejected() {
        let pr = axis_problem(1.0);
        let mesh = build_structured_mesh(2, 2, 0.5, 0.5)
            .unwrap()
            .with_boundary_kinds(|_| BoundaryKind::Inflow);
        assert!(matches!(solve_aps(&mesh, &pr), Err(Error::MissingDirichlet)));
        let raw = build_structured_mesh(2, 2, 0.5, 0.5).unwrap();
        assert!(matches!(solve_aps(&raw, &pr), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn smooth_case_first_mesh() {
        let pr = Problem::manufactured(CaseKind::Smooth, 0.0, 1.0).unwrap();
        let mesh = classify(&build_structured_mesh(10, 10, 0.1, 0.1).unwrap(), &pr).unwrap();
        let s = solve_aps(&mesh, &pr).unwrap();
        assert!(s.stats.relative_residual() < 1e-8);
        let e: f64 = h1_relative_error(&mesh, &s.phi, pr.exact.as_deref().unwrap()).unwrap();
        assert!((e - 0.15).abs() < 0.3 * 0.15, "error {e}");
    }
}
