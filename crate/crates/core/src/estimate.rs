//! Gradient recovery, anisotropic residual indicators and effectivity
//! indices.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fem::{element_gradient, ApsSolution};
use crate::linalg::{Sym2, Vec2};
use crate::mesh::{element_geometry, BoundaryKind, ElementGeometry, Mesh, NONE};
use crate::problem::{ExactSolution, Problem};
use crate::quadrature::{edge_gauss2, TriangleRule};
use crate::scalar::Real;

/// Area-weighted vertex recovery of a piecewise-constant gradient and the
/// ZZ difference field.
#[derive(Clone, Debug)]
pub struct RecoveredGradient<T> {
    /// Raw gradient per element.
    pub element_gradient: Vec<Vec2<T>>,
    /// `Π_h ∇u_h` per vertex.
    pub vertex_gradient: Vec<Vec2<T>>,
}

impl<T: Real> RecoveredGradient<T> {
    /// Values of `η^ZZ = ∇u_h − Π_h∇u_h` at the three vertices of `k`.
    pub fn zz_at_vertices(&self, mesh: &Mesh<T>, k: usize) -> [Vec2<T>; 3] {
        let t = mesh.triangle(k);
        t.map(|v| self.element_gradient[k] - self.vertex_gradient[v])
    }
}

pub fn recover_gradient<T: Real>(mesh: &Mesh<T>, field: &[T]) -> RecoveredGradient<T> {
    let element_gradient: Vec<Vec2<T>> = (0..mesh.num_triangles())
        .map(|k| element_gradient(mesh, k, field))
        .collect();
    let vertex_gradient = (0..mesh.num_vertices())
        .map(|v| {
            let mut sum = Vec2::zero();
            let mut area = T::zero();
            for &k in mesh.vertex_triangles(v) {
                let a = mesh.area(k);
                sum = sum + element_gradient[k].scale(a);
                area += a;
            }
            sum.scale(T::one() / area)
        })
        .collect();
    RecoveredGradient {
        element_gradient,
        vertex_gradient,
    }
}

/// `G̃_K = ∫_K η^ZZ ⊗ η^ZZ`, exact for the linear field.
pub fn gradient_matrix<T: Real>(mesh: &Mesh<T>, rg: &RecoveredGradient<T>, k: usize) -> Sym2<T> {
    let z = rg.zz_at_vertices(mesh, k);
    let s = z[0] + z[1] + z[2];
    let g = Sym2::outer(z[0]) + Sym2::outer(z[1]) + Sym2::outer(z[2]) + Sym2::outer(s);
    g.scale(mesh.area(k) / T::lit(12.0))
}

/// `λ1² r1ᵀ G r1 + λ2² r2ᵀ G r2`.
pub fn stretched_quad<T: Real>(geo: &ElementGeometry<T>, g: &Sym2<T>) -> T {
    geo.lambda1 * geo.lambda1 * g.quad(geo.r1) + geo.lambda2 * geo.lambda2 * g.quad(geo.r2)
}

/// Per-element indicator data.
#[derive(Clone, Debug)]
pub struct ElementIndicator<T> {
    pub geometry: ElementGeometry<T>,
    pub rho_phi: T,
    pub rho_q: T,
    pub g_phi: Sym2<T>,
    pub g_q: Sym2<T>,
    /// `η^A_K`.
    pub eta_full: T,
    /// `η^SA_K`.
    pub eta_simpl: T,
}

impl<T: Real> ElementIndicator<T> {
    /// `ρ_φ² G̃(φ) + ρ_q² G̃(q)`, or the `φ` part alone.
    pub fn weighted_matrix(&self, simplified: bool) -> Sym2<T> {
        let w = self.g_phi.scale(self.rho_phi * self.rho_phi);
        if simplified {
            w
        } else {
            w + self.g_q.scale(self.rho_q * self.rho_q)
        }
    }
}

/// Effectivity indices; `None` when the true error vanishes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Effectivity<T> {
    pub zz: Option<T>,
    pub full: Option<T>,
    pub simplified: Option<T>,
    /// `‖∇(φ_h − φ)‖ / ‖∇φ_h‖`.
    pub relative_error: Option<T>,
}

/// Nodal indicators of one family (full or simplified).
#[derive(Clone, Debug)]
pub struct NodalIndicators<T> {
    /// `η_P⁴ = Σ_{K∋P} η_K⁴`.
    pub eta4: Vec<T>,
    /// `(η_{1,P}⁴, η_{2,P}⁴)`.
    pub dir4: Vec<[T; 2]>,
}

#[derive(Clone, Debug)]
pub struct IndicatorReport<T> {
    pub elements: Vec<ElementIndicator<T>>,
    pub nodal_full: NodalIndicators<T>,
    pub nodal_simpl: NodalIndicators<T>,
    pub eta_global_full: T,
    pub eta_global_simpl: T,
    pub eta_global_zz: T,
    /// `‖∇φ_h‖_{L²}`.
    pub grad_norm: T,
    pub effectivity: Option<Effectivity<T>>,
}

impl<T: Real> IndicatorReport<T> {
    pub fn nodal(&self, simplified: bool) -> &NodalIndicators<T> {
        if simplified {
            &self.nodal_simpl
        } else {
            &self.nodal_full
        }
    }

    pub fn global(&self, simplified: bool) -> T {
        if simplified {
            self.eta_global_simpl
        } else {
            self.eta_global_full
        }
    }

    /// `η / ‖∇φ_h‖`.
    pub fn relative_global(&self, simplified: bool) -> T {
        self.global(simplified) / self.grad_norm
    }

    /// Largest relative deviation of `Σ_P η_P⁴ = 3 Σ_K η_K⁴` over both
    /// families.
    pub fn nodal_identity_defect(&self) -> T {
        let mut worst = T::zero();
        for simplified in [false, true] {
            let lhs: T = self.nodal(simplified).eta4.iter().copied().sum();
            let rhs: T = self
                .elements
                .iter()
                .map(|e| {
                    let v = if simplified { e.eta_simpl } else { e.eta_full };
                    v.powi(4)
                })
                .sum::<T>()
                * T::lit(3.0);
            if rhs > T::zero() {
                worst = worst.max((lhs - rhs).abs() / rhs);
            }
        }
        worst
    }

    /// First vertex violating `η1⁴ + η2⁴ ≤ η_P⁴ ≤ 2(η1⁴ + η2⁴)`, if any.
    pub fn sandwich_violation(&self, rel_tol: T) -> Option<usize> {
        for simplified in [false, true] {
            let n = self.nodal(simplified);
            for (v, (e, d)) in n.eta4.iter().zip(&n.dir4).enumerate() {
                let s = d[0] + d[1];
                let slack = rel_tol * s.max(*e);
                if s > *e + slack || *e > T::lit(2.0) * s + slack {
                    return Some(v);
                }
            }
        }
        None
    }

    /// One CSV row per element.
    pub fn write_element_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{ELEMENT_CSV_HEADER}")?;
        for (k, e) in self.elements.iter().enumerate() {
            writeln!(
                out,
                "{k},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                e.eta_full.as_f64(),
                e.eta_simpl.as_f64(),
                e.rho_phi.as_f64(),
                e.rho_q.as_f64(),
                e.geometry.lambda1.as_f64(),
                e.geometry.lambda2.as_f64(),
                e.geometry.aspect_ratio().as_f64(),
            )?;
        }
        Ok(())
    }
}

pub const ELEMENT_CSV_HEADER: &str = "element,eta_full,eta_simpl,rho_phi,rho_q,lambda1,lambda2,aspect";

/// Squared edge-jump norms per element for the three flux families of the
/// residual weights.
struct EdgeJumps<T> {
    /// `‖[𝔸∇φ_h·n]‖²`.
    full_phi: Vec<T>,
    /// `‖[A∥∇∥q_h·n]‖²`.
    par_q: Vec<T>,
    /// `‖[A∥∇∥(φ_h − εq_h)·n]‖²`.
    par_p: Vec<T>,
    /// `‖𝔸∇q_h·n‖²` over `∂K`, one-sided.
    stab_q: Vec<T>,
}

fn edge_jumps<T: Real>(
    mesh: &Mesh<T>,
    problem: &Problem<T>,
    grad_phi: &[Vec2<T>],
    grad_q: &[Vec2<T>],
    eps: T,
) -> Result<EdgeJumps<T>> {
    let nt = mesh.num_triangles();
    let mut j = EdgeJumps {
        full_phi: vec![T::zero(); nt],
        par_q: vec![T::zero(); nt],
        par_p: vec![T::zero(); nt],
        stab_q: vec![T::zero(); nt],
    };
    let two = T::lit(2.0);
    for e in mesh.edges() {
        let a = mesh.vertex(e.v[0]);
        let b = mesh.vertex(e.v[1]);
        let d = b - a;
        let n = Vec2::new(d.y, -d.x).scale(T::one() / d.norm());
        let kind = e.boundary.map(|i| mesh.boundary_edges()[i].kind);
        for (x, w) in edge_gauss2(a, b) {
            let c = problem.coeffs.pieces(&problem.field, x)?;
            let full = c.full();
            let flux = |k: usize| {
                let gp = grad_phi[k];
                let gq = grad_q[k];
                [
                    full.mul_vec(gp).dot(n),
                    c.par.mul_vec(gq).dot(n),
                    c.par.mul_vec(gp - gq.scale(eps)).dot(n),
                ]
            };
            let [k0, k1] = e.tris;
            let jump = if k1 != NONE {
                let (f0, f1) = (flux(k0), flux(k1));
                [f0[0] - f1[0], f0[1] - f1[1], f0[2] - f1[2]]
            } else {
                match kind {
                    Some(BoundaryKind::Inflow) | Some(BoundaryKind::Outflow) => {
                        flux(k0).map(|f| -two * f)
                    }
                    _ => [T::zero(); 3],
                }
            };
            for &k in &e.tris {
                if k == NONE {
                    continue;
                }
                j.full_phi[k] += w * jump[0] * jump[0];
                j.par_q[k] += w * jump[1] * jump[1];
                j.par_p[k] += w * jump[2] * jump[2];
                let s = full.mul_vec(grad_q[k]).dot(n);
                j.stab_q[k] += w * s * s;
            }
        }
    }
    Ok(j)
}

/// `(ρ_φ, ρ_q)` for every element.
pub fn residual_weights<T: Real>(
    mesh: &Mesh<T>,
    sol: &ApsSolution<T>,
    problem: &Problem<T>,
) -> Result<Vec<(T, T)>> {
    let eps = sol.eps;
    let nt = mesh.num_triangles();
    let gphi: Vec<Vec2<T>> = (0..nt).map(|k| element_gradient(mesh, k, &sol.phi)).collect();
    let gq: Vec<Vec2<T>> = (0..nt).map(|k| element_gradient(mesh, k, &sol.q)).collect();
    let jumps = edge_jumps(mesh, problem, &gphi, &gq, eps)?;
    let rule = TriangleRule::degree4();
    let one_m = T::one() - eps;
    let half = T::lit(0.5);
    (0..nt)
        .map(|k| {
            let geo = element_geometry(mesh, k)?;
            let (mut r_phi, mut r_par, mut r_stab) = (T::zero(), T::zero(), T::zero());
            for (x, w) in rule.on(mesh.triangle_points(k)) {
                let c = problem.coeffs.pieces(&problem.field, x)?;
                let dfull = c.div_full();
                let dpar = c.div_par();
                let f = problem.source_at(x)?;
                let res = f + dfull.dot(gphi[k]) + one_m * dpar.dot(gq[k]);
                let par = dpar.dot(gphi[k] - gq[k].scale(eps));
                let stab = dfull.dot(gq[k]);
                r_phi += w * res * res;
                r_par += w * par * par;
                r_stab += w * stab * stab;
            }
            let inv = half / geo.lambda2.sqrt();
            let l2 = geo.lambda2;
            let rho_phi =
                r_phi.sqrt() + inv * (jumps.full_phi[k].sqrt() + one_m * jumps.par_q[k].sqrt());
            let rho_q = one_m
                * (r_par.sqrt()
                    + inv * jumps.par_p[k].sqrt()
                    + l2 * l2 * r_stab.sqrt()
                    + l2 * l2.sqrt() * jumps.stab_q[k].sqrt());
            Ok((rho_phi, rho_q))
        })
        .collect()
}

/// Full and simplified indicators, nodal values, globals and (when the
/// problem carries an exact solution) effectivity indices.
pub fn element_indicators<T: Real>(
    mesh: &Mesh<T>,
    sol: &ApsSolution<T>,
    problem: &Problem<T>,
) -> Result<IndicatorReport<T>> {
    let rho = residual_weights(mesh, sol, problem)?;
    let rg_phi = recover_gradient(mesh, &sol.phi);
    let rg_q = recover_gradient(mesh, &sol.q);
    let mut elements = Vec::with_capacity(mesh.num_triangles());
    let mut zz2 = T::zero();
    let mut grad2 = T::zero();
    for (k, &(rho_phi, rho_q)) in rho.iter().enumerate() {
        let geometry = element_geometry(mesh, k)?;
        let g_phi = gradient_matrix(mesh, &rg_phi, k);
        let g_q = gradient_matrix(mesh, &rg_q, k);
        zz2 += g_phi.trace();
        grad2 += rg_phi.element_gradient[k].norm_sq() * mesh.area(k);
        let s_phi = stretched_quad(&geometry, &g_phi).max(T::zero()).sqrt();
        let s_q = stretched_quad(&geometry, &g_q).max(T::zero()).sqrt();
        let simpl2 = rho_phi * s_phi;
        let full2 = simpl2 + rho_q * s_q;
        elements.push(ElementIndicator {
            geometry,
            rho_phi,
            rho_q,
            g_phi,
            g_q,
            eta_full: full2.sqrt(),
            eta_simpl: simpl2.sqrt(),
        });
    }
    let nodal_full = nodal_indicators(mesh, &elements, false);
    let nodal_simpl = nodal_indicators(mesh, &elements, true);
    let eta_global_full = elements.iter().map(|e| e.eta_full * e.eta_full).sum::<T>().sqrt();
    let eta_global_simpl = elements.iter().map(|e| e.eta_simpl * e.eta_simpl).sum::<T>().sqrt();
    let eta_global_zz = zz2.sqrt();
    let effectivity = match &problem.exact {
        Some(ex) => Some(effectivity(
            mesh,
            sol,
            problem,
            ex.as_ref(),
            [eta_global_zz, eta_global_full, eta_global_simpl],
            grad2.sqrt(),
        )?),
        None => None,
    };
    Ok(IndicatorReport {
        elements,
        nodal_full,
        nodal_simpl,
        eta_global_full,
        eta_global_simpl,
        eta_global_zz,
        grad_norm: grad2.sqrt(),
        effectivity,
    })
}

fn nodal_indicators<T: Real>(
    mesh: &Mesh<T>,
    elements: &[ElementIndicator<T>],
    simplified: bool,
) -> NodalIndicators<T> {
    let nv = mesh.num_vertices();
    let mut eta4 = vec![T::zero(); nv];
    let mut dir4 = vec![[T::zero(); 2]; nv];
    for (k, e) in elements.iter().enumerate() {
        let eta = if simplified { e.eta_simpl } else { e.eta_full };
        let e4 = eta.powi(4);
        let w = e.weighted_matrix(simplified);
        let g = &e.geometry;
        let d = [
            g.lambda1 * g.lambda1 * w.quad(g.r1),
            g.lambda2 * g.lambda2 * w.quad(g.r2),
        ];
        for v in mesh.triangle(k) {
            eta4[v] += e4;
            dir4[v][0] += d[0];
            dir4[v][1] += d[1];
        }
    }
    NodalIndicators { eta4, dir4 }
}

fn effectivity<T: Real>(
    mesh: &Mesh<T>,
    sol: &ApsSolution<T>,
    problem: &Problem<T>,
    exact: &dyn ExactSolution<T>,
    eta: [T; 3],
    grad_norm: T,
) -> Result<Effectivity<T>> {
    let rule = TriangleRule::degree4();
    let eps = sol.eps;
    let (mut e2, mut ea, mut eq) = (T::zero(), T::zero(), T::zero());
    for k in 0..mesh.num_triangles() {
        let gp = element_gradient(mesh, k, &sol.phi);
        let gq = element_gradient(mesh, k, &sol.q);
        for (x, w) in rule.on(mesh.triangle_points(k)) {
            let e = gp - exact.grad_phi(x);
            let c = problem.coeffs.pieces(&problem.field, x)?;
            e2 += w * e.norm_sq();
            ea += w * c.full().mul_vec(e).dot(e);
            if let Some(gqe) = exact.grad_q(x) {
                let d = (gq - gqe).dot(c.b);
                eq += w * c.a_par * d * d;
            }
        }
    }
    let ratio = |num: T, den: T| (den > T::zero()).then(|| num / den.sqrt());
    Ok(Effectivity {
        zz: ratio(eta[0], e2),
        full: ratio(eta[1], ea + eps * (T::one() - eps) * eq),
        simplified: ratio(eta[2], ea),
        relative_error: (grad_norm > T::zero()).then(|| e2.sqrt() / grad_norm),
    })
}

/// Checks the two structural identities of a report and returns an error
/// describing the first failure.
pub fn audit_report<T: Real>(report: &IndicatorReport<T>) -> Result<()> {
    let d = report.nodal_identity_defect();
    if d > T::lit(1e-12) {
        return Err(Error::InvalidArgument(format!(
            "nodal identity defect {d}"
        )));
    }
    if let Some(v) = report.sandwich_violation(T::lit(1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "sandwich bound violated at vertex {v}"
        )));
    }
    Ok(())
}
