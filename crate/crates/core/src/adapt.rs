//! The adaptive loop: nodal directional indicators, size and direction
//! updates, metric construction and remeshing, repeated until the relative
//! global indicator settles in the tolerance band.

use std::io::Write;

use crate::error::{Error, Result};
use crate::estimate::{element_indicators, IndicatorReport};
use crate::fem::{classify, solve_aps_with, ApsOptions, ApsSolution};
use crate::linalg::{wrap_half_turn, Sym2, Vec2};
use crate::mesh::remesh::adapt_to_metric_with;
use crate::mesh::{Locator, Mesh, MetricField, RemeshParams, MAX_TRIANGLES};
use crate::problem::Problem;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum IndicatorKind {
    #[default]
    Full,
    Simplified,
}

impl IndicatorKind {
    pub fn is_simplified(self) -> bool {
        self == Self::Simplified
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Simplified => "simplified",
        }
    }
}

impl std::str::FromStr for IndicatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "simplified" | "simpl" => Ok(Self::Simplified),
            _ => Err(Error::InvalidArgument(format!(
                "unknown indicator '{s}' (expected full or simplified)"
            ))),
        }
    }
}

/// Directions in which the nodal indicators and sizes are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DirectionFrame {
    /// Stretching directions `r_{i,K}` of each element.
    Element,
    /// The new stretch axis `θ_P` and its normal at each vertex.
    #[default]
    Target,
}

impl std::str::FromStr for DirectionFrame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "element" => Ok(Self::Element),
            "target" => Ok(Self::Target),
            _ => Err(Error::InvalidArgument(format!(
                "unknown direction frame '{s}' (expected element or target)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdaptConfig<T> {
    pub tol: T,
    pub max_iterations: usize,
    pub indicator: IndicatorKind,
    /// `(low, high)` multipliers of `tol`.
    pub band: (T, T),
    pub growth: T,
    pub shrink: T,
    pub h_min: T,
    pub h_max: T,
    pub max_aspect: T,
    /// Prefactor of `η⁴` in the coarsening test; `None` uses 4 (full) or
    /// 2 (simplified).
    pub coarsen_weight: Option<T>,
    /// Prefactor of `η⁴` in the refinement test.
    pub refine_weight: T,
    /// In-band iterations in a row needed to stop.
    pub consecutive: usize,
    /// Stop once the band is reached; `false` always runs `max_iterations`.
    pub stop_on_band: bool,
    pub frame: DirectionFrame,
    pub remesh: RemeshParams,
    pub solver: ApsOptions<T>,
}

impl<T: Real> AdaptConfig<T> {
    pub fn new(tol: T, indicator: IndicatorKind) -> Self {
        Self {
            tol,
            max_iterations: 30,
            indicator,
            band: (T::lit(0.75), T::lit(1.25)),
            growth: T::lit(1.5),
            shrink: T::lit(2.0 / 3.0),
            h_min: T::lit(1e-5),
            h_max: T::lit(0.5),
            max_aspect: T::lit(2000.0),
            coarsen_weight: None,
            refine_weight: T::lit(2.0),
            consecutive: 2,
            stop_on_band: true,
            frame: DirectionFrame::default(),
            remesh: RemeshParams::default(),
            solver: ApsOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.tol > T::zero()) {
            return bad(format!("TOL = {} must be positive", self.tol));
        }
        let (lo, hi) = self.band;
        if !(T::zero() < lo && lo < T::one() && T::one() < hi) {
            return bad(format!("band ({lo}, {hi}) must satisfy 0 < low < 1 < high"));
        }
        if !(T::zero() < self.shrink && self.shrink < T::one() && T::one() < self.growth) {
            return bad(format!(
                "shrink {} / growth {} must satisfy 0 < shrink < 1 < growth",
                self.shrink, self.growth
            ));
        }
        if !(T::zero() < self.h_min && self.h_min < self.h_max) {
            return bad(format!("h_min {} must be below h_max {}", self.h_min, self.h_max));
        }
        if !(self.max_aspect >= T::one()) {
            return bad(format!("max_aspect {} must be at least 1", self.max_aspect));
        }
        if self.max_iterations == 0 || self.consecutive == 0 {
            return bad("max_iterations and consecutive must be positive".into());
        }
        Ok(())
    }

    fn coarsen_weight(&self) -> T {
        self.coarsen_weight.unwrap_or(match self.indicator {
            IndicatorKind::Full => T::lit(4.0),
            IndicatorKind::Simplified => T::lit(2.0),
        })
    }
}

/// Per-vertex directional data feeding the size update.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexIndicators<T> {
    /// `(η_{1,P}⁴, η_{2,P}⁴)`.
    pub eta4: Vec<[T; 2]>,
    /// `(λ_{1,P}, λ_{2,P})`, arithmetic means over incident elements.
    pub lambda: Vec<[T; 2]>,
}

pub fn vertex_directional_indicators<T: Real>(
    report: &IndicatorReport<T>,
    mesh: &Mesh<T>,
    kind: IndicatorKind,
) -> VertexIndicators<T> {
    let eta4 = report.nodal(kind.is_simplified()).dir4.clone();
    let lambda = (0..mesh.num_vertices())
        .map(|v| {
            let tris = mesh.vertex_triangles(v);
            let n = T::from_usize_lossy(tris.len());
            let mut s = [T::zero(); 2];
            for &k in tris {
                let g = &report.elements[k].geometry;
                s[0] += g.lambda1;
                s[1] += g.lambda2;
            }
            [s[0] / n, s[1] / n]
        })
        .collect();
    VertexIndicators { eta4, lambda }
}

/// `T_low` and `T_high` of the size rules.
pub fn thresholds<T: Real>(config: &AdaptConfig<T>, nv: usize, grad_norm_sq: T) -> (T, T) {
    let nv = T::from_usize_lossy(nv);
    let base = T::lit(3.0) / (nv * nv) * config.tol.powi(4) * grad_norm_sq * grad_norm_sq;
    (base * config.band.0.powi(4), base * config.band.1.powi(4))
}

/// Size rule per direction, clamped to `[h_min, h_max]` but not sorted.
pub fn directional_sizes<T: Real>(
    nodal: &VertexIndicators<T>,
    config: &AdaptConfig<T>,
    grad_norm_sq: T,
) -> Vec<[T; 2]> {
    let (t_low, t_high) = thresholds(config, nodal.eta4.len(), grad_norm_sq);
    let cw = config.coarsen_weight();
    nodal
        .eta4
        .iter()
        .zip(&nodal.lambda)
        .map(|(eta, lam)| {
            let mut h = [T::zero(); 2];
            for i in 0..2 {
                h[i] = if cw * eta[i] < t_low {
                    config.growth * lam[i]
                } else if config.refine_weight * eta[i] > t_high {
                    config.shrink * lam[i]
                } else {
                    lam[i]
                };
                h[i] = h[i].max(config.h_min).min(config.h_max);
            }
            h
        })
        .collect()
}

/// New `(h1, h2)` per vertex with `h1 ≥ h2`, after clamping.
pub fn update_sizes<T: Real>(
    nodal: &VertexIndicators<T>,
    config: &AdaptConfig<T>,
    grad_norm_sq: T,
) -> Vec<(T, T)> {
    directional_sizes(nodal, config, grad_norm_sq)
        .into_iter()
        .map(|h| {
            let (h1, h2, _) = orient(h, T::zero(), config.max_aspect);
            (h1, h2)
        })
        .collect()
}

/// `(h1, h2, θ)` from sizes along `θ` and its normal, with the aspect clamp.
fn orient<T: Real>(h: [T; 2], theta: T, max_aspect: T) -> (T, T, T) {
    let (h1, h2, t) = if h[0] >= h[1] {
        (h[0], h[1], theta)
    } else {
        (h[1], h[0], wrap_half_turn(theta + T::FRAC_PI_2()))
    };
    (h1, h2.max(h1 / max_aspect), t)
}

/// Metric in which triangle `k` is equilateral with unit sides, returned as
/// its inverse `(2/3) Σ_edges e eᵀ`: the size tensor the remesher works with.
pub fn natural_size_tensor<T: Real>(mesh: &Mesh<T>, k: usize) -> Sym2<T> {
    let p = mesh.triangle_points(k);
    let mut s = Sym2::zero();
    for i in 0..3 {
        s += Sym2::outer(p[(i + 1) % 3] - p[i]);
    }
    s.scale(T::lit(2.0 / 3.0))
}

/// Directional indicators measured in a per-vertex frame instead of the
/// element stretching directions: `e_1 = (cos θ, sin θ)`, `e_2 = e_1^⊥`,
/// `η_{i,P}⁴ = Σ_K e_iᵀ M_K M_Kᵀ e_i · e_iᵀ W_K e_i`. On an element with
/// `r_1 = e_1` this is the element-frame formula. `λ_{i,P}` is the mean over
/// incident elements of the element size along `e_i` taken from
/// [`natural_size_tensor`], so that feeding it back to the remesher
/// reproduces the current mesh.
pub fn frame_directional_indicators<T: Real>(
    report: &IndicatorReport<T>,
    mesh: &Mesh<T>,
    kind: IndicatorKind,
    theta: &[T],
) -> VertexIndicators<T> {
    let nv = mesh.num_vertices();
    let mut eta4 = vec![[T::zero(); 2]; nv];
    let mut lambda = vec![[T::zero(); 2]; nv];
    let sizes: Vec<Sym2<T>> = (0..mesh.num_triangles()).map(|k| natural_size_tensor(mesh, k)).collect();
    for v in 0..nv {
        let e = [Vec2::from_angle(theta[v]), Vec2::from_angle(theta[v]).perp()];
        let tris = mesh.vertex_triangles(v);
        for &k in tris {
            let el = &report.elements[k];
            let g = &el.geometry;
            let mm = Sym2::outer(g.r1).scale(g.lambda1 * g.lambda1)
                + Sym2::outer(g.r2).scale(g.lambda2 * g.lambda2);
            let w = el.weighted_matrix(kind.is_simplified());
            for i in 0..2 {
                eta4[v][i] += mm.quad(e[i]) * w.quad(e[i]);
                lambda[v][i] += sizes[k].quad(e[i]).sqrt();
            }
        }
        let n = T::from_usize_lossy(tris.len());
        lambda[v] = [lambda[v][0] / n, lambda[v][1] / n];
    }
    VertexIndicators { eta4, lambda }
}

/// Area-weighted vertex average of `W_K`.
pub fn vertex_weighted_matrices<T: Real>(
    mesh: &Mesh<T>,
    report: &IndicatorReport<T>,
    kind: IndicatorKind,
) -> Vec<Sym2<T>> {
    (0..mesh.num_vertices())
        .map(|v| {
            let mut w = Sym2::zero();
            let mut a = T::zero();
            for &k in mesh.vertex_triangles(v) {
                let ak = mesh.area(k);
                w += report.elements[k].weighted_matrix(kind.is_simplified()).scale(ak);
                a += ak;
            }
            w.scale(T::one() / a)
        })
        .collect()
}

/// Stretch axis from a vertex error matrix: perpendicular to the eigenvector
/// of the largest eigenvalue; `None` on a tie.
pub fn stretch_angle<T: Real>(w: &Sym2<T>) -> Option<T> {
    let (big, small, angle) = w.eigen();
    if !(big > T::zero()) || (big - small) <= T::lit(1e-12) * big.abs() {
        return None;
    }
    Some(wrap_half_turn(angle + T::FRAC_PI_2()))
}

/// Stretch axis `θ ∈ [0, π)` per vertex; ties keep `previous` (or 0).
pub fn update_direction<T: Real>(
    mesh: &Mesh<T>,
    report: &IndicatorReport<T>,
    kind: IndicatorKind,
    previous: Option<&[T]>,
) -> Vec<T> {
    vertex_weighted_matrices(mesh, report, kind)
        .iter()
        .enumerate()
        .map(|(v, w)| {
            stretch_angle(w).unwrap_or_else(|| previous.map_or(T::zero(), |p| p[v]))
        })
        .collect()
}

/// Expected triangle count of a unit mesh for `metric` over `mesh`.
pub fn estimated_triangles<T: Real>(mesh: &Mesh<T>, metric: &MetricField<T>) -> T {
    // a unit equilateral triangle has area √3/4 in metric space
    let unit = T::lit(3f64.sqrt() / 4.0);
    (0..mesh.num_triangles())
        .map(|k| {
            let t = mesh.triangle(k);
            let d: T = t
                .iter()
                .map(|&v| T::one() / (metric.h1[v] * metric.h2[v]))
                .sum::<T>()
                / T::lit(3.0);
            d * mesh.area(k) / unit
        })
        .sum()
}

/// One row of the adaptation trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord<T> {
    pub iteration: usize,
    pub nv: usize,
    pub nt: usize,
    /// `η / ‖∇φ_h‖` for the driving indicator.
    pub ratio: T,
    pub error: Option<T>,
    pub aspect_max: T,
    pub aspect_avg: T,
    pub ei_zz: Option<T>,
    pub ei_full: Option<T>,
    pub ei_simpl: Option<T>,
    pub in_band: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdaptTrace<T> {
    pub records: Vec<TraceRecord<T>>,
    pub converged: bool,
    /// Stopped over-resolved with nothing left to coarsen.
    pub saturated: bool,
}

pub const TRACE_CSV_HEADER: &str =
    "iteration,nv,nt,ratio,err,aspect_max,aspect_avg,ei_zz,ei_a,ei_sa,in_band";

impl<T: Real> AdaptTrace<T> {
    pub fn last(&self) -> Option<&TraceRecord<T>> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        let opt = |v: Option<T>| v.map_or(String::new(), |v| format!("{:e}", v.as_f64()));
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{:e},{},{:e},{:e},{},{},{},{}",
                r.iteration,
                r.nv,
                r.nt,
                r.ratio.as_f64(),
                opt(r.error),
                r.aspect_max.as_f64(),
                r.aspect_avg.as_f64(),
                opt(r.ei_zz),
                opt(r.ei_full),
                opt(r.ei_simpl),
                r.in_band,
            )?;
        }
        Ok(())
    }
}

/// Result of a finished loop.
#[derive(Clone, Debug)]
pub struct AdaptOutcome<T> {
    pub mesh: Mesh<T>,
    pub solution: ApsSolution<T>,
    pub report: IndicatorReport<T>,
    pub trace: AdaptTrace<T>,
}

/// A failure inside the loop, with the trace up to that point.
#[derive(Debug, thiserror::Error)]
#[error("adaptation failed at iteration {iteration}: {error}")]
pub struct AdaptFailure<T: std::fmt::Debug> {
    pub iteration: usize,
    pub error: Error,
    pub trace: AdaptTrace<T>,
}

/// Runs solve → estimate → metric → remesh until the indicator ratio stays
/// in the band for `consecutive` iterations or `max_iterations` solves were
/// done. `observe` sees every solved iteration.
pub fn adapt_loop_with<T: Real, F>(
    initial: &Mesh<T>,
    problem: &Problem<T>,
    config: &AdaptConfig<T>,
    mut observe: F,
) -> std::result::Result<AdaptOutcome<T>, AdaptFailure<T>>
where
    F: FnMut(usize, &Mesh<T>, &ApsSolution<T>, &IndicatorReport<T>),
{
    let mut trace = AdaptTrace::default();
    let fail = |iteration: usize, error: Error, trace: &AdaptTrace<T>| AdaptFailure {
        iteration,
        error,
        trace: trace.clone(),
    };
    config.validate().map_err(|e| fail(0, e, &trace))?;
    let mut mesh = classify(initial, problem).map_err(|e| fail(0, e, &trace))?;
    let mut previous_theta: Option<Vec<T>> = None;
    let simplified = config.indicator.is_simplified();
    let mut streak = 0;
    let mut capped = 0;
    for it in 0..config.max_iterations {
        let sol = solve_aps_with(&mesh, problem, &config.solver).map_err(|e| fail(it, e, &trace))?;
        let report = element_indicators(&mesh, &sol, problem).map_err(|e| fail(it, e, &trace))?;
        observe(it, &mesh, &sol, &report);
        let ratio = report.relative_global(simplified);
        let in_band = ratio >= config.band.0 * config.tol && ratio <= config.band.1 * config.tol;
        streak = if in_band { streak + 1 } else { 0 };
        let (aspect_max, aspect_avg) = mesh.aspect_stats().map_err(|e| fail(it, e, &trace))?;
        let eff = report.effectivity.unwrap_or_default();
        trace.records.push(TraceRecord {
            iteration: it,
            nv: mesh.num_vertices(),
            nt: mesh.num_triangles(),
            ratio,
            error: eff.relative_error,
            aspect_max,
            aspect_avg,
            ei_zz: eff.zz,
            ei_full: eff.full,
            ei_simpl: eff.simplified,
            in_band,
        });
        let settled = streak >= config.consecutive;
        if (settled && config.stop_on_band) || it + 1 == config.max_iterations {
            trace.converged = settled;
            return Ok(AdaptOutcome {
                mesh,
                solution: sol,
                report,
                trace,
            });
        }
        let metric = build_metric(&mesh, &report, config, previous_theta.as_deref())
            .map_err(|e| fail(it, e, &trace))?;
        // over-resolved but nothing left to coarsen: every size is at the
        // cap, or the remesher stopped removing vertices
        let at_cap = T::lit(1.0 - 1e-12) * config.h_max;
        let below = ratio < config.band.0 * config.tol;
        let all_capped = metric.h2.iter().all(|&h| h >= at_cap);
        let stalled = trace.records.len() >= 2
            && trace.records[trace.records.len() - 2].nv <= mesh.num_vertices();
        capped = if below && (all_capped || stalled) { capped + 1 } else { 0 };
        if config.stop_on_band && capped >= config.consecutive {
            trace.saturated = true;
            return Ok(AdaptOutcome {
                mesh,
                solution: sol,
                report,
                trace,
            });
        }
        let expected = estimated_triangles(&mesh, &metric);
        if expected > T::from_usize_lossy(MAX_TRIANGLES) {
            return Err(fail(
                it,
                Error::MeshTooLarge {
                    requested: expected.as_f64() as usize,
                    cap: MAX_TRIANGLES,
                },
                &trace,
            ));
        }
        let (next, _) = adapt_to_metric_with(&mesh, &metric, &config.remesh).map_err(|e| fail(it, e, &trace))?;
        let next = classify(&next, problem).map_err(|e| fail(it, e, &trace))?;
        previous_theta = Some(transfer_angles(&mesh, &metric.theta, &next).map_err(|e| fail(it, e, &trace))?);
        mesh = next;
    }
    unreachable!("loop returns on its last iteration")
}

pub fn adapt_loop<T: Real>(
    initial: &Mesh<T>,
    problem: &Problem<T>,
    config: &AdaptConfig<T>,
) -> std::result::Result<AdaptOutcome<T>, AdaptFailure<T>> {
    adapt_loop_with(initial, problem, config, |_, _, _, _| {})
}

/// Metric for the next mesh from the indicators on `mesh`.
pub fn build_metric<T: Real>(
    mesh: &Mesh<T>,
    report: &IndicatorReport<T>,
    config: &AdaptConfig<T>,
    previous_theta: Option<&[T]>,
) -> Result<MetricField<T>> {
    let g2 = report.grad_norm * report.grad_norm;
    let theta = update_direction(mesh, report, config.indicator, previous_theta);
    let nodal = match config.frame {
        DirectionFrame::Element => vertex_directional_indicators(report, mesh, config.indicator),
        DirectionFrame::Target => frame_directional_indicators(report, mesh, config.indicator, &theta),
    };
    let n = theta.len();
    let (mut h1, mut h2, mut th) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (h, &t) in directional_sizes(&nodal, config, g2).into_iter().zip(&theta) {
        let (a, b, t) = match config.frame {
            DirectionFrame::Element => {
                let (a, b, _) = orient(h, T::zero(), config.max_aspect);
                (a, b, t)
            }
            DirectionFrame::Target => orient(h, t, config.max_aspect),
        };
        h1.push(a);
        h2.push(b);
        th.push(t);
    }
    MetricField::new(h1, h2, th)
}

/// Angles carried to the vertices of `new` from the nearest vertex of the
/// containing triangle of `old`.
fn transfer_angles<T: Real>(old: &Mesh<T>, theta: &[T], new: &Mesh<T>) -> Result<Vec<T>> {
    let loc = Locator::new(old);
    new.vertices()
        .iter()
        .map(|&p| {
            let (k, b) = loc.locate(p)?;
            let t = old.triangle(k);
            let i = (0..3).max_by(|&i, &j| b[i].partial_cmp(&b[j]).unwrap()).unwrap();
            Ok(theta[t[i]])
        })
        .collect()
}
