//! Anisotropy fields, diffusion coefficients and manufactured solutions.
//!
//! The diffusion matrix splits along the unit field `b`:
//! `𝔸_ε = (A∥/ε) b⊗b + Π Ã Π` with `Π = Id − b⊗b`; the ε-free matrix `𝔸`
//! uses `A∥` in place of `A∥/ε`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::scalar::Real;

/// Fields with `|B|` below this are rejected.
pub const MIN_FIELD_NORM: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnisotropyField<T> {
    /// `B = (α(2y−1)cos(πx) + π, πα(y²−y)sin(πx))`, the rotated gradient of
    /// the field-line coordinate `ψ = πy + α(y²−y)cos(πx)`.
    Curved { alpha: T },
    /// Constant unit direction.
    Constant { dir: Vec2<T> },
}

impl<T: Real> AnisotropyField<T> {
    /// Curved-field family; checks `B ≠ 0` on a 101×101 sample grid and `div B = 0`
    /// by central differences.
    pub fn curved(alpha: T) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha = {alpha}")));
        }
        // B1 = α(2y−1)+π vanishes on x = 0 (where B2 = 0) once |α| ≥ π
        if alpha.abs() >= T::PI() {
            let y = (T::one() - T::PI() / alpha.abs()) * T::lit(0.5);
            return Err(Error::FieldVanishes {
                x: 0.0,
                y: y.as_f64(),
                norm: 0.0,
            });
        }
        let f = Self::Curved { alpha };
        let n = 100;
        let h = 1e-5;
        let mut max_div = 0.0f64;
        for j in 0..=n {
            for i in 0..=n {
                let p = Vec2::new(T::lit(i as f64 / n as f64), T::lit(j as f64 / n as f64));
                let norm = f.field(p).norm();
                if !(norm.as_f64() >= MIN_FIELD_NORM) {
                    return Err(Error::FieldVanishes {
                        x: p.x.as_f64(),
                        y: p.y.as_f64(),
                        norm: norm.as_f64(),
                    });
                }
                let [x, y] = p.to_f64();
                let b = |x: f64, y: f64| {
                    Self::curved_field_f64(alpha.as_f64(), x, y)
                };
                let div = (b(x + h, y).0 - b(x - h, y).0 + b(x, y + h).1 - b(x, y - h).1) / (2.0 * h);
                max_div = max_div.max(div.abs());
            }
        }
        if max_div > 1e-6 {
            return Err(Error::Coefficient(format!(
                "finite-difference div B = {max_div:e} exceeds 1e-6"
            )));
        }
        Ok(f)
    }

    fn curved_field_f64(alpha: f64, x: f64, y: f64) -> (f64, f64) {
        let pi = std::f64::consts::PI;
        (
            alpha * (2.0 * y - 1.0) * (pi * x).cos() + pi,
            pi * alpha * (y * y - y) * (pi * x).sin(),
        )
    }

    /// Constant field along `dir` (normalized).
    pub fn constant(dir: Vec2<T>) -> Result<Self> {
        let n = dir.norm();
        if !(n.as_f64() >= MIN_FIELD_NORM) {
            return Err(Error::FieldVanishes {
                x: f64::NAN,
                y: f64::NAN,
                norm: n.as_f64(),
            });
        }
        Ok(Self::Constant {
            dir: dir.scale(T::one() / n),
        })
    }

    /// Unnormalized field `B(x)`.
    pub fn field(&self, p: Vec2<T>) -> Vec2<T> {
        match *self {
            Self::Curved { alpha } => {
                let pi = T::PI();
                let (s, c) = (pi * p.x).sin_cos();
                let two = T::lit(2.0);
                Vec2::new(
                    alpha * (two * p.y - T::one()) * c + pi,
                    pi * alpha * (p.y * p.y - p.y) * s,
                )
            }
            Self::Constant { dir } => dir,
        }
    }

    /// Jacobian `J[i][j] = ∂_j B_i`.
    pub fn field_jacobian(&self, p: Vec2<T>) -> Mat2<T> {
        match *self {
            Self::Curved { alpha } => {
                let pi = T::PI();
                let (s, c) = (pi * p.x).sin_cos();
                let two = T::lit(2.0);
                let w = two * p.y - T::one();
                Mat2::new(
                    -pi * alpha * w * s,
                    two * alpha * c,
                    pi * pi * alpha * (p.y * p.y - p.y) * c,
                    pi * alpha * w * s,
                )
            }
            Self::Constant { .. } => Mat2::zero(),
        }
    }

    /// `b(x) = B(x)/|B(x)|`.
    pub fn eval_b(&self, p: Vec2<T>) -> Result<Vec2<T>> {
        let bf = self.field(p);
        let n = bf.norm();
        if !(n.as_f64() >= MIN_FIELD_NORM) {
            return Err(Error::FieldVanishes {
                x: p.x.as_f64(),
                y: p.y.as_f64(),
                norm: n.as_f64(),
            });
        }
        Ok(bf.scale(T::one() / n))
    }

    /// `b` and its partial derivatives `∂_x b`, `∂_y b`.
    pub fn eval_b_with_derivatives(&self, p: Vec2<T>) -> Result<(Vec2<T>, [Vec2<T>; 2])> {
        let b = self.eval_b(p)?;
        let n = self.field(p).norm();
        let jac = self.field_jacobian(p);
        let d = [0, 1].map(|j| {
            let db = jac.col(j);
            (db - b.scale(b.dot(db))).scale(T::one() / n)
        });
        Ok((b, d))
    }
}

/// Scalar coefficient given as value and gradient.
#[derive(Clone)]
pub enum ScalarCoefficient<T> {
    Constant(T),
    Field(Arc<dyn Fn(Vec2<T>) -> (T, Vec2<T>) + Send + Sync>),
}

impl<T: Real> ScalarCoefficient<T> {
    pub fn eval(&self, p: Vec2<T>) -> (T, Vec2<T>) {
        match self {
            Self::Constant(c) => (*c, Vec2::zero()),
            Self::Field(f) => f(p),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for ScalarCoefficient<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c:?})"),
            Self::Field(_) => write!(f, "Field(..)"),
        }
    }
}

/// The matrix `Ã` that is projected onto the perpendicular plane.
#[derive(Clone)]
pub enum PerpCoefficient<T> {
    /// `Ã = c(x)·Id`.
    Scalar(ScalarCoefficient<T>),
    /// `Ã(x)` with its partial derivatives `[∂_x Ã, ∂_y Ã]`.
    Matrix(Arc<dyn Fn(Vec2<T>) -> (Mat2<T>, [Mat2<T>; 2]) + Send + Sync>),
}

impl<T: fmt::Debug> fmt::Debug for PerpCoefficient<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scalar(c) => write!(f, "Scalar({c:?})"),
            Self::Matrix(_) => write!(f, "Matrix(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Coefficients<T> {
    pub a_par: ScalarCoefficient<T>,
    pub a_perp: PerpCoefficient<T>,
    pub eps: T,
}

impl<T: Real> Coefficients<T> {
    /// `A∥ = 1`, `Ã = Id`.
    pub fn unit(eps: T) -> Result<Self> {
        Self::new(
            ScalarCoefficient::Constant(T::one()),
            PerpCoefficient::Scalar(ScalarCoefficient::Constant(T::one())),
            eps,
        )
    }

    pub fn new(a_par: ScalarCoefficient<T>, a_perp: PerpCoefficient<T>, eps: T) -> Result<Self> {
        if !(eps > T::zero() && eps <= T::one()) {
            return Err(Error::InvalidArgument(format!("eps = {eps} outside (0, 1]")));
        }
        Ok(Self { a_par, a_perp, eps })
    }

    /// Checks `0 < A0 ≤ A∥ ≤ A1` and positive definiteness of `Ã` on the
    /// plane perpendicular to `b` over a sample grid; returns `(A0, A1)`
    /// observed.
    pub fn check(&self, field: &AnisotropyField<T>, n: usize) -> Result<(T, T)> {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for j in 0..=n {
            for i in 0..=n {
                let p = Vec2::new(
                    T::from_usize_lossy(i) / T::from_usize_lossy(n),
                    T::from_usize_lossy(j) / T::from_usize_lossy(n),
                );
                let c = self.pieces(field, p)?;
                let perp_b = c.b.perp();
                let perp = c.perp.mul_vec(perp_b).dot(perp_b);
                let leak = c.perp.mul_vec(c.b).norm().max(c.perp.transpose().mul_vec(c.b).norm());
                if !(c.a_par > T::zero()) || !(perp > T::zero()) {
                    return Err(Error::Coefficient(format!(
                        "non-positive coefficient at ({}, {}): A_par = {}, perp = {}",
                        p.x, p.y, c.a_par, perp
                    )));
                }
                if leak > T::lit(1e-10) * perp {
                    return Err(Error::Coefficient(format!(
                        "A_perp b = {leak} at ({}, {})",
                        p.x, p.y
                    )));
                }
                lo = lo.min(c.a_par).min(perp);
                hi = hi.max(c.a_par).max(perp);
            }
        }
        Ok((lo, hi))
    }

    /// Pointwise coefficient data with first derivatives.
    pub fn pieces(&self, field: &AnisotropyField<T>, p: Vec2<T>) -> Result<CoefficientPieces<T>> {
        let (b, db) = field.eval_b_with_derivatives(p)?;
        let (a_par, da_par) = self.a_par.eval(p);
        let bb = Mat2::outer(b, b);
        let proj = Mat2::identity() - bb;
        let dbb = [0, 1].map(|j| Mat2::outer(db[j], b) + Mat2::outer(b, db[j]));
        let dproj = dbb.map(|m| m.scale(-T::one()));
        let (perp, dperp) = match &self.a_perp {
            PerpCoefficient::Scalar(c) => {
                let (v, g) = c.eval(p);
                let gs = [g.x, g.y];
                (
                    proj.scale(v),
                    [0, 1].map(|j| proj.scale(gs[j]) + dproj[j].scale(v)),
                )
            }
            PerpCoefficient::Matrix(f) => {
                let (a, da) = f(p);
                (
                    proj * a * proj,
                    [0, 1].map(|j| dproj[j] * a * proj + proj * da[j] * proj + proj * a * dproj[j]),
                )
            }
        };
        let gpar = [da_par.x, da_par.y];
        let dpar = [0, 1].map(|j| bb.scale(gpar[j]) + dbb[j].scale(a_par));
        Ok(CoefficientPieces {
            b,
            a_par,
            par: bb.scale(a_par),
            dpar,
            perp,
            dperp,
        })
    }

    /// `𝔸_ε` (`use_eps`) or `𝔸` at `p`.
    pub fn full_diffusion_matrix(
        &self,
        field: &AnisotropyField<T>,
        p: Vec2<T>,
        use_eps: bool,
    ) -> Result<Mat2<T>> {
        let c = self.pieces(field, p)?;
        let s = if use_eps { T::one() / self.eps } else { T::one() };
        Ok(c.par.scale(s) + c.perp)
    }
}

/// Column divergence `Σ_i ∂_i M_ik` of a matrix field from its partials.
pub fn matrix_divergence<T: Real>(d: &[Mat2<T>; 2]) -> Vec2<T> {
    Vec2::new(d[0][(0, 0)] + d[1][(1, 0)], d[0][(0, 1)] + d[1][(1, 1)])
}

/// Coefficient values and first derivatives at one point.
#[derive(Clone, Copy, Debug)]
pub struct CoefficientPieces<T> {
    pub b: Vec2<T>,
    pub a_par: T,
    /// `A∥ b⊗b`.
    pub par: Mat2<T>,
    pub dpar: [Mat2<T>; 2],
    /// `Π Ã Π`.
    pub perp: Mat2<T>,
    pub dperp: [Mat2<T>; 2],
}

impl<T: Real> CoefficientPieces<T> {
    /// `𝔸 = A∥ b⊗b + Π Ã Π`.
    pub fn full(&self) -> Mat2<T> {
        self.par + self.perp
    }

    pub fn div_full(&self) -> Vec2<T> {
        matrix_divergence(&[self.dpar[0] + self.dperp[0], self.dpar[1] + self.dperp[1]])
    }

    pub fn div_par(&self) -> Vec2<T> {
        matrix_divergence(&self.dpar)
    }
}

/// Exact solution handles used for error norms and effectivity indices.
pub trait ExactSolution<T>: Send + Sync {
    fn phi(&self, p: Vec2<T>) -> T;
    fn grad_phi(&self, p: Vec2<T>) -> Vec2<T>;
    /// Gradient of the exact fluctuation `q`, when known.
    fn grad_q(&self, _p: Vec2<T>) -> Option<Vec2<T>> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseKind {
    /// No Gaussian factor (`δ = 0`).
    Smooth,
    /// Gaussian layer across the field lines, `δ = √0.1`: the layer value
    /// 0.1 divides the squared offset, `exp(−(ψ − 0.5)²/0.1)`.
    Layer,
}

impl CaseKind {
    pub fn delta<T: Real>(self) -> T {
        match self {
            CaseKind::Smooth => T::zero(),
            CaseKind::Layer => T::lit(0.1).sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Smooth => "smooth",
            CaseKind::Layer => "layer",
        }
    }
}

impl std::str::FromStr for CaseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(CaseKind::Smooth),
            "layer" => Ok(CaseKind::Layer),
            _ => Err(Error::InvalidArgument(format!(
                "unknown case `{s}` (expected smooth or layer)"
            ))),
        }
    }
}

/// `φ^ε = g(ψ) + ε cos(2πx) sin(πy)` with `g(s) = sin(s)·exp(−((s − 0.5)/δ)²)`
/// (`δ = 0` drops the exponential) and `ψ = πy + α(y²−y)cos(πx)`.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedCase<T> {
    pub alpha: T,
    pub eps: T,
    pub delta: T,
}

/// `g`, `g'`, `g''` at `s`.
fn profile<T: Real>(s: T, delta: T) -> [T; 3] {
    let (sn, cs) = s.sin_cos();
    if delta == T::zero() {
        return [sn, cs, -sn];
    }
    let two = T::lit(2.0);
    let u = (s - T::lit(0.5)) / delta;
    let g = (-u * u).exp();
    let g1 = -two * u / delta * g;
    let g2 = (-two / (delta * delta) + T::lit(4.0) * u * u / (delta * delta)) * g;
    [sn * g, cs * g + sn * g1, -sn * g + two * cs * g1 + sn * g2]
}

impl<T: Real> ManufacturedCase<T> {
    pub fn new(kind: CaseKind, alpha: T, eps: T) -> Result<Self> {
        Self::with_delta(alpha, eps, kind.delta())
    }

    pub fn with_delta(alpha: T, eps: T, delta: T) -> Result<Self> {
        if !(eps > T::zero() && eps <= T::one()) {
            return Err(Error::InvalidArgument(format!("eps = {eps} outside (0, 1]")));
        }
        if !(delta >= T::zero()) {
            return Err(Error::InvalidArgument(format!("delta = {delta} must be >= 0")));
        }
        Ok(Self { alpha, eps, delta })
    }

    /// `ψ`, `∇ψ`, and `[ψ_xx, ψ_xy, ψ_yy]`.
    fn psi(&self, p: Vec2<T>) -> (T, Vec2<T>, [T; 3]) {
        let pi = T::PI();
        let a = self.alpha;
        let (s, c) = (pi * p.x).sin_cos();
        let w = p.y * p.y - p.y;
        let dw = T::lit(2.0) * p.y - T::one();
        (
            pi * p.y + a * w * c,
            Vec2::new(-pi * a * w * s, pi + a * dw * c),
            [-pi * pi * a * w * c, -pi * a * dw * s, T::lit(2.0) * a * c],
        )
    }

    pub fn psi_value(&self, p: Vec2<T>) -> T {
        self.psi(p).0
    }

    pub fn field(&self) -> AnisotropyField<T> {
        AnisotropyField::Curved { alpha: self.alpha }
    }

    pub fn phi_limit(&self, p: Vec2<T>) -> T {
        profile(self.psi(p).0, self.delta)[0]
    }

    pub fn grad_phi_limit(&self, p: Vec2<T>) -> Vec2<T> {
        let (s, g, _) = self.psi(p);
        g.scale(profile(s, self.delta)[1])
    }

    pub fn q_exact(&self, p: Vec2<T>) -> T {
        let pi = T::PI();
        (T::lit(2.0) * pi * p.x).cos() * (pi * p.y).sin()
    }

    pub fn grad_q_exact(&self, p: Vec2<T>) -> Vec2<T> {
        let pi = T::PI();
        let two_pi = T::lit(2.0) * pi;
        let (s2, c2) = (two_pi * p.x).sin_cos();
        let (s1, c1) = (pi * p.y).sin_cos();
        Vec2::new(-two_pi * s2 * s1, pi * c2 * c1)
    }

    fn hessian_q(&self, p: Vec2<T>) -> [T; 3] {
        let pi = T::PI();
        let two_pi = T::lit(2.0) * pi;
        let (s2, c2) = (two_pi * p.x).sin_cos();
        let (s1, c1) = (pi * p.y).sin_cos();
        [
            -two_pi * two_pi * c2 * s1,
            -two_pi * pi * s2 * c1,
            -pi * pi * c2 * s1,
        ]
    }

    fn hessian_phi(&self, p: Vec2<T>) -> [T; 3] {
        let (s, g, h) = self.psi(p);
        let [_, d1, d2] = profile(s, self.delta);
        let hq = self.hessian_q(p);
        [
            d2 * g.x * g.x + d1 * h[0] + self.eps * hq[0],
            d2 * g.x * g.y + d1 * h[1] + self.eps * hq[1],
            d2 * g.y * g.y + d1 * h[2] + self.eps * hq[2],
        ]
    }

    /// `f = −∇·(ΠÃΠ∇φ^ε) − (1/ε)∇·(A∥ b⊗b ∇φ^ε)`.
    ///
    /// Since `b·∇φ⁰ = 0` exactly, the parallel part reduces to
    /// `−∇·(A∥ b⊗b ∇q)` and carries no `1/ε`.
    pub fn forcing(&self, coeffs: &Coefficients<T>, p: Vec2<T>) -> Result<T> {
        let c = coeffs.pieces(&self.field(), p)?;
        let grad = self.grad_phi(p);
        let hess = self.hessian_phi(p);
        let gq = self.grad_q_exact(p);
        let hq = self.hessian_q(p);
        let contract = |m: &Mat2<T>, h: [T; 3]| {
            m[(0, 0)] * h[0] + (m[(0, 1)] + m[(1, 0)]) * h[1] + m[(1, 1)] * h[2]
        };
        let perp = matrix_divergence(&c.dperp).dot(grad) + contract(&c.perp, hess);
        let par = matrix_divergence(&c.dpar).dot(gq) + contract(&c.par, hq);
        Ok(-perp - par)
    }

    pub fn phi(&self, p: Vec2<T>) -> T {
        self.phi_limit(p) + self.eps * self.q_exact(p)
    }

    pub fn grad_phi(&self, p: Vec2<T>) -> Vec2<T> {
        self.grad_phi_limit(p) + self.grad_q_exact(p).scale(self.eps)
    }
}

impl<T: Real> ExactSolution<T> for ManufacturedCase<T> {
    fn phi(&self, p: Vec2<T>) -> T {
        ManufacturedCase::phi(self, p)
    }
    fn grad_phi(&self, p: Vec2<T>) -> Vec2<T> {
        ManufacturedCase::grad_phi(self, p)
    }
    fn grad_q(&self, p: Vec2<T>) -> Option<Vec2<T>> {
        Some(self.grad_q_exact(p))
    }
}

/// Right-hand side of the model problem.
#[derive(Clone)]
pub enum Source<T> {
    Zero,
    Manufactured(ManufacturedCase<T>),
    Function(Arc<dyn Fn(Vec2<T>) -> T + Send + Sync>),
}

impl<T: fmt::Debug> fmt::Debug for Source<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Manufactured(c) => write!(f, "Manufactured({c:?})"),
            Self::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Everything needed to pose the P and APS problems on the unit square.
#[derive(Clone)]
pub struct Problem<T> {
    pub field: AnisotropyField<T>,
    pub coeffs: Coefficients<T>,
    pub source: Source<T>,
    pub exact: Option<Arc<dyn ExactSolution<T>>>,
}

impl<T: fmt::Debug> fmt::Debug for Problem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("field", &self.field)
            .field("coeffs", &self.coeffs)
            .field("source", &self.source)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl<T: Real> Problem<T> {
    /// Manufactured test problem with unit coefficients.
    pub fn manufactured(kind: CaseKind, alpha: T, eps: T) -> Result<Self> {
        Self::manufactured_with_delta(alpha, eps, kind.delta())
    }

    /// Manufactured problem with an explicit layer width (`0` = smooth).
    pub fn manufactured_with_delta(alpha: T, eps: T, delta: T) -> Result<Self> {
        let case = ManufacturedCase::with_delta(alpha, eps, delta)?;
        Ok(Self {
            field: AnisotropyField::curved(alpha)?,
            coeffs: Coefficients::unit(eps)?,
            source: Source::Manufactured(case),
            exact: Some(Arc::new(case)),
        })
    }

    pub fn eps(&self) -> T {
        self.coeffs.eps
    }

    pub fn source_at(&self, p: Vec2<T>) -> Result<T> {
        match &self.source {
            Source::Zero => Ok(T::zero()),
            Source::Manufactured(c) => c.forcing(&self.coeffs, p),
            Source::Function(f) => Ok(f(p)),
        }
    }

    pub fn eval_b(&self, p: Vec2<T>) -> Result<Vec2<T>> {
        self.field.eval_b(p)
    }
}
