//! Small fixed-size linear algebra for planar geometry: 2-vectors, 2×2 matrices,
//! symmetric 2×2 tensors, and their closed-form spectral decompositions.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector at angle `theta` from the x axis.
    #[inline]
    pub fn from_angle(theta: T) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// Counterclockwise rotation by a quarter turn.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    #[inline]
    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self).scale(t)
    }

    pub fn to_f64(self) -> [f64; 2] {
        [self.x.as_f64(), self.y.as_f64()]
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Real> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl<T: Real> SubAssign for Vec2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

/// General 2×2 matrix, row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Real> Mat2<T> {
    #[inline]
    pub fn new(a00: T, a01: T, a10: T, a11: T) -> Self {
        Self {
            m: [[a00, a01], [a10, a11]],
        }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn diag(a: T, b: T) -> Self {
        Self::new(a, T::zero(), T::zero(), b)
    }

    /// Matrix whose columns are `c0` and `c1`.
    #[inline]
    pub fn from_cols(c0: Vec2<T>, c1: Vec2<T>) -> Self {
        Self::new(c0.x, c1.x, c0.y, c1.y)
    }

    /// Matrix whose rows are `r0` and `r1`.
    #[inline]
    pub fn from_rows(r0: Vec2<T>, r1: Vec2<T>) -> Self {
        Self::new(r0.x, r0.y, r1.x, r1.y)
    }

    /// Rotation by `theta` (columns are the rotated axes).
    #[inline]
    pub fn rotation(theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, -s, s, c)
    }

    /// Tensor product `u ⊗ v`.
    #[inline]
    pub fn outer(u: Vec2<T>, v: Vec2<T>) -> Self {
        Self::new(u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y)
    }

    #[inline]
    pub fn col(&self, j: usize) -> Vec2<T> {
        Vec2::new(self.m[0][j], self.m[1][j])
    }

    #[inline]
    pub fn row(&self, i: usize) -> Vec2<T> {
        Vec2::new(self.m[i][0], self.m[i][1])
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    #[inline]
    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    #[inline]
    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() {
            return None;
        }
        Some(Self::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    #[inline]
    pub fn scale(&self, s: T) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        (self.m[0][0] * self.m[0][0]
            + self.m[0][1] * self.m[0][1]
            + self.m[1][0] * self.m[1][0]
            + self.m[1][1] * self.m[1][1])
            .sqrt()
    }

    /// Symmetric part as a [`Sym2`].
    pub fn sym(&self) -> Sym2<T> {
        Sym2::new(
            self.m[0][0],
            (self.m[0][1] + self.m[1][0]) * T::lit(0.5),
            self.m[1][1],
        )
    }

    /// Closed-form singular value decomposition `self = U · diag(s1, s2) · V`
    /// with `U`, `V` rotations and `s1 ≥ |s2|`. `s2` is negative when the
    /// determinant is.
    pub fn svd(&self) -> Svd2<T> {
        let half = T::lit(0.5);
        let [[a, b], [c, d]] = self.m;
        let e = (a + d) * half;
        let f = (a - d) * half;
        let g = (c + b) * half;
        let h = (c - b) * half;
        let q = e.hypot(h);
        let r = f.hypot(g);
        let a1 = g.atan2(f);
        let a2 = h.atan2(e);
        Svd2 {
            u_angle: (a2 + a1) * half,
            s1: q + r,
            s2: q - r,
            v_angle: (a2 - a1) * half,
        }
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] - o.m[0][0],
            self.m[0][1] - o.m[0][1],
            self.m[1][0] - o.m[1][0],
            self.m[1][1] - o.m[1][1],
        )
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Real> Index<(usize, usize)> for Mat2<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.m[i][j]
    }
}

/// Result of [`Mat2::svd`]: `M = rot(u_angle) · diag(s1, s2) · rot(v_angle)`.
#[derive(Clone, Copy, Debug)]
pub struct Svd2<T> {
    pub u_angle: T,
    pub s1: T,
    pub s2: T,
    pub v_angle: T,
}

/// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym2<T> {
    pub xx: T,
    pub xy: T,
    pub yy: T,
}

impl<T: Real> Sym2<T> {
    #[inline]
    pub fn new(xx: T, xy: T, yy: T) -> Self {
        Self { xx, xy, yy }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::one())
    }

    /// `v ⊗ v`.
    #[inline]
    pub fn outer(v: Vec2<T>) -> Self {
        Self::new(v.x * v.x, v.x * v.y, v.y * v.y)
    }

    /// `Q(θ) · diag(d1, d2) · Q(θ)ᵀ`: eigenvalue `d1` along angle `theta`.
    pub fn from_eigen(theta: T, d1: T, d2: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(
            d1 * c * c + d2 * s * s,
            (d1 - d2) * c * s,
            d1 * s * s + d2 * c * c,
        )
    }

    #[inline]
    pub fn quad(&self, v: Vec2<T>) -> T {
        self.xx * v.x * v.x + T::lit(2.0) * self.xy * v.x * v.y + self.yy * v.y * v.y
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    #[inline]
    pub fn trace(&self) -> T {
        self.xx + self.yy
    }

    #[inline]
    pub fn det(&self) -> T {
        self.xx * self.yy - self.xy * self.xy
    }

    #[inline]
    pub fn scale(&self, s: T) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn to_mat(&self) -> Mat2<T> {
        Mat2::new(self.xx, self.xy, self.xy, self.yy)
    }

    /// Eigen-decomposition: `(λ_max, λ_min, angle of the λ_max eigenvector)`.
    pub fn eigen(&self) -> (T, T, T) {
        let half = T::lit(0.5);
        let mean = (self.xx + self.yy) * half;
        let dev = ((self.xx - self.yy) * half).hypot(self.xy);
        let angle = (T::lit(2.0) * self.xy).atan2(self.xx - self.yy) * half;
        (mean + dev, mean - dev, angle)
    }

    pub fn is_spd(&self) -> bool {
        self.xx > T::zero() && self.det() > T::zero()
    }
}

impl<T: Real> Add for Sym2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl<T: Real> AddAssign for Sym2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.xx += o.xx;
        self.xy += o.xy;
        self.yy += o.yy;
    }
}

/// Angle reduced to `[0, π)`.
pub fn wrap_half_turn<T: Real>(theta: T) -> T {
    let pi = T::PI();
    let mut t = theta % pi;
    if t < T::zero() {
        t += pi;
    }
    if t >= pi {
        t -= pi;
    }
    t
}
