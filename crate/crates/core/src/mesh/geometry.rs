use super::Mesh;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::scalar::Real;

/// Relative area threshold below which a triangle counts as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-14;

/// Affine map from the reference triangle `(0,0), (1,0), (0,1)` onto `K`,
/// `x = M_K x̂ + t_K`, with `M_K = R_Kᵀ · diag(λ1, λ2) · P_K`.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry<T> {
    pub map_matrix: Mat2<T>,
    pub translation: Vec2<T>,
    pub lambda1: T,
    pub lambda2: T,
    /// Direction of largest stretching.
    pub r1: Vec2<T>,
    pub r2: Vec2<T>,
    pub p_factor: Mat2<T>,
    /// Longest edge.
    pub h_k: T,
    pub area: T,
}

impl<T: Real> ElementGeometry<T> {
    /// Geometry of the triangle with counterclockwise vertices `p`.
    ///
    /// The right-angle vertex of the reference triangle is mapped to the
    /// vertex opposite the longest edge, so a right triangle with legs `H`
    /// and `h` gets `λ1 = H`, `λ2 = h` whatever the order of `p`.
    pub fn from_points(p: [Vec2<T>; 3]) -> Option<Self> {
        let len = [
            (p[2] - p[1]).norm_sq(),
            (p[0] - p[2]).norm_sq(),
            (p[1] - p[0]).norm_sq(),
        ];
        let mut i = 0;
        for j in 1..3 {
            if len[j] > len[i] {
                i = j;
            }
        }
        let p = [p[i], p[(i + 1) % 3], p[(i + 2) % 3]];
        let m = Mat2::from_cols(p[1] - p[0], p[2] - p[0]);
        let svd = m.svd();
        if !(svd.s2 > T::zero()) {
            return None;
        }
        let (su, cu) = svd.u_angle.sin_cos();
        let h_k = len[i].sqrt();
        Some(Self {
            map_matrix: m,
            translation: p[0],
            lambda1: svd.s1,
            lambda2: svd.s2,
            r1: Vec2::new(cu, su),
            r2: Vec2::new(-su, cu),
            p_factor: Mat2::rotation(svd.v_angle),
            h_k,
            area: m.det() * T::lit(0.5),
        })
    }

    /// `R_Kᵀ`, whose columns are `r1` and `r2`.
    pub fn r_transpose(&self) -> Mat2<T> {
        Mat2::from_cols(self.r1, self.r2)
    }

    /// `R_Kᵀ · Λ_K · P_K`.
    pub fn reconstruct(&self) -> Mat2<T> {
        self.r_transpose() * Mat2::diag(self.lambda1, self.lambda2) * self.p_factor
    }

    #[inline]
    pub fn aspect_ratio(&self) -> T {
        self.lambda1 / self.lambda2
    }
}

/// Geometry of triangle `k`; fails when its area is below `1e-14·h_K²`.
pub fn element_geometry<T: Real>(mesh: &Mesh<T>, k: usize) -> Result<ElementGeometry<T>> {
    let p = mesh.triangle_points(k);
    let area = mesh.area(k);
    let h = mesh.diameter(k);
    let threshold = T::lit(DEGENERATE_AREA) * h * h;
    if !(area > threshold) {
        return Err(Error::DegenerateElement {
            index: k,
            area: area.as_f64(),
            threshold: threshold.as_f64(),
        });
    }
    ElementGeometry::from_points(p).ok_or(Error::DegenerateElement {
        index: k,
        area: area.as_f64(),
        threshold: threshold.as_f64(),
    })
}
