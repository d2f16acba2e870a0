//! Symmetric quadrature rules on triangles and Gauss rules on edges.
//!
//! Triangle rules are stored in barycentric coordinates with weights summing
//! to one, so `∫_K f ≈ |K| Σ w_i f(x_i)`.

use crate::linalg::Vec2;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// 3 interior points, exact for quadratics.
    pub fn degree2() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Self {
            bary: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// 6-point rule exact for quartics.
    pub fn degree4() -> Self {
        let mut r = Self {
            bary: Vec::new(),
            weights: Vec::new(),
            degree: 4,
        };
        r.orbit3(0.445948490915965, 0.223381589678011);
        r.orbit3(0.091576213509771, 0.109951743655322);
        r
    }

    /// 12-point rule exact for sextics.
    pub fn degree6() -> Self {
        let mut r = Self {
            bary: Vec::new(),
            weights: Vec::new(),
            degree: 6,
        };
        r.orbit3(0.249286745170910, 0.116786275726379);
        r.orbit3(0.063089014491502, 0.050844906370207);
        r.orbit6(0.310352451033784, 0.636502499121399, 0.082851075618374);
        r
    }

    fn orbit3(&mut self, a: f64, w: f64) {
        let c = 1.0 - 2.0 * a;
        self.bary.extend([[c, a, a], [a, c, a], [a, a, c]]);
        self.weights.extend([w; 3]);
    }

    fn orbit6(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        self.bary
            .extend([[a, b, c], [b, a, c], [c, a, b], [a, c, b], [b, c, a], [c, b, a]]);
        self.weights.extend([w; 6]);
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points and weights (including the area factor) on triangle `p`.
    pub fn on<T: Real>(&self, p: [Vec2<T>; 3]) -> Vec<(Vec2<T>, T)> {
        let area = (p[1] - p[0]).cross(p[2] - p[0]) * T::lit(0.5);
        self.bary
            .iter()
            .zip(&self.weights)
            .map(|(l, &w)| {
                let x = p[0].scale(T::lit(l[0])) + p[1].scale(T::lit(l[1])) + p[2].scale(T::lit(l[2]));
                (x, T::lit(w) * area)
            })
            .collect()
    }

    /// `∫_K f` over triangle `p`.
    pub fn integrate<T: Real, F: FnMut(Vec2<T>) -> T>(&self, p: [Vec2<T>; 3], mut f: F) -> T {
        self.on(p).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Two-point Gauss rule on the segment `a → b`: points and weights
/// (including the length factor).
pub fn edge_gauss2<T: Real>(a: Vec2<T>, b: Vec2<T>) -> [(Vec2<T>, T); 2] {
    let d = T::lit(0.5 / 3f64.sqrt());
    let half = T::lit(0.5);
    let len = (b - a).norm();
    [
        (a.lerp(b, half - d), len * half),
        (a.lerp(b, half + d), len * half),
    ]
}
