//! Potentials `g >= 0` and their integrals over chambers.
//!
//! Chamber integrals are evaluated on polygons by a signed triangle fan
//! from a fixed origin, each triangle integrated with the 7-point
//! degree-5 Radon rule. Summing the fans of a chamber's oriented boundary
//! gives the integral over the chamber for any origin.

use crate::geom::{cross, Point};

pub trait Potential {
    fn value(&self, x: Point) -> f64;

    fn gradient(&self, x: Point) -> Point {
        let h = 1e-6 * (1.0 + x.norm());
        let ex = Point::new(h, 0.0);
        let ey = Point::new(0.0, h);
        Point::new(
            (self.value(x + ex) - self.value(x - ex)) / (2.0 * h),
            (self.value(x + ey) - self.value(x - ey)) / (2.0 * h),
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn value(&self, _: Point) -> f64 {
        0.0
    }

    fn gradient(&self, _: Point) -> Point {
        Point::zeros()
    }
}

/// `scale * |x - center|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub center: Point,
    pub scale: f64,
}

impl Default for Quadratic {
    fn default() -> Self {
        Quadratic { center: Point::zeros(), scale: 1.0 }
    }
}

impl Potential for Quadratic {
    fn value(&self, x: Point) -> f64 {
        self.scale * (x - self.center).norm_squared()
    }

    fn gradient(&self, x: Point) -> Point {
        (x - self.center) * (2.0 * self.scale)
    }
}

/// `amplitude * exp(-|x - center|^2 / (2 width^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub center: Point,
    pub amplitude: f64,
    pub width: f64,
}

impl Potential for Gaussian {
    fn value(&self, x: Point) -> f64 {
        let r2 = (x - self.center).norm_squared();
        self.amplitude * (-r2 / (2.0 * self.width * self.width)).exp()
    }

    fn gradient(&self, x: Point) -> Point {
        let d = x - self.center;
        -d * (self.value(x) / (self.width * self.width))
    }
}

impl<F: Fn(Point) -> f64> Potential for F {
    fn value(&self, x: Point) -> f64 {
        self(x)
    }
}

/// Radon's 7-point rule: barycentric weights of the two non-origin
/// vertices and the quadrature weight (weights sum to one).
fn radon_rule() -> [(f64, f64, f64); 7] {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let b1 = 1.0 - 2.0 * a1;
    let w1 = (155.0 - s15) / 1200.0;
    let a2 = (6.0 + s15) / 21.0;
    let b2 = 1.0 - 2.0 * a2;
    let w2 = (155.0 + s15) / 1200.0;
    let third = 1.0 / 3.0;
    [
        (third, third, 9.0 / 40.0),
        (a1, a1, w1),
        (a1, b1, w1),
        (b1, a1, w1),
        (a2, a2, w2),
        (a2, b2, w2),
        (b2, a2, w2),
    ]
}

/// `∫` of `g` over the signed triangle `(origin, a, b)`.
pub fn triangle_integral(g: &dyn Potential, origin: Point, a: Point, b: Point) -> f64 {
    let (ea, eb) = (a - origin, b - origin);
    let area = 0.5 * cross(ea, eb);
    if area == 0.0 {
        return 0.0;
    }
    let sum: f64 = radon_rule().iter().map(|&(la, lb, w)| w * g.value(origin + ea * la + eb * lb)).sum();
    area * sum
}

/// Signed fan integral along a polyline (`closed` adds the wrap segment).
pub fn fan_integral(g: &dyn Potential, origin: Point, pts: &[Point], closed: bool) -> f64 {
    let n = pts.len();
    let segs = if closed { n } else { n.saturating_sub(1) };
    (0..segs).map(|i| triangle_integral(g, origin, pts[i], pts[(i + 1) % n])).sum()
}

/// Fan integral and its gradient with respect to every vertex.
pub fn fan_integral_grad(g: &dyn Potential, origin: Point, pts: &[Point], closed: bool) -> (f64, Vec<Point>) {
    let n = pts.len();
    let segs = if closed { n } else { n.saturating_sub(1) };
    let rule = radon_rule();
    let mut total = 0.0;
    let mut grad = vec![Point::zeros(); n];
    for i in 0..segs {
        let j = (i + 1) % n;
        let (ea, eb) = (pts[i] - origin, pts[j] - origin);
        let area = 0.5 * cross(ea, eb);
        let mut sum = 0.0;
        let mut ga = Point::zeros();
        let mut gb = Point::zeros();
        for &(la, lb, w) in &rule {
            let x = origin + ea * la + eb * lb;
            let gv = g.value(x);
            let gg = g.gradient(x);
            sum += w * gv;
            ga += gg * (w * la);
            gb += gg * (w * lb);
        }
        total += area * sum;
        // d area / d a = (eb.y, -eb.x) / 2, d area / d b = (-ea.y, ea.x) / 2
        grad[i] += Point::new(0.5 * eb.y, -0.5 * eb.x) * sum + ga * area;
        grad[j] += Point::new(-0.5 * ea.y, 0.5 * ea.x) * sum + gb * area;
    }
    (total, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn quadratic_over_disk_matches_polar_integral() {
        // ∫_{B_r} |x|^2 = π r^4 / 2, polygon error O(1/n^2)
        let n = 2000;
        let pts: Vec<Point> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Point::new(t.cos(), t.sin())
            })
            .collect();
        let v = fan_integral(&Quadratic::default(), Point::new(0.3, 0.1), &pts, true);
        assert!((v - PI / 2.0).abs() < 1e-4, "{v}");
    }

    #[test]
    fn fan_is_independent_of_origin() {
        let sq = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(2.0, 1.0), Point::new(0.0, 1.0)];
        // the rule is exact for polynomials up to degree five
        let g = |x: Point| 1.0 + x.x * x.x * x.y - 0.3 * x.y.powi(5) + x.x.powi(4);
        let a = fan_integral(&g, Point::zeros(), &sq, true);
        let b = fan_integral(&g, Point::new(-3.0, 5.0), &sq, true);
        assert_abs_diff_eq!(a, b, epsilon = 1e-11);
        // |x|^2 over [0,2]x[0,1]: ∫x^2 + ∫y^2 = 8/3 + 2/3
        let q = fan_integral(&Quadratic::default(), Point::new(7.0, -1.0), &sq, true);
        assert_abs_diff_eq!(q, 10.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn fan_gradient_matches_finite_differences() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.2), Point::new(1.3, 1.1), Point::new(-0.2, 0.9)];
        let g = Gaussian { center: Point::new(0.2, 0.3), amplitude: 2.0, width: 0.7 };
        let o = Point::new(0.1, -0.4);
        let (_, grad) = fan_integral_grad(&g, o, &pts, false);
        let h = 1e-6;
        for i in 0..pts.len() {
            for axis in 0..2 {
                let mut p = pts.clone();
                p[i][axis] += h;
                let up = fan_integral(&g, o, &p, false);
                p[i][axis] -= 2.0 * h;
                let dn = fan_integral(&g, o, &p, false);
                assert_abs_diff_eq!(grad[i][axis], (up - dn) / (2.0 * h), epsilon = 1e-7);
            }
        }
    }
}
