//! Points of R³, the half-turns about vertical lines, the translation
//! `T(x) = x - (1,1,0)` and the Möbius involution `M`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A point (or vector) of R³.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Point3 { x1, x2, x3 }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn norm_sq(self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2).hypot(self.x3)
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2 + self.x3 * o.x3
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }

    pub fn is_origin(self) -> bool {
        self.x1 == 0.0 && self.x2 == 0.0 && self.x3 == 0.0
    }

    /// Shift along the vertical axis.
    pub fn raised(self, c: f64) -> Self {
        Point3::new(self.x1, self.x2, self.x3 + c)
    }

    pub fn get(self, axis: usize) -> f64 {
        match axis {
            0 => self.x1,
            1 => self.x2,
            2 => self.x3,
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn with(mut self, axis: usize, value: f64) -> Self {
        match axis {
            0 => self.x1 = value,
            1 => self.x2 = value,
            2 => self.x3 = value,
            _ => panic!("axis {axis} out of range"),
        }
        self
    }

    /// `|self - other| / (1 + |other|)`, the residual used for exp-scaled values.
    pub fn rel_residual(self, other: Point3) -> f64 {
        (self - other).norm() / (1.0 + other.norm())
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3)
    }
}

impl AddAssign for Point3 {
    fn add_assign(&mut self, o: Point3) {
        *self = *self + o;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x1 - o.x1, self.x2 - o.x2, self.x3 - o.x3)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x1, -self.x2, -self.x3)
    }
}

impl Mul<Point3> for f64 {
    type Output = Point3;
    fn mul(self, p: Point3) -> Point3 {
        Point3::new(self * p.x1, self * p.x2, self * p.x3)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x1, self.x2, self.x3)
    }
}

/// A point of the one-point compactification of R³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtPoint {
    Finite(Point3),
    Infinity,
}

impl ExtPoint {
    pub fn finite(self) -> Option<Point3> {
        match self {
            ExtPoint::Finite(p) => Some(p),
            ExtPoint::Infinity => None,
        }
    }

    pub fn is_infinity(self) -> bool {
        matches!(self, ExtPoint::Infinity)
    }
}

impl From<Point3> for ExtPoint {
    fn from(p: Point3) -> Self {
        ExtPoint::Finite(p)
    }
}

impl fmt::Display for ExtPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtPoint::Finite(p) => p.fmt(f),
            ExtPoint::Infinity => f.write_str("inf"),
        }
    }
}

/// The vertical line `{(u, v, t) : t ∈ R}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalAxis {
    pub u: f64,
    pub v: f64,
}

impl VerticalAxis {
    pub const fn new(u: f64, v: f64) -> Self {
        VerticalAxis { u, v }
    }
}

/// Rotation by π about a vertical line: `(2u - x1, 2v - x2, x3)`.
pub fn rotate_half_turn(axis: VerticalAxis, x: Point3) -> Point3 {
    Point3::new(2.0 * axis.u - x.x1, 2.0 * axis.v - x.x2, x.x3)
}

const DIAGONAL: Point3 = Point3::new(1.0, 1.0, 0.0);

/// `T(x) = x - (1,1,0)`.
pub fn translate_t(x: Point3) -> Point3 {
    x - DIAGONAL
}

/// `T⁻¹(x) = x + (1,1,0)`.
pub fn translate_t_inv(x: Point3) -> Point3 {
    x + DIAGONAL
}

/// `M(x) = (x1, x2, -x3) / |x|²`, exchanging 0 and ∞.
pub fn mobius(x: ExtPoint) -> ExtPoint {
    match x {
        ExtPoint::Infinity => ExtPoint::Finite(Point3::ORIGIN),
        ExtPoint::Finite(p) if p.is_origin() => ExtPoint::Infinity,
        ExtPoint::Finite(p) => ExtPoint::Finite(mobius_finite(p)),
    }
}

/// `M` on R³∖{0}. The caller guarantees `p ≠ 0`.
pub fn mobius_finite(p: Point3) -> Point3 {
    // Scale first so that |p|² neither overflows nor underflows.
    let s = p.x1.abs().max(p.x2.abs()).max(p.x3.abs());
    let q = (1.0 / s) * p;
    let inv = 1.0 / (s * q.norm_sq());
    Point3::new(q.x1 * inv, q.x2 * inv, -q.x3 * inv)
}

/// Membership in the closed lower half-space `H_{≤r}`.
pub fn in_lower_half_space(x: Point3, r: f64) -> bool {
    x.x3 <= r
}

/// Membership in the closed upper half-space `H_{≥r}`.
pub fn in_upper_half_space(x: Point3, r: f64) -> bool {
    x.x3 >= r
}
