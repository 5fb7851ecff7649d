//! The Zorich-type map `Z : R³ → R³∖{0}`.
//!
//! On the central beam `[-1,1]² × R` the map is
//! `Z(x) = e^{x3} (x1, x2, 1 - max(|x1|, |x2|))`. Every other beam is reached
//! by reflecting in beam faces, and each such reflection reflects the image
//! in the plane `{y3 = 0}`. Concretely each horizontal coordinate is folded
//! into `[-1, 1]` by a period-4 tent, and the parities of the two folds
//! multiply into the sign of the third image coordinate.

use crate::error::{Error, Result};
use crate::geometry::{rotate_half_turn, Point3, VerticalAxis};
use crate::linalg::Mat3;

/// Largest height accepted by [`zorich`]; `e^700` is still a finite double.
pub const OVERFLOW_HEIGHT: f64 = 700.0;

/// Default exclusion radius around non-smooth loci for Jacobian queries.
pub const DEFAULT_EXCLUSION: f64 = 1e-3;

/// A horizontal coordinate reduced into the central beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fold {
    /// Folded coordinate in `[-1, 1]`.
    pub u: f64,
    /// Whether an odd number of face reflections was applied.
    pub flip: bool,
}

impl Fold {
    /// `du/ds`: `+1` on unreflected beams, `-1` on reflected ones.
    pub fn slope(self) -> f64 {
        if self.flip {
            -1.0
        } else {
            1.0
        }
    }
}

/// Tent reduction with period 4: `t = ((s + 1) mod 4) - 1`, then
/// `u = t` for `t ≤ 1` and `u = 2 - t` (reflected) otherwise.
pub fn fold(s: f64) -> Fold {
    let t = (s + 1.0).rem_euclid(4.0) - 1.0;
    if t <= 1.0 {
        Fold { u: t, flip: false }
    } else {
        Fold { u: 2.0 - t, flip: true }
    }
}

/// Selects an inverse branch: `φ = R^p_{(1,1)}(φ₀) + (4n, 4m, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BranchIndex {
    pub n: i64,
    pub m: i64,
    /// `p = 1`: the principal preimage is first rotated by π about `(1,1)`.
    pub rotated: bool,
}

impl BranchIndex {
    pub const PRINCIPAL: BranchIndex = BranchIndex { n: 0, m: 0, rotated: false };

    pub fn new(n: i64, m: i64, p: u8) -> Result<Self> {
        match p {
            0 | 1 => Ok(BranchIndex { n, m, rotated: p == 1 }),
            _ => Err(Error::InvalidParameter(format!("branch parity must be 0 or 1, got {p}"))),
        }
    }

    pub fn parity(self) -> u8 {
        self.rotated as u8
    }
}

/// `Z(x1, x2, 0)`: the image direction before exponential scaling.
///
/// Its norm lies in `[1/√2, √2]`, so `ln|Z(x)| = x3 + ln|profile|` is known
/// even when `e^{x3}` itself is not representable.
pub fn zorich_profile(x1: f64, x2: f64) -> Point3 {
    let a = fold(x1);
    let b = fold(x2);
    let h = 1.0 - a.u.abs().max(b.u.abs());
    let sign = if a.flip != b.flip { -1.0 } else { 1.0 };
    Point3::new(a.u, b.u, sign * h)
}

/// Evaluate `Z(x)`. Heights above [`OVERFLOW_HEIGHT`] are refused.
pub fn zorich(x: Point3) -> Result<Point3> {
    if x.x3 > OVERFLOW_HEIGHT {
        return Err(Error::Overflow { height: x.x3, guard: OVERFLOW_HEIGHT });
    }
    Ok(x.x3.exp() * zorich_profile(x.x1, x.x2))
}

/// The principal preimage: central beam when `w3 ≥ 0`, the beam
/// `x1 ∈ [1, 3]` when `w3 < 0`.
fn principal_inverse(w: Point3) -> Point3 {
    let top = w.x1.abs().max(w.x2.abs());
    if w.x3 >= 0.0 {
        let rho = top + w.x3;
        Point3::new(w.x1 / rho, w.x2 / rho, rho.ln())
    } else {
        let rho = top - w.x3;
        Point3::new(2.0 - w.x1 / rho, w.x2 / rho, rho.ln())
    }
}

/// The inverse branch `φ_b(w)`; `Z(φ_b(w)) = w` for every branch.
pub fn zorich_inverse(w: Point3, b: BranchIndex) -> Result<Point3> {
    if w.is_origin() {
        return Err(Error::NoPreimage);
    }
    let mut y = principal_inverse(w);
    if b.rotated {
        y = rotate_half_turn(VerticalAxis::new(1.0, 1.0), y);
    }
    Ok(y + Point3::new(4.0 * b.n as f64, 4.0 * b.m as f64, 0.0))
}

fn nearest_odd(s: f64) -> f64 {
    2.0 * ((s - 1.0) / 2.0).round() + 1.0
}

/// Distance to the branch set `B_Z = {(2n+1, 2m+1, t)}`.
pub fn branch_locus_distance(x: Point3) -> f64 {
    (x.x1 - nearest_odd(x.x1)).hypot(x.x2 - nearest_odd(x.x2))
}

/// Distance to `V = Z(B_Z) ∪ {0}`, the two diagonal lines of `{y3 = 0}`.
pub fn image_locus_distance(w: Point3) -> f64 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let off_main = (r * (w.x1 - w.x2)).hypot(w.x3);
    let off_anti = (r * (w.x1 + w.x2)).hypot(w.x3);
    off_main.min(off_anti)
}

/// Distance (in the horizontal plane) to the loci where `Z` fails to be
/// smooth: the beam faces `x1, x2 ∈ 2Z + 1` and the diagonals `|u| = |v|`
/// of each beam, where the max in the third coordinate switches argument.
pub fn nonsmooth_locus_distance(x: Point3) -> f64 {
    let a = fold(x.x1);
    let b = fold(x.x2);
    let faces = (1.0 - a.u.abs()).min(1.0 - b.u.abs());
    let tie = (a.u.abs() - b.u.abs()).abs() * std::f64::consts::FRAC_1_SQRT_2;
    faces.min(tie)
}

/// Analytic derivative of `Z`, valid away from the non-smooth loci.
pub fn zorich_jacobian(x: Point3, exclusion: f64) -> Result<Mat3> {
    if nonsmooth_locus_distance(x) <= exclusion || branch_locus_distance(x) <= exclusion {
        return Err(Error::NotDifferentiable { radius: exclusion });
    }
    let a = fold(x.x1);
    let b = fold(x.x2);
    let sign = if a.flip != b.flip { -1.0 } else { 1.0 };
    let (dh1, dh2) = if a.u.abs() > b.u.abs() {
        (-a.u.signum() * a.slope(), 0.0)
    } else {
        (0.0, -b.u.signum() * b.slope())
    };
    let z = zorich(x)?;
    let e = x.x3.exp();
    Ok(Mat3::from_columns([
        e * Point3::new(a.slope(), 0.0, sign * dh1),
        e * Point3::new(0.0, b.slope(), sign * dh2),
        z,
    ]))
}
