//! The composed maps `λF = Z ∘ T ∘ g_{ln λ} ∘ T⁻¹ ∘ φ` (with `F(0) = 0`)
//! and `f_λ = M ∘ λF` (with `f_λ(0) = ∞`), plus residuals for the
//! semi-conjugacy `λF ∘ (Z∘T) = (Z∘T) ∘ g_{ln λ}` and for independence of
//! the inverse branch `φ`.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{mobius_finite, translate_t, translate_t_inv, ExtPoint, Point3};
use crate::interp_g::{GConfig, ShiftedG};
use crate::zorich::{zorich, zorich_inverse, zorich_profile, BranchIndex};

/// One concrete member `λF` of the family, with its conjugate `f_λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapConfig {
    pub lambda: f64,
    pub g: GConfig,
    pub branch: BranchIndex,
    /// Iterations on R³ stop once a point leaves this ball.
    pub overflow_radius: f64,
}

impl MapConfig {
    pub fn new(lambda: f64, g: GConfig) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive and finite, got {lambda}")));
        }
        Ok(MapConfig { lambda, g, branch: BranchIndex::PRINCIPAL, overflow_radius: 1e10 })
    }

    pub fn with_branch(self, branch: BranchIndex) -> Self {
        MapConfig { branch, ..self }
    }

    pub fn with_overflow_radius(self, r: f64) -> Result<Self> {
        if !(r > 1.0) {
            return Err(Error::InvalidParameter(format!("overflow radius must exceed 1, got {r}")));
        }
        Ok(MapConfig { overflow_radius: r, ..self })
    }

    /// `g_{ln λ}`.
    pub fn shifted_g(&self) -> ShiftedG {
        self.g.shifted(self.lambda.ln())
    }

    /// `L' = max(ln(1/λ), e^L)`, the threshold of the ray dynamics.
    pub fn l_prime(&self) -> f64 {
        (1.0 / self.lambda).ln().max(self.g.ceiling().exp())
    }
}

/// Pull a nonzero point back to the lifted side: `T⁻¹(φ(x))`.
pub fn lift(x: Point3, cfg: &MapConfig) -> Result<Point3> {
    Ok(translate_t_inv(zorich_inverse(x, cfg.branch)?))
}

/// `λF(x)`. Fails with `Overflow` when the result is not representable.
pub fn lambda_f_eval(x: Point3, cfg: &MapConfig) -> Result<Point3> {
    if x.is_origin() {
        return Ok(Point3::ORIGIN);
    }
    let y = cfg.shifted_g().eval(lift(x, cfg)?)?;
    zorich(translate_t(y))
}

/// `f_λ(x) = M(λF(x))`, with `f_λ(0) = ∞`. The map is not defined at ∞.
pub fn f_lambda_eval(x: ExtPoint, cfg: &MapConfig) -> Result<ExtPoint> {
    match x {
        ExtPoint::Infinity => Err(Error::InvalidParameter("f_lambda is evaluated on R³ only".into())),
        ExtPoint::Finite(p) if p.is_origin() => Ok(ExtPoint::Infinity),
        ExtPoint::Finite(p) => Ok(ExtPoint::Finite(mobius_finite(lambda_f_eval(p, cfg)?))),
    }
}

/// A point of an orbit. `Lifted(y)` stands for `Z(T(y))`, which keeps
/// orbits meaningful far beyond the range of `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitPoint {
    Finite(Point3),
    Lifted(Point3),
    Zero,
    Infinity,
}

impl OrbitPoint {
    pub fn from_point(p: Point3) -> Self {
        if p.is_origin() {
            OrbitPoint::Zero
        } else {
            OrbitPoint::Finite(p)
        }
    }

    /// `ln |x|`, infinite for `Zero` and `Infinity`.
    pub fn log_norm(self) -> f64 {
        match self {
            OrbitPoint::Finite(p) => p.norm().ln(),
            OrbitPoint::Lifted(y) => {
                let t = translate_t(y);
                y.x3 + zorich_profile(t.x1, t.x2).norm().ln()
            }
            OrbitPoint::Zero => f64::NEG_INFINITY,
            OrbitPoint::Infinity => f64::INFINITY,
        }
    }

    /// The point itself when it is representable.
    pub fn to_point(self) -> Option<Point3> {
        match self {
            OrbitPoint::Finite(p) => Some(p),
            OrbitPoint::Lifted(y) => zorich(translate_t(y)).ok().filter(|p| p.is_finite()),
            OrbitPoint::Zero => Some(Point3::ORIGIN),
            OrbitPoint::Infinity => None,
        }
    }
}

impl fmt::Display for OrbitPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitPoint::Zero => f.write_str("0"),
            OrbitPoint::Infinity => f.write_str("inf"),
            p => match p.to_point() {
                Some(q) => q.fmt(f),
                None => write!(f, "exp({})", p.log_norm()),
            },
        }
    }
}

/// A forward orbit. Truncation is always flagged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrbitRecord {
    pub points: Vec<OrbitPoint>,
    /// Step at which the orbit overflowed and was cut.
    pub overflow_at: Option<usize>,
    /// First step at which the orbit reached the origin.
    pub zero_at: Option<usize>,
}

impl OrbitRecord {
    pub(crate) fn push(&mut self, p: OrbitPoint) {
        if p == OrbitPoint::Zero && self.zero_at.is_none() {
            self.zero_at = Some(self.points.len());
        }
        self.points.push(p);
    }

    pub fn last(&self) -> Option<Point3> {
        self.points.last().and_then(|p| p.to_point())
    }
}

/// How `iterate` composes the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterPath {
    /// `λF` applied `n` times.
    Direct,
    /// `φ` once, `g_{ln λ}` `n` times, `Z∘T` once per recorded point.
    Conjugated,
}

/// `n` iterates of `λF` starting at `x`, on R³.
pub fn iterate(x: Point3, n: usize, cfg: &MapConfig, path: IterPath) -> OrbitRecord {
    let mut rec = OrbitRecord::default();
    rec.push(OrbitPoint::from_point(x));
    if x.is_origin() {
        for _ in 0..n {
            rec.push(OrbitPoint::Zero);
        }
        return rec;
    }
    let within = |p: Point3| p.norm() <= cfg.overflow_radius;
    match path {
        IterPath::Direct => {
            let mut p = x;
            for k in 1..=n {
                match lambda_f_eval(p, cfg) {
                    Ok(q) if within(q) => {
                        rec.push(OrbitPoint::from_point(q));
                        p = q;
                    }
                    _ => {
                        rec.overflow_at = Some(k);
                        break;
                    }
                }
            }
        }
        IterPath::Conjugated => {
            let gt = cfg.shifted_g();
            let Ok(mut y) = lift(x, cfg) else {
                return rec;
            };
            for k in 1..=n {
                let next = gt.eval(y).and_then(|y2| zorich(translate_t(y2)).map(|p| (y2, p)));
                match next {
                    Ok((y2, p)) if within(p) => {
                        rec.push(OrbitPoint::from_point(p));
                        y = y2;
                    }
                    _ => {
                        rec.overflow_at = Some(k);
                        break;
                    }
                }
            }
        }
    }
    rec
}

fn not_evaluable(e: Error) -> Error {
    match e {
        Error::Overflow { .. } => Error::NotEvaluable(e.to_string()),
        other => other,
    }
}

/// `|λF(Z(T(x))) - Z(T(g_{ln λ}(x)))| / (1 + |Z(T(g_{ln λ}(x)))|)`.
pub fn semiconjugacy_residual(x: Point3, cfg: &MapConfig) -> Result<f64> {
    let rhs = zorich(translate_t(cfg.shifted_g().eval(x)?)).map_err(not_evaluable)?;
    let lhs = lambda_f_eval(zorich(translate_t(x)).map_err(not_evaluable)?, cfg).map_err(not_evaluable)?;
    Ok(lhs.rel_residual(rhs))
}

/// Relative difference of `λF(x)` computed through branches `b1` and `b2`.
pub fn branch_independence_residual(x: Point3, cfg: &MapConfig, b1: BranchIndex, b2: BranchIndex) -> Result<f64> {
    let p = lambda_f_eval(x, &cfg.with_branch(b1))?;
    let q = lambda_f_eval(x, &cfg.with_branch(b2))?;
    Ok(p.rel_residual(q))
}
