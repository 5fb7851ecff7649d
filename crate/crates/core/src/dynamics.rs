//! Orbit classification for `λF` and `f_λ`, ray probes, the bounce
//! sequence of `f_λ` along the diagonal ray, and basin slices.
//!
//! Orbits are followed on the lifted side wherever possible: a state `y`
//! stands for the point `Z(T(y))`, and one step of `λF` is `y ↦ g_t(y)`.
//! Heights of order `e^{700}` therefore stay representable, and an orbit
//! is only cut when `g_t` itself can no longer be evaluated.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{mobius_finite, translate_t, translate_t_inv, Point3};
use crate::maps::{lift, MapConfig};
pub use crate::maps::{OrbitPoint, OrbitRecord};
use crate::parallel::ordered_map;
use crate::render::{ClassGrid, Pixel};
use crate::zorich::{zorich_inverse, zorich_profile, BranchIndex, OVERFLOW_HEIGHT};

/// A map acting on orbit points.
pub trait OrbitMap: Sync {
    /// The representation of a starting point.
    fn start(&self, x: Point3) -> OrbitPoint {
        OrbitPoint::from_point(x)
    }

    /// One step; `None` when the next point cannot be determined.
    fn step(&self, p: OrbitPoint) -> Option<OrbitPoint>;
}

/// `λF`, iterated through `g_{ln λ}` on the lifted side.
#[derive(Debug, Clone, Copy)]
pub struct LambdaF(pub MapConfig);

/// `f_λ = M ∘ λF`, with `0 ↦ ∞`. Infinity is terminal.
#[derive(Debug, Clone, Copy)]
pub struct FLambda(pub MapConfig);

/// Any map of R³; evaluation failures are treated as escape to ∞.
pub struct Direct<F>(pub F);

impl<F> OrbitMap for Direct<F>
where
    F: Fn(Point3) -> Result<Point3> + Sync,
{
    fn step(&self, p: OrbitPoint) -> Option<OrbitPoint> {
        match p.to_point() {
            None => Some(OrbitPoint::Infinity),
            Some(x) => Some(match (self.0)(x) {
                Ok(y) if y.is_finite() => OrbitPoint::from_point(y),
                _ => OrbitPoint::Infinity,
            }),
        }
    }
}

fn lift_point(x: Point3, cfg: &MapConfig) -> OrbitPoint {
    match lift(x, cfg) {
        Ok(y) => OrbitPoint::Lifted(y),
        Err(_) => OrbitPoint::Zero,
    }
}

/// Sign of the vertical part of `Z(y)`, which decides where `g_t(y)`
/// goes once `e^{y3}` is no longer representable.
fn overflow_direction(y: Point3) -> f64 {
    zorich_profile(y.x1, y.x2).x3
}

impl MapConfig {
    fn lifted_step(&self, p: OrbitPoint) -> std::result::Result<Point3, Option<OrbitPoint>> {
        let y = match p {
            OrbitPoint::Lifted(y) => y,
            OrbitPoint::Finite(x) => match lift(x, self) {
                Ok(y) => y,
                Err(_) => return Err(Some(OrbitPoint::Zero)),
            },
            other => return Err(Some(other)),
        };
        if y.x3 > OVERFLOW_HEIGHT {
            let s = overflow_direction(y);
            return Err(if s > 0.0 {
                Some(OrbitPoint::Infinity)
            } else if s < 0.0 {
                Some(OrbitPoint::Zero)
            } else {
                None
            });
        }
        self.shifted_g().eval(y).map_err(|_| None)
    }
}

impl OrbitMap for LambdaF {
    fn start(&self, x: Point3) -> OrbitPoint {
        lift_point(x, &self.0)
    }

    fn step(&self, p: OrbitPoint) -> Option<OrbitPoint> {
        match self.0.lifted_step(p) {
            Ok(y) => Some(OrbitPoint::Lifted(y)),
            // 0 and ∞ are fixed by λF.
            Err(q) => q,
        }
    }
}

impl OrbitMap for FLambda {
    fn start(&self, x: Point3) -> OrbitPoint {
        lift_point(x, &self.0)
    }

    fn step(&self, p: OrbitPoint) -> Option<OrbitPoint> {
        match p {
            OrbitPoint::Zero | OrbitPoint::Infinity => return Some(OrbitPoint::Infinity),
            _ => {}
        }
        match self.0.lifted_step(p) {
            Ok(gy) => {
                // λF(x) = Z(z) = e^{z3} Z(z1, z2, 0), and M(e^{c} w) = e^{-c} M(w).
                let z = translate_t(gy);
                let m = mobius_finite(zorich_profile(z.x1, z.x2));
                let w = zorich_inverse(m, self.0.branch).ok()?;
                Some(OrbitPoint::Lifted(translate_t_inv(w.raised(-z.x3))))
            }
            Err(Some(OrbitPoint::Infinity)) => Some(OrbitPoint::Zero),
            Err(Some(OrbitPoint::Zero)) => Some(OrbitPoint::Infinity),
            Err(_) => None,
        }
    }
}

/// Thresholds of [`classify_orbit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyParams {
    pub budget: usize,
    pub r_zero: f64,
    pub r_escape: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams { budget: 500, r_zero: 0.4, r_escape: 1e8 }
    }
}

impl ClassifyParams {
    pub fn with_budget(self, budget: usize) -> Self {
        ClassifyParams { budget, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::InvalidParameter("budget must be at least 1".into()));
        }
        if !(self.r_zero > 0.0 && self.r_zero < 0.5 && self.r_escape > 0.5 && self.r_escape.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < r_zero < 1/2 < r_escape, got {} and {}",
                self.r_zero, self.r_escape
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrbitTag {
    ToZero,
    Escaping,
    Oscillating,
    BoundedOther,
    Undecided,
}

impl OrbitTag {
    pub const ALL: [OrbitTag; 5] =
        [OrbitTag::ToZero, OrbitTag::Escaping, OrbitTag::Oscillating, OrbitTag::BoundedOther, OrbitTag::Undecided];

    pub fn name(self) -> &'static str {
        match self {
            OrbitTag::ToZero => "to-zero",
            OrbitTag::Escaping => "escaping",
            OrbitTag::Oscillating => "oscillating",
            OrbitTag::BoundedOther => "bounded",
            OrbitTag::Undecided => "undecided",
        }
    }
}

impl std::fmt::Display for OrbitTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Evidence behind a tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    /// Step at which the tag was decided; `None` for budget exhaustion.
    pub decided_at: Option<usize>,
    pub min_log_norm: f64,
    pub max_log_norm: f64,
    /// Alternating excursions above `r_escape` and below `r_zero`.
    pub highs: usize,
    pub lows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitClass {
    pub tag: OrbitTag,
    pub witness: Witness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Excursion {
    High,
    Low,
}

/// Follow the orbit of `x` for up to `budget` steps and classify it.
///
/// * `ToZero`: four consecutive samples inside `B(0, r_zero)` with strictly
///   decreasing norm, or the orbit lands on a fixed zero.
/// * `Escaping`: four consecutive samples beyond `r_escape` with strictly
///   increasing norm, or the orbit reaches a fixed ∞.
/// * `Oscillating`: at least two excursions beyond `r_escape` and two
///   inside `B(0, r_zero)`, alternating.
/// * `BoundedOther`: the budget runs out without the orbit leaving
///   `B(0, r_escape)`.
pub fn classify_orbit<M: OrbitMap + ?Sized>(x: Point3, map: &M, params: &ClassifyParams) -> (OrbitRecord, OrbitClass) {
    let (ln_zero, ln_escape) = (params.r_zero.ln(), params.r_escape.ln());
    let mut rec = OrbitRecord::default();
    let mut w = Witness {
        decided_at: None,
        min_log_norm: f64::INFINITY,
        max_log_norm: f64::NEG_INFINITY,
        highs: 0,
        lows: 0,
    };
    let mut last_excursion = None;
    let mut p = map.start(x);
    let mut tag = None;

    for k in 0..=params.budget {
        rec.push(p);
        let ln = p.log_norm();
        w.min_log_norm = w.min_log_norm.min(ln);
        w.max_log_norm = w.max_log_norm.max(ln);
        let excursion = if ln > ln_escape {
            Some(Excursion::High)
        } else if ln < ln_zero {
            Some(Excursion::Low)
        } else {
            None
        };
        if let Some(e) = excursion {
            if last_excursion != Some(e) {
                match e {
                    Excursion::High => w.highs += 1,
                    Excursion::Low => w.lows += 1,
                }
                last_excursion = Some(e);
            }
        }
        if w.highs >= 2 && w.lows >= 2 {
            tag = Some(OrbitTag::Oscillating);
        } else if trend(&rec.points, |a, b| b < a && a < ln_zero) {
            tag = Some(OrbitTag::ToZero);
        } else if trend(&rec.points, |a, b| b > a && b > ln_escape && a > ln_escape) {
            tag = Some(OrbitTag::Escaping);
        }
        if tag.is_some() {
            w.decided_at = Some(k);
            break;
        }
        if k == params.budget {
            break;
        }
        let next = map.step(p);
        let fixed = next == Some(p) && matches!(p, OrbitPoint::Zero | OrbitPoint::Infinity);
        let terminal = next.is_none() || fixed || (p == OrbitPoint::Infinity);
        if terminal {
            if p == OrbitPoint::Infinity || next.is_none() {
                rec.overflow_at = Some(k + 1);
            }
            tag = match p {
                OrbitPoint::Zero if fixed => Some(OrbitTag::ToZero),
                OrbitPoint::Infinity => Some(OrbitTag::Escaping),
                _ => Some(OrbitTag::Undecided),
            };
            w.decided_at = Some(k);
            break;
        }
        p = next.expect("checked above");
    }

    let tag = tag.unwrap_or(if w.max_log_norm <= ln_escape { OrbitTag::BoundedOther } else { OrbitTag::Undecided });
    (rec, OrbitClass { tag, witness: w })
}

/// Whether the last four log-norms (three steps) all satisfy `rel`.
fn trend(points: &[OrbitPoint], rel: impl Fn(f64, f64) -> bool) -> bool {
    if points.len() < 4 {
        return false;
    }
    let tail = &points[points.len() - 4..];
    tail.windows(2).all(|w| rel(w[0].log_norm(), w[1].log_norm()))
}

/// An orbit printed step by step.
pub fn trace_orbit<M: OrbitMap + ?Sized>(x: Point3, map: &M, steps: usize) -> OrbitRecord {
    let mut rec = OrbitRecord::default();
    let mut p = map.start(x);
    rec.push(p);
    for k in 1..=steps {
        match map.step(p) {
            Some(q) => {
                rec.push(q);
                if q == p && matches!(q, OrbitPoint::Zero | OrbitPoint::Infinity) {
                    break;
                }
                if q == OrbitPoint::Infinity {
                    rec.overflow_at = Some(k);
                    break;
                }
                p = q;
            }
            None => {
                rec.overflow_at = Some(k);
                break;
            }
        }
    }
    rec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    LambdaF,
    FLambda,
}

fn classify_with(which: Which, cfg: &MapConfig, x: Point3, params: &ClassifyParams) -> OrbitClass {
    match which {
        Which::LambdaF => classify_orbit(x, &LambdaF(*cfg), params).1,
        Which::FLambda => classify_orbit(x, &FLambda(*cfg), params).1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayRow {
    pub t: f64,
    pub class: OrbitClass,
    pub l_prime: f64,
    /// The class predicted for this `t`, if any.
    pub expected: Option<OrbitTag>,
}

impl RayRow {
    pub fn pass(&self) -> Option<bool> {
        self.expected.map(|e| e == self.class.tag)
    }
}

/// The class predicted for `t(1,1,0)`.
pub fn predicted_ray_class(which: Which, cfg: &MapConfig, t: f64) -> Option<OrbitTag> {
    let lp = cfg.l_prime();
    let a = t.abs();
    match which {
        Which::LambdaF if a > lp => Some(OrbitTag::Escaping),
        Which::LambdaF if a < 1.0 && cfg.lambda < 1.0 => Some(OrbitTag::ToZero),
        Which::FLambda if cfg.lambda < 1.0 && (a > lp || (a > 0.0 && a < 0.5 / lp)) => Some(OrbitTag::Oscillating),
        _ => None,
    }
}

/// Classify the points `t(1,1,0)` and compare with the predicted classes.
pub fn halfray_probe(cfg: &MapConfig, t_values: &[f64], which: Which, params: &ClassifyParams) -> Result<Vec<RayRow>> {
    if t_values.iter().any(|&t| t == 0.0 || !t.is_finite()) {
        return Err(Error::InvalidParameter("ray parameters must be finite and nonzero".into()));
    }
    Ok(t_values
        .iter()
        .map(|&t| RayRow {
            t,
            class: classify_with(which, cfg, Point3::new(t, t, 0.0), params),
            l_prime: cfg.l_prime(),
            expected: predicted_ray_class(which, cfg, t),
        })
        .collect())
}

/// A signed scalar `α` held as `(sign, ln |α|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScalar {
    pub sign: f64,
    pub ln_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BounceTrace {
    /// `α_k` from the closed-form ray recursion.
    pub closed_form: Vec<LogScalar>,
    /// `α_k` read off the numerical orbit.
    pub numeric: Vec<LogScalar>,
    /// Largest `|Δ ln|α_k||` (a relative error in `α_k`), with sign agreement.
    pub max_rel_error: f64,
    /// Largest distance of a numerical iterate's direction from the ray.
    pub max_off_ray: f64,
    /// The closed form stopped because `e^L ≥ |α| ≥ 1` or the numbers left
    /// the representable range.
    pub truncated: bool,
    pub signs_agree: bool,
    /// `α_1, α_3, …` and `α_2, α_4, …` are strictly monotone in opposite
    /// directions, one toward ∞ and one toward 0.
    pub alternates: bool,
}

impl BounceTrace {
    /// Number of steps after the start compared against the closed form.
    pub fn bounces(&self) -> usize {
        self.closed_form.len().min(self.numeric.len()).saturating_sub(1)
    }
}

/// The coefficients `α_k` with `f_λ^k(t(1,1,0)) = α_k (1,1,0)`, from the
/// closed form `λF(α(1,1,0)) = λ e^{|α|} α (1,1,0)` for `|α| > e^L`,
/// `λα(1,1,0)` for `|α| < 1`, and `M(α(1,1,0)) = (1,1,0)/(2α)`, next to the
/// numerical orbit.
pub fn bu_bounce_trace(t: f64, cfg: &MapConfig, steps: usize) -> Result<BounceTrace> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidParameter("ray parameter must be finite and nonzero".into()));
    }
    let ln_lambda = cfg.lambda.ln();
    let el = cfg.g.ceiling().exp();
    let mut closed = vec![LogScalar { sign: t.signum(), ln_abs: t.abs().ln() }];
    let mut truncated = false;
    for _ in 0..steps {
        let a = *closed.last().expect("non-empty");
        let ln_f = if a.ln_abs > el.ln() {
            ln_lambda + a.ln_abs.exp() + a.ln_abs
        } else if a.ln_abs < 0.0 {
            ln_lambda + a.ln_abs
        } else {
            truncated = true;
            break;
        };
        if !ln_f.is_finite() {
            truncated = true;
            break;
        }
        closed.push(LogScalar { sign: a.sign, ln_abs: -std::f64::consts::LN_2 - ln_f });
    }

    let map = FLambda(*cfg);
    let rec = trace_orbit(Point3::new(t, t, 0.0), &map, closed.len() - 1);
    let mut numeric = Vec::new();
    let mut max_off_ray: f64 = 0.0;
    for p in &rec.points {
        let OrbitPoint::Lifted(y) = *p else { break };
        let z = translate_t(y);
        let dir = zorich_profile(z.x1, z.x2);
        max_off_ray = max_off_ray.max((dir.x1 - dir.x2).abs().max(dir.x3.abs()));
        numeric.push(LogScalar { sign: dir.x1.signum(), ln_abs: p.log_norm() - std::f64::consts::LN_2 / 2.0 });
    }

    let n = closed.len().min(numeric.len());
    let mut max_rel_error: f64 = 0.0;
    let mut signs_agree = true;
    for (c, m) in closed.iter().zip(&numeric).take(n) {
        max_rel_error = max_rel_error.max((c.ln_abs - m.ln_abs).abs());
        signs_agree &= c.sign == m.sign;
    }

    let monotone = |start: usize| -> Option<f64> {
        let seq: Vec<f64> = closed.iter().skip(start).step_by(2).map(|a| a.ln_abs).collect();
        if seq.len() < 2 {
            return None;
        }
        let dir = (seq[1] - seq[0]).signum();
        seq.windows(2).all(|w| (w[1] - w[0]).signum() == dir && w[1] != w[0]).then_some(dir)
    };
    let alternates = match (monotone(1), monotone(2)) {
        (Some(a), Some(b)) => a == -b,
        _ => false,
    };

    Ok(BounceTrace { closed_form: closed, numeric, max_rel_error, max_off_ray, truncated, signs_agree, alternates })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLineReport {
    pub samples: usize,
    pub passed: usize,
    /// Up to ten failing lifted points.
    pub failures: Vec<Point3>,
}

impl LatticeLineReport {
    pub fn pass_rate(&self) -> f64 {
        self.passed as f64 / self.samples.max(1) as f64
    }
}

/// Sample points `(4n + c, 4m + c, x3)` with `c ∈ {0, 2}` and
/// `x3 ∈ (ln L', ln L' + 3]`; each must map under `Z∘T` onto the diagonal
/// ray beyond `L'` and escape under `λF`.
pub fn lattice_line_probe<R: Rng>(cfg: &MapConfig, samples: usize, params: &ClassifyParams, rng: &mut R) -> Result<LatticeLineReport> {
    if cfg.lambda > cfg.g.derived_c() {
        return Err(Error::InvalidParameter(format!("lambda {} exceeds the certified constant {}", cfg.lambda, cfg.g.derived_c())));
    }
    let lp = cfg.l_prime();
    let map = LambdaF(*cfg);
    let mut report = LatticeLineReport { samples, passed: 0, failures: Vec::new() };
    for _ in 0..samples {
        let c = if rng.gen::<bool>() { 2.0 } else { 0.0 };
        let (n, m) = (rng.gen_range(-5i64..=5), rng.gen_range(-5i64..=5));
        let h = lp.ln() + 3.0 * (1.0 - rng.gen::<f64>());
        let y = Point3::new(4.0 * n as f64 + c, 4.0 * m as f64 + c, h);
        let x = crate::zorich::zorich(translate_t(y))?;
        let t = x.x1;
        let on_ray = x.x1 == x.x2 && x.x3 == 0.0 && t.abs() > lp;
        let class = classify_orbit(x, &map, params).1;
        if on_ray && class.tag == OrbitTag::Escaping {
            report.passed += 1;
        } else if report.failures.len() < 10 {
            report.failures.push(y);
        }
    }
    Ok(report)
}

/// A plane through `origin` spanned by orthonormal `e1`, `e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSlice {
    pub origin: Point3,
    pub e1: Point3,
    pub e2: Point3,
}

impl Default for PlaneSlice {
    /// `span{(1,1,0)/√2, (0,0,1)}`, containing the diagonal ray.
    fn default() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        PlaneSlice { origin: Point3::ORIGIN, e1: Point3::new(r, r, 0.0), e2: Point3::new(0.0, 0.0, 1.0) }
    }
}

impl PlaneSlice {
    pub fn new(origin: Point3, e1: Point3, e2: Point3) -> Result<Self> {
        let ok = (e1.norm() - 1.0).abs() < 1e-9 && (e2.norm() - 1.0).abs() < 1e-9 && e1.dot(e2).abs() < 1e-9;
        if !ok || !origin.is_finite() {
            return Err(Error::InvalidParameter("slice needs an orthonormal pair of spanning vectors".into()));
        }
        Ok(PlaneSlice { origin, e1, e2 })
    }

    pub fn at(&self, s: f64, r: f64) -> Point3 {
        self.origin + s * self.e1 + r * self.e2
    }
}

/// The rectangle `[s_min, s_max) × (r_min, r_max]` of slice coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub s_min: f64,
    pub s_max: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window { s_min: -20.0, s_max: 20.0, r_min: -20.0, r_max: 20.0 }
    }
}

impl Window {
    pub fn new(s_min: f64, s_max: f64, r_min: f64, r_max: f64) -> Result<Self> {
        if !(s_min < s_max && r_min < r_max) || ![s_min, s_max, r_min, r_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("window bounds must be finite and increasing".into()));
        }
        Ok(Window { s_min, s_max, r_min, r_max })
    }

    /// Slice coordinates of pixel `(i, j)`: its top-left corner, so that a
    /// symmetric window with an even resolution samples both axes.
    pub fn pixel(&self, i: usize, j: usize, width: usize, height: usize) -> (f64, f64) {
        let s = self.s_min + (self.s_max - self.s_min) * i as f64 / width as f64;
        let r = self.r_max - (self.r_max - self.r_min) * j as f64 / height as f64;
        (s, r)
    }
}

/// Classify every pixel of a planar slice under `λF`, in parallel.
/// The result does not depend on `workers`.
pub fn basin_slice(
    cfg: &MapConfig,
    slice: &PlaneSlice,
    window: &Window,
    res: (usize, usize),
    params: &ClassifyParams,
    workers: usize,
) -> Result<ClassGrid> {
    params.validate()?;
    let (width, height) = res;
    let map = LambdaF(*cfg);
    let rows = ordered_map(height, workers, |j| {
        (0..width)
            .map(|i| {
                let (s, r) = window.pixel(i, j, width, height);
                let class = classify_orbit(slice.at(s, r), &map, params).1;
                Pixel { tag: class.tag, decided_at: class.witness.decided_at }
            })
            .collect::<Vec<_>>()
    });
    Ok(ClassGrid::new(width, height, rows.into_iter().flatten().collect()))
}

/// Classification of `x` under every branch in `branches`, for checking
/// that the tag does not depend on the branch.
pub fn branch_classes(cfg: &MapConfig, x: Point3, branches: &[BranchIndex], params: &ClassifyParams) -> Vec<OrbitTag> {
    branches.iter().map(|&b| classify_with(Which::LambdaF, &cfg.with_branch(b), x, params).tag).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp_g::GConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(lambda: f64) -> MapConfig {
        MapConfig::new(lambda, GConfig::default()).unwrap()
    }

    fn ray(t: f64) -> Point3 {
        Point3::new(t, t, 0.0)
    }

    fn tag<M: OrbitMap>(x: Point3, map: &M) -> OrbitTag {
        classify_orbit(x, map, &ClassifyParams::default()).1.tag
    }

    #[test]
    fn classifier_on_simple_maps() {
        assert_eq!(tag(Point3::new(1.0, 0.0, 0.0), &Direct(|x: Point3| Ok(0.5 * x))), OrbitTag::ToZero);
        assert_eq!(tag(Point3::new(1.0, 0.0, 0.0), &Direct(|x: Point3| Ok(3.0 * x))), OrbitTag::Escaping);
        assert_eq!(tag(Point3::new(1.0, 0.0, 0.0), &Direct(|x: Point3| Ok(-1.0 * x))), OrbitTag::BoundedOther);
        // M swaps 1e10 and 1e-10.
        assert_eq!(tag(Point3::new(1e10, 0.0, 0.0), &Direct(|x: Point3| Ok(mobius_finite(x)))), OrbitTag::Oscillating);
        let (rec, class) = classify_orbit(Point3::new(1.0, 0.0, 0.0), &Direct(|x: Point3| Ok(x)), &ClassifyParams::default().with_budget(7));
        assert_eq!(class.tag, OrbitTag::BoundedOther);
        assert_eq!(rec.points.len(), 8);
    }

    #[test]
    fn params_validation() {
        assert!(ClassifyParams::default().validate().is_ok());
        assert!(ClassifyParams { r_zero: 0.6, ..Default::default() }.validate().is_err());
        assert!(ClassifyParams::default().with_budget(0).validate().is_err());
    }

    #[test]
    fn classification_examples() {
        assert_eq!(tag(Point3::new(0.1, 0.0, 0.0), &LambdaF(cfg(0.5))), OrbitTag::ToZero);
        assert_eq!(tag(ray(12.0), &LambdaF(cfg(5e-5))), OrbitTag::Escaping);
        assert_eq!(tag(ray(10.0), &FLambda(cfg(0.5))), OrbitTag::Oscillating);
        assert_eq!(tag(Point3::ORIGIN, &LambdaF(cfg(0.5))), OrbitTag::ToZero);
        // λ = 1 fixes B(0, 1/2) pointwise.
        assert_eq!(tag(Point3::new(0.1, 0.0, 0.0), &LambdaF(cfg(1.0))), OrbitTag::BoundedOther);
    }

    #[test]
    fn lifted_orbit_matches_direct_evaluation() {
        let c = cfg(0.5);
        let x = Point3::new(1.7, -0.3, 0.9);
        let lifted = trace_orbit(x, &LambdaF(c), 3);
        let direct = crate::maps::iterate(x, 3, &c, crate::maps::IterPath::Direct);
        for (p, q) in lifted.points.iter().zip(&direct.points) {
            assert!(p.to_point().unwrap().rel_residual(q.to_point().unwrap()) < 1e-9);
        }
        let f = FLambda(c);
        let mut p = Point3::new(0.4, 2.0, -1.0);
        let mut o = f.start(p);
        for _ in 0..3 {
            let want = crate::maps::f_lambda_eval(p.into(), &c).unwrap().finite().unwrap();
            o = f.step(o).unwrap();
            assert!(o.to_point().unwrap().rel_residual(want) < 1e-9);
            p = want;
        }
    }

    #[test]
    fn f_lambda_pole_and_terminal_infinity() {
        let f = FLambda(cfg(0.5));
        assert_eq!(f.step(OrbitPoint::Zero), Some(OrbitPoint::Infinity));
        let rec = trace_orbit(Point3::ORIGIN, &f, 5);
        assert_eq!(rec.points, vec![OrbitPoint::Zero, OrbitPoint::Infinity]);
        assert_eq!(rec.overflow_at, Some(1));
    }

    #[test]
    fn ray_probe_examples() {
        let small = cfg(5e-5);
        let lp = small.l_prime();
        let rows = halfray_probe(&small, &[1.1 * lp, -1.1 * lp, 0.5], Which::LambdaF, &ClassifyParams::default()).unwrap();
        assert!(rows.iter().all(|r| r.pass() == Some(true)), "{rows:?}");
        let half = cfg(0.5);
        let lp = half.l_prime();
        let rows = halfray_probe(&half, &[0.9 / (2.0 * lp), 8.0, -10.0, 20.0], Which::FLambda, &ClassifyParams::default()).unwrap();
        assert!(rows.iter().all(|r| r.pass() == Some(true)), "{rows:?}");
        let rows = halfray_probe(&half, &[0.5], Which::LambdaF, &ClassifyParams::default()).unwrap();
        assert_eq!(rows[0].class.tag, OrbitTag::ToZero);
        assert!(halfray_probe(&half, &[0.0], Which::LambdaF, &ClassifyParams::default()).is_err());
    }

    #[test]
    fn ray_escape_band_for_small_lambda() {
        let c = cfg(5e-5);
        let lp = c.l_prime();
        let params = ClassifyParams::default().with_budget(50);
        for k in 1..=40 {
            let t = lp * (1.0 + k as f64 / 40.0);
            for s in [t, -t] {
                let class = classify_orbit(ray(s), &LambdaF(c), &params).1;
                assert_eq!(class.tag, OrbitTag::Escaping, "{s}");
            }
        }
    }

    #[test]
    fn bounce_trace_oracle() {
        let c = cfg(0.5);
        let tr = bu_bounce_trace(10.0, &c, 8).unwrap();
        let e = |k: usize| tr.closed_form[k].ln_abs.exp();
        assert!((e(1) - 1.0 / (2.0 * 0.5 * 10.0 * 10f64.exp())).abs() / e(1) < 1e-12);
        assert!((e(2) - 10.0 * 10f64.exp()).abs() / e(2) < 1e-12);
        assert!(tr.bounces() >= 4, "{tr:?}");
        assert!(tr.max_rel_error < 1e-6 && tr.signs_agree && tr.max_off_ray < 1e-9);
        assert!(tr.alternates);

        let lp = c.l_prime();
        let tr = bu_bounce_trace(0.9 / (2.0 * lp), &c, 8).unwrap();
        assert!(tr.closed_form[1].ln_abs.exp() > lp);
        assert!(tr.bounces() >= 4 && tr.max_rel_error < 1e-6 && tr.alternates);
    }

    #[test]
    fn lattice_lines_escape() {
        let c = cfg(5e-5);
        let y = Point3::new(0.0, 0.0, (1.1 * c.l_prime()).ln());
        let x = crate::zorich::zorich(translate_t(y)).unwrap();
        assert!(x.rel_residual(ray(-1.1 * c.l_prime())) < 1e-12);
        let x = crate::zorich::zorich(translate_t(Point3::new(2.0, 2.0, 1.0))).unwrap();
        assert!(x.rel_residual(ray(1f64.exp())) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let report = lattice_line_probe(&c, 1000, &ClassifyParams::default(), &mut rng).unwrap();
        assert_eq!(report.pass_rate(), 1.0, "{report:?}");
        assert!(lattice_line_probe(&cfg(0.5), 1, &ClassifyParams::default(), &mut rng).is_err());
    }

    #[test]
    fn half_ball_goes_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = ClassifyParams::default().with_budget(200);
        for lambda in [0.9, 0.5, 5e-5] {
            let m = LambdaF(cfg(lambda));
            for _ in 0..300 {
                let x = Point3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                if x.norm() >= 0.5 {
                    continue;
                }
                assert_eq!(tag(x, &m), OrbitTag::ToZero, "{x}");
                assert_eq!(classify_orbit(x, &m, &params).1.tag, OrbitTag::ToZero);
            }
        }
    }

    #[test]
    fn classification_is_branch_independent() {
        let c = cfg(5e-5);
        let branches = [BranchIndex::PRINCIPAL, BranchIndex::new(1, -2, 1).unwrap(), BranchIndex::new(-3, 0, 0).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let x = Point3::new(rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0));
            let tags = branch_classes(&c, x, &branches, &ClassifyParams::default().with_budget(200));
            assert!(tags.windows(2).all(|w| w[0] == w[1]), "{x}: {tags:?}");
        }
    }

    #[test]
    fn window_samples_axes() {
        let w = Window::default();
        assert_eq!(w.pixel(0, 0, 256, 256), (-20.0, 20.0));
        assert_eq!(w.pixel(128, 128, 256, 256), (0.0, 0.0));
        assert!(Window::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(PlaneSlice::new(Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn slice_is_deterministic_across_workers() {
        let c = cfg(5e-5);
        let params = ClassifyParams::default().with_budget(100);
        let a = basin_slice(&c, &PlaneSlice::default(), &Window::default(), (32, 24), &params, 1).unwrap();
        let b = basin_slice(&c, &PlaneSlice::default(), &Window::default(), (32, 24), &params, 6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pixels().len(), 32 * 24);
    }
}
