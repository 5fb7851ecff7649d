//! Finite-difference Jacobians and the distortion quantities
//! `K_O = σ_max³ / |det|`, `K_I = |det| / σ_min³`, `K = max(K_O, K_I)` in
//! dimension 3, with grid scans over boxes.
//!
//! Scanned maxima are empirical lower bounds for the essential supremum of
//! the dilatation, never certified bounds.

use crate::error::{Error, Result};
use crate::geometry::{translate_t, translate_t_inv, Point3};
use crate::interp_g::GConfig;
use crate::linalg::Mat3;
use crate::maps::{lambda_f_eval, MapConfig};
use crate::parallel::ordered_map;
use crate::zorich::{branch_locus_distance, nonsmooth_locus_distance, zorich, zorich_inverse};

pub const DEFAULT_STEP: f64 = 1e-6;

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` per column.
pub fn jacobian_fd<F>(map: &F, x: Point3, h: f64) -> Result<Mat3>
where
    F: Fn(Point3) -> Result<Point3> + ?Sized,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let mut cols = [Point3::ORIGIN; 3];
    for (axis, col) in cols.iter_mut().enumerate() {
        // Divide by the step actually taken after rounding.
        let (up, down) = (x.get(axis) + h, x.get(axis) - h);
        let probe = |s: f64| map(x.with(axis, s)).map_err(|e| Error::NotEvaluable(e.to_string()));
        let d = probe(up)? - probe(down)?;
        *col = (1.0 / (up - down)) * d;
        if !col.is_finite() {
            return Err(Error::NotEvaluable(format!("non-finite difference along axis {axis}")));
        }
    }
    Ok(Mat3::from_columns(cols))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilatationSample {
    pub point: Point3,
    pub jacobian: Mat3,
    /// `(σ_max, σ_mid, σ_min)`.
    pub singular_values: [f64; 3],
    pub det: f64,
    pub k_outer: f64,
    pub k_inner: f64,
    pub k: f64,
    pub sense_preserving: bool,
}

impl DilatationSample {
    pub fn from_jacobian(point: Point3, jacobian: Mat3) -> Result<Self> {
        let det = jacobian.det();
        if !(det.abs() > 1e-300 && det.is_finite()) {
            return Err(Error::Degenerate(det));
        }
        let sv = jacobian.singular_values();
        let k_outer = sv[0].powi(3) / det.abs();
        let k_inner = det.abs() / sv[2].powi(3);
        Ok(DilatationSample {
            point,
            jacobian,
            singular_values: sv,
            det,
            k_outer,
            k_inner,
            k: k_outer.max(k_inner),
            sense_preserving: det > 0.0,
        })
    }
}

/// Distortion of `map` at `x` from a finite-difference Jacobian.
pub fn dilatation_at<F>(map: &F, x: Point3, h: f64) -> Result<DilatationSample>
where
    F: Fn(Point3) -> Result<Point3> + ?Sized,
{
    DilatationSample::from_jacobian(x, jacobian_fd(map, x, h)?)
}

/// An axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanBox {
    pub lo: Point3,
    pub hi: Point3,
}

impl ScanBox {
    pub fn new(lo: Point3, hi: Point3) -> Self {
        ScanBox { lo, hi }
    }

    pub fn shifted(self, by: Point3) -> Self {
        ScanBox { lo: self.lo + by, hi: self.hi + by }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub region: ScanBox,
    /// Grid points per axis, endpoints included.
    pub grid: [usize; 3],
    pub step: f64,
    /// Points closer than this to a non-smooth locus are skipped.
    pub exclusion: f64,
    pub workers: usize,
}

impl ScanSpec {
    pub fn new(region: ScanBox, grid: [usize; 3]) -> Self {
        ScanSpec { region, grid, step: DEFAULT_STEP, exclusion: crate::zorich::DEFAULT_EXCLUSION, workers: 1 }
    }

    fn point(&self, idx: usize) -> Point3 {
        let [n1, n2, n3] = self.grid;
        let coord = |i: usize, n: usize, lo: f64, hi: f64| lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let (r, k) = (idx / n3, idx % n3);
        let (i, j) = (r / n2, r % n2);
        let (lo, hi) = (self.region.lo, self.region.hi);
        debug_assert!(i < n1);
        Point3::new(coord(i, n1, lo.x1, hi.x1), coord(j, n2, lo.x2, hi.x2), coord(k, n3, lo.x3, hi.x3))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilatationScan {
    /// Valid samples in grid order.
    pub samples: Vec<DilatationSample>,
    pub excluded: usize,
    /// Points inside the smooth region where evaluation still failed.
    pub failed: usize,
}

/// Aggregate of a scan. `max_k` is an empirical lower bound for the
/// essential supremum of `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSummary {
    pub count: usize,
    pub excluded: usize,
    pub failed: usize,
    pub max_k: f64,
    pub argmax: Point3,
    pub mean_k: f64,
    pub median_k: f64,
    pub p90_k: f64,
    pub p99_k: f64,
    pub min_k_outer: f64,
    pub min_k_inner: f64,
    pub min_det: f64,
    pub all_sense_preserving: bool,
}

impl DilatationScan {
    pub fn summary(&self) -> ScanSummary {
        let mut ks: Vec<f64> = self.samples.iter().map(|s| s.k).collect();
        ks.sort_by(f64::total_cmp);
        let q = |p: f64| ks[((p * ks.len() as f64).ceil() as usize).clamp(1, ks.len()) - 1];
        let top = self.samples.iter().max_by(|a, b| a.k.total_cmp(&b.k)).expect("scan is non-empty");
        let fold = |f: fn(&DilatationSample) -> f64| self.samples.iter().map(f).fold(f64::INFINITY, f64::min);
        ScanSummary {
            count: ks.len(),
            excluded: self.excluded,
            failed: self.failed,
            max_k: top.k,
            argmax: top.point,
            mean_k: ks.iter().sum::<f64>() / ks.len() as f64,
            median_k: q(0.5),
            p90_k: q(0.9),
            p99_k: q(0.99),
            min_k_outer: fold(|s| s.k_outer),
            min_k_inner: fold(|s| s.k_inner),
            min_det: fold(|s| s.det),
            all_sense_preserving: self.samples.iter().all(|s| s.sense_preserving),
        }
    }
}

/// Sample the dilatation of `map` on a grid, skipping points where
/// `distance` (to the map's non-smooth locus) is at most the exclusion.
pub fn dilatation_scan<F, D>(map: &F, distance: &D, spec: &ScanSpec) -> Result<DilatationScan>
where
    F: Fn(Point3) -> Result<Point3> + Sync,
    D: Fn(Point3) -> f64 + Sync,
{
    if spec.grid.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParameter("scan grid needs at least 2 points per axis".into()));
    }
    let total = spec.grid.iter().product();
    let results = ordered_map(total, spec.workers, |idx| {
        let x = spec.point(idx);
        if distance(x) <= spec.exclusion {
            return None;
        }
        Some(dilatation_at(map, x, spec.step))
    });
    let mut scan = DilatationScan { samples: Vec::new(), excluded: 0, failed: 0 };
    for r in results {
        match r {
            None => scan.excluded += 1,
            Some(Ok(s)) => scan.samples.push(s),
            Some(Err(_)) => scan.failed += 1,
        }
    }
    if scan.samples.is_empty() {
        return Err(Error::EmptyScan);
    }
    Ok(scan)
}

/// Distance to the loci where `Z` is not smooth.
pub fn zorich_smooth_distance(x: Point3) -> f64 {
    nonsmooth_locus_distance(x).min(branch_locus_distance(x))
}

/// Distance to the loci where `g` is not smooth: those of `Z` and the two
/// levels bounding the transition slab.
pub fn g_smooth_distance(g: &GConfig, x: Point3) -> f64 {
    zorich_smooth_distance(x).min(x.x3.abs()).min((x.x3 - g.ceiling()).abs())
}

/// A heuristic distance to the loci where `λF` is not smooth, measured on
/// the lifted side and rescaled by `|x|/2` (the local scale of `Z`).
pub fn lambda_f_smooth_distance(cfg: &MapConfig, x: Point3) -> f64 {
    let Ok(w) = zorich_inverse(x, cfg.branch) else {
        return 0.0;
    };
    let y = translate_t_inv(w);
    let Ok(gy) = cfg.shifted_g().eval(y) else {
        return 0.0;
    };
    let d = zorich_smooth_distance(w).min(g_smooth_distance(&cfg.g, y)).min(zorich_smooth_distance(translate_t(gy)));
    0.5 * x.norm() * d
}

/// Pointwise check of `K(f ∘ g) ≤ K(f) K(g)` along `λF = (Z∘T) ∘ g_t ∘ (T⁻¹∘φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainRuleSample {
    pub point: Point3,
    pub k_composite: f64,
    /// `K` of `φ` at `x`, of `g_t` at `y`, of `Z∘T` at `g_t(y)`.
    pub k_factors: [f64; 3],
    /// Relative difference between the composite Jacobian and the product
    /// of the factor Jacobians.
    pub chain_residual: f64,
}

impl ChainRuleSample {
    pub fn bound(&self) -> f64 {
        self.k_factors.iter().product()
    }

    pub fn holds(&self, rel_tol: f64) -> bool {
        self.k_composite <= self.bound() * (1.0 + rel_tol)
    }
}

pub fn chain_rule_sample(cfg: &MapConfig, x: Point3, h: f64) -> Result<ChainRuleSample> {
    let gt = cfg.shifted_g();
    let phi = |p: Point3| zorich_inverse(p, cfg.branch).map(translate_t_inv);
    let g = |p: Point3| gt.eval(p);
    let zt = |p: Point3| zorich(translate_t(p));
    let f = |p: Point3| lambda_f_eval(p, cfg);

    let y = phi(x)?;
    let gy = g(y)?;
    // Each factor is differentiated at its own scale.
    let hy = h * (1.0 + y.norm());
    let c = dilatation_at(&phi, x, h * x.norm())?;
    let b = dilatation_at(&g, y, hy)?;
    let a = dilatation_at(&zt, gy, h * (1.0 + gy.norm()))?;
    let composite = dilatation_at(&f, x, h * x.norm())?;
    let product = a.jacobian * b.jacobian * c.jacobian;
    let chain_residual = composite.jacobian.max_abs_diff(product) / product.norm();
    Ok(ChainRuleSample { point: x, k_composite: composite.k, k_factors: [c.k, b.k, a.k], chain_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zorich::{zorich_jacobian, DEFAULT_EXCLUSION};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_scaling_jacobians() {
        let id = |x: Point3| Ok(x);
        let j = jacobian_fd(&id, Point3::new(0.3, -2.0, 5.0), 1e-6).unwrap();
        assert!(j.max_abs_diff(Mat3::IDENTITY) < 1e-12);
        let double = |x: Point3| Ok(2.0 * x);
        let j = jacobian_fd(&double, Point3::new(1.0, 2.0, 3.0), 1e-6).unwrap();
        assert!(j.max_abs_diff(Mat3::IDENTITY.scaled(2.0)) < 1e-10);
        assert!(jacobian_fd(&id, Point3::ORIGIN, 0.0).is_err());
    }

    #[test]
    fn overflow_in_stencil_is_not_evaluable() {
        let z = |x: Point3| zorich(x);
        let err = jacobian_fd(&z, Point3::new(0.2, 0.1, 700.0), 1e-3).unwrap_err();
        assert!(matches!(err, Error::NotEvaluable(_)));
    }

    #[test]
    fn conformal_and_stretch_examples() {
        let id = |x: Point3| Ok(x);
        let s = dilatation_at(&id, Point3::new(1.0, 1.0, 1.0), 1e-6).unwrap();
        assert!((s.k_outer - 1.0).abs() < 1e-9 && (s.k_inner - 1.0).abs() < 1e-9 && (s.k - 1.0).abs() < 1e-9);
        let stretch = |x: Point3| Ok(Point3::new(2.0 * x.x1, x.x2, x.x3));
        let s = dilatation_at(&stretch, Point3::new(0.5, 0.5, 0.5), 1e-6).unwrap();
        assert!((s.k_outer - 4.0).abs() < 1e-8);
        assert!((s.k_inner - 2.0).abs() < 1e-8);
        assert!((s.k - 4.0).abs() < 1e-8);
        assert!(s.sense_preserving);
    }

    #[test]
    fn degenerate_jacobian() {
        let flat = |x: Point3| Ok(Point3::new(x.x1, x.x2, 0.0));
        assert!(matches!(dilatation_at(&flat, Point3::ORIGIN, 1e-6), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fd_matches_analytic_zorich() {
        let z = |x: Point3| zorich(x);
        let x = Point3::new(0.5, 0.0, 0.0);
        let fd = jacobian_fd(&z, x, 1e-6).unwrap();
        let an = zorich_jacobian(x, DEFAULT_EXCLUSION).unwrap();
        assert!(fd.max_abs_diff(an) / an.norm() < 1e-4);
    }

    #[test]
    fn zorich_dilatation_is_symmetric() {
        // The 8 images of a point under the reflections about beam faces and
        // the period lattice share one dilatation value.
        let z = |x: Point3| zorich(x);
        let (a, b, c) = (0.4, -0.15, 0.3);
        let images = [
            Point3::new(a, b, c),
            Point3::new(2.0 - a, b, c),
            Point3::new(a, 2.0 - b, c),
            Point3::new(2.0 - a, 2.0 - b, c),
            Point3::new(a + 4.0, b, c),
            Point3::new(a, b - 4.0, c),
            Point3::new(-2.0 - a, b, c),
            Point3::new(a + 4.0, b + 8.0, c),
        ];
        let k0 = dilatation_at(&z, images[0], 1e-6).unwrap().k;
        assert!(k0.is_finite() && k0 >= 1.0);
        for p in images {
            let s = dilatation_at(&z, p, 1e-6).unwrap();
            assert!((s.k - k0).abs() / k0 < 1e-6, "{p}");
            assert!(s.sense_preserving);
        }
    }

    #[test]
    fn identity_scan_has_unit_dilatation() {
        let id = |x: Point3| Ok(x);
        let spec = ScanSpec::new(ScanBox::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)), [4, 4, 4]);
        let summary = dilatation_scan(&id, &|_| 1.0, &spec).unwrap().summary();
        assert_eq!(summary.count, 64);
        assert!((summary.max_k - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_scan() {
        let id = |x: Point3| Ok(x);
        let spec = ScanSpec::new(ScanBox::new(Point3::ORIGIN, Point3::new(1.0, 1.0, 1.0)), [2, 2, 2]);
        assert_eq!(dilatation_scan(&id, &|_| 0.0, &spec), Err(Error::EmptyScan));
        let bad = ScanSpec::new(spec.region, [1, 2, 2]);
        assert!(dilatation_scan(&id, &|_| 1.0, &bad).is_err());
    }

    #[test]
    fn zorich_scan_is_slab_invariant_and_worker_independent() {
        let z = |x: Point3| zorich(x);
        let region = ScanBox::new(Point3::new(-0.9, -0.9, 0.0), Point3::new(0.9, 0.9, 1.0));
        let spec = ScanSpec::new(region, [20, 20, 20]);
        let base = dilatation_scan(&z, &zorich_smooth_distance, &spec).unwrap();
        let s = base.summary();
        assert!(s.max_k.is_finite() && s.all_sense_preserving);
        assert!(s.min_k_outer >= 1.0 - 1e-9 && s.min_k_inner >= 1.0 - 1e-9);
        let up = ScanSpec { region: region.shifted(Point3::new(0.0, 0.0, 3.5)), ..spec };
        let moved = dilatation_scan(&z, &zorich_smooth_distance, &up).unwrap();
        assert_eq!(moved.samples.len(), base.samples.len());
        for (p, q) in base.samples.iter().zip(&moved.samples) {
            assert!((p.k - q.k).abs() / p.k < 1e-6);
        }
        let par = ScanSpec { workers: 4, ..spec };
        assert_eq!(dilatation_scan(&z, &zorich_smooth_distance, &par).unwrap(), base);
    }

    #[test]
    fn chain_rule_submultiplicativity() {
        let cfg = MapConfig::new(1.0, GConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut checked = 0;
        while checked < 200 {
            let x = Point3::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            if lambda_f_smooth_distance(&cfg, x) <= 1e-2 {
                continue;
            }
            let Ok(s) = chain_rule_sample(&cfg, x, 1e-7) else { continue };
            assert!(s.chain_residual < 1e-4, "{s:?}");
            assert!(s.holds(1e-6), "{s:?}");
            checked += 1;
        }
    }
}
