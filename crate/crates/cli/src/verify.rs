//! The `verify` property suite: fixed seed, deterministic report, one line
//! per check, no timings.

use std::fmt::Write as _;

use qrexp::dilatation::{chain_rule_sample, dilatation_scan, lambda_f_smooth_distance, zorich_smooth_distance, ScanBox, ScanSpec};
use qrexp::dynamics::{basin_slice, halfray_probe, ClassifyParams, PlaneSlice, Which, Window};
use qrexp::geometry::{mobius, rotate_half_turn, translate_t, translate_t_inv, VerticalAxis};
use qrexp::interp_g::check_lattice_properties;
use qrexp::maps::{branch_independence_residual, lambda_f_eval, semiconjugacy_residual};
use qrexp::render::{render_grid, ImageSpec};
use qrexp::zorich::{zorich, zorich_inverse};
use qrexp::{BranchIndex, Error, ExtPoint, MapConfig, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Settings, UsageError};

const SAMPLES: usize = 2000;
const TOL: f64 = 1e-9;

pub struct Report {
    pub text: String,
    pub failed: Vec<&'static str>,
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

fn box_point(r: &mut ChaCha8Rng, h: f64, v: f64) -> Point3 {
    Point3::new(r.gen_range(-h..=h), r.gen_range(-h..=h), r.gen_range(-v..=v))
}

fn geometry(r: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES {
        let x = box_point(r, 20.0, 10.0);
        worst = worst.max(translate_t_inv(translate_t(x)).rel_residual(x));
        if let ExtPoint::Finite(y) = mobius(mobius(ExtPoint::Finite(x))) {
            worst = worst.max(y.rel_residual(x));
        }
    }
    let poles = mobius(ExtPoint::Finite(Point3::ORIGIN)) == ExtPoint::Infinity
        && mobius(ExtPoint::Infinity) == ExtPoint::Finite(Point3::ORIGIN);
    check("geometry", worst < TOL && poles, format!("involution residual {worst:.1e}; M swaps 0 and infinity: {poles}"))
}

fn zorich_symmetries(r: &mut ChaCha8Rng) -> Check {
    let axis = VerticalAxis::new(1.0, 1.0);
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES {
        let x = box_point(r, 20.0, 10.0);
        let z = zorich(x).unwrap();
        for y in [x + Point3::new(4.0, 0.0, 0.0), x + Point3::new(0.0, 4.0, 0.0), rotate_half_turn(axis, x)] {
            worst = worst.max(zorich(y).unwrap().rel_residual(z));
        }
        let c = r.gen_range(-5.0..=5.0);
        worst = worst.max(zorich(x.raised(c)).unwrap().rel_residual(c.exp() * z));
    }
    check("zorich-symmetries", worst < TOL, format!("max residual {worst:.1e}"))
}

fn zorich_inverses(r: &mut ChaCha8Rng, branch: BranchIndex) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES {
        let dir = box_point(r, 1.0, 1.0);
        if dir.is_origin() {
            continue;
        }
        let w = (r.gen_range(-6.0f64..=6.0) * std::f64::consts::LN_10).exp() / dir.norm() * dir;
        for b in [BranchIndex::PRINCIPAL, branch] {
            worst = worst.max(zorich(zorich_inverse(w, b).unwrap()).unwrap().rel_residual(w));
        }
    }
    let origin = zorich_inverse(Point3::ORIGIN, branch) == Err(Error::NoPreimage);
    check("zorich-inverse", worst < TOL && origin, format!("max residual {worst:.1e}; origin has no preimage: {origin}"))
}

fn g_boundary(r: &mut ChaCha8Rng, cfg: &MapConfig) -> Check {
    let g = cfg.g;
    let (mut below, mut above) = (0.0f64, 0.0f64);
    for _ in 0..SAMPLES {
        let x = box_point(r, 20.0, 10.0);
        let low = Point3::new(x.x1, x.x2, -x.x3.abs());
        below = below.max(g.eval(low).unwrap().rel_residual(low));
        let high = Point3::new(x.x1, x.x2, g.ceiling() + x.x3.abs());
        above = above.max(g.eval(high).unwrap().rel_residual(high + zorich(high).unwrap()));
    }
    check(
        "g-boundary",
        below < TOL && above < TOL,
        format!("identity below 0: {below:.1e}; x + Z(x) above L: {above:.1e}"),
    )
}

fn g_continuity(r: &mut ChaCha8Rng, cfg: &MapConfig) -> Check {
    let g = cfg.g;
    let eps = 1e-9;
    let mut worst = 0.0f64;
    for level in [0.0, g.ceiling()] {
        for _ in 0..SAMPLES / 4 {
            let x = box_point(r, 20.0, 0.0).raised(level);
            let jump = (g.eval(x.raised(eps)).unwrap() - g.eval(x.raised(-eps)).unwrap()).norm();
            worst = worst.max(jump / (1.0 + x.norm()));
        }
    }
    check("g-continuity", worst < 1e-6, format!("max relative jump across x3 = 0 and x3 = L: {worst:.1e}"))
}

fn g_lattice(r: &mut ChaCha8Rng, cfg: &MapConfig) -> Check {
    let gt = cfg.shifted_g();
    let report = check_lattice_properties(|x| gt.eval(x), SAMPLES, r);
    let alpha: Vec<i64> = report.periodicity.iter().map(|p| p.alpha).collect();
    let unbounded = report.depth_table.iter().filter(|d| d.n.is_none()).count();
    check(
        "g-lattice",
        report.passes(TOL) && alpha.iter().all(|&a| a == 1),
        format!(
            "alpha {alpha:?}; periodicity residual {:.1e}; rotation residual {:.1e}; depths without N: {unbounded}",
            report.periodicity.iter().map(|p| p.max_residual).fold(0.0, f64::max),
            report.rotation_residual
        ),
    )
}

fn semiconjugacy(r: &mut ChaCha8Rng, cfg: &MapConfig) -> Check {
    let (mut worst, mut skipped) = (0.0f64, 0);
    for _ in 0..SAMPLES {
        match semiconjugacy_residual(box_point(r, 20.0, 10.0), cfg) {
            Ok(v) => worst = worst.max(v),
            Err(_) => skipped += 1,
        }
    }
    check("semiconjugacy", worst < TOL, format!("max residual {worst:.1e}; {skipped} points beyond overflow"))
}

fn branches(r: &mut ChaCha8Rng, cfg: &MapConfig) -> Check {
    let other = if cfg.branch == BranchIndex::PRINCIPAL { BranchIndex::new(1, -2, 1).unwrap() } else { BranchIndex::PRINCIPAL };
    let (mut worst, mut failed) = (0.0f64, 0);
    for _ in 0..SAMPLES {
        match branch_independence_residual(box_point(r, 20.0, 10.0), cfg, cfg.branch, other) {
            Ok(v) => worst = worst.max(v),
            Err(_) => failed += 1,
        }
    }
    check("branch-independence", worst < TOL, format!("max residual {worst:.1e}; {failed} points beyond overflow"))
}

fn zero(cfg: &MapConfig) -> Check {
    let fixed = matches!(lambda_f_eval(Point3::ORIGIN, cfg), Ok(p) if p == Point3::ORIGIN);
    check("zero", fixed, format!("lambdaF(0) = 0: {fixed}"))
}

fn rays(cfg: &MapConfig, params: &ClassifyParams) -> Result<Check, Error> {
    let lp = cfg.l_prime();
    let ts = [0.5, -0.5, 1.1 * lp, -1.1 * lp, 2.0 * lp];
    let rows = halfray_probe(cfg, &ts, Which::LambdaF, params)?;
    let judged = rows.iter().filter(|r| r.pass().is_some()).count();
    let passed = rows.iter().filter(|r| r.pass() == Some(true)).count();
    Ok(check("rays", passed == judged, format!("{passed}/{judged} predicted ray classes matched")))
}

fn zorich_dilatation() -> Result<Check, Error> {
    let spec = ScanSpec::new(ScanBox::new(Point3::new(-0.9, -0.9, -1.0), Point3::new(0.9, 0.9, 1.0)), [12; 3]);
    let sm = dilatation_scan(&zorich, &zorich_smooth_distance, &spec)?.summary();
    let bounded = sm.max_k.is_finite() && sm.max_k < 100.0;
    Ok(check(
        "zorich-dilatation",
        sm.all_sense_preserving && bounded && sm.failed == 0,
        format!("{} samples; max K {:.4}; sense-preserving: {}", sm.count, sm.max_k, sm.all_sense_preserving),
    ))
}

fn chain_rule(r: &mut ChaCha8Rng, cfg: &MapConfig) -> Check {
    let (mut checked, mut held, mut worst) = (0, 0, 0.0f64);
    for _ in 0..SAMPLES / 10 {
        let x = box_point(r, 3.0, 3.0);
        if lambda_f_smooth_distance(cfg, x) <= 1e-2 {
            continue;
        }
        let Ok(sample) = chain_rule_sample(cfg, x, 1e-7) else { continue };
        checked += 1;
        held += sample.holds(1e-6) as usize;
        worst = worst.max(sample.k_composite / sample.bound());
    }
    check(
        "dilatation-chain-rule",
        checked > 0 && held == checked,
        format!("K(lambdaF) <= K(phi) K(g) K(Z T) at {held}/{checked} points; max ratio {worst:.4}"),
    )
}

fn render_determinism(cfg: &MapConfig, params: &ClassifyParams, workers: usize) -> Result<Check, Error> {
    let spec = ImageSpec::default();
    let image = |w: usize| -> Result<Vec<u8>, Error> {
        let grid = basin_slice(cfg, &PlaneSlice::default(), &Window::default(), (32, 32), params, w)?;
        render_grid(&grid, &spec)
    };
    let serial = image(1)?;
    let parallel = image(workers.max(4))?;
    let same = serial == parallel;
    Ok(check("render-determinism", same, format!("32x32 slice byte-identical across worker counts: {same}")))
}

pub fn verify_suite(s: &Settings) -> Result<Report, UsageError> {
    let cfg = s.map_config()?;
    let params = s.classify_params()?;
    let mut r = ChaCha8Rng::seed_from_u64(s.seed);
    let runtime = |e: Error| UsageError::Other(e.to_string());
    let checks = vec![
        geometry(&mut r),
        zorich_symmetries(&mut r),
        zorich_inverses(&mut r, cfg.branch),
        g_boundary(&mut r, &cfg),
        g_continuity(&mut r, &cfg),
        g_lattice(&mut r, &cfg),
        semiconjugacy(&mut r, &cfg),
        branches(&mut r, &cfg),
        zero(&cfg),
        rays(&cfg, &params.with_budget(params.budget.min(200))).map_err(runtime)?,
        zorich_dilatation().map_err(runtime)?,
        chain_rule(&mut r, &cfg),
        render_determinism(&cfg, &params.with_budget(params.budget.min(100)), s.workers).map_err(runtime)?,
    ];
    let mut text = String::new();
    let mut failed = Vec::new();
    for c in &checks {
        let _ = writeln!(text, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.pass {
            failed.push(c.name);
        }
    }
    let _ = writeln!(text, "verify: {}/{} checks passed (seed {})", checks.len() - failed.len(), checks.len(), s.seed);
    Ok(Report { text, failed })
}
