//! `qrexp`: evaluate, iterate, probe, render and verify the maps of
//! `qrexp-core`.
//!
//! Exit codes: 0 success, 1 verification or runtime failure, 2 usage error.

mod config;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qrexp::dilatation::{dilatation_scan, g_smooth_distance, lambda_f_smooth_distance, zorich_smooth_distance, ScanBox, ScanSpec};
use qrexp::dynamics::{basin_slice, classify_orbit, halfray_probe, trace_orbit, FLambda, LambdaF, OrbitMap, Which};
use qrexp::maps::{f_lambda_eval, lambda_f_eval};
use qrexp::render::{render_grid, ImageSpec};
use qrexp::zorich::zorich;
use qrexp::{ExtPoint, Point3};

use config::{UsageError, Settings};

#[derive(Parser, Debug)]
#[command(name = "qrexp", version, about = "A quasiregular map of transcendental type in R³ with a single zero")]
#[command(arg_required_else_help = true, subcommand_required = true)]
struct Cli {
    /// The scaling factor λ > 0 of λF.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Height L > 1 above which g(x) = x + Z(x).
    #[arg(long = "L", global = true, allow_negative_numbers = true)]
    ceiling: Option<f64>,
    /// Cutoff shape of g: linear or smoothstep.
    #[arg(long, global = true)]
    cutoff: Option<String>,
    /// Inverse branch of Z as n,m,p.
    #[arg(long, global = true, allow_negative_numbers = true)]
    branch: Option<String>,
    /// Iteration budget for classification.
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `section.key = value` settings file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MapChoice {
    LambdaF,
    FLambda,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ScanTarget {
    Zorich,
    G,
    LambdaF,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print λF(x) and f_λ(x).
    Eval {
        #[arg(long, allow_negative_numbers = true)]
        point: String,
    },
    /// Write an orbit as CSV (step, x1, x2, x3, |x|) and report its class.
    Orbit {
        #[arg(long, allow_negative_numbers = true)]
        point: String,
        #[arg(long = "n-iter", default_value_t = 20)]
        n_iter: usize,
        #[arg(long, value_enum, default_value = "lambda-f")]
        map: MapChoice,
    },
    /// Classify points t(1,1,0) and compare with the predicted classes.
    ProbeRay {
        #[arg(long, value_enum, default_value = "lambda-f")]
        map: MapChoice,
        /// Comma-separated ray parameters; defaults cover both predicted ranges.
        #[arg(long, allow_negative_numbers = true)]
        t: Option<String>,
    },
    /// Render a basin slice of λF as a binary PPM image.
    Render {
        /// `default`, or origin and two orthonormal vectors as nine numbers.
        #[arg(long, default_value = "default", allow_negative_numbers = true)]
        slice: String,
        /// s_min,s_max,r_min,r_max.
        #[arg(long, default_value = "-20,20,-20,20", allow_negative_numbers = true)]
        window: String,
        /// N or WxH.
        #[arg(long, default_value = "256")]
        res: String,
    },
    /// Sample the dilatation on a grid and write CSV.
    DilatationScan {
        #[arg(long, value_enum, default_value = "zorich")]
        map: ScanTarget,
        /// Box corners x1,x2,x3 (low) then x1,x2,x3 (high).
        #[arg(long = "box", default_value = "-0.9,-0.9,0,0.9,0.9,1", allow_negative_numbers = true)]
        region: String,
        /// Grid points per axis.
        #[arg(long, default_value_t = 20)]
        res: usize,
    },
    /// Run the property suite with a fixed seed.
    Verify,
}

enum Failure {
    /// The reader closed standard output early; not an error.
    Pipe,
    Usage(String),
    Runtime(String),
    Verify,
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return Failure::Pipe;
        }
        Failure::Runtime(e.to_string())
    }
}

impl From<qrexp::Error> for Failure {
    fn from(e: qrexp::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn settings(cli: &Cli) -> Result<Settings, UsageError> {
    let mut s = Settings::default();
    if let Some(path) = &cli.config {
        s.apply_file(path)?;
    }
    if let Some(v) = cli.lambda {
        s.lambda = v;
    }
    if let Some(v) = cli.ceiling {
        s.ceiling = v;
    }
    if let Some(v) = &cli.cutoff {
        s.set("g.cutoff", v)?;
    }
    if let Some(v) = &cli.branch {
        s.branch = config::parse_branch(v)?;
    }
    if let Some(v) = cli.budget {
        s.budget = v;
    }
    if let Some(v) = cli.workers {
        s.workers = v;
    }
    if let Some(v) = cli.seed {
        s.seed = v;
    }
    if s.workers == 0 {
        return Err(UsageError::Other("workers must be at least 1".into()));
    }
    // Validate everything up front so that bad values are usage errors.
    s.map_config()?;
    s.classify_params()?;
    Ok(s)
}

fn output(cli: &Cli) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cli.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn fmt_ext(p: ExtPoint) -> String {
    p.to_string()
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let s = settings(cli)?;
    let cfg = s.map_config()?;
    let params = s.classify_params()?;
    match &cli.command {
        Command::Eval { point } => {
            let x = config::parse_point(point)?;
            let mut out = output(cli)?;
            match lambda_f_eval(x, &cfg) {
                Ok(y) => writeln!(out, "λF(x) = {y}")?,
                Err(e) => writeln!(out, "λF(x) = not representable ({e})")?,
            }
            match f_lambda_eval(ExtPoint::Finite(x), &cfg) {
                Ok(y) => writeln!(out, "f_λ(x) = {}", fmt_ext(y))?,
                Err(e) => writeln!(out, "f_λ(x) = not representable ({e})")?,
            }
            out.flush()?;
        }
        Command::Orbit { point, n_iter, map } => {
            let x = config::parse_point(point)?;
            let map: Box<dyn OrbitMap> = match map {
                MapChoice::LambdaF => Box::new(LambdaF(cfg)),
                MapChoice::FLambda => Box::new(FLambda(cfg)),
            };
            let rec = trace_orbit(x, map.as_ref(), *n_iter);
            let mut out = output(cli)?;
            writeln!(out, "step,x1,x2,x3,norm")?;
            for (k, p) in rec.points.iter().enumerate() {
                match p.to_point() {
                    Some(q) => writeln!(out, "{k},{},{},{},{}", q.x1, q.x2, q.x3, q.norm())?,
                    None => writeln!(out, "{k},nan,nan,nan,{}", if p.log_norm() > 0.0 { "inf" } else { "0" })?,
                }
            }
            out.flush()?;
            let (_, class) = classify_orbit(x, map.as_ref(), &params);
            let at = class.witness.decided_at.map_or("budget exhausted".to_string(), |k| format!("decided at step {k}"));
            eprintln!("class: {} ({at})", class.tag);
        }
        Command::ProbeRay { map, t } => {
            let which = match map {
                MapChoice::LambdaF => Which::LambdaF,
                MapChoice::FLambda => Which::FLambda,
            };
            let lp = cfg.l_prime();
            let ts = match t {
                Some(list) => config::parse_list("--t", list)?,
                None => match which {
                    Which::LambdaF => vec![0.5, -0.5, 1.1 * lp, -1.1 * lp, 1.5 * lp, 2.0 * lp],
                    Which::FLambda => vec![0.9 / (2.0 * lp), 0.01, 0.05, 1.1 * lp, 8.0, 10.0, 20.0, -10.0],
                },
            };
            let rows = halfray_probe(&cfg, &ts, which, &params).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut out = output(cli)?;
            writeln!(out, "t,class,decided_at,l_prime,expected,pass")?;
            for r in &rows {
                let decided = r.class.witness.decided_at.map_or(String::new(), |k| k.to_string());
                let expected = r.expected.map_or("none".to_string(), |e| e.to_string());
                let pass = r.pass().map_or("n/a", |p| if p { "pass" } else { "fail" });
                writeln!(out, "{},{},{decided},{},{expected},{pass}", r.t, r.class.tag, r.l_prime)?;
            }
            out.flush()?;
            if rows.iter().any(|r| r.pass() == Some(false)) {
                return Err(Failure::Verify);
            }
        }
        Command::Render { slice, window, res } => {
            let slice = config::parse_slice(slice)?;
            let window = config::parse_window(window)?;
            let res = config::parse_res(res)?;
            let grid = basin_slice(&cfg, &slice, &window, res, &params, s.workers)?;
            let bytes = render_grid(&grid, &ImageSpec::default())?;
            let mut out = output(cli)?;
            out.write_all(&bytes)?;
            out.flush()?;
        }
        Command::DilatationScan { map, region, res } => {
            let (lo, hi) = config::parse_box(region)?;
            if *res < 2 {
                return Err(Failure::Usage("--res must be at least 2 for a scan".into()));
            }
            let spec = ScanSpec { workers: s.workers, ..ScanSpec::new(ScanBox::new(lo, hi), [*res; 3]) };
            let g = cfg.g;
            let gt = cfg.shifted_g();
            let scan = match map {
                ScanTarget::Zorich => dilatation_scan(&|x: Point3| zorich(x), &zorich_smooth_distance, &spec),
                ScanTarget::G => dilatation_scan(&|x: Point3| gt.eval(x), &|x: Point3| g_smooth_distance(&g, x), &spec),
                ScanTarget::LambdaF => {
                    dilatation_scan(&|x: Point3| lambda_f_eval(x, &cfg), &|x: Point3| lambda_f_smooth_distance(&cfg, x), &spec)
                }
            }?;
            let mut out = output(cli)?;
            writeln!(out, "x1,x2,x3,det,sigma_max,sigma_mid,sigma_min,K_O,K_I,K")?;
            for d in &scan.samples {
                let [a, b, c] = d.singular_values;
                let p = d.point;
                writeln!(out, "{},{},{},{},{a},{b},{c},{},{},{}", p.x1, p.x2, p.x3, d.det, d.k_outer, d.k_inner, d.k)?;
            }
            out.flush()?;
            let sm = scan.summary();
            eprintln!(
                "samples {} (excluded {}, failed {}); max K {} at {} (empirical lower bound for the essential supremum); mean K {}; sense-preserving everywhere: {}",
                sm.count, sm.excluded, sm.failed, sm.max_k, sm.argmax, sm.mean_k, sm.all_sense_preserving
            );
        }
        Command::Verify => {
            let report = verify::verify_suite(&s)?;
            let mut out = output(cli)?;
            out.write_all(report.text.as_bytes())?;
            out.flush()?;
            if !report.failed.is_empty() {
                eprintln!("failing checks: {}", report.failed.join(", "));
                return Err(Failure::Verify);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) | Err(Failure::Pipe) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verify) => ExitCode::from(1),
    }
}
