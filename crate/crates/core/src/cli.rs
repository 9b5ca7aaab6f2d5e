//! `ballstab` command line: one subcommand per experiment, each writing a
//! run directory under `$BALLSTAB_RUN_ROOT`.
//!
//! Exit codes: 0 success, 2 verdict failure (or a failed computation),
//! 1 usage or configuration error.

use crate::capacity::{self, competitor_energy, riesz_system, weak_stability_margin};
use crate::experiments::diagram::bs_diagram_sample;
use crate::experiments::output::{RunDir, Summary, RUN_ROOT_ENV};
use crate::experiments::qmpcc::{fit_qm_lambda, qmpcc_verify};
use crate::experiments::{
    penalized_runs, random_corpus, ConfigOverrides, ExperimentConfig, ExperimentKind, OptimizerOverrides, StartKind,
};
use crate::fem::{build_mesh, lambda1};
use crate::par::{self, Execution};
use crate::shape::{
    convexity_check, hausdorff_distance, normalize, perimeter, read_shape, shared_basis, symmetric_difference, volume,
    write_shape, NormalizeMode, RadialShape,
};
use crate::stability::{c_star_formula, fuglede_remainder, jc_unit_volume, mode_direction, sharp_threshold, Functional};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "ballstab", version, about = "Stability of the ball for P − cλ₁ and capacity functionals among convex bodies")]
struct Cli {
    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// seed for randomized experiments
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads; 1 runs everything on the calling thread
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// prefix of the run directory (default: the subcommand)
    #[arg(long, global = true)]
    run_name: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    #[arg(long)]
    dim: Option<usize>,
    /// target edge length of the ball mesh
    #[arg(long)]
    mesh_size: Option<f64>,
    #[arg(long)]
    l_max: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct ShapeArgs {
    /// shape file; without it the ball, or `B_{amplitude·Y_mode}`
    #[arg(long)]
    shape: Option<PathBuf>,
    #[arg(long)]
    mode: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    amplitude: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate functionals on a shape
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: ShapeArgs,
        /// comma list of P, lambda1, volume, J_c, asymmetry, hausdorff, convexity, holder, cap, competitor
        #[arg(long, value_delimiter = ',')]
        functionals: Option<Vec<String>>,
        #[arg(long)]
        c: Option<f64>,
        /// Riesz points for `cap`
        #[arg(long)]
        points: Option<usize>,
    },
    /// Mode table and the sharp threshold c*
    Threshold {
        #[command(flatten)]
        common: Common,
    },
    /// Second-order remainder ladder along a mode
    Fuglede {
        #[command(flatten)]
        common: Common,
        /// P, lambda1, J_c or inv_cap
        #[arg(long)]
        functional: Option<String>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        mode: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Riesz capacity ladder, or the competitor bound over a seeded corpus
    Capacity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        points: Option<usize>,
        /// size of the seeded corpus (doubled for the stability check)
        #[arg(long)]
        corpus: Option<usize>,
        #[arg(long)]
        max_linf: Option<f64>,
        /// weight of 1/Cap in the weak stability margin
        #[arg(long)]
        eps_cap: Option<f64>,
    },
    /// Penalized minimization of J_c among planar convex bodies
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        target_asymmetry: Option<f64>,
        #[arg(long)]
        box_scale: Option<f64>,
        /// random or mode
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        start_amplitude: Option<f64>,
        #[arg(long)]
        mode: Option<usize>,
        /// number of runs, with seeds seed, seed+1, ...
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        convexity_weight: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        huber_width: Option<f64>,
    },
    /// Sampled quasi-minimality check for the perimeter
    Qmpcc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: ShapeArgs,
        /// Λ; fitted on a calibration corpus when omitted
        #[arg(long)]
        qm_lambda: Option<f64>,
        #[arg(long)]
        qm_eps: Option<f64>,
        #[arg(long)]
        competitors: Option<usize>,
    },
    /// (P, λ₁) diagram near the disk and its envelope slope
    Diagram {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        band: Option<f64>,
    },
}

fn base(common: &Common) -> ConfigOverrides {
    ConfigOverrides { dim: common.dim, mesh_size: common.mesh_size, l_max: common.l_max, ..Default::default() }
}

fn with_shape(mut o: ConfigOverrides, s: &ShapeArgs) -> ConfigOverrides {
    o.shape = s.shape.clone();
    o.mode = s.mode;
    o.amplitude = s.amplitude;
    o
}

impl Cmd {
    fn kind(&self) -> ExperimentKind {
        match self {
            Cmd::Eval { .. } => ExperimentKind::Eval,
            Cmd::Threshold { .. } => ExperimentKind::Threshold,
            Cmd::Fuglede { .. } => ExperimentKind::Fuglede,
            Cmd::Capacity { .. } => ExperimentKind::Capacity,
            Cmd::Optimize { .. } => ExperimentKind::Optimize,
            Cmd::Qmpcc { .. } => ExperimentKind::Qmpcc,
            Cmd::Diagram { .. } => ExperimentKind::Diagram,
        }
    }

    fn overrides(&self) -> Result<ConfigOverrides> {
        Ok(match self {
            Cmd::Eval { common, shape, functionals, c, points } => ConfigOverrides {
                functionals: functionals.clone(),
                c: *c,
                points: *points,
                ..with_shape(base(common), shape)
            },
            Cmd::Threshold { common } => base(common),
            Cmd::Fuglede { common, functional, c, mode, eps_grid, points } => ConfigOverrides {
                functional: functional.clone(),
                c: *c,
                mode: *mode,
                eps_grid: eps_grid.clone(),
                points: *points,
                ..base(common)
            },
            Cmd::Capacity { common, shape, points, corpus, max_linf, eps_cap } => ConfigOverrides {
                points: *points,
                corpus: *corpus,
                max_linf: *max_linf,
                eps_cap: *eps_cap,
                ..with_shape(base(common), shape)
            },
            Cmd::Optimize {
                common,
                c,
                mu,
                target_asymmetry,
                box_scale,
                start,
                start_amplitude,
                mode,
                runs,
                step,
                max_iterations,
                convexity_weight,
                tolerance,
                huber_width,
            } => {
                let start = match start.as_deref() {
                    None => None,
                    Some("random") => Some(StartKind::Random),
                    Some("mode") => Some(StartKind::Mode),
                    Some(s) => return Err(Error::Config(format!("unknown start `{s}` (random or mode)"))),
                };
                let opt = OptimizerOverrides {
                    step: *step,
                    max_iterations: *max_iterations,
                    convexity_weight: *convexity_weight,
                    tolerance: *tolerance,
                    huber_width: *huber_width,
                };
                ConfigOverrides {
                    c: *c,
                    mu: *mu,
                    target_asymmetry: *target_asymmetry,
                    box_scale: *box_scale,
                    start,
                    start_amplitude: *start_amplitude,
                    mode: *mode,
                    runs: *runs,
                    optimizer: (opt != OptimizerOverrides::default()).then_some(opt),
                    ..base(common)
                }
            }
            Cmd::Qmpcc { common, shape, qm_lambda, qm_eps, competitors } => ConfigOverrides {
                qm_lambda: *qm_lambda,
                qm_eps: *qm_eps,
                competitors: *competitors,
                ..with_shape(base(common), shape)
            },
            Cmd::Diagram { common, samples, band } => {
                ConfigOverrides { samples: *samples, band: *band, ..base(common) }
            }
        })
    }
}

/// Whether the experiment's verdict held.
struct Outcome {
    pass: bool,
}

/// Entry point of the `ballstab` binary.
pub fn cli_main(argv: Vec<String>) -> i32 {
    let root = std::env::var_os(RUN_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
    run_cli(argv, &root)
}

/// [`cli_main`] with an explicit run-directory root.
pub fn run_cli(argv: Vec<String>, root: &Path) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli, root) {
        Ok(o) if o.pass => 0,
        Ok(_) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::Parse(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::UnsupportedDimension(_)
        | Error::LengthMismatch { .. }
        | Error::NotStarShaped { .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli, root: &Path) -> Result<Outcome> {
    let kind = cli.cmd.kind();
    let file = match &cli.config {
        Some(p) => ConfigOverrides::from_file(p)?,
        None => ConfigOverrides::default(),
    };
    let mut flags = cli.cmd.overrides()?;
    flags.seed = cli.seed;
    let cfg = ExperimentConfig::resolve(kind, &file.merged(&flags))?;
    match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be at least 1".into())),
        Some(t) => {
            par::set_default_execution(Execution::from_threads(t));
            #[cfg(feature = "parallel")]
            if t > 1 {
                // only the first configuration in a process takes effect
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
        }
        None => par::set_default_execution(Execution::Parallel),
    }
    let name = cli.run_name.clone().unwrap_or_else(|| match cfg.seed {
        Some(s) => format!("{}-s{s}", kind.name()),
        None => kind.name().to_string(),
    });
    let run = RunDir::create_in(root, &name)?;
    run.write_config(&cfg)?;
    let clock = Instant::now();
    let mut summary = Summary::new(kind.name());
    let pass = match kind {
        ExperimentKind::Eval => eval(&cfg, &run, &mut summary)?,
        ExperimentKind::Threshold => threshold(&cfg, &run, &mut summary)?,
        ExperimentKind::Fuglede => fuglede(&cfg, &run, &mut summary)?,
        ExperimentKind::Capacity => capacity_cmd(&cfg, &run, &mut summary)?,
        ExperimentKind::Optimize => optimize(&cfg, &run, &mut summary)?,
        ExperimentKind::Qmpcc => qmpcc(&cfg, &run, &mut summary)?,
        ExperimentKind::Diagram => diagram(&cfg, &run, &mut summary)?,
    };
    summary.push("pass", pass);
    summary.push("wall_clock_s", clock.elapsed().as_secs_f64());
    run.write_summary(&summary)?;
    println!("verdict = {}", if pass { "pass" } else { "fail" });
    println!("run_dir = {}", run.path.display());
    Ok(Outcome { pass })
}

/// Shape file, `B_{amplitude·Y_mode}`, or the ball.
fn chosen_shape(cfg: &ExperimentConfig) -> Result<RadialShape> {
    if let Some(p) = &cfg.shape {
        let s = read_shape(p)?;
        if s.dim != cfg.dim {
            return Err(Error::Config(format!("shape file is {}D but dim = {}", s.dim, cfg.dim)));
        }
        return Ok(s);
    }
    if cfg.amplitude != 0.0 {
        let y = mode_direction(cfg.dim, cfg.mode)?;
        return RadialShape::new(y.basis.clone(), y.scaled(cfg.amplitude).coeffs);
    }
    Ok(RadialShape::ball(shared_basis(cfg.dim, cfg.l_max)?))
}

fn parse_functional(name: &str, cfg: &ExperimentConfig) -> Result<Functional> {
    match name {
        "P" | "perimeter" => Ok(Functional::Perimeter),
        "lambda1" => Ok(Functional::Lambda1),
        "J_c" | "jc" => Ok(Functional::Jc(cfg.c.ok_or_else(|| Error::Config("J_c needs --c".into()))?)),
        "inv_cap" | "cap" => Ok(Functional::InverseCapacity(cfg.points)),
        other => Err(Error::Config(format!("unknown functional `{other}`"))),
    }
}

#[derive(Serialize)]
struct ValueRow<'a> {
    functional: &'a str,
    value: f64,
}

fn eval(cfg: &ExperimentConfig, run: &RunDir, summary: &mut Summary) -> Result<bool> {
    let shape = chosen_shape(cfg)?;
    let needs_mesh = cfg.functionals.iter().any(|f| f == "lambda1" || f == "J_c" || f == "jc");
    let mesh = if needs_mesh { Some(build_mesh(cfg.dim, cfg.mesh_size)?) } else { None };
    let ball = RadialShape::ball(shape.basis.clone());
    let mut rows = Vec::new();
    for f in &cfg.functionals {
        let v = match f.as_str() {
            "P" | "perimeter" => perimeter(&shape)?,
            "lambda1" => lambda1(&shape, mesh.as_ref().unwrap())?.lambda,
            "volume" => volume(&shape)?,
            "J_c" | "jc" => {
                let c = cfg.c.ok_or_else(|| Error::Config("J_c needs --c".into()))?;
                let n = normalize(&shape, NormalizeMode::UnitVolume)?;
                jc_unit_volume(perimeter(&n)?, lambda1(&n, mesh.as_ref().unwrap())?.lambda, c, cfg.dim)
            }
            "asymmetry" => symmetric_difference(&shape, &ball)?,
            "hausdorff" => hausdorff_distance(&shape, &ball)?,
            "convexity" => convexity_check(&shape).min_curvature_proxy,
            "holder" => shape.holder_diagnostic(0.5)?,
            "cap" => riesz_system(&shape, cfg.points, par::default_execution())?.capacity(),
            "competitor" => competitor_energy(&shape)?.total,
            other => return Err(Error::Config(format!("unknown functional `{other}`"))),
        };
        println!("{f} = {v}");
        summary.push(f, v);
        rows.push(ValueRow { functional: f, value: v });
    }
    run.write_csv("eval", &rows)?;
    Ok(true)
}

fn threshold(cfg: &ExperimentConfig, run: &RunDir, summary: &mut Summary) -> Result<bool> {
    let mesh = build_mesh(cfg.dim, cfg.mesh_size)?;
    let t = sharp_threshold(&mesh, cfg.l_max)?;
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "l", "P''", "lambda''", "lambda''_vol", "c_l");
    for m in &t.spectrum.modes {
        let c = m.threshold.map(|c| format!("{c:.6}")).unwrap_or_else(|| "-".into());
        println!("{:>3} {:>12.6} {:>12.6} {:>12.6} {:>12}", m.l, m.p_second, m.lambda_second, m.lambda_second_volumetric, c);
    }
    println!("c_star = {:.7}", t.c_star_modewise);
    println!("c_star_formula = {:.7}", t.c_star_formula);
    println!("argmin_mode = {}", t.argmin_mode);
    run.write_csv("modes", &t.spectrum.modes)?;
    run.write_plot("modes", "modes", 1, &[5], false)?;
    summary
        .push("c_star", t.c_star_modewise)
        .push("c_star_formula", t.c_star_formula)
        .push("argmin_mode", t.argmin_mode)
        .push("relative_gap", t.relative_gap());
    Ok(t.relative_gap() <= 0.01)
}

#[derive(Serialize)]
struct LadderRow {
    eps: f64,
    value: f64,
    model: f64,
    remainder: f64,
    increment: f64,
}

fn fuglede(cfg: &ExperimentConfig, run: &RunDir, summary: &mut Summary) -> Result<bool> {
    let functional = parse_functional(&cfg.functional, cfg)?;
    let h = mode_direction(cfg.dim, cfg.mode)?;
    let mesh = match functional {
        Functional::Lambda1 | Functional::Jc(_) => Some(build_mesh(cfg.dim, cfg.mesh_size)?),
        _ => None,
    };
    let l = fuglede_remainder(functional, &h, &cfg.eps_grid, mesh.as_ref())?;
    let inc = l.increments();
    let rows: Vec<LadderRow> = (0..l.eps.len())
        .map(|i| LadderRow { eps: l.eps[i], value: l.values[i], model: l.model[i], remainder: l.remainders[i], increment: inc[i] })
        .collect();
    for r in &rows {
        println!("eps = {:<8} increment = {:+.6e} remainder = {:+.6e}", r.eps, r.increment, r.remainder);
    }
    println!("slope = {:.4}", l.slope);
    run.write_csv("ladder", &rows)?;
    run.write_plot("ladder", "ladder", 1, &[4, 5], true)?;
    let positive = inc.iter().all(|&d| d > 0.0);
    summary
        .push("functional", &l.functional)
        .push("mode", cfg.mode)
        .push("second", l.second)
        .push("slope", l.slope)
        .push("max_ratio", l.max_ratio)
        .push("increments_positive", positive);
    let pass = match functional {
        Functional::InverseCapacity(_) => l.max_ratio.is_finite(),
        Functional::Jc(_) => l.slope > 2.0 && positive,
        _ => l.slope > 2.0,
    };
    Ok(pass)
}

#[derive(Serialize)]
struct CapacityRow {
    points: usize,
    capacity: f64,
    iterations: usize,
    gap: f64,
}

#[derive(Serialize)]
struct CorpusRow {
    index: usize,
    linf: f64,
    h1_sq: f64,
    competitor_gap: f64,
    ratio: f64,
}

fn capacity_cmd(cfg: &ExperimentConfig, run: &RunDir, summary: &mut Summary) -> Result<bool> {
    if cfg.dim != 3 {
        return Err(Error::UnsupportedDimension(cfg.dim));
    }
    if cfg.corpus > 0 {
        let seed = cfg.require_seed()?;
        let basis = shared_basis(3, 2 * cfg.l_max)?;
        let shapes = random_corpus(&basis, 2 * cfg.corpus, cfg.max_linf, cfg.l_max, seed)?;
        let cap_b = capacity::ball_capacity(3)?;
        let rows: Vec<CorpusRow> = par::map_slice(par::default_execution(), &shapes, |s| -> Result<(f64, f64, f64)> {
            let h1 = s.h1_sq();
            Ok((s.linf_norm(), h1, competitor_energy(s)?.total - cap_b))
        })
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map(|(linf, h1_sq, gap)| CorpusRow { index: i, linf, h1_sq, competitor_gap: gap, ratio: gap / h1_sq }))
        .collect::<Result<_>>()?;
        let bound = |n: usize| rows[..n].iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        let (b1, b2) = (bound(cfg.corpus), bound(2 * cfg.corpus));
        let drift = b2 / b1 - 1.0;
        println!("bound_n = {b1}");
        println!("bound_2n = {b2}");
        println!("relative_change = {drift}");
        run.write_csv("corpus", &rows)?;
        run.write_plot("corpus", "corpus", 3, &[4], true)?;
        summary.push("corpus", cfg.corpus).push("bound_n", b1).push("bound_2n", b2).push("relative_change", drift);
        return Ok(b1.is_finite() && b1 > 0.0 && drift.abs() <= 0.25);
    }
    let shape = chosen_shape(cfg)?;
    let ladder: Vec<usize> = [cfg.points / 4, cfg.points / 2, cfg.points].into_iter().filter(|&n| n >= 12).collect();
    let mut rows = Vec::new();
    for &n in &ladder {
        let sys = riesz_system(&shape, n, par::default_execution())?;
        println!("points = {n:<6} capacity = {:.8}", sys.capacity());
        rows.push(CapacityRow { points: n, capacity: sys.capacity(), iterations: sys.iterations, gap: sys.gap });
    }
    let caps: Vec<f64> = rows.iter().map(|r| r.capacity).collect();
    let monotone = caps.windows(2).all(|w| w[1] <= w[0]) || caps.windows(2).all(|w| w[1] >= w[0]);
    run.write_csv("capacity", &rows)?;
    run.write_plot("capacity", "capacity", 1, &[2], false)?;
    summary.push("capacity", *caps.last().unwrap_or(&f64::NAN)).push("ladder_monotone", monotone);
    if let Some(eps) = cfg.eps_cap {
        let m = weak_stability_margin(&shape, eps, cfg.points)?;
        println!("weak_margin = {}", m.margin);
        summary.push("weak_margin", m.margin).push("perimeter_gap", m.perimeter_gap).push("inverse_capacity_gap", m.inverse_capacity_gap);
    }
    Ok(monotone)
}

#[derive(Serialize)]
struct RunRow {
    seed: u64,
    final_jc: f64,
    ball_jc: f64,
    jc_gap: f64,
    asymmetry: f64,
    hausdorff: f64,
    min_curvature: f64,
    volume_error: f64,
    holder: f64,
    convex: bool,
    converged: bool,
    iterations: usize,
    shrink_steps: usize,
}

fn optimize(cfg: &ExperimentConfig, run: &RunDir, summary: &mut Summary) -> Result<bool> {
    let seed = cfg.require_seed()?;
    let c = cfg.c.ok_or_else(|| Error::Config("optimize needs --c".into()))?;
    let seeds: Vec<u64> = (0..cfg.runs as u64).map(|k| seed + k).collect();
    let records = penalized_runs(cfg, &seeds)?;
    let c_star = c_star_formula(2)?;
    let mut rows = Vec::new();
    let mut pass = true;
    for (s, r) in seeds.iter().zip(&records) {
        run.write_csv(&format!("trace-{s}"), &r.trace)?;
        run.write_plot(&format!("trace-{s}"), &format!("trace-{s}"), 1, &[2, 4], false)?;
        write_shape(&run.file(&format!("final-{s}.shape")), &r.final_shape)?;
        let ok_feasible = r.convex && r.volume_error <= 1e-8;
        let ok_verdict = if c < c_star {
            r.final_jc >= r.ball_jc - 1e-8 && (cfg.target_asymmetry > 0.0 || r.asymmetry < 1e-3)
        } else {
            r.final_jc < r.ball_jc - 1e-5
        };
        pass &= ok_feasible && ok_verdict;
        println!(
            "seed = {s:<4} J_c - J_c(B) = {:+.3e} asymmetry = {:.3e} convex = {} iterations = {}",
            r.final_jc - r.ball_jc,
            r.asymmetry,
            r.convex,
            r.iterations
        );
        rows.push(RunRow {
            seed: *s,
            final_jc: r.final_jc,
            ball_jc: r.ball_jc,
            jc_gap: r.final_jc - r.ball_jc,
            asymmetry: r.asymmetry,
            hausdorff: r.hausdorff,
            min_curvature: r.min_curvature,
            volume_error: r.volume_error,
            holder: r.final_shape.holder_diagnostic(0.5)?,
            convex: r.convex,
            converged: r.converged,
            iterations: r.iterations,
            shrink_steps: r.shrink_steps,
        });
    }
    run.write_csv("runs", &rows)?;
    let worst = rows.iter().map(|r| r.jc_gap).fold(f64::INFINITY, f64::min);
    let max_asym = rows.iter().map(|r| r.asymmetry).fold(0.0, f64::max);
    summary
        .push("runs", rows.len())
        .push("c", c)
        .push("min_jc_gap", worst)
        .push("max_asymmetry", max_asym)
        .push("all_convex", rows.iter().all(|r| r.convex))
        .push("all_converged", rows.iter().all(|r| r.converged));
    Ok(pass)
}

/// Number of random shapes next to the ball in the calibration corpus used
/// to fit Λ.
const CALIBRATION_SHAPES: usize = 16;
const CALIBRATION_SAFETY: f64 = 1.25;

fn qmpcc(cfg: &ExperimentConfig, run: &RunDir, summary: &mut Summary) -> Result<bool> {
    let seed = cfg.require_seed()?;
    let shape = chosen_shape(cfg)?;
    let lambda = match cfg.qm_lambda {
        Some(l) => l,
        None => {
            let basis = shared_basis(2, cfg.l_max)?;
            let mut calib = vec![RadialShape::ball(basis.clone())];
            for s in random_corpus(&basis, 4 * CALIBRATION_SHAPES, 0.1, cfg.l_max, seed ^ 0x9e37_79b9)? {
                if calib.len() > CALIBRATION_SHAPES {
                    break;
                }
                if convexity_check(&s).is_convex {
                    calib.push(s);
                }
            }
            let l = fit_qm_lambda(&calib, cfg.qm_eps, cfg.competitors, seed, CALIBRATION_SAFETY)?;
            println!("fitted_lambda = {l}");
            summary.push("lambda_fitted", true);
            l
        }
    };
    let v = qmpcc_verify(&shape, lambda, cfg.qm_eps, cfg.competitors, seed)?;
    println!("lambda = {lambda}");
    println!("max_ratio = {}", v.max_ratio);
    run.write_csv("competitors", &v.rows)?;
    run.write_plot("competitors", "competitors", 3, &[5], true)?;
    summary.push("lambda", lambda).push("eps", v.eps).push("max_ratio", v.max_ratio).push("competitors", v.rows.len());
    Ok(v.pass)
}

fn diagram(cfg: &ExperimentConfig, run: &RunDir, summary: &mut Summary) -> Result<bool> {
    if cfg.dim != 2 {
        return Err(Error::UnsupportedDimension(cfg.dim));
    }
    let seed = cfg.require_seed()?;
    let r = bs_diagram_sample(cfg.samples, seed, cfg.band, cfg.mesh_size, cfg.l_max.max(8))?;
    println!("slope = {:.4}", r.slope);
    println!("expected = {:.4}", r.expected);
    println!("relative_error = {:.4}", r.relative_error);
    run.write_csv("points", &r.points)?;
    run.write_csv("envelope", &r.bins)?;
    run.write_plot("points", "points", 2, &[3], false)?;
    summary
        .push("x0", r.x0)
        .push("y0", r.y0)
        .push("slope", r.slope)
        .push("expected", r.expected)
        .push("relative_error", r.relative_error)
        .push("rejected_nonconvex", r.rejected_nonconvex);
    Ok(r.relative_error <= 0.15)
}
