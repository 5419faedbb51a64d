//! Command-line front end.
//!
//! Reports go to standard output as JSON (or CSV where noted), diagnostics
//! to standard error. Exit codes: 0 success, 2 rejected input, 3 numerical
//! failure.
//!
//! CSV schemas:
//! - `surface`: `dir_theta,dir_phi,s1,s2,s3,level`, one row per ray that
//!   reaches the level surface.
//! - `classify`: `s1,s2,s3,R_T,separable,pvm_unsteerable,povm_unsteerable_new,povm_unsteerable_prior,margin`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::bloch::{BellDiagonalState, CorrelationMatrix, Povm};
use crate::classify::{classify_state, surface_grid, RayMethod, SurfaceGrid};
use crate::critical_radius::{compute_rt, critical_radius, RadiusResult};
use crate::error::{Error, Result};
use crate::lhs_model::{LhsModel, PvmResponse, SimulationReport};
use crate::povm_sampling::{embed_pvm, sic_povm, PovmSampler};
use crate::sphere_quad::{build_grid, SphereGrid, DEFAULT_ORDER_PHI, DEFAULT_ORDER_THETA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Largest simulation residual `verify-lhs` accepts.
pub const VERIFY_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "bell-steering", version, about = "Local hidden state models for Bell-diagonal states")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Gauss-Legendre points in cos(theta).
    #[arg(long, global = true, default_value_t = DEFAULT_ORDER_THETA)]
    pub order_theta: usize,

    /// Trapezoid points in phi.
    #[arg(long, global = true, default_value_t = DEFAULT_ORDER_PHI)]
    pub order_phi: usize,

    /// Monte-Carlo samples for cross-checks.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub mc_samples: usize,

    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    /// Closed forms for Werner and axial states, quadrature otherwise.
    Auto,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelChoice {
    #[value(name = "1")]
    One,
    #[value(name = "6/5")]
    SixFifths,
    Both,
}

#[derive(Debug, Args)]
pub struct CorrelationInput {
    /// Diagonal entries of T (fractions such as -5/12 are accepted).
    #[arg(long = "t", num_args = 3, value_parser = parse_real, allow_hyphen_values = true,
          value_names = ["T11", "T22", "T33"], required_unless_present = "t_file",
          conflicts_with = "t_file")]
    pub t: Option<Vec<f64>>,

    /// JSON file {"t": [[..],[..],[..]]} with a full symmetric T.
    #[arg(long)]
    pub t_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalization N_T and critical radius R_T.
    CriticalRadius {
        #[command(flatten)]
        input: CorrelationInput,
        #[arg(long, value_enum, default_value_t = MethodChoice::Auto)]
        method: MethodChoice,
    },
    /// Integrate the hidden-state model and compare with its targets.
    VerifyLhs {
        #[command(flatten)]
        input: CorrelationInput,
        /// `sic`, `random`, or `pvm:x,y,z`.
        #[arg(long, default_value = "sic", conflicts_with = "povm_file")]
        povm: String,
        /// JSON file {"effects": [{"alpha": .., "e": [..]}, ..]}.
        #[arg(long)]
        povm_file: Option<PathBuf>,
        /// Also integrate the responses by Monte-Carlo.
        #[arg(long)]
        mc_check: bool,
    },
    /// Separability and unsteerability certificates of a diagonal T.
    Classify {
        #[command(flatten)]
        input: CorrelationInput,
    },
    /// Points on the R_T = level surfaces in the positive octant.
    Surface {
        #[arg(long, default_value_t = 32)]
        resolution: usize,
        #[arg(long, value_enum, default_value_t = LevelChoice::Both)]
        level: LevelChoice,
        /// Locate crossings by bisection instead of the scaling law.
        #[arg(long)]
        bisect: bool,
    },
    /// Random four-outcome POVMs.
    SamplePovm {
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

/// Parses a decimal or a fraction `a/b`.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let den: f64 = den.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            if den == 0.0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            num / den
        }
        None => s.parse().map_err(|_| format!("not a number: {s:?}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("not a finite number: {s:?}"))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("cannot parse {}: {e}", path.display())))
}

impl CorrelationInput {
    fn load(&self) -> Result<CorrelationMatrix> {
        match (&self.t, &self.t_file) {
            (Some(d), _) => CorrelationMatrix::new(Matrix3::from_diagonal(&Vector3::new(d[0], d[1], d[2]))),
            (None, Some(path)) => read_json(path),
            (None, None) => Err(Error::InvalidArgument("no correlation matrix given".into())),
        }
    }

    fn load_physical(&self) -> Result<CorrelationMatrix> {
        let t = self.load()?;
        let state = BellDiagonalState::new(t);
        if !state.is_physical() {
            let ev = crate::bloch::density_eigenvalues(t.matrix());
            return Err(Error::Unphysical { min_eigenvalue: ev[0] });
        }
        Ok(t)
    }
}

fn parse_povm(spec: &str, seed: u64) -> Result<Povm> {
    match spec {
        "sic" => Ok(sic_povm()),
        "random" => PovmSampler::new(seed).sample_povm(),
        other => {
            let dir = other
                .strip_prefix("pvm:")
                .ok_or_else(|| Error::InvalidArgument(format!("unknown POVM {other:?}")))?;
            let c = dir
                .split(',')
                .map(parse_real)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(Error::InvalidArgument)?;
            if c.len() != 3 {
                return Err(Error::InvalidArgument(format!("pvm direction needs 3 components: {dir:?}")));
            }
            let e = Vector3::new(c[0], c[1], c[2]);
            if e.norm() == 0.0 {
                return Err(Error::InvalidArgument("pvm direction must be nonzero".into()));
            }
            embed_pvm(&e.normalize())
        }
    }
}

#[derive(Debug, Serialize)]
struct McCheck {
    samples: usize,
    seed: u64,
    /// Largest |quadrature - Monte-Carlo| in units of the standard error.
    max_z_score: f64,
}

#[derive(Debug, Serialize)]
struct VerifyOutput {
    #[serde(flatten)]
    report: SimulationReport,
    mc_check: Option<McCheck>,
}

/// Failure of a run, carrying its exit code.
#[derive(Debug)]
pub struct RunError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError {
            code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INVALID },
            message: e.to_string(),
        }
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> std::result::Result<(), RunError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| RunError {
        code: EXIT_NUMERICAL,
        message: e.to_string(),
    })?;
    writeln!(out, "{text}").map_err(io_error)
}

fn io_error(e: std::io::Error) -> RunError {
    RunError {
        code: 1,
        message: format!("write failed: {e}"),
    }
}

fn json_only(cfg: &RunConfig, what: &str) -> std::result::Result<(), RunError> {
    if cfg.format == OutputFormat::Csv {
        return Err(RunError {
            code: EXIT_INVALID,
            message: format!("{what} has no CSV output"),
        });
    }
    Ok(())
}

fn max_z_score(quad: &[crate::bloch::FourVector], mc: &[crate::sphere_quad::McEstimate<crate::bloch::FourVector>]) -> f64 {
    let z = |d: f64, se: f64| if se > 0.0 { d.abs() / se } else if d == 0.0 { 0.0 } else { f64::INFINITY };
    quad.iter()
        .zip(mc)
        .flat_map(|(q, m)| {
            let d = *q - m.estimate;
            [
                z(d.x0, m.stderr.x0),
                z(d.x.x, m.stderr.x.x),
                z(d.x.y, m.stderr.x.y),
                z(d.x.z, m.stderr.x.z),
            ]
        })
        .fold(0.0, f64::max)
}

/// Runs one subcommand, writing the report to `out`.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> std::result::Result<(), RunError> {
    let grid = || -> Result<SphereGrid> { build_grid(cfg.order_theta, cfg.order_phi, None) };
    match &cfg.command {
        Command::CriticalRadius { input, method } => {
            json_only(cfg, "critical-radius")?;
            let t = input.load_physical()?;
            let g = grid()?;
            let res: RadiusResult = match method {
                MethodChoice::Auto => critical_radius(&t, &g)?,
                MethodChoice::Quadrature => compute_rt(&t, &g)?,
            };
            write_json(out, &res)
        }
        Command::VerifyLhs {
            input,
            povm,
            povm_file,
            mc_check,
        } => {
            json_only(cfg, "verify-lhs")?;
            let t = input.load_physical()?;
            let povm: Povm = match povm_file {
                Some(path) => read_json(path)?,
                None => parse_povm(povm, cfg.seed)?,
            };
            let g = grid()?;
            let model = LhsModel::new(t, &g)?;
            let report = model.verify_simulation(&povm, &g)?;
            let mc = if *mc_check {
                let simulated: Vec<_> = report.outcomes.iter().map(|o| o.simulated).collect();
                let est = if povm.is_projective() {
                    model.simulate_mc(&PvmResponse::new(t, &povm)?, cfg.seed, cfg.mc_samples)?
                } else {
                    model.simulate_mc(&model.build_povm_response(&povm, &g)?, cfg.seed, cfg.mc_samples)?
                };
                Some(McCheck {
                    samples: cfg.mc_samples,
                    seed: cfg.seed,
                    max_z_score: max_z_score(&simulated, &est),
                })
            } else {
                None
            };
            let failed = !(report.max_residual <= VERIFY_TOL);
            let residual = report.max_residual;
            write_json(out, &VerifyOutput { report, mc_check: mc })?;
            if failed {
                return Err(RunError {
                    code: EXIT_NUMERICAL,
                    message: format!("simulation residual {residual:e} exceeds {VERIFY_TOL:e}"),
                });
            }
            Ok(())
        }
        Command::Classify { input } => {
            let t = input.load_physical()?;
            let c = classify_state(&t, &grid()?)?;
            match cfg.format {
                OutputFormat::Json => write_json(out, &c),
                OutputFormat::Csv => {
                    writeln!(out, "s1,s2,s3,R_T,separable,pvm_unsteerable,povm_unsteerable_new,povm_unsteerable_prior,margin")
                        .and_then(|_| {
                            writeln!(
                                out,
                                "{},{},{},{},{},{},{},{},{}",
                                c.s[0], c.s[1], c.s[2], c.r_t, c.separable, c.pvm_unsteerable,
                                c.povm_unsteerable_new, c.povm_unsteerable_prior, c.margin
                            )
                        })
                        .map_err(io_error)
                }
            }
        }
        Command::Surface {
            resolution,
            level,
            bisect,
        } => {
            let g = grid()?;
            let method = if *bisect {
                RayMethod::Bisection { iterations: 40 }
            } else {
                RayMethod::Scaling
            };
            let levels: &[f64] = match level {
                LevelChoice::One => &[1.0],
                LevelChoice::SixFifths => &[1.2],
                LevelChoice::Both => &[1.0, 1.2],
            };
            let surfaces = levels
                .iter()
                .map(|&l| surface_grid(*resolution, l, &g, method))
                .collect::<Result<Vec<SurfaceGrid>>>()?;
            match cfg.format {
                OutputFormat::Json => write_json(out, &surfaces),
                OutputFormat::Csv => {
                    let mut text = String::from("dir_theta,dir_phi,s1,s2,s3,level\n");
                    for r in surfaces.iter().flat_map(|s| &s.records) {
                        if let Some(p) = r.point {
                            text.push_str(&format!(
                                "{},{},{},{},{},{}\n",
                                r.dir_theta, r.dir_phi, p[0], p[1], p[2], r.level
                            ));
                        }
                    }
                    out.write_all(text.as_bytes()).map_err(io_error)
                }
            }
        }
        Command::SamplePovm { count } => {
            json_only(cfg, "sample-povm")?;
            let mut sampler = PovmSampler::new(cfg.seed);
            let povms = (0..*count)
                .map(|_| sampler.sample_povm())
                .collect::<Result<Vec<_>>>()?;
            write_json(out, &povms)
        }
    }
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = write!(err, "{e}");
            return e.exit_code();
        }
    };
    match run(&cfg, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
