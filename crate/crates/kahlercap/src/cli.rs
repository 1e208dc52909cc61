//! Command-line front end.

use std::f64::consts::E;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kahlercap_core::capacities::{capacity_comparison, capacity_report, fit_lower_constant, sublevel_capacity_decay};
use kahlercap_core::dynamics::{
    dyn_capacity_check, functional_residual, green_function, green_iterate, parse_map, volume_decay_check,
};
use kahlercap_core::envelopes::{global_extremal_with, relative_extremal_with, support_and_mass_check, EnvelopeOptions};
use kahlercap_core::field::{l1_fs_distance, QpshField};
use kahlercap_core::geometry::{ProjectiveGrid, SetSpec};
use kahlercap_core::monge_ampere::ma_measure;
use kahlercap_core::sections::{bergman_regularize, bergman_sandwich, chebyshev_table, Strategy};
use kahlercap_core::tol::{ENV_MAX_SWEEPS, ENV_TOL, MASS_TOL, SUPPORT_TOL};
use kahlercap_core::toric::EnvelopeKind;
use kahlercap_core::{Error as CoreError, C64};
use rayon::prelude::*;
use serde_json::json;

use crate::acceptance::run_suite;
use crate::error::{io_err, CliError, CliResult, Op};
use crate::formats::{read_field, write_csv, write_field, write_measure_csv};
use crate::plot::{Plot, Series};
use crate::report::{num, Check, ConfigHasher, Report};
use crate::setspec::load_set_spec;

/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "KAHLERCAP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "kahlercap", version, about = "Capacities and extremal functions on the complex projective line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Nodes per axis of each chart grid.
    #[arg(long, default_value_t = 257)]
    pub res: usize,
    /// Half-width of each chart box.
    #[arg(long = "box", default_value_t = 4.0)]
    pub box_radius: f64,
}

impl GridArgs {
    fn grid(&self) -> CliResult<ProjectiveGrid> {
        ProjectiveGrid::new(self.box_radius, self.res).op("grid")
    }

    fn hash(&self, h: ConfigHasher) -> ConfigHasher {
        h.arg("res", self.res).arg("box", self.box_radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Global,
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    /// Balls `B_R` over a range of radii.
    Radius,
    /// Sublevel sets `{φ < −t}` of a field over a range of depths.
    T,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extremal function of a set.
    Envelope {
        #[arg(long, value_enum, default_value = "global")]
        kind: KindArg,
        #[arg(long)]
        set: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = ENV_TOL)]
        tol: f64,
        /// Binary field output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Monge–Ampère measure of the envelope as `node,weight` CSV.
        #[arg(long)]
        measure: Option<PathBuf>,
        /// Radial profile plot along the positive real axis.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Monge–Ampère and Alexander capacities of a set.
    Capacity {
        #[arg(long)]
        set: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = ENV_TOL)]
        tol: f64,
        /// Seed of the brute-force candidate family.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        family: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Table of Chebyshev constants `(N, M_N, M_N^{1/N})`.
    Chebyshev {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, default_value_t = 64)]
        nmax: u32,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Bergman regularization of a binary field.
    Bergman {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        j: u32,
        #[arg(long, default_value_t = 0)]
        j0: u32,
        /// Radius of the local sup in the upper estimate.
        #[arg(long, default_value_t = 0.25)]
        r: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Green function of an endomorphism given as `"P0, P1"` in `z`, `w`.
    Green {
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Convergence plot of the iterates.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Capacity and volume of forward images of a set.
    Dyncheck {
        #[arg(long)]
        map: String,
        #[arg(long)]
        set: PathBuf,
        #[arg(long, default_value_t = 3)]
        jmax: u32,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Capacities over a parameter range, as CSV and an SVG log-plot.
    Sweep {
        #[arg(long, value_enum, default_value = "radius")]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 16)]
        steps: usize,
        /// Field whose sublevel sets are swept (`--param t`).
        #[arg(long)]
        field: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Runs the acceptance suite.
    Verify {
        #[arg(long, default_value = "paper")]
        suite: String,
        /// Restrict to these criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

/// Builds the global thread pool, capped by `KAHLERCAP_THREADS` when set.
pub fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Invalid(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("--{name} must be positive, got {v}")))
    }
}

fn env_opts(tol: f64) -> CliResult<EnvelopeOptions> {
    positive("tol", tol)?;
    Ok(EnvelopeOptions {
        tol,
        max_sweeps: ENV_MAX_SWEEPS,
    })
}

fn emit(report: &Report, path: &Option<PathBuf>) -> CliResult<()> {
    match path {
        Some(p) => report.write(p),
        None => {
            print!("{}", report.to_string_pretty());
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Runs one command. `Ok(true)` when every invariant in the report held.
pub fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Envelope {
            kind,
            set,
            grid,
            tol,
            out,
            measure,
            svg,
            report,
        } => {
            let opts = env_opts(tol)?;
            let g = grid.grid()?;
            let spec = load_set_spec(&set)?;
            let hash = grid
                .hash(ConfigHasher::new("envelope").arg("kind", format!("{kind:?}")).arg("tol", tol))
                .file(&set)?
                .finish();
            let (r, core_kind) = match kind {
                KindArg::Global => (global_extremal_with(&spec, &g, &opts).op("global_extremal")?, EnvelopeKind::Global),
                KindArg::Relative => (
                    relative_extremal_with(&spec, &g, &opts).op("relative_extremal")?,
                    EnvelopeKind::Relative,
                ),
            };
            let support = support_and_mass_check(&r);
            if let Some(p) = &out {
                write_field(p, &r.field)?;
            }
            if let Some(p) = &measure {
                let mu = ma_measure(&r.field.clone().with_claim(true)).op("ma_measure")?;
                write_measure_csv(p, &mu.measure)?;
            }
            if let Some(p) = &svg {
                write_text(p, &radial_profile_plot(&r.field).render())?;
            }
            let rep = Report {
                command: "envelope",
                config_hash: hash,
                seed: 0,
                results: json!({
                    "kind": format!("{kind:?}").to_lowercase(),
                    "sup": num(r.sup_value),
                    "iterations": r.iterations,
                    "residual": num(r.residual),
                    "polar_flag": r.polar_flag,
                    "off_support_mass": num(support.off_support_mass),
                    "mass_on_set": num(support.mass_on_set),
                    "total_mass": num(support.total_mass),
                    "alexander": num(r.alexander()),
                    "chart_disagreement": num(r.chart_disagreement),
                }),
                checks: vec![
                    Check::new("residual", r.residual <= tol, format!("{:e} <= {tol:e}", r.residual)),
                    Check::new(
                        "support and mass",
                        support.passed(core_kind),
                        format!(
                            "off-support {:.3e}, on set {:.4}",
                            support.off_support_mass, support.mass_on_set
                        ),
                    ),
                ],
            };
            emit(&rep, &report)?;
            Ok(rep.passed())
        }
        Command::Capacity {
            set,
            grid,
            tol,
            seed,
            family,
            report,
        } => {
            let opts = env_opts(tol)?;
            let g = grid.grid()?;
            let spec = load_set_spec(&set)?;
            let hash = grid
                .hash(ConfigHasher::new("capacity").arg("tol", tol).arg("seed", seed).arg("family", family))
                .file(&set)?
                .finish();
            let c = capacity_report(&spec, &g, &opts, family, seed).op("capacity_report")?;
            let upper = E * (-1.0 / c.cap_ma).exp();
            let mut checks = vec![
                Check::new(
                    "brute-force lower bound",
                    c.cap_bruteforce_lower <= c.cap_ma + 5e-3,
                    format!("{:.5} <= {:.5} + 5e-3", c.cap_bruteforce_lower, c.cap_ma),
                ),
                Check::new(
                    "support of the extremal measure",
                    c.off_support_mass <= SUPPORT_TOL,
                    format!("{:.3e}", c.off_support_mass),
                ),
            ];
            if c.cap_ma > 0.0 {
                checks.push(Check::new(
                    "T <= e exp(-1/Cap)",
                    c.t_alex <= upper + 5e-2,
                    format!("{:.5} <= {upper:.5} + 5e-2", c.t_alex),
                ));
            }
            let rep = Report {
                command: "capacity",
                config_hash: hash,
                seed,
                results: json!({
                    "cap_ma": num(c.cap_ma),
                    "cap_bruteforce_lower": num(c.cap_bruteforce_lower),
                    "t_alex": num(c.t_alex),
                    "sup_v": num(c.sup_v),
                    "polar": c.polar,
                    "relative_residual": num(c.relative_residual),
                    "global_residual": num(c.global_residual),
                    "relative_iterations": c.relative_iterations,
                    "global_iterations": c.global_iterations,
                    "off_support_mass": num(c.off_support_mass),
                    "family_size": family,
                }),
                checks,
            };
            emit(&rep, &report)?;
            Ok(rep.passed())
        }
        Command::Chebyshev {
            set,
            nmax,
            out,
            grid,
            report,
        } => {
            if nmax == 0 {
                return Err(CliError::Invalid("--nmax must be at least 1".into()));
            }
            let g = grid.grid()?;
            let spec = load_set_spec(&set)?;
            let hash = grid.hash(ConfigHasher::new("chebyshev").arg("nmax", nmax)).file(&set)?.finish();
            let table = chebyshev_table(&spec, nmax, Strategy::Auto, &g).op("chebyshev_table")?;
            let rows: Vec<Vec<f64>> = table.iter().map(|(n, m, r)| vec![*n as f64, *m, *r]).collect();
            write_csv(&out, &["N", "M_N", "M_N^(1/N)"], &rows)?;
            let rise = table.windows(2).map(|w| w[1].2 - w[0].2).fold(f64::NEG_INFINITY, f64::max);
            let mut checks = Vec::new();
            if spec.is_circled() {
                checks.push(Check::new(
                    "M_N^(1/N) non-increasing",
                    table.len() < 2 || rise <= 1e-9,
                    format!("largest rise {rise:e}"),
                ));
            }
            let rep = Report {
                command: "chebyshev",
                config_hash: hash,
                seed: 0,
                results: json!({
                    "rows": table.iter().map(|(n, m, r)| json!([n, num(*m), num(*r)])).collect::<Vec<_>>(),
                    "t_estimate": num(table.iter().map(|r| r.2).fold(f64::INFINITY, f64::min)),
                    "circled": spec.is_circled(),
                }),
                checks,
            };
            if report.is_some() {
                emit(&rep, &report)?;
            }
            Ok(rep.passed())
        }
        Command::Bergman {
            field,
            j,
            j0,
            r,
            out,
            report,
        } => {
            positive("r", r)?;
            let phi = read_field(&field)?;
            let hash = ConfigHasher::new("bergman")
                .arg("j", j)
                .arg("j0", j0)
                .arg("r", r)
                .file(&field)?
                .finish();
            let b = bergman_regularize(&phi, j, j0).op("bergman_regularize")?;
            let s = bergman_sandwich(&phi, &b, j, j0, r).op("bergman_sandwich")?;
            let dist = l1_fs_distance(&b.field, &phi.map(|v| v.max(b.clip_depth))).op("l1_fs_distance")?;
            if let Some(p) = &out {
                write_field(p, &b.field)?;
            }
            let rep = Report {
                command: "bergman",
                config_hash: hash,
                seed: 0,
                results: json!({
                    "j": j,
                    "j0": j0,
                    "kept": b.kept,
                    "dropped": b.dropped,
                    "clip_depth": num(b.clip_depth),
                    "l1_distance": num(dist),
                    "log_c4": num(s.log_c4),
                    "c3": num(s.c3),
                    "r": r,
                }),
                checks: vec![
                    Check::new("output certified", b.field.claimed(), ""),
                    Check::new(
                        "sandwich constants finite",
                        s.log_c4.is_finite() && s.c3.is_finite(),
                        format!("log C4 {:.4}, C3 {:.4}", s.log_c4, s.c3),
                    ),
                ],
            };
            emit(&rep, &report)?;
            Ok(rep.passed())
        }
        Command::Green {
            map,
            tol,
            grid,
            out,
            svg,
            report,
        } => {
            positive("tol", tol)?;
            let g = grid.grid()?;
            let hash = grid.hash(ConfigHasher::new("green").arg("map", &map).arg("tol", tol)).finish();
            let f = parse_map(&map).op("parse_map")?;
            let res = green_function(&f, &g, tol).op("green_function")?;
            let resid = functional_residual(&f, &res);
            let mass = ma_measure(&res.field).op("ma_measure")?.total();
            if let Some(p) = &out {
                write_field(p, &res.field)?;
            }
            if let Some(p) = &svg {
                let lam = f.degree() as f64;
                let mut steps = Vec::new();
                let mut bound = Vec::new();
                let mut prev = green_iterate(&f, &g, 0);
                for j in 1..=res.j.max(1) {
                    let cur = green_iterate(&f, &g, j);
                    steps.push((j as f64, cur.max_abs_diff(&prev).op("max_abs_diff")?));
                    bound.push((j as f64, res.sup_abs_phi * lam.powi(1 - j as i32)));
                    prev = cur;
                }
                let plot = Plot {
                    title: format!("Green function iterates of ({map})"),
                    x_label: "j".into(),
                    y_label: "sup |g_j - g_(j-1)|".into(),
                    log_y: true,
                    series: vec![
                        Series {
                            name: "measured".into(),
                            points: steps,
                            dashed: false,
                        },
                        Series {
                            name: "sup|phi| lambda^(1-j)".into(),
                            points: bound,
                            dashed: true,
                        },
                    ],
                };
                write_text(p, &plot.render())?;
            }
            let rep = Report {
                command: "green",
                config_hash: hash,
                seed: 0,
                results: json!({
                    "lambda": f.degree(),
                    "j": res.j,
                    "error_bound": num(res.error_bound),
                    "sup_abs_phi": num(res.sup_abs_phi),
                    "functional_residual": num(resid),
                    "mass": num(mass),
                    "sup": num(res.field.sup()),
                    "inf": num(res.field.inf()),
                }),
                checks: vec![
                    Check::new("functional equation", resid <= 2.0 * tol, format!("{resid:e} <= 2 x {tol:e}")),
                    Check::new("unit mass", (mass - 1.0).abs() <= MASS_TOL, format!("{mass:.6}")),
                ],
            };
            emit(&rep, &report)?;
            Ok(rep.passed())
        }
        Command::Dyncheck {
            map,
            set,
            jmax,
            grid,
            report,
        } => {
            let g = grid.grid()?;
            let spec = load_set_spec(&set)?;
            let hash = grid
                .hash(ConfigHasher::new("dyncheck").arg("map", &map).arg("jmax", jmax))
                .file(&set)?
                .finish();
            let f = parse_map(&map).op("parse_map")?;
            let d = dyn_capacity_check(&f, std::slice::from_ref(&spec), jmax, &g).op("dyn_capacity_check")?;
            let vol = match volume_decay_check(&f, &spec, jmax, &g) {
                Ok(v) => json!({
                    "vol_k": num(v.vol_k),
                    "c_fit": num(v.c_fit),
                    "rows": v.rows.iter().map(|r| json!({
                        "j": r.j,
                        "vol_image": num(r.vol_image),
                        "vol_jacobian": num(r.vol_jacobian),
                        "margin": num(r.margin),
                    })).collect::<Vec<_>>(),
                }),
                Err(CoreError::ZeroVolume) => serde_json::Value::Null,
                Err(e) => return Err(CliError::Module { op: "volume_decay_check", source: e }),
            };
            let rep = Report {
                command: "dyncheck",
                config_hash: hash,
                seed: 0,
                results: json!({
                    "lambda": d.lambda,
                    "alpha_fit": num(d.alpha_fit),
                    "alpha_theory": num(d.alpha_theory),
                    "rows": d.rows.iter().map(|r| json!({
                        "j": r.j,
                        "t_k": num(r.t_k),
                        "t_image": num(r.t_image),
                    })).collect::<Vec<_>>(),
                    "volume": vol,
                }),
                checks: vec![
                    Check::new(
                        "fitted alpha",
                        d.alpha_fit > 0.0 && d.alpha_fit < 1.0 && d.holds_with(d.alpha_fit),
                        format!("{:.6}", d.alpha_fit),
                    ),
                    Check::new(
                        "theoretical alpha",
                        d.holds_with(d.alpha_theory),
                        format!("{:.6}", d.alpha_theory),
                    ),
                ],
            };
            emit(&rep, &report)?;
            Ok(rep.passed())
        }
        Command::Sweep {
            param,
            from,
            to,
            steps,
            field,
            grid,
            out,
            svg,
            report,
        } => {
            let values = linspace(from, to, steps)?;
            let g = grid.grid()?;
            let mut h = grid.hash(
                ConfigHasher::new("sweep")
                    .arg("param", format!("{param:?}"))
                    .arg("from", from)
                    .arg("to", to)
                    .arg("steps", steps),
            );
            if let Some(p) = &field {
                h = h.file(p)?;
            }
            let hash = h.finish();
            let (plot, results, checks) = match param {
                SweepParam::Radius => radius_sweep(&values, &g, &out)?,
                SweepParam::T => {
                    let p = field
                        .as_ref()
                        .ok_or_else(|| CliError::Invalid("--param t needs --field".into()))?;
                    t_sweep(&values, &read_field(p)?, &out)?
                }
            };
            if let Some(p) = &svg {
                write_text(p, &plot.render())?;
            }
            let rep = Report {
                command: "sweep",
                config_hash: hash,
                seed: 0,
                results,
                checks,
            };
            if report.is_some() {
                emit(&rep, &report)?;
            }
            Ok(rep.passed())
        }
        Command::Verify { suite, only, report } => {
            if suite != "paper" {
                return Err(CliError::Invalid(format!("unknown suite {suite:?}; the only suite is \"paper\"")));
            }
            let hash = ConfigHasher::new("verify")
                .arg("suite", &suite)
                .arg("only", format!("{only:?}"))
                .finish();
            let outcomes = run_suite(&only);
            for o in &outcomes {
                println!("{}", o.line());
            }
            let rep = Report {
                command: "verify",
                config_hash: hash,
                seed: 0,
                results: json!({ "criteria": outcomes.len() }),
                checks: outcomes
                    .iter()
                    .map(|o| Check::new(format!("criterion {}: {}", o.id, o.name), o.passed, o.detail.clone()))
                    .collect(),
            };
            if let Some(p) = &report {
                rep.write(p)?;
            }
            let passed = outcomes.iter().filter(|o| o.passed).count();
            println!("{passed}/{} criteria passed", outcomes.len());
            Ok(rep.passed())
        }
    }
}

/// `steps` evenly spaced values from `from` to `to`.
pub fn linspace(from: f64, to: f64, steps: usize) -> CliResult<Vec<f64>> {
    if !from.is_finite() || !to.is_finite() {
        return Err(CliError::Invalid("range ends must be finite".into()));
    }
    if steps == 0 || from > to || (steps > 1 && from == to) {
        return Err(CliError::EmptyRange(format!("{steps} steps from {from} to {to}")));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    Ok((0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect())
}

type SweepOut = (Plot, serde_json::Value, Vec<Check>);

fn radius_sweep(radii: &[f64], g: &ProjectiveGrid, out: &Path) -> CliResult<SweepOut> {
    if radii[0] <= 0.0 {
        return Err(CliError::Invalid("radii must be positive".into()));
    }
    let rows = radii
        .par_iter()
        .map(|r| capacity_comparison(&SetSpec::ball(*r), g))
        .collect::<Result<Vec<_>, _>>()
        .op("capacity_comparison")?;
    let a = fit_lower_constant(&rows);
    let table: Vec<Vec<f64>> = radii
        .iter()
        .zip(&rows)
        .map(|(r, row)| vec![*r, row.cap, row.t_alex, row.upper_bound, (-a / row.cap).exp()])
        .collect();
    write_csv(out, &["R", "cap_ma", "t_alex", "bound_upper", "bound_lower"], &table)?;
    let col = |k: usize| table.iter().map(|row| (row[0], row[k])).collect::<Vec<_>>();
    let plot = Plot {
        title: "Capacities of balls B_R".into(),
        x_label: "R".into(),
        y_label: "capacity".into(),
        log_y: true,
        series: vec![
            Series {
                name: "cap_ma".into(),
                points: col(1),
                dashed: false,
            },
            Series {
                name: "t_alex".into(),
                points: col(2),
                dashed: false,
            },
            Series {
                name: "R/sqrt(1+R^2)".into(),
                points: radii.iter().map(|r| (*r, r / (1.0 + r * r).sqrt())).collect(),
                dashed: true,
            },
            Series {
                name: "e exp(-1/cap)".into(),
                points: col(3),
                dashed: true,
            },
            Series {
                name: "exp(-A/cap)".into(),
                points: col(4),
                dashed: true,
            },
        ],
    };
    let worst = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    let results = json!({
        "fitted_a": num(a),
        "min_upper_slack": num(worst),
        "rows": table.iter().map(|r| r.iter().map(|v| num(*v)).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    let checks = vec![Check::new(
        "T <= e exp(-1/Cap)",
        worst >= -5e-2,
        format!("min slack {worst:.4e}"),
    )];
    Ok((plot, results, checks))
}

fn t_sweep(ts: &[f64], phi: &QpshField, out: &Path) -> CliResult<SweepOut> {
    if ts[0] <= 0.0 {
        return Err(CliError::Invalid("depths must be positive".into()));
    }
    let phi = phi.clone().with_claim(true);
    let chunks = ts
        .par_iter()
        .map(|t| sublevel_capacity_decay(&phi, std::slice::from_ref(t)))
        .collect::<Result<Vec<_>, _>>()
        .op("sublevel_capacity_decay")?;
    let rows: Vec<_> = chunks.iter().flat_map(|r| r.rows.iter().copied()).collect();
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.t, r.t_alex, r.t_bound, r.cap, r.cap_bound])
        .collect();
    write_csv(out, &["t", "t_alex", "t_bound", "cap", "cap_bound"], &table)?;
    let col = |k: usize| table.iter().map(|row| (row[0], row[k])).collect::<Vec<_>>();
    let plot = Plot {
        title: "Capacities of sublevel sets {phi < -t}".into(),
        x_label: "t".into(),
        y_label: "capacity".into(),
        log_y: true,
        series: vec![
            Series {
                name: "t_alex".into(),
                points: col(1),
                dashed: false,
            },
            Series {
                name: "exp(-sup phi - t)".into(),
                points: col(2),
                dashed: true,
            },
            Series {
                name: "cap".into(),
                points: col(3),
                dashed: false,
            },
            Series {
                name: "(mean(-phi)+1)/t".into(),
                points: col(4),
                dashed: true,
            },
        ],
    };
    let ok = rows.iter().all(|r| r.t_alex <= r.t_bound + 5e-2 && r.cap <= r.cap_bound + 5e-2);
    let results = json!({
        "rows": table.iter().map(|r| r.iter().map(|v| num(*v)).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    Ok((plot, results, vec![Check::new("decay bounds", ok, "tolerance 5e-2")]))
}

fn radial_profile_plot(f: &QpshField) -> Plot {
    let points = (0..=200)
        .map(|i| {
            let lr = -2.0 + 4.0 * i as f64 / 200.0;
            let r = 10f64.powf(lr);
            (lr, f.sample_pair(C64::new(r, 0.0), C64::new(1.0, 0.0)))
        })
        .collect();
    Plot {
        title: "Envelope along the positive real axis".into(),
        x_label: "log10 |z|".into(),
        y_label: "value".into(),
        log_y: false,
        series: vec![Series {
            name: "envelope".into(),
            points,
            dashed: false,
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(linspace(1.0, 2.0, 3).unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(linspace(1.0, 1.0, 1).unwrap(), vec![1.0]);
        assert!(matches!(linspace(2.0, 1.0, 3), Err(CliError::EmptyRange(_))));
        assert!(matches!(linspace(1.0, 2.0, 0), Err(CliError::EmptyRange(_))));
        assert!(matches!(linspace(1.0, 1.0, 4), Err(CliError::EmptyRange(_))));
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let c = Cli::try_parse_from(["kahlercap", "bergman", "--field", "f.bin", "--j", "32", "--j0", "2"]).unwrap();
        assert!(matches!(c.command, Command::Bergman { j: 32, j0: 2, .. }));
        let c = Cli::try_parse_from(["kahlercap", "verify", "--suite", "paper", "--only", "2,14"]).unwrap();
        assert!(matches!(c.command, Command::Verify { ref only, .. } if only == &[2, 14]));
    }
}
