use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use girder_inspect::geometry::{load_bridge, Point3};
use girder_inspect::gtsp::{plan_bridge, read_plan, write_plan, PlanError, SolverParams};
use girder_inspect::lidar::{simulate_scan, Pose, ScanPlane};
use girder_inspect::sim::{export_log, read_metrics, run_mission, write_scan_svg, MissionConfig, SimError};
use girder_inspect::Bridge;

const EXIT_TIMEOUT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "girder-inspect", version, about = "Coverage planning and simulated lidar inspection of box girder bridges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the surface visiting order and write the plan.
    Plan {
        bridge: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1500)]
        iterations: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// Fly a plan in closed loop and export logs and plots.
    Simulate {
        bridge: PathBuf,
        plan: PathBuf,
        #[arg(short, long, default_value = "out")]
        output: PathBuf,
        /// Mission config (TOML); defaults apply to anything omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Steady wind "x,y,z" in m/s.
        #[arg(long)]
        wind: Option<String>,
    },
    /// Print one scan as CSV (bearing, range) and optionally plot it.
    ScanDebug {
        bridge: PathBuf,
        /// "x,y,z,yaw" with yaw in radians.
        #[arg(long)]
        pose: String,
        #[arg(long, value_enum, default_value_t = PlaneArg::H)]
        plane: PlaneArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Print the metrics table of a simulation output directory.
    Report { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlaneArg {
    H,
    V,
}

fn parse_floats<const N: usize>(s: &str, what: &str) -> Result<[f64; N]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("{what} must be {N} comma separated numbers"))?;
    v.try_into()
        .map_err(|_| anyhow!("{what} must be {N} comma separated numbers"))
}

fn load_model(path: &Path) -> Result<Bridge> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_bridge(&text).with_context(|| format!("loading {}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<MissionConfig> {
    match path {
        None => Ok(MissionConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            MissionConfig::from_toml(&text).map_err(|e| anyhow!("{}: {e}", p.display()))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Plan {
            bridge,
            output,
            seed,
            iterations,
            restarts,
        } => {
            let m = load_model(&bridge)?;
            let params = SolverParams {
                seed,
                iterations,
                restarts,
                ..SolverParams::default()
            };
            let plan = plan_bridge(&m, &params)?;
            let text = write_plan(&plan);
            match output {
                Some(path) => {
                    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                    let seq: Vec<String> = plan
                        .legs
                        .iter()
                        .map(|l| format!("{}({})", l.routine, l.surface_id))
                        .collect();
                    println!("{}", seq.join(" "));
                    println!("cost {:.3}  solved in {:.3} s", plan.total_cost, plan.solve_seconds);
                }
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            bridge,
            plan,
            output,
            config,
            seed,
            wind,
        } => {
            let m = load_model(&bridge)?;
            let text = fs::read_to_string(&plan).with_context(|| format!("reading {}", plan.display()))?;
            let plan = read_plan(&text, &m)?;
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.sim.rng_seed = s;
            }
            if let Some(w) = wind {
                cfg.sim.wind = parse_floats::<3>(&w, "--wind")?;
            }
            let log = run_mission(&m, &plan, &cfg)?;
            let paths = export_log(&log, &m, &output)?;
            println!(
                "{} switches, {:.1} s simulated, outputs in {}",
                log.metrics.switch_count,
                log.metrics.mission_time,
                output.display()
            );
            println!("trajectory {}", paths.trajectory.display());
            println!("plot {}", paths.svg.display());
            if let Some(msg) = &log.metrics.timeout {
                eprintln!("timeout: {msg}");
                return Ok(ExitCode::from(EXIT_TIMEOUT));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ScanDebug {
            bridge,
            pose,
            plane,
            config,
            seed,
            svg,
        } => {
            let m = load_model(&bridge)?;
            let cfg = load_config(config.as_deref())?;
            let [x, y, z, yaw] = parse_floats::<4>(&pose, "--pose")?;
            let pose = Pose::new(Point3::new(x, y, z), yaw);
            if !pose.is_finite() {
                bail!("--pose must be finite");
            }
            let plane = match plane {
                PlaneArg::H => ScanPlane::Horizontal,
                PlaneArg::V => ScanPlane::Vertical,
            };
            let scan = simulate_scan(&m, &pose, plane, &cfg.lidar, seed);
            let mut csv = String::from("bearing,range\n");
            for p in &scan.points {
                csv.push_str(&format!("{},{}\n", p.bearing, p.range));
            }
            if let Err(e) = std::io::stdout().write_all(csv.as_bytes()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
            if let Some(path) = svg {
                let lines = cfg.perception.lines(&scan);
                fs::write(&path, write_scan_svg(&scan, &lines)).with_context(|| format!("writing {}", path.display()))?;
                for l in &lines {
                    eprintln!(
                        "line theta {:.1} rho {:.3} extent {:.2} inliers {}",
                        l.theta, l.rho, l.extent, l.inlier_count
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dir } => {
            let metrics = read_metrics(&dir.join("metrics.json"))?;
            println!(
                "completed {}  mission time {:.1} s  switches {}",
                metrics.completed, metrics.mission_time, metrics.switch_count
            );
            if let Some(t) = &metrics.timeout {
                println!("timeout: {t}");
            }
            println!(
                "{:>3} {:>7} {:>7} {:>8} {:>8} {:>9} {:>9} {:>9} {:>9}",
                "leg", "surface", "routine", "start", "end", "rms_stand", "max_stand", "rms_along", "max_along"
            );
            for l in &metrics.legs {
                println!(
                    "{:>3} {:>7} {:>7} {:>8.1} {:>8.1} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
                    l.leg,
                    l.surface,
                    l.routine,
                    l.start,
                    l.end,
                    l.rms_standoff_err,
                    l.max_standoff_err,
                    l.rms_along_err,
                    l.max_along_err
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = e.chain().any(|c| {
                c.downcast_ref::<PlanError>().is_some()
                    || matches!(c.downcast_ref::<SimError>(), Some(SimError::Supervisor(_)))
            });
            if infeasible {
                ExitCode::from(EXIT_INFEASIBLE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
