//! `edgebot`: simulator, offline evaluation, and the live robot and edge nodes.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use edgebot_core::config::FileConfig;
use edgebot_core::edge::{run_edge, EdgeConfig, EdgeReport, EdgeStatus};
use edgebot_core::eval::{run_experiment, write_trajectory_csv, MetricsReport};
use edgebot_core::robot::{run_robot, ClosedLoopSource, OpenLoopSource, TcpLink};
use edgebot_core::sim::{sample_ground_truth, simulate};
use edgebot_core::system::{closed_loop_duration_us, run_loopback, run_sockets, Drive, SystemReport};

#[derive(Parser)]
#[command(
    name = "edgebot",
    version,
    about = "Edge-offloaded robot localization with robust pose-graph SLAM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write ground truth and raw sensor streams for one scenario.
    Simulate {
        #[arg(long, default_value = "exp1")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional config whose scenario keys override the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every configured method on every seed and write metrics and plots.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Robot and edge in one process.
    Run {
        #[arg(long, value_enum, default_value_t = Mode::Loopback)]
        mode: Mode,
        /// Drive the robot from edge commands instead of the scripted path.
        #[arg(long)]
        closed_loop: bool,
        /// Simulated seconds per wall second; overrides the config.
        #[arg(long)]
        speedup: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Robot node streaming to an edge controller.
    Robot {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        connect: String,
        #[arg(long)]
        closed_loop: bool,
        /// Simulated seconds per wall second; overrides the config.
        #[arg(long)]
        speedup: Option<f64>,
    },
    /// Edge controller serving one robot connection.
    Edge {
        #[arg(long)]
        listen: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Loopback,
    Sockets,
}

fn load_with_speedup(config: Option<&Path>, speedup: Option<f64>) -> Result<FileConfig> {
    let mut file = load(config)?;
    if speedup.is_some() {
        file.robot.speedup = speedup;
    }
    Ok(file)
}

fn load(config: Option<&Path>) -> Result<FileConfig> {
    match config {
        Some(p) => FileConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(FileConfig::default()),
    }
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))
}

fn print_status(s: &EdgeStatus) {
    println!("{s}");
}

fn write_edge_outputs(dir: &Path, edge: &EdgeReport, extra: &str) -> Result<()> {
    write_file(dir, "trajectory_edge.csv", |w| {
        write_trajectory_csv(w, &edge.trajectory)
    })?;
    write_file(dir, "solves.csv", |w| edge.write_solve_log(w))?;
    write_file(dir, "summary.txt", |w| {
        w.write_all(edge.summary().as_bytes())?;
        w.write_all(extra.as_bytes())
    })
}

fn cmd_simulate(preset: &str, seed: u64, config: Option<&Path>, out: &Path) -> Result<()> {
    let mut file = load(config)?;
    file.preset = Some(preset.to_owned());
    file.seed = Some(seed);
    let scenario = file.scenario()?;
    let (gt, streams) = simulate(&scenario);
    out_dir(out)?;
    write_file(out, "ground_truth.csv", |w| gt.write_csv(w))?;
    write_file(out, "odometry.csv", |w| streams.write_odometry_csv(w))?;
    write_file(out, "rtt.csv", |w| streams.write_rtt_csv(w))?;
    println!(
        "{} seed {}: {} poses, {:.2} m, {} odometry samples, {} ranges",
        scenario.name(),
        seed,
        gt.samples.len(),
        gt.path_length,
        streams.odometry.len(),
        streams.rtt.len()
    );
    Ok(())
}

fn cmd_eval(config: Option<&Path>, out: &Path) -> Result<()> {
    let exp = load(config)?.experiment()?;
    let started = Instant::now();
    let report = run_experiment(&exp)?;
    out_dir(out)?;
    report
        .write_outputs(out)
        .with_context(|| format!("writing outputs to {}", out.display()))?;
    print!("{}", report.summary());
    eprintln!("finished in {:.1} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_run(mode: Mode, closed_loop: bool, speedup: Option<f64>, config: Option<&Path>, out: &Path) -> Result<()> {
    let file = load_with_speedup(config, speedup)?;
    let scenario = file.scenario()?;
    let drive = if closed_loop {
        Drive::closed_loop_for(&scenario)
    } else {
        Drive::OpenLoop
    };
    let edge_cfg = EdgeConfig::for_scenario(&scenario, file.edge.clone(), file.pipeline);
    let SystemReport { robot, edge } = match mode {
        Mode::Loopback => run_loopback(&scenario, drive, file.robot.clone(), edge_cfg, print_status)?,
        Mode::Sockets => run_sockets(&scenario, drive, file.robot.clone(), edge_cfg, print_status)?,
    };

    let mut extra = String::new();
    if !closed_loop {
        let gt = sample_ground_truth(&scenario);
        let m = MetricsReport::compute("edge", &edge.trajectory, &gt)?;
        extra = format!(
            "rmse_m             {:.6}\np90_m              {:.6}\nendpoint_m         {:.6}\n",
            m.rmse, m.p90, m.endpoint
        );
    }
    extra.push_str("\nrobot\n");
    extra.push_str(&robot.stats.to_string());
    out_dir(out)?;
    write_edge_outputs(out, &edge, &extra)?;
    print!("{}{}", edge.summary(), extra);
    Ok(())
}

fn cmd_robot(config: Option<&Path>, connect: &str, closed_loop: bool, speedup: Option<f64>) -> Result<()> {
    let file = load_with_speedup(config, speedup)?;
    let scenario = file.scenario()?;
    let stream = TcpStream::connect(connect).with_context(|| format!("connecting to {connect}"))?;
    stream.set_nodelay(true)?;
    let link = TcpLink::new(stream)?;
    let report = if closed_loop {
        let start = sample_ground_truth(&scenario).samples[0].1;
        let source = ClosedLoopSource::new(&scenario, start, closed_loop_duration_us(&scenario));
        run_robot(file.robot, source, link)?
    } else {
        let (_, streams) = simulate(&scenario);
        run_robot(file.robot, OpenLoopSource::new(scenario.imu_period_us(), streams), link)?
    };
    print!("{}", report.stats);
    println!("commands_logged   {}", report.commands.len());
    Ok(())
}

fn cmd_edge(listen: &str, config: Option<&Path>, out: &Path) -> Result<()> {
    let file = load(config)?;
    let scenario = file.scenario()?;
    out_dir(out)?;
    let listener = TcpListener::bind(listen).with_context(|| format!("binding {listen}"))?;
    eprintln!("listening on {}", listener.local_addr()?);
    let (stream, peer) = listener.accept()?;
    eprintln!("robot connected from {peer}");
    stream.set_nodelay(true)?;
    let input = stream.try_clone()?;
    let edge = run_edge(
        EdgeConfig::for_scenario(&scenario, file.edge, file.pipeline),
        input,
        stream,
        print_status,
    )?;
    write_edge_outputs(out, &edge, "")?;
    print!("{}", edge.summary());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            preset,
            seed,
            config,
            out,
        } => cmd_simulate(&preset, seed, config.as_deref(), &out),
        Command::Eval { config, out } => cmd_eval(config.as_deref(), &out),
        Command::Run {
            mode,
            closed_loop,
            speedup,
            config,
            out,
        } => cmd_run(mode, closed_loop, speedup, config.as_deref(), &out),
        Command::Robot {
            config,
            connect,
            closed_loop,
            speedup,
        } => cmd_robot(config.as_deref(), &connect, closed_loop, speedup),
        Command::Edge { listen, config, out } => cmd_edge(&listen, config.as_deref(), &out),
    }
}
