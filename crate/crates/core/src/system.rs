//! Robot and edge wired together in one process, over in-memory pipes or
//! a local TCP connection.

use std::io;
use std::net::{TcpListener, TcpStream};
use std::thread;

use thiserror::Error;

use crate::edge::{run_edge, EdgeConfig, EdgeError, EdgeReport, EdgeStatus};
use crate::robot::{
    run_robot, ClosedLoopSource, OpenLoopSource, PipeLink, RobotConfig, RobotError, SessionReport, TcpLink,
};
use crate::sim::{sample_ground_truth, simulate, Scenario};
use crate::transport::pipe;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("robot: {0}")]
    Robot(#[from] RobotError),
    #[error("edge: {0}")]
    Edge(#[from] EdgeError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{0} thread panicked")]
    Panicked(&'static str),
}

/// Where the robot's motion comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drive {
    /// Follow the scenario's scripted path; commands are only logged.
    OpenLoop,
    /// Move only as commanded, for this many microseconds of simulated time.
    ClosedLoop { duration_us: u64 },
}

/// Half again the scripted duration, so a commanded robot has time to
/// finish the route.
pub fn closed_loop_duration_us(scenario: &Scenario) -> u64 {
    sample_ground_truth(scenario).end().unwrap_or_default().0 * 3 / 2
}

impl Drive {
    pub fn closed_loop_for(scenario: &Scenario) -> Drive {
        Drive::ClosedLoop {
            duration_us: closed_loop_duration_us(scenario),
        }
    }
}

#[derive(Debug)]
pub struct SystemReport {
    pub robot: SessionReport,
    pub edge: EdgeReport,
}

fn spawn_robot<L: crate::robot::Link + Send + 'static>(
    scenario: &Scenario,
    drive: Drive,
    cfg: RobotConfig,
    link: L,
) -> thread::JoinHandle<Result<SessionReport, RobotError>> {
    match drive {
        Drive::OpenLoop => {
            let (_, streams) = simulate(scenario);
            let src = OpenLoopSource::new(scenario.imu_period_us(), streams);
            thread::spawn(move || run_robot(cfg, src, link))
        }
        Drive::ClosedLoop { duration_us } => {
            let start = sample_ground_truth(scenario).samples[0].1;
            let src = ClosedLoopSource::new(scenario, start, duration_us);
            thread::spawn(move || run_robot(cfg, src, link))
        }
    }
}

fn join<T>(h: thread::JoinHandle<T>, who: &'static str) -> Result<T, SystemError> {
    h.join().map_err(|_| SystemError::Panicked(who))
}

/// Robot on a worker thread, edge on the caller's, joined by pipes.
pub fn run_loopback(
    scenario: &Scenario,
    drive: Drive,
    robot: RobotConfig,
    edge: EdgeConfig,
    status: impl FnMut(&EdgeStatus),
) -> Result<SystemReport, SystemError> {
    let (up_tx, up_rx) = pipe();
    let (down_tx, down_rx) = pipe();
    let handle = spawn_robot(scenario, drive, robot, PipeLink::new(up_tx, down_rx));
    let edge = run_edge(edge, up_rx, down_tx, status);
    let robot = join(handle, "robot")?;
    Ok(SystemReport {
        robot: robot?,
        edge: edge?,
    })
}

/// As [`run_loopback`], over a TCP connection on `127.0.0.1`.
pub fn run_sockets(
    scenario: &Scenario,
    drive: Drive,
    robot: RobotConfig,
    edge: EdgeConfig,
    status: impl FnMut(&EdgeStatus),
) -> Result<SystemReport, SystemError> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let link = TcpLink::new(TcpStream::connect(addr)?)?;
    let handle = spawn_robot(scenario, drive, robot, link);
    let (stream, _) = listener.accept()?;
    stream.set_nodelay(true)?;
    let input = stream.try_clone()?;
    let edge = run_edge(edge, input, stream, status);
    let robot = join(handle, "robot")?;
    Ok(SystemReport {
        robot: robot?,
        edge: edge?,
    })
}
