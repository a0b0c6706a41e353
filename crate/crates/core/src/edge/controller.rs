use std::fmt;
use std::io::{self, Read, Write};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::estimator::{IncrementalSolver, KeyframeBuilder, PoseGraph, SolveStats, SolverConfig};
use crate::eval::PipelineConfig;
use crate::geom::{Pose2, Timestamp};
use crate::sim::{sample_ground_truth, Scenario};
use crate::wire::{encode_frame, Command, Frame, FrameReader, Payload, WireError};

use super::{
    plan_command, unpack, Action, EdgeError, IngestEvent, PlannerConfig, Scheduler, SchedulerConfig, SeqTracker,
};

/// Tunables read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgeTuning {
    pub scheduler: SchedulerConfig,
    pub planner: PlannerConfig,
    /// Send planned commands to the robot.
    pub send_commands: bool,
    /// Decoded frames buffered between the ingest and control tasks.
    pub queue_capacity: usize,
}

impl Default for EdgeTuning {
    fn default() -> Self {
        EdgeTuning {
            scheduler: SchedulerConfig::default(),
            planner: PlannerConfig::default(),
            send_commands: true,
            queue_capacity: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeConfig {
    pub tuning: EdgeTuning,
    pub pipeline: PipelineConfig,
    /// Pose of the anchor keyframe at `t = 0`.
    pub start: Pose2,
    pub n_aps: usize,
    pub imu_period_us: u64,
    pub rtt_period_us: u64,
    pub waypoints: Vec<[f64; 2]>,
}

impl EdgeConfig {
    /// Anchored at the scenario's start pose, steering along its waypoints.
    pub fn for_scenario(scenario: &Scenario, tuning: EdgeTuning, pipeline: PipelineConfig) -> Self {
        let gt = sample_ground_truth(scenario);
        EdgeConfig {
            tuning,
            pipeline,
            start: gt.samples.first().map(|s| s.1).unwrap_or_default(),
            n_aps: scenario.aps().len(),
            imu_period_us: scenario.imu_period_us(),
            rtt_period_us: scenario.rtt_period_us(),
            waypoints: scenario.waypoints().iter().skip(1).copied().collect(),
        }
    }
}

/// The control task's view of where the robot is.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateState {
    pub t: Timestamp,
    pub pose: Pose2,
    pub keyframe_count: usize,
    pub last_solve: Option<SolveStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeStats {
    pub frames: u64,
    pub imu_frames: u64,
    pub rtt_frames: u64,
    pub heartbeats: u64,
    pub odometry_samples: u64,
    /// Sequence numbers skipped by the robot, i.e. frames it dropped.
    pub seq_gaps: u64,
    pub duplicates: u64,
    pub bad_frames: u64,
    /// Samples older than an epoch already closed.
    pub late_samples: u64,
    pub unexpected_frames: u64,
    pub keyframes: u64,
    pub solves: u64,
    pub diverged_solves: u64,
    pub commands_planned: u64,
    pub commands_sent: u64,
    pub commands_unsent: u64,
    pub waypoints_reached: u64,
}

impl EdgeStats {
    pub fn drops(&self) -> u64 {
        self.seq_gaps + self.duplicates + self.bad_frames + self.late_samples
    }
}

/// One solver run, for the solve-stats log.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveRecord {
    pub keyframes: usize,
    pub loops: usize,
    pub new_loops: usize,
    pub iterations: usize,
    pub initial_chi2: f64,
    pub final_chi2: f64,
    pub converged: bool,
    pub wall_ms: f64,
}

impl SolveRecord {
    pub const CSV_HEADER: &'static str =
        "keyframes,loops,new_loops,iterations,initial_chi2,final_chi2,converged,wall_ms";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{},{:.3}",
            self.keyframes,
            self.loops,
            self.new_loops,
            self.iterations,
            self.initial_chi2,
            self.final_chi2,
            self.converged,
            self.wall_ms
        )
    }
}

/// Read-only snapshot for the periodic status line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeStatus {
    pub clock: Timestamp,
    pub keyframes: usize,
    pub last_chi2: Option<f64>,
    pub drops: u64,
}

impl fmt::Display for EdgeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={:.1}s keyframes={} chi2=",
            self.clock.as_secs_f64(),
            self.keyframes
        )?;
        match self.last_chi2 {
            Some(c) => write!(f, "{c:.3}")?,
            None => f.write_str("-")?,
        }
        write!(f, " drops={}", self.drops)
    }
}

/// Everything a finished edge session produced.
#[derive(Debug, Clone)]
pub struct EdgeReport {
    pub trajectory: Vec<(Timestamp, Pose2)>,
    pub graph: PoseGraph,
    pub stats: EdgeStats,
    pub solves: Vec<SolveRecord>,
    pub commands: Vec<(Timestamp, Command)>,
    pub end_time: Timestamp,
}

impl EdgeReport {
    pub fn write_solve_log<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", SolveRecord::CSV_HEADER)?;
        for s in &self.solves {
            writeln!(w, "{}", s.csv_row())?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let s = &self.stats;
        let last = self.solves.last();
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k:<18} {v}\n"));
        line("end_time_s", format!("{:.3}", self.end_time.as_secs_f64()));
        line("frames", s.frames.to_string());
        line("imu_frames", s.imu_frames.to_string());
        line("rtt_frames", s.rtt_frames.to_string());
        line("heartbeats", s.heartbeats.to_string());
        line("odometry_samples", s.odometry_samples.to_string());
        line("seq_gaps", s.seq_gaps.to_string());
        line("duplicates", s.duplicates.to_string());
        line("bad_frames", s.bad_frames.to_string());
        line("late_samples", s.late_samples.to_string());
        line("keyframes", s.keyframes.to_string());
        line("loop_closures", self.graph.loop_edges.len().to_string());
        line("solves", s.solves.to_string());
        line("diverged_solves", s.diverged_solves.to_string());
        line(
            "final_chi2",
            last.map_or_else(|| "-".into(), |r| format!("{:.6}", r.final_chi2)),
        );
        let wall: f64 = self.solves.iter().map(|r| r.wall_ms).sum();
        let worst = self.solves.iter().map(|r| r.wall_ms).fold(0.0, f64::max);
        line("solve_ms_total", format!("{wall:.1}"));
        line("solve_ms_max", format!("{worst:.1}"));
        line("commands_planned", s.commands_planned.to_string());
        line("commands_sent", s.commands_sent.to_string());
        line("commands_unsent", s.commands_unsent.to_string());
        line("waypoints_reached", s.waypoints_reached.to_string());
        out
    }
}

/// Scheduler, estimator and planner, driven one frame at a time.
///
/// The control clock is the latest sample time received. An epoch closes
/// into a keyframe once anything newer than it arrives, or at end of
/// stream, so dropped IMU data never delays or removes a keyframe.
#[derive(Debug)]
pub struct EdgeController {
    cfg: EdgeConfig,
    builder: KeyframeBuilder,
    backend: IncrementalSolver,
    scheduler: Scheduler,
    waypoints: Vec<[f64; 2]>,
    next_waypoint: usize,
    clock: Timestamp,
    stats: EdgeStats,
    last_solve: Option<SolveStats>,
    solves: Vec<SolveRecord>,
    commands: Vec<(Timestamp, Command)>,
}

impl EdgeController {
    pub fn new(cfg: EdgeConfig) -> Self {
        let builder = KeyframeBuilder::new(
            Timestamp::ZERO,
            cfg.start,
            cfg.n_aps,
            cfg.imu_period_us,
            cfg.pipeline.keyframe,
        );
        let backend = IncrementalSolver::new(cfg.pipeline.loops, cfg.pipeline.solver);
        let scheduler = Scheduler::new(cfg.tuning.scheduler, cfg.rtt_period_us);
        EdgeController {
            waypoints: cfg.waypoints.clone(),
            next_waypoint: 0,
            builder,
            backend,
            scheduler,
            cfg,
            clock: Timestamp::ZERO,
            stats: EdgeStats::default(),
            last_solve: None,
            solves: Vec::new(),
            commands: Vec::new(),
        }
    }

    pub fn solver_config(&self) -> &SolverConfig {
        self.backend.solver_config()
    }

    pub fn stats(&self) -> &EdgeStats {
        &self.stats
    }

    pub fn estimate(&self) -> EstimateState {
        EstimateState {
            t: self.clock,
            pose: self.builder.current_pose(),
            keyframe_count: self.builder.keyframe_count(),
            last_solve: self.last_solve.clone(),
        }
    }

    pub fn status(&self) -> EdgeStatus {
        EdgeStatus {
            clock: self.clock,
            keyframes: self.builder.keyframe_count(),
            last_chi2: self.last_solve.as_ref().map(|s| s.final_chi2),
            drops: self.stats.drops(),
        }
    }

    /// Records a frame the ingest task discarded.
    pub fn note_rejected(&mut self, err: &EdgeError) {
        match err {
            EdgeError::DuplicateFrame { .. } => self.stats.duplicates += 1,
            _ => self.stats.bad_frames += 1,
        }
    }

    /// Feeds one accepted frame; `gap` is the number of sequence numbers
    /// skipped before it. Returns the commands planned on the way.
    pub fn on_frame(&mut self, frame: &Frame, gap: u32) -> Result<Vec<Command>, EdgeError> {
        self.stats.frames += 1;
        self.stats.seq_gaps += gap as u64;
        match frame.payload {
            Payload::ImuBatch(_) => self.stats.imu_frames += 1,
            Payload::Rtt { .. } => self.stats.rtt_frames += 1,
            Payload::Heartbeat => self.stats.heartbeats += 1,
            Payload::Command(_) => self.stats.unexpected_frames += 1,
        }
        let mut out = Vec::new();
        for ev in unpack(frame) {
            let t = ev.time();
            // Everything strictly before t is complete.
            if t.0 > 0 {
                self.run_actions(Timestamp(t.0 - 1), &mut out)?;
            }
            let late = self.builder.keyframe_count() > 0 && t <= self.scheduler.last_epoch();
            match ev {
                IngestEvent::Odometry(_) | IngestEvent::Range(_) if late => self.stats.late_samples += 1,
                IngestEvent::Odometry(o) => {
                    self.stats.odometry_samples += 1;
                    self.builder.push_odometry(&o);
                }
                IngestEvent::Range(r) => {
                    if (r.ap_id as usize) < self.cfg.n_aps {
                        self.builder.push_range(&r);
                    } else {
                        self.stats.bad_frames += 1;
                    }
                }
                IngestEvent::Heartbeat(_) => {}
            }
            self.clock = self.clock.max(t);
        }
        Ok(out)
    }

    fn run_actions(&mut self, now: Timestamp, out: &mut Vec<Command>) -> Result<(), EdgeError> {
        for action in self.scheduler.tick(now) {
            match action {
                Action::MakeKeyframe(t) => {
                    self.builder.close_epoch(t);
                    self.stats.keyframes += 1;
                }
                Action::RunSolver => self.solve()?,
                Action::PlanCommand(t) => {
                    if let Some(cmd) = self.plan(t) {
                        out.push(cmd);
                    }
                }
            }
        }
        Ok(())
    }

    fn solve(&mut self) -> Result<(), EdgeError> {
        let start = Instant::now();
        let graph = self.builder.graph_mut();
        let outcome = self.backend.solve(graph)?;
        self.stats.solves += 1;
        self.stats.diverged_solves += outcome.diverged as u64;
        self.solves.push(SolveRecord {
            keyframes: graph.len() - 1,
            loops: graph.loop_edges.len(),
            new_loops: outcome.new_loops,
            iterations: outcome.stats.iterations,
            initial_chi2: outcome.stats.initial_chi2,
            final_chi2: outcome.stats.final_chi2,
            converged: outcome.stats.converged,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        self.last_solve = Some(outcome.stats);
        Ok(())
    }

    fn plan(&mut self, t: Timestamp) -> Option<Command> {
        let remaining = &self.waypoints[self.next_waypoint..];
        let plan = plan_command(&self.builder.current_pose(), remaining, &self.cfg.tuning.planner).ok()?;
        if plan.reached {
            self.next_waypoint += 1;
            self.stats.waypoints_reached += 1;
        }
        self.stats.commands_planned += 1;
        self.commands.push((t, plan.command));
        Some(plan.command)
    }

    /// Closes every epoch up to the last sample, runs a final solve if
    /// keyframes were added since the previous one, and reports.
    pub fn finish(mut self) -> Result<EdgeReport, EdgeError> {
        let mut sink = Vec::new();
        self.run_actions(self.clock, &mut sink)?;
        if self.scheduler.unsolved() > 0 || self.solves.is_empty() {
            self.solve()?;
        }
        let graph = self.builder.into_graph();
        Ok(EdgeReport {
            trajectory: graph.nodes.iter().map(|n| (n.t, n.pose)).collect(),
            graph,
            stats: self.stats,
            solves: self.solves,
            commands: self.commands,
            end_time: self.clock,
        })
    }
}

enum IngestMsg {
    Frame(Frame, u32),
    Rejected(EdgeError),
    End(Option<io::Error>),
}

/// Runs the edge over a byte stream until the robot closes it.
///
/// An ingest thread decodes frames and filters sequence numbers into a
/// bounded queue; the calling thread owns the estimator, writes commands to
/// `commands` and calls `status` about once per wall-clock second.
pub fn run_edge<R, W, F>(cfg: EdgeConfig, input: R, mut commands: W, mut status: F) -> Result<EdgeReport, EdgeError>
where
    R: Read + Send,
    W: Write,
    F: FnMut(&EdgeStatus),
{
    let send = cfg.tuning.send_commands;
    let (tx, rx) = mpsc::sync_channel(cfg.tuning.queue_capacity.max(1));
    let mut ctl = EdgeController::new(cfg);
    thread::scope(|scope| {
        scope.spawn(move || {
            let mut seq = SeqTracker::default();
            let mut reader = FrameReader::new(input);
            loop {
                let msg = match reader.next_frame() {
                    Ok(Some(f)) => match seq.accept(f.seq) {
                        Ok(gap) => IngestMsg::Frame(f, gap),
                        Err(e) => IngestMsg::Rejected(e),
                    },
                    Ok(None) => IngestMsg::End(None),
                    Err(WireError::Io(e)) => IngestMsg::End(Some(e)),
                    Err(e) => IngestMsg::Rejected(e.into()),
                };
                let end = matches!(msg, IngestMsg::End(_));
                if tx.send(msg).is_err() || end {
                    break;
                }
            }
        });

        let mut out_seq = 0u32;
        let mut writable = send;
        let mut next_status = Instant::now() + Duration::from_secs(1);
        loop {
            let wait = next_status.saturating_duration_since(Instant::now());
            match rx.recv_timeout(wait) {
                Ok(IngestMsg::Frame(f, gap)) => {
                    let now = ctl.clock.max(f.timestamp);
                    for cmd in ctl.on_frame(&f, gap)? {
                        if !writable {
                            ctl.stats.commands_unsent += send as u64;
                            continue;
                        }
                        let frame = Frame {
                            seq: out_seq,
                            timestamp: now,
                            payload: Payload::Command(cmd),
                        };
                        out_seq = out_seq.wrapping_add(1);
                        let bytes = encode_frame(&frame)?;
                        if commands.write_all(&bytes).and_then(|_| commands.flush()).is_ok() {
                            ctl.stats.commands_sent += 1;
                        } else {
                            // The robot has stopped listening; keep estimating.
                            writable = false;
                            ctl.stats.commands_unsent += 1;
                        }
                    }
                }
                Ok(IngestMsg::Rejected(e)) => ctl.note_rejected(&e),
                Ok(IngestMsg::End(None)) | Err(RecvTimeoutError::Disconnected) => break,
                Ok(IngestMsg::End(Some(e))) => return Err(EdgeError::Io(e)),
                Err(RecvTimeoutError::Timeout) => {}
            }
            if Instant::now() >= next_status {
                status(&ctl.status());
                next_status += Duration::from_secs(1);
            }
        }
        ctl.finish()
    })
}
