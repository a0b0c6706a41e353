use std::fmt;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::geom::Timestamp;
use crate::sim::OdometrySample;
use crate::transport::FrameAssembler;
use crate::wire::{encode_frame, range_to_mm, Command, Frame, FrameKind, ImuTick, Payload, TickQuantizer};

use super::{Link, PushOutcome, QueuedFrame, RobotError, SensorSource, StalledLink, TxBuffer, DEFAULT_TX_CAPACITY};

/// A window of simulated time during which the link refuses to send.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StallWindow {
    pub start_ms: u64,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    /// IMU ticks per ImuBatch frame.
    pub batch_size: usize,
    /// Transmit buffer capacity, in frames.
    pub tx_capacity: usize,
    pub heartbeat_period_ms: u64,
    /// Pace simulated time at this multiple of wall time. When absent, open
    /// loop runs unpaced and closed loop runs in real time.
    pub speedup: Option<f64>,
    pub stall: Option<StallWindow>,
    /// Simulated time allowed after the streams end to empty the buffer.
    pub drain_limit_ms: u64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        RobotConfig {
            batch_size: 20,
            tx_capacity: DEFAULT_TX_CAPACITY,
            heartbeat_period_ms: 1000,
            speedup: None,
            stall: None,
            drain_limit_ms: 10_000,
        }
    }
}

/// Frame counts broken down by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KindCounts {
    pub imu: u64,
    pub rtt: u64,
    pub command: u64,
    pub heartbeat: u64,
}

impl KindCounts {
    pub fn get(&self, kind: FrameKind) -> u64 {
        match kind {
            FrameKind::ImuBatch => self.imu,
            FrameKind::Rtt => self.rtt,
            FrameKind::Command => self.command,
            FrameKind::Heartbeat => self.heartbeat,
        }
    }

    fn bump(&mut self, kind: FrameKind) {
        match kind {
            FrameKind::ImuBatch => self.imu += 1,
            FrameKind::Rtt => self.rtt += 1,
            FrameKind::Command => self.command += 1,
            FrameKind::Heartbeat => self.heartbeat += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.imu + self.rtt + self.command + self.heartbeat
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionStats {
    pub generated: KindCounts,
    pub sent: KindCounts,
    pub dropped: KindCounts,
    /// Frames still queued when the session ended.
    pub unsent: KindCounts,
    pub imu_ticks_generated: u64,
    pub imu_ticks_dropped: u64,
    pub rtt_epochs: u64,
    pub commands_received: u64,
    pub bad_frames_received: u64,
    pub last_seq: Option<u32>,
    pub end_time: Timestamp,
}

impl SessionStats {
    pub fn dropped_imu(&self) -> u64 {
        self.dropped.imu
    }

    pub fn dropped_rtt(&self) -> u64 {
        self.dropped.rtt
    }

    pub fn sent_total(&self) -> u64 {
        self.sent.total()
    }
}

impl fmt::Display for SessionStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, name: &str, c: &KindCounts| {
            writeln!(
                f,
                "{name:<10} imu={} rtt={} heartbeat={} total={}",
                c.imu,
                c.rtt,
                c.heartbeat,
                c.total()
            )
        };
        row(f, "generated", &self.generated)?;
        row(f, "sent", &self.sent)?;
        row(f, "dropped", &self.dropped)?;
        row(f, "unsent", &self.unsent)?;
        writeln!(
            f,
            "imu_ticks  generated={} dropped={}",
            self.imu_ticks_generated, self.imu_ticks_dropped
        )?;
        writeln!(f, "rtt_epochs {}", self.rtt_epochs)?;
        writeln!(f, "commands_received {}", self.commands_received)?;
        writeln!(f, "bad_frames_received {}", self.bad_frames_received)?;
        write!(f, "end_time_s {:.3}", self.end_time.as_secs_f64())
    }
}

/// Commands in the order received.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandLog {
    entries: Vec<(Timestamp, Command)>,
}

impl CommandLog {
    /// Appends a command; a time earlier than the last entry is raised to it.
    pub fn push(&mut self, t: Timestamp, cmd: Command) {
        let t = self.entries.last().map_or(t, |&(last, _)| t.max(last));
        self.entries.push((t, cmd));
    }

    pub fn entries(&self) -> &[(Timestamp, Command)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Records a command and, for a closed-loop source, steers the robot.
pub fn apply_command<S: SensorSource + ?Sized>(log: &mut CommandLog, source: &mut S, t: Timestamp, cmd: Command) {
    log.push(t, cmd);
    source.command(t, &cmd);
}

/// Everything a finished session leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionReport {
    pub stats: SessionStats,
    pub commands: CommandLog,
}

/// The robot's event loop: sense, batch, queue, transmit, receive.
pub struct RobotSession<S, L> {
    cfg: RobotConfig,
    source: S,
    link: L,
    buffer: TxBuffer,
    quantizer: TickQuantizer,
    batch: Vec<ImuTick>,
    batch_start: Timestamp,
    next_seq: u32,
    stats: SessionStats,
    commands: CommandLog,
    rx_bytes: Vec<u8>,
    assembler: FrameAssembler,
    now: Timestamp,
}

impl<S: SensorSource, L: Link> RobotSession<S, L> {
    pub fn new(cfg: RobotConfig, source: S, link: L) -> Self {
        let buffer = TxBuffer::new(cfg.tx_capacity);
        RobotSession {
            cfg,
            source,
            link,
            buffer,
            quantizer: TickQuantizer::default(),
            batch: Vec::new(),
            batch_start: Timestamp::ZERO,
            next_seq: 0,
            stats: SessionStats::default(),
            commands: CommandLog::default(),
            rx_bytes: Vec::new(),
            assembler: FrameAssembler::default(),
            now: Timestamp::ZERO,
        }
    }

    pub fn stats(&self) -> &SessionStats {
        &self.stats
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn buffer(&self) -> &TxBuffer {
        &self.buffer
    }

    /// Runs until the sensor streams end and the buffer drains.
    pub fn run(mut self) -> Result<SessionReport, RobotError> {
        match self.run_inner() {
            Ok(()) => Ok(SessionReport {
                stats: self.stats,
                commands: self.commands,
            }),
            Err(source) => {
                self.count_unsent();
                Err(RobotError::Transport {
                    source,
                    stats: Box::new(self.stats),
                })
            }
        }
    }

    fn run_inner(&mut self) -> std::io::Result<()> {
        let wall_start = Instant::now();
        let period = self.source.imu_period_us();
        let hb_period = self.cfg.heartbeat_period_ms.max(1) * 1000;
        let mut next_heartbeat = Timestamp(hb_period);
        let mut now = Timestamp::ZERO;

        while let Some(tick) = self.source.next_tick() {
            now = tick.odometry.t;
            self.now = now;
            self.pace(wall_start, now);
            self.push_odometry(&tick.odometry, period)?;
            if !tick.rtt.is_empty() {
                self.stats.rtt_epochs += 1;
            }
            for r in &tick.rtt {
                self.enqueue(
                    r.t,
                    Payload::Rtt {
                        ap_id: r.ap_id,
                        range_mm: range_to_mm(r.range),
                    },
                )?;
            }
            if now >= next_heartbeat {
                self.enqueue(now, Payload::Heartbeat)?;
                next_heartbeat = now + hb_period;
            }
            self.receive(now)?;
        }

        self.flush_batch()?;
        self.enqueue(now, Payload::Heartbeat)?;
        let deadline = now + self.cfg.drain_limit_ms * 1000;
        while !self.buffer.is_empty() && now < deadline {
            now = now + period;
            self.now = now;
            self.pace(wall_start, now);
            self.transmit(now)?;
            self.receive(now)?;
        }
        self.count_unsent();
        self.stats.end_time = now;
        self.link.finish()?;
        Ok(())
    }

    fn pace(&self, wall_start: Instant, sim: Timestamp) {
        let default = self.source.is_closed_loop().then_some(1.0);
        if let Some(s) = self.cfg.speedup.or(default).filter(|s| *s > 0.0) {
            let target = wall_start + Duration::from_secs_f64(sim.as_secs_f64() / s);
            let now = Instant::now();
            if target > now {
                thread::sleep(target - now);
            }
        }
    }

    fn push_odometry(&mut self, od: &OdometrySample, period: u64) -> std::io::Result<()> {
        if self.batch.is_empty() {
            self.batch_start = Timestamp(od.t.0.saturating_sub(period));
        }
        self.batch
            .push(self.quantizer.quantize(period as u32, od.dd, od.dtheta));
        self.stats.imu_ticks_generated += 1;
        if self.batch.len() >= self.cfg.batch_size.max(1) {
            self.flush_batch()?;
        }
        Ok(())
    }

    fn flush_batch(&mut self) -> std::io::Result<()> {
        if self.batch.is_empty() {
            return Ok(());
        }
        let ticks = std::mem::take(&mut self.batch);
        self.enqueue(self.batch_start, Payload::ImuBatch(ticks))
    }

    /// Queues a new frame stamped `t`, then tries the link.
    fn enqueue(&mut self, t: Timestamp, payload: Payload) -> std::io::Result<()> {
        let ticks = match &payload {
            Payload::ImuBatch(v) => v.len(),
            _ => 0,
        };
        let frame = Frame {
            seq: self.next_seq,
            timestamp: t,
            payload,
        };
        self.next_seq = self.next_seq.wrapping_add(1);
        let kind = frame.kind();
        // Batches are bounded by batch_size, so encoding cannot fail.
        let bytes = encode_frame(&frame).expect("robot frames fit the wire format");
        self.stats.generated.bump(kind);
        match self.buffer.push(QueuedFrame { kind, ticks, bytes }) {
            PushOutcome::Queued => {}
            PushOutcome::QueuedEvicting(old) | PushOutcome::Dropped(old) => self.count_drop(&old),
        }
        self.transmit(self.now)
    }

    fn count_drop(&mut self, q: &QueuedFrame) {
        self.stats.dropped.bump(q.kind);
        self.stats.imu_ticks_dropped += q.ticks as u64;
    }

    fn count_unsent(&mut self) {
        for q in self.buffer.iter() {
            self.stats.unsent.bump(q.kind);
        }
    }

    fn transmit(&mut self, now: Timestamp) -> std::io::Result<()> {
        while let Some(front) = self.buffer.front() {
            if !self.link.try_send(now, &front.bytes)? {
                break;
            }
            let q = self.buffer.pop_front().expect("front exists");
            self.stats.sent.bump(q.kind);
            self.stats.last_seq = Some(u32::from_le_bytes([q.bytes[4], q.bytes[5], q.bytes[6], q.bytes[7]]));
        }
        Ok(())
    }

    fn receive(&mut self, now: Timestamp) -> std::io::Result<()> {
        self.rx_bytes.clear();
        self.link.poll_recv(&mut self.rx_bytes)?;
        if self.rx_bytes.is_empty() {
            return Ok(());
        }
        self.assembler.push(&self.rx_bytes);
        while let Some(r) = self.assembler.next_frame() {
            match r {
                Ok(Frame {
                    payload: Payload::Command(cmd),
                    ..
                }) => {
                    self.stats.commands_received += 1;
                    apply_command(&mut self.commands, &mut self.source, now, cmd);
                }
                Ok(_) => {}
                Err(_) => self.stats.bad_frames_received += 1,
            }
        }
        Ok(())
    }
}

/// Runs a session, wrapping the link in the configured stall window.
pub fn run_robot<S: SensorSource, L: Link>(cfg: RobotConfig, source: S, link: L) -> Result<SessionReport, RobotError> {
    match cfg.stall {
        Some(w) => {
            let from = Timestamp(w.start_ms * 1000);
            let link = StalledLink::new(link, from, from + w.duration_ms * 1000);
            RobotSession::new(cfg, source, link).run()
        }
        None => RobotSession::new(cfg, source, link).run(),
    }
}
