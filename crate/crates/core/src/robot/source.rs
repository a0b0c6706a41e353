use crate::geom::Timestamp;
use crate::sim::{ImuSynth, OdometrySample, RttSample, RttSynth, Scenario, SensorStreams, UnicycleWorld};
use crate::wire::Command;

/// Everything the robot senses during one IMU tick.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTick {
    pub odometry: OdometrySample,
    /// Ranges of the RTT epoch ending at this tick; empty between epochs.
    pub rtt: Vec<RttSample>,
}

/// Tick-by-tick sensor data for a robot session.
pub trait SensorSource {
    fn imu_period_us(&self) -> u64;

    fn next_tick(&mut self) -> Option<SensorTick>;

    /// Called for every received command. Scripted sources ignore it.
    fn command(&mut self, _now: Timestamp, _cmd: &Command) {}

    fn is_closed_loop(&self) -> bool {
        false
    }
}

/// Replays pre-generated streams along the scripted ground truth.
#[derive(Debug, Clone)]
pub struct OpenLoopSource {
    period_us: u64,
    streams: SensorStreams,
    next_odo: usize,
    next_rtt: usize,
}

impl OpenLoopSource {
    pub fn new(period_us: u64, streams: SensorStreams) -> Self {
        OpenLoopSource {
            period_us,
            streams,
            next_odo: 0,
            next_rtt: 0,
        }
    }
}

impl SensorSource for OpenLoopSource {
    fn imu_period_us(&self) -> u64 {
        self.period_us
    }

    fn next_tick(&mut self) -> Option<SensorTick> {
        let odometry = *self.streams.odometry.get(self.next_odo)?;
        self.next_odo += 1;
        let start = self.next_rtt;
        let rtt = &self.streams.rtt;
        while self.next_rtt < rtt.len() && rtt[self.next_rtt].t <= odometry.t {
            self.next_rtt += 1;
        }
        Some(SensorTick {
            odometry,
            rtt: rtt[start..self.next_rtt].to_vec(),
        })
    }
}

/// Unicycle driven by received commands, sensed through the scenario's
/// noise models.
#[derive(Debug, Clone)]
pub struct ClosedLoopSource {
    world: UnicycleWorld,
    imu: ImuSynth,
    rtt: RttSynth,
    period_us: u64,
    rtt_period_us: u64,
    end: Timestamp,
}

impl ClosedLoopSource {
    /// Runs for `duration_us` of simulated time from the scenario's start.
    pub fn new(scenario: &Scenario, start: crate::geom::Pose2, duration_us: u64) -> Self {
        let cfg = scenario.config();
        ClosedLoopSource {
            world: UnicycleWorld::new(start, scenario.imu_period_us()),
            imu: ImuSynth::new(cfg.imu_noise, cfg.seed, scenario.imu_period_us()),
            rtt: RttSynth::new(cfg.rtt_noise, cfg.seed, scenario.aps().to_vec()),
            period_us: scenario.imu_period_us(),
            rtt_period_us: scenario.rtt_period_us(),
            end: Timestamp(duration_us),
        }
    }

    pub fn world(&self) -> &UnicycleWorld {
        &self.world
    }
}

impl SensorSource for ClosedLoopSource {
    fn imu_period_us(&self) -> u64 {
        self.period_us
    }

    fn next_tick(&mut self) -> Option<SensorTick> {
        if self.world.now() >= self.end {
            return None;
        }
        let (t, dd, dtheta) = self.world.step();
        let odometry = self.imu.corrupt(t, dd, dtheta);
        let mut rtt = Vec::new();
        if t.0 % self.rtt_period_us == 0 {
            let p = self.world.pose();
            self.rtt.epoch(t, p.x, p.y, &mut rtt);
        }
        Some(SensorTick { odometry, rtt })
    }

    fn command(&mut self, _now: Timestamp, cmd: &Command) {
        self.world.set_velocity(cmd.v(), cmd.omega(), cmd.duration_ms);
    }

    fn is_closed_loop(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{build_scenario, simulate, ScenarioConfig};

    #[test]
    fn open_loop_groups_ranges_with_their_tick() {
        let s = build_scenario(ScenarioConfig::exp1()).unwrap();
        let (_, streams) = simulate(&s);
        let total_rtt = streams.rtt.len();
        let mut src = OpenLoopSource::new(s.imu_period_us(), streams);
        let mut seen = 0;
        let mut ticks = 0;
        while let Some(t) = src.next_tick() {
            ticks += 1;
            assert!(t.rtt.iter().all(|r| r.t == t.odometry.t));
            if !t.rtt.is_empty() {
                assert_eq!(t.odometry.t.0 % 200_000, 0);
            }
            seen += t.rtt.len();
        }
        assert_eq!(seen, total_rtt);
        assert!(ticks > 30_000);
    }

    #[test]
    fn closed_loop_follows_commands() {
        let mut cfg = ScenarioConfig::exp1().noise_free();
        cfg.rtt_noise.dropout_prob = 0.0;
        let s = build_scenario(cfg).unwrap();
        let start = crate::geom::Pose2::new(2.0, 2.0, 0.0);
        let mut src = ClosedLoopSource::new(&s, start, 2_000_000);
        src.command(Timestamp::ZERO, &Command::from_velocity(1.0, 0.0, 500));
        let mut n = 0;
        while let Some(t) = src.next_tick() {
            n += 1;
            if t.odometry.t.0 % 200_000 == 0 {
                assert_eq!(t.rtt.len(), 4);
            }
        }
        assert_eq!(n, 200);
        let p = src.world().pose();
        assert!((p.x - 2.5).abs() < 1e-6 && (p.y - 2.0).abs() < 1e-12);
    }
}
