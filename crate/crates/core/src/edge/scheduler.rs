use serde::{Deserialize, Serialize};

use crate::geom::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub keyframe_on_rtt_epoch: bool,
    /// Keyframes between solver runs, at least 1.
    pub solve_every_k: usize,
    /// Zero disables planning.
    pub command_period_ms: u64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            keyframe_on_rtt_epoch: true,
            solve_every_k: 5,
            command_period_ms: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    /// Close the RTT epoch at this time into a keyframe.
    MakeKeyframe(Timestamp),
    RunSolver,
    PlanCommand(Timestamp),
}

/// Turns the edge clock into keyframe, solver and planning actions.
#[derive(Debug, Clone)]
pub struct Scheduler {
    cfg: SchedulerConfig,
    epoch_us: u64,
    next_epoch: Timestamp,
    next_command: Timestamp,
    since_solve: usize,
    keyframes: usize,
}

impl Scheduler {
    pub fn new(cfg: SchedulerConfig, rtt_period_us: u64) -> Self {
        Scheduler {
            cfg,
            epoch_us: rtt_period_us.max(1),
            next_epoch: Timestamp(rtt_period_us.max(1)),
            next_command: Timestamp(cfg.command_period_ms * 1000),
            since_solve: 0,
            keyframes: 0,
        }
    }

    pub fn keyframes(&self) -> usize {
        self.keyframes
    }

    /// Keyframes made since the last solver action.
    pub fn unsolved(&self) -> usize {
        self.since_solve
    }

    /// Latest epoch boundary already handed out.
    pub fn last_epoch(&self) -> Timestamp {
        Timestamp(self.next_epoch.0 - self.epoch_us)
    }

    /// Every boundary at or before `now`, in time order. A keyframe and its
    /// solver run precede a command due at the same instant.
    pub fn tick(&mut self, now: Timestamp) -> Vec<Action> {
        let mut out = Vec::new();
        loop {
            let epoch = self.cfg.keyframe_on_rtt_epoch.then_some(self.next_epoch);
            let command = (self.cfg.command_period_ms > 0).then_some(self.next_command);
            match (epoch.filter(|&e| e <= now), command.filter(|&c| c <= now)) {
                (Some(e), c) if c.is_none_or(|c| e <= c) => {
                    out.push(Action::MakeKeyframe(e));
                    self.next_epoch = e + self.epoch_us;
                    self.keyframes += 1;
                    self.since_solve += 1;
                    if self.since_solve >= self.cfg.solve_every_k.max(1) {
                        out.push(Action::RunSolver);
                        self.since_solve = 0;
                    }
                }
                (_, Some(c)) => {
                    out.push(Action::PlanCommand(c));
                    self.next_command = c + self.cfg.command_period_ms * 1000;
                }
                (None, None) => break,
                (Some(_), None) => unreachable!("handled by the first arm"),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(actions: &[Action]) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for a in actions {
            match a {
                Action::MakeKeyframe(_) => c.0 += 1,
                Action::RunSolver => c.1 += 1,
                Action::PlanCommand(_) => c.2 += 1,
            }
        }
        c
    }

    #[test]
    fn one_second_of_epochs() {
        let cfg = SchedulerConfig {
            command_period_ms: 0,
            ..SchedulerConfig::default()
        };
        let mut s = Scheduler::new(cfg, 200_000);
        assert_eq!(count(&s.tick(Timestamp(1_000_000))), (5, 1, 0));
        assert_eq!(s.last_epoch(), Timestamp(1_000_000));
    }

    #[test]
    fn keyframes_can_be_disabled() {
        let cfg = SchedulerConfig {
            keyframe_on_rtt_epoch: false,
            ..SchedulerConfig::default()
        };
        let mut s = Scheduler::new(cfg, 200_000);
        assert_eq!(count(&s.tick(Timestamp(2_000_000))), (0, 0, 4));
    }

    #[test]
    fn commands_every_half_second() {
        let mut s = Scheduler::new(SchedulerConfig::default(), 200_000);
        let mut all = Vec::new();
        for ms in (0..=2000).step_by(10) {
            all.extend(s.tick(Timestamp(ms * 1000)));
        }
        assert_eq!(count(&all), (10, 2, 4));
        let at_1s: Vec<Action> = all
            .iter()
            .copied()
            .filter(|a| matches!(a, Action::MakeKeyframe(t) | Action::PlanCommand(t) if t.0 == 1_000_000))
            .collect();
        assert_eq!(
            at_1s,
            vec![
                Action::MakeKeyframe(Timestamp(1_000_000)),
                Action::PlanCommand(Timestamp(1_000_000))
            ]
        );
    }

    #[test]
    fn ticks_are_idempotent() {
        let mut s = Scheduler::new(SchedulerConfig::default(), 200_000);
        assert_eq!(s.tick(Timestamp(199_999)), vec![]);
        assert_eq!(
            s.tick(Timestamp(200_000)),
            vec![Action::MakeKeyframe(Timestamp(200_000))]
        );
        assert_eq!(s.tick(Timestamp(200_000)), vec![]);
    }
}
