use crate::geom::Timestamp;
use crate::sim::OdometrySample;

pub const MAGIC: u16 = 0xED6E;
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 18;
pub const CRC_LEN: usize = 4;
/// Smallest possible frame: a header, no payload, and the CRC.
pub const MIN_FRAME_LEN: usize = HEADER_LEN + CRC_LEN;
pub const MAX_PAYLOAD_LEN: usize = u16::MAX as usize;
/// Encoded size of one IMU tick inside a batch.
pub const IMU_TICK_LEN: usize = 12;

/// Metres per unit of `dd_mm`, `range_mm` and `v_mmps`.
pub const MM: f64 = 1e-3;
/// Radians per unit of `dtheta_urad` and `omega_urad_ps`.
pub const URAD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum FrameKind {
    ImuBatch = 1,
    Rtt = 2,
    Command = 3,
    Heartbeat = 4,
}

impl FrameKind {
    pub const ALL: [FrameKind; 4] = [
        FrameKind::ImuBatch,
        FrameKind::Rtt,
        FrameKind::Command,
        FrameKind::Heartbeat,
    ];

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| *k as u8 == code)
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// One odometry increment inside an [`Payload::ImuBatch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImuTick {
    /// Duration the increment covers.
    pub dt_us: u32,
    pub dd_mm: i32,
    pub dtheta_urad: i32,
}

impl ImuTick {
    pub fn dd(&self) -> f64 {
        self.dd_mm as f64 * MM
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta_urad as f64 * URAD
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Command {
    pub v_mmps: i32,
    pub omega_urad_ps: i32,
    pub duration_ms: u16,
}

impl Command {
    /// Quantizes a velocity command, rounding to the nearest unit.
    pub fn from_velocity(v: f64, omega: f64, duration_ms: u16) -> Self {
        Command {
            v_mmps: to_fixed_i32(v, MM),
            omega_urad_ps: to_fixed_i32(omega, URAD),
            duration_ms,
        }
    }

    /// m/s
    pub fn v(&self) -> f64 {
        self.v_mmps as f64 * MM
    }

    /// rad/s
    pub fn omega(&self) -> f64 {
        self.omega_urad_ps as f64 * URAD
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    ImuBatch(Vec<ImuTick>),
    Rtt { ap_id: u8, range_mm: u32 },
    Command(Command),
    Heartbeat,
}

impl Payload {
    pub fn kind(&self) -> FrameKind {
        match self {
            Payload::ImuBatch(_) => FrameKind::ImuBatch,
            Payload::Rtt { .. } => FrameKind::Rtt,
            Payload::Command(_) => FrameKind::Command,
            Payload::Heartbeat => FrameKind::Heartbeat,
        }
    }

    /// Encoded payload size in bytes.
    pub fn encoded_len(&self) -> usize {
        match self {
            Payload::ImuBatch(ticks) => 2 + IMU_TICK_LEN * ticks.len(),
            Payload::Rtt { .. } => 5,
            Payload::Command(_) => 10,
            Payload::Heartbeat => 0,
        }
    }
}

/// A decoded frame. For an IMU batch, `timestamp` is the start of the
/// interval the batch covers; tick `k` ends at `timestamp + Σ dt_us[..=k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub seq: u32,
    pub timestamp: Timestamp,
    pub payload: Payload,
}

impl Frame {
    pub fn heartbeat(seq: u32, timestamp: Timestamp) -> Self {
        Frame {
            seq,
            timestamp,
            payload: Payload::Heartbeat,
        }
    }

    pub fn kind(&self) -> FrameKind {
        self.payload.kind()
    }

    pub fn encoded_len(&self) -> usize {
        MIN_FRAME_LEN + self.payload.encoded_len()
    }

    /// Odometry samples of an IMU batch, each stamped with the end of its
    /// tick. Empty for other kinds.
    pub fn odometry(&self) -> Vec<OdometrySample> {
        let Payload::ImuBatch(ticks) = &self.payload else {
            return Vec::new();
        };
        let mut t = self.timestamp;
        ticks
            .iter()
            .map(|k| {
                t = t + k.dt_us as u64;
                OdometrySample {
                    t,
                    dd: k.dd(),
                    dtheta: k.dtheta(),
                }
            })
            .collect()
    }
}

fn to_fixed_i32(real: f64, quantum: f64) -> i32 {
    (real / quantum).round().clamp(i32::MIN as f64, i32::MAX as f64) as i32
}

pub fn metres_to_mm(m: f64) -> i32 {
    to_fixed_i32(m, MM)
}

pub fn radians_to_urad(r: f64) -> i32 {
    to_fixed_i32(r, URAD)
}

/// Ranges are non-negative; negative input saturates at 0.
pub fn range_to_mm(m: f64) -> u32 {
    (m / MM).round().clamp(0.0, u32::MAX as f64) as u32
}

pub fn mm_to_metres(mm: i64) -> f64 {
    mm as f64 * MM
}

/// Quantizer that carries each rounding residual into the next value, so
/// the running sum of the decoded stream never drifts more than half a
/// quantum from the running sum of the input.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidualQuantizer {
    carry: f64,
}

impl ResidualQuantizer {
    pub fn push(&mut self, real: f64, quantum: f64) -> i32 {
        let want = real + self.carry;
        let q = to_fixed_i32(want, quantum);
        self.carry = want - q as f64 * quantum;
        q
    }
}

/// Quantizes odometry ticks for the wire with residual carry on both axes.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TickQuantizer {
    dd: ResidualQuantizer,
    dtheta: ResidualQuantizer,
}

impl TickQuantizer {
    pub fn quantize(&mut self, dt_us: u32, dd: f64, dtheta: f64) -> ImuTick {
        ImuTick {
            dt_us,
            dd_mm: self.dd.push(dd, MM),
            dtheta_urad: self.dtheta.push(dtheta, URAD),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kind_codes() {
        for k in FrameKind::ALL {
            assert_eq!(FrameKind::from_code(k.code()), Some(k));
        }
        assert_eq!(FrameKind::from_code(0), None);
        assert_eq!(FrameKind::from_code(5), None);
    }

    #[test]
    fn batch_ticks_are_stamped_at_their_end() {
        let f = Frame {
            seq: 1,
            timestamp: Timestamp(1_000),
            payload: Payload::ImuBatch(vec![
                ImuTick {
                    dt_us: 10,
                    dd_mm: 5,
                    dtheta_urad: -2,
                },
                ImuTick {
                    dt_us: 20,
                    dd_mm: 6,
                    dtheta_urad: 3,
                },
            ]),
        };
        let o = f.odometry();
        assert_eq!(o.iter().map(|s| s.t.0).collect::<Vec<_>>(), vec![1_010, 1_030]);
        assert!((o[1].dd - 0.006).abs() < 1e-15);
        assert!((o[0].dtheta + 2e-6).abs() < 1e-18);
    }

    #[test]
    fn carried_residual_keeps_the_sum() {
        let mut q = ResidualQuantizer::default();
        let total: i64 = (0..10_000).map(|_| q.push(0.0104, MM) as i64).sum();
        // 10_000 × 10.4 mm = 104 m exactly; plain rounding would give 100 m.
        assert_eq!(total, 104_000);
    }

    proptest! {
        #[test]
        fn fixed_point_within_half_quantum(m in -1e3f64..1e3, r in -10.0f64..10.0, range in 0.0f64..1e3) {
            prop_assert!((mm_to_metres(metres_to_mm(m) as i64) - m).abs() <= 0.5 * MM + 1e-12);
            prop_assert!((radians_to_urad(r) as f64 * URAD - r).abs() <= 0.5 * URAD + 1e-15);
            prop_assert!((range_to_mm(range) as f64 * MM - range).abs() <= 0.5 * MM + 1e-12);
            let c = Command::from_velocity(m / 1e3, r, 100);
            prop_assert!((c.v() - m / 1e3).abs() <= 0.5 * MM + 1e-15);
            prop_assert!((c.omega() - r).abs() <= 0.5 * URAD + 1e-15);
        }

        #[test]
        fn residual_sum_stays_within_half_quantum(v in proptest::collection::vec(-0.05f64..0.05, 1..500)) {
            let mut q = ResidualQuantizer::default();
            let mut sum_q = 0i64;
            let mut sum = 0.0;
            for x in v {
                sum_q += q.push(x, MM) as i64;
                sum += x;
                prop_assert!((sum_q as f64 * MM - sum).abs() <= 0.5 * MM + 1e-12);
            }
        }
    }
}
