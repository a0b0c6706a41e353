use std::time::Instant;

use edgebot_core::edge::*;
use edgebot_core::eval::{error_series, rmse, run_pdr, PipelineConfig};
use edgebot_core::geom::Timestamp;
use edgebot_core::robot::{RobotConfig, StallWindow};
use edgebot_core::sim::{build_scenario, simulate, ScenarioConfig};
use edgebot_core::system::{run_loopback, run_sockets, Drive};
use edgebot_core::wire::{Frame, Payload};

fn epochs(end: Timestamp) -> usize {
    (end.0 / 200_000) as usize
}

#[test]
fn loopback_exp1_tracks_better_than_dead_reckoning() {
    let s = build_scenario(ScenarioConfig::exp1().with_seed(1)).unwrap();
    let (gt, streams) = simulate(&s);
    let edge = EdgeConfig::for_scenario(&s, EdgeTuning::default(), PipelineConfig::default());
    let t0 = Instant::now();
    let r = run_loopback(&s, Drive::OpenLoop, RobotConfig::default(), edge, |_| {}).unwrap();
    eprintln!(
        "loopback exp1: {:.2}s\n{}",
        t0.elapsed().as_secs_f64(),
        r.edge.summary()
    );

    assert_eq!(r.robot.stats.dropped.total(), 0);
    assert_eq!(r.edge.stats.seq_gaps, 0);
    assert_eq!(r.edge.stats.frames, r.robot.stats.sent_total());
    assert_eq!(r.edge.stats.keyframes as usize, epochs(gt.end().unwrap()));
    assert_eq!(r.edge.trajectory.len(), epochs(gt.end().unwrap()) + 1);

    let est = rmse(&error_series(&r.edge.trajectory, &gt).unwrap().e).unwrap();
    let pdr = rmse(&error_series(&run_pdr(&s, &gt, &streams), &gt).unwrap().e).unwrap();
    eprintln!("edge rmse {est:.3} pdr {pdr:.3}");
    assert!(est < 0.5 * pdr);
}

#[test]
fn sockets_deliver_the_same_frames() {
    // Long enough that the edge is still sending commands after the robot
    // has finished streaming.
    let s = build_scenario(ScenarioConfig::exp1().with_seed(4)).unwrap();
    let edge = EdgeConfig::for_scenario(&s, EdgeTuning::default(), PipelineConfig::default());
    let a = run_loopback(&s, Drive::OpenLoop, RobotConfig::default(), edge.clone(), |_| {}).unwrap();
    let b = run_sockets(&s, Drive::OpenLoop, RobotConfig::default(), edge, |_| {}).unwrap();
    assert_eq!(a.edge.trajectory, b.edge.trajectory);
    assert_eq!(a.edge.stats.frames, b.edge.stats.frames);
    assert_eq!(b.edge.stats.frames, b.robot.stats.sent_total());
    assert_eq!(b.edge.stats.bad_frames, 0);
}

#[test]
fn imu_loss_keeps_one_keyframe_per_epoch() {
    let mut cfg = ScenarioConfig::exp1().with_seed(2);
    cfg.waypoints.truncate(6);
    let s = build_scenario(cfg).unwrap();
    let (gt, _) = simulate(&s);
    let robot = RobotConfig {
        tx_capacity: 8,
        stall: Some(StallWindow {
            start_ms: 3000,
            duration_ms: 4000,
        }),
        ..RobotConfig::default()
    };
    let edge = EdgeConfig::for_scenario(&s, EdgeTuning::default(), PipelineConfig::default());
    let r = run_loopback(&s, Drive::OpenLoop, robot, edge, |_| {}).unwrap();
    assert!(r.robot.stats.dropped_imu() > 0);
    assert_eq!(r.edge.stats.seq_gaps, r.robot.stats.dropped.total());
    assert_eq!(r.edge.stats.keyframes as usize, epochs(gt.end().unwrap()));
}

#[test]
fn duplicates_are_counted_and_ignored() {
    let s = build_scenario(ScenarioConfig::exp1()).unwrap();
    let cfg = EdgeConfig::for_scenario(&s, EdgeTuning::default(), PipelineConfig::default());
    let frames: Vec<Frame> = (0..3)
        .map(|k| Frame {
            seq: k,
            timestamp: Timestamp(k as u64 * 400_000),
            payload: Payload::Heartbeat,
        })
        .chain(std::iter::once(Frame::heartbeat(1, Timestamp(1_500_000))))
        .collect();
    let mut bytes = Vec::new();
    for f in &frames {
        edgebot_core::wire::write_frame(&mut bytes, f).unwrap();
    }
    let r = run_edge(cfg, &bytes[..], std::io::sink(), |_| {}).unwrap();
    assert_eq!(r.stats.frames, 3);
    assert_eq!(r.stats.duplicates, 1);
    assert_eq!(r.stats.keyframes, 4);
}

#[test]
fn closed_loop_reaches_the_first_waypoint() {
    let mut cfg = ScenarioConfig::exp1().noise_free();
    cfg.waypoints.truncate(3);
    let s = build_scenario(cfg).unwrap();
    let edge = EdgeConfig::for_scenario(&s, EdgeTuning::default(), PipelineConfig::default());
    let robot = RobotConfig {
        speedup: Some(50.0),
        ..RobotConfig::default()
    };
    let r = run_loopback(
        &s,
        Drive::ClosedLoop {
            duration_us: 20_000_000,
        },
        robot,
        edge,
        |_| {},
    )
    .unwrap();
    assert!(r.robot.stats.commands_received > 10);
    assert!(r.edge.stats.waypoints_reached >= 1, "{}", r.edge.summary());
}
