//! Shared fixtures for the benchmarks in `benches/`.

use edgebot_core::estimator::PoseGraph;
use edgebot_core::eval::{run_graph, run_pdr, PipelineConfig};
use edgebot_core::sim::{build_scenario, simulate, GroundTruthTrajectory, Scenario, ScenarioConfig, SensorStreams};

pub struct Fixture {
    pub scenario: Scenario,
    pub gt: GroundTruthTrajectory,
    pub streams: SensorStreams,
}

/// The exp1 preset at `seed`, simulated.
pub fn exp1(seed: u64) -> Fixture {
    let scenario = build_scenario(ScenarioConfig::exp1().with_seed(seed)).expect("exp1 preset is valid");
    let (gt, streams) = simulate(&scenario);
    Fixture { scenario, gt, streams }
}

/// The full exp1 graph with every detected closure, reset to dead-reckoning
/// poses so that a solve starts cold.
pub fn cold_graph(f: &Fixture) -> PoseGraph {
    let mut graph = run_graph(&f.scenario, &f.gt, &f.streams, &PipelineConfig::default(), true, &[])
        .expect("exp1 pipeline runs")
        .graph;
    let pdr: Vec<_> = run_pdr(&f.scenario, &f.gt, &f.streams)
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    graph.set_poses(&pdr[..graph.nodes.len()]);
    graph
}
