use super::{
    detect_new_loop_closures, optimize_in_place, EstimatorError, LoopConfig, LoopEdge, PoseGraph, SolveStats,
    SolverConfig,
};

/// Outcome of one [`IncrementalSolver::solve`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub stats: SolveStats,
    /// Closures added by this call, detected plus injected.
    pub new_loops: usize,
    /// The solver hit its iteration cap without converging; the poses hold
    /// its best iterate.
    pub diverged: bool,
}

/// Loop detection and optimization over a graph that only ever grows.
///
/// Each call searches for closures ending at keyframes added since the
/// previous call, adds any externally supplied closures whose endpoints now
/// exist, and re-optimizes the whole graph.
#[derive(Debug, Clone)]
pub struct IncrementalSolver {
    loops: LoopConfig,
    solver: SolverConfig,
    detected_from: usize,
    injected: Vec<(usize, usize)>,
    next_injected: usize,
}

impl IncrementalSolver {
    pub fn new(loops: LoopConfig, solver: SolverConfig) -> Self {
        IncrementalSolver {
            loops,
            solver,
            detected_from: 0,
            injected: Vec::new(),
            next_injected: 0,
        }
    }

    /// Extra closures `(i, j)`, added once keyframe `j` exists.
    pub fn with_injected(mut self, mut injected: Vec<(usize, usize)>) -> Self {
        injected.sort_by_key(|&(i, j)| (i.max(j), i.min(j)));
        self.injected = injected;
        self
    }

    pub fn solver_config(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn solve(&mut self, graph: &mut PoseGraph) -> Result<SolveOutcome, EstimatorError> {
        let len = graph.len();
        let before = graph.loop_edges.len();
        let fresh = detect_new_loop_closures(
            &graph.nodes,
            &graph.loop_edges,
            self.detected_from,
            &self.loops,
            self.solver.phi,
        );
        graph.loop_edges.extend(fresh);
        self.detected_from = len;
        while let Some(&(i, j)) = self.injected.get(self.next_injected) {
            if i.max(j) >= len {
                break;
            }
            graph
                .loop_edges
                .push(LoopEdge::new(i, j, self.loops.sigma_lc, self.solver.phi));
            self.next_injected += 1;
        }
        let new_loops = graph.loop_edges.len() - before;
        match optimize_in_place(graph, &self.solver) {
            Ok(stats) => Ok(SolveOutcome {
                stats,
                new_loops,
                diverged: false,
            }),
            Err(EstimatorError::SolverDiverged(stats)) => Ok(SolveOutcome {
                stats: *stats,
                new_loops,
                diverged: true,
            }),
            Err(e) => Err(e),
        }
    }
}
