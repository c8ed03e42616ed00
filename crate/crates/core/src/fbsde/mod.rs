//! Discrete-time oracle for the optimal-discretion FBSDE on scenario trees.

mod tree;

pub use tree::{
    bellman_policy, contraction_margin, expected_criterion, node_bracket, node_fixed_point, picard_iterate_tree, solve_tree_backward,
    IterationRecord, ScenarioTree, TreeSolution,
};
