use walkbook::criterion::stationarity_residual_tree;
use walkbook::fbsde::{contraction_margin, picard_iterate_tree, solve_tree_backward, ScenarioTree};
use walkbook::mpp::MarkDistribution;
use walkbook::pide::Penalties;

fn pen(alpha: f64, gamma: f64) -> Penalties {
    Penalties::new(alpha, gamma).unwrap()
}

#[test]
fn picard_single_step_example() {
    let tree = ScenarioTree::new(1, 1.0, 1.0, MarkDistribution::uniform(-1.0, 1.0).unwrap()).unwrap();
    let sol = picard_iterate_tree(&tree, pen(0.0, 0.5), 1e-14, 200).unwrap();
    assert!((sol.root() - 2.0 / 3.0).abs() < 1e-10);
}

#[test]
fn margin_examples() {
    let k = MarkDistribution::normal(0.2, 1.0).unwrap().lipschitz_constant().unwrap();
    assert!((contraction_margin(k, 1.0, 100.0, 0.1) - 39.89).abs() < 5e-3);
    assert!((contraction_margin(0.1, 1.0, 5.0, 0.25) - 0.5).abs() < 1e-15);
    assert!((contraction_margin(0.05, 2.0, 3.0, 0.0) - 0.3).abs() < 1e-15);
}

#[test]
fn solved_tree_is_a_fixed_point_and_a_martingale() {
    let marks = MarkDistribution::normal(0.2, 1.0).unwrap();
    let tree = ScenarioTree::poisson(100.0, 1.0, 500, marks).unwrap();
    let p = pen(0.0, 0.1);
    let sol = solve_tree_backward(&tree, p).unwrap();
    assert!(stationarity_residual_tree(&sol, p) < 1e-10);
    let q = tree.arrival_prob();
    for j in 0..tree.steps() {
        for d in 0..=j {
            let miss = q * (1.0 - marks.cdf(sol.h[j][d]));
            let next = &sol.value[j + 1];
            let expect = (1.0 - miss) * next[d] + miss * next[d + 1];
            assert!((sol.value[j][d] - expect).abs() < 1e-12);
        }
    }
    assert!(sol.value[tree.steps()].iter().enumerate().all(|(d, &v)| v == d as f64));
}

#[test]
fn oracles_agree_on_uniform_marks() {
    let marks = MarkDistribution::uniform(-1.0, 1.0).unwrap();
    for &(steps, p, gamma) in &[(10, 0.3, 0.2), (60, 0.1, 0.05), (200, 0.05, 0.5)] {
        let tree = ScenarioTree::new(steps, p, 1.0, marks).unwrap();
        let a = solve_tree_backward(&tree, pen(0.1, gamma)).unwrap();
        let b = picard_iterate_tree(&tree, pen(0.1, gamma), 1e-13, 1000).unwrap();
        let gap = a.h.iter().flatten().zip(b.h.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-10, "steps {steps}: gap {gap}");
        assert!(stationarity_residual_tree(&b, pen(0.1, gamma)) < 1e-10);
    }
}

#[test]
fn perturbed_node_is_detected() {
    let tree = ScenarioTree::poisson(20.0, 1.0, 50, MarkDistribution::normal(0.0, 1.0).unwrap()).unwrap();
    let p = pen(0.2, 0.1);
    let mut sol = solve_tree_backward(&tree, p).unwrap();
    sol.h[10][3] += 0.1;
    assert!((stationarity_residual_tree(&sol, p) - 0.1).abs() < 1e-10);

    let flat = solve_tree_backward(&tree, pen(0.2, 0.0)).unwrap();
    assert_eq!(stationarity_residual_tree(&flat, pen(0.2, 0.0)), 0.0);
}
