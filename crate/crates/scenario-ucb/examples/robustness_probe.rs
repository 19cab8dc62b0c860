use scenario_ucb::validate::{robustness_suite, RobustnessConfig};

fn main() {
    // control: single-point grid, the max-min point cannot be overfit
    for (label, grid_size, n_outer) in [("grid=1", 1usize, 500usize), ("grid=3", 3, 500), ("grid=11", 11, 500)] {
        let cfg = RobustnessConfig { grid_size, n_outer, n_inner: 400, ..Default::default() };
        let r = robustness_suite(&cfg).unwrap();
        println!("{label}: {}", r.summary_line());
    }
}
