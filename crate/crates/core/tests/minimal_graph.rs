use proptest::prelude::*;
use wedgeflow_core::analysis::vertical_rescale;
use wedgeflow_core::families::{wedge_graph, Family};
use wedgeflow_core::geometry::{closeness, PointCloud, Sample};
use wedgeflow_core::minimal_graph::*;
use wedgeflow_core::signorini::{solve_signorini, SignoriniProblem};
use wedgeflow_core::{Field, GridSpec, Wedge};

#[test]
fn wedge_traces_are_reproduced() {
    let g = GridSpec::new(3, 1.0 / 32.0).unwrap();
    let h = g.spacing();
    for (gamma, theta) in [(0.0, 0.2), (0.2, 0.3), (-0.3, 0.1)] {
        let u = solve_min_graph(&wedge_instance(g, gamma, theta, 0.0).unwrap()).unwrap();
        let w = Wedge::new(gamma, theta).unwrap();
        let exact = Field::from_fn(g, |x| wedge_graph(&w, x[1]));
        assert!(u.max_abs_diff(&exact, None).unwrap() <= 5.0 * h);
        let mut cloud = PointCloud::new(3);
        for idx in 0..g.len() {
            let x = g.coords(idx);
            cloud.push(&[x[0], x[1], u.get(idx)]).unwrap();
        }
        let eps = closeness(Sample::Boundary(&cloud), &w, 1.0).unwrap().epsilon;
        assert!(eps <= 5.0 * h, "{eps}");
        for idx in g.slice_unknowns().iter() {
            assert!(u.get(idx).abs() <= h * h);
        }
    }
}

#[test]
fn rescaled_graph_approaches_signorini() {
    let g = GridSpec::new(3, 1.0 / 32.0).unwrap();
    let eps = 0.05;
    let data = Family::Homogeneous32 { amplitude: eps }.field(g).unwrap();
    let u = solve_min_graph(&GraphProblem::new(Field::zeros(g), data.clone(), 1e-10, 100_000).unwrap()).unwrap();
    let w = vertical_rescale(&u, eps).unwrap();
    let sp = SignoriniProblem::new(Field::zeros(g), vertical_rescale(&data, eps).unwrap(), 1e-12, 100_000).unwrap();
    let v = solve_signorini(&sp).unwrap();
    let diff = w.max_abs_diff(&v, None).unwrap();
    assert!(diff <= g.spacing() + eps, "{diff}");
}

#[test]
fn accepted_steps_descend() {
    let g = GridSpec::new(3, 1.0 / 16.0).unwrap();
    let data = Family::Homogeneous32 { amplitude: 0.3 }.field(g).unwrap();
    let sol = solve_min_graph_detailed(&GraphProblem::new(Field::zeros(g), data, 1e-10, 100_000).unwrap()).unwrap();
    assert!(sol.max_energy_change <= 0.0);
    for w in sol.energy_trace.windows(2) {
        assert!(w[1].1 <= w[0].1 + 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn comparison_in_the_obstacle(c in -0.4f64..0.0, dc in 0.0f64..0.3, amp in 0.0f64..0.3) {
        let g = GridSpec::new(3, 1.0 / 8.0).unwrap();
        let data = Field::from_fn(g, |x| 0.5 + amp * (x[0] * x[0] - x[1] * x[1]));
        let solve = |level: f64| {
            let psi = Field::from_fn(g, |_| level);
            solve_min_graph(&GraphProblem::new(psi, data.clone(), 1e-11, 100_000).unwrap()).unwrap()
        };
        let (u1, u2) = (solve(c), solve(c + dc));
        for (a, b) in u1.values().iter().zip(u2.values()) {
            prop_assert!(*a <= *b + 1e-7);
        }
    }
}
