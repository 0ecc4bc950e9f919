use wedgeflow_core::barriers::*;
use wedgeflow_core::minimal_graph::{solve_min_graph, wedge_instance};
use wedgeflow_core::{Field, GridSpec, Wedge};

#[test]
fn certificate_deepens_with_beta() {
    let g = GridSpec::new(3, 1.0 / 32.0).unwrap();
    let betas = beta_samples(3, 5);
    let certs: Vec<_> = betas
        .iter()
        .map(|b| verify_supersolution(&BarrierSpec::new(3, *b).unwrap(), g).unwrap())
        .collect();
    for c in &certs {
        assert!(c.pass, "{c:?}");
    }
    for w in certs.windows(2) {
        assert!(w[1].max_h < w[0].max_h);
    }
}

#[test]
fn frozen_c0_covers_the_wedge_grid() {
    let g = GridSpec::new(3, 1.0 / 32.0).unwrap();
    let thetas = [0.0, 0.05, 0.1, 0.2, 0.4];
    let epsilons = [0.0, 0.0025, 0.005, 0.01, 0.02];
    let mut solved: Vec<(Field, Wedge, f64)> = Vec::new();
    for &t in &thetas {
        for &e in &epsilons {
            let u = solve_min_graph(&wedge_instance(g, 0.0, t, e).unwrap()).unwrap();
            solved.push((u, Wedge::new(0.0, t).unwrap(), e));
        }
    }
    let psi = Field::zeros(g);
    let instances: Vec<SolvedInstance<'_>> = solved
        .iter()
        .map(|(u, w, e)| SolvedInstance {
            u,
            psi: &psi,
            wedge: *w,
            epsilon: *e,
        })
        .collect();
    let c0 = calibrate_c0(&instances, 0.0, 100.0, 1e-3).unwrap();
    assert!(c0 <= CALIBRATED_C0, "calibration moved to {c0}");
    for (u, w, e) in &solved {
        let r = dichotomy(u, &psi, w, *e, CALIBRATED_C0).unwrap();
        if w.theta() >= CALIBRATED_C0 * e {
            assert_eq!(r.branch, Branch::FullContact);
            assert_eq!(r.contact_fraction, 1.0);
        }
        if let Some(m) = r.lower_margin {
            assert!(m >= 0.0);
        }
    }
}
