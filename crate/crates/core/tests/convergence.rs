use unravel::{BathSpec, Model, System};

fn excited_population(n_modes: usize) -> Vec<f64> {
    let model = Model::new(System::Tla, &BathSpec::new(4.0, 1.0, vec![-4.0], n_modes)).unwrap();
    let traj = model.integrate(&model.default_initial(), 5.0, 1e-3).unwrap();
    (0..traj.len()).map(|n| traj.amps(n)[1].norm_sqr()).collect()
}

#[test]
fn doubling_modes_at_fixed_window_changes_less_each_time() {
    let runs: Vec<_> = [45, 90, 180, 360].into_iter().map(excited_population).collect();
    let changes: Vec<f64> = runs
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    for pair in changes.windows(2) {
        assert!(pair[1] < pair[0], "{changes:?}");
    }
    assert!(changes[2] < 1e-5, "{changes:?}");
}
