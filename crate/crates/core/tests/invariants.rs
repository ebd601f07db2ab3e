use proptest::prelude::*;
use unravel::gaw;
use unravel::observables::{channel_rates, combined_current, GawRates};
use unravel::{BathSpec, Model, System};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_and_bridge_hold_across_parameters(
        gamma0 in 0.1f64..5.0,
        delta_a in -5.0f64..5.0,
        delta_b in -5.0f64..5.0,
        system in prop_oneof![Just(System::Tla), Just(System::VNonsecular), Just(System::VSecular)],
    ) {
        let detunings = if system == System::Tla { vec![delta_a] } else { vec![delta_a, delta_b] };
        let model = Model::new(system, &BathSpec::new(gamma0, 1.0, detunings, 60)).unwrap();
        let traj = model.integrate(&model.default_initial(), 1.0, 1e-3).unwrap();
        prop_assert!(traj.max_norm_drift() < 1e-9);
        for n in (0..traj.len()).step_by(50) {
            let (t, amps) = (traj.time(n), traj.amps(n));
            let currents = combined_current(&model, t, amps);
            let rates = channel_rates(&model, t, amps);
            for (r, j) in currents.iter().enumerate() {
                let predicted: f64 = model
                    .channels_of(r)
                    .map(|i| rates[i].map_or(0.0, |x| x.decay * amps[1 + i].norm_sqr()))
                    .sum();
                prop_assert!((j - predicted).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn property_state_steps_stay_on_allowed_labels(
        forward in prop::collection::vec(0.0f64..5.0, 1..4),
        reverse in 0.0f64..5.0,
        label_pick in 0usize..4,
        u in 0.0f64..1.0,
    ) {
        let rates: Vec<GawRates> = forward.iter().map(|&f| GawRates { forward: f, reverse }).collect();
        let label = label_pick % (rates.len() + 1);
        let (next, slot) = gaw::step(label, &rates, 0.01, u);
        match slot {
            None => prop_assert_eq!(next, label),
            Some(s) if label == 0 => prop_assert_eq!(next, s + 1),
            Some(s) => {
                prop_assert_eq!(next, 0);
                prop_assert_eq!(s, label - 1);
            }
        }
    }
}
