//! Physical limits of the charging dynamics that have closed forms.

use std::f64::consts::PI;

use qbat::{find_max, find_max_in, propagate, ModelParams, PropagationConfig, Series};

fn horizon(t_max: f64) -> PropagationConfig {
    PropagationConfig {
        t_max,
        ..Default::default()
    }
}

#[test]
fn single_atom_rabi_oscillation() {
    // One atom, one photon, g ≪ ω0: E_b(t) ≈ sin²(g t).
    let g = 0.05;
    let p = ModelParams::new(1).with_g(g).with_n_init(1);
    let traj = propagate(&p, &horizon(40.0)).unwrap();
    for (t, e) in traj.times.iter().zip(&traj.stored_energy) {
        assert!((e - (g * t).sin().powi(2)).abs() < 0.01, "t = {t}: {e}");
    }
    let peak = find_max(&traj, Series::StoredEnergy).unwrap();
    assert!((peak.t_star - PI / (2.0 * g)).abs() < 0.02 * PI / (2.0 * g));
}

#[test]
fn stored_energy_respects_capacity() {
    for (n, g, omega, eta) in [(3, 0.5, 1.0, 0.8), (2, 2.0, 0.1, -0.5), (4, 0.1, 2.0, 1.0)] {
        let p = ModelParams::new(n)
            .with_g(g)
            .with_drive(omega)
            .with_eta(eta);
        let traj = propagate(&p, &horizon(10.0)).unwrap();
        for e in &traj.stored_energy {
            assert!(*e >= -1e-10 && *e <= n as f64 + 1e-10, "N={n}: E_b = {e}");
        }
        for norm in &traj.norms {
            assert!((norm - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn charger_off_freezes_the_battery() {
    // After the window closes only H_b + H_int act, both commuting with J_z.
    let p = ModelParams::new(2)
        .with_g(0.5)
        .with_drive(1.0)
        .with_eta(0.8)
        .with_charging_time(3.0);
    let traj = propagate(&p, &horizon(6.0)).unwrap();
    let after: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.stored_energy)
        .filter(|(t, _)| **t >= 3.0)
        .map(|(_, e)| *e)
        .collect();
    assert!(after.len() > 10);
    for e in &after {
        assert!((e - after[0]).abs() < 1e-10);
    }
}

#[test]
fn maxima_are_stable_under_grid_refinement() {
    let p = ModelParams::new(2)
        .with_g(0.5)
        .with_drive(1.0)
        .with_eta(0.8);
    let coarse = propagate(
        &p,
        &PropagationConfig {
            t_max: 6.0,
            sample_stride: 40,
            ..Default::default()
        },
    )
    .unwrap();
    let fine = propagate(
        &p,
        &PropagationConfig {
            t_max: 6.0,
            sample_stride: 4,
            ..Default::default()
        },
    )
    .unwrap();
    for series in [Series::StoredEnergy, Series::Power] {
        let a = find_max(&coarse, series).unwrap();
        let b = find_max(&fine, series).unwrap();
        assert!(
            (a.t_star - b.t_star).abs() <= 0.004,
            "{series:?}: {} vs {}",
            a.t_star,
            b.t_star
        );
    }
    // Same data through the free function.
    let m = find_max_in(&fine.times, &fine.power, Series::Power).unwrap();
    assert_eq!(m, find_max(&fine, Series::Power).unwrap());
}
