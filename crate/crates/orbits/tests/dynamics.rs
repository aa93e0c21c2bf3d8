use std::f64::consts::PI;
use unchained_core::ngon::{build_ngon, ngon_radius_for_frequency};
use unchained_core::path::point;
use unchained_core::{RotatingFrame, Vec3};
use unchained_orbits::dynamics::*;

/// N-gon rotating at inertial frequency `x`, seen in the frame `ϖ`.
fn ngon_state(n: usize, x: f64, varpi: f64) -> State {
    let r = ngon_radius_for_frequency(n, x).unwrap();
    let ng = build_ngon(n).unwrap();
    let rel = x - varpi;
    let pos: Vec<Vec3> = (0..n as i64).map(|j| point(ng.vertex(j) * r, 0.0)).collect();
    let vel = pos.iter().map(|p| Vec3::new(-rel * p.y, rel * p.x, 0.0)).collect();
    State::new(pos, vel).unwrap()
}

#[test]
fn relative_equilibrium_returns_after_one_period() {
    for (n, varpi) in [(3, 0.0), (4, -1.0), (6, 2.5)] {
        let x = 2.0 * PI;
        let s0 = ngon_state(n, x, varpi);
        let period = 2.0 * PI / (x - varpi).abs();
        let s1 = integrate(&s0, RotatingFrame::new(varpi).unwrap(), period, 1e-12).unwrap();
        assert!(s1.max_deviation(&s0) < 1e-10, "{}", s1.max_deviation(&s0));
    }
}

#[test]
fn rigid_state_in_comoving_frame_is_fixed() {
    let s0 = ngon_state(5, 3.0, 3.0);
    // The pentagon is linearly unstable, so keep the horizon short.
    let s1 = integrate(&s0, RotatingFrame::new(3.0).unwrap(), 1.0, 1e-12).unwrap();
    assert!(s1.max_deviation(&s0) < 1e-10, "{}", s1.max_deviation(&s0));
}

#[test]
fn energy_and_angular_momentum_are_conserved() {
    let mut s0 = ngon_state(4, 2.0 * PI, -1.1);
    s0.positions[0].z += 0.05;
    s0.velocities[2].z -= 0.05;
    s0.velocities[1].x += 0.1;
    let frame = RotatingFrame::new(-1.1).unwrap();
    let e0 = energy(&s0, frame).unwrap();
    let l0 = angular_momentum_z(&s0, frame);
    let states = sample(&s0, frame, 1.0, 16, 1e-12).unwrap();
    let s1 = integrate(&s0, frame, 1.0, 1e-12).unwrap();
    for s in states.iter().chain([&s1]) {
        assert!((energy(s, frame).unwrap() - e0).abs() < 1e-10);
        assert!((angular_momentum_z(s, frame) - l0).abs() < 1e-10);
    }
}

#[test]
fn two_body_kepler_period() {
    // Separation d: relative acceleration 2/d², so ω² = 2/d³.
    let d: f64 = 1.7;
    let w = (2.0 / d.powi(3)).sqrt();
    let pos = vec![Vec3::new(d / 2.0, 0.0, 0.0), Vec3::new(-d / 2.0, 0.0, 0.0)];
    let vel = vec![Vec3::new(0.0, w * d / 2.0, 0.0), Vec3::new(0.0, -w * d / 2.0, 0.0)];
    let s0 = State::new(pos, vel).unwrap();
    let s1 = integrate(&s0, RotatingFrame::inertial(), 2.0 * PI / w, 1e-12).unwrap();
    assert!(s1.max_deviation(&s0) < 1e-10);
    let half = integrate(&s0, RotatingFrame::inertial(), PI / w, 1e-12).unwrap();
    assert!((half.positions[0].x + d / 2.0).abs() < 1e-10);
}

#[test]
fn tangents_match_finite_differences() {
    let mut s0 = ngon_state(3, 2.0 * PI, -2.0);
    s0.positions[1].z = 0.1;
    s0.velocities[0].x += 0.2;
    let varpi = -2.0;
    let frame = RotatingFrame::new(varpi).unwrap();
    let t = 0.4;
    let blk = 18;
    let dirs: Vec<Vec<f64>> = [2usize, 7, 11, 16].iter().map(|&i| (0..blk).map(|k| f64::from(k == i)).collect()).collect();
    let var = integrate_variational(&s0, frame, t, 1e-13, &dirs, true).unwrap();
    let base = integrate(&s0, frame, t, 1e-13).unwrap().to_vec();
    let h = 1e-6;
    for (dir, col) in dirs.iter().zip(&var.tangents) {
        let y: Vec<f64> = s0.to_vec().iter().zip(dir).map(|(a, b)| a + h * b).collect();
        let ym: Vec<f64> = s0.to_vec().iter().zip(dir).map(|(a, b)| a - h * b).collect();
        let p = integrate(&State::from_slice(3, &y), frame, t, 1e-13).unwrap().to_vec();
        let m = integrate(&State::from_slice(3, &ym), frame, t, 1e-13).unwrap().to_vec();
        for i in 0..blk {
            assert!(((p[i] - m[i]) / (2.0 * h) - col[i]).abs() < 1e-6 * (1.0 + col[i].abs()));
        }
    }
    let p = integrate(&s0, RotatingFrame::new(varpi + h).unwrap(), t, 1e-13).unwrap().to_vec();
    let m = integrate(&s0, RotatingFrame::new(varpi - h).unwrap(), t, 1e-13).unwrap().to_vec();
    let dv = var.d_varpi.unwrap();
    for i in 0..blk {
        assert!(((p[i] - m[i]) / (2.0 * h) - dv[i]).abs() < 1e-6 * (1.0 + dv[i].abs()));
    }
    assert!(var.state.to_vec().iter().zip(&base).all(|(a, b)| (a - b).abs() < 1e-11));
}

#[test]
fn collisions_are_located() {
    let pos = vec![Vec3::new(0.5, 0.0, 0.0), Vec3::new(-0.5, 0.0, 0.0)];
    let s0 = State::new(pos, vec![Vec3::zeros(); 2]).unwrap();
    match integrate(&s0, RotatingFrame::inertial(), 10.0, 1e-12) {
        Err(unchained_orbits::Error::Collision { t, .. }) | Err(unchained_orbits::Error::Integration { t, .. }) => {
            // Radial infall from rest at separation d with μ = 2: t = (π/2)√(d³/2μ) = π/4.
            assert!((t - PI / 4.0).abs() < 1e-3, "t = {t}");
        }
        other => panic!("expected a collision, got {other:?}"),
    }
}
