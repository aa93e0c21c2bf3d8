use std::f64::consts::PI;
use unchained_core::minimize::{relative_equilibrium_action, BarActionParams};
use unchained_core::path::LoopPath;
use unchained_core::symmetry::{invariance_defect, GroupSpec};
use unchained_core::torsion::Branch;
use unchained_orbits::dynamics::{integrate, State};
use unchained_orbits::family::*;
use unchained_orbits::shooting::*;

fn p12() -> GroupSpec {
    GroupSpec::new(3, 1, -1, 2, 1).unwrap()
}

fn hip_hop() -> GroupSpec {
    GroupSpec::new(4, 2, 1, 1, 1).unwrap()
}

fn inertial(spec: &GroupSpec, varpi: f64) -> f64 {
    varpi + 2.0 * PI * spec.r as f64 / spec.s as f64
}

fn seeded_guess(spec: &GroupSpec, eps: f64) -> (State, f64) {
    let (exp, _) = seed_expansion(spec, Branch::Prograde).unwrap();
    let (p, v) = exp.state(eps, 0.0);
    (State::new(p, v).unwrap(), exp.varpi(eps))
}

#[test]
fn zero_amplitude_shoots_to_the_relative_equilibrium() {
    for spec in [p12(), hip_hop()] {
        let (guess, varpi) = seeded_guess(&spec, 0.0);
        let tol = Tolerances::default();
        let orbit = shoot_symmetric(&spec, varpi, &guess, Pin::Varpi(varpi), &tol).unwrap();
        assert!(orbit.residual < tol.newton);
        assert!(orbit.amplitude.abs() < 1e-10, "{}", orbit.amplitude);
        assert!(orbit.initial_state.max_deviation(&guess) < 1e-9);
    }
}

#[test]
fn small_amplitude_orbit_follows_the_cylinder() {
    let spec = p12();
    let (exp, _) = seed_expansion(&spec, Branch::Prograde).unwrap();
    for eps in [0.005, 0.01, 0.02] {
        let (guess, varpi) = seeded_guess(&spec, eps);
        let orbit = shoot_symmetric(&spec, varpi, &guess, Pin::Height(guess.positions[0].z), &Tolerances::default()).unwrap();
        let states = orbit.sample(60, 1e-12).unwrap();
        let mut worst: f64 = 0.0;
        for (m, s) in states.iter().enumerate() {
            let (pos, _) = exp.state(eps, m as f64 / 60.0);
            for (a, b) in s.positions.iter().zip(&pos) {
                worst = worst.max((a - b).amax());
            }
        }
        assert!(worst < eps.powi(3), "eps {eps}: deviation {worst:e}");
        assert!((orbit.amplitude - eps).abs() < eps.powi(3));
    }
}

#[test]
fn mid_family_p12_orbit_is_invariant() {
    let spec = p12();
    let c = Controls { max_records: 20, ..Controls::default() };
    let fam = continue_family(&spec, Branch::Prograde, Direction::Positive, &c).unwrap();
    let mid = &fam.records[fam.records.len() / 2];
    assert!(mid.amplitude > 0.1);
    let states = mid.orbit.sample(sample_count(&spec, 300), 1e-12).unwrap();
    let lp = LoopPath::new(mid.orbit.period, states.iter().map(|s| s.positions.clone()).collect()).unwrap();
    assert!(invariance_defect(&lp, &spec).unwrap() < 1e-6);
}

fn check_family(spec: GroupSpec) {
    let controls = Controls::default();
    let fam = continue_family(&spec, Branch::Prograde, Direction::Positive, &controls).unwrap();
    assert!(fam.records.len() >= 21, "{} records, end: {}", fam.records.len(), fam.end);
    let onset = &fam.records[0];
    assert!((onset.varpi - fam.varpi_star).abs() < 1e-8);
    assert_eq!(onset.arclength, 0.0);
    for w in fam.records.windows(2) {
        assert!(w[1].arclength > w[0].arclength);
    }
    for r in &fam.records {
        let d = r.diagnostics;
        assert!(d.invariance_defect < 1e-6 && d.newton_residual < 1e-8 && d.lz_drift < 1e-9, "{d:?}");
        assert!(r.action > 0.0);
    }

    let gamma = fam.gamma.unwrap();
    let fit = fit_onset(&fam, 0.08).unwrap();
    assert!((fit.gamma_fd - gamma).abs() < 0.05 * gamma, "{} vs {gamma}", fit.gamma_fd);

    let x = inertial(&spec, fam.varpi_star);
    let closed = relative_equilibrium_action(spec.n_bodies, x, 1.0).unwrap();
    let bar = BarActionParams::for_relative_equilibrium(spec.n_bodies, x, 1.0).unwrap().minimum(1.0).1;
    assert!((onset.action - closed).abs() < 1e-6 * closed);
    assert!((onset.action - bar).abs() < 1e-6 * bar);
    assert!((fit.action0 - closed).abs() < 1e-6 * closed);
    let row = relative_equilibrium_row(&spec, fam.varpi_star).unwrap();
    assert!((row.action - onset.action).abs() < 1e-6 * closed);
    assert!((row.lz - onset.angular_momentum_z).abs() < 1e-8);
}

#[test]
fn p12_family_is_consistent() {
    check_family(p12());
}

#[test]
fn hip_hop_family_is_consistent() {
    check_family(hip_hop());
}

#[test]
fn rotated_lagrange_branch_has_no_torsion() {
    let spec = p12();
    let c = Controls { max_records: 12, ..Controls::default() };
    let fam = continue_family(&spec, Branch::Retrograde, Direction::Positive, &c).unwrap();
    assert_eq!(fam.records.len(), 12);
    let fit = fit_onset(&fam, f64::INFINITY).unwrap();
    assert!(fit.gamma_fd.abs() < 1e-3);
    let a0 = fam.records[0].action;
    for r in &fam.records {
        assert!((r.action - a0).abs() < 1e-8 * a0);
    }
    let check = verify_against_continuation(&spec, Branch::Retrograde, 0.0, &Controls::default()).unwrap();
    assert!(check.relative_error < 1e-3);
}

#[test]
fn five_body_eight_has_large_positive_slope() {
    let spec = GroupSpec::new(5, 2, -1, 2, 1).unwrap();
    let (exp, _) = seed_expansion(&spec, Branch::Prograde).unwrap();
    let check = verify_against_continuation(&spec, Branch::Prograde, exp.gamma, &Controls::default()).unwrap();
    assert!(check.gamma_fd > 19.0);
    assert!(check.relative_error < 0.05);
}

#[test]
fn monodromy_of_the_relative_equilibrium_is_resonant() {
    for spec in [p12(), hip_hop(), GroupSpec::new(5, 2, -1, 2, 1).unwrap()] {
        let (guess, varpi) = seeded_guess(&spec, 0.0);
        let orbit = shoot_symmetric(&spec, varpi, &guess, Pin::Varpi(varpi), &Tolerances::default()).unwrap();
        let mu = orbit.monodromy_mu.unwrap();
        let q = (2.0 * PI * mu - varpi) / (2.0 * PI) - spec.r as f64 / spec.s as f64;
        let off = (q - q.round()).abs();
        assert!(off < 1e-9, "{spec:?}: {off:e}");
    }
}

#[test]
fn monodromy_does_not_depend_on_time_origin() {
    let spec = hip_hop();
    let (guess, varpi) = seeded_guess(&spec, 0.05);
    let orbit = shoot_symmetric(&spec, varpi, &guess, Pin::Height(guess.positions[0].z), &Tolerances::default()).unwrap();
    let mu = monodromy(&orbit, 1e-12).unwrap();
    for shift in [0.13, 0.5, 0.71] {
        let mut moved = orbit.clone();
        moved.initial_state = integrate(&orbit.initial_state, orbit.frame(), shift, 1e-13).unwrap();
        let m = monodromy(&moved, 1e-12).unwrap();
        let d = (m - mu).rem_euclid(1.0);
        assert!(d.min(1.0 - d) < 1e-8, "shift {shift}: {mu} vs {m}");
    }
}

#[test]
fn halved_tolerance_reproduces_actions() {
    let spec = p12();
    let base = Controls { max_records: 8, ..Controls::default() };
    let tight = Controls {
        tol: Tolerances { integrator: base.tol.integrator / 2.0, newton: base.tol.newton / 2.0, ..base.tol },
        ..base.clone()
    };
    let a = continue_family(&spec, Branch::Prograde, Direction::Positive, &base).unwrap();
    let b = continue_family(&spec, Branch::Prograde, Direction::Positive, &tight).unwrap();
    // The onset and natural-parameter records sit at the same heights.
    for (x, y) in a.records.iter().zip(&b.records).take(base.natural_steps + 1) {
        assert!((x.amplitude - y.amplitude).abs() < 1e-6);
        assert!((x.action - y.action).abs() < 1e-6, "{} vs {}", x.action, y.action);
    }
}

#[test]
fn action_changes_at_most_linearly_with_arclength() {
    let spec = p12();
    let coarse = Controls { max_records: 16, ..Controls::default() };
    let fine = Controls { max_step: coarse.max_step / 2.0, max_records: 24, ..coarse.clone() };
    let mut rates = Vec::new();
    for c in [&coarse, &fine] {
        let fam = continue_family(&spec, Branch::Prograde, Direction::Positive, c).unwrap();
        let rate = fam
            .records
            .windows(2)
            .map(|w| (w[1].action - w[0].action).abs() / (w[1].arclength - w[0].arclength))
            .fold(0.0, f64::max);
        rates.push(rate);
    }
    assert!(rates.iter().all(|r| r.is_finite() && *r < 10.0), "{rates:?}");
    assert!((rates[0] - rates[1]).abs() < 0.5 * rates[0].max(rates[1]));
}

#[test]
fn parallel_runs_match_sequential_ones() {
    let c = Controls { max_records: 10, ..Controls::default() };
    let tasks = [
        (p12(), Branch::Prograde, Direction::Positive),
        (hip_hop(), Branch::Prograde, Direction::Positive),
        (p12(), Branch::Prograde, Direction::Negative),
    ];
    let seq = continue_families(&tasks, &c, 1);
    let par = continue_families(&tasks, &c, 3);
    for (a, b) in seq.iter().zip(&par) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        assert_eq!(family_csv(a), family_csv(b));
    }
}

#[test]
fn csv_layout() {
    let c = Controls { max_records: 7, ..Controls::default() };
    let fam = continue_family(&p12(), Branch::Prograde, Direction::Positive, &c).unwrap();
    let csv = family_csv(&fam);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# spec=3,1,-1,2,1");
    assert_eq!(lines[1], "varpi,amplitude,action,period,Lz");
    assert_eq!(lines.len(), 2 + fam.records.len() + 1);
    assert!(lines.last().unwrap().starts_with("# end: "));
    for (line, r) in lines[2..lines.len() - 1].iter().zip(&fam.records) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v, vec![r.varpi, r.amplitude, r.action, r.period, r.angular_momentum_z]);
    }
    let rows = action_diagram(&fam).unwrap();
    assert!(rows.iter().any(|r| r.branch == DiagramBranch::RelativeEquilibrium));
    let snap = snapshot(&fam.records[3].orbit, 32, 1e-12).unwrap();
    let json = serde_json::to_string(&snap).unwrap();
    assert!(json.contains("varpi"));
}

#[test]
fn negative_direction_mirrors_amplitude() {
    let c = Controls { max_records: 8, ..Controls::default() };
    let up = continue_family(&p12(), Branch::Prograde, Direction::Positive, &c).unwrap();
    let down = continue_family(&p12(), Branch::Prograde, Direction::Negative, &c).unwrap();
    for (a, b) in up.records.iter().zip(&down.records).skip(1) {
        assert!(b.amplitude < 0.0);
        assert!((a.varpi - b.varpi).abs() < 1e-7);
        assert!((a.action - b.action).abs() < 1e-7);
    }
}
