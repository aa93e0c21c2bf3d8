use std::f64::consts::PI;
use unchained_core::symmetry::{fourier_constraints, is_invariant, GroupSpec};
use unchained_core::torsion::*;

/// The eight families with a printed value or lower bound.
fn table() -> Vec<(GroupSpec, f64)> {
    [
        ((4, 1, -1, 3, 1), 9.0),
        ((4, 2, 1, 1, 1), 19.0),
        ((5, 1, -1, 4, 1), 5.0),
        ((5, 2, -1, 2, 1), 19.0),
        ((5, 2, 1, 3, 1), 12.0),
        ((6, 1, -1, 5, 1), 3.0),
        ((6, 2, -1, 4, 1), 14.0),
    ]
    .into_iter()
    .map(|((n, k, e, r, s), lb)| (GroupSpec::new(n, k, e, r, s).unwrap(), lb))
    .collect()
}

#[test]
fn p12_closed_form() {
    let res = torsion_gamma(&GroupSpec::new(3, 1, -1, 2, 1).unwrap()).unwrap();
    let closed = 12.0 / 19.0 * (6.0 * PI.powi(7)).powf(1.0 / 3.0);
    assert!((res.gamma - closed).abs() < 1e-6 * closed);
    assert!((res.gamma - 16.589).abs() < 1e-3);
    assert!(res.a2.is_none(), "2kη − 1 = −3 ≡ 0 removes A₂");
    assert!(res.c3.unwrap_or(0.0).abs() < 1e-12);
}

#[test]
fn rotated_lagrange_is_torsion_free() {
    let res = torsion_gamma_branch(&GroupSpec::new(3, 1, -1, 2, 1).unwrap(), Branch::Retrograde).unwrap();
    assert!(res.gamma.abs() < 1e-10);
}

#[test]
fn printed_lower_bounds_hold() {
    for (spec, lb) in table() {
        let res = torsion_gamma(&spec).unwrap();
        assert!(res.gamma > lb, "{spec:?}: γ = {}", res.gamma);
    }
}

#[test]
fn four_body_hip_hop_value() {
    let res = torsion_gamma(&GroupSpec::new(4, 2, 1, 1, 1).unwrap()).unwrap();
    let r2 = 2f64.sqrt();
    let closed = 4692.0 * PI.powf(7.0 / 3.0) * (440.0 * r2 + 981.0)
        / (2446096.0 * 2f64.powf(0.25) * (2.0 * r2 + 1.0).sqrt());
    assert!((res.gamma - closed).abs() < 1e-9 * closed, "{closed} {}", res.gamma);
    assert!(res.gamma > 19.0);
}

#[test]
fn torsion_is_nonnegative() {
    for n in 3..=8usize {
        for k in 1..=n / 2 {
            for eta in [1, -1] {
                if 2 * k == n && eta == -1 {
                    continue;
                }
                for r in -3..=5 {
                    let Ok(spec) = GroupSpec::new(n, k, eta, r, 1) else { continue };
                    match torsion_gamma(&spec) {
                        Ok(res) => assert!(res.gamma >= -1e-9, "{spec:?}: {}", res.gamma),
                        Err(unchained_core::Error::Degenerate(_)) => {}
                        Err(e) => panic!("{spec:?}: {e}"),
                    }
                }
            }
        }
    }
}

#[test]
fn affine_coefficients_are_real() {
    for (spec, _) in table() {
        let sys = build_equations(&spec).unwrap();
        assert!(sys.max_imag < 1e-9, "{spec:?}: {}", sys.max_imag);
        assert!(sys.dropped_residual < 1e-9);
        assert_eq!(sys.unknowns.len(), sys.equations.len());
    }
}

#[test]
fn excluded_coefficients_follow_the_index_rules() {
    for (spec, _) in table() {
        let res = torsion_gamma(&spec).unwrap();
        let n = spec.n_bodies as i64;
        let ke = spec.k_eta() as i64;
        assert_eq!(res.a2.is_none(), (2 * ke - 1).rem_euclid(n) == 0);
        assert_eq!(res.am2.is_none(), (-2 * ke - 1).rem_euclid(n) == 0);
        assert_eq!(res.c3.is_none(), (3 * ke).rem_euclid(n) == 0);
    }
}

#[test]
fn expansion_respects_the_symmetry() {
    let mut all = table();
    all.push((GroupSpec::new(3, 1, -1, 2, 1).unwrap(), 0.0));
    for (spec, _) in all {
        let res = torsion_gamma(&spec).unwrap();
        let lp = res.loop_path(0.2, 96).unwrap();
        assert!(is_invariant(&lp, &spec, 1e-10).unwrap(), "{spec:?}");
        let fc = fourier_constraints(&spec, 8);
        let f = lp.to_fourier(8).unwrap();
        for j in 0..spec.n_bodies {
            let (h, v) = f.support(j, 1e-12);
            assert!(h.iter().all(|&l| fc.allows_horizontal(l)), "{spec:?} horizontal {h:?}");
            assert!(v.iter().all(|&l| fc.allows_vertical(l)), "{spec:?} vertical {v:?}");
        }
    }
}

#[test]
fn residual_scales_as_eps_to_the_fourth() {
    let mut all = table();
    all.push((GroupSpec::new(3, 1, -1, 2, 1).unwrap(), 0.0));
    for (spec, _) in all {
        let res = torsion_gamma(&spec).unwrap();
        let eps = [1e-1, 1e-2, 1e-3];
        let r: Vec<f64> = eps.iter().map(|&e| res.residual(e, 64).unwrap()).collect();
        let slope = (r[0] / r[2]).log10() / (eps[0] / eps[2]).log10();
        assert!(slope >= 3.9, "{spec:?}: residuals {r:?}, slope {slope}");
    }
}

#[test]
fn gamma_predicts_frame_shift() {
    let res = torsion_gamma(&GroupSpec::new(3, 1, -1, 2, 1).unwrap()).unwrap();
    assert!((res.varpi(0.0) - res.varpi_star).abs() < 1e-15);
    assert!((res.varpi(0.1) - res.varpi_star - 0.01 * res.gamma).abs() < 1e-12);
    assert!((res.varpi_star - (2.0 * PI - 4.0 * PI)).abs() < 1e-12);
}
