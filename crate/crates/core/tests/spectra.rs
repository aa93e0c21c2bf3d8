use num_complex::Complex64;
use proptest::prelude::*;
use unchained_core::ngon::{build_ngon, wintner_matrix, Configuration};
use unchained_core::path::Vec3;
use unchained_core::spectrum::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Every sign combination of `±a ± bi`.
fn quad(a: f64, b: f64) -> Vec<Complex64> {
    vec![c(a, b), c(a, -b), c(-a, b), c(-a, -b)]
}

fn golden_horizontal(n: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0, 1.0), c(0.0, -1.0)];
    match n {
        3 => v.extend(quad(0.5f64.sqrt(), 1.0)),
        4 => {
            v.extend(quad(0.8595325038, 1.0));
            v.extend(quad(0.6394812009, 0.9533814590));
        }
        5 => {
            v.extend(quad(0.9391304549, 1.0));
            v.extend(quad(0.8281366700, 0.8822431635));
            v.extend(quad(0.5028535236, 0.8822431635));
        }
        6 => {
            v.extend([c(0.0, 0.4687282051), c(0.0, -0.4687282051)]);
            v.extend([c(0.4211614102, 0.0), c(-0.4211614102, 0.0)]);
            v.extend(quad(0.9499800584, 0.8151022048));
            v.extend(quad(0.2986755303, 0.8151022048));
            v.extend(quad(0.9893611078, 1.0));
        }
        _ => unreachable!(),
    }
    v
}

#[test]
fn horizontal_spectra_match_tables() {
    for n in 3..=6 {
        let h = horizontal_spectrum(n).unwrap();
        let gold = golden_horizontal(n);
        assert_eq!(h.eigenvalues.len(), gold.len(), "N = {n}");
        for g in &gold {
            assert!(h.contains(*g, 1e-6), "N = {n}: missing {g}");
        }
    }
}

#[test]
fn four_body_closed_form() {
    let h = horizontal_spectrum(4).unwrap();
    let a = (56.0 - 14.0 * 2f64.sqrt()).sqrt() / 7.0;
    assert!(h.contains(c(a, 1.0), 1e-9));
}

#[test]
fn horizontal_spectrum_is_symplectic() {
    for n in 3..=12 {
        let h = horizontal_spectrum(n).unwrap();
        for z in &h.eigenvalues {
            assert!(h.contains(z.conj(), 1e-7) && h.contains(-z, 1e-7), "N = {n}, {z}");
        }
    }
}

#[test]
fn imaginary_horizontal_frequencies_below_top_vertical() {
    for n in 7..=30 {
        let h = horizontal_spectrum(n).unwrap();
        let top = vertical_spectrum(n).unwrap();
        let bound = top.omega_max() / top.omega1();
        for f in h.imaginary_frequencies() {
            assert!(f < bound, "N = {n}: {f} >= {bound}");
        }
    }
}

#[test]
fn monotone_up_to_200() {
    assert!((3..=200).all(check_monotone));
}

#[test]
fn pacella_moeckel_cases() {
    assert!(!pacella_moeckel(3));
    assert!(pacella_moeckel(4));
    assert!(pacella_moeckel(50));
}

#[test]
fn omega1_two_ways() {
    for n in 3..=40 {
        let s = vertical_spectrum(n).unwrap();
        let g = build_ngon(n).unwrap();
        assert!((s.lambdas[1] + g.omega1 * g.omega1).abs() < 1e-12);
        let z: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64)).collect();
        let mut sum = 0.0;
        for j in 0..n {
            for k in j + 1..n {
                sum += 1.0 / (z[j] - z[k]).norm();
            }
        }
        assert!((n as f64 * g.omega1 * g.omega1 - sum).abs() < 1e-12 * sum);
    }
}

/// Residuals are relative to the largest matrix entry, the scale of the
/// cancellation in each row.
#[test]
fn circulant_eigenvectors() {
    for n in 3..=64 {
        let w = wintner_matrix(&build_ngon(n).unwrap().configuration()).unwrap();
        let s = vertical_spectrum(n).unwrap();
        for k in 0..n {
            let x: Vec<Complex64> = (0..n)
                .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (((j + 1) * k) % n) as f64 / n as f64))
                .collect();
            let lam = s.lambdas[s.reduce(k as i64)];
            for i in 0..n {
                let wx: Complex64 = (0..n).map(|j| x[j] * w[(i, j)]).sum();
                let err = (wx - x[i] * lam).norm() / w.amax();
                assert!(err < 1e-12, "N = {n}, k = {k}: {err:e}");
            }
        }
    }
}

#[test]
fn cylinder_solves_vertical_variational_equation() {
    let cyl = lyapunov_cylinder(5, 2, -1, 2, 1, 0.7, 0.1, 128).unwrap();
    let acc = cyl.accelerations();
    let s = vertical_spectrum(5).unwrap();
    let w = wintner_matrix(&build_ngon(5).unwrap().configuration()).unwrap();
    for (conf, a) in cyl.samples().iter().zip(&acc) {
        for i in 0..5 {
            let wz: f64 = (0..5).map(|j| w[(i, j)] * conf[j].z).sum();
            assert!((a[i].z - wz).abs() < 1e-10, "{} vs {}", a[i].z, wz);
        }
    }
    assert!((cyl.period() - 2.0 * std::f64::consts::PI / s.omegas[2]).abs() < 1e-14);
    assert!(lyapunov_cylinder(5, 3, -1, 2, 1, 0.7, 0.0, 16).is_err());
    assert!(lyapunov_cylinder(5, 2, 0, 2, 1, 0.7, 0.0, 16).is_err());
}

#[test]
fn convexity_forms() {
    assert!(convexity_report(5, 2).unwrap().definite);
    for n in 3..=12 {
        let s = vertical_spectrum(n).unwrap();
        for ell in 1..=n / 2 {
            let r = convexity_report(n, ell).unwrap();
            let wl = s.omegas[ell];
            let full = 2 * ell != n;
            let scale = if full { n as f64 / 4.0 } else { n as f64 / 2.0 };
            assert!((r.kinetic_form[(2, 2)] - scale * wl * wl).abs() < 1e-12);
            assert!((r.potential_form[(0, 0)] - scale * wl * wl).abs() < 1e-12);
            if full {
                assert!((r.kinetic_form[(3, 3)] - scale * wl * wl).abs() < 1e-12);
            } else {
                assert!(r.potential_form.row(1).iter().all(|&x| x == 0.0));
                assert!(r.kinetic_form.row(3).iter().all(|&x| x == 0.0));
            }
            assert!(r.definite);
        }
    }
}

/// Finite-difference Hessian of −U along the mode, against the Gram form.
#[test]
fn convexity_potential_matches_finite_differences() {
    let (n, ell) = (7, 2);
    let r = convexity_report(n, ell).unwrap();
    let th = 2.0 * std::f64::consts::PI / n as f64;
    let neg_u = |a: f64, b: f64| {
        let pos: Vec<Vec3> = (0..n)
            .map(|j| {
                let x = (j * ell) as f64 * th;
                Vec3::new((j as f64 * th).cos(), (j as f64 * th).sin(), a * x.cos() + b * x.sin())
            })
            .collect();
        -unchained_core::ngon::potential(&Configuration::equal_masses(pos).unwrap()).unwrap()
    };
    let h = 1e-4;
    let f0 = neg_u(0.0, 0.0);
    let haa = (neg_u(h, 0.0) - 2.0 * f0 + neg_u(-h, 0.0)) / (h * h);
    let hab = (neg_u(h, h) - neg_u(h, -h) - neg_u(-h, h) + neg_u(-h, -h)) / (4.0 * h * h);
    assert!((0.5 * haa - r.potential_form[(0, 0)]).abs() < 1e-5);
    assert!((0.5 * hab - r.potential_form[(0, 1)]).abs() < 1e-5);
}

proptest! {
    #[test]
    fn wintner_rows_sum_to_zero(pts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), 2..9),
                                masses in proptest::collection::vec(0.1f64..5.0, 9)) {
        let pos: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
        let cfg = Configuration::new(pos.clone(), masses[..pos.len()].to_vec()).unwrap();
        prop_assume!(cfg.min_distance() > 1e-3);
        let w = wintner_matrix(&cfg).unwrap();
        let scale = w.amax();
        for i in 0..pos.len() {
            prop_assert!(w.row(i).sum().abs() <= 1e-14 * scale.max(1.0) * pos.len() as f64);
            let ones = nalgebra::DVector::from_element(pos.len(), 1.0);
            prop_assert!((&w * ones).amax() <= 1e-12 * scale.max(1.0));
        }
        // Symmetric under the mass inner product: M W is symmetric.
        for i in 0..pos.len() {
            for j in 0..pos.len() {
                let a = cfg.masses()[i] * w[(i, j)];
                let b = cfg.masses()[j] * w[(j, i)];
                prop_assert!((a - b).abs() <= 1e-12 * scale.max(1.0) * 5.0);
            }
        }
    }
}
