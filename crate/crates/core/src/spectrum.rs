//! Vertical and horizontal spectra of the N-gon relative equilibrium, and
//! the quadratic forms of the energy restricted to vertical modes.

use crate::error::{invalid, Error, Result};
use crate::ngon::build_ngon;
use crate::path::{point, LoopPath};
use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative threshold under which an eigenvalue counts as purely imaginary.
pub const IMAGINARY_TOL: f64 = 1e-8;

/// Eigenvalues `λ_k` of the vertical variational matrix of the unit N-gon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerticalSpectrum {
    pub n_bodies: usize,
    /// `λ_k` for `k = 0..=⌊N/2⌋`, with `λ₀ = 0`.
    pub lambdas: Vec<f64>,
    /// `ω_k = √(−λ_k)`, with `ω₀ = 0` kept for indexing.
    pub omegas: Vec<f64>,
}

impl VerticalSpectrum {
    pub fn omega1(&self) -> f64 {
        self.omegas[1]
    }

    /// Reduces any integer mode index into `0..=⌊N/2⌋`.
    pub fn reduce(&self, m: i64) -> usize {
        let n = self.n_bodies as i64;
        let r = m.rem_euclid(n);
        r.min(n - r) as usize
    }

    /// `ω_m` for an arbitrary integer subscript, `None` when `m ≡ 0 (mod N)`.
    pub fn omega(&self, m: i64) -> Option<f64> {
        match self.reduce(m) {
            0 => None,
            k => Some(self.omegas[k]),
        }
    }

    pub fn ratio(&self, k: usize) -> f64 {
        self.omegas[k] / self.omegas[1]
    }

    pub fn omega_max(&self) -> f64 {
        self.omegas[1..].iter().cloned().fold(0.0, f64::max)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return invalid(format!("spectra need N >= 3, got {n}"));
    }
    Ok(())
}

/// `λ_k = −Σ_{j=1}^{N−1} (1 − cos 2πjk/N) / ρ_j³`.
pub fn vertical_spectrum(n: usize) -> Result<VerticalSpectrum> {
    check_n(n)?;
    let ngon = build_ngon(n)?;
    let lambdas: Vec<f64> = (0..=n / 2)
        .map(|k| {
            -(1..n)
                .map(|j| {
                    let c = (2.0 * PI * (j * k) as f64 / n as f64).cos();
                    (1.0 - c) / ngon.rho[j - 1].powi(3)
                })
                .sum::<f64>()
        })
        .collect();
    let omegas = lambdas.iter().map(|l| (-l).max(0.0).sqrt()).collect();
    Ok(VerticalSpectrum { n_bodies: n, lambdas, omegas })
}

/// Whether `λ_k` is negative and strictly decreasing over `1..=⌊N/2⌋`.
pub fn check_monotone(n: usize) -> bool {
    let Ok(spec) = vertical_spectrum(n) else {
        return false;
    };
    let l = &spec.lambdas[1..];
    l.iter().all(|&x| x < 0.0) && l.windows(2).all(|w| w[1] < w[0])
}

/// Whether some vertical frequency exceeds `ω₁`.
pub fn pacella_moeckel(n: usize) -> bool {
    vertical_spectrum(n).is_ok_and(|s| s.omega_max() > s.omega1() * (1.0 + 1e-12))
}

/// Validates a mode pair `(k, η)` for N bodies, folding `η` to `+1` when
/// `k = N/2`.
pub fn check_mode(n: usize, k: usize, eta: i32) -> Result<i32> {
    check_n(n)?;
    if k == 0 || k > n / 2 {
        return invalid(format!("mode k must lie in 1..={}, got {k}", n / 2));
    }
    if eta != 1 && eta != -1 {
        return invalid(format!("eta must be +1 or -1, got {eta}"));
    }
    Ok(if 2 * k == n { 1 } else { eta })
}

/// The two-frequency loop
/// `x_j(t) = (ζ^j e^{i(r/s)ω_k t}, A·Re(ζ^{ηkj} e^{iω_k(t − t₀)}))`
/// for the unit N-gon, over its period `T = 2πs/ω_k`.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_cylinder(
    n: usize,
    k: usize,
    eta: i32,
    r: i64,
    s: i64,
    amplitude: f64,
    phase: f64,
    samples: usize,
) -> Result<LoopPath> {
    let eta = check_mode(n, k, eta)?;
    if s < 1 || r.gcd(&s) != 1 {
        return invalid(format!("r/s = {r}/{s} must be in lowest terms with s >= 1"));
    }
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return invalid("amplitude must be nonnegative");
    }
    let spec = vertical_spectrum(n)?;
    let wk = spec.omegas[k];
    let period = 2.0 * PI * s as f64 / wk;
    let nf = n as f64;
    let rate = r as f64 / s as f64 * wk;
    LoopPath::from_fn(period, samples, |t| {
        (0..n)
            .map(|j| {
                let h = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / nf + rate * t);
                let ph = 2.0 * PI * (eta as f64) * (k * j) as f64 / nf + wk * (t - phase);
                point(h, amplitude * ph.cos())
            })
            .collect()
    })
}

/// Planar linearization at the relative equilibrium, with the centre of
/// mass modes and the rotation/scaling null pair removed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizontalSpectrum {
    pub n_bodies: usize,
    pub omega1: f64,
    /// The `4N − 6` eigenvalues, in units of `ω₁`.
    pub eigenvalues: Vec<Complex64>,
    /// The same eigenvalues in raw units.
    pub raw: Vec<Complex64>,
    /// The discarded null pair, in units of `ω₁`.
    pub trivial: Vec<Complex64>,
}

impl HorizontalSpectrum {
    /// Moduli of the purely imaginary eigenvalues with positive imaginary
    /// part, in units of `ω₁`, ascending.
    pub fn imaginary_frequencies(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self
            .eigenvalues
            .iter()
            .filter(|z| z.re.abs() < IMAGINARY_TOL * z.norm() && z.im > 0.0)
            .map(|z| z.im)
            .collect();
        f.sort_by(f64::total_cmp);
        f
    }

    /// Whether some eigenvalue lies within `tol` of `z` (units of `ω₁`).
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        self.eigenvalues.iter().any(|e| (e - z).norm() < tol)
    }
}

/// Orthonormal basis (Helmert) of `{v ∈ ℝ^N : Σ v = 0}`, as columns.
pub fn zero_sum_basis(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n - 1);
    for c in 0..n - 1 {
        let k = (c + 1) as f64;
        let norm = (k * (k + 1.0)).sqrt();
        for i in 0..=c {
            q[(i, c)] = 1.0 / norm;
        }
        q[(c + 1, c)] = -k / norm;
    }
    q
}

/// Jacobian of equal-mass gravity at a planar configuration, in interleaved
/// coordinates `(x_0, y_0, x_1, …)`.
pub fn planar_gravity_jacobian(points: &[Complex64]) -> DMatrix<f64> {
    let n = points.len();
    let mut df = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = points[j] - points[i];
            let r = d.norm();
            let dv = nalgebra::Vector2::new(d.re, d.im);
            let block = Matrix2::identity() / r.powi(3) - dv * dv.transpose() * (3.0 / r.powi(5));
            for a in 0..2 {
                for b in 0..2 {
                    df[(2 * i + a, 2 * j + b)] += block[(a, b)];
                    df[(2 * i + a, 2 * i + b)] -= block[(a, b)];
                }
            }
        }
    }
    df
}

pub fn horizontal_spectrum(n: usize) -> Result<HorizontalSpectrum> {
    check_n(n)?;
    let ngon = build_ngon(n)?;
    let w = ngon.omega1;
    let pts: Vec<Complex64> = (0..n as i64).map(|j| ngon.vertex(j)).collect();
    let df = planar_gravity_jacobian(&pts);
    let q1 = zero_sum_basis(n);
    let mut q = DMatrix::zeros(2 * n, 2 * (n - 1));
    for i in 0..n {
        for c in 0..n - 1 {
            q[(2 * i, 2 * c)] = q1[(i, c)];
            q[(2 * i + 1, 2 * c + 1)] = q1[(i, c)];
        }
    }
    let m = 2 * (n - 1);
    let stiff = q.transpose() * &df * &q + DMatrix::identity(m, m) * (w * w);
    let mut a = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        a[(i, m + i)] = 1.0;
        for j in 0..m {
            a[(m + i, j)] = stiff[(i, j)];
        }
    }
    // −2ωJ on each body's velocity pair.
    for c in 0..n - 1 {
        a[(m + 2 * c, m + 2 * c + 1)] = 2.0 * w;
        a[(m + 2 * c + 1, m + 2 * c)] = -2.0 * w;
    }
    let schur = nalgebra::Schur::try_new(a, 1e-14, 100_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let mut eig: Vec<Complex64> = schur.complex_eigenvalues().iter().cloned().collect();
    eig.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    let trivial: Vec<Complex64> = eig.drain(..2).map(|z| z / w).collect();
    if trivial.iter().any(|z| z.norm() > 1e-5) {
        return Err(Error::Numerical(format!("expected a null pair, smallest eigenvalues {trivial:?}")));
    }
    Ok(HorizontalSpectrum {
        n_bodies: n,
        omega1: w,
        eigenvalues: eig.iter().map(|z| z / w).collect(),
        raw: eig,
        trivial,
    })
}

/// Kinetic and potential quadratic forms on the vertical mode space
/// `z_j = a cos jℓθ + b sin jℓθ`, `ż_j = ω_ℓ (c cos jℓθ + d sin jℓθ)`,
/// `θ = 2π/N`, in coordinates `(a, b, c, d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub n_bodies: usize,
    pub ell: usize,
    /// Quadratic part of `½ Σ ż_j²`.
    pub kinetic_form: Matrix4<f64>,
    /// Quadratic part of `−U` under the vertical displacement.
    pub potential_form: Matrix4<f64>,
    /// Coordinates that parametrize the mode space (`b`, `d` drop out when `ℓ = N/2`).
    pub active: Vec<usize>,
    /// Whether the energy form is positive definite on the active coordinates.
    pub definite: bool,
}

impl ConvexityReport {
    pub fn energy_form(&self) -> Matrix4<f64> {
        self.kinetic_form + self.potential_form
    }
}

pub fn convexity_report(n: usize, ell: usize) -> Result<ConvexityReport> {
    check_n(n)?;
    if ell == 0 || ell > n / 2 {
        return invalid(format!("mode ell must lie in 1..={}, got {ell}", n / 2));
    }
    let spec = vertical_spectrum(n)?;
    let wl = spec.omegas[ell];
    let th = 2.0 * PI / n as f64;
    let basis = |j: usize| {
        let x = (j * ell) as f64 * th;
        nalgebra::Vector2::new(x.cos(), x.sin())
    };
    let mut kin = Matrix2::zeros();
    for j in 0..n {
        let h = basis(j);
        kin += h * h.transpose() * (0.5 * wl * wl);
    }
    // U = Σ 1/√(ρ² + Δz²) has second-order part −Σ Δz²/(2ρ³).
    let mut pot = Matrix2::zeros();
    for j in 0..n {
        for k in j + 1..n {
            let rho = 2.0 * (PI * (k - j) as f64 / n as f64).sin();
            let g = basis(j) - basis(k);
            pot += g * g.transpose() / (2.0 * rho.powi(3));
        }
    }
    let mut kinetic_form = Matrix4::zeros();
    let mut potential_form = Matrix4::zeros();
    for a in 0..2 {
        for b in 0..2 {
            potential_form[(a, b)] = pot[(a, b)];
            kinetic_form[(2 + a, 2 + b)] = kin[(a, b)];
        }
    }
    let active = if 2 * ell == n { vec![0, 2] } else { vec![0, 1, 2, 3] };
    // For ℓ = N/2 the sine coordinates vanish identically; clear their rounding noise.
    for m in [&mut kinetic_form, &mut potential_form] {
        for i in 0..4 {
            for j in 0..4 {
                if !active.contains(&i) || !active.contains(&j) {
                    m[(i, j)] = 0.0;
                }
            }
        }
    }
    let energy = kinetic_form + potential_form;
    let sub = DMatrix::from_fn(active.len(), active.len(), |i, j| energy[(active[i], active[j])]);
    let definite = sub.symmetric_eigenvalues().iter().all(|&e| e > 1e-12);
    Ok(ConvexityReport { n_bodies: n, ell, kinetic_form, potential_form, active, definite })
}
