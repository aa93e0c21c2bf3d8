//! Lower bounds for the action on `G`-invariant loops and the frame
//! frequencies for which the relative equilibrium is the absolute minimizer.
//!
//! Frequencies are in normalized units (`ω_k = 2π`, period `s`). The
//! natural variable is `X = ϖ + 2πr/s`, the inertial rotation frequency of
//! the relative equilibrium seen in the frame of frequency `ϖ`.

use crate::error::{invalid, Result};
use crate::ngon::{build_ngon, NGonSystem};
use crate::path::LoopPath;
use crate::spectrum::VerticalSpectrum;
use crate::symmetry::GroupSpec;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default range of mode multipliers scanned by the brute-force oracle.
pub const DEFAULT_P_MAX: i64 = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub spec: GroupSpec,
    pub v: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    /// Guaranteed-minimizer interval for `ϖ + 2πr/s`.
    pub interval: (f64, f64),
}

fn check_match(spec: &GroupSpec, spectrum: &VerticalSpectrum) -> Result<()> {
    if spec.n_bodies != spectrum.n_bodies {
        return invalid("spectrum and group describe different N");
    }
    Ok(())
}

/// `V = inf_{p≥0} (ω₁/ω_{(1+2p)kη}) (1+2p) 2π`, skipping null subscripts.
pub fn vertical_bound_v(spec: &GroupSpec, spectrum: &VerticalSpectrum) -> Result<f64> {
    check_match(spec, spectrum)?;
    let w1 = spectrum.omega1();
    let floor = w1 / spectrum.omega_max();
    let mut best = f64::INFINITY;
    for p in 0.. {
        let odd = (1 + 2 * p) as f64;
        if odd * 2.0 * PI * floor >= best {
            break;
        }
        if let Some(w) = spectrum.omega((1 + 2 * p) * spec.k_eta()) {
            best = best.min(w1 / w * odd * 2.0 * PI);
        }
    }
    Ok(best)
}

/// One-sided horizontal bound; `sign = +1` gives `H₊`, `−1` gives `H₋`.
fn horizontal_bound(spec: &GroupSpec, spectrum: &VerticalSpectrum, sign: i64) -> f64 {
    let w1 = spectrum.omega1();
    let ke = spec.k_eta();
    let mut best = 4.0 * PI;
    for p in 1.. {
        let pf = p as f64;
        if 4.0 * pf * PI * w1 / (w1 + spectrum.omega_max()) >= best {
            break;
        }
        if let Some(w) = spectrum.omega(1 - 2 * sign * p * ke) {
            best = best.min(4.0 * pf * PI * w1 / (w1 + w));
        }
        if let Some(w) = spectrum.omega(1 + 2 * sign * p * ke) {
            let gap = w - w1;
            if gap > 1e-14 * w1 {
                best = best.min(4.0 * pf * PI * w1 / gap);
            }
        }
    }
    best
}

/// `(H₊, H₋)`.
pub fn horizontal_bounds_h(spec: &GroupSpec, spectrum: &VerticalSpectrum) -> Result<(f64, f64)> {
    check_match(spec, spectrum)?;
    Ok((horizontal_bound(spec, spectrum, 1), horizontal_bound(spec, spectrum, -1)))
}

pub fn absolute_interval(spec: &GroupSpec, spectrum: &VerticalSpectrum) -> Result<BoundReport> {
    let v = vertical_bound_v(spec, spectrum)?;
    let (h_plus, h_minus) = horizontal_bounds_h(spec, spectrum)?;
    Ok(BoundReport { spec: *spec, v, h_plus, h_minus, interval: (-v.min(h_minus), v.min(h_plus)) })
}

/// Smallest Poincaré quotient over the admissible vertical and horizontal
/// modes with `|p| ≤ p_max`, at `ϖ`. Equals 1 at `X = 0` where only the
/// rigid mode remains finite.
pub fn lambda_g_bruteforce(spec: &GroupSpec, spectrum: &VerticalSpectrum, varpi: f64, p_max: i64) -> Result<f64> {
    check_match(spec, spectrum)?;
    if p_max < 1 {
        return invalid("p_max must be at least 1");
    }
    let x = varpi + 2.0 * PI * spec.r as f64 / spec.s as f64;
    if x == 0.0 {
        return Ok(1.0);
    }
    let w1 = spectrum.omega1();
    let ke = spec.k_eta();
    let mut best = f64::INFINITY;
    for p in -p_max..=p_max {
        let odd = (1 + 2 * p) as f64;
        if let Some(w) = spectrum.omega((1 + 2 * p) * ke) {
            best = best.min((w1 / w * (odd * 2.0 * PI / x).abs()).powi(2));
        }
        if let Some(w) = spectrum.omega(1 - 2 * p * ke) {
            best = best.min((w1 / w * ((x - 4.0 * PI * p as f64) / x).abs()).powi(2));
        }
    }
    Ok(best)
}

/// Brute-force audit of an interval: `λ ≥ 1` at interior probes and `λ < 1`
/// at `offset` outside both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalCheck {
    pub interior_min: f64,
    pub exterior_max: f64,
    pub consistent: bool,
}

pub fn check_interval_bruteforce(
    spec: &GroupSpec,
    spectrum: &VerticalSpectrum,
    probes: usize,
    offset: f64,
    p_max: i64,
) -> Result<IntervalCheck> {
    if probes == 0 || !(offset > 0.0) {
        return invalid("need at least one probe and a positive offset");
    }
    let (lo, hi) = absolute_interval(spec, spectrum)?.interval;
    let nu = 2.0 * PI * spec.r as f64 / spec.s as f64;
    let lam = |x: f64| lambda_g_bruteforce(spec, spectrum, x - nu, p_max);
    let mut interior_min = f64::INFINITY;
    for i in 0..probes {
        interior_min = interior_min.min(lam(lo + (hi - lo) * (i as f64 + 0.5) / probes as f64)?);
    }
    let exterior_max = lam(lo - offset)?.max(lam(hi + offset)?);
    Ok(IntervalCheck { interior_min, exterior_max, consistent: interior_min >= 1.0 - 1e-12 && exterior_max < 1.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarActionParams {
    /// `μ̄_ij = 1/r̄_ij³` for the reference relative equilibrium.
    pub mu_bar: Vec<Vec<f64>>,
    pub u_bar: f64,
    pub lambda_g: f64,
}

impl BarActionParams {
    /// Weights of the N-gon rotating at inertial frequency `x`.
    pub fn for_relative_equilibrium(n: usize, x: f64, lambda_g: f64) -> Result<Self> {
        if !(lambda_g.is_finite() && lambda_g >= 0.0) {
            return invalid("lambda_G must be nonnegative");
        }
        let radius = crate::ngon::ngon_radius_for_frequency(n, x)?;
        let ngon = NGonSystem::with_circumradius(n, radius)?;
        let mu_bar = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { 0.0 } else { (ngon.vertex(i as i64) - ngon.vertex(j as i64)).norm().powi(-3) })
                    .collect()
            })
            .collect();
        Ok(Self { mu_bar, u_bar: ngon.potential(), lambda_g })
    }

    /// `g(s) = (λ/2)s + (ŪT)^{3/2} s^{−1/2}`.
    pub fn g(&self, s: f64, period: f64) -> f64 {
        0.5 * self.lambda_g * s + (self.u_bar * period).powf(1.5) / s.sqrt()
    }

    /// Minimizer and minimum of `g`: `(ŪT/λ^{2/3}, (3/2)λ^{1/3}ŪT)`. The two
    /// coincide with the relative-equilibrium values only at `λ = 1`.
    pub fn minimum(&self, period: f64) -> (f64, f64) {
        let l = self.lambda_g;
        let ut = self.u_bar * period;
        (ut / l.powf(2.0 / 3.0), 1.5 * l.powf(1.0 / 3.0) * ut)
    }
}

/// `ξ_ij = ∫ |x_i − x_j|² dt` by the trapezoid rule.
pub fn pair_moments(lp: &LoopPath) -> Vec<Vec<f64>> {
    let n = lp.n_bodies();
    let mut xi = vec![vec![0.0; n]; n];
    for conf in lp.samples() {
        for i in 0..n {
            for j in i + 1..n {
                let d = (conf[i] - conf[j]).norm_squared() * lp.dt();
                xi[i][j] += d;
                xi[j][i] += d;
            }
        }
    }
    xi
}

/// `g(Σ_{i<j} μ̄_ij ξ_ij)`.
pub fn bar_action(lp: &LoopPath, params: &BarActionParams, period: f64) -> Result<f64> {
    let n = lp.n_bodies();
    if params.mu_bar.len() != n {
        return invalid("weights and loop describe different N");
    }
    for conf in lp.samples() {
        crate::ngon::potential_of(conf)?;
    }
    let xi = pair_moments(lp);
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += params.mu_bar[i][j] * xi[i][j];
        }
    }
    Ok(params.g(s, period))
}

/// `inf_k ω₁/ω_k`, the bound on the Poincaré constant under the Italian symmetry.
pub fn italian_bound(spectrum: &VerticalSpectrum) -> f64 {
    spectrum.omega1() / spectrum.omega_max()
}

/// `(1 − (ω+ϖ)²)(ω_k/ω₁)²`, the vertical Hessian coefficient in units where
/// the reference frequency is 1.
pub fn hessian_vertical(n: usize, k: usize, omega: f64, varpi: f64) -> Result<f64> {
    let spectrum = crate::spectrum::vertical_spectrum(n)?;
    if k == 0 || k > n / 2 {
        return invalid(format!("mode k must lie in 1..={}", n / 2));
    }
    Ok((1.0 - (omega + varpi).powi(2)) * spectrum.ratio(k).powi(2))
}

/// Relative-equilibrium action `(ω+ϖ)^{2/3} (T/2π) a`, `a = 3πU₁ω₁^{−2/3}`,
/// where `U₁`, `ω₁` belong to the unit N-gon and `ω+ϖ` is the inertial frequency.
pub fn relative_equilibrium_action(n: usize, inertial: f64, period: f64) -> Result<f64> {
    let unit = build_ngon(n)?;
    let a = 3.0 * PI * unit.potential() * unit.omega1.powf(-2.0 / 3.0);
    Ok(inertial.abs().powf(2.0 / 3.0) * period / (2.0 * PI) * a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::vertical_spectrum;

    #[test]
    fn five_body_bounds() {
        let sp = vertical_spectrum(5).unwrap();
        let (w1, w2) = (sp.omegas[1], sp.omegas[2]);
        let chain = GroupSpec::new(5, 1, -1, 4, 1).unwrap();
        let rep = absolute_interval(&chain, &sp).unwrap();
        assert!((rep.v - 2.0 * PI).abs() < 1e-12);
        assert!((rep.h_plus - 4.0 * PI * w1 / (w1 + w2)).abs() < 1e-12);
        assert!((rep.h_minus - 2.0 * PI).abs() < 1e-12);
        let eight = GroupSpec::new(5, 2, -1, 2, 1).unwrap();
        let rep = absolute_interval(&eight, &sp).unwrap();
        assert!((rep.v - 2.0 * PI * w1 / w2).abs() < 1e-12);
        assert!((rep.h_plus - 4.0 * PI).abs() < 1e-12);
        assert!((rep.interval.1 - 2.0 * PI * w1 / w2).abs() < 1e-12);
    }

    #[test]
    fn bar_action_at_relative_equilibrium() {
        let p = BarActionParams::for_relative_equilibrium(4, 2.5, 0.7).unwrap();
        let (smin, gmin) = p.minimum(1.0);
        assert!((p.g(smin, 1.0) - gmin).abs() < 1e-12 * gmin);
        assert!(p.g(smin * 1.01, 1.0) > gmin && p.g(smin * 0.99, 1.0) > gmin);
    }

    #[test]
    fn hessian_roots() {
        assert!(hessian_vertical(5, 2, 0.4, 0.6).unwrap().abs() < 1e-15);
        assert!(hessian_vertical(5, 2, 0.4, -1.4).unwrap().abs() < 1e-15);
    }
}
