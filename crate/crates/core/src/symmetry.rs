//! The symmetry group `G_{r/s}(N,k,η)` of the two-frequency Lyapunov
//! cylinders, its action on loops, and the derived classifications.
//!
//! An element is `(θ, δ, β, ξ)` with `θ ∈ ℝ/sℤ`, `δ ∈ ℤ/N`, `β ∈ ℤ/2`,
//! `ξ = ±1`, subject to `θ ≡ β/2 + kηδ/N (mod 1)`; the rotation angle
//! `α ≡ (r/s)θ − δ/N (mod 1)` is derived. It acts on loops of period `s` by
//!
//! `(g·x)_j(t) = ρ x_{ξ(j+δ)}(ξ(t − θ))`, `ρ(h, z) = (e^{2πiα} h̄^ξ, (−1)^β z)`,
//!
//! where `h̄^ξ` is `h` for `ξ = 1` and `conj(h)` for `ξ = −1`. All angles are
//! kept as exact integer numerators: `θ = theta_num/(2N)` and
//! `α = alpha_num/(2Ns)`.

use crate::error::{invalid, Error, Result};
use crate::path::{horizontal, point, FourierLoop, LoopPath};
use crate::spectrum::{check_mode, vertical_spectrum};
use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default sup-norm tolerance for invariance tests.
pub const INVARIANCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSpec {
    pub n_bodies: usize,
    pub k: usize,
    pub eta: i32,
    pub r: i64,
    pub s: i64,
}

impl GroupSpec {
    /// Validates the parameters; `η` is set to `+1` when `k = N/2`, where
    /// both signs describe the same group.
    pub fn new(n: usize, k: usize, eta: i32, r: i64, s: i64) -> Result<Self> {
        let eta = check_mode(n, k, eta)?;
        if s < 1 {
            return invalid(format!("s must be positive, got {s}"));
        }
        if r.gcd(&s) != 1 {
            return invalid(format!("r/s = {r}/{s} is not in lowest terms"));
        }
        Ok(Self { n_bodies: n, k, eta, r, s })
    }

    pub fn n(&self) -> i64 {
        self.n_bodies as i64
    }

    /// `kη` as a signed integer.
    pub fn k_eta(&self) -> i64 {
        self.k as i64 * self.eta as i64
    }

    /// Modulus of `theta_num`, i.e. `2Ns`.
    pub fn theta_modulus(&self) -> i64 {
        2 * self.n() * self.s
    }

    /// Loop period in units where `ω_k = 2π`.
    pub fn normalized_period(&self) -> f64 {
        self.s as f64
    }

    /// Loop period `2πs/ω_k` for the unit-circumradius N-gon.
    pub fn raw_period(&self) -> Result<f64> {
        let spec = vertical_spectrum(self.n_bodies)?;
        Ok(2.0 * PI * self.s as f64 / spec.omegas[self.k])
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement { theta_num: 0, delta: 0, beta: 0, xi: 1, alpha_num: 0, n: self.n(), s: self.s }
    }

    /// The element with the given `(θ·2N, δ, β, ξ)`, if it satisfies the
    /// defining congruence.
    pub fn element(&self, theta_num: i64, delta: i64, beta: i64, xi: i32) -> Result<GroupElement> {
        let n = self.n();
        let theta_num = theta_num.rem_euclid(self.theta_modulus());
        let delta = delta.rem_euclid(n);
        let beta = beta.rem_euclid(2);
        if xi != 1 && xi != -1 {
            return invalid("xi must be +1 or -1");
        }
        if (theta_num - n * beta - 2 * self.k_eta() * delta).rem_euclid(2 * n) != 0 {
            return invalid(format!(
                "theta = {theta_num}/{} violates the congruence for delta = {delta}, beta = {beta}",
                2 * n
            ));
        }
        let alpha_num = (self.r * theta_num - 2 * self.s * delta).rem_euclid(self.theta_modulus());
        Ok(GroupElement { theta_num, delta, beta, xi, alpha_num, n, s: self.s })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    /// `θ = theta_num / (2N)`, in `0..2Ns`.
    pub theta_num: i64,
    pub delta: i64,
    pub beta: i64,
    pub xi: i32,
    /// `α = alpha_num / (2Ns)`, in `0..2Ns`.
    pub alpha_num: i64,
    pub n: i64,
    pub s: i64,
}

impl GroupElement {
    pub fn theta(&self) -> f64 {
        self.theta_num as f64 / (2 * self.n) as f64
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_num as f64 / (2 * self.n * self.s) as f64
    }

    pub fn is_identity(&self) -> bool {
        self.theta_num == 0 && self.delta == 0 && self.beta == 0 && self.xi == 1
    }

    /// Whether `ρ` is the identity of ℝ³.
    pub fn trivial_rho(&self) -> bool {
        self.alpha_num == 0 && self.beta == 0 && self.xi == 1
    }
}

/// All `4Ns` elements, ordered by `(ξ, β, δ, θ)`.
pub fn enumerate_elements(spec: &GroupSpec) -> Vec<GroupElement> {
    let n = spec.n();
    let mut out = Vec::with_capacity((4 * n * spec.s) as usize);
    for xi in [1, -1] {
        for beta in 0..2 {
            for delta in 0..n {
                let base = (n * beta + 2 * spec.k_eta() * delta).rem_euclid(2 * n);
                for m in 0..spec.s {
                    let g = spec.element(base + 2 * n * m, delta, beta, xi).expect("satisfies congruence");
                    out.push(g);
                }
            }
        }
    }
    out
}

/// The product `g′g` (apply `g` first).
pub fn compose(spec: &GroupSpec, gp: &GroupElement, g: &GroupElement) -> GroupElement {
    let x = gp.xi as i64;
    spec.element(gp.theta_num + x * g.theta_num, gp.delta + x * g.delta, gp.beta + g.beta, gp.xi * g.xi)
        .expect("the group is closed")
}

pub fn inverse(spec: &GroupSpec, g: &GroupElement) -> GroupElement {
    let x = g.xi as i64;
    spec.element(-x * g.theta_num, -x * g.delta, g.beta, g.xi).expect("the group is closed")
}

pub fn element_order(spec: &GroupSpec, g: &GroupElement) -> usize {
    let mut acc = *g;
    let mut order = 1;
    while !acc.is_identity() {
        acc = compose(spec, g, &acc);
        order += 1;
    }
    order
}

fn generated(spec: &GroupSpec, gens: &[GroupElement]) -> Vec<GroupElement> {
    let mut set = vec![spec.identity()];
    let mut frontier = set.clone();
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = compose(spec, g, &x);
            if !set.contains(&y) {
                set.push(y);
                frontier.push(y);
            }
        }
    }
    set
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub order: usize,
    /// Order of the subgroup `H = {ξ = 1}`.
    pub h_order: usize,
    pub is_dihedral_times_z2: bool,
    /// `Ns` when `K = {β = 0, ξ = 1}` is cyclic.
    pub k_cyclic_order: Option<usize>,
}

pub fn structure_report(spec: &GroupSpec) -> StructureReport {
    let elems = enumerate_elements(spec);
    let h_order = elems.iter().filter(|g| g.xi == 1).count();
    let kset: Vec<&GroupElement> = elems.iter().filter(|g| g.xi == 1 && g.beta == 0).collect();
    let k_order = kset.len();
    let k_cyclic_order = kset.iter().any(|g| element_order(spec, g) == k_order).then_some(k_order);
    StructureReport {
        order: elems.len(),
        h_order,
        is_dihedral_times_z2: is_dihedral_times_z2(spec, &elems),
        k_cyclic_order,
    }
}

/// Searches for `r` of order N, an involution `f ∉ ⟨r⟩` with `f r f = r⁻¹`
/// and a central involution `c ∉ ⟨r, f⟩` generating a group of order `4N`.
fn is_dihedral_times_z2(spec: &GroupSpec, elems: &[GroupElement]) -> bool {
    let n = spec.n_bodies;
    if elems.len() != 4 * n {
        return false;
    }
    let involutions: Vec<&GroupElement> = elems.iter().filter(|g| element_order(spec, g) == 2).collect();
    let central: Vec<&&GroupElement> = involutions
        .iter()
        .filter(|c| elems.iter().all(|g| compose(spec, c, g) == compose(spec, g, c)))
        .collect();
    for rot in elems.iter().filter(|g| element_order(spec, g) == n) {
        let cyc = generated(spec, &[*rot]);
        let rinv = inverse(spec, rot);
        for f in involutions.iter().filter(|f| !cyc.contains(f)) {
            if compose(spec, f, &compose(spec, rot, f)) != rinv {
                continue;
            }
            let dn = generated(spec, &[*rot, **f]);
            if dn.len() != 2 * n {
                continue;
            }
            if central.iter().any(|c| !dn.contains(c) && generated(spec, &[*rot, **f, ***c]).len() == 4 * n) {
                return true;
            }
        }
    }
    false
}

fn check_loop(spec: &GroupSpec, lp: &LoopPath) -> Result<()> {
    if lp.n_bodies() != spec.n_bodies {
        return invalid(format!("loop has {} bodies, spec has {}", lp.n_bodies(), spec.n_bodies));
    }
    Ok(())
}

/// `g·x`. The loop period plays the role of `s`, so `θ` shifts time by
/// `θ·T/s`; this covers both normalized loops (`T = s`) and loops in the
/// time unit of the unit N-gon (`T = 2πs/ω_k`).
pub fn apply_element(g: &GroupElement, spec: &GroupSpec, lp: &LoopPath) -> Result<LoopPath> {
    check_loop(spec, lp)?;
    let n = spec.n();
    let tau = g.theta() * lp.period() / spec.s as f64;
    let base = if g.xi == 1 { lp.clone() } else { lp.reversed() };
    let moved = base.delayed(tau);
    let xi = g.xi as i64;
    let relabeled = moved.relabeled(|j| (xi * (j as i64 + g.delta)).rem_euclid(n) as usize);
    let rot = Complex64::from_polar(1.0, 2.0 * PI * g.alpha());
    let zsign = if g.beta == 0 { 1.0 } else { -1.0 };
    Ok(relabeled.map_points(|_, p| {
        let h = horizontal(p);
        let h = if g.xi == 1 { h } else { h.conj() };
        point(rot * h, zsign * p.z)
    }))
}

/// Largest sup-norm deviation `|g·x − x|` over the whole group.
pub fn invariance_defect(lp: &LoopPath, spec: &GroupSpec) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for g in enumerate_elements(spec) {
        worst = worst.max(apply_element(&g, spec, lp)?.max_deviation(lp)?);
    }
    Ok(worst)
}

pub fn is_invariant(lp: &LoopPath, spec: &GroupSpec, tol: f64) -> Result<bool> {
    Ok(invariance_defect(lp, spec)? <= tol)
}

/// Group average `(1/|G|) Σ g·x`, the orthogonal projection onto invariant loops.
pub fn average_over_group(lp: &LoopPath, spec: &GroupSpec) -> Result<LoopPath> {
    let elems = enumerate_elements(spec);
    let mut acc: Vec<Vec<crate::Vec3>> = vec![vec![crate::Vec3::zeros(); lp.n_bodies()]; lp.len()];
    for g in &elems {
        let y = apply_element(g, spec, lp)?;
        for (a, c) in acc.iter_mut().zip(y.samples()) {
            for (a, p) in a.iter_mut().zip(c) {
                *a += p;
            }
        }
    }
    let w = 1.0 / elems.len() as f64;
    LoopPath::new(lp.period(), acc.into_iter().map(|c| c.into_iter().map(|p| p * w).collect()).collect())
}

/// An allowed horizontal harmonic `l = r − 2ps`, with `a_l^j = e^{−2πi m j/N} A`,
/// `m = 2pkη − 1`, `A` real.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizontalMode {
    pub l: i64,
    pub p: i64,
    pub m: i64,
}

/// An allowed vertical harmonic `l = (2q+1)s`, `q ≥ 0`, with
/// `z_j ∋ c cos 2π(2q+1)(t + kηj/N)`, i.e. `b_l^j = (c/2) e^{2πi m j/N}`,
/// `m = (2q+1)kη`, `c` real.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerticalMode {
    pub l: i64,
    pub q: i64,
    pub m: i64,
}

/// Fourier description of the centre-of-mass-free invariant loops of
/// period `s`, truncated at `|l| ≤ l_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierConstraints {
    pub spec: GroupSpec,
    pub l_max: usize,
    pub horizontal: Vec<HorizontalMode>,
    pub vertical: Vec<VerticalMode>,
}

pub fn fourier_constraints(spec: &GroupSpec, l_max: usize) -> FourierConstraints {
    let n = spec.n();
    let (r, s, ke) = (spec.r, spec.s, spec.k_eta());
    let lm = l_max as i64;
    let mut horizontal = Vec::new();
    // r − 2ps ∈ [−l_max, l_max]
    let p_lo = (r - lm).div_euclid(2 * s) - 1;
    let p_hi = (r + lm).div_euclid(2 * s) + 1;
    for p in p_lo..=p_hi {
        let l = r - 2 * p * s;
        let m = 2 * p * ke - 1;
        if l.abs() <= lm && m.rem_euclid(n) != 0 {
            horizontal.push(HorizontalMode { l, p, m });
        }
    }
    horizontal.sort_by_key(|h| h.l);
    let mut vertical = Vec::new();
    let mut q = 0;
    while (2 * q + 1) * s <= lm {
        let m = (2 * q + 1) * ke;
        if m.rem_euclid(n) != 0 {
            vertical.push(VerticalMode { l: (2 * q + 1) * s, q, m });
        }
        q += 1;
    }
    FourierConstraints { spec: *spec, l_max, horizontal, vertical }
}

fn phase(m: i64, j: usize, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (m * j as i64).rem_euclid(n as i64) as f64 / n as f64)
}

impl FourierConstraints {
    pub fn dimension(&self) -> usize {
        self.horizontal.len() + self.vertical.len()
    }

    pub fn allows_horizontal(&self, l: i64) -> bool {
        self.horizontal.iter().any(|h| h.l == l)
    }

    pub fn allows_vertical(&self, l: i64) -> bool {
        self.vertical.iter().any(|v| v.l == l.abs())
    }

    /// Loop of period `s` with horizontal amplitudes `A` followed by
    /// vertical amplitudes `c`.
    pub fn build(&self, coords: &[f64]) -> Result<FourierLoop> {
        if coords.len() != self.dimension() {
            return invalid(format!("expected {} coordinates, got {}", self.dimension(), coords.len()));
        }
        let n = self.spec.n_bodies;
        let mut f = FourierLoop::zeros(self.spec.normalized_period(), n, self.l_max)?;
        let (ha, va) = coords.split_at(self.horizontal.len());
        for j in 0..n {
            for (h, a) in self.horizontal.iter().zip(ha) {
                f.set_horizontal(j, h.l, phase(-h.m, j, n) * *a)?;
            }
            for (v, c) in self.vertical.iter().zip(va) {
                f.set_vertical(j, v.l, phase(v.m, j, n) * (0.5 * c))?;
            }
        }
        Ok(f)
    }

    /// Least-squares coordinates of an arbitrary Fourier loop.
    pub fn coordinates(&self, f: &FourierLoop) -> Vec<f64> {
        let n = self.spec.n_bodies;
        let mut out = Vec::with_capacity(self.dimension());
        for h in &self.horizontal {
            let sum: Complex64 = (0..n).map(|j| f.horizontal(j, h.l) * phase(h.m, j, n)).sum();
            out.push(sum.re / n as f64);
        }
        for v in &self.vertical {
            let sum: Complex64 = (0..n).map(|j| f.vertical(j, v.l) * phase(-v.m, j, n)).sum();
            out.push(2.0 * sum.re / n as f64);
        }
        out
    }

    /// Orthogonal projection onto the constrained subspace.
    pub fn project(&self, f: &FourierLoop) -> Result<FourierLoop> {
        if (f.period() - self.spec.normalized_period()).abs() > 1e-12 {
            return invalid("constraints apply to loops of period s");
        }
        let mut out = self.build(&self.coordinates(f))?;
        if f.l_max() != self.l_max {
            let mut g = FourierLoop::zeros(f.period(), f.n_bodies(), f.l_max())?;
            for j in 0..f.n_bodies() {
                for l in -(f.l_max() as i64)..=f.l_max() as i64 {
                    g.set_horizontal(j, l, out.horizontal(j, l))?;
                    if l >= 0 {
                        g.set_vertical(j, l, out.vertical(j, l))?;
                    }
                }
            }
            out = g;
        }
        Ok(out)
    }
}

/// Closed-form criterion `s − kηr ≡ 0 (mod N)`.
pub fn is_simple_choreography(spec: &GroupSpec) -> bool {
    (spec.s - spec.k_eta() * spec.r).rem_euclid(spec.n()) == 0
}

/// Number of cycles of the body permutation `j ↦ j + δ (mod N)`.
pub fn cycle_count(n: usize, delta: i64) -> usize {
    let mut seen = vec![false; n];
    let mut cycles = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = (j as i64 + delta).rem_euclid(n as i64) as usize;
        }
    }
    cycles
}

/// Searches the group for an element acting trivially on ℝ³ whose body
/// permutation is a single N-cycle.
pub fn is_simple_choreography_bruteforce(spec: &GroupSpec) -> bool {
    enumerate_elements(spec)
        .iter()
        .any(|g| g.trivial_rho() && cycle_count(spec.n_bodies, g.delta) == 1)
}

/// Coprime `(r, s)` with `s ≤ max_denominator`, `r/s` in `window`, that
/// give simple choreographies, sorted by `r/s`.
pub fn dense_choreography_params(
    n: usize,
    k: usize,
    eta: i32,
    max_denominator: i64,
    window: (f64, f64),
) -> Result<Vec<(i64, i64)>> {
    let eta = check_mode(n, k, eta)?;
    if max_denominator < 1 {
        return invalid("max_denominator must be at least 1");
    }
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return invalid("window must be a finite interval");
    }
    let ke = k as i64 * eta as i64;
    let mut out = Vec::new();
    for s in 1..=max_denominator {
        let r_lo = (lo * s as f64).ceil() as i64;
        let r_hi = (hi * s as f64).floor() as i64;
        for r in r_lo..=r_hi {
            if r.gcd(&s) == 1 && (s - ke * r).rem_euclid(n as i64) == 0 {
                out.push((r, s));
            }
        }
    }
    out.sort_by(|a, b| (a.0 as f64 / a.1 as f64).total_cmp(&(b.0 as f64 / b.1 as f64)));
    Ok(out)
}

/// Relabelling `𝔖` identifying the actions of `spec` and `other`
/// (`s = s′ = 1`): if `x′` is invariant under `other` then
/// `x_j = x′_{𝔖(j)}` is invariant under `spec`.
pub fn find_isomorphism(spec: &GroupSpec, other: &GroupSpec) -> Result<Option<Vec<usize>>> {
    if spec.s != 1 || other.s != 1 {
        return Err(Error::Unsupported("relabelling criterion is only available for s = s' = 1".into()));
    }
    if spec.n_bodies != other.n_bodies {
        return Ok(None);
    }
    let n = spec.n();
    let diff = spec.r - other.r;
    if diff.rem_euclid(2) != 0 {
        return Ok(None);
    }
    let p = diff / 2;
    let (ke, ke2) = (spec.k_eta(), other.k_eta());
    if (-ke + ke2 - 2 * p * ke * ke2).rem_euclid(n) != 0 {
        return Ok(None);
    }
    let mult = 1 - 2 * p * ke;
    Ok(Some((0..n).map(|j| (mult * j).rem_euclid(n) as usize).collect()))
}
