//! Third-order expansion of the vertical Lyapunov family at the resonant
//! relative equilibrium, and its torsion `γ` (the `ε²` coefficient of the
//! frame-frequency shift).
//!
//! Normalized units (`ω_k = 2π`). In the inertial frame body `j` follows
//!
//! `h_j = e^{i(w + γε²)t} Σ_{p∈{0,±1}} a_p e^{−4πipt} ζ^{j[p]}`,
//! `z_j = ε cos 2π(t + kηj/N) + C₃ε³ cos 6π(t + kηj/N)`,
//!
//! with `j[p] = −(2pkη − 1)j`, `a₀ = A₀ + αε²`, `a_{±1} = A_{±2}ε²`, and
//! `w = ±2πω₁/ω_k` the relative-equilibrium frequency on the prograde or
//! retrograde branch. Collecting the `ε²` horizontal and `ε³` vertical
//! equations of motion yields an affine system in `(α, A₂, A₋₂, C₃, γ)`.

use crate::error::{invalid, Error, Result};
use crate::ngon::{newton_residual, RotatingFrame};
use crate::path::{point, LoopPath, Vec3};
use crate::spectrum::vertical_spectrum;
use crate::symmetry::GroupSpec;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Time samples used to extract the Fourier components of the equations.
const SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Relative equilibrium rotating in the positive sense.
    Prograde,
    /// Relative equilibrium rotating in the negative sense.
    Retrograde,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Prograde => 1.0,
            Branch::Retrograde => -1.0,
        }
    }
}

/// Pairwise geometry of the reference N-gon of radius `A₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppendixGeometry {
    pub n_bodies: usize,
    /// `ζ^j − ζ^l`.
    pub r_vec: Vec<Vec<Complex64>>,
    /// `|ζ^j − ζ^l|`.
    pub rho: Vec<Vec<f64>>,
    /// `θ_{jl}` with `ζ^j − ζ^l = ρ_{jl} e^{4πiθ_{jl}}`.
    pub theta: Vec<Vec<f64>>,
    /// `A₀ ρ_{jl}`.
    pub a: Vec<Vec<f64>>,
    /// `sin²(2πkη(j − l)/2N) / A_{jl}`.
    pub b: Vec<Vec<f64>>,
    /// `Θ_{jl;p} = θ_{jl} − θ_{j[p]l[p]}` for `p = 1` and `p = −1` (indices 0, 1).
    pub big_theta: Vec<Vec<[f64; 2]>>,
    /// `j[p]` for `p = 1` and `p = −1`.
    pub jp_map: [Vec<usize>; 2],
}

fn zeta(n: usize, j: i64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * j.rem_euclid(n as i64) as f64 / n as f64)
}

fn jp(ke: i64, p: i64, j: i64, n: usize) -> usize {
    (-(2 * p * ke - 1) * j).rem_euclid(n as i64) as usize
}

pub fn appendix_geometry(spec: &GroupSpec, a0: f64) -> AppendixGeometry {
    let n = spec.n_bodies;
    let ke = spec.k_eta();
    let jp_map = [1i64, -1].map(|p| (0..n).map(|j| jp(ke, p, j as i64, n)).collect::<Vec<_>>());
    let mut r_vec = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut rho = vec![vec![0.0; n]; n];
    let mut theta = vec![vec![0.0; n]; n];
    for j in 0..n {
        for l in 0..n {
            let d = zeta(n, j as i64) - zeta(n, l as i64);
            r_vec[j][l] = d;
            rho[j][l] = d.norm();
            theta[j][l] = if j == l { 0.0 } else { d.arg() / (4.0 * PI) };
        }
    }
    let a: Vec<Vec<f64>> = rho.iter().map(|row| row.iter().map(|r| a0 * r).collect()).collect();
    let b = (0..n)
        .map(|j| {
            (0..n)
                .map(|l| {
                    if j == l {
                        0.0
                    } else {
                        let x = 2.0 * PI * (ke * (j as i64 - l as i64)) as f64 / (2 * n) as f64;
                        x.sin().powi(2) / a[j][l]
                    }
                })
                .collect()
        })
        .collect();
    let big_theta = (0..n)
        .map(|j| {
            (0..n)
                .map(|l| [0, 1].map(|i| theta[j][l] - theta[jp_map[i][j]][jp_map[i][l]]))
                .collect()
        })
        .collect();
    AppendixGeometry { n_bodies: n, r_vec, rho, theta, a, b, big_theta, jp_map }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unknown {
    Alpha,
    A2,
    Am2,
    C3,
    Gamma,
}

/// Fourier components of the `ε²` horizontal residual (`U`: constant,
/// `V`: `e^{4πit}`, `W`: `e^{−4πit}`) and of the `ε³` vertical residual
/// (`X`: `e^{2πit}`, `Y`: `e^{6πit}`), for body 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Equation {
    U,
    V,
    W,
    X,
    Y,
}

const ALL_UNKNOWNS: [Unknown; 5] = [Unknown::Alpha, Unknown::A2, Unknown::Am2, Unknown::C3, Unknown::Gamma];

/// `M u + c = 0` over the retained unknowns, rows in solve order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineSystem {
    pub spec: GroupSpec,
    pub branch: Branch,
    pub a0: f64,
    pub unknowns: Vec<Unknown>,
    pub equations: Vec<Equation>,
    pub matrix: Vec<Vec<f64>>,
    pub constant: Vec<f64>,
    /// Largest imaginary part discarded from the real components.
    pub max_imag: f64,
    /// Largest constant term of an equation removed with its unknown.
    pub dropped_residual: f64,
    /// Largest Fourier component outside the five retained ones.
    pub off_mode_residual: f64,
}

struct Setup {
    n: usize,
    ke: i64,
    w: f64,
    a0: f64,
    has_a2: bool,
    has_am2: bool,
    has_c3: bool,
}

fn setup(spec: &GroupSpec, branch: Branch) -> Result<Setup> {
    let sp = vertical_spectrum(spec.n_bodies)?;
    let (w1, wk) = (sp.omegas[1], sp.omegas[spec.k]);
    let w = branch.sign() * 2.0 * PI * w1 / wk;
    let n = spec.n_bodies;
    let ke = spec.k_eta();
    let nn = n as i64;
    Ok(Setup {
        n,
        ke,
        w,
        a0: (w1 / w.abs()).powf(2.0 / 3.0),
        has_a2: (2 * ke - 1).rem_euclid(nn) != 0,
        has_am2: (-2 * ke - 1).rem_euclid(nn) != 0,
        has_c3: (3 * ke).rem_euclid(nn) != 0,
    })
}

/// Components `(U, V, W, X, Y)` and the largest off-mode component, at
/// `u = (α, A₂, A₋₂, C₃, γ)`.
fn components(st: &Setup, u: [f64; 5]) -> ([Complex64; 5], f64) {
    let [al, a2, am2, c3, ga] = u;
    let (n, ke, w, a0) = (st.n, st.ke, st.w, st.a0);
    let amp = [(1i64, a2, st.has_a2), (-1i64, am2, st.has_am2)];
    let m = SAMPLES;
    let nf = n as f64;
    let mut hs = vec![Complex64::new(0.0, 0.0); m];
    let mut vs = vec![Complex64::new(0.0, 0.0); m];
    let j = 0i64;
    let zj = zeta(n, j);
    let phase_j = ke as f64 * j as f64 / nf;
    for (it, (h, v)) in hs.iter_mut().zip(vs.iter_mut()).enumerate() {
        let t = it as f64 / m as f64;
        let mut lhs = -(2.0 * w * ga * a0 + w * w * al) * zj;
        for &(p, ap, on) in &amp {
            if on {
                let e = Complex64::from_polar(1.0, -4.0 * PI * p as f64 * t);
                lhs -= ap * (w - 4.0 * PI * p as f64).powi(2) * e * zeta(n, jp(ke, p, j, n) as i64);
            }
        }
        let vl = -36.0 * PI * PI * c3 * (6.0 * PI * (t + phase_j)).cos();
        let mut rhs = Complex64::new(0.0, 0.0);
        let mut vr = 0.0;
        for l in 0..n as i64 {
            if l == j {
                continue;
            }
            let r = zeta(n, l) - zj;
            let rho2 = r.norm_sqr();
            let d0 = a0 * a0 * rho2;
            let phase_l = ke as f64 * l as f64 / nf;
            let dz = (2.0 * PI * (t + phase_l)).cos() - (2.0 * PI * (t + phase_j)).cos();
            let dz3 = (6.0 * PI * (t + phase_l)).cos() - (6.0 * PI * (t + phase_j)).cos();
            let mut d1 = 2.0 * a0 * al * rho2 + dz * dz;
            let mut pert = al * r;
            for &(p, ap, on) in &amp {
                if on {
                    let e = Complex64::from_polar(1.0, -4.0 * PI * p as f64 * t);
                    let rp = zeta(n, jp(ke, p, l, n) as i64) - zeta(n, jp(ke, p, j, n) as i64);
                    d1 += 2.0 * a0 * ap * (r.conj() * e * rp).re;
                    pert += ap * e * rp;
                }
            }
            rhs += pert * d0.powf(-1.5) - r * (1.5 * d0.powf(-2.5) * d1 * a0);
            vr += c3 * dz3 * d0.powf(-1.5) - 1.5 * dz * d0.powf(-2.5) * d1;
        }
        *h = lhs - rhs;
        *v = Complex64::new(vl - vr, 0.0);
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    fft.process(&mut hs);
    fft.process(&mut vs);
    let scale = 1.0 / m as f64;
    let get = |buf: &[Complex64], idx: i64| buf[idx.rem_euclid(m as i64) as usize] * scale;
    let comps = [get(&hs, 0), get(&hs, 2), get(&hs, -2), get(&vs, 1), get(&vs, 3)];
    let mut off: f64 = 0.0;
    for (idx, c) in hs.iter().enumerate() {
        if ![0, 2, m - 2].contains(&idx) {
            off = off.max(c.norm() * scale);
        }
    }
    for (idx, c) in vs.iter().enumerate() {
        if ![1, 3, m - 1, m - 3].contains(&idx) {
            off = off.max(c.norm() * scale);
        }
    }
    (comps, off)
}

pub fn build_equations(spec: &GroupSpec) -> Result<AffineSystem> {
    build_equations_branch(spec, Branch::Prograde)
}

pub fn build_equations_branch(spec: &GroupSpec, branch: Branch) -> Result<AffineSystem> {
    let st = setup(spec, branch)?;
    let (base, off) = components(&st, [0.0; 5]);
    let mut cols = Vec::with_capacity(5);
    let mut off_mode: f64 = off;
    for i in 0..5 {
        let mut e = [0.0; 5];
        e[i] = 1.0;
        let (c, o) = components(&st, e);
        off_mode = off_mode.max(o);
        cols.push([0, 1, 2, 3, 4].map(|q| c[q] - base[q]));
    }
    let present = [true, st.has_a2, st.has_am2, st.has_c3, true];
    // Solve order; each equation pivots on the unknown it determines.
    let order: [(Equation, usize, Unknown); 5] = [
        (Equation::U, 0, Unknown::Alpha),
        (Equation::V, 1, Unknown::Am2),
        (Equation::W, 2, Unknown::A2),
        (Equation::Y, 4, Unknown::C3),
        (Equation::X, 3, Unknown::Gamma),
    ];
    let idx_of = |u: Unknown| ALL_UNKNOWNS.iter().position(|&x| x == u).unwrap();
    let unknowns: Vec<Unknown> = order.iter().map(|o| o.2).filter(|&u| present[idx_of(u)]).collect();
    let mut equations = Vec::new();
    let mut matrix = Vec::new();
    let mut constant = Vec::new();
    let mut max_imag: f64 = 0.0;
    let mut dropped: f64 = 0.0;
    for &(eq, comp, unk) in &order {
        if !present[idx_of(unk)] {
            dropped = dropped.max(base[comp].norm());
            continue;
        }
        let row: Vec<f64> = unknowns
            .iter()
            .map(|&u| {
                let c = cols[idx_of(u)][comp];
                max_imag = max_imag.max(c.im.abs());
                c.re
            })
            .collect();
        max_imag = max_imag.max(base[comp].im.abs());
        equations.push(eq);
        matrix.push(row);
        constant.push(base[comp].re);
    }
    Ok(AffineSystem {
        spec: *spec,
        branch,
        a0: st.a0,
        unknowns,
        equations,
        matrix,
        constant,
        max_imag,
        dropped_residual: dropped,
        off_mode_residual: off_mode,
    })
}

impl AffineSystem {
    /// Gaussian elimination with the diagonal pivots fixed by the solve order.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let n = self.unknowns.len();
        let mut a = self.matrix.clone();
        let mut b: Vec<f64> = self.constant.iter().map(|c| -c).collect();
        for k in 0..n {
            let scale = a[k].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if !(a[k][k].abs() > 1e-10 * scale.max(1e-300)) {
                return Err(Error::Degenerate(format!(
                    "equation {:?} does not determine {:?}",
                    self.equations[k], self.unknowns[k]
                )));
            }
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                if f != 0.0 {
                    for c in k..n {
                        a[i][c] -= f * a[k][c];
                    }
                    b[i] -= f * b[k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|c| a[k][c] * x[c]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        Ok(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub spec: GroupSpec,
    pub branch: Branch,
    #[serde(rename = "A0")]
    pub a0: f64,
    pub alpha: f64,
    #[serde(rename = "A2")]
    pub a2: Option<f64>,
    #[serde(rename = "Am2")]
    pub am2: Option<f64>,
    #[serde(rename = "C3")]
    pub c3: Option<f64>,
    pub gamma: f64,
    /// Frame frequency `ϖ*` of the relative equilibrium at the bifurcation.
    pub varpi_star: f64,
}

pub fn torsion_gamma(spec: &GroupSpec) -> Result<ExpansionResult> {
    torsion_gamma_branch(spec, Branch::Prograde)
}

pub fn torsion_gamma_branch(spec: &GroupSpec, branch: Branch) -> Result<ExpansionResult> {
    let sys = build_equations_branch(spec, branch)?;
    let sol = sys.solve()?;
    let get = |u: Unknown| sys.unknowns.iter().position(|&x| x == u).map(|i| sol[i]);
    let st = setup(spec, branch)?;
    Ok(ExpansionResult {
        spec: *spec,
        branch,
        a0: sys.a0,
        alpha: get(Unknown::Alpha).expect("alpha is always solved"),
        a2: get(Unknown::A2),
        am2: get(Unknown::Am2),
        c3: get(Unknown::C3),
        gamma: get(Unknown::Gamma).expect("gamma is always solved"),
        varpi_star: st.w - 2.0 * PI * spec.r as f64 / spec.s as f64,
    })
}

impl ExpansionResult {
    /// `ϖ* + γε²`.
    pub fn varpi(&self, eps: f64) -> f64 {
        self.varpi_star + self.gamma * eps * eps
    }

    /// Rotating-frame positions and velocities of all bodies at time `t`,
    /// in the frame `ϖ(ε)`.
    pub fn state(&self, eps: f64, t: f64) -> (Vec<Vec3>, Vec<Vec3>) {
        let n = self.spec.n_bodies;
        let ke = self.spec.k_eta();
        let e2 = eps * eps;
        let nu = 2.0 * PI * self.spec.r as f64 / self.spec.s as f64;
        let terms = [
            (0i64, self.a0 + self.alpha * e2),
            (1, self.a2.unwrap_or(0.0) * e2),
            (-1, self.am2.unwrap_or(0.0) * e2),
        ];
        let c3 = self.c3.unwrap_or(0.0) * e2 * eps;
        let mut pos = Vec::with_capacity(n);
        let mut vel = Vec::with_capacity(n);
        for j in 0..n as i64 {
            let mut h = Complex64::new(0.0, 0.0);
            let mut hd = Complex64::new(0.0, 0.0);
            for &(p, a) in &terms {
                let f = nu - 4.0 * PI * p as f64;
                let e = Complex64::from_polar(a, f * t) * zeta(n, jp(ke, p, j, n) as i64);
                h += e;
                hd += e * Complex64::new(0.0, f);
            }
            let ph = 2.0 * PI * (t + ke as f64 * j as f64 / n as f64);
            let z = eps * ph.cos() + c3 * (3.0 * ph).cos();
            let zd = -2.0 * PI * eps * ph.sin() - 6.0 * PI * c3 * (3.0 * ph).sin();
            pos.push(point(h, z));
            vel.push(point(hd, zd));
        }
        (pos, vel)
    }

    /// The truncated expansion as a rotating-frame loop of period `s`.
    pub fn loop_path(&self, eps: f64, samples: usize) -> Result<LoopPath> {
        if samples < 8 {
            return invalid("need at least 8 samples");
        }
        LoopPath::from_fn(self.spec.s as f64, samples, |t| self.state(eps, t).0)
    }

    /// Sup-norm Newton residual of the truncated expansion in its frame.
    pub fn residual(&self, eps: f64, samples: usize) -> Result<f64> {
        let lp = self.loop_path(eps, samples)?;
        newton_residual(&lp, RotatingFrame::new(self.varpi(eps))?)
    }
}
