//! Configurations, the regular N-gon relative equilibrium and the basic
//! functionals of the Newtonian problem (G = 1).
//!
//! Rotating frames turn counterclockwise about the vertical axis: an
//! inertial path `x` is seen as `y = e^{-Jϖt} x`, where `J` is the quarter
//! turn acting on the horizontal plane only.

use crate::error::{invalid, Error, Result};
use crate::path::{horizontal, point, LoopPath, Vec3};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Pairwise distance below which two bodies count as colliding.
pub const COLLISION_DISTANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    positions: Vec<Vec3>,
    masses: Vec<f64>,
}

impl Configuration {
    pub fn new(positions: Vec<Vec3>, masses: Vec<f64>) -> Result<Self> {
        if positions.len() < 2 {
            return invalid(format!("need at least 2 bodies, got {}", positions.len()));
        }
        if masses.len() != positions.len() {
            return invalid("one mass per body is required");
        }
        if masses.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
            return invalid("masses must be positive");
        }
        Ok(Self { positions, masses })
    }

    pub fn equal_masses(positions: Vec<Vec3>) -> Result<Self> {
        let n = positions.len();
        Self::new(positions, vec![1.0; n])
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn n_bodies(&self) -> usize {
        self.positions.len()
    }

    pub fn center_of_mass(&self) -> Vec3 {
        let total: f64 = self.masses.iter().sum();
        self.positions
            .iter()
            .zip(&self.masses)
            .fold(Vec3::zeros(), |acc, (p, m)| acc + p * *m)
            / total
    }

    /// Same configuration translated so that the centre of mass is the origin.
    pub fn centered(&self) -> Self {
        let c = self.center_of_mass();
        Self {
            positions: self.positions.iter().map(|p| p - c).collect(),
            masses: self.masses.clone(),
        }
    }

    pub fn min_distance(&self) -> f64 {
        min_pair_distance(&self.positions)
    }

    /// `I = Σ m_i |x_i|²` about the origin.
    pub fn moment_of_inertia(&self) -> f64 {
        self.positions.iter().zip(&self.masses).map(|(p, m)| m * p.norm_squared()).sum()
    }
}

pub(crate) fn min_pair_distance(positions: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            best = best.min((positions[i] - positions[j]).norm());
        }
    }
    best
}

fn check_collision(positions: &[Vec3], threshold: f64) -> Result<()> {
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let d = (positions[i] - positions[j]).norm();
            if !(d >= threshold) {
                return Err(Error::Collision(format!("bodies {i} and {j} at distance {d:e}")));
            }
        }
    }
    Ok(())
}

/// `U = Σ_{i<j} m_i m_j / |x_i − x_j|`.
pub fn potential(config: &Configuration) -> Result<f64> {
    potential_with_threshold(config, COLLISION_DISTANCE)
}

pub fn potential_with_threshold(config: &Configuration, threshold: f64) -> Result<f64> {
    check_collision(&config.positions, threshold)?;
    let (x, m) = (&config.positions, &config.masses);
    let mut u = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            u += m[i] * m[j] / (x[i] - x[j]).norm();
        }
    }
    Ok(u)
}

/// Matrix of the vertical variational equation `z̈ = W z`: row `i` holds
/// `m_j / r_ij³` off the diagonal and minus their sum on it.
pub fn wintner_matrix(config: &Configuration) -> Result<DMatrix<f64>> {
    check_collision(&config.positions, COLLISION_DISTANCE)?;
    let n = config.n_bodies();
    let (x, m) = (&config.positions, &config.masses);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = m[j] / (x[i] - x[j]).norm().powi(3);
                w[(i, j)] = v;
                diag += v;
            }
        }
        w[(i, i)] = -diag;
    }
    Ok(w)
}

/// Equal-mass Newtonian accelerations `Σ_j (x_j − x_i)/|x_j − x_i|³`.
pub fn gravity(positions: &[Vec3]) -> Result<Vec<Vec3>> {
    check_collision(positions, COLLISION_DISTANCE)?;
    let n = positions.len();
    let mut acc = vec![Vec3::zeros(); n];
    for i in 0..n {
        for j in i + 1..n {
            let d = positions[j] - positions[i];
            let f = d / d.norm().powi(3);
            acc[i] += f;
            acc[j] -= f;
        }
    }
    Ok(acc)
}

/// Equal-mass potential of a bare list of positions.
pub fn potential_of(positions: &[Vec3]) -> Result<f64> {
    check_collision(positions, COLLISION_DISTANCE)?;
    let mut u = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            u += 1.0 / (positions[i] - positions[j]).norm();
        }
    }
    Ok(u)
}

/// The equal-mass regular N-gon `R·(1, ζ, …, ζ^{N−1})`, `ζ = e^{2πi/N}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NGonSystem {
    pub n_bodies: usize,
    pub circumradius: f64,
    /// `rho[k-1] = |ζ^k − 1|·R` for `k = 1..N−1`.
    pub rho: Vec<f64>,
    /// Angular frequency of the rigidly rotating N-gon of this radius.
    pub omega1: f64,
}

pub fn build_ngon(n: usize) -> Result<NGonSystem> {
    NGonSystem::with_circumradius(n, 1.0)
}

impl NGonSystem {
    pub fn with_circumradius(n: usize, radius: f64) -> Result<Self> {
        if n < 3 {
            return invalid(format!("the N-gon needs N >= 3, got {n}"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return invalid(format!("circumradius must be positive, got {radius}"));
        }
        let rho: Vec<f64> = (1..n).map(|k| 2.0 * (PI * k as f64 / n as f64).sin() * radius).collect();
        // N ω₁² R³ = Σ_{j<k} 1/|ζ^j − ζ^k|; by symmetry the sum is (N/2) Σ_k 1/ρ_k.
        let unit_sum: f64 = rho.iter().map(|r| radius / r).sum::<f64>() * n as f64 / 2.0;
        let omega1 = (unit_sum / n as f64 / radius.powi(3)).sqrt();
        Ok(Self { n_bodies: n, circumradius: radius, rho, omega1 })
    }

    /// `ζ^j` scaled by the circumradius.
    pub fn vertex(&self, j: i64) -> Complex64 {
        let n = self.n_bodies as f64;
        Complex64::from_polar(self.circumradius, 2.0 * PI * j as f64 / n)
    }

    pub fn configuration(&self) -> Configuration {
        let pos = (0..self.n_bodies as i64).map(|j| point(self.vertex(j), 0.0)).collect();
        Configuration::equal_masses(pos).expect("N-gon is a valid configuration")
    }

    /// Potential `U = N ω₁² R²` of the configuration.
    pub fn potential(&self) -> f64 {
        self.n_bodies as f64 * (self.omega1 * self.circumradius).powi(2)
    }
}

/// Radius of the unit-mass N-gon whose rigid rotation has inertial
/// frequency `inertial` (of either sign).
pub fn ngon_radius_for_frequency(n: usize, inertial: f64) -> Result<f64> {
    if !(inertial.is_finite() && inertial != 0.0) {
        return invalid("a rigidly rotating N-gon needs a nonzero frequency");
    }
    let unit = build_ngon(n)?;
    Ok((unit.omega1 / inertial.abs()).powf(2.0 / 3.0))
}

/// The relative equilibrium rotating at `omega` relative to `frame`, i.e. at
/// inertial frequency `omega + ϖ`, sampled over `period`.
pub fn relative_equilibrium_loop(
    n: usize,
    omega: f64,
    frame: RotatingFrame,
    period: f64,
    samples: usize,
) -> Result<LoopPath> {
    let radius = ngon_radius_for_frequency(n, omega + frame.varpi)?;
    let ngon = NGonSystem::with_circumradius(n, radius)?;
    LoopPath::from_fn(period, samples, |t| {
        let rot = Complex64::from_polar(1.0, omega * t);
        (0..n as i64).map(|j| point(ngon.vertex(j) * rot, 0.0)).collect()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatingFrame {
    pub varpi: f64,
}

impl RotatingFrame {
    pub fn new(varpi: f64) -> Result<Self> {
        if !varpi.is_finite() {
            return invalid("frame frequency must be finite");
        }
        Ok(Self { varpi })
    }

    pub fn inertial() -> Self {
        Self { varpi: 0.0 }
    }

    /// Rotating-frame view `e^{-Jϖt} x(t)` of an inertial loop.
    pub fn from_inertial(&self, lp: &LoopPath) -> LoopPath {
        self.rotate_by(lp, -self.varpi)
    }

    /// Inertial view `e^{Jϖt} y(t)` of a rotating-frame loop.
    pub fn to_inertial(&self, lp: &LoopPath) -> LoopPath {
        self.rotate_by(lp, self.varpi)
    }

    fn rotate_by(&self, lp: &LoopPath, rate: f64) -> LoopPath {
        let samples = lp
            .samples()
            .iter()
            .enumerate()
            .map(|(m, conf)| {
                let rot = Complex64::from_polar(1.0, rate * lp.time(m));
                conf.iter().map(|p| point(horizontal(p) * rot, p.z)).collect()
            })
            .collect();
        LoopPath::new(lp.period(), samples).expect("rotation preserves shape")
    }

    /// Rotating-frame acceleration of equal-mass bodies:
    /// `ÿ = F(y) − 2ϖJẏ + ϖ² y_h`.
    pub fn acceleration(&self, y: &[Vec3], v: &[Vec3]) -> Result<Vec<Vec3>> {
        let w = self.varpi;
        let mut a = gravity(y)?;
        for ((a, y), v) in a.iter_mut().zip(y).zip(v) {
            a.x += 2.0 * w * v.y + w * w * y.x;
            a.y += -2.0 * w * v.x + w * w * y.y;
        }
        Ok(a)
    }
}

/// The rotating-frame action `∫ ½|ẏ + Jϖy|² + U(y) dt` of an equal-mass
/// loop, by the trapezoid rule with spectral velocities.
pub fn action(lp: &LoopPath, frame: RotatingFrame) -> Result<f64> {
    let vel = lp.velocities();
    let w = frame.varpi;
    let mut total = 0.0;
    for (conf, v) in lp.samples().iter().zip(&vel) {
        let mut kinetic = 0.0;
        for (y, v) in conf.iter().zip(v) {
            let u = Vec3::new(v.x - w * y.y, v.y + w * y.x, v.z);
            kinetic += 0.5 * u.norm_squared();
        }
        total += kinetic + potential_of(conf)?;
    }
    Ok(total * lp.dt())
}

/// The rescaled solution `λ^{−2/3} x(λt)`, of period `T/λ`.
pub fn rescale(lp: &LoopPath, lambda: f64) -> Result<LoopPath> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return invalid(format!("rescaling factor must be positive, got {lambda}"));
    }
    let f = lambda.powf(-2.0 / 3.0);
    let samples = lp.samples().iter().map(|c| c.iter().map(|p| p * f).collect()).collect();
    LoopPath::new(lp.period() / lambda, samples)
}

/// Sup-norm defect of the rotating-frame equations of motion at the
/// samples, with spectral derivatives.
pub fn newton_residual(lp: &LoopPath, frame: RotatingFrame) -> Result<f64> {
    let vel = lp.velocities();
    let acc = lp.accelerations();
    let mut worst: f64 = 0.0;
    for ((conf, v), a) in lp.samples().iter().zip(&vel).zip(&acc) {
        let rhs = frame.acceleration(conf, v)?;
        for (a, r) in a.iter().zip(&rhs) {
            worst = worst.max((a - r).amax());
        }
    }
    Ok(worst)
}
