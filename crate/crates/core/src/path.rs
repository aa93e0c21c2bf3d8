//! Periodic loops of N-body configurations, sampled or in Fourier form.
//!
//! Body positions live in ℝ³; the horizontal plane is identified with ℂ via
//! `h = x + i y`. Sampled loops are uniform in time over one period, and
//! spectral operations treat them as band-limited trigonometric
//! interpolants.

use crate::error::{invalid, Result};
use nalgebra::Vector3;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Vec3 = Vector3<f64>;

/// Horizontal component of a point as a complex number.
pub fn horizontal(p: &Vec3) -> Complex64 {
    Complex64::new(p.x, p.y)
}

/// Point with horizontal part `h` and height `z`.
pub fn point(h: Complex64, z: f64) -> Vec3 {
    Vec3::new(h.re, h.im, z)
}

/// A uniformly sampled `T`-periodic loop: `samples[m][j]` is body `j` at
/// time `m·T/M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopPath {
    period: f64,
    samples: Vec<Vec<Vec3>>,
}

impl LoopPath {
    pub fn new(period: f64, samples: Vec<Vec<Vec3>>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return invalid(format!("loop period must be positive, got {period}"));
        }
        let Some(first) = samples.first() else {
            return invalid("loop needs at least one sample");
        };
        let n = first.len();
        if n == 0 {
            return invalid("loop needs at least one body");
        }
        if samples.iter().any(|s| s.len() != n) {
            return invalid("every sample must hold the same number of bodies");
        }
        Ok(Self { period, samples })
    }

    /// Samples `f(t)` at `count` uniform times in `[0, period)`.
    pub fn from_fn(period: f64, count: usize, mut f: impl FnMut(f64) -> Vec<Vec3>) -> Result<Self> {
        if count == 0 {
            return invalid("sample count must be positive");
        }
        let dt = period / count as f64;
        let samples = (0..count).map(|m| f(m as f64 * dt)).collect();
        Self::new(period, samples)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of time samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_bodies(&self) -> usize {
        self.samples[0].len()
    }

    pub fn dt(&self) -> f64 {
        self.period / self.len() as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt()
    }

    pub fn samples(&self) -> &[Vec<Vec3>] {
        &self.samples
    }

    pub fn configuration(&self, m: usize) -> &[Vec3] {
        &self.samples[m]
    }

    /// Applies a Fourier multiplier to every coordinate of every body.
    ///
    /// `mult(l)` is evaluated at signed harmonics; for an even sample count
    /// the Nyquist bin receives the real part of `(mult(M/2) + mult(-M/2))/2`
    /// so that real signals stay real.
    fn spectral_map(&self, mult: impl Fn(i64) -> Complex64) -> Vec<Vec<Vec3>> {
        let m = self.len();
        let n = self.n_bodies();
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let factors: Vec<Complex64> = (0..m)
            .map(|idx| {
                let l = signed_harmonic(idx, m);
                if m % 2 == 0 && idx == m / 2 {
                    let half = (m / 2) as i64;
                    Complex64::new(0.5 * (mult(half) + mult(-half)).re, 0.0)
                } else {
                    mult(l)
                }
            })
            .collect();
        let mut out = vec![vec![Vec3::zeros(); n]; m];
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..n {
            for c in 0..3 {
                for (idx, b) in buf.iter_mut().enumerate() {
                    *b = Complex64::new(self.samples[idx][j][c], 0.0);
                }
                fwd.process(&mut buf);
                for (b, f) in buf.iter_mut().zip(&factors) {
                    *b *= f / m as f64;
                }
                inv.process(&mut buf);
                for (idx, b) in buf.iter().enumerate() {
                    out[idx][j][c] = b.re;
                }
            }
        }
        out
    }

    /// Spectral time derivative of the given order at every sample.
    pub fn derivative(&self, order: u32) -> Vec<Vec<Vec3>> {
        let w = 2.0 * PI / self.period;
        self.spectral_map(|l| Complex64::new(0.0, w * l as f64).powu(order))
    }

    pub fn velocities(&self) -> Vec<Vec<Vec3>> {
        self.derivative(1)
    }

    pub fn accelerations(&self) -> Vec<Vec<Vec3>> {
        self.derivative(2)
    }

    /// The loop `y(t) = x(t − τ)`. Exact index shift when `τ` is a multiple
    /// of the sample spacing, trigonometric interpolation otherwise.
    pub fn delayed(&self, tau: f64) -> LoopPath {
        let m = self.len();
        let shift = tau / self.dt();
        let rounded = shift.round();
        if (shift - rounded).abs() < 1e-9 {
            let d = rounded as i64;
            let samples = (0..m)
                .map(|idx| self.samples[(idx as i64 - d).rem_euclid(m as i64) as usize].clone())
                .collect();
            return LoopPath { period: self.period, samples };
        }
        let w = 2.0 * PI / self.period;
        let samples = self.spectral_map(|l| Complex64::from_polar(1.0, -w * l as f64 * tau));
        LoopPath { period: self.period, samples }
    }

    /// The loop `y(t) = x(−t)`.
    pub fn reversed(&self) -> LoopPath {
        let m = self.len();
        let samples = (0..m).map(|idx| self.samples[(m - idx) % m].clone()).collect();
        LoopPath { period: self.period, samples }
    }

    /// The loop `y_j = x_{map(j)}`; `map` must be a permutation of bodies.
    pub fn relabeled(&self, map: impl Fn(usize) -> usize) -> LoopPath {
        let n = self.n_bodies();
        let samples = self
            .samples
            .iter()
            .map(|conf| (0..n).map(|j| conf[map(j) % n]).collect())
            .collect();
        LoopPath { period: self.period, samples }
    }

    /// Applies `f(body, point)` pointwise.
    pub fn map_points(&self, f: impl Fn(usize, &Vec3) -> Vec3) -> LoopPath {
        let samples = self
            .samples
            .iter()
            .map(|conf| conf.iter().enumerate().map(|(j, p)| f(j, p)).collect())
            .collect();
        LoopPath { period: self.period, samples }
    }

    /// Sup-norm distance between two loops sampled on the same grid.
    pub fn max_deviation(&self, other: &LoopPath) -> Result<f64> {
        if self.len() != other.len() || self.n_bodies() != other.n_bodies() {
            return invalid("loops are sampled on different grids");
        }
        if (self.period - other.period).abs() > 1e-12 * self.period.max(1.0) {
            return invalid("loops have different periods");
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            for (p, q) in a.iter().zip(b) {
                worst = worst.max((p - q).amax());
            }
        }
        Ok(worst)
    }

    /// Fourier coefficients up to harmonic `l_max`.
    pub fn to_fourier(&self, l_max: usize) -> Result<FourierLoop> {
        let m = self.len();
        if m < 4 * l_max.max(1) {
            return invalid(format!("{m} samples cannot resolve harmonic {l_max}"));
        }
        let n = self.n_bodies();
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(m);
        let mut out = FourierLoop::zeros(self.period, n, l_max)?;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..n {
            for vertical in [false, true] {
                for (idx, b) in buf.iter_mut().enumerate() {
                    let p = &self.samples[idx][j];
                    *b = if vertical { Complex64::new(p.z, 0.0) } else { horizontal(p) };
                }
                fwd.process(&mut buf);
                for l in -(l_max as i64)..=l_max as i64 {
                    let c = buf[l.rem_euclid(m as i64) as usize] / m as f64;
                    let slot = (l + l_max as i64) as usize;
                    if vertical {
                        out.vertical[j][slot] = c;
                    } else {
                        out.horizontal[j][slot] = c;
                    }
                }
            }
        }
        Ok(out)
    }
}

fn signed_harmonic(idx: usize, m: usize) -> i64 {
    if idx <= m / 2 {
        idx as i64
    } else {
        idx as i64 - m as i64
    }
}

/// Fourier form of a `T`-periodic loop:
/// `h_j(t) = Σ_l a_l^j e^{2πi l t/T}`, `z_j(t) = Σ_l b_l^j e^{2πi l t/T}`
/// with `b_{-l} = conj(b_l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierLoop {
    period: f64,
    l_max: usize,
    horizontal: Vec<Vec<Complex64>>,
    vertical: Vec<Vec<Complex64>>,
}

impl FourierLoop {
    pub fn zeros(period: f64, n_bodies: usize, l_max: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return invalid(format!("loop period must be positive, got {period}"));
        }
        if n_bodies == 0 {
            return invalid("loop needs at least one body");
        }
        let width = 2 * l_max + 1;
        let zero = Complex64::new(0.0, 0.0);
        Ok(Self {
            period,
            l_max,
            horizontal: vec![vec![zero; width]; n_bodies],
            vertical: vec![vec![zero; width]; n_bodies],
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn n_bodies(&self) -> usize {
        self.horizontal.len()
    }

    fn slot(&self, l: i64) -> Option<usize> {
        (l.unsigned_abs() as usize <= self.l_max).then(|| (l + self.l_max as i64) as usize)
    }

    pub fn horizontal(&self, j: usize, l: i64) -> Complex64 {
        self.slot(l).map_or(Complex64::new(0.0, 0.0), |s| self.horizontal[j][s])
    }

    pub fn vertical(&self, j: usize, l: i64) -> Complex64 {
        self.slot(l).map_or(Complex64::new(0.0, 0.0), |s| self.vertical[j][s])
    }

    pub fn set_horizontal(&mut self, j: usize, l: i64, c: Complex64) -> Result<()> {
        let Some(s) = self.slot(l) else {
            return invalid(format!("harmonic {l} exceeds l_max = {}", self.l_max));
        };
        self.horizontal[j][s] = c;
        Ok(())
    }

    /// Sets `b_l` and keeps the loop real by setting `b_{-l} = conj(b_l)`.
    pub fn set_vertical(&mut self, j: usize, l: i64, c: Complex64) -> Result<()> {
        let (Some(s), Some(t)) = (self.slot(l), self.slot(-l)) else {
            return invalid(format!("harmonic {l} exceeds l_max = {}", self.l_max));
        };
        if l == 0 {
            self.vertical[j][s] = Complex64::new(c.re, 0.0);
        } else {
            self.vertical[j][s] = c;
            self.vertical[j][t] = c.conj();
        }
        Ok(())
    }

    /// Indices `l` with a nonzero horizontal or vertical coefficient for body `j`.
    pub fn support(&self, j: usize, tol: f64) -> (Vec<i64>, Vec<i64>) {
        let range = -(self.l_max as i64)..=self.l_max as i64;
        let h = range.clone().filter(|&l| self.horizontal(j, l).norm() > tol).collect();
        let v = range.filter(|&l| self.vertical(j, l).norm() > tol).collect();
        (h, v)
    }

    pub fn evaluate(&self, t: f64) -> Vec<Vec3> {
        let w = 2.0 * PI / self.period;
        (0..self.n_bodies())
            .map(|j| {
                let mut h = Complex64::new(0.0, 0.0);
                let mut z = Complex64::new(0.0, 0.0);
                for l in -(self.l_max as i64)..=self.l_max as i64 {
                    let e = Complex64::from_polar(1.0, w * l as f64 * t);
                    let s = (l + self.l_max as i64) as usize;
                    h += self.horizontal[j][s] * e;
                    z += self.vertical[j][s] * e;
                }
                point(h, z.re)
            })
            .collect()
    }

    pub fn sample(&self, count: usize) -> Result<LoopPath> {
        LoopPath::from_fn(self.period, count, |t| self.evaluate(t))
    }
}
