//! Equal-mass Newtonian N-body flow in a frame rotating at `ϖ` about the
//! vertical axis, optionally carrying tangent vectors of the variational
//! equation and the derivative with respect to `ϖ`.
//!
//! Flat state layout: positions `3N`, velocities `3N`, then each tangent
//! column as its own `6N` block in the same layout.

use crate::dop853::{Dop853, OdeSystem, Options};
use crate::error::{invalid, Result};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use unchained_core::ngon::{gravity, potential_of};
use unchained_core::{RotatingFrame, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

impl State {
    pub fn new(positions: Vec<Vec3>, velocities: Vec<Vec3>) -> Result<Self> {
        if positions.len() != velocities.len() || positions.is_empty() {
            return invalid("positions and velocities must be nonempty and of equal length");
        }
        Ok(Self { positions, velocities })
    }

    pub fn n_bodies(&self) -> usize {
        self.positions.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(6 * self.n_bodies());
        for p in self.positions.iter().chain(&self.velocities) {
            out.extend_from_slice(&[p.x, p.y, p.z]);
        }
        out
    }

    pub fn from_slice(n: usize, y: &[f64]) -> Self {
        let get = |b: usize| Vec3::new(y[3 * b], y[3 * b + 1], y[3 * b + 2]);
        Self { positions: (0..n).map(get).collect(), velocities: (n..2 * n).map(get).collect() }
    }

    pub fn max_deviation(&self, other: &State) -> f64 {
        self.to_vec().iter().zip(other.to_vec()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Jacobi integral `½|v|² − ½ϖ²|y_h|² − U`, conserved in the rotating frame.
pub fn energy(state: &State, frame: RotatingFrame) -> Result<f64> {
    let w2 = frame.varpi * frame.varpi;
    let mut e = -potential_of(&state.positions)?;
    for (y, v) in state.positions.iter().zip(&state.velocities) {
        e += 0.5 * v.norm_squared() - 0.5 * w2 * (y.x * y.x + y.y * y.y);
    }
    Ok(e)
}

/// Vertical component of the inertial angular momentum.
pub fn angular_momentum_z(state: &State, frame: RotatingFrame) -> f64 {
    let w = frame.varpi;
    state.positions.iter().zip(&state.velocities).map(|(y, v)| y.x * v.y - y.y * v.x + w * (y.x * y.x + y.y * y.y)).sum()
}

pub struct NBodyFlow {
    pub n_bodies: usize,
    pub frame: RotatingFrame,
    /// Number of `6N` tangent blocks after the base state.
    pub tangents: usize,
    /// When set, the last tangent block obeys the inhomogeneous equation of `∂/∂ϖ`.
    pub varpi_column: bool,
}

impl NBodyFlow {
    pub fn new(n_bodies: usize, frame: RotatingFrame) -> Self {
        Self { n_bodies, frame, tangents: 0, varpi_column: false }
    }

    pub fn with_tangents(mut self, tangents: usize, varpi_column: bool) -> Self {
        self.tangents = tangents;
        self.varpi_column = varpi_column;
        self
    }

    fn block(&self) -> usize {
        6 * self.n_bodies
    }
}

fn vec3(y: &[f64], b: usize) -> Vec3 {
    Vec3::new(y[3 * b], y[3 * b + 1], y[3 * b + 2])
}

fn put(dy: &mut [f64], b: usize, v: Vec3) {
    dy[3 * b] = v.x;
    dy[3 * b + 1] = v.y;
    dy[3 * b + 2] = v.z;
}

impl OdeSystem for NBodyFlow {
    fn dim(&self) -> usize {
        self.block() * (1 + self.tangents)
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.n_bodies;
        let w = self.frame.varpi;
        let pos: Vec<Vec3> = (0..n).map(|b| vec3(y, b)).collect();
        let vel: Vec<Vec3> = (n..2 * n).map(|b| vec3(y, b)).collect();
        let acc = gravity(&pos)?;
        for j in 0..n {
            put(dy, j, vel[j]);
            let (p, v) = (pos[j], vel[j]);
            put(dy, n + j, acc[j] + Vec3::new(2.0 * w * v.y + w * w * p.x, -2.0 * w * v.x + w * w * p.y, 0.0));
        }
        if self.tangents == 0 {
            return Ok(());
        }
        // ∂a_i/∂x_j = (I − 3d̂d̂ᵀ)/r³ for i ≠ j, d = x_j − x_i.
        let mut hess = vec![Matrix3::zeros(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = pos[j] - pos[i];
                let r2 = d.norm_squared();
                let m = (Matrix3::identity() - d * d.transpose() * (3.0 / r2)) / (r2 * r2.sqrt());
                hess[i * n + j] = m;
                hess[j * n + i] = m;
            }
        }
        let blk = self.block();
        for c in 0..self.tangents {
            let off = blk * (1 + c);
            let ty = &y[off..off + blk];
            let dpos: Vec<Vec3> = (0..n).map(|b| vec3(ty, b)).collect();
            let dvel: Vec<Vec3> = (n..2 * n).map(|b| vec3(ty, b)).collect();
            let out = &mut dy[off..off + blk];
            for i in 0..n {
                put(out, i, dvel[i]);
                let mut da = Vec3::zeros();
                for j in 0..n {
                    if j != i {
                        da += hess[i * n + j] * (dpos[j] - dpos[i]);
                    }
                }
                let (p, v) = (dpos[i], dvel[i]);
                da += Vec3::new(2.0 * w * v.y + w * w * p.x, -2.0 * w * v.x + w * w * p.y, 0.0);
                if self.varpi_column && c + 1 == self.tangents {
                    let (p, v) = (pos[i], vel[i]);
                    da += Vec3::new(2.0 * v.y + 2.0 * w * p.x, -2.0 * v.x + 2.0 * w * p.y, 0.0);
                }
                put(out, n + i, da);
            }
        }
        Ok(())
    }
}

/// Flow the state over `t` in the given frame.
pub fn integrate(state: &State, frame: RotatingFrame, t: f64, tol: f64) -> Result<State> {
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let flow = NBodyFlow::new(state.n_bodies(), frame);
    let (y, _) = crate::dop853::integrate(&flow, 0.0, &state.to_vec(), t, Options::with_tol(tol))?;
    Ok(State::from_slice(state.n_bodies(), &y))
}

/// Final state, images of the tangent columns, and `∂(final state)/∂ϖ` when requested.
pub struct Variational {
    pub state: State,
    pub tangents: Vec<Vec<f64>>,
    pub d_varpi: Option<Vec<f64>>,
}

/// Flow with tangents. The error control also covers the tangent blocks.
pub fn integrate_variational(
    state: &State,
    frame: RotatingFrame,
    t: f64,
    tol: f64,
    tangents: &[Vec<f64>],
    with_varpi: bool,
) -> Result<Variational> {
    let n = state.n_bodies();
    let blk = 6 * n;
    if tangents.iter().any(|c| c.len() != blk) {
        return invalid(format!("tangent columns must have length {blk}"));
    }
    let cols = tangents.len() + usize::from(with_varpi);
    let flow = NBodyFlow::new(n, frame).with_tangents(cols, with_varpi);
    let mut y0 = state.to_vec();
    for c in tangents {
        y0.extend_from_slice(c);
    }
    if with_varpi {
        y0.extend(std::iter::repeat(0.0).take(blk));
    }
    let (y, _) = crate::dop853::integrate(&flow, 0.0, &y0, t, Options::with_tol(tol))?;
    let block = |c: usize| y[blk * (1 + c)..blk * (2 + c)].to_vec();
    Ok(Variational {
        state: State::from_slice(n, &y),
        tangents: (0..tangents.len()).map(block).collect(),
        d_varpi: with_varpi.then(|| block(tangents.len())),
    })
}

/// States at `t_m = m·t/count` for `m = 0..count`.
pub fn sample(state: &State, frame: RotatingFrame, t: f64, count: usize, tol: f64) -> Result<Vec<State>> {
    if count == 0 {
        return invalid("need at least one sample");
    }
    let flow = NBodyFlow::new(state.n_bodies(), frame);
    let mut ig = Dop853::new(&flow, 0.0, &state.to_vec(), Options::with_tol(tol))?;
    let mut out = Vec::with_capacity(count);
    for m in 0..count {
        ig.advance_to(t * m as f64 / count as f64)?;
        out.push(State::from_slice(state.n_bodies(), ig.state()));
    }
    Ok(out)
}
