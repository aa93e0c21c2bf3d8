//! Symmetric shooting. Initial states are restricted to the subspace fixed
//! by every group element with `θ = 0` (the mirror at `t = 0` and the pure
//! spatial symmetries), with the centre of mass at rest at the origin. The
//! boundary condition is invariance under the element `g₀` of smallest
//! positive time shift `θ₀`: `X(θ₀) = P X(0)`. These elements generate G,
//! so a solution is G-invariant on the whole period.
//!
//! Unknowns are the coordinates `c` of `X(0)` in an orthonormal basis of
//! the fixed subspace, together with `ϖ`; one extra scalar equation pins
//! either `ϖ`, the height of body 0 at `t = 0`, or an arclength offset.

use crate::dynamics::{integrate_variational, sample, State};
use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use unchained_core::symmetry::{enumerate_elements, GroupElement, GroupSpec};
use unchained_core::RotatingFrame;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Local error per integrator step.
    pub integrator: f64,
    /// Sup-norm target for the boundary-condition residual.
    pub newton: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { integrator: 1e-12, newton: 1e-10, max_iterations: 25 }
    }
}

impl Tolerances {
    /// Newton target `tol` with the integrator two orders tighter, as set by `UNCHAINED_TOL`.
    pub fn uniform(tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol < 1e-3) {
            return invalid(format!("tolerance must lie in (0, 1e-3), got {tol}"));
        }
        Ok(Self { integrator: (tol * 1e-2).max(1e-14), newton: tol, ..Self::default() })
    }
}

/// Linear action of a symmetry element with `θ` ignored, on flat states:
/// `X_j ↦ ρ X_{ξ(j+δ)}`, `V_j ↦ ξ ρ V_{ξ(j+δ)}`.
pub fn element_matrix(spec: &GroupSpec, g: &GroupElement) -> DMatrix<f64> {
    let n = spec.n_bodies;
    let a = 2.0 * PI * g.alpha();
    let z = if g.beta == 0 { 1.0 } else { -1.0 };
    let mut rho = Matrix3::new(a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, z);
    if g.xi == -1 {
        rho *= Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 1.0));
    }
    let mut m = DMatrix::zeros(6 * n, 6 * n);
    for j in 0..n {
        let src = (g.xi as i64 * (j as i64 + g.delta)).rem_euclid(n as i64) as usize;
        for (blk, sign) in [(0, 1.0), (n, g.xi as f64)] {
            m.view_mut((3 * (blk + j), 3 * (blk + src)), (3, 3)).copy_from(&(rho * sign));
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootingSetup {
    pub spec: GroupSpec,
    /// Orthonormal columns spanning the admissible initial states.
    pub basis: DMatrix<f64>,
    pub shift: GroupElement,
    /// Time span `θ₀` in normalized units (period `s`).
    pub theta0: f64,
    pub image: DMatrix<f64>,
}

/// Index of the `z` coordinate of body 0 in the flat state.
pub const HEIGHT_INDEX: usize = 2;

pub fn shooting_setup(spec: &GroupSpec) -> Result<ShootingSetup> {
    let n = spec.n_bodies;
    let dim = 6 * n;
    let elems = enumerate_elements(spec);
    let fixing: Vec<&GroupElement> = elems.iter().filter(|g| g.theta_num == 0).collect();
    let mut q = DMatrix::zeros(dim, dim);
    for g in &fixing {
        q += element_matrix(spec, g);
    }
    q /= fixing.len() as f64;
    let mut cm = DMatrix::<f64>::identity(dim, dim);
    for blk in [0, n] {
        for i in 0..n {
            for j in 0..n {
                for c in 0..3 {
                    cm[(3 * (blk + i) + c, 3 * (blk + j) + c)] -= 1.0 / n as f64;
                }
            }
        }
    }
    let p = &q * &cm;
    let sym = (&p + p.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let cols: Vec<DVector<f64>> =
        (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).map(|i| eig.eigenvectors.column(i).into_owned()).collect();
    if cols.is_empty() {
        return Err(Error::SingularReduction("the fixed subspace is trivial".into()));
    }
    let basis = DMatrix::from_columns(&cols);
    let shift = elems
        .iter()
        .filter(|g| g.xi == 1 && g.theta_num > 0)
        .min_by_key(|g| (g.theta_num, g.delta, g.beta))
        .copied()
        .ok_or_else(|| Error::SingularReduction("no time-shift element".into()))?;
    Ok(ShootingSetup {
        spec: *spec,
        theta0: shift.theta_num as f64 / (2 * n) as f64,
        image: element_matrix(spec, &shift),
        basis,
        shift,
    })
}

/// The extra scalar equation closing the shooting system.
#[derive(Clone, Debug, PartialEq)]
pub enum Pin {
    Varpi(f64),
    /// Height `z₀(0)` of body 0.
    Height(f64),
    /// `τ·(u − u₀) = 0` in the unknowns `u = (c, ϖ)`.
    Arclength { point: DVector<f64>, tangent: DVector<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// `(c, ϖ)`.
    pub unknowns: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Jacobian of the boundary condition alone, `6N × (d + 1)`.
    pub jacobian: DMatrix<f64>,
}

impl ShootingSetup {
    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn unknowns_for(&self, state: &State, varpi: f64) -> DVector<f64> {
        let x = DVector::from_vec(state.to_vec());
        let c = self.basis.transpose() * x;
        let mut u = DVector::zeros(c.len() + 1);
        u.rows_mut(0, c.len()).copy_from(&c);
        u[c.len()] = varpi;
        u
    }

    pub fn state_of(&self, u: &DVector<f64>) -> State {
        let d = self.dimension();
        let x = &self.basis * u.rows(0, d);
        State::from_slice(self.spec.n_bodies, x.as_slice())
    }

    /// Boundary residual `X(θ₀) − P X(0)` and its Jacobian in `(c, ϖ)`.
    pub fn evaluate(&self, u: &DVector<f64>, tol: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let d = self.dimension();
        let varpi = u[d];
        let frame = RotatingFrame::new(varpi)?;
        let x0 = self.state_of(u);
        let cols: Vec<Vec<f64>> = (0..d).map(|i| self.basis.column(i).iter().copied().collect()).collect();
        let var = integrate_variational(&x0, frame, self.theta0, tol, &cols, true)?;
        let x1 = DVector::from_vec(var.state.to_vec());
        let px0 = &self.image * DVector::from_vec(x0.to_vec());
        let f = x1 - px0;
        let pb = &self.image * &self.basis;
        let mut jac = DMatrix::zeros(f.len(), d + 1);
        for (i, col) in var.tangents.iter().enumerate() {
            jac.set_column(i, &(DVector::from_column_slice(col) - pb.column(i)));
        }
        jac.set_column(d, &DVector::from_vec(var.d_varpi.expect("requested")));
        Ok((f, jac))
    }

    fn pin_row(&self, pin: &Pin, u: &DVector<f64>) -> (f64, DVector<f64>) {
        let d = self.dimension();
        match pin {
            Pin::Varpi(w) => {
                let mut row = DVector::zeros(d + 1);
                row[d] = 1.0;
                (u[d] - w, row)
            }
            Pin::Height(h) => {
                let mut row = DVector::zeros(d + 1);
                row.rows_mut(0, d).copy_from(&self.basis.row(HEIGHT_INDEX).transpose());
                (row.dot(u) - h, row)
            }
            Pin::Arclength { point, tangent } => (tangent.dot(&(u - point)), tangent.clone()),
        }
    }

    /// Gauss–Newton on the overdetermined system `[F(u); pin(u)] = 0`.
    pub fn solve(&self, guess: &DVector<f64>, pin: &Pin, tol: &Tolerances) -> Result<Solution> {
        let d = self.dimension();
        if guess.len() != d + 1 {
            return invalid(format!("expected {} unknowns, got {}", d + 1, guess.len()));
        }
        let mut u = guess.clone();
        let mut first = None;
        // Best converged iterate; one polishing step follows convergence, since
        // closure errors grow along the unstable directions over the full period.
        let mut converged: Option<(Solution, f64)> = None;
        for it in 0..=tol.max_iterations {
            let (f, jac) = self.evaluate(&u, tol.integrator)?;
            let (pv, prow) = self.pin_row(pin, &u);
            let res = f.amax().max(pv.abs());
            if !res.is_finite() {
                return Err(Error::NoConvergence { iterations: it, residual: res });
            }
            if let Some((best, best_res)) = converged {
                return Ok(if res < best_res {
                    Solution { unknowns: u, residual: f.amax(), iterations: best.iterations, jacobian: jac }
                } else {
                    best
                });
            }
            if res <= tol.newton {
                let sol = Solution { unknowns: u.clone(), residual: f.amax(), iterations: it, jacobian: jac.clone() };
                if res <= 1e-3 * tol.newton {
                    return Ok(sol);
                }
                converged = Some((sol, res));
            }
            let r0 = *first.get_or_insert(res);
            if converged.is_none() && (it == tol.max_iterations || res > 1e3 * r0.max(tol.newton)) {
                return Err(Error::NoConvergence { iterations: it, residual: res });
            }
            let m = f.len();
            let mut a = DMatrix::zeros(m + 1, d + 1);
            a.rows_mut(0, m).copy_from(&jac);
            a.set_row(m, &prow.transpose());
            let mut b = DVector::zeros(m + 1);
            b.rows_mut(0, m).copy_from(&(-&f));
            b[m] = -pv;
            // Relative cutoff: at a bifurcation the kernel direction must not
            // absorb a roundoff-sized residual divided by a roundoff-sized σ.
            let svd = a.svd(true, true);
            let cutoff = 1e-10 * svd.singular_values.max();
            let step = svd
                .solve(&b, cutoff)
                .map_err(|e| Error::SingularReduction(format!("least-squares step failed: {e}")))?;
            u += step;
        }
        converged.map(|(s, _)| s).ok_or(Error::NoConvergence { iterations: tol.max_iterations, residual: f64::NAN })
    }
}

/// A converged G-invariant orbit in the frame `ϖ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub spec: GroupSpec,
    pub varpi: f64,
    pub period: f64,
    pub initial_state: State,
    /// Signed first vertical harmonic of body 0.
    pub amplitude: f64,
    pub monodromy_mu: Option<f64>,
    /// Sup-norm of the boundary-condition defect.
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn frame(&self) -> RotatingFrame {
        RotatingFrame { varpi: self.varpi }
    }

    /// States at `m·T/count`.
    pub fn sample(&self, count: usize, tol: f64) -> Result<Vec<State>> {
        sample(&self.initial_state, self.frame(), self.period, count, tol)
    }
}

/// `2⟨z₀, cos 2πt⟩` over the period, from equispaced samples.
pub fn vertical_amplitude(states: &[State], period: f64) -> f64 {
    let m = states.len() as f64;
    states
        .iter()
        .enumerate()
        .map(|(i, s)| s.positions[0].z * (2.0 * PI * period * i as f64 / m).cos())
        .sum::<f64>()
        * 2.0
        / m
}

/// Sample count used to measure amplitudes and validate orbits: a multiple of
/// `2Ns` (so every group time shift is a whole number of samples), at least `min`.
pub fn sample_count(spec: &GroupSpec, min: usize) -> usize {
    let q = 2 * spec.n_bodies * spec.s as usize;
    min.div_ceil(q) * q
}

pub(crate) fn finish(setup: &ShootingSetup, sol: &Solution, tol: &Tolerances) -> Result<PeriodicOrbit> {
    let d = setup.dimension();
    let spec = setup.spec;
    let initial_state = setup.state_of(&sol.unknowns);
    let varpi = sol.unknowns[d];
    let period = spec.s as f64;
    let count = sample_count(&spec, 128);
    let states = sample(&initial_state, RotatingFrame::new(varpi)?, period, count, tol.integrator)?;
    let mut orbit = PeriodicOrbit {
        spec,
        varpi,
        period,
        amplitude: vertical_amplitude(&states, period),
        initial_state,
        monodromy_mu: None,
        residual: sol.residual,
    };
    orbit.monodromy_mu = crate::family::monodromy(&orbit, tol.integrator).ok();
    Ok(orbit)
}

/// Solve the symmetric boundary-value problem from a guess.
pub fn shoot_symmetric(spec: &GroupSpec, varpi: f64, guess: &State, pin: Pin, tol: &Tolerances) -> Result<PeriodicOrbit> {
    let setup = shooting_setup(spec)?;
    let sol = setup.solve(&setup.unknowns_for(guess, varpi), &pin, tol)?;
    finish(&setup, &sol, tol)
}
