//! Continuation of a Lyapunov family from its vertical bifurcation.
//!
//! The period is fixed at `s` (normalized units) and `ϖ` is an unknown.
//! The first record is the relative equilibrium at `ϖ*`; the next ones use the height of body 0 at `t = 0` as a natural
//! parameter, seeded by the small-amplitude expansion; later records use
//! secant pseudo-arclength in the unknowns `(c, ϖ)`.

use crate::dynamics::{angular_momentum_z, energy, integrate, State};
use crate::error::{invalid, Error, Result};
use crate::shooting::{finish, sample_count, shooting_setup, PeriodicOrbit, Pin, ShootingSetup, Solution, Tolerances};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use unchained_core::ngon::ngon_radius_for_frequency;
use unchained_core::path::{horizontal, LoopPath};
use unchained_core::spectrum::vertical_spectrum;
use unchained_core::symmetry::{invariance_defect, GroupSpec};
use unchained_core::torsion::{torsion_gamma_branch, Branch, ExpansionResult};
use unchained_core::RotatingFrame;

/// Sign of the amplitude along which the family is followed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub tol: Tolerances,
    /// Height of body 0 at the first natural step.
    pub initial_amplitude: f64,
    pub natural_steps: usize,
    pub max_step: f64,
    pub min_step: f64,
    pub max_halvings: usize,
    pub max_records: usize,
    pub varpi_range: (f64, f64),
    /// Minimum number of samples for validation.
    pub samples: usize,
    pub invariance_tol: f64,
    pub newton_residual_tol: f64,
    pub lz_tol: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            initial_amplitude: 0.01,
            natural_steps: 5,
            max_step: 0.25,
            min_step: 1e-6,
            max_halvings: 12,
            max_records: 30,
            varpi_range: (f64::NEG_INFINITY, f64::INFINITY),
            samples: 512,
            invariance_tol: 1e-6,
            newton_residual_tol: 1e-8,
            lz_tol: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub invariance_defect: f64,
    /// Sup-norm defect of the first-order equations of motion, `|Dy − v|`
    /// and `|Dv − a(y, v)|` with spectral `D`.
    pub newton_residual: f64,
    pub lz_drift: f64,
    pub energy_drift: f64,
    pub min_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub arclength: f64,
    pub varpi: f64,
    pub amplitude: f64,
    pub action: f64,
    pub period: f64,
    pub angular_momentum_z: f64,
    pub diagnostics: Diagnostics,
    pub orbit: PeriodicOrbit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EndReason {
    RecordLimit,
    VarpiRange { varpi: f64 },
    StepUnderflow { detail: String },
    Collision { detail: String },
    Validation { detail: String },
}

impl std::fmt::Display for EndReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EndReason::RecordLimit => write!(f, "record limit reached"),
            EndReason::VarpiRange { varpi } => write!(f, "frame frequency {varpi} left the requested range"),
            EndReason::StepUnderflow { detail } => write!(f, "step size underflow: {detail}"),
            EndReason::Collision { detail } => write!(f, "collision: {detail}"),
            EndReason::Validation { detail } => write!(f, "validation failed: {detail}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub spec: GroupSpec,
    pub branch: Branch,
    pub direction: Direction,
    pub varpi_star: f64,
    /// Torsion of the seeding expansion, when its linear system was solvable.
    pub gamma: Option<f64>,
    pub records: Vec<FamilyRecord>,
    pub end: EndReason,
}

/// Rotation per vertical period `2π/ω` (one time unit here) of the inertial
/// configuration, as a fraction of a turn in `[0, 1)`. The angle comes from
/// the Procrustes fit `arg Σ h̄_j(0) h_j(1)` of the horizontal positions.
pub fn monodromy(orbit: &PeriodicOrbit, tol: f64) -> Result<f64> {
    let x0 = &orbit.initial_state;
    let x1 = integrate(x0, orbit.frame(), 1.0, tol)?;
    let turn = Complex64::from_polar(1.0, orbit.varpi);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut weight = 0.0;
    for (a, b) in x0.positions.iter().zip(&x1.positions) {
        let (ha, hb) = (horizontal(a), horizontal(b) * turn);
        acc += ha.conj() * hb;
        weight += ha.norm() * hb.norm();
    }
    if weight < 1e-12 || acc.norm() < 1e-9 * weight {
        return Err(Error::SingularReduction("configuration has no horizontal extent to track".into()));
    }
    Ok((acc.arg() / (2.0 * PI)).rem_euclid(1.0))
}

/// Trapezoid-rule action from equispaced states of a periodic orbit.
pub fn action_of_samples(states: &[State], frame: RotatingFrame, period: f64) -> Result<f64> {
    let w = frame.varpi;
    let dt = period / states.len() as f64;
    let mut total = 0.0;
    for s in states {
        total += unchained_core::ngon::potential_of(&s.positions)?;
        for (y, v) in s.positions.iter().zip(&s.velocities) {
            total += 0.5 * ((v.x - w * y.y).powi(2) + (v.y + w * y.x).powi(2) + v.z * v.z);
        }
    }
    Ok(total * dt)
}

fn states_to_loop(states: &[State], period: f64) -> Result<LoopPath> {
    Ok(LoopPath::new(period, states.iter().map(|s| s.positions.clone()).collect())?)
}

/// First-order form avoids the `(πM/T)²` amplification of sample noise that
/// a spectral second derivative would bring.
pub fn first_order_residual(states: &[State], frame: RotatingFrame, period: f64) -> Result<f64> {
    let pos = states_to_loop(states, period)?;
    let vel = LoopPath::new(period, states.iter().map(|s| s.velocities.clone()).collect())?;
    let dpos = pos.velocities();
    let dvel = vel.velocities();
    let mut worst: f64 = 0.0;
    for (m, s) in states.iter().enumerate() {
        let acc = frame.acceleration(&s.positions, &s.velocities)?;
        for j in 0..s.positions.len() {
            worst = worst.max((dpos[m][j] - s.velocities[j]).amax()).max((dvel[m][j] - acc[j]).amax());
        }
    }
    Ok(worst)
}

/// Sample an orbit and measure every invariant the continuation promises.
pub fn validate(orbit: &PeriodicOrbit, samples: usize, tol: f64) -> Result<(Diagnostics, f64, Vec<State>)> {
    let count = sample_count(&orbit.spec, samples);
    let states = orbit.sample(count, tol)?;
    let frame = orbit.frame();
    let lp = states_to_loop(&states, orbit.period)?;
    let (mut lz_min, mut lz_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut e_min, mut e_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut min_distance = f64::INFINITY;
    for s in &states {
        let l = angular_momentum_z(s, frame);
        let e = energy(s, frame)?;
        lz_min = lz_min.min(l);
        lz_max = lz_max.max(l);
        e_min = e_min.min(e);
        e_max = e_max.max(e);
        for i in 0..s.positions.len() {
            for j in i + 1..s.positions.len() {
                min_distance = min_distance.min((s.positions[i] - s.positions[j]).norm());
            }
        }
    }
    let diag = Diagnostics {
        invariance_defect: invariance_defect(&lp, &orbit.spec)?,
        newton_residual: first_order_residual(&states, frame, orbit.period)?,
        lz_drift: lz_max - lz_min,
        energy_drift: e_max - e_min,
        min_distance,
    };
    Ok((diag, action_of_samples(&states, frame, orbit.period)?, states))
}

/// Expansion used to seed the family; falls back to the linear cylinder
/// (no corrections) when the second-order system is degenerate.
pub fn seed_expansion(spec: &GroupSpec, branch: Branch) -> Result<(ExpansionResult, Option<f64>)> {
    match torsion_gamma_branch(spec, branch) {
        Ok(e) => {
            let g = e.gamma;
            Ok((e, Some(g)))
        }
        Err(unchained_core::Error::Degenerate(_)) => {
            let sp = vertical_spectrum(spec.n_bodies)?;
            let ratio = sp.omega1() / sp.omegas[sp.reduce(spec.k_eta())];
            let inertial = branch.sign() * 2.0 * PI * ratio;
            let nu = 2.0 * PI * spec.r as f64 / spec.s as f64;
            let e = ExpansionResult {
                spec: *spec,
                branch,
                a0: ngon_radius_for_frequency(spec.n_bodies, inertial)?,
                alpha: 0.0,
                a2: None,
                am2: None,
                c3: None,
                gamma: 0.0,
                varpi_star: inertial - nu,
            };
            Ok((e, None))
        }
        Err(e) => Err(e.into()),
    }
}

struct Tracker<'a> {
    setup: &'a ShootingSetup,
    controls: &'a Controls,
    records: Vec<FamilyRecord>,
    unknowns: Vec<DVector<f64>>,
}

impl Tracker<'_> {
    /// Validate and store a solution; `Err` carries the end reason.
    fn accept(&mut self, sol: &Solution, pin: &Pin) -> std::result::Result<(), EndReason> {
        let c = self.controls;
        let d = self.setup.dimension();
        let varpi = sol.unknowns[d];
        if !(c.varpi_range.0..=c.varpi_range.1).contains(&varpi) {
            return Err(EndReason::VarpiRange { varpi });
        }
        let mut sol = sol.clone();
        let mut orbit = finish(self.setup, &sol, &c.tol).map_err(end_reason)?;
        let (mut diag, mut action, mut states) = validate(&orbit, c.samples, c.tol.integrator).map_err(end_reason)?;
        // A closure jump δ shows up as roughly δ·samples in the spectral
        // residual; near close approaches it pays to re-polish the solution.
        if diag.newton_residual > c.newton_residual_tol && c.tol.integrator > 1e-14 {
            let tight = Tolerances { integrator: 1e-14, ..c.tol };
            if let Ok(polished) = self.setup.solve(&sol.unknowns, pin, &tight) {
                let o = finish(self.setup, &polished, &tight).map_err(end_reason)?;
                let v = validate(&o, c.samples, tight.integrator).map_err(end_reason)?;
                if v.0.newton_residual < diag.newton_residual {
                    (sol, orbit) = (polished, o);
                    (diag, action, states) = v;
                }
            }
        }
        if diag.invariance_defect > c.invariance_tol
            || diag.newton_residual > c.newton_residual_tol
            || diag.lz_drift > c.lz_tol
        {
            return Err(EndReason::Validation { detail: format!("{diag:?} at varpi = {varpi}") });
        }
        let arclength = match (self.records.last(), self.unknowns.last()) {
            (Some(r), Some(u)) => r.arclength + (&sol.unknowns - u).norm(),
            _ => 0.0,
        };
        self.records.push(FamilyRecord {
            arclength,
            varpi,
            amplitude: orbit.amplitude,
            action,
            period: orbit.period,
            angular_momentum_z: angular_momentum_z(&states[0], orbit.frame()),
            diagnostics: diag,
            orbit,
        });
        self.unknowns.push(sol.unknowns);
        Ok(())
    }
}

fn end_reason(e: Error) -> EndReason {
    match e {
        Error::Collision { .. } | Error::Core(unchained_core::Error::Collision(_)) => {
            EndReason::Collision { detail: e.to_string() }
        }
        other => EndReason::StepUnderflow { detail: other.to_string() },
    }
}

/// Follow the family bifurcating from the relative equilibrium of the given
/// branch, with amplitude sign `direction`.
pub fn continue_family(spec: &GroupSpec, branch: Branch, direction: Direction, controls: &Controls) -> Result<Family> {
    if controls.natural_steps < 2 || !(controls.initial_amplitude > 0.0) {
        return invalid("continuation needs at least two natural steps of positive amplitude");
    }
    if controls.max_records == 0 {
        return invalid("max_records must be at least 1");
    }
    let setup = shooting_setup(spec)?;
    let (exp, gamma) = seed_expansion(spec, branch)?;
    let sign = direction.sign();
    let mut tr = Tracker { setup: &setup, controls, records: Vec::new(), unknowns: Vec::new() };
    let done = |tr: Tracker, end: EndReason| Family {
        spec: *spec,
        branch,
        direction,
        varpi_star: exp.varpi_star,
        gamma,
        records: tr.records,
        end,
    };

    // Onset record: the relative equilibrium at the bifurcation.
    let (pos, vel) = exp.state(0.0, 0.0);
    let onset = setup.unknowns_for(&State::new(pos, vel)?, exp.varpi_star);
    let pin = Pin::Varpi(exp.varpi_star);
    let sol = setup.solve(&onset, &pin, &controls.tol)?;
    if let Err(end) = tr.accept(&sol, &pin) {
        return Ok(done(tr, end));
    }

    for i in 1..=controls.natural_steps {
        if tr.records.len() >= controls.max_records {
            return Ok(done(tr, EndReason::RecordLimit));
        }
        let eps = sign * controls.initial_amplitude * i as f64;
        let (pos, vel) = exp.state(eps, 0.0);
        let guess_state = State::new(pos, vel)?;
        let guess = setup.unknowns_for(&guess_state, exp.varpi(eps));
        let height = guess_state.positions[0].z;
        let pin = Pin::Height(height);
        let sol = match setup.solve(&guess, &pin, &controls.tol) {
            Ok(s) => s,
            Err(e) => {
                if tr.records.len() >= 3 {
                    break;
                }
                return Err(e);
            }
        };
        if let Err(end) = tr.accept(&sol, &pin) {
            return Ok(done(tr, end));
        }
    }

    let n = tr.unknowns.len();
    let mut h = (&tr.unknowns[n - 1] - &tr.unknowns[n - 2]).norm();
    let mut halvings = 0;
    while tr.records.len() < controls.max_records {
        let n = tr.unknowns.len();
        let (prev, last) = (&tr.unknowns[n - 2], &tr.unknowns[n - 1]);
        let tangent = (last - prev).normalize();
        let point = last + &tangent * h;
        let pin = Pin::Arclength { point: point.clone(), tangent };
        match setup.solve(&point, &pin, &controls.tol) {
            Ok(sol) => {
                if let Err(end) = tr.accept(&sol, &pin) {
                    return Ok(done(tr, end));
                }
                if sol.iterations <= 3 {
                    h = (1.5 * h).min(controls.max_step);
                }
                halvings = 0;
            }
            Err(e) => {
                halvings += 1;
                h *= 0.5;
                if halvings > controls.max_halvings || h < controls.min_step {
                    return Ok(done(tr, end_reason(e)));
                }
            }
        }
    }
    Ok(done(tr, EndReason::RecordLimit))
}

/// Run independent families on up to `jobs` threads. Results keep the input order.
pub fn continue_families(
    tasks: &[(GroupSpec, Branch, Direction)],
    controls: &Controls,
    jobs: usize,
) -> Vec<Result<Family>> {
    let jobs = jobs.max(1).min(tasks.len().max(1));
    let mut out: Vec<Option<Result<Family>>> = (0..tasks.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = tasks.len().div_ceil(jobs).max(1);
        let handles: Vec<_> = tasks
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || part.iter().map(|(s, b, d)| continue_family(s, *b, *d, controls)).collect::<Vec<_>>())
            })
            .collect();
        let mut i = 0;
        for h in handles {
            for r in h.join().expect("continuation thread panicked") {
                out[i] = Some(r);
                i += 1;
            }
        }
    });
    out.into_iter().map(|r| r.expect("every task ran")).collect()
}

/// Least-squares fit of `ϖ` and the action as quadratics in `ε²` near onset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnsetFit {
    pub varpi0: f64,
    pub gamma_fd: f64,
    pub action0: f64,
    pub records_used: usize,
}

pub fn fit_onset(family: &Family, max_amplitude: f64) -> Result<OnsetFit> {
    let pts: Vec<&FamilyRecord> = family.records.iter().filter(|r| r.amplitude.abs() <= max_amplitude).collect();
    if pts.len() < 3 {
        return invalid(format!("need at least 3 records with |amplitude| <= {max_amplitude}, have {}", pts.len()));
    }
    let a = DMatrix::from_fn(pts.len(), 3, |i, j| pts[i].amplitude.powi(2 * j as i32));
    let svd = a.svd(true, true);
    let fit = |y: DVector<f64>| svd.solve(&y, 1e-15).map_err(|e| Error::SingularReduction(e.to_string()));
    let w = fit(DVector::from_iterator(pts.len(), pts.iter().map(|r| r.varpi)))?;
    let act = fit(DVector::from_iterator(pts.len(), pts.iter().map(|r| r.action)))?;
    Ok(OnsetFit { varpi0: w[0], gamma_fd: w[1], action0: act[0], records_used: pts.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionCheck {
    pub gamma: f64,
    pub gamma_fd: f64,
    /// `|γ_fd − γ|/|γ|`, or the absolute difference when `γ = 0`.
    pub relative_error: f64,
}

/// Compare a torsion from the expansion with the slope of `ϖ` against `ε²` along the
/// continued family.
pub fn verify_against_continuation(spec: &GroupSpec, branch: Branch, gamma: f64, controls: &Controls) -> Result<TorsionCheck> {
    let mut c = controls.clone();
    c.max_records = c.natural_steps + 1;
    let fam = continue_family(spec, branch, Direction::Positive, &c)?;
    let fit = fit_onset(&fam, f64::INFINITY)?;
    let diff = (fit.gamma_fd - gamma).abs();
    Ok(TorsionCheck { gamma, gamma_fd: fit.gamma_fd, relative_error: if gamma == 0.0 { diff } else { diff / gamma.abs() } })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagramBranch {
    Family,
    RelativeEquilibrium,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramRow {
    pub branch: DiagramBranch,
    pub varpi: f64,
    pub amplitude: f64,
    pub action: f64,
    pub period: f64,
    pub lz: f64,
}

/// Relative equilibrium seen in frame `ϖ` with loop period `s`: the N-gon at
/// inertial frequency `ϖ + 2πr/s`, action `(ω+ϖ)^{2/3}(T/2π)a`.
pub fn relative_equilibrium_row(spec: &GroupSpec, varpi: f64) -> Result<DiagramRow> {
    let x = varpi + 2.0 * PI * spec.r as f64 / spec.s as f64;
    let n = spec.n_bodies;
    let t = spec.s as f64;
    let r = ngon_radius_for_frequency(n, x)?;
    Ok(DiagramRow {
        branch: DiagramBranch::RelativeEquilibrium,
        varpi,
        amplitude: 0.0,
        action: unchained_core::minimize::relative_equilibrium_action(n, x, t)?,
        period: t,
        lz: n as f64 * r * r * x,
    })
}

/// Family rows followed by the relative-equilibrium branch at the same frame frequencies.
pub fn action_diagram(family: &Family) -> Result<Vec<DiagramRow>> {
    if family.records.is_empty() {
        return invalid("family has no records");
    }
    let mut rows: Vec<DiagramRow> = family
        .records
        .iter()
        .map(|r| DiagramRow {
            branch: DiagramBranch::Family,
            varpi: r.varpi,
            amplitude: r.amplitude,
            action: r.action,
            period: r.period,
            lz: r.angular_momentum_z,
        })
        .collect();
    let mut ws: Vec<f64> = std::iter::once(family.varpi_star).chain(family.records.iter().map(|r| r.varpi)).collect();
    ws.sort_by(f64::total_cmp);
    ws.dedup();
    for w in ws {
        rows.push(relative_equilibrium_row(&family.spec, w)?);
    }
    Ok(rows)
}

fn spec_header(spec: &GroupSpec) -> String {
    format!("# spec={},{},{},{},{}\n", spec.n_bodies, spec.k, spec.eta, spec.r, spec.s)
}

/// One family per file: spec header, `varpi,amplitude,action,period,Lz`
/// rows at 17 significant digits, end reason as a trailing comment.
pub fn family_csv(family: &Family) -> String {
    let mut out = spec_header(&family.spec);
    out.push_str("varpi,amplitude,action,period,Lz\n");
    for r in &family.records {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.varpi, r.amplitude, r.action, r.period, r.angular_momentum_z
        );
    }
    let _ = writeln!(out, "# end: {}", family.end);
    out
}

pub fn diagram_csv(spec: &GroupSpec, rows: &[DiagramRow]) -> String {
    let mut out = spec_header(spec);
    out.push_str("branch,varpi,amplitude,action,period,Lz\n");
    for r in rows {
        let b = match r.branch {
            DiagramBranch::Family => "family",
            DiagramBranch::RelativeEquilibrium => "relative_equilibrium",
        };
        let _ = writeln!(out, "{b},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", r.varpi, r.amplitude, r.action, r.period, r.lz);
    }
    out
}

/// Per-body time series of one orbit, for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSnapshot {
    pub spec: GroupSpec,
    pub varpi: f64,
    pub period: f64,
    pub times: Vec<f64>,
    /// `bodies[j][m]` is body `j` at `times[m]`, rotating frame.
    pub bodies: Vec<Vec<[f64; 3]>>,
}

pub fn snapshot(orbit: &PeriodicOrbit, count: usize, tol: f64) -> Result<OrbitSnapshot> {
    let states = orbit.sample(count, tol)?;
    let n = orbit.spec.n_bodies;
    Ok(OrbitSnapshot {
        spec: orbit.spec,
        varpi: orbit.varpi,
        period: orbit.period,
        times: (0..count).map(|m| orbit.period * m as f64 / count as f64).collect(),
        bodies: (0..n).map(|j| states.iter().map(|s| { let p = s.positions[j]; [p.x, p.y, p.z] }).collect()).collect(),
    })
}
