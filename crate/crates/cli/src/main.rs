//! `unchained`: spectra, symmetry groups, minimization bounds, torsion and
//! family continuation for the equal-mass N-gon.
//!
//! Exit status is 0 on success, 1 on a numerical failure and 2 on a usage
//! error. `UNCHAINED_TOL` sets the Newton tolerance of `continue` (the
//! integrator runs two orders tighter).

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use unchained_core::minimize::{absolute_interval, check_interval_bruteforce, DEFAULT_P_MAX};
use unchained_core::spectrum::{horizontal_spectrum, vertical_spectrum};
use unchained_core::symmetry::{
    find_isomorphism, is_simple_choreography, is_simple_choreography_bruteforce, structure_report, GroupSpec,
};
use unchained_core::torsion::{torsion_gamma_branch, Branch};
use unchained_orbits::family::{
    action_diagram, continue_families, diagram_csv, family_csv, fit_onset, snapshot, Controls, Direction, Family,
};
use unchained_orbits::Tolerances;

#[derive(Parser)]
#[command(name = "unchained", version, about = "Lyapunov families of the equal-mass N-gon")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vertical and horizontal spectra of the relative equilibrium.
    Spectrum {
        n: usize,
        #[arg(long, value_enum, default_value_t = Units::Omega1)]
        units: Units,
        #[arg(long)]
        json: bool,
    },
    /// Structure of the symmetry group G_{r/s}(N,k,η).
    #[command(allow_negative_numbers = true)]
    Group {
        #[command(flatten)]
        spec: SpecArgs,
        /// Report whether invariant loops are simple choreographies.
        #[arg(long)]
        check_choreo: bool,
        /// Relabelling onto another group with s = 1, given as N,k,eta,r.
        #[arg(long, value_name = "N,k,eta,r")]
        find_iso: Option<String>,
    },
    /// Frequency interval where the relative equilibrium minimizes the action.
    #[command(allow_negative_numbers = true)]
    Bounds {
        #[command(flatten)]
        spec: SpecArgs,
        /// Mode multipliers scanned by the brute-force audit.
        #[arg(long, default_value_t = DEFAULT_P_MAX)]
        p_max: i64,
        #[arg(long)]
        json: bool,
    },
    /// Torsion and small-amplitude expansion, as JSON.
    #[command(allow_negative_numbers = true)]
    Torsion {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value_t = BranchArg::Prograde)]
        branch: BranchArg,
    },
    /// Continue the Lyapunov family from its vertical bifurcation.
    #[command(allow_negative_numbers = true)]
    Continue(ContinueArgs),
}

#[derive(Args, Clone, Copy)]
struct SpecArgs {
    n: usize,
    k: usize,
    eta: i32,
    r: i64,
    s: i64,
}

impl SpecArgs {
    fn spec(&self) -> Result<GroupSpec, Failure> {
        GroupSpec::new(self.n, self.k, self.eta, self.r, self.s).map_err(Failure::from)
    }
}

#[derive(Args)]
struct ContinueArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value_t = BranchArg::Prograde)]
    branch: BranchArg,
    /// Sign of the vertical amplitude: +, - or both.
    #[arg(long, default_value = "+", allow_hyphen_values = true)]
    direction: DirectionArg,
    /// Family CSV; stdout when absent. Several families get `_<branch>_<sign>` suffixes.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Action diagram CSV with the relative-equilibrium branch appended.
    #[arg(long)]
    diagram: Option<PathBuf>,
    /// Orbit snapshots of every record, as JSON.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    snapshot_samples: usize,
    /// Families continued concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 30)]
    max_records: usize,
    /// Largest pseudo-arclength step.
    #[arg(long, default_value_t = 0.25)]
    max_step: f64,
    #[arg(long, default_value_t = f64::NEG_INFINITY, allow_hyphen_values = true)]
    varpi_min: f64,
    #[arg(long, default_value_t = f64::INFINITY, allow_hyphen_values = true)]
    varpi_max: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Units {
    Raw,
    Omega1,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BranchArg {
    Prograde,
    Retrograde,
    Both,
}

impl BranchArg {
    fn branches(self) -> Vec<Branch> {
        match self {
            BranchArg::Prograde => vec![Branch::Prograde],
            BranchArg::Retrograde => vec![Branch::Retrograde],
            BranchArg::Both => vec![Branch::Prograde, Branch::Retrograde],
        }
    }
}

#[derive(Clone, Copy)]
enum DirectionArg {
    Positive,
    Negative,
    Both,
}

impl std::str::FromStr for DirectionArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "+" | "pos" | "positive" => Ok(DirectionArg::Positive),
            "-" | "neg" | "negative" => Ok(DirectionArg::Negative),
            "both" | "+-" => Ok(DirectionArg::Both),
            other => Err(format!("direction must be +, - or both, got {other:?}")),
        }
    }
}

impl DirectionArg {
    fn directions(self) -> Vec<Direction> {
        match self {
            DirectionArg::Positive => vec![Direction::Positive],
            DirectionArg::Negative => vec![Direction::Negative],
            DirectionArg::Both => vec![Direction::Positive, Direction::Negative],
        }
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<unchained_core::Error> for Failure {
    fn from(e: unchained_core::Error) -> Self {
        use unchained_core::Error as E;
        match e {
            E::InvalidArgument(_) | E::Unsupported(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<unchained_orbits::Error> for Failure {
    fn from(e: unchained_orbits::Error) -> Self {
        use unchained_orbits::Error as E;
        match e {
            E::Core(inner) => inner.into(),
            E::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Numerical(format!("cannot write {}: {e}", path.display()))
}

/// Shortest round-trip decimal, switching to exponent form for tiny or huge values.
fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Spectrum { n, units, json } => cmd_spectrum(n, units, json),
        Command::Group { spec, check_choreo, find_iso } => cmd_group(spec, check_choreo, find_iso.as_deref()),
        Command::Bounds { spec, p_max, json } => cmd_bounds(spec, p_max, json),
        Command::Torsion { spec, branch } => cmd_torsion(spec, branch),
        Command::Continue(args) => cmd_continue(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("failure: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_spectrum(n: usize, units: Units, as_json: bool) -> Result<(), Failure> {
    let v = vertical_spectrum(n)?;
    let h = horizontal_spectrum(n)?;
    let w1 = v.omega1();
    let (scale, eig) = match units {
        Units::Omega1 => (1.0 / w1, &h.eigenvalues),
        Units::Raw => (1.0, &h.raw),
    };
    if as_json {
        let vertical: Vec<_> = (1..v.omegas.len())
            .map(|k| serde_json::json!({ "k": k, "lambda": v.lambdas[k], "omega": v.omegas[k] * scale }))
            .collect();
        let horizontal: Vec<[f64; 2]> = eig.iter().map(|z| [z.re, z.im]).collect();
        println!("{}", json(&serde_json::json!({ "n": n, "omega1": w1, "vertical": vertical, "horizontal": horizontal })));
        return Ok(());
    }
    let unit = match units {
        Units::Omega1 => "units of omega_1",
        Units::Raw => "raw units",
    };
    println!("N = {n}, omega_1 = {}", num(w1));
    println!("vertical ({unit}):");
    for k in 1..v.omegas.len() {
        println!("  k={k} lambda={} omega={}", num(v.lambdas[k]), num(v.omegas[k] * scale));
    }
    println!("horizontal ({unit}):");
    for z in eig {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        println!("  {} {sign} {}i", num(z.re), num(z.im.abs()));
    }
    Ok(())
}

fn parse_iso_target(n: usize, text: &str) -> Result<GroupSpec, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Failure::Usage(format!("--find-iso expects N,k,eta,r, got {text:?}"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let m: usize = parts[0].parse().map_err(|_| bad())?;
    let k: usize = parts[1].parse().map_err(|_| bad())?;
    let eta: i32 = parts[2].parse().map_err(|_| bad())?;
    let r: i64 = parts[3].parse().map_err(|_| bad())?;
    if m != n {
        return Err(Failure::Usage(format!("isomorphism target has N = {m}, source has N = {n}")));
    }
    Ok(GroupSpec::new(m, k, eta, r, 1)?)
}

/// `a` in `(−N/2, N/2]` when `perm(j) = a·j mod N`.
fn multiplier(perm: &[usize]) -> Option<i64> {
    let n = perm.len() as i64;
    let a = perm.get(1).copied()? as i64;
    if (0..n).all(|j| perm[j as usize] as i64 == (a * j).rem_euclid(n)) {
        Some(if 2 * a > n { a - n } else { a })
    } else {
        None
    }
}

fn cmd_group(args: SpecArgs, check_choreo: bool, find_iso: Option<&str>) -> Result<(), Failure> {
    let spec = args.spec()?;
    let target = find_iso.map(|t| parse_iso_target(spec.n_bodies, t)).transpose()?;
    let rep = structure_report(&spec);
    println!("group G_{}/{}({},{},{})", spec.r, spec.s, spec.n_bodies, spec.k, spec.eta);
    println!("order: {}", rep.order);
    println!("expected order 4Ns: {}", 4 * spec.n_bodies * spec.s as usize);
    println!("xi=1 subgroup order: {}", rep.h_order);
    match rep.k_cyclic_order {
        Some(m) => println!("beta=0, xi=1 subgroup: cyclic of order {m}"),
        None => println!("beta=0, xi=1 subgroup: not cyclic"),
    }
    println!("dihedral x Z/2: {}", if rep.is_dihedral_times_z2 { "yes" } else { "no" });
    if check_choreo {
        let fast = is_simple_choreography(&spec);
        let slow = is_simple_choreography_bruteforce(&spec);
        println!("simple choreography: {}", if fast { "yes" } else { "no" });
        if fast != slow {
            return Err(Failure::Numerical("choreography classifier disagrees with brute force".into()));
        }
    }
    if let Some(other) = target {
        match find_isomorphism(&spec, &other)? {
            Some(perm) => {
                println!("isomorphism: {perm:?}");
                if let Some(a) = multiplier(&perm) {
                    println!("relabelling: j -> {a}j mod {}", spec.n_bodies);
                }
            }
            None => println!("isomorphism: none"),
        }
    }
    Ok(())
}

fn cmd_bounds(args: SpecArgs, p_max: i64, as_json: bool) -> Result<(), Failure> {
    let spec = args.spec()?;
    let sp = vertical_spectrum(spec.n_bodies)?;
    let rep = absolute_interval(&spec, &sp)?;
    let check = check_interval_bruteforce(&spec, &sp, 20, 1e-3, p_max)?;
    let nu = 2.0 * PI * spec.r as f64 / spec.s as f64;
    if as_json {
        println!("{}", json(&serde_json::json!({ "bounds": rep, "bruteforce": check, "shift": nu })));
    } else {
        println!("V: {}", num(rep.v));
        println!("H+: {}", num(rep.h_plus));
        println!("H-: {}", num(rep.h_minus));
        println!("interval for varpi + 2*pi*r/s: [{}, {}]", num(rep.interval.0), num(rep.interval.1));
        println!("interval for varpi: [{}, {}]", num(rep.interval.0 - nu), num(rep.interval.1 - nu));
        println!(
            "bruteforce: {} (interior min {}, exterior max {})",
            if check.consistent { "consistent" } else { "inconsistent" },
            num(check.interior_min),
            num(check.exterior_max)
        );
    }
    if check.consistent {
        Ok(())
    } else {
        Err(Failure::Numerical("brute-force probes contradict the interval".into()))
    }
}

fn cmd_torsion(args: SpecArgs, branch: BranchArg) -> Result<(), Failure> {
    let spec = args.spec()?;
    let results = branch
        .branches()
        .into_iter()
        .map(|b| torsion_gamma_branch(&spec, b))
        .collect::<Result<Vec<_>, _>>()?;
    if let [one] = results.as_slice() {
        println!("{}", json(one));
    } else {
        println!("{}", json(&results));
    }
    Ok(())
}

fn tolerances() -> Result<Tolerances, Failure> {
    match std::env::var("UNCHAINED_TOL") {
        Err(_) => Ok(Tolerances::default()),
        Ok(text) => {
            let tol: f64 =
                text.trim().parse().map_err(|_| Failure::Usage(format!("UNCHAINED_TOL is not a number: {text:?}")))?;
            Ok(Tolerances::uniform(tol)?)
        }
    }
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

fn label(branch: Branch, direction: Direction) -> String {
    let b = match branch {
        Branch::Prograde => "prograde",
        Branch::Retrograde => "retrograde",
    };
    let d = match direction {
        Direction::Positive => "pos",
        Direction::Negative => "neg",
    };
    format!("{b}_{d}")
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn cmd_continue(args: &ContinueArgs) -> Result<(), Failure> {
    let spec = args.spec.spec()?;
    if args.jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    if !(args.varpi_min < args.varpi_max) {
        return Err(Failure::Usage("--varpi-min must be below --varpi-max".into()));
    }
    let controls = Controls {
        tol: tolerances()?,
        max_records: args.max_records,
        max_step: args.max_step,
        varpi_range: (args.varpi_min, args.varpi_max),
        ..Controls::default()
    };
    let mut tasks = Vec::new();
    for b in args.branch.branches() {
        for d in args.direction.directions() {
            tasks.push((spec, b, d));
        }
    }
    let several = tasks.len() > 1;
    let results = continue_families(&tasks, &controls, args.jobs);
    let mut failed = None;
    for (result, (_, b, d)) in results.into_iter().zip(&tasks) {
        let fam = match result {
            Ok(f) => f,
            Err(e) => {
                eprintln!("{}: {e}", label(*b, *d));
                failed = Some(Failure::from(e));
                continue;
            }
        };
        let tag = label(*b, *d);
        report(&fam, &tag);
        let name = |p: &Path| if several { suffixed(p, &tag) } else { p.to_path_buf() };
        match &args.out {
            Some(p) => write_file(&name(p), &family_csv(&fam))?,
            None => print!("{}", family_csv(&fam)),
        }
        if let Some(p) = &args.diagram {
            let rows = action_diagram(&fam)?;
            write_file(&name(p), &diagram_csv(&spec, &rows))?;
        }
        if let Some(p) = &args.snapshots {
            let snaps = fam
                .records
                .iter()
                .map(|r| snapshot(&r.orbit, args.snapshot_samples, controls.tol.integrator))
                .collect::<Result<Vec<_>, _>>()?;
            write_file(&name(p), &json(&snaps))?;
        }
        if fam.records.is_empty() {
            failed = Some(Failure::Numerical(format!("{tag}: no records ({})", fam.end)));
        }
    }
    failed.map_or(Ok(()), Err)
}

fn report(fam: &Family, tag: &str) {
    eprintln!("{tag}: {} records, varpi* = {}, end: {}", fam.records.len(), num(fam.varpi_star), fam.end);
    if let (Some(g), Ok(fit)) = (fam.gamma, fit_onset(fam, 0.08)) {
        eprintln!("{tag}: torsion {}, finite-difference slope {}", num(g), num(fit.gamma_fd));
    }
}
