//! One function per subcommand. Each writes its artifacts and returns the
//! summary object whose numeric fields are the checkable metrics.

use crate::config::{PerturbationKind, Phase, Validated};
use crate::error::{CliError, Context};
use crate::output::{to_json, Csv, OutputDir};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use solwave::diagnostics::{conservation_report, decay_exponent, log_uniform_times, weighted_norm, NormKind};
use solwave::evolve::{evolve_nonlinear, EvolveOptions, InitialData, Profile, Scheme, Shape};
use solwave::linops::{evolve_linear, Distribution, Projector};
use solwave::model::{check_spectral_condition, mu_omega, SolitaryWave, SpectralCondition};
use solwave::modulation::{StabilityExperiment, StabilityReport};
use solwave::resolvent::verify_kernel;
use solwave::spectrum::{classify, BranchPoint, SpectralCase};
use solwave::Grid;
use std::f64::consts::TAU;

pub type Summary = serde_json::Value;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<C> for Complex {
    fn from(z: C) -> Self {
        Complex { re: z.re, im: z.im }
    }
}

fn emit<T: Serialize>(out: &mut OutputDir, name: &str, value: &T) -> Result<Summary, CliError> {
    out.write(name, &to_json(value)?)?;
    Ok(serde_json::to_value(value)?)
}

/// The configured perturbation as a closed-form profile.
pub fn perturbation_profile(v: &Validated) -> Result<Profile, CliError> {
    let p = &v.config.perturbation;
    let phase = match p.phase {
        Phase::Fixed(x) => x,
        Phase::Random(_) => rand_chacha::ChaCha8Rng::seed_from_u64(v.config.seed).gen_range(0.0..TAU),
    };
    let coeff = C::from_polar(p.d, phase);
    Ok(match p.kind {
        PerturbationKind::Gaussian => Profile::term(
            coeff,
            Shape::Gaussian {
                center: p.center,
                width: p.width,
            },
        ),
        // max of x e^{-x²/w²} is w/√(2e)
        PerturbationKind::OddBump => Profile::term(
            coeff * (2.0 * std::f64::consts::E).sqrt() / p.width,
            Shape::OddBump { width: p.width },
        ),
        PerturbationKind::ScaledTangent => {
            let (_, t1) = Profile::tangent_frame(&v.wave).context("tangent vector ∂ωψ")?;
            let sup = t1.sample(v.config.grid.grid(), 0.0).max_norm();
            t1.scale(coeff / sup)
        }
    })
}

fn initial_data(v: &Validated) -> Result<InitialData, CliError> {
    Ok(InitialData::Profile(Profile::solitary(&v.wave).add(&perturbation_profile(v)?)))
}

#[derive(Serialize)]
struct SolitaryOut<'a> {
    #[serde(flatten)]
    wave: &'a SolitaryWave,
    mu_omega: Option<f64>,
    dc_domega: Option<f64>,
    jump_residual: f64,
    spectral_condition: SpectralCondition,
}

pub fn solitary(v: &Validated, out: &mut OutputDir) -> Result<Summary, CliError> {
    let w = &v.wave;
    let o = SolitaryOut {
        wave: w,
        mu_omega: mu_omega(w).ok(),
        dc_domega: w.dc_domega().ok(),
        jump_residual: w.jump_residual(),
        spectral_condition: check_spectral_condition(w),
    };
    emit(out, "solitary.json", &o)
}

#[derive(Serialize)]
struct SpectrumOut {
    case: SpectralCase,
    zero_multiplicity: u32,
    roots: Vec<Complex>,
    gamma1: f64,
    gamma2: f64,
    thresholds: [f64; 2],
    taylor_coeff: f64,
}

pub fn spectrum(v: &Validated, out: &mut OutputDir) -> Result<Summary, CliError> {
    let r = classify(&v.wave);
    let o = SpectrumOut {
        case: r.case,
        zero_multiplicity: r.zero_multiplicity,
        roots: r.nonzero_roots.iter().map(|&z| z.into()).collect(),
        gamma1: r.gamma1,
        gamma2: r.gamma2,
        thresholds: [r.thresholds.0, r.thresholds.1],
        taylor_coeff: r.taylor_coeff,
    };
    emit(out, "spectrum.json", &o)
}

#[derive(Serialize)]
struct ResolventOut {
    lambda: Complex,
    y: f64,
    h: f64,
    interior_residual: f64,
    interior_residual_refined: f64,
    order: f64,
    jump_xy: f64,
    jump_x0: f64,
}

/// `y` is moved to the nearest grid node.
pub fn resolvent_verify(v: &Validated, lambda: C, y: f64, out: &mut OutputDir) -> Result<Summary, CliError> {
    let g = v.config.grid.grid();
    let h = g.h();
    let k = ((y + g.half_length) / h).round();
    if !(k >= 1.0 && k <= (g.n_points - 2) as f64) {
        return Err(CliError::Usage(format!("--y {y} lies outside the grid interior")));
    }
    let node = g.x(k as usize);
    if (node - y).abs() > 1e-9 * h {
        log::warn!("--y {y} moved to the grid node {node}");
    }
    let r = verify_kernel(BranchPoint::off_cut(lambda), node, g, &v.wave).context("resolvent kernel check")?;
    let o = ResolventOut {
        lambda: lambda.into(),
        y: node,
        h: r.h,
        interior_residual: r.interior_residual,
        interior_residual_refined: r.interior_residual_refined,
        order: r.order,
        jump_xy: r.jump_xy,
        jump_x0: r.jump_x0,
    };
    emit(out, "resolvent.json", &o)
}

#[derive(Serialize)]
struct DecayOut {
    fit_exponent: f64,
    fit_stderr: f64,
    window: [f64; 2],
    n_points: usize,
    r_squared: f64,
    beta: f64,
    b0_initial: f64,
    b1_initial: f64,
}

/// Samples of the linear decay curve.
const DECAY_SAMPLES: usize = 48;

pub fn linear_decay(v: &Validated, t_end: f64, dt: f64, out: &mut OutputDir) -> Result<Summary, CliError> {
    let w = &v.wave;
    let g = v.config.grid.grid();
    let raw = perturbation_profile(v)?;
    let projector = Projector::new(w, g).context("tangent projector")?;
    let (b0, b1) = projector
        .coefficients(&Distribution::regular(raw.sample(g, 0.0)))
        .context("projecting the initial datum")?;
    let (t0, t1) = Profile::tangent_frame(w).context("tangent frame")?;
    let chi0 = InitialData::Profile(raw.add(&t0.scale(C::new(-b0, 0.0))).add(&t1.scale(C::new(-b1, 0.0))));
    let mut window = v.config.fit_window;
    if window[1] > t_end {
        log::warn!("fit window {window:?} clipped to t_end = {t_end}");
        window[1] = t_end;
    }
    if window[0] >= window[1] {
        return Err(CliError::Usage(format!("fit window {window:?} is empty for t_end = {t_end}")));
    }
    let times = log_uniform_times((0.01 * t_end).max(dt), t_end, DECAY_SAMPLES, dt);
    let run = evolve_linear(&chi0, w, t_end, dt, &times, g).context("linear evolution")?;
    let beta = v.config.beta;
    let mut csv = Csv::new(&["t", "norm_Linf_negbeta", "b0", "b1"]);
    let (mut ts, mut norms) = (Vec::new(), Vec::new());
    for (t, f) in &run.snapshots {
        let n = weighted_norm(f, NormKind::Inf, -beta);
        let (c0, c1) = projector.coefficients(&Distribution::regular(f.clone())).context("projecting χ(t)")?;
        csv.row(&[*t, n, c0, c1]);
        ts.push(*t);
        norms.push(n);
    }
    out.write("linear_decay.csv", &csv.into_string())?;
    let fit = decay_exponent(&ts, &norms, (window[0], window[1])).context("decay fit")?;
    let o = DecayOut {
        fit_exponent: fit.exponent,
        fit_stderr: fit.stderr,
        window,
        n_points: fit.n_points,
        r_squared: fit.r_squared,
        beta,
        b0_initial: b0,
        b1_initial: b1,
    };
    emit(out, "linear_decay.json", &o)
}

#[derive(Serialize)]
struct SnapshotOut {
    t: f64,
    file: String,
    charge: f64,
    energy: f64,
}

#[derive(Serialize)]
struct EvolveOut {
    scheme: Scheme,
    t_end: f64,
    dt: f64,
    charge_drift_rel: f64,
    energy_drift_rel: f64,
    well_posedness: Option<bool>,
    snapshots: Vec<SnapshotOut>,
}

pub fn evolve(
    v: &Validated,
    scheme: Scheme,
    t_end: f64,
    dt: f64,
    snapshots: &[f64],
    out: &mut OutputDir,
) -> Result<Summary, CliError> {
    let w = &v.wave;
    let mut times: Vec<f64> = snapshots.iter().copied().filter(|t| (0.0..=t_end).contains(t)).collect();
    if times.len() < snapshots.len() {
        log::warn!("snapshots beyond t_end = {t_end} dropped");
    }
    times.extend([0.0, t_end]);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let psi0 = initial_data(v)?;
    let opts = EvolveOptions::new(t_end, dt, scheme, v.config.grid.grid()).with_snapshots(&times);
    let traj = evolve_nonlinear(&psi0, &w.coupling, &opts).context("nonlinear evolution")?;
    let mut csv = Csv::new(&["t", "re", "im"]);
    for (t, z) in traj.boundary.times.iter().zip(&traj.boundary.values) {
        csv.row(&[*t, z.re, z.im]);
    }
    out.write("boundary.csv", &csv.into_string())?;
    let g: Grid = v.config.grid.grid();
    let mut snaps = Vec::new();
    for (k, s) in traj.snapshots.iter().enumerate() {
        let mut csv = Csv::new(&["x", "re", "im"]);
        for (j, z) in s.field.values.iter().enumerate() {
            csv.row(&[g.x(j), z.re, z.im]);
        }
        let file = format!("snapshot_{k:03}.csv");
        out.write(&file, &csv.into_string())?;
        snaps.push(SnapshotOut {
            t: s.t,
            file,
            charge: s.charge,
            energy: s.energy,
        });
    }
    let report = conservation_report(&traj).context("conservation report")?;
    let o = EvolveOut {
        scheme,
        t_end,
        dt,
        charge_drift_rel: report.charge_drift_rel,
        energy_drift_rel: report.energy_drift_rel,
        well_posedness: traj.well_posedness,
        snapshots: snaps,
    };
    emit(out, "conservation.json", &o)
}

pub fn stability_experiment(v: &Validated) -> Result<StabilityExperiment, CliError> {
    let c = &v.config;
    let mut e = StabilityExperiment::new(v.wave.clone(), 0.0);
    e.perturbation = perturbation_profile(v)?;
    e.t_end = c.time.t_end;
    e.dt = c.time.dt;
    e.extract_step = c.stability.extract_step;
    e.extract_grid = c.grid.grid();
    e.wide_grid = c.stability.wide_grid.grid();
    e.beta = c.beta;
    e.chi_window = (c.fit_window[0], c.fit_window[1]);
    let rw = c.stability.remainder_window;
    e.remainder_window = (rw[0], rw[1]);
    e.remainder_samples = c.stability.remainder_samples;
    e.cauchy_times = (0.6 * rw[1], rw[1]);
    Ok(e)
}

pub fn stability(v: &Validated, out: &mut OutputDir) -> Result<Summary, CliError> {
    let report: StabilityReport = stability_experiment(v)?.run().context("stability experiment")?;
    let tr = &report.trace;
    let mut csv = Csv::new(&["t", "omega", "theta", "gamma", "norm_chi", "dot_omega", "dot_gamma"]);
    for k in 0..tr.times.len() {
        csv.row(&[
            tr.times[k],
            tr.omega[k],
            tr.theta[k],
            tr.gamma[k],
            tr.norm_chi[k],
            tr.dot_omega[k],
            tr.dot_gamma[k],
        ]);
    }
    out.write("modulation.csv", &csv.into_string())?;
    let m = &report.majorant;
    let mut csv = Csv::new(&["t", "chi_term", "rate_term", "M"]);
    for k in 0..m.times.len() {
        csv.row(&[m.times[k], m.chi_term[k], m.rate_term[k], m.running[k]]);
    }
    out.write("majorant.csv", &csv.into_string())?;
    let s = &report.split;
    let mut csv = Csv::new(&["t", "remainder_sup", "remainder_l2"]);
    for k in 0..s.times.len() {
        csv.row(&[s.times[k], s.remainder_sup[k], s.remainder_l2[k]]);
    }
    out.write("remainder.csv", &csv.into_string())?;
    emit(out, "asymptotics.json", &report)
}

/// Compares the numeric top-level fields of `summary` with `thresholds`.
/// Returns the violations; a threshold naming an absent field is an error.
pub fn check(
    summary: &Summary,
    thresholds: &std::collections::BTreeMap<String, [f64; 2]>,
    command: &str,
) -> Result<Vec<String>, CliError> {
    let mut violations = Vec::new();
    for (name, [lo, hi]) in thresholds {
        match summary.get(name) {
            Some(serde_json::Value::Number(n)) => {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if !(x >= *lo && x <= *hi) {
                    violations.push(format!("{name} = {x} outside [{lo}, {hi}]"));
                }
            }
            Some(serde_json::Value::Null) => violations.push(format!("{name} is not available (null)")),
            _ => {
                let known: Vec<&str> = summary
                    .as_object()
                    .map(|o| {
                        o.iter()
                            .filter(|(_, v)| v.is_number() || v.is_null())
                            .map(|(k, _)| k.as_str())
                            .collect()
                    })
                    .unwrap_or_default();
                return Err(CliError::Usage(format!(
                    "check.{command}.{name}: `{command}` emits no numeric metric of that name (available: {})",
                    known.join(", ")
                )));
            }
        }
    }
    Ok(violations)
}
