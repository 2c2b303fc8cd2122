//! Experiment configuration: parsing, validation with collected errors,
//! defaults and canonical normalization.

use serde::Serialize;
use solwave::diagnostics::default_window;
use solwave::model::{solitary_from_c, solitary_from_omega, NonlinearCoupling, OmegaRoots, SolitaryWave};
use solwave::Grid;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use toml::{Table, Value};

/// Environment variable overriding `output_dir`.
pub const OUT_DIR_ENV: &str = "SOLWAVE_OUT_DIR";

/// Subcommands that may carry a `[check.<name>]` table.
pub const CHECKABLE: [&str; 6] = ["solitary", "spectrum", "resolvent-verify", "linear-decay", "evolve", "stability"];

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CouplingSpec {
    Polynomial { coeffs: Vec<f64> },
    Tabulated { s: Vec<f64>, a: Vec<f64> },
}

impl CouplingSpec {
    pub fn build(&self) -> solwave::Result<NonlinearCoupling> {
        match self {
            CouplingSpec::Polynomial { coeffs } => Ok(NonlinearCoupling::polynomial(coeffs)),
            CouplingSpec::Tabulated { s, a } => NonlinearCoupling::tabulated(s.clone(), a.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Grid {
        Grid {
            half_length: self.half_length,
            n_points: self.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSpec {
    pub t_end: f64,
    pub dt: f64,
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    Gaussian,
    OddBump,
    ScaledTangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Phase {
    Fixed(f64),
    /// Drawn uniformly from `[0, 2π)` with the config seed.
    Random(RandomTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomTag {
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// Sup-norm amplitude of the added profile.
    pub d: f64,
    pub width: f64,
    pub center: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySpec {
    pub extract_step: f64,
    pub wide_grid: GridSpec,
    pub remainder_window: [f64; 2],
    pub remainder_samples: usize,
}

/// A fully defaulted configuration. Field order is the canonical order of
/// the normalized file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub coupling: CouplingSpec,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(rename = "C_bracket", skip_serializing_if = "Option::is_none")]
    pub c_bracket: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<usize>,
    pub theta0: f64,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub perturbation: PerturbationSpec,
    pub beta: f64,
    pub fit_window: [f64; 2],
    pub output_dir: PathBuf,
    pub seed: u64,
    pub stability: StabilitySpec,
    pub check: BTreeMap<String, BTreeMap<String, [f64; 2]>>,
}

#[derive(Debug, Clone)]
pub struct Validated {
    pub config: ExperimentConfig,
    pub wave: SolitaryWave,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    /// The canonical TOML text: sorted keys, every default spelled out.
    pub fn normalized(&self) -> String {
        let value = Value::try_from(self).expect("configuration serializes to TOML");
        toml::to_string(&value).expect("TOML table renders")
    }
}

/// Reads typed values out of a table, removing them as it goes so that the
/// leftovers are the unknown keys.
struct Reader {
    issues: Vec<Issue>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

impl Reader {
    fn issue(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            field: field.into(),
            message: message.into(),
        });
    }

    fn number(&mut self, field: &str, v: &Value) -> Option<f64> {
        let x = match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            other => {
                self.issue(field, format!("expected a number, found {}", type_name(other)));
                return None;
            }
        };
        if !x.is_finite() {
            self.issue(field, format!("must be finite, got {x}"));
            return None;
        }
        Some(x)
    }

    fn f64(&mut self, t: &mut Table, path: &str, key: &str) -> Option<f64> {
        let v = t.remove(key)?;
        self.number(&join(path, key), &v)
    }

    fn integer(&mut self, t: &mut Table, path: &str, key: &str) -> Option<i64> {
        match t.remove(key)? {
            Value::Integer(i) => Some(i),
            other => {
                self.issue(join(path, key), format!("expected an integer, found {}", type_name(&other)));
                None
            }
        }
    }

    fn string(&mut self, t: &mut Table, path: &str, key: &str) -> Option<String> {
        match t.remove(key)? {
            Value::String(s) => Some(s),
            other => {
                self.issue(join(path, key), format!("expected a string, found {}", type_name(&other)));
                None
            }
        }
    }

    fn numbers(&mut self, t: &mut Table, path: &str, key: &str) -> Option<Vec<f64>> {
        let field = join(path, key);
        match t.remove(key)? {
            Value::Array(items) => {
                let before = self.issues.len();
                let out: Vec<f64> = items
                    .iter()
                    .enumerate()
                    .filter_map(|(k, v)| self.number(&format!("{field}[{k}]"), v))
                    .collect();
                (self.issues.len() == before).then_some(out)
            }
            other => {
                self.issue(field, format!("expected an array of numbers, found {}", type_name(&other)));
                None
            }
        }
    }

    fn pair(&mut self, t: &mut Table, path: &str, key: &str) -> Option<[f64; 2]> {
        let v = self.numbers(t, path, key)?;
        if v.len() != 2 {
            self.issue(join(path, key), format!("expected two numbers [lo, hi], found {}", v.len()));
            return None;
        }
        if v[0] > v[1] {
            self.issue(join(path, key), format!("lower bound {} exceeds upper bound {}", v[0], v[1]));
            return None;
        }
        Some([v[0], v[1]])
    }

    fn table(&mut self, t: &mut Table, path: &str, key: &str) -> Option<Table> {
        match t.remove(key)? {
            Value::Table(inner) => Some(inner),
            other => {
                self.issue(join(path, key), format!("expected a table, found {}", type_name(&other)));
                None
            }
        }
    }

    fn finish(&mut self, t: Table, path: &str) {
        for key in t.keys() {
            self.issue(join(path, key), "unknown key");
        }
    }

    fn positive(&mut self, field: &str, x: Option<f64>) -> Option<f64> {
        match x {
            Some(x) if x <= 0.0 => {
                self.issue(field, format!("must be positive, got {x}"));
                None
            }
            other => other,
        }
    }

    fn grid(&mut self, t: &mut Table, path: &str, key: &str) -> Option<Option<GridSpec>> {
        let field = join(path, key);
        let Some(mut g) = self.table(t, path, key) else {
            return Some(None);
        };
        let before = self.issues.len();
        for k in ["L", "n"] {
            if !g.contains_key(k) {
                self.issue(join(&field, k), "missing");
            }
        }
        let l = self.f64(&mut g, &field, "L");
        let l = self.positive(&join(&field, "L"), l);
        let n = self.integer(&mut g, &field, "n");
        match n {
            Some(n) if n < 15 => self.issue(join(&field, "n"), format!("must be at least 15, got {n}")),
            Some(n) if n % 2 == 0 => {
                self.issue(join(&field, "n"), format!("must be odd so that x = 0 is a node, got {n}"))
            }
            _ => {}
        }
        self.finish(g, &field);
        if self.issues.len() > before {
            return None;
        }
        Some(Some(GridSpec {
            half_length: l?,
            n: n? as usize,
        }))
    }
}

fn coupling(r: &mut Reader, root: &mut Table) -> Option<CouplingSpec> {
    if !root.contains_key("coupling") {
        r.issue("coupling", "missing");
    }
    let mut t = r.table(root, "", "coupling")?;
    if !t.contains_key("kind") {
        r.issue("coupling.kind", "missing");
    }
    if !t.contains_key("coeffs") && t.get("kind").and_then(Value::as_str) == Some("polynomial") {
        r.issue("coupling.coeffs", "missing");
    }
    let kind = r.string(&mut t, "coupling", "kind");
    let spec = match kind.as_deref() {
        Some("polynomial") => {
            let coeffs = r.numbers(&mut t, "coupling", "coeffs");
            match coeffs {
                Some(c) if c.is_empty() => {
                    r.issue("coupling.coeffs", "needs at least one coefficient");
                    None
                }
                c => c.map(|coeffs| CouplingSpec::Polynomial { coeffs }),
            }
        }
        Some("tabulated") => {
            let s = r.numbers(&mut t, "coupling", "s");
            let a = r.numbers(&mut t, "coupling", "a");
            match (s, a) {
                (Some(s), Some(a)) => match NonlinearCoupling::tabulated(s.clone(), a.clone()) {
                    Ok(_) => Some(CouplingSpec::Tabulated { s, a }),
                    Err(e) => {
                        r.issue("coupling", e.to_string());
                        None
                    }
                },
                _ => {
                    r.issue("coupling", "tabulated coupling needs arrays s and a");
                    None
                }
            }
        }
        Some(other) => {
            r.issue("coupling.kind", format!("expected \"polynomial\" or \"tabulated\", got \"{other}\""));
            None
        }
        None => None,
    };
    r.finish(t, "coupling");
    spec
}

fn perturbation(r: &mut Reader, root: &mut Table) -> Option<PerturbationSpec> {
    let mut t = r.table(root, "", "perturbation").unwrap_or_default();
    let p = "perturbation";
    let before = r.issues.len();
    let kind = match r.string(&mut t, p, "kind").as_deref() {
        None | Some("gaussian") => PerturbationKind::Gaussian,
        Some("odd-bump") => PerturbationKind::OddBump,
        Some("scaled-tangent") => PerturbationKind::ScaledTangent,
        Some(other) => {
            r.issue(
                "perturbation.kind",
                format!("expected gaussian, odd-bump or scaled-tangent, got \"{other}\""),
            );
            PerturbationKind::Gaussian
        }
    };
    let d = r.f64(&mut t, p, "d").unwrap_or(0.05);
    if d < 0.0 {
        r.issue("perturbation.d", format!("must be non-negative, got {d}"));
    }
    let width = r.f64(&mut t, p, "width");
    let width = r.positive("perturbation.width", width).unwrap_or(1.0);
    let center = if kind == PerturbationKind::Gaussian {
        r.f64(&mut t, p, "center").unwrap_or(0.0)
    } else {
        0.0
    };
    let phase = match t.remove("phase") {
        None => Phase::Fixed(0.0),
        Some(Value::String(s)) if s == "random" => Phase::Random(RandomTag::Random),
        Some(v @ (Value::Float(_) | Value::Integer(_))) => Phase::Fixed(r.number("perturbation.phase", &v).unwrap_or(0.0)),
        Some(other) => {
            r.issue("perturbation.phase", format!("expected a number or \"random\", found {}", type_name(&other)));
            Phase::Fixed(0.0)
        }
    };
    r.finish(t, p);
    (r.issues.len() == before).then_some(PerturbationSpec {
        kind,
        d,
        width,
        center,
        phase,
    })
}

fn checks(r: &mut Reader, root: &mut Table) -> BTreeMap<String, BTreeMap<String, [f64; 2]>> {
    let mut out = BTreeMap::new();
    let Some(t) = r.table(root, "", "check") else {
        return out;
    };
    for (name, v) in t {
        let field = join("check", &name);
        if !CHECKABLE.contains(&name.as_str()) {
            r.issue(field, format!("unknown subcommand; expected one of {}", CHECKABLE.join(", ")));
            continue;
        }
        let Value::Table(mut metrics) = v else {
            r.issue(field, "expected a table of metric = [lo, hi]");
            continue;
        };
        let keys: Vec<String> = metrics.keys().cloned().collect();
        let mut m = BTreeMap::new();
        for key in keys {
            if let Some(pair) = r.pair(&mut metrics, &field, &key) {
                m.insert(key, pair);
            }
        }
        out.insert(name, m);
    }
    out
}

fn wave_from(
    r: &mut Reader,
    coupling: &CouplingSpec,
    c: Option<f64>,
    omega: Option<f64>,
    bracket: [f64; 2],
    branch: usize,
    theta0: f64,
) -> Option<SolitaryWave> {
    let coupling = coupling.build().ok()?;
    match (c, omega) {
        (Some(c), None) => match solitary_from_c(&coupling, c, theta0) {
            Ok(w) => Some(w),
            Err(e) => {
                r.issue("C", e.to_string());
                None
            }
        },
        (None, Some(omega)) => match solitary_from_omega(&coupling, omega, (bracket[0], bracket[1]), theta0) {
            Ok(OmegaRoots::Roots(waves)) if branch < waves.len() => Some(waves[branch].clone()),
            Ok(OmegaRoots::Roots(waves)) => {
                r.issue(
                    "branch",
                    format!("{} solitary waves with ω = {omega} in C_bracket, branch {branch} requested", waves.len()),
                );
                None
            }
            Ok(OmegaRoots::Degenerate) => {
                r.issue("omega", "constant coupling: ω does not determine C, give C instead");
                None
            }
            Err(e) => {
                r.issue("omega", e.to_string());
                None
            }
        },
        (Some(_), Some(_)) => {
            r.issue("C", "give either C or omega, not both");
            None
        }
        (None, None) => None,
    }
}

/// Parses and validates `text`. All problems found are returned together.
pub fn validate_config(text: &str) -> Result<Validated, Vec<Issue>> {
    let mut root: Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            let e: toml::de::Error = e;
            return Err(vec![Issue {
                field: String::new(),
                message: format!("TOML syntax error: {}", e.to_string().trim_end()),
            }]);
        }
    };
    let mut r = Reader { issues: Vec::new() };
    let mut warnings = Vec::new();

    let coupling = coupling(&mut r, &mut root);
    let amplitude_given = root.contains_key("C") || root.contains_key("omega");
    let c = r.f64(&mut root, "", "C");
    let c = r.positive("C", c);
    let omega = r.f64(&mut root, "", "omega");
    let omega = r.positive("omega", omega);
    let given_bracket = r.pair(&mut root, "", "C_bracket");
    let bracket = given_bracket.unwrap_or([1e-3, 10.0]);
    if bracket[0] <= 0.0 {
        r.issue("C_bracket", format!("lower end must be positive, got {}", bracket[0]));
    }
    let branch = match r.integer(&mut root, "", "branch") {
        Some(b) if b < 0 => {
            r.issue("branch", format!("must be non-negative, got {b}"));
            0
        }
        Some(b) => b as usize,
        None => 0,
    };
    let theta0 = r.f64(&mut root, "", "theta0").unwrap_or(0.0);

    let grid = r.grid(&mut root, "", "grid");

    let mut time = r.table(&mut root, "", "time").unwrap_or_default();
    let t_end = r.f64(&mut time, "time", "t_end");
    let t_end = r.positive("time.t_end", t_end).unwrap_or(60.0);
    let dt = r.f64(&mut time, "time", "dt");
    let dt = r.positive("time.dt", dt).unwrap_or(1e-3);
    if dt > t_end {
        r.issue("time.dt", format!("exceeds t_end = {t_end}"));
    }
    let mut snapshots = r.numbers(&mut time, "time", "snapshots").unwrap_or_default();
    for (k, s) in snapshots.iter().enumerate() {
        if !(0.0..=t_end).contains(s) {
            r.issue(format!("time.snapshots[{k}]"), format!("{s} lies outside [0, t_end = {t_end}]"));
        }
    }
    snapshots.sort_by(f64::total_cmp);
    snapshots.dedup();
    r.finish(time, "time");

    let perturbation = perturbation(&mut r, &mut root);

    let beta = r.f64(&mut root, "", "beta");
    let beta = r.positive("beta", beta).unwrap_or(2.0);
    if beta < 2.0 {
        warnings.push(format!("beta = {beta}: Theorem 3.2 assumes β ≥ 2"));
    }

    let fit_window = match r.pair(&mut root, "", "fit_window") {
        Some(w) => {
            if w[0] <= 0.0 || w[1] > t_end || w[0] == w[1] {
                r.issue("fit_window", format!("must satisfy 0 < lo < hi ≤ t_end = {t_end}, got {w:?}"));
            }
            w
        }
        None => match default_window(t_end) {
            (lo, hi) if lo < hi => [lo, hi],
            // too short for the asymptotic window
            _ => [0.1 * t_end, t_end],
        },
    };

    let output_dir = r.string(&mut root, "", "output_dir").unwrap_or_else(|| "solwave-out".into());
    let seed = match r.integer(&mut root, "", "seed") {
        Some(s) if s < 0 => {
            r.issue("seed", format!("must be non-negative, got {s}"));
            0
        }
        Some(s) => s as u64,
        None => 0,
    };

    let mut st = r.table(&mut root, "", "stability").unwrap_or_default();
    let extract_step = r.f64(&mut st, "stability", "extract_step");
    let extract_step = r.positive("stability.extract_step", extract_step).unwrap_or(0.1);
    let ratio = extract_step / dt;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
        r.issue("stability.extract_step", format!("must be a positive multiple of time.dt = {dt}"));
    }
    let wide_grid = r.grid(&mut st, "stability", "wide_grid").flatten().unwrap_or(GridSpec {
        half_length: 500.0,
        n: 5001,
    });
    let remainder_window = match r.pair(&mut st, "stability", "remainder_window") {
        Some(w) => {
            if w[0] <= 0.0 || w[1] > t_end || w[0] == w[1] {
                r.issue(
                    "stability.remainder_window",
                    format!("must satisfy 0 < lo < hi ≤ t_end = {t_end}, got {w:?}"),
                );
            }
            w
        }
        None => [fit_window[0].max(10.0).min(0.5 * fit_window[1]), fit_window[1]],
    };
    let remainder_samples = match r.integer(&mut st, "stability", "remainder_samples") {
        Some(n) if n < 8 => {
            r.issue("stability.remainder_samples", format!("must be at least 8, got {n}"));
            16
        }
        Some(n) => n as usize,
        None => 16,
    };
    r.finish(st, "stability");

    let check = checks(&mut r, &mut root);
    r.finish(root, "");

    let wave = match (&coupling, amplitude_given) {
        (_, false) => {
            r.issue("C", "missing (give C or omega)");
            None
        }
        (Some(cs), true) if c.is_some() || omega.is_some() => wave_from(&mut r, cs, c, omega, bracket, branch, theta0),
        _ => None,
    };

    if !r.issues.is_empty() {
        return Err(r.issues);
    }
    let (Some(coupling), Some(wave), Some(grid), Some(perturbation)) = (coupling, wave, grid, perturbation) else {
        unreachable!("every missing piece records an issue");
    };
    let grid = grid.unwrap_or_else(|| {
        let g = Grid::default_for(wave.kappa);
        GridSpec {
            half_length: g.half_length,
            n: g.n_points,
        }
    });
    if (-wave.kappa * grid.half_length).exp() > 1e-12 {
        warnings.push(format!(
            "grid.L = {}: the wave tail e^(-κL) = {:.1e} exceeds 1e-12",
            grid.half_length,
            (-wave.kappa * grid.half_length).exp()
        ));
    }
    let config = ExperimentConfig {
        coupling,
        c: omega.is_none().then_some(wave.c),
        omega,
        c_bracket: omega.map(|_| bracket),
        branch: omega.map(|_| branch),
        theta0,
        grid,
        time: TimeSpec { t_end, dt, snapshots },
        perturbation,
        beta,
        fit_window,
        output_dir: PathBuf::from(output_dir),
        seed,
        stability: StabilitySpec {
            extract_step,
            wide_grid,
            remainder_window,
            remainder_samples,
        },
        check,
    };
    Ok(Validated {
        config,
        wave,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(text: &str) -> Vec<String> {
        validate_config(text).unwrap_err().into_iter().map(|i| i.field).collect()
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let v = validate_config("coupling = { kind = \"polynomial\", coeffs = [1, 1] }\nC = 1\n").unwrap();
        let c = &v.config;
        assert_eq!(c.beta, 2.0);
        assert_eq!(c.time.dt, 1e-3);
        assert_eq!(c.grid, GridSpec { half_length: 50.0, n: 4001 });
        assert_eq!(c.fit_window, [5.0, 50.0]);
        assert!(v.warnings.is_empty());
    }

    #[test]
    fn errors_are_collected() {
        let f = fields(
            "coupling = { kind = \"polynomial\", coeffs = [1, 1] }\nC = 1\nbogus = 3\n\
             [grid]\nL = 20\nn = 400\n[time]\ndt = -1e-3\n[perturbation]\nkind = \"square\"\n",
        );
        for want in ["bogus", "grid.n", "time.dt", "perturbation.kind"] {
            assert!(f.iter().any(|x| x == want), "{want} missing from {f:?}");
        }
    }

    #[test]
    fn type_errors_name_the_field() {
        let f = fields("coupling = { kind = \"polynomial\", coeffs = [1, \"x\"] }\nC = \"one\"\n");
        assert!(f.contains(&"coupling.coeffs[1]".to_string()));
        assert!(f.contains(&"C".to_string()));
    }

    #[test]
    fn small_beta_warns() {
        let v = validate_config("coupling = { kind = \"polynomial\", coeffs = [1, 1] }\nC = 1\nbeta = 1.5\n").unwrap();
        assert!(v.warnings.iter().any(|w| w.contains("Theorem 3.2 assumes β ≥ 2")));
    }

    #[test]
    fn omega_selects_a_branch() {
        let v = validate_config("coupling = { kind = \"polynomial\", coeffs = [1, 1] }\nomega = 1\n").unwrap();
        assert!((v.wave.c - 1.0).abs() < 1e-12);
        assert_eq!(v.config.c, None);
        assert_eq!(v.config.c_bracket, Some([1e-3, 10.0]));
    }

    #[test]
    fn normalization_ignores_key_order() {
        let a = "C = 1\ncoupling = { coeffs = [1, 1], kind = \"polynomial\" }\n[time]\ndt = 0.01\nt_end = 20\n";
        let b = "[time]\nt_end = 20\ndt = 0.01\n[coupling]\nkind = \"polynomial\"\ncoeffs = [1.0, 1.0]\n";
        let b = format!("C = 1.0\n{b}");
        let na = validate_config(a).unwrap().config.normalized();
        let nb = validate_config(&b).unwrap().config.normalized();
        assert_eq!(na, nb);
        let again = validate_config(&na).unwrap().config.normalized();
        assert_eq!(na, again);
    }

    #[test]
    fn checks_are_scoped_by_subcommand() {
        let f = fields(
            "coupling = { kind = \"polynomial\", coeffs = [1, 1] }\nC = 1\n\
             [check.stabilty]\nx = [0, 1]\n[check.evolve]\ncharge_drift_rel = [1, 0]\n",
        );
        assert!(f.contains(&"check.stabilty".to_string()));
        assert!(f.contains(&"check.evolve.charge_drift_rel".to_string()));
    }
}
