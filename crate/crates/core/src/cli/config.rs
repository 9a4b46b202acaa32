//! Line-oriented `key = value` configuration with `[section]` headers.
//!
//! Physical values carry units, e.g. `eta = 100 kappa` or `wavelength = 369 nm`.
//! Cyclic frequency units (`Hz`, `kHz`, `MHz`, `GHz`) are multiplied by 2*pi.
//! `#` starts a comment.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use crate::equilibrium::{MinimizeOptions, SeedStrategy};
use crate::error::{Error, Result};
use crate::params::{Bath, PerMode, PhysicalConstants, SystemParams};
use crate::phases::{grid, Axis, ClassifyOptions, Spacing};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Equilibrium,
    PhaseDiagram,
    Modes,
    Fluctuations,
    Spectrum,
    KinkScaling,
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "equilibrium" => Command::Equilibrium,
            "phase-diagram" => Command::PhaseDiagram,
            "modes" => Command::Modes,
            "fluctuations" => Command::Fluctuations,
            "spectrum" => Command::Spectrum,
            "kink-scaling" => Command::KinkScaling,
            _ => return Err(format!("unknown command '{s}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAxis {
    Eta,
    Secondary(Axis),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub axis: GridAxis,
    /// Secondary-axis values in SI (C dimensionless, delta_c rad/s, N count).
    pub values: Vec<f64>,
    /// rad/s
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Format,
    pub precision: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: SystemParams,
    /// Trap centre follows the sign of C.
    pub auto_offset: bool,
    pub grid: Option<GridConfig>,
    pub solver: ClassifyOptions,
    pub output: OutputConfig,
    /// rad/s
    pub nu_grid: Vec<f64>,
    pub kink_base_n: usize,
    pub kink_n_values: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn tokenize(text: &str) -> Result<Sections> {
    let mut sections: Sections = BTreeMap::new();
    sections.insert(String::new(), BTreeMap::new());
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            if !KNOWN.iter().any(|(s, _)| *s == name) || name.is_empty() {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            current = name.to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| err(line, "expected 'key = value'"))?;
        let key = key.trim();
        let allowed = KNOWN.iter().find(|(s, _)| *s == current).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            let place = if current.is_empty() { "top level".to_string() } else { format!("[{current}]") };
            return Err(err(line, format!("unknown key '{key}' in {place}")));
        }
        let sec = sections.get_mut(&current).expect("section exists");
        if let Some(prev) = sec.get(key) {
            return Err(err(line, format!("duplicate key '{key}' (first set on line {})", prev.line)));
        }
        sec.insert(key.to_string(), Entry { line, value: value.trim().to_string() });
    }
    Ok(sections)
}

const KNOWN: &[(&str, &[&str])] = &[
    ("", &["command"]),
    (
        "params",
        &[
            "n_ions",
            "mass",
            "charge",
            "wavelength",
            "trap_freq",
            "kappa",
            "delta_c",
            "cooperativity",
            "u0",
            "eta",
            "trap_center_offset",
            "gamma",
            "bath_occupation",
            "bath_temperature",
            "constants",
        ],
    ),
    (
        "grid",
        &["axis", "min", "max", "count", "spacing", "eta_min", "eta_max", "eta_count", "eta_spacing"],
    ),
    (
        "solver",
        &[
            "gradient_tolerance",
            "max_iterations",
            "perturbation_scale",
            "seed_strategy",
            "order_tolerance",
            "force_tolerance",
            "restoring_force",
            "fluctuations",
        ],
    ),
    ("spectrum", &["nu_min", "nu_max", "nu_count"]),
    ("kink", &["base_n", "n_values", "n_min", "n_max", "n_step"]),
    ("output", &["path", "format", "precision"]),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Quantity {
    Frequency,
    Length,
    Mass,
    Charge,
    Temperature,
    Number,
}

/// Scale factors known once the base parameters are resolved.
struct Context {
    kappa: Option<f64>,
    wavelength: f64,
    constants: PhysicalConstants,
}

fn unit_factor(q: Quantity, unit: &str, ctx: &Context, line: usize) -> Result<f64> {
    let cyc = 2.0 * PI;
    let f = match (q, unit) {
        (Quantity::Number, "") => 1.0,
        (Quantity::Frequency, "rad/s") => 1.0,
        (Quantity::Frequency, "Hz") => cyc,
        (Quantity::Frequency, "kHz") => cyc * 1e3,
        (Quantity::Frequency, "MHz") => cyc * 1e6,
        (Quantity::Frequency, "GHz") => cyc * 1e9,
        (Quantity::Frequency, "kappa") => {
            ctx.kappa.ok_or_else(|| err(line, "kappa cannot be given in units of itself"))?
        }
        (Quantity::Length, "m") => 1.0,
        (Quantity::Length, "mm") => 1e-3,
        (Quantity::Length, "um") => 1e-6,
        (Quantity::Length, "nm") => 1e-9,
        (Quantity::Length, "lambda") => ctx.wavelength,
        (Quantity::Mass, "kg") => 1.0,
        (Quantity::Mass, "u") => ctx.constants.atomic_mass_unit,
        (Quantity::Charge, "C") => 1.0,
        (Quantity::Charge, "e") => ctx.constants.elementary_charge,
        (Quantity::Temperature, "K") => 1.0,
        (Quantity::Temperature, "mK") => 1e-3,
        (Quantity::Temperature, "uK") => 1e-6,
        (Quantity::Temperature, "nK") => 1e-9,
        (_, u) => {
            let expect = match q {
                Quantity::Frequency => "rad/s, Hz, kHz, MHz, GHz or kappa",
                Quantity::Length => "m, mm, um, nm or lambda",
                Quantity::Mass => "kg or u",
                Quantity::Charge => "C or e",
                Quantity::Temperature => "K, mK, uK or nK",
                Quantity::Number => "no unit",
            };
            let shown = if u.is_empty() { "none".to_string() } else { format!("'{u}'") };
            return Err(err(line, format!("unit {shown} is not valid here (expected {expect})")));
        }
    };
    Ok(f)
}

fn split_unit(value: &str) -> (&str, &str) {
    match value.rsplit_once(char::is_whitespace) {
        Some((num, unit)) if unit.parse::<f64>().is_err() && !unit.ends_with(',') => (num.trim(), unit.trim()),
        _ => (value.trim(), ""),
    }
}

fn parse_numbers(text: &str, line: usize) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("malformed number '{t}'")))
        })
        .collect()
}

struct Reader {
    sections: Sections,
}

impl Reader {
    fn take(&self, sec: &str, key: &str) -> Option<(usize, String)> {
        let e = self.sections.get(sec)?.get(key)?;
        Some((e.line, e.value.clone()))
    }

    fn line_of(&self, sec: &str, key: &str) -> Option<usize> {
        self.sections.get(sec)?.get(key).map(|e| e.line)
    }

    fn quantity_list(&mut self, sec: &str, key: &str, q: Quantity, ctx: &Context) -> Result<Option<(usize, Vec<f64>)>> {
        let Some((line, v)) = self.take(sec, key) else { return Ok(None) };
        let (num, unit) = split_unit(&v);
        let f = unit_factor(q, unit, ctx, line)?;
        Ok(Some((line, parse_numbers(num, line)?.into_iter().map(|x| x * f).collect())))
    }

    fn quantity(&mut self, sec: &str, key: &str, q: Quantity, ctx: &Context) -> Result<Option<(usize, f64)>> {
        match self.quantity_list(sec, key, q, ctx)? {
            None => Ok(None),
            Some((line, v)) if v.len() == 1 => Ok(Some((line, v[0]))),
            Some((line, _)) => Err(err(line, format!("'{key}' takes a single value"))),
        }
    }

    fn integer(&mut self, sec: &str, key: &str) -> Result<Option<(usize, usize)>> {
        let Some((line, v)) = self.take(sec, key) else { return Ok(None) };
        v.parse::<usize>()
            .map(|n| Some((line, n)))
            .map_err(|_| err(line, format!("malformed integer '{v}'")))
    }

    fn integers(&mut self, sec: &str, key: &str) -> Result<Option<(usize, Vec<usize>)>> {
        let Some((line, v)) = self.take(sec, key) else { return Ok(None) };
        v.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| err(line, format!("malformed integer '{}'", t.trim()))))
            .collect::<Result<Vec<_>>>()
            .map(|n| Some((line, n)))
    }

    fn boolean(&mut self, sec: &str, key: &str) -> Result<Option<bool>> {
        let Some((line, v)) = self.take(sec, key) else { return Ok(None) };
        match v.as_str() {
            "true" | "yes" | "on" => Ok(Some(true)),
            "false" | "no" | "off" => Ok(Some(false)),
            _ => Err(err(line, format!("expected true or false, got '{v}'"))),
        }
    }

    fn word(&mut self, sec: &str, key: &str) -> Option<(usize, String)> {
        self.take(sec, key)
    }
}

fn spacing(line: usize, s: &str) -> Result<Spacing> {
    match s {
        "linear" => Ok(Spacing::Linear),
        "log" => Ok(Spacing::Log),
        _ => Err(err(line, format!("spacing must be linear or log, got '{s}'"))),
    }
}

fn positive_grid(line: usize, min: f64, max: f64, count: usize, sp: Spacing) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(err(line, "count must be at least 1"));
    }
    if count > 1 && max <= min {
        return Err(err(line, "max must exceed min"));
    }
    if sp == Spacing::Log && min <= 0.0 {
        return Err(err(line, "log spacing needs a positive minimum"));
    }
    Ok(grid(min, max, count, sp))
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut r = Reader { sections: tokenize(text)? };
    let last_line = text.lines().count().max(1);

    let (cline, cword) = r.word("", "command").ok_or_else(|| err(last_line, "missing required key 'command'"))?;
    let command = cword.parse::<Command>().map_err(|m| err(cline, m))?;

    let constants = match r.word("params", "constants") {
        None => PhysicalConstants::THREE_FIGURE,
        Some((_, w)) if w == "three-figure" => PhysicalConstants::THREE_FIGURE,
        Some((_, w)) if w == "codata" => PhysicalConstants::CODATA,
        Some((line, w)) => return Err(err(line, format!("constants must be codata or three-figure, got '{w}'"))),
    };
    let mut params = SystemParams::ytterbium(1);
    params.constants = constants;
    params.mass = 174.0 * constants.atomic_mass_unit;
    params.charge = constants.elementary_charge;

    let mut ctx = Context { kappa: None, wavelength: params.wavelength, constants };
    if let Some((line, n)) = r.integer("params", "n_ions")? {
        if n == 0 {
            return Err(err(line, "n_ions must be at least 1"));
        }
        params.n_ions = n;
    }
    if let Some((_, v)) = r.quantity("params", "mass", Quantity::Mass, &ctx)? {
        params.mass = v;
    }
    if let Some((_, v)) = r.quantity("params", "charge", Quantity::Charge, &ctx)? {
        params.charge = v;
    }
    if let Some((line, v)) = r.quantity("params", "wavelength", Quantity::Length, &ctx)? {
        if v <= 0.0 {
            return Err(err(line, "wavelength must be positive"));
        }
        params.wavelength = v;
        ctx.wavelength = v;
    }
    if let Some((_, v)) = r.quantity("params", "trap_freq", Quantity::Frequency, &ctx)? {
        params.trap_freq = v;
    }
    if let Some((line, v)) = r.quantity("params", "kappa", Quantity::Frequency, &ctx)? {
        if v <= 0.0 {
            return Err(err(line, "kappa must be positive"));
        }
        params.kappa = v;
    }
    ctx.kappa = Some(params.kappa);
    if let Some((_, v)) = r.quantity("params", "delta_c", Quantity::Frequency, &ctx)? {
        params.delta_c = v;
    }
    if let Some((_, v)) = r.quantity("params", "eta", Quantity::Frequency, &ctx)? {
        params.eta = v;
    }
    let coop = r.quantity("params", "cooperativity", Quantity::Number, &ctx)?;
    let u0 = r.quantity("params", "u0", Quantity::Frequency, &ctx)?;
    match (coop, u0) {
        (Some(_), Some((line, _))) => return Err(err(line, "give either cooperativity or u0, not both")),
        (Some((_, c)), None) => params.u0 = c * params.kappa / params.n_ions as f64,
        (None, Some((_, u))) => params.u0 = u,
        (None, None) => {}
    }
    let mut auto_offset = true;
    if r.line_of("params", "trap_center_offset").is_some() {
        let raw = r.sections["params"]["trap_center_offset"].value.clone();
        if raw == "auto" {
            r.take("params", "trap_center_offset");
        } else {
            auto_offset = false;
            let (_, v) = r.quantity("params", "trap_center_offset", Quantity::Length, &ctx)?.expect("present");
            params.trap_center_offset = v;
        }
    }
    if auto_offset {
        params.trap_center_offset = if params.u0 < 0.0 { params.wavelength / 4.0 } else { 0.0 };
    }
    if let Some((_, v)) = r.quantity_list("params", "gamma", Quantity::Frequency, &ctx)? {
        params.gamma_modes = if v.len() == 1 { PerMode::Uniform(v[0]) } else { PerMode::Each(v) };
    }
    let occ = r.quantity_list("params", "bath_occupation", Quantity::Number, &ctx)?;
    let temp = r.quantity("params", "bath_temperature", Quantity::Temperature, &ctx)?;
    match (occ, temp) {
        (Some(_), Some((line, _))) => {
            return Err(err(line, "give either bath_occupation or bath_temperature, not both"))
        }
        (Some((_, v)), None) => {
            params.bath = Bath::Occupation(if v.len() == 1 { PerMode::Uniform(v[0]) } else { PerMode::Each(v) })
        }
        (None, Some((_, t))) => params.bath = Bath::Temperature(t),
        (None, None) => {}
    }
    params.validate().map_err(|e| err(r.line_of("params", "n_ions").unwrap_or(1), e.to_string()))?;

    let mut solver = ClassifyOptions { minimize: MinimizeOptions::default(), ..Default::default() };
    if let Some((line, v)) = r.quantity("solver", "gradient_tolerance", Quantity::Number, &ctx)? {
        if v <= 0.0 {
            return Err(err(line, "gradient_tolerance must be positive"));
        }
        solver.minimize.gradient_tolerance = v;
    }
    if let Some((_, n)) = r.integer("solver", "max_iterations")? {
        solver.minimize.max_iterations = n;
    }
    if let Some((_, v)) = r.quantity("solver", "perturbation_scale", Quantity::Number, &ctx)? {
        solver.minimize.perturbation_scale = v;
    }
    if let Some((line, w)) = r.word("solver", "seed_strategy") {
        solver.minimize.seed_strategy = match w.as_str() {
            "bare-chain" => SeedStrategy::BareChain,
            "provided" => SeedStrategy::Provided,
            "perturbed-provided" => SeedStrategy::PerturbedProvided,
            _ => return Err(err(line, format!("unknown seed strategy '{w}'"))),
        };
    }
    if let Some((_, v)) = r.quantity("solver", "order_tolerance", Quantity::Number, &ctx)? {
        solver.order_tolerance = v;
    }
    if let Some((_, v)) = r.quantity("solver", "force_tolerance", Quantity::Number, &ctx)? {
        solver.force_tolerance = v;
    }
    if let Some(b) = r.boolean("solver", "restoring_force")? {
        solver.restoring_force = b;
    }
    if let Some(b) = r.boolean("solver", "fluctuations")? {
        solver.fluctuations = b;
    }

    let grid = parse_grid(&mut r, &ctx, command, last_line)?;

    let nu_grid = {
        let lo = r.quantity("spectrum", "nu_min", Quantity::Frequency, &ctx)?;
        let hi = r.quantity("spectrum", "nu_max", Quantity::Frequency, &ctx)?;
        let n = r.integer("spectrum", "nu_count")?;
        let lo = lo.map_or(-120.0 * params.kappa, |v| v.1);
        let hi = hi.map_or(120.0 * params.kappa, |v| v.1);
        let (line, n) = n.unwrap_or((last_line, 24001));
        positive_grid(line, lo, hi, n, Spacing::Linear)?
    };

    let kink_base_n = r.integer("kink", "base_n")?.map_or(params.n_ions, |v| v.1);
    let kink_n_values = match r.integers("kink", "n_values")? {
        Some((_, v)) => v,
        None => {
            let lo = r.integer("kink", "n_min")?;
            let hi = r.integer("kink", "n_max")?;
            let step = r.integer("kink", "n_step")?;
            match (lo, hi) {
                (Some((_, a)), Some((line, b))) => {
                    let s = step.map_or(2, |v| v.1);
                    if s == 0 || b < a {
                        return Err(err(line, "kink range needs n_min <= n_max and n_step >= 1"));
                    }
                    (a..=b).step_by(s).collect()
                }
                _ => vec![params.n_ions],
            }
        }
    };
    if command == Command::KinkScaling {
        if kink_base_n < 2 {
            return Err(err(r.line_of("kink", "base_n").unwrap_or(last_line), "kink scaling needs base_n >= 2"));
        }
        if let Some(n) = kink_n_values.iter().find(|n| **n < 2 || **n % 2 == 0) {
            return Err(err(
                r.line_of("kink", "n_values").or(r.line_of("kink", "n_min")).unwrap_or(last_line),
                format!("kink scaling needs odd chains with N >= 3, got {n}"),
            ));
        }
    }

    let path = r.word("output", "path").map(|v| v.1);
    let format = match r.word("output", "format") {
        None => Format::Csv,
        Some((_, w)) if w == "csv" => Format::Csv,
        Some((_, w)) if w == "json" => Format::Json,
        Some((line, w)) => return Err(err(line, format!("format must be csv or json, got '{w}'"))),
    };
    let precision = match r.integer("output", "precision")? {
        None => 10,
        Some((line, p)) if !(6..=17).contains(&p) => {
            return Err(err(line, format!("precision must lie in [6, 17], got {p}")))
        }
        Some((_, p)) => p,
    };

    Ok(RunConfig {
        command,
        params,
        auto_offset,
        grid,
        solver,
        output: OutputConfig { path, format, precision },
        nu_grid,
        kink_base_n,
        kink_n_values,
    })
}

fn parse_grid(r: &mut Reader, ctx: &Context, command: Command, last_line: usize) -> Result<Option<GridConfig>> {
    let present = r.sections.get("grid").is_some_and(|s| !s.is_empty());
    if !present {
        if command == Command::PhaseDiagram {
            return Err(err(last_line, "phase-diagram needs a [grid] section"));
        }
        return Ok(None);
    }
    let header = r.sections["grid"].values().map(|e| e.line).min().unwrap_or(last_line);
    let (aline, aword) = r.word("grid", "axis").unwrap_or((header, "eta".to_string()));
    let axis = match aword.as_str() {
        "eta" => GridAxis::Eta,
        "C" => GridAxis::Secondary(Axis::Cooperativity),
        "delta_c" => GridAxis::Secondary(Axis::DeltaC),
        "N" => GridAxis::Secondary(Axis::Ions),
        _ => return Err(err(aline, format!("grid axis must be eta, C, delta_c or N, got '{aword}'"))),
    };
    let q = match axis {
        GridAxis::Eta | GridAxis::Secondary(Axis::DeltaC) => Quantity::Frequency,
        _ => Quantity::Number,
    };
    let axis_grid = |r: &mut Reader, prefix: &str, q: Quantity| -> Result<Option<(usize, Vec<f64>)>> {
        let k = |s: &str| format!("{prefix}{s}");
        let min = r.quantity("grid", &k("min"), q, ctx)?;
        let max = r.quantity("grid", &k("max"), q, ctx)?;
        let count = r.integer("grid", &k("count"))?;
        let sp = match r.word("grid", &k("spacing")) {
            None => Spacing::Linear,
            Some((line, w)) => spacing(line, &w)?,
        };
        match (min, max, count) {
            (None, None, None) => Ok(None),
            (Some((line, lo)), max, count) => {
                let (_, n) = count.unwrap_or((line, 1));
                let hi = max.map_or(lo, |m| m.1);
                Ok(Some((line, positive_grid(line, lo, hi, n, sp)?)))
            }
            (None, Some((line, _)), _) | (None, None, Some((line, _))) => {
                Err(err(line, format!("missing required key '{prefix}min'")))
            }
        }
    };
    let (eta, values) = match axis {
        GridAxis::Eta => {
            let (_, e) = axis_grid(r, "", q)?.ok_or_else(|| err(header, "missing required key 'min'"))?;
            (e, Vec::new())
        }
        GridAxis::Secondary(a) => {
            let (_, v) = axis_grid(r, "", q)?.ok_or_else(|| err(header, "missing required key 'min'"))?;
            if a == Axis::Ions {
                if let Some(bad) = v.iter().find(|n| **n < 1.0 || n.fract() != 0.0) {
                    return Err(err(header, format!("N values must be positive integers, got {bad}")));
                }
            }
            let (_, e) = axis_grid(r, "eta_", Quantity::Frequency)?
                .ok_or_else(|| err(header, "missing required key 'eta_min'"))?;
            (e, v)
        }
    };
    if eta.iter().any(|e| *e < 0.0) {
        return Err(err(header, "eta values must be non-negative"));
    }
    Ok(Some(GridConfig { axis, values, eta }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal() {
        let c = parse_config("command = equilibrium\n").unwrap();
        assert_eq!(c.params.n_ions, 1);
        assert_eq!(c.params.eta, 0.0);
        assert_eq!(c.output.precision, 10);
        assert_eq!(c.output.format, Format::Csv);
    }

    #[test]
    fn bad_unit_reports_line() {
        let e = parse_config("command = equilibrium\n[params]\n\neta = 100 banana\n").unwrap_err();
        match e {
            Error::Config { line, msg } => {
                assert_eq!(line, 4);
                assert!(msg.contains("banana"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_key_and_bad_number() {
        assert!(matches!(
            parse_config("command = modes\n[params]\ncolour = 3\n"),
            Err(Error::Config { line: 3, .. })
        ));
        assert!(matches!(
            parse_config("command = modes\n[params]\neta = 1x0 kappa\n"),
            Err(Error::Config { line: 3, .. })
        ));
        assert!(matches!(
            parse_config("command = modes\n[output]\nprecision = 5\n"),
            Err(Error::Config { line: 3, .. })
        ));
        assert!(matches!(parse_config("[params]\n"), Err(Error::Config { .. })));
    }

    #[test]
    fn units_convert() {
        let c = parse_config(
            "command = modes\n[params]\nkappa = 0.2 MHz\neta = 100 kappa\ntrap_center_offset = 0.25 lambda\nwavelength = 369 nm\n",
        )
        .unwrap();
        let k = 2.0 * PI * 0.2e6;
        assert!((c.params.kappa - k).abs() < 1e-6);
        assert!((c.params.eta - 100.0 * k).abs() < 1e-4);
        assert!((c.params.trap_center_offset - 0.25 * 369e-9).abs() < 1e-20);
        assert!(!c.auto_offset);
    }
}
