//! Command-line front end: runs a parsed configuration and writes CSV or JSON.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

pub use config::{parse_config, Command, Format, GridAxis, RunConfig};

use crate::error::{Error, Result};
use crate::fluctuations::{mode_couplings, output_spectrum, stability, steady_covariance, FluctuationModel};
use crate::phases::{
    frozen_field_modes, kink_scaling, normal_modes, ramped_equilibrium, sweep_phase_diagram, Phase, PointOutcome,
    SweepGrid,
};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub si_units: bool,
    pub validate: bool,
}

/// Result of a run before anything is written.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub body: String,
    /// Per-point problems destined for the errors sidecar.
    pub errors: Vec<String>,
    /// Invariant violations found with `--validate`.
    pub violations: Vec<String>,
}

#[derive(Debug, Clone)]
enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

fn fmt_num(v: f64, precision: usize) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:.*e}", precision - 1, v)
    }
}

impl Table {
    fn csv(&self, precision: usize) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(*v, precision),
                    Cell::Int(v) => v.to_string(),
                    Cell::Bool(b) => b.to_string(),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self, precision: usize) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (name, c) in self.columns.iter().zip(row) {
                    let v = match c {
                        Cell::Num(v) if v.is_finite() => fmt_num(*v, precision)
                            .parse::<f64>()
                            .ok()
                            .and_then(serde_json::Number::from_f64)
                            .map_or(Value::Null, Value::Number),
                        Cell::Num(_) => Value::Null,
                        Cell::Int(v) => Value::from(*v),
                        Cell::Bool(b) => Value::Bool(*b),
                        Cell::Text(s) => Value::String(s.clone()),
                    };
                    obj.insert(name.to_string(), v);
                }
                Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&Value::Array(rows)).expect("serializable");
        s.push('\n');
        s
    }
}

fn pick(si: bool, reduced: &'static str, si_name: &'static str) -> &'static str {
    if si {
        si_name
    } else {
        reduced
    }
}

fn phase_table(cfg: &RunConfig, opts: &RunOptions, out: &mut Rendered) -> Result<Table> {
    let g = cfg.grid.as_ref().ok_or_else(|| Error::InvalidParams("phase-diagram needs a grid".into()))?;
    let grid = match g.axis {
        GridAxis::Eta => SweepGrid { eta: g.eta.clone(), axis: None, values: Vec::new(), auto_offset: cfg.auto_offset },
        GridAxis::Secondary(a) => {
            SweepGrid { eta: g.eta.clone(), axis: Some(a), values: g.values.clone(), auto_offset: cfg.auto_offset }
        }
    };
    let points: Vec<PointOutcome> = sweep_phase_diagram(&cfg.params, &grid, &cfg.solver)?;
    let si = opts.si_units;
    let columns = vec![
        pick(si, "eta_over_kappa", "eta_rad_per_s"),
        "C",
        pick(si, "delta_c_over_kappa", "delta_c_rad_per_s"),
        "B_N",
        pick(si, "order_parameter_over_lambda", "order_parameter_m"),
        pick(si, "phonon_gap_over_omega", "phonon_gap_rad_per_s"),
        pick(si, "restoring_force", "restoring_force_N"),
        "classification",
        "bistable",
        "n_bar",
        pick(si, "delta_eff_over_kappa", "delta_eff_rad_per_s"),
        "fluct_stable",
        "chain_temperature_K",
        "quantum_flag",
    ];
    let k = cfg.params.kappa;
    let per_row = grid.eta.len();
    let mut rows = Vec::new();
    for (i, outcome) in points.iter().enumerate() {
        let p = grid.row_params(&cfg.params, i / per_row)?.with_eta(grid.eta[i % per_row]);
        let pt = match outcome {
            Ok(pt) => pt,
            Err(e) => {
                out.errors.push(format!(
                    "row {} eta_over_kappa {}: {}",
                    e.row,
                    fmt_num(e.eta / k, cfg.output.precision),
                    e.message
                ));
                continue;
            }
        };
        for d in &pt.diagnostics {
            out.errors.push(format!("row {} eta_over_kappa {}: {}", i / per_row, fmt_num(pt.eta / k, cfg.output.precision), d));
        }
        if opts.validate {
            validate_point(&p, pt, cfg, &mut out.violations);
        }
        let s = p.derived_scales();
        let (eta, dc, op, gap, force, de) = if si {
            (pt.eta, pt.delta_c, pt.order_parameter * p.wavelength, pt.phonon_gap, pt.restoring_force * s.force, pt.delta_eff)
        } else {
            (pt.eta / k, pt.delta_c / k, pt.order_parameter, pt.phonon_gap / p.trap_freq, pt.restoring_force, pt.delta_eff / k)
        };
        rows.push(vec![
            Cell::Num(eta),
            Cell::Num(pt.cooperativity),
            Cell::Num(dc),
            Cell::Num(pt.bunching),
            Cell::Num(op),
            Cell::Num(gap),
            Cell::Num(force),
            Cell::Text(pt.classification.to_string()),
            Cell::Bool(pt.bistable),
            Cell::Num(pt.photon_number),
            Cell::Num(de),
            Cell::Bool(pt.fluct_stable),
            Cell::Num(pt.chain_temperature),
            Cell::Bool(pt.quantum_flag),
        ]);
    }
    Ok(Table { columns, rows })
}

fn validate_point(p: &crate::params::SystemParams, pt: &crate::phases::PhasePoint, cfg: &RunConfig, v: &mut Vec<String>) {
    let tag = format!("eta = {:.6e} rad/s, C = {:.6e}", pt.eta, pt.cooperativity);
    let s = &pt.state;
    if !(0.0..=1.0).contains(&pt.bunching) {
        v.push(format!("{tag}: B_N = {} outside [0, 1]", pt.bunching));
    }
    if s.positions.windows(2).any(|w| w[1] <= w[0]) {
        v.push(format!("{tag}: positions not strictly increasing"));
    }
    let b = crate::potential::bunching(&s.positions, p.wavenumber()).unwrap_or(f64::NAN);
    if !((b - s.bunching).abs() <= 1e-12 * b.abs().max(1e-300) || b == s.bunching) {
        v.push(format!("{tag}: stored B_N does not match positions"));
    }
    let de = crate::potential::effective_detuning(p, s.bunching);
    if (de - s.delta_eff).abs() > 1e-9 * p.kappa {
        v.push(format!("{tag}: effective detuning inconsistent with B_N"));
    }
    let n = crate::potential::mean_photon_number(p, s.delta_eff);
    if (n - s.photon_number).abs() > 1e-12 * n.max(1e-300) {
        v.push(format!("{tag}: photon number inconsistent with detuning"));
    }
    if pt.classification == Phase::Sliding && pt.restoring_force >= cfg.solver.force_tolerance {
        v.push(format!("{tag}: sliding point with restoring force {}", pt.restoring_force));
    }
}

fn equilibrium_table(cfg: &RunConfig, opts: &RunOptions) -> Result<Table> {
    let p = &cfg.params;
    let s = ramped_equilibrium(p, &cfg.solver.minimize)?;
    let si = opts.si_units;
    let k = p.kappa;
    let columns = vec![
        "ion",
        pick(si, "position_over_lambda", "position_m"),
        pick(si, "displacement_over_lambda", "displacement_m"),
        "cos2_kx",
        "B_N",
        pick(si, "delta_eff_over_kappa", "delta_eff_rad_per_s"),
        "n_bar",
        pick(si, "energy_over_hbar_kappa", "energy_J"),
        "is_local_min",
    ];
    let len = if si { 1.0 } else { p.wavelength };
    let rows = s
        .positions
        .iter()
        .enumerate()
        .map(|(j, x)| {
            vec![
                Cell::Int(j as i64),
                Cell::Num(x / len),
                Cell::Num((x - p.trap_center_offset) / len),
                Cell::Num((p.wavenumber() * x).cos().powi(2)),
                Cell::Num(s.bunching),
                Cell::Num(if si { s.delta_eff } else { s.delta_eff / k }),
                Cell::Num(s.photon_number),
                Cell::Num(if si { s.energy } else { s.energy / (p.constants.hbar * k) }),
                Cell::Bool(s.is_local_min),
            ]
        })
        .collect();
    Ok(Table { columns, rows })
}

fn modes_table(cfg: &RunConfig, opts: &RunOptions) -> Result<Table> {
    let p = &cfg.params;
    let s = ramped_equilibrium(p, &cfg.solver.minimize)?;
    let full = normal_modes(p, &s)?;
    let frozen = frozen_field_modes(p, &s)?;
    let c = mode_couplings(p, &s, &frozen)?;
    let si = opts.si_units;
    let k = p.kappa;
    let columns = vec![
        "mode",
        pick(si, "frequency_over_omega", "frequency_rad_per_s"),
        pick(si, "frequency_over_kappa", "frequency_hz"),
        pick(si, "frozen_frequency_over_kappa", "frozen_frequency_rad_per_s"),
        "frozen_curvature_sign",
        pick(si, "coupling_over_kappa", "coupling_rad_per_s"),
    ];
    let two_pi = 2.0 * std::f64::consts::PI;
    let rows = (0..p.n_ions)
        .map(|n| {
            let w = full.frequencies[n];
            let wf = frozen.frequencies[n];
            vec![
                Cell::Int(n as i64),
                Cell::Num(if si { w } else { w / p.trap_freq }),
                Cell::Num(if si { w / two_pi } else { w / k }),
                Cell::Num(if si { wf } else { wf / k }),
                Cell::Int(if frozen.curvatures[n] < 0.0 { -1 } else { 1 }),
                Cell::Num(if si { c[n] } else { c[n] / k }),
            ]
        })
        .collect();
    Ok(Table { columns, rows })
}

fn fluctuations_table(cfg: &RunConfig, opts: &RunOptions, out: &mut Rendered) -> Result<Table> {
    let p = &cfg.params;
    let s = ramped_equilibrium(p, &cfg.solver.minimize)?;
    let model = FluctuationModel::new(p, &s)?;
    let st = stability(&model);
    let n = model.n_modes();
    let cov = if st.stable {
        match steady_covariance(&model) {
            Ok(c) => Some(c),
            Err(e) => {
                out.errors.push(format!("covariance: {e}"));
                None
            }
        }
    } else {
        None
    };
    let si = opts.si_units;
    let k = p.kappa;
    let columns = vec![
        "mode",
        pick(si, "frequency_over_kappa", "frequency_rad_per_s"),
        "curvature_sign",
        pick(si, "coupling_over_kappa", "coupling_rad_per_s"),
        pick(si, "damping_over_kappa", "damping_rad_per_s"),
        "bath_occupation",
        "occupation",
        "temperature_K",
        "determined",
        pick(si, "position_spread_over_lambda", "position_spread_m"),
        "stable",
        pick(si, "max_growth_over_kappa", "max_growth_rad_per_s"),
        "chain_temperature_K",
    ];
    let r = |v: f64| if si { v } else { v / k };
    let len = if si { 1.0 } else { p.wavelength };
    let nan = f64::NAN;
    let rows = (0..n)
        .map(|m| {
            vec![
                Cell::Int(m as i64),
                Cell::Num(r(model.mode_freqs[m])),
                Cell::Int(model.mode_signs[m] as i64),
                Cell::Num(r(model.couplings[m])),
                Cell::Num(r(model.mode_damping[m])),
                Cell::Num(model.bath_occ[m]),
                Cell::Num(cov.as_ref().map_or(nan, |c| c.mode_occupations[m])),
                Cell::Num(cov.as_ref().map_or(nan, |c| c.mode_temperatures[m])),
                Cell::Bool(cov.as_ref().is_some_and(|c| c.determined[m])),
                Cell::Num(cov.as_ref().map_or(nan, |c| c.position_spreads[m] / len)),
                Cell::Bool(st.stable),
                Cell::Num(if si { st.max_real * k } else { st.max_real }),
                Cell::Num(cov.as_ref().map_or(nan, |c| c.chain_temperature)),
            ]
        })
        .collect();
    Ok(Table { columns, rows })
}

fn spectrum_table(cfg: &RunConfig, opts: &RunOptions, out: &mut Rendered) -> Result<Table> {
    let p = &cfg.params;
    let s = ramped_equilibrium(p, &cfg.solver.minimize)?;
    let model = FluctuationModel::new(p, &s)?;
    let sp = output_spectrum(&model, &cfg.nu_grid)?;
    if opts.validate {
        for (nu, v) in sp.nu_grid.iter().zip(&sp.values) {
            if !(v.is_finite() && *v >= 0.0) {
                out.violations.push(format!("nu = {nu:.6e} rad/s: S = {v}"));
            }
        }
    }
    let si = opts.si_units;
    let columns = vec![pick(si, "nu_over_kappa", "nu_rad_per_s"), "S"];
    let rows = sp
        .nu_grid
        .iter()
        .zip(&sp.values)
        .map(|(nu, v)| vec![Cell::Num(if si { *nu } else { nu / p.kappa }), Cell::Num(*v)])
        .collect();
    Ok(Table { columns, rows })
}

fn kink_table(cfg: &RunConfig) -> Result<Table> {
    let ks = kink_scaling(&cfg.params, cfg.kink_base_n, &cfg.kink_n_values, &cfg.solver)?;
    let nan = f64::NAN;
    let columns = vec!["N", "B_N", "kink_estimate", "pinned", "slope", "intercept", "r_squared"];
    let rows = ks
        .points
        .iter()
        .map(|pt| {
            vec![
                Cell::Int(pt.n_ions as i64),
                Cell::Num(pt.bunching),
                Cell::Num(pt.kink_estimate),
                Cell::Bool(pt.pinned),
                Cell::Num(ks.slope.unwrap_or(nan)),
                Cell::Num(ks.intercept.unwrap_or(nan)),
                Cell::Num(ks.r_squared.unwrap_or(nan)),
            ]
        })
        .collect();
    Ok(Table { columns, rows })
}

/// Computes the output of `cfg` without touching the file system.
pub fn render(cfg: &RunConfig, opts: &RunOptions) -> Result<Rendered> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?;
    pool.install(|| {
        let mut out = Rendered { body: String::new(), errors: Vec::new(), violations: Vec::new() };
        let table = match cfg.command {
            Command::PhaseDiagram => phase_table(cfg, opts, &mut out)?,
            Command::Equilibrium => equilibrium_table(cfg, opts)?,
            Command::Modes => modes_table(cfg, opts)?,
            Command::Fluctuations => fluctuations_table(cfg, opts, &mut out)?,
            Command::Spectrum => spectrum_table(cfg, opts, &mut out)?,
            Command::KinkScaling => kink_table(cfg)?,
        };
        out.body = match cfg.output.format {
            Format::Csv => table.csv(cfg.output.precision),
            Format::Json => table.json(cfg.output.precision),
        };
        Ok(out)
    })
}

pub fn errors_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".errors");
    PathBuf::from(s)
}

/// Runs `cfg`, writes the output and the errors sidecar, and returns the exit code.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<u8> {
    let out = render(cfg, opts)?;
    let path = opts.output.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    let mut errors = out.errors.join("\n");
    if !errors.is_empty() {
        errors.push('\n');
    }
    match &path {
        Some(p) => {
            fs::write(p, &out.body)?;
            let side = errors_path(p);
            if errors.is_empty() {
                if side.exists() {
                    fs::remove_file(&side)?;
                }
            } else {
                fs::write(&side, &errors)?;
            }
        }
        None => {
            print!("{}", out.body);
            eprint!("{errors}");
        }
    }
    if opts.validate && !out.violations.is_empty() {
        for v in &out.violations {
            eprintln!("validation: {v}");
        }
        return Ok(1);
    }
    Ok(if out.errors.is_empty() { 0 } else { 2 })
}
