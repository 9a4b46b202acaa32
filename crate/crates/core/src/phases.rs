//! Normal modes, sliding/pinned classification, bistability and phase-diagram sweeps.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{bare_phases, depinning_force, perturb, MinimizeOptions, Relaxed, SeedStrategy, Solver};
use crate::error::{Error, Result};
use crate::fluctuations::{sorted_eigen, stability, steady_covariance, FluctuationModel};
use crate::params::SystemParams;
use crate::potential::{frozen_field_hessian, quantum_regime, total_hessian, ChainState};

/// Continuation steps used to bring the pump up from a weak drive.
const RAMP_STEPS: usize = 24;

#[derive(Debug, Clone)]
pub struct NormalModes {
    /// rad/s, ascending
    pub frequencies: Vec<f64>,
    /// Hessian eigenvalues divided by the mass, rad^2/s^2.
    pub curvatures: Vec<f64>,
    /// Orthogonal, columns are modes.
    pub mode_matrix: DMatrix<f64>,
}

impl NormalModes {
    pub fn gap(&self) -> f64 {
        self.frequencies[0]
    }

    fn from_hessian(h: DMatrix<f64>, mass: f64) -> Self {
        let (curvatures, mode_matrix) = sorted_eigen(h / mass);
        let frequencies = curvatures.iter().map(|c| c.abs().sqrt()).collect();
        Self { frequencies, curvatures, mode_matrix }
    }
}

/// Modes of the full mean-field potential; fails at a saddle.
pub fn normal_modes(params: &SystemParams, state: &ChainState) -> Result<NormalModes> {
    let h = total_hessian(params, &state.positions)?;
    let mut modes = NormalModes::from_hessian(h, params.mass);
    let lo = modes.curvatures[0];
    let hi = modes.curvatures.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if lo < -1e-9 * hi {
        return Err(Error::NotLocalMin(lo));
    }
    for (f, c) in modes.frequencies.iter_mut().zip(&modes.curvatures) {
        *f = c.max(0.0).sqrt();
    }
    Ok(modes)
}

/// Modes at fixed photon number. Negative curvatures are kept with their sign.
pub fn frozen_field_modes(params: &SystemParams, state: &ChainState) -> Result<NormalModes> {
    let h = frozen_field_hessian(params, &state.positions)?;
    Ok(NormalModes::from_hessian(h, params.mass))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Sliding,
    Pinned,
    Bistable,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Sliding => "sliding",
            Phase::Pinned => "pinned",
            Phase::Bistable => "bistable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub minimize: MinimizeOptions,
    /// Central displacement threshold, wavelengths.
    pub order_tolerance: f64,
    /// Restoring force threshold, `m*omega^2*L`.
    pub force_tolerance: f64,
    pub restoring_force: bool,
    pub fluctuations: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            minimize: MinimizeOptions::default(),
            order_tolerance: 1e-3,
            force_tolerance: 1e-6,
            restoring_force: true,
            fluctuations: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub n_ions: usize,
    /// rad/s
    pub eta: f64,
    pub cooperativity: f64,
    /// rad/s
    pub delta_c: f64,
    pub bunching: f64,
    /// rad/s
    pub phonon_gap: f64,
    /// `m*omega^2*L`
    pub restoring_force: f64,
    /// Signed central displacement, wavelengths.
    pub order_parameter: f64,
    pub classification: Phase,
    pub bistable: bool,
    pub photon_number: f64,
    /// rad/s
    pub delta_eff: f64,
    pub quantum_flag: bool,
    pub fluct_stable: bool,
    /// K
    pub chain_temperature: f64,
    pub kink_estimate: f64,
    /// Even chains have no central ion; the gap need not close at the transition.
    pub finite_size_warning: bool,
    pub state: ChainState,
    pub forward: Option<ChainState>,
    pub backward: Option<ChainState>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub row: usize,
    pub eta: f64,
    pub secondary: f64,
    pub message: String,
}

pub type PointOutcome = std::result::Result<PhasePoint, PointError>;

/// `B*N` for an attractive lattice, `(1 - B)*N` for a repulsive one.
pub fn kink_estimate(params: &SystemParams, bunching: f64) -> f64 {
    let n = params.n_ions as f64;
    if params.u0 < 0.0 {
        (1.0 - bunching) * n
    } else {
        bunching * n
    }
}

fn energy(solver: &Solver, r: &Relaxed) -> f64 {
    solver.land.energy(&r.phi)
}

/// Stable beats unstable, then lower energy; ties keep `a`.
fn better<'r>(solver: &Solver, a: &'r Relaxed, b: &'r Relaxed) -> &'r Relaxed {
    match (a.is_local_min(), b.is_local_min()) {
        (true, false) => a,
        (false, true) => b,
        _ if energy(solver, b) < energy(solver, a) => b,
        _ => a,
    }
}

/// Forward continuation from a weak drive up to `params.eta`.
pub(crate) fn ramp_up(params: &SystemParams, opts: &MinimizeOptions) -> Result<Relaxed> {
    let mut phi = bare_phases(params)?;
    if opts.seed_strategy == SeedStrategy::PerturbedProvided {
        phi = perturb(&phi, opts.perturbation_scale);
    }
    let etas: Vec<f64> = if params.eta == 0.0 {
        vec![0.0]
    } else {
        (0..RAMP_STEPS)
            .map(|i| params.eta * 10f64.powf(-2.0 * (1.0 - i as f64 / (RAMP_STEPS - 1) as f64)))
            .collect()
    };
    let mut last = None;
    for (i, eta) in etas.iter().enumerate() {
        let p = if i + 1 == etas.len() { params.clone() } else { params.clone().with_eta(*eta) };
        let r = Solver::new(&p, opts).relax(&phi)?;
        phi = r.phi.clone();
        last = Some(r);
    }
    Ok(last.expect("ramp has at least one step"))
}

/// Equilibrium reached by raising the pump from 1% of `params.eta`, starting
/// from the bare chain.
pub fn ramped_equilibrium(params: &SystemParams, opts: &MinimizeOptions) -> Result<ChainState> {
    params.validate()?;
    let r = ramp_up(params, opts)?;
    Ok(Solver::new(params, opts).state(&r))
}

/// Equilibria along `etas` (rad/s), each seeded by the previous one. The
/// first point is reached by [`ramped_equilibrium`].
pub fn forward_continuation(params: &SystemParams, etas: &[f64], opts: &MinimizeOptions) -> Result<Vec<ChainState>> {
    params.validate()?;
    let mut out = Vec::with_capacity(etas.len());
    let mut seed: Option<Vec<f64>> = None;
    for &eta in etas {
        let p = params.clone().with_eta(eta);
        let solver = Solver::new(&p, opts);
        let r = match &seed {
            None => ramp_up(&p, opts)?,
            Some(phi) => solver.relax(phi)?,
        };
        out.push(solver.state(&r));
        seed = Some(r.phi);
    }
    Ok(out)
}

/// Bare chain with every ion moved to the nearest minimum of the lattice.
fn snapped_seed(params: &SystemParams) -> Result<Option<Vec<f64>>> {
    if params.u0 == 0.0 {
        return Ok(None);
    }
    let pi = std::f64::consts::PI;
    let bare = bare_phases(params)?;
    let n = bare.len() as f64;
    let phi: Vec<f64> = bare
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let snapped = if params.u0 > 0.0 {
                ((p - pi / 2.0) / pi).round() * pi + pi / 2.0
            } else {
                (p / pi).round() * pi
            };
            snapped + 1e-3 * (2.0 * j as f64 / (n - 1.0).max(1.0) - 1.0)
        })
        .collect();
    Ok(phi.windows(2).all(|w| w[1] > w[0]).then_some(phi))
}

/// Start of a backward pass: the better of `forward_top` and the relaxed commensurate seed.
fn backward_start(params: &SystemParams, opts: &MinimizeOptions, forward_top: Option<&Relaxed>) -> Result<Relaxed> {
    let solver = Solver::new(params, opts);
    let snapped = match snapped_seed(params)? {
        Some(seed) => solver.relax(&seed).ok(),
        None => None,
    };
    match (forward_top, snapped) {
        (Some(f), Some(s)) => Ok(better(&solver, f, &s).clone()),
        (Some(f), None) => Ok(f.clone()),
        (None, Some(s)) => Ok(s),
        (None, None) => solver.relax(&bare_phases(params)?),
    }
}

fn displacement(state: &ChainState, params: &SystemParams) -> f64 {
    state.central_displacement(params) / params.wavelength
}

fn assemble(
    params: &SystemParams,
    forward: &Result<Relaxed>,
    backward: &Result<Relaxed>,
    opts: &ClassifyOptions,
) -> std::result::Result<PhasePoint, String> {
    let solver = Solver::new(params, &opts.minimize);
    let mut diagnostics = Vec::new();
    for (name, b) in [("forward", forward), ("backward", backward)] {
        if let Err(e) = b {
            diagnostics.push(format!("{name} branch: {e}"));
        }
    }
    let main = match (forward, backward) {
        (Ok(f), Ok(b)) => better(&solver, f, b),
        (Ok(f), Err(_)) => f,
        (Err(_), Ok(b)) => b,
        (Err(_), Err(_)) => return Err(diagnostics.join("; ")),
    };
    let state = solver.state(main);
    let fstate = forward.as_ref().ok().map(|r| solver.state(r));
    let bstate = backward.as_ref().ok().map(|r| solver.state(r));

    let order = displacement(&state, params);
    let phonon_gap = match normal_modes(params, &state) {
        Ok(m) => m.gap(),
        Err(e) => {
            diagnostics.push(format!("normal modes: {e}"));
            f64::NAN
        }
    };
    let even = params.n_ions.is_multiple_of(2) && params.n_ions > 1;
    let restoring_force = if opts.restoring_force && !even && state.is_local_min {
        match depinning_force(params, &state, &opts.minimize) {
            Ok(d) => d.restoring_force,
            Err(e) => {
                diagnostics.push(format!("restoring force: {e}"));
                f64::NAN
            }
        }
    } else {
        f64::NAN
    };

    let bistable = match (&fstate, &bstate) {
        (Some(f), Some(b)) if f.is_local_min && b.is_local_min => {
            let de = (f.energy - b.energy).abs() > 1e-9 * f.energy.abs().max(b.energy.abs());
            let dx = f
                .positions
                .iter()
                .zip(&b.positions)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            de && dx > opts.order_tolerance * params.wavelength
        }
        _ => false,
    };
    // Ties at the thresholds count as pinned.
    let force_free = restoring_force.is_nan() || restoring_force < opts.force_tolerance;
    let classification = if bistable {
        Phase::Bistable
    } else if order.abs() < opts.order_tolerance && force_free {
        Phase::Sliding
    } else {
        Phase::Pinned
    };

    let (fluct_stable, chain_temperature) = if opts.fluctuations {
        match FluctuationModel::new(params, &state) {
            Ok(model) => {
                let st = stability(&model);
                let t = if st.stable {
                    match steady_covariance(&model) {
                        Ok(c) => c.chain_temperature,
                        Err(e) => {
                            diagnostics.push(format!("covariance: {e}"));
                            f64::NAN
                        }
                    }
                } else {
                    f64::NAN
                };
                (st.stable, t)
            }
            Err(e) => {
                diagnostics.push(format!("fluctuations: {e}"));
                (false, f64::NAN)
            }
        }
    } else {
        (false, f64::NAN)
    };

    Ok(PhasePoint {
        n_ions: params.n_ions,
        eta: params.eta,
        cooperativity: params.cooperativity(),
        delta_c: params.delta_c,
        bunching: state.bunching,
        phonon_gap,
        restoring_force,
        order_parameter: order,
        classification,
        bistable,
        photon_number: state.photon_number,
        delta_eff: state.delta_eff,
        quantum_flag: quantum_regime(state.photon_number),
        fluct_stable,
        chain_temperature,
        kink_estimate: kink_estimate(params, state.bunching),
        finite_size_warning: even,
        state,
        forward: fstate,
        backward: bstate,
        diagnostics,
    })
}

/// Classifies a single parameter point from a forward ramp and a commensurate seed.
pub fn classify_point(params: &SystemParams, opts: &ClassifyOptions) -> Result<PhasePoint> {
    params.validate()?;
    let forward = ramp_up(params, &opts.minimize);
    let backward = backward_start(params, &opts.minimize, forward.as_ref().ok());
    assemble(params, &forward, &backward, opts).map_err(Error::InvalidParams)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Cooperativity,
    DeltaC,
    Ions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spacing {
    Linear,
    Log,
}

pub fn grid(min: f64, max: f64, count: usize, spacing: Spacing) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            match spacing {
                Spacing::Linear => min + t * (max - min),
                Spacing::Log => min * (max / min).powf(t),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// rad/s, strictly increasing
    pub eta: Vec<f64>,
    /// Secondary axis; `None` sweeps a single row at the base parameters.
    pub axis: Option<Axis>,
    /// Values along the secondary axis (C, rad/s, or ion count).
    pub values: Vec<f64>,
    /// When sweeping C, place the trap centre at the matching lattice extremum.
    pub auto_offset: bool,
}

impl SweepGrid {
    pub fn row_params(&self, base: &SystemParams, row: usize) -> Result<SystemParams> {
        let Some(axis) = self.axis else { return Ok(base.clone()) };
        let v = self.values[row];
        Ok(match axis {
            Axis::Cooperativity if self.auto_offset => base.clone().with_cooperativity(v),
            Axis::Cooperativity => SystemParams { u0: v * base.kappa / base.n_ions as f64, ..base.clone() },
            Axis::DeltaC => base.clone().with_delta_c(v),
            Axis::Ions => {
                let n = v.round() as usize;
                if base.n_ions >= 2 {
                    base.scale_to_n(base.n_ions, n)?
                } else {
                    SystemParams { n_ions: n, ..base.clone() }
                }
            }
        })
    }

    pub fn rows(&self) -> usize {
        if self.axis.is_some() {
            self.values.len()
        } else {
            1
        }
    }
}

fn sweep_row(base: &SystemParams, grid: &SweepGrid, row: usize, opts: &ClassifyOptions) -> Vec<PointOutcome> {
    let secondary = grid.axis.map_or(f64::NAN, |_| grid.values[row]);
    let fail = |eta: f64, message: String| PointError { row, eta, secondary, message };
    let params = match grid.row_params(base, row).and_then(|p| p.validate().map(|_| p)) {
        Ok(p) => p,
        Err(e) => return grid.eta.iter().map(|&eta| Err(fail(eta, e.to_string()))).collect(),
    };
    let at = |eta: f64| params.clone().with_eta(eta);
    let m = &opts.minimize;

    let mut forward: Vec<Result<Relaxed>> = Vec::with_capacity(grid.eta.len());
    let mut seed: Option<Vec<f64>> = None;
    for &eta in &grid.eta {
        let p = at(eta);
        let r = match &seed {
            None => ramp_up(&p, m),
            Some(phi) => Solver::new(&p, m).relax(phi),
        };
        if let Ok(r) = &r {
            seed = Some(r.phi.clone());
        }
        forward.push(r);
    }

    let mut backward: Vec<Result<Relaxed>> = Vec::with_capacity(grid.eta.len());
    let mut seed: Option<Vec<f64>> = None;
    for (i, &eta) in grid.eta.iter().enumerate().rev() {
        let p = at(eta);
        let r = match &seed {
            None => backward_start(&p, m, forward[i].as_ref().ok()),
            Some(phi) => Solver::new(&p, m).relax(phi),
        };
        if let Ok(r) = &r {
            seed = Some(r.phi.clone());
        }
        backward.push(r);
    }
    backward.reverse();

    grid.eta
        .iter()
        .enumerate()
        .map(|(i, &eta)| assemble(&at(eta), &forward[i], &backward[i], opts).map_err(|msg| fail(eta, msg)))
        .collect()
}

/// Rows run in parallel on the current rayon pool; output is ordered by (row, eta).
pub fn sweep_phase_diagram(base: &SystemParams, grid: &SweepGrid, opts: &ClassifyOptions) -> Result<Vec<PointOutcome>> {
    base.validate()?;
    if grid.eta.is_empty() || (grid.axis.is_some() && grid.values.is_empty()) {
        return Err(Error::InvalidParams("sweep grid is empty".into()));
    }
    if grid.eta.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("eta axis must be strictly increasing".into()));
    }
    let rows: Vec<Vec<PointOutcome>> =
        (0..grid.rows()).into_par_iter().map(|row| sweep_row(base, grid, row, opts)).collect();
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone)]
pub struct CriticalDrive {
    /// Drive of the smallest phonon gap along the forward branch, rad/s.
    pub eta: f64,
    /// Phonon gap at `eta`, rad/s.
    pub gap: f64,
    /// Last state below the order-parameter threshold.
    pub below: ChainState,
    /// First state above it.
    pub above: ChainState,
}

/// Pump amplitude at which forward continuation first breaks the reflection
/// symmetry, bracketed on a geometric scan of `scan` points and refined by bisection.
pub fn critical_drive(
    params: &SystemParams,
    eta_lo: f64,
    eta_hi: f64,
    scan: usize,
    opts: &ClassifyOptions,
) -> Result<CriticalDrive> {
    params.validate()?;
    let m = &opts.minimize;
    let at = |eta: f64| params.clone().with_eta(eta);
    let pinned = |eta: f64, r: &Relaxed| {
        let p = at(eta);
        let s = Solver::new(&p, m).state(r);
        displacement(&s, &p).abs() >= opts.order_tolerance
    };
    let etas = grid(eta_lo, eta_hi, scan.max(2), Spacing::Log);
    let mut below = ramp_up(&at(etas[0]), m)?;
    if pinned(etas[0], &below) {
        return Err(Error::NoTransition { lo: eta_lo, hi: eta_hi });
    }
    let mut lo = etas[0];
    let mut bracket = None;
    for &eta in &etas[1..] {
        let r = Solver::new(&at(eta), m).relax(&below.phi)?;
        if pinned(eta, &r) {
            bracket = Some((eta, r));
            break;
        }
        lo = eta;
        below = r;
    }
    let Some((mut hi, mut above)) = bracket else {
        return Err(Error::NoTransition { lo: eta_lo, hi: eta_hi });
    };
    let (scan_lo, scan_hi, scan_seed) = (lo, hi, below.phi.clone());
    while hi - lo > 1e-7 * hi {
        let mid = (lo * hi).sqrt();
        let r = Solver::new(&at(mid), m).relax(&below.phi)?;
        if pinned(mid, &r) {
            hi = mid;
            above = r;
        } else {
            lo = mid;
            below = r;
        }
    }
    let pl = at(lo);
    let ph = at(hi);
    let gap_at = |eta: f64| -> Result<f64> {
        let p = at(eta);
        let r = Solver::new(&p, m).relax(&scan_seed)?;
        Ok((r.lambda_min.max(0.0) * p.derived_scales().internal_curvature() / p.mass).sqrt())
    };
    // The gap closes at the bifurcation, which precedes the order threshold.
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (scan_lo.ln(), scan_hi.ln());
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let (mut gc, mut gd) = (gap_at(c.exp())?, gap_at(d.exp())?);
    while b - a > 1e-9 {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - golden * (b - a);
            gc = gap_at(c.exp())?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + golden * (b - a);
            gd = gap_at(d.exp())?;
        }
    }
    let (eta_c, gap) = if gc <= gd { (c.exp(), gc) } else { (d.exp(), gd) };
    Ok(CriticalDrive {
        eta: eta_c,
        gap,
        below: Solver::new(&pl, m).state(&below),
        above: Solver::new(&ph, m).state(&above),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkPoint {
    pub n_ions: usize,
    pub bunching: f64,
    pub kink_estimate: f64,
    pub pinned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkScaling {
    pub points: Vec<KinkPoint>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
}

/// Least-squares line through `(x, y)`: slope, intercept and R^2.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some((slope, intercept, r2))
}

/// Kink count versus chain length, each chain rescaled from `base_n` ions.
pub fn kink_scaling(
    base: &SystemParams,
    base_n: usize,
    n_values: &[usize],
    opts: &ClassifyOptions,
) -> Result<KinkScaling> {
    if let Some(n) = n_values.iter().find(|n| *n % 2 == 0) {
        return Err(Error::InvalidParams(format!("kink scaling needs odd chains, got N = {n}")));
    }
    let points = n_values
        .par_iter()
        .map(|&n| {
            let p = base.scale_to_n(base_n, n)?;
            let r = ramp_up(&p, &opts.minimize)?;
            let s = Solver::new(&p, &opts.minimize).state(&r);
            Ok(KinkPoint {
                n_ions: n,
                bunching: s.bunching,
                kink_estimate: kink_estimate(&p, s.bunching),
                pinned: displacement(&s, &p).abs() >= opts.order_tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = points.iter().map(|p| p.n_ions as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.kink_estimate).collect();
    let fit = linear_fit(&x, &y);
    Ok(KinkScaling {
        points,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        r_squared: fit.map(|f| f.2),
    })
}
