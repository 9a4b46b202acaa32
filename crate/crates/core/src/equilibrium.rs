//! Equilibrium search and the depinning (restoring) force.

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::potential::{ChainState, Landscape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedStrategy {
    BareChain,
    Provided,
    PerturbedProvided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Largest accepted gradient component, units of `m*omega^2*L`.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Seed perturbation amplitude as a fraction of the wavelength.
    pub perturbation_scale: f64,
    pub seed_strategy: SeedStrategy,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-10,
            max_iterations: 2000,
            perturbation_scale: 1e-3,
            seed_strategy: SeedStrategy::Provided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepinningResult {
    /// Units of `m*omega^2*L`.
    pub restoring_force: f64,
    pub converged: bool,
    pub tilted_state: ChainState,
}

/// Largest step of a single Newton update inside the cavity lattice, rad.
const LATTICE_STEP: f64 = 0.2;
/// Perturbation used to leave a saddle along its softest direction, rad.
const SADDLE_KICK: f64 = 0.05;
/// Iteration budget multiplier for tilted solves during depinning.
const DEPIN_ITERATIONS: usize = 20;

#[derive(Debug, Clone)]
pub(crate) struct Relaxed {
    pub phi: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub softest: DVector<f64>,
}

impl Relaxed {
    pub fn is_local_min(&self) -> bool {
        self.lambda_min > 1e-9 * self.lambda_max.abs()
    }
}

/// Gradient tolerance converted from `m*omega^2*L` to `hbar*kappa*k`.
pub(crate) fn internal_tolerance(params: &SystemParams, tol: f64) -> f64 {
    let s = params.derived_scales();
    tol * s.force / s.internal_force()
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn ordered(phi: &[f64]) -> bool {
    phi.windows(2).all(|w| w[1] > w[0])
}

/// Saddle-free Newton iteration with a capped step and Armijo backtracking.
pub(crate) fn newton(
    land: &Landscape,
    seed: &[f64],
    tol: f64,
    max_iter: usize,
    max_step: f64,
) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let mut phi = seed.to_vec();
    for it in 0..max_iter {
        let g = land.gradient(&phi);
        let gmax = max_abs(&g);
        if gmax < tol {
            return Ok(phi);
        }
        let eig = SymmetricEigen::new(land.hessian(&phi, false));
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = 1e-8 * scale;
        let proj = eig.eigenvectors.transpose() * &g;
        let weighted = DVector::from_fn(proj.len(), |i, _| proj[i] / eig.eigenvalues[i].abs().max(floor));
        let mut d = -(&eig.eigenvectors * weighted);
        let dmax = max_abs(&d);
        if dmax > max_step {
            d *= max_step / dmax;
        }
        let e0 = land.energy(&phi);
        let slope = g.dot(&d);
        let mut alpha = 1.0;
        let mut next = None;
        for _ in 0..50 {
            let trial: Vec<f64> = phi.iter().zip(d.iter()).map(|(p, s)| p + alpha * s).collect();
            if ordered(&trial) && land.energy(&trial) <= e0 + 1e-4 * alpha * slope + 1e-13 * e0.abs() {
                next = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        match next {
            Some(trial) => phi = trial,
            // Round-off floor: the energy can no longer resolve a descent step.
            None if gmax < 100.0 * tol => return Ok(phi),
            None => return Err((it, gmax)),
        }
    }
    let g = max_abs(&land.gradient(&phi));
    if g < tol {
        Ok(phi)
    } else {
        Err((max_iter, g))
    }
}

pub(crate) fn analyse(land: &Landscape, phi: Vec<f64>) -> Relaxed {
    let eig = SymmetricEigen::new(land.hessian(&phi, false));
    let mut lo = 0;
    let mut hi = 0;
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[lo] {
            lo = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[hi] {
            hi = i;
        }
    }
    Relaxed {
        lambda_min: eig.eigenvalues[lo],
        lambda_max: eig.eigenvalues[hi],
        softest: eig.eigenvectors.column(lo).into_owned(),
        phi,
    }
}

pub(crate) struct Solver<'a> {
    pub params: &'a SystemParams,
    pub land: Landscape,
    pub tol: f64,
    pub max_iter: usize,
}

impl<'a> Solver<'a> {
    pub fn new(params: &'a SystemParams, opts: &MinimizeOptions) -> Self {
        Self {
            params,
            land: Landscape::new(params),
            tol: internal_tolerance(params, opts.gradient_tolerance),
            max_iter: opts.max_iterations,
        }
    }

    fn step_cap(&self) -> f64 {
        if self.land.eta2 * self.land.u != 0.0 || self.land.tilt != 0.0 {
            LATTICE_STEP
        } else {
            0.5 * self.land.k * self.params.characteristic_length()
        }
    }

    fn error(&self, (iterations, g): (usize, f64)) -> Error {
        let s = self.params.derived_scales();
        Error::NotConverged { iterations, gradient: g * s.internal_force() / s.force }
    }

    pub fn minimize(&self, seed: &[f64]) -> Result<Relaxed> {
        let phi = newton(&self.land, seed, self.tol, self.max_iter, self.step_cap())
            .map_err(|e| self.error(e))?;
        Ok(analyse(&self.land, phi))
    }

    /// Minimizes, then leaves a saddle along its softest direction if needed.
    pub fn relax(&self, seed: &[f64]) -> Result<Relaxed> {
        let first = self.minimize(seed)?;
        if first.is_local_min() {
            return Ok(first);
        }
        let v = &first.softest;
        let vmax = max_abs(v);
        let mut best: Option<(f64, Relaxed)> = None;
        for sign in [1.0, -1.0] {
            let kicked: Vec<f64> = first
                .phi
                .iter()
                .zip(v.iter())
                .map(|(p, s)| p + sign * SADDLE_KICK * s / vmax)
                .collect();
            if !ordered(&kicked) {
                continue;
            }
            let Ok(r) = self.minimize(&kicked) else { continue };
            let e = self.land.energy(&r.phi);
            if best.as_ref().is_none_or(|(eb, _)| e < *eb) {
                best = Some((e, r));
            }
        }
        Ok(match best {
            Some((e, r)) if e <= self.land.energy(&first.phi) => r,
            _ => first,
        })
    }

    pub fn state(&self, r: &Relaxed) -> ChainState {
        let mut land = self.land.clone();
        land.tilt = 0.0;
        ChainState::from_phases(self.params, &land, &r.phi, r.is_local_min())
    }
}

/// Initial guess for the bare chain: uniform spacing around the trap centre.
fn bare_seed(params: &SystemParams, land: &Landscape) -> Vec<f64> {
    let n = params.n_ions;
    let spacing = 1.3 * params.characteristic_length() * land.k * (n as f64).powf(-0.3);
    (0..n)
        .map(|j| land.phi0 + (j as f64 - 0.5 * (n as f64 - 1.0)) * spacing)
        .collect()
}

pub(crate) fn bare_phases(params: &SystemParams) -> Result<Vec<f64>> {
    params.validate()?;
    let land = Landscape::new(params).bare();
    let seed = bare_seed(params, &land);
    let tol = internal_tolerance(params, 1e-12);
    let cap = 0.5 * land.k * params.characteristic_length();
    newton(&land, &seed, tol, 5000, cap).map_err(|(iterations, g)| {
        let s = params.derived_scales();
        Error::NotConverged { iterations, gradient: g * s.internal_force() / s.force }
    })
}

/// Equilibrium of trap plus Coulomb repulsion with the pump switched off.
pub fn bare_chain(params: &SystemParams) -> Result<ChainState> {
    let phi = bare_phases(params)?;
    let bare = SystemParams { eta: 0.0, ..params.clone() };
    let land = Landscape::new(&bare);
    let r = analyse(&land, phi);
    Ok(ChainState::from_phases(&bare, &land, &r.phi, r.is_local_min()))
}

/// Deterministic seed perturbation in [-scale, scale] wavelengths.
pub(crate) fn perturb(phi: &[f64], scale: f64) -> Vec<f64> {
    const GOLDEN: f64 = 0.618_033_988_749_895;
    phi.iter()
        .enumerate()
        .map(|(j, p)| {
            let w = 2.0 * ((j as f64 + 1.0) * GOLDEN).fract() - 1.0;
            p + 2.0 * std::f64::consts::PI * scale * w
        })
        .collect()
}

fn seed_phases(params: &SystemParams, seed: &ChainState, opts: &MinimizeOptions) -> Result<Vec<f64>> {
    let k = params.wavenumber();
    let phi = match opts.seed_strategy {
        SeedStrategy::BareChain => bare_phases(params)?,
        SeedStrategy::Provided => seed.positions.iter().map(|x| x * k).collect(),
        SeedStrategy::PerturbedProvided => {
            let phi: Vec<f64> = seed.positions.iter().map(|x| x * k).collect();
            perturb(&phi, opts.perturbation_scale)
        }
    };
    if phi.len() != params.n_ions {
        return Err(Error::InvalidParams(format!(
            "seed has {} ions, parameters have {}",
            phi.len(),
            params.n_ions
        )));
    }
    Landscape::new(params).check(&phi)?;
    if !ordered(&phi) {
        return Err(Error::InvalidParams("seed positions must be strictly increasing".into()));
    }
    Ok(phi)
}

/// Stationary point of the total potential reached from `seed`. Saddles are
/// returned with `is_local_min = false`.
pub fn minimize(params: &SystemParams, seed: &ChainState, opts: &MinimizeOptions) -> Result<ChainState> {
    params.validate()?;
    let phi = seed_phases(params, seed, opts)?;
    let solver = Solver::new(params, opts);
    let r = solver.minimize(&phi)?;
    Ok(solver.state(&r))
}

/// Like [`minimize`], but a saddle result is perturbed along its softest
/// mode in both directions and the lower-energy minimum is kept.
pub fn relax(params: &SystemParams, seed: &ChainState, opts: &MinimizeOptions) -> Result<ChainState> {
    params.validate()?;
    let phi = seed_phases(params, seed, opts)?;
    let solver = Solver::new(params, opts);
    let r = solver.relax(&phi)?;
    Ok(solver.state(&r))
}

/// Minimum of `V - F*sum x_j` for a uniform force `force` (N). The returned
/// energy excludes the tilt term.
pub fn minimize_tilted(
    params: &SystemParams,
    seed: &ChainState,
    force: f64,
    opts: &MinimizeOptions,
) -> Result<ChainState> {
    params.validate()?;
    let phi = seed_phases(params, seed, opts)?;
    let mut solver = Solver::new(params, opts);
    solver.land.tilt = force / params.derived_scales().internal_force();
    let r = solver.relax(&phi)?;
    Ok(solver.state(&r))
}

/// Smallest uniform force that brings the central ion back onto the cavity
/// extremum at the trap centre, found by bisection.
pub fn depinning_force(
    params: &SystemParams,
    state: &ChainState,
    opts: &MinimizeOptions,
) -> Result<DepinningResult> {
    params.validate()?;
    let n = params.n_ions;
    if n.is_multiple_of(2) {
        return Err(Error::InvalidParams("depinning force needs an odd number of ions".into()));
    }
    let scales = params.derived_scales();
    let mut solver = Solver::new(params, opts);
    // A depinned chain slides over many wavelengths before the trap stops it.
    solver.max_iter = opts.max_iterations.saturating_mul(DEPIN_ITERATIONS);
    let phi_start = seed_phases(params, state, &MinimizeOptions { seed_strategy: SeedStrategy::Provided, ..opts.clone() })?;
    let c = n / 2;
    let phi0 = solver.land.phi0;
    let target = phi0.cos().powi(2);
    let hit = |phi: &[f64]| (phi[c].cos().powi(2) - target).abs() < 1e-6;

    if hit(&phi_start) {
        return Ok(DepinningResult { restoring_force: 0.0, converged: true, tilted_state: state.clone() });
    }
    let side = (phi_start[c] - phi0).signum();

    let nb = solver.land.photons(solver.land.detuning(&phi_start));
    let mut f_max = 2.0 * solver.land.u.abs() * nb;
    if f_max <= 0.0 {
        f_max = solver.land.a;
    }

    // Trials start from the strongest tilt that has not yet passed, so the
    // pinned branch is followed adiabatically into its shrinking basin.
    let mut eval = |f: f64, seed: &[f64]| -> Result<(bool, bool, Relaxed)> {
        solver.land.tilt = -side * f;
        let r = solver.relax(seed)?;
        let reached = hit(&r.phi);
        let passed = reached || side * (r.phi[c] - phi0) <= 0.0;
        Ok((passed, reached, r))
    };

    let mut lo = 0.0;
    let mut hi = f_max;
    let mut lo_phi = phi_start.clone();
    let mut top = None;
    for _ in 0..=8 {
        let (passed, reached, r) = eval(hi, &lo_phi)?;
        if passed {
            top = Some((reached, r));
            break;
        }
        lo = hi;
        lo_phi = r.phi;
        hi *= 2.0;
    }
    let Some((mut reached, mut hi_state)) = top else {
        return Err(Error::BracketFailure { lo: lo * scales.internal_force(), hi: hi * scales.internal_force() });
    };

    let mut converged = reached;
    for _ in 0..200 {
        if reached || hi - lo <= 1e-12 * hi {
            converged = true;
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (passed, r_reached, r) = eval(mid, &lo_phi)?;
        if passed {
            hi = mid;
            hi_state = r;
            reached = r_reached;
        } else {
            lo = mid;
            lo_phi = r.phi;
        }
    }
    solver.land.tilt = 0.0;
    Ok(DepinningResult {
        restoring_force: hi * scales.internal_force() / scales.force,
        converged,
        tilted_state: solver.state(&hi_state),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::total_gradient;
    use std::f64::consts::PI;

    fn kappa() -> f64 {
        2.0 * PI * 0.2e6
    }

    #[test]
    fn bare_two_and_three() {
        let p = SystemParams::ytterbium(2);
        let l = p.characteristic_length();
        let s = bare_chain(&p).unwrap();
        let u = 0.25f64.cbrt() * l;
        assert!((s.positions[1] - u).abs() < 1e-10 * u);
        assert!((s.positions[0] + u).abs() < 1e-10 * u);
        assert!(s.is_local_min);
        let g = total_gradient(&p, &s.positions).unwrap();
        assert!(g.amax() < 1e-10 * p.derived_scales().force);
    }

    #[test]
    fn single_ion_at_trap_centre() {
        let p = SystemParams::ytterbium(1);
        let s = bare_chain(&p).unwrap();
        assert_eq!(s.positions, vec![0.0]);
    }

    #[test]
    fn bare_seed_is_fixed_point() {
        let p = SystemParams::ytterbium(7);
        let s = bare_chain(&p).unwrap();
        let again = minimize(&p, &s, &MinimizeOptions::default()).unwrap();
        for (a, b) in s.positions.iter().zip(&again.positions) {
            assert!((a - b).abs() < 1e-12 * s.positions[6]);
        }
    }

    #[test]
    fn perturbed_seed_returns_to_bare() {
        let p = SystemParams::ytterbium(5);
        let s = bare_chain(&p).unwrap();
        let opts = MinimizeOptions { seed_strategy: SeedStrategy::PerturbedProvided, ..Default::default() };
        let r = minimize(&p, &s, &opts).unwrap();
        for (a, b) in s.positions.iter().zip(&r.positions) {
            assert!((a - b).abs() < 1e-9 * 369e-9);
        }
    }

    #[test]
    fn sliding_has_no_restoring_force() {
        let p = SystemParams::ytterbium(11).with_cooperativity(0.5).with_eta(50.0 * kappa());
        let opts = MinimizeOptions::default();
        let s = relax(&p, &bare_chain(&p).unwrap(), &opts).unwrap();
        assert!(s.central_displacement(&p).abs() < 1e-6 * p.wavelength);
        let d = depinning_force(&p, &s, &opts).unwrap();
        assert_eq!(d.restoring_force, 0.0);
    }

    #[test]
    fn even_chain_rejected() {
        let p = SystemParams::ytterbium(4);
        let s = bare_chain(&p).unwrap();
        assert!(depinning_force(&p, &s, &MinimizeOptions::default()).is_err());
    }
}
