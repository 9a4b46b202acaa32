//! Trap, Coulomb and cavity potentials with analytic derivatives.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Ion configuration together with the cavity observables it produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    /// m, ascending
    pub positions: Vec<f64>,
    pub bunching: f64,
    /// rad/s
    pub delta_eff: f64,
    pub photon_number: f64,
    /// J
    pub energy: f64,
    pub is_local_min: bool,
}

impl ChainState {
    /// Fills the derived fields for `positions`; `is_local_min` comes from the Hessian.
    pub fn evaluate(params: &SystemParams, positions: Vec<f64>) -> Result<Self> {
        let land = Landscape::new(params);
        let phi = land.phases(&positions);
        land.check(&phi)?;
        let is_local_min = is_positive_definite(&land.hessian(&phi, false));
        Ok(Self::from_phases(params, &land, &phi, is_local_min))
    }

    pub(crate) fn from_phases(
        params: &SystemParams,
        land: &Landscape,
        phi: &[f64],
        is_local_min: bool,
    ) -> Self {
        let d = land.detuning(phi);
        Self {
            positions: phi.iter().map(|p| p / land.k).collect(),
            bunching: land.bunching(phi),
            delta_eff: d * params.kappa,
            photon_number: land.photons(d),
            energy: land.energy(phi) * land.hbar_kappa,
            is_local_min,
        }
    }

    pub fn n_ions(&self) -> usize {
        self.positions.len()
    }

    /// Index of the central ion (the upper one of the middle pair for even N).
    pub fn center_index(&self) -> usize {
        self.positions.len() / 2
    }

    /// Displacement of the chain centre from the trap centre, m. For even N the
    /// midpoint of the two middle ions is used.
    pub fn central_displacement(&self, params: &SystemParams) -> f64 {
        let n = self.positions.len();
        let c = if n % 2 == 1 {
            self.positions[n / 2]
        } else {
            0.5 * (self.positions[n / 2 - 1] + self.positions[n / 2])
        };
        c - params.trap_center_offset
    }

    /// Smallest nearest-neighbour spacing, m; `None` for a single ion.
    pub fn minimal_spacing(&self) -> Option<f64> {
        self.positions
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(|a, b| a.total_cmp(b))
    }
}

pub(crate) fn is_positive_definite(h: &DMatrix<f64>) -> bool {
    let ev = SymmetricEigen::new(h.clone()).eigenvalues;
    let max = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    min > 1e-9 * max
}

/// Potential in internal units: phases `phi = k*x`, energies in `hbar*kappa`.
///
/// `E = a/2 sum (phi - phi0)^2 + b sum_{i<j} 1/|phi_i - phi_j| - eta2 atan(D) - f sum phi`
/// with `D = dc - u sum cos^2 phi`.
#[derive(Debug, Clone)]
pub(crate) struct Landscape {
    pub a: f64,
    pub b: f64,
    pub eta2: f64,
    pub dc: f64,
    pub u: f64,
    pub phi0: f64,
    pub tilt: f64,
    pub k: f64,
    pub hbar_kappa: f64,
}

impl Landscape {
    pub fn new(p: &SystemParams) -> Self {
        let k = p.wavenumber();
        let hk = p.constants.hbar * p.kappa;
        Self {
            a: p.mass * p.trap_freq.powi(2) / (hk * k * k),
            b: p.charge * p.charge * k / (4.0 * PI * p.constants.epsilon0 * hk),
            eta2: (p.eta / p.kappa).powi(2),
            dc: p.delta_c / p.kappa,
            u: p.u0 / p.kappa,
            phi0: k * p.trap_center_offset,
            tilt: 0.0,
            k,
            hbar_kappa: hk,
        }
    }

    /// Same trap and Coulomb terms with the cavity switched off.
    pub fn bare(&self) -> Self {
        Self { eta2: 0.0, u: 0.0, dc: 0.0, tilt: 0.0, ..self.clone() }
    }

    pub fn phases(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v * self.k).collect()
    }

    pub fn check(&self, phi: &[f64]) -> Result<()> {
        if phi.is_empty() {
            return Err(Error::EmptyPositions);
        }
        for i in 0..phi.len() {
            for j in i + 1..phi.len() {
                if phi[i] == phi[j] {
                    return Err(Error::CoincidentIons { i, j });
                }
            }
        }
        Ok(())
    }

    pub fn bunching(&self, phi: &[f64]) -> f64 {
        phi.iter().map(|p| p.cos().powi(2)).sum::<f64>() / phi.len() as f64
    }

    pub fn detuning(&self, phi: &[f64]) -> f64 {
        self.dc - self.u * phi.iter().map(|p| p.cos().powi(2)).sum::<f64>()
    }

    pub fn photons(&self, d: f64) -> f64 {
        self.eta2 / (1.0 + d * d)
    }

    pub fn ion_energy(&self, phi: &[f64]) -> f64 {
        let mut e = 0.0;
        for (i, &pi) in phi.iter().enumerate() {
            e += 0.5 * self.a * (pi - self.phi0).powi(2);
            for &pj in &phi[i + 1..] {
                e += self.b / (pj - pi).abs();
            }
        }
        e
    }

    pub fn cavity_energy(&self, phi: &[f64]) -> f64 {
        -self.eta2 * self.detuning(phi).atan()
    }

    pub fn energy(&self, phi: &[f64]) -> f64 {
        self.ion_energy(phi) + self.cavity_energy(phi) - self.tilt * phi.iter().sum::<f64>()
    }

    pub fn gradient(&self, phi: &[f64]) -> DVector<f64> {
        let n = phi.len();
        let nb = self.photons(self.detuning(phi));
        DVector::from_fn(n, |j, _| {
            let mut g = self.a * (phi[j] - self.phi0) - nb * self.u * (2.0 * phi[j]).sin() - self.tilt;
            for (i, &pi) in phi.iter().enumerate() {
                if i != j {
                    let d = phi[j] - pi;
                    g -= self.b * d.signum() / (d * d);
                }
            }
            g
        })
    }

    /// Hessian; `frozen` drops the term from the photon number's own response.
    pub fn hessian(&self, phi: &[f64], frozen: bool) -> DMatrix<f64> {
        let n = phi.len();
        let d = self.detuning(phi);
        let nb = self.photons(d);
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut diag = self.a - 2.0 * nb * self.u * (2.0 * phi[j]).cos();
            for i in 0..n {
                if i != j {
                    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                    let c = 2.0 * self.b / (phi[hi] - phi[lo]).abs().powi(3);
                    h[(i, j)] = -c;
                    diag += c;
                }
            }
            h[(j, j)] = diag;
        }
        if !frozen {
            let s = 2.0 * d * nb / (1.0 + d * d) * self.u * self.u;
            let sv: Vec<f64> = phi.iter().map(|p| (2.0 * p).sin()).collect();
            for i in 0..n {
                for j in i..n {
                    let v = s * sv[i] * sv[j];
                    h[(i, j)] += v;
                    if i != j {
                        h[(j, i)] += v;
                    }
                }
            }
        }
        h
    }
}

/// `B = (1/N) sum cos^2(k x_j)`.
pub fn bunching(positions: &[f64], k: f64) -> Result<f64> {
    if positions.is_empty() {
        return Err(Error::EmptyPositions);
    }
    Ok(positions.iter().map(|x| (k * x).cos().powi(2)).sum::<f64>() / positions.len() as f64)
}

/// `Delta_eff = Delta_c - N U0 B`, rad/s.
pub fn effective_detuning(params: &SystemParams, bunching: f64) -> f64 {
    params.delta_c - params.n_ions as f64 * params.u0 * bunching
}

/// `n = eta^2/(kappa^2 + Delta_eff^2)`.
pub fn mean_photon_number(params: &SystemParams, delta_eff: f64) -> f64 {
    params.eta * params.eta / (params.kappa * params.kappa + delta_eff * delta_eff)
}

/// Fewer than one intracavity photon on average.
pub fn quantum_regime(photon_number: f64) -> bool {
    photon_number < 1.0
}

/// `-(hbar eta^2/kappa) atan(Delta_eff/kappa)`, J.
pub fn cavity_potential(params: &SystemParams, positions: &[f64]) -> Result<f64> {
    let b = bunching(positions, params.wavenumber())?;
    let d = effective_detuning(params, b);
    Ok(-params.constants.hbar * params.eta * params.eta / params.kappa * (d / params.kappa).atan())
}

/// Trap plus Coulomb energy, J.
pub fn ion_potential(params: &SystemParams, positions: &[f64]) -> Result<f64> {
    let land = Landscape::new(params);
    let phi = land.phases(positions);
    land.check(&phi)?;
    Ok(land.ion_energy(&phi) * land.hbar_kappa)
}

pub fn total_potential(params: &SystemParams, positions: &[f64]) -> Result<f64> {
    let land = Landscape::new(params);
    let phi = land.phases(positions);
    land.check(&phi)?;
    Ok(land.energy(&phi) * land.hbar_kappa)
}

/// `dV/dx_j`, N.
pub fn total_gradient(params: &SystemParams, positions: &[f64]) -> Result<DVector<f64>> {
    let land = Landscape::new(params);
    let phi = land.phases(positions);
    land.check(&phi)?;
    Ok(land.gradient(&phi) * (land.hbar_kappa * land.k))
}

/// `d^2V/dx_i dx_j`, N/m.
pub fn total_hessian(params: &SystemParams, positions: &[f64]) -> Result<DMatrix<f64>> {
    hessian_si(params, positions, false)
}

/// Hessian at fixed photon number, N/m.
pub fn frozen_field_hessian(params: &SystemParams, positions: &[f64]) -> Result<DMatrix<f64>> {
    hessian_si(params, positions, true)
}

fn hessian_si(params: &SystemParams, positions: &[f64], frozen: bool) -> Result<DMatrix<f64>> {
    let land = Landscape::new(params);
    let phi = land.phases(positions);
    land.check(&phi)?;
    Ok(land.hessian(&phi, frozen) * (land.hbar_kappa * land.k * land.k))
}
