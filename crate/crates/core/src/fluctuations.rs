//! Linearized cavity-phonon fluctuations: drift and diffusion matrices,
//! stability, steady-state covariance and the cavity output spectrum.
//!
//! Quadratures are ordered `(X, P, q_1, p_1, ..., q_N, p_N)` with
//! `X = (a + a^dag)/sqrt 2`, and all matrices are stored in units of `kappa`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::phases::{frozen_field_modes, NormalModes};
use crate::potential::ChainState;

/// Modes softer than this fraction of the trap frequency are rejected.
pub const GAP_TOLERANCE: f64 = 1e-6;
/// Stability margin on eigenvalue real parts, units of `kappa`.
pub const STABILITY_TOLERANCE: f64 = 1e-12;
/// Undamped modes whose coupling is below this fraction of the strongest one
/// are left out of the covariance solve.
pub const COUPLING_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct PositionMap {
    /// `M_{jn}`
    pub mode_matrix: DMatrix<f64>,
    /// `sqrt(hbar/(m*omega_n))`, m
    pub zero_point: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FluctuationModel {
    /// `c_n`, rad/s
    pub couplings: Vec<f64>,
    /// `omega_n`, rad/s
    pub mode_freqs: Vec<f64>,
    /// +1 for a confining mode, -1 for an inverted one.
    pub mode_signs: Vec<f64>,
    /// `Gamma_n`, rad/s
    pub mode_damping: Vec<f64>,
    pub bath_occ: Vec<f64>,
    /// rad/s
    pub delta_eff: f64,
    /// rad/s
    pub kappa: f64,
    /// Real mean intracavity amplitude.
    pub mean_field: f64,
    /// Drift matrix in units of `kappa`.
    pub drift: DMatrix<f64>,
    /// Diffusion matrix in units of `kappa`.
    pub diffusion: DMatrix<f64>,
    pub positions: Option<PositionMap>,
    pub hbar: f64,
    pub boltzmann: f64,
}

#[derive(Debug, Clone)]
pub struct Stability {
    pub stable: bool,
    /// Units of `kappa`.
    pub eigenvalues: Vec<Complex64>,
    pub max_real: f64,
}

#[derive(Debug, Clone)]
pub struct CovarianceResult {
    /// Quadrature covariance; rows of modes left out of the solve are NaN.
    pub covariance: DMatrix<f64>,
    pub mode_occupations: Vec<f64>,
    /// K
    pub mode_temperatures: Vec<f64>,
    /// Mean of the finite mode temperatures, K.
    pub chain_temperature: f64,
    /// `<dx_j^2>^(1/2)` from the solved modes, m.
    pub position_spreads: Vec<f64>,
    pub determined: Vec<bool>,
    /// `max|A S + S A^T + D| / max|D|`
    pub residual: f64,
    pub symplectic_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    /// rad/s relative to the pump
    pub nu_grid: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub nu: f64,
    pub value: f64,
}

/// `c_n = sqrt(hbar/(2 m omega_n)) U0 sum_j M_jn d/dx cos^2(k x_j)`, rad/s.
pub fn mode_couplings(params: &SystemParams, state: &ChainState, modes: &NormalModes) -> Result<Vec<f64>> {
    let k = params.wavenumber();
    let grad: Vec<f64> = state.positions.iter().map(|x| -k * (2.0 * k * x).sin()).collect();
    modes
        .frequencies
        .iter()
        .enumerate()
        .map(|(n, &w)| {
            if w < GAP_TOLERANCE * params.trap_freq {
                return Err(Error::ZeroFrequencyMode { index: n, freq: w });
            }
            let proj: f64 = (0..grad.len()).map(|j| modes.mode_matrix[(j, n)] * grad[j]).sum();
            Ok((params.constants.hbar / (2.0 * params.mass * w)).sqrt() * params.u0 * proj)
        })
        .collect()
}

impl FluctuationModel {
    /// Model at an equilibrium, using phonon modes at fixed photon number.
    pub fn new(params: &SystemParams, state: &ChainState) -> Result<Self> {
        params.validate()?;
        let modes = frozen_field_modes(params, state)?;
        let couplings = mode_couplings(params, state, &modes)?;
        let signs = modes.curvatures.iter().map(|c| if *c < 0.0 { -1.0 } else { 1.0 }).collect();
        let damping = params.gamma_modes.resolve(params.n_ions);
        let bath = params.bath.occupations(&modes.frequencies, &params.constants);
        let zero_point = modes
            .frequencies
            .iter()
            .map(|w| (params.constants.hbar / (params.mass * w)).sqrt())
            .collect();
        let mut model = Self::from_parts(
            params.kappa,
            state.delta_eff,
            state.photon_number.sqrt(),
            couplings,
            modes.frequencies.clone(),
            signs,
            damping,
            bath,
        )?;
        model.positions = Some(PositionMap { mode_matrix: modes.mode_matrix, zero_point });
        model.hbar = params.constants.hbar;
        model.boltzmann = params.constants.boltzmann;
        Ok(model)
    }

    /// Builds drift and diffusion from explicit inputs (rates in rad/s).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        kappa: f64,
        delta_eff: f64,
        mean_field: f64,
        couplings: Vec<f64>,
        mode_freqs: Vec<f64>,
        mode_signs: Vec<f64>,
        mode_damping: Vec<f64>,
        bath_occ: Vec<f64>,
    ) -> Result<Self> {
        let n = couplings.len();
        if [mode_freqs.len(), mode_signs.len(), mode_damping.len(), bath_occ.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::InvalidParams("per-mode inputs differ in length".into()));
        }
        if kappa.is_nan() || kappa <= 0.0 {
            return Err(Error::InvalidParams("kappa must be positive".into()));
        }
        let dim = 2 * n + 2;
        let de = delta_eff / kappa;
        let mut a = DMatrix::zeros(dim, dim);
        let mut d = DMatrix::zeros(dim, dim);
        a[(0, 0)] = -1.0;
        a[(0, 1)] = -de;
        a[(1, 0)] = de;
        a[(1, 1)] = -1.0;
        d[(0, 0)] = 1.0;
        d[(1, 1)] = 1.0;
        for m in 0..n {
            let (q, p) = (2 + 2 * m, 3 + 2 * m);
            let g = 2.0 * mean_field * couplings[m] / kappa;
            let w = mode_freqs[m] / kappa;
            let gam = mode_damping[m] / kappa;
            a[(1, q)] = -g;
            a[(q, q)] = -gam;
            a[(q, p)] = w;
            a[(p, q)] = -mode_signs[m] * w;
            a[(p, p)] = -gam;
            a[(p, 0)] = -g;
            d[(q, q)] = gam * (2.0 * bath_occ[m] + 1.0);
            d[(p, p)] = d[(q, q)];
        }
        Ok(Self {
            couplings,
            mode_freqs,
            mode_signs,
            mode_damping,
            bath_occ,
            delta_eff,
            kappa,
            mean_field,
            drift: a,
            diffusion: d,
            positions: None,
            hbar: crate::params::PhysicalConstants::CODATA.hbar,
            boltzmann: crate::params::PhysicalConstants::CODATA.boltzmann,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.couplings.len()
    }

    /// Modes whose steady state is fixed by damping or by the cavity.
    pub fn determined_modes(&self) -> Vec<bool> {
        let strength: Vec<f64> = self.couplings.iter().map(|c| (self.mean_field * c).abs()).collect();
        let max = strength.iter().cloned().fold(0.0, f64::max);
        (0..self.n_modes())
            .map(|m| self.mode_damping[m] > 0.0 || (max > 0.0 && strength[m] > COUPLING_FLOOR * max))
            .collect()
    }
}

pub fn stability(model: &FluctuationModel) -> Stability {
    let eigenvalues: Vec<Complex64> = model.drift.complex_eigenvalues().iter().cloned().collect();
    let max_real = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Stability { stable: max_real <= STABILITY_TOLERANCE, eigenvalues, max_real }
}

/// Solves `A S + S A^T + D = 0` through the complex Schur form of `A`.
pub fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let (u, t) = nalgebra::linalg::Schur::new(ac).unpack();
    let c = -(u.adjoint() * d.map(|v| Complex64::new(v, 0.0)) * &u);
    let scale = a.amax().max(1.0);
    let mut margin = f64::INFINITY;
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut rhs = c[(i, j)];
            for k in i + 1..n {
                rhs -= t[(i, k)] * y[(k, j)];
            }
            for k in j + 1..n {
                rhs -= y[(i, k)] * t[(j, k)].conj();
            }
            let denom = t[(i, i)] + t[(j, j)].conj();
            margin = margin.min(denom.norm());
            if denom.norm() < 1e-14 * scale {
                return Err(Error::NearSingular(denom.norm()));
            }
            y[(i, j)] = rhs / denom;
        }
    }
    let s = (&u * y * u.adjoint()).map(|z| z.re);
    Ok((&s + s.transpose()) * 0.5)
}

/// Symplectic eigenvalues of a quadrature covariance (one per mode pair).
pub fn symplectic_eigenvalues(sigma: &DMatrix<f64>) -> Vec<f64> {
    let n = sigma.nrows();
    let mut j = DMatrix::zeros(n, n);
    for m in 0..n / 2 {
        j[(2 * m, 2 * m + 1)] = 1.0;
        j[(2 * m + 1, 2 * m)] = -1.0;
    }
    let mut nu: Vec<f64> = (j * sigma).complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
    nu.sort_by(|a, b| a.total_cmp(b));
    nu.into_iter().step_by(2).collect()
}

fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

pub fn steady_covariance(model: &FluctuationModel) -> Result<CovarianceResult> {
    let st = stability(model);
    if !st.stable {
        return Err(Error::Unstable(st.max_real));
    }
    let n = model.n_modes();
    let determined = model.determined_modes();
    let mut idx = vec![0, 1];
    for m in (0..n).filter(|&m| determined[m]) {
        idx.push(2 + 2 * m);
        idx.push(3 + 2 * m);
    }
    let a = submatrix(&model.drift, &idx);
    let d = submatrix(&model.diffusion, &idx);
    let red = solve_lyapunov(&a, &d)?;
    let res = &a * &red + &red * a.transpose() + &d;
    let residual = res.amax() / d.amax();
    if residual.is_nan() || residual >= 1e-8 {
        return Err(Error::Residual { residual, limit: 1e-8 });
    }
    let dim = 2 * n + 2;
    let mut sigma = DMatrix::from_element(dim, dim, f64::NAN);
    for (ri, &i) in idx.iter().enumerate() {
        for (rj, &j) in idx.iter().enumerate() {
            sigma[(i, j)] = red[(ri, rj)];
        }
    }
    let mut occ = vec![f64::NAN; n];
    let mut temps = vec![f64::NAN; n];
    for m in (0..n).filter(|&m| determined[m]) {
        let v = 0.5 * (sigma[(2 + 2 * m, 2 + 2 * m)] + sigma[(3 + 2 * m, 3 + 2 * m)] - 1.0);
        occ[m] = v;
        temps[m] = if v > 0.0 {
            model.hbar * model.mode_freqs[m] / (model.boltzmann * (1.0 / v).ln_1p())
        } else {
            0.0
        };
    }
    let finite: Vec<f64> = temps.iter().cloned().filter(|t| t.is_finite()).collect();
    let chain_temperature =
        if finite.is_empty() { f64::NAN } else { finite.iter().sum::<f64>() / finite.len() as f64 };
    let position_spreads = match &model.positions {
        None => Vec::new(),
        Some(pm) => (0..pm.mode_matrix.nrows())
            .map(|j| {
                let mut v = 0.0;
                for a in (0..n).filter(|&m| determined[m]) {
                    for b in (0..n).filter(|&m| determined[m]) {
                        v += pm.mode_matrix[(j, a)]
                            * pm.mode_matrix[(j, b)]
                            * pm.zero_point[a]
                            * pm.zero_point[b]
                            * sigma[(2 + 2 * a, 2 + 2 * b)];
                    }
                }
                v.max(0.0).sqrt()
            })
            .collect(),
    };
    Ok(CovarianceResult {
        symplectic_eigenvalues: symplectic_eigenvalues(&red),
        covariance: sigma,
        mode_occupations: occ,
        mode_temperatures: temps,
        chain_temperature,
        position_spreads,
        determined,
        residual,
    })
}

/// Cavity output spectrum on `nu_grid` (rad/s), with all rates scaled by `kappa`.
pub fn output_spectrum(model: &FluctuationModel, nu_grid: &[f64]) -> Result<SpectrumResult> {
    let k = model.kappa;
    let de = model.delta_eff / k;
    let a2 = model.mean_field * model.mean_field;
    let c: Vec<f64> = model.couplings.iter().map(|v| v / k).collect();
    let w: Vec<f64> = model.mode_freqs.iter().map(|v| v / k).collect();
    let g: Vec<f64> = model.mode_damping.iter().map(|v| v / k).collect();
    let one = Complex64::new(1.0, 0.0);
    let values = nu_grid
        .iter()
        .map(|&nu_si| {
            let nu = nu_si / k;
            let iv = Complex64::new(0.0, nu);
            let mut theta = Complex64::new(0.0, 0.0);
            let mut thermal = 0.0;
            for m in 0..c.len() {
                let den = w[m] * w[m] + (g[m] - iv) * (g[m] - iv);
                theta += c[m] * c[m] * w[m] / den;
                let g2 = g[m] * g[m];
                thermal += c[m] * c[m] * g2
                    * (model.bath_occ[m] / (g2 + (w[m] - nu).powi(2))
                        + (model.bath_occ[m] + 1.0) / (g2 + (w[m] + nu).powi(2)));
            }
            let resp = one + 4.0 * theta * de * a2 / ((one - iv) * (one - iv) + de * de);
            let s0 = 2.0 / (1.0 + (nu + de).powi(2)) / resp.norm_sqr();
            let s = s0 * (4.0 * theta.norm_sqr() * a2 / (1.0 + (nu - de).powi(2)) + thermal);
            if s.is_finite() {
                Ok(s)
            } else {
                Err(Error::NonFiniteSpectrum(nu_si))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpectrumResult { nu_grid: nu_grid.to_vec(), values })
}

/// Strict interior local maxima of the spectrum.
pub fn find_peaks(spectrum: &SpectrumResult) -> Vec<Peak> {
    let v = &spectrum.values;
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
        .map(|i| Peak { nu: spectrum.nu_grid[i], value: v[i] })
        .collect()
}

/// Groups sorted positions into clusters separated by more than `gap`.
pub fn clusters(positions: &[f64], gap: f64) -> Vec<Vec<f64>> {
    let mut sorted = positions.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<Vec<f64>> = Vec::new();
    for x in sorted {
        match out.last_mut() {
            Some(cl) if x - cl[cl.len() - 1] <= gap => cl.push(x),
            _ => out.push(vec![x]),
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix, ascending.
pub(crate) fn sorted_eigen(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = order.len();
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        let pivot = col.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let s = if pivot < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vecs[(r, c)] = s * col[r];
        }
    }
    (vals, vecs)
}
