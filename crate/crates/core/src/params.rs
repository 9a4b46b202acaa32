//! Physical parameter record, unit system and large-N scaling.
//!
//! All SI quantities live in [`SystemParams`]. Numerical work happens in a
//! dimensionless system where positions are phases `kx`, energies are in
//! units of `hbar*kappa` and rates in units of `kappa`; [`UnitScales`] holds
//! the conversion factors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fundamental constants used for every unit conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub boltzmann: f64,
    pub epsilon0: f64,
    pub elementary_charge: f64,
    pub atomic_mass_unit: f64,
}

impl PhysicalConstants {
    pub const CODATA: Self = Self {
        hbar: 1.054_571_817e-34,
        boltzmann: 1.380_649e-23,
        epsilon0: 8.854_187_812_8e-12,
        elementary_charge: 1.602_176_634e-19,
        atomic_mass_unit: 1.660_539_066_6e-27,
    };

    /// Constants rounded to three significant figures.
    pub const THREE_FIGURE: Self = Self {
        hbar: 1.05e-34,
        boltzmann: 1.38e-23,
        epsilon0: 8.85e-12,
        elementary_charge: 1.6e-19,
        atomic_mass_unit: 1.66e-27,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// A per-mode quantity, either shared by all modes or listed explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PerMode {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerMode {
    pub fn get(&self, n: usize) -> f64 {
        match self {
            PerMode::Uniform(v) => *v,
            PerMode::Each(v) => v[n],
        }
    }

    pub fn resolve(&self, count: usize) -> Vec<f64> {
        (0..count).map(|n| self.get(n)).collect()
    }

    fn check(&self, count: usize, what: &str) -> Result<()> {
        let values: &[f64] = match self {
            PerMode::Uniform(v) => std::slice::from_ref(v),
            PerMode::Each(v) => {
                if v.len() != count {
                    return Err(Error::InvalidParams(format!(
                        "{what} lists {} values for {count} modes",
                        v.len()
                    )));
                }
                v
            }
        };
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParams(format!("{what} must be finite and non-negative")));
        }
        Ok(())
    }
}

/// Thermal bath seen by the phonon modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Bath {
    /// Mean occupation per mode.
    Occupation(PerMode),
    /// Common temperature in kelvin; occupations follow from the mode frequencies.
    Temperature(f64),
}

impl Bath {
    /// Bose occupations for the given angular frequencies.
    pub fn occupations(&self, freqs: &[f64], constants: &PhysicalConstants) -> Vec<f64> {
        match self {
            Bath::Occupation(p) => p.resolve(freqs.len()),
            Bath::Temperature(t) if *t <= 0.0 => vec![0.0; freqs.len()],
            Bath::Temperature(t) => freqs
                .iter()
                .map(|w| 1.0 / (constants.hbar * w.abs() / (constants.boltzmann * t)).exp_m1())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_ions: usize,
    /// kg
    pub mass: f64,
    /// C
    pub charge: f64,
    /// m
    pub wavelength: f64,
    /// Axial trap frequency, rad/s.
    pub trap_freq: f64,
    /// Cavity half-linewidth, rad/s.
    pub kappa: f64,
    /// Pump-cavity detuning, rad/s.
    pub delta_c: f64,
    /// Light shift per photon, rad/s.
    pub u0: f64,
    /// Pump amplitude, rad/s.
    pub eta: f64,
    /// Trap centre relative to a cavity antinode, m.
    pub trap_center_offset: f64,
    /// Phonon damping rates, rad/s.
    pub gamma_modes: PerMode,
    pub bath: Bath,
    pub constants: PhysicalConstants,
}

/// Conversion factors between SI and the internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScales {
    /// Characteristic length `L`, m.
    pub length: f64,
    /// `hbar*kappa`, J.
    pub energy: f64,
    /// `kappa`, rad/s.
    pub frequency: f64,
    /// `k = 2*pi/lambda`, 1/m.
    pub wavenumber: f64,
    /// `m*omega^2*L`, N.
    pub force: f64,
}

impl UnitScales {
    pub fn to_phase(&self, x: f64) -> f64 {
        x * self.wavenumber
    }

    pub fn from_phase(&self, phi: f64) -> f64 {
        phi / self.wavenumber
    }

    pub fn energy_to_internal(&self, e: f64) -> f64 {
        e / self.energy
    }

    pub fn energy_from_internal(&self, e: f64) -> f64 {
        e * self.energy
    }

    pub fn rate_to_internal(&self, r: f64) -> f64 {
        r / self.frequency
    }

    pub fn rate_from_internal(&self, r: f64) -> f64 {
        r * self.frequency
    }

    /// Internal force unit `hbar*kappa*k`, N.
    pub fn internal_force(&self) -> f64 {
        self.energy * self.wavenumber
    }

    /// Internal curvature unit `hbar*kappa*k^2`, N/m.
    pub fn internal_curvature(&self) -> f64 {
        self.energy * self.wavenumber * self.wavenumber
    }
}

impl SystemParams {
    /// 174Yb+ in a 369 nm cavity with a 1.12 MHz axial trap and 0.2 MHz linewidth
    /// (both frequencies cyclic). Uses three-figure constants.
    pub fn ytterbium(n_ions: usize) -> Self {
        let constants = PhysicalConstants::THREE_FIGURE;
        Self {
            n_ions,
            mass: 174.0 * constants.atomic_mass_unit,
            charge: constants.elementary_charge,
            wavelength: 369e-9,
            trap_freq: 2.0 * PI * 1.12e6,
            kappa: 2.0 * PI * 0.2e6,
            delta_c: 0.0,
            u0: 0.0,
            eta: 0.0,
            trap_center_offset: 0.0,
            gamma_modes: PerMode::Uniform(0.0),
            bath: Bath::Occupation(PerMode::Uniform(0.0)),
            constants,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.n_ions == 0 {
            return bad("n_ions must be at least 1");
        }
        let positive = [
            ("mass", self.mass),
            ("wavelength", self.wavelength),
            ("trap_freq", self.trap_freq),
            ("kappa", self.kappa),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(self.charge.is_finite() && self.charge != 0.0) {
            return bad("charge must be non-zero");
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad("eta must be non-negative");
        }
        for (name, v) in [
            ("delta_c", self.delta_c),
            ("u0", self.u0),
            ("trap_center_offset", self.trap_center_offset),
        ] {
            if !v.is_finite() {
                return bad(&format!("{name} must be finite"));
            }
        }
        self.gamma_modes.check(self.n_ions, "gamma_modes")?;
        match &self.bath {
            Bath::Occupation(p) => p.check(self.n_ions, "bath_occupation")?,
            Bath::Temperature(t) if !(t.is_finite() && *t >= 0.0) => {
                return bad("bath temperature must be non-negative")
            }
            Bath::Temperature(_) => {}
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// `C = N*U0/kappa`.
    pub fn cooperativity(&self) -> f64 {
        self.n_ions as f64 * self.u0 / self.kappa
    }

    /// `L = (q^2/(4*pi*eps0*m*omega^2))^(1/3)`.
    pub fn characteristic_length(&self) -> f64 {
        let c = &self.constants;
        (self.charge * self.charge / (4.0 * PI * c.epsilon0 * self.mass * self.trap_freq.powi(2)))
            .cbrt()
    }

    pub fn derived_scales(&self) -> UnitScales {
        let length = self.characteristic_length();
        UnitScales {
            length,
            energy: self.constants.hbar * self.kappa,
            frequency: self.kappa,
            wavenumber: self.wavenumber(),
            force: self.mass * self.trap_freq.powi(2) * length,
        }
    }

    /// Sets `U0` for the requested cooperativity and moves the trap centre to
    /// the matching cavity extremum: an antinode for `C >= 0`, a node otherwise.
    pub fn with_cooperativity(mut self, c: f64) -> Self {
        self.u0 = c * self.kappa / self.n_ions as f64;
        self.trap_center_offset = if c < 0.0 { self.wavelength / 4.0 } else { 0.0 };
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_delta_c(mut self, delta_c: f64) -> Self {
        self.delta_c = delta_c;
        self
    }

    pub fn with_damping(mut self, gamma: PerMode) -> Self {
        self.gamma_modes = gamma;
        self
    }

    pub fn with_bath(mut self, bath: Bath) -> Self {
        self.bath = bath;
        self
    }

    /// Rescales `U0 ~ 1/N` and `omega ~ sqrt(ln N)/N` from `base_n` ions to `target_n`.
    pub fn scale_to_n(&self, base_n: usize, target_n: usize) -> Result<Self> {
        if base_n < 2 || target_n < 2 {
            return Err(Error::InvalidParams(format!(
                "scaling needs at least two ions (base {base_n}, target {target_n})"
            )));
        }
        let profile = |n: usize| (n as f64).ln().sqrt() / n as f64;
        let mut out = self.clone();
        out.n_ions = target_n;
        out.u0 = self.u0 * base_n as f64 / target_n as f64;
        out.trap_freq = self.trap_freq * profile(target_n) / profile(base_n);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_from_constants() {
        let p = SystemParams::ytterbium(11);
        let c = PhysicalConstants::THREE_FIGURE;
        let m = 174.0 * 1.66e-27;
        let w = 2.0 * PI * 1.12e6;
        let l = (1.6e-19f64.powi(2) / (4.0 * PI * c.epsilon0 * m * w * w)).powf(1.0 / 3.0);
        assert!((p.characteristic_length() - l).abs() < 1e-15 * l);
        assert!(l > 2.4e-6 && l < 2.7e-6);
    }

    #[test]
    fn wavenumber_definition() {
        let p = SystemParams::ytterbium(1);
        assert_eq!(p.wavenumber(), 2.0 * PI / 369e-9);
    }

    #[test]
    fn conversions_round_trip() {
        let s = SystemParams::ytterbium(3).derived_scales();
        assert_eq!(s.to_phase(0.0), 0.0);
        assert_eq!(s.energy_to_internal(0.0), 0.0);
        for x in [1e-9, 3.2e-6, -7.7e-7] {
            assert!((s.from_phase(s.to_phase(x)) - x).abs() <= 1e-15 * x.abs());
            assert!((s.energy_from_internal(s.energy_to_internal(x)) - x).abs() <= 1e-15 * x.abs());
            assert!((s.rate_from_internal(s.rate_to_internal(x)) - x).abs() <= 1e-15 * x.abs());
        }
    }

    #[test]
    fn scale_identity() {
        let p = SystemParams::ytterbium(11).with_cooperativity(0.5);
        assert_eq!(p.scale_to_n(11, 11).unwrap(), p);
        assert!(p.scale_to_n(11, 1).is_err());
    }

    #[test]
    fn cooperativity_sets_offset() {
        let p = SystemParams::ytterbium(11).with_cooperativity(-2.0);
        assert!((p.cooperativity() + 2.0).abs() < 1e-14);
        assert_eq!(p.trap_center_offset, 369e-9 / 4.0);
    }

    #[test]
    fn validation() {
        let mut p = SystemParams::ytterbium(5);
        assert!(p.validate().is_ok());
        p.gamma_modes = PerMode::Each(vec![0.1; 4]);
        assert!(p.validate().is_err());
        p.gamma_modes = PerMode::Uniform(0.0);
        p.kappa = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn thermal_occupation() {
        let c = PhysicalConstants::CODATA;
        let w = 1e6;
        let t = 1e-3;
        let n = Bath::Temperature(t).occupations(&[w], &c)[0];
        let x = c.hbar * w / (c.boltzmann * t);
        assert!((n - 1.0 / (x.exp() - 1.0)).abs() < 1e-12 * n);
        assert_eq!(Bath::Temperature(0.0).occupations(&[w], &c)[0], 0.0);
    }
}
