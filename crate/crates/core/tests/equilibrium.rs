use cavity_friction::equilibrium::{bare_chain, depinning_force, minimize, MinimizeOptions};
use cavity_friction::params::SystemParams;
use cavity_friction::phases::ramped_equilibrium;
use proptest::prelude::*;

fn yb(n: usize, c: f64) -> SystemParams {
    SystemParams::ytterbium(n).with_cooperativity(c)
}

fn central_spacing(p: &SystemParams) -> f64 {
    bare_chain(p).unwrap().minimal_spacing().unwrap()
}

#[test]
fn scaling_keeps_central_spacing() {
    let base = yb(11, 0.5);
    let big = base.scale_to_n(11, 81).unwrap();
    let d0 = central_spacing(&base);
    let d1 = central_spacing(&big);
    assert!(((d1 - d0) / d0).abs() < 0.02, "{d0} vs {d1}");
    assert!(base.scale_to_n(11, 1).is_err());
    assert_eq!(base.scale_to_n(11, 11).unwrap(), base);
}

#[test]
fn weak_lattice_keeps_symmetric_chain() {
    let p = yb(11, 0.05);
    let k = p.kappa;
    let p = p.with_eta(100.0 * k);
    let s = ramped_equilibrium(&p, &MinimizeOptions::default()).unwrap();
    assert!(s.is_local_min);
    assert!(s.central_displacement(&p).abs() < 1e-6 * p.wavelength);
    for (a, b) in s.positions.iter().zip(s.positions.iter().rev()) {
        assert!((a + b).abs() < 1e-6 * p.wavelength);
    }
}

#[test]
fn minimize_is_idempotent() {
    let p = yb(7, 1.0);
    let k = p.kappa;
    let p = p.with_eta(400.0 * k).with_delta_c(-k);
    let opts = MinimizeOptions::default();
    let s = ramped_equilibrium(&p, &opts).unwrap();
    let t = minimize(&p, &s, &opts).unwrap();
    for (a, b) in s.positions.iter().zip(&t.positions) {
        assert!((a - b).abs() < 1e-12 * p.wavelength);
    }
}

#[test]
fn restoring_force_grows_with_lattice_strength() {
    let opts = MinimizeOptions::default();
    let force = |c: f64| {
        let p = yb(11, c);
        let k = p.kappa;
        let p = p.with_eta(600.0 * k);
        let s = ramped_equilibrium(&p, &opts).unwrap();
        depinning_force(&p, &s, &opts).unwrap().restoring_force
    };
    let (a, b, c) = (force(0.5), force(1.0), force(2.0));
    assert!(a > 0.0 && b > a && c > b, "{a} {b} {c}");
    let p = yb(11, 0.5);
    let k = p.kappa;
    let p = p.with_eta(100.0 * k);
    let s = ramped_equilibrium(&p, &opts).unwrap();
    assert_eq!(depinning_force(&p, &s, &opts).unwrap().restoring_force, 0.0);
}

#[test]
fn single_ion_depins_at_maximal_slope() {
    let mut p = yb(1, 1e-6);
    p.trap_freq = 2.0 * std::f64::consts::PI * 1e3;
    let k = p.kappa;
    let p = p.with_eta(100.0 * k);
    let opts = MinimizeOptions::default();
    let s = ramped_equilibrium(&p, &opts).unwrap();
    let r = depinning_force(&p, &s, &opts).unwrap();
    let unit = p.mass * p.trap_freq.powi(2) * p.characteristic_length();
    let v0 = p.constants.hbar * p.u0 * s.photon_number;
    let kw = p.wavenumber();
    let m_w2 = p.mass * p.trap_freq.powi(2);
    // Largest net force along the path from the lattice node back to the trap centre.
    let expect = (0..=100_000)
        .map(|i| i as f64 / 100_000.0 * p.wavelength / 4.0)
        .map(|x| v0 * kw * (2.0 * kw * x).sin() - m_w2 * x)
        .fold(f64::MIN, f64::max);
    let got = r.restoring_force * unit;
    assert!(r.converged);
    assert!(((got - expect) / expect).abs() < 1e-4, "{got} vs {expect}");
    assert!(((got - v0 * kw) / (v0 * kw)).abs() < 0.05);
}

#[test]
fn deep_pinning_of_long_chain() {
    let base = yb(11, 0.5);
    let p = base.scale_to_n(11, 81).unwrap();
    let k = p.kappa;
    let p = p.with_eta(4300.0 * k);
    let s = ramped_equilibrium(&p, &MinimizeOptions::default()).unwrap();
    assert!(s.is_local_min);
    assert!((s.bunching / 1.5e-3 - 1.0).abs() < 0.5, "B_N = {}", s.bunching);
    let kw = p.wavenumber();
    for x in [s.positions[0], s.positions[1], s.positions[79], s.positions[80]] {
        assert!((kw * x).cos().powi(2) < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn mirrored_trap_gives_mirrored_chain(n in 2usize..8, c in 0.1f64..2.0, eta in 50.0f64..600.0) {
        let p = yb(n, c);
        let k = p.kappa;
        let p = p.with_eta(eta * k);
        let opts = MinimizeOptions::default();
        let s = ramped_equilibrium(&p, &opts).unwrap();
        let mirror: Vec<f64> = s.positions.iter().rev().map(|x| -x).collect();
        let seed = cavity_friction::potential::ChainState::evaluate(&p, mirror.clone()).unwrap();
        let t = minimize(&p, &seed, &opts).unwrap();
        prop_assert!((t.energy - s.energy).abs() <= 1e-9 * s.energy.abs());
        for (a, b) in t.positions.iter().zip(&mirror) {
            prop_assert!((a - b).abs() < 1e-9 * p.wavelength);
        }
    }
}
