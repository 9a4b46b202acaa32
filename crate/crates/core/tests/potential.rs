use std::f64::consts::PI;

use cavity_friction::equilibrium::bare_chain;
use cavity_friction::params::SystemParams;
use cavity_friction::potential::{
    bunching, cavity_potential, effective_detuning, mean_photon_number, total_gradient, total_hessian,
    total_potential,
};
use proptest::prelude::*;

fn yb(n: usize, c: f64) -> SystemParams {
    SystemParams::ytterbium(n).with_cooperativity(c)
}

#[test]
fn resonance_and_photon_count() {
    let p = yb(11, -2.0);
    let k = p.kappa;
    let p = p.with_delta_c(-2.0 * k).with_eta(50.0 * k);
    let de = effective_detuning(&p, 1.0);
    assert!(de.abs() < 1e-9 * k);
    assert!((mean_photon_number(&p, de) - 2500.0).abs() < 1e-6);

    let q = yb(5, 1.3);
    let resonant = q.clone().with_delta_c(q.n_ions as f64 * q.u0 * 0.37);
    assert!(effective_detuning(&resonant, 0.37).abs() < 1e-9 * q.kappa);
}

#[test]
fn coincident_ions_rejected() {
    let p = yb(3, 0.5);
    assert!(total_potential(&p, &[0.0, 1e-6, 1e-6]).is_err());
    assert!(total_gradient(&p, &[0.0, 0.0, 1e-6]).is_err());
    assert!(total_hessian(&p, &[1e-6, 1e-6, 2e-6]).is_err());
}

#[test]
fn gradient_vanishes_at_bare_equilibrium() {
    let p = yb(2, 0.0).with_eta(0.0);
    let s = bare_chain(&p).unwrap();
    let g = total_gradient(&p, &s.positions).unwrap();
    let unit = p.mass * p.trap_freq.powi(2) * p.characteristic_length();
    assert!(g.amax() < 1e-10 * unit);
}

#[test]
fn weak_lattice_hessian_is_local() {
    let base = yb(3, 1e-6);
    let k = base.kappa;
    let p = base.with_eta(3000.0 * k);
    let bare = p.clone().with_eta(0.0);
    let x = vec![-2.1e-6, 0.13e-6, 2.3e-6];
    let full = total_hessian(&p, &x).unwrap() - total_hessian(&bare, &x).unwrap();
    let kw = p.wavenumber();
    let v0 = p.constants.hbar * p.u0 * mean_photon_number(&p, effective_detuning(&p, bunching(&x, kw).unwrap()));
    let scale = v0 * kw * kw;
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { -2.0 * scale * (2.0 * kw * x[i]).cos() } else { 0.0 };
            assert!((full[(i, j)] - expect).abs() < 1e-5 * scale, "{i},{j}: {} vs {expect}", full[(i, j)]);
        }
    }
}

proptest! {
    #[test]
    fn cavity_energy_depends_only_on_bunching(shift in 1usize..40, flip in any::<bool>(), c in -3.0f64..3.0, eta in 1.0f64..500.0) {
        let p = yb(4, c);
        let p = p.clone().with_eta(eta * p.kappa).with_delta_c(-0.7 * p.kappa);
        let lam = p.wavelength;
        let x = vec![-3.1e-6, -0.9e-6, 1.2e-6, 2.9e-6];
        // Shifting by whole half-wavelengths or mirroring every ion keeps each cos^2.
        let y: Vec<f64> = if flip {
            x.iter().rev().map(|v| -v).collect()
        } else {
            x.iter().map(|v| v + shift as f64 * lam / 2.0).collect()
        };
        let a = cavity_potential(&p, &x).unwrap();
        let b = cavity_potential(&p, &y).unwrap();
        let scale = p.constants.hbar * p.eta * p.eta / p.kappa;
        prop_assert!((a - b).abs() <= 1e-12 * scale);
    }

    #[test]
    fn cavity_gradient_scales_with_drive(c in -3.0f64..3.0, eta in 1.0f64..300.0, dc in -4.0f64..4.0) {
        let p = yb(3, c);
        let k = p.kappa;
        let x = vec![-2.0e-6, 0.21e-6, 2.4e-6];
        let p1 = p.clone().with_eta(eta * k).with_delta_c(dc * k);
        let p2 = p1.clone().with_eta(2.0 * eta * k);
        let trap = p.clone().with_eta(0.0);
        let g0 = total_gradient(&trap, &x).unwrap();
        let g1 = total_gradient(&p1, &x).unwrap() - &g0;
        let g2 = total_gradient(&p2, &x).unwrap() - &g0;
        let err = (g2 - 4.0 * &g1).amax();
        prop_assert!(err <= 1e-6 * g1.amax() * 4.0 + 1e-30);
    }

    #[test]
    fn bunching_stays_in_unit_interval(x in prop::collection::vec(-1e-5f64..1e-5, 1..20)) {
        let b = bunching(&x, 2.0 * PI / 369e-9).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
    }
}
