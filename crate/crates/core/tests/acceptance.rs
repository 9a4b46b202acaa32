//! Acceptance suite. Run with `cargo test --test acceptance`, optionally
//! followed by `-- NN` to select criteria by number.
//!
//! Every criterion prints a PASS or FAIL line. The exit status is non-zero on
//! a failure only when `ACCEPTANCE_STRICT=1`, so that a plain `cargo test`
//! still runs the remaining suites.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cavity_friction::cli::{parse_config, render, RunOptions};
use cavity_friction::equilibrium::{bare_chain, MinimizeOptions};
use cavity_friction::fluctuations::{
    clusters, find_peaks, output_spectrum, stability, steady_covariance, FluctuationModel,
};
use cavity_friction::params::{Bath, PerMode, SystemParams};
use cavity_friction::phases::{
    critical_drive, forward_continuation, grid, kink_scaling, linear_fit, ramped_equilibrium,
    sweep_phase_diagram, ClassifyOptions, Spacing, SweepGrid,
};
use cavity_friction::potential::{total_gradient, total_hessian, total_potential, ChainState};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn yb(n: usize, c: f64, delta_c_over_kappa: f64) -> SystemParams {
    let p = SystemParams::ytterbium(n).with_cooperativity(c);
    let k = p.kappa;
    p.with_delta_c(delta_c_over_kappa * k)
}

fn sweep_opts(fluctuations: bool, restoring_force: bool) -> ClassifyOptions {
    ClassifyOptions { fluctuations, restoring_force, ..Default::default() }
}

fn c01_bare_chain() -> Outcome {
    let mut worst = 0.0f64;
    for (n, expect) in [
        (2, vec![-(0.25f64).cbrt(), (0.25f64).cbrt()]),
        (3, vec![-(1.25f64).cbrt(), 0.0, (1.25f64).cbrt()]),
    ] {
        let p = SystemParams::ytterbium(n).with_cooperativity(0.0).with_eta(0.0);
        let l = p.characteristic_length();
        let s = bare_chain(&p).map_err(|e| e.to_string())?;
        for (x, e) in s.positions.iter().zip(&expect) {
            let err = if *e == 0.0 { (x / l).abs() } else { ((x / l - e) / e).abs() };
            worst = worst.max(err);
        }
    }
    check(worst < 1e-8, format!("max relative error {worst:.2e}"))
}

fn c02_geometry() -> Outcome {
    let p = SystemParams::ytterbium(11).with_eta(0.0);
    let s = bare_chain(&p).map_err(|e| e.to_string())?;
    let d = s.minimal_spacing().ok_or("no spacing")?;
    let ratio = 2.0 * d / p.wavelength;
    check((ratio - 7.3507).abs() <= 1e-3, format!("2d/lambda = {ratio:.5}"))
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn c03_derivatives() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst_g = 0.0f64;
    let mut worst_h = 0.0f64;
    for i in 0..100 {
        let n = rng.gen_range(2..=12);
        let c = rng.gen_range(-3.0..3.0);
        let base = SystemParams::ytterbium(n);
        let k = base.kappa;
        let mut p = base.with_cooperativity(c).with_eta(rng.gen_range(0.0..800.0) * k);
        // A third of the samples sit on cavity resonance.
        p.delta_c = match i % 3 {
            0 => rng.gen_range(-5.0..5.0) * k,
            1 => 0.0,
            _ => p.n_ions as f64 * p.u0 * rng.gen_range(0.0..1.0),
        };
        let bare = bare_chain(&p).map_err(|e| e.to_string())?;
        let x: Vec<f64> = bare
            .positions
            .iter()
            .map(|x| x + rng.gen_range(-0.5..0.5) * p.wavelength)
            .collect();
        if x.windows(2).any(|w| w[1] - w[0] < 0.2 * p.characteristic_length()) {
            continue;
        }
        let h = 1e-5 * p.wavelength;
        let g = total_gradient(&p, &x).map_err(|e| e.to_string())?;
        let hess = total_hessian(&p, &x).map_err(|e| e.to_string())?;
        let mut fd_g = vec![0.0; n];
        let mut fd_h = vec![0.0; n * n];
        for j in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let ep = total_potential(&p, &xp).map_err(|e| e.to_string())?;
            let em = total_potential(&p, &xm).map_err(|e| e.to_string())?;
            fd_g[j] = (ep - em) / (2.0 * h);
            let gp = total_gradient(&p, &xp).map_err(|e| e.to_string())?;
            let gm = total_gradient(&p, &xm).map_err(|e| e.to_string())?;
            for r in 0..n {
                fd_h[r * n + j] = (gp[r] - gm[r]) / (2.0 * h);
            }
        }
        let dg: Vec<f64> = (0..n).map(|j| fd_g[j] - g[j]).collect();
        worst_g = worst_g.max(max_norm(&dg) / max_norm(g.as_slice()));
        let dh: Vec<f64> = (0..n * n).map(|q| fd_h[q] - hess[(q / n, q % n)]).collect();
        worst_h = worst_h.max(max_norm(&dh) / max_norm(hess.as_slice()));
    }
    check(
        worst_g < 1e-5 && worst_h < 1e-5,
        format!("gradient {worst_g:.2e}, Hessian {worst_h:.2e}"),
    )
}

fn first_index(flags: &[bool]) -> Option<usize> {
    flags.iter().position(|f| *f)
}

fn c04_transition() -> Outcome {
    let p = yb(11, 0.5, 0.0);
    let k = p.kappa;
    let opts = sweep_opts(false, true);
    let etas = grid(50.0 * k, 1000.0 * k, 200, Spacing::Log);
    let sweep = SweepGrid { eta: etas.clone(), axis: None, values: Vec::new(), auto_offset: true };
    let pts = sweep_phase_diagram(&p, &sweep, &opts).map_err(|e| e.to_string())?;
    let pts: Vec<_> = pts.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.message)?;
    let order = first_index(&pts.iter().map(|q| q.order_parameter.abs() >= opts.order_tolerance).collect::<Vec<_>>());
    let force = first_index(&pts.iter().map(|q| q.restoring_force >= opts.force_tolerance).collect::<Vec<_>>());
    let gap = pts
        .iter()
        .enumerate()
        .filter(|(_, q)| q.phonon_gap.is_finite())
        .min_by(|a, b| a.1.phonon_gap.total_cmp(&b.1.phonon_gap))
        .map(|(i, _)| i);
    let (Some(a), Some(b), Some(c)) = (order, gap, force) else {
        return Err(format!("missing signature: order {order:?}, gap {gap:?}, force {force:?}"));
    };
    let spread = a.max(b).max(c) - a.min(b).min(c);
    let cd = critical_drive(&p, 50.0 * k, 1000.0 * k, 200, &opts).map_err(|e| e.to_string())?;
    let gap_c = cd.gap / p.trap_freq;
    check(
        spread <= 1 && gap_c < 0.02,
        format!(
            "indices order {a}, gap {b}, force {c}; eta_c = {:.2} kappa, gap there {gap_c:.2e} omega",
            cd.eta / k
        ),
    )
}

fn c05_fk_scaling() -> Outcome {
    let opts = sweep_opts(false, false);
    let cs = [0.01, 0.02, 0.05, 0.1];
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut found = Vec::new();
    for &c in &cs {
        let p = yb(11, c, 0.0);
        let k = p.kappa;
        let guess = 290.0 * (0.5 / c).sqrt();
        let cd = critical_drive(&p, 0.3 * guess * k, 3.0 * guess * k, 60, &opts).map_err(|e| format!("C = {c}: {e}"))?;
        lx.push(c.ln());
        ly.push((cd.eta / k).ln());
        found.push(format!("{:.1}", cd.eta / k));
    }
    let (slope, _, _) = linear_fit(&lx, &ly).ok_or("fit failed")?;
    check(
        (slope + 0.5).abs() <= 0.1,
        format!("exponent {slope:.3}, eta_c/kappa = [{}]", found.join(", ")),
    )
}

fn c06_hysteresis() -> Outcome {
    let p = yb(11, 2.4, 0.0);
    let k = p.kappa;
    let opts = sweep_opts(false, false);
    let etas = grid(60.0 * k, 400.0 * k, 300, Spacing::Log);
    let sweep = SweepGrid { eta: etas.clone(), axis: None, values: Vec::new(), auto_offset: true };
    let pts = sweep_phase_diagram(&p, &sweep, &opts).map_err(|e| e.to_string())?;
    let pts: Vec<_> = pts.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.message)?;
    let pinned = |s: &Option<ChainState>| {
        s.as_ref().is_some_and(|s| s.central_displacement(&p).abs() / p.wavelength >= opts.order_tolerance)
    };
    let fwd = first_index(&pts.iter().map(|q| pinned(&q.forward)).collect::<Vec<_>>());
    let bwd = first_index(&pts.iter().map(|q| pinned(&q.backward)).collect::<Vec<_>>());
    let window = pts.iter().filter(|q| q.bistable).count();
    let later = matches!((fwd, bwd), (Some(f), Some(b)) if f > b);
    let at = |i: Option<usize>| i.map_or("none".to_string(), |i| format!("{:.2}", etas[i] / k));
    check(
        window > 0 && later,
        format!(
            "{window} bistable points; forward pins at {} kappa, backward at {} kappa",
            at(fwd),
            at(bwd)
        ),
    )
}

fn random_equilibrium(rng: &mut StdRng, gamma: f64) -> Option<(SystemParams, ChainState)> {
    let n = rng.gen_range(3..=11);
    let c = rng.gen_range(-3.0..3.0);
    let base = SystemParams::ytterbium(n).with_cooperativity(c);
    let k = base.kappa;
    let p = base
        .with_eta(rng.gen_range(1.0..500.0) * k)
        .with_delta_c(rng.gen_range(-5.0..5.0) * k)
        .with_damping(PerMode::Uniform(gamma * k))
        .with_bath(Bath::Temperature(rng.gen_range(1e-5..1e-3)));
    let s = ramped_equilibrium(&p, &MinimizeOptions::default()).ok()?;
    s.is_local_min.then_some((p, s))
}

fn c07_stability_sign() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut tested = 0;
    let mut negative = 0;
    let mut exceptions = Vec::new();
    let mut tries = 0;
    while tested < 150 && tries < 1000 {
        tries += 1;
        let Some((p, s)) = random_equilibrium(&mut rng, 0.0) else { continue };
        let model = FluctuationModel::new(&p, &s).map_err(|e| e.to_string())?;
        let st = stability(&model);
        tested += 1;
        let red = s.delta_eff < 0.0;
        negative += red as usize;
        if st.stable != red {
            exceptions.push(format!("Delta_eff = {:.3e} kappa, max Re = {:.3e}", s.delta_eff / p.kappa, st.max_real));
        }
    }
    check(
        tested >= 100 && exceptions.is_empty(),
        format!(
            "{tested} equilibria ({negative} with Delta_eff < 0), {} exceptions{}",
            exceptions.len(),
            exceptions.first().map_or(String::new(), |e| format!(", first: {e}"))
        ),
    )
}

fn c08_lyapunov() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut accepted = 0;
    let mut worst_res = 0.0f64;
    let mut lowest_nu = f64::INFINITY;
    let mut tries = 0;
    while accepted < 100 && tries < 2000 {
        tries += 1;
        let gamma = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.01..1.0) };
        let Some((p, s)) = random_equilibrium(&mut rng, gamma) else { continue };
        let model = FluctuationModel::new(&p, &s).map_err(|e| e.to_string())?;
        if !stability(&model).stable {
            continue;
        }
        match steady_covariance(&model) {
            Ok(c) => {
                accepted += 1;
                worst_res = worst_res.max(c.residual);
                lowest_nu = c.symplectic_eigenvalues.iter().fold(lowest_nu, |m, v| m.min(*v));
            }
            Err(e) => return Err(format!("stable point rejected: {e}")),
        }
    }
    check(
        accepted >= 1 && worst_res < 1e-8 && lowest_nu >= 0.5 - 1e-6,
        format!("{accepted} covariances, worst residual {worst_res:.2e}, smallest symplectic eigenvalue {lowest_nu:.8}"),
    )
}

fn c09_temperature() -> Outcome {
    let p = yb(11, 0.5, -10.0).with_damping(PerMode::Uniform(0.0));
    let k = p.kappa;
    let cs = vec![-4.0, -2.0, -1.0, -0.5, 0.1, 0.5, 1.0, 2.0, 4.0];
    let etas = grid(10.0 * k, 3000.0 * k, 12, Spacing::Log);
    let sweep = SweepGrid {
        eta: etas,
        axis: Some(cavity_friction::phases::Axis::Cooperativity),
        values: cs,
        auto_offset: true,
    };
    let pts = sweep_phase_diagram(&p, &sweep, &sweep_opts(true, false)).map_err(|e| e.to_string())?;
    let best = pts
        .iter()
        .filter_map(|q| q.as_ref().ok())
        .filter(|q| q.fluct_stable && q.chain_temperature.is_finite())
        .min_by(|a, b| a.chain_temperature.total_cmp(&b.chain_temperature))
        .ok_or("no stable point")?;
    let t = best.chain_temperature * 1e6;
    check(
        (60.0..=250.0).contains(&t),
        format!("minimum {t:.1} uK at C = {}, eta = {:.1} kappa", best.cooperativity, best.eta / k),
    )
}

/// Equilibrium on a forward ramp from 10 kappa whose bunching equals `target`.
fn bunching_fixture(c: f64, target: f64, lo: f64, hi: f64) -> Result<(SystemParams, ChainState), String> {
    let p = yb(11, c, 0.0).with_bath(Bath::Temperature(100e-6));
    let k = p.kappa;
    let p = p.with_damping(PerMode::Uniform(0.1 * k));
    let opts = MinimizeOptions::default();
    let at = |eta: f64| -> Result<ChainState, String> {
        let etas = grid(10.0 * k, eta, 40, Spacing::Log);
        let states = forward_continuation(&p, &etas, &opts).map_err(|e| e.to_string())?;
        Ok(states.into_iter().last().expect("non-empty ramp"))
    };
    let (mut a, mut b) = (lo * k, hi * k);
    let fa = at(a)?.bunching - target;
    let fb = at(b)?.bunching - target;
    if fa * fb > 0.0 {
        return Err(format!("B = {target} not bracketed for C = {c}"));
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        let fm = at(m)?.bunching - target;
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-9 * b {
            break;
        }
    }
    let eta = 0.5 * (a + b);
    Ok((p.clone().with_eta(eta), at(eta)?))
}

fn spectrum_peaks(p: &SystemParams, s: &ChainState) -> Result<Vec<f64>, String> {
    let model = FluctuationModel::new(p, s).map_err(|e| e.to_string())?;
    let nu = grid(-120.0 * p.kappa, 120.0 * p.kappa, 24001, Spacing::Linear);
    let sp = output_spectrum(&model, &nu).map_err(|e| e.to_string())?;
    let top = sp.values.iter().cloned().fold(0.0f64, f64::max);
    Ok(find_peaks(&sp)
        .into_iter()
        // Mode sidebands only: the cavity line sits within a linewidth of |Delta_eff|.
        .filter(|q| q.nu > 0.0 && q.value > 1e-6 * top && (q.nu - s.delta_eff.abs()).abs() > p.kappa)
        .map(|q| q.nu / p.kappa)
        .collect())
}

fn span(v: &[f64]) -> String {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    format!("[{lo:.1}, {hi:.1}] kappa")
}

fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let one = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|u| y.iter().map(|v| (u - v).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0f64, f64::max)
    };
    one(a, b).max(one(b, a))
}

fn c10_spectrum() -> Outcome {
    let gamma = 0.1;
    let (ps2, ss2) = bunching_fixture(-2.0, 0.55, 10.0, 300.0)?;
    let (pp2, sp2) = bunching_fixture(-2.0, 0.95, 100.0, 3000.0)?;
    let (ps05, ss05) = bunching_fixture(-0.5, 0.55, 10.0, 300.0)?;
    let (pp05, sp05) = bunching_fixture(-0.5, 0.95, 100.0, 3000.0)?;
    let pinned2 = spectrum_peaks(&pp2, &sp2)?;
    let pinned05 = spectrum_peaks(&pp05, &sp05)?;
    let sliding2 = spectrum_peaks(&ps2, &ss2)?;
    let sliding05 = spectrum_peaks(&ps05, &ss05)?;
    let n2 = clusters(&pinned2, 5.0 * gamma).len();
    let n05 = clusters(&pinned05, 5.0 * gamma).len();
    let d = if sliding2.is_empty() || sliding05.is_empty() { f64::INFINITY } else { hausdorff(&sliding2, &sliding05) };
    check(
        n2 >= 3 && n05 == 1 && d < 2.0 * gamma,
        format!(
            "pinned clusters C=-2: {n2} over {}, C=-0.5: {n05} over {}; sliding peak offset {d:.3} kappa",
            span(&pinned2),
            span(&pinned05)
        ),
    )
}

fn c11_kinks() -> Outcome {
    let base = yb(11, 0.5, 0.0);
    let k = base.kappa;
    let base = base.with_eta(50.0 * k);
    let ns: Vec<usize> = (11..=81).step_by(2).collect();
    let ks = kink_scaling(&base, 11, &ns, &sweep_opts(false, false)).map_err(|e| e.to_string())?;
    let pinned = ks.points.iter().filter(|q| q.pinned).count();
    let (slope, r2) = (ks.slope.unwrap_or(f64::NAN), ks.r_squared.unwrap_or(f64::NAN));
    check(
        r2 > 0.95 && slope > 0.0,
        format!("R^2 = {r2:.4}, slope {slope:.4}, {pinned}/{} chains pinned", ks.points.len()),
    )
}

const DETERMINISM_CONFIG: &str = "\
command = phase-diagram
[params]
n_ions = 7
delta_c = -1 kappa
[grid]
axis = C
min = -1
max = 1
count = 5
eta_min = 20 kappa
eta_max = 400 kappa
eta_count = 6
eta_spacing = log
";

fn c12_determinism() -> Outcome {
    let cfg = parse_config(DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let run = |w: Option<usize>| {
        render(&cfg, &RunOptions { output: None, workers: w, si_units: false, validate: false })
            .map(|r| r.body)
            .map_err(|e| e.to_string())
    };
    let a = run(Some(1))?;
    let b = run(Some(4))?;
    let c = run(None)?;
    check(a == b && b == c && !a.is_empty(), format!("{} bytes, workers 1/4/all", a.len()))
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "bare-chain oracle", Duration::from_secs(1), c01_bare_chain),
        (2, "trap geometry", Duration::from_secs(1), c02_geometry),
        (3, "derivative correctness", Duration::from_secs(10), c03_derivatives),
        (4, "transition consistency", Duration::from_secs(300), c04_transition),
        (5, "weak-lattice scaling", Duration::from_secs(900), c05_fk_scaling),
        (6, "bistability", Duration::from_secs(300), c06_hysteresis),
        (7, "stability sign law", Duration::from_secs(60), c07_stability_sign),
        (8, "lyapunov residual", Duration::from_secs(60), c08_lyapunov),
        (9, "cooling temperature", Duration::from_secs(600), c09_temperature),
        (10, "spectrum structure", Duration::from_secs(120), c10_spectrum),
        (11, "kink-count linearity", Duration::from_secs(1800), c11_kinks),
        (12, "determinism", Duration::from_secs(60), c12_determinism),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut run = 0;
    for (id, name, limit, f) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        run += 1;
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let dt = t0.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if dt <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {limit:?} budget")),
            Err(d) => (false, d),
        };
        failed += !ok as usize;
        println!(
            "criterion {id:02} {name}: {} ({detail}, {:.2} s)",
            if ok { "PASS" } else { "FAIL" },
            dt.as_secs_f64()
        );
    }
    println!("acceptance: {}/{run} criteria passed", run - failed);
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 && strict {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
