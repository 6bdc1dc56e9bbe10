//! Parameter search behind the shipped presets.
//!
//! Usage: `cargo run --release -p softbody --example discover -- <regime>`
//! with regime one of `tunneling`, `reflection`, `trapping`, `emission`,
//! `interference`, or `probe <omega0> <amp> <L> <KE> <n> <d0> <d1> <k> [tau]`
//! for a single interference sweep over widths `lambda * [d0, d1]`.

use softbody::experiments::*;
use softbody::{IntegratorConfig, ModelTier, Potential, SoftBodyParams};

fn setup(
    omega0: f64,
    amp: f64,
    ke: f64,
    pot: Potential,
    tier: ModelTier,
    t_max: f64,
) -> ScatteringSetup {
    let j = 0.5 * omega0 * amp * amp;
    let params = SoftBodyParams::new(1.0, omega0, j, 0.0).unwrap();
    let (x_minus, _) = pot.support().unwrap();
    let fastest = omega0.max(pot.curvature_bound().sqrt()).max(1.0);
    let cfg = IntegratorConfig::new(0.02 / fastest, t_max).with_stride(10);
    ScatteringSetup::new(params, pot, ke, x_minus - 1.0, tier, cfg).unwrap()
}

fn row(label: &str, s: &EnsembleSummary) {
    println!(
        "{label} R={:.2} T={:.2} P={:.2} U={:.2} fail={}",
        s.reflection_coeff, s.transmission_coeff, s.trapping_coeff, s.undecided_coeff, s.failures
    );
}

fn scan_gaussian(omegas: &[f64], amps: &[f64], kes: &[f64]) {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    for &omega0 in omegas {
        for &amp in amps {
            for &ke in kes {
                for tier in [ModelTier::Crude, ModelTier::Exact] {
                    let s = setup(omega0, amp, ke, pot, tier, 80.0);
                    match run_ensemble(&s, 100, AlphaSource::Grid) {
                        Ok(sum) => row(&format!("w0={omega0} a={amp} KE={ke} {tier:>6}"), &sum),
                        Err(e) => println!("w0={omega0} a={amp} KE={ke} {tier}: {e}"),
                    }
                }
            }
        }
    }
}

/// All four tiers at the tunnelling preset's step, restricted to bodies whose
/// expansion holds over the whole barrier (`M omega0^2 > max |U''|`).
fn scan_tunneling(omegas: &[f64], actions: &[f64], kes: &[f64]) {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    for &omega0 in omegas.iter().filter(|&&w| w * w > pot.curvature_bound()) {
        for &j in actions {
            for &ke in kes {
                let params = SoftBodyParams::new(1.0, omega0, j, 0.0).unwrap();
                let cfg = IntegratorConfig::new(0.02, 80.0).with_stride(10);
                let mut line = format!("w0={omega0} J={j} KE={ke}:");
                for tier in ModelTier::ALL {
                    let s = ScatteringSetup::new(params, pot, ke, -6.0, tier, cfg.clone()).unwrap();
                    match run_ensemble(&s, 100, AlphaSource::Grid) {
                        Ok(sum) => line += &format!(" {tier} T={:.2}", sum.transmission_coeff),
                        Err(e) => line += &format!(" {tier} {e}"),
                    }
                }
                println!("{line}");
            }
        }
    }
}

fn scan_trapping(omegas: &[f64], amps: &[f64], kes: &[f64]) {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    for tier in [ModelTier::Crude, ModelTier::Exact] {
        for &omega0 in omegas {
            for &amp in amps {
                for &ke in kes {
                    let s = setup(omega0, amp, ke, pot, tier, 400.0);
                    match emission_statistics(&s, 100, AlphaSource::Grid) {
                        Ok(e) if e.long_dwell >= 5 => println!(
                            "{tier:>6} w0={omega0} a={amp} KE={ke} long={} emitted={} L={} R={} within10={:?} ct={:.2}",
                            e.long_dwell, e.emitted, e.left, e.right, e.within_ten_percent, e.crossing_time
                        ),
                        Ok(_) => {}
                        Err(err) => println!("{tier} w0={omega0} a={amp} KE={ke}: {err}"),
                    }
                }
            }
        }
    }
}

/// Emission criteria per seed: enough long dwellers, balanced exit sides,
/// exit speeds close to the launch speed.
fn scan_emission(tier: ModelTier, omegas: &[f64], amps: &[f64], kes: &[f64], seeds: u64) {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    for &omega0 in omegas {
        for &amp in amps {
            for &ke in kes {
                let s = setup(omega0, amp, ke, pot, tier, 400.0);
                let mut line = format!("{tier} w0={omega0} a={amp} KE={ke}:");
                let mut passes = 0;
                for seed in 1..=seeds {
                    let Ok(e) = emission_statistics(&s, 100, AlphaSource::Seeded(seed)) else {
                        line += " fail";
                        continue;
                    };
                    let balanced = e.left_fraction.is_some_and(|l| {
                        (l - 0.5).abs() <= 3.0 * (0.25 / e.emitted as f64).sqrt()
                    });
                    let speeds = e.within_ten_percent.is_some_and(|w| w >= 0.9);
                    let ok = e.long_dwell >= 5 && balanced && speeds;
                    passes += ok as u32;
                    line += &format!(
                        " [{} {}/{} {:.2}{}]",
                        e.long_dwell,
                        e.left,
                        e.right,
                        e.within_ten_percent.unwrap_or(0.0),
                        if ok { "" } else { " x" }
                    );
                }
                println!("{passes}/{seeds} {line}");
            }
        }
    }
}

/// Interior local maxima of a sequence, with runs of equal values collapsed.
fn interior_maxima(v: &[f64]) -> usize {
    let mut runs: Vec<f64> = Vec::new();
    for &x in v {
        if runs.last() != Some(&x) {
            runs.push(x);
        }
    }
    runs.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}

fn amplitude(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::MIN, f64::max) - v.iter().copied().fold(f64::MAX, f64::min)
}

fn scan_interference(omegas: &[f64], amps: &[f64], ls: &[f64], kes: &[f64]) {
    for &omega0 in omegas {
        for &amp in amps {
            for &l in ls {
                for &ke in kes {
                    let v_plateau = (2.0 * (ke - 1.0)).sqrt();
                    let lambda = std::f64::consts::TAU * v_plateau / omega0;
                    let widths: Vec<f64> = (0..30).map(|i| 1.0 + lambda * i as f64 / 6.0).collect();
                    let tau = 10.0 + 2.0 * widths[29] / v_plateau;
                    let taus = [tau, 2.0 * tau, 4.0 * tau];
                    let pot = Potential::soft_rect(1.0, 0.5, l).unwrap();
                    let s = setup(omega0, amp, ke, pot, ModelTier::Crude, 4.0 * tau);
                    let t0 = std::time::Instant::now();
                    match sweep_barrier_width(&s, &widths, 100, AlphaSource::Grid, &taus) {
                        Ok(t) => {
                            let cols: Vec<Vec<f64>> = taus
                                .iter()
                                .map(|&x| t.at_tau(x).iter().map(|r| r.trapping).collect())
                                .collect();
                            let maxima = interior_maxima(&cols[0]);
                            let amps: Vec<f64> = cols.iter().map(|c| amplitude(c)).collect();
                            if maxima < 2 {
                                continue;
                            }
                            println!(
                                "w0={omega0} a={amp} L={l} KE={ke} lambda={lambda:.2} tau={tau:.0} maxima={maxima} amps={amps:.2?} {:.1}s",
                                t0.elapsed().as_secs_f64()
                            );
                            for c in &cols {
                                let p: Vec<String> = c.iter().map(|x| format!("{:.2}", x)).collect();
                                println!("    {}", p.join(" "));
                            }
                        }
                        Err(e) => println!("w0={omega0} a={amp} L={l} KE={ke}: {e}"),
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn probe_interference(
    omega0: f64,
    amp: f64,
    l: f64,
    ke: f64,
    n: usize,
    d0: f64,
    d1: f64,
    k: usize,
    tau: Option<f64>,
) {
    let v_plateau = (2.0 * (ke - 1.0)).sqrt();
    let lambda = std::f64::consts::TAU * v_plateau / omega0;
    let widths: Vec<f64> =
        (0..k).map(|i| lambda * (d0 + (d1 - d0) * i as f64 / (k - 1) as f64)).collect();
    let tau = tau.unwrap_or(10.0 + 2.0 * widths[k - 1] / v_plateau);
    let taus = [tau, 2.0 * tau, 4.0 * tau];
    let pot = Potential::soft_rect(1.0, 0.5, l).unwrap();
    let s = setup(omega0, amp, ke, pot, ModelTier::Crude, 4.0 * tau);
    let t = sweep_barrier_width(&s, &widths, n, AlphaSource::Grid, &taus).unwrap();
    println!("lambda={lambda:.3} tau={tau:.1}");
    for ((a, b), c) in t.at_tau(taus[0]).iter().zip(t.at_tau(taus[1])).zip(t.at_tau(taus[2])) {
        println!(
            "{:7.3} {:.3} {:.3} {:.3} T={:.3} fail={}",
            a.width / lambda,
            a.trapping,
            b.trapping,
            c.trapping,
            a.transmission,
            a.failures
        );
    }
}

fn main() {
    match std::env::args().nth(1).as_deref() {
        Some("tunneling") => scan_tunneling(&[1.2, 1.5, 2.0], &[0.5, 0.6, 0.75, 1.0, 1.5], &[0.7, 0.75, 0.8, 0.9]),
        Some("reflection") => scan_gaussian(
            &[0.5, 1.0, 2.0],
            &[0.3, 0.5, 0.8, 1.0, 1.5, 2.0],
            &[1.01, 1.03, 1.1],
        ),
        Some("trapping") => scan_trapping(
            &[0.5, 0.75, 1.0, 1.5, 2.0],
            &[1.2, 1.4, 1.6, 1.8, 2.0, 2.4],
            &[0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.02, 1.05, 1.1, 1.2],
        ),
        Some("emission") => {
            let kes = [1.01, 1.02, 1.03, 1.05, 1.07, 1.1];
            scan_emission(ModelTier::Crude, &[0.4, 0.5, 0.6], &[1.1, 1.2, 1.3, 1.4, 1.5], &kes, 6);
            scan_emission(ModelTier::Exact, &[0.4, 0.5, 0.6], &[1.1, 1.2, 1.3, 1.4], &kes, 6);
        }
        Some("probe") => {
            let v: Vec<f64> = std::env::args().skip(2).map(|a| a.parse().unwrap()).collect();
            probe_interference(v[0], v[1], v[2], v[3], v[4] as usize, v[5], v[6], v[7] as usize, v.get(8).copied());
        }
        Some("interference") => scan_interference(
            &[0.5, 1.0, 2.0],
            &[0.5, 1.0, 1.5],
            &[0.1, 0.2, 0.3],
            &[1.05, 1.1, 1.2],
        ),
        _ => eprintln!("usage: discover <tunneling|reflection|trapping|emission|interference|probe ...>"),
    }
}
