use std::time::{Duration, Instant};

use covert_core::bounds::{
    covert_pe_lb, covert_threshold, covertness_lhs, fidelity_lb_channels, fidelity_lb_energy_only, nu, ChannelPair,
};
use covert_core::covert_opt::{energy_limits, min_fidelity_numeric, KktSolution, KktStatus};
use covert_core::gaussian::{
    alice_received, fock_from_channel, q_s_fock_oracle, q_s_gaussian, thermal_state, FockDensity, GaussianState, Hypothesis, Probe,
};
use covert_core::numerics::log_gamma;
use covert_core::photon_stats::{thermal_total_pmf, willie_pgf_from_probe, NegBinomial, PhotonPmf, Pgf, ThermalPgf};
use covert_core::probes::{covert_curves, exponent_gcs, exponent_tmsv, perfect_covert_sweep, Method};
use covert_core::ScenarioParams;

fn report(n: u32, ok: bool, detail: String) {
    println!("[{}] criterion {n}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn m_grid() -> Vec<u64> {
    log_grid(1e2, 1e6, 9).into_iter().map(|m| m.round() as u64).collect()
}

/// Least squares of ln y = ln A − β ln M.
fn power_fit(m: &[u64], y: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = m.iter().map(|&v| (v as f64).ln()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    ((my - slope * mx).exp(), -slope)
}

#[test]
fn criterion_1_perfect_covert_exponents() {
    let start = Instant::now();
    let grid = log_grid(0.01, 20.0, 48);
    let rows = perfect_covert_sweep(0.01, &grid).unwrap();
    let elapsed = start.elapsed();
    let ordered = rows.iter().all(|r| r.chi_tmsv_qc >= r.chi_gcs_qc);
    let close = rows.iter().all(|r| {
        (r.chi_tmsv_qc - r.chi_tmsv_qb).abs() <= 0.02 * r.chi_tmsv_qc
            && (r.chi_gcs_qc - r.chi_gcs_qb).abs() <= 0.02 * r.chi_gcs_qc
    });
    let (imax, best) = rows.iter().enumerate().max_by(|a, b| a.1.ratio.total_cmp(&b.1.ratio)).unwrap();
    let interior = imax > 0 && imax + 1 < rows.len();
    let ok = ordered
        && close
        && interior
        && (best.ratio - 1.45).abs() <= 0.05
        && (best.nb - 0.2).abs() <= 0.1
        && elapsed <= Duration::from_secs(120);
    report(
        1,
        ok,
        format!(
            "max ratio {:.4} at N_B {:.4}, ordering {ordered}, QC/QB within 2% {close}, {:.1}s",
            best.ratio,
            best.nb,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_covert_error_curves() {
    let start = Instant::now();
    let ms = m_grid();
    let mut ratios = Vec::new();
    let mut ordered = true;
    for nb in [0.2, 0.002] {
        let p = ScenarioParams::new(0.01, nb, 100, 1e-3).unwrap();
        let rows = covert_curves(&p, &ms).unwrap();
        ordered &= rows.iter().all(|r| r.log10_pe_bound <= r.log10_pe_tmsv && r.log10_pe_tmsv <= r.log10_pe_gcs);
        let last = rows.last().unwrap();
        ratios.push(last.bound_exponent / last.chi_tmsv);
    }
    let elapsed = start.elapsed();
    let ok = (ratios[0] - 1.37).abs() <= 0.07
        && (ratios[1] - 1.16).abs() <= 0.07
        && ordered
        && elapsed <= Duration::from_secs(300);
    report(
        2,
        ok,
        format!(
            "exponent ratio {:.4} at N_B 0.2 (want 1.37), {:.4} at N_B 0.002 (want 1.16), ordering {ordered}, {:.1}s",
            ratios[0],
            ratios[1],
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_3_energy_limits() {
    let start = Instant::now();
    let ms = m_grid();
    let base = ScenarioParams::new(0.01, 0.2, 100, 1e-3).unwrap();
    let (mut up, mut down, mut nested) = (Vec::new(), Vec::new(), true);
    for &m in &ms {
        let wide = energy_limits(&base.with_m(m).unwrap()).unwrap();
        let tight = energy_limits(&base.with_m(m).unwrap().with_epsilon(1e-4).unwrap()).unwrap();
        nested &= wide.ns_min < tight.ns_min && tight.ns_max < wide.ns_max;
        up.push(wide.ns_max - 0.2);
        down.push(0.2 - wide.ns_min);
    }
    let (a_plus, beta) = (power_fit(&ms, &up).0, power_fit(&ms, &up).1);
    let (a_minus, beta_minus) = power_fit(&ms, &down);
    let elapsed = start.elapsed();
    let ok = (beta - 0.5).abs() <= 0.05
        && (a_plus / 0.0671 - 1.0).abs() <= 0.1
        && (a_minus / 0.0591 - 1.0).abs() <= 0.1
        && nested
        && elapsed <= Duration::from_secs(300);
    report(
        3,
        ok,
        format!(
            "A+ {a_plus:.4} beta {beta:.4}, A- {a_minus:.4} beta {beta_minus:.4}, nested {nested}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_4_fold_reduction() {
    let start = Instant::now();
    let t = exponent_tmsv(0.01, 0.575, 0.575, Method::ExactQcb).unwrap().chi;
    let g = exponent_gcs(0.01, 0.575, 0.575, Method::ExactQcb).unwrap().chi;
    let decades = 1e6 * (t - g) / 10f64.ln();
    let elapsed = start.elapsed();
    let ok = (232.0..=242.0).contains(&decades) && elapsed <= Duration::from_secs(10);
    report(4, ok, format!("log10 error-probability ratio {decades:.2}, {:.2}s", elapsed.as_secs_f64()));
}

fn oracle_gap(g0: &GaussianState, g1: &GaussianState, f0: &FockDensity, f1: &FockDensity) -> (f64, f64) {
    let mut worst: f64 = 0.0;
    for s in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let qg = q_s_gaussian(g0, g1, s).unwrap();
        let qf = q_s_fock_oracle(f0, f1, s).unwrap();
        worst = worst.max((qg - qf).abs() / qf);
    }
    (worst, f0.tail_mass().max(f1.tail_mass()))
}

#[test]
fn criterion_5_oracle_equivalence() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut tails: f64 = 0.0;
    let mut check = |g0: &GaussianState, g1: &GaussianState, f0: &FockDensity, f1: &FockDensity| {
        let (gap, tail) = oracle_gap(g0, g1, f0, f1);
        worst = worst.max(gap);
        tails = tails.max(tail);
    };
    for (n0, n1) in [(0.2, 0.198), (0.05, 0.9), (1.0, 0.3)] {
        let d = 400;
        check(&thermal_state(n0, 1), &thermal_state(n1, 1), &FockDensity::thermal(n0, d), &FockDensity::thermal(n1, d));
    }
    for (eta, nb, re, im) in [(0.01, 0.2, 0.6, 0.3), (0.3, 0.5, 0.8, -0.4), (0.1, 1.0, 0.0, 0.9)] {
        let p = ScenarioParams::new(eta, nb, 1, 0.0).unwrap();
        let probe = Probe::Coherent { re, im };
        let g0 = alice_received(&probe, Hypothesis::Absent, &p).unwrap();
        let g1 = alice_received(&probe, Hypothesis::Present, &p).unwrap();
        let f0 = fock_from_channel(&probe, Hypothesis::Absent, &p, None).unwrap();
        let f1 = fock_from_channel(&probe, Hypothesis::Present, &p, None).unwrap();
        check(&g0, &g1, &f0, &f1);
    }
    for (eta, ns, nb) in [(0.01, 0.2, 0.2), (0.01, 0.25, 0.2), (0.1, 1.0, 1.0)] {
        let p = ScenarioParams::new(eta, nb, 1, 0.0).unwrap();
        let probe = Probe::Tmsv { n_s: ns };
        let g0 = alice_received(&probe, Hypothesis::Absent, &p).unwrap();
        let g1 = alice_received(&probe, Hypothesis::Present, &p).unwrap();
        let f0 = fock_from_channel(&probe, Hypothesis::Absent, &p, None).unwrap();
        let f1 = fock_from_channel(&probe, Hypothesis::Present, &p, None).unwrap();
        check(&g0, &g1, &f0, &f1);
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-6 && tails < 1e-12 && elapsed <= Duration::from_secs(120);
    report(
        5,
        ok,
        format!("max relative gap {worst:.3e}, max Fock tail {tails:.3e}, {:.1}s", elapsed.as_secs_f64()),
    );
}

fn heat_grid() -> Vec<ScenarioParams> {
    let mut out = Vec::new();
    for nb in [0.002, 0.2, 20.0] {
        for m in [10u64, 100, 1000] {
            for eps in log_grid(1e-4, 1e-1, 7) {
                out.push(ScenarioParams::new(0.01, nb, m, eps).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_6_bound_dominance() {
    let grid = heat_grid();
    let (mut flagged, mut bad, mut lo, mut hi) = (0usize, 0usize, f64::INFINITY, 0.0f64);
    for p in &grid {
        let s = min_fidelity_numeric(p).unwrap();
        if !s.converged {
            flagged += 1;
            continue;
        }
        let ratio = s.objective / covert_pe_lb(p).unwrap().fidelity_lb;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        if !(1.0 - 1e-12..=1.05).contains(&ratio) {
            bad += 1;
        }
    }
    let ok = bad == 0 && (flagged as f64) < 0.05 * grid.len() as f64;
    report(
        6,
        ok,
        format!("ratio range [{lo:.6}, {hi:.6}] over {} points, {flagged} flagged, {bad} outside", grid.len()),
    );
}

fn poisson(mean: f64) -> PhotonPmf {
    let lw = (0..300usize)
        .map(|k| -mean + k as f64 * mean.ln() - log_gamma(k as f64 + 1.0).unwrap())
        .collect();
    PhotonPmf::normalized(0, lw).unwrap()
}

#[test]
fn criterion_7_property_suite() {
    let mut violations = Vec::new();

    for (eta, nb, m) in [(0.01, 0.2, 5u64), (0.1, 2.0, 3), (0.3, 0.02, 10), (0.01, 20.0, 1)] {
        let p = ScenarioParams::new(eta, nb, m, 1e-3).unwrap();
        let pair = ChannelPair::target_detection(&p).unwrap();
        let pmfs = [
            thermal_total_pmf(0.4, m).unwrap(),
            PhotonPmf::from_probabilities(1, &[0.3, 0.0, 0.0, 0.7]).unwrap(),
            poisson(2.5),
        ];
        for pmf in &pmfs {
            let a = fidelity_lb_energy_only(pmf.mean(), &pair).unwrap();
            let b = fidelity_lb_channels(pmf, &pair);
            if !(a < b) {
                violations.push(format!("jensen {eta} {nb} {m}: {a} vs {b}"));
            }
        }
    }

    for g0 in [1.0, 1.001, 1.5, 3.0, 50.0] {
        for g1 in [1.0, 1.2, 7.0, 1e3] {
            let v = nu(g0, g1).unwrap();
            if !(v > 0.0 && v <= 1.0) {
                violations.push(format!("nu {g0} {g1} = {v}"));
            }
        }
    }

    for nb in [0.002, 0.2, 20.0] {
        for m in [1u64, 10, 1000, 100_000] {
            let lhs = covertness_lhs(&thermal_total_pmf(nb, m).unwrap(), nb, m).unwrap();
            if (1.0 - lhs).abs() >= 1e-10 {
                violations.push(format!("matched lhs {nb} {m} = {lhs}"));
            }
        }
    }

    for (nb, m) in [(0.2, 1u64), (0.2, 50), (2.0, 7), (0.002, 1000)] {
        let p = ScenarioParams::new(0.01, nb, m, 1e-3).unwrap();
        let probe = ThermalPgf { n_mean: nb, m_modes: m as f64 };
        for xi in [0.0, 0.3, 0.9] {
            let w = willie_pgf_from_probe(probe, &p, xi).unwrap();
            let want = probe.eval(xi).unwrap();
            if (w - want).abs() >= 1e-12 {
                violations.push(format!("pgf fixed point {nb} {m} {xi}: {w} vs {want}"));
            }
        }
    }

    let p = ScenarioParams::new(0.05, 0.4, 1, 0.0).unwrap();
    let probes = [Probe::Tmsv { n_s: 0.3 }, Probe::Coherent { re: 0.7, im: 0.2 }];
    let states: Vec<_> = probes
        .iter()
        .map(|pr| {
            (alice_received(pr, Hypothesis::Absent, &p).unwrap(), alice_received(pr, Hypothesis::Present, &p).unwrap())
        })
        .collect();
    for s in [0.1, 0.37, 0.5, 0.8] {
        let joint = q_s_gaussian(&states[0].0.tensor(&states[1].0), &states[0].1.tensor(&states[1].1), s).unwrap();
        let prod = q_s_gaussian(&states[0].0, &states[0].1, s).unwrap() * q_s_gaussian(&states[1].0, &states[1].1, s).unwrap();
        if (joint - prod).abs() > 1e-10 * prod {
            violations.push(format!("multiplicativity s={s}: {joint} vs {prod}"));
        }
        for (a, b) in &states {
            let d = (q_s_gaussian(a, b, s).unwrap() - q_s_gaussian(b, a, 1.0 - s).unwrap()).abs();
            if d >= 1e-10 {
                violations.push(format!("swap symmetry s={s}: {d}"));
            }
        }
    }

    report(7, violations.is_empty(), format!("{} violations {:?}", violations.len(), violations));
}

/// Residuals recomputed from q_star and Willie's law, independent of the solver's own bookkeeping.
fn independent_residuals(s: &KktSolution, p: &ScenarioParams, denom: impl Fn(usize) -> f64) -> [f64; 4] {
    let keep = 1.0 - s.escape_mass;
    let nb = NegBinomial::new(p.n_b, p.m_modes).unwrap();
    let lp = nb.ln_pmf_range(s.q_star.start(), s.q_star.end());
    let mut stat: f64 = 0.0;
    if matches!(s.status, KktStatus::Interior | KktStatus::Escape) {
        for ((n, lq), lpn) in s.q_star.iter().zip(&lp) {
            let formula = 0.25 * s.mult1 * s.mult1 * lpn.exp() / denom(n).powi(2);
            stat = stat.max((keep * lq.exp() - formula).abs());
        }
    }
    let lhs = keep.sqrt() * covertness_lhs(&s.q_star, p.n_b, p.m_modes).unwrap();
    [stat, (s.q_star.total_mass() - 1.0).abs(), (-s.mult1).max(0.0), (lhs - covert_threshold(p)).abs()]
}

#[test]
fn criterion_8_kkt_residuals() {
    let mut checked = 0usize;
    let mut worst = [0.0f64; 4];
    let mut positive_dual = true;
    let mut absorb = |r: [f64; 4], s: &KktSolution| {
        checked += 1;
        positive_dual &= s.mult1 > 0.0;
        for i in 0..4 {
            worst[i] = worst[i].max(r[i]);
        }
    };
    let base = ScenarioParams::new(0.01, 0.2, 100, 1e-3).unwrap();
    for m in m_grid() {
        for eps in [1e-3, 1e-4] {
            let p = base.with_m(m).unwrap().with_epsilon(eps).unwrap();
            let lim = energy_limits(&p).unwrap();
            for s in [lim.min.as_ref().unwrap(), lim.max.as_ref().unwrap()] {
                if s.converged {
                    let r = independent_residuals(s, &p, |n| (n as f64 - s.mult2).abs());
                    absorb(r, s);
                }
            }
        }
    }
    for p in heat_grid() {
        let s = min_fidelity_numeric(&p).unwrap();
        if s.converged {
            let u = covert_core::bounds::universal_terms(p.eta, p.n_b).unwrap();
            let a = (u.nu * u.mu).powf(p.m());
            let r = independent_residuals(&s, &p, |n| a * u.x.powi(n as i32) + s.mult2);
            absorb(r, &s);
        }
    }
    let ok = worst[0] < 1e-10 && worst[1] < 1e-10 && worst[2] == 0.0 && worst[3] < 1e-8 && positive_dual;
    report(
        8,
        ok,
        format!(
            "{checked} solutions, stationarity {:.2e}, primal {:.2e}, dual {:.1e}, slackness {:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
}
