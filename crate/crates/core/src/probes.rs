//! TMSV and Gaussian-distributed coherent-state probes.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::bounds::covert_pe_lb;
use crate::error::{domain, Error, Result};
use crate::gaussian::{alice_received, bhattacharyya_exponent, chernoff_exponent_per_mode, q_s_gaussian, Hypothesis, Probe};
use crate::numerics::{bisect, integrate_radial, minimize_scalar, LogSum, SolverConfig};
use crate::photon_stats::NegBinomial;
use crate::scenario::ScenarioParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    Tmsv,
    Gcs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactQcb,
    Bhattacharyya,
    ClosedFormApprox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub n_s: f64,
}

impl ProbeSpec {
    pub fn exponent(&self, eta: f64, n_b: f64, method: Method) -> Result<ExponentReport> {
        match self.kind {
            ProbeKind::Tmsv => exponent_tmsv(eta, self.n_s, n_b, method),
            ProbeKind::Gcs => exponent_gcs(eta, self.n_s, n_b, method),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentReport {
    pub chi: f64,
    pub s_star: f64,
    pub method: Method,
}

fn scenario(eta: f64, n_b: f64) -> Result<ScenarioParams> {
    ScenarioParams::new(eta, n_b, 1, 0.0)
}

fn closed_form_guard(n_s: f64, n_b: f64) -> Result<()> {
    if (n_s - n_b).abs() > 1e-12 * n_b.max(1.0) {
        return Err(Error::InvalidParameter("closed-form exponents hold at n_s = n_b only"));
    }
    Ok(())
}

pub fn exponent_tmsv(eta: f64, n_s: f64, n_b: f64, method: Method) -> Result<ExponentReport> {
    let p = scenario(eta, n_b)?;
    if !(n_s >= 0.0) {
        return Err(domain("n_s", n_s));
    }
    if method == Method::ClosedFormApprox {
        closed_form_guard(n_s, n_b)?;
        let bracket = 0.25 * eta * (1.0 - 1.0 / (2.0 * n_b + 1.0).powi(2));
        return Ok(ExponentReport { chi: -(-bracket).ln_1p(), s_star: 0.5, method });
    }
    let probe = Probe::Tmsv { n_s };
    let r0 = alice_received(&probe, Hypothesis::Absent, &p)?;
    let r1 = alice_received(&probe, Hypothesis::Present, &p)?;
    match method {
        Method::ExactQcb => {
            let c = chernoff_exponent_per_mode(&r0, &r1)?;
            Ok(ExponentReport { chi: c.chi, s_star: c.s_star, method })
        }
        _ => Ok(ExponentReport { chi: bhattacharyya_exponent(&r0, &r1)?, s_star: 0.5, method }),
    }
}

/// C_s[α] for a real amplitude α, by phase symmetry.
pub fn gcs_overlap(eta: f64, n_b: f64, alpha: f64, s: f64) -> Result<f64> {
    let p = scenario(eta, n_b)?;
    let probe = Probe::Coherent { re: alpha, im: 0.0 };
    q_s_gaussian(&alice_received(&probe, Hypothesis::Absent, &p)?, &alice_received(&probe, Hypothesis::Present, &p)?, s)
}

/// ∫ d²α P(α) C_s[α] over the circular Gaussian of mean energy n_s.
pub fn gcs_averaged_overlap(eta: f64, n_s: f64, n_b: f64, s: f64) -> Result<f64> {
    let mut err = None;
    let r = integrate_radial(
        |a| match gcs_overlap(eta, n_b, a, s) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        n_s,
        &SolverConfig::default(),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    if !r.converged {
        return Err(Error::Numerical("radial quadrature did not converge"));
    }
    Ok(r.value)
}

pub fn exponent_gcs(eta: f64, n_s: f64, n_b: f64, method: Method) -> Result<ExponentReport> {
    scenario(eta, n_b)?;
    if !(n_s >= 0.0) {
        return Err(domain("n_s", n_s));
    }
    match method {
        Method::ClosedFormApprox => {
            closed_form_guard(n_s, n_b)?;
            let bracket = 2.0 * eta * n_b * (n_b - (n_b * (n_b + 1.0)).sqrt() + 0.5);
            Ok(ExponentReport { chi: -(-bracket).ln_1p(), s_star: 0.5, method })
        }
        Method::Bhattacharyya => {
            let c = gcs_averaged_overlap(eta, n_s, n_b, 0.5)?;
            Ok(ExponentReport { chi: (-c.ln()).max(0.0), s_star: 0.5, method })
        }
        Method::ExactQcb => {
            let mut err = None;
            let m = minimize_scalar(
                |s| match gcs_averaged_overlap(eta, n_s, n_b, s) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        f64::INFINITY
                    }
                },
                0.0,
                1.0,
                &SolverConfig { abs_tol: 1e-7, ..SolverConfig::default() },
            )?;
            if let Some(e) = err {
                return Err(e);
            }
            Ok(ExponentReport { chi: (-m.fx.ln()).max(0.0), s_star: m.x, method })
        }
    }
}

/// ‖σ0 − σ1‖₁ between Willie's M-mode thermal states of brightness n_b and n.
pub fn thermal_trace_norm(n_b: f64, n: f64, m_modes: u64) -> Result<f64> {
    if n == n_b {
        return Ok(0.0);
    }
    let m = m_modes as f64;
    let (lo_n, hi_n) = if n < n_b { (n, n_b) } else { (n_b, n) };
    if lo_n == 0.0 {
        return Ok(2.0 * (1.0 - (-m * hi_n.ln_1p()).exp()));
    }
    let n_t = (m * ((hi_n + 1.0) / (lo_n + 1.0)).ln() / (hi_n * (lo_n + 1.0) / ((hi_n + 1.0) * lo_n)).ln()).floor();
    let n_t = n_t.max(-1.0);
    let a = NegBinomial::new(lo_n, m_modes)?;
    let b = NegBinomial::new(hi_n, m_modes)?;
    let (la, ha) = a.window();
    let (lb, hb) = b.window();
    let (lo, hi) = (la.min(lb), ha.max(hb));
    let pa = a.ln_pmf_range(lo, hi);
    let pb = b.ln_pmf_range(lo, hi);
    let (mut a_low, mut b_low, mut a_high, mut b_high) = (LogSum::new(), LogSum::new(), LogSum::new(), LogSum::new());
    for (i, (x, y)) in pa.iter().zip(&pb).enumerate() {
        if ((lo + i) as f64) <= n_t {
            a_low.add(*x);
            b_low.add(*y);
        } else {
            a_high.add(*x);
            b_high.add(*y);
        }
    }
    let low = a_low.ln().exp() - b_low.ln().exp();
    let high = b_high.ln().exp() - a_high.ln().exp();
    Ok((low + high).max(0.0))
}

/// Largest per-mode N_S above N_B whose thermal signature at Willie stays ε-covert.
pub fn covert_ns_budget(p: &ScenarioParams) -> Result<f64> {
    p.validate()?;
    if p.epsilon == 0.0 {
        return Ok(p.n_b);
    }
    let target = 4.0 * p.epsilon;
    let m = p.m();
    let willie = |ns: f64| (1.0 - p.eta) * ns + p.eta * p.n_b;
    if p.n_b == 0.0 {
        if target >= 2.0 {
            return Err(Error::Bracket("trace norm never reaches 4ε"));
        }
        let n = (1.0 - 0.5 * target).powf(-1.0 / m) - 1.0;
        return Ok(n / (1.0 - p.eta));
    }
    let f = |ns: f64| thermal_trace_norm(p.n_b, willie(ns), p.m_modes).map(|t| t - target);
    let mut step = (p.n_b + 1.0) * (p.epsilon / m).sqrt();
    let mut hi = p.n_b + step;
    while f(hi)? < 0.0 {
        step *= 2.0;
        hi = p.n_b + step;
        if step > 1e6 * (p.n_b + 1.0) {
            return Err(Error::Bracket("covert budget above search range"));
        }
    }
    let mut err = None;
    let ns = bisect(
        |ns| match f(ns) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        p.n_b,
        hi,
        &SolverConfig::default(),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(ns)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfectCovertRow {
    pub nb: f64,
    pub chi_tmsv_qc: f64,
    pub chi_tmsv_qb: f64,
    pub chi_gcs_qc: f64,
    pub chi_gcs_qb: f64,
    pub ratio: f64,
}

pub fn perfect_covert_row(eta: f64, nb: f64) -> Result<PerfectCovertRow> {
    let tq = exponent_tmsv(eta, nb, nb, Method::ExactQcb)?.chi;
    let tb = exponent_tmsv(eta, nb, nb, Method::Bhattacharyya)?.chi;
    let gq = exponent_gcs(eta, nb, nb, Method::ExactQcb)?.chi;
    let gb = exponent_gcs(eta, nb, nb, Method::Bhattacharyya)?.chi;
    Ok(PerfectCovertRow { nb, chi_tmsv_qc: tq, chi_tmsv_qb: tb, chi_gcs_qc: gq, chi_gcs_qb: gb, ratio: tq / gq })
}

/// Exponents at N_S = N_B for every grid brightness, in input order.
pub fn perfect_covert_sweep(eta: f64, n_b_grid: &[f64]) -> Result<Vec<PerfectCovertRow>> {
    n_b_grid.iter().map(|&nb| perfect_covert_row(eta, nb)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovertCurveRow {
    pub m: u64,
    pub n_s: f64,
    pub log10_pe_bound: f64,
    pub log10_pe_tmsv: f64,
    pub log10_pe_gcs: f64,
    pub bound_exponent: f64,
    pub chi_tmsv: f64,
    pub chi_gcs: f64,
}

fn log10_qcb(m: f64, chi: f64) -> f64 {
    (-m * chi - 2.0.ln()) / 10.0.ln()
}

pub fn covert_curve_row(p: &ScenarioParams) -> Result<CovertCurveRow> {
    let ns = covert_ns_budget(p)?;
    let bound = covert_pe_lb(p)?;
    let t = exponent_tmsv(p.eta, ns, p.n_b, Method::ExactQcb)?.chi;
    let g = exponent_gcs(p.eta, ns, p.n_b, Method::ExactQcb)?.chi;
    Ok(CovertCurveRow {
        m: p.m_modes,
        n_s: ns,
        log10_pe_bound: bound.ln_pe_lb / 10.0.ln(),
        log10_pe_tmsv: log10_qcb(p.m(), t),
        log10_pe_gcs: log10_qcb(p.m(), g),
        bound_exponent: bound.exponent,
        chi_tmsv: t,
        chi_gcs: g,
    })
}

/// Bound and probe error probabilities along M with N_S at the covert budget.
pub fn covert_curves(p: &ScenarioParams, m_grid: &[u64]) -> Result<Vec<CovertCurveRow>> {
    m_grid.iter().map(|&m| covert_curve_row(&p.with_m(m)?)).collect()
}
