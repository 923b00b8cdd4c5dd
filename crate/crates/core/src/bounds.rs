//! Fidelity and error-probability lower bounds, and the covertness condition.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::numerics::LogSum;
use crate::photon_stats::{NegBinomial, PhotonPmf};
use crate::scenario::ScenarioParams;

/// Two thermal-loss channels L_{κ0,N0}, L_{κ1,N1} applied to each of M modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPair {
    pub kappa0: f64,
    pub kappa1: f64,
    pub n0: f64,
    pub n1: f64,
    pub m_modes: u64,
}

impl ChannelPair {
    pub fn new(kappa0: f64, kappa1: f64, n0: f64, n1: f64, m_modes: u64) -> Result<Self> {
        for k in [kappa0, kappa1] {
            if !(0.0..=1.0).contains(&k) {
                return Err(domain("kappa", k));
            }
        }
        for n in [n0, n1] {
            if !(n >= 0.0) || !n.is_finite() {
                return Err(domain("excess noise", n));
            }
        }
        if m_modes == 0 {
            return Err(Error::InvalidParameter("m_modes must be at least 1"));
        }
        Ok(ChannelPair { kappa0, kappa1, n0, n1, m_modes })
    }

    /// Target absent (κ = 0) against target present (κ = η), common background N_B.
    pub fn target_detection(p: &ScenarioParams) -> Result<Self> {
        Self::new(0.0, p.eta, p.n_b, p.n_b, p.m_modes)
    }

    pub fn gains(&self) -> (f64, f64) {
        ((1.0 - self.kappa0) * self.n0 + 1.0, (1.0 - self.kappa1) * self.n1 + 1.0)
    }

    /// ν and the per-photon factor ν√(κ̃0κ̃1) + √((1−κ̃0)(1−κ̃1)).
    pub fn nu_and_base(&self) -> (f64, f64) {
        let (g0, g1) = self.gains();
        let (k0, k1) = (self.kappa0 / g0, self.kappa1 / g1);
        let v = nu_unchecked(g0, g1);
        (v, v * (k0 * k1).sqrt() + ((1.0 - k0) * (1.0 - k1)).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub fidelity_lb: f64,
    pub pe_lb: f64,
    /// ln pe_lb, finite where pe_lb itself underflows.
    pub ln_pe_lb: f64,
    /// Large-M rate −2 ln f.
    pub exponent: f64,
    pub meta: ScenarioParams,
}

fn nu_unchecked(g0: f64, g1: f64) -> f64 {
    1.0 / ((g0 * g1).sqrt() - ((g0 - 1.0) * (g1 - 1.0)).sqrt())
}

pub fn nu(g0: f64, g1: f64) -> Result<f64> {
    for g in [g0, g1] {
        if !(g >= 1.0) || !g.is_finite() {
            return Err(domain("gain", g));
        }
    }
    Ok(nu_unchecked(g0, g1).min(1.0))
}

pub fn ln_fidelity_lb_channels(pmf: &PhotonPmf, pair: &ChannelPair) -> f64 {
    let (v, b) = pair.nu_and_base();
    let lb = b.ln();
    let s: LogSum = pmf.iter().map(|(n, w)| if n == 0 { w } else { w + n as f64 * lb }).collect();
    pair.m_modes as f64 * v.ln() + s.ln()
}

pub fn fidelity_lb_channels(pmf: &PhotonPmf, pair: &ChannelPair) -> f64 {
    ln_fidelity_lb_channels(pmf, pair).exp()
}

pub fn fidelity_lb_energy_only(total_energy: f64, pair: &ChannelPair) -> Result<f64> {
    if !(total_energy >= 0.0) {
        return Err(domain("total_energy", total_energy));
    }
    let (v, b) = pair.nu_and_base();
    let e = if total_energy == 0.0 { 0.0 } else { total_energy * b.ln() };
    Ok((pair.m_modes as f64 * v.ln() + e).exp())
}

fn check_priors(prior0: f64, prior1: f64) -> Result<()> {
    if !(prior0 > 0.0 && prior1 > 0.0) || (prior0 + prior1 - 1.0).abs() > 1e-12 {
        return Err(domain("prior0", prior0));
    }
    Ok(())
}

/// ln of (1 − √(1 − a))/2 given ln a, accurate for tiny a.
fn ln_half_one_minus_sqrt(ln_a: f64) -> f64 {
    let a = ln_a.exp().min(1.0);
    ln_a - 2.0.ln() - (1.0 + (1.0 - a).sqrt()).ln()
}

pub fn pe_lb_from_fidelity(f: f64, prior0: f64, prior1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(domain("fidelity", f));
    }
    check_priors(prior0, prior1)?;
    if f == 0.0 {
        return Ok(0.0);
    }
    Ok(ln_half_one_minus_sqrt((4.0 * prior0 * prior1).ln() + 2.0 * f.ln()).exp())
}

/// Σ √(q_n p_n) against Willie's M-mode thermal law of brightness N_B.
pub fn covertness_lhs(q: &PhotonPmf, n_b: f64, m_modes: u64) -> Result<f64> {
    let nb = NegBinomial::new(n_b, m_modes)?;
    let lp = nb.ln_pmf_range(q.start(), q.end());
    let s: LogSum = q.log_weights().iter().zip(&lp).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(s.ln().exp())
}

pub fn covert_threshold(p: &ScenarioParams) -> f64 {
    ((p.prior0.min(p.prior1) - p.epsilon) / (p.prior0 * p.prior1).sqrt()).max(0.0)
}

/// Θ, x, ν, μ and f entering the universal covert bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniversalTerms {
    pub theta: f64,
    pub x: f64,
    pub nu: f64,
    pub mu: f64,
    pub f: f64,
}

pub fn universal_terms(eta: f64, n_b: f64) -> Result<UniversalTerms> {
    if !(0.0..=0.4).contains(&eta) {
        return Err(domain("eta", eta));
    }
    if !(n_b >= 0.0) || !n_b.is_finite() {
        return Err(domain("n_b", n_b));
    }
    let theta = ((1.0 - eta) * (n_b + 1.0)).sqrt() / (1.0 + (1.0 - eta) * n_b).sqrt();
    let x = 1.0 - (1.0 - theta) / ((1.0 - eta) - eta * n_b * (1.0 - theta));
    let ratio = if n_b == 0.0 { 0.0 } else { n_b / x.abs() };
    if !(ratio <= n_b + 1.0) {
        return Err(Error::ConvergenceGuard { eta, ratio });
    }
    let v = nu_unchecked(n_b + 1.0, (1.0 - eta) * n_b + 1.0);
    let mu = 1.0 + eta * n_b * (1.0 - x);
    let f = v * (n_b + 1.0 - n_b / x) * mu;
    Ok(UniversalTerms { theta, x, nu: v, mu, f })
}

/// Probe-independent lower bound on Alice's error probability under ε-covertness.
pub fn covert_pe_lb(p: &ScenarioParams) -> Result<BoundReport> {
    p.validate()?;
    let u = universal_terms(p.eta, p.n_b)?;
    let t = covert_threshold(p);
    let ln_f = u.f.ln();
    let exponent = (-2.0 * ln_f).max(0.0);
    if t == 0.0 {
        return Ok(BoundReport { fidelity_lb: 0.0, pe_lb: 0.0, ln_pe_lb: f64::NEG_INFINITY, exponent, meta: *p });
    }
    let ln_fid = 2.0 * t.ln() + p.m() * ln_f;
    let ln_pe = ln_half_one_minus_sqrt(2.0 * ln_fid);
    Ok(BoundReport { fidelity_lb: ln_fid.exp(), pe_lb: ln_pe.exp(), ln_pe_lb: ln_pe, exponent, meta: *p })
}
