//! Total-photon-number distributions and generating functions.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::numerics::{lgamma, CompensatedSum, LogSum, LogWeight};
use crate::scenario::ScenarioParams;

/// Relative size of the neglected tails when a series window is grown.
pub const SERIES_TOL: f64 = 1e-17;

/// Distribution of the total photon number on the window start..start+len.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonPmf {
    start: usize,
    log_weights: Vec<f64>,
    truncation_tail: f64,
}

impl PhotonPmf {
    pub fn from_log_weights(start: usize, log_weights: Vec<f64>, truncation_tail: f64) -> Result<Self> {
        if !(0.0..1e-10).contains(&truncation_tail) {
            return Err(domain("truncation tail", truncation_tail));
        }
        if log_weights.is_empty() || log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::InvalidParameter("log weights must be non-empty and finite or -inf"));
        }
        let total = log_weights.iter().copied().collect::<LogSum>().ln().exp();
        if total > 1.0 + 1e-12 || total < 1.0 - truncation_tail - 1e-12 {
            return Err(domain("pmf total mass", total));
        }
        Ok(PhotonPmf { start, log_weights, truncation_tail })
    }

    pub fn from_probabilities(start: usize, probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("probabilities must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        let lw = probs.iter().map(|p| p.ln()).collect();
        Self::from_log_weights(start, lw, (1.0 - total).max(0.0))
    }

    /// Rescales arbitrary log weights to unit mass.
    pub fn normalized(start: usize, mut log_weights: Vec<f64>) -> Result<Self> {
        let z = log_weights.iter().copied().collect::<LogSum>().ln();
        if !z.is_finite() {
            return Err(Error::InvalidParameter("weights have no finite mass"));
        }
        for w in &mut log_weights {
            *w -= z;
        }
        Self::from_log_weights(start, log_weights, 0.0)
    }

    pub fn point_mass(n: usize) -> Self {
        PhotonPmf { start: n, log_weights: alloc::vec![0.0], truncation_tail: 0.0 }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// One past the largest stored photon number.
    pub fn end(&self) -> usize {
        self.start + self.log_weights.len()
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn truncation_tail(&self) -> f64 {
        self.truncation_tail
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn log_weight(&self, n: usize) -> LogWeight {
        if n < self.start || n >= self.end() {
            LogWeight::ZERO
        } else {
            LogWeight(self.log_weights[n - self.start])
        }
    }

    pub fn prob(&self, n: usize) -> f64 {
        self.log_weight(n).value()
    }

    /// (n, ln p_n) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.log_weights.iter().enumerate().map(move |(i, &w)| (self.start + i, w))
    }

    pub fn total_mass(&self) -> f64 {
        self.log_weights.iter().copied().collect::<LogSum>().ln().exp()
    }

    pub fn mean(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for (n, w) in self.iter() {
            acc.add(n as f64 * w.exp());
        }
        acc.value()
    }
}

/// Negative-binomial law of the total photon number of M iid thermal modes.
///
/// Weights are produced by ratio recursion outward from the mode and
/// normalised over the adaptive window, which keeps relative accuracy at
/// M ≫ 1 where ln Γ itself carries absolute error.
#[derive(Debug, Clone)]
pub struct NegBinomial {
    n_mean: f64,
    m: f64,
    ln_r: f64,
    lo: usize,
    window: Vec<f64>,
    tail: f64,
}

impl NegBinomial {
    pub fn new(n_mean: f64, m_modes: u64) -> Result<Self> {
        Self::with_tol(n_mean, m_modes, SERIES_TOL)
    }

    pub fn with_tol(n_mean: f64, m_modes: u64, tol: f64) -> Result<Self> {
        if !(n_mean >= 0.0) || !n_mean.is_finite() {
            return Err(domain("n_mean", n_mean));
        }
        if m_modes == 0 {
            return Err(Error::InvalidParameter("m_modes must be at least 1"));
        }
        let m = m_modes as f64;
        if n_mean == 0.0 {
            return Ok(NegBinomial { n_mean, m, ln_r: f64::NEG_INFINITY, lo: 0, window: alloc::vec![0.0], tail: 0.0 });
        }
        let ln_r = (n_mean / (n_mean + 1.0)).ln();
        let mode = ((m - 1.0) * n_mean).floor().max(0.0) as usize;
        let anchor = lgamma(mode as f64 + m) - lgamma(mode as f64 + 1.0) - lgamma(m) + mode as f64 * ln_r
            - m * n_mean.ln_1p();
        let mut up = alloc::vec![anchor];
        let mut down: Vec<f64> = Vec::new();
        let mut acc = LogSum::new();
        acc.add(anchor);
        let (mut up_tail, mut down_tail) = (f64::INFINITY, f64::INFINITY);
        let (mut n_hi, mut n_lo) = (mode, mode);
        loop {
            let mut progressed = false;
            // upward tail bound uses the ratio at the current edge, which dominates all later ratios
            let w_hi = *up.last().unwrap_or(&anchor);
            let rho = ((n_hi as f64 + m) / (n_hi as f64 + 1.0)).ln() + ln_r;
            if rho < 0.0 {
                up_tail = w_hi + rho - (-rho.exp()).ln_1p();
            }
            if !(rho < 0.0 && up_tail < acc.ln() + tol.ln()) {
                let next = w_hi + rho;
                up.push(next);
                acc.add(next);
                n_hi += 1;
                progressed = true;
            }
            if n_lo > 0 {
                let w_lo = *down.last().unwrap_or(&anchor);
                let sigma = (n_lo as f64 / (n_lo as f64 - 1.0 + m)).ln() - ln_r;
                if sigma < 0.0 {
                    down_tail = w_lo + sigma - (-sigma.exp()).ln_1p();
                }
                if !(sigma < 0.0 && down_tail < acc.ln() + tol.ln()) {
                    let next = w_lo + sigma;
                    down.push(next);
                    acc.add(next);
                    n_lo -= 1;
                    progressed = true;
                }
            } else {
                down_tail = f64::NEG_INFINITY;
            }
            if !progressed {
                break;
            }
        }
        let z = acc.ln();
        let mut window: Vec<f64> = down.into_iter().rev().collect();
        window.extend(up);
        for w in &mut window {
            *w -= z;
        }
        let tail = (up_tail - z).exp() + (down_tail - z).exp();
        Ok(NegBinomial { n_mean, m, ln_r, lo: n_lo, window, tail })
    }

    pub fn n_mean(&self) -> f64 {
        self.n_mean
    }

    /// Adaptive window as [lo, hi).
    pub fn window(&self) -> (usize, usize) {
        (self.lo, self.lo + self.window.len())
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail
    }

    /// ln p_n for every n in [lo, hi), recursing beyond the stored window when needed.
    pub fn ln_pmf_range(&self, lo: usize, hi: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(hi.saturating_sub(lo));
        if self.ln_r == f64::NEG_INFINITY {
            out.extend((lo..hi).map(|n| if n == 0 { 0.0 } else { f64::NEG_INFINITY }));
            return out;
        }
        let (wlo, whi) = self.window();
        let below: Vec<f64> = if lo < wlo {
            let mut v = Vec::with_capacity(wlo - lo);
            let mut w = self.window[0];
            for n in (lo + 1..=wlo).rev() {
                w += (n as f64 / (n as f64 - 1.0 + self.m)).ln() - self.ln_r;
                if n - 1 < hi {
                    v.push(w);
                }
            }
            v.reverse();
            v
        } else {
            Vec::new()
        };
        out.extend(below.into_iter().take(hi.min(wlo).saturating_sub(lo)));
        let a = lo.max(wlo);
        let b = hi.min(whi);
        if a < b {
            out.extend_from_slice(&self.window[a - wlo..b - wlo]);
        }
        if hi > whi {
            let mut w = *self.window.last().unwrap_or(&0.0);
            for n in whi - 1..hi - 1 {
                w += ((n as f64 + self.m) / (n as f64 + 1.0)).ln() + self.ln_r;
                if n + 1 >= lo {
                    out.push(w);
                }
            }
        }
        out
    }

    pub fn ln_pmf(&self, n: usize) -> f64 {
        self.ln_pmf_range(n, n + 1)[0]
    }

    pub fn to_pmf(&self) -> PhotonPmf {
        PhotonPmf { start: self.lo, log_weights: self.window.clone(), truncation_tail: self.tail.min(9e-11) }
    }
}

/// Total photon number of M iid thermal modes of mean n_mean, on an adaptive window.
pub fn thermal_total_pmf(n_mean: f64, m_modes: u64) -> Result<PhotonPmf> {
    Ok(NegBinomial::new(n_mean, m_modes)?.to_pmf())
}

/// As `thermal_total_pmf`, truncated to n ∈ [0, d].
pub fn thermal_total_pmf_upto(n_mean: f64, m_modes: u64, d: usize) -> Result<PhotonPmf> {
    let nb = NegBinomial::new(n_mean, m_modes)?;
    let lw = nb.ln_pmf_range(0, d + 1);
    let kept = lw.iter().copied().collect::<LogSum>().ln().exp();
    PhotonPmf::from_log_weights(0, lw, (1.0 - kept).max(0.0))
}

pub trait Pgf {
    fn eval(&self, xi: f64) -> Result<f64>;

    fn ln_eval(&self, xi: f64) -> Result<f64> {
        Ok(self.eval(xi)?.ln())
    }

    /// Largest |ξ| for which evaluation is guaranteed to converge.
    fn domain_radius(&self) -> f64;

    fn check(&self, xi: f64) -> Result<()> {
        let r = self.domain_radius();
        if !(xi.abs() < r) {
            return Err(Error::PgfDomain { xi, radius: r });
        }
        Ok(())
    }
}

impl<P: Pgf + ?Sized> Pgf for &P {
    fn eval(&self, xi: f64) -> Result<f64> {
        (**self).eval(xi)
    }
    fn ln_eval(&self, xi: f64) -> Result<f64> {
        (**self).ln_eval(xi)
    }
    fn domain_radius(&self) -> f64 {
        (**self).domain_radius()
    }
}

/// [1 + N(1−ξ)]^{−M}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalPgf {
    pub n_mean: f64,
    pub m_modes: f64,
}

impl Pgf for ThermalPgf {
    fn eval(&self, xi: f64) -> Result<f64> {
        Ok(self.ln_eval(xi)?.exp())
    }

    fn ln_eval(&self, xi: f64) -> Result<f64> {
        self.check(xi)?;
        Ok(-self.m_modes * (self.n_mean * (1.0 - xi)).ln_1p())
    }

    fn domain_radius(&self) -> f64 {
        if self.n_mean == 0.0 {
            f64::INFINITY
        } else {
            (self.n_mean + 1.0) / self.n_mean
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmfPgf {
    pmf: PhotonPmf,
    radius: f64,
}

pub fn pgf_of_pmf(pmf: &PhotonPmf) -> PmfPgf {
    let lw = pmf.log_weights();
    let k = lw.len().saturating_sub(1).min(8);
    let max_ratio = (lw.len() - k - 1..lw.len() - 1)
        .map(|i| lw[i + 1] - lw[i])
        .filter(|d| d.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let radius = if k == 0 || max_ratio == f64::NEG_INFINITY { f64::INFINITY } else { (-max_ratio).exp() };
    PmfPgf { pmf: pmf.clone(), radius }
}

impl PmfPgf {
    pub fn pmf(&self) -> &PhotonPmf {
        &self.pmf
    }
}

impl Pgf for PmfPgf {
    fn eval(&self, xi: f64) -> Result<f64> {
        self.check(xi)?;
        if xi == 0.0 {
            return Ok(self.pmf.prob(0));
        }
        if xi > 0.0 {
            return self.ln_eval(xi).map(|v| v.exp());
        }
        let lx = (-xi).ln();
        let terms: Vec<(f64, f64)> = self
            .pmf
            .iter()
            .map(|(n, w)| (w + n as f64 * lx, if n % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let shift = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
        let mut acc = CompensatedSum::default();
        for (t, sgn) in terms {
            acc.add(sgn * (t - shift).exp());
        }
        Ok(acc.value() * shift.exp())
    }

    fn ln_eval(&self, xi: f64) -> Result<f64> {
        if xi <= 0.0 {
            return Ok(self.eval(xi)?.ln());
        }
        self.check(xi)?;
        let lx = xi.ln();
        Ok(self.pmf.iter().map(|(n, w)| w + n as f64 * lx).collect::<LogSum>().ln())
    }

    fn domain_radius(&self) -> f64 {
        self.radius
    }
}

/// Output pgf after M-mode thermal loss L_{κ,N}, realised as amplifier ∘ pure loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalLossPgf<P> {
    inner: P,
    kappa: f64,
    n_env: f64,
    m_modes: f64,
}

pub fn pgf_through_thermal_loss<P: Pgf>(pgf_in: P, kappa: f64, n_env: f64, m_modes: f64) -> Result<ThermalLossPgf<P>> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(domain("kappa", kappa));
    }
    if !(n_env >= 0.0) {
        return Err(domain("n_env", n_env));
    }
    Ok(ThermalLossPgf { inner: pgf_in, kappa, n_env, m_modes })
}

impl<P: Pgf> ThermalLossPgf<P> {
    fn gain(&self) -> f64 {
        (1.0 - self.kappa) * self.n_env + 1.0
    }

    fn inner_arg(&self, xi: f64) -> (f64, f64) {
        let g = self.gain();
        let kt = self.kappa / g;
        let d = g - xi * (g - 1.0);
        (d, 1.0 - kt + kt * xi / d)
    }
}

impl<P: Pgf> Pgf for ThermalLossPgf<P> {
    fn eval(&self, xi: f64) -> Result<f64> {
        let (d, y) = self.inner_arg(xi);
        if !(d > 0.0) {
            return Err(Error::PgfDomain { xi, radius: self.domain_radius() });
        }
        Ok(d.powf(-self.m_modes) * self.inner.eval(y)?)
    }

    fn ln_eval(&self, xi: f64) -> Result<f64> {
        let (d, y) = self.inner_arg(xi);
        if !(d > 0.0) {
            return Err(Error::PgfDomain { xi, radius: self.domain_radius() });
        }
        Ok(-self.m_modes * d.ln() + self.inner.ln_eval(y)?)
    }

    fn domain_radius(&self) -> f64 {
        let g = self.gain();
        let kt = self.kappa / g;
        let pole = if g > 1.0 { g / (g - 1.0) } else { f64::INFINITY };
        let r_in = self.inner.domain_radius();
        if kt == 0.0 || r_in == f64::INFINITY {
            return pole;
        }
        let c = (r_in - 1.0 + kt) / kt;
        let edge = c * g / (1.0 + c * (g - 1.0));
        if edge > 0.0 {
            edge.min(pole)
        } else {
            pole
        }
    }
}

/// Falling-factorial moment generating function ξ ↦ P(1 + ξ).
#[derive(Debug, Clone, PartialEq)]
pub struct FallingFactorialMgf<P>(pub P);

/// Rising-factorial generating function ξ ↦ (1−ξ)^{−M} P(1/(1−ξ)).
#[derive(Debug, Clone, PartialEq)]
pub struct RisingFactorialMgf<P> {
    pub inner: P,
    pub m_modes: f64,
}

pub fn factorial_mgf_relations<P: Pgf + Clone>(pgf: P, m_modes: f64) -> (FallingFactorialMgf<P>, RisingFactorialMgf<P>) {
    (FallingFactorialMgf(pgf.clone()), RisingFactorialMgf { inner: pgf, m_modes })
}

impl<P: Pgf> Pgf for FallingFactorialMgf<P> {
    fn eval(&self, xi: f64) -> Result<f64> {
        self.check(xi)?;
        self.0.eval(1.0 + xi)
    }

    fn domain_radius(&self) -> f64 {
        (self.0.domain_radius() - 1.0).max(0.0)
    }
}

impl<P: Pgf> Pgf for RisingFactorialMgf<P> {
    fn eval(&self, xi: f64) -> Result<f64> {
        self.check(xi)?;
        Ok((1.0 - xi).powf(-self.m_modes) * self.inner.eval(1.0 / (1.0 - xi))?)
    }

    fn domain_radius(&self) -> f64 {
        (1.0 - 1.0 / self.inner.domain_radius()).max(0.0)
    }
}

fn willie_map(p: &ScenarioParams) -> (f64, f64) {
    let g = p.eta * p.n_b + 1.0;
    (g, (1.0 - p.eta) / g)
}

/// Willie's pgf at ξ given Alice's probe pgf: the L_{1−η, N_B} transform.
pub fn willie_pgf_from_probe<P: Pgf>(probe_pgf: P, p: &ScenarioParams, xi: f64) -> Result<f64> {
    pgf_through_thermal_loss(probe_pgf, 1.0 - p.eta, p.n_b, p.m())?.eval(xi)
}

/// Inverse map: the probe pgf at y recovered from Willie's pgf.
pub fn probe_pgf_from_willie<P: Pgf>(willie_pgf: P, p: &ScenarioParams, y: f64) -> Result<f64> {
    let (g, kt) = willie_map(p);
    let c = (y - 1.0 + kt) / kt;
    let xi = c * g / (1.0 + c * (g - 1.0));
    let d = g - xi * (g - 1.0);
    if !(d > 0.0) {
        return Err(Error::PgfDomain { xi, radius: willie_pgf.domain_radius() });
    }
    Ok(d.powf(p.m()) * willie_pgf.eval(xi)?)
}
