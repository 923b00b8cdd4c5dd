//! KKT extremisations under the ε-covertness constraint.
//!
//! Both problems reduce to q_n ∝ p_n / d_n² on Willie's photon-number
//! support, with d_n affine in the second multiplier. Normalisation fixes
//! the first multiplier, and the active covertness constraint is a scalar
//! root in the second.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::bounds::{covert_threshold, universal_terms};
use crate::error::{Error, Result};
use crate::numerics::{bisect, solve_2d, LogSum, SolverConfig};
use crate::photon_stats::{NegBinomial, PhotonPmf};
use crate::scenario::ScenarioParams;

pub const KKT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KktStatus {
    /// Interior stationary point with the constraint active.
    Interior,
    /// ε = 0: the matched thermal law is the only feasible point.
    Matched,
    /// Infimum approached by sending `escape_mass` to n → ∞.
    Escape,
    /// Threshold 0, the constraint is vacuous and the infimum is 0.
    Vacuous,
    /// Residuals above tolerance.
    Flagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    /// max(0, −mult1).
    pub dual: f64,
    pub slackness: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual).max(self.slackness)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub mult1: f64,
    pub mult2: f64,
    pub q_star: PhotonPmf,
    pub objective: f64,
    pub residual: f64,
    pub residuals: KktResiduals,
    pub renorm: f64,
    pub converged: bool,
    pub status: KktStatus,
    pub escape_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLimits {
    pub ns_min: f64,
    pub ns_max: f64,
    pub min: Option<KktSolution>,
    pub max: Option<KktSolution>,
}

impl EnergyLimits {
    pub fn converged(&self) -> bool {
        self.min.as_ref().is_none_or(|s| s.converged) && self.max.as_ref().is_none_or(|s| s.converged)
    }
}

/// Willie's thermal law on a fixed window, with ln d_n supplied per solve.
struct Support {
    lo: usize,
    lp: Vec<f64>,
}

struct Sums {
    /// ln Σ p/d
    s1: f64,
    /// ln Σ p/d²
    s2: f64,
}

impl Support {
    fn new(n_b: f64, m: u64, extra: Option<f64>) -> Result<Self> {
        let nb = NegBinomial::new(n_b, m)?;
        let (mut lo, mut hi) = nb.window();
        if let Some(n2) = extra {
            let (a, b) = NegBinomial::new(n2, m)?.window();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        let mut lp = nb.ln_pmf_range(lo, hi);
        let z: LogSum = lp.iter().copied().collect();
        let z = z.ln();
        for w in &mut lp {
            *w -= z;
        }
        Ok(Support { lo, lp })
    }

    fn hi(&self) -> usize {
        self.lo + self.lp.len()
    }

    fn sums(&self, ln_d: &[f64]) -> Sums {
        let s1: LogSum = self.lp.iter().zip(ln_d).map(|(p, d)| p - d).collect();
        let s2: LogSum = self.lp.iter().zip(ln_d).map(|(p, d)| p - 2.0 * d).collect();
        Sums { s1: s1.ln(), s2: s2.ln() }
    }

    /// ln of Σ √(p q) for q ∝ p/d².
    fn ln_lhs(&self, ln_d: &[f64]) -> f64 {
        let s = self.sums(ln_d);
        s.s1 - 0.5 * s.s2
    }

    fn q_star(&self, ln_d: &[f64]) -> Result<(PhotonPmf, f64)> {
        let lw: Vec<f64> = self.lp.iter().zip(ln_d).map(|(p, d)| p - 2.0 * d).collect();
        let z: LogSum = lw.iter().copied().collect();
        let z = z.ln();
        Ok((PhotonPmf::normalized(self.lo, lw)?, z))
    }

    /// Stationarity, primal and slackness residuals of the stored q.
    fn residuals(&self, q: &PhotonPmf, ln_d: &[f64], mult1: f64, scale: f64, t: f64) -> KktResiduals {
        let mut stat: f64 = 0.0;
        let mut total = 0.0;
        let mut bc = LogSum::new();
        for (i, (n, lq)) in q.iter().enumerate() {
            let formula = (2.0 * (0.5 * mult1).ln() + self.lp[i] - 2.0 * ln_d[i]).exp();
            stat = stat.max((lq.exp() - formula).abs());
            total += lq.exp();
            bc.add(0.5 * (lq + self.lp[n - self.lo]));
        }
        KktResiduals {
            stationarity: stat,
            primal: (total - 1.0).abs(),
            dual: (-mult1).max(0.0),
            slackness: (scale * bc.ln().exp() - t).abs(),
        }
    }
}

fn energy_ln_d(sup: &Support, mult2: f64) -> Vec<f64> {
    (0..sup.lp.len()).map(|i| ((sup.lo + i) as f64 - mult2).abs().ln()).collect()
}

fn branch_edge(sup: &Support, branch: Branch) -> f64 {
    match branch {
        Branch::Max => (sup.hi() - 1) as f64,
        Branch::Min => sup.lo as f64,
    }
}

fn signed(branch: Branch, edge: f64, dist: f64) -> f64 {
    match branch {
        Branch::Max => edge + dist,
        Branch::Min => edge - dist,
    }
}

/// Root of ln LHS(mult2) = ln t along the branch, parameterised by ln distance from the support edge.
fn energy_root(sup: &Support, branch: Branch, t: f64, guess_dist: f64) -> Result<f64> {
    let edge = branch_edge(sup, branch);
    let phi = |u: f64| sup.ln_lhs(&energy_ln_d(sup, signed(branch, edge, u.exp()))) - t.ln();
    let u0 = guess_dist.max(1e-9).ln();
    let (mut a, mut b) = (u0 - 0.5, u0 + 0.5);
    let mut k = 0;
    while phi(a) > 0.0 {
        a -= 1.0 + k as f64;
        k += 1;
        if a < -40.0 {
            return Err(Error::Bracket("covertness boundary reached at the support edge"));
        }
    }
    k = 0;
    while phi(b) < 0.0 {
        b += 1.0 + k as f64;
        k += 1;
        if b > 200.0 {
            return Err(Error::Bracket("covertness boundary beyond reach"));
        }
    }
    let u = bisect(phi, a, b, &SolverConfig::default())?;
    Ok(signed(branch, edge, u.exp()))
}

/// Starting multipliers by stepping ε geometrically down from a loose constraint.
pub fn continuation_initializer(p: &ScenarioParams, branch: Branch) -> Result<(f64, f64)> {
    p.validate()?;
    let sup = Support::new(p.n_b, p.m_modes, None)?;
    let (m2, _) = continuation_path(&sup, p, branch)?;
    let ln_d = energy_ln_d(&sup, m2);
    let s = sup.sums(&ln_d);
    Ok(((2.0 * (-0.5 * s.s2).exp()), m2))
}

fn continuation_path(sup: &Support, p: &ScenarioParams, branch: Branch) -> Result<(f64, usize)> {
    let loose = 0.25 * p.prior0.min(p.prior1) / 0.5;
    let edge = branch_edge(sup, branch);
    let sd = (p.m() * p.n_b * (p.n_b + 1.0)).sqrt().max(1.0);
    let steps = if p.epsilon >= loose { 0 } else { ((loose / p.epsilon).log10() * 4.0).ceil() as usize };
    let mut dist = sd;
    let mut m2 = edge;
    for k in 0..=steps {
        let eps = if steps == 0 { p.epsilon } else { loose * (p.epsilon / loose).powf(k as f64 / steps as f64) };
        let t = covert_threshold(&p.with_epsilon(eps)?);
        m2 = energy_root(sup, branch, t, dist)?;
        dist = (m2 - edge).abs();
    }
    Ok((m2, steps))
}

/// Extremal Willie energy on one branch, polished by Newton on the two KKT equations.
pub fn extremal_energy(p: &ScenarioParams, branch: Branch) -> Result<(f64, KktSolution)> {
    p.validate()?;
    let t = covert_threshold(p);
    let sup = Support::new(p.n_b, p.m_modes, None)?;
    if p.epsilon == 0.0 || t >= 1.0 {
        let q = NegBinomial::new(p.n_b, p.m_modes)?.to_pmf();
        let sol = KktSolution {
            mult1: 2.0,
            mult2: match branch {
                Branch::Max => f64::INFINITY,
                Branch::Min => f64::NEG_INFINITY,
            },
            objective: q.mean(),
            q_star: q,
            residual: 0.0,
            residuals: KktResiduals::default(),
            renorm: 1.0,
            converged: true,
            status: KktStatus::Matched,
            escape_mass: 0.0,
        };
        return Ok((p.n_b, sol));
    }
    let (m2, _) = continuation_path(&sup, p, branch)?;
    let (mut mult1, mut mult2) = {
        let s = sup.sums(&energy_ln_d(&sup, m2));
        (2.0 * (-0.5 * s.s2).exp(), m2)
    };
    let edge = branch_edge(&sup, branch);
    let valid = |m2: f64| match branch {
        Branch::Max => m2 > edge,
        Branch::Min => m2 < edge,
    };
    let system = |x: [f64; 2]| {
        if !valid(x[1]) {
            return [f64::NAN, f64::NAN];
        }
        let s = sup.sums(&energy_ln_d(&sup, x[1]));
        [0.25 * x[0] * x[0] * s.s2.exp() - 1.0, 0.5 * x[0] * s.s1.exp() - t]
    };
    let before = {
        let r = system([mult1, mult2]);
        r[0].abs().max(r[1].abs())
    };
    let polish = solve_2d(system, [mult1, mult2], &SolverConfig { max_iter: 20, ..SolverConfig::default() });
    let after = polish.residual;
    if after.is_finite() && after < before && valid(polish.root[1]) {
        mult1 = polish.root[0];
        mult2 = polish.root[1];
    }
    let ln_d = energy_ln_d(&sup, mult2);
    let (q, ln_renorm) = sup.q_star(&ln_d)?;
    let mult1_norm = 2.0 * (-0.5 * ln_renorm).exp();
    let res = sup.residuals(&q, &ln_d, mult1_norm, 1.0, t);
    let converged = res.max() < KKT_TOL;
    let e_w = q.mean();
    let ns = (e_w - p.m() * p.eta * p.n_b) / ((1.0 - p.eta) * p.m());
    let sol = KktSolution {
        mult1: mult1_norm,
        mult2,
        objective: e_w,
        q_star: q,
        residual: res.max(),
        residuals: res,
        renorm: (ln_renorm + 2.0 * (0.5 * mult1).ln()).exp(),
        converged,
        status: if converged { KktStatus::Interior } else { KktStatus::Flagged },
        escape_mass: 0.0,
    };
    Ok((ns, sol))
}

/// Smallest and largest per-mode probe energies compatible with ε-covertness.
pub fn energy_limits(p: &ScenarioParams) -> Result<EnergyLimits> {
    let (ns_min, lo) = extremal_energy(p, Branch::Min)?;
    let (ns_max, hi) = extremal_energy(p, Branch::Max)?;
    Ok(EnergyLimits { ns_min, ns_max, min: Some(lo), max: Some(hi) })
}

/// Minimal received-state fidelity bound over ε-covert Willie distributions.
pub fn min_fidelity_numeric(p: &ScenarioParams) -> Result<KktSolution> {
    p.validate()?;
    let u = universal_terms(p.eta, p.n_b)?;
    if !(u.x > 0.0 && u.x < 1.0) {
        return Err(Error::Domain { what: "x", value: u.x });
    }
    let t = covert_threshold(p);
    let ln_a = p.m() * (u.nu * u.mu).ln();
    let lx = u.x.ln();
    let r = p.n_b / (p.n_b + 1.0) / (u.x * u.x);
    if p.n_b > 0.0 && r >= 1.0 {
        return Err(Error::Domain { what: "tilted ratio", value: r });
    }
    let tilt = if p.n_b > 0.0 { Some(r / (1.0 - r)) } else { None };
    let sup = Support::new(p.n_b, p.m_modes, tilt)?;
    let ln_d = |ln_l2: f64| -> Vec<f64> {
        (0..sup.lp.len())
            .map(|i| {
                let a = (sup.lo + i) as f64 * lx;
                let (hi, lo) = if a > ln_l2 { (a, ln_l2) } else { (ln_l2, a) };
                ln_a + hi + (lo - hi).exp().ln_1p()
            })
            .collect()
    };
    let objective_of = |q: &PhotonPmf, keep: f64| -> f64 {
        let s: LogSum = q.iter().map(|(n, w)| w + n as f64 * lx).collect();
        keep * (ln_a + s.ln()).exp()
    };

    if t <= 0.0 {
        let q = PhotonPmf::normalized(sup.lo, sup.lp.clone())?;
        return Ok(KktSolution {
            mult1: 0.0,
            mult2: 0.0,
            q_star: q,
            objective: 0.0,
            residual: 0.0,
            residuals: KktResiduals::default(),
            renorm: 1.0,
            converged: false,
            status: KktStatus::Vacuous,
            escape_mass: 1.0,
        });
    }
    if t >= 1.0 {
        let q = PhotonPmf::normalized(sup.lo, sup.lp.clone())?;
        let obj = objective_of(&q, 1.0);
        return Ok(KktSolution {
            mult1: 2.0,
            mult2: f64::INFINITY,
            q_star: q,
            objective: obj,
            residual: 0.0,
            residuals: KktResiduals::default(),
            renorm: 1.0,
            converged: true,
            status: KktStatus::Matched,
            escape_mass: 0.0,
        });
    }

    let full = ln_d(f64::NEG_INFINITY);
    let ln_bc_full = sup.ln_lhs(&full);
    if ln_bc_full >= t.ln() {
        let keep = (2.0 * (t.ln() - ln_bc_full)).exp();
        let (q, ln_renorm) = sup.q_star(&full)?;
        let mult1 = 2.0 * (-0.5 * ln_renorm).exp();
        let res = sup.residuals(&q, &full, mult1, keep.sqrt(), t);
        let converged = res.max() < KKT_TOL;
        return Ok(KktSolution {
            mult1: mult1 * keep.sqrt(),
            mult2: 0.0,
            objective: objective_of(&q, keep),
            q_star: q,
            residual: res.max(),
            residuals: res,
            renorm: 1.0,
            converged,
            status: if converged { KktStatus::Escape } else { KktStatus::Flagged },
            escape_mass: 1.0 - keep,
        });
    }

    let phi = |v: f64| sup.ln_lhs(&ln_d(v)) - t.ln();
    let (mut a, mut b) = (-1.0, 1.0);
    let mut k = 0.0;
    while phi(a) > 0.0 {
        k += 1.0;
        a -= 2.0 * k;
        if a < -2000.0 {
            return Err(Error::Bracket("min-fidelity multiplier below range"));
        }
    }
    k = 0.0;
    while phi(b) < 0.0 {
        k += 1.0;
        b += 2.0 * k;
        if b > 2000.0 {
            return Err(Error::Bracket("min-fidelity multiplier above range"));
        }
    }
    let v = bisect(phi, a, b, &SolverConfig::default())?;
    let d = ln_d(v);
    let (q, ln_renorm) = sup.q_star(&d)?;
    let mult1 = 2.0 * (-0.5 * ln_renorm).exp();
    let res = sup.residuals(&q, &d, mult1, 1.0, t);
    let converged = res.max() < KKT_TOL;
    Ok(KktSolution {
        mult1,
        mult2: (ln_a + v).exp(),
        objective: objective_of(&q, 1.0),
        q_star: q,
        residual: res.max(),
        residuals: res,
        renorm: 1.0,
        converged,
        status: if converged { KktStatus::Interior } else { KktStatus::Flagged },
        escape_mass: 0.0,
    })
}
