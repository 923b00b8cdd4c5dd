//! Special functions, stable summation, quadrature and small solvers.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};

/// A non-negative weight stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogWeight(pub f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn from_value(w: f64) -> Self {
        LogWeight(w.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { abs_tol: 1e-12, rel_tol: 1e-10, max_iter: 200, damping: 1.0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("solver tolerances must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("log_gamma argument", x));
    }
    Ok(lgamma(x))
}

pub(crate) fn lgamma(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - lgamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * t.ln() - t + a.ln()
}

/// ln C(n, k).
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(domain("binomial lower index", k as f64));
    }
    Ok(ln_choose(n, k))
}

pub(crate) fn ln_choose(n: u64, k: u64) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    lgamma(n as f64 + 1.0) - (lgamma(k as f64 + 1.0) + lgamma((n - k) as f64 + 1.0))
}

/// ln Σ exp(t). Empty input gives −∞.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    let s: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + s.ln()
}

/// Streaming log-sum-exp.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum { max: f64::NEG_INFINITY, scaled: 0.0 }
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, t: f64) {
        if t == f64::NEG_INFINITY {
            return;
        }
        if t <= self.max {
            self.scaled += (t - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - t).exp() + 1.0;
            self.max = t;
        }
    }

    pub fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

impl FromIterator<f64> for LogSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = LogSum::new();
        for t in iter {
            acc.add(t);
        }
        acc
    }
}

/// Neumaier-compensated sum for signed series.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMin {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Golden-section search for the minimum of a unimodal function on [lo, hi].
pub fn minimize_scalar<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    cfg: &SolverConfig,
) -> Result<ScalarMin> {
    if !(lo < hi) {
        return Err(Error::InvalidParameter("minimize_scalar needs lo < hi"));
    }
    let inv_phi = (5.0.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iterations = 0;
    while b - a > cfg.abs_tol && iterations < cfg.max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let converged = b - a <= cfg.abs_tol;
    let (mut x, mut fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    for edge in [lo, hi] {
        let fe = f(edge);
        if fe <= fx {
            x = edge;
            fx = fe;
        }
    }
    Ok(ScalarMin { x, fx, iterations, converged })
}

/// Bisection on a sign-changing bracket.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, cfg: &SolverConfig) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.signum() != fb.signum()) {
        return Err(Error::Bracket("bisect"));
    }
    let neg_low = fa < 0.0;
    for _ in 0..cfg.max_iter.max(400) {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == neg_low {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    pub x: [f64; 2],
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solve2d {
    pub root: [f64; 2],
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub singular: bool,
    pub trace: Vec<Iterate>,
}

fn norm_inf(v: [f64; 2]) -> f64 {
    let n = v[0].abs().max(v[1].abs());
    if v[0].is_finite() && v[1].is_finite() {
        n
    } else {
        f64::INFINITY
    }
}

fn fd_column<F: FnMut([f64; 2]) -> [f64; 2]>(f: &mut F, x: [f64; 2], fx: [f64; 2], j: usize) -> Option<[f64; 2]> {
    let h = 1e-7f64.max(1e-7 * x[j].abs());
    let mut xp = x;
    let mut xm = x;
    xp[j] += h;
    xm[j] -= h;
    let fp = f(xp);
    let fm = f(xm);
    let ok = |v: [f64; 2]| v[0].is_finite() && v[1].is_finite();
    match (ok(fp), ok(fm)) {
        (true, true) => Some([(fp[0] - fm[0]) / (2.0 * h), (fp[1] - fm[1]) / (2.0 * h)]),
        (true, false) => Some([(fp[0] - fx[0]) / h, (fp[1] - fx[1]) / h]),
        (false, true) => Some([(fx[0] - fm[0]) / h, (fx[1] - fm[1]) / h]),
        (false, false) => None,
    }
}

/// Damped Newton iteration with a central-difference Jacobian.
///
/// Non-finite residuals are treated as infeasible and the step is halved.
pub fn solve_2d<F: FnMut([f64; 2]) -> [f64; 2]>(mut f: F, x0: [f64; 2], cfg: &SolverConfig) -> Solve2d {
    let mut x = x0;
    let mut fx = f(x);
    let mut r = norm_inf(fx);
    let mut trace = vec![Iterate { x, residual: r, step: 0.0 }];
    let mut singular = false;
    let mut iterations = 0;
    while r > cfg.abs_tol && iterations < cfg.max_iter {
        iterations += 1;
        let (c0, c1) = match (fd_column(&mut f, x, fx, 0), fd_column(&mut f, x, fx, 1)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                singular = true;
                break;
            }
        };
        let det = c0[0] * c1[1] - c1[0] * c0[1];
        let scale = (c0[0] * c1[1]).abs() + (c1[0] * c0[1]).abs();
        if !det.is_finite() || det.abs() <= 1e-14 * scale || scale == 0.0 {
            singular = true;
            break;
        }
        let dx = [
            -(c1[1] * fx[0] - c1[0] * fx[1]) / det,
            -(-c0[1] * fx[0] + c0[0] * fx[1]) / det,
        ];
        let mut lambda = cfg.damping;
        let mut accepted = false;
        for _ in 0..60 {
            let xn = [x[0] + lambda * dx[0], x[1] + lambda * dx[1]];
            let fxn = f(xn);
            let rn = norm_inf(fxn);
            if rn < r {
                x = xn;
                fx = fxn;
                r = rn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        trace.push(Iterate { x, residual: r, step: if accepted { lambda } else { 0.0 } });
        if !accepted {
            break;
        }
    }
    Solve2d { root: x, residual: r, iterations, converged: r <= cfg.abs_tol, singular, trace }
}

/// Nodes and weights of the n-point Gauss-Laguerre rule (weight e^{-u}).
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64).collect();
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { (i + 1) as f64 } else { 0.0 }).collect();
    let mut z = vec![0.0; n];
    if n > 0 {
        z[0] = 1.0;
    }
    tql_first_row(&mut d, &mut e, &mut z);
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

// Implicit QL on a symmetric tridiagonal matrix, carrying only the first
// row of the eigenvector matrix.
fn tql_first_row(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialIntegral {
    pub value: f64,
    pub nodes: usize,
    pub converged: bool,
}

/// ∫₀^∞ g(r) (2r/scale) exp(−r²/scale) dr by Gauss-Laguerre in u = r²/scale,
/// doubling the node count from 64 until successive values agree.
pub fn integrate_radial<G: FnMut(f64) -> f64>(mut g: G, scale: f64, cfg: &SolverConfig) -> Result<RadialIntegral> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(domain("radial scale", scale));
    }
    if scale == 0.0 {
        return Ok(RadialIntegral { value: g(0.0), nodes: 1, converged: true });
    }
    let rule = |n: usize, g: &mut G| {
        let (u, w) = gauss_laguerre(n);
        let mut acc = CompensatedSum::default();
        for (ui, wi) in u.iter().zip(&w) {
            if *wi > 0.0 {
                acc.add(wi * g((scale * ui).sqrt()));
            }
        }
        acc.value()
    };
    let mut n = 64;
    let mut prev = rule(n, &mut g);
    while n < 4096 {
        n *= 2;
        let cur = rule(n, &mut g);
        if (cur - prev).abs() <= cfg.rel_tol * cur.abs().max(cfg.abs_tol) {
            return Ok(RadialIntegral { value: cur, nodes: n, converged: true });
        }
        prev = cur;
    }
    Ok(RadialIntegral { value: prev, nodes: n, converged: false })
}
