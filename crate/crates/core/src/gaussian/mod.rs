//! Gaussian states, thermal-loss channel action and Chernoff quantities.
//!
//! Quadratures are ordered (q₁..qₙ, p₁..pₙ) with vacuum variance 1/2.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::numerics::{minimize_scalar, SolverConfig};
use crate::scenario::ScenarioParams;

pub mod fock;

pub use fock::{fock_from_channel, helstrom_error, q_s_fock_oracle, FockDensity, FockSpectra};

const PHYSICAL_SLACK: f64 = 1e-10;
const S_EDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: Vec<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidParameter("mean length must be a positive even number"));
        }
        if cov.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: cov.len() });
        }
        let cov = DMatrix::from_row_slice(dim, dim, &cov);
        Self::from_parts(mean, cov)
    }

    fn from_parts(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        for i in 0..dim {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("covariance is not symmetric"));
                }
            }
        }
        let state = GaussianState { n_modes: dim / 2, mean, cov };
        let nu_min = state.symplectic_eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min);
        if nu_min < 0.5 - PHYSICAL_SLACK {
            return Err(Error::InvalidState(nu_min));
        }
        Ok(state)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[(i, j)]
    }

    pub fn cov_matrix(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Symplectic spectrum ν₁ ≤ … ≤ νₙ.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let (_, nu, _) = williamson(&self.cov)?;
        Ok(nu.iter().step_by(2).copied().collect())
    }

    /// Mean photon number of each mode.
    pub fn mean_photons(&self) -> Vec<f64> {
        let n = self.n_modes;
        (0..n)
            .map(|j| {
                let (q, p) = (self.mean[j], self.mean[j + n]);
                0.5 * (self.cov[(j, j)] + self.cov[(j + n, j + n)] - 1.0) + 0.5 * (q * q + p * p)
            })
            .collect()
    }

    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.n_modes, other.n_modes);
        let n = a + b;
        let mut mean = vec![0.0; 2 * n];
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        let place = |k: usize, m: usize, off: usize, tot: usize| if k < m { k + off } else { k - m + off + tot };
        for (src, m, off) in [(self, a, 0), (other, b, a)] {
            for i in 0..2 * m {
                let gi = place(i, m, off, n);
                mean[gi] = src.mean[i];
                for j in 0..2 * m {
                    cov[(gi, place(j, m, off, n))] = src.cov[(i, j)];
                }
            }
        }
        GaussianState { n_modes: n, mean, cov }
    }

    /// Thermal-loss channel of transmissivity κ and environment brightness N on one mode.
    pub fn thermal_loss(&self, mode: usize, kappa: f64, n_env: f64) -> Result<GaussianState> {
        if mode >= self.n_modes {
            return Err(Error::InvalidParameter("mode index out of range"));
        }
        if !(0.0..=1.0).contains(&kappa) {
            return Err(domain("kappa", kappa));
        }
        if !(n_env >= 0.0) {
            return Err(domain("n_env", n_env));
        }
        let n = self.n_modes;
        let dim = 2 * n;
        let mut x = DMatrix::identity(dim, dim);
        let rk = kappa.sqrt();
        x[(mode, mode)] = rk;
        x[(mode + n, mode + n)] = rk;
        let mut cov = &x * &self.cov * x.transpose();
        let added = (1.0 - kappa) * (n_env + 0.5);
        cov[(mode, mode)] += added;
        cov[(mode + n, mode + n)] += added;
        let mut mean = self.mean.clone();
        mean[mode] *= rk;
        mean[mode + n] *= rk;
        Ok(GaussianState { n_modes: n, mean, cov })
    }
}

pub fn thermal_state(n_mean: f64, n_modes: usize) -> GaussianState {
    let dim = 2 * n_modes;
    GaussianState {
        n_modes,
        mean: vec![0.0; dim],
        cov: DMatrix::identity(dim, dim) * (n_mean + 0.5),
    }
}

pub fn displaced_thermal(alpha_re: f64, alpha_im: f64, n_mean: f64) -> GaussianState {
    let mut st = thermal_state(n_mean, 1);
    st.mean = vec![2f64.sqrt() * alpha_re, 2f64.sqrt() * alpha_im];
    st
}

pub fn coherent_state(alpha_re: f64, alpha_im: f64) -> GaussianState {
    displaced_thermal(alpha_re, alpha_im, 0.0)
}

/// Two-mode squeezed vacuum, mode order (signal, idler).
pub fn tmsv_state(n_s: f64) -> GaussianState {
    let s = n_s + 0.5;
    let c = (n_s * (n_s + 1.0)).sqrt();
    #[rustfmt::skip]
    let cov = DMatrix::from_row_slice(4, 4, &[
        s, c, 0.0, 0.0,
        c, s, 0.0, 0.0,
        0.0, 0.0, s, -c,
        0.0, 0.0, -c, s,
    ]);
    GaussianState { n_modes: 2, mean: vec![0.0; 4], cov }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe {
    /// Signal half sent to the target, idler retained.
    Tmsv { n_s: f64 },
    Coherent { re: f64, im: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Absent,
    Present,
}

impl Hypothesis {
    pub fn reflectivity(self, eta: f64) -> f64 {
        match self {
            Hypothesis::Absent => 0.0,
            Hypothesis::Present => eta,
        }
    }
}

/// State held by Alice after the return: (return, idler) for TMSV, return only for coherent probes.
pub fn alice_received(probe: &Probe, h: Hypothesis, p: &ScenarioParams) -> Result<GaussianState> {
    let input = match *probe {
        Probe::Tmsv { n_s } => {
            if !(n_s >= 0.0) {
                return Err(domain("n_s", n_s));
            }
            tmsv_state(n_s)
        }
        Probe::Coherent { re, im } => coherent_state(re, im),
    };
    input.thermal_loss(0, h.reflectivity(p.eta), p.n_b)
}

// G_p(x) and Λ_p(x) in the vacuum-variance-1 convention, x ≥ 1.
fn ln_g_and_lambda(x: f64, p: f64) -> (f64, f64) {
    let x = x.max(1.0);
    let r = (x - 1.0) / (x + 1.0);
    let rp = (p * r.ln()).exp();
    let one_minus = -(p * r.ln()).exp_m1();
    let ln_g = p * 2f64.ln() - p * (x + 1.0).ln() - one_minus.ln();
    (ln_g, (1.0 + rp) / one_minus)
}

// (√V, symplectic eigenvalues each listed twice in ascending order, eigenvectors of √V Ωᵀ V Ω √V)
fn williamson(v: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let dim = v.nrows();
    let n = dim / 2;
    let eig = SymmetricEigen::new(v.clone());
    if eig.eigenvalues.iter().any(|&w| !(w > 0.0)) {
        let w = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::InvalidState(w.max(0.0).sqrt()));
    }
    let sq = DVector::from_iterator(dim, eig.eigenvalues.iter().map(|w| w.sqrt()));
    let vh = &eig.eigenvectors * DMatrix::from_diagonal(&sq) * eig.eigenvectors.transpose();
    let mut omega = DMatrix::zeros(dim, dim);
    for k in 0..n {
        omega[(k, k + n)] = 1.0;
        omega[(k + n, k)] = -1.0;
    }
    let inner = omega.transpose() * v * &omega;
    let mut w = &vh * inner * &vh;
    w = (&w + w.transpose()) * 0.5;
    let we = SymmetricEigen::new(w);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| we.eigenvalues[a].total_cmp(&we.eigenvalues[b]));
    let nu: Vec<f64> = order.iter().map(|&i| we.eigenvalues[i].max(0.0).sqrt()).collect();
    let u = DMatrix::from_fn(dim, dim, |r, c| we.eigenvectors[(r, order[c])]);
    Ok((vh, nu, u))
}

// V_p = S Λ_p(D) Sᵀ and ln ∏ G_p(ν_k), in the vacuum-variance-1 convention.
fn power_covariance(v: &DMatrix<f64>, p: f64) -> Result<(DMatrix<f64>, f64)> {
    if v.nrows() == 2 {
        let det = v[(0, 0)] * v[(1, 1)] - v[(0, 1)] * v[(1, 0)];
        if !(det > 0.0) {
            return Err(Error::InvalidState(0.0));
        }
        let nu = det.sqrt();
        let (ln_g, lam) = ln_g_and_lambda(nu, p);
        return Ok((v * (lam / nu.max(1.0)), ln_g));
    }
    let (vh, nu, u) = williamson(v)?;
    let mut ln_g = 0.0;
    let k = DVector::from_iterator(
        nu.len(),
        nu.iter().map(|&x| {
            let (lg, lam) = ln_g_and_lambda(x, p);
            ln_g += 0.5 * lg;
            lam / x.max(1.0)
        }),
    );
    let vp = &vh * &u * DMatrix::from_diagonal(&k) * u.transpose() * &vh;
    Ok(((&vp + vp.transpose()) * 0.5, ln_g))
}

/// Tr ρ₀^s ρ₁^{1−s} for Gaussian states.
pub fn q_s_gaussian(rho0: &GaussianState, rho1: &GaussianState, s: f64) -> Result<f64> {
    if rho0.n_modes != rho1.n_modes {
        return Err(Error::DimensionMismatch { expected: rho0.n_modes, got: rho1.n_modes });
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(domain("s", s));
    }
    let s = s.clamp(S_EDGE, 1.0 - S_EDGE);
    let n = rho0.n_modes;
    let v0 = &rho0.cov * 2.0;
    let v1 = &rho1.cov * 2.0;
    let (a, ln_ga) = power_covariance(&v0, s)?;
    let (b, ln_gb) = power_covariance(&v1, 1.0 - s)?;
    let sigma = a + b;
    let chol = sigma.cholesky().ok_or(Error::Numerical("Σ not positive definite"))?;
    let ln_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let d = DVector::from_iterator(
        2 * n,
        rho0.mean.iter().zip(&rho1.mean).map(|(x, y)| 2f64.sqrt() * (x - y)),
    );
    let quad = d.dot(&chol.solve(&d));
    let ln_q = n as f64 * 2f64.ln() + ln_ga + ln_gb - 0.5 * ln_det - 0.5 * quad;
    let q = ln_q.exp();
    if !q.is_finite() {
        return Err(Error::Numerical("non-finite Q_s"));
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chernoff {
    pub chi: f64,
    pub s_star: f64,
    pub q_min: f64,
}

/// −ln min_s Q_s and its minimiser.
pub fn chernoff_exponent_per_mode(rho0: &GaussianState, rho1: &GaussianState) -> Result<Chernoff> {
    let cfg = SolverConfig { abs_tol: 1e-7, ..SolverConfig::default() };
    let mut err = None;
    let m = minimize_scalar(
        |s| match q_s_gaussian(rho0, rho1, s) {
            Ok(q) => q,
            Err(e) => {
                err = Some(e);
                f64::INFINITY
            }
        },
        0.0,
        1.0,
        &cfg,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(Chernoff { chi: (-m.fx.ln()).max(0.0), s_star: m.x, q_min: m.fx.min(1.0) })
}

/// −ln Q_{1/2}.
pub fn bhattacharyya_exponent(rho0: &GaussianState, rho1: &GaussianState) -> Result<f64> {
    Ok((-q_s_gaussian(rho0, rho1, 0.5)?.ln()).max(0.0))
}
