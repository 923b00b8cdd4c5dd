//! Truncated Fock-space densities for one or two modes.
//!
//! Thermal loss L_{κ,N} is applied as the quantum-limited amplifier of gain
//! G = (1−κ)N + 1 after pure loss κ/G, each through its Kraus operators.
//! The basis index of |n₀, n₁⟩ is n₀·cutoff + n₁.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Complex, DMatrix, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;

use super::{Hypothesis, Probe};
use crate::error::{domain, Error, Result};
use crate::numerics::{lgamma, ln_choose};
use crate::scenario::ScenarioParams;

type C64 = Complex<f64>;

const CLAMP: f64 = 1e-14;
const ORACLE_TAIL: f64 = 1e-10;
const CHANNEL_TAIL: f64 = 1e-12;
const MAX_DIM: usize = 3000;

#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    cutoff: usize,
    n_modes: usize,
    matrix: DMatrix<C64>,
    tail_mass: f64,
}

impl FockDensity {
    pub fn from_matrix(matrix: DMatrix<C64>, cutoff: usize, n_modes: usize) -> Result<Self> {
        let dim = cutoff.pow(n_modes as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        for i in 0..dim {
            for j in 0..=i {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).norm_sqr() > 1e-24 {
                    return Err(Error::InvalidParameter("density matrix is not Hermitian"));
                }
            }
        }
        Ok(Self::wrap(matrix, cutoff, n_modes))
    }

    fn wrap(matrix: DMatrix<C64>, cutoff: usize, n_modes: usize) -> Self {
        let trace: f64 = (0..matrix.nrows()).map(|i| matrix[(i, i)].re).sum();
        FockDensity { cutoff, n_modes, matrix, tail_mass: (1.0 - trace).max(0.0) }
    }

    fn pure(amps: &[C64], cutoff: usize, n_modes: usize) -> Self {
        let dim = amps.len();
        let m = DMatrix::from_fn(dim, dim, |i, j| amps[i] * amps[j].conj());
        Self::wrap(m, cutoff, n_modes)
    }

    pub fn thermal(n_mean: f64, cutoff: usize) -> Self {
        let r = n_mean / (n_mean + 1.0);
        let diag: Vec<C64> = (0..cutoff)
            .map(|k| C64::new(if k == 0 { 1.0 } else { r.powi(k as i32) } / (n_mean + 1.0), 0.0))
            .collect();
        Self::wrap(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)), cutoff, 1)
    }

    pub fn coherent(re: f64, im: f64, cutoff: usize) -> Self {
        let alpha = C64::new(re, im);
        let n2 = alpha.norm_sqr();
        let amps: Vec<C64> = (0..cutoff)
            .map(|k| {
                if k == 0 {
                    return C64::new((-0.5 * n2).exp(), 0.0);
                }
                if n2 == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let mag = (-0.5 * n2 + 0.5 * k as f64 * n2.ln() - 0.5 * lgamma(k as f64 + 1.0)).exp();
                let phase = im.atan2(re) * k as f64;
                C64::new(mag * phase.cos(), mag * phase.sin())
            })
            .collect();
        Self::pure(&amps, cutoff, 1)
    }

    /// Two-mode squeezed vacuum with per-mode mean n_s.
    pub fn tmsv(n_s: f64, cutoff: usize) -> Self {
        let r = n_s / (n_s + 1.0);
        let mut amps = vec![C64::new(0.0, 0.0); cutoff * cutoff];
        for k in 0..cutoff {
            let p = if k == 0 { 1.0 } else { r.powi(k as i32) } / (n_s + 1.0);
            amps[k * cutoff + k] = C64::new(p.sqrt(), 0.0);
        }
        Self::pure(&amps, cutoff, 2)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn digits(&self, idx: usize) -> [usize; 2] {
        if self.n_modes == 1 {
            [idx, 0]
        } else {
            [idx / self.cutoff, idx % self.cutoff]
        }
    }

    fn index(&self, d: [usize; 2]) -> usize {
        if self.n_modes == 1 {
            d[0]
        } else {
            d[0] * self.cutoff + d[1]
        }
    }

    // K_shift acting on one mode: |n⟩ ↦ coeff(n) |n + shift⟩.
    fn apply_kraus(&self, mode: usize, shift: isize, coeff: &[f64], out: &mut DMatrix<C64>) {
        let dim = self.dim();
        let d = self.cutoff as isize;
        let target = |idx: usize| -> Option<(usize, f64)> {
            let mut dg = self.digits(idx);
            let n = dg[mode];
            let c = coeff[n];
            if c == 0.0 {
                return None;
            }
            let m = n as isize + shift;
            if m < 0 || m >= d {
                return None;
            }
            dg[mode] = m as usize;
            Some((self.index(dg), c))
        };
        let mapped: Vec<Option<(usize, f64)>> = (0..dim).map(target).collect();
        for j in 0..dim {
            let Some((tj, cj)) = mapped[j] else { continue };
            for i in 0..dim {
                let v = self.matrix[(i, j)];
                if v.re == 0.0 && v.im == 0.0 {
                    continue;
                }
                if let Some((ti, ci)) = mapped[i] {
                    out[(ti, tj)] += v * (ci * cj);
                }
            }
        }
    }

    pub fn pure_loss(&self, mode: usize, tau: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&tau) {
            return Err(domain("transmissivity", tau));
        }
        let dim = self.dim();
        let mut out = DMatrix::zeros(dim, dim);
        for l in 0..self.cutoff {
            let coeff: Vec<f64> = (0..self.cutoff)
                .map(|n| {
                    if n < l {
                        0.0
                    } else {
                        let lt = xlogy((n - l) as f64, tau) + xlogy(l as f64, 1.0 - tau);
                        (0.5 * (ln_choose(n as u64, l as u64) + lt)).exp()
                    }
                })
                .collect();
            self.apply_kraus(mode, -(l as isize), &coeff, &mut out);
        }
        Ok(Self::wrap(out, self.cutoff, self.n_modes))
    }

    /// Quantum-limited amplifier of gain g ≥ 1.
    pub fn amplify(&self, mode: usize, g: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(g >= 1.0) {
            return Err(domain("gain", g));
        }
        if g == 1.0 {
            return Ok(self.clone());
        }
        let dim = self.dim();
        let mut out = DMatrix::zeros(dim, dim);
        let y = (g - 1.0) / g;
        for k in 0..self.cutoff {
            let coeff: Vec<f64> = (0..self.cutoff)
                .map(|n| {
                    let lt = -g.ln() + k as f64 * y.ln() - n as f64 * g.ln();
                    (0.5 * (ln_choose((n + k) as u64, k as u64) + lt)).exp()
                })
                .collect();
            self.apply_kraus(mode, k as isize, &coeff, &mut out);
        }
        Ok(Self::wrap(out, self.cutoff, self.n_modes))
    }

    pub fn thermal_loss(&self, mode: usize, kappa: f64, n_env: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa) {
            return Err(domain("kappa", kappa));
        }
        let g = (1.0 - kappa) * n_env + 1.0;
        self.pure_loss(mode, kappa / g)?.amplify(mode, g)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            Err(Error::InvalidParameter("mode index out of range"))
        } else {
            Ok(())
        }
    }

    // Tr(ρ X) for X = product of ladder operators applied right to left.
    fn expect(&self, ops: &[(usize, bool)]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        'outer: for n in 0..self.dim() {
            let mut dg = self.digits(n);
            let mut c = 1.0;
            for &(mode, raise) in ops.iter().rev() {
                let k = dg[mode];
                if raise {
                    if k + 1 >= self.cutoff {
                        continue 'outer;
                    }
                    c *= ((k + 1) as f64).sqrt();
                    dg[mode] = k + 1;
                } else {
                    if k == 0 {
                        continue 'outer;
                    }
                    c *= (k as f64).sqrt();
                    dg[mode] = k - 1;
                }
            }
            acc += self.matrix[(n, self.index(dg))] * c;
        }
        acc
    }

    /// First and second quadrature moments (vacuum variance 1/2): mean and row-major covariance.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_modes;
        let dim = 2 * n;
        // ladder vector ξ = (a₁..aₙ, a₁†..aₙ†); r = T ξ
        let ladder = |x: usize| (x % n, x >= n);
        let s2 = 0.5f64.sqrt();
        let t = |r: usize, x: usize| -> C64 {
            let (mr, quad_p) = (r % n, r >= n);
            let (mx, raise) = ladder(x);
            if mr != mx {
                return C64::new(0.0, 0.0);
            }
            match (quad_p, raise) {
                (false, _) => C64::new(s2, 0.0),
                (true, false) => C64::new(0.0, -s2),
                (true, true) => C64::new(0.0, s2),
            }
        };
        let first: Vec<C64> = (0..dim).map(|x| self.expect(&[ladder(x)])).collect();
        let mut second = vec![C64::new(0.0, 0.0); dim * dim];
        for x in 0..dim {
            for y in 0..dim {
                second[x * dim + y] = self.expect(&[ladder(x), ladder(y)]);
            }
        }
        let mean: Vec<f64> = (0..dim)
            .map(|r| (0..dim).map(|x| t(r, x) * first[x]).fold(C64::new(0.0, 0.0), |a, b| a + b).re)
            .collect();
        let mut cov = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for x in 0..dim {
                    for y in 0..dim {
                        let sym = (second[x * dim + y] + second[y * dim + x]) * 0.5;
                        acc += t(a, x) * t(b, y) * sym;
                    }
                }
                cov[a * dim + b] = acc.re - mean[a] * mean[b];
            }
        }
        (mean, cov)
    }
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

fn probe_density(probe: &Probe, cutoff: usize) -> Result<FockDensity> {
    match *probe {
        Probe::Tmsv { n_s } => {
            if !(n_s >= 0.0) {
                return Err(domain("n_s", n_s));
            }
            Ok(FockDensity::tmsv(n_s, cutoff))
        }
        Probe::Coherent { re, im } => Ok(FockDensity::coherent(re, im, cutoff)),
    }
}

fn initial_cutoff(probe: &Probe, p: &ScenarioParams) -> usize {
    let n_probe = match *probe {
        Probe::Tmsv { n_s } => n_s,
        Probe::Coherent { re, im } => re * re + im * im,
    };
    let n = n_probe.max(p.n_b).max(0.05);
    let r = n / (n + 1.0);
    ((-(CHANNEL_TAIL.ln()) / -r.ln()).ceil() as usize + 2).clamp(4, 256)
}

/// Alice's truncated state under hypothesis h, growing the cutoff until the tail is below 1e-12.
pub fn fock_from_channel(probe: &Probe, h: Hypothesis, p: &ScenarioParams, cutoff: Option<usize>) -> Result<FockDensity> {
    let mut d = cutoff.unwrap_or_else(|| initial_cutoff(probe, p));
    loop {
        let modes = if matches!(probe, Probe::Tmsv { .. }) { 2 } else { 1 };
        if d.pow(modes) > MAX_DIM {
            return Err(Error::CutoffExceeded { cutoff: d });
        }
        let rho = probe_density(probe, d)?.thermal_loss(0, h.reflectivity(p.eta), p.n_b)?;
        if rho.tail_mass < CHANNEL_TAIL || cutoff.is_some() {
            return Ok(rho);
        }
        d += d / 4 + 1;
    }
}

struct Block {
    idx: Vec<usize>,
    vals0: Vec<f64>,
    vals1: Vec<f64>,
    overlap: DMatrix<f64>,
}

/// Eigendecompositions of a density pair, shared across many values of s.
pub struct FockSpectra {
    blocks: Vec<Block>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn sub(m: &DMatrix<C64>, idx: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn check_pair(rho0: &FockDensity, rho1: &FockDensity) -> Result<()> {
    if rho0.dim() != rho1.dim() || rho0.n_modes != rho1.n_modes {
        return Err(Error::DimensionMismatch { expected: rho0.dim(), got: rho1.dim() });
    }
    for r in [rho0, rho1] {
        if r.tail_mass >= ORACLE_TAIL {
            return Err(Error::TailTooLarge { tail: r.tail_mass, bound: ORACLE_TAIL });
        }
    }
    Ok(())
}

// Connected components of the joint sparsity pattern.
fn components(rho0: &FockDensity, rho1: &FockDensity) -> Vec<Vec<usize>> {
    let dim = rho0.dim();
    let mut parent: Vec<usize> = (0..dim).collect();
    for i in 0..dim {
        for j in 0..i {
            let nz = |m: &DMatrix<C64>| {
                let v = m[(i, j)];
                v.re != 0.0 || v.im != 0.0
            };
            if nz(&rho0.matrix) || nz(&rho1.matrix) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; dim];
    for i in 0..dim {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

impl FockSpectra {
    pub fn new(rho0: &FockDensity, rho1: &FockDensity) -> Result<Self> {
        check_pair(rho0, rho1)?;
        let blocks = components(rho0, rho1)
            .into_iter()
            .map(|idx| {
                let e0 = SymmetricEigen::new(sub(&rho0.matrix, &idx));
                let e1 = SymmetricEigen::new(sub(&rho1.matrix, &idx));
                let o = e0.eigenvectors.adjoint() * &e1.eigenvectors;
                let floor = if idx.len() == 1 { 0.0 } else { CLAMP };
                let clamp = |v: &nalgebra::DVector<f64>| v.iter().map(|&x| if x < floor { 0.0 } else { x }).collect();
                Block {
                    vals0: clamp(&e0.eigenvalues),
                    vals1: clamp(&e1.eigenvalues),
                    overlap: o.map(|c| c.norm_sqr()),
                    idx,
                }
            })
            .collect();
        Ok(FockSpectra { blocks })
    }

    /// Tr ρ₀^s ρ₁^{1−s}; s ∈ {0, 1} uses support projectors.
    pub fn q_s(&self, s: f64) -> f64 {
        let pow = |x: f64, e: f64| if x == 0.0 { 0.0 } else if e == 0.0 { 1.0 } else { x.powf(e) };
        let mut total = 0.0;
        for b in &self.blocks {
            let a: Vec<f64> = b.vals0.iter().map(|&x| pow(x, s)).collect();
            let c: Vec<f64> = b.vals1.iter().map(|&x| pow(x, 1.0 - s)).collect();
            for i in 0..a.len() {
                if a[i] == 0.0 {
                    continue;
                }
                for j in 0..c.len() {
                    total += a[i] * c[j] * b.overlap[(i, j)];
                }
            }
        }
        total
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.idx.len()).collect()
    }
}

pub fn q_s_fock_oracle(rho0: &FockDensity, rho1: &FockDensity, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(domain("s", s));
    }
    Ok(FockSpectra::new(rho0, rho1)?.q_s(s))
}

/// Minimum error probability ½(1 − ‖λ₀ρ₀ − λ₁ρ₁‖₁) for a single copy.
pub fn helstrom_error(rho0: &FockDensity, rho1: &FockDensity, prior0: f64) -> Result<f64> {
    check_pair(rho0, rho1)?;
    let mut norm = 0.0;
    for idx in components(rho0, rho1) {
        let d = sub(&rho0.matrix, &idx) * C64::new(prior0, 0.0) - sub(&rho1.matrix, &idx) * C64::new(1.0 - prior0, 0.0);
        norm += SymmetricEigen::new(d).eigenvalues.iter().map(|x| x.abs()).sum::<f64>();
    }
    Ok(0.5 * (1.0 - norm))
}
