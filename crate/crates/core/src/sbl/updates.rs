//! M-step closed forms for the prior variances `δ`, the noise precision `β`
//! and the off-grid Doppler offsets `κ`.

use num_complex::Complex;

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::{dotc, CMat};
use crate::scalar::Real;

use super::posterior::Covariance;

/// Gamma hyper-prior root parameters: `δ_j ~ Γ(1, b)`, `β ~ Γ(d, e)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorParams<T> {
    pub b: T,
    pub d: T,
    pub e: T,
}

impl<T: Real> Default for PriorParams<T> {
    fn default() -> Self {
        Self {
            b: T::lit(1e-4),
            d: T::one(),
            e: T::lit(1e-4),
        }
    }
}

impl<T: Real> PriorParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("b", self.b), ("d", self.d), ("e", self.e)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("prior parameter {name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Order in which the support offsets are refreshed within one M-step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KappaSweep {
    /// Each coordinate sees the offsets already updated in this sweep.
    #[default]
    GaussSeidel,
    /// Every coordinate uses the previous iteration's offsets.
    Jacobi,
}

/// `δ_j = (√(1 + 4b(|μ_j|² + Σ_jj)) - 1) / 2b`, floored at `floor`.
///
/// Evaluated as `2q / (√(1 + 4bq) + 1)`, the same quantity without the
/// cancellation for small `bq`.
pub fn update_delta<T: Real>(mu: &[Complex<T>], sigma_diag: &[T], b: T, floor: T) -> Vec<T> {
    assert_eq!(mu.len(), sigma_diag.len());
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    mu.iter()
        .zip(sigma_diag)
        .map(|(m, &s)| {
            let q = (m.norm_sqr() + s).max(T::zero());
            let d = two * q / ((T::one() + four * b * q).sqrt() + T::one());
            d.max(floor)
        })
        .collect()
}

/// Count added to `d - 1` in the numerator of the noise-precision update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BetaNumerator {
    /// Number of observations `N`, the exact M-step for an `N`-dimensional
    /// Gaussian likelihood.
    #[default]
    Observations,
    /// Number of grid columns `L_τK_ν`. Overstates β whenever the grid is
    /// larger than `N`.
    GridSize,
}

/// `β = (d - 1 + m) / (e + ‖y - Φμ‖² + β_old⁻¹·Σ_j (1 - Σ_jj/δ_j))` with `m`
/// chosen by `numerator`.
///
/// Returns the new precision and the residual energy `‖y - Φμ‖²`.
pub fn update_beta<T: Real>(
    y: &[Complex<T>],
    phi: &CMat<T>,
    mu: &[Complex<T>],
    sigma_diag: &[T],
    delta_old: &[T],
    beta_old: T,
    prior: &PriorParams<T>,
    numerator: BetaNumerator,
) -> Result<(T, T)> {
    let m = match numerator {
        BetaNumerator::Observations => phi.rows(),
        BetaNumerator::GridSize => delta_old.len(),
    };
    let fit = phi.mul_vec(mu);
    let residual: T = y.iter().zip(&fit).map(|(a, b)| (*a - *b).norm_sqr()).sum();
    let shrink: T = sigma_diag
        .iter()
        .zip(delta_old)
        .map(|(&s, &d)| T::one() - s / d)
        .sum();
    let denom = prior.e + residual + shrink / beta_old;
    if !(denom > T::zero()) || !denom.is_finite() {
        return Err(Error::BetaDivergence(denom.as_f64()));
    }
    Ok(((prior.d - T::one() + T::from_usize_lossy(m)) / denom, residual))
}

/// Indices of the `p` largest `|μ_j|`, ties broken toward the lower index,
/// returned in ascending index order.
pub fn top_support<T: Real>(mu: &[Complex<T>], p: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..mu.len()).collect();
    idx.sort_by(|&a, &b| {
        mu[b]
            .norm_sqr()
            .partial_cmp(&mu[a].norm_sqr())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(p.min(mu.len()));
    idx.sort_unstable();
    idx
}

/// Outcome of one κ refresh.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaUpdate<T> {
    pub kappa: Vec<T>,
    pub support: Vec<usize>,
    /// Support indices whose curvature `Ξ_jj` vanished, left unchanged.
    pub degenerate: Vec<usize>,
}

/// Truncated quadratic-form pieces on a support set.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaSystem<T> {
    /// `Ξ̄ = Re{BᴴB ⊙ conj(Σ + μμᴴ)}` restricted to the support.
    pub xi: Vec<Vec<T>>,
    /// `η̄ = Re{conj(μ_j)·b_jᴴ(y - Aμ) - (BᴴAΣ)_jj}` on the support.
    pub eta: Vec<T>,
}

pub fn kappa_system<T: Real>(
    y: &[Complex<T>],
    dict: &Dictionary<T>,
    mu: &[Complex<T>],
    sigma: &Covariance<T>,
    support: &[usize],
) -> KappaSystem<T> {
    let (a, b) = (dict.a(), dict.b());
    let fit = a.mul_vec(mu);
    let resid: Vec<Complex<T>> = y.iter().zip(&fit).map(|(u, v)| *u - *v).collect();
    let eta = support
        .iter()
        .map(|&j| {
            let a_sigma_j = a.mul_vec(&sigma.column(j));
            let term = mu[j].conj() * dotc(b.col(j), &resid) - dotc(b.col(j), &a_sigma_j);
            term.re
        })
        .collect();
    let xi = support
        .iter()
        .map(|&i| {
            support
                .iter()
                .map(|&j| {
                    let g = dotc(b.col(i), b.col(j));
                    let s = sigma.entry(i, j) + mu[i] * mu[j].conj();
                    (g * s.conj()).re
                })
                .collect()
        })
        .collect();
    KappaSystem { xi, eta }
}

/// One κ refresh over the top-`p` support of `|μ|`. Off-support entries are
/// zeroed and every updated entry is clamped to `±r_k/2`.
pub fn update_kappa<T: Real>(
    y: &[Complex<T>],
    dict: &Dictionary<T>,
    mu: &[Complex<T>],
    sigma: &Covariance<T>,
    kappa_old: &[T],
    p: usize,
    sweep: KappaSweep,
) -> KappaUpdate<T> {
    let support = top_support(mu, p);
    let system = kappa_system(y, dict, mu, sigma, &support);
    let bound = dict.grid().r_k() / T::lit(2.0);
    let prev: Vec<T> = support.iter().map(|&j| kappa_old[j]).collect();
    let mut cur = prev.clone();
    let mut degenerate = Vec::new();
    for s in 0..support.len() {
        let diag = system.xi[s][s];
        if !(diag.abs() > T::zero()) || !diag.is_finite() {
            degenerate.push(support[s]);
            continue;
        }
        let source = match sweep {
            KappaSweep::GaussSeidel => &cur,
            KappaSweep::Jacobi => &prev,
        };
        let coupling: T = (0..support.len())
            .filter(|&i| i != s)
            .map(|i| system.xi[s][i] * source[i])
            .sum();
        let v = (system.eta[s] - coupling) / diag;
        cur[s] = v.max(-bound).min(bound);
    }
    let mut kappa = vec![T::zero(); kappa_old.len()];
    for (s, &j) in support.iter().enumerate() {
        kappa[j] = cur[s];
    }
    KappaUpdate {
        kappa,
        support,
        degenerate,
    }
}
