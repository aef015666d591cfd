//! E-step: Gaussian posterior of the sparse coefficient vector,
//! `Σ = (β·ΦᴴΦ + Δ⁻¹)⁻¹`, `μ = β·Σ·Φᴴy`.
//!
//! Two routes are provided. The direct route factors the `M×M` precision
//! matrix. The Woodbury route factors the `N×N` matrix
//! `C = β⁻¹I + ΦΔΦᴴ` instead and keeps `Σ = Δ - ΔΦᴴC⁻¹ΦΔ` implicit, which is
//! far cheaper once the grid has more points than there are subcarriers.
//! The structured route goes further: it moves to the time domain, where
//! each on-grid atom is a delayed frame times a Doppler ramp, and assembles
//! `C` from per-delay lag sums instead of an `N×M` product.

use num_complex::Complex;
use num_traits::Zero;

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::{dotc, weighted_gram, CMat, Cholesky};
use crate::scalar::Real;

/// How the posterior covariance is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CovarianceRoute {
    /// Woodbury when `M > N`, direct otherwise; falls back to direct if the
    /// `N×N` system fails to factor.
    #[default]
    Auto,
    Direct,
    Woodbury,
    /// Time-domain lag-sum assembly; needs the dictionary, so only reachable
    /// through the estimator's E-step.
    Structured,
}

/// Posterior covariance, dense or in low-rank-update form.
#[derive(Clone, Debug)]
pub enum Covariance<T> {
    Dense(CMat<T>),
    /// `Σ_ij = δ_i·[i = j] - δ_i·δ_j·v_iᴴv_j` with `V = L⁻¹Φ`, `LLᴴ = C`.
    Woodbury { delta: Vec<T>, v: CMat<T> },
    /// `Σ_ij = δ_i·[i = j] - δ_i·δ_j·φ_iᴴWφ_j` with `W = C⁻¹` explicit and
    /// the diagonal precomputed.
    Factored {
        delta: Vec<T>,
        phi: CMat<T>,
        w: CMat<T>,
        diag: Vec<T>,
    },
}

impl<T: Real> Covariance<T> {
    pub fn dim(&self) -> usize {
        match self {
            Covariance::Dense(m) => m.cols(),
            Covariance::Woodbury { delta, .. } | Covariance::Factored { delta, .. } => delta.len(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        match self {
            Covariance::Dense(m) => m[(i, j)],
            Covariance::Woodbury { delta, v } => {
                let cross = dotc(v.col(i), v.col(j)).scale(delta[i] * delta[j]);
                if i == j {
                    Complex::new(delta[i] - cross.re, T::zero())
                } else {
                    -cross
                }
            }
            Covariance::Factored { delta, phi, w, diag } => {
                if i == j {
                    return Complex::new(diag[i], T::zero());
                }
                let wj = w.mul_vec(phi.col(j));
                -dotc(phi.col(i), &wj).scale(delta[i] * delta[j])
            }
        }
    }

    /// Real diagonal `Σ_jj`.
    pub fn diagonal(&self) -> Vec<T> {
        match self {
            Covariance::Dense(m) => (0..m.cols()).map(|j| m[(j, j)].re).collect(),
            Covariance::Woodbury { delta, v } => delta
                .iter()
                .enumerate()
                .map(|(j, &d)| {
                    let s: T = v.col(j).iter().map(|z| z.norm_sqr()).sum();
                    d - d * d * s
                })
                .collect(),
            Covariance::Factored { diag, .. } => diag.clone(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        match self {
            Covariance::Dense(m) => m.col(j).to_vec(),
            Covariance::Woodbury { delta, v } => {
                // Σ_{:,j} = δ_j e_j - δ_j Δ Vᴴ v_j
                let vj = v.col(j);
                let mut out: Vec<Complex<T>> = (0..delta.len())
                    .map(|i| -dotc(v.col(i), vj).scale(delta[i] * delta[j]))
                    .collect();
                out[j] += Complex::new(delta[j], T::zero());
                out
            }
            Covariance::Factored { delta, phi, w, diag } => {
                let wj = w.mul_vec(phi.col(j));
                let mut out: Vec<Complex<T>> = (0..delta.len())
                    .map(|i| -dotc(phi.col(i), &wj).scale(delta[i] * delta[j]))
                    .collect();
                out[j] = Complex::new(diag[j], T::zero());
                out
            }
        }
    }

    pub fn to_dense(&self) -> CMat<T> {
        match self {
            Covariance::Dense(m) => m.clone(),
            Covariance::Woodbury { .. } | Covariance::Factored { .. } => {
                let m = self.dim();
                let mut out = CMat::zeros(m, m);
                for j in 0..m {
                    out.col_mut(j).copy_from_slice(&self.column(j));
                }
                out
            }
        }
    }
}

/// Posterior mean and covariance from one E-step.
#[derive(Clone, Debug)]
pub struct Posterior<T> {
    pub mu: Vec<Complex<T>>,
    pub sigma: Covariance<T>,
}

/// Computes `(Σ, μ)` for measurement matrix `phi`, prior variances `delta`
/// and noise precision `beta`.
pub fn posterior<T: Real>(
    phi: &CMat<T>,
    y: &[Complex<T>],
    delta: &[T],
    beta: T,
    route: CovarianceRoute,
) -> Result<Posterior<T>> {
    if phi.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.rows(),
            got: y.len(),
        });
    }
    if phi.cols() != delta.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.cols(),
            got: delta.len(),
        });
    }
    match route {
        CovarianceRoute::Direct => direct(phi, y, delta, beta),
        CovarianceRoute::Woodbury => woodbury(phi, y, delta, beta),
        CovarianceRoute::Structured => Err(Error::InvalidParameter(
            "the structured route needs the dictionary; use the estimator E-step".into(),
        )),
        CovarianceRoute::Auto if phi.cols() > phi.rows() => {
            woodbury(phi, y, delta, beta).or_else(|_| direct(phi, y, delta, beta))
        }
        CovarianceRoute::Auto => direct(phi, y, delta, beta),
    }
}

fn direct<T: Real>(phi: &CMat<T>, y: &[Complex<T>], delta: &[T], beta: T) -> Result<Posterior<T>> {
    direct_from_gram(phi, gram(phi), y, delta, beta)
}

/// `ΦᴴΦ`, filled from the upper triangle.
pub(crate) fn gram<T: Real>(phi: &CMat<T>) -> CMat<T> {
    let m = phi.cols();
    let mut g = CMat::zeros(m, m);
    for j in 0..m {
        for i in 0..=j {
            let v = dotc(phi.col(i), phi.col(j));
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    g
}

/// Direct route with `ΦᴴΦ` supplied by the caller.
pub(crate) fn direct_from_gram<T: Real>(
    phi: &CMat<T>,
    mut precision: CMat<T>,
    y: &[Complex<T>],
    delta: &[T],
    beta: T,
) -> Result<Posterior<T>> {
    precision.scale(Complex::new(beta, T::zero()));
    for (j, &d) in delta.iter().enumerate() {
        precision[(j, j)] += Complex::new(d.recip(), T::zero());
    }
    precision.symmetrize();
    let sigma = Cholesky::new(precision)?.inverse();
    let phy = phi.adjoint_mul_vec(y);
    let mut mu = sigma.mul_vec(&phy);
    for z in &mut mu {
        *z = z.scale(beta);
    }
    Ok(Posterior {
        mu,
        sigma: Covariance::Dense(sigma),
    })
}

fn woodbury<T: Real>(phi: &CMat<T>, y: &[Complex<T>], delta: &[T], beta: T) -> Result<Posterior<T>> {
    let c = weighted_gram(phi, delta, beta.recip());
    let chol = Cholesky::new(c)?;
    let v = chol.solve_lower_matrix(phi);
    let mut w = y.to_vec();
    chol.solve_lower_in_place(&mut w);
    // μ = ΔΦᴴC⁻¹y = Δ Vᴴ (L⁻¹y)
    let mu = (0..phi.cols())
        .map(|j| {
            let z = dotc(v.col(j), &w);
            if z.is_zero() {
                z
            } else {
                z.scale(delta[j])
            }
        })
        .collect();
    Ok(Posterior {
        mu,
        sigma: Covariance::Woodbury {
            delta: delta.to_vec(),
            v,
        },
    })
}

/// Posterior for `Φ(κ)` built from `dict`, computed in the time domain.
///
/// On-grid columns (`κ_j = 0`) of delay `ℓ` contribute
/// `s_ℓ[p]·conj(s_ℓ[q])·g_ℓ(p - q)` to `C`, where `g_ℓ(d) = Σ_k δ_j e^{-j2πk̄d/N}`;
/// the few off-grid columns are added as explicit rank-one terms. The
/// quadratic forms `φ_jᴴWφ_j` use the matching lag sums of `W`.
pub fn structured_posterior<T: Real>(
    dict: &Dictionary<T>,
    kappa: &[T],
    y: &[Complex<T>],
    delta: &[T],
    beta: T,
) -> Result<Posterior<T>> {
    let n = dict.n();
    let m = dict.len();
    for (expected, got) in [(n, y.len()), (m, delta.len()), (m, kappa.len())] {
        if expected != got {
            return Err(Error::DimensionMismatch { expected, got });
        }
    }
    let grid = dict.grid();
    let bound = grid.r_k() / T::lit(2.0);
    if let Some((index, &value)) = kappa.iter().enumerate().find(|(_, k)| !(k.abs() <= bound)) {
        return Err(Error::KappaOutOfBounds {
            index,
            value: value.as_f64(),
            bound: bound.as_f64(),
        });
    }
    let td = dict.time_domain();
    let (l_tau, k_nu) = (grid.l_tau(), grid.k_nu());
    let lags = 2 * n - 1;
    let zero = Complex::<T>::zero();

    let mut phi = td.a.clone();
    let mut off_grid = Vec::new();
    for (j, &k) in kappa.iter().enumerate() {
        if k != T::zero() {
            crate::linalg::axpy(Complex::new(k, T::zero()), td.b.col(j), phi.col_mut(j));
            off_grid.push(j);
        }
    }

    let mut c = CMat::zeros(n, n);
    let mut g = vec![zero; lags];
    for ell in 0..l_tau {
        g.iter_mut().for_each(|z| *z = zero);
        for k in 0..k_nu {
            let j = grid.flat_index(ell, k);
            if kappa[j] == T::zero() {
                crate::linalg::axpy(Complex::new(delta[j], T::zero()), td.lag_twiddle.col(k), &mut g);
            }
        }
        let s = td.delayed.col(ell);
        for q in 0..n {
            let sq = s[q].conj();
            // rows p = q..n use lags p - q = 0..n-q
            let gq = &g[n - 1..lags - q];
            let dst = &mut c.col_mut(q)[q..];
            for ((out, sp), gd) in dst.iter_mut().zip(&s[q..]).zip(gq) {
                *out += *sp * sq * *gd;
            }
        }
    }
    for &j in &off_grid {
        let col = phi.col(j);
        for q in 0..n {
            let sq = col[q].conj().scale(delta[j]);
            crate::linalg::axpy(sq, &col[q..], &mut c.col_mut(q)[q..]);
        }
    }
    let shift = beta.recip();
    for q in 0..n {
        c[(q, q)] = Complex::new(c[(q, q)].re + shift, T::zero());
    }

    let w = Cholesky::new(c)?.inverse();
    let y_t = td.daft.adjoint_mul_vec(y);
    let z = w.mul_vec(&y_t);
    let mu: Vec<Complex<T>> = (0..m).map(|j| dotc(phi.col(j), &z).scale(delta[j])).collect();

    let mut quad = vec![T::zero(); m];
    let mut h = vec![zero; lags];
    for ell in 0..l_tau {
        h.iter_mut().for_each(|z| *z = zero);
        let s = td.delayed.col(ell);
        for q in 0..n {
            // H(d) += conj(s[p])·W[p,q]·s[q], d = p - q
            let sq = s[q];
            let wq = w.col(q);
            let dst = &mut h[n - 1 - q..lags - q];
            for ((out, sp), wpq) in dst.iter_mut().zip(s).zip(wq) {
                *out += sp.conj() * *wpq * sq;
            }
        }
        for k in 0..k_nu {
            let j = grid.flat_index(ell, k);
            quad[j] = dotc(td.lag_twiddle.col(k), &h).re;
        }
    }
    for &j in &off_grid {
        let wj = w.mul_vec(phi.col(j));
        quad[j] = dotc(phi.col(j), &wj).re;
    }
    let diag = delta.iter().zip(&quad).map(|(&d, &q)| d - d * d * q).collect();

    Ok(Posterior {
        mu,
        sigma: Covariance::Factored {
            delta: delta.to_vec(),
            phi,
            w,
            diag,
        },
    })
}
