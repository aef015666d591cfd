//! Virtual delay/Doppler grid and the first-order off-grid measurement model
//! `Φ(κ) = A + B·diag(κ)`.
//!
//! Column `j = ℓ′·K_ν + k′` of `A` is the noiseless single-target DAF-domain
//! response to the known data vector at grid point `(ℓ̄_j, k̄_j)`; column `j`
//! of `B` is its derivative with respect to the Doppler coordinate.

use num_complex::Complex;

use crate::afdm::{AfdmConfig, DafSymbol, Daft};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{cis_turns, Real};

/// Default cap on `L_τ·K_ν`.
pub const DEFAULT_MAX_COLUMNS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct VirtualGrid<T> {
    r_k: T,
    l_tau: usize,
    k_nu: usize,
    ell_bar: Vec<usize>,
    k_bar: Vec<T>,
}

impl<T: Real> VirtualGrid<T> {
    /// Delay grid step, fixed at one sample.
    pub fn r_tau(&self) -> usize {
        1
    }
    pub fn r_k(&self) -> T {
        self.r_k
    }
    pub fn l_tau(&self) -> usize {
        self.l_tau
    }
    pub fn k_nu(&self) -> usize {
        self.k_nu
    }
    pub fn len(&self) -> usize {
        self.ell_bar.len()
    }
    pub fn is_empty(&self) -> bool {
        self.ell_bar.is_empty()
    }
    pub fn ell_bar(&self) -> &[usize] {
        &self.ell_bar
    }
    pub fn k_bar(&self) -> &[T] {
        &self.k_bar
    }

    #[inline]
    pub fn flat_index(&self, delay_idx: usize, doppler_idx: usize) -> usize {
        delay_idx * self.k_nu + doppler_idx
    }

    /// Grid index nearest to `(ell, nu)`; ties go to the lower Doppler index.
    pub fn nearest(&self, ell: usize, nu: T) -> Option<usize> {
        if ell >= self.l_tau {
            return None;
        }
        let row = ell * self.k_nu;
        (row..row + self.k_nu).min_by(|&a, &b| {
            let da = (self.k_bar[a] - nu).abs();
            let db = (self.k_bar[b] - nu).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        })
    }
}

/// Builds the delay-major grid: `L_τ = ℓ_max + 1`, `K_ν = ⌈2α_max/r_k⌉ + 1`,
/// `ℓ̄_j = ℓ′`, `k̄_j = min(k′·r_k - α_max, α_max)`.
pub fn build_grids<T: Real>(ell_max: usize, alpha_max: usize, r_k: T) -> Result<VirtualGrid<T>> {
    if !(r_k > T::zero()) || !r_k.is_finite() {
        return Err(Error::InvalidResolution(r_k.to_f64().unwrap_or(f64::NAN)));
    }
    let alpha = T::from_usize_lossy(alpha_max);
    let span = T::lit(2.0) * alpha / r_k;
    // absorb representation error such as 4/0.1 = 40.000000000000001
    let steps = (span - T::lit(1e-9)).ceil().max(T::zero()).to_usize().unwrap();
    let k_nu = steps + 1;
    let l_tau = ell_max + 1;
    let mut ell_bar = Vec::with_capacity(l_tau * k_nu);
    let mut k_bar = Vec::with_capacity(l_tau * k_nu);
    for ell in 0..l_tau {
        for k in 0..k_nu {
            ell_bar.push(ell);
            k_bar.push((T::from_usize_lossy(k) * r_k - alpha).min(alpha));
        }
    }
    Ok(VirtualGrid {
        r_k,
        l_tau,
        k_nu,
        ell_bar,
        k_bar,
    })
}

/// Time-domain echo `Γ_ℓ[n]·exp(-j2πnν/N)·s[(n-ℓ) mod N]` of the unprefixed
/// transmit frame `s`.
fn echo_time<T: Real>(s: &[Complex<T>], ell: usize, nu: T, cfg: &AfdmConfig<T>) -> Vec<Complex<T>> {
    let n = s.len();
    let gamma = cfg.gamma_cpp(ell);
    let inv_n = T::from_usize_lossy(n).recip();
    (0..n)
        .map(|i| {
            let src = (i + n - ell % n) % n;
            gamma[i] * cis_turns(-(nu * T::from_usize_lossy(i) * inv_n)) * s[src]
        })
        .collect()
}

/// `∂/∂ν` of [`echo_time`]: each sample scaled by `-j2πn/N`.
fn echo_time_derivative<T: Real>(s: &[Complex<T>], ell: usize, nu: T, cfg: &AfdmConfig<T>) -> Vec<Complex<T>> {
    let n = s.len();
    let w = T::TAU() / T::from_usize_lossy(n);
    let mut r = echo_time(s, ell, nu, cfg);
    for (i, v) in r.iter_mut().enumerate() {
        *v = *v * Complex::new(T::zero(), -(w * T::from_usize_lossy(i)));
    }
    r
}

/// Dictionary atom `a(ℓ, k)` for data vector `x`.
pub fn atom<T: Real>(ell: usize, k: T, x: &DafSymbol<T>, cfg: &AfdmConfig<T>) -> Result<Vec<Complex<T>>> {
    check_x(x, cfg)?;
    let daft = Daft::new(cfg);
    let s = daft.inverse(x.values());
    Ok(daft.forward(&echo_time(&s, ell, k, cfg)))
}

/// Derivative atom `b(ℓ, k) = ∂a(ℓ, k)/∂k`.
pub fn atom_derivative<T: Real>(ell: usize, k: T, x: &DafSymbol<T>, cfg: &AfdmConfig<T>) -> Result<Vec<Complex<T>>> {
    check_x(x, cfg)?;
    let daft = Daft::new(cfg);
    let s = daft.inverse(x.values());
    Ok(daft.forward(&echo_time_derivative(&s, ell, k, cfg)))
}

fn check_x<T: Real>(x: &DafSymbol<T>, cfg: &AfdmConfig<T>) -> Result<()> {
    if x.len() != cfg.n() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Atom matrix `A`, derivative matrix `B` and the grid they were built on.
#[derive(Clone, Debug)]
pub struct Dictionary<T> {
    x: DafSymbol<T>,
    a: CMat<T>,
    b: CMat<T>,
    grid: VirtualGrid<T>,
    time: TimeDomain<T>,
}

/// Time-domain view of the same atoms. The DAF-domain atoms are `D·ψ_j` with
/// `D` unitary, so every inner product can be taken here instead.
#[derive(Clone, Debug)]
pub struct TimeDomain<T> {
    /// Forward DAFT matrix `D`.
    pub daft: CMat<T>,
    /// Column `ℓ`: the delayed post-prefix frame `Γ_ℓ·s[(n - ℓ) mod N]`.
    pub delayed: CMat<T>,
    /// Columns `ψ_j`, so that `a_j = D·ψ_j`.
    pub a: CMat<T>,
    /// Columns `∂ψ_j/∂ν`.
    pub b: CMat<T>,
    /// Column `k`, row `d + N - 1`: `exp(-j2π·k̄_k·d/N)` for lags `|d| < N`.
    pub lag_twiddle: CMat<T>,
}

impl<T: Real> Dictionary<T> {
    pub fn x(&self) -> &DafSymbol<T> {
        &self.x
    }
    pub fn a(&self) -> &CMat<T> {
        &self.a
    }
    pub fn b(&self) -> &CMat<T> {
        &self.b
    }
    pub fn grid(&self) -> &VirtualGrid<T> {
        &self.grid
    }
    pub fn time_domain(&self) -> &TimeDomain<T> {
        &self.time
    }
    pub fn n(&self) -> usize {
        self.a.rows()
    }
    /// Number of grid points `L_τ·K_ν`.
    pub fn len(&self) -> usize {
        self.a.cols()
    }
    pub fn is_empty(&self) -> bool {
        self.a.cols() == 0
    }

    /// `a_j + κ_j·b_j`.
    pub fn phi_column(&self, j: usize, kappa_j: T) -> Vec<Complex<T>> {
        self.a
            .col(j)
            .iter()
            .zip(self.b.col(j))
            .map(|(a, b)| *a + b.scale(kappa_j))
            .collect()
    }
}

pub fn build_dictionary<T: Real>(grid: &VirtualGrid<T>, x: &DafSymbol<T>, cfg: &AfdmConfig<T>) -> Result<Dictionary<T>> {
    build_dictionary_capped(grid, x, cfg, DEFAULT_MAX_COLUMNS)
}

pub fn build_dictionary_capped<T: Real>(
    grid: &VirtualGrid<T>,
    x: &DafSymbol<T>,
    cfg: &AfdmConfig<T>,
    max_columns: usize,
) -> Result<Dictionary<T>> {
    check_x(x, cfg)?;
    if grid.len() > max_columns {
        return Err(Error::DictionaryTooLarge {
            columns: grid.len(),
            cap: max_columns,
        });
    }
    if grid.l_tau() > cfg.ell_max() + 1 {
        return Err(Error::InvalidConfig(format!(
            "grid delay span {} exceeds ℓ_max = {}",
            grid.l_tau() - 1,
            cfg.ell_max()
        )));
    }
    let n = cfg.n();
    let daft = Daft::new(cfg);
    let s = daft.inverse(x.values());
    let mut a = CMat::zeros(n, grid.len());
    let mut b = CMat::zeros(n, grid.len());
    let mut a_t = CMat::zeros(n, grid.len());
    let mut b_t = CMat::zeros(n, grid.len());
    for j in 0..grid.len() {
        let (ell, k) = (grid.ell_bar[j], grid.k_bar[j]);
        let e = echo_time(&s, ell, k, cfg);
        let de = echo_time_derivative(&s, ell, k, cfg);
        a.col_mut(j).copy_from_slice(&daft.forward(&e));
        b.col_mut(j).copy_from_slice(&daft.forward(&de));
        a_t.col_mut(j).copy_from_slice(&e);
        b_t.col_mut(j).copy_from_slice(&de);
    }
    let mut delayed = CMat::zeros(n, grid.l_tau());
    for ell in 0..grid.l_tau() {
        delayed.col_mut(ell).copy_from_slice(&echo_time(&s, ell, T::zero(), cfg));
    }
    let inv_n = T::from_usize_lossy(n).recip();
    let lag_twiddle = CMat::from_fn(2 * n - 1, grid.k_nu(), |r, k| {
        let d = T::from_usize_lossy(r) - T::from_usize_lossy(n - 1);
        cis_turns(-(grid.k_bar[k] * d * inv_n))
    });
    Ok(Dictionary {
        x: x.clone(),
        a,
        b,
        grid: grid.clone(),
        time: TimeDomain {
            daft: daft.matrix().clone(),
            delayed,
            a: a_t,
            b: b_t,
            lag_twiddle,
        },
    })
}

/// `Φ(κ) = A + B·diag(κ)`, with every `|κ_j| ≤ r_k/2`.
pub fn measurement_matrix<T: Real>(dict: &Dictionary<T>, kappa: &[T]) -> Result<CMat<T>> {
    if kappa.len() != dict.len() {
        return Err(Error::DimensionMismatch {
            expected: dict.len(),
            got: kappa.len(),
        });
    }
    let bound = dict.grid.r_k() / T::lit(2.0);
    if let Some((index, &value)) = kappa.iter().enumerate().find(|(_, k)| !(k.abs() <= bound)) {
        return Err(Error::KappaOutOfBounds {
            index,
            value: value.as_f64(),
            bound: bound.as_f64(),
        });
    }
    let mut phi = dict.a.clone();
    for (j, &k) in kappa.iter().enumerate() {
        if k != T::zero() {
            crate::linalg::axpy(Complex::new(k, T::zero()), dict.b.col(j), phi.col_mut(j));
        }
    }
    Ok(phi)
}
