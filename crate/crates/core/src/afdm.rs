//! AFDM waveform primitives: system configuration, the discrete affine
//! Fourier transform pair and the chirp-periodic prefix.
//!
//! The transform kernel is
//! `φ_n(m) = N^{-1/2} · exp(j2π(c₁n² + c₂m² + nm/N))`, so that
//! `s = Λ_{c₁}ᴴ Fᴴ Λ_{c₂}ᴴ x` and `y = Λ_{c₂} F Λ_{c₁} r`. The first chirp rate
//! is always the rational `c₁ = (2(α_max + k_v) + 1) / 2N`; it is stored as
//! its numerator so every `c₁`-phase can be reduced exactly in integers.

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{cis_rational, cis_turns, Real};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Upper bound on `N` for the dense transform matrices.
pub const MAX_SUBCARRIERS: usize = 512;

/// Raw inputs to [`AfdmConfig::new`]. `Default` gives the desk-scale
/// experiment settings (N = 128, 30 kHz, 90 GHz, α_max = 2, ℓ_max = 10).
#[derive(Clone, Debug, PartialEq)]
pub struct AfdmParams<T> {
    pub n: usize,
    pub delta_f: T,
    pub f_c: T,
    pub alpha_max: usize,
    pub ell_max: usize,
    pub k_v: usize,
    pub c2: T,
    pub n_cpp: usize,
}

impl<T: Real> Default for AfdmParams<T> {
    fn default() -> Self {
        Self {
            n: 128,
            delta_f: T::lit(30e3),
            f_c: T::lit(90e9),
            alpha_max: 2,
            ell_max: 10,
            k_v: 1,
            c2: T::zero(),
            n_cpp: 12,
        }
    }
}

impl<T: Real> AfdmParams<T> {
    pub fn build(&self) -> Result<AfdmConfig<T>> {
        AfdmConfig::new(self)
    }
}

/// Validated AFDM system configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct AfdmConfig<T> {
    n: usize,
    delta_f: T,
    f_c: T,
    c1_num: i64,
    c2: T,
    n_cpp: usize,
    alpha_max: usize,
    ell_max: usize,
    k_v: usize,
}

impl<T: Real> AfdmConfig<T> {
    pub fn new(p: &AfdmParams<T>) -> Result<Self> {
        if p.n == 0 || !p.n.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("N must be positive and even, got {}", p.n)));
        }
        if p.n > MAX_SUBCARRIERS {
            return Err(Error::InvalidConfig(format!(
                "N = {} exceeds the dense-transform limit {MAX_SUBCARRIERS}",
                p.n
            )));
        }
        if !(p.delta_f > T::zero()) || !(p.f_c > T::zero()) {
            return Err(Error::InvalidConfig("Δf and f_c must be positive".into()));
        }
        if !p.c2.is_finite() {
            return Err(Error::InvalidConfig("c₂ must be finite".into()));
        }
        if p.n_cpp < p.ell_max {
            return Err(Error::PrefixTooShort {
                n_cpp: p.n_cpp,
                ell_max: p.ell_max,
            });
        }
        if p.n_cpp > p.n {
            return Err(Error::InvalidConfig(format!("N_cpp = {} exceeds N = {}", p.n_cpp, p.n)));
        }
        let value = diversity_value(p.alpha_max, p.ell_max);
        if value >= p.n {
            return Err(Error::DiversityViolation { value, n: p.n });
        }
        Ok(Self {
            n: p.n,
            delta_f: p.delta_f,
            f_c: p.f_c,
            c1_num: (2 * (p.alpha_max + p.k_v) + 1) as i64,
            c2: p.c2,
            n_cpp: p.n_cpp,
            alpha_max: p.alpha_max,
            ell_max: p.ell_max,
            k_v: p.k_v,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }
    #[inline]
    pub fn n_cpp(&self) -> usize {
        self.n_cpp
    }
    #[inline]
    pub fn alpha_max(&self) -> usize {
        self.alpha_max
    }
    #[inline]
    pub fn ell_max(&self) -> usize {
        self.ell_max
    }
    #[inline]
    pub fn k_v(&self) -> usize {
        self.k_v
    }
    #[inline]
    pub fn delta_f(&self) -> T {
        self.delta_f
    }
    #[inline]
    pub fn f_c(&self) -> T {
        self.f_c
    }
    #[inline]
    pub fn c2(&self) -> T {
        self.c2
    }

    /// `2N·c₁`, an odd integer.
    #[inline]
    pub fn c1_numerator(&self) -> i64 {
        self.c1_num
    }

    pub fn c1(&self) -> T {
        T::from_i64(self.c1_num).unwrap() / T::from_usize_lossy(2 * self.n)
    }

    /// Sample interval `T_s = 1/(N·Δf)`.
    pub fn t_s(&self) -> T {
        (T::from_usize_lossy(self.n) * self.delta_f).recip()
    }

    /// Symbol duration `T = 1/Δf`.
    pub fn symbol_duration(&self) -> T {
        self.delta_f.recip()
    }

    /// Meters per unit of normalized delay, `c·T_s/2`.
    pub fn range_per_delay_bin(&self) -> T {
        T::lit(SPEED_OF_LIGHT) * self.t_s() / T::lit(2.0)
    }

    /// Meters per second per unit of normalized Doppler, `c·Δf/(2f_c)`.
    pub fn velocity_per_doppler_unit(&self) -> T {
        T::lit(SPEED_OF_LIGHT) * self.delta_f / (T::lit(2.0) * self.f_c)
    }

    /// True when the chirp-periodic prefix degenerates to a cyclic prefix.
    pub fn cpp_is_cyclic(&self) -> bool {
        self.n.is_multiple_of(2)
    }

    /// `Λ_c₁[n] = exp(-j2π c₁ n²)`.
    pub fn lambda_c1(&self, n: usize) -> Complex<T> {
        let n = n as i128;
        cis_rational(-(self.c1_num as i128) * n * n, 2 * self.n as i128)
    }

    /// `Λ_c₂[m] = exp(-j2π c₂ m²)`.
    pub fn lambda_c2(&self, m: usize) -> Complex<T> {
        let m2 = T::from_usize_lossy(m * m);
        cis_turns(-(self.c2 * m2))
    }

    /// Phase applied to prefix sample `n ∈ [-N_cpp, -1]`:
    /// `exp(-j2π c₁ (N² + 2Nn))`.
    pub fn cpp_phase(&self, n: i64) -> Complex<T> {
        let big_n = self.n as i128;
        let num = -(self.c1_num as i128) * (big_n * big_n + 2 * big_n * n as i128);
        cis_rational(num, 2 * big_n)
    }

    /// Diagonal of `Γ_CPP` for delay `ell`: entries with `n < ell` carry
    /// `exp(-j2π c₁ (N² - 2N(ℓ - n)))`, the rest are one.
    pub fn gamma_cpp(&self, ell: usize) -> Vec<Complex<T>> {
        let big_n = self.n as i128;
        (0..self.n)
            .map(|n| {
                if n < ell {
                    let d = (ell - n) as i128;
                    cis_rational(-(self.c1_num as i128) * (big_n * big_n - 2 * big_n * d), 2 * big_n)
                } else {
                    Complex::new(T::one(), T::zero())
                }
            })
            .collect()
    }
}

/// Left-hand side of the full-diversity condition, `2α + ℓ + 2αℓ`.
pub fn diversity_value(alpha_max: usize, ell_max: usize) -> usize {
    2 * alpha_max + ell_max + 2 * alpha_max * ell_max
}

/// A length-`N` vector in the DAF domain (transmitted `x` or received `y`).
#[derive(Clone, Debug, PartialEq)]
pub struct DafSymbol<T>(pub Vec<Complex<T>>);

impl<T: Real> DafSymbol<T> {
    pub fn new(values: Vec<Complex<T>>, cfg: &AfdmConfig<T>) -> Result<Self> {
        check_len(values.len(), cfg.n())?;
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex::zero(); n])
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Time-domain samples, with or without the chirp-periodic prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeFrame<T> {
    pub values: Vec<Complex<T>>,
    pub has_cpp: bool,
}

impl<T: Real> TimeFrame<T> {
    pub fn new(values: Vec<Complex<T>>, has_cpp: bool, cfg: &AfdmConfig<T>) -> Result<Self> {
        let expected = if has_cpp { cfg.n() + cfg.n_cpp() } else { cfg.n() };
        check_len(values.len(), expected)?;
        Ok(Self { values, has_cpp })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean_power(&self) -> T {
        if self.values.is_empty() {
            return T::zero();
        }
        crate::scalar::norm_sqr(&self.values) / T::from_usize_lossy(self.values.len())
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Precomputed `N×N` DAFT matrix `Λ_{c₂} F Λ_{c₁}`; its adjoint is the IDAFT.
#[derive(Clone, Debug)]
pub struct Daft<T> {
    forward: CMat<T>,
}

impl<T: Real> Daft<T> {
    pub fn new(cfg: &AfdmConfig<T>) -> Self {
        let n = cfg.n();
        let scale = T::from_usize_lossy(n).sqrt().recip();
        let c1 = cfg.c1_numerator() as i128;
        let den = 2 * n as i128;
        let chirp2: Vec<Complex<T>> = (0..n).map(|m| cfg.lambda_c2(m)).collect();
        // forward[m, k] = conj(φ_k(m)) = N^{-1/2} exp(-j2π(c₁k² + c₂m² + km/N))
        let forward = CMat::from_fn(n, n, |m, k| {
            let (m_i, k_i) = (m as i128, k as i128);
            cis_rational::<T>(-(c1 * k_i * k_i + 2 * k_i * m_i), den) * chirp2[m] * scale
        });
        Self { forward }
    }

    pub fn n(&self) -> usize {
        self.forward.rows()
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.forward
    }

    /// DAF-domain `y = Λ_{c₂} F Λ_{c₁} r`.
    pub fn forward(&self, r: &[Complex<T>]) -> Vec<Complex<T>> {
        self.forward.mul_vec(r)
    }

    /// Time-domain `s = Λ_{c₁}ᴴ Fᴴ Λ_{c₂}ᴴ x`.
    pub fn inverse(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        self.forward.adjoint_mul_vec(x)
    }
}

/// IDAFT of a DAF-domain symbol vector (no prefix).
pub fn idaft_modulate<T: Real>(x: &DafSymbol<T>, cfg: &AfdmConfig<T>) -> Result<TimeFrame<T>> {
    check_len(x.len(), cfg.n())?;
    let s = Daft::new(cfg).inverse(x.values());
    Ok(TimeFrame {
        values: s,
        has_cpp: false,
    })
}

/// DAFT of a prefix-free received frame.
pub fn daft_demodulate<T: Real>(r: &TimeFrame<T>, cfg: &AfdmConfig<T>) -> Result<DafSymbol<T>> {
    if r.has_cpp {
        return Err(Error::PrefixFlagMismatch { expected: false });
    }
    check_len(r.len(), cfg.n())?;
    Ok(DafSymbol(Daft::new(cfg).forward(&r.values)))
}

/// Prepends `N_cpp` samples, `s[n] = s[N+n]·exp(-j2πc₁(N² + 2Nn))` for
/// `n = -N_cpp … -1`.
pub fn add_cpp<T: Real>(s: &TimeFrame<T>, cfg: &AfdmConfig<T>) -> Result<TimeFrame<T>> {
    if s.has_cpp {
        return Err(Error::PrefixFlagMismatch { expected: false });
    }
    check_len(s.len(), cfg.n())?;
    let (n, ncpp) = (cfg.n(), cfg.n_cpp());
    let mut out = Vec::with_capacity(n + ncpp);
    for i in 0..ncpp {
        let logical = i as i64 - ncpp as i64;
        let src = (n as i64 + logical) as usize;
        out.push(s.values[src] * cfg.cpp_phase(logical));
    }
    out.extend_from_slice(&s.values);
    Ok(TimeFrame {
        values: out,
        has_cpp: true,
    })
}

pub fn remove_cpp<T: Real>(r: &TimeFrame<T>, cfg: &AfdmConfig<T>) -> Result<TimeFrame<T>> {
    if !r.has_cpp {
        return Err(Error::PrefixFlagMismatch { expected: true });
    }
    check_len(r.len(), cfg.n() + cfg.n_cpp())?;
    Ok(TimeFrame {
        values: r.values[cfg.n_cpp()..].to_vec(),
        has_cpp: false,
    })
}

/// Unit-average-energy 16-QAM symbols, levels `{±1, ±3}/√10`.
pub fn random_qam16<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> DafSymbol<T> {
    let levels = [-3.0, -1.0, 1.0, 3.0];
    let scale = 10f64.sqrt().recip();
    let values = (0..n)
        .map(|_| {
            let i = levels[rng.random_range(0..4)] * scale;
            let q = levels[rng.random_range(0..4)] * scale;
            Complex::new(T::lit(i), T::lit(q))
        })
        .collect();
    DafSymbol(values)
}
