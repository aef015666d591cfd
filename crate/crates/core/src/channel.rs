//! Multi-target sensing echo: physical-to-normalized target mapping, the
//! time-domain doubly-dispersive channel, its DAF-domain matrix model and
//! calibrated noise injection.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::afdm::{
    add_cpp, daft_demodulate, idaft_modulate, remove_cpp, AfdmConfig, DafSymbol, Daft, TimeFrame, SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{cis_rational, cis_turns, Real};

/// A point target in both physical and normalized coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Target<T> {
    /// Range actually simulated (meters), i.e. `ell` times the delay bin.
    pub range: T,
    /// Radial velocity (m/s).
    pub velocity: T,
    /// Scattering coefficient `h`.
    pub gain: Complex<T>,
    /// Integer normalized delay `ℓ = τ/T_s`.
    pub ell: usize,
    /// Normalized Doppler `ν = f_d/Δf`.
    pub nu: T,
    /// Difference between the requested range and `range` when the delay
    /// had to be rounded onto the sample grid.
    pub range_quantization: T,
}

impl<T: Real> Target<T> {
    /// Builds a target directly from normalized coordinates.
    pub fn from_normalized(ell: usize, nu: T, gain: Complex<T>, cfg: &AfdmConfig<T>) -> Result<Self> {
        check_window(ell, nu, cfg)?;
        Ok(Self {
            range: T::from_usize_lossy(ell) * cfg.range_per_delay_bin(),
            velocity: nu * cfg.velocity_per_doppler_unit(),
            gain,
            ell,
            nu,
            range_quantization: T::zero(),
        })
    }

    pub fn with_gain(mut self, gain: Complex<T>) -> Self {
        self.gain = gain;
        self
    }

    /// Integer part `α` of `ν = α + a` with `a ∈ (-½, ½]`.
    pub fn alpha(&self) -> i64 {
        let half = T::lit(0.5);
        (self.nu - half).ceil().to_i64().unwrap()
    }

    /// Fractional part `a ∈ (-½, ½]`.
    pub fn fractional_doppler(&self) -> T {
        self.nu - T::from_i64(self.alpha()).unwrap()
    }

    /// Per-sample Doppler `f = ν/N`.
    pub fn digital_doppler(&self, cfg: &AfdmConfig<T>) -> T {
        self.nu / T::from_usize_lossy(cfg.n())
    }

    /// Effective DAF-domain gain `h̃ = h·exp(+j2π f ℓ)`, the constant the
    /// time-domain echo leaves in front of `Δ_f Π^ℓ`.
    pub fn h_tilde(&self, cfg: &AfdmConfig<T>) -> Complex<T> {
        self.gain * cis_turns(self.digital_doppler(cfg) * T::from_usize_lossy(self.ell))
    }

    pub fn was_range_quantized(&self) -> bool {
        self.range_quantization != T::zero()
    }
}

fn check_window<T: Real>(ell: usize, nu: T, cfg: &AfdmConfig<T>) -> Result<()> {
    if ell > cfg.ell_max() {
        return Err(Error::OutOfWindow(format!("ℓ = {ell} > ℓ_max = {}", cfg.ell_max())));
    }
    let limit = T::from_usize_lossy(cfg.alpha_max()) + T::lit(0.5);
    if !nu.is_finite() || nu.abs() > limit {
        return Err(Error::OutOfWindow(format!("|ν| = {} > α_max + ½ = {limit}", nu.abs())));
    }
    Ok(())
}

/// Maps a physical (range, velocity) pair to normalized delay and Doppler,
/// with unit gain. The delay is rounded to the nearest sample.
pub fn target_from_physical<T: Real>(range: T, velocity: T, cfg: &AfdmConfig<T>) -> Result<Target<T>> {
    let c = T::lit(SPEED_OF_LIGHT);
    let tau = T::lit(2.0) * range / c;
    let ell_exact = tau / cfg.t_s();
    if !ell_exact.is_finite() || ell_exact < -T::lit(0.5) {
        return Err(Error::OutOfWindow(format!("negative or invalid range {range}")));
    }
    let ell_f = ell_exact.round();
    let ell = ell_f.to_usize().unwrap_or(usize::MAX);
    let f_d = T::lit(2.0) * velocity * cfg.f_c() / c;
    let nu = f_d / cfg.delta_f();
    check_window(ell, nu, cfg)?;
    let simulated = ell_f * cfg.range_per_delay_bin();
    let quant = if (ell_exact - ell_f).abs() > T::lit(1e-9) {
        range - simulated
    } else {
        T::zero()
    };
    Ok(Target {
        range: simulated,
        velocity,
        gain: Complex::new(T::one(), T::zero()),
        ell,
        nu,
        range_quantization: quant,
    })
}

/// Noiseless echo `r[n] = Σᵢ hᵢ·exp(-j2π fᵢ(n - ℓᵢ))·s[n - ℓᵢ]` over the
/// prefixed frame. Sample index `n` counts from the first post-prefix sample,
/// so prefix samples sit at `n = -N_cpp … -1`; references before the start of
/// the transmitted frame contribute nothing.
pub fn apply_sensing_channel<T: Real>(
    s_cpp: &TimeFrame<T>,
    targets: &[Target<T>],
    cfg: &AfdmConfig<T>,
) -> Result<TimeFrame<T>> {
    if !s_cpp.has_cpp {
        return Err(Error::PrefixFlagMismatch { expected: true });
    }
    let len = cfg.n() + cfg.n_cpp();
    if s_cpp.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: s_cpp.len(),
        });
    }
    let ncpp = cfg.n_cpp() as i64;
    let mut out = vec![Complex::<T>::zero(); len];
    for t in targets {
        check_window(t.ell, t.nu, cfg)?;
        let f = t.digital_doppler(cfg);
        for (pos, o) in out.iter_mut().enumerate().skip(t.ell) {
            let n = pos as i64 - ncpp;
            let delayed = T::from_i64(n - t.ell as i64).unwrap();
            *o += t.gain * cis_turns(-(f * delayed)) * s_cpp.values[pos - t.ell];
        }
    }
    Ok(TimeFrame {
        values: out,
        has_cpp: true,
    })
}

/// Normalized `N`-point DFT matrix, `F[k, n] = N^{-1/2}·exp(-j2πkn/N)`.
pub fn dft_matrix<T: Real>(n: usize) -> CMat<T> {
    let scale = T::from_usize_lossy(n).sqrt().recip();
    CMat::from_fn(n, n, |k, m| cis_rational::<T>(-((k * m) as i128), n as i128) * scale)
}

/// Circular delay `Π^ℓ = Fᴴ·diag(exp(-j2πkℓ/N))·F`.
pub fn delay_matrix<T: Real>(ell: usize, n: usize) -> CMat<T> {
    let f = dft_matrix::<T>(n);
    let phases: Vec<Complex<T>> = (0..n)
        .map(|k| cis_rational(-((k * ell) as i128), n as i128))
        .collect();
    f.adjoint().matmul(&CMat::diag(&phases)).matmul(&f)
}

/// Per-target DAF-domain channel matrix
/// `Λ_{c₂} F Λ_{c₁} Γ_CPP Δ_{ν/N} Π^ℓ Λ_{c₁}ᴴ Fᴴ Λ_{c₂}ᴴ` (the gain `h̃` excluded).
pub fn echo_matrix<T: Real>(ell: usize, nu: T, cfg: &AfdmConfig<T>) -> CMat<T> {
    let n = cfg.n();
    let daft = Daft::new(cfg);
    let gamma = cfg.gamma_cpp(ell);
    let inv_n = T::from_usize_lossy(n).recip();
    let middle: Vec<Complex<T>> = (0..n)
        .map(|i| gamma[i] * cis_turns(-(nu * T::from_usize_lossy(i) * inv_n)))
        .collect();
    daft.matrix()
        .matmul(&CMat::diag(&middle))
        .matmul(&delay_matrix(ell, n))
        .matmul(&daft.matrix().adjoint())
}

/// Adds circularly-symmetric complex Gaussian noise whose per-sample
/// variance is the frame's mean power divided by the linear SNR. An infinite
/// SNR leaves the frame untouched. Returns the realized variance `σ²`.
pub fn add_noise<T: Real>(frame: &TimeFrame<T>, snr_db: f64, seed: u64) -> (TimeFrame<T>, T) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_noise_with(frame, snr_db, &mut rng)
}

pub fn add_noise_with<T: Real, R: Rng + ?Sized>(frame: &TimeFrame<T>, snr_db: f64, rng: &mut R) -> (TimeFrame<T>, T) {
    if snr_db == f64::INFINITY {
        return (frame.clone(), T::zero());
    }
    assert!(!snr_db.is_nan(), "SNR must not be NaN");
    let sigma2 = frame.mean_power() / T::lit(10f64.powf(snr_db / 10.0));
    let sd = (sigma2 / T::lit(2.0)).sqrt();
    let values = frame
        .values
        .iter()
        .map(|&v| v + complex_gaussian(rng).scale(sd))
        .collect();
    (
        TimeFrame {
            values,
            has_cpp: frame.has_cpp,
        },
        sigma2,
    )
}

/// Whole sensing chain for one frame: modulate `x`, prepend the prefix,
/// propagate through `targets`, add noise at `snr_db` (infinite for none),
/// strip the prefix and demodulate.
pub fn observe<T: Real, R: Rng + ?Sized>(
    x: &DafSymbol<T>,
    targets: &[Target<T>],
    snr_db: f64,
    cfg: &AfdmConfig<T>,
    rng: &mut R,
) -> Result<DafSymbol<T>> {
    let s = add_cpp(&idaft_modulate(x, cfg)?, cfg)?;
    let (r, _) = add_noise_with(&apply_sensing_channel(&s, targets, cfg)?, snr_db, rng);
    daft_demodulate(&remove_cpp(&r, cfg)?, cfg)
}

/// One draw with independent `N(0,1)` real and imaginary parts.
fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(T::lit(re), T::lit(im))
}

/// Standard circularly-symmetric complex Gaussian, `CN(0, 1)`.
pub fn random_gain<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    complex_gaussian::<T, R>(rng).scale(T::lit(0.5f64.sqrt()))
}

/// Draws `count` targets with integer delays uniform on `0..=ℓ_max`, Doppler
/// uniform on `[-α_max, α_max]` (the span of the virtual Doppler grid) and
/// `CN(0,1)` gains. Two targets sharing a
/// delay bin are kept at least `min_doppler_gap` apart so they never fall into
/// the same delay/Doppler cell.
pub fn draw_targets<T: Real, R: Rng + ?Sized>(
    cfg: &AfdmConfig<T>,
    count: usize,
    min_doppler_gap: f64,
    rng: &mut R,
) -> Result<Vec<Target<T>>> {
    let limit = cfg.alpha_max() as f64;
    let mut out: Vec<Target<T>> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::InvalidParameter(format!(
                "cannot place {count} distinct targets in the delay/Doppler window"
            )));
        }
        let ell = rng.random_range(0..=cfg.ell_max());
        let nu = rng.random_range(-limit..=limit);
        let clash = out
            .iter()
            .any(|t| t.ell == ell && (t.nu.as_f64() - nu).abs() < min_doppler_gap);
        if clash {
            continue;
        }
        let gain = random_gain(rng);
        out.push(Target::from_normalized(ell, T::lit(nu), gain, cfg)?);
    }
    Ok(out)
}
