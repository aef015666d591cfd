//! Off-grid sparse Bayesian learning for joint delay/Doppler estimation.
//!
//! The received DAF-domain vector is modeled as `y = Φ(κ)·h̄ + w̄` over the
//! virtual grid, with a hierarchical Gaussian–Gamma prior on `h̄` and a
//! Gamma prior on the noise precision. Expectation–maximization alternates
//! the Gaussian posterior of `h̄` with closed-form hyper-parameter updates;
//! the off-grid Doppler offsets `κ` are refreshed only on the current top-`P`
//! support.

mod omp;
mod posterior;
mod updates;

pub use omp::run_integer_cs_baseline;
pub use posterior::{posterior, structured_posterior, Covariance, CovarianceRoute, Posterior};
pub use updates::{
    kappa_system, top_support, BetaNumerator, update_beta, update_delta, update_kappa, KappaSweep, KappaSystem, KappaUpdate,
    PriorParams,
};

use num_complex::Complex;

use crate::afdm::AfdmConfig;
use crate::dictionary::{measurement_matrix, Dictionary};
use crate::error::{Error, Result};
use crate::linalg::{dotc, CMat};
use crate::scalar::{norm_sqr, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct SblOptions<T> {
    pub prior: PriorParams<T>,
    /// Relative δ-change threshold `‖δ⁺ - δ‖²/‖δ‖²`.
    pub eps: T,
    pub max_iter: usize,
    pub delta_floor: T,
    pub sweep: KappaSweep,
    pub beta_numerator: BetaNumerator,
    pub route: CovarianceRoute,
    /// Record per-iteration diagnostics in the result.
    pub trace: bool,
}

impl<T: Real> Default for SblOptions<T> {
    fn default() -> Self {
        Self {
            prior: PriorParams::default(),
            eps: T::lit(1e-6),
            max_iter: 200,
            delta_floor: T::lit(1e-12),
            sweep: KappaSweep::GaussSeidel,
            beta_numerator: BetaNumerator::Observations,
            route: CovarianceRoute::Auto,
            trace: false,
        }
    }
}

impl<T: Real> SblOptions<T> {
    fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        if !(self.eps > T::zero()) {
            return Err(Error::InvalidParameter("ε must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("I_max must be at least 1".into()));
        }
        if !(self.delta_floor > T::zero()) {
            return Err(Error::InvalidParameter("δ floor must be positive".into()));
        }
        Ok(())
    }
}

/// Hyper-parameters of the EM recursion plus the latest posterior.
#[derive(Clone, Debug)]
pub struct SblState<T> {
    pub delta: Vec<T>,
    pub beta: T,
    pub kappa: Vec<T>,
    pub t: usize,
    pub posterior: Option<Posterior<T>>,
}

impl<T: Real> SblState<T> {
    pub fn mu(&self) -> Option<&[Complex<T>]> {
        self.posterior.as_ref().map(|p| p.mu.as_slice())
    }
    pub fn sigma(&self) -> Option<&Covariance<T>> {
        self.posterior.as_ref().map(|p| &p.sigma)
    }
}

/// `β⁰ = 100N/‖y‖²`, `κ⁰ = 0`, `δ⁰ = |Aᴴy|` (floored).
pub fn init_state<T: Real>(y: &[Complex<T>], dict: &Dictionary<T>, delta_floor: T) -> Result<SblState<T>> {
    if y.len() != dict.n() {
        return Err(Error::DimensionMismatch {
            expected: dict.n(),
            got: y.len(),
        });
    }
    let energy = norm_sqr(y);
    if !(energy > T::zero()) {
        return Err(Error::ZeroInput);
    }
    let beta = T::lit(100.0) * T::from_usize_lossy(y.len()) / energy;
    let delta = dict
        .a()
        .adjoint_mul_vec(y)
        .iter()
        .map(|z| z.norm().max(delta_floor))
        .collect();
    Ok(SblState {
        delta,
        beta,
        kappa: vec![T::zero(); dict.len()],
        t: 0,
        posterior: None,
    })
}

/// Posterior of `h̄` under the state's current `(δ, β, κ)`.
pub fn e_step<T: Real>(
    state: &SblState<T>,
    y: &[Complex<T>],
    dict: &Dictionary<T>,
    route: CovarianceRoute,
) -> Result<Posterior<T>> {
    e_step_cached(state, y, dict, route, &mut GramCache::default())
}

/// `AᴴA` kept across iterations for the direct route; only the columns with
/// a nonzero offset change from one iteration to the next.
#[derive(Default)]
struct GramCache<T> {
    a: Option<CMat<T>>,
}

impl<T: Real> GramCache<T> {
    fn gram(&mut self, dict: &Dictionary<T>, phi: &CMat<T>, kappa: &[T]) -> CMat<T> {
        let mut g = self.a.get_or_insert_with(|| posterior::gram(dict.a())).clone();
        for (j, _) in kappa.iter().enumerate().filter(|(_, k)| **k != T::zero()) {
            for i in 0..phi.cols() {
                let v = dotc(phi.col(i), phi.col(j));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }
}

fn e_step_cached<T: Real>(
    state: &SblState<T>,
    y: &[Complex<T>],
    dict: &Dictionary<T>,
    route: CovarianceRoute,
    cache: &mut GramCache<T>,
) -> Result<Posterior<T>> {
    let structured = || structured_posterior(dict, &state.kappa, y, &state.delta, state.beta);
    let direct = |cache: &mut GramCache<T>| {
        let phi = measurement_matrix(dict, &state.kappa)?;
        let g = cache.gram(dict, &phi, &state.kappa);
        posterior::direct_from_gram(&phi, g, y, &state.delta, state.beta)
    };
    match route {
        CovarianceRoute::Structured => structured(),
        CovarianceRoute::Direct => direct(cache),
        CovarianceRoute::Auto if dict.len() > dict.n() => structured().or_else(|_| {
            let phi = measurement_matrix(dict, &state.kappa)?;
            posterior(&phi, y, &state.delta, state.beta, CovarianceRoute::Auto)
        }),
        CovarianceRoute::Auto => direct(cache),
        CovarianceRoute::Woodbury => {
            let phi = measurement_matrix(dict, &state.kappa)?;
            posterior(&phi, y, &state.delta, state.beta, route)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub t: usize,
    pub residual: f64,
    pub beta: f64,
    pub delta_change: f64,
    pub max_abs_kappa: f64,
}

/// One recovered target.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetEstimate<T> {
    pub grid_index: usize,
    pub ell: usize,
    /// `k̄_j + κ_j`.
    pub nu: T,
    pub kappa: T,
    pub range: T,
    pub velocity: T,
    pub gain: Complex<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult<T> {
    /// Sorted by decreasing `|gain|`.
    pub targets: Vec<TargetEstimate<T>>,
    pub iterations: usize,
    /// `‖y - Φμ‖²` at the last E-step.
    pub residual: T,
    pub converged: bool,
    pub beta: T,
    pub trace: Vec<IterationTrace>,
}

fn estimates_from_support<T: Real>(
    support: &[usize],
    mu: &[Complex<T>],
    kappa: &[T],
    dict: &Dictionary<T>,
    cfg: &AfdmConfig<T>,
) -> Vec<TargetEstimate<T>> {
    let grid = dict.grid();
    let mut out: Vec<TargetEstimate<T>> = support
        .iter()
        .map(|&j| {
            let ell = grid.ell_bar()[j];
            let nu = grid.k_bar()[j] + kappa[j];
            TargetEstimate {
                grid_index: j,
                ell,
                nu,
                kappa: kappa[j],
                range: T::from_usize_lossy(ell) * cfg.range_per_delay_bin(),
                velocity: nu * cfg.velocity_per_doppler_unit(),
                gain: mu[j],
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.gain
            .norm_sqr()
            .partial_cmp(&a.gain.norm_sqr())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.grid_index.cmp(&b.grid_index))
    });
    out
}

fn check_target_count(p: usize, dict_len: usize) -> Result<()> {
    if p == 0 || p > dict_len {
        return Err(Error::InvalidParameter(format!(
            "target count P = {p} must lie in 1..={dict_len}"
        )));
    }
    Ok(())
}

/// Diagnostics from one EM iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport<T> {
    /// `‖y - Φ(κ)μ‖²` for the posterior computed in this step.
    pub residual: T,
    /// `‖δ⁺ - δ‖²/‖δ‖²`.
    pub delta_change: T,
    /// Top-`P` support the κ refresh used (empty when κ is pinned).
    pub support: Vec<usize>,
}

/// Step-by-step driver of the EM recursion. [`run_sbl`] loops it to
/// convergence; tests use it to inspect the state between iterations.
pub struct SblRun<'a, T: Real> {
    y: &'a [Complex<T>],
    dict: &'a Dictionary<T>,
    p: usize,
    opts: SblOptions<T>,
    offgrid: bool,
    state: SblState<T>,
    cache: GramCache<T>,
}

impl<'a, T: Real> SblRun<'a, T> {
    /// With `offgrid = false` the κ refresh is skipped and κ stays at zero.
    pub fn new(
        y: &'a [Complex<T>],
        dict: &'a Dictionary<T>,
        p: usize,
        opts: &SblOptions<T>,
        offgrid: bool,
    ) -> Result<Self> {
        opts.validate()?;
        check_target_count(p, dict.len())?;
        let state = init_state(y, dict, opts.delta_floor)?;
        Ok(Self {
            y,
            dict,
            p,
            opts: opts.clone(),
            offgrid,
            state,
            cache: GramCache::default(),
        })
    }

    pub fn state(&self) -> &SblState<T> {
        &self.state
    }

    /// One E-step followed by the δ, β and κ updates, all from the same
    /// posterior and the previous iteration's hyper-parameters.
    pub fn step(&mut self) -> Result<StepReport<T>> {
        let (y, dict, opts) = (self.y, self.dict, &self.opts);
        let state = &mut self.state;
        let post = e_step_cached(state, y, dict, opts.route, &mut self.cache)?;
        let sigma_diag = post.sigma.diagonal();
        let delta_new = update_delta(&post.mu, &sigma_diag, opts.prior.b, opts.delta_floor);
        let phi = measurement_matrix(dict, &state.kappa)?;
        let (beta_new, residual) = update_beta(
            y,
            &phi,
            &post.mu,
            &sigma_diag,
            &state.delta,
            state.beta,
            &opts.prior,
            opts.beta_numerator,
        )?;
        let (kappa_new, support) = if self.offgrid {
            let up = update_kappa(y, dict, &post.mu, &post.sigma, &state.kappa, self.p, opts.sweep);
            (up.kappa, up.support)
        } else {
            (vec![T::zero(); dict.len()], Vec::new())
        };

        let num: T = delta_new
            .iter()
            .zip(&state.delta)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum();
        let den: T = state.delta.iter().map(|d| *d * *d).sum();

        state.delta = delta_new;
        state.beta = beta_new;
        state.kappa = kappa_new;
        state.posterior = Some(post);
        state.t += 1;
        Ok(StepReport {
            residual,
            delta_change: num / den,
            support,
        })
    }

    /// Targets read off the latest posterior: the `P` largest `|μ_j|` with
    /// `ν̂ = k̄_j + κ_j`.
    pub fn estimates(&self, cfg: &AfdmConfig<T>) -> Vec<TargetEstimate<T>> {
        match &self.state.posterior {
            Some(post) => {
                let support = top_support(&post.mu, self.p);
                estimates_from_support(&support, &post.mu, &self.state.kappa, self.dict, cfg)
            }
            None => Vec::new(),
        }
    }
}

/// Runs the EM recursion until `‖δ⁺ - δ‖²/‖δ‖² < ε` or `I_max` iterations.
/// With `offgrid = false` the κ refresh is skipped and κ stays pinned at zero.
pub fn run_sbl<T: Real>(
    y: &[Complex<T>],
    dict: &Dictionary<T>,
    cfg: &AfdmConfig<T>,
    p: usize,
    opts: &SblOptions<T>,
    offgrid: bool,
) -> Result<EstimateResult<T>> {
    let mut run = SblRun::new(y, dict, p, opts, offgrid)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut residual = T::zero();

    while run.state.t < opts.max_iter {
        let report = run.step()?;
        residual = report.residual;
        if opts.trace {
            let state = run.state();
            trace.push(IterationTrace {
                t: state.t,
                residual: residual.as_f64(),
                beta: state.beta.as_f64(),
                delta_change: report.delta_change.as_f64(),
                max_abs_kappa: state.kappa.iter().map(|k| k.abs()).fold(T::zero(), T::max).as_f64(),
            });
        }
        if report.delta_change < opts.eps {
            converged = true;
            break;
        }
    }

    Ok(EstimateResult {
        targets: run.estimates(cfg),
        iterations: run.state.t,
        residual,
        converged,
        beta: run.state.beta,
        trace,
    })
}

/// Off-grid SBL: full EM including the κ refresh.
pub fn run_offgrid_sbl<T: Real>(
    y: &[Complex<T>],
    dict: &Dictionary<T>,
    cfg: &AfdmConfig<T>,
    p: usize,
    opts: &SblOptions<T>,
) -> Result<EstimateResult<T>> {
    run_sbl(y, dict, cfg, p, opts, true)
}

/// On-grid baseline: the same recursion with `κ ≡ 0`.
pub fn run_ongrid_baseline<T: Real>(
    y: &[Complex<T>],
    dict: &Dictionary<T>,
    cfg: &AfdmConfig<T>,
    p: usize,
    opts: &SblOptions<T>,
) -> Result<EstimateResult<T>> {
    run_sbl(y, dict, cfg, p, opts, false)
}
