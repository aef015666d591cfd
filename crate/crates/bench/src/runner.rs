//! Monte Carlo sweep over (method, r_k, SNR, P) cells.
//!
//! Every trial draws one scene (data, targets, gains) from its own child
//! stream and reuses it for every SNR, resolution and method, so the cells
//! of one trial are paired comparisons. Noise has a separate stream per SNR.

use std::time::Instant;

use afdm_core::{
    build_dictionary, build_grids, draw_targets, observe, random_gain, random_qam16, run_integer_cs_baseline,
    run_offgrid_sbl, run_ongrid_baseline, target_from_physical, AfdmConfig64, DafSymbol, Dictionary64,
    EstimateResult64, SblOptions64, Target64, C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{pair, rmse_range, rmse_velocity};
use crate::scenario::{Method, Scenario, TargetSpec};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Keep per-iteration estimator diagnostics.
    pub trace: bool,
    /// 0 silent, 1 one line per target count, 2 one line per trial.
    pub verbosity: u8,
}

/// One aggregated cell. Numeric fields are empty on error rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub r_k: f64,
    pub snr_db: f64,
    #[serde(rename = "P")]
    pub p: usize,
    pub trials: usize,
    pub rmse_velocity_mps: Option<f64>,
    pub rmse_range_m: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub mean_wall_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub trial: usize,
    pub target_index: usize,
    pub true_range_m: f64,
    pub est_range_m: f64,
    pub true_velocity_mps: f64,
    pub est_velocity_mps: f64,
    pub method: Method,
    pub r_k: f64,
    pub snr_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub method: Method,
    pub r_k: f64,
    pub snr_db: f64,
    #[serde(rename = "P")]
    pub p: usize,
    pub trial: usize,
    pub t: usize,
    pub residual: f64,
    pub beta: f64,
    pub delta_change: f64,
    pub max_abs_kappa: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ResultRow>,
    pub scatter: Vec<ScatterRow>,
    pub trace: Vec<TraceRow>,
}

/// Score of one method on one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub rmse_velocity: f64,
    pub rmse_range: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub scatter: Vec<ScatterRow>,
    pub trace: Vec<TraceRow>,
}

/// Outcomes of one trial, indexed `[snr][r_k][method]`.
pub type TrialOutcome = Vec<Vec<Vec<Result<Scored, String>>>>;

/// Child stream `stream` of trial `trial` under `master`.
pub fn trial_rng(master: u64, trial: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((trial as u64) << 32) | stream);
    rng
}

const SCENE_STREAM: u64 = 0;

/// Data symbol and targets for one trial.
pub fn draw_scene(s: &Scenario, cfg: &AfdmConfig64, p: usize, trial: usize) -> Result<(DafSymbol<f64>, Vec<Target64>)> {
    let mut rng = trial_rng(s.seed, trial, SCENE_STREAM);
    let x = random_qam16(&mut rng, cfg.n());
    let targets = match &s.targets {
        TargetSpec::Explicit { list } => list
            .iter()
            .map(|t| Ok(target_from_physical(t.range_m, t.velocity_mps, cfg)?.with_gain(random_gain(&mut rng))))
            .collect::<Result<Vec<_>>>()?,
        TargetSpec::Random { min_doppler_gap, .. } => draw_targets(cfg, p, *min_doppler_gap, &mut rng)?,
    };
    Ok((x, targets))
}

/// Received DAF-domain vector at the `snr_idx`-th SNR of the scenario.
pub fn received(
    s: &Scenario,
    cfg: &AfdmConfig64,
    x: &DafSymbol<f64>,
    targets: &[Target64],
    trial: usize,
    snr_idx: usize,
) -> Result<Vec<C64>> {
    let mut rng = trial_rng(s.seed, trial, 1 + snr_idx as u64);
    Ok(observe(x, targets, s.snr_db[snr_idx], cfg, &mut rng)?.values().to_vec())
}

struct Context<'a> {
    s: &'a Scenario,
    cfg: &'a AfdmConfig64,
    sbl: SblOptions64,
    p: usize,
    trial: usize,
}

fn estimate(method: Method, y: &[C64], dict: &Dictionary64, ctx: &Context) -> Result<EstimateResult64> {
    Ok(match method {
        Method::Offgrid => run_offgrid_sbl(y, dict, ctx.cfg, ctx.p, &ctx.sbl)?,
        Method::Ongrid => run_ongrid_baseline(y, dict, ctx.cfg, ctx.p, &ctx.sbl)?,
        Method::IntegerCs => run_integer_cs_baseline(y, dict, ctx.cfg, ctx.p)?,
    })
}

fn score(
    method: Method,
    y: &[C64],
    dict: &Dictionary64,
    truths: &[Target64],
    r_k: f64,
    snr_db: f64,
    ctx: &Context,
) -> Result<Scored> {
    let start = Instant::now();
    let r = estimate(method, y, dict, ctx)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let kind = ctx.s.rmse;
    let matched = pair(&r.targets, truths)?;
    let scatter = r
        .targets
        .iter()
        .zip(&matched)
        .map(|(e, &t)| ScatterRow {
            trial: ctx.trial,
            target_index: t,
            true_range_m: truths[t].range,
            est_range_m: e.range,
            true_velocity_mps: truths[t].velocity,
            est_velocity_mps: e.velocity,
            method,
            r_k,
            snr_db,
        })
        .collect();
    let trace = r
        .trace
        .iter()
        .map(|it| TraceRow {
            method,
            r_k,
            snr_db,
            p: ctx.p,
            trial: ctx.trial,
            t: it.t,
            residual: it.residual,
            beta: it.beta,
            delta_change: it.delta_change,
            max_abs_kappa: it.max_abs_kappa,
        })
        .collect();
    Ok(Scored {
        rmse_velocity: rmse_velocity(&r.targets, truths, kind)?,
        rmse_range: rmse_range(&r.targets, truths, kind)?,
        iterations: r.iterations,
        wall_ms,
        scatter,
        trace,
    })
}

/// Runs every method of `s` on trial `trial` with `p` targets.
pub fn run_trial(s: &Scenario, cfg: &AfdmConfig64, p: usize, trial: usize, opts: &RunOptions) -> TrialOutcome {
    let shape = |e: String| -> TrialOutcome {
        vec![vec![vec![Err(e); s.methods.len()]; s.r_k.len()]; s.snr_db.len()]
    };
    let (x, truths) = match draw_scene(s, cfg, p, trial) {
        Ok(v) => v,
        Err(e) => return shape(e.to_string()),
    };
    let ctx = Context {
        s,
        cfg,
        sbl: SblOptions64 {
            trace: opts.trace,
            ..s.sbl.options()
        },
        p,
        trial,
    };
    let build = |r_k: f64| -> Result<Dictionary64> {
        Ok(build_dictionary(&build_grids(cfg.ell_max(), cfg.alpha_max(), r_k)?, &x, cfg)?)
    };
    let dicts: Vec<Result<Dictionary64, String>> =
        s.r_k.iter().map(|&r| build(r).map_err(|e| e.to_string())).collect();
    let integer = if s.methods.contains(&Method::IntegerCs) {
        Some(build(1.0).map_err(|e| e.to_string()))
    } else {
        None
    };

    let mut out = Vec::with_capacity(s.snr_db.len());
    for (si, &snr) in s.snr_db.iter().enumerate() {
        let y = match received(s, cfg, &x, &truths, trial, si) {
            Ok(y) => y,
            Err(e) => {
                out.push(vec![vec![Err(e.to_string()); s.methods.len()]; s.r_k.len()]);
                continue;
            }
        };
        // the integer-grid method ignores r_k: run it once per SNR
        let cs = integer.as_ref().map(|d| match d {
            Ok(d) => score(Method::IntegerCs, &y, d, &truths, 1.0, snr, &ctx).map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        });
        let mut per_rk = Vec::with_capacity(s.r_k.len());
        for (ri, &r_k) in s.r_k.iter().enumerate() {
            let cells = s
                .methods
                .iter()
                .map(|&m| match (m, &dicts[ri]) {
                    (Method::IntegerCs, _) => cs.clone().expect("integer dictionary built").map(|mut sc| {
                        for row in &mut sc.scatter {
                            row.r_k = r_k;
                        }
                        for row in &mut sc.trace {
                            row.r_k = r_k;
                        }
                        sc
                    }),
                    (_, Ok(d)) => score(m, &y, d, &truths, r_k, snr, &ctx).map_err(|e| e.to_string()),
                    (_, Err(e)) => Err(e.clone()),
                })
                .collect();
            per_rk.push(cells);
        }
        out.push(per_rk);
    }
    out
}

fn run_trials(s: &Scenario, cfg: &AfdmConfig64, p: usize, opts: &RunOptions) -> Vec<TrialOutcome> {
    let one = |t: usize| {
        let o = run_trial(s, cfg, p, t, opts);
        if opts.verbosity >= 2 {
            eprintln!("  P = {p}: trial {}/{}", t + 1, s.trials);
        }
        o
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..s.trials).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..s.trials).map(one).collect()
    }
}

/// Averages one cell over trials; any failed trial turns it into an error row.
pub fn aggregate<'a>(
    method: Method,
    r_k: f64,
    snr_db: f64,
    p: usize,
    cells: impl IntoIterator<Item = &'a Result<Scored, String>>,
) -> ResultRow {
    let mut n = 0usize;
    let (mut v, mut r, mut it, mut ms) = (0.0, 0.0, 0.0, 0.0);
    let mut error = None;
    for c in cells {
        n += 1;
        match c {
            Ok(sc) => {
                v += sc.rmse_velocity;
                r += sc.rmse_range;
                it += sc.iterations as f64;
                ms += sc.wall_ms;
            }
            Err(e) => {
                error.get_or_insert_with(|| e.clone());
            }
        }
    }
    let k = n as f64;
    let ok = error.is_none() && n > 0;
    let mean = |x: f64| ok.then_some(x / k);
    ResultRow {
        method,
        r_k,
        snr_db,
        p,
        trials: n,
        rmse_velocity_mps: mean(v),
        rmse_range_m: mean(r),
        mean_iterations: mean(it),
        mean_wall_ms: mean(ms),
        error,
    }
}

/// Runs the whole scenario. Rows come out in declaration order: method,
/// then r_k, then SNR, then target count.
pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<Report> {
    s.validate()?;
    let cfg = s.system.config()?;
    let counts = s.targets.counts();
    let mut by_count = Vec::with_capacity(counts.len());
    for &p in &counts {
        if opts.verbosity >= 1 {
            eprintln!("{}: P = {p}, {} trials", s.name, s.trials);
        }
        by_count.push(run_trials(s, &cfg, p, opts));
    }

    let mut report = Report::default();
    for (mi, &m) in s.methods.iter().enumerate() {
        for (ri, &r_k) in s.r_k.iter().enumerate() {
            for (si, &snr) in s.snr_db.iter().enumerate() {
                for (pi, &p) in counts.iter().enumerate() {
                    let cells: Vec<&Result<Scored, String>> =
                        by_count[pi].iter().map(|trial| &trial[si][ri][mi]).collect();
                    report.rows.push(aggregate(m, r_k, snr, p, cells.iter().copied()));
                    for sc in cells.into_iter().flatten() {
                        report.scatter.extend(sc.scatter.iter().cloned());
                        report.trace.extend(sc.trace.iter().cloned());
                    }
                }
            }
        }
    }
    Ok(report)
}
