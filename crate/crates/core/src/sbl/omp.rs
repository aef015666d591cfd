use num_complex::Complex;

use crate::afdm::AfdmConfig;
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::{dotc, CMat, Cholesky};
use crate::scalar::{norm_sqr, Real};

use super::{estimates_from_support, EstimateResult};

/// Integer-Doppler compressed-sensing baseline: orthogonal matching pursuit
/// on a dictionary built with `r_k = 1`. Picks `p` atoms by normalized
/// residual correlation and refits all gains by least squares after each pick.
pub fn run_integer_cs_baseline<T: Real>(
    y: &[Complex<T>],
    dict: &Dictionary<T>,
    cfg: &AfdmConfig<T>,
    p: usize,
) -> Result<EstimateResult<T>> {
    if dict.grid().r_k() != T::one() {
        return Err(Error::InvalidParameter(format!(
            "integer-Doppler baseline needs an r_k = 1 dictionary, got r_k = {}",
            dict.grid().r_k()
        )));
    }
    if y.len() != dict.n() {
        return Err(Error::DimensionMismatch {
            expected: dict.n(),
            got: y.len(),
        });
    }
    if p == 0 || p > dict.len() {
        return Err(Error::InvalidParameter(format!("P = {p} out of range")));
    }
    let a = dict.a();
    let norms: Vec<T> = (0..a.cols()).map(|j| norm_sqr(a.col(j)).sqrt()).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(p);
    let mut gains: Vec<Complex<T>> = Vec::new();
    let mut residual = y.to_vec();

    for _ in 0..p {
        let mut best: Option<(usize, T)> = None;
        for j in 0..a.cols() {
            if chosen.contains(&j) || norms[j] == T::zero() {
                continue;
            }
            let score = dotc(a.col(j), &residual).norm() / norms[j];
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        chosen.push(j);

        let cols: Vec<Vec<Complex<T>>> = chosen.iter().map(|&c| a.col(c).to_vec()).collect();
        let sub = CMat::from_columns(a.rows(), &cols);
        let gram = sub.adjoint_matmul(&sub);
        gains = Cholesky::new(gram)?.solve(&sub.adjoint_mul_vec(y));
        let fit = sub.mul_vec(&gains);
        residual = y.iter().zip(&fit).map(|(u, v)| *u - *v).collect();
    }

    let mut mu = vec![Complex::new(T::zero(), T::zero()); dict.len()];
    for (&j, &g) in chosen.iter().zip(&gains) {
        mu[j] = g;
    }
    let kappa = vec![T::zero(); dict.len()];
    let mut support = chosen.clone();
    support.sort_unstable();
    Ok(EstimateResult {
        targets: estimates_from_support(&support, &mu, &kappa, dict, cfg),
        iterations: chosen.len(),
        residual: norm_sqr(&residual),
        converged: true,
        beta: T::zero(),
        trace: Vec::new(),
    })
}
