//! Rate adaptation on top of the predictor observation.
//!
//! For each observed `ĝ` the transmitter picks the rate maximising
//! `r · P(ln(1 + g·P) ≥ r | ĝ)`; the long-run throughput averages that
//! conditional optimum over `ĝ ~ Exp(mean 1 − σ²)`. All rates are in nats
//! per channel use (npcu).

use rayon::prelude::*;

use crate::channel::{sample_predictor_gain, ConditionalGainDist, RngStream};
use crate::error::{domain, ensure_nonneg, ensure_positive, Error, Result};
use crate::quadrature::exponential_expectation_rule;
use crate::specfun::exp_e1;

/// Default number of quadrature nodes over `ĝ`.
pub const DEFAULT_QUADRATURE_NODES: usize = 64;
/// Default Monte Carlo sample count over `ĝ`.
pub const DEFAULT_MC_DRAWS: usize = 10_000;

/// SNR search bracket of [`required_snr`], dB.
pub const SNR_BRACKET_DB: (f64, f64) = (-10.0, 60.0);

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Optimal rate for one predictor observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSolution {
    pub r_opt: f64,
    pub success_prob: f64,
    pub conditional_throughput: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Quadrature,
    MonteCarlo,
}

/// How an expectation over `ĝ` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Quadrature {
        nodes: usize,
    },
    MonteCarlo {
        draws: usize,
        seed: u64,
        stream_id: u64,
    },
}

impl Estimator {
    pub fn quadrature() -> Self {
        Estimator::Quadrature {
            nodes: DEFAULT_QUADRATURE_NODES,
        }
    }

    pub fn monte_carlo(seed: u64, stream_id: u64) -> Self {
        Estimator::MonteCarlo {
            draws: DEFAULT_MC_DRAWS,
            seed,
            stream_id,
        }
    }

    /// Same estimator on a different random stream; quadrature is unchanged.
    pub fn with_stream(self, stream_id: u64) -> Self {
        match self {
            Estimator::MonteCarlo { draws, seed, .. } => Estimator::MonteCarlo {
                draws,
                seed,
                stream_id,
            },
            q => q,
        }
    }
}

impl Default for Estimator {
    fn default() -> Self {
        Self::quadrature()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputEstimate {
    pub value: f64,
    /// Zero for quadrature.
    pub std_error: f64,
    pub method: EstimateMethod,
}

/// Upper end of the rate search: `ln(1 + G·P)` with
/// `G = ĝ + 10σ² + 10σ·sqrt(ĝ)`, well above any gain level carrying
/// non-negligible probability.
pub(crate) fn rate_ceiling(g_hat: f64, sigma: f64, snr: f64) -> f64 {
    let g = g_hat + 10.0 * sigma * sigma + 10.0 * sigma * g_hat.sqrt();
    (g * snr).ln_1p()
}

/// Maximises `objective` on `[0, r_max]`: a 64-point scan locates the best
/// cell, then golden-section search refines inside the two neighbouring
/// cells. The objective need not be unimodal over the whole bracket.
pub(crate) fn maximize_rate<F>(mut objective: F, r_max: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const SCAN: usize = 64;
    const TOL: f64 = 1e-9;
    if r_max <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let step = r_max / (SCAN - 1) as f64;
    let mut best = (0.0, objective(0.0)?);
    let mut best_i = 0;
    for i in 1..SCAN {
        let r = i as f64 * step;
        let f = objective(r)?;
        if f > best.1 {
            best = (r, f);
            best_i = i;
        }
    }
    let mut lo = best_i.saturating_sub(1) as f64 * step;
    let mut hi = ((best_i + 1).min(SCAN - 1)) as f64 * step;

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    while hi - lo > TOL {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2)?;
        }
    }
    for cand in [(x1, f1), (x2, f2)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best)
}

fn check_sigma(op: &'static str, sigma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(domain(op, format!("sigma must lie in [0, 1], got {sigma}")))
    }
}

/// Rate maximising `r · (1 − F_{g|ĝ}((e^r − 1)/P))`.
pub fn optimal_rate_given_ghat(g_hat: f64, sigma: f64, snr: f64) -> Result<RateSolution> {
    const OP: &str = "optimal_rate_given_ghat";
    ensure_positive(OP, "P", snr)?;
    let dist = ConditionalGainDist::new(g_hat, sigma)?;
    if sigma == 0.0 {
        let r = (g_hat * snr).ln_1p();
        return Ok(RateSolution {
            r_opt: r,
            success_prob: 1.0,
            conditional_throughput: r,
        });
    }
    let objective = |r: f64| -> Result<f64> { Ok(r * dist.survival(r.exp_m1() / snr)?) };
    let (r_opt, value) = maximize_rate(objective, rate_ceiling(g_hat, sigma, snr))?;
    let success_prob = dist.survival(r_opt.exp_m1() / snr)?;
    Ok(RateSolution {
        r_opt,
        success_prob,
        conditional_throughput: value,
    })
}

/// Outage-limited throughput `E_ĝ[max_r r·P(success | ĝ)]`.
///
/// At `σ = 1` the predictor carries no information and the quadrature path
/// returns [`no_csit_throughput`] directly.
pub fn expected_throughput(
    sigma: f64,
    snr: f64,
    estimator: &Estimator,
) -> Result<ThroughputEstimate> {
    const OP: &str = "expected_throughput";
    ensure_positive(OP, "P", snr)?;
    check_sigma(OP, sigma)?;
    match *estimator {
        Estimator::Quadrature { nodes } => {
            if nodes == 0 {
                return Err(domain(OP, "quadrature needs at least one node"));
            }
            let value = if sigma == 1.0 {
                no_csit_throughput(snr)?
            } else {
                average_over_ghat(sigma, snr, nodes, |g| {
                    Ok(optimal_rate_given_ghat(g, sigma, snr)?.conditional_throughput)
                })?
            };
            Ok(ThroughputEstimate {
                value,
                std_error: 0.0,
                method: EstimateMethod::Quadrature,
            })
        }
        Estimator::MonteCarlo {
            draws,
            seed,
            stream_id,
        } => {
            if draws < 2 {
                return Err(domain(OP, "Monte Carlo needs at least two draws"));
            }
            let mut rng = RngStream::new(seed, stream_id);
            let g_hats = (0..draws)
                .map(|_| sample_predictor_gain(sigma, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let values = g_hats
                .par_iter()
                .map(|&g| Ok(optimal_rate_given_ghat(g, sigma, snr)?.conditional_throughput))
                .collect::<Result<Vec<f64>>>()?;
            let (value, std_error) = mean_and_std_error(&values);
            Ok(ThroughputEstimate {
                value,
                std_error,
                method: EstimateMethod::MonteCarlo,
            })
        }
    }
}

/// `E[f(ĝ)]` for `ĝ ~ Exp(1 − σ²)` on the log-mapped Gauss–Legendre rule,
/// summed in node order. Nodes whose weight cannot move the sum by more
/// than 1e-16 are skipped.
pub(crate) fn average_over_ghat<F>(sigma: f64, snr: f64, nodes: usize, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mean = 1.0 - sigma * sigma;
    if mean == 0.0 {
        return f(0.0);
    }
    let rule = exponential_expectation_rule(nodes, mean, snr * mean);
    let mut total = 0.0;
    for (g, w) in rule.iter() {
        if w * rate_ceiling(g, sigma, snr).max(1.0) < 1e-16 {
            continue;
        }
        total += w * f(g)?;
    }
    Ok(total)
}

pub(crate) fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Best fixed-rate outage throughput over unit-mean Rayleigh fading,
/// `max_r r·exp(−(e^r − 1)/P)`. The maximiser solves `r·e^r = P`.
pub fn no_csit_throughput(snr: f64) -> Result<f64> {
    ensure_positive("no_csit_throughput", "P", snr)?;
    let r = no_csit_rate(snr);
    Ok(r * (-r.exp_m1() / snr).exp())
}

/// Root of `r·e^r = P` (principal Lambert W).
pub fn no_csit_rate(snr: f64) -> f64 {
    // r e^r is convex and increasing; Newton from the right converges
    // monotonically and ln(1 + P) lies right of the root.
    let mut r = snr.ln_1p();
    for _ in 0..100 {
        let e = r.exp();
        let step = (r * e - snr) / (e * (1.0 + r));
        r -= step;
        if step.abs() <= 1e-15 * r.max(1e-300) {
            break;
        }
    }
    r
}

/// Ergodic capacity with perfect transmitter CSI:
/// `E[ln(1 + g·P)] = e^(1/P)·E1(1/P)` for `g ~ Exp(1)`.
pub fn full_csit_throughput(snr: f64) -> Result<f64> {
    ensure_positive("full_csit_throughput", "P", snr)?;
    exp_e1(1.0 / snr)
}

/// Smallest linear SNR meeting `target` npcu, by bisection in dB over
/// [`SNR_BRACKET_DB`] until the bracket is at most `tol_db` wide. Returns
/// the upper end of the final bracket.
pub fn required_snr<F>(target: f64, mut throughput_fn: F, tol_db: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const OP: &str = "required_snr";
    ensure_nonneg(OP, "target", target)?;
    ensure_positive(OP, "tol_db", tol_db)?;
    let (mut lo, mut hi) = SNR_BRACKET_DB;
    let top = throughput_fn(db_to_linear(hi))?;
    if top < target {
        return Err(Error::Unreachable {
            target,
            achieved: top,
            snr_db: hi,
        });
    }
    if throughput_fn(db_to_linear(lo))? >= target {
        return Ok(db_to_linear(lo));
    }
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        if throughput_fn(db_to_linear(mid))? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(db_to_linear(hi))
}
