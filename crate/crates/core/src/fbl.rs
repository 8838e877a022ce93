//! Finite-blocklength link model.
//!
//! Block errors follow the normal approximation for the complex AWGN
//! channel in nats, `ε = Q(sqrt(L/V)·(C − r))` with `C = ln(1 + gP)` and
//! dispersion `V = 1 − (1 + gP)^-2`; the `O(log L / L)` term is omitted.

use crate::channel::{sample_predictor_gain, ConditionalGainDist, RngStream};
use crate::error::{domain, ensure_nonneg, ensure_positive, Result};
use crate::quadrature::gauss_hermite_normal;
use crate::rate_adapt::{
    average_over_ghat, maximize_rate, mean_and_std_error, optimal_rate_given_ghat, rate_ceiling,
    EstimateMethod, RateSolution, ThroughputEstimate, DEFAULT_QUADRATURE_NODES,
};
use crate::specfun::q_tail;

/// Nodes of the 1-D rule over the decoding noise variable.
const NOISE_NODES: usize = 32;
/// Nodes per axis of the 2-D rule over the fading innovation.
const INNOVATION_NODES: usize = 20;

/// Default Monte Carlo sample count for [`fbl_average_error`].
pub const DEFAULT_ERROR_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblConfig {
    pub codeword_length: u64,
    pub rate: f64,
}

impl FblConfig {
    pub fn new(codeword_length: u64, rate: f64) -> Result<Self> {
        check_length("FblConfig::new", codeword_length)?;
        ensure_nonneg("FblConfig::new", "rate", rate)?;
        Ok(Self {
            codeword_length,
            rate,
        })
    }
}

fn check_length(op: &'static str, length: u64) -> Result<()> {
    if length == 0 {
        Err(domain(op, "codeword length must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_sigma(op: &'static str, sigma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(domain(op, format!("sigma must lie in [0, 1], got {sigma}")))
    }
}

/// Channel dispersion `1 − (1 + gP)^-2` in nats².
pub fn dispersion(g: f64, snr: f64) -> f64 {
    dispersion_at_capacity((g * snr).ln_1p())
}

fn dispersion_at_capacity(c: f64) -> f64 {
    -(-2.0 * c).exp_m1()
}

/// Block error probability at gain `g`.
pub fn fbl_error_given_gain(g: f64, snr: f64, cfg: &FblConfig) -> Result<f64> {
    const OP: &str = "fbl_error_given_gain";
    ensure_nonneg(OP, "g", g)?;
    ensure_positive(OP, "P", snr)?;
    check_length(OP, cfg.codeword_length)?;
    ensure_nonneg(OP, "rate", cfg.rate)?;
    Ok(error_at(
        g,
        snr,
        (cfg.codeword_length as f64).sqrt(),
        cfg.rate,
    ))
}

fn error_at(g: f64, snr: f64, sqrt_l: f64, r: f64) -> f64 {
    let c = (g * snr).ln_1p();
    if c == 0.0 {
        return if r > 0.0 { 1.0 } else { 0.0 };
    }
    q_tail(sqrt_l * (c - r) / dispersion_at_capacity(c).sqrt())
}

/// `E[ε(g, r) | ĝ]`, the error probability of a rate chosen before `g` is
/// realized.
pub fn conditional_fbl_error(g_hat: f64, sigma: f64, snr: f64, cfg: &FblConfig) -> Result<f64> {
    const OP: &str = "conditional_fbl_error";
    ensure_positive(OP, "P", snr)?;
    check_length(OP, cfg.codeword_length)?;
    ensure_nonneg(OP, "rate", cfg.rate)?;
    let inner = InnerExpectation::new(g_hat, sigma, snr, cfg.codeword_length)?;
    inner.error(cfg.rate)
}

/// Evaluates `E[ε | ĝ]` for varying rates at fixed `(ĝ, σ, P, L)`.
///
/// With `ε(g) = P(Z > z(g))`, `Z ~ N(0, 1)` and `z` increasing in `g`, the
/// expectation equals both `E_w[ε(g(w))]` over the fading innovation and
/// `E_Z[F(z⁻¹(Z))]` over the noise variable. The first integrand is smooth
/// when the law of `g` is narrow on the scale of the Q transition, the
/// second when it is wide, so the route is picked per `ĝ`.
struct InnerExpectation {
    dist: ConditionalGainDist,
    snr: f64,
    sqrt_l: f64,
    over_noise: bool,
}

impl InnerExpectation {
    fn new(g_hat: f64, sigma: f64, snr: f64, length: u64) -> Result<Self> {
        let dist = ConditionalGainDist::new(g_hat, sigma)?;
        let sqrt_l = (length as f64).sqrt();
        let g_mean = dist.mean();
        let spread_g = sigma * (2.0 * g_hat + sigma * sigma).sqrt();
        let c_mean = (g_mean * snr).ln_1p();
        let slope = sqrt_l / dispersion_at_capacity(c_mean).sqrt() * snr / (1.0 + g_mean * snr);
        Ok(Self {
            dist,
            snr,
            sqrt_l,
            // near g = 0 the dispersion vanishes and ε(g) turns sharp
            over_noise: slope * spread_g >= 1.0 || g_hat < sigma * sigma,
        })
    }

    fn error(&self, r: f64) -> Result<f64> {
        let sigma = self.dist.sigma();
        let g_hat = self.dist.g_hat();
        if sigma == 0.0 {
            return Ok(error_at(g_hat, self.snr, self.sqrt_l, r));
        }
        let total = if self.over_noise {
            let rule = gauss_hermite_normal(NOISE_NODES);
            let mut sum = 0.0;
            for (z, w) in rule.iter() {
                if let Some(c) = capacity_at_noise(z, r, self.sqrt_l) {
                    sum += w * self.dist.cdf(c.exp_m1() / self.snr)?;
                }
            }
            sum
        } else {
            let rule = gauss_hermite_normal(INNOVATION_NODES);
            let scale = sigma * std::f64::consts::FRAC_1_SQRT_2;
            let root = g_hat.sqrt();
            let mut sum = 0.0;
            for (u, wu) in rule.iter() {
                let re = root + scale * u;
                let mut row = 0.0;
                for (v, wv) in rule.iter() {
                    let im = scale * v;
                    row += wv * error_at(re * re + im * im, self.snr, self.sqrt_l, r);
                }
                sum += wu * row;
            }
            sum
        };
        Ok(total.clamp(0.0, 1.0))
    }
}

/// Capacity `c` at which `sqrt(L)·(c − r)/sqrt(V(c)) = z`, or `None` when
/// `z` lies below the range of the left side (only possible for `r = 0`).
fn capacity_at_noise(z: f64, r: f64, sqrt_l: f64) -> Option<f64> {
    let (mut lo, mut hi) = if z >= 0.0 {
        (r, r + z / sqrt_l)
    } else {
        ((r + z / sqrt_l).max(0.0), r)
    };
    if r == 0.0 && z <= 0.0 {
        return None;
    }
    if hi == lo {
        return Some(lo);
    }
    let h = |c: f64| sqrt_l * (c - r) - z * dispersion_at_capacity(c).sqrt();
    let mut c = 0.5 * (lo + hi);
    for _ in 0..100 {
        let v = dispersion_at_capacity(c);
        let f = h(c);
        if f == 0.0 {
            return Some(c);
        }
        if f < 0.0 {
            lo = c;
        } else {
            hi = c;
        }
        let slope = sqrt_l - z * (-2.0 * c).exp() / v.sqrt();
        let mut next = c - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - c).abs() <= 1e-15 * c.max(1e-300) || hi - lo <= 1e-15 * hi {
            return Some(next);
        }
        c = next;
    }
    Some(c)
}

/// Rate maximising `r·(1 − E[ε(g, r) | ĝ])` at blocklength `length`.
pub fn optimal_fbl_rate_given_ghat(
    g_hat: f64,
    sigma: f64,
    snr: f64,
    length: u64,
) -> Result<RateSolution> {
    const OP: &str = "optimal_fbl_rate_given_ghat";
    ensure_positive(OP, "P", snr)?;
    check_length(OP, length)?;
    let inner = InnerExpectation::new(g_hat, sigma, snr, length)?;
    let (r_opt, value) = maximize_rate(
        |r| Ok(r * (1.0 - inner.error(r)?)),
        rate_ceiling(g_hat, sigma, snr),
    )?;
    Ok(RateSolution {
        r_opt,
        success_prob: 1.0 - inner.error(r_opt)?,
        conditional_throughput: value,
    })
}

/// `E_ĝ[max_r r·(1 − E[ε | ĝ])]` by quadrature over `ĝ`.
pub fn fbl_throughput(sigma: f64, snr: f64, length: u64) -> Result<ThroughputEstimate> {
    const OP: &str = "fbl_throughput";
    ensure_positive(OP, "P", snr)?;
    check_sigma(OP, sigma)?;
    check_length(OP, length)?;
    let value = average_over_ghat(sigma, snr, DEFAULT_QUADRATURE_NODES, |g| {
        Ok(optimal_fbl_rate_given_ghat(g, sigma, snr, length)?.conditional_throughput)
    })?;
    Ok(ThroughputEstimate {
        value,
        std_error: 0.0,
        method: EstimateMethod::Quadrature,
    })
}

/// `E_ĝ[r·(1 − E[ε | ĝ])]` for one rate used at every `ĝ`.
pub fn fbl_fixed_rate_throughput(
    sigma: f64,
    snr: f64,
    cfg: &FblConfig,
) -> Result<ThroughputEstimate> {
    const OP: &str = "fbl_fixed_rate_throughput";
    ensure_positive(OP, "P", snr)?;
    check_sigma(OP, sigma)?;
    check_length(OP, cfg.codeword_length)?;
    ensure_nonneg(OP, "rate", cfg.rate)?;
    let value = average_over_ghat(sigma, snr, DEFAULT_QUADRATURE_NODES, |g| {
        let inner = InnerExpectation::new(g, sigma, snr, cfg.codeword_length)?;
        Ok(cfg.rate * (1.0 - inner.error(cfg.rate)?))
    })?;
    Ok(ThroughputEstimate {
        value,
        std_error: 0.0,
        method: EstimateMethod::Quadrature,
    })
}

/// How the transmitter sets its rate from `ĝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatePolicy {
    /// The same rate for every block.
    Fixed(f64),
    /// `ln(1 + ĝP)`, as if the observation were exact.
    Capacity,
    /// The finite-blocklength throughput-optimal rate for the observed `ĝ`.
    ThroughputOptimal,
    /// The outage-optimal rate for the observed `ĝ`, ignoring the blocklength.
    OutageOptimal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub draws: usize,
    pub seed: u64,
    pub stream_id: u64,
}

impl MonteCarloConfig {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            draws: DEFAULT_ERROR_DRAWS,
            seed,
            stream_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Infinite-blocklength error `P(ln(1 + gP) < r)` on the same draws.
    pub outage: f64,
}

/// Average block error over the joint law of `(ĝ, g)` by Monte Carlo.
///
/// Draws depend only on `σ` and the stream, so sweeping `P` with a fixed
/// stream reuses the same channel realizations.
pub fn fbl_average_error(
    sigma: f64,
    snr: f64,
    length: u64,
    policy: RatePolicy,
    mc: &MonteCarloConfig,
) -> Result<ErrorEstimate> {
    const OP: &str = "fbl_average_error";
    ensure_positive(OP, "P", snr)?;
    check_sigma(OP, sigma)?;
    check_length(OP, length)?;
    if mc.draws < 2 {
        return Err(domain(OP, "Monte Carlo needs at least two draws"));
    }
    if let RatePolicy::Fixed(r) = policy {
        ensure_nonneg(OP, "rate", r)?;
    }
    let table = match policy {
        RatePolicy::ThroughputOptimal | RatePolicy::OutageOptimal => {
            Some(RateTable::build(sigma, snr, length, policy)?)
        }
        _ => None,
    };
    let sqrt_l = (length as f64).sqrt();
    let mut rng = RngStream::new(mc.seed, mc.stream_id);
    let mut errors = Vec::with_capacity(mc.draws);
    let mut outages = 0usize;
    for _ in 0..mc.draws {
        let g_hat = sample_predictor_gain(sigma, &mut rng)?;
        let g = ConditionalGainDist::new(g_hat, sigma)?.sample(&mut rng);
        let r = match (policy, &table) {
            (RatePolicy::Fixed(r), _) => r,
            (RatePolicy::Capacity, _) => (g_hat * snr).ln_1p(),
            (_, Some(t)) => t.rate(g_hat)?,
            (_, None) => unreachable!(),
        };
        errors.push(error_at(g, snr, sqrt_l, r));
        if (g * snr).ln_1p() < r {
            outages += 1;
        }
    }
    let (value, std_error) = mean_and_std_error(&errors);
    Ok(ErrorEstimate {
        value,
        std_error,
        outage: outages as f64 / mc.draws as f64,
    })
}

/// Optimal rate tabulated on a quadratic grid over `ĝ`; observations past
/// the grid are solved directly.
struct RateTable {
    sigma: f64,
    snr: f64,
    length: u64,
    policy: RatePolicy,
    g_max: f64,
    points: Vec<(f64, f64)>,
}

impl RateTable {
    const INTERVALS: usize = 64;

    fn build(sigma: f64, snr: f64, length: u64, policy: RatePolicy) -> Result<Self> {
        let g_max = 25.0 * (1.0 - sigma * sigma);
        let mut table = Self {
            sigma,
            snr,
            length,
            policy,
            g_max,
            points: Vec::new(),
        };
        let n = if g_max > 0.0 { Self::INTERVALS } else { 0 };
        for k in 0..=n {
            let t = k as f64 / Self::INTERVALS as f64;
            let g = g_max * t * t;
            let r = table.solve(g)?;
            table.points.push((g, r));
        }
        Ok(table)
    }

    fn solve(&self, g_hat: f64) -> Result<f64> {
        let s = match self.policy {
            RatePolicy::OutageOptimal => optimal_rate_given_ghat(g_hat, self.sigma, self.snr)?,
            _ => optimal_fbl_rate_given_ghat(g_hat, self.sigma, self.snr, self.length)?,
        };
        Ok(s.r_opt)
    }

    fn rate(&self, g_hat: f64) -> Result<f64> {
        if self.points.len() == 1 && g_hat == 0.0 {
            return Ok(self.points[0].1);
        }
        if g_hat >= self.g_max {
            return self.solve(g_hat);
        }
        let t = (g_hat / self.g_max).sqrt() * Self::INTERVALS as f64;
        let k = (t.floor() as usize).min(Self::INTERVALS - 1);
        let (g0, r0) = self.points[k];
        let (g1, r1) = self.points[k + 1];
        Ok(r0 + (r1 - r0) * (g_hat - g0) / (g1 - g0))
    }
}
