//! Spatial-mismatch geometry and the correlated BS–RA channel.
//!
//! The RA channel is `h = sqrt(1 − σ²)·ĥ + σ·q` with `ĥ` the channel seen by
//! the predictor antenna and `q` an independent `CN(0, 1)` draw. Given the
//! predictor observation `ĝ = (1 − σ²)|ĥ|²`, the RA gain `g = |h|²` follows a
//! scaled non-central chi-square law whose CDF is
//! `1 − Q1(sqrt(2ĝ/σ²), sqrt(2x/σ²))`.
//!
//! `σ` is tied to the mismatch distance `d` through the isotropic-scattering
//! (Clarke/Jakes) spatial correlation `J0(2πd/λ)`: `σ² = 1 − J0(2πd/λ)²`.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{domain, ensure_finite, ensure_nonneg, ensure_positive, Result};
use crate::specfun::{marcum_q1_gap, one_minus_bessel_j0, Accuracy};

pub const DEFAULT_PROPAGATION_SPEED: f64 = 3.0e8;

/// Carrier and timing parameters of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConfig {
    /// Hz.
    pub carrier_frequency: f64,
    /// m/s.
    pub propagation_speed: f64,
    /// Time between the PA estimate and the RA transmission, seconds.
    pub processing_time: f64,
}

impl PhysicalConfig {
    pub fn new(
        carrier_frequency: f64,
        propagation_speed: f64,
        processing_time: f64,
    ) -> Result<Self> {
        const OP: &str = "PhysicalConfig::new";
        ensure_positive(OP, "carrier_frequency", carrier_frequency)?;
        ensure_positive(OP, "propagation_speed", propagation_speed)?;
        ensure_positive(OP, "processing_time", processing_time)?;
        Ok(Self {
            carrier_frequency,
            propagation_speed,
            processing_time,
        })
    }

    /// Wavelength in meters.
    pub fn wavelength(&self) -> f64 {
        self.propagation_speed / self.carrier_frequency
    }

    /// Speed (m/s) at which an RA `separation` meters behind the PA lands
    /// exactly on the estimated point.
    pub fn matched_speed(&self, separation: f64) -> f64 {
        separation / self.processing_time
    }
}

impl Default for PhysicalConfig {
    /// 2.68 GHz carrier, 5 ms processing time.
    fn default() -> Self {
        Self {
            carrier_frequency: 2.68e9,
            propagation_speed: DEFAULT_PROPAGATION_SPEED,
            processing_time: 5e-3,
        }
    }
}

/// Distance between where the PA estimated the channel and where the RA is
/// when the data arrives: `|v·T − d_a|`.
pub fn mismatch_distance(speed: f64, processing_time: f64, separation: f64) -> Result<f64> {
    const OP: &str = "mismatch_distance";
    ensure_nonneg(OP, "v", speed)?;
    ensure_positive(OP, "T", processing_time)?;
    ensure_positive(OP, "d_a", separation)?;
    Ok((speed * processing_time - separation).abs())
}

/// Prediction-error weight `σ = sqrt(1 − J0(2πd/λ)²)`.
pub fn sigma_from_distance(distance: f64, wavelength: f64) -> Result<f64> {
    const OP: &str = "sigma_from_distance";
    ensure_nonneg(OP, "d", distance)?;
    ensure_positive(OP, "lambda", wavelength)?;
    let x = 2.0 * PI * distance / wavelength;
    let gap = one_minus_bessel_j0(x)?;
    // 1 − J0² = (1 − J0)(1 + J0)
    let var = (gap * (2.0 - gap)).clamp(0.0, 1.0);
    Ok(var.sqrt())
}

/// Mismatch distance and the resulting `σ` for one RA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchState {
    pub distance: f64,
    pub sigma: f64,
}

impl MismatchState {
    pub fn from_geometry(speed: f64, separation: f64, phys: &PhysicalConfig) -> Result<Self> {
        let distance = mismatch_distance(speed, phys.processing_time, separation)?;
        let sigma = sigma_from_distance(distance, phys.wavelength())?;
        Ok(Self { distance, sigma })
    }
}

fn check_sigma(op: &'static str, sigma: f64) -> Result<()> {
    ensure_finite(op, "sigma", sigma)?;
    if (0.0..=1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(domain(op, format!("sigma must lie in [0, 1], got {sigma}")))
    }
}

/// Law of the RA gain `g` given the predictor observation `ĝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalGainDist {
    g_hat: f64,
    sigma: f64,
}

impl ConditionalGainDist {
    pub fn new(g_hat: f64, sigma: f64) -> Result<Self> {
        ensure_nonneg("ConditionalGainDist::new", "g_hat", g_hat)?;
        check_sigma("ConditionalGainDist::new", sigma)?;
        Ok(Self { g_hat, sigma })
    }

    pub fn g_hat(&self) -> f64 {
        self.g_hat
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `E[g | ĝ] = ĝ + σ²`.
    pub fn mean(&self) -> f64 {
        self.g_hat + self.sigma * self.sigma
    }

    /// `P(g ≤ x | ĝ)`. With `σ = 0` the law is a unit step at `ĝ`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.survival(x)?)
    }

    /// `P(g > x | ĝ)`, the Marcum-Q form of the law.
    pub fn survival(&self, x: f64) -> Result<f64> {
        ensure_nonneg("conditional_gain_cdf", "x", x)?;
        if self.sigma == 0.0 {
            return Ok(if x >= self.g_hat { 0.0 } else { 1.0 });
        }
        let root_g = (2.0 * self.g_hat).sqrt();
        let root_x = (2.0 * x).sqrt();
        let a = root_g / self.sigma;
        let b = root_x / self.sigma;
        let denom = root_x + root_g;
        let gap = if denom > 0.0 {
            2.0 * (x - self.g_hat) / denom / self.sigma
        } else {
            0.0
        };
        marcum_q1_gap(a, b, gap, &Accuracy::default())
    }

    /// Draws `g = |sqrt(ĝ) + σ·w|²` with `w ~ CN(0, 1)`.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        if self.sigma == 0.0 {
            return self.g_hat;
        }
        let scale = self.sigma * std::f64::consts::FRAC_1_SQRT_2;
        let re = self.g_hat.sqrt() + scale * rng.standard_normal();
        let im = scale * rng.standard_normal();
        re * re + im * im
    }
}

/// Free-function form of [`ConditionalGainDist::cdf`].
pub fn conditional_gain_cdf(dist: &ConditionalGainDist, x: f64) -> Result<f64> {
    dist.cdf(x)
}

/// Free-function form of [`ConditionalGainDist::sample`].
pub fn sample_conditional_gain(dist: &ConditionalGainDist, rng: &mut RngStream) -> f64 {
    dist.sample(rng)
}

/// Draws the predictor observation `ĝ = (1 − σ²)|ĥ|²`, i.e. an exponential
/// variable with mean `1 − σ²`.
pub fn sample_predictor_gain(sigma: f64, rng: &mut RngStream) -> Result<f64> {
    check_sigma("sample_predictor_gain", sigma)?;
    let mean = 1.0 - sigma * sigma;
    if mean == 0.0 {
        return Ok(0.0);
    }
    Ok(mean * rng.exponential())
}

/// Seeded random stream. Identical `(seed, stream_id)` pairs reproduce
/// identical draws; distinct stream ids are independent ChaCha streams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Unit-mean exponential draw.
    pub fn exponential(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lambda() -> f64 {
        PhysicalConfig::default().wavelength()
    }

    #[test]
    fn mismatch_examples() {
        let t = 5e-3;
        let d_a = 1.5 * lambda();
        assert_eq!(mismatch_distance(0.0, t, d_a).unwrap(), d_a);
        let v_star = d_a / t;
        assert!((v_star - 33.582_089_552_238_8).abs() < 1e-9);
        assert!((v_star * 3.6 - 120.90).abs() < 0.01);
        assert!(mismatch_distance(v_star, t, d_a).unwrap() < 1e-15);
        let d = mismatch_distance(124.0 / 3.6, t, d_a).unwrap();
        assert!((d - 4.31e-3).abs() < 5e-6, "{d}");
        assert!(mismatch_distance(-1.0, t, d_a).is_err());
        assert!(mismatch_distance(1.0, 0.0, d_a).is_err());
    }

    #[test]
    fn mismatch_is_symmetric_about_matched_speed() {
        let t = 5e-3;
        let d_a = 1.5 * lambda();
        let v_star = d_a / t;
        for delta in [0.1, 1.0, 5.0, 20.0] {
            let up = mismatch_distance(v_star + delta, t, d_a).unwrap();
            let down = mismatch_distance(v_star - delta, t, d_a).unwrap();
            assert!((up - down).abs() < 1e-15);
        }
    }

    #[test]
    fn sigma_examples() {
        let lam = lambda();
        assert_eq!(sigma_from_distance(0.0, lam).unwrap(), 0.0);
        assert!((sigma_from_distance(0.38274 * lam, lam).unwrap() - 1.0).abs() < 1e-6);
        // J0(π) = −0.30424217764...
        let want = (1.0f64 - 0.304_242_177_644_093_9f64.powi(2)).sqrt();
        assert!((sigma_from_distance(0.5 * lam, lam).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.9526).abs() < 1e-4);
        assert!(sigma_from_distance(-1.0, lam).is_err());
        assert!(sigma_from_distance(1.0, 0.0).is_err());
    }

    #[test]
    fn sigma_increases_up_to_first_zero() {
        let lam = lambda();
        let mut prev = -1.0;
        for i in 0..=400 {
            let d = 0.38274 * lam * i as f64 / 400.0;
            let s = sigma_from_distance(d, lam).unwrap();
            assert!(s > prev, "i={i}");
            prev = s;
        }
    }

    #[test]
    fn sigma_small_distance_is_relatively_accurate() {
        // σ ≈ x/√2 for small x = 2πd/λ
        let lam = lambda();
        let d = 1e-9;
        let x = 2.0 * PI * d / lam;
        let s = sigma_from_distance(d, lam).unwrap();
        assert!((s / (x / 2f64.sqrt()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cdf_edges() {
        let dist = ConditionalGainDist::new(1.3, 0.4).unwrap();
        assert_eq!(dist.cdf(0.0).unwrap(), 0.0);
        assert!(dist.cdf(-0.1).is_err());
        let step = ConditionalGainDist::new(2.0, 0.0).unwrap();
        assert_eq!(step.cdf(1.9).unwrap(), 0.0);
        assert_eq!(step.cdf(2.1).unwrap(), 1.0);
        assert!(ConditionalGainDist::new(1.0, 1.1).is_err());
        assert!(ConditionalGainDist::new(-1.0, 0.5).is_err());
    }

    #[test]
    fn cdf_is_monotone_and_saturates() {
        for &(g, s) in &[(0.0, 1.0), (0.25, 0.3), (4.0, 0.95), (1.0, 0.01)] {
            let dist = ConditionalGainDist::new(g, s).unwrap();
            let mut prev = 0.0;
            for i in 0..200 {
                let x = i as f64 * 0.05;
                let f = dist.cdf(x).unwrap();
                assert!(f >= prev - 1e-12, "g={g} s={s} x={x}");
                prev = f;
            }
            assert!(dist.cdf(200.0).unwrap() > 1.0 - 1e-10);
        }
    }

    #[test]
    fn near_degenerate_law_stays_accurate() {
        // σ = 1e-9: the law is N(ĝ, 2σ²ĝ) to first order
        let g = 1.5;
        let s = 1e-9;
        let dist = ConditionalGainDist::new(g, s).unwrap();
        let sd = s * (2.0 * g).sqrt();
        let f = dist.cdf(g + sd).unwrap();
        assert!((f - 0.841_344_746).abs() < 1e-6, "{f}");
        assert!((dist.cdf(g).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn sampler_degenerate_cases() {
        let mut rng = RngStream::new(1, 0);
        let d = ConditionalGainDist::new(0.7, 0.0).unwrap();
        assert_eq!(d.sample(&mut rng), 0.7);
        assert_eq!(sample_predictor_gain(1.0, &mut rng).unwrap(), 0.0);
        assert!(sample_predictor_gain(1.5, &mut rng).is_err());
    }

    #[test]
    fn rng_streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut c = RngStream::new(7, 4);
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..4).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_eq!((a.seed(), a.stream_id()), (7, 3));
    }
}
