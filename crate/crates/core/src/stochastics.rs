//! Random variates for one simulation run.
//!
//! Every run owns a single [`RngStream`] (xoshiro256++ seeded through
//! SplitMix64). Each sampler consumes exactly one uniform draw and maps it
//! through the inverse CDF of its distribution, so the number of draws per
//! sampler call is fixed:
//!
//! | sampler               | transform                                        |
//! |-----------------------|--------------------------------------------------|
//! | illness gap           | exponential, `-ln(u) / rate`                     |
//! | illness family        | categorical, cumulative search                   |
//! | seriousness           | triangular `(0, mode, 1)`, closed-form inverse   |
//! | duration              | log-normal, `exp(mu + sigma * Phi^-1(u))`        |
//! | willingness           | Weibull shape 2, `q * sqrt(-ln(u))`              |
//! | arrival deviation     | normal, `mu + sigma * Phi^-1(u)`                 |
//! | walk-in arrival       | Beta(1.93, 2.94), tabulated inverse + Newton     |
//! | service time          | log-normal minutes + 1                           |
//! | bernoulli             | `u < p`                                          |

use std::sync::OnceLock;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use statrs::function::beta::{beta_reg, inv_beta_reg, ln_beta};
use statrs::function::erf::erfc_inv;

use crate::time::{TimePoint, DAYS_PER_YEAR, MINUTE};

/// sdlog of illness durations.
pub const DURATION_SDLOG: f64 = 0.3;
/// Weibull shape of the willingness to wait.
pub const WILLINGNESS_SHAPE: f64 = 2.0;
/// Gamma(1 + 1/2) = sqrt(pi) / 2.
pub const GAMMA_ONE_AND_HALF: f64 = 0.886_226_925_452_758;
pub const ARRIVAL_DEVIATION_MEAN_MIN: f64 = -5.0;
pub const ARRIVAL_DEVIATION_SD_MIN: f64 = 6.0;
pub const WALKIN_BETA_P: f64 = 1.93;
pub const WALKIN_BETA_Q: f64 = 2.94;
pub const APPOINTMENT_SERVICE_MEANLOG: f64 = 1.82;
pub const APPOINTMENT_SERVICE_SDLOG: f64 = 0.692;
pub const WALKIN_SERVICE_MEANLOG: f64 = 1.254;
pub const WALKIN_SERVICE_SDLOG: f64 = 0.723;
/// Transition time added to every service time, in minutes.
pub const TRANSITION_MINUTES: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("annual illness rate must be non-negative, got {0}")]
    NegativeRate(f64),
    #[error("probabilities must sum to 1 (got {0})")]
    Unnormalized(f64),
    #[error("mode must lie in [0, 1], got {0}")]
    ModeOutOfRange(f64),
    #[error("expected duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("expected willingness must be non-negative, got {0}")]
    NegativeWillingness(f64),
    #[error("probability must lie in [0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("inverted interval [{0}, {1}]")]
    InvertedInterval(f64, f64),
}

/// Which service-time distribution applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ServiceKind {
    Appointment,
    WalkIn,
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Inverse CDF of a triangular distribution on `[0, 1]`.
pub fn triangular_quantile(mode: f64, u: f64) -> f64 {
    if u < mode {
        (u * mode).sqrt()
    } else {
        1.0 - ((1.0 - u) * (1.0 - mode)).sqrt()
    }
}

/// Scale of the Weibull(shape 2) distribution with the given mean.
pub fn willingness_scale(expected_days: f64) -> f64 {
    expected_days / GAMMA_ONE_AND_HALF
}

/// Tabulated inverse CDF of a beta distribution, refined by Newton steps on
/// the regularized incomplete beta function.
#[derive(Debug)]
pub struct BetaQuantiles {
    a: f64,
    b: f64,
    ln_norm: f64,
    knots: Vec<f64>,
}

impl BetaQuantiles {
    const KNOTS: usize = 2048;

    pub fn new(a: f64, b: f64) -> Self {
        let knots = (0..=Self::KNOTS)
            .map(|i| match i {
                0 => 0.0,
                i if i == Self::KNOTS => 1.0,
                i => inv_beta_reg(a, b, i as f64 / Self::KNOTS as f64),
            })
            .collect();
        BetaQuantiles {
            a,
            b,
            ln_norm: ln_beta(a, b),
            knots,
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        ((self.a - 1.0) * x.ln() + (self.b - 1.0) * (1.0 - x).ln() - self.ln_norm).exp()
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let scaled = u * Self::KNOTS as f64;
        let idx = (scaled.floor() as usize).min(Self::KNOTS - 1);
        let (lo, hi) = (self.knots[idx], self.knots[idx + 1]);
        let mut x = lo + (hi - lo) * (scaled - idx as f64);
        for _ in 0..4 {
            if x <= 0.0 || x >= 1.0 {
                break;
            }
            let step = (beta_reg(self.a, self.b, x) - u) / self.pdf(x);
            if !step.is_finite() {
                break;
            }
            x = (x - step).clamp(lo, hi);
            if step.abs() < 1e-13 {
                break;
            }
        }
        x
    }
}

fn walkin_beta() -> &'static BetaQuantiles {
    static TABLE: OnceLock<BetaQuantiles> = OnceLock::new();
    TABLE.get_or_init(|| BetaQuantiles::new(WALKIN_BETA_P, WALKIN_BETA_Q))
}

/// The per-run random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    rng: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// `rand(x)`: uniform on `[0, x)`.
    pub fn uniform_below(&mut self, x: f64) -> f64 {
        self.uniform() * x
    }

    /// Days until the next acute illness; infinite for a zero rate.
    pub fn sample_illness_gap(&mut self, annual_rate: f64) -> Result<f64, SamplingError> {
        if annual_rate.is_nan() || annual_rate < 0.0 {
            return Err(SamplingError::NegativeRate(annual_rate));
        }
        if annual_rate == 0.0 {
            return Ok(f64::INFINITY);
        }
        let u = self.uniform_open();
        Ok(-u.ln() / (annual_rate / DAYS_PER_YEAR))
    }

    /// Index drawn from a probability row that must sum to one.
    pub fn sample_categorical(&mut self, probabilities: &[f64]) -> Result<usize, SamplingError> {
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 || probabilities.iter().any(|p| *p < 0.0) {
            return Err(SamplingError::Unnormalized(total));
        }
        let u = self.uniform();
        Ok(categorical_index(probabilities, u))
    }

    pub fn sample_seriousness(&mut self, mode: f64) -> Result<f64, SamplingError> {
        if !(0.0..=1.0).contains(&mode) {
            return Err(SamplingError::ModeOutOfRange(mode));
        }
        let u = self.uniform();
        Ok(triangular_quantile(mode, u))
    }

    /// Log-normal draw with mean `expected_days` and sdlog 0.3.
    pub fn sample_duration(&mut self, expected_days: f64) -> Result<f64, SamplingError> {
        if !(expected_days > 0.0) {
            return Err(SamplingError::NonPositiveDuration(expected_days));
        }
        let mu = expected_days.ln() - DURATION_SDLOG * DURATION_SDLOG / 2.0;
        let z = normal_quantile(self.uniform_open());
        Ok((mu + DURATION_SDLOG * z).exp())
    }

    /// Weibull(shape 2) draw with mean `expected_days`.
    pub fn sample_willingness(&mut self, expected_days: f64) -> Result<f64, SamplingError> {
        if expected_days.is_nan() || expected_days < 0.0 {
            return Err(SamplingError::NegativeWillingness(expected_days));
        }
        let u = self.uniform_open();
        Ok(willingness_scale(expected_days) * (-u.ln()).powf(1.0 / WILLINGNESS_SHAPE))
    }

    /// Signed deviation of an appointment arrival from its scheduled time, in days.
    pub fn sample_arrival_deviation(&mut self) -> f64 {
        let z = normal_quantile(self.uniform_open());
        (ARRIVAL_DEVIATION_MEAN_MIN + ARRIVAL_DEVIATION_SD_MIN * z) * MINUTE
    }

    pub fn sample_walkin_arrival(
        &mut self,
        start: TimePoint,
        end: TimePoint,
    ) -> Result<TimePoint, SamplingError> {
        if end < start {
            return Err(SamplingError::InvertedInterval(start.days(), end.days()));
        }
        let x = walkin_beta().quantile(self.uniform());
        Ok((start + x * (end - start)).min(end))
    }

    /// Service time in days, including the transition minute.
    pub fn sample_service_time(&mut self, kind: ServiceKind) -> f64 {
        let (mu, sigma) = match kind {
            ServiceKind::Appointment => (APPOINTMENT_SERVICE_MEANLOG, APPOINTMENT_SERVICE_SDLOG),
            ServiceKind::WalkIn => (WALKIN_SERVICE_MEANLOG, WALKIN_SERVICE_SDLOG),
        };
        let z = normal_quantile(self.uniform_open());
        ((mu + sigma * z).exp() + TRANSITION_MINUTES) * MINUTE
    }

    pub fn bernoulli(&mut self, p: f64) -> Result<bool, SamplingError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SamplingError::ProbabilityOutOfRange(p));
        }
        Ok(self.uniform() < p)
    }
}

fn categorical_index(probabilities: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding slack: fall back to the last positive entry.
    probabilities.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Source of the random quantities the engine consumes.
///
/// Parameters reaching these methods have been validated with the scenario,
/// so the methods are infallible. [`RngStream`] is the production
/// implementation; tests substitute scripted values to hand-trace runs.
pub trait Variates {
    fn uniform_below(&mut self, x: f64) -> f64;
    fn illness_gap(&mut self, annual_rate: f64) -> f64;
    fn illness_family(&mut self, probabilities: &[f64]) -> usize;
    fn seriousness(&mut self, mode: f64) -> f64;
    fn duration(&mut self, expected_days: f64) -> f64;
    fn willingness(&mut self, expected_days: f64) -> f64;
    fn arrival_deviation(&mut self) -> f64;
    fn walkin_arrival(&mut self, start: TimePoint, end: TimePoint) -> TimePoint;
    fn service_time(&mut self, kind: ServiceKind) -> f64;
    fn bernoulli(&mut self, p: f64) -> bool;
}

impl Variates for RngStream {
    fn uniform_below(&mut self, x: f64) -> f64 {
        RngStream::uniform_below(self, x)
    }

    fn illness_gap(&mut self, annual_rate: f64) -> f64 {
        self.sample_illness_gap(annual_rate).expect("validated illness rate")
    }

    fn illness_family(&mut self, probabilities: &[f64]) -> usize {
        let u = self.uniform();
        categorical_index(probabilities, u)
    }

    fn seriousness(&mut self, mode: f64) -> f64 {
        self.sample_seriousness(mode).expect("validated health condition")
    }

    fn duration(&mut self, expected_days: f64) -> f64 {
        self.sample_duration(expected_days).expect("validated expected duration")
    }

    fn willingness(&mut self, expected_days: f64) -> f64 {
        self.sample_willingness(expected_days).expect("validated expected willingness")
    }

    fn arrival_deviation(&mut self) -> f64 {
        self.sample_arrival_deviation()
    }

    fn walkin_arrival(&mut self, start: TimePoint, end: TimePoint) -> TimePoint {
        self.sample_walkin_arrival(start, end).expect("walk-in interval ordered")
    }

    fn service_time(&mut self, kind: ServiceKind) -> f64 {
        self.sample_service_time(kind)
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        RngStream::bernoulli(self, p).expect("validated probability")
    }
}

/// Beta quantile for arbitrary shapes (used by population synthesis).
pub fn beta_quantile(a: f64, b: f64, u: f64) -> f64 {
    inv_beta_reg(a, b, u)
}
