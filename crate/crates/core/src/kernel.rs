//! The innovation kernel: yearly net increase in cambiodiversity.
//!
//! With `M` distinct good types, every subset of size `i` (up to a cutoff)
//! independently yields a new good type with probability `p * alpha_i`, where
//! `alpha_i = 1/(i*theta)^rho` is a decreasing size penalty. The expected
//! yearly increment is therefore
//!
//! ```text
//! dM = p * sum_{i=1..=cutoff} alpha_i * C(M, i)
//! ```
//!
//! The deterministic kernel evaluates this expectation with `M` real-valued
//! (binomials extended by falling factorials); the stochastic kernel samples
//! the actual number of successes for integer `M`. Both blow up in finite
//! time — that is the model's point, so non-finite intermediates are reported
//! as [`KernelError::NonFinite`] rather than panicking, and callers mark the
//! trajectory as diverged.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use thiserror::Error;

/// Largest combination count sampled with an exact binomial draw; above this
/// the per-size success count uses a Poisson draw with the same mean.
pub const BINOMIAL_TRIAL_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum KernelError {
    /// A value left the representable range of f64 (the model blew up).
    #[error("non-finite value in {context}: model diverged")]
    NonFinite { context: &'static str },
    /// Parameters violate the kernel's validity constraints.
    #[error("invalid kernel parameters: {}", violations.join("; "))]
    InvalidParams { violations: Vec<String> },
}

/// The size-penalty schedule `alpha_i = 1/(i*theta)^rho`, zero past `cutoff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSchedule {
    pub theta: f64,
    pub rho: f64,
    /// Largest combination size with non-zero success probability.
    pub cutoff: u32,
}

impl AlphaSchedule {
    pub fn new(theta: f64, rho: f64, cutoff: u32) -> Self {
        Self { theta, rho, cutoff }
    }

    /// Table-style baseline: theta = 6, rho = 2, cutoff = 4.
    pub fn baseline() -> Self {
        Self::new(6.0, 2.0, 4)
    }

    /// `alpha_i` for combination size `i >= 1`.
    pub fn alpha(&self, i: u32) -> f64 {
        debug_assert!(i >= 1);
        if i > self.cutoff {
            0.0
        } else {
            (f64::from(i) * self.theta).powf(self.rho).recip()
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.theta > 0.0) {
            v.push(format!("theta must be positive (got {})", self.theta));
        }
        if !(self.rho > 0.0) {
            v.push(format!("rho must be positive (got {})", self.rho));
        }
        if self.cutoff < 1 {
            v.push("cutoff must be at least 1".to_string());
        }
        v
    }
}

/// Per-combination success scale `p` plus the alpha schedule.
///
/// Validity requires `0 < p * alpha_i < 1` for every `i <= cutoff`; since
/// `alpha` is non-increasing in `i` it suffices to check `i = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub p: f64,
    pub alpha: AlphaSchedule,
}

impl KernelParams {
    /// Validating constructor; the error lists every violated constraint.
    pub fn new(p: f64, alpha: AlphaSchedule) -> Result<Self, KernelError> {
        let params = Self { p, alpha };
        params.validate().map(|()| params)
    }

    /// Bypasses validation. For degenerate experiment setups (e.g. `p = 0`
    /// to freeze innovation); the simulation code accepts these as-is.
    pub fn new_unchecked(p: f64, alpha: AlphaSchedule) -> Self {
        Self { p, alpha }
    }

    /// Table-style baseline: p = 0.0006 over the baseline schedule.
    pub fn baseline() -> Self {
        Self::new(0.0006, AlphaSchedule::baseline()).expect("baseline params are valid")
    }

    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<(), KernelError> {
        let mut violations = self.alpha.violations();
        if !(self.p > 0.0) {
            violations.push(format!("p must be positive (got {})", self.p));
        } else if self.alpha.theta > 0.0 && self.alpha.rho > 0.0 {
            // alpha is non-increasing in i, so i = 1 is the binding case.
            let pa1 = self.p * self.alpha.alpha(1);
            if pa1 >= 1.0 {
                violations.push(format!(
                    "p * alpha_1 = {pa1} must be below 1 for a success probability"
                ));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(KernelError::InvalidParams { violations })
        }
    }
}

/// Real-argument extension of the binomial coefficient `C(m, i)`.
///
/// Uses the falling factorial `m (m-1) ... (m-i+1) / i!` for `m >= i - 1` and
/// clamps to zero below, where the product would turn negative. Agrees with
/// the integer binomial at integer `m` and interpolates smoothly in between,
/// which keeps the deterministic recurrence continuous in `M`.
pub fn generalized_choose(m: f64, i: u32) -> f64 {
    debug_assert!(i >= 1);
    if m < f64::from(i) - 1.0 {
        return 0.0;
    }
    let mut acc = 1.0;
    for k in 0..i {
        acc *= m - f64::from(k);
    }
    acc / factorial(i)
}

fn factorial(i: u32) -> f64 {
    (1..=i).map(f64::from).product()
}

/// Expected yearly increment of cambiodiversity at state `m`.
///
/// Returns [`KernelError::NonFinite`] when the sum overflows f64 — the
/// finite-time blow-up showing up in working precision.
pub fn expected_increment(m: f64, params: &KernelParams) -> Result<f64, KernelError> {
    let value = expected_increment_raw(m, params);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(KernelError::NonFinite {
            context: "expected_increment",
        })
    }
}

fn expected_increment_raw(m: f64, params: &KernelParams) -> f64 {
    let mut sum = 0.0;
    for i in 1..=params.alpha.cutoff {
        sum += params.alpha.alpha(i) * generalized_choose(m, i);
    }
    params.p * sum
}

/// One stochastic draw of the yearly increment for integer `m`.
///
/// Each of the `C(m, i)` size-`i` combinations succeeds independently with
/// probability `p * alpha_i`. Success counts are sampled exactly
/// (binomial) while `C(m, i) <=` [`BINOMIAL_TRIAL_LIMIT`], and by a Poisson
/// draw with mean `p * alpha_i * C(m, i)` above that. The expectation equals
/// [`expected_increment`] in both regimes.
pub fn stochastic_increment<R: Rng + ?Sized>(
    m: u64,
    params: &KernelParams,
    rng: &mut R,
) -> Result<u64, KernelError> {
    let alphas: Vec<f64> = (1..=params.alpha.cutoff)
        .map(|i| params.alpha.alpha(i))
        .collect();
    sample_increment(m, params.p, &alphas, rng)
}

/// Sampling core: success probability for size `i` is `p * alphas[i-1]`.
fn sample_increment<R: Rng + ?Sized>(
    m: u64,
    p: f64,
    alphas: &[f64],
    rng: &mut R,
) -> Result<u64, KernelError> {
    let mut total: u64 = 0;
    for (idx, &alpha_i) in alphas.iter().enumerate() {
        let i = idx as u32 + 1;
        let prob = p * alpha_i;
        if prob == 0.0 {
            continue;
        }
        let draw = match exact_trial_count(m, i) {
            Some(0) => 0,
            Some(n) => Binomial::new(n, prob)
                .map_err(|_| KernelError::NonFinite {
                    context: "binomial success probability",
                })?
                .sample(rng),
            None => {
                let mean = prob * generalized_choose(m as f64, i);
                if !mean.is_finite() {
                    return Err(KernelError::NonFinite {
                        context: "poisson mean",
                    });
                }
                if mean == 0.0 {
                    continue;
                }
                let sampled: f64 = Poisson::new(mean)
                    .map_err(|_| KernelError::NonFinite {
                        context: "poisson mean",
                    })?
                    .sample(rng);
                if sampled >= u64::MAX as f64 {
                    return Err(KernelError::NonFinite {
                        context: "poisson draw",
                    });
                }
                sampled as u64
            }
        };
        total = total.checked_add(draw).ok_or(KernelError::NonFinite {
            context: "increment total",
        })?;
    }
    Ok(total)
}

/// `C(m, i)` as an exact u64 when it is at most [`BINOMIAL_TRIAL_LIMIT`];
/// `None` means "too many combinations, use the Poisson regime".
fn exact_trial_count(m: u64, i: u32) -> Option<u64> {
    if m < u64::from(i) {
        return Some(0);
    }
    let mut acc: u64 = 1;
    for k in 0..u64::from(i) {
        // After step k, acc = C(m, k+1), so the division is exact. A u64
        // overflow in the product means the count is far past the limit,
        // which is exactly the Poisson case.
        acc = acc.checked_mul(m - k)?;
        acc /= k + 1;
    }
    if acc <= BINOMIAL_TRIAL_LIMIT {
        Some(acc)
    } else {
        None
    }
}

/// Closed-form blow-up horizon of the dominant quartic term.
///
/// The continuous-time reading `dM/dt = p * alpha_4 * M^4 / 24` diverges at
/// `t = 8 / (p * alpha_4 * m^3)` from state `m`. Returns `None` when the
/// schedule has no quartic term (`cutoff < 4`).
pub fn blowup_estimate(m: f64, params: &KernelParams) -> Option<f64> {
    let a4 = params.alpha.alpha(4);
    if a4 == 0.0 {
        return None;
    }
    Some(8.0 / (params.p * a4 * m.powi(3)))
}
