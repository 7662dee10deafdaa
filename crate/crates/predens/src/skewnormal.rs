//! Generalized Balakrishnan skew-normal law `SN(n, a0, a1, xi, tau)` with
//! density proportional to `phi((t-xi)/tau) Phi(a0 + a1 (t-xi)/tau)^n`, and
//! the interval variant where the `Phi` power is replaced by a power of a
//! `Phi` difference.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{finite, positive, Error, Result};
use crate::rng::stream;
use crate::special::normal::{log_cdf, log_cdf_diff, log_pdf, mills_ratio, pdf};
use crate::special::{j_n, k_n, log_j_1, log_k_1};

/// Samplers refuse laws whose acceptance rate would fall below this.
const MIN_ACCEPTANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct SkewNormalGB {
    n: u32,
    alpha0: f64,
    alpha1: f64,
    xi: f64,
    tau: f64,
    log_norm: f64,
}

impl SkewNormalGB {
    pub fn new(n: u32, alpha0: f64, alpha1: f64, xi: f64, tau: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("power n must be at least 1".into()));
        }
        finite("alpha0", alpha0)?;
        finite("alpha1", alpha1)?;
        finite("xi", xi)?;
        positive("tau", tau)?;
        Ok(Self { n, alpha0, alpha1, xi, tau, log_norm: log_k(n, alpha0, alpha1)? })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `K_n(alpha0, alpha1)`.
    pub fn normalizer(&self) -> f64 {
        self.log_norm.exp()
    }

    pub fn log_pdf(&self, t: f64) -> f64 {
        let z = (t - self.xi) / self.tau;
        log_pdf(z) - self.tau.ln() + self.n as f64 * log_cdf(self.alpha0 + self.alpha1 * z) - self.log_norm
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.log_pdf(t).exp()
    }

    pub fn mean(&self) -> Result<f64> {
        let s = (1.0 + self.alpha1 * self.alpha1).sqrt();
        let w = if self.n == 1 {
            self.alpha1 / s * mills_ratio(self.alpha0 / s)
        } else {
            let inner = k_n(self.n - 1, self.alpha0 / (s * s), self.alpha1 / s)?;
            self.n as f64 * self.alpha1 / s * pdf(self.alpha0 / s) * inner / self.normalizer()
        };
        Ok(self.xi + self.tau * w)
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        Ok(self.sample_counting(count, seed)?.0)
    }

    /// Draws plus the number of proposals consumed.
    pub fn sample_counting(&self, count: usize, seed: u64) -> Result<(Vec<f64>, u64)> {
        let nf = self.n as f64;
        rejection_sample(self.normalizer(), count, seed, |z| nf * log_cdf(self.alpha0 + self.alpha1 * z))
            .map(|(z, tries)| (z.into_iter().map(|z| self.xi + self.tau * z).collect(), tries))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewNormalInterval {
    n: u32,
    alpha0: f64,
    alpha1: f64,
    alpha2: f64,
    xi: f64,
    tau: f64,
    log_norm: f64,
}

impl SkewNormalInterval {
    pub fn new(n: u32, alpha0: f64, alpha1: f64, alpha2: f64, xi: f64, tau: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("power n must be at least 1".into()));
        }
        finite("alpha0", alpha0)?;
        finite("alpha1", alpha1)?;
        finite("alpha2", alpha2)?;
        finite("xi", xi)?;
        positive("tau", tau)?;
        if alpha0 <= alpha2 {
            return Err(Error::InvalidArgument(format!("need alpha0 > alpha2, got {alpha0} <= {alpha2}")));
        }
        let log_norm = if n == 1 { log_j_1(alpha0, alpha1, alpha2) } else { j_n(n, alpha0, alpha1, alpha2)?.ln() };
        Ok(Self { n, alpha0, alpha1, alpha2, xi, tau, log_norm })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `J_n(alpha0, alpha1, alpha2)`.
    pub fn normalizer(&self) -> f64 {
        self.log_norm.exp()
    }

    pub fn log_pdf(&self, t: f64) -> f64 {
        let z = (t - self.xi) / self.tau;
        let shift = self.alpha1 * z;
        log_pdf(z) - self.tau.ln() + self.n as f64 * log_cdf_diff(self.alpha2 + shift, self.alpha0 + shift)
            - self.log_norm
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.log_pdf(t).exp()
    }

    /// Mean; only the `n = 1` member has a closed form.
    pub fn mean(&self) -> Result<f64> {
        if self.n != 1 {
            return Err(Error::Unsupported("interval skew-normal mean is available for n = 1 only".into()));
        }
        let s = (1.0 + self.alpha1 * self.alpha1).sqrt();
        let (u, v) = (self.alpha0 / s, self.alpha2 / s);
        let log_mass = log_cdf_diff(v, u);
        let ratio = (log_pdf(u) - log_mass).exp() - (log_pdf(v) - log_mass).exp();
        Ok(self.xi + self.tau * self.alpha1 / s * ratio)
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        Ok(self.sample_counting(count, seed)?.0)
    }

    pub fn sample_counting(&self, count: usize, seed: u64) -> Result<(Vec<f64>, u64)> {
        let nf = self.n as f64;
        rejection_sample(self.normalizer(), count, seed, |z| {
            let shift = self.alpha1 * z;
            nf * log_cdf_diff(self.alpha2 + shift, self.alpha0 + shift)
        })
        .map(|(z, tries)| (z.into_iter().map(|z| self.xi + self.tau * z).collect(), tries))
    }
}

fn log_k(n: u32, a0: f64, a1: f64) -> Result<f64> {
    if n == 1 {
        Ok(log_k_1(a0, a1))
    } else {
        Ok(k_n(n, a0, a1)?.ln())
    }
}

/// Standard normal proposals accepted with probability `exp(log_accept(z))`.
fn rejection_sample(
    acceptance: f64,
    count: usize,
    seed: u64,
    log_accept: impl Fn(f64) -> f64,
) -> Result<(Vec<f64>, u64)> {
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::InvalidArgument(format!(
            "acceptance rate {acceptance:e} is too small for rejection sampling"
        )));
    }
    let mut rng = stream(seed, 0);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0u64;
    while out.len() < count {
        tries += 1;
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        if u.ln() < log_accept(z) {
            out.push(z);
        }
    }
    Ok((out, tries))
}
