//! Numerical substrate: standard normal functions, quadrature rules,
//! orthant probabilities, the bivariate normal CDF and the noncentral
//! chi-square CDF.

mod bivariate;
mod chisq;
pub mod normal;
mod orthant;
pub mod quadrature;

pub use bivariate::bivariate_normal_cdf;
pub use chisq::{gamma_p, gamma_q, noncentral_chi2_cdf};
pub use normal::{inverse_mills, log_std_normal_cdf, std_normal_cdf, std_normal_pdf};
pub use orthant::{j_n, k_1, k_n, log_j_1, log_k_1};
pub use quadrature::{gaussian_expectation, gaussian_expectation_tol, Expectation, QuadratureRule, RuleKind};
