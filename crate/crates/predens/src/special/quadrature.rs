//! Gauss–Hermite (probabilist normalization) and Gauss–Legendre rules, and
//! the escalating Gaussian expectation used throughout the crate.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Orders tried, in sequence, by [`gaussian_expectation`].
pub const HERMITE_ORDERS: [usize; 3] = [64, 128, 256];
/// Default agreement required between successive orders.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Weight `phi(z)`, total mass 1.
    GaussHermiteProbabilist,
    /// Weight 1 on `[-1, 1]`, total mass 2.
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: RuleKind,
}

impl QuadratureRule {
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("rule order must be at least 1".into()));
        }
        let (nodes, weights) = hermite_physicist(order);
        let scale = 1.0 / PI.sqrt();
        Ok(Self {
            nodes: nodes.iter().map(|z| z * std::f64::consts::SQRT_2).collect(),
            weights: weights.iter().map(|w| w * scale).collect(),
            kind: RuleKind::GaussHermiteProbabilist,
        })
    }

    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("rule order must be at least 1".into()));
        }
        let (nodes, weights) = legendre(order);
        Ok(Self { nodes, weights, kind: RuleKind::GaussLegendre })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Weighted node sum `sum_i w_i f(x_i)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Legendre rule mapped onto `[a, b]`.
    pub fn integrate_on(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        debug_assert_eq!(self.kind, RuleKind::GaussLegendre);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.integrate(|t| f(mid + half * t))
    }
}

/// Shared Gauss–Hermite rule; orders in [`HERMITE_ORDERS`] are built once.
pub fn hermite(order: usize) -> &'static QuadratureRule {
    static CACHE: [OnceLock<QuadratureRule>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = HERMITE_ORDERS
        .iter()
        .position(|&o| o == order)
        .unwrap_or_else(|| panic!("no cached Hermite rule of order {order}"));
    CACHE[slot].get_or_init(|| QuadratureRule::gauss_hermite(order).expect("positive order"))
}

/// Shared Gauss–Legendre rule of order 20 or 64.
pub fn legendre_rule(order: usize) -> &'static QuadratureRule {
    static L20: OnceLock<QuadratureRule> = OnceLock::new();
    static L64: OnceLock<QuadratureRule> = OnceLock::new();
    let cell = match order {
        20 => &L20,
        64 => &L64,
        _ => panic!("no cached Legendre rule of order {order}"),
    };
    cell.get_or_init(|| QuadratureRule::gauss_legendre(order).expect("positive order"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub value: f64,
    /// Lower order of the agreeing pair; doubling it changes the value by at
    /// most the tolerance.
    pub order: usize,
}

/// `E f(Z)` for `Z ~ N(0, 1)` with order escalation and the default tolerance.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64) -> Result<Expectation> {
    gaussian_expectation_tol(f, DEFAULT_TOLERANCE)
}

pub fn gaussian_expectation_tol(f: impl Fn(f64) -> f64, tol: f64) -> Result<Expectation> {
    let mut previous = hermite(HERMITE_ORDERS[0]).integrate(&f);
    let mut last_change = f64::NAN;
    for pair in HERMITE_ORDERS.windows(2) {
        let next = hermite(pair[1]).integrate(&f);
        last_change = (next - previous).abs();
        if last_change <= tol {
            return Ok(Expectation { value: previous, order: pair[0] });
        }
        if !next.is_finite() {
            break;
        }
        previous = next;
    }
    Err(Error::QuadratureNotConverged { max_order: HERMITE_ORDERS[HERMITE_ORDERS.len() - 1], last_change })
}

/// Nodes (ascending) and weights for weight `exp(-x^2)`. Positive roots of
/// the orthonormal Hermite function are bracketed by a sign scan, then
/// polished by Newton steps kept inside the bracket.
fn hermite_physicist(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let eval = |z: f64| {
        let mut p1 = pim4;
        let mut p2 = 0.0;
        for j in 1..=n {
            let jf = j as f64;
            let p3 = p2;
            p2 = p1;
            p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        }
        (p1, (2.0 * nf).sqrt() * p2)
    };

    let mut positive = Vec::with_capacity(n / 2);
    let upper = (2.0 * nf + 1.0).sqrt() + 1.0;
    let step = 0.25 / (2.0 * nf + 1.0).sqrt();
    // odd orders have a root at zero; start the scan just past it
    let mut lo = if n % 2 == 1 { 0.5 * step } else { 0.0 };
    let mut f_lo = eval(lo).0;
    while lo < upper && positive.len() < n / 2 {
        let hi = lo + step;
        let f_hi = eval(hi).0;
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            positive.push(polish(&eval, lo, hi));
        }
        lo = hi;
        f_lo = f_hi;
    }
    assert_eq!(positive.len(), n / 2, "Hermite root scan missed roots for order {n}");

    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for (i, &z) in positive.iter().rev().enumerate() {
        let (_, dp) = eval(z);
        let weight = 2.0 / (dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        let (_, dp) = eval(0.0);
        x[n / 2] = 0.0;
        w[n / 2] = 2.0 / (dp * dp);
    }
    (x, w)
}

fn polish(eval: &impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let sign_lo = eval(lo).0.signum();
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (p, dp) = eval(z);
        if p == 0.0 {
            return z;
        }
        if p.signum() == sign_lo {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - p / dp;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 4.0 * f64::EPSILON * z.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

fn legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
