//! Finite-sample estimates of the uniform and ordinary exponents.
//!
//! These are floating-point summaries and carry no certificate.

use serde::{Deserialize, Serialize};

use crate::approx::ApproxSequence;
use crate::error::{Error, Result};
use crate::exactnum::{ln_bigint, ln_rat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub window: usize,
    /// `(nu, r_nu)` with `r_nu = ln(1/xi_nu) / ln|x_{nu+1}|`.
    pub ratios: Vec<(usize, f64)>,
    pub omega_hat_est: f64,
    pub omega_est: f64,
}

pub fn default_window(seq: &ApproxSequence) -> usize {
    seq.theta.d() + 3
}

/// Min and max of `r_nu` over the last `window` consecutive pairs.
pub fn exponent_report(seq: &ApproxSequence, window: usize) -> Result<ExponentReport> {
    if window == 0 {
        return Err(Error::InvalidParameter("window must be positive".into()));
    }
    let recs = &seq.records;
    if recs.len() < window + 1 {
        return Err(Error::InsufficientData(format!(
            "{} records, need window + 1 = {}",
            recs.len(),
            window + 1
        )));
    }
    let first = recs.len() - 1 - window;
    let mut ratios = Vec::with_capacity(window);
    for nu in first..recs.len() - 1 {
        let xi = &recs[nu].xi;
        if recs[nu].exact_hit || recs[nu + 1].exact_hit || xi.mid().numer().sign() != num_bigint::Sign::Plus {
            return Err(Error::ExactHitInWindow(nu + 1));
        }
        let next = num_bigint::BigInt::from(recs[nu + 1].xnorm);
        let r = -ln_rat(xi.mid()) / ln_bigint(&next);
        ratios.push((nu + 1, round6(r)));
    }
    let omega_hat_est = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let omega_est = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExponentReport {
        window,
        ratios,
        omega_hat_est,
        omega_est,
    })
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}
