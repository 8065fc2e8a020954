//! Upper bound on the tail of a one-parameter supremum of chi-square(1)
//! score statistics, for a single overlapping AR/MA lag.
//!
//! With `lambda(omega) = (1 - omega^2)^{-2}` the upcrossing integral has the
//! closed form `(1/2) ln((1+omega)/(1-omega))`, giving
//!
//! ```text
//! F(u) = P(chi2_1 > u) + (2 pi)^{-1} e^{-u/2} [ln((1+w)/(1-w))]_{w_L}^{w_U}
//! ```

use crate::error::{Error, Result};
use crate::numeric::chi2_sf;

/// Bisection bracket for [`davies_quantile`].
pub const QUANTILE_BRACKET: (f64, f64) = (0.0, 200.0);
pub const QUANTILE_TOLERANCE: f64 = 1e-10;

fn check_interval(omega_l: f64, omega_u: f64) -> Result<()> {
    if !(omega_l > -1.0 && omega_l <= omega_u && omega_u < 1.0) {
        return Err(Error::Domain(format!(
            "nuisance interval [{omega_l}, {omega_u}] must satisfy -1 < lower <= upper < 1"
        )));
    }
    Ok(())
}

fn chi2_1_sf(u: f64) -> f64 {
    if u <= 0.0 {
        1.0
    } else {
        chi2_sf(u, 1)
    }
}

fn atanh2(w: f64) -> f64 {
    ((1.0 + w) / (1.0 - w)).ln()
}

fn unclamped(u: f64, omega_l: f64, omega_u: f64) -> f64 {
    let u = u.max(0.0);
    let span = atanh2(omega_u) - atanh2(omega_l);
    chi2_1_sf(u) + (-0.5 * u).exp() * span / (2.0 * std::f64::consts::PI)
}

/// Tail bound `F(u)` clamped to `[0, 1]`.
pub fn davies_tail_bound(u: f64, omega_l: f64, omega_u: f64) -> Result<f64> {
    check_interval(omega_l, omega_u)?;
    if u.is_nan() {
        return Err(Error::Domain("u is NaN".into()));
    }
    Ok(unclamped(u, omega_l, omega_u).clamp(0.0, 1.0))
}

/// The `u` solving `F(u) = alpha`, by bisection.
pub fn davies_quantile(alpha: f64, omega_l: f64, omega_u: f64) -> Result<f64> {
    check_interval(omega_l, omega_u)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("tail probability {alpha} outside (0, 1)")));
    }
    let (mut lo, mut hi) = QUANTILE_BRACKET;
    if unclamped(lo, omega_l, omega_u) < alpha {
        return Err(Error::Domain(format!("alpha = {alpha} exceeds the bound at u = 0")));
    }
    if unclamped(hi, omega_l, omega_u) > alpha {
        return Err(Error::Domain(format!("alpha = {alpha} is below the bound at u = {hi}")));
    }
    while hi - lo > QUANTILE_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if unclamped(mid, omega_l, omega_u) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
