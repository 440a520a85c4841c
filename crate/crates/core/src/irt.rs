//! Two-parameter logistic response model and the discrimination-weighted
//! information score used for item selection.

use serde::{Deserialize, Serialize};

/// Default exponent applied to discrimination inside the information score.
pub const DEFAULT_INFO_EXPONENT: f64 = 0.49;

/// Item parameters as the selection step sees them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Irt2plParams {
    /// Discrimination.
    pub a: f64,
    /// Difficulty.
    pub b: f64,
    /// Exponent on discrimination in [`fisher_info`]; must be positive.
    pub f: f64,
}

impl Irt2plParams {
    pub fn new(a: f64, b: f64) -> Self {
        Irt2plParams {
            a,
            b,
            f: DEFAULT_INFO_EXPONENT,
        }
    }

    pub fn probability(&self, theta: f64) -> f64 {
        p_2pl(theta, self.a, self.b)
    }

    pub fn information(&self, theta: f64) -> f64 {
        fisher_info(theta, self.a, self.b, self.f)
    }
}

/// Logistic sigmoid evaluated on whichever branch keeps `exp` from
/// overflowing.
#[inline]
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Probability that an examinee of ability `theta` succeeds on an item with
/// discrimination `a` and difficulty `b`.
#[inline]
pub fn p_2pl(theta: f64, a: f64, b: f64) -> f64 {
    logistic(a * (theta - b))
}

/// `max(a, 0)^f * P * (1 - P)`.
///
/// Negative discrimination has no real power for non-integer `f`, so such
/// items carry zero information and are never preferred by selection. The
/// signed value is kept everywhere else.
#[inline]
pub fn fisher_info(theta: f64, a: f64, b: f64, f: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let p = p_2pl(theta, a, b);
    a.powf(f) * p * (1.0 - p)
}
