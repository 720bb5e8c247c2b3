//! Closed-form key-length bounds, BB84 finite-key quantities and
//! composable security accounting. All logarithms are base 2.

use crate::{Error, Result};

fn check_unit(value: f64, range: &'static str, open_low: bool, open_high: bool) -> Result<()> {
    let ok = if open_low { value > 0.0 } else { value >= 0.0 }
        && if open_high { value < 1.0 } else { value <= 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange { value, range })
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    check_unit(eps, "(0, 1]", true, false)
}

/// A list size `L >= 1`, kept as `log2 L` so that sizes like `2^1000`
/// stay exact.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ListSize {
    log2: f64,
}

impl ListSize {
    pub const ONE: ListSize = ListSize { log2: 0.0 };

    pub fn from_count(count: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyList);
        }
        Ok(ListSize {
            log2: (count as f64).log2(),
        })
    }

    /// `L = 2^k`.
    pub fn pow2(k: u32) -> Self {
        ListSize { log2: k as f64 }
    }

    pub fn from_log2(log2: f64) -> Result<Self> {
        if !(log2 >= 0.0) || !log2.is_finite() {
            return Err(Error::OutOfRange {
                value: log2,
                range: "[0, inf)",
            });
        }
        Ok(ListSize { log2 })
    }

    /// `L = 2^(alpha * n_sift)`.
    pub fn from_rate(alpha: f64, n_sift: f64) -> Result<Self> {
        Self::from_log2(alpha * n_sift)
    }

    pub fn log2(self) -> f64 {
        self.log2
    }

    /// `ceil(log2 L)`, exact when `L` is a power of two.
    pub fn ceil_log2(self) -> u64 {
        let r = self.log2.round();
        if (self.log2 - r).abs() < 1e-9 {
            r as u64
        } else {
            self.log2.ceil() as u64
        }
    }

    /// The integer value of `L` if it fits in a `u64`.
    pub fn count(self) -> Option<u64> {
        if self.log2 >= 64.0 {
            return None;
        }
        let c = self.log2.exp2().round();
        (c.log2() == self.log2).then_some(c as u64)
    }
}

/// `h(p) = -p log p - (1-p) log(1-p)` with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_unit(p, "[0, 1]", false, false)?;
    let term = |q: f64| if q == 0.0 { 0.0 } else { -q * q.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// Inverse of `h` on the branch `[0, 1/2]`, by bisection run to the
/// resolution of `f64` (well inside `1e-12`).
pub fn binary_entropy_inverse(y: f64) -> Result<f64> {
    check_unit(y, "[0, 1]", false, false)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if binary_entropy(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Standard leftover-hash length `k - 2 log(1/eps) - 2`.
pub fn qlhl_length(k: f64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(k + 2.0 * epsilon.log2() - 2.0)
}

/// List leftover-hash length `k + log L - 2 log(1/eps) - 3`.
pub fn qllhl_length(k: f64, epsilon: f64, list: ListSize) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(k + list.log2 + 2.0 * epsilon.log2() - 3.0)
}

/// Floors a real length and clamps it at zero.
pub fn clamp_length(length: f64) -> u64 {
    if length.is_nan() || length < 1.0 {
        0
    } else {
        length.floor() as u64
    }
}

/// Finite-key correction `c * sqrt(n') * log(1/eps)`.
pub fn delta(n_sift: f64, epsilon: f64, coeff: f64) -> f64 {
    coeff * n_sift.sqrt() * (-epsilon.log2())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bb84Params {
    pub n_sift: f64,
    pub e_b: f64,
    pub e_ph: f64,
    pub epsilon: f64,
    pub list: ListSize,
    pub epsilon_auth: f64,
    pub delta_coeff: f64,
}

impl Default for Bb84Params {
    fn default() -> Self {
        Bb84Params {
            n_sift: 1e6,
            e_b: 0.01,
            e_ph: 0.01,
            epsilon: 2f64.powi(-100),
            list: ListSize::ONE,
            epsilon_auth: 2f64.powi(-100),
            delta_coeff: 1.0,
        }
    }
}

impl Bb84Params {
    fn validate(&self) -> Result<()> {
        if !(self.n_sift >= 1.0) {
            return Err(Error::OutOfRange {
                value: self.n_sift,
                range: "[1, inf)",
            });
        }
        check_unit(self.e_b, "[0, 1/2]", false, false)?;
        check_unit(self.e_ph, "[0, 1/2]", false, false)?;
        for rate in [self.e_b, self.e_ph] {
            if rate > 0.5 {
                return Err(Error::OutOfRange {
                    value: rate,
                    range: "[0, 1/2]",
                });
            }
        }
        check_epsilon(self.epsilon)
    }

    pub fn delta(&self) -> f64 {
        delta(self.n_sift, self.epsilon, self.delta_coeff)
    }
}

/// `n'(1 - h(e_ph) - h(e_b)) - Delta`.
pub fn bb84_min_entropy(p: &Bb84Params) -> Result<f64> {
    p.validate()?;
    Ok(p.n_sift * (1.0 - binary_entropy(p.e_ph)? - binary_entropy(p.e_b)?) - p.delta())
}

/// `1 - h(e_b) + (log L - 2 log(1/eps) - Delta) / n'`, the argument of
/// `h^-1` in the phase-error threshold before the constant term.
pub fn threshold_argument(p: &Bb84Params) -> Result<f64> {
    p.validate()?;
    Ok(
        1.0 - binary_entropy(p.e_b)?
            + (p.list.log2 + 2.0 * p.epsilon.log2() - p.delta()) / p.n_sift,
    )
}

fn list_key_length(p: &Bb84Params, e_ph: f64) -> Result<f64> {
    let q = Bb84Params { e_ph, ..*p };
    qllhl_length(bb84_min_entropy(&q)?, p.epsilon, p.list)
}

/// Supremum of `e_ph` in `[0, 1/2]` with a positive list key length,
/// found by bisection on the length itself. Returns 0 when no phase error
/// is tolerable. `p.e_ph` is ignored.
pub fn bb84_phase_threshold(p: &Bb84Params) -> Result<f64> {
    p.validate()?;
    if list_key_length(p, 0.0)? <= 0.0 {
        return Ok(0.0);
    }
    if list_key_length(p, 0.5)? > 0.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if list_key_length(p, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Pre-shared bits to authenticate the index: `ceil(log L) + 2 ceil(log(1/eps_auth))`.
pub fn auth_cost(list: ListSize, epsilon_auth: f64) -> Result<u64> {
    check_unit(epsilon_auth, "(0, 1)", true, true)?;
    let inv = -epsilon_auth.log2();
    let r = inv.round();
    let ceil_inv = if (inv - r).abs() < 1e-9 {
        r
    } else {
        inv.ceil()
    };
    Ok(list.ceil_log2() + 2 * ceil_inv as u64)
}

/// `(1 - alpha) * ell_star`.
pub fn net_rate(alpha: f64, ell_star: f64) -> Result<f64> {
    check_unit(alpha, "[0, 1)", false, true)?;
    Ok((1.0 - alpha) * ell_star)
}

/// Additive composition, saturating at 1.
pub fn epsilon_total(eps_pa: f64, eps_ec: f64, eps_auth: f64) -> Result<f64> {
    for e in [eps_pa, eps_ec, eps_auth] {
        check_unit(e, "[0, 1]", false, false)?;
    }
    Ok((eps_pa + eps_ec + eps_auth).min(1.0))
}
