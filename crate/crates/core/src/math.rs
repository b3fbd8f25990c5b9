//! Scalar numerics: the standard normal CDF and quantile, the smooth
//! upper-approximation of the hinge `f(z) = z·Φ(z) + φ(z)`, the two
//! elementary plug-in losses and their concave conjugates, and perspective
//! evaluation.
//!
//! Throughout, `Φ` is the standard normal CDF (not the conventional error
//! function) and `φ` its density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Smallest value `gauss_cdf` returns.
const CDF_FLOOR: f64 = f64::MIN_POSITIVE * f64::EPSILON;
/// Largest value `gauss_cdf` returns (the float just below 1).
const CDF_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

/// Standard normal density.
#[inline]
pub fn gauss_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

/// `Φ(-t)` without clamping; accurate in the far upper tail.
#[inline]
pub(crate) fn upper_tail(t: f64) -> f64 {
    0.5 * libm::erfc(t * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal CDF, clamped to the open interval (0, 1) so that
/// [`gauss_cdf_inv`] is total on its outputs.
#[inline]
pub fn gauss_cdf(t: f64) -> f64 {
    upper_tail(-t).clamp(CDF_FLOOR, CDF_CEIL)
}

// Acklam's rational approximation of the normal quantile, lower half.
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

/// Quantile for `p <= 0.5`: rational approximation plus one Halley step.
fn quantile_lower(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        let [c0, c1, c2, c3, c4, c5] = ACKLAM_C;
        let [d0, d1, d2, d3] = ACKLAM_D;
        (((((c0 * q + c1) * q + c2) * q + c3) * q + c4) * q + c5)
            / ((((d0 * q + d1) * q + d2) * q + d3) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        let [a0, a1, a2, a3, a4, a5] = ACKLAM_A;
        let [b0, b1, b2, b3, b4] = ACKLAM_B;
        (((((a0 * r + a1) * r + a2) * r + a3) * r + a4) * r + a5) * q
            / (((((b0 * r + b1) * r + b2) * r + b3) * r + b4) * r + 1.0)
    };
    // exp(x²/2) overflows past |x| ≈ 37.6; the approximation is already
    // as good as the input there.
    if x.abs() > 37.0 {
        return x;
    }
    let e = upper_tail(-x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Inverse of the standard normal CDF on the open interval (0, 1).
pub fn gauss_cdf_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "normal quantile requires 0 < p < 1, got {p}"
        )));
    }
    if p > 0.5 {
        // 1 - p is exact here, which also makes the quantile exactly odd.
        Ok(-quantile_lower(1.0 - p))
    } else {
        Ok(quantile_lower(p))
    }
}

/// `f(z) = z·Φ(z) + φ(z)`, the smooth strictly convex upper-approximation
/// of `[z]_+`.
///
/// Evaluated as `[z]_+ + (φ(|z|) - |z|·Φ(-|z|))`, using `f(z) - z = f(-z)`,
/// so the bound `f(z) >= [z]_+` holds in floating point as well.
pub fn f_value(z: f64) -> f64 {
    let a = z.abs();
    let excess = (gauss_pdf(a) - a * upper_tail(a)).max(0.0);
    z.max(0.0) + excess
}

/// `f'(z) = Φ(z)`.
#[inline]
pub fn f_derivative(z: f64) -> f64 {
    gauss_cdf(z)
}

/// `f''(z) = φ(z)`.
#[inline]
pub fn f_second(z: f64) -> f64 {
    gauss_pdf(z)
}

/// The plug-in scalar losses. All three are convex, parameter-free and
/// satisfy `loss(z) >= z·loss'(z)`, so their perspectives are jointly
/// convex and the robust objective built from them stays convex in `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalarLoss {
    /// `f(z) = z·Φ(z) + φ(z)`
    Erf,
    /// `log2(1 + 2^z)`
    Log,
    /// Huber-like piecewise quadratic: 0 below -4, `(z+4)²/16` on [-4, 4], `z` above 4.
    Quad,
}

impl ScalarLoss {
    pub const ALL: [ScalarLoss; 3] = [ScalarLoss::Erf, ScalarLoss::Log, ScalarLoss::Quad];

    pub fn value(self, z: f64) -> f64 {
        match self {
            ScalarLoss::Erf => f_value(z),
            ScalarLoss::Log => {
                let t = z * std::f64::consts::LN_2;
                (t.max(0.0) + (-t.abs()).exp().ln_1p()) / std::f64::consts::LN_2
            }
            ScalarLoss::Quad => {
                if z < -4.0 {
                    0.0
                } else if z <= 4.0 {
                    (z + 4.0) * (z + 4.0) / 16.0
                } else {
                    z
                }
            }
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            ScalarLoss::Erf => f_derivative(z),
            ScalarLoss::Log => {
                let t = z * std::f64::consts::LN_2;
                if t >= 0.0 {
                    1.0 / (1.0 + (-t).exp())
                } else {
                    let e = t.exp();
                    e / (1.0 + e)
                }
            }
            ScalarLoss::Quad => {
                if z < -4.0 {
                    0.0
                } else if z <= 4.0 {
                    (z + 4.0) / 8.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Concave conjugate `inf_z [loss(z) - α z]`.
    ///
    /// Domain is the open interval (0, 1) for `Erf` and `Log` and the closed
    /// interval [0, 1] for `Quad`; outside it the conjugate is `-∞`, which is
    /// reported as a domain error.
    pub fn conjugate(self, alpha: f64) -> Result<f64> {
        match self {
            ScalarLoss::Erf => {
                let q = gauss_cdf_inv(alpha).map_err(|_| {
                    Error::domain(format!("Erf conjugate requires 0 < alpha < 1, got {alpha}"))
                })?;
                Ok(gauss_pdf(q))
            }
            ScalarLoss::Log => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::domain(format!(
                        "Log conjugate requires 0 < alpha < 1, got {alpha}"
                    )));
                }
                Ok(-(alpha * alpha.log2()) - (1.0 - alpha) * (1.0 - alpha).log2())
            }
            ScalarLoss::Quad => {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::domain(format!(
                        "Quad conjugate requires 0 <= alpha <= 1, got {alpha}"
                    )));
                }
                Ok(4.0 * alpha * (1.0 - alpha))
            }
        }
    }

    /// Perspective `scale · loss(u / scale)`.
    pub fn perspective(self, scale: f64, u: f64) -> Result<f64> {
        if !(scale > 0.0) {
            return Err(Error::domain(format!(
                "perspective requires scale > 0, got {scale}"
            )));
        }
        Ok(scale * self.value(u / scale))
    }
}

pub fn loss_value(loss: ScalarLoss, z: f64) -> f64 {
    loss.value(z)
}

pub fn loss_derivative(loss: ScalarLoss, z: f64) -> f64 {
    loss.derivative(z)
}

pub fn conjugate_value(loss: ScalarLoss, alpha: f64) -> Result<f64> {
    loss.conjugate(alpha)
}

pub fn perspective(loss: ScalarLoss, scale: f64, u: f64) -> Result<f64> {
    loss.perspective(scale, u)
}
