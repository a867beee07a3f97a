//! From `(v̂, ŵ1, ŵ2)` to the exchange parameters and the process matrix.
//!
//! Each inversion is only known up to integer multiples of π. The extended
//! protocol estimates `Jxy` at `τ1`, `Jz` at `τ2 = 2τ1` and operates the gate
//! at `τ3 = 2τ2`; at `τ3` every admissible choice of the integer shifts gives
//! the same matrix.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::ParamEstimates;
use crate::physics::{sgn_nonneg, ProcessMatrix, ScaledCouplings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTimes {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
}

fn even_ratio(a: f64, b: f64, what: &str) -> Result<u32> {
    let ratio = b / a;
    let n = ratio.round();
    if !(ratio.is_finite() && n >= 2.0 && (ratio - n).abs() <= 1e-9 * n && n as u64 % 2 == 0) {
        return Err(Error::Config(format!("{what} must be an even integer multiple, got ratio {ratio}")));
    }
    Ok(n as u32)
}

impl ProtocolTimes {
    /// `τ2 = 2τ1`, `τ3 = 2τ2`.
    pub fn doubling(tau1: f64) -> Self {
        ProtocolTimes {
            tau1,
            tau2: 2.0 * tau1,
            tau3: 4.0 * tau1,
        }
    }

    /// Arbitrary even multiples, validated.
    pub fn new(tau1: f64, tau2: f64, tau3: f64) -> Result<Self> {
        let t = ProtocolTimes { tau1, tau2, tau3 };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau1.is_finite() && self.tau1 > 0.0) {
            return Err(Error::Config(format!("tau1 must be positive, got {}", self.tau1)));
        }
        even_ratio(self.tau1, self.tau2, "tau2/tau1")?;
        even_ratio(self.tau2, self.tau3, "tau3/tau2")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// `Ĵxy(τ1)·τ1/ħ`.
    pub jxy_scaled_tau1: f64,
    /// `Ĵz(τ2)·τ2/ħ`.
    pub jz_scaled_tau2: f64,
    /// Estimated couplings seen from the operating interval.
    pub operating: ScaledCouplings,
    pub k_xy_hat: i64,
    pub k_z_hat: i64,
    pub delta_ed: f64,
    pub delta_phi_10d: f64,
    pub w1_clamped: bool,
    pub m_hat: ProcessMatrix,
}

/// `Δ_Ed = arcsin v̂` and `Ĵxy·τ/ħ = −Δ_Ed + k̂xy·π`.
pub fn invert_v(v_hat: f64, k_xy_hat: i64) -> Result<(f64, f64)> {
    if !(v_hat.abs() <= 1.0) {
        return Err(Error::InvalidInput(format!("|v̂| must not exceed 1, got {v_hat}")));
    }
    let delta_ed = v_hat.asin();
    Ok((delta_ed, -delta_ed + k_xy_hat as f64 * PI))
}

/// `ΔΦ1,0d = sgn(ŵ2)·arccos ŵ1` and
/// `Ĵz·τ/ħ = ΔΦ1,0d + 2k̂z·π + Ĵxy·τ/ħ + G·B·τ/ħ`, all at the same τ.
pub fn invert_w(w1_hat: f64, w2_hat: f64, jxy_scaled: f64, gb_scaled: f64, k_z_hat: i64) -> Result<(f64, f64)> {
    if !(w1_hat.abs() <= 1.0) {
        return Err(Error::InvalidInput(format!("|ŵ1| must not exceed 1, got {w1_hat}")));
    }
    let d = sgn_nonneg(w2_hat) * w1_hat.acos();
    Ok((d, d + 2.0 * k_z_hat as f64 * PI + jxy_scaled + gb_scaled))
}

/// Extended three-interval reconstruction. `est.v_hat` must come from
/// `τ1` data and `est.w*_hat` from `τ2` data; `gb_over_hbar` is the known
/// `G·B/ħ` in rad/s.
pub fn extended_protocol(est: &ParamEstimates, times: &ProtocolTimes, gb_over_hbar: f64, k_xy_hat: i64, k_z_hat: i64) -> Result<ReconstructionResult> {
    times.validate()?;
    let (delta_ed, jxy1) = invert_v(est.v_hat, k_xy_hat)?;
    let jxy2 = jxy1 * (times.tau2 / times.tau1).round();
    let w1 = est.w1_hat.clamp(-1.0, 1.0);
    let (delta_phi_10d, jz2) = invert_w(w1, est.w2_hat, jxy2, gb_over_hbar * times.tau2, k_z_hat)?;
    let operating = ScaledCouplings {
        jxy: jxy1 * (times.tau3 / times.tau1).round(),
        jz: jz2 * (times.tau3 / times.tau2).round(),
        gb: gb_over_hbar * times.tau3,
    };
    Ok(ReconstructionResult {
        jxy_scaled_tau1: jxy1,
        jz_scaled_tau2: jz2,
        operating,
        k_xy_hat,
        k_z_hat,
        delta_ed,
        delta_phi_10d,
        w1_clamped: w1 != est.w1_hat,
        m_hat: operating.matrix(),
    })
}

/// Single-interval reconstruction: all three estimates come from the same
/// interval `tau`, and the matrix is built at that interval. The result
/// carries a global phase that depends on the shifts.
pub fn single_interval(est: &ParamEstimates, tau: f64, gb_over_hbar: f64, k_xy_hat: i64, k_z_hat: i64) -> Result<ReconstructionResult> {
    let (delta_ed, jxy) = invert_v(est.v_hat, k_xy_hat)?;
    let w1 = est.w1_hat.clamp(-1.0, 1.0);
    let gb = gb_over_hbar * tau;
    let (delta_phi_10d, jz) = invert_w(w1, est.w2_hat, jxy, gb, k_z_hat)?;
    let operating = ScaledCouplings { jxy, jz, gb };
    Ok(ReconstructionResult {
        jxy_scaled_tau1: jxy,
        jz_scaled_tau2: jz,
        operating,
        k_xy_hat,
        k_z_hat,
        delta_ed,
        delta_phi_10d,
        w1_clamped: w1 != est.w1_hat,
        m_hat: operating.matrix(),
    })
}

/// Global phase that relates a single-interval estimate to the true
/// matrix when the shifts are off by `(Δkxy, Δkz)`, derived from the
/// eigenphases `ω·τ` with `D = diag(e^{−iωτ})`.
pub fn shift_phase_factor(delta_k_xy: i64, delta_k_z: i64) -> Complex64 {
    Complex64::from_polar(1.0, PI * (delta_k_z as f64 + delta_k_xy as f64 / 2.0))
}

/// `‖M̂ − M‖_F / ‖M‖_F` with entry-modulus Frobenius norms.
pub fn relative_error(m_hat: &ProcessMatrix, m: &ProcessMatrix) -> f64 {
    m_hat.sub(m).frobenius_norm() / m.frobenius_norm()
}

/// Root-mean-square error divided by `|actual|`.
pub fn nrmse(estimates: &[f64], actual: f64) -> Result<f64> {
    if actual == 0.0 {
        return Err(Error::UndefinedMetric("NRMSE with a zero actual value"));
    }
    if estimates.is_empty() {
        return Err(Error::UndefinedMetric("NRMSE of an empty estimate list"));
    }
    let mse = estimates.iter().map(|e| (e - actual).powi(2)).sum::<f64>() / estimates.len() as f64;
    Ok(mse.sqrt() / actual.abs())
}
