//! Blind estimation of the mixing parameters `v`, `w1`, `w2` from
//! expectations of outcome probabilities.
//!
//! The single-preparation chain only consumes *expectations* `E{p_j}`, which
//! are estimated by pooled relative frequencies over all trials (see
//! [`crate::measurement::FrequencyAccumulator`]). The multiple-preparation
//! route, which inverts each state's probabilities separately, is kept in
//! [`multiple_preparation_v`] for comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::OutcomeProbabilities;
use crate::states::PrepDistribution;

/// Numerical guards of the estimation chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Minimum `|E{r2²} − E{r1²}|` and minimum `1 + cos ΔΦ1,−1`.
    pub denominator: f64,
    /// Minimum magnitude of the sign argument for `sgn(v)`.
    pub sign: f64,
    /// Largest accepted condition number of the 2×2 w-system.
    pub condition_bound: f64,
    /// How far `E{p1xx} + E{p4xx}` may fall below ½ before it is treated as
    /// inconsistent rather than clamped.
    pub ox_sum_tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            denominator: 1e-6,
            sign: 1e-9,
            condition_bound: 1e6,
            ox_sum_tolerance: 0.05,
        }
    }
}

/// Post-processing of the raw `(w1, w2)` solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WNormalization {
    /// Keep the linear-system solution as is.
    #[default]
    None,
    /// Rescale onto the unit circle, keeping the direction.
    UnitCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorOptions {
    pub thresholds: Thresholds,
    pub w_normalization: WNormalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OzStatistics {
    pub e_p1zz: f64,
    pub e_p2zz: f64,
    pub e_p4zz: f64,
}

impl From<&OutcomeProbabilities> for OzStatistics {
    fn from(p: &OutcomeProbabilities) -> Self {
        OzStatistics {
            e_p1zz: p.p[0],
            e_p2zz: p.p[1],
            e_p4zz: p.p[3],
        }
    }
}

/// Statistics of one w-step distribution: its Ox pair and the companion
/// Oz `E{p1zz}` at the same interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OxStatistics {
    pub e_p1xx: f64,
    pub e_p4xx: f64,
    pub e_p1zz: f64,
}

impl OxStatistics {
    pub fn new(oz: &OutcomeProbabilities, ox: &OutcomeProbabilities) -> Self {
        OxStatistics {
            e_p1xx: ox.p[0],
            e_p4xx: ox.p[3],
            e_p1zz: oz.p[0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub v_sq_clamped: bool,
    pub radicand_clamped: [bool; 2],
    pub w1_clamped: bool,
    /// Condition number of the 2×2 w-system.
    pub condition: f64,
}

impl Diagnostics {
    pub fn any_clamp(&self) -> bool {
        self.v_sq_clamped || self.radicand_clamped.iter().any(|&b| b) || self.w1_clamped
    }
}

/// `v̂` (at the first interval) and `ŵ1, ŵ2` (at the second).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimates {
    pub v_hat: f64,
    pub w1_hat: f64,
    pub w2_hat: f64,
    pub diagnostics: Diagnostics,
}

/// Smaller and larger roots `x1 ≤ x2` of `x1·x2 = p1`,
/// `(1 − x1)(1 − x2) = p4`.
fn product_roots(p1: f64, p4: f64) -> Result<(f64, f64)> {
    let a = 1.0 + p1 - p4;
    let disc = a * a - 4.0 * p1;
    if disc < 0.0 {
        return Err(Error::InconsistentStatistics { discriminant: disc });
    }
    let d = disc.sqrt();
    Ok(((a - d) / 2.0, (a + d) / 2.0))
}

/// Per-state `(r1, r2)` from `p1zz = r1² r2²` and
/// `p4zz = (1 − r1²)(1 − r2²)`, under `r1 < 1/2 < r2`.
pub fn recover_r_pair(p1zz: f64, p4zz: f64) -> Result<(f64, f64)> {
    check_probability("p1zz", p1zz)?;
    check_probability("p4zz", p4zz)?;
    let (lo, hi) = product_roots(p1zz, p4zz)?;
    Ok((lo.max(0.0).sqrt(), hi.max(0.0).sqrt()))
}

/// `(E{r1²}, E{r2²})` from `E{p1zz}`, `E{p4zz}` for independent r1, r2.
pub fn moment_r2_pair(e_p1zz: f64, e_p4zz: f64) -> Result<(f64, f64)> {
    check_probability("E{p1zz}", e_p1zz)?;
    check_probability("E{p4zz}", e_p4zz)?;
    product_roots(e_p1zz, e_p4zz)
}

/// `E{r²}` for two qubits with identical laws: `√E{p1zz}`.
pub fn moment_r2_symmetric(e_p1zz: f64) -> Result<f64> {
    check_probability("E{p1zz}", e_p1zz)?;
    Ok(e_p1zz.sqrt())
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {p} is not a probability")))
    }
}

/// `v²` from statistics with `E{sin ΔI} = 0`; returns the clamped value and
/// whether clamping to [0, 1] was needed.
pub fn estimate_v_squared(oz: &OzStatistics, moments: (f64, f64), th: &Thresholds) -> Result<(f64, bool)> {
    let (m1, m2) = moments;
    let den = m2 - m1;
    if den.abs() < th.denominator {
        return Err(Error::IllConditioned {
            what: "E{r2²} − E{r1²}",
            value: den.abs(),
            threshold: th.denominator,
        });
    }
    let v_sq = (oz.e_p2zz - m1 * (1.0 - m2)) / den;
    let clamped = v_sq.clamp(0.0, 1.0);
    Ok((clamped, clamped != v_sq))
}

/// `sgn(v)` from statistics with a known nonzero sign of `E{sin ΔI}`.
pub fn estimate_v_sign(oz: &OzStatistics, moments: (f64, f64), v_sq: f64, sign_e_sin: i8, th: &Thresholds) -> Result<f64> {
    if sign_e_sin != 1 && sign_e_sin != -1 {
        return Err(Error::InvalidInput(format!("sign of E{{sin ΔI}} must be ±1, got {sign_e_sin}")));
    }
    let (m1, m2) = moments;
    let arg = m1 * (1.0 - m2) + (m2 - m1) * v_sq - oz.e_p2zz;
    if arg.abs() < th.sign {
        return Err(Error::IndeterminateSign {
            value: arg.abs(),
            threshold: th.sign,
        });
    }
    Ok(arg.signum() * f64::from(sign_e_sin))
}

/// `E{r√(1−r²)}·E{cos(φ−θ)}` from the Ox sum; returns the value and whether
/// the radicand was clamped at zero.
pub fn estimate_cross_moment(ox: &OxStatistics, delta_phi_1m1: f64, th: &Thresholds) -> Result<(f64, bool)> {
    let den = 1.0 + delta_phi_1m1.cos();
    if den < th.denominator {
        return Err(Error::SingularGeometry { value: den });
    }
    let excess = ox.e_p1xx + ox.e_p4xx - 0.5;
    if excess < -th.ox_sum_tolerance {
        return Err(Error::InconsistentStatistics { discriminant: excess });
    }
    let radicand = excess / den;
    if radicand < 0.0 {
        Ok((0.0, true))
    } else {
        Ok((radicand.sqrt(), false))
    }
}

/// `(E{R14}, E{I14})` for identical laws on both qubits with
/// `E{sin(φ−θ)} = 0`.
pub fn expected_r14_i14(e_r2: f64, cross: f64, delta_phi_1m1: f64) -> (f64, f64) {
    let (s, c) = delta_phi_1m1.sin_cos();
    let r14 = cross * 2.0 * (e_r2 * (1.0 - c) + c);
    let i14 = -cross * 2.0 * (1.0 - e_r2) * s;
    (r14, i14)
}

/// One linear equation `diff = R14·w1 − I14·w2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WEquation {
    pub r14: f64,
    pub i14: f64,
    pub diff: f64,
}

/// Solution of the 2×2 w-system with its condition number (unnormalized).
pub fn solve_w(eq1: &WEquation, eq2: &WEquation, th: &Thresholds) -> Result<(f64, f64, f64)> {
    let (a, b, c, d) = (eq1.r14, -eq1.i14, eq2.r14, -eq2.i14);
    let det = a * d - b * c;
    let fro2 = a * a + b * b + c * c + d * d;
    let gap = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s_max = ((fro2 + gap) / 2.0).sqrt();
    let s_min_sq = (fro2 - gap) / 2.0;
    // s_min from det avoids cancellation in fro2 − gap.
    let s_min = if s_max > 0.0 { det.abs() / s_max } else { 0.0 };
    let condition = if s_min > 0.0 && s_min_sq >= 0.0 { s_max / s_min } else { f64::INFINITY };
    if !(condition <= th.condition_bound) {
        return Err(Error::NearSingularSystem {
            condition,
            bound: th.condition_bound,
        });
    }
    let w1 = (eq1.diff * d - b * eq2.diff) / det;
    let w2 = (a * eq2.diff - c * eq1.diff) / det;
    Ok((w1, w2, condition))
}

/// The w-step needs identical laws on both qubits (`E{r1²} = E{r2²}`).
pub fn check_w_step_distribution(dist: &PrepDistribution) -> Result<()> {
    if dist.is_symmetric() {
        Ok(())
    } else {
        Err(Error::InvalidInput(
            "w-step distributions must use identical laws for both qubits".into(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VEstimate {
    pub v_hat: f64,
    pub v_sq: f64,
    pub clamped: bool,
}

/// `v̂` from a zero-mean `sin ΔI` series (magnitude) and a series with known
/// `sgn E{sin ΔI}` (sign). Each series supplies its own r-moments.
pub fn estimate_v(step1: &OzStatistics, step2: &OzStatistics, sign_e_sin: i8, th: &Thresholds) -> Result<VEstimate> {
    let m = moment_r2_pair(step1.e_p1zz, step1.e_p4zz)?;
    let (v_sq, clamped) = estimate_v_squared(step1, m, th)?;
    let m2 = moment_r2_pair(step2.e_p1zz, step2.e_p4zz)?;
    let sign = estimate_v_sign(step2, m2, v_sq, sign_e_sin, th)?;
    Ok(VEstimate {
        v_hat: sign * v_sq.sqrt(),
        v_sq,
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WEstimate {
    pub w1: f64,
    pub w2: f64,
    pub raw: (f64, f64),
    pub condition: f64,
    pub radicand_clamped: [bool; 2],
}

/// Builds one w-equation from the statistics of a symmetric distribution.
pub fn w_equation(stats: &OxStatistics, delta_phi_1m1: f64, th: &Thresholds) -> Result<(WEquation, bool)> {
    let e_r2 = moment_r2_symmetric(stats.e_p1zz)?;
    let (cross, clamped) = estimate_cross_moment(stats, delta_phi_1m1, th)?;
    let (r14, i14) = expected_r14_i14(e_r2, cross, delta_phi_1m1);
    Ok((
        WEquation {
            r14,
            i14,
            diff: stats.e_p1xx - stats.e_p4xx,
        },
        clamped,
    ))
}

pub fn estimate_w(eqs: &[OxStatistics; 2], delta_phi_1m1: f64, opts: &EstimatorOptions) -> Result<WEstimate> {
    let th = &opts.thresholds;
    let (e1, c1) = w_equation(&eqs[0], delta_phi_1m1, th)?;
    let (e2, c2) = w_equation(&eqs[1], delta_phi_1m1, th)?;
    let (w1, w2, condition) = solve_w(&e1, &e2, th)?;
    let (n1, n2) = match opts.w_normalization {
        WNormalization::None => (w1, w2),
        WNormalization::UnitCircle => {
            let n = w1.hypot(w2);
            (w1 / n, w2 / n)
        }
    };
    Ok(WEstimate {
        w1: n1,
        w2: n2,
        raw: (w1, w2),
        condition,
        radicand_clamped: [c1, c2],
    })
}

/// Statistics of the six single-preparation series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStatistics {
    pub step1: OzStatistics,
    pub step2: OzStatistics,
    pub w_eq: [OxStatistics; 2],
}

/// Full single-preparation chain. `delta_phi_1m1` is taken at the w-step
/// interval; `sign_e_sin` is the known sign of `E{sin ΔI}` of the sign
/// series.
pub fn estimate_parameters(stats: &SeriesStatistics, delta_phi_1m1: f64, sign_e_sin: i8, opts: &EstimatorOptions) -> Result<ParamEstimates> {
    let v = estimate_v(&stats.step1, &stats.step2, sign_e_sin, &opts.thresholds)?;
    let w = estimate_w(&stats.w_eq, delta_phi_1m1, opts)?;
    Ok(ParamEstimates {
        v_hat: v.v_hat,
        w1_hat: w.w1,
        w2_hat: w.w2,
        diagnostics: Diagnostics {
            v_sq_clamped: v.clamped,
            radicand_clamped: w.radicand_clamped,
            w1_clamped: false,
            condition: w.condition,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiPrepV {
    pub v_hat: f64,
    pub v_sq: f64,
    pub clamped: bool,
    /// `(E{r1²}, E{r2²})` of the magnitude series.
    pub moments: (f64, f64),
    /// States whose frequencies admitted no real r-recovery, per series.
    pub rejected: [usize; 2],
}

fn per_state_moments(states: &[OutcomeProbabilities]) -> Result<((f64, f64), f64, usize)> {
    let (mut s1, mut s2, mut used) = (0.0, 0.0, 0usize);
    for p in states {
        if let Ok((r1, r2)) = recover_r_pair(p.p[0], p.p[3]) {
            s1 += r1 * r1;
            s2 += r2 * r2;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::InconsistentStatistics { discriminant: f64::NAN });
    }
    let e_p2 = states.iter().map(|p| p.p[1]).sum::<f64>() / states.len() as f64;
    Ok(((s1 / used as f64, s2 / used as f64), e_p2, states.len() - used))
}

/// Multiple-preparation estimate of `v`: each state's (many-copy)
/// frequencies are inverted to `(r1, r2)` separately, the r-statistics are
/// averaged over states and plugged into the same `v²` and sign relations.
pub fn multiple_preparation_v(
    step1: &[OutcomeProbabilities],
    step2: &[OutcomeProbabilities],
    sign_e_sin: i8,
    th: &Thresholds,
) -> Result<MultiPrepV> {
    let (m, e_p2, rej1) = per_state_moments(step1)?;
    let oz = OzStatistics { e_p1zz: f64::NAN, e_p2zz: e_p2, e_p4zz: f64::NAN };
    let (v_sq, clamped) = estimate_v_squared(&oz, m, th)?;
    let (m_b, e_p2_b, rej2) = per_state_moments(step2)?;
    let oz2 = OzStatistics { e_p1zz: f64::NAN, e_p2zz: e_p2_b, e_p4zz: f64::NAN };
    let sign = estimate_v_sign(&oz2, m_b, v_sq, sign_e_sin, th)?;
    Ok(MultiPrepV {
        v_hat: sign * v_sq.sqrt(),
        v_sq,
        clamped,
        moments: m,
        rejected: [rej1, rej2],
    })
}
