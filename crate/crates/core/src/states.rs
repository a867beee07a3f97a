//! Input qubit states and the random preparation laws used to draw them.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive, ParamId, Stream};

/// Polar parameters of one qubit: `α = r e^{iθ}`, `β = q e^{iφ}` with
/// `q = √(1 − r²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl QubitParams {
    pub fn new(r: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidInput(format!("r must lie in [0, 1], got {r}")));
        }
        Ok(QubitParams { r, theta, phi })
    }

    #[inline]
    pub fn q(&self) -> f64 {
        (1.0 - self.r * self.r).max(0.0).sqrt()
    }

    #[inline]
    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }

    #[inline]
    pub fn beta(&self) -> Complex64 {
        Complex64::from_polar(self.q(), self.phi)
    }

    /// The only physically meaningful phase, `φ − θ`.
    #[inline]
    pub fn relative_phase(&self) -> f64 {
        self.phi - self.theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparedPair {
    pub q1: QubitParams,
    pub q2: QubitParams,
}

impl PreparedPair {
    /// `ΔI = (φ2 − θ2) − (φ1 − θ1)`.
    pub fn delta_i(&self) -> f64 {
        self.q2.relative_phase() - self.q1.relative_phase()
    }

    /// `0 < r1 < 1/2 < r2 < 1`, needed for unambiguous r recovery.
    pub fn satisfies_ordering(&self) -> bool {
        0.0 < self.q1.r && self.q1.r < 0.5 && 0.5 < self.q2.r && self.q2.r < 1.0
    }
}

/// Four amplitudes in the product basis |++⟩, |+−⟩, |−+⟩, |−−⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitState {
    pub c: [Complex64; 4],
}

impl TwoQubitState {
    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(|x| x.norm_sqr()).sum()
    }
}

pub fn product_state(pair: &PreparedPair) -> TwoQubitState {
    let (a1, b1) = (pair.q1.alpha(), pair.q1.beta());
    let (a2, b2) = (pair.q2.alpha(), pair.q2.beta());
    TwoQubitState {
        c: [a1 * a2, a1 * b2, b1 * a2, b1 * b2],
    }
}

/// Law of one scalar parameter: fixed, or uniform on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Law {
    Fixed(f64),
    Uniform([f64; 2]),
}

impl Law {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Law::Uniform([lo, hi])
    }

    #[inline]
    fn draw(&self, stream: Stream) -> f64 {
        match *self {
            Law::Fixed(x) => x,
            Law::Uniform([lo, hi]) => lo + stream.uniform() * (hi - lo),
        }
    }

    /// `E{f(x)}` from an antiderivative `big_f` of `f`.
    fn mean_with(&self, f: impl Fn(f64) -> f64, big_f: impl Fn(f64) -> f64) -> f64 {
        match *self {
            Law::Fixed(x) => f(x),
            Law::Uniform([lo, hi]) if hi > lo => (big_f(hi) - big_f(lo)) / (hi - lo),
            Law::Uniform([lo, _]) => f(lo),
        }
    }

    pub fn mean_cos(&self) -> f64 {
        self.mean_with(f64::cos, f64::sin)
    }

    pub fn mean_sin(&self) -> f64 {
        self.mean_with(f64::sin, |x| -x.cos())
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Law::Fixed(x) => (x, x),
            Law::Uniform([lo, hi]) => (lo, hi),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::InvalidInput(format!("{name}: invalid range [{lo}, {hi})")));
        }
        Ok(())
    }
}

/// The four protocol distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// |v| step: `E{sin ΔI} = 0`, constraint `r1 < 1/2 < r2` enforced.
    Step1,
    /// sign(v) step: `E{sin ΔI} > 0`.
    Step2,
    /// First w-equation, small r for both qubits.
    WEq1,
    /// Second w-equation, large r for both qubits.
    WEq2,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Step1, Preset::Step2, Preset::WEq1, Preset::WEq2];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Step1 => "step1",
            Preset::Step2 => "step2",
            Preset::WEq1 => "w_eq1",
            Preset::WEq2 => "w_eq2",
        }
    }

    pub fn distribution(&self) -> PrepDistribution {
        let zero = Law::Fixed(0.0);
        match self {
            Preset::Step1 => PrepDistribution {
                r1: Law::uniform(0.1, 0.4),
                r2: Law::uniform(0.6, 0.9),
                theta1: zero,
                theta2: zero,
                phi1: Law::uniform(0.0, 2.0 * PI),
                phi2: Law::uniform(0.0, 2.0 * PI),
            },
            Preset::Step2 => PrepDistribution {
                phi1: zero,
                phi2: Law::uniform(0.0, PI),
                ..Preset::Step1.distribution()
            },
            Preset::WEq1 | Preset::WEq2 => {
                let r = if *self == Preset::WEq1 {
                    Law::uniform(0.1, 0.4)
                } else {
                    Law::uniform(0.6, 0.9)
                };
                PrepDistribution {
                    r1: r,
                    r2: r,
                    theta1: zero,
                    theta2: zero,
                    phi1: Law::uniform(-FRAC_PI_2, FRAC_PI_2),
                    phi2: Law::uniform(-FRAC_PI_2, FRAC_PI_2),
                }
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?} (expected step1, step2, w_eq1 or w_eq2)")))
    }
}

/// Independent laws for the six polar parameters of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepDistribution {
    pub r1: Law,
    pub r2: Law,
    pub theta1: Law,
    pub theta2: Law,
    pub phi1: Law,
    pub phi2: Law,
}

impl PrepDistribution {
    pub fn validate(&self) -> Result<()> {
        for (name, law) in [("r1", &self.r1), ("r2", &self.r2)] {
            law.validate(name)?;
            let (lo, hi) = law.bounds();
            if lo < 0.0 || hi > 1.0 {
                return Err(Error::InvalidInput(format!("{name} range [{lo}, {hi}) leaves [0, 1]")));
            }
        }
        for (name, law) in [
            ("theta1", &self.theta1),
            ("theta2", &self.theta2),
            ("phi1", &self.phi1),
            ("phi2", &self.phi2),
        ] {
            law.validate(name)?;
        }
        Ok(())
    }

    /// Both qubits drawn with identical laws.
    pub fn is_symmetric(&self) -> bool {
        self.r1 == self.r2 && self.theta1 == self.theta2 && self.phi1 == self.phi2
    }
}

/// Stream addressing for state `index` of measurement series `series`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateKey {
    base: u64,
}

impl StateKey {
    pub fn new(seed: u64, series: u64, index: u64) -> Self {
        StateKey {
            base: derive(derive(derive(0, seed), series), index),
        }
    }

    #[inline]
    pub fn stream(&self, param: ParamId) -> Stream {
        Stream::from_key(derive(self.base, param as u64))
    }
}

pub fn sample_pair(dist: &PrepDistribution, key: &StateKey) -> PreparedPair {
    PreparedPair {
        q1: QubitParams {
            r: dist.r1.draw(key.stream(ParamId::R1)),
            theta: dist.theta1.draw(key.stream(ParamId::Theta1)),
            phi: dist.phi1.draw(key.stream(ParamId::Phi1)),
        },
        q2: QubitParams {
            r: dist.r2.draw(key.stream(ParamId::R2)),
            theta: dist.theta2.draw(key.stream(ParamId::Theta2)),
            phi: dist.phi2.draw(key.stream(ParamId::Phi2)),
        },
    }
}

/// Closed-form first moments of a preparation law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    /// `E{r_i²}`.
    pub e_r2: [f64; 2],
    /// `E{r_i √(1 − r_i²)}`.
    pub e_rq: [f64; 2],
    /// `E{cos(φ_i − θ_i)}`.
    pub e_cos_phi_theta: [f64; 2],
    /// `E{sin(φ_i − θ_i)}`.
    pub e_sin_phi_theta: [f64; 2],
    /// `E{sin ΔI}`.
    pub e_sin_delta_i: f64,
    /// `E{cos ΔI}`.
    pub e_cos_delta_i: f64,
    pub sign_e_sin_delta_i: i8,
}

fn r_moments(law: &Law) -> (f64, f64) {
    let e_r2 = law.mean_with(|r| r * r, |r| r * r * r / 3.0);
    let e_rq = law.mean_with(
        |r| r * (1.0 - r * r).max(0.0).sqrt(),
        |r| -(1.0 - r * r).max(0.0).powf(1.5) / 3.0,
    );
    (e_r2, e_rq)
}

/// Moments of `x = φ − θ` for independent φ and θ: `(E cos x, E sin x)`.
fn phase_moments(phi: &Law, theta: &Law) -> (f64, f64) {
    let (cp, sp) = (phi.mean_cos(), phi.mean_sin());
    let (ct, st) = (theta.mean_cos(), theta.mean_sin());
    (cp * ct + sp * st, sp * ct - cp * st)
}

pub fn analytic_moments(dist: &PrepDistribution) -> Result<MomentSet> {
    dist.validate()?;
    let (r2_1, rq_1) = r_moments(&dist.r1);
    let (r2_2, rq_2) = r_moments(&dist.r2);
    let (c1, s1) = phase_moments(&dist.phi1, &dist.theta1);
    let (c2, s2) = phase_moments(&dist.phi2, &dist.theta2);
    let e_sin_delta_i = s2 * c1 - c2 * s1;
    let sign = if e_sin_delta_i.abs() < 1e-14 {
        0
    } else if e_sin_delta_i > 0.0 {
        1
    } else {
        -1
    };
    Ok(MomentSet {
        e_r2: [r2_1, r2_2],
        e_rq: [rq_1, rq_2],
        e_cos_phi_theta: [c1, c2],
        e_sin_phi_theta: [s1, s2],
        e_sin_delta_i,
        e_cos_delta_i: c2 * c1 + s2 * s1,
        sign_e_sin_delta_i: sign,
    })
}
