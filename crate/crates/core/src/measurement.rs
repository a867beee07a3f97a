//! Two-spin component measurements along Oz and Ox.
//!
//! Outcomes are indexed 0..4 in the order (+½,+½), (+½,−½), (−½,+½),
//! (−½,−½) for both axes. Ox probabilities are obtained by projecting the
//! state on tensor products of `(|+⟩ ± |−⟩)/√2`; only the combinations
//! `p1xx ± p4xx` have closed forms, and [`closed_form_ox`]
//! serves as a cross-check of that basis change.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::MixingParams;
use crate::states::{PreparedPair, TwoQubitState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Z,
    X,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Z => "z",
            Axis::X => "x",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(Axis::Z),
            "x" => Ok(Axis::X),
            _ => Err(Error::InvalidInput(format!("unknown axis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbabilities {
    pub p: [f64; 4],
}

impl OutcomeProbabilities {
    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.p.iter().all(|&x| (-tol..=1.0 + tol).contains(&x)) && (self.sum() - 1.0).abs() <= tol
    }
}

pub fn oz_probabilities(state: &TwoQubitState) -> OutcomeProbabilities {
    OutcomeProbabilities {
        p: state.c.map(|x| x.norm_sqr()),
    }
}

pub fn ox_probabilities(state: &TwoQubitState) -> OutcomeProbabilities {
    let [c0, c1, c2, c3] = state.c;
    let amps = [
        c0 + c1 + c2 + c3,
        c0 - c1 + c2 - c3,
        c0 + c1 - c2 - c3,
        c0 - c1 - c2 + c3,
    ];
    OutcomeProbabilities {
        p: amps.map(|a| a.norm_sqr() * 0.25),
    }
}

pub fn probabilities(axis: Axis, state: &TwoQubitState) -> OutcomeProbabilities {
    match axis {
        Axis::Z => oz_probabilities(state),
        Axis::X => ox_probabilities(state),
    }
}

/// `(p1zz, p2zz, p4zz)` from the polar parameters and `v`.
pub fn closed_form_oz(pair: &PreparedPair, v: f64) -> (f64, f64, f64) {
    let (r1, r2) = (pair.q1.r, pair.q2.r);
    let (s1, s2) = (r1 * r1, r2 * r2);
    let (q1, q2) = (pair.q1.q(), pair.q2.q());
    let v2 = v * v;
    let p1 = s1 * s2;
    let p2 = s1 * (1.0 - s2) * (1.0 - v2) + (1.0 - s1) * s2 * v2
        - 2.0 * r1 * r2 * q1 * q2 * (1.0 - v2).max(0.0).sqrt() * v * pair.delta_i().sin();
    let p4 = (1.0 - s1) * (1.0 - s2);
    (p1, p2, p4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormOx {
    pub r14: f64,
    pub i14: f64,
    /// `p1xx − p4xx`.
    pub diff: f64,
    /// `p1xx + p4xx`.
    pub sum: f64,
}

pub fn closed_form_ox(pair: &PreparedPair, mix: &MixingParams) -> ClosedFormOx {
    let (r1, r2) = (pair.q1.r, pair.q2.r);
    let (s1, s2) = (r1 * r1, r2 * r2);
    let (a1, a2) = (r1 * pair.q1.q(), r2 * pair.q2.q());
    let (x1, x2) = (pair.q1.relative_phase(), pair.q2.relative_phase());
    let d = mix.delta_phi_1m1;
    let r14 = s1 * a2 * x2.cos() + s2 * a1 * x1.cos() + (1.0 - s1) * a2 * (x2 - d).cos() + (1.0 - s2) * a1 * (x1 - d).cos();
    let i14 = -s1 * a2 * x2.sin() - s2 * a1 * x1.sin() + (1.0 - s1) * a2 * (x2 - d).sin() + (1.0 - s2) * a1 * (x1 - d).sin();
    let sum = 0.5 + a1 * a2 * (pair.delta_i().cos() + (x1 + x2 - d).cos());
    ClosedFormOx {
        r14,
        i14,
        diff: r14 * mix.w1 - i14 * mix.w2,
        sum,
    }
}

/// Inverse-CDF draw over the fixed outcome order from one uniform in [0, 1).
#[inline]
pub fn sample_outcome(p: &OutcomeProbabilities, u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &pj) in p.p.iter().enumerate() {
        acc += pj;
        if u < acc {
            return j;
        }
    }
    // Rounding left the cumulative sum just below u: take the last
    // outcome with nonzero probability.
    p.p.iter().rposition(|&x| x > 0.0).unwrap_or(3)
}

/// Outcome tallies over `L` trials; its estimate is the relative frequency
/// of each outcome, independent of how the trials were grouped by state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyAccumulator {
    counts: Vec<u64>,
    total: u64,
}

impl FrequencyAccumulator {
    pub fn new(outcomes: usize) -> Self {
        FrequencyAccumulator {
            counts: vec![0; outcomes],
            total: 0,
        }
    }

    /// Accumulator over the `2^qubits` joint outcomes.
    pub fn for_qubits(qubits: u32) -> Self {
        Self::new(1usize << qubits)
    }

    #[inline]
    pub fn accumulate(&mut self, outcome: usize) {
        self.counts[outcome] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &FrequencyAccumulator) {
        assert_eq!(self.counts.len(), other.counts.len(), "outcome spaces differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn estimate(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let l = self.total as f64;
        Ok(self.counts.iter().map(|&c| c as f64 / l).collect())
    }

    /// Estimate for the two-qubit outcome space.
    pub fn estimate4(&self) -> Result<OutcomeProbabilities> {
        let e = self.estimate()?;
        let p: [f64; 4] = e
            .try_into()
            .map_err(|_| Error::InvalidInput("accumulator is not over four outcomes".into()))?;
        Ok(OutcomeProbabilities { p })
    }
}

/// One simulated trial, for audit and replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub series: u32,
    pub axis: Axis,
    pub state: u64,
    /// 1-based outcome index.
    pub outcome: u8,
}

pub fn write_trial_records<W: Write>(mut w: W, records: &[TrialRecord]) -> io::Result<()> {
    writeln!(w, "series,axis,state,outcome")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.series, r.axis, r.state, r.outcome)?;
    }
    Ok(())
}

pub fn read_trial_records(text: &str) -> Result<Vec<TrialRecord>> {
    let bad = |line: &str| Error::InvalidInput(format!("malformed trial record {line:?}"));
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(line));
            }
            Ok(TrialRecord {
                series: f[0].parse().map_err(|_| bad(line))?,
                axis: f[1].parse()?,
                state: f[2].parse().map_err(|_| bad(line))?,
                outcome: f[3].parse().map_err(|_| bad(line))?,
            })
        })
        .collect()
}
