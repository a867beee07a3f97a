//! Two-spin cylindrical-symmetry Heisenberg coupling in a static field along
//! Oz: physical constants, process parameters, the closed-form evolution
//! matrix and the mixing parameters that drive measurement probabilities.
//!
//! All matrices use the product basis ordering |++⟩, |+−⟩, |−+⟩, |−−⟩.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::TwoQubitState;

/// Sign with the tie `sgn(0) = +1`.
#[inline]
pub fn sgn_nonneg(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    /// Bohr magneton, J/T.
    pub mu_e: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            mu_e: 0.927e-23,
            hbar: 1.054_571_817e-34,
            k_b: 1.380_649e-23,
        }
    }
}

impl PhysicalConstants {
    pub fn new(mu_e: f64, hbar: f64, k_b: f64) -> Result<Self> {
        let c = PhysicalConstants { mu_e, hbar, k_b };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu_e", self.mu_e), ("hbar", self.hbar), ("k_b", self.k_b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be strictly positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Parameters of the Hamiltonian
/// `H = G B (s1z + s2z) − 2 Jxy (s1x s2x + s1y s2y) − 2 Jz s1z s2z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    /// Isotropic g-factor (dimensionless).
    pub g: f64,
    /// Magnetic field along Oz, T.
    pub b: f64,
    /// In-plane exchange principal value, J.
    pub j_xy: f64,
    /// Axial exchange principal value, J.
    pub j_z: f64,
    pub constants: PhysicalConstants,
}

impl ProcessParams {
    /// Builds parameters with the exchange values given as `J/k_B` in kelvin.
    pub fn from_kelvin(g: f64, b: f64, jz_over_kb: f64, jxy_over_kb: f64, constants: PhysicalConstants) -> Self {
        ProcessParams {
            g,
            b,
            j_xy: jxy_over_kb * constants.k_b,
            j_z: jz_over_kb * constants.k_b,
            constants,
        }
    }

    /// g = 2, B = 1 T, Jz/kB = 1 K, Jxy/kB = 0.3 K.
    pub fn reference() -> Self {
        Self::from_kelvin(2.0, 1.0, 1.0, 0.3, PhysicalConstants::default())
    }

    /// `G = g μ_e`, always derived.
    #[inline]
    pub fn gyro(&self) -> f64 {
        self.g * self.constants.mu_e
    }

    /// Zeeman energy `G B`, J.
    #[inline]
    pub fn zeeman(&self) -> f64 {
        self.gyro() * self.b
    }

    /// Dimensionless couplings `(Jxy, Jz, GB)·dt/ħ`.
    pub fn scaled(&self, dt: f64) -> ScaledCouplings {
        let s = dt / self.constants.hbar;
        ScaledCouplings {
            jxy: self.j_xy * s,
            jz: self.j_z * s,
            gb: self.zeeman() * s,
        }
    }
}

/// Angular frequencies (rad/s) of the four eigenstates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyQuad {
    pub omega_11: f64,
    pub omega_10: f64,
    pub omega_00: f64,
    pub omega_1m1: f64,
}

impl FrequencyQuad {
    pub fn phases(&self, dt: f64) -> [f64; 4] {
        [self.omega_11 * dt, self.omega_10 * dt, self.omega_00 * dt, self.omega_1m1 * dt]
    }
}

pub fn angular_frequencies(params: &ProcessParams) -> FrequencyQuad {
    let h = params.constants.hbar;
    let gb = params.zeeman();
    let (jxy, jz) = (params.j_xy, params.j_z);
    FrequencyQuad {
        omega_11: (gb - jz / 2.0) / h,
        omega_10: (-jxy + jz / 2.0) / h,
        omega_00: (jxy + jz / 2.0) / h,
        omega_1m1: (-gb - jz / 2.0) / h,
    }
}

/// Couplings multiplied by an interval and divided by ħ (radians). This is
/// the form in which estimates are produced, so reconstruction builds
/// matrices from it directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledCouplings {
    pub jxy: f64,
    pub jz: f64,
    pub gb: f64,
}

impl ScaledCouplings {
    /// `ω·dt` for the four eigenstates, same ordering as [`FrequencyQuad`].
    pub fn phases(&self) -> [f64; 4] {
        [
            self.gb - self.jz / 2.0,
            -self.jxy + self.jz / 2.0,
            self.jxy + self.jz / 2.0,
            -self.gb - self.jz / 2.0,
        ]
    }

    pub fn matrix(&self) -> ProcessMatrix {
        ProcessMatrix::from_phases(self.phases())
    }

    pub fn scale(&self, factor: f64) -> Self {
        ScaledCouplings {
            jxy: self.jxy * factor,
            jz: self.jz * factor,
            gb: self.gb * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingParams {
    pub delta_e: f64,
    pub v: f64,
    pub delta_phi_1m1: f64,
    pub delta_phi_10: f64,
    pub w1: f64,
    pub w2: f64,
}

impl MixingParams {
    pub fn from_scaled(c: &ScaledCouplings) -> Self {
        let delta_e = -c.jxy;
        let delta_phi_10 = -c.jxy + c.jz - c.gb;
        MixingParams {
            delta_e,
            v: sgn_nonneg(delta_e.cos()) * delta_e.sin(),
            delta_phi_1m1: -2.0 * c.gb,
            delta_phi_10,
            w1: delta_phi_10.cos(),
            w2: delta_phi_10.sin(),
        }
    }
}

pub fn mixing_parameters(params: &ProcessParams, dt: f64) -> MixingParams {
    MixingParams::from_scaled(&params.scaled(dt))
}

/// Dense 4×4 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessMatrix {
    pub entries: [[Complex64; 4]; 4],
}

/// The constant change of basis between the product basis and the
/// coupled (triplet/singlet) basis. It is real, symmetric and its own
/// inverse.
pub fn coupling_basis() -> ProcessMatrix {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    ProcessMatrix {
        entries: [[o, z, z, z], [z, s, s, z], [z, s, -s, z], [z, z, z, o]],
    }
}

impl ProcessMatrix {
    pub fn identity() -> Self {
        Self::diagonal([Complex64::new(1.0, 0.0); 4])
    }

    pub fn zeros() -> Self {
        ProcessMatrix {
            entries: [[Complex64::new(0.0, 0.0); 4]; 4],
        }
    }

    pub fn diagonal(d: [Complex64; 4]) -> Self {
        let mut m = Self::zeros();
        for (i, x) in d.into_iter().enumerate() {
            m.entries[i][i] = x;
        }
        m
    }

    /// `Q · diag(e^{−i·phase_k}) · Q`, expanded. The outer states are
    /// untouched by Q; the inner block mixes the triplet and singlet
    /// phases as half-sum and half-difference.
    pub fn from_phases(phases: [f64; 4]) -> Self {
        let d: [Complex64; 4] = phases.map(|p| Complex64::from_polar(1.0, -p));
        let sum = (d[1] + d[2]) * 0.5;
        let diff = (d[1] - d[2]) * 0.5;
        let mut m = Self::zeros();
        m.entries[0][0] = d[0];
        m.entries[1][1] = sum;
        m.entries[1][2] = diff;
        m.entries[2][1] = diff;
        m.entries[2][2] = sum;
        m.entries[3][3] = d[3];
        m
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.entries[i][j] = self.entries[j][i].conj();
            }
        }
        m
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut m = *self;
        m.entries.iter_mut().flatten().for_each(|x| *x *= factor);
        m
    }

    pub fn apply(&self, c: &[Complex64; 4]) -> [Complex64; 4] {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (o, row) in out.iter_mut().zip(self.entries.iter()) {
            *o = row[0] * c[0] + row[1] * c[1] + row[2] * c[2] + row[3] * c[3];
        }
        out
    }

    /// Frobenius norm with entry moduli.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.entries[i][j] -= other.entries[i][j];
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).entries.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// `‖M·M† − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        (*self * self.dagger()).sub(&Self::identity()).frobenius_norm()
    }
}

impl Mul for ProcessMatrix {
    type Output = ProcessMatrix;

    fn mul(self, rhs: ProcessMatrix) -> ProcessMatrix {
        let mut m = ProcessMatrix::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.entries[i][j] = (0..4).map(|k| self.entries[i][k] * rhs.entries[k][j]).sum();
            }
        }
        m
    }
}

pub fn build_evolution_matrix(params: &ProcessParams, dt: f64) -> ProcessMatrix {
    ProcessMatrix::from_phases(angular_frequencies(params).phases(dt))
}

pub fn apply_process(m: &ProcessMatrix, state: &TwoQubitState) -> TwoQubitState {
    TwoQubitState { c: m.apply(&state.c) }
}
