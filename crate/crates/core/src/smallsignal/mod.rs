//! Small-signal stability of the post-contingency operating point.
//!
//! Machines follow the classical model: a constant EMF behind transient
//! reactance and a second-order swing equation. Loads are frozen as
//! constant admittances at the solved voltages and the network is
//! Kron-reduced to the internal machine nodes. Angles are measured
//! relative to a reference machine so the rigid-body mode never enters the
//! state matrix.

mod eigen;
mod linearize;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridCase;

pub use eigen::spectrum;
pub use linearize::linearize;
pub(crate) use linearize::linearize_resolved;

pub const DEFAULT_EPS_STAB: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineParams {
    /// Inertia constant on machine base, s.
    pub inertia_h: f64,
    /// Damping on machine base, pu.
    pub damping_d: f64,
    /// Transient reactance on machine base, pu.
    pub xd_transient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicParams {
    /// One entry per generator, case order.
    pub machines: Vec<MachineParams>,
    /// Synchronous speed, rad/s.
    pub omega_s: f64,
}

impl DynamicParams {
    pub fn from_case(case: &GridCase) -> Result<Self> {
        let machines: Vec<MachineParams> = case
            .generators
            .iter()
            .map(|g| MachineParams {
                inertia_h: g.inertia_h,
                damping_d: g.damping_d,
                xd_transient: g.xd_transient,
            })
            .collect();
        let params = DynamicParams {
            machines,
            omega_s: 2.0 * std::f64::consts::PI * case.frequency,
        };
        params.check()?;
        Ok(params)
    }

    fn check(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.omega_s > 0.0) {
            problems.push(format!("synchronous speed must be positive, got {}", self.omega_s));
        }
        for (k, m) in self.machines.iter().enumerate() {
            for (name, v) in [("inertia_h", m.inertia_h), ("damping_d", m.damping_d), ("xd_transient", m.xd_transient)] {
                if !(v > 0.0 && v.is_finite()) {
                    problems.push(format!("generator {k}: {name} must be positive, got {v}"));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// Linearized swing dynamics in relative coordinates. States are
/// `[δ_i - δ_ref, ω_i - ω_ref]` for every non-reference machine in
/// `generators` order.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    pub matrix: DMatrix<f64>,
    /// Case indices of the non-reference machines, in state order.
    pub generators: Vec<usize>,
    /// Case index of the reference machine.
    pub reference: usize,
}

impl StateMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Linearization {
    Model(StateMatrix),
    /// Fewer than two machines in the main island; there is no
    /// electromechanical mode to assess.
    Degenerate { machines: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Sorted by real part, then imaginary part, descending.
    pub eigenvalues: Vec<Complex64>,
    pub spectral_abscissa: f64,
    pub unstable: bool,
    pub dominant_mode: Complex64,
}

/// Spectrum of the state matrix. A mode with real part at or above
/// `-eps_stab` marks the operating point unstable.
pub fn eigenvalues(a: &StateMatrix, eps_stab: f64) -> Result<SpectralReport> {
    let mut eigenvalues = spectrum(&a.matrix)?;
    if eigenvalues.is_empty() {
        return Err(Error::Contract("state matrix is empty".into()));
    }
    eigenvalues.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    let dominant_mode = eigenvalues[0];
    Ok(SpectralReport {
        spectral_abscissa: dominant_mode.re,
        unstable: dominant_mode.re >= -eps_stab,
        dominant_mode,
        eigenvalues,
    })
}
