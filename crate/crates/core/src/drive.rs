//! Drive parametrization and perturbative resonance-condition predictions.
//!
//! The dimensionless drive strength ξ is the coherent displacement induced
//! by an off-resonant charge drive, ξ = 2 n_zpf ω_d E_d / (ω_d² − ω_01²);
//! ξ² is proportional to drive power and sets the leading-order ac-Stark
//! shift Δ_q = ξ² α_q / 2.

use crate::circuit::Spectrum;
use crate::linalg::c64;
use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Drive amplitude, either as a bare energy E_d (GHz, units of h) or as the
/// dimensionless displacement ξ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Amplitude {
    EnergyGhz(f64),
    Xi(f64),
}

/// A monochromatic charge drive E_d n̂ cos(2π ω_d t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveSpec {
    /// Drive frequency ω_d/2π in GHz.
    pub omega_d: f64,
    pub amplitude: Amplitude,
}

impl DriveSpec {
    pub fn validate(&self) -> Result<(), DriveError> {
        if !(self.omega_d > 0.0) {
            return Err(DriveError::InvalidDrive("omega_d must be positive".into()));
        }
        Ok(())
    }

    /// Resolve the amplitude to E_d in GHz for a given spectrum.
    pub fn energy_ghz(&self, spectrum: &Spectrum) -> Result<f64, DriveError> {
        match self.amplitude {
            Amplitude::EnergyGhz(e) => Ok(e),
            Amplitude::Xi(xi) => amplitude_from_xi(xi, self.omega_d, spectrum),
        }
    }

    /// Resolve the amplitude to ξ for a given spectrum.
    pub fn xi(&self, spectrum: &Spectrum) -> Result<f64, DriveError> {
        match self.amplitude {
            Amplitude::EnergyGhz(e) => xi_from_amplitude(e, self.omega_d, spectrum),
            Amplitude::Xi(xi) => Ok(xi),
        }
    }
}

fn check_detuning(omega_d: f64, spectrum: &Spectrum) -> Result<(), DriveError> {
    let om01 = spectrum.omega_01();
    if (omega_d - om01).abs() < 1e-12 * om01.max(1.0) {
        return Err(DriveError::ResonantDrive { omega_d, omega_01: om01 });
    }
    Ok(())
}

/// True when the drive sits within 3|α_q| of the qubit, where the
/// displaced-frame derivation behind ξ starts to lose accuracy. Callers
/// should warn but may proceed.
pub fn near_qubit_resonance(omega_d: f64, spectrum: &Spectrum) -> bool {
    (omega_d - spectrum.omega_01()).abs() < 3.0 * spectrum.alpha_q().abs()
}

/// ξ from the drive energy E_d (GHz), using ω_01 and n_zpf of the spectrum.
pub fn xi_from_amplitude(e_d: f64, omega_d: f64, spectrum: &Spectrum) -> Result<f64, DriveError> {
    check_detuning(omega_d, spectrum)?;
    let om01 = spectrum.omega_01();
    Ok(2.0 * spectrum.circuit.n_zpf() * omega_d * e_d / (omega_d * omega_d - om01 * om01))
}

/// Exact inverse of [`xi_from_amplitude`].
pub fn amplitude_from_xi(xi: f64, omega_d: f64, spectrum: &Spectrum) -> Result<f64, DriveError> {
    check_detuning(omega_d, spectrum)?;
    let om01 = spectrum.omega_01();
    Ok(xi * (omega_d * omega_d - om01 * om01) / (2.0 * spectrum.circuit.n_zpf() * omega_d))
}

/// Leading-order ac-Stark shift of the qubit transition, ξ² α_q / 2 (GHz).
pub fn ac_stark_shift(xi: f64, alpha_q: f64) -> f64 {
    xi * xi * alpha_q / 2.0
}

/// Quartic-approximation shift of level ℓ, Δ_ℓ = ℓ Δ_q.
pub fn level_stark_shift(level: i64, xi: f64, alpha_q: f64) -> f64 {
    level as f64 * ac_stark_shift(xi, alpha_q)
}

/// Time-dependent displacement β_lin(t) of the driven-oscillator frame
/// transformation; satisfies β + β* = ξ sin(2π ω_d t). Time in ns,
/// frequencies in GHz.
pub fn beta_lin(
    e_d: f64,
    omega_d: f64,
    omega_q: f64,
    n_zpf: f64,
    t: f64,
) -> Result<c64, DriveError> {
    if (omega_d - omega_q).abs() < 1e-12 * omega_q.max(1.0) {
        return Err(DriveError::ResonantDrive { omega_d, omega_01: omega_q });
    }
    let phase = TAU * omega_d * t;
    let pre = c64::new(0.0, n_zpf * e_d / 2.0);
    Ok(pre
        * (c64::from_polar(1.0, -phase) / (omega_d - omega_q)
            - c64::from_polar(1.0, phase) / (omega_d + omega_q)))
}

/// Direction of a predicted transition, by sign of the level change.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Excitation,
    Decay,
}

/// One frequency-matching solution of ω_{i,i+ℓ} + m ω_s = n ω_d.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceLine {
    pub initial: usize,
    pub final_level: usize,
    /// Transmon level change ℓ = final − initial.
    pub l: i64,
    /// Spurious photons emitted; 0 for intrinsic lines.
    pub m: u32,
    /// Drive photons absorbed.
    pub n: u32,
    /// Registry identifier of the assisting mode; None when m = 0.
    pub mode: Option<String>,
    /// Zero-power drive frequency satisfying the matching condition (GHz).
    pub omega_d0: f64,
    /// Leading-order dω_d/dΔ_q^ac = ℓ/n (dimensionless, Δ in GHz).
    pub slope: f64,
    pub direction: Direction,
}

impl ResonanceLine {
    /// Drive frequency of the line at a given qubit Stark shift (GHz).
    pub fn omega_d_at(&self, stark_shift: f64) -> f64 {
        self.omega_d0 + self.slope * stark_shift
    }

    /// Residual of the matching condition at zero power, given the levels
    /// and mode frequency used to produce the line.
    pub fn matching_residual(&self, spectrum: &Spectrum, omega_s: Option<f64>) -> f64 {
        let de = spectrum.energies[self.final_level] - spectrum.energies[self.initial];
        de + self.m as f64 * omega_s.unwrap_or(0.0) - self.n as f64 * self.omega_d0
    }
}

/// Enumeration caps for [`predict_resonances`].
#[derive(Clone, Copy, Debug)]
pub struct ResonanceCaps {
    pub max_level_change: i64,
    pub max_spurious_photons: u32,
    pub max_drive_photons: u32,
}

impl Default for ResonanceCaps {
    fn default() -> Self {
        // covers every labeled feature in the attribution tables
        Self { max_level_change: 10, max_spurious_photons: 2, max_drive_photons: 4 }
    }
}

/// A frequency window in GHz.
#[derive(Clone, Copy, Debug)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Spurious-mode inputs for line prediction: (identifier, ω_s in GHz).
pub type ModeEntry<'a> = (&'a str, f64);

/// Enumerate all resonance lines from `initial` with zero-power frequency
/// inside the window.
///
/// The parity rule keeps only even ℓ + m + n; it reflects the symmetry of
/// the cosine potential at n_g = 0 and is applied automatically unless the
/// spectrum was generated at a symmetry-breaking offset charge.
pub fn predict_resonances(
    spectrum: &Spectrum,
    modes: &[ModeEntry<'_>],
    initial: usize,
    window: Window,
    caps: ResonanceCaps,
) -> Vec<ResonanceLine> {
    let parity_filter = spectrum.circuit.n_g.rem_euclid(1.0) == 0.0;
    let mut out = Vec::new();
    let count = spectrum.count() as i64;
    let alpha = spectrum.alpha_q();
    let _ = alpha;
    for l in -caps.max_level_change..=caps.max_level_change {
        if l == 0 {
            continue;
        }
        let fin = initial as i64 + l;
        if fin < 0 || fin >= count {
            continue;
        }
        let de = spectrum.energies[fin as usize] - spectrum.energies[initial];
        for m in 0..=caps.max_spurious_photons {
            let mode_list: Vec<(Option<String>, f64)> = if m == 0 {
                vec![(None, 0.0)]
            } else {
                modes.iter().map(|(id, w)| (Some(id.to_string()), *w)).collect()
            };
            for (mode, omega_s) in mode_list {
                for n in 1..=caps.max_drive_photons {
                    if parity_filter && (l + m as i64 + n as i64) % 2 != 0 {
                        continue;
                    }
                    let omega_d0 = (de + m as f64 * omega_s) / n as f64;
                    if omega_d0 <= 0.0 || !window.contains(omega_d0) {
                        continue;
                    }
                    out.push(ResonanceLine {
                        initial,
                        final_level: fin as usize,
                        l,
                        m,
                        n,
                        mode: mode.clone(),
                        omega_d0,
                        slope: l as f64 / n as f64,
                        direction: if l > 0 { Direction::Excitation } else { Direction::Decay },
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| a.omega_d0.partial_cmp(&b.omega_d0).unwrap());
    out
}

#[derive(Debug, thiserror::Error)]
pub enum DriveError {
    #[error("invalid drive: {0}")]
    InvalidDrive(String),
    #[error("drive frequency {omega_d} GHz coincides with the qubit at {omega_01} GHz")]
    ResonantDrive { omega_d: f64, omega_01: f64 },
}
