//! Ideal-displaced-state fits and the hybridization parameter Θ.
//!
//! An off-resonant drive deforms each eigenstate smoothly (the ac-Stark
//! displacement) even far from any resonance. The ideal-displaced state
//! models that smooth deformation as a low-order polynomial of the mode
//! amplitudes over (ξ, ω_d); Θ(j) = 1 − |⟨mode|model⟩|² then isolates
//! genuine hybridization with other states, staying near zero in quiet
//! regions and spiking at multi-photon resonances.

use faer::Mat;
use rayon::prelude::*;

use crate::circuit::{CircuitSpec, ResonatorSpec};
use crate::floquet::{amplitude_sweep, FloquetError, ModeTable};
use crate::linalg::{c64, inner};
use crate::tracking::{detect_swaps, track_branches, TrackingError};

use faer::prelude::SolveLstsq;

/// Default overlap cutoff for including a point in the displaced-state fit.
pub const DEFAULT_CUTOFF: f64 = 0.8;
/// Consecutive sub-cutoff points (with no resonance signature) that trigger
/// an amplitude partition.
const PARTITION_RUN: usize = 3;
/// Columns on each side sharing data with a column's fit.
const WINDOW_HALF_WIDTH: usize = 2;

/// Polynomial degrees of the displaced-state model.
#[derive(Clone, Copy, Debug)]
pub struct FitDegrees {
    /// Even powers of ξ up to this (0, 2, .., xi_max).
    pub xi_max: usize,
    /// Powers of the frequency offset up to this.
    pub omega_max: usize,
}

impl Default for FitDegrees {
    fn default() -> Self {
        Self { xi_max: 4, omega_max: 2 }
    }
}

impl FitDegrees {
    fn xi_powers(&self) -> Vec<u32> {
        (0..=self.xi_max).step_by(2).map(|k| k as u32).collect()
    }
}

/// One amplitude partition of a fitted displaced-state model.
#[derive(Clone, Debug)]
pub struct PartitionFit {
    /// ξ² range covered, inclusive at both ends.
    pub xi2_range: (f64, f64),
    /// coeffs[(i, t)]: amplitude on basis state i for polynomial term t.
    coeffs: Mat<c64>,
    xi_powers: Vec<u32>,
    omega_powers: Vec<u32>,
    /// Frequency offsets are measured from this center (GHz).
    omega_center: f64,
    /// The first partition pins its constant term to the bare state so the
    /// model is exactly bare at ξ = 0; later partitions fit it freely.
    pinned_level: Option<usize>,
}

impl PartitionFit {
    /// Evaluate the model state at (ξ, ω_d), normalized to unit norm.
    pub fn evaluate(&self, xi: f64, omega_d: f64) -> Vec<c64> {
        let dw = omega_d - self.omega_center;
        let dim = self.coeffs.nrows();
        let mut out = vec![c64::new(0.0, 0.0); dim];
        if let Some(level) = self.pinned_level {
            out[level] = c64::new(1.0, 0.0);
        }
        let mut t = 0;
        for &kp in &self.xi_powers {
            for &lp in &self.omega_powers {
                let basis = xi.powi(kp as i32) * dw.powi(lp as i32);
                for i in 0..dim {
                    out[i] += self.coeffs[(i, t)] * basis;
                }
                t += 1;
            }
        }
        let nrm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            for z in out.iter_mut() {
                *z /= c64::new(nrm, 0.0);
            }
        }
        out
    }
}

/// Displaced-state model of one tracked level over an (ξ², ω_d) region.
#[derive(Clone, Debug)]
pub struct DisplacedStateModel {
    pub level: usize,
    pub cutoff: f64,
    pub omega_d: f64,
    pub xi2_range: (f64, f64),
    pub partitions: Vec<PartitionFit>,
}

impl DisplacedStateModel {
    /// The partition covering an amplitude, if inside the fit domain.
    pub fn partition_at(&self, xi2: f64) -> Option<&PartitionFit> {
        if xi2 < self.xi2_range.0 - 1e-12 || xi2 > self.xi2_range.1 + 1e-12 {
            return None;
        }
        self.partitions
            .iter()
            .find(|p| xi2 <= p.xi2_range.1 + 1e-12)
            .or(self.partitions.last())
    }

    /// Evaluate the normalized displaced state at (ξ², ω_d).
    pub fn evaluate(&self, xi2: f64, omega_d: f64) -> Result<Vec<c64>, HybridizationError> {
        let p = self
            .partition_at(xi2)
            .ok_or(HybridizationError::OutsideDomain { xi2, omega_d })?;
        Ok(p.evaluate(xi2.sqrt(), omega_d))
    }
}

/// Θ = 1 − |⟨mode|model state⟩|², clamped into [0, 1] against roundoff.
pub fn theta(
    mode: &[c64],
    model: &DisplacedStateModel,
    xi2: f64,
    omega_d: f64,
) -> Result<f64, HybridizationError> {
    let bar = model.evaluate(xi2, omega_d)?;
    let ov = inner(&bar, mode).norm_sqr();
    Ok((1.0 - ov).clamp(0.0, 1.0))
}

/// Select the Floquet mode identified with a reference state: the one of
/// maximal squared overlap.
fn select_mode(set: &crate::floquet::FloquetSet, reference: &[c64]) -> (usize, f64) {
    let mut best = (0usize, -1.0f64);
    for k in 0..set.dim() {
        let mut ov = c64::new(0.0, 0.0);
        for r in 0..set.dim() {
            ov += reference[r].conj() * set.modes[(r, k)];
        }
        let w = ov.norm_sqr();
        if w > best.1 {
            best = (k, w);
        }
    }
    best
}

/// Θ at one grid point with the mode identified against the model itself:
/// 1 minus the best squared overlap between any Floquet mode and the
/// evaluated displaced state. Stays near zero in quiet regions, reaches
/// ~0.5 at an exact two-state resonance.
pub fn theta_identified(
    set: &crate::floquet::FloquetSet,
    model: &DisplacedStateModel,
    xi2: f64,
    omega_d: f64,
) -> Result<f64, HybridizationError> {
    let bar = model.evaluate(xi2, omega_d)?;
    let (_, ov) = select_mode(set, &bar);
    Ok((1.0 - ov).clamp(0.0, 1.0))
}

/// Amplitudes where a branch swap involving `level` occurs, marked sticky
/// from the event onward: a swap explains lowered reference overlap, so
/// re-partitioning there would hide the resonance.
fn swap_marks(table: &ModeTable, level: usize) -> Result<Vec<bool>, TrackingError> {
    let branches = track_branches(table)?;
    let swaps = detect_swaps(&branches);
    let mut marks = vec![false; table.xi2_grid.len()];
    for e in swaps.iter().filter(|e| e.branches.0 == level || e.branches.1 == level) {
        let onset = e.xi2 - e.xi2_uncertainty - 3.0 * grid_step(&table.xi2_grid);
        for (a, &x) in table.xi2_grid.iter().enumerate() {
            if x >= onset {
                marks[a] = true;
            }
        }
    }
    Ok(marks)
}

fn grid_step(grid: &[f64]) -> f64 {
    if grid.len() < 2 {
        0.0
    } else {
        (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64
    }
}

/// Fit the displaced-state model for `level` on the center column of a
/// window of sweeps, sharing frequency-polynomial terms across the window.
///
/// At every grid point the mode is identified by maximal overlap with the
/// current reference (the bare state first, then the previous partition's
/// fitted state) and qualifies for the fit when that overlap reaches
/// `cutoff`. A sustained drop of the center column below cutoff with no
/// branch-swap signature closes the partition and re-references.
pub fn fit_displaced_state(
    sweeps: &[ModeTable],
    center: usize,
    level: usize,
    cutoff: f64,
    degrees: FitDegrees,
) -> Result<DisplacedStateModel, HybridizationError> {
    if sweeps.is_empty() {
        return Err(HybridizationError::Fit("no sweeps given".into()));
    }
    let grid = &sweeps[0].xi2_grid;
    if grid.is_empty() || grid[0] != 0.0 {
        return Err(HybridizationError::Fit("region must include ξ = 0".into()));
    }
    let dim = sweeps[0].sets[0].dim();
    let lo = center.saturating_sub(WINDOW_HALF_WIDTH);
    let hi = (center + WINDOW_HALF_WIDTH).min(sweeps.len() - 1);
    let window: Vec<&ModeTable> = sweeps[lo..=hi].iter().collect();
    let center_in_window = center - lo;
    let center_swaps = swap_marks(window[center_in_window], level)?;
    let omega_center = window[center_in_window].omega_d;

    let mut reference: Vec<c64> = (0..dim)
        .map(|r| if r == level { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
        .collect();
    let mut partitions: Vec<PartitionFit> = Vec::new();
    let mut part_start = 0usize;
    let n_amp = grid.len();
    let xi_powers = degrees.xi_powers();
    let omega_powers: Vec<u32> = (0..=degrees.omega_max as u32).collect();

    while part_start < n_amp {
        // walk the center column until a sustained cutoff failure
        let mut part_end = n_amp; // exclusive
        let mut below_run = 0usize;
        for a in part_start..n_amp {
            let set = &window[center_in_window].sets[a];
            let (_, ov) = select_mode(set, &reference);
            if ov < cutoff && !center_swaps[a] {
                below_run += 1;
                if below_run >= PARTITION_RUN {
                    part_end = (a + 1 - below_run).max(part_start + 1);
                    break;
                }
            } else {
                below_run = 0;
            }
        }
        // the first partition pins the constant term to the bare state, so
        // its basis excludes the pure-frequency monomials
        let pinned = partitions.is_empty();
        let xi_terms: Vec<u32> = if pinned {
            xi_powers.iter().copied().filter(|&k| k > 0).collect()
        } else {
            xi_powers.clone()
        };
        let n_terms = xi_terms.len() * omega_powers.len();
        // qualifying points from all window columns: the mode identified
        // with the reference must overlap it at or above the cutoff
        let mut rows: Vec<(f64, f64, usize, usize)> = Vec::new(); // (xi, dω, col, mode)
        for (ci, col) in window.iter().enumerate() {
            for a in part_start..part_end {
                let (k, ov) = select_mode(&col.sets[a], &reference);
                if ov >= cutoff {
                    rows.push((grid[a].sqrt(), col.omega_d - omega_center, ci * n_amp + a, k));
                }
            }
        }
        if rows.len() < n_terms {
            if let Some(last) = partitions.last_mut() {
                // not enough resonance-free points to refit; extend the
                // previous model so Θ keeps reporting against it
                last.xi2_range.1 = grid[n_amp - 1];
                break;
            }
            return Err(HybridizationError::Fit(format!(
                "{} qualifying points for {} coefficients (level {level}, ξ² ≥ {:.3})",
                rows.len(),
                n_terms,
                grid[part_start]
            )));
        }
        // design matrix shared across basis indices
        let mut design = Mat::<c64>::zeros(rows.len(), n_terms);
        for (r, &(xi, dw, _, _)) in rows.iter().enumerate() {
            let mut t = 0;
            for &kp in &xi_terms {
                for &lp in &omega_powers {
                    design[(r, t)] = c64::new(xi.powi(kp as i32) * dw.powi(lp as i32), 0.0);
                    t += 1;
                }
            }
        }
        // gauge-aligned mode amplitudes as right-hand sides: rotate each
        // mode so ⟨reference|mode⟩ is real positive — the fit needs a
        // smooth gauge, and the cutoff keeps that overlap well away from 0
        let mut rhs = Mat::<c64>::zeros(rows.len(), dim);
        for (r, &(_, _, packed, k)) in rows.iter().enumerate() {
            let set = &window[packed / n_amp].sets[packed % n_amp];
            let mode = set.mode(k);
            let ov = inner(&reference, &mode);
            let phase = if ov.norm() > 0.0 {
                (ov / c64::new(ov.norm(), 0.0)).conj()
            } else {
                c64::new(1.0, 0.0)
            };
            for i in 0..dim {
                rhs[(r, i)] = mode[i] * phase;
                if pinned && i == level {
                    rhs[(r, i)] -= c64::new(1.0, 0.0);
                }
            }
        }
        let qr = design.qr();
        let sol = qr.solve_lstsq(&rhs); // n_terms × dim
        let mut coeffs = Mat::<c64>::zeros(dim, n_terms);
        for i in 0..dim {
            for t in 0..n_terms {
                coeffs[(i, t)] = sol[(t, i)];
            }
        }
        let part = PartitionFit {
            xi2_range: (grid[part_start], grid[part_end - 1]),
            coeffs,
            xi_powers: xi_terms,
            omega_powers: omega_powers.clone(),
            omega_center,
            pinned_level: if pinned { Some(level) } else { None },
        };
        // the next partition re-references to the fitted state at the boundary
        reference = part.evaluate(part.xi2_range.1.sqrt(), omega_center);
        partitions.push(part);
        part_start = part_end;
    }
    Ok(DisplacedStateModel {
        level,
        cutoff,
        omega_d: omega_center,
        xi2_range: (grid[0], grid[n_amp - 1]),
        partitions,
    })
}

/// Θ(level) over an (ω_d, ξ², n_g) grid plus its n_g average.
#[derive(Clone, Debug)]
pub struct LandscapeGrid {
    pub circuit: CircuitSpec,
    pub resonator: Option<ResonatorSpec>,
    pub level: usize,
    pub truncation: usize,
    pub omega_d_grid: Vec<f64>,
    pub xi2_grid: Vec<f64>,
    pub n_g_samples: Vec<f64>,
    /// theta[g][w][a]: n_g sample g, frequency column w, amplitude a.
    /// NaN marks a failed column.
    pub theta: Vec<Vec<Vec<f64>>>,
    /// Arithmetic mean over n_g samples (failed columns excluded per point).
    pub averaged: Vec<Vec<f64>>,
    /// (n_g index, column index, message) for failed columns.
    pub failures: Vec<(usize, usize, String)>,
}

/// Deterministic n_g samples: a uniform grid over [0, 0.5]; the n_g ↔ 1−n_g
/// reflection makes this equivalent to sampling the full period.
pub fn default_ng_samples(count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.25];
    }
    (0..count).map(|i| 0.5 * i as f64 / (count - 1) as f64).collect()
}

/// Settings for [`compute_landscape`].
#[derive(Clone, Debug)]
pub struct LandscapeSettings {
    pub cutoff: f64,
    pub degrees: FitDegrees,
    /// Eigenbasis truncation (25 for the transmon-only model).
    pub truncation: usize,
}

impl Default for LandscapeSettings {
    fn default() -> Self {
        Self { cutoff: DEFAULT_CUTOFF, degrees: FitDegrees::default(), truncation: 25 }
    }
}

/// Compute the Θ(level) landscape. Columns are independent (ω_d, n_g) units
/// of work; failures are recorded per column and excluded from the average
/// rather than failing the grid.
pub fn compute_landscape(
    circuit: &CircuitSpec,
    resonator: Option<&ResonatorSpec>,
    omega_d_grid: &[f64],
    xi2_grid: &[f64],
    n_g_samples: &[f64],
    level: usize,
    settings: &LandscapeSettings,
) -> Result<LandscapeGrid, HybridizationError> {
    if omega_d_grid.is_empty() || xi2_grid.is_empty() || n_g_samples.is_empty() {
        return Err(HybridizationError::Fit("empty grid".into()));
    }
    let n_w = omega_d_grid.len();
    let n_a = xi2_grid.len();
    let per_ng: Result<Vec<(Vec<Vec<f64>>, Vec<(usize, String)>)>, HybridizationError> =
        n_g_samples
            .par_iter()
            .map(|&n_g| {
                let spec = CircuitSpec { n_g, ..*circuit };
                let spectrum = crate::circuit::solve_unchecked(&spec, resonator, settings.truncation)
                    .map_err(|e| HybridizationError::Fit(e.to_string()))?;
                let sweeps: Vec<Result<ModeTable, FloquetError>> = omega_d_grid
                    .par_iter()
                    .map(|&w| amplitude_sweep(&spectrum, w, xi2_grid))
                    .collect();
                let mut ok_sweeps: Vec<Option<ModeTable>> = Vec::with_capacity(n_w);
                let mut failures: Vec<(usize, String)> = Vec::new();
                for (i, s) in sweeps.into_iter().enumerate() {
                    match s {
                        Ok(t) => ok_sweeps.push(Some(t)),
                        Err(e) => {
                            failures.push((i, e.to_string()));
                            ok_sweeps.push(None);
                        }
                    }
                }
                let mut theta_cols = vec![vec![f64::NAN; n_a]; n_w];
                for w in 0..n_w {
                    let Some(sweep_w) = &ok_sweeps[w] else { continue };
                    let lo = w.saturating_sub(WINDOW_HALF_WIDTH);
                    let hi = (w + WINDOW_HALF_WIDTH).min(n_w - 1);
                    let window: Vec<ModeTable> = (lo..=hi)
                        .filter_map(|c| ok_sweeps[c].clone())
                        .collect();
                    let center = window
                        .iter()
                        .position(|t| t.omega_d == omega_d_grid[w])
                        .unwrap_or(0);
                    let fitted = fit_displaced_state(
                        &window,
                        center,
                        level,
                        settings.cutoff,
                        settings.degrees,
                    );
                    match fitted {
                        Ok(model) => {
                            for a in 0..n_a {
                                if let Ok(t) = theta_identified(
                                    &sweep_w.sets[a],
                                    &model,
                                    xi2_grid[a],
                                    omega_d_grid[w],
                                ) {
                                    theta_cols[w][a] = t;
                                }
                            }
                        }
                        Err(e) => failures.push((w, e.to_string())),
                    }
                }
                Ok((theta_cols, failures))
            })
            .collect();
    let per_ng = per_ng?;
    let mut theta_grid = Vec::with_capacity(n_g_samples.len());
    let mut failures = Vec::new();
    for (g, (cols, fails)) in per_ng.into_iter().enumerate() {
        theta_grid.push(cols);
        for (w, msg) in fails {
            failures.push((g, w, msg));
        }
    }
    let mut averaged = vec![vec![0.0; n_a]; n_w];
    for w in 0..n_w {
        for a in 0..n_a {
            let vals: Vec<f64> = theta_grid
                .iter()
                .map(|g| g[w][a])
                .filter(|v| v.is_finite())
                .collect();
            averaged[w][a] = if vals.is_empty() {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            };
        }
    }
    Ok(LandscapeGrid {
        circuit: *circuit,
        resonator: resonator.copied(),
        level,
        truncation: settings.truncation,
        omega_d_grid: omega_d_grid.to_vec(),
        xi2_grid: xi2_grid.to_vec(),
        n_g_samples: n_g_samples.to_vec(),
        theta: theta_grid,
        averaged,
        failures,
    })
}

impl LandscapeGrid {
    /// Long-form export: omega_d_ghz, xi2, ng, theta.
    pub fn to_table(&self) -> String {
        let mut out = String::from("omega_d_ghz,xi2,ng,theta\n");
        for (g, ng) in self.n_g_samples.iter().enumerate() {
            for (w, om) in self.omega_d_grid.iter().enumerate() {
                for (a, xi2) in self.xi2_grid.iter().enumerate() {
                    out.push_str(&format!(
                        "{om:.6},{xi2:.6},{ng:.6},{:.9}\n",
                        self.theta[g][w][a]
                    ));
                }
            }
        }
        out
    }

    /// Averaged-map export: omega_d_ghz, xi2, theta_avg.
    pub fn averaged_table(&self) -> String {
        let mut out = String::from("omega_d_ghz,xi2,theta_avg\n");
        for (w, om) in self.omega_d_grid.iter().enumerate() {
            for (a, xi2) in self.xi2_grid.iter().enumerate() {
                out.push_str(&format!("{om:.6},{xi2:.6},{:.9}\n", self.averaged[w][a]));
            }
        }
        out
    }

    /// Bilinear interpolation of the averaged map; None outside the grid or
    /// when a needed corner failed.
    pub fn averaged_at(&self, omega_d: f64, xi2: f64) -> Option<f64> {
        let locate = |grid: &[f64], x: f64| -> Option<(usize, f64)> {
            if x < grid[0] - 1e-12 || x > grid[grid.len() - 1] + 1e-12 {
                return None;
            }
            let mut i = grid.iter().rposition(|&g| g <= x + 1e-12).unwrap_or(0);
            if i + 1 >= grid.len() {
                i = grid.len() - 2;
            }
            let t = ((x - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0);
            Some((i, t))
        };
        if self.omega_d_grid.len() < 2 || self.xi2_grid.len() < 2 {
            return None;
        }
        let (wi, wt) = locate(&self.omega_d_grid, omega_d)?;
        let (ai, at) = locate(&self.xi2_grid, xi2)?;
        let v00 = self.averaged[wi][ai];
        let v01 = self.averaged[wi][ai + 1];
        let v10 = self.averaged[wi + 1][ai];
        let v11 = self.averaged[wi + 1][ai + 1];
        if !(v00.is_finite() && v01.is_finite() && v10.is_finite() && v11.is_finite()) {
            return None;
        }
        Some(
            v00 * (1.0 - wt) * (1.0 - at)
                + v10 * wt * (1.0 - at)
                + v01 * (1.0 - wt) * at
                + v11 * wt * at,
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HybridizationError {
    #[error("displaced-state fit: {0}")]
    Fit(String),
    #[error("evaluation outside fit domain: xi2 = {xi2}, omega_d = {omega_d}")]
    OutsideDomain { xi2: f64, omega_d: f64 },
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Floquet(#[from] FloquetError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::solve_unchecked;

    fn circuit(n_g: f64) -> CircuitSpec {
        CircuitSpec { e_j: 16.2856, e_c: 0.17013, n_g, charge_cutoff: 40 }
    }

    fn sweeps_around(
        omega_lo: f64,
        omega_hi: f64,
        n_cols: usize,
        xi2_max: f64,
        n_amp: usize,
    ) -> Vec<ModeTable> {
        let s = solve_unchecked(&circuit(0.25), None, 25).unwrap();
        (0..n_cols)
            .map(|i| {
                let w = omega_lo + (omega_hi - omega_lo) * i as f64 / (n_cols - 1) as f64;
                let grid: Vec<f64> =
                    (0..n_amp).map(|a| xi2_max * a as f64 / (n_amp - 1) as f64).collect();
                amplitude_sweep(&s, w, &grid).unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_amplitude_theta_vanishes() {
        let sweeps = sweeps_around(6.9, 7.1, 5, 0.4, 9);
        let model =
            fit_displaced_state(&sweeps, 2, 1, DEFAULT_CUTOFF, FitDegrees::default()).unwrap();
        let t0 = theta_identified(&sweeps[2].sets[0], &model, 0.0, sweeps[2].omega_d).unwrap();
        assert!(t0 < 1e-6, "theta at zero amplitude: {t0}");
        let bar = model.evaluate(0.0, sweeps[2].omega_d).unwrap();
        assert!(bar[1].norm_sqr() > 0.99);
    }

    #[test]
    fn quiet_window_theta_stays_small() {
        // the 7.0 GHz region is free of low-level resonances up to ξ² = 1
        let sweeps = sweeps_around(6.9, 7.1, 5, 1.0, 21);
        let model =
            fit_displaced_state(&sweeps, 2, 1, DEFAULT_CUTOFF, FitDegrees::default()).unwrap();
        let mut max_t: f64 = 0.0;
        for (a, xi2) in sweeps[2].xi2_grid.iter().enumerate() {
            let t = theta_identified(&sweeps[2].sets[a], &model, *xi2, sweeps[2].omega_d).unwrap();
            max_t = max_t.max(t);
        }
        assert!(max_t < 0.02, "max theta in quiet window: {max_t}");
    }

    #[test]
    fn cutoff_insensitivity_in_quiet_window() {
        let sweeps = sweeps_around(6.9, 7.1, 5, 1.0, 21);
        let m8 = fit_displaced_state(&sweeps, 2, 1, 0.8, FitDegrees::default()).unwrap();
        let m9 = fit_displaced_state(&sweeps, 2, 1, 0.9, FitDegrees::default()).unwrap();
        for (a, xi2) in sweeps[2].xi2_grid.iter().enumerate() {
            let t8 = theta_identified(&sweeps[2].sets[a], &m8, *xi2, sweeps[2].omega_d).unwrap();
            let t9 = theta_identified(&sweeps[2].sets[a], &m9, *xi2, sweeps[2].omega_d).unwrap();
            assert!((t8 - t9).abs() < 0.01, "cutoff sensitivity {t8} vs {t9}");
        }
    }

    #[test]
    fn theta_large_at_the_two_photon_resonance() {
        // a fine amplitude grid through the 1→5 crossing near ξ² ≈ 0.104
        // at 8.02 GHz; at exact resonance the modes hybridize half-and-half
        let sweeps = sweeps_around(7.98, 8.06, 5, 0.15, 61);
        let model =
            fit_displaced_state(&sweeps, 2, 1, DEFAULT_CUTOFF, FitDegrees::default()).unwrap();
        let mut max_t: f64 = 0.0;
        for (a, xi2) in sweeps[2].xi2_grid.iter().enumerate() {
            let t = theta_identified(&sweeps[2].sets[a], &model, *xi2, sweeps[2].omega_d).unwrap();
            max_t = max_t.max(t);
        }
        assert!(max_t > 0.4, "expected strong hybridization, got {max_t}");
    }

    #[test]
    fn theta_invariant_under_mode_phase() {
        let sweeps = sweeps_around(6.9, 7.1, 5, 0.4, 9);
        let model =
            fit_displaced_state(&sweeps, 2, 1, DEFAULT_CUTOFF, FitDegrees::default()).unwrap();
        let mode = sweeps[2].sets[4].mode(1);
        let rotated: Vec<c64> = mode.iter().map(|z| z * c64::from_polar(1.0, 1.234)).collect();
        let a = theta(&mode, &model, sweeps[2].xi2_grid[4], sweeps[2].omega_d).unwrap();
        let b = theta(&rotated, &model, sweeps[2].xi2_grid[4], sweeps[2].omega_d).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn synthetic_polynomial_round_trip() {
        // sweeps whose level-1 "modes" follow a known polynomial surface
        let dim = 4;
        let grid: Vec<f64> = (0..11).map(|a| a as f64 * 0.05).collect();
        let omegas = [7.0, 7.05, 7.1];
        let truth = |xi: f64, dw: f64| -> Vec<c64> {
            let xi2 = xi * xi;
            let mut v = vec![
                c64::new(0.02 * dw * xi2, 0.0),
                c64::new(1.0, 0.0),
                c64::new(0.1 * xi2 + 0.02 * dw * xi2, 0.03 * xi2),
                c64::new(0.05 * xi.powi(4), 0.0),
            ];
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|z| *z /= c64::new(n, 0.0));
            v
        };
        let sweeps: Vec<ModeTable> = omegas
            .iter()
            .map(|&w| {
                let sets = grid
                    .iter()
                    .map(|&xi2| {
                        let v = truth(xi2.sqrt(), w - 7.05);
                        let mut modes = Mat::<c64>::identity(dim, dim);
                        for r in 0..dim {
                            modes[(r, 1)] = v[r];
                        }
                        crate::floquet::FloquetSet {
                            quasienergies: (0..dim).map(|k| k as f64 * 0.1).collect(),
                            modes,
                            omega_d: w,
                            xi2,
                            n_g: 0.0,
                            degenerate_pairs: vec![],
                        }
                    })
                    .collect();
                ModeTable { omega_d: w, n_g: 0.0, xi2_grid: grid.clone(), sets, steps_per_period: 0 }
            })
            .collect();
        let model = fit_displaced_state(&sweeps, 1, 1, 0.8, FitDegrees::default()).unwrap();
        for &xi2 in &grid {
            for &w in &omegas {
                let fitted = model.evaluate(xi2, w).unwrap();
                let exact = truth(xi2.sqrt(), w - 7.05);
                let ov = inner(&fitted, &exact).norm_sqr();
                assert!(1.0 - ov < 1e-8, "recovered overlap {ov} at xi2={xi2}, w={w}");
            }
        }
    }

    #[test]
    fn landscape_bounds_determinism_and_zero_row() {
        let c = circuit(0.0);
        let omega: Vec<f64> = (0..6).map(|i| 7.9 + 0.04 * i as f64).collect();
        let xi2: Vec<f64> = (0..9).map(|a| a as f64 * 0.03).collect();
        let ng = default_ng_samples(2);
        let grid =
            compute_landscape(&c, None, &omega, &xi2, &ng, 1, &LandscapeSettings::default())
                .unwrap();
        assert_eq!(grid.theta.len(), 2);
        assert_eq!(grid.averaged.len(), 6);
        for w in 0..6 {
            for a in 0..9 {
                let v = grid.averaged[w][a];
                if v.is_finite() {
                    assert!((0.0..=1.0).contains(&v));
                }
            }
            if grid.averaged[w][0].is_finite() {
                assert!(grid.averaged[w][0] < 1e-6);
            }
        }
        let rerun =
            compute_landscape(&c, None, &omega, &xi2, &ng, 1, &LandscapeSettings::default())
                .unwrap();
        assert_eq!(grid.to_table(), rerun.to_table());
    }
}
