//! Nonlinear least-squares fit of circuit parameters to measured level
//! energies: damped Levenberg–Marquardt with a numerical Jacobian,
//! initialized from the quartic-approximation inversion and multi-started
//! over ±20% perturbations.

use crate::circuit::{
    solve_unchecked, CircuitError, CircuitSpec, MeasuredLevels, ResonatorSpec, Spectrum,
};

/// Which circuit model to fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitModel {
    TransmonOnly,
    /// Transmon plus resonator; the seed provides starting values for
    /// (g, ω_r), which the transmon levels only weakly constrain.
    WithResonator { g_seed: f64, omega_r_seed: f64, fock_cutoff: usize },
}

/// Fit output: best-fit parameters and per-level residuals in MHz.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub circuit: CircuitSpec,
    pub resonator: Option<ResonatorSpec>,
    /// (level index, model − measured) in MHz, in input order.
    pub residuals_mhz: Vec<(usize, f64)>,
    pub iterations: usize,
}

/// Uncertainty assigned to levels reported without one, in MHz. Keeps the
/// weighting finite and, for files that omit uncertainties entirely,
/// reduces to an ordinary unweighted fit.
pub const DEFAULT_SIGMA_MHZ: f64 = 1.0;

const CHARGE_CUTOFF: usize = 40;

/// Model level energies at the midpoint n_g convention: the average of the
/// n_g = 0 and n_g = 0.5 spectra. The offset charge behind reported
/// fitted energies is usually unstated, so the center of the dispersion
/// band is used and documented.
fn model_energies(
    e_j: f64,
    e_c: f64,
    resonator: Option<&ResonatorSpec>,
    max_index: usize,
) -> Result<Vec<f64>, CircuitError> {
    let count_for = |spectrum: &Spectrum| -> Result<Vec<f64>, CircuitError> {
        match resonator {
            None => Ok(spectrum.energies.clone()),
            Some(_) => {
                // pick the (j_t, 0_r) dressed ladder
                let labeled = crate::circuit::label_dressed_states(spectrum, 0.5)?;
                (0..=max_index)
                    .map(|j| {
                        labeled.labeled_energy(j, 0).ok_or_else(|| {
                            CircuitError::Truncation(format!(
                                "dressed level ({j},0) not labeled during fit"
                            ))
                        })
                    })
                    .collect()
            }
        }
    };
    let dressed_count = match resonator {
        None => max_index + 1,
        // enough dressed states to cover (max_index, 0) amid resonator ladder
        Some(r) => ((max_index + 2) * (r.fock_cutoff + 1)).min(
            (2 * CHARGE_CUTOFF + 1) * r.fock_cutoff,
        ),
    };
    let mut out = vec![0.0; max_index + 1];
    for n_g in [0.0, 0.5] {
        let spec = CircuitSpec { e_j, e_c, n_g, charge_cutoff: CHARGE_CUTOFF };
        let spectrum = solve_unchecked(&spec, resonator, dressed_count)?;
        let e = count_for(&spectrum)?;
        for j in 0..=max_index {
            out[j] += 0.5 * e[j];
        }
    }
    Ok(out)
}

struct Problem<'a> {
    measured: &'a MeasuredLevels,
    model: FitModel,
    max_index: usize,
    weights: Vec<f64>,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        match self.model {
            FitModel::TransmonOnly => 2,
            FitModel::WithResonator { .. } => 4,
        }
    }

    /// Weighted residual vector in MHz.
    fn residuals(&self, p: &[f64]) -> Result<Vec<f64>, CircuitError> {
        if p[0] <= 0.0 || p[1] <= 0.0 {
            return Err(CircuitError::InvalidSpec("negative energy during fit".into()));
        }
        let resonator = match self.model {
            FitModel::TransmonOnly => None,
            FitModel::WithResonator { fock_cutoff, .. } => {
                if p[2] <= 0.0 || p[3] <= 0.0 {
                    return Err(CircuitError::InvalidSpec(
                        "negative resonator parameter during fit".into(),
                    ));
                }
                Some(ResonatorSpec { g: p[2], omega_r: p[3], fock_cutoff })
            }
        };
        let model = model_energies(p[0], p[1], resonator.as_ref(), self.max_index)?;
        Ok(self
            .measured
            .levels
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| w * (model[l.index] * 1e3 - l.energy_mhz))
            .collect())
    }
}

/// Quartic-approximation inversion used to seed the fit: E_C ≈ −α and
/// E_J from ω_q = √(8 E_J E_C) − E_C.
fn quartic_seed(measured: &MeasuredLevels) -> Option<(f64, f64)> {
    let find = |idx: usize| {
        measured
            .levels
            .iter()
            .find(|l| l.index == idx)
            .map(|l| l.energy_mhz * 1e-3)
    };
    let e1 = find(1)?;
    let e2 = find(2)?;
    let alpha = e2 - 2.0 * e1;
    let e_c = (-alpha).max(0.01);
    let e_j = (e1 + e_c).powi(2) / (8.0 * e_c);
    Some((e_j, e_c))
}

/// Fit circuit parameters to measured levels.
///
/// Residuals are weighted by 1/σ with σ floored at
/// [`DEFAULT_SIGMA_MHZ`]; entries with zero recorded uncertainty therefore
/// enter at unit weight.
pub fn fit_parameters(
    measured: &MeasuredLevels,
    model: FitModel,
) -> Result<FitResult, CircuitError> {
    let min_levels = match model {
        FitModel::TransmonOnly => 3,
        FitModel::WithResonator { .. } => 4,
    };
    if measured.levels.len() < min_levels {
        return Err(CircuitError::MeasuredLevels(format!(
            "underdetermined: {} levels given, need at least {min_levels}",
            measured.levels.len()
        )));
    }
    let max_index = measured.levels.iter().map(|l| l.index).max().unwrap();
    if measured.levels.iter().any(|l| l.index == 0) {
        return Err(CircuitError::MeasuredLevels(
            "level 0 is the energy reference and cannot be fit".into(),
        ));
    }
    let weights: Vec<f64> = measured
        .levels
        .iter()
        .map(|l| 1.0 / l.uncertainty_mhz.max(DEFAULT_SIGMA_MHZ))
        .collect();
    let problem = Problem { measured, model, max_index, weights };
    let (ej0, ec0) = quartic_seed(measured).ok_or_else(|| {
        CircuitError::MeasuredLevels("seed requires levels 1 and 2".into())
    })?;
    let base: Vec<f64> = match model {
        FitModel::TransmonOnly => vec![ej0, ec0],
        FitModel::WithResonator { g_seed, omega_r_seed, .. } => {
            vec![ej0, ec0, g_seed, omega_r_seed]
        }
    };
    // multi-start over ±20% perturbations of the seed
    let factors: &[&[f64]] = match model {
        FitModel::TransmonOnly => &[&[1.0, 1.0], &[1.2, 0.8], &[0.8, 1.2], &[1.2, 1.2], &[0.8, 0.8]],
        FitModel::WithResonator { .. } => {
            &[&[1.0, 1.0, 1.0, 1.0], &[1.2, 0.8, 1.0, 1.0], &[0.8, 1.2, 1.0, 1.0]]
        }
    };
    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    for f in factors {
        let start: Vec<f64> = base.iter().zip(f.iter()).map(|(b, s)| b * s).collect();
        if let Ok((p, cost, iters)) = levenberg_marquardt(&problem, start) {
            if best.as_ref().map_or(true, |(_, c, _)| cost < *c) {
                best = Some((p, cost, iters));
            }
        }
        // a start that already sits at numerical zero cannot be beaten
        if best.as_ref().is_some_and(|(_, c, _)| *c < 1e-8) {
            break;
        }
    }
    let (p, _, iterations) =
        best.ok_or_else(|| CircuitError::Truncation("fit did not converge from any start".into()))?;
    let circuit = CircuitSpec::new(p[0], p[1], 0.0, CHARGE_CUTOFF)?;
    let resonator = match model {
        FitModel::TransmonOnly => None,
        FitModel::WithResonator { fock_cutoff, .. } => {
            Some(ResonatorSpec::new(p[3], p[2], fock_cutoff)?)
        }
    };
    let model_e = model_energies(p[0], p[1], resonator.as_ref(), max_index)?;
    let residuals_mhz = measured
        .levels
        .iter()
        .map(|l| (l.index, model_e[l.index] * 1e3 - l.energy_mhz))
        .collect();
    Ok(FitResult { circuit, resonator, residuals_mhz, iterations })
}

const LM_MAX_ITER: usize = 60;
const LM_GTOL: f64 = 1e-12;
const LM_XTOL: f64 = 1e-11;

/// Small dense Levenberg–Marquardt with central-difference Jacobian.
fn levenberg_marquardt(
    problem: &Problem<'_>,
    mut p: Vec<f64>,
) -> Result<(Vec<f64>, f64, usize), CircuitError> {
    let n = problem.n_params();
    let mut r = problem.residuals(&p)?;
    let mut cost: f64 = r.iter().map(|x| x * x).sum();
    let mut lambda = 1e-3;
    let mut iters = 0;
    for _ in 0..LM_MAX_ITER {
        iters += 1;
        // numerical Jacobian
        let m = r.len();
        let mut jac = vec![vec![0.0; n]; m];
        for k in 0..n {
            let h = (p[k].abs() * 1e-6).max(1e-9);
            let mut pp = p.clone();
            pp[k] += h;
            let rp = problem.residuals(&pp)?;
            pp[k] = p[k] - h;
            let rm = problem.residuals(&pp)?;
            for i in 0..m {
                jac[i][k] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        // normal equations JᵀJ + λ diag(JᵀJ)
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            for a in 0..n {
                jtr[a] += jac[i][a] * r[i];
                for b in 0..n {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        if jtr.iter().map(|g| g.abs()).fold(0.0f64, f64::max) < LM_GTOL {
            break;
        }
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for d in 0..n {
                a[d][d] += lambda * jtj[d][d].max(1e-12);
            }
            let Some(step) = solve_dense(&a, &jtr) else {
                lambda *= 10.0;
                continue;
            };
            let cand: Vec<f64> = p.iter().zip(&step).map(|(x, s)| x - s).collect();
            match problem.residuals(&cand) {
                Ok(rc) => {
                    let cc: f64 = rc.iter().map(|x| x * x).sum();
                    if cc < cost {
                        let rel_step = step
                            .iter()
                            .zip(&p)
                            .map(|(s, x)| (s / x.abs().max(1e-12)).abs())
                            .fold(0.0f64, f64::max);
                        p = cand;
                        r = rc;
                        cost = cc;
                        lambda = (lambda * 0.3).max(1e-12);
                        accepted = true;
                        if rel_step < LM_XTOL {
                            return Ok((p, cost, iters));
                        }
                        break;
                    }
                    lambda *= 10.0;
                }
                Err(_) => lambda *= 10.0,
            }
        }
        if !accepted {
            break;
        }
    }
    Ok((p, cost, iters))
}

/// Gaussian elimination with partial pivoting for the tiny LM systems.
fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, piv);
        x.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= m[col][col];
        for row in 0..col {
            x[row] -= m[row][col] * x[col];
            m[row][col] = 0.0;
        }
    }
    Some(x)
}

/// Serialize fitted parameters in the key/value output format.
pub fn fit_report(fit: &FitResult) -> String {
    let mut out = String::new();
    out.push_str(&format!("ej_ghz = {:.6}\n", fit.circuit.e_j));
    out.push_str(&format!("ec_ghz = {:.6}\n", fit.circuit.e_c));
    if let Some(r) = &fit.resonator {
        out.push_str(&format!("g_ghz = {:.6}\n", r.g));
        out.push_str(&format!("omega_r_ghz = {:.6}\n", r.omega_r));
    }
    let resid: Vec<String> = fit
        .residuals_mhz
        .iter()
        .map(|(i, r)| format!("{i}:{r:.4}"))
        .collect();
    out.push_str(&format!("residuals_mhz = [{}]\n", resid.join(", ")));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::MeasuredLevel;
    use approx::assert_abs_diff_eq;

    fn synth_levels(e_j: f64, e_c: f64, indices: &[usize]) -> MeasuredLevels {
        let e = model_energies(e_j, e_c, None, *indices.iter().max().unwrap()).unwrap();
        MeasuredLevels::new(
            indices
                .iter()
                .map(|&i| MeasuredLevel {
                    index: i,
                    energy_mhz: e[i] * 1e3,
                    uncertainty_mhz: 0.0,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_recovers_parameters() {
        let levels = synth_levels(16.2856, 0.17013, &[1, 2, 3, 4, 5]);
        let fit = fit_parameters(&levels, FitModel::TransmonOnly).unwrap();
        assert!((fit.circuit.e_j - 16.2856).abs() / 16.2856 < 1e-6);
        assert!((fit.circuit.e_c - 0.17013).abs() / 0.17013 < 1e-6);
        for (_, r) in &fit.residuals_mhz {
            assert!(r.abs() < 1e-3);
        }
    }

    #[test]
    fn round_trip_from_three_levels() {
        let levels = synth_levels(12.0, 0.25, &[1, 2, 3]);
        let fit = fit_parameters(&levels, FitModel::TransmonOnly).unwrap();
        assert!((fit.circuit.e_j - 12.0).abs() / 12.0 < 1e-6);
        assert!((fit.circuit.e_c - 0.25).abs() / 0.25 < 1e-6);
    }

    #[test]
    fn underdetermined_input_is_rejected() {
        let levels = MeasuredLevels::new(vec![
            MeasuredLevel { index: 1, energy_mhz: 4500.0, uncertainty_mhz: 0.0 },
            MeasuredLevel { index: 2, energy_mhz: 8800.0, uncertainty_mhz: 0.0 },
        ])
        .unwrap();
        assert!(fit_parameters(&levels, FitModel::TransmonOnly).is_err());
    }

    #[test]
    fn reference_device_fit_lands_at_the_least_squares_optimum() {
        let levels = MeasuredLevels::from_csv_str(
            "index,energy_mhz,uncertainty_mhz\n\
             1,4528.52,0\n2,8872.74,0\n3,13016.8,0\n4,16939.9,0\n5,20613,0\n",
        )
        .unwrap();
        let fit = fit_parameters(&levels, FitModel::TransmonOnly).unwrap();
        // the unweighted least-squares minimum of the measured column, with
        // balanced residuals under 2 MHz
        assert_abs_diff_eq!(fit.circuit.e_j, 16.2717, epsilon = 5e-3);
        assert_abs_diff_eq!(fit.circuit.e_c, 0.17023, epsilon = 5e-4);
        for (_, r) in &fit.residuals_mhz {
            assert!(r.abs() < 2.0, "residual {r} MHz too large");
        }
    }

    #[test]
    #[ignore = "several-minute coupled-model fit; run with --ignored"]
    fn coupled_fit_reproduces_synthetic_levels() {
        // Five transmon levels barely constrain four correlated parameters
        // (E_J and ω_r trade off through the dispersive repulsion), so the
        // well-posed checks are the fit quality and identified spectral
        // combinations, not raw parameter recovery.
        let resonator = ResonatorSpec { omega_r: 9.029, g: 0.153, fock_cutoff: 4 };
        let e = model_energies(16.40, 0.1695, Some(&resonator), 5).unwrap();
        let levels = MeasuredLevels::new(
            (1..=5)
                .map(|i| MeasuredLevel {
                    index: i,
                    energy_mhz: e[i] * 1e3,
                    uncertainty_mhz: 0.0,
                })
                .collect(),
        )
        .unwrap();
        let fit = fit_parameters(
            &levels,
            FitModel::WithResonator { g_seed: 0.153, omega_r_seed: 9.029, fock_cutoff: 4 },
        )
        .unwrap();
        // the stiff 4-parameter valley converges to sub-MHz residuals
        // within the iteration budget
        for (_, resid) in &fit.residuals_mhz {
            assert!(resid.abs() < 0.5, "residual {resid} MHz");
        }
        let r = fit.resonator.unwrap();
        let refit = model_energies(fit.circuit.e_j, fit.circuit.e_c, Some(&r), 2).unwrap();
        let alpha_in = e[2] - 2.0 * e[1];
        let alpha_out = refit[2] - 2.0 * refit[1];
        assert!(
            (alpha_out - alpha_in).abs() * 1e3 < 0.5,
            "anharmonicity shifted: {alpha_in} vs {alpha_out}"
        );
    }

    #[test]
    fn report_format_has_expected_keys() {
        let levels = synth_levels(14.0, 0.2, &[1, 2, 3]);
        let fit = fit_parameters(&levels, FitModel::TransmonOnly).unwrap();
        let rep = fit_report(&fit);
        assert!(rep.contains("ej_ghz = "));
        assert!(rep.contains("ec_ghz = "));
        assert!(rep.contains("residuals_mhz = ["));
    }
}
