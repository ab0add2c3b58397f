//! Measured-landscape ingestion, ridge extraction, and the three-way
//! mechanism classification.
//!
//! The decision procedure: a feature that tracks a fixed ac-Stark shift
//! across a wide frequency span is a Stark-shift resonance with a spurious
//! mode (A); a feature coinciding with a ridge of the simulated
//! hybridization landscape is an intrinsic multi-photon transition (B);
//! everything else is inelastic scattering into the environment (C), with
//! frequency-matching attribution attempted against the mode registry.

use std::path::Path;

use crate::circuit::Spectrum;
use crate::environment::{attribute_feature, Attribution, FeatureSummary, SpuriousModeRegistry};
use crate::hybridization::LandscapeGrid;

/// Measured transition-probability landscape on an
/// (ω_d, Δ_q^ac/α_q) grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredLandscape {
    /// Strictly increasing drive frequencies (GHz).
    pub omega_d: Vec<f64>,
    /// Strictly increasing normalized Stark shift Δ_q^ac/α_q ≥ 0.
    pub stark_norm: Vec<f64>,
    /// prob[s][w]: transition probability at stark row s, frequency col w.
    pub prob: Vec<Vec<f64>>,
    /// Masked cells are excluded from extraction.
    pub mask: Vec<Vec<bool>>,
    /// Which state the transmon was prepared in (0 or 1).
    pub initial_state: usize,
}

impl MeasuredLandscape {
    /// Parse the long-form `omega_d_ghz,stark_norm,prob` table. The grid
    /// must be complete; row order is free.
    pub fn from_csv_str(text: &str, initial_state: usize) -> Result<Self, ClassifyError> {
        let mut triples: Vec<(f64, f64, f64, usize)> = Vec::new();
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let (_, header) = lines.next().ok_or_else(|| ClassifyError::Format("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["omega_d_ghz", "stark_norm", "prob"] {
            return Err(ClassifyError::Format(format!("unexpected header {header:?}")));
        }
        for (lineno, line) in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(ClassifyError::Format(format!("line {}: expected 3 fields", lineno + 1)));
            }
            let num = |s: &str| -> Result<f64, ClassifyError> {
                s.parse().map_err(|_| ClassifyError::Format(format!("line {}: bad number", lineno + 1)))
            };
            let (w, s, p) = (num(f[0])?, num(f[1])?, num(f[2])?);
            if !(0.0..=1.0).contains(&p) {
                return Err(ClassifyError::Format(format!(
                    "line {}: probability {p} outside [0, 1]",
                    lineno + 1
                )));
            }
            triples.push((w, s, p, lineno + 1));
        }
        let mut omega_d: Vec<f64> = triples.iter().map(|t| t.0).collect();
        omega_d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        omega_d.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut stark_norm: Vec<f64> = triples.iter().map(|t| t.1).collect();
        stark_norm.sort_by(|a, b| a.partial_cmp(b).unwrap());
        stark_norm.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let find = |grid: &[f64], x: f64| grid.iter().position(|g| (g - x).abs() < 1e-12).unwrap();
        let mut prob = vec![vec![f64::NAN; omega_d.len()]; stark_norm.len()];
        for (w, s, p, lineno) in triples {
            let (wi, si) = (find(&omega_d, w), find(&stark_norm, s));
            if prob[si][wi].is_finite() {
                return Err(ClassifyError::Format(format!("line {lineno}: duplicate grid point")));
            }
            prob[si][wi] = p;
        }
        if prob.iter().flatten().any(|p| !p.is_finite()) {
            return Err(ClassifyError::Format("incomplete grid".into()));
        }
        let mask = vec![vec![false; omega_d.len()]; stark_norm.len()];
        Ok(Self { omega_d, stark_norm, prob, mask, initial_state })
    }

    pub fn from_csv_file(path: &Path, initial_state: usize) -> Result<Self, ClassifyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClassifyError::Format(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text, initial_state)
    }

    /// Apply a mask sidecar listing `omega_d_ghz,stark_norm` rows to drop.
    pub fn apply_mask_str(&mut self, text: &str) -> Result<(), ClassifyError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let Some((_, header)) = lines.next() else { return Ok(()) };
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["omega_d_ghz", "stark_norm"] {
            return Err(ClassifyError::Format(format!("unexpected mask header {header:?}")));
        }
        for (lineno, line) in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 2 {
                return Err(ClassifyError::Format(format!("mask line {}: expected 2 fields", lineno + 1)));
            }
            let num = |s: &str| -> Result<f64, ClassifyError> {
                s.parse().map_err(|_| ClassifyError::Format(format!("mask line {}: bad number", lineno + 1)))
            };
            let (w, s) = (num(f[0])?, num(f[1])?);
            let wi = self.omega_d.iter().position(|g| (g - w).abs() < 1e-9);
            let si = self.stark_norm.iter().position(|g| (g - s).abs() < 1e-9);
            match (wi, si) {
                (Some(wi), Some(si)) => self.mask[si][wi] = true,
                _ => {
                    return Err(ClassifyError::Format(format!(
                        "mask line {}: point not on the grid",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("omega_d_ghz,stark_norm,prob\n");
        for (si, s) in self.stark_norm.iter().enumerate() {
            for (wi, w) in self.omega_d.iter().enumerate() {
                out.push_str(&format!("{w},{s},{}\n", self.prob[si][wi]));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        let monotone = |g: &[f64]| g.windows(2).all(|w| w[1] > w[0]);
        if !monotone(&self.omega_d) || !monotone(&self.stark_norm) {
            return Err(ClassifyError::Format("axes must be strictly monotone".into()));
        }
        for row in &self.prob {
            for &p in row {
                if !(0.0..=1.0).contains(&p) {
                    return Err(ClassifyError::Format(format!("probability {p} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// Mechanism labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mechanism {
    /// Stark-shift resonance with a spurious mode near the qubit.
    A,
    /// Intrinsic multi-photon transition.
    B,
    /// Inelastic scattering into an environment mode.
    C,
    Unresolved,
}

impl Mechanism {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mechanism::A => "A",
            Mechanism::B => "B",
            Mechanism::C => "C",
            Mechanism::Unresolved => "unresolved",
        }
    }
}

/// An extracted resonant feature.
#[derive(Clone, Debug)]
pub struct Feature {
    /// Ridge samples as (stark_norm, ω_d GHz), ascending in stark.
    pub points: Vec<(f64, f64)>,
    /// dω_d/d(Δ/α) fitted on the low-power half.
    pub slope_norm: f64,
    /// ω_d at zero power (GHz).
    pub intercept_ghz: f64,
    pub initial_state: usize,
    pub label: Mechanism,
    /// Which test fired, with numbers.
    pub evidence: String,
    /// Candidate attributions when labeled C.
    pub attributions: Vec<Attribution>,
}

/// Column-pass features qualify as quasi-horizontal candidates only below
/// this stark-norm span.
const HORIZONTAL_RETENTION_SPAN: f64 = 0.05;

/// Find resonant features as linked chains of local maxima.
///
/// Two passes cover the two feature orientations: per-power-row maxima
/// linked across rows catch sloped lines ω(Δ), and per-frequency-column
/// maxima linked across columns catch quasi-horizontal features Δ(ω),
/// which a row scan cannot follow. Overlapping detections are
/// deduplicated, keeping the longer chain. `prominence` is the absolute
/// probability a local maximum must reach. Chains tolerate gaps up to two
/// rows (columns) before being split, which keeps features broken by slow
/// mode switching in one piece.
pub fn extract_ridges(
    landscape: &MeasuredLandscape,
    prominence: f64,
) -> Result<Vec<Feature>, ClassifyError> {
    if !(prominence > 0.0 && prominence < 1.0) {
        return Err(ClassifyError::Format("prominence must lie in (0, 1)".into()));
    }
    landscape.validate()?;
    let row_chains = scan_pass(landscape, prominence, false);
    let col_chains = scan_pass(landscape, prominence, true);

    // retention: row chains need 2 points; column chains exist to catch
    // quasi-horizontal features and must look the part
    let mut candidates: Vec<Vec<(f64, f64)>> = Vec::new();
    candidates.extend(row_chains.into_iter().filter(|c| c.len() >= 2));
    candidates.extend(col_chains.into_iter().filter(|c| {
        let s_span = span(c.iter().map(|p| p.0));
        c.len() >= 5 && s_span <= HORIZONTAL_RETENTION_SPAN
    }));
    // dedup: drop any chain mostly covered by a longer one
    candidates.sort_by(|a, b| b.len().cmp(&a.len()));
    let n_w = landscape.omega_d.len();
    let n_s = landscape.stark_norm.len();
    let cell_w = if n_w > 1 {
        (landscape.omega_d[n_w - 1] - landscape.omega_d[0]) / (n_w - 1) as f64
    } else {
        1.0
    };
    let cell_s = if n_s > 1 {
        (landscape.stark_norm[n_s - 1] - landscape.stark_norm[0]) / (n_s - 1) as f64
    } else {
        1.0
    };
    let mut kept: Vec<Vec<(f64, f64)>> = Vec::new();
    'cand: for c in candidates {
        for k in &kept {
            let covered = c
                .iter()
                .filter(|&&(s, w)| {
                    k.iter().any(|&(ks, kw)| {
                        ((s - ks) / cell_s).abs() <= 3.0 && ((w - kw) / cell_w).abs() <= 3.0
                    })
                })
                .count();
            if covered as f64 >= 0.6 * c.len() as f64 {
                continue 'cand;
            }
        }
        kept.push(c);
    }

    let mut features: Vec<Feature> = kept
        .into_iter()
        .map(|mut points| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (slope, intercept) = robust_line(&points);
            Feature {
                points,
                slope_norm: slope,
                intercept_ghz: intercept,
                initial_state: landscape.initial_state,
                label: Mechanism::Unresolved,
                evidence: String::new(),
                attributions: Vec::new(),
            }
        })
        .collect();
    features.sort_by(|a, b| a.intercept_ghz.total_cmp(&b.intercept_ghz));
    Ok(features)
}

fn span(values: impl Iterator<Item = f64>) -> f64 {
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// One linking pass. With `transposed = false`, maxima are found along ω
/// within each power row and linked across rows; with `transposed = true`,
/// maxima are found along the stark axis within each frequency column and
/// linked across columns (interior maxima only, so flat plateaus do not
/// shed edge artifacts).
fn scan_pass(
    landscape: &MeasuredLandscape,
    prominence: f64,
    transposed: bool,
) -> Vec<Vec<(f64, f64)>> {
    let n_w = landscape.omega_d.len();
    let n_s = landscape.stark_norm.len();
    let (outer_n, inner_n) = if transposed { (n_w, n_s) } else { (n_s, n_w) };
    let inner_axis: &[f64] = if transposed { &landscape.stark_norm } else { &landscape.omega_d };
    let outer_axis: &[f64] = if transposed { &landscape.omega_d } else { &landscape.stark_norm };
    let value = |outer: usize, inner: usize| -> Option<f64> {
        let (si, wi) = if transposed { (inner, outer) } else { (outer, inner) };
        if landscape.mask[si][wi] {
            None
        } else {
            Some(landscape.prob[si][wi])
        }
    };
    const MAX_GAP: usize = 2;
    struct Active {
        points: Vec<(f64, f64)>, // (outer value, inner position)
        last_outer: usize,
        velocity: f64,
    }
    let mut active: Vec<Active> = Vec::new();
    let mut done: Vec<Vec<(f64, f64)>> = Vec::new();
    let cell = if inner_n > 1 {
        (inner_axis[inner_n - 1] - inner_axis[0]) / (inner_n - 1) as f64
    } else {
        f64::INFINITY
    };
    let link_radius = 3.0 * cell;
    for oi in 0..outer_n {
        let mut maxima: Vec<f64> = Vec::new();
        for ii in 0..inner_n {
            let Some(p) = value(oi, ii) else { continue };
            if p < prominence {
                continue;
            }
            let before = if ii > 0 { value(oi, ii - 1) } else { None };
            let after = if ii + 1 < inner_n { value(oi, ii + 1) } else { None };
            let is_max = if transposed {
                // interior maxima only
                matches!((before, after), (Some(b), Some(a)) if p >= b && p > a)
            } else {
                p >= before.unwrap_or(-1.0) && p > after.unwrap_or(-1.0)
            };
            if is_max {
                let mut pos = inner_axis[ii];
                if let (Some(b), Some(a)) = (before, after) {
                    let denom = b - 2.0 * p + a;
                    if denom < -1e-12 {
                        let delta = 0.5 * (b - a) / denom;
                        let step = 0.5 * (inner_axis[ii + 1] - inner_axis[ii - 1]);
                        pos += delta.clamp(-0.5, 0.5) * step;
                    }
                }
                maxima.push(pos);
            }
        }
        let mut taken = vec![false; maxima.len()];
        for ridge in active.iter_mut() {
            let ahead = (oi - ridge.last_outer) as f64;
            let pred = ridge.points.last().unwrap().1 + ridge.velocity * ahead;
            let mut best: Option<(usize, f64)> = None;
            for (mi, &m) in maxima.iter().enumerate() {
                if taken[mi] {
                    continue;
                }
                let d = (m - pred).abs();
                if d <= link_radius && best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((mi, d));
                }
            }
            if let Some((mi, _)) = best {
                taken[mi] = true;
                let prev = ridge.points.last().unwrap().1;
                ridge.velocity = if oi > ridge.last_outer {
                    (maxima[mi] - prev) / (oi - ridge.last_outer) as f64
                } else {
                    0.0
                };
                ridge.points.push((outer_axis[oi], maxima[mi]));
                ridge.last_outer = oi;
            }
        }
        let mut still_active = Vec::new();
        for r in active.drain(..) {
            if oi - r.last_outer > MAX_GAP {
                done.push(r.points);
            } else {
                still_active.push(r);
            }
        }
        active = still_active;
        for (mi, &m) in maxima.iter().enumerate() {
            if !taken[mi] {
                active.push(Active {
                    points: vec![(outer_axis[oi], m)],
                    last_outer: oi,
                    velocity: 0.0,
                });
            }
        }
    }
    done.extend(active.into_iter().map(|r| r.points));
    // normalize point tuples to (stark, omega)
    if transposed {
        for chain in done.iter_mut() {
            for p in chain.iter_mut() {
                *p = (p.1, p.0);
            }
        }
    }
    done
}

/// Theil–Sen line fit ω(s) over the low-power half of a ridge: robust to a
/// few bent points at high power, where the perturbative line construction
/// stops holding. Quasi-horizontal point sets (no stark extent to fit
/// against) get an infinite slope and no intercept.
fn robust_line(points: &[(f64, f64)]) -> (f64, f64) {
    if span(points.iter().map(|p| p.0)) < 1e-4 {
        return (f64::INFINITY, f64::NAN);
    }
    let half = (points.len() / 2).max(2).min(points.len());
    let pts = &points[..half];
    let mut slopes = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let ds = pts[j].0 - pts[i].0;
            if ds.abs() > 1e-12 {
                slopes.push((pts[j].1 - pts[i].1) / ds);
            }
        }
    }
    if slopes.is_empty() {
        return (f64::INFINITY, f64::NAN);
    }
    slopes.sort_by(|a, b| a.total_cmp(b));
    let slope = slopes[slopes.len() / 2];
    let mut intercepts: Vec<f64> = pts.iter().map(|&(s, w)| w - slope * s).collect();
    intercepts.sort_by(|a, b| a.total_cmp(b));
    (slope, intercepts[intercepts.len() / 2])
}

/// Thresholds of the classification tests.
#[derive(Clone, Copy, Debug)]
pub struct ClassifyThresholds {
    /// Mechanism A: stark-norm variation below this across the span.
    pub quasi_horizontal_stark_span: f64,
    /// Mechanism A: minimum frequency span in GHz.
    pub quasi_horizontal_min_ghz: f64,
    /// Mechanism B: mean simulated Θ along the ridge above this.
    pub theta_mean: f64,
    /// Mechanism B: intercept agreement with a simulated ridge, MHz.
    pub intercept_agreement_mhz: f64,
    /// Prominence used when extracting ridges from the Θ landscape.
    pub theta_ridge_prominence: f64,
    /// Mechanism C attribution tolerance, MHz.
    pub attribution_tolerance_mhz: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            quasi_horizontal_stark_span: 0.02,
            quasi_horizontal_min_ghz: 0.3,
            theta_mean: 0.05,
            intercept_agreement_mhz: 50.0,
            theta_ridge_prominence: 0.1,
            attribution_tolerance_mhz: 50.0,
        }
    }
}

/// View a Θ landscape's averaged map as a landscape in the measured-data
/// axes (stark_norm = ξ²/2), so the same ridge extractor applies; failed
/// cells read as zero.
fn theta_as_landscape(grid: &LandscapeGrid) -> MeasuredLandscape {
    let prob: Vec<Vec<f64>> = (0..grid.xi2_grid.len())
        .map(|a| {
            (0..grid.omega_d_grid.len())
                .map(|w| {
                    let v = grid.averaged[w][a];
                    if v.is_finite() {
                        v.clamp(0.0, 1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    MeasuredLandscape {
        mask: vec![vec![false; grid.omega_d_grid.len()]; grid.xi2_grid.len()],
        omega_d: grid.omega_d_grid.clone(),
        stark_norm: grid.xi2_grid.iter().map(|x| x / 2.0).collect(),
        prob,
        initial_state: grid.level,
    }
}

/// Extract ridges from a simulated Θ landscape (axes mapped to the
/// measured-data convention, stark_norm = ξ²/2).
pub fn theta_ridges(grid: &LandscapeGrid, prominence: f64) -> Result<Vec<Feature>, ClassifyError> {
    extract_ridges(&theta_as_landscape(grid), prominence)
}

/// Label each feature A, B, or C following the sequential decision
/// procedure; features too short to test stay unresolved. Classification
/// treats each feature independently, so the output order matches the
/// input order.
pub fn classify_features(
    features: &[Feature],
    theta_landscape: &LandscapeGrid,
    registry: &SpuriousModeRegistry,
    spectrum: &Spectrum,
    thresholds: &ClassifyThresholds,
) -> Result<Vec<Feature>, ClassifyError> {
    // intercepts of the simulated resonance fronts, for the B coincidence test
    let theta_features = theta_ridges(theta_landscape, thresholds.theta_ridge_prominence)?;
    let alpha_q = spectrum.alpha_q();
    features
        .iter()
        .map(|f| {
            let mut out = f.clone();
            if f.points.len() < 3 {
                out.label = Mechanism::Unresolved;
                out.evidence = "ridge too short to test".into();
                return Ok(out);
            }
            // A: fixed Stark shift across a wide frequency span
            let s_span = f.points.iter().map(|p| p.0).fold(f64::MIN, f64::max)
                - f.points.iter().map(|p| p.0).fold(f64::MAX, f64::min);
            let w_span = f.points.iter().map(|p| p.1).fold(f64::MIN, f64::max)
                - f.points.iter().map(|p| p.1).fold(f64::MAX, f64::min);
            if s_span < thresholds.quasi_horizontal_stark_span
                && w_span >= thresholds.quasi_horizontal_min_ghz
            {
                out.label = Mechanism::A;
                out.evidence = format!(
                    "stark span {:.4} over {:.3} GHz",
                    s_span, w_span
                );
                return Ok(out);
            }
            // B: coincidence with the simulated hybridization landscape
            let theta_vals: Vec<f64> = f
                .points
                .iter()
                .filter_map(|&(s, w)| theta_landscape.averaged_at(w, 2.0 * s))
                .collect();
            let mean_theta = if theta_vals.is_empty() {
                0.0
            } else {
                theta_vals.iter().sum::<f64>() / theta_vals.len() as f64
            };
            let intercept_match = theta_features
                .iter()
                .map(|t| (t.intercept_ghz - f.intercept_ghz).abs() * 1e3)
                .fold(f64::INFINITY, f64::min);
            if mean_theta > thresholds.theta_mean
                && intercept_match <= thresholds.intercept_agreement_mhz
            {
                out.label = Mechanism::B;
                out.evidence = format!(
                    "mean theta {:.3} along ridge, simulated intercept within {:.1} MHz",
                    mean_theta, intercept_match
                );
                return Ok(out);
            }
            // C: attribution against the registry; empty attribution is
            // still C, explicitly unexplained
            let summary = FeatureSummary {
                initial_state: f.initial_state,
                intercept_ghz: f.intercept_ghz,
                slope: f.slope_norm / alpha_q,
            };
            let attrs = attribute_feature(
                &summary,
                spectrum,
                registry,
                thresholds.attribution_tolerance_mhz,
            );
            out.label = Mechanism::C;
            out.evidence = if attrs.is_empty() {
                "unexplained extrinsic (no registry match)".into()
            } else {
                format!("{} registry match(es)", attrs.len())
            };
            out.attributions = attrs;
            Ok(out)
        })
        .collect()
}

/// One record per feature: label, slope, intercept, evidence, attribution.
pub fn classification_report(features: &[Feature]) -> String {
    let mut out =
        String::from("label,initial,intercept_ghz,slope_norm,n_points,attribution,evidence\n");
    for f in features {
        let attr = f
            .attributions
            .first()
            .map(|a| {
                format!(
                    "l={} m={} n={} mode={}",
                    a.line.l,
                    a.line.m,
                    a.line.n,
                    a.line.mode.as_deref().unwrap_or("-")
                )
            })
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{},{},{:.6},{:.4},{},{},\"{}\"\n",
            f.label.as_str(),
            f.initial_state,
            f.intercept_ghz,
            f.slope_norm,
            f.points.len(),
            attr,
            f.evidence
        ));
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("landscape format: {0}")]
    Format(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Build a landscape with Gaussian ridges ω(s) = intercept + slope·s.
    fn synthetic(
        ridges: &[(f64, f64, f64)], // (intercept, slope, height)
        n_w: usize,
        n_s: usize,
    ) -> MeasuredLandscape {
        let omega_d: Vec<f64> = (0..n_w).map(|i| 7.0 + 3.0 * i as f64 / (n_w - 1) as f64).collect();
        let stark_norm: Vec<f64> = (0..n_s).map(|i| i as f64 / (n_s - 1) as f64).collect();
        let width = 0.03;
        let prob: Vec<Vec<f64>> = stark_norm
            .iter()
            .map(|&s| {
                omega_d
                    .iter()
                    .map(|&w| {
                        let mut p: f64 = 0.0;
                        for &(i0, sl, h) in ridges {
                            let center = i0 + sl * s;
                            p += h * (-((w - center) / width).powi(2)).exp();
                        }
                        p.min(1.0)
                    })
                    .collect()
            })
            .collect();
        MeasuredLandscape {
            mask: vec![vec![false; n_w]; n_s],
            omega_d,
            stark_norm,
            prob,
            initial_state: 1,
        }
    }

    #[test]
    fn flat_landscape_has_no_features() {
        let l = synthetic(&[], 60, 20);
        assert!(extract_ridges(&l, 0.1).unwrap().is_empty());
    }

    #[test]
    fn single_ridge_recovered_within_one_cell() {
        let l = synthetic(&[(8.0, 0.8, 0.8)], 120, 25);
        let feats = extract_ridges(&l, 0.2).unwrap();
        assert_eq!(feats.len(), 1, "features: {:?}", feats.iter().map(|f| f.intercept_ghz).collect::<Vec<_>>());
        let f = &feats[0];
        let cell = (l.omega_d[1] - l.omega_d[0]).abs();
        assert!((f.intercept_ghz - 8.0).abs() < cell, "intercept {:.4}", f.intercept_ghz);
        assert!((f.slope_norm - 0.8).abs() < 0.15, "slope {:.4}", f.slope_norm);
    }

    #[test]
    fn crossing_ridges_stay_separate() {
        let l = synthetic(&[(8.0, 1.2, 0.8), (9.0, -1.2, 0.7)], 160, 41);
        let feats = extract_ridges(&l, 0.2).unwrap();
        assert_eq!(feats.len(), 2, "intercepts: {:?}", feats.iter().map(|f| f.intercept_ghz).collect::<Vec<_>>());
        let mut intercepts: Vec<f64> = feats.iter().map(|f| f.intercept_ghz).collect();
        intercepts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cell = l.omega_d[1] - l.omega_d[0];
        assert!((intercepts[0] - 8.0).abs() < 2.0 * cell);
        assert!((intercepts[1] - 9.0).abs() < 2.0 * cell);
        // each feature should span most of the power axis (continuity)
        for f in &feats {
            assert!(f.points.len() > 30, "fragmented ridge: {} points", f.points.len());
        }
    }

    #[test]
    fn ingest_round_trip_and_validation() {
        let l = synthetic(&[(8.0, 0.5, 0.6)], 12, 6);
        let text = l.to_csv_string();
        let back = MeasuredLandscape::from_csv_str(&text, 1).unwrap();
        assert_eq!(back, l);
        // out-of-range probability rejected with a line index
        let bad = "omega_d_ghz,stark_norm,prob\n7.0,0.0,1.2\n";
        let err = MeasuredLandscape::from_csv_str(bad, 1).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn mask_sidecar_hides_cells() {
        let mut l = synthetic(&[(8.0, 0.0, 0.9)], 30, 8);
        let masked_before = extract_ridges(&l, 0.2).unwrap().len();
        assert_eq!(masked_before, 1);
        // mask out the entire ridge column region
        let mut mask_text = String::from("omega_d_ghz,stark_norm\n");
        for &s in &l.stark_norm.clone() {
            for &w in &l.omega_d.clone() {
                if (w - 8.0).abs() < 0.3 {
                    mask_text.push_str(&format!("{w},{s}\n"));
                }
            }
        }
        l.apply_mask_str(&mask_text).unwrap();
        assert!(extract_ridges(&l, 0.2).unwrap().is_empty());
    }

    #[test]
    fn horizontal_feature_extracted_by_column_pass() {
        // a feature at fixed stark shift spanning a wide frequency band
        let n_w = 120;
        let n_s = 40;
        let omega_d: Vec<f64> = (0..n_w).map(|i| 7.0 + 3.0 * i as f64 / (n_w - 1) as f64).collect();
        let stark: Vec<f64> = (0..n_s).map(|i| i as f64 / (n_s - 1) as f64).collect();
        let prob: Vec<Vec<f64>> = stark
            .iter()
            .map(|&s| {
                omega_d
                    .iter()
                    .map(|&w| {
                        if (7.8..=9.2).contains(&w) {
                            0.7 * (-((s - 0.3) / 0.02f64).powi(2)).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let l = MeasuredLandscape {
            mask: vec![vec![false; n_w]; n_s],
            omega_d,
            stark_norm: stark,
            prob,
            initial_state: 1,
        };
        let feats = extract_ridges(&l, 0.2).unwrap();
        assert_eq!(feats.len(), 1, "{:?}", feats.iter().map(|f| f.points.len()).collect::<Vec<_>>());
        let f = &feats[0];
        assert!(f.points.len() > 40, "only {} points", f.points.len());
        let s_span = f.points.iter().map(|p| p.0).fold(f64::MIN, f64::max)
            - f.points.iter().map(|p| p.0).fold(f64::MAX, f64::min);
        let w_span = f.points.iter().map(|p| p.1).fold(f64::MIN, f64::max)
            - f.points.iter().map(|p| p.1).fold(f64::MAX, f64::min);
        assert!(s_span < 0.02, "stark span {s_span}");
        assert!(w_span > 1.0, "frequency span {w_span}");
    }

    #[test]
    fn rescaled_contrast_preserves_labels() {
        // geometry-only tests: halving all probabilities must not change
        // the extracted slopes/intercepts (with an adjusted prominence)
        let l1 = synthetic(&[(8.0, 0.8, 0.8)], 120, 25);
        let mut l2 = l1.clone();
        for row in l2.prob.iter_mut() {
            for p in row.iter_mut() {
                *p *= 0.5;
            }
        }
        let f1 = extract_ridges(&l1, 0.2).unwrap();
        let f2 = extract_ridges(&l2, 0.1).unwrap();
        assert_eq!(f1.len(), f2.len());
        assert!((f1[0].intercept_ghz - f2[0].intercept_ghz).abs() < 1e-9);
        assert!((f1[0].slope_norm - f2[0].slope_norm).abs() < 1e-9);
    }
}
