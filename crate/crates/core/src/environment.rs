//! Spurious-mode registry, feature attribution by frequency matching, and
//! the dephasing-slope-to-dispersive-shift conversion.

use std::path::Path;

use crate::circuit::Spectrum;
use crate::drive::{predict_resonances, Direction, ResonanceCaps, ResonanceLine, Window};

/// Where a registry mode comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeOrigin {
    Electromagnetic,
    Tls,
    Unknown,
}

impl ModeOrigin {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeOrigin::Electromagnetic => "electromagnetic",
            ModeOrigin::Tls => "tls",
            ModeOrigin::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Result<Self, EnvironmentError> {
        match s.to_ascii_lowercase().as_str() {
            "electromagnetic" | "em" => Ok(ModeOrigin::Electromagnetic),
            "tls" => Ok(ModeOrigin::Tls),
            "unknown" => Ok(ModeOrigin::Unknown),
            other => Err(EnvironmentError::Registry(format!("unknown origin {other:?}"))),
        }
    }
}

/// One environment mode coupled to the circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct SpuriousMode {
    pub id: String,
    pub omega_s: f64,
    pub origin: ModeOrigin,
    pub chi_mhz: Option<f64>,
    pub linewidth_mhz: Option<f64>,
}

/// The full registry, read and written as one document.
#[derive(Clone, Debug, Default)]
pub struct SpuriousModeRegistry {
    pub modes: Vec<SpuriousMode>,
}

impl SpuriousModeRegistry {
    pub fn new(modes: Vec<SpuriousMode>) -> Result<Self, EnvironmentError> {
        let mut seen = std::collections::HashSet::new();
        for m in &modes {
            if !seen.insert(m.id.clone()) {
                return Err(EnvironmentError::Registry(format!("duplicate mode id {:?}", m.id)));
            }
            if !(m.omega_s > 0.0) {
                return Err(EnvironmentError::Registry(format!(
                    "mode {:?} has non-positive frequency",
                    m.id
                )));
            }
        }
        Ok(Self { modes })
    }

    /// Parse the `id,omega_s_ghz,origin,chi_mhz,linewidth_mhz` format;
    /// trailing optionals may be empty.
    pub fn from_csv_str(text: &str) -> Result<Self, EnvironmentError> {
        let mut modes = Vec::new();
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let (_, header) = lines
            .next()
            .ok_or_else(|| EnvironmentError::Registry("empty registry".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["id", "omega_s_ghz", "origin", "chi_mhz", "linewidth_mhz"] {
            return Err(EnvironmentError::Registry(format!("unexpected header {header:?}")));
        }
        for (lineno, line) in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(EnvironmentError::Registry(format!(
                    "line {}: expected 5 fields",
                    lineno + 1
                )));
            }
            let opt = |s: &str| -> Result<Option<f64>, EnvironmentError> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse()
                        .map(Some)
                        .map_err(|_| EnvironmentError::Registry(format!("line {}: bad number", lineno + 1)))
                }
            };
            modes.push(SpuriousMode {
                id: f[0].to_string(),
                omega_s: f[1].parse().map_err(|_| {
                    EnvironmentError::Registry(format!("line {}: bad frequency", lineno + 1))
                })?,
                origin: ModeOrigin::parse(f[2])?,
                chi_mhz: opt(f[3])?,
                linewidth_mhz: opt(f[4])?,
            });
        }
        Self::new(modes)
    }

    pub fn from_csv_file(path: &Path) -> Result<Self, EnvironmentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvironmentError::Registry(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("id,omega_s_ghz,origin,chi_mhz,linewidth_mhz\n");
        for m in &self.modes {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                m.id,
                m.omega_s,
                m.origin.as_str(),
                opt(m.chi_mhz),
                opt(m.linewidth_mhz)
            ));
        }
        out
    }

    pub fn mode_entries(&self) -> Vec<(&str, f64)> {
        self.modes.iter().map(|m| (m.id.as_str(), m.omega_s)).collect()
    }
}

/// A feature summary sufficient for attribution: its zero-power intercept
/// and the sign of its slope in the (ω_d, Δ_q^ac) plane.
#[derive(Clone, Copy, Debug)]
pub struct FeatureSummary {
    pub initial_state: usize,
    pub intercept_ghz: f64,
    /// dω_d/dΔ_q^ac with Δ in GHz (negative Δ at positive power).
    pub slope: f64,
}

/// One candidate explanation of a measured feature.
#[derive(Clone, Debug)]
pub struct Attribution {
    pub line: ResonanceLine,
    /// |ω_d⁰(line) − intercept| in MHz.
    pub residual_mhz: f64,
    /// Sign agreement between the line's slope and the feature's.
    pub slope_consistent: bool,
}

/// Match a feature against every mode-assisted process within tolerance.
///
/// All matches are reported, ranked by |residual|; an empty result marks an
/// unexplained feature (the candidate explanation is then a TLS with
/// unknowable frequency). The slope-sign check is mandatory; magnitude
/// matching is left to the caller since higher-order Stark corrections bend
/// the measured lines.
pub fn attribute_feature(
    feature: &FeatureSummary,
    spectrum: &Spectrum,
    registry: &SpuriousModeRegistry,
    tolerance_mhz: f64,
) -> Vec<Attribution> {
    let tol_ghz = tolerance_mhz * 1e-3;
    let window = Window {
        lo: (feature.intercept_ghz - tol_ghz).max(1e-6),
        hi: feature.intercept_ghz + tol_ghz,
    };
    let lines = predict_resonances(
        spectrum,
        &registry.mode_entries(),
        feature.initial_state,
        window,
        ResonanceCaps::default(),
    );
    let mut out: Vec<Attribution> = lines
        .into_iter()
        .filter(|l| l.m >= 1)
        .map(|line| {
            let residual_mhz = (line.omega_d0 - feature.intercept_ghz).abs() * 1e3;
            let slope_consistent = same_sign(line.slope, feature.slope);
            Attribution { line, residual_mhz, slope_consistent }
        })
        .filter(|a| a.residual_mhz <= tolerance_mhz && a.slope_consistent)
        .collect();
    out.sort_by(|a, b| a.residual_mhz.partial_cmp(&b.residual_mhz).unwrap());
    out
}

fn same_sign(a: f64, b: f64) -> bool {
    (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0)
}

/// Dispersive shift from a dephasing-vs-Stark-shift slope: χ = slope κ / 2.
/// Valid in the weak-power limit χ√n̄ ≪ κ.
pub fn chi_from_dephasing(slope: f64, kappa_mhz: f64) -> Result<f64, EnvironmentError> {
    if !(kappa_mhz > 0.0) {
        return Err(EnvironmentError::Registry("kappa must be positive".into()));
    }
    Ok(slope * kappa_mhz / 2.0)
}

/// Attribution report rows mirroring the assignment-table layout.
pub fn attribution_table(feature: &FeatureSummary, attributions: &[Attribution]) -> String {
    let mut out = String::from(
        "intercept_ghz,direction,initial,final,l,m,n,mode,omega_d0_ghz,residual_mhz\n",
    );
    if attributions.is_empty() {
        out.push_str(&format!(
            "{:.6},{},{},,,,,unexplained,,\n",
            feature.intercept_ghz,
            if feature.slope > 0.0 { "excitation" } else { "decay" },
            feature.initial_state,
        ));
        return out;
    }
    for a in attributions {
        out.push_str(&format!(
            "{:.6},{},{},{},{},{},{},{},{:.6},{:.3}\n",
            feature.intercept_ghz,
            match a.line.direction {
                Direction::Excitation => "excitation",
                Direction::Decay => "decay",
            },
            a.line.initial,
            a.line.final_level,
            a.line.l,
            a.line.m,
            a.line.n,
            a.line.mode.as_deref().unwrap_or("-"),
            a.line.omega_d0,
            a.residual_mhz
        ));
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum EnvironmentError {
    #[error("registry: {0}")]
    Registry(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{solve_unchecked, CircuitSpec};
    use approx::assert_abs_diff_eq;

    fn spectrum() -> Spectrum {
        let spec = CircuitSpec::new(16.2856, 0.17013, 0.0, 40).unwrap();
        solve_unchecked(&spec, None, 25).unwrap()
    }

    fn device_registry() -> SpuriousModeRegistry {
        SpuriousModeRegistry::new(vec![
            SpuriousMode {
                id: "ro".into(),
                omega_s: 9.0342,
                origin: ModeOrigin::Electromagnetic,
                chi_mhz: Some(-1.23),
                linewidth_mhz: Some(7.20),
            },
            SpuriousMode {
                id: "em2".into(),
                omega_s: 15.07,
                origin: ModeOrigin::Electromagnetic,
                chi_mhz: Some(0.4),
                linewidth_mhz: None,
            },
        ])
        .unwrap()
    }

    #[test]
    fn registry_round_trip_and_validation() {
        let reg = device_registry();
        let text = reg.to_csv_string();
        let back = SpuriousModeRegistry::from_csv_str(&text).unwrap();
        assert_eq!(back.modes, reg.modes);
        assert!(SpuriousModeRegistry::from_csv_str(
            "id,omega_s_ghz,origin,chi_mhz,linewidth_mhz\nx,1.0,tls,,\nx,2.0,tls,,\n"
        )
        .is_err());
        assert!(SpuriousModeRegistry::from_csv_str(
            "id,omega_s_ghz,origin,chi_mhz,linewidth_mhz\nx,-1.0,tls,,\n"
        )
        .is_err());
    }

    #[test]
    fn decay_feature_matches_conversion_process() {
        // intercept at (ω_s − ω_01)/2 with positive visual slope: the
        // two-photon conversion through the 15.07 GHz mode
        let s = spectrum();
        let f = FeatureSummary { initial_state: 1, intercept_ghz: 5.271, slope: -0.5 };
        let attrs = attribute_feature(&f, &s, &device_registry(), 50.0);
        assert!(!attrs.is_empty());
        let best = &attrs[0];
        assert_eq!((best.line.l, best.line.m, best.line.n), (-1, 1, 2));
        assert_eq!(best.line.mode.as_deref(), Some("em2"));
        assert!(best.residual_mhz < 10.0);
    }

    #[test]
    fn excitation_feature_matches_squeezing_process() {
        let s = spectrum();
        let f = FeatureSummary { initial_state: 1, intercept_ghz: 9.707, slope: 0.5 };
        let attrs = attribute_feature(&f, &s, &device_registry(), 50.0);
        assert!(!attrs.is_empty());
        let best = &attrs[0];
        assert_eq!((best.line.l, best.line.m, best.line.n), (1, 1, 2));
        assert_eq!(best.line.mode.as_deref(), Some("em2"));
    }

    #[test]
    fn unmatched_feature_returns_empty() {
        // the switching-TLS feature near 8.17 GHz matches nothing in the
        // electromagnetic registry
        let s = spectrum();
        let f = FeatureSummary { initial_state: 1, intercept_ghz: 8.17, slope: 0.5 };
        let attrs = attribute_feature(&f, &s, &device_registry(), 50.0);
        assert!(attrs.is_empty());
    }

    #[test]
    fn tolerance_monotonicity() {
        let s = spectrum();
        let f = FeatureSummary { initial_state: 1, intercept_ghz: 9.69, slope: 0.5 };
        let reg = device_registry();
        let a30 = attribute_feature(&f, &s, &reg, 30.0);
        let a50 = attribute_feature(&f, &s, &reg, 50.0);
        let a80 = attribute_feature(&f, &s, &reg, 80.0);
        assert!(a30.len() <= a50.len() && a50.len() <= a80.len());
        for a in &a30 {
            assert!(a50.iter().any(|b| b.line == a.line));
        }
    }

    #[test]
    fn attribution_parity_and_recomputable_residuals() {
        let s = spectrum();
        let reg = device_registry();
        let f = FeatureSummary { initial_state: 1, intercept_ghz: 9.707, slope: 0.5 };
        for a in attribute_feature(&f, &s, &reg, 50.0) {
            assert_eq!((a.line.l + a.line.m as i64 + a.line.n as i64) % 2, 0);
            let omega_s = a
                .line
                .mode
                .as_deref()
                .and_then(|id| reg.modes.iter().find(|m| m.id == id))
                .map(|m| m.omega_s);
            assert!(a.line.matching_residual(&s, omega_s).abs() < 1e-9);
            assert_abs_diff_eq!(
                a.residual_mhz,
                (a.line.omega_d0 - f.intercept_ghz).abs() * 1e3,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn chi_conversion() {
        assert_eq!(chi_from_dephasing(0.0, 7.2).unwrap(), 0.0);
        // χ = 0.4 MHz, κ = 7.2 MHz implies slope 2χ/κ = 0.111; invert
        let slope = 2.0 * 0.4 / 7.2;
        assert_abs_diff_eq!(chi_from_dephasing(slope, 7.2).unwrap(), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(
            chi_from_dephasing(2.0 * slope, 7.2).unwrap(),
            0.8,
            epsilon = 1e-12
        );
        assert!(chi_from_dephasing(0.1, 0.0).is_err());
    }
}
