//! Circuit models: transmon in the charge basis, optionally coupled to a
//! readout resonator, their eigensystems, and bare/dressed state labels.
//!
//! Conventions used throughout the crate: every energy is an ordinary
//! frequency in GHz (units of h), time is in ns, and phases evolve as
//! exp(−i 2π E t). The ground-state energy is always shifted to zero.

use faer::Mat;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::linalg::{self, c64, hermitian_eigen};

/// Lowest-j levels kept when truncating a transmon-only eigensystem.
pub const MAX_TRANSMON_LEVELS: usize = 25;
/// Energy tolerance (GHz) for the cutoff-doubling convergence check: 1 kHz.
pub const TRUNCATION_TOL: f64 = 1e-6;

/// Static transmon parameters. Energies in GHz (units of h).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircuitSpec {
    pub e_j: f64,
    pub e_c: f64,
    /// Offset charge; physics is periodic in it with period 1.
    pub n_g: f64,
    /// Charge basis spans −charge_cutoff..=charge_cutoff.
    pub charge_cutoff: usize,
}

impl CircuitSpec {
    pub fn new(e_j: f64, e_c: f64, n_g: f64, charge_cutoff: usize) -> Result<Self, CircuitError> {
        let spec = Self { e_j, e_c, n_g, charge_cutoff };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if !(self.e_j > 0.0) || !(self.e_c > 0.0) {
            return Err(CircuitError::InvalidSpec("E_J and E_C must be positive".into()));
        }
        if self.charge_cutoff < 10 {
            return Err(CircuitError::InvalidSpec("charge_cutoff must be at least 10".into()));
        }
        if !self.n_g.is_finite() {
            return Err(CircuitError::InvalidSpec("n_g must be finite".into()));
        }
        Ok(())
    }

    /// Zero-point fluctuation of the charge operator in the harmonic
    /// approximation, (E_J / 32 E_C)^(1/4).
    pub fn n_zpf(&self) -> f64 {
        (self.e_j / (32.0 * self.e_c)).powf(0.25)
    }

    /// Charge basis dimension 2N + 1.
    pub fn charge_dim(&self) -> usize {
        2 * self.charge_cutoff + 1
    }
}

/// Readout (or other spurious) resonator coupled to the transmon charge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonatorSpec {
    /// Mode frequency ω_r/2π in GHz.
    pub omega_r: f64,
    /// Charge coupling g in GHz (units of h).
    pub g: f64,
    /// Fock states kept in the construction basis.
    pub fock_cutoff: usize,
}

impl ResonatorSpec {
    pub fn new(omega_r: f64, g: f64, fock_cutoff: usize) -> Result<Self, CircuitError> {
        if !(omega_r > 0.0) {
            return Err(CircuitError::InvalidSpec("omega_r must be positive".into()));
        }
        if fock_cutoff < 2 {
            return Err(CircuitError::InvalidSpec("fock_cutoff must be at least 2".into()));
        }
        Ok(Self { omega_r, g, fock_cutoff })
    }
}

/// Bare label attached to an eigenstate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateLabel {
    /// Transmon-only eigenstate |j_t⟩.
    Transmon(usize),
    /// Dressed state identified with the bare product |j_t, k_r⟩.
    Product { transmon: usize, resonator: usize },
    Unassigned,
}

impl StateLabel {
    /// Transmon quanta of the label, if assigned.
    pub fn transmon_quanta(&self) -> Option<usize> {
        match self {
            StateLabel::Transmon(j) => Some(*j),
            StateLabel::Product { transmon, .. } => Some(*transmon),
            StateLabel::Unassigned => None,
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::Transmon(j) => write!(f, "{j}"),
            StateLabel::Product { transmon, resonator } => write!(f, "({transmon},{resonator})"),
            StateLabel::Unassigned => write!(f, "unassigned"),
        }
    }
}

/// Hermitian Hamiltonian plus the construction-basis layout needed to
/// interpret its eigenvectors.
pub struct HermitianMatrix {
    pub mat: Mat<c64>,
    pub circuit: CircuitSpec,
    pub resonator: Option<ResonatorSpec>,
}

/// Build the static Hamiltonian in the charge (⊗ Fock) basis.
///
/// Charge term 4E_C(n − n_g)² on the diagonal, cos φ̂ as hopping −E_J/2
/// between adjacent charge states, and for the coupled model ω_r a†a and
/// the bilinear charge coupling −i g n̂ (a − a†).
pub fn build_hamiltonian(
    circuit: &CircuitSpec,
    resonator: Option<&ResonatorSpec>,
) -> Result<HermitianMatrix, CircuitError> {
    circuit.validate()?;
    let ncut = circuit.charge_cutoff as i64;
    let dt = circuit.charge_dim();
    let nf = resonator.map_or(1, |r| r.fock_cutoff);
    let dim = dt * nf;
    // index layout: charge-major, row = ci * nf + fi
    let mut h = Mat::<c64>::zeros(dim, dim);
    for ci in 0..dt {
        let n_i = (ci as i64 - ncut) as f64;
        for fi in 0..nf {
            let r = ci * nf + fi;
            let mut diag = 4.0 * circuit.e_c * (n_i - circuit.n_g).powi(2);
            if let Some(res) = resonator {
                diag += res.omega_r * fi as f64;
            }
            h[(r, r)] = c64::new(diag, 0.0);
            if ci + 1 < dt {
                let c = (ci + 1) * nf + fi;
                h[(r, c)] = c64::new(-circuit.e_j / 2.0, 0.0);
                h[(c, r)] = c64::new(-circuit.e_j / 2.0, 0.0);
            }
            if let Some(res) = resonator {
                // −i g n̂ (a − a†): ⟨fi| a |fi+1⟩ = √(fi+1)
                if fi + 1 < nf {
                    let c = ci * nf + fi + 1;
                    let v = c64::new(0.0, -res.g * n_i * ((fi + 1) as f64).sqrt());
                    h[(r, c)] += v;
                    h[(c, r)] += v.conj();
                }
            }
        }
    }
    Ok(HermitianMatrix { mat: h, circuit: *circuit, resonator: resonator.copied() })
}

/// Eigensystem of an undriven circuit, truncated to the lowest `count`
/// states. Energies are shifted so E_0 = 0 and the charge matrix is
/// expressed in the eigenbasis.
pub struct Spectrum {
    pub circuit: CircuitSpec,
    pub resonator: Option<ResonatorSpec>,
    /// Nondecreasing, E_0 = 0, in GHz.
    pub energies: Vec<f64>,
    /// Construction-basis eigenvectors as columns (dim × count).
    pub states: Mat<c64>,
    /// ⟨i| n̂ |j⟩ in the eigenbasis (count × count), Hermitian.
    pub n_matrix: Mat<c64>,
    pub labels: Vec<StateLabel>,
    /// For coupled models: ⟨j_t, k_r | eigenstate⟩ with bare-product rows
    /// laid out as j_t * fock_cutoff + k_r. Identity for transmon-only.
    bare_overlaps: Option<Mat<c64>>,
}

impl Spectrum {
    pub fn count(&self) -> usize {
        self.energies.len()
    }

    /// ω_01 of this spectrum, in GHz.
    pub fn omega_01(&self) -> f64 {
        self.energies[1]
    }

    /// Anharmonicity E_2 − 2E_1 (GHz, negative for a transmon).
    ///
    /// For coupled models the labeled (1_t,0_r) and (2_t,0_r) states are
    /// used when available.
    pub fn alpha_q(&self) -> f64 {
        match self.resonator {
            None => self.energies[2] - 2.0 * self.energies[1],
            Some(_) => {
                let e1 = self.labeled_energy(1, 0).unwrap_or(self.energies[1]);
                let e2 = self.labeled_energy(2, 0).unwrap_or(self.energies[2]);
                e2 - 2.0 * e1
            }
        }
    }

    /// Transition frequency E_j − E_i.
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.energies[j] - self.energies[i]
    }

    /// Energy of the eigenstate labeled (j_t, k_r), if such a label exists.
    pub fn labeled_energy(&self, transmon: usize, resonator: usize) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| *l == StateLabel::Product { transmon, resonator })
            .map(|idx| self.energies[idx])
    }

    /// Eigenstate index carrying a given label.
    pub fn index_of(&self, label: StateLabel) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }

    /// Amplitudes ⟨bare_p|ψ⟩ of a vector ψ expressed in this eigenbasis,
    /// where bare_p runs over transmon ⊗ Fock products for coupled models.
    /// For transmon-only spectra this is the identity map.
    pub fn to_bare_products(&self, coeffs: &[c64]) -> Vec<c64> {
        match &self.bare_overlaps {
            None => coeffs.to_vec(),
            Some(b) => {
                let rows = b.nrows();
                (0..rows)
                    .map(|p| (0..coeffs.len()).map(|d| b[(p, d)] * coeffs[d]).sum())
                    .collect()
            }
        }
    }

    /// Mean bare transmon quanta of a vector expressed in this eigenbasis.
    pub fn mean_transmon_quanta(&self, coeffs: &[c64]) -> f64 {
        match &self.bare_overlaps {
            None => coeffs.iter().enumerate().map(|(j, z)| j as f64 * z.norm_sqr()).sum(),
            Some(_) => {
                let nf = self.resonator.map_or(1, |r| r.fock_cutoff);
                let bare = self.to_bare_products(coeffs);
                bare.iter().enumerate().map(|(p, z)| (p / nf) as f64 * z.norm_sqr()).sum::<f64>()
            }
        }
    }
}

/// Diagonalize a prebuilt Hamiltonian, keeping the lowest `count` states.
pub fn eigensolve(h: &HermitianMatrix, count: usize) -> Result<Spectrum, CircuitError> {
    let dim = h.mat.nrows();
    if count == 0 || count > dim {
        return Err(CircuitError::Truncation(format!(
            "requested {count} states from a dimension-{dim} basis"
        )));
    }
    let eig = hermitian_eigen(&h.mat)?;
    let e0 = eig.values[0];
    // work on a few extra states so degenerate clusters never straddle the
    // truncation boundary
    let ext = (count + 4).min(dim);
    let energies_ext: Vec<f64> = eig.values[..ext].iter().map(|e| e - e0).collect();
    let mut states_ext = Mat::<c64>::zeros(dim, ext);
    for k in 0..ext {
        let mut col: Vec<c64> = (0..dim).map(|r| eig.vectors[(r, k)]).collect();
        linalg::fix_phase(&mut col);
        for r in 0..dim {
            states_ext[(r, k)] = col[r];
        }
    }
    // High rotor levels come in exponentially split ± pairs; the solver
    // returns arbitrary mixtures inside such clusters, which would leak
    // parity. At integer n_g the charge-reversal symmetry is exact, so
    // rotate each near-degenerate cluster into parity eigenstates.
    if h.resonator.is_none() && h.circuit.n_g.rem_euclid(1.0) == 0.0 {
        parity_purify(&mut states_ext, &energies_ext, h.circuit.charge_cutoff);
    }
    let energies: Vec<f64> = energies_ext[..count].to_vec();
    let mut states = Mat::<c64>::zeros(dim, count);
    for k in 0..count {
        for r in 0..dim {
            states[(r, k)] = states_ext[(r, k)];
        }
    }
    let ncut = h.circuit.charge_cutoff as i64;
    let nf = h.resonator.map_or(1, |r| r.fock_cutoff);
    // n̂ is diagonal in the construction basis; project into the eigenbasis
    let mut n_matrix = Mat::<c64>::zeros(count, count);
    for i in 0..count {
        for j in i..count {
            let mut s = c64::new(0.0, 0.0);
            for r in 0..dim {
                let n_r = ((r / nf) as i64 - ncut) as f64;
                s += states[(r, i)].conj() * n_r * states[(r, j)];
            }
            n_matrix[(i, j)] = s;
            n_matrix[(j, i)] = s.conj();
        }
    }
    let (labels, bare_overlaps) = match h.resonator {
        None => ((0..count).map(StateLabel::Transmon).collect(), None),
        Some(res) => {
            let b = bare_product_overlaps(h, &states, res.fock_cutoff)?;
            (vec![StateLabel::Unassigned; count], Some(b))
        }
    };
    Ok(Spectrum {
        circuit: h.circuit,
        resonator: h.resonator,
        energies,
        states,
        n_matrix,
        labels,
        bare_overlaps,
    })
}

/// Rotate eigenvector clusters that are degenerate to within 1 kHz into
/// eigenstates of the charge-reversal parity n → −n.
fn parity_purify(states: &mut Mat<c64>, energies: &[f64], charge_cutoff: usize) {
    let dim = states.nrows();
    let count = energies.len();
    let flip = |r: usize| 2 * charge_cutoff - r;
    let mut k = 0;
    while k < count {
        let mut end = k + 1;
        while end < count && energies[end] - energies[end - 1] < TRUNCATION_TOL {
            end += 1;
        }
        if end - k > 1 {
            // diagonalize the parity operator restricted to the cluster
            let m = end - k;
            let mut p = Mat::<c64>::zeros(m, m);
            for a in 0..m {
                for b in 0..m {
                    let mut s = c64::new(0.0, 0.0);
                    for r in 0..dim {
                        s += states[(r, k + a)].conj() * states[(flip(r), k + b)];
                    }
                    p[(a, b)] = s;
                }
            }
            if let Ok(pe) = hermitian_eigen(&p) {
                let old: Vec<Vec<c64>> = (0..m)
                    .map(|a| (0..dim).map(|r| states[(r, k + a)]).collect())
                    .collect();
                for b in 0..m {
                    let mut col = vec![c64::new(0.0, 0.0); dim];
                    for a in 0..m {
                        let w = pe.vectors[(a, b)];
                        for r in 0..dim {
                            col[r] += w * old[a][r];
                        }
                    }
                    linalg::fix_phase(&mut col);
                    for r in 0..dim {
                        states[(r, k + b)] = col[r];
                    }
                }
            }
        }
        k = end;
    }
}

/// ⟨j_t, k_r | eigenstate_d⟩ for j_t < MAX_TRANSMON_LEVELS, all Fock k_r.
fn bare_product_overlaps(
    h: &HermitianMatrix,
    states: &Mat<c64>,
    nf: usize,
) -> Result<Mat<c64>, CircuitError> {
    let bare_h = build_hamiltonian(&h.circuit, None)?;
    let bare = hermitian_eigen(&bare_h.mat)?;
    let dt = h.circuit.charge_dim();
    let nt = MAX_TRANSMON_LEVELS.min(dt);
    let count = states.ncols();
    let mut b = Mat::<c64>::zeros(nt * nf, count);
    for d in 0..count {
        for jt in 0..nt {
            for kr in 0..nf {
                let mut s = c64::new(0.0, 0.0);
                for ci in 0..dt {
                    s += bare.vectors[(ci, jt)].conj() * states[(ci * nf + kr, d)];
                }
                b[(jt * nf + kr, d)] = s;
            }
        }
    }
    Ok(b)
}

/// Build and diagonalize in one step, with a cutoff-doubling convergence
/// check on the kept energies.
pub fn solve(
    circuit: &CircuitSpec,
    resonator: Option<&ResonatorSpec>,
    count: usize,
) -> Result<Spectrum, CircuitError> {
    let h = build_hamiltonian(circuit, resonator)?;
    let spectrum = eigensolve(&h, count)?;
    let mut bigger = *circuit;
    bigger.charge_cutoff *= 2;
    let res_bigger = resonator.map(|r| ResonatorSpec { fock_cutoff: r.fock_cutoff + 2, ..*r });
    let h2 = build_hamiltonian(&bigger, res_bigger.as_ref())?;
    let check = eigensolve(&h2, count)?;
    let max_diff = spectrum
        .energies
        .iter()
        .zip(&check.energies)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if max_diff > TRUNCATION_TOL {
        return Err(CircuitError::Truncation(format!(
            "cutoff-doubling check failed: energies move by {max_diff:.3e} GHz"
        )));
    }
    Ok(spectrum)
}

/// Same as [`solve`] but without the doubling check; used inside sweeps
/// where the spec has already been validated once.
pub fn solve_unchecked(
    circuit: &CircuitSpec,
    resonator: Option<&ResonatorSpec>,
    count: usize,
) -> Result<Spectrum, CircuitError> {
    let h = build_hamiltonian(circuit, resonator)?;
    eigensolve(&h, count)
}

/// Assign bare product labels to the dressed states of a coupled spectrum.
///
/// Each dressed state takes the bare product of maximal squared overlap when
/// that overlap reaches `threshold`. If two dressed states claim the same
/// bare label above threshold, the conflict is reported and both stay
/// unassigned. Ties between bare states go to the lower total excitation.
pub fn label_dressed_states(
    spectrum: &Spectrum,
    threshold: f64,
) -> Result<Spectrum, CircuitError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(CircuitError::InvalidSpec("threshold must lie in (0, 1]".into()));
    }
    let b = spectrum
        .bare_overlaps
        .as_ref()
        .ok_or_else(|| CircuitError::InvalidSpec("labeling needs a coupled spectrum".into()))?;
    let nf = spectrum.resonator.map(|r| r.fock_cutoff).unwrap_or(1);
    let count = spectrum.count();
    let mut labels = vec![StateLabel::Unassigned; count];
    let mut claimed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut conflicted: Vec<usize> = Vec::new();
    for d in 0..count {
        let mut best = (0usize, 0usize, -1.0f64);
        for p in 0..b.nrows() {
            let w = b[(p, d)].norm_sqr();
            let (jt, kr) = (p / nf, p % nf);
            let better = w > best.2 + 1e-15
                || ((w - best.2).abs() <= 1e-15 && jt + kr < best.0 + best.1);
            if better {
                best = (jt, kr, w);
            }
        }
        if best.2 >= threshold {
            let key = (best.0, best.1);
            if let Some(&other) = claimed.get(&key) {
                conflicted.push(other);
                conflicted.push(d);
            } else {
                claimed.insert(key, d);
                labels[d] = StateLabel::Product { transmon: best.0, resonator: best.1 };
            }
        }
    }
    for d in conflicted {
        labels[d] = StateLabel::Unassigned;
    }
    Ok(Spectrum { labels, ..clone_spectrum(spectrum) })
}

fn clone_spectrum(s: &Spectrum) -> Spectrum {
    Spectrum {
        circuit: s.circuit,
        resonator: s.resonator,
        energies: s.energies.clone(),
        states: s.states.clone(),
        n_matrix: s.n_matrix.clone(),
        labels: s.labels.clone(),
        bare_overlaps: s.bare_overlaps.clone(),
    }
}

impl Clone for Spectrum {
    fn clone(&self) -> Self {
        clone_spectrum(self)
    }
}

/// One measured level: index, energy above the ground state, uncertainty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasuredLevel {
    pub index: usize,
    pub energy_mhz: f64,
    pub uncertainty_mhz: f64,
}

/// Measured spectrum entries as ingested from file.
#[derive(Clone, Debug, Default)]
pub struct MeasuredLevels {
    pub levels: Vec<MeasuredLevel>,
}

impl MeasuredLevels {
    pub fn new(levels: Vec<MeasuredLevel>) -> Result<Self, CircuitError> {
        let mut seen = std::collections::HashSet::new();
        for l in &levels {
            if !seen.insert(l.index) {
                return Err(CircuitError::MeasuredLevels(format!(
                    "duplicate level index {}",
                    l.index
                )));
            }
            if l.uncertainty_mhz < 0.0 {
                return Err(CircuitError::MeasuredLevels(format!(
                    "negative uncertainty on level {}",
                    l.index
                )));
            }
            if !l.energy_mhz.is_finite() {
                return Err(CircuitError::MeasuredLevels(format!(
                    "non-finite energy on level {}",
                    l.index
                )));
            }
        }
        Ok(Self { levels })
    }

    /// Parse the `index,energy_mhz,uncertainty_mhz` text format.
    pub fn from_csv_str(text: &str) -> Result<Self, CircuitError> {
        let mut levels = Vec::new();
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let (_, header) = lines
            .next()
            .ok_or_else(|| CircuitError::MeasuredLevels("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["index", "energy_mhz", "uncertainty_mhz"] {
            return Err(CircuitError::MeasuredLevels(format!(
                "unexpected header {header:?}; want index,energy_mhz,uncertainty_mhz"
            )));
        }
        for (lineno, line) in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(CircuitError::MeasuredLevels(format!(
                    "line {}: expected 3 fields, got {}",
                    lineno + 1,
                    f.len()
                )));
            }
            let parse_err = |what: &str| {
                CircuitError::MeasuredLevels(format!("line {}: bad {what}", lineno + 1))
            };
            levels.push(MeasuredLevel {
                index: f[0].parse().map_err(|_| parse_err("index"))?,
                energy_mhz: f[1].parse().map_err(|_| parse_err("energy"))?,
                uncertainty_mhz: if f[2].is_empty() {
                    0.0
                } else {
                    f[2].parse().map_err(|_| parse_err("uncertainty"))?
                },
            });
        }
        Self::new(levels)
    }

    pub fn from_csv_file(path: &Path) -> Result<Self, CircuitError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CircuitError::MeasuredLevels(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("index,energy_mhz,uncertainty_mhz\n");
        for l in &self.levels {
            out.push_str(&format!("{},{},{}\n", l.index, l.energy_mhz, l.uncertainty_mhz));
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CircuitError {
    #[error("invalid circuit spec: {0}")]
    InvalidSpec(String),
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error("measured levels: {0}")]
    MeasuredLevels(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn reference_transmon() -> CircuitSpec {
        CircuitSpec::new(16.2856, 0.17013, 0.0, 40).unwrap()
    }

    fn reference_coupled() -> (CircuitSpec, ResonatorSpec) {
        (
            CircuitSpec::new(16.40, 0.1695, 0.0, 40).unwrap(),
            ResonatorSpec::new(9.029, 0.153, 5).unwrap(),
        )
    }

    #[test]
    fn free_rotor_limit_is_diagonal() {
        // E_J → 0 is outside the validated domain, so check the off-diagonal
        // structure directly: with tiny E_J the diagonal equals 4 E_C n².
        let spec = CircuitSpec { e_j: 1e-12, e_c: 0.2, n_g: 0.0, charge_cutoff: 10 };
        let h = build_hamiltonian(&spec, None).unwrap();
        for (i, n) in (-10i64..=10).enumerate() {
            assert_abs_diff_eq!(h.mat[(i, i)].re, 0.8 * (n * n) as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_with_cosine_hopping() {
        let spec = reference_transmon();
        let h = build_hamiltonian(&spec, None).unwrap();
        assert!(linalg::hermiticity_defect(&h.mat) < 1e-12);
        let dim = spec.charge_dim();
        for i in 0..dim - 1 {
            assert_abs_diff_eq!(h.mat[(i, i + 1)].re, -spec.e_j / 2.0, epsilon = 0.0);
            assert_abs_diff_eq!(h.mat[(i, i + 1)].im, 0.0, epsilon = 0.0);
        }
    }

    #[test]
    fn reference_energies_at_midpoint_convention() {
        // reference fitted levels E_1 and E_5, evaluated at the average of the
        // n_g = 0 and n_g = 0.5 spectra
        let mut spec = reference_transmon();
        let e0 = solve_unchecked(&spec, None, 6).unwrap().energies;
        spec.n_g = 0.5;
        let e5 = solve_unchecked(&spec, None, 6).unwrap().energies;
        let mid: Vec<f64> = e0.iter().zip(&e5).map(|(a, b)| 0.5 * (a + b)).collect();
        assert_abs_diff_eq!(mid[1] * 1e3, 4531.06, epsilon = 0.05);
        assert_abs_diff_eq!(mid[5] * 1e3, 20619.1, epsilon = 0.1);
    }

    #[test]
    fn coupled_reference_first_excited() {
        let (c, r) = reference_coupled();
        let s = solve_unchecked(&c, Some(&r), 25).unwrap();
        assert_abs_diff_eq!(s.energies[1] * 1e3, 4528.05, epsilon = 0.05);
    }

    #[test]
    fn states_orthonormal_and_n_matrix_hermitian() {
        let spec = reference_transmon();
        let s = solve_unchecked(&spec, None, 25).unwrap();
        assert!(linalg::unitarity_defect(&s.states) < 1e-10);
        assert!(linalg::hermiticity_defect(&s.n_matrix) < 1e-10);
    }

    #[test]
    fn parity_selection_at_zero_offset_charge() {
        let spec = reference_transmon();
        let s = solve_unchecked(&spec, None, 25).unwrap();
        for i in 0..25 {
            for j in 0..25 {
                if (i + j) % 2 == 0 {
                    assert!(
                        s.n_matrix[(i, j)].norm() < 1e-8,
                        "n[{i},{j}] = {:?} should vanish by parity",
                        s.n_matrix[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn ng_periodicity_and_reflection() {
        let base = reference_transmon();
        let e = |n_g: f64| {
            let spec = CircuitSpec { n_g, ..base };
            solve_unchecked(&spec, None, 10).unwrap().energies
        };
        let a = e(0.3);
        let b = e(1.3);
        let c = e(0.7); // 1 − 0.3
        for j in 0..10 {
            assert_abs_diff_eq!(a[j], b[j], epsilon = 1e-6);
            assert_abs_diff_eq!(a[j], c[j], epsilon = 1e-6);
        }
    }

    #[test]
    fn charge_dispersion_grows_with_level() {
        let base = reference_transmon();
        let e = |n_g: f64| {
            let spec = CircuitSpec { n_g, ..base };
            solve_unchecked(&spec, None, 10).unwrap().energies
        };
        let ngs = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        let all: Vec<Vec<f64>> = ngs.iter().map(|&g| e(g)).collect();
        let dispersion = |j: usize| {
            let vals: Vec<f64> = all.iter().map(|v| v[j]).collect();
            vals.iter().cloned().fold(f64::MIN, f64::max)
                - vals.iter().cloned().fold(f64::MAX, f64::min)
        };
        for j in 3..8 {
            assert!(
                dispersion(j + 1) > dispersion(j),
                "dispersion should grow: level {j} {} vs {}",
                dispersion(j),
                dispersion(j + 1)
            );
        }
    }

    #[test]
    fn anharmonicity_is_negative() {
        let spec = reference_transmon();
        let s = solve_unchecked(&spec, None, 3).unwrap();
        assert!(s.alpha_q() < 0.0);
        // another E_J/E_C > 20 point
        let s2 = solve_unchecked(&CircuitSpec::new(10.0, 0.3, 0.2, 40).unwrap(), None, 3).unwrap();
        assert!(s2.alpha_q() < 0.0);
    }

    #[test]
    fn cutoff_doubling_check_passes_for_reference_device() {
        let spec = reference_transmon();
        assert!(solve(&spec, None, 10).is_ok());
    }

    #[test]
    fn dressed_labels_flag_hybridized_pair() {
        let (c, r) = reference_coupled();
        let s = solve_unchecked(&c, Some(&r), 25).unwrap();
        let labeled = label_dressed_states(&s, 0.9).unwrap();
        assert_eq!(
            labeled.labels[0],
            StateLabel::Product { transmon: 0, resonator: 0 }
        );
        // |6_t,1_r⟩ and |9_t,0_r⟩ hybridize; dressed 21 and 22 stay unassigned
        assert_eq!(labeled.labels[21], StateLabel::Unassigned);
        assert_eq!(labeled.labels[22], StateLabel::Unassigned);
        let assigned = labeled
            .labels
            .iter()
            .filter(|l| **l != StateLabel::Unassigned)
            .count();
        assert_eq!(assigned, 23);
    }

    #[test]
    fn zero_threshold_assigns_everything_injectively() {
        let (c, r) = reference_coupled();
        let s = solve_unchecked(&c, Some(&r), 25).unwrap();
        let labeled = label_dressed_states(&s, 1e-9).unwrap();
        let mut seen = std::collections::HashSet::new();
        for l in &labeled.labels {
            assert_ne!(*l, StateLabel::Unassigned);
            assert!(seen.insert(*l), "label {l} assigned twice");
        }
    }

    #[test]
    fn measured_levels_round_trip_and_validation() {
        let m = MeasuredLevels::from_csv_str(
            "index,energy_mhz,uncertainty_mhz\n1,4528.52,0\n2,8872.74,0\n",
        )
        .unwrap();
        assert_eq!(m.levels.len(), 2);
        let back = MeasuredLevels::from_csv_str(&m.to_csv_string()).unwrap();
        assert_eq!(back.levels, m.levels);
        assert!(MeasuredLevels::from_csv_str("index,energy_mhz,uncertainty_mhz\n1,1,0\n1,2,0\n")
            .is_err());
        assert!(MeasuredLevels::from_csv_str("bad,header\n").is_err());
    }
}
