//! One-period propagators, Floquet modes and quasienergies, amplitude
//! sweeps, and direct time evolution of the driven circuit.
//!
//! The Hamiltonian in the undriven eigenbasis is H(t) = diag(E) +
//! E_d cos(2π ω_d t) n̂, which splits into two exactly-solvable flows: the
//! diagonal part, and the drive part whose matrix is fixed up to a scalar.
//! One period is integrated with a triple-jump composition of the Strang
//! splitting (sixth order); every substep is exactly unitary, so unitarity
//! holds to machine precision at any step count and accuracy is controlled
//! separately through step doubling.

use faer::Mat;
use rayon::prelude::*;

use crate::circuit::{CircuitSpec, ResonatorSpec, Spectrum, StateLabel};
use crate::drive::{Amplitude, DriveSpec, DriveError};
use crate::linalg::{self, c64, fix_phase, polar_correct, unitarity_defect, unitary_eigen};

use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Hard unitarity bound on an accepted propagator.
pub const UNITARITY_LIMIT: f64 = 1e-6;
/// Step-doubling target for the propagator accuracy.
pub const STEP_DOUBLING_TOL: f64 = 1e-10;
/// Eigenvalue spacing below which Floquet modes are reported degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Reduce a frequency into the quasienergy zone (−ω_d/2, ω_d/2].
pub fn reduce_to_zone(x: f64, omega_d: f64) -> f64 {
    let mut y = x % omega_d;
    if y <= -omega_d / 2.0 {
        y += omega_d;
    } else if y > omega_d / 2.0 {
        y -= omega_d;
    }
    y
}

/// Precomputed machinery for propagating one drive configuration.
struct SplitStepper {
    energies: Vec<f64>,
    /// Eigenvectors of n̂ in the truncated eigenbasis, polar-corrected.
    w: Mat<c64>,
    w_adj: Mat<c64>,
    lambda: Vec<f64>,
    omega_d: f64,
    e_d: f64,
}

// Yoshida triple-jump coefficients, sixth order, solution A.
const W1: f64 = -1.17767998417887;
const W2: f64 = 0.235573213359357;
const W3: f64 = 0.784513610477560;
const STAGES: [f64; 7] = [W3, W2, W1, 1.0 - 2.0 * (W1 + W2 + W3), W1, W2, W3];

impl SplitStepper {
    fn new(spectrum: &Spectrum, omega_d: f64, e_d: f64) -> Result<Self, FloquetError> {
        let eig = linalg::hermitian_eigen(&spectrum.n_matrix)?;
        let w = polar_correct(&eig.vectors);
        Ok(Self {
            energies: spectrum.energies.clone(),
            w_adj: w.adjoint().to_owned(),
            w,
            lambda: eig.values,
            omega_d,
            e_d,
        })
    }

    fn dim(&self) -> usize {
        self.energies.len()
    }

    fn diag_flow(&self, u: &mut Mat<c64>, s: f64) {
        let dim = self.dim();
        for i in 0..dim {
            let ph = c64::from_polar(1.0, -TAU * self.energies[i] * s);
            for j in 0..u.ncols() {
                u[(i, j)] *= ph;
            }
        }
    }

    fn drive_flow(&self, u: &Mat<c64>, tau: f64, s: f64) -> Mat<c64> {
        let scale = self.e_d * (TAU * self.omega_d * tau).cos();
        let mut wu = &self.w_adj * u;
        let dim = self.dim();
        for i in 0..dim {
            let ph = c64::from_polar(1.0, -TAU * scale * self.lambda[i] * s);
            for j in 0..wu.ncols() {
                wu[(i, j)] *= ph;
            }
        }
        &self.w * &wu
    }

    /// Advance `u` from absolute time `tau` by `dt`, in `n_steps` composition
    /// steps. Returns the new absolute time.
    fn advance(&self, u: &mut Mat<c64>, mut tau: f64, dt: f64, n_steps: usize) -> f64 {
        let h = dt / n_steps as f64;
        for _ in 0..n_steps {
            for &w in &STAGES {
                let hs = w * h;
                self.diag_flow(u, hs / 2.0);
                tau += hs / 2.0;
                *u = self.drive_flow(u, tau, hs);
                self.diag_flow(u, hs / 2.0);
                tau += hs / 2.0;
            }
        }
        tau
    }
}

/// One-period propagator with its measured unitarity defect.
pub struct Propagator {
    pub u: Mat<c64>,
    pub omega_d: f64,
    pub unitarity_defect: f64,
    pub steps_per_period: usize,
}

/// How many composition steps to take per drive period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepCount {
    Fixed(usize),
    /// Double from 64 until successive propagators agree to
    /// [`STEP_DOUBLING_TOL`] in max norm.
    Auto,
}

impl Default for StepCount {
    fn default() -> Self {
        StepCount::Auto
    }
}

fn propagate_period(stepper: &SplitStepper, n_steps: usize) -> Mat<c64> {
    let dim = stepper.dim();
    let mut u = Mat::<c64>::identity(dim, dim);
    stepper.advance(&mut u, 0.0, 1.0 / stepper.omega_d, n_steps);
    u
}

/// Compute U(T), T = 1/ω_d, for the driven spectrum.
pub fn one_period_propagator(
    spectrum: &Spectrum,
    drive: &DriveSpec,
    steps: StepCount,
) -> Result<Propagator, FloquetError> {
    drive.validate()?;
    let e_d = drive.energy_ghz(spectrum)?;
    let stepper = SplitStepper::new(spectrum, drive.omega_d, e_d)?;
    let (u, n_steps) = match steps {
        StepCount::Fixed(n) => (propagate_period(&stepper, n), n),
        StepCount::Auto => {
            let mut n = 64;
            let mut u = propagate_period(&stepper, n);
            loop {
                let u2 = propagate_period(&stepper, 2 * n);
                let diff = (&u - &u2).norm_max();
                if diff < STEP_DOUBLING_TOL {
                    break (u2, 2 * n);
                }
                n *= 2;
                u = u2;
                if n > 8192 {
                    return Err(FloquetError::Integration(format!(
                        "step doubling stalled at {n} steps, residual {diff:.3e}"
                    )));
                }
            }
        }
    };
    let defect = unitarity_defect(&u);
    if defect > UNITARITY_LIMIT {
        return Err(FloquetError::Unitarity(defect));
    }
    Ok(Propagator { u, omega_d: drive.omega_d, unitarity_defect: defect, steps_per_period: n_steps })
}

/// Floquet modes and quasienergies at one drive configuration.
#[derive(Clone, Debug)]
pub struct FloquetSet {
    /// Quasienergies in GHz, each inside (−ω_d/2, ω_d/2], ascending.
    pub quasienergies: Vec<f64>,
    /// Modes at drive phase zero, one per column, orthonormal.
    pub modes: Mat<c64>,
    pub omega_d: f64,
    pub xi2: f64,
    pub n_g: f64,
    /// Pairs of mode indices whose propagator eigenvalues coincided within
    /// [`DEGENERACY_TOL`]; ordering between them is decided downstream by
    /// overlap continuity.
    pub degenerate_pairs: Vec<(usize, usize)>,
}

impl FloquetSet {
    pub fn dim(&self) -> usize {
        self.quasienergies.len()
    }

    pub fn mode(&self, k: usize) -> Vec<c64> {
        (0..self.modes.nrows()).map(|r| self.modes[(r, k)]).collect()
    }

    /// |⟨basis_j | mode_k⟩|² (the eigenbasis is the bare basis here).
    pub fn bare_overlap(&self, j: usize, k: usize) -> f64 {
        self.modes[(j, k)].norm_sqr()
    }
}

/// Extract Floquet modes from a one-period propagator: the eigenvectors of
/// U(T), with quasienergies ε = −arg(λ) ω_d / 2π reduced into the zone.
pub fn floquet_modes(prop: &Propagator, xi2: f64, n_g: f64) -> Result<FloquetSet, FloquetError> {
    let dim = prop.u.nrows();
    let eig = unitary_eigen(&prop.u)?;
    let mut order: Vec<usize> = (0..dim).collect();
    let quasi_raw: Vec<f64> = eig
        .values
        .iter()
        .map(|lam| reduce_to_zone(-lam.arg() / TAU * prop.omega_d, prop.omega_d))
        .collect();
    order.sort_by(|&a, &b| quasi_raw[a].partial_cmp(&quasi_raw[b]).unwrap());
    let quasienergies: Vec<f64> = order.iter().map(|&k| quasi_raw[k]).collect();
    let mut modes = Mat::<c64>::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        let mut v: Vec<c64> = (0..dim).map(|r| eig.vectors[(r, k)]).collect();
        fix_phase(&mut v);
        for r in 0..dim {
            modes[(r, col)] = v[r];
        }
    }
    let mut degenerate_pairs = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            if (eig.values[order[a]] - eig.values[order[b]]).norm() < DEGENERACY_TOL {
                degenerate_pairs.push((a, b));
            }
        }
    }
    // Inside a numerically degenerate eigenvalue cluster the backend's
    // eigenvectors are an arbitrary (not even orthogonal) basis of the
    // invariant subspace. Rebuild each cluster in the gauge maximally
    // aligned with the bare states; downstream tracking then resolves any
    // remaining ordering by overlap continuity.
    bare_align_clusters(&mut modes, &order, &eig.values);
    Ok(FloquetSet {
        quasienergies,
        modes,
        omega_d: prop.omega_d,
        xi2,
        n_g,
        degenerate_pairs,
    })
}

/// Eigenvalue distance treated as one invariant subspace during gauge
/// cleanup; looser than [`DEGENERACY_TOL`] because roundoff in U mixes
/// eigenvectors well before eigenvalues collide exactly.
const CLUSTER_TOL: f64 = 1e-9;

fn bare_align_clusters(modes: &mut Mat<c64>, order: &[usize], values: &[c64]) {
    let dim = modes.nrows();
    // union-find over sorted columns whose eigenvalues nearly coincide
    let mut parent: Vec<usize> = (0..dim).collect();
    fn root(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in 0..dim {
        for b in a + 1..dim {
            if (values[order[a]] - values[order[b]]).norm() < CLUSTER_TOL {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut clusters: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for c in 0..dim {
        clusters.entry(root(&mut parent, c)).or_default().push(c);
    }
    for (_, cols) in clusters {
        if cols.len() < 2 {
            continue;
        }
        // bare weights of the cluster subspace
        let mut weights: Vec<(usize, f64)> = (0..dim)
            .map(|j| (j, cols.iter().map(|&k| modes[(j, k)].norm_sqr()).sum::<f64>()))
            .collect();
        weights.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        // project the dominant bare states into the subspace, Gram-Schmidt
        let old: Vec<Vec<c64>> = cols
            .iter()
            .map(|&k| (0..dim).map(|r| modes[(r, k)]).collect())
            .collect();
        let mut built: Vec<Vec<c64>> = Vec::with_capacity(cols.len());
        for &(j, _) in weights.iter().take(cols.len()) {
            // u = Σ_k |mode_k⟩⟨mode_k|e_j⟩
            let mut u = vec![c64::new(0.0, 0.0); dim];
            for m in &old {
                let amp = m[j].conj();
                for r in 0..dim {
                    u[r] += amp * m[r];
                }
            }
            for b in &built {
                let ov = linalg::inner(b, &u);
                for r in 0..dim {
                    u[r] -= ov * b[r];
                }
            }
            let nrm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nrm < 1e-6 {
                continue;
            }
            for z in u.iter_mut() {
                *z /= c64::new(nrm, 0.0);
            }
            fix_phase(&mut u);
            built.push(u);
        }
        if built.len() == cols.len() {
            for (i, &k) in cols.iter().enumerate() {
                for r in 0..dim {
                    modes[(r, k)] = built[i][r];
                }
            }
        }
    }
}

/// Floquet sets along an amplitude grid at fixed drive frequency.
#[derive(Clone, Debug)]
pub struct ModeTable {
    pub omega_d: f64,
    pub n_g: f64,
    /// Strictly increasing ξ² grid starting at 0.
    pub xi2_grid: Vec<f64>,
    pub sets: Vec<FloquetSet>,
    pub steps_per_period: usize,
}

/// Sweep drive amplitude at fixed ω_d. The grid must start at ξ² = 0 so
/// downstream tracking can seed on the bare states. Grid points are
/// independent and evaluated in parallel; assembly is in grid order, so the
/// output is deterministic.
pub fn amplitude_sweep(
    spectrum: &Spectrum,
    omega_d: f64,
    xi2_grid: &[f64],
) -> Result<ModeTable, FloquetError> {
    if xi2_grid.is_empty() || xi2_grid[0] != 0.0 {
        return Err(FloquetError::Grid("amplitude grid must start at 0".into()));
    }
    if xi2_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FloquetError::Grid("amplitude grid must be strictly increasing".into()));
    }
    // calibrate the step count once at the largest amplitude, then reuse
    let max_xi2 = *xi2_grid.last().unwrap();
    let steps = if max_xi2 == 0.0 {
        64
    } else {
        let drive = DriveSpec { omega_d, amplitude: Amplitude::Xi(max_xi2.sqrt()) };
        one_period_propagator(spectrum, &drive, StepCount::Auto)?.steps_per_period
    };
    let sets: Result<Vec<FloquetSet>, FloquetError> = xi2_grid
        .par_iter()
        .map(|&xi2| {
            let drive = DriveSpec { omega_d, amplitude: Amplitude::Xi(xi2.sqrt()) };
            let prop = one_period_propagator(spectrum, &drive, StepCount::Fixed(steps))?;
            floquet_modes(&prop, xi2, spectrum.circuit.n_g)
        })
        .collect();
    Ok(ModeTable {
        omega_d,
        n_g: spectrum.circuit.n_g,
        xi2_grid: xi2_grid.to_vec(),
        sets: sets?,
        steps_per_period: steps,
    })
}

impl ModeTable {
    /// Tabular export: xi2, mode_index, quasienergy_ghz, overlap_with_bare_j.
    pub fn to_table(&self, overlap_levels: usize) -> String {
        let mut out = String::from("xi2,mode_index,quasienergy_ghz");
        for j in 0..overlap_levels {
            out.push_str(&format!(",overlap_{j}"));
        }
        out.push('\n');
        for set in &self.sets {
            for k in 0..set.dim() {
                out.push_str(&format!("{:.6},{},{:.9}", set.xi2, k, set.quasienergies[k]));
                for j in 0..overlap_levels {
                    out.push_str(&format!(",{:.6}", set.bare_overlap(j, k)));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Population traces from coherent time evolution.
#[derive(Clone, Debug)]
pub struct TimeTrace {
    /// Sample times in ns.
    pub times: Vec<f64>,
    /// populations[s][j] = |⟨j|ψ(t_s)⟩|² in the undriven eigenbasis.
    pub populations: Vec<Vec<f64>>,
    /// max |1 − ⟨ψ|ψ⟩| observed over the trace.
    pub norm_defect: f64,
}

/// Evolve an initial bare eigenstate under the drive for `duration` ns,
/// recording populations at `samples` evenly spaced times. Purely coherent;
/// no dissipation is modeled.
pub fn time_evolve(
    spectrum: &Spectrum,
    drive: &DriveSpec,
    initial: StateLabel,
    duration: f64,
    samples: usize,
) -> Result<TimeTrace, FloquetError> {
    if !(duration > 0.0) || samples == 0 {
        return Err(FloquetError::Grid("duration and samples must be positive".into()));
    }
    drive.validate()?;
    let dim = spectrum.count();
    let start = spectrum
        .index_of(initial)
        .ok_or_else(|| FloquetError::Grid(format!("initial state {initial} not in spectrum")))?;
    let e_d = drive.energy_ghz(spectrum)?;
    let stepper = SplitStepper::new(spectrum, drive.omega_d, e_d)?;
    // vector evolution reuses the matrix machinery on a dim×1 matrix
    let mut psi = Mat::<c64>::zeros(dim, 1);
    psi[(start, 0)] = c64::new(1.0, 0.0);
    let period = 1.0 / drive.omega_d;
    let steps_per_period = 64usize;
    let mut times = Vec::with_capacity(samples + 1);
    let mut populations = Vec::with_capacity(samples + 1);
    let mut norm_defect = 0.0f64;
    let mut record = |t: f64, psi: &Mat<c64>, norm_defect: &mut f64| {
        let pops: Vec<f64> = (0..dim).map(|j| psi[(j, 0)].norm_sqr()).collect();
        *norm_defect = (1.0 - pops.iter().sum::<f64>()).abs().max(*norm_defect);
        times.push(t);
        populations.push(pops);
    };
    record(0.0, &psi, &mut norm_defect);
    let dt_sample = duration / samples as f64;
    let mut tau = 0.0f64;
    for s in 1..=samples {
        let target = s as f64 * dt_sample;
        let n_steps = ((target - tau) / (period / steps_per_period as f64)).ceil().max(1.0) as usize;
        tau = stepper.advance(&mut psi, tau, target - tau, n_steps);
        record(tau, &psi, &mut norm_defect);
    }
    Ok(TimeTrace { times, populations, norm_defect })
}

#[derive(Debug, thiserror::Error)]
pub enum FloquetError {
    #[error(transparent)]
    Drive(#[from] DriveError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("propagator unitarity defect {0:.3e} exceeds the hard limit")]
    Unitarity(f64),
    #[error("bad grid: {0}")]
    Grid(String),
}

/// Convenience: the 25-level transmon spectrum used by the sweeps.
pub fn transmon_floquet_spectrum(
    circuit: &CircuitSpec,
    count: usize,
) -> Result<Spectrum, FloquetError> {
    crate::circuit::solve_unchecked(circuit, None, count)
        .map_err(|e| FloquetError::Integration(e.to_string()))
}

/// Coupled-model spectrum truncated for two-mode Floquet analysis.
pub fn coupled_floquet_spectrum(
    circuit: &CircuitSpec,
    resonator: &ResonatorSpec,
    count: usize,
) -> Result<Spectrum, FloquetError> {
    crate::circuit::solve_unchecked(circuit, Some(resonator), count)
        .map_err(|e| FloquetError::Integration(e.to_string()))
}
