//! Command-line driver: spectrum fits, eigensystems, Floquet sweeps,
//! branch analysis, hybridization landscapes, two-mode tables, feature
//! attribution, classification, and time evolution.

mod config;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dust_core::circuit::{
    label_dressed_states, solve, solve_unchecked, CircuitSpec, MeasuredLevels, ResonatorSpec,
    StateLabel,
};
use dust_core::classify::{
    classify_features, classification_report, extract_ridges, ClassifyThresholds,
    MeasuredLandscape,
};
use dust_core::drive::{predict_resonances, Amplitude, Direction, DriveSpec, ResonanceCaps, Window};
use dust_core::environment::{attribute_feature, attribution_table, FeatureSummary, SpuriousModeRegistry};
use dust_core::fit::{fit_parameters, fit_report, FitModel};
use dust_core::floquet::{amplitude_sweep, time_evolve};
use dust_core::hybridization::{compute_landscape, LandscapeGrid};
use dust_core::tracking::{branch_table, mean_quanta, track_branches};

use config::{config_hash, RunConfig};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "dust", version, about = "Floquet analysis of drive-induced state transitions in driven transmons")]
struct Cli {
    /// Worker threads for grid scans (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CircuitArgs {
    /// Josephson energy E_J in GHz (units of h).
    #[arg(long)]
    ej: f64,
    /// Charging energy E_C in GHz (units of h).
    #[arg(long)]
    ec: f64,
    /// Offset charge.
    #[arg(long, default_value_t = 0.0)]
    ng: f64,
    /// Charge-basis cutoff N (basis spans −N..N).
    #[arg(long, default_value_t = 40)]
    charge_cutoff: usize,
}

impl CircuitArgs {
    fn spec(&self) -> Result<CircuitSpec, CliError> {
        CircuitSpec::new(self.ej, self.ec, self.ng, self.charge_cutoff)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    fn hash_seed(&self, extra: &str) -> String {
        format!(
            "ej={} ec={} ng={} cutoff={} {extra}",
            self.ej, self.ec, self.ng, self.charge_cutoff
        )
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Transmon,
    Coupled,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Excitation,
    Decay,
}

#[derive(Subcommand)]
enum Command {
    /// Fit circuit parameters to measured level energies.
    FitSpectrum {
        /// CSV with header index,energy_mhz,uncertainty_mhz.
        #[arg(long)]
        levels: PathBuf,
        #[arg(long, value_enum, default_value = "transmon")]
        model: ModelArg,
        /// Starting coupling for the coupled model, GHz.
        #[arg(long, default_value_t = 0.15)]
        g0: f64,
        /// Starting resonator frequency for the coupled model, GHz.
        #[arg(long, default_value_t = 9.0)]
        omega_r0: f64,
        #[arg(long, default_value_t = 5)]
        fock: usize,
        /// Output file (default: stdout only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagonalize the undriven circuit and print the spectrum.
    Eigen {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Add a coupled resonator at this frequency (GHz).
        #[arg(long)]
        omega_r: Option<f64>,
        /// Resonator coupling g (GHz); requires --omega-r.
        #[arg(long, default_value_t = 0.15)]
        g: f64,
        #[arg(long, default_value_t = 5)]
        fock: usize,
        /// Dressed-label assignment threshold.
        #[arg(long, default_value_t = 0.9)]
        label_threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Floquet amplitude sweep at fixed drive frequency.
    Sweep {
        #[command(flatten)]
        circuit: CircuitArgs,
        /// Drive frequency ω_d/2π in GHz.
        #[arg(long)]
        omega_d: f64,
        #[arg(long, default_value_t = 2.0)]
        xi2_max: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        /// Eigenbasis truncation.
        #[arg(long, default_value_t = 25)]
        truncation: usize,
        /// Bare-state overlaps to include per mode.
        #[arg(long, default_value_t = 10)]
        overlap_levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Branch analysis: track modes along an amplitude sweep.
    Branches {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long)]
        omega_d: f64,
        #[arg(long, default_value_t = 2.0)]
        xi2_max: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        #[arg(long, default_value_t = 25)]
        truncation: usize,
        /// Also emit an SVG branch plot.
        #[arg(long)]
        plot: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hybridization landscape Θ(level) from a run configuration.
    Landscape {
        #[arg(long)]
        config: PathBuf,
        /// Also emit an SVG heatmap of the averaged map.
        #[arg(long)]
        plot: bool,
    },
    /// Coupled transmon–resonator analysis: dressed labels and zero-power
    /// resonance table.
    TwoMode {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long)]
        omega_r: f64,
        #[arg(long)]
        g: f64,
        #[arg(long, default_value_t = 5)]
        fock: usize,
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[arg(long, default_value_t = 0.9)]
        label_threshold: f64,
        /// Resonance window lower edge, GHz.
        #[arg(long, default_value_t = 10.2)]
        window_lo: f64,
        /// Resonance window upper edge, GHz.
        #[arg(long, default_value_t = 11.4)]
        window_hi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attribute a measured feature to mode-assisted processes.
    Attribute {
        #[command(flatten)]
        circuit: CircuitArgs,
        /// Spurious-mode registry CSV.
        #[arg(long)]
        registry: PathBuf,
        /// Zero-power intercept of the feature, GHz.
        #[arg(long)]
        intercept: f64,
        #[arg(long, value_enum)]
        direction: DirectionArg,
        /// Initial transmon state.
        #[arg(long, default_value_t = 1)]
        initial: usize,
        #[arg(long, default_value_t = 50.0)]
        tolerance_mhz: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract and classify features from a measured landscape.
    Classify {
        #[command(flatten)]
        circuit: CircuitArgs,
        /// Measured landscape CSV (omega_d_ghz,stark_norm,prob).
        #[arg(long)]
        measured: PathBuf,
        /// Optional mask sidecar (omega_d_ghz,stark_norm).
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Simulated averaged Θ map (omega_d_ghz,xi2,theta_avg).
        #[arg(long)]
        theta_avg: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        /// Which state the transmon was prepared in.
        #[arg(long, default_value_t = 1)]
        initial: usize,
        /// Detection prominence for ridge extraction.
        #[arg(long, default_value_t = 0.1)]
        prominence: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coherent time evolution under the drive.
    Evolve {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long)]
        omega_d: f64,
        #[arg(long)]
        xi2: f64,
        #[arg(long, default_value_t = 0)]
        initial: usize,
        #[arg(long, default_value_t = 1000.0)]
        duration_ns: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 25)]
        truncation: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Compute(String),
}

impl CliError {
    fn compute<E: std::fmt::Display>(e: E) -> Self {
        CliError::Compute(e.to_string())
    }
}

fn provenance(command: &str, hash_seed: &str) -> String {
    format!(
        "# dust-cli {VERSION}\n# command = {command}\n# config_hash = {}\n",
        config_hash(hash_seed)
    )
}

fn emit(out: Option<&Path>, header: &str, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .map_err(|e| CliError::Usage(format!("{}: {e}", parent.display())))?;
                }
            }
            std::fs::write(path, format!("{header}{body}"))
                .map_err(|e| CliError::Compute(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, header: &str, body: &str) -> Result<(), CliError> {
    std::fs::write(path, format!("{header}{body}"))
        .map_err(|e| CliError::Compute(format!("{}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::FitSpectrum { levels, model, g0, omega_r0, fock, out } => {
            let measured =
                MeasuredLevels::from_csv_file(&levels).map_err(|e| CliError::Usage(e.to_string()))?;
            let fit_model = match model {
                ModelArg::Transmon => FitModel::TransmonOnly,
                ModelArg::Coupled => FitModel::WithResonator {
                    g_seed: g0,
                    omega_r_seed: omega_r0,
                    fock_cutoff: fock,
                },
            };
            let fit = fit_parameters(&measured, fit_model).map_err(CliError::compute)?;
            let header = provenance(
                "fit-spectrum",
                &format!("{} model={:?}", measured.to_csv_string(), fit_model),
            );
            let body = fit_report(&fit);
            println!("{body}");
            if let Some(path) = out {
                write_file(&path, &header, &body)?;
            }
            Ok(())
        }
        Command::Eigen { circuit, count, omega_r, g, fock, label_threshold, out } => {
            let spec = circuit.spec()?;
            let resonator = match omega_r {
                Some(w) => Some(
                    ResonatorSpec::new(w, g, fock).map_err(|e| CliError::Usage(e.to_string()))?,
                ),
                None => None,
            };
            let mut spectrum =
                solve(&spec, resonator.as_ref(), count).map_err(CliError::compute)?;
            if resonator.is_some() {
                spectrum =
                    label_dressed_states(&spectrum, label_threshold).map_err(CliError::compute)?;
            }
            let mut body = String::from("index,energy_ghz,label\n");
            for (i, e) in spectrum.energies.iter().enumerate() {
                body.push_str(&format!("{i},{e:.9},{}\n", spectrum.labels[i]));
            }
            let header = provenance("eigen", &circuit.hash_seed(&format!("count={count}")));
            emit(out.as_deref(), &header, &body)
        }
        Command::Sweep {
            circuit,
            omega_d,
            xi2_max,
            points,
            truncation,
            overlap_levels,
            out,
        } => {
            let spec = circuit.spec()?;
            let grid = lin_grid(xi2_max, points)?;
            let spectrum = solve_unchecked(&spec, None, truncation).map_err(CliError::compute)?;
            warn_if_near_qubit(omega_d, &spectrum);
            let table = amplitude_sweep(&spectrum, omega_d, &grid).map_err(CliError::compute)?;
            let header = provenance(
                "sweep",
                &circuit.hash_seed(&format!("omega_d={omega_d} xi2_max={xi2_max} points={points}")),
            );
            emit(out.as_deref(), &header, &table.to_table(overlap_levels))
        }
        Command::Branches { circuit, omega_d, xi2_max, points, truncation, plot, out } => {
            let spec = circuit.spec()?;
            let grid = lin_grid(xi2_max, points)?;
            let spectrum = solve_unchecked(&spec, None, truncation).map_err(CliError::compute)?;
            warn_if_near_qubit(omega_d, &spectrum);
            let table = amplitude_sweep(&spectrum, omega_d, &grid).map_err(CliError::compute)?;
            let set = track_branches(&table).map_err(CliError::compute)?;
            let mut body = branch_table(&set, &spectrum);
            body.push_str("# swap events: xi2, uncertainty, labels, branches, overlap_drop\n");
            for e in &set.swaps {
                body.push_str(&format!(
                    "# swap,{:.5},{:.5},({},{}),({},{}),{:.4}\n",
                    e.xi2, e.xi2_uncertainty, e.labels.0, e.labels.1, e.branches.0, e.branches.1,
                    e.overlap_drop
                ));
            }
            let header = provenance(
                "branches",
                &circuit.hash_seed(&format!("omega_d={omega_d} xi2_max={xi2_max} points={points}")),
            );
            if plot {
                let quanta = mean_quanta(&set, &spectrum);
                let svg = plot::lines(&set.xi2_grid, &quanta, "xi^2", "mean transmon quanta");
                let path = out
                    .clone()
                    .map(|p| p.with_extension("svg"))
                    .unwrap_or_else(|| PathBuf::from("branches.svg"));
                write_file(&path, "", &svg)?;
            }
            emit(out.as_deref(), &header, &body)
        }
        Command::Landscape { config, plot } => {
            let (cfg, raw) = RunConfig::load(&config).map_err(CliError::Usage)?;
            let spec = cfg.circuit_spec();
            spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let resonator = cfg.resonator_spec();
            let omega = cfg.drive.omega_d_ghz.values();
            let xi2 = cfg.drive.xi2.values();
            let ng = cfg.ng_samples();
            let grid = compute_landscape(
                &spec,
                resonator.as_ref(),
                &omega,
                &xi2,
                &ng,
                cfg.analysis.level,
                &cfg.landscape_settings(),
            )
            .map_err(CliError::compute)?;
            let dir = cfg.output_dir();
            std::fs::create_dir_all(&dir)
                .map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
            let header = provenance("landscape", &raw);
            write_file(&dir.join("theta.csv"), &header, &grid.to_table())?;
            write_file(&dir.join("theta_avg.csv"), &header, &grid.averaged_table())?;
            let mut manifest = String::from("ng_index,omega_index,omega_d_ghz,message\n");
            for (g, w, msg) in &grid.failures {
                manifest.push_str(&format!("{g},{w},{:.6},\"{msg}\"\n", grid.omega_d_grid[*w]));
            }
            write_file(&dir.join("failures.csv"), &header, &manifest)?;
            if plot {
                // y axis in the measured-data convention Δ_q^ac/α_q = ξ²/2
                let stark: Vec<f64> = grid.xi2_grid.iter().map(|x| x / 2.0).collect();
                let svg = plot::heatmap(
                    &grid.omega_d_grid,
                    &stark,
                    &grid.averaged,
                    0.5,
                    "omega_d / 2pi (GHz)",
                    "stark shift / alpha",
                );
                write_file(&dir.join("theta_avg.svg"), "", &svg)?;
            }
            if !grid.failures.is_empty() {
                eprintln!("{} column(s) failed; see failures.csv", grid.failures.len());
            }
            Ok(())
        }
        Command::TwoMode {
            circuit,
            omega_r,
            g,
            fock,
            count,
            label_threshold,
            window_lo,
            window_hi,
            out,
        } => {
            if window_hi <= window_lo {
                return Err(CliError::Usage("window_hi must exceed window_lo".into()));
            }
            let spec = circuit.spec()?;
            let resonator =
                ResonatorSpec::new(omega_r, g, fock).map_err(|e| CliError::Usage(e.to_string()))?;
            let dressed =
                solve_unchecked(&spec, Some(&resonator), count).map_err(CliError::compute)?;
            let labeled =
                label_dressed_states(&dressed, label_threshold).map_err(CliError::compute)?;
            let mut body = String::from("# dressed states\nindex,energy_ghz,label\n");
            for (i, e) in labeled.energies.iter().enumerate() {
                body.push_str(&format!("{i},{e:.9},{}\n", labeled.labels[i]));
            }
            // zero-power resonance conditions from bare transmon levels
            // plus the resonator as a registry mode
            let bare = solve_unchecked(&spec, None, count.min(25)).map_err(CliError::compute)?;
            body.push_str("# resonance lines\ninitial,final,l,m,n,mode,omega_d0_ghz,slope,direction\n");
            for initial in [0usize, 1] {
                let lines = predict_resonances(
                    &bare,
                    &[("ro", omega_r)],
                    initial,
                    Window { lo: window_lo, hi: window_hi },
                    ResonanceCaps::default(),
                );
                for l in lines {
                    body.push_str(&format!(
                        "{},{},{},{},{},{},{:.6},{:.4},{}\n",
                        l.initial,
                        l.final_level,
                        l.l,
                        l.m,
                        l.n,
                        l.mode.as_deref().unwrap_or("-"),
                        l.omega_d0,
                        l.slope,
                        match l.direction {
                            Direction::Excitation => "excitation",
                            Direction::Decay => "decay",
                        }
                    ));
                }
            }
            let header = provenance(
                "two-mode",
                &circuit.hash_seed(&format!("omega_r={omega_r} g={g} fock={fock}")),
            );
            emit(out.as_deref(), &header, &body)
        }
        Command::Attribute {
            circuit,
            registry,
            intercept,
            direction,
            initial,
            tolerance_mhz,
            out,
        } => {
            let spec = circuit.spec()?;
            let reg = SpuriousModeRegistry::from_csv_file(&registry)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let spectrum = solve_unchecked(&spec, None, 25).map_err(CliError::compute)?;
            let feature = FeatureSummary {
                initial_state: initial,
                intercept_ghz: intercept,
                slope: match direction {
                    DirectionArg::Excitation => 1.0,
                    DirectionArg::Decay => -1.0,
                },
            };
            let attrs = attribute_feature(&feature, &spectrum, &reg, tolerance_mhz);
            let body = attribution_table(&feature, &attrs);
            let header = provenance(
                "attribute",
                &circuit.hash_seed(&format!("intercept={intercept} initial={initial}")),
            );
            emit(out.as_deref(), &header, &body)
        }
        Command::Classify {
            circuit,
            measured,
            mask,
            theta_avg,
            registry,
            initial,
            prominence,
            out,
        } => {
            let spec = circuit.spec()?;
            let mut landscape = MeasuredLandscape::from_csv_file(&measured, initial)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            if let Some(mask_path) = mask {
                let text = std::fs::read_to_string(&mask_path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", mask_path.display())))?;
                landscape.apply_mask_str(&text).map_err(|e| CliError::Usage(e.to_string()))?;
            }
            let theta = load_theta_avg(&theta_avg, &spec)?;
            let reg = SpuriousModeRegistry::from_csv_file(&registry)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let spectrum = solve_unchecked(&spec, None, 25).map_err(CliError::compute)?;
            let features = extract_ridges(&landscape, prominence).map_err(CliError::compute)?;
            let labeled = classify_features(
                &features,
                &theta,
                &reg,
                &spectrum,
                &ClassifyThresholds::default(),
            )
            .map_err(CliError::compute)?;
            let body = classification_report(&labeled);
            let header = provenance(
                "classify",
                &circuit.hash_seed(&format!("measured={} initial={initial}", measured.display())),
            );
            emit(out.as_deref(), &header, &body)
        }
        Command::Evolve {
            circuit,
            omega_d,
            xi2,
            initial,
            duration_ns,
            samples,
            truncation,
            out,
        } => {
            let spec = circuit.spec()?;
            let spectrum = solve_unchecked(&spec, None, truncation).map_err(CliError::compute)?;
            warn_if_near_qubit(omega_d, &spectrum);
            let drive = DriveSpec { omega_d, amplitude: Amplitude::Xi(xi2.sqrt()) };
            let trace = time_evolve(
                &spectrum,
                &drive,
                StateLabel::Transmon(initial),
                duration_ns,
                samples,
            )
            .map_err(CliError::compute)?;
            let mut body = String::from("time_ns");
            let dim = trace.populations[0].len();
            for j in 0..dim {
                body.push_str(&format!(",p{j}"));
            }
            body.push('\n');
            for (t, pops) in trace.times.iter().zip(&trace.populations) {
                body.push_str(&format!("{t:.6}"));
                for p in pops {
                    body.push_str(&format!(",{p:.9}"));
                }
                body.push('\n');
            }
            body.push_str(&format!("# norm_defect = {:.3e}\n", trace.norm_defect));
            let header = provenance(
                "evolve",
                &circuit.hash_seed(&format!("omega_d={omega_d} xi2={xi2} initial={initial}")),
            );
            emit(out.as_deref(), &header, &body)
        }
    }
}

fn lin_grid(max: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if points < 2 || !(max > 0.0) {
        return Err(CliError::Usage("need points >= 2 and a positive sweep range".into()));
    }
    Ok((0..points).map(|i| max * i as f64 / (points - 1) as f64).collect())
}

/// The ξ parametrization assumes an off-resonant drive; warn when the
/// drive sits within a few anharmonicities of the qubit.
fn warn_if_near_qubit(omega_d: f64, spectrum: &dust_core::Spectrum) {
    if dust_core::drive::near_qubit_resonance(omega_d, spectrum) {
        eprintln!(
            "warning: drive at {omega_d} GHz is within 3|alpha_q| of the qubit at {:.4} GHz; \
             the xi parametrization loses accuracy there",
            spectrum.omega_01()
        );
    }
}

/// Read an averaged Θ map (omega_d_ghz,xi2,theta_avg) back into a grid.
fn load_theta_avg(path: &Path, circuit: &CircuitSpec) -> Result<LandscapeGrid, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut omega: Vec<f64> = Vec::new();
    let mut xi2: Vec<f64> = Vec::new();
    let mut triples: Vec<(f64, f64, f64)> = Vec::new();
    let mut lines = text.lines().filter(|l| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    });
    let header = lines.next().ok_or_else(|| CliError::Usage("empty theta map".into()))?;
    if header.split(',').map(str::trim).collect::<Vec<_>>() != ["omega_d_ghz", "xi2", "theta_avg"] {
        return Err(CliError::Usage(format!("unexpected theta header {header:?}")));
    }
    for line in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(CliError::Usage("theta map rows need 3 fields".into()));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            if s == "NaN" {
                Ok(f64::NAN)
            } else {
                s.parse().map_err(|_| CliError::Usage(format!("bad number {s:?} in theta map")))
            }
        };
        let (w, x, t) = (parse(f[0])?, parse(f[1])?, parse(f[2])?);
        if !omega.iter().any(|v: &f64| (v - w).abs() < 1e-12) {
            omega.push(w);
        }
        if !xi2.iter().any(|v: &f64| (v - x).abs() < 1e-12) {
            xi2.push(x);
        }
        triples.push((w, x, t));
    }
    omega.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xi2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let find = |grid: &[f64], v: f64| grid.iter().position(|g| (g - v).abs() < 1e-12).unwrap();
    let mut averaged = vec![vec![f64::NAN; xi2.len()]; omega.len()];
    for (w, x, t) in triples {
        averaged[find(&omega, w)][find(&xi2, x)] = t;
    }
    Ok(LandscapeGrid {
        circuit: *circuit,
        resonator: None,
        level: 1,
        truncation: 25,
        omega_d_grid: omega,
        xi2_grid: xi2,
        n_g_samples: vec![],
        theta: vec![],
        averaged,
        failures: vec![],
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
