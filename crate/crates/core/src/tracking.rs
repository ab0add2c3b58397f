//! Branch analysis: follow Floquet modes along an amplitude sweep by
//! overlap continuity, compute mean-quanta curves, and detect branch swaps.

use crate::circuit::Spectrum;
use crate::floquet::ModeTable;
use crate::linalg::{c64, overlap_sq};

/// Overlap below which a tracking step is flagged ambiguous; the caller
/// should refine the amplitude grid around it.
pub const AMBIGUITY_THRESHOLD: f64 = 0.5;

/// One tracked point of a branch.
#[derive(Clone, Debug)]
pub struct BranchPoint {
    pub xi2: f64,
    pub quasienergy: f64,
    /// Mode coefficients in the undriven eigenbasis.
    pub mode: Vec<c64>,
    /// Squared overlap with the previous point's mode (1 at the seed).
    pub continuity: f64,
    /// Bare eigenstate index of maximal weight.
    pub dominant: usize,
}

/// All branches of one sweep, one per bare state, with swap events.
#[derive(Clone, Debug)]
pub struct BranchSet {
    pub omega_d: f64,
    pub n_g: f64,
    pub xi2_grid: Vec<f64>,
    /// branches[i] starts on bare state i at ξ² = 0.
    pub branches: Vec<Vec<BranchPoint>>,
    /// Steps (grid index of the later point) where some branch fell below
    /// the ambiguity threshold.
    pub ambiguous_steps: Vec<usize>,
    pub swaps: Vec<SwapEvent>,
}

/// Two branches exchanging dominant bare character.
#[derive(Clone, Debug, PartialEq)]
pub struct SwapEvent {
    /// Midpoint of the bracketing amplitude interval.
    pub xi2: f64,
    /// Half-width of the bracket.
    pub xi2_uncertainty: f64,
    /// The two bare characters exchanged, lower first.
    pub labels: (usize, usize),
    /// Branch indices (seed labels) participating.
    pub branches: (usize, usize),
    /// 1 − min continuity overlap across the event.
    pub overlap_drop: f64,
}

/// Track branches through a mode table by greedy descending-overlap
/// assignment, seeded on the bare states at ξ² = 0.
///
/// The greedy matching is a bijection by construction. When two branches
/// contend for the same best mode the greedy order resolves it; contended
/// subsets of up to ten branches are then re-matched exhaustively to
/// maximize total overlap.
pub fn track_branches(table: &ModeTable) -> Result<BranchSet, TrackingError> {
    if table.xi2_grid.is_empty() || table.xi2_grid[0] != 0.0 {
        return Err(TrackingError::BadInput("sweep must start at ξ² = 0".into()));
    }
    let dim = table.sets[0].dim();
    // seed: branch i takes the ξ=0 mode of maximal overlap with bare i
    let mut branches: Vec<Vec<BranchPoint>> = Vec::with_capacity(dim);
    let seed = &table.sets[0];
    let mut taken = vec![false; dim];
    for i in 0..dim {
        let mut best = (0usize, -1.0f64);
        for k in 0..dim {
            if taken[k] {
                continue;
            }
            let w = seed.bare_overlap(i, k);
            if w > best.1 {
                best = (k, w);
            }
        }
        taken[best.0] = true;
        let mode = seed.mode(best.0);
        branches.push(vec![BranchPoint {
            xi2: 0.0,
            quasienergy: seed.quasienergies[best.0],
            dominant: dominant_index(&mode),
            continuity: 1.0,
            mode,
        }]);
    }
    let mut ambiguous_steps = Vec::new();
    for (step, set) in table.sets.iter().enumerate().skip(1) {
        let prev: Vec<&Vec<c64>> = branches.iter().map(|b| &b.last().unwrap().mode).collect();
        let assign = assign_modes(&prev, set)?;
        let mut min_overlap: f64 = 1.0;
        for (b, &(k, ov)) in assign.iter().enumerate() {
            let mode = set.mode(k);
            min_overlap = min_overlap.min(ov);
            branches[b].push(BranchPoint {
                xi2: set.xi2,
                quasienergy: set.quasienergies[k],
                dominant: dominant_index(&mode),
                continuity: ov,
                mode,
            });
        }
        if min_overlap < AMBIGUITY_THRESHOLD {
            ambiguous_steps.push(step);
        }
    }
    let mut set = BranchSet {
        omega_d: table.omega_d,
        n_g: table.n_g,
        xi2_grid: table.xi2_grid.clone(),
        branches,
        ambiguous_steps,
        swaps: Vec::new(),
    };
    set.swaps = detect_swaps(&set);
    Ok(set)
}

fn dominant_index(mode: &[c64]) -> usize {
    let mut best = (0usize, -1.0f64);
    for (j, z) in mode.iter().enumerate() {
        let w = z.norm_sqr();
        if w > best.1 {
            best = (j, w);
        }
    }
    best.0
}

/// Greedy descending-overlap bijection with exhaustive repair of contended
/// subsets.
fn assign_modes(
    prev: &[&Vec<c64>],
    set: &crate::floquet::FloquetSet,
) -> Result<Vec<(usize, f64)>, TrackingError> {
    let dim = prev.len();
    let mut ovl = vec![vec![0.0f64; dim]; dim];
    for b in 0..dim {
        let mode_cols: Vec<Vec<c64>> = (0..dim).map(|k| set.mode(k)).collect();
        for k in 0..dim {
            ovl[b][k] = overlap_sq(prev[b], &mode_cols[k]);
        }
    }
    let mut pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|b| (0..dim).map(move |k| (b, k)))
        .collect();
    pairs.sort_by(|a, b| ovl[b.0][b.1].partial_cmp(&ovl[a.0][a.1]).unwrap());
    let mut chosen = vec![usize::MAX; dim];
    let mut mode_taken = vec![false; dim];
    let mut contended: Vec<usize> = Vec::new();
    // first choices, to spot contention
    let first_choice: Vec<usize> = (0..dim)
        .map(|b| {
            (0..dim)
                .max_by(|&x, &y| ovl[b][x].partial_cmp(&ovl[b][y]).unwrap())
                .unwrap()
        })
        .collect();
    for b in 0..dim {
        for b2 in b + 1..dim {
            if first_choice[b] == first_choice[b2] {
                if !contended.contains(&b) {
                    contended.push(b);
                }
                if !contended.contains(&b2) {
                    contended.push(b2);
                }
            }
        }
    }
    for (b, k) in pairs {
        if chosen[b] == usize::MAX && !mode_taken[k] {
            chosen[b] = k;
            mode_taken[k] = true;
        }
    }
    // exhaustive repair on small contended subsets
    if !contended.is_empty() && contended.len() <= 10 {
        let modes: Vec<usize> = contended.iter().map(|&b| chosen[b]).collect();
        let mut best_perm: Vec<usize> = (0..contended.len()).collect();
        let mut best_score = f64::MIN;
        permute(&mut (0..contended.len()).collect::<Vec<_>>(), 0, &mut |perm| {
            let score: f64 = contended
                .iter()
                .zip(perm)
                .map(|(&b, &p)| ovl[b][modes[p]].ln().max(-1e3))
                .sum();
            if score > best_score {
                best_score = score;
                best_perm = perm.to_vec();
            }
        });
        for (i, &b) in contended.iter().enumerate() {
            chosen[b] = modes[best_perm[i]];
        }
    }
    Ok((0..dim).map(|b| (chosen[b], ovl[b][chosen[b]])).collect())
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Mean bare transmon quanta along each branch,
/// N_i(ξ²) = Σ_j j |⟨j_t | mode⟩|².
///
/// The printed branch-analysis weighting omits the modulus; the squared
/// modulus is used here as in the branch-tracking literature the technique
/// comes from.
pub fn mean_quanta(branches: &BranchSet, spectrum: &Spectrum) -> Vec<Vec<f64>> {
    branches
        .branches
        .iter()
        .map(|b| {
            b.iter()
                .map(|p| spectrum.mean_transmon_quanta(&p.mode))
                .collect()
        })
        .collect()
}

/// Find amplitudes where two branches exchange dominant bare character
/// between consecutive grid points. Reciprocal exchanges within a short
/// window pair up into one event.
pub fn detect_swaps(branches: &BranchSet) -> Vec<SwapEvent> {
    // collect per-step dominant-character changes
    struct Change {
        step: usize,
        branch: usize,
        from: usize,
        to: usize,
        overlap: f64,
    }
    let mut changes: Vec<Change> = Vec::new();
    for (bi, b) in branches.branches.iter().enumerate() {
        for w in 1..b.len() {
            if b[w].dominant != b[w - 1].dominant {
                changes.push(Change {
                    step: w,
                    branch: bi,
                    from: b[w - 1].dominant,
                    to: b[w].dominant,
                    overlap: b[w].continuity,
                });
            }
        }
    }
    const PAIR_WINDOW: usize = 6;
    let mut used = vec![false; changes.len()];
    let mut events = Vec::new();
    for i in 0..changes.len() {
        if used[i] {
            continue;
        }
        for j in i + 1..changes.len() {
            if used[j] {
                continue;
            }
            let (a, b) = (&changes[i], &changes[j]);
            let reciprocal = a.from == b.to && a.to == b.from && a.from != a.to;
            if reciprocal && a.step.abs_diff(b.step) <= PAIR_WINDOW {
                let lo = a.step.min(b.step);
                let hi = a.step.max(b.step);
                let xi_lo = branches.xi2_grid[lo - 1];
                let xi_hi = branches.xi2_grid[hi];
                let labels = if a.from < a.to { (a.from, a.to) } else { (a.to, a.from) };
                events.push(SwapEvent {
                    xi2: 0.5 * (xi_lo + xi_hi),
                    xi2_uncertainty: 0.5 * (xi_hi - xi_lo),
                    labels,
                    branches: (a.branch.min(b.branch), a.branch.max(b.branch)),
                    overlap_drop: 1.0 - a.overlap.min(b.overlap),
                });
                used[i] = true;
                used[j] = true;
                break;
            }
        }
    }
    events.sort_by(|x, y| x.xi2.partial_cmp(&y.xi2).unwrap());
    events
}

/// Tabular export: xi2, branch, N, quasienergy_ghz.
pub fn branch_table(branches: &BranchSet, spectrum: &Spectrum) -> String {
    let quanta = mean_quanta(branches, spectrum);
    let mut out = String::from("xi2,branch,mean_quanta,quasienergy_ghz\n");
    for (bi, b) in branches.branches.iter().enumerate() {
        for (pi, p) in b.iter().enumerate() {
            out.push_str(&format!(
                "{:.6},{},{:.6},{:.9}\n",
                p.xi2, bi, quanta[bi][pi], p.quasienergy
            ));
        }
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum TrackingError {
    #[error("bad input: {0}")]
    BadInput(String),
}
