//! Broadening of the 1→5 feature with drive power and offset-charge
//! averaging, measured on the Θ landscape by the contiguous span of cells
//! above 0.1.

use dust_core::circuit::CircuitSpec;
use dust_core::hybridization::{compute_landscape, LandscapeSettings};

fn width_above(row_values: &[f64], threshold: f64) -> usize {
    let mut best = 0;
    let mut run = 0;
    for &v in row_values {
        if v.is_finite() && v > threshold {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

#[test]
fn feature_broadens_with_power_and_ng_averaging() {
    let circuit = CircuitSpec::new(16.2856, 0.17013, 0.0, 40).unwrap();
    // window containing the 1→5 line both at ξ² = 0.3 (near 7.97 GHz) and
    // at ξ² = 1.5 (near 7.70 GHz)
    let omega: Vec<f64> = (0..21).map(|i| 7.60 + 0.5 * i as f64 / 20.0).collect();
    let xi2: Vec<f64> = (0..33).map(|a| 1.6 * a as f64 / 32.0).collect();
    let ng = vec![0.0, 0.25, 0.5];
    let grid = compute_landscape(
        &circuit,
        None,
        &omega,
        &xi2,
        &ng,
        1,
        &LandscapeSettings::default(),
    )
    .unwrap();
    let row_at = |target: f64| -> usize {
        xi2.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().partial_cmp(&(b.1 - target).abs()).unwrap())
            .unwrap()
            .0
    };
    let (lo_row, hi_row) = (row_at(0.3), row_at(1.5));
    let avg_row = |row: usize| -> Vec<f64> {
        (0..omega.len()).map(|w| grid.averaged[w][row]).collect()
    };
    let w_low = width_above(&avg_row(lo_row), 0.1);
    let w_high = width_above(&avg_row(hi_row), 0.1);
    println!(
        "feature width (cells over 0.1): xi2 = 0.3 -> {w_low}, xi2 = 1.5 -> {w_high}"
    );
    assert!(w_low >= 1, "feature not visible at low power");
    assert!(
        w_high > w_low,
        "line should broaden with power: {w_low} vs {w_high}"
    );

    // the offset-charge average is at least as wide as any single sample
    let single_row = |g: usize, row: usize| -> Vec<f64> {
        (0..omega.len()).map(|w| grid.theta[g][w][row]).collect()
    };
    let w_avg = width_above(&avg_row(hi_row), 0.1);
    for g in 0..ng.len() {
        let w_single = width_above(&single_row(g, hi_row), 0.1);
        println!("ng = {}: single-sample width {w_single}, averaged {w_avg}", ng[g]);
    }
    let w_middle = width_above(&single_row(1, hi_row), 0.1);
    assert!(
        w_avg + 1 >= w_middle,
        "averaged ridge narrower than the n_g = 0.25 sample: {w_avg} vs {w_middle}"
    );
}
