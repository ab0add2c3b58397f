//! Minimal SVG emission for heatmaps and branch plots. Data files are the
//! primary artifact; these exist for quick visual checks.

use std::fmt::Write;

/// Five-stop blue-to-yellow gradient over [0, 1].
fn color(v: f64) -> String {
    let stops = [
        (0.0, (13u8, 8u8, 135u8)),
        (0.25, (126, 3, 168)),
        (0.5, (204, 71, 120)),
        (0.75, (248, 149, 64)),
        (1.0, (240, 249, 33)),
    ];
    let v = v.clamp(0.0, 1.0);
    for w in stops.windows(2) {
        let (a, ca) = w[0];
        let (b, cb) = w[1];
        if v >= a && v <= b {
            let t = if b > a { (v - a) / (b - a) } else { 0.0 };
            let mix = |x: u8, y: u8| (x as f64 + t * (y as f64 - x as f64)).round() as u8;
            return format!("#{:02x}{:02x}{:02x}", mix(ca.0, cb.0), mix(ca.1, cb.1), mix(ca.2, cb.2));
        }
    }
    "#000000".into()
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MB: f64 = 50.0;
const MT: f64 = 20.0;
const MR: f64 = 20.0;

fn svg_open(out: &mut String) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
}

fn axes(out: &mut String, xlabel: &str, ylabel: &str, x0: f64, x1: f64, y0: f64, y1: f64) {
    let _ = write!(
        out,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        W - ML - MR,
        H - MT - MB
    );
    let _ = write!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{xlabel}</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 12.0
    );
    let _ = write!(
        out,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 {})\">{ylabel}</text>\n",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0
    );
    for (frac, v) in [(0.0, x0), (0.5, 0.5 * (x0 + x1)), (1.0, x1)] {
        let x = ML + frac * (W - ML - MR);
        let _ = write!(
            out,
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{v:.3}</text>\n",
            H - MB + 16.0
        );
    }
    for (frac, v) in [(0.0, y0), (0.5, 0.5 * (y0 + y1)), (1.0, y1)] {
        let y = H - MB - frac * (H - MT - MB);
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\" font-size=\"11\">{v:.3}</text>\n",
            ML - 6.0
        );
    }
}

/// Heatmap of values[x][y] over the two grids; NaN cells are left blank.
pub fn heatmap(
    xgrid: &[f64],
    ygrid: &[f64],
    values: &[Vec<f64>],
    vmax: f64,
    xlabel: &str,
    ylabel: &str,
) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let nx = xgrid.len();
    let ny = ygrid.len();
    let cw = (W - ML - MR) / nx as f64;
    let ch = (H - MT - MB) / ny as f64;
    for (i, col) in values.iter().enumerate() {
        for (j, &v) in col.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let x = ML + i as f64 * cw;
            let y = H - MB - (j + 1) as f64 * ch;
            let _ = write!(
                out,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                cw + 0.5,
                ch + 0.5,
                color(v / vmax)
            );
        }
    }
    axes(
        &mut out,
        xlabel,
        ylabel,
        xgrid[0],
        xgrid[nx - 1],
        ygrid[0],
        ygrid[ny - 1],
    );
    out.push_str("</svg>\n");
    out
}

/// Polyline plot of one curve per branch: y[branch][point] against x.
pub fn lines(x: &[f64], ys: &[Vec<f64>], xlabel: &str, ylabel: &str) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let x0 = x[0];
    let x1 = x[x.len() - 1];
    let mut ymin = f64::MAX;
    let mut ymax = f64::MIN;
    for curve in ys {
        for &v in curve {
            ymin = ymin.min(v);
            ymax = ymax.max(v);
        }
    }
    if ymax <= ymin {
        ymax = ymin + 1.0;
    }
    let px = |v: f64| ML + (v - x0) / (x1 - x0).max(1e-12) * (W - ML - MR);
    let py = |v: f64| H - MB - (v - ymin) / (ymax - ymin) * (H - MT - MB);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];
    for (b, curve) in ys.iter().enumerate() {
        let pts: Vec<String> = curve
            .iter()
            .zip(x)
            .map(|(&v, &xx)| format!("{:.2},{:.2}", px(xx), py(v)))
            .collect();
        let _ = write!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\"/>\n",
            pts.join(" "),
            palette[b % palette.len()]
        );
    }
    axes(&mut out, xlabel, ylabel, x0, x1, ymin, ymax);
    out.push_str("</svg>\n");
    out
}
