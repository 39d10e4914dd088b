//! P-value plots and their shape diagnosis.
//!
//! A set of studies testing the same null question should produce p-values
//! that look like a uniform sample: ranked ascending and plotted against the
//! integers they trace a straight line toward the reference slope. A cluster
//! of very small p-values followed by a straight upper segment instead
//! suggests a two-component mixture. This module builds the ranked plot,
//! tests uniformity, fits one- and two-segment lines, and turns the pieces
//! into a verdict.

use crate::effect_stats::PValueRecord;
use crate::error::{MetalensError, Result};
use crate::numfmt::{fmt_fixed6, fmt_sig6, fmt_stat};

/// Ranked p-values with the uniform reference line they are judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct PValuePlotModel {
    /// (rank, p), sorted ascending in both coordinates at once.
    pub points: Vec<(usize, f64)>,
    pub k: usize,
    /// Expected uniform order statistics (i, i/(k+1)).
    pub reference: Vec<(usize, f64)>,
    pub alpha_line: f64,
}

/// Shape call for a p-value plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Uniform,
    Bilinear,
    Ambiguous,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Uniform => "Uniform",
            Verdict::Bilinear => "Bilinear",
            Verdict::Ambiguous => "Ambiguous",
        })
    }
}

/// Everything the verdict was based on, kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDiagnosis {
    pub n_below_alpha: usize,
    /// One-sample KS (statistic, p) of all p-values against Uniform(0,1).
    pub ks_all: (f64, f64),
    /// Same test on {(p - alpha)/(1 - alpha) : p > alpha}; (0, 1) when that
    /// set is empty, which never blocks a Bilinear call on its own.
    pub ks_above_alpha: (f64, f64),
    pub rss_one_segment: f64,
    pub rss_two_segment: f64,
    /// Hinge rank of the best two-segment fit.
    pub split_rank: usize,
    pub verdict: Verdict,
}

/// Thresholds behind the verdict. The shapes this operationalizes were only
/// ever described visually, so every knob here is overridable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosisConfig {
    /// Minimum count of p-values at or below alpha for a Bilinear call.
    pub min_below_alpha: usize,
    /// Level at which the rescaled above-alpha tail must NOT reject
    /// uniformity for a Bilinear call.
    pub ks_above_reject_level: f64,
    /// Level at which the full set must not reject uniformity for a Uniform
    /// call.
    pub ks_all_reject_level: f64,
    /// Two-segment RSS must undercut this fraction of the single-line RSS.
    pub max_rss_ratio: f64,
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        DiagnosisConfig {
            min_below_alpha: 3,
            ks_above_reject_level: 0.01,
            ks_all_reject_level: 0.05,
            max_rss_ratio: 0.5,
        }
    }
}

/// Assembles the ranked plot from derived records.
///
/// Points carry the records' own ranks, which must be exactly 1..=k with p
/// non-decreasing along them; the reference line is i/(k+1).
pub fn build_plot(records: &[PValueRecord], alpha: f64) -> Result<PValuePlotModel> {
    if records.is_empty() {
        return Err(MetalensError::EmptyInput("build_plot"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MetalensError::BadAlpha(alpha));
    }
    let k = records.len();
    let mut points = vec![(0usize, 0.0f64); k];
    let mut seen = vec![false; k];
    for r in records {
        if !(r.p > 0.0 && r.p <= 1.0) {
            return Err(MetalensError::BadPValue(r.p));
        }
        if r.rank < 1 || r.rank > k || seen[r.rank - 1] {
            return Err(MetalensError::BadRanks {
                expected: k,
                rank: r.rank,
            });
        }
        seen[r.rank - 1] = true;
        points[r.rank - 1] = (r.rank, r.p);
    }
    for w in points.windows(2) {
        if w[1].1 < w[0].1 {
            return Err(MetalensError::UnsortedPlot { rank: w[1].0 });
        }
    }
    let reference = (1..=k).map(|i| (i, i as f64 / (k + 1) as f64)).collect();
    Ok(PValuePlotModel {
        points,
        k,
        reference,
        alpha_line: alpha,
    })
}

/// One-sample Kolmogorov-Smirnov test against Uniform(0,1).
///
/// Returns (D, p) where p comes from the asymptotic Kolmogorov distribution
/// at sqrt(n)*D. Input order does not matter; values must lie in (0, 1].
pub fn ks_uniformity(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(MetalensError::EmptyInput("ks_uniformity"));
    }
    for &v in values {
        if !(v > 0.0 && v <= 1.0) {
            return Err(MetalensError::BadUnitValue(v));
        }
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let hi = (i + 1) as f64 / n - x; // step above the sample point
        let lo = x - i as f64 / n; // gap below it
        d = d.max(hi).max(lo);
    }
    Ok((d, kolmogorov_tail(n.sqrt() * d)))
}

/// Asymptotic Kolmogorov survival Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2),
/// truncated once terms drop under 1e-12, clamped into [0, 1].
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=1000 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Ordinary least squares line through (rank, p); returns the residual sum of
/// squares.
fn single_line_rss(points: &[(usize, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(r, p) in points {
        let x = r as f64;
        sx += x;
        sy += p;
        sxx += x * x;
        sxy += x * p;
    }
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        // single point: the line is unconstrained, residual zero
        return 0.0;
    }
    let b = (n * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n;
    points
        .iter()
        .map(|&(r, p)| {
            let e = p - (a + b * r as f64);
            e * e
        })
        .sum()
}

/// Best continuous two-segment fit y = a + b x + c max(0, x - s) over all
/// integer hinge ranks s in 2..=k-1; ties go to the smaller s.
fn two_segment_rss(points: &[(usize, f64)]) -> (usize, f64) {
    let k = points.len();
    let mut best = (0usize, f64::INFINITY);
    for s in 2..=k.saturating_sub(1) {
        let sf = s as f64;
        // normal equations for the three-parameter hinge basis
        let mut m = [[0.0f64; 3]; 3];
        let mut v = [0.0f64; 3];
        for &(r, p) in points {
            let x = r as f64;
            let basis = [1.0, x, (x - sf).max(0.0)];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += basis[i] * basis[j];
                }
                v[i] += basis[i] * p;
            }
        }
        let Some(coef) = solve3(m, v) else { continue };
        let rss: f64 = points
            .iter()
            .map(|&(r, p)| {
                let x = r as f64;
                let e = p - (coef[0] + coef[1] * x + coef[2] * (x - sf).max(0.0));
                e * e
            })
            .sum();
        if rss < best.1 {
            best = (s, rss);
        }
    }
    best
}

/// 3x3 Gaussian elimination with partial pivoting; None when singular.
fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (j, entry) in m[row].iter_mut().enumerate().skip(col) {
                *entry -= f * pivot_row[j];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = v[row];
        for j in row + 1..3 {
            acc -= m[row][j] * x[j];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Classifies the plot shape with default thresholds.
pub fn bilinear_diagnosis(plot: &PValuePlotModel) -> Result<MixtureDiagnosis> {
    bilinear_diagnosis_with(plot, &DiagnosisConfig::default())
}

/// Classifies the plot shape.
///
/// Bilinear needs all three of: enough p-values at or below the alpha line,
/// an above-alpha tail that still looks uniform once rescaled to (0,1), and a
/// two-segment fit that beats the single line by the configured ratio.
/// Uniform needs the whole set to pass KS and at most the expected handful of
/// small p-values. Bilinear is checked first; anything else is Ambiguous.
pub fn bilinear_diagnosis_with(
    plot: &PValuePlotModel,
    config: &DiagnosisConfig,
) -> Result<MixtureDiagnosis> {
    if plot.k < 4 {
        return Err(MetalensError::TooFewStudies {
            what: "plot diagnosis",
            needed: 4,
            got: plot.k,
        });
    }
    let alpha = plot.alpha_line;
    let pvalues: Vec<f64> = plot.points.iter().map(|&(_, p)| p).collect();
    let n_below_alpha = pvalues.iter().filter(|&&p| p <= alpha).count();
    let ks_all = ks_uniformity(&pvalues)?;
    let above: Vec<f64> = pvalues
        .iter()
        .filter(|&&p| p > alpha)
        .map(|&p| (p - alpha) / (1.0 - alpha))
        .collect();
    let ks_above_alpha = if above.is_empty() {
        (0.0, 1.0)
    } else {
        ks_uniformity(&above)?
    };

    let rss_one_segment = single_line_rss(&plot.points);
    let (split_rank, raw_two) = two_segment_rss(&plot.points);
    // a perfect single line leaves the hinge nothing to explain
    let rss_two_segment = if rss_one_segment < 1e-12 {
        rss_one_segment
    } else {
        raw_two.min(rss_one_segment)
    };

    let bilinear = n_below_alpha >= config.min_below_alpha
        && ks_above_alpha.1 > config.ks_above_reject_level
        && rss_two_segment < config.max_rss_ratio * rss_one_segment;
    let expected_below = (alpha * plot.k as f64).round() as usize;
    let uniform =
        ks_all.1 > config.ks_all_reject_level && n_below_alpha <= expected_below.max(1);
    let verdict = if bilinear {
        Verdict::Bilinear
    } else if uniform {
        Verdict::Uniform
    } else {
        Verdict::Ambiguous
    };

    Ok(MixtureDiagnosis {
        n_below_alpha,
        ks_all,
        ks_above_alpha,
        rss_one_segment,
        rss_two_segment,
        split_rank,
        verdict,
    })
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 480.0;
const MARGIN_X: f64 = SVG_WIDTH * 0.10;
const MARGIN_Y: f64 = SVG_HEIGHT * 0.10;

fn x_px(plot: &PValuePlotModel, rank: f64) -> f64 {
    // data range 0..k+1 keeps rank 1 and rank k off the frame edges
    MARGIN_X + rank / (plot.k + 1) as f64 * (SVG_WIDTH - 2.0 * MARGIN_X)
}

fn y_px(p: f64) -> f64 {
    SVG_HEIGHT - MARGIN_Y - p * (SVG_HEIGHT - 2.0 * MARGIN_Y)
}

fn escape_xml(s: &str) -> String {
    s.chars()
        .flat_map(|c| {
            match c {
                '&' => "&amp;".chars().collect::<Vec<_>>(),
                '<' => "&lt;".chars().collect(),
                '>' => "&gt;".chars().collect(),
                '"' => "&quot;".chars().collect(),
                '\'' => "&apos;".chars().collect(),
                _ => vec![c],
            }
        })
        .collect()
}

/// Renders the plot as a standalone SVG document.
///
/// Rank on x, p on y in [0,1]; plotted points, the dashed uniform reference
/// line, a horizontal alpha line, the title when nonempty, and the verdict
/// when a diagnosis is supplied. Output bytes are a pure function of the
/// inputs.
pub fn render_svg(
    plot: &PValuePlotModel,
    diagnosis: Option<&MixtureDiagnosis>,
    title: &str,
) -> String {
    let mut svg = String::with_capacity(4096);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        fmt_sig6(SVG_WIDTH),
        fmt_sig6(SVG_HEIGHT),
        fmt_sig6(SVG_WIDTH),
        fmt_sig6(SVG_HEIGHT)
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        fmt_sig6(SVG_WIDTH),
        fmt_sig6(SVG_HEIGHT)
    ));

    // axes
    let (x0, x1) = (x_px(plot, 0.0), x_px(plot, (plot.k + 1) as f64));
    let (y0, y1) = (y_px(0.0), y_px(1.0));
    svg.push_str(&format!(
        "  <g id=\"axes\" stroke=\"black\" stroke-width=\"1\">\n    <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n    <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n  </g>\n",
        fmt_sig6(x0), fmt_sig6(y0), fmt_sig6(x1), fmt_sig6(y0),
        fmt_sig6(x0), fmt_sig6(y0), fmt_sig6(x0), fmt_sig6(y1)
    ));

    // y ticks at quarters, x ticks at every rank
    svg.push_str("  <g id=\"ticks\" font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n");
    for quarter in 0..=4 {
        let p = quarter as f64 * 0.25;
        let y = y_px(p);
        svg.push_str(&format!(
            "    <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            fmt_sig6(x0 - 4.0),
            fmt_sig6(y),
            fmt_sig6(x0),
            fmt_sig6(y)
        ));
        svg.push_str(&format!(
            "    <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            fmt_sig6(x0 - 7.0),
            fmt_sig6(y + 4.0),
            fmt_stat(p)
        ));
    }
    for i in 1..=plot.k {
        let x = x_px(plot, i as f64);
        svg.push_str(&format!(
            "    <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            fmt_sig6(x),
            fmt_sig6(y0),
            fmt_sig6(x),
            fmt_sig6(y0 + 4.0)
        ));
        svg.push_str(&format!(
            "    <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            fmt_sig6(x),
            fmt_sig6(y0 + 16.0),
            i
        ));
    }
    svg.push_str("  </g>\n");

    // uniform reference line across the ranked expectation
    let (r0, ref0) = plot.reference[0];
    let (r1, ref1) = plot.reference[plot.k - 1];
    svg.push_str(&format!(
        "  <line id=\"ref\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n",
        fmt_sig6(x_px(plot, r0 as f64)),
        fmt_sig6(y_px(ref0)),
        fmt_sig6(x_px(plot, r1 as f64)),
        fmt_sig6(y_px(ref1))
    ));

    // significance threshold
    svg.push_str(&format!(
        "  <line id=\"alpha\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"crimson\" stroke-dasharray=\"2 3\"/>\n",
        fmt_sig6(x0),
        fmt_sig6(y_px(plot.alpha_line)),
        fmt_sig6(x1),
        fmt_sig6(y_px(plot.alpha_line))
    ));

    svg.push_str("  <g id=\"points\" fill=\"steelblue\">\n");
    for &(rank, p) in &plot.points {
        svg.push_str(&format!(
            "    <circle cx=\"{}\" cy=\"{}\" r=\"4\"/>\n",
            fmt_sig6(x_px(plot, rank as f64)),
            fmt_sig6(y_px(p))
        ));
    }
    svg.push_str("  </g>\n");

    if !title.is_empty() {
        svg.push_str(&format!(
            "  <text id=\"title\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
            fmt_sig6(SVG_WIDTH / 2.0),
            fmt_sig6(MARGIN_Y * 0.6),
            escape_xml(title)
        ));
    }
    if let Some(d) = diagnosis {
        svg.push_str(&format!(
            "  <text id=\"verdict\" x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">verdict: {} ({} of {} p &lt;= {})</text>\n",
            fmt_sig6(SVG_WIDTH - MARGIN_X),
            fmt_sig6(MARGIN_Y * 0.6 + 18.0),
            d.verdict,
            d.n_below_alpha,
            plot.k,
            fmt_stat(plot.alpha_line)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Renders the plot as CSV: `rank,p_value,uniform_reference`, one row per
/// rank, LF endings. P-values use the shared statistic format, the reference
/// six fixed decimals.
pub fn render_csv(plot: &PValuePlotModel) -> String {
    let mut out = String::from("rank,p_value,uniform_reference\n");
    for (&(rank, p), &(_, r)) in plot.points.iter().zip(&plot.reference) {
        out.push_str(&format!("{rank},{},{}\n", fmt_stat(p), fmt_fixed6(r)));
    }
    out
}
