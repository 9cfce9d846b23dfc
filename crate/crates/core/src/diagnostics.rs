//! Goodness of fit and degeneracy checks on simulated statistics.
//!
//! Every sampled statistic is centered on the observed value, so a model that
//! reproduces the observed network yields series scattered around zero.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::quantile_sorted;
use crate::error::{Error, Result};
use crate::io::write_stat_matrix;
use crate::stat_matrix::StatMatrix;

pub const MIN_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GofThresholds {
    /// Flag `off_center` when `|mean| > z * sd / sqrt(L_eff)`.
    pub z: f64,
    /// Mean simulated density below `low_ratio * observed` is degenerate.
    pub low_ratio: f64,
    /// Mean simulated density above `min(high_ratio * observed, high_cap)`
    /// is degenerate.
    pub high_ratio: f64,
    pub high_cap: f64,
    /// Share of empty or complete draws that alone raises a flag.
    pub extreme_fraction: f64,
}

impl Default for GofThresholds {
    fn default() -> Self {
        Self { z: 2.0, low_ratio: 0.01, high_ratio: 100.0, high_cap: 0.99, extreme_fraction: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermGof {
    pub term: String,
    pub observed: f64,
    /// `s_i - s_obs` for every draw.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub centered: Vec<f64>,
    /// Mean of `centered`.
    pub mean: f64,
    pub sd: f64,
    /// `(s_obs - mean(s)) / sd`; absent when the sample is constant.
    pub z_score: Option<f64>,
    pub lag1_autocorrelation: f64,
    pub effective_length: f64,
    pub off_center: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub draws: usize,
    pub observed_density: f64,
    pub mean_density: f64,
    pub empty_fraction: f64,
    pub full_fraction: f64,
    pub degenerate_empty: bool,
    pub degenerate_full: bool,
    pub terms: Vec<TermGof>,
    pub thresholds: GofThresholds,
}

impl GofReport {
    pub fn any_degenerate(&self) -> bool {
        self.degenerate_empty || self.degenerate_full
    }

    pub fn any_off_center(&self) -> bool {
        self.terms.iter().any(|t| t.off_center)
    }

    pub fn any_flag(&self) -> bool {
        self.any_degenerate() || self.any_off_center()
    }

    /// The report without the per-draw series.
    pub fn summary(&self) -> GofReport {
        GofReport {
            terms: self.terms.iter().map(|t| TermGof { centered: Vec::new(), ..t.clone() }).collect(),
            ..self.clone()
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Lag-1 autocorrelation; 0 for a constant series.
pub fn lag1_autocorrelation(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    let var: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    if var == 0.0 {
        return 0.0;
    }
    x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / var
}

/// `L (1 - rho) / (1 + rho)` for an AR(1)-like series, at least 1.
pub fn effective_length(len: usize, rho: f64) -> f64 {
    let rho = rho.clamp(-0.999, 0.999);
    (len as f64 * (1.0 - rho) / (1.0 + rho)).max(1.0)
}

/// Checks sampled statistics against the observed ones. `densities` are the
/// densities of the sampled graphs.
pub fn gof(
    sample: &StatMatrix,
    obs: &[f64],
    densities: &[f64],
    observed_density: f64,
    th: &GofThresholds,
) -> Result<GofReport> {
    let l = sample.rows();
    if l < MIN_ROWS {
        return Err(Error::TooFewSamples { need: MIN_ROWS, got: l });
    }
    if obs.len() != sample.cols() {
        return Err(Error::DimensionMismatch { expected: sample.cols(), got: obs.len() });
    }
    if densities.len() != l {
        return Err(Error::DimensionMismatch { expected: l, got: densities.len() });
    }
    let terms = sample
        .labels()
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let raw = sample.column(k);
            let centered: Vec<f64> = raw.iter().map(|v| v - obs[k]).collect();
            let m = mean(&centered);
            let s = sd(&centered);
            let rho = lag1_autocorrelation(&centered);
            let l_eff = effective_length(l, rho);
            TermGof {
                term: label.clone(),
                observed: obs[k],
                mean: m,
                sd: s,
                z_score: (s > 0.0).then(|| -m / s),
                lag1_autocorrelation: rho,
                effective_length: l_eff,
                off_center: m.abs() > th.z * s / l_eff.sqrt(),
                centered,
            }
        })
        .collect();
    let mean_density = mean(densities);
    let empty_fraction = densities.iter().filter(|&&d| d == 0.0).count() as f64 / l as f64;
    let full_fraction = densities.iter().filter(|&&d| d == 1.0).count() as f64 / l as f64;
    let degenerate_empty = mean_density < th.low_ratio * observed_density || empty_fraction >= th.extreme_fraction;
    let degenerate_full =
        mean_density > (th.high_ratio * observed_density).min(th.high_cap) || full_fraction >= th.extreme_fraction;
    Ok(GofReport {
        draws: l,
        observed_density,
        mean_density,
        empty_fraction,
        full_fraction,
        degenerate_empty,
        degenerate_full,
        terms,
        thresholds: *th,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing bin edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub const MIN_BINS: usize = 10;
const MAX_BINS: usize = 200;

/// Freedman-Diaconis histogram with at least [`MIN_BINS`] bins.
pub fn histogram(x: &[f64]) -> Result<Histogram> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut lo, mut hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let fd_width = 2.0 * iqr / (x.len() as f64).cbrt();
    let bins = if fd_width > 0.0 { ((hi - lo) / fd_width).ceil() as usize } else { MIN_BINS };
    let bins = bins.clamp(MIN_BINS, MAX_BINS);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|b| if b == bins { hi } else { lo + b as f64 * width }).collect();
    let mut counts = vec![0; bins];
    for &v in x {
        let b = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(Histogram { edges, counts })
}

fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes `trace_<term>.csv` and `density_<term>.csv` for every term and,
/// with `svg`, a `gof.svg` panel plot. Each file starts with `comments` as
/// `key=value` lines. Returns the written file names.
pub fn emit_plots(report: &GofReport, dir: &Path, svg: bool, comments: &[(String, String)]) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut hists = Vec::new();
    for t in &report.terms {
        let stem = file_stem(&t.term);
        let rows: Vec<Vec<f64>> = t.centered.iter().map(|v| vec![*v]).collect();
        let trace = StatMatrix::from_rows(vec![t.term.clone()], &rows)?;
        let name = format!("trace_{stem}.csv");
        write_stat_matrix(std::fs::File::create(dir.join(&name))?, &trace, None, comments)?;
        written.push(name);

        let h = histogram(&t.centered)?;
        let total = t.centered.len() as f64;
        let mut file = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("density_{stem}.csv")))?);
        for (k, v) in comments {
            writeln!(file, "# {k}={v}")?;
        }
        let mut csv = csv::Writer::from_writer(file);
        csv.write_record(["bin_lower", "bin_upper", "count", "density"])?;
        for (b, c) in h.counts.iter().enumerate() {
            let w = h.edges[b + 1] - h.edges[b];
            csv.write_record([
                h.edges[b].to_string(),
                h.edges[b + 1].to_string(),
                c.to_string(),
                (*c as f64 / (total * w)).to_string(),
            ])?;
        }
        csv.flush()?;
        written.push(format!("density_{stem}.csv"));
        hists.push(h);
    }
    if svg {
        std::fs::write(dir.join("gof.svg"), render_svg(report, &hists, comments))?;
        written.push("gof.svg".into());
    }
    Ok(written)
}

/// One column per term: the centered trace above its histogram, each with
/// the observed value (zero after centering) drawn as a thick line.
fn render_svg(report: &GofReport, hists: &[Histogram], comments: &[(String, String)]) -> String {
    const W: f64 = 260.0;
    const H: f64 = 160.0;
    const PAD: f64 = 24.0;
    let width = W * report.terms.len() as f64;
    let height = 2.0 * H + 2.0 * PAD;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#);
    for (k, v) in comments {
        let _ = writeln!(s, "<!-- {k}={v} -->");
    }
    for (k, (t, h)) in report.terms.iter().zip(hists).enumerate() {
        let x0 = k as f64 * W;
        let _ = writeln!(s, r#"<text x="{:.1}" y="14">{}</text>"#, x0 + PAD, t.term);
        // Trace.
        let (lo, hi) = t.centered.iter().fold((0.0f64, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let n = t.centered.len().max(2) as f64 - 1.0;
        let ty = |v: f64| PAD + (H - PAD) * (1.0 - (v - lo) / span);
        let pts: Vec<String> = t
            .centered
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.1},{:.1}", x0 + PAD + (W - 2.0 * PAD) * i as f64 / n, ty(*v)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="0.7" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" x2="{:.1}" y1="{y:.1}" y2="{y:.1}" stroke="black" stroke-width="2.5"/>"#,
            x0 + PAD,
            x0 + W - PAD,
            y = ty(0.0)
        );
        // Histogram.
        let base = 2.0 * H;
        let (elo, ehi) = (h.edges[0].min(0.0), h.edges[h.edges.len() - 1].max(0.0));
        let espan = if ehi > elo { ehi - elo } else { 1.0 };
        let tx = |v: f64| x0 + PAD + (W - 2.0 * PAD) * (v - elo) / espan;
        let cmax = h.counts.iter().copied().max().unwrap_or(1).max(1) as f64;
        for (b, c) in h.counts.iter().enumerate() {
            let bh = (H - 2.0 * PAD) * *c as f64 / cmax;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{bh:.1}" fill="lightgray" stroke="gray"/>"#,
                tx(h.edges[b]),
                base - bh,
                (tx(h.edges[b + 1]) - tx(h.edges[b])).max(0.5)
            );
        }
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" x2="{x:.1}" y1="{:.1}" y2="{base:.1}" stroke="black" stroke-width="2.5"/>"#,
            H + PAD,
            x = tx(0.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(q: usize) -> Vec<String> {
        (0..q).map(|k| format!("s{k}")).collect()
    }

    #[test]
    fn constant_sample_at_observed_has_no_flags() {
        let rows = vec![vec![5.0, 2.0]; 20];
        let m = StatMatrix::from_rows(labels(2), &rows).unwrap();
        let r = gof(&m, &[5.0, 2.0], &[0.3; 20], 0.3, &GofThresholds::default()).unwrap();
        assert!(!r.any_flag());
        assert!(r.terms.iter().all(|t| t.centered.iter().all(|&c| c == 0.0) && t.z_score.is_none()));
    }

    #[test]
    fn centering_is_exact() {
        let rows: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64 * 0.1 + 0.7]).collect();
        let m = StatMatrix::from_rows(labels(1), &rows).unwrap();
        let obs = 0.3;
        let r = gof(&m, &[obs], &[0.5; 15], 0.5, &GofThresholds::default()).unwrap();
        for (c, raw) in r.terms[0].centered.iter().zip(m.column(0)) {
            assert_eq!(c + obs, raw);
        }
        assert!(r.terms[0].off_center);
    }

    #[test]
    fn density_flags() {
        let m = StatMatrix::from_rows(labels(1), &vec![vec![1.0]; 10]).unwrap();
        let th = GofThresholds::default();
        assert!(gof(&m, &[1.0], &[0.995; 10], 0.3, &th).unwrap().degenerate_full);
        assert!(gof(&m, &[1.0], &[0.001; 10], 0.3, &th).unwrap().degenerate_empty);
        assert!(gof(&m, &[1.0], &[0.0; 10], 0.0, &th).unwrap().degenerate_empty);
        assert!(matches!(gof(&m, &[1.0], &[0.1; 9], 0.1, &th), Err(Error::DimensionMismatch { .. })));
        let few = StatMatrix::from_rows(labels(1), &vec![vec![1.0]; 9]).unwrap();
        assert!(matches!(gof(&few, &[1.0], &[0.1; 9], 0.1, &th), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn histogram_conserves_counts() {
        let x: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64).collect();
        let h = histogram(&x).unwrap();
        assert!(h.counts.len() >= MIN_BINS);
        assert_eq!(h.counts.iter().sum::<usize>(), 500);
        let c = histogram(&[2.0; 5]).unwrap();
        assert_eq!(c.counts.iter().sum::<usize>(), 5);
    }

    #[test]
    fn autocorrelation_of_alternating_series() {
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((lag1_autocorrelation(&x) + 0.99).abs() < 1e-12);
        assert_eq!(lag1_autocorrelation(&[3.0; 8]), 0.0);
    }
}
