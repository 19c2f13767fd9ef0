//! Reliability diagram: per-bin CSV plus a static SVG rendering.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use ebmc_core::metrics::{ece, reliability_bins, ReliabilityBins};
use serde::{Deserialize, Serialize};

use super::rng_mode;
use crate::config::{self, RawArgs};
use crate::tables::{align, read_rows, OutcomeRow, PredictionRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReliabilityConfig {
    pub out: PathBuf,
    pub predictions: PathBuf,
    pub outcomes: PathBuf,
    pub k_bins: usize,
    pub title: String,
    pub svg: bool,
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("reliability-out"),
            predictions: PathBuf::from("predictions.csv"),
            outcomes: PathBuf::from("test.csv"),
            k_bins: 10,
            title: String::from("Reliability diagram"),
            svg: true,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Bars at empirical frequency per bin, dots at the mean prediction, and
/// the identity line.
pub fn render_svg(bins: &ReliabilityBins, title: &str, ece_value: f64) -> String {
    let (w, h, m) = (420.0, 420.0, 50.0);
    let side = w - 2.0 * m;
    let x = |v: f64| m + v * side;
    let y = |v: f64| h - m - v * side;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    for b in &bins.bins {
        if let Some(freq) = b.empirical_freq {
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" fill-opacity="0.75" stroke="#2a3f66"/>"##,
                x(b.lower),
                y(freq),
                (b.upper - b.lower) * side,
                freq * side
            );
        }
        if let (Some(pm), Some(freq)) = (b.pred_mean, b.empirical_freq) {
            let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#c44e52"/>"##, x(pm), y(freq));
        }
    }
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#555" stroke-dasharray="5,4"/>"##,
        x(0.0), y(0.0), x(1.0), y(1.0)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{side}" height="{side}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{v:.1}</text>"#, x(v), h - m + 16.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#, m - 6.0, y(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">predicted probability</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">empirical frequency</text>"#,
        h / 2.0,
        h / 2.0
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}">ECE = {ece_value:.4}</text>"#, m + 8.0, m + 18.0);
    s.push_str("</svg>\n");
    s
}

pub fn run(args: &RawArgs) -> Result<bool> {
    let cfg: ReliabilityConfig = config::resolve(args)?;
    if args.show_config {
        print!("{}", config::to_toml(&cfg)?);
        return Ok(true);
    }
    let preds: Vec<PredictionRow> = read_rows(&cfg.predictions)?;
    let rows: Vec<OutcomeRow> = read_rows(&cfg.outcomes)?;
    let cells: Vec<(usize, usize)> = rows.iter().map(|r| (r.i, r.j)).collect();
    let ys: Vec<u8> = rows.iter().map(|r| r.y).collect();
    let probs = align("predictions", &cells, &preds)?;
    let bins = reliability_bins(&probs, &ys, cfg.k_bins)?;
    let e = ece(&bins, ys.len())?;

    config::echo(&cfg.out, "reliability", &cfg, rng_mode()?)?;
    bins.write_csv(std::fs::File::create(cfg.out.join("reliability.csv"))?)?;
    if cfg.svg {
        std::fs::write(cfg.out.join("reliability.svg"), render_svg(&bins, &cfg.title, e))?;
    }
    println!("ece  {e}");
    Ok(true)
}
