//! Evaluation functionals: divergences against known truth, accuracy,
//! cross-entropy and binned calibration.

use std::io::Write;

use crate::error::{Error, Result};

/// Default number of reliability bins.
pub const DEFAULT_BINS: usize = 10;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Argument(format!("length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::Argument("at least one cell is required".into()));
    }
    Ok(())
}

// x log(x / y) with 0 log 0 = 0.
fn xlogxy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// Mean Bernoulli KL divergence from `true_probs` to `pred_probs`.
/// Infinite when a prediction sits on 0 or 1 against a truth that does not.
pub fn kl_divergence_avg(true_probs: &[f64], pred_probs: &[f64]) -> Result<f64> {
    check_lengths(true_probs.len(), pred_probs.len())?;
    let total: f64 = true_probs
        .iter()
        .zip(pred_probs)
        .map(|(&f, &p)| xlogxy(f, p) + xlogxy(1.0 - f, 1.0 - p))
        .sum();
    Ok(total / true_probs.len() as f64)
}

/// Mean of `(sqrt p - sqrt f)^2 + (sqrt(1-p) - sqrt(1-f))^2`.
pub fn hellinger_avg(true_probs: &[f64], pred_probs: &[f64]) -> Result<f64> {
    check_lengths(true_probs.len(), pred_probs.len())?;
    let total: f64 = true_probs
        .iter()
        .zip(pred_probs)
        .map(|(&f, &p)| {
            (p.sqrt() - f.sqrt()).powi(2) + ((1.0 - p).sqrt() - (1.0 - f).sqrt()).powi(2)
        })
        .sum();
    Ok(total / true_probs.len() as f64)
}

/// Fraction of cells where `p >= 0.5` agrees with the outcome.
pub fn accuracy(pred_probs: &[f64], outcomes: &[u8]) -> Result<f64> {
    check_lengths(pred_probs.len(), outcomes.len())?;
    let hits = pred_probs
        .iter()
        .zip(outcomes)
        .filter(|(&p, &y)| u8::from(p >= 0.5) == y)
        .count();
    Ok(hits as f64 / pred_probs.len() as f64)
}

/// `-mean[y log p + (1 - y) log(1 - p)]`.
pub fn cross_entropy(pred_probs: &[f64], outcomes: &[u8]) -> Result<f64> {
    check_lengths(pred_probs.len(), outcomes.len())?;
    let total: f64 = pred_probs
        .iter()
        .zip(outcomes)
        .map(|(&p, &y)| if y == 1 { -p.ln() } else { -(1.0 - p).ln() })
        .sum();
    Ok(total / pred_probs.len() as f64)
}

/// Mean Bernoulli entropy of `probs`.
pub fn mean_entropy(probs: &[f64]) -> f64 {
    let total: f64 = probs
        .iter()
        .map(|&f| {
            let h = |x: f64| if x == 0.0 { 0.0 } else { -x * x.ln() };
            h(f) + h(1.0 - f)
        })
        .sum();
    total / probs.len().max(1) as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReliabilityBin {
    /// One-based bin index `k`.
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Mean predicted probability; `None` for an empty bin.
    pub pred_mean: Option<f64>,
    /// Empirical frequency of `y = 1`; `None` for an empty bin.
    pub empirical_freq: Option<f64>,
}

impl ReliabilityBin {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Equal-width bins `[(k-1)/K, k/K)`, the last one closed at 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ReliabilityBins {
    pub bins: Vec<ReliabilityBin>,
}

impl ReliabilityBins {
    pub fn k_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// CSV with header `bin_index,lower,upper,count,pred_mean,empirical_freq`;
    /// the two means are left blank for empty bins.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_index,lower,upper,count,pred_mean,empirical_freq")?;
        for b in &self.bins {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                b.index,
                b.lower,
                b.upper,
                b.count,
                fmt(b.pred_mean),
                fmt(b.empirical_freq)
            )?;
        }
        Ok(())
    }
}

fn bin_bound(k: usize, k_bins: usize) -> f64 {
    k as f64 / k_bins as f64
}

/// Zero-based bin of `p`, consistent with the bounds reported per bin.
pub fn bin_index(p: f64, k_bins: usize) -> usize {
    let mut k = ((p * k_bins as f64).floor().max(0.0) as usize).min(k_bins - 1);
    while k > 0 && p < bin_bound(k, k_bins) {
        k -= 1;
    }
    while k + 1 < k_bins && p >= bin_bound(k + 1, k_bins) {
        k += 1;
    }
    k
}

pub fn reliability_bins(pred_probs: &[f64], outcomes: &[u8], k_bins: usize) -> Result<ReliabilityBins> {
    if k_bins == 0 {
        return Err(Error::Argument("K must be at least 1".into()));
    }
    if pred_probs.len() != outcomes.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} vs {}",
            pred_probs.len(),
            outcomes.len()
        )));
    }
    let mut counts = vec![0usize; k_bins];
    let mut pred_sum = vec![0.0; k_bins];
    let mut pos = vec![0usize; k_bins];
    for (&p, &y) in pred_probs.iter().zip(outcomes) {
        let k = bin_index(p, k_bins);
        counts[k] += 1;
        pred_sum[k] += p;
        pos[k] += usize::from(y == 1);
    }
    let bins = (0..k_bins)
        .map(|k| {
            let n = counts[k];
            let mean = |s: f64| (n > 0).then(|| s / n as f64);
            ReliabilityBin {
                index: k + 1,
                lower: bin_bound(k, k_bins),
                upper: bin_bound(k + 1, k_bins),
                count: n,
                pred_mean: mean(pred_sum[k]),
                empirical_freq: mean(pos[k] as f64),
            }
        })
        .collect();
    Ok(ReliabilityBins { bins })
}

/// `sum_k (|B_k| / total) |pred(B_k) - real(B_k)|`, skipping empty bins.
pub fn ece(bins: &ReliabilityBins, total: usize) -> Result<f64> {
    let counted = bins.total();
    if counted != total {
        return Err(Error::Argument(format!(
            "bins hold {counted} cells but total is {total}"
        )));
    }
    if total == 0 {
        return Err(Error::Argument("no cells were binned".into()));
    }
    Ok(bins
        .bins
        .iter()
        .filter_map(|b| Some(b.count as f64 * (b.pred_mean? - b.empirical_freq?).abs()))
        .sum::<f64>()
        / total as f64)
}
