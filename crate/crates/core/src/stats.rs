//! Correlation against subjective scores, monotonic logistic mapping, and
//! significance testing of correlation differences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Correlations of one score vector against subjective scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub pearson: f64,
    pub spearman: f64,
    pub n: usize,
}

fn check_pair(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min_len {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least {min_len} samples, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    Ok(())
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 3)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input".into()));
    }
    // One square root keeps perfectly (anti)correlated integer data, such as
    // rank vectors, at exactly +-1.
    let prod = sxx * syy;
    let denom = if prod.is_normal() {
        prod.sqrt()
    } else {
        sxx.sqrt() * syy.sqrt()
    };
    Ok((sxy / denom).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of the ranks they span.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation: Pearson on fractional ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 3)?;
    pearson(&fractional_ranks(x), &fractional_ranks(y))
}

/// `f(q) = b2 + (b1 - b2) / (1 + exp(-(q - b3) / |b4|))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub beta: [f64; 4],
    pub converged: bool,
    pub residual_rmse: f64,
}

const MIN_SCALE: f64 = 1e-12;

pub fn logistic(beta: &[f64; 4], q: f64) -> f64 {
    let scale = beta[3].abs().max(MIN_SCALE);
    beta[1] + (beta[0] - beta[1]) / (1.0 + (-(q - beta[2]) / scale).exp())
}

impl RegressionFit {
    pub fn apply(&self, q: f64) -> f64 {
        logistic(&self.beta, q)
    }

    pub fn map(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&q| self.apply(q)).collect()
    }

    /// Whether the fitted curve rises with the objective score.
    pub fn increasing(&self) -> bool {
        self.beta[0] >= self.beta[1]
    }
}

pub const FIT_MAX_ITERATIONS: usize = 2000;
pub const FIT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex minimization with standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
///
/// Converges when the spread of objective values across the simplex drops
/// below `tol` relative to their magnitude. After convergence the simplex is
/// rebuilt around the best vertex; the search stops once a restart no longer
/// improves the objective, or when `max_iter` iterations are used up.
pub fn nelder_mead<F>(
    f: F,
    start: &[f64],
    steps: &[f64],
    max_iter: usize,
    tol: f64,
) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let dim = start.len();
    let eval = |p: &[f64]| {
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let build = |center: &[f64]| -> Vec<(Vec<f64>, f64)> {
        let mut s = Vec::with_capacity(dim + 1);
        s.push((center.to_vec(), eval(center)));
        for i in 0..dim {
            let mut p = center.to_vec();
            p[i] += steps[i];
            let v = eval(&p);
            s.push((p, v));
        }
        s
    };

    let mut simplex = build(start);
    let mut iterations = 0;
    let mut converged = false;
    let mut last_restart_best = f64::INFINITY;

    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let spread = (worst - best).abs();
        if spread <= tol * (best.abs() + worst.abs()) * 0.5 || spread <= f64::MIN_POSITIVE {
            if best >= last_restart_best * (1.0 - tol) || best == 0.0 {
                converged = true;
                break;
            }
            last_restart_best = best;
            let center = simplex[0].0.clone();
            simplex = build(&center);
            continue;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for (p, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let reflected = along(-1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = eval(&expanded);
            simplex[dim] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < simplex[dim].1 {
            let c = along(-0.5);
            let v = eval(&c);
            (c, v)
        } else {
            let c = along(0.5);
            let v = eval(&c);
            (c, v)
        };
        if fc < simplex[dim].1.min(fr) {
            simplex[dim] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let p: Vec<f64> = anchor
                .iter()
                .zip(&vertex.0)
                .map(|(a, v)| a + 0.5 * (v - a))
                .collect();
            let v = eval(&p);
            *vertex = (p, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, value) = simplex.swap_remove(0);
    SimplexResult {
        point,
        value,
        iterations,
        converged,
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fit the 4-parameter monotonic logistic to `(scores, mos)` by least squares.
///
/// Both axes are standardized before the simplex search and the parameters
/// mapped back afterwards. The search starts from `b1 = max(mos)`,
/// `b2 = min(mos)`, `b3 = median(scores)`, `b4 = std(scores)`, with `b1` and
/// `b2` swapped when scores and MOS are negatively related.
pub fn logistic_fit(scores: &[f64], mos: &[f64]) -> Result<RegressionFit> {
    if scores.len() != mos.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} vs {}",
            scores.len(),
            mos.len()
        )));
    }
    if scores.len() < 5 {
        return Err(Error::FitDegenerate(format!(
            "need at least 5 samples, got {}",
            scores.len()
        )));
    }
    if scores.iter().chain(mos).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let n = scores.len() as f64;
    let q_mean = scores.iter().sum::<f64>() / n;
    let q_std = (scores.iter().map(|q| (q - q_mean).powi(2)).sum::<f64>() / n).sqrt();
    if q_std == 0.0 || !q_std.is_finite() {
        return Err(Error::FitDegenerate("objective scores are constant".into()));
    }
    let m_lo = mos.iter().copied().fold(f64::INFINITY, f64::min);
    let m_hi = mos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m_range = if m_hi > m_lo { m_hi - m_lo } else { 1.0 };

    let qs: Vec<f64> = scores.iter().map(|q| (q - q_mean) / q_std).collect();
    let ms: Vec<f64> = mos.iter().map(|m| (m - m_lo) / m_range).collect();

    let increasing = qs.iter().zip(&ms).map(|(q, m)| q * (m - 0.5)).sum::<f64>() >= 0.0;
    let (b1, b2) = if increasing {
        ((m_hi - m_lo) / m_range, 0.0)
    } else {
        (0.0, (m_hi - m_lo) / m_range)
    };
    let start = [b1, b2, (median(scores) - q_mean) / q_std, 1.0];
    let steps = [0.1, 0.1, 0.25, 0.25];

    let sse = |b: &[f64]| -> f64 {
        let beta = [b[0], b[1], b[2], b[3]];
        qs.iter()
            .zip(&ms)
            .map(|(&q, &m)| {
                let r = logistic(&beta, q) - m;
                r * r
            })
            .sum()
    };
    let result = nelder_mead(sse, &start, &steps, FIT_MAX_ITERATIONS, FIT_TOLERANCE);
    let b = &result.point;
    let beta = [
        m_lo + m_range * b[0],
        m_lo + m_range * b[1],
        q_mean + q_std * b[2],
        q_std * b[3].abs().max(MIN_SCALE),
    ];
    let residual_rmse = (scores
        .iter()
        .zip(mos)
        .map(|(&q, &m)| (logistic(&beta, q) - m).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RegressionFit {
        beta,
        converged: result.converged,
        residual_rmse,
    })
}

/// Outcome of a fitted correlation.
///
/// Spearman is taken on raw scores. Pearson is taken between the
/// logistic-mapped scores and MOS, then signed by the direction of the
/// fitted curve, so a decreasing relationship reports a negative value in
/// both columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedCorrelation {
    pub correlation: CorrelationResult,
    /// `None` when the fit was degenerate and the identity mapping was used.
    pub fit: Option<RegressionFit>,
}

pub fn correlate(scores: &[f64], mos: &[f64]) -> Result<FittedCorrelation> {
    let spearman = spearman(scores, mos)?;
    let (mapped, fit) = match logistic_fit(scores, mos) {
        Ok(fit) => (fit.map(scores), Some(fit)),
        Err(Error::FitDegenerate(_)) => (scores.to_vec(), None),
        Err(e) => return Err(e),
    };
    let sign = match fit {
        Some(f) if !f.increasing() => -1.0,
        _ => 1.0,
    };
    let pearson = match pearson(&mapped, mos) {
        Ok(r) => sign * r,
        // A flat fitted curve carries no linear information; fall back to raw.
        Err(Error::UndefinedCorrelation(_)) if fit.is_some() => pearson(scores, mos)?,
        Err(e) => return Err(e),
    };
    Ok(FittedCorrelation {
        correlation: CorrelationResult {
            pearson,
            spearman,
            n: scores.len(),
        },
        fit,
    })
}

pub const DEFAULT_ALPHA: f64 = 0.05;
const R_CLAMP: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTest {
    pub significant: bool,
    pub statistic: f64,
    pub critical: f64,
    /// Set when a correlation of magnitude 1 was pulled inside the open interval.
    pub clamped: bool,
}

/// Two-sided Fisher-z test for a difference between two correlations from
/// independent samples.
pub fn significant_difference(
    r1: f64,
    n1: usize,
    r2: f64,
    n2: usize,
    alpha: f64,
) -> Result<SignificanceTest> {
    for n in [n1, n2] {
        if n <= 3 {
            return Err(Error::InvalidSampleSize(n));
        }
    }
    for r in [r1, r2] {
        if !r.is_finite() || r.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "correlation {r} outside [-1, 1]"
            )));
        }
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let clamped = r1.abs() > R_CLAMP || r2.abs() > R_CLAMP;
    let z1 = r1.clamp(-R_CLAMP, R_CLAMP).atanh();
    let z2 = r2.clamp(-R_CLAMP, R_CLAMP).atanh();
    let se = (1.0 / (n1 - 3) as f64 + 1.0 / (n2 - 3) as f64).sqrt();
    let statistic = (z1 - z2).abs() / se;
    let critical = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    Ok(SignificanceTest {
        significant: statistic > critical,
        statistic,
        critical,
        clamped,
    })
}

pub const CODEWORD_LEN: usize = 9;
pub const DATABASE_SLOTS: [&str; 3] = ["LIVE", "M-LIVE", "TID"];
pub const ATTRIBUTE_SLOTS: [&str; 3] = ["squared_error", "ssim", "third"];

/// Nine significance flags: three database groups of three attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SignificanceCodeword([bool; CODEWORD_LEN]);

impl SignificanceCodeword {
    pub fn digits(&self) -> &[bool; CODEWORD_LEN] {
        &self.0
    }

    pub fn slot(database: usize, attribute: usize) -> usize {
        database * 3 + attribute
    }
}

pub fn encode_codeword(flags: &[bool]) -> Result<SignificanceCodeword> {
    let digits: [bool; CODEWORD_LEN] = flags.try_into().map_err(|_| {
        Error::InvalidCodeword(format!(
            "expected {CODEWORD_LEN} flags, got {}",
            flags.len()
        ))
    })?;
    Ok(SignificanceCodeword(digits))
}

impl fmt::Display for SignificanceCodeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.0 {
            f.write_str(if d { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for SignificanceCodeword {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let flags = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidCodeword(format!(
                    "bad digit '{other}' in '{s}'"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        encode_codeword(&flags)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CodewordTotals {
    /// Per-digit counts ("Col. Sum").
    pub columns: [u32; CODEWORD_LEN],
    /// Per-database counts, each the sum of its three columns ("DB Sum").
    pub databases: [u32; 3],
}

pub fn codeword_totals(codewords: &[SignificanceCodeword]) -> Result<CodewordTotals> {
    if codewords.is_empty() {
        return Err(Error::InvalidCodeword("empty codeword matrix".into()));
    }
    let mut totals = CodewordTotals::default();
    for cw in codewords {
        for (col, &d) in totals.columns.iter_mut().zip(cw.digits()) {
            *col += u32::from(d);
        }
    }
    for db in 0..3 {
        totals.databases[db] = totals.columns[db * 3..db * 3 + 3].iter().sum();
    }
    Ok(totals)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook single-pass formula, independent of the centered two-pass
    /// implementation.
    fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let syy: f64 = y.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    #[test]
    fn pearson_examples() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);

        let a = [0.3, 1.7, 2.2, 0.9, 4.1, 3.3, 2.8, 0.1, 1.2, 3.9];
        let b = [1.1, 2.0, 2.9, 0.5, 3.8, 3.1, 2.2, 0.7, 1.9, 4.4];
        assert!((pearson(&a, &b).unwrap() - pearson_oracle(&a, &b)).abs() < 1e-12);

        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(
            fractional_ranks(&[1.0, 2.0, 2.0, 3.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(fractional_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(fractional_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn spearman_examples() {
        let x: Vec<f64> = (0..12).map(|i| f64::from(i) * 0.3 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        assert_eq!(spearman(&x, &y).unwrap(), 1.0);
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert!((spearman(&x, &rev).unwrap() + 1.0).abs() < 1e-15);

        // Ranks [1, 2.5, 2.5, 4] vs [1, 2, 3, 4].
        let want = pearson_oracle(&[1.0, 2.5, 2.5, 4.0], &[1.0, 2.0, 3.0, 4.0]);
        let got = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((got - want).abs() < 1e-12);

        assert!(matches!(
            spearman(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn fit_recovers_known_logistic() {
        let truth = [90.0, 10.0, 0.6, 0.08];
        let q: Vec<f64> = (0..40).map(|i| 0.3 + 0.6 * f64::from(i) / 39.0).collect();
        let mos: Vec<f64> = q.iter().map(|&v| logistic(&truth, v)).collect();
        let fit = logistic_fit(&q, &mos).unwrap();
        assert!(fit.residual_rmse <= 1e-4, "rmse {}", fit.residual_rmse);
    }

    #[test]
    fn fit_is_monotone_and_handles_decreasing_data() {
        let q: Vec<f64> = (0..30).map(|i| f64::from(i) * 10.0).collect();
        let mos: Vec<f64> = q.iter().map(|v| 80.0 - 0.2 * v + (v * 0.7).sin()).collect();
        let fit = logistic_fit(&q, &mos).unwrap();
        let mapped: Vec<f64> = (0..=1000).map(|i| fit.apply(f64::from(i) * 0.29)).collect();
        assert!(mapped.windows(2).all(|w| w[1] <= w[0]));
        assert!(!fit.increasing());
        assert!(pearson(&fit.map(&q), &mos).unwrap() > 0.95);
        let c = correlate(&q, &mos).unwrap();
        assert!(c.correlation.pearson < -0.95);
        assert!(c.correlation.spearman < -0.95);
    }

    #[test]
    fn fit_does_not_worsen_linear_data() {
        let q: Vec<f64> = (0..25).map(|i| 0.5 + 0.02 * f64::from(i)).collect();
        let mos = q.clone();
        let raw = pearson(&q, &mos).unwrap();
        let fit = logistic_fit(&q, &mos).unwrap();
        let fitted = pearson(&fit.map(&q), &mos).unwrap();
        assert!(fitted >= raw - 1e-6, "fitted {fitted} raw {raw}");
    }

    #[test]
    fn fit_rejects_constant_scores() {
        let q = [0.5; 8];
        let mos = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        assert!(matches!(
            logistic_fit(&q, &mos),
            Err(Error::FitDegenerate(_))
        ));
        // correlate() falls through to the identity mapping, which is itself undefined here.
        assert!(matches!(
            correlate(&q, &mos),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn significance_examples() {
        assert!(
            !significant_difference(0.6, 50, 0.6, 50, 0.05)
                .unwrap()
                .significant
        );

        let t = significant_difference(0.95, 100, 0.70, 100, 0.05).unwrap();
        let z = (0.95f64.atanh() - 0.70f64.atanh()) / (2.0f64 / 97.0).sqrt();
        assert!((t.statistic - z).abs() < 1e-12);
        assert!((t.statistic - 6.7).abs() < 0.05);
        assert!((t.critical - 1.959963984540054).abs() < 1e-9);
        assert!(t.significant);

        let t = significant_difference(0.80, 30, 0.78, 30, 0.05).unwrap();
        let z = (0.80f64.atanh() - 0.78f64.atanh()) / (2.0f64 / 27.0).sqrt();
        assert!((t.statistic - z).abs() < 1e-12);
        assert!(!t.significant);

        let t = significant_difference(1.0, 10, -1.0, 10, 0.05).unwrap();
        assert!(t.clamped && t.statistic.is_finite());
        assert!(matches!(
            significant_difference(0.5, 3, 0.4, 10, 0.05),
            Err(Error::InvalidSampleSize(3))
        ));
    }

    #[test]
    fn codeword_examples() {
        assert_eq!(
            encode_codeword(&[false; 9]).unwrap().to_string(),
            "000000000"
        );
        assert_eq!(
            encode_codeword(&[true; 9]).unwrap().to_string(),
            "111111111"
        );
        let mut flags = [false; 9];
        flags[SignificanceCodeword::slot(0, 1)] = true;
        assert_eq!(encode_codeword(&flags).unwrap().to_string(), "010000000");
        assert!(matches!(
            encode_codeword(&[true; 8]),
            Err(Error::InvalidCodeword(_))
        ));
        assert!("01000000x".parse::<SignificanceCodeword>().is_err());
        assert_eq!(
            "010000001"
                .parse::<SignificanceCodeword>()
                .unwrap()
                .to_string(),
            "010000001"
        );
    }

    #[test]
    fn codeword_totals_examples() {
        let a: SignificanceCodeword = "100000000".parse().unwrap();
        let b: SignificanceCodeword = "100000001".parse().unwrap();
        let t = codeword_totals(&[a, b]).unwrap();
        assert_eq!(t.columns, [2, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(t.databases, [2, 0, 1]);
        let t = codeword_totals(&[SignificanceCodeword::default(); 4]).unwrap();
        assert_eq!(t, CodewordTotals::default());
        assert!(codeword_totals(&[]).is_err());
    }
}
