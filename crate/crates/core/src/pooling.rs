//! Spatial pooling: reduce an attribute map to a single score.
//!
//! Percentiles use linear interpolation between closest ranks: for `n`
//! sorted values the `p`-th percentile sits at 1-based rank
//! `1 + (p / 100) * (n - 1)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attributes::{
    AttributeMap, InfoWeightConfig, Masking, Plane, Polarity, WeightSource, WindowConfig,
};
use crate::error::{Error, Result};

/// Exponents swept for Minkowski and quality/distortion-weighted pooling.
pub const EXPONENTS: [f64; 6] = [0.125, 0.25, 0.5, 2.0, 4.0, 8.0];
/// Bin counts swept for weighted percentile pooling.
pub const WPP_BINS: [usize; 3] = [1, 10, 20];
pub const PERCENTILE_P: f64 = 6.0;
pub const PERCENTILE_C1: f64 = 4000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasicStat {
    Mean,
    Std,
    Median,
    Min,
    Max,
}

/// One pooling strategy together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoolingSpec {
    Mean,
    Std,
    Median,
    Min,
    Max,
    Percentile { p: f64, c1: f64 },
    FiveNumber,
    Minkowski { p: f64 },
    QdWeighted { p: f64 },
    InfoWeighted { cfg: InfoWeightConfig },
    Wpp { n_bin: usize },
}

/// Parametric family a strategy belongs to; best-of-family selection and
/// the significance matrix work at this level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingFamily {
    Mean,
    Std,
    Median,
    Min,
    Max,
    Percentile,
    FiveNumber,
    Minkowski,
    QdWeighted,
    InfoWeighted,
    Wpp,
}

impl PoolingFamily {
    pub const ALL: [PoolingFamily; 11] = [
        PoolingFamily::Mean,
        PoolingFamily::Std,
        PoolingFamily::Median,
        PoolingFamily::Min,
        PoolingFamily::Max,
        PoolingFamily::Percentile,
        PoolingFamily::FiveNumber,
        PoolingFamily::Minkowski,
        PoolingFamily::QdWeighted,
        PoolingFamily::InfoWeighted,
        PoolingFamily::Wpp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PoolingFamily::Mean => "mean",
            PoolingFamily::Std => "std",
            PoolingFamily::Median => "median",
            PoolingFamily::Min => "min",
            PoolingFamily::Max => "max",
            PoolingFamily::Percentile => "percentile",
            PoolingFamily::FiveNumber => "five_number",
            PoolingFamily::Minkowski => "minkowski",
            PoolingFamily::QdWeighted => "qd",
            PoolingFamily::InfoWeighted => "iw",
            PoolingFamily::Wpp => "wpp",
        }
    }

    pub fn from_name(name: &str) -> Option<PoolingFamily> {
        PoolingFamily::ALL.into_iter().find(|f| f.name() == name)
    }

    /// The configurations swept for this family.
    pub fn default_specs(&self, window_side: usize, c2: f64) -> Vec<PoolingSpec> {
        match self {
            PoolingFamily::Mean => vec![PoolingSpec::Mean],
            PoolingFamily::Std => vec![PoolingSpec::Std],
            PoolingFamily::Median => vec![PoolingSpec::Median],
            PoolingFamily::Min => vec![PoolingSpec::Min],
            PoolingFamily::Max => vec![PoolingSpec::Max],
            PoolingFamily::Percentile => vec![PoolingSpec::Percentile {
                p: PERCENTILE_P,
                c1: PERCENTILE_C1,
            }],
            PoolingFamily::FiveNumber => vec![PoolingSpec::FiveNumber],
            PoolingFamily::Minkowski => EXPONENTS
                .iter()
                .map(|&p| PoolingSpec::Minkowski { p })
                .collect(),
            PoolingFamily::QdWeighted => EXPONENTS
                .iter()
                .map(|&p| PoolingSpec::QdWeighted { p })
                .collect(),
            PoolingFamily::InfoWeighted => InfoWeightConfig::six_configs(window_side, c2)
                .into_iter()
                .map(|cfg| PoolingSpec::InfoWeighted { cfg })
                .collect(),
            PoolingFamily::Wpp => WPP_BINS
                .iter()
                .map(|&n_bin| PoolingSpec::Wpp { n_bin })
                .collect(),
        }
    }
}

impl fmt::Display for PoolingFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PoolingSpec {
    /// The complete sweep: basic statistics, tuned percentile, five-number,
    /// Minkowski and Q/D-weighted over [`EXPONENTS`], six information-weighted
    /// configurations and WPP over [`WPP_BINS`].
    pub fn full_grid(window_side: usize, c2: f64) -> Vec<PoolingSpec> {
        PoolingFamily::ALL
            .iter()
            .flat_map(|f| f.default_specs(window_side, c2))
            .collect()
    }

    pub fn family(&self) -> PoolingFamily {
        match self {
            PoolingSpec::Mean => PoolingFamily::Mean,
            PoolingSpec::Std => PoolingFamily::Std,
            PoolingSpec::Median => PoolingFamily::Median,
            PoolingSpec::Min => PoolingFamily::Min,
            PoolingSpec::Max => PoolingFamily::Max,
            PoolingSpec::Percentile { .. } => PoolingFamily::Percentile,
            PoolingSpec::FiveNumber => PoolingFamily::FiveNumber,
            PoolingSpec::Minkowski { .. } => PoolingFamily::Minkowski,
            PoolingSpec::QdWeighted { .. } => PoolingFamily::QdWeighted,
            PoolingSpec::InfoWeighted { .. } => PoolingFamily::InfoWeighted,
            PoolingSpec::Wpp { .. } => PoolingFamily::Wpp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            PoolingSpec::Percentile { p, c1 } => {
                if !(p > 0.0 && p < 100.0) {
                    return bad(format!("percentile p must be in (0, 100), got {p}"));
                }
                if !(c1 > 0.0 && c1.is_finite()) {
                    return bad(format!("percentile c1 must be positive, got {c1}"));
                }
            }
            PoolingSpec::Minkowski { p } | PoolingSpec::QdWeighted { p } => {
                if !p.is_finite() || p == 0.0 {
                    return bad(format!("exponent must be finite and nonzero, got {p}"));
                }
            }
            PoolingSpec::Wpp { n_bin } => {
                if n_bin < 1 {
                    return bad("n_bin must be >= 1".into());
                }
            }
            PoolingSpec::InfoWeighted { cfg } => {
                cfg.window.validate()?;
                if !(cfg.c2 > 0.0 && cfg.c2.is_finite()) {
                    return bad(format!("c2 must be positive, got {}", cfg.c2));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Stable identifier used in report files; round-trips through `FromStr`.
    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PoolingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoolingSpec::Percentile { p, c1 } => write!(f, "percentile(p={p};c1={c1})"),
            PoolingSpec::Minkowski { p } => write!(f, "minkowski(p={p})"),
            PoolingSpec::QdWeighted { p } => write!(f, "qd(p={p})"),
            PoolingSpec::Wpp { n_bin } => write!(f, "wpp(n_bin={n_bin})"),
            PoolingSpec::InfoWeighted { cfg } => {
                let mask = match cfg.window.masking {
                    Masking::Uniform => "uniform",
                    Masking::Gaussian => "gaussian",
                };
                write!(
                    f,
                    "iw({};{};side={};c2={}",
                    cfg.source.as_str(),
                    mask,
                    cfg.window.side,
                    cfg.c2
                )?;
                if cfg.window.masking == Masking::Gaussian
                    && cfg.window.gaussian_sigma != WindowConfig::DEFAULT_SIGMA
                {
                    write!(f, ";sigma={}", cfg.window.gaussian_sigma)?;
                }
                f.write_str(")")
            }
            other => f.write_str(other.family().name()),
        }
    }
}

impl FromStr for PoolingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognized pooling spec '{s}'"));
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(i) => {
                let inner = s[i + 1..].strip_suffix(')').ok_or_else(bad)?;
                (&s[..i], inner.split(';').map(str::trim).collect::<Vec<_>>())
            }
            None => (s, Vec::new()),
        };
        let family = PoolingFamily::from_name(name).ok_or_else(bad)?;

        let mut positional = Vec::new();
        let mut keyed = Vec::new();
        for arg in args.iter().filter(|a| !a.is_empty()) {
            match arg.split_once('=') {
                Some((k, v)) => keyed.push((k.trim(), v.trim())),
                None => positional.push(*arg),
            }
        }
        let num = |key: &str| -> Result<f64> {
            keyed
                .iter()
                .find(|(k, _)| *k == key)
                .ok_or_else(bad)?
                .1
                .parse::<f64>()
                .map_err(|_| bad())
        };

        let spec = match family {
            PoolingFamily::Mean => PoolingSpec::Mean,
            PoolingFamily::Std => PoolingSpec::Std,
            PoolingFamily::Median => PoolingSpec::Median,
            PoolingFamily::Min => PoolingSpec::Min,
            PoolingFamily::Max => PoolingSpec::Max,
            PoolingFamily::FiveNumber => PoolingSpec::FiveNumber,
            PoolingFamily::Percentile => PoolingSpec::Percentile {
                p: num("p")?,
                c1: num("c1")?,
            },
            PoolingFamily::Minkowski => PoolingSpec::Minkowski { p: num("p")? },
            PoolingFamily::QdWeighted => PoolingSpec::QdWeighted { p: num("p")? },
            PoolingFamily::Wpp => {
                let n = num("n_bin")?;
                if n.fract() != 0.0 || n < 0.0 {
                    return Err(bad());
                }
                PoolingSpec::Wpp { n_bin: n as usize }
            }
            PoolingFamily::InfoWeighted => {
                let source = match positional.first().copied() {
                    Some("both") => WeightSource::Both,
                    Some("ref") => WeightSource::ReferenceOnly,
                    Some("dist") => WeightSource::DistortedOnly,
                    _ => return Err(bad()),
                };
                let masking = match positional.get(1).copied() {
                    Some("uniform") => Masking::Uniform,
                    Some("gaussian") => Masking::Gaussian,
                    _ => return Err(bad()),
                };
                let side = num("side")?;
                if side.fract() != 0.0 || side < 0.0 {
                    return Err(bad());
                }
                let sigma = num("sigma").unwrap_or(WindowConfig::DEFAULT_SIGMA);
                PoolingSpec::InfoWeighted {
                    cfg: InfoWeightConfig {
                        source,
                        window: WindowConfig {
                            side: side as usize,
                            masking,
                            gaussian_sigma: sigma,
                        },
                        c2: num("c2")?,
                    },
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A pooled scalar and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledScore {
    pub value: f64,
    pub strategy: PoolingSpec,
    pub polarity: Polarity,
    /// Set when an external weight map summed to zero and mean pooling was used.
    pub degenerate_fallback: bool,
}

/// Sorted copy of a map's values; percentile lookups are O(1) afterwards.
#[derive(Debug, Clone)]
pub struct SortedValues(Vec<f64>);

impl SortedValues {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyMap);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite value".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(SortedValues(v))
    }

    pub fn percentile(&self, p: f64) -> Result<f64> {
        if !(0.0..=100.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "percentile must be in [0, 100], got {p}"
            )));
        }
        let v = &self.0;
        let pos = (p / 100.0) * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(v.len() - 1);
        let frac = pos - lo as f64;
        if frac == 0.0 || lo == hi {
            Ok(v[lo])
        } else {
            Ok(v[lo] + frac * (v[hi] - v[lo]))
        }
    }

    pub fn min(&self) -> f64 {
        self.0[0]
    }

    pub fn max(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

/// Linear-interpolation percentile of `values`, `p` in `[0, 100]`.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    SortedValues::new(values)?.percentile(p)
}

fn score(map: &AttributeMap, strategy: PoolingSpec, value: f64) -> Result<PooledScore> {
    if !value.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{strategy} produced a non-finite score"
        )));
    }
    Ok(PooledScore {
        value,
        strategy,
        polarity: map.polarity(),
        degenerate_fallback: false,
    })
}

fn non_empty(map: &AttributeMap) -> Result<&[f64]> {
    let v = map.values();
    if v.is_empty() {
        Err(Error::EmptyMap)
    } else {
        Ok(v)
    }
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn pool_basic(map: &AttributeMap, stat: BasicStat) -> Result<PooledScore> {
    let values = non_empty(map)?;
    let (spec, value) = match stat {
        BasicStat::Mean => (PoolingSpec::Mean, mean_of(values)),
        BasicStat::Std => {
            let m = mean_of(values);
            let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
            (PoolingSpec::Std, var.sqrt())
        }
        BasicStat::Median => (
            PoolingSpec::Median,
            SortedValues::new(values)?.percentile(50.0)?,
        ),
        BasicStat::Min => (
            PoolingSpec::Min,
            values.iter().copied().fold(f64::INFINITY, f64::min),
        ),
        BasicStat::Max => (
            PoolingSpec::Max,
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
    };
    score(map, spec, value)
}

/// Rescale the worst entries by `c1`, then average.
///
/// Quality maps divide entries strictly below the `p`-th percentile;
/// distortion maps multiply entries strictly above the `(100 - p)`-th.
pub fn percentile_pool(map: &AttributeMap, p: f64, c1: f64) -> Result<PooledScore> {
    let spec = PoolingSpec::Percentile { p, c1 };
    spec.validate()?;
    let values = non_empty(map)?;
    let sorted = SortedValues::new(values)?;
    let sum: f64 = match map.polarity() {
        Polarity::Quality => {
            let threshold = sorted.percentile(p)?;
            values
                .iter()
                .map(|&v| if v < threshold { v / c1 } else { v })
                .sum()
        }
        Polarity::Distortion => {
            let threshold = sorted.percentile(100.0 - p)?;
            values
                .iter()
                .map(|&v| if v > threshold { v * c1 } else { v })
                .sum()
        }
    };
    score(map, spec, sum / values.len() as f64)
}

/// Mean of {mean, Q1, median, Q3, max}.
pub fn five_number(map: &AttributeMap) -> Result<PooledScore> {
    let values = non_empty(map)?;
    let sorted = SortedValues::new(values)?;
    let value = (mean_of(values)
        + sorted.percentile(25.0)?
        + sorted.percentile(50.0)?
        + sorted.percentile(75.0)?
        + sorted.max())
        / 5.0;
    score(map, PoolingSpec::FiveNumber, value)
}

/// Entries raised to a fractional power must be nonnegative. Quality maps
/// (SSIM may dip below zero) are clamped to `[0, 1]` first.
fn power_ready(map: &AttributeMap, p: f64) -> Result<Vec<f64>> {
    let values = non_empty(map)?;
    if p.fract() == 0.0 {
        return Ok(values.to_vec());
    }
    match map.polarity() {
        Polarity::Quality => Ok(values.iter().map(|v| v.clamp(0.0, 1.0)).collect()),
        Polarity::Distortion => {
            if values.iter().any(|v| *v < 0.0) {
                Err(Error::InvalidParameter(format!(
                    "negative distortion value with fractional exponent {p}"
                )))
            } else {
                Ok(values.to_vec())
            }
        }
    }
}

/// Mean of the `p`-th powers. No outer root is applied.
pub fn minkowski(map: &AttributeMap, p: f64) -> Result<PooledScore> {
    if !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "exponent must be finite, got {p}"
        )));
    }
    let values = power_ready(map, p)?;
    let value = values.iter().map(|v| v.powf(p)).sum::<f64>() / values.len() as f64;
    score(map, PoolingSpec::Minkowski { p }, value)
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> Result<f64> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let num: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    Ok(num / total)
}

/// Weight-normalized mean. The returned strategy is [`PoolingSpec::Mean`]
/// as a placeholder; callers that know the weight origin overwrite it.
pub fn weighted_pool(map: &AttributeMap, weights: &Plane) -> Result<PooledScore> {
    let values = non_empty(map)?;
    if weights.width() != map.width() || weights.height() != map.height() {
        return Err(Error::ShapeMismatch {
            left_w: map.width(),
            left_h: map.height(),
            right_w: weights.width(),
            right_h: weights.height(),
        });
    }
    let value = weighted_mean(values, weights.values())?;
    score(map, PoolingSpec::Mean, value)
}

/// Self-weighted pooling with weights `map^p`.
pub fn qd_weighted(map: &AttributeMap, p: f64) -> Result<PooledScore> {
    if !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "exponent must be finite, got {p}"
        )));
    }
    let values = power_ready(map, p)?;
    let weights: Vec<f64> = values.iter().map(|v| v.powf(p)).collect();
    let value = weighted_mean(&values, &weights)?;
    score(map, PoolingSpec::QdWeighted { p }, value)
}

/// Percentile targets, one per bin, each in `[1, 100]`.
///
/// Quality maps start at the 1st percentile and step up by `100 / n_bin`;
/// distortion maps start at the 100th and step down.
pub fn wpp_weights(n_bin: usize, polarity: Polarity) -> Result<Vec<f64>> {
    if n_bin < 1 {
        return Err(Error::InvalidParameter("n_bin must be >= 1".into()));
    }
    let step = 100.0 / n_bin as f64;
    Ok((0..n_bin)
        .map(|s| {
            let offset = step * s as f64;
            match polarity {
                Polarity::Quality => {
                    let t = 1.0 + offset;
                    if t < 100.0 {
                        t
                    } else {
                        1.0
                    }
                }
                Polarity::Distortion => {
                    let t = 100.0 - offset;
                    if t > 1.0 {
                        t
                    } else {
                        100.0
                    }
                }
            }
        })
        .collect())
}

/// Weighted percentile pooling.
///
/// Quality maps weight each percentile target `t` by `1 - t/100` so the
/// lowest percentiles dominate; distortion maps weight by `t/100`.
pub fn wpp(map: &AttributeMap, n_bin: usize) -> Result<PooledScore> {
    let values = non_empty(map)?;
    let targets = wpp_weights(n_bin, map.polarity())?;
    let sorted = SortedValues::new(values)?;
    let weights: Vec<f64> = targets
        .iter()
        .map(|t| match map.polarity() {
            Polarity::Quality => 1.0 - t / 100.0,
            Polarity::Distortion => t / 100.0,
        })
        .collect();
    let den: f64 = weights.iter().sum();
    if den <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    // Normalizing each weight first keeps a single-bin result bit-exact.
    let mut value = 0.0;
    for (t, w) in targets.iter().zip(&weights) {
        value += (w / den) * sorted.percentile(*t)?;
    }
    score(map, PoolingSpec::Wpp { n_bin }, value)
}

/// Apply `spec` to `map`.
///
/// Information-weighted pooling needs the weight map computed from the image
/// pair; pass it as `info_weights`. If the two maps differ in size (windowed
/// vs full-resolution), both are cropped to their common central region. A
/// weight map summing to zero falls back to mean pooling and sets
/// `degenerate_fallback`.
pub fn pool(
    map: &AttributeMap,
    spec: &PoolingSpec,
    info_weights: Option<&Plane>,
) -> Result<PooledScore> {
    spec.validate()?;
    let mut out = match *spec {
        PoolingSpec::Mean => pool_basic(map, BasicStat::Mean),
        PoolingSpec::Std => pool_basic(map, BasicStat::Std),
        PoolingSpec::Median => pool_basic(map, BasicStat::Median),
        PoolingSpec::Min => pool_basic(map, BasicStat::Min),
        PoolingSpec::Max => pool_basic(map, BasicStat::Max),
        PoolingSpec::Percentile { p, c1 } => percentile_pool(map, p, c1),
        PoolingSpec::FiveNumber => five_number(map),
        PoolingSpec::Minkowski { p } => minkowski(map, p),
        PoolingSpec::QdWeighted { p } => qd_weighted(map, p),
        PoolingSpec::Wpp { n_bin } => wpp(map, n_bin),
        PoolingSpec::InfoWeighted { .. } => {
            let weights = info_weights.ok_or_else(|| {
                Error::InvalidParameter("information-weighted pooling needs a weight map".into())
            })?;
            let w = map.width().min(weights.width());
            let h = map.height().min(weights.height());
            let cropped = map.center_crop(w, h)?;
            let weights = weights.center_crop(w, h)?;
            match weighted_pool(&cropped, &weights) {
                Err(Error::DegenerateWeights) => {
                    pool_basic(&cropped, BasicStat::Mean).map(|mut s| {
                        s.degenerate_fallback = true;
                        s
                    })
                }
                other => other,
            }
        }
    }?;
    out.strategy = *spec;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(values: &[f64]) -> AttributeMap {
        AttributeMap::from_values(values.to_vec(), Polarity::Quality).unwrap()
    }

    fn d(values: &[f64]) -> AttributeMap {
        AttributeMap::from_values(values.to_vec(), Polarity::Distortion).unwrap()
    }

    /// Sort-based rank-interpolation oracle, written independently of
    /// `SortedValues`.
    fn perc_oracle(values: &[f64], p: f64) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = 1.0 + (p / 100.0) * (v.len() as f64 - 1.0);
        let below = rank.floor();
        let k = below as usize;
        if k >= v.len() {
            return v[v.len() - 1];
        }
        v[k - 1] + (rank - below) * (v[k.min(v.len() - 1)] - v[k - 1])
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[5.0], 0.0).unwrap(), 5.0);
        assert_eq!(percentile(&[5.0], 37.0).unwrap(), 5.0);
        assert_eq!(percentile(&[5.0], 100.0).unwrap(), 5.0);
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 50.0).unwrap(), 3.0);
        assert_eq!(perc_oracle(&v, 25.0), 2.0);
        assert_eq!(percentile(&v, 25.0).unwrap(), 2.0);
        assert!(
            (percentile(&[4.0, 1.0, 3.0, 2.0], 40.0).unwrap()
                - perc_oracle(&[1.0, 2.0, 3.0, 4.0], 40.0))
            .abs()
                < 1e-15
        );
        assert!(matches!(percentile(&[], 50.0), Err(Error::EmptyMap)));
        assert!(matches!(
            percentile(&v, 101.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            percentile(&v, -0.5),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn basic_examples() {
        let c = q(&[0.3; 7]);
        assert!((pool_basic(&c, BasicStat::Mean).unwrap().value - 0.3).abs() < 1e-15);
        assert_eq!(pool_basic(&c, BasicStat::Std).unwrap().value, 0.0);
        let m = q(&[0.2, 0.8, 0.5, 0.5]);
        assert_eq!(pool_basic(&m, BasicStat::Median).unwrap().value, 0.5);
        assert_eq!(pool_basic(&m, BasicStat::Min).unwrap().value, 0.2);
        assert_eq!(pool_basic(&m, BasicStat::Max).unwrap().value, 0.8);
    }

    #[test]
    fn percentile_pool_examples() {
        let c = q(&[0.7; 9]);
        assert!((percentile_pool(&c, 6.0, 4000.0).unwrap().value - 0.7).abs() < 1e-15);

        // perc([0.1, 0.5, 0.9, 1.0], 50) = 0.7; both low entries are scaled.
        let m = q(&[0.1, 0.5, 0.9, 1.0]);
        assert!((perc_oracle(m.values(), 50.0) - 0.7).abs() < 1e-15);
        let want = (0.1 / 10.0 + 0.5 / 10.0 + 0.9 + 1.0) / 4.0;
        assert!((percentile_pool(&m, 50.0, 10.0).unwrap().value - want).abs() < 1e-15);

        let mean = pool_basic(&m, BasicStat::Mean).unwrap().value;
        assert_eq!(percentile_pool(&m, 50.0, 1.0).unwrap().value, mean);

        // Distortion: entries above perc(D, 50) = 3.5 multiplied.
        let dm = d(&[1.0, 2.0, 5.0, 9.0]);
        let want = (1.0 + 2.0 + 50.0 + 90.0) / 4.0;
        assert!((percentile_pool(&dm, 50.0, 10.0).unwrap().value - want).abs() < 1e-12);

        assert!(percentile_pool(&m, 0.0, 10.0).is_err());
        assert!(percentile_pool(&m, 100.0, 10.0).is_err());
        assert!(percentile_pool(&m, 5.0, 0.0).is_err());
    }

    #[test]
    fn five_number_examples() {
        assert!((five_number(&q(&[0.4; 5])).unwrap().value - 0.4).abs() < 1e-15);

        let ints: Vec<f64> = (1..=100).map(f64::from).collect();
        let oracle = (50.5
            + perc_oracle(&ints, 25.0)
            + perc_oracle(&ints, 50.0)
            + perc_oracle(&ints, 75.0)
            + 100.0)
            / 5.0;
        // Q1 = 25.75, median = 50.5, Q3 = 75.25
        assert!((oracle - 60.4).abs() < 1e-12);
        assert!((five_number(&d(&ints)).unwrap().value - oracle).abs() < 1e-12);

        let two = q(&[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let v = two.values();
        let oracle = (0.5 + perc_oracle(v, 25.0) + 0.5 + perc_oracle(v, 75.0) + 1.0) / 5.0;
        assert!((five_number(&two).unwrap().value - oracle).abs() < 1e-15);
    }

    #[test]
    fn minkowski_examples() {
        let m = d(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(minkowski(&m, 2.0).unwrap().value, 7.5);
        assert_eq!(
            minkowski(&m, 1.0).unwrap().value,
            pool_basic(&m, BasicStat::Mean).unwrap().value
        );
        let c = q(&[0.81; 4]);
        assert!((minkowski(&c, 0.5).unwrap().value - 0.9).abs() < 1e-15);
        // Negative SSIM entries are clamped before fractional powers.
        let neg = q(&[-0.5, 1.0]);
        assert!((minkowski(&neg, 0.5).unwrap().value - 0.5).abs() < 1e-15);
        assert!(minkowski(&d(&[0.0, 1.0]), -1.0).is_err());
    }

    #[test]
    fn weighted_examples() {
        let m = q(&[0.1, 0.4, 0.7, 0.9]);
        let uniform = Plane::new(4, 1, vec![2.0; 4]).unwrap();
        let mean = pool_basic(&m, BasicStat::Mean).unwrap().value;
        assert!((weighted_pool(&m, &uniform).unwrap().value - mean).abs() < 1e-15);
        let single = Plane::new(4, 1, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(weighted_pool(&m, &single).unwrap().value, 0.7);
        let zero = Plane::new(4, 1, vec![0.0; 4]).unwrap();
        assert!(matches!(
            weighted_pool(&m, &zero),
            Err(Error::DegenerateWeights)
        ));
        let wrong = Plane::new(2, 2, vec![1.0; 4]).unwrap();
        assert!(matches!(
            weighted_pool(&m, &wrong),
            Err(Error::ShapeMismatch { .. })
        ));
        let negative = Plane::new(4, 1, vec![1.0, -1.0, 1.0, 1.0]).unwrap();
        assert!(weighted_pool(&m, &negative).is_err());
    }

    #[test]
    fn qd_examples() {
        let m = d(&[1.0, 3.0]);
        assert_eq!(qd_weighted(&m, 1.0).unwrap().value, 2.5);
        let r = d(&[0.5, 2.0, 7.0]);
        assert_eq!(
            qd_weighted(&r, 0.0).unwrap().value,
            pool_basic(&r, BasicStat::Mean).unwrap().value
        );
        for p in EXPONENTS {
            assert!((qd_weighted(&q(&[0.6; 3]), p).unwrap().value - 0.6).abs() < 1e-15);
        }
    }

    #[test]
    fn wpp_weight_vectors() {
        assert_eq!(wpp_weights(1, Polarity::Quality).unwrap(), vec![1.0]);
        assert_eq!(wpp_weights(1, Polarity::Distortion).unwrap(), vec![100.0]);
        assert_eq!(
            wpp_weights(10, Polarity::Quality).unwrap(),
            vec![1.0, 11.0, 21.0, 31.0, 41.0, 51.0, 61.0, 71.0, 81.0, 91.0]
        );
        assert_eq!(
            wpp_weights(10, Polarity::Distortion).unwrap(),
            vec![100.0, 90.0, 80.0, 70.0, 60.0, 50.0, 40.0, 30.0, 20.0, 10.0]
        );
        assert!(wpp_weights(0, Polarity::Quality).is_err());
        // Out-of-range targets fall back to the first bin's value.
        let many = wpp_weights(200, Polarity::Quality).unwrap();
        assert_eq!(many[198], 1.0);
        assert!(many.iter().all(|t| (1.0..=100.0).contains(t)));
        let many = wpp_weights(200, Polarity::Distortion).unwrap();
        assert_eq!(many[199], 100.0);
        assert!(many.iter().all(|t| (1.0..=100.0).contains(t)));
    }

    #[test]
    fn wpp_examples() {
        for n in WPP_BINS {
            assert!((wpp(&q(&[0.42; 6]), n).unwrap().value - 0.42).abs() < 1e-15);
            assert!((wpp(&d(&[42.0; 6]), n).unwrap().value - 42.0).abs() < 1e-12);
        }
        let ints: Vec<f64> = (1..=100).map(f64::from).collect();
        let m = q(&ints);
        assert_eq!(wpp(&m, 1).unwrap().value, percentile(&ints, 1.0).unwrap());

        let (mut num, mut den) = (0.0, 0.0);
        for s in 0..10 {
            let t = 1.0 + 10.0 * s as f64;
            num += (1.0 - t / 100.0) * perc_oracle(&ints, t);
            den += 1.0 - t / 100.0;
        }
        assert!((wpp(&m, 10).unwrap().value - num / den).abs() < 1e-12);
    }

    #[test]
    fn info_weighted_falls_back_on_zero_weights() {
        let cfg = InfoWeightConfig::six_configs(3, 10.0)[0];
        let spec = PoolingSpec::InfoWeighted { cfg };
        let m = q(&[0.2, 0.4, 0.9]);
        let zero = Plane::new(3, 1, vec![0.0; 3]).unwrap();
        let s = pool(&m, &spec, Some(&zero)).unwrap();
        assert!(s.degenerate_fallback);
        assert!((s.value - 0.5).abs() < 1e-15);
        assert!(pool(&m, &spec, None).is_err());
    }

    #[test]
    fn info_weighted_crops_to_common_region() {
        let cfg = InfoWeightConfig::six_configs(3, 10.0)[0];
        let spec = PoolingSpec::InfoWeighted { cfg };
        let big = AttributeMap::new(
            4,
            3,
            (0..12).map(f64::from).collect(),
            Polarity::Distortion,
            (0.0, f64::INFINITY),
        )
        .unwrap();
        let w = Plane::new(2, 1, vec![1.0, 3.0]).unwrap();
        // Center of the 4x3 map is [5, 6].
        let s = pool(&big, &spec, Some(&w)).unwrap();
        assert_eq!(s.value, (5.0 + 18.0) / 4.0);
    }

    #[test]
    fn spec_ids_round_trip() {
        for spec in PoolingSpec::full_grid(11, 10.0) {
            let parsed: PoolingSpec = spec.id().parse().unwrap();
            assert_eq!(parsed, spec);
        }
        assert_eq!(PoolingSpec::full_grid(11, 10.0).len(), 28);
        assert!("bogus".parse::<PoolingSpec>().is_err());
        assert!("minkowski(p=0)".parse::<PoolingSpec>().is_err());
        assert!("wpp(n_bin=0)".parse::<PoolingSpec>().is_err());
        assert!("percentile(p=100;c1=2)".parse::<PoolingSpec>().is_err());
    }
}
