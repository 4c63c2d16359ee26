//! Per-pixel quality attributes computed from a reference/distorted image pair.
//!
//! Everything here works on decoded luma planes. Windowed statistics use the
//! valid region only: a map computed with an `s x s` window over a `w x h`
//! image is `(w - s + 1) x (h - s + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 2D array of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero dimension {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} values for a {width}x{height} plane",
                values.len()
            )));
        }
        Ok(Plane {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Central `width x height` sub-plane. Both margins are split evenly,
    /// which matches how valid-region windowing shrinks a map.
    pub fn center_crop(&self, width: usize, height: usize) -> Result<Plane> {
        if width > self.width || height > self.height || width == 0 || height == 0 {
            return Err(Error::ShapeMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: width,
                right_h: height,
            });
        }
        let x0 = (self.width - width) / 2;
        let y0 = (self.height - height) / 2;
        let mut values = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            let row = y * self.width;
            values.extend_from_slice(&self.values[row + x0..row + x0 + width]);
        }
        Ok(Plane {
            width,
            height,
            values,
        })
    }

    fn same_shape(&self, other: &Plane) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        Ok(())
    }
}

/// Decoded luma image with values in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage(Plane);

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if let Some(bad) = pixels
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0)
        {
            return Err(Error::InvalidImage(format!(
                "pixel value {bad} outside [0, 255]"
            )));
        }
        Ok(GrayImage(Plane::new(width, height, pixels)?))
    }

    pub fn from_u8(width: usize, height: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            pixels.iter().map(|&v| f64::from(v)).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.0.values
    }

    pub fn as_plane(&self) -> &Plane {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    /// Higher is better (e.g. SSIM).
    Quality,
    /// Higher is worse (e.g. squared error).
    Distortion,
}

/// A per-pixel quality or distortion field.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeMap {
    plane: Plane,
    polarity: Polarity,
    value_range: (f64, f64),
}

impl AttributeMap {
    pub fn new(
        width: usize,
        height: usize,
        values: Vec<f64>,
        polarity: Polarity,
        value_range: (f64, f64),
    ) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "attribute map contains non-finite values".into(),
            ));
        }
        Ok(AttributeMap {
            plane: Plane::new(width, height, values)?,
            polarity,
            value_range,
        })
    }

    /// Convenience constructor for tests and ad hoc use: a `values.len() x 1` map.
    pub fn from_values(values: Vec<f64>, polarity: Polarity) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyMap);
        }
        let range = match polarity {
            Polarity::Quality => (-1.0, 1.0),
            Polarity::Distortion => (0.0, f64::INFINITY),
        };
        Self::new(values.len(), 1, values, polarity, range)
    }

    pub fn width(&self) -> usize {
        self.plane.width
    }

    pub fn height(&self) -> usize {
        self.plane.height
    }

    pub fn values(&self) -> &[f64] {
        &self.plane.values
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.value_range
    }

    pub fn center_crop(&self, width: usize, height: usize) -> Result<AttributeMap> {
        Ok(AttributeMap {
            plane: self.plane.center_crop(width, height)?,
            polarity: self.polarity,
            value_range: self.value_range,
        })
    }

    /// Same shape and polarity, values replaced by `f(v)`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<AttributeMap> {
        AttributeMap::new(
            self.width(),
            self.height(),
            self.values().iter().map(|&v| f(v)).collect(),
            self.polarity,
            self.value_range,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Masking {
    Uniform,
    Gaussian,
}

/// Square sliding window used for local statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub side: usize,
    pub masking: Masking,
    pub gaussian_sigma: f64,
}

impl WindowConfig {
    pub const DEFAULT_SIDE: usize = 11;
    pub const DEFAULT_SIGMA: f64 = 1.5;

    pub fn new(side: usize, masking: Masking, gaussian_sigma: f64) -> Result<Self> {
        let cfg = WindowConfig {
            side,
            masking,
            gaussian_sigma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn gaussian(side: usize) -> Self {
        WindowConfig {
            side,
            masking: Masking::Gaussian,
            gaussian_sigma: Self::DEFAULT_SIGMA,
        }
    }

    pub fn uniform(side: usize) -> Self {
        WindowConfig {
            side,
            masking: Masking::Uniform,
            gaussian_sigma: Self::DEFAULT_SIGMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.side < 3 || self.side.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "window side must be odd and >= 3, got {}",
                self.side
            )));
        }
        if self.masking == Masking::Gaussian
            && !(self.gaussian_sigma > 0.0 && self.gaussian_sigma.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "gaussian sigma must be positive, got {}",
                self.gaussian_sigma
            )));
        }
        Ok(())
    }

    /// Normalized 1D taps. The 2D window is the outer product with itself.
    pub fn kernel_1d(&self) -> Vec<f64> {
        let half = (self.side / 2) as f64;
        let taps: Vec<f64> = match self.masking {
            Masking::Uniform => vec![1.0; self.side],
            Masking::Gaussian => {
                let denom = 2.0 * self.gaussian_sigma * self.gaussian_sigma;
                (0..self.side)
                    .map(|i| {
                        let d = i as f64 - half;
                        (-d * d / denom).exp()
                    })
                    .collect()
            }
        };
        let sum: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / sum).collect()
    }

    /// Normalized 2D taps, row-major `side x side`.
    pub fn kernel_2d(&self) -> Vec<f64> {
        let k = self.kernel_1d();
        let mut out = Vec::with_capacity(self.side * self.side);
        for ky in &k {
            for kx in &k {
                out.push(ky * kx);
            }
        }
        out
    }

    pub(crate) fn check_fits(&self, width: usize, height: usize) -> Result<()> {
        self.validate()?;
        if width < self.side || height < self.side {
            return Err(Error::WindowTooLarge {
                width,
                height,
                side: self.side,
            });
        }
        Ok(())
    }
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self::gaussian(Self::DEFAULT_SIDE)
    }
}

/// Which images contribute local variance to the information-content weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    Both,
    ReferenceOnly,
    DistortedOnly,
}

impl WeightSource {
    pub const ALL: [WeightSource; 3] = [
        WeightSource::Both,
        WeightSource::ReferenceOnly,
        WeightSource::DistortedOnly,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            WeightSource::Both => "both",
            WeightSource::ReferenceOnly => "ref",
            WeightSource::DistortedOnly => "dist",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoWeightConfig {
    pub source: WeightSource,
    pub window: WindowConfig,
    /// Channel-noise constant.
    pub c2: f64,
}

impl InfoWeightConfig {
    pub const DEFAULT_C2: f64 = 10.0;

    /// The three sources crossed with uniform and Gaussian masking.
    pub fn six_configs(side: usize, c2: f64) -> Vec<InfoWeightConfig> {
        let mut out = Vec::with_capacity(6);
        for source in WeightSource::ALL {
            for window in [WindowConfig::uniform(side), WindowConfig::gaussian(side)] {
                out.push(InfoWeightConfig { source, window, c2 });
            }
        }
        out
    }
}

/// Constants of the SSIM index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: WindowConfig,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: WindowConfig::default(),
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

/// Luma from 8-bit RGB with BT.601 weights.
pub fn to_grayscale(width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!(
            "zero dimension {width}x{height}"
        )));
    }
    // Integer numerator keeps gray inputs (R = G = B) exact.
    let pixels = rgb
        .iter()
        .map(|&[r, g, b]| {
            let num = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
            f64::from(num) / 1000.0
        })
        .collect();
    GrayImage::new(width, height, pixels)
}

pub fn squared_error_map(reference: &GrayImage, distorted: &GrayImage) -> Result<AttributeMap> {
    reference.as_plane().same_shape(distorted.as_plane())?;
    let values = reference
        .pixels()
        .iter()
        .zip(distorted.pixels())
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    AttributeMap::new(
        reference.width(),
        reference.height(),
        values,
        Polarity::Distortion,
        (0.0, 255.0 * 255.0),
    )
}

/// Separable valid-region filtering: `width - side + 1` by `height - side + 1`.
fn filter_valid(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let side = kernel.len();
    let out_w = width - side + 1;
    let out_h = height - side + 1;
    let mut horiz = vec![0.0; out_w * height];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..out_w {
            horiz[y * out_w + x] = kernel
                .iter()
                .zip(&row[x..x + side])
                .map(|(k, v)| k * v)
                .sum();
        }
    }
    let mut out = vec![0.0; out_w * out_h];
    for y in 0..out_h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (k, tap) in kernel.iter().enumerate() {
                acc += tap * horiz[(y + k) * out_w + x];
            }
            out[y * out_w + x] = acc;
        }
    }
    out
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Windowed first and second moments of a pair of planes.
///
/// Second moments are taken on globally centered data so that constant
/// regions give exactly zero variance.
struct LocalMoments {
    width: usize,
    height: usize,
    mu_x: Vec<f64>,
    mu_y: Vec<f64>,
    var_x: Vec<f64>,
    var_y: Vec<f64>,
    cov: Vec<f64>,
}

impl LocalMoments {
    fn compute(x: &Plane, y: &Plane, window: &WindowConfig) -> Result<Self> {
        x.same_shape(y)?;
        window.check_fits(x.width, x.height)?;
        let (w, h) = (x.width, x.height);
        let kernel = window.kernel_1d();
        let gx = mean(&x.values);
        let gy = mean(&y.values);
        let cx: Vec<f64> = x.values.iter().map(|v| v - gx).collect();
        let cy: Vec<f64> = y.values.iter().map(|v| v - gy).collect();
        let xx: Vec<f64> = cx.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = cy.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = cx.iter().zip(&cy).map(|(a, b)| a * b).collect();

        let m_cx = filter_valid(&cx, w, h, &kernel);
        let m_cy = filter_valid(&cy, w, h, &kernel);
        let m_xx = filter_valid(&xx, w, h, &kernel);
        let m_yy = filter_valid(&yy, w, h, &kernel);
        let m_xy = filter_valid(&xy, w, h, &kernel);

        let var_x = m_xx
            .iter()
            .zip(&m_cx)
            .map(|(s, m)| (s - m * m).max(0.0))
            .collect();
        let var_y = m_yy
            .iter()
            .zip(&m_cy)
            .map(|(s, m)| (s - m * m).max(0.0))
            .collect();
        let cov = m_xy
            .iter()
            .zip(m_cx.iter().zip(&m_cy))
            .map(|(s, (a, b))| s - a * b)
            .collect();
        Ok(LocalMoments {
            width: w - window.side + 1,
            height: h - window.side + 1,
            mu_x: m_cx.iter().map(|m| m + gx).collect(),
            mu_y: m_cy.iter().map(|m| m + gy).collect(),
            var_x,
            var_y,
            cov,
        })
    }
}

pub fn ssim_map(
    reference: &GrayImage,
    distorted: &GrayImage,
    params: &SsimParams,
) -> Result<AttributeMap> {
    let m = LocalMoments::compute(reference.as_plane(), distorted.as_plane(), &params.window)?;
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let values = (0..m.mu_x.len())
        .map(|i| {
            let (mx, my) = (m.mu_x[i], m.mu_y[i]);
            let num = (2.0 * mx * my + c1) * (2.0 * m.cov[i] + c2);
            let den = (mx * mx + my * my + c1) * (m.var_x[i] + m.var_y[i] + c2);
            (num / den).clamp(-1.0, 1.0)
        })
        .collect();
    AttributeMap::new(m.width, m.height, values, Polarity::Quality, (-1.0, 1.0))
}

/// Windowed standard deviation, valid region only.
pub fn local_stddev_map(image: &GrayImage, window: &WindowConfig) -> Result<Plane> {
    let m = LocalMoments::compute(image.as_plane(), image.as_plane(), window)?;
    Plane::new(
        m.width,
        m.height,
        m.var_x.into_iter().map(f64::sqrt).collect(),
    )
}

/// Information-content weights `ln[(1 + σ_I²/c2)(1 + σ_J²/c2)]`, with one
/// factor dropped for the single-source configurations.
pub fn information_weight_map(
    reference: &GrayImage,
    distorted: &GrayImage,
    cfg: &InfoWeightConfig,
) -> Result<Plane> {
    reference.as_plane().same_shape(distorted.as_plane())?;
    if !(cfg.c2 > 0.0 && cfg.c2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "c2 must be positive, got {}",
            cfg.c2
        )));
    }
    let m = LocalMoments::compute(reference.as_plane(), distorted.as_plane(), &cfg.window)?;
    let c2 = cfg.c2;
    let values = m
        .var_x
        .iter()
        .zip(&m.var_y)
        .map(|(vi, vj)| {
            let fi = 1.0 + vi / c2;
            let fj = 1.0 + vj / c2;
            match cfg.source {
                WeightSource::Both => (fi * fj).ln(),
                WeightSource::ReferenceOnly => fi.ln(),
                WeightSource::DistortedOnly => fj.ln(),
            }
        })
        .collect();
    Plane::new(m.width, m.height, values)
}

/// A source of attribute maps. The two built-in attributes cover the first
/// two codeword slots; anything else registered by a caller fills the third.
pub trait QualityAttribute: Send + Sync {
    /// Stable identifier used in reports and cache keys.
    fn id(&self) -> &str;

    /// Canonical parameter string; feeds the score-cache hash.
    fn params(&self) -> String;

    fn polarity(&self) -> Polarity;

    fn compute(&self, reference: &GrayImage, distorted: &GrayImage) -> Result<AttributeMap>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredError;

impl QualityAttribute for SquaredError {
    fn id(&self) -> &str {
        "squared_error"
    }

    fn params(&self) -> String {
        "squared_error".into()
    }

    fn polarity(&self) -> Polarity {
        Polarity::Distortion
    }

    fn compute(&self, reference: &GrayImage, distorted: &GrayImage) -> Result<AttributeMap> {
        squared_error_map(reference, distorted)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ssim(pub SsimParams);

impl QualityAttribute for Ssim {
    fn id(&self) -> &str {
        "ssim"
    }

    fn params(&self) -> String {
        let p = &self.0;
        format!(
            "ssim;side={};masking={:?};sigma={};k1={};k2={};L={}",
            p.window.side, p.window.masking, p.window.gaussian_sigma, p.k1, p.k2, p.dynamic_range
        )
    }

    fn polarity(&self) -> Polarity {
        Polarity::Quality
    }

    fn compute(&self, reference: &GrayImage, distorted: &GrayImage) -> Result<AttributeMap> {
        ssim_map(reference, distorted, &self.0)
    }
}
