//! Desk-scale synthetic dataset: textured references degraded by additive
//! noise, Gaussian blur and blockwise DCT quantization, each at nested
//! severities, with MOS derived from severity.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{write_manifest, EvalRecord};
use crate::error::{Error, Result};

pub const FAMILIES: [&str; 3] = ["noise", "blur", "jpeg"];
pub const DATABASE_ID: &str = "SYNTH";

const NOISE_SIGMA: [f64; 5] = [3.0, 7.0, 13.0, 22.0, 35.0];
const BLUR_SIGMA: [f64; 5] = [0.42, 0.5, 0.6, 0.75, 1.0];
const JPEG_SCALE: [f64; 5] = [0.4, 1.0, 2.0, 4.0, 8.0];

/// Standard JPEG luminance quantization table, row-major.
const JPEG_LUMA: [f64; 64] = [
    16., 11., 10., 16., 24., 40., 51., 61., 12., 12., 14., 19., 26., 58., 60., 55., 14., 13., 16.,
    24., 40., 57., 69., 56., 14., 17., 22., 29., 51., 87., 80., 62., 18., 22., 37., 56., 68., 109.,
    103., 77., 24., 35., 55., 64., 81., 104., 113., 92., 49., 64., 78., 87., 103., 121., 120.,
    101., 72., 92., 95., 98., 112., 100., 103., 99.,
];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub references: usize,
    pub severities: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            references: 4,
            severities: 5,
            width: 96,
            height: 96,
            seed: 2015,
        }
    }
}

/// One generated distorted image and where it came from.
#[derive(Debug, Clone)]
pub struct SynthItem {
    pub record: EvalRecord,
    pub reference_index: usize,
    pub family: &'static str,
    /// 1 = mildest.
    pub severity: usize,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest_path: PathBuf,
    pub items: Vec<SynthItem>,
}

/// MOS on a 0..100 scale, strictly decreasing in severity.
pub fn severity_mos(severity: usize, severities: usize) -> f64 {
    100.0 * (severities + 1 - severity) as f64 / (severities + 1) as f64
}

fn reference_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<f64> {
    let mut img = vec![0.0; w * h];
    // oriented gratings at several scales
    for _ in 0..6 {
        let freq = rng.gen_range(0.04..0.35);
        let theta = rng.gen_range(0.0..PI);
        let phase = rng.gen_range(0.0..2.0 * PI);
        let amp = rng.gen_range(8.0..24.0);
        let (c, s) = (theta.cos(), theta.sin());
        for y in 0..h {
            for x in 0..w {
                let t = (x as f64 * c + y as f64 * s) * freq * 2.0 * PI + phase;
                img[y * w + x] += amp * t.sin();
            }
        }
    }
    // a few hard-edged rectangles
    for _ in 0..5 {
        let x0 = rng.gen_range(0..w);
        let y0 = rng.gen_range(0..h);
        let x1 = (x0 + rng.gen_range(8..w / 2)).min(w);
        let y1 = (y0 + rng.gen_range(8..h / 2)).min(h);
        let delta = rng.gen_range(-40.0..40.0);
        for y in y0..y1 {
            for x in x0..x1 {
                img[y * w + x] += delta;
            }
        }
    }
    // fine-grain texture
    for v in img.iter_mut() {
        *v += 6.0 * rng.sample::<f64, _>(StandardNormal);
    }
    let lo = img.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = img.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    img.iter()
        .map(|v| (20.0 + 215.0 * (v - lo) / (hi - lo)).round())
        .collect()
}

fn quantize(values: &[f64]) -> Vec<u8> {
    values
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect()
}

fn add_noise(img: &[f64], field: &[f64], sigma: f64) -> Vec<f64> {
    img.iter().zip(field).map(|(v, n)| v + sigma * n).collect()
}

fn gaussian_blur(img: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    let taps: Vec<f64> = taps.iter().map(|t| t / sum).collect();
    let reflect = |i: isize, n: usize| -> usize {
        let n = n as isize;
        let mut i = i;
        if i < 0 {
            i = -i - 1;
        }
        if i >= n {
            i = 2 * n - i - 1;
        }
        i.clamp(0, n - 1) as usize
    };
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * img[y * w + reflect(x as isize + k as isize - radius, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[reflect(y as isize + k as isize - radius, h) * w + x])
                .sum();
        }
    }
    out
}

fn dct_basis() -> [[f64; 8]; 8] {
    let mut b = [[0.0; 8]; 8];
    for (u, row) in b.iter_mut().enumerate() {
        let cu = if u == 0 {
            (1.0f64 / 8.0).sqrt()
        } else {
            (2.0f64 / 8.0).sqrt()
        };
        for (x, v) in row.iter_mut().enumerate() {
            *v = cu * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos();
        }
    }
    b
}

/// Blockwise 8x8 orthonormal DCT, uniform quantization by the luminance
/// table times `scale`, inverse DCT. Partial edge blocks are left as-is.
fn jpeg_like(img: &[f64], w: usize, h: usize, scale: f64) -> Vec<f64> {
    let basis = dct_basis();
    let mut out = img.to_vec();
    for by in (0..h / 8).map(|b| b * 8) {
        for bx in (0..w / 8).map(|b| b * 8) {
            let mut block = [[0.0; 8]; 8];
            for (y, row) in block.iter_mut().enumerate() {
                for (x, v) in row.iter_mut().enumerate() {
                    *v = img[(by + y) * w + bx + x] - 128.0;
                }
            }
            let mut coef = [[0.0; 8]; 8];
            for u in 0..8 {
                for v in 0..8 {
                    let mut acc = 0.0;
                    for y in 0..8 {
                        for x in 0..8 {
                            acc += basis[u][y] * basis[v][x] * block[y][x];
                        }
                    }
                    let q = (JPEG_LUMA[u * 8 + v] * scale).max(1.0);
                    coef[u][v] = (acc / q).round() * q;
                }
            }
            for y in 0..8 {
                for x in 0..8 {
                    let mut acc = 0.0;
                    for u in 0..8 {
                        for v in 0..8 {
                            acc += basis[u][y] * basis[v][x] * coef[u][v];
                        }
                    }
                    out[(by + y) * w + bx + x] = acc + 128.0;
                }
            }
        }
    }
    out
}

fn save_png(path: &Path, w: usize, h: usize, px: Vec<u8>) -> Result<()> {
    let img = image::GrayImage::from_raw(w as u32, h as u32, px)
        .ok_or_else(|| Error::InvalidImage("buffer size mismatch".into()))?;
    img.save(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Write reference and distorted PNGs plus `manifest.csv` under `out_dir`.
pub fn generate(out_dir: impl AsRef<Path>, cfg: &SynthConfig) -> Result<SynthDataset> {
    let out_dir = out_dir.as_ref();
    if cfg.references == 0 || cfg.severities == 0 || cfg.severities > NOISE_SIGMA.len() {
        return Err(Error::InvalidParameter(format!(
            "need 1..={} severities and at least one reference",
            NOISE_SIGMA.len()
        )));
    }
    if cfg.width < 16 || cfg.height < 16 {
        return Err(Error::InvalidParameter(
            "synthetic images must be at least 16x16".into(),
        ));
    }
    let (w, h) = (cfg.width, cfg.height);
    for sub in ["refs", "dist"] {
        fs::create_dir_all(out_dir.join(sub)).map_err(|e| Error::io(out_dir.join(sub), e))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut items = Vec::new();
    for r in 0..cfg.references {
        let reference = reference_image(&mut rng, w, h);
        let ref_u8 = quantize(&reference);
        let ref_name = format!("refs/ref{r}.png");
        save_png(&out_dir.join(&ref_name), w, h, ref_u8.clone())?;
        let ref_f: Vec<f64> = ref_u8.iter().map(|&v| f64::from(v)).collect();
        let noise_field: Vec<f64> = (0..w * h)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();

        for family in FAMILIES {
            for s in 1..=cfg.severities {
                let degraded = match family {
                    "noise" => add_noise(&ref_f, &noise_field, NOISE_SIGMA[s - 1]),
                    "blur" => gaussian_blur(&ref_f, w, h, BLUR_SIGMA[s - 1]),
                    _ => jpeg_like(&ref_f, w, h, JPEG_SCALE[s - 1]),
                };
                let name = format!("dist/ref{r}_{family}_{s}.png");
                save_png(&out_dir.join(&name), w, h, quantize(&degraded))?;
                items.push(SynthItem {
                    record: EvalRecord {
                        database_id: DATABASE_ID.into(),
                        reference_path: out_dir.join(&ref_name),
                        distorted_path: out_dir.join(&name),
                        distortion_type: family.into(),
                        mos: severity_mos(s, cfg.severities),
                        mos_is_dmos: false,
                    },
                    reference_index: r,
                    family,
                    severity: s,
                });
            }
        }
    }
    // Manifest uses paths relative to its own directory so the tree can be moved.
    let rel: Vec<EvalRecord> = items
        .iter()
        .map(|it| {
            let mut rec = it.record.clone();
            rec.reference_path = rec
                .reference_path
                .strip_prefix(out_dir)
                .unwrap()
                .to_path_buf();
            rec.distorted_path = rec
                .distorted_path
                .strip_prefix(out_dir)
                .unwrap()
                .to_path_buf();
            rec
        })
        .collect();
    let manifest_path = out_dir.join("manifest.csv");
    write_manifest(&manifest_path, &rel)?;
    Ok(SynthDataset {
        manifest_path,
        items,
    })
}
