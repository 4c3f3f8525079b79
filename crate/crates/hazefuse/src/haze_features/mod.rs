//! Haze features extracted from images.
//!
//! Two features summarize how hazy a photograph is:
//!
//! - `t_dcp`: the mean of the per-pixel transmission estimated with the dark
//!   channel prior, `t̃(x) = 1 − ω · min_c min_{y∈Ω(x)} I^c(y)/A^c`, with the
//!   atmospheric light `A` taken from the brightest dark-channel pixels.
//! - `beta_sd`: a scattering coefficient from the grayscale intensity spread,
//!   `β = 1 − ln σ`.
//!
//! All operations are pure; feature extraction for distinct images can run
//! concurrently.

mod minfilter;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use minfilter::min_filter_2d;

/// Floor applied to atmospheric light channels so ratios stay finite.
pub const ATMOSPHERIC_LIGHT_FLOOR: f64 = 1e-6;

/// Decoded color raster, interleaved RGB, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    data: Vec<f32>, // len = width * height * 3
}

impl ImageRgb {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DegenerateImage(format!(
                "empty image ({width}x{height})"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::InvalidValue(format!(
                "pixel buffer length {} != {}x{}x3",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidValue(
                "intensities must lie in [0, 1]".into(),
            ));
        }
        Ok(ImageRgb {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Decode a PNG or JPEG into the normalized float raster.
    pub fn open(path: &Path) -> Result<Self> {
        let decoded = image::open(path).map_err(|e| Error::ImageDecode {
            path: path.to_path_buf(),
            source: e,
        })?;
        let rgb = decoded.to_rgb32f();
        let (w, h) = (rgb.width() as usize, rgb.height() as usize);
        let data = rgb.into_raw().iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Self::new(w, h, data)
    }

    /// Encode as a 16-bit PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut buf = image::ImageBuffer::<image::Rgb<u16>, Vec<u16>>::new(
            self.width as u32,
            self.height as u32,
        );
        for (x, y, px) in buf.enumerate_pixels_mut() {
            let p = self.pixel(x as usize, y as usize);
            *px = image::Rgb([
                (p[0] as f64 * 65535.0).round() as u16,
                (p[1] as f64 * 65535.0).round() as u16,
                (p[2] as f64 * 65535.0).round() as u16,
            ]);
        }
        buf.save(path).map_err(|e| Error::ImageDecode {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Grayscale raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGray {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidValue("bad grayscale dimensions".into()));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidValue(
                "intensities must lie in [0, 1]".into(),
            ));
        }
        Ok(ImageGray {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn value(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

/// Per-pixel minimum over channels and a local patch.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkChannel {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DarkChannel {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn value(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

/// Ambient airlight color, strictly positive per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphericLight {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl AtmosphericLight {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self> {
        for (name, v) in [("r", r), ("g", g), ("b", b)] {
            if !v.is_finite() || v <= 0.0 || v > 1.0 {
                return Err(Error::InvalidValue(format!(
                    "atmospheric light {name}={v} outside (0, 1]"
                )));
            }
        }
        Ok(AtmosphericLight { r, g, b })
    }

    pub fn channel(&self, c: usize) -> f64 {
        match c {
            0 => self.r,
            1 => self.g,
            _ => self.b,
        }
    }
}

/// Estimated per-pixel transmission `t̃(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl TransmissionMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn value(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

/// The two per-image features used by fusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazeFeatures {
    pub t_dcp: f64,
    pub beta_sd: f64,
}

/// Patch geometry and dark-channel-prior constants.
///
/// Defaults: 15×15 patch window, `ω = 0.95`, top 0.1% brightest dark-channel
/// pixels for the atmospheric light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchConfig {
    pub patch_radius: usize,
    pub omega: f64,
    pub bright_fraction: f64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        PatchConfig {
            patch_radius: 7,
            omega: 0.95,
            bright_fraction: 0.001,
        }
    }
}

impl PatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "omega {} outside (0, 1)",
                self.omega
            )));
        }
        if !(self.bright_fraction > 0.0 && self.bright_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "bright_fraction {} outside (0, 1]",
                self.bright_fraction
            )));
        }
        Ok(())
    }

    /// Side length of the (odd) patch window.
    pub fn window(&self) -> usize {
        2 * self.patch_radius + 1
    }
}

/// ITU-R BT.601 luma.
pub fn to_grayscale(img: &ImageRgb) -> ImageGray {
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| {
            let luma = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            luma.clamp(0.0, 1.0) as f32
        })
        .collect();
    ImageGray {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Dark channel: minimum over the three channels of the patch minimum around
/// each pixel. Patches are clipped to the image bounds.
pub fn dark_channel(img: &ImageRgb, cfg: &PatchConfig) -> DarkChannel {
    let channel_min: Vec<f32> = img
        .data
        .chunks_exact(3)
        .map(|p| p[0].min(p[1]).min(p[2]))
        .collect();
    let data = min_filter_2d(&channel_min, img.width, img.height, cfg.patch_radius);
    DarkChannel {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Atmospheric light: per-channel mean of the input pixels at the
/// `ceil(bright_fraction · N)` largest dark-channel values. Ties break toward
/// lower pixel index. Channels are floored at `ATMOSPHERIC_LIGHT_FLOOR`.
pub fn estimate_atmospheric_light(
    img: &ImageRgb,
    dark: &DarkChannel,
    cfg: &PatchConfig,
) -> Result<AtmosphericLight> {
    cfg.validate()?;
    if img.width != dark.width || img.height != dark.height {
        return Err(Error::InvalidValue(format!(
            "image {}x{} and dark channel {}x{} dimensions differ",
            img.width, img.height, dark.width, dark.height
        )));
    }
    let n = img.width * img.height;
    let take = ((cfg.bright_fraction * n as f64).ceil() as usize).clamp(1, n);

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        dark.data[b as usize]
            .partial_cmp(&dark.data[a as usize])
            .expect("dark channel values are finite")
            .then(a.cmp(&b))
    });

    let (mut r, mut g, mut b) = (0.0f64, 0.0f64, 0.0f64);
    for &i in &order[..take] {
        let p = &img.data[i as usize * 3..i as usize * 3 + 3];
        r += p[0] as f64;
        g += p[1] as f64;
        b += p[2] as f64;
    }
    let k = take as f64;
    AtmosphericLight::new(
        (r / k).max(ATMOSPHERIC_LIGHT_FLOOR),
        (g / k).max(ATMOSPHERIC_LIGHT_FLOOR),
        (b / k).max(ATMOSPHERIC_LIGHT_FLOOR),
    )
}

/// Per-pixel transmission `t̃(x) = 1 − ω · min_c min_{y∈Ω(x)} I^c(y)/A^c`,
/// with ratios capped at 1 so the map stays within `[1−ω, 1]`.
pub fn transmission_map(
    img: &ImageRgb,
    light: &AtmosphericLight,
    cfg: &PatchConfig,
) -> Result<TransmissionMap> {
    cfg.validate()?;
    let ratio_min: Vec<f32> = img
        .data
        .chunks_exact(3)
        .map(|p| {
            let mut m = f64::INFINITY;
            for c in 0..3 {
                let r = (p[c] as f64 / light.channel(c)).min(1.0);
                if r < m {
                    m = r;
                }
            }
            m as f32
        })
        .collect();
    let patch_min = min_filter_2d(&ratio_min, img.width, img.height, cfg.patch_radius);
    let data = patch_min
        .iter()
        .map(|&m| (1.0 - cfg.omega * m as f64) as f32)
        .collect();
    Ok(TransmissionMap {
        width: img.width,
        height: img.height,
        data,
    })
}

/// Arithmetic mean of the transmission map (compensated summation).
pub fn mean_transmission(tmap: &TransmissionMap) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in &tmap.data {
        let y = v as f64 - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum / tmap.data.len() as f64
}

/// `β = 1 − ln σ` for a given intensity standard deviation.
pub fn beta_from_sigma(sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::DegenerateImage(format!(
            "zero-variance image: standard deviation {sigma}"
        )));
    }
    Ok(1.0 - sigma.ln())
}

/// Scattering coefficient from the population standard deviation of the
/// grayscale intensities.
pub fn scattering_coefficient(gray: &ImageGray) -> Result<f64> {
    let n = gray.data.len();
    if n < 2 {
        return Err(Error::DegenerateImage(format!(
            "need at least 2 pixels, got {n}"
        )));
    }
    let mean = gray.data.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let var = gray
        .data
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n as f64;
    beta_from_sigma(var.sqrt())
}

/// Extract both features. Which one fusion uses depends on the image's
/// altitude class; both are always computed.
pub fn extract_features(img: &ImageRgb, cfg: &PatchConfig) -> Result<HazeFeatures> {
    cfg.validate()?;
    let beta_sd = scattering_coefficient(&to_grayscale(img))?;
    let dark = dark_channel(img, cfg);
    let light = estimate_atmospheric_light(img, &dark, cfg)?;
    let t_dcp = mean_transmission(&transmission_map(img, &light, cfg)?);
    Ok(HazeFeatures { t_dcp, beta_sd })
}
