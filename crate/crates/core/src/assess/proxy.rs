//! Deterministic stand-ins for learned aesthetic and quality models.
//!
//! Statistics use foreground pixels only (alpha > 0), straight RGB in [0, 1],
//! and luminance `Y = 0.2126 R + 0.7152 G + 0.0722 B`.
//!
//! Aesthetic, per view:
//! ```text
//! rg = R - G, yb = (R + G)/2 - B
//! colorfulness = min(1, 2 * (sqrt(var_rg + var_yb) + 0.3 * sqrt(mean_rg^2 + mean_yb^2)))
//! contrast     = min(1, 2 * std_Y)
//! coverage     = foreground pixels / all pixels
//! score        = 10 * (0.3 colorfulness + 0.3 contrast + 0.4 coverage)
//! ```
//!
//! Quality, per view:
//! ```text
//! L = 4-neighbour Laplacian of Y at pixels whose 4 neighbours are foreground
//! sharpness = var_L / (var_L + 0.002)
//! exposure  = 1 - |mean_Y - 0.5| / 0.5
//! score     = 10 * (0.6 sharpness + 0.4 exposure)
//! ```
//!
//! A clip score is the mean of view scores, summed in ascending order so the
//! result does not depend on view order.

use crate::raster::ImageBuffer;

pub const AESTHETIC_WEIGHTS: [f64; 3] = [0.3, 0.3, 0.4];
pub const QUALITY_WEIGHTS: [f64; 2] = [0.6, 0.4];
pub const SHARPNESS_HALF_POINT: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AestheticComponents {
    pub colorfulness: f64,
    pub contrast: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityComponents {
    pub laplacian_variance: f64,
    pub sharpness: f64,
    pub exposure: f64,
}

fn rgb(p: &[u8]) -> [f64; 3] {
    [p[0], p[1], p[2]].map(|c| c as f64 / 255.0)
}

fn luminance(c: [f64; 3]) -> f64 {
    0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]
}

/// Mean and population variance (two-pass).
fn moments(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let values: Vec<f64> = values.collect();
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var, n)
}

fn foreground(img: &ImageBuffer) -> impl Iterator<Item = [f64; 3]> + '_ {
    img.rgba.chunks_exact(4).filter(|p| p[3] > 0).map(rgb)
}

pub fn aesthetic_components(img: &ImageBuffer) -> AestheticComponents {
    let (mean_rg, var_rg, n) = moments(foreground(img).map(|c| c[0] - c[1]));
    if n == 0 {
        return AestheticComponents {
            colorfulness: 0.0,
            contrast: 0.0,
            coverage: 0.0,
        };
    }
    let (mean_yb, var_yb, _) = moments(foreground(img).map(|c| 0.5 * (c[0] + c[1]) - c[2]));
    let (_, var_y, _) = moments(foreground(img).map(luminance));
    let c = (var_rg + var_yb).sqrt() + 0.3 * (mean_rg * mean_rg + mean_yb * mean_yb).sqrt();
    AestheticComponents {
        colorfulness: (2.0 * c).min(1.0),
        contrast: (2.0 * var_y.sqrt()).min(1.0),
        coverage: n as f64 / img.pixel_count() as f64,
    }
}

pub fn quality_components(img: &ImageBuffer) -> QualityComponents {
    let (w, h) = (img.width as usize, img.height as usize);
    let lum: Vec<Option<f64>> = img
        .rgba
        .chunks_exact(4)
        .map(|p| (p[3] > 0).then(|| luminance(rgb(p))))
        .collect();
    let (mean_y, _, n) = moments(lum.iter().flatten().copied());
    let mut lap = Vec::new();
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let at = |xx: usize, yy: usize| lum[yy * w + xx];
            if let (Some(c), Some(l), Some(r), Some(u), Some(d)) =
                (at(x, y), at(x - 1, y), at(x + 1, y), at(x, y - 1), at(x, y + 1))
            {
                lap.push(l + r + u + d - 4.0 * c);
            }
        }
    }
    let (_, var_l, _) = moments(lap.into_iter());
    QualityComponents {
        laplacian_variance: var_l,
        sharpness: var_l / (var_l + SHARPNESS_HALF_POINT),
        exposure: if n == 0 { 0.0 } else { 1.0 - (mean_y - 0.5).abs() / 0.5 },
    }
}

pub fn aesthetic_view_score(img: &ImageBuffer) -> f64 {
    let c = aesthetic_components(img);
    let [w1, w2, w3] = AESTHETIC_WEIGHTS;
    10.0 * (w1 * c.colorfulness + w2 * c.contrast + w3 * c.coverage)
}

pub fn quality_view_score(img: &ImageBuffer) -> f64 {
    let c = quality_components(img);
    let [w1, w2] = QUALITY_WEIGHTS;
    10.0 * (w1 * c.sharpness + w2 * c.exposure)
}

/// Order-independent arithmetic mean.
pub(crate) fn pooled_mean(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / sorted.len().max(1) as f64
}

pub fn proxy_aesthetic(views: &[ImageBuffer]) -> f64 {
    pooled_mean(&views.iter().map(aesthetic_view_score).collect::<Vec<_>>())
}

pub fn proxy_quality(views: &[ImageBuffer]) -> f64 {
    pooled_mean(&views.iter().map(quality_view_score).collect::<Vec<_>>())
}
