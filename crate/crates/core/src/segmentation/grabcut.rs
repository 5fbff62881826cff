//! Iterated graph-cut segmentation with color mixture models.
//!
//! Each iteration assigns every pixel to its cheapest mixture component, refits both
//! mixtures, and solves a min-cut over the 8-connected pixel grid. The energy
//!
//! ```text
//! E(α, θ) = Σ_n min_k [-ln π_k - ln N(z_n; μ_k, Σ_k)]  +  Σ_(m,n) [α_m ≠ α_n] γ exp(-β‖z_m - z_n‖²) / dist(m, n)
//! ```
//!
//! cannot increase between iterations because every step minimizes it over one
//! block of variables.

use image::{Rgb, RgbImage};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::gmm::{Gmm, GmmPair, DEFAULT_COMPONENTS, DEFAULT_REGULARIZATION};
use super::mask::{upsample_mask, BinaryMask};
use super::maxflow::{Graph, Segment};
use super::rect::PixelRect;
use super::trimap::{Trimap, TrimapLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrabCutParams {
    pub components: usize,
    pub gamma: f64,
    pub iterations: usize,
    /// Stop once the relative energy decrease drops below this.
    pub tolerance: f64,
    pub regularization: f64,
    pub downsample: usize,
}

impl Default for GrabCutParams {
    fn default() -> Self {
        Self {
            components: DEFAULT_COMPONENTS,
            gamma: 50.0,
            iterations: 5,
            tolerance: 1e-4,
            regularization: DEFAULT_REGULARIZATION,
            downsample: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrabCutResult {
    /// Foreground at crop resolution.
    pub mask: BinaryMask,
    /// `None` only when every pixel was hard-labeled and no models were supplied.
    pub gmms: Option<GmmPair>,
    /// Energy after each completed iteration.
    pub energy: Vec<f64>,
}

// Right, down, down-right and down-left neighbors cover each 8-connected pair once.
const NEIGHBORS: [(isize, isize, f64); 4] = [
    (0, 1, 1.0),
    (1, 0, 1.0),
    (1, 1, std::f64::consts::SQRT_2),
    (1, -1, std::f64::consts::SQRT_2),
];

struct Pairwise {
    edges: Vec<(usize, usize, f64)>,
}

fn pixel(img: &RgbImage, idx: usize) -> Vector3<f64> {
    let p = img.as_raw();
    Vector3::new(p[3 * idx] as f64, p[3 * idx + 1] as f64, p[3 * idx + 2] as f64)
}

fn pairwise_terms(z: &[Vector3<f64>], w: usize, h: usize, gamma: f64) -> Pairwise {
    let mut pairs = Vec::with_capacity(4 * w * h);
    for r in 0..h {
        for c in 0..w {
            for (dr, dc, dist) in NEIGHBORS {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                    continue;
                }
                let (i, j) = (r * w + c, rr as usize * w + cc as usize);
                pairs.push((i, j, dist, (z[i] - z[j]).norm_squared()));
            }
        }
    }
    let mean = if pairs.is_empty() { 0.0 } else { pairs.iter().map(|p| p.3).sum::<f64>() / pairs.len() as f64 };
    let beta = if mean > 0.0 { 1.0 / (2.0 * mean) } else { 0.0 };
    Pairwise { edges: pairs.into_iter().map(|(i, j, dist, d2)| (i, j, gamma * (-beta * d2).exp() / dist)).collect() }
}

fn fit_side(
    z: &[Vector3<f64>],
    alpha: &[bool],
    side: bool,
    model: &Gmm,
    params: &GrabCutParams,
) -> Result<Gmm> {
    let (samples, assignment): (Vec<Vector3<f64>>, Vec<usize>) = z
        .iter()
        .zip(alpha)
        .filter(|(_, &a)| a == side)
        .map(|(zn, _)| (*zn, model.best_component(zn).0))
        .unzip();
    if samples.is_empty() {
        // Nothing is labeled with this side, so its model does not enter the energy.
        return Ok(model.clone());
    }
    Gmm::fit(&samples, &assignment, model.components().len(), params.regularization)
}

fn energy(z: &[Vector3<f64>], alpha: &[bool], gmms: &GmmPair, pairwise: &Pairwise) -> f64 {
    let data: f64 = z
        .iter()
        .zip(alpha)
        .map(|(zn, &a)| if a { gmms.foreground.cost(zn) } else { gmms.background.cost(zn) })
        .sum();
    let smooth: f64 = pairwise.edges.iter().filter(|(i, j, _)| alpha[*i] != alpha[*j]).map(|e| e.2).sum();
    data + smooth
}

/// Runs up to `iterations` rounds of GrabCut on `crop` seeded by `trimap`.
///
/// Hard labels are enforced with infinite terminal links and never change. If every
/// pixel is hard the labels are returned as the result without any iteration.
pub fn grabcut_iterate(
    crop: &RgbImage,
    trimap: &Trimap,
    gmms: Option<&GmmPair>,
    iterations: usize,
    params: &GrabCutParams,
) -> Result<GrabCutResult> {
    let (w, h) = (trimap.width(), trimap.height());
    if (crop.width() as usize, crop.height() as usize) != (w, h) {
        return Err(Error::DimensionMismatch { expected: (w, h), actual: (crop.width() as usize, crop.height() as usize) });
    }
    if iterations == 0 {
        return Err(Error::InvalidInput("iterations must be at least 1".into()));
    }
    let labels = trimap.labels();
    if labels.iter().all(|l| l.is_hard()) {
        return Ok(GrabCutResult { mask: trimap.foreground(), gmms: gmms.cloned(), energy: Vec::new() });
    }
    let mut alpha: Vec<bool> = labels.iter().map(|l| l.is_foreground()).collect();
    if !alpha.contains(&true) || !alpha.contains(&false) {
        return Err(Error::AllOneLabel);
    }

    let z: Vec<Vector3<f64>> = (0..w * h).map(|i| pixel(crop, i)).collect();
    let pairwise = pairwise_terms(&z, w, h, params.gamma);
    let mut model = match gmms {
        Some(m) => m.clone(),
        None => {
            let side = |s: bool| -> Vec<Vector3<f64>> {
                z.iter().zip(&alpha).filter(|(_, &a)| a == s).map(|(zn, _)| *zn).collect()
            };
            GmmPair {
                foreground: Gmm::initialize(&side(true), params.components, params.regularization)?,
                background: Gmm::initialize(&side(false), params.components, params.regularization)?,
            }
        }
    };

    let mut trace: Vec<f64> = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        model = GmmPair {
            foreground: fit_side(&z, &alpha, true, &model.foreground, params)?,
            background: fit_side(&z, &alpha, false, &model.background, params)?,
        };

        let mut graph = Graph::with_edge_capacity(w * h, pairwise.edges.len());
        for (n, zn) in z.iter().enumerate() {
            match labels[n] {
                TrimapLabel::HardForeground => graph.add_tweights(n, f64::INFINITY, 0.0),
                TrimapLabel::HardBackground => graph.add_tweights(n, 0.0, f64::INFINITY),
                // Cutting the source link labels the pixel background, and vice versa.
                _ => graph.add_tweights(n, model.background.cost(zn), model.foreground.cost(zn)),
            }
        }
        for &(i, j, wt) in &pairwise.edges {
            graph.add_edge(i, j, wt, wt);
        }
        graph.maxflow();
        for (n, a) in alpha.iter_mut().enumerate() {
            *a = graph.segment(n) == Segment::Source;
        }
        debug_assert!(labels.iter().zip(&alpha).all(|(l, &a)| !l.is_hard() || l.is_foreground() == a));

        let e = energy(&z, &alpha, &model, &pairwise);
        let converged = trace.last().is_some_and(|&prev| (prev - e) / prev.abs().max(f64::MIN_POSITIVE) < params.tolerance);
        trace.push(e);
        if converged {
            break;
        }
    }
    let mask = BinaryMask::from_vec(w, h, alpha)?;
    Ok(GrabCutResult { mask, gmms: Some(model), energy: trace })
}

/// Copies the frame region `rect` (clipped to the frame) into a new image.
pub fn crop_image(frame: &RgbImage, rect: &PixelRect) -> RgbImage {
    let r = rect.intersect(&PixelRect::frame(frame.width() as usize, frame.height() as usize));
    image::imageops::crop_imm(frame, r.x0 as u32, r.y0 as u32, r.width() as u32, r.height() as u32).to_image()
}

/// Block-mean downsampling; partial border blocks average what they cover.
pub fn downsample_image(img: &RgbImage, factor: usize) -> RgbImage {
    let f = factor.max(1) as u32;
    let (w, h) = (img.width().div_ceil(f), img.height().div_ceil(f));
    RgbImage::from_fn(w, h, |x, y| {
        let mut sum = [0u32; 3];
        let mut n = 0u32;
        for yy in y * f..((y + 1) * f).min(img.height()) {
            for xx in x * f..((x + 1) * f).min(img.width()) {
                let p = img.get_pixel(xx, yy).0;
                for k in 0..3 {
                    sum[k] += p[k] as u32;
                }
                n += 1;
            }
        }
        Rgb(sum.map(|s| ((s + n / 2) / n) as u8))
    })
}

/// Hard labels dominate a block (background first); otherwise the soft majority wins.
pub fn downsample_trimap(trimap: &Trimap, factor: usize) -> Trimap {
    let f = factor.max(1);
    let (w, h) = (trimap.width(), trimap.height());
    let (dw, dh) = (w.div_ceil(f), h.div_ceil(f));
    let mut labels = Vec::with_capacity(dw * dh);
    for r in 0..dh {
        for c in 0..dw {
            let (mut hard_bg, mut hard_fg, mut soft_fg, mut n) = (false, false, 0usize, 0usize);
            for y in r * f..((r + 1) * f).min(h) {
                for x in c * f..((c + 1) * f).min(w) {
                    match trimap.get(y, x) {
                        TrimapLabel::HardBackground => hard_bg = true,
                        TrimapLabel::HardForeground => hard_fg = true,
                        TrimapLabel::SoftForeground => soft_fg += 1,
                        TrimapLabel::SoftBackground => {}
                    }
                    n += 1;
                }
            }
            labels.push(if hard_bg {
                TrimapLabel::HardBackground
            } else if hard_fg {
                TrimapLabel::HardForeground
            } else if soft_fg * 2 > n {
                TrimapLabel::SoftForeground
            } else {
                TrimapLabel::SoftBackground
            });
        }
    }
    let crop = PixelRect::from_size(0, 0, dw as i64, dh as i64);
    Trimap::from_labels(crop, trimap.modality, labels).expect("label count matches the crop")
}

/// GrabCut on a `factor`-times downsampled crop, upsampled back by nearest neighbor.
/// Full-resolution hard labels are re-imposed on the upsampled mask.
pub fn grabcut_downsampled(
    crop: &RgbImage,
    trimap: &Trimap,
    gmms: Option<&GmmPair>,
    iterations: usize,
    params: &GrabCutParams,
    factor: usize,
) -> Result<GrabCutResult> {
    if factor <= 1 {
        return grabcut_iterate(crop, trimap, gmms, iterations, params);
    }
    let small = grabcut_iterate(&downsample_image(crop, factor), &downsample_trimap(trimap, factor), gmms, iterations, params)?;
    let mut mask = upsample_mask(&small.mask, factor, trimap.width(), trimap.height())?;
    for r in 0..trimap.height() {
        for c in 0..trimap.width() {
            let l = trimap.get(r, c);
            if l.is_hard() {
                mask.set(r, c, l.is_foreground());
            }
        }
    }
    Ok(GrabCutResult { mask, ..small })
}
