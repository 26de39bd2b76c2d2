//! Segmentation quality measures: boundary recall/precision against a ground
//! truth (Euclidean pixel tolerance via an exact distance transform) and
//! undersegmentation error, plus the relative-improvement summary used by the
//! benchmark reports.

use crate::error::{Error, Result};
use crate::raster::{GroundTruth, LabelMap};

/// Per-run metric bundle as reported by the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationMetrics {
    pub undersegmentation_error: f64,
    pub boundary_recall: f64,
    pub boundary_precision: f64,
    pub num_superpixels: usize,
    pub runtime_seconds: f64,
}

/// `true` for every pixel with at least one 4-neighbor carrying a different
/// label.
pub fn boundary_mask(labels: &LabelMap) -> Vec<bool> {
    let (w, h) = (labels.width(), labels.height());
    let data = labels.labels();
    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let l = data[i];
            let differs = (x > 0 && data[i - 1] != l)
                || (x + 1 < w && data[i + 1] != l)
                || (y > 0 && data[i - w] != l)
                || (y + 1 < h && data[i + w] != l);
            mask[i] = differs;
        }
    }
    mask
}

/// Boundary pixel coordinates in row-major order.
pub fn boundary_pixels(labels: &LabelMap) -> Vec<(usize, usize)> {
    let w = labels.width();
    boundary_mask(labels)
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| (i % w, i / w))
        .collect()
}

/// Exact squared Euclidean distance transform: for every pixel, the squared
/// distance to the nearest `true` pixel of `mask` (infinity if the mask is
/// empty). Squared distances between grid points are integers, so the values
/// are exact. Felzenszwalb-Huttenlocher lower-envelope method, row pass then
/// column pass.
pub fn squared_distance_transform(mask: &[bool], width: usize, height: usize) -> Vec<f64> {
    assert_eq!(mask.len(), width * height);
    let mut dist: Vec<f64> = mask
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    let mut line = vec![0.0; width.max(height)];
    for y in 0..height {
        let row = &mut dist[y * width..(y + 1) * width];
        line[..width].copy_from_slice(row);
        dt_1d(&line[..width], row);
    }
    let mut col_in = vec![0.0; height];
    let mut col_out = vec![0.0; height];
    for x in 0..width {
        for y in 0..height {
            col_in[y] = dist[y * width + x];
        }
        dt_1d(&col_in, &mut col_out);
        for y in 0..height {
            dist[y * width + x] = col_out[y];
        }
    }
    dist
}

/// 1D squared distance transform of sampled function `f` into `out`:
/// `out[p] = min_q (p-q)^2 + f[q]`.
fn dt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    debug_assert_eq!(out.len(), n);
    // lower envelope of parabolas rooted at (q, f[q]); infinite parabolas are
    // skipped so empty rows stay infinite
    let mut v = vec![0usize; n]; // parabola roots
    let mut z = vec![0.0f64; n + 1]; // envelope breakpoints
    let mut k = 0usize;
    let mut started = false;
    let intersect = |q: usize, r: usize| -> f64 {
        ((f[q] + (q * q) as f64) - (f[r] + (r * r) as f64)) / ((2 * q) as f64 - (2 * r) as f64)
    };
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            started = true;
            continue;
        }
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            // parabola at v[k] is hidden right of z[k]; drop it
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    if !started {
        out.copy_from_slice(f);
        return;
    }
    let mut k = 0usize;
    for (p, o) in out.iter_mut().enumerate() {
        while z[k + 1] < p as f64 {
            k += 1;
        }
        let q = v[k];
        let d = p as f64 - q as f64;
        *o = d * d + f[q];
    }
}

/// Recall of one boundary set against another: the fraction of `reference`
/// pixels lying within Euclidean distance `tol` of some `candidate` pixel.
/// By convention an empty reference set scores 1.
pub fn recall_from_boundaries(
    reference: &[bool],
    candidate: &[bool],
    width: usize,
    height: usize,
    tol: f64,
) -> f64 {
    let total = reference.iter().filter(|&&b| b).count();
    if total == 0 {
        return 1.0;
    }
    let dt = squared_distance_transform(candidate, width, height);
    let tol2 = tol * tol;
    let hit = reference
        .iter()
        .zip(&dt)
        .filter(|(&r, &d)| r && d <= tol2)
        .count();
    hit as f64 / total as f64
}

fn check_same_shape(gt: &GroundTruth, labels: &LabelMap) -> Result<()> {
    if gt.regions.width() != labels.width() || gt.regions.height() != labels.height() {
        return Err(Error::param(format!(
            "shape mismatch: ground truth {}x{}, labels {}x{}",
            gt.regions.width(),
            gt.regions.height(),
            labels.width(),
            labels.height()
        )));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::param(format!("tolerance {tol} must be finite and >= 0")));
    }
    Ok(())
}

/// Fraction of ground-truth boundary pixels within `tol` of a segmentation
/// boundary pixel (1 if the ground truth has no boundary).
pub fn boundary_recall(gt: &GroundTruth, labels: &LabelMap, tol: f64) -> Result<f64> {
    check_same_shape(gt, labels)?;
    check_tol(tol)?;
    Ok(recall_from_boundaries(
        &boundary_mask(&gt.regions),
        &boundary_mask(labels),
        labels.width(),
        labels.height(),
        tol,
    ))
}

/// Mirror of [`boundary_recall`]: fraction of segmentation boundary pixels
/// within `tol` of a ground-truth boundary pixel (1 if the segmentation has
/// no boundary).
pub fn boundary_precision(gt: &GroundTruth, labels: &LabelMap, tol: f64) -> Result<f64> {
    check_same_shape(gt, labels)?;
    check_tol(tol)?;
    Ok(recall_from_boundaries(
        &boundary_mask(labels),
        &boundary_mask(&gt.regions),
        labels.width(),
        labels.height(),
        tol,
    ))
}

/// Undersegmentation error: for each ground-truth region, superpixels whose
/// overlap with the region reaches `fraction` of the region's area count with
/// their full size; the total spill beyond the image, normalized by the pixel
/// count.
///
/// `U = (sum_i sum_{j : |s_j ∩ g_i| >= fraction |g_i|} |s_j| - N) / N`
pub fn undersegmentation_error(gt: &GroundTruth, labels: &LabelMap, fraction: f64) -> Result<f64> {
    check_same_shape(gt, labels)?;
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::param(format!(
            "overlap fraction {fraction} must lie in [0, 1]"
        )));
    }
    let n = labels.width() * labels.height();
    let num_gt = gt.regions.num_labels();
    let num_seg = labels.num_labels();
    let mut gt_size = vec![0u64; num_gt];
    let mut seg_size = vec![0u64; num_seg];
    let mut overlap = vec![0u64; num_gt * num_seg];
    for (&g, &s) in gt.regions.labels().iter().zip(labels.labels()) {
        gt_size[g as usize] += 1;
        seg_size[s as usize] += 1;
        overlap[g as usize * num_seg + s as usize] += 1;
    }
    let mut total = 0u64;
    for gi in 0..num_gt {
        let threshold = fraction * gt_size[gi] as f64;
        for sj in 0..num_seg {
            let ov = overlap[gi * num_seg + sj];
            if ov > 0 && ov as f64 >= threshold {
                total += seg_size[sj];
            }
        }
    }
    Ok((total as f64 - n as f64) / n as f64)
}

/// Mean relative reduction of `ours` against `baseline`, as a percentage:
/// `mean_k (baseline_k - ours_k) / baseline_k * 100`. Errors on length
/// mismatch, empty input, or a zero baseline entry.
pub fn improvement_rate(ours: &[f64], baseline: &[f64]) -> Result<f64> {
    if ours.len() != baseline.len() {
        return Err(Error::param(format!(
            "series length mismatch: {} vs {}",
            ours.len(),
            baseline.len()
        )));
    }
    if ours.is_empty() {
        return Err(Error::param("improvement rate of empty series"));
    }
    let mut sum = 0.0;
    for (&o, &b) in ours.iter().zip(baseline) {
        if b == 0.0 {
            return Err(Error::param("zero baseline entry in improvement rate"));
        }
        sum += (b - o) / b;
    }
    Ok(sum / ours.len() as f64 * 100.0)
}
