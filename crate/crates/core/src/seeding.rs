//! Initial cluster-center placement: regular-grid seeding and density-guided seeding.

use crate::error::{Error, Result};
use crate::field::gaussian_kernel;
use crate::raster::{gradient_magnitude, ColorSpace, RasterImage};
use crate::spectral::DensityMap;

/// Default smoothing bandwidth for the density strategy's hedging pass.
pub const DEFAULT_TAU: f64 = 13.0 / 2.0;

/// Ordered seed coordinates plus the nominal grid step `S = sqrt(N / k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    /// `(x, y)` positions in selection order; always exactly `k`, distinct
    /// and in-bounds.
    pub seeds: Vec<(usize, usize)>,
    pub grid_step: f64,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 4 || k > n / 4 {
        return Err(Error::param(format!(
            "superpixel count {k} outside [4, {}] for {n} pixels",
            n / 4
        )));
    }
    Ok(())
}

/// Nearest pixel index with halves rounding down, clamped in-bounds.
fn place(v: f64, limit: usize) -> usize {
    let r = (v - 0.5).ceil();
    (r.max(0.0) as usize).min(limit - 1)
}

/// First pixel in row-major order not yet claimed in `taken`.
fn first_free(taken: &[bool]) -> usize {
    taken.iter().position(|t| !t).expect("fewer seeds than pixels")
}

/// Regular-grid seeding: step `S = sqrt(N/k)`, offset `S/2`, grid sized
/// `ceil(W/S) x ceil(H/S)` trimmed to `k` from the end, then each seed moved
/// to the lowest-gradient position in its 3x3 neighborhood. A seed moves only
/// on a strict gradient improvement (ties keep the original position; among
/// equally low candidates the smallest row-major index wins), and never onto
/// a pixel another seed already claimed, which keeps the set distinct.
pub fn grid_seeds(img: &RasterImage, k: usize) -> Result<SeedSet> {
    if img.colorspace() != ColorSpace::Lab {
        return Err(Error::param("grid seeding expects a Lab image"));
    }
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    check_k(n, k)?;
    let s = (n as f64 / k as f64).sqrt();
    let cols = (w as f64 / s).ceil() as usize;
    let rows = (h as f64 / s).ceil() as usize;
    let mut grid = Vec::with_capacity(cols * rows);
    for i in 0..rows {
        let y = place(s / 2.0 + i as f64 * s, h);
        for j in 0..cols {
            let x = place(s / 2.0 + j as f64 * s, w);
            grid.push((x, y));
        }
    }
    // ceil(W/S) * ceil(H/S) >= (W/S)(H/S) = k, so the grid is never short;
    // drop the excess in reverse row-major order.
    grid.truncate(k);
    while grid.len() < k {
        // unreachable by the count argument above; kept for determinism
        let taken: Vec<bool> = {
            let mut t = vec![false; n];
            for &(x, y) in &grid {
                t[y * w + x] = true;
            }
            t
        };
        let idx = first_free(&taken);
        grid.push((idx % w, idx / w));
    }

    // gradient-descent step: the 3x3 window clamps to the interior, where
    // central differences are defined
    let interior = |x: usize, y: usize| x >= 1 && x + 1 < w && y >= 1 && y + 1 < h;
    let mut taken = vec![false; n];
    let mut seeds = Vec::with_capacity(k);
    for &(sx, sy) in &grid {
        let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(8);
        for cy in sy.saturating_sub(1)..=(sy + 1).min(h - 1) {
            for cx in sx.saturating_sub(1)..=(sx + 1).min(w - 1) {
                if (cx, cy) != (sx, sy) && interior(cx, cy) && !taken[cy * w + cx] {
                    candidates.push((gradient_magnitude(img, cx, cy)?, cy * w + cx));
                }
            }
        }
        let lowest = candidates
            .iter()
            .copied()
            .min_by(|a, b| a.partial_cmp(b).expect("finite gradients"));
        let own = sy * w + sx;
        let idx = if interior(sx, sy) && !taken[own] {
            let own_grad = gradient_magnitude(img, sx, sy)?;
            match lowest {
                Some((g, i)) if g < own_grad => i,
                _ => own,
            }
        } else {
            // border seed (its own gradient is undefined) or a collision
            // with an earlier seed: take the best interior candidate
            match lowest {
                Some((_, i)) => i,
                None if !taken[own] => own,
                None => first_free(&taken),
            }
        };
        taken[idx] = true;
        seeds.push((idx % w, idx / w));
    }
    Ok(SeedSet { seeds, grid_step: s })
}

/// Density-guided seeding. Works on a private copy `D` of the density; with
/// `r = max(D)/min(D)` fixed up front and `range = sqrt(N/k)`, each of the
/// `k` rounds (a) selects the minimum of `D` (ties: smallest row-major
/// index), (b) makes the seed and its 8 neighbors unselectable, (c)
/// multiplies every still-finite pixel strictly inside the Euclidean
/// `range`-disk by `sqrt(r)`, and (d) re-smooths the finite pixels of that
/// disk with a Gaussian of std `tau` (truncated at `3 tau`, renormalized over
/// the contributing finite pixels).
pub fn density_seeds(density: &DensityMap, k: usize, tau: f64) -> Result<SeedSet> {
    let (w, h) = (density.width(), density.height());
    let n = w * h;
    check_k(n, k)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::param(format!("tau {tau} must be finite and > 0")));
    }
    let vals = density.field().values();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let sqrt_r = (hi / lo).sqrt();
    let range_sq = n as f64 / k as f64;
    let reach = range_sq.sqrt().ceil() as usize;
    let kernel = gaussian_kernel(tau);

    let mut d = vals.to_vec();
    let mut selected = vec![false; n];
    // per-row (min value, flat index); only the rows a disk touches change
    // between rounds, so the global argmin is a scan of h row minima plus
    // O(disk) row refreshes instead of a full O(N) sweep
    let mut row_min: Vec<(f64, usize)> = (0..h).map(|y| row_argmin(&d, w, y)).collect();
    let side = 2 * reach + 1;
    let mut scratch = DiskScratch::new(side);
    let mut seeds = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best_v = f64::INFINITY;
        let mut best_i = usize::MAX;
        for &(v, i) in &row_min {
            if v < best_v {
                best_v = v;
                best_i = i;
            }
        }
        let idx = if best_i != usize::MAX {
            best_i
        } else {
            // every pixel has been made unselectable (possible when the
            // chosen seeds dominate the grid); fall back to the first
            // unselected pixel so the set still reaches k distinct seeds
            selected.iter().position(|s| !s).expect("k <= N/4 < N")
        };
        let (sx, sy) = (idx % w, idx / w);
        seeds.push((sx, sy));
        selected[idx] = true;

        for ny in sy.saturating_sub(1)..=(sy + 1).min(h - 1) {
            for nx in sx.saturating_sub(1)..=(sx + 1).min(w - 1) {
                d[ny * w + nx] = f64::INFINITY;
            }
        }

        // reach >= 2 (k <= N/4 makes the disk radius >= 2), so the bbox
        // covers the 3x3 stamp above and every write of this round
        let x0 = sx.saturating_sub(reach);
        let x1 = (sx + reach).min(w - 1);
        let y0 = sy.saturating_sub(reach);
        let y1 = (sy + reach).min(h - 1);
        penalize_and_smooth(
            &mut d,
            w,
            (sx, sy),
            range_sq,
            sqrt_r,
            (x0, x1, y0, y1),
            &kernel,
            &mut scratch,
        );
        for y in y0..=y1 {
            row_min[y] = row_argmin(&d, w, y);
        }
    }
    Ok(SeedSet {
        seeds,
        grid_step: range_sq.sqrt(),
    })
}

/// Minimum of row `y` with its flat index; ties keep the smallest index,
/// all-infinite rows report `usize::MAX` (matching a plain row-major scan).
#[inline]
fn row_argmin(d: &[f64], w: usize, y: usize) -> (f64, usize) {
    let mut best = (f64::INFINITY, usize::MAX);
    for (x, &v) in d[y * w..(y + 1) * w].iter().enumerate() {
        if v < best.0 {
            best = (v, y * w + x);
        }
    }
    best
}

/// Reusable buffers for [`penalize_and_smooth`], sized once for the largest
/// (interior) disk bounding box. Values are interleaved `(masked D, mask)`
/// pairs so both convolutions share one memory sweep.
struct DiskScratch {
    buf: Vec<f64>,
    mid: Vec<f64>,
    acc: Vec<f64>,
}

impl DiskScratch {
    fn new(side: usize) -> Self {
        DiskScratch {
            buf: vec![0.0; 2 * side * side],
            mid: vec![0.0; 2 * side * side],
            acc: vec![0.0; 2 * side],
        }
    }
}

/// One round's disk update: multiply the still-finite pixels strictly inside
/// the `range`-disk by `sqrt_r`, then replace each of them with the masked
/// Gaussian average `conv(D * mask) / conv(mask)` over the disk (the kernel
/// is renormalized per pixel by that quotient; `+inf` sentinels carry mask 0
/// and never contribute). Evaluated separably over the disk's bounding box;
/// zero padding outside the box is exact because pixels beyond it are
/// outside the disk and carry mask 0. The multiply is folded into the mask
/// setup: every finite disk pixel is overwritten by the smoothed quotient
/// anyway (its own strictly positive center tap keeps `conv(mask) > 0`), so
/// the scaled values only ever exist as convolution inputs.
#[allow(clippy::too_many_arguments)]
fn penalize_and_smooth(
    d: &mut [f64],
    w: usize,
    seed: (usize, usize),
    range_sq: f64,
    sqrt_r: f64,
    bbox: (usize, usize, usize, usize),
    kernel: &[f64],
    scratch: &mut DiskScratch,
) {
    let (x0, x1, y0, y1) = bbox;
    let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);
    let rad = kernel.len() / 2;
    let buf = &mut scratch.buf[..2 * bw * bh];
    for by in 0..bh {
        for bx in 0..bw {
            let dx = (x0 + bx) as f64 - seed.0 as f64;
            let dy = (y0 + by) as f64 - seed.1 as f64;
            let p = 2 * (by * bw + bx);
            let v = d[(y0 + by) * w + (x0 + bx)];
            if dx * dx + dy * dy < range_sq && v.is_finite() {
                buf[p] = v * sqrt_r;
                buf[p + 1] = 1.0;
            } else {
                buf[p] = 0.0;
                buf[p + 1] = 0.0;
            }
        }
    }

    // horizontal pass over (value, mask) pairs; taps outermost so each tap
    // is one contiguous shifted stream (every output still accumulates its
    // taps in ascending order)
    let mid = &mut scratch.mid[..2 * bw * bh];
    for y in 0..bh {
        let row = &buf[2 * y * bw..2 * (y + 1) * bw];
        let out = &mut mid[2 * y * bw..2 * (y + 1) * bw];
        out.fill(0.0);
        for (t, &kv) in kernel.iter().enumerate() {
            // out[x] += kv * row[x + t - rad] for the x where that stays
            // inside the line
            if t > bw - 1 + rad {
                continue;
            }
            let x_lo = rad.saturating_sub(t);
            let x_hi = (bw - 1 + rad - t).min(bw - 1);
            if x_lo > x_hi {
                continue;
            }
            let shift = 2 * (x_lo + t - rad);
            let src = &row[shift..shift + 2 * (x_hi - x_lo + 1)];
            let dst = &mut out[2 * x_lo..2 * (x_hi + 1)];
            for (o, &s) in dst.iter_mut().zip(src) {
                *o += kv * s;
            }
        }
    }

    // vertical pass, streamed row-wise into an accumulator line, written
    // straight back to the finite disk pixels
    for y in 0..bh {
        let t_lo = rad.saturating_sub(y);
        let t_hi = (bh - 1 - y + rad).min(kernel.len() - 1);
        let base = y + t_lo - rad;
        let acc = &mut scratch.acc[..2 * bw];
        acc.fill(0.0);
        for (j, &kv) in kernel[t_lo..=t_hi].iter().enumerate() {
            let src = &mid[2 * (base + j) * bw..2 * (base + j + 1) * bw];
            for (a, &s) in acc.iter_mut().zip(src) {
                *a += kv * s;
            }
        }
        for bx in 0..bw {
            let dx = (x0 + bx) as f64 - seed.0 as f64;
            let dy = (y0 + y) as f64 - seed.1 as f64;
            let gi = (y0 + y) * w + (x0 + bx);
            if dx * dx + dy * dy < range_sq && d[gi].is_finite() && acc[2 * bx + 1] > 0.0 {
                d[gi] = acc[2 * bx] / acc[2 * bx + 1];
            }
        }
    }
}
