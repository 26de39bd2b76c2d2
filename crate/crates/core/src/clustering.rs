//! Localized Lloyd iteration over (x, y, l, a, b) with method-dependent search windows.

use crate::error::{Error, Result};
use crate::raster::{srgb_to_lab, ColorSpace, LabelMap, RasterImage};
use crate::seeding::{density_seeds, grid_seeds, SeedSet, DEFAULT_TAU};
use crate::spectral::DensityMap;

/// Sentinel label for pixels outside every center's search window.
pub const UNASSIGNED: u32 = u32::MAX;

/// Search-window strategy: fixed `2S` half-width, or `2S` scaled by the
/// density at the center (floored at `S`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Slic,
    Dsr,
}

/// One cluster center: sub-pixel position plus mean Lab color.
#[derive(Debug, Clone)]
pub struct ClusterCenter {
    pub x: f64,
    pub y: f64,
    pub l: f64,
    pub a: f64,
    pub b: f64,
    pub id: usize,
}

#[derive(Debug, Clone)]
pub struct ClusteringParams {
    pub method: Method,
    pub k: usize,
    /// Compactness weight `m` trading spatial against color proximity.
    pub compactness: f64,
    pub max_iters: usize,
    /// Mean center displacement (pixels) below which iteration stops.
    pub convergence_tol: f64,
    /// Smoothing bandwidth forwarded to density seeding.
    pub tau: f64,
}

impl ClusteringParams {
    pub fn new(method: Method, k: usize) -> Self {
        ClusteringParams {
            method,
            k,
            compactness: 10.0,
            max_iters: 10,
            convergence_tol: 0.25,
            tau: DEFAULT_TAU,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 4 {
            return Err(Error::param(format!("superpixel count {} < 4", self.k)));
        }
        if !(self.compactness > 0.0) || !self.compactness.is_finite() {
            return Err(Error::param("compactness must be finite and > 0"));
        }
        if self.max_iters < 1 {
            return Err(Error::param("max_iters must be >= 1"));
        }
        if !(self.convergence_tol >= 0.0) || !self.convergence_tol.is_finite() {
            return Err(Error::param("convergence tolerance must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Working state of one segmentation run.
#[derive(Debug, Clone)]
pub struct ClusteringState {
    width: usize,
    height: usize,
    pub centers: Vec<ClusterCenter>,
    /// Per-pixel label (center id) or [`UNASSIGNED`].
    labels: Vec<u32>,
    /// d(p, centers[labels[p]]) after an assignment pass; `inf` when unassigned.
    distances: Vec<f64>,
    pub residual_error: f64,
    pub iteration: usize,
}

impl ClusteringState {
    /// Centers initialized from the seed pixels of a Lab image.
    pub fn from_seeds(img: &RasterImage, seeds: &SeedSet) -> Result<Self> {
        if img.colorspace() != ColorSpace::Lab {
            return Err(Error::param("clustering expects a Lab image"));
        }
        let (w, h) = (img.width(), img.height());
        let mut centers = Vec::with_capacity(seeds.seeds.len());
        for (id, &(x, y)) in seeds.seeds.iter().enumerate() {
            if x >= w || y >= h {
                return Err(Error::param(format!(
                    "seed ({x}, {y}) out of bounds for {w}x{h}"
                )));
            }
            let [l, a, b] = img.pixel(x, y);
            centers.push(ClusterCenter {
                x: x as f64,
                y: y as f64,
                l,
                a,
                b,
                id,
            });
        }
        Ok(ClusteringState {
            width: w,
            height: h,
            centers,
            labels: vec![UNASSIGNED; w * h],
            distances: vec![f64::INFINITY; w * h],
            residual_error: f64::INFINITY,
            iteration: 0,
        })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn distance_sq(
    x: f64,
    y: f64,
    l: f64,
    a: f64,
    b: f64,
    cx: f64,
    cy: f64,
    cl: f64,
    ca: f64,
    cb: f64,
    ratio: f64,
) -> f64 {
    let dl = l - cl;
    let da = a - ca;
    let db = b - cb;
    let dx = x - cx;
    let dy = y - cy;
    dl * dl + da * da + db * db + (dx * dx + dy * dy) * ratio * ratio
}

/// Clustering distance `sqrt(dc^2 + (ds/S)^2 m^2)` between a pixel feature
/// `(x, y, l, a, b)` and a center.
pub fn distance(pixel: [f64; 5], center: &ClusterCenter, s: f64, m: f64) -> f64 {
    debug_assert!(s > 0.0 && m > 0.0);
    distance_sq(
        pixel[0], pixel[1], pixel[2], pixel[3], pixel[4], center.x, center.y, center.l, center.a,
        center.b, m / s,
    )
    .sqrt()
}

/// One assignment pass: every pixel inside a center's square window of
/// half-width `R_i` (`2S` for slic, `max(2S * G(center), S)` for dsr) is a
/// candidate; the pixel takes the candidate minimizing `(distance, id)`.
/// Pixels no window reaches keep [`UNASSIGNED`].
pub fn assign(
    state: &mut ClusteringState,
    img: &RasterImage,
    density: Option<&DensityMap>,
    s: f64,
    m: f64,
    method: Method,
) -> Result<()> {
    if img.colorspace() != ColorSpace::Lab {
        return Err(Error::param("assignment expects a Lab image"));
    }
    if img.width() != state.width || img.height() != state.height {
        return Err(Error::param("image does not match clustering state"));
    }
    if method == Method::Dsr && density.is_none() {
        return Err(Error::param("dsr assignment requires a density map"));
    }
    if !(s > 0.0) || !(m > 0.0) {
        return Err(Error::param("grid step and compactness must be > 0"));
    }
    let (w, h) = (state.width, state.height);
    let ratio = m / s;
    state.labels.fill(UNASSIGNED);
    // distances holds squared values during the pass; square roots are taken
    // once at the end
    state.distances.fill(f64::INFINITY);
    for c in &state.centers {
        let radius = match method {
            Method::Slic => 2.0 * s,
            Method::Dsr => {
                let g = density.expect("checked above").value_at_rounded(c.x, c.y);
                (2.0 * s * g).max(s)
            }
        };
        let x_lo = (c.x - radius).ceil().max(0.0) as usize;
        let x_hi = (c.x + radius).floor().min((w - 1) as f64).max(0.0) as usize;
        let y_lo = (c.y - radius).ceil().max(0.0) as usize;
        let y_hi = (c.y + radius).floor().min((h - 1) as f64).max(0.0) as usize;
        if x_lo > x_hi || y_lo > y_hi {
            continue;
        }
        let id = c.id as u32;
        for py in y_lo..=y_hi {
            for px in x_lo..=x_hi {
                let i = py * w + px;
                let [l, a, b] = img.pixel(px, py);
                let d2 = distance_sq(
                    px as f64, py as f64, l, a, b, c.x, c.y, c.l, c.a, c.b, ratio,
                );
                if d2 < state.distances[i] || (d2 == state.distances[i] && id < state.labels[i]) {
                    state.distances[i] = d2;
                    state.labels[i] = id;
                }
            }
        }
    }
    for v in state.distances.iter_mut() {
        *v = v.sqrt();
    }
    Ok(())
}

/// Move every center to the mean feature of its pixels (empty clusters stay
/// put) and return the residual error: the mean spatial displacement.
pub fn update_centers(state: &mut ClusteringState, img: &RasterImage) -> Result<f64> {
    if img.colorspace() != ColorSpace::Lab {
        return Err(Error::param("center update expects a Lab image"));
    }
    if img.width() != state.width || img.height() != state.height {
        return Err(Error::param("image does not match clustering state"));
    }
    let kc = state.centers.len();
    let mut acc = vec![[0.0f64; 5]; kc];
    let mut counts = vec![0usize; kc];
    let w = state.width;
    for (i, &lbl) in state.labels.iter().enumerate() {
        if lbl == UNASSIGNED {
            continue;
        }
        let (x, y) = (i % w, i / w);
        let [l, a, b] = img.pixel(x, y);
        let e = &mut acc[lbl as usize];
        e[0] += x as f64;
        e[1] += y as f64;
        e[2] += l;
        e[3] += a;
        e[4] += b;
        counts[lbl as usize] += 1;
    }
    let mut total = 0.0;
    for (slot, c) in state.centers.iter_mut().enumerate() {
        debug_assert_eq!(c.id, slot, "centers must stay in id order");
        if counts[slot] == 0 {
            continue;
        }
        let inv = 1.0 / counts[slot] as f64;
        let e = &acc[slot];
        let (nx, ny) = (e[0] * inv, e[1] * inv);
        let (dx, dy) = (nx - c.x, ny - c.y);
        total += (dx * dx + dy * dy).sqrt();
        c.x = nx;
        c.y = ny;
        c.l = e[2] * inv;
        c.a = e[3] * inv;
        c.b = e[4] * inv;
    }
    state.residual_error = total / kc as f64;
    Ok(state.residual_error)
}

/// Give every unassigned pixel the label of its nearest assigned pixel
/// (4-connected grid distance; ties take the smallest label).
pub fn resolve_orphans(state: &mut ClusteringState) {
    let (w, h) = (state.width, state.height);
    let n = w * h;
    let mut dist = vec![u32::MAX; n];
    let mut frontier: Vec<usize> = Vec::new();
    for (i, &lbl) in state.labels.iter().enumerate() {
        if lbl != UNASSIGNED {
            dist[i] = 0;
            frontier.push(i);
        }
    }
    if frontier.is_empty() || frontier.len() == n {
        return;
    }
    let mut t = 0u32;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &p in &frontier {
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if dist[q] == u32::MAX {
                    dist[q] = t + 1;
                    next.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        // a new-layer pixel takes the minimum label among its previous-layer
        // neighbors, which is exactly the minimum over its nearest sources
        for &q in &next {
            let (x, y) = (q % w, q / w);
            let mut best = u32::MAX;
            let mut take = |p: usize| {
                if dist[p] == t {
                    best = best.min(state.labels[p]);
                }
            };
            if x > 0 {
                take(q - 1);
            }
            if x + 1 < w {
                take(q + 1);
            }
            if y > 0 {
                take(q - w);
            }
            if y + 1 < h {
                take(q + w);
            }
            state.labels[q] = best;
        }
        frontier = next;
        t += 1;
    }
}

/// 4-connected components of a label array: per-pixel component id in
/// discovery (row-major) order, component sizes, and component labels.
fn components(lab: &[u32], w: usize, h: usize) -> (Vec<u32>, Vec<usize>, Vec<u32>) {
    let n = w * h;
    let mut comp = vec![u32::MAX; n];
    let mut sizes = Vec::new();
    let mut owners = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        let label = lab[start];
        comp[start] = id;
        stack.push(start);
        let mut size = 0usize;
        while let Some(p) = stack.pop() {
            size += 1;
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if comp[q] == u32::MAX && lab[q] == label {
                    comp[q] = id;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        sizes.push(size);
        owners.push(label);
    }
    (comp, sizes, owners)
}

/// Merge every component smaller than `min_size`, and every component that
/// is not its label's largest, into the adjacent component with the longest
/// shared boundary (ties: smallest label, then first-discovered). The result
/// has exactly one 4-connected region per surviving label, compacted to
/// `0..k'`.
pub fn enforce_connectivity(labels: &LabelMap, min_size: usize) -> LabelMap {
    let (w, h) = (labels.width(), labels.height());
    let mut lab: Vec<u32> = labels.labels().to_vec();
    loop {
        let (comp, sizes, owners) = components(&lab, w, h);
        let count = sizes.len();
        let max_label = *owners.iter().max().expect("non-empty map") as usize;
        // largest component per label; ties go to the first discovered
        let mut largest = vec![u32::MAX; max_label + 1];
        for c in 0..count {
            let l = owners[c] as usize;
            if largest[l] == u32::MAX || sizes[c] > sizes[largest[l] as usize] {
                largest[l] = c as u32;
            }
        }
        let violator = (0..count)
            .find(|&c| sizes[c] < min_size || largest[owners[c] as usize] != c as u32);
        let Some(v) = violator else { break };
        let v = v as u32;

        // boundary length = number of 4-adjacent pixel pairs shared with
        // each neighboring component
        let mut shared = vec![0usize; count];
        let mut tally = |a: usize, b: usize| {
            if comp[a] == v && comp[b] != v {
                shared[comp[b] as usize] += 1;
            } else if comp[b] == v && comp[a] != v {
                shared[comp[a] as usize] += 1;
            }
        };
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if x + 1 < w {
                    tally(i, i + 1);
                }
                if y + 1 < h {
                    tally(i, i + w);
                }
            }
        }
        let mut target: Option<usize> = None;
        for (c, &len) in shared.iter().enumerate() {
            if len == 0 {
                continue;
            }
            target = match target {
                None => Some(c),
                Some(t) => {
                    if len > shared[t] || (len == shared[t] && (owners[c], c) < (owners[t], t)) {
                        Some(c)
                    } else {
                        Some(t)
                    }
                }
            };
        }
        // a component with no neighbor spans the whole image and cannot
        // violate anything, but guard against looping forever regardless
        let Some(t) = target else { break };
        let new_label = owners[t];
        for (i, &ci) in comp.iter().enumerate() {
            if ci == v {
                lab[i] = new_label;
            }
        }
    }
    LabelMap::compact_from(w, h, lab).expect("merging keeps the map total")
}

/// Final output of a segmentation run.
#[derive(Debug, Clone)]
pub struct SegmentationOutput {
    pub labels: LabelMap,
    /// Lloyd iterations executed before convergence or the cap.
    pub iterations: usize,
}

/// Full pipeline: Lab conversion, seeding per method, Lloyd iteration until
/// the residual drops below tolerance or `max_iters`, orphan resolution, and
/// connectivity enforcement. `density` is required for dsr (and is also the
/// seeding input); slic ignores it.
pub fn segment(
    img: &RasterImage,
    params: &ClusteringParams,
    density: Option<&DensityMap>,
) -> Result<SegmentationOutput> {
    params.validate()?;
    let lab = srgb_to_lab(img);
    match params.method {
        Method::Slic => {
            let seeds = grid_seeds(&lab, params.k)?;
            run_pipeline(&lab, params, None, &seeds)
        }
        Method::Dsr => {
            let g = density.ok_or_else(|| Error::param("method dsr requires a density map"))?;
            if g.width() != img.width() || g.height() != img.height() {
                return Err(Error::param("density map does not match image dimensions"));
            }
            let seeds = density_seeds(g, params.k, params.tau)?;
            run_pipeline(&lab, params, Some(g), &seeds)
        }
    }
}

/// [`segment`] with caller-provided seeds instead of the method's own
/// seeding (the count must match `params.k`).
pub fn segment_with_seeds(
    img: &RasterImage,
    params: &ClusteringParams,
    density: Option<&DensityMap>,
    seeds: &SeedSet,
) -> Result<SegmentationOutput> {
    params.validate()?;
    if seeds.seeds.len() != params.k {
        return Err(Error::param(format!(
            "{} seeds injected but k = {}",
            seeds.seeds.len(),
            params.k
        )));
    }
    if params.method == Method::Dsr {
        let g = density.ok_or_else(|| Error::param("method dsr requires a density map"))?;
        if g.width() != img.width() || g.height() != img.height() {
            return Err(Error::param("density map does not match image dimensions"));
        }
    }
    let lab = srgb_to_lab(img);
    run_pipeline(&lab, params, density, seeds)
}

fn run_pipeline(
    lab: &RasterImage,
    params: &ClusteringParams,
    density: Option<&DensityMap>,
    seeds: &SeedSet,
) -> Result<SegmentationOutput> {
    let n = lab.num_pixels();
    let s = (n as f64 / params.k as f64).sqrt();
    let mut state = ClusteringState::from_seeds(lab, seeds)?;
    let mut iterations = 0;
    loop {
        assign(&mut state, lab, density, s, params.compactness, params.method)?;
        update_centers(&mut state, lab)?;
        iterations += 1;
        state.iteration = iterations;
        if state.residual_error < params.convergence_tol || iterations >= params.max_iters {
            break;
        }
    }
    resolve_orphans(&mut state);
    let total = LabelMap::compact_from(lab.width(), lab.height(), state.labels.clone())?;
    let min_size = n / (4 * params.k);
    let labels = enforce_connectivity(&total, min_size);
    Ok(SegmentationOutput { labels, iterations })
}
