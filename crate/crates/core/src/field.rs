//! Dense 2D scalar fields (`f64`) plus the small filter kit used by the
//! spectral pipeline: box averaging, truncated Gaussian smoothing, and
//! bilinear resampling. All filters clamp to the edge and run separably with
//! a fixed summation order, so results are deterministic.

use crate::error::{Error, Result};

/// Row-major `width x height` grid of `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("field dimensions must be non-zero"));
        }
        if data.len() != width * height {
            return Err(Error::param(format!(
                "field data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(ScalarField {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("field dimensions must be non-zero"));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(ScalarField {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // dimensions are validated non-zero
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `n x n` box average with clamp-to-edge boundary handling. `n` must be
    /// odd; `n = 1` is the identity.
    pub fn box_filter(&self, n: usize) -> Result<ScalarField> {
        if n == 0 || n % 2 == 0 {
            return Err(Error::param(format!("box filter size {n} must be odd")));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let r = (n / 2) as isize;
        // Separable passes with per-axis index clamping are exactly the 2D
        // clamped window average.
        let horiz = self.separable_pass_x(|sum, row, x| {
            for dx in -r..=r {
                *sum += row[clamp_index(x as isize + dx, self.width)];
            }
            *sum /= n as f64;
        });
        Ok(horiz.separable_pass_y(|sum, col, y| {
            for dy in -r..=r {
                *sum += col[clamp_index(y as isize + dy, self.height)];
            }
            *sum /= n as f64;
        }))
    }

    /// Gaussian smoothing with standard deviation `sigma`, kernel truncated at
    /// radius `ceil(3 sigma)` and renormalized to sum 1, clamp-to-edge
    /// boundary handling. `sigma = 0` is the identity.
    pub fn gaussian_blur(&self, sigma: f64) -> Result<ScalarField> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::param(format!("gaussian sigma {sigma} must be finite and >= 0")));
        }
        if sigma == 0.0 {
            return Ok(self.clone());
        }
        let kernel = gaussian_kernel(sigma);
        let r = (kernel.len() / 2) as isize;
        let horiz = self.separable_pass_x(|sum, row, x| {
            for (k, w) in kernel.iter().enumerate() {
                let dx = k as isize - r;
                *sum += w * row[clamp_index(x as isize + dx, self.width)];
            }
        });
        Ok(horiz.separable_pass_y(|sum, col, y| {
            for (k, w) in kernel.iter().enumerate() {
                let dy = k as isize - r;
                *sum += w * col[clamp_index(y as isize + dy, self.height)];
            }
        }))
    }

    /// Bilinear resample to `new_w x new_h` (pixel centers aligned, edges
    /// clamped). Used for the optional density downsample/upsample round trip.
    pub fn resize_bilinear(&self, new_w: usize, new_h: usize) -> Result<ScalarField> {
        if new_w == 0 || new_h == 0 {
            return Err(Error::param("resize target must be non-zero"));
        }
        let sx = self.width as f64 / new_w as f64;
        let sy = self.height as f64 / new_h as f64;
        ScalarField::from_fn(new_w, new_h, |x, y| {
            let fx = (x as f64 + 0.5) * sx - 0.5;
            let fy = (y as f64 + 0.5) * sy - 0.5;
            let x0 = fx.floor();
            let y0 = fy.floor();
            let tx = fx - x0;
            let ty = fy - y0;
            let x0i = clamp_index(x0 as isize, self.width);
            let x1i = clamp_index(x0 as isize + 1, self.width);
            let y0i = clamp_index(y0 as isize, self.height);
            let y1i = clamp_index(y0 as isize + 1, self.height);
            let top = self.get(x0i, y0i) * (1.0 - tx) + self.get(x1i, y0i) * tx;
            let bot = self.get(x0i, y1i) * (1.0 - tx) + self.get(x1i, y1i) * tx;
            top * (1.0 - ty) + bot * ty
        })
    }

    fn separable_pass_x(&self, f: impl Fn(&mut f64, &[f64], usize)) -> ScalarField {
        let mut out = vec![0.0; self.data.len()];
        for y in 0..self.height {
            let row = &self.data[y * self.width..(y + 1) * self.width];
            for x in 0..self.width {
                let mut sum = 0.0;
                f(&mut sum, row, x);
                out[y * self.width + x] = sum;
            }
        }
        ScalarField {
            width: self.width,
            height: self.height,
            data: out,
        }
    }

    fn separable_pass_y(&self, f: impl Fn(&mut f64, &[f64], usize)) -> ScalarField {
        let mut out = vec![0.0; self.data.len()];
        let mut col = vec![0.0; self.height];
        for x in 0..self.width {
            for y in 0..self.height {
                col[y] = self.data[y * self.width + x];
            }
            for y in 0..self.height {
                let mut sum = 0.0;
                f(&mut sum, &col, y);
                out[y * self.width + x] = sum;
            }
        }
        ScalarField {
            width: self.width,
            height: self.height,
            data: out,
        }
    }
}

#[inline]
pub(crate) fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// 1D Gaussian taps over `[-ceil(3 sigma), ceil(3 sigma)]`, normalized to sum 1.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= total;
    }
    taps
}
