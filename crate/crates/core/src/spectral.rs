//! Spectral-residual saliency and the density map derived from it.
//!
//! The chain is: luminance -> 2D DFT -> log-amplitude / phase split ->
//! residual against a local box average -> inverse transform of the residual
//! spectrum -> squared modulus, Gaussian-smoothed (the saliency reading) ->
//! exponential recentering into a strictly positive density map that the
//! seeding and clustering stages consume.
//!
//! The DFT handles arbitrary field sizes exactly: power-of-two lengths run a
//! radix-2 transform, everything else goes through Bluestein's chirp
//! convolution (which itself only needs power-of-two transforms). The forward
//! transform is unnormalized; the inverse carries the `1/(W*H)` factor.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::raster::{luminance, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Row-major `width x height` grid of complex values.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
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
        Ok(ComplexField {
            width,
            height,
            data,
        })
    }

    pub fn from_real(field: &ScalarField) -> Self {
        ComplexField {
            width: field.width(),
            height: field.height(),
            data: field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
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
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    /// Squared modulus per pixel.
    pub fn norm_sqr(&self) -> ScalarField {
        ScalarField::new(
            self.width,
            self.height,
            self.data.iter().map(|c| c.norm_sqr()).collect(),
        )
        .expect("dimensions preserved")
    }
}

/// 2D discrete Fourier transform by row-column decomposition. Forward is
/// unnormalized; inverse includes `1/(W*H)` so that `inverse(forward(x)) = x`
/// up to rounding.
pub fn dft2(field: &ComplexField, direction: Direction) -> ComplexField {
    let (w, h) = (field.width, field.height);
    let row_fft = Fft::new(w);
    let col_fft = Fft::new(h);
    let mut data = field.data.clone();
    for row in data.chunks_exact_mut(w) {
        row_fft.apply(row, direction);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = data[y * w + x];
        }
        col_fft.apply(&mut col, direction);
        for y in 0..h {
            data[y * w + x] = col[y];
        }
    }
    ComplexField {
        width: w,
        height: h,
        data,
    }
}

/// Forward/inverse transform of a real-valued field.
pub fn dft2_real(field: &ScalarField, direction: Direction) -> ComplexField {
    dft2(&ComplexField::from_real(field), direction)
}

/// 1D FFT plan for a fixed length.
struct Fft {
    n: usize,
    /// `exp(-2 pi i j / n)` for `j < n/2` (radix-2 stages index with a stride).
    twiddles: Vec<Complex64>,
    /// Chirp machinery for non-power-of-two lengths.
    bluestein: Option<Bluestein>,
}

struct Bluestein {
    /// Power-of-two convolution length, `>= 2n - 1`.
    m: usize,
    /// `exp(-i pi (j^2 mod 2n) / n)`; the `mod 2n` reduction keeps the angle
    /// argument small and the table exact for large indices.
    chirp: Vec<Complex64>,
    /// Forward size-`m` transform of the wrapped conjugate-chirp kernel.
    kernel_fft: Vec<Complex64>,
    sub: Box<Fft>,
}

impl Fft {
    fn new(n: usize) -> Fft {
        assert!(n >= 1);
        if n.is_power_of_two() {
            let twiddles = (0..n / 2)
                .map(|j| {
                    let angle = -2.0 * PI * j as f64 / n as f64;
                    Complex64::new(angle.cos(), angle.sin())
                })
                .collect();
            return Fft {
                n,
                twiddles,
                bluestein: None,
            };
        }
        let m = (2 * n - 1).next_power_of_two();
        let chirp: Vec<Complex64> = (0..n)
            .map(|j| {
                let sq = (j as u64 * j as u64) % (2 * n as u64);
                let angle = -PI * sq as f64 / n as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        let sub = Box::new(Fft::new(m));
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        for (t, c) in chirp.iter().enumerate() {
            kernel[t] = c.conj();
            if t > 0 {
                kernel[m - t] = c.conj();
            }
        }
        sub.forward_pow2(&mut kernel);
        Fft {
            n,
            twiddles: Vec::new(),
            bluestein: Some(Bluestein {
                m,
                chirp,
                kernel_fft: kernel,
                sub,
            }),
        }
    }

    fn apply(&self, x: &mut [Complex64], direction: Direction) {
        match direction {
            Direction::Forward => self.forward(x),
            Direction::Inverse => {
                // conjugate trick: IDFT(x) = conj(DFT(conj(x))) / n
                for v in x.iter_mut() {
                    *v = v.conj();
                }
                self.forward(x);
                let scale = 1.0 / self.n as f64;
                for v in x.iter_mut() {
                    *v = v.conj() * scale;
                }
            }
        }
    }

    fn forward(&self, x: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        match &self.bluestein {
            None => self.forward_pow2(x),
            Some(bs) => {
                // x_k chirped, convolved with the conjugate chirp, chirped again
                let mut a = vec![Complex64::new(0.0, 0.0); bs.m];
                for (j, v) in x.iter().enumerate() {
                    a[j] = v * bs.chirp[j];
                }
                bs.sub.forward_pow2(&mut a);
                for (av, kv) in a.iter_mut().zip(&bs.kernel_fft) {
                    *av *= kv;
                }
                // inverse of the sub-transform, in place
                for v in a.iter_mut() {
                    *v = v.conj();
                }
                bs.sub.forward_pow2(&mut a);
                let scale = 1.0 / bs.m as f64;
                for (k, out) in x.iter_mut().enumerate() {
                    *out = a[k].conj() * scale * bs.chirp[k];
                }
            }
        }
    }

    /// Iterative radix-2 decimation-in-time transform.
    fn forward_pow2(&self, x: &mut [Complex64]) {
        let n = x.len();
        debug_assert!(n.is_power_of_two());
        if n == 1 {
            return;
        }
        // bit-reversal permutation
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                x.swap(i, j);
            }
        }
        let mut len = 2usize;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for off in 0..half {
                    let w = self.twiddles[off * stride];
                    let a = x[start + off];
                    let b = x[start + off + half] * w;
                    x[start + off] = a + b;
                    x[start + off + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// Log-amplitude / phase split of a luminance spectrum together with the
/// locally averaged amplitude and its residual.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub log_amplitude: ScalarField,
    pub phase: ScalarField,
    pub local_average: ScalarField,
    pub residual: ScalarField,
}

/// Decompose a luminance field: forward DFT, `ln(|F| + eps)` amplitude
/// reading, phase angles, `box_n x box_n` clamped box average of the
/// log-amplitude, and the residual (log-amplitude minus average).
pub fn decompose(lum: &ScalarField, box_n: usize, eps: f64) -> Result<SpectralDecomposition> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param(format!("eps {eps} must be finite and > 0")));
    }
    let spectrum = dft2_real(lum, Direction::Forward);
    let mut log_amp = Vec::with_capacity(spectrum.values().len());
    let mut phase = Vec::with_capacity(spectrum.values().len());
    for c in spectrum.values() {
        log_amp.push(((c.re * c.re + c.im * c.im).sqrt() + eps).ln());
        phase.push(c.im.atan2(c.re));
    }
    let log_amplitude = ScalarField::new(lum.width(), lum.height(), log_amp)?;
    let phase = ScalarField::new(lum.width(), lum.height(), phase)?;
    let local_average = log_amplitude.box_filter(box_n)?;
    let residual = ScalarField::new(
        lum.width(),
        lum.height(),
        log_amplitude
            .values()
            .iter()
            .zip(local_average.values())
            .map(|(l, a)| l - a)
            .collect(),
    )?;
    Ok(SpectralDecomposition {
        log_amplitude,
        phase,
        local_average,
        residual,
    })
}

/// Smoothed squared reconstruction of the residual spectrum. Values are
/// always finite and non-negative.
#[derive(Debug, Clone)]
pub struct SaliencyMap {
    field: ScalarField,
}

impl SaliencyMap {
    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }
}

/// Rebuild a complex spectrum with amplitude `exp(residual)` and the original
/// phase, inverse-transform it, square the modulus per pixel, and smooth with
/// a Gaussian of standard deviation `sigma` (kernel truncated at `3 sigma`,
/// renormalized, clamp-to-edge).
pub fn saliency(dec: &SpectralDecomposition, sigma: f64) -> Result<SaliencyMap> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("sigma {sigma} must be finite and > 0")));
    }
    let (w, h) = (dec.residual.width(), dec.residual.height());
    let spectrum = ComplexField::new(
        w,
        h,
        dec.residual
            .values()
            .iter()
            .zip(dec.phase.values())
            .map(|(&r, &p)| Complex64::new(p.cos(), p.sin()) * r.exp())
            .collect(),
    )?;
    let recon = dft2(&spectrum, Direction::Inverse);
    let field = recon.norm_sqr().gaussian_blur(sigma)?;
    Ok(SaliencyMap { field })
}

/// Which way saliency maps to density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// `G = exp(SR - mean(SR))`: salient regions get *larger* search radii.
    Literal,
    /// `G = exp(mean(SR) - SR)`: salient regions get *smaller* search radii
    /// (finer superpixels on structure). The default.
    Inverted,
}

/// Exponent clamp: density values stay within `[e^-3, e^3]`.
pub const DENSITY_CLAMP: f64 = 3.0;

/// Strictly positive per-pixel density; values lie in `[e^-3, e^3]`.
#[derive(Debug, Clone)]
pub struct DensityMap {
    field: ScalarField,
}

impl DensityMap {
    pub fn new(field: ScalarField) -> Result<Self> {
        let lo = (-DENSITY_CLAMP).exp();
        let hi = DENSITY_CLAMP.exp();
        for &v in field.values() {
            if !v.is_finite() || v <= 0.0 || v < lo || v > hi {
                return Err(Error::param(format!(
                    "density value {v} outside ({lo:.6}, {hi:.6})"
                )));
            }
        }
        Ok(DensityMap { field })
    }

    /// Uniform density (the degenerate case where the dynamic method matches
    /// the fixed-radius one).
    pub fn uniform(width: usize, height: usize) -> Result<Self> {
        Ok(DensityMap {
            field: ScalarField::constant(width, height, 1.0)?,
        })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.field.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.field.height()
    }

    /// Density at a sub-pixel position, read at the nearest pixel (round half
    /// away from zero, clamped in bounds).
    #[inline]
    pub fn value_at_rounded(&self, x: f64, y: f64) -> f64 {
        let xi = (x.round().max(0.0) as usize).min(self.field.width() - 1);
        let yi = (y.round().max(0.0) as usize).min(self.field.height() - 1);
        self.field.get(xi, yi)
    }
}

/// Recenter a saliency map into a density map: `exp(+-(SR - mean(SR)))` with
/// the exponent clamped to `[-3, 3]`.
pub fn density_map(sal: &SaliencyMap, convention: SignConvention) -> DensityMap {
    let mean = sal.field.mean();
    let field = sal.field.map(|v| {
        let e = match convention {
            SignConvention::Literal => v - mean,
            SignConvention::Inverted => mean - v,
        };
        e.clamp(-DENSITY_CLAMP, DENSITY_CLAMP).exp()
    });
    DensityMap { field }
}

/// Parameters for [`compute_density`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralParams {
    /// Saliency smoothing bandwidth.
    pub sigma: f64,
    /// Side of the log-amplitude box average (odd).
    pub box_n: usize,
    /// Regularizer inside the amplitude logarithm.
    pub eps: f64,
    pub convention: SignConvention,
    /// Optional bilinear downsample factor (1, 2 or 4) for the saliency
    /// computation; the density map is upsampled back to full resolution.
    pub downsample: u8,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            sigma: 20.0,
            box_n: 3,
            eps: 1e-8,
            convention: SignConvention::Inverted,
            downsample: 1,
        }
    }
}

/// Full density pipeline for an image: luminance, optional downsample,
/// spectral decomposition, saliency, upsample back, exponential recentering.
pub fn compute_density(img: &RasterImage, params: &SpectralParams) -> Result<DensityMap> {
    if ![1, 2, 4].contains(&params.downsample) {
        return Err(Error::param(format!(
            "downsample factor {} not in {{1, 2, 4}}",
            params.downsample
        )));
    }
    let lum = luminance(img);
    let f = params.downsample as usize;
    let small = if f > 1 {
        lum.resize_bilinear(lum.width().div_ceil(f), lum.height().div_ceil(f))?
    } else {
        lum
    };
    let dec = decompose(&small, params.box_n, params.eps)?;
    let sal = saliency(&dec, params.sigma)?;
    let sal = if f > 1 {
        SaliencyMap {
            field: sal.field.resize_bilinear(img.width(), img.height())?,
        }
    } else {
        sal
    };
    Ok(density_map(&sal, params.convention))
}
