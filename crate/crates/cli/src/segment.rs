//! Single-image segmentation command.

use crate::args::SegmentArgs;
use crate::{Error, Result};
use dsr_core::clustering::{segment, ClusteringParams, Method};
use dsr_core::raster::{load_image, render_overlay, save_image, srgb_to_lab, write_label_map};
use dsr_core::seeding::{density_seeds, grid_seeds, SeedSet};
use dsr_core::spectral::{compute_density, DensityMap, SpectralParams};
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// What `segment` prints as its single JSON line.
#[derive(Debug, Serialize)]
pub struct SegmentSummary {
    pub k_final: usize,
    pub iterations: usize,
    pub runtime_s: f64,
}

pub fn run(args: &SegmentArgs) -> Result<SegmentSummary> {
    let img = load_image(&args.input)?;
    let method: Method = args.method.into();
    let spectral = SpectralParams {
        sigma: args.sigma,
        convention: args.density_sign.into(),
        downsample: args.downsample,
        ..SpectralParams::default()
    };
    let mut params = ClusteringParams::new(method, args.superpixels);
    params.compactness = args.compactness;
    params.tau = args.tau;

    let needs_density = method == Method::Dsr || args.density.is_some();
    let density = if needs_density {
        Some(compute_density(&img, &spectral)?)
    } else {
        None
    };
    let clustering_density = match method {
        Method::Dsr => density.as_ref(),
        Method::Slic => None,
    };

    let started = Instant::now();
    let out = segment(&img, &params, clustering_density)?;
    let runtime_s = started.elapsed().as_secs_f64();

    if let Some(path) = &args.out {
        write_label_map(&out.labels, path)?;
    }
    if let Some(path) = &args.overlay {
        save_image(&render_overlay(&img, &out.labels, None)?, path)?;
    }
    if let Some(path) = &args.seeds {
        // the pipeline is deterministic, so re-deriving the seeds here
        // reproduces exactly the set segment() used
        let seeds = match method {
            Method::Slic => grid_seeds(&srgb_to_lab(&img), args.superpixels)?,
            Method::Dsr => density_seeds(
                density.as_ref().expect("density computed for dsr"),
                args.superpixels,
                args.tau,
            )?,
        };
        write_seed_csv(&seeds, path)?;
    }
    if let Some(path) = &args.density {
        write_density_png(density.as_ref().expect("density computed for dump"), path)?;
    }

    Ok(SegmentSummary {
        k_final: out.labels.num_labels(),
        iterations: out.iterations,
        runtime_s,
    })
}

fn write_seed_csv(seeds: &SeedSet, path: &Path) -> Result<()> {
    let mut buf = String::from("x,y\n");
    for &(x, y) in &seeds.seeds {
        buf.push_str(&format!("{x},{y}\n"));
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Visualization dump: density scaled so its min maps to 0 and its max to
/// 255 (an all-equal map renders black). Never read back.
fn write_density_png(density: &DensityMap, path: &Path) -> Result<()> {
    let field = density.field();
    let lo = field.values().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let bytes: Vec<u8> = field
        .values()
        .iter()
        .map(|&v| ((v - lo) * scale).round() as u8)
        .collect();
    let gray = image::GrayImage::from_raw(field.width() as u32, field.height() as u32, bytes)
        .expect("buffer length matches dimensions");
    gray.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::{MethodArg, SignArg};
    use std::path::PathBuf;

    fn checker_png(dir: &Path, side: usize) -> PathBuf {
        let mut data = Vec::with_capacity(side * side * 3);
        for y in 0..side {
            for x in 0..side {
                let v = if (x / 8 + y / 8) % 2 == 0 { 40u8 } else { 200 };
                data.extend_from_slice(&[v, v, v]);
            }
        }
        let img = dsr_core::raster::RasterImage::from_srgb_bytes(side, side, &data).unwrap();
        let path = dir.join("input.png");
        save_image(&img, &path).unwrap();
        path
    }

    fn base_args(input: PathBuf, method: MethodArg) -> SegmentArgs {
        SegmentArgs {
            input,
            superpixels: 16,
            method,
            compactness: 10.0,
            sigma: 5.0,
            tau: 6.5,
            density_sign: SignArg::Inverted,
            downsample: 1,
            out: None,
            overlay: None,
            seeds: None,
            density: None,
        }
    }

    #[test]
    fn run_writes_all_requested_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let input = checker_png(dir.path(), 32);
        let mut args = base_args(input, MethodArg::Dsr);
        args.out = Some(dir.path().join("labels.png"));
        args.overlay = Some(dir.path().join("overlay.png"));
        args.seeds = Some(dir.path().join("seeds.csv"));
        args.density = Some(dir.path().join("density.png"));
        let summary = run(&args).unwrap();
        assert!(summary.k_final >= 1);
        assert!(summary.iterations >= 1);
        assert!(summary.runtime_s >= 0.0);

        let labels = dsr_core::raster::read_label_map(&args.out.unwrap()).unwrap();
        assert_eq!(labels.num_labels(), summary.k_final);
        let overlay = load_image(&args.overlay.unwrap()).unwrap();
        assert_eq!((overlay.width(), overlay.height()), (32, 32));
        let seeds = std::fs::read_to_string(args.seeds.unwrap()).unwrap();
        assert_eq!(seeds.lines().next(), Some("x,y"));
        assert_eq!(seeds.lines().count(), 17, "header plus one row per seed");
        let density = image::open(args.density.unwrap()).unwrap();
        assert_eq!((density.width(), density.height()), (32, 32));
    }

    #[test]
    fn slic_run_skips_the_density_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let input = checker_png(dir.path(), 32);
        let summary = run(&base_args(input, MethodArg::Slic)).unwrap();
        assert!(summary.k_final >= 1);
    }

    #[test]
    fn missing_input_is_an_io_error() {
        let err = run(&base_args(PathBuf::from("/nonexistent/x.png"), MethodArg::Slic))
            .unwrap_err();
        assert!(matches!(err, Error::Core(dsr_core::Error::Io { .. })));
    }

    #[test]
    fn summary_serializes_as_one_json_line() {
        let line = serde_json::to_string(&SegmentSummary {
            k_final: 398,
            iterations: 7,
            runtime_s: 0.25,
        })
        .unwrap();
        assert_eq!(line, r#"{"k_final":398,"iterations":7,"runtime_s":0.25}"#);
        assert!(!line.contains('\n'));
    }
}
